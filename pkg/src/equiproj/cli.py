"""Command-line interface.

Exit codes: 0 pass, 1 verified failure, 2 usage or I/O error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import families, octonions, simulate, synthesis
from .projections import DEFAULT_TOL, ProjectionError, base_projection, is_strongly_equiangular, octonion_projection
from .serialize import SchemaError, dumps, matrix_from_json, matrix_to_json, projection_from_json

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class CliConfig:
    subcommand: str
    seed: int
    tolerance: float
    pretty: bool
    output: str | None = None

    def __post_init__(self):
        if not self.tolerance > 0:
            raise UsageError("--tol must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise UsageError("--seed must be a 64-bit unsigned integer")


def _default_seed() -> int:
    raw = os.environ.get("EQUIPROJ_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"EQUIPROJ_SEED must be an integer, got {raw!r}") from None


def _read_json(path: str):
    if path == "-":
        return json.load(sys.stdin)
    with open(path) as fh:
        return json.load(fh)


def _emit(cfg: CliConfig, doc) -> None:
    text = dumps(doc, cfg.pretty) + "\n"
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# subcommands -------------------------------------------------------------------------

def cmd_verify_octonions(args, cfg: CliConfig) -> int:
    checks = octonions.verify_suite(n_random=args.samples, seed=cfg.seed, atol=min(cfg.tolerance, 1e-12))
    failures = [name for name, res in checks.items() if not res["ok"]]
    _emit(cfg, {"ok": not failures, "failures": failures, "checks": checks})
    return EXIT_FAIL if failures else EXIT_OK


def cmd_check_pair(args, cfg: CliConfig) -> int:
    doc = _read_json(args.input)
    try:
        P, Q = projection_from_json(doc["P"]), projection_from_json(doc["Q"])
    except (KeyError, TypeError) as exc:
        raise SchemaError("check-pair input needs keys 'P' and 'Q'") from exc
    rep = is_strongly_equiangular(P, Q, cfg.tolerance)
    _emit(cfg, rep.to_json())
    passed = rep.is_strong if args.strong else rep.is_equiangular
    return EXIT_OK if passed else EXIT_FAIL


def _options(args, cfg: CliConfig) -> synthesis.SynthesisOptions:
    return synthesis.SynthesisOptions(
        split_threshold=args.split_threshold, slice_count=args.slice,
        tolerance=getattr(args, "residual", None) or 1e-8,
        max_factors=getattr(args, "max_factors", None) or synthesis.SynthesisOptions().max_factors,
    )


def _program(doc) -> synthesis.GateProgram:
    try:
        return synthesis.GateProgram.from_json(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed gate program: {exc}") from exc


def _sequence(doc) -> synthesis.ProjectionSequence:
    try:
        return synthesis.ProjectionSequence.from_json(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed projection sequence: {exc}") from exc


def cmd_synth(args, cfg: CliConfig) -> int:
    seq = synthesis.compile_program(_program(_read_json(args.input)), _options(args, cfg))
    _emit(cfg, seq.to_json())
    return EXIT_OK


def cmd_eval(args, cfg: CliConfig) -> int:
    seq = _sequence(_read_json(args.input))
    ev = synthesis.evaluate(seq)
    angles = [
        {"index": a.index, "first": a.first, "second": a.second, "alpha2": a.alpha2, "theta": a.theta}
        for a in synthesis.sequence_angles(seq)
    ]
    _emit(cfg, {"gate": matrix_to_json(ev.normalized), "scale": ev.scale, "log_scale": ev.log_scale,
                "angles": angles})
    return EXIT_OK


def cmd_decompose(args, cfg: CliConfig) -> int:
    target = matrix_from_json(_read_json(args.input))
    try:
        prog = synthesis.decompose_so8(target, _options(args, cfg))
    except synthesis.BudgetExceeded as exc:
        _emit(cfg, {"ok": False, "error": str(exc), "residual": exc.residual,
                    "factors": len(exc.program) if exc.program is not None else None})
        return EXIT_FAIL
    _emit(cfg, prog.to_json())
    return EXIT_OK


def _sequence_or_program(doc, args, cfg) -> synthesis.ProjectionSequence:
    if isinstance(doc, dict) and "terms" in doc:
        return synthesis.compile_program(_program(doc), _options(args, cfg))
    return _sequence(doc)


def cmd_simulate(args, cfg: CliConfig) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    seq = _sequence_or_program(_read_json(args.input), args, cfg)
    if args.state:
        psi = np.zeros(16)
        v = np.asarray(_read_json(args.state), dtype=float).ravel()
        psi[:v.size] = v
    else:
        v = np.random.default_rng(cfg.seed).standard_normal(8)
        psi = np.concatenate([v / np.linalg.norm(v), np.zeros(8)])
    backend = None if args.backend == "auto" else args.backend
    stats = simulate.run_trials(psi, seq, args.trials, cfg.seed, args.max_retries, backend)
    if args.trace:
        try:
            run = simulate.run_forced(psi, seq, simulate.trial_rng(cfg.seed, 0), args.max_retries, backend)
            trace = run.trace
        except simulate.RetryBudgetExceeded as exc:
            trace = exc.trace
        with open(args.trace, "w") as fh:
            fh.write(simulate.trace_to_ndjson(trace))
    doc = stats.to_json()
    doc["expected_measurements"] = simulate.expected_cost(seq)
    doc["step_failure"] = stats.first_attempt_failure()
    doc["mean_step_failure"] = float(np.mean(doc["step_failure"])) if doc["step_failure"] else 0.0
    failed = (stats.trials - stats.successes) / stats.trials
    doc["budget_exceeded_rate"] = failed
    _emit(cfg, doc)
    return EXIT_FAIL if failed > args.fail_threshold else EXIT_OK


def _builtin_projections(name: str):
    if name == "octonion-basis":
        return [base_projection(8)] + [octonion_projection(octonions.Octonion.basis(i)) for i in range(1, 8)]
    raise UsageError(f"unknown builtin family {name!r}")


def cmd_family(args, cfg: CliConfig) -> int:
    if args.builtin == "packing-m4" or (args.input and args.closure):
        if args.input:
            planes, base = families.load_packing(_read_json(args.input))
        else:
            planes, base = families.packing_m4()
        res = families.gate_group_closure(planes, base, args.budget, cfg.tolerance)
        doc = res.to_json()
        if res.is_finite:
            doc["all_signed_pattern"] = all(families.is_signed_pattern_multiple(G)
                                            for G in res.representative_matrices)
        _emit(cfg, doc)
        return EXIT_OK if res.is_finite else EXIT_FAIL
    if args.builtin:
        projs = _builtin_projections(args.builtin)
    elif args.input:
        doc = _read_json(args.input)
        try:
            projs = [projection_from_json(p) for p in doc["projections"]]
        except (KeyError, TypeError) as exc:
            raise SchemaError("family input needs a 'projections' list") from exc
    else:
        raise UsageError("family-audit needs an input file or --builtin")
    rep = families.family_audit(projs, tol=cfg.tolerance)
    out = rep.to_json()
    if not args.full:
        out["pairwise"] = [[{"is_equiangular": r.is_equiangular, "is_strong": r.is_strong, "alpha2": r.alpha2}
                            for r in row] for row in rep.pairwise]
    _emit(cfg, out)
    return EXIT_OK if rep.mutually_strong or rep.size <= 1 else EXIT_FAIL


def cmd_sic(args, cfg: CliConfig) -> int:
    if args.formula is not None:
        n = args.formula
        if n < 2:
            raise UsageError("--formula needs n >= 2")
        _emit(cfg, {"n": n, "alpha2": families.sic_alpha2(n, args.rank), "rank": args.rank or n / 2})
        return EXIT_OK
    if args.builtin:
        ops, n = {"qubit": (families.qubit_sic(), 2), "hesse": (families.hesse_sic(), 3)}[args.builtin]
    elif args.input:
        doc = _read_json(args.input)
        try:
            n = int(doc["n"])
            ops = [matrix_from_json(m) for m in doc["operators"]]
        except (KeyError, TypeError) as exc:
            raise SchemaError("sic input needs 'n' and 'operators'") from exc
    else:
        raise UsageError("sic-check needs --formula N, --builtin, or an input file")
    verdict = families.sic_check(ops, n, cfg.tolerance)
    _emit(cfg, verdict.to_json())
    return EXIT_OK if verdict.ok else EXIT_FAIL


def cmd_spin(args, cfg: CliConfig) -> int:
    rep = families.spin_binding_projection(cfg.tolerance)
    if args.text:
        lines = [f"rank(P) = {rep.rank}", f"rank(I - P) = {rep.complement_rank}", rep.interpretation]
        for row in rep.audit:
            cos = " ".join(f"{c:.6f}" for c in row["principal_cosines"])
            lines.append(f"{row['pair'][0]} vs {row['pair'][1]}: equiangular={row['is_equiangular']} cosines=[{cos}]")
        sys.stdout.write("\n".join(lines) + "\n")
    else:
        _emit(cfg, rep.to_json())
    return EXIT_OK if (rep.rank, rep.complement_rank) == (10, 6) else EXIT_FAIL


# parser ------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pretty", action="store_true", help="indent JSON output")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="numerical tolerance for checks")
    common.add_argument("--seed", type=int, default=None, help="base seed (default: $EQUIPROJ_SEED or 0)")
    common.add_argument("-o", "--output", help="write the JSON result here instead of stdout")

    p = argparse.ArgumentParser(prog="equiproj", description=__doc__.strip().splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True)

    s = sub.add_parser("verify-octonions", parents=[common], help="octonion table and Lie-basis identities")
    s.add_argument("--samples", type=int, default=1000)
    s.set_defaults(func=cmd_verify_octonions)

    s = sub.add_parser("check-pair", parents=[common], help="certify a pair of projections")
    s.add_argument("input", help='JSON {"P": matrix, "Q": matrix}')
    s.add_argument("--strong", action="store_true", help="require strong equiangularity")
    s.set_defaults(func=cmd_check_pair)

    def synth_flags(s):
        s.add_argument("--split-threshold", type=float, default=1.0)
        s.add_argument("--slice", type=int, default=1)

    s = sub.add_parser("synth", parents=[common], help="compile a gate program to a projection sequence")
    s.add_argument("input")
    synth_flags(s)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("eval-seq", parents=[common], help="evaluate a projection sequence")
    s.add_argument("input")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("decompose", parents=[common], help="decompose an SO(8) matrix into a gate program")
    s.add_argument("input")
    s.add_argument("--max-factors", type=int, default=None)
    s.add_argument("--residual", type=float, default=1e-8, help="target residual")
    synth_flags(s)
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("simulate", parents=[common], help="forced-measurement Monte Carlo")
    s.add_argument("input", help="projection sequence or gate program JSON")
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--max-retries", type=int, default=simulate.DEFAULT_MAX_RETRIES)
    s.add_argument("--fail-threshold", type=float, default=0.0,
                   help="exit 1 if the fraction of budget-exceeded trials is above this")
    s.add_argument("--trace", help="write the NDJSON trace of trial 0 here")
    s.add_argument("--state", help="JSON list of 8 (or 16) real amplitudes; default is seeded random")
    s.add_argument("--backend", choices=["auto", "cython", "python"], default="auto")
    synth_flags(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("family-audit", parents=[common], help="pairwise audit or plane-family closure")
    s.add_argument("input", nargs="?")
    s.add_argument("--builtin", choices=["octonion-basis", "packing-m4"])
    s.add_argument("--closure", action="store_true", help="treat the input as plane-family data")
    s.add_argument("--budget", type=int, default=10_000)
    s.add_argument("--full", action="store_true", help="include full pairwise reports")
    s.set_defaults(func=cmd_family)

    s = sub.add_parser("sic-check", parents=[common], help="verify a SIC-style POVM")
    s.add_argument("input", nargs="?")
    s.add_argument("--formula", type=int, metavar="N", help="only print the closed-form alpha^2 for dimension N")
    s.add_argument("--rank", type=int, default=None, help="projection rank for --formula (default N/2)")
    s.add_argument("--builtin", choices=["qubit", "hesse"])
    s.set_defaults(func=cmd_sic)

    s = sub.add_parser("spin-demo", parents=[common], help="spin-binding projection and pairing audit")
    s.add_argument("--text", action="store_true", help="human-readable report instead of JSON")
    s.set_defaults(func=cmd_spin)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        seed = args.seed if args.seed is not None else _default_seed()
        cfg = CliConfig(args.subcommand, seed, args.tol, args.pretty, args.output)
        return args.func(args, cfg)
    except (UsageError, SchemaError, OSError, json.JSONDecodeError, ProjectionError,
            families.ParseError, families.InvalidBasis, families.CountMismatch,
            synthesis.NotSpecialOrthogonal) as exc:
        print(f"equiproj: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (synthesis.SynthesisError, simulate.RetryBudgetExceeded) as exc:
        print(f"equiproj: failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
