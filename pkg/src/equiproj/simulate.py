"""Born-rule sampling and the forced-measurement retry protocol.

A step measures {P_i, I - P_i}.  On failure the previous projector is
measured and P_i retried, alternating until P_i succeeds or the retry
budget runs out.  Whatever the random path, a successful run leaves the
state at the deterministic gate applied to the input, up to sign.

The per-trial loop runs in the compiled ``_forced_kernel`` when it is
importable and in ``_forced_py`` otherwise; set ``EQUIPROJ_PURE_PYTHON=1``
to force the fallback.  Both draw uniforms from the same numpy Philox
stream, so they take identical branches for a given seed.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import _forced_py
from .projections import DimensionMismatch, Projection, base_projection, maxabs
from .synthesis import ProjectionSequence, evaluate, expected_alpha2

try:
    if os.environ.get("EQUIPROJ_PURE_PYTHON") == "1":
        raise ImportError("pure-Python backend requested")
    from . import _forced_kernel
except ImportError:
    _forced_kernel = None

BACKEND = "cython" if _forced_kernel is not None else "python"
DEFAULT_MAX_RETRIES = 64
CLAMP = 1e-12


def kernel(backend: str | None = None):
    backend = backend or BACKEND
    if backend == "cython":
        if _forced_kernel is None:
            raise RuntimeError("compiled kernel is not available; rebuild with `pip install -e .`")
        return _forced_kernel.forced_trial
    if backend == "python":
        return _forced_py.forced_trial
    raise ValueError(f"unknown backend {backend!r}")


class RetryBudgetExceeded(RuntimeError):
    def __init__(self, message, trace=None, state=None):
        super().__init__(message)
        self.trace = trace or []
        self.state = state


@dataclass(frozen=True)
class QuantumState:
    amplitudes: np.ndarray

    def __post_init__(self):
        nrm = np.linalg.norm(self.amplitudes)
        if abs(nrm - 1.0) > 1e-12:
            raise ValueError(f"state must have unit norm, got {nrm!r}")

    @property
    def field(self) -> str:
        return "C" if np.iscomplexobj(self.amplitudes) else "R"


@dataclass
class MeasurementEvent:
    step_index: int
    projector_label: str
    branch: str
    branch_probability: float
    retry_depth: int

    def to_json(self) -> dict:
        return {
            "step_index": self.step_index,
            "projector_label": self.projector_label,
            "branch": self.branch,
            "branch_probability": self.branch_probability,
            "retry_depth": self.retry_depth,
        }


def trial_rng(base_seed: int, trial_index: int) -> np.random.Generator:
    """Independent Philox stream keyed by hashing (base_seed, trial_index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(base_seed), int(trial_index)])))


def born_measure(state, P: Projection, rng: np.random.Generator, label: str = "P",
                 step_index: int = 0, retry_depth: int = 0):
    """One projective measurement {P, I - P}; consumes exactly one uniform draw."""
    psi = np.asarray(state)
    if psi.shape != (P.dim,):
        raise DimensionMismatch(f"state has shape {psi.shape}, projection acts on dimension {P.dim}")
    phi = P.matrix @ psi
    nrm = float(np.real(np.vdot(phi, phi)))
    p = 0.0 if nrm < CLAMP else 1.0 if nrm > 1.0 - CLAMP else nrm
    if rng.random() < p:
        post, branch, prob = phi / np.sqrt(nrm), "success", p
    else:
        rest = psi - phi
        post, branch, prob = rest / np.linalg.norm(rest), "failure", 1.0 - p
    return MeasurementEvent(step_index, label, branch, prob, retry_depth), post


# chains -----------------------------------------------------------------------

def chain_matrices(seq: ProjectionSequence) -> np.ndarray:
    """Stacked projectors P_0, then the chain in measurement order."""
    P0 = base_projection(8).matrix
    mats = [P0] + [P0 if lab is None else lab.projection().matrix for lab in seq.chain()[1:]]
    return np.ascontiguousarray(np.array(mats, dtype=np.float64))


def chain_labels(seq: ProjectionSequence) -> list[str]:
    return ["P0" if lab is None else lab.name() for lab in seq.chain()]


def step_alpha2(seq: ProjectionSequence) -> list[float]:
    """cos^2 of the dihedral angle for each step 1..N of the chain."""
    chain = seq.chain()
    return [expected_alpha2(a, b) for a, b in zip(chain, chain[1:])]


def step_failure_probabilities(seq: ProjectionSequence) -> list[float]:
    return [1.0 - a2 for a2 in step_alpha2(seq)]


def target_state(seq: ProjectionSequence, state) -> np.ndarray:
    psi = np.asarray(state, dtype=float)
    out = np.zeros(16)
    out[:8] = evaluate(seq).normalized @ psi[:8]
    return out


def _check_initial(state) -> np.ndarray:
    psi = np.array(state, dtype=np.float64).reshape(-1)
    if psi.shape != (16,):
        raise DimensionMismatch(f"state must live in R^16, got shape {psi.shape}")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-12:
        raise ValueError("initial state must have unit norm")
    if maxabs(psi[8:]) > 1e-12:
        raise ValueError("initial state must lie in the range of P_0")
    return psi


@dataclass
class ForcedRun:
    state: np.ndarray
    trace: list[MeasurementEvent]
    success: bool
    measurements: int


def run_forced(state, seq: ProjectionSequence, rng,
               max_retries: int = DEFAULT_MAX_RETRIES, backend: str | None = None) -> ForcedRun:
    """One forced run.  ``rng`` is a numpy Generator, or any object with a
    ``random()`` method (which pins the run to the pure-Python backend)."""
    if isinstance(rng, np.random.Generator):
        source = rng.bit_generator
    else:
        source, backend = rng, "python"
    psi = _check_initial(state).copy()
    projs = chain_matrices(seq)
    labels = chain_labels(seq)
    cap = max(1, (projs.shape[0] - 1) * (1 + 2 * (max_retries + 1)))
    ev_step = np.zeros(cap, dtype=np.int32)
    ev_proj = np.zeros(cap, dtype=np.int32)
    ev_branch = np.zeros(cap, dtype=np.int32)
    ev_prob = np.zeros(cap)
    ev_depth = np.zeros(cap, dtype=np.int32)
    n, ok, meas = kernel(backend)(projs, psi, source, int(max_retries),
                                 ev_step, ev_proj, ev_branch, ev_prob, ev_depth)
    trace = [
        MeasurementEvent(
            int(ev_step[e]), labels[ev_proj[e]],
            "success" if ev_branch[e] else "failure",
            float(ev_prob[e] if ev_branch[e] else 1.0 - ev_prob[e]),
            int(ev_depth[e]))
        for e in range(n)
    ]
    if not ok:
        raise RetryBudgetExceeded(
            f"step {trace[-1].step_index} still failing after {max_retries} retries", trace=trace, state=psi)
    return ForcedRun(state=psi, trace=trace, success=True, measurements=int(meas))


def trace_to_ndjson(trace: list[MeasurementEvent]) -> str:
    return "".join(json.dumps(ev.to_json(), sort_keys=True) + "\n" for ev in trace)


# trials -------------------------------------------------------------------------

@dataclass
class TrialStats:
    trials: int
    successes: int
    mean_measurements: float
    empirical_step_success: dict[int, float]
    final_fidelity_min: float
    step_labels: list[str] = field(default_factory=list)
    step_alpha2: list[float] = field(default_factory=list)
    attempts: list[int] = field(default_factory=list)
    depth_hist: list[list[int]] = field(default_factory=list)
    backend: str = BACKEND

    def retry_tail(self, step: int, r: int) -> float:
        """Fraction of runs through ``step`` that needed more than r retries."""
        h = np.asarray(self.depth_hist[step - 1], dtype=float)
        total = h.sum()
        return float(h[r + 1:].sum() / total) if total else 0.0

    def first_attempt_failure(self) -> list[float]:
        """Per step, the fraction of runs whose first measurement failed."""
        out = []
        for h in self.depth_hist:
            total = sum(h)
            out.append(1.0 - h[0] / total if total else 0.0)
        return out

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "successes": self.successes,
            "mean_measurements": self.mean_measurements,
            "empirical_step_success": {str(k): v for k, v in self.empirical_step_success.items()},
            "final_fidelity_min": self.final_fidelity_min,
            "step_labels": self.step_labels,
            "step_alpha2": self.step_alpha2,
            "attempts": self.attempts,
            "depth_hist": self.depth_hist,
        }


def run_trials(initial_state, seq: ProjectionSequence, n_trials: int, base_seed: int,
               max_retries: int = DEFAULT_MAX_RETRIES, backend: str | None = None) -> TrialStats:
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    psi0 = _check_initial(initial_state)
    projs = chain_matrices(seq)
    nsteps = projs.shape[0] - 1
    run = kernel(backend)
    target = target_state(seq, psi0)
    attempts = np.zeros(nsteps + 1, dtype=np.int64)
    successes = np.zeros(nsteps + 1, dtype=np.int64)
    depth_hist = np.zeros((nsteps + 1, max_retries + 2), dtype=np.int64)
    n_ok = 0
    total_meas = 0
    fid_min = 1.0
    for i in range(n_trials):
        psi = psi0.copy()
        bitgen = trial_rng(base_seed, i).bit_generator
        _, ok, meas = run(projs, psi, bitgen, int(max_retries), None, None, None, None, None,
                          attempts, successes, depth_hist)
        total_meas += meas
        if ok:
            n_ok += 1
            fid_min = min(fid_min, float(psi @ target) ** 2)
    labels = chain_labels(seq)
    freq = {s: float(successes[s] / attempts[s]) for s in range(1, nsteps + 1) if attempts[s]}
    return TrialStats(
        trials=n_trials, successes=n_ok, mean_measurements=total_meas / n_trials,
        empirical_step_success=freq, final_fidelity_min=fid_min if n_ok else float("nan"),
        step_labels=[f"{labels[s - 1]}->{labels[s]}" for s in range(1, nsteps + 1)],
        step_alpha2=step_alpha2(seq), attempts=attempts[1:].tolist(),
        depth_hist=depth_hist[1:].tolist(), backend=backend or BACKEND,
    )


# analytic cost ---------------------------------------------------------------------

def step_expected_measurements(alpha2: float) -> float:
    """Expected measurements to clear one step, from its absorbing Markov chain.

    Transient states: 0 = at P_{i-1} (first attempt), 1 = in I - P_i after a
    failure, 2 = back in P_{i-1}, 3 = in I - P_{i-1}.  Every transition costs
    one measurement.
    """
    a = min(max(alpha2, 0.0), 1.0)
    if a >= 1.0:
        return 1.0
    if a <= 0.0:
        return float("inf")
    T = np.array([
        [0.0, 1 - a, 0.0, 0.0],
        [0.0, 0.0, 1 - a, a],
        [0.0, 1 - a, 0.0, 0.0],
        [0.0, a, 0.0, 0.0],
    ])
    N = np.linalg.inv(np.eye(4) - T)
    return float(N[0].sum())


def expected_cost(seq: ProjectionSequence) -> float:
    """Expected number of measurements for the whole chain (no retry cap)."""
    return float(sum(step_expected_measurements(a2) for a2 in step_alpha2(seq)))
