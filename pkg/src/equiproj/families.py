"""Audits of projection families.

Pairwise equiangularity tables, closure of the gate group generated by a
family of planes, SIC-style POVM checks, samplers for the complex,
quaternion and octonion graph families, and the two-molecule spin-binding
projection.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .octonions import Octonion, complex_matrep, matrep, oct_mul, quat_matrep
from .projections import (
    DEFAULT_TOL, DimensionMismatch, EquiangularReport, NotScaledUnitary, Projection,
    graph_projection, is_equiangular, is_strongly_equiangular, make_projection, maxabs,
    principal_cosines, scaled_unitary_norm2, transition_blocks,
)


class InvalidBasis(ValueError):
    pass


class CountMismatch(ValueError):
    pass


class ParseError(ValueError):
    pass


# pairwise audits -----------------------------------------------------------------

@dataclass
class FamilyReport:
    size: int
    pairwise: list[list[EquiangularReport]]
    mutually_equiangular: bool
    mutually_strong: bool
    distinct_alphas: list[float]
    unitary_membership: list[list[bool]] | None = None

    def to_json(self) -> dict:
        return {
            "size": self.size,
            "mutually_equiangular": self.mutually_equiangular,
            "mutually_strong": self.mutually_strong,
            "distinct_alphas": self.distinct_alphas,
            "pairwise": [[r.to_json() for r in row] for row in self.pairwise],
            "unitary_membership": self.unitary_membership,
        }


def _distinct(values, tol=1e-9) -> list[float]:
    out: list[float] = []
    for v in sorted(values):
        if not out or v - out[-1] > tol:
            out.append(v)
    return out


def in_block_set(W, tol: float = DEFAULT_TOL) -> bool:
    """Both diagonal half-blocks of W are unitary up to a (possibly zero) scale."""
    W = np.asarray(W)
    h = W.shape[0] // 2
    try:
        scaled_unitary_norm2(W[:h, :h], tol)
        scaled_unitary_norm2(W[h:, h:], tol)
    except NotScaledUnitary:
        return False
    return True


def family_audit(projections: list[Projection], unitaries=None, tol: float = DEFAULT_TOL) -> FamilyReport:
    """Certify every pair; optionally check each U_i^H U_j lies in the block set."""
    n = len(projections)
    if n and len({P.dim for P in projections}) > 1:
        raise DimensionMismatch("family members live in different ambient spaces")
    table: list[list[EquiangularReport | None]] = [[None] * n for _ in range(n)]
    for i in range(n):
        table[i][i] = is_equiangular(projections[i], projections[i], tol)
        for j in range(i + 1, n):
            table[i][j] = is_strongly_equiangular(projections[i], projections[j], tol)
            table[j][i] = is_strongly_equiangular(projections[j], projections[i], tol)
    off = [table[i][j] for i in range(n) for j in range(n) if i != j]
    membership = None
    if unitaries is not None:
        if len(unitaries) != n:
            raise DimensionMismatch(f"{len(unitaries)} unitaries for {n} projections")
        U = [np.asarray(u) for u in unitaries]
        membership = [[in_block_set(U[i].conj().T @ U[j], tol) for j in range(n)] for i in range(n)]
    return FamilyReport(
        size=n,
        pairwise=table,
        mutually_equiangular=all(r.is_equiangular for r in off),
        mutually_strong=all(r.is_strong for r in off),
        distinct_alphas=_distinct(r.alpha for r in off if r.is_equiangular),
        unitary_membership=membership,
    )


# gate-group closure ------------------------------------------------------------------

@dataclass
class ClosureResult:
    elements_found: int
    is_finite: bool
    budget: int
    representative_matrices: list[np.ndarray] | None = None
    generators: int = 0

    def to_json(self) -> dict:
        reps = None
        if self.representative_matrices is not None:
            reps = [np.round(G, 12).tolist() for G in self.representative_matrices]
        return {
            "elements_found": self.elements_found,
            "is_finite": self.is_finite,
            "budget": self.budget,
            "generators": self.generators,
            "representative_matrices": reps,
        }


def validate_plane(rows, declared_norm2: float | None = None, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Check rows are mutually orthogonal with a common norm; return them orthonormalized."""
    M = np.asarray(rows, dtype=float)
    if M.ndim != 2 or M.shape[0] == 0:
        raise InvalidBasis(f"a plane needs a 2-d array of basis rows, got shape {M.shape}")
    G = M @ M.T
    n2 = float(np.mean(np.diag(G)))
    if n2 <= tol:
        raise InvalidBasis("zero basis rows")
    if maxabs(G - n2 * np.eye(M.shape[0])) > tol * max(1.0, n2):
        raise InvalidBasis("rows are not orthogonal with a common norm")
    if declared_norm2 is not None and abs(n2 - declared_norm2) > tol * max(1.0, n2):
        raise InvalidBasis(f"declared squared row norm {declared_norm2} but rows have {n2}")
    return M / math.sqrt(n2)


def sign_normalize(G, tol: float = 1e-9) -> np.ndarray:
    """Flip G so its first entry of magnitude above tol is positive."""
    flat = G.ravel()
    nz = np.flatnonzero(np.abs(flat) > tol)
    return -G if nz.size and flat[nz[0]] < 0 else G


def _key(G, tol: float) -> bytes:
    """Hashable rounding of a sign-normalized matrix on a grid of 1000*tol."""
    return np.round(sign_normalize(G, tol) / max(tol, 1e-12) * 1e-3).astype(np.int64).tobytes()


def gate_group_closure(planes, base_index: int = 0, budget: int = 10_000,
                       tol: float = DEFAULT_TOL, keep: int = 64) -> ClosureResult:
    """Group generated by the normalized transition blocks of a plane family.

    Every equiangular pair (j, k), j != k, contributes B_k B_j^T / alpha,
    an orthogonal matrix in the planes' own row coordinates.  Products are
    enumerated breadth-first from the identity (the base plane's frame),
    deduplicated up to global sign; running past ``budget`` elements is the
    signal of an infinite (dense) group.
    """
    B = [validate_plane(p, tol=tol) for p in planes]
    if not B:
        raise InvalidBasis("no planes supplied")
    if not 0 <= base_index < len(B):
        raise InvalidBasis(f"base_index {base_index} out of range")
    if len({b.shape for b in B}) > 1:
        raise InvalidBasis("planes differ in dimension or ambient space")
    r = B[0].shape[0]
    gens: dict[tuple, np.ndarray] = {}
    for j, k in itertools.permutations(range(len(B)), 2):
        T = B[k] @ B[j].T
        s = float(np.trace(T @ T.T)) / r
        if s > tol and maxabs(T @ T.T - s * np.eye(r)) <= tol:
            G = sign_normalize(T / math.sqrt(s), tol)
            gens.setdefault(_key(G, tol), G)
    generators = list(gens.values())

    I = np.eye(r)
    seen = {_key(I, tol)}
    elements = [I]
    queue = deque([I])
    finite = True
    while queue and finite:
        X = queue.popleft()
        for G in generators:
            Y = sign_normalize(G @ X, tol)
            key = _key(Y, tol)
            if key in seen:
                continue
            if len(seen) >= budget:
                finite = False
                break
            seen.add(key)
            elements.append(Y)
            queue.append(Y)
    reps = elements if finite else elements[:keep]
    return ClosureResult(elements_found=len(elements), is_finite=finite, budget=budget,
                         representative_matrices=reps, generators=len(generators))


def is_signed_pattern_multiple(G, tol: float = 1e-9) -> bool:
    """G is orthogonal and proportional to a matrix with entries in {-1, 0, 1}."""
    G = np.asarray(G, dtype=float)
    if maxabs(G @ G.T - np.eye(G.shape[0])) > tol:
        return False
    mags = np.abs(G[np.abs(G) > tol])
    return bool(mags.size and np.ptp(mags) <= tol)


def complex_line_plane(z: complex) -> np.ndarray:
    """Row basis of the graph {(x, A x)} of multiplication by z on R^2."""
    return np.hstack([np.eye(2), element_matrix("complex", z).T])


def load_packing(doc) -> tuple[list[np.ndarray], int]:
    """Parse plane-family JSON: {"planes": [{"rows": [[int...]], "row_norm2": k}], "base_index": i}."""
    try:
        planes = doc["planes"]
        base = int(doc.get("base_index", 0))
        out = []
        for p in planes:
            rows = np.array(p["rows"])
            if rows.dtype.kind not in "iu":
                raise InvalidBasis("packing data must use integer entries")
            validate_plane(rows, p.get("row_norm2"))
            out.append(rows.astype(float))
    except (KeyError, TypeError) as exc:
        raise InvalidBasis(f"malformed plane-family document: {exc}") from exc
    return out, base


def packing_m4() -> tuple[list[np.ndarray], int]:
    """The bundled 18-plane family in R^4."""
    import json
    from importlib.resources import files

    doc = json.loads(files("equiproj").joinpath("data/packing_m4.json").read_text())
    return load_packing(doc)


# SIC-style POVMs -------------------------------------------------------------------------

def sic_alpha2(n: int, rank: int | None = None) -> float:
    """Common overlap of n^2 equal-weight rank-r projections summing to a multiple of I.

    Taking traces of sum_j P_i P_j P_i gives (n r - 1)/(n^2 - 1); the strong
    case r = n/2 is (n^2 - 2)/(2(n^2 - 1)).
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    r = n / 2 if rank is None else rank
    return (n * r - 1) / (n * n - 1)


@dataclass
class SicVerdict:
    ok: bool
    n: int
    alpha2: float
    formula_alpha2: float
    rank: int
    sum_residual: float
    pair_residual: float
    alpha2_spread: float
    checks: dict[str, bool]
    strong: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def sic_check(operators, n: int, tol: float = DEFAULT_TOL) -> SicVerdict:
    """Sum-to-identity, constant pairwise overlap P_i P_j P_i = a^2 P_i, and the closed form."""
    M = [np.asarray(m) for m in operators]
    if len(M) != n * n:
        raise CountMismatch(f"expected {n * n} operators for n = {n}, got {len(M)}")
    if any(m.shape != (n, n) for m in M):
        raise DimensionMismatch(f"operators must be {n}x{n}")
    sum_res = maxabs(sum(M) - np.eye(n))
    # each M_i is lambda_i P_i; recover P_i from the spectrum
    P, ranks = [], []
    for m in M:
        w = np.linalg.eigvalsh((m + m.conj().T) / 2)
        lam = float(w[-1])
        if lam <= tol:
            raise ValueError("operator is not positive")
        Pm = m / lam
        P.append(Pm)
        ranks.append(int(round(float(np.real(np.trace(Pm))))))
    proj_ok = all(maxabs(p @ p - p) <= tol and maxabs(p - p.conj().T) <= tol for p in P)
    a2s, res = [], 0.0
    for i, j in itertools.permutations(range(len(P)), 2):
        a2 = float(np.real(np.trace(P[i] @ P[j] @ P[i]))) / max(ranks[i], 1)
        a2s.append(a2)
        res = max(res, maxabs(P[i] @ P[j] @ P[i] - a2 * P[i]))
    a2 = float(np.mean(a2s)) if a2s else 1.0
    spread = float(np.ptp(a2s)) if a2s else 0.0
    rank = ranks[0]
    formula = sic_alpha2(n)
    checks = {
        "projections": proj_ok and len(set(ranks)) == 1,
        "sum_to_identity": sum_res <= tol,
        "constant_overlap": res <= tol and spread <= tol,
        "matches_formula": abs(a2 - formula) <= tol,
    }
    return SicVerdict(ok=all(checks.values()), n=n, alpha2=a2, formula_alpha2=formula, rank=rank,
                      sum_residual=sum_res, pair_residual=res, alpha2_spread=spread,
                      checks=checks, strong=2 * rank == n)


def qubit_sic(U=None) -> list[np.ndarray]:
    """Tetrahedral qubit POVM (I + r.sigma)/4, optionally conjugated by a unitary."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.diag([1.0 + 0j, -1.0])
    dirs = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / math.sqrt(3)
    ops = [(np.eye(2) + x * sx + y * sy + z * sz) / 4 for x, y, z in dirs]
    if U is not None:
        ops = [U @ m @ U.conj().T for m in ops]
    return ops


def hesse_sic() -> list[np.ndarray]:
    """The nine-element Weyl-Heisenberg SIC in C^3 (rank one, so not strong)."""
    w = np.exp(2j * np.pi / 3)
    fid = np.array([0, 1, -1], dtype=complex) / math.sqrt(2)
    X = np.roll(np.eye(3), 1, axis=0)
    Z = np.diag([1, w, w * w])
    ops = []
    for a in range(3):
        for b in range(3):
            v = np.linalg.matrix_power(X, a) @ np.linalg.matrix_power(Z, b) @ fid
            ops.append(np.outer(v, v.conj()) / 3)
    return ops


# continuous families -----------------------------------------------------------------------

_KIND_DIM = {"complex": 2, "quaternion": 4, "octonion": 8}


def parse_element(kind: str, params) -> np.ndarray:
    """Coefficients of a ring element from numbers, a complex, or a comma-separated string."""
    if kind not in _KIND_DIM:
        raise ParseError(f"unknown kind {kind!r}; expected one of {sorted(_KIND_DIM)}")
    d = _KIND_DIM[kind]
    try:
        if isinstance(params, Octonion):
            vals = list(params.coeffs)
        elif isinstance(params, str):
            s = params.strip()
            vals = ([complex(s.replace(" ", "").replace("i", "j"))] if kind == "complex" and "," not in s
                    else [float(x) for x in s.split(",") if x.strip()])
        elif np.isscalar(params):
            vals = [params]
        else:
            vals = list(np.asarray(params).ravel())
        if kind == "complex" and len(vals) == 1:
            z = complex(vals[0])
            vals = [z.real, z.imag]
        v = np.array(vals, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"cannot parse {params!r} as a {kind} element") from exc
    if v.shape != (d,):
        raise ParseError(f"a {kind} element has {d} real coefficients, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ParseError("coefficients must be finite")
    return v


def element_matrix(kind: str, params) -> np.ndarray:
    v = parse_element(kind, params)
    full = np.zeros(8)
    full[:v.size] = v
    return {"complex": complex_matrep, "quaternion": quat_matrep, "octonion": matrep}[kind](full)


def continuous_family_sample(kind: str, params, tol: float = DEFAULT_TOL) -> Projection:
    """Graph projection of the element's real representation (dimension 2d)."""
    return graph_projection(element_matrix(kind, params), tol)


# gate algebras of the complex and quaternion families -----------------------------------------

def _right_i() -> np.ndarray:
    """Right multiplication by e_1 on H, the complex structure commuting with left multiplication."""
    e1 = Octonion.basis(1)
    return np.array([oct_mul(Octonion.basis(l), e1).coeffs[:4] for l in range(4)]).T


_J = _right_i()
_CBASIS = np.eye(4)[:, [0, 2]]


def quaternion_block_to_complex(L) -> np.ndarray:
    """2x2 complex matrix of a real 4x4 map commuting with right multiplication by e_1."""
    L = np.asarray(L)
    return _CBASIS.T @ L @ _CBASIS + 1j * (_J @ _CBASIS).T @ L @ _CBASIS


def normalized_block(kind: str, a, b) -> np.ndarray:
    """V11 of the pair (P_a, P_b), rescaled to determinant magnitude 1."""
    V11, _ = transition_blocks(element_matrix(kind, a), element_matrix(kind, b))
    s = scaled_unitary_norm2(V11)
    if s <= 0:
        raise NotScaledUnitary("orthogonal pair has a zero transition block")
    return V11 / math.sqrt(s)


def is_rotation2(G, tol: float = 1e-12) -> bool:
    G = np.asarray(G)
    return bool(G.shape == (2, 2) and abs(G[0, 0] - G[1, 1]) <= tol and abs(G[0, 1] + G[1, 0]) <= tol
                and abs(np.linalg.det(G) - 1) <= tol)


def is_su2_form(C, tol: float = 1e-12) -> bool:
    """[[a, -conj(b)], [b, conj(a)]] with |a|^2 + |b|^2 = 1."""
    C = np.asarray(C)
    return bool(abs(C[1, 1] - np.conj(C[0, 0])) <= tol and abs(C[0, 1] + np.conj(C[1, 0])) <= tol
                and abs(np.linalg.det(C) - 1) <= tol)


def _gate_of(kind: str, b) -> np.ndarray:
    """normalize(I + B): the gate of the base-to-P_b step."""
    B = element_matrix(kind, b)
    M = np.eye(B.shape[0]) + B
    return M / math.sqrt(scaled_unitary_norm2(M))


def reachability_rank(kind: str, h: float = 1e-6) -> int:
    """Rank of the derivative of b -> normalize(I + B) at b = 0 (central differences)."""
    d = _KIND_DIM[kind]
    cols = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        cols.append(((_gate_of(kind, e) - _gate_of(kind, -e)) / (2 * h)).ravel())
    return int(np.linalg.matrix_rank(np.array(cols).T, tol=1e-6))


@dataclass
class AlgebraVerdict:
    kind: str
    ok: bool
    checks: dict[str, bool]
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"kind": self.kind, "ok": self.ok, "checks": self.checks, "details": self.details}


def gate_algebra_closure_check(kind: str, samples: int = 100, seed: int = 0,
                               tol: float = 1e-12) -> AlgebraVerdict:
    """Blocks land in SO(2) (complex) or SU(2) (quaternion), products stay there,
    and normalize(I + B) covers a neighbourhood of the identity."""
    if kind not in ("complex", "quaternion"):
        raise ParseError("kind must be 'complex' or 'quaternion'")
    rng = np.random.default_rng(seed)
    d = _KIND_DIM[kind]
    in_group = is_rotation2 if kind == "complex" else is_su2_form
    conv = (lambda G: G) if kind == "complex" else quaternion_block_to_complex
    blocks_ok, product_ok = True, True
    prod = np.eye(2, dtype=complex if kind == "quaternion" else float)
    worst = 0.0
    for _ in range(samples):
        a, b = rng.standard_normal(d), rng.standard_normal(d)
        G = conv(normalized_block(kind, a, b))
        worst = max(worst, abs(np.linalg.det(G) - 1))
        blocks_ok &= in_group(G, tol)
        prod = prod @ G
        product_ok &= in_group(prod, 1e-10)
    dim_group = 1 if kind == "complex" else 3
    rank = reachability_rank(kind)
    identity = np.allclose(_gate_of(kind, np.zeros(d)), np.eye(d), atol=tol)
    checks = {"blocks_in_group": bool(blocks_ok), "products_in_group": bool(product_ok),
              "reaches_neighbourhood": rank == dim_group, "zero_gives_identity": bool(identity)}
    return AlgebraVerdict(kind, all(checks.values()), checks,
                          {"max_det_error": worst, "jacobian_rank": rank, "group_dimension": dim_group})


# spin binding --------------------------------------------------------------------------------

PAIRINGS = {"12|34": (0, 1, 2, 3), "13|24": (0, 2, 1, 3), "14|23": (0, 3, 1, 2)}


def _swap2() -> np.ndarray:
    S = np.zeros((4, 4))
    for a, b in itertools.product(range(2), repeat=2):
        S[2 * b + a, 2 * a + b] = 1.0
    return S


def singlet_triplet() -> tuple[np.ndarray, np.ndarray]:
    """(S, T) = ((I - SWAP)/2, (I + SWAP)/2) on C^2 (x) C^2."""
    W = _swap2()
    return (np.eye(4) - W) / 2, (np.eye(4) + W) / 2


def _permute_spins(M, order) -> np.ndarray:
    """Conjugate a 16x16 operator so tensor slot k acts on spin order[k]."""
    T = np.asarray(M).reshape([2] * 8)
    inv = np.argsort(order)
    axes = [int(i) for i in inv] + [4 + int(i) for i in inv]
    return T.transpose(axes).reshape(16, 16)


def binding_projection(pairing: str = "12|34") -> Projection:
    S, T = singlet_triplet()
    P = np.kron(S, S) + np.kron(T, T)
    return make_projection(_permute_spins(P, PAIRINGS[pairing]))


@dataclass
class SpinBindingReport:
    projection: Projection
    rank: int
    complement_rank: int
    audit: list[dict]
    any_not_equiangular: bool
    interpretation: str = ("pairing audit: the three ways of splitting four spins into two "
                           "molecules, compared pairwise (an interpretation of the construction)")

    def to_json(self) -> dict:
        return {"rank": self.rank, "complement_rank": self.complement_rank, "audit": self.audit,
                "any_not_equiangular": self.any_not_equiangular, "interpretation": self.interpretation}


def spin_binding_projection(tol: float = DEFAULT_TOL) -> SpinBindingReport:
    """P = S(x)S + T(x)T on (C^2)^(x)4 and the pairwise audit of the three pairings."""
    proj = {name: binding_projection(name) for name in PAIRINGS}
    P = proj["12|34"]
    audit = []
    for a, b in itertools.combinations(PAIRINGS, 2):
        rep = is_equiangular(proj[a], proj[b], tol)
        audit.append({
            "pair": [a, b],
            "is_equiangular": rep.is_equiangular,
            "residual": rep.residual,
            "principal_cosines": [float(c) for c in principal_cosines(proj[a], proj[b])],
        })
    rank = int(np.linalg.matrix_rank(P.matrix))
    crank = int(np.linalg.matrix_rank(np.eye(16) - P.matrix))
    return SpinBindingReport(P, rank, crank, audit, any(not row["is_equiangular"] for row in audit))
