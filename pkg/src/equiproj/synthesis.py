"""so(8) gate programs, their compilation into octonion projection sequences,
and evaluation of sequences back into gates.

Conventions
-----------
* A generator term ``(k, j, t)`` stands for ``exp(t * E_k E_j)``.
* A program's gate applies its terms in list order, so the matrix is
  ``exp(t_m h_m) @ ... @ exp(t_1 h_1)``.
* Each term compiles to the label pair ``(c * e_k, e_j)`` and the chain
  ``P_0 P_{e_j} P_{c e_k} P_0``, whose gate is proportional to
  ``I + c E_j^T E_k``.  That equals ``I + tan(t) E_k E_j`` with
  ``c = tan t`` except when ``k == 0``, where ``c = -tan t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg

from .octonions import Octonion, basis_matrix, matrep
from .projections import (
    DEFAULT_TOL,
    Projection,
    base_projection,
    is_equiangular,
    maxabs,
    octonion_projection,
    transition_blocks,
)


class SynthesisError(ValueError):
    pass


class ScaleNotPositive(SynthesisError):
    pass


class MethodMismatch(SynthesisError):
    pass


class NotSpecialOrthogonal(SynthesisError):
    pass


class NotUnitary(SynthesisError):
    pass


class BudgetExceeded(SynthesisError):
    def __init__(self, message, program=None, residual=None):
        super().__init__(message)
        self.program = program
        self.residual = residual


@dataclass(frozen=True)
class GeneratorTerm:
    k: int
    j: int
    t: float

    def __post_init__(self):
        if not (0 <= self.k <= 7 and 0 <= self.j <= 7) or self.k == self.j:
            raise ValueError(f"generator indices must be distinct and in 0..7, got ({self.k}, {self.j})")
        if not math.isfinite(self.t):
            raise ValueError("generator angle must be finite")

    def generator(self) -> np.ndarray:
        return generator(self.k, self.j)

    def to_json(self) -> dict:
        return {"k": self.k, "j": self.j, "t": self.t}


@dataclass
class GateProgram:
    terms: list[GeneratorTerm] = field(default_factory=list)

    def __len__(self):
        return len(self.terms)

    def gate(self) -> np.ndarray:
        return program_gate(self)

    def to_json(self) -> dict:
        return {"terms": [t.to_json() for t in self.terms]}

    @classmethod
    def from_json(cls, data: dict) -> "GateProgram":
        return cls([GeneratorTerm(int(t["k"]), int(t["j"]), float(t["t"])) for t in data["terms"]])


@dataclass(frozen=True)
class Label:
    """The octonion ``c * e_axis`` naming a projection P_{c e_axis}."""

    axis: int
    c: float = 1.0

    def octonion(self) -> Octonion:
        return Octonion.basis(self.axis, self.c)

    def matrix(self) -> np.ndarray:
        return self.c * basis_matrix(self.axis)

    def projection(self) -> Projection:
        return octonion_projection(self.octonion())

    def name(self) -> str:
        return f"e{self.axis}" if self.c == 1.0 else f"{self.c:.6g}*e{self.axis}"

    def to_json(self) -> dict:
        return {"axis": self.axis, "c": self.c}


@dataclass
class ProjectionSequence:
    """Labels a_1..a_2m; the physical chain is P_0 P_a2 P_a1 P_0 ... P_0 P_a2m P_a2m-1 P_0."""

    labels: list[Label] = field(default_factory=list)

    def __len__(self):
        return len(self.labels)

    def pairs(self) -> list[tuple[Label, Label]]:
        if len(self.labels) % 2:
            raise ValueError("a projection sequence holds label pairs; got an odd count")
        return [(self.labels[i], self.labels[i + 1]) for i in range(0, len(self.labels), 2)]

    def chain(self) -> list[Label | None]:
        """Projectors in measurement order; ``None`` is P_0 (shared between pairs)."""
        out: list[Label | None] = [None]
        for a1, a2 in self.pairs():
            out += [a1, a2, None]
        return out

    def to_json(self) -> dict:
        return {"labels": [l.to_json() for l in self.labels]}

    @classmethod
    def from_json(cls, data: dict) -> "ProjectionSequence":
        return cls([Label(int(l["axis"]), float(l.get("c", 1.0))) for l in data["labels"]])


@dataclass
class SynthesisOptions:
    split_threshold: float = 1.0
    slice_count: int = 1
    tolerance: float = 1e-8
    max_factors: int = 28 * 64

    def __post_init__(self):
        if not (self.split_threshold > 0 and self.slice_count >= 1 and self.tolerance > 0 and self.max_factors >= 1):
            raise ValueError("synthesis options must all be positive")


# Lie basis -----------------------------------------------------------------

@lru_cache(maxsize=None)
def _generator_cached(k: int, j: int) -> np.ndarray:
    h = basis_matrix(k) @ basis_matrix(j)
    h.setflags(write=False)
    return h


def generator(k: int, j: int) -> np.ndarray:
    return _generator_cached(k, j)


LIE_PAIRS = tuple((i, j) for i in range(8) for j in range(i + 1, 8))


def lie_basis() -> list[np.ndarray]:
    """The 28 products E_i E_j, i < j; a basis of so(8)."""
    return [generator(i, j) for i, j in LIE_PAIRS]


@lru_cache(maxsize=None)
def _gram_factor():
    V = np.array([h.ravel() for h in lie_basis()])
    return V, scipy.linalg.lu_factor(V @ V.T)


def lie_coordinates(L: np.ndarray) -> np.ndarray:
    """Coefficients c with L = sum_l c_l E_i E_j over the (non-orthogonal) basis."""
    V, lu = _gram_factor()
    return scipy.linalg.lu_solve(lu, V @ np.asarray(L).ravel())


def exp_generator(term: GeneratorTerm) -> np.ndarray:
    """exp(t h) = cos t I + sin t h, using h^2 = -I."""
    return math.cos(term.t) * np.eye(8) + math.sin(term.t) * term.generator()


def program_gate(program: GateProgram) -> np.ndarray:
    G = np.eye(8)
    for term in program.terms:
        G = exp_generator(term) @ G
    return G


# compilation ----------------------------------------------------------------

def _wrap_angle(t: float) -> float:
    """Reduce modulo 2 pi into (-pi, pi]; exp(t h) has period 2 pi."""
    r = math.remainder(t, 2 * math.pi)
    return math.pi if r == -math.pi else r


def compiled_angles(t: float, options: SynthesisOptions) -> list[float]:
    """Angles the term is cut into: s slices, each halved until |tan| <= threshold."""
    t = _wrap_angle(t) / options.slice_count
    pieces = 1
    while abs(t) >= math.pi / 2 or abs(math.tan(t)) > options.split_threshold:
        t /= 2
        pieces *= 2
    return [t] * (pieces * options.slice_count)


def compile_program(program: GateProgram, options: SynthesisOptions | None = None) -> ProjectionSequence:
    options = options or SynthesisOptions()
    labels: list[Label] = []
    for term in program.terms:
        for t in compiled_angles(term.t, options):
            c = math.tan(t)
            if term.k == 0:
                c = -c
            labels += [Label(term.k, c), Label(term.j, 1.0)]
    return ProjectionSequence(labels)


# evaluation -----------------------------------------------------------------

@dataclass
class EvaluatedGate:
    """Gate G = scale * normalized.  Long chains underflow a plain float
    product, so the scale is carried as its logarithm."""

    normalized: np.ndarray
    log_scale: float
    dense: np.ndarray
    via_blocks: np.ndarray

    @property
    def scale(self) -> float:
        return math.exp(self.log_scale)

    @property
    def G(self) -> np.ndarray:
        return self.scale * self.normalized


def _renormalize(M: np.ndarray, rank: int) -> tuple[np.ndarray, float]:
    s = math.sqrt(float(np.sum(M * M)) / rank)
    if not s > 1e-300:
        raise ScaleNotPositive("projection chain annihilates the P_0 block")
    return M / s, math.log(s)


def _dense_chain(seq: ProjectionSequence) -> tuple[np.ndarray, float]:
    P0 = base_projection(8).matrix
    M, log_s = P0.copy(), 0.0
    for lab in seq.chain()[1:]:
        P = P0 if lab is None else lab.projection().matrix
        M, ds = _renormalize(P @ M, 8)
        log_s += ds
    return M[:8, :8], log_s


def _block_chain(seq: ProjectionSequence) -> tuple[np.ndarray, float]:
    mats = [np.zeros((8, 8)) if lab is None else lab.matrix() for lab in seq.chain()]
    G, log_s = np.eye(8), 0.0
    for prev, nxt in zip(mats, mats[1:]):
        V11, _ = transition_blocks(nxt, prev)
        G, ds = _renormalize(V11 @ G, 8)
        log_s += ds
    return G, log_s


def evaluate(seq: ProjectionSequence, atol: float = 1e-10) -> EvaluatedGate:
    """Gate of the sequence on the P_0 block, computed two independent ways."""
    dense, log_d = _dense_chain(seq)
    blocks, log_b = _block_chain(seq)
    gap = max(maxabs(dense - blocks), abs(log_d - log_b) / max(1.0, abs(log_b)))
    if gap > atol:
        raise MethodMismatch(f"dense chain and transition-block product differ by {gap:.3e}")
    return EvaluatedGate(normalized=blocks, log_scale=log_b, dense=dense, via_blocks=blocks)


def round_trip_error(program: GateProgram, options: SynthesisOptions | None = None) -> float:
    ev = evaluate(compile_program(program, options))
    return maxabs(ev.normalized - program_gate(program))


@dataclass
class StepAngle:
    index: int
    first: str
    second: str
    alpha2: float
    theta: float
    expected_alpha2: float


def _label_name(lab: Label | None) -> str:
    return "P0" if lab is None else lab.name()


def expected_alpha2(a: Label | None, b: Label | None) -> float:
    """Closed-form cos^2 of the dihedral angle between P_a and P_b (None is P_0).

    From (I + A^T B)(I + B^T A) = (1 + 2 c_a c_b [axis_a == axis_b] + c_a^2 c_b^2) I.
    """
    ca = 0.0 if a is None else a.c
    cb = 0.0 if b is None else b.c
    same = a is not None and b is not None and a.axis == b.axis
    num = 1.0 + (2.0 * ca * cb if same else 0.0) + ca * ca * cb * cb
    return num / ((1.0 + ca * ca) * (1.0 + cb * cb))


def sequence_angles(seq: ProjectionSequence, tol: float = 1e-9) -> list[StepAngle]:
    """Dihedral angle of every consecutive pair of the chain (P_0 separators included)."""
    chain = seq.chain()
    out = []
    for i, (a, b) in enumerate(zip(chain, chain[1:])):
        Pa = base_projection(8) if a is None else a.projection()
        Pb = base_projection(8) if b is None else b.projection()
        rep = is_equiangular(Pa, Pb, tol)
        exp = expected_alpha2(a, b)
        if not rep.is_equiangular:
            raise SynthesisError(f"step {i} ({_label_name(a)} -> {_label_name(b)}) is not equiangular")
        if abs(rep.alpha2 - exp) > 1e-8:
            raise SynthesisError(
                f"step {i}: alpha^2 = {rep.alpha2:.12f}, expected {exp:.12f}")
        out.append(StepAngle(i + 1, _label_name(a), _label_name(b), rep.alpha2, rep.theta, exp))
    return out


# SO(8) decomposition ----------------------------------------------------------

def _real_log(R: np.ndarray) -> np.ndarray:
    L = scipy.linalg.logm(R)
    L = np.real(L)
    return (L - L.T) / 2


def _check_special_orthogonal(R: np.ndarray, tol: float) -> None:
    if R.shape != (8, 8):
        raise NotSpecialOrthogonal(f"target must be 8x8, got {R.shape}")
    orth = maxabs(R @ R.T - np.eye(8))
    if orth > tol:
        raise NotSpecialOrthogonal(f"target is not orthogonal (residual {orth:.3e})")
    if np.linalg.det(R) < 0:
        raise NotSpecialOrthogonal("target has determinant -1")


def _split_terms(coeffs: np.ndarray, m: int) -> list[GeneratorTerm]:
    terms = []
    for _ in range(m):
        for (i, j), c in zip(LIE_PAIRS, coeffs):
            if c != 0.0:
                terms.append(GeneratorTerm(i, j, float(c) / m))
    return terms


def _near_minus_one(R: np.ndarray, gap: float = 1e-6) -> bool:
    return bool(np.min(np.abs(np.linalg.eigvals(R) + 1.0)) < gap)


def decompose_so8(target, options: SynthesisOptions | None = None) -> GateProgram:
    """Write ``target`` in SO(8) as a product of exp(t E_i E_j) factors.

    Principal log, Lie coordinates, first-order product splitting, then
    fixed-point refinement on the residual ``target @ product^-1``.
    """
    options = options or SynthesisOptions()
    R = np.asarray(target, dtype=float)
    _check_special_orthogonal(R, max(1e-9, options.tolerance))
    terms: list[GeneratorTerm] = []
    current = np.eye(8)

    if _near_minus_one(R):
        # log is discontinuous at eigenvalue -1; peel off a known generic rotation first
        for n, (i, j) in enumerate(LIE_PAIRS):
            kick = GeneratorTerm(i, j, 0.1 + 0.01 * n)
            if not _near_minus_one(R @ exp_generator(kick).T):
                terms.append(kick)
                current = exp_generator(kick)
                break

    residual = maxabs(R - current)
    while residual > options.tolerance:
        remaining = options.max_factors - len(terms)
        if remaining <= 0:
            break
        step = R @ current.T
        c = lie_coordinates(_real_log(step))
        nnz = max(1, int(np.count_nonzero(c)))
        l1 = float(np.sum(np.abs(c)))
        # first-order splitting error is bounded by l1^2 / m (unit-norm generators)
        wanted = max(1, math.ceil(l1 * l1 / (options.tolerance / 2)))
        m = max(1, min(wanted, remaining // (4 * nnz)))
        if m * nnz > remaining:
            m = remaining // nnz
            if m == 0:
                break
        new = _split_terms(c, m)
        for term in new:
            current = exp_generator(term) @ current
        terms += new
        new_residual = maxabs(R - current)
        if new_residual >= residual and m * nnz >= remaining:
            residual = new_residual
            break
        residual = new_residual

    program = GateProgram(terms)
    if residual > options.tolerance:
        raise BudgetExceeded(
            f"residual {residual:.3e} above tolerance {options.tolerance:.1e} after {len(terms)} factors",
            program=program, residual=residual)
    return program


# SU(4) embedding -----------------------------------------------------------------

def embed_su4(A, tol: float = 1e-10) -> np.ndarray:
    """Real 8x8 form ((A1, -A2), (A2, A1)) of A = A1 + i A2.

    Coordinates are (Re |00>, Re |01>, Re |10>, Re |11>, Im |00>, ...); see
    :func:`encoding_permutation` for the octonion ordering.
    """
    A = np.asarray(A, dtype=complex)
    if A.shape != (4, 4):
        raise NotUnitary(f"expected a 4x4 matrix, got {A.shape}")
    res = maxabs(A @ A.conj().T - np.eye(4))
    if res > tol:
        raise NotUnitary(f"A is not unitary (residual {res:.3e})")
    A1, A2 = A.real, A.imag
    return np.block([[A1, -A2], [A2, A1]])


def encoding_permutation() -> np.ndarray:
    """Permutation matrix from block coordinates to octonion basis order.

    |00>, |01>, |10>, |11> go to e_0, e_2, e_4, e_6 and their imaginary
    parts to e_1, e_3, e_5, e_7.
    """
    perm = np.zeros((8, 8))
    for q in range(4):
        perm[2 * q, q] = 1.0
        perm[2 * q + 1, 4 + q] = 1.0
    return perm


def random_su4(rng: np.random.Generator) -> np.ndarray:
    Z = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    Q, R = np.linalg.qr(Z)
    Q = Q * (np.diag(R) / np.abs(np.diag(R)))
    return Q / np.linalg.det(Q) ** 0.25


def random_skew(rng: np.random.Generator, norm: float = 2.0) -> np.ndarray:
    """Random 8x8 skew matrix with spectral norm ``norm``."""
    X = rng.standard_normal((8, 8))
    S = X - X.T
    return S * (norm / np.linalg.norm(S, 2))


def random_program(rng: np.random.Generator, max_terms: int = 8) -> GateProgram:
    n = int(rng.integers(1, max_terms + 1))
    terms = []
    for _ in range(n):
        k, j = rng.choice(8, size=2, replace=False)
        terms.append(GeneratorTerm(int(k), int(j), float(rng.uniform(-math.pi / 2, math.pi / 2))))
    return GateProgram(terms)


__all__ = [
    "BudgetExceeded", "EvaluatedGate", "GateProgram", "GeneratorTerm", "Label", "MethodMismatch",
    "NotSpecialOrthogonal", "NotUnitary", "ProjectionSequence", "ScaleNotPositive", "StepAngle",
    "SynthesisError", "SynthesisOptions", "compile_program", "compiled_angles", "decompose_so8",
    "embed_su4", "encoding_permutation", "evaluate", "expected_alpha2", "exp_generator", "generator", "lie_basis",
    "lie_coordinates", "program_gate", "random_program", "random_skew", "random_su4",
    "round_trip_error", "sequence_angles", "matrep", "DEFAULT_TOL",
]
