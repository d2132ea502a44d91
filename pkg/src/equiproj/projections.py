"""Orthogonal projections, principal angles and (strong) equiangularity.

Residuals are measured with the max-abs entry norm throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .octonions import as_vector, matrep, norm2

DEFAULT_TOL = 1e-9


class ProjectionError(ValueError):
    pass


class NotHermitian(ProjectionError):
    pass


class NotIdempotent(ProjectionError):
    pass


class NonIntegerTrace(ProjectionError):
    pass


class DimensionMismatch(ValueError):
    pass


class NotEquiangular(ValueError):
    pass


class NotScaledUnitary(ValueError):
    pass


class ZeroOctonion(ValueError):
    pass


def maxabs(M) -> float:
    M = np.asarray(M)
    return float(np.max(np.abs(M))) if M.size else 0.0


def field_of(M: np.ndarray) -> str:
    return "C" if np.iscomplexobj(M) else "R"


@dataclass(frozen=True, eq=False)
class Projection:
    """A validated Hermitian idempotent; build with :func:`make_projection`."""

    matrix: np.ndarray
    rank: int
    tol: float = DEFAULT_TOL

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def field(self) -> str:
        return field_of(self.matrix)

    def complement(self) -> "Projection":
        return Projection(np.eye(self.dim, dtype=self.matrix.dtype) - self.matrix, self.dim - self.rank, self.tol)

    def range_basis(self) -> np.ndarray:
        """Orthonormal columns spanning the range (eigenvalues above 1/2)."""
        w, V = np.linalg.eigh(self.matrix)
        return V[:, w > 0.5]

    def as_complex(self) -> "Projection":
        return Projection(self.matrix.astype(complex), self.rank, self.tol)


def make_projection(matrix, tol: float = DEFAULT_TOL) -> Projection:
    M = np.array(matrix)
    if M.dtype.kind not in "fc":
        M = M.astype(float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"projection must be square, got shape {M.shape}")
    herm = maxabs(M - M.conj().T)
    if herm > tol:
        raise NotHermitian(f"P is not Hermitian: max|P - P^H| = {herm:.3e} > {tol:.1e}")
    idem = maxabs(M @ M - M)
    if idem > tol:
        raise NotIdempotent(f"P is not idempotent: max|P^2 - P| = {idem:.3e} > {tol:.1e}")
    tr = float(np.real(np.trace(M)))
    rank = int(round(tr))
    # looser than tol: trace error grows with dimension
    if abs(tr - rank) > max(tol, 1e-12) * max(1, M.shape[0]):
        raise NonIntegerTrace(f"trace {tr!r} is not an integer")
    M = M.copy()
    M.setflags(write=False)
    return Projection(M, rank, tol)


def projection_onto(columns, tol: float = DEFAULT_TOL) -> Projection:
    """Orthogonal projection onto the span of the given columns."""
    X = np.atleast_2d(np.asarray(columns))
    Q, _ = np.linalg.qr(X)
    return make_projection(Q @ Q.conj().T, tol)


def _common_matrices(P: Projection, Q: Projection):
    if P.dim != Q.dim:
        raise DimensionMismatch(f"ambient dimensions differ: {P.dim} vs {Q.dim}")
    A, B = P.matrix, Q.matrix
    if np.iscomplexobj(A) or np.iscomplexobj(B):
        A, B = A.astype(complex), B.astype(complex)
    return A, B


def principal_cosines(P: Projection, Q: Projection) -> np.ndarray:
    """Cosines of the principal angles, descending, min(rank P, rank Q) values."""
    _common_matrices(P, Q)
    X, Y = P.range_basis(), Q.range_basis()
    k = min(X.shape[1], Y.shape[1])
    if k == 0:
        return np.zeros(0)
    s = np.linalg.svd(X.conj().T @ Y, compute_uv=False)[:k]
    return np.clip(s, 0.0, 1.0)


@dataclass
class EquiangularReport:
    is_equiangular: bool
    is_strong: bool
    alpha: float
    theta: float
    principal_cosines: list[float]
    rank_P: int
    rank_Q: int
    residual: float = 0.0
    complement_residual: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def alpha2(self) -> float:
        return self.alpha ** 2

    def to_json(self) -> dict:
        return {
            "is_equiangular": self.is_equiangular,
            "is_strong": self.is_strong,
            "alpha": self.alpha,
            "alpha2": self.alpha2,
            "theta": self.theta,
            "principal_cosines": list(self.principal_cosines),
            "rank_P": self.rank_P,
            "rank_Q": self.rank_Q,
            "residual": self.residual,
            "complement_residual": self.complement_residual,
            "notes": list(self.notes),
        }


def _scalar_fit(A, B, rank_A):
    """alpha^2 = tr(ABA)/rank(A) and the residuals of ABA, BAB against it."""
    ABA = A @ B @ A
    BAB = B @ A @ B
    a2 = float(np.real(np.trace(ABA))) / rank_A if rank_A else 0.0
    a2 = min(max(a2, 0.0), 1.0)
    return a2, max(maxabs(ABA - a2 * A), maxabs(BAB - a2 * B))


def is_equiangular(P: Projection, Q: Projection, tol: float = DEFAULT_TOL) -> EquiangularReport:
    A, B = _common_matrices(P, Q)
    a2, res = _scalar_fit(A, B, P.rank)
    ok = res <= tol
    alpha = float(np.sqrt(a2))
    cos = principal_cosines(P, Q)
    return EquiangularReport(
        is_equiangular=ok, is_strong=False, alpha=alpha,
        theta=float(np.arccos(min(alpha, 1.0))),
        principal_cosines=[float(c) for c in cos],
        rank_P=P.rank, rank_Q=Q.rank, residual=res,
    )


def is_strongly_equiangular(P: Projection, Q: Projection, tol: float = DEFAULT_TOL) -> EquiangularReport:
    rep = is_equiangular(P, Q, tol)
    A, B = _common_matrices(P, Q)
    n = P.dim
    I = np.eye(n)
    c2, cres = _scalar_fit(I - A, I - B, n - P.rank)
    rep.complement_residual = cres
    if not rep.is_equiangular:
        return rep
    a2 = rep.alpha ** 2
    if not (tol < a2 < 1 - tol):
        rep.notes.append("alpha is 0 or 1; strong equiangularity needs 0 < alpha < 1")
        return rep
    if cres > tol:
        rep.notes.append("complements are not equiangular")
        return rep
    if not (2 * P.rank == n and 2 * Q.rank == n):
        # cannot happen for a genuinely strong pair; kept as an explicit check
        rep.notes.append(f"ranks {P.rank}, {Q.rank} are not half of {n}")
        return rep
    rep.is_strong = True
    return rep


def dihedral_angle(P: Projection, Q: Projection, tol: float = DEFAULT_TOL) -> float:
    rep = is_equiangular(P, Q, tol)
    if not rep.is_equiangular:
        raise NotEquiangular(f"no common dihedral angle (residual {rep.residual:.3e})")
    return rep.theta


@dataclass
class CanonicalForm:
    W: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    alpha: float
    B: np.ndarray
    D: np.ndarray
    block_residuals: dict


def _canonical_sign(V: np.ndarray) -> np.ndarray:
    V = V.copy()
    for c in range(V.shape[1]):
        k = int(np.argmax(np.abs(V[:, c]) > 1e-12))
        ph = V[k, c] / abs(V[k, c])
        V[:, c] = V[:, c] / ph
    return V


def _range_kernel_basis(Q: Projection) -> np.ndarray:
    M = Q.matrix
    diag = np.real(np.diag(M))
    if maxabs(M - np.diag(np.diag(M))) <= Q.tol:
        # already diagonal: permute coordinates, range first, ascending index within each part
        rng_idx = [i for i in range(Q.dim) if diag[i] > 0.5]
        ker_idx = [i for i in range(Q.dim) if diag[i] <= 0.5]
        return np.eye(Q.dim, dtype=M.dtype)[:, rng_idx + ker_idx]
    w, V = np.linalg.eigh(M)
    V = _canonical_sign(V)
    return np.hstack([V[:, w > 0.5], V[:, w <= 0.5]])


def canonical_pair_form(P: Projection, Q: Projection, tol: float = DEFAULT_TOL) -> CanonicalForm:
    """Rotate so Q = diag(I_d, 0) and read off the blocks of P.

    For an equiangular pair, P' = ((a^2 I, B), (B^H, D)) with
    B B^H = (a^2 - a^4) I, B^H B = a^2 D and D^2 = (1 - a^2) D.
    """
    rep = is_equiangular(P, Q, tol)
    if not rep.is_equiangular:
        raise NotEquiangular(f"pair is not equiangular (residual {rep.residual:.3e})")
    W = _range_kernel_basis(Q)
    Wh = W.conj().T
    Pc = Wh @ P.matrix @ W
    Qc = Wh @ Q.matrix @ W
    d = Q.rank
    a2 = rep.alpha2
    top, B, D = Pc[:d, :d], Pc[:d, d:], Pc[d:, d:]
    res = {
        "unitary": maxabs(Wh @ W - np.eye(W.shape[0])),
        "Q_diagonal": maxabs(Qc - np.diag([1.0] * d + [0.0] * (Q.dim - d))),
        "top_left_scalar": maxabs(top - a2 * np.eye(d)),
        "BBH": maxabs(B @ B.conj().T - (a2 - a2 * a2) * np.eye(d)),
        "BHB": maxabs(B.conj().T @ B - a2 * D),
        "D_squared": maxabs(D @ D - (1 - a2) * D),
    }
    return CanonicalForm(W=W, P=Pc, Q=Qc, alpha=rep.alpha, B=B, D=D, block_residuals=res)


# graph-of-line projections -------------------------------------------------

def graph_projection(A, tol: float = DEFAULT_TOL) -> Projection:
    """Projection onto {(x, A x)} in twice the dimension of A."""
    A = np.asarray(A)
    d = A.shape[0]
    Ah = A.conj().T
    Tinv = np.linalg.inv(np.eye(d) + Ah @ A)
    M = np.block([[Tinv, Tinv @ Ah], [A @ Tinv, A @ Tinv @ Ah]])
    M = (M + M.conj().T) / 2
    return make_projection(M, tol)


def base_projection(d: int) -> Projection:
    """P_0 = diag(I_d, 0) on a 2d-dimensional space."""
    return graph_projection(np.zeros((d, d)))


def scaled_unitary_norm2(A, tol: float = DEFAULT_TOL) -> float:
    """Return s with A A^H = s I, or raise NotScaledUnitary."""
    A = np.asarray(A)
    G = A @ A.conj().T
    s = float(np.real(np.trace(G))) / A.shape[0]
    if maxabs(G - s * np.eye(A.shape[0])) > tol * max(1.0, s):
        raise NotScaledUnitary(f"A A^H is not a multiple of I (residual {maxabs(G - s * np.eye(A.shape[0])):.3e})")
    return s


def graph_diagonalizer(A, tol: float = DEFAULT_TOL) -> np.ndarray:
    """U_a with U_a P_0 U_a^H = graph_projection(A), for scaled-unitary A."""
    A = np.asarray(A)
    s = scaled_unitary_norm2(A, tol)
    d = A.shape[0]
    I = np.eye(d)
    return np.block([[I, -A.conj().T], [A, I]]) / np.sqrt(1.0 + s)


def transition_blocks(A, B, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal blocks (V11, V22) of U_a^H U_b."""
    A, B = np.asarray(A), np.asarray(B)
    sa = scaled_unitary_norm2(A, tol)
    sb = scaled_unitary_norm2(B, tol)
    d = A.shape[0]
    den = np.sqrt((1.0 + sa) * (1.0 + sb))
    V11 = (np.eye(d) + A.conj().T @ B) / den
    V22 = (np.eye(d) + A @ B.conj().T) / den
    return V11, V22


def line_pair_check(A, B, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Strong equiangularity of the graphs of A and B via I + A^H B.

    Returns (verdict, alpha); alpha is meaningful when the verdict is True.
    """
    A, B = np.asarray(A), np.asarray(B)
    sa = scaled_unitary_norm2(A, tol)
    sb = scaled_unitary_norm2(B, tol)
    M = np.eye(A.shape[0]) + A.conj().T @ B
    G = M @ M.conj().T
    s = float(np.real(np.trace(G))) / A.shape[0]
    ok = maxabs(G - s * np.eye(A.shape[0])) <= tol * max(1.0, s)
    alpha = float(np.sqrt(s / ((1.0 + sa) * (1.0 + sb))))
    return bool(ok and s > tol), alpha


def octonion_projection(a, tol: float = DEFAULT_TOL) -> Projection:
    return graph_projection(matrep(a), tol)


def complement_octonion(a) -> np.ndarray:
    """b with I - P_a = P_b.

    The complement of the graph {(x, A x)} is {(-A^T y, y)}, the graph of
    -(A^T)^-1 = -A / |a|^2, so b = -a / |a|^2.
    """
    v = as_vector(a)
    n2 = norm2(v)
    if n2 == 0:
        raise ZeroOctonion("complement identity needs a nonzero octonion")
    return -v / n2


def complement_identity_check(a, tol: float = 1e-12) -> bool:
    """I - P_a == P_{-a/|a|^2}."""
    v = as_vector(a)
    P = octonion_projection(v).matrix
    Pc = octonion_projection(complement_octonion(v)).matrix
    return maxabs(np.eye(16) - P - Pc) <= tol * max(1.0, norm2(v), 1.0 / norm2(v))


# direct sum / tensor constructions ------------------------------------------

def _block_diag(A, B):
    out = np.zeros((A.shape[0] + B.shape[0],) * 2, dtype=np.result_type(A, B))
    out[:A.shape[0], :A.shape[0]] = A
    out[A.shape[0]:, A.shape[0]:] = B
    return out


def pair_direct_sum(pair1, pair2, tol: float = DEFAULT_TOL):
    (P1, Q1), (P2, Q2) = pair1, pair2
    P = make_projection(_block_diag(P1.matrix, P2.matrix), tol)
    Q = make_projection(_block_diag(Q1.matrix, Q2.matrix), tol)
    return (P, Q), is_strongly_equiangular(P, Q, tol)


def pair_tensor(pair1, pair2, tol: float = DEFAULT_TOL):
    (P1, Q1), (P2, Q2) = pair1, pair2
    P = make_projection(np.kron(P1.matrix, P2.matrix), tol)
    Q = make_projection(np.kron(Q1.matrix, Q2.matrix), tol)
    return (P, Q), is_strongly_equiangular(P, Q, tol)
