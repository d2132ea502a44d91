"""Octonion arithmetic and the real matrix representations of C, H and O.

The multiplication table is generated from the Fano-plane cycle list and
cross-checked at import against a hand-transcribed copy of the reference
table, so a typo in either encoding fails loudly.
"""
from __future__ import annotations

import numpy as np

ATOL = 1e-12

# (i, j, k) with e_i e_j = e_k; cyclic permutations implied.
FANO_CYCLES = ((1, 2, 3), (1, 4, 5), (1, 7, 6), (2, 4, 6), (2, 5, 7), (3, 4, 7), (3, 6, 5))

# Row e_i, column e_j of the reference table, as signed basis indices.
# "-0" is spelled out as a string so the sign of e_0 survives.
_REFERENCE_TABLE = """
 e0  e1  e2  e3  e4  e5  e6  e7
 e1 -e0  e3 -e2  e5 -e4 -e7  e6
 e2 -e3 -e0  e1  e6  e7 -e4 -e5
 e3  e2 -e1 -e0  e7 -e6  e5 -e4
 e4 -e5 -e6 -e7 -e0  e1  e2  e3
 e5  e4 -e7  e6 -e1 -e0 -e3  e2
 e6  e7  e4 -e5 -e2  e3 -e0 -e1
 e7 -e6  e5  e4 -e3 -e2  e1 -e0
"""


def _parse_reference() -> tuple[np.ndarray, np.ndarray]:
    index = np.zeros((8, 8), dtype=np.int64)
    sign = np.zeros((8, 8), dtype=np.int64)
    rows = [r.split() for r in _REFERENCE_TABLE.strip().splitlines()]
    for i, row in enumerate(rows):
        for j, tok in enumerate(row):
            sign[i, j] = -1 if tok.startswith("-") else 1
            index[i, j] = int(tok.lstrip("-")[1:])
    return index, sign


def _table_from_cycles(cycles=FANO_CYCLES) -> tuple[np.ndarray, np.ndarray]:
    index = np.zeros((8, 8), dtype=np.int64)
    sign = np.zeros((8, 8), dtype=np.int64)
    for i in range(8):
        index[0, i], sign[0, i] = i, 1
        index[i, 0], sign[i, 0] = i, 1
    for i in range(1, 8):
        index[i, i], sign[i, i] = 0, -1
    for a, b, c in cycles:
        for i, j, k in ((a, b, c), (b, c, a), (c, a, b)):
            index[i, j], sign[i, j] = k, 1
            index[j, i], sign[j, i] = k, -1
    return index, sign


REFERENCE_INDEX, REFERENCE_SIGN = _parse_reference()
MULT_INDEX, MULT_SIGN = _table_from_cycles()

if not (np.array_equal(MULT_INDEX, REFERENCE_INDEX) and np.array_equal(MULT_SIGN, REFERENCE_SIGN)):
    raise RuntimeError("octonion table generated from Fano cycles disagrees with the reference table")


def structure_constants(index: np.ndarray | None = None, sign: np.ndarray | None = None) -> np.ndarray:
    """Tensor C with e_i e_j = sum_k C[i, j, k] e_k."""
    index = MULT_INDEX if index is None else index
    sign = MULT_SIGN if sign is None else sign
    C = np.zeros((8, 8, 8))
    for i in range(8):
        for j in range(8):
            C[i, j, index[i, j]] = sign[i, j]
    return C


_C = structure_constants()


class Octonion:
    """An element sum_i o_i e_i with eight real coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=float).reshape(-1)
        if c.shape != (8,):
            raise ValueError(f"an octonion needs 8 coefficients, got {c.size}")
        if not np.all(np.isfinite(c)):
            raise ValueError("octonion coefficients must be finite")
        c.setflags(write=False)
        self.coeffs = c

    @classmethod
    def basis(cls, i: int, c: float = 1.0) -> "Octonion":
        v = np.zeros(8)
        v[i] = c
        return cls(v)

    def __mul__(self, other):
        if isinstance(other, Octonion):
            return oct_mul(self, other)
        return Octonion(self.coeffs * float(other))

    def __rmul__(self, other):
        return Octonion(self.coeffs * float(other))

    def __add__(self, other: "Octonion") -> "Octonion":
        return Octonion(self.coeffs + as_vector(other))

    def __sub__(self, other: "Octonion") -> "Octonion":
        return Octonion(self.coeffs - as_vector(other))

    def __neg__(self) -> "Octonion":
        return Octonion(-self.coeffs)

    def __truediv__(self, scalar: float) -> "Octonion":
        return Octonion(self.coeffs / float(scalar))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Octonion):
            return NotImplemented
        return bool(np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self) -> str:
        terms = [f"{c:+g}*e{i}" for i, c in enumerate(self.coeffs) if c != 0]
        return "Octonion(" + (" ".join(terms) if terms else "0") + ")"

    def conj(self) -> "Octonion":
        return oct_conj(self)

    def norm2(self) -> float:
        return norm2(self)

    def isclose(self, other, atol: float = ATOL) -> bool:
        return bool(np.allclose(self.coeffs, as_vector(other), rtol=0.0, atol=atol))

    def to_json(self) -> list[float]:
        return [float(x) for x in self.coeffs]

    @classmethod
    def from_json(cls, data) -> "Octonion":
        return cls(data)


def as_vector(a) -> np.ndarray:
    if isinstance(a, Octonion):
        return a.coeffs
    v = np.asarray(a, dtype=float).reshape(-1)
    if v.shape != (8,):
        raise ValueError(f"an octonion needs 8 coefficients, got {v.size}")
    return v


def oct_mul(a, b) -> Octonion:
    return Octonion(np.einsum("i,j,ijk->k", as_vector(a), as_vector(b), _C))


def oct_conj(a) -> Octonion:
    v = -as_vector(a)
    v[0] = -v[0]
    return Octonion(v)


def norm2(a) -> float:
    v = as_vector(a)
    return float(v @ v)


def matrep(a) -> np.ndarray:
    """8x8 real matrix of left multiplication x -> a x.

    Column l is the coefficient vector of a e_l, so column 0 is ``a`` itself.
    """
    return np.einsum("i,ilk->kl", as_vector(a), _C)


def basis_matrix(i: int) -> np.ndarray:
    """E_i, the left-multiplication matrix of e_i."""
    return matrep(Octonion.basis(i))


def _check_subalgebra(v: np.ndarray, dim: int, name: str) -> None:
    if np.any(v[dim:] != 0):
        raise ValueError(f"{name} representation needs o_{dim}..o_7 = 0, got {v.tolist()}")


def quat_matrep(a) -> np.ndarray:
    """4x4 real representation of a quaternion (coefficients e_0..e_3)."""
    v = as_vector(a)
    _check_subalgebra(v, 4, "quaternion")
    return matrep(v)[:4, :4]


def complex_matrep(a) -> np.ndarray:
    """2x2 real representation ((a0, -a1), (a1, a0)) of a complex number."""
    v = as_vector(a)
    _check_subalgebra(v, 2, "complex")
    return matrep(v)[:2, :2]


def find_nonmultiplicative_pair(rng: np.random.Generator, tries: int = 100, atol: float = 1e-9):
    """Search random octonions for a pair with matrep(a) matrep(b) != matrep(ab)."""
    for _ in range(tries):
        a = Octonion(rng.standard_normal(8))
        b = Octonion(rng.standard_normal(8))
        gap = np.max(np.abs(matrep(a) @ matrep(b) - matrep(oct_mul(a, b))))
        if gap > atol:
            return a, b, float(gap)
    return None


def verify_suite(index: np.ndarray | None = None, sign: np.ndarray | None = None,
                 n_random: int = 1000, seed: int = 0, atol: float = ATOL) -> dict[str, dict]:
    """Run the octonion and Lie-basis identities; returns {name: {"ok": bool, ...}}.

    ``index``/``sign`` override the multiplication table so a corrupted table
    can be fed through the same checks.
    """
    index = MULT_INDEX if index is None else index
    sign = MULT_SIGN if sign is None else sign
    C = structure_constants(index, sign)
    rng = np.random.default_rng(seed)
    results: dict[str, dict] = {}

    mismatches = [(i, j) for i in range(8) for j in range(8)
                  if index[i, j] != REFERENCE_INDEX[i, j] or sign[i, j] != REFERENCE_SIGN[i, j]]
    results["table_matches_reference"] = {"ok": not mismatches, "mismatches": mismatches[:10]}

    def rep(v):
        return np.einsum("i,ilk->kl", v, C)

    def mul(u, v):
        return np.einsum("i,j,ijk->k", u, v, C)

    A = rng.standard_normal((n_random, 8))
    X = rng.standard_normal((n_random, 8))
    equiv = max(np.max(np.abs(rep(a) @ x - mul(a, x))) for a, x in zip(A, X))
    results["matrep_equivariance"] = {"ok": equiv <= atol, "max_residual": float(equiv)}

    orth = max(np.max(np.abs(rep(a) @ rep(a).T - (a @ a) * np.eye(8))) for a in A)
    results["matrep_scaled_orthogonal"] = {"ok": orth <= atol * 10, "max_residual": float(orth)}

    conj_gap = 0.0
    for a in A[:100]:
        ac = -a.copy()
        ac[0] = a[0]
        conj_gap = max(conj_gap, np.max(np.abs(rep(ac) - rep(a).T)))
    results["conjugate_is_transpose"] = {"ok": conj_gap <= atol, "max_residual": float(conj_gap)}

    e = np.eye(8)
    squares = all(np.allclose(mul(e[i], e[i]), -e[0], atol=atol) for i in range(1, 8))
    results["imaginary_units_square_to_minus_one"] = {"ok": bool(squares)}

    # (e_i e_l)(e_l e_j) is proportional to e_i e_j
    bad = []
    for i in range(8):
        for l in range(8):
            for j in range(8):
                lhs = mul(mul(e[i], e[l]), mul(e[l], e[j]))
                rhs = mul(e[i], e[j])
                if abs(abs(lhs @ rhs) - 1.0) > atol:
                    bad.append((i, l, j))
    results["moufang_like_proportionality"] = {"ok": not bad, "violations": bad[:10]}

    basis = [rep(e[i]) @ rep(e[j]) for i in range(8) for j in range(i + 1, 8)]
    skew = max(np.max(np.abs(h + h.T)) for h in basis)
    sq = max(np.max(np.abs(h @ h + np.eye(8))) for h in basis)
    rank = int(np.linalg.matrix_rank(np.array([h.ravel() for h in basis]), tol=1e-8))
    results["lie_basis"] = {"ok": len(basis) == 28 and skew <= atol and sq <= atol and rank == 28,
                            "count": len(basis), "rank": rank,
                            "max_skew_residual": float(skew), "max_square_residual": float(sq)}
    return results
