import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from equiproj import projections as pj
from equiproj.octonions import Octonion, matrep

coeffs = arrays(np.float64, (8,), elements=st.floats(-5, 5, allow_nan=False))


def tilted_plane(theta1, theta2):
    """span(cos t1 e1 + sin t1 e3, cos t2 e2 + sin t2 e4) in R^4."""
    cols = np.array([[np.cos(theta1), 0, np.sin(theta1), 0],
                     [0, np.cos(theta2), 0, np.sin(theta2)]]).T
    return pj.projection_onto(cols)


def coordinate_plane():
    return pj.projection_onto(np.eye(4)[:, :2])


class TestMakeProjection:
    def test_rank_from_trace(self):
        P = pj.make_projection(np.diag([1.0, 1.0, 0.0]))
        assert P.rank == 2 and P.dim == 3 and P.field == "R"

    def test_read_only(self):
        P = pj.make_projection(np.eye(2))
        with pytest.raises(ValueError):
            P.matrix[0, 0] = 0

    @pytest.mark.parametrize("M,err", [
        (np.array([[1.0, 1.0], [0.0, 0.0]]), pj.NotHermitian),
        (np.eye(2) * 0.5, pj.NotIdempotent),
        (np.ones((2, 3)), pj.DimensionMismatch),
    ])
    def test_rejects(self, M, err):
        with pytest.raises(err):
            pj.make_projection(M)

    def test_complex_projection(self):
        v = np.array([1, 1j]) / np.sqrt(2)
        P = pj.make_projection(np.outer(v, v.conj()))
        assert P.field == "C" and P.rank == 1


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 1.5))
def test_tilted_planes_are_strongly_equiangular(theta):
    rep = pj.is_strongly_equiangular(coordinate_plane(), tilted_plane(theta, theta))
    assert rep.is_equiangular and rep.is_strong
    assert rep.alpha == pytest.approx(np.cos(theta), abs=1e-10)
    assert np.allclose(rep.principal_cosines, np.cos(theta), atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 1.5), st.floats(0.05, 0.5))
def test_unequal_angles_are_not_equiangular(theta, gap):
    rep = pj.is_strongly_equiangular(coordinate_plane(), tilted_plane(theta, theta + gap))
    assert not rep.is_equiangular and not rep.is_strong
    with pytest.raises(pj.NotEquiangular):
        pj.dihedral_angle(coordinate_plane(), tilted_plane(theta, theta + gap))


def test_lines_in_odd_dimension_are_equiangular_but_not_strong():
    P = pj.projection_onto(np.array([[1.0, 0, 0]]).T)
    Q = pj.projection_onto(np.array([[1.0, 1.0, 0]]).T)
    rep = pj.is_strongly_equiangular(P, Q)
    assert rep.is_equiangular and not rep.is_strong
    assert rep.alpha2 == pytest.approx(0.5)


def test_dimension_mismatch():
    with pytest.raises(pj.DimensionMismatch):
        pj.is_equiangular(pj.make_projection(np.eye(2)), pj.make_projection(np.eye(3)))


@settings(max_examples=50, deadline=None)
@given(coeffs)
def test_graph_projection_matches_orthogonal_projection_onto_graph(a):
    A = matrep(a)
    P = pj.graph_projection(A)
    Q = pj.projection_onto(np.vstack([np.eye(8), A]))
    assert np.allclose(P.matrix, Q.matrix, atol=1e-9)
    assert P.rank == 8


@pytest.mark.parametrize("c", [0.3, 1.0, -2.0, 7.5])
@pytest.mark.parametrize("j", [1, 4, 7])
def test_dihedral_from_base_is_arctan(c, j):
    theta = pj.dihedral_angle(pj.base_projection(8), pj.octonion_projection(Octonion.basis(j, c)))
    assert theta == pytest.approx(np.arctan(abs(c)), abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(coeffs, coeffs)
def test_line_pair_check_agrees_with_dense(a, b):
    A, B = matrep(a), matrep(b)
    if min(np.linalg.norm(a), np.linalg.norm(b)) < 1e-3:
        return
    ok, alpha = pj.line_pair_check(A, B)
    rep = pj.is_strongly_equiangular(pj.graph_projection(A), pj.graph_projection(B))
    if rep.is_equiangular and rep.alpha > 1e-4:
        assert ok
        assert alpha == pytest.approx(rep.alpha, abs=1e-8)


def test_graph_diagonalizer_and_transition_blocks(rng):
    a, b = rng.standard_normal(8), rng.standard_normal(8)
    A, B = matrep(a), matrep(b)
    Ua, Ub = pj.graph_diagonalizer(A), pj.graph_diagonalizer(B)
    P0 = pj.base_projection(8).matrix
    assert np.allclose(Ua @ Ua.T, np.eye(16))
    assert np.allclose(Ua @ P0 @ Ua.T, pj.graph_projection(A).matrix)
    W = Ua.T @ Ub
    V11, V22 = pj.transition_blocks(A, B)
    assert np.allclose(W[:8, :8], V11)
    assert np.allclose(W[8:, 8:], V22)


def test_scaled_unitary_rejects_generic_matrix(rng):
    with pytest.raises(pj.NotScaledUnitary):
        pj.scaled_unitary_norm2(rng.standard_normal((3, 3)))


@pytest.mark.parametrize("theta", [0.2, 0.7, 1.3])
def test_canonical_form_blocks(theta):
    cf = pj.canonical_pair_form(tilted_plane(theta, theta), coordinate_plane())
    assert max(cf.block_residuals.values()) < 1e-10
    assert cf.alpha == pytest.approx(np.cos(theta))


def test_canonical_form_for_octonion_pair(rng):
    P = pj.octonion_projection(rng.standard_normal(8))
    Q = pj.octonion_projection(rng.standard_normal(8))
    cf = pj.canonical_pair_form(P, Q)
    assert max(cf.block_residuals.values()) < 1e-9


@settings(max_examples=50, deadline=None)
@given(coeffs)
def test_complement_is_graph_of_negated_inverse(a):
    if np.linalg.norm(a) < 1e-2:
        return
    assert pj.complement_identity_check(a, tol=1e-9)


@pytest.mark.parametrize("a", [Octonion.basis(1), Octonion.basis(0, 2.0), Octonion.basis(0) + Octonion.basis(7)])
def test_complement_examples(a):
    assert pj.complement_identity_check(a)


def test_complement_of_unit_imaginary_is_its_negative():
    # conjugate-based variant -a*/|a|^2 would give P_{e1} back, which is not the complement
    P = pj.octonion_projection(Octonion.basis(1)).matrix
    assert np.allclose(np.eye(16) - P, pj.octonion_projection(Octonion.basis(1, -1.0)).matrix)
    assert not np.allclose(np.eye(16) - P, P)


def test_complement_identity_needs_nonzero():
    with pytest.raises(pj.ZeroOctonion):
        pj.complement_identity_check(np.zeros(8))


def test_direct_sum_and_tensor_keep_strong_pairs():
    pair = (coordinate_plane(), tilted_plane(0.4, 0.4))
    other = (coordinate_plane(), tilted_plane(0.9, 0.9))
    _, rep = pj.pair_direct_sum(pair, pair)
    assert rep.is_strong and rep.alpha == pytest.approx(np.cos(0.4))
    _, rep = pj.pair_tensor(pair, other)
    assert rep.is_equiangular and rep.alpha == pytest.approx(np.cos(0.4) * np.cos(0.9))
    # a tensor of half-rank projections has quarter rank, so it cannot be strong
    assert not rep.is_strong


def test_report_json_roundtrips_through_json():
    import json
    rep = pj.is_strongly_equiangular(coordinate_plane(), tilted_plane(0.5, 0.5))
    doc = json.loads(json.dumps(rep.to_json()))
    assert doc["is_strong"] and doc["alpha2"] == pytest.approx(np.cos(0.5) ** 2)
