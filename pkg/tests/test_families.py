import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from equiproj import families as fam
from equiproj.octonions import Octonion
from equiproj.projections import (
    DimensionMismatch, base_projection, graph_diagonalizer, is_strongly_equiangular, make_projection,
    octonion_projection,
)


def octonion_basis_family():
    return [base_projection(8)] + [octonion_projection(Octonion.basis(i)) for i in range(1, 8)]


def random_unitary(rng, n):
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


class TestFamilyAudit:
    def test_octonion_basis_is_mutually_strong(self):
        rep = fam.family_audit(octonion_basis_family())
        assert rep.size == 8 and rep.mutually_strong
        assert rep.distinct_alphas == pytest.approx([np.sqrt(0.5)])
        assert all(rep.pairwise[i][i].alpha == pytest.approx(1.0) for i in range(8))

    def test_single_projection_is_vacuously_strong(self):
        rep = fam.family_audit([base_projection(8)])
        assert rep.mutually_strong and rep.distinct_alphas == []

    def test_collinear_labels(self):
        P = [base_projection(8), octonion_projection(Octonion.basis(1)), octonion_projection(Octonion.basis(1, 3.0))]
        rep = fam.family_audit(P)
        dense = [[is_strongly_equiangular(P[i], P[j]) for j in range(3)] for i in range(3)]
        for i, j in itertools.permutations(range(3), 2):
            assert rep.pairwise[i][j].is_strong == dense[i][j].is_strong
        # I + 3 E_1^T E_1 = 4 I is scaled unitary, so the pair is strong
        assert rep.pairwise[1][2].is_strong
        assert rep.pairwise[1][2].alpha2 == pytest.approx(16 / 20)

    def test_permutation_invariant(self, rng):
        P = octonion_basis_family()[:5] + [octonion_projection(rng.standard_normal(8))]
        perm = rng.permutation(len(P))
        a, b = fam.family_audit(P), fam.family_audit([P[i] for i in perm])
        assert (a.mutually_equiangular, a.mutually_strong) == (b.mutually_equiangular, b.mutually_strong)
        assert a.distinct_alphas == pytest.approx(b.distinct_alphas)

    def test_block_set_membership(self, rng):
        labels = [rng.standard_normal(8) for _ in range(3)]
        P = [octonion_projection(a) for a in labels]
        from equiproj.octonions import matrep
        U = [graph_diagonalizer(matrep(a)) for a in labels]
        rep = fam.family_audit(P, unitaries=U)
        assert all(all(row) for row in rep.unitary_membership)

    def test_mixed_dimensions(self):
        with pytest.raises(DimensionMismatch):
            fam.family_audit([base_projection(8), base_projection(2)])

    def test_report_serializes(self):
        json.dumps(fam.family_audit(octonion_basis_family()[:3]).to_json())


class TestClosure:
    def test_single_plane_is_trivial(self):
        res = fam.gate_group_closure([np.eye(2, 4)])
        assert res.is_finite and res.elements_found == 1

    def test_packing_group_is_finite_signed_pattern(self):
        planes, base = fam.packing_m4()
        assert len(planes) == 18
        res = fam.gate_group_closure(planes, base)
        assert res.is_finite
        assert all(fam.is_signed_pattern_multiple(G) for G in res.representative_matrices)
        # reflections and rotations by multiples of 45 degrees, up to sign
        assert res.elements_found == 8

    def test_packing_planes_meet_at_45_degrees(self):
        planes, _ = fam.packing_m4()
        B = [fam.validate_plane(p) for p in planes]
        for j in range(18):
            strong = 0
            for k in range(18):
                T = B[k] @ B[j].T
                s = np.trace(T @ T.T) / 2
                if j != k and s > 1e-9 and np.allclose(T @ T.T, s * np.eye(2)):
                    assert s == pytest.approx(0.5)
                    strong += 1
            assert strong == 8

    def test_closure_independent_of_order(self, rng):
        planes, _ = fam.packing_m4()
        perm = rng.permutation(len(planes))
        assert fam.gate_group_closure([planes[i] for i in perm]).elements_found == 8

    @pytest.mark.parametrize("z1,z2", [(0.7 * np.exp(1j), 1.3 * np.exp(0.3j)), (0.5, 1.3j), (1.0 + 0.2j, -0.4j)])
    def test_generic_complex_pair_exceeds_budget(self, z1, z2):
        res = fam.gate_group_closure([fam.complex_line_plane(z1), fam.complex_line_plane(z2)], budget=2000)
        assert not res.is_finite and res.elements_found <= res.budget

    @pytest.mark.parametrize("z1,z2", [(1.0, 1j), (0.5, 2j)])
    def test_eighth_turn_closes(self, z1, z2):
        # 1 + conj(z1) z2 = 1 + i: rotations by multiples of 45 degrees, four up to sign
        res = fam.gate_group_closure([fam.complex_line_plane(z1), fam.complex_line_plane(z2)])
        assert res.is_finite and res.elements_found == 4

    def test_base_and_line_give_trivial_transition(self):
        res = fam.gate_group_closure([fam.complex_line_plane(0.0), fam.complex_line_plane(1j)])
        assert res.elements_found == 1

    @pytest.mark.parametrize("rows", [[[1, 1, 0, 0], [0, 1, 0, 0]], [[1, 0, 0, 0], [0, 2, 0, 0]], [[0, 0, 0, 0]]])
    def test_invalid_basis(self, rows):
        with pytest.raises(fam.InvalidBasis):
            fam.gate_group_closure([rows])

    def test_packing_loader_checks_declared_norm(self):
        doc = {"planes": [{"rows": [[1, 1, 0, 0], [0, 0, 1, 1]], "row_norm2": 1}]}
        with pytest.raises(fam.InvalidBasis):
            fam.load_packing(doc)
        with pytest.raises(fam.InvalidBasis):
            fam.load_packing({"planes": [{"rows": [[0.5, 0, 0, 0], [0, 0.5, 0, 0]]}]})


class TestSic:
    def test_formula_at_two(self):
        assert fam.sic_alpha2(2) == pytest.approx(1 / 3)

    def test_formula_tends_to_half(self):
        vals = [fam.sic_alpha2(n) for n in range(2, 65, 2)]
        assert all(a < b for a, b in zip(vals, vals[1:]))
        assert 0.5 - vals[-1] < 2e-4

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_rotated_qubit_sic_passes(self, seed):
        U = random_unitary(np.random.default_rng(seed), 2)
        v = fam.sic_check(fam.qubit_sic(U), 2)
        assert v.ok and v.strong
        assert v.alpha2 == pytest.approx(1 / 3, abs=1e-12)

    def test_hesse_sic_fails_strong_formula_but_fits_rank_one(self):
        v = fam.sic_check(fam.hesse_sic(), 3)
        assert v.checks["sum_to_identity"] and v.checks["constant_overlap"]
        assert not v.ok and not v.strong
        assert v.alpha2 == pytest.approx(fam.sic_alpha2(3, rank=1), abs=1e-12)

    def test_random_set_fails_sum(self, rng):
        ops = []
        for _ in range(4):
            x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            ops.append(np.outer(x, x.conj()))
        v = fam.sic_check(ops, 2)
        assert not v.checks["sum_to_identity"] and not v.ok

    def test_count_mismatch(self):
        with pytest.raises(fam.CountMismatch):
            fam.sic_check(fam.qubit_sic()[:3], 2)


coeff4 = arrays(np.float64, (4,), elements=st.floats(-5, 5, allow_nan=False))


class TestContinuousFamilies:
    def test_complex_zero_is_base(self):
        P = fam.continuous_family_sample("complex", 0)
        assert np.allclose(P.matrix, base_projection(2).matrix) and P.dim == 4

    @pytest.mark.parametrize("kind,params,expected", [
        ("complex", "1+2i", [1, 2]), ("complex", 3j, [0, 3]), ("complex", [1, -1], [1, -1]),
        ("quaternion", "1,2,3,4", [1, 2, 3, 4]), ("octonion", Octonion.basis(5), np.eye(8)[5]),
    ])
    def test_parse(self, kind, params, expected):
        assert np.allclose(fam.parse_element(kind, params), expected)

    @pytest.mark.parametrize("kind,params", [("complex", "abc"), ("quaternion", [1, 2]), ("sedenion", [1]),
                                             ("octonion", [np.inf] * 8)])
    def test_parse_errors(self, kind, params):
        with pytest.raises(fam.ParseError):
            fam.continuous_family_sample(kind, params)

    @settings(max_examples=50, deadline=None)
    @given(coeff4, coeff4)
    def test_quaternion_pairs_strong(self, a, b):
        if min(np.linalg.norm(a), np.linalg.norm(b)) < 1e-2 or np.allclose(a, b, atol=1e-2):
            return
        rep = is_strongly_equiangular(fam.continuous_family_sample("quaternion", a),
                                      fam.continuous_family_sample("quaternion", b))
        assert rep.is_strong or rep.alpha < 1e-3

    def test_complex_pairs_strong(self, rng):
        for _ in range(50):
            a, b = rng.standard_normal(2), rng.standard_normal(2)
            assert is_strongly_equiangular(fam.continuous_family_sample("complex", a),
                                           fam.continuous_family_sample("complex", b)).is_strong


class TestGateAlgebras:
    @pytest.mark.parametrize("kind", ["complex", "quaternion"])
    def test_closure_check(self, kind):
        v = fam.gate_algebra_closure_check(kind)
        assert v.ok, v.details

    def test_imaginary_unit_gives_quarter_turn_over_two(self):
        G = fam._gate_of("complex", 1j)
        c = np.sqrt(0.5)
        assert np.allclose(G, [[c, -c], [c, c]])

    def test_zero_gives_identity(self):
        assert np.allclose(fam._gate_of("quaternion", np.zeros(4)), np.eye(4))

    def test_quaternion_blocks_have_unit_determinant(self, rng):
        for _ in range(100):
            C = fam.quaternion_block_to_complex(fam.normalized_block("quaternion", rng.standard_normal(4),
                                                                     rng.standard_normal(4)))
            assert abs(np.linalg.det(C) - 1) < 1e-12
            assert fam.is_su2_form(C)

    def test_reachability_ranks(self):
        assert fam.reachability_rank("complex") == 1
        assert fam.reachability_rank("quaternion") == 3

    def test_bad_kind(self):
        with pytest.raises(fam.ParseError):
            fam.gate_algebra_closure_check("octonion")


class TestSpinBinding:
    def test_singlet_triplet_split(self):
        S, T = fam.singlet_triplet()
        assert np.allclose(S + T, np.eye(4))
        assert round(np.trace(S)) == 1 and round(np.trace(T)) == 3
        make_projection(S), make_projection(T)

    def test_ranks(self):
        rep = fam.spin_binding_projection()
        assert (rep.rank, rep.complement_rank) == (10, 6)
        assert rep.projection.rank == 10

    def test_pairings_are_not_equiangular(self):
        rep = fam.spin_binding_projection()
        assert rep.any_not_equiangular
        assert len(rep.audit) == 3
        for row in rep.audit:
            assert len(row["principal_cosines"]) == 10
            assert not row["is_equiangular"]

    def test_pairings_are_relabelings(self):
        ranks = {name: fam.binding_projection(name).rank for name in fam.PAIRINGS}
        assert set(ranks.values()) == {10}
        assert not np.allclose(fam.binding_projection("12|34").matrix, fam.binding_projection("13|24").matrix)
