"""Exact-shape linear algebra on symmetric forms."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadric_atlas.errors import InputError
from quadric_atlas.forms import (
    FormSpace,
    Signature,
    SymmetricForm,
    eval_map,
    evaluate_form,
    is_nonsingular_point,
    is_w_independent,
    phi_matrix,
    restrict_forms,
    signature,
    w_orthogonal_complement,
    witt_index,
)

from conftest import random_space, random_symmetric


def exact_rank(rows) -> int:
    """Independent oracle: exact rank over the rationals by row reduction."""
    mat = [[Fraction(x).limit_denominator(10**12) for x in row] for row in rows]
    rank = 0
    n_cols = len(mat[0]) if mat else 0
    pivot_col = 0
    while rank < len(mat) and pivot_col < n_cols:
        pivot = next((r for r in range(rank, len(mat)) if mat[r][pivot_col] != 0), None)
        if pivot is None:
            pivot_col += 1
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        lead = mat[rank][pivot_col]
        for r in range(len(mat)):
            if r != rank and mat[r][pivot_col] != 0:
                factor = mat[r][pivot_col] / lead
                mat[r] = [a - factor * b for a, b in zip(mat[r], mat[rank])]
        rank += 1
        pivot_col += 1
    return rank


class TestEvaluateForm:
    def test_hyperbolic_plane(self):
        w = SymmetricForm(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert evaluate_form(w, [1, 1], [1, 1]) == pytest.approx(2.0)

    def test_orthogonal_axes(self):
        w = SymmetricForm(np.diag([1.0, -1.0]))
        assert evaluate_form(w, [1, 0], [0, 1]) == 0.0

    def test_null_vector(self):
        w = SymmetricForm(np.diag([1.0, -1.0]))
        assert evaluate_form(w, [1, 1], [1, 1]) == 0.0

    def test_dimension_mismatch(self):
        w = SymmetricForm(np.diag([1.0, -1.0]))
        with pytest.raises(InputError):
            evaluate_form(w, [1, 0, 0], [0, 1, 0])

    def test_symmetry_random(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            w = SymmetricForm(random_symmetric(rng, 5))
            u, v = rng.standard_normal(5), rng.standard_normal(5)
            lhs, rhs = evaluate_form(w, u, v), evaluate_form(w, v, u)
            assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + abs(lhs)))


class TestEvalMap:
    def test_direct(self):
        space = FormSpace(np.stack([np.diag([1.0, -1.0]), np.array([[0.0, 1.0], [1.0, 0.0]])]))
        np.testing.assert_allclose(eval_map(space, [1, 1]), [0.0, 2.0])

    def test_zero_vector(self):
        space = FormSpace(np.diag([1.0, -1.0])[None])
        np.testing.assert_allclose(eval_map(space, [0, 0]), [0.0])

    def test_four_minus_one(self):
        space = FormSpace(np.diag([1.0, -1.0])[None])
        np.testing.assert_allclose(eval_map(space, [2, 1]), [3.0])

    @given(st.floats(-10, 10))
    @settings(max_examples=40, deadline=None)
    def test_homogeneity(self, a):
        rng = np.random.default_rng(7)
        space = random_space(rng, 2, 6)
        v = rng.standard_normal(6)
        lhs = eval_map(space, a * v)
        rhs = a * a * eval_map(space, v)
        assert np.abs(lhs - rhs).max() <= 1e-12 * (1 + np.abs(rhs).max())


class TestSignature:
    @pytest.mark.parametrize(
        "diag,expect",
        [
            ([1, 1, -1], (2, 0, 1)),
            ([1, 1, -1, -1], (2, 0, 2)),
            ([0, 0, 0], (0, 3, 0)),
        ],
    )
    def test_diagonal(self, diag, expect):
        sig = signature(SymmetricForm(np.diag(np.asarray(diag, dtype=float))))
        assert (sig.n_plus, sig.n_zero, sig.n_minus) == expect

    def test_offdiagonal_hyperbolic(self):
        sig = signature(SymmetricForm(np.array([[0.0, 1.0], [1.0, 0.0]])))
        assert (sig.n_plus, sig.n_zero, sig.n_minus) == (1, 0, 1)

    @pytest.mark.parametrize("m,n", [(1, 2), (2, 4), (3, 5), (2, 6)])
    def test_paper_family(self, m, n):
        # Q = x_0^2+...+x_{m-1}^2 - x_m^2-...-x_n^2 on n+1 variables
        diag = [1.0] * m + [-1.0] * (n + 1 - m)
        sig = signature(SymmetricForm(np.diag(diag)))
        assert (sig.n_plus, sig.n_zero, sig.n_minus) == (m, 0, n + 1 - m)

    def test_total_count(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            w = SymmetricForm(random_symmetric(rng, 7))
            sig = signature(w)
            assert sig.n == 7

    def test_congruence_invariance(self):
        rng = np.random.default_rng(11)
        for cond_target in (3.0, 30.0, 1000.0):
            diag = np.array([2.0, 1.0, -1.5, 0.0, 3.0, -2.0])
            a = random_congruence_conjugate(rng, diag, cond_target)
            base = signature(SymmetricForm(np.diag(diag)))
            scaled_tol = 1e-9 * cond_target**2
            got = signature(SymmetricForm(a), zero_tol=scaled_tol)
            assert got == base


def random_congruence_conjugate(rng, diag, cond_target):
    n = len(diag)
    q1, _ = np.linalg.qr(rng.standard_normal((n, n)))
    q2, _ = np.linalg.qr(rng.standard_normal((n, n)))
    s = np.geomspace(1.0, np.sqrt(cond_target), n)
    b = (q1 * s) @ q2
    return b.T @ np.diag(diag) @ b


class TestWittIndex:
    @pytest.mark.parametrize(
        "diag,expect",
        [([1, 1, -1], 1), ([1, 1, -1, -1], 2), ([1, 1, 1], 0)],
    )
    def test_examples(self, diag, expect):
        assert witt_index(SymmetricForm(np.diag(np.asarray(diag, dtype=float)))) == expect


class TestPhiMatrix:
    def test_single(self):
        space = FormSpace(np.diag([1.0, -1.0])[None])
        np.testing.assert_allclose(phi_matrix(space, [[1, 0]]), [[1.0, 0.0]])

    def test_two_forms_row_order(self):
        space = FormSpace(np.stack([np.diag([1.0, -1.0]), np.array([[0.0, 1.0], [1.0, 0.0]])]))
        np.testing.assert_allclose(phi_matrix(space, [[1, 0]]), [[1.0, 0.0], [0.0, 1.0]])

    def test_radical_vector(self):
        space = FormSpace(np.diag([1.0, 0.0])[None])
        np.testing.assert_allclose(phi_matrix(space, [[0, 1]]), [[0.0, 0.0]])

    def test_vector_major_ordering(self):
        rng = np.random.default_rng(5)
        space = random_space(rng, 2, 4)
        vs = rng.standard_normal((3, 4))
        pm = phi_matrix(space, vs)
        for i in range(3):
            for j in range(2):
                np.testing.assert_allclose(pm[i * 2 + j], vs[i] @ space.stack[j])


class TestWIndependence:
    def test_rank_one_true(self):
        space = FormSpace(np.diag([1.0, -1.0])[None])
        assert is_w_independent(space, [[1, 0]])

    def test_zero_vector_false(self):
        space = FormSpace(np.diag([1.0, -1.0])[None])
        assert not is_w_independent(space, [[0, 0]])

    def test_spec_pair_is_dependent(self):
        # the covectors w_j(v_i, -) coincide pairwise here: exact rank is 2,
        # not 4 (oracle: rational row reduction below)
        space = FormSpace(
            np.stack([np.diag([1.0, -1.0, 1.0, -1.0]), np.diag([1.0, 1.0, -1.0, -1.0])])
        )
        vs = np.array([[1.0, 0, 0, 0], [0, 0, 0, 1.0]])
        assert exact_rank(phi_matrix(space, vs).tolist()) == 2
        assert not is_w_independent(space, vs)

    def test_independent_pair(self):
        space = FormSpace(
            np.stack([np.diag([1.0, -1.0, 1.0, -1.0]), np.diag([1.0, 1.0, -1.0, -1.0])])
        )
        vs = np.array([[1.0, 0, 1.0, 0], [0, 1.0, 0, 1.0]])
        assert exact_rank(phi_matrix(space, vs).tolist()) == 4
        assert is_w_independent(space, vs)

    def test_overfull_false(self):
        space = FormSpace(np.diag([1.0, -1.0])[None])
        assert not is_w_independent(space, np.eye(2).tolist() + [[1, 1]])

    def test_subtuple_monotonicity(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            space = random_space(rng, 2, 10)
            vs = rng.standard_normal((3, 10))
            if not is_w_independent(space, vs):
                continue
            for drop in range(3):
                sub = np.delete(vs, drop, axis=0)
                assert is_w_independent(space, sub)


class TestOrthogonalComplement:
    def test_kernel_of_row(self):
        space = FormSpace(np.diag([1.0, -1.0])[None])
        q = w_orthogonal_complement(space, [[1, 0]])
        assert q.shape == (2, 1)
        np.testing.assert_allclose(np.abs(q[:, 0]), [0.0, 1.0], atol=1e-14)

    def test_no_constraints(self):
        space = FormSpace(np.diag([1.0, -1.0])[None])
        np.testing.assert_allclose(w_orthogonal_complement(space, []), np.eye(2))

    def test_hyperbolic_kernel(self):
        # kernel of [1, 0, -1, 0]: oracle basis e2, e4, (e1+e3)/sqrt(2)
        space = FormSpace(np.diag([1.0, 1.0, -1.0, -1.0])[None])
        q = w_orthogonal_complement(space, [[1, 0, 1, 0]])
        assert q.shape == (4, 3)
        # returned columns orthonormal and all W-orthogonal to the input
        np.testing.assert_allclose(q.T @ q, np.eye(3), atol=1e-12)
        defect = np.abs(phi_matrix(space, [[1, 0, 1, 0]]) @ q).max()
        assert defect <= 1e-12
        # span check against the oracle basis
        oracle = np.array([[0, 1, 0, 0], [0, 0, 0, 1], [1, 0, 1, 0]], dtype=float).T
        proj = q @ (q.T @ oracle)
        np.testing.assert_allclose(proj, oracle, atol=1e-10)

    def test_complement_correctness_random(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            space = random_space(rng, 2, 9)
            vs = rng.standard_normal((2, 9))
            q = w_orthogonal_complement(space, vs)
            scale = space.max_spectral * np.abs(vs).max()
            defect = np.abs(np.einsum("kij,ti,ja->tka", space.stack, vs, q)).max()
            assert defect <= 1e-10 * scale

    def test_rank_consistency(self):
        rng = np.random.default_rng(29)
        for _ in range(20):
            space = random_space(rng, 2, 11)
            vs = rng.standard_normal((2, 11))
            if is_w_independent(space, vs):
                q = w_orthogonal_complement(space, vs)
                assert q.shape[1] == 11 - 2 * 2


class TestRestrictForms:
    def test_coordinate_restriction(self):
        space = FormSpace(np.diag([1.0, -1.0, 1.0])[None])
        res = restrict_forms(space, np.eye(3)[:, :2])
        np.testing.assert_allclose(res.space.stack[0], np.diag([1.0, -1.0]))
        assert res.injective

    def test_zero_restriction_not_injective(self):
        space = FormSpace(np.diag([1.0, 0.0])[None])
        res = restrict_forms(space, np.array([[0.0], [1.0]]))
        np.testing.assert_allclose(res.space.stack[0], [[0.0]])
        assert not res.injective

    def test_diagonal_sum(self):
        space = FormSpace(np.diag([2.0, -3.0, 5.0])[None])
        res = restrict_forms(space, np.ones((3, 1)))
        np.testing.assert_allclose(res.space.stack[0], [[4.0]])  # 2 - 3 + 5
        assert res.injective

    def test_rank_deficient_basis_rejected(self):
        space = FormSpace(np.diag([1.0, -1.0, 1.0])[None])
        bad = np.array([[1.0, 2.0], [0.0, 0.0], [1.0, 2.0]])
        with pytest.raises(InputError):
            restrict_forms(space, bad)


class TestNonsingularPoint:
    def test_null_and_independent(self, hyperbolic4):
        space = FormSpace(np.diag([1.0, -1.0])[None])
        assert is_nonsingular_point(space, [1, 1])

    def test_nonzero_value(self):
        space = FormSpace(np.diag([1.0, -1.0])[None])
        assert not is_nonsingular_point(space, [1, 0])

    def test_radical_direction(self):
        space = FormSpace(np.diag([1.0, 0.0, -1.0])[None])
        assert not is_nonsingular_point(space, [0, 1, 0])


class TestTypes:
    def test_symmetry_validation(self):
        with pytest.raises(InputError):
            SymmetricForm(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_signature_total(self):
        assert Signature(2, 1, 3).n == 6

    def test_basis_independence_check(self):
        dep = np.stack([np.diag([1.0, -1.0]), np.diag([2.0, -2.0])])
        space = FormSpace(dep)
        with pytest.raises(InputError):
            space.require_independent()
        with pytest.raises(InputError):
            FormSpace.from_matrices([np.diag([1.0, -1.0]), np.diag([2.0, -2.0])])

    def test_eval_vector_basis_covariance(self):
        # changing the basis by an invertible map transforms coordinates the same way
        rng = np.random.default_rng(31)
        space = random_space(rng, 3, 5)
        mix = rng.standard_normal((3, 3)) + 3 * np.eye(3)
        mixed = FormSpace(np.tensordot(mix, space.stack, axes=(1, 0)))
        v = rng.standard_normal(5)
        np.testing.assert_allclose(eval_map(mixed, v), mix @ eval_map(space, v),
                                   atol=1e-12 * space.max_spectral)
