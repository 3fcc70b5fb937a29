"""Certification, estimation, generation, and the theorem constants."""

import numpy as np
import pytest

from quadric_atlas._defaults import MARGIN_SENTINEL
from quadric_atlas.admissibility import (
    AdmissibilityCertificate,
    AdmissibilityReject,
    certify_admissibility,
    direction_form,
    estimate_admissibility,
    lipschitz_bound,
    make_admissible_space,
    signature_margin,
    sphere_net,
    theorem_constants,
)
from quadric_atlas.errors import InputError, ResourceError
from quadric_atlas.forms import FormSpace, SymmetricForm, witt_index

from conftest import random_space


def sweep_min_witt_k2(space: FormSpace, n_angles: int = 100_000) -> int:
    """Independent oracle for k=2: dense sweep of the coefficient circle."""
    angles = np.linspace(0.0, np.pi, n_angles, endpoint=False)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    best = space.dim_v
    for c in dirs:
        best = min(best, witt_index(SymmetricForm(np.tensordot(c, space.stack, axes=(0, 0)))))
        if best == 0:
            break
    return best


def sweep_min_witt_k2_fast(space: FormSpace, n_angles: int = 100_000) -> int:
    from quadric_atlas import _kernels

    angles = np.linspace(0.0, np.pi, n_angles, endpoint=False)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    counts = _kernels.batch_inertia_mix(space.stack, dirs, 1e-9)
    return int(np.minimum(counts[:, 0], counts[:, 2]).min())


class TestDirectionForm:
    SPACE = FormSpace(np.stack([np.diag([1.0, -1.0]), np.diag([1.0, 1.0])]))

    def test_first_axis(self):
        np.testing.assert_allclose(direction_form(self.SPACE, [1, 0]).mat, np.diag([1.0, -1.0]))

    def test_second_axis(self):
        np.testing.assert_allclose(direction_form(self.SPACE, [0, 1]).mat, np.diag([1.0, 1.0]))

    def test_mixture(self):
        s = 1.0 / np.sqrt(2.0)
        got = direction_form(self.SPACE, [s, -s]).mat
        np.testing.assert_allclose(got, np.diag([0.0, -np.sqrt(2.0)]), atol=1e-15)

    def test_non_unit_rejected(self):
        with pytest.raises(InputError):
            direction_form(self.SPACE, [1.0, 1.0])


class TestSignatureMargin:
    def test_sorted_eigenvalues(self):
        res = signature_margin(SymmetricForm(np.diag([3.0, 1.0, -2.0, -5.0])), 2)
        assert res.feasible
        assert res.value == pytest.approx(1.0)

    def test_no_negative_sentinel(self):
        res = signature_margin(SymmetricForm(np.diag([1.0, 1.0, 1.0])), 1)
        assert not res.feasible
        assert res.value == MARGIN_SENTINEL

    def test_hyperbolic(self):
        res = signature_margin(SymmetricForm(np.diag([1.0, -1.0])), 1)
        assert res.feasible and res.value == pytest.approx(1.0)

    def test_level_out_of_range(self):
        with pytest.raises(InputError):
            signature_margin(SymmetricForm(np.diag([1.0, -1.0])), 3)


class TestLipschitzBound:
    def test_upper_bound(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            space = random_space(rng, 3, 8)
            exact = float(sum(np.abs(np.linalg.eigvalsh(m)).max() for m in space.stack))
            assert lipschitz_bound(space) >= exact


class TestSphereNet:
    def test_k1(self):
        pts, res = sphere_net(1, 0.5)
        np.testing.assert_allclose(np.sort(pts[:, 0]), [-1.0, 1.0])
        assert res == 0.0

    @pytest.mark.parametrize("k", [2, 3])
    def test_resolution_met(self, k):
        delta = 0.2
        pts, res = sphere_net(k, delta)
        assert res <= delta
        np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
        # axis vertices survive subdivision
        for i in range(k):
            axis = np.zeros(k)
            axis[i] = 1.0
            assert np.abs(pts - axis).sum(axis=1).min() < 1e-12

    def test_k4_coarse(self):
        pts, res = sphere_net(4, 0.5)
        assert res <= 0.5

    def test_cap_exceeded(self):
        with pytest.raises(ResourceError):
            sphere_net(4, 0.002, cap=100_000)

    def test_k5_unsupported(self):
        with pytest.raises(ResourceError):
            sphere_net(5, 0.3)


class TestCertify:
    def test_canonical_k1(self, hyperbolic4):
        cert = certify_admissibility(hyperbolic4, 2, 0.5)
        assert isinstance(cert, AdmissibilityCertificate)
        assert cert.method == "net_certified"
        assert cert.samples_or_net_points == 2
        assert cert.min_margin == pytest.approx(1.0)
        assert cert.min_margin > cert.lipschitz * cert.net_resolution

    def test_canonical_k1_reject_m3(self, hyperbolic4):
        rej = certify_admissibility(hyperbolic4, 3, 0.5)
        assert isinstance(rej, AdmissibilityReject)

    def test_delta_too_coarse_rejects(self, hyperbolic4):
        # margin 1 > L*delta requires delta < 1/L
        rej = certify_admissibility(hyperbolic4, 2, 1.5)
        assert isinstance(rej, AdmissibilityReject)

    def test_disguised_k2(self):
        space = make_admissible_space(k=2, m=3, seed=7, disguise=True)
        cert = certify_admissibility(space, 3, 0.01)
        assert isinstance(cert, AdmissibilityCertificate)
        est = estimate_admissibility(space, 20_000, seed=1)
        assert est.m_hat == 3  # oracle: see test_block_estimates_match_sweep

    def test_monotone_in_m(self):
        space = make_admissible_space(k=2, m=4, seed=3, disguise=True)
        levels = [isinstance(certify_admissibility(space, m, 0.02), AdmissibilityCertificate)
                  for m in range(1, 5)]
        assert levels == [True] * 4

    def test_certificate_invariant(self):
        space = make_admissible_space(k=2, m=2, seed=5, disguise=True)
        out = certify_admissibility(space, 2, 0.02)
        assert isinstance(out, AdmissibilityCertificate)
        assert out.min_margin > out.lipschitz * out.net_resolution


class TestEstimate:
    def test_k1_constant(self):
        space = FormSpace(np.diag([1.0, -1.0])[None])
        for seed in range(3):
            assert estimate_admissibility(space, 50, seed=seed).m_hat == 1

    def test_pair_space_hits_stratum(self, pair_space):
        # oracle: dense circle sweep finds min inertia 1 at c1 = +-c2
        assert sweep_min_witt_k2_fast(pair_space) == 1
        est = estimate_admissibility(pair_space, 2000, seed=3)
        assert est.m_hat == 1

    def test_block_estimates_match_sweep(self):
        space = make_admissible_space(k=2, m=4)
        assert sweep_min_witt_k2_fast(space) == 4
        assert estimate_admissibility(space, 2000, seed=5).m_hat == 4

    def test_disguise_invariance(self):
        for (k, m, seed) in [(2, 2, 1), (2, 4, 2), (3, 3, 3)]:
            plain = make_admissible_space(k, m, seed=seed, disguise=False)
            masked = make_admissible_space(k, m, seed=seed, disguise=True)
            a = estimate_admissibility(plain, 10_000, seed=11)
            b = estimate_admissibility(masked, 10_000, seed=11)
            assert a.m_hat == b.m_hat == m

    def test_deterministic(self, pair_space):
        a = estimate_admissibility(pair_space, 500, seed=9)
        b = estimate_admissibility(pair_space, 500, seed=9)
        assert a.m_hat == b.m_hat
        np.testing.assert_array_equal(a.worst_direction, b.worst_direction)

    def test_invalid_samples(self, pair_space):
        with pytest.raises(InputError):
            estimate_admissibility(pair_space, 0)

    def test_certificate_soundness(self):
        # certified level is never undercut by a large sampling estimate
        cases = [(1, 3, 1), (2, 3, 2)]
        for k, m, seed in cases:
            space = make_admissible_space(k, m, seed=seed, disguise=True)
            cert = certify_admissibility(space, m, 0.02)
            assert isinstance(cert, AdmissibilityCertificate)
            est = estimate_admissibility(space, 1_000_000, seed=13)
            assert est.m_hat >= m

    @pytest.mark.slow
    def test_certificate_soundness_k3(self):
        space = make_admissible_space(3, 4, seed=2, disguise=True)
        cert = certify_admissibility(space, 4, 0.05)
        assert isinstance(cert, AdmissibilityCertificate)
        assert estimate_admissibility(space, 1_000_000, seed=17).m_hat >= 4


class TestGenerator:
    def test_canonical_k1_m2(self):
        space = make_admissible_space(1, 2)
        np.testing.assert_allclose(space.stack[0], np.diag([1.0, 1.0, -1.0, -1.0]))

    def test_block_layout_k2_m1(self):
        space = make_admissible_space(2, 1)
        np.testing.assert_allclose(space.stack[0], np.diag([1.0, -1.0, 0.0, 0.0]))
        np.testing.assert_allclose(space.stack[1], np.diag([0.0, 0.0, 1.0, -1.0]))

    def test_padding(self):
        space = make_admissible_space(1, 1, ambient_n=5)
        assert space.dim_v == 5
        np.testing.assert_allclose(space.stack[0][2:, 2:], 0.0)

    def test_invalid_params(self):
        with pytest.raises(InputError):
            make_admissible_space(0, 1)
        with pytest.raises(InputError):
            make_admissible_space(1, 0)
        with pytest.raises(InputError):
            make_admissible_space(2, 3, ambient_n=5)

    def test_generator_certifies_default_grid(self):
        cases = [(k, m, seed) for k in (1, 2) for m in range(1, 7) for seed in range(1, 11)]
        cases += [(3, m, seed) for m in (1, 2, 3) for seed in (1, 2, 3)]
        for k, m, seed in cases:
            space = make_admissible_space(k, m, seed=seed, disguise=True)
            out = certify_admissibility(space, m, 0.01)
            assert isinstance(out, AdmissibilityCertificate), (k, m, seed, out)

    @pytest.mark.slow
    def test_generator_certifies_full_grid(self):
        for k in (1, 2, 3):
            for m in range(1, 7):
                for seed in range(1, 11):
                    space = make_admissible_space(k, m, seed=seed, disguise=True)
                    out = certify_admissibility(space, m, 0.01)
                    assert isinstance(out, AdmissibilityCertificate), (k, m, seed)

    def test_restriction_consistency(self):
        rng = np.random.default_rng(37)
        from quadric_atlas.forms import restrict_forms

        for trial in range(8):
            k = int(rng.integers(1, 3))
            m = int(rng.integers(2, 5))
            space = make_admissible_space(k, m, seed=trial, disguise=True)
            d = int(rng.integers(1, m))
            basis, _ = np.linalg.qr(rng.standard_normal((space.dim_v, space.dim_v - d)))
            sub = restrict_forms(space, basis).space
            est = estimate_admissibility(sub, 10_000, seed=trial)
            assert est.m_hat >= m - d


class TestTheoremConstants:
    def test_base_case_k1(self):
        c = theorem_constants(-1, 1)
        assert (c.m_ik, c.r_ik) == (4, 2)

    def test_i0_k1(self):
        c = theorem_constants(0, 1)
        assert (c.m_ik, c.r_ik) == (6, 5)

    def test_tuple_bound(self):
        assert theorem_constants(0, 2, 2).M_nk == 12  # ceil(23/2)

    def test_base_case_closed_forms(self):
        for k in range(1, 11):
            c = theorem_constants(-1, k)
            assert c.m_ik == k * k + k + 2
            assert c.r_ik == k * k + 4 * k - 3

    def test_range_validation(self):
        with pytest.raises(InputError):
            theorem_constants(-2, 1)
        with pytest.raises(InputError):
            theorem_constants(0, 0)
        with pytest.raises(InputError):
            theorem_constants(0, 1, -1)
