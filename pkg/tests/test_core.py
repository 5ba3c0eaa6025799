import math

import numpy as np
import pytest

from lewisweights import (
    Certificate,
    check_estimate,
    check_one_sided,
    check_two_sided,
    derive_schedule,
    fixed_point_map,
    leverage_scores,
    one_sided_phase,
    quadratic_form_sandwich,
    reference_lewis_weights,
    two_sided_error_bound,
    two_sided_lewis,
)
from conftest import (
    conditioned_square,
    explicit_weighted_scores,
    random_matrix,
    stacked_identity,
)


class TestSchedule:
    def test_worked_example(self):
        # alpha/(100 p d) = 0.5 / 2000 and 2 ln 20 / 2.5e-4 rounds up to 23966
        sched = derive_schedule(4.0, 0.5, 100, 5)
        assert sched.eps1 == 0.5 / 2000.0
        assert sched.eps2 == 0.5 / 12.0
        assert sched.num_rounds == 23966

    def test_larger_example(self):
        assert derive_schedule(4.0, 0.4, 1000, 10).num_rounds == 92104

    def test_square_instance_floor(self):
        assert derive_schedule(2.0, 0.5, 7, 7).num_rounds == 1

    def test_iteration_guard(self):
        with pytest.raises(ValueError, match="alpha"):
            derive_schedule(2.0, 1e-9, 100, 2)

    def test_rejects_bad_p(self):
        with pytest.raises(ValueError):
            derive_schedule(1.5, 0.5, 10, 2)


class TestCertificates:
    def test_one_sided_exact_weights_pass(self):
        A = stacked_identity(3, 4)
        w_star = np.full(12, 0.25)
        cert = check_one_sided(A, w_star, p=4.0, eps=0.0)
        assert cert.passed
        np.testing.assert_allclose([cert.min_ratio, cert.max_ratio], 1.0, rtol=1e-12)
        assert cert.l1_norm == pytest.approx(3.0)

    def test_one_sided_doubled_weights_fail_l1(self):
        A = stacked_identity(3, 4)
        cert = check_one_sided(A, np.full(12, 0.5), p=4.0, eps=0.1)
        assert not cert.passed
        # scale invariance keeps the score ratio at 1/2, so only the l1
        # clause can be the reason for failure
        assert cert.max_ratio <= 1.1
        assert cert.l1_norm == pytest.approx(6.0)

    def test_two_sided_exact_weights_pass(self):
        A = stacked_identity(2, 5)
        cert = check_two_sided(A, np.full(10, 0.2), p=3.0, eps=0.0)
        assert cert.passed

    @pytest.mark.parametrize("p", [2.0, 4.0, 8.0])
    def test_two_sided_scalar_multiple_ratio_is_gamma(self, p):
        # Leverage scores are invariant under scalar rescaling of the row
        # weighting, so v = gamma * w_star measures a uniform ratio of
        # exactly gamma (for every p).
        A = stacked_identity(3, 4)
        gamma = 1.5
        v = gamma * np.full(12, 0.25)
        cert = check_two_sided(A, v, p=p, eps=0.6, slack=0.0)
        np.testing.assert_allclose([cert.min_ratio, cert.max_ratio], gamma, rtol=1e-12)
        assert cert.passed
        assert not check_two_sided(A, v, p=p, eps=0.4, slack=0.0).passed

    def test_estimate_identical_pass(self):
        w = np.array([0.5, 0.25, 0.25])
        assert check_estimate(w, w, eps=0.0).passed

    def test_estimate_inflated_fail(self):
        w = np.array([0.5, 0.25, 0.25])
        cert = check_estimate(1.2 * w, w, eps=0.1)
        assert not cert.passed
        assert cert.max_ratio == pytest.approx(1.2)

    def test_estimate_length_mismatch(self):
        with pytest.raises(ValueError):
            check_estimate(np.ones(3), np.ones(4), eps=0.1)

    def test_dict_round_trip(self):
        cert = Certificate(
            kind="two_sided", eps_target=0.25, slack=1e-6,
            min_ratio=0.9, max_ratio=1.1, passed=True,
        )
        assert Certificate.from_dict(cert.to_dict()) == cert
        assert cert.min_ratio <= cert.max_ratio


class TestErrorBound:
    def test_zero_eps(self):
        assert two_sided_error_bound(0.0, 4.0, 10) == 0.0

    def test_p_two_vanishes(self):
        assert two_sided_error_bound(0.3, 2.0, 7) == 0.0

    def test_worked_value(self):
        # 3 * 0.1 * (4/2 - 1) * 1.1^1 * 10
        assert two_sided_error_bound(0.1, 4.0, 10) == pytest.approx(3.3, rel=1e-12)

    def test_monotone_in_eps(self):
        values = [two_sided_error_bound(e, 6.0, 4) for e in (0.01, 0.05, 0.2)]
        assert values == sorted(values)


class TestFixedPointMap:
    def test_p2_returns_plain_leverage_scores(self):
        A = random_matrix(0, 15, 3)
        w = np.random.default_rng(1).uniform(0.2, 2.0, 15)
        np.testing.assert_allclose(
            fixed_point_map(A, w, 2.0), leverage_scores(A), rtol=1e-12
        )

    def test_stacked_identity_fixed_point(self):
        A = stacked_identity(2, 6)
        w = np.full(12, 1.0 / 6.0)
        np.testing.assert_allclose(fixed_point_map(A, w, 5.0), w, rtol=1e-12)

    def test_matches_explicit_inverse_identity(self):
        # The map also equals (a_i^T (A^T W^{1-2/p} A)^{-1} a_i)^{p/2}; check
        # against an explicitly inverted Gram matrix.
        rng = np.random.default_rng(2)
        A = rng.standard_normal((6, 2))
        w = np.full(6, 2.0 / 6.0)
        p = 4.0
        G = A.T @ ((w ** (1 - 2 / p))[:, None] * A)
        expected = np.einsum("ij,jk,ik->i", A, np.linalg.inv(G), A) ** (p / 2)
        np.testing.assert_allclose(fixed_point_map(A, w, p), expected, rtol=1e-9)

    def test_overflow_is_an_error(self):
        A = random_matrix(3, 6, 2)
        w = np.full(6, 1e-200)
        with pytest.raises(FloatingPointError):
            fixed_point_map(A, w, 10.0, scores=np.ones(6))

    def test_strictly_positive_output(self):
        A = random_matrix(4, 30, 3)
        w = np.random.default_rng(5).uniform(1e-8, 1.0, 30)
        assert (fixed_point_map(A, w, 6.0) > 0).all()


class TestQuadraticFormSandwich:
    def test_equal_weights(self):
        A = random_matrix(0, 12, 3)
        w = np.random.default_rng(1).uniform(0.5, 1.5, 12)
        lo, hi = quadratic_form_sandwich(A, w, w, 4.0)
        assert lo == pytest.approx(1.0, abs=1e-10)
        assert hi == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("t", [0.2, 3.0])
    def test_scalar_multiple(self, t):
        A = random_matrix(2, 10, 2)
        w = np.random.default_rng(3).uniform(0.5, 1.5, 10)
        p = 4.0
        lo, hi = quadratic_form_sandwich(A, w, t * w, p)
        expected = t ** (1 - 2 / p)
        assert lo == pytest.approx(expected, rel=1e-10)
        assert hi == pytest.approx(expected, rel=1e-10)

    def test_reweighting_step_stays_in_sandwich(self):
        A = random_matrix(4, 8, 2)
        w = np.random.default_rng(5).uniform(0.3, 1.2, 8)
        p = 4.0
        v = fixed_point_map(A, w, p)
        sigma = leverage_scores(A, w ** (1 - 2 / p))
        alpha = np.abs(v - sigma).sum()
        lo, hi = quadratic_form_sandwich(A, w, v, p)
        assert lo >= 1 - alpha - 1e-8
        assert hi <= 1 + alpha + 1e-8


class TestOneSidedPhase:
    def test_square_identity(self):
        w = one_sided_phase(np.eye(3), p=4.0, alpha=0.5)
        np.testing.assert_allclose(w, np.ones(3))

    def test_stacked_identity_symmetric_iterates(self):
        A = stacked_identity(2, 5)
        w = one_sided_phase(A, p=3.0, alpha=0.9)
        np.testing.assert_allclose(w, np.full(10, 0.2), rtol=1e-12)

    def test_random_instance_certified(self):
        A = random_matrix(7, 20, 3)
        p, alpha = 4.0, 0.5
        w = one_sided_phase(A, p=p, alpha=alpha)
        sched = derive_schedule(p, alpha, 20, 3)
        cert = check_one_sided(A, w, p, 2 * sched.eps1)
        assert cert.passed
        assert w.sum() <= (1 + sched.eps1 / 4) * 3


class TestTwoSidedLewis:
    def test_stacked_identity(self):
        A = stacked_identity(3, 4)
        res = two_sided_lewis(A, p=5.0, alpha=0.3)
        np.testing.assert_allclose(res.weights, np.full(12, 0.25), rtol=1e-9)
        assert res.certificate.passed
        assert res.certificate.min_ratio == pytest.approx(1.0, abs=1e-9)
        assert res.certificate.max_ratio == pytest.approx(1.0, abs=1e-9)

    def test_p2_matches_leverage_scores(self):
        A = random_matrix(8, 50, 4)
        res = two_sided_lewis(A, p=2.0, alpha=0.2)
        assert np.abs(res.weights / leverage_scores(A) - 1).max() <= 0.2

    def test_random_instance_with_oracle(self):
        A = random_matrix(9, 10, 3)
        p, alpha = 4.0, 0.25
        res = two_sided_lewis(A, p=p, alpha=alpha)
        cert = res.certificate
        assert cert.passed
        assert cert.min_ratio >= 0.75 and cert.max_ratio <= 1.25
        ref = reference_lewis_weights(A, p, tol=1e-10)
        bound = min(0.9, 10 * alpha * p**2 * math.sqrt(3))
        assert np.abs(res.weights / ref.weights - 1).max() <= bound

    def test_faithful_call_count(self):
        A = random_matrix(10, 25, 2)
        res = two_sided_lewis(A, p=3.0, alpha=0.8)
        assert res.leverage_calls == res.schedule.num_rounds + 1
        assert res.iterations == res.schedule.num_rounds

    def test_adaptive_no_worse_and_certified(self):
        A = random_matrix(11, 40, 3)
        faithful = two_sided_lewis(A, p=4.0, alpha=0.5, mode="faithful")
        adaptive = two_sided_lewis(
            A, p=4.0, alpha=0.5, mode="adaptive", adaptive_check_stride=50
        )
        assert adaptive.leverage_calls <= faithful.leverage_calls
        assert adaptive.iterations % 50 == 0 or (
            adaptive.iterations == adaptive.schedule.num_rounds
        )
        assert adaptive.certificate.passed
        assert adaptive.one_sided_certificate.passed

    def test_certificates_right_invariant(self):
        A = random_matrix(12, 30, 3)
        R = conditioned_square(13, 3, cond=50.0)
        res = two_sided_lewis(A, p=4.0, alpha=0.5)
        res_rot = two_sided_lewis(A @ R, p=4.0, alpha=0.5)
        assert res_rot.certificate.min_ratio == pytest.approx(
            res.certificate.min_ratio, abs=1e-6
        )
        assert res_rot.certificate.max_ratio == pytest.approx(
            res.certificate.max_ratio, abs=1e-6
        )

    def test_sketch_backend_deterministic(self):
        A = random_matrix(14, 30, 3)
        kwargs = dict(mode="adaptive", backend="sketch", seed=99)
        first = two_sided_lewis(A, 4.0, 0.5, **kwargs)
        second = two_sided_lewis(A, 4.0, 0.5, **kwargs)
        assert np.array_equal(first.weights, second.weights)
        assert first.backend == {
            "name": "sketch", "seed": 99, "eps": None, "delta": 1e-2,
        }

    def test_rejects_bad_arguments(self):
        A = random_matrix(15, 10, 2)
        with pytest.raises(ValueError):
            two_sided_lewis(A, p=1.5, alpha=0.5)
        with pytest.raises(ValueError):
            two_sided_lewis(A, p=4.0, alpha=1.5)
        with pytest.raises(ValueError):
            two_sided_lewis(A, p=4.0, alpha=0.5, mode="turbo")
        with pytest.raises(ValueError):
            two_sided_lewis(A, p=4.0, alpha=0.5, backend="gpu")
