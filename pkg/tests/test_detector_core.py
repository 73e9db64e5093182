"""Tests for the detection pipeline and error-probability machinery."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from mberlink.detector_core import (
    decision_statistic,
    error_probability,
    filter_and_decide,
    gradient_S,
    gradient_w,
    kernel_density,
    project,
    q_function,
)

# Q(1) frozen from a 50-digit complementary-error-function evaluation
# (mpmath: 0.5*erfc(1/sqrt(2))).
Q_OF_ONE = 0.15865525393145705141


def random_instance(rng, m_max=8, d_max=4, bounded=True):
    """Random (S, w, r, b, rho) with a healthy decision statistic.

    ``bounded`` keeps |x_tilde| / (rho sqrt(n)) below 2.5 so the
    exponential factor cannot underflow the gradients into the noise
    floor of a finite-difference comparison.
    """
    while True:
        m = int(rng.integers(2, m_max + 1))
        d = int(rng.integers(1, min(m, d_max) + 1))
        S = rng.standard_normal((m, d)) + 1j * rng.standard_normal((m, d))
        w = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        r = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        b = int(rng.choice([-1, 1]))
        rho = float(rng.uniform(0.5, 2.0))
        sw = S @ w
        n = np.vdot(sw, sw).real
        if n < 1e-3:
            continue
        xt = b * np.vdot(w, S.conj().T @ r).real
        if bounded and abs(xt) / (rho * np.sqrt(n)) > 2.5:
            continue
        return S, w, r, b, rho


def pipeline_error(S, w, r, b, rho):
    """Error probability of the full pipeline, recomputed from scratch."""
    x = complex(np.vdot(w, S.conj().T @ r))
    sw = S @ w
    return error_probability(decision_statistic(x, b), np.vdot(sw, sw).real, rho)


class TestProject:
    def test_identity_block_selects_leading_entries(self):
        r = np.arange(6, dtype=complex) + 1j
        S = np.zeros((6, 3), dtype=complex)
        S[:3, :3] = np.eye(3)
        assert np.array_equal(project(S, r), r[:3])

    def test_full_identity_is_noop(self):
        r = np.arange(4, dtype=complex) - 2j
        assert np.array_equal(project(np.eye(4, dtype=complex), r), r)

    def test_matches_triple_loop_oracle(self):
        rng = np.random.default_rng(1)
        S = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
        r = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        expected = np.zeros(3, dtype=complex)
        for d in range(3):
            for m in range(6):
                expected[d] += np.conj(S[m, d]) * r[m]
        np.testing.assert_allclose(project(S, r), expected, rtol=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            project(np.eye(3, dtype=complex), np.zeros(4, dtype=complex))


class TestFilterAndDecide:
    def test_unit_filter_passes_entry(self):
        w = np.array([1.0 + 0j, 0.0])
        stat, bit = filter_and_decide(w, np.array([2 + 1j, -5 + 0j]))
        assert stat.x == 2 + 1j
        assert bit == 1

    def test_zero_input_ties_to_plus_one(self):
        stat, bit = filter_and_decide(np.array([1 + 0j]), np.array([0j]))
        assert bit == 1
        assert stat.x == 0

    def test_matches_summation_oracle(self):
        rng = np.random.default_rng(2)
        w = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        rbar = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        stat, bit = filter_and_decide(w, rbar)
        expected = sum(np.conj(w[i]) * rbar[i] for i in range(5))
        assert stat.x == pytest.approx(expected, rel=1e-14)
        assert bit == (1 if expected.real >= 0 else -1)


class TestQFunction:
    def test_zero_is_half(self):
        assert q_function(0.0) == pytest.approx(0.5, abs=1e-15)

    def test_reflection_identity(self):
        assert q_function(-1.7) == pytest.approx(1 - q_function(1.7), abs=1e-14)

    def test_q_of_one(self):
        assert q_function(1.0) == pytest.approx(Q_OF_ONE, abs=1e-14)

    def test_symmetry_on_grid(self):
        x = np.arange(-32, 33) * 0.25
        np.testing.assert_allclose(q_function(x) + q_function(-x), 1.0, atol=1e-12)


class TestKernelDensity:
    def test_peak_value(self):
        assert kernel_density(0.3, 0.3, 1.0, 1.0) == pytest.approx(
            1.0 / np.sqrt(2 * np.pi), abs=1e-14
        )

    def test_integrates_to_one(self):
        center, norm_sq, rho = 0.4, 2.3, 0.7
        width = rho * np.sqrt(norm_sq)
        total, _ = quad(
            lambda t: kernel_density(t, center, norm_sq, rho),
            center - 12 * width,
            center + 12 * width,
        )
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_even_about_center(self):
        assert kernel_density(1.0 + 0.3, 1.0, 0.8, 1.3) == pytest.approx(
            kernel_density(1.0 - 0.3, 1.0, 0.8, 1.3), abs=1e-15
        )

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            kernel_density(0.0, 0.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            kernel_density(0.0, 0.0, 1.0, -1.0)


class TestErrorProbability:
    def test_zero_statistic_is_half(self):
        stat = decision_statistic(0.0 + 3.0j, 1)
        assert error_probability(stat, 5.0, 0.1) == pytest.approx(0.5, abs=1e-15)

    def test_known_value(self):
        stat = decision_statistic(0.7 + 0j, 1)
        assert error_probability(stat, 1.0, 0.7) == pytest.approx(Q_OF_ONE, abs=1e-13)

    def test_joint_flip_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            x = complex(rng.standard_normal() + 1j * rng.standard_normal())
            n, rho = float(rng.uniform(0.1, 3)), float(rng.uniform(0.1, 2))
            p1 = error_probability(decision_statistic(x, 1), n, rho)
            p2 = error_probability(decision_statistic(-x, -1), n, rho)
            assert p1 == p2

    def test_strictly_decreasing_in_signed_statistic(self):
        values = np.linspace(-4, 4, 41)
        probs = [
            error_probability(decision_statistic(complex(v), 1), 1.3, 0.6)
            for v in values
        ]
        assert all(a > b for a, b in zip(probs, probs[1:]))

    @settings(deadline=None, max_examples=40)
    @given(
        scale=st.floats(min_value=0.01, max_value=100),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    def test_positive_scaling_of_filter_is_invariant(self, scale, seed):
        """Scaling w by c > 0 scales Re[x] and sqrt(norm) alike: P_e unchanged."""
        rng = np.random.default_rng(seed)
        S, w, r, b, rho = random_instance(rng, bounded=False)
        p1 = pipeline_error(S, w, r, b, rho)
        p2 = pipeline_error(S, scale * w, r, b, rho)
        assert p2 == pytest.approx(p1, rel=1e-9, abs=1e-300)


class TestGradients:
    def test_gradient_w_zero_output_closed_form(self):
        """At Re[x]=0 and unit norm only the excitation term survives."""
        S = np.zeros((5, 2), dtype=complex)
        S[:2, :2] = np.eye(2)
        w = np.array([1.0 + 0j, 0.0])
        r = np.array([2.0j, 0.5 + 1j, 1.0, 0, 0])  # w^H S^H r = r[0] = 2j
        rho = 0.8
        for b in (-1, 1):
            g = gradient_w(S, w, r, b, rho)
            expected = -b / (2 * np.sqrt(2 * np.pi) * rho) * (S.conj().T @ r)
            np.testing.assert_allclose(g, expected, rtol=1e-13)

    def test_gradient_S_zero_output_closed_form(self):
        S = np.zeros((5, 2), dtype=complex)
        S[:2, :2] = np.eye(2)
        w = np.array([1.0 + 0j, 0.0])
        r = np.array([2.0j, 0.5 + 1j, 1.0, 0, 0])
        rho = 1.1
        g = gradient_S(S, w, r, 1, rho)
        expected = -1 / (2 * np.sqrt(2 * np.pi) * rho) * np.outer(r, w.conj())
        np.testing.assert_allclose(g, expected, rtol=1e-13)

    def test_gradients_invariant_under_joint_negation(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            S, w, r, b, rho = random_instance(rng, bounded=False)
            np.testing.assert_array_equal(
                gradient_w(S, w, r, b, rho), gradient_w(S, w, -r, -b, rho)
            )
            np.testing.assert_array_equal(
                gradient_S(S, w, r, b, rho), gradient_S(S, w, -r, -b, rho)
            )

    def test_zero_filter_rejected(self):
        S = np.eye(4, dtype=complex)
        w = np.zeros(4, dtype=complex)
        r = np.ones(4, dtype=complex)
        with pytest.raises(ValueError):
            gradient_w(S, w, r, 1, 1.0)
        with pytest.raises(ValueError):
            gradient_S(S, w, r, 1, 1.0)

    def test_gradient_w_matches_finite_differences(self):
        """Central differences of the full pipeline, parts perturbed separately."""
        rng = np.random.default_rng(5)
        h = 1e-6
        for _ in range(25):
            S, w, r, b, rho = random_instance(rng)
            g = gradient_w(S, w, r, b, rho)
            d = w.shape[0]
            analytic = np.concatenate([2 * g.real, 2 * g.imag])
            fd = np.zeros(2 * d)
            for i in range(d):
                for part, off in ((1.0, 0), (1j, d)):
                    wp, wm = w.copy(), w.copy()
                    wp[i] += part * h
                    wm[i] -= part * h
                    fd[i + off] = (
                        pipeline_error(S, wp, r, b, rho)
                        - pipeline_error(S, wm, r, b, rho)
                    ) / (2 * h)
            rel = np.linalg.norm(fd - analytic) / np.linalg.norm(analytic)
            assert rel <= 1e-6

    def test_gradient_S_matches_finite_differences(self):
        rng = np.random.default_rng(6)
        h = 1e-6
        for _ in range(10):
            S, w, r, b, rho = random_instance(rng, m_max=6, d_max=3)
            g = gradient_S(S, w, r, b, rho)
            m, d = S.shape
            analytic = np.concatenate([2 * g.real.ravel(), 2 * g.imag.ravel()])
            fd = np.zeros(2 * m * d)
            for part, off in ((1.0, 0), (1j, m * d)):
                for i in range(m):
                    for j in range(d):
                        Sp, Sm = S.copy(), S.copy()
                        Sp[i, j] += part * h
                        Sm[i, j] -= part * h
                        fd[off + i * d + j] = (
                            pipeline_error(Sp, w, r, b, rho)
                            - pipeline_error(Sm, w, r, b, rho)
                        ) / (2 * h)
            rel = np.linalg.norm(fd - analytic) / np.linalg.norm(analytic)
            assert rel <= 1e-6
