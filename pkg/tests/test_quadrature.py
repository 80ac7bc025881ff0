import math

import numpy as np
import pytest
from scipy import integrate as scipy_integrate

from polygm import (
    IntegrabilityError,
    QuadratureAccuracyError,
    exp_poly_moments,
    integrate,
    integrate_real_line,
)


def test_polynomial_on_interval_is_exact():
    res = integrate(lambda x: 3.0 * x**2, 0.0, 2.0)
    assert res.value == pytest.approx(8.0, rel=1e-13)


def test_gaussian_integral_matches_closed_form():
    res = integrate_real_line(lambda x: np.exp(-(x**2)))
    assert res.value == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert res.error <= 1e-10 * res.value


def test_oscillatory_integrand_against_scipy():
    def f(x):
        return np.cos(3.0 * x) * np.exp(-0.5 * x**2)

    ours = integrate_real_line(f, rel_tol=1e-12)
    ref, _ = scipy_integrate.quad(f, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-13)
    assert ours.value == pytest.approx(ref, rel=1e-10)


def test_kinked_absolute_value_tail_against_scipy():
    # |x|^2.3 tails have a kink at 0; the adaptive splitter must handle it
    def f(x):
        return np.exp(-1.7 * np.abs(x) ** 2.3)

    ours = integrate_real_line(f, rel_tol=1e-11)
    ref, _ = scipy_integrate.quad(f, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-13)
    assert ours.value == pytest.approx(ref, rel=1e-9)


def test_divergent_integrand_raises():
    with pytest.raises((IntegrabilityError, QuadratureAccuracyError)):
        integrate_real_line(lambda x: np.exp(0.0 * x) + 1.0)


def test_accuracy_failure_reports_panel_budget():
    # visible peak, too sharp for an 8-panel budget at this tolerance
    def peak(x):
        return np.exp(-((x - 0.37) ** 2) * 2500.0)

    with pytest.raises(QuadratureAccuracyError):
        integrate(peak, -1.0, 1.0, rel_tol=1e-12, max_panels=8)


def test_exp_poly_moments_gaussian_closed_forms():
    # P(x) = x^2: moments of exp(-x^2)
    coeffs = np.array([[0.0, 0.0, 1.0]])
    m, _ = exp_poly_moments(coeffs, 4, rel_tol=1e-10)
    s = math.sqrt(math.pi)
    np.testing.assert_allclose(
        m[0], [s, 0.0, 0.5 * s, 0.0, 0.75 * s], rtol=1e-9, atol=1e-11
    )


def test_exp_poly_moments_batch_matches_scipy_quartic():
    # two quartic conditionals with linear and cubic tilts
    coeffs = np.array(
        [
            [0.0, 0.5, 1.0, 0.0, 0.8],
            [0.0, -1.0, 0.3, 0.2, 1.5],
        ]
    )
    m, _ = exp_poly_moments(coeffs, 2, rel_tol=1e-9)
    for g in range(2):
        poly = coeffs[g]

        def density(x, c=poly):
            return np.exp(-np.polyval(c[::-1], x))

        for order in range(3):
            ref, _ = scipy_integrate.quad(
                lambda x: x**order * density(x), -np.inf, np.inf,
                epsabs=1e-12, epsrel=1e-12,
            )
            assert m[g, order] == pytest.approx(ref, rel=1e-7)


def test_exp_poly_moments_flags_divergent_batch_member():
    # second member has a negative quartic coefficient: integral diverges
    coeffs = np.array([[0.0, 0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0, -1.0]])
    with pytest.raises((IntegrabilityError, QuadratureAccuracyError)):
        exp_poly_moments(coeffs, 2)


def test_exp_poly_moments_shares_refinement_across_batch():
    rng = np.random.default_rng(5)
    quad = np.zeros((6, 3))
    quad[:, 2] = rng.uniform(0.5, 3.0, size=6)
    quad[:, 1] = rng.uniform(-1.0, 1.0, size=6)
    m, panels = exp_poly_moments(quad, 2, rel_tol=1e-9)
    for g in range(6):
        a1, a2 = quad[g, 1], quad[g, 2]
        z = math.sqrt(math.pi / a2) * math.exp(a1 * a1 / (4 * a2))
        assert m[g, 0] == pytest.approx(z, rel=1e-8)
        assert m[g, 1] / m[g, 0] == pytest.approx(-a1 / (2 * a2), rel=1e-6, abs=1e-9)
    assert panels < 512
