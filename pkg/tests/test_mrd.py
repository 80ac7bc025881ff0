import math

import mpmath as mp
import numpy as np
import pytest

from polygm import (
    MRDParams,
    MultiIndex,
    center_term,
    centered_local_energy,
    centered_monomial_matrix,
    centering_coefficient,
    eval_centered_energy,
    gaussian_model,
    integrate_real_line,
    moment_finiteness_matrix,
    mrd_density,
)

mp.mp.dps = 30


def mp_moment(power, nu, exponent):
    """Arbitrary-precision oracle for the even MRD moments."""
    return float(
        mp.power(nu, -mp.mpf(power) / exponent)
        * mp.gamma(mp.mpf(power + 1) / exponent)
        / mp.gamma(mp.mpf(1) / exponent)
    )


def test_params_validate_ranges():
    with pytest.raises(ValueError):
        MRDParams(nu=0.0, delta=1.0, s=2)
    with pytest.raises(ValueError):
        MRDParams(nu=1.0, delta=0.0, s=2)
    with pytest.raises(ValueError):
        MRDParams(nu=1.0, delta=1.0, s=0)
    boundary = MRDParams(nu=1.0, delta=0.0, s=2, allow_nonpositive_delta=True)
    assert boundary.exponent == 2.0


def test_density_normalizes_to_one():
    for nu, delta, s in [(0.5, 0.5, 2), (2.0, 2.0, 2), (4.0, 1.0, 4)]:
        params = MRDParams(nu=nu, delta=delta, s=s)
        res = integrate_real_line(lambda x: mrd_density(params, x))
        assert res.value == pytest.approx(1.0, rel=1e-11)


def test_density_frozen_point_values():
    params = MRDParams(nu=2.0, delta=2.0, s=2)
    assert mrd_density(params, 0.0) == pytest.approx(0.65600389733375293, rel=1e-14)
    assert mrd_density(params, 0.7) == pytest.approx(0.40584313988484612, rel=1e-14)
    np.testing.assert_allclose(
        mrd_density(params, np.array([-0.7, 0.7])),
        [0.40584313988484612] * 2,
        rtol=1e-14,
    )


def test_centering_coefficient_frozen_values():
    # nu=2, exponent 4: the 4th moment collapses to exactly 1/8
    params = MRDParams(nu=2.0, delta=2.0, s=2)
    assert centering_coefficient(params, 2) == pytest.approx(
        0.2389943987430625, rel=1e-14
    )
    assert centering_coefficient(params, 4) == pytest.approx(0.125, rel=1e-14)
    assert centering_coefficient(params, 6) == pytest.approx(
        0.089622899528648437, rel=1e-14
    )
    # nu=1, exponent 3: the 6th moment is exactly 4/9
    p3 = MRDParams(nu=1.0, delta=1.0, s=2)
    assert centering_coefficient(p3, 6) == pytest.approx(4.0 / 9.0, rel=1e-14)


def test_centering_coefficient_not_monotone_in_power():
    # heavier weighting near zero makes higher moments smaller here
    params = MRDParams(nu=2.0, delta=2.0, s=2)
    assert centering_coefficient(params, 2) > centering_coefficient(params, 4)


def test_centering_coefficients_match_mpmath_grid():
    for nu in (0.5, 1.0, 2.0, 4.0):
        for delta in (0.5, 1.0, 3.0):
            for s in (2, 4):
                params = MRDParams(nu=nu, delta=delta, s=s)
                for power in (2, 4, 6):
                    assert centering_coefficient(params, power) == pytest.approx(
                        mp_moment(power, nu, s + delta), rel=1e-13
                    )


def test_centering_coefficients_match_quadrature_moments():
    for nu, delta in [(0.5, 0.5), (2.0, 2.0), (4.0, 3.0)]:
        params = MRDParams(nu=nu, delta=delta, s=2)
        for power in (2, 4):
            res = integrate_real_line(
                lambda x: x**power * mrd_density(params, x), rel_tol=1e-12
            )
            assert centering_coefficient(params, power) == pytest.approx(
                res.value, rel=1e-10
            )


def test_centering_coefficient_rejects_odd_and_small_powers():
    params = MRDParams(nu=1.0, delta=1.0, s=2)
    for bad in (0, 1, 3, 5):
        with pytest.raises(ValueError):
            centering_coefficient(params, bad)


def test_center_term_even_power_subtracts_reduced_monomial():
    params = MRDParams(nu=2.0, delta=2.0, s=4)
    k = MultiIndex(((0, 2), (1, 1)))
    ct = center_term(params, k, node=0)
    assert ct.power == 2
    assert ct.coefficient == pytest.approx(centering_coefficient(params, 2))
    assert ct.reduced == MultiIndex.single(1)

    pure = center_term(params, MultiIndex.single(0, 4), node=0)
    assert pure.reduced is None  # constant shift

    odd = center_term(params, MultiIndex(((0, 1), (1, 1))), node=0)
    assert odd.coefficient == 0.0


def test_center_term_requires_membership():
    params = MRDParams(nu=1.0, delta=1.0, s=2)
    with pytest.raises(ValueError):
        center_term(params, MultiIndex.single(1, 2), node=0)


def test_centered_monomials_have_zero_mrd_average():
    # integral of g(x0) R(x0) dx0 must vanish for every term shape
    params = MRDParams(nu=1.5, delta=1.5, s=4)
    shapes = [
        MultiIndex.single(0, 2),
        MultiIndex.single(0, 3),
        MultiIndex.single(0, 4),
        MultiIndex(((0, 2), (1, 1))),
        MultiIndex(((0, 1), (1, 2))),
    ]
    for k in shapes:
        ct = center_term(params, k, node=0)
        rest = 1.7  # arbitrary fixed value for the non-integrated variable

        def g_times_r(x0):
            pts = np.column_stack([x0, np.full_like(x0, rest)])
            f = pts[:, 0] ** k.multiplicity(0) * rest ** k.multiplicity(1)
            red = rest ** k.multiplicity(1) if ct.reduced is not None else 1.0
            g = f - ct.coefficient * red
            return g * mrd_density(params, x0)

        res = integrate_real_line(g_times_r, rel_tol=1e-10, abs_tol=1e-13)
        assert abs(res.value) < 1e-12


def test_centered_energy_at_truth_is_screening_exponent(two_node_gaussian):
    params = MRDParams(nu=2.0, delta=2.0, s=2)
    view = two_node_gaussian.local_view(0)
    cle = centered_local_energy(view, params)
    x = np.array([[0.4, -1.1]])
    g = centered_monomial_matrix(cle, x)
    c2 = centering_coefficient(params, 2)
    np.testing.assert_allclose(
        g[0], [0.4**2 - c2, 0.4 * -1.1], rtol=1e-14
    )
    assert eval_centered_energy(cle, view.theta, x[0]) == pytest.approx(
        -(0.5 * (0.4**2 - c2) + 0.25 * 0.4 * -1.1)
    )


def test_centered_local_energy_rejects_underdeclared_order():
    model = gaussian_model(np.eye(2))
    params = MRDParams(nu=1.0, delta=1.0, s=1)
    with pytest.raises(ValueError):
        centered_local_energy(model.local_view(0), params)


def test_moment_finiteness_matrix_frozen_determinants():
    # nu = 1, theta = theta* = 1: m = 1 is comfortably finite, m = 20 is not
    _, det1 = moment_finiteness_matrix(1, theta_true=1.0, theta=1.0, nu=1.0)
    assert det1 == 1.0
    _, det20 = moment_finiteness_matrix(20, theta_true=1.0, theta=1.0, nu=1.0)
    assert det20 == -51.25
    with pytest.raises(ValueError):
        moment_finiteness_matrix(0, 1.0, 1.0, 1.0)


def test_moment_finiteness_sign_change_is_monotone():
    dets = [
        moment_finiteness_matrix(m, 1.0, 1.0, 1.0)[1] for m in range(1, 21)
    ]
    signs = [d > 0 for d in dets]
    # one sign change, positive to negative
    assert signs[0] and not signs[-1]
    flips = sum(a != b for a, b in zip(signs, signs[1:]))
    assert flips == 1
