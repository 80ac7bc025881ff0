"""Self-check battery: quadrature oracles, centering identities, screening
property, gradient correctness, and solver certificates.

Each check recomputes a quantity through an independent route (closed form
vs adaptive quadrature, analytic gradient vs finite differences, empirical
objective vs population tensor-grid integral) and reports the measured
residual against its bound. The functions under test are injectable so a
deliberately corrupted implementation demonstrably fails its check.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .model import CandidateBasis, eval_energy, gaussian_model
from .mrd import (
    MRDParams,
    centered_local_energy,
    centered_monomial_matrix,
    centering_coefficient,
    mrd_density,
    moment_finiteness_matrix,
)
from .objectives import IsodusObjective, PLObjective, QuadratureConfig
from .quadrature import integrate_real_line
from .sampling import SampleSet
from .solver import SolveConfig, minimize, optimality_certificate
from .fixtures import quartic1d

__all__ = [
    "CheckResult",
    "check_quadrature_oracles",
    "check_mrd_normalization",
    "check_centering_coefficients",
    "check_centering_orthogonality",
    "check_population_gradient",
    "check_gradient_fd",
    "check_moment_diagnostic",
    "check_solver_certificate",
    "run_all",
    "report_dict",
]

_SETTINGS_9 = [(nu, delta) for nu in (0.5, 2.0, 4.0) for delta in (0.5, 2.0, 4.0)]
_SETTINGS_3 = [(2.0, 2.0), (1.0, 1.0), (0.5, 3.0)]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    residual: float
    bound: float
    seconds: float
    detail: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def _result(name, residual, bound, t0, detail="") -> CheckResult:
    return CheckResult(
        name=name,
        passed=bool(residual <= bound),
        residual=float(residual),
        bound=float(bound),
        seconds=time.perf_counter() - t0,
        detail=detail,
    )


def check_quadrature_oracles() -> CheckResult:
    """Adaptive line integrals against closed-form Gamma-function values."""
    t0 = time.perf_counter()
    cases = [
        (lambda x: np.exp(-(x**2)), math.sqrt(math.pi)),
        (lambda x: x**2 * np.exp(-(x**2)), math.sqrt(math.pi) / 2.0),
        (lambda x: np.exp(-np.abs(x) ** 3), 2.0 * math.gamma(4.0 / 3.0)),
        (lambda x: np.exp(-np.abs(x) ** 1.5), 2.0 * math.gamma(1.0 + 2.0 / 3.0)),
        (lambda x: x**4 * np.exp(-(x**2) / 2.0), 3.0 * math.sqrt(2.0 * math.pi)),
    ]
    worst = 0.0
    for fn, exact in cases:
        got = integrate_real_line(fn, rel_tol=1e-12).value
        worst = max(worst, abs(got - exact) / abs(exact))
    return _result("quadrature-oracles", worst, 1e-10, t0,
                   f"{len(cases)} closed-form integrals")


def check_mrd_normalization(
    density_fn: Callable = mrd_density,
) -> CheckResult:
    """The reweighting density must integrate to one."""
    t0 = time.perf_counter()
    worst = 0.0
    for s in (2, 4):
        for nu, delta in _SETTINGS_9:
            params = MRDParams(nu=nu, delta=delta, s=s)
            total = integrate_real_line(
                lambda x: density_fn(params, x), rel_tol=1e-12
            ).value
            worst = max(worst, abs(total - 1.0))
    return _result("mrd-normalization", worst, 1e-10, t0,
                   f"{2 * len(_SETTINGS_9)} (nu, delta, s) settings")


def check_centering_coefficients(
    coefficient_fn: Callable = centering_coefficient,
) -> CheckResult:
    """Analytic even-power centering constants against direct quadrature."""
    t0 = time.perf_counter()
    worst = 0.0
    for nu, delta in _SETTINGS_9:
        params = MRDParams(nu=nu, delta=delta, s=6)
        for power in (2, 4, 6):
            analytic = coefficient_fn(params, power)
            quad = integrate_real_line(
                lambda x: x**power * mrd_density(params, x), rel_tol=1e-13
            ).value
            worst = max(worst, abs(analytic - quad) / abs(quad))
    return _result("centering-coefficients", worst, 1e-10, t0,
                   f"powers (2, 4, 6) x {len(_SETTINGS_9)} settings")


def check_centering_orthogonality(
    coefficient_fn: Callable = centering_coefficient,
) -> CheckResult:
    """Centered monomials integrate to zero against the reweighting density."""
    t0 = time.perf_counter()
    worst = 0.0
    for nu, delta in _SETTINGS_9:
        params = MRDParams(nu=nu, delta=delta, s=6)
        for power in range(1, 7):
            shift = coefficient_fn(params, power) if power % 2 == 0 else 0.0
            total = integrate_real_line(
                lambda x: (x**power - shift) * mrd_density(params, x),
                rel_tol=1e-12, abs_tol=1e-13,
            ).value
            worst = max(worst, abs(total))
    return _result("centering-orthogonality", worst, 1e-9, t0,
                   f"powers 1..6 x {len(_SETTINGS_9)} settings")


def _tensor_grid(p: int, half_width: float, nodes_1d: int):
    # split each axis at 0: the reweighting density has an |x|^(s+delta)
    # kink there, and panel-aligned kinks keep the rule spectrally accurate
    xr, wr = np.polynomial.legendre.leggauss(nodes_1d // 2)
    xr = (xr + 1.0) * (half_width / 2.0)
    wr = wr * (half_width / 2.0)
    x = np.concatenate([-xr[::-1], xr])
    w = np.concatenate([wr[::-1], wr])
    if p == 1:
        return x[:, None], w
    axes = np.meshgrid(*([x] * p), indexing="ij")
    points = np.stack([a.ravel() for a in axes], axis=1)
    weights = w
    for _ in range(p - 1):
        weights = np.multiply.outer(weights, w)
    return points, weights.ravel()


def _population_gradient(model, node, basis, params, half_width, nodes_1d):
    """Screening-objective gradient under the exact model law, by tensor grid."""
    points, weights = _tensor_grid(model.p, half_width, nodes_1d)
    energy = eval_energy(model, points)
    z = float((weights * np.exp(energy)).sum())
    cle = centered_local_energy(basis.local_view(node), params)
    g = centered_monomial_matrix(cle, points)
    theta = np.array([
        model.terms.get(k, 0.0) for k in basis.local_terms(node)
    ])
    # exp(theta.g + E) stays bounded: the node's own energy terms cancel
    mass = np.exp(g @ theta + energy) * mrd_density(params, points[:, node])
    return (g * (mass * weights)[:, None]).sum(axis=0) / z


def check_population_gradient() -> CheckResult:
    """At the true parameters the screening gradient vanishes in expectation."""
    t0 = time.perf_counter()
    gaussian = gaussian_model(np.array([[1.0, 0.25], [0.25, 1.0]]))
    quartic = quartic1d()
    cases = [
        (gaussian, CandidateBasis.full(2, 2), 10.0, 120),
        (quartic, CandidateBasis.full(1, 4), 6.0, 400),
    ]
    worst = 0.0
    for model, basis, half_width, nodes in cases:
        for nu, delta in _SETTINGS_3:
            params = MRDParams(nu=nu, delta=delta, s=basis.s)
            grad = _population_gradient(model, 0, basis, params, half_width, nodes)
            worst = max(worst, float(np.abs(grad).max()))
    return _result("population-gradient", worst, 1e-6, t0,
                   f"2 models x {len(_SETTINGS_3)} (nu, delta) settings")


def _evaluate(objective, theta):
    out = objective(theta)
    if hasattr(out, "gradient"):
        return float(out.value), np.asarray(out.gradient, dtype=float)
    value, gradient = out
    return float(value), np.asarray(gradient, dtype=float)


def _random_config(rng):
    """One random (model shape, theta, data) triple for gradient checking."""
    p = int(rng.integers(1, 4))
    s = int(rng.choice([2, 4]))
    basis = CandidateBasis.full(p, s, max_arity=min(p, 2))
    node = int(rng.integers(0, p))
    terms = basis.local_terms(node)
    theta = rng.uniform(-0.3, 0.3, size=len(terms))
    # keep the conditional density normalizable: positive even leading power
    top = max(k.multiplicity(node) for k in terms)
    top_even = top if top % 2 == 0 else top - 1
    for i, k in enumerate(terms):
        if k.multiplicity(node) == top_even and k.arity == 1:
            theta[i] = rng.uniform(0.5, 1.0)
    data = rng.normal(0.0, 1.0, size=(200, p))
    return basis, node, theta, SampleSet(data)


def check_gradient_fd(
    seed: int = 20260822,
    n_configs: int = 20,
    wrap_isodus: Callable | None = None,
    wrap_pl: Callable | None = None,
) -> CheckResult:
    """Analytic gradients of both objectives against central differences."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    tight = QuadratureConfig(rel_tol=1e-10, abs_tol=1e-14)
    worst = 0.0
    for _ in range(n_configs):
        basis, node, theta, samples = _random_config(rng)
        view = basis.local_view(node)
        params = MRDParams(nu=2.0, delta=2.0, s=basis.s)
        objectives = [
            IsodusObjective(centered_local_energy(view, params), samples),
            PLObjective(view, samples, tight),
        ]
        if wrap_isodus is not None:
            objectives[0] = wrap_isodus(objectives[0])
        if wrap_pl is not None:
            objectives[1] = wrap_pl(objectives[1])
        for objective in objectives:
            _, grad = _evaluate(objective, theta)
            for k in range(len(theta)):
                h = 1e-6 * max(1.0, abs(theta[k]))
                up, down = theta.copy(), theta.copy()
                up[k] += h
                down[k] -= h
                fd = (_evaluate(objective, up)[0] - _evaluate(objective, down)[0]) / (2 * h)
                rel = abs(grad[k] - fd) / max(1.0, abs(grad[k]))
                worst = max(worst, rel)
    return _result("gradient-fd", worst, 1e-5, t0,
                   f"{n_configs} random configurations, both objectives")


def check_moment_diagnostic() -> CheckResult:
    """Sign pattern and exact value of the second-moment test determinant."""
    t0 = time.perf_counter()
    dets = {m: moment_finiteness_matrix(m, 1.0, 1.0, 1.0)[1] for m in range(1, 21)}
    exact = dets[20] == -51.25
    signs = dets[1] > 0 and dets[20] < 0
    crossing = any(dets[m] < 0 for m in range(1, 21))
    residual = 0.0 if (exact and signs and crossing) else 1.0
    return _result(
        "moment-diagnostic", residual, 0.0, t0,
        f"det(m=1)={dets[1]:g}, det(m=20)={dets[20]:g}",
    )


def check_solver_certificate() -> CheckResult:
    """Converged fits re-verify optimality; strong penalties give exact zeros."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    model = gaussian_model(np.array([[1.0, 0.25], [0.25, 1.0]]))
    basis = CandidateBasis.full(2, 2)
    data = rng.normal(0.0, 1.0, size=(400, 2))
    samples = SampleSet(data)
    view = basis.local_view(0)
    params = MRDParams(nu=2.0, delta=2.0, s=2)
    objective = IsodusObjective(centered_local_energy(view, params), samples)
    worst = 0.0
    smooth = minimize(objective, np.zeros(3), SolveConfig())
    worst = max(worst, optimality_certificate(objective, smooth.theta))
    strong = minimize(objective, np.zeros(3), SolveConfig(), l1_weights=np.array([0.5, 0.5, 0.0]))
    worst = max(worst, optimality_certificate(objective, strong.theta,
                                              np.array([0.5, 0.5, 0.0])))
    if not (strong.theta[0] == 0.0 and strong.theta[1] == 0.0):
        worst = max(worst, 1.0)
    return _result("solver-certificate", worst, 1e-8, t0,
                   "unpenalized + strongly penalized fits")


def run_all(
    coefficient_fn: Callable = centering_coefficient,
    wrap_isodus: Callable | None = None,
    wrap_pl: Callable | None = None,
    fd_configs: int = 20,
) -> list[CheckResult]:
    return [
        check_quadrature_oracles(),
        check_mrd_normalization(),
        check_centering_coefficients(coefficient_fn),
        check_centering_orthogonality(coefficient_fn),
        check_population_gradient(),
        check_gradient_fd(n_configs=fd_configs, wrap_isodus=wrap_isodus, wrap_pl=wrap_pl),
        check_moment_diagnostic(),
        check_solver_certificate(),
    ]


def report_dict(results: list[CheckResult]) -> dict:
    return {
        "passed": all(r.passed for r in results),
        "checks": [r.as_dict() for r in results],
    }
