"""Per-node empirical objectives: interaction screening and pseudo-likelihood.

Both objectives are convex in the local parameter vector theta_i (ordered as
in the node's LocalView / CenteredLocalEnergy):

- isodus: <exp(sum_k theta_k g_k(x)) * R(x_i)> over samples, with g_k the
  MRD-centered monomials. The exponent is affine in theta, so this is a
  positive combination of exponentials of affine maps.
- pl: <sum_k theta_k f_k(x) + log Z_i(x_rest; theta)> with Z_i the conditional
  normalizer in x_i, computed per sample by adaptive quadrature (a closed form
  replaces quadrature when x_i enters at most quadratically).

Evaluations are deterministic: fixed sample order, fixed reduction order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IntegrabilityError, ObjectiveOverflowError
from .model import LocalView, MultiIndex, monomial_matrix
from .mrd import CenteredLocalEnergy, centered_monomial_matrix, mrd_density
from .quadrature import exp_poly_moments
from .sampling import SampleSet

__all__ = [
    "MAX_EXPONENT",
    "QuadratureConfig",
    "ObjectiveEvaluation",
    "IsodusObjective",
    "PLObjective",
    "isodus_objective",
    "pl_objective",
    "local_partition",
    "l1_coefficient",
    "regularized_objective",
]

# exp() overflows just above 709; anything beyond this is reported, not clipped.
MAX_EXPONENT = 700.0


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances for the conditional-normalizer quadrature."""

    rel_tol: float = 1e-7
    abs_tol: float = 1e-12
    max_panels: int = 512
    chunk: int = 2048
    gaussian_closed_form: bool = True

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_panels < 32 or self.chunk < 1:
            raise ValueError("max_panels must be >= 32 and chunk >= 1")


@dataclass(frozen=True)
class ObjectiveEvaluation:
    value: float
    gradient: np.ndarray
    quad_panels: int = 0
    max_exponent: float = 0.0


class IsodusObjective:
    """Screening objective for one node over a fixed sample set.

    Precomputes the centered monomial matrix G (n, K) and the MRD weights
    R(x_i) once; each evaluation is one matvec, one exp, and one matvec back.
    """

    def __init__(self, cle: CenteredLocalEnergy, samples: SampleSet):
        x = samples.data
        self.g = centered_monomial_matrix(cle, x)
        self.weights = np.asarray(mrd_density(cle.params, x[:, cle.node]))
        self.n = x.shape[0]
        self.dim = self.g.shape[1]

    def __call__(self, theta: np.ndarray) -> ObjectiveEvaluation:
        theta = np.asarray(theta, dtype=float)
        expo = self.g @ theta
        max_expo = float(expo.max()) if self.n else 0.0
        if max_expo > MAX_EXPONENT:
            idx = int(np.argmax(expo))
            raise ObjectiveOverflowError(
                f"screening exponent {max_expo:.1f} exceeds {MAX_EXPONENT:.0f} "
                f"at sample {idx}",
                sample_index=idx,
            )
        w = np.exp(expo) * self.weights
        value = float(w.mean())
        grad = self.g.T @ w / self.n
        return ObjectiveEvaluation(value=value, gradient=grad, max_exponent=max_expo)


def _reduced_matrix(order: tuple[MultiIndex, ...], node: int, x: np.ndarray) -> np.ndarray:
    """u_k(x_rest) = f_k / x_node^{power}: shape (n, K)."""
    cols = np.ones((x.shape[0], len(order)))
    for j, k in enumerate(order):
        rest = k.without(node)
        if rest is not None:
            cols[:, j] = monomial_matrix((rest,), x)[:, 0]
    return cols


class PLObjective:
    """Pseudo-likelihood objective for one node over a fixed sample set.

    The conditional energy in x_i given a sample's other coordinates is the
    polynomial P(t) = sum_l A_l t^l with A_l = sum_{k: power(k)=l} theta_k
    u_k(x_rest). Samples with byte-identical conditioning vectors share one
    integral; with a single variable there is nothing to condition on and the
    integral count stays proportional to n by construction.
    """

    def __init__(self, view: LocalView, samples: SampleSet, qcfg: QuadratureConfig):
        x = samples.data
        self.node = view.node
        self.order = view.order
        self.qcfg = qcfg
        self.f = monomial_matrix(view.order, x)
        self.powers = np.array([k.multiplicity(view.node) for k in view.order])
        self.smax = int(self.powers.max())
        self.n = x.shape[0]
        u_full = _reduced_matrix(view.order, view.node, x)
        if x.shape[1] >= 2:
            rest = np.delete(x, view.node, axis=1)
            _, first, inverse = np.unique(
                rest, axis=0, return_index=True, return_inverse=True
            )
            self.u = u_full[first]
            self.inverse = inverse
        else:
            self.u = u_full
            self.inverse = np.arange(self.n)
        self.n_groups = self.u.shape[0]
        # Column lists per power, for assembling conditional coefficients.
        self._by_power = [
            np.flatnonzero(self.powers == l) for l in range(self.smax + 1)
        ]

    def _coefficients(self, theta: np.ndarray) -> np.ndarray:
        coeffs = np.zeros((self.n_groups, self.smax + 1))
        for l in range(1, self.smax + 1):
            cols = self._by_power[l]
            if cols.size:
                coeffs[:, l] = self.u[:, cols] @ theta[cols]
        return coeffs

    def _moment_ratios(self, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
        """Per group: log Z and the conditional moments E[t^l], l = 0..smax."""
        if self.qcfg.gaussian_closed_form and self.smax == 2:
            a1, a2 = coeffs[:, 1], coeffs[:, 2]
            if np.any(a2 <= 0.0):
                g = int(np.argmax(a2 <= 0.0))
                raise IntegrabilityError(
                    f"conditional quadratic coefficient <= 0 for group {g}"
                )
            log_z = 0.5 * np.log(np.pi / a2) + a1 * a1 / (4.0 * a2)
            m1 = -a1 / (2.0 * a2)
            ratios = np.column_stack([np.ones_like(m1), m1, m1 * m1 + 0.5 / a2])
            return log_z, ratios, 0
        # Structural pre-check: every group's conditional polynomial must grow
        # at +-infinity (highest nonzero coefficient at an even power, > 0).
        nonzero = np.abs(coeffs) > 0.0
        has_any = nonzero.any(axis=1)
        top = np.where(has_any, coeffs.shape[1] - 1 - np.argmax(nonzero[:, ::-1], axis=1), 0)
        lead = coeffs[np.arange(self.n_groups), top]
        bad = (~has_any) | (top % 2 == 1) | (lead <= 0.0)
        if bad.any():
            g = int(np.argmax(bad))
            raise IntegrabilityError(
                f"conditional energy polynomial for group {g} does not decay"
            )
        moments = np.empty((self.n_groups, self.smax + 1))
        panels = 0
        for start in range(0, self.n_groups, self.qcfg.chunk):
            chunk = slice(start, min(start + self.qcfg.chunk, self.n_groups))
            m, used = exp_poly_moments(
                coeffs[chunk],
                self.smax,
                rel_tol=self.qcfg.rel_tol,
                abs_tol=self.qcfg.abs_tol,
                max_panels=self.qcfg.max_panels,
            )
            moments[chunk] = m
            panels += used
        z = moments[:, 0]
        with np.errstate(divide="ignore"):
            log_z = np.log(z)
        if not np.all(np.isfinite(log_z)):
            g = int(np.flatnonzero(~np.isfinite(log_z))[0])
            raise ObjectiveOverflowError(
                f"conditional normalizer under/overflowed for group {g}",
                sample_index=int(np.flatnonzero(self.inverse == g)[0]),
            )
        return log_z, moments / z[:, None], panels

    def __call__(self, theta: np.ndarray) -> ObjectiveEvaluation:
        theta = np.asarray(theta, dtype=float)
        coeffs = self._coefficients(theta)
        log_z, ratios, panels = self._moment_ratios(coeffs)
        lin = self.f @ theta
        value = float(lin.mean()) + float(log_z[self.inverse].mean())
        # E_cond[f_k] = u_k * E[t^{power_k}]; gradient is <f_k - E_cond[f_k]>.
        cond = self.u * ratios[:, self.powers]
        grad = self.f.mean(axis=0) - cond[self.inverse].mean(axis=0)
        return ObjectiveEvaluation(
            value=value, gradient=grad, quad_panels=panels
        )


def isodus_objective(
    cle: CenteredLocalEnergy, theta_i: np.ndarray, samples: SampleSet
) -> ObjectiveEvaluation:
    """One-shot screening objective evaluation (see IsodusObjective)."""
    return IsodusObjective(cle, samples)(theta_i)


def pl_objective(
    view: LocalView,
    theta_i: np.ndarray,
    samples: SampleSet,
    qcfg: QuadratureConfig | None = None,
) -> ObjectiveEvaluation:
    """One-shot pseudo-likelihood evaluation (see PLObjective)."""
    return PLObjective(view, samples, qcfg or QuadratureConfig())(theta_i)


def local_partition(
    view: LocalView,
    theta_i: np.ndarray,
    x: np.ndarray,
    qcfg: QuadratureConfig | None = None,
) -> float:
    """Conditional normalizer Z_i(x_rest) = integral exp(E_i(t | x_rest)) dt.

    `x` is a full-length point whose node-i entry is ignored. Always computed
    by quadrature; integrability of the conditional is required.
    """
    qcfg = qcfg or QuadratureConfig()
    theta_i = np.asarray(theta_i, dtype=float)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    u = _reduced_matrix(view.order, view.node, x)
    powers = np.array([k.multiplicity(view.node) for k in view.order])
    smax = int(powers.max())
    coeffs = np.zeros((1, smax + 1))
    for l in range(1, smax + 1):
        cols = np.flatnonzero(powers == l)
        if cols.size:
            coeffs[0, l] = u[0, cols] @ theta_i[cols]
    top = int(np.max(np.flatnonzero(np.abs(coeffs[0]) > 0))) if np.any(coeffs[0]) else 0
    if top == 0 or top % 2 or coeffs[0, top] <= 0:
        raise IntegrabilityError(
            "conditional energy polynomial does not decay at infinity"
        )
    moments, _ = exp_poly_moments(
        coeffs,
        0,
        rel_tol=qcfg.rel_tol,
        abs_tol=qcfg.abs_tol,
        max_panels=qcfg.max_panels,
    )
    return float(moments[0, 0])


def l1_coefficient(lam: float, p: int, n: int) -> float:
    """Effective l1 weight lam * sqrt(log(p) / n)."""
    if p < 1 or n < 1:
        raise ValueError(f"need p >= 1 and n >= 1, got p={p}, n={n}")
    return lam * math.sqrt(math.log(p) / n)


def regularized_objective(objective, lam: float, p: int, n: int, theta_i) -> float:
    """base(theta) + lam sqrt(log p / n) * ||theta||_1."""
    theta_i = np.asarray(theta_i, dtype=float)
    ev = objective(theta_i)
    return float(ev.value) + l1_coefficient(lam, p, n) * float(np.abs(theta_i).sum())
