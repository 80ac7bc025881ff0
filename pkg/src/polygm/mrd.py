"""Multiplicative regularizing distributions (MRD) and monomial centering.

The screening objective weights each sample of the fitted node by

    R(x) = (s + delta) / (2 Gamma(1/(s + delta))) * nu^{1/(s + delta)}
           * exp(-nu |x|^{s + delta}),

a proper density whose tail index s + delta strictly dominates the maximal
monomial order s of the model class. Monomials are "centered" against R so
that their conditional R-average over the fitted coordinate vanishes: odd
powers of the node integrate to zero as-is, and an even power l is shifted by
the moment

    c^(l) = nu^{-l/(s+delta)} * Gamma((l+1)/(s+delta)) / Gamma(1/(s+delta)).

That zero-mean property is what makes the population objective stationary at
the true parameters (see the verify module's population checks).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, InitVar

import numpy as np

from .model import LocalView, MultiIndex, monomial_matrix

__all__ = [
    "MRDParams",
    "CenteredTerm",
    "CenteredLocalEnergy",
    "mrd_density",
    "centering_coefficient",
    "center_term",
    "centered_local_energy",
    "centered_monomial_matrix",
    "eval_centered_energy",
    "moment_finiteness_matrix",
]


@dataclass(frozen=True)
class MRDParams:
    """Tail sharpening delta > 0, scale nu > 0, model max order s.

    delta <= 0 breaks the moment-finiteness guarantee and is rejected unless
    `allow_nonpositive_delta` is set (used only for diagnostics that probe the
    boundary regime).
    """

    nu: float
    delta: float
    s: int
    allow_nonpositive_delta: InitVar[bool] = False

    def __post_init__(self, allow_nonpositive_delta: bool):
        if self.nu <= 0:
            raise ValueError(f"nu must be > 0, got {self.nu}")
        if self.delta <= 0 and not allow_nonpositive_delta:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if self.s < 1:
            raise ValueError(f"s must be >= 1, got {self.s}")

    @property
    def exponent(self) -> float:
        return self.s + self.delta


def mrd_density(params: MRDParams, x: np.ndarray) -> float | np.ndarray:
    a = params.exponent
    norm = a / (2.0 * math.gamma(1.0 / a)) * params.nu ** (1.0 / a)
    x = np.asarray(x, dtype=float)
    out = norm * np.exp(-params.nu * np.abs(x) ** a)
    return out if out.ndim else float(out)


def centering_coefficient(params: MRDParams, power: int) -> float:
    """The l-th MRD moment c^(l) for even l >= 2."""
    if power < 2 or power % 2:
        raise ValueError(f"centering applies to even powers >= 2, got {power}")
    a = params.exponent
    return (
        params.nu ** (-power / a) * math.gamma((power + 1) / a) / math.gamma(1.0 / a)
    )


@dataclass(frozen=True)
class CenteredTerm:
    """g = f - coefficient * f_reduced, with f_reduced = f / x_node^power.

    `reduced` is None when the term is a pure power of the node (the reduced
    monomial is the constant 1). Odd powers need no correction: coefficient 0.
    """

    term: MultiIndex
    power: int
    coefficient: float
    reduced: MultiIndex | None


def center_term(params: MRDParams, k: MultiIndex, node: int) -> CenteredTerm:
    power = k.multiplicity(node)
    if power == 0:
        raise ValueError(f"term {k} does not contain node {node}")
    if power % 2:
        return CenteredTerm(term=k, power=power, coefficient=0.0, reduced=None)
    return CenteredTerm(
        term=k,
        power=power,
        coefficient=centering_coefficient(params, power),
        reduced=k.without(node),
    )


@dataclass(frozen=True)
class CenteredLocalEnergy:
    """A node's term list with centering data, parameter order as in the view."""

    node: int
    params: MRDParams
    order: tuple[MultiIndex, ...]
    centered: tuple[CenteredTerm, ...]


def centered_local_energy(view: LocalView, params: MRDParams) -> CenteredLocalEnergy:
    if params.s < max(k.order for k in view.order):
        raise ValueError(
            f"MRD order s={params.s} below max term order of node {view.node}"
        )
    centered = tuple(center_term(params, k, view.node) for k in view.order)
    return CenteredLocalEnergy(
        node=view.node, params=params, order=view.order, centered=centered
    )


def centered_monomial_matrix(cle: CenteredLocalEnergy, x: np.ndarray) -> np.ndarray:
    """g_k values per sample row: shape (n, K)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    cols = np.empty((x.shape[0], len(cle.centered)))
    for j, ct in enumerate(cle.centered):
        col = monomial_matrix((ct.term,), x)[:, 0]
        if ct.coefficient:
            if ct.reduced is None:
                col = col - ct.coefficient
            else:
                col = col - ct.coefficient * monomial_matrix((ct.reduced,), x)[:, 0]
        cols[:, j] = col
    return cols


def eval_centered_energy(
    cle: CenteredLocalEnergy, theta_i: np.ndarray, x: np.ndarray
) -> float | np.ndarray:
    """Centered partial energy E_i^g(x) = - sum_k theta_k g_k(x)."""
    theta_i = np.asarray(theta_i, dtype=float)
    x = np.asarray(x, dtype=float)
    out = -(centered_monomial_matrix(cle, x) @ theta_i)
    return out if x.ndim > 1 else float(out[0])


def moment_finiteness_matrix(
    m: int, theta_true: float, theta: float, nu: float, delta: float = 0.0
) -> tuple[np.ndarray, float]:
    """Quadratic-form matrix deciding existence of the m-th objective moment.

    For the boundary regime delta = 0 the m-th moment of the single-edge
    screening objective is finite iff this matrix is positive definite:

        [[m nu + m - 1, (m theta - theta_true) / 2],
         [(m theta - theta_true) / 2, 1]]

    Any delta > 0 makes every moment finite regardless of this determinant;
    the delta argument is accepted to document which regime is being probed.
    """
    if m < 1:
        raise ValueError(f"moment order m must be >= 1, got {m}")
    off = (m * theta - theta_true) / 2.0
    mat = np.array([[m * nu + m - 1.0, off], [off, 1.0]])
    return mat, float(mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0])
