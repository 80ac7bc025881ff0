"""Composite convex minimization: limited-memory quasi-Newton plus optional l1.

The smooth path is standard L-BFGS (two-loop recursion, curvature-filtered
pairs, Armijo backtracking with halving). With an l1 penalty the iteration
switches to an orthant-wise variant: the descent direction is built from the
minimum-norm subgradient (the "pseudo-gradient"), sign-projected, and the line
search projects trial points back onto the orthant chosen at the current
iterate; coordinates that cross zero land exactly on zero, so supports can be
read off the iterate directly.

Objective callables may raise ObjectiveOverflowError / IntegrabilityError /
QuadratureAccuracyError; the line search treats those points as +infinity and
keeps backtracking. Optimality is measured in both regimes by the inf-norm of
the minimum-norm subgradient, and fit results carry an independently
recomputed certificate of that quantity at the returned point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    IntegrabilityError,
    ObjectiveOverflowError,
    QuadratureAccuracyError,
)
from .model import CandidateBasis, MultiIndex
from .mrd import MRDParams, centered_local_energy
from .objectives import (
    IsodusObjective,
    ObjectiveEvaluation,
    PLObjective,
    QuadratureConfig,
    l1_coefficient,
)
from .sampling import SampleSet

__all__ = [
    "SolveConfig",
    "SolveResult",
    "minimize",
    "minimum_norm_subgradient",
    "optimality_certificate",
    "pl_start",
    "fit_node",
]

_RECOVERABLE = (ObjectiveOverflowError, IntegrabilityError, QuadratureAccuracyError)


@dataclass(frozen=True)
class SolveConfig:
    """Solver and regularization settings.

    `lam` is the dimensionless regularization strength; the effective l1
    weight lam * sqrt(log p / n) is derived per fit from the problem size.
    `penalize_single_node=False` exempts pure powers of the fitted node from
    the penalty.
    """

    grad_tol: float = 1e-8
    max_iters: int = 5000
    lam: float = 0.0
    memory: int = 10
    armijo_c: float = 1e-4
    max_halvings: int = 60
    penalize_single_node: bool = True

    def __post_init__(self):
        if self.grad_tol <= 0 or self.max_iters < 1:
            raise ValueError("grad_tol must be > 0 and max_iters >= 1")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")


@dataclass(frozen=True)
class SolveResult:
    theta: np.ndarray
    status: str  # "converged" | "max-iters" | "line-search-failure"
    iterations: int
    evaluations: int
    objective: float
    optimality: float
    certificate: float
    history: tuple[float, ...]

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def _call(objective, theta: np.ndarray) -> tuple[float, np.ndarray]:
    out = objective(theta)
    if isinstance(out, ObjectiveEvaluation):
        return out.value, np.asarray(out.gradient, dtype=float)
    value, grad = out
    return float(value), np.asarray(grad, dtype=float)


def minimum_norm_subgradient(
    grad: np.ndarray, theta: np.ndarray, l1: np.ndarray
) -> np.ndarray:
    """Smallest-norm element of the subdifferential of f + sum_j l1_j |t_j|."""
    pg = grad + l1 * np.sign(theta)
    up = grad + l1
    down = grad - l1
    at_zero = theta == 0.0
    zero_part = np.where(up < 0.0, up, np.where(down > 0.0, down, 0.0))
    return np.where(at_zero, zero_part, pg)


def optimality_certificate(objective, theta: np.ndarray, l1: np.ndarray | float = 0.0):
    """Recompute ||min-norm subgradient||_inf from scratch at theta."""
    theta = np.asarray(theta, dtype=float)
    l1 = np.broadcast_to(np.asarray(l1, dtype=float), theta.shape)
    _, grad = _call(objective, theta)
    return float(np.max(np.abs(minimum_norm_subgradient(grad, theta, l1)))) if theta.size else 0.0


class _Memory:
    """L-BFGS pair storage with the usual curvature filter."""

    def __init__(self, size: int):
        self.size = size
        self.s: list[np.ndarray] = []
        self.y: list[np.ndarray] = []
        self.rho: list[float] = []
        self.gamma = 1.0

    def push(self, s: np.ndarray, y: np.ndarray) -> None:
        sy = float(s @ y)
        if sy <= 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            return
        self.s.append(s)
        self.y.append(y)
        self.rho.append(1.0 / sy)
        self.gamma = sy / float(y @ y)
        if len(self.s) > self.size:
            self.s.pop(0)
            self.y.pop(0)
            self.rho.pop(0)

    def direction(self, grad: np.ndarray) -> np.ndarray:
        q = -grad.copy()
        if not self.s:
            return q
        alphas = []
        for s, y, rho in zip(reversed(self.s), reversed(self.y), reversed(self.rho)):
            a = rho * float(s @ q)
            q -= a * y
            alphas.append(a)
        q *= self.gamma
        for s, y, rho, a in zip(self.s, self.y, self.rho, reversed(alphas)):
            b = rho * float(y @ q)
            q += (a - b) * s
        return q


def minimize(
    objective,
    x0: np.ndarray,
    cfg: SolveConfig | None = None,
    l1_weights: np.ndarray | float = 0.0,
) -> SolveResult:
    """Minimize objective(theta) + sum_j l1_weights_j |theta_j| from x0.

    `objective` maps a parameter vector to an ObjectiveEvaluation (or a
    (value, gradient) pair) of the smooth part. `l1_weights` must already be
    on the effective scale (see l1_coefficient); scalar input broadcasts.
    """
    cfg = cfg or SolveConfig()
    x = np.array(x0, dtype=float)
    l1 = np.broadcast_to(np.asarray(l1_weights, dtype=float), x.shape).copy()
    if np.any(l1 < 0):
        raise ValueError("l1 weights must be >= 0")
    use_l1 = bool(np.any(l1 > 0))

    value, grad = _call(objective, x)
    if not np.isfinite(value):
        raise ValueError(f"objective is not finite at the starting point ({value})")
    evaluations = 1
    penalty = float(l1 @ np.abs(x)) if use_l1 else 0.0
    total = value + penalty
    history = [total]
    memory = _Memory(cfg.memory)

    status = "max-iters"
    iterations = 0
    for iteration in range(cfg.max_iters):
        pg = minimum_norm_subgradient(grad, x, l1) if use_l1 else grad
        opt = float(np.max(np.abs(pg))) if pg.size else 0.0
        if opt <= cfg.grad_tol:
            status = "converged"
            break
        iterations = iteration + 1

        d = memory.direction(pg)
        if float(d @ pg) >= 0.0:  # not a descent direction; fall back
            d = -pg
        if use_l1:
            d = np.where(d * pg < 0.0, d, 0.0)  # keep only sign-consistent moves
            orthant = np.where(x != 0.0, np.sign(x), -np.sign(pg))

        step = 1.0 if memory.s else min(1.0, 1.0 / max(1.0, float(np.max(np.abs(d)))))
        accepted = False
        for _ in range(cfg.max_halvings + 1):
            x_try = x + step * d
            if use_l1:
                x_try = np.where(np.sign(x_try) * orthant < 0.0, 0.0, x_try)
                move = x_try - x
                if not np.any(move):
                    step *= 0.5
                    continue
                slope = float(pg @ move)
            else:
                move = step * d
                slope = step * float(grad @ d)
            evaluations += 1
            try:
                v_try, g_try = _call(objective, x_try)
            except _RECOVERABLE:
                step *= 0.5
                continue
            if not np.isfinite(v_try):
                step *= 0.5
                continue
            p_try = float(l1 @ np.abs(x_try)) if use_l1 else 0.0
            if v_try + p_try <= total + cfg.armijo_c * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            status = "line-search-failure"
            break

        memory.push(x_try - x, g_try - grad)
        x, value, grad = x_try, v_try, g_try
        total = value + (float(l1 @ np.abs(x)) if use_l1 else 0.0)
        history.append(total)
    else:
        # max_iters exhausted; recheck optimality once more at the last iterate
        pg = minimum_norm_subgradient(grad, x, l1) if use_l1 else grad
        if float(np.max(np.abs(pg))) <= cfg.grad_tol:
            status = "converged"

    pg = minimum_norm_subgradient(grad, x, l1) if use_l1 else grad
    optimality = float(np.max(np.abs(pg))) if pg.size else 0.0
    certificate = optimality_certificate(objective, x, l1)
    return SolveResult(
        theta=x,
        status=status,
        iterations=iterations,
        evaluations=evaluations,
        objective=total,
        optimality=optimality,
        certificate=certificate,
        history=tuple(history),
    )


def pl_start(basis: CandidateBasis, node: int) -> np.ndarray:
    """A feasible PL start: unit weight on the highest even pure power of node.

    theta = 0 leaves the conditional density unnormalizable, so PL cannot
    start there; this start is proper for every sample set.
    """
    terms = basis.local_terms(node)
    even = [
        k.multiplicity(node)
        for k in terms
        if k.arity == 1 and k.multiplicity(node) % 2 == 0
    ]
    if not even:
        raise ValueError(
            f"candidate basis has no even pure power of node {node}; "
            "pseudo-likelihood has no feasible start"
        )
    target = MultiIndex.single(node, max(even))
    x0 = np.zeros(len(terms))
    x0[terms.index(target)] = 1.0
    return x0


def fit_node(
    basis: CandidateBasis,
    node: int,
    method: str,
    samples: SampleSet,
    mrd_params: MRDParams | None = None,
    scfg: SolveConfig | None = None,
    qcfg: QuadratureConfig | None = None,
) -> SolveResult:
    """Estimate one node's local parameters over the candidate basis."""
    scfg = scfg or SolveConfig()
    qcfg = qcfg or QuadratureConfig()
    if samples.p < basis.p:
        raise ValueError(f"samples have p={samples.p}, basis needs p={basis.p}")
    view = basis.local_view(node)
    if method == "isodus":
        if mrd_params is None:
            mrd_params = MRDParams(nu=2.0, delta=2.0, s=basis.s)
        objective = IsodusObjective(centered_local_energy(view, mrd_params), samples)
        x0 = np.zeros(len(view.order))
    elif method == "pl":
        objective = PLObjective(view, samples, qcfg)
        x0 = pl_start(basis, node)
    else:
        raise ValueError(f"unknown method {method!r}; expected 'isodus' or 'pl'")

    weights = np.full(len(view.order), l1_coefficient(scfg.lam, basis.p, samples.n))
    if not scfg.penalize_single_node:
        weights[[k.arity == 1 for k in view.order]] = 0.0
    return minimize(objective, x0, cfg=scfg, l1_weights=weights)
