"""From per-node fits to a global estimate, and from estimates to structure.

A term touching several nodes is estimated once per touched node; the
combined coefficient takes the geometric mean of the magnitudes and the sign
of the sum (zero if the sum vanishes). Structure is read off by strict
thresholding of interaction terms, and n* - the smallest sample size at which
structure recovery is reliably certified - is found by a walk over n levels
requiring an unbroken streak of successful trials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .model import CandidateBasis, EnergyModel, MultiIndex
from .mrd import MRDParams
from .objectives import QuadratureConfig
from .sampling import SampleSet
from .solver import SolveConfig, SolveResult, fit_node

__all__ = [
    "SymmetrizedEstimate",
    "FitResult",
    "NStarConfig",
    "NStarLevel",
    "NStarResult",
    "symmetrize",
    "fit_model",
    "mean_abs_error",
    "max_abs_error",
    "threshold_structure",
    "nstar_search",
]


@dataclass(frozen=True)
class SymmetrizedEstimate:
    basis: CandidateBasis
    values: np.ndarray  # aligned with basis.terms

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.basis.terms),):
            raise ValueError("values must align with the basis term list")
        object.__setattr__(self, "values", values)

    @property
    def terms(self) -> dict[MultiIndex, float]:
        return dict(zip(self.basis.terms, self.values))


def _theta_of(result) -> np.ndarray:
    return np.asarray(getattr(result, "theta", result), dtype=float)


def symmetrize(
    node_results: Mapping[int, SolveResult | np.ndarray], basis: CandidateBasis
) -> SymmetrizedEstimate:
    """Geometric-mean magnitude, sign of the sum, per candidate term."""
    locals_ = {
        node: dict(zip(basis.local_terms(node), _theta_of(res)))
        for node, res in node_results.items()
    }
    values = np.zeros(len(basis.terms))
    for idx, k in enumerate(basis.terms):
        votes = [locals_[node][k] for node in k.variables if node in locals_]
        if not votes:
            raise ValueError(f"no node fit covers term {k}")
        total = sum(votes)
        if total == 0.0 or any(v == 0.0 for v in votes):
            # zero sign or zero geometric mean, either way the term drops
            values[idx] = 0.0
            continue
        magnitude = math.exp(sum(math.log(abs(v)) for v in votes) / len(votes))
        values[idx] = math.copysign(magnitude, total)
    return SymmetrizedEstimate(basis=basis, values=values)


@dataclass(frozen=True)
class FitResult:
    basis: CandidateBasis
    method: str
    node_results: dict[int, SolveResult]
    estimate: SymmetrizedEstimate

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.node_results.values())

    @property
    def total_iterations(self) -> int:
        return sum(r.iterations for r in self.node_results.values())


def fit_model(
    basis: CandidateBasis,
    method: str,
    samples: SampleSet,
    mrd_params: MRDParams | None = None,
    scfg: SolveConfig | None = None,
    qcfg: QuadratureConfig | None = None,
) -> FitResult:
    """Fit every node and symmetrize."""
    node_results = {
        node: fit_node(basis, node, method, samples, mrd_params, scfg, qcfg)
        for node in range(basis.p)
    }
    return FitResult(
        basis=basis,
        method=method,
        node_results=node_results,
        estimate=symmetrize(node_results, basis),
    )


def _aligned_truth(estimate: SymmetrizedEstimate, truth: EnergyModel) -> np.ndarray:
    missing = [k for k in truth.terms if k not in set(estimate.basis.terms)]
    if missing:
        raise ValueError(
            f"truth has terms outside the candidate basis: {missing[:3]}"
        )
    return estimate.basis.theta_vector(truth)


def mean_abs_error(estimate: SymmetrizedEstimate, truth: EnergyModel) -> float:
    """Mean |theta_hat - theta*| over the candidate basis (absent terms = 0)."""
    diff = np.abs(estimate.values - _aligned_truth(estimate, truth))
    return float(diff.mean())


def max_abs_error(estimate: SymmetrizedEstimate, truth: EnergyModel) -> float:
    diff = np.abs(estimate.values - _aligned_truth(estimate, truth))
    return float(diff.max())


def threshold_structure(
    estimate: SymmetrizedEstimate, tau: float
) -> frozenset[MultiIndex]:
    """Interaction terms (arity >= 2) kept by strict |value| > tau."""
    if tau < 0:
        raise ValueError(f"threshold must be >= 0, got {tau}")
    return frozenset(
        k
        for k, v in zip(estimate.basis.terms, estimate.values)
        if k.arity >= 2 and abs(v) > tau
    )


@dataclass(frozen=True)
class NStarConfig:
    streak: int = 45
    step_up: int = 25
    step_down: int = 10
    start: int = 100
    floor: int = 25
    ceiling: int = 1_000_000
    max_levels: int = 1000

    def __post_init__(self):
        if self.streak < 1 or self.step_up < 1 or self.step_down < 1:
            raise ValueError("streak and steps must be >= 1")
        if not self.floor <= self.start <= self.ceiling:
            raise ValueError("need floor <= start <= ceiling")


@dataclass(frozen=True)
class NStarLevel:
    n: int
    trials_run: int
    success: bool


@dataclass(frozen=True)
class NStarResult:
    n_star: int | None
    status: str  # "certified" | "failed"
    levels: tuple[NStarLevel, ...]
    total_trials: int


def nstar_search(
    trial: Callable[[int, int], bool], cfg: NStarConfig | None = None
) -> NStarResult:
    """Walk n levels to find the smallest n certified by a full success streak.

    At each level up to cfg.streak trials run; the first failure aborts the
    level and raises n by step_up, a full streak certifies the level and
    lowers n by step_down. The walk stops when some certified level and some
    failed level are within step_down of each other (the certified level is
    reported), when the floor is certified, or when the ceiling is passed
    without any certification (status "failed"). Level outcomes are cached,
    so revisited levels do not rerun trials.
    """
    cfg = cfg or NStarConfig()
    outcomes: dict[int, bool] = {}
    levels: list[NStarLevel] = []
    total = 0
    certified: set[int] = set()
    failed: set[int] = set()

    def run_level(n: int) -> bool:
        nonlocal total
        if n in outcomes:
            return outcomes[n]
        ran = 0
        success = True
        for t in range(cfg.streak):
            ran += 1
            if not trial(n, t):
                success = False
                break
        total += ran
        outcomes[n] = success
        levels.append(NStarLevel(n=n, trials_run=ran, success=success))
        (certified if success else failed).add(n)
        return success

    n = cfg.start
    for _ in range(cfg.max_levels):
        success = run_level(n)
        if certified:
            best = min(certified)
            bracketing = [f for f in failed if 0 < best - f <= cfg.step_down]
            if bracketing:
                return NStarResult(
                    n_star=best, status="certified", levels=tuple(levels), total_trials=total
                )
        if success:
            nxt = n - cfg.step_down
            if nxt < cfg.floor:
                if n == cfg.floor:
                    return NStarResult(
                        n_star=cfg.floor, status="certified",
                        levels=tuple(levels), total_trials=total,
                    )
                nxt = cfg.floor
        else:
            nxt = n + cfg.step_up
            if nxt > cfg.ceiling:
                if n == cfg.ceiling or not certified:
                    return NStarResult(
                        n_star=min(certified) if certified else None,
                        status="certified" if certified else "failed",
                        levels=tuple(levels), total_trials=total,
                    )
                nxt = cfg.ceiling
        n = nxt
    raise RuntimeError(f"n* search did not settle within {cfg.max_levels} levels")
