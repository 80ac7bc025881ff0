"""Exact samplers and random model generators.

Gaussian models are sampled in closed form through a Cholesky factor of the
precision matrix. Non-Gaussian models in one or two variables are sampled
from a discretized density table (inverse CDF over bins, uniform jitter inside
the chosen bin); higher-dimensional factorized models are assembled from
independent low-dimensional blocks.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DimensionError,
    IntegrabilityError,
    NotPositiveDefiniteError,
)
from .model import EnergyModel, MultiIndex

__all__ = [
    "SampleSet",
    "GridDistribution",
    "sample_gaussian",
    "build_grid",
    "sample_grid",
    "sample_product",
    "random_psd_precision",
    "random_regular_ggm",
    "random_polynomial_1d",
    "save_samples",
    "load_samples",
]


@dataclass(frozen=True)
class SampleSet:
    """An (n, p) matrix of samples plus the integer seed that produced it."""

    data: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if not np.all(np.isfinite(data)):
            raise ValueError("sample matrix contains non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]


def save_samples(samples: SampleSet, path: str | Path) -> None:
    """CSV, one row per sample, no header, 17 significant digits."""
    np.savetxt(path, samples.data, fmt="%.17g", delimiter=",")


def load_samples(path: str | Path, seed: int | None = None) -> SampleSet:
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return SampleSet(data=data, seed=seed)


def sample_gaussian(
    precision: np.ndarray, mean: np.ndarray | float, n: int, seed: int
) -> SampleSet:
    """Exact draws from N(mean, precision^{-1})."""
    prec = np.asarray(precision, dtype=float)
    if prec.ndim != 2 or prec.shape[0] != prec.shape[1]:
        raise DimensionError(f"precision must be square, got {prec.shape}")
    try:
        chol = np.linalg.cholesky(prec)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("precision matrix is not positive definite")
    p = prec.shape[0]
    mu = np.broadcast_to(np.asarray(mean, dtype=float), (p,))
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, p))
    # x = mu + L^{-T} z has covariance (L L^T)^{-1} = precision^{-1}.
    data = mu + np.linalg.solve(chol.T, z.T).T
    return SampleSet(data=data, seed=seed)


@dataclass(frozen=True)
class GridDistribution:
    """Discretized 1d/2d density: bin-center pmf plus cumulative tables."""

    centers: tuple[np.ndarray, ...]
    widths: tuple[float, ...]
    pmf: np.ndarray
    cum_first: np.ndarray        # CDF of the first coordinate's marginal
    cond_cum: np.ndarray | None  # per-row conditional CDFs (2d only)

    @property
    def ndim(self) -> int:
        return len(self.centers)

    def marginal(self, axis: int) -> np.ndarray:
        if self.ndim == 1:
            if axis != 0:
                raise DimensionError("1d grid has only axis 0")
            return self.pmf
        return self.pmf.sum(axis=1 - axis)


def _tensor_energy(model: EnergyModel, axes: Sequence[np.ndarray]) -> np.ndarray:
    """E on the tensor grid spanned by `axes` without materializing points."""
    shape = tuple(len(a) for a in axes)
    acc = np.zeros(shape)
    for k, theta in model.terms.items():
        factors = []
        for dim in range(len(axes)):
            m = k.multiplicity(dim)
            v = axes[dim] ** m if m else np.ones_like(axes[dim])
            factors.append(v)
        if len(axes) == 1:
            term_val = factors[0]
        else:
            term_val = np.multiply.outer(factors[0], factors[1])
        acc += theta * term_val
    return -acc


def _leading_even_check(model: EnergyModel) -> None:
    # Heuristic integrability precondition: whenever a coordinate has pure
    # self-power terms, its highest one must be even with positive coefficient.
    for dim in range(model.p):
        pure = {
            k.multiplicity(dim): theta
            for k, theta in model.terms.items()
            if k.arity == 1 and k.contains(dim)
        }
        if not pure:
            continue
        top = max(pure)
        if top % 2 or pure[top] <= 0:
            raise IntegrabilityError(
                f"coordinate {dim}: leading pure power x^{top} has coefficient "
                f"{pure[top]}; density cannot be normalized"
            )


def build_grid(
    model: EnergyModel,
    bins: int = 5000,
    initial_half_width: float = 3.0,
    tail_ratio: float = 1e-12,
    max_doublings: int = 24,
) -> GridDistribution:
    """Tabulate exp(E) for a 1- or 2-variable model on an automatic box.

    The box starts at [-initial_half_width, +initial_half_width] per dimension
    and doubles until the unnormalized density on the boundary falls below
    tail_ratio times its peak. Boundary mass growing under expansion means the
    density is not normalizable.
    """
    if model.p not in (1, 2):
        raise DimensionError(f"grids support 1 or 2 variables, got p={model.p}")
    if bins < 8:
        raise ValueError(f"bins must be >= 8, got {bins}")
    _leading_even_check(model)

    half = float(initial_half_width)
    probe = 513
    last_boundary = np.inf
    for _ in range(max_doublings + 1):
        axes = [np.linspace(-half, half, probe) for _ in range(model.p)]
        logd = _tensor_energy(model, axes)
        peak = float(logd.max())
        if model.p == 1:
            boundary = float(max(logd[0], logd[-1]))
        else:
            boundary = float(
                max(logd[0, :].max(), logd[-1, :].max(), logd[:, 0].max(), logd[:, -1].max())
            )
        if boundary - peak < np.log(tail_ratio):
            break
        if boundary > last_boundary:
            raise IntegrabilityError(
                "boundary density grows as the box expands; density not normalizable"
            )
        last_boundary = boundary
        half *= 2.0
    else:
        raise IntegrabilityError(
            f"tails still heavy after {max_doublings} doublings; density not normalizable"
        )

    width = 2.0 * half / bins
    centers = np.linspace(-half + 0.5 * width, half - 0.5 * width, bins)
    axes = [centers for _ in range(model.p)]
    logd = _tensor_energy(model, axes)
    logd -= logd.max()
    pmf = np.exp(logd)
    pmf /= pmf.sum()

    if model.p == 1:
        cum = np.cumsum(pmf)
        cum /= cum[-1]
        return GridDistribution(
            centers=(centers,), widths=(width,), pmf=pmf, cum_first=cum, cond_cum=None
        )
    marg0 = pmf.sum(axis=1)
    cum0 = np.cumsum(marg0)
    cum0 /= cum0[-1]
    cond = np.cumsum(pmf, axis=1)
    cond /= cond[:, -1:]
    return GridDistribution(
        centers=(centers, centers.copy()),
        widths=(width, width),
        pmf=pmf,
        cum_first=cum0,
        cond_cum=cond,
    )


def sample_grid(grid: GridDistribution, n: int, seed: int) -> SampleSet:
    """Inverse-CDF draws with uniform jitter inside the selected bin."""
    rng = np.random.default_rng(seed)
    u0 = rng.random(n)
    idx0 = np.searchsorted(grid.cum_first, u0, side="left")
    if grid.ndim == 1:
        vals = grid.centers[0][idx0] + grid.widths[0] * (rng.random(n) - 0.5)
        return SampleSet(data=vals[:, None], seed=seed)

    u1 = rng.random(n)
    idx1 = np.empty(n, dtype=np.int64)
    order = np.argsort(idx0, kind="stable")
    sorted_rows = idx0[order]
    uniques, starts = np.unique(sorted_rows, return_index=True)
    bounds = np.append(starts[1:], n)
    for row, s0, s1 in zip(uniques, starts, bounds):
        sel = order[s0:s1]
        idx1[sel] = np.searchsorted(grid.cond_cum[row], u1[sel], side="left")
    x0 = grid.centers[0][idx0] + grid.widths[0] * (rng.random(n) - 0.5)
    x1 = grid.centers[1][idx1] + grid.widths[1] * (rng.random(n) - 0.5)
    return SampleSet(data=np.column_stack([x0, x1]), seed=seed)


def sample_product(grids: Sequence[GridDistribution], n: int, seed: int) -> SampleSet:
    """Independent blocks side by side: column block b comes from grids[b]."""
    if not grids:
        raise ValueError("need at least one grid")
    rng = np.random.default_rng(seed)
    blocks = []
    for grid in grids:
        block_seed = int(rng.integers(0, 2**63 - 1))
        blocks.append(sample_grid(grid, n, block_seed).data)
    return SampleSet(data=np.hstack(blocks), seed=seed)


def random_psd_precision(
    p: int, seed: int, eig_range: tuple[float, float] = (0.5, 2.0)
) -> np.ndarray:
    """Random orthogonal eigenbasis, eigenvalues uniform in eig_range."""
    lo, hi = eig_range
    if not 0 < lo <= hi:
        raise ValueError(f"invalid eigenvalue range {eig_range}")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    q = q * np.sign(np.diag(r))  # fix the factorization's sign ambiguity
    eig = rng.uniform(lo, hi, size=p)
    prec = (q * eig) @ q.T
    return 0.5 * (prec + prec.T)


def random_regular_ggm(
    p: int, d: int, kappa: float, seed: int, max_tries: int = 1000
) -> np.ndarray:
    """Precision of a random d-regular graph: unit diagonal, kappa on edges.

    Configuration model: pair up node stubs uniformly and reject the whole
    matching on any self-loop or duplicate edge, which leaves the uniform
    distribution over simple d-regular graphs.
    """
    if d < 1 or d >= p or (p * d) % 2:
        raise ValueError(f"no d-regular graph on p={p} nodes with d={d}")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(p), d)
    for _ in range(max_tries):
        perm = rng.permutation(stubs)
        a, b = perm[0::2], perm[1::2]
        if np.any(a == b):
            continue
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys = lo * p + hi
        if len(np.unique(keys)) != len(keys):
            continue
        prec = np.eye(p)
        prec[lo, hi] = kappa
        prec[hi, lo] = kappa
        try:
            np.linalg.cholesky(prec)
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError(
                f"regular-graph precision with d={d}, kappa={kappa} is not PD"
            )
        return prec
    raise RuntimeError(f"no simple d-regular matching found in {max_tries} tries")


def random_polynomial_1d(
    L: int, seed: int, leading_min: float = 0.1
) -> EnergyModel:
    """E(x) = -sum_{l=2}^L alpha_l x^l with alpha_l ~ U[0, 1].

    L must be even; the leading coefficient is redrawn until >= leading_min so
    the density has a usable tail.
    """
    if L < 2 or L % 2:
        raise ValueError(f"polynomial order L must be even and >= 2, got {L}")
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(0.0, 1.0, size=L - 1)  # orders 2..L
    while coeffs[-1] < leading_min:
        coeffs[-1] = rng.uniform(0.0, 1.0)
    terms = {
        MultiIndex.single(0, l): float(c)
        for l, c in zip(range(2, L + 1), coeffs)
        if c != 0.0
    }
    return EnergyModel(p=1, terms=terms, s=L)
