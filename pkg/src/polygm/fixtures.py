"""Canonical test models and the model-spec dispatch used by experiments.

Every builder returns a plain EnergyModel, so downstream code never cares
whether a model came from a named fixture, a random generator, or a file.
draw_samples picks an exact sampler automatically: closed-form Gaussian when
the model is quadratic, tensor grids (per independent block of at most two
coupled variables) otherwise.
"""

from __future__ import annotations

import numpy as np

from .model import (
    EnergyModel,
    MultiIndex,
    gaussian_model,
    model_from_dict,
    load_model,
    precision_from_model,
)
from .sampling import (
    GridDistribution,
    SampleSet,
    build_grid,
    random_polynomial_1d,
    random_psd_precision,
    random_regular_ggm,
    sample_gaussian,
    sample_grid,
    sample_product,
)

__all__ = [
    "quartic1d",
    "fourbody2d",
    "pseudo4d",
    "diamond_covariance",
    "diamond_model",
    "model_from_spec",
    "independent_blocks",
    "make_sampler",
    "draw_samples",
]


def quartic1d() -> EnergyModel:
    """Single-variable quartic energy with an asymmetric cubic term."""
    return EnergyModel(
        p=1,
        terms={
            MultiIndex.single(0, 2): 1.0,
            MultiIndex.single(0, 3): 0.5,
            MultiIndex.single(0, 4): 2.0,
        },
    )


def fourbody2d() -> EnergyModel:
    """Two coupled variables with pairwise and multi-body quartic terms.

    The quartic part dominates every direction (AM-GM bounds the mixed
    terms by the pure ones), so the density is normalizable.
    """
    return EnergyModel(
        p=2,
        terms={
            MultiIndex.single(0, 2): 0.5,
            MultiIndex.single(1, 2): 0.5,
            MultiIndex(((0, 1), (1, 1))): 0.3,
            MultiIndex(((0, 2), (1, 1))): 0.2,
            MultiIndex.single(0, 4): 0.5,
            MultiIndex.single(1, 4): 0.5,
            MultiIndex(((0, 2), (1, 2))): 0.4,
            MultiIndex(((0, 1), (1, 3))): 0.2,
        },
    )


def pseudo4d() -> EnergyModel:
    """Four variables forming two independent copies of fourbody2d."""
    base = fourbody2d()
    terms = {}
    for shift in (0, 2):
        for k, theta in base.terms.items():
            shifted = MultiIndex(tuple((v + shift, m) for v, m in k.pairs))
            terms[shifted] = theta
    return EnergyModel(p=4, terms=terms)


def diamond_covariance(rho: float = 0.55) -> np.ndarray:
    """Covariance of four Gaussians whose precision graph is a 4-cycle.

    Nodes 0 and 3 sit on opposite corners: their covariance is 2*rho**2
    yet their precision entry is exactly zero, which makes the model a
    stress test for edge recovery under correlated non-neighbours.
    """
    if not 0 < abs(rho) < 1 / np.sqrt(2):
        raise ValueError(f"need 0 < |rho| < 1/sqrt(2), got {rho}")
    sigma = np.eye(4)
    for i, j in ((0, 1), (0, 2), (1, 3), (2, 3)):
        sigma[i, j] = sigma[j, i] = rho
    sigma[0, 3] = sigma[3, 0] = 2 * rho**2
    return sigma


def diamond_model(rho: float = 0.55) -> EnergyModel:
    precision = np.linalg.inv(diamond_covariance(rho))
    precision = 0.5 * (precision + precision.T)
    scale = np.abs(precision).max()
    precision[np.abs(precision) < 1e-12 * scale] = 0.0
    return gaussian_model(precision)


def model_from_spec(spec: dict, seed: int | None = None) -> EnergyModel:
    """Build a model from a config dictionary ({"kind": ..., ...})."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "quartic1d":
        return quartic1d()
    if kind == "fourbody2d":
        return fourbody2d()
    if kind == "pseudo4d":
        return pseudo4d()
    if kind == "diamond":
        return diamond_model(spec.get("rho", 0.55))
    if kind == "gaussian-random":
        precision = random_psd_precision(
            spec["p"], seed=seed, eig_range=tuple(spec.get("eig_range", (0.5, 2.0)))
        )
        return gaussian_model(precision)
    if kind == "regular-ggm":
        precision = random_regular_ggm(
            spec["p"], spec["d"], spec["kappa"], seed=seed
        )
        return gaussian_model(precision)
    if kind == "poly1d":
        return random_polynomial_1d(spec["L"], seed=seed)
    if kind == "file":
        return load_model(spec["path"])
    if kind == "inline":
        return model_from_dict(spec["model"])
    raise ValueError(f"unknown model kind {kind!r}")


def independent_blocks(model: EnergyModel) -> list[tuple[int, ...]]:
    """Connected components of the interaction structure, sorted."""
    parent = list(range(model.p))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for k in model.terms:
        nodes = k.variables
        for other in nodes[1:]:
            ra, rb = find(nodes[0]), find(other)
            if ra != rb:
                parent[rb] = ra
    groups: dict[int, list[int]] = {}
    for v in range(model.p):
        groups.setdefault(find(v), []).append(v)
    return sorted(tuple(sorted(g)) for g in groups.values())


def _restrict(model: EnergyModel, nodes: tuple[int, ...]) -> EnergyModel:
    index = {v: pos for pos, v in enumerate(nodes)}
    terms = {}
    for k, theta in model.terms.items():
        if set(k.variables) <= set(nodes):
            remapped = MultiIndex(tuple((index[v], m) for v, m in k.pairs))
            terms[remapped] = theta
    return EnergyModel(p=len(nodes), terms=terms, s=model.s)


def _is_quadratic(model: EnergyModel) -> bool:
    return all(k.order <= 2 for k in model.terms)


def make_sampler(model: EnergyModel, bins: int = 5000):
    """Build an exact sampler for the model once; call it as sampler(n, seed).

    Quadratic models use the closed-form Gaussian path. Anything else is
    split into independent blocks of at most two coupled variables, each
    discretized on a fine grid (built here, reused across calls).
    """
    if _is_quadratic(model):
        precision, mean = precision_from_model(model)

        def sampler(n: int, seed: int | None = None) -> SampleSet:
            return sample_gaussian(precision, mean, n, seed=seed)

        return sampler

    blocks = independent_blocks(model)
    if any(len(b) > 2 for b in blocks):
        raise ValueError(
            "exact grid sampling needs blocks of at most 2 coupled variables"
        )
    grids = [build_grid(_restrict(model, block), bins=bins) for block in blocks]

    def sampler(n: int, seed: int | None = None) -> SampleSet:
        if len(grids) == 1:
            return sample_grid(grids[0], n, seed=seed)
        data = sample_product(grids, n, seed=seed)
        # sample_product concatenates block columns; scatter back to global order
        out = np.empty_like(data.data)
        offset = 0
        for block in blocks:
            out[:, list(block)] = data.data[:, offset : offset + len(block)]
            offset += len(block)
        return SampleSet(out, seed=data.seed)

    return sampler


def draw_samples(
    model: EnergyModel,
    n: int,
    seed: int | None = None,
    bins: int = 5000,
) -> SampleSet:
    """Draw n exact samples, choosing the sampler by model structure."""
    return make_sampler(model, bins=bins)(n, seed)
