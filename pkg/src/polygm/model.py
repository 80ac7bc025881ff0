"""Exponential-family models on R^p with polynomial (monomial-basis) energies.

A model is mu(x) proportional to exp(E(x)) with

    E(x) = - sum_k theta_k f_k(x),    f_k(x) = prod_j x_j^{m_kj},

where each multi-index k is a multiset of variable indices. Normalization is
never computed; everything downstream works with E directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import DimensionError, NonSymmetricMatrixError, NotPositiveDefiniteError

__all__ = [
    "MultiIndex",
    "EnergyModel",
    "LocalView",
    "CandidateBasis",
    "eval_monomial",
    "eval_energy",
    "eval_local_energy",
    "monomial_matrix",
    "gaussian_model",
    "precision_from_model",
    "save_model",
    "load_model",
    "model_to_dict",
    "model_from_dict",
]


@dataclass(frozen=True)
class MultiIndex:
    """Monomial exponent multiset, stored as (variable, multiplicity) pairs.

    Pairs are canonicalized: sorted by variable index, duplicates merged,
    multiplicities >= 1. The constant monomial (order 0) is disallowed.
    """

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        merged: dict[int, int] = {}
        for var, mult in self.pairs:
            var = int(var)
            mult = int(mult)
            if var < 0:
                raise DimensionError(f"negative variable index {var}")
            if mult < 1:
                raise ValueError(f"multiplicity must be >= 1, got {mult} for x{var}")
            merged[var] = merged.get(var, 0) + mult
        if not merged:
            raise ValueError("order-0 (constant) monomials are not representable")
        object.__setattr__(self, "pairs", tuple(sorted(merged.items())))

    @classmethod
    def from_vars(cls, variables: Iterable[int]) -> "MultiIndex":
        """Build from a flat list of variable indices, e.g. (i, i, j)."""
        return cls(tuple((v, 1) for v in variables))

    @classmethod
    def single(cls, var: int, mult: int = 1) -> "MultiIndex":
        return cls(((var, mult),))

    @property
    def order(self) -> int:
        return sum(m for _, m in self.pairs)

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.pairs)

    @property
    def arity(self) -> int:
        return len(self.pairs)

    def multiplicity(self, var: int) -> int:
        for v, m in self.pairs:
            if v == var:
                return m
        return 0

    def contains(self, var: int) -> bool:
        return self.multiplicity(var) > 0

    def without(self, var: int) -> "MultiIndex | None":
        """Remove all powers of `var`; None if nothing remains (constant)."""
        rest = tuple((v, m) for v, m in self.pairs if v != var)
        return MultiIndex(rest) if rest else None

    def __lt__(self, other: "MultiIndex") -> bool:
        return self.pairs < other.pairs

    def __str__(self) -> str:
        return "*".join(f"x{v}" if m == 1 else f"x{v}^{m}" for v, m in self.pairs)


def eval_monomial(k: MultiIndex, x: np.ndarray) -> float | np.ndarray:
    """f_k at a point (1d x) or per row of a sample matrix (2d x)."""
    x = np.asarray(x, dtype=float)
    n_vars = x.shape[-1]
    out = np.ones(x.shape[:-1], dtype=float)
    for var, mult in k.pairs:
        if var >= n_vars:
            raise DimensionError(f"monomial uses x{var} but input has {n_vars} columns")
        out = out * x[..., var] ** mult
    return out if out.ndim else float(out)


def monomial_matrix(terms: Iterable[MultiIndex], x: np.ndarray) -> np.ndarray:
    """Column-stack monomial values: shape (n, K) for an (n, p) sample matrix."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    cols = [eval_monomial(k, x) for k in terms]
    if not cols:
        return np.empty((x.shape[0], 0))
    return np.column_stack(cols)


@dataclass(frozen=True)
class EnergyModel:
    """p variables, max monomial order s, and a sparse coefficient table.

    Zero coefficients are dropped on construction; s defaults to the largest
    stored order. All downstream code treats instances as immutable.
    """

    p: int
    terms: dict[MultiIndex, float]
    s: int = 0

    def __post_init__(self):
        if self.p < 1:
            raise DimensionError(f"p must be >= 1, got {self.p}")
        clean: dict[MultiIndex, float] = {}
        max_order = 0
        for k, theta in self.terms.items():
            theta = float(theta)
            if theta == 0.0:
                continue
            if not np.isfinite(theta):
                raise ValueError(f"non-finite coefficient for {k}")
            if k.variables[-1] >= self.p:
                raise DimensionError(f"term {k} references a variable >= p={self.p}")
            clean[k] = theta
            max_order = max(max_order, k.order)
        s = self.s if self.s else max_order
        if s < max_order:
            raise ValueError(f"declared order s={self.s} below max term order {max_order}")
        if s < 1:
            raise ValueError("model must declare order s >= 1")
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "s", s)

    @property
    def sorted_terms(self) -> tuple[MultiIndex, ...]:
        return tuple(sorted(self.terms))

    def nodes(self) -> range:
        return range(self.p)

    def terms_of(self, node: int) -> tuple[MultiIndex, ...]:
        self._check_node(node)
        return tuple(k for k in sorted(self.terms) if k.contains(node))

    def local_view(self, node: int) -> "LocalView":
        order = self.terms_of(node)
        theta = np.array([self.terms[k] for k in order], dtype=float)
        return LocalView(node=node, order=order, theta=theta)

    def interaction_terms(self) -> tuple[MultiIndex, ...]:
        """Terms coupling >= 2 distinct variables (the hypergraph edges)."""
        return tuple(k for k in sorted(self.terms) if k.arity >= 2)

    def _check_node(self, node: int) -> None:
        if not 0 <= node < self.p:
            raise DimensionError(f"node {node} out of range for p={self.p}")


@dataclass(frozen=True)
class LocalView:
    """The terms of one node: fixed parameter ordering plus coefficients.

    `order` is the canonical (lexicographic multi-index) ordering used for
    every parameter vector exchanged with objectives and the solver.
    """

    node: int
    order: tuple[MultiIndex, ...]
    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.shape != (len(self.order),):
            raise DimensionError(
                f"theta has shape {theta.shape}, expected ({len(self.order)},)"
            )
        if tuple(sorted(self.order)) != self.order:
            raise ValueError("local term ordering must be canonical (sorted)")
        for k in self.order:
            if not k.contains(self.node):
                raise ValueError(f"term {k} does not touch node {self.node}")
        object.__setattr__(self, "theta", theta)

    @property
    def terms(self) -> dict[MultiIndex, float]:
        return dict(zip(self.order, self.theta))

    def max_self_power(self) -> int:
        return max(k.multiplicity(self.node) for k in self.order)


def eval_energy(model: EnergyModel, x: np.ndarray) -> float | np.ndarray:
    """E(x) = - sum_k theta_k f_k(x); rows of a 2d input are independent points."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.p:
        raise DimensionError(f"x has {x.shape[-1]} entries, model has p={model.p}")
    acc = np.zeros(x.shape[:-1], dtype=float)
    for k, theta in model.terms.items():
        acc = acc + theta * eval_monomial(k, x)
    out = -acc
    return out if out.ndim else float(out)


def eval_local_energy(view: LocalView, x: np.ndarray) -> float | np.ndarray:
    """E_i(x) = - sum_{k in K_i} theta_k f_k(x) using the view's coefficients."""
    x = np.asarray(x, dtype=float)
    vals = monomial_matrix(view.order, x) @ view.theta
    out = -vals
    return out if x.ndim > 1 else float(out[0])


def _check_square_symmetric(mat: np.ndarray, what: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionError(f"{what} must be square, got shape {mat.shape}")
    scale = max(1.0, float(np.max(np.abs(mat))))
    if np.max(np.abs(mat - mat.T)) > 1e-12 * scale:
        raise NonSymmetricMatrixError(f"{what} is not symmetric")
    return mat


def gaussian_model(precision: np.ndarray, mean: np.ndarray | float = 0.0) -> EnergyModel:
    """Gaussian N(mean, precision^{-1}) as an order-2 energy model.

    The energy convention carries theta_ii/2 on x_i^2 and theta_ij (no 1/2) on
    each unordered pair x_i x_j; a nonzero mean expands into linear terms with
    coefficient -(precision @ mean)_i on x_i. The additive constant is dropped.
    """
    prec = _check_square_symmetric(precision, "precision")
    p = prec.shape[0]
    try:
        np.linalg.cholesky(prec)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("precision matrix is not positive definite")
    mu = np.broadcast_to(np.asarray(mean, dtype=float), (p,))
    terms: dict[MultiIndex, float] = {}
    for i in range(p):
        terms[MultiIndex.single(i, 2)] = 0.5 * prec[i, i]
        for j in range(i + 1, p):
            if prec[i, j] != 0.0:
                terms[MultiIndex.from_vars((i, j))] = prec[i, j]
    if np.any(mu != 0.0):
        b = prec @ mu
        for i in range(p):
            if b[i] != 0.0:
                terms[MultiIndex.single(i, 1)] = -b[i]
    return EnergyModel(p=p, terms=terms, s=2)


def precision_from_model(model: EnergyModel) -> tuple[np.ndarray, np.ndarray]:
    """Invert gaussian_model: recover (precision, mean) from an order-2 model."""
    if model.s != 2:
        raise ValueError(f"model has order s={model.s}, expected a Gaussian (s=2)")
    p = model.p
    prec = np.zeros((p, p))
    b = np.zeros(p)
    for k, theta in model.terms.items():
        if k.order == 2 and k.arity == 1:
            i = k.variables[0]
            prec[i, i] = 2.0 * theta
        elif k.order == 2:
            i, j = k.variables
            prec[i, j] = prec[j, i] = theta
        else:
            b[k.variables[0]] = theta
    try:
        np.linalg.cholesky(prec)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("recovered precision is not positive definite")
    mean = -np.linalg.solve(prec, b)
    return prec, mean


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All tuples of `parts` integers >= 1 summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for head in range(1, total - parts + 2):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


@dataclass(frozen=True)
class CandidateBasis:
    """The hypothesis class for fitting: a fixed, globally ordered term list."""

    p: int
    s: int
    max_arity: int
    terms: tuple[MultiIndex, ...] = field(default=())

    def __post_init__(self):
        if not self.terms:
            raise ValueError("candidate basis has no terms")
        if tuple(sorted(self.terms)) != self.terms:
            object.__setattr__(self, "terms", tuple(sorted(self.terms)))

    @classmethod
    def full(cls, p: int, s: int, max_arity: int | None = None) -> "CandidateBasis":
        """Every monomial of order 1..s with at most max_arity distinct variables."""
        arity = min(p, s) if max_arity is None else min(max_arity, p, s)
        if arity < 1 or s < 1:
            raise ValueError(f"need s >= 1 and max_arity >= 1, got s={s}, arity={arity}")
        terms: list[MultiIndex] = []
        for a in range(1, arity + 1):
            for support in combinations(range(p), a):
                for degree in range(a, s + 1):
                    for mults in _compositions(degree, a):
                        terms.append(MultiIndex(tuple(zip(support, mults))))
        return cls(p=p, s=s, max_arity=arity, terms=tuple(sorted(terms)))

    @classmethod
    def from_support(cls, model: EnergyModel) -> "CandidateBasis":
        """Restrict the hypothesis class to the model's own support."""
        terms = model.sorted_terms
        arity = max(k.arity for k in terms)
        return cls(p=model.p, s=model.s, max_arity=arity, terms=terms)

    def local_terms(self, node: int) -> tuple[MultiIndex, ...]:
        if not 0 <= node < self.p:
            raise DimensionError(f"node {node} out of range for p={self.p}")
        return tuple(k for k in self.terms if k.contains(node))

    def local_view(self, node: int) -> LocalView:
        order = self.local_terms(node)
        return LocalView(node=node, order=order, theta=np.zeros(len(order)))

    def theta_vector(self, model: EnergyModel) -> np.ndarray:
        """Model coefficients aligned with this basis; absent terms are 0."""
        return np.array([model.terms.get(k, 0.0) for k in self.terms])


def model_to_dict(model: EnergyModel) -> dict:
    return {
        "p": model.p,
        "s": model.s,
        "terms": [
            {"vars": [[v, m] for v, m in k.pairs], "theta": model.terms[k]}
            for k in model.sorted_terms
        ],
    }


def model_from_dict(payload: dict) -> EnergyModel:
    terms = {
        MultiIndex(tuple((int(v), int(m)) for v, m in entry["vars"])): float(entry["theta"])
        for entry in payload["terms"]
    }
    return EnergyModel(p=int(payload["p"]), terms=terms, s=int(payload.get("s", 0)))


def save_model(model: EnergyModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")


def load_model(path: str | Path) -> EnergyModel:
    return model_from_dict(json.loads(Path(path).read_text()))
