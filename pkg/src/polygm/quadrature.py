"""Adaptive Gauss-Kronrod (G7, K15) quadrature.

Two code paths share the same node table:

- `integrate` / `integrate_real_line`: plain adaptive bisection for a single
  vectorized integrand. Used for oracle-grade integrals (tolerances down to
  ~1e-13) and one-off checks.
- `exp_poly_moments`: a batched variant computing moment vectors
  integral of x^l * exp(-P_g(x)) dx over the real line for many polynomials
  P_g at once, sharing panel refinement across the batch while enforcing the
  tolerance for every batch member. This is the pseudo-likelihood workhorse:
  the per-sample conditional integrals are independent, so the batch dimension
  is just numpy-level parallelism.

Unbounded domains use the substitution x = t / (1 - t^2), t in (-1, 1), whose
Jacobian (1 + t^2) / (1 - t^2)^2 is evaluated only at interior Kronrod nodes.
The per-panel error proxy is |K15 - G7|, which overestimates the true K15
error for smooth integrands, so accepted results are conservative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IntegrabilityError, QuadratureAccuracyError

__all__ = ["QuadratureResult", "integrate", "integrate_real_line", "exp_poly_moments"]

# Kronrod-15 nodes on [-1, 1] and their weights; every second node (odd index)
# is a Gauss-7 node. Values are the standard QUADPACK table.
_XK = np.array([
    -0.991455371120812639206854697526329,
    -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926,
    -0.741531185599394439863864773280788,
    -0.586087235467691130294144838258730,
    -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245,
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
# Gauss-7 weights aligned with the full 15-node table (zeros at Kronrod-only nodes).
_WG = np.zeros(15)
_WG[1::2] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
]


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    panels: int


def _panel_eval(f, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """K15 and |K15 - G7| for a batch of panels; f is vectorized over points."""
    half = 0.5 * (b - a)[:, None]
    pts = 0.5 * (a + b)[:, None] + half * _XK[None, :]
    vals = np.asarray(f(pts.ravel()), dtype=float).reshape(pts.shape)
    k15 = (vals * _WK[None, :]).sum(axis=1) * half[:, 0]
    g7 = (vals * _WG[None, :]).sum(axis=1) * half[:, 0]
    return k15, np.abs(k15 - g7)


def integrate(
    f,
    a: float,
    b: float,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-13,
    max_panels: int = 4096,
    initial_panels: int = 8,
) -> QuadratureResult:
    """Adaptively integrate a vectorized scalar integrand over [a, b]."""
    edges = np.linspace(a, b, initial_panels + 1)
    lo = list(edges[:-1])
    hi = list(edges[1:])
    vals, errs = map(list, _panel_eval(f, np.array(lo), np.array(hi)))
    while True:
        total = float(np.sum(vals))
        err = float(np.sum(errs))
        if not np.isfinite(total):
            raise IntegrabilityError("integrand produced a non-finite panel value")
        if err <= max(abs_tol, rel_tol * abs(total)):
            return QuadratureResult(value=total, error=err, panels=len(vals))
        if len(vals) >= max_panels:
            raise QuadratureAccuracyError(
                f"no convergence within {max_panels} panels (error {err:.3e})"
            )
        worst = int(np.argmax(errs))
        mid = 0.5 * (lo[worst] + hi[worst])
        new_lo = np.array([lo[worst], mid])
        new_hi = np.array([mid, hi[worst]])
        new_vals, new_errs = _panel_eval(f, new_lo, new_hi)
        lo[worst], hi[worst] = lo[worst], mid
        vals[worst], errs[worst] = new_vals[0], new_errs[0]
        lo.append(mid)
        hi.append(new_hi[1])
        vals.append(new_vals[1])
        errs.append(new_errs[1])


def _to_line(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = t / (1.0 - t * t)
    jac = (1.0 + t * t) / (1.0 - t * t) ** 2
    return x, jac


def integrate_real_line(
    f,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-13,
    max_panels: int = 4096,
    initial_panels: int = 16,
) -> QuadratureResult:
    """Integrate a vectorized scalar integrand over the whole real line."""

    def transformed(t):
        x, jac = _to_line(t)
        return np.asarray(f(x), dtype=float) * jac

    return integrate(
        transformed, -1.0, 1.0, rel_tol=rel_tol, abs_tol=abs_tol,
        max_panels=max_panels, initial_panels=initial_panels,
    )


def _moment_panels(coeffs: np.ndarray, n_moments: int, lo: np.ndarray, hi: np.ndarray):
    """K15/error arrays of shape (n_panels, G, n_moments+1) for new panels.

    coeffs[g, l] is the coefficient of x^l in P_g; integrand components are
    x^c * exp(-P_g(x)) * jacobian for c = 0..n_moments, on the transformed line.
    """
    half = 0.5 * (hi - lo)[:, None]
    t = 0.5 * (lo + hi)[:, None] + half * _XK[None, :]
    x, jac = _to_line(t)  # (n_panels, 15)
    # Horner evaluation of every P_g on the shared node set: (G, n_panels, 15).
    acc = np.zeros((coeffs.shape[0],) + x.shape)
    for l in range(coeffs.shape[1] - 1, -1, -1):
        acc *= x[None, :, :]
        acc += coeffs[:, l, None, None]
    with np.errstate(over="ignore", under="ignore"):
        dens = np.exp(-acc)
    # x^c * jacobian * weight tables, shared across the batch: (n_panels, 15, C).
    powers = np.ones(x.shape + (n_moments + 1,))
    for c in range(1, n_moments + 1):
        powers[:, :, c] = powers[:, :, c - 1] * x
    wk = powers * (jac * half)[:, :, None] * _WK[None, :, None]
    wg = powers * (jac * half)[:, :, None] * _WG[None, :, None]
    with np.errstate(invalid="ignore", over="ignore"):
        k15 = np.einsum("gpn,pnc->pgc", dens, wk)
        g7 = np.einsum("gpn,pnc->pgc", dens, wg)
    return k15, np.abs(k15 - g7)


def exp_poly_moments(
    coeffs: np.ndarray,
    n_moments: int,
    rel_tol: float = 1e-7,
    abs_tol: float = 1e-12,
    max_panels: int = 512,
    initial_panels: int = 16,
) -> tuple[np.ndarray, int]:
    """Moments M[g, c] = integral of x^c exp(-P_g(x)) dx over R, c = 0..n_moments.

    Panels are refined until every (g, c) satisfies
    sum_panels |K15 - G7| <= max(abs_tol, rel_tol * |M[g, c]|). Non-finite
    totals (divergent exp(-P)) raise IntegrabilityError with the batch index.
    Returns (M, number of panels used).
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    edges = np.linspace(-1.0, 1.0, initial_panels + 1)
    lo, hi = edges[:-1].copy(), edges[1:].copy()
    vals, errs = _moment_panels(coeffs, n_moments, lo, hi)
    while True:
        totals = vals.sum(axis=0)  # (G, C)
        err_tot = errs.sum(axis=0)
        bad = ~np.isfinite(totals)
        if bad.any():
            g = int(np.argwhere(bad)[0][0])
            raise IntegrabilityError(
                f"divergent conditional integral for batch element {g}"
            )
        tol = np.maximum(abs_tol, rel_tol * np.abs(totals))
        unmet = err_tot > tol
        if not unmet.any():
            return totals, len(lo)
        if len(lo) >= max_panels:
            raise QuadratureAccuracyError(
                f"no convergence within {max_panels} panels "
                f"(worst ratio {float((err_tot / tol).max()):.3e})"
            )
        # Split every panel carrying a non-trivial share of some unmet budget;
        # always at least the single worst panel.
        with np.errstate(divide="ignore"):
            load = np.where(unmet[None, :, :], errs / tol[None, :, :], 0.0)
        panel_load = load.max(axis=(1, 2))
        split = panel_load > panel_load.max() / 8.0
        split &= panel_load > 0.0
        n_new = int(split.sum())
        if len(lo) + n_new > max_panels:
            order = np.argsort(panel_load)[::-1]
            keep = order[: max(1, max_panels - len(lo))]
            split = np.zeros_like(split)
            split[keep] = panel_load[keep] > 0.0
        mids = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mids])
        new_hi = np.concatenate([mids, hi[split]])
        new_vals, new_errs = _moment_panels(coeffs, n_moments, new_lo, new_hi)
        lo = np.concatenate([lo[~split], new_lo])
        hi = np.concatenate([hi[~split], new_hi])
        vals = np.concatenate([vals[~split], new_vals], axis=0)
        errs = np.concatenate([errs[~split], new_errs], axis=0)
