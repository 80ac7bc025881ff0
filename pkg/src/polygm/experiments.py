"""Experiment runners: hyperparameter sweeps, scaling studies, benchmarks.

Every runner follows the same shape: merge the caller's config over the
module defaults, draw exact samples, fit models, write a flat records.csv,
then build report.json by re-reading that CSV, so every fitted law is
recomputed from the emitted artifact rather than from state inside the run
loop. Reruns with the same config and seed reproduce the CSV exactly except
for wall-time columns.

Seeds are derived per record from the root seed plus the record's labels,
so no row depends on how many rows ran before it.
"""

from __future__ import annotations

import time
import zlib
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .fixtures import make_sampler, model_from_spec
from .model import CandidateBasis, EnergyModel
from .mrd import MRDParams
from .recovery import (
    NStarConfig,
    fit_model,
    max_abs_error,
    mean_abs_error,
    nstar_search,
    threshold_structure,
)
from .reporting import (
    check,
    fit_log_linear,
    fit_loglog,
    group_stat,
    read_records,
    write_records,
    write_report,
)
from .solver import SolveConfig

__all__ = [
    "derive_seed",
    "run_sweep_mrd",
    "run_error_scaling",
    "run_agreement",
    "run_nstar_scaling",
    "run_runtime_bench",
    "run_incoherence_fixture",
    "run_sweep_lambda",
    "DEFAULT_SWEEP_MRD",
    "DEFAULT_ERROR_SCALING",
    "DEFAULT_AGREEMENT",
    "DEFAULT_NSTAR",
    "DEFAULT_BENCH",
    "DEFAULT_INCOHERENCE",
    "DEFAULT_SWEEP_LAMBDA",
]


def derive_seed(root: int, *tags) -> int:
    """Deterministic child seed from a root seed and a label path."""
    entropy = [int(root) & 0xFFFFFFFF]
    for tag in tags:
        if isinstance(tag, (int, np.integer)):
            entropy.append(int(tag) & 0xFFFFFFFF)
        else:
            entropy.append(zlib.crc32(str(tag).encode()))
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def _merge(default, override):
    if override is None:
        return default
    if isinstance(default, dict) and isinstance(override, dict):
        out = dict(default)
        for key, value in override.items():
            out[key] = _merge(default.get(key), value)
        return out
    return override


def _prepare(config, default, seed, out_dir):
    cfg = _merge(default, config or {})
    if seed is not None:
        cfg["seed"] = int(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, int(cfg["seed"]), out


def _basis_for(model: EnergyModel, cfg_case: dict) -> CandidateBasis:
    s = cfg_case.get("basis_s") or model.s
    arity = cfg_case.get("basis_arity") or min(model.p, s)
    return CandidateBasis.full(model.p, s, max_arity=arity)


def _min_interaction(model: EnergyModel) -> float | None:
    values = [abs(v) for k, v in model.terms.items() if k.arity >= 2]
    return min(values) if values else None


def _structure_success(estimate, model: EnergyModel, tau: float | None = None):
    """Exact structure recovery at threshold tau (default half the weakest edge)."""
    if tau is None:
        kappa = _min_interaction(model)
        if kappa is None:
            return None
        tau = kappa / 2.0
    return threshold_structure(estimate, tau) == frozenset(model.interaction_terms())


def _worst_status(fit) -> str:
    statuses = {r.status for r in fit.node_results.values()}
    if statuses == {"converged"}:
        return "converged"
    return sorted(statuses - {"converged"})[0]


def _fit_record(basis, method, model, sampler, n, sample_seed, lam, mrd=None,
                scfg=None, qcfg=None, tau=None):
    """Sample, fit, and measure one record; timing excludes sampling."""
    samples = sampler(n, sample_seed)
    base = scfg or SolveConfig()
    cfg = SolveConfig(
        grad_tol=base.grad_tol, max_iters=base.max_iters, lam=lam,
        memory=base.memory, armijo_c=base.armijo_c,
        max_halvings=base.max_halvings,
        penalize_single_node=base.penalize_single_node,
    )
    t0 = time.perf_counter()
    try:
        fit = fit_model(basis, method, samples, mrd_params=mrd, scfg=cfg, qcfg=qcfg)
    except ArithmeticError as exc:
        wall = time.perf_counter() - t0
        return {
            "status": type(exc).__name__, "eps_mean": None, "eps_max": None,
            "success": None, "wall_time_s": wall, "iterations": None,
        }
    wall = time.perf_counter() - t0
    return {
        "status": _worst_status(fit),
        "eps_mean": mean_abs_error(fit.estimate, model),
        "eps_max": max_abs_error(fit.estimate, model),
        "success": _structure_success(fit.estimate, model, tau),
        "wall_time_s": wall,
        "iterations": fit.total_iterations,
        "_fit": fit,
    }


def _implication_check(rows, tau_field="kappa"):
    """Every record with max-error below half the weakest edge must recover."""
    scored = [
        r for r in rows
        if r.get(tau_field) is not None and r.get("eps_max") is not None
        and r.get("success") is not None and r["eps_max"] < r[tau_field] / 2.0
    ]
    violations = [r for r in scored if not r["success"]]
    eligible = len(scored)
    return check(
        "structure-implication",
        len(violations) == 0,
        {"eligible": eligible, "violations": len(violations)},
        "every record with max-error < kappa/2 recovers the exact structure",
    )


# --------------------------------------------------------------------------
# hyperparameter sweep over the reweighting distribution


DEFAULT_SWEEP_MRD = {
    "seed": 2026,
    "model": {"kind": "gaussian-random", "p": 10},
    "n": 10_000,
    "nu_grid": [0.05, 0.3, 0.8, 1.3, 2.0, 2.7, 3.4, 4.0],
    "delta_grid": [0.05, 0.25, 0.6, 1.5, 2.1, 2.8, 3.4, 4.0],
    "sets": 3,
    "lam": 0.0,
    "well_delta": 1.0,
    "well_ratio": 3.0,
    "blowup_delta": 0.25,
    "blowup_ratio": 10.0,
}

_SWEEP_COLUMNS = [
    "nu", "delta", "rep", "n", "seed", "status",
    "eps_mean", "eps_max", "wall_time_s", "iterations",
]


def run_sweep_mrd(config: dict | None, out_dir, seed: int | None = None) -> dict:
    """Reconstruction error across a (nu, delta) grid on a fixed model."""
    cfg, root, out = _prepare(config, DEFAULT_SWEEP_MRD, seed, out_dir)
    model = model_from_spec(cfg["model"], derive_seed(root, "model"))
    basis = _basis_for(model, cfg)
    sampler = make_sampler(model)
    rows = []
    for delta in cfg["delta_grid"]:
        for nu in cfg["nu_grid"]:
            mrd = MRDParams(nu=nu, delta=delta, s=basis.s)
            for rep in range(cfg["sets"]):
                sample_seed = derive_seed(root, "sample", rep)
                rec = _fit_record(
                    basis, "isodus", model, sampler, cfg["n"], sample_seed,
                    cfg["lam"], mrd=mrd,
                )
                rec.pop("_fit", None)
                rec.pop("success", None)
                rows.append({
                    "nu": nu, "delta": delta, "rep": rep, "n": cfg["n"],
                    "seed": sample_seed, **rec,
                })
    write_records(out / "records.csv", rows, _SWEEP_COLUMNS)

    data = read_records(out / "records.csv")
    cells = group_stat(data, ("delta", "nu"), "eps_mean", "mean")
    ok_cells = {
        k: v for k, v in cells.items()
        if np.isfinite(v) and all(
            r["status"] == "converged"
            for r in data if (r["delta"], r["nu"]) == k
        )
    }
    grid_min = min(v for v in ok_cells.values()) if ok_cells else float("nan")
    well = {k: v for k, v in cells.items() if k[0] >= cfg["well_delta"]}
    well_ok = bool(well) and all(
        k in ok_cells and v <= cfg["well_ratio"] * grid_min
        for k, v in well.items()
    )
    small = {k: v for k, v in cells.items() if k[0] <= cfg["blowup_delta"]}
    blowup = any(
        k not in ok_cells or not np.isfinite(v) or v > cfg["blowup_ratio"] * grid_min
        for k, v in small.items()
    )
    checks = [
        check(
            "well-region-within-ratio", well_ok,
            {"max_over_min": (max(well.values()) / grid_min) if well and grid_min > 0 else None},
            f"every delta >= {cfg['well_delta']} cell finite and <= {cfg['well_ratio']}x grid min",
        ),
        check(
            "small-delta-blowup", blowup,
            {"cells": {str(k): v for k, v in small.items()}},
            f"some delta <= {cfg['blowup_delta']} cell fails or exceeds {cfg['blowup_ratio']}x grid min",
        ),
    ]
    report = {
        "experiment": "sweep-mrd",
        "config": cfg,
        "grid_min": grid_min,
        "cell_eps_mean": {f"{d:g},{v:g}": e for (d, v), e in cells.items()},
        "checks": checks,
    }
    write_report(out / "report.json", report)
    return report


# --------------------------------------------------------------------------
# error vs sample size


DEFAULT_ERROR_SCALING = {
    "seed": 2026,
    "n_grid": [1000, 3000, 10_000, 30_000, 100_000],
    "sets": 10,
    "cases": [
        {
            "name": "ggm10", "model": {"kind": "gaussian-random", "p": 10},
            "methods": ["isodus"], "lam": 0.0,
            "expected_slope": -0.5, "slope_tol": 0.1,
        },
        {
            "name": "quartic1d", "model": {"kind": "quartic1d"},
            "methods": ["isodus", "pl"], "lam": 0.0,
            "expected_slope": -0.5, "slope_tol": 0.1,
        },
        {
            "name": "multibody4d", "model": {"kind": "pseudo4d"},
            "methods": ["isodus"], "lam": 0.0,
            "expected_slope": -0.5, "slope_tol": 0.15,
        },
    ],
    "method_gap_tol": 0.1,
}

_SCALING_COLUMNS = [
    "case", "method", "p", "n", "set", "seed", "status", "kappa",
    "eps_mean", "eps_max", "success", "wall_time_s", "iterations",
]


def run_error_scaling(config: dict | None, out_dir, seed: int | None = None) -> dict:
    """Log-log slope of reconstruction error against sample size."""
    cfg, root, out = _prepare(config, DEFAULT_ERROR_SCALING, seed, out_dir)
    rows = []
    for case in cfg["cases"]:
        model = model_from_spec(case["model"], derive_seed(root, "model", case["name"]))
        basis = _basis_for(model, case)
        sampler = make_sampler(model)
        kappa = _min_interaction(model)
        for n in cfg["n_grid"]:
            for rep in range(cfg["sets"]):
                sample_seed = derive_seed(root, "sample", case["name"], n, rep)
                for method in case["methods"]:
                    rec = _fit_record(
                        basis, method, model, sampler, n, sample_seed,
                        case.get("lam", 0.0),
                    )
                    rec.pop("_fit", None)
                    rows.append({
                        "case": case["name"], "method": method, "p": model.p,
                        "n": n, "set": rep, "seed": sample_seed,
                        "kappa": kappa if kappa is not None else "",
                        **rec,
                    })
    write_records(out / "records.csv", rows, _SCALING_COLUMNS)

    data = read_records(out / "records.csv")
    checks = []
    slopes = {}
    for case in cfg["cases"]:
        case_rows = [r for r in data if r["case"] == case["name"]]
        for method in case["methods"]:
            med = group_stat(
                [r for r in case_rows if r["method"] == method],
                ("n",), "eps_mean", "median",
            )
            ns = [k[0] for k in med]
            eps = [med[k] for k in med]
            fit = fit_loglog(ns, eps)
            slopes[(case["name"], method)] = fit
            target = case.get("expected_slope", -0.5)
            tol = case.get("slope_tol", 0.1)
            checks.append(check(
                f"slope-{case['name']}-{method}",
                abs(fit.slope - target) <= tol,
                {"slope": fit.slope, "stderr": fit.stderr, "r2": fit.r2},
                f"{target} +/- {tol}",
            ))
        if len(case["methods"]) == 2:
            a, b = (slopes[(case["name"], m)].slope for m in case["methods"])
            checks.append(check(
                f"method-gap-{case['name']}",
                abs(a - b) <= cfg["method_gap_tol"],
                {"gap": abs(a - b)},
                f"slopes within {cfg['method_gap_tol']} of each other",
            ))
    kappa_rows = [r for r in data if r.get("kappa") not in (None, "")]
    if kappa_rows:
        checks.append(_implication_check(kappa_rows))
    report = {
        "experiment": "error-scaling",
        "config": cfg,
        "slopes": {f"{c}-{m}": f.as_dict() for (c, m), f in slopes.items()},
        "checks": checks,
    }
    write_report(out / "report.json", report)
    return report


# --------------------------------------------------------------------------
# method agreement on the quartic model


DEFAULT_AGREEMENT = {
    "seed": 2026,
    "model": {"kind": "quartic1d"},
    "n": 100_000,
    "sets": 8,
    "band_factor": 3.0,
}

_AGREEMENT_COLUMNS = [
    "method", "set", "seed", "term", "estimate", "status", "wall_time_s",
]


def run_agreement(config: dict | None, out_dir, seed: int | None = None) -> dict:
    """Both estimators on the same model: coefficient intervals must overlap."""
    cfg, root, out = _prepare(config, DEFAULT_AGREEMENT, seed, out_dir)
    model = model_from_spec(cfg["model"], derive_seed(root, "model"))
    basis = _basis_for(model, cfg)
    sampler = make_sampler(model)
    rows = []
    for method in ("isodus", "pl"):
        for rep in range(cfg["sets"]):
            sample_seed = derive_seed(root, "sample", method, rep)
            rec = _fit_record(basis, method, model, sampler, cfg["n"], sample_seed, 0.0)
            fit = rec.pop("_fit", None)
            estimates = dict(zip(basis.terms, fit.estimate.values)) if fit else {}
            for term in basis.terms:
                rows.append({
                    "method": method, "set": rep, "seed": sample_seed,
                    "term": str(term), "estimate": estimates.get(term),
                    "status": rec["status"], "wall_time_s": rec["wall_time_s"],
                })
    write_records(out / "records.csv", rows, _AGREEMENT_COLUMNS)

    data = read_records(out / "records.csv")
    target_terms = [str(k) for k in model.terms]
    factor = cfg["band_factor"]
    intervals = {}
    checks = []
    for term in sorted({r["term"] for r in data}):
        stats = {}
        for method in ("isodus", "pl"):
            vals = np.array([
                r["estimate"] for r in data
                if r["term"] == term and r["method"] == method
                and r["estimate"] is not None
            ])
            se = vals.std(ddof=1) / np.sqrt(vals.size) if vals.size > 1 else float("nan")
            stats[method] = {"mean": float(vals.mean()), "stderr": float(se)}
        gap = abs(stats["isodus"]["mean"] - stats["pl"]["mean"])
        band = factor * (stats["isodus"]["stderr"] + stats["pl"]["stderr"])
        intervals[term] = {**stats, "gap": gap, "band": band}
        if term in target_terms:
            checks.append(check(
                f"agreement-{term}", gap <= band,
                {"gap": gap, "band": band},
                f"interval overlap at +/- {factor} std-err",
            ))
    report = {
        "experiment": "agreement",
        "config": cfg,
        "intervals": intervals,
        "checks": checks,
    }
    write_report(out / "report.json", report)
    return report


# --------------------------------------------------------------------------
# sample complexity vs problem size


DEFAULT_NSTAR = {
    "seed": 2026,
    "p_grid": [16, 24, 32, 48, 64],
    "d": 3,
    "kappa": 0.25,
    "methods": [{"method": "isodus", "lam": 0.35}],
    "realizations": 1,
    "warm_start": True,
    "nstar": {
        "streak": 45, "step_up": 25, "step_down": 10,
        "start": 300, "floor": 25, "ceiling": 100_000,
    },
    "r2_min": 0.8,
}

_NSTAR_COLUMNS = [
    "method", "lam", "p", "d", "kappa", "realization", "n", "trial", "seed",
    "success", "eps_mean", "eps_max", "wall_time_s", "iterations", "status",
]


def run_nstar_scaling(config: dict | None, out_dir, seed: int | None = None) -> dict:
    """Certified minimum sample size as a function of the number of nodes."""
    cfg, root, out = _prepare(config, DEFAULT_NSTAR, seed, out_dir)
    rows = []
    nstar_values = {}
    for spec in cfg["methods"]:
        method, lam = spec["method"], spec["lam"]
        for realization in range(cfg["realizations"]):
            prev_star = None
            for p in cfg["p_grid"]:
                model = model_from_spec(
                    {"kind": "regular-ggm", "p": p, "d": cfg["d"], "kappa": cfg["kappa"]},
                    derive_seed(root, "graph", p, realization),
                )
                basis = _basis_for(model, spec)
                sampler = make_sampler(model)
                tau = cfg["kappa"] / 2.0

                def trial(n: int, t: int, _m=model, _b=basis, _s=sampler) -> bool:
                    sample_seed = derive_seed(root, "trial", method, realization, p, n, t)
                    rec = _fit_record(_b, method, _m, _s, n, sample_seed, lam, tau=tau)
                    rec.pop("_fit", None)
                    rows.append({
                        "method": method, "lam": lam, "p": p, "d": cfg["d"],
                        "kappa": cfg["kappa"], "realization": realization,
                        "n": n, "trial": t, "seed": sample_seed, **rec,
                    })
                    return bool(rec["success"])

                ncfg_fields = dict(cfg["nstar"])
                if cfg["warm_start"] and prev_star is not None:
                    ncfg_fields["start"] = max(prev_star, ncfg_fields["floor"])
                result = nstar_search(trial, NStarConfig(**ncfg_fields))
                nstar_values[(method, realization, p)] = result
                if result.status == "certified":
                    prev_star = result.n_star
    write_records(out / "records.csv", rows, _NSTAR_COLUMNS)

    data = read_records(out / "records.csv")
    checks = [_implication_check(data)]
    fits = {}
    for spec in cfg["methods"]:
        method = spec["method"]
        for realization in range(cfg["realizations"]):
            stars = {
                p: nstar_values[(method, realization, p)]
                for p in cfg["p_grid"]
            }
            certified = {p: r.n_star for p, r in stars.items() if r.status == "certified"}
            all_certified = len(certified) == len(cfg["p_grid"])
            label = f"{method}-r{realization}"
            checks.append(check(
                f"all-certified-{label}", all_certified,
                {p: stars[p].status for p in cfg["p_grid"]},
                "n* certified at every p",
            ))
            if len(certified) >= 2:
                fit = fit_log_linear(list(certified), list(certified.values()))
                fits[label] = fit
                checks.append(check(
                    f"log-law-{label}",
                    fit.slope > 0 and fit.r2 > cfg["r2_min"],
                    {"a": fit.slope, "b": fit.intercept, "r2": fit.r2},
                    f"n* = a log p + b with a > 0 and R^2 > {cfg['r2_min']}",
                ))
    report = {
        "experiment": "nstar-scaling",
        "config": cfg,
        "nstar": {
            f"{m}-r{r}-p{p}": {"n_star": res.n_star, "status": res.status,
                               "total_trials": res.total_trials}
            for (m, r, p), res in nstar_values.items()
        },
        "fits": {k: f.as_dict() for k, f in fits.items()},
        "checks": checks,
    }
    write_report(out / "report.json", report)
    return report


# --------------------------------------------------------------------------
# runtime benchmarks


DEFAULT_BENCH = {
    "seed": 2026,
    "single_thread": True,
    "reps": 3,
    "ratio": {"n_grid": [100, 1000, 10_000], "min_ratio": 10.0},
    "order": {"L_grid": [4, 6, 8], "n": 100},
    "linear": {
        "model": {"kind": "pseudo4d"},
        "n_grid": [10_000, 30_000, 100_000, 300_000],
        "slope": 1.0, "slope_tol": 0.1,
    },
}

_BENCH_COLUMNS = [
    "part", "model", "L", "method", "n", "rep", "seed",
    "fit_seconds", "iterations", "status",
]


def run_runtime_bench(config: dict | None, out_dir, seed: int | None = None) -> dict:
    """Wall-time comparison of the two estimators; single-threaded timing."""
    cfg, root, out = _prepare(config, DEFAULT_BENCH, seed, out_dir)
    rows = []

    def timed_fits(part, model, basis, sampler, method, n, label, L):
        sample_seed = derive_seed(root, "sample", part, label, n)
        samples = sampler(n, sample_seed)
        # one discarded warm-up rep, then measured reps on the same data
        for rep in range(-1, cfg["reps"]):
            t0 = time.perf_counter()
            fit = fit_model(basis, method, samples)
            wall = time.perf_counter() - t0
            if rep < 0:
                continue
            rows.append({
                "part": part, "model": label, "L": L, "method": method,
                "n": n, "rep": rep, "seed": sample_seed,
                "fit_seconds": wall, "iterations": fit.total_iterations,
                "status": _worst_status(fit),
            })

    def run_all():
        model = model_from_spec({"kind": "quartic1d"})
        basis = _basis_for(model, {})
        sampler = make_sampler(model)
        for n in cfg["ratio"]["n_grid"]:
            for method in ("isodus", "pl"):
                timed_fits("ratio", model, basis, sampler, method, n, "quartic1d", 4)
        for L in cfg["order"]["L_grid"]:
            model = model_from_spec({"kind": "poly1d", "L": L}, derive_seed(root, "polymodel", L))
            basis = _basis_for(model, {})
            sampler = make_sampler(model)
            for method in ("isodus", "pl"):
                timed_fits("order", model, basis, sampler, method,
                           cfg["order"]["n"], f"poly1d-L{L}", L)
        model = model_from_spec(cfg["linear"]["model"], derive_seed(root, "linmodel"))
        basis = _basis_for(model, cfg["linear"])
        sampler = make_sampler(model)
        for n in cfg["linear"]["n_grid"]:
            timed_fits("linear", model, basis, sampler, "isodus", n,
                       "linear-model", model.s)

    if cfg["single_thread"]:
        with threadpool_limits(limits=1):
            run_all()
    else:
        run_all()
    write_records(out / "records.csv", rows, _BENCH_COLUMNS)

    data = read_records(out / "records.csv")
    checks = []
    ratio_rows = [r for r in data if r["part"] == "ratio"]
    ratios = {}
    for n in cfg["ratio"]["n_grid"]:
        med = group_stat(
            [r for r in ratio_rows if r["n"] == n], ("method",), "fit_seconds",
        )
        ratios[n] = med[("pl",)] / med[("isodus",)]
        checks.append(check(
            f"ratio-n{n}", ratios[n] > cfg["ratio"]["min_ratio"],
            {"ratio": ratios[n]},
            f"PL/ISODUS wall-time ratio > {cfg['ratio']['min_ratio']}",
        ))
    order_rows = [r for r in data if r["part"] == "order"]
    order_ratios = []
    for L in cfg["order"]["L_grid"]:
        med = group_stat(
            [r for r in order_rows if r["L"] == L], ("method",), "fit_seconds",
        )
        order_ratios.append(med[("pl",)] / med[("isodus",)])
    checks.append(check(
        "ratio-monotone-in-order",
        all(a < b for a, b in zip(order_ratios, order_ratios[1:])),
        {"ratios": dict(zip(map(str, cfg["order"]["L_grid"]), order_ratios))},
        "PL/ISODUS ratio increases with the model order",
    ))
    lin_rows = [r for r in data if r["part"] == "linear"]
    med = group_stat(lin_rows, ("n",), "fit_seconds")
    lin_fit = fit_loglog([k[0] for k in med], [med[k] for k in med])
    checks.append(check(
        "linear-runtime-slope",
        abs(lin_fit.slope - cfg["linear"]["slope"]) <= cfg["linear"]["slope_tol"],
        {"slope": lin_fit.slope, "r2": lin_fit.r2},
        f"{cfg['linear']['slope']} +/- {cfg['linear']['slope_tol']}",
    ))
    report = {
        "experiment": "runtime-bench",
        "config": cfg,
        "ratios": {str(k): v for k, v in ratios.items()},
        "order_ratios": dict(zip(map(str, cfg["order"]["L_grid"]), order_ratios)),
        "linear_fit": lin_fit.as_dict(),
        "checks": checks,
    }
    write_report(out / "report.json", report)
    return report


# --------------------------------------------------------------------------
# correlated-non-neighbour fixture


DEFAULT_INCOHERENCE = {
    "seed": 2026,
    "rho": 0.55,
    "n_grid": [250, 500, 1000, 2000, 4000, 8000],
    "sets": 10,
    "lam": 0.0,
}

_INCOHERENCE_COLUMNS = [
    "method", "n", "set", "seed", "status", "kappa",
    "eps_mean", "eps_max", "success", "wall_time_s", "iterations",
]


def run_incoherence_fixture(config: dict | None, out_dir, seed: int | None = None) -> dict:
    """Thresholded recovery on the diamond model where sparsistency fails."""
    cfg, root, out = _prepare(config, DEFAULT_INCOHERENCE, seed, out_dir)
    model = model_from_spec({"kind": "diamond", "rho": cfg["rho"]})
    basis = _basis_for(model, cfg)
    sampler = make_sampler(model)
    kappa = _min_interaction(model)
    rows = []
    for method in ("isodus", "pl"):
        for n in cfg["n_grid"]:
            for rep in range(cfg["sets"]):
                sample_seed = derive_seed(root, "sample", n, rep)
                rec = _fit_record(
                    basis, method, model, sampler, n, sample_seed, cfg["lam"],
                )
                rec.pop("_fit", None)
                rows.append({
                    "method": method, "n": n, "set": rep, "seed": sample_seed,
                    "kappa": kappa, **rec,
                })
    write_records(out / "records.csv", rows, _INCOHERENCE_COLUMNS)

    data = read_records(out / "records.csv")
    checks = [_implication_check(data)]
    recovery_at = {}
    for method in ("isodus", "pl"):
        med = group_stat(
            [r for r in data if r["method"] == method], ("n",), "eps_max",
        )
        ns = [k[0] for k in med]
        meds = [med[k] for k in med]
        checks.append(check(
            f"max-error-decays-{method}",
            all(a > b for a, b in zip(meds, meds[1:])),
            {"medians": dict(zip(map(str, ns), meds))},
            "median max-error decreases monotonically in n",
        ))
        below = [n for n, m in zip(ns, meds) if m < kappa / 2.0]
        recovery_at[method] = min(below) if below else None
        checks.append(check(
            f"recovery-reached-{method}", bool(below),
            {"first_n_below_threshold": recovery_at[method]},
            "median max-error crosses below kappa/2 within the n grid",
        ))
    report = {
        "experiment": "incoherence",
        "config": cfg,
        "kappa": kappa,
        "recovery_at": recovery_at,
        "checks": checks,
    }
    write_report(out / "report.json", report)
    return report


# --------------------------------------------------------------------------
# sparsity-penalty sweep


DEFAULT_SWEEP_LAMBDA = {
    "seed": 2026,
    "p": 16,
    "d": 3,
    "kappa": 0.25,
    "n": 12_000,
    "sets": 5,
    "lam_grids": {
        "isodus": [0.0, 0.1, 0.2, 0.35, 0.5, 0.7, 1.0, 1.4],
        "pl": [0.0, 0.5, 1.0, 1.6, 2.3, 3.0, 4.0, 5.0],
    },
    "min_success_rate": 0.8,
}

_LAMBDA_COLUMNS = [
    "method", "lam", "n", "set", "seed", "status", "kappa",
    "eps_mean", "eps_max", "success", "wall_time_s", "iterations",
]


def run_sweep_lambda(config: dict | None, out_dir, seed: int | None = None) -> dict:
    """Reconstruction error across the sparsity-penalty grid for both methods."""
    cfg, root, out = _prepare(config, DEFAULT_SWEEP_LAMBDA, seed, out_dir)
    model = model_from_spec(
        {"kind": "regular-ggm", "p": cfg["p"], "d": cfg["d"], "kappa": cfg["kappa"]},
        derive_seed(root, "graph"),
    )
    basis = _basis_for(model, cfg)
    sampler = make_sampler(model)
    rows = []
    for method, lam_grid in cfg["lam_grids"].items():
        for lam in lam_grid:
            for rep in range(cfg["sets"]):
                sample_seed = derive_seed(root, "sample", rep)
                rec = _fit_record(
                    basis, method, model, sampler, cfg["n"], sample_seed, lam,
                    tau=cfg["kappa"] / 2.0,
                )
                rec.pop("_fit", None)
                rows.append({
                    "method": method, "lam": lam, "n": cfg["n"], "set": rep,
                    "seed": sample_seed, "kappa": cfg["kappa"], **rec,
                })
    write_records(out / "records.csv", rows, _LAMBDA_COLUMNS)

    data = read_records(out / "records.csv")
    checks = [_implication_check(data)]
    best = {}
    min_rate = cfg.get("min_success_rate", 0.8)
    for method, lam_grid in cfg["lam_grids"].items():
        method_rows = [r for r in data if r["method"] == method]
        med = group_stat(method_rows, ("lam",), "eps_mean")
        rate = {}
        for lam in lam_grid:
            hits = [r["success"] for r in method_rows if r["lam"] == lam]
            rate[lam] = sum(bool(h) for h in hits) / len(hits) if hits else 0.0
        # structure recovery is what the penalty is for; eps breaks rate ties
        best_lam = max(lam_grid, key=lambda lam: (rate[lam], -med[(lam,)]))
        best[method] = {
            "lam": best_lam,
            "success_rate": rate[best_lam],
            "eps_mean": med[(best_lam,)],
        }
        checks.append(check(
            f"workable-lambda-{method}",
            rate[best_lam] >= min_rate,
            {"best_lam": best_lam, "rate_at_best": rate[best_lam],
             "rate_by_lam": {f"{lam:g}": r for lam, r in rate.items()},
             "eps_by_lam": {f"{k[0]:g}": v for k, v in med.items()}},
            f"some grid value reaches success rate >= {min_rate}",
        ))
    report = {
        "experiment": "sweep-lambda",
        "config": cfg,
        "best": best,
        "checks": checks,
    }
    write_report(out / "report.json", report)
    return report
