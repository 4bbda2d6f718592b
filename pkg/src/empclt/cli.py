"""Scenario runner: TOML config in, JSON + CSV + PNG reports out.

A scenario names one process, one task and its parameters.  Every
report embeds the fully resolved configuration (defaults expanded) so
runs are reproducible from the summary alone; the only field that
varies between identical runs is the timestamp.

Exit codes: 0 success, 1 configuration or input error, 2 at least one
scenario check failed (all checks still run), 3 resource budget
exceeded.
"""

import argparse
import csv
import datetime
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

import numpy as np

from . import __version__
from .clt import (
    approximation_quality,
    findim_gaussian_check,
    limit_covariance_estimate,
    sup_statistic_samples,
)
from .dependence import (
    RateFamily,
    condition_gamma_check,
    delta_estimate,
    exact_moment_oracle,
    linear_decay_threshold,
    mixing_scan,
    moment_bound_check,
    stationary_draws,
    DependenceProfile,
)
from .empirical import (
    boundary_augmented_grid,
    build_chain_grid,
    build_partition,
    choose_K,
    telescoping_decomposition,
)
from .errors import ConfigError, EmpcltError, ResourceError
from .holder import HolderBump, InterpolatedCdf, MonteCarloCdf
from .processes import ProcessSpec, simulate_linear
from .rng import SCHEME, derive_seed
from . import figures

TASKS = (
    "simulate",
    "delta",
    "mixing",
    "moment",
    "clt",
    "empclt",
    "chain",
    "conditions",
)

_TOP_KEYS = {"name", "task", "seed", "out", "process", "params"}

_PROCESS_KEYS = {
    "kind",
    "innovation",
    "d",
    "rho",
    "b",
    "scale",
    "lag",
    "nu",
    "tail_index",
    "burn_in",
}

# task -> {param: default}; None means "resolved later from other values"
TASK_DEFAULTS = {
    "simulate": {"n": 256, "reps": 1},
    "delta": {"lags": list(range(1, 11)), "s": 2.0, "reps": 2000, "analytic": True},
    "mixing": {
        "gaps": [[1], [2], [3], [5], [8]],
        "q": 1,
        "r": 2.0,
        "reps": 4000,
        "alpha": 1.0,
        "bump_lower": None,
        "bump_upper": None,
        "ref_count": 200_000,
    },
    "moment": {
        "n_list": [64, 256, 1024],
        "p": 2,
        "r": 2.0,
        "family": "power",
        "kappas": None,
        "reps": 2000,
        "alpha": 1.0,
        "oracle": False,
        "oracle_n": 6,
        "bump_lower": None,
        "bump_upper": None,
        "ref_count": 200_000,
    },
    "clt": {
        "n": 500,
        "m": 4,
        "reps": 400,
        "projections": 12,
        "alpha": 1.0,
        "L": None,
        "threshold": None,
        "var_tol": 0.15,
        "pass_target": 0.9,
        "calibration_count": 200_000,
        "mc_calibration": 1000,
    },
    "empclt": {
        "n": 500,
        "reps": 400,
        "grid": 5,
        "m": 8,
        "epsilon": 0.25,
        "n_random": 512,
        "quantiles": [0.5, 0.75, 0.9, 0.95, 0.99],
        "calibration_count": 200_000,
    },
    "chain": {
        "n": 200,
        "m": 4,
        "epsilon": 0.25,
        "K": None,
        "t": None,
        "calibration_count": 200_000,
    },
    "conditions": {
        "theta": 1.0,
        "alpha": 1.0,
        "r": 2.0,
        "d": None,
        "p_max": 12,
        "kappas": None,
    },
}


# ------------------------- scenario parsing -------------------------


@dataclass(frozen=True)
class Scenario:
    """One fully resolved run: process, task, expanded parameters."""

    name: str
    task: str
    seed: int
    out: str
    process: ProcessSpec
    params: dict
    process_table: dict = field(repr=False)

    def resolved(self) -> dict:
        """Full configuration with every default expanded."""
        return {
            "name": self.name,
            "task": self.task,
            "seed": self.seed,
            "out": self.out,
            "process": dict(self.process_table),
            "params": dict(self.params),
        }


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def _int_value(table, key, where):
    v = table[key]
    _require(isinstance(v, int) and not isinstance(v, bool), f"{where}.{key} must be an integer")
    return int(v)


def _float_value(table, key, where):
    v = table[key]
    _require(
        isinstance(v, (int, float)) and not isinstance(v, bool),
        f"{where}.{key} must be a number",
    )
    return float(v)


def _build_process(table: dict) -> tuple:
    """Translate the flat [process] table into a ProcessSpec.

    Returns the ProcessSpec plus the normalized table echoed into reports.
    """
    for key in table:
        _require(key in _PROCESS_KEYS, f'unknown key "process.{key}"')
    kind = table.get("kind", "iid")
    _require(
        kind in ("iid", "geometric", "polynomial"),
        f'process.kind must be "iid", "geometric" or "polynomial", got {kind!r}',
    )
    innovation = table.get("innovation", "standard-normal")
    param = float("nan")
    if "nu" in table:
        _require(innovation == "student-t", 'process.nu only applies to the "student-t" law')
        param = _float_value(table, "nu", "process")
    if "tail_index" in table:
        _require(innovation == "pareto", 'process.tail_index only applies to the "pareto" law')
        param = _float_value(table, "tail_index", "process")
    scale = table.get("scale", 1.0)
    if isinstance(scale, list):
        scale = np.asarray(scale, dtype=float)
    lag = _int_value(table, "lag", "process") if "lag" in table else None

    try:
        if kind == "iid":
            for bad in ("rho", "b", "scale", "lag"):
                _require(bad not in table, f'process.{bad} does not apply to kind "iid"')
            d = _int_value(table, "d", "process") if "d" in table else 1
            spec = ProcessSpec.iid(innovation, d, param)
        elif kind == "geometric":
            _require("b" not in table, 'process.b does not apply to kind "geometric"')
            _require("d" not in table, "process.d is set by the scale matrix")
            _require("rho" in table, 'process.rho is required for kind "geometric"')
            rho = _float_value(table, "rho", "process")
            spec = ProcessSpec.geometric(rho, innovation, scale, lag, param)
        else:
            _require("rho" not in table, 'process.rho does not apply to kind "polynomial"')
            _require("d" not in table, "process.d is set by the scale matrix")
            _require("b" in table, 'process.b is required for kind "polynomial"')
            b = _float_value(table, "b", "process")
            spec = ProcessSpec.polynomial(b, innovation, scale, lag, param)
        if "burn_in" in table:
            spec = replace(spec, burn_in=_int_value(table, "burn_in", "process"))
    except EmpcltError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"process table rejected: {exc}") from exc

    resolved = {"kind": kind, "innovation": innovation, "d": spec.d, "lag": spec.lag,
                "burn_in": spec.burn_in}
    for key in ("rho", "b", "nu", "tail_index"):
        if key in table:
            resolved[key] = float(table[key])
    if "scale" in table:
        resolved["scale"] = table["scale"]
    resolved["fingerprint"] = spec.fingerprint()
    return spec, resolved


def _resolve_params(task: str, table: dict) -> dict:
    defaults = TASK_DEFAULTS[task]
    for key in table:
        _require(key in defaults, f'unknown key "params.{key}" for task "{task}"')
    params = {k: (table[k] if k in table else v) for k, v in defaults.items()}
    for key, value in params.items():
        if isinstance(value, bool) and not isinstance(defaults[key], bool):
            raise ConfigError(f"params.{key} must not be a boolean")
    return params


def parse_scenario(raw: dict, default_name: str) -> Scenario:
    """Validate a parsed config mapping; unknown keys are rejected."""
    _require(isinstance(raw, dict), "config root must be a table")
    for key in raw:
        _require(
            key in _TOP_KEYS,
            f'unknown key "{key}" (expected name, task, seed, out, process, params)',
        )
    name = raw.get("name", default_name)
    _require(isinstance(name, str) and name != "", "name must be a nonempty string")
    _require(
        all(c.isalnum() or c in "-_" for c in name),
        "name may only use letters, digits, - and _",
    )
    _require("task" in raw, 'missing required key "task"')
    task = raw["task"]
    _require(task in TASKS, f'unknown task {task!r} (expected one of {", ".join(TASKS)})')
    seed = raw.get("seed", 0)
    _require(
        isinstance(seed, int) and not isinstance(seed, bool) and 0 <= seed < 2**64,
        "seed must be an integer in [0, 2^64)",
    )
    out = raw.get("out", ".")
    _require(isinstance(out, str), "out must be a string path")
    process_table = raw.get("process", {})
    _require(isinstance(process_table, dict), "process must be a table")
    params_table = raw.get("params", {})
    _require(isinstance(params_table, dict), "params must be a table")
    spec, resolved_proc = _build_process(process_table)
    params = _resolve_params(task, params_table)
    return Scenario(
        name=name,
        task=task,
        seed=seed,
        out=out,
        process=spec,
        params=params,
        process_table=resolved_proc,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        # the decoder message carries line/column positions
        raise ConfigError(f"{path}: {exc}")
    return parse_scenario(raw, path.stem)


# ------------------------- task execution -------------------------


@dataclass
class TaskOutput:
    results: dict
    checks: list
    tables: dict
    figures: dict


def _check(name: str, passed: bool, detail: str) -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def _default_bump(params: dict, d: int, alpha: float) -> HolderBump:
    lower = params["bump_lower"] if params["bump_lower"] is not None else [-0.5] * d
    upper = params["bump_upper"] if params["bump_upper"] is not None else [0.5] * d
    return HolderBump(lower, upper, alpha)


def _calibration(spec, count, seed):
    draws = stationary_draws(spec, count, seed, label="cli-cal")
    marginals = [InterpolatedCdf(draws[:, i]) for i in range(draws.shape[1])]
    return marginals, MonteCarloCdf(draws)


def _run_simulate(scn: Scenario, jobs: int) -> TaskOutput:
    n, reps = scn.params["n"], scn.params["reps"]
    header = ["rep", "i"] + [f"x{k + 1}" for k in range(scn.process.d)]
    rows, last = [], None
    for rep in range(reps):
        path = simulate_linear(scn.process, n, derive_seed(scn.seed, "path", rep))
        last = path
        for i in range(n):
            rows.append([rep + 1, i + 1, *path.data[i]])
    stacked = np.asarray([r[2:] for r in rows])
    results = {
        "n": n,
        "reps": reps,
        "d": scn.process.d,
        "fingerprint": scn.process.fingerprint(),
        "mean": stacked.mean(axis=0).tolist(),
        "sd": stacked.std(axis=0, ddof=1).tolist(),
    }
    return TaskOutput(
        results=results,
        checks=[],
        tables={"paths": (header, rows)},
        figures={"path": lambda p, data=last.data: figures.path_figure(data, p)},
    )


def _run_delta(scn: Scenario, jobs: int) -> TaskOutput:
    p = scn.params
    lags = [int(v) for v in p["lags"]]
    s, reps = float(p["s"]), int(p["reps"])

    # per-lag seeds are derived from (seed, lag, rep), so executor
    # scheduling cannot change the numbers
    def one(lag):
        return delta_estimate(scn.process, lag, s, reps, scn.seed)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            pairs = list(pool.map(one, lags))
    else:
        pairs = [one(lag) for lag in lags]
    ests = [v[0] for v in pairs]
    ses = [v[1] for v in pairs]
    bounds = None
    if p["analytic"]:
        diff = scn.process.innovation.diff_norm(s)
        bounds = [
            float(scn.process.coefficients.tail_sum(lag) * diff) for lag in lags
        ]
    profile = DependenceProfile(
        s=s,
        lags=tuple(lags),
        delta_hat=tuple(ests),
        delta_se=tuple(ses),
        analytic_bound=tuple(bounds) if bounds is not None else None,
    )
    checks = []
    if bounds is not None:
        for lag, est, se, bd in zip(lags, ests, ses, bounds):
            ok = est <= bd + 3.0 * se + 1e-12
            checks.append(
                _check(
                    f"delta-bound-lag-{lag}",
                    ok,
                    f"delta-hat {est:.6g} vs bound {bd:.6g} (se {se:.3g})",
                )
            )
    header = ["lag", "delta_hat", "se", "bound"]
    rows = [
        [lag, est, se, bounds[i] if bounds is not None else math.nan]
        for i, (lag, est, se) in enumerate(zip(lags, ests, ses))
    ]
    results = {
        "s": s,
        "reps": reps,
        "lags": lags,
        "delta_hat": ests,
        "se": ses,
        "bound": bounds,
    }
    return TaskOutput(
        results=results,
        checks=checks,
        tables={"profile": (header, rows)},
        figures={
            "profile": lambda p2: figures.delta_figure(
                profile.lags, profile.delta_hat, profile.delta_se, profile.analytic_bound, p2
            )
        },
    )


def _gap_tuples(raw) -> list:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("params.gaps must be a nonempty list")
    if all(isinstance(v, int) for v in raw):
        return [(int(v),) for v in raw]
    out = []
    for entry in raw:
        if not isinstance(entry, list) or not all(isinstance(v, int) for v in entry):
            raise ConfigError("params.gaps must be a list of integers or of integer lists")
        out.append(tuple(int(v) for v in entry))
    return out


def _run_mixing(scn: Scenario, jobs: int) -> TaskOutput:
    p = scn.params
    f = _default_bump(p, scn.process.d, float(p["alpha"]))
    tuples = _gap_tuples(p["gaps"])
    reports = mixing_scan(
        scn.process,
        f,
        tuples,
        int(p["q"]),
        float(p["r"]),
        int(p["reps"]),
        scn.seed,
        alpha=float(p["alpha"]),
        ref_count=int(p["ref_count"]),
    )
    header = [
        "gaps", "q", "covariance", "se", "ci_lo", "ci_hi",
        "bound", "fitted_kp", "theta", "delta",
    ]
    rows = [
        [
            "+".join(str(g) for g in r.gaps), r.q, r.covariance, r.se,
            r.ci[0], r.ci[1], r.bound, r.fitted_kp, r.theta, r.delta,
        ]
        for r in reports
    ]
    fitted = [r.fitted_kp for r in reports]
    results = {
        "gaps": [list(r.gaps) for r in reports],
        "covariance": [r.covariance for r in reports],
        "se": [r.se for r in reports],
        "bound": [r.bound for r in reports],
        "fitted_kp": fitted,
        "max_fitted": max(fitted),
        "r_norm": reports[0].r_norm,
        "g_norm": reports[0].g_norm,
    }
    return TaskOutput(
        results=results,
        checks=[],
        tables={"mixing": (header, rows)},
        figures={"mixing": lambda path: figures.mixing_figure(reports, path)},
    )


def _run_moment(scn: Scenario, jobs: int) -> TaskOutput:
    p = scn.params
    f = _default_bump(p, scn.process.d, float(p["alpha"]))
    kappas = p["kappas"]
    family = RateFamily(p["family"], exponents=tuple(kappas) if kappas else None)
    report = moment_bound_check(
        scn.process,
        f,
        [int(v) for v in p["n_list"]],
        int(p["p"]),
        float(p["r"]),
        family,
        int(p["reps"]),
        scn.seed,
        alpha=float(p["alpha"]),
        ref_count=int(p["ref_count"]),
    )
    checks, exact, oracle_results = [], {}, None
    if p["oracle"]:
        oracle = exact_moment_oracle(scn.process, f, int(p["oracle_n"]), int(p["p"]))
        exact[oracle.n] = oracle.moment
        oracle_results = {
            "n": oracle.n,
            "moment": oracle.moment,
            "bound": oracle.bound,
            "holds": oracle.holds,
            "states": oracle.states,
            "i_table": list(oracle.i_table),
        }
        checks.append(
            _check(
                "oracle-inequality",
                oracle.holds,
                f"enumerated moment {oracle.moment:.6g} vs bound {oracle.bound:.6g}",
            )
        )
    header = ["n", "moment", "se", "bound", "ratio"]
    rows = [
        [n, m, se, b, ratio]
        for n, m, se, b, ratio in zip(
            report.n_list, report.moments, report.moment_ses, report.bounds, report.ratios
        )
    ]
    results = {
        "p": report.p,
        "r": report.r,
        "family": report.family_kind,
        "n_list": list(report.n_list),
        "moments": list(report.moments),
        "ses": list(report.moment_ses),
        "bounds": list(report.bounds),
        "fitted_c": report.fitted_c,
        "r_norm": report.r_norm,
        "g_norm": report.g_norm,
        "oracle": oracle_results,
    }
    return TaskOutput(
        results=results,
        checks=checks,
        tables={"moments": (header, rows)},
        figures={"moments": lambda path: figures.moment_figure(report, exact, path)},
    )


def _run_clt(scn: Scenario, jobs: int) -> TaskOutput:
    p = scn.params
    check = findim_gaussian_check(
        scn.process,
        int(p["m"]),
        int(p["n"]),
        int(p["reps"]),
        int(p["projections"]),
        scn.seed,
        alpha=float(p["alpha"]),
        L=p["L"],
        threshold=p["threshold"],
        var_tol=float(p["var_tol"]),
        calibration_count=int(p["calibration_count"]),
        mc_calibration=int(p["mc_calibration"]),
    )
    header = [
        "projection", "sigma2_hat", "sigma2_se", "lag_cutoff", "floored",
        "sample_var", "ks_stat", "passed", "mismatch",
    ]
    rows = [
        [
            i, r.sigma2_hat, r.sigma2_se, r.lag_cutoff, int(r.floored),
            r.sample_var, r.ks_stat, int(r.passed), int(r.mismatch),
        ]
        for i, r in enumerate(check.reports)
    ]
    target = float(p["pass_target"])
    results = {
        "m": check.m,
        "n": check.n,
        "reps": check.reps,
        "cells": len(check.cells),
        "projections": len(check.reports),
        "threshold": check.threshold,
        "pass_fraction": check.pass_fraction,
        "pass_target": target,
    }
    checks = [
        _check(
            "pass-fraction",
            check.pass_fraction >= target,
            f"{check.pass_fraction:.3f} of projections passed (target {target})",
        )
    ]
    return TaskOutput(
        results=results,
        checks=checks,
        tables={"projections": (header, rows)},
        figures={"projections": lambda path: figures.projections_figure(check, path)},
    )


def _trend_check(report) -> dict:
    freq, ses = list(report.frequencies), list(report.ses)
    inversions = [
        i for i in range(len(freq) - 1) if freq[i + 1] > freq[i] + 1e-15
    ]
    ok = not inversions
    if len(inversions) == 1:
        i = inversions[0]
        slack = 2.0 * math.hypot(ses[i], ses[i + 1])
        ok = freq[i + 1] - freq[i] <= slack
    detail = f"frequencies {['%.3f' % v for v in freq]}, inversions at {inversions}"
    return _check("exceedance-trend", ok, detail)


def _run_empclt(scn: Scenario, jobs: int) -> TaskOutput:
    p = scn.params
    d = scn.process.d
    marginals, cdf_model = _calibration(
        scn.process, int(p["calibration_count"]), scn.seed
    )
    g = int(p["grid"])
    _require(g >= 1, "params.grid must be >= 1")
    levels = np.array([(j + 1) / (g + 1) for j in range(g)])
    axes = [np.asarray(marg.inverse(levels), dtype=float) for marg in marginals]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    kernel = limit_covariance_estimate(
        scn.process, pts, int(p["n"]), int(p["reps"]), scn.seed, cdf=cdf_model
    )

    m_param = p["m"]
    m_list = [int(v) for v in m_param] if isinstance(m_param, list) else None
    m_sup = max(m_list) if m_list else int(m_param)
    part = build_partition(marginals, m_sup)
    sup_grid = boundary_augmented_grid(
        part, int(p["n_random"]), derive_seed(scn.seed, "sup-grid")
    )
    sups = sup_statistic_samples(
        scn.process, sup_grid, int(p["n"]), int(p["reps"]), scn.seed, cdf=cdf_model
    )
    quantiles = [float(v) for v in p["quantiles"]]
    qvals = np.quantile(sups, quantiles)

    tables = {
        "kernel_points": (
            ["index"] + [f"x{k + 1}" for k in range(d)],
            [[i, *pt] for i, pt in enumerate(kernel.points)],
        ),
        "kernel": (
            ["index"] + [str(i) for i in range(len(kernel.points))],
            [[i, *row] for i, row in enumerate(kernel.matrix)],
        ),
        "sup": (
            ["quantile", "value"],
            [[q, v] for q, v in zip(quantiles, qvals)],
        ),
    }
    figs = {
        "kernel": lambda path: figures.kernel_figure(kernel, path),
        "sup": lambda path: figures.sup_figure(sups, path),
    }
    results = {
        "n": int(p["n"]),
        "reps": int(p["reps"]),
        "grid_points": len(kernel.points),
        "kernel_diag": kernel.matrix.diagonal().tolist(),
        "kernel_diag_se": kernel.diag_se.tolist(),
        "sup_mean": float(sups.mean()),
        "sup_quantiles": dict(zip(map(str, quantiles), qvals.tolist())),
    }
    checks = []
    if m_list:
        report = approximation_quality(
            scn.process,
            m_list,
            int(p["n"]),
            int(p["reps"]),
            float(p["epsilon"]),
            scn.seed,
            marginals=marginals,
            cdf_model=cdf_model,
            n_random=int(p["n_random"]),
        )
        tables["approx"] = (
            ["m", "frequency", "se", "grid_size"],
            [
                [m, fq, se, gs]
                for m, fq, se, gs in zip(
                    report.m_list, report.frequencies, report.ses, report.grid_sizes
                )
            ],
        )
        figs["approx"] = lambda path: figures.approx_figure(report, path)
        results["approx"] = {
            "m_list": list(report.m_list),
            "frequencies": list(report.frequencies),
            "ses": list(report.ses),
            "epsilon": report.epsilon,
        }
        checks.append(_trend_check(report))
    return TaskOutput(results=results, checks=checks, tables=tables, figures=figs)


def _run_chain(scn: Scenario, jobs: int) -> TaskOutput:
    p = scn.params
    d = scn.process.d
    n, m = int(p["n"]), int(p["m"])
    marginals, _ = _calibration(scn.process, int(p["calibration_count"]), scn.seed)
    part = build_partition(marginals, m)
    K = int(p["K"]) if p["K"] is not None else choose_K(n, 1.0 / m, d, float(p["epsilon"]))
    chain = build_chain_grid(part, K)
    if p["t"] is not None:
        t = np.asarray([float(v) for v in p["t"]], dtype=float)
        _require(t.shape == (d,), f"params.t must list {d} coordinates")
    else:
        t = np.asarray([marg.inverse(0.37) for marg in marginals], dtype=float)
    path = simulate_linear(scn.process, n, derive_seed(scn.seed, "chain-path"))
    decomp = telescoping_decomposition(path.data, chain, t)
    total = math.fsum(decomp["terms"]) + decomp["remainder"]
    residual = abs(decomp["lhs"] - total)
    ok = residual <= 1e-10
    header = ["level", "increment"]
    rows = [[k + 1, v] for k, v in enumerate(decomp["terms"])]
    results = {
        "n": n,
        "m": m,
        "K": K,
        "t": t.tolist(),
        "cell": decomp["cell"],
        "lhs": decomp["lhs"],
        "remainder": decomp["remainder"],
        "residual": residual,
    }
    checks = [
        _check(
            "telescoping-identity",
            ok,
            f"|lhs - (terms + remainder)| = {residual:.3e}",
        )
    ]
    return TaskOutput(
        results=results,
        checks=checks,
        tables={"terms": (header, rows)},
        figures={
            "terms": lambda path2: figures.chain_figure(
                decomp["terms"], decomp["remainder"], path2
            )
        },
    )


def _run_conditions(scn: Scenario, jobs: int) -> TaskOutput:
    p = scn.params
    d = int(p["d"]) if p["d"] is not None else scn.process.d
    theta, alpha, r = float(p["theta"]), float(p["alpha"]), float(p["r"])
    p_max = int(p["p_max"])
    kappas = tuple(p["kappas"]) if p["kappas"] else None
    gamma = condition_gamma_check(theta, alpha, r, d, p_max, kappas)
    try:
        decay = linear_decay_threshold(r, theta, d, p_max)
    except EmpcltError:
        decay = None
    gmap = dict(gamma["scan"])
    dmap = dict(decay["scan"]) if decay else {}
    header = ["p", "gamma_threshold", "decay_exponent"]
    rows = [
        [cand, gmap.get(cand, math.nan), dmap.get(cand, math.nan)]
        for cand in sorted(set(gmap) | set(dmap))
    ]
    results = {
        "theta": theta,
        "alpha": alpha,
        "r": r,
        "d": d,
        "feasible": gamma["feasible"],
        "best_p": gamma["best_p"],
        "threshold": gamma["threshold"] if math.isfinite(gamma["threshold"]) else None,
        "ratio": gamma["ratio"],
        "gamma": gamma["gamma"],
        "gamma_i": list(gamma["gamma_i"]) if gamma["gamma_i"] is not None else None,
        "b_star": decay["b_star"] if decay else None,
        "argmin_p": decay["argmin_p"] if decay else None,
    }
    return TaskOutput(
        results=results,
        checks=[],
        tables={"scan": (header, rows)},
        figures={
            "scan": lambda path: figures.conditions_figure(
                list(gamma["scan"]),
                list(decay["scan"]) if decay else [],
                gamma["ratio"],
                path,
            )
        },
    )


_RUNNERS = {
    "simulate": _run_simulate,
    "delta": _run_delta,
    "mixing": _run_mixing,
    "moment": _run_moment,
    "clt": _run_clt,
    "empclt": _run_empclt,
    "chain": _run_chain,
    "conditions": _run_conditions,
}


# ------------------------- output writing -------------------------


def _cell_text(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_table(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell_text(v) for v in row])


def _json_ready(obj):
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.ndarray):
        return _json_ready(obj.tolist())
    return obj


def run_scenario(scn: Scenario, jobs: int = 1) -> int:
    """Execute one scenario, write all outputs, return the exit code."""
    out_dir = Path(scn.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    output = _RUNNERS[scn.task](scn, jobs)

    tables, figs = [], []
    for stem in sorted(output.tables):
        header, rows = output.tables[stem]
        fname = f"{scn.name}_{stem}.csv"
        _write_table(out_dir / fname, header, rows)
        tables.append(fname)
    for stem in sorted(output.figures):
        fname = f"{scn.name}_{stem}.png"
        output.figures[stem](out_dir / fname)
        figs.append(fname)

    summary = {
        "name": scn.name,
        "task": scn.task,
        "version": __version__,
        "seed_scheme": SCHEME,
        "config": scn.resolved(),
        "results": _json_ready(output.results),
        "checks": output.checks,
        "files": {"tables": tables, "figures": figs},
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    text = json.dumps(_json_ready(summary), sort_keys=True, indent=2) + "\n"
    with open(out_dir / f"{scn.name}_summary.json", "w", encoding="utf-8", newline="") as fh:
        fh.write(text)

    failed = [c["name"] for c in output.checks if not c["passed"]]
    for c in output.checks:
        state = "pass" if c["passed"] else "FAIL"
        print(f"check {c['name']}: {state} ({c['detail']})")
    print(f"wrote {len(tables)} tables, {len(figs)} figures to {out_dir}")
    return 2 if failed else 0


# ------------------------- manifest + entry point -------------------------


def emit_manifest() -> str:
    """Capability manifest: stable across runs, no timestamps."""
    manifest = {
        "name": "empclt",
        "version": __version__,
        "seed_scheme": SCHEME,
        "tasks": {task: _json_ready(TASK_DEFAULTS[task]) for task in TASKS},
        "defaults": {
            "epsilon": 0.25,
            "alpha": 1.0,
            "centering_tol": 1e-3,
            "ks_slack": 1.5,
            "var_tol": 0.15,
            "pass_target": 0.9,
        },
    }
    return json.dumps(manifest, sort_keys=True, indent=2)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="empclt",
        description="empirical-process CLT checks for weakly dependent data",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a scenario config")
    run.add_argument("config", help="path to a TOML scenario file")
    run.add_argument("--seed", type=int, default=None, help="override the master seed")
    run.add_argument("--out", default=None, help="override the output directory")
    run.add_argument("--jobs", type=int, default=1, help="worker threads (default 1)")
    sub.add_parser("manifest", help="print the capability manifest")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "manifest":
        print(emit_manifest())
        return 0
    try:
        scn = load_scenario(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must lie in [0, 2^64)")
            scn = replace(scn, seed=args.seed)
        if args.out is not None:
            scn = replace(scn, out=args.out)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        return run_scenario(scn, jobs=args.jobs)
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except EmpcltError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
