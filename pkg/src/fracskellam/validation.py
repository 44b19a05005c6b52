"""Monte Carlo checks of the analytic formulas and the experiment runner.

Every check is a pure function of its parameters and an
:class:`~fracskellam.subordinators.RngStream`, so a report is reproducible
from ``(seed, config)`` alone.  Checks are registered by kind name and
configured through an INI file::

    [experiment]
    seed = 7

    [check gsp-pmf]
    kind = pmf_agreement
    family = skellam
    lambda = 1
    mu = 1
    t = 1
    n = 100000

A key named ``grid.<param>`` holding ``|``-separated values expands the
check into one report per value (several grid keys give their product).
"""

from __future__ import annotations

import configparser
import itertools
import json
import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Optional

import numpy as np
from scipy import stats

from . import analytics
from .processes import (
    ConfigError,
    ProcessSpec,
    process_path,
    process_sample,
    running_average_path,
    weighted_sum_sample,
)
from .subordinators import RngStream, TimeGrid, composed_sample, tempered_stable_path

__all__ = [
    "EmpiricalPmf",
    "ValidationReport",
    "ExperimentConfig",
    "CheckSpec",
    "CHECKS",
    "empirical_pmf",
    "total_variation",
    "ks_statistic",
    "chi_square",
    "first_passage_mc",
    "martingale_drift_check",
    "limit_distribution_check",
    "parse_config",
    "load_config",
    "run_experiment",
    "run_check",
    "write_reports",
    "format_table",
]

THREADS_ENV = "FRACSKELLAM_THREADS"


# ---------------------------------------------------------------------------
# Empirical laws and distances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmpiricalPmf:
    """Exact tabulation of integer samples."""

    states: np.ndarray
    counts: np.ndarray
    n: int

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.n

    @property
    def standard_errors(self) -> np.ndarray:
        p = self.probabilities
        return np.sqrt(p * (1.0 - p) / self.n)

    def as_dict(self) -> dict[int, float]:
        return {int(s): float(c) / self.n for s, c in zip(self.states, self.counts)}

    def probability(self, state: int) -> float:
        i = np.searchsorted(self.states, state)
        if i < self.states.size and self.states[i] == state:
            return float(self.counts[i]) / self.n
        return 0.0


def empirical_pmf(samples) -> EmpiricalPmf:
    x = np.asarray(samples)
    if x.size < 1:
        raise ValueError("need at least one sample")
    if not np.issubdtype(x.dtype, np.integer):
        if not np.all(x == np.round(x)):
            raise ValueError("samples must be integers")
        x = x.astype(np.int64)
    states, counts = np.unique(x.ravel(), return_counts=True)
    return EmpiricalPmf(states.astype(np.int64), counts.astype(np.int64), int(x.size))


def _as_mapping(p) -> Mapping[Any, float]:
    if isinstance(p, EmpiricalPmf):
        return p.as_dict()
    if isinstance(p, analytics.PmfTable):
        return {int(n): float(v) for n, v in zip(p.n, p.p)}
    return p


def total_variation(p, q) -> float:
    """``(1/2) sum |p - q|`` over the union of states; missing states count as 0."""
    a, b = _as_mapping(p), _as_mapping(q)
    keys = set(a) | set(b)
    return 0.5 * math.fsum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    return float(stats.ks_2samp(np.asarray(a, dtype=float), np.asarray(b, dtype=float)).statistic)


def chi_square(counts, probabilities, min_expected: float = 5.0) -> tuple[float, float]:
    """Pearson statistic and p-value, pooling cells with small expected counts."""
    counts = np.asarray(counts, dtype=float)
    p = np.asarray(probabilities, dtype=float)
    n = counts.sum()
    expected = n * p / p.sum()
    order = np.argsort(expected)
    obs_cells, exp_cells = [], []
    acc_o = acc_e = 0.0
    for i in order:
        acc_o += counts[i]
        acc_e += expected[i]
        if acc_e >= min_expected:
            obs_cells.append(acc_o)
            exp_cells.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 and exp_cells:
        obs_cells[-1] += acc_o
        exp_cells[-1] += acc_e
    o, e = np.array(obs_cells), np.array(exp_cells)
    stat = float(np.sum((o - e) ** 2 / e))
    dof = max(o.size - 1, 1)
    return stat, float(stats.chi2.sf(stat, dof))


def _windowed(table: analytics.PmfTable) -> dict[Any, float]:
    lo, hi = int(table.n[0]), int(table.n[-1])
    law = {int(n): float(v) for n, v in zip(table.n, table.p)}
    law[f"<{lo}"] = table.tail_low
    law[f">{hi}"] = table.tail_high
    return law


def _bin_samples(x: np.ndarray, lo: int, hi: int) -> dict[Any, float]:
    emp = empirical_pmf(x)
    law: dict[Any, float] = {}
    inside = (emp.states >= lo) & (emp.states <= hi)
    for s, c in zip(emp.states[inside], emp.counts[inside]):
        law[int(s)] = c / emp.n
    law[f"<{lo}"] = emp.counts[emp.states < lo].sum() / emp.n
    law[f">{hi}"] = emp.counts[emp.states > hi].sum() / emp.n
    return law


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    check: str
    kind: str
    statistic_name: str
    statistic: float
    threshold: float
    passed: bool
    n: int
    seed: Optional[int]
    stream_id: Optional[int] = None
    details: Mapping[str, Any] = field(default_factory=dict)
    runtime: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        """Serializable form; runtime is kept out so reports stay byte-stable."""
        return {
            "check": self.check,
            "kind": self.kind,
            "statistic_name": self.statistic_name,
            "statistic": _clean(self.statistic),
            "threshold": _clean(self.threshold),
            "passed": bool(self.passed),
            "n": int(self.n),
            "seed": self.seed,
            "stream_id": self.stream_id,
            "details": _clean(dict(self.details)),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, allow_nan=True)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ValidationReport":
        return cls(
            d["check"],
            d["kind"],
            d["statistic_name"],
            d["statistic"],
            d["threshold"],
            d["passed"],
            d["n"],
            d["seed"],
            d.get("stream_id"),
            d.get("details", {}),
        )


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


@dataclass(frozen=True)
class _Outcome:
    statistic_name: str
    statistic: float
    threshold: float
    passed: bool
    n: int
    details: dict


def _seed_of(rng) -> tuple[Optional[int], Optional[int]]:
    if isinstance(rng, RngStream):
        return rng.seed, rng.stream_id
    if isinstance(rng, int):
        return rng, None
    return None, None


# ---------------------------------------------------------------------------
# Monte Carlo building blocks
# ---------------------------------------------------------------------------


def _endpoints(spec: ProcessSpec, t: float, n: int, rng: RngStream, sampler: str, h: float, chunk: int = 20000):
    if sampler == "endpoint":
        return np.asarray(process_sample(spec, t, rng, n))
    if sampler != "path":
        raise ConfigError("sampler must be 'endpoint' or 'path'")
    grid = TimeGrid.uniform(t, h)
    out = []
    for i, lo in enumerate(range(0, n, chunk)):
        m = min(chunk, n - lo)
        out.append(process_path(spec, grid, rng.child(i), n_paths=m).values[:, -1])
    return np.concatenate(out)


def first_passage_mc(
    spec: ProcessSpec, t: float, level: int, n: int, rng: RngStream, h: float = 0.01, chunk: int = 20000
) -> tuple[float, float]:
    """Estimate of ``P(T_level > t)`` from grid paths, with its standard error.

    The path passes the level once its grid maximum reaches it; a finer
    grid can only lower the estimate.
    """
    grid = TimeGrid.uniform(t, h)
    never = 0
    for i, lo in enumerate(range(0, n, chunk)):
        m = min(chunk, n - lo)
        v = process_path(spec, grid, rng.child(i), n_paths=m).values
        never += int(np.count_nonzero(v.max(axis=1) < level))
    p = never / n
    return p, math.sqrt(max(p * (1 - p), 1.0 / n) / n)


def martingale_drift_check(
    spec: ProcessSpec, grid: TimeGrid, n: int, rng: RngStream, times: Optional[Iterable[float]] = None
) -> ValidationReport:
    """z-scores of ``E[X(t) - m D(t)]`` with ``m = sum_j j (lambda_j - mu_j)``.

    ``D`` is the tempered stable clock that drives the very same path.  The
    process and its compensator vanish at ``t = 0``, so that grid point is
    reported with ``z = 0``.
    """
    if spec.theta <= 0 or spec.alpha != 1.0:
        raise ConfigError("the drift check needs a tempered space-fractional spec (theta > 0, alpha = 1)")
    started = time.perf_counter()
    path = process_path(spec, grid, rng, n_paths=n)
    clock = path.clock if spec.clock == "shared" or not spec.is_skellam else None
    if clock is None:
        raise ConfigError("the drift check couples one clock to the path; use clock=shared")
    comp = path.values - spec.drift * clock
    idx = range(len(grid)) if times is None else [int(round(s / grid.h)) for s in times]
    zs = {}
    for i in idx:
        c = comp[:, i]
        sd = float(c.std(ddof=1)) if n > 1 else 0.0
        zs[f"{grid.t_points[i]:g}"] = 0.0 if sd == 0.0 else float(c.mean() / (sd / math.sqrt(n)))
    worst = max(abs(z) for z in zs.values())
    seed, sid = _seed_of(rng)
    return ValidationReport(
        "martingale_drift",
        "martingale_drift",
        "max|z|",
        worst,
        3.0,
        worst < 3.0,
        n,
        seed,
        sid,
        {"z": zs},
        time.perf_counter() - started,
    )


def _limit_samples(spec: ProcessSpec, n: int, gen) -> np.ndarray:
    return composed_sample(spec.alpha, spec.beta, 1.0, gen, n) * spec.drift


def limit_distribution_check(
    spec: ProcessSpec, t_large: float, n: int, rng: RngStream, threshold: float = 0.05
) -> ValidationReport:
    """KS distance between ``S(t)/t^(alpha/beta)`` and ``Y_alpha(1)^(1/beta) D_beta(1) m``."""
    if not spec.is_skellam:
        raise ConfigError("the limit check needs a Skellam spec")
    if spec.drift == 0:
        raise ConfigError("the limit law is degenerate at 0 when the drift vanishes")
    if t_large < 100:
        raise ConfigError("t_large must be at least 100")
    started = time.perf_counter()
    scaled = np.asarray(process_sample(spec, t_large, rng.child(0), n), dtype=float) / t_large ** (
        spec.alpha / spec.beta
    )
    limit = _limit_samples(spec, n, rng.child(1).generator())
    ks = ks_statistic(scaled, limit)
    seed, sid = _seed_of(rng)
    return ValidationReport(
        "limit_law",
        "limit_law",
        "KS",
        ks,
        threshold,
        ks < threshold,
        n,
        seed,
        sid,
        {"t": t_large, "median_scaled": float(np.median(scaled)), "median_limit": float(np.median(limit))},
        time.perf_counter() - started,
    )


# ---------------------------------------------------------------------------
# Check kinds
# ---------------------------------------------------------------------------

SPEC_DEFAULTS: dict[str, Any] = {
    "family": "skellam",
    "alpha": 1.0,
    "beta": 1.0,
    "theta": 0.0,
    "lambda": (1.0,),
    "mu": (1.0,),
    "clock": "shared",
}


def spec_from_params(p: Mapping[str, Any]) -> ProcessSpec:
    family = p.get("family", "skellam")
    down = tuple(p.get("mu", (1.0,))) if family == "skellam" else None
    return ProcessSpec(
        family,
        p.get("alpha", 1.0),
        p.get("beta", 1.0),
        p.get("theta", 0.0),
        tuple(p.get("lambda", (1.0,))),
        down,
        p.get("clock", "shared"),
    )


def _z(mean: float, target: float, se: float) -> float:
    if se == 0:
        return 0.0 if mean == target else math.inf
    return (mean - target) / se


def _analytic_window(spec: ProcessSpec, t: float, window: int, method: str) -> analytics.PmfTable:
    if spec.is_skellam:
        return analytics.gstfsp_pmf_table(spec, t, -window, window, method)
    return analytics.gstfcp_pmf_table(spec, t, window)


def check_pmf_agreement(p, rng: RngStream) -> _Outcome:
    """TV distance between the empirical law and the analytic p.m.f. (plus tail masses)."""
    spec = spec_from_params(p)
    t, n = p["t"], p["n"]
    window = p["window"] or analytics.support_window(spec, t)
    scale = p["null_scale"]
    ref = spec
    if scale != 1.0:
        ref = spec.replace(up_rates=tuple(r * scale for r in spec.up_rates.rates))
    table = _analytic_window(ref, t, window, p["method"])
    law = _windowed(table)
    x = _endpoints(spec, t, n, rng, p["sampler"], p["h"])
    lo = int(table.n[0])
    emp = _bin_samples(x, lo, window)
    tv = total_variation(emp, law)
    expect_agree = p["expect"] == "agree"
    passed = tv < p["threshold"] if expect_agree else tv >= p["threshold"]
    return _Outcome(
        "TV",
        tv,
        p["threshold"],
        passed,
        n,
        {
            "window": window,
            "analytic_mass": table.total,
            "analytic_bound": table.total_bound,
            "converged": table.converged,
            "expect": p["expect"],
            "null_scale": scale,
        },
    )


def check_pgf_agreement(p, rng: RngStream) -> _Outcome:
    """Analytic p.g.f. against the p.m.f. series and against ``mean(u^X)``."""
    spec = spec_from_params(p)
    t, n = p["t"], p["n"]
    window = p["window"] or analytics.support_window(spec, t)
    table = _analytic_window(spec, t, window, "exact")
    x = _endpoints(spec, t, n, rng, p["sampler"], p["h"]).astype(float)
    zs, diffs = {}, {}
    for u in p["u"]:
        g = analytics.gstfsp_pgf(spec, t, u)
        series = math.fsum(table.p * u ** table.n.astype(float))
        diffs[f"{u:g}"] = abs(series - g)
        w = u**x
        zs[f"{u:g}"] = _z(float(w.mean()), g, float(w.std(ddof=1)) / math.sqrt(n))
    worst = max(abs(z) for z in zs.values())
    worst_diff = max(diffs.values())
    passed = worst < p["threshold"] and worst_diff <= p["series_tol"]
    return _Outcome("max|z|", worst, p["threshold"], passed, n, {"z": zs, "series_diff": diffs})


def _pgf_derivatives(spec: ProcessSpec, t: float, delta: float) -> tuple[float, float]:
    g = [analytics.gstfsp_pgf(spec, t, 1.0 - i * delta) for i in range(4)]
    first = (3 * g[0] - 4 * g[1] + g[2]) / (2 * delta)
    second = (2 * g[0] - 5 * g[1] + 4 * g[2] - g[3]) / delta**2
    return first, second


def check_moment_agreement(p, rng: RngStream) -> _Outcome:
    """Mean and variance (``beta = 1``) against MC and p.g.f. derivatives at ``u = 1``."""
    spec = spec_from_params(p)
    t, n = p["t"], p["n"]
    m = analytics.moments(spec, t, t)
    x = _endpoints(spec, t, n, rng, p["sampler"], p["h"]).astype(float)
    mean = float(x.mean())
    var = float(x.var(ddof=1))
    c = x - mean
    se_var = math.sqrt(max(float((c**4).mean()) - var**2, 0.0) / n)
    z_mean = _z(mean, m.mean, math.sqrt(var / n))
    z_var = _z(var, m.variance, se_var)
    details: dict[str, Any] = {
        "mean": m.mean,
        "variance": m.variance,
        "mc_mean": mean,
        "mc_variance": var,
        "z_mean": z_mean,
        "z_variance": z_var,
    }
    fd_ok = True
    if spec.beta == 1.0:
        d1, d2 = _pgf_derivatives(spec, t, p["fd_step"])
        var_fd = d2 + d1 - d1**2
        rel_mean = abs(d1 - m.mean) / max(abs(m.mean), 1e-300)
        rel_var = abs(var_fd - m.variance) / max(abs(m.variance), 1e-300)
        details.update({"fd_mean_rel": rel_mean, "fd_variance_rel": rel_var})
        fd_ok = max(rel_mean, rel_var) <= p["fd_tol"]
    worst = max(abs(z_mean), abs(z_var))
    return _Outcome("max|z|", worst, p["threshold"], worst < p["threshold"] and fd_ok, n, details)


def check_fractional_moment(p, rng: RngStream) -> _Outcome:
    spec = spec_from_params(p)
    t, n, q = p["t"], p["n"], p["q"]
    value = analytics.fractional_moment(spec, t, q)
    x = _endpoints(spec, t, n, rng, p["sampler"], p["h"]).astype(float) ** q
    z = _z(float(x.mean()), value, float(x.std(ddof=1)) / math.sqrt(n))
    return _Outcome("|z|", abs(z), p["threshold"], abs(z) < p["threshold"], n, {"analytic": value, "mc": float(x.mean())})


def check_recurrence(p, rng: RngStream) -> _Outcome:
    spec = spec_from_params(p)
    res = {str(k): analytics.recurrence_residual(spec, p["t"], k) for k in range(1, p["n_max"] + 1)}
    worst = max(res.values())
    return _Outcome("max residual", worst, p["threshold"], worst < p["threshold"], 0, {"residual": res})


def check_first_passage_gap(p, rng: RngStream) -> _Outcome:
    """MC first-passage survival against the as-stated and full-support sums."""
    spec = spec_from_params(p)
    t, n, level = p["t"], p["n"], p["level"]
    mc, se = first_passage_mc(spec, t, level, n, rng, p["h"])
    as_stated = analytics.first_passage_survival(spec, t, level, "as_stated")
    full = analytics.first_passage_survival(spec, t, level, "full_support")
    z = _z(mc, full, se)
    return _Outcome(
        "z(mc - full_support)",
        z,
        p["threshold"],
        z < p["threshold"],
        n,
        {"mc": mc, "se": se, "as_stated": as_stated, "full_support": full, "gap_as_stated": mc - as_stated},
    )


def check_increment_invariance(p, rng: RngStream) -> _Outcome:
    rates = tuple(p["lambda"])
    worst = 0.0
    for k in range(p["n_max"] + 1):
        ref = analytics.increment_pmf_gsfcp(rates, p["beta"], p["t"], 0.0, k)
        for v in p["v"]:
            other = analytics.increment_pmf_gsfcp(rates, p["beta"], p["t"], v, k)
            slack = ref.truncation_bound + other.truncation_bound
            diff = abs(ref.probability - other.probability)
            worst = max(worst, diff / slack if slack > 0 else (0.0 if diff == 0 else math.inf))
    return _Outcome("max diff/bound", worst, 1.0, worst <= 1.0, 0, {"v": list(p["v"])})


def check_tail_ratio(p, rng: RngStream) -> _Outcome:
    """Empirical tail over the asymptote at an upper empirical quantile."""
    spec = spec_from_params(p)
    t, n = p["t"], p["n"]
    x = np.asarray(process_sample(spec, t, rng, n))
    level = float(np.quantile(x, p["quantile"]))
    tail = float(np.count_nonzero(x > level)) / n
    est = analytics.tail_asymptote(spec, level, t)
    ratio = tail / est.asymptote
    dev = abs(ratio - 1.0)
    return _Outcome("|ratio-1|", dev, p["threshold"], dev <= p["threshold"], n, {"x": level, "ratio": ratio, "empirical": tail, "asymptote": est.asymptote})


def check_tail_bound(p, rng: RngStream) -> _Outcome:
    """Empirical right tail against the large-x upper bound at fixed points."""
    spec = spec_from_params(p)
    t, n = p["t"], p["n"]
    x = np.asarray(process_sample(spec, t, rng, n))
    ratios = {}
    for level in p["x"]:
        tail = float(np.count_nonzero(x > level)) / n
        ratios[f"{level:g}"] = tail / analytics.tail_upper_bound(spec, level, t)
    worst = max(ratios.values())
    return _Outcome("max tail/bound", worst, 1.0, worst < 1.0, n, {"ratio": ratios})


def check_limit_law(p, rng: RngStream) -> _Outcome:
    r = limit_distribution_check(spec_from_params(p), p["t"], p["n"], rng, p["threshold"])
    return _Outcome(r.statistic_name, r.statistic, r.threshold, r.passed, r.n, dict(r.details))


def check_weighted_sum(p, rng: RngStream) -> _Outcome:
    """TV distance between the weighted-sum sampler and simulated path endpoints."""
    spec = spec_from_params(p)
    t, n = p["t"], p["n"]
    a = weighted_sum_sample(spec, t, rng.child(0), n)
    b = _endpoints(spec, t, n, rng.child(1), "path", p["h"])
    tv = total_variation(empirical_pmf(a), empirical_pmf(b))
    return _Outcome("TV", tv, p["threshold"], tv < p["threshold"], n, {"h": p["h"]})


def check_martingale_drift(p, rng: RngStream) -> _Outcome:
    spec = spec_from_params(p)
    times = list(p["times"])
    grid = TimeGrid.uniform(max(times), p["h"])
    r = martingale_drift_check(spec, grid, p["n"], rng, times)
    return _Outcome(r.statistic_name, r.statistic, r.threshold, r.passed, r.n, dict(r.details))


def check_tempered_moments(p, rng: RngStream) -> _Outcome:
    """Mean ``beta theta^(beta-1) t`` and variance ``beta (1-beta) theta^(beta-2) t`` of the tempered clock."""
    b, th, t, n = p["beta"], p["theta"], p["t"], p["n"]
    grid = TimeGrid.uniform(t, t / p["steps"])
    d = tempered_stable_path(b, th, grid, rng, n_paths=n).values[:, -1]
    mean_ref = b * th ** (b - 1) * t
    var_ref = b * (1 - b) * th ** (b - 2) * t
    mean, var = float(d.mean()), float(d.var(ddof=1))
    c = d - mean
    se_var = math.sqrt(max(float((c**4).mean()) - var**2, 0.0) / n)
    z_mean = _z(mean, mean_ref, math.sqrt(var / n))
    z_var = _z(var, var_ref, se_var)
    worst = max(abs(z_mean), abs(z_var))
    return _Outcome(
        "max|z|",
        worst,
        p["threshold"],
        worst < p["threshold"],
        n,
        {"mean": mean_ref, "variance": var_ref, "mc_mean": mean, "mc_variance": var, "z_mean": z_mean, "z_variance": z_var},
    )


def check_running_average(p, rng: RngStream) -> _Outcome:
    """Analytic characteristic function of the running average against path averages."""
    spec = spec_from_params(p)
    t, n = p["t"], p["n"]
    grid = TimeGrid.uniform(t, p["h"])
    chunk = 20000
    avgs = []
    for i, lo in enumerate(range(0, n, chunk)):
        m = min(chunk, n - lo)
        avgs.append(running_average_path(process_path(spec, grid, rng.child(i), n_paths=m)).values[:, -1])
    a = np.concatenate(avgs)
    zs = {}
    for u in p["u"]:
        phi = analytics.running_avg_charfn(spec, t, u)
        e = np.exp(1j * u * a)
        z_re = _z(float(e.real.mean()), phi.real, float(e.real.std(ddof=1)) / math.sqrt(n))
        z_im = _z(float(e.imag.mean()), phi.imag, float(e.imag.std(ddof=1)) / math.sqrt(n))
        zs[f"{u:g}"] = {"re": z_re, "im": z_im, "phi": [phi.real, phi.imag]}
    worst = max(max(abs(v["re"]), abs(v["im"])) for v in zs.values())
    return _Outcome("max|z|", worst, p["threshold"], worst < p["threshold"], n, {"z": zs})


def check_pmf_methods(p, rng: RngStream) -> _Outcome:
    """Totals series against its Gamma-ratio rewrite, relative to their bounds."""
    spec = spec_from_params(p)
    w = p["window"]
    a = analytics.gstfsp_pmf_table(spec, p["t"], -w, w, "totals", tails=False)
    b = analytics.gstfsp_pmf_table(spec, p["t"], -w, w, "gamma_ratio", tails=False)
    ratio = float(np.max(np.abs(a.p - b.p) / (a.bound + b.bound)))
    return _Outcome("max diff/bound", ratio, 1.0, ratio <= 1.0, 0, {"max_diff": float(np.max(np.abs(a.p - b.p)))})


@dataclass(frozen=True)
class CheckSpec:
    kind: str
    func: Callable[[dict, RngStream], _Outcome]
    defaults: Mapping[str, Any]
    uses_spec: bool = True


_MC = {"t": 1.0, "n": 100000, "sampler": "endpoint", "h": 0.01}

CHECKS: dict[str, CheckSpec] = {
    c.kind: c
    for c in (
        CheckSpec(
            "pmf_agreement",
            check_pmf_agreement,
            {**_MC, "method": "exact", "window": 0, "threshold": 0.02, "null_scale": 1.0, "expect": "agree"},
        ),
        CheckSpec("pgf_agreement", check_pgf_agreement, {**_MC, "u": (0.5, 0.8), "window": 0, "threshold": 3.0, "series_tol": 1e-8}),
        CheckSpec("moment_agreement", check_moment_agreement, {**_MC, "threshold": 3.0, "fd_step": 1e-4, "fd_tol": 1e-4}),
        CheckSpec("fractional_moment", check_fractional_moment, {**_MC, "q": 0.5, "threshold": 3.0}),
        CheckSpec("recurrence", check_recurrence, {"t": 1.0, "n_max": 10, "threshold": 1e-8}),
        CheckSpec("first_passage_gap", check_first_passage_gap, {**_MC, "level": 1, "threshold": 3.0}),
        CheckSpec(
            "increment_invariance",
            check_increment_invariance,
            {"lambda": (1.0,), "beta": 0.7, "t": 1.0, "v": (1.0, 2.0), "n_max": 10},
            uses_spec=False,
        ),
        CheckSpec("tail_ratio", check_tail_ratio, {"t": 1.0, "n": 1000000, "quantile": 0.995, "threshold": 0.3}),
        CheckSpec("tail_bound", check_tail_bound, {"t": 1.0, "n": 100000, "x": (50.0, 100.0, 200.0)}),
        CheckSpec("limit_law", check_limit_law, {"t": 200.0, "n": 10000, "threshold": 0.05}),
        CheckSpec("weighted_sum", check_weighted_sum, {**_MC, "threshold": 0.02}),
        CheckSpec("martingale_drift", check_martingale_drift, {"n": 100000, "times": (0.5, 1.0), "h": 0.05}),
        CheckSpec(
            "tempered_moments",
            check_tempered_moments,
            {"beta": 0.5, "theta": 1.0, "t": 2.0, "n": 100000, "steps": 1, "threshold": 3.0},
            uses_spec=False,
        ),
        CheckSpec("running_average", check_running_average, {**_MC, "u": (0.5, 1.0), "threshold": 3.0}),
        CheckSpec("pmf_methods", check_pmf_methods, {"t": 1.0, "window": 15}),
    )
}


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckEntry:
    label: str
    kind: str
    params: Mapping[str, Any]
    line: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    checks: tuple[CheckEntry, ...] = ()
    name: str = "experiment"
    output: Optional[str] = None
    workers: Optional[int] = None


def _parse_value(raw: str, default: Any, key: str, line: int):
    text = raw.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError(text)
            return low in ("true", "yes", "1")
        if isinstance(default, int):
            return int(float(text)) if float(text).is_integer() else int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            return tuple(float(v) for v in text.split(",") if v.strip())
        return text
    except ValueError:
        raise ConfigError(f"line {line}: bad value {text!r} for {key}") from None


def _line_index(text: str) -> dict[tuple[str, str], int]:
    """Line numbers of every ``[section]`` header and ``key = value`` entry."""
    where: dict[tuple[str, str], int] = {}
    section = ""
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"^\[(.+)\]$", s)
        if m:
            section = m.group(1).strip()
            where[(section, "")] = no
            continue
        m = re.match(r"^([^=:]+)[=:]", s)
        if m:
            where[(section, m.group(1).strip().lower())] = no
    return where


def parse_config(text: str) -> ExperimentConfig:
    """Parse the INI-style experiment description; errors name the offending line."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"line {line}: {exc.message if hasattr(exc, 'message') else exc}") from None
    where = _line_index(text)
    if not parser.has_section("experiment"):
        raise ConfigError("line 1: missing [experiment] section")
    exp = parser["experiment"]
    allowed_exp = {"seed", "name", "output", "workers"}
    for key in exp:
        if key not in allowed_exp:
            raise ConfigError(f"line {where.get(('experiment', key), 0)}: unknown experiment key {key!r}")
    if "seed" not in exp:
        raise ConfigError(f"line {where.get(('experiment', ''), 1)}: experiment needs a seed")
    seed = _parse_value(exp["seed"], 0, "seed", where.get(("experiment", "seed"), 0))
    workers = exp.get("workers")
    workers_v = None if workers in (None, "", "auto") else _parse_value(workers, 0, "workers", where.get(("experiment", "workers"), 0))
    entries = []
    for section in parser.sections():
        if section == "experiment":
            continue
        line = where.get((section, ""), 0)
        m = re.match(r"^check\s+(\S+)$", section)
        if not m:
            raise ConfigError(f"line {line}: unknown section [{section}]")
        label = m.group(1)
        sec = parser[section]
        if "kind" not in sec:
            raise ConfigError(f"line {line}: check {label!r} has no kind")
        kind = sec["kind"].strip()
        if kind not in CHECKS:
            raise ConfigError(f"line {where.get((section, 'kind'), line)}: unknown check kind {kind!r}")
        cs = CHECKS[kind]
        defaults = dict(cs.defaults)
        if cs.uses_spec:
            defaults = {**SPEC_DEFAULTS, **defaults}
        params: dict[str, Any] = {}
        grids: dict[str, tuple] = {}
        for key in sec:
            if key == "kind":
                continue
            kline = where.get((section, key), line)
            base = key[5:] if key.startswith("grid.") else key
            if base not in defaults:
                raise ConfigError(f"line {kline}: unknown parameter {key!r} for {kind}")
            if key.startswith("grid."):
                grids[base] = tuple(
                    _parse_value(v, defaults[base], key, kline) for v in sec[key].split("|") if v.strip()
                )
            else:
                params[base] = _parse_value(sec[key], defaults[base], key, kline)
        merged = {**defaults, **params}
        if not grids:
            entries.append(CheckEntry(label, kind, merged, line))
            continue
        names = sorted(grids)
        for combo in itertools.product(*(grids[k] for k in names)):
            point = dict(zip(names, combo))
            tag = ",".join(f"{k}={_fmt(v)}" for k, v in point.items())
            entries.append(CheckEntry(f"{label}[{tag}]", kind, {**merged, **point}, line))
    return ExperimentConfig(seed, tuple(entries), exp.get("name", "experiment"), exp.get("output"), workers_v)


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return "/".join(f"{x:g}" for x in v)
    if isinstance(v, float):
        return f"{v:g}"
    return str(v)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def reference_suite_path() -> Path:
    return Path(__file__).with_name("configs") / "reference-suite.ini"


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


def _run_one(args: tuple[CheckEntry, int, int]) -> ValidationReport:
    entry, seed, stream_id = args
    rng = RngStream(seed, stream_id)
    started = time.perf_counter()
    out = CHECKS[entry.kind].func(dict(entry.params), rng)
    return ValidationReport(
        entry.label,
        entry.kind,
        out.statistic_name,
        float(out.statistic),
        float(out.threshold),
        bool(out.passed),
        int(out.n),
        seed,
        stream_id,
        out.details,
        time.perf_counter() - started,
    )


def _worker_count(config: ExperimentConfig, jobs: int) -> int:
    cap = os.environ.get(THREADS_ENV)
    n = config.workers or os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer") from None
    return max(1, min(n, jobs))


def run_experiment(config: ExperimentConfig, seed: Optional[int] = None) -> list[ValidationReport]:
    """Run every configured check; reports come back in config order.

    Check ``i`` draws from stream ``i + 1`` of the experiment seed, so the
    result does not depend on how many workers execute the checks.
    """
    s = config.seed if seed is None else int(seed)
    jobs = [(entry, s, i + 1) for i, entry in enumerate(config.checks)]
    if not jobs:
        return []
    workers = _worker_count(config, len(jobs))
    if workers == 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs))


def run_check(config: ExperimentConfig, label: str, seed: Optional[int] = None) -> ValidationReport:
    """Run one configured check on the stream it gets inside :func:`run_experiment`."""
    s = config.seed if seed is None else int(seed)
    for i, entry in enumerate(config.checks):
        if entry.label == label:
            return _run_one((entry, s, i + 1))
    raise KeyError(f"no check labelled {label!r}")


def format_table(reports: Iterable[ValidationReport]) -> str:
    rows = [("check", "kind", "statistic", "value", "threshold", "result", "N")]
    for r in reports:
        rows.append(
            (r.check, r.kind, r.statistic_name, f"{r.statistic:.6g}", f"{r.threshold:.6g}", "PASS" if r.passed else "FAIL", str(r.n))
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines) + "\n"


def write_reports(reports: list[ValidationReport], out_dir) -> dict[str, Path]:
    """Write ``reports.jsonl`` and ``reports.txt`` (deterministic) and ``timings.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {"jsonl": out / "reports.jsonl", "table": out / "reports.txt", "timings": out / "timings.json"}
    files["jsonl"].write_text("".join(r.to_json() + "\n" for r in reports))
    files["table"].write_text(format_table(reports))
    files["timings"].write_text(json.dumps({r.check: round(r.runtime, 3) for r in reports}, indent=2) + "\n")
    return files


def read_reports(path) -> list[ValidationReport]:
    return [ValidationReport.from_dict(json.loads(line)) for line in Path(path).read_text().splitlines() if line]
