"""Distributional quantities of the time-changed counting and Skellam processes.

Building block: the space-time fractional Poisson count ``N_c`` with rate
``c``, whose point probabilities are ``(c^m/m!)(-d/dc)^m E_{alpha,1}(-c^beta t^alpha)``
(:func:`fracskellam.special_functions.count_pmf_series`).  A generalized
counting process with rates ``lambda_j`` is ``N_Lambda`` events with
i.i.d. jump sizes ``P(j) = lambda_j/Lambda``.

Skellam p.m.f. evaluation methods
---------------------------------
``"totals"``
    The outer series ``sum_y P(N_Lambda = |n|+y) P(N_T = y)`` built from
    :func:`ml_derivative` values, with ``Lambda`` and ``T`` the total up
    and down rates (the up role goes to the down stream for ``n < 0``).
``"gamma_ratio"``
    The same quantity written as products of two inner series with
    Gamma-ratio coefficients.
``"exact"``
    The law of the process described by the ProcessSpec: jump sizes are honoured
    and its ``clock`` decides whether up and down streams share the
    operational time.  For ``k = 1`` and ``clock="independent"`` it equals
    the two forms above; for ``k > 1`` or a shared clock it does not.

Every probability is returned with a truncation bound.  Bounds combine
series tails, a floating point cancellation estimate, and (for outer
series over states) a remainder estimate that assumes the count
probabilities are non-increasing beyond the summation cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy import special as sc

from .processes import ConfigError, ProcessSpec, RateVector
from .special_functions import (
    ConvergenceError,
    count_pmf_series,
    count_survival_series,
    mittag_leffler,
    ml_derivative,
    omega_compositions,
)

__all__ = [
    "PmfResult",
    "PmfTable",
    "MomentSet",
    "TailEstimate",
    "METHODS",
    "support_window",
    "gstfcp_pmf",
    "gstfcp_pmf_table",
    "gstfsp_pmf",
    "gstfsp_pmf_table",
    "gstfsp_pgf",
    "moments",
    "fractional_moment",
    "arrival_time_cdf",
    "first_passage_survival",
    "increment_pmf_gsfcp",
    "recurrence_residual",
    "tail_asymptote",
    "tail_upper_bound",
    "running_avg_charfn",
]

METHODS = ("totals", "gamma_ratio", "exact")

PMF_TOL = 1e-12
TAIL_TOL = 1e-8
Y_CAP_SIMPLE = 1 << 17
Y_CAP_COMPOUND = 1 << 12
TAIL_CAP = 1 << 20
Z_CAP = 1 << 13
SIMPLE_TABLE_LIMIT = 1 << 22
# Geometric ladder for tail remainders of single-jump-size laws.  The
# survival series stays accurate well beyond the top rung.
LADDER_RATIO = 1.02
LADDER_STEPS = 1500
LADDER_TOP = 1 << 44
_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class PmfResult:
    n: int
    probability: float
    truncation_bound: float
    converged: bool = True


@dataclass(frozen=True)
class PmfTable:
    """Probabilities on ``n_min..n_max`` plus the masses outside that window."""

    n: np.ndarray
    p: np.ndarray
    bound: np.ndarray
    tail_low: float = 0.0
    tail_high: float = 0.0
    tail_low_bound: float = 0.0
    tail_high_bound: float = 0.0
    converged: bool = True

    def results(self) -> list[PmfResult]:
        return [
            PmfResult(int(a), float(b), float(c), self.converged) for a, b, c in zip(self.n, self.p, self.bound)
        ]

    def at(self, n: int) -> PmfResult:
        i = int(n - self.n[0])
        if not 0 <= i < self.n.size:
            raise IndexError(f"state {n} outside the table")
        return PmfResult(int(n), float(self.p[i]), float(self.bound[i]), self.converged)

    @property
    def total(self) -> float:
        return math.fsum(self.p) + self.tail_low + self.tail_high

    @property
    def total_bound(self) -> float:
        return math.fsum(self.bound) + self.tail_low_bound + self.tail_high_bound


@dataclass(frozen=True)
class MomentSet:
    mean: float
    variance: float
    covariance: Optional[Callable[[float, float], float]] = field(default=None, repr=False)


@dataclass(frozen=True)
class TailEstimate:
    x: float
    asymptote: float
    upper_bound: Optional[float] = None
    truncation_bound: float = 0.0


# ---------------------------------------------------------------------------
# Counting laws
# ---------------------------------------------------------------------------


class _CountLaw:
    """Law of a generalized counting process value at time ``t``.

    Tables of probabilities and survival values are cached and grown on
    demand.  For a single jump size, point and survival values at any
    index come straight from the closed series.
    """

    def __init__(self, alpha: float, beta: float, rates: RateVector, t: float):
        self.alpha, self.beta, self.rates, self.t = alpha, beta, rates, float(t)
        self.simple = rates.k == 1
        self._table: Optional[tuple[np.ndarray, ...]] = None

    @property
    def c(self) -> float:
        return self.rates.total

    def base_pmf(self, m) -> tuple[np.ndarray, np.ndarray]:
        return count_pmf_series(self.alpha, self.beta, self.c, self.t, m)

    def base_survival(self, m) -> tuple[np.ndarray, np.ndarray]:
        return count_survival_series(self.alpha, self.beta, self.c, self.t, m)

    def table(self, m_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """``(pmf, pmf_bound, survival, survival_bound)`` on ``0..m_max``."""
        if self._table is not None and self._table[0].size > m_max:
            return tuple(a[: m_max + 1] for a in self._table)  # type: ignore[return-value]
        if self._table is not None and self.simple:
            # Grow geometrically so repeated requests stay cheap.
            m_max = max(m_max, 2 * self._table[0].size)
        m = np.arange(m_max + 1)
        base_p, base_b = self.base_pmf(m)
        s_tail, s_tail_b = self.base_survival([m_max])
        if self.simple:
            p, b = base_p, base_b
            # P(N > m) = sum_{z=m+1}^{m_max} P(z) + P(N > m_max)
            rev = np.cumsum(base_p[::-1])[::-1]
            surv = np.concatenate([rev[1:], [0.0]]) + s_tail[0]
            rev_b = np.cumsum(base_b[::-1])[::-1]
            surv_b = np.concatenate([rev_b[1:], [0.0]]) + s_tail_b[0]
        else:
            jump = self.rates.jump_pmf()
            h = np.zeros(m_max + 1)
            h[0] = 1.0
            p = np.zeros(m_max + 1)
            b = np.zeros(m_max + 1)
            above = np.zeros(m_max + 1)
            above_b = np.zeros(m_max + 1)
            for z in range(m_max + 1):
                p += base_p[z] * h
                b += base_b[z] * h
                outside = 1.0 - np.cumsum(h)
                above += base_p[z] * outside
                above_b += base_b[z] * outside
                h = np.convolve(h, jump)[: m_max + 1]
            surv = above + s_tail[0]
            surv_b = above_b + s_tail_b[0]
        self._table = (p, b, np.maximum(surv, 0.0), surv_b)
        return tuple(a[: m_max + 1] for a in self._table)  # type: ignore[return-value]

    def _cached(self, m: np.ndarray) -> bool:
        return not self.simple or (self._table is not None and self._table[0].size > m.max())

    def survival_at(self, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        m = np.asarray(m)
        if not self._cached(m) and (m.size == 1 or m.max() > SIMPLE_TABLE_LIMIT):
            return self.base_survival(m)
        _, _, s, sb = self.table(int(m.max()))
        return s[m], sb[m]

    def pmf_at(self, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        m = np.asarray(m)
        if not self._cached(m) and (m.size == 1 or m.max() > SIMPLE_TABLE_LIMIT):
            return self.base_pmf(m)
        p, b, _, _ = self.table(int(m.max()))
        return p[m], b[m]


def _law(alpha: float, beta: float, rates: RateVector, t: float) -> _CountLaw:
    return _cached_law(alpha, beta, rates, float(t))


@lru_cache(maxsize=64)
def _cached_law(alpha: float, beta: float, rates: RateVector, t: float) -> _CountLaw:
    return _CountLaw(alpha, beta, rates, t)


def _collapsed(rates: RateVector) -> RateVector:
    return RateVector((rates.total,))


def _require_untempered(spec: ProcessSpec) -> None:
    if spec.theta != 0.0:
        raise ConfigError("closed-form analytics cover untempered families only")


def gstfcp_pmf(spec: ProcessSpec, t: float, n: int) -> PmfResult:
    """Counting p.m.f. as a sum over compositions of ``n`` into jump sizes ``1..k``.

    Each composition ``x`` contributes
    ``prod_j lambda_j^{x_j}/x_j! * (-d/dLambda)^{z} E_{alpha,1}(-Lambda^beta t^alpha)``
    with ``z = sum_j x_j``.
    """
    _require_untempered(spec)
    if spec.is_skellam:
        raise ConfigError("gstfcp_pmf needs a counting spec")
    if n < 0:
        raise ValueError("counting states are non-negative")
    if t == 0:
        return PmfResult(n, 1.0 if n == 0 else 0.0, 0.0)
    rates = spec.up_rates.rates
    log_rates = [math.log(r) if r > 0 else -math.inf for r in rates]
    weights: dict[int, list[float]] = {}
    for parts in omega_compositions(spec.k, n):
        if any(x > 0 and lr == -math.inf for x, lr in zip(parts, log_rates)):
            continue
        lw = sum(x * lr - math.lgamma(x + 1) for x, lr in zip(parts, log_rates) if x)
        weights.setdefault(sum(parts), []).append(lw)
    total, bound = [], 0.0
    big_lambda = spec.up_rates.total
    for z, lws in weights.items():
        top = max(lws)
        log_c = top + math.log(math.fsum(math.exp(w - top) for w in lws))
        d = ml_derivative(spec.alpha, spec.beta, big_lambda, t, z, log_scale=log_c)
        total.append(d.value)
        bound += d.truncation_bound
    return PmfResult(n, math.fsum(total), bound)


def gstfcp_pmf_table(spec: ProcessSpec, t: float, m_max: int) -> PmfTable:
    """Counting p.m.f. on ``0..m_max`` through jump-size convolutions."""
    _require_untempered(spec)
    if t == 0:
        p = np.zeros(m_max + 1)
        p[0] = 1.0
        return PmfTable(np.arange(m_max + 1), p, np.zeros(m_max + 1))
    law = _law(spec.alpha, spec.beta, spec.up_rates, t)
    p, b, s, sb = law.table(m_max)
    return PmfTable(np.arange(m_max + 1), p.copy(), b.copy(), 0.0, float(s[m_max]), 0.0, float(sb[m_max]))


# ---------------------------------------------------------------------------
# Skellam p.m.f.
# ---------------------------------------------------------------------------


def _gamma_ratio_factor(alpha: float, beta: float, x: float, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(-1)^m/m! * sum_i (-x)^i Gamma(i beta+1) / (Gamma(i alpha+1) Gamma(i beta-m+1))``.

    Terms at poles of ``Gamma(i beta - m + 1)`` vanish.  Rows that lose too
    many digits in double precision are summed again with mpmath.
    """
    from .special_functions import _binomial_cutoffs, _ml_envelope_cutoff, _rounding_bound

    m = np.asarray(m, dtype=float)
    out = np.empty(m.shape)
    bnd = np.empty(m.shape)
    if x == 0.0:
        out[:] = np.where(m == 0, 1.0, 0.0)
        bnd[:] = 0.0
        return out, bnd
    log_tol = math.log(1e-17)
    base = _ml_envelope_cutoff(alpha, x, log_tol, 200000)
    cuts = _binomial_cutoffs(alpha, beta, x, m, base, log_tol, 200000)
    lx = math.log(x)
    for idx in range(m.size):
        mm = m[idx]
        cut = int(cuts[idx])
        i = np.arange(cut + 1, dtype=float)
        ib = beta * i
        low = ib - mm + 1.0
        pole = (low <= 0) & (np.abs(low - np.rint(low)) < 1e-9)
        i, ib, low = i[~pole], ib[~pole], low[~pole]
        la = (
            i * lx
            + sc.gammaln(ib + 1.0)
            - sc.gammaln(alpha * i + 1.0)
            - sc.gammaln(low)
            - math.lgamma(mm + 1.0)
        )
        sign = np.where(i % 2 == 1, -1.0, 1.0) * sc.gammasgn(low)
        parity = -1.0 if int(mm) % 2 else 1.0
        tail = 2.0 * math.exp((cut + 1) * lx - math.lgamma(alpha * (cut + 1) + 1))
        top = float(la.max()) if la.size else -math.inf
        if not math.isfinite(top):
            out[idx], bnd[idx] = 0.0, tail
            continue
        s = math.fsum(sign * np.exp(la - top))
        value = parity * s * math.exp(top)
        rounding = _rounding_bound(la)
        if rounding > max(1e-10 * abs(value), 1e-30) or abs(value) > 1.0:
            value, rounding = _gamma_ratio_row_mp(alpha, beta, x, int(mm), cut, top)
        out[idx] = value
        bnd[idx] = rounding + tail
    return out, bnd


def _gamma_ratio_row_mp(alpha: float, beta: float, x: float, m: int, cut: int, log_amp: float):
    import mpmath

    digits = 30 + max(0, int(math.ceil(log_amp / math.log(10))))
    for _ in range(6):
        with mpmath.workdps(digits):
            am, bm, xm = mpmath.mpf(alpha), mpmath.mpf(beta), mpmath.mpf(x)
            total = mpmath.mpf(0)
            biggest = mpmath.mpf(0)
            for i in range(cut + 1):
                term = (
                    (-xm) ** i
                    * mpmath.gamma(bm * i + 1)
                    * mpmath.rgamma(am * i + 1)
                    * mpmath.rgamma(bm * i - m + 1)
                )
                total += term
                biggest = max(biggest, abs(term))
            total = total * mpmath.rgamma(m + 1)
            biggest = biggest * mpmath.rgamma(m + 1)
            if m % 2:
                total = -total
            lost = float(mpmath.log10(biggest)) if biggest > 0 else 0.0
            lost -= float(mpmath.log10(abs(total))) if total != 0 else -300.0
            value = float(total)
        if digits >= lost + 20:
            return value, float(biggest) * 10.0 ** (5 - digits) * (cut + 1) + abs(value) * 1e-16
        digits = int(lost) + 25
    raise ConvergenceError("extended precision sum did not stabilise")


class _TotalsSeries:
    """Count law of ``N_c`` through scalar-order derivative values."""

    def __init__(self, alpha, beta, c, t, ratio: bool):
        self.alpha, self.beta, self.c, self.t, self.ratio = alpha, beta, c, t, ratio
        self.law = _law(alpha, beta, RateVector((c,)), t)

    def pmf(self, m_max: int) -> tuple[np.ndarray, np.ndarray]:
        m = np.arange(m_max + 1)
        if self.ratio:
            x = self.c**self.beta * self.t**self.alpha
            return _gamma_ratio_factor(self.alpha, self.beta, x, m)
        return self.law.pmf_at(m)

    def survival_at(self, m):
        return self.law.survival_at(m)


def _pairwise_rounding(n: int) -> float:
    """Relative error bound of numpy's pairwise sum of ``n`` non-negative products."""
    return (math.log2(max(n, 2)) + 2.0) * _EPS


def _difference_window(up, down, n_lo: int, n_hi: int, tol: float, y_cap: int):
    """``P(U - D = n)`` for independent counts with the given laws.

    ``up`` and ``down`` expose ``pmf(m_max)`` and ``survival_at``.  The
    outer index runs to ``Y`` and the remainder beyond is estimated by
    ``P(D > Y) * max_{Y < y <= 2Y} P(U = n + y)`` (and symmetrically).
    """
    ns = np.arange(n_lo, n_hi + 1)
    y = 256
    while True:
        size = max(abs(n_lo), abs(n_hi)) + 2 * y + 2
        p1, b1 = up.pmf(size)
        p2, b2 = down.pmf(size)
        s1 = float(up.survival_at(np.array([y]))[0][0])
        s2 = float(down.survival_at(np.array([y]))[0][0])
        prob = np.empty(ns.size)
        bound = np.empty(ns.size)
        rem = np.empty(ns.size)
        for k, n in enumerate(ns):
            if n >= 0:
                a, ab, v, vb, s_other = p1, b1, p2, b2, s2
            else:
                a, ab, v, vb, s_other = p2, b2, p1, b1, s1
            n_abs = abs(int(n))
            seg = a[n_abs : n_abs + y + 1]
            # Non-negative terms: pairwise summation loses at most log2(y) ulps.
            prob[k] = float(np.sum(seg * v[: y + 1]))
            bound[k] = float(np.dot(ab[n_abs : n_abs + y + 1], v[: y + 1]) + np.dot(seg, vb[: y + 1]))
            bound[k] += _pairwise_rounding(y + 1) * prob[k]
            rem[k] = s_other * float(a[n_abs + y + 1 : n_abs + 2 * y + 2].max())
        if rem.max() < tol or y >= y_cap:
            return ns, prob, bound + rem, bool(rem.max() < tol)
        y *= 4


def _difference_tails(up, down, w: int, tol: float, cap: int):
    """``P(U - D > w)`` and ``P(U - D < -w)`` with bounds.

    ``P(U - D > w) = sum_y P(D = y) P(U > w + y)``, summed directly up to
    ``Y``.  The part beyond ``Y`` is at most ``P(D > Y) P(U > w + Y)``; when
    both laws have a single jump size it is instead bracketed with
    :func:`_ladder_remainder`.
    """
    out = []
    for a, v in ((up, down), (down, up)):
        y = 1024
        while y < cap:
            rem = float(v.survival_at(np.array([y]))[0][0]) * float(a.survival_at(np.array([w + y]))[0][0])
            if rem < tol:
                break
            y *= 2
        y = min(y, cap)
        pv, bv = v.pmf(y)
        sa, sab = a.survival_at(np.arange(w, w + y + 1))
        val = float(np.sum(pv[: y + 1] * sa[: y + 1]))
        bnd = float(np.dot(bv[: y + 1], sa[: y + 1]) + np.dot(pv[: y + 1], sab[: y + 1]))
        bnd += _pairwise_rounding(y + 1) * val
        if _single_jump(a) and _single_jump(v):
            r_val, r_bnd = _ladder_remainder(a.law, v.law, w, y)
            val += r_val
            bnd += r_bnd
        else:
            bnd += float(v.survival_at(np.array([y]))[0][0]) * float(sa[-1])
        out.append((val, bnd))
    return out


def _single_jump(adapter) -> bool:
    law = getattr(adapter, "law", None)
    return law is not None and law.simple


def _ladder_remainder(a: _CountLaw, v: _CountLaw, w: int, y: int) -> tuple[float, float]:
    """``sum_{z > y} P(D = z) P(U > w + z)`` bracketed on a geometric ladder.

    On each rung ``(Y_l, Y_{l+1}]`` the mass of ``D`` is ``S_D(Y_l) -
    S_D(Y_{l+1})`` and ``S_U(w + z)`` lies between its values at the rung
    ends, since survival functions decrease.  The part beyond the last
    rung is between 0 and ``S_D(Y_L) S_U(w + Y_L + 1)``.  Returns the
    midpoint of the bracket and a bound covering its half-width and the
    series errors.
    """
    rungs = np.unique(np.round(y * LADDER_RATIO ** np.arange(0, LADDER_STEPS + 1)).astype(np.int64))
    rungs = rungs[rungs <= LADDER_TOP]
    sd, sdb = v.base_survival(rungs)
    su_near, su_near_b = a.base_survival(w + rungs + 1)
    su_far, su_far_b = a.base_survival(w + rungs[1:])
    mass = np.maximum(sd[:-1] - sd[1:], 0.0)
    mass_b = sdb[:-1] + sdb[1:] + _EPS * sd[:-1]
    upper = float(np.sum(mass * su_near[:-1])) + float(sd[-1] * su_near[-1])
    lower = float(np.sum(mass * su_far))
    err = float(
        np.dot(mass_b, su_near[:-1])
        + np.dot(mass, np.maximum(su_near_b[:-1], su_far_b))
        + sdb[-1] * su_near[-1]
        + sd[-1] * su_near_b[-1]
    )
    err += _pairwise_rounding(rungs.size) * upper
    return 0.5 * (upper + lower), 0.5 * (upper - lower) + err


class _CompoundWrapper:
    """Adapter exposing the ``pmf``/``survival_at`` protocol for counting laws."""

    def __init__(self, law: _CountLaw):
        self.law = law

    def pmf(self, m_max: int):
        p, b, _, _ = self.law.table(m_max)
        return p, b

    def survival_at(self, m):
        return self.law.survival_at(m)


def _shared_window(spec: ProcessSpec, t: float, n_lo: int, n_hi: int, w: int, tol: float, z_cap: int):
    """Exact law on one shared clock.

    Given operational time ``tau`` the up and down events merge into a
    single Poisson stream of rate ``Lambda + T`` whose marks are ``+j`` or
    ``-j`` with probabilities ``lambda_j/(Lambda+T)`` and ``mu_j/(Lambda+T)``.
    So ``P(S = n) = sum_z P(N_{Lambda+T} = z) P(X_1 + ... + X_z = n)``.
    """
    up, down = spec.up_rates, spec.down_rates
    c = up.total + down.total
    k = spec.k
    mark = np.concatenate([np.asarray(down.rates)[::-1], [0.0], np.asarray(up.rates)]) / c
    base_law = _law(spec.alpha, spec.beta, RateVector((c,)), t)
    ns = np.arange(n_lo, n_hi + 1)
    prob = np.zeros(ns.size)
    bnd = np.zeros(ns.size)
    low = high = 0.0
    low_b = high_b = 0.0
    dist = np.array([1.0])
    lo = 0  # state of dist[0]
    trimmed = 0.0
    block = 32  # doubles up to 256; rows past the truncation point can be costly
    recent = np.zeros(ns.size)
    z = 0
    while True:
        pz, bz = base_law.base_pmf(np.arange(z, z + block))
        recent[:] = 0.0
        for j in range(block):
            states = lo + np.arange(dist.size)
            sel_lo = max(n_lo, lo)
            sel_hi = min(n_hi, lo + dist.size - 1)
            win = np.zeros(ns.size)
            if sel_lo <= sel_hi:
                win[sel_lo - n_lo : sel_hi - n_lo + 1] = dist[sel_lo - lo : sel_hi - lo + 1]
            prob += pz[j] * win
            bnd += bz[j] * win + pz[j] * trimmed
            above = float(dist[states > w].sum())
            below = float(dist[states < -w].sum())
            high += pz[j] * above
            low += pz[j] * below
            high_b += bz[j] + pz[j] * trimmed
            low_b += bz[j] + pz[j] * trimmed
            recent = np.maximum(recent, win)
            dist = np.convolve(dist, mark)
            lo -= k
            # Trim negligible edges and account for the dropped mass.
            keep = np.nonzero(dist > 1e-300)[0]
            cut_lo, cut_hi = keep[0], keep[-1]
            dropped = dist[:cut_lo].sum() + dist[cut_hi + 1 :].sum()
            trimmed += float(dropped)
            dist = dist[cut_lo : cut_hi + 1]
            lo += int(cut_lo)
        z += block
        block = min(2 * block, 256)
        s_z = float(base_law.base_survival(np.array([z - 1]))[0][0])
        rem = s_z * recent
        if rem.max() < tol or z >= z_cap:
            converged = bool(rem.max() < tol)
            break
    # Mass of higher event counts goes to the tails in the proportions of the last step.
    states = lo + np.arange(dist.size)
    frac_high = float(dist[states > w].sum())
    frac_low = float(dist[states < -w].sum())
    frac_mid = max(0.0, 1.0 - frac_high - frac_low)
    high += s_z * frac_high
    low += s_z * frac_low
    high_b += s_z * frac_mid
    low_b += s_z * frac_mid
    return ns, prob, bnd + rem, (low, low_b), (high, high_b), converged


def support_window(spec: ProcessSpec, t: float) -> int:
    """Half-width ``W`` of the state window used for sums over the support."""
    w = 60
    if spec.beta == 1.0 and spec.theta == 0.0 and t > 0:
        m = moments(spec, t, t)
        w = max(w, int(math.ceil(abs(m.mean) + 10.0 * math.sqrt(m.variance))))
    return w


def gstfsp_pmf_table(
    spec: ProcessSpec,
    t: float,
    n_min: int,
    n_max: int,
    method: str = "exact",
    *,
    tails: bool = True,
    tail_window: Optional[int] = None,
    tol: float = PMF_TOL,
) -> PmfTable:
    """Skellam p.m.f. on ``n_min..n_max`` and, optionally, the masses outside.

    Tail masses beyond ``tail_window`` (default: the window itself must be
    symmetric, ``-W..W``) are computed from the closed survival series, so
    the table can be checked for normalization without summing a heavy tail.
    """
    _require_untempered(spec)
    if not spec.is_skellam:
        raise ConfigError("gstfsp_pmf needs a Skellam spec")
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if n_min > n_max:
        raise ValueError("empty state range")
    ns = np.arange(n_min, n_max + 1)
    if t == 0:
        return PmfTable(ns, (ns == 0).astype(float), np.zeros(ns.size))
    w = tail_window
    if tails and w is None:
        if n_min != -n_max:
            raise ValueError("tails need a symmetric window or an explicit tail_window")
        w = n_max
    a, b = spec.alpha, spec.beta
    if method == "exact" and spec.clock == "shared":
        w_eff = w if w is not None else max(abs(n_min), abs(n_max))
        ns, p, bound, (lo, lob), (hi, hib), ok = _shared_window(spec, t, n_min, n_max, w_eff, tol, Z_CAP)
        if not tails:
            return PmfTable(ns, p, bound, converged=ok)
        return PmfTable(ns, p, bound, lo, hi, lob, hib, ok)
    if method == "exact":
        simple = spec.k == 1
        up, down = (
            _TotalsSeries(a, b, r.total, t, False) if simple else _CompoundWrapper(_law(a, b, r, t))
            for r in (spec.up_rates, spec.down_rates)
        )
        y_cap = Y_CAP_SIMPLE if simple else Y_CAP_COMPOUND
        tail_cap = TAIL_CAP if simple else Y_CAP_COMPOUND
    else:
        ratio = method == "gamma_ratio"
        up = _TotalsSeries(a, b, spec.up_rates.total, t, ratio)
        down = _TotalsSeries(a, b, spec.down_rates.total, t, ratio)
        y_cap = Y_CAP_SIMPLE if not ratio else 1 << 12
        tail_cap = TAIL_CAP
    ns, p, bound, ok = _difference_window(up, down, n_min, n_max, tol, y_cap)
    if not tails:
        return PmfTable(ns, p, bound, converged=ok)
    (hi, hib), (lo, lob) = _difference_tails(up, down, w, TAIL_TOL, tail_cap)
    return PmfTable(ns, p, bound, lo, hi, lob, hib, ok)


def gstfsp_pmf(spec: ProcessSpec, t: float, n: int, method: str = "exact") -> PmfResult:
    """``P(S(t) = n)``; see the module docstring for the available methods."""
    table = gstfsp_pmf_table(spec, t, n, n, method, tails=False)
    return table.at(n)


# ---------------------------------------------------------------------------
# Generating function and moments
# ---------------------------------------------------------------------------


def _ml_neg(alpha: float, base: float, beta: float, t: float) -> float:
    if base < 0 and beta != 1.0:
        raise ValueError("fractional power of a negative base is not real")
    arg = -(base**beta if base >= 0 else base) * t**alpha
    return mittag_leffler(alpha, 1.0, arg).value


def gstfsp_pgf(spec: ProcessSpec, t: float, u: float) -> float:
    """Probability generating function ``E[u^{S(t)}]`` for ``0 < u <= 1``.

    Independent clocks give a product of two Mittag-Leffler factors; a
    shared clock gives a single factor of the combined exponent.  For
    ``beta < 1`` and ``u < 1`` the down-stream base is negative and the
    real power is undefined, which raises :class:`ValueError` (except for
    counting specs, whose base is non-negative).
    """
    _require_untempered(spec)
    if not (0.0 < u <= 1.0):
        raise ValueError("u must lie in (0, 1]")
    if u == 1.0:
        return 1.0
    j = spec.up_rates.sizes
    a = float(np.dot(1.0 - u**j, spec.up_rates.rates))
    if not spec.is_skellam:
        return _ml_neg(spec.alpha, a, spec.beta, t)
    bneg = float(np.dot(1.0 - u ** (-j.astype(float)), spec.down_rates.rates))
    if spec.beta != 1.0:
        if spec.clock == "independent" or a + bneg < 0:
            raise ValueError("fractional power of a negative base is not real")
    if spec.clock == "independent":
        return _ml_neg(spec.alpha, a, spec.beta, t) * _ml_neg(spec.alpha, bneg, spec.beta, t)
    return _ml_neg(spec.alpha, a + bneg, spec.beta, t)


def _clock_moments(alpha: float, t: float) -> tuple[float, float]:
    mean = t**alpha / math.gamma(1.0 + alpha)
    var = (2.0 / math.gamma(2.0 * alpha + 1.0) - 1.0 / math.gamma(alpha + 1.0) ** 2) * t ** (2 * alpha)
    return mean, var


def moments(spec: ProcessSpec, s: float, t: float) -> MomentSet:
    """Mean and variance at time ``t`` for ``beta = 1``; covariance for ``alpha = 1``.

    ``s`` is the second time used by :attr:`MomentSet.covariance` defaults.
    """
    if spec.beta != 1.0 or spec.theta != 0.0:
        raise ConfigError("moments exist only for beta = 1 untempered families")
    e_tau, v_tau = _clock_moments(spec.alpha, t)
    up = spec.up_rates
    if not spec.is_skellam:
        mean = e_tau * up.first_moment
        var = e_tau * up.second_moment + v_tau * up.first_moment**2
        sq = up.second_moment
    else:
        down = spec.down_rates
        mean = e_tau * spec.drift
        sq = up.second_moment + down.second_moment
        if spec.clock == "shared":
            var = e_tau * sq + v_tau * spec.drift**2
        else:
            var = e_tau * sq + v_tau * (up.first_moment**2 + down.first_moment**2)
    cov = None
    if spec.alpha == 1.0:

        def cov(a: float, b: float) -> float:
            return sq * min(a, b)

    return MomentSet(mean, var, cov)


def fractional_moment(spec: ProcessSpec, t: float, q: float) -> float:
    """``E[M(t)^q]`` for a counting spec and ``0 < q < 1``.

    Uses ``E X^q = -1/Gamma(1-q) int_0^inf L'(u) u^{-q} du`` with the
    Laplace transform ``L(u) = E_{alpha,1}(-g(u)^beta t^alpha)``,
    ``g(u) = sum_j (1 - e^{-u j}) lambda_j``.  The derivative is taken
    term-wise: ``d/dz E_{alpha,1}(z) = E_{alpha,alpha}(z)/alpha``.  The
    substitution ``u = s^{1/(1-q)}`` removes the ``u^{-q}`` factor.
    """
    _require_untempered(spec)
    if spec.is_skellam:
        raise ConfigError("fractional moments are defined for counting specs")
    if not (0.0 < q < 1.0):
        raise ValueError("q must lie in (0, 1)")
    if spec.beta < 1.0 and q >= spec.beta:
        # P(M(t) > x) decays like x^(-beta), so the moment diverges.
        return math.inf
    if t == 0:
        return 0.0
    a, b = spec.alpha, spec.beta
    lam = np.asarray(spec.up_rates.rates)
    j = spec.up_rates.sizes.astype(float)
    ta = t**a

    def integrand_u(u: float) -> float:
        e = np.exp(-u * j)
        g = float(np.dot(1.0 - e, lam))
        dg = float(np.dot(j * e, lam))
        if g <= 0.0:
            # g(u) ~ u * sum_j j lambda_j near 0
            g = u * float(np.dot(j, lam))
        z = -(g**b) * ta
        return b * ta * g ** (b - 1.0) * dg * mittag_leffler(a, a, z).value / a

    p = 1.0 / (1.0 - q)

    def integrand_s(s: float) -> float:
        if s == 0.0:
            return 0.0
        return integrand_u(s**p) * p * s ** (p - 1.0) * s ** (-q * p)

    total, err = 0.0, 0.0
    for lo, hi in ((0.0, 1.0), (1.0, np.inf)):
        val, e = integrate.quad(integrand_s, lo, hi, limit=200, epsabs=1e-12, epsrel=1e-10)
        total += val
        err += e
    if not math.isfinite(total) or err > 1e-6 * max(1.0, abs(total)):
        raise ConvergenceError(f"fractional moment quadrature did not converge (err={err:g})")
    return total / math.gamma(1.0 - q)


# ---------------------------------------------------------------------------
# Arrival and first passage
# ---------------------------------------------------------------------------


def _window_table(spec: ProcessSpec, t: float, method: str, window: Optional[int]) -> PmfTable:
    w = support_window(spec, t) if window is None else int(window)
    return gstfsp_pmf_table(spec, t, -w, w, method)


def arrival_time_cdf(
    spec: ProcessSpec, t: float, n: int, method: str = "exact", window: Optional[int] = None
) -> float:
    """``F(t) = sum_{x >= n} P(S(t) = x)``; the mass above the window comes from the tail series."""
    table = _window_table(spec, t, method, window)
    w = int(table.n[-1])
    if n > w:
        raise ValueError("n lies beyond the truncation window")
    if n < -w:
        return float(min(1.0, table.total))
    sel = table.n >= n
    return float(min(1.0, math.fsum(table.p[sel]) + table.tail_high))


def first_passage_survival(
    spec: ProcessSpec,
    t: float,
    n: int,
    convention: str = "as_stated",
    method: str = "exact",
    window: Optional[int] = None,
) -> float:
    """``P(T_n > t)`` written as a sum of state probabilities.

    ``as_stated`` sums ``P(S(t) = x)`` for ``x = 0..n-1``; ``full_support``
    gives ``P(S(t) < n)`` including all negative states.  For Skellam paths
    ``{T_n > t}`` is contained in ``{S(t) < n}``, so only the latter is an
    upper bound of the true survival probability.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    table = _window_table(spec, t, method, window)
    if convention == "as_stated":
        sel = (table.n >= 0) & (table.n <= n - 1)
        return float(math.fsum(table.p[sel]))
    if convention == "full_support":
        sel = table.n <= n - 1
        return float(min(1.0, math.fsum(table.p[sel]) + table.tail_low))
    raise ValueError("convention must be 'as_stated' or 'full_support'")


# ---------------------------------------------------------------------------
# Increments, recurrences
# ---------------------------------------------------------------------------


def increment_pmf_gsfcp(up_rates, beta: float, t: float, v: float, n: int) -> PmfResult:
    """``P(M(t+v) - M(v) = n)`` for the space-fractional counting process.

    Product of the p.m.f. at time ``t`` and
    ``sum_y (Lambda^y/y!) (-d/dLambda)^y exp(-Lambda^beta v)``.  The second
    factor is a total probability; the part beyond the summation cutoff is
    added from the closed survival series.
    """
    rates = up_rates if isinstance(up_rates, RateVector) else RateVector(tuple(up_rates))
    spec = ProcessSpec("counting", 1.0, beta, 0.0, rates)
    first = gstfcp_pmf(spec, t, n)
    if v == 0:
        second, second_b = 1.0, 0.0
    else:
        y = 4096
        p, pb = count_pmf_series(1.0, beta, rates.total, v, np.arange(y + 1))
        s, sb = count_survival_series(1.0, beta, rates.total, v, [y])
        second = math.fsum(p) + float(s[0])
        second_b = float(pb.sum() + sb[0])
    value = first.probability * second
    bound = first.truncation_bound * second + first.probability * second_b
    return PmfResult(n, value, bound)


def recurrence_residual(spec: ProcessSpec, t: float, n: int) -> float:
    """``|p(n) - (t/n) sum_j j (lambda_j p(n-j) - mu_j p(n+j))|`` for ``beta = 1``.

    The counting version drops the ``mu`` terms and uses ``p = 0`` at
    negative states.
    """
    if spec.beta != 1.0:
        raise ConfigError("state recurrences are available for beta = 1 only")
    if n < 1:
        raise ValueError("n must be at least 1")
    k = spec.k
    lam = spec.up_rates.rates
    if spec.is_skellam:
        table = gstfsp_pmf_table(spec, t, n - k, n + k, "exact", tails=False)
        p = {int(i): float(v) for i, v in zip(table.n, table.p)}
        mu = spec.down_rates.rates
        rhs = math.fsum(j * (lam[j - 1] * p[n - j] - mu[j - 1] * p[n + j]) for j in range(1, k + 1))
    else:
        p = {m: gstfcp_pmf(spec, t, m).probability for m in range(max(0, n - k), n + 1)}
        rhs = math.fsum(j * lam[j - 1] * p[n - j] for j in range(1, k + 1) if n - j >= 0)
    return abs(p[n] - t * rhs / n)


# ---------------------------------------------------------------------------
# Tails
# ---------------------------------------------------------------------------


def tail_upper_bound(spec: ProcessSpec, x: float, t: float = 1.0) -> float:
    """Large-``x`` bound ``t^{2a} x^{1-2b} Gamma(2b-1) L1^b M1^b / (Gamma(1-b) Gamma(a+1)^2 Gamma(b))``.

    ``L1 = sum_j j lambda_j`` and ``M1 = sum_j j mu_j``.
    """
    if not spec.is_skellam:
        raise ConfigError("the upper bound is stated for Skellam specs")
    b, a = spec.beta, spec.alpha
    if not (0.5 < b < 1.0):
        raise ValueError("the upper bound needs 1/2 < beta < 1")
    l1, m1 = spec.up_rates.first_moment, spec.down_rates.first_moment
    return (
        t ** (2 * a)
        * x ** (1 - 2 * b)
        * math.gamma(2 * b - 1)
        * l1**b
        * m1**b
        / (math.gamma(1 - b) * math.gamma(a + 1) ** 2 * math.gamma(b))
    )


def tail_asymptote(spec: ProcessSpec, x: float, t: float = 1.0) -> TailEstimate:
    """Leading large-``x`` behaviour of ``P(X(t) > x)`` for ``beta < 1``.

    Counting: ``x^{-b} L1^b t^a / (Gamma(1-b) Gamma(1+a))``.  Skellam with
    independent clocks: the same constant times ``sum_y (x+y)^{-b} P(M_2(t) = y)``.
    Skellam with a shared clock and positive drift ``d``: the counting
    form with ``L1`` replaced by ``d``.
    """
    _require_untempered(spec)
    b, a = spec.beta, spec.alpha
    if not (0.0 < b < 1.0):
        raise ValueError("tail asymptotics need beta < 1")
    if x <= 0:
        raise ValueError("x must be positive")
    const = t**a / (math.gamma(1 - b) * math.gamma(1 + a))
    upper = None
    bound = 0.0
    if not spec.is_skellam:
        value = x ** (-b) * spec.up_rates.first_moment**b * const
    elif spec.clock == "shared":
        if spec.drift <= 0:
            raise ValueError("shared-clock right tail is power-law only for positive drift")
        value = x ** (-b) * spec.drift**b * const
    else:
        law = _law(a, b, spec.down_rates, t)
        y_max = TAIL_CAP if law.simple else Y_CAP_COMPOUND
        y = np.arange(y_max + 1)
        p, pb = law.pmf_at(y)
        wts = (x + y) ** (-b)
        s = float(law.survival_at(np.array([y_max]))[0][0])
        value = spec.up_rates.first_moment**b * const * math.fsum(wts * p)
        bound = spec.up_rates.first_moment**b * const * (
            float(np.dot(wts, pb)) + (x + y_max) ** (-b) * s
        )
    if spec.is_skellam and 0.5 < b < 1.0:
        upper = tail_upper_bound(spec, x, t)
    return TailEstimate(float(x), float(value), upper, float(bound))


# ---------------------------------------------------------------------------
# Running averages
# ---------------------------------------------------------------------------


def running_avg_charfn(spec: ProcessSpec, t: float, u: float) -> complex:
    """Characteristic function of ``(1/t) int_0^t X(s) ds`` for ``alpha = 1``.

    With ``psi(v)`` the Levy exponent of the process at unit time,
    ``E exp(i u A(t)) = exp(-t int_0^1 psi(u z) dz)``.  Independent clocks
    give ``psi(v) = (sum (1-e^{ivj}) lambda_j)^b + (sum (1-e^{-ivj}) mu_j)^b``;
    a shared clock puts both sums under one power.
    """
    _require_untempered(spec)
    if spec.alpha != 1.0:
        raise ConfigError("running averages are defined for alpha = 1")
    if u == 0:
        return 1.0 + 0.0j
    b = spec.beta
    j = spec.up_rates.sizes.astype(float)
    lam = np.asarray(spec.up_rates.rates)
    mu = None if not spec.is_skellam else np.asarray(spec.down_rates.rates)

    def psi(z: float) -> complex:
        v = u * z
        up = complex(np.dot(1.0 - np.exp(1j * v * j), lam))
        if mu is None:
            return up**b
        down = complex(np.dot(1.0 - np.exp(-1j * v * j), mu))
        if spec.clock == "shared":
            return (up + down) ** b
        return up**b + down**b

    re, e1 = integrate.quad(lambda z: psi(z).real, 0.0, 1.0, limit=200, epsabs=1e-13)
    im, e2 = integrate.quad(lambda z: psi(z).imag, 0.0, 1.0, limit=200, epsabs=1e-13)
    if e1 + e2 > 1e-8:
        raise ConvergenceError("characteristic function quadrature did not converge")
    return complex(np.exp(-t * (re + 1j * im)))
