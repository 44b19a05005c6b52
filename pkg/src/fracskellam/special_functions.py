"""Special functions used throughout the package.

The central objects are the two-parameter Mittag-Leffler function

    E_{a,b}(z) = sum_{m>=0} z^m / Gamma(a m + b)

and the term-wise derivatives of ``E_{a,1}(-c^beta t^alpha)`` with respect to
the rate ``c``.  The latter, rescaled by ``c^m / m!``, is exactly the
probability that a space-time fractional Poisson count with rate ``c`` equals
``m``; most of the analytics module is built on that quantity.

All series are summed with :func:`math.fsum` over terms evaluated through
log-gamma with explicit sign tracking.  Every evaluation reports a
truncation bound that covers both the omitted tail and an estimate of the
floating point cancellation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import mpmath
import numpy as np
from scipy import special as sc

__all__ = [
    "ConvergenceError",
    "SeriesValue",
    "Composition",
    "reciprocal_gamma",
    "mittag_leffler",
    "ml_derivative",
    "count_pmf_series",
    "count_survival_series",
    "caputo_derivative",
    "omega_compositions",
    "multinomial",
]

_EPS = np.finfo(float).eps
#: Largest term magnitude tolerated before a series is declared unsafe.
SAFE_AMPLITUDE = 1e12
_CHUNK = 64
# Thresholds for switching a series row to extended precision.
_REFINE_REL = 1e-10
_REFINE_ABS = 1e-30


class ConvergenceError(ArithmeticError):
    """A series could not be summed to a meaningful accuracy."""


@dataclass(frozen=True)
class SeriesValue:
    """Value of a truncated series together with an error bound."""

    value: float
    truncation_bound: float
    terms_used: int

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class Composition:
    """A vector ``(x_1, ..., x_k)`` with ``sum_j j x_j = n``."""

    parts: tuple[int, ...]

    @property
    def weight(self) -> int:
        return sum(self.parts)

    @property
    def target(self) -> int:
        return sum(j * x for j, x in enumerate(self.parts, start=1))


def reciprocal_gamma(x):
    """``1/Gamma(x)``, exactly 0 at the poles ``x = 0, -1, -2, ...``."""
    out = sc.rgamma(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def _snap(r: np.ndarray) -> np.ndarray:
    """Round values that are integers up to floating point noise."""
    near = np.rint(r)
    return np.where(np.abs(r - near) < 1e-9 * np.maximum(1.0, np.abs(r)), near, r)


def _rounding_bound(log_abs: np.ndarray) -> float:
    """Cancellation error estimate for a sum of terms ``exp(log_abs)``."""
    finite = np.isfinite(log_abs)
    if not finite.any():
        return 0.0
    la = log_abs[finite]
    return float(_EPS * np.sum(np.exp(la) * (8.0 + np.abs(la))))


def _check_alpha(alpha: float, name: str = "alpha") -> None:
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"{name} must lie in (0, 1], got {alpha!r}")


# ---------------------------------------------------------------------------
# Mittag-Leffler function
# ---------------------------------------------------------------------------


def mittag_leffler(
    alpha: float,
    beta: float,
    z: float,
    *,
    tol: float = 1e-16,
    max_terms: int = 20000,
    safe_amplitude: float = SAFE_AMPLITUDE,
) -> SeriesValue:
    """Two-parameter Mittag-Leffler function by direct power series.

    The series is summed until the terms are past their peak and smaller
    than ``tol`` relative to ``max(1, |partial sum|)``.  For negative ``z``
    the terms alternate and grow before they decay, so accuracy is limited
    by cancellation; when the largest term exceeds ``safe_amplitude`` a
    :class:`ConvergenceError` is raised instead of returning noise.
    """
    _check_alpha(alpha)
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    z = float(z)
    if not math.isfinite(z):
        raise ValueError("z must be finite")
    if z == 0.0:
        return SeriesValue(float(reciprocal_gamma(beta)), 0.0, 1)

    log_z = math.log(abs(z))
    negative = z < 0
    logs: list[np.ndarray] = []
    pieces: list[float] = []
    start = 0
    while True:
        m = np.arange(start, start + _CHUNK, dtype=float)
        arg = alpha * m + beta
        direct = (m * log_z < 700.0) & (arg < 170.0)
        terms = np.empty_like(m)
        terms[direct] = z ** m[direct] * sc.rgamma(arg[direct])
        la = m * log_z - sc.gammaln(arg)
        rest = ~direct
        if rest.any():
            sign = np.where(negative & (m[rest] % 2 == 1), -1.0, 1.0)
            with np.errstate(over="ignore"):
                terms[rest] = sign * np.exp(la[rest])
        if not np.all(np.isfinite(terms)):
            raise ConvergenceError(
                f"Mittag-Leffler terms overflow at |z|={abs(z):g} for alpha={alpha}"
            )
        logs.append(la)
        pieces.extend(terms.tolist())
        partial = math.fsum(pieces)
        decreasing = np.all(np.diff(la) < 0)
        last = abs(terms[-1])
        if decreasing and last <= tol * max(1.0, abs(partial)):
            break
        start += _CHUNK
        if start >= max_terms:
            raise ConvergenceError(
                f"Mittag-Leffler series did not converge in {max_terms} terms (z={z})"
            )
    log_abs = np.concatenate(logs)
    amplitude = float(np.exp(log_abs.max()))
    if negative and amplitude > safe_amplitude:
        raise ConvergenceError(
            f"|z|={abs(z):g} is outside the series-safe radius for alpha={alpha}"
        )
    ratio = math.exp(log_abs[-1] - log_abs[-2])
    tail = abs(pieces[-1]) * ratio / (1.0 - ratio) if ratio < 1 else abs(pieces[-1])
    bound = tail + _rounding_bound(log_abs)
    return SeriesValue(float(partial), float(bound), len(pieces))


# ---------------------------------------------------------------------------
# Derivatives of E_{alpha,1}(-c^beta t^alpha) in the rate c
# ---------------------------------------------------------------------------


def _ml_envelope_cutoff(alpha: float, x: float, log_tol: float, max_terms: int) -> int:
    """First index past the peak of ``x^i / Gamma(alpha i + 1)`` below ``tol``."""
    if x == 0.0:
        return 1
    log_x = math.log(x)
    start = 0
    while start < max_terms:
        i = np.arange(start, start + 4 * _CHUNK, dtype=float)
        env = i * log_x - sc.gammaln(alpha * i + 1.0)
        d = np.diff(env, append=env[-1] + log_x - alpha * math.log(alpha * (i[-1] + 1) + 1))
        ok = np.nonzero((env < log_tol) & (d < 0))[0]
        if ok.size:
            return int(i[ok[0]]) + 1
        start += 4 * _CHUNK
    raise ConvergenceError(f"envelope did not decay within {max_terms} terms (x={x})")


def _binomial_cutoffs(
    alpha: float, beta: float, x: float, m: np.ndarray, base: int, log_tol: float, max_terms: int
) -> np.ndarray:
    """Per-``m`` last index needed for ``sum_i (-x)^i binom(beta i, m)/Gamma(alpha i+1)``.

    For ``beta i <= m`` the generalised binomial coefficient is bounded by
    one, so past ``base`` the plain Mittag-Leffler envelope (already below
    tolerance and decreasing) controls the terms.  The bound
    ``(beta i)^m / m!`` only exceeds one from ``i_a = (m!)^(1/m) / beta`` on;
    from there the envelope is followed until it is below tolerance and
    provably decreasing, i.e. ``log x - alpha log(alpha i + 1/2) + m/i < 0``.
    """
    cut = np.full(m.shape, base, dtype=np.int64)
    if x == 0.0:
        return cut
    log_x = math.log(x)
    lgm = sc.gammaln(m + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        i_a = np.where(m > 0, np.exp(lgm / np.maximum(m, 1.0)) / beta, np.inf)
    i = np.maximum(float(base), np.floor(i_a))
    active = np.isfinite(i)
    exceeded = np.zeros(m.shape, dtype=bool)
    while active.any():
        ii = i[active]
        mm = m[active]
        env = (
            ii * log_x
            - sc.gammaln(alpha * ii + 1.0)
            + np.maximum(0.0, mm * np.log(beta * ii) - lgm[active])
        )
        slope = log_x - alpha * np.log(alpha * ii + 0.5) + mm / ii
        high = env >= log_tol
        exc = exceeded[active] | high
        exceeded[active] = exc
        done = (~high) & (slope < 0)
        idx = np.nonzero(active)[0]
        fin = idx[done]
        cut[fin] = np.where(exc[done], ii[done], base).astype(np.int64)
        active[fin] = False
        if np.any(ii[~done] > max_terms):
            raise ConvergenceError("derivative series did not decay in time")
        i[active] += 1.0
    return cut


def _binomial_series(
    alpha: float,
    beta: float,
    x: float,
    m: np.ndarray,
    *,
    shift: float = 0.0,
    first: int = 0,
    tol: float = 1e-17,
    max_terms: int = 200000,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised ``sum_{i>=first} (-x)^i (-1)^m binom(beta i + shift, m) / Gamma(alpha i + 1)``.

    Returns values, truncation bounds and the number of terms used per ``m``.
    ``shift`` is 0 for point probabilities and -1 for the survival series.
    """
    m = np.asarray(m, dtype=float)
    log_tol = math.log(tol)
    base = _ml_envelope_cutoff(alpha, x, log_tol, max_terms)
    cuts = _binomial_cutoffs(alpha, beta, x, m, base, log_tol, max_terms)
    values = np.empty(m.shape)
    bounds = np.empty(m.shape)
    if x == 0.0:
        # Only the i = 0 term survives.
        values[:] = np.where(m == 0, 1.0, 0.0) if first == 0 else 0.0
        bounds[:] = 0.0
        return values, bounds, np.ones(m.shape, dtype=np.int64)
    log_x = math.log(x)
    order = np.argsort(cuts, kind="stable")
    # Process m values in blocks that share a similar cutoff to bound memory.
    block = 2048
    for lo in range(0, m.size, block):
        idx = order[lo : lo + block]
        full_cut = cuts[idx].copy()
        block_cut, skipped = _block_cutoff(alpha, beta, log_x, m[idx], full_cut, shift, first, log_tol)
        cuts[idx] = np.minimum(full_cut, block_cut)
        mm = m[idx][:, None]
        n_terms = int(cuts[idx].max()) + 1
        i = np.arange(first, max(n_terms, first + 1), dtype=float)[None, :]
        r = _snap(beta * i + shift)
        la, sign, pole, size = _binomial_terms(alpha, log_x, i, r, mm)
        la = np.where(pole, -np.inf, la)
        within = i <= cuts[idx][:, None]
        la = np.where(within, la, -np.inf)
        terms = np.where(np.isfinite(la), sign * np.exp(la), 0.0)
        plain = terms.sum(axis=1)
        mass = np.abs(terms).sum(axis=1)
        values[idx] = plain
        mags = np.where(np.isfinite(la), np.abs(terms) * (8.0 + size), 0.0)
        bounds[idx] = _EPS * (mags.sum(axis=1) + terms.shape[1] * mass)
        # Rows with cancellation are re-summed exactly.
        for row in np.nonzero(mass > 4.0 * np.abs(plain))[0]:
            values[idx[row]] = math.fsum(terms[row])
            bounds[idx[row]] = _EPS * float(np.sum(np.where(np.isfinite(la[row]), np.abs(terms[row]) * (8.0 + size[row]), 0.0)))
        # Rows whose terms are too large for double precision to resolve the
        # sum are redone in extended precision.
        # Both series are probabilities, so |value| > 1 also signals lost digits.
        top = np.abs(terms).max(axis=1)
        noise = _EPS * top * terms.shape[1]
        lost = (
            ~np.isfinite(values[idx])
            | ~np.isfinite(top)
            | (np.abs(values[idx]) > 1.0 + 1e-12)
            | (np.maximum(bounds[idx], noise) > np.maximum(_REFINE_REL * np.abs(values[idx]), _REFINE_ABS))
        )
        for row in np.nonzero(lost)[0]:
            k = idx[row]
            values[k], bounds[k] = _binomial_row_mp(
                alpha, beta, x, int(m[k]), shift, first, int(cuts[k]), float(la[row].max())
            )
        # Tail beyond the regular cutoff: envelope at cut+1 with a geometric
        # factor; ``skipped`` covers the terms dropped before it.
        c1 = full_cut + 1.0
        env = (
            c1 * log_x
            - sc.gammaln(alpha * c1 + 1.0)
            + np.maximum(0.0, m[idx] * np.log(beta * c1) - sc.gammaln(m[idx] + 1.0))
        )
        bounds[idx] += 2.0 * np.exp(env) + skipped
    return values, bounds, cuts + 1 - first


#: Smallest ``m - r`` handled by the cancellation-free log-gamma difference.
_LARGE_SHIFT = 10.0
# Stirling coefficients B_{2k} / (2k (2k - 1)) for k = 1..7.
_STIRLING = (1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188, -691 / 360360, 1 / 156)


def _log_gamma_ratio(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``log Gamma(a + b) - log Gamma(a)`` for ``a >= 10``, without cancellation.

    The Stirling series is differenced term by term; with six correction
    terms the omitted remainder is below ``2e-15`` at ``a = 10`` and falls
    like ``a^-13``.
    """
    a = np.asarray(a, dtype=float)
    ab = a + b
    out = (a - 0.5) * np.log1p(b / a) + b * np.log(ab) - b
    out = out - _STIRLING[0] * b / (a * ab)
    for k, c in enumerate(_STIRLING[1:6], start=2):
        out = out + c * (ab ** (1.0 - 2 * k) - a ** (1.0 - 2 * k))
    return out


def _binomial_terms(alpha: float, log_x: float, i: np.ndarray, r: np.ndarray, m: np.ndarray):
    """Log-magnitude, sign and pole mask of ``(-x)^i (-1)^m binom(r, m) / Gamma(alpha i + 1)``.

    Also returns, per term, the summed magnitude of the logarithms that
    were combined, which scales the floating point error of the exponent.
    Where ``m - r`` is large the coefficient is written as
    ``Gamma(m - r) / (Gamma(-r) m!)``: its sign is that of ``1/Gamma(-r)``
    and its log splits into a reflection part in ``r`` alone and a
    log-gamma difference free of the ``m log m`` cancellation.
    """
    i, r, m = np.broadcast_arrays(i, r, m)
    lead = i * log_x - sc.gammaln(alpha * i + 1.0)
    lead_size = np.abs(i * log_x) + np.abs(sc.gammaln(alpha * i + 1.0))
    odd_i = np.where(i % 2 == 1, -1.0, 1.0)
    large = (m - r) >= _LARGE_SHIFT
    la = np.empty(i.shape)
    sign = np.empty(i.shape)
    size = np.empty(i.shape)
    pole = np.zeros(i.shape, dtype=bool)
    with np.errstate(invalid="ignore", divide="ignore"):
        if large.any():
            rl, ml = r[large], m[large]
            frac = rl - np.rint(rl)
            sin = np.abs(np.sin(np.pi * frac))
            refl = sc.gammaln(rl + 1.0) + np.log(sin) - math.log(math.pi)
            diff = _log_gamma_ratio(ml - rl, rl + 1.0)
            la[large] = lead[large] + refl - diff
            sign[large] = odd_i[large] * sc.gammasgn(-rl)
            pole[large] = frac == 0.0
            size[large] = lead_size[large] + np.abs(sc.gammaln(rl + 1.0)) + np.abs(np.log(sin)) + 2.0 + np.abs(diff)
        small = ~large
        if small.any():
            rs, ms = r[small], m[small]
            arg = rs - ms + 1.0
            parts = (sc.gammaln(rs + 1.0), sc.gammaln(ms + 1.0), sc.gammaln(arg))
            la[small] = lead[small] + parts[0] - parts[1] - parts[2]
            sg = sc.gammasgn(arg) * sc.gammasgn(rs + 1.0)
            sign[small] = sg * np.where((i[small] + ms) % 2 == 1, -1.0, 1.0)
            pole[small] = (arg <= 0) & (arg == np.rint(arg))
            size[small] = lead_size[small] + sum(np.abs(p) for p in parts)
    size = np.where(np.isfinite(size), size, 0.0)
    return la, sign, pole, size


def _block_cutoff(
    alpha: float,
    beta: float,
    log_x: float,
    m: np.ndarray,
    cuts: np.ndarray,
    shift: float,
    first: int,
    log_tol: float,
) -> tuple[int, float]:
    """Earlier cutoff for a block of large ``m``, and the bound on the terms it drops.

    For ``r > -1`` and ``m > r + 1`` the reflection formula gives
    ``|binom(r, m)| <= Gamma(r+1) Gamma(m-r) / (pi m!)``, which is
    decreasing in ``m``; for ``0 <= r <= m`` the coefficient is at most one
    and beyond that at most ``r^m/m!``.  Evaluating these at the smallest
    and largest ``m`` of the block bounds every term up to the regular
    cutoff, so the series can stop once the summed bound of the rest is
    below tolerance.
    """
    top = int(cuts.max())
    if top <= first:
        return top, 0.0
    m_lo, m_hi = float(m.min()), float(m.max())
    i = np.arange(first, top + 1, dtype=float)
    r = beta * i + shift
    # r^m/m! grows with m while m < r, so its block maximum sits at m = r.
    m_star = np.clip(r, m_lo, m_hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_g = np.where(
            r <= m_lo,
            0.0,
            np.maximum(0.0, m_star * np.log(np.maximum(r, 1e-300)) - sc.gammaln(m_star + 1.0)),
        )
        refl = sc.gammaln(r + 1.0) - math.log(math.pi) - _log_gamma_ratio(np.maximum(m_lo - r, _LARGE_SHIFT), r + 1.0)
    far = (r > -1.0) & (m_lo - r >= _LARGE_SHIFT)
    log_g = np.where(far, np.minimum(log_g, refl + 1e-9 * np.abs(refl) + 1e-12), log_g)
    env = np.exp(i * log_x - sc.gammaln(alpha * i + 1.0) + log_g)
    # rest[j] bounds the terms with index > i[j].
    rest = np.concatenate([np.cumsum(env[::-1])[::-1][1:], [0.0]])
    ok = np.nonzero(rest <= math.exp(log_tol))[0]
    j = int(ok[0])
    return int(i[j]), float(rest[j])


def _binomial_row_mp(
    alpha: float, beta: float, x: float, m: int, shift: float, first: int, cut: int, log_amp: float
) -> tuple[float, float]:
    """One row of :func:`_binomial_series` summed with mpmath.

    The largest term is tracked during the sum; the result is accepted once
    the working precision exceeds the digits lost to cancellation
    (``log10(max term) - log10(|sum|)``) by a fixed margin.
    """
    digits = 30 + max(0, int(math.ceil(log_amp / math.log(10))))
    for _ in range(6):
        with mpmath.workdps(digits):
            xm = mpmath.mpf(x)
            bm = mpmath.mpf(beta)
            am = mpmath.mpf(alpha)
            total = mpmath.mpf(0)
            biggest = mpmath.mpf(0)
            for i in range(first, cut + 1):
                # No snapping here: nudging r would break the cancellation.
                r = bm * i + shift
                term = (-xm) ** i * mpmath.rgamma(am * i + 1) * mpmath.binomial(r, m)
                total += term
                biggest = max(biggest, abs(term))
            if m % 2:
                total = -total
            value = float(total)
            lost = float(mpmath.log10(biggest)) if biggest > 0 else 0.0
            if abs(total) > 0:
                lost -= float(mpmath.log10(abs(total)))
            else:
                lost += 300.0
        if digits >= lost + 20:
            err = float(biggest) * 10.0 ** (5 - digits) * (cut + 1 - first)
            return value, err + abs(value) * _EPS
        digits = int(lost) + 25
    raise ConvergenceError("extended precision sum did not stabilise")


def count_pmf_series(
    alpha: float, beta: float, c: float, t: float, m, *, tol: float = 1e-17
) -> tuple[np.ndarray, np.ndarray]:
    """``(c^m/m!) (-d/dc)^m E_{alpha,1}(-c^beta t^alpha)`` for an array of ``m``.

    This is the probability that a space-time fractional Poisson count with
    rate ``c`` at time ``t`` equals ``m``.  Returns ``(values, bounds)``.
    """
    _check_alpha(alpha)
    _check_alpha(beta, "beta")
    m = np.atleast_1d(np.asarray(m, dtype=float))
    if np.any(m < 0):
        raise ValueError("m must be non-negative")
    x = (c**beta) * (t**alpha) if t > 0 else 0.0
    values, bounds, _ = _binomial_series(alpha, beta, x, m, tol=tol)
    return values, bounds


def count_survival_series(
    alpha: float, beta: float, c: float, t: float, m, *, tol: float = 1e-17
) -> tuple[np.ndarray, np.ndarray]:
    """``P(N > m)`` for the same count, via a closed partial-sum identity.

    Uses ``sum_{j<=M} (-1)^j binom(r, j) = (-1)^M binom(r-1, M)`` inside the
    point-probability series, which gives the survival function as a single
    series in ``i >= 1`` with no summation over states.
    """
    _check_alpha(alpha)
    _check_alpha(beta, "beta")
    m = np.atleast_1d(np.asarray(m, dtype=float))
    x = (c**beta) * (t**alpha) if t > 0 else 0.0
    if x == 0.0:
        return np.zeros(m.shape), np.zeros(m.shape)
    values, bounds, _ = _binomial_series(alpha, beta, x, m, shift=-1.0, first=1, tol=tol)
    return -values, bounds


def ml_derivative(
    alpha: float,
    beta: float,
    c: float,
    t: float,
    m: int,
    *,
    log_scale: float = 0.0,
    tol: float = 1e-17,
) -> SeriesValue:
    """``(-d/dc)^m E_{alpha,1}(-c^beta t^alpha)`` by term-wise differentiation.

    Term ``i`` of the result is
    ``(-t^alpha)^i (-1)^m Gamma(beta i + 1)/Gamma(beta i - m + 1) c^(beta i - m) / Gamma(alpha i + 1)``;
    terms where ``beta i - m + 1`` is a pole of Gamma vanish.  The optional
    ``log_scale`` multiplies the result by ``exp(log_scale)`` before it is
    formed, which keeps very high orders representable.
    """
    _check_alpha(alpha)
    _check_alpha(beta, "beta")
    if m < 0 or int(m) != m:
        raise ValueError("m must be a non-negative integer")
    m = int(m)
    if c <= 0:
        if m == 0 and c == 0:
            return SeriesValue(math.exp(log_scale), 0.0, 1)
        raise ValueError("c must be positive")
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        # E(0) = 1 is constant in c.
        return SeriesValue(math.exp(log_scale) if m == 0 else 0.0, 0.0, 1)
    # The binomial series carries the factor c^m / m!; undo it in logs.
    log_pref = log_scale + math.lgamma(m + 1.0) - m * math.log(c)
    x = (c**beta) * (t**alpha)
    ms = np.array([float(m)])
    vals, bnds, used = _binomial_series(alpha, beta, x, ms, tol=tol)
    scale = math.exp(log_pref)
    return SeriesValue(float(vals[0] * scale), float(bnds[0] * scale), int(used[0]))


# ---------------------------------------------------------------------------
# Caputo derivative, compositions, multinomial
# ---------------------------------------------------------------------------


def caputo_derivative(f_values: Sequence[float], h: float, alpha: float) -> np.ndarray:
    """L1-scheme Caputo derivative of order ``alpha`` on a uniform grid.

    ``f_values[j]`` is ``f(j h)``.  Returns the derivative at every grid
    point; the value at ``t = 0`` is 0.  For ``alpha = 1`` this is the
    backward difference quotient.
    """
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must lie in (0, 1]")
    if h <= 0:
        raise ValueError("h must be positive")
    f = np.asarray(f_values, dtype=float)
    n = f.size
    out = np.zeros(n)
    if n < 2:
        return out
    df = np.diff(f)
    k = np.arange(n, dtype=float)
    # b_k = (k+1)^(1-alpha) - k^(1-alpha), with 0^(1-alpha) = 0 also at alpha = 1
    lower = np.where(k[:-1] > 0, k[:-1], 1.0) ** (1.0 - alpha)
    b = (k[1:]) ** (1.0 - alpha) - np.where(k[:-1] > 0, lower, 0.0)
    scale = 1.0 / (math.gamma(2.0 - alpha) * h**alpha)
    for N in range(1, n):
        # sum_{j=0}^{N-1} df[j] * b[N-1-j]
        out[N] = scale * np.dot(df[:N], b[N - 1 :: -1][:N])
    return out


def omega_compositions(k: int, n: int) -> Iterator[tuple[int, ...]]:
    """Enumerate ``(x_1,...,x_k)`` of non-negative integers with ``sum j x_j = n``.

    Vectors come out in descending lexicographic order.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if n < 0:
        raise ValueError("n must be non-negative")

    parts = [0] * k

    def rec(j: int, remaining: int) -> Iterator[tuple[int, ...]]:
        # j is a 0-based position for jump size j + 1
        if j == k - 1:
            size = k
            if remaining % size == 0:
                parts[j] = remaining // size
                yield tuple(parts)
            return
        size = j + 1
        for x in range(remaining // size, -1, -1):
            parts[j] = x
            yield from rec(j + 1, remaining - size * x)
        parts[j] = 0

    yield from rec(0, n)


def multinomial(n: int, parts: Sequence[int]) -> int:
    """``n! / prod(x_j!)`` for parts summing to ``n``."""
    if any(p < 0 for p in parts) or sum(parts) != n:
        raise ValueError("parts must be non-negative and sum to n")
    out = 1
    remaining = n
    for p in parts:
        out *= math.comb(remaining, p)
        remaining -= p
    return out
