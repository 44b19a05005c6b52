"""Samplers for stable, inverse stable and tempered stable subordinators.

Every sampler takes an ``rng`` argument that may be an :class:`RngStream`,
a :class:`numpy.random.Generator` or a plain integer seed.  Path samplers
accept ``n_paths``; when it is ``None`` a single path is returned with 1-d
values, otherwise ``values`` has shape ``(n_paths, len(grid))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "RngStream",
    "TimeGrid",
    "SubordinatorPath",
    "as_generator",
    "stable_increment",
    "stable_path",
    "inverse_stable_path",
    "inverse_stable_sample",
    "tempered_stable_increment",
    "tempered_stable_path",
    "composed_time_change",
    "composed_sample",
]


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by ``(seed, stream_id)``.

    Distinct stream ids give statistically independent generators through
    :class:`numpy.random.SeedSequence` spawn keys.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "RngStream":
        """A derived stream, independent of this one and of other children."""
        return RngStream(self.seed, self.stream_id * 1_000_003 + 1 + index)


RngLike = Union[RngStream, np.random.Generator, int]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return np.random.default_rng(int(rng))
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``0, h, 2h, ...``."""

    t_points: np.ndarray
    h: float

    def __post_init__(self) -> None:
        t = np.asarray(self.t_points, dtype=float)
        if t.ndim != 1 or t.size < 1 or t[0] != 0.0:
            raise ValueError("grid must be a 1-d array starting at 0")
        if self.h <= 0:
            raise ValueError("grid step must be positive")
        if t.size > 1 and not np.allclose(np.diff(t), self.h, rtol=1e-9, atol=1e-12):
            raise ValueError("grid must be uniform with step h")
        object.__setattr__(self, "t_points", t)

    @classmethod
    def uniform(cls, t_max: float, h: float) -> "TimeGrid":
        if t_max < 0 or h <= 0:
            raise ValueError("need t_max >= 0 and h > 0")
        n = int(round(t_max / h))
        if not math.isclose(n * h, t_max, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError("t_max must be a multiple of h")
        return cls(np.arange(n + 1) * h, h)

    @property
    def t_max(self) -> float:
        return float(self.t_points[-1])

    def __len__(self) -> int:
        return int(self.t_points.size)


@dataclass(frozen=True)
class SubordinatorPath:
    grid: TimeGrid
    values: np.ndarray


def _standard_stable(beta: float, size, gen: np.random.Generator) -> np.ndarray:
    """Unit-time positive stable variates with Laplace transform ``exp(-s^beta)``."""
    shape = (size,) if isinstance(size, (int, np.integer)) else tuple(size)
    n = int(np.prod(shape)) if shape else 1
    u = gen.uniform(0.0, math.pi, n)
    v = gen.standard_exponential(n)
    bad = (u <= 0.0) | (v <= 0.0)
    while bad.any():
        k = int(bad.sum())
        u[bad] = gen.uniform(0.0, math.pi, k)
        v[bad] = gen.standard_exponential(k)
        bad = (u <= 0.0) | (v <= 0.0)
    b = beta
    log_x = (
        np.log(np.sin(b * u))
        + ((1.0 - b) / b) * np.log(np.sin((1.0 - b) * u))
        - np.log(np.sin(u)) / b
        - ((1.0 - b) / b) * np.log(v)
    )
    return np.exp(log_x).reshape(shape)


def stable_increment(beta: float, h, rng: RngLike, size=None):
    """Increment of a ``beta``-stable subordinator over a duration ``h``.

    Uses the Chambers-Mallows-Stuck representation with ``U ~ U(0, pi)`` and
    ``V ~ Exp(1)``.  ``h`` may be an array; zero durations give zero.
    """
    if not (0.0 < beta < 1.0):
        raise ValueError("beta must lie in (0, 1)")
    gen = as_generator(rng)
    h_arr = np.asarray(h, dtype=float)
    if np.any(h_arr < 0):
        raise ValueError("h must be non-negative")
    shape = h_arr.shape
    if size is not None:
        shape = np.broadcast_shapes(shape, tuple(np.atleast_1d(size)))
    x = _standard_stable(beta, shape, gen) * h_arr ** (1.0 / beta)
    return float(x) if x.ndim == 0 else x


def _paths_shape(grid: TimeGrid, n_paths):
    steps = len(grid) - 1
    return (steps,) if n_paths is None else (int(n_paths), steps)


def _cumulate(increments: np.ndarray) -> np.ndarray:
    zero = np.zeros(increments.shape[:-1] + (1,))
    return np.concatenate([zero, np.cumsum(increments, axis=-1)], axis=-1)


def stable_path(beta: float, grid: TimeGrid, rng: RngLike, n_paths=None) -> SubordinatorPath:
    """Cumulative sum of i.i.d. stable increments over the grid cells."""
    gen = as_generator(rng)
    inc = _standard_stable(beta, _paths_shape(grid, n_paths), gen) * grid.h ** (1.0 / beta)
    return SubordinatorPath(grid, _cumulate(inc))


def _tilted(beta: float, theta: float, h: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    """Exponentially tilted stable variates by rejection, one per entry of ``h``."""
    out = np.zeros(h.shape)
    pending = np.nonzero(h.ravel() > 0)[0]
    flat_h = h.ravel()
    flat = out.ravel()
    scale = flat_h ** (1.0 / beta)
    while pending.size:
        x = _standard_stable(beta, pending.size, gen) * scale[pending]
        accept = gen.uniform(size=pending.size) < np.exp(-theta * x)
        flat[pending[accept]] = x[accept]
        pending = pending[~accept]
    return flat.reshape(h.shape)


def tempered_stable_increment(beta: float, theta: float, h, rng: RngLike, size=None):
    """Increment of the tempered stable subordinator over a duration ``h``.

    A stable draw ``X`` over ``h`` is accepted when ``U < exp(-theta X)``;
    the accepted law has Laplace transform ``exp(-h((theta+s)^beta - theta^beta))``.
    The expected number of proposals per increment is ``exp(theta^beta h)``.
    """
    if not (0.0 < beta < 1.0):
        raise ValueError("beta must lie in (0, 1)")
    if theta <= 0:
        raise ValueError("theta must be positive")
    gen = as_generator(rng)
    h_arr = np.asarray(h, dtype=float)
    if size is not None:
        h_arr = np.broadcast_to(h_arr, tuple(np.atleast_1d(size)))
    if np.any(h_arr < 0):
        raise ValueError("h must be non-negative")
    x = _tilted(beta, theta, np.array(h_arr, dtype=float), gen)
    return float(x) if x.ndim == 0 else x


def tempered_stable_path(
    beta: float, theta: float, grid: TimeGrid, rng: RngLike, n_paths=None
) -> SubordinatorPath:
    gen = as_generator(rng)
    h = np.full(_paths_shape(grid, n_paths), grid.h)
    return SubordinatorPath(grid, _cumulate(_tilted(beta, theta, h, gen)))


def _hitting_counts(d: np.ndarray, h: float, n_times: int) -> np.ndarray:
    """Per row, ``#{j : d[j] <= i h}`` for ``i = 0..n_times-1``.

    Each value is binned at the first grid index it does not exceed and
    the per-row histograms are accumulated.
    """
    rows = d.shape[0]
    idx = np.ceil(d / h).astype(np.int64)
    keep = idx < n_times
    flat = (np.arange(rows)[:, None] * n_times + idx)[keep]
    hist = np.bincount(flat, minlength=rows * n_times).reshape(rows, n_times)
    return np.cumsum(hist, axis=1)


def inverse_stable_path(
    alpha: float, grid: TimeGrid, rng: RngLike, n_paths=None, h: float | None = None
) -> SubordinatorPath:
    """Inverse ``alpha``-stable subordinator by hitting times of a simulated stable path.

    A stable path ``D`` is simulated at resolution ``h`` (the grid step by
    default) until it exceeds the last grid time, and
    ``Y(t) = h * max{j : D(j h) <= t}``.  So ``D(Y(t)) <= t < D(Y(t) + h)``
    and ``Y(0) = 0``.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    gen = as_generator(rng)
    h_inv = grid.h if h is None else float(h)
    t_max = grid.t_max
    n = 1 if n_paths is None else int(n_paths)
    out = np.zeros((n, len(grid)))
    if t_max == 0.0:
        return SubordinatorPath(grid, out[0] if n_paths is None else out)
    step = h_inv ** (1.0 / alpha)
    # Expected number of steps is about E[Y(t_max)]/h; simulate in blocks.
    block = max(64, int(1.25 * t_max**alpha / math.gamma(1 + alpha) / h_inv) + 1)
    batch = max(1, int(4_000_000 // block))
    for lo in range(0, n, batch):
        rows = min(batch, n - lo)
        level = np.zeros(rows)
        counts = np.zeros((rows, len(grid)), dtype=np.int64)
        active = np.arange(rows)
        while active.size:
            inc = _standard_stable(alpha, (active.size, block), gen) * step
            d = level[active, None] + np.cumsum(inc, axis=1)
            counts[active] += _hitting_counts(d, grid.h, len(grid))
            level[active] = d[:, -1]
            active = active[level[active] <= t_max]
        out[lo : lo + rows] = counts * h_inv
    return SubordinatorPath(grid, out[0] if n_paths is None else out)


def inverse_stable_sample(alpha: float, t: float, rng: RngLike, size=None):
    """Exact draws of ``Y_alpha(t)`` using ``Y(t) = (t / D(1))^alpha`` in law."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    gen = as_generator(rng)
    n = 1 if size is None else size
    y = (t / _standard_stable(alpha, n, gen)) ** alpha
    return float(y[0]) if size is None else y


def _clock_increments(beta: float, theta: float, dy: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    if beta == 1.0:
        return dy
    if theta > 0:
        return _tilted(beta, theta, dy, gen)
    return _standard_stable(beta, dy.shape, gen) * dy ** (1.0 / beta)


def composed_time_change(
    alpha: float,
    beta: float,
    grid: TimeGrid,
    rng: RngLike,
    n_paths=None,
    theta: float = 0.0,
    h: float | None = None,
) -> SubordinatorPath:
    """Path of ``D_beta(Y_alpha(t))`` (or its tempered analogue when ``theta > 0``).

    ``Y_alpha`` is sampled first; the outer subordinator then receives one
    increment per grid cell over the random duration ``Y(t_i) - Y(t_{i-1})``.
    ``alpha = 1`` means ``Y(t) = t`` and ``beta = 1`` means ``D(s) = s``.
    """
    if not (0.0 < alpha <= 1.0 and 0.0 < beta <= 1.0):
        raise ValueError("alpha and beta must lie in (0, 1]")
    gen = as_generator(rng)
    if alpha == 1.0:
        shape = (len(grid),) if n_paths is None else (int(n_paths), len(grid))
        y = np.broadcast_to(grid.t_points, shape).copy()
    else:
        y = inverse_stable_path(alpha, grid, gen, n_paths=n_paths, h=h).values
    dy = np.diff(y, axis=-1)
    return SubordinatorPath(grid, _cumulate(_clock_increments(beta, theta, dy, gen)))


def composed_sample(
    alpha: float, beta: float, t: float, rng: RngLike, size: int, theta: float = 0.0
) -> np.ndarray:
    """Exact draws of the operational time ``D_beta(Y_alpha(t))`` at a single ``t``."""
    gen = as_generator(rng)
    if alpha == 1.0:
        y = np.full(size, float(t))
    else:
        y = inverse_stable_sample(alpha, t, gen, size=size)
    return _clock_increments(beta, theta, y, gen)
