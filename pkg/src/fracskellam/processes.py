"""Samplers for generalized counting and Skellam processes and their time changes.

A :class:`ProcessSpec` describes the family.  The operational clock is
``D_beta(Y_alpha(t))`` (tempered when ``theta > 0``).  Up and down jump
streams of a Skellam process either share one clock (``clock="shared"``,
the default) or run on two independent copies of it
(``clock="independent"``).  The two choices give the same law only when
``alpha = beta = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .subordinators import (
    RngLike,
    TimeGrid,
    as_generator,
    composed_sample,
    composed_time_change,
)

__all__ = [
    "ConfigError",
    "RateVector",
    "ProcessSpec",
    "CountPath",
    "SamplePath",
    "gcp_count",
    "operational_clock",
    "process_path",
    "process_sample",
    "running_average_path",
    "weighted_sum_sample",
]

FAMILIES = ("counting", "skellam")
CLOCKS = ("shared", "independent")


class ConfigError(ValueError):
    """Inconsistent or invalid process configuration."""


@dataclass(frozen=True)
class RateVector:
    """Jump rates ``(lambda_1, ..., lambda_k)``; entry ``j-1`` is the rate of jumps of size ``j``."""

    rates: tuple[float, ...]

    def __post_init__(self) -> None:
        r = tuple(float(x) for x in self.rates)
        if len(r) < 1:
            raise ConfigError("a rate vector needs at least one entry")
        if any(x < 0 or not np.isfinite(x) for x in r):
            raise ConfigError("rates must be finite and non-negative")
        if not any(x > 0 for x in r):
            raise ConfigError("at least one rate must be positive")
        object.__setattr__(self, "rates", r)

    @property
    def k(self) -> int:
        return len(self.rates)

    @property
    def total(self) -> float:
        return float(sum(self.rates))

    @property
    def sizes(self) -> np.ndarray:
        return np.arange(1, self.k + 1)

    @property
    def first_moment(self) -> float:
        """``sum_j j lambda_j``."""
        return float(np.dot(self.sizes, self.rates))

    @property
    def second_moment(self) -> float:
        """``sum_j j^2 lambda_j``."""
        return float(np.dot(self.sizes**2, self.rates))

    def jump_pmf(self) -> np.ndarray:
        """Probabilities of jump sizes ``0..k`` (index 0 is always 0)."""
        p = np.zeros(self.k + 1)
        p[1:] = np.asarray(self.rates) / self.total
        return p


def _rates(r) -> RateVector:
    return r if isinstance(r, RateVector) else RateVector(tuple(r))


@dataclass(frozen=True)
class ProcessSpec:
    family: str
    alpha: float = 1.0
    beta: float = 1.0
    theta: float = 0.0
    up_rates: RateVector = field(default_factory=lambda: RateVector((1.0,)))
    down_rates: Optional[RateVector] = None
    clock: str = "shared"

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.clock not in CLOCKS:
            raise ConfigError(f"clock must be one of {CLOCKS}, got {self.clock!r}")
        for name in ("alpha", "beta"):
            v = float(getattr(self, name))
            if not (0.0 < v <= 1.0):
                raise ConfigError(f"{name} must lie in (0, 1], got {v}")
            object.__setattr__(self, name, v)
        theta = float(self.theta)
        if theta < 0:
            raise ConfigError("theta must be non-negative")
        if theta > 0 and self.beta == 1.0:
            raise ConfigError("tempering needs beta < 1")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "up_rates", _rates(self.up_rates))
        if self.family == "skellam":
            if self.down_rates is None:
                raise ConfigError("skellam family needs down rates")
            down = _rates(self.down_rates)
            if down.k != self.up_rates.k:
                raise ConfigError("up and down rate vectors must have the same length")
            object.__setattr__(self, "down_rates", down)
        elif self.down_rates is not None:
            raise ConfigError("counting family takes no down rates")

    @classmethod
    def counting(cls, rates: Sequence[float], alpha=1.0, beta=1.0, theta=0.0) -> "ProcessSpec":
        return cls("counting", alpha, beta, theta, RateVector(tuple(rates)))

    @classmethod
    def skellam(
        cls,
        up: Sequence[float],
        down: Sequence[float],
        alpha=1.0,
        beta=1.0,
        theta=0.0,
        clock="shared",
    ) -> "ProcessSpec":
        return cls("skellam", alpha, beta, theta, RateVector(tuple(up)), RateVector(tuple(down)), clock)

    @property
    def k(self) -> int:
        return self.up_rates.k

    @property
    def is_skellam(self) -> bool:
        return self.family == "skellam"

    @property
    def drift(self) -> float:
        """``sum_j j (lambda_j - mu_j)`` (or ``sum_j j lambda_j`` for counting)."""
        d = self.up_rates.first_moment
        if self.is_skellam:
            d -= self.down_rates.first_moment
        return d

    def swapped(self) -> "ProcessSpec":
        """The Skellam spec with up and down rates exchanged."""
        if not self.is_skellam:
            raise ConfigError("only Skellam specs can be swapped")
        return ProcessSpec(
            "skellam", self.alpha, self.beta, self.theta, self.down_rates, self.up_rates, self.clock
        )

    def replace(self, **changes) -> "ProcessSpec":
        data = {
            "family": self.family,
            "alpha": self.alpha,
            "beta": self.beta,
            "theta": self.theta,
            "up_rates": self.up_rates,
            "down_rates": self.down_rates,
            "clock": self.clock,
        }
        data.update(changes)
        return ProcessSpec(**data)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "alpha": self.alpha,
            "beta": self.beta,
            "theta": self.theta,
            "up_rates": list(self.up_rates.rates),
            "down_rates": None if self.down_rates is None else list(self.down_rates.rates),
            "clock": self.clock,
        }


@dataclass(frozen=True)
class CountPath:
    """Integer-valued path on a grid; ``clock`` holds the operational time path(s)."""

    grid: TimeGrid
    values: np.ndarray
    clock: Optional[np.ndarray] = None


@dataclass(frozen=True)
class SamplePath:
    grid: TimeGrid
    values: np.ndarray


def gcp_count(up_rates, elapsed, rng: RngLike) -> np.ndarray | int:
    """Generalized counting process value after operational time ``elapsed``.

    Draws ``N ~ Poisson(Lambda tau)`` and ``N`` i.i.d. jump sizes with
    ``P(j) = lambda_j / Lambda``.  ``elapsed`` may be an array.
    """
    rates = _rates(up_rates)
    gen = as_generator(rng)
    tau = np.asarray(elapsed, dtype=float)
    if np.any(tau < 0):
        raise ValueError("elapsed operational time must be non-negative")
    n = np.asarray(gen.poisson(rates.total * tau))
    if rates.k == 1:
        out = n
    else:
        p = np.asarray(rates.rates) / rates.total
        counts = gen.multinomial(n.ravel(), p)
        out = (counts @ rates.sizes).reshape(tau.shape)
    out = np.asarray(out, dtype=np.int64)
    return int(out) if out.ndim == 0 else out


def operational_clock(spec: ProcessSpec, grid: TimeGrid, rng: RngLike, n_paths=None, h=None) -> np.ndarray:
    """Path(s) of ``D_beta(Y_alpha(t))`` for the indices of ``spec``."""
    gen = as_generator(rng)
    if spec.alpha == 1.0 and spec.beta == 1.0:
        shape = (len(grid),) if n_paths is None else (int(n_paths), len(grid))
        return np.broadcast_to(grid.t_points, shape).copy()
    return composed_time_change(
        spec.alpha, spec.beta, grid, gen, n_paths=n_paths, theta=spec.theta, h=h
    ).values


def _counts_on_clock(rates: RateVector, clock: np.ndarray, gen) -> np.ndarray:
    d_tau = np.diff(clock, axis=-1)
    inc = gcp_count(rates, d_tau, gen)
    zero = np.zeros(np.shape(inc)[:-1] + (1,), dtype=np.int64)
    return np.concatenate([zero, np.cumsum(inc, axis=-1)], axis=-1)


def process_path(
    spec: ProcessSpec, grid: TimeGrid, rng: RngLike, n_paths=None, h=None
) -> CountPath:
    """Simulate the process on ``grid``.

    The operational time path is simulated first; each grid cell then
    receives a compound Poisson increment over its operational duration.
    With ``clock="independent"`` the down stream gets its own clock, and
    ``CountPath.clock`` stacks both clock paths along a leading axis.
    """
    gen = as_generator(rng)
    clock = operational_clock(spec, grid, gen, n_paths, h)
    up = _counts_on_clock(spec.up_rates, clock, gen)
    if not spec.is_skellam:
        return CountPath(grid, up, clock)
    if spec.clock == "independent":
        clock2 = operational_clock(spec, grid, gen, n_paths, h)
        down = _counts_on_clock(spec.down_rates, clock2, gen)
        return CountPath(grid, up - down, np.stack([clock, clock2]))
    down = _counts_on_clock(spec.down_rates, clock, gen)
    return CountPath(grid, up - down, clock)


def process_sample(spec: ProcessSpec, t: float, rng: RngLike, size: int) -> np.ndarray:
    """Exact draws of the process at the single time ``t`` (no grid)."""
    gen = as_generator(rng)
    tau = composed_sample(spec.alpha, spec.beta, t, gen, size, spec.theta)
    up = gcp_count(spec.up_rates, tau, gen)
    if not spec.is_skellam:
        return np.asarray(up)
    if spec.clock == "independent":
        tau = composed_sample(spec.alpha, spec.beta, t, gen, size, spec.theta)
    return np.asarray(up) - np.asarray(gcp_count(spec.down_rates, tau, gen))


def running_average_path(path: CountPath, rule: str = "trapezoid") -> SamplePath:
    """``(1/t) int_0^t X(s) ds`` from the grid values; the average at ``t = 0`` is 0.

    ``rule="step"`` integrates the grid values as a right-continuous step
    function (value ``X(t_i)`` on ``[t_i, t_{i+1})``), which is exact when
    every jump sits on a grid point.  ``rule="trapezoid"`` (the default)
    suits simulated paths, whose jumps fall inside the cells: for a Levy
    process the jump times in a cell are uniform given its endpoint
    values, so the trapezoidal rule carries no first-order bias while the
    step rule lags by half a cell.
    """
    grid = path.grid
    if len(grid) < 2:
        raise ValueError("running average needs at least two grid points")
    v = np.asarray(path.values, dtype=float)
    if rule == "trapezoid":
        cells = 0.5 * (v[..., :-1] + v[..., 1:])
    elif rule == "step":
        cells = v[..., :-1]
    else:
        raise ValueError("rule must be 'trapezoid' or 'step'")
    area = np.cumsum(cells * grid.h, axis=-1)
    avg = np.zeros(v.shape)
    avg[..., 1:] = area / grid.t_points[1:]
    return SamplePath(grid, avg)


def weighted_sum_sample(spec: ProcessSpec, t: float, rng: RngLike, size: int | None = None):
    """``sum_j j S_j(tau)`` for independent Skellam counts on one shared operational time."""
    if not spec.is_skellam:
        raise ConfigError("weighted sum representation needs a Skellam spec")
    gen = as_generator(rng)
    n = 1 if size is None else int(size)
    tau = composed_sample(spec.alpha, spec.beta, t, gen, n, spec.theta)
    lam = np.asarray(spec.up_rates.rates)[:, None]
    mu = np.asarray(spec.down_rates.rates)[:, None]
    s = gen.poisson(lam * tau[None, :]) - gen.poisson(mu * tau[None, :])
    out = (spec.up_rates.sizes[:, None] * s).sum(axis=0).astype(np.int64)
    return int(out[0]) if size is None else out
