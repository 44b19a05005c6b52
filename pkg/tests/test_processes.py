import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fracskellam.processes import (
    ConfigError,
    CountPath,
    ProcessSpec,
    RateVector,
    gcp_count,
    process_path,
    process_sample,
    running_average_path,
    weighted_sum_sample,
)
from fracskellam.subordinators import RngStream, TimeGrid
from fracskellam.validation import chi_square, empirical_pmf, total_variation

N = 100_000


# ---------------------------------------------------------------------------
# Specs
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "make",
    [
        lambda: ProcessSpec.counting((1.0,), alpha=0.0),
        lambda: ProcessSpec.counting((1.0,), beta=1.2),
        lambda: ProcessSpec.counting((1.0,), theta=-1.0),
        lambda: ProcessSpec.counting((1.0,), theta=1.0),
        lambda: ProcessSpec.skellam((1.0, 2.0), (1.0,)),
        lambda: ProcessSpec("counting", 1.0, 1.0, 0.0, RateVector((1.0,)), RateVector((1.0,))),
        lambda: ProcessSpec("skellam", 1.0, 1.0, 0.0, RateVector((1.0,)), None),
        lambda: ProcessSpec.skellam((1.0,), (1.0,), clock="sometimes"),
        lambda: ProcessSpec("poisson"),
        lambda: RateVector((-1.0,)),
        lambda: RateVector((0.0, 0.0)),
        lambda: RateVector(()),
    ],
)
def test_invalid_specs_are_rejected(make):
    with pytest.raises(ConfigError):
        make()


def test_rate_vector_moments_and_drift():
    r = RateVector((1.0, 3.0, 2.0, 2.0, 2.0))
    assert r.total == 10.0 and r.first_moment == 31.0 and r.second_moment == 1 + 12 + 18 + 32 + 50
    np.testing.assert_allclose(r.jump_pmf(), [0.0, 0.1, 0.3, 0.2, 0.2, 0.2])
    s = ProcessSpec.skellam((1.0, 2.0), (2.0, 1.0))
    assert s.drift == 5.0 - 4.0
    assert s.swapped().drift == -1.0
    assert s.replace(alpha=0.5).alpha == 0.5
    assert ProcessSpec.skellam((1.0,), (2.0,)).to_dict()["down_rates"] == [2.0]


# ---------------------------------------------------------------------------
# Counting increments
# ---------------------------------------------------------------------------


def test_gcp_count_poisson_case():
    x = gcp_count((2.0,), np.ones(N), RngStream(1))
    p0 = np.mean(x == 0)
    assert abs(p0 - math.exp(-2.0)) <= 4 * math.sqrt(p0 * (1 - p0) / N)
    p3 = np.mean(x == 3)
    assert stats.poisson.pmf(3, 2.0) == pytest.approx(0.180447, abs=1e-6)
    assert abs(p3 - 0.180447) <= 4 * math.sqrt(p3 * (1 - p3) / N)


def test_gcp_count_compound_mean():
    rates = (1.0, 3.0, 2.0, 2.0, 2.0)
    x = gcp_count(rates, np.ones(N), RngStream(2))
    assert abs(x.mean() - 31.0) <= 4 * x.std() / math.sqrt(N)


def test_gcp_count_scalar_and_validation():
    assert isinstance(gcp_count((1.0,), 0.5, RngStream(3)), int)
    assert gcp_count((1.0, 1.0), 0.0, RngStream(3)) == 0
    with pytest.raises(ValueError):
        gcp_count((1.0,), -1.0, RngStream(3))


# ---------------------------------------------------------------------------
# Paths and endpoint samples
# ---------------------------------------------------------------------------


def test_skellam_endpoint_matches_closed_law():
    spec = ProcessSpec.skellam((1.5,), (0.5,))
    x = process_sample(spec, 1.0, RngStream(4), N)
    emp = empirical_pmf(x)
    probs = stats.skellam.pmf(emp.states, 1.5, 0.5)
    _, pval = chi_square(emp.counts, probs / probs.sum())
    assert pval > 1e-4


def test_gsp_mean_zero_for_balanced_rates():
    x = process_sample(ProcessSpec.skellam((1.0,), (1.0,)), 1.0, RngStream(5), N)
    assert abs(x.mean()) <= 4 * x.std() / math.sqrt(N)


def test_gfcp_mean():
    spec = ProcessSpec.counting((1.0,), alpha=0.5)
    x = process_sample(spec, 1.0, RngStream(6), N).astype(float)
    assert abs(x.mean() - 1.0 / math.gamma(1.5)) <= 4 * x.std() / math.sqrt(N)


def test_counting_paths_are_non_decreasing():
    grid = TimeGrid.uniform(2.0, 0.01)
    spec = ProcessSpec.counting((1.0, 0.5), alpha=0.7, beta=0.8)
    path = process_path(spec, grid, RngStream(7), n_paths=50)
    assert path.values.shape == (50, 201)
    assert np.all(path.values[:, 0] == 0) and np.all(np.diff(path.values, axis=1) >= 0)


def test_independent_clock_paths_carry_both_clocks():
    grid = TimeGrid.uniform(1.0, 0.1)
    spec = ProcessSpec.skellam((1.0,), (1.0,), 0.6, 0.7, clock="independent")
    path = process_path(spec, grid, RngStream(8), n_paths=4)
    assert path.clock.shape == (2, 4, 11)
    assert not np.array_equal(path.clock[0], path.clock[1])


def test_gsp_increments_are_skellam():
    lam, mu, h = 2.0, 1.0, 0.1
    grid = TimeGrid.uniform(10.0, h)
    v = process_path(ProcessSpec.skellam((lam,), (mu,)), grid, RngStream(9), n_paths=200).values
    inc = np.diff(v, axis=1).ravel()
    emp = empirical_pmf(inc)
    probs = stats.skellam.pmf(emp.states, lam * h, mu * h)
    _, pval = chi_square(emp.counts, probs / probs.sum())
    assert pval > 1e-4


def test_swapped_spec_mirrors_the_law():
    spec = ProcessSpec.skellam((1.0, 0.5), (0.3, 0.2), 0.7, 0.8)
    a = process_sample(spec, 1.0, RngStream(10), N)
    b = process_sample(spec.swapped(), 1.0, RngStream(11), N)
    assert total_variation(empirical_pmf(a), empirical_pmf(-b)) < 0.02


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31), clock=st.sampled_from(["shared", "independent"]))
def test_paths_are_deterministic(seed, clock):
    grid = TimeGrid.uniform(1.0, 0.05)
    spec = ProcessSpec.skellam((1.0, 2.0), (0.5, 0.5), 0.6, 0.7, clock=clock)
    a = process_path(spec, grid, RngStream(seed), n_paths=3).values
    b = process_path(spec, grid, RngStream(seed), n_paths=3).values
    np.testing.assert_array_equal(a, b)


# ---------------------------------------------------------------------------
# Running average and weighted sum
# ---------------------------------------------------------------------------


def test_running_average_of_zero_path():
    grid = TimeGrid.uniform(1.0, 0.1)
    avg = running_average_path(CountPath(grid, np.zeros(11, dtype=np.int64)))
    np.testing.assert_array_equal(avg.values, 0.0)


def test_running_average_of_single_jump():
    # A unit jump at t/2 averages to exactly 1/2 when integrated as a step function.
    grid = TimeGrid.uniform(1.0, 0.1)
    values = (grid.t_points >= 0.5 - 1e-12).astype(np.int64)
    path = CountPath(grid, values)
    assert running_average_path(path, rule="step").values[-1] == pytest.approx(0.5, abs=1e-12)
    # The trapezoidal rule spreads the jump over its cell.
    assert running_average_path(path).values[-1] == pytest.approx(0.5 + 0.1 / 2, abs=1e-12)
    with pytest.raises(ValueError):
        running_average_path(path, rule="simpson")
    with pytest.raises(ValueError):
        running_average_path(CountPath(TimeGrid.uniform(0.0, 0.1), np.zeros(1)))


def test_running_average_trapezoid_is_unbiased_for_poisson():
    # E[(1/t) int_0^t N(s) ds] = lambda t / 2
    grid = TimeGrid.uniform(1.0, 0.05)
    paths = process_path(ProcessSpec.counting((3.0,)), grid, RngStream(12), n_paths=N)
    a = running_average_path(paths).values[:, -1]
    assert abs(a.mean() - 1.5) <= 4 * a.std() / math.sqrt(N)


def test_weighted_sum_single_size_is_the_skellam_law():
    spec = ProcessSpec.skellam((1.5,), (0.5,))
    x = weighted_sum_sample(spec, 1.0, RngStream(13), N)
    emp = empirical_pmf(x)
    probs = stats.skellam.pmf(emp.states, 1.5, 0.5)
    _, pval = chi_square(emp.counts, probs / probs.sum())
    assert pval > 1e-4
    assert isinstance(weighted_sum_sample(spec, 1.0, RngStream(13)), int)
    with pytest.raises(ConfigError):
        weighted_sum_sample(ProcessSpec.counting((1.0,)), 1.0, RngStream(13), 10)
