import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracskellam import validation
from fracskellam.processes import ConfigError, ProcessSpec
from fracskellam.subordinators import RngStream, TimeGrid
from fracskellam.validation import (
    THREADS_ENV,
    ValidationReport,
    chi_square,
    empirical_pmf,
    format_table,
    ks_statistic,
    load_config,
    martingale_drift_check,
    parse_config,
    read_reports,
    reference_suite_path,
    run_check,
    run_experiment,
    total_variation,
    write_reports,
)

SMALL = """\
[experiment]
seed = 11
workers = 1

[check rec]
kind = recurrence
family = counting
lambda = 1, 1

[check pmf]
kind = pmf_agreement
lambda = 1
mu = 0.5
n = 4000
threshold = 0.05

[check fm]
kind = fractional_moment
family = counting
grid.q = 0.2|0.5
n = 4000
"""


# ---------------------------------------------------------------------------
# Statistics helpers
# ---------------------------------------------------------------------------


def test_empirical_pmf_counts():
    emp = empirical_pmf([0, 1, 1, 3, 3, 3])
    np.testing.assert_array_equal(emp.states, [0, 1, 3])
    np.testing.assert_allclose(emp.probabilities, [1 / 6, 2 / 6, 3 / 6])
    assert emp.probability(2) == 0.0 and emp.probability(3) == 0.5
    assert empirical_pmf(np.array([1.0, 2.0])).n == 2
    with pytest.raises(ValueError):
        empirical_pmf([0.5])
    with pytest.raises(ValueError):
        empirical_pmf([])


def test_total_variation_examples():
    assert total_variation({0: 0.5, 1: 0.5}, {0: 0.5, 1: 0.5}) == 0.0
    assert total_variation({0: 1.0}, {1: 1.0}) == 1.0
    assert total_variation({0: 0.5, 1: 0.5}, {0: 0.25, 1: 0.25, 2: 0.5}) == pytest.approx(0.5)
    assert total_variation(empirical_pmf([0, 0, 1, 1]), {0: 0.5, 1: 0.5}) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=50), st.lists(st.integers(-5, 5), min_size=1, max_size=50))
def test_total_variation_is_a_bounded_metric(a, b):
    p, q = empirical_pmf(a), empirical_pmf(b)
    d = total_variation(p, q)
    assert 0.0 <= d <= 1.0 + 1e-12
    assert d == pytest.approx(total_variation(q, p))
    assert total_variation(p, p) == 0.0


def test_ks_and_chi_square():
    assert ks_statistic([0, 1, 2], [0, 1, 2]) == 0.0
    assert ks_statistic([0, 0], [1, 1]) == 1.0
    stat, pval = chi_square([50, 50], [0.5, 0.5])
    assert stat == 0.0 and pval == 1.0
    _, pval = chi_square([90, 10], [0.5, 0.5])
    assert pval < 1e-10


def test_martingale_check_reports_zero_at_origin():
    spec = ProcessSpec.skellam((1.0,), (0.5,), beta=0.6, theta=1.0)
    rep = martingale_drift_check(spec, TimeGrid.uniform(1.0, 0.25), 2000, RngStream(3), times=(0.0, 1.0))
    assert rep.details["z"]["0"] == 0.0
    assert math.isfinite(rep.statistic)
    with pytest.raises(ConfigError):
        martingale_drift_check(ProcessSpec.skellam((1.0,), (1.0,)), TimeGrid.uniform(1.0, 0.5), 10, RngStream(3))


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def test_parse_small_config_and_grid_expansion():
    cfg = parse_config(SMALL)
    assert cfg.seed == 11 and cfg.workers == 1
    assert [c.label for c in cfg.checks] == ["rec", "pmf", "fm[q=0.2]", "fm[q=0.5]"]
    assert cfg.checks[0].params["lambda"] == (1.0, 1.0)
    assert cfg.checks[1].params["threshold"] == 0.05
    assert cfg.checks[3].params["q"] == 0.5


def test_grid_product_of_two_keys():
    cfg = parse_config("[experiment]\nseed = 1\n[check g]\nkind = recurrence\ngrid.t = 1|2\ngrid.n_max = 3|4|5\n")
    assert len(cfg.checks) == 6
    assert cfg.checks[0].label == "g[n_max=3,t=1]"


@pytest.mark.parametrize(
    "text,line",
    [
        ("[experiment]\nseed = 1\n\n[check a]\nkind = telepathy\n", 5),
        ("[experiment]\nseed = 1\n[check a]\nkind = recurrence\nwibble = 3\n", 5),
        ("[experiment]\nseed = 1\n[results]\nx = 1\n", 3),
        ("[experiment]\nname = x\n", 1),
        ("[experiment]\nseed = 1\ncolour = red\n", 3),
        ("[experiment]\nseed = 1\n[check a]\nkind = recurrence\nt = soon\n", 5),
        ("[experiment]\nseed = 1\n[check a]\nt = 1\n", 3),
    ],
)
def test_config_errors_name_the_line(text, line):
    with pytest.raises(ConfigError, match=f"^line {line}:"):
        parse_config(text)


def test_config_syntax_error_names_a_line():
    with pytest.raises(ConfigError, match="^line "):
        parse_config("[experiment]\nseed = 1\nthis is not ini\n")


def test_reference_suite_loads():
    cfg = load_config(reference_suite_path())
    kinds = {c.kind for c in cfg.checks}
    assert kinds == set(validation.CHECKS)
    labels = [c.label for c in cfg.checks]
    assert len(labels) == len(set(labels))


# ---------------------------------------------------------------------------
# Runner and reports
# ---------------------------------------------------------------------------


def test_empty_experiment_runs():
    assert run_experiment(parse_config("[experiment]\nseed = 3\n")) == []


def test_run_is_deterministic_and_worker_independent(monkeypatch):
    cfg = parse_config(SMALL)
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    assert [r.to_json() for r in a] == [r.to_json() for r in b]
    monkeypatch.delenv(THREADS_ENV, raising=False)
    two = run_experiment(parse_config(SMALL.replace("workers = 1", "workers = 2")))
    assert [r.to_json() for r in a] == [r.to_json() for r in two]
    other = run_experiment(cfg, seed=12)
    assert [r.to_json() for r in other] != [r.to_json() for r in a]


def test_run_check_matches_the_full_run():
    cfg = parse_config(SMALL)
    full = run_experiment(cfg)
    one = run_check(cfg, "fm[q=0.5]")
    assert one.to_json() == full[3].to_json()
    with pytest.raises(KeyError):
        run_check(cfg, "missing")


def test_infinite_moment_check_fails_cleanly():
    rep = run_check(parse_config(SMALL.replace("family = counting\ngrid.q", "family = counting\nbeta = 0.5\ngrid.q")), "fm[q=0.5]")
    assert not rep.passed


def test_reports_round_trip(tmp_path):
    reports = run_experiment(parse_config(SMALL))
    files = write_reports(reports, tmp_path)
    back = read_reports(files["jsonl"])
    assert back == reports
    assert files["table"].read_text() == format_table(reports)
    assert "PASS" in format_table(reports)
    assert set(files) == {"jsonl", "table", "timings"}


def test_report_serialization_cleans_numpy_values():
    rep = ValidationReport("c", "k", "s", np.float64(1.5), 2.0, np.bool_(True), np.int64(3), 1, 2, {"x": np.arange(2), "z": 1j})
    d = rep.to_dict()
    assert d["details"]["z"] == [0.0, 1.0]
    assert ValidationReport.from_dict(d).statistic == 1.5


def test_thread_cap_from_environment(monkeypatch):
    cfg = parse_config(SMALL.replace("workers = 1", "workers = 8"))
    monkeypatch.setenv(THREADS_ENV, "1")
    assert validation._worker_count(cfg, 4) == 1
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ConfigError):
        validation._worker_count(cfg, 4)
    monkeypatch.delenv(THREADS_ENV)
    assert validation._worker_count(cfg, 4) == 4
