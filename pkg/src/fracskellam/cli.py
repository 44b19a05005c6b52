"""Command-line front end.

Subcommands::

    simulate   sample paths to CSV (t, value) plus a manifest
    pmf        Skellam or counting p.m.f. table (n, probability, truncation_bound)
    pgf        generating function values
    moments    mean, variance and covariance for beta = 1
    tails      tail asymptote and upper bound
    validate   run a validation config and write reports
    figures    data and gnuplot scripts for the reference sample-path and p.m.f. plots

Exit codes: 0 success, 1 a validation check failed, 2 usage or
configuration error, 3 input/output failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import subprocess
import sys
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__, analytics, validation
from .processes import ConfigError, ProcessSpec, process_path
from .special_functions import ConvergenceError
from .subordinators import RngStream, TimeGrid

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_IO = 3

# Rates shared by the sample-path figures.
FIGURE_UP = (1.0, 3.0, 2.0, 2.0, 2.0)
FIGURE_DOWN = (2.0, 2.0, 3.0, 3.0, 2.0)
FIGURE_PATH_CURVES = {
    "figure1": (("black", 1.0, 0.4), ("green", 1.0, 0.7)),
    "figure2": (("black", 0.3, 0.4), ("green", 0.6, 0.4), ("red", 0.3, 0.7), ("blue", 0.6, 0.7)),
}
FIGURE3_TIMES = (0.10, 0.25, 0.40, 0.55, 0.70)
FIGURE3_SPEC = dict(alpha=0.6, beta=0.4, up=(50.0,), down=(100.0,))
FIGURE3_RANGE = (-60, 30)


class UsageError(Exception):
    """Bad command-line input; reported with exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _num(x) -> str:
    """Round-trip text for a number: integers stay integral, floats use ``repr``."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_path_csv(stream, t: Sequence[float], values: Sequence) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(("t", "value"))
    for a, b in zip(t, values):
        w.writerow((_num(float(a)), _num(b)))


def read_path_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    t = np.array([float(r["t"]) for r in rows])
    raw = [r["value"] for r in rows]
    if all(v.lstrip("-").isdigit() for v in raw):
        return t, np.array([int(v) for v in raw], dtype=np.int64)
    return t, np.array([float(v) for v in raw])


def write_pmf_csv(stream, rows: Iterable[analytics.PmfResult]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(("n", "probability", "truncation_bound"))
    for r in rows:
        w.writerow((r.n, _num(r.probability), _num(r.truncation_bound)))


def read_pmf_csv(path) -> list[analytics.PmfResult]:
    with open(path, newline="") as fh:
        return [
            analytics.PmfResult(int(r["n"]), float(r["probability"]), float(r["truncation_bound"]))
            for r in csv.DictReader(fh)
        ]


def _write_rows(stream, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) if isinstance(v, (int, float, np.number)) else ("" if v is None else v) for v in row])


def _build_id() -> Optional[str]:
    """``git describe`` of the source tree, when it is a checkout."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
    except (OSError, subprocess.SubprocessError):
        return None
    return (out.stdout.strip() or None) if out.returncode == 0 else None


def manifest(spec: ProcessSpec, grid: Optional[TimeGrid], seed, command: Sequence[str], **extra) -> dict:
    data = {
        "spec": spec.to_dict(),
        "grid": None if grid is None else {"t_max": grid.t_max, "h": grid.h, "points": len(grid)},
        "seed": seed,
        "version": __version__,
        "build": _build_id(),
        "command": list(command),
    }
    data.update(extra)
    return data


def _emit(out: Optional[str], write) -> None:
    """Call ``write(stream)`` on stdout (``None`` or ``-``) or on a new file."""
    if out in (None, "-"):
        write(sys.stdout)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        write(fh)


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------


def _floats(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _add_spec_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("process")
    g.add_argument("--family", choices=("skellam", "counting"), default="skellam")
    g.add_argument("--alpha", type=float, default=1.0, help="time index in (0, 1]")
    g.add_argument("--beta", type=float, default=1.0, help="space index in (0, 1]")
    g.add_argument("--theta", type=float, default=0.0, help="tempering parameter (0 = untempered)")
    g.add_argument("--lambda", dest="up", type=_floats, default=(1.0,), help="up rates, e.g. 1,3,2")
    g.add_argument("--mu", dest="down", type=_floats, default=None, help="down rates (Skellam only)")
    g.add_argument("--clock", choices=("shared", "independent"), default="shared")


def _spec(args) -> ProcessSpec:
    if args.family == "counting":
        if args.down is not None:
            raise UsageError("--mu is only valid with --family skellam")
        return ProcessSpec.counting(args.up, args.alpha, args.beta, args.theta)
    down = args.down if args.down is not None else (1.0,) * len(args.up)
    return ProcessSpec.skellam(args.up, down, args.alpha, args.beta, args.theta, args.clock)


def _add_format(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default="-", help="output file ('-' for stdout)")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _simulate_paths(spec: ProcessSpec, grid: TimeGrid, n_paths: int, seed: int) -> np.ndarray:
    if n_paths == 0:
        return np.zeros((0, len(grid)), dtype=np.int64)
    return process_path(spec, grid, RngStream(seed, 0), n_paths=n_paths).values


def cmd_simulate(args, argv) -> int:
    spec = _spec(args)
    if args.n_paths < 0:
        raise UsageError("--n-paths must be non-negative")
    try:
        grid = TimeGrid.uniform(args.t_max, args.h)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    values = _simulate_paths(spec, grid, args.n_paths, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, v in enumerate(values):
        if args.format == "csv":
            with open(out / f"path_{i:04d}.csv", "w", newline="") as fh:
                write_path_csv(fh, grid.t_points, v)
        else:
            _write_json(out / f"path_{i:04d}.json", {"t": grid.t_points.tolist(), "value": v.tolist()})
    _write_json(out / "manifest.json", manifest(spec, grid, args.seed, argv, n_paths=args.n_paths))
    return EXIT_OK


def pmf_rows(spec: ProcessSpec, t: float, n_min: int, n_max: int, method: str) -> list[analytics.PmfResult]:
    if n_max < n_min:
        raise UsageError("--n-max must not be below --n-min")
    if spec.is_skellam:
        table = analytics.gstfsp_pmf_table(spec, t, n_min, n_max, method, tails=False)
        return table.results()
    rows = [analytics.PmfResult(n, 0.0, 0.0) for n in range(n_min, min(n_max, -1) + 1)]
    if n_max >= 0:
        table = analytics.gstfcp_pmf_table(spec, t, n_max)
        rows += [r for r in table.results() if r.n >= n_min]
    return rows


def cmd_pmf(args, argv) -> int:
    spec = _spec(args)
    n_min = args.n_min if args.n_min is not None else (-10 if spec.is_skellam else 0)
    rows = pmf_rows(spec, args.t, n_min, args.n_max, args.method)
    if args.format == "csv":
        _emit(args.out, lambda fh: write_pmf_csv(fh, rows))
    else:
        data = {
            "spec": spec.to_dict(),
            "t": args.t,
            "method": args.method,
            "rows": [{"n": r.n, "probability": r.probability, "truncation_bound": r.truncation_bound} for r in rows],
        }
        _emit(args.out, lambda fh: fh.write(json.dumps(data, indent=2) + "\n"))
    return EXIT_OK


def _table_out(args, header: Sequence[str], rows: list[Sequence], extra: dict) -> None:
    if args.format == "csv":
        _emit(args.out, lambda fh: _write_rows(fh, header, rows))
    else:
        data = {**extra, "rows": [dict(zip(header, r)) for r in rows]}
        _emit(args.out, lambda fh: fh.write(json.dumps(data, indent=2) + "\n"))


def cmd_pgf(args, argv) -> int:
    spec = _spec(args)
    rows = [(u, analytics.gstfsp_pgf(spec, args.t, u)) for u in args.u]
    _table_out(args, ("u", "value"), rows, {"spec": spec.to_dict(), "t": args.t})
    return EXIT_OK


def cmd_moments(args, argv) -> int:
    spec = _spec(args)
    s = args.t if args.s is None else args.s
    m = analytics.moments(spec, s, args.t)
    cov = None if m.covariance is None else m.covariance(s, args.t)
    _table_out(
        args,
        ("t", "s", "mean", "variance", "covariance"),
        [(args.t, s, m.mean, m.variance, cov)],
        {"spec": spec.to_dict()},
    )
    return EXIT_OK


def cmd_tails(args, argv) -> int:
    spec = _spec(args)
    rows = []
    for x in args.x:
        e = analytics.tail_asymptote(spec, x, args.t)
        rows.append((e.x, e.asymptote, e.upper_bound, e.truncation_bound))
    _table_out(args, ("x", "asymptote", "upper_bound", "truncation_bound"), rows, {"spec": spec.to_dict(), "t": args.t})
    return EXIT_OK


def cmd_validate(args, argv) -> int:
    path = Path(args.config) if args.config else validation.reference_suite_path()
    try:
        text = path.read_text()
    except OSError as exc:
        print(f"fracskellam: cannot read config {path}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    config = validation.parse_config(text)
    reports = validation.run_experiment(config, seed=args.seed)
    out = args.out or config.output or "reports"
    validation.write_reports(reports, out)
    sys.stdout.write(validation.format_table(reports))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VALIDATION


def _gnuplot_paths(name: str, curves: Sequence[tuple[str, str]]) -> str:
    plots = ", \\\n     ".join(
        f"'{fname}' using 1:2 with steps lc rgb '{colour}' title '{title}'" for fname, colour, title in curves
    )
    return (
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        f"set terminal pngcairo size 900,600\nset output '{name}.png'\n"
        "set xlabel 't'\nset ylabel 'value'\n"
        f"plot {plots}\n"
    )


def _gnuplot_pmf(name: str, files: Sequence[tuple[str, float]]) -> str:
    plots = ", \\\n     ".join(f"'{fname}' using 1:2 with linespoints title 't = {t:.2f}'" for fname, t in files)
    return (
        "set datafile separator ','\n"
        f"set terminal pngcairo size 900,600\nset output '{name}.png'\n"
        "set xlabel 'n'\nset ylabel 'P(S(t) = n)'\n"
        f"plot {plots}\n"
    )


def figure3_spec() -> ProcessSpec:
    f = FIGURE3_SPEC
    return ProcessSpec.skellam(f["up"], f["down"], f["alpha"], f["beta"], clock="independent")


def figure3_tables() -> dict[float, analytics.PmfTable]:
    """Single-jump p.m.f. tables at the reference times, from the totals series.

    Tables span the symmetric window ``-60..60`` so that the tail masses
    beyond it are available for the normalization check; the figure shows
    ``-60..30``.
    """
    spec = figure3_spec()
    w = max(abs(v) for v in FIGURE3_RANGE)
    return {t: analytics.gstfsp_pmf_table(spec, t, -w, w, "totals") for t in FIGURE3_TIMES}


def figure3_summary(table: analytics.PmfTable) -> dict:
    """Displayed rows plus the normalization and mode of one table."""
    lo, hi = FIGURE3_RANGE
    sel = (table.n >= lo) & (table.n <= hi)
    return {
        "rows": [r for r in table.results() if lo <= r.n <= hi],
        "total": table.total,
        "total_bound": table.total_bound,
        "mode": int(table.n[np.argmax(table.p)]),
        "window_mass": float(np.sum(table.p[sel])),
    }


def cmd_figures(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = TimeGrid.uniform(args.t_max, args.h)
    runs = {}
    for fig, curves in FIGURE_PATH_CURVES.items():
        entries = []
        for i, (colour, alpha, beta) in enumerate(curves):
            spec = ProcessSpec.skellam(FIGURE_UP, FIGURE_DOWN, alpha, beta)
            seed = args.seed + i
            values = _simulate_paths(spec, grid, 1, seed)[0]
            fname = f"{fig}_{colour}.csv"
            with open(out / fname, "w", newline="") as fh:
                write_path_csv(fh, grid.t_points, values)
            entries.append((fname, colour, f"alpha={alpha:g}, beta={beta:g}"))
            runs[fname] = manifest(spec, grid, seed, argv)
        (out / f"{fig}.gp").write_text(_gnuplot_paths(fig, entries))
    files = []
    summary = {}
    for t, table in figure3_tables().items():
        info = figure3_summary(table)
        fname = f"figure3_t{t:.2f}.csv"
        with open(out / fname, "w", newline="") as fh:
            write_pmf_csv(fh, info.pop("rows"))
        files.append((fname, t))
        summary[f"{t:.2f}"] = info
    _write_json(out / "figure3_summary.json", summary)
    (out / "figure3.gp").write_text(_gnuplot_pmf("figure3", files))
    runs["figure3"] = {
        **manifest(figure3_spec(), None, None, argv),
        "times": list(FIGURE3_TIMES),
        "n_range": list(FIGURE3_RANGE),
        "method": "totals",
    }
    _write_json(out / "manifest.json", runs)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fracskellam", description="Time-changed generalized counting and Skellam processes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate sample paths")
    _add_spec_flags(p)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--h", type=float, default=0.01, help="grid step")
    p.add_argument("--n-paths", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default="paths", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pmf", help="tabulate the p.m.f.")
    _add_spec_flags(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--n-min", type=int, default=None, help="default -10 (Skellam) or 0 (counting)")
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--method", choices=analytics.METHODS, default="exact")
    _add_format(p)
    p.set_defaults(func=cmd_pmf)

    p = sub.add_parser("pgf", help="evaluate the p.g.f.")
    _add_spec_flags(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--u", type=_floats, default=(0.5, 0.8))
    _add_format(p)
    p.set_defaults(func=cmd_pgf)

    p = sub.add_parser("moments", help="mean, variance and covariance (beta = 1)")
    _add_spec_flags(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--s", type=float, default=None, help="second time for the covariance (default t)")
    _add_format(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("tails", help="tail asymptote and upper bound (beta < 1)")
    _add_spec_flags(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--x", type=_floats, default=(50.0, 100.0, 200.0))
    _add_format(p)
    p.set_defaults(func=cmd_tails)

    p = sub.add_parser("validate", help="run a validation config")
    p.add_argument("--config", default=None, help="INI file (default: the shipped reference suite)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default=None, help="report directory")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("figures", help="data and gnuplot scripts for the reference figures")
    p.add_argument("--out", default="figures")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--h", type=float, default=0.01)
    p.set_defaults(func=cmd_figures)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, ["fracskellam", *argv])
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ValueError, ConvergenceError) as exc:
        print(f"fracskellam: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        target = f" {exc.filename}" if exc.filename else ""
        print(f"fracskellam: I/O error{target}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
