"""Command-line runner for the makespan and TCD comparison experiments.

Exit codes: 0 when every output was written, 1 on a runtime error such as an
unwritable output directory, 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from . import svgplot
from .baselines import Policy
from .errors import ConfigurationError
from .simulator import (
    ALL_POLICIES,
    ExperimentConfig,
    ExperimentResult,
    FixedArrivals,
    PoissonArrivals,
    aggregate_csv,
    results_csv,
    run_experiment,
)

log = logging.getLogger("twsched")

SEED_ENV = "TWSCHED_SEED"

PRESETS = {
    "fig1-2-3": dict(arrival=FixedArrivals(tuple(range(1, 21))), replications=1000),
    "fig4-5-6-7": dict(arrival=PoissonArrivals(7, 101), replications=50, runs=20),
    "fig8": dict(arrival=FixedArrivals(tuple(range(1, 102))), replications=200),
    "custom": dict(arrival=FixedArrivals(tuple(range(1, 21))), replications=100),
}


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2**64), got {v}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


def _n_range(text):
    """``A..B`` (inclusive) or a comma list of batch sizes."""
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
            values = list(range(lo, hi + 1))
        else:
            values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B or a comma list, got {text!r}") from None
    if not values or any(v < 0 for v in values):
        raise argparse.ArgumentTypeError(f"needs at least one batch size >= 0, got {text!r}")
    return tuple(values)


def _exec_times(text):
    values = []
    for part in text.split(","):
        v = _positive_float(part.strip())
        values.append(int(v) if v.is_integer() else v)
    return tuple(values)


def _policies(text):
    try:
        return tuple(Policy.parse(p) for p in text.split(",") if p.strip())
    except ConfigurationError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="twsched",
        description="Compare variance balancing with Random, FIFO and Greedy task assignment.",
    )
    p.add_argument("--preset", choices=sorted(PRESETS), required=True)
    p.add_argument("--machines", type=_positive_int, default=4)
    p.add_argument("--seed", type=_seed, help=f"base seed (falls back to ${SEED_ENV}, then 0)")
    p.add_argument("--reps", type=_positive_int, help="replications per batch size or run")
    p.add_argument("--runs", type=_positive_int, help="independent runs (Poisson arrivals)")
    p.add_argument("--lambda", dest="lam", type=_positive_float, help="Poisson arrival rate")
    p.add_argument("--steps", type=_positive_int, help="time steps per Poisson replication")
    p.add_argument("--n-range", type=_n_range, help="batch sizes: A..B or a,b,c")
    p.add_argument("--exec-times", type=_exec_times, help="comma list of execution times")
    p.add_argument(
        "--policies",
        type=_policies,
        default=ALL_POLICIES,
        help="comma list from: " + ",".join(x.value for x in Policy),
    )
    p.add_argument("--out-dir", default="twsched-out")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    preset = dict(PRESETS[args.preset])
    arrival = preset.pop("arrival")
    poisson_flags = args.lam is not None or args.steps is not None
    if poisson_flags and args.n_range is not None:
        raise ConfigurationError("--n-range cannot be combined with --lambda/--steps")
    if args.preset == "custom" and poisson_flags:
        arrival = PoissonArrivals(7, 101)
    if isinstance(arrival, FixedArrivals):
        if poisson_flags:
            raise ConfigurationError(f"--lambda/--steps do not apply to preset {args.preset}")
        if args.runs is not None:
            raise ConfigurationError("--runs does not apply to fixed-size batches")
        if args.n_range is not None:
            arrival = FixedArrivals(args.n_range)
    else:
        if args.n_range is not None:
            raise ConfigurationError(f"--n-range does not apply to preset {args.preset}")
        arrival = PoissonArrivals(
            arrival.lam if args.lam is None else args.lam,
            arrival.steps if args.steps is None else args.steps,
        )
    seed = args.seed
    if seed is None:
        env = os.environ.get(SEED_ENV)
        if env is not None:
            try:
                seed = _seed(env)
            except argparse.ArgumentTypeError as e:
                raise ConfigurationError(f"${SEED_ENV}: {e}") from None
        else:
            seed = 0
    config = ExperimentConfig(arrival=arrival, machines=args.machines, seed=seed, **preset)
    changes = {"policies": tuple(args.policies)}
    if args.reps is not None:
        changes["replications"] = args.reps
    if args.runs is not None:
        changes["runs"] = args.runs
    if args.exec_times is not None:
        changes["exec_time_values"] = args.exec_times
    return replace(config, **changes)


def _series(result: ExperimentResult, value) -> dict:
    agg = result.aggregate()
    out = {}
    for a in agg:
        y = value(a)
        if y is not None:
            out.setdefault(a.policy.value, []).append((a.n, y))
    return out


def plots(result: ExperimentResult, preset: str = "fig1-2-3") -> dict:
    """File name to SVG text for the preset's figure family.

    Poisson arrivals always get the per-run figures; fixed batches get the
    per-n figures, in the fig8 layout only for that preset.
    """
    config = result.config
    greedy_minus = {
        k: v for k, v in _series(result, lambda a: a.makespan_minus_ours).items() if k == "greedy"
    }
    if isinstance(config.arrival, PoissonArrivals):
        first = {}
        for r in result.records:
            if r.n == 0:
                first.setdefault(r.policy.value, []).append((r.rep + 1, r.makespan))
        return {
            "fig4_makespan_per_experiment.svg": svgplot.line_plot(
                first, "Makespan per experiment (run 1)", "experiment", "makespan [s]"
            ),
            "fig5_run_mean_makespan.svg": svgplot.line_plot(
                _series(result, lambda a: a.mean_makespan), "Mean makespan per run", "run", "makespan [s]"
            ),
            "fig6_greedy_minus_ours.svg": svgplot.line_plot(
                greedy_minus, "Greedy minus ours, mean makespan", "run", "difference [s]"
            ),
            "fig7_run_mean_tcd.svg": svgplot.line_plot(
                _series(result, lambda a: a.mean_tcd), "Mean TCD per run", "run", "TCD [s]"
            ),
        }
    if preset == "fig8":
        others = {
            k: v
            for k, v in _series(result, lambda a: a.makespan_minus_ours).items()
            if k != Policy.OURS.value
        }
        return {
            "fig8_makespan_minus_ours.svg": svgplot.line_plot(
                others, "Mean makespan minus ours", "tasks", "difference [s]"
            ),
            "fig8_tcd.svg": svgplot.line_plot(
                _series(result, lambda a: a.mean_tcd), "Mean TCD", "tasks", "TCD [s]"
            ),
        }
    return {
        "fig1_makespan.svg": svgplot.line_plot(
            _series(result, lambda a: a.mean_makespan), "Mean makespan", "tasks", "makespan [s]"
        ),
        "fig2_greedy_minus_ours.svg": svgplot.line_plot(
            greedy_minus, "Greedy minus ours, mean makespan", "tasks", "difference [s]"
        ),
        "fig3_tcd.svg": svgplot.line_plot(
            _series(result, lambda a: a.mean_tcd), "Mean TCD", "tasks", "TCD [s]"
        ),
    }


def emit_outputs(result: ExperimentResult, out_dir: str, preset: str = "fig1-2-3") -> list:
    files = {"results.csv": results_csv(result), "aggregate.csv": aggregate_csv(result)}
    files.update(plots(result, preset))
    written = []
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create {out_dir}: {e.strerror}") from e
    for name, text in files.items():
        path = os.path.join(out_dir, name)
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as e:
            raise OSError(f"cannot write {path}: {e.strerror}") from e
        written.append(path)
    return written


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        config = config_from_args(args)
    except ConfigurationError as e:
        print(f"twsched: error: {e}", file=sys.stderr)
        return 2
    log.info("running %s with seed %d", args.preset, config.seed)
    try:
        result = run_experiment(config)
        written = emit_outputs(result, args.out_dir, args.preset)
    except OSError as e:
        print(f"twsched: error: {e}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
