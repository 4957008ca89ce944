"""Command line entry point.

Exit codes: 0 success, 1 usage/config error, 2 parse error, 3 oracle-gate
failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import polars as pl

from .errors import ConfigError, OrderingError, ParseError, TickMomentsError
from .events import ingest
from .pipeline import PipelineOptions, run_pipeline, tau_sweep
from .reporting import emit
from .sim import STRESS_CASES, SimConfig, generate, stress_case

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_ORACLE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return values


def _truthy(text) -> bool:
    return str(text).strip().lower() in ("1", "true", "yes", "on")


def _pipeline_args(p):
    p.add_argument("--window", type=int, help="ticks per trading-day window")
    p.add_argument("--tau", help="return shift: a duration, or '<n>t' for n ticks (default: one window)")
    p.add_argument("--policy", choices=("fifo", "lifo", "prorata"), help="lot matching policy")
    p.add_argument("--oracle", action="store_true", default=None, help="recompute with direct sums and gate on deltas")
    p.add_argument("--format", choices=("csv", "json"), help="report format (default csv)")
    p.add_argument("--out", help="output path (default stdout)")


def _sim_args(p):
    p.add_argument("--sim", metavar="CONFIG", help="simulation config file (key = value)")
    p.add_argument("--seed", type=int, help="simulation seed (overrides the config)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tickmoments", description="Market-based price and return moments from trade ticks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="compute the report for an event file or a simulated log")
    run.add_argument("input", nargs="?", help="event CSV (time,investor_id,side,price,volume[,adjust])")
    run.add_argument("--config", help="settings file (key = value); flags override it")
    _sim_args(run)
    _pipeline_args(run)

    sim = sub.add_parser("simulate", help="write a seeded synthetic event log")
    _sim_args(sim)
    sim.add_argument("--ticks", type=int, help="tick count override")
    sim.add_argument("--investors", type=int, help="investor count override")
    sim.add_argument("--out", help="output path (default stdout)")

    stress = sub.add_parser("stress", help="write a named stress fixture")
    stress.add_argument("name", choices=STRESS_CASES)
    stress.add_argument("--out", help="output path (default stdout)")

    sweep = sub.add_parser("sweep", help="anticipated-return volatility per window for several shifts")
    sweep.add_argument("input", help="event CSV")
    sweep.add_argument("--window", type=int, required=True)
    sweep.add_argument("--taus", required=True, help="comma separated shifts, e.g. 1t,5t,10t")
    sweep.add_argument("--out", help="output path (default stdout)")
    return parser


def _write(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _settings(args) -> dict[str, str]:
    settings = {}
    for path in (getattr(args, "config", None), getattr(args, "sim", None)):
        if path:
            settings.update(read_config(path))
    return settings


def _sim_config(settings, args) -> SimConfig:
    values = dict(settings)
    if args.seed is not None:
        values["seed"] = str(args.seed)
    for flag, key in (("ticks", "tick_count"), ("investors", "investor_count"), ("window", "window_size")):
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = str(v)
    return SimConfig.from_mapping(values)


def cmd_run(args) -> int:
    settings = _settings(args)
    if args.input:
        log = ingest(args.input)
    elif args.sim or args.seed is not None:
        log = generate(_sim_config(settings, args))
    else:
        raise ConfigError("give an input file, --sim CONFIG or --seed")
    window = args.window if args.window is not None else int(settings.get("window", settings.get("window_size", 100)))
    options = PipelineOptions(
        window_size=window,
        tau=args.tau if args.tau is not None else settings.get("tau"),
        policy=args.policy or settings.get("policy", "fifo"),
        oracle=args.oracle if args.oracle is not None else _truthy(settings.get("oracle", "false")),
    )
    fmt = args.format or settings.get("format", "csv")
    report = run_pipeline(log, options)
    emit(report, fmt, args.out) if args.out else sys.stdout.write(emit(report, fmt))
    if report.skipped:
        print(f"skipped {len(report.skipped)} unit(s):", file=sys.stderr)
        for t, inv, reason in report.skipped:
            print(f"  t={t!r} investor={inv}: {reason}", file=sys.stderr)
    n_err = len(report.errors)
    if n_err:
        print(f"{n_err} window statistic(s) could not be computed; see status=error rows", file=sys.stderr)
    if options.oracle:
        fails = report.oracle_failures
        if len(fails):
            print(
                f"oracle gate failed on {len(fails)} row(s); max relative delta {report.max_oracle_delta():.3e}",
                file=sys.stderr,
            )
            return EXIT_ORACLE
    return EXIT_OK


def cmd_simulate(args) -> int:
    log = generate(_sim_config(_settings(args), args))
    _write(log.to_csv_text(), args.out)
    return EXIT_OK


def cmd_stress(args) -> int:
    _write(stress_case(args.name).to_csv_text(), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    log = ingest(args.input)
    taus = [t for t in args.taus.split(",") if t.strip()]
    frame = tau_sweep(log, args.window, taus)
    _write(pl.from_pandas(frame).write_csv(null_value="", line_terminator="\n"), args.out)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "simulate": cmd_simulate, "stress": cmd_stress, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ParseError, OrderingError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stderr.close()
        return EXIT_OK
    except (ConfigError, TickMomentsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
