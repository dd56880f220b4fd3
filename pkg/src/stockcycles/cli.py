"""Command line: ``stockcycles {analyze,rwm-test,forecast,simulate}``.

Settings come from, in increasing precedence: built-in defaults, a JSON
``--config`` file whose keys mirror the long flags, and the flags
themselves.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__, stats, synthetic
from .errors import FormatError, InputIOError, ParamError, StockCyclesError
from .ingest import YearMonth, serialize_csv
from .pipeline import PipelineConfig, run_analyze, run_forecast, run_rwm_test, write_bundle

log = logging.getLogger("stockcycles")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with settings (keys mirror the long flags)")
    p.add_argument("--input", help="CSV with a date column (YYYY-MM or YYYY:MM) and index values")
    p.add_argument("--column", help="value column of --input (default: first non-date column)")
    p.add_argument("--cpi", help="CSV with the consumer price index used for deflation")
    p.add_argument("--cpi-column", dest="cpi_column")
    p.add_argument("--base", help="deflation base month (default 1960-01)")
    p.add_argument("--calendar", help="shock calendar JSON: [{start, end|null, reason}]")
    p.add_argument("--country", help="US, Japan or Germany: built-in calendar and default order")
    p.add_argument("--excise", action=argparse.BooleanOptionalAction, default=None,
                   help="drop months inside shock windows")
    p.add_argument("--order", type=int, help="polynomial trend order (default 5; 6 for Japan)")
    p.add_argument("--method", choices=["classical", "welch", "lomb"],
                   help="spectral estimator (analyze: welch, lomb when excised; forecast: lomb)")
    p.add_argument("--segment", type=int, help="Welch segment length (default n/2)")
    p.add_argument("--overlap", type=float, help="Welch segment overlap fraction (default 0.5)")
    p.add_argument("--window", choices=["rect", "hanning"])
    p.add_argument("--oversampling", type=float, help="Lomb-Scargle grid oversampling (default 1; 4 for forecast)")
    p.add_argument("--k", type=int, help="number of harmonics (default 5)")
    p.add_argument("--lags", type=int, help="portmanteau lags h (default 24)")
    p.add_argument("--cutoff", help="forecast cutoff month YYYY-MM")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stockcycles", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("analyze", "detrend, periodogram, top-k harmonics and model accuracy"),
        ("rwm-test", "random-walk diagnostics on first differences"),
        ("forecast", "fit up to --cutoff and predict the months after it"),
    ):
        _add_common(sub.add_parser(name, help=helptext))

    sim = sub.add_parser("simulate", help="write a synthetic monthly series as CSV")
    sim.add_argument("--kind", choices=["rwm", "white", "five-tone", "downturn"], default="rwm")
    sim.add_argument("--n", type=int, default=synthetic.US_LENGTH)
    sim.add_argument("--sigma", type=float, default=1.0)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--start", default=str(synthetic.US_START))
    sim.add_argument("--out", help="output CSV path (default: stdout)")
    return parser


_FLAG_KEYS = PipelineConfig.fields()


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    settings = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise InputIOError(f"cannot read {args.config}: {exc.strerror or exc}") from None
        except json.JSONDecodeError as exc:
            raise FormatError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise FormatError("config must be a JSON object")
        settings.update(PipelineConfig.from_mapping(data).__dict__)
    for key in _FLAG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return PipelineConfig(**settings)


def _simulate(args) -> str:
    start = YearMonth.parse(args.start)
    if args.kind == "rwm":
        series = stats.simulate_random_walk(args.n, args.sigma, args.seed, start)
    elif args.kind == "white":
        series = stats.simulate_white_noise(args.n, args.sigma, args.seed, start)
    elif args.kind == "five-tone":
        series = synthetic.five_tone(args.seed, n=args.n, start=start).series
    else:
        series = synthetic.downturn(args.seed, n=args.n).series
    return serialize_csv(series, "value")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "simulate":
            if args.seed < 0:
                raise ParamError("seed must be nonnegative")
            text = _simulate(args)
            if args.out:
                with open(args.out, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return 0

        cfg = resolve_config(args)
        runner = {"analyze": run_analyze, "rwm-test": run_rwm_test, "forecast": run_forecast}[args.command]
        files = runner(cfg)
        out = cfg.out or f"stockcycles-{args.command}"
        for path in write_bundle(files, out):
            log.info("wrote %s", path)
        print(f"{args.command}: {len(files)} files written to {out}")
        return 0
    except StockCyclesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return InputIOError.exit_code


if __name__ == "__main__":
    sys.exit(main())
