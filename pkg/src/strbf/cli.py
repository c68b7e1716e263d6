"""Command-line front end.

Subcommands::

    strbf run        one model, Monte Carlo averaged, CSV + stdout summary
    strbf compare    rbf, frbf and strbf on the same seeds, plus a summary table
    strbf gradcheck  finite-difference check of all three update rules
    strbf signals    train/test inputs and clean plant outputs as CSV

Exit codes: 0 success, 1 usage or configuration error, 2 runtime error
(divergence of every trial, failed gradient check, unwritable output).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .config import KEYS, ConfigError, build_config, load_config_file
from .gradcheck import FAULTS, REL_TOL, run_gradcheck
from .harness import (
    AggregationError,
    ModelKind,
    comparison_rows,
    emit_comparison,
    emit_csv,
    run_monte_carlo,
)
from .plant import NoiseSpec, gen_square, run_plant, write_signal_csv

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_config_flags(p: argparse.ArgumentParser, skip=()) -> None:
    p.add_argument("--config", metavar="PATH", help="flat 'key = value' config file")
    p.add_argument("--out", metavar="DIR", default="results", help="output directory (default: results)")
    for key, spec in KEYS.items():
        if key in skip:
            continue
        p.add_argument(
            "--" + key.replace("_", "-"),
            dest=key,
            metavar=None if spec.choices else key.upper(),
            choices=spec.choices,
            default=None,
            help=spec.help,
        )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="strbf", description="Spatio-temporal RBF system-identification benchmark")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="Monte Carlo run of one model")
    _add_config_flags(p)
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes (default 1)")
    p.add_argument("--smooth", type=int, default=0, metavar="N",
                   help="add an N-sample moving-average dB column to the curves CSV")

    p = sub.add_parser("compare", help="run rbf, frbf and strbf on shared seeds")
    _add_config_flags(p, skip=("model",))
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes (default 1)")
    p.add_argument("--smooth", type=int, default=0, metavar="N",
                   help="add an N-sample moving-average dB column to the curves CSV")

    p = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    p.add_argument("--cases", type=int, default=100, help="random configurations per model (default 100)")
    p.add_argument("--seed", type=int, default=0, help="seed for the random configurations (default 0)")
    p.add_argument("--inject-fault", choices=FAULTS, default=None,
                   help="negative control: corrupt the analytic gradient")

    p = sub.add_parser("signals", help="dump train/test inputs and clean plant outputs")
    _add_config_flags(p, skip=("model",))
    return parser


def _settings(args) -> Dict[str, object]:
    settings = load_config_file(args.config) if args.config else {}
    for key in KEYS:
        raw = getattr(args, key, None)
        if raw is not None:
            try:
                settings[key] = KEYS[key].parse(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for --{key.replace('_', '-')}: {raw!r} ({exc})") from None
    return settings


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from None
    return out


def _format_table(rows: List[list]) -> str:
    lines = [
        f"{'model':<6} {'train dB':>10} {'test dB':>10} {'pub. train':>11} {'pub. test':>10} {'used':>5} {'diverged':>8}"
    ]
    for m, tr, te, ptr, pte, used, div in rows:
        lines.append(f"{m:<6} {tr:>10.4f} {te:>10.4f} {ptr:>11.4f} {pte:>10.4f} {used:>5d} {div:>8d}")
    return "\n".join(lines)


def cmd_run(args) -> int:
    cfg = build_config(_settings(args))
    out = _out_dir(args.out)
    result = run_monte_carlo(cfg, workers=args.workers)
    emit_csv(result, out / f"{cfg.model_kind.value}.csv", args.smooth or None)
    print(_format_table(comparison_rows({cfg.model_kind: result})))
    return EXIT_OK


def cmd_compare(args) -> int:
    settings = _settings(args)
    configs = {kind: build_config(settings, kind.value) for kind in ModelKind}
    out = _out_dir(args.out)
    results = {}
    for kind, cfg in configs.items():
        results[kind] = run_monte_carlo(cfg, workers=args.workers)
        emit_csv(results[kind], out / f"{kind.value}.csv", args.smooth or None)
    emit_comparison(results, out / "summary.csv")
    print(_format_table(comparison_rows(results)))
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    report = run_gradcheck(args.cases, args.seed, args.inject_fault)
    for kind, dev in report.max_deviation.items():
        print(f"{kind:<6} max relative deviation {dev:.3e}")
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{verdict}: worst {report.worst:.3e} (tolerance {REL_TOL:.0e}, {report.n_cases} cases per model)")
    return EXIT_OK if report.passed else EXIT_RUNTIME


def cmd_signals(args) -> int:
    cfg = build_config(_settings(args))
    out = _out_dir(args.out)
    clean = NoiseSpec(0.0)
    rng = np.random.default_rng(0)  # unused by noise-free runs
    for phase, spec in (("train", cfg.train_signal), ("test", cfg.test_signal)):
        r = gen_square(spec)
        write_signal_csv(out / f"{phase}_input.csv", r, "input")
        write_signal_csv(out / f"{phase}_output.csv", run_plant(cfg.plant, r, clean, rng), "plant_output")
    print(f"wrote train ({cfg.train_signal.length} rows) and test ({cfg.test_signal.length} rows) signals to {out}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "gradcheck": cmd_gradcheck, "signals": cmd_signals}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"strbf: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AggregationError as exc:
        print(f"strbf: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"strbf: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
