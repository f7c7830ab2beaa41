"""``prudelete`` command line: run an experiment grid and write a report."""

from __future__ import annotations

import argparse
import sys

from .errors import MemoryBudgetError
from .experiments import EXPERIMENTS, ExperimentConfig, load_config_file, run_experiment

_OVERRIDES = {
    "d_list": "d_list",
    "k_list": "k_list",
    "p_list": "p_list",
    "scale_list": "scale_list",
    "trials": "trials",
    "ridge_lambda": "ridge_lambda",
    "seed": "seed",
    "repetitions": "repetitions",
    "workers": "workers",
    "n_factor": "n_factor",
    "out": "output_path",
}


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prudelete",
        description="Benchmark data-deletion methods for ridge and logistic regression.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} grid")
        p.add_argument("--config", help="YAML or JSON file of key/value settings")
        p.add_argument("--d-list", dest="d_list", type=_int_list, help="e.g. 100,200,400")
        p.add_argument("--k-list", dest="k_list", type=_int_list, help="e.g. 1,5,10,25")
        p.add_argument("--p-list", dest="p_list", type=_float_list, help="sparsity levels")
        p.add_argument("--scale-list", dest="scale_list", type=_float_list, help="outlier scales")
        p.add_argument("--trials", type=int)
        p.add_argument("--lambda", dest="ridge_lambda", type=float, help="ridge strength")
        p.add_argument("--seed", type=int)
        p.add_argument("--repetitions", type=int, help="timed calls per method (runtime)")
        p.add_argument("--workers", type=int, help="process pool size (ignored for runtime)")
        p.add_argument("--n-factor", dest="n_factor", type=int, help="n = n_factor * d")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json", "md"), default=None,
                       help="report format (default: from --out suffix, else csv)")
    return parser


def _format_for(args, out_path):
    if args.format:
        return args.format
    if out_path:
        suffix = str(out_path).rsplit(".", 1)[-1].lower()
        if suffix in ("csv", "json", "md"):
            return suffix
    return "csv"


def config_from_args(args) -> ExperimentConfig:
    settings = load_config_file(args.config) if args.config else {}
    settings = {k.replace("-", "_"): v for k, v in settings.items()}
    for attr, key in _OVERRIDES.items():
        value = getattr(args, attr, None)
        if value is not None:
            settings.pop(attr, None)
            settings[key] = value
    return ExperimentConfig.from_mapping(args.experiment, settings)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        report = run_experiment(cfg)
        text = report.render(_format_for(args, cfg.output_path))
        if cfg.output_path:
            with open(cfg.output_path, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except MemoryBudgetError as exc:
        print(f"prudelete: memory budget refused: {exc}", file=sys.stderr)
        return 3
    except (ValueError, TypeError, OSError) as exc:
        print(f"prudelete: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - any other failure is still a diagnostic exit
        print(f"prudelete: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    failed = report.meta["failed_rows"]
    if failed:
        print(f"prudelete: warning: {failed} row(s) hit numerical failures (NaN)", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
