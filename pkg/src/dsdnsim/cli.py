"""Command-line interface.

Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from dsdnsim.classifier import make_backend
from dsdnsim.config import config_problems, config_warnings, load_scenario
from dsdnsim.harness import ConfigError, read_dataset, replay_dataset, report_json, run_scenario
from dsdnsim.metrics import metrics_report


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1 on bad usage, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(1)


def _backend_from_arg(spec: str, window_len_s: float):
    """--backend accepts a known kind name, "replay:<path>", or a path to a
    backend JSON config."""
    if spec in ("threshold_oracle", "constant_0", "constant_1"):
        if spec.startswith("constant"):
            return make_backend({"kind": "constant", "label": int(spec[-1])}, window_len_s)
        return make_backend({"kind": spec}, window_len_s)
    if spec.startswith("replay:"):
        return make_backend({"kind": "replay", "path": spec.split(":", 1)[1]}, window_len_s)
    with open(spec) as f:
        return make_backend(json.load(f), window_len_s)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dsdnsim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None, help="override sim.seed")

    p_replay = sub.add_parser("replay", help="re-classify a dataset CSV with a backend")
    p_replay.add_argument("dataset")
    p_replay.add_argument("--backend", required=True)
    p_replay.add_argument("--window-len", type=float, default=10.0)

    p_report = sub.add_parser("report", help="score a dataset CSV (stored predictions)")
    p_report.add_argument("dataset")

    p_validate = sub.add_parser("validate", help="check a scenario config")
    p_validate.add_argument("config")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    try:
        if args.command == "validate":
            cfg = load_scenario(args.config)
            problems = config_problems(cfg)
            for warning in config_warnings(cfg):
                print(f"warning: {warning}")
            if problems:
                for p in problems:
                    print(f"invalid: {p}")
                return 1
            print("ok")
            return 0

        if args.command == "run":
            cfg = load_scenario(args.config)
            if args.seed is not None:
                cfg.sim.seed = args.seed
            try:
                scenario = run_scenario(cfg)
            except ConfigError as e:
                for p in e.problems:
                    print(f"invalid: {p}")
                return 1
            print(report_json(scenario.report), end="")
            return 0

        if args.command == "replay":
            backend = _backend_from_arg(args.backend, args.window_len)
            report = replay_dataset(args.dataset, backend, window_len_s=args.window_len)
            print(report_json(report), end="")
            return 0

        if args.command == "report":
            records, skipped = read_dataset(args.dataset)
            report = metrics_report([(r.prediction, r.label) for r in records])
            report["rows"] = len(records)
            report["skipped"] = skipped
            print(report_json(report), end="")
            pct = report["percent"]
            print(
                f"accuracy {pct['accuracy']}% precision {pct['precision']}% "
                f"recall {pct['recall']}% f1 {pct['f1']}%",
                file=sys.stderr,
            )
            return 0
    except (OSError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
