# main_lab.py: config-driven sweeps for the partial-localization energy lab
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from Domain.experiment import ExperimentConfig, ResultRow, load_config, write_rows
from Pipeline.experiments import run_experiment
from Pipeline.oracle_suite import audit_rows, run_oracle_suite
from Shared.errors import ConfigError, InvariantFailure, LabError
from Shared.log import configure_logging

# -------------------------
# Subcommand -> experiment kind
# -------------------------
SUBCOMMANDS = {
    "convergence": "convergence",
    "grid": "grid-validation",
    "scaling": "scaling",
    "ring": "ring-sweep",
}

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVARIANT = 2


# -------------------------
# Helpers
# -------------------------
def check_rows(kind: str, rows: List[ResultRow]) -> None:
    """Audit rows against independent oracles; any disagreement is an invariant failure."""
    problems = audit_rows(kind, rows)
    if problems:
        raise InvariantFailure("; ".join(problems))


def print_rows_summary(rows: List[ResultRow]) -> None:
    failed = [r for r in rows if r.error]
    print(f"[info] rows: {len(rows)} ({len(failed)} with errors)")
    for r in failed:
        print(f"[warn]   {r.experiment}: {r.error}")
    for r in rows:
        if r.experiment.endswith(":summary"):
            shown = {k: v for k, v in r.values.items() if v is not None}
            print(f"[info] summary: {shown}")


def run_subcommand(kind: str, config_path: Path, out_path: Optional[Path]) -> Path:
    cfg: ExperimentConfig = load_config(config_path)
    if cfg.kind != kind:
        raise ConfigError(f"{config_path} describes a '{cfg.kind}' experiment, not '{kind}'")

    out = out_path or cfg.output
    if out is None:
        raise ConfigError("no output path: pass --out or set 'output' in the config")

    print(f"[run ] {cfg.experiment_id} ({kind}) from {config_path}")
    rows = run_experiment(cfg)
    check_rows(kind, rows)
    saved = write_rows(rows, cfg, Path(out))
    print_rows_summary(rows)
    print(f"[done] CSV saved: {saved}")
    return saved


def run_check() -> int:
    print("[run ] oracle suite")
    results = run_oracle_suite()
    for res in results:
        tag = "[ ok ]" if res.passed else "[FAIL]"
        print(f"{tag} {res.name}: {res.detail}")
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"[error] {len(failed)} of {len(results)} checks failed")
        return EXIT_INVARIANT
    print(f"[done] all {len(results)} checks passed")
    return EXIT_OK


# -------------------------
# Main (argparse)
# -------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Run convergence, grid-validation, scaling and ring-sweep studies from JSON configs."
    )
    parser.add_argument(
        "--check",
        action="store_true",
        help="Run the built-in oracle suite and exit (2 on any failure).",
    )
    parser.add_argument("--verbose", action="store_true", help="Debug-level logging.")

    sub = parser.add_subparsers(dest="command")
    for name, kind in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"Run a '{kind}' experiment.")
        p.add_argument("--config", type=Path, required=True, help="Path to the JSON config.")
        p.add_argument(
            "--out",
            type=Path,
            default=None,
            help="Output CSV path (overrides 'output' in the config).",
        )
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    if args.check:
        return run_check()
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG

    try:
        run_subcommand(SUBCOMMANDS[args.command], args.config, args.out)
    except (ConfigError, ValidationError) as e:
        print(f"[error] {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantFailure as e:
        print(f"[error] invariant failure: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except LabError as e:
        # e.g. a curve spec that cannot be sampled
        print(f"[error] {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""
python main_lab.py convergence \
  --config configs/convergence_circle.json \
  --out results/convergence_circle.csv

python main_lab.py grid --config configs/grid_ring.json --out results/grid_ring.csv

python main_lab.py --check
"""
