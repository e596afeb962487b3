"""Command line entry point.

    cctskit <stage> --scenario scenario.toml [--sej off|sej3|sej8]
            [--seed N] [--out DIR]

Exit codes: 0 success, 2 infeasible problem, 1 any other error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .netdesign import InfeasibleError
from .pipeline import STAGES, MissingArtifactError, run
from .scenario import export_json, load_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cctskit",
        description="CO2 capture, transport, and storage hub design toolkit",
    )
    parser.add_argument("stage", choices=STAGES + ("all",))
    parser.add_argument("--scenario", required=True, help="path to scenario TOML")
    parser.add_argument(
        "--sej", choices=("off", "sej3", "sej8"), default=None,
        help="override the scenario's SEJ routing mode",
    )
    parser.add_argument("--seed", type=int, default=None, help="override the seed")
    parser.add_argument("--out", default=None, help="override the output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(
            args.scenario, sej_mode=args.sej, seed=args.seed, output_dir=args.out
        )
    except (ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    try:
        run(scenario, args.stage)
    except InfeasibleError as err:
        scenario.output_dir.mkdir(parents=True, exist_ok=True)
        diagnostic = {"infeasible": True, "binding": err.binding, "detail": str(err)}
        (scenario.output_dir / "infeasible.json").write_text(
            json.dumps(diagnostic, indent=2, sort_keys=True) + "\n"
        )
        print(f"infeasible: {err}", file=sys.stderr)
        return 2
    except MissingArtifactError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    export_json(scenario, scenario.output_dir / "scenario.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
