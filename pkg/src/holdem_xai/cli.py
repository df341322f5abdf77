"""Command line entry point: play, audit, intervene, metrics, report."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from typing import Sequence

from .beliefs import TRAITS
from .config import ConfigError, RunManifest, load_manifest
from .model_client import TransportError
from .runner import DataError, run_audits, run_battles, run_interventions, run_paths
from .trace_store import TraceSchemaError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRANSPORT = 3
EXIT_DATA = 4

logger = logging.getLogger("holdem_xai")


def build_manifest(args: argparse.Namespace) -> RunManifest:
    m = load_manifest(args.config) if args.config else RunManifest()
    game = m.game
    if args.seed is not None:
        game = dataclasses.replace(game, rng_seed=args.seed)
    if args.battles is not None:
        game = dataclasses.replace(game, battles=args.battles)
    changes: dict = {"game": game}
    if args.out is not None:
        changes["out_dir"] = args.out
    if args.offline:
        changes["offline"] = True
    if getattr(args, "oracle", None):
        changes["oracles"] = tuple(args.oracle)
    if getattr(args, "runs", None) is not None:
        changes["interventions"] = dataclasses.replace(m.interventions, runs=args.runs)
    try:
        return dataclasses.replace(m, **changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_play(args, m: RunManifest) -> dict:
    outcomes = run_battles(m, force=args.force)
    return {"battles": len(outcomes), "aborted": sum(1 for o in outcomes if o.status != "complete")}


def cmd_audit(args, m: RunManifest) -> dict:
    return run_audits(m, force=args.force)


def cmd_intervene(args, m: RunManifest) -> dict:
    traits = [args.trait] if args.trait else None
    directions = [args.direction] if args.direction else None
    files = run_interventions(m, force=args.force, traits=traits, directions=directions, runs=args.runs)
    return {"files": [str(p) for p in files]}


def cmd_metrics(args, m: RunManifest) -> dict:
    from .metrics import run_metrics

    paths = run_paths(m)
    if not paths.trace_files():
        raise DataError(f"no traces under {paths.traces}; run play first")
    result = run_metrics(paths, m.oracles, seed=m.game.rng_seed, force=args.force)
    return {"metrics": str(paths.metrics / "metrics.json"), "counts": result["counts"]}


def cmd_report(args, m: RunManifest) -> dict:
    from .report import report_run

    try:
        files = report_run(run_paths(m))
    except FileNotFoundError as exc:
        raise DataError(str(exc)) from exc
    return {"files": [str(p) for p in files]}


COMMANDS = {
    "play": cmd_play,
    "audit": cmd_audit,
    "intervene": cmd_intervene,
    "metrics": cmd_metrics,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run manifest (JSON)")
    common.add_argument("--seed", type=int, help="override the master RNG seed")
    common.add_argument("--battles", type=int, help="override the number of battles")
    common.add_argument("--out", help="output directory for run folders")
    common.add_argument("--offline", action="store_true", help="never contact HTTP endpoints")
    common.add_argument("--force", action="store_true", help="rerun the stage even if it is current")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="holdem-xai", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("play", parents=[common], help="play the configured battles")
    audit = sub.add_parser("audit", parents=[common], help="rule and oracle audits over traces")
    audit.add_argument("--oracle", action="append", help="oracle model name (repeatable)")
    iv = sub.add_parser("intervene", parents=[common], help="Log/ReO/ReI belief intervention reruns")
    iv.add_argument("--trait", choices=TRAITS)
    iv.add_argument("--direction", choices=("up", "down"))
    iv.add_argument("--runs", type=int)
    met = sub.add_parser("metrics", parents=[common], help="compute metrics from persisted files")
    met.add_argument("--oracle", action="append", help="oracle model name (repeatable)")
    sub.add_parser("report", parents=[common], help="render tables and figures")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        manifest = build_manifest(args)
        result = COMMANDS[args.command](args, manifest)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (DataError, TraceSchemaError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(json.dumps({"command": args.command, "run": str(run_paths(manifest).root), **result}, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
