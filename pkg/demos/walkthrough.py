"""A small end-to-end tour of the Python API.

Plays a few battles with a belief-sensitive scripted agent, audits its
explanations, runs one belief intervention and writes the report.

    python demos/walkthrough.py [out_dir]
"""

import sys

from holdem_xai.baselines import ARCHETYPES
from holdem_xai.config import GameConfig, RunManifest, SeatSpec
from holdem_xai.metrics import run_metrics, summarize_intervention
from holdem_xai.report import report_run
from holdem_xai.runner import run_audits, run_battles, run_intervention, run_paths


def main(out_dir: str = "demo-runs") -> None:
    manifest = RunManifest(
        game=GameConfig(battles=3, hands_per_battle=10, mc_simulations=300),
        seats=(SeatSpec("model", "scripted-threshold"),) + tuple(SeatSpec("archetype", a) for a in ARCHETYPES),
        oracles=("scripted-oracle-a", "scripted-oracle-b"),
        out_dir=out_dir,
    )
    paths = run_paths(manifest)

    outcomes = run_battles(manifest)
    print(f"played {len(outcomes)} battles into {paths.root}")

    counts = run_audits(manifest)
    print(f"rule audits: {counts['rule']}, oracle audits: {counts['oracle']}")

    # raise the believed aggressiveness of every opponent and see what the agent does
    result = run_intervention(manifest, "aggressiveness", "up", runs=3)[0]
    summary = summarize_intervention(result)
    print(f"intervention on {summary.n} decisions: CR(ReO->ReI)={summary.cr_reo_rei:.3f}, "
          f"Dir.Cons.={summary.directional_consistency}")

    metrics = run_metrics(paths, oracles=manifest.oracles)
    print(f"model decisions: {metrics['counts']['model_decisions']}")
    for path in report_run(paths):
        print("wrote", path)


if __name__ == "__main__":
    main(*sys.argv[1:2])
