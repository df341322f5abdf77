"""Render computed metrics as CSV, markdown tables and SVG figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .audit import OUTCOMES  # noqa: E402
from .beliefs import TRAIT_LABELS, TRAITS  # noqa: E402
from .engine.table import STREETS  # noqa: E402
from .features import BUCKETS  # noqa: E402
from .metrics import ACTIONS, RADAR_DIMENSIONS  # noqa: E402
from .trace_store import RunPaths  # noqa: E402

STRATIFIED_COLUMNS = (
    ("group", "Group"),
    ("N", "N"),
    ("rule", "Rule"),
    ("oracle", "Oracle"),
    ("rat_rule", "Rat.(Rule)"),
    ("rat_oracle", "Rat.(Oracle)"),
    ("rho", "ρ(Rule,Oracle)"),
    ("high_risk", "HighRisk"),
    ("freq", "Freq"),
)
INTERVENTION_COLUMNS = (
    ("model", "Model"),
    ("trait", "Trait"),
    ("direction", "Dir"),
    ("cr_log_reo", "CR(Log→ReO)"),
    ("cr_log_rei", "CR(Log→ReI)"),
    ("cr_reo_rei", "CR(ReO→ReI)"),
    ("delta_fold", "Δfold"),
    ("delta_call", "Δcall"),
    ("delta_raise", "Δraise"),
    ("directional_consistency", "Dir.Cons."),
    ("changed", "Changed"),
    ("runs", "Runs"),
)
STRATA_TITLES = {
    "all": "Overall",
    "street": "By street",
    "risk": "By risk level",
    "model": "By model",
    "bucket": "By hand-strength bucket",
    "action": "By executed action",
}
OUTCOME_COLORS = {"Faithful": "#4c9a2a", "Rationalized": "#c0392b", "Uncertain": "#9e9e9e"}


def ordered(keys, preferred) -> list:
    """Keys in a preferred order first, then any others sorted."""
    keys = list(keys)
    return [k for k in preferred if k in keys] + sorted(k for k in keys if k not in preferred)


def fmt(v, digits: int = 3) -> str:
    if v is None:
        return "n/a"
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.{digits}f}"
    return str(v)


def markdown_table(rows: Sequence[dict], columns: Sequence[tuple[str, str]]) -> str:
    head = "| " + " | ".join(title for _, title in columns) + " |"
    sep = "|" + "|".join("---" for _ in columns) + "|"
    body = ["| " + " | ".join(fmt(r.get(k)) for k, _ in columns) + " |" for r in rows]
    return "\n".join([head, sep, *body])


def write_csv(path: Path, rows: Sequence[dict], columns: Sequence[tuple[str, str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([title for _, title in columns])
        for r in rows:
            w.writerow(["" if r.get(k) is None else r.get(k) for k, _ in columns])


def matrix_table(names: Sequence[str], matrix: Sequence[Sequence]) -> str:
    head = "| | " + " | ".join(names) + " |"
    sep = "|---|" + "|".join("---" for _ in names) + "|"
    body = [f"| {n} | " + " | ".join(fmt(v) for v in row) + " |" for n, row in zip(names, matrix)]
    return "\n".join([head, sep, *body])


# ------------------------------------------------------------------ figures

def plot_outcomes_by_street(dist: dict, path: Path) -> None:
    """Stacked horizontal bars of outcome shares per street."""
    streets = [s for s in dist if dist[s]["shares"] is not None]
    fig, ax = plt.subplots(figsize=(6.4, 2.8))
    left = np.zeros(len(streets))
    for outcome in OUTCOMES:
        vals = np.array([dist[s]["shares"][outcome] for s in streets])
        ax.barh(streets, vals, left=left, color=OUTCOME_COLORS[outcome], label=outcome)
        for y, (x0, w) in enumerate(zip(left, vals)):
            if w >= 0.06:
                ax.text(x0 + w / 2, y, f"{w:.0%}", ha="center", va="center", fontsize=8, color="white")
        left += vals
    ax.set_xlim(0, 1)
    ax.invert_yaxis()
    ax.set_xlabel("share of audited decisions")
    ax.legend(ncol=3, loc="upper center", bbox_to_anchor=(0.5, 1.22), frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_convergence(curves: dict, path: Path) -> None:
    """Per-trait Spearman-vs-round curves for one model seat."""
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    for trait in TRAITS:
        c = curves.get(trait)
        if c and c["round"]:
            ax.plot(c["round"], c["mean"], marker="o", markersize=3, label=TRAIT_LABELS[trait])
    ax.axhline(0, color="black", linewidth=0.5)
    ax.set_ylim(-1.05, 1.05)
    ax.set_xlabel("round (hand)")
    ax.set_ylabel("Spearman vs reference ordering")
    ax.legend(fontsize=7, loc="lower right")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_radar(radar: dict, path: Path) -> None:
    dims = list(RADAR_DIMENSIONS)
    angles = np.linspace(0, 2 * np.pi, len(dims), endpoint=False)
    closed = np.concatenate([angles, angles[:1]])
    fig = plt.figure(figsize=(5.2, 5.2))
    ax = fig.add_subplot(111, polar=True)
    for model, values in sorted(radar.items()):
        v = np.array([values.get(d) if values.get(d) is not None else 0.0 for d in dims])
        ax.plot(closed, np.concatenate([v, v[:1]]), label=model)
        ax.fill(closed, np.concatenate([v, v[:1]]), alpha=0.1)
    ax.set_xticks(angles)
    ax.set_xticklabels([d.replace("_", "\n") for d in dims], fontsize=7)
    ax.set_ylim(0, 1)
    ax.legend(fontsize=7, loc="upper right", bbox_to_anchor=(1.3, 1.1))
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# ------------------------------------------------------------------ report

def build_report(metrics: dict, out_dir: Path) -> list[Path]:
    """Write every table and figure under ``out_dir``; returns the files written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    md = ["# Run report", ""]

    c = metrics["counts"]
    md += ["## Counts", ""]
    md += [f"- {k}: {fmt(v) if not isinstance(v, dict) else json.dumps(v, sort_keys=True)}" for k, v in sorted(c.items())]
    md.append("")

    md += ["## First-person faithfulness", ""]
    for by in ordered(metrics["stratified"], STRATA_TITLES):
        rows = metrics["stratified"][by]
        md += [f"### {STRATA_TITLES.get(by, by)}", "", markdown_table(rows, STRATIFIED_COLUMNS), ""]
        p = out_dir / f"stratified_{by}.csv"
        write_csv(p, rows, STRATIFIED_COLUMNS)
        written.append(p)

    if metrics.get("oracle_rule_alignment"):
        md += ["### Rule vs oracle agreement", ""]
        rows = []
        for oracle, res in metrics["oracle_rule_alignment"].items():
            rows.append({"oracle": oracle, "group": "all", **res["all"]})
            for by in ("street", "bucket", "action"):
                rows += [{"oracle": oracle, "group": f"{by}={g}", **res[by][g]}
                         for g in ordered(res[by], (*STREETS, *BUCKETS, *ACTIONS))]
        cols = (("oracle", "Oracle"), ("group", "Group"), ("rho", "ρ"), ("n", "N"))
        md += [markdown_table(rows, cols), ""]

    dist = {s: metrics["outcomes_by_street"][s] for s in ordered(metrics["outcomes_by_street"], STREETS)}
    rows = [{"street": s, "n": d["n"], "models": d["n_models"], **(d["shares"] or {})} for s, d in dist.items()]
    cols = (("street", "Street"), ("n", "N"), ("models", "Models"), *((o, o) for o in OUTCOMES))
    md += ["## Outcome distribution by street", "", markdown_table(rows, cols), "",
           "![outcomes](outcomes_by_street.svg)", ""]
    write_csv(out_dir / "outcomes_by_street.csv", rows, cols)
    plot_outcomes_by_street(dist, out_dir / "outcomes_by_street.svg")
    written += [out_dir / "outcomes_by_street.csv", out_dir / "outcomes_by_street.svg"]

    if metrics["interventions"]:
        md += ["## Belief interventions", "", markdown_table(metrics["interventions"], INTERVENTION_COLUMNS), ""]
        write_csv(out_dir / "interventions.csv", metrics["interventions"], INTERVENTION_COLUMNS)
        written.append(out_dir / "interventions.csv")

    if metrics["second_person"]:
        md += ["## Second-person alignment", ""]
        rows = [{"oracle": o, "window": k, **v} for o, per in metrics["second_person"].items() for k, v in per.items()]
        cols = (("oracle", "Oracle"), ("window", "K"), ("n", "N"), ("rho", "ρ(align, reference)"),
                ("dir_acc", "DirAcc"), ("missing", "Missing"))
        md += [markdown_table(rows, cols), ""]
        write_csv(out_dir / "second_person.csv", rows, cols)
        written.append(out_dir / "second_person.csv")

    if metrics.get("trait_proxy_alignment"):
        md += ["## Trait-proxy alignment", ""]
        rows = [{"player": p, "trait": t, **v} for p, res in metrics["trait_proxy_alignment"].items() for t, v in res.items()]
        cols = (("player", "Player"), ("trait", "Trait"), ("proxy", "Proxy"), ("rho", "ρ"),
                ("p_value", "p (perm.)"), ("p_asymptotic", "p (asympt.)"), ("n", "N"))
        md += [markdown_table(rows, cols), ""]

    if metrics.get("cross_oracle"):
        fp = metrics["cross_oracle"]["first_person"]
        md += ["## Cross-oracle agreement", "", "Quadratic κ on overall faithfulness:", "",
               matrix_table(fp["oracles"], fp["kappa_quadratic_overall"]), ""]
        for dim, m in fp["spearman"].items():
            md += [f"Spearman on {dim}:", "", matrix_table(fp["oracles"], m), ""]
        for k, sp in metrics["cross_oracle"]["second_person"].items():
            md += [f"Second person, K={k}, κ on direction labels:", "",
                   matrix_table(sp["oracles"], sp["kappa_direction"]), ""]

    for player, curves in metrics.get("convergence", {}).items():
        p = out_dir / f"convergence_{player}.svg"
        plot_convergence(curves, p)
        written.append(p)
        md += [f"## Belief convergence ({player})", "", f"![convergence]({p.name})", ""]

    if metrics.get("radar"):
        rows = [{"model": m, **v} for m, v in sorted(metrics["radar"].items())]
        cols = (("model", "Model"), *((d, d) for d in RADAR_DIMENSIONS))
        md += ["## Behavioral profile (rank-normalized)", "", markdown_table(rows, cols), "", "![radar](radar.svg)", ""]
        plot_radar(metrics["radar"], out_dir / "radar.svg")
        written.append(out_dir / "radar.svg")

    (out_dir / "report.md").write_text("\n".join(md), encoding="utf-8")
    written.append(out_dir / "report.md")
    return written


def report_run(paths: RunPaths) -> list[Path]:
    target = paths.metrics / "metrics.json"
    if not target.exists():
        raise FileNotFoundError(f"{target} missing; run the metrics stage first")
    return build_report(json.loads(target.read_text(encoding="utf-8")), paths.report)
