"""Statistics over persisted traces, audits and intervention reruns.

Everything here reads files or plain rows; no model access is needed.
Undefined statistics (constant series, empty strata, no changed decisions)
come back as ``None`` and are counted, never propagated as NaN.
"""

from __future__ import annotations

import itertools
import json
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .audit import OUTCOMES, RuleAuditReport, classify_outcome
from .baselines import REFERENCE_TRAITS, ReferenceTraits
from .beliefs import TRAITS
from .engine.table import STREETS
from .features import BUCKETS, PROXIES, BehaviorStats
from .protocol.parse import OracleReport
from .trace_store import (
    RunPaths,
    decision_key,
    files_digest,
    iter_trace_rows,
    mark_stage,
    read_jsonl,
    stage_is_current,
)

COARSE = ("fold", "call", "raise")
ACTIONS = ("FOLD", "CALL", "RAISE")
RISK_LEVELS = ("low", "high")
EXACT_PERMUTATION_MAX_N = 7
MONTE_CARLO_RESAMPLES = 10_000


class AlignmentError(ValueError):
    """Action sets to be compared do not cover the same decision keys."""


# ------------------------------------------------------------- correlation

def _check_pairs(x: Sequence[float], y: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("series must be 1-D and of equal length")
    if len(x) < 2:
        raise ValueError("need at least two pairs")
    return x, y


def _pearson_of_ranks(x: np.ndarray, y: np.ndarray, axis: int = -1) -> np.ndarray:
    rx, ry = stats.rankdata(x, axis=axis), stats.rankdata(y, axis=axis)
    rx = rx - rx.mean(axis=axis, keepdims=True)
    ry = ry - ry.mean(axis=axis, keepdims=True)
    den = np.sqrt((rx * rx).sum(axis=axis) * (ry * ry).sum(axis=axis))
    with np.errstate(invalid="ignore", divide="ignore"):
        return (rx * ry).sum(axis=axis) / den


def spearman(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Pearson correlation of average ranks; ``None`` when either series is constant."""
    x, y = _check_pairs(x, y)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return None
    return float(np.clip(_pearson_of_ranks(x, y), -1.0, 1.0))


@dataclass(frozen=True)
class CorrelationTest:
    rho: float | None
    p_value: float | None
    p_asymptotic: float | None
    n: int
    exact: bool

    def to_dict(self) -> dict:
        return asdict(self)


def spearman_test(x: Sequence[float], y: Sequence[float], seed: int = 0) -> CorrelationTest:
    """Spearman rho with a two-sided permutation p-value.

    All n! pairings are enumerated for n <= 7; larger samples use 10k
    Monte Carlo pairings. The t-approximation p-value is reported alongside.
    """
    x, y = _check_pairs(x, y)
    n = len(x)
    rho = spearman(x, y)
    if rho is None:
        return CorrelationTest(None, None, None, n, n <= EXACT_PERMUTATION_MAX_N)
    # permute x only: n! pairings (permuting both samples would count n!^2)
    res = stats.permutation_test(
        (x,),
        lambda a, axis=-1: _pearson_of_ranks(a, np.broadcast_to(y, a.shape), axis=axis),
        permutation_type="pairings",
        vectorized=True,
        n_resamples=MONTE_CARLO_RESAMPLES,
        alternative="two-sided",
        random_state=np.random.default_rng(seed),
    )
    exact = n <= EXACT_PERMUTATION_MAX_N
    p_asym = None
    if n > 2:
        p_asym = 0.0 if abs(rho) == 1.0 else float(stats.spearmanr(x, y).pvalue)
    return CorrelationTest(rho, float(min(1.0, res.pvalue)), p_asym, n, exact)


# ------------------------------------------------------------------- kappa

def cohens_kappa(
    a: Sequence,
    b: Sequence,
    categories: Sequence | None = None,
    weights: str = "quadratic",
) -> float | None:
    """Cohen's kappa with ``quadratic`` (ordinal) or ``none`` (nominal) weights.

    ``categories`` fixes the scale order; by default the sorted union of
    observed labels. ``None`` signals a degenerate table (no chance disagreement).
    """
    if len(a) != len(b):
        raise ValueError("label vectors differ in length")
    if len(a) < 2:
        raise ValueError("need at least two joint observations")
    cats = list(categories) if categories is not None else sorted(set(a) | set(b))
    index = {c: i for i, c in enumerate(cats)}
    k = len(cats)
    if k < 2:
        return None
    table = np.zeros((k, k))
    for u, v in zip(a, b):
        table[index[u], index[v]] += 1
    table /= table.sum()
    i, j = np.indices((k, k))
    if weights == "quadratic":
        w = (i - j) ** 2 / (k - 1) ** 2
    elif weights == "none":
        w = (i != j).astype(float)
    else:
        raise ValueError(f"unknown weights {weights!r}")
    expected = np.outer(table.sum(axis=1), table.sum(axis=0))
    den = (w * expected).sum()
    if den == 0:
        return None
    return float(1.0 - (w * table).sum() / den)


def cohens_kappa_quadratic(a: Sequence, b: Sequence, categories: Sequence | None = None) -> float | None:
    return cohens_kappa(a, b, categories, "quadratic")


# ------------------------------------------------------------ change rates

# Expected sign of the coarse-class shift (fold < call < raise) for an "up"
# intervention on a trait of every opponent, per hand-strength bucket. Believing
# opponents more aggressive / risk-tolerant / sticky means tighter play with
# weak and medium hands and more value raising with strong hands. "down"
# flips every sign.
DIRECTION_SIGNS_VERSION = "signs-v1"
_PRESSURE = {"weak": -1, "medium": -1, "strong": 1}
DIRECTION_SIGNS: dict[str, dict[str, int]] = {
    "aggressiveness": dict(_PRESSURE),
    "risk_tolerance": dict(_PRESSURE),
    "calling_station_tendency": dict(_PRESSURE),
    "showdown_propensity": dict(_PRESSURE),
    "bluff_frequency": {"weak": 1, "medium": 1, "strong": 1},
}


def expected_sign(trait: str, direction: str, bucket: str, signs: Mapping = DIRECTION_SIGNS) -> int:
    s = signs[trait][bucket]
    return s if direction == "up" else -s


def aligned(a: Mapping, b: Mapping) -> list:
    """Shared keys of two keyed action maps; any mismatch is an error."""
    if set(a) != set(b):
        only_a, only_b = sorted(set(a) - set(b))[:3], sorted(set(b) - set(a))[:3]
        raise AlignmentError(f"decision keys differ: only in first {only_a}, only in second {only_b}")
    return sorted(a)


def change_rate(a: Sequence[str], b: Sequence[str]) -> float:
    if len(a) != len(b):
        raise AlignmentError("action sequences differ in length")
    if not a:
        raise ValueError("no decisions to compare")
    return sum(x != y for x, y in zip(a, b)) / len(a)


def class_rates(actions: Sequence[str]) -> dict[str, float]:
    c = Counter(actions)
    return {k: c[k] / len(actions) for k in COARSE}


def class_deltas(a: Sequence[str], b: Sequence[str]) -> dict[str, float]:
    ra, rb = class_rates(a), class_rates(b)
    return {k: rb[k] - ra[k] for k in COARSE}


def directional_consistency(
    before: Sequence[str],
    after: Sequence[str],
    buckets: Sequence[str],
    trait: str,
    direction: str,
    signs: Mapping = DIRECTION_SIGNS,
) -> tuple[float | None, int]:
    """Share of changed decisions that moved in the expected direction, and the change count."""
    hits = changed = 0
    for x, y, bucket in zip(before, after, buckets):
        if x == y:
            continue
        changed += 1
        moved = 1 if COARSE.index(y) > COARSE.index(x) else -1
        hits += moved == expected_sign(trait, direction, bucket, signs)
    return (hits / changed if changed else None), changed


@dataclass(frozen=True)
class ChangeRateSummary:
    cr_log_reo: float
    cr_log_rei: float
    cr_reo_rei: float
    var_log_reo: float
    var_log_rei: float
    var_reo_rei: float
    delta_fold: float
    delta_call: float
    delta_raise: float
    directional_consistency: float | None
    changed: int
    runs: int
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def change_rates(
    log: Sequence[str],
    reo: Sequence[Sequence[str]],
    rei: Sequence[Sequence[str]],
    buckets: Sequence[str],
    trait: str,
    direction: str,
    signs: Mapping = DIRECTION_SIGNS,
) -> ChangeRateSummary:
    """Rerun-controlled change rates over aligned coarse actions.

    ``reo`` and ``rei`` hold one action list per run. Class deltas and
    directional consistency compare the intervened reruns to the logged
    decisions, pooled over runs.
    """
    if len(reo) != len(rei) or not reo:
        raise AlignmentError("need the same positive number of ReO and ReI runs")
    n = len(log)
    if len(buckets) != n or any(len(r) != n for r in (*reo, *rei)):
        raise AlignmentError("runs are not aligned with the logged decisions")
    lr = [change_rate(log, r) for r in reo]
    li = [change_rate(log, r) for r in rei]
    ri = [change_rate(a, b) for a, b in zip(reo, rei)]
    pooled_log = list(log) * len(rei)
    pooled_rei = [a for run in rei for a in run]
    deltas = class_deltas(pooled_log, pooled_rei)
    dc, changed = directional_consistency(pooled_log, pooled_rei, list(buckets) * len(rei), trait, direction, signs)
    return ChangeRateSummary(
        float(np.mean(lr)), float(np.mean(li)), float(np.mean(ri)),
        float(np.var(lr)), float(np.var(li)), float(np.var(ri)),
        deltas["fold"], deltas["call"], deltas["raise"],
        dc, changed, len(reo), n,
    )


def summarize_intervention(result, signs: Mapping = DIRECTION_SIGNS) -> ChangeRateSummary:
    """ChangeRateSummary for a runner ``InterventionResult``."""
    return change_rates(result.log, result.reo, result.rei, result.buckets, result.trait, result.direction, signs)


# ---------------------------------------------------- second-person alignment

def _stats_sum(items: Iterable[BehaviorStats]) -> BehaviorStats:
    total = BehaviorStats().to_dict()
    for s in items:
        for k, v in s.to_dict().items():
            total[k] += v
    return BehaviorStats(**total)


def trait_proxy_alignment(
    profiles: Mapping[str, Mapping[str, float]],
    behavior: Mapping[str, BehaviorStats],
    proxies: Sequence[str] = PROXIES,
    seed: int = 0,
) -> dict[str, dict]:
    """For each trait, the proxy with the largest |rho| across opponents.

    ``profiles`` maps opponent -> trait -> value and ``behavior`` maps
    opponent -> stats. Constant proxies are skipped and listed.
    """
    opps = sorted(set(profiles) & set(behavior))
    if len(opps) < 4:
        raise ValueError(f"need at least 4 opponents with profiles and stats, got {len(opps)}")
    out = {}
    for trait in TRAITS:
        x = [profiles[o][trait] for o in opps]
        best, skipped = None, []
        for proxy in proxies:
            y = [getattr(behavior[o], proxy) for o in opps]
            rho = spearman(x, y)
            if rho is None:
                skipped.append(proxy)
                continue
            if best is None or abs(rho) > abs(best[1]):
                best = (proxy, rho, y)
        if best is None:
            out[trait] = {"proxy": None, "rho": None, "p_value": None, "p_asymptotic": None,
                          "n": len(opps), "skipped": skipped}
            continue
        test = spearman_test(x, best[2], seed)
        out[trait] = {"proxy": best[0], "rho": best[1], "p_value": test.p_value,
                      "p_asymptotic": test.p_asymptotic, "n": len(opps), "skipped": skipped}
    return out


def summary_rows(rows: Iterable[dict]) -> list[dict]:
    return [r for r in rows if r.get("type") == "hand_summary"]


def seat_names(rows: Iterable[dict]) -> dict[str, dict]:
    for r in summary_rows(rows):
        return {s["player_id"]: s for s in r["seats"]}
    return {}


def convergence_curve(
    rows: Iterable[dict],
    trait: str,
    reference: ReferenceTraits = REFERENCE_TRAITS,
    model_player: str | None = None,
) -> dict:
    """Per-hand Spearman of profiled trait values against the reference ordering.

    Only opponents seated as archetypes count. Each battle contributes one
    correlation per hand; the curve averages them across battles.
    """
    per_hand: dict[int, list[float]] = defaultdict(list)
    skipped = 0
    by_battle: dict[int, list[dict]] = defaultdict(list)
    for r in summary_rows(rows):
        by_battle[r["battle_id"]].append(r)
    for battle_rows in by_battle.values():
        seats = {s["player_id"]: s for s in battle_rows[0]["seats"]}
        for r in battle_rows:
            for model, opps in r["profiles"].items():
                if model_player is not None and model != model_player:
                    continue
                refs = [o for o in sorted(opps) if seats[o]["kind"] == "archetype" and seats[o]["name"] in reference.values]
                if len(refs) < 2:
                    skipped += 1
                    continue
                rho = spearman([opps[o][trait] for o in refs], [reference.values[seats[o]["name"]][trait] for o in refs])
                if rho is None:
                    skipped += 1
                    continue
                per_hand[r["hand_id"]].append(rho)
    hands = sorted(per_hand)
    return {
        "trait": trait,
        "round": [h + 1 for h in hands],
        "mean": [float(np.mean(per_hand[h])) for h in hands],
        "n": [len(per_hand[h]) for h in hands],
        "skipped": skipped,
    }


def archetype_profiles_and_stats(rows: Sequence[dict], model_player: str) -> tuple[dict, dict]:
    """Final profile values (averaged over battles) and pooled stats per archetype opponent."""
    values: dict[str, list[dict]] = defaultdict(list)
    pooled: dict[str, list[BehaviorStats]] = defaultdict(list)
    by_battle: dict[int, list[dict]] = defaultdict(list)
    for r in summary_rows(rows):
        by_battle[r["battle_id"]].append(r)
    for battle_rows in by_battle.values():
        last = battle_rows[-1]
        seats = {s["player_id"]: s for s in last["seats"]}
        if model_player not in last["profiles"]:
            continue
        for opp, traits in last["profiles"][model_player].items():
            if seats[opp]["kind"] != "archetype":
                continue
            values[seats[opp]["name"]].append(traits)
            pooled[seats[opp]["name"]].append(BehaviorStats.from_dict(last["stats"][opp]))
    profiles = {a: {t: float(np.mean([v[t] for v in vs])) for t in TRAITS} for a, vs in values.items()}
    return profiles, {a: _stats_sum(s) for a, s in pooled.items()}


def second_person_summary(records: Sequence[dict], oracles: Sequence[str]) -> dict:
    """Per oracle and window: rho(oracle align, reference align) and directional accuracy."""
    out: dict = {}
    for oracle in oracles:
        per_window: dict = {}
        for k in sorted({r["window"] for r in records}):
            xs, ys = [], []
            hits: Counter = Counter()
            totals: Counter = Counter()
            missing = 0
            for r in records:
                if r["window"] != k:
                    continue
                rec = r["oracles"].get(oracle)
                if rec is None or rec["status"] != "ok":
                    missing += 1
                    continue
                rep = rec["report"]
                xs.append(rep["align_score"])
                ys.append(sum(r["reference"]["align"].values()))
                for t, per_opp in r["reference"]["labels"].items():
                    for o, label in per_opp.items():
                        pred = rep["direction_pred"].get(t, {}).get(o)
                        if pred is None:
                            continue
                        totals[t] += 1
                        hits[t] += pred == label
            n_lab = sum(totals.values())
            per_window[k] = {
                "n": len(xs),
                "missing": missing,
                "rho": spearman(xs, ys) if len(xs) >= 2 else None,
                "dir_acc": sum(hits.values()) / n_lab if n_lab else None,
                "dir_acc_by_trait": {t: hits[t] / totals[t] for t in TRAITS if totals[t]},
            }
        out[oracle] = per_window
    return out


# ---------------------------------------------------------- first-person audits

@dataclass
class JoinedDecision:
    key: tuple
    model: str
    street: str
    bucket: str
    action: str
    high_risk: bool
    rule: RuleAuditReport | None
    oracles: dict[str, OracleReport] = field(default_factory=dict)

    @property
    def oracle_score(self) -> float | None:
        if not self.oracles:
            return None
        return float(np.mean([o.overall_faithfulness for o in self.oracles.values()]))

    @property
    def oracle_rationalized(self) -> float | None:
        """Share of oracles judging the explanation rationalized."""
        if not self.oracles:
            return None
        return float(np.mean([oracle_rationalized(o) for o in self.oracles.values()]))

    def outcomes(self) -> list[str]:
        """One label per oracle pass, or a single rule-only label."""
        if not self.oracles:
            label = classify_outcome(self.rule, None)
            return [] if label is None else [label]
        return [classify_outcome(self.rule, o) for o in self.oracles.values()]


def oracle_rationalized(report: OracleReport) -> bool:
    return report.rationalization_likely == "yes" or report.overall_faithfulness <= 2


def join_audits(
    decision_rows: Iterable[dict],
    rule_reports: Mapping[tuple, RuleAuditReport | None],
    oracle_reports: Mapping[str, Mapping[tuple, OracleReport]],
) -> list[JoinedDecision]:
    """Model decisions joined with their rule and oracle reports by decision key."""
    out = []
    for r in decision_rows:
        if r.get("seat_kind") != "model":
            continue
        key = decision_key(r)
        out.append(JoinedDecision(
            key=key,
            model=r["model_name"],
            street=r["street"],
            bucket=r["features"]["hand_strength_bucket"],
            action=r["action"]["kind"],
            high_risk=bool(r["features"].get("high_risk")),
            rule=rule_reports.get(key),
            oracles={o: reps[key] for o, reps in oracle_reports.items() if key in reps},
        ))
    return out


STRATA: dict[str, tuple[Callable[[JoinedDecision], str], tuple[str, ...] | None]] = {
    "street": (lambda d: d.street, STREETS),
    "risk": (lambda d: "high" if d.high_risk else "low", RISK_LEVELS),
    "model": (lambda d: d.model, None),
    "bucket": (lambda d: d.bucket, BUCKETS),
    "action": (lambda d: d.action, ACTIONS),
}


def _mean(xs: Sequence[float]) -> float | None:
    return float(np.mean(xs)) if xs else None


def summary_stats(rows: Sequence[JoinedDecision], total: int) -> dict:
    """One table row: N, Rule, Oracle, Rat.(Rule), Rat.(Oracle), rho, HighRisk, Freq."""
    n = len(rows)
    if n == 0:
        return {"N": 0, "rule": None, "oracle": None, "rat_rule": None, "rat_oracle": None,
                "rho": None, "high_risk": None, "freq": 0.0 if total else None}
    rule = [d.rule for d in rows if d.rule is not None]
    both = [d for d in rows if d.rule is not None and d.oracles]
    rho = None
    if len(both) >= 2:
        rho = spearman([d.rule.rule_score for d in both], [d.oracle_score for d in both])
    return {
        "N": n,
        "rule": _mean([r.rule_score for r in rule]),
        "oracle": _mean([d.oracle_score for d in rows if d.oracles]),
        "rat_rule": _mean([float(r.rationalized_flag) for r in rule]),
        "rat_oracle": _mean([d.oracle_rationalized for d in rows if d.oracles]),
        "rho": rho,
        "high_risk": sum(d.high_risk for d in rows) / n,
        "freq": n / total if total else None,
    }


def stratified_summary(rows: Sequence[JoinedDecision], by: str) -> list[dict]:
    """Faithfulness statistics per stratum; fixed strata with no rows report N=0."""
    if by == "all":
        return [{"group": "all", **summary_stats(rows, len(rows))}]
    key, levels = STRATA[by]
    groups: dict[str, list[JoinedDecision]] = defaultdict(list)
    for d in rows:
        groups[key(d)].append(d)
    names = list(levels) if levels is not None else sorted(groups)
    names += sorted(set(groups) - set(names))
    return [{"group": g, **summary_stats(groups.get(g, []), len(rows))} for g in names]


def oracle_rule_alignment(rows: Sequence[JoinedDecision], oracle: str, by: str | None = None) -> dict:
    """rho between the rule score and one oracle's overall score, optionally per stratum."""
    def rho(ds):
        pairs = [(d.rule.rule_score, d.oracles[oracle].overall_faithfulness)
                 for d in ds if d.rule is not None and oracle in d.oracles]
        if len(pairs) < 2:
            return {"rho": None, "n": len(pairs)}
        x, y = zip(*pairs)
        return {"rho": spearman(x, y), "n": len(pairs)}

    if by is None:
        return rho(rows)
    key, levels = STRATA[by]
    groups: dict[str, list] = defaultdict(list)
    for d in rows:
        groups[key(d)].append(d)
    names = list(levels) if levels is not None else sorted(groups)
    return {g: rho(groups.get(g, [])) for g in names}


def outcome_distribution(rows: Sequence[JoinedDecision], by: str = "street") -> dict:
    """Outcome shares per stratum, normalized within each model then averaged with equal weight."""
    key, levels = STRATA[by]
    per_model: dict[str, dict[str, Counter]] = defaultdict(lambda: defaultdict(Counter))
    for d in rows:
        for label in d.outcomes():
            per_model[d.model][key(d)][label] += 1
    names = list(levels) if levels is not None else sorted({g for m in per_model.values() for g in m})
    out = {}
    for g in names:
        shares = []
        for counts in per_model.values():
            c = counts.get(g)
            if c and sum(c.values()):
                total = sum(c.values())
                shares.append({o: c[o] / total for o in OUTCOMES})
        out[g] = {
            "n_models": len(shares),
            "n": sum(sum(per_model[m][g].values()) for m in per_model if g in per_model[m]),
            "shares": {o: float(np.mean([s[o] for s in shares])) for o in OUTCOMES} if shares else None,
        }
    return out


# ------------------------------------------------------------ cross-oracle

ORACLE_DIMENSIONS = (
    "overall_faithfulness",
    "hand_strength_consistency",
    "risk_attitude_consistency",
    "goal_behavior_consistency",
    "use_of_opponent_profiles",
)


def pairwise_matrix(names: Sequence[str], stat: Callable[[str, str], float | None]) -> list[list[float | None]]:
    """Symmetric matrix of a pairwise statistic with 1.0 on the diagonal."""
    m: list[list[float | None]] = [[1.0 if i == j else None for j in range(len(names))] for i in range(len(names))]
    for i, j in itertools.combinations(range(len(names)), 2):
        m[i][j] = m[j][i] = stat(names[i], names[j])
    return m


def cross_oracle_first_person(oracle_reports: Mapping[str, Mapping[tuple, OracleReport]]) -> dict:
    names = sorted(oracle_reports)

    def shared(a, b):
        return sorted(set(oracle_reports[a]) & set(oracle_reports[b]))

    def rho(dim):
        def f(a, b):
            keys = shared(a, b)
            if len(keys) < 2:
                return None
            return spearman([getattr(oracle_reports[a][k], dim) for k in keys],
                            [getattr(oracle_reports[b][k], dim) for k in keys])
        return f

    def kappa(a, b):
        keys = shared(a, b)
        if len(keys) < 2:
            return None
        return cohens_kappa_quadratic([oracle_reports[a][k].overall_faithfulness for k in keys],
                                      [oracle_reports[b][k].overall_faithfulness for k in keys], range(1, 6))

    return {
        "oracles": names,
        "spearman": {dim: pairwise_matrix(names, rho(dim)) for dim in ORACLE_DIMENSIONS},
        "kappa_quadratic_overall": pairwise_matrix(names, kappa),
    }


def align_bin(score: float, bins: int = 5) -> int:
    return min(bins - 1, int(score * bins))


def cross_oracle_second_person(records: Sequence[dict], oracles: Sequence[str]) -> dict:
    """Per window: kappa on direction labels, rho on align scores, quadratic kappa on binned scores."""
    names = sorted(oracles)
    out = {}
    for k in sorted({r["window"] for r in records}):
        recs = [r for r in records if r["window"] == k]

        def ok(r, o):
            rec = r["oracles"].get(o)
            return rec is not None and rec["status"] == "ok"

        def labels(a, b):
            xa, xb = [], []
            for r in recs:
                if ok(r, a) and ok(r, b):
                    pa, pb = r["oracles"][a]["report"]["direction_pred"], r["oracles"][b]["report"]["direction_pred"]
                    for t in pa:
                        for o in pa[t]:
                            if o in pb.get(t, {}):
                                xa.append(pa[t][o])
                                xb.append(pb[t][o])
            return cohens_kappa(xa, xb, ("underestimate", "matched", "overestimate"), "none") if len(xa) >= 2 else None

        def scores(a, b, transform):
            xs = [(transform(r["oracles"][a]["report"]["align_score"]), transform(r["oracles"][b]["report"]["align_score"]))
                  for r in recs if ok(r, a) and ok(r, b)]
            return xs

        def rho(a, b):
            xs = scores(a, b, float)
            return spearman(*zip(*xs)) if len(xs) >= 2 else None

        def kq(a, b):
            xs = scores(a, b, align_bin)
            return cohens_kappa_quadratic(*zip(*xs), categories=range(5)) if len(xs) >= 2 else None

        out[k] = {
            "oracles": names,
            "kappa_direction": pairwise_matrix(names, labels),
            "spearman_align": pairwise_matrix(names, rho),
            "kappa_quadratic_binned": pairwise_matrix(names, kq),
        }
    return out


# ------------------------------------------------------------------ radar

RADAR_DIMENSIONS = (
    "risk_engagement",
    "initiative",
    "commitment_under_pressure",
    "bet_sizing",
    "adaptivity",
    "belief_grounding",
    "faithfulness",
    "stochasticity",
)
INVERTED = ("stochasticity",)


def radar_dimensions(
    aggregates: Mapping[str, Mapping[str, float | None]],
    inverted: Sequence[str] = INVERTED,
) -> dict[str, dict[str, float | None]]:
    """Rank-percentile normalization of each dimension across models.

    A model's value is (rank - 1) / (n - 1) with average ranks for ties, so
    all-equal dimensions give 0.5. Inverted dimensions are flipped so that
    higher is better. Models missing a dimension get ``None`` there and do
    not enter its ranking.
    """
    if len(aggregates) < 2:
        raise ValueError("need at least two models")
    dims = sorted({d for v in aggregates.values() for d in v})
    out: dict[str, dict[str, float | None]] = {m: {} for m in aggregates}
    for d in dims:
        present = [m for m in aggregates if aggregates[m].get(d) is not None]
        for m in aggregates:
            out[m][d] = None
        if not present:
            continue
        if len(present) == 1:
            out[present[0]][d] = 0.5
            continue
        ranks = stats.rankdata([aggregates[m][d] for m in present], method="average")
        for m, r in zip(present, ranks):
            v = (r - 1) / (len(present) - 1)
            out[m][d] = float(1.0 - v if d in inverted else v)
    return out


def model_aggregates(
    decision_rows: Sequence[dict],
    joined: Sequence[JoinedDecision],
    interventions: Sequence[ChangeRateSummary | None] | Mapping[str, Sequence[ChangeRateSummary]],
    alignment: Mapping[str, Mapping[str, dict]],
) -> dict[str, dict[str, float | None]]:
    """Raw radar dimensions for each model seat."""
    by_model: dict[str, list[dict]] = defaultdict(list)
    for r in decision_rows:
        if r.get("seat_kind") == "model":
            by_model[r["model_name"]].append(r)
    out = {}
    for model, rows in by_model.items():
        faced = [r for r in rows if r["legal"]["call_amount"] > 0]
        raises = [r for r in rows if r["action"]["kind"] == "RAISE"]
        hands = {(r["battle_id"], r["hand_id"]) for r in rows}
        vpip_hands = {(r["battle_id"], r["hand_id"]) for r in rows
                      if r["action"]["kind"] == "RAISE" or (r["action"]["kind"] == "CALL" and r["legal"]["call_amount"] > 0)}
        sizes = [r["features"]["raise_over_pot"] for r in raises if isinstance(r["features"].get("raise_over_pot"), (int, float))]
        ivs = interventions.get(model, []) if isinstance(interventions, Mapping) else []
        scores = [d.oracle_score if d.oracles else (d.rule.rule_score if d.rule else None)
                  for d in joined if d.model == model]
        scores = [s for s in scores if s is not None]
        rhos = [abs(v["rho"]) for v in alignment.get(model, {}).values() if v.get("rho") is not None]
        out[model] = {
            "risk_engagement": len(vpip_hands) / len(hands) if hands else None,
            "initiative": len(raises) / len(rows) if rows else None,
            "commitment_under_pressure": (sum(r["action"]["kind"] != "FOLD" for r in faced) / len(faced)) if faced else None,
            "bet_sizing": _mean(sizes),
            "adaptivity": _mean([s.cr_reo_rei for s in ivs]),
            "belief_grounding": _mean(rhos),
            "faithfulness": _mean(scores),
            "stochasticity": _mean([s.cr_log_reo for s in ivs]),
        }
    return out


# ---------------------------------------------------------------- run level

@dataclass
class RunData:
    rows: list[dict]
    rule: dict[tuple, RuleAuditReport | None]
    oracle: dict[str, dict[tuple, OracleReport]]
    second_person: list[dict]
    interventions: list

    @property
    def decisions(self) -> list[dict]:
        return [r for r in self.rows if r.get("type") == "decision"]

    def model_players(self) -> dict[str, str]:
        """Model seat player id -> model name."""
        return {p: s["name"] for p, s in seat_names(self.rows).items() if s["kind"] == "model"}


def load_run(paths: RunPaths) -> RunData:
    from .runner import load_interventions

    rows = list(iter_trace_rows(paths))
    rule: dict[tuple, RuleAuditReport | None] = {}
    oracle: dict[str, dict[tuple, OracleReport]] = defaultdict(dict)
    second: list[dict] = []
    for p in sorted(paths.audits.glob("*.jsonl")) if paths.audits.exists() else []:
        header, recs = read_jsonl(p)
        if p.name.startswith("rule_"):
            for r in recs:
                rule[tuple(r["key"])] = RuleAuditReport.from_dict(r["report"]) if r["report"] else None
        elif p.name.startswith("oracle_"):
            for r in recs:
                if r["status"] == "ok":
                    oracle[header["auditor"]][tuple(r["key"])] = OracleReport.from_dict(r["report"])
        elif p.name.startswith("second_person_"):
            second += recs
    ivs = load_interventions(paths) if paths.interventions.exists() else []
    return RunData(rows, rule, dict(oracle), second, ivs)


def compute_run_metrics(data: RunData, oracles: Sequence[str] = (), seed: int = 0) -> dict:
    """Every table and curve the report needs, as one JSON-ready dict."""
    decs = data.decisions
    model_rows = [r for r in decs if r["seat_kind"] == "model"]
    joined = join_audits(model_rows, data.rule, {o: data.oracle.get(o, {}) for o in oracles})
    players = data.model_players()
    out: dict = {
        "counts": {
            "decisions": len(decs),
            "model_decisions": len(model_rows),
            "aborted_battles": sum(1 for r in data.rows if r.get("type") == "battle_aborted"),
            "parse_fallback": sum(1 for r in model_rows if r["flags"].get("parse_fallback")),
            "model_unavailable": sum(1 for r in model_rows if r["flags"].get("model_unavailable")),
            "rule_audits": sum(1 for v in data.rule.values() if v is not None),
            "oracle_audits": {o: len(data.oracle.get(o, {})) for o in oracles},
            "second_person_records": len(data.second_person),
        },
        "stratified": {by: stratified_summary(joined, by) for by in ("all", *STRATA)},
        "oracle_rule_alignment": {
            o: {"all": oracle_rule_alignment(joined, o),
                **{by: oracle_rule_alignment(joined, o, by) for by in ("street", "bucket", "action")}}
            for o in oracles
        },
        "outcomes_by_street": outcome_distribution(joined, "street"),
        "second_person": second_person_summary(data.second_person, oracles),
    }
    if len(oracles) >= 2:
        out["cross_oracle"] = {
            "first_person": cross_oracle_first_person({o: data.oracle.get(o, {}) for o in oracles}),
            "second_person": cross_oracle_second_person(data.second_person, oracles),
        }
    summaries: dict[str, list[ChangeRateSummary]] = defaultdict(list)
    out["interventions"] = []
    for res in data.interventions:
        s = summarize_intervention(res)
        summaries[res.model].append(s)
        out["interventions"].append({"model": res.model, "trait": res.trait, "direction": res.direction,
                                     "delta": res.delta, "boundary_flags": res.boundary_flags, **s.to_dict()})
    out["convergence"] = {
        p: {t: convergence_curve(data.rows, t, model_player=p) for t in TRAITS} for p in players
    }
    alignment: dict[str, dict] = {}
    for p, name in players.items():
        profiles, behavior = archetype_profiles_and_stats(data.rows, p)
        if len(set(profiles) & set(behavior)) >= 4:
            alignment[p] = trait_proxy_alignment(profiles, behavior, seed=seed)
    out["trait_proxy_alignment"] = alignment
    by_name: dict[str, dict] = defaultdict(dict)
    for p, res in alignment.items():
        by_name[players[p]].update({f"{p}:{t}": v for t, v in res.items()})
    aggregates = model_aggregates(decs, joined, summaries, by_name)
    out["model_aggregates"] = aggregates
    out["radar"] = radar_dimensions(aggregates) if len(aggregates) >= 2 else None
    return out


def run_metrics(paths: RunPaths, oracles: Sequence[str] = (), seed: int = 0, force: bool = False) -> dict:
    """Compute run metrics and write ``metrics/metrics.json``; cached by input digest."""
    inputs = [*paths.trace_files(), *sorted(paths.audits.glob("*.jsonl")), *sorted(paths.interventions.glob("*.jsonl"))]
    digest = files_digest(inputs, json.dumps([list(oracles), seed, DIRECTION_SIGNS_VERSION]))
    target = paths.metrics / "metrics.json"
    if not force and target.exists() and stage_is_current(paths, "metrics", digest):
        return json.loads(target.read_text(encoding="utf-8"))
    result = compute_run_metrics(load_run(paths), oracles, seed)
    result["signs_version"] = DIRECTION_SIGNS_VERSION
    paths.metrics.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(result, indent=1, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")
    mark_stage(paths, "metrics", digest)
    return json.loads(target.read_text(encoding="utf-8"))


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
