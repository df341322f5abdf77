"""Battle orchestration, replay, audits and the Log / ReO / ReI protocol.

A battle is a fixed number of hands at one mixed table. Random streams are
derived from ``(seed, battle_index)`` so battles can run in any order or in
parallel and still produce identical trace files.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .audit import (
    oracle_audit_first_person,
    oracle_audit_second_person,
    objective_values,
    reference_second_person,
    rule_audit,
    second_person_data,
)
from .baselines import ARCHETYPE_SPECS, archetype_decide
from .beliefs import InterventionSpec, OpponentProfile, apply_bounded_update, intervene
from .config import RunManifest, manifest_from_dict
from .engine.cards import Card
from .engine.equity import decision_equity, estimate_equity, preflop_class
from .engine.table import (
    STREETS,
    Action,
    ActionKind,
    LegalActionSet,
    TableState,
    legal_actions,
    new_hand,
    next_button,
    normalize_action,
    step,
)
from .features import (
    ActionObservation,
    BehaviorStats,
    PlayerHandRecord,
    decision_features,
    update_behavior_stats,
    windowed_delta,
)
from .model_client import ModelClient, TransportError, build_client
from .protocol.parse import ProfileBlockMissing, UnrecoverableArtifact, parse_first_person, parse_opponent_profile
from .protocol.render import (
    DecisionContext,
    format_stats_summary,
    prompt_hash,
    render_decision_prompt,
    render_profile_prompt,
    template_hashes,
)
from .trace_store import (
    SCHEMA_VERSION,
    RunPaths,
    TraceHeader,
    TraceWriter,
    coarse_class,
    decision_key,
    decisions,
    dumps,
    files_digest,
    mark_stage,
    read_jsonl,
    read_trace,
    stage_is_current,
    write_jsonl,
)

logger = logging.getLogger(__name__)

EQUITY_DECIMALS = 4


class DataError(RuntimeError):
    """Persisted run data is inconsistent with the manifest or the engine."""


class InterventionError(DataError):
    """A logged prompt could not be reconstructed byte-for-byte."""


def player_id(seat: int) -> str:
    return f"Player{seat}"


def deal_rng(seed: int, battle: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, battle, 0]))


def archetype_rng(seed: int, battle: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, battle, 1]))


# ------------------------------------------------------------------ equity

_PREFLOP_CACHE: dict[tuple, float] = {}


def preflop_equity(hole: tuple[Card, Card], n_opponents: int, n_sims: int, seed: int) -> float:
    """Preflop equity shared by every hand in the same suit-isomorphism class."""
    hi, lo, suited = preflop_class(hole)
    key = (hi, lo, suited, n_opponents, n_sims, seed)
    if key not in _PREFLOP_CACHE:
        canon = (Card(hi, 0), Card(lo, 0 if suited else 1))
        rng = np.random.default_rng(np.random.SeedSequence([seed, 2, hi, lo, int(suited), n_opponents]))
        _PREFLOP_CACHE[key] = estimate_equity(canon, [], n_opponents, n_sims, rng)
    return _PREFLOP_CACHE[key]


def seat_equity(state: TableState, seat: int, n_opponents: int, n_sims: int, seed: int, battle: int, hand: int) -> float:
    hole = state.hole[seat]
    if state.street == "preflop":
        eq = preflop_equity(hole, n_opponents, n_sims, seed)
    else:
        street_idx = STREETS.index(state.street)
        rng = np.random.default_rng(np.random.SeedSequence([seed, battle, hand, seat, street_idx, n_opponents, 3]))
        eq = decision_equity(hole, state.board, n_opponents, n_sims, rng, state.street)
    return round(eq, EQUITY_DECIMALS)


# ------------------------------------------------------------ prompt inputs

def position_text(state: TableState, seat: int, equity: float, n_opponents: int) -> str:
    n_live = sum(1 for s in range(state.n_seats) if state.live(s))
    stacks = ", ".join(f"{player_id(s)}={state.stacks[s]}" for s in range(state.n_seats))
    return (
        f"Position: {player_id(seat)} in seat {seat} of {state.n_seats}; button at seat {state.button}; "
        f"{n_live} players still in the hand.\n"
        f"Stacks: {stacks}\n"
        f"Estimated equity vs {n_opponents} active opponents: {equity:.{EQUITY_DECIMALS}f}"
    )


def opponent_actions(state: TableState, seat: int) -> tuple[str, ...]:
    return tuple(f"{player_id(s)} {a} ({street})" for s, a, street in state.history if s != seat)


def decision_context(state: TableState, seat: int, legal: LegalActionSet, equity: float, pot_odds: float) -> DecisionContext:
    n_opp = sum(1 for s in range(state.n_seats) if s != seat and state.live(s))
    return DecisionContext(
        hole_cards=state.hole[seat],
        community_cards=tuple(state.board),
        street=state.street,
        pot_size=state.pot,
        call_amount=legal.call_amount,
        min_raise=legal.min_raise,
        max_raise=legal.max_raise,
        pot_odds=pot_odds,
        position_text=position_text(state, seat, equity, n_opp),
        opponent_actions=opponent_actions(state, seat),
    )


def fallback_action(legal: LegalActionSet) -> Action:
    return Action.fold() if legal.call_amount > 0 else Action.check()


def query_decision(client: ModelClient, model: str, prompt: str, legal: LegalActionSet, sample_id) -> tuple[Action, dict]:
    """Ask the model; on transport or parse failure apply the fallback policy."""
    info = {"response": None, "signature": None, "explanation_text": None, "usage": None,
            "flags": {"parse_fallback": False, "model_unavailable": False}}
    try:
        comp = client.complete(model, prompt, "decision", sample_id)
    except TransportError as exc:
        info["flags"].update(model_unavailable=True, parse_fallback=True, error=str(exc))
        return fallback_action(legal), info
    info["response"] = comp.text
    info["usage"] = comp.usage()
    try:
        artifact, sig = parse_first_person(comp.text)
    except UnrecoverableArtifact as exc:
        info["flags"].update(parse_fallback=True, error=str(exc))
        return fallback_action(legal), info
    info["signature"] = sig.to_dict()
    info["explanation_text"] = artifact.explanation_text
    return artifact.decision, info


# ------------------------------------------------------------------ battles

@dataclass
class BattleOutcome:
    battle: int
    path: str
    hands_played: int
    status: str = "complete"
    reason: str | None = None


def _header(manifest: RunManifest) -> TraceHeader:
    return TraceHeader(SCHEMA_VERSION, manifest.config_hash(), template_hashes(), manifest.game.rng_seed)


def play_battle(manifest: RunManifest, battle: int, path: str | Path, client: ModelClient | None = None) -> BattleOutcome:
    """Play one battle and write its trace file."""
    client = client or build_client(manifest)
    g = manifest.game
    seats = manifest.seats
    n = len(seats)
    pids = [player_id(s) for s in range(n)]
    stacks = [g.initial_stack] * n
    button = 0
    drng, arng = deal_rng(g.rng_seed, battle), archetype_rng(g.rng_seed, battle)
    model_seats = [s for s in range(n) if seats[s].kind == "model"]
    profiles = {m: {pids[o]: OpponentProfile(pids[o]) for o in range(n) if o != m} for m in model_seats}
    stats = {pids[s]: BehaviorStats() for s in range(n)}
    seat_info = [{"player_id": pids[s], "kind": seats[s].kind, "name": seats[s].name} for s in range(n)]
    hands = 0
    with TraceWriter(path, _header(manifest)) as writer:
        try:
            for hand in range(g.hands_per_battle):
                if sum(1 for x in stacks if x > 0) < 2:
                    break
                state = new_hand(stacks, button, g.small_blind, g.big_blind, drng)
                observed: dict[int, list[ActionObservation]] = {s: [] for s in range(n)}
                index = 0
                while not state.finished:
                    seat = state.to_act
                    legal = legal_actions(state)
                    n_opp = sum(1 for s in range(n) if s != seat and state.live(s))
                    equity = seat_equity(state, seat, n_opp, g.mc_simulations, g.rng_seed, battle, hand)
                    base = decision_features(state, legal, equity, thresholds=manifest.thresholds)
                    spec = seats[seat]
                    row_extra: dict = {}
                    flags: dict = {}
                    if spec.kind == "archetype":
                        proposed = archetype_decide(ARCHETYPE_SPECS[spec.name], base, legal, arng, state.street)
                    else:
                        ctx = decision_context(state, seat, legal, equity, base.pot_odds)
                        shown = [profiles[seat][pids[o]] for o in range(n) if o != seat]
                        prompt = render_decision_prompt(ctx, shown)
                        proposed, info = query_decision(client, spec.name, prompt, legal, "log")
                        flags = info.pop("flags")
                        row_extra = {
                            "prompt_hash": prompt_hash(prompt),
                            "prompt_inputs": ctx.to_dict(),
                            "profiles": [p.to_dict() for p in shown],
                            **info,
                        }
                    action = normalize_action(proposed, legal)
                    feats = decision_features(state, legal, equity, action, manifest.thresholds)
                    row = {
                        "type": "decision",
                        "battle_id": battle,
                        "hand_id": hand,
                        "decision_index": index,
                        "player_id": pids[seat],
                        "seat": seat,
                        "seat_kind": spec.kind,
                        "model_name": spec.name,
                        "street": state.street,
                        "observation": {
                            "hole": [str(c) for c in state.hole[seat]],
                            "board": [str(c) for c in state.board],
                            "pot": state.pot,
                            "stacks": list(state.stacks),
                            "committed": list(state.committed),
                            "street_committed": list(state.street_committed),
                            "current_bet": state.current_bet,
                            "button": state.button,
                            "chips_total": sum(state.stacks) + state.pot,
                        },
                        "legal": legal.to_dict(),
                        "proposed": proposed.to_dict(),
                        "action": action.to_dict(),
                        "features": feats.to_dict(),
                        "flags": {"normalized": action != proposed, **flags},
                        **row_extra,
                    }
                    writer.append(row)
                    if action.kind is ActionKind.RAISE:
                        cost = action.amount - state.street_committed[seat]
                    elif action.kind is ActionKind.CALL:
                        cost = legal.call_amount
                    else:
                        cost = 0
                    observed[seat].append(
                        ActionObservation(state.street, action.kind.value, cost, legal.call_amount > 0, equity)
                    )
                    state = step(state, seat, action)
                    index += 1
                dealt = [s for s in range(n) if state.dealt_in[s]]
                for s in dealt:
                    rec = PlayerHandRecord(
                        tuple(observed[s]),
                        showdown=state.showdown and state.live(s),
                        won_without_showdown=not state.showdown and state.payouts[s] > 0,
                    )
                    stats[pids[s]] = update_behavior_stats(stats[pids[s]], rec, manifest.thresholds)
                updates = {}
                if (hand + 1) % manifest.profile_update_every == 0:
                    for m in model_seats:
                        updates[pids[m]] = {}
                        for o in dealt:
                            if o == m:
                                continue
                            prof, outcome = update_profile(
                                client, seats[m].name, profiles[m][pids[o]], stats[pids[o]], hand
                            )
                            profiles[m][pids[o]] = prof
                            updates[pids[m]][pids[o]] = outcome
                writer.append({
                    "type": "hand_summary",
                    "battle_id": battle,
                    "hand_id": hand,
                    "button": button,
                    "seats": seat_info,
                    "hole": {pids[s]: [str(c) for c in state.hole[s]] for s in dealt},
                    "board": [str(c) for c in state.board],
                    "committed": state.final_committed,
                    "payouts": state.payouts,
                    "showdown": state.showdown,
                    "stacks": list(state.stacks),
                    "stats": {p: st.to_dict() for p, st in stats.items()},
                    "profiles": {pids[m]: {o: p.traits.to_dict() for o, p in profiles[m].items()} for m in model_seats},
                    "profile_updates": updates,
                })
                writer.end_hand()
                stacks = list(state.stacks)
                hands += 1
                if sum(1 for x in stacks if x > 0) >= 2:
                    button = next_button(stacks, button)
        except Exception as exc:  # recorded, never silently dropped
            logger.exception("battle %d aborted", battle)
            writer.append({"type": "battle_aborted", "battle_id": battle, "hand_id": hands,
                           "reason": f"{type(exc).__name__}: {exc}"})
            return BattleOutcome(battle, str(path), hands, "aborted", f"{type(exc).__name__}: {exc}")
    return BattleOutcome(battle, str(path), hands)


def update_profile(
    client: ModelClient, model: str, profile: OpponentProfile, stats: BehaviorStats, hand: int
) -> tuple[OpponentProfile, dict]:
    """One profiling query; the raw proposal is logged next to the bounded result."""
    prompt = render_profile_prompt(format_stats_summary(profile.opponent_id, stats, profile))
    try:
        comp = client.complete(model, prompt, "profile", "log")
    except TransportError as exc:
        return profile, {"status": "model_unavailable", "reason": str(exc)}
    try:
        proposal = parse_opponent_profile(comp.text)
    except ProfileBlockMissing as exc:
        return profile, {"status": "skipped", "reason": str(exc)}
    updated = apply_bounded_update(profile, proposal.traits, hand, proposal.summary, proposal.rationale)
    return updated, {"status": "applied", "proposal": proposal.to_dict()}


def _battle_job(args: tuple) -> BattleOutcome:
    manifest_dict, battle, path = args
    return play_battle(manifest_from_dict(manifest_dict), battle, path)


def run_paths(manifest: RunManifest) -> RunPaths:
    return RunPaths.for_manifest(manifest.out_dir, manifest.config_hash(), manifest.game.rng_seed)


def run_battles(manifest: RunManifest, client: ModelClient | None = None, force: bool = False) -> list[BattleOutcome]:
    """Play every battle (in parallel when ``manifest.workers`` > 1) and record their status."""
    paths = run_paths(manifest)
    digest = files_digest([], manifest.config_hash() + json.dumps(template_hashes(), sort_keys=True))
    status_file = paths.root / "battles.json"
    if not force and stage_is_current(paths, "play", digest) and status_file.exists():
        logger.info("play stage is current; skipping")
        return [BattleOutcome(**b) for b in json.loads(status_file.read_text(encoding="utf-8"))]
    paths.traces.mkdir(parents=True, exist_ok=True)
    (paths.root / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    jobs = [(manifest.to_dict(), b, str(paths.trace(b))) for b in range(manifest.game.battles)]
    if manifest.workers > 1 and client is None:
        with ProcessPoolExecutor(max_workers=manifest.workers) as pool:
            outcomes = list(pool.map(_battle_job, jobs))
    else:
        client = client or build_client(manifest)
        outcomes = [play_battle(manifest, b, p, client) for _, b, p in jobs]
    status_file.write_text(json.dumps([o.__dict__ for o in outcomes], indent=1) + "\n", encoding="utf-8")
    mark_stage(paths, "play", digest)
    return outcomes


# ------------------------------------------------------------------ replay

def replay_battle(path: str | Path, manifest: RunManifest) -> list[TableState]:
    """Re-simulate a battle from its logged actions and check every row against the engine."""
    _, rows = read_trace(path)
    g = manifest.game
    n = len(manifest.seats)
    battle = next((r["battle_id"] for r in rows), 0)
    drng = deal_rng(g.rng_seed, battle)
    stacks = [g.initial_stack] * n
    button = 0
    states: list[TableState] = []
    state = None
    for r in rows:
        if r["type"] == "battle_aborted":
            break
        if state is None:
            state = new_hand(stacks, button, g.small_blind, g.big_blind, drng)
            states.append(state)
        if r["type"] == "decision":
            obs = r["observation"]
            checks = {
                "seat": (r["seat"], state.to_act),
                "pot": (obs["pot"], state.pot),
                "stacks": (obs["stacks"], state.stacks),
                "board": (obs["board"], [str(c) for c in state.board]),
                "legal": (r["legal"], legal_actions(state).to_dict()),
            }
            for name, (logged, actual) in checks.items():
                if logged != actual:
                    raise DataError(f"replay mismatch at {decision_key(r)} on {name}: {logged} != {actual}")
            state = step(state, r["seat"], Action.from_dict(r["action"]))
            states.append(state)
        elif r["type"] == "hand_summary":
            if not state.finished or r["payouts"] != state.payouts or r["stacks"] != state.stacks:
                raise DataError(f"replay mismatch at end of hand {r['hand_id']}")
            stacks = list(state.stacks)
            if sum(1 for x in stacks if x > 0) >= 2:
                button = next_button(stacks, button)
            state = None
    return states


# ------------------------------------------------------------------ audits

def run_audits(manifest: RunManifest, client: ModelClient | None = None, force: bool = False) -> dict:
    """Rule audits for every decision row plus oracle passes for each configured oracle."""
    paths = run_paths(manifest)
    traces = paths.trace_files()
    if not traces:
        raise DataError(f"no trace files under {paths.traces}; run the play stage first")
    digest = files_digest(traces, json.dumps([manifest.rules.__dict__, list(manifest.oracles),
                                              list(manifest.audit_windows)], sort_keys=True))
    if not force and stage_is_current(paths, "audit", digest):
        logger.info("audit stage is current; skipping")
        return {"skipped": True}
    if manifest.oracles and client is None:
        client = build_client(manifest)
    counts = {"rule": 0, "rule_skipped": 0, "oracle": {o: 0 for o in manifest.oracles},
              "oracle_missing": {o: 0 for o in manifest.oracles}, "second_person": 0}
    header = {"schema_version": SCHEMA_VERSION, "config_hash": manifest.config_hash(),
              "rules_version": manifest.rules.version}
    for tp in traces:
        _, rows = read_trace(tp)
        drows = [r for r in decisions(rows) if r["seat_kind"] == "model"]
        rule_records = []
        for r in drows:
            rep = rule_audit(r, manifest.rules)
            counts["rule" if rep else "rule_skipped"] += 1
            rule_records.append({"key": list(decision_key(r)), "auditor": "rule", "kind": "rule",
                                 "status": "ok" if rep else "skipped", "report": rep.to_dict() if rep else None})
        write_jsonl(paths.audits / f"rule_{tp.name}", header, rule_records)
        for oracle in manifest.oracles:
            recs = [oracle_audit_first_person(r, client, oracle) for r in drows]
            counts["oracle"][oracle] += sum(1 for x in recs if x["status"] == "ok")
            counts["oracle_missing"][oracle] += sum(1 for x in recs if x["status"] != "ok")
            write_jsonl(paths.audits / f"oracle_{oracle}_{tp.name}", {**header, "auditor": oracle}, recs)
        sp = second_person_records(rows, manifest, client)
        counts["second_person"] += len(sp)
        write_jsonl(paths.audits / f"second_person_{tp.name}", header, sp)
    mark_stage(paths, "audit", digest)
    return counts


def second_person_records(rows: list[dict], manifest: RunManifest, client: ModelClient | None) -> list[dict]:
    """Windowed profile-vs-objective comparisons for each model seat."""
    summaries = [r for r in rows if r["type"] == "hand_summary"]
    if not summaries:
        return []
    seats = summaries[0]["seats"]
    model_pids = [s["player_id"] for s in seats if s["kind"] == "model"]
    zero = BehaviorStats().to_dict()
    snapshots = [{p: zero for p in (s["player_id"] for s in seats)}] + [s["stats"] for s in summaries]
    out = []
    for k in manifest.audit_windows:
        for end in range(k, len(snapshots), k):
            now, prev = snapshots[end], snapshots[end - k]
            hand_id = summaries[end - 1]["hand_id"]
            for m in model_pids:
                profiles = summaries[end - 1]["profiles"][m]
                objective, window_now, window_prev = {}, {}, {}
                for opp in profiles:
                    delta = windowed_delta(BehaviorStats.from_dict(now[opp]), BehaviorStats.from_dict(prev[opp]))
                    if delta is None:
                        continue
                    objective[opp] = objective_values(delta)
                    window_now[opp], window_prev[opp] = now[opp], prev[opp]
                if len(objective) < 2:
                    continue
                shown = {o: profiles[o] for o in objective}
                data = second_person_data(shown, objective, window_now, window_prev, k)
                rec = {
                    "battle_id": summaries[0]["battle_id"],
                    "player_id": m,
                    "window": k,
                    "end_hand": hand_id,
                    "data": data,
                    "reference": reference_second_person(data),
                    "oracles": {},
                }
                for oracle in manifest.oracles:
                    rec["oracles"][oracle] = oracle_audit_second_person(data, client, oracle)
                out.append(rec)
    return out


# ------------------------------------------------------------ interventions

@dataclass
class InterventionResult:
    model: str
    trait: str
    direction: str
    delta: float
    keys: list[tuple]
    buckets: list[str]
    log: list[str]
    reo: list[list[str]] = field(default_factory=list)  # run -> per-key coarse class
    rei: list[list[str]] = field(default_factory=list)
    boundary_flags: int = 0

    def to_records(self) -> tuple[dict, list[dict]]:
        header = {"model": self.model, "trait": self.trait, "direction": self.direction, "delta": self.delta,
                  "runs": len(self.reo), "boundary_flags": self.boundary_flags}
        recs = [
            {"key": list(k), "bucket": b, "log": lg, "reo": [run[i] for run in self.reo],
             "rei": [run[i] for run in self.rei]}
            for i, (k, b, lg) in enumerate(zip(self.keys, self.buckets, self.log))
        ]
        return header, recs

    @classmethod
    def from_records(cls, header: dict, recs: list[dict]) -> "InterventionResult":
        runs = header["runs"]
        return cls(
            header["model"], header["trait"], header["direction"], header["delta"],
            [tuple(r["key"]) for r in recs], [r["bucket"] for r in recs], [r["log"] for r in recs],
            [[r["reo"][i] for r in recs] for i in range(runs)],
            [[r["rei"][i] for r in recs] for i in range(runs)],
            header.get("boundary_flags", 0),
        )


def _rerun_class(client: ModelClient, model: str, prompt: str, legal: LegalActionSet, sample_id) -> str:
    proposed, _ = query_decision(client, model, prompt, legal, sample_id)
    return coarse_class(normalize_action(proposed, legal).kind.value)


def intervene_profiles(profiles: list[OpponentProfile], spec: InterventionSpec) -> tuple[list[OpponentProfile], int]:
    out, flagged = [], 0
    for p in profiles:
        traits, flag = intervene(p.traits, spec)
        flagged += flag
        out.append(OpponentProfile(p.opponent_id, traits, p.summary, p.rationale, p.updated_at_hand))
    return out, flagged


def run_intervention(
    manifest: RunManifest,
    trait: str,
    direction: str,
    runs: int | None = None,
    delta: float | None = None,
    client: ModelClient | None = None,
    model: str | None = None,
    rows: list[dict] | None = None,
) -> list[InterventionResult]:
    """Re-query logged decision points with identical (ReO) and intervened (ReI) beliefs.

    The logged observation is reused as is; only the rendered profile numbers
    of the targeted trait differ between the ReO and ReI prompts.
    """
    runs = manifest.interventions.runs if runs is None else runs
    delta = manifest.game.intervention_delta if delta is None else delta
    spec = InterventionSpec(trait, direction, delta)
    client = client or build_client(manifest)
    if rows is None:
        rows = []
        for tp in run_paths(manifest).trace_files():
            rows += read_trace(tp)[1]
    model_rows = [r for r in decisions(rows) if r["seat_kind"] == "model" and r.get("prompt_inputs")]
    if model is not None:
        model_rows = [r for r in model_rows if r["model_name"] == model]
    by_model: dict[str, list[dict]] = {}
    for r in model_rows:
        by_model.setdefault(r["model_name"], []).append(r)
    results = []
    for name, mrows in sorted(by_model.items()):
        prepared = []
        flagged = 0
        for r in mrows:
            ctx = DecisionContext.from_dict(r["prompt_inputs"])
            profs = [OpponentProfile.from_dict(p) for p in r["profiles"]]
            prompt = render_decision_prompt(ctx, profs)
            if prompt_hash(prompt) != r["prompt_hash"]:
                raise InterventionError(f"prompt reconstruction mismatch at {decision_key(r)}")
            changed, f = intervene_profiles(profs, spec)
            flagged += f
            prepared.append((prompt, render_decision_prompt(ctx, changed), LegalActionSet.from_dict(r["legal"])))
        res = InterventionResult(
            name, trait, direction, delta,
            [decision_key(r) for r in mrows],
            [r["features"]["hand_strength_bucket"] for r in mrows],
            [coarse_class(r["action"]["kind"]) for r in mrows],
            boundary_flags=flagged,
        )
        for run in range(runs):
            res.reo.append([_rerun_class(client, name, p, legal, ("reo", run)) for p, _, legal in prepared])
            res.rei.append([_rerun_class(client, name, q, legal, ("rei", run)) for _, q, legal in prepared])
        results.append(res)
    return results


def run_interventions(manifest: RunManifest, client: ModelClient | None = None, force: bool = False,
                      traits=None, directions=None, runs=None) -> list[Path]:
    paths = run_paths(manifest)
    traces = paths.trace_files()
    if not traces:
        raise DataError("no trace files; run the play stage first")
    traits = tuple(traits or manifest.interventions.traits)
    directions = tuple(directions or manifest.interventions.directions)
    runs = manifest.interventions.runs if runs is None else runs
    digest = files_digest(traces, json.dumps([traits, directions, runs, manifest.game.intervention_delta]))
    if not force and stage_is_current(paths, "intervene", digest):
        return sorted(paths.interventions.glob("*.jsonl"))
    rows = []
    for tp in traces:
        rows += read_trace(tp)[1]
    client = client or build_client(manifest)
    written = []
    for trait in traits:
        for direction in directions:
            for res in run_intervention(manifest, trait, direction, runs, client=client, rows=rows):
                header, recs = res.to_records()
                out = paths.interventions / f"{res.model}__{trait}__{direction}.jsonl"
                write_jsonl(out, header, recs)
                written.append(out)
    mark_stage(paths, "intervene", digest)
    return written


def load_interventions(paths: RunPaths) -> list[InterventionResult]:
    out = []
    for p in sorted(paths.interventions.glob("*.jsonl")):
        header, recs = read_jsonl(p)
        out.append(InterventionResult.from_records(header, recs))
    return out


# ------------------------------------------------------- archetype calibration

def simulate_archetype_stats(
    hands: int = 1000,
    seed: int = 11,
    mc_simulations: int = 200,
    on_battle: Callable[[int], None] | None = None,
) -> dict[str, BehaviorStats]:
    """Long-run statistics of the five archetypes playing each other.

    Battles of 30 hands at a fresh table repeat until every archetype has
    been dealt at least ``hands`` hands.
    """
    import tempfile

    from .baselines import ARCHETYPES
    from .config import GameConfig, SeatSpec

    per_battle = 30
    manifest = RunManifest(
        game=GameConfig(battles=1, hands_per_battle=per_battle, rng_seed=seed, mc_simulations=mc_simulations),
        seats=tuple(SeatSpec("archetype", a) for a in ARCHETYPES),
    )
    totals = {a: BehaviorStats() for a in ARCHETYPES}
    client = ModelClient({})
    battle = 0
    with tempfile.TemporaryDirectory() as tmp:
        while min(s.hands_seen for s in totals.values()) < hands:
            path = Path(tmp) / "battle.jsonl"
            play_battle(manifest, battle, path, client)
            _, rows = read_trace(path)
            last = [r for r in rows if r["type"] == "hand_summary"][-1]
            for s, a in enumerate(ARCHETYPES):
                add = BehaviorStats.from_dict(last["stats"][player_id(s)]).to_dict()
                totals[a] = BehaviorStats(**{k: v + add[k] for k, v in totals[a].to_dict().items()})
            if on_battle:
                on_battle(battle)
            battle += 1
    return totals


__all__ = [
    "BattleOutcome",
    "DataError",
    "InterventionError",
    "InterventionResult",
    "deal_rng",
    "load_interventions",
    "play_battle",
    "replay_battle",
    "run_audits",
    "run_battles",
    "run_intervention",
    "run_interventions",
    "simulate_archetype_stats",
]
