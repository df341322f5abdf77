import json

import pytest

from holdem_xai.protocol.render import prompt_hash, render_decision_prompt, DecisionContext
from holdem_xai.beliefs import OpponentProfile
from holdem_xai.runner import (
    DataError,
    InterventionError,
    play_battle,
    replay_battle,
    run_audits,
    run_battles,
    run_intervention,
    run_paths,
)
from holdem_xai.trace_store import (
    TraceSchemaError,
    coarse_class,
    decision_key,
    decisions,
    read_trace,
    slice_rows,
    validate_row,
)
from conftest import small_manifest


def all_rows(paths):
    rows = []
    for p in paths.trace_files():
        rows += read_trace(p)[1]
    return rows


# ------------------------------------------------------------- trace files

def test_header_has_exactly_the_four_keys(played_run):
    manifest, paths, _ = played_run
    first = paths.trace(0).read_text(encoding="utf-8").splitlines()[0]
    head = json.loads(first)
    assert sorted(head) == ["config_hash", "schema_version", "seed", "template_hashes"]
    assert head["config_hash"] == manifest.config_hash() and head["seed"] == 5


def test_every_row_validates_and_keys_are_unique(played_run):
    _, paths, outcomes = played_run
    assert all(o.status == "complete" for o in outcomes)
    rows = all_rows(paths)
    for r in rows:
        validate_row(r)
    keys = [decision_key(r) for r in decisions(rows)]
    assert len(keys) == len(set(keys))


def test_chips_are_conserved_in_every_observation(played_run):
    manifest, paths, _ = played_run
    total = manifest.game.initial_stack * len(manifest.seats)
    for r in decisions(all_rows(paths)):
        assert r["observation"]["chips_total"] == total


def test_schema_rejects_bad_rows(played_run):
    _, paths, _ = played_run
    row = decisions(all_rows(paths))[0]
    with pytest.raises(TraceSchemaError):
        validate_row({**row, "street": "showdown"})
    with pytest.raises(TraceSchemaError):
        validate_row({k: v for k, v in row.items() if k != "features"})
    with pytest.raises(TraceSchemaError):
        validate_row({"type": "mystery"})


def test_same_seed_gives_identical_bytes(tmp_path, played_run):
    manifest, paths, _ = played_run
    again = small_manifest(tmp_path)
    assert again.config_hash() == manifest.config_hash()
    run_battles(again)
    for a, b in zip(paths.trace_files(), run_paths(again).trace_files()):
        assert a.read_bytes() == b.read_bytes()


def test_different_seed_changes_traces(tmp_path, played_run):
    _, paths, _ = played_run
    other = small_manifest(tmp_path, rng_seed=6)
    run_battles(other)
    assert run_paths(other).trace(0).read_bytes() != paths.trace(0).read_bytes()


def test_replay_matches_every_logged_row(played_run):
    manifest, paths, _ = played_run
    for p in paths.trace_files():
        states = replay_battle(p, manifest)
        assert states


def test_replay_detects_tampering(tmp_path, played_run):
    manifest, paths, _ = played_run
    lines = paths.trace(0).read_text(encoding="utf-8").splitlines()
    for i, line in enumerate(lines[1:], 1):
        row = json.loads(line)
        if row["type"] == "decision":
            row["observation"]["pot"] += 1
            lines[i] = json.dumps(row)
            break
    bad = tmp_path / "bad.jsonl"
    bad.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(DataError):
        replay_battle(bad, manifest)


def test_slice_filters_are_a_conjunction(played_run):
    _, paths, _ = played_run
    rows = all_rows(paths)
    sl = slice_rows(rows, street="preflop", seat_kind="model")
    assert sl.n_candidates == len(decisions(rows))
    assert all(r["street"] == "preflop" and r["seat_kind"] == "model" for r in sl.rows)
    folds = slice_rows(rows, action="fold", window=(0, 4))
    assert all(r["action"]["kind"] == "FOLD" and r["hand_id"] < 4 for r in folds.rows)
    assert folds.counts()["filters"] == {"action": "fold", "window": (0, 4)}


def test_coarse_class_maps_check_to_call():
    assert [coarse_class(k) for k in ("FOLD", "CALL", "CHECK", "RAISE")] == ["fold", "call", "call", "raise"]


def test_logged_prompt_is_reconstructable(played_run):
    _, paths, _ = played_run
    for r in decisions(all_rows(paths)):
        if r["seat_kind"] != "model":
            continue
        prompt = render_decision_prompt(DecisionContext.from_dict(r["prompt_inputs"]),
                                        [OpponentProfile.from_dict(p) for p in r["profiles"]])
        assert prompt_hash(prompt) == r["prompt_hash"]


# ------------------------------------------------------------ run stages

def test_play_stage_is_skipped_when_current(played_run):
    manifest, paths, outcomes = played_run
    before = paths.trace(0).stat().st_mtime_ns
    assert run_battles(manifest) == outcomes
    assert paths.trace(0).stat().st_mtime_ns == before


def test_audit_stage_writes_rule_and_oracle_files(tmp_path):
    manifest = small_manifest(tmp_path, battles=1)
    run_battles(manifest)
    counts = run_audits(manifest)
    paths = run_paths(manifest)
    names = sorted(p.name for p in paths.audits.iterdir())
    assert names == ["oracle_scripted-oracle-a_battle_000.jsonl", "rule_battle_000.jsonl",
                     "second_person_battle_000.jsonl"]
    n_model = len([r for r in decisions(all_rows(paths)) if r["seat_kind"] == "model"])
    assert counts["rule"] + counts["rule_skipped"] == n_model
    assert counts["oracle"]["scripted-oracle-a"] + counts["oracle_missing"]["scripted-oracle-a"] == n_model
    assert run_audits(manifest) == {"skipped": True}


def test_audit_without_traces_is_a_data_error(tmp_path):
    with pytest.raises(DataError):
        run_audits(small_manifest(tmp_path))


def test_intervention_changes_only_the_targeted_numbers(played_run):
    manifest, paths, _ = played_run
    rows = all_rows(paths)
    res = run_intervention(manifest, "aggressiveness", "up", runs=2, rows=rows)
    assert len(res) == 1
    r = res[0]
    n = len([x for x in decisions(rows) if x["seat_kind"] == "model"])
    assert len(r.keys) == len(r.log) == n and len(r.reo) == len(r.rei) == 2
    # the honest policy ignores profiles, so nothing moves
    assert r.reo[0] == r.rei[0] == r.log


def test_intervention_refuses_altered_prompt_inputs(played_run):
    manifest, paths, _ = played_run
    rows = all_rows(paths)
    row = next(r for r in decisions(rows) if r["seat_kind"] == "model")
    row = {**row, "prompt_inputs": {**row["prompt_inputs"], "pot_size": row["prompt_inputs"]["pot_size"] + 1}}
    with pytest.raises(InterventionError):
        run_intervention(manifest, "aggressiveness", "up", runs=1, rows=[row])


def test_unavailable_model_falls_back_and_is_flagged(tmp_path):
    from holdem_xai.model_client import ModelClient

    manifest = small_manifest(tmp_path, battles=1, hands_per_battle=3)
    out = play_battle(manifest, 0, tmp_path / "b.jsonl", ModelClient({}))
    assert out.status == "complete"
    _, rows = read_trace(tmp_path / "b.jsonl")
    model_rows = [r for r in decisions(rows) if r["seat_kind"] == "model"]
    assert model_rows
    for r in model_rows:
        assert r["flags"]["model_unavailable"] and r["flags"]["parse_fallback"]
        assert r["action"]["kind"] in ("FOLD", "CHECK")
