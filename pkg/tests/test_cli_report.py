import csv
import json

import pytest

from holdem_xai.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, EXIT_TRANSPORT, main
from holdem_xai.config import RunManifest, dump_manifest, load_manifest, manifest_from_dict
from holdem_xai.report import markdown_table, ordered


def write_config(tmp_path, **extra):
    cfg = {
        "game": {"battles": 2, "hands_per_battle": 6, "mc_simulations": 200, "rng_seed": 3},
        "seats": [
            {"kind": "model", "name": "scripted-threshold"},
            {"kind": "model", "name": "scripted-honest"},
            {"kind": "archetype", "name": "LooseAggressive"},
            {"kind": "archetype", "name": "Maniac"},
            {"kind": "archetype", "name": "TightPassive"},
            {"kind": "archetype", "name": "TightAggressive"},
        ],
        "out_dir": str(tmp_path / "runs"),
    }
    cfg.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, (json.loads(out.out) if code == EXIT_OK else out.err)


def test_full_pipeline_through_the_cli(tmp_path, capsys):
    cfg = str(write_config(tmp_path))
    code, res = run_cli(capsys, "play", "--config", cfg, "--offline")
    assert code == EXIT_OK and res["battles"] == 2 and res["aborted"] == 0
    oracles = ["--oracle", "scripted-oracle-a", "--oracle", "scripted-oracle-b"]
    code, res = run_cli(capsys, "audit", "--config", cfg, *oracles)
    assert code == EXIT_OK and res["oracle"]["scripted-oracle-a"] > 0
    code, res = run_cli(capsys, "intervene", "--config", cfg, "--trait", "aggressiveness", "--direction", "up",
                        "--runs", "2")
    assert code == EXIT_OK and len(res["files"]) == 2  # one per model seat
    code, res = run_cli(capsys, "metrics", "--config", cfg, *oracles)
    assert code == EXIT_OK and res["counts"]["model_decisions"] > 0
    code, res = run_cli(capsys, "report", "--config", cfg)
    assert code == EXIT_OK
    names = {p.rsplit("/", 1)[-1] for p in res["files"]}
    assert {"report.md", "stratified_street.csv", "outcomes_by_street.svg", "interventions.csv", "radar.svg"} <= names

    run_root = tmp_path / "runs"
    report = next(run_root.glob("run-*/report/report.md")).read_text(encoding="utf-8")
    assert "| Group | N | Rule | Oracle |" in report
    with open(next(run_root.glob("run-*/report/stratified_street.csv")), newline="") as fh:
        groups = [row["Group"] for row in csv.DictReader(fh)]
    assert groups == ["preflop", "flop", "turn", "river"]


def test_overrides_address_a_different_run(tmp_path, capsys):
    cfg = str(write_config(tmp_path, game={"battles": 1, "hands_per_battle": 2, "mc_simulations": 50}))
    _, a = run_cli(capsys, "play", "--config", cfg)
    _, b = run_cli(capsys, "play", "--config", cfg, "--seed", "99")
    assert a["run"] != b["run"] and b["run"].endswith("seed99")


def test_missing_metrics_is_a_data_error(tmp_path, capsys):
    cfg = str(write_config(tmp_path))
    code, err = run_cli(capsys, "report", "--config", cfg)
    assert code == EXIT_DATA and "data error" in err
    code, _ = run_cli(capsys, "audit", "--config", cfg)
    assert code == EXIT_DATA


@pytest.mark.parametrize("extra", [
    {"seats": [{"kind": "model", "name": "nobody"}, {"kind": "archetype", "name": "Maniac"}]},
    {"seats": [{"kind": "robot", "name": "x"}, {"kind": "archetype", "name": "Maniac"}]},
    {"game": {"small_blind": 20, "big_blind": 10}},
    {"unknown_key": 1},
])
def test_invalid_configs_exit_with_config_code(tmp_path, capsys, extra):
    code, err = run_cli(capsys, "play", "--config", str(write_config(tmp_path, **extra)))
    assert code == EXIT_CONFIG and "config error" in err


def test_unreadable_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert run_cli(capsys, "play", "--config", str(bad))[0] == EXIT_CONFIG
    assert run_cli(capsys, "play", "--config", str(tmp_path / "absent.json"))[0] == EXIT_CONFIG


def test_missing_api_key_is_a_transport_error(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("HOLDEM_XAI_ABSENT_KEY", raising=False)
    cfg = write_config(
        tmp_path,
        seats=[{"kind": "model", "name": "remote"}, {"kind": "archetype", "name": "Maniac"}],
        endpoints=[{"model_name": "remote", "base_url": "http://127.0.0.1:9", "api_key_env": "HOLDEM_XAI_ABSENT_KEY"}],
        offline=False,
    )
    code, err = run_cli(capsys, "play", "--config", str(cfg))
    assert code == EXIT_TRANSPORT and "HOLDEM_XAI_ABSENT_KEY" in err
    # offline mode never builds the HTTP backend, so the seat falls back instead
    assert run_cli(capsys, "play", "--config", str(cfg), "--offline")[0] == EXIT_OK


def test_manifest_json_roundtrip(tmp_path):
    m = RunManifest(oracles=("scripted-oracle-a",))
    dump_manifest(m, tmp_path / "m.json")
    assert load_manifest(tmp_path / "m.json") == m
    assert manifest_from_dict(m.to_dict()).config_hash() == m.config_hash()


def test_config_hash_ignores_stage_settings():
    base = RunManifest()
    import dataclasses

    assert dataclasses.replace(base, out_dir="elsewhere", workers=4, oracles=("scripted-oracle-a",)).config_hash() \
        == base.config_hash()
    assert dataclasses.replace(base, game=dataclasses.replace(base.game, rng_seed=8)).config_hash() != base.config_hash()


def test_report_helpers():
    assert ordered(["river", "flop", "zzz", "preflop"], ["preflop", "flop", "turn", "river"]) == \
        ["preflop", "flop", "river", "zzz"]
    table = markdown_table([{"a": 1.23456, "b": None}], [("a", "A"), ("b", "B")])
    lines = table.splitlines()
    assert lines[0] == "| A | B |" and lines[2].startswith("| 1.23")
