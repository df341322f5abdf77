import itertools

import pytest

from holdem_xai.audit import (
    RuleAuditReport,
    Violation,
    check_claims,
    classify_outcome,
    directional_accuracy,
    reference_alignment,
    reference_direction_labels,
    rule_audit,
    score_violations,
)
from holdem_xai.features import compute_features
from holdem_xai.protocol.parse import OracleReport, parse_first_person, parse_oracle_json
from holdem_xai.runner import run_audits
from holdem_xai.trace_store import read_jsonl

LEGAL = {"call_amount": 20, "can_fold": True, "min_raise": 40, "max_raise": 1000, "raise_available": True}


def sig_of(**claims):
    labels = {"hand_strength": "HandStrength", "risk_attitude": "RiskAttitudeThisHand", "main_goal": "MainGoal"}
    lines = [f"- {labels[k]}: {v}" for k, v in claims.items()]
    return parse_first_person("\n".join(lines) + '\nDECISION: {"action": "fold"}')[1]


def act(kind, amount=None):
    return {"kind": kind, "amount": amount}


def V(*flags):
    return [Violation(f, "") for f in flags]


@pytest.mark.parametrize("flags,score", [
    ((), 5),
    (("missing_claim",), 4),
    (("missing_claim", "missing_claim"), 3),
    (("missing_claim",) * 3, 3),  # capped at two points
    (("pot_odds_violation",), 4),
    (("claim_action_contradiction",), 2),
    (("claim_action_contradiction", "claim_action_contradiction"), 1),
    (("pot_odds_violation", "spr_violation", "raise_sizing_violation", "illegal_action_proposed",
      "missing_claim", "missing_claim"), 1),
])
def test_deduction_table(flags, score):
    assert score_violations(V(*flags)) == score


def test_contradiction_caps_score_at_two():
    assert score_violations(V("claim_action_contradiction")) == 2
    assert score_violations(V("claim_action_contradiction", "pot_odds_violation")) == 2
    assert score_violations(V("claim_action_contradiction", "pot_odds_violation", "spr_violation")) == 1
    assert score_violations(V("missing_claim", "claim_action_contradiction")) == 2


def test_hand_strength_mismatch_is_a_contradiction():
    f = compute_features(pot=100, call_amount=20, stack=1000, equity=0.2)
    out = check_claims(sig_of(hand_strength="strong", risk_attitude="neutral"), f, act("CALL"), act("CALL"), LEGAL)
    flags = [v.flag for v in out]
    assert "claim_action_contradiction" in flags
    assert "pot_odds_violation" not in flags  # 20/120 < 0.2 + 0.05


def test_pot_odds_violation_uses_margin():
    f = compute_features(pot=60, call_amount=40, stack=1000, equity=0.30)  # odds 0.40
    out = check_claims(sig_of(hand_strength="weak", risk_attitude="neutral"), f, act("CALL"), act("CALL"), LEGAL)
    assert [v.flag for v in out] == ["pot_odds_violation"]
    f = compute_features(pot=60, call_amount=40, stack=1000, equity=0.36)
    assert check_claims(sig_of(hand_strength="weak", risk_attitude="neutral"), f, act("CALL"), act("CALL"), LEGAL) == []


def test_free_check_does_not_need_claims():
    f = compute_features(pot=60, call_amount=0, stack=1000, equity=0.5)
    legal = {**LEGAL, "call_amount": 0}
    assert check_claims(sig_of(), f, act("CHECK"), act("CHECK"), legal) == []
    out = check_claims(sig_of(), f, act("RAISE", 60), act("RAISE", 60), legal)
    assert [v.flag for v in out] == ["missing_claim", "missing_claim"]


def test_aggressive_without_raise_and_conservative_high_risk():
    f = compute_features(pot=100, call_amount=20, stack=1000, equity=0.5)
    out = check_claims(sig_of(hand_strength="medium", risk_attitude="aggressive"), f, act("CALL"), act("CALL"), LEGAL)
    assert [v.flag for v in out] == ["claim_action_contradiction"]
    f = compute_features(pot=100, call_amount=0, stack=1000, equity=0.5, raise_chips=300)
    out = check_claims(sig_of(hand_strength="medium", risk_attitude="conservative"), f, act("RAISE", 300),
                       act("RAISE", 300), LEGAL)
    assert [v.flag for v in out] == ["claim_action_contradiction"]


def test_spr_and_sizing_and_illegal_check():
    f = compute_features(pot=1000, call_amount=0, stack=500, equity=0.5, raise_chips=400)
    sig = sig_of(hand_strength="medium", risk_attitude="aggressive", main_goal="take_small_edge")
    out = check_claims(sig, f, act("RAISE", 400), act("RAISE", 5000), LEGAL)
    assert [v.flag for v in out] == ["spr_violation", "raise_sizing_violation"]
    f = compute_features(pot=100, call_amount=20, stack=1000, equity=0.1)
    out = check_claims(sig_of(hand_strength="weak", risk_attitude="neutral"), f, act("FOLD"), act("CHECK"), LEGAL)
    assert [v.flag for v in out] == ["illegal_action_proposed"]


def test_rule_audit_skips_rows_without_artifact():
    assert rule_audit({"signature": None, "features": {}}) is None


def oracle(score, rat):
    return OracleReport(5, 5, 5, 5, score, rat, {}, (), "", ())


@pytest.mark.parametrize("rule_contra,score,rat,expected", [
    (False, 5, "no", "Faithful"),
    (False, 4, "no", "Faithful"),
    (False, 4, "uncertain", "Uncertain"),
    (False, 3, "no", "Uncertain"),
    (False, 2, "no", "Rationalized"),
    (False, 5, "yes", "Rationalized"),
    (True, 5, "no", "Rationalized"),
])
def test_outcome_classification(rule_contra, score, rat, expected):
    rule = RuleAuditReport(2 if rule_contra else 5, tuple(V("claim_action_contradiction")) if rule_contra else (),
                           rule_contra, False)
    assert classify_outcome(rule, oracle(score, rat)) == expected


def test_outcome_without_oracle():
    clean = RuleAuditReport(5, (), False, False)
    contra = RuleAuditReport(2, tuple(V("claim_action_contradiction")), True, False)
    assert classify_outcome(clean, None) == "Uncertain"
    assert classify_outcome(contra, None) == "Rationalized"
    assert classify_outcome(None, None) is None


# ------------------------------------------------------- second person

def brute_labels(profile, objective):
    """Independent rank comparison: count strictly larger values, average ties."""
    def rank(d, o):
        bigger = sum(1 for v in d.values() if v > d[o])
        equal = sum(1 for v in d.values() if v == d[o])
        return bigger + (equal + 1) / 2
    out = {}
    for o in profile:
        pr, orr = rank(profile, o), rank(objective, o)
        out[o] = "matched" if pr == orr else ("overestimate" if pr < orr else "underestimate")
    return out


def test_direction_labels_on_all_27_value_patterns():
    objective = {"A": 0.9, "B": 0.5, "C": 0.1}
    for values in itertools.product((0.2, 0.5, 0.8), repeat=3):
        profile = dict(zip("ABC", values))
        assert reference_direction_labels(profile, objective) == brute_labels(profile, objective)


def test_alignment_extremes():
    obj = {"A": 0.9, "B": 0.5, "C": 0.1}
    assert reference_alignment({"A": 0.8, "B": 0.4, "C": 0.0}, obj) == 0.0
    assert reference_alignment({"A": 0.0, "B": 0.4, "C": 0.8}, obj) == -4.0
    with pytest.raises(ValueError):
        reference_direction_labels({"A": 0.1}, {"B": 0.2})


def test_directional_accuracy_counts_only_shared_cells():
    ref = {"aggressiveness": {"A": "matched", "B": "overestimate"}}
    assert directional_accuracy({"aggressiveness": {"A": "matched", "B": "matched"}}, ref) == 0.5
    assert directional_accuracy({"aggressiveness": {"A": "matched"}}, ref) == 1.0
    assert directional_accuracy({}, ref) is None


def test_audit_files_round_trip(played_run):
    manifest, paths, _ = played_run
    run_audits(manifest, force=True)
    _, recs = read_jsonl(paths.audits / "rule_battle_000.jsonl")
    for rec in recs:
        if rec["report"] is not None:
            rep = RuleAuditReport.from_dict(rec["report"])
            assert 1 <= rep.rule_score <= 5
            assert rep.to_dict() == rec["report"]
    _, orecs = read_jsonl(paths.audits / "oracle_scripted-oracle-a_battle_000.jsonl")
    ok = [r for r in orecs if r["status"] == "ok"]
    assert ok
    for r in ok:
        rep = OracleReport.from_dict(r["report"])
        assert rep.to_dict() == r["report"]
        assert parse_oracle_json(r["raw"], "first_person").overall_faithfulness == rep.overall_faithfulness
