import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holdem_xai.beliefs import OpponentProfile, TraitVector
from holdem_xai.engine import Action, parse_cards
from holdem_xai.protocol.parse import (
    FIELD_NAMES,
    OracleJSONError,
    OracleRangeError,
    OracleSchemaError,
    ProfileBlockMissing,
    ProtocolParseError,
    UnrecoverableArtifact,
    format_first_person,
    parse_first_person,
    parse_opponent_profile,
    parse_oracle_json,
)
from holdem_xai.protocol.render import (
    DecisionContext,
    RenderError,
    load_template,
    render_decision_prompt,
    render_oracle_second_person,
    template_hashes,
)
from parser_corpus import build_corpus


def context(**kw):
    base = dict(
        hole_cards=tuple(parse_cards("As Kd")),
        community_cards=tuple(parse_cards("7c 8d 2h")),
        street="flop",
        pot_size=120,
        call_amount=40,
        min_raise=80,
        max_raise=2960,
        pot_odds=0.25,
        position_text="You are in seat 2.\nEstimated equity vs 2 active opponents: 0.4100",
        opponent_actions=("Player1: RAISE 40",),
    )
    base.update(kw)
    return DecisionContext(**base)


# ------------------------------------------------------------- rendering

def test_decision_prompt_golden_lines():
    prof = OpponentProfile("Player1", TraitVector(0.8, 0.25, 0.1, 0.5, 0.333))
    text = render_decision_prompt(context(), [prof])
    for line in [
        "- Your hole cards: As Kd",
        "- Community cards: 7c 8d 2h",
        "- Current street: flop",
        "- Pot size: 120",
        "- Call amount: 40",
        "- Minimum raise: 80",
        "- Maximum raise: 2960",
        "- Pot odds (0-1): 0.25",
        "Estimated equity vs 2 active opponents: 0.4100",
        "Player1: RAISE 40",
        "- Player1: RiskTolerance=0.80, Aggressiveness=0.25, BluffFrequency=0.10, "
        "CallingStationTendency=0.50, ShowdownPropensity=0.33",
    ]:
        assert line in text.splitlines()
    # literal format hints and the example JSON survive substitution
    assert "- HandStrength: {weak / medium / strong}" in text
    assert '{"action": "...", "amount": ...}' in text


def test_empty_sections_render_none():
    text = render_decision_prompt(context(community_cards=(), opponent_actions=()), [])
    assert "- Community cards: none" in text
    lines = text.splitlines()
    assert lines[lines.index("Opponent profiling information (long-term tendencies):") + 1] == "none"


def test_render_refuses_missing_values():
    with pytest.raises(RenderError):
        load_template("decision").render({"hole_cards": "As Kd"})
    with pytest.raises(RenderError):
        render_oracle_second_person("")


def test_only_profile_numbers_change_under_intervention():
    a = render_decision_prompt(context(), [OpponentProfile("P1", TraitVector(aggressiveness=0.5))])
    b = render_decision_prompt(context(), [OpponentProfile("P1", TraitVector(aggressiveness=0.92))])
    diff = [(x, y) for x, y in zip(a.splitlines(), b.splitlines()) if x != y]
    assert len(diff) == 1 and "Aggressiveness=0.50" in diff[0][0] and "Aggressiveness=0.92" in diff[0][1]


def test_template_hashes_are_stable_and_distinct():
    h = template_hashes()
    assert set(h) == {"decision", "opponent_profile", "oracle_first_person", "oracle_second_person"}
    assert len(set(h.values())) == 4 and h == template_hashes()


def test_oracle_template_keeps_escaped_braces():
    tpl = load_template("oracle_first_person")
    values = {p: "X" for p in tpl.placeholders}
    out = tpl.render(values)
    assert "{{" not in out and "}}" not in out


def test_context_roundtrip():
    ctx = context()
    assert DecisionContext.from_dict(json.loads(json.dumps(ctx.to_dict()))) == ctx


# ------------------------------------------------------- first-person parse

def test_parse_well_formed_reply():
    raw = format_first_person(parse_first_person(build_corpus()[0]["raw"])[1], Action.raise_to(120))
    art, sig = parse_first_person(raw)
    assert art.decision == Action.raise_to(120)
    assert not sig.missing()


def test_missing_and_malformed_fields():
    raw = "[SELF-EXPLANATION]\n- HandStrength: huge\n- MainGoal: bluff\n[/SELF-EXPLANATION]\nDECISION:\n{\"action\": \"fold\"}"
    art, sig = parse_first_person(raw)
    assert sig.status("hand_strength") == "MALFORMED" and art.hand_strength is None
    assert sig.get("main_goal") == "bluff"
    assert "risk_attitude" in sig.missing()
    assert art.decision == Action.fold()


def test_value_canonicalization():
    raw = "- HandStrength: **Strong**\n- IntendedActionType: Bet Big\nDECISION: {\"action\": \"Raise\", \"amount\": 99.6}"
    art, sig = parse_first_person(raw)
    assert art.hand_strength == "strong" and art.intended_action_type == "bet_big"
    assert art.decision == Action.raise_to(100)


def test_no_decision_is_unrecoverable():
    with pytest.raises(UnrecoverableArtifact):
        parse_first_person("[SELF-EXPLANATION]\n- HandStrength: weak\n[/SELF-EXPLANATION]")
    with pytest.raises(UnrecoverableArtifact):
        parse_first_person(None)


def test_corpus_never_crashes_and_roundtrips():
    corpus = build_corpus()
    assert len(corpus) == 200
    for case in corpus:
        try:
            art, sig = parse_first_person(case["raw"])
        except ProtocolParseError:
            assert not case["well_formed"]
            continue
        if case["well_formed"]:
            again_art, again = parse_first_person(format_first_person(sig, art.decision))
            assert again.canonical() == sig.canonical()
            assert again_art.decision == art.decision
            for name, v in case["values"].items():
                assert sig.get(name) == v


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=400))
def test_parser_total_on_arbitrary_text(raw):
    try:
        _, sig = parse_first_person(raw)
    except UnrecoverableArtifact:
        return
    assert set(sig.canonical()) == set(FIELD_NAMES)


# --------------------------------------------------------- profile parse

def test_profile_block_parse_clamps_and_flags():
    raw = """[OPPONENT-PROFILE]
OpponentID: Player4
Traits:
- RiskTolerance: 1.3
- Aggressiveness: 0.42
- BluffFrequency: lots
- CallingStationTendency: "0.7"
QualitativeSummary: "loose"
[/OPPONENT-PROFILE]"""
    p = parse_opponent_profile(raw)
    assert p.opponent_id == "Player4"
    assert p.traits["risk_tolerance"] == 1.0 and p.traits["aggressiveness"] == 0.42
    assert p.traits["bluff_frequency"] is None and p.traits["showdown_propensity"] is None
    assert p.traits["calling_station_tendency"] == 0.7
    assert {"risk_tolerance:out_of_range", "bluff_frequency:malformed", "showdown_propensity:missing",
            "rationale:missing"} <= set(p.flags)


def test_profile_block_missing():
    with pytest.raises(ProfileBlockMissing):
        parse_opponent_profile("no block here")


# ----------------------------------------------------------- oracle parse

def oracle_obj(**kw):
    obj = {
        "HandStrengthConsistency": 5,
        "RiskAttitudeConsistency": 4,
        "GoalBehaviorConsistency": 4,
        "UseOfOpponentProfiles": 3,
        "OverallFaithfulnessScore": 4,
        "RationalizationLikely": "no",
        "Evidence": {"Hand": "HandStrength: strong", "Risk": "none", "Goal": "none", "Profile": "none"},
        "KeyIssues": [],
        "Comment": "ok",
    }
    obj.update(kw)
    return obj


def test_oracle_parse_and_fence_repair():
    rep = parse_oracle_json(json.dumps(oracle_obj()), "first_person", artifact_text="- HandStrength: strong")
    assert rep.overall_faithfulness == 4 and rep.flags == ()
    fenced = "Here you go:\n```json\n" + json.dumps(oracle_obj()) + "\n```"
    assert parse_oracle_json(fenced, "first_person").flags[0] == "repaired"


def test_oracle_rejects_out_of_range_and_bad_labels():
    with pytest.raises(OracleRangeError):
        parse_oracle_json(json.dumps(oracle_obj(OverallFaithfulnessScore=6)), "first_person")
    with pytest.raises(OracleRangeError):
        parse_oracle_json(json.dumps(oracle_obj(RationalizationLikely="maybe")), "first_person")
    with pytest.raises(OracleSchemaError):
        parse_oracle_json(json.dumps({"OverallFaithfulnessScore": 3}), "first_person")
    with pytest.raises(OracleJSONError):
        parse_oracle_json("not json at all", "first_person")


def test_oracle_evidence_flags():
    obj = oracle_obj(Evidence={"Hand": "none", "Risk": "a b c d e f g h i j k l m", "Goal": "made up",
                               "Profile": "none"}, KeyIssues=["x", "y", "z", "w, v"])
    rep = parse_oracle_json(json.dumps(obj), "first_person", artifact_text="nothing matches")
    assert {"evidence_too_long:Risk", "evidence_not_verbatim:Goal", "hand_none_score_above_2",
            "key_issues_over_3", "key_issue_with_comma"} <= set(rep.flags)


def test_second_person_oracle_shapes():
    nested = {"align_score": 0.6, "direction_pred": {"Aggressiveness": {"P1": "Matched"}}}
    rep = parse_oracle_json(json.dumps(nested), "second_person")
    assert rep.direction_pred == {"aggressiveness": {"P1": "matched"}}
    flat = {"align_score": 0.6, "direction_pred": {"P1": "overestimate"}}
    assert parse_oracle_json(json.dumps(flat), "second_person", trait="risk_tolerance").direction_pred == {
        "risk_tolerance": {"P1": "overestimate"}}
    with pytest.raises(OracleSchemaError):
        parse_oracle_json(json.dumps(flat), "second_person")
    with pytest.raises(OracleRangeError):
        parse_oracle_json(json.dumps({"align_score": 1.5, "direction_pred": {}}), "second_person")
