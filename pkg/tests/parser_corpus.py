"""Deterministic 200-case corpus of first-person agent replies.

Five families of 40: well-formed, truncated, mis-cased, fenced and garbage.
Each case records whether it is well-formed and, if so, the expected
decision so the round trip can be checked.
"""

import json
import random

from holdem_xai.protocol.parse import FIRST_PERSON_FIELDS

CHOICE_FIELDS = [f for f in FIRST_PERSON_FIELDS if f.choices]
FAMILY_SIZE = 40


def _explanation(rnd: random.Random) -> tuple[str, dict]:
    values = {f.name: rnd.choice(f.choices) for f in CHOICE_FIELDS}
    values["narrative"] = rnd.choice(["I have a strong draw.", "Price is fine.", "Folding is safest here."])
    values["profile_influence"] = rnd.choice(["P3 raises often", "none in particular", "P1 calls too much"])
    values["intended_reason"] = rnd.choice(["pot odds", "value", "fold equity"])
    text = "\n".join([
        "[SELF-EXPLANATION]",
        f'NaturalLanguage: "{values["narrative"]}"',
        "",
        "Beliefs:",
        f"- HandStrength: {values['hand_strength']}",
        f"- RiskAttitudeThisHand: {values['risk_attitude']}",
        f"- MainGoal: {values['main_goal']}",
        f"- PerceivedOpponentRisk: {values['perceived_opponent_risk']}",
        f'- ProfileInfluence: "{values["profile_influence"]}"',
        f'- IntendedReason: "{values["intended_reason"]}"',
        "",
        "ChosenActionSummary:",
        f"- IntendedActionType: {values['intended_action_type']}",
        f"- IntendedRiskLevel: {values['intended_risk_level']}",
        "[/SELF-EXPLANATION]",
    ])
    return text, values


def _decision(rnd: random.Random) -> dict:
    kind = rnd.choice(["fold", "call", "check", "raise"])
    return {"action": kind, "amount": rnd.randrange(20, 400) if kind == "raise" else 0}


def build_corpus(seed: int = 2024) -> list[dict]:
    rnd = random.Random(seed)
    cases = []
    for i in range(FAMILY_SIZE):
        text, values = _explanation(rnd)
        dec = _decision(rnd)
        raw = f"{text}\n\nDECISION:\n{json.dumps(dec)}\n"
        cases.append({"family": "well_formed", "raw": raw, "well_formed": True, "decision": dec, "values": values})
    for i in range(FAMILY_SIZE):
        text, _ = _explanation(rnd)
        raw = f"{text}\n\nDECISION:\n{json.dumps(_decision(rnd))}\n"
        cut = rnd.randrange(1, len(raw) - 1)
        cases.append({"family": "truncated", "raw": raw[:cut], "well_formed": False})
    for i in range(FAMILY_SIZE):
        text, _ = _explanation(rnd)
        mangled = "".join(ch.upper() if rnd.random() < 0.5 else ch.lower() for ch in text)
        dec = _decision(rnd)
        dec_text = json.dumps({"ACTION": dec["action"].upper(), "Amount": dec["amount"]}) if i % 2 else \
            json.dumps({"action": dec["action"].upper(), "amount": dec["amount"]})
        cases.append({"family": "mis_cased", "raw": f"{mangled}\n\ndecision:\n{dec_text}\n", "well_formed": False})
    for i in range(FAMILY_SIZE):
        text, _ = _explanation(rnd)
        dec = _decision(rnd)
        raw = f"```\n{text}\n```\n\nDECISION:\n```json\n{json.dumps(dec)}\n```\n"
        cases.append({"family": "fenced", "raw": raw, "well_formed": False})
    junk = ["", "   ", "{", "}", "null", "[]", '{"action": 5}', '{"action": "raise", "amount": "lots"}',
            "DECISION: maybe", "\x00\x01\x02", "[SELF-EXPLANATION][/SELF-EXPLANATION]", '{"action": "raise", "amount": -5}',
            "DECISION:\n{\"action\": \"shove\"}", "{" * 500, '{"action": "raise", "amount": NaN}', "🂡🂮" * 10]
    for i in range(FAMILY_SIZE):
        if i < len(junk):
            raw = junk[i]
        else:
            raw = "".join(chr(rnd.randrange(32, 0x2FF)) for _ in range(rnd.randrange(1, 200)))
        cases.append({"family": "garbage", "raw": raw, "well_formed": False})
    return cases
