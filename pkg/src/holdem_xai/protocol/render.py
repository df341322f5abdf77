"""Prompt templates and placeholder substitution.

The four templates ship as text assets next to this module. Only the named
placeholders of each template are substituted; every other brace in the
template (format hints like ``{weak / medium / strong}``, the example
DECISION JSON) is literal text and passes through untouched.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Any, Mapping, Sequence

from ..beliefs import TRAIT_LABELS, TRAITS, OpponentProfile
from ..engine.cards import Card, format_cards


class RenderError(ValueError):
    """A placeholder had no value; partial prompts are never emitted."""


DECISION_FIELDS = (
    "hole_cards",
    "community_cards",
    "street",
    "pot_size",
    "call_amount",
    "min_raise",
    "max_raise",
    "pot_odds",
    "position_text",
    "opponent_actions_text",
    "opponent_profiles_text",
)

ORACLE_FIELDS = (
    'sample.get("player")',
    'sample.get("round")',
    'sample.get("street")',
    "hole_cards_str",
    "board_cards_str",
    "pot_size",
    "call_amount",
    "min_raise",
    "max_raise",
    "position_info_str",
    "opp_actions_str",
    "hs_str",
    "hs_bucket",
    "pot_odds_str",
    "risk_str",
    "self_reasoning",
    "profiles_str",
    "action_str",
)

# name -> (file, placeholder names, doubled braces are escapes)
_SPECS = {
    "decision": ("decision.txt", DECISION_FIELDS, False),
    "opponent_profile": ("opponent_profile.txt", ("summary_text",), False),
    "oracle_first_person": ("oracle_first_person.txt", ORACLE_FIELDS, True),
    "oracle_second_person": ("oracle_second_person.txt", (), False),
}

NONE_TEXT = "none"


@dataclass(frozen=True)
class Template:
    name: str
    text: str
    placeholders: tuple[str, ...]
    fstring_escapes: bool

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()

    def _pattern(self) -> re.Pattern:
        names = "|".join(re.escape(p) for p in sorted(self.placeholders, key=len, reverse=True))
        slot = rf"\{{(?P<name>{names})(?::(?P<fmt>[^{{}}]+))?\}}" if names else r"(?!x)x"
        if self.fstring_escapes:
            return re.compile(rf"(?P<esc>\{{\{{|\}}\}})|{slot}")
        return re.compile(slot)

    def render(self, values: Mapping[str, Any]) -> str:
        missing = [p for p in self.placeholders if values.get(p) is None]
        if missing:
            raise RenderError(f"{self.name}: no value for {', '.join(missing)}")
        pattern = self._pattern()

        def sub(m: re.Match) -> str:
            if m.groupdict().get("esc"):
                return m.group("esc")[0]
            value = values[m.group("name")]
            fmt = m.group("fmt")
            return format(value, fmt) if fmt else str(value)

        return pattern.sub(sub, self.text)

    def slots(self) -> list[tuple[int, int]]:
        """Character spans of the placeholders in the raw template text."""
        return [m.span() for m in self._pattern().finditer(self.text) if m.groupdict().get("name")]


@lru_cache(maxsize=None)
def load_template(name: str) -> Template:
    try:
        filename, placeholders, escapes = _SPECS[name]
    except KeyError:
        raise RenderError(f"unknown template {name!r}") from None
    text = resources.files(__package__).joinpath("templates", filename).read_text(encoding="utf-8")
    return Template(name, text, placeholders, escapes)


def template_hashes() -> dict[str, str]:
    return {name: load_template(name).sha256 for name in _SPECS}


def prompt_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def lines_or_none(lines: Sequence[str]) -> str:
    return "\n".join(lines) if lines else NONE_TEXT


def format_trait_values(traits: Mapping[str, float]) -> str:
    return ", ".join(f"{TRAIT_LABELS[t]}={traits[t]:.2f}" for t in TRAITS)


def format_profiles(profiles: Sequence[OpponentProfile]) -> str:
    """One line per opponent; the numbers are the only belief-bearing text."""
    lines = []
    for p in profiles:
        line = f"- {p.opponent_id}: {format_trait_values(p.traits.to_dict())}"
        if p.summary:
            line += f' | style: "{p.summary}"'
        lines.append(line)
    return lines_or_none(lines)


@dataclass(frozen=True)
class DecisionContext:
    """Everything the decision prompt shows the acting agent."""

    hole_cards: tuple[Card, Card]
    community_cards: tuple[Card, ...]
    street: str
    pot_size: int
    call_amount: int
    min_raise: int
    max_raise: int
    pot_odds: float
    position_text: str
    opponent_actions: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "hole_cards": [str(c) for c in self.hole_cards],
            "community_cards": [str(c) for c in self.community_cards],
            "street": self.street,
            "pot_size": self.pot_size,
            "call_amount": self.call_amount,
            "min_raise": self.min_raise,
            "max_raise": self.max_raise,
            "pot_odds": self.pot_odds,
            "position_text": self.position_text,
            "opponent_actions": list(self.opponent_actions),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionContext":
        return cls(
            hole_cards=tuple(Card.parse(c) for c in d["hole_cards"]),
            community_cards=tuple(Card.parse(c) for c in d["community_cards"]),
            street=d["street"],
            pot_size=d["pot_size"],
            call_amount=d["call_amount"],
            min_raise=d["min_raise"],
            max_raise=d["max_raise"],
            pot_odds=d["pot_odds"],
            position_text=d["position_text"],
            opponent_actions=tuple(d["opponent_actions"]),
        )


def render_decision_prompt(ctx: DecisionContext, profiles: Sequence[OpponentProfile]) -> str:
    return load_template("decision").render(
        {
            "hole_cards": format_cards(ctx.hole_cards),
            "community_cards": format_cards(ctx.community_cards),
            "street": ctx.street,
            "pot_size": ctx.pot_size,
            "call_amount": ctx.call_amount,
            "min_raise": ctx.min_raise,
            "max_raise": ctx.max_raise,
            "pot_odds": ctx.pot_odds,
            "position_text": ctx.position_text,
            "opponent_actions_text": lines_or_none(ctx.opponent_actions),
            "opponent_profiles_text": format_profiles(profiles),
        }
    )


def render_profile_prompt(summary_text: str) -> str:
    return load_template("opponent_profile").render({"summary_text": summary_text})


def render_oracle_first_person(values: Mapping[str, Any]) -> str:
    return load_template("oracle_first_person").render(values)


def render_oracle_second_person(data_section: str) -> str:
    """The second-person oracle template has no slots; the data follows it."""
    if not data_section:
        raise RenderError("oracle_second_person: empty data section")
    return load_template("oracle_second_person").render({}) + "\n[DATA]\n" + data_section + "\n[/DATA]\n"


def format_stats_summary(opponent_id: str, stats, current: OpponentProfile) -> str:
    """Behavioral summary shown to the profiling prompt for one opponent."""
    lines = [f"OpponentID: {opponent_id}", f"hands_seen: {stats.hands_seen}"]
    lines += [f"{name}: {value:.4f}" for name, value in stats.proxies().items()]
    lines += [
        f"postflop_calls: {stats.postflop_calls}",
        f"postflop_raises: {stats.postflop_raises}",
        f"showdowns: {stats.showdowns}",
        "Current profile:",
        format_profiles([current]),
    ]
    return "\n".join(lines)
