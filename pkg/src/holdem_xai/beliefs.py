"""Second-person opponent profiles and belief interventions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

TRAITS = (
    "risk_tolerance",
    "aggressiveness",
    "bluff_frequency",
    "calling_station_tendency",
    "showdown_propensity",
)

# display names used by the prompt templates
TRAIT_LABELS = {
    "risk_tolerance": "RiskTolerance",
    "aggressiveness": "Aggressiveness",
    "bluff_frequency": "BluffFrequency",
    "calling_station_tendency": "CallingStationTendency",
    "showdown_propensity": "ShowdownPropensity",
}
LABEL_TO_TRAIT = {v: k for k, v in TRAIT_LABELS.items()}

MAX_STEP = 0.05
INITIAL_VALUE = 0.5
BOUNDARY_EPS = 1e-6


@dataclass(frozen=True)
class TraitVector:
    risk_tolerance: float = INITIAL_VALUE
    aggressiveness: float = INITIAL_VALUE
    bluff_frequency: float = INITIAL_VALUE
    calling_station_tendency: float = INITIAL_VALUE
    showdown_propensity: float = INITIAL_VALUE

    def __post_init__(self) -> None:
        for name in TRAITS:
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0 or math.isnan(v):
                raise ValueError(f"{name}={v} outside [0, 1]")

    def get(self, trait: str) -> float:
        return getattr(self, trait)

    def with_value(self, trait: str, value: float) -> "TraitVector":
        return replace(self, **{trait: value})

    def to_dict(self) -> dict[str, float]:
        return {t: getattr(self, t) for t in TRAITS}

    @classmethod
    def from_dict(cls, d: dict) -> "TraitVector":
        return cls(**{t: d[t] for t in TRAITS if t in d})


@dataclass(frozen=True)
class OpponentProfile:
    opponent_id: str
    traits: TraitVector = field(default_factory=TraitVector)
    summary: str = ""
    rationale: str = ""
    updated_at_hand: int | None = None
    history: tuple[TraitVector, ...] = ()

    def to_dict(self) -> dict:
        return {
            "opponent_id": self.opponent_id,
            "traits": self.traits.to_dict(),
            "summary": self.summary,
            "rationale": self.rationale,
            "updated_at_hand": self.updated_at_hand,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OpponentProfile":
        return cls(
            opponent_id=d["opponent_id"],
            traits=TraitVector.from_dict(d["traits"]),
            summary=d.get("summary", ""),
            rationale=d.get("rationale", ""),
            updated_at_hand=d.get("updated_at_hand"),
        )


def apply_bounded_update(
    profile: OpponentProfile,
    proposed: TraitVector | dict[str, float | None],
    hand_index: int,
    summary: str | None = None,
    rationale: str | None = None,
) -> OpponentProfile:
    """Move each trait toward its proposal by at most ``MAX_STEP``.

    ``proposed`` may be a partial mapping; traits proposed as ``None`` or
    absent keep their prior value. Texts replace the previous ones when given.
    """
    prop = proposed.to_dict() if isinstance(proposed, TraitVector) else proposed
    new = {}
    for t in TRAITS:
        prior = profile.traits.get(t)
        target = prop.get(t)
        if target is None:
            new[t] = prior
            continue
        moved = prior + max(-MAX_STEP, min(MAX_STEP, target - prior))
        new[t] = min(1.0, max(0.0, moved))
    return replace(
        profile,
        traits=TraitVector(**new),
        summary=profile.summary if summary is None else summary,
        rationale=profile.rationale if rationale is None else rationale,
        updated_at_hand=hand_index,
        history=profile.history + (profile.traits,),
    )


@dataclass(frozen=True)
class InterventionSpec:
    trait: str
    direction: str  # "up" or "down"
    delta: float = 2.5

    def __post_init__(self) -> None:
        if self.trait not in TRAITS:
            raise ValueError(f"unknown trait {self.trait!r}")
        if self.direction not in ("up", "down"):
            raise ValueError(f"direction must be up or down, got {self.direction!r}")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")

    @property
    def signed_delta(self) -> float:
        return self.delta if self.direction == "up" else -self.delta


def logit(p: float) -> float:
    return math.log(p) - math.log1p(-p)


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def shift_logit(p: float, signed_delta: float) -> tuple[float, bool]:
    """``sigmoid(logit(p) + delta)`` with boundary inputs pulled inside by 1e-6.

    Returns the new value and whether the boundary rule fired.
    """
    clamped = min(1.0 - BOUNDARY_EPS, max(BOUNDARY_EPS, p))
    return sigmoid(logit(clamped) + signed_delta), clamped != p


def intervene(traits: TraitVector, spec: InterventionSpec) -> tuple[TraitVector, bool]:
    """Perturb one trait in logit space; returns (new vector, boundary flag)."""
    value, flagged = shift_logit(traits.get(spec.trait), spec.signed_delta)
    return traits.with_value(spec.trait, value), flagged


def rank_desc(values: Sequence[float]) -> np.ndarray:
    """Rank 1 is the highest value; ties share the average rank."""
    return rankdata(-np.asarray(values, dtype=float), method="average")


def rank_profiles(profiles: Sequence[OpponentProfile], trait: str) -> dict[str, float]:
    if len(profiles) < 2:
        raise ValueError("need at least two profiles to rank")
    ranks = rank_desc([p.traits.get(trait) for p in profiles])
    return {p.opponent_id: float(r) for p, r in zip(profiles, ranks)}
