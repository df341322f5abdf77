"""Fixed-strategy archetype players.

Each archetype classifies its hand into weak / medium / strong / nuts from a
field-adjusted strength, then samples FOLD, CALL or RAISE from a per-class
mixing table. The numbers below are repo reference values chosen so that the
realized statistics order the archetypes as expected (raise rate: Maniac >
LAG > TAG > the passive pair; loose archetypes enter more pots and fold less
than tight ones). They are not sourced from any published parameterization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine.table import Action, LegalActionSet
from .features import BehaviorStats, ReferenceFeatures

ARCHETYPES = ("LoosePassive", "LooseAggressive", "Maniac", "TightPassive", "TightAggressive")
CLASSES = ("weak", "medium", "strong", "nuts")
STREETS = ("preflop", "flop", "turn", "river")


def _per_street(value: float, postflop: float | None = None) -> dict[str, float]:
    post = value if postflop is None else postflop
    return {"preflop": value, "flop": post, "turn": post, "river": post}


@dataclass(frozen=True)
class ArchetypeSpec:
    name: str
    vpip_target: float
    pfr_target: float
    af_target: float
    medium_threshold: dict[str, float]
    strong_threshold: dict[str, float]
    # class -> (fold, call, raise); fold mass turns into a check when nothing is owed
    mixing: dict[str, tuple[float, float, float]]
    raise_fraction: dict[str, float]
    call_when_priced: bool = False
    nut_threshold: float = 0.9

    def __post_init__(self) -> None:
        for street in STREETS:
            if not self.medium_threshold[street] <= self.strong_threshold[street] <= self.nut_threshold:
                raise ValueError(f"{self.name}: thresholds not monotone on {street}")
        for cls in CLASSES:
            if abs(sum(self.mixing[cls]) - 1.0) > 1e-9 or min(self.mixing[cls]) < 0:
                raise ValueError(f"{self.name}: mixing weights for {cls} must be a distribution")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "vpip_target": self.vpip_target,
            "pfr_target": self.pfr_target,
            "af_target": self.af_target,
            "medium_threshold": dict(self.medium_threshold),
            "strong_threshold": dict(self.strong_threshold),
            "mixing": {k: list(v) for k, v in self.mixing.items()},
            "raise_fraction": dict(self.raise_fraction),
            "call_when_priced": self.call_when_priced,
            "nut_threshold": self.nut_threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArchetypeSpec":
        d = dict(d)
        d["mixing"] = {k: tuple(v) for k, v in d["mixing"].items()}
        return cls(**d)


ARCHETYPE_SPECS: dict[str, ArchetypeSpec] = {
    "LoosePassive": ArchetypeSpec(
        name="LoosePassive",
        vpip_target=0.55, pfr_target=0.03, af_target=0.3,
        medium_threshold=_per_street(0.30, 0.40),
        strong_threshold=_per_street(0.70),
        mixing={
            "weak": (0.45, 0.55, 0.0),
            "medium": (0.0, 1.0, 0.0),
            "strong": (0.0, 1.0, 0.0),
            "nuts": (0.0, 0.4, 0.6),
        },
        raise_fraction={"weak": 0.5, "medium": 0.5, "strong": 0.5, "nuts": 0.5},
        call_when_priced=True,
    ),
    "LooseAggressive": ArchetypeSpec(
        name="LooseAggressive",
        vpip_target=0.45, pfr_target=0.30, af_target=2.5,
        medium_threshold=_per_street(0.32, 0.40),
        strong_threshold=_per_street(0.55, 0.60),
        mixing={
            "weak": (0.50, 0.25, 0.25),
            "medium": (0.05, 0.50, 0.45),
            "strong": (0.0, 0.30, 0.70),
            "nuts": (0.0, 0.20, 0.80),
        },
        raise_fraction={"weak": 0.75, "medium": 0.75, "strong": 0.75, "nuts": 1.0},
        call_when_priced=True,
    ),
    "Maniac": ArchetypeSpec(
        name="Maniac",
        vpip_target=0.75, pfr_target=0.60, af_target=5.0,
        medium_threshold=_per_street(0.25, 0.35),
        strong_threshold=_per_street(0.50, 0.55),
        mixing={
            "weak": (0.15, 0.25, 0.60),
            "medium": (0.0, 0.35, 0.65),
            "strong": (0.0, 0.20, 0.80),
            "nuts": (0.0, 0.10, 0.90),
        },
        raise_fraction={"weak": 1.0, "medium": 1.0, "strong": 1.2, "nuts": 1.5},
    ),
    "TightPassive": ArchetypeSpec(
        name="TightPassive",
        vpip_target=0.15, pfr_target=0.03, af_target=0.3,
        medium_threshold=_per_street(0.55, 0.50),
        strong_threshold=_per_street(0.75),
        mixing={
            "weak": (1.0, 0.0, 0.0),
            "medium": (0.35, 0.65, 0.0),
            "strong": (0.0, 0.95, 0.05),
            "nuts": (0.0, 0.50, 0.50),
        },
        raise_fraction={"weak": 0.5, "medium": 0.5, "strong": 0.5, "nuts": 0.5},
    ),
    "TightAggressive": ArchetypeSpec(
        name="TightAggressive",
        vpip_target=0.18, pfr_target=0.14, af_target=2.0,
        medium_threshold=_per_street(0.55, 0.50),
        strong_threshold=_per_street(0.68, 0.65),
        mixing={
            "weak": (0.97, 0.0, 0.03),
            "medium": (0.45, 0.40, 0.15),
            "strong": (0.0, 0.35, 0.65),
            "nuts": (0.0, 0.10, 0.90),
        },
        raise_fraction={"weak": 0.75, "medium": 0.75, "strong": 0.75, "nuts": 1.0},
    ),
}


def field_strength(equity: float, n_opponents: int) -> float:
    """Equity rescaled so that a fair share of the pot maps to 0.5."""
    return min(1.0, equity * (n_opponents + 1) / 2.0)


def classify(spec: ArchetypeSpec, features: ReferenceFeatures, street: str) -> str:
    s = field_strength(features.equity, features.n_opponents)
    if s >= spec.nut_threshold:
        return "nuts"
    if s >= spec.strong_threshold[street]:
        return "strong"
    if s >= spec.medium_threshold[street]:
        return "medium"
    return "weak"


def archetype_decide(
    spec: ArchetypeSpec,
    features: ReferenceFeatures,
    legal: LegalActionSet,
    rng: np.random.Generator,
    street: str = "preflop",
) -> Action:
    """Sample an engine-legal action for the archetype."""
    cls = classify(spec, features, street)
    fold, call, raise_ = spec.mixing[cls]
    if legal.call_amount == 0:
        call, fold = call + fold, 0.0
    elif spec.call_when_priced and features.equity >= features.pot_odds:
        call, fold = call + fold, 0.0
    if not legal.raise_available:
        call, raise_ = call + raise_, 0.0
    u = rng.random()
    if u < fold:
        return Action.fold()
    if u < fold + call:
        return Action.call()
    street_committed = legal.max_raise - features.stack
    chips = legal.call_amount + spec.raise_fraction[cls] * (features.pot + legal.call_amount)
    target = int(round(street_committed + chips))
    return Action.raise_to(min(max(target, legal.min_raise), legal.max_raise))


# Normalizers that turn realized archetype statistics into ground-truth trait values.
TRAIT_PROXY = {
    "risk_tolerance": "vpip_proxy",
    "aggressiveness": "raise_rate",
    "bluff_frequency": "bluff_attempt_rate",
    "calling_station_tendency": "call_to_fold_ratio",
    "showdown_propensity": "showdown_rate",
}


def ground_truth_traits(stats: BehaviorStats) -> dict[str, float]:
    """Map long-run statistics into [0, 1] trait values."""
    out = {}
    for trait, proxy in TRAIT_PROXY.items():
        v = getattr(stats, proxy)
        out[trait] = v / (1.0 + v) if proxy == "call_to_fold_ratio" else v
    return out


@dataclass(frozen=True)
class ReferenceTraits:
    """Repo reference ground truth, regenerated by ``runner.simulate_archetype_stats``."""

    values: dict[str, dict[str, float]] = field(default_factory=dict)

    def ordering(self, trait: str, archetypes: tuple[str, ...] = ARCHETYPES) -> list[float]:
        return [self.values[a][trait] for a in archetypes]


# Regenerate with runner.simulate_archetype_stats(hands=1000, seed=11, mc_simulations=200)
# followed by ground_truth_traits; values rounded to 4 decimals.
REFERENCE_SIMULATION = {"hands": 1000, "seed": 11, "mc_simulations": 200}
REFERENCE_TRAITS = ReferenceTraits({
    "LoosePassive": {"risk_tolerance": 0.8185, "aggressiveness": 0.0249, "bluff_frequency": 0.0,
                     "calling_station_tendency": 0.9369, "showdown_propensity": 0.718},
    "LooseAggressive": {"risk_tolerance": 0.8078, "aggressiveness": 0.4912, "bluff_frequency": 0.3058,
                        "calling_station_tendency": 0.8729, "showdown_propensity": 0.4036},
    "Maniac": {"risk_tolerance": 0.792, "aggressiveness": 0.6437, "bluff_frequency": 0.3857,
               "calling_station_tendency": 0.9535, "showdown_propensity": 0.3537},
    "TightPassive": {"risk_tolerance": 0.2137, "aggressiveness": 0.0317, "bluff_frequency": 0.0039,
                     "calling_station_tendency": 0.2982, "showdown_propensity": 0.1847},
    "TightAggressive": {"risk_tolerance": 0.2844, "aggressiveness": 0.1713, "bluff_frequency": 0.0661,
                        "calling_station_tendency": 0.2188, "showdown_propensity": 0.1835},
})
