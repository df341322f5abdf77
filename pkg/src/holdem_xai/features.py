"""Environment-derived reference features.

Two families live here: per-decision quantities (pot odds, stack-to-pot
ratio, equity bucket, raise risk) and long-run behavioral counters for each
player, from which rate statistics and windowed deltas are derived.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable

from .config import FeatureThresholds
from .engine.table import Action, ActionKind, LegalActionSet, TableState

BUCKETS = ("weak", "medium", "strong")


@dataclass(frozen=True)
class ReferenceFeatures:
    pot: int
    call_amount: int
    stack: int
    pot_odds: float
    spr: float  # math.inf when the pot is empty
    equity: float
    hand_strength_bucket: str
    n_opponents: int = 1
    raise_over_pot: float | None = None
    raise_over_stack: float | None = None
    high_risk: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(self.spr):
            d["spr"] = "inf"
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ReferenceFeatures":
        d = dict(d)
        if d.get("spr") == "inf":
            d["spr"] = math.inf
        return cls(**d)


def strength_bucket(equity: float, thresholds: FeatureThresholds = FeatureThresholds()) -> str:
    if equity < thresholds.weak_below:
        return "weak"
    if equity < thresholds.strong_from:
        return "medium"
    return "strong"


def pot_odds(call_amount: int, pot: int) -> float:
    return 0.0 if call_amount <= 0 else call_amount / (pot + call_amount)


def compute_features(
    pot: int,
    call_amount: int,
    stack: int,
    equity: float,
    n_opponents: int = 1,
    raise_chips: int | None = None,
    thresholds: FeatureThresholds = FeatureThresholds(),
) -> ReferenceFeatures:
    """Features from raw quantities; ``raise_chips`` is what a RAISE adds to the pot."""
    rop = ros = None
    high_risk = False
    if raise_chips is not None:
        rop = raise_chips / pot if pot > 0 else math.inf
        ros = raise_chips / stack if stack > 0 else math.inf
        high_risk = rop >= thresholds.high_risk_raise_over_pot or ros >= thresholds.high_risk_raise_over_stack
    return ReferenceFeatures(
        pot=pot,
        call_amount=call_amount,
        stack=stack,
        pot_odds=pot_odds(call_amount, pot),
        spr=stack / pot if pot > 0 else math.inf,
        equity=equity,
        hand_strength_bucket=strength_bucket(equity, thresholds),
        n_opponents=n_opponents,
        raise_over_pot=rop,
        raise_over_stack=ros,
        high_risk=high_risk,
    )


def decision_features(
    table: TableState,
    legal: LegalActionSet,
    equity: float,
    action: Action | None = None,
    thresholds: FeatureThresholds = FeatureThresholds(),
) -> ReferenceFeatures:
    """Features for the seat due to act; risk ratios only when ``action`` raises."""
    seat = table.to_act
    stack = table.stacks[seat]
    n_opp = sum(1 for s in range(table.n_seats) if s != seat and table.live(s))
    raise_chips = None
    if action is not None and action.kind is ActionKind.RAISE:
        raise_chips = action.amount - table.street_committed[seat]
    return compute_features(table.pot, legal.call_amount, stack, equity, n_opp, raise_chips, thresholds)


@dataclass(frozen=True)
class ActionObservation:
    street: str
    kind: str  # FOLD / CALL / RAISE (CHECK arrives as zero-cost CALL)
    cost: int
    faced_bet: bool
    equity: float | None = None


@dataclass(frozen=True)
class PlayerHandRecord:
    """Everything one player did in one finished hand."""

    actions: tuple[ActionObservation, ...]
    showdown: bool
    won_without_showdown: bool


@dataclass(frozen=True)
class BehaviorStats:
    hands_seen: int = 0
    vpip_hands: int = 0
    pfr_hands: int = 0
    bets_raises: int = 0
    calls: int = 0
    checks: int = 0
    faced_decisions: int = 0
    faced_folds: int = 0
    faced_calls: int = 0
    faced_raises: int = 0
    postflop_calls: int = 0
    postflop_raises: int = 0
    bluff_attempts: int = 0
    bluff_successes: int = 0
    showdowns: int = 0

    @property
    def vpip_proxy(self) -> float:
        return _rate(self.vpip_hands, self.hands_seen)

    @property
    def pfr(self) -> float:
        return _rate(self.pfr_hands, self.hands_seen)

    @property
    def zero_calls(self) -> bool:
        return self.calls == 0

    @property
    def aggression_factor(self) -> float:
        # zero calls: capped at (bets + raises) / 1, flagged by ``zero_calls``
        return self.bets_raises / max(self.calls, 1)

    @property
    def fold_rate(self) -> float:
        return _rate(self.faced_folds, self.faced_decisions)

    @property
    def call_rate(self) -> float:
        return _rate(self.faced_calls, self.faced_decisions)

    @property
    def raise_rate(self) -> float:
        return _rate(self.faced_raises, self.faced_decisions)

    @property
    def call_to_fold_ratio(self) -> float:
        return self.faced_calls / max(self.faced_folds, 1)

    @property
    def bluff_attempt_rate(self) -> float:
        return _rate(self.bluff_attempts, self.bets_raises)

    @property
    def bluff_success_rate(self) -> float:
        return _rate(self.bluff_successes, self.bluff_attempts)

    @property
    def showdown_rate(self) -> float:
        return _rate(self.showdowns, self.hands_seen)

    def proxies(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in PROXIES}

    def to_dict(self) -> dict[str, int]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BehaviorStats":
        return cls(**{f.name: d[f.name] for f in fields(cls) if f.name in d})


PROXIES = (
    "vpip_proxy",
    "pfr",
    "aggression_factor",
    "fold_rate",
    "call_rate",
    "raise_rate",
    "call_to_fold_ratio",
    "bluff_attempt_rate",
    "bluff_success_rate",
    "showdown_rate",
)


def _rate(num: int, den: int) -> float:
    return num / den if den else 0.0


def update_behavior_stats(
    stats: BehaviorStats,
    hand: PlayerHandRecord,
    thresholds: FeatureThresholds = FeatureThresholds(),
) -> BehaviorStats:
    """Advance the counters by one resolved hand."""
    c = asdict(stats)
    c["hands_seen"] += 1
    voluntary = preflop_raise = False
    bluffed = 0
    for a in hand.actions:
        aggressive = a.kind == ActionKind.RAISE.value
        if aggressive:
            c["bets_raises"] += 1
            voluntary = True
            if a.street == "preflop":
                preflop_raise = True
            if a.street != "preflop":
                c["postflop_raises"] += 1
            if a.equity is not None and a.equity < thresholds.bluff_equity_below:
                bluffed += 1
        elif a.kind == ActionKind.CALL.value:
            if a.cost > 0:
                c["calls"] += 1
                voluntary = True
                if a.street != "preflop":
                    c["postflop_calls"] += 1
            else:
                c["checks"] += 1
        if a.faced_bet:
            c["faced_decisions"] += 1
            key = {"FOLD": "faced_folds", "CALL": "faced_calls", "RAISE": "faced_raises"}[a.kind]
            c[key] += 1
    c["vpip_hands"] += voluntary
    c["pfr_hands"] += preflop_raise
    c["bluff_attempts"] += bluffed
    if hand.won_without_showdown:
        c["bluff_successes"] += bluffed
    c["showdowns"] += hand.showdown
    return BehaviorStats(**c)


def windowed_delta(stats_now: BehaviorStats, stats_prev: BehaviorStats) -> BehaviorStats | None:
    """Counter differences over a window; ``None`` signals an empty window."""
    now, prev = asdict(stats_now), asdict(stats_prev)
    if any(now[k] < prev[k] for k in now):
        raise ValueError("stats_prev is not an earlier snapshot of stats_now")
    delta = BehaviorStats(**{k: now[k] - prev[k] for k in now})
    return None if delta.hands_seen == 0 else delta


def window_snapshots(history: list[BehaviorStats], k: int) -> Iterable[tuple[int, BehaviorStats]]:
    """Non-overlapping K-hand window deltas from a per-hand snapshot history.

    ``history[h]`` is the snapshot after hand ``h``; ``history`` may start
    with the pre-battle zero snapshot. Yields ``(end_index, delta)``.
    """
    for end in range(k, len(history), k):
        delta = windowed_delta(history[end], history[end - k])
        if delta is not None:
            yield end, delta
