import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holdem_xai.baselines import (
    ARCHETYPE_SPECS,
    ARCHETYPES,
    REFERENCE_SIMULATION,
    REFERENCE_TRAITS,
    archetype_decide,
    classify,
    field_strength,
    ground_truth_traits,
)
from holdem_xai.beliefs import TRAITS
from holdem_xai.engine import LegalActionSet
from holdem_xai.features import (
    ActionObservation,
    BehaviorStats,
    PlayerHandRecord,
    ReferenceFeatures,
    compute_features,
    pot_odds,
    strength_bucket,
    update_behavior_stats,
    window_snapshots,
    windowed_delta,
)

# ----------------------------------------------------------- decision features


def test_pot_odds_definition():
    assert pot_odds(0, 100) == 0.0
    assert pot_odds(50, 100) == pytest.approx(50 / 150)
    assert pot_odds(100, 100) == pytest.approx(0.5)


@settings(max_examples=200)
@given(st.integers(0, 10_000), st.integers(1, 10_000))
def test_pot_odds_bounded(call, pot):
    assert 0.0 <= pot_odds(call, pot) < 1.0


@pytest.mark.parametrize("eq,bucket", [(0.0, "weak"), (0.3999, "weak"), (0.40, "medium"), (0.6499, "medium"),
                                       (0.65, "strong"), (1.0, "strong")])
def test_strength_bucket_edges(eq, bucket):
    assert strength_bucket(eq) == bucket


def test_compute_features_risk_flags():
    f = compute_features(pot=200, call_amount=0, stack=1000, equity=0.7, raise_chips=160)
    assert f.raise_over_pot == pytest.approx(0.8) and f.high_risk
    f = compute_features(pot=200, call_amount=0, stack=1000, equity=0.7, raise_chips=100)
    assert not f.high_risk
    f = compute_features(pot=2000, call_amount=0, stack=400, equity=0.7, raise_chips=100)
    assert f.raise_over_stack == pytest.approx(0.25) and f.high_risk
    assert f.spr == pytest.approx(0.2)


def test_features_roundtrip_with_infinite_spr():
    f = compute_features(pot=0, call_amount=0, stack=100, equity=0.5)
    assert math.isinf(f.spr)
    d = f.to_dict()
    assert d["spr"] == "inf"
    assert ReferenceFeatures.from_dict(d) == f


# ---------------------------------------------------------------- counters

def obs(street, kind, cost=0, faced=False, equity=None):
    return ActionObservation(street, kind, cost, faced, equity)


def test_update_counts_one_hand():
    hand = PlayerHandRecord(
        actions=(
            obs("preflop", "CALL", 10, True),
            obs("flop", "CALL", 0, False),
            obs("turn", "RAISE", 80, False, equity=0.2),
            obs("river", "FOLD", 0, True),
        ),
        showdown=False,
        won_without_showdown=False,
    )
    s = update_behavior_stats(BehaviorStats(), hand)
    assert s.hands_seen == 1 and s.vpip_hands == 1 and s.pfr_hands == 0
    assert s.calls == 1 and s.checks == 1 and s.bets_raises == 1
    assert s.faced_decisions == 2 and s.faced_calls == 1 and s.faced_folds == 1
    assert s.bluff_attempts == 1 and s.bluff_successes == 0
    assert s.aggression_factor == 1.0 and s.fold_rate == 0.5


def test_check_only_hand_is_not_voluntary():
    hand = PlayerHandRecord((obs("preflop", "CALL", 0, False),), showdown=True, won_without_showdown=False)
    s = update_behavior_stats(BehaviorStats(), hand)
    assert s.vpip_hands == 0 and s.checks == 1 and s.showdown_rate == 1.0


def test_zero_call_aggression_factor_is_capped_and_flagged():
    s = BehaviorStats(bets_raises=4, calls=0)
    assert s.zero_calls and s.aggression_factor == 4.0


def test_rates_are_zero_on_empty_denominators():
    s = BehaviorStats()
    assert all(v == 0.0 for v in s.proxies().values())


def test_windowed_delta_and_snapshots():
    a = BehaviorStats(hands_seen=5, calls=3)
    b = BehaviorStats(hands_seen=9, calls=4, bets_raises=2)
    d = windowed_delta(b, a)
    assert d.hands_seen == 4 and d.calls == 1 and d.bets_raises == 2
    assert windowed_delta(a, a) is None
    with pytest.raises(ValueError):
        windowed_delta(a, b)
    history = [BehaviorStats(hands_seen=h) for h in range(11)]
    assert [end for end, _ in window_snapshots(history, 5)] == [5, 10]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(st.tuples(st.sampled_from(["FOLD", "CALL", "RAISE"]), st.integers(0, 50), st.booleans()),
                         min_size=1, max_size=5), min_size=1, max_size=15))
def test_counter_invariants(hands):
    s = BehaviorStats()
    for acts in hands:
        rec = PlayerHandRecord(tuple(obs("flop", k, c, f, 0.5) for k, c, f in acts), showdown=False,
                               won_without_showdown=False)
        s = update_behavior_stats(s, rec)
    assert s.hands_seen == len(hands)
    assert s.vpip_hands <= s.hands_seen and s.pfr_hands <= s.vpip_hands
    assert s.faced_folds + s.faced_calls + s.faced_raises == s.faced_decisions
    for name, v in s.proxies().items():
        assert v >= 0.0
        if name.endswith("rate") or name in ("vpip_proxy", "pfr"):
            assert v <= 1.0


# -------------------------------------------------------------- archetypes

def features(equity, call=10, pot=30, stack=1000, n_opp=1):
    return compute_features(pot, call, stack, equity, n_opp)


def test_field_strength_scales_with_table_size():
    assert field_strength(0.5, 1) == 0.5
    assert field_strength(0.2, 4) == pytest.approx(0.5)
    assert field_strength(0.9, 5) == 1.0


def test_classify_monotone_in_equity():
    order = {"weak": 0, "medium": 1, "strong": 2, "nuts": 3}
    for spec in ARCHETYPE_SPECS.values():
        for street in ("preflop", "river"):
            classes = [order[classify(spec, features(e / 100), street)] for e in range(101)]
            assert classes == sorted(classes)


def test_archetype_actions_are_legal():
    rng = np.random.default_rng(0)
    legal = LegalActionSet(True, 10, 40, 1000, True)
    for spec in ARCHETYPE_SPECS.values():
        for e in np.linspace(0, 1, 21):
            a = archetype_decide(spec, features(float(e)), legal, rng, "flop")
            if a.kind.value == "RAISE":
                assert legal.min_raise <= a.amount <= legal.max_raise


def test_archetype_never_folds_for_free():
    rng = np.random.default_rng(1)
    legal = LegalActionSet(True, 0, 10, 1000, True)
    for spec in ARCHETYPE_SPECS.values():
        for _ in range(200):
            assert archetype_decide(spec, features(0.05, call=0), legal, rng).kind.value != "FOLD"


def test_raise_mass_folds_into_call_when_unavailable():
    rng = np.random.default_rng(2)
    legal = LegalActionSet(True, 10, 0, 0, False)
    kinds = {archetype_decide(ARCHETYPE_SPECS["Maniac"], features(0.95), legal, rng).kind.value for _ in range(200)}
    assert kinds == {"CALL"}


def test_reference_traits_cover_every_archetype_and_trait():
    assert set(REFERENCE_TRAITS.values) == set(ARCHETYPES)
    for a in ARCHETYPES:
        assert set(REFERENCE_TRAITS.values[a]) == set(TRAITS)
        assert all(0.0 <= v <= 1.0 for v in REFERENCE_TRAITS.values[a].values())


def test_reference_orderings_match_archetype_design():
    ref = REFERENCE_TRAITS.values
    agg = {a: ref[a]["aggressiveness"] for a in ARCHETYPES}
    assert agg["Maniac"] > agg["LooseAggressive"] > agg["TightAggressive"] > max(agg["TightPassive"], agg["LoosePassive"])
    loose = min(ref[a]["risk_tolerance"] for a in ("LoosePassive", "LooseAggressive", "Maniac"))
    tight = max(ref[a]["risk_tolerance"] for a in ("TightPassive", "TightAggressive"))
    assert loose > tight


def test_ground_truth_maps_into_unit_interval():
    t = ground_truth_traits(BehaviorStats(hands_seen=10, vpip_hands=4, faced_decisions=10, faced_calls=6,
                                          faced_folds=2, faced_raises=2, bets_raises=2, bluff_attempts=1, showdowns=3))
    assert t["calling_station_tendency"] == pytest.approx(3 / 4)
    assert t["risk_tolerance"] == pytest.approx(0.4)
    assert t["aggressiveness"] == pytest.approx(0.2)
    assert t["bluff_frequency"] == pytest.approx(0.5)
    assert t["showdown_propensity"] == pytest.approx(0.3)


@pytest.mark.slow
def test_reference_traits_regenerate():
    from holdem_xai.runner import simulate_archetype_stats

    totals = simulate_archetype_stats(**REFERENCE_SIMULATION)
    for a in ARCHETYPES:
        got = ground_truth_traits(totals[a])
        for t in TRAITS:
            assert round(got[t], 4) == pytest.approx(REFERENCE_TRAITS.values[a][t], abs=1e-9)
