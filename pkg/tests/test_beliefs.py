import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holdem_xai.beliefs import (
    MAX_STEP,
    TRAITS,
    InterventionSpec,
    OpponentProfile,
    TraitVector,
    apply_bounded_update,
    intervene,
    logit,
    rank_desc,
    rank_profiles,
    shift_logit,
    sigmoid,
)

unit = st.floats(0.0, 1.0, allow_nan=False)


def test_intervention_reference_value():
    # sigmoid(logit(0.5) + 2.5) = 1 / (1 + e^-2.5)
    value, flagged = shift_logit(0.5, 2.5)
    assert value == pytest.approx(1 / (1 + math.exp(-2.5)), abs=1e-15)
    assert round(value, 4) == 0.9241 and not flagged


def test_up_then_down_is_identity_on_interior_grid():
    for p in np.arange(1, 100) / 100:
        up, _ = shift_logit(p, 2.5)
        back, _ = shift_logit(up, -2.5)
        assert abs(back - p) < 1e-12


def test_boundary_rule_flags_and_stays_inside():
    v, flagged = shift_logit(1.0, 2.5)
    assert flagged and 0.0 < v < 1.0
    v, flagged = shift_logit(0.0, -2.5)
    assert flagged and 0.0 < v < 1.0


def test_zero_delta_is_identity():
    for p in (0.01, 0.3, 0.77):
        assert shift_logit(p, 0.0)[0] == pytest.approx(p, abs=1e-15)


def test_intervene_touches_one_trait():
    tv = TraitVector(0.2, 0.5, 0.3, 0.4, 0.6)
    out, _ = intervene(tv, InterventionSpec("aggressiveness", "up", 2.5))
    assert out.aggressiveness == pytest.approx(0.9241, abs=1e-4)
    for t in TRAITS:
        if t != "aggressiveness":
            assert out.get(t) == tv.get(t)


def test_spec_validation():
    with pytest.raises(ValueError):
        InterventionSpec("patience", "up")
    with pytest.raises(ValueError):
        InterventionSpec("aggressiveness", "sideways")
    with pytest.raises(ValueError):
        InterventionSpec("aggressiveness", "up", -1.0)


@settings(max_examples=300)
@given(st.floats(1e-6, 1 - 1e-6), st.floats(0.0, 6.0))
def test_intervention_monotone(p, delta):
    up, _ = shift_logit(p, delta)
    down, _ = shift_logit(p, -delta)
    assert down <= p + 1e-15 and up >= p - 1e-15


def test_logit_sigmoid_inverse():
    for p in (1e-6, 0.1, 0.5, 0.9, 1 - 1e-6):
        assert sigmoid(logit(p)) == pytest.approx(p, rel=1e-9)
    assert sigmoid(-800.0) == 0.0 and sigmoid(800.0) == 1.0


def test_bounded_update_moves_at_most_step():
    prof = OpponentProfile("P1")
    out = apply_bounded_update(prof, {"aggressiveness": 0.9, "risk_tolerance": 0.48}, hand_index=3)
    assert out.traits.aggressiveness == pytest.approx(0.55)
    assert out.traits.risk_tolerance == pytest.approx(0.48)
    assert out.traits.bluff_frequency == 0.5
    assert out.updated_at_hand == 3 and out.history == (prof.traits,)


@settings(max_examples=1000)
@given(st.lists(unit, min_size=5, max_size=5), st.lists(st.one_of(unit, st.none()), min_size=5, max_size=5))
def test_bounded_update_property(prior, proposed):
    prof = OpponentProfile("P", TraitVector(*prior))
    out = apply_bounded_update(prof, dict(zip(TRAITS, proposed)), 1)
    for t, p0, q in zip(TRAITS, prior, proposed):
        after = out.traits.get(t)
        assert 0.0 <= after <= 1.0
        assert abs(after - p0) <= MAX_STEP + 1e-12
        if q is None:
            assert after == p0


def test_trait_vector_rejects_out_of_range():
    with pytest.raises(ValueError):
        TraitVector(risk_tolerance=1.2)
    with pytest.raises(ValueError):
        TraitVector(aggressiveness=float("nan"))


def test_profile_roundtrip():
    prof = OpponentProfile("P2", TraitVector(0.1, 0.2, 0.3, 0.4, 0.5), "tight", "few hands", 7)
    assert OpponentProfile.from_dict(prof.to_dict()) == prof


def test_rank_desc_ties_average():
    assert rank_desc([0.9, 0.1, 0.5]).tolist() == [1.0, 3.0, 2.0]
    assert rank_desc([0.5, 0.5, 0.1]).tolist() == [1.5, 1.5, 3.0]


def test_rank_profiles_by_trait():
    profs = [OpponentProfile(n, TraitVector(aggressiveness=v)) for n, v in [("A", 0.2), ("B", 0.8), ("C", 0.5)]]
    assert rank_profiles(profs, "aggressiveness") == {"A": 3.0, "B": 1.0, "C": 2.0}
