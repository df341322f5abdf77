"""Vectorized best-5-of-N hand evaluation.

Scores are packed integers ``category << 20 | r1 << 16 | ... | r5`` where the
five nibbles hold the tie-break ranks (0 = deuce .. 12 = ace) in priority
order. A larger score is a strictly better hand; equal scores split.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cards import Card, InvalidCardsError, check_distinct

CATEGORY_NAMES = (
    "high_card",
    "pair",
    "two_pair",
    "three_of_a_kind",
    "straight",
    "flush",
    "full_house",
    "four_of_a_kind",
    "straight_flush",
)

_N_MASKS = 1 << 13


def _build_tables():
    popcount = np.zeros(_N_MASKS, dtype=np.int64)
    highbit = np.full(_N_MASKS, -1, dtype=np.int64)
    straight_top = np.full(_N_MASKS, -1, dtype=np.int64)
    top5 = np.zeros((_N_MASKS, 5), dtype=np.int64)
    for m in range(_N_MASKS):
        bits = [r for r in range(12, -1, -1) if m >> r & 1]
        popcount[m] = len(bits)
        if bits:
            highbit[m] = bits[0]
        for j, r in enumerate(bits[:5]):
            top5[m, j] = r
        for top in range(12, 3, -1):
            window = 0b11111 << (top - 4)
            if m & window == window:
                straight_top[m] = top
                break
        else:
            if m & 0b1000000001111 == 0b1000000001111:  # A-2-3-4-5
                straight_top[m] = 3
    return popcount, highbit, straight_top, top5


_POPCOUNT, _HIGHBIT, _STRAIGHT_TOP, _TOP5 = _build_tables()
_RANK_BITS = (1 << np.arange(13)).astype(np.int64)


def _pack(cat, n1=0, n2=0, n3=0, n4=0, n5=0):
    return (cat << 20) | (n1 << 16) | (n2 << 12) | (n3 << 8) | (n4 << 4) | n5


def _evaluate_direct(cards: np.ndarray) -> np.ndarray:
    """Category-by-category scoring; used to build the lookup tables."""
    n = cards.shape[0]
    ranks = cards >> 2
    suits = cards & 3
    rbits = np.left_shift(1, ranks)

    presence = np.bitwise_or.reduce(rbits, axis=1)
    counts = np.zeros((n, 13), dtype=np.int64)
    rows = np.arange(n)
    for j in range(cards.shape[1]):
        counts[rows, ranks[:, j]] += 1
    mask2 = (counts == 2) @ _RANK_BITS
    mask3 = (counts == 3) @ _RANK_BITS
    mask4 = (counts == 4) @ _RANK_BITS

    flush_mask = np.zeros(n, dtype=np.int64)
    for s in range(4):
        m = np.bitwise_or.reduce(np.where(suits == s, rbits, 0), axis=1)
        flush_mask = np.where(_POPCOUNT[m] >= 5, m, flush_mask)
    has_flush = flush_mask != 0

    # straight flush
    sf_top = np.where(has_flush, _STRAIGHT_TOP[flush_mask], -1)
    s_sf = _pack(8, np.maximum(sf_top, 0))

    # quads
    q = _HIGHBIT[mask4]
    qk = _HIGHBIT[presence & ~np.left_shift(1, np.maximum(q, 0))]
    s_quads = _pack(7, np.maximum(q, 0), np.maximum(qk, 0))

    # full house: best trips plus best other pair-or-better
    t = _HIGHBIT[mask3]
    tbit = np.left_shift(1, np.maximum(t, 0))
    fh_pair = _HIGHBIT[(mask3 & ~tbit) | mask2]
    s_fh = _pack(6, np.maximum(t, 0), np.maximum(fh_pair, 0))

    ft = _TOP5[flush_mask]
    s_flush = _pack(5, ft[:, 0], ft[:, 1], ft[:, 2], ft[:, 3], ft[:, 4])

    st = _STRAIGHT_TOP[presence]
    s_straight = _pack(4, np.maximum(st, 0))

    tk = _TOP5[presence & ~tbit]
    s_trips = _pack(3, np.maximum(t, 0), tk[:, 0], tk[:, 1])

    p1 = _HIGHBIT[mask2]
    p1bit = np.left_shift(1, np.maximum(p1, 0))
    p2 = _HIGHBIT[mask2 & ~p1bit]
    p2bit = np.left_shift(1, np.maximum(p2, 0))
    tpk = _HIGHBIT[presence & ~p1bit & ~p2bit]
    s_two = _pack(2, np.maximum(p1, 0), np.maximum(p2, 0), np.maximum(tpk, 0))

    pk = _TOP5[presence & ~p1bit]
    s_pair = _pack(1, np.maximum(p1, 0), pk[:, 0], pk[:, 1], pk[:, 2])

    ht = _TOP5[presence]
    s_high = _pack(0, ht[:, 0], ht[:, 1], ht[:, 2], ht[:, 3], ht[:, 4])

    conditions = [
        sf_top >= 0,
        q >= 0,
        (t >= 0) & (fh_pair >= 0),
        has_flush,
        st >= 0,
        t >= 0,
        p2 >= 0,
        p1 >= 0,
    ]
    choices = [s_sf, s_quads, s_fh, s_flush, s_straight, s_trips, s_two, s_pair]
    return np.select(conditions, choices, default=s_high)


def _rank_multisets(size: int) -> np.ndarray:
    """All rank multisets of ``size`` cards (at most four of a rank), as sorted rank rows."""
    out = []

    def rec(start: int, left: int, acc: list[int]) -> None:
        if left == 0:
            out.append(list(acc))
            return
        for r in range(start, 13):
            if acc.count(r) < 4:
                acc.append(r)
                rec(r, left - 1, acc)
                acc.pop()

    rec(0, size, [])
    return np.array(out, dtype=np.int64)


_KEY_WEIGHTS = 5 ** np.arange(13, dtype=np.int64)


def _build_lookup():
    keys, scores = [], []
    for size in (5, 6, 7):
        ranks = _rank_multisets(size)
        # position i gets suit i % 4: repeated ranks sit next to each other so
        # their suits differ, and no suit gets five cards
        cards = ranks * 4 + (np.arange(size) % 4)
        keys.append(_KEY_WEIGHTS[ranks].sum(axis=1))
        scores.append(_evaluate_direct(cards))
    keys, scores = np.concatenate(keys), np.concatenate(scores)
    order = np.argsort(keys)
    masks = np.arange(_N_MASKS)
    flush = np.zeros(_N_MASKS, dtype=np.int64)
    five_plus = masks[_POPCOUNT >= 5]
    sf = _STRAIGHT_TOP[five_plus]
    t5 = _TOP5[five_plus]
    flush[five_plus] = np.where(
        sf >= 0,
        _pack(8, np.maximum(sf, 0)),
        _pack(5, t5[:, 0], t5[:, 1], t5[:, 2], t5[:, 3], t5[:, 4]),
    )
    return keys[order], scores[order], flush


_MULTISET_KEYS, _MULTISET_SCORES, _FLUSH_SCORES = _build_lookup()


def evaluate_many(cards: np.ndarray) -> np.ndarray:
    """Score each row of an ``(N, k)`` array of card indices, 5 <= k <= 7.

    Rows are assumed to hold distinct cards; use :func:`evaluate_hand` for
    validated single-hand evaluation. With at most seven cards a flush
    excludes quads and full houses, so a hand is scored either from its
    flush suit's rank mask or from its rank multiset alone.
    """
    cards = np.asarray(cards, dtype=np.int64)
    if cards.ndim != 2 or not 5 <= cards.shape[1] <= 7:
        raise InvalidCardsError(f"expected (N, 5..7) card array, got shape {cards.shape}")
    ranks = cards >> 2
    suits = cards & 3
    rbits = np.left_shift(1, ranks)
    flush_mask = np.zeros(cards.shape[0], dtype=np.int64)
    for s in range(4):
        m = np.bitwise_or.reduce(np.where(suits == s, rbits, 0), axis=1)
        flush_mask = np.where(_POPCOUNT[m] >= 5, m, flush_mask)
    key = _KEY_WEIGHTS[ranks].sum(axis=1)
    plain = _MULTISET_SCORES[np.searchsorted(_MULTISET_KEYS, key)]
    return np.where(flush_mask != 0, _FLUSH_SCORES[flush_mask], plain)


@dataclass(frozen=True, order=True)
class HandRank:
    score: int

    @property
    def category(self) -> str:
        return CATEGORY_NAMES[self.score >> 20]


def evaluate_hand(cards: Sequence[Card]) -> HandRank:
    """Rank the best five-card hand contained in 5 to 7 distinct cards."""
    if not 5 <= len(cards) <= 7:
        raise InvalidCardsError(f"need 5-7 cards, got {len(cards)}")
    check_distinct(cards)
    arr = np.array([[c.index for c in cards]], dtype=np.int64)
    return HandRank(int(evaluate_many(arr)[0]))
