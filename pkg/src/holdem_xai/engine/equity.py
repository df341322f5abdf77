"""Monte Carlo and exact equity against uniformly random opponent holdings.

Equity is the expected share of the pot at showdown: a k-way tie for the
best hand credits each tied player 1/k.
"""

from __future__ import annotations

from itertools import combinations
from typing import Sequence

import numpy as np

from .cards import Card, InvalidCardsError, check_distinct, remaining_deck
from .evaluator import evaluate_many


def _validate(hole: Sequence[Card], board: Sequence[Card], n_opponents: int) -> np.ndarray:
    if len(hole) != 2:
        raise InvalidCardsError("hole must be exactly two cards")
    if len(board) not in (0, 3, 4, 5):
        raise InvalidCardsError(f"board must hold 0, 3, 4 or 5 cards, got {len(board)}")
    if n_opponents < 1:
        raise InvalidCardsError("need at least one opponent")
    check_distinct([*hole, *board])
    deck = np.array([c.index for c in remaining_deck([*hole, *board])], dtype=np.int64)
    need = (5 - len(board)) + 2 * n_opponents
    if need > len(deck):
        raise InvalidCardsError(f"{n_opponents} opponents need {need} cards, only {len(deck)} remain")
    return deck


def _showdown_credit(hero: np.ndarray, opps: np.ndarray) -> np.ndarray:
    """Per-row pot share of the hero given hero scores (N,) and opponents (N, m)."""
    best = opps.max(axis=1)
    ties = (opps == hero[:, None]).sum(axis=1)
    return np.where(hero > best, 1.0, np.where(hero == best, 1.0 / (1 + ties), 0.0))


def estimate_equity(
    hole: Sequence[Card],
    board: Sequence[Card],
    n_opponents: int,
    n_sims: int,
    rng: np.random.Generator,
) -> float:
    """Monte Carlo equity of ``hole`` on ``board`` against random hands."""
    if n_sims < 1:
        raise InvalidCardsError("n_sims must be >= 1")
    deck = _validate(hole, board, n_opponents)
    n_board = 5 - len(board)
    need = n_board + 2 * n_opponents
    order = np.argsort(rng.random((n_sims, len(deck))), axis=1)[:, :need]
    drawn = deck[order]
    known_board = np.array([c.index for c in board], dtype=np.int64)
    full_board = np.concatenate([np.broadcast_to(known_board, (n_sims, len(board))), drawn[:, :n_board]], axis=1)
    hole_idx = np.array([c.index for c in hole], dtype=np.int64)
    hero = evaluate_many(np.concatenate([np.broadcast_to(hole_idx, (n_sims, 2)), full_board], axis=1))
    opp_hands = []
    for k in range(n_opponents):
        opp_hole = drawn[:, n_board + 2 * k: n_board + 2 * k + 2]
        opp_hands.append(np.concatenate([opp_hole, full_board], axis=1))
    opp_scores = evaluate_many(np.concatenate(opp_hands, axis=0)).reshape(n_opponents, n_sims).T
    return float(_showdown_credit(hero, opp_scores).mean())


def exact_equity(hole: Sequence[Card], board: Sequence[Card]) -> float:
    """Heads-up equity by enumerating every opponent holding and runout.

    Supported from the flop onward (preflop enumeration is intractable here).
    """
    deck = _validate(hole, board, 1)
    if len(board) < 3:
        raise InvalidCardsError("exact enumeration needs at least a flop")
    n_board = 5 - len(board)
    known_board = [c.index for c in board]
    hole_idx = [c.index for c in hole]
    rows_hero, rows_opp = [], []
    for runout in combinations(deck.tolist(), n_board):
        full = known_board + list(runout)
        rest = [c for c in deck.tolist() if c not in runout]
        pairs = np.array(list(combinations(rest, 2)), dtype=np.int64)
        rows_opp.append(np.concatenate([pairs, np.broadcast_to(full, (len(pairs), 5))], axis=1))
        rows_hero.append(np.broadcast_to(hole_idx + full, (len(pairs), 7)))
    hero = evaluate_many(np.concatenate(rows_hero))
    opp = evaluate_many(np.concatenate(rows_opp))
    return float(_showdown_credit(hero, opp[:, None]).mean())


def street_simulations(street: str, n_sims: int, n_opponents: int) -> int | None:
    """Simulation budget per street; ``None`` means exact enumeration."""
    if street in ("preflop", "flop"):
        return n_sims
    if street == "river" and n_opponents == 1:
        return None
    return max(1, n_sims // 2)


def decision_equity(
    hole: Sequence[Card],
    board: Sequence[Card],
    n_opponents: int,
    n_sims: int,
    rng: np.random.Generator,
    street: str,
) -> float:
    """Equity with the per-street budget applied."""
    budget = street_simulations(street, n_sims, n_opponents)
    if budget is None:
        return exact_equity(hole, board)
    return estimate_equity(hole, board, n_opponents, budget, rng)


def preflop_class(hole: Sequence[Card]) -> tuple[int, int, bool]:
    """Suit-isomorphism class of a starting hand: (high rank, low rank, suited)."""
    a, b = sorted(hole, key=lambda c: c.rank, reverse=True)
    return a.rank, b.rank, a.suit == b.suit
