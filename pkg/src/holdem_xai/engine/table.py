"""No-limit hold'em betting state machine.

Raise amounts use "raise to" semantics: ``Action.raise_to(120)`` means the
seat's total commitment on the current street becomes 120 chips.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .cards import FULL_DECK, Card
from .evaluator import evaluate_many

STREETS = ("preflop", "flop", "turn", "river")
BOARD_SIZE = {"preflop": 0, "flop": 3, "turn": 4, "river": 5}


class ProtocolError(RuntimeError):
    """An action was submitted out of turn or after the hand ended."""


class ActionKind(str, Enum):
    FOLD = "FOLD"
    CALL = "CALL"
    CHECK = "CHECK"
    RAISE = "RAISE"


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    amount: int | None = None

    def __post_init__(self) -> None:
        kind = ActionKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if (kind is ActionKind.RAISE) != (self.amount is not None):
            raise ValueError(f"amount must be given iff kind is RAISE: {kind.value} {self.amount}")

    @classmethod
    def fold(cls) -> "Action":
        return cls(ActionKind.FOLD)

    @classmethod
    def call(cls) -> "Action":
        return cls(ActionKind.CALL)

    @classmethod
    def check(cls) -> "Action":
        return cls(ActionKind.CHECK)

    @classmethod
    def raise_to(cls, amount: int) -> "Action":
        return cls(ActionKind.RAISE, int(amount))

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "amount": self.amount}

    @classmethod
    def from_dict(cls, d: dict) -> "Action":
        return cls(ActionKind(d["kind"]), d.get("amount"))

    def __str__(self) -> str:
        return self.kind.value if self.amount is None else f"{self.kind.value} {self.amount}"


@dataclass(frozen=True)
class LegalActionSet:
    can_fold: bool
    call_amount: int
    min_raise: int
    max_raise: int
    raise_available: bool

    def to_dict(self) -> dict:
        return {
            "can_fold": self.can_fold,
            "call_amount": self.call_amount,
            "min_raise": self.min_raise,
            "max_raise": self.max_raise,
            "raise_available": self.raise_available,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LegalActionSet":
        return cls(**d)


def normalize_action(proposed: Action, legal: LegalActionSet) -> Action:
    """Map an agent's proposal onto an engine-legal action.

    CHECK costs nothing when no bet is faced and becomes a zero-cost CALL;
    facing a bet it is illegal and downgraded to FOLD. RAISE is clipped into
    the legal interval, or becomes CALL when raising is unavailable.
    """
    kind = proposed.kind
    if kind is ActionKind.CHECK:
        return Action.call() if legal.call_amount == 0 else Action.fold()
    if kind is ActionKind.RAISE:
        if not legal.raise_available:
            return Action.call()
        return Action.raise_to(min(max(proposed.amount, legal.min_raise), legal.max_raise))
    return Action(kind)


@dataclass
class TableState:
    street: str
    pot: int
    board: list[Card]
    stacks: list[int]
    committed: list[int]
    street_committed: list[int]
    current_bet: int
    history: list[tuple[int, Action, str]]
    hole: list[tuple[Card, Card] | None]
    folded: list[bool]
    dealt_in: list[bool]
    button: int
    small_blind: int
    big_blind: int
    deck: list[Card]
    to_act: int | None = None
    last_raise: int = 0
    pending: list[bool] = field(default_factory=list)
    acted_since_full_raise: list[bool] = field(default_factory=list)
    finished: bool = False
    showdown: bool = False
    payouts: list[int] | None = None
    final_committed: list[int] | None = None
    hand_scores: dict[int, int] | None = None

    @property
    def n_seats(self) -> int:
        return len(self.stacks)

    def all_in(self, seat: int) -> bool:
        return self.dealt_in[seat] and not self.folded[seat] and self.stacks[seat] == 0

    def live(self, seat: int) -> bool:
        """Seat is still contesting the pot."""
        return self.dealt_in[seat] and not self.folded[seat]

    def can_act(self, seat: int) -> bool:
        return self.live(seat) and self.stacks[seat] > 0

    def clone(self) -> "TableState":
        return replace(
            self,
            board=list(self.board),
            stacks=list(self.stacks),
            committed=list(self.committed),
            street_committed=list(self.street_committed),
            history=list(self.history),
            hole=list(self.hole),
            folded=list(self.folded),
            dealt_in=list(self.dealt_in),
            deck=list(self.deck),
            pending=list(self.pending),
            acted_since_full_raise=list(self.acted_since_full_raise),
            payouts=None if self.payouts is None else list(self.payouts),
            final_committed=None if self.final_committed is None else list(self.final_committed),
            hand_scores=None if self.hand_scores is None else dict(self.hand_scores),
        )


def _next_seat(state: TableState, seat: int, pred) -> int | None:
    n = state.n_seats
    for k in range(1, n + 1):
        s = (seat + k) % n
        if pred(s):
            return s
    return None


def blind_seats(stacks: Sequence[int], button: int) -> tuple[int, int]:
    """Small and big blind seats for a given button among funded seats."""
    n = len(stacks)
    funded = [s for s in range(n) if stacks[s] > 0]
    if len(funded) < 2:
        raise ProtocolError("need at least two funded seats")
    order = [(button + k) % n for k in range(1, n + 1) if stacks[(button + k) % n] > 0]
    if len(funded) == 2:
        sb = button if stacks[button] > 0 else order[0]
        bb = next(s for s in order if s != sb)
        return sb, bb
    return order[0], order[1]


def next_button(stacks: Sequence[int], button: int) -> int:
    n = len(stacks)
    for k in range(1, n + 1):
        s = (button + k) % n
        if stacks[s] > 0:
            return s
    raise ProtocolError("no funded seats")


def new_hand(
    stacks: Sequence[int],
    button: int,
    small_blind: int,
    big_blind: int,
    rng: np.random.Generator,
) -> TableState:
    """Shuffle, deal hole cards to funded seats and post blinds."""
    n = len(stacks)
    deck = [FULL_DECK[i] for i in rng.permutation(52)]
    dealt_in = [s > 0 for s in stacks]
    hole: list[tuple[Card, Card] | None] = [None] * n
    order = [(button + k) % n for k in range(1, n + 1)]
    for s in order:
        if dealt_in[s]:
            hole[s] = (deck.pop(0), deck.pop(0))
    state = TableState(
        street="preflop",
        pot=0,
        board=[],
        stacks=list(stacks),
        committed=[0] * n,
        street_committed=[0] * n,
        current_bet=0,
        history=[],
        hole=hole,
        folded=[False] * n,
        dealt_in=dealt_in,
        button=button,
        small_blind=small_blind,
        big_blind=big_blind,
        deck=deck,
        last_raise=big_blind,
    )
    sb, bb = blind_seats(stacks, button)
    _put(state, sb, min(small_blind, state.stacks[sb]))
    _put(state, bb, min(big_blind, state.stacks[bb]))
    state.current_bet = max(state.street_committed)
    state.pending = [state.can_act(s) for s in range(n)]
    state.acted_since_full_raise = [False] * n
    _after_action(state, bb)
    return state


def _put(state: TableState, seat: int, chips: int) -> None:
    state.stacks[seat] -= chips
    state.committed[seat] += chips
    state.street_committed[seat] += chips
    state.pot += chips


def legal_actions(state: TableState) -> LegalActionSet:
    seat = state.to_act
    if seat is None:
        raise ProtocolError("no seat is due to act")
    stack = state.stacks[seat]
    owed = state.current_bet - state.street_committed[seat]
    call_amount = min(owed, stack)
    all_in_to = state.street_committed[seat] + stack
    others_can_respond = any(
        state.can_act(s) for s in range(state.n_seats) if s != seat
    )
    raise_available = (
        stack > call_amount and others_can_respond and not state.acted_since_full_raise[seat]
    )
    min_raise = min(state.current_bet + state.last_raise, all_in_to)
    return LegalActionSet(
        can_fold=True,
        call_amount=call_amount,
        min_raise=min_raise if raise_available else 0,
        max_raise=all_in_to if raise_available else 0,
        raise_available=raise_available,
    )


def step(state: TableState, seat: int, action: Action) -> TableState:
    """Apply an already-normalized action and return the successor state."""
    if state.finished:
        raise ProtocolError("hand is over")
    if seat != state.to_act:
        raise ProtocolError(f"seat {seat} acted out of turn (seat {state.to_act} is due)")
    legal = legal_actions(state)
    s = state.clone()
    kind = action.kind
    if kind is ActionKind.CHECK:
        if legal.call_amount:
            raise ProtocolError("CHECK facing a bet; normalize first")
        kind = ActionKind.CALL
    if kind is ActionKind.FOLD:
        s.folded[seat] = True
    elif kind is ActionKind.CALL:
        _put(s, seat, legal.call_amount)
    else:
        if not legal.raise_available or not legal.min_raise <= action.amount <= legal.max_raise:
            raise ProtocolError(f"illegal raise {action.amount} with {legal}")
        increment = action.amount - s.current_bet
        _put(s, seat, action.amount - s.street_committed[seat])
        full = increment >= s.last_raise
        if full:
            s.last_raise = increment
            s.acted_since_full_raise = [False] * s.n_seats
        s.current_bet = action.amount
        for other in range(s.n_seats):
            if other != seat and s.can_act(other):
                s.pending[other] = True
    s.pending[seat] = False
    s.acted_since_full_raise[seat] = True
    s.history.append((seat, Action(kind, action.amount), s.street))
    _after_action(s, seat)
    return s


def _after_action(s: TableState, last_seat: int) -> None:
    """Pick the next actor, closing streets and resolving the hand as needed."""
    live = [p for p in range(s.n_seats) if s.live(p)]
    if len(live) == 1:
        _award_uncontested(s, live[0])
        return
    for p in range(s.n_seats):
        # a lone actor who has matched the bet has nobody left to play against
        if s.pending[p] and s.street_committed[p] >= s.current_bet:
            if not any(s.can_act(o) for o in range(s.n_seats) if o != p):
                s.pending[p] = False
    nxt = _next_seat(s, last_seat, lambda p: s.pending[p] and s.can_act(p))
    if nxt is not None:
        s.to_act = nxt
        return
    _close_street(s)


def _close_street(s: TableState) -> None:
    actors = [p for p in range(s.n_seats) if s.can_act(p)]
    if s.street == "river" or len(actors) <= 1:
        while len(s.board) < 5:
            s.board.append(s.deck.pop(0))
        s.street = "river"
        _showdown(s)
        return
    s.street = STREETS[STREETS.index(s.street) + 1]
    while len(s.board) < BOARD_SIZE[s.street]:
        s.board.append(s.deck.pop(0))
    s.street_committed = [0] * s.n_seats
    s.current_bet = 0
    s.last_raise = s.big_blind
    s.acted_since_full_raise = [False] * s.n_seats
    s.pending = [s.can_act(p) for p in range(s.n_seats)]
    first = _next_seat(s, s.button, lambda p: s.pending[p])
    s.to_act = first
    if first is None:
        _close_street(s)


def side_pots(committed: Sequence[int], eligible: Sequence[bool]) -> list[tuple[int, list[int]]]:
    """Split contributions into (amount, eligible seats) pots, main pot first.

    A slice whose contributors have all folded is merged into the previous pot.
    """
    levels = sorted({c for c in committed if c > 0})
    pots: list[tuple[int, list[int]]] = []
    prev = 0
    for level in levels:
        amount = sum(min(c, level) - min(c, prev) for c in committed)
        seats = [p for p, c in enumerate(committed) if c >= level and eligible[p]]
        if not seats and pots:
            pots[-1] = (pots[-1][0] + amount, pots[-1][1])
        elif pots and seats == pots[-1][1]:
            pots[-1] = (pots[-1][0] + amount, seats)
        else:
            pots.append((amount, seats))
        prev = level
    return pots


def _finish(s: TableState, payouts: list[int], showdown: bool) -> None:
    s.final_committed = list(s.committed)
    for p, w in enumerate(payouts):
        s.stacks[p] += w
    s.payouts = payouts
    s.pot = 0
    s.committed = [0] * s.n_seats
    s.street_committed = [0] * s.n_seats
    s.showdown = showdown
    s.finished = True
    s.to_act = None
    s.pending = [False] * s.n_seats


def _award_uncontested(s: TableState, winner: int) -> None:
    payouts = [0] * s.n_seats
    payouts[winner] = s.pot
    _finish(s, payouts, showdown=False)


def _showdown(s: TableState) -> None:
    live = [p for p in range(s.n_seats) if s.live(p)]
    board = [c.index for c in s.board]
    scores = dict(zip(live, evaluate_many(np.array([[c.index for c in s.hole[p]] + board for p in live])).tolist()))
    payouts = [0] * s.n_seats
    # odd chips go to winners in seat order starting left of the button
    order = [(s.button + k) % s.n_seats for k in range(1, s.n_seats + 1)]
    for amount, seats in side_pots(s.committed, [s.live(p) for p in range(s.n_seats)]):
        best = max(scores[p] for p in seats)
        winners = [p for p in order if p in seats and scores[p] == best]
        share, odd = divmod(amount, len(winners))
        for i, p in enumerate(winners):
            payouts[p] += share + (1 if i < odd else 0)
    s.hand_scores = scores
    _finish(s, payouts, showdown=len(live) > 1)
