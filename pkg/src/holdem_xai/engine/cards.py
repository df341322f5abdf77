"""Card representation.

Cards are ordered by (rank, suit) with suits in the order clubs < diamonds <
hearts < spades. Internally each card also has a dense index in 0..51
(``(rank - 2) * 4 + suit``) which the vectorized evaluator works on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

RANK_CHARS = "23456789TJQKA"
SUIT_CHARS = "cdhs"
SUIT_NAMES = ("clubs", "diamonds", "hearts", "spades")


class InvalidCardsError(ValueError):
    """Raised for malformed, duplicated or impossible card inputs."""


@dataclass(frozen=True, order=True)
class Card:
    rank: int  # 2..14, ace high
    suit: int  # 0..3, see SUIT_NAMES

    def __post_init__(self) -> None:
        if not 2 <= self.rank <= 14 or not 0 <= self.suit <= 3:
            raise InvalidCardsError(f"no such card: rank={self.rank} suit={self.suit}")

    @property
    def index(self) -> int:
        return (self.rank - 2) * 4 + self.suit

    @classmethod
    def from_index(cls, index: int) -> "Card":
        return _BY_INDEX[index]

    @classmethod
    def parse(cls, text: str) -> "Card":
        text = text.strip()
        if len(text) != 2:
            raise InvalidCardsError(f"cannot parse card {text!r}")
        r, s = text[0].upper(), text[1].lower()
        if r not in RANK_CHARS or s not in SUIT_CHARS:
            raise InvalidCardsError(f"cannot parse card {text!r}")
        return _BY_INDEX[RANK_CHARS.index(r) * 4 + SUIT_CHARS.index(s)]

    def __str__(self) -> str:
        return RANK_CHARS[self.rank - 2] + SUIT_CHARS[self.suit]

    def __repr__(self) -> str:
        return f"Card({str(self)!r})"


_BY_INDEX = [object.__new__(Card) for _ in range(52)]
for _i, _c in enumerate(_BY_INDEX):
    object.__setattr__(_c, "rank", _i // 4 + 2)
    object.__setattr__(_c, "suit", _i % 4)

FULL_DECK: tuple[Card, ...] = tuple(_BY_INDEX)


def parse_cards(text: str | Iterable[str]) -> list[Card]:
    """Parse ``"As Kd 7c"`` (or ``"AsKd7c"``, or an iterable of tokens)."""
    if isinstance(text, str):
        compact = text.replace(",", " ").replace(" ", "")
        if len(compact) % 2:
            raise InvalidCardsError(f"cannot parse cards {text!r}")
        tokens = [compact[i:i + 2] for i in range(0, len(compact), 2)]
    else:
        tokens = list(text)
    return [Card.parse(t) for t in tokens]


def format_cards(cards: Sequence[Card]) -> str:
    return " ".join(str(c) for c in cards) if cards else "none"


def check_distinct(cards: Sequence[Card]) -> None:
    if len(set(cards)) != len(cards):
        raise InvalidCardsError(f"duplicate cards in {format_cards(cards)}")


def remaining_deck(exclude: Iterable[Card]) -> list[Card]:
    dead = set(exclude)
    return [c for c in FULL_DECK if c not in dead]
