from .cards import FULL_DECK, Card, InvalidCardsError, format_cards, parse_cards
from .equity import decision_equity, estimate_equity, exact_equity, street_simulations
from .evaluator import HandRank, evaluate_hand, evaluate_many
from .table import (
    STREETS,
    Action,
    ActionKind,
    LegalActionSet,
    ProtocolError,
    TableState,
    legal_actions,
    new_hand,
    next_button,
    normalize_action,
    side_pots,
    step,
)

__all__ = [
    "FULL_DECK",
    "STREETS",
    "Action",
    "ActionKind",
    "Card",
    "HandRank",
    "InvalidCardsError",
    "LegalActionSet",
    "ProtocolError",
    "TableState",
    "decision_equity",
    "estimate_equity",
    "evaluate_hand",
    "evaluate_many",
    "exact_equity",
    "format_cards",
    "legal_actions",
    "new_hand",
    "next_button",
    "normalize_action",
    "parse_cards",
    "side_pots",
    "step",
    "street_simulations",
]
