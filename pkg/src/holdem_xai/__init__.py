"""Auditable language-model agents for no-limit Texas Hold'em.

Play mixed tables of model agents and rule-based archetypes, record every
decision with its self-explanation and opponent beliefs, audit those traces
with rules and oracle models, and measure how decisions respond to belief
interventions.
"""

__version__ = "0.1.0"
