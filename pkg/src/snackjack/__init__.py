"""Exact analysis of snackjack, an eight-card model of blackjack."""

from .core import Hand, Pack
from .solver import Action, RuleVariant, Solver, basic_strategy, overall_expectation

__all__ = ["Action", "Hand", "Pack", "RuleVariant", "Solver", "basic_strategy", "overall_expectation"]
