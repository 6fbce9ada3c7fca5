"""Shared comparison and data-loading helpers for the test modules."""

from __future__ import annotations

import csv
import math
from fractions import Fraction
from itertools import permutations
from pathlib import Path

from snackjack.core import CARDS, NATURAL, Hand, total, unit

DATA = Path(__file__).parent / "data"

# (criterion number, verdict line) pairs collected by the acceptance suite
ACCEPTANCE_LINES: list[tuple[int, str]] = []


def within_sig(value, published: float, digits: int) -> bool:
    """``value`` agrees with a figure printed to ``digits`` significant digits."""
    if published == 0:
        return abs(float(value)) < 10.0 ** (-digits)
    exp = math.floor(math.log10(abs(published)))
    return abs(float(value) - published) <= 0.5 * 10.0 ** (exp - digits + 1) * (1 + 1e-9)


def within_dp(value, published: float, places: int) -> bool:
    return abs(float(value) - published) <= 0.5 * 10.0 ** (-places) * (1 + 1e-9)


def load_single_deck_rows() -> list[dict]:
    with open(DATA / "single_deck_table.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def parse_hand(text: str) -> Hand:
    return Hand(*(int(ch) for ch in text))


def parse_value(text: str):
    return Fraction(text) if text else None


def formula_oracle(formula, post, policy) -> Fraction:
    """Exact solver value of a closed-form quantity at post-deal counts ``post``.

    The solver sees the full pack (post-deal counts plus the hand and upcard)
    and continues after a hit with the fixed ``policy``.
    """
    from snackjack.core import Pack, unit
    from snackjack.solver import Action, Solver

    full = Pack(*post).plus(formula.hand).plus(unit(formula.upcard))
    solver = Solver(full, policy=policy)
    names = {"stand": Action.STAND, "hit": Action.HIT, "double": Action.DOUBLE, "split": Action.SPLIT}
    parts = formula.quantity.split("-")
    value = solver.e_action(names[parts[0]], formula.hand, formula.upcard)
    if len(parts) == 2:
        value -= solver.e_action(names[parts[1]], formula.hand, formula.upcard)
    return value


def brute_force_single_deck(table) -> Fraction:
    """Average result over every distinct ordering of the single deck.

    Cards go to the player, the upcard, the player, the downcard, then in
    order to whoever draws.  Play follows ``table`` (first listed action on ties).
    """
    deck = (1, 1, 2, 2, 3, 3, 3, 3)
    orders = set(permutations(deck))

    def choose(hand, u):
        return table[(hand, u)].best_label().split("/")[0]

    def dealer_total(u, d, draw):
        cards = [u, d]
        while total(Hand(*(cards.count(c) for c in CARDS))).value < 6:
            cards.append(next(draw))
        return total(Hand(*(cards.count(c) for c in CARDS))).value

    def settle(player_totals, bets, u, d, draw):
        dt = dealer_total(u, d, draw)
        out = 0
        for pt, bet in zip(player_totals, bets):
            if pt > 7:
                out -= bet
            elif dt > 7 or pt > dt:
                out += bet
            elif pt < dt:
                out -= bet
        return out

    result = Fraction(0)
    for order in orders:
        p1, u, p2, d = order[:4]
        draw = iter(order[4:])
        hand = unit(p1).add(p2)
        dealer_natural = {u, d} == {1, 3}
        if dealer_natural:
            result += 0 if hand == NATURAL else -1
            continue
        if hand == NATURAL:
            result += Fraction(3, 2)
            continue
        act = choose(hand, u)
        if act == "Spl":
            i = p1
            h1 = unit(i).add(next(draw))
            h2 = unit(i).add(next(draw))
            result += settle([total(h1).value, total(h2).value], [1, 1], u, d, draw)
        elif act == "D":
            hand = hand.add(next(draw))
            result += settle([total(hand).value], [2], u, d, draw)
        else:
            while act == "H":
                hand = hand.add(next(draw))
                if total(hand).value > 7:
                    break
                act = choose(hand, u)
            if total(hand).value > 7:
                result -= 1
            else:
                result += settle([total(hand).value], [1], u, d, draw)
    return result / len(orders)
