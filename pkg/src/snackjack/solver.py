"""Exact composition-dependent analysis of player decisions.

Every decision point is a pair (hand, upcard) evaluated conditionally on the
dealer not holding a natural.  Card probabilities for the player's draws are
obtained by conditioning the joint (downcard, next card) distribution on that
event, which gives the Bayes-corrected probabilities for upcards 1 and 3 and
plain depletion probabilities for upcard 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Mapping, Optional

from .core import (
    CARDS,
    NATURAL,
    NATURAL_COMPLEMENT,
    TARGET,
    ZERO,
    Hand,
    Pack,
    enumerate_decision_points,
    hard_total,
    total_value,
    two_card_hands,
    unit,
)
from .dealer import (
    INFINITE,
    InfiniteShoe,
    InsufficientCards,
    Shoe,
    UndefinedExpectation,
    card_probabilities,
    final_distribution,
    stand_payoff,
)


class Action(Enum):
    STAND = "S"
    HIT = "H"
    DOUBLE = "D"
    SPLIT = "Spl"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> Action:
        for a in cls:
            if a.value.lower() == text.strip().lower():
                return a
        raise ValueError(f"unknown action {text!r}")


DISPLAY_ORDER = (Action.STAND, Action.HIT, Action.DOUBLE, Action.SPLIT)


class IllegalAction(ValueError):
    pass


class DefectiveTable(KeyError):
    """A fixed strategy was asked about a decision point it does not cover."""


class NaturalPay(Enum):
    THREE_TO_TWO = "three_to_two"
    EVEN_MONEY = "even_money_loses_to_natural"


@dataclass(frozen=True)
class RuleVariant:
    natural_pay: NaturalPay = NaturalPay.THREE_TO_TWO
    commission: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if self.commission < 0:
            raise ValueError("commission must be nonnegative")

    @property
    def natural_value(self) -> Fraction:
        return Fraction(3, 2) if self.natural_pay is NaturalPay.THREE_TO_TWO else Fraction(1)


DEFAULT_RULES = RuleVariant()
EVEN_MONEY = RuleVariant(NaturalPay.EVEN_MONEY)


def legal_actions(hand: Hand) -> tuple[Action, ...]:
    acts = [Action.STAND, Action.HIT]
    if hand.size == 2:
        acts.append(Action.DOUBLE)
        if hand.is_pair:
            acts.append(Action.SPLIT)
    return tuple(acts)


@dataclass(frozen=True)
class Entry:
    values: Mapping[Action, Fraction]
    best: frozenset

    @property
    def value(self) -> Fraction:
        return max(self.values.values())

    def best_label(self) -> str:
        return "/".join(str(a) for a in DISPLAY_ORDER if a in self.best)


@dataclass
class StrategyTable:
    pack: Shoe
    entries: dict = field(default_factory=dict)

    def __getitem__(self, key: tuple[Hand, int]) -> Entry:
        return self.entries[key]

    def __contains__(self, key) -> bool:
        return key in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def action(self, hand: Hand, upcard: int) -> Action:
        """A single action for ``hand`` (first in display order on ties)."""
        e = self.entries[(hand, upcard)]
        return next(a for a in DISPLAY_ORDER if a in e.best)

    def nonunique(self) -> list[tuple[Hand, int]]:
        return [k for k, e in self.entries.items() if len(e.best) > 1]

    def policy(self) -> dict[tuple[Hand, int], Action]:
        return {k: self.action(*k) for k in self.entries}


def _as_shoe(pack) -> Shoe:
    if isinstance(pack, InfiniteShoe):
        return pack
    return Pack(*pack)


class Solver:
    """Conditional expectations for one pack (or the infinite shoe).

    ``policy`` switches the continuation after a hit from optimal play to a
    fixed lookup, which is how a strategy table is evaluated on a pack it was
    not derived for.
    """

    def __init__(
        self,
        pack=Pack(2, 2, 4),
        rules: RuleVariant = DEFAULT_RULES,
        policy: Optional[Mapping[tuple[Hand, int], Action]] = None,
    ) -> None:
        self.pack = _as_shoe(pack)
        self.rules = rules
        self.policy = policy
        self._dealer_memo: dict = {}
        self._memo: dict = {}

    # -- probabilities -----------------------------------------------------

    def remaining(self, hand, upcard: int, removals=ZERO) -> Shoe:
        rest = self.pack.minus(hand).minus(unit(upcard)).minus(removals)
        if isinstance(rest, Pack) and not rest.is_valid():
            raise UndefinedExpectation(f"{tuple(hand)} vs {upcard} does not fit in {tuple(self.pack)}")
        return rest

    def next_card_probs(self, hand, upcard: int, removals=ZERO) -> dict[int, Fraction]:
        """P(next player card = k | dealer has no natural), for each possible k."""
        key = ("p", hand, upcard, removals)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        rest = self.remaining(hand, upcard, removals)
        forbidden = NATURAL_COMPLEMENT.get(upcard)
        if isinstance(rest, InfiniteShoe) or forbidden is None:
            probs = card_probabilities(rest)
            if isinstance(rest, Pack) and rest.size < 2:
                raise InsufficientCards("no card left for the player beyond the downcard")
        else:
            joint: dict[int, Fraction] = {}
            for d, pd in card_probabilities(rest).items():
                if d == forbidden:
                    continue
                after = rest.remove(d)
                if after.size == 0:
                    continue
                for k, pk in card_probabilities(after).items():
                    joint[k] = joint.get(k, Fraction(0)) + pd * pk
            mass = sum(joint.values())
            if mass == 0:
                if any(d != forbidden for d in card_probabilities(rest)):
                    raise InsufficientCards("no card left for the player beyond the downcard")
                raise UndefinedExpectation(f"dealer must hold a natural at {tuple(hand)} vs {upcard}")
            probs = {k: p / mass for k, p in joint.items() if p}
        self._memo[key] = probs
        return probs

    # -- single actions ----------------------------------------------------

    def e_stand(self, hand, upcard: int, removals=ZERO, split: bool = False) -> Fraction:
        hand = Hand(*hand)
        if hand == NATURAL and not split and removals == ZERO:
            return self.rules.natural_value
        t = total_value(hand)
        if t > TARGET:
            return Fraction(-1)
        key = ("S", hand, upcard, removals)
        hit = self._memo.get(key)
        if hit is None:
            rest = self.remaining(hand, upcard, removals)
            hit = stand_payoff(t, final_distribution(rest, upcard, True, self._dealer_memo))
            self._memo[key] = hit
        return hit

    def e_hit(self, hand, upcard: int, removals=ZERO) -> Fraction:
        hand = Hand(*hand)
        if hard_total(hand) >= TARGET:
            return Fraction(-1)
        key = ("H", hand, upcard, removals)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        value = Fraction(0)
        for k, p in self.next_card_probs(hand, upcard, removals).items():
            nxt = hand.add(k)
            if total_value(nxt) > TARGET:
                value -= p
            else:
                value += p * self._continue(nxt, upcard, removals)
        self._memo[key] = value
        return value

    def e_double(self, hand, upcard: int, removals=ZERO) -> Fraction:
        hand = Hand(*hand)
        if hand.size != 2:
            raise IllegalAction("doubling needs a two-card hand")
        value = Fraction(0)
        for k, p in self.next_card_probs(hand, upcard, removals).items():
            value += p * self.e_stand(hand.add(k), upcard, removals)
        return 2 * value

    def e_split(self, hand, upcard: int, removals=ZERO) -> Fraction:
        hand = Hand(*hand)
        if not hand.is_pair:
            raise IllegalAction("splitting needs a pair")
        i = hand.index(2) + 1
        e_i = unit(i)
        partner = Pack(*e_i).plus(removals)
        value = Fraction(0)
        for k, p in self.next_card_probs(hand, upcard, removals).items():
            value += p * self.e_stand(e_i.add(k), upcard, partner, split=True)
        return 2 * value

    def e_action(self, action: Action, hand, upcard: int, removals=ZERO) -> Fraction:
        hand = Hand(*hand)
        if action not in legal_actions(hand):
            raise IllegalAction(f"{action} is not legal for {hand.label()}")
        if action is Action.STAND:
            return self.e_stand(hand, upcard, removals)
        if action is Action.HIT:
            return self.e_hit(hand, upcard, removals)
        if action is Action.DOUBLE:
            return self.e_double(hand, upcard, removals)
        return self.e_split(hand, upcard, removals)

    def _continue(self, hand: Hand, upcard: int, removals) -> Fraction:
        """Value of a post-hit hand: optimal stand/hit, or the fixed policy's choice."""
        if self.policy is None:
            return self.e_max_draw(hand, upcard, removals)
        try:
            act = self.policy[(hand, upcard)]
        except KeyError:
            raise DefectiveTable((hand, upcard)) from None
        if act is Action.STAND:
            return self.e_stand(hand, upcard, removals)
        if act is Action.HIT:
            return self.e_hit(hand, upcard, removals)
        raise DefectiveTable(f"{act} prescribed for a drawn hand {hand.label()}")

    def e_max_draw(self, hand: Hand, upcard: int, removals=ZERO) -> Fraction:
        """Best of stand and hit, the choice available after drawing."""
        s = self.e_stand(hand, upcard, removals)
        try:
            return max(s, self.e_hit(hand, upcard, removals))
        except InsufficientCards:
            return s

    # -- decision points ---------------------------------------------------

    def action_values(self, hand, upcard: int) -> dict[Action, Fraction]:
        hand = Hand(*hand)
        values = {}
        for a in legal_actions(hand):
            try:
                values[a] = self.e_action(a, hand, upcard)
            except InsufficientCards:
                continue
        return values

    def entry(self, hand, upcard: int) -> Entry:
        values = self.action_values(hand, upcard)
        top = max(values.values())
        return Entry(values, frozenset(a for a, v in values.items() if v == top))

    def policy_value(self, hand, upcard: int) -> Fraction:
        hand = Hand(*hand)
        if self.policy is None:
            return self.entry(hand, upcard).value
        try:
            act = self.policy[(hand, upcard)]
        except KeyError:
            raise DefectiveTable((hand, upcard)) from None
        return self.e_action(act, hand, upcard)

    # -- whole round -------------------------------------------------------

    def deal_probabilities(self) -> list[tuple[Hand, int, Fraction, Fraction]]:
        """For each two-card hand and upcard: (hand, u, P(no dealer natural), P(dealer natural))."""
        out = []
        for hand in two_card_hands():
            p_hand = _hand_probability(self.pack, hand)
            if p_hand == 0:
                continue
            after = self.pack.minus(hand)
            for u, pu in card_probabilities(after).items():
                rest = after.remove(u)
                f = NATURAL_COMPLEMENT.get(u)
                probs = card_probabilities(rest) if (isinstance(rest, InfiniteShoe) or rest.size) else {}
                p_nat = probs.get(f, Fraction(0)) if f else Fraction(0)
                p_no = sum(p for d, p in probs.items() if d != f)
                out.append((hand, u, p_hand * pu * p_no, p_hand * pu * p_nat))
        return out

    def overall_expectation(self) -> Fraction:
        total = Fraction(0)
        for hand, u, p_a, p_b in self.deal_probabilities():
            if p_a:
                total += p_a * self.policy_value(hand, u)
            if p_b:
                if hand != NATURAL or self.rules.natural_pay is NaturalPay.EVEN_MONEY:
                    total -= p_b
        return total - self.rules.commission

    def strategy_table(self) -> StrategyTable:
        if isinstance(self.pack, InfiniteShoe):
            points = [(h, u) for h, u in enumerate_decision_points(Pack.decks(4))]
        else:
            points = enumerate_decision_points(self.pack)
        table = StrategyTable(self.pack)
        for hand, u in points:
            table.entries[(hand, u)] = self.entry(hand, u)
        return table


def _hand_probability(shoe: Shoe, hand: Hand) -> Fraction:
    """Probability that the first two cards form ``hand`` (unordered)."""
    cards = [c for c in CARDS for _ in range(hand.of(c))]
    orders = {tuple(cards), tuple(reversed(cards))}
    total = Fraction(0)
    for first, second in orders:
        p1 = card_probabilities(shoe).get(first, Fraction(0))
        if not p1:
            continue
        rest = shoe.remove(first)
        if isinstance(rest, Pack) and rest.size == 0:
            continue
        total += p1 * card_probabilities(rest).get(second, Fraction(0))
    return total


# ---------------------------------------------------------------------------
# Convenience wrappers
# ---------------------------------------------------------------------------


def cond_card_prob(k: int, hand, upcard: int, removals=ZERO, pack=Pack(2, 2, 4)) -> Fraction:
    return Solver(pack).next_card_probs(Hand(*hand), upcard, Pack(*removals)).get(k, Fraction(0))


def e_action(action: Action, hand, upcard: int, removals=ZERO, pack=Pack(2, 2, 4), rules=DEFAULT_RULES) -> Fraction:
    return Solver(pack, rules).e_action(action, Hand(*hand), upcard, Pack(*removals))


def basic_strategy(pack=Pack(2, 2, 4), rules: RuleVariant = DEFAULT_RULES) -> StrategyTable:
    return Solver(pack, rules).strategy_table()


def overall_expectation(pack=Pack(2, 2, 4), rules: RuleVariant = DEFAULT_RULES) -> Fraction:
    return Solver(pack, rules).overall_expectation()


def infinite_deck_expectation(rules: RuleVariant = DEFAULT_RULES) -> Fraction:
    return Solver(INFINITE, rules).overall_expectation()


def fixed_strategy_expectation(pack, table, rules: RuleVariant = DEFAULT_RULES) -> Fraction:
    """Expectation of playing ``table`` verbatim on ``pack``.

    ``table`` is a StrategyTable or a plain mapping (hand, upcard) -> Action.
    """
    policy = table.policy() if isinstance(table, StrategyTable) else table
    pack = Pack(*pack)
    if pack.size < 8:
        raise InsufficientCards("a fixed-strategy round needs at least eight cards")
    return Solver(pack, rules, policy).overall_expectation()
