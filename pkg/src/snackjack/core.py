"""Pack, hand and total model for snackjack.

A pack is a triple of counts ``(n1, n2, n3)`` of aces, deuces and treys.  A
player hand is an unordered triple ``(l1, l2, l3)`` of the same shape.  Card
denominations are the integers 1, 2 and 3 throughout; an ace counts 1 or 4.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator, NamedTuple

CARDS = (1, 2, 3)
TARGET = 7
DEALER_STANDS = 6
# dealer downcard that completes a natural, keyed by upcard
NATURAL_COMPLEMENT = {1: 3, 3: 1}


class Pack(NamedTuple):
    n1: int
    n2: int
    n3: int

    @property
    def size(self) -> int:
        return self.n1 + self.n2 + self.n3

    def of(self, card: int) -> int:
        return self[card - 1]

    def minus(self, other: tuple[int, int, int]) -> Pack:
        return Pack(self[0] - other[0], self[1] - other[1], self[2] - other[2])

    def plus(self, other: tuple[int, int, int]) -> Pack:
        return Pack(self[0] + other[0], self[1] + other[1], self[2] + other[2])

    def remove(self, card: int) -> Pack:
        return self.minus(unit(card))

    def is_valid(self) -> bool:
        return min(self) >= 0

    @classmethod
    def decks(cls, d: int) -> Pack:
        return cls(2 * d, 2 * d, 4 * d)


class Hand(NamedTuple):
    l1: int
    l2: int
    l3: int

    @property
    def size(self) -> int:
        return self.l1 + self.l2 + self.l3

    @property
    def hard_total(self) -> int:
        return self.l1 + 2 * self.l2 + 3 * self.l3

    def of(self, card: int) -> int:
        return self[card - 1]

    def add(self, card: int) -> Hand:
        return Hand(*(c + (i == card - 1) for i, c in enumerate(self)))

    def plus(self, other: tuple[int, int, int]) -> Hand:
        return Hand(self[0] + other[0], self[1] + other[1], self[2] + other[2])

    def fits(self, pack: tuple[int, int, int]) -> bool:
        return all(a <= b for a, b in zip(self, pack))

    @property
    def is_pair(self) -> bool:
        return self.size == 2 and max(self) == 2

    @property
    def is_natural(self) -> bool:
        return self == NATURAL

    def label(self) -> str:
        return f"({self.l1},{self.l2},{self.l3})"


ZERO = Pack(0, 0, 0)
NATURAL = Hand(1, 0, 1)


def unit(card: int) -> Hand:
    """The one-card hand ``e_card``."""
    return Hand(int(card == 1), int(card == 2), int(card == 3))


@dataclass(frozen=True)
class Total:
    value: int
    soft: bool

    @property
    def busted(self) -> bool:
        return self.value > TARGET

    def __str__(self) -> str:
        return f"{'s' if self.soft else 'h'}{self.value}"


def hard_total(hand: tuple[int, int, int]) -> int:
    return hand[0] + 2 * hand[1] + 3 * hand[2]


def total_value(hand: tuple[int, int, int]) -> int:
    """Best total of ``hand``, an ace counting 4 when that does not bust."""
    hard = hand[0] + 2 * hand[1] + 3 * hand[2]
    if hand[0] >= 1 and hard <= 4:
        return hard + 3
    return hard


def total(hand: tuple[int, int, int]) -> Total:
    hard = hard_total(hand)
    if hand[0] >= 1 and hard <= 4:
        return Total(hard + 3, True)
    return Total(hard, False)


def enumerate_hands(pack: tuple[int, int, int]) -> list[Hand]:
    """All unbusted hands of two or more cards that fit in ``pack``.

    Sorted by descending hard total, then lexicographically, which is the
    row order used for printed strategy tables.
    """
    hands = []
    for l1, l2, l3 in product(range(8), range(4), range(3)):
        h = Hand(l1, l2, l3)
        if h.size >= 2 and h.fits(pack) and total_value(h) <= TARGET:
            hands.append(h)
    hands.sort(key=lambda h: (-h.hard_total, h))
    return hands


def downcard_possible(pack: tuple[int, int, int], hand: tuple[int, int, int], upcard: int) -> bool:
    """Whether the dealer can hold a non-natural downcard once hand and upcard are out."""
    rest = [pack[i] - hand[i] - (upcard == i + 1) for i in range(3)]
    forbidden = NATURAL_COMPLEMENT.get(upcard)
    return sum(c for i, c in enumerate(rest, start=1) if i != forbidden) > 0


def enumerate_decision_points(pack: tuple[int, int, int]) -> list[tuple[Hand, int]]:
    """Pairs (hand, upcard) at which a player decision can arise.

    A pair is dropped when the upcard is not available after the hand is
    dealt, or when no downcard other than the natural-completing one is left
    (conditioning on "no dealer natural" would then be conditioning on an
    impossible event).
    """
    points = []
    for hand in enumerate_hands(pack):
        for u in CARDS:
            if hand[u - 1] <= pack[u - 1] - 1 and downcard_possible(pack, hand, u):
                points.append((hand, u))
    return points


def two_card_hands() -> Iterator[Hand]:
    for i in CARDS:
        for j in CARDS:
            if i <= j:
                yield unit(i).plus(unit(j))
