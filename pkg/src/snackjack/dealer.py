"""Dealer play: drawing sequences, final-total distributions, stand values.

The dealer stands on 6 and 7 (soft or hard) and hits everything else.  His
final total is therefore always 6, 7 or a bust, and a stand expectation only
needs those three probabilities.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Union

from .core import (
    CARDS,
    DEALER_STANDS,
    NATURAL,
    NATURAL_COMPLEMENT,
    TARGET,
    ZERO,
    Hand,
    Pack,
    Total,
    total,
    total_value,
    unit,
)


class InsufficientCards(ValueError):
    """A drawing path needs a card from an empty pack."""


class UndefinedExpectation(ValueError):
    """The conditioning event has probability zero."""


class InfiniteShoe:
    """A shoe whose composition never changes: 1/4 aces, 1/4 deuces, 1/2 treys."""

    probabilities = {1: Fraction(1, 4), 2: Fraction(1, 4), 3: Fraction(1, 2)}

    def minus(self, other) -> InfiniteShoe:
        return self

    def plus(self, other) -> InfiniteShoe:
        return self

    def remove(self, card: int) -> InfiniteShoe:
        return self

    def of(self, card: int) -> Fraction:
        return self.probabilities[card]

    def __repr__(self) -> str:
        return "InfiniteShoe()"

    def __eq__(self, other) -> bool:
        return isinstance(other, InfiniteShoe)

    def __hash__(self) -> int:
        return hash("InfiniteShoe")


INFINITE = InfiniteShoe()
Shoe = Union[Pack, InfiniteShoe]


def card_probabilities(shoe: Shoe) -> dict[int, Fraction]:
    """Distribution of the next card; only cards with positive probability appear."""
    if isinstance(shoe, InfiniteShoe):
        return shoe.probabilities
    size = shoe[0] + shoe[1] + shoe[2]
    if size <= 0:
        raise InsufficientCards(f"no cards left in {tuple(shoe)}")
    return {k: Fraction(shoe[k - 1], size) for k in CARDS if shoe[k - 1] > 0}


def downcard_probabilities(shoe: Shoe, upcard: int, no_natural: bool = True) -> dict[int, Fraction]:
    """Downcard distribution from ``shoe``, renormalised to exclude a dealer natural."""
    probs = card_probabilities(shoe)
    forbidden = NATURAL_COMPLEMENT.get(upcard) if no_natural else None
    allowed = {k: p for k, p in probs.items() if k != forbidden}
    mass = sum(allowed.values())
    if mass == 0:
        raise UndefinedExpectation(f"dealer must hold a natural with upcard {upcard} from {shoe!r}")
    if mass == 1:
        return allowed
    return {k: p / mass for k, p in allowed.items()}


class Outcome(NamedTuple):
    """Probabilities of the dealer finishing on 6, on 7, or busting."""

    six: Fraction
    seven: Fraction
    bust: Fraction


def dealer_outcome(hand: Hand, shoe: Shoe, memo: Optional[dict] = None) -> Outcome:
    """Final-total distribution for a dealer holding ``hand`` who draws from ``shoe``."""
    if memo is None:
        memo = _SHARED_MEMO
    key = (hand, shoe)
    hit = memo.get(key)
    if hit is not None:
        return hit
    t = total_value(hand)
    if t > TARGET:
        out = Outcome(Fraction(0), Fraction(0), Fraction(1))
    elif t == 6:
        out = Outcome(Fraction(1), Fraction(0), Fraction(0))
    elif t == 7:
        out = Outcome(Fraction(0), Fraction(1), Fraction(0))
    else:
        six = seven = bust = Fraction(0)
        for k, p in card_probabilities(shoe).items():
            o = dealer_outcome(hand.add(k), shoe.remove(k), memo)
            six += p * o.six
            seven += p * o.seven
            bust += p * o.bust
        out = Outcome(six, seven, bust)
    memo[key] = out
    return out


def final_distribution(shoe: Shoe, upcard: int, no_natural: bool = True, memo: Optional[dict] = None) -> Outcome:
    """Dealer outcome given the upcard, with the downcard still in ``shoe``."""
    six = seven = bust = Fraction(0)
    for d, p in downcard_probabilities(shoe, upcard, no_natural).items():
        o = dealer_outcome(unit(upcard).add(d), shoe.remove(d), memo)
        six += p * o.six
        seven += p * o.seven
        bust += p * o.bust
    return Outcome(six, seven, bust)


# Memo used when callers do not supply their own; cleared by ``clear_cache``.
_SHARED_MEMO: dict = {}


def clear_cache() -> None:
    _SHARED_MEMO.clear()


def stand_payoff(player_total: int, dealer: Outcome) -> Fraction:
    """Expected profit of standing on an unbusted ``player_total``."""
    if player_total == TARGET:
        return dealer.bust + dealer.six
    if player_total == 6:
        return dealer.bust - dealer.seven
    return dealer.bust - dealer.six - dealer.seven


def e_stand(
    hand: tuple[int, int, int],
    upcard: int,
    extra_removals: tuple[int, int, int] = ZERO,
    pack: Shoe = Pack(2, 2, 4),
    *,
    split: bool = False,
    natural_pays: Fraction = Fraction(3, 2),
) -> Fraction:
    """Conditional expectation of standing on ``hand`` against ``upcard``.

    The dealer is known not to hold a natural.  ``extra_removals`` are cards
    gone from ``pack`` besides the hand and the upcard, e.g. the partner
    paircard of a split hand.  A two-card ace-trey pays ``natural_pays``
    unless it arose from a split.
    """
    hand = Hand(*hand)
    if hand == NATURAL and not split:
        return natural_pays
    t = total_value(hand)
    if t > TARGET:
        return Fraction(-1)
    rest = pack.minus(hand).minus(unit(upcard)).minus(extra_removals)
    if isinstance(rest, Pack) and not rest.is_valid():
        raise UndefinedExpectation(f"{hand} vs {upcard} does not fit in {tuple(pack)}")
    return stand_payoff(t, final_distribution(rest, upcard))


# ---------------------------------------------------------------------------
# Drawing-sequence enumeration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditioningEvent:
    upcard: int
    no_natural: bool = True


@dataclass(frozen=True)
class DealerSequence:
    cards: tuple[int, ...]
    probability: Fraction

    @property
    def final_total(self) -> Total:
        return total(_counts(self.cards))

    @property
    def busted(self) -> bool:
        return self.final_total.busted

    @property
    def is_natural(self) -> bool:
        return len(self.cards) == 2 and sorted(self.cards) == [1, 3]


def _counts(cards) -> Hand:
    c = Counter(cards)
    return Hand(c[1], c[2], c[3])


def dealer_sequences(pack: Shoe, event: Optional[ConditioningEvent] = None) -> list[DealerSequence]:
    """Every ordered dealer drawing sequence from ``pack`` with its probability.

    Without an event the upcard is random too and dealer naturals are kept.
    With an event the upcard is fixed and, if ``no_natural`` is set, the
    downcard distribution is renormalised to rule out a natural.
    """
    out: list[DealerSequence] = []

    def extend(cards: tuple[int, ...], shoe: Shoe, prob: Fraction) -> None:
        if len(cards) >= 2 and total_value(_counts(cards)) >= DEALER_STANDS:
            out.append(DealerSequence(cards, prob))
            return
        if len(cards) == 1 and event is not None:
            probs = downcard_probabilities(shoe, cards[0], event.no_natural)
        else:
            probs = card_probabilities(shoe)
        for k, p in probs.items():
            extend(cards + (k,), shoe.remove(k), prob * p)

    if event is None:
        for u, p in card_probabilities(pack).items():
            extend((u,), pack.remove(u), p)
    else:
        if isinstance(pack, Pack) and pack.of(event.upcard) == 0:
            raise UndefinedExpectation(f"no card {event.upcard} in {tuple(pack)}")
        extend((event.upcard,), pack.remove(event.upcard), Fraction(1))
    return out


def unordered_sequences(seqs: list[DealerSequence]) -> dict[Hand, tuple[int, Fraction]]:
    """Aggregate ordered sequences by drawn multiset: hand -> (multiplicity, probability)."""
    agg: dict[Hand, tuple[int, Fraction]] = {}
    for s in seqs:
        key = _counts(s.cards)
        m, p = agg.get(key, (0, Fraction(0)))
        agg[key] = (m + 1, p + s.probability)
    return agg


# ---------------------------------------------------------------------------
# Mimic-the-dealer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MimicResult:
    ev: Fraction
    p_double_bust: Fraction
    p_winning_natural: Fraction


def mimic_dealer_expectation(pack: Shoe, natural_pays: Fraction = Fraction(3, 2)) -> MimicResult:
    """Player follows the dealer's rule (stand on 6 and 7).

    The dealer is assumed to finish his hand even after the player busts, so
    that the double-bust probability is defined.  A player natural pays
    ``natural_pays`` unless the dealer also has one (push).
    """
    ev = p_bb = p_nat = Fraction(0)
    for player in dealer_sequences(pack):
        rest = pack.minus(_counts(player.cards))
        p_bust = player.busted
        pt = player.final_total.value
        for dealer in dealer_sequences(rest):
            p = player.probability * dealer.probability
            if player.is_natural or dealer.is_natural:
                if player.is_natural and not dealer.is_natural:
                    ev += p * natural_pays
                    p_nat += p
                elif dealer.is_natural and not player.is_natural:
                    ev -= p
                continue
            if p_bust:
                ev -= p
                if dealer.busted:
                    p_bb += p
                continue
            dt = dealer.final_total.value
            if dealer.busted or pt > dt:
                ev += p
            elif pt < dt:
                ev -= p
    return MimicResult(ev, p_bb, p_nat)
