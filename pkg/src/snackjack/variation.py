"""Strategy variation on the 39-deck shoe.

A situation is a two-card hand against an upcard together with a baseline
action and an alternative.  Its gain at a post-deal composition is
``E_alt - E_base``, read from the closed-form departure formulas.  The seen
cards ``m`` come out of the 309 cards left once the hand and upcard are dealt;
they are weighted like draws from the full 312-card shoe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterator, Optional

import numpy as np

from .closed_form import SituationFormula, situation_formula
from .core import NATURAL_COMPLEMENT, Hand, Pack, unit
from .counting import DEUCES_MINUS_ACES, SHOE, CountSystem, clamp_bet, rounded
from .dealer import downcard_probabilities
from .solver import Action, legal_actions

ACTION_WORDS = {Action.STAND: "stand", Action.HIT: "hit", Action.DOUBLE: "double", Action.SPLIT: "split"}
POST_DEAL_SIZE = sum(SHOE) - 3
EOR_SCALE = POST_DEAL_SIZE - 1
MIN_LEFT = 5
MAX_SEEN = POST_DEAL_SIZE - MIN_LEFT
AVERAGE_RANGE = range(1, 234)
BET_SPREAD = (1, 6)


@dataclass(frozen=True)
class Situation:
    hand: Hand
    upcard: int
    baseline: Action
    alternative: Action

    def __post_init__(self) -> None:
        object.__setattr__(self, "hand", Hand(*self.hand))
        legal = legal_actions(self.hand)
        for a in (self.baseline, self.alternative):
            if a not in legal:
                raise ValueError(f"{a} is not legal with {self.hand.label()}")
        if self.baseline == self.alternative:
            raise ValueError("baseline and alternative coincide")

    @property
    def quantity(self) -> str:
        return f"{ACTION_WORDS[self.alternative]}-{ACTION_WORDS[self.baseline]}"

    @property
    def formula(self) -> SituationFormula:
        return situation_formula(self.hand, self.upcard, self.quantity)

    @property
    def post_deal(self) -> Pack:
        return Pack(*SHOE).minus(self.hand).minus(unit(self.upcard))

    @property
    def label(self) -> str:
        return f"{self.hand.label()} v{self.upcard} {self.baseline}->{self.alternative}"

    def gain(self, remaining: tuple[int, int, int]) -> Fraction:
        """E_alt - E_base with ``remaining`` cards left after the deal."""
        return self.formula(*remaining)

    def admits(self, m: tuple[int, int, int]) -> bool:
        """Whether ``m`` seen cards leave a composition in the departure domain."""
        c0 = self.post_deal
        if any(not 0 <= a <= b for a, b in zip(m, c0)) or sum(m) > MAX_SEEN:
            return False
        return self.formula.in_domain(*(b - a for a, b in zip(m, c0)))


def _sit(hand, u, base, alt) -> Situation:
    return Situation(Hand(*hand), u, Action.parse(base), Action.parse(alt))


SITUATIONS = (
    _sit((0, 0, 2), 1, "Spl", "S"),
    _sit((0, 0, 2), 2, "Spl", "S"),
    _sit((0, 0, 2), 3, "Spl", "S"),
    _sit((0, 1, 1), 1, "H", "S"),
    _sit((0, 1, 1), 2, "H", "S"),
    _sit((0, 1, 1), 3, "H", "S"),
    _sit((1, 1, 0), 1, "H", "S"),
    _sit((1, 1, 0), 1, "H", "D"),
    _sit((1, 1, 0), 2, "D", "S"),
    _sit((1, 1, 0), 2, "D", "H"),
    _sit((1, 1, 0), 3, "D", "S"),
    _sit((1, 1, 0), 3, "D", "H"),
)


def find_situation(hand, upcard: int, alternative: Optional[str] = None) -> Situation:
    hits = [s for s in SITUATIONS if s.hand == Hand(*hand) and s.upcard == upcard]
    if alternative is not None:
        hits = [s for s in hits if s.alternative == Action.parse(alternative)]
    if len(hits) != 1:
        raise KeyError(f"no unique analysed situation for {hand} v{upcard} alt={alternative}")
    return hits[0]


# ---------------------------------------------------------------------------
# Departure sets with exact weights
# ---------------------------------------------------------------------------


def departure_set(situation: Situation, n: int) -> Iterator[tuple[tuple[int, int, int], int]]:
    """Yield ``(m, weight)`` over the seen vectors of size n in the departure domain.

    ``weight`` is C(78,m1) C(78,m2) C(156,m3); normalise by the total.
    """
    if not 0 <= n <= MAX_SEEN:
        raise ValueError(f"n must be in 0..{MAX_SEEN}")
    c0 = situation.post_deal
    for m1 in range(min(c0[0], n) + 1):
        for m2 in range(min(c0[1], n - m1) + 1):
            m3 = n - m1 - m2
            m = (m1, m2, m3)
            if m3 <= c0[2] and situation.admits(m):
                yield m, math.comb(SHOE[0], m1) * math.comb(SHOE[1], m2) * math.comb(SHOE[2], m3)


def _remaining(situation: Situation, m) -> tuple[int, int, int]:
    return tuple(b - a for a, b in zip(m, situation.post_deal))


def departure_probability(situation: Situation, n: int) -> Fraction:
    """Probability that the alternative strictly beats the baseline after n seen cards."""
    num = den = 0
    for m, w in departure_set(situation, n):
        den += w
        if situation.gain(_remaining(situation, m)) > 0:
            num += w
    return Fraction(num, den)


def departure_gain(situation: Situation, n: int) -> Fraction:
    """Expected positive part of the gain after n seen cards."""
    total = Fraction(0)
    den = 0
    for m, w in departure_set(situation, n):
        den += w
        g = situation.gain(_remaining(situation, m))
        if g > 0:
            total += w * g
    return total / den


def adjusted_true_count(m: tuple[int, int, int], system: CountSystem = DEUCES_MINUS_ACES) -> Fraction:
    n = sum(m)
    return Fraction(52 * sum(a * j for a, j in zip(m, system.J)), POST_DEAL_SIZE - n)


# ---------------------------------------------------------------------------
# Strategic effects of removal
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StrategicEoR:
    E: tuple[Fraction, Fraction, Fraction]
    weights: tuple[Fraction, Fraction, Fraction]
    mu: Fraction
    rho: float
    gamma: Fraction
    sigma_j: float
    index: Fraction
    # the full index is ``index + index_shift / (309 - n)``
    index_shift: Fraction

    def index_at(self, n: int) -> Fraction:
        return self.index + self.index_shift / (POST_DEAL_SIZE - n)

    @property
    def variable(self) -> bool:
        return self.index_shift != 0


def downcard_weights(situation: Situation) -> tuple[Fraction, Fraction, Fraction]:
    """Chance that the next seen card is each value, the downcard being no natural."""
    c0 = situation.post_deal
    down = downcard_probabilities(c0, situation.upcard)
    return tuple((c0[i] - down.get(i + 1, Fraction(0))) / (c0.size - 1) for i in range(3))


def strategic_eor(situation: Situation, system: CountSystem = DEUCES_MINUS_ACES) -> StrategicEoR:
    c0 = situation.post_deal
    mu = situation.gain(c0)
    E = tuple(EOR_SCALE * (situation.gain(c0.minus(unit(i))) - mu) for i in (1, 2, 3))
    w = downcard_weights(situation)
    J = system.J
    swej = sum(a * e * j for a, e, j in zip(w, E, J))
    swjj = sum(a * j * j for a, j in zip(w, J))
    swj = sum(a * j for a, j in zip(w, J))
    swee = sum(a * e * e for a, e in zip(w, E))
    var_j = swjj - swj * swj
    gamma = swej / swjj
    rho = float(swej) / math.sqrt(float(swee) * float(var_j))
    # Cards of the forbidden downcard value are under-represented among the
    # seen cards; the count picks up a constant offset from them.
    forbidden = NATURAL_COMPLEMENT.get(situation.upcard)
    if forbidden is None:
        offset = Fraction(0)
    else:
        others = c0.size - c0.of(forbidden)
        offset = Fraction(c0.of(forbidden), others - 1) * J[forbidden - 1]
    return StrategicEoR(E, w, mu, rho, gamma, math.sqrt(var_j), -52 * mu / gamma, -52 * offset)


# ---------------------------------------------------------------------------
# Departure policy driven by the rounded adjusted true count
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeparturePolicy:
    """Depart when [TC*] <= threshold (``at_most``) or >= threshold; bet the clamped count."""

    threshold: int
    at_most: bool
    min_bet: int = BET_SPREAD[0]
    max_bet: int = BET_SPREAD[1]

    def units(self, k: int) -> int:
        hit = k <= self.threshold if self.at_most else k >= self.threshold
        return clamp_bet(k, self.min_bet, self.max_bet) if hit else 0

    @property
    def criterion(self) -> str:
        return f"{'<=' if self.at_most else '>='}{self.threshold:+d}"


def departure_policy(eor: StrategicEoR) -> Optional[DeparturePolicy]:
    """Round the index away from the basic play; None if it lies beyond the bet spread.

    The n-dependent part of the index is ignored, as a player would.
    """
    if eor.gamma < 0:
        policy = DeparturePolicy(math.floor(eor.index), True)
    else:
        policy = DeparturePolicy(math.ceil(eor.index), False)
    if abs(policy.threshold) > BET_SPREAD[1]:
        return None
    return policy


def _policy_units(policy: DeparturePolicy, n: int, running: int) -> Fraction:
    return sum((f * policy.units(k) for k, f in rounded(52 * running, POST_DEAL_SIZE - n)), Fraction(0))


def realized_departure_ev(
    situation: Situation, n: int, policy: Optional[DeparturePolicy], system: CountSystem = DEUCES_MINUS_ACES
) -> Fraction:
    """Expected gain after n seen cards when the departure follows ``policy``."""
    if policy is None:
        return Fraction(0)
    total = Fraction(0)
    den = 0
    for m, w in departure_set(situation, n):
        den += w
        units = _policy_units(policy, n, sum(a * j for a, j in zip(m, system.J)))
        if units:
            total += w * units * situation.gain(_remaining(situation, m))
    return total / den


# ---------------------------------------------------------------------------
# Whole-lattice evaluation
# ---------------------------------------------------------------------------

_INT64_SAFE = 2**62


def _evaluate_int64(poly, grids, bound: int) -> np.ndarray:
    """Exact integer evaluation of ``poly`` on numpy grids of nonnegative ints."""
    worst = sum(abs(c) * bound ** sum(e) for e, c in poly.terms.items())
    if worst >= _INT64_SAFE:
        raise OverflowError(f"polynomial may exceed int64 on this lattice ({worst:.3g})")
    out = np.zeros(grids[0].shape, dtype=np.int64)
    for (i, j, k), c in poly.terms.items():
        out += c * grids[0] ** i * grids[1] ** j * grids[2] ** k
    return out


def unlli(x: float) -> float:
    """E[(Z - x)^+] for a standard normal Z."""
    return math.exp(-x * x / 2) / math.sqrt(2 * math.pi) - x * 0.5 * math.erfc(x / math.sqrt(2))


class SituationLattice:
    """A situation evaluated at every seen vector at once.

    Signs and counts are exact (int64 numerators over positive denominators);
    weighted averages are double precision.
    """

    def __init__(self, situation: Situation, system: CountSystem = DEUCES_MINUS_ACES):
        self.situation = situation
        self.system = system
        c0 = situation.post_deal
        m1, m2, m3 = np.meshgrid(*(np.arange(c + 1, dtype=np.int64) for c in c0), indexing="ij")
        self.m = (m1, m2, m3)
        self.level = m1 + m2 + m3
        rem = tuple(c - a for c, a in zip(c0, self.m))
        f = situation.formula
        self.numerator = _evaluate_int64(f.numerator, rem, max(c0))
        self.denominator = _evaluate_int64(f.denominator_poly(), rem, max(c0))
        self.domain = self._domain(rem)
        self.positive = self.domain & (self.numerator > 0)
        self.gain = np.where(self.domain, self.numerator / np.where(self.denominator == 0, 1, self.denominator), 0.0)
        self.weight = self._weights()

    def _domain(self, rem) -> np.ndarray:
        f = self.situation.formula
        size = rem[0] + rem[1] + rem[2]
        ok = (size >= max(MIN_LEFT, 1)) & (self.denominator != 0)
        if f.upcard == 1:
            ok &= rem[0] + rem[1] >= 1
        if f.upcard == 3:
            ok &= rem[1] + rem[2] >= 1
        if np.any(self.denominator[ok] < 0):
            raise ArithmeticError("negative denominator inside the domain")
        return ok

    def _weights(self) -> np.ndarray:
        """Hypergeometric weights normalised over each level of the domain."""
        lg = [np.array([math.lgamma(cap + 1) - math.lgamma(k + 1) - math.lgamma(cap - k + 1) for k in range(len(r))])
              for cap, r in zip(SHOE, (range(c + 1) for c in self.situation.post_deal))]
        logw = lg[0][self.m[0]] + lg[1][self.m[1]] + lg[2][self.m[2]]
        levels = self.level[self.domain]
        peak = np.full(POST_DEAL_SIZE + 1, -np.inf)
        np.maximum.at(peak, levels, logw[self.domain])
        w = np.where(self.domain, np.exp(logw - peak[self.level]), 0.0)
        norm = np.bincount(self.level.ravel(), weights=w.ravel(), minlength=POST_DEAL_SIZE + 1)
        return np.where(self.domain, w / np.where(norm[self.level] > 0, norm[self.level], 1), 0.0)

    def _per_level(self, values: np.ndarray) -> np.ndarray:
        return np.bincount(self.level.ravel(), weights=(self.weight * values).ravel(), minlength=POST_DEAL_SIZE + 1)

    @cached_property
    def prob_departure(self) -> np.ndarray:
        return self._per_level(self.positive.astype(float))

    @cached_property
    def positive_gain(self) -> np.ndarray:
        return self._per_level(np.where(self.positive, self.gain, 0.0))

    def units(self, policy: Optional[DeparturePolicy]) -> np.ndarray:
        """Bet units on each composition, with exact halves split evenly."""
        if policy is None:
            return np.zeros(self.level.shape)
        running = sum(j * a for j, a in zip(self.system.J, self.m))
        left = np.maximum(POST_DEAL_SIZE - self.level, 1)
        top = 2 * 52 * running + left
        k, r = np.divmod(top, 2 * left)
        table = {v: policy.units(v) for v in range(int(k.min()) - 1, int(k.max()) + 1)}
        lookup = np.vectorize(table.__getitem__, otypes=[float])
        whole = lookup(k)
        half = 0.5 * (lookup(k - 1) + whole)
        return np.where(r == 0, half, whole)

    def realized_ev(self, policy: Optional[DeparturePolicy]) -> np.ndarray:
        return self._per_level(self.units(policy) * self.gain)

    def departure_counts(self) -> tuple[int, int]:
        """(compositions where the alternative strictly wins, compositions in the domain)."""
        return int(self.positive.sum()), int(self.domain.sum())

    def proportion(self) -> Fraction:
        return Fraction(*self.departure_counts())

    def approx_ev(self, eor: StrategicEoR) -> np.ndarray:
        """Normal approximation of E[(Z*_n)^+] for n = 0..309 (NaN where undefined)."""
        out = np.full(POST_DEAL_SIZE + 1, np.nan)
        for n in range(1, MAX_SEEN + 1):
            out[n] = normal_approx_gain(eor, n)
        return out


def normal_approx_gain(eor: StrategicEoR, n: int) -> float:
    sigma = abs(float(eor.gamma)) * eor.sigma_j * math.sqrt(n / ((sum(SHOE) - n) * (sum(SHOE) - 1)))
    mu = float(eor.mu)
    return sigma * unlli(-mu / sigma)


@lru_cache(maxsize=None)
def lattice(situation: Situation) -> SituationLattice:
    return SituationLattice(situation)


def average_realized_ev(situation: Situation, ns: range = AVERAGE_RANGE) -> float:
    policy = departure_policy(strategic_eor(situation))
    curve = lattice(situation).realized_ev(policy)
    return float(np.mean(curve[list(ns)]))


def average_approx_ev(situation: Situation, ns: range = AVERAGE_RANGE) -> float:
    eor = strategic_eor(situation)
    return float(np.mean([normal_approx_gain(eor, n) for n in ns]))


# ---------------------------------------------------------------------------
# Three-way hands
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThreeWayShares:
    total: int
    counts: dict[Action, int]
    ties: int

    def share(self, action: Action) -> Fraction:
        return Fraction(self.counts[action], self.total)


def three_way_shares(hand, upcard: int, basic: Action) -> ThreeWayShares:
    """How often each of stand, hit and double is optimal over post-deal compositions.

    A composition whose best value is shared goes to the basic-strategy action
    when it is among the best, else to the first best in display order.
    """
    hand = Hand(*hand)
    actions = (Action.STAND, Action.HIT, Action.DOUBLE)
    probe = SituationLattice(Situation(hand, upcard, Action.HIT, Action.STAND))
    domain = probe.domain
    rem = tuple(c - a for c, a in zip(probe.situation.post_deal, probe.m))
    bound = max(probe.situation.post_deal)
    diffs = {}
    for a in actions:
        for b in actions:
            if a != b:
                f = situation_formula(hand, upcard, f"{ACTION_WORDS[a]}-{ACTION_WORDS[b]}")
                diffs[a, b] = np.sign(_evaluate_int64(f.numerator, rem, bound))
    best = {a: domain.copy() for a in actions}
    for (a, b), s in diffs.items():
        best[a] &= s >= 0
    shared = sum(best[a].astype(np.int64) for a in actions) > 1
    order = [basic] + [a for a in actions if a != basic]
    taken = np.zeros(domain.shape, dtype=bool)
    counts = {}
    for a in order:
        mine = best[a] & ~taken
        counts[a] = int(mine.sum())
        taken |= mine
    return ThreeWayShares(int(domain.sum()), counts, int((shared & domain).sum()))


# ---------------------------------------------------------------------------
# Summary table
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DepartureRow:
    situation: Situation
    eor: StrategicEoR
    policy: Optional[DeparturePolicy]
    average_ev: float

    @property
    def criterion(self) -> str:
        return self.policy.criterion if self.policy else "--"


def table10(system: CountSystem = DEUCES_MINUS_ACES, ns: range = AVERAGE_RANGE) -> list[DepartureRow]:
    rows = []
    for s in SITUATIONS:
        eor = strategic_eor(s, system)
        policy = departure_policy(eor)
        lat = lattice(s) if system == DEUCES_MINUS_ACES else SituationLattice(s, system)
        ev = float(np.mean(lat.realized_ev(policy)[list(ns)]))
        rows.append(DepartureRow(s, eor, policy, ev))
    return rows
