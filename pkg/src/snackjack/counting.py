"""Card counting on the 39-deck shoe.

Everything here is a sum over the distinguishable sets of seen cards
``m = (m1, m2, m3)`` with hypergeometric weights.  For a fixed number of seen
cards ``n`` all compositions share the denominators ``C(312, n)`` and
``(312 - n)_8``, so the sums are carried out on integers and turned into a
single Fraction at the end.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .closed_form import ROUND_CARDS, expectation_polynomial, falling, poly_expectation

SHOE = (78, 78, 156)
SHOE_SIZE = sum(SHOE)
MAX_SEEN = SHOE_SIZE - ROUND_CARDS
# multiplicity of each denomination in a single eight-card deck, halved
DECK_SHARE = (1, 1, 2)
CACHE_ENV = "SNACKJACK_CACHE_DIR"
CACHE_NAME = "expectation_table_v1.txt"


# ---------------------------------------------------------------------------
# Composition counting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeckProfile:
    name: str
    caps: tuple[int, ...]

    @property
    def size(self) -> int:
        return sum(self.caps)


PROFILES = {
    "snackjack": DeckProfile("snackjack", SHOE),
    "grayjack": DeckProfile("grayjack", (24, 48, 48, 48, 48, 96)),
    "blackjack6": DeckProfile("blackjack6", (24,) * 9 + (96,)),
    "blackjack1": DeckProfile("blackjack1", (4,) * 9 + (16,)),
}


def composition_count(profile: DeckProfile, n: int) -> int:
    """Number of vectors 0 <= m_i <= cap_i with sum n (inclusion-exclusion over caps)."""
    if not 0 <= n <= profile.size:
        return 0
    d = len(profile.caps)
    groups: dict[int, int] = {}
    for c in profile.caps:
        groups[c] = groups.get(c, 0) + 1
    caps, mults = zip(*sorted(groups.items()))
    total = 0
    for picks in product(*(range(m + 1) for m in mults)):
        excess = sum(t * (c + 1) for t, c in zip(picks, caps))
        if excess > n:
            continue
        ways = math.prod(math.comb(m, t) for m, t in zip(mults, picks))
        total += (-1) ** sum(picks) * ways * math.comb(n - excess + d - 1, d - 1)
    return total


def seen_weight(m: Sequence[int], shoe: Sequence[int] = SHOE) -> Fraction:
    """Hypergeometric probability of having seen exactly ``m``."""
    if any(not 0 <= a <= b for a, b in zip(m, shoe)):
        return Fraction(0)
    num = math.prod(math.comb(b, a) for a, b in zip(m, shoe))
    return Fraction(num, math.comb(sum(shoe), sum(m)))


# ---------------------------------------------------------------------------
# Precomputed expectation table
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _binomials(size: int) -> tuple[int, ...]:
    return tuple(math.comb(size, k) for k in range(size + 1))


class ExpectationTable:
    """Numerators ``P(78 - m1, 78 - m2, 156 - m3)`` for every seen vector.

    ``E = P / (312 - n)_8`` with ``n = m1 + m2 + m3``; entries with fewer than
    eight cards left are absent.
    """

    def __init__(self, rows: list[list[list[int]]]):
        self.rows = rows

    @classmethod
    def build(cls) -> ExpectationTable:
        poly = expectation_polynomial()
        rows = []
        for m1 in range(SHOE[0] + 1):
            row = []
            for m2 in range(SHOE[1] + 1):
                coeffs = poly.coefficients_in_n3(SHOE[0] - m1, SHOE[1] - m2)[::-1]
                col = []
                for m3 in range(SHOE[2] + 1):
                    if m1 + m2 + m3 > MAX_SEEN:
                        break
                    x = SHOE[2] - m3
                    v = 0
                    for c in coeffs:
                        v = v * x + c
                    col.append(v)
                row.append(col)
            rows.append(row)
        return cls(rows)

    def numerator(self, m1: int, m2: int, m3: int) -> int:
        return self.rows[m1][m2][m3]

    def value(self, m1: int, m2: int, m3: int) -> Fraction:
        return Fraction(self.rows[m1][m2][m3], falling(SHOE_SIZE - m1 - m2 - m3, ROUND_CARDS))

    def level(self, n: int) -> Iterator[tuple[int, int, int, int, int]]:
        """Yield (m1, m2, m3, weight, P) for all seen vectors of size n.

        ``weight`` is the integer C(78,m1) C(78,m2) C(156,m3); divide by
        C(312, n) for a probability.
        """
        if not 0 <= n <= MAX_SEEN:
            raise ValueError(f"n must be in 0..{MAX_SEEN}")
        b1, b2, b3 = _binomials(SHOE[0]), _binomials(SHOE[1]), _binomials(SHOE[2])
        for m1 in range(max(0, n - SHOE[1] - SHOE[2]), min(SHOE[0], n) + 1):
            rest = n - m1
            w1 = b1[m1]
            row = self.rows[m1]
            for m2 in range(max(0, rest - SHOE[2]), min(SHOE[1], rest) + 1):
                m3 = rest - m2
                yield m1, m2, m3, w1 * b2[m2] * b3[m3], row[m2][m3]

    def write(self, path: Path) -> None:
        with open(path, "w") as fh:
            fh.write("# m1 m2 m3 numerator denominator\n")
            for m1, row in enumerate(self.rows):
                for m2, col in enumerate(row):
                    for m3, v in enumerate(col):
                        den = falling(SHOE_SIZE - m1 - m2 - m3, ROUND_CARDS)
                        fh.write(f"{m1} {m2} {m3} {v} {den}\n")

    @classmethod
    def read(cls, path: Path) -> ExpectationTable:
        rows = [[[] for _ in range(SHOE[1] + 1)] for _ in range(SHOE[0] + 1)]
        with open(path) as fh:
            for line in fh:
                if line.startswith("#"):
                    continue
                m1, m2, m3, v, den = line.split()
                col = rows[int(m1)][int(m2)]
                if len(col) != int(m3):
                    raise ValueError(f"{path}: entries out of order at {m1} {m2} {m3}")
                col.append(int(v))
        return cls(rows)


_TABLE: Optional[ExpectationTable] = None


def expectation_table() -> ExpectationTable:
    """The shared table, read from the cache directory when one is configured."""
    global _TABLE
    if _TABLE is not None:
        return _TABLE
    cache_dir = os.environ.get(CACHE_ENV)
    path = Path(cache_dir) / CACHE_NAME if cache_dir else None
    if path is not None and path.exists():
        _TABLE = ExpectationTable.read(path)
    else:
        _TABLE = ExpectationTable.build()
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            _TABLE.write(tmp)
            tmp.replace(path)
    return _TABLE


def _denominators(n: int) -> tuple[int, int]:
    return math.comb(SHOE_SIZE, n), falling(SHOE_SIZE - n, ROUND_CARDS)


def _check_level(n: int, low: int = 1) -> None:
    if not low <= n <= MAX_SEEN:
        raise ValueError(f"n must be in {low}..{MAX_SEEN}, got {n}")


# ---------------------------------------------------------------------------
# Fundamental-theorem statistics
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def full_shoe_mean() -> Fraction:
    return poly_expectation(*SHOE)


@dataclass(frozen=True)
class LevelStats:
    mean: Fraction
    mean_pos_excess: Fraction
    variance: Fraction


def ftcc_stats(n: int, nu: Fraction = Fraction(0)) -> LevelStats:
    """Mean, E[(Z_n - nu)^+] and Var(Z_n) after n cards have been seen."""
    _check_level(n, 0)
    nu = Fraction(nu)
    W, D = _denominators(n)
    mu = full_shoe_mean()
    a, b = mu.numerator, mu.denominator
    p, q = nu.numerator, nu.denominator
    s_mean = s_pos = s_var = 0
    for _, _, _, w, P in expectation_table().level(n):
        s_mean += w * P
        x = q * P - p * D
        if x > 0:
            s_pos += w * x
        y = b * P - a * D
        s_var += w * y * y
    return LevelStats(
        Fraction(s_mean, W * D),
        Fraction(s_pos, W * D * q),
        Fraction(s_var, W * D * D * b * b),
    )


@dataclass(frozen=True)
class RedBlack:
    mean_pos: Fraction
    variance: Fraction

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)


def red_black_stats(N: int, n: int) -> RedBlack:
    """Exact positive-part mean and variance of the red-and-black expectation."""
    if N % 2 or not 1 <= n <= N - 1:
        raise ValueError("need even N and 1 <= n <= N-1")
    half = N // 2
    total = sum((n - 2 * k) * math.comb(half, k) * math.comb(half, n - k) for k in range(n // 2 + 1))
    return RedBlack(Fraction(total, (N - n) * math.comb(N, n)), Fraction(n, (N - n) * (N - 1)))


# ---------------------------------------------------------------------------
# Effects of removal and count systems
# ---------------------------------------------------------------------------


def effects_of_removal(
    pack: Sequence[int] = SHOE,
    expectation: Callable[..., Fraction] = poly_expectation,
) -> tuple[Fraction, Fraction, Fraction]:
    """(|pack| - 1) times the change in expectation from removing one card of each value."""
    base = expectation(*pack)
    scale = sum(pack) - 1
    out = []
    for i in range(3):
        less = list(pack)
        less[i] -= 1
        out.append(scale * (expectation(*less) - base))
    return tuple(out)


def strategy_effects_of_removal(table, pack: Sequence[int] = SHOE) -> tuple[Fraction, Fraction, Fraction]:
    """Effects of removal for an arbitrary fixed strategy table, via the solver."""
    from .solver import fixed_strategy_expectation

    return effects_of_removal(pack, lambda *n: fixed_strategy_expectation(n, table))


def limiting_effects_of_removal() -> tuple[Fraction, Fraction, Fraction]:
    """Limit of (N-1) EoR_N as the shoe grows with proportions 1/4, 1/4, 1/2.

    Only the degree-8 part H of the polynomial survives; the limit is minus the
    gradient of H(x) / (x1+x2+x3)^8 at x = (1/4, 1/4, 1/2).
    """
    poly = expectation_polynomial()
    top = {e: c for e, c in poly.terms.items() if sum(e) == ROUND_CARDS}
    x = (Fraction(1, 4), Fraction(1, 4), Fraction(1, 2))
    H = sum(c * x[0] ** i * x[1] ** j * x[2] ** k for (i, j, k), c in top.items())
    out = []
    for axis in range(3):
        dH = Fraction(0)
        for e, c in top.items():
            if e[axis]:
                lowered = list(e)
                lowered[axis] -= 1
                dH += c * e[axis] * math.prod(x[t] ** lowered[t] for t in range(3))
        out.append(-(dH - ROUND_CARDS * H))
    return tuple(out)


@dataclass(frozen=True)
class CountSystem:
    J: tuple[int, int, int]

    @property
    def balanced(self) -> bool:
        return sum(s * j for s, j in zip(DECK_SHARE, self.J)) == 0

    @property
    def level(self) -> int:
        return max(abs(j) for j in self.J)

    @classmethod
    def parse(cls, text: str) -> CountSystem:
        parts = tuple(int(x) for x in text.replace("(", "").replace(")", "").split(","))
        if len(parts) != 3:
            raise ValueError(f"count system needs three values: {text!r}")
        return cls(parts)


DEUCES_MINUS_ACES = CountSystem((-1, 1, 0))
LEVEL_SIX = CountSystem((-4, 6, -1))


@dataclass(frozen=True)
class CountFit:
    rho: float
    gamma: Fraction


@lru_cache(maxsize=None)
def betting_eors() -> tuple[Fraction, Fraction, Fraction]:
    return effects_of_removal()


def count_system_eval(system: CountSystem, eor: Optional[Sequence[Fraction]] = None) -> CountFit:
    """Correlation and regression coefficient of a balanced count against the EoRs."""
    if not system.balanced:
        raise ValueError(f"count system {system.J} is not balanced")
    E = betting_eors() if eor is None else eor
    sej = sum(s * e * j for s, e, j in zip(DECK_SHARE, E, system.J))
    sjj = sum(s * j * j for s, j in zip(DECK_SHARE, system.J))
    see = sum(s * e * e for s, e in zip(DECK_SHARE, E))
    return CountFit(float(sej) / math.sqrt(float(see) * float(sjj)), Fraction(sej) / sjj)


def true_count(m: Sequence[int], system: CountSystem, n: Optional[int] = None) -> Fraction:
    n = sum(m) if n is None else n
    return Fraction(52 * sum(a * j for a, j in zip(m, system.J)), SHOE_SIZE - n)


def betting_threshold(system: CountSystem, nu: Fraction) -> Fraction:
    """True count at which the linear estimate of the expectation reaches ``nu``."""
    return 52 * (Fraction(nu) - full_shoe_mean()) / count_system_eval(system).gamma


# ---------------------------------------------------------------------------
# Estimators, betting efficiency, true-count distribution
# ---------------------------------------------------------------------------


def estimator_l1_distance(n: int, system: Optional[CountSystem] = None) -> Fraction:
    """L1 distance between Z_n and its linear estimate.

    With ``system=None`` the estimate uses the effects of removal themselves;
    otherwise it is mu + gamma * (running count) / (312 - n).
    """
    _check_level(n)
    if system is None:
        coeff = betting_eors()
    else:
        g = count_system_eval(system).gamma
        coeff = tuple(g * j for j in system.J)
    mu = full_shoe_mean()
    K = math.lcm(mu.denominator, *(c.denominator for c in coeff))
    cK = [int(c * K) for c in coeff]
    W, D = _denominators(n)
    left = SHOE_SIZE - n
    base = int(mu * K) * left
    total = 0
    for m1, m2, m3, w, P in expectation_table().level(n):
        est = base + m1 * cK[0] + m2 * cK[1] + m3 * cK[2]
        total += w * abs(P * K * left - D * est)
    return Fraction(total, W * D * K * left)


class UndefinedEfficiency(ZeroDivisionError):
    pass


def _count_cut(system: CountSystem, nu: Fraction, n: int) -> Callable[[int], bool]:
    """Predicate on the running count: does the linear estimate reach nu?"""
    fit = count_system_eval(system)
    t = (Fraction(nu) - full_shoe_mean()) * (SHOE_SIZE - n) / fit.gamma
    if fit.gamma > 0:
        cut = math.ceil(t)
        return lambda rc: rc >= cut
    cut = math.floor(t)
    return lambda rc: rc <= cut


def betting_efficiency(n: int, system: CountSystem, nu: Fraction) -> Fraction:
    _check_level(n)
    nu = Fraction(nu)
    p, q = nu.numerator, nu.denominator
    W, D = _denominators(n)
    bet = _count_cut(system, nu, n)
    J1, J2, J3 = system.J
    num = den = 0
    for m1, m2, m3, w, P in expectation_table().level(n):
        x = q * P - p * D
        if x > 0:
            den += w * x
        if bet(m1 * J1 + m2 * J2 + m3 * J3):
            num += w * x
    if den == 0:
        raise UndefinedEfficiency(f"E[(Z_{n} - nu)^+] = 0")
    return Fraction(num, den)


def aggregate_betting_efficiency(system: CountSystem, nu: Fraction, ns: Iterable[int] = range(2, 234)) -> Fraction:
    ns = list(ns)
    return sum((betting_efficiency(n, system, nu) for n in ns), Fraction(0)) / len(ns)


def rounded(num: int, den: int) -> tuple[tuple[int, Fraction], ...]:
    """Round num/den to the nearest integer, splitting exact halves evenly."""
    top = 2 * num + den
    k, r = divmod(top, 2 * den)
    if r == 0:
        return ((k - 1, Fraction(1, 2)), (k, Fraction(1, 2)))
    return ((k, Fraction(1)),)


def _tc_buckets(n: int, running: int) -> tuple[tuple[int, Fraction], ...]:
    return rounded(52 * running, SHOE_SIZE - n)


def rounded_tc_distribution(n: int, system: CountSystem = DEUCES_MINUS_ACES) -> dict[int, Fraction]:
    _check_level(n, 0)
    W, _ = _denominators(n)
    acc: dict[int, Fraction] = {}
    J1, J2, J3 = system.J
    for m1, m2, m3, w, _ in expectation_table().level(n):
        for k, f in _tc_buckets(n, m1 * J1 + m2 * J2 + m3 * J3):
            acc[k] = acc.get(k, 0) + w * f
    return {k: Fraction(v) / W for k, v in sorted(acc.items())}


@dataclass(frozen=True)
class BucketEV:
    ev: Fraction
    prob: Fraction


def conditional_ev_by_tc(n: int, nu: Fraction = Fraction(0), system: CountSystem = DEUCES_MINUS_ACES) -> dict[int, BucketEV]:
    """E[Z_n - nu | [TC_n] = k] and P([TC_n] = k) for every reachable k."""
    _check_level(n, 0)
    nu = Fraction(nu)
    p, q = nu.numerator, nu.denominator
    W, D = _denominators(n)
    mass: dict[int, Fraction] = {}
    gain: dict[int, Fraction] = {}
    J1, J2, J3 = system.J
    for m1, m2, m3, w, P in expectation_table().level(n):
        x = q * P - p * D
        for k, f in _tc_buckets(n, m1 * J1 + m2 * J2 + m3 * J3):
            mass[k] = mass.get(k, 0) + w * f
            gain[k] = gain.get(k, 0) + w * x * f
    return {k: BucketEV(Fraction(gain[k]) / (q * D * mass[k]), Fraction(mass[k]) / W) for k in sorted(mass) if mass[k]}


def conditional_ev_given_tc(n: int, k: int, nu: Fraction = Fraction(0), system: CountSystem = DEUCES_MINUS_ACES) -> BucketEV:
    table = conditional_ev_by_tc(n, nu, system)
    if k not in table:
        raise ValueError(f"[TC_{n}] = {k} has probability zero")
    return table[k]


def clamp_bet(k: int, low: int = 1, high: int = 6) -> int:
    return max(low, min(k, high))


def bet_spread_profit(
    n: int, nu: Fraction = Fraction(0), min_bet: int = 1, max_bet: int = 6, system: CountSystem = DEUCES_MINUS_ACES
) -> Fraction:
    """E[max(min_bet, min([TC_n], max_bet)) (Z_n - nu)]."""
    _check_level(n, 0)
    if min_bet > max_bet:
        raise ValueError("min_bet exceeds max_bet")
    nu = Fraction(nu)
    p, q = nu.numerator, nu.denominator
    W, D = _denominators(n)
    J1, J2, J3 = system.J
    left = SHOE_SIZE - n
    total = 0
    for m1, m2, m3, w, P in expectation_table().level(n):
        # twice the bet, so exact halves stay integral
        top = 2 * 52 * (m1 * J1 + m2 * J2 + m3 * J3) + left
        k, r = divmod(top, 2 * left)
        if r == 0:
            units2 = clamp_bet(k - 1, min_bet, max_bet) + clamp_bet(k, min_bet, max_bet)
        else:
            units2 = 2 * clamp_bet(k, min_bet, max_bet)
        total += w * (q * P - p * D) * units2
    return Fraction(total, 2 * q * D * W)


def average_spread_profit(last: int, nu: Fraction = Fraction(0), first: int = 0, **kw) -> Fraction:
    ns = range(first, last + 1)
    return sum((bet_spread_profit(n, nu, **kw) for n in ns), Fraction(0)) / len(ns)


def local_maxima(pmf: dict[int, Fraction]) -> list[int]:
    """Support points strictly above both neighbours (missing neighbours count as 0)."""
    ks = sorted(pmf)
    out = []
    for k in ks:
        v = pmf[k]
        if v > pmf.get(k - 1, 0) and v > pmf.get(k + 1, 0):
            out.append(k)
    return out


def is_bimodal(n: int, system: CountSystem = DEUCES_MINUS_ACES) -> bool:
    """Whether the rounded-TC pmf has its peak away from zero.

    For a symmetric pmf that means two modes at +-k.  Counting strict local
    maxima instead would also flag the ragged tails of late-shoe pmfs, where
    integer rounding leaves gaps between reachable true counts.
    """
    pmf = rounded_tc_distribution(n, system)
    return pmf.get(0, 0) < max(pmf.values())


# ---------------------------------------------------------------------------
# Per-level report and parallel passes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelRow:
    n: int
    mean: Fraction
    mean_pos: Fraction
    variance: Fraction
    be_level1: Optional[Fraction]
    be_level6: Optional[Fraction]
    spread_profit: Fraction


LEVEL_COLUMNS = ("n", "mean", "mean_pos", "variance", "be_level1", "be_level6", "spread_profit")


def level_row(n: int, nu: Fraction = Fraction(0), min_bet: int = 1, max_bet: int = 6) -> LevelRow:
    stats = ftcc_stats(n, nu)

    def be(system: CountSystem) -> Optional[Fraction]:
        try:
            return betting_efficiency(n, system, nu)
        except UndefinedEfficiency:
            return None

    return LevelRow(
        n, stats.mean, stats.mean_pos_excess, stats.variance,
        be(DEUCES_MINUS_ACES), be(LEVEL_SIX), bet_spread_profit(n, nu, min_bet, max_bet),
    )


def map_levels(fn: Callable[[int], object], ns: Iterable[int], workers: int = 1) -> list:
    """Apply ``fn`` to each n, in a process pool when ``workers > 1``.

    Results come back in the order of ``ns`` and are exact, so the output does
    not depend on the worker count.  ``fn`` must be picklable.
    """
    ns = list(ns)
    if workers <= 1 or len(ns) < 2:
        return [fn(n) for n in ns]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers, initializer=expectation_table) as pool:
        return list(pool.map(fn, ns, chunksize=max(1, len(ns) // (4 * workers))))
