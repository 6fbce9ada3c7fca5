"""Closed-form expectations under the fixed 39-deck basic strategy.

Two kinds of formula live here, both shipped as data files:

* a trivariate polynomial ``P`` with ``E(n) = P(n) / (|n|)_8`` for the
  expectation of a full round from a shoe holding ``n`` cards;
* rational functions of the post-deal composition for the three hands whose
  departures are worth studying: pair of treys (stand minus split), hard 5
  (stand minus hit) and soft 6 (stand, hit and double values).

A polynomial refit from exact solver output is provided so the shipped
coefficients can be checked rather than trusted.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from importlib import resources
from itertools import product
from math import comb, factorial
from typing import Callable, Mapping

from .core import Hand

POLYNOMIAL_FILE = "expectation_polynomial.txt"
POLYNOMIAL_SHA256 = "ec90d8fad5405dac837318e23662a250d59ed067aafdeec887a831f5ba2056b5"
FORMULA_FILE = "departure_formulas.json"
ROUND_CARDS = 8


class DomainError(ValueError):
    pass


def falling(x: int, k: int) -> int:
    """Falling factorial (x)_k = x (x-1) ... (x-k+1)."""
    out = 1
    for i in range(k):
        out *= x - i
    return out


@dataclass(frozen=True)
class TrivariatePolynomial:
    terms: Mapping[tuple[int, int, int], int]

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def __len__(self) -> int:
        return len(self.terms)

    def __call__(self, n1, n2, n3):
        return self.evaluate(n1, n2, n3)

    def evaluate(self, n1, n2, n3):
        """Exact value; works for ints, Fractions and numpy integer arrays alike."""
        total = 0
        for i, by_j in self._nested.items():
            acc_i = 0
            for j, by_k in by_j.items():
                acc_j = 0
                for k, c in by_k.items():
                    acc_j = acc_j + c * n3**k
                acc_i = acc_i + acc_j * n2**j
            total = total + acc_i * n1**i
        return total

    @cached_property
    def _nested(self) -> dict:
        nested: dict = {}
        for (i, j, k), c in self.terms.items():
            nested.setdefault(i, {}).setdefault(j, {})[k] = c
        return nested

    def coefficients_in_n3(self, n1: int, n2: int) -> list[int]:
        """Coefficients c_k of P(n1, n2, x) = sum c_k x^k."""
        deg = max((e[2] for e in self.terms), default=0)
        out = [0] * (deg + 1)
        for (i, j, k), c in self.terms.items():
            out[k] += c * n1**i * n2**j
        return out

    def to_text(self) -> str:
        keys = sorted(self.terms, key=lambda e: (sum(e), e))
        return "".join(f"{i} {j} {k} {self.terms[(i, j, k)]}\n" for i, j, k in keys)

    @classmethod
    def from_text(cls, text: str) -> TrivariatePolynomial:
        terms = {}
        for line in text.splitlines():
            line = line.strip().replace("(", "").replace(")", "")
            if not line or line.startswith("#"):
                continue
            i, j, k, c = line.split()
            terms[(int(i), int(j), int(k))] = int(c)
        return cls(terms)

    def __mul__(self, other: TrivariatePolynomial) -> TrivariatePolynomial:
        out: dict = {}
        for (a, b, c), x in self.terms.items():
            for (d, e, f), y in other.terms.items():
                key = (a + d, b + e, c + f)
                out[key] = out.get(key, 0) + x * y
        return TrivariatePolynomial({k: v for k, v in out.items() if v})

    def __add__(self, other: TrivariatePolynomial) -> TrivariatePolynomial:
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return TrivariatePolynomial({k: v for k, v in out.items() if v})

    def __neg__(self) -> TrivariatePolynomial:
        return TrivariatePolynomial({k: -v for k, v in self.terms.items()})

    def __sub__(self, other: TrivariatePolynomial) -> TrivariatePolynomial:
        return self + (-other)


def linear(a: int, b: int, c: int, const: int) -> TrivariatePolynomial:
    terms = {(1, 0, 0): a, (0, 1, 0): b, (0, 0, 1): c, (0, 0, 0): const}
    return TrivariatePolynomial({k: v for k, v in terms.items() if v})


ONE = TrivariatePolynomial({(0, 0, 0): 1})


def _read_data(name: str) -> str:
    return resources.files("snackjack.data").joinpath(name).read_text()


@lru_cache(maxsize=None)
def expectation_polynomial() -> TrivariatePolynomial:
    text = _read_data(POLYNOMIAL_FILE)
    digest = hashlib.sha256(text.encode()).hexdigest()
    if digest != POLYNOMIAL_SHA256:
        raise ValueError(f"{POLYNOMIAL_FILE} checksum mismatch: {digest}")
    return TrivariatePolynomial.from_text(text)


def poly_expectation(n1: int, n2: int, n3: int) -> Fraction:
    """Basic-strategy expectation of a round dealt from (n1, n2, n3)."""
    size = n1 + n2 + n3
    if min(n1, n2, n3) < 0 or size < ROUND_CARDS:
        raise DomainError(f"need at least {ROUND_CARDS} cards, got {(n1, n2, n3)}")
    return Fraction(expectation_polynomial()(n1, n2, n3), falling(size, ROUND_CARDS))


def deck_expectation_formula(d: int) -> Fraction:
    """Closed form of E(2d, 2d, 4d); agrees with optimal play once d >= 9."""
    num = -630 + 4017 * d - 2673 * d**2 - 32132 * d**3 + 92560 * d**4 - 97144 * d**5 + 36224 * d**6
    return Fraction(num, falling(8 * d - 1, 3) * falling(8 * d - 5, 3))


# ---------------------------------------------------------------------------
# Refit by multivariate Newton interpolation
# ---------------------------------------------------------------------------


def _falling_coefficients(m: int) -> list[int]:
    """Coefficients of x(x-1)...(x-m+1) in powers of x (signed Stirling numbers)."""
    coeffs = [1]
    for i in range(m):
        nxt = [0] * (len(coeffs) + 1)
        for p, c in enumerate(coeffs):
            nxt[p + 1] += c
            nxt[p] -= i * c
        coeffs = nxt
    return coeffs


def _shifted_binomial(m: int, shift: int) -> list[Fraction]:
    """Coefficients in powers of n of C(n - shift, m)."""
    base = _falling_coefficients(m)
    out = [Fraction(0)] * (m + 1)
    for p, c in enumerate(base):
        # (n - shift)^p expanded
        for q in range(p + 1):
            out[q] += Fraction(c * comb(p, q) * (-shift) ** (p - q), factorial(m))
    return out


def fit_expectation_polynomial(
    expectation: Callable[[tuple[int, int, int]], Fraction],
    degree: int = ROUND_CARDS,
    offset: tuple[int, int, int] = (0, 0, ROUND_CARDS),
) -> TrivariatePolynomial:
    """Recover ``P`` from exact expectations on a simplex lattice.

    ``expectation`` maps a composition to its exact value; it is called on the
    C(degree+3, 3) points ``offset + (i, j, k)`` with i+j+k <= degree.  The
    numerator ``E * (|n|)_8`` is interpolated by forward differences and
    converted to monomials.
    """
    points = [(i, j, k) for i in range(degree + 1) for j in range(degree + 1 - i) for k in range(degree + 1 - i - j)]
    values = {}
    for p in points:
        n = tuple(o + x for o, x in zip(offset, p))
        v = expectation(n) * falling(sum(n), ROUND_CARDS)
        if v.denominator != 1:
            raise ValueError(f"numerator at {n} is not an integer: {v}")
        values[p] = int(v)
    # forward differences along each axis in turn
    diff = dict(values)
    for axis in range(3):
        diff = _difference_along(diff, axis)
    poly: dict = {}
    for alpha, d in diff.items():
        if d == 0:
            continue
        factors = [_shifted_binomial(alpha[a], offset[a]) for a in range(3)]
        for (p, cp), (q, cq), (r, cr) in product(*(list(enumerate(f)) for f in factors)):
            c = d * cp * cq * cr
            if c:
                poly[(p, q, r)] = poly.get((p, q, r), 0) + c
    terms = {}
    for e, c in poly.items():
        if c:
            if c.denominator != 1:
                raise ValueError(f"non-integer coefficient {c} at {e}")
            terms[e] = int(c)
    return TrivariatePolynomial(terms)


def _difference_along(table: dict, axis: int) -> dict:
    """Replace f by its forward-difference coefficients along one axis."""
    out = {}
    lines: dict = {}
    for p, v in table.items():
        key = p[:axis] + p[axis + 1 :]
        lines.setdefault(key, {})[p[axis]] = v
    for key, line in lines.items():
        vals = [line[i] for i in range(len(line))]
        coeffs = []
        cur = vals
        while cur:
            coeffs.append(cur[0])
            cur = [b - a for a, b in zip(cur, cur[1:])]
        for i, c in enumerate(coeffs):
            out[key[:axis] + (i,) + key[axis:]] = c
    return out


# ---------------------------------------------------------------------------
# Departure formulas in the post-deal composition
# ---------------------------------------------------------------------------

MIN_CARDS = {1: 4, 2: 4, 3: 3}


@dataclass(frozen=True)
class SituationFormula:
    """One closed form: an action value or a difference of two action values.

    ``quantity`` is "stand", "hit", "double" or a difference such as
    "stand-split".  The variables are the counts left once the hand and the
    upcard are out.
    """

    hand: Hand
    upcard: int
    quantity: str
    numerator: TrivariatePolynomial
    linear_factors: tuple[tuple[int, int, int, int], ...]
    falling_shift: int
    falling_length: int

    def denominator(self, n1: int, n2: int, n3: int) -> int:
        den = falling(n1 + n2 + n3 - self.falling_shift, self.falling_length)
        for a, b, c, k in self.linear_factors:
            den *= a * n1 + b * n2 + c * n3 + k
        return den

    def in_domain(self, n1: int, n2: int, n3: int) -> bool:
        if min(n1, n2, n3) < 0 or n1 + n2 + n3 < MIN_CARDS[self.upcard]:
            return False
        if self.upcard == 1 and n1 + n2 < 1:
            return False
        if self.upcard == 3 and n2 + n3 < 1:
            return False
        return self.denominator(n1, n2, n3) != 0

    def __call__(self, n1: int, n2: int, n3: int) -> Fraction:
        if not self.in_domain(n1, n2, n3):
            raise DomainError(f"{self.label} undefined at {(n1, n2, n3)}")
        return Fraction(self.numerator(n1, n2, n3), self.denominator(n1, n2, n3))

    @property
    def label(self) -> str:
        return f"{self.hand.label()} v{self.upcard} {self.quantity}"

    def denominator_poly(self) -> TrivariatePolynomial:
        out = ONE
        for a, b, c, k in self.linear_factors:
            out = out * linear(a, b, c, k)
        for i in range(self.falling_length):
            out = out * linear(1, 1, 1, -self.falling_shift - i)
        return out

    def extend_to(self, length: int) -> SituationFormula:
        """Same value written over a longer falling factorial."""
        if length < self.falling_length:
            raise ValueError("cannot shorten a denominator")
        num = self.numerator
        for i in range(self.falling_length, length):
            num = num * linear(1, 1, 1, -self.falling_shift - i)
        return SituationFormula(self.hand, self.upcard, self.quantity, num, self.linear_factors, self.falling_shift, length)

    def minus(self, other: SituationFormula) -> SituationFormula:
        """Difference of two values sharing a denominator shape."""
        if (self.hand, self.upcard, self.linear_factors, self.falling_shift) != (
            other.hand,
            other.upcard,
            other.linear_factors,
            other.falling_shift,
        ):
            raise ValueError("denominators are not compatible")
        length = max(self.falling_length, other.falling_length)
        a, b = self.extend_to(length), other.extend_to(length)
        return SituationFormula(
            self.hand, self.upcard, f"{self.quantity}-{other.quantity}", a.numerator - b.numerator,
            self.linear_factors, self.falling_shift, length,
        )


@lru_cache(maxsize=None)
def situation_formulas() -> dict[tuple[Hand, int, str], SituationFormula]:
    out = {}
    for item in json.loads(_read_data(FORMULA_FILE)):
        hand = Hand(*item["hand"])
        falling_part = [f["falling"] for f in item["denominator"] if "falling" in f]
        linear_part = tuple(tuple(f["linear"]) for f in item["denominator"] if "linear" in f)
        if falling_part:
            shift, length = falling_part[0]
        else:
            # a bare (|n| - s) factor is a falling factorial of length one
            (lin,) = [f for f in linear_part if f[:3] == (1, 1, 1)]
            linear_part = tuple(f for f in linear_part if f[:3] != (1, 1, 1))
            shift, length = -lin[3], 1
        terms = {(i, j, k): c for i, j, k, c in item["numerator"]}
        f = SituationFormula(hand, item["upcard"], item["quantity"], TrivariatePolynomial(terms), linear_part, shift, length)
        out[(hand, f.upcard, f.quantity)] = f
    return out


def situation_formula(hand, upcard: int, quantity: str) -> SituationFormula:
    """Look up or derive the formula for ``quantity`` (e.g. "hit-double")."""
    hand = Hand(*hand)
    table = situation_formulas()
    key = (hand, upcard, quantity)
    if key in table:
        return table[key]
    if "-" in quantity:
        a, b = quantity.split("-")
        if (hand, upcard, b + "-" + a) in table:
            f = table[(hand, upcard, b + "-" + a)]
            return SituationFormula(hand, upcard, quantity, -f.numerator, f.linear_factors, f.falling_shift, f.falling_length)
        if (hand, upcard, a) in table and (hand, upcard, b) in table:
            return table[(hand, upcard, a)].minus(table[(hand, upcard, b)])
    raise KeyError(f"no closed form for {hand.label()} v{upcard} {quantity}")


def situation_value(formula: SituationFormula, n1: int, n2: int, n3: int) -> Fraction:
    return formula(n1, n2, n3)
