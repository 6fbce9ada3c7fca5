"""Acceptance suite: one test per numbered criterion, each at its stated tolerance.

Every test prints a PASS or FAIL verdict line; the lines are repeated in the
terminal summary.  Run alone with ``pytest tests/test_acceptance.py -s``.
"""

from __future__ import annotations

import random
import subprocess
import sys
import time
from contextlib import contextmanager
from fractions import Fraction as F
from pathlib import Path

import pytest

from helpers import (
    ACCEPTANCE_LINES,
    brute_force_single_deck,
    formula_oracle,
    load_single_deck_rows,
    parse_hand,
    parse_value,
    within_dp,
    within_sig,
)
from snackjack.closed_form import poly_expectation, situation_formulas
from snackjack.core import Pack
from snackjack.counting import (
    DEUCES_MINUS_ACES,
    LEVEL_SIX,
    MAX_SEEN,
    PROFILES,
    aggregate_betting_efficiency,
    average_spread_profit,
    betting_efficiency,
    betting_eors,
    composition_count,
    conditional_ev_by_tc,
    count_system_eval,
    estimator_l1_distance,
    is_bimodal,
    rounded_tc_distribution,
)
from snackjack.dealer import mimic_dealer_expectation
from snackjack.solver import (
    EVEN_MONEY,
    Action,
    basic_strategy,
    fixed_strategy_expectation,
    infinite_deck_expectation,
    overall_expectation,
)
from snackjack.variation import (
    average_approx_ev,
    average_realized_ev,
    find_situation,
    strategic_eor,
    table10,
)

TESTS = Path(__file__).parent
NU = F(1, 7)


@contextmanager
def criterion(k: int, title: str, budget: float | None = None):
    """Record a verdict line for criterion ``k``; a blown time budget is a failure."""
    start = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - start
        if budget is not None and elapsed > budget:
            raise AssertionError(f"took {elapsed:.1f}s, budget {budget:g}s")
    except BaseException as exc:
        line = f"FAIL criterion {k}: {title} ({type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''})"
        ACCEPTANCE_LINES.append((k, line))
        print(line)
        raise
    line = f"PASS criterion {k}: {title} [{elapsed:.1f}s]"
    ACCEPTANCE_LINES.append((k, line))
    print(line)


# ---------------------------------------------------------------------------
# 1. exact fractions
# ---------------------------------------------------------------------------

SHOE_MU = F(220204549189, 1580689046285)
BETTING_EOR = (F(-849581527, 1793859330), F(3539587453, 5082601435), F(-6794638759, 60991217220))
GAMMAS = {DEUCES_MINUS_ACES: F(35680410677, 60991217220), LEVEL_SIX: F(63997110301, 548920954980)}

# (hand, upcard, alternative): mu, gamma, index, index shift, (E1, E2, E3)
STRATEGIC = {
    ((0, 0, 2), 1, "S"): (F(-60451, 2426835), F(-41415529232, 22945724925), F(-7430334665, 10353882308), F(0),
                          (F(78498676, 49345645), F(-895474426, 444110805), F(33220264, 148036935))),
    ((0, 0, 2), 2, "S"): (F(-1452413, 9676026), F(-328326627706, 228717064575), F(-892616719475, 164163313853), F(0),
                          (F(318420487, 295118793), F(-2651203088, 1475593965), F(519211999, 1475593965))),
    ((0, 0, 2), 3, "S"): (F(-229736, 1820203), F(-835778884, 555776529), F(-70217200248, 16088743517), F(2028, 115),
                          (F(5425240, 3616767), F(-209017702, 138642735), F(24804, 46214245))),
    ((1, 1, 0), 1, "D"): (F(-452457716, 3750587379), F(415321501405, 283193701578), F(136790636362848, 31979755608185), F(0),
                          (F(-110244809177, 140671381176), F(104264078, 48708927), F(-293864077, 438380343))),
    ((1, 1, 0), 3, "H"): (F(-191, 70992), F(-146742675541, 153885826548), F(-21529102283, 146742675541), F(52, 3),
                          (F(213948581, 332366796), F(-1261124737, 997100388), F(170145283, 553944660))),
}

ACTION_COLUMNS = {"stand": Action.STAND, "hit": Action.HIT, "double": Action.DOUBLE, "split": Action.SPLIT}


def test_criterion_1_exact_fractions():
    with criterion(1, "exact-fraction goldens (single-deck table, shoe mu, EoRs, gammas, departure fractions)", 5):
        single = Pack(2, 2, 4)
        assert overall_expectation(single) == F(27, 140)
        table = basic_strategy(single)
        cells = 0
        for row in load_single_deck_rows():
            entry = table[(parse_hand(row["hand"]), int(row["upcard"]))]
            for col, action in ACTION_COLUMNS.items():
                assert entry.values.get(action) == parse_value(row[col]), (row["hand"], row["upcard"], col)
                cells += bool(row[col])
        assert cells == 87
        assert poly_expectation(78, 78, 156) == SHOE_MU
        assert betting_eors() == BETTING_EOR
        for system, gamma in GAMMAS.items():
            assert count_system_eval(system).gamma == gamma
        for (hand, u, alt), (mu, gamma, index, shift, E) in STRATEGIC.items():
            eor = strategic_eor(find_situation(hand, u, alt))
            assert (eor.mu, eor.gamma, eor.index, eor.index_shift, eor.E) == (mu, gamma, index, shift, E)


# ---------------------------------------------------------------------------
# 2. expectation by number of decks
# ---------------------------------------------------------------------------

DECK_EV = {
    1: 0.192857, 2: 0.163144, 3: 0.154360, 4: 0.150073, 5: 0.147500, 6: 0.145784,
    7: 0.144558, 8: 0.143639, 9: 0.143031, 10: 0.142550, 11: 0.142156, 12: 0.141827,
    13: 0.141548, 26: 0.139871, 39: 0.139309, 52: 0.139028,
}


def test_criterion_2_expectation_by_decks():
    with criterion(2, "basic-strategy expectation for 1..13, 26, 39, 52 and infinitely many decks, 6 dp", 30):
        for d, published in DECK_EV.items():
            assert within_dp(overall_expectation(Pack.decks(d)), published, 6), d
        assert within_dp(infinite_deck_expectation(), 0.138184, 6)


# ---------------------------------------------------------------------------
# 3. cross-game statistics
# ---------------------------------------------------------------------------


def test_criterion_3_cross_game_statistics():
    with criterion(3, "mimic-the-dealer and even-money variant statistics", 30):
        one = mimic_dealer_expectation(Pack.decks(1))
        assert within_sig(one.ev, 0.0952381, 6)
        assert one.p_double_bust == F(2, 105)
        assert one.p_winning_natural == F(8, 35)
        assert within_sig(mimic_dealer_expectation(Pack.decks(39)).ev, 0.0720903, 6)
        for d, pct in [(1, 3.10), (2, -0.0959), (3, -0.713), (39, -1.73)]:
            assert within_sig(100 * overall_expectation(Pack.decks(d), EVEN_MONEY), pct, 3), d


# ---------------------------------------------------------------------------
# 4. composition counts
# ---------------------------------------------------------------------------


def test_criterion_4_composition_counts():
    with criterion(4, "composition counts and their totals", 1):
        for name, n, at_n, over_all in [
            ("snackjack", 156, 6241, 979837),
            ("grayjack", 156, 130046539, 13979642425),
            ("blackjack6", 156, 3726284230655, 370025634765625),
            ("blackjack1", 26, 1868755, 33203125),
        ]:
            p = PROFILES[name]
            assert composition_count(p, n) == at_n
            assert sum(composition_count(p, k) for k in range(p.size + 1)) == over_all


# ---------------------------------------------------------------------------
# 5. oracle equivalence
# ---------------------------------------------------------------------------


def _grid(low: int = 8, high: int = 24):
    for size in range(low, high + 1):
        for n1 in range(size + 1):
            for n2 in range(size + 1 - n1):
                yield n1, n2, size - n1 - n2


def _random_larger(rng: random.Random, count: int, caps=(78, 78, 156), low: int = 25):
    out = []
    while len(out) < count:
        p = tuple(rng.randint(0, c) for c in caps)
        if sum(p) >= low:
            out.append(p)
    return out


@pytest.mark.slow
def test_criterion_5_oracle_equivalence(bs39):
    with criterion(5, "polynomial and closed forms equal the solver; single deck equals ordered-deal brute force", 600):
        rng = random.Random(20260415)
        table39 = basic_strategy(Pack.decks(39))
        packs = list(_grid()) + _random_larger(rng, 1000)
        for p in packs:
            assert poly_expectation(*p) == fixed_strategy_expectation(Pack(*p), table39), p

        # closed forms are in post-deal counts; cap the draws so the full pack fits the shoe
        posts = list(_grid()) + _random_larger(rng, 1000, caps=(76, 76, 154))
        checked = 0
        for f in situation_formulas().values():
            for p in posts:
                if f.in_domain(*p):
                    assert f(*p) == formula_oracle(f, p, bs39), (f.label, p)
                    checked += 1
        assert checked > 15 * 2500

        assert brute_force_single_deck(basic_strategy(Pack(2, 2, 4))) == F(27, 140)


# ---------------------------------------------------------------------------
# 6. estimator distances and betting efficiency
# ---------------------------------------------------------------------------

# n: L1 distance with the EoR estimate, the level-six count, deuces minus aces;
# then the percentage increases of the two counts over the EoR estimate
L1_TABLE = {
    1: (0.0, 0.00001667, 0.0003582, None, None),
    2: (0.000006083, 0.00001886, 0.0003614, 210.1, 5842),
    3: (0.00001110, 0.00002510, 0.0005390, 126.1, 4755),
    4: (0.00001631, 0.00002843, 0.0005442, 74.27, 3236),
    26: (0.0001120, 0.0001243, 0.001515, 11.05, 1253),
    52: (0.0002480, 0.0002607, 0.002257, 5.121, 810.1),
    78: (0.0004141, 0.0004275, 0.002919, 3.245, 605.0),
    104: (0.0006225, 0.0006364, 0.003579, 2.233, 474.9),
    130: (0.0008911, 0.0009063, 0.004282, 1.709, 380.5),
    156: (0.001249, 0.001265, 0.005072, 1.332, 306.1),
    182: (0.001754, 0.001771, 0.006013, 0.9314, 242.8),
    208: (0.002514, 0.002536, 0.007220, 0.8654, 187.1),
    234: (0.003788, 0.003821, 0.008960, 0.8801, 136.5),
    260: (0.006394, 0.006433, 0.01197, 0.6069, 87.14),
    286: (0.01457, 0.01466, 0.02013, 0.6154, 38.22),
    301: (0.04268, 0.04286, 0.04682, 0.4175, 9.704),
    302: (0.04954, 0.04973, 0.05239, 0.3965, 5.753),
    303: (0.05917, 0.05912, 0.06177, None, 4.409),
    304: (0.06990, 0.07004, 0.07335, 0.1882, 4.929),
}

# n: efficiency of the level-six count, of deuces minus aces
EFFICIENCY_TABLE = {
    26: (0.999989, 0.939475), 52: (0.998986, 0.948355), 78: (0.999497, 0.950998),
    104: (0.998716, 0.951662), 130: (0.998168, 0.951270), 156: (0.998069, 0.954986),
    182: (0.997312, 0.956942), 208: (0.995350, 0.957795), 234: (0.992589, 0.957591),
    260: (0.991316, 0.956100), 286: (0.986838, 0.942744), 301: (0.950243, 0.895330),
    302: (0.953991, 0.892247), 303: (0.954517, 0.889094), 304: (0.892340, 0.862632),
}


def test_criterion_6_distances_and_efficiency():
    with criterion(6, "estimator L1 distances and betting efficiencies (4 s.f.), aggregate efficiency (4 dp)"):
        for n, (a, b, c, inc_b, inc_c) in L1_TABLE.items():
            da = estimator_l1_distance(n)
            db = estimator_l1_distance(n, LEVEL_SIX)
            dc = estimator_l1_distance(n, DEUCES_MINUS_ACES)
            assert within_sig(da, a, 4) and within_sig(db, b, 4) and within_sig(dc, c, 4), n
            if inc_b is not None:
                assert within_sig(100 * (db - da) / da, inc_b, 4), n
            else:
                assert da == 0 or db < da
            if inc_c is not None:
                assert within_sig(100 * (dc - da) / da, inc_c, 4), n
        for n, (six, one) in EFFICIENCY_TABLE.items():
            assert within_sig(betting_efficiency(n, LEVEL_SIX, NU), six, 4), n
            assert within_sig(betting_efficiency(n, DEUCES_MINUS_ACES, NU), one, 4), n
        assert within_dp(aggregate_betting_efficiency(LEVEL_SIX, NU), 0.9982, 4)
        assert within_dp(aggregate_betting_efficiency(DEUCES_MINUS_ACES, NU), 0.9508, 4)


# ---------------------------------------------------------------------------
# 7. true-count conditional expectations
# ---------------------------------------------------------------------------

TC_LEVELS = (78, 156, 234)
TC_EV = {
    -6: (-0.0688, -0.0724, -0.0742), -5: (-0.0585, -0.0606, -0.0614), -4: (-0.0463, -0.0489, -0.0497),
    -3: (-0.0361, -0.0373, -0.0372), -2: (-0.0246, -0.0257, -0.0254), -1: (-0.0143, -0.0143, -0.0134),
    0: (-0.00352, -0.00311, -0.00183),
    1: (0.00723, 0.00791, 0.00950), 2: (0.0175, 0.0187, 0.0207), 3: (0.0288, 0.0292, 0.0312),
    4: (0.0387, 0.0395, 0.0418), 5: (0.0506, 0.0494, 0.0513), 6: (0.0606, 0.0590, 0.0611),
}
TC_PROB = {
    -6: (0.00000221, 0.00320, 0.0186), -5: (0.0000640, 0.0112, 0.0569), -4: (0.00195, 0.0312, 0.0400),
    -3: (0.0146, 0.0688, 0.104), -2: (0.0984, 0.121, 0.0631), -1: (0.207, 0.169, 0.141),
    0: (0.355, 0.189, 0.0735),
}


def test_criterion_7_true_count_table():
    with criterion(7, "conditional EV by rounded true count (3 s.f.), pmf symmetry, bimodal window"):
        for col, n in enumerate(TC_LEVELS):
            table = conditional_ev_by_tc(n, NU)
            for k, evs in TC_EV.items():
                assert within_sig(table[k].ev, evs[col], 3), (n, k)
            for k, probs in TC_PROB.items():
                assert within_sig(table[k].prob, probs[col], 3), (n, k)
        for n in range(MAX_SEEN + 1):
            pmf = rounded_tc_distribution(n)
            assert all(pmf[k] == pmf.get(-k) for k in pmf), n
        bimodal = [n for n in range(MAX_SEEN + 1) if is_bimodal(n)]
        assert bimodal == list(range(105, 139)) + list(range(209, 256))


# ---------------------------------------------------------------------------
# 8. bet-spread profit
# ---------------------------------------------------------------------------


def test_criterion_8_spread_profit():
    with criterion(8, "1-6 spread profit averaged over the first 3/4 and 5/6 of the shoe, 6 dp"):
        assert within_dp(average_spread_profit(233, NU, first=0), 0.00779463, 6)
        assert within_dp(average_spread_profit(259, NU, first=0), 0.0123218, 6)


# ---------------------------------------------------------------------------
# 9. strategy departures
# ---------------------------------------------------------------------------

# 10^6 x average EV, correlation, index number, variable index, departure criterion
DEPARTURE_TABLE = [
    (16214, -0.986, -0.718, False, "<=-1"),
    (250, -0.944, -5.44, False, "<=-6"),
    (688, -1.000, -4.36, True, "<=-5"),
    (0, 0.503, 25.4, False, "--"),
    (0, 0.033, 91.7, False, "--"),
    (0, -0.149, -184, True, "--"),
    (0, -0.472, -22.5, False, "--"),
    (5229, 0.837, 4.28, False, ">=+5"),
    (88, -0.940, -5.63, False, "<=-6"),
    (650, -0.661, -3.06, False, "<=-4"),
    (687, -1.000, -4.36, True, "<=-5"),
    (10547, -0.909, -0.147, True, "<=-1"),
]


def test_criterion_9_departures():
    with criterion(9, "realized departure averages (6 dp), normal approximation (3 s.f.), departure table in full"):
        pair = find_situation((0, 0, 2), 1)
        realized = average_realized_ev(pair)
        assert within_dp(realized, 0.0162143, 6)
        assert within_dp(average_realized_ev(find_situation((1, 1, 0), 1, "D")), 0.00522862, 6)
        assert within_dp(average_realized_ev(find_situation((1, 1, 0), 3, "H")), 0.0105474, 6)
        approx = average_approx_ev(pair)
        assert within_sig(approx, 0.0139785, 3)
        assert within_sig(100 * (1 - approx / realized), 13.8, 3)

        rows = table10()
        assert len(rows) == len(DEPARTURE_TABLE)
        for row, (ev, rho, index, variable, crit) in zip(rows, DEPARTURE_TABLE):
            label = row.situation.label
            assert round(row.average_ev * 1e6) == ev, label
            assert within_dp(row.eor.rho, rho, 3), label
            assert within_sig(row.eor.index, index, 3), label
            assert row.eor.variable == variable, label
            assert row.criterion == crit, label


# ---------------------------------------------------------------------------
# 10. property suites
# ---------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_10_property_suites():
    with criterion(10, "property suites pass when run on their own"):
        proc = subprocess.run(
            [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(TESTS / "test_properties.py")],
            capture_output=True, text=True, cwd=TESTS.parent,
        )
        assert proc.returncode == 0, proc.stdout[-2000:]
