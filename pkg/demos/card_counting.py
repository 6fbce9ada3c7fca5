"""How much a point count knows about the 39-deck shoe, level by level."""

from __future__ import annotations

from fractions import Fraction

from snackjack.counting import (
    DEUCES_MINUS_ACES,
    LEVEL_SIX,
    average_spread_profit,
    betting_efficiency,
    betting_eors,
    betting_threshold,
    count_system_eval,
    ftcc_stats,
)

COMMISSION = Fraction(1, 7)


def main() -> None:
    E = betting_eors()
    print("scaled effects of removal (ace, deuce, trey):", ", ".join(f"{float(e):+.6f}" for e in E))
    for system in (DEUCES_MINUS_ACES, LEVEL_SIX):
        fit = count_system_eval(system)
        print(f"count {system.J}: correlation {fit.rho:.6f}, slope {float(fit.gamma):.6f}")
    print(f"bet big once the true count reaches {float(betting_threshold(DEUCES_MINUS_ACES, COMMISSION)):.4f}")

    print(f"\n{'seen':>5} {'E[(Z-nu)+]':>12} {'variance':>12} {'BE level 1':>11} {'BE level 6':>11}")
    for n in (26, 78, 156, 234, 286):
        s = ftcc_stats(n, COMMISSION)
        one = betting_efficiency(n, DEUCES_MINUS_ACES, COMMISSION)
        six = betting_efficiency(n, LEVEL_SIX, COMMISSION)
        print(f"{n:>5} {float(s.mean_pos_excess):>12.6g} {float(s.variance):>12.6g} {float(one):>11.6f} {float(six):>11.6f}")

    print(f"\n1-6 spread, average profit over cards 0..233: {float(average_spread_profit(233, COMMISSION)):.8f}")


if __name__ == "__main__":
    main()
