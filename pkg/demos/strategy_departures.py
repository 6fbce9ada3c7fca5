"""When should the count override basic strategy in the 39-deck shoe?"""

from __future__ import annotations

from snackjack.solver import Action
from snackjack.variation import average_approx_ev, find_situation, table10, three_way_shares


def main() -> None:
    print(f"{'situation':<22} {'rho':>7} {'index':>9} {'rule':>5} {'avg EV x1e6':>12}")
    for row in table10():
        mark = "*" if row.eor.variable else " "
        print(f"{row.situation.label:<22} {row.eor.rho:>7.3f} {float(row.eor.index):>8.3g}{mark} {row.criterion:>5} "
              f"{round(row.average_ev * 1e6):>12}")

    pair = find_situation((0, 0, 2), 1)
    print(f"\nnormal approximation for {pair.label}: {average_approx_ev(pair):.7f}")

    shares = three_way_shares((1, 1, 0), 1, Action.HIT)
    print("soft six against an ace, share of compositions where each play is best:")
    for action, count in shares.counts.items():
        print(f"  {action}: {float(shares.share(action)):.4f} ({count} of {shares.total})")


if __name__ == "__main__":
    main()
