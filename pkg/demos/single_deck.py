"""Walk through the single-deck game: every decision, its exact values, and the overall edge."""

from __future__ import annotations

from snackjack.core import Pack, total
from snackjack.solver import DISPLAY_ORDER, basic_strategy, infinite_deck_expectation, overall_expectation


def main() -> None:
    pack = Pack.decks(1)
    table = basic_strategy(pack)
    print(f"{'hand':>9} {'tot':>4} {'up':>3}  " + "  ".join(f"{str(a):>7}" for a in DISPLAY_ORDER) + "   best")
    for (hand, up), entry in table.entries.items():
        cells = [str(entry.values[a]) if a in entry.values else "" for a in DISPLAY_ORDER]
        print(f"{hand.label():>9} {str(total(hand)):>4} {up:>3}  " + "  ".join(f"{c:>7}" for c in cells) + f"   {entry.best_label()}")

    print()
    for d in (1, 2, 3, 39):
        print(f"{d:>3} deck(s): player edge {float(overall_expectation(Pack.decks(d))):+.6f}")
    print(f"  infinite: player edge {float(infinite_deck_expectation()):+.6f}")


if __name__ == "__main__":
    main()
