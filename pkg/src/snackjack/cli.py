"""Command-line front end: every table and figure series as text, CSV or JSON."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import partial, reduce
from typing import Any, Optional, Sequence

from . import counting, variation
from .core import NATURAL, Pack, total
from .dealer import INFINITE, mimic_dealer_expectation
from .solver import DISPLAY_ORDER, Action, NaturalPay, RuleVariant, Solver, legal_actions

CSV_VERSION = 1
DISTANCE_LEVELS = (1, 2, 3, 4, 26, 52, 78, 104, 130, 156, 182, 208, 234, 260, 286, 301, 302, 303, 304)
EFFICIENCY_LEVELS = (26, 52, 78, 104, 130, 156, 182, 208, 234, 260, 286, 301, 302, 303, 304)
DECK_SWEEP = "1..13,26,39,52,inf"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Parsing helpers
# ---------------------------------------------------------------------------


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a rational number: {text!r}") from None


def parse_triple(text: str) -> tuple[int, int, int]:
    parts = text.replace("(", "").replace(")", "").split(",")
    try:
        values = tuple(int(p) for p in parts)
    except ValueError:
        raise UsageError(f"expected three integers, got {text!r}") from None
    if len(values) != 3:
        raise UsageError(f"expected three integers, got {text!r}")
    return values


def parse_range(text: str, low: int, high: int) -> list[int]:
    """'1..304', '26,52,78' or a mix such as '1..13,26'."""
    out: list[int] = []
    for piece in text.split(","):
        piece = piece.strip()
        if ".." in piece:
            a, b = piece.split("..")
            out.extend(range(int(a), int(b) + 1))
        elif piece:
            out.append(int(piece))
    bad = [n for n in out if not low <= n <= high]
    if bad:
        raise UsageError(f"values out of range {low}..{high}: {bad[:5]}")
    return out


def parse_decks(text: str) -> list[Optional[int]]:
    """Deck counts; None stands for the infinite shoe."""
    out: list[Optional[int]] = []
    for piece in text.split(","):
        piece = piece.strip().lower()
        if piece in ("inf", "infinite", "oo"):
            out.append(None)
        elif ".." in piece:
            a, b = piece.split("..")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(piece))
    if any(d is not None and d < 1 for d in out):
        raise UsageError("deck counts must be positive")
    return out


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Formatter:
    precision: int = 10
    exact: bool = False

    def text(self, value: Any) -> str:
        if value is None:
            return ""
        if isinstance(value, bool):
            return str(value).lower()
        if isinstance(value, Fraction):
            if self.exact or value.denominator == 1:
                return str(value)
            return decimal_text(value, self.precision)
        if isinstance(value, float):
            if math.isnan(value):
                return ""
            return f"{value:.{self.precision}g}"
        return str(value)

    def json_value(self, value: Any) -> Any:
        if value is None or isinstance(value, (bool, int, str)):
            return value
        if isinstance(value, float) and math.isnan(value):
            return None
        if isinstance(value, Fraction) and (self.exact or value.denominator == 1):
            return str(value) if value.denominator != 1 else value.numerator
        return float(self.text(value))


def decimal_text(x: Fraction, digits: int) -> str:
    """``x`` correctly rounded to ``digits`` significant digits."""
    if x == 0:
        return "0"
    with localcontext() as ctx:
        ctx.prec = digits
        d = Decimal(x.numerator) / Decimal(x.denominator)
    return format(d, "g")


def emit(name: str, columns: Sequence[str], rows: list[dict], fmt: str, formatter: Formatter, out=None) -> None:
    out = out or sys.stdout
    if fmt == "json":
        payload = {"table": name, "version": CSV_VERSION, "columns": list(columns),
                   "rows": [{c: formatter.json_value(r.get(c)) for c in columns} for r in rows]}
        out.write(json.dumps(payload, indent=1) + "\n")
        return
    cells = [[formatter.text(r.get(c)) for c in columns] for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(f"# {name} v{CSV_VERSION}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        w.writerows(cells)
        out.write(buf.getvalue())
        return
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(columns)]
    out.write("  ".join(c.rjust(wd) for c, wd in zip(columns, widths)).rstrip() + "\n")
    for row in cells:
        out.write("  ".join(v.rjust(wd) for v, wd in zip(row, widths)).rstrip() + "\n")


class Progress:
    """Sparse progress lines on standard error."""

    def __init__(self, label: str, total: int, quiet: bool):
        self.label, self.total, self.quiet = label, total, quiet
        self.step = max(1, total // 10)
        self.done = 0

    def tick(self, k: int = 1) -> None:
        self.done += k
        if not self.quiet and (self.done % self.step == 0 or self.done == self.total):
            print(f"{self.label}: {self.done}/{self.total}", file=sys.stderr, flush=True)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def configured_shoe(args):
    if args.composition is not None:
        pack = Pack(*parse_triple(args.composition))
        if min(pack) < 0 or pack.size == 0:
            raise UsageError(f"bad composition {tuple(pack)}")
        return pack
    decks = parse_decks(args.decks or "1")
    if len(decks) != 1:
        raise UsageError("--decks takes a single value here; use 'expectation --sweep' for several")
    return INFINITE if decks[0] is None else Pack.decks(decks[0])


def configured_rules(args) -> RuleVariant:
    pay = NaturalPay.THREE_TO_TWO if args.rules == "three_to_two" else NaturalPay.EVEN_MONEY
    return RuleVariant(pay, args.nu)


def cmd_strategy(args, fmt: Formatter) -> list:
    shoe = configured_shoe(args)
    rules = configured_rules(args)
    solver = Solver(shoe, rules)
    table = solver.strategy_table()
    deals = {(h, u): (pa, pb) for h, u, pa, pb in solver.deal_probabilities()}
    scale = reduce(math.lcm, (p.denominator for pair in deals.values() for p in pair if p), 1)
    rows = []
    for no, ((hand, u), entry) in enumerate(table.entries.items(), start=1):
        if args.two_card_only and hand.size != 2:
            continue
        row = {
            "no": no, "hand": hand.label(), "htot": hand.hard_total, "tot": str(total(hand)), "up": u,
            "bs": entry.best_label(),
        }
        for a, col in zip(DISPLAY_ORDER, ("stand", "hit", "double", "split")):
            row[col] = entry.values.get(a) if a in legal_actions(hand) else None
        pa = deals.get((hand, u), (0, 0))[0]
        if pa:
            row["emax"] = entry.value
            row["weight"] = pa * scale
        rows.append(row)
    dealer_nat = sum((pb for (h, _), (_, pb) in deals.items() if h != NATURAL), Fraction(0))
    both_nat = sum((pb for (h, _), (_, pb) in deals.items() if h == NATURAL), Fraction(0))
    both_value = 0 if rules.natural_pay is NaturalPay.THREE_TO_TWO else -1
    rows.append({"no": "", "hand": "dealer natural only", "emax": Fraction(-1), "weight": dealer_nat * scale})
    rows.append({"no": "", "hand": "both naturals", "emax": Fraction(both_value), "weight": both_nat * scale})
    columns = ["no", "hand", "htot", "tot", "up", "stand", "hit", "double", "split", "bs", "emax", "weight"]
    emit("strategy", columns, rows, args.format, fmt)
    return rows


def cmd_expectation(args, fmt: Formatter) -> list:
    rules = configured_rules(args)
    if args.infinite:
        shoes = [("inf", INFINITE)]
    elif args.sweep:
        shoes = [("inf" if d is None else str(d), INFINITE if d is None else Pack.decks(d)) for d in parse_decks(args.sweep)]
    else:
        shoe = configured_shoe(args)
        shoes = [("inf" if shoe is INFINITE else ",".join(map(str, shoe)), shoe)]
    rows = []
    prog = Progress("expectation", len(shoes), args.quiet)
    for label, shoe in shoes:
        row: dict = {"shoe": label, "expectation": Solver(shoe, rules).overall_expectation()}
        if args.mimic:
            if shoe is INFINITE:
                raise UsageError("mimic-the-dealer needs a finite pack")
            m = mimic_dealer_expectation(shoe, rules.natural_value)
            row.update(mimic=m.ev - rules.commission, double_bust=m.p_double_bust, winning_natural=m.p_winning_natural)
        rows.append(row)
        prog.tick()
    columns = ["shoe", "expectation"] + (["mimic", "double_bust", "winning_natural"] if args.mimic else [])
    emit("expectation", columns, rows, args.format, fmt)
    return rows


def _level_dict(row: counting.LevelRow) -> dict:
    return {c: getattr(row, c) for c in counting.LEVEL_COLUMNS}


def cmd_ftcc(args, fmt: Formatter) -> list:
    if args.red_black:
        N = args.red_black
        ns = parse_range(args.n, 1, N - 1) if args.n else list(range(1, N))
        rows = []
        for n in ns:
            rb = counting.red_black_stats(N, n)
            rows.append({"n": n, "mean_pos": rb.mean_pos, "sd": rb.sd})
        emit("red_black", ["n", "mean_pos", "sd"], rows, args.format, fmt)
        return rows
    ns = parse_range(args.n or "1..304", 1, counting.MAX_SEEN)
    prog = Progress("ftcc", len(ns), args.quiet)
    fn = partial(counting.level_row, nu=args.nu)
    results = []
    for chunk in _chunks(ns, max(1, len(ns) // 10)):
        results.extend(counting.map_levels(fn, chunk, args.workers))
        prog.tick(len(chunk))
    rows = [_level_dict(r) for r in results]
    emit("ftcc", counting.LEVEL_COLUMNS, rows, args.format, fmt)
    return rows


def _chunks(items: list, size: int):
    for i in range(0, len(items), size):
        yield items[i:i + size]


def cmd_counting(args, fmt: Formatter) -> list:
    system = counting.CountSystem.parse(args.system)
    if not system.balanced:
        raise UsageError(f"count system {system.J} is not balanced")
    nu = args.nu
    report = "summary" if args.summary else args.report
    if report == "summary":
        fit = counting.count_system_eval(system)
        E = counting.betting_eors()
        be_ns = parse_range(args.n, 2, counting.MAX_SEEN) if args.n else list(range(2, 234))
        prog = Progress("betting efficiency", len(be_ns), args.quiet)
        bes = []
        for chunk in _chunks(be_ns, max(1, len(be_ns) // 10)):
            bes.extend(counting.map_levels(partial(counting.betting_efficiency, system=system, nu=nu), chunk, args.workers))
            prog.tick(len(chunk))
        rows = [
            {"quantity": "mu", "value": counting.full_shoe_mean()},
            *({"quantity": f"E{i + 1}", "value": e} for i, e in enumerate(E)),
            {"quantity": "rho", "value": fit.rho},
            {"quantity": "gamma", "value": fit.gamma},
            {"quantity": "threshold", "value": counting.betting_threshold(system, nu)},
            {"quantity": "betting_efficiency", "value": sum(bes, Fraction(0)) / len(bes)},
        ]
        emit("counting_summary", ["quantity", "value"], rows, args.format, fmt)
        return rows
    if report == "l1":
        ns = parse_range(args.n, 1, counting.MAX_SEEN) if args.n else list(DISTANCE_LEVELS)
        rows = []
        for n in ns:
            a = counting.estimator_l1_distance(n)
            b = counting.estimator_l1_distance(n, system)
            rows.append({"n": n, "eor_linear": a, "count_linear": b,
                         "pct_increase": 100 * (b - a) / a if a else None})
        emit("l1_distance", ["n", "eor_linear", "count_linear", "pct_increase"], rows, args.format, fmt)
        return rows
    if report == "be":
        ns = parse_range(args.n, 2, counting.MAX_SEEN) if args.n else list(EFFICIENCY_LEVELS)
        rows = [{"n": n, "betting_efficiency": counting.betting_efficiency(n, system, nu)} for n in ns]
        emit("betting_efficiency", ["n", "betting_efficiency"], rows, args.format, fmt)
        return rows
    if report == "tc":
        ns = parse_range(args.n, 0, counting.MAX_SEEN) if args.n else [78, 156, 234]
        rows = []
        for n in ns:
            for k, b in counting.conditional_ev_by_tc(n, nu, system).items():
                rows.append({"n": n, "k": k, "ev": b.ev, "prob": b.prob})
        emit("true_count", ["n", "k", "ev", "prob"], rows, args.format, fmt)
        return rows
    if report == "spread":
        ns = parse_range(args.n, 0, counting.MAX_SEEN) if args.n else list(range(0, 260))
        lo, hi = args.spread
        prog = Progress("spread", len(ns), args.quiet)
        rows = []
        for n in ns:
            rows.append({"n": n, "spread_profit": counting.bet_spread_profit(n, nu, lo, hi, system)})
            prog.tick()
        emit("spread_profit", ["n", "spread_profit"], rows, args.format, fmt)
        return rows
    if report == "eor-scaling":
        rows = []
        for N in (52, 104, 312):
            E = counting.effects_of_removal((N // 4, N // 4, N // 2))
            rows.append({"N": N, "E1": E[0], "E2": E[1], "E3": E[2]})
        E = counting.limiting_effects_of_removal()
        rows.append({"N": "inf", "E1": E[0], "E2": E[1], "E3": E[2]})
        emit("eor_scaling", ["N", "E1", "E2", "E3"], rows, args.format, fmt)
        return rows
    if report == "bimodal":
        ns = parse_range(args.n or "1..304", 1, counting.MAX_SEEN)
        rows = [{"n": n, "bimodal": counting.is_bimodal(n, system)} for n in ns]
        emit("bimodality", ["n", "bimodal"], rows, args.format, fmt)
        return rows
    raise UsageError(f"unknown report {report!r}")


def _situation(args) -> variation.Situation:
    if not args.situation:
        raise UsageError("--situation HAND:UPCARD:ALT is required, e.g. 0,0,2:1:S")
    try:
        hand, up, alt = args.situation.split(":")
        return variation.find_situation(parse_triple(hand), int(up), alt)
    except (ValueError, KeyError) as exc:
        raise UsageError(f"bad situation {args.situation!r}: {exc}") from None


def cmd_variation(args, fmt: Formatter) -> list:
    system = counting.CountSystem.parse(args.system)
    report = args.report
    if report == "departures":
        rows = []
        for r in variation.table10(system):
            s = r.situation
            rows.append({
                "hand": s.hand.label(), "up": s.upcard, "bs": str(s.baseline), "alt": str(s.alternative),
                "rho": r.eor.rho, "index": r.eor.index, "variable": r.eor.variable,
                "criterion": r.criterion, "ave_ev_x1e6": round(r.average_ev * 1e6),
            })
        emit("departures", ["hand", "up", "bs", "alt", "rho", "index", "variable", "criterion", "ave_ev_x1e6"],
             rows, args.format, fmt)
        return rows
    if report == "shares":
        rows = []
        for s in variation.SITUATIONS:
            pos, dom = variation.lattice(s).departure_counts()
            rows.append({"situation": s.label, "departures": pos, "compositions": dom, "proportion": Fraction(pos, dom)})
        for u, basic in ((1, Action.HIT), (2, Action.DOUBLE), (3, Action.DOUBLE)):
            sh = variation.three_way_shares((1, 1, 0), u, basic)
            for a in (Action.STAND, Action.HIT, Action.DOUBLE):
                rows.append({"situation": f"(1,1,0) v{u} best={a}", "departures": sh.counts[a],
                             "compositions": sh.total, "proportion": sh.share(a)})
        emit("departure_shares", ["situation", "departures", "compositions", "proportion"], rows, args.format, fmt)
        return rows
    s = _situation(args)
    eor = variation.strategic_eor(s, system)
    if report == "eor":
        rows = [
            *({"quantity": f"E{i + 1}", "value": e} for i, e in enumerate(eor.E)),
            *({"quantity": f"w{i + 1}", "value": w} for i, w in enumerate(eor.weights)),
            {"quantity": "mu", "value": eor.mu},
            {"quantity": "rho", "value": eor.rho},
            {"quantity": "gamma", "value": eor.gamma},
            {"quantity": "index", "value": eor.index},
            {"quantity": "index_shift", "value": eor.index_shift},
        ]
        emit("strategic_eor", ["quantity", "value"], rows, args.format, fmt)
        return rows
    if report == "curves":
        ns = parse_range(args.n or "1..304", 1, variation.MAX_SEEN)
        policy = variation.departure_policy(eor)
        rows = []
        if args.exact:
            prog = Progress("variation", len(ns), args.quiet)
            for n in ns:
                rows.append({"n": n, "prob_departure": variation.departure_probability(s, n),
                             "gain": variation.departure_gain(s, n),
                             "realized_ev": variation.realized_departure_ev(s, n, policy, system),
                             "approx_ev": variation.normal_approx_gain(eor, n)})
                prog.tick()
        else:
            lat = variation.SituationLattice(s, system)
            prob, gain, real = lat.prob_departure, lat.positive_gain, lat.realized_ev(policy)
            for n in ns:
                rows.append({"n": n, "prob_departure": float(prob[n]), "gain": float(gain[n]),
                             "realized_ev": float(real[n]), "approx_ev": variation.normal_approx_gain(eor, n)})
        emit("variation", ["n", "prob_departure", "gain", "realized_ev", "approx_ev"], rows, args.format, fmt)
        return rows
    raise UsageError(f"unknown report {report!r}")


def cmd_counts(args, fmt: Formatter) -> list:
    profiles = [args.profile] if args.profile else list(counting.PROFILES)
    rows = []
    for name in profiles:
        prof = counting.PROFILES[name]
        if args.n is not None:
            ns = parse_range(args.n, 0, prof.size)
            rows.extend({"profile": name, "n": n, "count": counting.composition_count(prof, n)} for n in ns)
        else:
            rows.append({"profile": name, "n": "all",
                         "count": sum(counting.composition_count(prof, n) for n in range(prof.size + 1))})
    emit("composition_counts", ["profile", "n", "count"], rows, args.format, fmt)
    return rows


# ---------------------------------------------------------------------------
# Argument parser
# ---------------------------------------------------------------------------


def _add_globals(p: argparse.ArgumentParser, defaults: bool) -> None:
    """Options accepted both before and after the subcommand."""
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    shoe = p.add_mutually_exclusive_group()
    shoe.add_argument("--decks", default=d(None), help="number of 8-card decks, or 'inf' (default 1)")
    shoe.add_argument("--composition", default=d(None), help="explicit pack n1,n2,n3")
    p.add_argument("--rules", choices=("three_to_two", "even_money"), default=d("three_to_two"))
    p.add_argument("--nu", type=parse_fraction, default=d(Fraction(0)), help="commission per initial unit, e.g. 1/7")
    p.add_argument("--format", choices=("text", "csv", "json"), default=d("text"))
    p.add_argument("--precision", type=int, default=d(10), help="significant digits for decimals")
    p.add_argument("--exact", action="store_true", default=d(False), help="print rationals as p/q")
    p.add_argument("--workers", type=int, default=d(os.cpu_count() or 1))
    p.add_argument("--quiet", action="store_true", default=d(False), help="no progress on standard error")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="snackjack", description=__doc__)
    _add_globals(p, True)
    common = argparse.ArgumentParser(add_help=False)
    _add_globals(common, False)
    sub = p.add_subparsers(dest="command", required=True)
    add = partial(sub.add_parser, parents=[common])

    s = add("strategy", help="composition-dependent basic strategy table")
    s.add_argument("--two-card-only", action="store_true")

    s = add("expectation", help="overall expectation under optimal play")
    s.add_argument("--sweep", help=f"deck counts, e.g. {DECK_SWEEP}")
    s.add_argument("--infinite", action="store_true")
    s.add_argument("--mimic", action="store_true", help="also the mimic-the-dealer statistics")

    s = add("ftcc", help="per-level statistics of the 39-deck shoe")
    s.add_argument("--n", help="levels, e.g. 1..304")
    s.add_argument("--red-black", type=int, metavar="N", help="red-and-black model with N cards instead")

    s = add("counting", help="betting analysis of a point count")
    s.add_argument("--system", default="-1,1,0")
    s.add_argument("--summary", action="store_true", help="same as --report summary")
    s.add_argument("--report", default="summary",
                   choices=("summary", "l1", "be", "tc", "spread", "eor-scaling", "bimodal"))
    s.add_argument("--n", help="levels to report")
    s.add_argument("--spread", type=int, nargs=2, default=(1, 6), metavar=("MIN", "MAX"))

    s = add("variation", help="strategy departures driven by the count")
    s.add_argument("--system", default="-1,1,0")
    s.add_argument("--report", default="departures", choices=("departures", "shares", "eor", "curves"))
    s.add_argument("--situation", help="HAND:UPCARD:ALT, e.g. 0,0,2:1:S")
    s.add_argument("--n", help="levels for --report curves")

    s = add("counts", help="numbers of distinguishable shoe compositions")
    s.add_argument("--profile", choices=tuple(counting.PROFILES))
    s.add_argument("--n", help="cards seen; omit for the total over all n")
    return p


COMMANDS = {
    "strategy": cmd_strategy,
    "expectation": cmd_expectation,
    "ftcc": cmd_ftcc,
    "counting": cmd_counting,
    "variation": cmd_variation,
    "counts": cmd_counts,
}


def _join_negative_values(argv: Sequence[str]) -> list[str]:
    """Let point counts such as ``--system -1,1,0`` through argparse."""
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok in ("--system", "--composition"):
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(_join_negative_values(sys.argv[1:] if argv is None else argv))
    if args.precision < 1:
        parser.error("--precision must be positive")
    if args.workers < 1:
        parser.error("--workers must be positive")
    if args.nu < 0:
        parser.error("--nu must be nonnegative")
    if args.decks is not None and args.composition is not None:
        parser.error("--decks and --composition are mutually exclusive")
    fmt = Formatter(args.precision, args.exact)
    try:
        COMMANDS[args.command](args, fmt)
        sys.stdout.flush()
    except (UsageError, ValueError) as exc:
        print(f"snackjack: error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
