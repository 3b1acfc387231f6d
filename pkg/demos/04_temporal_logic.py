#!/usr/bin/env python3
"""The temporal-logic toolbox on its own: parse, evaluate, cross-check.

Runs the catalogue formulas over a real simulator trace, demonstrates the
weak-until and before operators on tiny hand-made lassos, and confirms the
defining equivalences numerically.
"""
import random

from mcusentry.catalogue import builtin_formulas
from mcusentry.layout import default_layout
from mcusentry.ltl import (B, G, LassoTrace, Not, Or, Prop, U, W, eval_naive,
                           eval_vector, parse, to_text)
from mcusentry.props import build_props
from mcusentry.referee import run_scenario
from mcusentry.scenarios import CATALOGUE


class Bits:
    def __init__(self, p=False, q=False):
        self.p, self.q = p, q


def main():
    print("operator playground:")
    tr = LassoTrace(prefix=[Bits(p=True), Bits(p=True)], loop=[Bits(q=True)])
    for text in ["(W p q)", "(U p q)", "(G (| p q))", "(B p q)"]:
        formula = parse(text)
        print(f"  {text:12} on p,p,(q loop) -> {eval_naive(formula, tr, 0)}")

    rng = random.Random(0)
    trials = 1000
    agree = 0
    for _ in range(trials):
        states = [Bits(rng.random() < 0.5, rng.random() < 0.5)
                  for _ in range(rng.randint(1, 8))]
        cut = rng.randrange(len(states))
        lasso = LassoTrace(prefix=states[:cut], loop=states[cut:])
        f, g = Prop("p"), Prop("q")
        lhs = eval_naive(W(f, g), lasso, 0)
        rhs = eval_naive(Or(U(f, g), G(f)), lasso, 0)
        lhs2 = eval_naive(B(f, g), lasso, 0)
        rhs2 = eval_naive(Not(U(Not(f), g)), lasso, 0)
        agree += (lhs == rhs and lhs2 == rhs2)
    print(f"defining equivalences hold on {agree}/{trials} random lassos")

    print("\ncatalogue formulas over the happy-path trace:")
    outcome = run_scenario(CATALOGUE["happy-path"]())
    lasso = LassoTrace.from_records(outcome.trace.records)
    props = build_props(default_layout())
    for entry in builtin_formulas():
        verdict = bool(eval_vector(entry.formula, lasso, props)[0])
        print(f"  {entry.name:28} {'holds' if verdict else 'VIOLATED'} "
              f"- {entry.description}")
    print(f"\n(one formula in text form: {to_text(builtin_formulas()[6].formula)})")


if __name__ == "__main__":
    main()
