#!/usr/bin/env python3
"""Exhaustively verify the monitor, then watch a broken one get caught.

The checker explores every reachable (monitor state, input class) pair at a
reduced address width, with the live window bounds treated as free inputs.
A single-guard mutant is then convicted: the checker produces a concrete
lasso which replays through the real transition function.
"""
from mcusentry.catalogue import catalogue_by_name
from mcusentry.checker import (check_catalogue, find_mutant_violation,
                               replay_counterexample, scaled_space)
from mcusentry.mutants import MUTANTS, mutant_guards


def main():
    space = scaled_space(6)
    print("verifying the healthy monitor at 6-bit address width:")
    for result in check_catalogue(space):
        print(f"  {result.formula_name:28} {result.verdict:9} "
              f"({result.explored_states} product states)")

    mutant = "exit-reads-allowed"
    print(f"\nmutant under test: {mutant} - {MUTANTS[mutant][0]}")
    name, result = find_mutant_violation(mutant, space)
    print(f"violated formula: {name}")
    lasso = result.counterexample
    print(f"counterexample ({len(lasso.prefix)} steps + "
          f"{len(lasso.loop)}-step loop):")
    for i, rec in enumerate(lasso.prefix + lasso.loop):
        kind = "loop" if i >= len(lasso.prefix) else "step"
        access = []
        if rec.r_en:
            access.append(f"read 0x{rec.d_addr:02X}")
        if rec.w_en:
            access.append(f"write 0x{rec.d_addr:02X}")
        if rec.dma_en:
            access.append(f"dma 0x{rec.dma_addr:02X}")
        print(f"  {kind} {i}: pc=0x{rec.pc:02X} er=0x{rec.er_min:02X}:"
              f"0x{rec.er_max:02X} {' '.join(access) or 'quiet'}"
              f"{'  irq' if rec.irq else ''}"
              f"{'  RESET' if rec.reset else ''}")
    entry = catalogue_by_name()[name]
    ok = replay_counterexample(entry.formula, lasso, space, mutant_guards(mutant))
    print(f"replayed through the mutant transition function: "
          f"{'violation reproduced' if ok else 'NOT reproduced'}")
    healthy = replay_counterexample(entry.formula, lasso, space)
    print(f"replayed through the healthy monitor: "
          f"{'still violated' if healthy else 'no violation (as expected)'}")


if __name__ == "__main__":
    main()
