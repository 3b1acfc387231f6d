"""Single-guard monitor mutants for coverage of the property catalogue.

Each mutant flips exactly one guard in the FSM transition logic. A healthy
catalogue must convict every one of them with a replayable counterexample.
"""
from __future__ import annotations

from dataclasses import replace

from .monitor import DEFAULT_GUARDS, GuardFlags

MUTANTS: dict[str, tuple[str, GuardFlags]] = {
    "rlock-reads-allowed": (
        "locked state no longer resets on GPIO/key reads",
        replace(DEFAULT_GUARDS, gpio_rlock_read_resets=False),
    ),
    "unlock-without-auth": (
        "unlock no longer requires the authorization address",
        replace(DEFAULT_GUARDS, gpio_unlock_requires_iauth=False),
    ),
    "outside-reads-allowed": (
        "unlocked reads from outside the window no longer reset",
        replace(DEFAULT_GUARDS, gpio_outside_read_resets=False),
    ),
    "exit-reads-allowed": (
        "reads at the exit address itself no longer reset",
        replace(DEFAULT_GUARDS, gpio_exit_read_resets=False),
    ),
    "no-relock-on-exit": (
        "reaching the exit address no longer re-locks (tokens reusable)",
        replace(DEFAULT_GUARDS, gpio_relock_on_exit=False),
    ),
    "no-relock-on-write": (
        "window/metadata writes no longer revoke the unlock",
        replace(DEFAULT_GUARDS, gpio_relock_on_write=False),
    ),
    "auth-write-relocks-only": (
        "write during the authorization cycle re-locks instead of resetting",
        replace(DEFAULT_GUARDS, gpio_iauth_write_resets=False),
    ),
    "entry-anywhere": (
        "window entry at any address accepted, not just the first word",
        replace(DEFAULT_GUARDS, atom_entry_guard=False),
    ),
    "exit-anywhere": (
        "leaving the window from any address accepted, not just the last word",
        replace(DEFAULT_GUARDS, atom_exit_guard=False),
    ),
    "irq-dma-ignored": (
        "interrupts and DMA during window execution no longer reset",
        replace(DEFAULT_GUARDS, atom_irq_dma_resets=False),
    ),
    "ekr-write-anywhere": (
        "key-region writes from untrusted code no longer reset",
        replace(DEFAULT_GUARDS, ekr_write_guard=False),
    ),
    "ekr-reads-ignored": (
        "key-region reads are no longer access-controlled",
        replace(DEFAULT_GUARDS, ekr_read_guard=False),
    ),
}


def mutant_guards(mutant_id: str) -> GuardFlags:
    if mutant_id not in MUTANTS:
        raise KeyError(f"unknown mutant {mutant_id!r}; known: {', '.join(sorted(MUTANTS))}")
    return MUTANTS[mutant_id][1]
