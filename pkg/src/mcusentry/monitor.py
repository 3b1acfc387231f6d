"""The hardware monitor: three Mealy FSMs stepped once per cycle.

Each FSM sees the same per-cycle bus signals plus the live window bounds
and emits a local reset; the global reset is their disjunction. Reset
output convention: a local reset is 1 on the transition into RESET and
while staying in RESET; the record where an FSM cleanly leaves RESET
(pc = 0 with no violating access) outputs 0, otherwise the reset loop
would never settle. Any global reset re-initialises *all* FSMs to RESET,
matching a shared hardware reset line; without this, an unlock could
survive a reset caused by a sibling FSM and defeat the one-shot rule.

FSM transition corners follow the access-control formulas, not the state
diagrams, where the two disagree:

- a read of GPIO or the key region at the exit address itself resets
  (the one-shot rule re-arms *at* the exit cycle, inclusive);
- a write to the window or its metadata while pc sits at the
  authorization address resets rather than merely re-locking.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .layout import MemoryLayout, Region


@dataclass(frozen=True)
class MonitorInput:
    """Signals sampled for one cycle; window bounds come from metadata."""

    pc: int
    r_en: bool
    w_en: bool
    d_addr: int
    dma_en: bool
    dma_addr: int
    irq: bool
    er_min: int
    er_max: int

    def pc_in_er(self) -> bool:
        return self.er_min <= self.pc <= self.er_max


def _in(addr: int, region: Region) -> bool:
    return region.start <= addr <= region.end


def read_mem_pred(region: Region, inp: MonitorInput) -> bool:
    """CPU-or-DMA read of any address in ``region`` this cycle."""
    return (inp.r_en and _in(inp.d_addr, region)) or \
        (inp.dma_en and _in(inp.dma_addr, region))


def write_mem_pred(region: Region, inp: MonitorInput) -> bool:
    """CPU-or-DMA write of any address in ``region`` this cycle."""
    return (inp.w_en and _in(inp.d_addr, region)) or \
        (inp.dma_en and _in(inp.dma_addr, region))


def _window_pred(er_min: int, er_max: int, addr: int) -> bool:
    return er_min <= addr <= er_max


def read_window_pred(inp: MonitorInput) -> bool:
    return (inp.r_en and _window_pred(inp.er_min, inp.er_max, inp.d_addr)) or \
        (inp.dma_en and _window_pred(inp.er_min, inp.er_max, inp.dma_addr))


def write_window_pred(inp: MonitorInput) -> bool:
    return (inp.w_en and _window_pred(inp.er_min, inp.er_max, inp.d_addr)) or \
        (inp.dma_en and _window_pred(inp.er_min, inp.er_max, inp.dma_addr))


class GpioState(Enum):
    RESET = "RESET"
    RLOCK = "rLOCK"
    RUNLOCK = "rUNLOCK"


class EkrState(Enum):
    RESET = "RESET"
    WUNLOCK = "wUNLOCK"


class AtomState(Enum):
    RESET = "RESET"
    NOT_ER = "notER"
    FIRST_ER = "firstER"
    MID_ER = "midER"
    LAST_ER = "lastER"


@dataclass(frozen=True)
class MonitorConfig:
    """Static inputs of the monitor: guarded regions and key addresses."""

    gpio: Region
    ekr: Region
    vr: Region
    i_auth: int
    metadata: Region
    ekr_enabled: bool = True

    @staticmethod
    def from_layout(layout: MemoryLayout, ekr_enabled: bool = True) -> "MonitorConfig":
        return MonitorConfig(
            gpio=layout.gpio, ekr=layout.ekr, vr=layout.vr,
            i_auth=layout.i_auth, metadata=layout.er_metadata,
            ekr_enabled=ekr_enabled,
        )


@dataclass(frozen=True)
class GuardFlags:
    """Single-guard switches; flipping exactly one yields a mutant monitor."""

    gpio_rlock_read_resets: bool = True
    gpio_unlock_requires_iauth: bool = True
    gpio_outside_read_resets: bool = True
    gpio_exit_read_resets: bool = True
    gpio_relock_on_exit: bool = True
    gpio_relock_on_write: bool = True
    gpio_iauth_write_resets: bool = True
    atom_entry_guard: bool = True
    atom_exit_guard: bool = True
    atom_irq_dma_resets: bool = True
    ekr_write_guard: bool = True
    ekr_read_guard: bool = True


DEFAULT_GUARDS = GuardFlags()


def _guarded_reads(cfg: MonitorConfig, guards: GuardFlags, inp: MonitorInput) -> bool:
    hit = read_mem_pred(cfg.gpio, inp)
    if cfg.ekr_enabled and guards.ekr_read_guard:
        hit = hit or read_mem_pred(cfg.ekr, inp)
    return hit


def _protected_writes(cfg: MonitorConfig, inp: MonitorInput) -> bool:
    return write_window_pred(inp) or write_mem_pred(cfg.metadata, inp)


def step_gpio_fsm(state: GpioState, inp: MonitorInput, cfg: MonitorConfig,
                  guards: GuardFlags = DEFAULT_GUARDS) -> tuple[GpioState, bool]:
    """Read-access control for GPIO and the key region (three states)."""
    if state is GpioState.RESET:
        if inp.pc != 0:
            return GpioState.RESET, True
        state = GpioState.RLOCK  # leaving RESET: judge this cycle from rLOCK

    if state is GpioState.RLOCK:
        if guards.gpio_rlock_read_resets and _guarded_reads(cfg, guards, inp):
            return GpioState.RESET, True
        if inp.pc == cfg.i_auth:
            if guards.gpio_iauth_write_resets and _protected_writes(cfg, inp):
                return GpioState.RESET, True
            if guards.gpio_unlock_requires_iauth:
                return GpioState.RUNLOCK, False
        if not guards.gpio_unlock_requires_iauth and not _guarded_reads(cfg, guards, inp):
            return GpioState.RUNLOCK, False
        return GpioState.RLOCK, False

    # rUNLOCK
    reads = _guarded_reads(cfg, guards, inp)
    if reads and guards.gpio_outside_read_resets and not inp.pc_in_er():
        return GpioState.RESET, True
    if reads and guards.gpio_exit_read_resets and inp.pc == inp.er_max:
        return GpioState.RESET, True
    if inp.pc == cfg.i_auth and guards.gpio_iauth_write_resets \
            and _protected_writes(cfg, inp):
        return GpioState.RESET, True
    if guards.gpio_relock_on_exit and inp.pc == inp.er_max:
        return GpioState.RLOCK, False
    if guards.gpio_relock_on_write and _protected_writes(cfg, inp):
        return GpioState.RLOCK, False
    return GpioState.RUNLOCK, False


def step_ekr_write_fsm(state: EkrState, inp: MonitorInput, cfg: MonitorConfig,
                       guards: GuardFlags = DEFAULT_GUARDS) -> tuple[EkrState, bool]:
    """Write-access control for the key region (two states).

    Any DMA transaction touching the key region resets: DMA carries no
    pc authority, so it can never count as trusted-verifier execution.
    """
    if not cfg.ekr_enabled:
        return EkrState.WUNLOCK, False
    if state is EkrState.RESET:
        if inp.pc != 0:
            return EkrState.RESET, True
        state = EkrState.WUNLOCK

    if guards.ekr_write_guard:
        cpu_write = inp.w_en and _in(inp.d_addr, cfg.ekr) and not _in(inp.pc, cfg.vr)
        dma_touch = inp.dma_en and _in(inp.dma_addr, cfg.ekr)
        if cpu_write or dma_touch:
            return EkrState.RESET, True
    return EkrState.WUNLOCK, False


def _atom_enter(inp: MonitorInput) -> AtomState:
    return AtomState.LAST_ER if inp.pc == inp.er_max else AtomState.FIRST_ER


def step_atomicity_fsm(state: AtomState, inp: MonitorInput, cfg: MonitorConfig,
                       guards: GuardFlags = DEFAULT_GUARDS) -> tuple[AtomState, bool]:
    """Window atomicity and controlled invocation (five states).

    Entry only at er_min, exit only via er_max, and no interrupt or DMA
    activity while pc is inside the window. A degenerate one-word window
    (er_min == er_max) enters directly in the exit state.
    """
    if state is AtomState.RESET:
        if inp.pc != 0:
            return AtomState.RESET, True
        state = AtomState.NOT_ER

    inside = inp.pc_in_er()
    if inside and guards.atom_irq_dma_resets and (inp.irq or inp.dma_en):
        return AtomState.RESET, True

    if state is AtomState.NOT_ER:
        if not inside:
            return AtomState.NOT_ER, False
        if inp.pc == inp.er_min or not guards.atom_entry_guard:
            return _atom_enter(inp), False
        return AtomState.RESET, True

    if state is AtomState.FIRST_ER:
        if not inside:
            if guards.atom_exit_guard:
                return AtomState.RESET, True
            return AtomState.NOT_ER, False
        if inp.pc == inp.er_max:
            return AtomState.LAST_ER, False
        if inp.pc == inp.er_min:
            return AtomState.FIRST_ER, False
        return AtomState.MID_ER, False

    if state is AtomState.MID_ER:
        if not inside:
            if guards.atom_exit_guard:
                return AtomState.RESET, True
            return AtomState.NOT_ER, False
        if inp.pc == inp.er_max:
            return AtomState.LAST_ER, False
        return AtomState.MID_ER, False

    # lastER: the only legal continuations are leaving or re-entering at er_min
    if not inside:
        return AtomState.NOT_ER, False
    if inp.pc == inp.er_min:
        return _atom_enter(inp), False
    if inp.pc == inp.er_max:
        return AtomState.LAST_ER, False
    if guards.atom_entry_guard:
        return AtomState.RESET, True
    return AtomState.MID_ER, False


@dataclass(frozen=True)
class MonitorState:
    """Composed state of the three FSMs plus the last global output."""

    gpio: GpioState = GpioState.RESET
    ekr: EkrState = EkrState.RESET
    atom: AtomState = AtomState.RESET
    global_reset: bool = False


def monitor_step(state: MonitorState, inp: MonitorInput, cfg: MonitorConfig,
                 guards: GuardFlags = DEFAULT_GUARDS) -> tuple[MonitorState, bool]:
    """Advance all three FSMs on one input; OR their local resets.

    On a global reset every FSM is forced back to RESET so that no unlock
    survives a violation detected by a sibling FSM.
    """
    gpio_next, gpio_reset = step_gpio_fsm(state.gpio, inp, cfg, guards)
    ekr_next, ekr_reset = step_ekr_write_fsm(state.ekr, inp, cfg, guards)
    atom_next, atom_reset = step_atomicity_fsm(state.atom, inp, cfg, guards)
    global_reset = gpio_reset or ekr_reset or atom_reset
    if global_reset:
        nxt = MonitorState(GpioState.RESET, EkrState.RESET, AtomState.RESET, True)
    else:
        nxt = MonitorState(gpio_next, ekr_next, atom_next, False)
    return nxt, global_reset


INITIAL_STATE = MonitorState()


class Monitor:
    """Stateful wrapper used by the stepping loops."""

    def __init__(self, cfg: MonitorConfig, guards: GuardFlags = DEFAULT_GUARDS,
                 observe_only: bool = False):
        self.cfg = cfg
        self.guards = guards
        self.state = INITIAL_STATE
        self.observe_only = observe_only
        self.reset_events: list[int] = []
        self._cycle = 0
        self.local_resets_log: list[tuple[bool, bool, bool]] = []

    def step(self, inp: MonitorInput) -> bool:
        g_next, g_reset = step_gpio_fsm(self.state.gpio, inp, self.cfg, self.guards)
        e_next, e_reset = step_ekr_write_fsm(self.state.ekr, inp, self.cfg, self.guards)
        a_next, a_reset = step_atomicity_fsm(self.state.atom, inp, self.cfg, self.guards)
        out = g_reset or e_reset or a_reset
        self.local_resets_log.append((g_reset, e_reset, a_reset))
        if out:
            self.reset_events.append(self._cycle)
        self._cycle += 1
        if out and not self.observe_only:
            self.state = MonitorState(GpioState.RESET, EkrState.RESET,
                                      AtomState.RESET, True)
        else:
            self.state = MonitorState(g_next, e_next, a_next, out)
        if self.observe_only:
            return False
        return out

    def force_reset(self) -> None:
        """A machine reset actually happened: re-initialise all FSMs.

        Called for machine-fault resets too; observe-only mode suppresses
        the monitor's own output wiring, not genuine machine resets.
        """
        self.state = MonitorState(GpioState.RESET, EkrState.RESET,
                                  AtomState.RESET, True)

    @staticmethod
    def for_layout(layout: MemoryLayout, ekr_enabled: bool = True,
                   guards: GuardFlags = DEFAULT_GUARDS,
                   observe_only: bool = False) -> "Monitor":
        return Monitor(MonitorConfig.from_layout(layout, ekr_enabled), guards,
                       observe_only)
