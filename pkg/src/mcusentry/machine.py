"""Deterministic cycle-level machine model.

One instruction executes per cycle and emits exactly one StateRecord
carrying the bus signals the hardware monitor consumes: pc, read/write
enables with the data address, DMA enable/address, the interrupt line, and
the reset signal. Record tags are recomputed from those raw signals, never
stored independently, so the tag/signal correspondence is structural.

Conventions fixed here:

- all word accesses (pc, data, DMA) are forced to even addresses;
- instruction fetch does not assert the read enable, only data reads do;
- GPIO reads return the external sensor provider's value for that cycle,
  GPIO writes latch to an output log and never touch the memory image;
- writes to ROM are electrically ignored (signals still assert);
- the reset routine completes atomically between records: registers and
  the data RAM are zeroed, flash and ROM persist, pc restarts at the boot
  entry;
- the executable-window bounds the monitor compares against are sampled
  from the metadata cells at the start of every cycle.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

from .errors import DecodeError, ImageError
from .isa import MODE_ABS, Op, WORD_MASK, decode
from .layout import ADDRESS_SPACE, ErWindow, MemoryLayout

TAG_REGIONS = ("GPIO", "EKR", "ER", "METADATA", "VR", "ROM", "PMEM", "DMEM")


def _align(addr: int) -> int:
    return addr & 0xFFFE


@dataclass(frozen=True)
class DmaRequest:
    """One DMA bus transaction, serviced exactly at ``at_cycle``."""

    at_cycle: int
    op: str  # "read" | "write"
    addr: int
    value: int = 0

    def __post_init__(self):
        if self.op not in ("read", "write"):
            raise ValueError(f"bad DMA op {self.op!r}")


class SensorProvider:
    """External input source backing the GPIO region.

    ``read`` may be stateful (e.g. a streamed pattern); a fresh provider per
    run keeps whole simulations deterministic.
    """

    def read(self, cycle: int, addr: int) -> int:
        raise NotImplementedError


class ConstantSensor(SensorProvider):
    def __init__(self, value: int = 0):
        self.value = value & WORD_MASK

    def read(self, cycle: int, addr: int) -> int:
        return self.value


class SequenceSensor(SensorProvider):
    """Feeds successive words per read event, then repeats the last word."""

    def __init__(self, data: bytes):
        if len(data) % 2:
            data += b"\x00"
        self.words = [int.from_bytes(data[i:i + 2], "little") for i in range(0, len(data), 2)]
        if not self.words:
            self.words = [0]
        self._cursor = 0

    def read(self, cycle: int, addr: int) -> int:
        word = self.words[min(self._cursor, len(self.words) - 1)]
        self._cursor += 1
        return word


@dataclass(frozen=True)
class StateRecord:
    """Observable state of one cycle; the unit all properties range over."""

    cycle: int
    pc: int
    r_en: bool = False
    w_en: bool = False
    d_addr: int = 0
    dma_en: bool = False
    dma_addr: int = 0
    dma_write: bool = False
    irq: bool = False
    reset: bool = False
    executed: int | None = None
    er_min: int = 0
    er_max: int = 0

    def tags(self, layout: MemoryLayout) -> frozenset[str]:
        """Region-indexed event tags, derived purely from the raw signals.

        The live window bounds are raw sampled values and may be arbitrary
        (metadata is attacker writable), so membership is a plain interval
        test, empty when inverted.
        """
        out = set()
        for name in TAG_REGIONS:
            if name == "ER":
                inside_r = self.er_min <= self.d_addr <= self.er_max
                inside_dma = self.er_min <= self.dma_addr <= self.er_max
            else:
                lookup = "er_metadata" if name == "METADATA" else name.lower()
                region = layout.region_named(lookup)
                inside_r = self.d_addr in region
                inside_dma = self.dma_addr in region
            if self.r_en and inside_r:
                out.add(f"READ({name})")
            if self.w_en and inside_r:
                out.add(f"WRITE({name})")
            if self.dma_en and inside_dma:
                out.add(f"DMA_W({name})" if self.dma_write else f"DMA_R({name})")
        if self.irq:
            out.add("IRQ")
        if self.reset:
            out.add("RESET")
        return frozenset(out)


@dataclass
class Trace:
    """Record sequence plus how the run ended."""

    records: list[StateRecord] = field(default_factory=list)
    terminal: str = "max-cycles"  # "halted" | "reset-sink" | "max-cycles"

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def dump(self, layout: MemoryLayout) -> str:
        """Tab-separated dump, bit-exact across runs."""
        lines = []
        for r in self.records:
            tags = ",".join(sorted(r.tags(layout)))
            lines.append(
                f"{r.cycle}\t{r.pc:04x}\t{int(r.r_en)}{int(r.w_en)}\t{r.d_addr:04x}"
                f"\t{int(r.dma_en)}{int(r.dma_write)}\t{r.dma_addr:04x}"
                f"\t{int(r.irq)}\t{int(r.reset)}\t{r.er_min:04x}\t{r.er_max:04x}\t{tags}"
            )
        lines.append(f"#terminal={self.terminal}")
        return "\n".join(lines) + "\n"

    def digest(self, layout: MemoryLayout) -> str:
        return hashlib.sha256(self.dump(layout).encode()).hexdigest()


class Machine:
    """Mutable machine instance: registers, memory, and peripheral logs."""

    def __init__(self, layout: MemoryLayout):
        self.layout = layout
        self.memory = bytearray(ADDRESS_SPACE)
        self.pc = layout.boot_entry
        self.gpr = [0] * 8
        self.halted = False
        self.cycle = 0
        self.gpio_out: list[tuple[int, int, int]] = []  # (cycle, addr, value)
        self.dma_read_log: list[tuple[int, int, int]] = []

    # r7 doubles as the stack pointer.
    @property
    def sp(self) -> int:
        return self.gpr[7]

    @sp.setter
    def sp(self, value: int) -> None:
        self.gpr[7] = value & WORD_MASK

    def load_word(self, addr: int) -> int:
        addr = _align(addr)
        return int.from_bytes(self.memory[addr:addr + 2], "little")

    def store_word(self, addr: int, value: int) -> None:
        addr = _align(addr)
        self.memory[addr:addr + 2] = (value & WORD_MASK).to_bytes(2, "little")

    def er_window(self) -> tuple[int, int]:
        """Live window bounds as the monitor samples them each cycle."""
        return (self.load_word(self.layout.er_min_cell),
                self.load_word(self.layout.er_max_cell))

    def copy(self) -> "Machine":
        other = Machine(self.layout)
        other.memory = bytearray(self.memory)
        other.pc = self.pc
        other.gpr = list(self.gpr)
        other.halted = self.halted
        other.cycle = self.cycle
        other.gpio_out = list(self.gpio_out)
        other.dma_read_log = list(self.dma_read_log)
        return other


def load_image(layout: MemoryLayout, image: bytes, er: ErWindow,
               rom: bytes | None = None) -> Machine:
    """Build a machine in post-reset state from a flat memory image.

    The image covers flash and RAM; any non-zero byte falling in the ROM
    range is a configuration error (ROM is burnt at manufacture, not
    loadable). Trusted ROM content, if any, is passed separately via
    ``rom`` and placed at the start of the ROM region. The window bounds
    are written into the metadata cells.
    """
    if len(image) > ADDRESS_SPACE:
        raise ImageError(f"image of {len(image)} bytes exceeds the 64 KB space")
    layout.validate_window(er)
    overlap = image[layout.rom.start:layout.rom.end + 1]
    if any(overlap):
        raise ImageError("image writes into the ROM range")
    machine = Machine(layout)
    machine.memory[:len(image)] = image
    if rom:
        if len(rom) > len(layout.rom):
            raise ImageError("ROM content exceeds the ROM region")
        machine.memory[layout.rom.start:layout.rom.start + len(rom)] = rom
    machine.store_word(layout.er_min_cell, er.er_min)
    machine.store_word(layout.er_max_cell, er.er_max)
    reset_routine(machine)
    return machine


def reset_routine(machine: Machine) -> Machine:
    """Hardware reset: zero all registers and the data RAM, restart at boot.

    Flash (pmem), ROM, and the persistent counter survive; the erasure of
    dmem completes before any subsequent instruction is observable.
    """
    layout = machine.layout
    machine.gpr = [0] * 8
    dmem = layout.dmem
    machine.memory[dmem.start:dmem.end + 1] = bytes(len(dmem))
    machine.pc = layout.boot_entry
    machine.halted = False
    return machine


def _fault_record(machine: Machine, cycle: int, irq_line: bool,
                  er: tuple[int, int]) -> StateRecord:
    return StateRecord(
        cycle=cycle, pc=machine.pc, irq=irq_line, reset=True,
        executed=None, er_min=er[0], er_max=er[1],
    )


def exec_step(
    machine: Machine,
    dma_request: DmaRequest | None,
    irq_line: bool,
    sensor: SensorProvider,
) -> StateRecord:
    """Fetch, decode, and execute one instruction; emit the cycle's record.

    The returned record's ``reset`` flag covers machine faults only; the
    caller merges in the monitor's verdict and runs the reset routine. DMA
    effects apply after the CPU's own access within the same cycle.
    """
    layout = machine.layout
    er = machine.er_window()
    pc = _align(machine.pc)
    cycle = machine.cycle
    machine.cycle += 1

    try:
        instr = decode(machine.load_word(pc),
                       machine.load_word((pc + 2) & WORD_MASK))
    except DecodeError:
        return _fault_record(machine, cycle, irq_line, er)

    r_en = False
    w_en = False
    d_addr = 0
    next_pc = (pc + instr.size_bytes()) & WORD_MASK
    g = machine.gpr

    def data_read(addr: int) -> int:
        nonlocal r_en, d_addr
        addr = _align(addr)
        r_en = True
        d_addr = addr
        if addr in layout.gpio:
            return sensor.read(cycle, addr) & WORD_MASK
        return machine.load_word(addr)

    def data_write(addr: int, value: int) -> None:
        nonlocal w_en, d_addr
        addr = _align(addr)
        w_en = True
        d_addr = addr
        if addr in layout.gpio:
            machine.gpio_out.append((cycle, addr, value & WORD_MASK))
        elif addr in layout.rom:
            pass  # ROM ignores writes; the bus signals still assert
        else:
            machine.store_word(addr, value)

    op = instr.op
    if op is Op.NOP:
        pass
    elif op is Op.LOADI:
        g[instr.rd] = instr.imm & WORD_MASK
    elif op is Op.LOAD:
        target = instr.imm if instr.mode == MODE_ABS else g[instr.rs]
        g[instr.rd] = data_read(target)
    elif op is Op.STORE:
        target = instr.imm if instr.mode == MODE_ABS else g[instr.rd]
        data_write(target, g[instr.rs])
    elif op is Op.ADD:
        g[instr.rd] = (g[instr.rd] + g[instr.rs]) & WORD_MASK
    elif op is Op.SUB:
        g[instr.rd] = (g[instr.rd] - g[instr.rs]) & WORD_MASK
    elif op is Op.AND:
        g[instr.rd] = g[instr.rd] & g[instr.rs]
    elif op is Op.JMP:
        next_pc = _align(instr.imm if instr.mode == MODE_ABS else g[instr.rs])
    elif op is Op.BRZ:
        if g[instr.rd] == 0:
            next_pc = _align(instr.imm)
    elif op is Op.CALL:
        target = instr.imm if instr.mode == MODE_ABS else g[instr.rs]
        machine.sp = (machine.sp - 2) & WORD_MASK
        data_write(machine.sp, next_pc)
        next_pc = _align(target)
    elif op is Op.RET:
        next_pc = _align(data_read(machine.sp))
        machine.sp = (machine.sp + 2) & WORD_MASK
    elif op is Op.HALT:
        machine.halted = True
        next_pc = pc

    dma_en = False
    dma_addr = 0
    dma_write = False
    if dma_request is not None:
        dma_en = True
        dma_addr = _align(dma_request.addr)
        dma_write = dma_request.op == "write"
        if dma_write:
            if dma_addr in layout.gpio:
                machine.gpio_out.append((cycle, dma_addr, dma_request.value & WORD_MASK))
            elif dma_addr not in layout.rom:
                machine.store_word(dma_addr, dma_request.value)
        else:
            if dma_addr in layout.gpio:
                value = sensor.read(cycle, dma_addr) & WORD_MASK
            else:
                value = machine.load_word(dma_addr)
            machine.dma_read_log.append((cycle, dma_addr, value))

    if irq_line and not machine.halted:
        next_pc = layout.effective_irq_vector

    machine.pc = next_pc
    return StateRecord(
        cycle=cycle, pc=pc, r_en=r_en, w_en=w_en, d_addr=d_addr,
        dma_en=dma_en, dma_addr=dma_addr, dma_write=dma_write,
        irq=irq_line, reset=False, executed=pc, er_min=er[0], er_max=er[1],
    )


@dataclass
class RunContext:
    """Schedules and knobs shared by every stepping loop."""

    sensor: SensorProvider = field(default_factory=ConstantSensor)
    dma_schedule: dict[int, DmaRequest] = field(default_factory=dict)
    irq_cycles: frozenset[int] = frozenset()
    post_reset_cycles: int = 16
    on_reset: Callable[["Machine"], None] | None = None

    @staticmethod
    def build(sensor: SensorProvider | None = None,
              dma: Iterable[DmaRequest] = (),
              irq_cycles: Iterable[int] = (),
              post_reset_cycles: int = 16,
              on_reset: Callable[["Machine"], None] | None = None) -> "RunContext":
        schedule: dict[int, DmaRequest] = {}
        for req in dma:
            if req.at_cycle in schedule:
                raise ValueError(f"two DMA requests at cycle {req.at_cycle}")
            schedule[req.at_cycle] = req
        return RunContext(
            sensor=sensor or ConstantSensor(),
            dma_schedule=schedule,
            irq_cycles=frozenset(irq_cycles),
            post_reset_cycles=post_reset_cycles,
            on_reset=on_reset,
        )


def run(machine: Machine, monitor, ctx: RunContext, max_cycles: int,
        trace: Trace | None = None) -> Trace:
    """Step machine and monitor in lock-step until halt, budget, or settle.

    ``monitor`` is any object with ``step(MonitorInput) -> bool`` and
    ``force_reset()``; pass ``monitor=None`` to run the bare machine. After
    the first reset the run continues ``ctx.post_reset_cycles`` more records
    to make post-reset state observable, then terminates as a reset sink.
    """
    from .monitor import MonitorInput  # local import to avoid a cycle

    if max_cycles <= 0:
        raise ValueError("max_cycles must be positive")
    trace = trace if trace is not None else Trace()
    remaining_after_reset: int | None = None
    for _ in range(max_cycles):
        if machine.halted:
            trace.terminal = "halted"
            return trace
        dma_req = ctx.dma_schedule.get(machine.cycle)
        irq_line = machine.cycle in ctx.irq_cycles
        rec = exec_step(machine, dma_req, irq_line, ctx.sensor)
        fault = rec.reset
        monitor_reset = False
        if monitor is not None:
            m_in = MonitorInput(
                pc=rec.pc, r_en=rec.r_en, w_en=rec.w_en, d_addr=rec.d_addr,
                dma_en=rec.dma_en, dma_addr=rec.dma_addr, irq=rec.irq,
                er_min=rec.er_min, er_max=rec.er_max,
            )
            monitor_reset = monitor.step(m_in)
        if fault or monitor_reset:
            rec = replace(rec, reset=True)
            if monitor is not None:
                monitor.force_reset()
            reset_routine(machine)
            if ctx.on_reset is not None:
                ctx.on_reset(machine)
            if remaining_after_reset is None:
                remaining_after_reset = ctx.post_reset_cycles
        trace.records.append(rec)
        if remaining_after_reset is not None:
            if remaining_after_reset == 0:
                trace.terminal = "reset-sink"
                return trace
            remaining_after_reset -= 1
    trace.terminal = "halted" if machine.halted else "max-cycles"
    return trace
