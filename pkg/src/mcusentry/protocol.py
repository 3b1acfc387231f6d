"""Controller/device sensing-authorization protocol.

The controller authorizes a binary by binding it to a fresh monotone
challenge under the shared master key; the device stages the message,
recomputes the digest over the *live window bytes*, and only a match
raises the program counter to the authorization address. Verification is
trusted emulator-native code: it synthesizes the monitor-visible record
pattern (window reads from trusted-verifier addresses, key-region writes,
the final authorization record) instead of running foreign instructions,
with a record count affine in the window size.

Wire format of an authorization message, bit exact:

    "VRSA" | chal (8 bytes BE) | token (32 bytes) | length (4 bytes BE) | binary
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .crypto import (CHAL_BYTES, KEY_BYTES, MAC_BYTES, derive_enc_key,
                     token_mac)
from .errors import SizeError
from .layout import ErWindow
from .machine import Machine, RunContext, StateRecord, Trace, reset_routine, run
from .monitor import Monitor, MonitorInput

MAGIC = b"VRSA"

# Record-count model for one verification pass.
VERIFY_HEADER_RECORDS = 6       # mailbox parse and counter compare
VERIFY_RECORDS_PER_WORD = 1     # digest sweep over the window
VERIFY_TAIL_RECORDS = 2         # token compare and bookkeeping

TOP = True
BOTTOM = False


@dataclass(frozen=True)
class AuthorizationMessage:
    binary: bytes
    chal: int
    token: bytes

    def to_wire(self) -> bytes:
        if len(self.token) != MAC_BYTES:
            raise SizeError("token must be 32 bytes")
        return (MAGIC + self.chal.to_bytes(CHAL_BYTES, "big") + self.token
                + len(self.binary).to_bytes(4, "big") + self.binary)

    @staticmethod
    def from_wire(blob: bytes) -> "AuthorizationMessage":
        if len(blob) < len(MAGIC) + CHAL_BYTES + MAC_BYTES + 4:
            raise SizeError("message too short")
        if blob[:4] != MAGIC:
            raise SizeError("bad message magic")
        chal = int.from_bytes(blob[4:12], "big")
        token = blob[12:44]
        length = int.from_bytes(blob[44:48], "big")
        body = blob[48:48 + length]
        if len(body) != length:
            raise SizeError("message truncated")
        return AuthorizationMessage(binary=body, chal=chal, token=token)


def authorize_ctrl(key: bytes, ctrl_counter: int, binary: bytes,
                   capacity: int | None = None) -> tuple[AuthorizationMessage, int]:
    """Controller side: bind ``binary`` to the next challenge value.

    Each call consumes one challenge; issuing several messages for the same
    binary yields a batch of independently usable one-shot tokens.
    """
    if len(key) != KEY_BYTES:
        raise SizeError(f"key must be {KEY_BYTES} bytes")
    if not binary:
        raise SizeError("refusing to authorize an empty binary")
    if capacity is not None and len(binary) > capacity:
        raise SizeError(f"binary of {len(binary)} bytes exceeds capacity {capacity}")
    chal = ctrl_counter + 1
    msg = AuthorizationMessage(binary=binary, chal=chal,
                               token=token_mac(key, chal, binary))
    return msg, chal


def install(msg: AuthorizationMessage, machine: Machine, er: ErWindow,
            monitor: Monitor | None = None,
            installer_pc: int | None = None) -> list[StateRecord]:
    """Stage a message on the device: binary into the window (zero padded),
    challenge and token into the mailbox, bounds into the metadata cells.

    Staging runs as ordinary unprivileged stores, so the monitor observes
    every window and metadata write; re-staging after a successful
    verification is therefore a revocation event, exactly like any other
    tampering. Returns the emitted records.
    """
    layout = machine.layout
    layout.validate_window(er)
    span = er.byte_span
    if len(msg.binary) > span:
        raise SizeError(f"binary of {len(msg.binary)} bytes exceeds window of {span}")
    if installer_pc is None:
        installer_pc = (layout.pmem.start + 0x80) & 0xFFFE
    padded = msg.binary + bytes(span - len(msg.binary))
    records: list[StateRecord] = []

    def staged_write(addr: int, chunk: bytes) -> None:
        # Signals first, memory effect at end of cycle, like exec_step.
        for i in range(0, len(chunk), 2):
            word = int.from_bytes(chunk[i:i + 2].ljust(2, b"\x00"), "little")
            _emit(machine, monitor, records, installer_pc,
                  w_en=True, d_addr=addr + i)
            machine.store_word(addr + i, word)

    mb = layout.atok_mailbox.start
    staged_write(mb, msg.chal.to_bytes(CHAL_BYTES, "big") + msg.token)
    staged_write(er.er_min, padded)
    staged_write(layout.er_min_cell,
                 er.er_min.to_bytes(2, "little") + er.er_max.to_bytes(2, "little"))
    return records


def stored_counter(machine: Machine) -> int:
    start = machine.layout.counter_cell.start
    return int.from_bytes(machine.memory[start:start + 8], "big")


def _set_stored_counter(machine: Machine, value: int) -> None:
    start = machine.layout.counter_cell.start
    machine.memory[start:start + 8] = value.to_bytes(8, "big")


def _emit(machine: Machine, monitor: Monitor | None, records: list[StateRecord],
          pc: int, *, r_en: bool = False, w_en: bool = False,
          d_addr: int = 0) -> bool:
    # Verifier execution is uninterruptible: DMA and IRQ are never serviced
    # during these cycles; pending requests at these cycles lapse.
    er_min, er_max = machine.er_window()
    rec = StateRecord(cycle=machine.cycle, pc=pc, r_en=r_en, w_en=w_en,
                      d_addr=d_addr, irq=False, er_min=er_min, er_max=er_max,
                      executed=pc)
    machine.cycle += 1
    reset = False
    if monitor is not None:
        reset = monitor.step(MonitorInput(
            pc=rec.pc, r_en=rec.r_en, w_en=rec.w_en, d_addr=rec.d_addr,
            dma_en=False, dma_addr=0, irq=False,
            er_min=er_min, er_max=er_max))
    if reset:
        rec = replace(rec, reset=True)
    records.append(rec)
    return reset


def verify_dev(key: bytes, machine: Machine,
               monitor: Monitor | None) -> tuple[bool, list[StateRecord]]:
    """Device-side verification over the live window bytes.

    Rejects stale challenges before any digest work. On a digest match the
    stored counter advances, the fresh one-time key lands in the key
    region, and the final emitted record sits at the authorization address;
    on mismatch that address is never reached and the staged message stays
    for retry.
    """
    layout = machine.layout
    records: list[StateRecord] = []
    vr = layout.vr
    mb = layout.atok_mailbox.start
    chal = int.from_bytes(machine.memory[mb:mb + CHAL_BYTES], "big")
    staged_token = bytes(machine.memory[mb + CHAL_BYTES:mb + CHAL_BYTES + MAC_BYTES])

    pc_cursor = vr.start

    def vr_pc() -> int:
        nonlocal pc_cursor
        pc = pc_cursor
        pc_cursor += 2
        if pc_cursor > vr.end:
            pc_cursor = vr.start
        return pc

    for i in range(VERIFY_HEADER_RECORDS):
        if _emit(machine, monitor, records, vr_pc(),
                 r_en=True, d_addr=(mb + 2 * i) & 0xFFFE):
            return BOTTOM, records

    if chal <= stored_counter(machine):
        return BOTTOM, records

    er_min, er_max = machine.er_window()
    if er_min > er_max:
        return BOTTOM, records
    window_bytes = bytes(machine.memory[er_min:er_max + 2])
    for offset in range(0, len(window_bytes), 2):
        for _ in range(VERIFY_RECORDS_PER_WORD):
            if _emit(machine, monitor, records, vr_pc(),
                     r_en=True, d_addr=er_min + offset):
                return BOTTOM, records
    sigma = token_mac(key, chal, window_bytes)

    for _ in range(VERIFY_TAIL_RECORDS):
        if _emit(machine, monitor, records, vr_pc()):
            return BOTTOM, records

    # Constant-time compare is irrelevant in simulation; equality is the contract.
    if sigma != staged_token:
        return BOTTOM, records

    _set_stored_counter(machine, chal)
    k_enc = derive_enc_key(key, chal)
    ekr = layout.ekr
    for i in range(0, min(len(k_enc), len(ekr)), 2):
        machine.store_word(ekr.start + i, int.from_bytes(k_enc[i:i + 2], "little"))
        if _emit(machine, monitor, records, vr_pc(),
                 w_en=True, d_addr=ekr.start + i):
            return BOTTOM, records
    _emit(machine, monitor, records, layout.i_auth)
    return TOP, records


def verify_record_count(window_span_bytes: int) -> int:
    """Closed-form record count of a successful verification (cost model)."""
    words = window_span_bytes // 2
    kenc_writes = 16
    return (VERIFY_HEADER_RECORDS + VERIFY_RECORDS_PER_WORD * words
            + VERIFY_TAIL_RECORDS + kenc_writes + 1)


def settle_after_verify(machine: Machine, monitor: Monitor | None,
                        records: list[StateRecord]) -> None:
    """If verification ended in a monitor reset, complete the machine reset."""
    if records and records[-1].reset:
        if monitor is not None:
            monitor.force_reset()
        reset_routine(machine)


def xsensing(machine: Machine, monitor: Monitor | None, ctx: RunContext,
             max_cycles: int = 2000) -> tuple[Trace, bool]:
    """Jump to the live window start and run; report whether sensing happened.

    Success means at least one record carries an un-reset CPU read of GPIO.
    Calling without a prior successful verification is legal; the monitor
    then punishes the first GPIO access.
    """
    er_min, _ = machine.er_window()
    machine.pc = er_min & 0xFFFE
    machine.halted = False
    trace = run(machine, monitor, ctx, max_cycles)
    return trace, sensing_verdict(trace, machine)


def sensing_verdict(trace: Trace, machine: Machine) -> bool:
    gpio = machine.layout.gpio
    return any(r.r_en and r.d_addr in gpio and not r.reset for r in trace)
