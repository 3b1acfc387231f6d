"""Named propositions over per-cycle records.

Every proposition is total over StateRecord-like objects (the simulator's
records and the checker's synthesized letters expose the same fields).
Window membership uses the record's own sampled bounds, so metadata
rewrites are reflected position by position.

Naming note: the machine-axiom tag sets distinguish CPU reads from DMA
reads; the monitor's access macros deliberately do not. Both families are
exposed here under distinct names.
"""
from __future__ import annotations

from typing import Callable

from .layout import MemoryLayout, Region

PropFn = Callable[[object], bool]


def _region_of(layout: MemoryLayout, name: str) -> Region:
    key = "er_metadata" if name == "METADATA" else name.lower()
    return layout.region_named(key)


def _in_window(rec, addr: int) -> bool:
    return rec.er_min <= addr <= rec.er_max


def _read_mem(rec, region: Region | None) -> bool:
    if region is None:  # the live window
        return (rec.r_en and _in_window(rec, rec.d_addr)) or \
            (rec.dma_en and _in_window(rec, rec.dma_addr))
    return (rec.r_en and rec.d_addr in region) or \
        (rec.dma_en and rec.dma_addr in region)


def _write_mem(rec, region: Region | None) -> bool:
    if region is None:
        return (rec.w_en and _in_window(rec, rec.d_addr)) or \
            (rec.dma_en and _in_window(rec, rec.dma_addr))
    return (rec.w_en and rec.d_addr in region) or \
        (rec.dma_en and rec.dma_addr in region)


def build_props(layout: MemoryLayout) -> dict[str, PropFn]:
    """Proposition table for one layout; keys match the formula text format."""
    props: dict[str, PropFn] = {
        "irq": lambda r: r.irq,
        "reset": lambda r: r.reset,
        "dmaen": lambda r: r.dma_en,
        "true": lambda r: True,
        "false": lambda r: False,
        "pc_at zero": lambda r: r.pc == 0,
        "pc_at iauth": lambda r: r.pc == layout.i_auth,
        "pc_at ermin": lambda r: r.pc == r.er_min,
        "pc_at ermax": lambda r: r.pc == r.er_max,
        "pc_in ER": lambda r: _in_window(r, r.pc),
        "pc_in VR": lambda r: r.pc in layout.vr,
        "exec_in ER": lambda r: r.executed is not None and _in_window(r, r.executed),
    }

    for name in ("GPIO", "EKR", "METADATA", "VR", "ROM", "PMEM", "DMEM"):
        region = _region_of(layout, name)
        props[f"read {name}"] = (lambda r, reg=region: _read_mem(r, reg))
        props[f"write {name}"] = (lambda r, reg=region: _write_mem(r, reg))
        props[f"cpu_read {name}"] = (lambda r, reg=region: r.r_en and r.d_addr in reg)
        props[f"cpu_write {name}"] = (lambda r, reg=region: r.w_en and r.d_addr in reg)
        props[f"dma_touch {name}"] = (lambda r, reg=region: r.dma_en and r.dma_addr in reg)
    props["read ER"] = lambda r: _read_mem(r, None)
    props["write ER"] = lambda r: _write_mem(r, None)
    props["cpu_read ER"] = lambda r: r.r_en and _in_window(r, r.d_addr)
    props["cpu_write ER"] = lambda r: r.w_en and _in_window(r, r.d_addr)
    props["dma_touch ER"] = lambda r: r.dma_en and _in_window(r, r.dma_addr)

    def tag_prop(tag: str) -> PropFn:
        return lambda r: tag in r.tags(layout)

    for name in ("GPIO", "EKR", "ER", "METADATA", "VR", "ROM", "PMEM", "DMEM"):
        props[f"tag READ {name}"] = tag_prop(f"READ({name})")
        props[f"tag WRITE {name}"] = tag_prop(f"WRITE({name})")
        props[f"tag DMA_R {name}"] = tag_prop(f"DMA_R({name})")
        props[f"tag DMA_W {name}"] = tag_prop(f"DMA_W({name})")
    props["tag IRQ"] = tag_prop("IRQ")
    props["tag RESET"] = tag_prop("RESET")
    return props
