"""Command-line entry points.

Four subcommands: ``authorize`` (controller side), ``run`` (stage, verify,
and execute a message on a simulated device), ``check`` (exhaustive monitor
verification), and ``attack`` (the scenario game). Exit codes are a stable
CI contract: 0 expected verdict, 1 property violation or adversary win,
2 usage error. The ``MCUSENTRY_LAYOUT`` environment variable supplies a
default layout file.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .catalogue import catalogue_by_name
from .checker import (check_catalogue, exhaustive_check, find_mutant_violation,
                      replay_counterexample, scaled_space)
from .errors import McuSentryError
from .layout import ErWindow, default_layout, parse_layout
from .ltl import parse as parse_formula
from .machine import (ConstantSensor, DmaRequest, RunContext, SequenceSensor,
                      Trace, load_image, run)
from .monitor import Monitor
from .mutants import MUTANTS, mutant_guards
from .protocol import (AuthorizationMessage, authorize_ctrl, install,
                       settle_after_verify, verify_dev, xsensing)
from .referee import DEFAULT_KEY, run_campaign, summary_table

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2


def _load_layout(path: str | None):
    path = path or os.environ.get("MCUSENTRY_LAYOUT")
    if path is None:
        return default_layout()
    return parse_layout(Path(path).read_text())


def _parse_window(text: str) -> ErWindow:
    lo, _, hi = text.partition(":")
    return ErWindow(int(lo, 0), int(hi, 0))


def cmd_authorize(args) -> int:
    key = Path(args.key).read_bytes()
    if len(key) != 32:
        print("error: key file must hold exactly 32 bytes", file=sys.stderr)
        return EXIT_USAGE
    binary = Path(args.binary).read_bytes()
    counter_path = Path(args.counter)
    if counter_path.exists():
        text = counter_path.read_text().strip()
        if not text.isdigit():
            print(f"error: corrupt counter file {counter_path}", file=sys.stderr)
            return EXIT_USAGE
        counter = int(text)
    else:
        counter = 0
    msg, counter = authorize_ctrl(key, counter, binary)
    Path(args.out).write_bytes(msg.to_wire())
    counter_path.write_text(f"{counter}\n")
    print(f"message written to {args.out} (challenge {msg.chal})")
    return EXIT_OK


def _sensor_from_args(args):
    if args.sensor_file:
        return SequenceSensor(Path(args.sensor_file).read_bytes())
    return ConstantSensor(args.sensor_const)


def _schedules_from_args(args):
    dma = []
    if args.dma_file:
        for line in Path(args.dma_file).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            cycle, op, addr = int(parts[0], 0), parts[1], int(parts[2], 0)
            value = int(parts[3], 0) if len(parts) > 3 else 0
            dma.append(DmaRequest(cycle, op, addr, value))
    irq = []
    if args.irq_file:
        for line in Path(args.irq_file).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                irq.append(int(line, 0))
    return dma, irq


def cmd_run(args) -> int:
    layout = _load_layout(args.layout)
    er = _parse_window(args.er)
    image = Path(args.image).read_bytes() if args.image else b""
    rom = Path(args.rom).read_bytes() if args.rom else None
    machine = load_image(layout, image, er, rom=rom)
    monitor = Monitor.for_layout(layout, ekr_enabled=not args.no_ekr)
    dma, irq = _schedules_from_args(args)
    ctx = RunContext.build(sensor=_sensor_from_args(args), dma=dma,
                           irq_cycles=irq)
    records = []
    boot = run(machine, monitor, ctx, args.boot_cycles)
    records.extend(boot.records)

    msg = AuthorizationMessage.from_wire(Path(args.message).read_bytes())
    records.extend(install(msg, machine, er, monitor))
    verdict_line = ""
    if not args.skip_verify:
        ok, vrecs = verify_dev(DEFAULT_KEY if args.key is None
                               else Path(args.key).read_bytes(),
                               machine, monitor)
        records.extend(vrecs)
        settle_after_verify(machine, monitor, vrecs)
        verdict_line += f"verify={'top' if ok else 'bottom'} "
    trace, sensed = xsensing(machine, monitor, ctx, args.max_cycles)
    records.extend(trace.records)
    full = Trace(records=records, terminal=trace.terminal)
    if args.trace_out:
        Path(args.trace_out).write_text(full.dump(layout))
    verdict = "top" if sensed else "bottom"
    print(f"{verdict_line}xsensing={verdict}")
    expected = args.expect == verdict
    return EXIT_OK if expected else EXIT_VIOLATION


def cmd_check(args) -> int:
    space = scaled_space(args.width)
    guards = mutant_guards(args.mutate) if args.mutate else None
    ekr = not args.no_ekr
    if args.mutate:
        name, result = find_mutant_violation(args.mutate, space, ekr_enabled=ekr)
        if name is None:
            print(f"mutant {args.mutate}: no catalogue formula violated")
            return EXIT_VIOLATION
        replayed = replay_counterexample(
            catalogue_by_name(ekr)[name].formula, result.counterexample,
            space, mutant_guards(args.mutate), ekr)
        print(f"mutant {args.mutate}: violates {name} "
              f"(counterexample of {result.counterexample.length} steps, "
              f"replayed={'ok' if replayed else 'FAILED'})")
        if args.counterexample_out:
            _dump_lasso(args.counterexample_out, result.counterexample, space)
        return EXIT_OK if replayed else EXIT_VIOLATION

    if args.formula or args.formula_file:
        if args.formula_file:
            formula = parse_formula(Path(args.formula_file).read_text())
            name = args.formula_file
        else:
            entries = catalogue_by_name(ekr)
            if args.formula in entries:
                formula = entries[args.formula].formula
            else:
                formula = parse_formula(args.formula)
            name = args.formula
        result = exhaustive_check(formula, space, ekr_enabled=ekr, name=name)
        print(f"{name}: {result.verdict} "
              f"(explored {result.explored_states} states)")
        if result.counterexample and args.counterexample_out:
            _dump_lasso(args.counterexample_out, result.counterexample, space)
        return EXIT_OK if result.holds else EXIT_VIOLATION

    results = check_catalogue(space, ekr_enabled=ekr)
    bad = 0
    for result in results:
        print(f"{result.formula_name:32} {result.verdict:9} "
              f"explored={result.explored_states}")
        bad += 0 if result.holds else 1
    return EXIT_OK if bad == 0 else EXIT_VIOLATION


def _dump_lasso(path: str, lasso, space) -> None:
    # Same tab-separated record format as simulator trace dumps, with the
    # loop boundary marked in the trailing comment line.
    from dataclasses import replace

    records = [replace(r, cycle=i)
               for i, r in enumerate(list(lasso.prefix) + list(lasso.loop))]
    trace = Trace(records=records, terminal="lasso")
    dump = trace.dump(space)
    dump = dump.replace("#terminal=lasso",
                        f"#loop_start={len(lasso.prefix)}")
    Path(path).write_text(dump)


def cmd_attack(args) -> int:
    names = None if args.all or args.name is None else [args.name]
    results = run_campaign(names=names, random_count=args.random,
                           seed=args.seed, jobs=args.jobs)
    if args.report:
        import json
        with open(args.report, "w") as fh:
            for r in results:
                fh.write(json.dumps(r, sort_keys=True) + "\n")
    print(summary_table(results))
    wins = sum(1 for r in results if r["adversary_wins"])
    violations = sum(len(r["goal_violations"]) for r in results)
    return EXIT_OK if wins == 0 and violations == 0 else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcusentry",
        description="simulate, verify, and attack the sensing-authorization monitor")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("authorize", help="produce an authorization message")
    p.add_argument("--key", required=True, help="32-byte master key file")
    p.add_argument("--binary", required=True, help="binary to authorize")
    p.add_argument("--counter", required=True, help="controller counter file")
    p.add_argument("--out", required=True, help="output message file")
    p.set_defaults(fn=cmd_authorize)

    p = sub.add_parser("run", help="stage, verify, and execute a message")
    p.add_argument("--layout", help="layout config (or MCUSENTRY_LAYOUT)")
    p.add_argument("--image", help="flat memory image file")
    p.add_argument("--rom", help="trusted ROM image file")
    p.add_argument("--er", required=True, help="window as start:last_word (hex ok)")
    p.add_argument("--message", required=True, help="authorization message file")
    p.add_argument("--key", help="device master key file (demo default if omitted)")
    p.add_argument("--sensor-file", help="sensor word stream file")
    p.add_argument("--sensor-const", type=lambda s: int(s, 0), default=0)
    p.add_argument("--dma-file", help="lines: cycle op addr [value]")
    p.add_argument("--irq-file", help="lines: cycle")
    p.add_argument("--max-cycles", type=int, default=2000)
    p.add_argument("--boot-cycles", type=int, default=3)
    p.add_argument("--skip-verify", action="store_true")
    p.add_argument("--no-ekr", action="store_true")
    p.add_argument("--trace-out", help="write the trace dump here")
    p.add_argument("--expect", choices=["top", "bottom"], default="top")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("check", help="exhaustively verify monitor properties")
    p.add_argument("--formula", help="catalogue name or formula text")
    p.add_argument("--formula-file", help="file holding formula text")
    p.add_argument("--width", type=int, default=6, help="address width in bits")
    p.add_argument("--mutate", choices=sorted(MUTANTS),
                   help="check a single-guard mutant instead")
    p.add_argument("--no-ekr", action="store_true")
    p.add_argument("--counterexample-out")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("attack", help="run the adversarial scenario game")
    p.add_argument("--all", action="store_true", help="whole catalogue (default)")
    p.add_argument("--name", help="one catalogue scenario")
    p.add_argument("--random", type=int, default=0, metavar="N",
                   help="additional randomized scenarios")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report", help="write a JSON-lines report here")
    p.set_defaults(fn=cmd_attack)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (McuSentryError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
