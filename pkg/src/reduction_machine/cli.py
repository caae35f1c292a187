"""Command-line client: argument parsing and file I/O only; all work is
delegated to the service handlers also used by the HTTP API.

Exit codes: 0 success, 1 domain error (bad source, bad config, machine
fault), 2 I/O error (missing or unreadable files).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__, assembler
from .config import load_config, resolve_seed
from .errors import ReductionMachineError
from .service import handlers, models

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_IO = 2


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def cmd_asm(args) -> int:
    source = _read_text(args.input)
    resp = handlers.handle_assemble(models.AssembleRequest(source=source))
    assembler.save_image(resp.words, args.output)
    if args.listing:
        _write_text(args.listing, resp.listing)
    print(f"{args.output}: {len(resp.words)} words")
    return EXIT_OK


def cmd_disasm(args) -> int:
    image = assembler.load_image(args.input)
    resp = handlers.handle_disassemble(models.DisassembleRequest(words=image))
    if args.output:
        _write_text(args.output, resp.source)
    else:
        sys.stdout.write(resp.source)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    image = assembler.load_image(args.program)
    seed = resolve_seed(cfg, args.seed)
    trace_path = args.trace if args.trace else cfg.trace_path
    req = models.RunRequest(
        config=cfg,
        program=image,
        seed=seed,
        max_cycles=args.max_cycles,
        include_trace=trace_path is not None,
    )
    resp = handlers.handle_run(req)
    if trace_path:
        _write_text(
            trace_path,
            "".join(json.dumps(rec) + "\n" for rec in resp.trace),
        )
    _print_run(resp)
    return EXIT_OK


def _print_run(resp: models.RunResponse) -> None:
    status = "halted" if resp.halted else "timed out"
    print(f"{status} after {resp.cycles} cycles ({resp.mode} mode)")
    print("registers:")
    for i, (value, expect) in enumerate(
        zip(resp.registers, resp.register_expectations)
    ):
        if value is not None:
            print(f"  R{i} = {value}")
        else:
            print(f"  R{i} = indefinite (expectation {expect!r})")
    if resp.branch_count > 1:
        print(f"branches: {resp.branch_count}")
    print("memory diff:")
    if resp.memory_diff:
        for d in resp.memory_diff:
            print(f"  [{d['addr']:3d}] {d['before']:#06x} -> {d['after']:#06x}")
    else:
        print("  (none)")
    print("information ledger:")
    print(f"  events: {len(resp.data_log)}")
    print(f"  acquired: {resp.information_bits!r} bits")
    print(f"  predicted entropy: {resp.predicted_entropy_bits!r} bits")


def cmd_ensemble(args) -> int:
    cfg = load_config(args.config)
    image = assembler.load_image(args.program)
    seed = resolve_seed(cfg, args.seed)
    req = models.EnsembleRequest(
        config=cfg,
        program=image,
        n=args.members,
        seed=seed,
        include_members=args.csv is not None,
    )
    if args.compare:
        comparison = handlers.handle_compare(req).comparison
        out = json.dumps(comparison, sort_keys=True, indent=2) + "\n"
        report_path = args.out if args.out else cfg.report_path
        if report_path:
            _write_text(report_path, out)
        _print_compare(comparison)
        return EXIT_OK
    resp = handlers.handle_ensemble(req)
    report_path = args.out if args.out else cfg.report_path
    if report_path:
        _write_text(
            report_path, json.dumps(resp.report, sort_keys=True, indent=2) + "\n"
        )
    if args.csv:
        _write_text(args.csv, resp.members_csv)
    _print_report(resp.report)
    return EXIT_OK


def _print_report(report: dict) -> None:
    print(f"members: {report['n_members']}")
    print("macrostate histogram:")
    for key, count in sorted(report["outcome_histogram"].items()):
        label = key if key else "(no events)"
        print(f"  {label}: {count}")
    print(f"empirical entropy: {report['empirical_entropy_bits']!r} bits")
    print(f"predicted entropy: {report['predicted_entropy_bits']!r} bits")
    print(f"information acquired: {report['information_acquired_bits']!r} bits/member")
    print(f"max pruned mass: {report['pruned_mass_max']!r}")


def _print_compare(comparison: dict) -> None:
    c = comparison["comparisons"]
    print("model comparison:")
    print(
        "  purity: fine always pure = "
        f"{c['microstate_purity']['fine_always_pure']}, "
        f"coarse always pure = {c['microstate_purity']['coarse_always_pure']}"
    )
    print(
        f"  outcomes: fine {c['outcomes']['fine_n_macrostates']} macrostate(s) / "
        f"{c['outcomes']['fine_information_bits']!r} bits, "
        f"coarse {c['outcomes']['coarse_n_macrostates']} macrostate(s) / "
        f"{c['outcomes']['coarse_information_bits']!r} bits"
    )
    print(
        f"  capacity: {c['capacity']['capacity_bits']} bits "
        f"(limit {c['capacity']['branch_limit']} branches), "
        f"coarse pruned mass max {c['capacity']['coarse_pruned_mass_max']!r}"
    )


def cmd_physics(args) -> int:
    cfg = load_config(args.config)
    resp = handlers.handle_physics(
        models.PhysicsRequest(config=cfg, sweep=args.sweep)
    )
    for warning in resp.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    csv = handlers.physics_csv(resp)
    if args.out:
        _write_text(args.out, csv)
    else:
        sys.stdout.write(csv)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reduction-machine",
        description="Assemble, run and measure programs on the pin machine.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("asm", help="assemble a source file to a memory image")
    p.add_argument("input", help="assembly source (.asm)")
    p.add_argument("-o", "--output", required=True, help="memory image output (.bin)")
    p.add_argument("--listing", help="write an address/word listing (.lst)")
    p.set_defaults(func=cmd_asm)

    p = sub.add_parser("disasm", help="disassemble a memory image")
    p.add_argument("input", help="memory image (.bin)")
    p.add_argument("-o", "--output", help="write text here instead of stdout")
    p.set_defaults(func=cmd_disasm)

    p = sub.add_parser("run", help="run one machine and print its ledger")
    p.add_argument("config", help="run configuration (.json)")
    p.add_argument("program", help="memory image (.bin)")
    p.add_argument("--trace", help="write a JSON-lines trace here")
    p.add_argument("--max-cycles", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ensemble", help="run an ensemble and aggregate statistics")
    p.add_argument("config", help="run configuration (.json)")
    p.add_argument("program", help="memory image (.bin)")
    p.add_argument("-n", "--members", type=int, default=None)
    p.add_argument("--out", help="write the report JSON here")
    p.add_argument("--csv", help="write per-member outcomes CSV here")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument(
        "--compare",
        action="store_true",
        help="run both register models and report the comparison",
    )
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("physics", help="report pointer kinematics, optionally swept")
    p.add_argument("config", help="run configuration (.json)")
    p.add_argument("--sweep", help="param=lo:hi:steps over a config field")
    p.add_argument("--out", help="write the CSV here instead of stdout")
    p.set_defaults(func=cmd_physics)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ReductionMachineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
