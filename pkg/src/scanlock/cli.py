"""Command-line front end.

Exit codes: 0 success, 1 verdict-level failure, 2 usage or I/O error.
"""
from __future__ import annotations

import argparse
import logging
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import kaglab, report
from .attacker import AttackLimits, Verdict, verify_flow
from .locker import (BudgetExhausted, LockedDesign, LockingError, as_design, ibla, ikpa, load_design,
                     lock_eff, parse_key, serialize_key)
from .netcore import NetlistError, read_bench, serialize_bench
from .scanmodel import ScanError, default_chains, parse_chains, serialize_chains
from .unroller import unroll

log = logging.getLogger("scanlock")


class UsageError(Exception):
    pass


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def _bench(path):
    _read(path)
    return read_bench(path)


def _stem(path: Path) -> str:
    name = path.name
    for suffix in (".bench",):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    return name


def _siblings(bench: Path) -> dict[str, Path]:
    """Default key/chain/original paths next to ``<stem>.<style>.bench``."""
    stem = _stem(bench)
    base = stem.rsplit(".", 1)[0] if "." in stem else stem
    return {"key": bench.with_name(stem + ".key"), "chain": bench.with_name(stem + ".chain"),
            "original": bench.with_name(base + ".orig.bench")}


def _load(bench: str, key: str | None, chain: str | None, original: str | None) -> LockedDesign:
    path = Path(bench)
    sib = _siblings(path)
    netlist = _bench(path)
    key_path = Path(key) if key else sib["key"]
    chain_path = Path(chain) if chain else sib["chain"]
    orig_path = Path(original) if original else sib["original"]
    kv = parse_key(_read(key_path)) if key_path.exists() or key else None
    chains = parse_chains(_read(chain_path)) if chain_path.exists() or chain else None
    orig = _bench(orig_path) if orig_path.exists() or original else None
    if kv is None:
        return as_design(netlist, chains)
    return load_design(netlist, kv, chains, orig)


def _limits(args) -> AttackLimits:
    return AttackLimits(time_limit=args.time_limit, seed=args.seed)


# -- commands ---------------------------------------------------------------------------

def cmd_lock(args) -> int:
    src = Path(args.bench)
    netlist = _bench(src)
    chains = parse_chains(_read(args.chain)) if args.chain else default_chains(netlist)
    base: LockedDesign = as_design(netlist, chains)
    if args.key:
        base = load_design(netlist, parse_key(_read(args.key)), chains)
    limits = _limits(args)
    attacks = tuple(args.attack)
    if args.style == "eff":
        ffs = args.ffs.split(",") if args.ffs else list(netlist.dffs)
        design = lock_eff(base, None, ffs, seed=args.seed)
    elif args.algorithm == "ikpa":
        design = ikpa(base, cycles=args.cycles, seed=args.seed, attacks=attacks, limits=limits)
    else:
        design = ibla(base, gamma=args.gamma, cycles=args.cycles, seed=args.seed, attacks=attacks,
                      limits=limits)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = _stem(src)
    target = out / f"{stem}.{args.style}"
    Path(f"{target}.bench").write_text(serialize_bench(design.netlist))
    Path(f"{target}.key").write_text(serialize_key(design.correct_key))
    Path(f"{target}.chain").write_text(serialize_chains(design.chains))
    orig = out / f"{stem}.orig.bench"
    if args.key:
        orig.write_text(serialize_bench(design.original))
    elif src.resolve() != orig.resolve():
        shutil.copyfile(src, orig)
    print(f"{target}.bench: {design.n_locked} flip-flop(s) locked, {len(design.key_names)} key bits")
    if design.corrupted is False:
        print("warning: the attack still recovers a functionally correct key", file=sys.stderr)
        return 1
    return 0


def cmd_unroll(args) -> int:
    design = _load(args.bench, args.key, args.chain, args.original)
    inst = unroll(design, args.cycles, expose_pis=args.expose_pis)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{_stem(Path(args.bench))}.unrolled{args.cycles}.bench"
    path.write_text(serialize_bench(inst.comb))
    print(path)
    return 0


def _attack_one(job):
    bench, key, chain, original, cycles, attack, limits, expose = job
    design = _load(bench, key, chain, original)
    return verify_flow(design, cycles, attack, limits, expose_pis=expose)


def _jobs(args):
    single = len(args.bench) == 1
    if not single and (args.key or args.chain or args.original):
        raise UsageError("--key/--chain/--original need exactly one bench file")
    limits = _limits(args)
    return [(b, args.key, args.chain, args.original, args.cycles, args.attack, limits, args.expose_pis)
            for b in args.bench]


def _run_jobs(args):
    jobs = _jobs(args)
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            return list(pool.map(_attack_one, jobs))
    return [_attack_one(j) for j in jobs]


def cmd_attack(args) -> int:
    reports = _run_jobs(args)
    rows = [r.csv_row(_stem(Path(b))) for b, r in zip(args.bench, reports)]
    text = report.to_csv(rows)
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "attack.csv").write_text(text)
    bad = [r for r in reports if r.verdict in (Verdict.TIMEOUT, Verdict.NO_KEY)]
    return 1 if bad else 0


def cmd_verify(args) -> int:
    reports = _run_jobs(args)
    status = 0
    for bench, r in zip(args.bench, reports):
        key = " ".join(f"{k}={v}" for k, v in r.recovered_key.bits.items()) if r.recovered_key else "-"
        print(f"{bench}: verdict={r.verdict.value} scan_correct={r.scan_correct} "
              f"functionally_equivalent={r.functionally_equivalent} kc_correct={r.kc_correct} "
              f"dips={r.dip_count} elapsed_ms={r.elapsed_ms}")
        print(f"  key: {key}")
        if r.phi:
            print("  phi: " + " ".join(f"{k}={v}" for k, v in r.phi.items()))
        if r.verdict is not Verdict.RESILIENT:
            status = 1
    return status


def cmd_census(args) -> int:
    rows = []
    for bench in args.bench:
        design = _load(bench, args.key, args.chain, args.original)
        rows.append((_stem(Path(bench)), kaglab.census(design, args.method)))
    sys.stdout.write(kaglab.census_csv(rows))
    return 0


def cmd_truth_table(args) -> int:
    design = _load(args.bench, args.key, args.chain, args.original)
    table = kaglab.truth_table(design, complement_xnor=args.complement_xnor)
    sys.stdout.write(table.to_csv())
    return 0


def cmd_report(args) -> int:
    for p in args.csv:
        if not Path(p).exists():
            raise UsageError(f"no such file: {p}")
    files = report.write_report(args.csv, args.out)
    sys.stdout.write(files["merged"].read_text())
    return 0


# -- parser -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scanlock", description="Scan locking and scan-unrolled SAT attacks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, many=False):
        sp.add_argument("bench", nargs="+" if many else None)
        sp.add_argument("--key", help="key file (default: <stem>.key)")
        sp.add_argument("--chain", help="chain file (default: <stem>.chain)")
        sp.add_argument("--original", help="unlocked bench (default: <base>.orig.bench)")
        sp.add_argument("--seed", type=int, default=0)

    def attack_opts(sp):
        sp.add_argument("--cycles", type=int, default=1)
        sp.add_argument("--attack", choices=("sat", "ddip"), default="sat")
        sp.add_argument("--time-limit", type=float, default=60.0)
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--expose-pis", action="store_true")

    sp = sub.add_parser("lock", help="lock a bench file")
    sp.add_argument("bench")
    sp.add_argument("--style", choices=("eff", "seql"), required=True)
    sp.add_argument("--algorithm", choices=("ibla", "ikpa"), default="ibla")
    sp.add_argument("--gamma", type=float, default=0.05)
    sp.add_argument("--cycles", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--time-limit", type=float, default=60.0)
    sp.add_argument("--attack", choices=("sat", "ddip"), action="append",
                    help="attack(s) the lock must defeat (repeatable; default sat)")
    sp.add_argument("--ffs", help="comma-separated flip-flops for --style eff (default: all)")
    sp.add_argument("--chain")
    sp.add_argument("--key", help="key file of a logic-locked input (needed for ikpa)")
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_lock)

    sp = sub.add_parser("unroll", help="write the scan-unrolled attack instance")
    common(sp)
    sp.add_argument("--cycles", type=int, default=1)
    sp.add_argument("--expose-pis", action="store_true")
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_unroll)

    sp = sub.add_parser("attack", help="attack locked designs, one CSV row each")
    common(sp, many=True)
    attack_opts(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_attack)

    sp = sub.add_parser("verify", help="attack and explain the verdict")
    common(sp, many=True)
    attack_opts(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("census", help="count scan-correct and functionally correct keys")
    common(sp, many=True)
    sp.add_argument("--method", choices=("brute_force", "closed_form"), default="brute_force")
    sp.set_defaults(func=cmd_census)

    sp = sub.add_parser("truth-table", help="every key with its correctness flags")
    common(sp)
    sp.add_argument("--complement-xnor", action="store_true",
                    help="list XNOR-gated keys by their complement")
    sp.set_defaults(func=cmd_truth_table)

    sp = sub.add_parser("report", help="merge attack CSVs and plot p and time against n")
    sp.add_argument("csv", nargs="*")
    sp.add_argument("--out", default="report")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "attack", None) is None and args.command == "lock":
        args.attack = ["sat"]
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BudgetExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (UsageError, NetlistError, ScanError, LockingError, kaglab.CensusError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
