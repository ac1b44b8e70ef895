"""Oracle-guided SAT attack, Double-DIP, and the verification flow."""
from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field
from typing import Mapping

from .locker import KeyVector, LockedDesign, Partition, as_design
from .netcore import Netlist, comb_view
from .satkit.cnf import CnfBuilder
from .satkit.equivalence import Equivalence, check_equivalence
from .satkit.solver import Solver, Status
from .scanmodel import OracleConfig
from .unroller import AttackInstance, apply_key, oracle_instance, unroll

log = logging.getLogger(__name__)


class Verdict(enum.Enum):
    BROKEN = "BROKEN"
    RESILIENT = "RESILIENT"
    TIMEOUT = "TIMEOUT"
    NO_KEY = "NO_KEY"


class AttackAnomaly(RuntimeError):
    """A recovered key that is neither scan-correct nor functionally correct."""


@dataclass(frozen=True)
class AttackLimits:
    time_limit: float = 60.0      # seconds for the whole attack
    max_dips: int | None = None
    seed: int = 0


@dataclass
class AttackReport:
    recovered_key: KeyVector | None
    dip_count: int
    scan_correct: bool | None
    functionally_equivalent: bool | None
    elapsed: float
    verdict: Verdict
    attack: str = "sat"
    cycles: int = 1
    n_locked: int = 0
    style: str = ""
    kc_correct: bool | None = None
    phi: dict[str, int] = field(default_factory=dict)
    dips: list = field(default_factory=list, repr=False)

    @property
    def elapsed_ms(self) -> int:
        return int(round(self.elapsed * 1000))

    def csv_row(self, benchmark: str) -> dict[str, object]:
        return {"benchmark": benchmark, "style": self.style, "n": self.n_locked, "N": self.cycles,
                "dip_count": self.dip_count, "elapsed_ms": self.elapsed_ms, "verdict": self.verdict.value}


CSV_FIELDS = ("benchmark", "style", "n", "N", "dip_count", "elapsed_ms", "verdict")


class _Deadline:
    def __init__(self, seconds: float | None):
        self.end = None if seconds is None else time.monotonic() + seconds

    def left(self) -> float | None:
        if self.end is None:
            return None
        return max(self.end - time.monotonic(), 0.0)

    def expired(self) -> bool:
        return self.end is not None and time.monotonic() >= self.end


class _KeyCopies:
    """Incremental CNF of the instance over several key copies sharing X."""

    def __init__(self, inst: AttackInstance, copies: int, seed: int):
        self.inst = inst
        self.b = CnfBuilder()
        self.solver = Solver(seed=seed)
        self.data = inst.data_inputs
        self.x = {net: self.b.new_var() for net in self.data}
        self.keys = [{k: self.b.new_var() for k in inst.key_names} for _ in range(copies)]
        self.outs = []
        for kc in self.keys:
            vals = self.b.encode(inst.comb, {**self.x, **kc})
            self.outs.append([vals[o] for o in inst.comb.outputs])

    def sync(self):
        self.solver.ensure_vars(self.b.num_vars)
        self.solver.add_clauses(self.b.flush())

    def differ(self, i: int, j: int):
        return self.b.or_([self.b.xor([a, c]) for a, c in zip(self.outs[i], self.outs[j])])

    def key_differ(self, i: int, j: int):
        return self.b.or_([self.b.xor([self.keys[i][k], self.keys[j][k]]) for k in self.inst.key_names])

    def guarded(self, act: int, value) -> None:
        """Clause ``act -> value``."""
        if value is True:
            return
        if value is False:
            self.b.add(-act)
        else:
            self.b.add(-act, value)

    def add_io(self, x: Mapping[str, int], y: Mapping[str, int], copies) -> None:
        bind_x = {net: bool(x[net]) for net in self.data}
        for i in copies:
            vals = self.b.encode(self.inst.comb, {**bind_x, **self.keys[i]})
            for o in self.inst.comb.outputs:
                self.b.equal(vals[o], bool(y[o]))

    def dip(self, model) -> dict[str, int]:
        return {net: int(model.value(v)) for net, v in self.x.items()}

    def key(self, model, i: int = 0) -> dict[str, int]:
        return {k: int(model.value(v)) for k, v in self.keys[i].items()}


def _run(inst: AttackInstance, oracle: OracleConfig | None, limits: AttackLimits, double: bool):
    t0 = time.monotonic()
    deadline = _Deadline(limits.time_limit)
    copies = 4 if double else 2
    kc = _KeyCopies(inst, copies, limits.seed)
    b = kc.b
    act1 = b.new_var()
    kc.guarded(act1, kc.differ(0, 1))
    act2 = None
    if double:
        act2 = b.new_var()
        for i, j in ((0, 1), (2, 3)):
            for o1, o2 in zip(kc.outs[i], kc.outs[j]):
                kc.guarded(act2, _not(b.xor([o1, o2])))
            kc.guarded(act2, kc.key_differ(i, j))
        kc.guarded(act2, kc.differ(0, 2))
    kc.sync()

    def query(x):
        if oracle is None:
            return inst.query_oracle(x)
        return _query_config(inst, oracle, x)

    dips = []
    acts = [a for a in (act2, act1) if a is not None]
    timed_out = False
    while acts:
        if limits.max_dips is not None and len(dips) >= limits.max_dips:
            timed_out = True
            break
        out = kc.solver.solve([acts[0]], time_limit=deadline.left())
        if out.status is Status.TIMEOUT or deadline.expired():
            timed_out = True
            break
        if out.status is Status.UNSAT:
            acts.pop(0)
            continue
        x = kc.dip(out)
        y = query(x)
        dips.append((x, y))
        kc.add_io(x, y, range(copies))
        kc.sync()

    key = None
    if not timed_out:
        out = kc.solver.solve([], time_limit=deadline.left())
        if out.status is Status.SAT:
            key = kc.key(out, 0)
        elif out.status is Status.TIMEOUT:
            timed_out = True
    return key, dips, timed_out, time.monotonic() - t0


def _not(v):
    return (not v) if isinstance(v, bool) else -v


def _query_config(inst: AttackInstance, oracle: OracleConfig, x) -> dict[str, int]:
    from .scanmodel import query_state

    state = {ff: int(x[si]) for ff, (si, _) in inst.ff_map.items()}
    pis = None
    if inst.expose_pis:
        pis = [{p: int(x[f"pi_{c}_{p}"]) for p in oracle.netlist.inputs} for c in range(oracle.cycles)]
    final = query_state(oracle, state, pis)
    return {so: final[ff] for ff, (_, so) in inst.ff_map.items()}


def _style_name(d: LockedDesign) -> str:
    kinds = sorted({s.kind.value for s in d.styles.values() if s.locked})
    return "+".join(kinds) if kinds else "none"


def evaluate_key(inst: AttackInstance, bits: Mapping[str, int] | None, *, dips=(), dip_count=0,
                 elapsed=0.0, timed_out=False, attack="sat", time_limit: float | None = 60.0) -> AttackReport:
    """Check a recovered key for scan and functional correctness."""
    d = inst.design
    common = dict(attack=attack, cycles=inst.cycles, n_locked=d.n_locked, style=_style_name(d),
                  dips=list(dips))
    if timed_out:
        return AttackReport(None, dip_count, None, None, elapsed, Verdict.TIMEOUT, **common)
    if bits is None:
        return AttackReport(None, dip_count, None, None, elapsed, Verdict.NO_KEY, **common)
    key = d.correct_key.with_bits(bits)
    scan = check_equivalence(apply_key(inst, key), oracle_instance(inst).comb, time_limit=time_limit)
    locked_view = comb_view(apply_key(d, key), d.original.dffs)
    func = check_equivalence(locked_view, comb_view(d.original), time_limit=time_limit)
    kc_bits = d.correct_key.subset(Partition.KC)
    kc_ok = all(bits[k] == v for k, v in kc_bits.items())
    phi = {k: key.inversion(k) for k in key.subset(Partition.KFI)}
    common.update(kc_correct=kc_ok, phi=phi)
    if Equivalence.UNKNOWN in (scan.status, func.status):
        return AttackReport(key, dip_count, None, None, elapsed, Verdict.TIMEOUT, **common)
    if func.equivalent:
        verdict = Verdict.BROKEN
    elif scan.equivalent:
        verdict = Verdict.RESILIENT
    else:
        raise AttackAnomaly("recovered key is neither scan-correct nor functionally correct")
    return AttackReport(key, dip_count, scan.equivalent, func.equivalent, elapsed, verdict, **common)


def sat_attack(inst: AttackInstance, oracle: OracleConfig | None = None,
               limits: AttackLimits | None = None) -> AttackReport:
    """Classic DIP loop over two key copies, then key extraction."""
    limits = limits or AttackLimits()
    key, dips, timed_out, elapsed = _run(inst, oracle, limits, double=False)
    log.debug("sat attack: %d DIPs in %.3fs", len(dips), elapsed)
    return evaluate_key(inst, key, dips=dips, dip_count=len(dips), elapsed=elapsed,
                        timed_out=timed_out, attack="sat", time_limit=limits.time_limit)


def double_dip_attack(inst: AttackInstance, oracle: OracleConfig | None = None,
                      limits: AttackLimits | None = None) -> AttackReport:
    """DIPs that separate two pairs of distinct keys at once, then single DIPs."""
    limits = limits or AttackLimits()
    key, dips, timed_out, elapsed = _run(inst, oracle, limits, double=True)
    return evaluate_key(inst, key, dips=dips, dip_count=len(dips), elapsed=elapsed,
                        timed_out=timed_out, attack="ddip", time_limit=limits.time_limit)


ATTACKS = {"sat": sat_attack, "ddip": double_dip_attack}


def verify_flow(d: LockedDesign | Netlist, cycles: int = 1, attack: str = "sat",
                limits: AttackLimits | None = None, *, expose_pis: bool = False) -> AttackReport:
    """Unroll, attack, apply the recovered key and compare with the original."""
    if attack not in ATTACKS:
        raise ValueError(f"unknown attack {attack!r}; choose from {sorted(ATTACKS)}")
    d = as_design(d)
    inst = unroll(d, cycles, expose_pis=expose_pis)
    return ATTACKS[attack](inst, inst.oracle(), limits)


def replay_consistent(inst: AttackInstance, bits: Mapping[str, int], dips) -> bool:
    """Does the key reproduce every recorded oracle response?"""
    from .netcore import simulate

    for x, y in dips:
        po, _ = simulate(inst.comb, {**x, **bits}, {})
        if any(po[o] != y[o] for o in inst.comb.outputs):
            return False
    return True
