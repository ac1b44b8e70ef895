"""EFF and SeqL scan locking, random combinational locking, IBLA and IKPA.

Locked netlists use these gate names:

* EFF on flip-flop ``q``: ``q_fo = XOR/XNOR(q, key)``; every reader of ``q``
  (including a primary output) is moved to ``q_fo``.
* SeqL on ``q``: ``q_fi = XOR/XNOR(d, fik)`` feeds the flip-flop, and
  ``q_sq = XOR/XNOR(q, sqk)`` models the scan-only output.  Nothing in the
  logic reads ``q_sq``.
* Combinational key gate on net ``x``: ``x_kc = XOR/XNOR(x, key)``, readers
  of ``x`` moved to it.
"""
from __future__ import annotations

import enum
import logging
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .netcore import (DEFAULT_KEY_PREFIX, Gate, GateKind, Netlist, NetlistError, classify_feedback,
                      fresh_name, propagate_constants)
from .scanmodel import (UNLOCKED, FFLock, LockKind, Polarity, ScanChain, check_chains,
                        default_chains)

log = logging.getLogger(__name__)


class LockingError(ValueError):
    pass


class BudgetExhausted(LockingError):
    pass


class Partition(enum.Enum):
    KC = "Kc"
    KFI = "Kfi"
    KSQ = "Ksq"
    KFO = "Kfo"


@dataclass(frozen=True)
class KeyVector:
    """Key bits with their partition and gate polarity."""

    bits: Mapping[str, int]
    partition: Mapping[str, Partition]
    polarity: Mapping[str, Polarity]

    def __post_init__(self):
        object.__setattr__(self, "bits", {k: int(v) & 1 for k, v in self.bits.items()})
        object.__setattr__(self, "partition", dict(self.partition))
        object.__setattr__(self, "polarity", dict(self.polarity))
        names = set(self.bits)
        if names != set(self.partition) or names != set(self.polarity):
            raise LockingError("key bits, partition and polarity must cover the same names")

    @classmethod
    def empty(cls) -> "KeyVector":
        return cls({}, {}, {})

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.bits)

    def __len__(self):
        return len(self.bits)

    def __getitem__(self, name: str) -> int:
        return self.bits[name]

    def subset(self, *parts: Partition) -> dict[str, int]:
        return {k: v for k, v in self.bits.items() if self.partition[k] in parts}

    def inversion(self, name: str) -> int:
        return self.polarity[name].inversion(self.bits[name])

    def with_bits(self, bits: Mapping[str, int]) -> "KeyVector":
        missing = [k for k in self.bits if k not in bits]
        if missing:
            raise LockingError("missing key bits: " + ", ".join(missing))
        return KeyVector({k: bits[k] for k in self.bits}, self.partition, self.polarity)

    def merged(self, other: "KeyVector") -> "KeyVector":
        return KeyVector({**self.bits, **other.bits}, {**self.partition, **other.partition},
                         {**self.polarity, **other.polarity})

    def without(self, names: Iterable[str]) -> "KeyVector":
        drop = set(names)
        keep = [k for k in self.bits if k not in drop]
        return KeyVector({k: self.bits[k] for k in keep}, {k: self.partition[k] for k in keep},
                         {k: self.polarity[k] for k in keep})


def serialize_key(key: KeyVector) -> str:
    return "".join(f"{k} {key.bits[k]} {key.partition[k].value} {key.polarity[k].value}\n" for k in key.bits)


def parse_key(text: str) -> KeyVector:
    bits, part, pol = {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 4 or fields[1] not in ("0", "1"):
            raise LockingError(f"key file line {lineno}: expected '<name> <bit> <partition> <polarity>'")
        name = fields[0]
        if name in bits:
            raise LockingError(f"key file line {lineno}: duplicate key {name!r}")
        try:
            part[name] = Partition(fields[2])
            pol[name] = Polarity(fields[3].upper())
        except ValueError:
            raise LockingError(f"key file line {lineno}: bad partition or polarity") from None
        bits[name] = int(fields[1])
    return KeyVector(bits, part, pol)


@dataclass(frozen=True)
class LockedDesign:
    netlist: Netlist
    chains: tuple[ScanChain, ...]
    styles: Mapping[str, FFLock]
    correct_key: KeyVector
    original: Netlist
    seed: int | None = None
    corrupted: bool | None = None  # set by ibla/ikpa: did the last attack fail?
    history: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "chains", tuple(self.chains))
        object.__setattr__(self, "styles", dict(self.styles))
        for k in self.correct_key.names:
            if k not in self.netlist.inputs:
                raise LockingError(f"key {k!r} is not an input of the locked netlist")
        check_chains(self.chains, self.netlist)

    @property
    def key_names(self) -> tuple[str, ...]:
        return self.correct_key.names

    def style(self, ff: str) -> FFLock:
        return self.styles.get(ff, UNLOCKED)

    def locked_ffs(self, kind: LockKind | None = None) -> list[str]:
        """Locked flip-flops, nearest SO first (chains in reverse order)."""
        out = []
        for chain in reversed(self.chains):
            for ff in reversed(chain.order):
                s = self.style(ff)
                if s.locked and (kind is None or s.kind is kind):
                    out.append(ff)
        return out

    @property
    def n_locked(self) -> int:
        return len(self.locked_ffs())


def as_design(n: Netlist | LockedDesign, chains: Sequence[ScanChain] | None = None) -> LockedDesign:
    if isinstance(n, LockedDesign):
        return n
    return LockedDesign(n, tuple(chains) if chains else default_chains(n), {}, KeyVector.empty(), n)


def _key_namer(netlist: Netlist, extra=(), prefix: str = DEFAULT_KEY_PREFIX):
    taken = set(netlist.inputs) | set(netlist.gates) | set(extra)
    i = 0

    def nxt():
        nonlocal i
        while f"{prefix}{i}" in taken:
            i += 1
        name = f"{prefix}{i}"
        taken.add(name)
        return name
    return nxt


def _pick(rng: random.Random) -> Polarity:
    return rng.choice((Polarity.XOR, Polarity.XNOR))


def _rewire(gates: dict[str, Gate], outputs: list[str], old: str, new: str, skip: set[str]) -> None:
    for net, g in list(gates.items()):
        if net in skip or old not in g.fanins:
            continue
        gates[net] = Gate(g.kind, tuple(new if f == old else f for f in g.fanins))
    for i, o in enumerate(outputs):
        if o == old:
            outputs[i] = new


def _gate_kind(p: Polarity) -> GateKind:
    return GateKind.XOR if p is Polarity.XOR else GateKind.XNOR


# -- EFF ------------------------------------------------------------------------------------

def lock_eff(n: Netlist | LockedDesign, chains: Sequence[ScanChain] | None, ffs: Sequence[str],
             seed: int = 0, *, polarities: Sequence[Polarity] | None = None,
             key_names: Sequence[str] | None = None) -> LockedDesign:
    """Insert one key gate on Q of each flip-flop in ``ffs`` (EFF style)."""
    base = as_design(n, chains)
    if not ffs:
        raise LockingError("no flip-flops to lock")
    rng = random.Random(seed)
    nl = base.netlist
    gates = dict(nl.gates)
    outputs = list(nl.outputs)
    inputs = list(nl.inputs)
    styles = dict(base.styles)
    namer = _key_namer(nl, key_names or ())
    bits, part, pol = {}, {}, {}
    for i, q in enumerate(ffs):
        if q not in nl.dffs:
            raise LockingError(f"{q!r} is not a flip-flop")
        if styles.get(q, UNLOCKED).locked:
            raise LockingError(f"{q!r} is already locked")
        p = polarities[i] if polarities else _pick(rng)
        k = key_names[i] if key_names else namer()
        fo = fresh_name(f"{q}_fo", gates.keys() | set(inputs))
        _rewire(gates, outputs, q, fo, skip=set())
        gates[fo] = Gate(_gate_kind(p), (q, k))
        inputs.append(k)
        bits[k], part[k], pol[k] = p.identity_bit, Partition.KFO, p
        styles[q] = FFLock.eff(k, p)
    netlist = Netlist(inputs, outputs, gates, nl.name)
    key = base.correct_key.merged(KeyVector(bits, part, pol))
    return replace(base, netlist=netlist, styles=styles, correct_key=key, seed=seed, corrupted=None)


# -- SeqL -----------------------------------------------------------------------------------

WOF_SI, WOF_SO = "SI_WOF", "SO_WOF"


def restitch(chains: Sequence[ScanChain], ff: str) -> tuple[ScanChain, ...]:
    """Move ``ff`` to the SI end of the dedicated locked chain.

    The first flip-flop locked ends up next to SO of that chain; each later
    one is prepended, so locked flip-flops never sit behind unlocked ones.
    """
    out = []
    wof = None
    for c in chains:
        if c.si_port == WOF_SI and c.so_port == WOF_SO:
            wof = c
            continue
        order = tuple(x for x in c.order if x != ff)
        if order:
            out.append(ScanChain(order, c.si_port, c.so_port))
    if wof is None:
        wof = ScanChain((ff,), WOF_SI, WOF_SO)
    elif ff not in wof.order:
        wof = ScanChain((ff, *wof.order), WOF_SI, WOF_SO)
    out.append(wof)
    return tuple(out)


def lock_seql_ff(d: Netlist | LockedDesign, ff: str, fi_polarity: Polarity, sq_polarity: Polarity,
                 *, fi_key: str | None = None, sq_key: str | None = None,
                 chains: Sequence[ScanChain] | None = None, restitch_chain: bool = True,
                 check_feedback: bool = True) -> LockedDesign:
    """Lock one feedback-free flip-flop with an FI gate and an SQ gate."""
    base = as_design(d, chains)
    nl = base.netlist
    if ff not in nl.dffs:
        raise LockingError(f"{ff!r} is not a flip-flop")
    if base.style(ff).locked:
        raise LockingError(f"{ff!r} is already locked")
    if check_feedback:
        info = {f.ff_net: f for f in classify_feedback(nl)}
        if info[ff].has_feedback:
            raise LockingError(f"{ff!r} lies on a feedback loop and cannot be SeqL-locked")
    namer = _key_namer(nl, [k for k in (fi_key, sq_key) if k])
    fi_key = fi_key or namer()
    sq_key = sq_key or namer()
    for k in (fi_key, sq_key):
        if k in nl.gates or k in nl.inputs:
            raise LockingError(f"key name {k!r} already in use")
    gates = dict(nl.gates)
    taken = gates.keys() | set(nl.inputs)
    fi = fresh_name(f"{ff}_fi", taken)
    sq = fresh_name(f"{ff}_sq", taken | {fi})
    gates[fi] = Gate(_gate_kind(fi_polarity), (nl.dffs[ff], fi_key))
    gates[ff] = Gate(GateKind.DFF, (fi,))
    gates[sq] = Gate(_gate_kind(sq_polarity), (ff, sq_key))
    netlist = Netlist((*nl.inputs, fi_key, sq_key), nl.outputs, gates, nl.name)
    styles = {**base.styles, ff: FFLock.seql(fi_key, fi_polarity, sq_key, sq_polarity)}
    key = base.correct_key.merged(KeyVector(
        {fi_key: fi_polarity.identity_bit, sq_key: sq_polarity.identity_bit},
        {fi_key: Partition.KFI, sq_key: Partition.KSQ},
        {fi_key: fi_polarity, sq_key: sq_polarity}))
    new_chains = restitch(base.chains, ff) if restitch_chain else base.chains
    return replace(base, netlist=netlist, chains=new_chains, styles=styles, correct_key=key, corrupted=None)


def lock_seql(d: Netlist | LockedDesign, chains: Sequence[ScanChain] | None, ffs: Sequence[str],
              seed: int = 0, *, polarities: Sequence[tuple[Polarity, Polarity]] | None = None,
              key_names: Sequence[tuple[str, str]] | None = None) -> LockedDesign:
    """SeqL-lock ``ffs`` in order (first = nearest SO of the locked chain)."""
    design = as_design(d, chains)
    rng = random.Random(seed)
    for i, ff in enumerate(ffs):
        fp, sp = polarities[i] if polarities else (_pick(rng), _pick(rng))
        fk, sk = key_names[i] if key_names else (None, None)
        design = lock_seql_ff(design, ff, fp, sp, fi_key=fk, sq_key=sk)
    return replace(design, seed=seed)


# -- random combinational locking ---------------------------------------------------------

def lock_random(n: Netlist | LockedDesign, count: int, seed: int = 0,
                chains: Sequence[ScanChain] | None = None,
                candidates: Sequence[str] | None = None) -> LockedDesign:
    """Insert ``count`` XOR/XNOR key gates on random internal nets (K_c)."""
    base = as_design(n, chains)
    nl = base.netlist
    rng = random.Random(seed)
    if candidates is None:
        candidates = [net for net, g in nl.gates.items()
                      if g.kind is not GateKind.DFF and net not in nl.outputs
                      and not net.endswith(("_fi", "_sq", "_fo", "_kc"))]
    candidates = list(candidates)
    if count > len(candidates):
        raise LockingError(f"only {len(candidates)} nets available for {count} key gates")
    targets = rng.sample(candidates, count)
    gates = dict(nl.gates)
    outputs = list(nl.outputs)
    inputs = list(nl.inputs)
    namer = _key_namer(nl)
    bits, part, pol = {}, {}, {}
    for x in targets:
        p = _pick(rng)
        k = namer()
        kc = fresh_name(f"{x}_kc", gates.keys() | set(inputs))
        _rewire(gates, outputs, x, kc, skip=set())
        gates[kc] = Gate(_gate_kind(p), (x, k))
        inputs.append(k)
        bits[k], part[k], pol[k] = p.identity_bit, Partition.KC, p
    netlist = Netlist(inputs, outputs, gates, nl.name)
    key = base.correct_key.merged(KeyVector(bits, part, pol))
    return replace(base, netlist=netlist, correct_key=key, seed=seed)


# -- IBLA / IKPA ----------------------------------------------------------------------------

def lock_candidates(d: LockedDesign) -> list[str]:
    """Feedback-free, unlocked flip-flops, nearest SO first; ties by chain index."""
    free = {f.ff_net for f in classify_feedback(d.netlist) if not f.has_feedback}
    ranked = []
    for ci, chain in enumerate(d.chains):
        for ff in chain.order:
            if ff in free and not d.style(ff).locked:
                ranked.append((chain.distance_to_so(ff), ci, ff))
    ranked.sort()
    return [ff for _, _, ff in ranked]


def _attack_corrupts(design: LockedDesign, cycles: int, attacks, limits) -> tuple[bool, list]:
    from .attacker import Verdict, verify_flow

    reports = [verify_flow(design, cycles, attack=a, limits=limits) for a in attacks]
    corrupted = all(r.verdict is Verdict.RESILIENT for r in reports)
    return corrupted, reports


def ibla(s: Netlist | LockedDesign, chains: Sequence[ScanChain] | None = None, gamma: float = 0.05,
         *, cycles: int = 1, seed: int = 0, attacks: Sequence[str] = ("sat",), limits=None,
         max_locks: int | None = None) -> LockedDesign:
    """Lock FI-SQ pairs from the SO end until the attack's key corrupts the function.

    Stops when every attack in ``attacks`` recovers a functionally wrong key,
    or when the next pair would exceed ``gamma`` times the gate count.
    """
    design = as_design(s, chains)
    if gamma <= 0:
        raise LockingError("gamma must be positive")
    rng = random.Random(seed)
    order = lock_candidates(design)
    if not order:
        raise LockingError("no feedback-free flip-flops to lock")
    budget = gamma * design.original.comb_gate_count()
    history = []
    used = 0
    for ff in order:
        if max_locks is not None and used >= max_locks:
            break
        if 2 * (used + 1) > budget:
            break
        design = lock_seql_ff(design, ff, _pick(rng), _pick(rng))
        used += 1
        corrupted, reports = _attack_corrupts(design, cycles, attacks, limits)
        history.append((ff, tuple(r.verdict.value for r in reports)))
        log.info("ibla: locked %s (n=%d) -> %s", ff, used, history[-1][1])
        if corrupted:
            return replace(design, seed=seed, corrupted=True, history=tuple(history))
    if used == 0:
        raise BudgetExhausted(f"budget exhausted: gamma={gamma} admits no FI-SQ pair "
                              f"({budget:.2f} key gates available, 2 needed)")
    return replace(design, seed=seed, corrupted=False, history=tuple(history))


def ikpa(c: LockedDesign, chains: Sequence[ScanChain] | None = None, *, cycles: int = 1,
         seed: int = 0, attacks: Sequence[str] = ("sat",), limits=None) -> LockedDesign:
    """Trade pairs of combinational key gates for FI-SQ pairs at the boundary.

    Each step removes two K_c gates (tied to their correct values) and reuses
    their key names for a new FI-SQ pair, so the key size never grows.
    """
    design = as_design(c, chains)
    rng = random.Random(seed)
    kc = list(design.correct_key.subset(Partition.KC))
    if not kc:
        raise LockingError("ikpa needs a logic-locked input (no combinational key gates)")
    order = lock_candidates(design)
    if not order:
        raise LockingError("no feedback-free flip-flops to lock")
    history = []
    for ff in order:
        if len(kc) < 2:
            break
        pair = [kc.pop(rng.randrange(len(kc))) for _ in range(2)]
        consts = {k: design.correct_key[k] for k in pair}
        netlist = propagate_constants(design.netlist, consts)
        design = replace(design, netlist=netlist, correct_key=design.correct_key.without(pair))
        design = lock_seql_ff(design, ff, _pick(rng), _pick(rng), fi_key=pair[0], sq_key=pair[1])
        corrupted, reports = _attack_corrupts(design, cycles, attacks, limits)
        history.append((ff, tuple(r.verdict.value for r in reports)))
        if corrupted:
            return replace(design, seed=seed, corrupted=True, history=tuple(history))
    if not history:
        raise LockingError("not enough combinational key gates for one FI-SQ pair")
    return replace(design, seed=seed, corrupted=False, history=tuple(history))


@dataclass(frozen=True)
class Overhead:
    key_gate_count: int
    gate_count: int
    percent: float


def key_gates(netlist: Netlist, key_names: Iterable[str]) -> list[str]:
    keys = set(key_names)
    return [net for net, g in netlist.gates.items() if keys.intersection(g.fanins)]


def overhead_report(d: LockedDesign) -> Overhead:
    """Key gates added, relative to the original combinational gate count."""
    count = len(key_gates(d.netlist, d.key_names))
    total = d.original.comb_gate_count()
    if total == 0:
        raise LockingError("original design has no combinational gates")
    return Overhead(count, total, 100.0 * count / total)


# -- reading locked designs back ------------------------------------------------------------

def infer_styles(netlist: Netlist, key: KeyVector) -> dict[str, FFLock]:
    """Recover per flip-flop lock styles from key gate placement."""
    dffs = netlist.dffs
    fi_of: dict[str, tuple[str, Polarity]] = {}
    sq_of: dict[str, tuple[str, Polarity]] = {}
    fo_of: dict[str, tuple[str, Polarity]] = {}
    driver_of_d = {d: q for q, d in dffs.items()}
    for net, g in netlist.gates.items():
        ks = [f for f in g.fanins if f in key.bits]
        if len(ks) != 1 or g.kind not in (GateKind.XOR, GateKind.XNOR) or len(g.fanins) != 2:
            continue
        k = ks[0]
        other = g.fanins[0] if g.fanins[1] == k else g.fanins[1]
        p = Polarity.XOR if g.kind is GateKind.XOR else Polarity.XNOR
        part = key.partition[k]
        if part is Partition.KFI and net in driver_of_d:
            fi_of[driver_of_d[net]] = (k, p)
        elif part is Partition.KSQ and other in dffs:
            sq_of[other] = (k, p)
        elif part is Partition.KFO and other in dffs:
            fo_of[other] = (k, p)
    styles = {}
    for q in dffs:
        if q in fo_of:
            styles[q] = FFLock.eff(*fo_of[q])
        elif q in fi_of or q in sq_of:
            if q not in fi_of or q not in sq_of:
                raise LockingError(f"flip-flop {q!r} has only half of an FI-SQ pair")
            styles[q] = FFLock.seql(*fi_of[q], *sq_of[q])
    return styles


def strip_keys(netlist: Netlist, key: KeyVector) -> Netlist:
    """The design behind a locked netlist: the correct key applied."""
    return propagate_constants(netlist, key.bits)


def load_design(netlist: Netlist, key: KeyVector, chains: Sequence[ScanChain] | None = None,
                original: Netlist | None = None) -> LockedDesign:
    for k in key.names:
        if k not in netlist.inputs:
            raise NetlistError(f"key {k!r} from the key file is not an input")
    styles = infer_styles(netlist, key)
    if original is None:
        original = strip_keys(netlist, key)
    return LockedDesign(netlist, tuple(chains) if chains else default_chains(netlist), styles, key, original)
