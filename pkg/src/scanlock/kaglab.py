"""Key assignment graphs, key-space census and truth tables.

Locked flip-flops are numbered from the SO end.  With net-inversion bits
``phi_i`` (FI gate) and ``sigma_i`` (SQ gate), a key is scan-correct iff
``phi_i ^ sigma_i == sigma_1 ^ ... ^ sigma_(i-1)`` for every ``i``.  The KAG
enumerates exactly those keys: the root has children ``00`` and ``11`` and
the children of a vertex labelled ``(phi, sigma)`` are the two labels whose
parity equals ``phi``.
"""
from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .exhaustive import key_match, support
from .locker import LockedDesign, Partition
from .netcore import comb_view
from .scanmodel import LockKind, Polarity

MAX_BRUTE_KEYS = 24
MAX_TABLE_KEYS = 16


class CensusError(ValueError):
    pass


@dataclass
class KagVertex:
    label: tuple[int, int] | None      # (phi, sigma); None for the root
    depth: int
    weight: int = 0                    # parity of the edge into this vertex
    children: list["KagVertex"] = field(default_factory=list)

    @property
    def parity(self) -> int:
        return 0 if self.label is None else self.label[0] ^ self.label[1]


@dataclass
class Kag:
    root: KagVertex
    n: int
    polarities: tuple[tuple[Polarity, Polarity], ...]  # (fi, sq) per level, SO end first

    def vertices(self) -> Iterator[KagVertex]:
        stack = [self.root]
        while stack:
            v = stack.pop()
            yield v
            stack.extend(reversed(v.children))

    def paths(self) -> list[tuple[tuple[int, int], ...]]:
        """Root-to-leaf label sequences, one per scan-correct assignment."""
        out = []

        def walk(v, acc):
            if not v.children:
                out.append(tuple(acc))
                return
            for c in v.children:
                walk(c, acc + [c.label])
        walk(self.root, [])
        return out

    def leaves(self) -> list[KagVertex]:
        return [v for v in self.vertices() if not v.children]

    def raw_keys(self) -> list[tuple[tuple[int, int], ...]]:
        """Leaves as raw key bits (fi, sq) per level."""
        out = []
        for path in self.paths():
            out.append(tuple((phi ^ (fp is Polarity.XNOR), sig ^ (sp is Polarity.XNOR))
                             for (phi, sig), (fp, sp) in zip(path, self.polarities)))
        return out

    def check_edge_parity(self) -> bool:
        """Both edges leaving a vertex carry the same parity."""
        return all(len({c.weight for c in v.children}) <= 1 for v in self.vertices())

    def check_full_binary(self) -> bool:
        for v in self.vertices():
            if v.depth < self.n and len(v.children) != 2:
                return False
            if v.depth == self.n and v.children:
                return False
        return len(self.leaves()) == 2 ** self.n


def build_kag(polarities: Sequence[tuple[Polarity, Polarity]]) -> Kag:
    """KAG for locked flip-flops given as (fi, sq) polarities, SO end first.

    The polarities only matter when translating labels to raw key bits.
    """
    pols = tuple((Polarity(f), Polarity(s)) for f, s in polarities)
    n = len(pols)
    root = KagVertex(None, 0)
    frontier = [root]
    for depth in range(1, n + 1):
        nxt = []
        for v in frontier:
            want = 0 if v.label is None else v.label[0]
            for label in ((0, want), (1, 1 ^ want)):
                child = KagVertex(label, depth, weight=want)
                v.children.append(child)
                nxt.append(child)
        frontier = nxt
    return Kag(root, n, pols)


def design_kag(d: LockedDesign) -> Kag:
    ffs = d.locked_ffs(LockKind.SEQL)
    return build_kag([(d.style(ff).fi_polarity, d.style(ff).scan_polarity) for ff in ffs])


# -- census ----------------------------------------------------------------------------

@dataclass(frozen=True)
class KeySpaceCensus:
    n: int
    total_keys: int
    scan_correct_count: int
    functional_correct_count: int
    intersection_count: int
    method: str = "brute_force"

    @property
    def p(self) -> float:
        if self.scan_correct_count == 0:
            return 0.0
        return 1.0 - self.intersection_count / self.scan_correct_count


def closed_form_applies(d: LockedDesign) -> list[str]:
    """Reasons the closed form may not describe ``d`` (empty if it does)."""
    reasons = []
    if d.locked_ffs(LockKind.EFF):
        reasons.append("EFF-locked flip-flops present")
    locked = set(d.locked_ffs(LockKind.SEQL))
    for chain in d.chains:
        kinds = {ff in locked for ff in chain.order}
        if True in kinds:
            tail = [ff in locked for ff in chain.order]
            first = tail.index(True)
            if not all(tail[first:]):
                reasons.append(f"chain {chain.si_port}->{chain.so_port} has unlocked flip-flops behind locked ones")
    read = d.netlist.transitive_fanin(d.netlist.dffs.values())
    hit = sorted(q for q in locked if q in read)
    if hit:
        reasons.append("locked flip-flops feed captured logic: " + ", ".join(hit))
    if d.correct_key.subset(Partition.KC):
        reasons.append("combinational key bits assumed uniquely recoverable")
    return reasons


def census(d: LockedDesign, method: str = "brute_force") -> KeySpaceCensus:
    n = len(d.locked_ffs(LockKind.SEQL))
    total = 2 ** len(d.key_names)
    if method == "closed_form":
        reasons = closed_form_applies(d)
        if reasons:
            warnings.warn("closed-form census may not hold (" + "; ".join(reasons) +
                          "); brute force is authoritative", RuntimeWarning, stacklevel=2)
        return KeySpaceCensus(n, total, 2 ** n, 2 ** n, 1, "closed_form")
    if method != "brute_force":
        raise CensusError(f"unknown census method {method!r}")
    scan, func, _ = key_flags(d, MAX_BRUTE_KEYS)
    return KeySpaceCensus(n, total, int(scan.sum()), int(func.sum()), int((scan & func).sum()))


def key_flags(d: LockedDesign, max_keys: int = MAX_BRUTE_KEYS, cycles: int = 1):
    """Scan- and functional-correctness of every key, by exhaustive comparison.

    Returns ``(scan, func, key_vars)``; the boolean arrays are indexed by key
    value with bit ``j`` standing for ``key_vars[j]``.
    """
    from .unroller import oracle_instance, unroll

    keys = list(d.key_names)
    if len(keys) > max_keys:
        raise CensusError(f"{len(keys)} key bits exceed the brute-force limit of {max_keys}")
    inst = unroll(d, cycles)
    ref = oracle_instance(inst).comb
    data = _data_vars(inst.comb, ref, keys)
    scan = key_match(inst.comb, ref, data, keys)
    locked_view = comb_view(d.netlist, d.original.dffs)
    orig_view = comb_view(d.original)
    data = _data_vars(locked_view, orig_view, keys)
    func = key_match(locked_view, orig_view, data, keys)
    return scan, func, keys


def _data_vars(test, ref, keys) -> list[str]:
    data = [i for i in support(test) if i not in keys]
    return data + [i for i in support(ref) if i not in data]


# -- truth table ---------------------------------------------------------------------

@dataclass(frozen=True)
class TruthTable:
    columns: tuple[str, ...]
    rows: tuple[tuple[tuple[int, ...], bool, bool], ...]   # (bits, scan_correct, functional_correct)

    def scan_correct(self) -> set[tuple[int, ...]]:
        return {bits for bits, s, _ in self.rows if s}

    def functional_correct(self) -> set[tuple[int, ...]]:
        return {bits for bits, _, f in self.rows if f}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([*self.columns, "scan_correct", "functional_correct"])
        for bits, s, f in self.rows:
            w.writerow([*bits, "TRUE" if s else "FALSE", "TRUE" if f else "FALSE"])
        return buf.getvalue()


def key_columns(d: LockedDesign) -> list[str]:
    """Canonical column order: K_c keys, then per locked flip-flop from the
    SO end its FI (or FO) key followed by its SQ key."""
    cols = list(d.correct_key.subset(Partition.KC))
    for ff in d.locked_ffs():
        s = d.style(ff)
        if s.kind is LockKind.SEQL:
            cols += [s.fi_key, s.scan_key]
        else:
            cols.append(s.scan_key)
    cols += [k for k in d.key_names if k not in cols]
    return cols


def truth_table(d: LockedDesign, complement_xnor: bool = False) -> TruthTable:
    """Every key with its scan and functional correctness.

    Rows enumerate the column values in binary counting order, first column
    most significant.  By default columns hold raw key bits.  With
    ``complement_xnor`` a key feeding an XNOR gate is listed by its
    complement (its net inversion) and the column name gets a prime.
    """
    if len(d.key_names) > MAX_TABLE_KEYS:
        raise CensusError(f"truth table limited to {MAX_TABLE_KEYS} key bits")
    scan, func, keys = key_flags(d, MAX_TABLE_KEYS)
    cols = key_columns(d)
    flip = {k: int(complement_xnor and d.correct_key.polarity[k] is Polarity.XNOR) for k in cols}
    pos = {k: j for j, k in enumerate(keys)}
    rows = []
    width = len(cols)
    for value in range(2 ** width):
        shown = tuple((value >> (width - 1 - i)) & 1 for i in range(width))
        index = 0
        for k, bit in zip(cols, shown):
            index |= (bit ^ flip[k]) << pos[k]
        rows.append((shown, bool(scan[index]), bool(func[index])))
    names = tuple(k + "'" if flip[k] else k for k in cols)
    return TruthTable(names, tuple(rows))


def census_csv(rows: Sequence[tuple[str, KeySpaceCensus]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["benchmark", "method", "n", "total_keys", "scan_correct", "functional_correct",
                "intersection", "p"])
    for name, c in rows:
        w.writerow([name, c.method, c.n, c.total_keys, c.scan_correct_count,
                    c.functional_correct_count, c.intersection_count, f"{c.p:.6f}"])
    return buf.getvalue()
