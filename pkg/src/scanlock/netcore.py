"""Gate-level netlists in the ``.bench`` dialect.

A :class:`Netlist` is a directed gate graph: primary inputs, primary outputs
and a map from net name to the gate that drives it.  D flip-flops are written
``q = DFF(d)``; in the combinational view their outputs are pseudo-inputs and
their data nets pseudo-outputs.

MUX convention: ``y = MUX(s, a, b)`` selects ``a`` when ``s == 0`` and ``b``
when ``s == 1``.
"""
from __future__ import annotations

import enum
import functools
import graphlib
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import networkx as nx
import numpy as np

DEFAULT_KEY_PREFIX = "keyinput"

NET_RE = r"[A-Za-z0-9_.\[\]]+"
_IO_RE = re.compile(rf"^(INPUT|OUTPUT)\s*\(\s*({NET_RE})\s*\)$", re.IGNORECASE)
_GATE_RE = re.compile(rf"^({NET_RE})\s*=\s*([A-Za-z0-9_]+)\s*\((.*)\)$")
_NET_FULL = re.compile(rf"^{NET_RE}$")


class GateKind(enum.Enum):
    AND = "AND"
    OR = "OR"
    NAND = "NAND"
    NOR = "NOR"
    XOR = "XOR"
    XNOR = "XNOR"
    NOT = "NOT"
    BUF = "BUF"
    MUX = "MUX"
    DFF = "DFF"
    CONST0 = "CONST0"
    CONST1 = "CONST1"

    @classmethod
    def parse(cls, word: str) -> "GateKind":
        word = word.upper()
        if word == "BUFF":
            word = "BUF"
        return cls(word)


_UNARY = {GateKind.NOT, GateKind.BUF, GateKind.DFF}
_NULLARY = {GateKind.CONST0, GateKind.CONST1}


def check_arity(kind: GateKind, n: int) -> None:
    if kind in _UNARY:
        ok = n == 1
    elif kind is GateKind.MUX:
        ok = n == 3
    elif kind in _NULLARY:
        ok = n == 0
    else:
        ok = n >= 2
    if not ok:
        raise NetlistError(f"{kind.value} gate cannot take {n} input(s)")


class NetlistError(ValueError):
    """Structural problem in a netlist."""


class BenchSyntaxError(NetlistError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    fanins: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "fanins", tuple(self.fanins))


@dataclass(frozen=True)
class FlipFlopInfo:
    ff_net: str
    d_net: str
    has_feedback: bool


@dataclass(frozen=True)
class Netlist:
    """Immutable gate-level netlist.

    ``gates`` maps every driven net to its :class:`Gate`.  Insertion order of
    ``gates`` is the serialization order.  Construction validates arity,
    dangling references, duplicate drivers and combinational cycles.
    """

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    gates: Mapping[str, Gate]
    name: str = "top"
    _validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "gates", dict(self.gates))
        if self._validate:
            self.validate()

    # -- structure -------------------------------------------------------
    def validate(self) -> None:
        seen = set()
        for net in self.inputs:
            if net in seen:
                raise NetlistError(f"duplicate input {net!r}")
            seen.add(net)
        for net, gate in self.gates.items():
            if net in seen:
                raise NetlistError(f"net {net!r} is driven more than once")
            seen.add(net)
            check_arity(gate.kind, len(gate.fanins))
        for net, gate in self.gates.items():
            for src in gate.fanins:
                if src not in seen:
                    raise NetlistError(f"gate {net!r} reads undefined net {src!r}")
        for net in self.outputs:
            if net not in seen:
                raise NetlistError(f"output {net!r} is not driven")
        self.comb_order  # raises on combinational cycles

    @functools.cached_property
    def dffs(self) -> dict[str, str]:
        """Flip-flop output net -> data net, in declaration order."""
        return {q: g.fanins[0] for q, g in self.gates.items() if g.kind is GateKind.DFF}

    @functools.cached_property
    def comb_order(self) -> tuple[str, ...]:
        """Non-DFF gate nets in topological order (DFF outputs act as sources)."""
        ts = graphlib.TopologicalSorter()
        for net, gate in self.gates.items():
            if gate.kind is GateKind.DFF:
                continue
            ts.add(net, *(f for f in gate.fanins if f in self.gates
                          and self.gates[f].kind is not GateKind.DFF))
        try:
            return tuple(ts.static_order())
        except graphlib.CycleError as exc:
            raise NetlistError(f"combinational cycle through {exc.args[1]}") from None

    @functools.cached_property
    def fanouts(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {net: [] for net in (*self.inputs, *self.gates)}
        for net, gate in self.gates.items():
            for src in gate.fanins:
                out[src].append(net)
        return out

    def comb_gate_count(self) -> int:
        return sum(1 for g in self.gates.values() if g.kind is not GateKind.DFF)

    def key_inputs(self, prefix: str = DEFAULT_KEY_PREFIX) -> tuple[str, ...]:
        return tuple(i for i in self.inputs if i.startswith(prefix))

    def is_combinational(self) -> bool:
        return not self.dffs

    def transitive_fanin(self, roots: Iterable[str], *, through_dffs: bool = False) -> set[str]:
        seen: set[str] = set()
        stack = list(roots)
        while stack:
            net = stack.pop()
            if net in seen:
                continue
            seen.add(net)
            gate = self.gates.get(net)
            if gate is None:
                continue
            if gate.kind is GateKind.DFF and not through_dffs:
                continue
            stack.extend(gate.fanins)
        return seen

    def replace(self, **changes) -> "Netlist":
        fields = dict(inputs=self.inputs, outputs=self.outputs, gates=self.gates, name=self.name)
        fields.update(changes)
        return Netlist(**fields)

    def __str__(self) -> str:
        return serialize_bench(self)


# -- parsing & serialization -----------------------------------------------

def _split_args(text: str, lineno: int) -> list[str]:
    text = text.strip()
    if not text:
        return []
    args = [a.strip() for a in text.split(",")]
    for a in args:
        if not _NET_FULL.match(a):
            raise BenchSyntaxError(f"bad net name {a!r}", lineno)
    return args


def parse_bench(text: str, name: str = "top") -> Netlist:
    """Parse ``.bench`` text into a :class:`Netlist`.

    Keywords are case-insensitive and ``#`` starts a comment.  Structural
    errors raise :class:`NetlistError` (with a line number where one applies).
    """
    inputs: list[str] = []
    outputs: list[str] = []
    gates: dict[str, Gate] = {}
    where: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _IO_RE.match(line)
        if m:
            word, net = m.group(1).upper(), m.group(2)
            if word == "INPUT":
                if net in where:
                    raise BenchSyntaxError(f"duplicate definition of {net!r}", lineno)
                where[net] = lineno
                inputs.append(net)
            else:
                outputs.append(net)
            continue
        m = _GATE_RE.match(line)
        if not m:
            raise BenchSyntaxError(f"cannot parse {line!r}", lineno)
        out, word, args = m.group(1), m.group(2), m.group(3)
        try:
            kind = GateKind.parse(word)
        except ValueError:
            raise BenchSyntaxError(f"unknown gate kind {word!r}", lineno) from None
        fanins = _split_args(args, lineno)
        try:
            check_arity(kind, len(fanins))
        except NetlistError as exc:
            raise BenchSyntaxError(str(exc), lineno) from None
        if out in where:
            raise BenchSyntaxError(f"duplicate definition of {out!r}", lineno)
        where[out] = lineno
        gates[out] = Gate(kind, tuple(fanins))
    for out, gate in gates.items():
        for src in gate.fanins:
            if src not in where:
                raise BenchSyntaxError(f"reference to undefined net {src!r}", where[out])
    for net in outputs:
        if net not in where:
            raise BenchSyntaxError(f"output {net!r} is never driven")
    return Netlist(inputs, outputs, gates, name)


def read_bench(path) -> Netlist:
    from pathlib import Path

    path = Path(path)
    return parse_bench(path.read_text(), name=path.name.split(".")[0])


def serialize_bench(n: Netlist) -> str:
    lines = [f"# {n.name}"]
    lines += [f"INPUT({net})" for net in n.inputs]
    lines.append("")
    lines += [f"OUTPUT({net})" for net in n.outputs]
    lines.append("")
    for net, gate in n.gates.items():
        lines.append(f"{net} = {gate.kind.value}({', '.join(gate.fanins)})")
    return "\n".join(lines) + "\n"


# -- evaluation -------------------------------------------------------------

def eval_gate(kind: GateKind, vals) -> int:
    if kind is GateKind.AND:
        return int(all(vals))
    if kind is GateKind.OR:
        return int(any(vals))
    if kind is GateKind.NAND:
        return int(not all(vals))
    if kind is GateKind.NOR:
        return int(not any(vals))
    if kind is GateKind.XOR:
        return sum(vals) & 1
    if kind is GateKind.XNOR:
        return (sum(vals) & 1) ^ 1
    if kind is GateKind.NOT:
        return vals[0] ^ 1
    if kind in (GateKind.BUF, GateKind.DFF):
        return vals[0]
    if kind is GateKind.MUX:
        return vals[2] if vals[0] else vals[1]
    if kind is GateKind.CONST0:
        return 0
    if kind is GateKind.CONST1:
        return 1
    raise ValueError(kind)


def simulate(n: Netlist, pi: Mapping[str, int], state: Mapping[str, int] | None = None):
    """One clock evaluation.

    Returns ``(po, next_state)``: ``po`` maps every output net to its value and
    ``next_state`` maps every flip-flop (by output net) to the value at its
    data net.
    """
    state = state or {}
    values: dict[str, int] = {}
    for net in n.inputs:
        if net not in pi:
            raise SimulationError(f"no value for input {net!r}")
        values[net] = int(pi[net]) & 1
    for q in n.dffs:
        if q not in state:
            raise SimulationError(f"no state for flip-flop {q!r}")
        values[q] = int(state[q]) & 1
    gates = n.gates
    for net in n.comb_order:
        g = gates[net]
        values[net] = eval_gate(g.kind, [values[f] for f in g.fanins])
    po = {net: values[net] for net in n.outputs}
    nxt = {q: values[d] for q, d in n.dffs.items()}
    return po, nxt


_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


def simulate_packed(n: Netlist, assignment: Mapping[str, np.ndarray], nwords: int) -> dict[str, np.ndarray]:
    """Bit-parallel evaluation of the combinational part.

    ``assignment`` maps every input (and flip-flop output) to a ``uint64``
    array of ``nwords`` words; bit ``i`` of the concatenation is pattern ``i``.
    Returns the values of all nets.
    """
    values: dict[str, np.ndarray] = {}
    for net in (*n.inputs, *n.dffs):
        if net not in assignment:
            raise SimulationError(f"no value for {net!r}")
        values[net] = assignment[net]
    zeros = np.zeros(nwords, dtype=np.uint64)
    for net in n.comb_order:
        g = n.gates[net]
        ins = [values[f] for f in g.fanins]
        k = g.kind
        if k is GateKind.AND or k is GateKind.NAND:
            v = functools.reduce(np.bitwise_and, ins)
        elif k is GateKind.OR or k is GateKind.NOR:
            v = functools.reduce(np.bitwise_or, ins)
        elif k is GateKind.XOR or k is GateKind.XNOR:
            v = functools.reduce(np.bitwise_xor, ins)
        elif k is GateKind.NOT:
            v = ~ins[0]
        elif k is GateKind.BUF:
            v = ins[0]
        elif k is GateKind.MUX:
            s, a, b = ins
            v = (a & ~s) | (b & s)
        elif k is GateKind.CONST0:
            v = zeros
        elif k is GateKind.CONST1:
            v = ~zeros
        else:
            raise SimulationError(f"unexpected {k.value} in combinational evaluation")
        if k in (GateKind.NAND, GateKind.NOR, GateKind.XNOR):
            v = ~v
        values[net] = v
    return values


# -- views & analysis --------------------------------------------------------

def comb_view(n: Netlist, ff_order: Iterable[str] | None = None) -> Netlist:
    """Combinational view: flip-flop outputs become inputs, data nets outputs.

    Outputs are the primary outputs followed by one next-state net per
    flip-flop in ``ff_order`` (default: declaration order), so two views built
    with the same order line up position by position.
    """
    ffs = list(n.dffs if ff_order is None else ff_order)
    gates = {net: g for net, g in n.gates.items() if g.kind is not GateKind.DFF}
    outputs = list(n.outputs) + [n.dffs[q] for q in ffs]
    return Netlist((*n.inputs, *n.dffs), outputs, gates, n.name + "_comb")


def ff_dependency_graph(n: Netlist) -> nx.DiGraph:
    """Edge ``j -> i`` iff a purely combinational path runs from Q_j to D_i."""
    g = nx.DiGraph()
    g.add_nodes_from(n.dffs)
    for q, d in n.dffs.items():
        for src in n.transitive_fanin([d]):
            if src in n.dffs:
                g.add_edge(src, q)
    return g


def classify_feedback(n: Netlist) -> list[FlipFlopInfo]:
    g = ff_dependency_graph(n)
    looped = set()
    for scc in nx.strongly_connected_components(g):
        if len(scc) > 1:
            looped |= scc
    looped |= {q for q in g if g.has_edge(q, q)}
    return [FlipFlopInfo(q, d, q in looped) for q, d in n.dffs.items()]


def fresh_name(base: str, taken) -> str:
    if base not in taken:
        return base
    i = 1
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


# -- constant propagation ----------------------------------------------------

_CONTROLLING = {
    GateKind.AND: (0, 0), GateKind.NAND: (0, 1),
    GateKind.OR: (1, 1), GateKind.NOR: (1, 0),
}


def propagate_constants(n: Netlist, consts: Mapping[str, int], *, name: str | None = None) -> Netlist:
    """Tie inputs in ``consts`` to constants and simplify.

    Gates that collapse to a wire are removed and their readers rewired (a
    wire driving a primary output is kept as a ``BUF`` so output names do not
    change).  Affected gates left without readers are dropped.
    """
    for net in consts:
        if net not in n.inputs:
            raise NetlistError(f"{net!r} is not an input")
    # value of each net: 0/1 constant, or (source net name)
    val: dict[str, object] = {}
    for net in n.inputs:
        val[net] = int(consts[net]) & 1 if net in consts else net
    for q in n.dffs:
        val[q] = q
    touched: set[str] = set()
    new_gates: dict[str, Gate] = {}
    outputs = set(n.outputs)

    def resolve(f):
        return val[f]

    for net in n.comb_order:
        g = n.gates[net]
        ins = [resolve(f) for f in g.fanins]
        changed = any(isinstance(v, int) or v != f for v, f in zip(ins, g.fanins))
        if not changed:
            new_gates[net] = g
            val[net] = net
            continue
        touched.add(net)
        res = _simplify(g.kind, ins)
        if isinstance(res, int):
            val[net] = res
        elif res[0] is GateKind.BUF:
            val[net] = res[1][0]
        else:
            new_gates[net] = Gate(res[0], tuple(res[1]))
            val[net] = net

    const_nets: dict[int, str] = {}

    def materialize(v):
        if not isinstance(v, int):
            return v
        if v not in const_nets:
            cname = fresh_name(f"_const{v}", n.gates.keys() | set(n.inputs))
            new_gates[cname] = Gate(GateKind.CONST1 if v else GateKind.CONST0, ())
            touched.add(cname)
            const_nets[v] = cname
        return const_nets[v]

    # constant data pins of a surviving MUX need a driver
    for net, g in list(new_gates.items()):
        if any(isinstance(f, int) for f in g.fanins):
            new_gates[net] = Gate(g.kind, tuple(materialize(f) for f in g.fanins))

    for q, d in n.dffs.items():
        src = val[d]
        if isinstance(src, int) or src != d:
            touched.add(q)
        new_gates[q] = Gate(GateKind.DFF, (materialize(src),))

    for net in outputs:
        v = val[net]
        if net in n.inputs and net not in consts:
            continue
        if isinstance(v, int):
            new_gates[net] = Gate(GateKind.CONST1 if v else GateKind.CONST0, ())
        elif v != net:
            new_gates[net] = Gate(GateKind.BUF, (v,))

    # keep original declaration order where possible
    order = [net for net in n.gates if net in new_gates]
    order += [net for net in new_gates if net not in n.gates]
    gates = {net: new_gates[net] for net in order}

    # sweep affected gates nobody reads
    while True:
        readers: dict[str, int] = {}
        for g in gates.values():
            for f in g.fanins:
                readers[f] = readers.get(f, 0) + 1
        dead = [net for net in gates if net in touched and net not in outputs
                and readers.get(net, 0) == 0 and gates[net].kind is not GateKind.DFF]
        if not dead:
            break
        for net in dead:
            del gates[net]

    inputs = [i for i in n.inputs if i not in consts]
    return Netlist(inputs, n.outputs, gates, name or n.name)


def _simplify(kind: GateKind, ins: list):
    """Simplify one gate whose inputs may be constants.

    Returns an int constant or ``(kind, fanins)``; ``(BUF, [x])`` means wire.
    """
    consts = [v for v in ins if isinstance(v, int)]
    nets = [v for v in ins if not isinstance(v, int)]
    if kind in _CONTROLLING:
        ctrl, out = _CONTROLLING[kind]
        if ctrl in consts:
            return out
        invert = kind in (GateKind.NAND, GateKind.NOR)
        if not nets:
            return (1 - ctrl) ^ invert
        if len(nets) == 1:
            return (GateKind.NOT if invert else GateKind.BUF, nets)
        return (kind, nets)
    if kind in (GateKind.XOR, GateKind.XNOR):
        parity = (sum(consts) & 1) ^ (kind is GateKind.XNOR)
        if not nets:
            return parity
        if len(nets) == 1:
            return (GateKind.NOT if parity else GateKind.BUF, nets)
        return (GateKind.XNOR if parity else GateKind.XOR, nets)
    if kind is GateKind.NOT:
        v = ins[0]
        return v ^ 1 if isinstance(v, int) else (GateKind.NOT, [v])
    if kind is GateKind.BUF:
        v = ins[0]
        return v if isinstance(v, int) else (GateKind.BUF, [v])
    if kind is GateKind.MUX:
        s, a, b = ins
        if isinstance(s, int):
            pick = b if s else a
            return pick if isinstance(pick, int) else (GateKind.BUF, [pick])
        if isinstance(a, int) and isinstance(b, int):
            if a == b:
                return a
            return (GateKind.BUF, [s]) if b else (GateKind.NOT, [s])
        if a == b:
            return (GateKind.BUF, [a])
        return (GateKind.MUX, [s, a, b])
    if kind is GateKind.CONST0:
        return 0
    if kind is GateKind.CONST1:
        return 1
    raise ValueError(kind)


def remove_dead_logic(n: Netlist, keep_inputs: bool = True) -> Netlist:
    """Drop gates outside the fan-in cones of outputs and flip-flops."""
    live = n.transitive_fanin([*n.outputs, *n.dffs], through_dffs=True)
    gates = {net: g for net, g in n.gates.items() if net in live}
    inputs = n.inputs if keep_inputs else tuple(i for i in n.inputs if i in live)
    return Netlist(inputs, n.outputs, gates, n.name)
