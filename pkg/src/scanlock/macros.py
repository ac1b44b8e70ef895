"""Complex-cell netlists and their decomposition into basic gates.

Synthesized netlists carry AOI/OAI/HA/FA cells that the bench dialect does not
have.  A half or full adder ``h = FA(a, b, c)`` defines two nets, ``h_S`` and
``h_C``, which later lines may read.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .netcore import (NET_RE, BenchSyntaxError, Gate, GateKind, Netlist, NetlistError,
                      check_arity, eval_gate, fresh_name)

MACRO_ARITY = {"AOI21": 3, "AOI22": 4, "OAI21": 3, "OAI22": 4, "HA": 2, "FA": 3}
MULTI_OUTPUT = {"HA", "FA"}

_IO_RE = re.compile(rf"^(INPUT|OUTPUT)\s*\(\s*({NET_RE})\s*\)$", re.IGNORECASE)
_CELL_RE = re.compile(rf"^({NET_RE})\s*=\s*([A-Za-z0-9_]+)\s*\((.*)\)$")


class MacroError(NetlistError):
    pass


@dataclass(frozen=True)
class Cell:
    name: str
    kind: str
    fanins: tuple[str, ...]

    def output_nets(self) -> tuple[str, ...]:
        if self.kind in MULTI_OUTPUT:
            return (f"{self.name}_S", f"{self.name}_C")
        return (self.name,)


@dataclass(frozen=True)
class MacroNetlist:
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    cells: tuple[Cell, ...]
    name: str = "top"


def _check_cell(kind: str, n: int):
    if kind in MACRO_ARITY:
        if n != MACRO_ARITY[kind]:
            raise MacroError(f"{kind} takes {MACRO_ARITY[kind]} inputs, got {n}")
        return
    try:
        gk = GateKind.parse(kind)
    except ValueError:
        raise MacroError(f"unknown macro {kind!r}") from None
    check_arity(gk, n)


def parse_macro_bench(text: str, name: str = "top") -> MacroNetlist:
    inputs, outputs, cells = [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _IO_RE.match(line)
        if m:
            (inputs if m.group(1).upper() == "INPUT" else outputs).append(m.group(2))
            continue
        m = _CELL_RE.match(line)
        if not m:
            raise BenchSyntaxError(f"cannot parse {line!r}", lineno)
        kind = m.group(2).upper()
        fanins = tuple(a.strip() for a in m.group(3).split(",") if a.strip())
        try:
            _check_cell(kind, len(fanins))
        except NetlistError as exc:
            raise BenchSyntaxError(str(exc), lineno) from None
        cells.append(Cell(m.group(1), kind, fanins))
    return MacroNetlist(tuple(inputs), tuple(outputs), tuple(cells), name)


def macro_eval(kind: str, bits) -> tuple[int, ...]:
    """Reference semantics of a cell, one value per output net."""
    b = [int(x) & 1 for x in bits]
    if kind == "AOI21":
        return (1 - ((b[0] & b[1]) | b[2]),)
    if kind == "AOI22":
        return (1 - ((b[0] & b[1]) | (b[2] & b[3])),)
    if kind == "OAI21":
        return (1 - ((b[0] | b[1]) & b[2]),)
    if kind == "OAI22":
        return (1 - ((b[0] | b[1]) & (b[2] | b[3])),)
    if kind == "HA":
        return (b[0] ^ b[1], b[0] & b[1])
    if kind == "FA":
        s = b[0] ^ b[1] ^ b[2]
        c = (b[0] & b[1]) | (b[0] & b[2]) | (b[1] & b[2])
        return (s, c)
    return (eval_gate(GateKind.parse(kind), b),)


def simulate_macros(m: MacroNetlist, pi) -> dict[str, int]:
    """Evaluate a macro netlist directly from cell semantics (cells in order
    of dependency are resolved by repeated passes)."""
    values = {net: int(pi[net]) & 1 for net in m.inputs}
    pending = list(m.cells)
    while pending:
        rest = []
        for cell in pending:
            if all(f in values for f in cell.fanins):
                outs = macro_eval(cell.kind, [values[f] for f in cell.fanins])
                values.update(zip(cell.output_nets(), outs))
            else:
                rest.append(cell)
        if len(rest) == len(pending):
            raise MacroError("unresolvable cells: " + ", ".join(c.name for c in rest))
        pending = rest
    return {net: values[net] for net in m.outputs}


def decompose_complex(m: MacroNetlist | str) -> Netlist:
    """Rewrite every complex cell as a composition of basic gates."""
    if isinstance(m, str):
        m = parse_macro_bench(m)
    taken = set(m.inputs)
    for cell in m.cells:
        taken.update(cell.output_nets())
    gates: dict[str, Gate] = {}

    def tmp(base):
        name = fresh_name(base, taken)
        taken.add(name)
        return name

    def emit(net, kind, *fanins):
        gates[net] = Gate(kind, fanins)
        return net

    for cell in m.cells:
        k, f, y = cell.kind, cell.fanins, cell.name
        if k == "AOI21":
            a = emit(tmp(f"{y}_and0"), GateKind.AND, f[0], f[1])
            emit(y, GateKind.NOR, a, f[2])
        elif k == "AOI22":
            a = emit(tmp(f"{y}_and0"), GateKind.AND, f[0], f[1])
            b = emit(tmp(f"{y}_and1"), GateKind.AND, f[2], f[3])
            emit(y, GateKind.NOR, a, b)
        elif k == "OAI21":
            o = emit(tmp(f"{y}_or0"), GateKind.OR, f[0], f[1])
            emit(y, GateKind.NAND, o, f[2])
        elif k == "OAI22":
            o = emit(tmp(f"{y}_or0"), GateKind.OR, f[0], f[1])
            p = emit(tmp(f"{y}_or1"), GateKind.OR, f[2], f[3])
            emit(y, GateKind.NAND, o, p)
        elif k == "HA":
            s, c = cell.output_nets()
            emit(s, GateKind.XOR, f[0], f[1])
            emit(c, GateKind.AND, f[0], f[1])
        elif k == "FA":
            s, c = cell.output_nets()
            emit(s, GateKind.XOR, f[0], f[1], f[2])
            ab = emit(tmp(f"{y}_ab"), GateKind.AND, f[0], f[1])
            ac = emit(tmp(f"{y}_ac"), GateKind.AND, f[0], f[2])
            bc = emit(tmp(f"{y}_bc"), GateKind.AND, f[1], f[2])
            emit(c, GateKind.OR, ab, ac, bc)
        else:
            emit(y, GateKind.parse(k), *f)
    return Netlist(m.inputs, m.outputs, gates, m.name)
