"""Tseitin encoding of combinational netlists.

The encoder folds constants and aliases inverters/buffers to literals, and
hashes structurally identical gates to the same variable, so encoding the same
cone twice over the same literals costs nothing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from ..netcore import GateKind, Netlist

class CnfError(ValueError):
    pass


@dataclass
class CnfFormula:
    num_vars: int
    clauses: list[tuple[int, ...]]
    var_map: dict[str, int] = field(default_factory=dict)  # net -> signed literal

    def to_dimacs(self) -> str:
        return to_dimacs(self.num_vars, self.clauses)


class CnfBuilder:
    def __init__(self):
        self.num_vars = 0
        self.clauses: list[tuple[int, ...]] = []
        self._strash: dict[tuple, int] = {}
        self._true: int | None = None
        self._flushed = 0

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def add(self, *lits: int) -> None:
        self.clauses.append(tuple(lits))

    def flush(self) -> list[tuple[int, ...]]:
        """Clauses added since the previous flush (for incremental solvers)."""
        out = self.clauses[self._flushed:]
        self._flushed = len(self.clauses)
        return out

    def true_lit(self) -> int:
        if self._true is None:
            self._true = self.new_var()
            self.add(self._true)
        return self._true

    def as_lit(self, v) -> int:
        if v is True:
            return self.true_lit()
        if v is False:
            return -self.true_lit()
        return v

    # -- primitive gates over literals ------------------------------------------
    def and_(self, ins) -> "bool | int":
        lits = set()
        for v in ins:
            if v is False:
                return False
            if v is True:
                continue
            if -v in lits:
                return False
            lits.add(v)
        if not lits:
            return True
        if len(lits) == 1:
            return next(iter(lits))
        key = ("and", tuple(sorted(lits)))
        y = self._strash.get(key)
        if y is None:
            y = self.new_var()
            for a in lits:
                self.add(-y, a)
            self.add(y, *(-a for a in lits))
            self._strash[key] = y
        return y

    def or_(self, ins):
        r = self.and_([not v if isinstance(v, bool) else -v for v in ins])
        return (not r) if isinstance(r, bool) else -r

    def xor(self, ins):
        parity = False
        lits: list[int] = []
        for v in ins:
            if isinstance(v, bool):
                parity ^= v
                continue
            if v < 0:
                parity = not parity
                v = -v
            if v in lits:
                lits.remove(v)
            else:
                lits.append(v)
        if not lits:
            return parity
        acc = lits[0]
        for b in lits[1:]:
            acc = self._xor2(acc, b)
        if isinstance(acc, bool):
            return acc ^ parity
        return -acc if parity else acc

    def _xor2(self, a: int, b: int):
        sign = False
        if a < 0:
            a, sign = -a, not sign
        if b < 0:
            b, sign = -b, not sign
        if a == b:
            return sign
        key = ("xor", min(a, b), max(a, b))
        y = self._strash.get(key)
        if y is None:
            y = self.new_var()
            self.add(-y, a, b)
            self.add(-y, -a, -b)
            self.add(y, -a, b)
            self.add(y, a, -b)
            self._strash[key] = y
        return -y if sign else y

    def mux(self, s, a, b):
        if isinstance(s, bool):
            return b if s else a
        if a == b:
            return a
        if isinstance(a, bool) or isinstance(b, bool):
            return self.or_([self.and_([-s, a]), self.and_([s, b])])
        key = ("mux", s, a, b)
        y = self._strash.get(key)
        if y is None:
            y = self.new_var()
            self.add(s, -a, y)
            self.add(s, a, -y)
            self.add(-s, -b, y)
            self.add(-s, b, -y)
            self.add(-a, -b, y)
            self.add(a, b, -y)
            self._strash[key] = y
        return y

    def equal(self, a, b) -> None:
        """Constrain two values to be equal."""
        d = self.xor([a, b])
        if d is True:
            self.clauses.append(())
        elif d is not False:
            self.add(-d)

    def fix(self, v, bit: int) -> None:
        self.equal(v, bool(bit))

    # -- netlists ---------------------------------------------------------------------
    def encode(self, n: Netlist, bind: Mapping[str, object]) -> dict[str, object]:
        """Encode the combinational netlist ``n``.

        ``bind`` gives a literal or bool for every input.  Returns the value of
        every net.
        """
        if n.dffs:
            raise CnfError("netlist has flip-flops; encode its combinational view")
        values: dict[str, object] = {}
        for net in n.inputs:
            if net not in bind:
                raise CnfError(f"input {net!r} is not bound")
            values[net] = bind[net]
        for net in n.comb_order:
            g = n.gates[net]
            ins = [values[f] for f in g.fanins]
            k = g.kind
            if k is GateKind.AND:
                v = self.and_(ins)
            elif k is GateKind.NAND:
                v = _neg(self.and_(ins))
            elif k is GateKind.OR:
                v = self.or_(ins)
            elif k is GateKind.NOR:
                v = _neg(self.or_(ins))
            elif k is GateKind.XOR:
                v = self.xor(ins)
            elif k is GateKind.XNOR:
                v = _neg(self.xor(ins))
            elif k is GateKind.NOT:
                v = _neg(ins[0])
            elif k is GateKind.BUF:
                v = ins[0]
            elif k is GateKind.MUX:
                v = self.mux(*ins)
            elif k is GateKind.CONST0:
                v = False
            elif k is GateKind.CONST1:
                v = True
            else:
                raise CnfError(f"cannot encode {k.value}")
            values[net] = v
        return values


def _neg(v):
    return (not v) if isinstance(v, bool) else -v


def tseitin(n: Netlist) -> CnfFormula:
    """CNF whose models restricted to the input variables biject with input
    patterns; every net maps to a literal."""
    if n.dffs:
        raise CnfError("tseitin needs a combinational netlist (DFF present)")
    b = CnfBuilder()
    bind = {net: b.new_var() for net in n.inputs}
    values = b.encode(n, bind)
    var_map = {net: b.as_lit(v) for net, v in values.items()}
    return CnfFormula(b.num_vars, list(b.clauses), var_map)


def to_dimacs(num_vars: int, clauses) -> str:
    lines = [f"p cnf {num_vars} {len(clauses)}"]
    lines += [" ".join(map(str, c)) + " 0" for c in clauses]
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> tuple[int, list[tuple[int, ...]]]:
    num_vars = 0
    clauses, cur = [], []
    for line in text.splitlines():
        line = line.strip()
        if not line or line[0] in "c%":
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) < 4 or parts[1] != "cnf":
                raise CnfError(f"bad header {line!r}")
            num_vars = int(parts[2])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(tuple(cur))
                cur = []
            else:
                cur.append(lit)
    if cur:
        clauses.append(tuple(cur))
    return num_vars, clauses

