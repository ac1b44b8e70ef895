"""Miters and combinational equivalence checking."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

from ..netcore import Netlist
from .cnf import CnfBuilder, CnfFormula
from .solver import Solver, Status


class SignatureError(ValueError):
    pass


def _check_signature(a: Netlist, b: Netlist, shared: set[str]) -> None:
    if len(a.outputs) != len(b.outputs):
        raise SignatureError(f"output counts differ: {len(a.outputs)} vs {len(b.outputs)}")
    for net in shared:
        if net not in a.inputs or net not in b.inputs:
            raise SignatureError(f"shared input {net!r} missing from one side")


def encode_miter(builder: CnfBuilder, a: Netlist, b: Netlist, shared_inputs: Iterable[str] | None = None):
    """Encode both circuits into ``builder``; returns ``(diff, bind_a, bind_b)``.

    Inputs in ``shared_inputs`` (default: every input of ``a``) get one
    variable; the rest get a private variable per side.  ``diff`` is a literal
    (or constant) that is true iff some output pair differs, outputs being
    matched by position.
    """
    shared = set(a.inputs if shared_inputs is None else shared_inputs)
    _check_signature(a, b, shared)
    common = {net: builder.new_var() for net in a.inputs if net in shared}
    bind_a = {net: common.get(net) or builder.new_var() for net in a.inputs}
    bind_b = {net: common.get(net) or builder.new_var() for net in b.inputs}
    va = builder.encode(a, bind_a)
    vb = builder.encode(b, bind_b)
    diffs = [builder.xor([va[x], vb[y]]) for x, y in zip(a.outputs, b.outputs)]
    return builder.or_(diffs), bind_a, bind_b


def build_miter(a: Netlist, b: Netlist, shared_inputs: Iterable[str] | None = None) -> tuple[CnfFormula, int]:
    builder = CnfBuilder()
    diff, bind_a, bind_b = encode_miter(builder, a, b, shared_inputs)
    diff = builder.as_lit(diff)
    var_map = {}
    for net, lit in bind_a.items():
        var_map[net if bind_b.get(net) == lit else f"a:{net}"] = lit
    for net, lit in bind_b.items():
        if var_map.get(net) != lit:
            var_map[f"b:{net}"] = lit
    return CnfFormula(builder.num_vars, list(builder.clauses), var_map), diff


class Equivalence(enum.Enum):
    EQUIVALENT = "EQUIVALENT"
    DIFFERENT = "DIFFERENT"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class EquivalenceResult:
    status: Equivalence
    witness: dict[str, int] | None = None

    @property
    def equivalent(self) -> bool:
        return self.status is Equivalence.EQUIVALENT

    def __bool__(self):
        return self.equivalent


def check_equivalence(a: Netlist, b: Netlist, time_limit: float | None = 60.0,
                      seed: int = 0) -> EquivalenceResult:
    """Prove ``a`` and ``b`` equivalent or return a distinguishing input.

    Both netlists must be combinational, read the same input names and have
    the same number of outputs.
    """
    if set(a.inputs) != set(b.inputs):
        extra = sorted(set(a.inputs) ^ set(b.inputs))
        raise SignatureError("input sets differ: " + ", ".join(extra))
    builder = CnfBuilder()
    diff, bind, _ = encode_miter(builder, a, b)
    if diff is False:
        return EquivalenceResult(Equivalence.EQUIVALENT)
    solver = Solver(seed=seed)
    solver.ensure_vars(builder.num_vars)
    solver.add_clauses(builder.clauses)
    out = solver.solve([builder.as_lit(diff)], time_limit=time_limit)
    if out.status is Status.UNSAT:
        return EquivalenceResult(Equivalence.EQUIVALENT)
    if out.status is Status.TIMEOUT:
        return EquivalenceResult(Equivalence.UNKNOWN)
    witness = {net: int(out.value(lit)) if isinstance(lit, int) else int(lit) for net, lit in bind.items()}
    return EquivalenceResult(Equivalence.DIFFERENT, witness)
