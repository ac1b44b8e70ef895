"""Scan unrolling: a locked sequential design as one combinational instance.

The instance has three parts.  The load stage passes every scan-in bit
through the scan-path key gates of the flip-flops it shifts past.  Then come
``N`` copies of the combinational logic.  The observe stage passes each
captured value through the flip-flop's own scan gate and those of its
successors towards SO.

Net names: inputs ``si_<ff>``, ``pi_<c>_<name>`` (only with ``expose_pis``)
and the key inputs; outputs ``so_<ff>``; load nets ``ld_<ff>_<j>``, logic
copies ``c<c>_<net>``, observe nets ``ob_<ff>_<j>``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .locker import KeyVector, LockedDesign, LockingError, as_design
from .netcore import Gate, GateKind, Netlist, NetlistError, propagate_constants, remove_dead_logic
from .scanmodel import LockKind, OracleConfig, Polarity


@dataclass(frozen=True)
class AttackInstance:
    comb: Netlist
    ff_map: Mapping[str, tuple[str, str]]  # ff -> (si input, so output)
    stream: tuple[str, ...]                # flip-flops in shift order
    cycles: int
    design: LockedDesign
    key_names: tuple[str, ...]
    expose_pis: bool = False

    @property
    def data_inputs(self) -> tuple[str, ...]:
        keys = set(self.key_names)
        return tuple(i for i in self.comb.inputs if i not in keys)

    def oracle(self) -> OracleConfig:
        return OracleConfig(self.design.original, self.design.chains, self.cycles)

    def query_oracle(self, x: Mapping[str, int]) -> dict[str, int]:
        """Ask the activated chip for the outputs at instance input ``x``."""
        from .scanmodel import query_state

        cfg = self.oracle()
        state = {ff: int(x[si]) for ff, (si, _) in self.ff_map.items()}
        pis = None
        if self.expose_pis:
            pis = [{p: int(x[f"pi_{c}_{p}"]) for p in cfg.netlist.inputs} for c in range(self.cycles)]
        final = query_state(cfg, state, pis)
        return {so: final[ff] for ff, (_, so) in self.ff_map.items()}


def _scan_gate(style) -> tuple[GateKind, str] | None:
    if not style.locked:
        return None
    kind = GateKind.XOR if style.scan_polarity is Polarity.XOR else GateKind.XNOR
    return kind, style.scan_key


def unroll(d: LockedDesign | Netlist, cycles: int = 1, *, expose_pis: bool = False) -> AttackInstance:
    if cycles < 1:
        raise LockingError("cycles must be >= 1")
    d = as_design(d)
    nl = d.netlist
    keys = set(d.key_names)
    sq_gates = set()
    for ff in nl.dffs:
        s = d.style(ff)
        if s.kind is LockKind.SEQL:
            sq_gates |= {net for net, g in nl.gates.items()
                         if g.fanins == (ff, s.scan_key) and g.kind in (GateKind.XOR, GateKind.XNOR)}

    gates: dict[str, Gate] = {}
    stream = [ff for chain in d.chains for ff in reversed(chain.order)]
    ff_map = {ff: (f"si_{ff}", f"so_{ff}") for ff in stream}
    inputs = [ff_map[ff][0] for ff in stream]
    tied = []
    for c in range(cycles):
        for p in nl.inputs:
            if p in keys:
                continue
            name = f"pi_{c}_{p}"
            inputs.append(name)
            if not expose_pis:
                tied.append(name)
    inputs += [k for k in nl.inputs if k in keys]

    # load stage
    state: dict[str, str] = {}
    for chain in d.chains:
        for k, ff in enumerate(chain.order):
            cur = ff_map[ff][0]
            for j in range(k):
                g = _scan_gate(d.style(chain.order[j]))
                if g is None:
                    continue
                net = f"ld_{ff}_{j}"
                gates[net] = Gate(g[0], (cur, g[1]))
                cur = net
            state[ff] = cur

    # capture copies
    comb_nets = [net for net in nl.comb_order if net not in sq_gates]
    for c in range(cycles):
        names: dict[str, str] = {k: k for k in keys}
        for p in nl.inputs:
            if p not in keys:
                names[p] = f"pi_{c}_{p}"
        names.update(state)
        for net in comb_nets:
            g = nl.gates[net]
            names[net] = f"c{c}_{net}"
            gates[names[net]] = Gate(g.kind, tuple(names[f] for f in g.fanins))
        state = {q: names[dn] for q, dn in nl.dffs.items()}

    # observe stage
    outputs = []
    for chain in d.chains:
        for k, ff in enumerate(chain.order):
            cur = state[ff]
            for j in range(k, len(chain.order)):
                g = _scan_gate(d.style(chain.order[j]))
                if g is None:
                    continue
                net = f"ob_{ff}_{j}"
                gates[net] = Gate(g[0], (cur, g[1]))
                cur = net
            gates[ff_map[ff][1]] = Gate(GateKind.BUF, (cur,))
    outputs = [ff_map[ff][1] for ff in stream]

    comb = Netlist(inputs, outputs, gates, f"{nl.name}_unrolled{cycles}")
    if tied:
        comb = propagate_constants(comb, {t: 0 for t in tied}, name=comb.name)
    comb = remove_dead_logic(comb)
    key_names = tuple(k for k in nl.inputs if k in keys)
    return AttackInstance(comb, ff_map, tuple(stream), cycles, d, key_names, expose_pis)


def oracle_instance(d: LockedDesign | AttackInstance, cycles: int | None = None,
                    *, expose_pis: bool | None = None) -> AttackInstance:
    """Unrolled instance of the activated chip (the original, unlocked)."""
    if isinstance(d, AttackInstance):
        cycles = d.cycles if cycles is None else cycles
        expose_pis = d.expose_pis if expose_pis is None else expose_pis
        d = d.design
    d = as_design(d)
    plain = LockedDesign(d.original, d.chains, {}, KeyVector.empty(), d.original)
    return unroll(plain, cycles or 1, expose_pis=bool(expose_pis))


def apply_key(target, key: KeyVector | Mapping[str, int], subset=None) -> Netlist:
    """Tie key inputs to constants and simplify.

    ``target`` is an :class:`AttackInstance`, a :class:`LockedDesign` or a
    netlist.  ``subset`` optionally restricts which partitions are applied.
    """
    if isinstance(target, AttackInstance):
        netlist, names = target.comb, target.key_names
    elif isinstance(target, LockedDesign):
        netlist, names = target.netlist, target.key_names
    else:
        netlist, names = target, None
    if isinstance(key, KeyVector):
        bits = key.bits if subset is None else key.subset(*subset)
    else:
        bits = dict(key)
        if subset is not None:
            raise LockingError("partition filter needs a KeyVector")
    if names is not None and subset is None:
        missing = [k for k in names if k not in bits]
        if missing:
            raise LockingError("missing key bits: " + ", ".join(missing))
    consts = {k: v for k, v in bits.items() if k in netlist.inputs}
    if names is None:
        unknown = [k for k in bits if k not in netlist.inputs]
        if unknown:
            raise NetlistError("not inputs of the netlist: " + ", ".join(unknown))
    return propagate_constants(netlist, consts)
