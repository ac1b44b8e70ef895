"""Shipped example circuits and random generators."""
from __future__ import annotations

import random
from dataclasses import replace
from importlib import resources
from typing import Sequence

from .exhaustive import key_match, support
from .locker import LockedDesign, LockingError, Partition, as_design, lock_eff, lock_random, lock_seql
from .netcore import Gate, GateKind, Netlist, parse_bench
from .scanmodel import Polarity, ScanChain, parse_chains

_BINARY = (GateKind.AND, GateKind.OR, GateKind.NAND, GateKind.NOR, GateKind.XOR, GateKind.XNOR)


def data_text(name: str) -> str:
    return resources.files("scanlock.data").joinpath(name).read_text()


def fig2a() -> tuple[Netlist, tuple[ScanChain, ...]]:
    """The four flip-flop example and its single scan chain."""
    return parse_bench(data_text("fig2a.bench"), "fig2a"), parse_chains(data_text("fig2a.chain"))


def fig2_eff_design() -> LockedDesign:
    """EFF locking of the two feedback flip-flops (XOR fok_0, XNOR fok_1)."""
    n, chains = fig2a()
    return lock_eff(n, chains, ["G_3", "G_5"], polarities=[Polarity.XOR, Polarity.XNOR],
                    key_names=["fok_0", "fok_1"])


def fig2c_seql_design() -> LockedDesign:
    """SeqL locking of the two pipeline flip-flops.

    G_9 (next to SO) gets XOR fik_1 and XNOR sqk_1, G_7 gets XOR fik_0 and
    XOR sqk_0; both move to their own chain SI_WOF -> G_7 -> G_9 -> SO_WOF.
    """
    n, chains = fig2a()
    return lock_seql(n, chains, ["G_9", "G_7"],
                     polarities=[(Polarity.XOR, Polarity.XNOR), (Polarity.XOR, Polarity.XOR)],
                     key_names=[("fik_1", "sqk_1"), ("fik_0", "sqk_0")])


class _Builder:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.gates: dict[str, Gate] = {}
        self.count = 0

    def gate(self, kind, fanins) -> str:
        name = f"n{self.count}"
        self.count += 1
        self.gates[name] = Gate(kind, tuple(fanins))
        return name

    def cone(self, sources: Sequence[str], size: int, must: Sequence[str] = ()) -> str:
        """A random cone of exactly ``size`` gates (size >= 1) over ``sources``.

        ``k`` sampled sources plus ``e`` extra gates reduce pairwise to one
        net, which costs ``2e + k - 1`` gates in total.
        """
        rng = self.rng
        sources = list(sources)
        k = min(len(sources), size + 1)
        if (size - k + 1) % 2 and k > 1:
            k -= 1
        pool = rng.sample(sources, k)
        for m in must:
            if m not in pool:
                pool[rng.randrange(len(pool))] = m
        if (size - k + 1) % 2:
            # one source and an odd size: spend one gate on an inverter
            pool[0] = self.gate(GateKind.NOT, [pool[0]])
            size -= 1
        for _ in range((size - k + 1) // 2):
            a, b = rng.sample(list(dict.fromkeys(sources + pool)), 2)
            pool.append(self.gate(rng.choice(_BINARY), [a, b]))
        while len(pool) > 1:
            a = pool.pop(rng.randrange(len(pool)))
            b = pool.pop(rng.randrange(len(pool)))
            pool.append(self.gate(rng.choice(_BINARY), [a, b]))
        return pool[0]


def random_pipeline(seed: int, n_in: int = 3, n_fb: int = 1, n_out: int = 4, cone_size: int = 6,
                    fb_cone_size: int = 3, name: str | None = None) -> Netlist:
    """Input registers, a few feedback registers, output registers.

    ``ri<i> = DFF(p<i>)``; ``fb<j>`` reads itself and the other registers;
    ``ro<k>`` registers a random cone over input and feedback registers and
    drives output ``ro<k>``.  One scan chain in declaration order puts the
    output registers next to SO.
    """
    rng = random.Random(seed)
    b = _Builder(rng)
    pis = [f"p{i}" for i in range(n_in)]
    ri = [f"ri{i}" for i in range(n_in)]
    fb = [f"fb{j}" for j in range(n_fb)]
    ro = [f"ro{k}" for k in range(n_out)]
    dffs: dict[str, str] = {}
    for p, q in zip(pis, ri):
        dffs[q] = p
    for q in fb:
        dffs[q] = b.cone(ri + fb, fb_cone_size, must=[q])
    for q in ro:
        dffs[q] = b.cone(ri + fb, cone_size)
    gates = dict(b.gates)
    for q, d in dffs.items():
        gates[q] = Gate(GateKind.DFF, (d,))
    return Netlist(pis, ro, gates, name or f"pipe{seed}")


def pipeline_chain(n: Netlist) -> tuple[ScanChain, ...]:
    return (ScanChain(tuple(n.dffs), "SI", "SO"),)


def kc_identifiable(design: LockedDesign, cycles: Sequence[int] = (1,),
                    invertible: Sequence[str] = ()) -> bool:
    """Is the correct K_c the only K_c assignment that reproduces the chip?

    Checked exhaustively on the unrolled instance for each cycle count.  An
    output of a flip-flop in ``invertible`` may match up to complement, as it
    would once that flip-flop carries an FI-SQ pair.
    """
    from .unroller import oracle_instance, unroll

    kc = list(design.correct_key.subset(Partition.KC))
    others = {k: v for k, v in design.correct_key.bits.items() if k not in kc}
    correct = sum(bit << j for j, bit in enumerate(design.correct_key[k] for k in kc))
    for n_cycles in cycles:
        inst = unroll(design, n_cycles)
        comb = inst.comb
        if others:
            from .netcore import propagate_constants
            comb = propagate_constants(comb, others)
        ref = oracle_instance(inst).comb
        data = [i for i in support(comb) if i not in kc]
        data += [i for i in support(ref) if i not in data]
        inv = [i for i, o in enumerate(comb.outputs) if o.removeprefix("so_") in set(invertible)]
        ok = key_match(comb, ref, data, kc, inv)
        if ok.sum() != 1 or not ok[correct]:
            return False
    return True


def random_base_circuit(seed: int, n_kc: int = 4, cycles: Sequence[int] = (1,), *, n_in: int = 3,
                        n_fb: int = 1, n_out: int = 4, cone_size: int = 6, fb_cone_size: int = 3,
                        max_tries: int = 50) -> LockedDesign:
    """A pipeline carrying ``n_kc`` combinational key gates that stay
    recoverable through the scan port for every cycle count in ``cycles``.

    Key gates are added one at a time on random internal nets; a gate that
    would make the K_c bits ambiguous is dropped and another net tried.
    """
    for attempt in range(max_tries):
        s = seed * 1000 + attempt
        n = random_pipeline(s, n_in, n_fb, n_out, cone_size, fb_cone_size, name=f"base{seed}")
        ro = [q for q in n.dffs if q.startswith("ro")]
        d_nets = set(n.dffs.values())
        cands = [net for net, g in n.gates.items() if g.kind is not GateKind.DFF and net not in d_nets]
        random.Random(s).shuffle(cands)
        design = as_design(n, pipeline_chain(n))
        for i, net in enumerate(cands):
            if len(design.key_names) == n_kc:
                break
            trial = lock_random(design, 1, seed=s + i, candidates=[net])
            if kc_identifiable(trial, cycles, invertible=ro):
                design = trial
        if len(design.key_names) == n_kc:
            return replace(design, seed=seed)
    raise LockingError(f"no identifiable base circuit found for seed {seed}")


def census_pipeline(n_locked: int, seed: int, n_in: int = 3, cone_size: int = 4) -> LockedDesign:
    """Pipeline with ``n_locked`` output registers, all SeqL-locked with
    random polarities."""
    n = random_pipeline(seed, n_in=n_in, n_fb=0, n_out=n_locked, cone_size=cone_size,
                        name=f"census{n_locked}_{seed}")
    ro = [q for q in n.dffs if q.startswith("ro")]
    return lock_seql(n, pipeline_chain(n), list(reversed(ro)), seed=seed)


def eff_design(base: LockedDesign, n_ff: int, seed: int) -> LockedDesign:
    """EFF-lock ``n_ff`` randomly chosen flip-flops of ``base``."""
    rng = random.Random(seed)
    ffs = rng.sample(list(base.netlist.dffs), n_ff)
    return lock_eff(base, None, ffs, seed=seed)


def synthetic_circuit(gates: int = 10012, seed: int = 0, n_in: int = 64, n_fb: int = 8,
                      n_out: int = 64) -> Netlist:
    """Pipeline with exactly ``gates`` combinational gates."""
    if gates < n_fb * 2 + n_out:
        raise ValueError("too few gates for the requested shape")
    fb_size = 3
    rest = gates - n_fb * fb_size
    sizes = [rest // n_out + (1 if k < rest % n_out else 0) for k in range(n_out)]
    rng = random.Random(seed)
    b = _Builder(rng)
    pis = [f"p{i}" for i in range(n_in)]
    ri = [f"ri{i}" for i in range(n_in)]
    fb = [f"fb{j}" for j in range(n_fb)]
    ro = [f"ro{k}" for k in range(n_out)]
    dffs = dict(zip(ri, pis))
    for q in fb:
        dffs[q] = b.cone(ri + fb, fb_size, must=[q])
    for q, size in zip(ro, sizes):
        dffs[q] = b.cone(ri + fb, size)
    all_gates = dict(b.gates)
    for q, d in dffs.items():
        all_gates[q] = Gate(GateKind.DFF, (d,))
    n = Netlist(pis, ro, all_gates, f"synthetic{gates}")
    if n.comb_gate_count() != gates:
        raise AssertionError(f"generator produced {n.comb_gate_count()} gates")
    return n


__all__ = ["fig2a", "fig2_eff_design", "fig2c_seql_design", "random_pipeline", "random_base_circuit",
           "census_pipeline", "eff_design", "synthetic_circuit", "kc_identifiable", "pipeline_chain",
           "data_text", "as_design"]
