"""Scan chains, shift/capture semantics and the scan-only oracle.

Bit streams follow the physical shift order: for each chain the first bit
shifted in lands in the flip-flop next to SO, and the first bit shifted out
comes from that same flip-flop.  Flat vectors concatenate chains in
configuration order.  Inside the library state is passed around as
``{ff_net: bit}`` maps.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from .netcore import Netlist, simulate


class ScanError(ValueError):
    pass


class Polarity(enum.Enum):
    XOR = "XOR"
    XNOR = "XNOR"

    @property
    def identity_bit(self) -> int:
        """Key value under which the gate passes its data input unchanged."""
        return 0 if self is Polarity.XOR else 1

    def inversion(self, key_bit: int) -> int:
        """Net inversion the gate applies for ``key_bit``."""
        return (int(key_bit) & 1) ^ self.identity_bit


class LockKind(enum.Enum):
    UNLOCKED = "unlocked"
    EFF = "eff"
    SEQL = "seql"


@dataclass(frozen=True)
class FFLock:
    """Lock style of one scan flip-flop.

    EFF: a single gate on Q (``scan_key``) feeding both the logic and the scan
    path.  SEQL: ``scan_key`` gates the scan output only and ``fi_key`` gates
    the data input; the functional Q is left alone.
    """

    kind: LockKind = LockKind.UNLOCKED
    scan_key: str | None = None
    scan_polarity: Polarity | None = None
    fi_key: str | None = None
    fi_polarity: Polarity | None = None

    @classmethod
    def eff(cls, key: str, polarity: Polarity) -> "FFLock":
        return cls(LockKind.EFF, key, polarity)

    @classmethod
    def seql(cls, fi_key: str, fi_polarity: Polarity, sq_key: str, sq_polarity: Polarity) -> "FFLock":
        return cls(LockKind.SEQL, sq_key, sq_polarity, fi_key, fi_polarity)

    @property
    def locked(self) -> bool:
        return self.kind is not LockKind.UNLOCKED


UNLOCKED = FFLock()


@dataclass(frozen=True)
class ScanChain:
    order: tuple[str, ...]  # SI side first
    si_port: str = "SI"
    so_port: str = "SO"

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(self.order))

    def __len__(self):
        return len(self.order)

    def distance_to_so(self, ff: str) -> int:
        return len(self.order) - 1 - self.order.index(ff)


def check_chains(chains: Sequence[ScanChain], netlist: Netlist) -> None:
    seen: dict[str, int] = {}
    for chain in chains:
        for ff in chain.order:
            if ff not in netlist.dffs:
                raise ScanError(f"chain entry {ff!r} is not a flip-flop")
            if ff in seen:
                raise ScanError(f"flip-flop {ff!r} appears in more than one chain position")
            seen[ff] = 1
    missing = [q for q in netlist.dffs if q not in seen]
    if missing:
        raise ScanError("flip-flops not on any chain: " + ", ".join(missing))


def default_chains(netlist: Netlist) -> tuple[ScanChain, ...]:
    return (ScanChain(tuple(netlist.dffs), "SI", "SO"),)


_CHAIN_RE = re.compile(r"^CHAIN\s+(\S+)\s+(\S+)\s*:\s*(.*)$", re.IGNORECASE)


def parse_chains(text: str) -> tuple[ScanChain, ...]:
    chains = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _CHAIN_RE.match(line)
        if not m:
            raise ScanError(f"line {lineno}: expected 'CHAIN <si> <so>: ff ...'")
        chains.append(ScanChain(tuple(m.group(3).split()), m.group(1), m.group(2)))
    return tuple(chains)


def serialize_chains(chains: Sequence[ScanChain]) -> str:
    return "".join(f"CHAIN {c.si_port} {c.so_port}: {' '.join(c.order)}\n" for c in chains)


# -- streams <-> maps ----------------------------------------------------------

def stream_to_state(chains: Sequence[ScanChain], bits: Sequence[int]) -> dict[str, int]:
    total = sum(len(c) for c in chains)
    if len(bits) != total:
        raise ScanError(f"expected {total} scan bits, got {len(bits)}")
    state, pos = {}, 0
    for chain in chains:
        for ff in reversed(chain.order):
            state[ff] = int(bits[pos]) & 1
            pos += 1
    return state


def state_to_stream(chains: Sequence[ScanChain], state: Mapping[str, int]) -> tuple[int, ...]:
    return tuple(state[ff] for chain in chains for ff in reversed(chain.order))


# -- shift semantics -------------------------------------------------------------

@dataclass(frozen=True)
class ShiftParity:
    """Affine effect of the key on one flip-flop.

    ``load``: inversion on the loaded value; ``observe``: inversion between the
    captured value and the bit seen at SO; ``functional``: extra inversion on
    the value the logic reads (EFF only); ``capture``: inversion at the data
    input (SeqL FI gate).
    """

    load: int = 0
    observe: int = 0
    functional: int = 0
    capture: int = 0


def _scan_inversion(style: FFLock, key: Mapping[str, int]) -> int:
    if not style.locked:
        return 0
    return style.scan_polarity.inversion(key[style.scan_key])


def shift_semantics(styles: Mapping[str, FFLock], chain: ScanChain,
                    key: Mapping[str, int]) -> dict[str, ShiftParity]:
    inv = [_scan_inversion(styles.get(ff, UNLOCKED), key) for ff in chain.order]
    out = {}
    for k, ff in enumerate(chain.order):
        style = styles.get(ff, UNLOCKED)
        load = sum(inv[:k]) & 1
        observe = sum(inv[k:]) & 1
        functional = inv[k] if style.kind is LockKind.EFF else 0
        capture = style.fi_polarity.inversion(key[style.fi_key]) if style.kind is LockKind.SEQL else 0
        out[ff] = ShiftParity(load, observe, functional, capture)
    return out


# -- oracle ------------------------------------------------------------------------

@dataclass(frozen=True)
class OracleConfig:
    """An activated chip: the unlocked netlist behind its scan chains."""

    netlist: Netlist
    chains: tuple[ScanChain, ...]
    cycles: int = 1

    def __post_init__(self):
        object.__setattr__(self, "chains", tuple(self.chains))
        if self.cycles < 1:
            raise ScanError("capture cycles must be >= 1")
        check_chains(self.chains, self.netlist)


def _cycle_inputs(netlist: Netlist, pis, cycles: int) -> list[dict[str, int]]:
    if pis is None:
        return [{p: 0 for p in netlist.inputs} for _ in range(cycles)]
    if len(pis) != cycles:
        raise ScanError(f"need primary inputs for {cycles} cycle(s), got {len(pis)}")
    out = []
    for vec in pis:
        row = {p: 0 for p in netlist.inputs}
        for p, v in vec.items():
            if p not in row:
                raise ScanError(f"{p!r} is not a primary input")
            row[p] = int(v) & 1
        out.append(row)
    return out


def capture(netlist: Netlist, state: Mapping[str, int], pis, cycles: int) -> dict[str, int]:
    state = dict(state)
    for vec in _cycle_inputs(netlist, pis, cycles):
        _, state = simulate(netlist, vec, state)
    return state


def query_state(cfg: OracleConfig, scan_in: Mapping[str, int], pis=None) -> dict[str, int]:
    """Load ``scan_in`` (by flip-flop), capture ``cfg.cycles`` times, return the
    unloaded values by flip-flop."""
    missing = [q for q in cfg.netlist.dffs if q not in scan_in]
    if missing:
        raise ScanError("scan-in lacks " + ", ".join(missing))
    return capture(cfg.netlist, scan_in, pis, cfg.cycles)


def oracle_query(cfg: OracleConfig, scan_in: Sequence[int], pis=None) -> tuple[int, ...]:
    """Shift ``scan_in`` in, run the capture cycles, shift the response out.

    Both vectors are in shift order (SO-adjacent flip-flop first, per chain).
    ``pis`` optionally gives one ``{input: bit}`` map per capture cycle; absent
    inputs are 0.
    """
    state = stream_to_state(cfg.chains, scan_in)
    return state_to_stream(cfg.chains, query_state(cfg, state, pis))


def locked_scan_session(netlist: Netlist, chains: Sequence[ScanChain], styles: Mapping[str, FFLock],
                        key: Mapping[str, int], scan_in: Mapping[str, int], pis=None,
                        cycles: int = 1) -> dict[str, int]:
    """Clock-by-clock scan test of a locked chip under ``key``.

    Shifts the pattern in through the scan-path key gates, runs the capture
    cycles on the locked netlist and shifts the response out, one clock at a
    time.  Returns the bit observed at SO for each flip-flop.
    """
    key_inputs = {k: int(v) & 1 for k, v in key.items()}
    state: dict[str, int] = {q: 0 for q in netlist.dffs}

    def scan_out(ff):
        style = styles.get(ff, UNLOCKED)
        return state[ff] ^ _scan_inversion(style, key_inputs)

    for chain in chains:
        stream = [scan_in[ff] for ff in reversed(chain.order)]
        for bit in stream:
            shifted = [scan_out(ff) for ff in chain.order[:-1]]
            state[chain.order[0]] = int(bit) & 1
            for ff, v in zip(chain.order[1:], shifted):
                state[ff] = v

    for vec in _cycle_inputs(netlist, pis, cycles):
        vec = {**vec, **{k: v for k, v in key_inputs.items() if k in netlist.inputs}}
        _, state = simulate(netlist, vec, state)

    observed: dict[str, int] = {}
    for chain in chains:
        n = len(chain)
        for t in range(n):
            # t-th bit out of SO was captured by the flip-flop t places from SO
            observed[chain.order[n - 1 - t]] = scan_out(chain.order[-1])
            shifted = [scan_out(ff) for ff in chain.order[:-1]]
            state[chain.order[0]] = 0
            for ff, v in zip(chain.order[1:], shifted):
                state[ff] = v
    return observed
