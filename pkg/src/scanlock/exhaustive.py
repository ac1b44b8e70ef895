"""Exhaustive bit-parallel comparison of two combinational netlists.

Pattern ``g`` assigns bit ``i`` of ``g`` to the ``i``-th variable; data
variables take the low bits and key variables the high bits, so each key
owns one contiguous block of patterns.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .netcore import Netlist, simulate_packed

MAX_CHUNK_BITS = 22
_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


def _low_word(i: int) -> np.uint64:
    w = 0
    for b in range(64):
        if (b >> i) & 1:
            w |= 1 << b
    return np.uint64(w)


def var_words(i: int, start: int, npat: int) -> np.ndarray:
    """Packed values of variable ``i`` over patterns ``start .. start+npat-1``.

    ``start`` must be a multiple of ``npat`` when ``npat >= 64``.
    """
    nwords = max(1, npat // 64)
    if i < 6:
        if npat >= 64:
            return np.full(nwords, _low_word(i), dtype=np.uint64)
        g = np.arange(start, start + npat, dtype=np.int64)
        bits = ((g >> i) & 1).astype(np.uint8)
        packed = np.packbits(bits, bitorder="little")
        return np.frombuffer(packed.tobytes().ljust(8, b"\0"), dtype=np.uint64).copy()
    w = np.arange(start // 64, start // 64 + nwords, dtype=np.int64)
    return np.where((w >> (i - 6)) & 1, _ONES, np.uint64(0)).astype(np.uint64)


def unpack(words: np.ndarray, npat: int) -> np.ndarray:
    return np.unpackbits(words.view(np.uint8), bitorder="little")[:npat].astype(bool)


def support(n: Netlist, outputs: Iterable[str] | None = None) -> list[str]:
    """Inputs of ``n`` in the structural fan-in of ``outputs`` (default: all)."""
    cone = n.transitive_fanin(n.outputs if outputs is None else outputs)
    return [i for i in n.inputs if i in cone]


def _assignment(n: Netlist, order: Sequence[str], start: int, npat: int, cache: dict):
    nwords = max(1, npat // 64)
    zeros = np.zeros(nwords, dtype=np.uint64)
    out = {}
    for net in n.inputs:
        if net in order:
            i = order.index(net)
            if i not in cache:
                cache[i] = var_words(i, start, npat)
            out[net] = cache[i]
        else:
            out[net] = zeros
    return out


def cone(n: Netlist, output: str) -> Netlist:
    """Single-output netlist holding the fan-in cone of ``output``."""
    nets = n.transitive_fanin([output])
    gates = {net: g for net, g in n.gates.items() if net in nets}
    return Netlist([i for i in n.inputs if i in nets], [output], gates, n.name, _validate=False)


MAX_BLOCK_BITS = 30


def _block_match(test: Netlist, ref: Netlist, data_vars: Sequence[str], key_vars: Sequence[str],
                 invertible: bool) -> np.ndarray:
    order = list(data_vars) + list(key_vars)
    s, k = len(data_vars), len(key_vars)
    if s + k > MAX_BLOCK_BITS:
        raise ValueError(f"{s} data and {k} key variables are too many to enumerate")
    per_key = 1 << s
    total = 1 << (s + k)
    chunk = min(total, 1 << max(MAX_CHUNK_BITS, s))
    keys_per_chunk = chunk // per_key
    nwords = max(1, chunk // 64)
    a, b = test.outputs[0], ref.outputs[0]
    result = np.zeros(1 << k, dtype=bool)
    ref_val = None
    for start in range(0, total, chunk):
        tv = simulate_packed(test, _assignment(test, order, start, chunk, {}), nwords)[a]
        if ref_val is None:
            # the reference reads no key variable and every chunk covers whole
            # key blocks, so its values repeat from chunk to chunk
            ref_val = simulate_packed(ref, _assignment(ref, order, start, chunk, {}), nwords)[b]
        diff = unpack(tv ^ ref_val, chunk).reshape(keys_per_chunk, per_key)
        same = ~diff.any(axis=1)
        if invertible:
            same |= diff.all(axis=1)
        first = start // per_key
        result[first:first + keys_per_chunk] = same
    return result


def key_match(test: Netlist, ref: Netlist, data_vars: Sequence[str], key_vars: Sequence[str],
              invertible: Iterable[int] = ()) -> np.ndarray:
    """For every key, does ``test`` match ``ref`` on all data patterns?

    Outputs are compared by position, each one only over the data and key
    variables in its own cone.  For positions in ``invertible`` a
    complemented output also counts as a match.  Returns a boolean array
    indexed by key value (bit ``j`` of the index is ``key_vars[j]``).
    """
    if len(test.outputs) != len(ref.outputs):
        raise ValueError("output counts differ")
    if set(ref.inputs) & set(key_vars):
        raise ValueError("the reference netlist must not read key variables")
    inv = set(invertible)
    key_vars = list(key_vars)
    result = np.ones(1 << len(key_vars), dtype=bool)
    index = None
    projections: dict[tuple[int, ...], np.ndarray] = {}
    for pos, (a, b) in enumerate(zip(test.outputs, ref.outputs)):
        ta, tb = cone(test, a), cone(ref, b)
        used = set(ta.inputs) | set(tb.inputs)
        dvars = [v for v in data_vars if v in used]
        kpos = tuple(j for j, v in enumerate(key_vars) if v in used)
        ok = _block_match(ta, tb, dvars, [key_vars[j] for j in kpos], pos in inv)
        if ok.all():
            continue
        if kpos not in projections:
            if index is None:
                index = np.arange(1 << len(key_vars), dtype=np.int64)
            proj = np.zeros_like(index)
            for i, j in enumerate(kpos):
                proj |= ((index >> j) & 1) << i
            projections[kpos] = proj
        result &= ok[projections[kpos]]
        if not result.any():
            break
    return result


def key_index_bits(index: int, key_vars: Sequence[str]) -> dict[str, int]:
    return {k: (index >> j) & 1 for j, k in enumerate(key_vars)}
