import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scanlock.circuits import (census_pipeline, kc_identifiable, random_base_circuit, random_pipeline,
                               synthetic_circuit)
from scanlock.exhaustive import key_match, support, unpack, var_words
from scanlock.kaglab import closed_form_applies
from scanlock.locker import Partition
from scanlock.netcore import Gate, GateKind, Netlist, parse_bench

from conftest import random_comb, ref_eval


@pytest.mark.parametrize("seed", [0, 5, 17])
def test_pipeline_shape(seed):
    n = random_pipeline(seed, n_in=3, n_fb=2, n_out=4, cone_size=6, fb_cone_size=3)
    assert n.comb_gate_count() == 2 * 3 + 4 * 6
    assert [q for q in n.dffs] == ["ri0", "ri1", "ri2", "fb0", "fb1", "ro0", "ro1", "ro2", "ro3"]
    assert list(n.outputs) == ["ro0", "ro1", "ro2", "ro3"]
    assert random_pipeline(seed, n_fb=2) == random_pipeline(seed, n_fb=2)


@pytest.mark.parametrize("gates", [200, 1001])
def test_synthetic_gate_count(gates):
    assert synthetic_circuit(gates, seed=1, n_in=8, n_fb=2, n_out=8).comb_gate_count() == gates


def test_synthetic_too_small():
    with pytest.raises(ValueError):
        synthetic_circuit(10, n_fb=8, n_out=64)


def test_base_circuit_kc_identifiable():
    d = random_base_circuit(4, n_kc=3, cycles=(1, 2))
    assert len(d.correct_key.subset(Partition.KC)) == 3
    assert d.seed == 4
    assert kc_identifiable(d, (1, 2), invertible=[q for q in d.netlist.dffs if q.startswith("ro")])


def test_census_pipeline_is_clean():
    d = census_pipeline(4, 3)
    assert d.n_locked == 4
    assert closed_form_applies(d) == []
    assert d.chains[-1].order == ("ro0", "ro1", "ro2", "ro3")
    assert d.locked_ffs() == ["ro3", "ro2", "ro1", "ro0"]


# -- exhaustive engine -----------------------------------------------------------

@pytest.mark.parametrize("npat, start", [(8, 8), (64, 0), (256, 512)])
def test_var_words_bits(npat, start):
    for i in range(10):
        bits = unpack(var_words(i, start, npat), npat)
        assert list(bits) == [bool(((start + g) >> i) & 1) for g in range(npat)]


def brute_key_match(test, ref, data, keys, invertible=()):
    """Per key index, does every output match (or, if invertible, mismatch) everywhere?"""
    res = np.zeros(2 ** len(keys), dtype=bool)
    for idx in range(2 ** len(keys)):
        kv = {k: (idx >> j) & 1 for j, k in enumerate(keys)}
        ok = True
        for pos, (a, b) in enumerate(zip(test.outputs, ref.outputs)):
            diffs = set()
            for dbits in itertools.product((0, 1), repeat=len(data)):
                env = dict(zip(data, dbits))
                ta = ref_eval(test, {**env, **kv})[a]
                rb = ref_eval(ref, env)[b]
                diffs.add(ta != rb)
            ok &= diffs == {False} or (pos in invertible and diffs == {True})
        res[idx] = ok
    return res


def test_key_match_simple():
    test = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(k0)\nINPUT(k1)\nOUTPUT(y)\nOUTPUT(z)\n"
                       "t = XOR(a, k0)\ny = AND(t, b)\nz = XNOR(b, k1)\n")
    ref = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\nOUTPUT(z)\ny = AND(a, b)\nz = BUF(b)\n")
    got = key_match(test, ref, ["a", "b"], ["k0", "k1"])
    assert list(got) == [False, False, True, False]  # only k0=0, k1=1
    inv = key_match(test, ref, ["a", "b"], ["k0", "k1"], invertible=[1])
    assert list(inv) == [True, False, True, False]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_key_match_against_brute_force(seed):
    rng = random.Random(seed)
    ref = random_comb(rng, 4, 10, n_out=2, prefix="d")
    # locked copy: XOR a key into two random internal nets
    gates = dict(ref.gates)
    nets = rng.sample(list(gates), min(2, len(gates)))
    keys = []
    for j, net in enumerate(nets):
        k = f"k{j}"
        keys.append(k)
        g = gates.pop(net)
        gates[f"{net}_raw"] = g
        gates[net] = Gate(rng.choice((GateKind.XOR, GateKind.XNOR)), (f"{net}_raw", k))
    test = Netlist((*ref.inputs, *keys), ref.outputs, gates, "locked")
    data = list(ref.inputs)
    inv = [0] if rng.random() < 0.5 else []
    assert list(key_match(test, ref, data, keys, inv)) == list(brute_key_match(test, ref, data, keys, inv))


def test_key_match_rejects_keyed_reference():
    n = parse_bench("INPUT(a)\nINPUT(k)\nOUTPUT(y)\ny = XOR(a, k)\n")
    with pytest.raises(ValueError):
        key_match(n, n, ["a"], ["k"])


def test_support_follows_cones():
    n = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(y)\nOUTPUT(z)\ny = NOT(a)\nz = AND(b, b)\n")
    assert support(n) == ["a", "b"]
    assert support(n, ["z"]) == ["b"]
