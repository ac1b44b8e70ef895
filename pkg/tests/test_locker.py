import random

import pytest
from hypothesis import given, settings, strategies as st

from scanlock.circuits import fig2a, random_base_circuit, random_pipeline, pipeline_chain
from scanlock.locker import (BudgetExhausted, KeyVector, LockingError, Partition, as_design, ibla, ikpa,
                             key_gates, load_design, lock_candidates, lock_eff,
                             lock_random, lock_seql, lock_seql_ff, overhead_report, parse_key,
                             restitch, serialize_key)
from scanlock.netcore import GateKind, NetlistError, comb_view, parse_bench, serialize_bench, simulate
from scanlock.scanmodel import LockKind, Polarity, ScanChain
from scanlock.satkit import check_equivalence
from scanlock.unroller import apply_key


def test_eff_structure(eff_fig2):
    n = eff_fig2.netlist
    assert n.gates["G_3_fo"].kind is GateKind.XOR and n.gates["G_3_fo"].fanins == ("G_3", "fok_0")
    assert n.gates["G_5_fo"].kind is GateKind.XNOR
    # every reader of G_3 now reads the key gate
    assert n.gates["G_4"].fanins == ("G_3_fo", "G_1")
    assert n.gates["G_6"].fanins == ("G_3_fo", "G_5_fo")
    assert eff_fig2.correct_key.bits == {"fok_0": 0, "fok_1": 1}
    assert eff_fig2.correct_key.subset(Partition.KFO) == {"fok_0": 0, "fok_1": 1}
    assert eff_fig2.locked_ffs(LockKind.EFF) == ["G_5", "G_3"]


def test_seql_structure(seql_fig2c):
    d = seql_fig2c
    n = d.netlist
    assert n.dffs["G_9"] == "G_9_fi" and n.gates["G_9_fi"].fanins == ("G_8", "fik_1")
    assert n.gates["G_9_sq"].kind is GateKind.XNOR and n.gates["G_9_sq"].fanins == ("G_9", "sqk_1")
    assert n.gates["G_7_sq"].kind is GateKind.XOR
    # the SQ output is scan-only: nothing functional reads it
    assert not n.fanouts["G_9_sq"] and "G_9_sq" not in n.outputs
    assert [c.order for c in d.chains] == [("G_3", "G_5"), ("G_7", "G_9")]
    assert (d.chains[1].si_port, d.chains[1].so_port) == ("SI_WOF", "SO_WOF")
    assert d.locked_ffs() == ["G_9", "G_7"]
    assert d.correct_key.bits == {"fik_1": 0, "sqk_1": 1, "fik_0": 0, "sqk_0": 0}


@pytest.mark.parametrize("make", ["eff", "seql"])
def test_correct_key_restores_function(make, eff_fig2, seql_fig2c):
    d = eff_fig2 if make == "eff" else seql_fig2c
    locked = comb_view(apply_key(d, d.correct_key), d.original.dffs)
    assert check_equivalence(locked, comb_view(d.original)).equivalent


def test_seql_refuses_feedback_ffs(fig2a_pair):
    n, chains = fig2a_pair
    with pytest.raises(LockingError, match="feedback"):
        lock_seql_ff(n, "G_3", Polarity.XOR, Polarity.XOR, chains=chains)


def test_double_lock_rejected(seql_fig2c, eff_fig2):
    with pytest.raises(LockingError):
        lock_seql_ff(seql_fig2c, "G_9", Polarity.XOR, Polarity.XOR)
    with pytest.raises(LockingError):
        lock_eff(eff_fig2, None, ["G_3"])


def test_restitch_order():
    chains = (ScanChain(("a", "b", "c", "d")),)
    c1 = restitch(chains, "d")
    c2 = restitch(c1, "c")
    assert c2 == (ScanChain(("a", "b")), ScanChain(("c", "d"), "SI_WOF", "SO_WOF"))
    assert restitch(c2, "c") == c2


def test_lock_candidates_nearest_so_first(fig2a_pair):
    n, chains = fig2a_pair
    assert lock_candidates(as_design(n, chains)) == ["G_9", "G_7"]


def test_key_file_round_trip(seql_fig2c):
    text = serialize_key(seql_fig2c.correct_key)
    assert "sqk_1 1 Ksq XNOR\n" in text
    assert parse_key(text) == seql_fig2c.correct_key


@pytest.mark.parametrize("text", ["k 2 Kc XOR\n", "k 1 Kx XOR\n", "k 1 Kc\n", "k 0 Kc XOR\nk 1 Kc XOR\n"])
def test_key_file_errors(text):
    with pytest.raises(LockingError):
        parse_key(text)


def test_keyvector_helpers(seql_fig2c):
    k = seql_fig2c.correct_key
    assert k.inversion("sqk_1") == 0
    assert k.with_bits({**k.bits, "sqk_1": 0}).inversion("sqk_1") == 1
    assert k.without(["fik_0"]).names == ("fik_1", "sqk_1", "sqk_0")
    with pytest.raises(LockingError):
        k.with_bits({"fik_1": 0})
    with pytest.raises(LockingError):
        KeyVector({"a": 1}, {}, {})


def test_infer_styles_and_load_round_trip(seql_fig2c, eff_fig2):
    for d in (seql_fig2c, eff_fig2):
        text = serialize_bench(d.netlist)
        again = load_design(parse_bench(text, d.netlist.name), parse_key(serialize_key(d.correct_key)),
                            d.chains)
        assert again.styles == d.styles
        assert check_equivalence(comb_view(again.original), comb_view(d.original)).equivalent


def test_load_design_unknown_key(fig2a_pair):
    n, _ = fig2a_pair
    key = parse_key("nope 0 Kc XOR\n")
    with pytest.raises(NetlistError):
        load_design(n, key)


def test_lock_random_preserves_function_with_correct_key():
    n = random_pipeline(3)
    d = lock_random(n, 4, seed=2, chains=pipeline_chain(n))
    assert len(d.correct_key.subset(Partition.KC)) == 4
    assert len(key_gates(d.netlist, d.key_names)) == 4
    locked = comb_view(apply_key(d, d.correct_key))
    assert check_equivalence(locked, comb_view(n)).equivalent


def test_overhead_fig2c(seql_fig2c):
    rep = overhead_report(seql_fig2c)
    assert (rep.key_gate_count, rep.gate_count) == (4, 4)
    assert rep.percent == 100.0


def test_ibla_budget_exhausted(fig2a_pair):
    n, chains = fig2a_pair
    with pytest.raises(BudgetExhausted):
        ibla(n, chains, gamma=0.05)


def test_ibla_locks_fig2a():
    n, chains = fig2a()
    d = ibla(n, chains, gamma=1.0, seed=0)
    assert d.n_locked >= 1 and d.corrupted in (True, False)
    assert d.history and d.history[0][0] == "G_9"


def test_ibla_corrupts_base_circuit():
    base = random_base_circuit(0)
    d = ibla(base, gamma=0.5, seed=0)
    assert d.corrupted is True
    assert all(v == "RESILIENT" for v in d.history[-1][1])
    assert d.correct_key.subset(Partition.KC) == base.correct_key.subset(Partition.KC)


def test_ikpa_keeps_key_size():
    base = random_base_circuit(1)
    d = ikpa(base, seed=1)
    assert len(d.key_names) == len(base.key_names)
    assert d.n_locked == len(d.history)
    # the correct key still restores the original function
    locked = comb_view(apply_key(d, d.correct_key), d.original.dffs)
    assert check_equivalence(locked, comb_view(d.original)).equivalent


def test_ikpa_needs_kc(fig2a_pair):
    n, chains = fig2a_pair
    with pytest.raises(LockingError):
        ikpa(as_design(n, chains))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 5), st.integers(1, 4), st.data())
def test_identity_key_always_restores_function(seed, n_locks, data):
    n = random_pipeline(seed, n_out=4)
    ros = [q for q in n.dffs if q.startswith("ro")]
    ffs = data.draw(st.permutations(ros))[:n_locks]
    for d in (lock_seql(n, pipeline_chain(n), ffs, seed=seed), lock_eff(n, pipeline_chain(n), ffs, seed=seed)):
        rng = random.Random(seed)
        for _ in range(8):
            env = {p: rng.getrandbits(1) for p in n.inputs}
            state = {q: rng.getrandbits(1) for q in n.dffs}
            po, nxt = simulate(n, env, state)
            po2, nxt2 = simulate(d.netlist, {**env, **d.correct_key.bits}, state)
            # EFF renames outputs it rewires, so compare them by position
            assert list(po.values()) == list(po2.values()) and nxt == nxt2


def test_fi_bit_affects_only_its_ff(seql_fig2c):
    # flipping a lone FI bit changes the captured value of its flip-flop
    d = seql_fig2c
    state = {"G_3": 1, "G_5": 1, "G_7": 0, "G_9": 0}
    for k in ("fik_0", "fik_1"):
        bits = {**d.correct_key.bits, k: 1 - d.correct_key[k]}
        base = simulate(d.netlist, {"G_0": 0, "G_1": 0, **d.correct_key.bits}, state)[1]
        flipped = simulate(d.netlist, {"G_0": 0, "G_1": 0, **bits}, state)[1]
        changed = {q for q in base if base[q] != flipped[q]}
        assert changed == {"G_7" if k == "fik_0" else "G_9"}


def test_eff_rejects_unknown_ff(fig2a_pair):
    n, chains = fig2a_pair
    with pytest.raises(LockingError):
        lock_eff(n, chains, ["G_2"])
    with pytest.raises(LockingError):
        lock_eff(n, chains, [])


def test_unique_key_names():
    n = random_pipeline(4)
    d = lock_seql(n, pipeline_chain(n), ["ro3", "ro2"], seed=1)
    d = lock_random(d, 2, seed=1)
    assert len(set(d.key_names)) == 6
    assert all(k.startswith("keyinput") for k in d.key_names)
    assert not d.history
