import random

import pytest
from hypothesis import given, settings, strategies as st

from scanlock.circuits import census_pipeline, random_base_circuit
from scanlock.locker import LockingError, Partition
from scanlock.netcore import GateKind, simulate
from scanlock.satkit import check_equivalence
from scanlock.scanmodel import locked_scan_session
from scanlock.unroller import apply_key, oracle_instance, unroll

from conftest import ref_eval


def test_fig2c_interface(seql_fig2c):
    inst = unroll(seql_fig2c)
    assert inst.stream == ("G_5", "G_3", "G_9", "G_7")
    assert inst.comb.inputs == ("si_G_5", "si_G_3", "si_G_9", "si_G_7", "fik_1", "sqk_1", "fik_0", "sqk_0")
    assert inst.comb.outputs == ("so_G_5", "so_G_3", "so_G_9", "so_G_7")
    assert inst.key_names == ("fik_1", "sqk_1", "fik_0", "sqk_0")
    assert inst.comb.is_combinational()


def test_fig2c_load_and_observe_gates(seql_fig2c):
    g = unroll(seql_fig2c).comb.gates
    # G_7 is observed through both SQ gates; G_9's loaded value feeds no logic,
    # so its load gate is swept as dead
    assert "ld_G_9_0" not in g
    assert g["ob_G_7_0"].fanins[1] == "sqk_0" and g["ob_G_7_1"].fanins == ("ob_G_7_0", "sqk_1")
    assert g["ob_G_7_1"].kind is GateKind.XNOR
    assert not any(n.endswith("_sq") for n in g)


def test_tied_inputs_fold_away(eff_fig2):
    inst = unroll(eff_fig2, 2)
    assert not any(i.startswith("pi_") for i in inst.comb.inputs)
    exposed = unroll(eff_fig2, 2, expose_pis=True)
    assert {"pi_0_G_0", "pi_1_G_1"} <= set(exposed.comb.inputs)
    assert exposed.data_inputs[:4] == ("si_G_9", "si_G_7", "si_G_5", "si_G_3")


def test_correct_key_matches_oracle_instance(eff_fig2, seql_fig2c):
    for d in (eff_fig2, seql_fig2c):
        for n in (1, 3):
            inst = unroll(d, n)
            assert check_equivalence(apply_key(inst, d.correct_key), oracle_instance(inst).comb).equivalent


def test_oracle_instance_matches_query(seql_fig2c):
    inst = unroll(seql_fig2c, 2, expose_pis=True)
    ref = oracle_instance(inst)
    assert not set(ref.comb.inputs) & set(seql_fig2c.key_names)
    rng = random.Random(0)
    for _ in range(20):
        x = {i: rng.getrandbits(1) for i in inst.data_inputs}
        po, _ = simulate(ref.comb, x)
        assert po == inst.query_oracle(x)


def test_apply_key_validation(seql_fig2c):
    inst = unroll(seql_fig2c)
    with pytest.raises(LockingError):
        apply_key(inst, {"fik_1": 0})
    partial = apply_key(inst, seql_fig2c.correct_key, subset=[Partition.KFI])
    assert {"sqk_1", "sqk_0"} <= set(partial.inputs)
    assert not {"fik_1", "fik_0"} & set(partial.inputs)


def test_zero_cycles_rejected(seql_fig2c):
    with pytest.raises(LockingError):
        unroll(seql_fig2c, 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 500), st.integers(1, 4), st.integers(1, 3), st.booleans(), st.data())
def test_instance_equals_clocked_scan_session(seed, n_locked, cycles, expose, data):
    d = census_pipeline(n_locked, seed)
    inst = unroll(d, cycles, expose_pis=expose)
    rng = random.Random(data.draw(st.integers(0, 2 ** 32)))
    key = {k: rng.getrandbits(1) for k in d.key_names}
    scan_in = {ff: rng.getrandbits(1) for ff in inst.stream}
    pis = None
    env = {si: scan_in[ff] for ff, (si, _) in inst.ff_map.items()} | key
    if expose:
        pis = [{p: rng.getrandbits(1) for p in d.original.inputs} for _ in range(cycles)]
        env |= {f"pi_{c}_{p}": v for c, vec in enumerate(pis) for p, v in vec.items()}
    got = ref_eval(inst.comb, {i: env[i] for i in inst.comb.inputs})
    want = locked_scan_session(d.netlist, d.chains, d.styles, key, scan_in, pis, cycles)
    assert {ff: got[so] for ff, (_, so) in inst.ff_map.items()} == want


def test_kc_keys_are_shared_across_copies():
    base = random_base_circuit(2, n_kc=2)
    # with tied inputs the registers go constant and K_c gates fold to wires
    inst = unroll(base, 3, expose_pis=True)
    kc = list(base.correct_key.subset(Partition.KC))
    assert set(kc) <= set(inst.comb.inputs)
    readers = {n.split("_", 1)[0] for n, g in inst.comb.gates.items() if set(kc) & set(g.fanins)}
    # output-register cones of earlier copies are overwritten, hence dead
    assert "c2" in readers and readers <= {"c0", "c1", "c2"}
