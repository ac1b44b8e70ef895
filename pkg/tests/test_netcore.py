import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scanlock.netcore import (BenchSyntaxError, Gate, GateKind, Netlist, NetlistError, SimulationError,
                              classify_feedback, comb_view, ff_dependency_graph, parse_bench,
                              propagate_constants, remove_dead_logic, serialize_bench, simulate,
                              simulate_packed)

from conftest import random_comb, ref_eval


def test_fig2a_parses(fig2a_pair):
    n, chains = fig2a_pair
    assert n.inputs == ("G_0", "G_1")
    assert list(n.outputs) == ["G_7", "G_9"]
    assert n.dffs == {"G_3": "G_2", "G_5": "G_4", "G_7": "G_6", "G_9": "G_8"}
    assert n.comb_gate_count() == 4
    assert chains[0].order == ("G_3", "G_5", "G_7", "G_9")


def test_fig2a_feedback_classes(fig2a_pair):
    n, _ = fig2a_pair
    info = {f.ff_net: f.has_feedback for f in classify_feedback(n)}
    assert info == {"G_3": True, "G_5": True, "G_7": False, "G_9": False}


def test_dependency_graph_edges(fig2a_pair):
    g = ff_dependency_graph(fig2a_pair[0])
    assert set(g.edges) == {("G_5", "G_3"), ("G_3", "G_5"), ("G_3", "G_7"), ("G_5", "G_7"),
                            ("G_3", "G_9"), ("G_5", "G_9")}


def test_self_loop_counts_as_feedback():
    n = parse_bench("INPUT(a)\nOUTPUT(q)\nd = XOR(a, q)\nq = DFF(d)\n")
    assert classify_feedback(n)[0].has_feedback


def test_simulate_one_step(fig2a_pair):
    n, _ = fig2a_pair
    po, nxt = simulate(n, {"G_0": 1, "G_1": 0}, {"G_3": 1, "G_5": 0, "G_7": 1, "G_9": 0})
    assert po == {"G_7": 1, "G_9": 0}
    # G_2 = NAND(1, 0) = 1, G_4 = NOR(1, 0) = 0, G_6 = 1 ^ 0, G_8 = 1 & 0
    assert nxt == {"G_3": 1, "G_5": 0, "G_7": 1, "G_9": 0}


def test_simulate_matches_reference_exhaustively(fig2a_pair):
    n, _ = fig2a_pair
    names = [*n.inputs, *n.dffs]
    for bits in itertools.product((0, 1), repeat=len(names)):
        env = dict(zip(names, bits))
        po, nxt = simulate(n, env, env)
        ref = ref_eval(n, env)
        assert po == {o: ref[o] for o in n.outputs}
        assert nxt == {q: ref["next:" + q] for q in n.dffs}


def test_simulate_missing_values(fig2a_pair):
    n, _ = fig2a_pair
    with pytest.raises(SimulationError):
        simulate(n, {"G_0": 0}, {})
    with pytest.raises(SimulationError):
        simulate(n, {"G_0": 0, "G_1": 0}, {"G_3": 0})


def test_mux_and_constants():
    n = parse_bench("INPUT(s)\nINPUT(a)\nINPUT(b)\nOUTPUT(y)\nOUTPUT(z)\nOUTPUT(o)\n"
                    "y = MUX(s, a, b)\nz = CONST1()\no = CONST0()\n")
    assert simulate(n, {"s": 0, "a": 1, "b": 0})[0] == {"y": 1, "z": 1, "o": 0}
    assert simulate(n, {"s": 1, "a": 1, "b": 0})[0]["y"] == 0


# -- parser errors ---------------------------------------------------------------

@pytest.mark.parametrize("text, needle, line", [
    ("INPUT(a)\nOUTPUT(y)\ny = FOO(a)\n", "unknown gate kind", 3),
    ("INPUT(a)\nOUTPUT(y)\ny = AND(a, b)\n", "undefined", 3),
    ("INPUT(a)\nINPUT(a)\n", "duplicate", 2),
    ("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\ny = BUF(a)\n", "duplicate", 4),
    ("INPUT(a)\nOUTPUT(y)\ny = NOT(a, a)\n", "", 3),
    ("INPUT(a)\ny == AND(a)\n", "cannot parse", 2),
])
def test_parse_errors_carry_line_numbers(text, needle, line):
    with pytest.raises(BenchSyntaxError) as exc:
        parse_bench(text)
    assert needle in str(exc.value)
    assert exc.value.lineno == line


def test_undriven_output():
    with pytest.raises(NetlistError):
        parse_bench("INPUT(a)\nOUTPUT(y)\n")


def test_combinational_cycle_rejected():
    with pytest.raises(NetlistError, match="cycle"):
        parse_bench("INPUT(a)\nOUTPUT(x)\nx = AND(a, y)\ny = NOT(x)\n")


def test_cycle_through_dff_is_fine():
    n = parse_bench("INPUT(a)\nOUTPUT(x)\nx = AND(a, q)\nq = DFF(x)\n")
    assert n.dffs == {"q": "x"}


def test_keywords_case_insensitive_and_comments():
    n = parse_bench("# hi\ninput(a)  # trailing\noutput(y)\ny = nand(a, a)\n")
    assert n.gates["y"].kind is GateKind.NAND


def test_gate_arity_checked_by_netlist():
    with pytest.raises(NetlistError):
        Netlist(["a", "b"], ["q"], {"q": Gate(GateKind.DFF, ("a", "b"))})


# -- round trip / views ----------------------------------------------------------

def test_round_trip_fig2a(fig2a_pair):
    n, _ = fig2a_pair
    again = parse_bench(serialize_bench(n), n.name)
    assert again == n
    assert list(again.gates) == list(n.gates)


def test_comb_view_orders_outputs(fig2a_pair):
    n, _ = fig2a_pair
    v = comb_view(n, ["G_9", "G_3", "G_5", "G_7"])
    assert list(v.outputs) == ["G_7", "G_9", "G_8", "G_2", "G_4", "G_6"]
    assert v.is_combinational()
    assert set(v.inputs) == {"G_0", "G_1", "G_3", "G_5", "G_7", "G_9"}


def test_simulate_packed_matches_scalar():
    rng = random.Random(3)
    n = random_comb(rng, 6, 40, n_out=4)
    words = {i: np.array([rng.getrandbits(64)], dtype=np.uint64) for i in n.inputs}
    vals = simulate_packed(n, words, 1)
    for bit in range(0, 64, 7):
        env = {i: int(w[0] >> np.uint64(bit)) & 1 for i, w in words.items()}
        ref = ref_eval(n, env)
        for o in n.outputs:
            assert int(vals[o][0] >> np.uint64(bit)) & 1 == ref[o]


def test_propagate_constants_example():
    n = parse_bench("INPUT(a)\nINPUT(k)\nOUTPUT(y)\nt = XOR(a, k)\ny = AND(t, a)\n")
    out = propagate_constants(n, {"k": 0})
    assert out.inputs == ("a",)
    assert out.gates["y"] == Gate(GateKind.AND, ("a", "a"))
    out1 = propagate_constants(n, {"k": 1})
    assert out1.gates["t"] == Gate(GateKind.NOT, ("a",))
    for a in (0, 1):
        assert simulate(out, {"a": a})[0]["y"] == a
        assert simulate(out1, {"a": a})[0]["y"] == 0


def test_propagate_constants_rejects_non_inputs(fig2a_pair):
    with pytest.raises(NetlistError):
        propagate_constants(fig2a_pair[0], {"G_2": 1})


def test_remove_dead_logic_drops_unread_gates():
    n = parse_bench("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\nz = BUF(a)\n")
    out = remove_dead_logic(n)
    assert "z" not in out.gates and "y" in out.gates


# -- properties ------------------------------------------------------------------

@st.composite
def comb_netlists(draw):
    seed = draw(st.integers(0, 10 ** 6))
    n_in = draw(st.integers(1, 6))
    n_gates = draw(st.integers(1, 25))
    return random_comb(random.Random(seed), n_in, n_gates, n_out=draw(st.integers(1, 3)))


@settings(max_examples=60, deadline=None)
@given(comb_netlists())
def test_roundtrip_preserves_structure(n):
    assert parse_bench(serialize_bench(n), n.name) == n


@settings(max_examples=60, deadline=None)
@given(comb_netlists(), st.data())
def test_simulate_agrees_with_reference(n, data):
    env = {i: data.draw(st.integers(0, 1)) for i in n.inputs}
    ref = ref_eval(n, env)
    assert simulate(n, env)[0] == {o: ref[o] for o in n.outputs}


@settings(max_examples=60, deadline=None)
@given(comb_netlists(), st.data())
def test_constant_propagation_preserves_function(n, data):
    fixed = {i: data.draw(st.integers(0, 1)) for i in n.inputs if data.draw(st.booleans())}
    simp = propagate_constants(n, fixed)
    assert list(simp.outputs) == list(n.outputs)
    for bits in itertools.product((0, 1), repeat=len(n.inputs)):
        env = dict(zip(n.inputs, bits))
        env.update(fixed)
        ref = ref_eval(n, env)
        assert simulate(simp, env)[0] == {o: ref[o] for o in n.outputs}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_feedback_ffs_lie_on_dependency_cycles(seed):
    from scanlock.circuits import random_pipeline
    n = random_pipeline(seed, n_fb=2, n_out=3)
    info = {f.ff_net: f.has_feedback for f in classify_feedback(n)}
    assert all(info[q] for q in ("fb0", "fb1"))
    assert not any(info[q] for q in n.dffs if q.startswith(("ri", "ro")))


def test_netlist_equality_ignores_nothing_structural():
    a = Netlist(["x"], ["y"], {"y": Gate(GateKind.NOT, ("x",))})
    b = Netlist(["x"], ["y"], {"y": Gate(GateKind.BUF, ("x",))})
    assert a != b
