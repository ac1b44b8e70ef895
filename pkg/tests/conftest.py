import operator
import random
from functools import reduce

import pytest

from scanlock.circuits import fig2_eff_design, fig2a, fig2c_seql_design
from scanlock.netcore import Gate, GateKind, Netlist

# -- independent reference evaluator ------------------------------------------------
#
# Written without touching netcore's evaluation code: recursive, memoised and
# defined through the operator module, so a bug in the library simulator does
# not also hide in the oracle.

_REF = {
    "AND": lambda v: reduce(operator.and_, v),
    "OR": lambda v: reduce(operator.or_, v),
    "NAND": lambda v: 1 - reduce(operator.and_, v),
    "NOR": lambda v: 1 - reduce(operator.or_, v),
    "XOR": lambda v: reduce(operator.xor, v),
    "XNOR": lambda v: 1 - reduce(operator.xor, v),
    "NOT": lambda v: 1 - v[0],
    "BUF": lambda v: v[0],
    "MUX": lambda v: v[1] if v[0] == 0 else v[2],
    "CONST0": lambda v: 0,
    "CONST1": lambda v: 1,
}


def ref_eval(netlist: Netlist, env: dict) -> dict:
    """Value of every output and every flip-flop's next state."""
    memo = dict(env)

    def value(net):
        if net in memo:
            return memo[net]
        g = netlist.gates[net]
        if g.kind is GateKind.DFF:
            raise KeyError(f"no state for {net}")
        out = _REF[g.kind.value]([value(f) for f in g.fanins])
        memo[net] = out
        return out

    res = {o: value(o) for o in netlist.outputs}
    for q, g in netlist.gates.items():
        if g.kind is GateKind.DFF:
            res["next:" + q] = value(g.fanins[0])
    return res


def random_comb(rng: random.Random, n_in: int, n_gates: int, n_out: int = 2, prefix="x") -> Netlist:
    """Random combinational netlist over inputs ``<prefix>0..``."""
    inputs = [f"{prefix}{i}" for i in range(n_in)]
    nets = list(inputs)
    gates = {}
    kinds = ["AND", "OR", "NAND", "NOR", "XOR", "XNOR", "NOT", "BUF", "MUX"]
    for j in range(n_gates):
        k = rng.choice(kinds)
        arity = {"NOT": 1, "BUF": 1, "MUX": 3}.get(k, rng.choice((2, 2, 3)))
        fanins = tuple(rng.choice(nets) for _ in range(arity))
        name = f"g{j}"
        gates[name] = Gate(GateKind[k], fanins)
        nets.append(name)
    outs = list(dict.fromkeys(nets[-n_out:])) if n_gates else inputs[:1]
    return Netlist(inputs, outs, gates, "rand")


@pytest.fixture
def fig2a_pair():
    return fig2a()


@pytest.fixture
def eff_fig2():
    return fig2_eff_design()


@pytest.fixture
def seql_fig2c():
    return fig2c_seql_design()


# -- acceptance summary ---------------------------------------------------------------

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def acceptance():
    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
