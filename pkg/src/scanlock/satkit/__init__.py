"""CNF encoding, a CDCL solver and equivalence checking."""
from .cnf import CnfBuilder, CnfError, CnfFormula, parse_dimacs, to_dimacs, tseitin
from .equivalence import (Equivalence, EquivalenceResult, SignatureError, build_miter,
                          check_equivalence, encode_miter)
from .solver import SolveOutcome, Solver, Status, solve

__all__ = [
    "CnfBuilder", "CnfError", "CnfFormula", "parse_dimacs", "to_dimacs", "tseitin",
    "Equivalence", "EquivalenceResult", "SignatureError", "build_miter", "check_equivalence",
    "encode_miter", "SolveOutcome", "Solver", "Status", "solve",
]
