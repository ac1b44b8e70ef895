"""Scan locking with functional isolation, and the scan-unrolled SAT attack."""
from .attacker import AttackLimits, AttackReport, Verdict, double_dip_attack, sat_attack, verify_flow
from .kaglab import Kag, KeySpaceCensus, build_kag, census, truth_table
from .locker import (BudgetExhausted, KeyVector, LockedDesign, LockingError, Partition, ibla, ikpa,
                     lock_eff, lock_seql, lock_seql_ff, overhead_report)
from .macros import decompose_complex
from .netcore import GateKind, Netlist, classify_feedback, parse_bench, serialize_bench, simulate
from .scanmodel import FFLock, OracleConfig, Polarity, ScanChain, oracle_query, shift_semantics
from .unroller import AttackInstance, apply_key, unroll

__version__ = "0.1.0"

__all__ = [
    "AttackLimits", "AttackReport", "Verdict", "double_dip_attack", "sat_attack", "verify_flow",
    "Kag", "KeySpaceCensus", "build_kag", "census", "truth_table",
    "BudgetExhausted", "KeyVector", "LockedDesign", "LockingError", "Partition", "ibla", "ikpa",
    "lock_eff", "lock_seql", "lock_seql_ff", "overhead_report", "decompose_complex",
    "GateKind", "Netlist", "classify_feedback", "parse_bench", "serialize_bench", "simulate",
    "FFLock", "OracleConfig", "Polarity", "ScanChain", "oracle_query", "shift_semantics",
    "AttackInstance", "apply_key", "unroll",
]
