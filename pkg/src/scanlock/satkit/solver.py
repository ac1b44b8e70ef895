"""A small incremental CDCL solver.

Literals are DIMACS-style non-zero ints.  Internally literal ``v`` is index
``2*v`` and ``-v`` is ``2*v + 1``.  The solver keeps learned clauses between
calls, so clauses may be added after a solve and the next solve continues from
there.
"""
from __future__ import annotations

import enum
import random
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class Status(enum.Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    TIMEOUT = "TIMEOUT"


@dataclass
class SolveOutcome:
    status: Status
    model: dict[int, bool] = field(default_factory=dict)
    conflicts: int = 0

    @property
    def sat(self) -> bool:
        return self.status is Status.SAT

    def value(self, lit: int) -> bool:
        v = self.model[abs(lit)]
        return v if lit > 0 else not v


def _luby(i: int) -> int:
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while True:
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        if i >= (1 << (k - 1)):
            i -= (1 << (k - 1)) - 1
        k -= 1
        while (1 << k) - 1 < i:
            k += 1


class Solver:
    def __init__(self, seed: int = 0, random_phase: bool = True):
        self.rng = random.Random(seed)
        self.random_phase = random_phase
        self.nvars = 0
        self.clauses: list[list[int] | None] = []
        self.learnt: list[bool] = []
        self.watches: list[list[int]] = [[], []]
        self.val: list[int] = [-1, -1]          # per literal index: 1 true, 0 false, -1 free
        self.level: list[int] = [0]
        self.reason: list[int] = [-1]
        self.activity: list[float] = [0.0]
        self.phase: list[int] = [0]
        self.heap: list[int] = []
        self.heap_pos: list[int] = [-1]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.var_inc = 1.0
        self.ok = True
        self.total_conflicts = 0
        self.n_learnt = 0
        self.max_learnt = 2000

    # -- variables & clauses ------------------------------------------------
    def new_var(self) -> int:
        self.nvars += 1
        v = self.nvars
        self.watches += [[], []]
        self.val += [-1, -1]
        self.level.append(0)
        self.reason.append(-1)
        self.activity.append(0.0)
        self.phase.append(self.rng.getrandbits(1) if self.random_phase else 1)
        self.heap_pos.append(-1)
        self._heap_insert(v)
        return v

    def ensure_vars(self, n: int) -> None:
        while self.nvars < n:
            self.new_var()

    @staticmethod
    def _idx(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    def add_clause(self, lits: Iterable[int]) -> bool:
        if not self.ok:
            return False
        if self.trail_lim:
            self._cancel_until(0)
        idx = set()
        for lit in lits:
            if lit == 0:
                raise ValueError("0 is not a literal")
            self.ensure_vars(abs(lit))
            idx.add(self._idx(lit))
        clause = []
        for li in idx:
            if li ^ 1 in idx:
                return True
            v = self.val[li]
            if v == 1:
                return True
            if v == -1:
                clause.append(li)
        if not clause:
            self.ok = False
            return False
        if len(clause) == 1:
            self._enqueue(clause[0], -1)
            if self._propagate() != -1:
                self.ok = False
            return self.ok
        self._attach(clause, learnt=False)
        return True

    def add_clauses(self, clauses: Iterable[Sequence[int]]) -> bool:
        for c in clauses:
            self.add_clause(c)
        return self.ok

    def _attach(self, clause: list[int], learnt: bool) -> int:
        cr = len(self.clauses)
        self.clauses.append(clause)
        self.learnt.append(learnt)
        self.watches[clause[0]].append(cr)
        self.watches[clause[1]].append(cr)
        return cr

    # -- heap ---------------------------------------------------------------------
    def _heap_insert(self, v: int):
        if self.heap_pos[v] >= 0:
            return
        self.heap.append(v)
        self.heap_pos[v] = len(self.heap) - 1
        self._sift_up(len(self.heap) - 1)

    def _sift_up(self, i: int):
        heap, pos, act = self.heap, self.heap_pos, self.activity
        v = heap[i]
        a = act[v]
        while i > 0:
            p = (i - 1) >> 1
            pv = heap[p]
            if act[pv] >= a:
                break
            heap[i] = pv
            pos[pv] = i
            i = p
        heap[i] = v
        pos[v] = i

    def _sift_down(self, i: int):
        heap, pos, act = self.heap, self.heap_pos, self.activity
        n = len(heap)
        v = heap[i]
        a = act[v]
        while True:
            c = 2 * i + 1
            if c >= n:
                break
            if c + 1 < n and act[heap[c + 1]] > act[heap[c]]:
                c += 1
            if act[heap[c]] <= a:
                break
            heap[i] = heap[c]
            pos[heap[c]] = i
            i = c
        heap[i] = v
        pos[v] = i

    def _heap_pop(self) -> int:
        heap, pos = self.heap, self.heap_pos
        v = heap[0]
        last = heap.pop()
        pos[v] = -1
        if heap:
            heap[0] = last
            pos[last] = 0
            self._sift_down(0)
        return v

    def _bump(self, v: int):
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for i in range(1, self.nvars + 1):
                self.activity[i] *= 1e-100
            self.var_inc *= 1e-100
        if self.heap_pos[v] >= 0:
            self._sift_up(self.heap_pos[v])

    # -- assignment -----------------------------------------------------------------
    def _enqueue(self, li: int, reason: int):
        v = li >> 1
        self.val[li] = 1
        self.val[li ^ 1] = 0
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(li)

    def _cancel_until(self, lvl: int):
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        val, phase = self.val, self.phase
        for li in reversed(self.trail[start:]):
            v = li >> 1
            val[li] = -1
            val[li ^ 1] = -1
            phase[v] = 1 - (li & 1)
            self.reason[v] = -1
            if self.heap_pos[v] < 0:
                self._heap_insert(v)
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = min(self.qhead, start)

    def _propagate(self) -> int:
        """Unit propagation; returns a conflicting clause index or -1."""
        val, watches, clauses, trail = self.val, self.watches, self.clauses, self.trail
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            false_lit = p ^ 1
            ws = watches[false_lit]
            i = j = 0
            n = len(ws)
            while i < n:
                cr = ws[i]
                i += 1
                c = clauses[cr]
                if c[0] == false_lit:
                    c[0] = c[1]
                    c[1] = false_lit
                first = c[0]
                if val[first] == 1:
                    ws[j] = cr
                    j += 1
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if val[lk] != 0:
                        c[1] = lk
                        c[k] = false_lit
                        watches[lk].append(cr)
                        break
                else:
                    ws[j] = cr
                    j += 1
                    if val[first] == 0:
                        while i < n:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        del ws[j:]
                        self.qhead = len(trail)
                        return cr
                    self._enqueue(first, cr)
            del ws[j:]
        return -1

    # -- conflict analysis ---------------------------------------------------------
    def _analyze(self, confl: int):
        seen = bytearray(self.nvars + 1)
        learnt = [0]
        level, reason, clauses = self.level, self.reason, self.clauses
        cur = len(self.trail_lim)
        counter = 0
        p = -1
        idx = len(self.trail) - 1
        while True:
            c = clauses[confl]
            for li in (c if p == -1 else c[1:]):
                v = li >> 1
                if not seen[v] and level[v] > 0:
                    seen[v] = 1
                    self._bump(v)
                    if level[v] >= cur:
                        counter += 1
                    else:
                        learnt.append(li)
            while not seen[self.trail[idx] >> 1]:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            confl = reason[p >> 1]
            seen[p >> 1] = 0
            counter -= 1
            if counter == 0:
                break
            # reason clauses keep the implied literal at position 0
            if clauses[confl][0] != p:
                c = clauses[confl]
                k = c.index(p)
                c[0], c[k] = c[k], c[0]
        learnt[0] = p ^ 1
        # local minimization: drop literals implied by others in the clause
        marks = {li >> 1 for li in learnt}
        out = [learnt[0]]
        for li in learnt[1:]:
            r = reason[li >> 1]
            if r == -1:
                out.append(li)
                continue
            if any((q >> 1) not in marks and level[q >> 1] > 0 for q in clauses[r] if q != li ^ 1):
                out.append(li)
        learnt = out
        if len(learnt) == 1:
            back = 0
        else:
            best = max(range(1, len(learnt)), key=lambda k: level[learnt[k] >> 1])
            learnt[1], learnt[best] = learnt[best], learnt[1]
            back = level[learnt[1] >> 1]
        return learnt, back

    def _reduce_db(self):
        locked = {self.reason[li >> 1] for li in self.trail}
        cands = [cr for cr, c in enumerate(self.clauses)
                 if c is not None and self.learnt[cr] and len(c) > 2 and cr not in locked]
        cands.sort(key=lambda cr: len(self.clauses[cr]), reverse=True)
        for cr in cands[: len(cands) // 2]:
            self.clauses[cr] = None
            self.n_learnt -= 1
        for ws in self.watches:
            ws[:] = [cr for cr in ws if self.clauses[cr] is not None]

    # -- search ---------------------------------------------------------------------
    def solve(self, assumptions: Sequence[int] = (), time_limit: float | None = None,
              conflict_limit: int | None = None) -> SolveOutcome:
        if not self.ok:
            return SolveOutcome(Status.UNSAT)
        for lit in assumptions:
            self.ensure_vars(abs(lit))
        assume = [self._idx(l) for l in assumptions]
        deadline = None if time_limit is None else time.monotonic() + time_limit
        conflicts = 0
        restart_no = 1
        budget = 100 * _luby(restart_no)
        since_restart = 0
        self._cancel_until(0)
        if self._propagate() != -1:
            self.ok = False
            return SolveOutcome(Status.UNSAT)
        while True:
            confl = self._propagate()
            if confl != -1:
                conflicts += 1
                self.total_conflicts += 1
                since_restart += 1
                if not self.trail_lim:
                    self.ok = False
                    return SolveOutcome(Status.UNSAT, conflicts=conflicts)
                learnt, back = self._analyze(confl)
                self._cancel_until(back)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], -1)
                else:
                    cr = self._attach(learnt, learnt=True)
                    self.n_learnt += 1
                    self._enqueue(learnt[0], cr)
                self.var_inc *= 1.05
                if conflicts & 255 == 0 and deadline is not None and time.monotonic() > deadline:
                    self._cancel_until(0)
                    return SolveOutcome(Status.TIMEOUT, conflicts=conflicts)
                if conflict_limit is not None and conflicts >= conflict_limit:
                    self._cancel_until(0)
                    return SolveOutcome(Status.TIMEOUT, conflicts=conflicts)
                continue
            if since_restart >= budget:
                since_restart = 0
                restart_no += 1
                budget = 100 * _luby(restart_no)
                self._cancel_until(0)
                if self.n_learnt > self.max_learnt:
                    self._reduce_db()
                    self.max_learnt = int(self.max_learnt * 1.1)
                continue
            # assumptions first, one decision level each
            lvl = len(self.trail_lim)
            if lvl < len(assume):
                li = assume[lvl]
                v = self.val[li]
                if v == 0:
                    self._cancel_until(0)
                    return SolveOutcome(Status.UNSAT, conflicts=conflicts)
                self.trail_lim.append(len(self.trail))
                if v == -1:
                    self._enqueue(li, -1)
                continue
            var = 0
            while self.heap:
                cand = self._heap_pop()
                if self.val[2 * cand] == -1:
                    var = cand
                    break
            if var == 0:
                model = {v: self.val[2 * v] == 1 for v in range(1, self.nvars + 1)}
                self._cancel_until(0)
                return SolveOutcome(Status.SAT, model, conflicts)
            self.trail_lim.append(len(self.trail))
            self._enqueue(2 * var + (1 - self.phase[var]), -1)


def solve(num_vars: int, clauses: Iterable[Sequence[int]], assumptions: Sequence[int] = (),
          time_limit: float | None = 60.0, seed: int = 0) -> SolveOutcome:
    s = Solver(seed=seed)
    s.ensure_vars(num_vars)
    s.add_clauses(clauses)
    return s.solve(assumptions, time_limit=time_limit)
