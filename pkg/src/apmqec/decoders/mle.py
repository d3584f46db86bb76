"""Tier 3: most-likely-error decoding.

Minimizes ``sum_i w_i e_i`` with ``w_i = log((1 - p_i) / p_i)`` subject to
``H e = s`` over GF(2). The reference solver is a branch-and-bound over
detector parities; a MILP backend (HiGHS through scipy) handles problems
too large for exhaustive branching.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, milp

from ..errors import InfeasibleSyndrome
from ..gf2 import solve
from .problem import DecodeOutcome, DecodingProblem

DENSE_SOLVE_LIMIT = 20_000_000


@dataclass(frozen=True)
class MleBudget:
    max_nodes: int = 1_000_000
    time_limit: float = 60.0
    weight_caps: tuple[float | None, ...] = (None,)
    backend: str = "bnb"

    def __post_init__(self):
        if self.max_nodes < 1 or self.time_limit <= 0:
            raise ValueError("budget must be positive")
        if self.backend not in ("bnb", "milp"):
            raise ValueError(f"unknown MLE backend {self.backend!r}")


class _OutOfBudget(Exception):
    pass


class _BranchAndBound:
    def __init__(self, problem: DecodingProblem, syndrome: np.ndarray, budget: MleBudget):
        n = problem.n_mechanisms
        p = problem.priors
        self.budget = budget
        self.deadline = time.monotonic() + budget.time_limit
        self.nodes = 0
        csc = problem.check.to_csr().tocsc()
        self.mech_dets = [csc.indices[csc.indptr[j]:csc.indptr[j + 1]] for j in range(n)]
        self.det_mechs = [problem.check.row(d) for d in range(problem.n_detectors)]
        # p >= 0.5 would give nonpositive weight: substitute e_i -> 1 - e_i
        self.flipped = p >= 0.5
        with np.errstate(divide="ignore"):
            w = np.log((1 - p) / p)
        self.weights = np.where(self.flipped, -w, w)
        self.offset = float(w[self.flipped & np.isfinite(w)].sum())
        self.residual = syndrome.astype(bool).copy()
        for j in np.flatnonzero(self.flipped):
            self.residual[self.mech_dets[j]] ^= True
        # p == 0 (or p == 1 after flipping) means the bit is fixed at 0
        self.state = np.where(np.isinf(self.weights), 0, -1).astype(np.int8)
        degs = np.array([d.size for d in self.mech_dets] + [1])
        self.max_deg = int(degs.max())
        finite = self.weights[np.isfinite(self.weights)]
        self.min_w = float(finite.min()) if finite.size else 0.0
        self.best = math.inf
        self.best_e: np.ndarray | None = None

    def seed_incumbent(self, e: np.ndarray) -> None:
        e = e.astype(bool) ^ self.flipped
        w = float(self.weights[e].sum())
        if w < self.best:
            self.best, self.best_e = w, e.copy()

    def lower_bound(self, weight: float, unresolved: int) -> float:
        return weight + math.ceil(unresolved / self.max_deg) * self.min_w

    def run(self, cap: float | None) -> bool:
        """Search all solutions of weight <= cap. Returns True if completed."""
        self.cap = math.inf if cap is None else cap
        try:
            self._branch(0.0, int(self.residual.sum()))
        except _OutOfBudget:
            return False
        return True

    def _branch(self, weight: float, unresolved: int) -> None:
        self.nodes += 1
        if self.nodes > self.budget.max_nodes or (
                self.nodes % 1024 == 0 and time.monotonic() > self.deadline):
            raise _OutOfBudget
        if unresolved == 0:
            if weight < self.best:
                self.best = weight
                self.best_e = self.state == 1
            return
        lb = self.lower_bound(weight, unresolved)
        if lb >= self.best or lb > self.cap:
            return
        # branch on the odd detector with the fewest open mechanisms
        pick, open_pick = -1, None
        for d in np.flatnonzero(self.residual):
            ms = self.det_mechs[d]
            op = ms[self.state[ms] == -1]
            if op.size == 0:
                return
            if open_pick is None or op.size < open_pick.size:
                pick, open_pick = d, op
                if op.size == 1:
                    break
        # branch k: the first open mechanism set to 1 is open_pick[k]
        for k, j in enumerate(open_pick):
            self.state[open_pick[:k]] = 0
            self.state[j] = 1
            dets = self.mech_dets[j]
            delta = int(np.count_nonzero(~self.residual[dets])) - int(np.count_nonzero(self.residual[dets]))
            self.residual[dets] ^= True
            self._branch(weight + self.weights[j], unresolved + delta)
            self.residual[dets] ^= True
            self.state[j] = -1
        self.state[open_pick] = -1


def mle_decode(problem: DecodingProblem, syndrome, budget: MleBudget = MleBudget()) -> DecodeOutcome:
    """Exact MLE when the search terminates within budget.

    The weight-cap schedule in ``budget`` runs the search repeatedly with
    growing caps (``None`` is uncapped); a completed pass whose optimum
    lies under its cap is globally optimal.
    """
    s = problem.check_syndrome(syndrome)
    if budget.backend == "milp":
        return mle_decode_milp(problem, s, budget.time_limit)
    n = problem.n_mechanisms
    if not s.any() and not np.any(problem.priors >= 0.5):
        return DecodeOutcome(np.zeros(n, dtype=np.uint8), True, 3, 0, 0.0)
    bnb = _BranchAndBound(problem, s, budget)
    if problem.n_detectors * n <= DENSE_SOLVE_LIMIT:
        usable = np.flatnonzero(problem.priors > 0)
        sub = problem.check.to_dense()[:, usable]
        try:
            e_sub = solve(sub, s)
        except InfeasibleSyndrome:
            raise InfeasibleSyndrome("syndrome has no explanation by mechanisms of nonzero prior") from None
        e = np.zeros(n, dtype=np.uint8)
        e[usable] = e_sub
        bnb.seed_incumbent(e)
    exact = False
    for cap in budget.weight_caps:
        done = bnb.run(cap)
        if not done:
            break
        if cap is None or bnb.best <= cap:
            exact = True
            break
    if bnb.best_e is None:
        if exact:
            raise InfeasibleSyndrome("syndrome has no explanation")
        return DecodeOutcome(np.zeros(n, dtype=np.uint8), False, 3, bnb.nodes)
    e = (bnb.best_e ^ bnb.flipped).astype(np.uint8)
    return DecodeOutcome(e, exact, 3, bnb.nodes, bnb.best + bnb.offset)


def mle_decode_milp(problem: DecodingProblem, syndrome, time_limit: float = 60.0) -> DecodeOutcome:
    """MLE as a mixed-integer program: ``H e - 2 z = s`` with binary ``e``."""
    s = problem.check_syndrome(syndrome).astype(np.float64)
    n, m = problem.n_mechanisms, problem.n_detectors
    p = problem.priors
    with np.errstate(divide="ignore"):
        w = np.log((1 - p) / p)
    lo = np.where(p >= 1, 1.0, 0.0)
    hi = np.where(p <= 0, 0.0, 1.0)
    w = np.where(np.isfinite(w), w, 0.0)
    deg = np.diff(problem.check.indptr)
    A = sp.hstack([problem.check.to_csr().astype(np.float64), sp.diags(-2.0 * np.ones(m))]).tocsr()
    c = np.concatenate([w, np.zeros(m)])
    bounds = Bounds(np.concatenate([lo, np.zeros(m)]), np.concatenate([hi, deg // 2]))
    res = milp(c, constraints=LinearConstraint(A, s, s), integrality=np.ones(n + m),
               bounds=bounds, options={"time_limit": time_limit, "disp": False})
    if res.x is None:
        if res.status == 2:
            raise InfeasibleSyndrome("syndrome has no explanation")
        return DecodeOutcome(np.zeros(n, dtype=np.uint8), False, 3, 0)
    e = np.round(res.x[:n]).astype(np.uint8)
    ok = res.status == 0 and not (problem.syndrome(e) ^ s.astype(np.uint8)).any()
    return DecodeOutcome(e, bool(ok), 3, 0, float(w @ e))
