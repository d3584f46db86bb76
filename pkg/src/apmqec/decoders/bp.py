"""Tier 1: flooding belief propagation on the detector/mechanism graph."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .problem import DecodeOutcome, DecodingProblem

CLAMP = 20.0


@dataclass(frozen=True)
class BpConfig:
    max_iters: int = 200
    min_sum: bool = False
    ms_scaling: float = 1.0

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if not 0 < self.ms_scaling <= 1:
            raise ValueError("ms_scaling must lie in (0, 1]")


@numba.njit(cache=True)
def _syndrome_ok(chk_ptr, chk_var, hard, syndrome):
    for c in range(chk_ptr.size - 1):
        par = syndrome[c]
        for e in range(chk_ptr[c], chk_ptr[c + 1]):
            par ^= hard[chk_var[e]]
        if par:
            return False
    return True


@numba.njit(cache=True)
def bp_kernel(chk_ptr, chk_var, var_ptr, var_edge, llr0, syndrome, max_iters,
              min_sum, ms_scaling, gamma, marg, hard):
    """Run memory-augmented flooding BP.

    ``marg`` carries the memory in and the final posteriors out; with
    ``gamma = 0`` this is plain BP. Each iteration the variable bias is
    ``(1 - gamma) * llr0 + gamma * marg``. Returns ``(converged, iterations)``.
    """
    nv = llr0.size
    nc = chk_ptr.size - 1
    ne = chk_var.size
    v2c = np.empty(ne)
    c2v = np.zeros(ne)
    bias = np.empty(nv)
    for j in range(nv):
        hard[j] = 1 if marg[j] < 0 else 0
    if _syndrome_ok(chk_ptr, chk_var, hard, syndrome):
        return True, 0
    for it in range(1, max_iters + 1):
        for j in range(nv):
            bias[j] = (1.0 - gamma[j]) * llr0[j] + gamma[j] * marg[j]
            total = bias[j]
            for t in range(var_ptr[j], var_ptr[j + 1]):
                total += c2v[var_edge[t]]
            for t in range(var_ptr[j], var_ptr[j + 1]):
                e = var_edge[t]
                v2c[e] = total - c2v[e]
        for c in range(nc):
            lo, hi = chk_ptr[c], chk_ptr[c + 1]
            if hi == lo:
                continue
            sgn0 = -1.0 if syndrome[c] else 1.0
            if min_sum:
                m1 = np.inf
                m2 = np.inf
                arg = -1
                neg = 0
                for e in range(lo, hi):
                    x = v2c[e]
                    if x < 0:
                        neg ^= 1
                        x = -x
                    if x < m1:
                        m2 = m1
                        m1 = x
                        arg = e
                    elif x < m2:
                        m2 = x
                for e in range(lo, hi):
                    mag = m2 if e == arg else m1
                    s = sgn0 * (-1.0 if neg else 1.0)
                    if v2c[e] < 0:
                        s = -s
                    val = s * ms_scaling * mag
                    c2v[e] = min(CLAMP, max(-CLAMP, val))
            else:
                # exclusive products of tanh(v2c/2) by a prefix pass
                prod = 1.0
                for e in range(lo, hi):
                    c2v[e] = prod
                    prod *= np.tanh(0.5 * v2c[e])
                prod = sgn0
                for e in range(hi - 1, lo - 1, -1):
                    t = c2v[e] * prod
                    prod *= np.tanh(0.5 * v2c[e])
                    if t > 1.0 - 1e-15:
                        t = 1.0 - 1e-15
                    elif t < -1.0 + 1e-15:
                        t = -1.0 + 1e-15
                    val = 2.0 * np.arctanh(t)
                    c2v[e] = min(CLAMP, max(-CLAMP, val))
        for j in range(nv):
            total = bias[j]
            for t in range(var_ptr[j], var_ptr[j + 1]):
                total += c2v[var_edge[t]]
            marg[j] = total
            hard[j] = 1 if total < 0 else 0
        if _syndrome_ok(chk_ptr, chk_var, hard, syndrome):
            return True, it
    return False, max_iters


def run_bp(problem: DecodingProblem, syndrome, max_iters: int, min_sum: bool,
           ms_scaling: float, gamma: np.ndarray, marginals: np.ndarray):
    """Thin wrapper over :func:`bp_kernel`; returns ``(hard, marginals, converged, iters)``."""
    chk_ptr, chk_var, var_ptr, var_edge = problem.graph
    marg = np.array(marginals, dtype=np.float64, copy=True)
    hard = np.zeros(problem.n_mechanisms, dtype=np.uint8)
    ok, it = bp_kernel(chk_ptr, chk_var, var_ptr, var_edge, problem.llr,
                       syndrome.astype(np.uint8), int(max_iters), bool(min_sum),
                       float(ms_scaling), np.asarray(gamma, dtype=np.float64), marg, hard)
    return hard, marg, bool(ok), int(it)


def bp_decode(problem: DecodingProblem, syndrome, config: BpConfig = BpConfig(),
              return_marginals: bool = False):
    """Tier-1 decode. Converged means the hard decision reproduces the syndrome."""
    s = problem.check_syndrome(syndrome)
    gamma = np.zeros(problem.n_mechanisms)
    hard, marg, ok, it = run_bp(problem, s, config.max_iters, config.min_sum,
                                config.ms_scaling, gamma, problem.llr)
    out = DecodeOutcome(hard, ok, 1, it)
    return (out, marg) if return_marginals else out
