"""Tier 2: relay BP, a chain of memory-BP legs with disordered memory strengths.

Each leg starts from the posteriors left by the previous one and draws a
fresh memory strength per mechanism. The first leg that reproduces the
syndrome ends the relay.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bp import run_bp
from .problem import DecodeOutcome, DecodingProblem


@dataclass(frozen=True)
class RelayConfig:
    legs: int = 30
    leg_iters: int = 60
    gamma_range: tuple[float, float] = (-0.25, 0.85)
    min_sum: bool = False
    ms_scaling: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.legs < 0 or self.leg_iters < 0:
            raise ValueError("legs and leg_iters must be >= 0")
        lo, hi = self.gamma_range
        if lo > hi:
            raise ValueError("gamma_range must be (low, high)")


def relay_bp_decode(problem: DecodingProblem, syndrome, config: RelayConfig = RelayConfig(),
                    init_marginals: np.ndarray | None = None,
                    seed: int | np.random.SeedSequence | None = None) -> DecodeOutcome:
    """Relay-BP decode; ``init_marginals`` typically come from a failed tier-1 run."""
    s = problem.check_syndrome(syndrome)
    n = problem.n_mechanisms
    if config.legs == 0:
        return DecodeOutcome(np.zeros(n, dtype=np.uint8), False, 2, 0)
    rng = np.random.default_rng(config.seed if seed is None else seed)
    marg = problem.llr if init_marginals is None else init_marginals
    total = 0
    hard = np.zeros(n, dtype=np.uint8)
    lo, hi = config.gamma_range
    for _ in range(config.legs):
        gamma = rng.uniform(lo, hi, size=n)
        hard, marg, ok, it = run_bp(problem, s, config.leg_iters, config.min_sum,
                                    config.ms_scaling, gamma, marg)
        total += it
        if ok:
            return DecodeOutcome(hard, True, 2, total)
    return DecodeOutcome(hard, False, 2, total)
