"""Three-tier hierarchical decoding with per-tier failure accounting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bp import BpConfig, bp_decode
from .mle import MleBudget, mle_decode
from .problem import DecodeOutcome, DecodingProblem, logical_failure
from .relay import RelayConfig, relay_bp_decode


@dataclass(frozen=True)
class TierConfig:
    bp: BpConfig = BpConfig()
    relay: RelayConfig = RelayConfig()
    mle: MleBudget = MleBudget()
    tiers: int = 3

    def __post_init__(self):
        if self.tiers not in (1, 2, 3):
            raise ValueError("tiers must be 1, 2 or 3")


@dataclass
class TierStats:
    """Escalation fractions and logical-failure counts for a batch.

    ``failures[t]`` counts shots that fail when decoding stops after tier
    ``t`` (1, 2 or 3). A shot whose last tier did not converge counts as a
    failure, as does a converged correction with the wrong logical class.
    """

    shots: int = 0
    reached: list[int] = field(default_factory=lambda: [0, 0, 0])
    iterations: list[int] = field(default_factory=lambda: [0, 0, 0])
    failures: dict[int, int] = field(default_factory=lambda: {1: 0, 2: 0, 3: 0})

    @property
    def q(self) -> tuple[float, float, float]:
        if not self.shots:
            return (0.0, 0.0, 0.0)
        return tuple(r / self.shots for r in self.reached)

    @property
    def q2(self) -> float:
        return self.q[1]

    @property
    def q3(self) -> float:
        return self.q[2]

    def mean_iterations(self, tier: int) -> float:
        n = self.reached[tier - 1]
        return self.iterations[tier - 1] / n if n else 0.0

    def failure_rate(self, tier: int) -> float:
        return self.failures[tier] / self.shots if self.shots else 0.0

    def merge(self, other: TierStats) -> TierStats:
        return TierStats(self.shots + other.shots,
                         [a + b for a, b in zip(self.reached, other.reached)],
                         [a + b for a, b in zip(self.iterations, other.iterations)],
                         {t: self.failures[t] + other.failures[t] for t in (1, 2, 3)})

    def to_json(self) -> dict:
        return {"shots": self.shots, "q": list(self.q),
                "mean_iterations": [self.mean_iterations(t) for t in (1, 2, 3)],
                "failures": {str(t): v for t, v in self.failures.items()}}


def _check(problem: DecodingProblem, out: DecodeOutcome, s: np.ndarray) -> None:
    if out.converged and (problem.syndrome(out.correction) ^ s).any():
        raise AssertionError(f"tier {out.tier_used} reported convergence with a wrong syndrome")


def decode_shot(problem: DecodingProblem, syndrome, config: TierConfig, seed=None,
                observed: np.ndarray | None = None):
    """Decode one shot through the tiers.

    Returns the final outcome plus, when ``observed`` logical bits are
    given, a dict mapping tier -> failed-if-stopping-here.
    """
    s = problem.check_syndrome(syndrome)
    out, marg = bp_decode(problem, s, config.bp, return_marginals=True)
    _check(problem, out, s)
    trail = [out]
    if not out.converged and config.tiers >= 2:
        out = relay_bp_decode(problem, s, config.relay, init_marginals=marg, seed=seed)
        _check(problem, out, s)
        trail.append(out)
    if not out.converged and config.tiers >= 3:
        out = mle_decode(problem, s, config.mle)
        _check(problem, out, s)
        trail.append(out)
    verdict = None
    if observed is not None:
        verdict = {}
        for t in (1, 2, 3):
            last = trail[min(t, len(trail)) - 1]
            wrong = logical_failure(last.correction, observed, problem, truth_is_observable=True).any()
            verdict[t] = bool(wrong or not last.converged)
    return out, trail, verdict


def hierarchical_decode(problem: DecodingProblem, syndromes: np.ndarray,
                        observables: np.ndarray | None = None,
                        config: TierConfig = TierConfig(), seed: int = 0):
    """Decode a batch; returns ``(outcomes, stats)``.

    Relay legs for shot ``i`` draw from ``SeedSequence([seed, i])`` so
    results do not depend on batch composition.
    """
    syndromes = np.atleast_2d(np.asarray(syndromes, dtype=np.uint8))
    stats = TierStats()
    outcomes = []
    for i, s in enumerate(syndromes):
        obs = None if observables is None else observables[i]
        out, trail, verdict = decode_shot(problem, s, config,
                                          seed=np.random.SeedSequence([seed, i]), observed=obs)
        outcomes.append(out)
        stats.shots += 1
        for t, o in enumerate(trail):
            stats.reached[t] += 1
            stats.iterations[t] += o.iterations
        if verdict is not None:
            for t in (1, 2, 3):
                stats.failures[t] += verdict[t]
    return outcomes, stats
