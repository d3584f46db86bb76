"""Decoder throughput arithmetic and logical-rate conversions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta

from ..errors import DomainError

# gross-code baseline: n = 144, window W = 12, data-qubit degree 6
BASELINE_NW = 144 * 12
BASELINE_ITER_NS = 24.0


@dataclass
class ThroughputModel:
    """Tier times ``t`` (seconds per syndrome round) and reach fractions ``q``.

    ``backlog_rounds`` is the number of rounds a tier-3 solve spans; when
    omitted it is derived from ``t3_solve`` and ``t_qec``.
    """

    t: tuple[float, ...]
    q: tuple[float, ...]
    n: int
    W: int
    delta: int = 6
    delta_ref: int = 6
    t_qec: float | None = None
    t3_solve: float | None = None
    backlog_rounds: int | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = tuple(float(x) for x in self.t)
        self.q = tuple(float(x) for x in self.q)
        if len(self.t) != len(self.q) or not self.q:
            raise DomainError("t and q must have one entry per tier")
        if self.q[0] != 1.0:
            raise DomainError("q_1 must be 1")
        if any(b > a for a, b in zip(self.q, self.q[1:])):
            raise DomainError("q must be nonincreasing")
        if any(x < 0 for x in self.t):
            raise DomainError("tier times must be nonnegative")

    @classmethod
    def from_json(cls, obj: dict) -> ThroughputModel:
        known = {"t", "q", "n", "W", "delta", "delta_ref", "t_qec", "t3_solve", "backlog_rounds"}
        missing = {"t", "q", "n", "W"} - obj.keys()
        if missing:
            raise DomainError(f"throughput model is missing field(s) {sorted(missing)}")
        return cls(**{k: v for k, v in obj.items() if k in known})

    def rounds_spanned(self) -> int | None:
        if self.backlog_rounds is not None:
            return int(self.backlog_rounds)
        if self.t3_solve is not None and self.t_qec:
            return math.ceil(self.t3_solve / self.t_qec)
        return None


def escalation_fractions(ratios) -> tuple[float, ...]:
    """``q_1 = 1`` and ``q_i`` = product of the first ``i - 1`` escalation ratios."""
    return tuple(np.concatenate([[1.0], np.cumprod(np.asarray(ratios, dtype=float))]))


def scale_factor(n: int, W: int, delta: int = 6, delta_ref: int = 6) -> float:
    return n * W * delta / (BASELINE_NW * delta_ref)


def backlog_probability(q3: float, rounds: int) -> float:
    return -math.expm1(rounds * math.log1p(-q3))


def throughput(model: ThroughputModel) -> dict:
    """Mean work per round, scale factor F and tier-3 backlog probability."""
    t_bar = float(np.dot(model.q, model.t))
    out = {"t_bar": t_bar, "F": scale_factor(model.n, model.W, model.delta, model.delta_ref)}
    N = model.rounds_spanned()
    if N is not None and len(model.q) >= 3:
        out["backlog_rounds"] = N
        out["backlog_probability"] = backlog_probability(model.q[2], N)
    if model.t_qec is not None:
        out["keeps_up"] = t_bar <= model.t_qec
    return out


def bp_round_time(n_iter: float, F: float, d: int, iter_ns: float = BASELINE_ITER_NS) -> float:
    """Per-round tier-1 time in ns: iterations x scaled iteration time / window rounds."""
    return n_iter * iter_ns * F / d


def _cp_interval(failures: int, shots: int, conf: float = 0.95) -> tuple[float, float]:
    a = 1 - conf
    lo = 0.0 if failures == 0 else float(beta.ppf(a / 2, failures, shots - failures + 1))
    hi = 1.0 if failures == shots else float(beta.ppf(1 - a / 2, failures + 1, shots - failures))
    return lo, hi


def per_round(p_block: float, rounds: int) -> float:
    """``1 - (1 - p)^(1/r)`` computed without cancellation."""
    return -math.expm1(math.log1p(-p_block) / rounds) if p_block < 1 else 1.0


def compound(p_round: float, rounds: int) -> float:
    """Inverse of :func:`per_round`."""
    return -math.expm1(rounds * math.log1p(-p_round)) if p_round < 1 else 1.0


def rate_metrics(failures: int, shots: int, rounds: int, k: int, conf: float = 0.95) -> dict:
    """Block, per-round and per-logical-per-round rates with Clopper-Pearson bounds.

    With zero failures the lower bound is 0 and the upper bound is the
    one-sided limit at the same confidence.
    """
    if shots <= 0:
        raise DomainError("shots must be positive")
    if not 0 <= failures <= shots:
        raise DomainError("failures must lie in [0, shots]")
    p = failures / shots
    if failures == 0:
        lo, hi = 0.0, 1 - (1 - conf) ** (1 / shots)
    else:
        lo, hi = _cp_interval(failures, shots, conf)
    out = {}
    for name, f in (("block", lambda x: x),
                    ("per_round", lambda x: per_round(x, rounds)),
                    ("per_logical", lambda x: per_round(per_round(x, rounds), k))):
        out[name] = {"value": f(p), "low": f(lo), "high": f(hi)}
    return out
