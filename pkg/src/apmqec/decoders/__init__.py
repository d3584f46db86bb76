"""Hierarchical decoder stack: BP, relay BP, and most-likely-error fallback."""

from .bp import BpConfig, bp_decode
from .hierarchy import TierConfig, TierStats, decode_shot, hierarchical_decode
from .mle import MleBudget, mle_decode, mle_decode_milp
from .problem import DecodeOutcome, DecodingProblem, logical_failure
from .relay import RelayConfig, relay_bp_decode
from .throughput import ThroughputModel, rate_metrics, throughput
