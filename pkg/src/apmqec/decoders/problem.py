"""Decoding problems and outcomes shared by every tier."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import DomainError
from ..gf2 import SparseGf2Matrix


@dataclass
class DecodingProblem:
    """Detector/mechanism incidence with priors and logical observables.

    ``check`` is detectors x mechanisms, ``observables`` is logicals x
    mechanisms, ``priors`` holds one flip probability per mechanism.
    """

    check: SparseGf2Matrix
    priors: np.ndarray
    observables: SparseGf2Matrix

    def __post_init__(self):
        self.priors = np.asarray(self.priors, dtype=np.float64)
        if self.priors.shape != (self.check.cols,):
            raise DomainError("one prior per mechanism is required")
        if self.observables.cols != self.check.cols:
            raise DomainError("observable matrix must cover every mechanism")
        if np.any((self.priors < 0) | (self.priors > 1)):
            raise DomainError("priors must lie in [0, 1]")

    @property
    def n_detectors(self) -> int:
        return self.check.rows

    @property
    def n_mechanisms(self) -> int:
        return self.check.cols

    @cached_property
    def graph(self) -> tuple[np.ndarray, ...]:
        """Edge arrays for message passing.

        Edges are numbered in detector-major order. Returns
        ``(chk_ptr, chk_var, var_ptr, var_edge)``.
        """
        chk_ptr = self.check.indptr.astype(np.int64)
        chk_var = self.check.indices.astype(np.int64)
        order = np.argsort(chk_var, kind="stable")
        var_ptr = np.zeros(self.n_mechanisms + 1, dtype=np.int64)
        np.cumsum(np.bincount(chk_var, minlength=self.n_mechanisms), out=var_ptr[1:])
        return chk_ptr, chk_var, var_ptr, order.astype(np.int64)

    @cached_property
    def llr(self) -> np.ndarray:
        p = np.clip(self.priors, 1e-300, 1 - 1e-16)
        return np.log((1 - p) / p)

    def syndrome(self, error: np.ndarray) -> np.ndarray:
        return self.check @ np.asarray(error, dtype=np.uint8)

    def observable(self, error: np.ndarray) -> np.ndarray:
        return self.observables @ np.asarray(error, dtype=np.uint8)

    def check_syndrome(self, syndrome) -> np.ndarray:
        s = np.asarray(syndrome, dtype=np.uint8)
        if s.shape != (self.n_detectors,):
            raise DomainError(f"syndrome has shape {s.shape}, expected ({self.n_detectors},)")
        return s


@dataclass
class DecodeOutcome:
    correction: np.ndarray
    converged: bool
    tier_used: int
    iterations: int
    weight: float | None = None

    def to_json(self) -> dict:
        out = {"correction": np.flatnonzero(self.correction).tolist(),
               "converged": bool(self.converged), "tier_used": int(self.tier_used),
               "iterations": int(self.iterations)}
        if self.weight is not None:
            out["weight"] = float(self.weight)
        return out


def logical_failure(correction: np.ndarray, truth: np.ndarray, problem: DecodingProblem,
                    truth_is_observable: bool = False) -> np.ndarray:
    """Per-logical failure bits: observable(correction) XOR observable(truth).

    ``truth`` is the sampled error, or its observable bits when
    ``truth_is_observable`` is set.
    """
    obs_truth = (np.asarray(truth, dtype=np.uint8) if truth_is_observable
                 else problem.observable(truth))
    return problem.observable(correction) ^ obs_truth
