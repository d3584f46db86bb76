"""Memory experiments under phenomenological noise, CNOT layering, and shot I/O.

Detector convention: layer 0 holds the first round's syndrome as is (the
initial product state fixes every check of the measured basis), layers
1..r-1 hold XORs of consecutive rounds, and layer r compares the last
round with the syndrome recomputed from the transversal data readout.
Data qubits depolarize after every round, so data errors after round t
touch only detector layer t + 1; a measurement error in round t touches
layers t and t + 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .codes import CssCode
from .decoders.problem import DecodingProblem
from .errors import DomainError
from .gf2 import SparseGf2Matrix

MEAS_TO_DATA = 4.0 / 3.0
SHOT_CHUNK = 1024


def depolarizing_components(p: float) -> dict[str, float]:
    return {"I": 1 - p, "X": p / 3, "Y": p / 3, "Z": p / 3}


def basis_flip_probability(p: float) -> float:
    """Chance that depolarizing noise of strength ``p`` flips a given basis.

    Two of the three nontrivial Paulis anticommute with the measured one.
    """
    return 2 * p / 3


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "phenomenological"
    p_data: float = 1e-3
    p_meas: float | None = None

    def __post_init__(self):
        if self.kind not in ("phenomenological", "code_capacity"):
            raise DomainError(f"unknown noise kind {self.kind!r}")
        if self.p_meas is None:
            pm = 0.0 if self.kind == "code_capacity" else min(1.0, MEAS_TO_DATA * self.p_data)
            object.__setattr__(self, "p_meas", pm)
        for name in ("p_data", "p_meas"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise DomainError(f"{name}={v} outside [0, 1]")

    @classmethod
    def phenomenological(cls, p: float) -> NoiseModel:
        return cls("phenomenological", p)

    def to_json(self) -> dict:
        return {"kind": self.kind, "p_data": self.p_data, "p_meas": self.p_meas}


@dataclass
class MemoryExperiment:
    code: CssCode
    rounds: int
    basis: str
    noise: NoiseModel
    check: SparseGf2Matrix
    priors: np.ndarray
    observables: SparseGf2Matrix
    n_data_mechanisms: int = 0

    @property
    def n_detectors(self) -> int:
        return self.check.rows

    @property
    def n_mechanisms(self) -> int:
        return self.check.cols

    @property
    def problem(self) -> DecodingProblem:
        if not hasattr(self, "_problem"):
            self._problem = DecodingProblem(self.check, self.priors, self.observables)
        return self._problem

    def describe(self, mechanism: int) -> tuple[str, int, int]:
        """``(kind, round, index)`` of a mechanism."""
        n, m = self.code.n, self.check.rows // (self.rounds + 1)
        if mechanism < self.n_data_mechanisms:
            return ("data", mechanism // n, mechanism % n)
        j = mechanism - self.n_data_mechanisms
        return ("meas", j // m, j % m)


def build_memory_experiment(code: CssCode, rounds: int, basis: str = "Z",
                            noise: NoiseModel = NoiseModel()) -> MemoryExperiment:
    """Space-time decoding problem for an ``rounds``-round memory in ``basis``.

    A Z-basis memory detects X flips with the Z checks and reads out the Z
    logicals; the X basis is the mirror image.
    """
    if rounds < 1:
        raise DomainError("rounds must be >= 1")
    if basis not in ("X", "Z"):
        raise DomainError("basis must be 'X' or 'Z'")
    H = code.h_z if basis == "Z" else code.h_x
    L = code.logical_z if basis == "Z" else code.logical_x
    H = H.to_csr()
    m, n, r = H.shape[0], H.shape[1], rounds
    blocks = []
    # data flips after round t land in detector layer t + 1
    data = sp.kron(sp.eye(r + 1, r, k=-1, format="csr"), H, format="csr")
    blocks.append(data)
    if noise.p_meas > 0 or noise.kind == "phenomenological":
        step = sp.eye(r + 1, r, format="csr") + sp.eye(r + 1, r, k=-1, format="csr")
        blocks.append(sp.kron(step, sp.eye(m, format="csr"), format="csr"))
    check = SparseGf2Matrix.from_csr(sp.hstack(blocks).tocsr())
    q = basis_flip_probability(noise.p_data)
    priors = np.full(n * r, q)
    if len(blocks) == 2:
        priors = np.concatenate([priors, np.full(m * r, noise.p_meas)])
    L_sp = sp.csr_matrix(L)
    obs = sp.hstack([L_sp] * r + ([sp.csr_matrix((L.shape[0], m * r))] if len(blocks) == 2 else []))
    observables = SparseGf2Matrix.from_csr(obs.tocsr())
    return MemoryExperiment(code, r, basis, noise, check, priors, observables, n * r)


def code_capacity_experiment(code: CssCode, p: float, basis: str = "Z") -> MemoryExperiment:
    """One perfect round after i.i.d. depolarizing noise of strength ``p``."""
    return build_memory_experiment(code, 1, basis, NoiseModel("code_capacity", p, 0.0))


# ------------------------------------------------------------------ sampling

@dataclass
class ShotBatch:
    syndromes: np.ndarray
    observables: np.ndarray
    errors: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def shots(self) -> int:
        return self.syndromes.shape[0]

    def __eq__(self, other) -> bool:
        return (np.array_equal(self.syndromes, other.syndromes)
                and np.array_equal(self.observables, other.observables))


def _sample_errors(priors: np.ndarray, shots: int, rng: np.random.Generator) -> sp.csr_matrix:
    """Bernoulli(prior) per mechanism, drawn as a binomial count per prior
    class followed by a uniform choice of which mechanisms flip."""
    rows, cols = [], []
    for p in np.unique(priors):
        if p <= 0:
            continue
        idx = np.flatnonzero(priors == p)
        counts = rng.binomial(idx.size, p, size=shots)
        for s in np.flatnonzero(counts):
            pick = rng.choice(idx.size, size=counts[s], replace=False)
            rows.append(np.full(pick.size, s))
            cols.append(idx[pick])
    if not rows:
        return sp.csr_matrix((shots, priors.size), dtype=np.uint8)
    r, c = np.concatenate(rows), np.concatenate(cols)
    return sp.csr_matrix((np.ones(r.size, dtype=np.uint8), (r, c)), shape=(shots, priors.size))


def sample(experiment: MemoryExperiment | DecodingProblem, shots: int, seed: int = 0,
           keep_errors: bool = False) -> ShotBatch:
    """Sample ``shots`` independent runs.

    Shots are drawn in chunks of 1024, chunk ``c`` seeded by
    ``SeedSequence([seed, c])``, so any shot range can be regenerated alone.
    """
    if shots < 1:
        raise DomainError("shots must be >= 1")
    prob = experiment.problem if isinstance(experiment, MemoryExperiment) else experiment
    chk = prob.check.to_csr().T.tocsr().astype(np.int32)
    obs = prob.observables.to_csr().T.tocsr().astype(np.int32)
    syn, ob, errs = [], [], []
    for c, start in enumerate(range(0, shots, SHOT_CHUNK)):
        size = min(SHOT_CHUNK, shots - start)
        rng = np.random.default_rng(np.random.SeedSequence([seed, c]))
        E = _sample_errors(prob.priors, size, rng).astype(np.int32)
        syn.append(((E @ chk).toarray() & 1).astype(np.uint8))
        ob.append(((E @ obs).toarray() & 1).astype(np.uint8))
        if keep_errors:
            errs.append(E.astype(np.uint8))
    errors = sp.vstack(errs).tocsr() if keep_errors else None
    return ShotBatch(np.vstack(syn), np.vstack(ob), errors)


def build_circuit_experiment(*args, **kwargs):
    """Gate-level noise is not simulated; this entry point exists so callers
    can detect the gap explicitly."""
    raise NotImplementedError("circuit-level noise simulation is not supported")


# ---------------------------------------------------------------- scheduling

def edge_coloring_schedule(h: SparseGf2Matrix) -> list[list[tuple[int, int]]]:
    """CNOT layers from a proper edge coloring with max-degree colors.

    Bipartite graphs are class one, so the alternating-path recoloring
    always frees a common color. Each layer lists ``(check, qubit)`` pairs.
    """
    nc, nq = h.shape
    deg = max(int(h.row_weights().max(initial=0)), int(h.col_weights().max(initial=0)))
    if deg == 0:
        return []
    # at[v, c] = neighbor joined to v by an edge of color c, or -1
    at = np.full((nc + nq, deg), -1, dtype=np.int64)
    for u in range(nc):
        for q in h.row(u):
            v = nc + int(q)
            a = int(np.flatnonzero(at[u] < 0)[0])
            b = int(np.flatnonzero(at[v] < 0)[0])
            if at[v, a] >= 0:
                # flip the a/b path that starts at v along color a
                path, x, col = [], v, a
                while at[x, col] >= 0:
                    y = int(at[x, col])
                    path.append((x, y, col))
                    x, col = y, (b if col == a else a)
                for x, y, col in path:
                    at[x, col] = -1
                    at[y, col] = -1
                for x, y, col in path:
                    new = b if col == a else a
                    at[x, new] = y
                    at[y, new] = x
            at[u, a] = v
            at[v, a] = u
    layers = []
    for c in range(deg):
        pairs = [(u, int(at[u, c]) - nc) for u in range(nc) if at[u, c] >= 0]
        if pairs:
            layers.append(pairs)
    return layers


def is_proper_coloring(layers) -> bool:
    for layer in layers:
        checks = [c for c, _ in layer]
        qubits = [q for _, q in layer]
        if len(set(checks)) != len(checks) or len(set(qubits)) != len(qubits):
            return False
    return True


# ------------------------------------------------------------------- file I/O

def write_dem(experiment: MemoryExperiment | DecodingProblem, path: str | Path | None = None) -> str:
    """Line-oriented detector error model.

    Header lines ``detectors N`` and ``observables K`` are followed by one
    ``error(p) D.. L..`` line per mechanism, in mechanism order.
    """
    prob = experiment.problem if isinstance(experiment, MemoryExperiment) else experiment
    csc = prob.check.to_csr().tocsc()
    obs = prob.observables.to_csr().tocsc()
    lines = ["# apmqec detector error model v1",
             f"detectors {prob.n_detectors}", f"observables {prob.observables.rows}"]
    for j in range(prob.n_mechanisms):
        ds = csc.indices[csc.indptr[j]:csc.indptr[j + 1]]
        ls = obs.indices[obs.indptr[j]:obs.indptr[j + 1]]
        terms = [f"D{d}" for d in sorted(ds)] + [f"L{l}" for l in sorted(ls)]
        lines.append(f"error({float(prob.priors[j])!r}) " + " ".join(terms))
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def read_dem(text: str) -> DecodingProblem:
    n_det = n_obs = None
    priors, drows, dcols, orows, ocols = [], [], [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        try:
            if head == "detectors":
                n_det = int(rest)
            elif head == "observables":
                n_obs = int(rest)
            elif head.startswith("error(") and head.endswith(")"):
                j = len(priors)
                priors.append(float(head[6:-1]))
                for tok in rest.split():
                    if tok[0] == "D":
                        drows.append(int(tok[1:]))
                        dcols.append(j)
                    elif tok[0] == "L":
                        orows.append(int(tok[1:]))
                        ocols.append(j)
                    else:
                        raise ValueError(tok)
            else:
                raise ValueError(head)
        except ValueError as exc:
            raise DomainError(f"detector error model line {lineno}: bad token {exc}") from None
    if n_det is None or n_obs is None:
        raise DomainError("detector error model lacks a detectors/observables header")
    n = len(priors)
    check = SparseGf2Matrix.from_coo(n_det, n, drows, dcols)
    obs = SparseGf2Matrix.from_coo(n_obs, n, orows, ocols)
    return DecodingProblem(check, np.array(priors), obs)


def write_shots(batch: ShotBatch, path: str | Path, manifest: str | None = None) -> None:
    """Packed-bit shot file: one JSON header line, then syndrome and
    observable bits packed little-endian per shot row."""
    header = {"format": "apmqec-shots", "version": 1, "shots": batch.shots,
              "detectors": int(batch.syndromes.shape[1]),
              "observables": int(batch.observables.shape[1]), "bitorder": "little"}
    if manifest is not None:
        header["manifest"] = manifest
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(np.packbits(batch.syndromes, axis=1, bitorder="little").tobytes())
        fh.write(np.packbits(batch.observables, axis=1, bitorder="little").tobytes())


def read_shots(path: str | Path) -> tuple[ShotBatch, dict]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        body = fh.read()
    if header.get("format") != "apmqec-shots":
        raise DomainError("not an apmqec shot file")
    s, d, k = header["shots"], header["detectors"], header["observables"]
    bd, bk = (d + 7) // 8, (k + 7) // 8
    if len(body) != s * (bd + bk):
        raise DomainError("shot file body has the wrong length")
    syn = np.frombuffer(body[:s * bd], np.uint8).reshape(s, bd)
    obs = np.frombuffer(body[s * bd:], np.uint8).reshape(s, bk)
    syn = np.unpackbits(syn, axis=1, bitorder="little")[:, :d]
    obs = np.unpackbits(obs, axis=1, bitorder="little")[:, :k]
    return ShotBatch(syn, obs), header
