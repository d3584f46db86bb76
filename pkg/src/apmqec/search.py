"""Randomized constrained search over APM code specs.

Each seed samples one spec whose 12 maps all lie in the centralizer of the
reference APM. The centralizer is a group, so every transition between
neighboring maps of any ordering commutes with the reference by
construction.
Candidates then pass through cheap algebraic filters (CSS orthogonality,
required non-commuting pairs), the girth filter, distance bounding and a
code-capacity simulation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .apm import (Apm, commutes, compose, crt_combine, group_closure, inverse,
                  max_abelian_subgroup, orbit_decompose, orbit_shift)
from .codes import CodeSpec, CssCode, build_check_matrices, tanner_girth
from .decoders.bp import BpConfig, bp_decode
from .decoders.problem import DecodingProblem
from .distance import DistanceReport, distance_upper_bound
from .errors import ConstructionError, DomainError

# F_0, F_5, F_2, F_4, F_1, F_3, G_3, G_1, G_4, G_2, G_5, G_0 as indices into
# CodeSpec.maps (F_i -> i, G_i -> 6 + i)
DEFAULT_ORDERING = (0, 5, 2, 4, 1, 3, 9, 7, 10, 8, 11, 6)
TABLE_PAIRS = ((0, 3), (1, 2))


def map_name(index: int) -> str:
    return f"F{index}" if index < 6 else f"G{index - 6}"


def parse_ordering(names) -> tuple[int, ...]:
    """Accept indices or names like ``"F0"``/``"G3"``."""
    out = []
    for x in names:
        if isinstance(x, str):
            if len(x) != 2 or x[0] not in "FG" or not x[1].isdigit() or int(x[1]) > 5:
                raise DomainError(f"bad map name {x!r}")
            out.append(int(x[1]) + (6 if x[0] == "G" else 0))
        else:
            out.append(int(x))
    if sorted(out) != list(range(12)):
        raise DomainError("ordering must list each of the 12 maps once")
    return tuple(out)


def transitions(spec: CodeSpec, ordering=DEFAULT_ORDERING) -> list[Apm]:
    """``T = next o prev^{-1}`` for each neighboring pair in the ordering."""
    maps = spec.maps
    return [compose(maps[b], inverse(maps[a])) for a, b in zip(ordering, ordering[1:])]


def check_transition_constraints(spec: CodeSpec, reference: Apm,
                                 ordering=DEFAULT_ORDERING) -> bool:
    if reference.modulus != spec.P:
        raise DomainError("reference and spec act on different moduli")
    return all(commutes(t, reference) for t in transitions(spec, ordering))


def check_noncommute_pairs(spec: CodeSpec, pairs) -> bool:
    """True iff F_i and G_j fail to commute for every listed ``(i, j)``."""
    return all(not commutes(spec.f[i], spec.g[j]) for i, j in pairs)


def css_compatible(spec: CodeSpec) -> bool:
    """The commutation pattern that makes the truncated matrices orthogonal:
    F_i must commute with G_j whenever ``i + j`` is not 3 mod 6."""
    return all(commutes(spec.f[i], spec.g[j])
               for i in range(6) for j in range(6) if (i + j) % 6 != 3)


def column_group(spec: CodeSpec, row_factor: int = 3):
    """Closure of the 12 maps reduced modulo ``P / row_factor``."""
    M = spec.P // row_factor
    comps = [Apm(m.a % M, m.b % M, M) for m in spec.maps]
    return group_closure(comps, modulus=M)


def column_structure(spec: CodeSpec, row_factor: int = 3) -> dict:
    """Maximal abelian subgroup of the column group and which of the 12
    column components lie inside it."""
    M = spec.P // row_factor
    group = column_group(spec, row_factor)
    st = max_abelian_subgroup(group)
    comps = [Apm(m.a % M, m.b % M, M) for m in spec.maps]
    inside = [map_name(i) for i, c in enumerate(comps) if c in st.subgroup]
    outside = [map_name(i) for i, c in enumerate(comps) if c not in st.subgroup]
    return {"P": spec.P, "column_modulus": M, "group_order": len(group),
            "group_abelian": group.is_abelian, "max_abelian_order": len(st.subgroup),
            "invariant_factors": list(st.invariant_factors),
            "cyclic_generators": [str(g) for g in st.cyclic_generators],
            "regular": len(st.subgroup) == M and len(st.subgroup.orbit(0)) == M,
            "inside": inside, "outside": outside}


def reference_apm(spec: CodeSpec, row_factor: int = 3) -> Apm:
    """A reference with large orbits: the identity on Z_3 paired with the
    first cyclic generator of the maximal abelian column subgroup."""
    M = spec.P // row_factor
    structure = max_abelian_subgroup(column_group(spec, row_factor))
    gen = structure.cyclic_generators[0] if structure.rank else Apm.identity(M)
    return crt_combine(Apm.identity(row_factor), gen)


def centralizer(reference: Apm) -> list[Apm]:
    """All of Aff(Z_P) commuting with ``reference``, in (a, b) order."""
    P = reference.modulus
    units = [a for a in range(1, P) if math.gcd(a, P) == 1] if P > 1 else [0]
    return [Apm(a, b, P) for a in units for b in range(P) if commutes(Apm(a, b, P), reference)]


def best_orbit_offsets(trans: list[Apm], reference: Apm, exhaustive_cap: int = 100_000):
    """Orbit representative offsets minimizing distinct per-orbit shifts.

    Moving the representative of orbit ``i`` forward by ``o_i`` turns a
    shift ``s_i`` (orbit ``i`` onto orbit ``pi(i)``) into
    ``s_i + o_i - o_pi(i)``. Returns ``(offsets, cost)`` where cost sums
    the number of distinct shifts over all transitions; ties go to the
    lexicographically smallest offsets. Large searches fall back to
    coordinate descent.
    """
    dec = orbit_decompose(reference)
    lengths = dec.lengths
    R = len(lengths)
    shifts = [orbit_shift(t, reference) for t in trans]

    def cost(off) -> int:
        total = 0
        for sh in shifts:
            total += len({(s + off[i] - off[j]) % lengths[i] for i, (j, s) in enumerate(sh)})
        return total

    L = max(lengths)
    if L ** max(R - 1, 0) <= exhaustive_cap:
        best = None
        for rest in itertools.product(range(L), repeat=max(R - 1, 0)):
            off = (0,) + rest
            c = cost(off)
            if best is None or c < best[1]:
                best = (off, c)
        return best
    off = [0] * R
    c = cost(off)
    improved = True
    while improved:
        improved = False
        for i in range(1, R):
            for v in range(lengths[i]):
                trial = off.copy()
                trial[i] = v
                ct = cost(trial)
                if ct < c:
                    off, c, improved = trial, ct, True
    return tuple(off), c


# ------------------------------------------------------------------ filtering

def capacity_problems(code: CssCode, p: float) -> tuple[DecodingProblem, DecodingProblem]:
    """(X-error problem on H_Z, Z-error problem on H_X), each with flip prior 2p/3."""
    q = np.full(code.n, 2 * p / 3)
    from .gf2 import SparseGf2Matrix
    px = DecodingProblem(code.h_z, q, SparseGf2Matrix.from_dense(code.logical_z))
    pz = DecodingProblem(code.h_x, q, SparseGf2Matrix.from_dense(code.logical_x))
    return px, pz


def capacity_shot_fails(problems, ex: np.ndarray, ez: np.ndarray, bp: BpConfig) -> bool:
    """Decode one depolarizing sample (X part, Z part); True on failure."""
    for prob, e in zip(problems, (ex, ez)):
        out = bp_decode(prob, prob.syndrome(e), bp)
        if not out.converged or prob.observable(out.correction ^ e).any():
            return True
    return False


def capacity_filter(code: CssCode, p: float, shots: int, seed: int = 0,
                    bp: BpConfig = BpConfig(max_iters=50)) -> float:
    """Logical failure fraction under i.i.d. depolarizing noise, one perfect
    syndrome round, tier-1 BP in each basis."""
    if not 0 <= p < 1:
        raise DomainError("p must lie in [0, 1)")
    if p == 0 or shots == 0:
        return 0.0
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xCAFE]))
    problems = capacity_problems(code, p)
    fails = 0
    for _ in range(shots):
        hit = rng.random(code.n) < p
        pauli = rng.integers(1, 4, size=code.n)  # 1 = X, 2 = Y, 3 = Z
        ex = (hit & (pauli <= 2)).astype(np.uint8)
        ez = (hit & (pauli >= 2)).astype(np.uint8)
        fails += capacity_shot_fails(problems, ex, ez, bp)
    return fails / shots


@dataclass
class SearchConfig:
    P: int
    reference: Apm
    girth_min: int = 6
    noncommute_pairs: tuple[tuple[int, int], ...] = TABLE_PAIRS
    seeds: int | list[int] = 100
    distance_trials: int = 50
    capacity_error_rate: float = 0.02
    capacity_shots: int = 100
    ordering: tuple[int, ...] = DEFAULT_ORDERING
    base_seed: int = 0

    def __post_init__(self):
        if self.girth_min < 4 or self.girth_min % 2:
            raise DomainError("girth_min must be even and >= 4")
        pairs = tuple(tuple(p) for p in self.noncommute_pairs)
        for i, j in pairs:
            if not 0 <= i < j <= 5:
                raise DomainError(f"noncommute pair {(i, j)} outside 0 <= i < j <= 5")
        self.noncommute_pairs = pairs
        if self.reference.modulus != self.P:
            raise DomainError("reference must act on Z_P")
        self.ordering = parse_ordering(self.ordering)

    @property
    def seed_list(self) -> list[int]:
        return list(range(self.seeds)) if isinstance(self.seeds, int) else list(self.seeds)

    def to_json(self) -> dict:
        return {"P": self.P, "reference": self.reference.to_json(), "girth_min": self.girth_min,
                "noncommute_pairs": [list(p) for p in self.noncommute_pairs],
                "seeds": self.seeds, "distance_trials": self.distance_trials,
                "capacity_error_rate": self.capacity_error_rate,
                "capacity_shots": self.capacity_shots,
                "ordering": [map_name(i) for i in self.ordering], "base_seed": self.base_seed}

    @classmethod
    def from_json(cls, obj: dict) -> SearchConfig:
        for key in ("P", "reference"):
            if key not in obj:
                raise DomainError(f"search config is missing field {key!r}")
        kw = dict(obj)
        kw["reference"] = Apm.from_json(obj["reference"], obj["P"])
        if "noncommute_pairs" in kw:
            kw["noncommute_pairs"] = tuple(tuple(p) for p in kw["noncommute_pairs"])
        if "ordering" in kw:
            kw["ordering"] = tuple(kw["ordering"])
        unknown = set(kw) - set(cls.__dataclass_fields__)
        if unknown:
            raise DomainError(f"unknown search config field(s) {sorted(unknown)}")
        return cls(**kw)


@dataclass
class Candidate:
    spec: CodeSpec
    seed: int
    girth: int | float
    k: int
    d_upper: DistanceReport | None = field(default=None, repr=False)
    capacity_logical_rate: float | None = None

    def sort_key(self):
        d = self.d_upper.d_upper if self.d_upper is not None else 0
        rate = self.capacity_logical_rate if self.capacity_logical_rate is not None else 1.0
        return (-d, rate, self.seed)

    def to_json(self) -> dict:
        return {"seed": self.seed, "spec": self.spec.to_json(),
                "girth": self.girth if math.isfinite(self.girth) else "inf",
                "k": self.k,
                "distance": self.d_upper.to_json() if self.d_upper else None,
                "capacity_logical_rate": self.capacity_logical_rate}


def _commute_table(cent: list[Apm]) -> np.ndarray:
    a = np.array([m.a for m in cent], dtype=np.int64)
    b = np.array([m.b for m in cent], dtype=np.int64)
    P = cent[0].modulus
    return ((a[:, None] - 1) * b[None, :] - (a[None, :] - 1) * b[:, None]) % P == 0


def sample_spec(config: SearchConfig, seed: int, cent: list[Apm] | None = None,
                f_attempts: int = 1000) -> CodeSpec | None:
    """The spec a seed proposes, or None if no attempt succeeds.

    All maps come from the centralizer of the reference. The F maps are
    drawn first, uniformly; each G_j then
    only has to meet the commutation pattern against the F maps, so it is
    drawn uniformly from its admissible set. F draws with an empty
    admissible set for some G_j are redrawn.
    """
    P = config.P
    cent = cent if cent is not None else centralizer(config.reference)
    table = _commute_table(cent)
    rng = np.random.default_rng(np.random.SeedSequence([config.base_seed, seed]))
    pairs = set(config.noncommute_pairs)
    for _ in range(f_attempts):
        F = rng.integers(len(cent), size=6)
        G = []
        for j in range(6):
            mask = np.ones(len(cent), dtype=bool)
            for i in range(6):
                if (i, j) in pairs:
                    mask &= ~table[F[i]]
                elif (i + j) % 6 != 3:
                    mask &= table[F[i]]
            opts = np.flatnonzero(mask)
            if not opts.size:
                break
            G.append(int(rng.choice(opts)))
        else:
            return CodeSpec(P, tuple(cent[i] for i in F), tuple(cent[i] for i in G))
    return None


def evaluate_candidate(spec: CodeSpec, config: SearchConfig, seed: int = 0,
                       assess: bool = True) -> Candidate | None:
    """Apply every filter to one spec; None if it is rejected."""
    if not check_transition_constraints(spec, config.reference, config.ordering):
        return None
    if not css_compatible(spec) or not check_noncommute_pairs(spec, config.noncommute_pairs):
        return None
    try:
        code = build_check_matrices(spec)
    except ConstructionError:
        return None
    girth = min(tanner_girth(code.h_x), tanner_girth(code.h_z))
    if girth < config.girth_min or code.k == 0:
        return None
    cand = Candidate(spec, seed, girth, code.k)
    if assess:
        cand.d_upper = distance_upper_bound(code, config.distance_trials, seed=seed)
        cand.capacity_logical_rate = capacity_filter(code, config.capacity_error_rate,
                                                     config.capacity_shots, seed=seed)
    return cand


def search(config: SearchConfig, assess: bool = True) -> list[Candidate]:
    """One proposal per seed; survivors sorted by (distance desc, capacity
    failure rate asc, seed)."""
    seeds = config.seed_list
    if not seeds:
        return []
    cent = centralizer(config.reference)
    out = []
    for s in seeds:
        spec = sample_spec(config, s, cent)
        if spec is None:
            continue
        cand = evaluate_candidate(spec, config, s, assess)
        if cand is not None:
            out.append(cand)
    return sorted(out, key=Candidate.sort_key)
