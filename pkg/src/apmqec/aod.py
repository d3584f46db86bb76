"""Compile affine permutations into separable AOD move schedules.

A block of P qubits sits on a rows x cols trap grid. Every move step is a
product map (new row depends only on old row, new column only on old
column, on a product-shaped set of picked-up atoms), which is what a
crossed AOD pair can execute. Three strategies are provided:

* abelian: on an exponent-relabeled layout a transition inside the maximal
  abelian column subgroup is one rigid column shift plus row work;
* separable: on a CRT layout any APM is a row permutation times a column
  permutation;
* generic: on a row-major layout any APM compiles in logarithmic depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .apm import AbelianStructure, Apm, compose, crt_split, inverse, max_abelian_subgroup
from .codes import CodeSpec
from .errors import CollisionError, DomainError, NotInSubgroup, StructureError

STEP_KINDS = ("GlobalColumnCyclicShift", "GlobalRowCyclicShift", "RowPermutation",
              "ColumnSubsetCyclicShift", "RowSubsetCyclicShift", "OneDPermutationLayer")


@dataclass(frozen=True)
class GridLayout:
    """Placement of qubits ``0..P-1`` on a ``rows x cols`` grid.

    ``provenance`` is one of ``crt``, ``exponent``, ``row-major`` or
    ``custom`` and ``params`` records what is needed to interpret it.
    """

    rows: int
    cols: int
    placement: tuple[tuple[int, int], ...]
    provenance: str = "custom"
    params: tuple = ()

    def __post_init__(self):
        if self.rows * self.cols != len(self.placement):
            raise DomainError(f"{len(self.placement)} qubits do not fill a {self.rows}x{self.cols} grid")
        cells = set(self.placement)
        if len(cells) != len(self.placement) or any(
                not (0 <= r < self.rows and 0 <= c < self.cols) for r, c in cells):
            raise DomainError("placement is not a bijection onto the grid")

    @property
    def P(self) -> int:
        return len(self.placement)

    @property
    def param(self) -> dict:
        return dict(self.params)

    def grid(self) -> np.ndarray:
        """``grid[r, c]`` is the qubit in cell ``(r, c)``."""
        out = np.empty((self.rows, self.cols), dtype=np.int64)
        pos = np.array(self.placement)
        out[pos[:, 0], pos[:, 1]] = np.arange(self.P)
        return out

    def positions(self) -> np.ndarray:
        return np.array(self.placement, dtype=np.int64)

    def to_json(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "provenance": self.provenance,
                "params": {k: list(v) if isinstance(v, tuple) else v for k, v in self.params},
                "placement": [list(p) for p in self.placement]}


def crt_layout(P: int, m: int, l: int) -> GridLayout:
    """Qubit ``x`` at ``(x mod m, x mod l)``; needs ``P = m l`` with coprime factors."""
    if m * l != P:
        raise DomainError(f"{m} x {l} != {P}")
    if math.gcd(m, l) != 1:
        raise DomainError(f"gcd({m}, {l}) = {math.gcd(m, l)}; CRT layout needs coprime factors")
    return GridLayout(m, l, tuple((x % m, x % l) for x in range(P)), "crt", (("m", m), ("l", l)))


def row_major_layout(P: int, m: int) -> GridLayout:
    """Qubit ``i`` at row ``i // m`` and column ``i mod m``: ``x = i mod m``
    indexes the ``m`` columns and ``y = i // m`` the ``P / m`` rows."""
    if m <= 0 or P % m:
        raise DomainError(f"{m} does not divide {P}")
    return GridLayout(P // m, m, tuple((i // m, i % m) for i in range(P)), "row-major",
                      (("m", m), ("l", P // m)))


def exponent_layout(P: int, structure: AbelianStructure, row_factor: int = 3) -> GridLayout:
    """CRT layout with columns relabeled by exponents of the abelian subgroup.

    The residue ``x mod L`` (``L = P / row_factor``) is written as
    ``g_1^e_1 ... g_r^e_r (0)``; the column is ``e_1`` and the remaining
    exponents become a mixed-radix digit stacked over the ``row_factor`` rows.
    """
    L = P // row_factor
    if row_factor * L != P or math.gcd(row_factor, L) != 1:
        raise DomainError(f"row factor {row_factor} does not split {P} coprimely")
    if structure.subgroup.modulus != L:
        raise DomainError(f"structure acts on Z_{structure.subgroup.modulus}, expected Z_{L}")
    from .apm import exponent_relabeling
    sigma = exponent_relabeling(structure)
    where = {c: e for e, c in sigma.items()}
    factors = structure.invariant_factors
    outer = factors[1:]
    placement = []
    for x in range(P):
        e = where[x % L]
        digit, stride = 0, 1
        for k, n in zip(e[1:], outer):
            digit += k * stride
            stride *= n
        placement.append((x % row_factor + row_factor * digit, e[0]))
    rows = row_factor * math.prod(outer)
    return GridLayout(rows, factors[0], tuple(placement), "exponent",
                      (("row_factor", row_factor), ("factors", tuple(factors)),
                       ("generators", tuple((g.a, g.b) for g in structure.cyclic_generators))))


def default_layout(spec: CodeSpec, row_factor: int = 3) -> GridLayout:
    """Exponent layout when the maximal abelian column subgroup acts
    regularly, otherwise the plain CRT layout."""
    from .search import column_group
    structure = max_abelian_subgroup(column_group(spec, row_factor))
    try:
        return exponent_layout(spec.P, structure, row_factor)
    except StructureError:
        return crt_layout(spec.P, row_factor, spec.P // row_factor)


def layout_structure(layout: GridLayout) -> AbelianStructure:
    """Rebuild the abelian structure recorded in an exponent layout."""
    from .apm import ApmGroup, abelian_structure, group_closure
    p = layout.param
    L = layout.P // p["row_factor"]
    gens = [Apm(a, b, L) for a, b in p["generators"]]
    closure = group_closure(gens, modulus=L)
    st = abelian_structure(ApmGroup(closure.elements, tuple(gens), L))
    return AbelianStructure(st.subgroup, tuple(p["factors"]), tuple(gens))


# ---------------------------------------------------------------- move steps

def _longest_decreasing(seq) -> int:
    tails: list[int] = []
    for v in seq:
        v = -v
        lo, hi = 0, len(tails)
        while lo < hi:
            mid = (lo + hi) // 2
            if tails[mid] < v:
                lo = mid + 1
            else:
                hi = mid
        if lo == len(tails):
            tails.append(v)
        else:
            tails[lo] = v
    return len(tails)


@dataclass(frozen=True)
class MoveStep:
    """One separable rearrangement.

    ``amount`` is used by the shift kinds, ``lines`` by the subset shifts
    (columns for ``ColumnSubsetCyclicShift``, rows for ``RowSubsetCyclicShift``)
    and ``perm`` maps old line index to new line index for
    ``RowPermutation`` and ``OneDPermutationLayer`` (whose ``axis`` is
    ``row`` or ``col``).
    """

    kind: str
    amount: int = 0
    lines: tuple[int, ...] = ()
    perm: tuple[int, ...] = ()
    axis: str = ""

    def __post_init__(self):
        if self.kind not in STEP_KINDS:
            raise DomainError(f"unknown step kind {self.kind!r}")
        if self.perm and sorted(self.perm) != list(range(len(self.perm))):
            raise DomainError(f"{self.kind} perm is not a permutation")
        if self.kind == "OneDPermutationLayer":
            if self.axis not in ("row", "col"):
                raise DomainError("OneDPermutationLayer axis must be 'row' or 'col'")
            if _longest_decreasing(self.perm) > 2:
                raise DomainError("a 1D layer must split into two order-preserving groups")

    @property
    def moves(self) -> int:
        """Grid moves: a cyclic shift is a bulk move plus a wrap move, a
        permutation layer moves its two order-preserving groups."""
        return 2

    def maps(self, rows: int, cols: int):
        """``(new_row, new_col, picked)`` arrays of shape ``(rows, cols)``."""
        r, c = np.indices((rows, cols))
        nr, nc = r.copy(), c.copy()
        picked = np.ones((rows, cols), dtype=bool)
        k = self.kind
        if k == "GlobalColumnCyclicShift":
            nc = (c + self.amount) % cols
        elif k == "GlobalRowCyclicShift":
            nr = (r + self.amount) % rows
        elif k in ("RowPermutation", "OneDPermutationLayer") and self.axis != "col":
            if len(self.perm) != rows:
                raise DomainError(f"row permutation of length {len(self.perm)} on {rows} rows")
            nr = np.asarray(self.perm)[r]
        elif k == "OneDPermutationLayer":
            if len(self.perm) != cols:
                raise DomainError(f"column permutation of length {len(self.perm)} on {cols} columns")
            nc = np.asarray(self.perm)[c]
        elif k == "ColumnSubsetCyclicShift":
            if any(not 0 <= x < cols for x in self.lines):
                raise DomainError("column subset out of range")
            sel = np.zeros(cols, dtype=bool)
            sel[list(self.lines)] = True
            picked = np.broadcast_to(sel[None, :], (rows, cols)).copy()
            nr = np.where(picked, (r + self.amount) % rows, r)
        elif k == "RowSubsetCyclicShift":
            if any(not 0 <= x < rows for x in self.lines):
                raise DomainError("row subset out of range")
            sel = np.zeros(rows, dtype=bool)
            sel[list(self.lines)] = True
            picked = np.broadcast_to(sel[:, None], (rows, cols)).copy()
            nc = np.where(picked, (c + self.amount) % cols, c)
        return nr, nc, picked

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.kind.endswith("CyclicShift"):
            out["amount"] = self.amount
        if self.lines:
            out["lines"] = list(self.lines)
        if self.perm:
            out["perm"] = list(self.perm)
        if self.axis:
            out["axis"] = self.axis
        return out

    @classmethod
    def from_json(cls, obj: dict) -> MoveStep:
        return cls(obj["kind"], int(obj.get("amount", 0)), tuple(obj.get("lines", ())),
                   tuple(obj.get("perm", ())), obj.get("axis", ""))


def is_separable(step: MoveStep, rows: int, cols: int) -> bool:
    """Structural product check: the picked set is rows x cols shaped, the
    new row of a picked atom depends only on its row and the new column
    only on its column, and unpicked atoms stay put."""
    nr, nc, picked = step.maps(rows, cols)
    r, c = np.indices((rows, cols))
    R, C = picked.any(axis=1), picked.any(axis=0)
    if not np.array_equal(picked, np.outer(R, C)):
        return False
    if (nr[~picked] != r[~picked]).any() or (nc[~picked] != c[~picked]).any():
        return False
    if not picked.any():
        return True
    sub_r, sub_c = nr[np.ix_(R, C)], nc[np.ix_(R, C)]
    return bool((sub_r == sub_r[:, :1]).all() and (sub_c == sub_c[:1, :]).all())


@dataclass(frozen=True)
class MoveSchedule:
    steps: tuple[MoveStep, ...]
    source: GridLayout
    target: GridLayout | None = None
    strategy: str = ""
    label: str = ""

    @property
    def moves(self) -> int:
        return sum(s.moves for s in self.steps)

    def kinds(self) -> list[str]:
        return [s.kind for s in self.steps]

    def to_json(self, with_layout: bool = False) -> dict:
        out = {"label": self.label, "strategy": self.strategy,
               "grid": [self.source.rows, self.source.cols],
               "provenance": self.source.provenance, "moves": self.moves,
               "steps": [s.to_json() for s in self.steps]}
        if with_layout:
            out["source"] = self.source.to_json()
        return out


def _advance(step: MoveStep, pos: np.ndarray, rows: int, cols: int, index: int) -> np.ndarray:
    nr, nc, _ = step.maps(rows, cols)
    new = np.stack([nr[pos[:, 0], pos[:, 1]], nc[pos[:, 0], pos[:, 1]]], axis=1)
    flat = new[:, 0] * cols + new[:, 1]
    if len(np.unique(flat)) != len(flat):
        raise CollisionError(f"step {index} ({step.kind}) moves two atoms into one site")
    return new


def frames(layout: GridLayout, schedule: MoveSchedule):
    """Yield atom positions before the first step and after each step."""
    pos = layout.positions()
    yield pos
    for i, step in enumerate(schedule.steps):
        if not is_separable(step, layout.rows, layout.cols):
            raise DomainError(f"step {i} ({step.kind}) is not separable")
        pos = _advance(step, pos, layout.rows, layout.cols, i)
        yield pos


def apply_schedule(layout: GridLayout, schedule: MoveSchedule) -> np.ndarray:
    """``out[x]`` is the qubit label of the target-layout cell that atom ``x``
    ends in. A schedule realizes an APM ``f`` iff ``out == f.table()``."""
    if (layout.rows, layout.cols) != (schedule.source.rows, schedule.source.cols):
        raise DomainError("schedule was compiled for a different grid")
    *_, pos = frames(layout, schedule)
    grid = (schedule.target or layout).grid()
    return grid[pos[:, 0], pos[:, 1]]


def realizes(schedule: MoveSchedule, f: Apm) -> bool:
    return bool(np.array_equal(apply_schedule(schedule.source, schedule), f.table()))


# ---------------------------------------------------------------- primitives

def _row_step(perm) -> MoveStep | None:
    """Cheapest step for a row permutation: nothing, a cyclic shift, or a
    general row permutation."""
    perm = tuple(int(x) for x in perm)
    n = len(perm)
    if perm == tuple(range(n)):
        return None
    s = perm[0]
    if all(perm[i] == (i + s) % n for i in range(n)):
        return MoveStep("GlobalRowCyclicShift", s)
    return MoveStep("RowPermutation", perm=perm)


def route_1d(perm, axis: str) -> list[MoveStep]:
    """Route line ``i`` to ``perm[i]`` with LSD radix passes on the target.

    Each pass stably splits the current sequence by one bit of the target
    line, which keeps both halves in order; ``ceil(log2 n)`` passes suffice.
    """
    perm = [int(x) for x in perm]
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise DomainError("not a permutation")
    at = list(range(n))  # at[p] = line currently in slot p
    layers = []
    for b in range(max(1, math.ceil(math.log2(n))) if n > 1 else 0):
        zero = [p for p in range(n) if not (perm[at[p]] >> b) & 1]
        one = [p for p in range(n) if (perm[at[p]] >> b) & 1]
        order = zero + one
        step = [0] * n
        for new, old in enumerate(order):
            step[old] = new
        if step != list(range(n)):
            layers.append(MoveStep("OneDPermutationLayer", perm=tuple(step), axis=axis))
        at = [at[p] for p in order]
    assert all(perm[at[p]] == p for p in range(n))
    return layers


def _column_steps(perm) -> list[MoveStep]:
    perm = [int(x) for x in perm]
    n = len(perm)
    if perm == list(range(n)):
        return []
    s = perm[0]
    if all(perm[i] == (i + s) % n for i in range(n)):
        return [MoveStep("GlobalColumnCyclicShift", s)]
    return route_1d(perm, "col")


def _row_steps(perm) -> list[MoveStep]:
    step = _row_step(perm)
    if step is None or step.kind == "GlobalRowCyclicShift":
        return [step] if step else []
    return route_1d(perm, "row")


def binary_shift_stages(shifts, l: int) -> list[tuple[int, tuple[int, ...]]]:
    """Split per-column cyclic shifts into batched power-of-two shifts.

    Returns ``(2^b, columns)`` for each bit ``b`` set in any shift, where
    ``columns`` are those whose shift has bit ``b``.
    """
    shifts = [int(s) % l for s in shifts]
    out = []
    for b in range(max(shifts, default=0).bit_length()):
        cols = tuple(i for i, s in enumerate(shifts) if (s >> b) & 1)
        if cols:
            out.append((1 << b, cols))
    return out


# ---------------------------------------------------------------- compilers

def _induced_product(f: Apm, layout: GridLayout):
    """Row and column maps of ``f`` on ``layout``, or None if not a product."""
    pos = layout.positions()
    img = pos[np.array(f.table())]
    rmap = np.full(layout.rows, -1)
    cmap = np.full(layout.cols, -1)
    for (r, c), (r2, c2) in zip(pos, img):
        if rmap[r] not in (-1, r2) or cmap[c] not in (-1, c2):
            return None
        rmap[r], cmap[c] = r2, c2
    return rmap, cmap


def compile_separable(apm: Apm, layout: GridLayout) -> MoveSchedule:
    """Row steps for the row component and column steps for the column
    component of ``apm`` on a CRT (or exponent-relabeled CRT) layout."""
    if layout.provenance not in ("crt", "exponent"):
        raise DomainError(f"separable compilation needs a CRT layout, got {layout.provenance!r}")
    if apm.modulus != layout.P:
        raise DomainError(f"APM on Z_{apm.modulus} but layout holds {layout.P} qubits")
    maps = _induced_product(apm, layout)
    if maps is None:
        raise DomainError(f"{apm} is not separable on this layout")
    rmap, cmap = maps
    steps = _row_steps(rmap) + _column_steps(cmap)
    return MoveSchedule(tuple(steps), layout, strategy="separable")


def compile_abelian(transition: Apm, structure: AbelianStructure, layout: GridLayout,
                    row_part: Apm | None = None) -> MoveSchedule:
    """Rigid shifts for a column transition inside the abelian subgroup.

    Emits one ``GlobalColumnCyclicShift`` for the first invariant factor and
    one row step per remaining factor (amounts may be 0). ``row_part``, an
    APM on ``Z_row_factor``, adds the small row permutation.
    """
    if layout.provenance != "exponent":
        raise DomainError("abelian compilation needs an exponent layout")
    exps = structure.exponents(transition)
    if exps is None:
        raise NotInSubgroup(f"{transition} is outside the abelian column subgroup")
    rf = layout.param["row_factor"]
    factors = structure.invariant_factors
    steps = [MoveStep("GlobalColumnCyclicShift", exps[0] % factors[0])] if factors else []
    outer = factors[1:]
    stride = 1
    for i, (s, n) in enumerate(zip(exps[1:], outer)):
        if i == len(outer) - 1:
            steps.append(MoveStep("GlobalRowCyclicShift", rf * stride * s))
        else:
            perm = []
            for row in range(layout.rows):
                r3, d = row % rf, row // rf
                digit = (d // stride) % n
                d += (((digit + s) % n) - digit) * stride
                perm.append(r3 + rf * d)
            steps.append(MoveStep("RowPermutation", perm=tuple(perm)))
        stride *= n
    if row_part is not None and not row_part.is_identity:
        perm = [rf * (row // rf) + row_part(row % rf) for row in range(layout.rows)]
        steps.append(MoveStep("RowPermutation", perm=tuple(perm)))
    return MoveSchedule(tuple(steps), layout, strategy="abelian")


def compile_generic(apm: Apm, m: int, l: int) -> MoveSchedule:
    """Log-depth schedule on the row-major layout with ``m`` columns.

    With ``i = y m + x`` the map sends ``x -> A x + B (mod m)`` and
    ``y -> A y + (A x + B) // m (mod l)``. Stage 1 routes columns, stage 2
    routes rows by ``y -> A y + base`` and stage 3 adds the residual
    column-dependent shift in batched powers of two. ``base`` is chosen to
    minimize the number of stage-3 batches.
    """
    P = m * l
    if apm.modulus != P:
        raise DomainError(f"APM on Z_{apm.modulus} does not match {m} x {l}")
    layout = row_major_layout(P, m)
    A, B = apm.a, apm.b
    xmap = [(A * x + B) % m for x in range(m)]
    carry = [((A * x + B) // m) % l for x in range(m)]
    shift_at = [0] * m
    for x in range(m):
        shift_at[xmap[x]] = carry[x]

    def cost(base):
        bits = 0
        for s in shift_at:
            bits |= (s - base) % l
        return bin(bits).count("1")

    base = min(range(l), key=lambda b: (cost(b), b))
    steps = _column_steps(xmap)
    steps += _row_steps([(A * y + base) % l for y in range(l)])
    for amount, cols in binary_shift_stages([(s - base) % l for s in shift_at], l):
        steps.append(MoveStep("ColumnSubsetCyclicShift", amount, lines=cols))
    return MoveSchedule(tuple(steps), layout, strategy="generic")


def generic_move_bound(m: int, l: int) -> int:
    lg = lambda n: math.ceil(math.log2(n)) if n > 1 else 0
    return 2 * lg(m) + 4 * lg(l)


def _check_ordering(ordering) -> tuple[int, ...]:
    ordering = tuple(int(i) for i in ordering)
    if sorted(ordering) != list(range(12)):
        raise DomainError("ordering must list each of the 12 maps exactly once")
    if any(i >= 6 for i in ordering[:6]):
        raise DomainError("all F maps must precede all G maps")
    return ordering


def transition_schedule(spec: CodeSpec, ordering, layout: GridLayout | None = None,
                        wrap: bool = False) -> list[MoveSchedule]:
    """One schedule per neighboring pair of the ordering, each compiled by the
    cheapest strategy that applies (abelian, then separable, then generic).
    With ``wrap`` the last-to-first transition of the next round is added."""
    from .search import map_name
    ordering = _check_ordering(ordering)
    layout = layout or default_layout(spec)
    if layout.P != spec.P:
        raise DomainError(f"layout holds {layout.P} qubits, spec has P = {spec.P}")
    structure = layout_structure(layout) if layout.provenance == "exponent" else None
    seq = list(ordering) + ([ordering[0]] if wrap else [])
    out = []
    for i, j in zip(seq, seq[1:]):
        T = compose(spec.maps[j], inverse(spec.maps[i]))
        label = f"{map_name(i)}->{map_name(j)}"
        sched = None
        if structure is not None:
            rf = layout.param["row_factor"]
            row_part, col_part = crt_split(T, rf, spec.P // rf)
            try:
                raw = compile_abelian(col_part, structure, layout, row_part)
                sched = _merge_rows(raw, layout)
            except NotInSubgroup:
                sched = None
        if sched is None and layout.provenance in ("crt", "exponent"):
            try:
                sched = compile_separable(T, layout)
            except DomainError:
                sched = None
        if sched is None:
            if layout.provenance != "row-major":
                raise DomainError(f"{label} has no product form on this layout; "
                                  "use a row-major layout for the generic fallback")
            sched = compile_generic(T, layout.cols, layout.rows)
        out.append(MoveSchedule(sched.steps, sched.source, strategy=sched.strategy, label=label))
    return out


def _merge_rows(schedule: MoveSchedule, layout: GridLayout) -> MoveSchedule:
    """Drop zero shifts and fuse all row work into a single row step."""
    cols = [s for s in schedule.steps if s.kind == "GlobalColumnCyclicShift" and s.amount % layout.cols]
    perm = np.arange(layout.rows)
    for s in schedule.steps:
        if s.kind == "GlobalColumnCyclicShift":
            continue
        nr, _, _ = s.maps(layout.rows, layout.cols)
        perm = nr[perm, 0]
    row = _row_step(perm)
    return MoveSchedule(tuple(cols + ([row] if row else [])), layout, strategy=schedule.strategy)
