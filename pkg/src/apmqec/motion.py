"""Kinematic timing of AOD move schedules and syndrome-extraction rounds.

Units: micrometers and microseconds throughout; the acceleration is given
in m/s^2 and converted once (1 m/s^2 = 1e-6 um/us^2).

Round model. Data blocks of ``rows x cols`` atoms are stacked vertically,
12 per code; each ancilla block sits ``ancilla_offset`` to the side of the
data block it currently talks to. X-ancilla block ``r`` and Z-ancilla block
``r`` occupy fixed stack slots ``r`` and ``6 + r``; between gate layers the
data blocks are permuted so the right data block sits under each ancilla
block, while the ancilla atoms of every block apply the in-block transition
compiled by :mod:`apmqec.aod`. Ancillas lift off by ``ancilla_offset``
before an in-block move and set down afterwards so they never pass through
data traps. Each step lasts the move time of its farthest-moving atom; the
two halves of a shift or swap run on the two AODs of a pair. With two AOD
pairs the ancilla and data work of a transition run one after the other,
with four they overlap.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .aod import (GridLayout, MoveSchedule, MoveStep, default_layout, frames,
                  transition_schedule)
from .codes import CodeSpec
from .errors import DomainError

UM_PER_US2 = 1e-6  # 1 m/s^2 in um/us^2


@dataclass(frozen=True)
class MotionConfig:
    acceleration: float = 5500.0  # m/s^2
    data_pitch: float = 12.0  # um
    ancilla_offset: float = 2.0  # um
    cz_time: float = 1.0  # us
    measurement_time: float = 500.0  # us
    n_aod_pairs: int = 2

    def __post_init__(self):
        for name in ("acceleration", "data_pitch", "ancilla_offset", "cz_time", "measurement_time"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.n_aod_pairs not in (2, 4):
            raise DomainError("n_aod_pairs must be 2 or 4")

    @property
    def accel(self) -> float:
        return self.acceleration * UM_PER_US2

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def move_time(distance: float, config: MotionConfig = MotionConfig()) -> float:
    """Accelerate over the first half and decelerate over the second:
    ``t = 2 sqrt(d / a)``."""
    if distance < 0:
        raise DomainError("distance must be nonnegative")
    return 2.0 * math.sqrt(distance / config.accel)


def step_distance(step: MoveStep, layout: GridLayout, pitch: float) -> float:
    """Straight-line displacement of the farthest-moving atom."""
    sched = MoveSchedule((step,), layout)
    before, after = frames(layout, sched)
    return float(np.sqrt((((after - before) * pitch) ** 2).sum(axis=1)).max())


@dataclass(frozen=True)
class Lane:
    """Work on one set of atoms during a transition. ``lift`` adds a lift-off
    and a set-down of ``ancilla_offset`` around a nonempty schedule."""

    schedule: MoveSchedule
    name: str = ""
    lift: bool = False


@dataclass
class StepTiming:
    transition: int
    lane: str
    label: str
    kind: str
    distance: float
    duration: float


@dataclass
class TimingReport:
    steps: list[StepTiming] = field(default_factory=list)
    transitions: list[float] = field(default_factory=list)
    overlaps: list[list[list[str]]] = field(default_factory=list)
    move_time: float = 0.0
    gate_time: float = 0.0
    measurement_exposed: float = 0.0
    n_aod_pairs: int = 2
    footprint: tuple[float, float] | None = None

    @property
    def total(self) -> float:
        return self.move_time + self.gate_time + self.measurement_exposed

    def lane_chains(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for s in self.steps:
            out[s.lane] = out.get(s.lane, 0.0) + s.duration
        return out

    def to_json(self) -> dict:
        out = {"total_us": self.total, "move_us": self.move_time, "gate_us": self.gate_time,
               "measurement_exposed_us": self.measurement_exposed,
               "n_aod_pairs": self.n_aod_pairs, "transitions_us": self.transitions,
               "overlaps": self.overlaps}
        if self.footprint:
            out["footprint_um"] = list(self.footprint)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["transition", "lane", "label", "kind", "distance_um", "duration_us"])
        for s in self.steps:
            w.writerow([s.transition, s.lane, s.label, s.kind, f"{s.distance:.6g}", f"{s.duration:.6g}"])
        return buf.getvalue()


def _makespan(times: list[float], machines: int) -> tuple[float, list[list[int]]]:
    """Exact minimum makespan for a handful of jobs."""
    best, plan = math.inf, []
    for assign in itertools.product(range(machines), repeat=len(times)):
        loads = [0.0] * machines
        for t, a in zip(times, assign):
            loads[a] += t
        if max(loads, default=0.0) < best:
            best = max(loads, default=0.0)
            plan = [[i for i, a in enumerate(assign) if a == k] for k in range(machines)]
    return (best if times else 0.0), plan


def schedule_duration(transitions, config: MotionConfig = MotionConfig(),
                      gate_layers: int | None = None, measure: bool = False) -> TimingReport:
    """Time a sequence of transitions.

    Each transition is a :class:`MoveSchedule`, a :class:`Lane` or a list
    of lanes acting on disjoint atoms. Steps within a lane are serial. Two
    AOD pairs run the lanes of a transition one after another; four run up
    to two lanes at once. One CZ layer follows every transition unless
    ``gate_layers`` says otherwise. With ``measure`` the measurement runs
    behind the next round's moves and only its excess is charged.
    """
    rep = TimingReport(n_aod_pairs=config.n_aod_pairs)
    for t, item in enumerate(transitions):
        lanes = [item] if isinstance(item, (MoveSchedule, Lane)) else list(item)
        lanes = [x if isinstance(x, Lane) else Lane(x, x.label or f"lane{i}")
                 for i, x in enumerate(lanes)]
        times = []
        for lane in lanes:
            sched = lane.schedule
            total = 0.0
            for step in sched.steps:
                d = step_distance(step, sched.source, config.data_pitch)
                dt = move_time(d, config)
                rep.steps.append(StepTiming(t, lane.name, sched.label, step.kind, d, dt))
                total += dt
            if lane.lift and sched.steps:
                dt = move_time(config.ancilla_offset, config)
                for kind in ("lift", "set-down"):
                    rep.steps.append(StepTiming(t, lane.name, sched.label, kind,
                                                config.ancilla_offset, dt))
                total += 2 * dt
            times.append(total)
        if config.n_aod_pairs == 2:
            span, plan = sum(times), [[i] for i in range(len(lanes))]
        else:
            span, plan = _makespan(times, 2)
        rep.transitions.append(span)
        rep.overlaps.append([[lanes[i].name for i in grp] for grp in plan if grp])
    rep.move_time = sum(rep.transitions)
    layers = len(rep.transitions) if gate_layers is None else gate_layers
    rep.gate_time = config.cz_time * layers
    if measure:
        rep.measurement_exposed = max(0.0, config.measurement_time - rep.move_time)
    return rep


# ---------------------------------------------------------------- full round

def footprint(block_rows: int, cols: int, config: MotionConfig = MotionConfig(),
              blocks: int = 12) -> tuple[float, float]:
    """Width and height of the data array with ancillas alongside."""
    width = (cols - 1) * config.data_pitch + config.ancilla_offset
    height = (blocks * block_rows - 1) * config.data_pitch
    return width, height


def _arrangement(index: int) -> list[int]:
    """Data block under each of the 12 ancilla slots at gate step ``index``.

    Left blocks are 0..5, right blocks 6..11. At F_i X-ancilla r meets left
    block r+i and Z-ancilla r meets right block r-i; at G_j X-ancilla r
    meets right block r+j and Z-ancilla r meets left block r-j.
    """
    i = index % 6
    if index < 6:
        return [(r + i) % 6 for r in range(6)] + [6 + (r - i) % 6 for r in range(6)]
    return [6 + (r + i) % 6 for r in range(6)] + [(r - i) % 6 for r in range(6)]


def stack_layout(block_rows: int, cols: int, blocks: int = 12) -> GridLayout:
    rows = block_rows * blocks
    return GridLayout(rows, cols, tuple((i // cols, i % cols) for i in range(rows * cols)),
                      "custom", (("block_rows", block_rows), ("blocks", blocks)))


def data_block_schedules(ordering, block_rows: int, cols: int, wrap: bool = True) -> list[MoveSchedule]:
    """One row permutation of the data stack per transition."""
    from .search import map_name
    layout = stack_layout(block_rows, cols)
    seq = list(ordering) + ([ordering[0]] if wrap else [])
    out = []
    for a, b in zip(seq, seq[1:]):
        before, after = _arrangement(a), _arrangement(b)
        dest = {blk: slot for slot, blk in enumerate(after)}
        perm = []
        for row in range(layout.rows):
            slot, t = divmod(row, block_rows)
            perm.append(dest[before[slot]] * block_rows + t)
        steps = () if perm == list(range(layout.rows)) else (MoveStep("RowPermutation", perm=tuple(perm)),)
        out.append(MoveSchedule(steps, layout, strategy="block", label=f"{map_name(a)}->{map_name(b)}"))
    return out


def se_round_time(spec: CodeSpec, ordering=None, config: MotionConfig = MotionConfig(),
                  layout: GridLayout | None = None) -> TimingReport:
    """End-to-end estimate of one syndrome-extraction round: 12 transitions
    (including the wrap into the next round), 12 CZ layers and the
    measurement overlapped with the next round's moves."""
    from .search import DEFAULT_ORDERING
    ordering = DEFAULT_ORDERING if ordering is None else ordering
    layout = layout or default_layout(spec)
    ancilla = transition_schedule(spec, ordering, layout, wrap=True)
    data = data_block_schedules(ordering, layout.rows, layout.cols)
    items = [[Lane(a, "ancilla", lift=True), Lane(d, "data")] for a, d in zip(ancilla, data)]
    rep = schedule_duration(items, config, gate_layers=12, measure=True)
    rep.footprint = footprint(layout.rows, layout.cols, config)
    return rep
