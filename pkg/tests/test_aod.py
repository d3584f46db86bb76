import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from apmqec.aod import (STEP_KINDS, MoveSchedule, MoveStep, apply_schedule, binary_shift_stages,
                        compile_abelian, compile_generic, compile_separable, crt_layout,
                        default_layout, exponent_layout, generic_move_bound, is_separable,
                        layout_structure, realizes, route_1d, row_major_layout,
                        transition_schedule)
from apmqec.apm import Apm, compose, crt_combine, crt_split, inverse, max_abelian_subgroup
from apmqec.codes import CodeSpec
from apmqec.errors import CollisionError, DomainError, NotInSubgroup
from apmqec.search import DEFAULT_ORDERING, column_group


def units(P):
    return [a for a in range(P) if math.gcd(a, P) == 1]


@st.composite
def grid_apms(draw):
    m = draw(st.integers(1, 16))
    l = draw(st.integers(1, 64))
    P = m * l
    return Apm(draw(st.sampled_from(units(P))), draw(st.integers(0, P - 1)), P), m, l


def test_crt_layout_examples():
    lay = crt_layout(96, 3, 32)
    assert lay.placement[35] == (2, 3)
    small = crt_layout(6, 2, 3)
    assert sorted(small.placement) == [(r, c) for r in range(2) for c in range(3)]
    with pytest.raises(DomainError):
        crt_layout(96, 4, 24)


def test_compile_separable_examples():
    lay = crt_layout(96, 3, 32)
    g0 = Apm(61, 15, 96)
    sched = compile_separable(g0, lay)
    assert realizes(sched, g0)
    assert all(s.kind != "RowPermutation" and s.axis != "row" for s in sched.steps)
    assert not any("Row" in s.kind for s in sched.steps)
    assert compile_separable(Apm.identity(96), lay).steps == ()
    with pytest.raises(DomainError):
        compile_separable(g0, row_major_layout(96, 3))


def test_compile_separable_random():
    rng = np.random.default_rng(0)
    lay = crt_layout(96, 3, 32)
    for _ in range(30):
        f = Apm(int(rng.choice(units(96))), int(rng.integers(96)), 96)
        assert realizes(compile_separable(f, lay), f)


def test_compile_abelian_p96(specs):
    spec = specs[96]
    lay = default_layout(spec)
    assert lay.provenance == "exponent" and (lay.rows, lay.cols) == (3, 32)
    structure = layout_structure(lay)
    M = 32
    for m in spec.maps:
        _, col = crt_split(m, 3, M)
        sched = compile_abelian(col, structure, lay)
        assert sched.kinds() == ["GlobalColumnCyclicShift"]
    ident = compile_abelian(Apm.identity(M), structure, lay)
    assert [s.amount for s in ident.steps] == [0]


def test_compile_abelian_p192(specs):
    spec = specs[192]
    lay = default_layout(spec)
    assert (lay.rows, lay.cols) == (6, 32)
    structure = layout_structure(lay)
    for m in spec.maps:
        _, col = crt_split(m, 3, 64)
        sched = compile_abelian(col, structure, lay)
        assert sched.kinds() == ["GlobalColumnCyclicShift", "GlobalRowCyclicShift"]
        assert realizes(sched, crt_combine(Apm.identity(3), col))
    ident = compile_abelian(Apm.identity(64), structure, lay)
    assert [s.amount for s in ident.steps] == [0, 0]


def test_compile_abelian_outside_subgroup(specs):
    spec = specs[96]
    lay = default_layout(spec)
    with pytest.raises(NotInSubgroup):
        compile_abelian(Apm(3, 0, 32), layout_structure(lay), lay)


def test_binary_shift_stages_example():
    stages = binary_shift_stages([1, 7, 9, 5, 4, 2], 16)
    assert [a for a, _ in stages] == [1, 2, 4, 8]
    assert stages[0][1] == (0, 1, 2, 3)
    assert stages[3][1] == (2,)


def test_compile_generic_examples():
    assert compile_generic(Apm.identity(96), 3, 32).steps == ()
    cyc = compile_generic(Apm(1, 5, 96), 3, 32)
    assert realizes(cyc, Apm(1, 5, 96)) and cyc.moves <= 6


def test_generic_twenty_on_z96():
    rng = np.random.default_rng(1)
    for _ in range(20):
        f = Apm(int(rng.choice(units(96))), int(rng.integers(96)), 96)
        for m in (3, 8, 12):
            sched = compile_generic(f, m, 96 // m)
            assert realizes(sched, f)
            assert sched.moves <= generic_move_bound(m, 96 // m)


@given(grid_apms())
def test_generic_bound_and_equivalence(args):
    f, m, l = args
    sched = compile_generic(f, m, l)
    assert np.array_equal(apply_schedule(sched.source, sched), f.table())
    assert sched.moves <= generic_move_bound(m, l)
    assert all(is_separable(s, l, m) for s in sched.steps)


@given(st.permutations(range(13)))
def test_route_1d(perm):
    layers = route_1d(perm, "col")
    assert len(layers) <= math.ceil(math.log2(13))
    at = list(range(13))
    for layer in layers:
        at = [layer.perm[i] for i in at]
    assert at == list(perm)


def test_empty_schedule_is_identity():
    lay = crt_layout(96, 3, 32)
    assert np.array_equal(apply_schedule(lay, MoveSchedule((), lay)), np.arange(96))


def test_collision():
    lay = crt_layout(6, 2, 3)
    shift = MoveStep("RowSubsetCyclicShift", 1, lines=(0,))
    assert np.array_equal(np.sort(apply_schedule(lay, MoveSchedule((shift,), lay))), np.arange(6))

    class Squash(MoveStep):
        # every atom lands in column 0
        def maps(self, rows, cols):
            r, c = np.indices((rows, cols))
            return r, np.zeros_like(c), np.ones((rows, cols), bool)

    with pytest.raises(CollisionError):
        apply_schedule(lay, MoveSchedule((Squash("GlobalColumnCyclicShift"),), lay))


def test_step_validation_and_separability():
    with pytest.raises(DomainError):
        MoveStep("Teleport")
    with pytest.raises(DomainError):
        MoveStep("OneDPermutationLayer", perm=(2, 1, 0), axis="col")
    steps = [MoveStep("GlobalColumnCyclicShift", 1), MoveStep("GlobalRowCyclicShift", 1),
             MoveStep("RowPermutation", perm=(1, 0, 3, 2)),
             MoveStep("ColumnSubsetCyclicShift", 1, lines=(0, 2)),
             MoveStep("RowSubsetCyclicShift", 2, lines=(1,)),
             MoveStep("OneDPermutationLayer", perm=(0, 2, 1), axis="col")]
    assert {s.kind for s in steps} == set(STEP_KINDS)
    for step in steps:
        assert is_separable(step, 4, 3)
        assert MoveStep.from_json(step.to_json()) == step


def test_transition_schedule_p96(specs):
    scheds = transition_schedule(specs[96], DEFAULT_ORDERING)
    assert len(scheds) == 11
    T = lambda i, j: compose(specs[96].maps[j], inverse(specs[96].maps[i]))
    seq = DEFAULT_ORDERING
    for s, (i, j) in zip(scheds, zip(seq, seq[1:])):
        assert s.strategy == "abelian"
        cols = [k for k in s.kinds() if k == "GlobalColumnCyclicShift"]
        rows = [k for k in s.kinds() if k != "GlobalColumnCyclicShift"]
        assert len(cols) <= 1 and len(rows) <= 1
        assert realizes(s, T(i, j))


def test_transition_schedule_p192(specs):
    scheds = transition_schedule(specs[192], DEFAULT_ORDERING)
    kinds = {k for s in scheds for k in s.kinds()}
    assert kinds <= {"GlobalColumnCyclicShift", "GlobalRowCyclicShift", "RowPermutation"}
    assert all(s.source.rows == 6 and s.source.cols == 32 for s in scheds)
    for s in scheds:
        assert s.moves <= 4


@pytest.mark.parametrize("P", [96, 192, 384])
def test_transition_schedules_realize_on_all_layouts(specs, P):
    spec = specs[P]
    seq = list(DEFAULT_ORDERING) + [DEFAULT_ORDERING[0]]
    for lay in (default_layout(spec), crt_layout(P, 3, P // 3), row_major_layout(P, 3)):
        scheds = transition_schedule(spec, DEFAULT_ORDERING, lay, wrap=True)
        assert len(scheds) == 12
        for s, (i, j) in zip(scheds, zip(seq, seq[1:])):
            assert realizes(s, compose(spec.maps[j], inverse(spec.maps[i])))


def test_p384_falls_back(specs):
    lay = default_layout(specs[384])
    assert lay.provenance == "crt"
    assert {s.strategy for s in transition_schedule(specs[384], DEFAULT_ORDERING)} == {"separable"}


def test_identity_spec_empty():
    spec = CodeSpec(12, tuple([Apm.identity(12)] * 6), tuple([Apm.identity(12)] * 6))
    lay = crt_layout(12, 3, 4)
    assert all(s.steps == () for s in transition_schedule(spec, DEFAULT_ORDERING, lay))


def test_invalid_ordering(specs):
    with pytest.raises(DomainError):
        transition_schedule(specs[96], [6, 0, 1, 2, 3, 4, 5, 7, 8, 9, 10, 11])
    with pytest.raises(DomainError):
        transition_schedule(specs[96], list(range(11)))


def test_exponent_layout_p96(specs):
    st96 = max_abelian_subgroup(column_group(specs[96]))
    lay = exponent_layout(96, st96)
    assert lay.placement[0] == (0, 0)
    assert lay.to_json()["provenance"] == "exponent"
