import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from apmqec.apm import (Apm, AbelianStructure, compose, commutes, crt_combine, crt_split,
                        evaluate, exponent_relabeling, group_closure, inverse,
                        max_abelian_subgroup, orbit_decompose, orbit_shift, order, power)
from apmqec.errors import CapacityError, DomainError, StructureError
from apmqec.search import column_group, reference_apm


@st.composite
def apms(draw, modulus=None):
    P = modulus or draw(st.integers(1, 256))
    units = [a for a in range(P) if math.gcd(a, P) == 1] or [0]
    return Apm(draw(st.sampled_from(units)), draw(st.integers(0, P - 1)), P)


@st.composite
def apm_pairs(draw, n=2):
    P = draw(st.integers(1, 200))
    return [draw(apms(P)) for _ in range(n)]


def test_evaluate_examples():
    assert evaluate(Apm(61, 15, 96), 0) == 15
    assert evaluate(Apm(5, 41, 96), 20) == (5 * 20 + 41) % 96 == 45
    assert evaluate(Apm(1, 0, 96), 37) == 37


def test_evaluate_out_of_range():
    with pytest.raises(DomainError):
        evaluate(Apm(5, 41, 96), 96)
    with pytest.raises(DomainError):
        evaluate(Apm(5, 41, 96), -1)


def test_non_unit_multiplier_rejected():
    with pytest.raises(DomainError):
        Apm(2, 0, 96)


def test_canonical_form():
    assert Apm(-1, 43, 64) == Apm(63, 43, 64)
    assert Apm(97, -1, 96) == Apm(1, 95, 96)


def test_compose_example_matches_pointwise():
    f, g = Apm(5, 41, 96), Apm(61, 15, 96)
    h = compose(f, g)
    assert h == Apm(17, 20, 96)
    assert all(h(x) == f(g(x)) for x in range(96))


def test_compose_identity_and_inverse():
    g = Apm(61, 15, 96)
    assert compose(Apm.identity(96), g) == g
    assert compose(g, inverse(g)).is_identity


def test_compose_modulus_mismatch():
    with pytest.raises(DomainError):
        compose(Apm(1, 0, 96), Apm(1, 0, 64))
    with pytest.raises(DomainError):
        commutes(Apm(1, 0, 96), Apm(1, 0, 64))


def test_inverse_examples():
    assert inverse(Apm(5, 41, 96)) == Apm(77, 11, 96)
    assert compose(Apm(5, 41, 96), Apm(77, 11, 96)).is_identity
    assert inverse(Apm.identity(96)).is_identity
    g1 = Apm(63, 43, 64)
    assert inverse(g1) == g1 and compose(g1, g1).is_identity


def test_commutes_examples():
    g1, g2 = Apm(63, 43, 64), Apm(13, 30, 64)
    assert commutes(g1, g2)
    assert commutes(Apm(5, 41, 96), Apm.identity(96))
    f0, f3 = Apm(5, 41, 96), Apm(1, 0, 96)
    assert commutes(f0, f3) == (compose(f0, f3).table() == compose(f3, f0).table())


def test_orbit_examples():
    assert orbit_decompose(Apm.identity(96)).lengths == [1] * 96
    assert orbit_decompose(Apm(13, 30, 64)).lengths == [32, 32]


def test_reference_has_three_orbits_of_length_32(specs):
    ref = reference_apm(specs[96])
    assert sorted(orbit_decompose(ref).lengths) == [32, 32, 32]


def test_order_examples():
    assert order(Apm(13, 30, 64)) == 32
    assert order(Apm(-1, 43, 64)) == 2
    assert order(Apm.identity(64)) == 1


def test_crt_split_examples():
    row, col = crt_split(Apm(61, 15, 96), 3, 32)
    assert row.is_identity and col == Apm(29, 15, 32)
    r, c = crt_split(Apm.identity(96), 3, 32)
    assert r.is_identity and c.is_identity
    f0 = Apm(5, 41, 96)
    r, c = crt_split(f0, 3, 32)
    assert all(f0(x) % 3 == r(x % 3) and f0(x) % 32 == c(x % 32) for x in range(96))


def test_crt_split_needs_coprime():
    with pytest.raises(DomainError):
        crt_split(Apm(5, 41, 96), 4, 24)


def test_group_closure_examples(specs):
    comps = [Apm(m.a % 64, m.b % 64, 64) for m in specs[192].maps]
    assert len(group_closure(comps, modulus=64)) == 64
    assert len(group_closure([Apm(13, 30, 64)])) == 32
    trivial = group_closure([], modulus=64)
    assert len(trivial) == 1 and Apm.identity(64) in trivial


def test_group_closure_cap():
    with pytest.raises(CapacityError):
        group_closure([Apm(5, 1, 96), Apm(7, 3, 96)], cap=10)


def test_max_abelian_examples(specs):
    st96 = max_abelian_subgroup(column_group(specs[96]))
    assert len(st96.subgroup) == 32 and st96.invariant_factors == (32,)
    st192 = max_abelian_subgroup(column_group(specs[192]))
    assert len(st192.subgroup) == 64 and st192.invariant_factors == (32, 2)
    cyc = group_closure([Apm(13, 30, 64)])
    assert max_abelian_subgroup(cyc).subgroup.elements == cyc.elements


def test_exponent_relabeling_examples(specs):
    st96 = max_abelian_subgroup(column_group(specs[96]))
    sigma = exponent_relabeling(st96)
    gamma = st96.cyclic_generators[0]
    assert sorted(sigma.values()) == list(range(32))
    assert all(sigma[(k,)] == power(gamma, k)(0) for k in range(32))
    st192 = max_abelian_subgroup(column_group(specs[192]))
    assert sorted(exponent_relabeling(st192).values()) == list(range(64))
    trivial = max_abelian_subgroup(group_closure([], modulus=1))
    assert exponent_relabeling(trivial) == {(): 0}


def test_exponent_relabeling_rejects_non_regular(specs):
    st384 = max_abelian_subgroup(column_group(specs[384]))
    with pytest.raises(StructureError):
        exponent_relabeling(st384)


def test_paper_generators_of_p192_column_group(specs):
    g2, g1 = Apm(13, 30, 64), Apm(-1, 43, 64)
    G = column_group(specs[192])
    assert g1 in G and g2 in G and commutes(g1, g2)
    assert order(g2) == 32 and order(g1) == 2
    # g1 swaps the two g2 orbits
    orbits = [set(o) for o in orbit_decompose(g2).orbits]
    assert {g1(x) for x in orbits[0]} == orbits[1]


# ------------------------------------------------------------- properties

@given(apm_pairs(3))
def test_compose_associative(fs):
    f, g, h = fs
    assert compose(f, compose(g, h)) == compose(compose(f, g), h)


@given(apms())
def test_inverse_laws(f):
    assert compose(f, inverse(f)).is_identity and compose(inverse(f), f).is_identity
    assert compose(f, Apm.identity(f.modulus)) == f


@given(apm_pairs(2))
def test_offset_condition_matches_composition(fs):
    f, g = fs
    assert commutes(f, g) == (compose(f, g).table() == compose(g, f).table())


@given(apms())
def test_orbits_partition_and_divide_order(f):
    dec = orbit_decompose(f)
    pts = [x for o in dec.orbits for x in o]
    assert sorted(pts) == list(range(f.modulus))
    for o in dec.orbits:
        assert all(f(o[i]) == o[(i + 1) % len(o)] for i in range(len(o)))
    assert all(order(f) % n == 0 for n in dec.lengths)
    assert order(f) == math.lcm(*dec.lengths)


@given(st.integers(1, 16), st.integers(1, 16), st.data())
def test_crt_roundtrip(m, l, data):
    if math.gcd(m, l) != 1:
        return
    f = data.draw(apms(m * l))
    r, c = crt_split(f, m, l)
    assert crt_combine(r, c) == f


@given(st.data())
def test_orbit_shift_lemma(data):
    P = data.draw(st.integers(2, 120))
    A = data.draw(apms(P))
    comm = [m for m in (data.draw(apms(P)) for _ in range(30)) if commutes(m, A)]
    dec = orbit_decompose(A)
    for M in comm:
        for i, (j, s) in enumerate(orbit_shift(M, A)):
            src, dst = dec.orbits[i], dec.orbits[j]
            assert {M(x) for x in src} == set(dst)
            # uniform shift along the orbit
            for t, x in enumerate(src):
                assert M(x) == dst[(t + s) % len(dst)]


def test_abelian_structure_invariants(specs):
    for P in (96, 192, 384):
        stc = max_abelian_subgroup(column_group(specs[P]))
        els = list(stc.subgroup.elements)
        assert all(commutes(a, b) for a, b in itertools.combinations(els, 2))
        assert math.prod(stc.invariant_factors) == len(els)
        assert isinstance(stc, AbelianStructure)
