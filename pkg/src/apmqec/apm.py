"""Affine permutations of Z_P and the small groups they generate.

An :class:`Apm` is the map ``x -> a*x + b (mod P)`` with ``gcd(a, P) == 1``.
Coefficients are always stored reduced into ``[0, P)`` so equality and
hashing are on canonical form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, reduce
from itertools import product
from typing import Iterable, Sequence

from .errors import CapacityError, DomainError, StructureError


@dataclass(frozen=True, order=True)
class Apm:
    a: int
    b: int
    modulus: int

    def __post_init__(self):
        if self.modulus < 1:
            raise DomainError(f"modulus must be positive, got {self.modulus}")
        object.__setattr__(self, "a", self.a % self.modulus)
        object.__setattr__(self, "b", self.b % self.modulus)
        if math.gcd(self.a, self.modulus) != 1:
            raise DomainError(
                f"{self.a}x+{self.b} is not a permutation of Z_{self.modulus}"
            )

    @classmethod
    def identity(cls, modulus: int) -> Apm:
        return cls(1, 0, modulus)

    def __call__(self, x: int) -> int:
        return evaluate(self, x)

    def __matmul__(self, other: Apm) -> Apm:
        return compose(self, other)

    def __repr__(self) -> str:
        return f"Apm({self.a}x+{self.b} mod {self.modulus})"

    @property
    def is_identity(self) -> bool:
        return self.a == 1 % self.modulus and self.b == 0

    def table(self) -> list[int]:
        """Images of 0..P-1."""
        return [(self.a * x + self.b) % self.modulus for x in range(self.modulus)]

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "modulus": self.modulus}

    @classmethod
    def from_json(cls, obj: dict, modulus: int | None = None) -> Apm:
        m = obj.get("modulus", modulus)
        if m is None:
            raise DomainError("APM JSON object needs a modulus")
        return cls(int(obj["a"]), int(obj["b"]), int(m))


def _check_same_modulus(f: Apm, g: Apm) -> None:
    if f.modulus != g.modulus:
        raise DomainError(f"modulus mismatch: {f.modulus} vs {g.modulus}")


def evaluate(f: Apm, x: int) -> int:
    if not 0 <= x < f.modulus:
        raise DomainError(f"point {x} outside Z_{f.modulus}")
    return (f.a * x + f.b) % f.modulus


def compose(f: Apm, g: Apm) -> Apm:
    """Return ``f o g``, i.e. ``x -> f(g(x))``."""
    _check_same_modulus(f, g)
    return Apm(f.a * g.a, f.a * g.b + f.b, f.modulus)


def inverse(f: Apm) -> Apm:
    ainv = pow(f.a, -1, f.modulus) if f.modulus > 1 else 0
    return Apm(ainv, -ainv * f.b, f.modulus)


def power(f: Apm, k: int) -> Apm:
    """``f`` composed with itself ``k`` times (negative ``k`` uses the inverse)."""
    if k < 0:
        return power(inverse(f), -k)
    result = Apm.identity(f.modulus)
    base = f
    while k:
        if k & 1:
            result = compose(base, result)
        base = compose(base, base)
        k >>= 1
    return result


def commutes(f: Apm, g: Apm) -> bool:
    """Offset condition ``(a_f - 1) b_g == (a_g - 1) b_f (mod M)``."""
    _check_same_modulus(f, g)
    return ((f.a - 1) * g.b - (g.a - 1) * f.b) % f.modulus == 0


def euler_phi(n: int) -> int:
    result, m, p = n, n, 2
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            result -= result // p
        p += 1
    if m > 1:
        result -= result // m
    return result


def affine_group_order(modulus: int) -> int:
    return modulus * euler_phi(modulus)


def order(f: Apm) -> int:
    """Smallest ``t >= 1`` with ``f^t = id``, found by iterated composition."""
    cap = affine_group_order(f.modulus)
    g = f
    for t in range(1, cap + 1):
        if g.is_identity:
            return t
        g = compose(f, g)
    raise CapacityError(f"order of {f} exceeds |Aff(Z_{f.modulus})| = {cap}")


@dataclass(frozen=True)
class OrbitDecomposition:
    orbits: tuple[tuple[int, ...], ...]
    representatives: tuple[int, ...]

    @property
    def lengths(self) -> list[int]:
        return [len(o) for o in self.orbits]

    def locate(self) -> dict[int, tuple[int, int]]:
        """Map each point to ``(orbit index, position in orbit)``."""
        return {x: (i, t) for i, orb in enumerate(self.orbits) for t, x in enumerate(orb)}


def orbit_decompose(f: Apm) -> OrbitDecomposition:
    seen = [False] * f.modulus
    orbits = []
    for start in range(f.modulus):
        if seen[start]:
            continue
        cycle = [start]
        seen[start] = True
        x = f(start)
        while x != start:
            cycle.append(x)
            seen[x] = True
            x = f(x)
        orbits.append(tuple(cycle))
    return OrbitDecomposition(tuple(orbits), tuple(o[0] for o in orbits))


def orbit_shift(m: Apm, a: Apm) -> list[tuple[int, int]]:
    """For ``m`` commuting with ``a``, return ``(target orbit, shift)`` per
    orbit of ``a`` such that ``m(a^t g_i) = a^(t + s_i) g_j`` for all ``t``.

    Raises :class:`StructureError` if the image of an orbit is not a single
    orbit traversed with a constant offset.
    """
    dec = orbit_decompose(a)
    where = dec.locate()
    out = []
    for orb in dec.orbits:
        j0, s0 = where[m(orb[0])]
        length = len(orb)
        for t, x in enumerate(orb):
            j, pos = where[m(x)]
            if j != j0 or (pos - t - s0) % length:
                raise StructureError(f"{m} does not map orbits of {a} rigidly")
        out.append((j0, s0))
    return out


def crt_split(f: Apm, m: int, l: int) -> tuple[Apm, Apm]:
    if m * l != f.modulus:
        raise DomainError(f"{m}*{l} != {f.modulus}")
    if math.gcd(m, l) != 1:
        raise DomainError(f"factors {m} and {l} are not coprime")
    return Apm(f.a % m, f.b % m, m), Apm(f.a % l, f.b % l, l)


def crt_combine(fm: Apm, fl: Apm) -> Apm:
    """Inverse of :func:`crt_split`."""
    m, l = fm.modulus, fl.modulus
    if math.gcd(m, l) != 1:
        raise DomainError(f"factors {m} and {l} are not coprime")
    P = m * l

    def lift(u: int, v: int) -> int:
        # unique w mod P with w = u (mod m), w = v (mod l)
        if m == 1:
            return v % P
        return (u + m * ((v - u) * pow(m, -1, l))) % P if l > 1 else u % P

    return Apm(lift(fm.a, fl.a), lift(fm.b, fl.b), P)


@dataclass(frozen=True)
class ApmGroup:
    elements: frozenset[Apm]
    generators: tuple[Apm, ...]
    modulus: int

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, f: Apm) -> bool:
        return f in self.elements

    def sorted_elements(self) -> list[Apm]:
        return sorted(self.elements)

    @property
    def is_abelian(self) -> bool:
        els = self.sorted_elements()
        return all(commutes(x, y) for i, x in enumerate(els) for y in els[i + 1:])

    def orbit(self, x: int) -> set[int]:
        return {g(x) for g in self.elements}


def group_closure(generators: Sequence[Apm], cap: int = 100_000,
                  modulus: int | None = None) -> ApmGroup:
    gens = tuple(generators)
    if gens:
        modulus = gens[0].modulus
        for g in gens:
            if g.modulus != modulus:
                raise DomainError("generators must share a modulus")
    elif modulus is None:
        raise DomainError("modulus required for an empty generator list")
    identity = Apm.identity(modulus)
    elements = {identity}
    frontier = [identity]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = compose(g, x)
                if y not in elements:
                    elements.add(y)
                    if len(elements) > cap:
                        raise CapacityError(f"group closure exceeds cap {cap}")
                    nxt.append(y)
        frontier = nxt
    return ApmGroup(frozenset(elements), gens, modulus)


@dataclass(frozen=True)
class AbelianStructure:
    subgroup: ApmGroup
    invariant_factors: tuple[int, ...]
    cyclic_generators: tuple[Apm, ...]

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)

    @cached_property
    def _exponent_table(self) -> dict[Apm, tuple[int, ...]]:
        table = {}
        for exps in product(*(range(n) for n in self.invariant_factors)):
            table[self.element(exps)] = exps
        return table

    def element(self, exponents: Sequence[int]) -> Apm:
        """``g_1^e_1 o ... o g_r^e_r``."""
        out = Apm.identity(self.subgroup.modulus)
        for g, e in zip(self.cyclic_generators, exponents):
            out = compose(out, power(g, e))
        return out

    def exponents(self, f: Apm) -> tuple[int, ...] | None:
        """Exponent vector of ``f`` or ``None`` if ``f`` is not in the subgroup."""
        return self._exponent_table.get(f)


def _abelian_basis(elements: list[Apm]) -> tuple[tuple[int, ...], tuple[Apm, ...]]:
    """Greedy max-order basis of a finite abelian group with backtracking.

    Elements are tried by decreasing order, ties broken by ``(a, b)``, so the
    result is deterministic.
    """
    target = len(elements)
    modulus = elements[0].modulus
    orders = {g: order(g) for g in elements}
    ranked = sorted(elements, key=lambda g: (-orders[g], g.a, g.b))

    def cyclic(g: Apm) -> list[Apm]:
        out, x = [], Apm.identity(modulus)
        for _ in range(orders[g]):
            out.append(x)
            x = compose(g, x)
        return out

    def search(span: frozenset[Apm], factors: tuple[int, ...],
               gens: tuple[Apm, ...]):
        if len(span) == target:
            return factors, gens
        bound = factors[-1] if factors else None
        for g in ranked:
            n = orders[g]
            if n == 1 or (bound is not None and n > bound):
                continue
            powers = cyclic(g)
            if any(p in span for p in powers[1:]):
                continue
            new_span = frozenset(compose(p, s) for p in powers for s in span)
            found = search(new_span, factors + (n,), gens + (g,))
            if found is not None:
                return found
        return None

    result = search(frozenset({Apm.identity(modulus)}), (), ())
    if result is None:
        raise StructureError("no cyclic decomposition found")
    return result


def abelian_structure(group: ApmGroup) -> AbelianStructure:
    if not group.is_abelian:
        raise StructureError("group is not abelian")
    if len(group) == 1:
        return AbelianStructure(group, (), ())
    factors, gens = _abelian_basis(group.sorted_elements())
    return AbelianStructure(group, factors, gens)


def max_abelian_subgroup(group: ApmGroup) -> AbelianStructure:
    """A maximum-order abelian subgroup with its cyclic decomposition.

    Every abelian subgroup either sits in the centre or in the centralizer of
    one of its non-central elements, so recursing over centralizers of
    non-central elements finds all maxima. Among equal-order maxima the one
    whose sorted element list is lexicographically smallest wins.
    """
    M = group.modulus

    def key(f: Apm) -> tuple[int, int]:
        return (f.a, f.b)

    memo: dict[frozenset, list[frozenset]] = {}

    def search(H: frozenset) -> list[frozenset]:
        if H in memo:
            return memo[H]
        els = sorted(H, key=key)
        centre = [x for x in els if all(commutes(x, y) for y in els)]
        if len(centre) == len(els):
            memo[H] = [H]
            return memo[H]
        found: list[frozenset] = []
        central = set(centre)
        for x in els:
            if x in central:
                continue
            found.extend(search(frozenset(y for y in els if commutes(x, y))))
        best = max(len(c) for c in found)
        memo[H] = list({c for c in found if len(c) == best})
        return memo[H]

    candidates = search(group.elements)
    chosen = min(candidates, key=lambda c: [key(x) for x in sorted(c, key=key)])
    sub = ApmGroup(frozenset(chosen), tuple(sorted(chosen)), M)
    return abelian_structure(sub)


def exponent_relabeling(structure: AbelianStructure) -> dict[tuple[int, ...], int]:
    """Map each exponent vector ``e`` to ``g_1^e_1 ... g_r^e_r (0)``.

    Only a bijection when the subgroup acts regularly on Z_M.
    """
    sub = structure.subgroup
    M = sub.modulus
    if len(sub) != M or len(sub.orbit(0)) != M:
        raise StructureError(
            f"subgroup of order {len(sub)} does not act regularly on Z_{M}"
        )
    sigma = {}
    for exps in product(*(range(n) for n in structure.invariant_factors)):
        sigma[exps] = structure.element(exps)(0)
    if len(set(sigma.values())) != M:
        raise StructureError("exponent relabeling is not injective")
    return sigma


def lcm(values: Iterable[int]) -> int:
    return reduce(math.lcm, values, 1)
