"""Finitely generated abelian groups Z^r + Z/m_1 + ... + Z/m_s.

Elements are plain coordinate tuples (ints for ambient groups, Fractions
for the rational vector groups used by the lattice layer); the group
object carries the arithmetic.  Torsion coordinates are always stored
reduced into [0, m_i).  All operations are pure and every set is
deduplicated and kept in lexicographic coordinate order, which fixes
serialization and witness determinism.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import CapExceededError, GroupMismatchError, PreconditionError

Coords = tuple  # coordinate tuple of an element


@dataclass(frozen=True)
class AmbientGroup:
    """The group Z^free_rank + Z/m_1 + ... + Z/m_s."""

    free_rank: int
    torsion_moduli: tuple[int, ...] = ()

    def __post_init__(self):
        if self.free_rank < 0:
            raise ValueError("free_rank must be non-negative")
        object.__setattr__(self, "torsion_moduli", tuple(int(m) for m in self.torsion_moduli))
        if any(m < 2 for m in self.torsion_moduli):
            raise ValueError("torsion moduli must be >= 2")

    @property
    def dim(self) -> int:
        return self.free_rank + len(self.torsion_moduli)

    @property
    def is_torsion_free(self) -> bool:
        return not self.torsion_moduli

    def order(self) -> int | None:
        """Group order, or None when the group is infinite."""
        if self.free_rank > 0:
            return None
        n = 1
        for m in self.torsion_moduli:
            n *= m
        return n

    def zero(self) -> Coords:
        return (0,) * self.dim

    def reduce(self, coords: Sequence[int]) -> Coords:
        if len(coords) != self.dim:
            raise ValueError(f"element needs {self.dim} coordinates, got {len(coords)}")
        r = self.free_rank
        free = tuple(int(c) for c in coords[:r])
        tors = tuple(int(c) % m for c, m in zip(coords[r:], self.torsion_moduli))
        return free + tors

    def add(self, a: Coords, b: Coords) -> Coords:
        r = self.free_rank
        free = tuple(x + y for x, y in zip(a[:r], b[:r]))
        tors = tuple((x + y) % m for x, y, m in
                     zip(a[r:], b[r:], self.torsion_moduli))
        return free + tors

    def neg(self, a: Coords) -> Coords:
        r = self.free_rank
        return tuple(-x for x in a[:r]) + tuple(
            (-x) % m for x, m in zip(a[r:], self.torsion_moduli))

    def sub(self, a: Coords, b: Coords) -> Coords:
        return self.add(a, self.neg(b))

    def scale(self, n: int, a: Coords) -> Coords:
        r = self.free_rank
        return tuple(n * x for x in a[:r]) + tuple(
            (n * x) % m for x, m in zip(a[r:], self.torsion_moduli))

    def element_order(self, a: Coords) -> int | None:
        """Order of a, or None when infinite (nonzero free part)."""
        r = self.free_rank
        if any(x != 0 for x in a[:r]):
            return None
        n = 1
        for x, m in zip(a[r:], self.torsion_moduli):
            if x != 0:
                import math
                n = n * (m // math.gcd(m, x)) // math.gcd(n, m // math.gcd(m, x))
        return n

    def iter_elements(self) -> Iterable[Coords]:
        """All elements of a finite group, lexicographic order."""
        if self.free_rank > 0:
            raise PreconditionError("cannot enumerate an infinite group")
        for t in itertools.product(*(range(m) for m in self.torsion_moduli)):
            yield t


@dataclass(frozen=True)
class RationalVectorGroup:
    """The torsion-free group Q^dim; carrier for lattice-point sets.

    Elements are Fraction tuples.  Used where progressions live inside a
    lattice rather than an ambient Z^r + torsion group.
    """

    dim: int

    @property
    def free_rank(self) -> int:
        return self.dim

    @property
    def torsion_moduli(self) -> tuple[int, ...]:
        return ()

    @property
    def is_torsion_free(self) -> bool:
        return True

    def order(self) -> int | None:
        return None if self.dim > 0 else 1

    def zero(self) -> Coords:
        return (Fraction(0),) * self.dim

    def reduce(self, coords: Sequence) -> Coords:
        if len(coords) != self.dim:
            raise ValueError(f"element needs {self.dim} coordinates")
        return tuple(Fraction(c) for c in coords)

    def add(self, a: Coords, b: Coords) -> Coords:
        return tuple(x + y for x, y in zip(a, b))

    def neg(self, a: Coords) -> Coords:
        return tuple(-x for x in a)

    def sub(self, a: Coords, b: Coords) -> Coords:
        return tuple(x - y for x, y in zip(a, b))

    def scale(self, n: int, a: Coords) -> Coords:
        return tuple(n * x for x in a)


@dataclass(frozen=True)
class GroupElement:
    """Convenience wrapper pairing coordinates with their group."""

    group: AmbientGroup
    coords: Coords

    def __post_init__(self):
        object.__setattr__(self, "coords", self.group.reduce(self.coords))

    def __add__(self, other: "GroupElement") -> "GroupElement":
        if other.group != self.group:
            raise GroupMismatchError("elements from different groups")
        return GroupElement(self.group, self.group.add(self.coords, other.coords))

    def __neg__(self) -> "GroupElement":
        return GroupElement(self.group, self.group.neg(self.coords))

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        return self + (-other)

    def __rmul__(self, n: int) -> "GroupElement":
        return GroupElement(self.group, self.group.scale(n, self.coords))


class FiniteSet:
    """Deduplicated, lexicographically ordered finite subset of a group."""

    __slots__ = ("group", "_set", "_sorted")

    def __init__(self, group, elements: Iterable[Coords]):
        self.group = group
        self._set = frozenset(group.reduce(e) for e in elements)
        self._sorted: tuple[Coords, ...] | None = None

    @classmethod
    def _raw(cls, group, reduced: frozenset) -> "FiniteSet":
        # Fast path for internal callers whose elements are already reduced.
        obj = cls.__new__(cls)
        obj.group = group
        obj._set = reduced
        obj._sorted = None
        return obj

    @property
    def elements(self) -> tuple[Coords, ...]:
        if self._sorted is None:
            self._sorted = tuple(sorted(self._set))
        return self._sorted

    def as_set(self) -> frozenset:
        return self._set

    def __len__(self) -> int:
        return len(self._set)

    def __contains__(self, coords: Coords) -> bool:
        return coords in self._set

    def __iter__(self):
        return iter(self.elements)

    def __eq__(self, other) -> bool:
        return (isinstance(other, FiniteSet) and self.group == other.group
                and self._set == other._set)

    def __hash__(self) -> int:
        return hash((self.group, self._set))

    def __repr__(self) -> str:
        return f"FiniteSet({len(self._set)} elements in {self.group})"

    def is_symmetric(self) -> bool:
        neg = self.group.neg
        return all(neg(x) in self._set for x in self._set)

    def translate(self, x: Coords) -> "FiniteSet":
        add = self.group.add
        x = self.group.reduce(x)
        return FiniteSet._raw(self.group, frozenset(add(x, e) for e in self._set))


@dataclass(frozen=True)
class FiniteSubgroup:
    """A finite subgroup given by generators, with its elements cached."""

    generators: tuple[Coords, ...]
    elements: FiniteSet

    @property
    def group(self):
        return self.elements.group

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, coords: Coords) -> bool:
        return coords in self.elements

    def is_closed(self) -> bool:
        g = self.group
        els = self.elements.as_set()
        if g.zero() not in els:
            return False
        return (all(g.neg(x) in els for x in els)
                and all(g.add(x, y) in els for x in els for y in els))


def trivial_subgroup(group) -> FiniteSubgroup:
    return FiniteSubgroup((), FiniteSet(group, [group.zero()]))


def _require_same_group(a: FiniteSet, b: FiniteSet):
    if a.group != b.group:
        raise GroupMismatchError("sets live in different ambient groups")


def sumset(a: FiniteSet, b: FiniteSet) -> FiniteSet:
    """Exact sumset {x + y : x in A, y in B}."""
    _require_same_group(a, b)
    if not len(a) or not len(b):
        raise PreconditionError("sumset of an empty set")
    add = a.group.add
    return FiniteSet._raw(
        a.group, frozenset(add(x, y) for x in a.as_set() for y in b.as_set()))


def difference_set(a: FiniteSet, b: FiniteSet) -> FiniteSet:
    _require_same_group(a, b)
    sub = a.group.sub
    return FiniteSet._raw(
        a.group, frozenset(sub(x, y) for x in a.as_set() for y in b.as_set()))


def iterated_sumset(a: FiniteSet, l: int, cap: int = 10**6) -> FiniteSet:
    """Exact l-fold sumset lA computed by binary doubling.

    Raises CapExceededError when an intermediate set would exceed cap.
    """
    if l < 1:
        raise PreconditionError("iterated sumset needs l >= 1")
    if not len(a):
        raise PreconditionError("iterated sumset of an empty set")
    result: FiniteSet | None = None
    power = a
    bits = l
    while True:
        if bits & 1:
            result = power if result is None else sumset(result, power)
            if len(result) > cap:
                raise CapExceededError("iterated sumset exceeds cap",
                                       needed=len(result), cap=cap)
        bits >>= 1
        if not bits:
            break
        power = sumset(power, power)
        if len(power) > cap:
            raise CapExceededError("iterated sumset exceeds cap",
                                   needed=len(power), cap=cap)
    return result


def dilate_set(n: int, a: FiniteSet) -> FiniteSet:
    """Exact dilate n.A = {n*x : x in A}; 0.A = {0} by convention."""
    if not len(a):
        return FiniteSet(a.group, [a.group.zero()])
    scale = a.group.scale
    return FiniteSet(a.group, {scale(n, x) for x in a.as_set()})


def subgroup_generated(s: FiniteSet, cap: int = 10**6) -> FiniteSubgroup:
    """Closure of S u -S u {0} under addition.

    Fails fast with CapExceededError when a generator has infinite order
    (nonzero free part) or the closure grows past cap.
    """
    g = s.group
    for x in s.as_set():
        if any(c != 0 for c in x[: g.free_rank]):
            raise CapExceededError(
                "generator has a nonzero free coordinate; the subgroup is infinite")
    elements = {g.zero()}
    frontier = set()
    for x in s.as_set():
        frontier.add(x)
        frontier.add(g.neg(x))
    frontier -= elements
    gens = tuple(sorted(s.as_set()))
    while frontier:
        new = set()
        for x in frontier:
            for y in list(elements) + list(frontier):
                z = g.add(x, y)
                if z not in elements and z not in frontier:
                    new.add(z)
        elements |= frontier
        if len(elements) + len(new) > cap:
            raise CapExceededError("subgroup closure exceeds cap",
                                   needed=len(elements) + len(new), cap=cap)
        frontier = new
    return FiniteSubgroup(gens, FiniteSet(g, elements))


def subgroup_from_elements(group, elements: Iterable[Coords],
                           generators: Iterable[Coords] = ()) -> FiniteSubgroup:
    """Wrap an already-closed element collection as a FiniteSubgroup."""
    h = FiniteSubgroup(tuple(generators), FiniteSet(group, elements))
    if not h.is_closed():
        raise PreconditionError("element set is not a subgroup")
    return h


def subgroup_canonical_form(s: FiniteSet) -> tuple:
    """Canonical form of the subgroup of G generated by the elements of S.

    Works for infinite groups too: the subgroup lifts to a sublattice of
    Z^(r+s) (adding the relation columns m_j e_{r+j}), whose column HNF is
    a complete invariant.  Two sets generate the same subgroup iff their
    forms are equal.
    """
    from . import linalg

    g = s.group
    r, moduli = g.free_rank, g.torsion_moduli
    n = r + len(moduli)
    cols: list[tuple[int, ...]] = [tuple(x) for x in s.elements]
    for j, m in enumerate(moduli):
        cols.append(tuple(m if i == r + j else 0 for i in range(n)))
    if not cols:
        return ()
    matrix = tuple(tuple(col[i] for col in cols) for i in range(n))
    h, _ = linalg.column_hnf(matrix, allow_rank_deficient=True)
    keep = [j for j in range(len(cols))
            if any(h[i][j] != 0 for i in range(n))]
    return tuple(tuple(h[i][j] for j in keep) for i in range(n))
