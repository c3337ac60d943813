"""Symmetric GAPs and coset progressions: images, dilates, properness.

A progression is data, not a set: (dims, steps, symmetry group).  Its
image is enumerated exactly; properness is decided by a hash scan over the
coefficient box in lexicographic order, so the first collision found is
deterministic and becomes the witness.  Dimensions are positive rationals:
only floor(t * N_i) ever matters computationally and rationals keep
dilation exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from . import linalg
from .errors import CapExceededError, PreconditionError
from .groups import (AmbientGroup, Coords, FiniteSet, FiniteSubgroup,
                     trivial_subgroup)
from .polytopes import enumerate_integer_points


@dataclass(frozen=True)
class Gap:
    """Symmetric generalized arithmetic progression (dims, steps, rank)."""

    group: object
    dims: tuple[Fraction, ...]
    steps: tuple[Coords, ...]

    def __post_init__(self):
        dims = tuple(Fraction(n) for n in self.dims)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "steps",
                           tuple(self.group.reduce(v) for v in self.steps))
        if len(dims) != len(self.steps):
            raise ValueError("dims and steps must have equal length")
        if any(n <= 0 for n in dims):
            raise ValueError("dimensions must be positive")

    @property
    def rank(self) -> int:
        return len(self.dims)


@dataclass(frozen=True)
class CosetProgression:
    """A GAP together with a finite symmetry subgroup H."""

    gap: Gap
    symmetry: FiniteSubgroup

    def __post_init__(self):
        if self.symmetry.group != self.gap.group:
            raise PreconditionError("steps and symmetry group in different groups")

    @property
    def group(self):
        return self.gap.group

    @property
    def rank(self) -> int:
        return self.gap.rank

    @property
    def dims(self) -> tuple[Fraction, ...]:
        return self.gap.dims

    @property
    def steps(self) -> tuple[Coords, ...]:
        return self.gap.steps

    def dilate(self, t) -> "CosetProgression":
        t = Fraction(t)
        if t <= 0:
            raise PreconditionError("dilation factor must be positive")
        return CosetProgression(
            Gap(self.group, tuple(n * t for n in self.dims), self.steps),
            self.symmetry)

    def bounds(self, t=1) -> tuple[int, ...]:
        t = Fraction(t)
        return tuple(int((n * t) // 1) for n in self.dims)

    def box_count(self, t=1) -> int:
        total = len(self.symmetry)
        for k in self.bounds(t):
            total *= 2 * k + 1
        return total

    def with_integer_dims(self) -> "CosetProgression":
        """Floor every dimension and drop steps whose floor is zero.

        The image is unchanged; after this, integer dilates of the image
        coincide with iterated sumsets of it.
        """
        dims, steps = [], []
        for n, v in zip(self.dims, self.steps):
            k = int(n // 1)
            if k >= 1:
                dims.append(Fraction(k))
                steps.append(v)
        return CosetProgression(Gap(self.group, tuple(dims), tuple(steps)),
                                self.symmetry)

    def image(self, t=1, cap: int = 10**6) -> FiniteSet:
        return image(self, t, cap)

    def is_proper(self, t=1, cap: int = 10**6) -> "PropernessResult":
        return is_proper(self, t, cap)


def gap_progression(group, dims: Sequence, steps: Sequence,
                    symmetry: FiniteSubgroup | None = None) -> CosetProgression:
    """Convenience constructor; omitted symmetry means the trivial subgroup."""
    if symmetry is None:
        symmetry = trivial_subgroup(group)
    return CosetProgression(Gap(group, tuple(dims), tuple(steps)), symmetry)


@dataclass(frozen=True)
class PropernessResult:
    """Outcome of a properness test, with a collision witness on failure.

    A witness is a pair ((n, h), (n', h')) of distinct coefficient/torsion
    tuples evaluating to the same group element, both inside the scanned
    coefficient box.
    """

    proper: bool
    witness: Optional[tuple[tuple[tuple[int, ...], Coords],
                            tuple[tuple[int, ...], Coords]]] = None
    checked: int = 0


def image(p: CosetProgression, t=1, cap: int = 10**6) -> FiniteSet:
    """Exact image of the dilate P_t, canonically ordered."""
    t = Fraction(t)
    if t <= 0:
        raise PreconditionError("dilation must be positive")
    if p.box_count(t) > cap:
        raise CapExceededError("image coefficient box exceeds cap",
                               needed=p.box_count(t), cap=cap)
    g = p.group
    acc = set(p.symmetry.elements.as_set())
    for v, k in zip(p.steps, p.bounds(t)):
        if k == 0:
            continue
        seg = _segment(g, v, k)
        acc = {g.add(x, s) for x in acc for s in seg}
    return FiniteSet._raw(g, frozenset(acc))


def _segment(g, v: Coords, k: int) -> list[Coords]:
    """The multiples {m v : |m| <= k}, deduplicated."""
    out = {g.zero()}
    cur = g.zero()
    for _ in range(k):
        cur = g.add(cur, v)
        if cur in out:
            break
        out.add(cur)
        out.add(g.neg(cur))
    return list(out)


def size(p: CosetProgression, t=1, cap: int = 10**6) -> int:
    return len(image(p, t, cap))


def is_proper(p: CosetProgression, t=1, cap: int = 10**6) -> PropernessResult:
    """Hash-scan properness test for the dilate P_t.

    Scans coefficient tuples in lexicographic order (torsion element
    innermost); the first collision wins, which makes witnesses
    deterministic.  Improper inputs exit early; certifying properness
    costs one full pass over the coefficient box.
    """
    t = Fraction(t)
    if t <= 0:
        raise PreconditionError("dilation must be positive")
    g = p.group
    bounds = p.bounds(t)
    h_elements = p.symmetry.elements.elements
    seen: dict[Coords, tuple[tuple[int, ...], Coords]] = {}
    checked = 0

    segments = []
    for v, k in zip(p.steps, bounds):
        multiples = [g.scale(m, v) for m in range(-k, k + 1)]
        segments.append((k, multiples))

    def scan(i: int, prefix: tuple[int, ...], partial: Coords):
        nonlocal checked
        if i == len(segments):
            for h in h_elements:
                val = g.add(partial, h)
                key = (prefix, h)
                if val in seen:
                    return key, seen[val]
                seen[val] = key
                checked += 1
                if checked > cap:
                    raise CapExceededError(
                        "properness scan exceeds cap without a collision",
                        needed=p.box_count(t), cap=cap)
            return None
        k, multiples = segments[i]
        for idx, m in enumerate(range(-k, k + 1)):
            hit = scan(i + 1, prefix + (m,), g.add(partial, multiples[idx]))
            if hit:
                return hit
        return None

    hit = scan(0, (), g.zero())
    if hit:
        return PropernessResult(False, (hit[0], hit[1]), checked)
    return PropernessResult(True, None, checked)


def evaluate(p: CosetProgression, n: Sequence[int], h: Coords) -> Coords:
    """The element h + sum n_i v_i."""
    g = p.group
    acc = g.reduce(h)
    for m, v in zip(n, p.steps):
        acc = g.add(acc, g.scale(m, v))
    return acc


class MembershipSolver:
    """Decides membership in Image(P_t) without enumerating the image.

    Solves sum n_i v_i = g - h over the integers (free coordinates give
    linear equations, torsion coordinates give congruences), then looks for
    a solution inside the coefficient box by enumerating the kernel lattice
    intersected with the box.  Exact throughout; returns a witness (n, h)
    that re-evaluates to the queried element.
    """

    def __init__(self, p: CosetProgression, t=1):
        if not isinstance(p.group, AmbientGroup):
            raise PreconditionError("membership solver needs an ambient group")
        self.p = p
        self.t = Fraction(t)
        self.bounds = p.bounds(self.t)
        g = p.group
        r, moduli = g.free_rank, g.torsion_moduli
        k = p.rank
        rows = []
        for i in range(r):
            rows.append(tuple(v[i] for v in p.steps) + (0,) * len(moduli))
        for j, m in enumerate(moduli):
            rows.append(tuple(v[r + j] for v in p.steps)
                        + tuple(m if jj == j else 0 for jj in range(len(moduli))))
        self.matrix = tuple(rows)
        self.h_elements = p.symmetry.elements.elements
        self._solver = linalg.IntSolver(self.matrix)
        self.kernel = tuple(kv[:k] for kv in self._solver.kernel)

    def witness(self, target: Coords):
        """A representation (n, h) of target inside the box, or None."""
        g = self.p.group
        k = self.p.rank
        for h in self.h_elements:
            diff = g.sub(g.reduce(target), h)
            b = tuple(diff[: g.free_rank]) + tuple(diff[g.free_rank:])
            sol = self._solver.solve(b)
            if sol is None:
                continue
            n0 = sol[:k]
            n = self._boxed_solution(n0)
            if n is not None:
                return n, h
        return None

    def __contains__(self, target: Coords) -> bool:
        return self.witness(target) is not None

    def _boxed_solution(self, n0: tuple[int, ...]):
        k = self.p.rank
        kernel = self.kernel
        if not kernel:
            if all(abs(x) <= b for x, b in zip(n0, self.bounds)):
                return n0
            return None
        q = len(kernel)
        rows = []
        for i in range(k):
            c = tuple(Fraction(kernel[j][i]) for j in range(q))
            if all(x == 0 for x in c):
                if abs(n0[i]) > self.bounds[i]:
                    return None
                continue
            rows.append((c, Fraction(self.bounds[i] - n0[i])))
            rows.append((tuple(-x for x in c), Fraction(self.bounds[i] + n0[i])))
        for z in enumerate_integer_points(rows, q, cap=10**6):
            n = tuple(n0[i] + sum(kernel[j][i] * z[j] for j in range(q))
                      for i in range(k))
            if all(abs(x) <= b for x, b in zip(n, self.bounds)):
                return n
        return None


def contains_image(p: CosetProgression, t, elements: Iterable[Coords],
                   want_witnesses: bool = False):
    """Exact check that every element lies in Image(P_t).

    Returns (True, witnesses) or (False, first offending element).
    """
    solver = MembershipSolver(p, t)
    witnesses = {}
    for x in elements:
        w = solver.witness(x)
        if w is None:
            return False, x
        if want_witnesses:
            witnesses[x] = w
    return True, witnesses
