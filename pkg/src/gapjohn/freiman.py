"""Desk-scale progression extraction: the pluggable engine standing in for
the heavy Freiman-type machinery.

Given a target set, grow a proper coset progression inside it greedily:
first absorb the largest finite subgroup that fits, then add steps one at
a time, pushing each dimension as far as properness and containment allow.
Exhaustive and exact; built for small sets, not asymptotics.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import CapExceededError
from .groups import (FiniteSet, FiniteSubgroup, difference_set,
                     subgroup_generated, trivial_subgroup)
from .progressions import CosetProgression, Gap, image, is_proper


@dataclass
class EngineBudget:
    """Mutable evaluation budget for the greedy search."""

    evaluations: int = 20_000

    def spend(self, n: int = 1) -> bool:
        self.evaluations -= n
        return self.evaluations >= 0


def grow_subgroup(target: FiniteSet, candidates: FiniteSet,
                  budget: EngineBudget, cap: int = 200_000) -> FiniteSubgroup:
    """Largest subgroup inside target reachable by greedily adjoining
    candidate generators."""
    g = target.group
    h = trivial_subgroup(g)
    target_set = target.as_set()
    improved = True
    while improved and budget.spend():
        improved = False
        best = None
        for c in candidates.elements:
            if c in h.elements or any(x != 0 for x in c[: g.free_rank]):
                continue
            if c not in target_set:
                continue
            if not budget.spend():
                break
            try:
                grown = subgroup_generated(
                    FiniteSet(g, set(h.elements.as_set()) | {c}),
                    cap=min(cap, len(target_set)))
            except CapExceededError:
                continue
            if len(grown) > len(h) and grown.elements.as_set() <= target_set:
                if best is None or len(grown) > len(best):
                    best = grown
        if best is not None and len(best) > len(h):
            h = best
            improved = True
    return h


def _max_dimension(base: CosetProgression, step, target_set,
                   budget: EngineBudget, cap: int) -> Optional[int]:
    """Largest integer N with (base + step at dim N) proper and contained."""

    def fits(n: int) -> bool:
        if not budget.spend():
            return False
        cand = CosetProgression(
            Gap(base.group, base.dims + (Fraction(n),), base.steps + (step,)),
            base.symmetry)
        if cand.box_count(1) > len(target_set):
            return False
        if not is_proper(cand, 1, cap).proper:
            return False
        img = image(cand, 1, cap)
        return img.as_set() <= target_set

    if not fits(1):
        return None
    lo = 1
    while fits(2 * lo):
        lo *= 2
    hi = 2 * lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        lo, hi = (mid, hi) if fits(mid) else (lo, mid)
    return lo


def extract_progression(target: FiniteSet, candidates: FiniteSet | None = None,
                        r_max: int = 4, budget: EngineBudget | None = None,
                        cap: int = 200_000) -> CosetProgression:
    """Greedy proper coset progression with image inside the target set.

    Candidate steps default to the target itself.  Returns the rank-0
    trivial progression when nothing fits (the legal minimum).
    """
    g = target.group
    if budget is None:
        budget = EngineBudget()
    if candidates is None:
        candidates = target
    h = grow_subgroup(target, candidates, budget, cap)
    p = CosetProgression(Gap(g, (), ()), h)
    target_set = target.as_set()
    current_size = len(h)
    while p.rank < r_max:
        best = None
        for w in candidates.elements:
            if all(c == 0 for c in w):
                continue
            n = _max_dimension(p, w, target_set, budget, cap)
            if n is None:
                continue
            cand = CosetProgression(
                Gap(g, p.dims + (Fraction(n),), p.steps + (w,)), p.symmetry)
            size = cand.box_count(1)
            if best is None or size > best[0]:
                best = (size, cand)
        if best is None or best[0] <= current_size:
            break
        current_size, p = best
    return p


def extract_from_symmetric_core(core: FiniteSet, r_max: int = 4,
                                budget: EngineBudget | None = None,
                                cap: int = 200_000) -> CosetProgression:
    """Proper progression inside 2F - 2F, steps drawn from F - F."""
    two_f = FiniteSet(core.group, {core.group.add(a, b)
                                   for a in core.as_set() for b in core.as_set()})
    target = difference_set(two_f, two_f)
    candidates = difference_set(core, core)
    return extract_progression(target, candidates, r_max, budget, cap)
