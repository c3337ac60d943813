"""Deliberately naive brute-force verifiers.

These share no code with the main algorithms: images come from plain
nested coefficient loops, properness from quadratic pairwise comparison,
inclusions from element-by-element scans.  Tests and certificate audits
trust these, not the optimized paths.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import CapExceededError
from .groups import Coords, FiniteSet
from .progressions import CosetProgression


@dataclass(frozen=True)
class VerificationReport:
    claim: str
    holds: bool
    counterexample: Optional[object] = None
    elements_checked: int = 0


def brute_image(p: CosetProgression, t=1, cap: int = 10**6) -> FiniteSet:
    """Image of P_t by plain nested loops over the coefficient box."""
    t = Fraction(t)
    if t <= 0:
        raise ValueError("t must be positive")
    g = p.group
    bounds = [int((n * t) // 1) for n in p.dims]
    total = len(p.symmetry)
    for k in bounds:
        total *= 2 * k + 1
    if total > cap:
        raise CapExceededError("brute image box exceeds cap", needed=total, cap=cap)
    out = []
    ranges = [range(-k, k + 1) for k in bounds]
    for coeffs in itertools.product(*ranges):
        base = g.zero()
        for m, v in zip(coeffs, p.steps):
            term = g.zero()
            if m >= 0:
                for _ in range(m):
                    term = g.add(term, v)
            else:
                for _ in range(-m):
                    term = g.sub(term, v)
            base = g.add(base, term)
        for h in p.symmetry.elements:
            out.append(g.add(base, h))
    return FiniteSet(g, out)


def brute_is_proper(p: CosetProgression, t=1, cap: int = 10**6):
    """Pairwise properness check; returns (proper, witness or None)."""
    t = Fraction(t)
    g = p.group
    bounds = [int((n * t) // 1) for n in p.dims]
    total = len(p.symmetry)
    for k in bounds:
        total *= 2 * k + 1
    if total * total > cap * 64:
        raise CapExceededError("brute properness scan exceeds cap",
                               needed=total * total, cap=cap * 64)
    evaluated = []
    ranges = [range(-k, k + 1) for k in bounds]
    for coeffs in itertools.product(*ranges):
        base = g.zero()
        for m, v in zip(coeffs, p.steps):
            base = g.add(base, g.scale(m, v))
        for h in p.symmetry.elements:
            evaluated.append(((coeffs, h), g.add(base, h)))
    for i in range(len(evaluated)):
        for j in range(i + 1, len(evaluated)):
            if evaluated[i][1] == evaluated[j][1]:
                return False, (evaluated[j][0], evaluated[i][0])
    return True, None


def verify_inclusion(s1: FiniteSet, s2: FiniteSet) -> VerificationReport:
    """S1 subset of S2, first counterexample in canonical order."""
    checked = 0
    for x in s1.elements:
        checked += 1
        if x not in s2:
            return VerificationReport("inclusion", False, x, checked)
    return VerificationReport("inclusion", True, None, checked)


def verify_equal(s1: FiniteSet, s2: FiniteSet) -> VerificationReport:
    fwd = verify_inclusion(s1, s2)
    if not fwd.holds:
        return VerificationReport("equality", False, fwd.counterexample,
                                  fwd.elements_checked)
    back = verify_inclusion(s2, s1)
    return VerificationReport("equality", back.holds, back.counterexample,
                              fwd.elements_checked + back.elements_checked)


def verify_translate_containment(s: FiniteSet, t: FiniteSet):
    """Find x with x + T inside S by scanning candidates x in S - T."""
    g = s.group
    checked = 0
    seen = set()
    for a in s.elements:
        for b in t.elements:
            x = g.sub(a, b)
            if x in seen:
                continue
            seen.add(x)
            checked += 1
            if all(g.add(x, y) in s for y in t.elements):
                return True, x
    return False, None


def verify_cover(target: FiniteSet, tile: FiniteSet, bases) -> VerificationReport:
    """Union of (base + tile) over bases covers target, checked exactly."""
    g = target.group
    covered = set()
    for base in bases:
        base = g.reduce(base)
        for y in tile.elements:
            covered.add(g.add(base, y))
    for x in target.elements:
        if x not in covered:
            return VerificationReport("cover", False, x, len(target))
    return VerificationReport("cover", True, None, len(target))
