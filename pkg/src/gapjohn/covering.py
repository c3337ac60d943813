"""Constructive covering lemmas with exactly verified certificates.

doubling_cover tiles the t-dilate of a progression image by translates of
the image itself (count bound (4t+1)^d); ruzsa_cover covers a dilate of P
by translates of Image(Q_2) placed on a maximal family of disjoint
Q-translates.  Every certificate's union coverage is re-verified exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import PreconditionError
from .groups import Coords, FiniteSet, sumset
from .john import ConvexCosetProgression
from .oracle import verify_cover
from .progressions import CosetProgression

DEFAULT_CAP = 500_000


@dataclass(frozen=True)
class CoveringCertificate:
    """Translate list covering a target set, with its count bound."""

    translates: tuple[Coords, ...]
    covered_id: str
    bound: Fraction
    count: int
    method: str
    details: dict = field(default_factory=dict, compare=False)


def _image_of(p, t, cap) -> FiniteSet:
    if isinstance(p, (CosetProgression, ConvexCosetProgression)):
        return p.image(t, cap)
    raise PreconditionError("expected a coset or convex coset progression")


def greedy_cover(target: FiniteSet, tile: FiniteSet) -> list[Coords]:
    """Greedy cover of target by translates of tile, canonical scan order.

    The base for an uncovered x is x + max(tile): the translate then
    reaches x through the tile's minimal element and extends as far past x
    as the tile allows, which is optimal for interval-like tiles.
    """
    g = target.group
    gmax = tile.elements[-1]
    covered: set = set()
    bases: list[Coords] = []
    tile_els = tile.elements
    for x in target.elements:
        if x in covered:
            continue
        base = g.add(x, gmax)
        bases.append(base)
        for y in tile_els:
            covered.add(g.add(base, y))
    return bases


def _disjoint_family_cover(p, t, cap) -> list[Coords]:
    """The packing construction: maximal family of lattice points whose
    half-body translates are pairwise disjoint; provably at most (2t+1)^d
    translates of the image cover the dilate."""
    conv = p if isinstance(p, ConvexCosetProgression) else None
    if conv is None:
        from .john import to_convex
        conv = to_convex(p)
    body = conv.body
    lat = conv.lattice
    family: list = []
    for n in conv.lattice_coords(t, cap):
        x = lat.from_coords(n)
        ok = True
        for m in family:
            diff = tuple(a - b for a, b in zip(x, m))
            if body.membership(diff):
                ok = False
                break
        if ok:
            family.append(x)
    bases = []
    for x in family:
        coords = tuple(int(c) for c in lat.coords_of(x))
        bases.append(conv.phi(coords))
    return bases


def doubling_cover(p, t=1, cap: int = DEFAULT_CAP) -> CoveringCertificate:
    """Cover Image(P_t) by at most (4t+1)^d translates of Image(P)."""
    t = Fraction(t)
    if t < 1:
        raise PreconditionError("doubling_cover needs t >= 1")
    d = p.rank
    target = _image_of(p, t, cap)
    tile = _image_of(p, 1, cap)
    bound = (4 * t + 1) ** d
    bases = greedy_cover(target, tile)
    method = "greedy"
    if len(bases) > bound:
        bases = _disjoint_family_cover(p, t, cap)
        method = "disjoint-family"
    report = verify_cover(target, tile, bases)
    if not report.holds:
        raise AssertionError(f"cover verification failed at {report.counterexample}")
    count = len(bases)
    if count > bound:
        raise AssertionError("covering count exceeds (4t+1)^d")
    size_p, size_pt = len(tile), len(target)
    if not (size_p <= size_pt <= bound * size_p):
        raise AssertionError("doubling size inequality failed")
    return CoveringCertificate(
        tuple(bases), f"image(t={t})", bound, count, method,
        {"t": t, "rank": d, "size": size_p, "size_t": size_pt})


def ruzsa_cover(p, q, t, t_prime, cap: int = DEFAULT_CAP) -> CoveringCertificate:
    """Cover Image(P_t') by translates of Image(Q_2), given the premise
    Image(Q) inside Image(P_t) (verified exactly).

    Bases are a maximal greedy family of points of Image(P_t') whose
    Q-translates are pairwise disjoint; the certificate records the run
    constant C with count = C * (t + t' + 1)^d * size(P) / size(Q).
    """
    t = Fraction(t)
    t_prime = Fraction(t_prime)
    target = _image_of(p, t_prime, cap)
    tile_q = _image_of(q, 1, cap)
    premise = _image_of(p, t, cap)
    if not tile_q.as_set() <= premise.as_set():
        raise PreconditionError("premise Image(Q) in Image(P_t) fails")

    g = target.group
    diff = sumset(tile_q, tile_q)  # = Q - Q for symmetric Q
    blocked: set = set()
    bases: list[Coords] = []
    for s in target.elements:
        if s in blocked:
            continue
        bases.append(s)
        for y in diff.elements:
            blocked.add(g.add(s, y))
    tile = _image_of(q, 2, cap)
    report = verify_cover(target, tile, bases)
    if not report.holds:
        raise AssertionError(f"ruzsa cover failed at {report.counterexample}")
    d = p.rank
    size_p = len(_image_of(p, 1, cap))
    size_q = len(tile_q)
    denom = (t + t_prime + 1) ** d * Fraction(size_p, size_q)
    c_run = Fraction(len(bases)) / denom
    bound = c_run * denom
    return CoveringCertificate(
        tuple(bases), f"image(t'={t_prime})", bound, len(bases),
        "ruzsa-greedy",
        {"t": t, "t_prime": t_prime, "rank": d, "c_run": c_run,
         "size_p": size_p, "size_q": size_q,
         "tile": "image(Q_2)"})
