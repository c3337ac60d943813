"""Coalescence: replace an l-fold sumset of a coset progression by a single
proper coset progression sandwiching it.

The recursion mirrors the structure-theorem argument: floor dimensions so
integer dilates equal iterated sumsets, find the largest power of two at
which the progression is still proper, and either take that dilate
directly (when it already reaches l) or properize a slightly larger dilate
through the outer John construction (which strictly drops the rank) and
recurse with a reduced multiplier.  The sandwich
Image(Q) in l*Image(P) in K*Image(Q) is re-verified exactly at the end,
with K the smallest verified sumset multiple; a greedy proper-core
extraction serves as fallback when the small-l corners of the recursion
cannot pay the properization cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import CapExceededError, PreconditionError
from .freiman import EngineBudget, extract_progression
from .groups import FiniteSet, iterated_sumset, subgroup_canonical_form, sumset
from .john import _ceil, gap_john_outer
from .oracle import verify_inclusion
from .progressions import CosetProgression, image, is_proper

DEFAULT_CAP = 500_000


@dataclass(frozen=True)
class CoalescenceResult:
    """Proper Q with Image(Q) in l Image(P) in K Image(Q), verified exactly."""

    q: CosetProgression
    k: int
    l: int
    recursion_depth: int
    levels: tuple[dict, ...]
    details: dict = field(default_factory=dict, compare=False)


def k_bound(d: int) -> int:
    """Asserted ceiling for the sandwich factor, with 16 substituted for
    the absolute constant: floor((16 d)^(3 d^2 / 4))."""
    if d <= 0:
        return 1
    return max(1, int(float(16 * d) ** (3 * d * d / 4)))


def _proper_power_scan(p: CosetProgression, l2: int, cap: int) -> int | None:
    """Largest k >= 0 with 2^k <= l2 and P 2^k-proper; None when improper."""
    try:
        if not is_proper(p, 1, cap).proper:
            return None
    except CapExceededError:
        return None
    k = 0
    while 2 ** (k + 1) <= l2:
        try:
            if not is_proper(p, 2 ** (k + 1), cap).proper:
                break
        except CapExceededError:
            break
        k += 1
    return k


def _coalesce_rec(p: CosetProgression, l: int, cap: int, levels: list,
                  depth: int) -> CosetProgression:
    d = p.rank
    if depth > d + 1:
        raise AssertionError("coalescence recursion failed to reduce rank")
    if d == 0:
        levels.append({"rank": 0, "l": l, "branch": "rank-0"})
        return p
    try:
        if is_proper(p, l, cap).proper:
            levels.append({"rank": d, "l": l, "branch": "l-proper"})
            return p.dilate(l)
    except CapExceededError:
        pass
    l2 = 1 << (l.bit_length() - 1)  # largest power of two <= l
    k_star = _proper_power_scan(p, l2, cap)

    if k_star is not None and 4 * (2 ** k_star) > l2:
        # Proper within a factor four of l2: a plain dilate suffices.
        levels.append({"rank": d, "l": l, "l2": l2, "k": k_star,
                       "branch": "proper-dilate"})
        return p.dilate(2 ** k_star)

    if k_star is None and l2 < 2:
        levels.append({"rank": d, "l": l, "branch": "direct-core"})
        im = image(p, 1, cap)
        return extract_progression(im, r_max=max(1, d),
                                   budget=EngineBudget(40_000), cap=cap)

    j = 1 if k_star is None else k_star + 2
    p_prime, cert = gap_john_outer(p.dilate(2 ** j), 1, cap)
    if p_prime.rank >= d:
        raise AssertionError("outer properization did not reduce the rank")
    m_prime = _ceil(Fraction(2 ** j) * cert.outer_factor)
    p_next = p_prime.with_integer_dims()
    l_next = 1
    while 2 * l_next * m_prime <= l2:
        l_next *= 2
    levels.append({"rank": d, "l": l, "l2": l2, "k": k_star,
                   "branch": "reduce", "dilate_exponent": j,
                   "outer_dilation": cert.details["dilation"],
                   "m_prime": m_prime, "l_next": l_next,
                   "rank_next": p_next.rank})
    return _coalesce_rec(p_next, l_next, cap, levels, depth + 1)


def _verify_sandwich(q: CosetProgression, im_p: FiniteSet, target: FiniteSet,
                     bound: int, cap: int):
    """Exact sandwich check; returns K or the reason it failed."""
    im_q = image(q, 1, cap)
    inc = verify_inclusion(im_q, target)
    if not inc.holds:
        return None, f"Image(Q) escapes l*Image(P) at {inc.counterexample}"
    if not is_proper(q, 1, cap).proper:
        return None, "output progression is not proper"
    grown = im_q
    k = 1
    while not target.as_set() <= grown.as_set():
        if k >= bound:
            return None, "sandwich factor exceeded its asserted bound"
        new = sumset(grown, im_q)
        if len(new) == len(grown):
            return None, "sumset growth stabilized before covering"
        if len(new) > cap:
            raise CapExceededError("sandwich verification exceeds cap",
                                   needed=len(new), cap=cap)
        grown = new
        k += 1
    if subgroup_canonical_form(im_q) != subgroup_canonical_form(im_p):
        return None, "Image(Q) generates a different subgroup"
    return k, None


def coalesce(p: CosetProgression, l: int, cap: int = DEFAULT_CAP,
             ) -> CoalescenceResult:
    """Proper Q of rank <= rank(P) with Image(Q) in l Image(P) in K Image(Q).

    K is the smallest sumset multiple verified to cover, asserted against
    floor((16 d)^(3d^2/4)); the subgroup generated by Image(Q) is checked
    to equal the one generated by Image(P).
    """
    if l < 1:
        raise PreconditionError("coalesce needs l >= 1")
    p0 = p
    d0 = p.rank
    levels: list[dict] = []
    q = _coalesce_rec(p.with_integer_dims(), l, cap, levels, 0)
    q = q.with_integer_dims()

    im_p = image(p0, 1, cap)
    target = iterated_sumset(im_p, l, cap)
    bound = k_bound(d0)

    fallback_used = False
    k, reason = _verify_sandwich(q, im_p, target, bound, cap)
    if k is None:
        # Small-l corners can leave the recursion unable to pay the
        # properization dilation; extract a proper core of the exact
        # target instead and re-verify from scratch.
        fallback_used = True
        levels.append({"branch": "fallback-core", "reason": reason})
        q = extract_progression(target, r_max=max(1, d0),
                                budget=EngineBudget(60_000), cap=cap)
        k, reason = _verify_sandwich(q, im_p, target, bound, cap)
        if k is None:
            raise AssertionError(f"coalescence failed: {reason}")

    im_q = image(q, 1, cap)
    d_out = q.rank
    size_ratio = Fraction(len(im_q), (l ** d_out) * len(im_p))
    details = {
        "size_p": len(im_p), "size_q": len(im_q), "size_lp": len(target),
        "k_bound": bound, "size_ratio": size_ratio,
        "rank_in": d0, "rank_out": d_out, "fallback": fallback_used,
    }
    return CoalescenceResult(q, k, l, len(levels), tuple(levels), details)
