"""Structure theory for iterated sumsets lA: symmetric-core extraction,
progression extraction, step adjoining, coalescence, and the final
two-sided sandwich x + Image(Q) in lA in x' + K Image(Q); plus the
coset-of-subgroup check for dense sets in finite groups and the Freiman
homomorphism tester.

Translates are carried explicitly through the pipeline; the hypothesis
gate l^d |A| >= T |lA| uses a configurable run threshold T in place of the
tower-type constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Optional

from .coalescence import CoalescenceResult, coalesce
from .covering import greedy_cover
from .errors import (CapExceededError, HypothesisNotMetError,
                     PreconditionError)
from .freiman import EngineBudget, extract_from_symmetric_core
from .groups import (AmbientGroup, Coords, FiniteSet, difference_set,
                     iterated_sumset, subgroup_canonical_form,
                     subgroup_generated, sumset)
from .oracle import verify_inclusion
from .progressions import CosetProgression, Gap, image, is_proper

DEFAULT_CAP = 500_000
DEFAULT_THRESHOLD = 8


@dataclass(frozen=True)
class DoublingReport:
    """Doubling ratio |2A|/|A| and the per-step ratios |2^{k+1}A|/|2^k A|."""

    doubling: Fraction
    ratios: tuple[Fraction, ...]


@dataclass(frozen=True)
class SumsetStructureResult:
    q: CosetProgression
    x: Coords
    x_prime: Coords
    k: int
    doubling_index: int
    core: FiniteSet
    core_center: Coords
    translate_count: int
    adjoined_steps: tuple[tuple[Coords, Coords, Coords], ...]  # (a_i, b_i, c_i)
    adjoined_base: Coords
    l: int
    l_inner: int
    details: dict = field(default_factory=dict, compare=False)

    @property
    def rank_out(self) -> int:
        return self.q.rank


def symmetric_core(a: FiniteSet) -> tuple[FiniteSet, Coords]:
    """Largest-representation symmetric core: x maximizing the number of
    pair sums hitting it, F = {a in A : x - a in A}; then F = x - F and
    |F| >= |A|^2 / |2A|."""
    if not len(a):
        raise PreconditionError("symmetric core of an empty set")
    g = a.group
    counts: dict[Coords, int] = {}
    for p in a.elements:
        for q in a.elements:
            s = g.add(p, q)
            counts[s] = counts.get(s, 0) + 1
    best = max(counts.values())
    x = min(s for s, c in counts.items() if c == best)
    f = FiniteSet(g, [p for p in a.elements if g.sub(x, p) in a])
    neg_check = FiniteSet(g, [g.sub(x, p) for p in f])
    if neg_check != f:
        raise AssertionError("core is not x-symmetric")
    two_a = sumset(a, a)
    if len(f) * len(two_a) < len(a) * len(a):
        raise AssertionError("core size bound |F| >= |A|^2/|2A| failed")
    return f, x


def find_doubling_index(a: FiniteSet, d: int, cap: int = DEFAULT_CAP,
                        ) -> tuple[int, DoublingReport]:
    """Least k' with |2^{k'+1} A| <= 2^d |2^{k'} A|."""
    if d < 1:
        raise PreconditionError("dimension parameter must be positive")
    ratios = []
    current = a
    k = 0
    while True:
        nxt = sumset(current, current)
        if len(nxt) > cap:
            raise CapExceededError("doubling scan exceeds cap",
                                   needed=len(nxt), cap=cap)
        ratios.append(Fraction(len(nxt), len(current)))
        if len(nxt) <= (2 ** d) * len(current):
            doubling = Fraction(len(sumset(a, a)), len(a))
            return k, DoublingReport(doubling, tuple(ratios))
        current = nxt
        k += 1


def freiman_extract(f: FiniteSet, r_max: int = 4,
                    budget: EngineBudget | None = None,
                    cap: int = DEFAULT_CAP) -> CosetProgression:
    """Proper coset progression with image inside 2F - 2F (engine call)."""
    p = extract_from_symmetric_core(f, r_max=r_max, budget=budget, cap=cap)
    if not is_proper(p, 1, cap).proper:
        raise AssertionError("engine returned an improper progression")
    return p


def adjoin_steps(p: CosetProgression, a: FiniteSet, k_prime: int,
                 x0: Coords, cap: int = DEFAULT_CAP):
    """Cover 2^{k'+2} A by m translates 2 x0 + a_i + Image(P) and adjoin
    the a_i as new steps with dimension one.

    Returns (P', x1, m, steps) where steps lists (a_i, b_i, c_i) with
    a_i = b_i - c_i, b_i, c_i in 2^{k'+2}A, and
    x1 = 2 x0 + sum (b_i + c_i).  Verified exactly:
    S in union(2x0 + a_i + Image(P)) in 2x0 + Image(P') and
    x1 + Image(P') in (m+1) 2^{k'+3} A.
    """
    g = a.group
    s = iterated_sumset(a, 2 ** (k_prime + 2), cap)
    im_p = image(p, 1, cap)
    two_x0 = g.scale(2, x0)
    shifted = im_p.translate(two_x0)
    if not shifted.as_set() <= s.as_set():
        raise PreconditionError("premise 2x0 + Image(P) in 2^{k'+2}A fails")

    bases = greedy_cover(s, im_p)
    steps = []
    translates = []
    for base in bases:
        a_i = g.sub(base, two_x0)
        b_i, c_i = base, two_x0  # base in S and 2x0 in S, so a_i = b_i - c_i
        if b_i not in s or c_i not in s:
            raise AssertionError("translate decomposition left 2^{k'+2}A")
        steps.append((a_i, b_i, c_i))
        translates.append(base)
    m = len(steps)

    new_dims = p.dims + tuple(Fraction(1) for _ in range(m))
    new_steps = p.steps + tuple(a_i for a_i, _, _ in steps)
    p_prime = CosetProgression(Gap(g, new_dims, new_steps), p.symmetry)

    # Union covers S and sits inside 2x0 + Image(P').
    union = set()
    for base in translates:
        for y in im_p.elements:
            union.add(g.add(base, y))
    if not s.as_set() <= union:
        raise AssertionError("translate union fails to cover 2^{k'+2}A")
    im_p_prime = image(p_prime, 1, cap)
    shifted_prime = im_p_prime.translate(two_x0).as_set()
    if not union <= shifted_prime:
        raise AssertionError("union escapes 2x0 + Image(P')")

    # Image(P') in Image(P) + sum [-1,1].(b_i - c_i), exactly.
    spread = im_p
    for a_i, _, _ in steps:
        seg = FiniteSet(g, [g.zero(), a_i, g.neg(a_i)])
        spread = sumset(spread, seg)
    if not im_p_prime.as_set() <= spread.as_set():
        raise AssertionError("Image(P') escapes the step-interval sum")

    x1 = two_x0
    for _, b_i, c_i in steps:
        x1 = g.add(x1, g.add(b_i, c_i))
    big = iterated_sumset(a, (m + 1) * 2 ** (k_prime + 3), cap)
    shifted_p_prime = im_p_prime.translate(x1)
    inc = verify_inclusion(shifted_p_prime, big)
    if not inc.holds:
        raise AssertionError("x1 + Image(P') escapes (m+1) 2^{k'+3} A")
    return p_prime, x1, m, tuple(steps)


def iterated_structure(a: FiniteSet, l: int, d: int, cap: int = DEFAULT_CAP,
                       threshold: int = DEFAULT_THRESHOLD,
                       ) -> SumsetStructureResult:
    """Full pipeline: proper Q of rank <= d - 1 and x, x' with

        x + Image(Q) in lA in x' + K Image(Q),

    both inclusions verified exactly end to end.  Gate: l^d |A| must reach
    threshold * |lA| (run substitute for the tower constant), and l must
    absorb the covering cost (m+1) 2^{k'+3}.

    When A is symmetric with 0 in A the translates are pinned to
    x = x' = 0 (with the inner multiplier halved to keep the proof exact).
    """
    if l < 1 or d < 1:
        raise PreconditionError("need l >= 1 and d >= 1")
    if not len(a):
        raise PreconditionError("empty input set")
    g = a.group
    la = iterated_sumset(a, l, cap)
    if (l ** d) * len(a) < threshold * len(la):
        raise HypothesisNotMetError(
            f"l^d |A| = {(l ** d) * len(a)} below threshold "
            f"{threshold} * |lA| = {threshold * len(la)}")

    symmetric_mode = a.is_symmetric() and g.zero() in a.as_set()

    a0_base = a.elements[0]
    a0 = a.translate(g.neg(a0_base))  # 0 in A0

    k_prime, doubling = find_doubling_index(a0, d, cap)
    core_input = iterated_sumset(a0, 2 ** k_prime, cap)
    core, x0 = symmetric_core(core_input)
    p = freiman_extract(core, r_max=max(2, d), cap=cap)
    p_prime, x1, m, steps = adjoin_steps(p, a0, k_prime, x0, cap)

    denom = (m + 1) * 2 ** (k_prime + 3)
    l_budget = l // 2 if symmetric_mode else l
    l_inner = l_budget // denom
    if l_inner < 1:
        raise HypothesisNotMetError(
            f"l = {l} cannot absorb the covering cost {denom}")

    co: CoalescenceResult = coalesce(p_prime, l_inner, cap)
    q = co.q
    if q.rank > d - 1:
        raise AssertionError("output rank exceeds d - 1")

    im_q = image(q, 1, cap)
    cover_scale = 2 ** (k_prime + 2)  # the set the m translates cover is cA0
    shift_count = -((-l) // cover_scale)  # ceil(l / c)
    if symmetric_mode:
        x = g.zero()
        x_prime = g.zero()
    else:
        x = g.add(g.scale(l, a0_base), g.scale(l_inner, x1))
        x_prime = g.add(g.scale(l, a0_base),
                        g.scale(shift_count, g.scale(2, x0)))

    shifted_q = im_q.translate(x)
    inc = verify_inclusion(shifted_q, la)
    if not inc.holds:
        raise AssertionError(f"inner sandwich failed at {inc.counterexample}")

    bound = 2 * (-((-shift_count) // l_inner)) * co.k + 2
    target_shifted = {g.sub(z, x_prime) for z in la.elements}
    grown = im_q
    k_total = 1
    while not target_shifted <= grown.as_set():
        if k_total >= bound:
            raise AssertionError("outer sandwich exceeded its budget")
        new = sumset(grown, im_q)
        if len(new) == len(grown):
            raise AssertionError("outer sandwich stabilized before covering")
        if len(new) > cap:
            raise CapExceededError("outer sandwich exceeds cap",
                                   needed=len(new), cap=cap)
        grown = new
        k_total += 1

    details = {
        "doubling": doubling,
        "threshold": threshold,
        "coalescence": co.details,
        "symmetric_mode": symmetric_mode,
        "size_a": len(a), "size_la": len(la), "size_q": len(im_q),
    }
    return SumsetStructureResult(
        q=q, x=x, x_prime=x_prime, k=k_total, doubling_index=k_prime,
        core=core, core_center=x0, translate_count=m,
        adjoined_steps=steps, adjoined_base=x1, l=l, l_inner=l_inner,
        details=details)


def sarkozy_gate_l(a_size: int, g_order: int, c2: int = 2) -> int:
    """Smallest l passing the dense-set gate l |A| >= C2 |G|."""
    return max(1, -((-c2 * g_order) // a_size))


def sarkozy_check(a: FiniteSet, l: int, cap: int = DEFAULT_CAP):
    """Is lA exactly a coset of the subgroup generated by A - A?

    Returns (holds, witness base point or None, smallest l at which the
    conclusion first holds within the scan range).
    """
    g = a.group
    if g.order() is None:
        raise PreconditionError("sarkozy check needs a finite ambient group")
    if not len(a):
        raise PreconditionError("empty input set")
    diffs = difference_set(a, a)
    h = subgroup_generated(diffs, cap)
    h_set = h.elements.as_set()

    def coset_at(k: int):
        la = iterated_sumset(a, k, cap)
        if len(la) != len(h_set):
            return None
        base = la.elements[0]
        if all(g.sub(z, base) in h_set for z in la.elements):
            return base
        return None

    smallest = None
    for k in range(1, max(l, g.order()) + 1):
        if coset_at(k) is not None:
            smallest = k
            break
    witness = coset_at(l)
    return witness is not None, witness, smallest


def freiman_hom_check(mapping: dict, domain: FiniteSet, target_group):
    """Exhaustive additive-quadruple check for f: X -> G'.

    Returns (is_hom, witness) where the witness is a quadruple
    (x1, x2, x3, x4) with x1 + x2 = x3 + x4 but
    f(x1) + f(x2) != f(x3) + f(x4).
    """
    g = domain.group
    gt = target_group
    for x in domain.elements:
        if g.reduce(x) not in mapping:
            raise PreconditionError(f"map not total on X: missing {x}")
    by_sum: dict[Coords, tuple] = {}
    for x1 in domain.elements:
        for x2 in domain.elements:
            s = g.add(x1, x2)
            fs = gt.add(gt.reduce(mapping[x1]), gt.reduce(mapping[x2]))
            if s in by_sum:
                prev_pair, prev_fs = by_sum[s]
                if prev_fs != fs:
                    return False, (x1, x2, prev_pair[0], prev_pair[1])
            else:
                by_sum[s] = ((x1, x2), fs)
    return True, None
