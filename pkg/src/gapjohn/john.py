"""Core constructions: discrete John theorem on lattices, rank reduction,
iterative properization of convex coset progressions, and the John-type
theorems for GAPs / coset progressions, all emitting exact certificates.

Worst-case constants from the underlying theory are replaced throughout by
per-run certified factors: the inscribed-ellipsoid quality rho and the LLL
orthogonality defect combine, via the Cramer's-rule bound, into a rational
dilation factor lambda that every certificate records and every claimed
inclusion is checked against exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from . import linalg
from .errors import (CapExceededError, PreconditionError, RetryLimitError)
from .groups import (AmbientGroup, Coords, FiniteSet, FiniteSubgroup,
                     RationalVectorGroup, subgroup_generated, trivial_subgroup)
from .lattices import (Lattice, complete_basis, enumerate_coords,
                       point_count_bound, primitive_factor, reduced_basis)
from .linalg import Mat
from .polytopes import (SymmetricPolytope, box_polytope, inscribed_ellipsoid)
from .progressions import (CosetProgression, Gap, MembershipSolver,
                           PropernessResult, gap_progression, image, is_proper)

DEFAULT_CAP = 500_000


@dataclass(frozen=True)
class ConvexCosetProgression:
    """Quintuplet (B, Gamma, d, phi, H): polytope body, lattice, and a
    homomorphism into the ambient group given by the images of the lattice
    basis vectors.  Image = phi(B intersect Gamma) + H."""

    body: SymmetricPolytope
    lattice: Lattice
    hom_images: tuple[Coords, ...]
    symmetry: FiniteSubgroup

    def __post_init__(self):
        if self.body.dim != self.lattice.dim:
            raise PreconditionError("body and lattice dimensions differ")
        if len(self.hom_images) != self.lattice.dim:
            raise PreconditionError("need one homomorphism image per basis vector")
        g = self.group
        object.__setattr__(self, "hom_images",
                           tuple(g.reduce(w) for w in self.hom_images))

    @property
    def group(self):
        return self.symmetry.group

    @property
    def rank(self) -> int:
        return self.body.dim

    def dilate(self, t) -> "ConvexCosetProgression":
        return ConvexCosetProgression(self.body.dilate(t), self.lattice,
                                      self.hom_images, self.symmetry)

    def phi(self, n: Sequence[int]) -> Coords:
        g = self.group
        acc = g.zero()
        for m, w in zip(n, self.hom_images):
            if m:
                acc = g.add(acc, g.scale(m, w))
        return acc

    def lattice_coords(self, t=1, cap: int = DEFAULT_CAP):
        return enumerate_coords(self.body.dilate(t), self.lattice, cap=cap)

    def image(self, t=1, cap: int = DEFAULT_CAP) -> FiniteSet:
        g = self.group
        out = set()
        h_els = self.symmetry.elements.as_set()
        for n in self.lattice_coords(t, cap):
            base = self.phi(n)
            for h in h_els:
                out.add(g.add(base, h))
        return FiniteSet._raw(g, frozenset(out))

    def is_proper(self, t=1, cap: int = DEFAULT_CAP) -> PropernessResult:
        """Hash-scan properness of the t-dilate; first collision wins."""
        g = self.group
        seen: dict[Coords, tuple] = {}
        h_els = self.symmetry.elements.elements
        checked = 0
        for n in self.lattice_coords(t, cap):
            base = self.phi(n)
            for h in h_els:
                val = g.add(base, h)
                key = (n, h)
                if val in seen:
                    return PropernessResult(False, (key, seen[val]), checked)
                seen[val] = key
                checked += 1
        return PropernessResult(True, None, checked)


def to_convex(p: CosetProgression) -> ConvexCosetProgression:
    """Box body, standard lattice, steps as basis images, same symmetry."""
    if not isinstance(p.group, AmbientGroup):
        raise PreconditionError("to_convex needs an ambient-group progression")
    return ConvexCosetProgression(box_polytope(p.dims),
                                  Lattice.standard(p.rank),
                                  p.steps, p.symmetry)


@dataclass(frozen=True)
class InclusionCert:
    """Exactly verified two-sided inclusion data.

    For an emitted pair (P inner-related to Q): every dilation listed in
    checked_dilations had its inclusion verified exactly; outer_factor and
    inner_factor are the recorded rational dilation factors; method records
    how the expensive side was established (full enumeration or an exact
    piecewise decomposition glued by the sumset-embedding lemma).
    """

    inner_factor: Fraction
    outer_factor: Fraction
    checked_dilations: tuple[Fraction, ...]
    method: str
    details: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class RankReductionTrace:
    """Everything the rank-reduction step did, for audit."""

    witness: tuple
    y: tuple
    factor_n: int
    y_prime: tuple
    torsion_order: int
    transform: Mat
    projected_body: SymmetricPolytope
    new_symmetry_order: int
    checks: tuple = ()


def rank_reduce(p: ConvexCosetProgression, cap: int = DEFAULT_CAP,
                verify_dilations: Sequence = (),
                _properness: PropernessResult | None = None,
                ) -> tuple[ConvexCosetProgression, RankReductionTrace]:
    """One rank-reduction step: a collision in P_(1/2) yields a rank d-1
    progression Q with Image(P_t) in Image(Q_2t) for all t and
    Image(Q_t) in Image(P_t) for t >= 1.  Torsion extends the symmetry
    group by the order of phi(y') mod H."""
    d = p.rank
    if d == 0:
        raise PreconditionError("cannot rank-reduce a rank-0 progression")
    prop = _properness if _properness is not None else p.is_proper(Fraction(1, 2), cap)
    if prop.proper:
        raise PreconditionError("input is 1/2-proper; no reduction applies")
    (n1, h1), (n2, h2) = prop.witness
    g = p.group
    lat = p.lattice

    x1 = lat.from_coords(n1)
    x2 = lat.from_coords(n2)
    y = tuple(a - b for a, b in zip(x1, x2))
    if all(c == 0 for c in y):
        raise AssertionError("collision with equal lattice points")
    factor_n, y_prime = primitive_factor(y, lat)
    phi_y_prime = p.phi(tuple(int(c) for c in lat.coords_of(y_prime)))

    h_els = p.symmetry.elements.as_set()
    torsion_order = None
    acc = g.zero()
    for j in range(1, factor_n + 1):
        acc = g.add(acc, phi_y_prime)
        if acc in h_els:
            torsion_order = j
            break
    if torsion_order is None:
        raise AssertionError("n * phi(y') never entered H")

    if torsion_order == 1 and phi_y_prime in h_els and len(h_els) == 1:
        new_symmetry = p.symmetry
    else:
        gens = set(p.symmetry.generators) | {phi_y_prime}
        seed = FiniteSet(g, set(p.symmetry.elements.as_set()) | {phi_y_prime})
        new_symmetry = subgroup_generated(seed, cap)
        new_symmetry = FiniteSubgroup(tuple(sorted(gens)), new_symmetry.elements)
    if len(new_symmetry) != torsion_order * len(p.symmetry):
        raise AssertionError("|H'| != n |H| after extension")

    completion = complete_basis(y_prime, lat)
    transform = completion.transform
    body_norm = p.body.transform(transform)
    new_images = []
    for col in completion.reordered.columns():
        coords = tuple(int(c) for c in lat.coords_of(col))
        new_images.append(p.phi(coords))
    projected = body_norm.project()
    q = ConvexCosetProgression(projected.dilate(Fraction(1, 2)),
                               Lattice.standard(d - 1),
                               tuple(new_images[:-1]), new_symmetry)

    checks = []
    for t in verify_dilations:
        t = Fraction(t)
        left = p.image(t, cap)
        right = q.image(2 * t, cap)
        ok = left.as_set() <= right.as_set()
        checks.append(("image(P_t) in image(Q_2t)", str(t), ok))
        if not ok:
            raise AssertionError(f"rank reduction outer inclusion failed at t={t}")
        if t >= 1:
            left2 = q.image(t, cap)
            ok2 = left2.as_set() <= p.image(t, cap).as_set()
            checks.append(("image(Q_t) in image(P_t)", str(t), ok2))
            if not ok2:
                raise AssertionError(f"rank reduction inner inclusion failed at t={t}")

    trace = RankReductionTrace(
        witness=prop.witness, y=y, factor_n=factor_n, y_prime=y_prime,
        torsion_order=torsion_order, transform=transform,
        projected_body=projected, new_symmetry_order=len(new_symmetry),
        checks=tuple(checks))
    return q, trace


def properize_half(p: ConvexCosetProgression, cap: int = DEFAULT_CAP,
                   verify_dilations: Sequence = ()):
    """Iterate rank reduction until the 1/2-dilate is proper.

    Terminates because rank strictly decreases and rank-0 progressions are
    trivially proper.  Returns the 1/2-proper progression and the trace of
    every reduction taken.
    """
    current = p
    traces = []
    while current.rank > 0:
        prop = current.is_proper(Fraction(1, 2), cap)
        if prop.proper:
            break
        current, trace = rank_reduce(current, cap, verify_dilations,
                                     _properness=prop)
        traces.append(trace)
    return current, tuple(traces)


def conv_john(p: ConvexCosetProgression, t=Fraction(1, 2),
              cap: int = DEFAULT_CAP, verify_dilations: Sequence = ()):
    """t-proper convex coset progression sandwiching P (t >= 1/2).

    Inclusion factors: Image(P_t') in Image(Q_{2^{d-r+1} t t'}) for all
    t' > 0 and Image(Q_{2tt'}) in Image(P_t') for t' >= 1.
    """
    t = Fraction(t)
    if t < Fraction(1, 2):
        raise PreconditionError("conv_john needs t >= 1/2")
    half_proper, traces = properize_half(p, cap, verify_dilations)
    q = half_proper.dilate(Fraction(1, 2) / t)
    return q, traces


@dataclass(frozen=True)
class DiscreteJohnResult:
    gap: Gap
    cert: InclusionCert
    report: object  # ReducedBasisReport
    ellipsoid: object


def discrete_john(body: SymmetricPolytope, lat: Lattice,
                  cap: int = DEFAULT_CAP, eps=Fraction(1, 16),
                  verify_dilations: Sequence = (1,)) -> DiscreteJohnResult:
    """Infinitely proper GAP P in the lattice with, for every t > 0,

        (lambda^-1 t . B) cap Gamma  in  Image(P_t)  in  (t . B) cap Gamma,

    where lambda = rho * d^(3/2) * defect is certified from this run's
    inscribed-ellipsoid quality and reduction defect.  Steps are the
    reduced basis; dims are rational lower roundings of 1/(d |v_i|).
    """
    d = lat.dim
    if body.dim != d:
        raise PreconditionError("body and lattice dimensions differ")
    if d == 0:
        gap = Gap(RationalVectorGroup(0), (), ())
        cert = InclusionCert(Fraction(1), Fraction(1), (Fraction(1),),
                             "exact-enumeration", {"rank": 0})
        return DiscreteJohnResult(gap, cert, None, None)

    ellipsoid = inscribed_ellipsoid(body, eps)
    gram = ellipsoid.shape
    report = reduced_basis(lat, gram)

    # Rational upper bounds on the Q-norms of the reduced vectors.
    norm_up = [linalg.rational_sqrt_ceil(nsq) for nsq in report.norms_sq]
    dims = tuple(Fraction(1) / (d * u) for u in norm_up)
    steps = report.vectors
    gap = Gap(RationalVectorGroup(d), dims, steps)

    covol_sq = (linalg.mat_det(lat.basis) ** 2) * linalg.mat_det(gram)
    prod_up = Fraction(1)
    for u in norm_up:
        prod_up *= u
    lam_sq = ellipsoid.rho_sq * Fraction(d) ** 3 * prod_up * prod_up / covol_sq
    lam = max(Fraction(1), linalg.rational_sqrt_ceil(lam_sq))

    checked = []
    details: dict = {
        "rank": d,
        "rho_sq": ellipsoid.rho_sq,
        "defect_sq": report.defect_sq,
        "lambda_sq": lam_sq,
        "norms_sq": report.norms_sq,
    }
    coeff_inv = _coeff_matrix(report)
    for t in verify_dilations:
        t = Fraction(t)
        # Inner: every lattice point of (t/lambda).B lies in the t-box.
        inner_pts = enumerate_coords(body.dilate(t / lam), lat, cap=cap)
        bounds = [int((t * n) // 1) for n in dims]
        for n in inner_pts:
            x = lat.from_coords(n)
            m = linalg.mat_vec(coeff_inv, x)
            if not all(abs(c) <= b for c, b in zip(m, bounds)):
                raise AssertionError("discrete John inner inclusion failed")
        # Outer: every box combination lands inside t.B.
        count = 1
        for b in bounds:
            count *= 2 * b + 1
        if count > cap:
            raise CapExceededError("outer verification box exceeds cap",
                                   needed=count, cap=cap)
        tb = body.dilate(t)
        for coeffs in itertools.product(*[range(-b, b + 1) for b in bounds]):
            x = [Fraction(0)] * d
            for c, v in zip(coeffs, steps):
                if c:
                    for i in range(d):
                        x[i] += c * v[i]
            if not tb.membership(x):
                raise AssertionError("discrete John outer inclusion failed")
        checked.append(t)

    # Size bounds with run constants: size(P) <= |B cap Gamma| and
    # |B cap Gamma| <= size(P_lambda), both exact.
    lattice_count = len(enumerate_coords(body, lat, cap=cap))
    size_p = 1
    size_p_lam = 1
    for n in dims:
        size_p *= 2 * int(n // 1) + 1
        size_p_lam *= 2 * int((lam * n) // 1) + 1
    if not (size_p <= lattice_count <= size_p_lam):
        raise AssertionError("discrete John size bounds failed")
    pc_count, pc_bound, pc_holds = point_count_bound(body, lat, cap=cap)
    details.update({
        "size_p": size_p,
        "lattice_count": lattice_count,
        "size_p_lambda": size_p_lam,
        "point_count_bound": (pc_count, pc_bound, pc_holds),
    })
    cert = InclusionCert(Fraction(1), lam, tuple(checked),
                         "exact-enumeration", details)
    return DiscreteJohnResult(gap, cert, report, ellipsoid)


def _coeff_matrix(report) -> Mat:
    """Inverse of the matrix whose columns are the reduced basis vectors."""
    cached = getattr(report, "_coeff_cache", None)
    if cached is None:
        d = len(report.vectors)
        m = tuple(tuple(report.vectors[j][i] for j in range(d)) for i in range(d))
        cached = linalg.mat_inv(m)
        object.__setattr__(report, "_coeff_cache", cached)
    return cached


def _gap_bounds(dims: Sequence[Fraction], t) -> list[int]:
    t = Fraction(t)
    return [int((t * n) // 1) for n in dims]


def _segment_elements(g, w: Coords, k: int) -> list[Coords]:
    out = {g.zero()}
    cur = g.zero()
    for _ in range(k):
        cur = g.add(cur, w)
        if cur in out:
            break
        out.add(cur)
        out.add(g.neg(cur))
    return sorted(out)


def verify_subset_decomposed(q: CosetProgression, p: CosetProgression,
                             budget_limit: Fraction,
                             cap: int = DEFAULT_CAP) -> Fraction | None:
    """Exact piecewise proof that Image(Q) lies in Image(P_U), U <= limit.

    Image(Q) = H_Q + sum of step segments; each piece is pushed into
    Image(P_{u_i}) element by element (membership witnesses, no
    enumeration of the big sets), and the pieces glue by the exact sumset
    embedding Image(P_a) + Image(P_b) in Image(P_{a+b}).  Returns the
    achieved total budget U, or None when the limit cannot be met.
    """
    pieces: list[list[Coords]] = []
    h_elements = list(q.symmetry.elements)
    if len(h_elements) > 1:
        pieces.append(h_elements)
    g = q.group
    for w, k in zip(q.steps, q.bounds(1)):
        if k >= 1:
            pieces.append(_segment_elements(g, w, k))
    total = Fraction(0)
    for piece in pieces:
        u = Fraction(1)
        placed = False
        while u + total <= budget_limit:
            solver = MembershipSolver(p, u)
            if all(solver.witness(x) is not None for x in piece):
                placed = True
                break
            u *= 2
        if not placed:
            return None
        total += u
    return max(total, Fraction(1))


def gap_john(p: CosetProgression, t=1, cap: int = DEFAULT_CAP,
             eps=Fraction(1, 16), deep_verify: bool | None = None,
             ) -> tuple[CosetProgression, InclusionCert]:
    """t-proper coset progression Q with

        Image(Q) in Image(P) in Image(Q_lambda),

    lambda recorded.  Pipeline: convexify, properize at 1/2 by rank
    reduction, run the discrete John construction on (1/2) . B' over the
    reduced lattice, push the steps through the homomorphism (tensor
    summing with the identity on the symmetry group), dilate by 1/t.

    With deep_verify (the default when Image(P) is enumerable under cap)
    both inclusions are checked exactly element by element and the
    recorded lambda is sharpened to the smallest verifying power of two.
    Otherwise the certificate records the structural factor; callers such
    as gap_john_outer re-establish the inclusions they need end to end.
    """
    t = Fraction(t)
    if t < 1:
        raise PreconditionError("gap_john needs t >= 1")
    d = p.rank
    g = p.group
    if deep_verify is None:
        deep_verify = p.box_count(1) <= cap

    if d == 0:
        im = image(p, 1, cap)
        cert = InclusionCert(t, Fraction(1), (Fraction(1),),
                             "exact-enumeration",
                             {"rank_in": 0, "rank_out": 0,
                              "size_p": len(im), "size_q": len(im),
                              "symmetry_order": len(p.symmetry), "t": t})
        return p, cert

    c = to_convex(p)
    c_star, traces = properize_half(c, cap)
    r = c_star.rank

    if r > 0:
        dj = discrete_john(c_star.body.dilate(Fraction(1, 2)), c_star.lattice,
                           cap=cap, eps=eps, verify_dilations=())
        lam_dj = dj.cert.outer_factor
        steps_g = []
        for v in dj.gap.steps:
            coords = c_star.lattice.coords_of(v)
            if not linalg.is_integer_vec(coords):
                raise AssertionError("reduced vector left the lattice")
            steps_g.append(c_star.phi(tuple(int(x) for x in coords)))
        dims_tilde = dj.gap.dims
    else:
        lam_dj = Fraction(1)
        steps_g = []
        dims_tilde = ()

    q1 = CosetProgression(Gap(g, dims_tilde, tuple(steps_g)), c_star.symmetry)
    q = q1.dilate(Fraction(1) / t)
    lam_structural = t * Fraction(2) ** (d - r + 1) * lam_dj

    properness_check = "skipped-cap"
    if q.box_count(t) <= cap:
        prop = is_proper(q, t, cap)
        if not prop.proper:
            raise AssertionError("constructed progression is not t-proper")
        properness_check = "exhaustive"
    size_q = q.box_count(1)  # exact when Q is proper

    details: dict = {
        "rank_in": d, "rank_out": r,
        "structural_outer_factor": lam_structural,
        "lambda_dj": lam_dj,
        "reductions": len(traces),
        "symmetry_order": len(q.symmetry),
        "size_q": size_q,
        "t": t,
        "properness_check": properness_check,
    }

    if not deep_verify:
        cert = InclusionCert(inner_factor=t, outer_factor=lam_structural,
                             checked_dilations=(), method="structural",
                             details=details)
        return q, cert

    im_p = image(p, 1, cap)
    im_q = image(q, 1, cap)
    if len(im_q) != size_q:
        raise AssertionError("proper size formula disagrees with enumeration")
    if not im_q.as_set() <= im_p.as_set():
        raise AssertionError("Image(Q) not inside Image(P)")
    lam = None
    probe = Fraction(1)
    while probe < lam_structural:
        ok, _ = _contains_all(q, probe, im_p.elements)
        if ok:
            lam = probe
            break
        probe *= 2
    if lam is None:
        ok, _ = _contains_all(q, lam_structural, im_p.elements)
        if not ok:
            raise AssertionError("structural lambda failed exact verification")
        lam = lam_structural
    size_p = len(im_p)
    if not size_q <= size_p:
        raise AssertionError("size(Q) exceeds size(P)")
    lower_factor = (4 * _ceil(lam) + 1) ** q.rank
    if size_p > lower_factor * size_q:
        raise AssertionError("doubling lower bound violated")
    details.update({"size_p": size_p, "size_lower_factor": lower_factor})

    cert = InclusionCert(inner_factor=t, outer_factor=lam,
                         checked_dilations=(Fraction(1),),
                         method="exact-enumeration", details=details)
    return q, cert


def _contains_all(q: CosetProgression, t, elements) -> tuple[bool, dict]:
    solver = MembershipSolver(q, t)
    for x in elements:
        if solver.witness(x) is None:
            return False, {"missing": x}
    return True, {}


def _ceil(x: Fraction) -> int:
    return int(-((-x) // 1))


def gap_john_outer(p: CosetProgression, t=1, cap: int = DEFAULT_CAP,
                   eps=Fraction(1, 16), retry_limit: int = 6,
                   ) -> tuple[CosetProgression, InclusionCert]:
    """t-proper Q containing P:  Image(P) in Image(Q) in Image(P_{lambda t}).

    Adaptive dilation: run gap_john on P_M starting from the lambda a dry
    run on P certifies, verify Image(P) in Image(Q) exactly, and double M
    on failure (bounded by retry_limit).  The outer inclusion is proved
    either by the inner run's full enumeration or by exact piecewise
    decomposition against the original P, with the achieved budget
    recorded as lambda * t.
    """
    t = Fraction(t)
    if t < 1:
        raise PreconditionError("gap_john_outer needs t >= 1")
    d = p.rank
    if d == 0:
        q, cert = gap_john(p, t, cap, eps)
        details = dict(cert.details)
        details["dilation"] = Fraction(1)
        return q, InclusionCert(Fraction(1), Fraction(1),
                                cert.checked_dilations, cert.method, details)

    im_p = image(p, 1, cap)
    _, dry = gap_john(p, t, cap, eps)
    m = max(dry.outer_factor, t, Fraction(2))

    last_error = None
    for attempt in range(retry_limit):
        p_hat = p.dilate(m)
        q, inner_cert = gap_john(p_hat, t, cap, eps)
        ok, info = _contains_all(q, 1, im_p.elements)
        if not ok:
            last_error = info
            m *= 2
            continue
        if inner_cert.method == "exact-enumeration":
            # Inner run enumerated Image(P_m) and checked Image(Q) inside it.
            outer_budget = m
            outer_method = "exact-enumeration"
        else:
            limit = (Fraction(q.rank + 2) * 2 * m + 4) * t
            u = verify_subset_decomposed(q, p, budget_limit=limit, cap=cap)
            if u is None:
                raise AssertionError("outer decomposition exceeded its budget")
            outer_budget = u
            outer_method = "structural-decomposition"
        lam = outer_budget / t
        details = {
            "dilation": m,
            "attempts": attempt + 1,
            "rank_out": q.rank,
            "size_p": len(im_p),
            "size_q": inner_cert.details["size_q"],
            "inner_method": inner_cert.method,
            "outer_method": outer_method,
            "structural_outer_factor": inner_cert.details.get(
                "structural_outer_factor"),
            "t": t,
        }
        cert = InclusionCert(inner_factor=Fraction(1), outer_factor=lam,
                             checked_dilations=(Fraction(1),),
                             method=outer_method, details=details)
        return q, cert
    raise RetryLimitError(
        f"gap_john_outer failed after {retry_limit} retries: {last_error}")
