"""Exact symmetric rational polytopes in H-representation.

A body is a finite list of constraints |<a_j, x>| <= b_j with rational a_j
and b_j > 0, so every body is symmetric, closed, has 0 strictly inside,
and is bounded iff the normals span (checked at construction).  Membership,
dilation, linear transform, Fourier-Motzkin projection, vertex enumeration
and volume are all exact; only the inscribed-ellipsoid search runs in
floating point, after which the ellipsoid is rounded back to rationals and
re-verified exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, sqrt
from typing import Iterable, Sequence

from . import linalg
from .errors import CapExceededError, PreconditionError
from .linalg import Mat, Vec

# One-sided rows (c, rhs) meaning <c, x> <= rhs; used by projection and
# integer enumeration.
OneSided = tuple[tuple[Fraction, ...], Fraction]


def _normalize_onesided(c: Sequence[Fraction], rhs: Fraction) -> OneSided | None:
    """Scale to a primitive integer normal; None for a trivial row."""
    if all(x == 0 for x in c):
        if rhs < 0:
            raise PreconditionError("infeasible constraint system")
        return None
    lcm = 1
    for x in c:
        lcm = lcm * x.denominator // gcd(lcm, x.denominator)
    ints = [int(x * lcm) for x in c]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    return tuple(Fraction(x // g) for x in ints), rhs * lcm / g


def _dedupe_onesided(rows: Iterable[OneSided]) -> list[OneSided]:
    best: dict[tuple, Fraction] = {}
    for c, rhs in rows:
        if c in best:
            if rhs < best[c]:
                best[c] = rhs
        else:
            best[c] = rhs
    return [(c, rhs) for c, rhs in best.items()]


def fm_eliminate_last(rows: Sequence[OneSided]) -> list[OneSided]:
    """One Fourier-Motzkin step removing the last variable (exact)."""
    zero, pos, neg = [], [], []
    for c, rhs in rows:
        last = c[-1]
        if last == 0:
            zero.append((c[:-1], rhs))
        elif last > 0:
            pos.append((c, rhs))
        else:
            neg.append((c, rhs))
    out = []
    for c, rhs in zero:
        n = _normalize_onesided(c, rhs)
        if n:
            out.append(n)
    for (cp, rp), (cn, rn) in itertools.product(pos, neg):
        # cp[-1] > 0 > cn[-1]; the combination cancels the last variable.
        alpha, beta = -cn[-1], cp[-1]
        comb = tuple(alpha * a + beta * b for a, b in zip(cp[:-1], cn[:-1]))
        n = _normalize_onesided(comb, alpha * rp + beta * rn)
        if n:
            out.append(n)
    return _dedupe_onesided(out)


def _projection_chain(rows: Sequence[OneSided], dim: int) -> list[list[OneSided]]:
    """Systems over variables 1..k for k = dim..1 (index k-1 of the result)."""
    chain = [None] * dim
    current = _dedupe_onesided(
        r for r in (_normalize_onesided(c, rhs) for c, rhs in rows) if r)
    chain[dim - 1] = current
    for k in range(dim - 1, 0, -1):
        current = fm_eliminate_last(current)
        chain[k - 1] = current
    return chain


def enumerate_integer_points(rows: Sequence[OneSided], dim: int,
                             cap: int = 10**6):
    """All integer points satisfying every row, in lexicographic order.

    Works by DFS over a Fourier-Motzkin projection chain; exact bounds at
    every level, so no point is missed and none is spurious.
    """
    if dim == 0:
        for c, rhs in rows:
            if rhs < 0:
                return
        yield ()
        return
    chain = _projection_chain(rows, dim)
    out_count = 0

    def bounds(prefix: tuple[int, ...], level: int):
        lo, hi = None, None
        for c, rhs in chain[level]:
            ck = c[level]
            if ck == 0:
                continue
            slack = rhs - sum(cj * nj for cj, nj in zip(c, prefix))
            bound = slack / ck
            if ck > 0:
                hi = bound if hi is None or bound < hi else hi
            else:
                lo = bound if lo is None or bound > lo else lo
        return lo, hi

    def rec(prefix: tuple[int, ...], level: int):
        nonlocal out_count
        lo, hi = bounds(prefix, level)
        if lo is None or hi is None:
            raise PreconditionError("unbounded constraint system")
        n = int(-((-lo) // 1))  # ceil
        top = int(hi // 1)      # floor
        while n <= top:
            point = prefix + (n,)
            if level == dim - 1:
                out_count += 1
                if out_count > cap:
                    raise CapExceededError("integer point enumeration exceeds cap",
                                           cap=cap)
                yield point
            else:
                yield from rec(point, level + 1)
            n += 1

    yield from rec((), 0)


@dataclass(frozen=True)
class SymmetricPolytope:
    """Centrally symmetric rational polytope {x : |<a_j, x>| <= b_j}."""

    dim: int
    constraints: tuple[tuple[Vec, Fraction], ...]

    def __post_init__(self):
        canon = []
        seen: dict[tuple, Fraction] = {}
        for a, b in self.constraints:
            a = tuple(Fraction(x) for x in a)
            b = Fraction(b)
            if len(a) != self.dim:
                raise ValueError("constraint dimension mismatch")
            if b <= 0:
                raise ValueError("constraint bound must be positive")
            norm = _normalize_onesided(a, b)
            if norm is None:
                continue
            c, rhs = norm
            # |<a,x>| <= b and |<-a,x>| <= b are the same constraint.
            for x in c:
                if x != 0:
                    if x < 0:
                        c = tuple(-y for y in c)
                    break
            if c in seen:
                if rhs < seen[c]:
                    seen[c] = rhs
            else:
                seen[c] = rhs
        canon = tuple(sorted(seen.items()))
        object.__setattr__(self, "constraints", canon)
        if self.dim > 0:
            rank = _rank([c for c, _ in canon])
            if rank < self.dim:
                raise ValueError("constraint normals do not span: body unbounded")

    # -- basic geometry ------------------------------------------------

    def onesided(self) -> list[OneSided]:
        rows = []
        for a, b in self.constraints:
            rows.append((a, b))
            rows.append((tuple(-x for x in a), b))
        return rows

    def membership(self, x: Sequence) -> bool:
        """Exact closed-body membership test."""
        if len(x) != self.dim:
            raise PreconditionError("point dimension mismatch")
        xs = tuple(Fraction(v) for v in x)
        for a, b in self.constraints:
            v = sum(ai * xi for ai, xi in zip(a, xs))
            if v > b or -v > b:
                return False
        return True

    def dilate(self, t) -> "SymmetricPolytope":
        t = Fraction(t)
        if t <= 0:
            raise PreconditionError("dilation factor must be positive")
        return SymmetricPolytope(
            self.dim, tuple((a, b * t) for a, b in self.constraints))

    def transform(self, u: Mat) -> "SymmetricPolytope":
        """Image U(B) of the body under an invertible rational matrix."""
        u_inv = linalg.mat_inv(linalg.frac_mat(u))
        new = []
        for a, b in self.constraints:
            # x in U(B) iff U^-1 x in B iff <a, U^-1 x> = <(U^-1)^T a, x> <= b
            pulled = tuple(sum(u_inv[i][k] * a[i] for i in range(self.dim))
                           for k in range(self.dim))
            new.append((pulled, b))
        return SymmetricPolytope(self.dim, tuple(new))

    def project(self) -> "SymmetricPolytope":
        """Exact shadow under dropping the last coordinate (Fourier-Motzkin)."""
        if self.dim < 1:
            raise PreconditionError("cannot project a 0-dimensional body")
        rows = fm_eliminate_last(self.onesided())
        pairs: dict[tuple, Fraction] = {}
        for c, rhs in rows:
            key = c
            for x in c:
                if x != 0:
                    if x < 0:
                        key = tuple(-y for y in c)
                    break
            if key not in pairs or rhs < pairs[key]:
                pairs[key] = rhs
        body = SymmetricPolytope(self.dim - 1, tuple(pairs.items()))
        return body.pruned()

    def pruned(self) -> "SymmetricPolytope":
        """Drop constraints that are strictly slack at every vertex."""
        if self.dim == 0 or len(self.constraints) <= self.dim:
            return self
        verts = self.vertices()
        keep = []
        for a, b in self.constraints:
            m = max(abs(sum(ai * vi for ai, vi in zip(a, v))) for v in verts)
            if m == b:
                keep.append((a, b))
        if len(keep) == len(self.constraints):
            return self
        body = SymmetricPolytope(self.dim, tuple(keep))
        object.__setattr__(body, "_vertex_cache", verts)
        return body

    # -- vertices and volume --------------------------------------------

    def vertices(self) -> tuple[Vec, ...]:
        cached = getattr(self, "_vertex_cache", None)
        if cached is not None:
            return cached
        verts = _enumerate_vertices(self)
        object.__setattr__(self, "_vertex_cache", verts)
        return verts

    def volume(self, dim_limit: int = 4) -> Fraction:
        """Exact Lebesgue volume via a fan triangulation over the facets."""
        if self.dim > dim_limit:
            raise PreconditionError(
                f"volume limited to dimension {dim_limit} (got {self.dim})")
        if self.dim == 0:
            return Fraction(1)
        total = Fraction(0)
        fact = 1
        for k in range(1, self.dim + 1):
            fact *= k
        for simplex in _facet_simplices(self):
            det = linalg.mat_det(tuple(zip(*simplex)))
            total += abs(det)
        return total / fact

    def support_on_vertices(self, c: Sequence[Fraction]) -> Fraction:
        return max(sum(ci * vi for ci, vi in zip(c, v)) for v in self.vertices())


def box_polytope(dims: Sequence) -> SymmetricPolytope:
    """The box prod [-N_i, N_i] as a symmetric polytope."""
    d = len(dims)
    cons = []
    for i, n in enumerate(dims):
        a = tuple(Fraction(1 if j == i else 0) for j in range(d))
        cons.append((a, Fraction(n)))
    return SymmetricPolytope(d, tuple(cons))


def _rank(vectors: Sequence[Sequence[Fraction]]) -> int:
    rows = [list(v) for v in vectors]
    n = len(rows[0]) if rows else 0
    rank = 0
    for col in range(n):
        pivot = None
        for r in range(rank, len(rows)):
            if rows[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = Fraction(1) / rows[rank][col]
        rows[rank] = [x * inv for x in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[rank])]
        rank += 1
        if rank == n:
            break
    return rank


def _enumerate_vertices(body: SymmetricPolytope) -> tuple[Vec, ...]:
    d = body.dim
    if d == 0:
        return ((),)
    rows = body.onesided()
    verts = set()
    for subset in itertools.combinations(range(len(rows)), d):
        mat = tuple(rows[i][0] for i in subset)
        if linalg.mat_det(mat) == 0:
            continue
        rhs = tuple(rows[i][1] for i in subset)
        point = linalg.solve(mat, rhs)
        ok = True
        for c, b in rows:
            if sum(ci * pi for ci, pi in zip(c, point)) > b:
                ok = False
                break
        if ok:
            verts.add(tuple(point))
    return tuple(sorted(verts))


def _facet_simplices(body: SymmetricPolytope):
    """Simplices (vertex d-tuples) fanning each facet from the origin."""
    d = body.dim
    rows = body.onesided()
    verts = body.vertices()
    tight = {v: frozenset(i for i, (c, b) in enumerate(rows)
                          if sum(ci * vi for ci, vi in zip(c, v)) == b)
             for v in verts}

    def face_simplices(face_verts: tuple, face_dim: int):
        if face_dim == 0:
            yield (face_verts[0],)
            return
        v0 = face_verts[0]
        others = [v for v in face_verts if v != v0]
        common = frozenset.intersection(*(tight[v] for v in face_verts))
        ridges = set()
        for j in set().union(*(tight[v] for v in others)) - common:
            sub = tuple(v for v in face_verts if j in tight[v])
            if len(sub) >= face_dim and v0 not in sub:
                if _affine_dim(sub) == face_dim - 1:
                    ridges.add(sub)
        for sub in sorted(ridges):
            for s in face_simplices(sub, face_dim - 1):
                yield (v0,) + s

    seen_facets = set()
    for j, (c, b) in enumerate(rows):
        fverts = tuple(v for v in verts if j in tight[v])
        if not fverts or fverts in seen_facets:
            continue
        if _affine_dim(fverts) != d - 1:
            continue
        seen_facets.add(fverts)
        yield from face_simplices(fverts, d - 1)


def _affine_dim(points: Sequence[Vec]) -> int:
    if len(points) <= 1:
        return 0
    base = points[0]
    diffs = [tuple(x - y for x, y in zip(p, base)) for p in points[1:]]
    return _rank(diffs)


# -- inscribed ellipsoid ----------------------------------------------------


@dataclass(frozen=True)
class Ellipsoid:
    """E = {x : x^T Q x <= 1} with exact rational PD shape matrix Q.

    rho records the certified outer factor: the body fits inside
    rho * sqrt(d) * E (exact over the body's vertices); rho >= 1 by
    convention.
    """

    shape: Mat
    rho_sq: Fraction
    eps: Fraction

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def rho(self) -> float:
        return sqrt(float(self.rho_sq))

    def contains(self, x: Sequence[Fraction]) -> bool:
        xs = tuple(Fraction(v) for v in x)
        q = sum(self.shape[i][j] * xs[i] * xs[j]
                for i in range(self.dim) for j in range(self.dim))
        return q <= 1


def _is_positive_definite(q: Mat) -> bool:
    for k in range(1, len(q) + 1):
        minor = tuple(tuple(q[i][j] for j in range(k)) for i in range(k))
        if linalg.mat_det(minor) <= 0:
            return False
    return True


def _ellipsoid_inside_exact(q: Mat, body: SymmetricPolytope) -> bool:
    """E_Q subset of B iff a_j^T Q^-1 a_j <= b_j^2 for every constraint."""
    if not q:
        return True
    q_inv = linalg.mat_inv(q)
    for a, b in body.constraints:
        val = sum(q_inv[i][j] * a[i] * a[j]
                  for i in range(len(q)) for j in range(len(q)))
        if val > b * b:
            return False
    return True


def inscribed_ellipsoid(body: SymmetricPolytope, eps=Fraction(1, 16),
                        max_iter: int = 5000) -> Ellipsoid:
    """Approximate maximum-volume inscribed ellipsoid, exactly certified.

    The optimization runs in floating point (a D-optimal-design style
    ascent on the polar point set a_j / b_j); the resulting shape matrix is
    rounded to rationals, shrunk by (1 - eps), and the inclusion E inside B
    is then verified with exact arithmetic, shrinking further on failure.
    The outer quality rho is measured exactly on the body's vertices.
    """
    import numpy as np

    eps = Fraction(eps)
    if not (0 < eps < 1):
        raise PreconditionError("eps must lie in (0, 1)")
    d = body.dim
    if d == 0:
        return Ellipsoid((), Fraction(1), eps)
    if d == 1:
        r = min(b / abs(a[0]) for a, b in body.constraints)
        return Ellipsoid(((1 / (r * r),),), Fraction(1), eps)

    u = np.array([[float(ai / b) for ai in a] for a, b in body.constraints])
    m = len(u)
    p = np.full(m, 1.0 / m)
    for _ in range(max_iter):
        x = (u.T * p) @ u
        try:
            x_inv = np.linalg.inv(x)
        except np.linalg.LinAlgError:
            x += np.eye(d) * 1e-12
            x_inv = np.linalg.inv(x)
        kappa = np.einsum("ij,jk,ik->i", u, x_inv, u)
        k_max = kappa.max()
        if k_max <= d * (1.0 + 1e-9):
            break
        j = int(kappa.argmax())
        beta = (k_max - d) / (d * (k_max - 1.0))
        p *= 1.0 - beta
        p[j] += beta
    x = (u.T * p) @ u
    kappa = np.einsum("ij,jk,ik->i", u, np.linalg.inv(x), u)
    q_float = float(kappa.max()) * x

    q = tuple(tuple(Fraction(q_float[i][j]).limit_denominator(10**9)
                    for j in range(d)) for i in range(d))
    q = tuple(tuple((q[i][j] + q[j][i]) / 2 for j in range(d)) for i in range(d))
    shrink = (Fraction(1) / (1 - eps)) ** 2
    q = tuple(tuple(v * shrink for v in row) for row in q)
    bump = Fraction(1)
    while not _is_positive_definite(q):
        # Degenerate float output; regularize toward a safely inscribed ball.
        bump = bump * 2
        reg = _ball_shape(body)
        q = tuple(tuple((qij + bump * rij) / 1 for qij, rij in zip(qr, rr))
                  for qr, rr in zip(q, reg))
    for _ in range(60):
        if _ellipsoid_inside_exact(q, body):
            break
        q = tuple(tuple(v * Fraction(4, 3) for v in row) for row in q)
    else:
        raise PreconditionError("could not certify an inscribed ellipsoid")

    s_max = max(
        sum(q[i][j] * v[i] * v[j] for i in range(d) for j in range(d))
        for v in body.vertices())
    rho_sq = max(Fraction(1), s_max / d)
    return Ellipsoid(q, rho_sq, eps)


def _ball_shape(body: SymmetricPolytope) -> Mat:
    """Shape matrix of a ball guaranteed inside the body."""
    d = body.dim
    # radius >= min_j b_j / |a_j|_1 suffices since |<a,x>| <= |a|_1 max|x_i|.
    r = min(b / sum(abs(x) for x in a) for a, b in body.constraints)
    inv = 1 / (r * r)
    return tuple(tuple(inv if i == j else Fraction(0) for j in range(d))
                 for i in range(d))
