"""Exact lattice algebra: HNF, primitive vectors, basis completion,
LLL-reduced bases under a supplied quadratic form, and lattice-point
enumeration inside symmetric polytopes.

Lattices are full-rank and rational; everything the higher layers produce
arises from integer or rational data, and properness certification needs
exact arithmetic throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import sqrt
from typing import Sequence

from . import linalg
from .errors import CapExceededError, PreconditionError
from .groups import FiniteSet, RationalVectorGroup
from .linalg import IntMat, Mat, Vec
from .polytopes import SymmetricPolytope, enumerate_integer_points


@dataclass(frozen=True)
class Lattice:
    """Full-rank rational lattice; columns of `basis` are the basis vectors."""

    dim: int
    basis: Mat

    def __post_init__(self):
        basis = linalg.frac_mat(self.basis)
        object.__setattr__(self, "basis", basis)
        if len(basis) != self.dim or any(len(r) != self.dim for r in basis):
            raise ValueError("basis must be a dim x dim matrix")
        if self.dim and linalg.mat_det(basis) == 0:
            raise ValueError("basis columns must be linearly independent")

    @staticmethod
    def standard(dim: int) -> "Lattice":
        return Lattice(dim, linalg.identity(dim))

    @staticmethod
    def from_columns(cols: Sequence[Sequence]) -> "Lattice":
        dim = len(cols)
        rows = tuple(tuple(Fraction(cols[j][i]) for j in range(dim))
                     for i in range(dim))
        return Lattice(dim, rows)

    def column(self, j: int) -> Vec:
        return tuple(self.basis[i][j] for i in range(self.dim))

    def columns(self) -> tuple[Vec, ...]:
        return tuple(self.column(j) for j in range(self.dim))

    def covolume(self) -> Fraction:
        if self.dim == 0:
            return Fraction(1)
        return abs(linalg.mat_det(self.basis))

    def _inverse(self) -> Mat:
        inv = getattr(self, "_inv_cache", None)
        if inv is None:
            inv = linalg.mat_inv(self.basis) if self.dim else ()
            object.__setattr__(self, "_inv_cache", inv)
        return inv

    def coords_of(self, y: Sequence) -> Vec:
        """Rational coordinates n with basis @ n = y."""
        ys = tuple(Fraction(v) for v in y)
        return linalg.mat_vec(self._inverse(), ys)

    def member(self, y: Sequence) -> bool:
        return linalg.is_integer_vec(self.coords_of(y))

    def from_coords(self, n: Sequence[int]) -> Vec:
        return tuple(sum(self.basis[i][j] * n[j] for j in range(self.dim))
                     for i in range(self.dim))


def hnf(m: Sequence[Sequence[int]],
        allow_rank_deficient: bool = False) -> tuple[IntMat, IntMat]:
    """Column Hermite normal form: returns (H, U) with M @ U = H, U unimodular."""
    rows = tuple(tuple(int(x) for x in r) for r in m)
    return linalg.column_hnf(rows, allow_rank_deficient=allow_rank_deficient)


def primitive_factor(y: Sequence, lat: Lattice) -> tuple[int, Vec]:
    """Factor y = n * y' with y' primitive in the lattice and n >= 1."""
    n = lat.coords_of(y)
    if not linalg.is_integer_vec(n):
        raise PreconditionError("vector is not a lattice member")
    ints = tuple(int(x) for x in n)
    if all(x == 0 for x in ints):
        raise PreconditionError("cannot factor the zero vector")
    g = linalg.gcd_vec(ints)
    reduced = tuple(x // g for x in ints)
    return g, lat.from_coords(reduced)


def is_primitive(y: Sequence, lat: Lattice) -> bool:
    n, _ = primitive_factor(y, lat)
    return n == 1


@dataclass(frozen=True)
class BasisCompletion:
    """A basis of the lattice ending in a prescribed primitive vector.

    `transform` is the rational matrix sending the primitive vector to e_d
    and the complementary sublattice into the span of e_1..e_{d-1}; it maps
    the whole lattice onto Z^d.
    """

    reordered: Lattice
    transform: Mat

    @property
    def complement_columns(self) -> tuple[Vec, ...]:
        return self.reordered.columns()[:-1]


def complete_basis(y_prime: Sequence, lat: Lattice) -> BasisCompletion:
    """Extend a primitive vector to a lattice basis with y' as last vector."""
    n, _ = primitive_factor(y_prime, lat)
    if n != 1:
        raise PreconditionError("vector is not primitive in the lattice")
    coords = tuple(int(x) for x in lat.coords_of(y_prime))
    v = _unimodular_with_last_column(coords)
    new_cols = [lat.from_coords(tuple(v[i][j] for i in range(lat.dim)))
                for j in range(lat.dim)]
    reordered = Lattice.from_columns(new_cols)
    transform = linalg.mat_inv(reordered.basis)
    return BasisCompletion(reordered, transform)


def _unimodular_with_last_column(n: tuple[int, ...]) -> IntMat:
    """Unimodular integer matrix whose last column is the primitive vector n."""
    d = len(n)
    # Row-reduce n to e_1 with tracked operations, then invert and permute.
    v = list(n)
    r = [[1 if i == j else 0 for j in range(d)] for i in range(d)]
    pivot = next(i for i, x in enumerate(v) if x != 0)
    if pivot != 0:
        v[0], v[pivot] = v[pivot], v[0]
        r[0], r[pivot] = r[pivot], r[0]
    for i in range(1, d):
        if v[i] == 0:
            continue
        g, x, y = linalg._xgcd(v[0], v[i])
        a, b = v[0] // g, v[i] // g
        row0 = [x * r0 + y * ri for r0, ri in zip(r[0], r[i])]
        rowi = [-b * r0 + a * ri for r0, ri in zip(r[0], r[i])]
        r[0], r[i] = row0, rowi
        v[0], v[i] = g, 0
    if v[0] == -1:
        r[0] = [-x for x in r[0]]
        v[0] = 1
    # r @ n = e_1, so r^-1 has n as first column; rotate it to the back.
    r_inv = linalg.mat_inv(linalg.frac_mat(r))
    cols = list(range(1, d)) + [0]
    return tuple(tuple(int(r_inv[i][j]) for j in cols) for i in range(d))


@dataclass(frozen=True)
class ReducedBasisReport:
    """LLL-reduced basis with its certified orthogonality defect.

    defect_sq = (prod |v_i|^2) / covolume^2, measured in the supplied
    quadratic form; defect is its float square root and is the run's
    substitute for the worst-case reduction constant.
    """

    lattice: Lattice
    gram: Mat
    vectors: tuple[Vec, ...]
    norms_sq: tuple[Fraction, ...]
    defect_sq: Fraction
    transform: IntMat

    @property
    def defect(self) -> float:
        return sqrt(float(self.defect_sq))

    @property
    def defect_bound_sq(self) -> Fraction:
        d = len(self.vectors)
        return Fraction(2) ** (d * (d - 1) // 2)


def reduced_basis(lat: Lattice, gram: Mat | None = None,
                  delta: Fraction = Fraction(99, 100)) -> ReducedBasisReport:
    """LLL reduction of the lattice basis under a positive-definite form."""
    d = lat.dim
    if gram is None:
        gram = linalg.identity(d)
    else:
        gram = linalg.frac_mat(gram)
    if d and not _is_pd(gram):
        raise PreconditionError("quadratic form is not positive definite")

    def inner(u: Vec, v: Vec) -> Fraction:
        return sum(u[i] * gram[i][j] * v[j] for i in range(d) for j in range(d))

    b = [list(c) for c in lat.columns()]
    u = [[1 if i == j else 0 for j in range(d)] for i in range(d)]

    def gso():
        ortho = []
        mu = [[Fraction(0)] * d for _ in range(d)]
        for i in range(d):
            vec = [Fraction(x) for x in b[i]]
            for j in range(i):
                mu[i][j] = inner(tuple(b[i]), tuple(ortho[j])) / inner(
                    tuple(ortho[j]), tuple(ortho[j]))
                vec = [x - mu[i][j] * o for x, o in zip(vec, ortho[j])]
            ortho.append(vec)
        return ortho, mu

    if d > 0:
        ortho, mu = gso()
        k = 1
        while k < d:
            for j in range(k - 1, -1, -1):
                q = _round_half(mu[k][j])
                if q:
                    b[k] = [x - q * y for x, y in zip(b[k], b[j])]
                    for i in range(d):
                        u[i][k] -= q * u[i][j]
                    ortho, mu = gso()
            lhs = inner(tuple(ortho[k]), tuple(ortho[k]))
            rhs = (delta - mu[k][k - 1] ** 2) * inner(tuple(ortho[k - 1]),
                                                     tuple(ortho[k - 1]))
            if lhs >= rhs:
                k += 1
            else:
                b[k], b[k - 1] = b[k - 1], b[k]
                for i in range(d):
                    u[i][k], u[i][k - 1] = u[i][k - 1], u[i][k]
                ortho, mu = gso()
                k = max(k - 1, 1)

    vectors = tuple(tuple(x for x in col) for col in b)
    norms_sq = tuple(inner(v, v) for v in vectors)
    covol_sq = (linalg.mat_det(lat.basis) ** 2) * (linalg.mat_det(gram)
                                                   if d else Fraction(1))
    prod = Fraction(1)
    for nsq in norms_sq:
        prod *= nsq
    defect_sq = prod / covol_sq if d else Fraction(1)
    u_mat = tuple(tuple(row) for row in u)
    det_u = linalg.mat_det(linalg.frac_mat(u_mat)) if d else Fraction(1)
    if abs(det_u) != 1:
        raise AssertionError("LLL transform lost unimodularity")
    return ReducedBasisReport(lat, gram, vectors, norms_sq, defect_sq, u_mat)


def _round_half(x: Fraction) -> int:
    return int((x + Fraction(1, 2)) // 1)


def _is_pd(gram: Mat) -> bool:
    for k in range(1, len(gram) + 1):
        minor = tuple(tuple(gram[i][j] for j in range(k)) for i in range(k))
        if linalg.mat_det(minor) <= 0:
            return False
    return True


def lattice_rows_for_body(body: SymmetricPolytope, lat: Lattice):
    """Constraint rows over lattice coordinates n with x = basis @ n."""
    rows = []
    for a, b in body.onesided():
        c = tuple(sum(a[i] * lat.basis[i][j] for i in range(lat.dim))
                  for j in range(lat.dim))
        rows.append((c, b))
    return rows


def enumerate_coords(body: SymmetricPolytope, lat: Lattice,
                     cap: int = 10**6) -> list[tuple[int, ...]]:
    """Basis coordinates of every lattice point inside the body."""
    if body.dim != lat.dim:
        raise PreconditionError("body and lattice dimension mismatch")
    rows = lattice_rows_for_body(body, lat)
    return list(enumerate_integer_points(rows, lat.dim, cap=cap))


def enumerate_points(body: SymmetricPolytope, lat: Lattice,
                     cap: int = 10**6) -> FiniteSet:
    """The points of the lattice inside the closed body, as a FiniteSet."""
    pts = [lat.from_coords(n) for n in enumerate_coords(body, lat, cap=cap)]
    return FiniteSet(RationalVectorGroup(lat.dim), pts)


def point_count_bound(body: SymmetricPolytope, lat: Lattice,
                      cap: int = 10**6) -> tuple[int, Fraction, bool]:
    """Packing bound 3^d d! mes(B) / (2^d covol) against the exact count.

    The displayed bound presumes the body is thick enough to contain a
    spanning set of lattice vectors; callers working outside that regime
    should expect `holds` to be False.
    """
    d = lat.dim
    count = len(enumerate_coords(body, lat, cap=cap))
    fact = 1
    for k in range(1, d + 1):
        fact *= k
    bound = Fraction(3**d * fact) * body.volume() / (Fraction(2**d) * lat.covolume())
    return count, bound, Fraction(count) <= bound
