"""Exact linear algebra on small dense matrices.

Rational matrices are tuples of row tuples of Fractions; integer matrices
are tuples of row tuples of ints.  Dimensions stay tiny (<= ~8) throughout
the package, so straightforward Gauss elimination and gcd column reduction
are the right tools.  Nothing here ever touches floating point.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Sequence

Vec = tuple[Fraction, ...]
Mat = tuple[Vec, ...]
IntVec = tuple[int, ...]
IntMat = tuple[IntVec, ...]


def frac_vec(v: Sequence) -> Vec:
    return tuple(Fraction(x) for x in v)


def frac_mat(rows: Sequence[Sequence]) -> Mat:
    return tuple(frac_vec(r) for r in rows)


def identity(n: int) -> Mat:
    return tuple(
        tuple(Fraction(1 if i == j else 0) for j in range(n)) for i in range(n)
    )


def int_identity(n: int) -> IntMat:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def transpose(m: Mat) -> Mat:
    if not m:
        return ()
    return tuple(zip(*m))


def mat_vec(m: Mat, v: Sequence) -> Vec:
    return tuple(sum(row[j] * v[j] for j in range(len(v))) for row in m)


def mat_mul(a: Mat, b: Mat) -> Mat:
    if not a or not b:
        return ()
    bt = tuple(zip(*b))
    return tuple(
        tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a
    )


def mat_det(m: Mat) -> Fraction:
    """Determinant by fraction-free-ish Gauss elimination with pivoting."""
    n = len(m)
    if n == 0:
        return Fraction(1)
    rows = [list(r) for r in m]
    det = Fraction(1)
    for col in range(n):
        pivot = None
        for r in range(col, n):
            if rows[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            rows[col], rows[pivot] = rows[pivot], rows[col]
            det = -det
        det *= rows[col][col]
        inv = Fraction(1) / rows[col][col]
        for r in range(col + 1, n):
            if rows[r][col] != 0:
                factor = rows[r][col] * inv
                for c in range(col, n):
                    rows[r][c] -= factor * rows[col][c]
    return det


def mat_inv(m: Mat) -> Mat:
    """Exact inverse via Gauss-Jordan; raises ValueError on singular input."""
    n = len(m)
    if n == 0:
        return ()
    aug = [list(r) + [Fraction(1 if i == j else 0) for j in range(n)]
           for i, r in enumerate(m)]
    for col in range(n):
        pivot = None
        for r in range(col, n):
            if aug[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            raise ValueError("matrix is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = Fraction(1) / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [x - factor * y for x, y in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


def solve(m: Mat, b: Sequence) -> Vec:
    return mat_vec(mat_inv(m), b)


def is_integer_vec(v: Sequence[Fraction]) -> bool:
    return all(Fraction(x).denominator == 1 for x in v)


def column_hnf(m: IntMat, allow_rank_deficient: bool = False) -> tuple[IntMat, IntMat]:
    """Column Hermite normal form.

    Returns (H, U) with M @ U = H, U unimodular.  H is lower triangular in
    the sense that the pivot (first nonzero entry) of each nonzero column
    sits strictly below the pivot of the previous column, pivots are
    positive, and entries left of a pivot in its row are reduced into
    [0, pivot).  Zero columns, if any, are moved to the right.
    """
    if not m:
        return (), ()
    nrows = len(m)
    ncols = len(m[0])
    cols = [[m[i][j] for i in range(nrows)] for j in range(ncols)]
    ucols = [[1 if i == j else 0 for i in range(ncols)] for j in range(ncols)]

    def combine(j, k, a, b, c, d):
        # (col_j, col_k) <- (a*col_j + b*col_k, c*col_j + d*col_k)
        for vec in (cols, ucols):
            vj, vk = vec[j], vec[k]
            for i in range(len(vj)):
                vj[i], vk[i] = a * vj[i] + b * vk[i], c * vj[i] + d * vk[i]

    pivot_col = 0
    for row in range(nrows):
        if pivot_col >= ncols:
            break
        # Clear row to the right of pivot_col using gcd column ops.
        for j in range(pivot_col + 1, ncols):
            if cols[j][row] == 0:
                continue
            a, b = cols[pivot_col][row], cols[j][row]
            g, x, y = _xgcd(a, b)
            combine(pivot_col, j, x, y, -(b // g), a // g)
        if cols[pivot_col][row] == 0:
            continue
        if cols[pivot_col][row] < 0:
            for i in range(nrows):
                cols[pivot_col][i] = -cols[pivot_col][i]
            for i in range(ncols):
                ucols[pivot_col][i] = -ucols[pivot_col][i]
        piv = cols[pivot_col][row]
        for j in range(pivot_col):
            q = cols[j][row] // piv
            if q:
                for i in range(nrows):
                    cols[j][i] -= q * cols[pivot_col][i]
                for i in range(ncols):
                    ucols[j][i] -= q * ucols[pivot_col][i]
        pivot_col += 1

    if not allow_rank_deficient and pivot_col < ncols:
        raise ValueError("matrix does not have full column rank")
    h = tuple(tuple(cols[j][i] for j in range(ncols)) for i in range(nrows))
    u = tuple(tuple(ucols[j][i] for j in range(ncols)) for i in range(ncols))
    return h, u


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Returns (g, x, y) with a*x + b*y = g = gcd(a, b) > 0 (for a, b not both 0)."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def int_kernel_basis(m: IntMat) -> tuple[IntVec, ...]:
    """Basis of the integer kernel {x : M x = 0}, as a tuple of vectors."""
    if not m or not m[0]:
        ncols = len(m[0]) if m else 0
        return tuple(tuple(1 if i == j else 0 for i in range(ncols))
                     for j in range(ncols))
    h, u = column_hnf(m, allow_rank_deficient=True)
    ncols = len(m[0])
    kernel = []
    for j in range(ncols):
        if all(h[i][j] == 0 for i in range(len(h))):
            kernel.append(tuple(u[i][j] for i in range(ncols)))
    return tuple(kernel)


def solve_int(m: IntMat, b: IntVec) -> IntVec | None:
    """One integer solution of M x = b, or None when none exists."""
    if not m:
        return ()
    return IntSolver(m).solve(b)


class IntSolver:
    """Reusable solver for M x = b over the integers (HNF computed once)."""

    def __init__(self, m: IntMat):
        self.m = m
        self.nrows = len(m)
        self.ncols = len(m[0]) if m else 0
        if self.ncols:
            self.h, self.u = column_hnf(m, allow_rank_deficient=True)
        else:
            self.h, self.u = (), ()
        self.kernel = int_kernel_basis(m) if self.ncols else ()

    def solve(self, b: IntVec) -> IntVec | None:
        if not self.ncols:
            return () if all(x == 0 for x in b) else None
        y = [0] * self.ncols
        resid = list(b)
        col = 0
        for row in range(self.nrows):
            if col < self.ncols and self.h[row][col] != 0:
                if resid[row] % self.h[row][col] != 0:
                    return None
                q = resid[row] // self.h[row][col]
                y[col] = q
                for i in range(row, self.nrows):
                    resid[i] -= q * self.h[i][col]
                col += 1
            elif resid[row] != 0:
                return None
        return tuple(sum(self.u[i][j] * y[j] for j in range(self.ncols))
                     for i in range(self.ncols))


def gcd_vec(v: Sequence[int]) -> int:
    g = 0
    for x in v:
        g = gcd(g, abs(x))
    return g


def rational_sqrt_ceil(x: Fraction, precision: int = 10**6) -> Fraction:
    """Smallest convenient rational r with r >= sqrt(x) (x >= 0).

    Uses integer square roots of scaled numerator/denominator, so the
    answer is exact up to 1/precision relative slack and always an upper
    bound.
    """
    if x < 0:
        raise ValueError("negative argument")
    if x == 0:
        return Fraction(0)
    # sqrt(p/q) = sqrt(p*q)/q, so ceil-rounding the integer root of
    # p*q*precision^2 gives an upper bound with ~1/precision relative slack.
    scaled = x.numerator * x.denominator * precision * precision
    return Fraction(_isqrt_ceil(scaled), precision * x.denominator)


def _isqrt_ceil(n: int) -> int:
    import math
    r = math.isqrt(n)
    return r if r * r == n else r + 1
