"""Exact rational scalars, vectors and matrices.

Scalars are :class:`fractions.Fraction`, which already keeps a canonical
reduced form with a positive denominator.  Matrices are tuples of row tuples.
Determinants and solves run fraction-free on integers after clearing
denominators row by row.
"""

from __future__ import annotations

from fractions import Fraction
from math import floor, lcm
from typing import Iterable, Optional, Sequence

Rational = Fraction
Vector = tuple[Fraction, ...]
Matrix = tuple[tuple[Fraction, ...], ...]


class DimensionError(ValueError):
    pass


class SingularMatrixError(ArithmeticError):
    pass


def to_rational(x) -> Fraction:
    """Coerce ints, Fractions and "p/q" / decimal strings; floats are refused."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a rational")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {x!r}") from exc
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def rat_str(r: Fraction) -> str:
    r = to_rational(r)
    if r.denominator == 1:
        return str(r.numerator)
    return f"{r.numerator}/{r.denominator}"


def vector(xs: Iterable) -> Vector:
    return tuple(to_rational(x) for x in xs)


def matrix(rows: Iterable[Iterable]) -> Matrix:
    m = tuple(vector(r) for r in rows)
    if m and any(len(r) != len(m[0]) for r in m):
        raise DimensionError("ragged matrix")
    return m


def identity(n: int) -> Matrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def shape(m: Matrix) -> tuple[int, int]:
    return len(m), (len(m[0]) if m else 0)


def mat_vec(m: Matrix, v: Sequence[Fraction]) -> Vector:
    return tuple(sum((a * b for a, b in zip(row, v)), Fraction(0)) for row in m)


def bit_length(r: Fraction) -> int:
    r = to_rational(r)
    return max(abs(r.numerator).bit_length(), r.denominator.bit_length())


def _integer_rows(m: Sequence[Sequence[Fraction]]) -> tuple[list[list[int]], Fraction]:
    # scale each row to integers; returns rows and the product of scale factors
    rows = []
    scale = Fraction(1)
    for row in m:
        k = lcm(*(x.denominator for x in row)) if row else 1
        rows.append([int(x * k) for x in row])
        scale *= k
    return rows, scale


def _bareiss_det(a: list[list[int]]) -> int:
    n = len(a)
    a = [r[:] for r in a]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i, row_k = a[i], a[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * a[n - 1][n - 1] if n else 1


def det(m: Matrix) -> Fraction:
    rows, cols = shape(m)
    if rows != cols:
        raise DimensionError(f"determinant of a {rows}x{cols} matrix")
    if rows == 0:
        return Fraction(1)
    ints, scale = _integer_rows(matrix(m))
    return Fraction(_bareiss_det(ints)) / scale


def principal_minor(m: Matrix, index_set: Iterable[int]) -> Fraction:
    """Determinant of the principal submatrix on ``index_set`` (0-based)."""
    idx = sorted(set(index_set))
    n, c = shape(m)
    if n != c:
        raise DimensionError("principal minor of a non-square matrix")
    if not idx:
        raise ValueError("empty index set")
    if idx[0] < 0 or idx[-1] >= n:
        raise ValueError(f"index out of range for a {n}x{n} matrix")
    return det(tuple(tuple(m[i][j] for j in idx) for i in idx))


def solve_linear(a: Matrix, b: Sequence) -> Vector:
    n, c = shape(a)
    if n != c or len(b) != n:
        raise DimensionError("solve_linear needs a square system")
    if n == 0:
        return ()
    bb = vector(b)
    aug = [list(row) + [rhs] for row, rhs in zip(matrix(a), bb)]
    rows, _ = _integer_rows(aug)
    # fraction-free forward elimination with row pivoting
    prev = 1
    for k in range(n):
        piv = next((r for r in range(k, n) if rows[r][k] != 0), None)
        if piv is None:
            raise SingularMatrixError("singular matrix")
        rows[k], rows[piv] = rows[piv], rows[k]
        akk = rows[k][k]
        for i in range(k + 1, n):
            aik = rows[i][k]
            ri, rk = rows[i], rows[k]
            for j in range(k + 1, n + 1):
                ri[j] = (ri[j] * akk - aik * rk[j]) // prev
            ri[k] = 0
        prev = akk
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        s = Fraction(rows[i][n])
        for j in range(i + 1, n):
            s -= rows[i][j] * x[j]
        x[i] = s / rows[i][i]
    return tuple(x)


def hadamard_solution_bitbound(b_m: int, b_q: int, n: int) -> int:
    """Bit bound ceil(n log2 n) + 3 n b_m + b_q for solutions of n-dim systems."""
    if n < 1:
        raise ValueError("n must be at least 1")
    # ceil(n log2 n) is the least k with 2**k >= n**n
    nlogn = (n**n - 1).bit_length()
    return nlogn + 3 * n * b_m + b_q


def _simplest_between(lo: Fraction, hi: Optional[Fraction]) -> Fraction:
    # simplest rational in the open interval (lo, hi); hi None means +infinity
    n = floor(lo)
    if hi is None or n + 1 < hi:
        return Fraction(n + 1)
    y_lo = 1 / (hi - n)
    y_hi = None if lo == n else 1 / (lo - n)
    return n + 1 / _simplest_between(y_lo, y_hi)


def best_rational_in_interval(lo, hi, max_denominator: int) -> Optional[Fraction]:
    """Rational of least denominator strictly inside (lo, hi), if that denominator fits.

    Stern-Brocot descent: the simplest rational of an interval has the least
    denominator of all rationals inside it, so if it does not fit, nothing does.
    """
    lo, hi = to_rational(lo), to_rational(hi)
    if lo >= hi:
        raise ValueError("empty interval")
    if max_denominator < 1:
        return None
    if lo < 0 < hi:
        return Fraction(0)
    if hi <= 0:
        r = -_simplest_between(-hi, -lo)
    else:
        r = _simplest_between(lo, hi)
    return r if r.denominator <= max_denominator else None
