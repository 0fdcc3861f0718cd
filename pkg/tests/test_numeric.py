import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pline.numeric import (
    DimensionError,
    SingularMatrixError,
    best_rational_in_interval,
    det,
    hadamard_solution_bitbound,
    identity,
    mat_vec,
    principal_minor,
    rat_str,
    solve_linear,
    to_rational,
)

small_int = st.integers(-9, 9)


def int_matrix(n):
    return st.lists(st.lists(small_int, min_size=n, max_size=n), min_size=n, max_size=n)


def cofactor_det(m):
    m = [list(r) for r in m]
    if len(m) == 1:
        return F(m[0][0])
    return sum((-1) ** j * m[0][j] * cofactor_det([r[:j] + r[j + 1:] for r in m[1:]]) for j in range(len(m)))


@pytest.mark.parametrize("m,want", [
    ([[5]], 5),
    ([[1, 2], [2, 1]], -3),
    (identity(3), 1),
])
def test_det_examples(m, want):
    assert det(m) == want


def test_det_rejects_non_square():
    with pytest.raises(DimensionError):
        det([[1, 2]])


@given(st.integers(1, 5).flatmap(int_matrix))
def test_det_matches_cofactor_expansion(m):
    assert det(m) == cofactor_det(m)


@given(st.integers(2, 5).flatmap(int_matrix), st.data())
def test_row_swap_flips_sign(m, data):
    i = data.draw(st.integers(0, len(m) - 1))
    j = data.draw(st.integers(0, len(m) - 1).filter(lambda v: v != i))
    swapped = [list(r) for r in m]
    swapped[i], swapped[j] = swapped[j], swapped[i]
    assert det(swapped) == -det(m)


def test_det_of_fraction_matrix():
    assert det([[F(1, 2), F(1, 3)], [F(1, 4), F(1, 5)]]) == F(1, 10) - F(1, 12)


@pytest.mark.parametrize("a,b,want", [
    (identity(2), (3, 4), (3, 4)),
    ([[2, 0], [0, 4]], (1, 1), (F(1, 2), F(1, 4))),
])
def test_solve_examples(a, b, want):
    assert solve_linear(a, b) == tuple(map(F, want))


def test_solve_singular():
    with pytest.raises(SingularMatrixError):
        solve_linear([[1, 1], [1, 1]], (1, 0))


@given(st.integers(1, 5).flatmap(int_matrix), st.data())
def test_solve_reproduces_rhs(m, data):
    b = data.draw(st.lists(small_int, min_size=len(m), max_size=len(m)))
    if det(m) == 0:
        with pytest.raises(SingularMatrixError):
            solve_linear(m, b)
        return
    x = solve_linear(m, b)
    assert mat_vec(tuple(tuple(map(F, r)) for r in m), x) == tuple(map(F, b))


def test_inverse_entries_within_determinant_bound():
    # inverse entries are cofactor/det, so num and den stay below B^d d^(d/2)
    rng = random.Random(7)
    checked = 0
    while checked < 200:
        d = rng.randint(1, 6)
        bits = rng.randint(1, 6)
        B = 2**bits - 1
        m = [[rng.randint(-B, B) for _ in range(d)] for _ in range(d)]
        if det(m) == 0:
            continue
        bound = B**d * d ** (d / 2)
        for j in range(d):
            e = [int(i == j) for i in range(d)]
            for v in solve_linear(m, e):
                assert abs(v.numerator) <= bound and v.denominator <= bound
        checked += 1


@pytest.mark.parametrize("m,idx,want", [
    ([[1, 2], [2, 1]], {0}, 1),
    ([[1, 2], [2, 1]], {0, 1}, -3),
    (identity(4), {1, 3}, 1),
])
def test_principal_minor(m, idx, want):
    assert principal_minor(m, idx) == want


@pytest.mark.parametrize("idx", [set(), {2}])
def test_principal_minor_bad_index(idx):
    with pytest.raises(ValueError):
        principal_minor([[1, 2], [2, 1]], idx)


@pytest.mark.parametrize("bm,bq,n,want", [(2, 2, 1, 8), (1, 0, 2, 8), (0, 0, 1, 0)])
def test_hadamard_bitbound(bm, bq, n, want):
    assert hadamard_solution_bitbound(bm, bq, n) == want


@pytest.mark.parametrize("lo,hi,den,want", [
    (F(2, 5), F(3, 5), 2, F(1, 2)),
    (F(1, 3) - F(1, 100), F(1, 3) + F(1, 100), 3, F(1, 3)),
    (F(1, 10), F(1, 5), 1, None),
])
def test_best_rational_examples(lo, hi, den, want):
    assert best_rational_in_interval(lo, hi, den) == want


def test_best_rational_rejects_empty_interval():
    with pytest.raises(ValueError):
        best_rational_in_interval(F(1, 2), F(1, 2), 10)


@settings(max_examples=300)
@given(st.fractions(min_value=-3, max_value=3, max_denominator=60),
       st.fractions(min_value=F(1, 60), max_value=2, max_denominator=60),
       st.integers(1, 50))
def test_best_rational_matches_enumeration(lo, width, max_den):
    hi = lo + width
    inside = [F(n, q) for q in range(1, max_den + 1)
              for n in range(int(lo * q) - 1, int(hi * q) + 2) if lo < F(n, q) < hi]
    got = best_rational_in_interval(lo, hi, max_den)
    if not inside:
        assert got is None
    else:
        assert got is not None and lo < got < hi
        assert got.denominator == min(v.denominator for v in inside)


def test_rational_serialization():
    assert rat_str(F(-3, 4)) == "-3/4"
    assert rat_str(F(6, 3)) == "2"
    assert to_rational(" 1/3 ") == F(1, 3)
    with pytest.raises(TypeError):
        to_rational(0.5)
    with pytest.raises(ValueError):
        to_rational("x")


@given(st.fractions(max_denominator=10**6))
def test_rat_str_round_trip(r):
    assert to_rational(rat_str(r)) == r


def test_canonical_storage():
    for n, d in itertools.product(range(-6, 7), range(1, 7)):
        r = F(n, d)
        assert r.denominator > 0
        assert F(r.numerator, r.denominator) == r
