import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pline.linfixp import (
    INF,
    AffineMap,
    CircuitParseError,
    CircuitValidationError,
    CountingMap,
    affine_circuit,
    circuit_size,
    count_maxmin,
    evaluate,
    lp_norm,
    norm_below,
    norm_ratio_exceeds,
    parse_circuit,
    unparse,
)

HALF = "d 1\nc 1/2\np 2\ng1 = in 1\ng2 = mulc 1/2 g1\nout g2"
CLAMPED = """d 1
c 1/2
p 2
g1 = in 1
g2 = mulc 1/2 g1
g3 = const 1/4
g4 = add g2 g3
g5 = const 1
g6 = min g5 g4
g7 = const 0
g8 = max g7 g6
out g8
"""
TWO_D = """d 2
c 1/2
p 1   # comment
g1 = in 1
g2 = in 2
g3 = add g1 g2
g4 = mulc 1/4 g3
g5 = const 1/2
g6 = max g4 g5
g7 = min g6 g4
out g7 g5
"""

frac01 = st.fractions(min_value=0, max_value=1, max_denominator=64)


def test_parse_half():
    c = parse_circuit(HALF)
    assert c.d == 1 and c.c == F(1, 2) and c.p == 2
    assert evaluate(c, [F(1, 3)]) == (F(1, 6),)


def test_undefined_output_is_parse_error():
    with pytest.raises(CircuitParseError) as e:
        parse_circuit(HALF.replace("out g2", "out g3"))
    assert e.value.line == 6


@pytest.mark.parametrize("text,exc", [
    (HALF.replace("c 1/2", "c 3/2"), CircuitValidationError),
    (HALF.replace("mulc 1/2 g1", "mulc 1/2"), CircuitParseError),
    (HALF.replace("g2 = mulc 1/2 g1", "g2 = mulc 1/2 g5"), CircuitParseError),
    (HALF.replace("in 1", "in 2"), CircuitValidationError),
    (HALF.replace("p 2", "p 0"), CircuitParseError),
    (HALF.replace("d 1\n", ""), CircuitParseError),
    (HALF + "\nout g1", CircuitParseError),
    (HALF.replace("mulc", "mul"), CircuitParseError),
])
def test_malformed_circuits(text, exc):
    with pytest.raises(exc):
        parse_circuit(text)


def test_clamped_fixpoint():
    c = parse_circuit(CLAMPED)
    assert evaluate(c, [F(1, 2)]) == (F(1, 2),)
    assert count_maxmin(c) == 2


def test_two_d_evaluation_and_round_trip():
    c = parse_circuit(TWO_D)
    assert evaluate(c, [1, 1]) == (F(1, 2), F(1, 2))
    again = parse_circuit(unparse(c))
    assert again == c


def test_evaluate_dimension_mismatch():
    with pytest.raises(ValueError):
        evaluate(parse_circuit(HALF), [0, 0])


def test_outputs_are_clamped():
    c = parse_circuit("d 1\nc 1/2\np 1\ng1 = in 1\ng2 = const 3\ng3 = add g1 g2\nout g3")
    assert evaluate(c, [0]) == (F(1),)


@pytest.mark.parametrize("v,p,want", [
    ((F(3, 4), F(-1, 4)), 1, 1),
    ((3, 4), 2, 25),
    ((0, 0, 0), 3, 0),
    ((0, 0), INF, 0),
    ((F(-2), F(1)), INF, 2),
])
def test_lp_norm(v, p, want):
    assert lp_norm(v, p) == want


def test_norm_comparisons():
    assert norm_below((3, 4), 2, F(501, 100))
    assert not norm_below((3, 4), 2, 5)
    assert norm_ratio_exceeds((3, 4), (1, 0), 2, F(49, 10))
    assert not norm_ratio_exceeds((3, 4), (1, 0), 2, 5)


def test_circuit_size():
    s = circuit_size(parse_circuit(HALF))
    assert (s.num_inputs, s.num_gates, s.constant_bits) == (1, 2, 2)
    no_const = parse_circuit("d 1\nc 1/2\np 1\ng1 = in 1\ng2 = max g1 g1\nout g2")
    assert circuit_size(no_const).constant_bits == 0
    bigger = parse_circuit(HALF.replace("out g2", "g3 = add g2 g2\nout g3"))
    assert circuit_size(bigger).num_gates == s.num_gates + 1


@settings(max_examples=30)
@given(st.integers(1, 3), st.integers(0, 2**32), st.sampled_from([1, 2, 3, INF]))
def test_affine_contraction_inequality(d, seed, p):
    rng = random.Random(seed)
    A = [[F(rng.randint(-4, 4), 8 * d) for _ in range(d)] for _ in range(d)]
    b = [F(rng.randint(0, 8), 8) for _ in range(d)]
    circ = affine_circuit(A, b, F(1, 2), p)
    f = AffineMap(A, b)
    for _ in range(100):
        x = [F(rng.randint(0, 64), 64) for _ in range(d)]
        y = [F(rng.randint(0, 64), 64) for _ in range(d)]
        fx, fy = evaluate(circ, x), evaluate(circ, y)
        assert fx == f(x)
        diff = [a - c for a, c in zip(fx, fy)]
        assert not norm_ratio_exceeds(diff, [a - c for a, c in zip(x, y)], p, F(1, 2))


@settings(max_examples=50)
@given(frac01, frac01, frac01, frac01)
def test_piecewise_linear_on_segments(x0, y0, x1, y1):
    c = parse_circuit(TWO_D)
    # breakpoints of TWO_D sit where (x+y)/4 = 1/2, i.e. only at x=y=1
    pts = [(x0 + t * (x1 - x0), y0 + t * (y1 - y0)) for t in (F(1, 5), F(1, 2), F(4, 5))]
    if any(a + b >= 2 for a, b in pts):
        return
    vals = [evaluate(c, p)[0] for p in pts]
    # collinear in t: equal slopes between consecutive samples
    assert (vals[1] - vals[0]) / F(3, 10) == (vals[2] - vals[1]) / F(3, 10)


def test_evaluation_is_deterministic():
    c = parse_circuit(TWO_D)
    x = [F(1, 3), F(2, 7)]
    assert len({evaluate(c, x) for _ in range(20)}) == 1


def test_affine_map_fixpoint_and_counting():
    f = AffineMap([[F(1, 2), 0], [0, F(1, 2)]], [F(1, 4), F(1, 8)])
    assert f.fixpoint() == (F(1, 2), F(1, 4))
    g = CountingMap(f, 2)
    g((0, 0))
    g((1, 1))
    assert g.calls == 2
