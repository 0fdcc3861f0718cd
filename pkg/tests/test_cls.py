import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pline.cls import (
    CloInstance,
    ClsSolution,
    ContractError,
    InvariantBreach,
    MetametricWitness,
    MmcmInstance,
    NormConst,
    axiom_violated,
    check_metametric,
    clo_to_mmcm,
    gcm_to_clo,
    pullback_clo_solution,
    pullback_gcm_solution,
    verify_clo,
    verify_gcm,
    verify_mmcm,
)
from pline.linfixp import INF, AffineMap, lp_norm


def l1(x, y):
    return sum(abs(a - b) for a, b in zip(x, y))


def grid_points(d, k):
    return [tuple(F(v, k) for v in idx) for idx in itertools.product(range(k + 1), repeat=d)]


def random_clo(rng, d, lam=F(1, 4), r=2, eps=F(1, 8)):
    f = AffineMap([[F(rng.randint(-4, 4), 8 * d) for _ in range(d)] for _ in range(d)],
                  [F(rng.randint(0, 8), 8) for _ in range(d)])
    w = [F(rng.randint(-4, 4), 4) for _ in range(d)]

    def p(x):
        return abs(sum(a * b for a, b in zip(w, x)) - F(1, 2))

    return CloInstance(d, f, p, eps, lam, r)


def test_norm_const():
    c = NormConst.of(F(3, 2), 2)
    assert c.kpow == F(9, 4) and c.exact() == F(3, 2)
    t = NormConst.two_power_times(1, 2)
    assert t.kpow == 2 and t.exact() is None
    assert NormConst.two_power_times(F(1, 2), INF).exact() == 1
    assert NormConst.two_power_times(F(1, 2), 1).exact() == F(1, 2)
    # sqrt(2) * ||(1, 0)|| is about 1.414
    assert t.scalar_exceeds(F(3, 2), (1, 0)) and not t.scalar_exceeds(F(7, 5), (1, 0))
    with pytest.raises(ValueError):
        NormConst.of(-1, 2)


def gcm_example(c=F(1, 2), eps=F(1, 4), lam=1, delta=F(1, 2)):
    f = AffineMap([[F(1, 2), 0], [0, F(1, 2)]], [F(1, 4), F(1, 4)])
    return MmcmInstance(2, f, l1, 1, eps, c, delta, lam)


def test_gcm_to_clo_constants():
    img = gcm_to_clo(gcm_example())
    assert img.lam.exact() == 1
    assert img.eps == F(1, 8)
    x = (F(0), F(1))
    assert img.p(x) == l1(img.f(x), x)


def test_gcm_pullback_cases():
    src = gcm_example()
    img = gcm_to_clo(src)
    near = ClsSolution("C1", [(F(1, 2), F(1, 2))])
    assert verify_clo(img, near)
    assert pullback_gcm_solution(src, near).kind == "M1"
    # a C1 point far from the fixpoint exposes the expansion of f
    expand = MmcmInstance(1, lambda x: (min(F(1), 2 * x[0]),), l1, 1, F(1, 100), F(1, 2), 4, 4)
    img = gcm_to_clo(expand)
    far = ClsSolution("C1", [(F(1, 8),)])
    assert verify_clo(img, far)
    out = pullback_gcm_solution(expand, far)
    assert out.kind == "M2a" and verify_gcm(expand, out)
    with pytest.raises(ContractError):
        pullback_gcm_solution(src, ClsSolution("C2a", [(0, 0), (0, 0)]))


def test_gcm_c2a_maps_to_m2c():
    # lambda small enough that f breaks it
    f = AffineMap([[F(1, 2)]], [0])
    src = MmcmInstance(1, f, l1, 1, F(1, 4), F(1, 2), F(1, 8), F(1, 4))
    img = gcm_to_clo(src)
    pair = ClsSolution("C2a", [(F(0),), (F(1),)])
    assert verify_clo(img, pair)
    out = pullback_gcm_solution(src, pair)
    assert out.kind == "M2c" and out.points == pair.points


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 2), st.integers(0, 10**6), st.sampled_from([1, 2, INF]))
def test_gcm_round_trip_on_samples(d, seed, r):
    rng = random.Random(seed)
    f = AffineMap([[F(rng.randint(-8, 8), 8) for _ in range(d)] for _ in range(d)],
                  [F(rng.randint(0, 8), 8) for _ in range(d)])
    src = MmcmInstance(d, f, lambda x, y: lp_norm([a - b for a, b in zip(x, y)], 1), r,
                       F(1, 16), F(1, 2), F(1, 4), F(1, 2))
    img = gcm_to_clo(src)
    pts = grid_points(d, 4)
    cands = [ClsSolution("C1", [x]) for x in pts]
    cands += [ClsSolution(k, [x, y]) for x in pts for y in pts for k in ("C2a", "C2b")]
    for s in cands:
        if verify_clo(img, s):
            assert verify_gcm(src, pullback_gcm_solution(src, s))


def test_clo_to_mmcm_examples():
    zero = CloInstance(1, lambda x: x, lambda x: F(0), F(1, 2), 1)
    img = clo_to_mmcm(zero)
    assert img.c == F(7, 8)
    assert all(img.d_metric((a,), (b,)) == 1 for a in (0, F(1, 2)) for b in (0, 1))
    assert img.lam == zero.lam
    assert img.delta == NormConst.two_power_times(1, 2)


def test_clo_pullback_special_cases():
    src = random_clo(random.Random(1), 2)
    with pytest.raises(InvariantBreach):
        pullback_clo_solution(src, ClsSolution("M1", [(0, 0)]))
    with pytest.raises(ContractError):
        pullback_clo_solution(src, ClsSolution("M2c", [(0, 0), (0, 0)]))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10**6), st.sampled_from([1, 2, 3, INF]))
def test_clo_round_trip_on_samples(d, seed, r):
    rng = random.Random(seed)
    src = random_clo(rng, d, r=r)
    img = clo_to_mmcm(src)
    pts = grid_points(d, 2)
    sample = rng.sample(pts, min(len(pts), 8))
    cands = [ClsSolution(k, [x, y]) for x in sample for y in sample for k in ("M2a", "M2c")]
    for _ in range(60):
        cands.append(ClsSolution("M2b", [rng.choice(sample) for _ in range(4)]))
    for s in cands:
        if verify_mmcm(img, s):
            assert verify_clo(src, pullback_clo_solution(src, s))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10**6), st.sampled_from([1, 2, 3, INF]))
def test_constructed_distance_is_a_metametric(d, seed, r):
    rng = random.Random(seed)
    src = random_clo(rng, d, r=r)
    img = clo_to_mmcm(src)
    pts = rng.sample(grid_points(d, 2), min(3**d, 10))
    assert check_metametric(img.d_metric, pts) is None
    assert all(img.d_metric(x, y) >= 1 for x in pts for y in pts)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 2), st.integers(0, 10**6), st.sampled_from([1, 2, 3, INF]))
def test_distance_continuity_bound(d, seed, r):
    # a lambda-continuous p makes d continuous with constant 2^(1-1/r) lambda
    rng = random.Random(seed)
    w = [F(rng.randint(-4, 4), 4) for _ in range(d)]

    def p(x):
        return abs(sum(a * b for a, b in zip(w, x)))

    # |w.x - w.y| <= ||w||_1 ||x - y||_inf <= ||w||_1 ||x - y||_r
    lam = sum(abs(a) for a in w) or F(1, 4)
    src = CloInstance(d, lambda x: x, p, F(1, 8), lam, r)
    img = clo_to_mmcm(src)
    pts = grid_points(d, 3)
    for _ in range(50):
        x, y, x2, y2 = (rng.choice(pts) for _ in range(4))
        step = [s - t for s, t in zip(x + y, x2 + y2)]
        assert not img.delta.scalar_exceeds(img.d_metric(x, y) - img.d_metric(x2, y2), step)


def test_smaller_continuity_constant_is_too_tight():
    # p(x) = x moving both arguments by 1 changes d by 2 = 2^(1-1/2) * ||(1, 1)||_2;
    # the constant 2^(1/2-1) would only allow 1
    src = CloInstance(1, lambda x: x, lambda x: x[0], F(1, 8), 1, 2)
    img = clo_to_mmcm(src)
    x, y, x2, y2 = (F(0),), (F(0),), (F(1),), (F(1),)
    gap = img.d_metric(x2, y2) - img.d_metric(x, y)
    assert gap == 2
    assert not img.delta.scalar_exceeds(gap, (1, 1))
    assert NormConst(2, F(1, 2)).scalar_exceeds(gap, (1, 1))


def test_check_metametric_examples():
    pts = grid_points(2, 2)
    assert check_metametric(l1, pts) is None
    neg = check_metametric(lambda x, y: F(-1), pts)
    assert neg.kind == "negativity" and axiom_violated(lambda x, y: F(-1), neg)
    zero = check_metametric(lambda x, y: F(0), pts)
    assert zero.kind == "zero-distinct"
    skew = check_metametric(lambda x, y: l1(x, y) + (x[0] > y[0]), pts)
    assert skew.kind == "asymmetry"
    sq = check_metametric(lambda x, y: l1(x, y) ** 2, pts)
    assert sq.kind == "triangle" and axiom_violated(lambda x, y: l1(x, y) ** 2, sq)


def test_m3_only_for_mmcm():
    src = MmcmInstance(1, lambda x: x, lambda x, y: F(0), 1, F(1, 4), F(1, 2), 1, 1)
    w = MetametricWitness("zero-distinct", ((F(0),), (F(1),)))
    sol = ClsSolution("M3", (), w)
    assert verify_mmcm(src, sol) and not verify_gcm(src, sol)


def test_instance_validation():
    with pytest.raises(ValueError):
        MmcmInstance(1, lambda x: x, l1, 1, F(1, 4), 1, 1, 1)
    with pytest.raises(ValueError):
        CloInstance(1, lambda x: x, lambda x: 0, 0, 1)
