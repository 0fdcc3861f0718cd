"""Reductions among local-optimum search (CLO), contraction under a
meta-metric (MMCM) and its axiom-respecting variant (GCM).

Norms are p-norms with integer index r (or INF).  Continuity constants are
stored as their r-th powers so that constants like 2^(1-1/r) stay exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .linfixp import INF, lp_norm
from .numeric import Vector, to_rational, vector

PointMap = Callable[[Vector], Vector]
ScalarMap = Callable[[Vector], Fraction]
PairMap = Callable[[Vector, Vector], Fraction]


class ContractError(ValueError):
    """A solution handed to a pullback does not verify."""


class InvariantBreach(AssertionError):
    pass


@dataclass(frozen=True)
class NormConst:
    """A nonnegative constant K held as K^r (or K itself for r = 1 and INF)."""

    r: object
    kpow: Fraction

    @staticmethod
    def of(value, r) -> "NormConst":
        value = to_rational(value)
        if value < 0:
            raise ValueError("continuity constants are nonnegative")
        return NormConst(r, value if r in (1, INF) else value**r)

    @staticmethod
    def two_power_times(value, r) -> "NormConst":
        """2^(1-1/r) * value, exactly."""
        value = to_rational(value)
        if r == INF:
            return NormConst(r, 2 * value)
        if r == 1:
            return NormConst(r, value)
        return NormConst(r, 2 ** (r - 1) * value**r)

    def exact(self) -> Optional[Fraction]:
        if self.r in (1, INF):
            return self.kpow
        root = _rational_root(self.kpow, self.r)
        return root

    def scalar_exceeds(self, a: Fraction, v: Sequence) -> bool:
        """|a| > K * ||v||_r."""
        a = abs(to_rational(a))
        if self.r in (1, INF):
            return a > self.kpow * lp_norm(v, self.r)
        return a**self.r > self.kpow * lp_norm(v, self.r)

    def vector_exceeds(self, u: Sequence, v: Sequence) -> bool:
        """||u||_r > K * ||v||_r."""
        return lp_norm(u, self.r) > self.kpow * lp_norm(v, self.r)


def _int_root(n: int, r: int) -> Optional[int]:
    if n < 0:
        return None
    lo, hi = 0, 1
    while hi**r <= n:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if mid**r < n:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo**r == n else None


def _rational_root(x: Fraction, r: int) -> Optional[Fraction]:
    a, b = _int_root(x.numerator, r), _int_root(x.denominator, r)
    return None if a is None or b is None else Fraction(a, b)


def _sub(x: Sequence, y: Sequence) -> Vector:
    return tuple(a - b for a, b in zip(x, y))


def _in_cube(x: Sequence, d: int) -> bool:
    return len(x) == d and all(0 <= v <= 1 for v in x)


# --- instances ------------------------------------------------------------------


@dataclass
class CloInstance:
    d: int
    f: PointMap
    p: ScalarMap
    eps: Fraction
    lam: NormConst
    r: object = 2

    def __post_init__(self):
        self.eps = to_rational(self.eps)
        if not isinstance(self.lam, NormConst):
            self.lam = NormConst.of(self.lam, self.r)
        if self.eps <= 0 or self.lam.kpow <= 0:
            raise ValueError("eps and lambda must be positive")


@dataclass
class MmcmInstance:
    d: int
    f: PointMap
    d_metric: PairMap
    r: object
    eps: Fraction
    c: Fraction
    delta: NormConst  # threshold in the metric-continuity clause
    lam: NormConst  # continuity of f
    gamma: Optional[NormConst] = None  # promised continuity of d_metric

    def __post_init__(self):
        self.eps, self.c = to_rational(self.eps), to_rational(self.c)
        if not isinstance(self.delta, NormConst):
            self.delta = NormConst.of(self.delta, self.r)
        if not isinstance(self.lam, NormConst):
            self.lam = NormConst.of(self.lam, self.r)
        if not 0 < self.c < 1:
            raise ValueError("c must lie in (0, 1)")
        if self.eps <= 0 or self.delta.kpow <= 0 or self.lam.kpow <= 0:
            raise ValueError("parameters must be positive")


@dataclass(frozen=True)
class MetametricWitness:
    kind: str  # negativity, zero-distinct, asymmetry or triangle
    points: tuple


@dataclass(frozen=True)
class ClsSolution:
    kind: str  # C1, C2a, C2b / M1, M2a, M2b, M2c, M3
    points: tuple
    witness: Optional[MetametricWitness] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(vector(x) for x in self.points))


# --- verifiers ------------------------------------------------------------------


def verify_clo(inst: CloInstance, sol: ClsSolution) -> bool:
    pts = sol.points
    if not all(_in_cube(x, inst.d) for x in pts):
        return False
    if sol.kind == "C1" and len(pts) == 1:
        x = pts[0]
        return inst.p(inst.f(x)) > inst.p(x) - inst.eps
    if sol.kind in ("C2a", "C2b") and len(pts) == 2:
        x, y = pts
        if x == y:
            return False
        if sol.kind == "C2a":
            return inst.lam.vector_exceeds(_sub(inst.f(x), inst.f(y)), _sub(x, y))
        return inst.lam.scalar_exceeds(inst.p(x) - inst.p(y), _sub(x, y))
    return False


def axiom_violated(d_metric: PairMap, w: MetametricWitness) -> bool:
    pts = w.points
    if w.kind == "negativity" and len(pts) == 2:
        return d_metric(*pts) < 0
    if w.kind == "zero-distinct" and len(pts) == 2:
        return pts[0] != pts[1] and d_metric(*pts) == 0
    if w.kind == "asymmetry" and len(pts) == 2:
        return d_metric(pts[0], pts[1]) != d_metric(pts[1], pts[0])
    if w.kind == "triangle" and len(pts) == 3:
        x, y, z = pts
        return d_metric(x, z) > d_metric(x, y) + d_metric(y, z)
    return False


def verify_mmcm(inst: MmcmInstance, sol: ClsSolution, allow_axiom: bool = True) -> bool:
    """allow_axiom=False gives the GCM verifier."""
    dm, f = inst.d_metric, inst.f
    if sol.kind == "M3":
        return allow_axiom and sol.witness is not None and all(
            _in_cube(x, inst.d) for x in sol.witness.points) and axiom_violated(dm, sol.witness)
    pts = sol.points
    if not all(_in_cube(x, inst.d) for x in pts):
        return False
    if sol.kind == "M1" and len(pts) == 1:
        x = pts[0]
        return dm(f(x), x) <= inst.eps
    if sol.kind == "M2a" and len(pts) == 2:
        x, y = pts
        den = dm(x, y)
        return den > 0 and dm(f(x), f(y)) > inst.c * den
    if sol.kind == "M2b" and len(pts) == 4:
        x, y, x2, y2 = pts
        step = _sub(x + y, x2 + y2)
        return any(step) and inst.delta.scalar_exceeds(dm(x, y) - dm(x2, y2), step)
    if sol.kind == "M2c" and len(pts) == 2:
        x, y = pts
        return x != y and inst.lam.vector_exceeds(_sub(f(x), f(y)), _sub(x, y))
    return False


def verify_gcm(inst: MmcmInstance, sol: ClsSolution) -> bool:
    return verify_mmcm(inst, sol, allow_axiom=False)


def check_metametric(d_metric: PairMap, points: Sequence[Sequence]) -> Optional[MetametricWitness]:
    """Exact check of the four axioms over all pairs and triples of the sample."""
    pts = [vector(x) for x in points]
    n = len(pts)
    table = [[d_metric(pts[i], pts[j]) for j in range(n)] for i in range(n)]
    for i, j in itertools.product(range(n), repeat=2):
        v = table[i][j]
        if v < 0:
            return MetametricWitness("negativity", (pts[i], pts[j]))
        if v == 0 and pts[i] != pts[j]:
            return MetametricWitness("zero-distinct", (pts[i], pts[j]))
        if v != table[j][i]:
            return MetametricWitness("asymmetry", (pts[i], pts[j]))
    for i, j, k in itertools.product(range(n), repeat=3):
        if table[i][k] > table[i][j] + table[j][k]:
            return MetametricWitness("triangle", (pts[i], pts[j], pts[k]))
    return None


# --- GCM -> CLO -------------------------------------------------------------------


def gcm_to_clo(src: MmcmInstance) -> CloInstance:
    """p(x) = d(f(x), x); lambda' = max(lambda, (lambda + 1) delta); eps' = (1 - c) eps."""
    lam, delta = src.lam.exact(), src.delta.exact()
    if lam is None or delta is None:
        raise ValueError("the reduction needs rational lambda and delta")
    lam2 = max(lam, (lam + 1) * delta)
    f, dm = src.f, src.d_metric
    return CloInstance(src.d, f, lambda x: dm(f(x), x), (1 - src.c) * src.eps,
                       NormConst.of(lam2, src.r), src.r)


def pullback_gcm_solution(src: MmcmInstance, sol: ClsSolution) -> ClsSolution:
    img = gcm_to_clo(src)
    if not verify_clo(img, sol):
        raise ContractError("not a solution of the reduced instance")
    f, dm = src.f, src.d_metric
    if sol.kind == "C1":
        (x,) = sol.points
        if dm(f(x), x) <= src.eps:
            out = ClsSolution("M1", (x,))
        else:
            out = ClsSolution("M2a", (f(x), x))
    elif sol.kind == "C2a":
        out = ClsSolution("M2c", sol.points)
    else:
        x, y = sol.points
        if src.lam.vector_exceeds(_sub(f(x), f(y)), _sub(x, y)):
            out = ClsSolution("M2c", (x, y))
        else:
            out = ClsSolution("M2b", (f(x), x, f(y), y))
    if not verify_gcm(src, out):
        raise InvariantBreach(f"pulled-back {out.kind} solution does not verify")
    return out


# --- CLO -> MMCM ------------------------------------------------------------------


def clo_to_mmcm(src: CloInstance) -> MmcmInstance:
    """d(x, y) = p(x) + p(y) + 1 with c = 1 - eps/4.

    f keeps the CLO constant lambda and the metric-continuity threshold is
    2^(1-1/r) lambda, which is the continuity constant d actually has.
    """
    lam = src.lam.exact()
    if lam is None:
        raise ValueError("the reduction needs a rational lambda")
    if src.eps >= 1:
        raise ValueError("eps must be below 1")
    p = src.p

    def dm(x, y):
        return p(x) + p(y) + 1

    bound = NormConst.two_power_times(lam, src.r)
    return MmcmInstance(src.d, src.f, dm, src.r, src.eps, 1 - src.eps / 4,
                        delta=bound, lam=src.lam, gamma=bound)


def pullback_clo_solution(src: CloInstance, sol: ClsSolution) -> ClsSolution:
    img = clo_to_mmcm(src)
    if sol.kind == "M1":
        raise InvariantBreach("an eps-fixpoint cannot exist when d >= 1 > eps")
    if not verify_mmcm(img, sol):
        raise ContractError("not a solution of the reduced instance")
    f, p = src.f, src.p
    if sol.kind == "M3":
        raise InvariantBreach("the constructed distance satisfies every axiom")
    if sol.kind == "M2a":
        x, y = sol.points
        x_ok = p(f(x)) > p(x) - src.eps
        out = ClsSolution("C1", (x if x_ok else y,))
    elif sol.kind == "M2c":
        out = ClsSolution("C2a", sol.points)
    else:
        x, y, x2, y2 = sol.points
        cands = [(a, b) for a, b in ((x, x2), (y, y2)) if a != b]
        out = next((ClsSolution("C2b", c) for c in cands if verify_clo(src, ClsSolution("C2b", c))), None)
        if out is None:
            raise InvariantBreach("metric-continuity violation without a potential violation")
    if not verify_clo(src, out):
        raise InvariantBreach(f"pulled-back {out.kind} solution does not verify")
    return out
