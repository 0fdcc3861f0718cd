"""Contraction maps on [0,1]^d: slices, discrete direction grids, the
line construction over a discrete contraction map, and the nested
binary-search fixpoint algorithms (exact and approximate).

Coordinates are 0-based.  Grid point coordinates are stored as integer
indices a_j in 0..k_j, standing for a_j / k_j.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Optional, Sequence, Union

from .lineproblems import BitVector, UfeoplInstance
from .linfixp import INF, CountingMap, LinFixpCircuit, circuit_size, count_maxmin, map_dimension
from .numeric import Vector, best_rational_in_interval, to_rational

UP, DOWN, ZERO = "up", "down", "zero"

EvaluableMap = Callable[[Sequence[Fraction]], Vector]


class CapabilityError(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


class PromiseViolation(ValueError):
    """The map is not a contraction: a search saw an impossible sign pattern."""

    def __init__(self, msg: str, witness=None):
        super().__init__(msg)
        self.witness = witness


# --- slices -----------------------------------------------------------------


@dataclass(frozen=True)
class Slice:
    pattern: tuple[Optional[Fraction], ...]  # None marks a free coordinate

    def __post_init__(self):
        pat = tuple(None if v is None else to_rational(v) for v in self.pattern)
        if any(v is not None and not 0 <= v <= 1 for v in pat):
            raise ValueError("fixed slice entries must lie in [0, 1]")
        object.__setattr__(self, "pattern", pat)

    @staticmethod
    def free_all(d: int) -> "Slice":
        return Slice((None,) * d)

    @property
    def d(self) -> int:
        return len(self.pattern)

    def free(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.pattern) if v is None)

    def fixed(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.pattern) if v is not None)

    def fill(self, x: Sequence) -> Vector:
        """Substitute the fixed entries into a full-length point."""
        return tuple(to_rational(xi) if v is None else v for xi, v in zip(x, self.pattern))

    def aligned(self, k: Sequence[int]) -> bool:
        return all(v is None or (v * kj).denominator == 1 for v, kj in zip(self.pattern, k))


def restrict(f: EvaluableMap, s: Slice) -> EvaluableMap:
    """x -> f(x with the fixed coordinates of s substituted)."""

    def g(x):
        if len(x) != s.d:
            raise ValueError(f"expected a {s.d}-vector")
        return f(s.fill(x))

    g.d = s.d
    return g


def restrict_projected(f: EvaluableMap, s: Slice) -> EvaluableMap:
    """The restriction as a map on the free coordinates only."""
    free = s.free()

    def g(y):
        if len(y) != len(free):
            raise ValueError(f"expected a {len(free)}-vector")
        x = list(s.pattern)
        for i, v in zip(free, y):
            x[i] = to_rational(v)
        out = f(tuple(x))
        return tuple(out[i] for i in free)

    g.d = len(free)
    return g


# --- grids --------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    k: tuple[int, ...]
    override: bool = False

    def __post_init__(self):
        if not self.k or any(int(v) != v or v < 1 for v in self.k):
            raise ValueError("grid sizes must be positive integers")
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))

    @staticmethod
    def explicit(k: Sequence[int]) -> "GridSpec":
        return GridSpec(tuple(k), override=True)

    @property
    def d(self) -> int:
        return len(self.k)

    def size(self) -> int:
        out = 1
        for v in self.k:
            out *= v + 1
        return out

    def points(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(v + 1) for v in self.k))

    def to_point(self, idx: Sequence[int]) -> Vector:
        return tuple(Fraction(a, kj) for a, kj in zip(idx, self.k))


def grid_exponents(d: int, n: int, b_m: int, b_q: int) -> tuple[int, ...]:
    """log2 of k_1..k_d: k_i = 2^((d-i+1)(n log n + 3 n b_m) + b_q)."""
    n = max(n, 1)
    nlogn = (n**n - 1).bit_length()  # ceil(n log2 n)
    return tuple((d - i + 1) * (nlogn + 3 * n * b_m) + b_q for i in range(1, d + 1))


def grid_from_circuit(circuit: LinFixpCircuit) -> GridSpec:
    n = max(count_maxmin(circuit), 1)
    b = n * circuit_size(circuit).num_gates
    return GridSpec(tuple(2**e for e in grid_exponents(circuit.d, n, b, b)))


# --- direction functions -------------------------------------------------------


def _direction(fx: Fraction, x: Fraction) -> str:
    if fx > x:
        return UP
    if fx < x:
        return DOWN
    return ZERO


@dataclass
class DirectionGrid:
    grid: GridSpec
    D: Callable[[int, tuple[int, ...]], str]  # (dimension, grid index) -> direction

    @property
    def d(self) -> int:
        return self.grid.d

    def zero_everywhere(self, idx: tuple[int, ...]) -> bool:
        return all(self.D(i, idx) == ZERO for i in range(self.d))

    @staticmethod
    def from_table(grid: GridSpec, table: dict) -> "DirectionGrid":
        """table maps a grid index tuple to a d-tuple of directions."""
        return DirectionGrid(grid, lambda i, idx: table[tuple(idx)][i])


def direction_grid_from_map(f: EvaluableMap, grid: GridSpec) -> DirectionGrid:
    @lru_cache(maxsize=None)
    def image(idx: tuple[int, ...]) -> Vector:
        return f(grid.to_point(idx))

    def D(i: int, idx: tuple[int, ...]) -> str:
        return _direction(image(tuple(idx))[i], Fraction(idx[i], grid.k[i]))

    return DirectionGrid(grid, D)


@dataclass(frozen=True)
class Violation:
    kind: str  # "direction", "unique-fixpoint" or "points-toward"
    detail: tuple


def validate_dcm(dg: DirectionGrid, budget: int = 10**6) -> Optional[Violation]:
    """Exhaustive check of the discrete contraction properties.

    Property 2 is checked for the sub-slice that fixes the last free
    coordinate, the case the line construction relies on.
    """
    grid, d = dg.grid, dg.d
    if grid.size() * d > budget:
        raise BudgetExceeded(f"{grid.size()} grid points exceed the budget")
    k = grid.k
    pts = list(grid.points())
    # each D_i must be monotone along dimension i
    for i in range(d):
        for idx in pts:
            if idx[i] == k[i]:
                continue
            lo, hi = idx, idx[:i] + (idx[i] + 1,) + idx[i + 1:]
            dl, dh = dg.D(i, lo), dg.D(i, hi)
            if (dh in (UP, ZERO) and dl != UP) or (dl in (DOWN, ZERO) and dh != DOWN):
                return Violation("direction", (i, lo, hi))
    # fixpoints of every i-slice: free coordinates 0..i-1, the rest fixed
    fps: list[dict] = []
    for i in range(d + 1):
        table: dict[tuple, list] = {}
        for idx in pts:
            if all(dg.D(j, idx) == ZERO for j in range(i)):
                table.setdefault(idx[i:], []).append(idx)
        for rest in itertools.product(*(range(v + 1) for v in k[i:])):
            found = table.get(rest, [])
            if len(found) != 1:
                return Violation("unique-fixpoint", (i, rest, tuple(found)))
        fps.append(table)
    for i in range(1, d + 1):
        c = i - 1
        for rest, (q,) in fps[i].items():
            for x in range(k[c] + 1):
                (p,) = fps[i - 1][(x,) + rest]
                want = UP if p[c] < q[c] else DOWN if p[c] > q[c] else None
                if want is not None and dg.D(c, p) != want:
                    return Violation("points-toward", (c, p, q))
    return None


def brute_force_fixpoint(dg: DirectionGrid) -> Optional[tuple[int, ...]]:
    for idx in dg.grid.points():
        if dg.zero_everywhere(idx):
            return idx
    return None


# --- line construction ------------------------------------------------------------
#
# Level c (c = d-1 down to 0) walks coordinate c over points whose directions
# in dimensions 0..c-1 are all zero.  A level-(d-1) vertex is a grid index.
# A level-c vertex for c < d-1 is (v, r): v is a level-(c+1) vertex or None
# (the walk from the origin towards the first level-(c+1) vertex) and r is
# the current grid index.  The successor at level c is exact in coordinates
# c..d-1 only; lower levels fill in the rest.


class DcmLine:
    def __init__(self, dg: DirectionGrid):
        self.dg = dg
        self.d = dg.d
        self.k = dg.grid.k
        self.bits = [max(1, kj.bit_length()) for kj in self.k]  # ceil(log2(k_j + 1))
        self.point_width = sum(self.bits)
        self.tag_width = 1 + self.point_width
        self.width = (self.d - 1) * self.tag_width + self.point_width
        vmax = self.k[-1]
        for c in range(self.d - 2, -1, -1):
            vmax = (self.k[c] + 1) * (vmax + 1) + self.k[c]
        self.vmax = vmax
        self._valid: dict = {}
        self._succ: dict = {}

    # geometry

    def on_surface(self, r: tuple[int, ...], c: int) -> bool:
        return all(self.dg.D(j, r) == ZERO for j in range(c))

    @staticmethod
    def point(x) -> tuple[int, ...]:
        return x if isinstance(x[0], int) else x[1]

    def _with_point(self, x, r: tuple[int, ...]):
        return r if isinstance(x[0], int) else (x[0], r)

    def _step(self, r: tuple[int, ...], c: int, delta: int) -> tuple[int, ...]:
        return r[:c] + (r[c] + delta,) + r[c + 1:]

    # membership

    def valid(self, x, c: int) -> bool:
        key = (x, c)
        if key not in self._valid:
            self._valid[key] = self._valid_uncached(x, c)
        return self._valid[key]

    def _valid_uncached(self, x, c: int) -> bool:
        D = self.dg.D
        if c == self.d - 1:
            p = x
            return self.on_surface(p, c) and D(c, p) in (UP, ZERO)
        v, r = x
        if not self.on_surface(r, c):
            return False
        if v is None:
            return all(a == 0 for a in r[c + 1:]) and D(c, r) in (UP, ZERO)
        if not self.valid(v, c + 1):
            return False
        u = self.point(self.succ(v, c + 1))
        if r[c + 1:] != u[c + 1:]:
            return False
        # r lies between u_c and the slice fixpoint iff its own direction points away from u_c
        dr = D(c, r)
        return (r[c] >= u[c] and dr in (UP, ZERO)) or (r[c] <= u[c] and dr in (DOWN, ZERO))

    # successor

    def succ(self, x, c: int):
        key = (x, c)
        if key not in self._succ:
            self._succ[key] = self._succ_uncached(x, c)
        return self._succ[key]

    def _succ_uncached(self, x, c: int):
        if not self.valid(x, c):
            return x
        D = self.dg.D
        r = self.point(x)
        dr = D(c, r)
        if dr == UP:
            return self._with_point(x, self._step(r, c, 1))
        if dr == DOWN:
            return self._with_point(x, self._step(r, c, -1))
        if c == self.d - 1:
            return x
        v = x[0]
        # r is the next level-(c+1) vertex's point
        if v is None:
            nxt = r if c + 1 == self.d - 1 else (None, r)
        else:
            nxt = self._with_point(self.succ(v, c + 1), r)
        after = self.succ(nxt, c + 1)
        if after == nxt:
            return (nxt, r)  # end of the line above: park here
        return (nxt, self.point(after))

    def valid_vertices(self, c: int = 0) -> list:
        """Every vertex with C = 1 at level c.

        A record whose nested vertex is invalid is itself invalid, so it is
        enough to pair each valid vertex one level up (or None) with every
        grid point.  This is the exhaustive oracle for line uniqueness.
        """
        pts = list(self.dg.grid.points())
        if c == self.d - 1:
            return [p for p in pts if self.valid(p, c)]
        above = [None] + self.valid_vertices(c + 1)
        return [(v, r) for v in above for r in pts if self.valid((v, r), c)]

    # potential

    def potential(self, x, c: int) -> int:
        r = self.point(x)
        if c == self.d - 1:
            return r[c]
        v = x[0]
        if v is None:
            return r[c]
        u = self.point(self.succ(v, c + 1))
        dr = self.dg.D(c, r)
        upward = dr == UP or (dr == ZERO and r[c] >= u[c])
        base = (self.k[c] + 1) * (self.potential(v, c + 1) + 1)
        return base + (r[c] if upward else self.k[c] - r[c])

    # encoding: d-1 tags (deepest level first), then the current point

    def _enc_point(self, r: tuple[int, ...]) -> int:
        out = 0
        for a, b in zip(r, self.bits):
            out = (out << b) | a
        return out

    def _dec_point(self, val: int) -> Optional[tuple[int, ...]]:
        out = []
        for b in reversed(self.bits):
            out.append(val & ((1 << b) - 1))
            val >>= b
        r = tuple(reversed(out))
        return r if all(a <= kj for a, kj in zip(r, self.k)) else None

    def encode(self, x) -> BitVector:
        r_top = self.point(x)
        # points of the nested vertices, level 1 first
        chain: list[Optional[tuple[int, ...]]] = []
        node = x
        for _ in range(self.d - 1):
            node = node[0]
            if node is None:
                break
            chain.append(self.point(node))
        chain += [None] * (self.d - 1 - len(chain))
        val = 0
        for tag in reversed(chain):  # deepest first
            flag = 0 if tag is None else 1
            val = (val << self.tag_width) | (flag << self.point_width) | (0 if tag is None else self._enc_point(tag))
        val = (val << self.point_width) | self._enc_point(r_top)
        return BitVector(self.width, val)

    def decode(self, u: BitVector):
        """Nested vertex, or None for a malformed record."""
        val = u.value
        r = self._dec_point(val & ((1 << self.point_width) - 1))
        val >>= self.point_width
        tags = []
        for _ in range(self.d - 1):
            t = val & ((1 << self.tag_width) - 1)
            val >>= self.tag_width
            flag = t >> self.point_width
            body = t & ((1 << self.point_width) - 1)
            if not flag:
                if body:
                    return None
                tags.append(None)
            else:
                p = self._dec_point(body)
                if p is None:
                    return None
                tags.append(p)
        # tags[0] is level 1, tags[-1] the base level
        if r is None:
            return None
        if self.d == 1:
            return r
        seen_none = False
        for t in tags:
            if t is None:
                seen_none = True
            elif seen_none:
                return None
        node = None
        for lvl in range(self.d - 1, 0, -1):
            t = tags[lvl - 1]
            if t is None:
                continue
            node = t if lvl == self.d - 1 else (node, t)
        return (node, r)

    # instance

    def to_instance(self) -> UfeoplInstance:
        d = self.d

        def C(u: BitVector) -> int:
            x = self.decode(u)
            return int(x is not None and self.valid(x, 0))

        def S(u: BitVector) -> BitVector:
            x = self.decode(u)
            if x is None or not self.valid(x, 0):
                return u
            return self.encode(self.succ(x, 0))

        def V(u: BitVector) -> int:
            x = self.decode(u)
            if x is None or not self.valid(x, 0):
                return 0
            return self.potential(x, 0)

        m = max(1, self.vmax.bit_length())
        inst = UfeoplInstance(self.width, m, C, S, V, metered=False, promise_unique=True)
        inst.line = self
        return inst


def dcm_to_ufeopl(dg: DirectionGrid) -> UfeoplInstance:
    return DcmLine(dg).to_instance()


# --- fixpoint search ---------------------------------------------------------------


@dataclass(frozen=True)
class FixpointResult:
    point: Vector
    queries: int


MAX_EXACT_BITS = 1 << 14


def _denominator_bits(grid: Optional[GridSpec], d: int) -> list[int]:
    # L_k for the coordinate fixed at depth k: log2 of k_{d-k+1}
    if grid is None:
        return [1] * d
    if grid.d != d:
        raise ValueError("grid dimension does not match the map")
    return [max(1, (grid.k[d - 1 - k] - 1).bit_length()) for k in range(d)]


def find_fp_exact(f: Union[LinFixpCircuit, EvaluableMap], grid: Optional[GridSpec] = None) -> FixpointResult:
    """Nested binary search for the exact fixpoint of a piecewise-linear contraction.

    Depth k fixes coordinate k.  The search for t_k stops once the bracket
    is narrower than 2^-(L_k+1); the simplest rational of denominator at
    most 2^L_k inside it is then verified.  If that fails (the grid bound is
    too small for sub-searches at off-grid prefixes) the secant root of the
    bracket is tried, then L_k is doubled.
    """
    d = f.d if isinstance(f, LinFixpCircuit) else map_dimension(f)
    counted = CountingMap(f, d)
    L0 = _denominator_bits(grid, d)

    def solve(prefix: tuple[Fraction, ...]) -> Vector:
        k = len(prefix)
        if k == d:
            return prefix
        lo, hi = Fraction(0), Fraction(1)
        v_lo = solve(prefix + (lo,))
        f_lo = counted(v_lo)[k]
        if f_lo == lo:
            return v_lo
        v_hi = solve(prefix + (hi,))
        f_hi = counted(v_hi)[k]
        if f_hi == hi:
            return v_hi
        if f_lo < lo or f_hi > hi:
            raise PromiseViolation(f"coordinate {k} leaves the unit interval", (v_lo, v_hi))
        L = L0[k]
        g_lo, g_hi = f_lo - lo, f_hi - hi
        while True:
            while hi - lo > Fraction(1, 2 ** (L + 1)):
                t = (lo + hi) / 2
                v = solve(prefix + (t,))
                ft = counted(v)[k]
                if ft == t:
                    return v
                if ft > t:
                    lo, g_lo = t, ft - t
                else:
                    hi, g_hi = t, ft - t
            t = best_rational_in_interval(lo, hi, 2**L)
            if t is not None:
                v = solve(prefix + (t,))
                if counted(v)[k] == t:
                    return v
            # the bound was too small; if the bracket sits on one linear
            # piece the secant root is exact
            t = lo + g_lo * (hi - lo) / (g_lo - g_hi)
            v = solve(prefix + (t,))
            if counted(v)[k] == t:
                return v
            L *= 2
            if L > MAX_EXACT_BITS:
                raise PromiseViolation(f"no rational fixpoint coordinate {k} found", (lo, hi))

    point = solve(())
    return FixpointResult(point, counted.calls)


@dataclass(frozen=True)
class EpsilonSchedule:
    p: Union[int, float]
    eps: Fraction
    values: tuple[Fraction, ...]


def epsilon_schedule(p, eps, d: int) -> EpsilonSchedule:
    """Per-coordinate tolerances: eps/4^i for p = 1, eps^(p^i) p^(-2 sum_{j<=i} p^j) for p >= 2."""
    eps = to_rational(eps)
    if p == INF:
        raise CapabilityError("the approximate search does not cover the max norm")
    if int(p) != p or p < 1:
        raise ValueError("p must be a positive integer")
    if eps <= 0:
        raise ValueError("eps must be positive")
    p = int(p)
    if p == 1:
        vals = tuple(eps / 4**i for i in range(1, d + 1))
    else:
        vals = tuple(eps ** (p**i) / Fraction(p) ** (2 * sum(p**j for j in range(i + 1))) for i in range(1, d + 1))
    return EpsilonSchedule(p, eps, vals)


def find_fp_approx(f: EvaluableMap, p, eps, d: Optional[int] = None) -> FixpointResult:
    """Nested bisection returning v with |f(v)_i - v_i| <= eps_i for every i."""
    if d is None:
        d = map_dimension(f)
    sched = epsilon_schedule(p, eps, d).values
    counted = CountingMap(f, d)

    def ok(v, k) -> tuple[bool, Fraction]:
        diff = counted(v)[k] - v[k]
        return abs(diff) <= sched[k], diff

    def solve(prefix: tuple[Fraction, ...]) -> Vector:
        k = len(prefix)
        if k == d:
            return prefix
        lo, hi = Fraction(0), Fraction(1)
        v = solve(prefix + (lo,))
        good, _ = ok(v, k)
        if good:
            return v
        v = solve(prefix + (hi,))
        good, _ = ok(v, k)
        if good:
            return v
        while True:
            while hi - lo > sched[k]:
                t = (lo + hi) / 2
                v = solve(prefix + (t,))
                good, diff = ok(v, k)
                if good:
                    return v
                if diff > 0:
                    lo = t
                else:
                    hi = t
            t = (lo + hi) / 2
            v = solve(prefix + (t,))
            good, diff = ok(v, k)
            if good:
                return v
            # only reachable if f is not contracting; keep narrowing
            if diff > 0:
                lo = t
            else:
                hi = t
            if hi - lo < Fraction(1, 2**MAX_EXACT_BITS):
                raise PromiseViolation(f"bisection on coordinate {k} did not converge", (lo, hi))

    point = solve(())
    return FixpointResult(point, counted.calls)


def gen_dcm_map(d: int, rng_seed: int, base: int = 8):
    """A strictly upper-triangular affine contraction whose slice fixpoints are all on the grid.

    Grid sizes double towards coordinate 0 (k_{d-1} = base), and f_i uses
    only coordinates j > i with weight +-1/2^(j-i), so fixing coordinates
    j > i on the grid pins the fixpoint's coordinate i to the grid of k_i.
    """
    import random

    from .linfixp import AffineMap

    if d < 1:
        raise ValueError("d must be positive")
    rng = random.Random(rng_seed)
    k = tuple(base * 2 ** (d - 1 - i) for i in range(d))
    A = [[Fraction(rng.choice((-1, 1)), 2 ** (j - i)) if j > i else Fraction(0) for j in range(d)] for i in range(d)]
    b = [Fraction(rng.randint(0, k[i]), k[i]) for i in range(d)]
    return AffineMap(A, b), GridSpec.explicit(k)
