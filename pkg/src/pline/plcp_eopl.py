"""P-LCP as an end-of-potential-line instance on 2d-bit configurations.

Configuration layout (left to right): d tightness bits, then d label bits.
Tightness bit i is 1 when s_i = 0 is tight and 0 when y_i = 0 is tight.
The label bits are one-hot at the duplicate label l, or all zero when z = 0.
At the duplicate label both y_l = 0 and s_l = 0 hold; the canonical
encoding stores tightness bit l as 0, so any configuration with bit l set
is invalid.

Every edge of the Lemke polyhedron is determined by a complementary set Y
(the y-variables that are basic along it).  Along edge Y the basic part
is beta + z * gamma with B_Y beta = q and B_Y gamma = 1, where B_Y holds
-M columns for j in Y and unit columns otherwise (so s = q + M y + z 1).  The edge points
towards decreasing z when det M_YY > 0 and towards increasing z when
det M_YY < 0, which is the usual sign orientation of complementary pivoting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import factorial, floor
from typing import Optional

from .lcp import LcpInstance, LcpResult, integer_scaled
from .lineproblems import BitVector, EoplInstance, Solution, check_solution
from .numeric import SingularMatrixError, principal_minor, solve_linear

Point = tuple[tuple[Fraction, ...], tuple[Fraction, ...], Fraction]


class DegeneracyError(ArithmeticError):
    """The polyhedron is degenerate at a point the reduction had to decode."""


class PullbackInvariantError(AssertionError):
    pass


@dataclass(frozen=True)
class TrivialLcp:
    """q >= 0, so y = 0 already solves the instance and there is no line."""

    result: LcpResult


def _sign(x) -> int:
    return (x > 0) - (x < 0)


@dataclass
class PlcpEoplInstance:
    lcp: LcpInstance  # the caller's instance
    scaled: LcpInstance  # integer data used by the construction
    delta: int
    m: int
    start: Point
    shift: Fraction = Fraction(0)  # q was perturbed by (shift, shift^2, ...) when nonzero
    eopl: EoplInstance = field(init=False, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def d(self) -> int:
        return self.lcp.d

    @property
    def n(self) -> int:
        return 2 * self.d

    # --- encoding ----------------------------------------------------------

    def _fields(self, u: BitVector) -> tuple[list[int], list[int]]:
        d = self.d
        bits = [u.bit(i) for i in range(2 * d)]
        return bits[:d], bits[d:]

    def _decode(self, u: BitVector):
        """(point, Y-set, label) for u, or None if u does not name a feasible vertex."""
        if u.width != self.n:
            raise ValueError(f"configuration must have width {self.n}")
        key = u.value
        if key not in self._cache:
            self._cache[key] = self._decode_uncached(u)
        return self._cache[key]

    def _decode_uncached(self, u: BitVector):
        d = self.d
        tight, label = self._fields(u)
        if sum(label) > 1:
            return None
        l = label.index(1) if any(label) else None
        if l is not None and tight[l]:
            return None
        Y = frozenset(i for i in range(d) if tight[i])
        try:
            pt = self._solve_tight(Y, l)
        except SingularMatrixError:
            return None
        y, s, z = pt
        vals = list(y) + list(s) + [z]
        if any(v < 0 for v in vals):
            return None
        # nondegeneracy: exactly the 2d+1 encoded equalities are tight
        zeros = sum(1 for v in vals if v == 0)
        if zeros != d + 1:
            raise DegeneracyError(f"vertex for {u} has {zeros} zero coordinates, expected {d + 1}")
        return pt, Y, l

    def _solve_tight(self, Y: frozenset, l: Optional[int]) -> Point:
        M, q, d = self.scaled.M, self.scaled.q, self.d
        cols: list[tuple[str, int]] = [("y", j) for j in sorted(Y)]
        cols += [("s", j) for j in range(d) if j not in Y and j != l]
        if l is not None:
            cols.append(("z", -1))
        A = tuple(
            tuple(-M[i][j] if kind == "y" else (Fraction(-1) if kind == "z" else Fraction(int(i == j)))
                  for kind, j in cols)
            for i in range(d)
        )
        sol = solve_linear(A, q)
        y = [Fraction(0)] * d
        s = [Fraction(0)] * d
        z = Fraction(0)
        for (kind, j), v in zip(cols, sol):
            if kind == "y":
                y[j] = v
            elif kind == "s":
                s[j] = v
            else:
                z = v
        return tuple(y), tuple(s), z

    def is_valid(self, u: BitVector) -> bool:
        if u.is_zero():
            return True
        return self._decode(u) is not None

    def etoi(self, u: BitVector) -> Point:
        if u.is_zero():
            raise ValueError("0^n is the artificial start and has no polyhedron vertex")
        dec = self._decode(u)
        if dec is None:
            raise ValueError(f"{u} is not a valid configuration")
        return dec[0]

    def itoe(self, pt: Point) -> BitVector:
        y, s, z = pt
        d = self.d
        if len(y) != d or len(s) != d:
            raise ValueError("point has the wrong dimension")
        if any(a * b != 0 for a, b in zip(y, s)):
            return self.invalid_marker()
        dl = [i for i in range(d) if y[i] == 0 and s[i] == 0]
        if len(dl) > 1 or (dl and z == 0):
            raise DegeneracyError(f"point has duplicate labels {dl} at z={z}")
        tight = [int(s[i] == 0 and i not in dl) for i in range(d)]
        label = [int(i in dl) for i in range(d)]
        bits = tight + label
        return BitVector(self.n, int("".join(map(str, bits)), 2))

    def invalid_marker(self) -> BitVector:
        return BitVector(self.n, 0b11)

    # --- edges -------------------------------------------------------------

    def _edge(self, Y: frozenset, pt: Point, entering: tuple[str, int]):
        """Walk edge Y away from pt, raising ``entering`` from 0.

        Returns (outgoing, dz, other endpoint or None for a ray).
        """
        M, q, d = self.scaled.M, self.scaled.q, self.d
        sigma = 1 if not Y else _sign(principal_minor(M, Y))
        if sigma == 0:
            raise DegeneracyError(f"singular principal minor on {sorted(Y)}")
        B = tuple(tuple(-M[i][j] if j in Y else Fraction(int(i == j)) for j in range(d)) for i in range(d))
        beta = solve_linear(B, q)
        gamma = solve_linear(B, [1] * d)
        kind, idx = entering
        if kind == "z":
            dz = 1
        else:
            dz = _sign(gamma[idx])
            if dz == 0:
                raise DegeneracyError("entering variable does not move along its edge")
        outgoing = dz * sigma < 0
        z0 = pt[2]
        # step t >= 0 with z = z0 + dz * t; basic coordinate j moves at rate gamma_j * dz
        t_best, hits = None, []
        for j in range(d):
            if kind != "z" and j == idx:
                continue
            rate = gamma[j] * dz
            cur = beta[j] + gamma[j] * z0
            if rate < 0:
                if cur == 0:
                    raise DegeneracyError("a basic variable is already zero")
                t = cur / -rate
                if t_best is None or t < t_best:
                    t_best, hits = t, [j]
                elif t == t_best:
                    hits.append(j)
        if dz < 0:
            if t_best is None or z0 < t_best:
                t_best, hits = z0, ["z"]
            elif z0 == t_best:
                hits.append("z")
        if t_best is None:
            return outgoing, dz, None
        if len(hits) > 1:
            raise DegeneracyError("ratio test tie")
        z1 = z0 + dz * t_best
        basic = [beta[j] + gamma[j] * z1 for j in range(d)]
        y = tuple(basic[j] if j in Y else Fraction(0) for j in range(d))
        s = tuple(Fraction(0) if j in Y else basic[j] for j in range(d))
        return outgoing, dz, (y, s, z1)

    def _incident(self, u: BitVector):
        """The (one or two) edges at a valid non-start configuration."""
        pt, Y, l = self._decode(u)
        if l is None:
            return pt, Y, [(Y, ("z", -1))]
        return pt, Y, [(Y | {l}, ("y", l)), (Y, ("s", l))]

    # --- line procedures ---------------------------------------------------

    def successor(self, u: BitVector) -> BitVector:
        if u.is_zero():
            return self.itoe(self.start)
        if not self.is_valid(u):
            return u
        pt, _, edges = self._incident(u)
        for Y, ent in edges:
            out, _, other = self._edge(Y, pt, ent)
            if out:
                if other is not None and other[2] < pt[2]:
                    return self.itoe(other)
                return u
        return u

    def predecessor(self, u: BitVector) -> BitVector:
        if u.is_zero() or not self.is_valid(u):
            return u
        pt, _, edges = self._incident(u)
        if pt == self.start:
            return BitVector.zeros(self.n)
        for Y, ent in edges:
            out, _, other = self._edge(Y, pt, ent)
            if not out:
                if other is not None and other[2] > pt[2]:
                    return self.itoe(other)
                return u
        return u

    def potential(self, u: BitVector) -> int:
        if u.is_zero() or not self.is_valid(u):
            return 0
        z = self.etoi(u)[2]
        return floor(self.delta**2 * (self.delta - z))

    def decoded_y(self, u: BitVector) -> tuple[Fraction, ...]:
        return self.etoi(u)[0]


def _delta(inst: LcpInstance) -> int:
    d = inst.d
    i_max = max([abs(x) for r in inst.M for x in r] + [abs(x) for x in inst.q])
    i_max = max(1, -(-i_max.numerator // i_max.denominator))
    return factorial(2 * d) * i_max ** (2 * d + 1) + 1


def potential_bits(delta: int) -> int:
    # least m with 2 * delta^3 <= 2^m
    return (2 * delta**3 - 1).bit_length()


def _build(inst: LcpInstance, shift: Fraction) -> PlcpEoplInstance:
    d = inst.d
    q = inst.q
    if shift:
        q = tuple(v + shift ** (i + 1) for i, v in enumerate(q))
    scaled, _ = integer_scaled(LcpInstance(inst.M, q))
    qmin = min(scaled.q)
    if sum(1 for v in scaled.q if v == qmin) > 1:
        raise DegeneracyError("the start vertex has more than one duplicate label")
    z0 = -qmin
    start = (tuple(Fraction(0) for _ in range(d)), tuple(v + z0 for v in scaled.q), z0)
    delta = _delta(scaled)
    out = PlcpEoplInstance(inst, scaled, delta, potential_bits(delta), start, shift)
    out.eopl = EoplInstance(out.n, out.m, out.successor, out.predecessor, out.potential)
    return out


PERTURB_CHECK_MAX_D = 4


def build_plcp_eopl(inst: LcpInstance, perturb: bool = False):
    """Build the line instance, or return TrivialLcp when q >= 0.

    Degenerate data raises DegeneracyError unless ``perturb`` is set; then q
    is shifted by (e, e^2, ..., e^d) for shrinking e = 2^-k until the shifted
    instance decodes cleanly.  Pullbacks re-solve against the original q.
    """
    if all(v >= 0 for v in inst.q):
        return TrivialLcp(LcpResult("Q1", y=tuple(Fraction(0) for _ in range(inst.d))))
    try:
        out = _build(inst, Fraction(0))
        if perturb and inst.d <= PERTURB_CHECK_MAX_D and not is_nondegenerate(out):
            raise DegeneracyError("degenerate configuration")
        return out
    except DegeneracyError:
        if not perturb:
            raise
    for k in (4, 8, 16, 32, 64):
        try:
            out = _build(inst, Fraction(1, 2**k))
        except DegeneracyError:
            continue
        if inst.d > PERTURB_CHECK_MAX_D or is_nondegenerate(out):
            return out
    raise DegeneracyError("no perturbation in the tried range removes the degeneracy")


def pullback_plcp_solution(inst: PlcpEoplInstance, sol: Solution) -> LcpResult:
    u = sol.x
    if u.is_zero():
        raise ValueError("0^n is the artificial start, not a pullback input")
    if sol.kind != "R1" or not check_solution(inst.eopl, sol):
        raise PullbackInvariantError(f"{sol.kind} at {u} is not an end of line here")
    pt = inst.etoi(u)
    y, _, z = pt
    if z == 0:
        if inst.shift:
            y = _resolve_original(inst.lcp, y)
        return LcpResult("Q1", y=y)
    # the line breaks where both edges move z the same way; an edge with a
    # negative minor certifies that M is not a P-matrix
    M = inst.scaled.M
    _, _, edges = inst._incident(u)
    for Y, _ in edges:
        if Y and principal_minor(M, Y) <= 0:
            return LcpResult("Q2", index_set=tuple(sorted(Y)), minor=principal_minor(inst.lcp.M, Y))
    for size in range(1, inst.d + 1):
        for idx in combinations(range(inst.d), size):
            mnr = principal_minor(inst.lcp.M, idx)
            if mnr <= 0:
                return LcpResult("Q2", index_set=idx, minor=mnr)
    raise PullbackInvariantError("line ends at z > 0 but every principal minor is positive")


def _resolve_original(lcp: LcpInstance, y_shifted) -> tuple[Fraction, ...]:
    # same complementary basis, original right-hand side
    from .lcp import verify_lcp_solution

    Y = [i for i, v in enumerate(y_shifted) if v > 0]
    y = [Fraction(0)] * lcp.d
    if Y:
        sub = tuple(tuple(lcp.M[i][j] for j in Y) for i in Y)
        for i, v in zip(Y, solve_linear(sub, [-lcp.q[i] for i in Y])):
            y[i] = v
    y = tuple(y)
    if not verify_lcp_solution(lcp, y):
        raise PullbackInvariantError("perturbed basis does not solve the original instance")
    return y


def configuration_table(inst: PlcpEoplInstance) -> list[BitVector]:
    return [BitVector(inst.n, v) for v in range(1 << inst.n)]


def is_nondegenerate(inst: PlcpEoplInstance) -> bool:
    """Decode every configuration and every edge; False if any step is degenerate."""
    try:
        for u in configuration_table(inst):
            inst.successor(u)
            inst.predecessor(u)
    except DegeneracyError:
        return False
    return True


__all__ = [
    "DegeneracyError",
    "PlcpEoplInstance",
    "TrivialLcp",
    "build_plcp_eopl",
    "pullback_plcp_solution",
    "potential_bits",
    "is_nondegenerate",
]
