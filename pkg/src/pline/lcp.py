"""Linear complementarity: find y >= 0 with w = q + M y >= 0 and y.w = 0.

Lemke's complementary pivoting runs on an exact tableau for
w - M y - z 1 = q.  Ties in the ratio test are broken lexicographically
using the rows of the current basis inverse, which is the symbolic
perturbation q + (eps, eps^2, ...).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import lcm
from typing import Iterable, Optional, Sequence

from .numeric import (
    Matrix,
    SingularMatrixError,
    Vector,
    det,
    mat_vec,
    matrix,
    principal_minor,
    rat_str,
    solve_linear,
    to_rational,
    vector,
)


class CapabilityError(ValueError):
    pass


class LemkeInvariantError(AssertionError):
    pass


@dataclass(frozen=True)
class LcpInstance:
    M: Matrix
    q: Vector

    def __post_init__(self):
        object.__setattr__(self, "M", matrix(self.M))
        object.__setattr__(self, "q", vector(self.q))
        d = len(self.q)
        if len(self.M) != d or any(len(r) != d for r in self.M):
            raise ValueError("M must be d x d with d = len(q)")

    @property
    def d(self) -> int:
        return len(self.q)

    def w(self, y: Sequence[Fraction]) -> Vector:
        return tuple(qi + mi for qi, mi in zip(self.q, mat_vec(self.M, y)))


@dataclass
class LemkeState:
    basis: list[int]  # variable index per tableau row: w_i = i, y_i = d + i, z = 2d
    entering: Optional[int]
    y: Vector
    w: Vector
    z: Fraction
    trace: list[tuple[tuple[int, ...], Fraction]] = field(default_factory=list)


@dataclass(frozen=True)
class LcpResult:
    kind: str  # "Q1", "Q2" or "SecondaryRay"
    y: Optional[Vector] = None
    index_set: Optional[tuple[int, ...]] = None
    minor: Optional[Fraction] = None
    state: Optional[LemkeState] = field(default=None, compare=False)


def is_p_matrix(M: Matrix, max_d: int = 16) -> Optional[tuple[int, ...]]:
    """None if every principal minor is positive, else a 0-based index set with minor <= 0."""
    M = matrix(M)
    d = len(M)
    if d > max_d:
        raise CapabilityError(f"P-matrix check limited to d <= {max_d}")
    return _nonpositive_minor(M, d)


def _nonpositive_minor(M: Matrix, d: int) -> Optional[tuple[int, ...]]:
    for size in range(1, d + 1):
        for idx in combinations(range(d), size):
            if principal_minor(M, idx) <= 0:
                return idx
    return None


def verify_lcp_solution(inst: LcpInstance, y: Sequence) -> bool:
    y = vector(y)
    if len(y) != inst.d or any(v < 0 for v in y):
        return False
    w = inst.w(y)
    return all(v >= 0 for v in w) and all(a * b == 0 for a, b in zip(y, w))


def enumerate_complementary_bases(inst: LcpInstance, max_d: int = 12) -> list[Vector]:
    """Every complementary solution, by solving all 2^d complementary systems."""
    d = inst.d
    if d > max_d:
        raise CapabilityError(f"enumeration limited to d <= {max_d}")
    found: list[Vector] = []
    for size in range(d + 1):
        for idx in combinations(range(d), size):
            y = [Fraction(0)] * d
            if idx:
                sub = tuple(tuple(inst.M[i][j] for j in idx) for i in idx)
                try:
                    sol = solve_linear(sub, [-inst.q[i] for i in idx])
                except SingularMatrixError:
                    continue
                for i, v in zip(idx, sol):
                    y[i] = v
            y = tuple(y)
            if verify_lcp_solution(inst, y) and y not in found:
                found.append(y)
    return found


def _pivot(T: list[list[Fraction]], rhs: list[Fraction], r: int, c: int) -> None:
    piv = T[r][c]
    row = [v / piv for v in T[r]]
    T[r] = row
    rhs[r] = rhs[r] / piv
    for i in range(len(T)):
        if i != r:
            f = T[i][c]
            if f:
                Ti = T[i]
                for j, v in enumerate(row):
                    if v:
                        Ti[j] -= f * v
                rhs[i] -= f * rhs[r]


def _lexmin_row(T, rhs, c: int, d: int, rows: Iterable[int]) -> int:
    # symbolic-perturbation ratio test: compare (rhs_i, Binv row i) / T[i][c]
    best, best_key = -1, None
    for i in rows:
        a = T[i][c]
        key = [rhs[i] / a] + [T[i][j] / a for j in range(d)]
        if best_key is None or key < best_key:
            best, best_key = i, key
    return best


def _state(basis, rhs, d, entering, trace) -> LemkeState:
    vals = [Fraction(0)] * (2 * d + 1)
    for r, var in enumerate(basis):
        vals[var] = rhs[r]
    return LemkeState(list(basis), entering, tuple(vals[d:2 * d]), tuple(vals[:d]), vals[2 * d], trace)


def lemke_solve(inst: LcpInstance, max_pivots: Optional[int] = None,
                minor_search_max_d: int = 12) -> LcpResult:
    d = inst.d
    q = inst.q
    if all(v >= 0 for v in q):
        y0 = tuple(Fraction(0) for _ in range(d))
        return LcpResult("Q1", y=y0)
    zc = 2 * d
    # tableau columns: w_0..w_{d-1}, y_0..y_{d-1}, z
    T = [[Fraction(int(i == j)) for j in range(d)] + [-v for v in inst.M[i]] + [Fraction(-1)]
         for i in range(d)]
    rhs = list(q)
    basis = list(range(d))
    # z enters on the primary ray; the most negative q_i leaves (ties: larger index)
    qmin = min(q)
    r = max(i for i in range(d) if q[i] == qmin)
    _pivot(T, rhs, r, zc)
    leaving = basis[r]
    basis[r] = zc
    trace = [(tuple(basis), rhs[r])]
    limit = max_pivots if max_pivots is not None else 10 * 2 ** min(d, 20) + 100
    for _ in range(limit):
        entering = leaving + d if leaving < d else leaving - d
        cand = [i for i in range(d) if T[i][entering] > 0]
        if not cand:
            state = _state(basis, rhs, d, entering, trace)
            if d <= minor_search_max_d:
                idx = _nonpositive_minor(inst.M, d)
                if idx is not None:
                    return LcpResult("Q2", index_set=idx, minor=principal_minor(inst.M, idx), state=state)
            return LcpResult("SecondaryRay", state=state)
        zrow = basis.index(zc)
        ratio = min(rhs[i] / T[i][entering] for i in cand)
        if zrow in cand and rhs[zrow] / T[zrow][entering] == ratio:
            r = zrow
        else:
            r = _lexmin_row(T, rhs, entering, d, cand)
        _pivot(T, rhs, r, entering)
        leaving = basis[r]
        basis[r] = entering
        if any(v < 0 for v in rhs):
            raise LemkeInvariantError("basic solution became infeasible")
        state = _state(basis, rhs, d, entering, trace)
        trace.append((tuple(basis), state.z))
        _check_system(inst, state)
        if leaving == zc:
            if not verify_lcp_solution(inst, state.y):
                raise LemkeInvariantError("terminal basis is not complementary")
            return LcpResult("Q1", y=state.y, state=state)
    raise LemkeInvariantError(f"no termination within {limit} pivots")


def _check_system(inst: LcpInstance, st: LemkeState) -> None:
    # w - M y - z 1 == q, exactly
    my = mat_vec(inst.M, st.y)
    for i in range(inst.d):
        if st.w[i] - my[i] - st.z != inst.q[i]:
            raise LemkeInvariantError("pivot broke the Lemke system")


def minor_certificate_ok(inst: LcpInstance, res: LcpResult) -> bool:
    """True iff a Q2 result names a principal minor that is really <= 0."""
    if res.kind != "Q2" or not res.index_set:
        return False
    m = principal_minor(inst.M, res.index_set)
    return m <= 0 and m == res.minor


def integer_scaled(inst: LcpInstance) -> tuple[LcpInstance, int]:
    """Multiply M and q by the lcm of all denominators; y solutions are unchanged."""
    den = lcm(*(x.denominator for r in inst.M for x in r), *(x.denominator for x in inst.q))
    if den == 1:
        return inst, 1
    return LcpInstance(tuple(tuple(x * den for x in r) for r in inst.M),
                       tuple(x * den for x in inst.q)), den


def lcp_to_json(inst: LcpInstance) -> dict:
    return {"d": inst.d, "M": [[rat_str(x) for x in r] for r in inst.M], "q": [rat_str(x) for x in inst.q]}


def lcp_from_json(doc: dict) -> LcpInstance:
    d = int(doc["d"])
    M = [[to_rational(x) for x in r] for r in doc["M"]]
    q = [to_rational(x) for x in doc["q"]]
    if len(q) != d or len(M) != d:
        raise ValueError("declared d does not match the data")
    return LcpInstance(M, q)


def result_to_json(res: LcpResult) -> dict:
    if res.kind == "Q1":
        return {"kind": "Q1", "y": [rat_str(v) for v in res.y]}
    if res.kind == "Q2":
        return {"kind": "Q2", "index_set": list(res.index_set), "minor": rat_str(res.minor)}
    st = res.state
    return {"kind": "SecondaryRay", "y": [rat_str(v) for v in st.y], "z": rat_str(st.z)}


def p_matrix_det_positive(M: Matrix) -> bool:
    return det(M) > 0
