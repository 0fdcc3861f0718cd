"""Reductions between the line problems, each with a solution pullback.

Every reduction returns a new instance whose maps are closures over the
source maps, so reductions compose without tabulating anything.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .lineproblems import (
    BitVector,
    EomlInstance,
    EoplInstance,
    Solution,
    SvlInstance,
    UfeoplInstance,
    check_solution,
    solution_kinds,
    verify_eopl,
    verify_ufeopl,
)


class PullbackError(ValueError):
    """The image solution does not verify, or maps to nothing valid."""


# --- metered -> potential ------------------------------------------------------


def eoml_to_eopl(src: EomlInstance) -> EoplInstance:
    """Embed the metered instance under a leading 1 bit; 0-led vertices are dummies."""
    n, k = src.n, src.n + 1
    top = 1 << n
    zero_n = BitVector.zeros(n)

    def split(x: BitVector) -> tuple[int, BitVector]:
        return x.value >> n, BitVector(n, x.value & (top - 1))

    def lift(u: BitVector) -> BitVector:
        return BitVector(k, top | u.value)

    def V(x: BitVector) -> int:
        b, u = split(x)
        return src.V(u) if b else 0

    def S(x: BitVector) -> BitVector:
        b, u = split(x)
        if x.value == 0:
            return lift(zero_n)
        if b == 0:
            return x
        if src.V(u) == 0:
            return x
        return lift(src.S(u))

    def P(x: BitVector) -> BitVector:
        b, u = split(x)
        if x.value == 0 or b == 0:
            return x
        if u.is_zero():
            return BitVector.zeros(k)
        if src.V(u) == 0:
            return x
        return lift(src.P(u))

    return EoplInstance(k, k, S, P, V)


def pullback_eoml_solution(src: EomlInstance, sol: Solution) -> Solution:
    image = eoml_to_eopl(src)
    if not check_solution(image, sol):
        raise PullbackError(f"{sol.kind} at {sol.x} does not verify in the image")
    x = sol.x
    if x.value >> src.n == 0:
        raise PullbackError("image solutions never have a leading 0 bit")
    u = BitVector(src.n, x.value & ((1 << src.n) - 1))
    if sol.kind == "R2":
        out = Solution("T3", (u,))
    elif image.S(image.P(x)) != x:
        # start of a line in the image
        if src.S(src.P(u)) != u:
            out = Solution("T1", (u,))
        elif src.V(u) == 1:
            out = Solution("T2", (u,))
        else:
            out = Solution("T3", (u,))
    else:
        # end of a line in the image
        out = Solution("T1", (u,)) if src.P(src.S(u)) != u else Solution("T3", (u,))
    if not check_solution(src, out):
        raise PullbackError(f"pulled-back {out.kind} at {u} does not verify")
    return out


# --- potential -> metered ------------------------------------------------------


@dataclass(frozen=True)
class TriviallySolved:
    """The source already has a solution at 0^n or S(0^n)."""

    solution: Solution


def eopl_to_eoml(src: EoplInstance) -> Union[EomlInstance, TriviallySolved]:
    """Store the potential in the low m bits and walk it one unit at a time."""
    z = src.zero
    for cand in (z, src.S(z)):
        sol = verify_eopl(src, cand)
        if sol is not None:
            return TriviallySolved(sol)

    n, m = src.n, src.m
    k = n + m
    mask = (1 << m) - 1
    s0 = src.S(z)
    ss0 = src.S(s0)
    pss0 = src.V(ss0)

    def split(x: BitVector) -> tuple[BitVector, int]:
        return BitVector(n, x.value >> m), x.value & mask

    def join(u: BitVector, pi: int) -> BitVector:
        return BitVector(k, (u.value << m) | pi)

    def S(x: BitVector) -> BitVector:
        u, pi = split(x)
        if (u.is_zero() and pi == 1) or u == s0:
            return x
        if x.value == 0:
            return join(ss0, 2) if pss0 == 2 else join(z, 2)
        if u.is_zero():
            if 2 <= pi < pss0 - 1:
                return join(z, pi + 1)
            if pi == pss0 - 1:
                return join(ss0, pss0)
            return x
        u2 = src.S(u)
        p, p2 = src.V(u), src.V(u2)
        if src.P(u2) != u or u2 == u:
            return x
        if (pi == p == p2) or (pi == p and p2 == p + 1) or (pi == p and p2 == p - 1):
            return join(u2, p2)
        if (pi < p <= p2) or (p <= p2 <= pi) or (pi > p >= p2) or (p >= p2 >= pi):
            return x
        if p < p2:
            if p <= pi < p2 - 1:
                return join(u, pi + 1)
            if pi == p2 - 1:
                return join(u2, p2)
        if p > p2:
            if p >= pi > p2 + 1:
                return join(u, pi - 1)
            if pi == p2 + 1:
                return join(u2, p2)
        return x

    def P(x: BitVector) -> BitVector:
        u, pi = split(x)
        if (u.is_zero() and pi == 1) or u == s0:
            return x
        if u.is_zero():
            if pi == 0:
                return BitVector.zeros(k)
            if pi < pss0 and pi not in (1, 2):
                return join(z, pi - 1)
            if pi < pss0 and pi == 2:
                return BitVector.zeros(k)
        if u == ss0 and pi == pss0:
            return join(z, 0) if pi == 2 else join(z, pi - 1)
        if pi == src.V(u):
            u2 = src.P(u)
            p2, p = src.V(u2), src.V(u)
            if src.S(u2) != u or u2 == u:
                return x
            if p == p2:
                return join(u2, p2)
            return join(u2, p - 1) if p2 < p else join(u2, p + 1)
        u2 = src.S(u)
        p2, p = src.V(u2), src.V(u)
        if src.P(u2) != u or u2 == u:
            return x
        if p2 == p or (pi < p < p2) or (p < p2 <= pi) or (pi > p > p2) or (p > p2 >= pi):
            return x
        if p < p2 and p < pi <= p2 - 1:
            return join(u, pi - 1)
        if p > p2 and p > pi >= p2 + 1:
            return join(u, pi + 1)
        return x

    def V(x: BitVector) -> int:
        if x.value == 0:
            return 1
        if S(x) == x and P(x) == x:
            return 0
        return x.value & mask

    return EomlInstance(k, k + 1, S, P, V)


def pullback_eopl_solution(src: EoplInstance, sol: Solution) -> Solution:
    image = eopl_to_eoml(src)
    if isinstance(image, TriviallySolved):
        return image.solution
    if not check_solution(image, sol):
        raise PullbackError(f"{sol.kind} at {sol.x} does not verify in the image")
    u = BitVector(src.n, sol.x.value >> src.m)
    pu = src.P(u)

    def first_valid(*cands: BitVector) -> Solution:
        for c in cands:
            found = verify_eopl(src, c)
            if found is not None:
                return found
        raise PullbackError(f"no source solution near {u} for image {sol.kind}")

    if sol.kind == "T1":
        return first_valid(u)
    if sol.kind == "T2":
        return first_valid(u, pu, src.P(pu))
    return first_valid(u, pu)


# --- unique-forward potential -> unit steps -> verifiable line -----------------


def ufeopl_to_ufeoml(src: UfeoplInstance) -> UfeoplInstance:
    """Insert chain vertices (u, p+1), ..., (u, p'-1) on each potential gap.

    Vertices are (u, pi) with pi in the low m bits; the image potential is
    pi + 1 so the start has potential 1 and every on-line step adds exactly 1.
    Non-increasing edges are left as single image edges, so their tails stay
    U1 solutions.
    """
    n, m = src.n, src.m
    k = n + m
    mask = (1 << m) - 1

    def split(x: BitVector) -> tuple[BitVector, int]:
        return BitVector(n, x.value >> m), x.value & mask

    def join(u: BitVector, pi: int) -> BitVector:
        return BitVector(k, (u.value << m) | (pi & mask))

    def C(x: BitVector) -> int:
        u, pi = split(x)
        if src.C(u) != 1:
            return 0
        p = src.V(u)
        if pi == p:
            return 1
        u2 = src.S(u)
        return int(src.C(u2) == 1 and p < pi < src.V(u2))

    def S(x: BitVector) -> BitVector:
        if not C(x):
            return x
        u, pi = split(x)
        u2 = src.S(u)
        p2 = src.V(u2)
        if src.C(u2) != 1 or p2 <= src.V(u):
            return join(u2, p2)
        if pi + 1 < p2:
            return join(u, pi + 1)
        return join(u2, p2)

    def V(x: BitVector) -> int:
        return (x.value & mask) + 1

    return UfeoplInstance(k, m + 1, C, S, V, metered=True, promise_unique=src.promise_unique)


def pullback_ufeoml_solution(src: UfeoplInstance, sol: Solution) -> Solution:
    image = ufeopl_to_ufeoml(src)
    if not check_solution(image, sol):
        raise PullbackError(f"{sol.kind} at {sol.x} does not verify in the image")
    u = BitVector(src.n, sol.x.value >> src.m)
    found = verify_ufeopl(src, u)
    if found is None:
        raise PullbackError(f"{u} is not a solution of the source")
    return found


def ufeoml_to_svl(src: UfeoplInstance, p_cap: int) -> SvlInstance:
    """Pad the line end with (end, 1), (end, 2), ... so the sink sits at index p_cap.

    Vertices are (v, i) with i stored in the low bits; i = 0 encodes "no index".
    W((v, -), k) holds iff V(v) = k, and W((v, i), k) iff k = V(v) + i <= p_cap,
    so with V(start) = 1 the start is index 1 and the sink is (end, p_cap - V(end)).
    """
    if not src.metered:
        raise ValueError("expects a unit-step instance with start potential 1")
    n = src.n
    w = p_cap.bit_length()
    k = n + w
    mask = (1 << w) - 1

    def split(x: BitVector) -> tuple[BitVector, int]:
        return BitVector(n, x.value >> w), x.value & mask

    def join(v: BitVector, i: int) -> BitVector:
        return BitVector(k, (v.value << w) | i)

    def at_end(v: BitVector) -> bool:
        sv = src.S(v)
        return sv == v or src.C(sv) != 1 or src.V(sv) != src.V(v) + 1

    def S(x: BitVector) -> BitVector:
        v, i = split(x)
        if src.C(v) != 1:
            return x
        if not at_end(v):
            return join(src.S(v), 0) if i == 0 else x
        if src.V(v) + i < p_cap:
            return join(v, i + 1)
        return x

    def W(x: BitVector, t: int) -> int:
        v, i = split(x)
        if src.C(v) != 1:
            return 0
        if i == 0:
            return int(src.V(v) == t)
        if at_end(v):
            return int(t == src.V(v) + i and src.V(v) + i <= p_cap)
        return 0

    return SvlInstance(k, BitVector.zeros(k), p_cap, S, W)


__all__ = [
    "PullbackError",
    "TriviallySolved",
    "eoml_to_eopl",
    "pullback_eoml_solution",
    "eopl_to_eoml",
    "pullback_eopl_solution",
    "ufeopl_to_ufeoml",
    "pullback_ufeoml_solution",
    "ufeoml_to_svl",
    "solution_kinds",
]
