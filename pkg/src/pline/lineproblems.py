"""Implicit line-following search problems, their verifiers and solvers.

Vertices are fixed-width bit strings.  An instance carries successor and
predecessor maps plus an integer potential; the interesting instances are far
too large to tabulate, so every map is just a callable.  Explicit
table-backed instances exist for testing and file exchange.
"""

from __future__ import annotations

import math
import os
import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

MAX_WIDTH = 512
TABLE_MAX_WIDTH = 20


class InstanceInvariantError(ValueError):
    pass


class BudgetExhausted(RuntimeError):
    pass


@dataclass(frozen=True, slots=True)
class BitVector:
    width: int
    value: int

    def __post_init__(self):
        if not 0 <= self.width <= MAX_WIDTH:
            raise ValueError(f"width {self.width} exceeds cap {MAX_WIDTH}")
        if not 0 <= self.value < (1 << self.width) and not (self.width == 0 and self.value == 0):
            raise ValueError(f"value {self.value} does not fit in {self.width} bits")

    @staticmethod
    def zeros(n: int) -> "BitVector":
        return BitVector(n, 0)

    @staticmethod
    def parse(s: str) -> "BitVector":
        s = s.strip()
        if any(ch not in "01" for ch in s):
            raise ValueError(f"not a bit string: {s!r}")
        return BitVector(len(s), int(s, 2) if s else 0)

    def __str__(self) -> str:
        return format(self.value, f"0{self.width}b") if self.width else ""

    def is_zero(self) -> bool:
        return self.value == 0

    def bit(self, i: int) -> int:
        """Bit i counted from the left (big-endian), 0-based."""
        return (self.value >> (self.width - 1 - i)) & 1

    def concat(self, other: "BitVector") -> "BitVector":
        return BitVector(self.width + other.width, (self.value << other.width) | other.value)

    def split(self, k: int) -> tuple["BitVector", "BitVector"]:
        """Split into the leading k bits and the rest."""
        rest = self.width - k
        return BitVector(k, self.value >> rest), BitVector(rest, self.value & ((1 << rest) - 1))


VertexMap = Callable[[BitVector], BitVector]
PotentialMap = Callable[[BitVector], int]


@dataclass
class EoplInstance:
    n: int
    m: int
    S: VertexMap
    P: VertexMap
    V: PotentialMap
    tables: Optional[tuple] = field(default=None, repr=False)
    kind = "EOPL"
    start_potential = 0

    def __post_init__(self):
        z = BitVector.zeros(self.n)
        if self.P(z) != z:
            raise InstanceInvariantError("P(0^n) must equal 0^n")
        if self.S(z) == z:
            raise InstanceInvariantError("S(0^n) must differ from 0^n")
        if self.V(z) != self.start_potential:
            raise InstanceInvariantError(f"V(0^n) must equal {self.start_potential}")

    @property
    def zero(self) -> BitVector:
        return BitVector.zeros(self.n)


@dataclass
class EomlInstance(EoplInstance):
    kind = "EOML"
    start_potential = 1


@dataclass
class UfeoplInstance:
    n: int
    m: int
    C: Callable[[BitVector], int]
    S: VertexMap
    V: PotentialMap
    metered: bool = False  # unit potential steps, start potential 1
    promise_unique: bool = True  # unchecked: every C-vertex lies on the line from 0^n
    tables: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        z = BitVector.zeros(self.n)
        if self.C(z) != 1:
            raise InstanceInvariantError("C(0^n) must equal 1")
        want = 1 if self.metered else 0
        if self.V(z) != want:
            raise InstanceInvariantError(f"V(0^n) must equal {want}")

    @property
    def kind(self) -> str:
        return "UFEOML" if self.metered else "UFEOPL"

    @property
    def zero(self) -> BitVector:
        return BitVector.zeros(self.n)


@dataclass
class SvlInstance:
    n: int
    start: BitVector
    T: int
    S: VertexMap
    W: Callable[[BitVector, int], int]
    kind = "SVL"

    def __post_init__(self):
        if self.T > 2**self.n:
            raise InstanceInvariantError("target exceeds 2^n")
        if self.W(self.start, 1) != 1:
            raise InstanceInvariantError("W(x_s, 1) must equal 1")

    @property
    def zero(self) -> BitVector:
        return self.start


@dataclass(frozen=True)
class Solution:
    kind: str  # R1 R2 T1 T2 T3 U1 U2 SVL-sink
    witness: tuple[BitVector, ...]
    steps: int = field(default=0, compare=False)

    @property
    def x(self) -> BitVector:
        return self.witness[0]


# --- verifiers -----------------------------------------------------------------


def verify_eopl(inst: EoplInstance, x: BitVector) -> Optional[Solution]:
    sx, px = inst.S(x), inst.P(x)
    if (inst.S(px) != x and not x.is_zero()) or inst.P(sx) != x:
        return Solution("R1", (x,))
    if x != sx and inst.V(sx) - inst.V(x) <= 0:
        return Solution("R2", (x,))
    return None


def verify_eoml(inst: EomlInstance, x: BitVector) -> Optional[Solution]:
    sx, px = inst.S(x), inst.P(x)
    if (inst.S(px) != x and not x.is_zero()) or inst.P(sx) != x:
        return Solution("T1", (x,))
    v = inst.V(x)
    if not x.is_zero() and v == 1:
        return Solution("T2", (x,))
    if (v > 0 and inst.V(sx) - v != 1) or (v > 1 and v - inst.V(px) != 1):
        return Solution("T3", (x,))
    return None


def verify_ufeopl(inst: UfeoplInstance, x: BitVector) -> Optional[Solution]:
    if inst.C(x) != 1:
        return None
    sx = inst.S(x)
    if inst.C(sx) == 0:
        return Solution("U2", (x,))
    if inst.V(sx) - inst.V(x) <= 0:
        return Solution("U1", (x,))
    return None


def verify_svl(inst: SvlInstance, x: BitVector) -> Optional[Solution]:
    return Solution("SVL-sink", (x,)) if inst.W(x, inst.T) == 1 else None


def verify(inst, x: BitVector) -> Optional[Solution]:
    if isinstance(inst, EomlInstance):
        return verify_eoml(inst, x)
    if isinstance(inst, EoplInstance):
        return verify_eopl(inst, x)
    if isinstance(inst, UfeoplInstance):
        return verify_ufeopl(inst, x)
    if isinstance(inst, SvlInstance):
        return verify_svl(inst, x)
    raise TypeError(f"unknown instance type {type(inst).__name__}")


def check_solution(inst, sol: Solution) -> bool:
    """True iff ``x`` satisfies the clause named by ``sol.kind``."""
    return sol.kind in _all_kinds(inst, sol.x)


def _all_kinds(inst, x: BitVector) -> set[str]:
    kinds = set()
    if isinstance(inst, EomlInstance):
        sx, px, v = inst.S(x), inst.P(x), inst.V(x)
        if (inst.S(px) != x and not x.is_zero()) or inst.P(sx) != x:
            kinds.add("T1")
        if not x.is_zero() and v == 1:
            kinds.add("T2")
        if (v > 0 and inst.V(sx) - v != 1) or (v > 1 and v - inst.V(px) != 1):
            kinds.add("T3")
    elif isinstance(inst, EoplInstance):
        sx, px = inst.S(x), inst.P(x)
        if (inst.S(px) != x and not x.is_zero()) or inst.P(sx) != x:
            kinds.add("R1")
        if x != sx and inst.P(sx) == x and inst.V(sx) - inst.V(x) <= 0:
            kinds.add("R2")
    elif isinstance(inst, UfeoplInstance):
        if inst.C(x) == 1:
            sx = inst.S(x)
            if inst.C(sx) == 0:
                kinds.add("U2")
            if inst.V(sx) - inst.V(x) <= 0:
                kinds.add("U1")
    elif isinstance(inst, SvlInstance):
        if inst.W(x, inst.T) == 1:
            kinds.add("SVL-sink")
    return kinds


def solution_kinds(inst, x: BitVector) -> set[str]:
    """Every solution clause that ``x`` satisfies."""
    return _all_kinds(inst, x)


# --- solvers -------------------------------------------------------------------


def default_budget(n: int) -> int:
    env = os.environ.get("PLINE_STEP_BUDGET")
    if env:
        return int(env)
    return 2**n


def follow_line(inst, start: Optional[BitVector] = None, step_budget: Optional[int] = None) -> Solution:
    """Walk successors from ``start`` (default 0^n) until a solution appears."""
    x = inst.zero if start is None else start
    budget = default_budget(inst.n) if step_budget is None else step_budget
    steps = 0
    while True:
        sol = verify(inst, x)
        if sol is not None:
            return Solution(sol.kind, sol.witness, steps)
        if steps >= budget:
            raise BudgetExhausted(f"no solution within {budget} steps")
        x = inst.S(x)
        steps += 1


def aldous_samples_default(n: int) -> int:
    return math.isqrt(2**n - 1) + 1 if n % 2 else 2 ** (n // 2)


def aldous_solve(inst: EoplInstance, samples: int, rng_seed: int,
                 step_budget: Optional[int] = None) -> Solution:
    """Sample vertices, keep the best non-self-loop by potential, walk from it."""
    if samples < 0:
        raise ValueError("samples must be nonnegative")
    rng = random.Random(rng_seed)
    cands = [inst.zero] + [BitVector(inst.n, rng.getrandbits(inst.n)) for _ in range(samples)]
    best, best_v = inst.zero, inst.V(inst.zero)
    for x in cands[1:]:
        if inst.S(x) == x and inst.P(x) == x:
            continue
        v = inst.V(x)
        if v > best_v:
            best, best_v = x, v
    return follow_line(inst, best, step_budget)


# --- explicit instances --------------------------------------------------------


def _width_of(size: int) -> int:
    n = size.bit_length() - 1
    if size < 1 or 1 << n != size:
        raise ValueError(f"table length {size} is not a power of two")
    if n > TABLE_MAX_WIDTH:
        raise ValueError(f"explicit tables limited to n <= {TABLE_MAX_WIDTH}")
    return n


def make_explicit_instance(S: Sequence[int], P: Sequence[int], V: Sequence[int],
                           kind: str = "EOPL", m: Optional[int] = None) -> EoplInstance:
    if not (len(S) == len(P) == len(V)):
        raise ValueError("tables must have equal length")
    n = _width_of(len(S))
    size = 1 << n
    S, P, V = list(S), list(P), list(V)
    for name, t in (("S", S), ("P", P)):
        if any(not 0 <= y < size for y in t):
            raise ValueError(f"{name} table entry out of range")
    if any(v < 0 for v in V):
        raise ValueError("potentials must be nonnegative")
    S_fn = lambda x: BitVector(n, S[x.value])  # noqa: E731
    P_fn = lambda x: BitVector(n, P[x.value])  # noqa: E731
    V_fn = lambda x: V[x.value]  # noqa: E731
    tables = (S, P, V)
    if kind == "EOPL":
        if m is None:
            m = max(1, max(V).bit_length())
        if max(V) >= 2**m:
            raise ValueError(f"potential exceeds 2^{m} - 1")
        return EoplInstance(n, m, S_fn, P_fn, V_fn, tables=tables)
    if kind == "EOML":
        if max(V) > 2**n:
            raise ValueError("metered potential exceeds 2^n")
        return EomlInstance(n, n + 1, S_fn, P_fn, V_fn, tables=tables)
    raise ValueError(f"unknown kind {kind!r}")


def make_explicit_ufeopl(C: Sequence[int], S: Sequence[int], V: Sequence[int],
                         metered: bool = False, m: Optional[int] = None) -> UfeoplInstance:
    n = _width_of(len(S))
    C, S, V = list(C), list(S), list(V)
    if m is None:
        m = max(1, max(V).bit_length())
    return UfeoplInstance(n, m, lambda x: C[x.value], lambda x: BitVector(n, S[x.value]),
                          lambda x: V[x.value], metered=metered, tables=(C, S, V))


def materialize(inst, max_width: int = TABLE_MAX_WIDTH):
    """Tabulate a callable-backed instance (n <= 20)."""
    n = inst.n
    if n > max_width:
        raise ValueError(f"width {n} too large to tabulate (limit {max_width})")
    verts = [BitVector(n, i) for i in range(1 << n)]
    if isinstance(inst, UfeoplInstance):
        C = [inst.C(x) for x in verts]
        S = [inst.S(x).value for x in verts]
        V = [inst.V(x) for x in verts]
        return make_explicit_ufeopl(C, S, V, metered=inst.metered, m=inst.m)
    S = [inst.S(x).value for x in verts]
    P = [inst.P(x).value for x in verts]
    V = [inst.V(x) for x in verts]
    return make_explicit_instance(S, P, V, inst.kind, m=inst.m if inst.kind == "EOPL" else None)


def gen_line(n: int, length: int, rng_seed: int) -> EoplInstance:
    """One line of ``length`` random vertices from 0^n; everything else self-loops."""
    if length < 2:
        raise ValueError("a line needs at least 2 vertices (S(0^n) != 0^n)")
    if length > 2**n:
        raise ValueError(f"length {length} exceeds 2^{n}")
    rng = random.Random(rng_seed)
    size = 1 << n
    line = [0] + rng.sample(range(1, size), length - 1)
    S = list(range(size))
    P = list(range(size))
    V = [0] * size
    pot = 0
    for i, x in enumerate(line):
        if i > 0:
            P[x] = line[i - 1]
            pot += rng.randint(1, 4)
            V[x] = pot
        if i + 1 < length:
            S[x] = line[i + 1]
    return make_explicit_instance(S, P, V, "EOPL")


def all_solutions(inst) -> list[Solution]:
    """Exhaustive scan with the verifier (small n only)."""
    if inst.n > TABLE_MAX_WIDTH:
        raise ValueError("exhaustive scan limited to n <= 20")
    out = []
    for i in range(1 << inst.n):
        sol = verify(inst, BitVector(inst.n, i))
        if sol is not None:
            out.append(sol)
    return out


# --- JSON ----------------------------------------------------------------------


def instance_to_json(inst) -> dict:
    if inst.tables is None:
        raise ValueError("only table-backed instances serialize; materialize first")
    n = inst.n
    bits = lambda t: [format(v, f"0{n}b") for v in t]  # noqa: E731
    if isinstance(inst, UfeoplInstance):
        C, S, V = inst.tables
        return {"kind": inst.kind, "n": n, "m": inst.m, "C": list(C), "S": bits(S), "V": list(V)}
    S, P, V = inst.tables
    return {"kind": inst.kind, "n": n, "m": inst.m, "S": bits(S), "P": bits(P), "V": list(V)}


def instance_from_json(doc: dict):
    kind = doc.get("kind")
    n = int(doc["n"])
    parse = lambda xs: [BitVector.parse(s).value for s in xs]  # noqa: E731
    for key in ("S", "V"):
        if len(doc[key]) != 1 << n:
            raise ValueError(f"table {key} must have 2^{n} entries")
    if kind in ("UFEOPL", "UFEOML"):
        return make_explicit_ufeopl([int(c) for c in doc["C"]], parse(doc["S"]),
                                    [int(v) for v in doc["V"]], metered=kind == "UFEOML",
                                    m=doc.get("m"))
    if kind not in ("EOPL", "EOML"):
        raise ValueError(f"unknown instance kind {kind!r}")
    return make_explicit_instance(parse(doc["S"]), parse(doc["P"]), [int(v) for v in doc["V"]],
                                  kind, m=doc.get("m") if kind == "EOPL" else None)


def solution_to_json(sol: Solution) -> dict:
    return {"kind": sol.kind, "witness": [str(w) for w in sol.witness]}


def solution_from_json(doc: dict) -> Solution:
    return Solution(doc["kind"], tuple(BitVector.parse(s) for s in doc["witness"]))


Instance = Union[EoplInstance, EomlInstance, UfeoplInstance, SvlInstance]
