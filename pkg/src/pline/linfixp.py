"""Piecewise-linear arithmetic circuits (max, min, +, -, scaling by a constant).

Text format, one statement per line, ``#`` starts a comment::

    d 1
    c 1/2
    p 2
    g1 = in 1
    g2 = mulc 1/2 g1
    out g2

``in`` takes a 1-based input coordinate.  Gates may only reference gates
defined above them.  Evaluated outputs are clamped to [0, 1].
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .numeric import Vector, bit_length, rat_str, to_rational, vector

NormIndex = Union[int, float]  # positive int, or math.inf
INF = math.inf

BINARY = {"add", "sub", "max", "min"}
OPS = {"in", "const", "mulc"} | BINARY


class CircuitParseError(ValueError):
    def __init__(self, line: int, col: int, msg: str):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line = line
        self.col = col


class CircuitValidationError(ValueError):
    def __init__(self, gate: str, msg: str):
        super().__init__(f"gate {gate}: {msg}")
        self.gate = gate


@dataclass(frozen=True)
class Gate:
    name: str
    op: str
    args: tuple  # gate names, an input index, and/or a Fraction constant


@dataclass(frozen=True)
class LinFixpCircuit:
    d: int
    gates: tuple[Gate, ...]
    outputs: tuple[str, ...]
    c: Fraction
    p: NormIndex

    def __post_init__(self):
        validate(self)

    def __call__(self, x: Sequence[Fraction]) -> Vector:
        return evaluate(self, x)


def validate(circ: LinFixpCircuit) -> None:
    if circ.d < 1:
        raise CircuitValidationError("-", "dimension must be positive")
    if not (0 < circ.c < 1):
        raise CircuitValidationError("-", f"contraction factor {circ.c} outside (0,1)")
    if not (circ.p == INF or (isinstance(circ.p, int) and circ.p >= 1)):
        raise CircuitValidationError("-", f"bad norm index {circ.p!r}")
    seen: set[str] = set()
    for g in circ.gates:
        if g.name in seen:
            raise CircuitValidationError(g.name, "defined twice")
        if g.op not in OPS:
            raise CircuitValidationError(g.name, f"unknown operation {g.op!r}")
        refs: tuple = ()
        if g.op == "in":
            if len(g.args) != 1 or not 1 <= g.args[0] <= circ.d:
                raise CircuitValidationError(g.name, "input index out of range")
        elif g.op == "const":
            if len(g.args) != 1 or not isinstance(g.args[0], Fraction):
                raise CircuitValidationError(g.name, "const takes one rational")
        elif g.op == "mulc":
            if len(g.args) != 2 or not isinstance(g.args[0], Fraction):
                raise CircuitValidationError(g.name, "mulc takes a rational and a gate")
            refs = g.args[1:]
        else:
            if len(g.args) != 2:
                raise CircuitValidationError(g.name, f"{g.op} takes two gates")
            refs = g.args
        for r in refs:
            if r not in seen:
                raise CircuitValidationError(g.name, f"reference to undefined gate {r}")
        seen.add(g.name)
    if len(circ.outputs) != circ.d:
        raise CircuitValidationError("out", f"expected {circ.d} outputs, got {len(circ.outputs)}")
    for o in circ.outputs:
        if o not in seen:
            raise CircuitValidationError(o, "output refers to undefined gate")


_GATE_RE = re.compile(r"g\d+$")


def _parse_rational(tok: str, line: int, col: int) -> Fraction:
    try:
        return to_rational(tok)
    except ValueError:
        raise CircuitParseError(line, col, f"bad rational {tok!r}") from None


def parse_circuit(text: str) -> LinFixpCircuit:
    header: dict[str, object] = {}
    gates: list[Gate] = []
    defined: set[str] = set()
    outputs: Optional[tuple[str, ...]] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        toks = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", body)]
        if not toks:
            continue
        head, hcol = toks[0]

        def need(k: int):
            if len(toks) != k:
                col = toks[min(k, len(toks)) - 1][1]
                raise CircuitParseError(lineno, col, f"expected {k} tokens, got {len(toks)}")

        def ref(tok: str, col: int) -> str:
            if not _GATE_RE.match(tok):
                raise CircuitParseError(lineno, col, f"expected a gate name, got {tok!r}")
            if tok not in defined:
                raise CircuitParseError(lineno, col, f"undefined gate {tok}")
            return tok

        if head in ("d", "c", "p"):
            need(2)
            if head in header:
                raise CircuitParseError(lineno, hcol, f"duplicate header {head}")
            val, vcol = toks[1]
            if head == "d":
                if not val.isdigit():
                    raise CircuitParseError(lineno, vcol, "dimension must be an integer")
                header["d"] = int(val)
            elif head == "c":
                header["c"] = _parse_rational(val, lineno, vcol)
            else:
                if val in ("inf", "oo", "∞"):
                    header["p"] = INF
                elif val.isdigit() and int(val) >= 1:
                    header["p"] = int(val)
                else:
                    raise CircuitParseError(lineno, vcol, f"bad norm index {val!r}")
        elif head == "out":
            if outputs is not None:
                raise CircuitParseError(lineno, hcol, "second out line")
            outputs = tuple(ref(t, c) for t, c in toks[1:])
        elif _GATE_RE.match(head):
            if len(toks) < 3 or toks[1][0] != "=":
                raise CircuitParseError(lineno, hcol, "expected 'g<k> = <op> ...'")
            if head in defined:
                raise CircuitParseError(lineno, hcol, f"gate {head} defined twice")
            op, ocol = toks[2]
            if op == "in":
                need(4)
                t, c = toks[3]
                if not t.isdigit():
                    raise CircuitParseError(lineno, c, "input index must be an integer")
                args: tuple = (int(t),)
            elif op == "const":
                need(4)
                args = (_parse_rational(toks[3][0], lineno, toks[3][1]),)
            elif op == "mulc":
                need(5)
                args = (_parse_rational(toks[3][0], lineno, toks[3][1]), ref(*toks[4]))
            elif op in BINARY:
                need(5)
                args = (ref(*toks[3]), ref(*toks[4]))
            else:
                raise CircuitParseError(lineno, ocol, f"unknown operation {op!r}")
            gates.append(Gate(head, op, args))
            defined.add(head)
        else:
            raise CircuitParseError(lineno, hcol, f"unexpected token {head!r}")
    for key in ("d", "c", "p"):
        if key not in header:
            raise CircuitParseError(0, 0, f"missing header line '{key}'")
    if outputs is None:
        raise CircuitParseError(0, 0, "missing out line")
    return LinFixpCircuit(header["d"], tuple(gates), outputs, header["c"], header["p"])


def unparse(circ: LinFixpCircuit) -> str:
    p = "inf" if circ.p == INF else str(circ.p)
    lines = [f"d {circ.d}", f"c {rat_str(circ.c)}", f"p {p}"]
    for g in circ.gates:
        if g.op == "in":
            rhs = f"in {g.args[0]}"
        elif g.op == "const":
            rhs = f"const {rat_str(g.args[0])}"
        elif g.op == "mulc":
            rhs = f"mulc {rat_str(g.args[0])} {g.args[1]}"
        else:
            rhs = f"{g.op} {g.args[0]} {g.args[1]}"
        lines.append(f"{g.name} = {rhs}")
    lines.append("out " + " ".join(circ.outputs))
    return "\n".join(lines) + "\n"


_ZERO, _ONE = Fraction(0), Fraction(1)


def _clamp(x: Fraction) -> Fraction:
    if x < 0:
        return Fraction(0)
    if x > 1:
        return Fraction(1)
    return x


def evaluate(circ: LinFixpCircuit, x: Sequence) -> Vector:
    if len(x) != circ.d:
        raise ValueError(f"expected a {circ.d}-vector, got length {len(x)}")
    x = vector(x)
    val: dict[str, Fraction] = {}
    for g in circ.gates:
        op, a = g.op, g.args
        if op == "in":
            v = x[a[0] - 1]
        elif op == "const":
            v = a[0]
        elif op == "mulc":
            v = a[0] * val[a[1]]
        elif op == "add":
            v = val[a[0]] + val[a[1]]
        elif op == "sub":
            v = val[a[0]] - val[a[1]]
        elif op == "max":
            v = max(val[a[0]], val[a[1]])
        else:
            v = min(val[a[0]], val[a[1]])
        val[g.name] = v
    return tuple(_clamp(val[o]) for o in circ.outputs)


@dataclass(frozen=True)
class CircuitSize:
    num_inputs: int
    num_gates: int
    constant_bits: int


def circuit_size(circ: LinFixpCircuit) -> CircuitSize:
    bits = 0
    for g in circ.gates:
        if g.op in ("const", "mulc"):
            bits += bit_length(g.args[0])
    return CircuitSize(circ.d, len(circ.gates), bits)


def count_maxmin(circ: LinFixpCircuit) -> int:
    return sum(1 for g in circ.gates if g.op in ("max", "min"))


def lp_norm(v: Sequence, p: NormIndex) -> Fraction:
    """Exact norm for p = 1 and p = inf; the p-th power sum for other p."""
    v = vector(v)
    if p == INF:
        return max((abs(a) for a in v), default=Fraction(0))
    if p == 1:
        return sum((abs(a) for a in v), Fraction(0))
    return sum((abs(a) ** p for a in v), Fraction(0))


def norm_below(v: Sequence, p: NormIndex, bound) -> bool:
    """Decide ||v||_p < bound exactly."""
    bound = to_rational(bound)
    if p in (1, INF):
        return lp_norm(v, p) < bound
    return lp_norm(v, p) < bound**p


def norm_ratio_exceeds(num: Sequence, den: Sequence, p: NormIndex, c) -> bool:
    """Decide ||num||_p > c * ||den||_p exactly."""
    c = to_rational(c)
    a, b = lp_norm(num, p), lp_norm(den, p)
    if p in (1, INF):
        return a > c * b
    return a > c**p * b


# --- maps -----------------------------------------------------------------


class AffineMap:
    """x -> clamp(A x + b); the workhorse test map.  Evaluation uses integers."""

    def __init__(self, a: Sequence[Sequence], b: Sequence, clamp: bool = True):
        self.A = tuple(vector(r) for r in a)
        self.b = vector(b)
        self.d = len(self.b)
        if len(self.A) != self.d or any(len(r) != self.d for r in self.A):
            raise ValueError("A must be d x d with d = len(b)")
        self.clamp = clamp
        den = math.lcm(*(x.denominator for r in self.A for x in r), *(x.denominator for x in self.b))
        self._den = den
        self._ai = [[int(x * den) for x in r] for r in self.A]
        self._bi = [int(x * den) for x in self.b]

    def __call__(self, x: Sequence) -> Vector:
        if len(x) != self.d:
            raise ValueError(f"expected a {self.d}-vector")
        xs = [to_rational(t) for t in x]
        common = math.lcm(*(t.denominator for t in xs))
        nums = [t.numerator * (common // t.denominator) for t in xs]
        scale = self._den * common
        out = []
        for row, bi in zip(self._ai, self._bi):
            acc = bi * common
            for a, n in zip(row, nums):
                if a:
                    acc += a * n
            # clamp on integers before building the fraction
            if self.clamp and acc <= 0:
                out.append(_ZERO)
            elif self.clamp and acc >= scale:
                out.append(_ONE)
            else:
                out.append(Fraction(acc, scale))
        return tuple(out)

    def fixpoint(self) -> Vector:
        """Exact solution of (I - A) x = b (ignores clamping)."""
        from .numeric import solve_linear

        d = self.d
        m = tuple(tuple(Fraction(int(i == j)) - self.A[i][j] for j in range(d)) for i in range(d))
        return solve_linear(m, self.b)


def affine_circuit(a, b, c, p: NormIndex = 1, clamp: bool = True) -> LinFixpCircuit:
    """Circuit for clamp(A x + b), spelled out with mulc/add gates."""
    A = [vector(r) for r in a]
    bv = vector(b)
    d = len(bv)
    gates: list[Gate] = []
    k = 0

    def new(op, *args) -> str:
        nonlocal k
        k += 1
        name = f"g{k}"
        gates.append(Gate(name, op, tuple(args)))
        return name

    inputs = [new("in", i + 1) for i in range(d)]
    zero = one = None
    if clamp:
        zero = new("const", Fraction(0))
        one = new("const", Fraction(1))
    outs = []
    for i in range(d):
        acc = new("const", bv[i])
        for j in range(d):
            if A[i][j] != 0:
                acc = new("add", acc, new("mulc", A[i][j], inputs[j]))
        if clamp:
            acc = new("max", zero, new("min", one, acc))
        outs.append(acc)
    return LinFixpCircuit(d, tuple(gates), tuple(outs), to_rational(c), p)


class CountingMap:
    """Wraps a map and counts evaluations."""

    def __init__(self, f: Callable[[Sequence], Vector], d: int):
        self.f = f
        self.d = d
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.f(x)


def map_dimension(f) -> int:
    d = getattr(f, "d", None)
    if d is None:
        raise ValueError("map does not declare its dimension")
    return d
