import random
from fractions import Fraction

import pytest

from pline.lcp import LcpInstance
from pline.lineproblems import make_explicit_instance
from pline.linfixp import AffineMap

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (ok, detail)
    print(f"acceptance {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


# --- generators shared across test modules ------------------------------------


def p_matrix_lcp(rng: random.Random, d: int, lim: int = 15) -> LcpInstance:
    """Strictly diagonally dominant with positive diagonal; entries fit in 8 bits."""
    M = [[rng.randint(-lim, lim) if i != j else 0 for j in range(d)] for i in range(d)]
    for i in range(d):
        M[i][i] = sum(abs(v) for v in M[i]) + rng.randint(1, lim)
    q = [rng.randint(-127, 127) for _ in range(d)]
    return LcpInstance(M, q)


def random_lines(rng, n, start_potential, potential):
    """Random S/P/V tables: a few lines plus a little noise."""
    size = 1 << n
    S, P, V = list(range(size)), list(range(size)), [0] * size
    verts = list(range(1, size))
    rng.shuffle(verts)
    lines = [[0]]
    for v in verts:
        r = rng.random()
        if r < 0.2:
            continue
        if r < 0.35:
            lines.append([v])
        else:
            lines[-1].append(v)
    for line in lines:
        for a, b in zip(line, line[1:]):
            S[a], P[b] = b, a
        for i, v in enumerate(line):
            V[v] = potential(line, i)
    for _ in range(rng.randrange(3)):
        S[rng.randrange(1, size)] = rng.randrange(size)
    if S[0] == 0:
        S[0] = 1
    P[0], V[0] = 0, start_potential
    return S, P, V


def random_eoml(rng: random.Random, n: int, structured: bool):
    size = 1 << n
    if structured:
        def pot(line, i):
            base = 1 if line[0] == 0 else rng.randrange(4)
            return min(base + i if rng.random() < 0.9 else rng.randrange(size + 1), size)
        S, P, V = random_lines(rng, n, 1, pot)
    else:
        S = [rng.randrange(size) for _ in range(size)]
        P = [rng.randrange(size) for _ in range(size)]
        V = [rng.randrange(size + 1) for _ in range(size)]
        if S[0] == 0:
            S[0] = rng.randrange(1, size)
        P[0], V[0] = 0, 1
    return make_explicit_instance(S, P, V, "EOML")


def random_eopl(rng: random.Random, n: int, m: int, structured: bool):
    size = 1 << n
    if structured:
        S, P, V = random_lines(rng, n, 0, lambda line, i: rng.randrange(1 << m))
    else:
        S = [rng.randrange(size) for _ in range(size)]
        P = [rng.randrange(size) for _ in range(size)]
        V = [rng.randrange(1 << m) for _ in range(size)]
        if S[0] == 0:
            S[0] = rng.randrange(1, size)
        P[0] = 0
    V[0] = 0
    return make_explicit_instance(S, P, V, "EOPL", m=m)


def small_contraction(rng: random.Random, d: int, fixpoint=None, den: int = 16) -> AffineMap:
    """|a_ij| <= 1/(2d): a 1/2-contraction in every p-norm.

    With ``fixpoint`` given, b is chosen so that it is the fixpoint.
    """
    A = [[Fraction(rng.randint(-4, 4), 8 * d) for _ in range(d)] for _ in range(d)]
    if fixpoint is None:
        b = [Fraction(rng.randint(0, den), den) for _ in range(d)]
        return AffineMap(A, b)
    x = [Fraction(v) for v in fixpoint]
    b = [x[i] - sum(A[i][j] * x[j] for j in range(d)) for i in range(d)]
    return AffineMap(A, b)


@pytest.fixture
def rng():
    return random.Random(12345)
