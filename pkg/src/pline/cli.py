"""Command-line frontend.

Exit codes: 0 solved, 10 non-P certificate, 11 secondary ray, 12 step
budget exhausted, 2 bad input.  Every printed certificate is re-verified
in-process first.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import contraction as ct
from .lcp import (
    LcpInstance,
    lcp_from_json,
    lcp_to_json,
    lemke_solve,
    minor_certificate_ok,
    result_to_json,
    verify_lcp_solution,
)
from .lineproblems import (
    TABLE_MAX_WIDTH,
    BudgetExhausted,
    EoplInstance,
    UfeoplInstance,
    aldous_samples_default,
    aldous_solve,
    all_solutions,
    check_solution,
    follow_line,
    gen_line,
    instance_from_json,
    instance_to_json,
    materialize,
    solution_to_json,
)
from .linfixp import INF, AffineMap, lp_norm, parse_circuit
from .numeric import rat_str, to_rational
from .plcp_eopl import TrivialLcp, build_plcp_eopl, pullback_plcp_solution
from .reductions import (
    TriviallySolved,
    eoml_to_eopl,
    eopl_to_eoml,
    pullback_eoml_solution,
    pullback_eopl_solution,
)

EXIT_OK, EXIT_INPUT, EXIT_Q2, EXIT_RAY, EXIT_BUDGET = 0, 2, 10, 11, 12
RECHECK_MAX_WIDTH = 12


class InputError(Exception):
    pass


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: malformed JSON ({e.msg} at line {e.lineno})") from e


def _emit(doc: dict, as_json: bool, out: Optional[str] = None) -> None:
    text = json.dumps(doc, sort_keys=True) if as_json or out else _human(doc)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _human(doc: dict) -> str:
    lines = []
    for key in sorted(doc):
        val = doc[key]
        if isinstance(val, list):
            val = " ".join(str(v) for v in val)
        lines.append(f"{key}: {val}")
    return "\n".join(lines)


# --- lemke ------------------------------------------------------------------------


def cmd_lemke(args) -> int:
    inst = lcp_from_json(_load_json(args.file))
    res = lemke_solve(inst)
    # re-verify before printing
    if res.kind == "Q1" and not verify_lcp_solution(inst, res.y):
        raise AssertionError("Lemke returned an unverified solution")
    if res.kind == "Q2" and not minor_certificate_ok(inst, res):
        raise AssertionError("Lemke returned a bad minor certificate")
    doc = result_to_json(res)
    if args.check:
        doc["checked"] = True
    _emit(doc, args.json)
    return {"Q1": EXIT_OK, "Q2": EXIT_Q2}.get(res.kind, EXIT_RAY)


# --- reduce ------------------------------------------------------------------------


def _dcm_from_json(doc: dict):
    A = [[to_rational(v) for v in r] for r in doc["A"]]
    b = [to_rational(v) for v in doc["b"]]
    f = AffineMap(A, b)
    grid = ct.GridSpec.explicit([int(v) for v in doc["k"]])
    if grid.d != f.d:
        raise InputError("grid dimension does not match the map")
    return f, grid


def _recheck_pullbacks(img, pullback) -> None:
    if img.n > RECHECK_MAX_WIDTH:
        return
    for sol in all_solutions(img):
        pullback(sol)


def cmd_reduce(args) -> int:
    doc = _load_json(args.input)
    kind = args.kind
    if kind == "eoml-eopl":
        src = instance_from_json(doc)
        if src.kind != "EOML":
            raise InputError("expected an EOML instance")
        img = eoml_to_eopl(src)
        _check_width(img.n)
        img = materialize(img)
        _recheck_pullbacks(img, lambda s: pullback_eoml_solution(src, s))
        out = instance_to_json(img)
    elif kind == "eopl-eoml":
        src = instance_from_json(doc)
        if src.kind != "EOPL":
            raise InputError("expected an EOPL instance")
        img = eopl_to_eoml(src)
        if isinstance(img, TriviallySolved):
            out = {"kind": "solved", "solution": solution_to_json(img.solution)}
        else:
            _check_width(img.n)
            img = materialize(img)
            _recheck_pullbacks(img, lambda s: pullback_eopl_solution(src, s))
            out = instance_to_json(img)
    elif kind == "plcp-eopl":
        lcp = lcp_from_json(doc)
        built = build_plcp_eopl(lcp, perturb=True)
        if isinstance(built, TrivialLcp):
            out = {"kind": "solved", "lcp": result_to_json(built.result)}
        else:
            _check_width(built.n)
            img = materialize(built.eopl)
            sol = follow_line(img)
            res = pullback_plcp_solution(built, sol)
            if res.kind == "Q1" and not verify_lcp_solution(lcp, res.y):
                raise AssertionError("line end does not solve the LCP")
            out = instance_to_json(img)
    elif kind == "dcm-ufeopl":
        f, grid = _dcm_from_json(doc)
        dg = ct.direction_grid_from_map(f, grid)
        line = ct.DcmLine(dg)
        _check_width(line.width)
        img = materialize(line.to_instance())
        out = instance_to_json(img)
    else:  # argparse restricts choices
        raise InputError(f"unknown reduction {kind}")
    _emit(out, True, args.output)
    return EXIT_OK


def _check_width(n: int) -> None:
    if n > TABLE_MAX_WIDTH:
        raise InputError(f"image width {n} exceeds the table limit {TABLE_MAX_WIDTH}")


# --- solve ---------------------------------------------------------------------------


def cmd_solve(args) -> int:
    inst = instance_from_json(_load_json(args.file))
    if args.method == "aldous":
        if isinstance(inst, UfeoplInstance):
            raise InputError("aldous needs a predecessor circuit (EOPL or EOML)")
        samples = args.samples if args.samples is not None else aldous_samples_default(inst.n)
        sol = aldous_solve(inst, samples, args.seed)
    else:
        sol = follow_line(inst)
    if not check_solution(inst, sol):
        raise AssertionError("solver returned an unverified solution")
    doc = solution_to_json(sol)
    doc["steps"] = sol.steps
    _emit(doc, args.json)
    return EXIT_OK


# --- gen -------------------------------------------------------------------------------


def gen_plcp(d: int, seed: int, bits: int = 4) -> LcpInstance:
    """Strictly row-diagonally-dominant M with positive diagonal, hence a P-matrix."""
    if d < 1 or bits < 2:
        raise ValueError("need d >= 1 and bits >= 2")
    rng = random.Random(seed)
    lim = 2 ** (bits - 1) - 1
    M = [[rng.randint(-lim, lim) if i != j else 0 for j in range(d)] for i in range(d)]
    for i in range(d):
        M[i][i] = sum(abs(v) for v in M[i]) + rng.randint(1, lim)
    q = [rng.randint(-lim, lim) for _ in range(d)]
    return LcpInstance(M, q)


def dcm_to_json(f: AffineMap, grid: ct.GridSpec) -> dict:
    return {"kind": "DCM", "A": [[rat_str(v) for v in r] for r in f.A],
            "b": [rat_str(v) for v in f.b], "k": list(grid.k)}


def cmd_gen(args) -> int:
    if args.kind == "plcp":
        doc = lcp_to_json(gen_plcp(_need(args.d, "--d"), args.seed, args.bits))
    elif args.kind == "line":
        n = _need(args.n, "--n")
        length = args.length if args.length is not None else 2 ** (n // 2)
        doc = instance_to_json(gen_line(n, length, args.seed))
    else:
        f, grid = ct.gen_dcm_map(_need(args.d, "--d"), args.seed, args.base)
        doc = dcm_to_json(f, grid)
    _emit(doc, True, args.output)
    return EXIT_OK


def _need(v, flag: str):
    if v is None:
        raise InputError(f"{flag} is required here")
    return v


# --- contraction ----------------------------------------------------------------------


def _load_map(path: str):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        return parse_circuit(text)
    return AffineMap([[to_rational(v) for v in r] for r in doc["A"]], [to_rational(v) for v in doc["b"]])


def _parse_p(s: str):
    if s.lower() in ("inf", "infinity"):
        return INF
    p = int(s)
    if p < 1:
        raise argparse.ArgumentTypeError("p must be a positive integer or inf")
    return p


def cmd_contraction(args) -> int:
    f = _load_map(args.file)
    d = f.d
    if args.mode == "exact":
        grid = None
        if args.grid_override:
            grid = ct.GridSpec.explicit([int(v) for v in args.grid_override.split(",")])
        res = ct.find_fp_exact(f, grid)
        p = args.p or 1
        if tuple(f(res.point)) != tuple(res.point):
            raise AssertionError("exact search returned a non-fixpoint")
    else:
        if args.eps is None:
            raise InputError("approx needs --eps")
        p = args.p if args.p is not None else 2
        if p == INF:
            raise ct.CapabilityError("the approximate search does not cover the max norm")
        eps = to_rational(args.eps)
        res = ct.find_fp_approx(f, p, eps, d)
        sched = ct.epsilon_schedule(p, eps, d).values
        fv = f(res.point)
        if any(abs(a - b) > e for a, b, e in zip(fv, res.point, sched)):
            raise AssertionError("approximate search broke its per-coordinate bound")
    resid = lp_norm([a - b for a, b in zip(f(res.point), res.point)], p)
    doc = {"x": [rat_str(v) for v in res.point], "residual_power": rat_str(resid),
           "p": "inf" if p == INF else p, "queries": res.queries}
    _emit(doc, args.json)
    return EXIT_OK


# --- entry point --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pline", description="line-following search problems and solvers")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        p = sub.add_parser(name, **kw)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.set_defaults(fn=fn)
        return p

    p = add("lemke", cmd_lemke, help="solve an LCP with Lemke's algorithm")
    p.add_argument("file")
    p.add_argument("--check", action="store_true", help="re-verify the certificate (always done)")

    p = add("reduce", cmd_reduce, help="tabulate a reduction (image width <= 20)")
    p.add_argument("kind", choices=["eoml-eopl", "eopl-eoml", "plcp-eopl", "dcm-ufeopl"])
    p.add_argument("input")
    p.add_argument("output", nargs="?")

    p = add("solve", cmd_solve, help="solve a tabulated line instance")
    p.add_argument("file")
    p.add_argument("--method", choices=["follow", "aldous"], default="follow")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int)

    p = add("gen", cmd_gen, help="deterministic instance generators")
    p.add_argument("kind", choices=["plcp", "line", "dcm"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d", type=int)
    p.add_argument("--bits", type=int, default=4)
    p.add_argument("--n", type=int)
    p.add_argument("--length", type=int)
    p.add_argument("--base", type=int, default=8, help="grid size of the last coordinate (dcm)")
    p.add_argument("--output", "-o")

    p = add("contraction", cmd_contraction, help="fixpoints of contraction maps")
    p.add_argument("mode", choices=["exact", "approx"])
    p.add_argument("file", help="circuit DSL file, or JSON {A, b}")
    p.add_argument("--eps")
    p.add_argument("--p", type=_parse_p)
    p.add_argument("--grid-override", help="comma-separated grid sizes")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except BudgetExhausted as e:
        print(f"pline: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (InputError, ValueError, KeyError, TypeError) as e:
        print(f"pline: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
