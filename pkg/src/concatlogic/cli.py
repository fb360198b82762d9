"""Command-line front end: ``concatlogic <command> ...``.

Exit codes: 0 success, 1 a negative verdict (failed check, refused proof,
invalid PCP solution), 2 usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import axiomatics, pcp, wordeq
from .logic import ParseError, classify, free_vars, parse, parse_formula, show, to_json
from .normalform import check_shape, normalize
from .semantics import Structure, Verdict, decide_sigma_0mk, evaluate


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(message)


def _read(arg: str) -> str:
    return sys.stdin.read() if arg == "-" else arg


def _sentence(text: str):
    phi = parse_formula(_read(text))
    if free_vars(phi):
        raise _Usage(f"free variables {sorted(free_vars(phi))}")
    return phi


def _verdict_text(v: Verdict) -> str:
    out = str(v)
    if v.value is True and v.witness:
        out += ", witness " + " ".join(f'{k}="{s}"' for k, s in sorted(v.witness.items()))
    return out


def _verdict_json(v: Verdict) -> dict:
    value = "unknown" if v.value is None else ("true" if v.value else "false")
    return {"value": value, "budget": v.budget, "witness": dict(sorted(v.witness.items()))}


# ------------------------------------------------------------ commands


def cmd_parse(args):
    node = parse(_read(args.expr))
    return 0, to_json(node), json.dumps(to_json(node))


def cmd_classify(args):
    c = classify(parse_formula(_read(args.expr)))
    if c is None:
        return 0, {"sigma": False}, "not-sigma"
    return 0, {"sigma": True, "n": c.n, "m": c.m, "k": c.k}, str(c)


def cmd_eval(args):
    v = evaluate(_sentence(args.expr), args.structure, budget=args.budget,
                 max_steps=args.max_steps, refute=args.refute)
    return 0, _verdict_json(v), _verdict_text(v)


def cmd_normalize(args):
    phi = _sentence(args.expr)
    nf = normalize(phi, args.structure)
    problems = check_shape(nf, args.structure, classify(phi))
    text = show(nf.to_formula())
    out = {"formula": text, "shape": list(nf.shape()), "problems": problems}
    return 0, out, f"{text}\n# shape {nf.shape()}"


def cmd_solve_eq(args):
    eq = wordeq.parse_equation(_read(args.eq))
    res = wordeq.solve(eq, args.max_len)
    if isinstance(res, wordeq.Sat):
        a = dict(sorted(res.assignment.items()))
        text = "sat " + " ".join(f'{k}="{v}"' for k, v in a.items())
        return 0, {"result": "sat", "assignment": a}, text
    if isinstance(res, wordeq.Unsat):
        return 0, {"result": "unsat"}, "unsat"
    return 0, {"result": "unsat-within-bound", "bound": res.bound}, \
        f"no solution within total length {res.bound}"


def cmd_decide(args):
    phi = _sentence(args.expr)
    c = classify(phi)
    if c is None:
        raise _Usage("not a Sigma-sentence")
    s = Structure.of(args.structure)
    if c.n == 0:
        route = "finite-evaluation"
        why = "all quantifiers bounded: truth is decided by finite evaluation"
        v = Verdict(decide_sigma_0mk(phi, s), args.budget)
    elif c.k == 0 and s is Structure.D:
        route = "word-equations"
        why = "no bounded universal in the prefix structure: one word equation decides it"
        v = wordeq.decide_D_nm0(phi, args.budget)
    else:
        route = "budgeted-evaluation"
        why = "undecidable fragment in general: witnesses searched up to the budget"
        v = evaluate(phi, s, budget=args.budget, max_steps=args.max_steps)
    out = {"route": route, "reason": why, "class": list(c), **_verdict_json(v)}
    return 0, out, f"{_verdict_text(v)}\n# route {route}: {why}"


def cmd_prove(args):
    phi = _sentence(args.expr)
    try:
        proof = axiomatics.prove_sigma(phi, args.theory, budget=args.budget)
    except axiomatics.Refused as r:
        return 1, {"refused": r.reason, "detail": str(r)}, f"refused: {r}"
    text = proof.dumps()
    if args.output:
        Path(args.output).write_text(text + "\n")
        text = f"{len(proof.steps)} steps written to {args.output}"
    return 0, proof.to_json(), text


def cmd_check(args):
    try:
        proof = axiomatics.Proof.loads(Path(args.proof).read_text())
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise _Usage(f"cannot read proof: {exc}")
    if args.theory and proof.theory != args.theory:
        res = axiomatics.FailureAt(None, "theory-mismatch", f"proof is for {proof.theory}")
    else:
        res = axiomatics.check_proof(proof)
    if res:
        return 0, {"ok": True, "steps": len(proof.steps)}, f"ok ({len(proof.steps)} steps)"
    out = {"ok": False, "step": res.step, "reason": res.reason, "detail": res.detail}
    where = "goal" if res.step is None else f"step {res.step}"
    return 1, out, f"failed at {where}: {res.reason} {res.detail}".rstrip()


def cmd_pcp(args):
    inst = pcp.load_instance(args.instance) if args.instance != "-" \
        else pcp.parse_instance(sys.stdin.read())
    if args.pcp_cmd == "solve":
        res = pcp.solve_pcp(inst, args.bound)
        if isinstance(res, pcp.NoneWithinBound):
            return 0, {"solution": None, "bound": args.bound}, \
                f"no solution of length <= {args.bound}"
        return 0, {"solution": list(res)}, " ".join(map(str, res))
    if args.pcp_cmd == "verify":
        try:
            ok = pcp.verify_solution(inst, args.indices)
        except IndexError as exc:
            raise _Usage(str(exc))
        return (0 if ok else 1), {"valid": ok}, "valid" if ok else "invalid"
    if args.pcp_cmd == "reduce":
        target = pcp.TARGETS[args.target]
        phi = target.build(inst)
        out = {"target": target.name, "structure": target.structure.value,
               "class": list(classify(phi)), "formula": show(phi)}
        return 0, out, show(phi)
    report = pcp.crosscheck(inst, args.budget, seq_bound=args.bound)
    lines = [f"solution: {' '.join(map(str, report.solution)) if report.solution else 'none'}"]
    lines += [f"{k}: {v}" for k, v in report.verdicts.items()]
    lines.append("agree" if report.agree else "DISAGREE")
    return (0 if report.agree else 1), report.to_json(), "\n".join(lines)


# --------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="machine-readable output")
    p = _Parser(prog="concatlogic", parents=[common],
                description="Theories of binary strings with concatenation.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.set_defaults(fn=fn)
        return s

    def structure(s, flag="--structure"):
        s.add_argument(flag, choices=["B", "D"], type=str.upper, default="B")

    s = add("parse", cmd_parse, "print the syntax tree as JSON")
    s.add_argument("expr")
    s = add("classify", cmd_classify, "quantifier counts (n,m,k) of a Sigma-formula")
    s.add_argument("expr")
    s = add("eval", cmd_eval, "budgeted truth in B or D")
    structure(s)
    s.add_argument("--budget", type=int, default=8)
    s.add_argument("--max-steps", type=int, default=200_000)
    s.add_argument("--refute", action="store_true",
                   help="allow False when the witness search is exhausted")
    s.add_argument("expr")
    s = add("normalize", cmd_normalize, "prenex normal form with a single equation")
    structure(s)
    s.add_argument("expr")
    s = add("solve-eq", cmd_solve_eq, "solve a word equation")
    s.add_argument("--max-len", type=int, default=8)
    s.add_argument("eq")
    s = add("decide", cmd_decide, "decide by the best available route")
    structure(s)
    s.add_argument("--budget", type=int, default=8)
    s.add_argument("--max-steps", type=int, default=200_000)
    s.add_argument("expr")
    s = add("prove", cmd_prove, "synthesize a proof of a true Sigma-sentence")
    structure(s, "--theory")
    s.add_argument("--budget", type=int, default=8)
    s.add_argument("-o", "--output")
    s.add_argument("expr")
    s = add("check", cmd_check, "check a proof file")
    s.add_argument("--theory", choices=["B", "D"], type=str.upper)
    s.add_argument("proof")

    s = add("pcp", cmd_pcp, "Post correspondence problem tools")
    psub = s.add_subparsers(dest="pcp_cmd", required=True, parser_class=_Parser)
    q = psub.add_parser("solve", parents=[common])
    q.add_argument("--bound", type=int, default=8)
    q.add_argument("instance")
    q = psub.add_parser("verify", parents=[common])
    q.add_argument("instance")
    q.add_argument("indices", type=int, nargs="+")
    q = psub.add_parser("reduce", parents=[common])
    q.add_argument("--target", choices=sorted(pcp.TARGETS), required=True)
    q.add_argument("instance")
    q = psub.add_parser("crosscheck", parents=[common])
    q.add_argument("--budget", type=int, default=12)
    q.add_argument("--bound", type=int, default=8)
    q.add_argument("instance")
    return p


def run(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        code, data, text = args.fn(args)
    except _Usage as exc:
        print(f"usage error: {exc}", file=err)
        return 2
    except (ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=err)
        return 2
    if getattr(args, "json", False):
        print(json.dumps(data, sort_keys=True), file=out)
    else:
        print(text, file=out)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
