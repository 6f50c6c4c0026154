"""Command-line entry point: ``qetlab <command> ...``.

Exit codes: 0 success, 1 analysis failure (type error, falsified bound,
failed comparison), 2 usage error.  Every command accepts ``--json``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import pars
from . import source as S
from .aql import Program, parse_program, parse_type
from .bundled import corpus, entry, resolve
from .costs import by_name
from .csl import CSInput, CSProgram, format_cs_program, load_cs_program
from .cslang import CSArrow, KTYPE, RINF
from .cstypes import check_cs_program, cs_typecheck
from .denote import Evaluator, denote_closed_cost, show
from .errors import HypothesisViolation, QetError
from .qet import Translator, translate_type, zero_continuation
from .refinement import Falsified, check_refined
from .refinement.rty import parse_rty
from .soundness import DEFAULT_DEPTH, DEFAULT_TOL, check_expected_cost, check_expected_value
from .typecheck import check_program

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _num(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def _emit(args, payload: dict, human: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(human)


def _read(path: str) -> tuple[Path, str]:
    p = resolve(path)
    if not p.exists():
        raise UsageError(f"no such file: {path}")
    return p, p.read_text()


def _program(path: str) -> Program:
    return parse_program(_read(path)[1])


def _closed_main(prog: Program) -> S.Term:
    if prog.main is None:
        raise HypothesisViolation("the program has no main term")
    sigma = prog.sigma()
    missing = S.free_vars(prog.main) - set(sigma)
    if missing:
        raise HypothesisViolation(f"no input supplied for {', '.join(sorted(missing))}")
    return S.subst(prog.main, sigma)


def _continuation(spec: str | None, signature):
    """None for ``zero`` (or nothing), else the parsed .csl program.

    The program's signature extends ``signature`` with the file's declarations."""
    if spec is None or spec == "zero":
        return None
    return load_cs_program(_read(spec)[1], signature)


# commands

def cmd_check(args) -> int:
    prog = _program(args.file)
    ann = parse_type(args.type, prog.signature) if args.type else None
    checked = check_program(prog, ann)
    payload = {"command": "check", "file": args.file, "status": "ok", "type": str(checked.type)}
    if args.json_ast:
        payload["ast"] = S.ast_json(prog.main)
    _emit(args, payload, f"{args.file}: {checked.type}")
    return EXIT_OK


def cmd_run(args) -> int:
    prog = _program(args.file)
    check_program(prog)
    rep = pars.run(_closed_main(prog), args.depth, granularity=args.granularity)
    lines = [f"depth {rep.depth}: accumulated cost {rep.accumulated_cost:.12g}, "
             f"normal-form mass {rep.normal_forms.mass:.12g}, live mass {rep.live.mass:.3g}"]
    for t, p in rep.normal_forms.entries:
        lines.append(f"  {p:.10g}  {S.pretty(t)}")
    _emit(args, {"command": "run", "file": args.file, **rep.to_json()}, "\n".join(lines))
    return EXIT_OK


def cmd_sample(args) -> int:
    prog = _program(args.file)
    check_program(prog)
    rep = pars.sample(_closed_main(prog), args.seed, args.trials, step_budget=args.step_budget)
    lines = [f"{rep.trials} trials (seed {rep.seed}): mean cost {rep.mean_cost:.6g} "
             f"+- {rep.std_error:.3g}"]
    if rep.nonterminating:
        lines.append(f"  {rep.nonterminating} trials exceeded the step budget")
    for label, n in sorted(rep.histogram.items(), key=lambda kv: -kv[1]):
        lines.append(f"  {n:6d}  {label}")
    _emit(args, {"command": "sample", "file": args.file, **rep.to_json()}, "\n".join(lines))
    return EXIT_OK


def transform_program(prog: Program, k=None) -> CSProgram:
    """qet of the main term under continuation ``k`` (default: the zero continuation).

    ``k`` is a CS term or a CS program; a program contributes its declarations."""
    checked = check_program(prog)
    sig = prog.signature
    if isinstance(k, CSProgram):
        sig, k = k.signature, k.main
    tr = Translator(prog.signature)
    inputs = [CSInput(tr.var_name(d.name), translate_type(d.type), tr.value(d.value))
              for d in prog.inputs]
    if k is None:
        k = zero_continuation(tr.fresh("K"))
    else:
        want = CSArrow(translate_type(checked.type), KTYPE)
        cs_typecheck({}, k, want, signature=sig)
    return CSProgram(sig, tr.term(prog.main, k), KTYPE, inputs)


def cmd_transform(args) -> int:
    prog = _program(args.file)
    out = transform_program(prog, _continuation(args.continuation, prog.signature))
    text = format_cs_program(out)
    if args.output:
        Path(args.output).write_text(text)
    payload = {"command": "transform", "file": args.file,
               "continuation": args.continuation or "zero", "output": args.output,
               "program": text}
    _emit(args, payload, text.rstrip("\n") if not args.output else f"wrote {args.output}")
    return EXIT_OK


def cmd_denote(args) -> int:
    prog = load_cs_program(_read(args.file)[1])
    cs = by_name(args.cost_structure)
    ty, _ = check_cs_program(prog, cs)
    rho: dict = {}
    for inp in prog.inputs:
        rho[inp.name] = Evaluator(cs, args.budget).eval(inp.value, dict(rho))
    payload = {"command": "denote", "file": args.file, "type": str(ty),
               "cost_structure": cs.name}
    if ty in (KTYPE, RINF):
        res = denote_closed_cost(prog.main, cs, args.budget, rho=rho)
        payload.update(res.to_json())
        human = (f"{show(res.value)} ({'converged' if res.converged else 'not converged'} "
                 f"at budget {res.budget})")
    else:
        ev = Evaluator(cs, args.budget)
        v = ev.eval(prog.main, rho)
        payload.update({"value": show(v), "budget": args.budget, "exhausted": ev.exhausted})
        human = show(v)
    _emit(args, payload, human)
    return EXIT_OK


def _compare(prog: Program, name: str, cont: str | None, depth: int, budget: int, tol: float,
             cs_name: str | None):
    k = _continuation(cont, prog.signature)
    if k is None:
        return check_expected_cost(prog, depth=depth, budget=budget, tol=tol, name=name)
    cs = by_name(cs_name) if cs_name else None
    return check_expected_value(prog, None, k.main, depth, budget, tol, cs=cs, name=name,
                                signature=k.signature)


def cmd_compare(args) -> int:
    prog = _program(args.file)
    rep = _compare(prog, Path(args.file).stem, args.continuation, args.depth, args.budget,
                   args.tol, args.cost_structure)
    _emit(args, {"command": "compare", "file": args.file, **rep.to_json()}, rep.summary())
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_verify_bound(args) -> int:
    prog = load_cs_program(_read(args.file)[1])
    spec = parse_rty(_read(args.type)[1], prog.signature)
    if spec.type is None:
        raise UsageError(f"{args.type} declares no type")
    res = check_refined(spec.ctx, prog.main, spec.type, spec.config(args.samples, args.seed),
                        spec.inst)
    payload = {"command": "verify-bound", "file": args.file, "type_file": args.type,
               "seed": args.seed, "samples": args.samples, **res.to_json()}
    lines = [f"{res.verdict}"]
    for o in res.obligations:
        lines.append(f"  [{o.verdict}] {o.rule}: {o.to_json()['formula']}")
    if isinstance(res.verdict, Falsified):
        lines.append("witness: " + json.dumps(res.verdict.witness.to_json()["valuation"]))
        lines.append("instances: " + json.dumps(res.verdict.witness.to_json()["instances"]))
    if args.trace:
        lines += ["derivation:"] + res.trace
    _emit(args, payload, "\n".join(lines))
    return EXIT_FAIL if isinstance(res.verdict, Falsified) else EXIT_OK


def _verify_entry(name: str) -> dict:
    e = entry(name)
    out = {"name": e.name, "file": e.file, "accept": e.accept}
    if e.bound is not None:
        prog = load_cs_program(e.text())
        spec = parse_rty((e.path.parent / e.bound).read_text(), prog.signature)
        res = check_refined(spec.ctx, prog.main, spec.type, spec.config(), spec.inst)
        out.update(ok=res.verdict.name == e.bound_verdict, verdict=str(res.verdict))
        return out
    prog = parse_program(e.text())
    if not e.accept:
        try:
            check_program(prog)
        except QetError as exc:
            out.update(ok=exc.kind == e.error, error=exc.kind)
            return out
        out.update(ok=False, error=None)
        return out
    ok = True
    if e.ecost is not None:
        rep = check_expected_cost(prog, depth=e.depth, budget=e.budget, name=e.name)
        ok = ok and rep.passed and abs(rep.denotational - e.ecost) <= DEFAULT_TOL
        out["ecost"] = _num(rep.denotational)
    if e.continuation is not None and e.evalue is not None:
        k = load_cs_program(e.continuation_text(), prog.signature)
        rep = check_expected_value(prog, None, k.main, e.depth, e.budget, name=e.name,
                                   signature=k.signature)
        ok = ok and rep.passed and abs(rep.denotational - e.evalue) <= DEFAULT_TOL
        out["evalue"] = _num(rep.denotational)
    out["ok"] = ok
    return out


def cmd_corpus(args) -> int:
    entries = corpus()
    if not args.verify:
        payload = {"command": "corpus", "entries": [e.to_json() for e in entries]}
        lines = []
        for e in entries:
            facts = [f"type {e.type}" if e.type else f"rejected ({e.error})"]
            if e.ecost is not None:
                facts.append(f"ecost {e.ecost:g}")
            if e.evalue is not None:
                facts.append(f"evalue {e.evalue:g} with {e.continuation}")
            if e.bound:
                facts.append(f"bound {e.bound}: {e.bound_verdict}")
            lines.append(f"{e.name:14s} {e.file:18s} " + "; ".join(facts))
        _emit(args, payload, "\n".join(lines))
        return EXIT_OK
    names = [e.name for e in entries]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_verify_entry, names))
    else:
        results = [_verify_entry(n) for n in names]
    ok = all(r["ok"] for r in results)
    lines = [f"{'pass' if r['ok'] else 'FAIL'}  {r['name']}" for r in results]
    _emit(args, {"command": "corpus", "verify": True, "ok": ok, "results": results},
          "\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


# argument parsing

def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {v}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _default_seed() -> int:
    raw = os.environ.get("QETLAB_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"QETLAB_SEED must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print a JSON report")
    parser = argparse.ArgumentParser(prog="qetlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("check", parents=[common], help="type-check a source program")
    p.add_argument("file")
    p.add_argument("--type", help='expected type of the main term, e.g. "Q -o Q"')
    p.add_argument("--json-ast", action="store_true", help="include the syntax tree")
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("run", parents=[common], help="reduce a program to a given depth")
    p.add_argument("file")
    p.add_argument("--depth", type=_positive_int, default=DEFAULT_DEPTH)
    p.add_argument("--granularity", choices=("round", "step"), default="round")
    p.set_defaults(run=cmd_run)

    p = sub.add_parser("sample", parents=[common], help="Monte-Carlo runs of a program")
    p.add_argument("file")
    p.add_argument("--trials", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--step-budget", type=_positive_int, default=100_000)
    p.set_defaults(run=cmd_sample)

    p = sub.add_parser("transform", parents=[common], help="expectation transform to .csl")
    p.add_argument("file")
    p.add_argument("--continuation", default="zero", help="zero, or a .csl continuation")
    p.add_argument("-o", "--output")
    p.set_defaults(run=cmd_transform)

    p = sub.add_parser("denote", parents=[common], help="evaluate a .csl program")
    p.add_argument("file")
    p.add_argument("--cost-structure", choices=("rplus", "unit"), default="rplus")
    p.add_argument("--budget", type=_positive_int, default=64)
    p.set_defaults(run=cmd_denote)

    p = sub.add_parser("compare", parents=[common],
                       help="operational against denotational expectation")
    p.add_argument("file")
    p.add_argument("--continuation", help="a .csl continuation; expected cost if omitted")
    p.add_argument("--depth", type=_positive_int, default=DEFAULT_DEPTH)
    p.add_argument("--budget", type=_positive_int, default=64)
    p.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL)
    p.add_argument("--cost-structure", choices=("rplus", "unit"), default=None,
                   help="instance for expected values (default: unit)")
    p.set_defaults(run=cmd_compare)

    p = sub.add_parser("verify-bound", parents=[common], help="check a refinement type")
    p.add_argument("file")
    p.add_argument("--type", required=True, help="a .rty file with the bound")
    p.add_argument("--samples", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trace", action="store_true", help="print the derivation")
    p.set_defaults(run=cmd_verify_bound)

    p = sub.add_parser("corpus", parents=[common], help="list or verify the bundled examples")
    p.add_argument("--verify", action="store_true", help="recompute and compare golden data")
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.set_defaults(run=cmd_corpus)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        return args.run(args)
    except UsageError as exc:
        print(f"qetlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QetError as exc:
        if args.json:
            print(json.dumps({"command": args.command, "file": getattr(args, "file", None),
                              "status": "error", "error": exc.to_json()}, indent=2,
                             sort_keys=True))
        else:
            print(f"{getattr(args, 'file', 'qetlab')}: {exc}")
        return EXIT_FAIL
