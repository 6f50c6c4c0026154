"""Cross-checks between the operational and denotational readings of a program.

For a closed program of basic type, the expected cost computed by running
the PARS to some depth must agree with the denotation of the transformed
program under the zero continuation; with a continuation ``f`` and a
forgetful cost structure, the expected value of ``f`` over the normal
forms must agree with the denotation of the transformed program applied
to ``f``.  Both sides are lower bounds that increase with depth and
budget, so the report keeps the residual mass and the convergence flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import pars
from . import source as S
from .aql import Program
from .costs import DIVERGENCE, CostStructure, convex_sum, instance_rplus, instance_unit_forgetful
from .cslang import CApp, CSArrow, CSBasic, CSTerm, KTYPE
from .cstypes import cs_typecheck
from .denote import DEFAULT_BUDGET, Evaluator, denote, denote_closed_cost
from .errors import HypothesisViolation
from .source import Signature
from .qet import Translator, zero_continuation
from .typecheck import check_program

DEFAULT_DEPTH = 40
DEFAULT_TOL = 1e-6


@dataclass
class ComparisonReport:
    program: str
    kind: str
    operational: float
    depth: int
    residual_mass: float
    denotational: float
    budget: int
    converged: bool
    gap: float
    tol: float
    passed: bool
    divergent: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_json(self) -> dict:
        return {
            "program": self.program,
            "kind": self.kind,
            "operational": {"value": _num(self.operational), "depth": self.depth,
                            "residual_mass": self.residual_mass},
            "denotational": {"value": _num(self.denotational), "budget": self.budget,
                             "converged": self.converged},
            "gap": _num(self.gap),
            "tol": self.tol,
            "divergent": self.divergent,
            "verdict": self.verdict,
            **self.extra,
        }

    def summary(self) -> str:
        return (f"{self.program} [{self.kind}] operational={self.operational:.10g} "
                f"(depth {self.depth}, residual {self.residual_mass:.3g}) "
                f"denotational={self.denotational:.10g} (budget {self.budget}, "
                f"{'converged' if self.converged else 'not converged'}) "
                f"gap={self.gap:.3g} -> {self.verdict}")


def _num(v):
    return "inf" if isinstance(v, float) and math.isinf(v) else v


def _closing(program: Program, sigma: dict | None):
    """The checked main type and the closing substitution."""
    checked = check_program(program)
    if not isinstance(checked.type, S.Basic):
        raise HypothesisViolation(
            f"the program has type {checked.type}; the comparison needs a basic type")
    sigma = program.sigma() if sigma is None else dict(sigma)
    missing = S.free_vars(program.main) - set(sigma)
    if missing:
        raise HypothesisViolation(f"no value supplied for {', '.join(sorted(missing))}")
    for x, v in sigma.items():
        if not S.is_value(v) or S.free_vars(v):
            raise HypothesisViolation(f"the substitute for {x} is not a closed value")
    return checked.type, sigma


def _valuation(tr: Translator, sigma: dict, cs: CostStructure, budget: int) -> dict:
    return {tr.var_name(x): denote(tr.value(v), cs=cs, budget=budget) for x, v in sigma.items()}


def _gap(a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b):
        return 0.0
    return abs(a - b)


def _report(name, kind, op, run, den, tol, extra=None) -> ComparisonReport:
    gap = _gap(op, den.value)
    # both sides still climbing: the program diverges with positive probability
    divergent = (not den.converged and run.residual_mass > tol
                 and (den.value >= DIVERGENCE or op >= DIVERGENCE or gap > tol))
    return ComparisonReport(name, kind, op, run.depth, run.residual_mass, den.value,
                            den.budget, den.converged, gap, tol, gap <= tol or divergent,
                            divergent, extra or {})


def check_expected_cost(program: Program, sigma: dict | None = None,
                        depth: int = DEFAULT_DEPTH, budget: int = DEFAULT_BUDGET,
                        tol: float = DEFAULT_TOL, name: str = "program") -> ComparisonReport:
    """Expected cost by reduction against the denotation under the zero continuation."""
    _, sigma = _closing(program, sigma)
    cs = instance_rplus()
    closed = S.subst(program.main, sigma)
    run = pars.run(closed, depth)
    tr = Translator(program.signature)
    translated = tr.term(program.main, zero_continuation(tr.fresh("K")))
    den = denote_closed_cost(translated, cs, budget, rho=_valuation(tr, sigma, cs, budget))
    return _report(name, "ecost", run.accumulated_cost, run, den, tol)


def check_expected_value(program: Program, sigma: dict | None, f: CSTerm,
                         depth: int = DEFAULT_DEPTH, budget: int = DEFAULT_BUDGET,
                         tol: float = DEFAULT_TOL, cs: CostStructure | None = None,
                         name: str = "program",
                         signature: Signature | None = None) -> ComparisonReport:
    """Expected value of ``f`` over the normal forms against the denotation of qet[t]{f}.

    ``signature`` types ``f`` when it uses declarations beyond the program's."""
    ty, sigma = _closing(program, sigma)
    cs = cs if cs is not None else instance_unit_forgetful()
    cs_typecheck({}, f, CSArrow(CSBasic(ty.name), KTYPE),
                 signature=signature or program.signature, cs=cs)
    closed = S.subst(program.main, sigma)
    run = pars.run(closed, depth)
    tr = Translator(program.signature)

    def observe(v: S.Term):
        ev = Evaluator(cs, budget)
        return ev.cost(ev.eval(CApp(f, tr.value(v)), {}))

    op = convex_sum(cs, [(p, observe(b)) for b, p in run.normal_forms.entries])
    # f is closed (the type check above ran in the empty context), so nothing is captured
    translated = tr.term(program.main, f)
    den = denote_closed_cost(translated, cs, budget, rho=_valuation(tr, sigma, cs, budget))
    return _report(name, "evalue", op, run, den, tol, {"cost_structure": cs.name})
