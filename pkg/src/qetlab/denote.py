"""Denotational evaluation of cost-structure terms.

Semantic values are plain Python objects: ``QState`` for Q, ``ConsVal``
trees for declared basic types, floats for R (and for K when the cost
structure is real-valued), and ``FuncVal`` instances for arrows.

A recursive definition denotes the supremum of its Kleene approximants
f_0 = bottom, f_{n+1} = x -> body[F := f_n, X := x].  We never build these
functions; a ``RecFn`` carries its approximation level and unfolds on
demand.  Evaluating with budget n uses f_n for every letrec, which is a
lower bound in the cost order.  Hitting level 0 sets ``exhausted``.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Callable

from . import linalg
from .costs import CostStructure, Forgetful, RealInterval, instance_rplus
from .cslang import (KTYPE, RINF, CAdd, CApp, CBary, CCase, CCons, CGate, CKet, CLam, CLetrec,
                     CMeas, CReal, CSArrow, CSBasic, CSTerm, CSType, CTensor, CVar)
from .errors import EvaluationError
from .linalg import QState
from .source import Signature

DEFAULT_BUDGET = 64
DEFAULT_TOLERANCE = 1e-9
_CERTAIN = 1e-12


@dataclass(frozen=True)
class ConsVal:
    name: str
    args: tuple = ()

    def __str__(self):
        if not self.args:
            return self.name
        return f"{self.name}({', '.join(map(show, self.args))})"


class Bottom:
    """The least element of every functional type; applying it gives itself."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "BOTTOM"


BOTTOM = Bottom()


class FuncVal:
    def apply(self, x):
        raise NotImplementedError


class Closure(FuncVal):
    def __init__(self, param: str, body: CSTerm, env: dict, ev: "Evaluator"):
        self.param, self.body, self.env, self.ev = param, body, env, ev

    def apply(self, x):
        return self.ev.eval(self.body, {**self.env, self.param: x})

    def __repr__(self):
        return f"<fun {self.param}>"


class RecFn(FuncVal):
    """The ``level``-th Kleene approximant of a letrec."""

    def __init__(self, node: CLetrec, env: dict, level: int, ev: "Evaluator"):
        self.node, self.env, self.level, self.ev = node, env, level, ev

    def apply(self, x):
        if self.level <= 0:
            self.ev.exhausted = True
            return BOTTOM
        n = self.node
        below = RecFn(n, self.env, self.level - 1, self.ev)
        return self.ev.eval(n.body, {**self.env, n.fun: below, n.param: x})

    def __repr__(self):
        return f"<letrec {self.node.fun} @{self.level}>"


class PyFn(FuncVal):
    """A semantic function supplied from Python (valuations, oracles, tests)."""

    def __init__(self, fn: Callable, name: str = "fn"):
        self.fn, self.name = fn, name

    def apply(self, x):
        return self.fn(x)

    def __repr__(self):
        return f"<{self.name}>"


def show(v) -> str:
    if isinstance(v, QState):
        return repr(v)
    if isinstance(v, float):
        return "inf" if v == math.inf else repr(v)
    return str(v)


class Evaluator:
    def __init__(self, cs: CostStructure | None = None, budget: int = DEFAULT_BUDGET):
        if budget < 0:
            raise ValueError("budget must be non-negative")
        self.cs = cs if cs is not None else instance_rplus()
        self.budget = budget
        self.exhausted = False
        if sys.getrecursionlimit() < 200_000:
            sys.setrecursionlimit(200_000)

    def apply(self, f, x):
        if f is BOTTOM:
            return BOTTOM
        if isinstance(f, FuncVal):
            return f.apply(x)
        raise EvaluationError(f"cannot apply {show(f)}")

    def cost(self, v):
        return self.cs.bottom if v is BOTTOM else v

    def _state(self, v) -> QState:
        if not isinstance(v, QState):
            raise EvaluationError(f"expected a quantum state, got {show(v)}")
        return v

    def eval(self, t: CSTerm, rho: dict):
        if isinstance(t, CVar):
            try:
                return rho[t.name]
            except KeyError:
                raise EvaluationError(f"unbound variable {t.name}", pos=t.loc) from None
        if isinstance(t, CApp):
            f = self.eval(t.fun, rho)
            return self.apply(f, self.eval(t.arg, rho))
        if isinstance(t, CLam):
            return Closure(t.param, t.body, rho, self)
        if isinstance(t, CLetrec):
            return RecFn(t, rho, self.budget, self)
        if isinstance(t, CReal):
            return float(t.value)
        if isinstance(t, CAdd):
            c = self.eval(t.left, rho)
            return self.cs.cadd(0.0 if c is BOTTOM else c, self.cost(self.eval(t.right, rho)))
        if isinstance(t, CBary):
            p = linalg.measure_prob(0, self._state(self.eval(t.weight, rho)))
            if p >= 1 - _CERTAIN:
                return self.cost(self.eval(t.left, rho))
            if p <= _CERTAIN:
                return self.cost(self.eval(t.right, rho))
            left = self.cost(self.eval(t.left, rho))
            return self.cs.bary(p, left, self.cost(self.eval(t.right, rho)))
        if isinstance(t, CCase):
            v = self.eval(t.scrutinee, rho)
            if isinstance(v, ConsVal):
                for arm in t.arms:
                    if arm.cons == v.name:
                        return self.eval(arm.body, {**rho, **dict(zip(arm.binders, v.args))})
            if t.default is not None:
                return self.eval(t.default.body, {**rho, t.default.binder: v})
            raise EvaluationError(f"no branch matches {show(v)}", pos=t.loc)
        if isinstance(t, CKet):
            return t.state
        if isinstance(t, CGate):
            return linalg.apply_unitary(t.gate, self._state(self.eval(t.arg, rho)))
        if isinstance(t, CMeas):
            return linalg.post_measure(t.bit, self._state(self.eval(t.arg, rho)))
        if isinstance(t, CTensor):
            right = self._state(self.eval(t.right, rho))
            return linalg.tensor(self._state(self.eval(t.left, rho)), right)
        if isinstance(t, CCons):
            return ConsVal(t.name, tuple(self.eval(a, rho) for a in t.args))
        raise EvaluationError(f"not a cost-structure term: {t!r}")


@dataclass
class DenoteResult:
    value: object
    exhausted: bool
    budget: int


def denote(term: CSTerm, rho: dict | None = None, cs: CostStructure | None = None,
           budget: int = DEFAULT_BUDGET):
    """The denotation of ``term`` under ``rho``, with letrecs unrolled ``budget`` times."""
    return Evaluator(cs, budget).eval(term, dict(rho or {}))


def denote_report(term: CSTerm, rho: dict | None = None, cs: CostStructure | None = None,
                  budget: int = DEFAULT_BUDGET) -> DenoteResult:
    ev = Evaluator(cs, budget)
    v = ev.eval(term, dict(rho or {}))
    return DenoteResult(v, ev.exhausted, budget)


@dataclass
class CostResult:
    value: object
    converged: bool
    budget: int
    exhausted: bool

    def __iter__(self):
        return iter((self.value, self.converged))

    def to_json(self) -> dict:
        return {"value": _json_num(self.value), "converged": self.converged,
                "budget": self.budget, "exhausted": self.exhausted}


def _json_num(v):
    if isinstance(v, float) and v == math.inf:
        return "inf"
    return v if isinstance(v, (int, float)) else show(v)


def denote_closed_cost(term: CSTerm, cs: CostStructure | None = None,
                       budget: int = DEFAULT_BUDGET, tolerance: float = DEFAULT_TOLERANCE,
                       rho: dict | None = None) -> CostResult:
    """Iterative deepening over the unrolling budget for a term of type K.

    Budgets double up to ``budget``.  The result is exact as soon as an
    evaluation never reaches the bottom approximant; otherwise it is
    reported converged once two successive budgets agree within
    ``tolerance``.
    """
    cs = cs if cs is not None else instance_rplus()
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    prev = None
    b = min(budget, 4)
    while True:
        ev = Evaluator(cs, b)
        v = ev.cost(ev.eval(term, dict(rho or {})))
        if not ev.exhausted:
            return CostResult(v, True, b, False)
        if prev is not None and cs.distance(prev, v) < tolerance:
            return CostResult(v, True, b, True)
        if b >= budget:
            return CostResult(v, False, b, True)
        prev = v
        b = min(2 * b, budget)


# carriers

def inhabits(v, ty: CSType, cs: CostStructure, signature: Signature | None = None) -> bool:
    """Tag-level membership of a semantic value in the interpretation of a type."""
    if isinstance(ty, CSArrow):
        return v is BOTTOM or isinstance(v, FuncVal)
    if ty == RINF:
        return isinstance(v, float) and not math.isnan(v) and v >= 0
    if ty == KTYPE:
        return v is BOTTOM or cs.contains(v)
    if isinstance(ty, CSBasic):
        if ty.name == "Q":
            return isinstance(v, QState) and abs(
                float(sum(abs(a) ** 2 for a in v.amplitudes)) - 1) < linalg.NORM_TOL
        if not isinstance(v, ConsVal):
            return False
        if signature is None:
            return True
        sig = signature.constructors.get(v.name)
        if sig is None or sig.result.name != ty.name:
            return False
        formal = sig.classical_args + sig.quantum_args
        return len(formal) == len(v.args) and all(
            inhabits(a, CSBasic(f.name), cs, signature) for a, f in zip(v.args, formal))
    return False


def is_real_cost(cs: CostStructure) -> bool:
    base = cs.base if isinstance(cs, Forgetful) else cs
    return isinstance(base, RealInterval)
