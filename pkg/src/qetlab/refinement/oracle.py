"""A sampling validity oracle for formulae under refinement contexts.

Validity of a formula is undecidable in general, so the oracle answers in
three ways: ``VerifiedSyntactic`` when the formula is an instance of a
structurally valid schema, ``Falsified`` with a concrete counterexample,
and ``NotFalsified(n)`` after ``n`` sampled environments survived.

Evaluation is two-valued with an exactness flag.  A universally
quantified block ``forall xs. hyps => concl`` is instantiated by reading
candidate values off the hypotheses (``x = e`` pins ``x``; ``x <= e``
suggests ``e`` and a few points below it) and by drawing from per-type
sample pools otherwise.  A false instance is a genuine counterexample, so
"false" is exact while "true" is exact only when every quantified
variable was pinned by an equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import cslang as C
from .. import linalg
from ..costs import CostStructure, carrier_max, ext_mul, instance_rplus
from ..cslang import KTYPE, QBASIC, RINF, CSArrow, CSBasic, CSType
from ..denote import BOTTOM, ConsVal, Evaluator, FuncVal, PyFn
from ..errors import EvaluationError, QetError
from ..linalg import QState
from ..source import Signature
from . import formula as F
from .formula import (And, Exists, FCall, FCS, FNum, FOp, Forall, Formula, FVar, Implies, Not,
                      Or, Pred)
from .reftypes import Bind, DepArrow, Fact, ForallType, RefBase, RefType, skeleton, subst_type

TOL = 1e-9
DEFAULT_SAMPLES = 1000
DEFAULT_QUBITS = (1, 2, 3)
_MAX_INSTANCES = 64
_MAX_SPLIT = 8


@dataclass
class OracleConfig:
    signature: Signature = field(default_factory=Signature.builtin)
    cs: CostStructure = field(default_factory=instance_rplus)
    defs: dict = field(default_factory=dict)
    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    qubits: tuple = DEFAULT_QUBITS
    budget: int = 64


# verdicts

@dataclass(frozen=True)
class Witness:
    seed: int
    sample: int
    valuation: dict
    instances: dict
    formula: Formula

    def to_json(self) -> dict:
        return {"seed": self.seed, "sample": self.sample,
                "valuation": {k: encode(v) for k, v in self.valuation.items()},
                "instances": {k: encode(v) for k, v in self.instances.items()},
                "formula": F.pretty(self.formula)}


@dataclass(frozen=True)
class VerifiedSyntactic:
    reason: str = ""
    rank = 2
    name = "VerifiedSyntactic"

    def to_json(self) -> dict:
        return {"verdict": self.name, "reason": self.reason}

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class NotFalsified:
    samples: int
    seed: int = 0
    rank = 1
    name = "NotFalsified"

    def to_json(self) -> dict:
        return {"verdict": self.name, "samples": self.samples, "seed": self.seed}

    def __str__(self):
        return f"NotFalsified({self.samples})"


@dataclass(frozen=True)
class Falsified:
    witness: Witness
    rank = 0
    name = "Falsified"

    def to_json(self) -> dict:
        return {"verdict": self.name, "witness": self.witness.to_json()}

    def __str__(self):
        return "Falsified"


Verdict = VerifiedSyntactic | NotFalsified | Falsified


def meet(*verdicts: Verdict) -> Verdict:
    """The weakest of the verdicts (VerifiedSyntactic > NotFalsified > Falsified)."""
    out: Verdict = VerifiedSyntactic("no side conditions")
    for v in verdicts:
        if v.rank < out.rank:
            out = v
        elif isinstance(v, NotFalsified) and isinstance(out, NotFalsified):
            out = NotFalsified(min(v.samples, out.samples), out.seed)
    return out


# values to and from JSON

def encode(v):
    if isinstance(v, float) or isinstance(v, int):
        return "inf" if v == math.inf else float(v)
    if isinstance(v, QState):
        return {"qubits": v.n_qubits,
                "amplitudes": [[float(a.real), float(a.imag)] for a in v.amplitudes]}
    if isinstance(v, ConsVal):
        return {"cons": v.name, "args": [encode(a) for a in v.args]}
    if isinstance(v, PyFn):
        return {"function": v.name}
    if v is BOTTOM:
        return "bottom"
    return {"function": repr(v)}


def decode(j, defs: dict | None = None, config: Optional[OracleConfig] = None):
    if j == "inf":
        return math.inf
    if j == "bottom":
        return BOTTOM
    if isinstance(j, (int, float)):
        return float(j)
    if "qubits" in j:
        amps = np.array([complex(re, im) for re, im in j["amplitudes"]])
        return QState.from_amplitudes(amps, normalize=True)
    if "cons" in j:
        return ConsVal(j["cons"], tuple(decode(a, defs, config) for a in j["args"]))
    name = j["function"]
    if config is not None and name in config.defs:
        return def_function(config.defs[name], FormulaEvaluator(config, None))
    raise ValueError(f"cannot rebuild function value {name}")


# evaluation

def _le(a: float, b: float) -> bool:
    if b == math.inf:
        return True
    if a == math.inf:
        return False
    return a <= b + TOL * max(1.0, abs(b))


def _eq(a, b) -> bool:
    if isinstance(a, QState) and isinstance(b, QState):
        return a.n_qubits == b.n_qubits and bool(np.allclose(a.amplitudes, b.amplitudes,
                                                             atol=TOL))
    if isinstance(a, ConsVal) and isinstance(b, ConsVal):
        return a.name == b.name and len(a.args) == len(b.args) and all(
            _eq(x, y) for x, y in zip(a.args, b.args))
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        if math.isinf(a) or math.isinf(b):
            return a == b
        return abs(a - b) <= TOL * max(1.0, abs(a), abs(b))
    if isinstance(a, FuncVal) or isinstance(b, FuncVal):
        raise EvaluationError("functions cannot be compared")
    return False


def def_function(d: F.Definition, ev: "FormulaEvaluator") -> FuncVal:
    """A user definition as a curried semantic function."""

    def curry(done: tuple):
        def take(x):
            args = done + (x,)
            if len(args) == len(d.params):
                return ev.term(d.body, {p: a for (p, _), a in zip(d.params, args)})
            return PyFn(curry(args), d.name)
        return take

    return PyFn(curry(()), d.name)


class FormulaEvaluator:
    def __init__(self, config: OracleConfig, rng: np.random.Generator | None = None):
        self.cfg = config
        self.cs = config.cs
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)
        self.ev = Evaluator(config.cs, config.budget)
        self.forced: dict = {}
        self.instances: dict = {}
        self.sampler = Sampler(config, self.rng, self)

    # terms

    def term(self, t, rho: dict):
        if isinstance(t, FVar):
            if t.name in rho:
                return rho[t.name]
            if t.name in self.cfg.defs:
                return def_function(self.cfg.defs[t.name], self)
            raise EvaluationError(f"no value for {t.name}")
        if isinstance(t, FNum):
            return float(t.value)
        if isinstance(t, FOp):
            vals = [self.term(a, rho) for a in t.args]
            return self._op(t.op, vals)
        if isinstance(t, FCall):
            args = [self.term(a, rho) for a in t.args]
            if isinstance(t.fn, str):
                if t.fn in F.BUILTINS:
                    return linalg.measure_prob(int(t.fn[1]), self._state(args[0]))
                d = self.cfg.defs.get(t.fn)
                if d is not None:
                    return self.term(d.body, {p: a for (p, _), a in zip(d.params, args)})
                f = rho.get(t.fn)
                if f is None:
                    raise EvaluationError(f"unknown function {t.fn}")
            else:
                f = self.term(t.fn, rho)
            for a in args:
                f = self.ev.apply(f, a)
            return self.ev.cost(f) if not isinstance(f, FuncVal) else f
        if isinstance(t, FCS):
            return self.ev.eval(t.term, dict(rho))
        raise TypeError(t)

    def _state(self, v) -> QState:
        if not isinstance(v, QState):
            raise EvaluationError(f"expected a state, got {v!r}")
        return v

    def _op(self, op, vals):
        vals = [self.ev.cost(v) for v in vals] if op != "bary" else vals
        if op == "+":
            return vals[0] + vals[1]
        if op == "-":
            a, b = vals
            if math.isinf(b):
                raise EvaluationError("subtracting infinity")
            return a - b
        if op == "*":
            return ext_mul(vals[0], vals[1])
        if op == "/":
            a, b = vals
            if b == 0:
                raise EvaluationError("division by zero")
            return a / b
        if op == "min":
            return min(vals)
        if op == "max":
            return max(vals)
        if op == "cadd":
            return self.cs.cadd(vals[0], vals[1])
        if op == "bary":
            a, w, b = vals
            p = linalg.measure_prob(0, self._state(w))
            return self.cs.bary(p, self.ev.cost(a), self.ev.cost(b))
        raise EvaluationError(f"unknown operation {op}")

    # formulae

    def holds(self, f: Formula, rho: dict) -> tuple[bool, bool]:
        """(truth value, exact)."""
        if isinstance(f, Pred):
            return self._pred(f, rho), True
        if isinstance(f, Not):
            v, e = self.holds(f.body, rho)
            return not v, e
        if isinstance(f, And):
            exact = True
            for g in f.items:
                v, e = self.holds(g, rho)
                if not v and e:
                    return False, True
                if not v:
                    return False, False
                exact = exact and e
            return True, exact
        if isinstance(f, Or):
            exact = True
            for g in f.items:
                v, e = self.holds(g, rho)
                if v and e:
                    return True, True
                if v:
                    return True, False
                exact = exact and e
            return False, exact
        if isinstance(f, Implies):
            hv, he = self.holds(f.hyp, rho)
            if not hv:
                return True, he
            cv, ce = self.holds(f.concl, rho)
            return cv, he and ce
        if isinstance(f, Forall):
            return self._forall(f, rho)
        if isinstance(f, Exists):
            return self._exists(f, rho)
        raise TypeError(f)

    def _pred(self, f: Pred, rho) -> bool:
        if f.name == "true":
            return True
        if f.name == "false":
            return False
        a, b = (self.term(x, rho) for x in f.args)
        if f.name in F.NUMERIC_RELATIONS:
            a, b = self.ev.cost(a), self.ev.cost(b)
            if f.name in ("le", "sqle"):
                return _le(a, b)
            if f.name == "ge":
                return _le(b, a)
            if f.name == "lt":
                return _le(a, b) and not _eq(a, b)
            return _le(b, a) and not _eq(a, b)
        if f.name == "eq":
            return _eq(a, b)
        return not _eq(a, b)

    # quantifiers

    def _prenex(self, f: Formula, rho: dict):
        """forall-block: (vars, hypotheses, conclusion)."""
        block: list = []
        hyps: list = []
        body = f
        taken = set(rho) | F.fv(f)

        def pull(g):
            nonlocal body
            if isinstance(g, Exists):
                var = g.var
                if var in taken:
                    var = F.fresh(var, taken)
                taken.add(var)
                block.append((var, g.type))
                for h in F.conjuncts(F.rename(g.body, g.var, var)):
                    pull(h)
            else:
                hyps.append(g)

        while True:
            if isinstance(body, Forall):
                var = body.var
                inner = body.body
                if var in taken and (var, body.type) not in block:
                    var = F.fresh(var, taken)
                    inner = F.rename(inner, body.var, var)
                taken.add(var)
                block.append((var, body.type))
                body = inner
            elif isinstance(body, Implies):
                for h in F.conjuncts(body.hyp):
                    pull(h)
                body = body.concl
            else:
                return block, hyps, body

    def _exists_block(self, f: Formula, rho: dict):
        block: list = []
        parts: list = []
        taken = set(rho) | F.fv(f)

        def walk(g):
            if isinstance(g, Exists):
                var = g.var
                if var in taken:
                    var = F.fresh(var, taken)
                taken.add(var)
                block.append((var, g.type))
                walk(F.rename(g.body, g.var, var))
            else:
                parts.extend(F.conjuncts(g))

        walk(f)
        return block, parts

    def _forall(self, f: Forall, rho: dict) -> tuple[bool, bool]:
        block, hyps, concl = self._prenex(f, rho)
        if not hyps:
            shape = _cons_mismatch(block, concl)
            if shape is not None:
                other, name = shape
                v = self.term(other, rho)
                return not (isinstance(v, ConsVal) and v.name == name), True
        split = next((h for h in hyps if isinstance(h, Or)), None)
        if split is not None and len(split.items) <= _MAX_SPLIT:
            return self._split(block, hyps, split, concl, rho)
        all_pinned = True
        unknown = False
        for sigma, pinned in self._assignments(block, hyps, rho):
            all_pinned = all_pinned and pinned
            env = {**rho, **sigma}
            try:
                hv, he = self.holds(F.conj(*hyps), env)
                if not hv:
                    unknown = unknown or not he
                    continue
                cv, ce = self.holds(concl, env)
            except (EvaluationError, QetError):
                unknown = True
                continue
            if not cv and he and ce:
                self.instances.update(sigma)
                return False, True
            if not cv or not (he and ce):
                unknown = True
        if unknown:
            return False, False
        return True, all_pinned

    def _split(self, block, hyps, split: Or, concl, rho: dict) -> tuple[bool, bool]:
        """(A \\/ B) => C as (A => C) /\\ (B => C), so each arm's equations can pin."""
        rest = [h for h in hyps if h is not split]
        exact = True
        for d in split.items:
            g: Formula = Implies(F.conj(*rest, d), concl)
            for v, ty in reversed(block):
                g = Forall(v, ty, g)
            ok, e = self.holds(g, rho)
            if not ok:
                return False, e
            exact = exact and e
        return True, exact

    def _exists(self, f: Exists, rho: dict) -> tuple[bool, bool]:
        block, parts = self._exists_block(f, rho)
        all_pinned = True
        for sigma, pinned in self._assignments(block, parts, rho):
            all_pinned = all_pinned and pinned
            try:
                v, e = self.holds(F.conj(*parts), {**rho, **sigma})
            except (EvaluationError, QetError):
                continue
            if v and e:
                return True, True
        return False, all_pinned

    def _assignments(self, block, atoms, rho):
        """Candidate instantiations of ``block``: yields (assignment, pinned)."""
        names = [v for v, _ in block]
        if names and all(v in self.forced for v in names):
            yield {v: self.forced[v] for v in names}, True
            return
        types = dict(block)
        count = 0

        def go(sigma: dict, remaining: list, pinned: bool):
            nonlocal count
            if count >= _MAX_INSTANCES:
                return
            if not remaining:
                count += 1
                yield dict(sigma), pinned
                return
            env = {**rho, **sigma}
            best = None
            for v in remaining:
                info = self._bounds(v, atoms, env)
                if info[0]:
                    best = (v, info)
                    break
                if best is None and (info[1] or info[2]):
                    best = (v, info)
            if best is None:
                # sample a free variable first so that defined ones get pinned later
                free = [v for v in remaining if not _defined(v, atoms)]
                best = ((free or remaining)[0], ([], [], []))
            v, (pins, uppers, lowers) = best
            rest = [r for r in remaining if r != v]
            if pins:
                cands, here = pins[:1], True
            else:
                cands, here = self.sampler.candidates(types[v], uppers, lowers, env), False
            for c in cands:
                sigma[v] = c
                yield from go(sigma, rest, pinned and here)
                del sigma[v]

        yield from go({}, names, True)

    def _bounds(self, v: str, atoms, env: dict):
        pins, uppers, lowers = [], [], []
        me = FVar(v)
        for a in atoms:
            if not isinstance(a, Pred) or len(a.args) != 2 or a.name == "ne":
                continue
            lhs, rhs = a.args
            if lhs == me:
                other, flip = rhs, False
            elif rhs == me:
                other, flip = lhs, True
            else:
                if a.name == "eq":
                    pins.extend(self._cons_pin(v, lhs, rhs, env))
                continue
            if v in F.term_fv(other) or not F.term_fv(other) <= set(env):
                continue
            try:
                val = self.term(other, env)
            except (EvaluationError, QetError):
                continue
            if a.name == "eq":
                pins.append(val)
            elif (a.name in ("le", "lt", "sqle")) != flip:
                uppers.append(self.ev.cost(val))
            else:
                lowers.append(self.ev.cost(val))
        return pins, uppers, lowers

    def _cons_pin(self, v: str, lhs, rhs, env: dict) -> list:
        """``c(.., v, ..) = e`` with ``e`` known: ``v`` is the matching argument of ``e``."""
        for pat, other in ((lhs, rhs), (rhs, lhs)):
            m = _cons_pattern(pat)
            if m is None or v not in m[1] or not F.term_fv(other) <= set(env):
                continue
            try:
                val = self.term(other, env)
            except (EvaluationError, QetError):
                continue
            if isinstance(val, ConsVal) and val.name == m[0] and len(val.args) == len(m[1]):
                return [val.args[m[1].index(v)]]
        return []


def _defined(v: str, atoms) -> bool:
    """Some hypothesis ``v = e`` with ``v`` not free in ``e``."""
    me = FVar(v)
    for a in atoms:
        if isinstance(a, Pred) and a.name == "eq" and len(a.args) == 2 and me in a.args:
            other = a.args[1] if a.args[0] == me else a.args[0]
            if v not in F.term_fv(other):
                return True
    return False


def _cons_pattern(t, names=None):
    """``c(X1, ..., Xn)`` with distinct variable arguments: (c, [Xi])."""
    if not isinstance(t, FCS) or not isinstance(t.term, C.CCons):
        return None
    args = t.term.args
    if not all(isinstance(a, C.CVar) for a in args):
        return None
    vs = [a.name for a in args]
    if len(set(vs)) != len(vs) or (names is not None and set(vs) != set(names)):
        return None
    return t.term.name, vs


def _cons_mismatch(block, concl):
    """forall xs. Y != c(xs): (Y, c)."""
    if not isinstance(concl, Pred) or concl.name != "ne":
        return None
    names = [v for v, _ in block]
    a, b = concl.args
    for pat, other in ((b, a), (a, b)):
        m = _cons_pattern(pat, names)
        if m is not None and not (F.term_fv(other) & set(names)):
            return other, m[0]
    return None


# sampling

class Sampler:
    def __init__(self, config: OracleConfig, rng: np.random.Generator, ev: FormulaEvaluator):
        self.cfg = config
        self.rng = rng
        self.ev = ev

    def state(self) -> QState:
        return linalg.random_state(self.rng, int(self.rng.choice(self.cfg.qubits)))

    def number(self) -> float:
        hi = carrier_max(self.cfg.cs)
        r = self.rng.random()
        if math.isinf(hi):
            if r < 0.3:
                return float(self.rng.choice([0.0, 0.5, 1.0, 2.0, 10.0]))
            if r < 0.35:
                return math.inf
            return float(self.rng.exponential(3.0))
        if r < 0.3:
            return float(self.rng.choice([0.0, 0.25, 0.5, 1.0])) * hi
        return float(self.rng.random()) * hi

    def data(self, name: str, depth: int = 0):
        conses = self.cfg.signature.constructors_of(name)
        if not conses:
            raise EvaluationError(f"no constructors for {name}")
        leaves = [c for c in conses if all(a.name != name for a in c.classical_args + c.quantum_args)]
        pick = conses if depth < 6 and self.rng.random() < 0.6 else (leaves or conses)
        c = pick[int(self.rng.integers(len(pick)))]
        args = tuple(self.value(CSBasic(a.name), depth + 1)
                     for a in c.classical_args + c.quantum_args)
        return ConsVal(c.name, args)

    def functions(self, ty: CSType) -> list:
        arity, t = 0, ty
        while isinstance(t, CSArrow):
            arity, t = arity + 1, t.cod
        return [def_function(d, self.ev) for d in self.cfg.defs.values() if len(d.params) == arity]

    def value(self, ty: CSType, depth: int = 0):
        if ty == QBASIC:
            return self.state()
        if ty in (RINF, KTYPE):
            return self.number()
        if isinstance(ty, CSBasic):
            return self.data(ty.name, depth)
        fns = self.functions(ty)
        if not fns:
            raise EvaluationError(f"no candidate functions of type {ty}")
        return fns[int(self.rng.integers(len(fns)))]

    def candidates(self, ty: CSType, uppers, lowers, env, k: int = 3) -> list:
        if ty in (RINF, KTYPE) and (uppers or lowers):
            hi = min(uppers) if uppers else None
            lo = max(lowers) if lowers else 0.0
            out = []
            if hi is not None:
                out.append(hi)
                if math.isfinite(hi):
                    out += [lo + (hi - lo) * float(u) for u in self.rng.random(k - 1)]
            else:
                out += [lo, lo + 1.0, 2 * lo + 10.0]
            return out
        if isinstance(ty, CSArrow):
            return self.functions(ty) or []
        return [self.value(ty) for _ in range(k)]

    # environments

    def environment(self, ctx, needed: frozenset) -> dict | None:
        """One environment satisfying ``ctx``, or None when sampling failed."""
        rho: dict = {}
        for e in ctx:
            if isinstance(e, Fact):
                try:
                    v, _ = self.ev.holds(e.phi, rho)
                except (EvaluationError, QetError):
                    return None
                if not v:
                    return None
                continue
            sk = skeleton(e.type)
            if isinstance(sk, CSArrow) and e.name not in needed:
                continue
            val = self._solved(e.name, ctx, rho)
            if val is None:
                val = self.member_of(e.type, rho)
            if val is None:
                return None
            rho[e.name] = val
        return rho

    def _solved(self, name: str, ctx, rho: dict):
        """The value forced on ``name`` by a later fact ``V = c(..., name, ...)``."""
        for e in ctx:
            if not isinstance(e, Fact) or not isinstance(e.phi, Pred) or e.phi.name != "eq":
                continue
            a, b = e.phi.args
            for pat, other in ((b, a), (a, b)):
                m = _cons_pattern(pat)
                if m is None or name not in m[1] or not F.term_fv(other) <= set(rho):
                    continue
                try:
                    v = self.ev.term(other, rho)
                except (EvaluationError, QetError):
                    continue
                if isinstance(v, ConsVal) and v.name == m[0] and len(v.args) == len(m[1]):
                    return v.args[m[1].index(name)]
        return None

    def member_of(self, t: RefType, rho: dict, tries: int = 8):
        """A sampled element of the interpretation of ``t`` under ``rho``."""
        if isinstance(t, RefBase):
            atoms = F.conjuncts(t.phi)
            pins, uppers, lowers = self.ev._bounds(t.binder, atoms, rho)
            cands = pins[:1] or self.candidates(t.base, uppers, lowers, rho, k=tries)
            if t.base not in (RINF, KTYPE) and not pins:
                cands = [self.value(t.base) for _ in range(tries)]
            for c in cands:
                try:
                    v, _ = self.ev.holds(t.phi, {**rho, t.binder: c})
                except (EvaluationError, QetError):
                    continue
                if v:
                    return c
            return None
        for f in self.functions(skeleton(t)):
            ok, _ = member(f, t, rho, self.ev, points=4)
            if ok:
                return f
        return None


def member(v, t: RefType, rho: dict, ev: FormulaEvaluator, points: int = 8) -> tuple[bool, bool]:
    """Sampled test of ``v`` belonging to the interpretation of ``t`` under ``rho``."""
    if isinstance(t, RefBase):
        return ev.holds(t.phi, {**rho, t.binder: ev.ev.cost(v)
                                if t.base in (RINF, KTYPE) else v})
    exact = True
    for _ in range(points):
        if isinstance(t, DepArrow):
            a = ev.sampler.member_of(t.dom, rho)
            if a is None:
                continue
            out = ev.ev.apply(v, a)
            ok, e = member(out, t.cod, {**rho, t.var: a}, ev, points)
        else:
            a = ev.sampler.member_of(t.bound, rho)
            if a is None:
                continue
            ok, e = member(v, t.body, {**rho, t.var: a}, ev, points)
        if not ok:
            return False, e
        exact = False
    return True, exact


# validity

def syntactic_reason(phi: Formula) -> str | None:
    """A reason when ``phi`` is an instance of a structurally valid schema."""
    body = phi
    while isinstance(body, Forall):
        body = body.body
    hyps: list = []
    while isinstance(body, Implies):
        hyps.extend(F.conjuncts(body.hyp))
        body = body.concl
    if F.BOT in hyps:
        return "false hypothesis"
    goals = F.conjuncts(body)
    if not goals:
        return "trivial conclusion"
    reasons = []
    for g in goals:
        if g in hyps:
            reasons.append("assumption")
        elif (isinstance(g, Pred) and g.name in ("eq", "le", "ge", "sqle")
              and g.args[0] == g.args[1]):
            reasons.append("reflexivity")
        else:
            return None
    return ", ".join(sorted(set(reasons)))


def needed_names(ctx, phi: Formula) -> frozenset:
    from .reftypes import type_fv
    names = set(F.fv(phi))
    for e in ctx:
        names |= F.fv(e.phi) if isinstance(e, Fact) else type_fv(e.type)
    return frozenset(names)


def validity(ctx, phi: Formula, config: OracleConfig | None = None, *,
             samples: int | None = None, seed: int | None = None) -> Verdict:
    """Decide ``ctx |= phi`` as far as sampling allows."""
    cfg = config or OracleConfig()
    n_wanted = cfg.samples if samples is None else samples
    seed = cfg.seed if seed is None else seed
    reason = syntactic_reason(phi)
    if reason is not None:
        return VerifiedSyntactic(reason)
    rng = np.random.default_rng(seed)
    ev = FormulaEvaluator(cfg, rng)
    needed = needed_names(ctx, phi)
    n = 0
    for i in range(max(1, 5 * n_wanted)):
        if n >= n_wanted:
            break
        rho = ev.sampler.environment(ctx, needed)
        if rho is None:
            continue
        n += 1
        ev.instances = {}
        try:
            v, exact = ev.holds(phi, rho)
        except (EvaluationError, QetError):
            continue
        if not v and exact:
            return Falsified(Witness(seed, i, dict(rho), dict(ev.instances), phi))
    return NotFalsified(n, seed)


def replay(witness: Witness, config: OracleConfig | None = None) -> bool:
    """True when the witness still falsifies its formula."""
    cfg = config or OracleConfig()
    ev = FormulaEvaluator(cfg, np.random.default_rng(witness.seed))
    ev.forced = dict(witness.instances)
    v, exact = ev.holds(witness.formula, dict(witness.valuation))
    return not v and exact


def sample_environments(ctx, config: OracleConfig, count: int, seed: int,
                        needed: frozenset = frozenset()) -> list:
    rng = np.random.default_rng(seed)
    ev = FormulaEvaluator(config, rng)
    out = []
    for _ in range(5 * count):
        if len(out) >= count:
            break
        rho = ev.sampler.environment(ctx, needed)
        if rho is not None:
            out.append(rho)
    return out
