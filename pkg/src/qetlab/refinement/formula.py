"""First-order formulae over cost-structure values.

Formula terms are arithmetic over reals (``+ - * /``, ``min``, ``max``),
measurement probabilities ``p0``/``p1``, the cost operations ``cadd`` and
``bary``, calls of user definitions or function-typed variables, and
embedded cost-structure values (gates, collapses, tensors, kets,
constructors, lambdas) wrapped in ``FCS``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .. import cslang as C
from ..cslang import KTYPE, QBASIC, RINF, CSArrow, CSBasic, CSTerm, CSType
from ..errors import CSTypeError, IllTypedFormula, RefUnboundVariable
from ..lexer import format_number


# terms

@dataclass(frozen=True)
class FVar:
    name: str


@dataclass(frozen=True)
class FNum:
    value: float


@dataclass(frozen=True)
class FOp:
    op: str  # + - * / min max cadd bary
    args: tuple


@dataclass(frozen=True)
class FCall:
    fn: Union[str, "FTerm"]  # builtin or definition name, or a function-valued term
    args: tuple


@dataclass(frozen=True)
class FCS:
    term: CSTerm


FTerm = Union[FVar, FNum, FOp, FCall, FCS]

BUILTINS = {"p0": 1, "p1": 1}
ARITH = {"+", "-", "*", "/", "min", "max"}


# formulae

@dataclass(frozen=True)
class Pred:
    name: str  # eq ne le lt ge gt sqle true false
    args: tuple = ()


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class Implies:
    hyp: "Formula"
    concl: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    type: CSType
    body: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    type: CSType
    body: "Formula"


Formula = Union[Pred, Not, And, Or, Implies, Forall, Exists]

TOP = Pred("true")
BOT = Pred("false")
RELATIONS = {"eq": "=", "ne": "!=", "le": "<=", "lt": "<", "ge": ">=", "gt": ">", "sqle": "[="}
NUMERIC_RELATIONS = {"le", "lt", "ge", "gt", "sqle"}


def conj(*items: Formula) -> Formula:
    flat: list = []
    for f in items:
        if isinstance(f, And):
            flat.extend(f.items)
        elif f != TOP:
            flat.append(f)
    if not flat:
        return TOP
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def conjuncts(f: Formula) -> list:
    if isinstance(f, And):
        return [g for item in f.items for g in conjuncts(item)]
    return [] if f == TOP else [f]


def rel(name: str, a: FTerm, b: FTerm) -> Pred:
    return Pred(name, (a, b))


def exists_many(binders, body: Formula) -> Formula:
    for x, ty in reversed(list(binders)):
        body = Exists(x, ty, body)
    return body


# conversions with CS values

def from_cs(v: CSTerm) -> FTerm:
    if isinstance(v, C.CVar):
        return FVar(v.name)
    if isinstance(v, C.CReal):
        return FNum(float(v.value))
    return FCS(v)


def to_cs(t: FTerm) -> CSTerm | None:
    if isinstance(t, FVar):
        return C.CVar(t.name)
    if isinstance(t, FNum):
        return C.CReal(t.value) if t.value >= 0 else None
    if isinstance(t, FCS):
        return t.term
    return None


# free variables and substitution

def term_fv(t: FTerm) -> frozenset:
    if isinstance(t, FVar):
        return frozenset({t.name})
    if isinstance(t, FNum):
        return frozenset()
    if isinstance(t, FOp):
        return frozenset().union(*(term_fv(a) for a in t.args))
    if isinstance(t, FCall):
        head = frozenset() if isinstance(t.fn, str) else term_fv(t.fn)
        return head.union(*(term_fv(a) for a in t.args))
    if isinstance(t, FCS):
        return C.free_vars(t.term)
    raise TypeError(t)


def fv(f: Formula) -> frozenset:
    if isinstance(f, Pred):
        return frozenset().union(*(term_fv(a) for a in f.args))
    if isinstance(f, Not):
        return fv(f.body)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(fv(g) for g in f.items))
    if isinstance(f, Implies):
        return fv(f.hyp) | fv(f.concl)
    if isinstance(f, (Forall, Exists)):
        return fv(f.body) - {f.var}
    raise TypeError(f)


def bound_vars(f: Formula) -> set:
    if isinstance(f, Pred):
        return set()
    if isinstance(f, Not):
        return bound_vars(f.body)
    if isinstance(f, (And, Or)):
        return set().union(*(bound_vars(g) for g in f.items))
    if isinstance(f, Implies):
        return bound_vars(f.hyp) | bound_vars(f.concl)
    return {f.var} | bound_vars(f.body)


def fresh(base: str, avoid) -> str:
    stem = base.rstrip("0123456789'") or "V"
    i = 0
    while True:
        cand = f"{stem}{i}"
        if cand not in avoid:
            return cand
        i += 1


def subst_term(t: FTerm, m: dict) -> FTerm:
    if not m:
        return t
    if isinstance(t, FVar):
        return m.get(t.name, t)
    if isinstance(t, FNum):
        return t
    if isinstance(t, FOp):
        return FOp(t.op, tuple(subst_term(a, m) for a in t.args))
    if isinstance(t, FCall):
        fn = t.fn if isinstance(t.fn, str) else subst_term(t.fn, m)
        return FCall(fn, tuple(subst_term(a, m) for a in t.args))
    if isinstance(t, FCS):
        inner = {}
        for x, r in m.items():
            if x not in C.free_vars(t.term):
                continue
            cs = to_cs(r)
            if cs is None:
                raise IllTypedFormula(f"cannot place {pretty_term(r)} inside a value")
            inner[x] = cs
        return from_cs(C.subst(t.term, inner)) if inner else t
    raise TypeError(t)


def subst(f: Formula, m: dict) -> Formula:
    """Capture-avoiding substitution of formula terms for variables."""
    m = {x: r for x, r in m.items() if x in fv(f)}
    if not m:
        return f
    if isinstance(f, Pred):
        return Pred(f.name, tuple(subst_term(a, m) for a in f.args))
    if isinstance(f, Not):
        return Not(subst(f.body, m))
    if isinstance(f, And):
        return And(tuple(subst(g, m) for g in f.items))
    if isinstance(f, Or):
        return Or(tuple(subst(g, m) for g in f.items))
    if isinstance(f, Implies):
        return Implies(subst(f.hyp, m), subst(f.concl, m))
    inner = {x: r for x, r in m.items() if x != f.var}
    incoming = frozenset().union(*(term_fv(r) for r in inner.values()))
    var, body = f.var, f.body
    if var in incoming:
        var = fresh(var, incoming | fv(body) | set(inner))
        body = subst(body, {f.var: FVar(var)})
    return type(f)(var, f.type, subst(body, inner))


def rename(f: Formula, old: str, new: str) -> Formula:
    return subst(f, {old: FVar(new)}) if old != new else f


# printing, in the .rty syntax

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def pretty_term(t: FTerm, level: int = 0) -> str:
    if isinstance(t, FVar):
        return t.name
    if isinstance(t, FNum):
        return format_number(t.value)
    if isinstance(t, FOp):
        if t.op in _PREC:
            p = _PREC[t.op]
            a, b = t.args
            s = f"{pretty_term(a, p)} {t.op} {pretty_term(b, p + 1)}"
            return f"({s})" if p < level else s
        return f"{t.op}({', '.join(pretty_term(a) for a in t.args)})"
    if isinstance(t, FCall):
        head = t.fn if isinstance(t.fn, str) else pretty_term(t.fn, 3)
        return f"{head}({', '.join(pretty_term(a) for a in t.args)})"
    if isinstance(t, FCS):
        return pretty_cs(t.term)
    raise TypeError(t)


def pretty_cs(t: CSTerm) -> str:
    """CS values in call syntax: H(X), collapse1(X), tensor(A, B), inj0(X)."""
    if isinstance(t, C.CGate):
        return f"{t.gate.name}({pretty_cs(t.arg)})"
    if isinstance(t, C.CMeas):
        return f"collapse{t.bit}({pretty_cs(t.arg)})"
    if isinstance(t, C.CTensor):
        return f"tensor({pretty_cs(t.left)}, {pretty_cs(t.right)})"
    if isinstance(t, C.CCons):
        return t.name if not t.args else f"{t.name}({', '.join(map(pretty_cs, t.args))})"
    if isinstance(t, (C.CVar, C.CKet, C.CReal)):
        return C.pretty(t) if not isinstance(t, C.CReal) else format_number(t.value)
    return f"({C.pretty(t)})"


def pretty_type(t: CSType) -> str:
    return str(t)


def pretty(f: Formula, level: int = 0) -> str:
    """Levels: 0 implication, 1 disjunction, 2 conjunction, 3 atom."""
    if isinstance(f, Pred):
        if f.name in ("true", "false"):
            return f.name
        if f.name in RELATIONS:
            a, b = f.args
            return f"{pretty_term(a)} {RELATIONS[f.name]} {pretty_term(b)}"
        return f"{f.name}({', '.join(pretty_term(a) for a in f.args)})"
    if isinstance(f, Not):
        return f"~{pretty(f.body, 3)}"
    if isinstance(f, (Forall, Exists)):
        kw = "forall" if isinstance(f, Forall) else "exists"
        s = f"{kw} {f.var} : {pretty_type(f.type)}. {pretty(f.body)}"
        return f"({s})" if level > 0 else s
    if isinstance(f, Implies):
        s = f"{pretty(f.hyp, 1)} => {pretty(f.concl, 0)}"
        return f"({s})" if level > 0 else s
    if isinstance(f, Or):
        s = " \\/ ".join(pretty(g, 2) for g in f.items)
        return f"({s})" if level > 1 else s
    if isinstance(f, And):
        s = " /\\ ".join(pretty(g, 3) for g in f.items)
        return f"({s})" if level > 2 else s
    raise TypeError(f)


# simple typing of formulae

@dataclass(frozen=True)
class Definition:
    """A user function ``name(params) = body`` usable inside formulae."""

    name: str
    params: tuple  # ((name, CSType), ...)
    result: CSType
    body: FTerm


def is_numeric(t: CSType) -> bool:
    return t in (RINF, KTYPE)


class FormulaTyper:
    def __init__(self, signature, cs=None, defs: dict | None = None):
        self.sig = signature
        self.cs = cs
        self.defs = defs or {}

    def term(self, env: dict, t: FTerm) -> CSType:
        if isinstance(t, FVar):
            if t.name in env:
                return env[t.name]
            d = self.defs.get(t.name)
            if d is None:
                raise RefUnboundVariable(f"unbound variable {t.name}")
            return C.arrows(*(ty for _, ty in d.params), d.result)
        if isinstance(t, FNum):
            if not t.value >= 0:
                raise IllTypedFormula(f"constant {t.value} is not in the reals")
            return RINF
        if isinstance(t, FOp):
            tys = [self.term(env, a) for a in t.args]
            if t.op in ARITH:
                self._numeric(t, tys)
                return RINF
            if t.op == "cadd":
                self._arity(t, tys, 2)
                self._numeric(t, tys)
                return KTYPE
            if t.op == "bary":
                self._arity(t, tys, 3)
                self._numeric(t, [tys[0], tys[2]])
                if tys[1] != QBASIC:
                    raise IllTypedFormula("the weight of bary must be a state")
                return KTYPE
            raise IllTypedFormula(f"unknown operation {t.op}")
        if isinstance(t, FCall):
            tys = [self.term(env, a) for a in t.args]
            if isinstance(t.fn, str):
                if t.fn in BUILTINS:
                    self._arity(t, tys, 1)
                    if tys[0] != QBASIC:
                        raise IllTypedFormula(f"{t.fn} expects a state, got {tys[0]}")
                    return RINF
                d = self.defs.get(t.fn)
                if d is None:
                    if t.fn in env:
                        return self._apply(env[t.fn], tys, t.fn)
                    raise RefUnboundVariable(f"unknown function {t.fn}")
                self._arity(t, tys, len(d.params))
                for (x, want), got in zip(d.params, tys):
                    if not _compatible(want, got):
                        raise IllTypedFormula(f"{t.fn}: argument {x} should be {want}, got {got}")
                return d.result
            return self._apply(self.term(env, t.fn), tys, pretty_term(t.fn))
        if isinstance(t, FCS):
            from ..cstypes import cs_typecheck
            missing = C.free_vars(t.term) - set(env)
            if missing:
                raise RefUnboundVariable(f"unbound variable {sorted(missing)[0]}")
            try:
                return cs_typecheck(env, t.term, signature=self.sig, cs=self.cs)
            except CSTypeError as exc:
                raise IllTypedFormula(exc.message) from None
        raise TypeError(t)

    def _apply(self, fty: CSType, tys, what) -> CSType:
        for a in tys:
            if not isinstance(fty, CSArrow):
                raise IllTypedFormula(f"{what} is applied to too many arguments")
            if not _compatible(fty.dom, a):
                raise IllTypedFormula(f"{what} expects {fty.dom}, got {a}")
            fty = fty.cod
        return fty

    @staticmethod
    def _arity(t, tys, n):
        if len(tys) != n:
            raise IllTypedFormula(f"{pretty_term(t)} expects {n} arguments")

    @staticmethod
    def _numeric(t, tys):
        for ty in tys:
            if not is_numeric(ty):
                raise IllTypedFormula(f"{pretty_term(t)}: {ty} is not numeric")

    def formula(self, env: dict, f: Formula) -> None:
        if isinstance(f, Pred):
            if f.name in ("true", "false"):
                return
            if f.name not in RELATIONS:
                raise IllTypedFormula(f"unknown predicate {f.name}")
            a, b = (self.term(env, x) for x in f.args)
            if f.name in NUMERIC_RELATIONS:
                if not (is_numeric(a) and is_numeric(b)):
                    raise IllTypedFormula(f"{pretty(f)} compares non-numeric values")
            elif not _compatible(a, b) or isinstance(a, CSArrow):
                raise IllTypedFormula(f"{pretty(f)} compares {a} with {b}")
            return
        if isinstance(f, Not):
            return self.formula(env, f.body)
        if isinstance(f, (And, Or)):
            for g in f.items:
                self.formula(env, g)
            return
        if isinstance(f, Implies):
            self.formula(env, f.hyp)
            return self.formula(env, f.concl)
        if isinstance(f, (Forall, Exists)):
            return self.formula({**env, f.var: f.type}, f.body)
        raise TypeError(f)


def _compatible(a: CSType, b: CSType) -> bool:
    if is_numeric(a) and is_numeric(b):
        return True
    if isinstance(a, CSArrow) and isinstance(b, CSArrow):
        return _compatible(a.dom, b.dom) and _compatible(a.cod, b.cod)
    return a == b


__all__ = [
    "FVar", "FNum", "FOp", "FCall", "FCS", "Pred", "Not", "And", "Or", "Implies", "Forall",
    "Exists", "TOP", "BOT", "Definition", "FormulaTyper", "conj", "conjuncts", "rel", "fv",
    "term_fv", "subst", "subst_term", "pretty", "pretty_term", "from_cs", "to_cs", "fresh",
    "exists_many", "rename", "bound_vars", "is_numeric",
]
