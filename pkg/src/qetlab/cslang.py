"""Abstract syntax of the cost-structure language.

The language is in A-normal form: operands of application, gate
arguments, tensor factors, collapse arguments, constructor arguments, case
scrutinees and the weight of a barycentric sum are all values.  The
constructors below do not enforce that; ``cs_typecheck`` does, so that
ill-formed terms can still be built, printed and reported.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Union

from .lexer import format_ket, format_number
from .linalg import QState, Unitary

Loc = Optional[tuple]


# types

@dataclass(frozen=True)
class CSBasic:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class _Atom:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class CSArrow:
    dom: "CSType"
    cod: "CSType"

    def __str__(self):
        d = f"({self.dom})" if isinstance(self.dom, CSArrow) else str(self.dom)
        return f"{d} => {self.cod}"


RINF = _Atom("R")
KTYPE = _Atom("K")
QBASIC = CSBasic("Q")

CSType = Union[CSBasic, _Atom, CSArrow]


def arrows(*ts: CSType) -> CSType:
    """``arrows(A, B, C)`` is ``A => B => C``."""
    out = ts[-1]
    for t in reversed(ts[:-1]):
        out = CSArrow(t, out)
    return out


def is_functional(t: CSType, k_is_rinf: bool = False) -> bool:
    """Membership in the functional types F ::= K | S => F."""
    while isinstance(t, CSArrow):
        t = t.cod
    return t == KTYPE or (k_is_rinf and t == RINF)


# terms

@dataclass(frozen=True)
class CVar:
    name: str
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CLam:
    param: str
    body: "CSTerm"
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CApp:
    fun: "CSTerm"
    arg: "CSTerm"
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CKet:
    state: QState
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CGate:
    gate: Unitary
    arg: "CSTerm"
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CTensor:
    left: "CSTerm"
    right: "CSTerm"
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CMeas:
    """Post-collapse state for outcome ``bit`` on the first qubit."""

    bit: int
    arg: "CSTerm"
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CCons:
    name: str
    args: tuple = ()
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CArm:
    cons: str
    binders: tuple
    body: "CSTerm"


@dataclass(frozen=True)
class CDefault:
    binder: str
    body: "CSTerm"


@dataclass(frozen=True)
class CCase:
    scrutinee: "CSTerm"
    arms: tuple
    default: Optional[CDefault] = None
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CLetrec:
    fun: str
    param: str
    body: "CSTerm"
    ann: Optional[CSType] = None
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CReal:
    value: float
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CAdd:
    """Cost addition: the left operand is a real, the right a cost."""

    left: "CSTerm"
    right: "CSTerm"
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CBary:
    """``left (+p0 weight) right``: left with probability p0 of the weight state."""

    left: "CSTerm"
    weight: "CSTerm"
    right: "CSTerm"
    loc: Loc = field(default=None, compare=False, repr=False)


CSTerm = Union[CVar, CLam, CApp, CKet, CGate, CTensor, CMeas, CCons, CCase, CLetrec,
               CReal, CAdd, CBary]


def is_value(t: CSTerm) -> bool:
    if isinstance(t, (CVar, CLam, CKet, CLetrec, CReal)):
        return True
    if isinstance(t, (CGate, CMeas)):
        return is_value(t.arg)
    if isinstance(t, CTensor):
        return is_value(t.left) and is_value(t.right)
    if isinstance(t, CCons):
        return all(is_value(a) for a in t.args)
    return False


def lams(params: Iterable[str], body: CSTerm) -> CSTerm:
    for p in reversed(list(params)):
        body = CLam(p, body)
    return body


def apps(f: CSTerm, *args: CSTerm) -> CSTerm:
    for a in args:
        f = CApp(f, a)
    return f


# traversal

def children(t: CSTerm) -> list:
    if isinstance(t, (CLam, CLetrec)):
        return [t.body]
    if isinstance(t, CApp):
        return [t.fun, t.arg]
    if isinstance(t, (CGate, CMeas)):
        return [t.arg]
    if isinstance(t, CTensor):
        return [t.left, t.right]
    if isinstance(t, CCons):
        return list(t.args)
    if isinstance(t, CCase):
        out = [t.scrutinee] + [a.body for a in t.arms]
        if t.default is not None:
            out.append(t.default.body)
        return out
    if isinstance(t, CAdd):
        return [t.left, t.right]
    if isinstance(t, CBary):
        return [t.left, t.weight, t.right]
    return []


def subterms(t: CSTerm) -> Iterable[CSTerm]:
    yield t
    for c in children(t):
        yield from subterms(c)


def term_size(t: CSTerm) -> int:
    return sum(1 for _ in subterms(t))


def free_vars(t: CSTerm) -> frozenset:
    if isinstance(t, CVar):
        return frozenset([t.name])
    if isinstance(t, CLam):
        return free_vars(t.body) - {t.param}
    if isinstance(t, CLetrec):
        return free_vars(t.body) - {t.fun, t.param}
    if isinstance(t, CCase):
        out = set(free_vars(t.scrutinee))
        for arm in t.arms:
            out |= free_vars(arm.body) - set(arm.binders)
        if t.default is not None:
            out |= free_vars(t.default.body) - {t.default.binder}
        return frozenset(out)
    return frozenset().union(*(free_vars(c) for c in children(t)))


def bound_names(t: CSTerm) -> set:
    out: set = set()
    for node in subterms(t):
        if isinstance(node, CLam):
            out.add(node.param)
        elif isinstance(node, CLetrec):
            out |= {node.fun, node.param}
        elif isinstance(node, CCase):
            for arm in node.arms:
                out |= set(arm.binders)
            if node.default is not None:
                out.add(node.default.binder)
    return out


def all_names(t: CSTerm) -> set:
    return bound_names(t) | set(free_vars(t))


def fresh_name(base: str, avoid) -> str:
    stem = base.rstrip("0123456789'") or "V"
    for k in itertools.count(1):
        cand = f"{stem}{k}"
        if cand not in avoid:
            return cand


def map_children(t: CSTerm, f: Callable[[CSTerm], CSTerm]) -> CSTerm:
    if isinstance(t, CLam):
        return CLam(t.param, f(t.body), t.loc)
    if isinstance(t, CLetrec):
        return CLetrec(t.fun, t.param, f(t.body), t.ann, t.loc)
    if isinstance(t, CApp):
        return CApp(f(t.fun), f(t.arg), t.loc)
    if isinstance(t, CGate):
        return CGate(t.gate, f(t.arg), t.loc)
    if isinstance(t, CMeas):
        return CMeas(t.bit, f(t.arg), t.loc)
    if isinstance(t, CTensor):
        return CTensor(f(t.left), f(t.right), t.loc)
    if isinstance(t, CCons):
        return CCons(t.name, tuple(map(f, t.args)), t.loc)
    if isinstance(t, CCase):
        arms = tuple(CArm(a.cons, a.binders, f(a.body)) for a in t.arms)
        d = t.default and CDefault(t.default.binder, f(t.default.body))
        return CCase(f(t.scrutinee), arms, d, t.loc)
    if isinstance(t, CAdd):
        return CAdd(f(t.left), f(t.right), t.loc)
    if isinstance(t, CBary):
        return CBary(f(t.left), f(t.weight), f(t.right), t.loc)
    return t


def subst(t: CSTerm, mapping: dict) -> CSTerm:
    """Simultaneous capture-avoiding substitution."""
    if not mapping:
        return t
    fvs = frozenset().union(*(free_vars(v) for v in mapping.values()))
    return _subst(t, dict(mapping), fvs)


def _rebind(names: tuple, body: CSTerm, m: dict, fvs: frozenset):
    inner = {k: v for k, v in m.items() if k not in names}
    if not inner or not any(n in fvs for n in names):
        return names, body, inner
    avoid = set(fvs) | all_names(body) | set(inner) | set(names)
    renames = {}
    new = []
    for n in names:
        if n in fvs:
            fresh = fresh_name(n, avoid)
            avoid.add(fresh)
            renames[n] = CVar(fresh)
            new.append(fresh)
        else:
            new.append(n)
    body = _subst(body, renames, frozenset(v.name for v in renames.values()))
    return tuple(new), body, inner


def _subst(t: CSTerm, m: dict, fvs: frozenset) -> CSTerm:
    if isinstance(t, CVar):
        return m.get(t.name, t)
    if isinstance(t, (CKet, CReal)):
        return t
    if isinstance(t, CLam):
        (p,), body, inner = _rebind((t.param,), t.body, m, fvs)
        return CLam(p, _subst(body, inner, fvs) if inner else body, t.loc)
    if isinstance(t, CLetrec):
        (f, x), body, inner = _rebind((t.fun, t.param), t.body, m, fvs)
        return CLetrec(f, x, _subst(body, inner, fvs) if inner else body, t.ann, t.loc)
    if isinstance(t, CCase):
        arms = []
        for arm in t.arms:
            names, body, inner = _rebind(arm.binders, arm.body, m, fvs)
            arms.append(CArm(arm.cons, names, _subst(body, inner, fvs) if inner else body))
        default = None
        if t.default is not None:
            (y,), body, inner = _rebind((t.default.binder,), t.default.body, m, fvs)
            default = CDefault(y, _subst(body, inner, fvs) if inner else body)
        return CCase(_subst(t.scrutinee, m, fvs), tuple(arms), default, t.loc)
    return map_children(t, lambda c: _subst(c, m, fvs))


# alpha-equivalence

def term_key(t: CSTerm, env: dict | None = None, depth: int = 0, digits: int = 12):
    """Canonical hashable form with bound variables as de Bruijn levels."""
    env = env or {}

    def under(names, body):
        e = dict(env)
        for i, n in enumerate(names):
            e[n] = depth + i
        return term_key(body, e, depth + len(names), digits)

    def k(c):
        return term_key(c, env, depth, digits)

    if isinstance(t, CVar):
        return ("b", depth - 1 - env[t.name]) if t.name in env else ("f", t.name)
    if isinstance(t, CKet):
        return ("ket", t.state.key(digits))
    if isinstance(t, CReal):
        return ("real", round(t.value, digits))
    if isinstance(t, CLam):
        return ("lam", under((t.param,), t.body))
    if isinstance(t, CLetrec):
        return ("letrec", under((t.fun, t.param), t.body))
    if isinstance(t, CGate):
        return ("gate", t.gate.name, k(t.arg))
    if isinstance(t, CMeas):
        return ("meas", t.bit, k(t.arg))
    if isinstance(t, CCons):
        return ("cons", t.name, tuple(map(k, t.args)))
    if isinstance(t, CCase):
        arms = tuple((a.cons, len(a.binders), under(a.binders, a.body)) for a in t.arms)
        dflt = under((t.default.binder,), t.default.body) if t.default else None
        return ("case", k(t.scrutinee), arms, dflt)
    return (type(t).__name__, tuple(map(k, children(t))))


def alpha_eq(a: CSTerm, b: CSTerm) -> bool:
    return term_key(a) == term_key(b)


# pretty printing

_INFIX = (CAdd, CBary)
_OPEN = (CLam, CLetrec, CCase)


def pretty(t: CSTerm) -> str:
    return _Printer().pp(t, 0, frozenset())


class _Printer:
    """Levels: 0 anything, 1 infix operand, 2 application head, 3 atom.

    Gate names are valid variable names in this language, so a gate applied
    under a binder of the same name is printed with the explicit ``gate``
    keyword.
    """

    def pp(self, t: CSTerm, level: int, bound: frozenset) -> str:
        if isinstance(t, CVar):
            return t.name
        if isinstance(t, CKet):
            return format_ket(t.state)
        if isinstance(t, CReal):
            s = f"real {format_number(t.value)}"
            return s if level <= 1 else f"({s})"
        if isinstance(t, CCons):
            if not t.args:
                return t.name
            return f"{t.name}({', '.join(self.pp(a, 0, bound) for a in t.args)})"
        if isinstance(t, CMeas):
            return f"collapse{t.bit}({self.pp(t.arg, 0, bound)})"
        if isinstance(t, CTensor):
            return f"tensor({self.pp(t.left, 0, bound)}, {self.pp(t.right, 0, bound)})"
        if isinstance(t, CGate):
            head = f"gate {t.gate.name}" if t.gate.name in bound else t.gate.name
            s = f"{head} {self.pp(t.arg, 3, bound)}"
            return s if level <= 1 else f"({s})"
        if isinstance(t, CApp):
            s = f"{self.pp(t.fun, 2, bound)} {self.pp(t.arg, 3, bound)}"
            return s if level <= 2 else f"({s})"
        if isinstance(t, CAdd):
            s = f"{self.pp(t.left, 1, bound)} +^ {self.pp(t.right, 0, bound)}"
            return s if level == 0 else f"({s})"
        if isinstance(t, CBary):
            s = (f"{self.pp(t.left, 1, bound)} (+p0 {self.pp(t.weight, 0, bound)}) "
                 f"{self.pp(t.right, 0, bound)}")
            return s if level == 0 else f"({s})"
        if isinstance(t, _OPEN):
            s = self.open(t, bound)
            return s if level == 0 else f"({s})"
        raise TypeError(f"not a cost-structure term: {t!r}")

    def open(self, t: CSTerm, bound: frozenset) -> str:
        if isinstance(t, (CLam, CLetrec)):
            params = [t.param]
            inner = bound | {t.param} | ({t.fun} if isinstance(t, CLetrec) else set())
            body = t.body
            while isinstance(body, CLam):
                params.append(body.param)
                inner = inner | {body.param}
                body = body.body
            b = self.pp(body, 0, inner)
            if isinstance(t, CLam):
                return f"lam {' '.join(params)}. {b}"
            ann = f" : {t.ann}" if t.ann is not None else ""
            return f"letrec {t.fun} {' '.join(params)}{ann} = {b}"
        parts = [f"case {self.pp(t.scrutinee, 0, bound)} of"]
        branches = []
        for arm in t.arms:
            pat = f"{arm.cons}({', '.join(arm.binders)})" if arm.binders else arm.cons
            branches.append((pat, arm.body, bound | set(arm.binders)))
        if t.default is not None:
            branches.append((t.default.binder, t.default.body, bound | {t.default.binder}))
        for i, (pat, body, inner) in enumerate(branches):
            last = i == len(branches) - 1
            lvl = 0 if last or not isinstance(body, _OPEN + _INFIX) else 1
            parts.append(f"| {pat} -> {self.pp(body, lvl, inner)}")
        return " ".join(parts)
