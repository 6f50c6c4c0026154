"""The quantum expectation transformer: source terms to cost-structure terms.

``translate_term(t, k)`` produces a term of type K in which ``k`` receives
the value of ``t``; ticks become ``real 1 +^ ...`` and measurements become
barycentric sums over the two collapsed states.  The output is the raw CPS
term, administrative redexes included.

Source variable ``x`` becomes ``X``.  Fresh binders introduced by the
translation are drawn from reserved stems (``K`` for continuations, ``W``
for intermediate values) and never clash with translated names.
"""

from __future__ import annotations

import itertools

from . import source as S
from .cslang import (KTYPE, CAdd, CApp, CArm, CBary, CCase, CCons, CDefault, CGate, CKet, CLam,
                     CLetrec, CMeas, CReal, CSArrow, CSBasic, CSTerm, CSType, CTensor, CVar,
                     free_vars as cs_free_vars)
from .csl import KEYWORDS as CS_KEYWORDS
from .source import Signature, SourceType


def translate_type(t: SourceType) -> CSType:
    if isinstance(t, S.Basic):
        return CSBasic(t.name)
    return CSArrow(translate_type(t.dom), CSArrow(CSArrow(translate_type(t.cod), KTYPE), KTYPE))


def zero_continuation(binder: str = "Z") -> CSTerm:
    """The continuation that ignores its argument and returns 0."""
    return CLam(binder, CReal(0.0))


def _capitalize(name: str) -> str:
    head = name.lstrip("_")
    prefix = name[: len(name) - len(head)]
    return prefix + head[:1].upper() + head[1:]


class Translator:
    """Holds the variable naming for one translation."""

    def __init__(self, signature: Signature | None = None, reserved=()):
        self.sig = signature or Signature.builtin()
        self.names: dict[str, str] = {}
        self.taken: set[str] = set(reserved)
        self._counter = itertools.count()

    def _blocked(self, name: str) -> bool:
        return (name in self.taken or name in CS_KEYWORDS or name in self.sig.unitaries
                or name in self.sig.constructors or _reserved(name))

    def var_name(self, x: str) -> str:
        """The CS variable standing for source variable ``x``."""
        if x not in self.names:
            cand = _capitalize(x)
            while self._blocked(cand):
                cand += "'"
            self.names[x] = cand
            self.taken.add(cand)
        return self.names[x]

    def fresh(self, stem: str) -> str:
        while True:
            cand = f"{stem}{next(self._counter)}"
            if cand not in self.taken:
                self.taken.add(cand)
                return cand

    # values

    def value(self, v: S.Term, env: dict | None = None) -> CSTerm:
        env = env or {}
        if isinstance(v, S.Var):
            return CVar(env.get(v.name) or self.var_name(v.name), v.loc)
        if isinstance(v, S.Ket):
            return CKet(v.state, v.loc)
        if isinstance(v, S.Cons):
            return CCons(v.name, tuple(self.value(a, env) for a in S.cons_args(v)), v.loc)
        if isinstance(v, S.Lam):
            x = self._bind(v.param, env)
            k = self.fresh("K")
            body = self.term(v.body, CVar(k), x[1])
            return CLam(x[0], CLam(k, body), v.loc)
        if isinstance(v, S.Letrec):
            f = self._bind(v.fun, env)
            x = self._bind(v.param, f[1])
            k = self.fresh("K")
            body = self.term(v.body, CVar(k), x[1])
            return CLetrec(f[0], x[0], CLam(k, body), None, v.loc)
        raise TypeError(f"not a source value: {S.pretty(v)}")

    def _bind(self, x: str, env: dict, avoid=frozenset()) -> tuple[str, dict]:
        """Name for a binder of ``x``; renamed when it would capture ``avoid``."""
        name = self.var_name(x)
        if name in avoid:
            name = self.fresh(name.rstrip("'") + "_")
        return name, {**env, x: name}

    # terms

    def term(self, t: S.Term, k: CSTerm, env: dict | None = None) -> CSTerm:
        env = env or {}
        if S.is_value(t):
            return CApp(k, self.value(t, env), t.loc)
        if isinstance(t, S.App):
            x1, x0 = self.fresh("W"), self.fresh("W")
            inner = CLam(x0, CApp(CApp(CVar(x0), CVar(x1)), k))
            return self.term(t.arg, CLam(x1, self.term(t.fun, inner, env)), env)
        if isinstance(t, S.UnitaryApp):
            x = self.fresh("W")
            return self.term(t.arg, CLam(x, CApp(k, CGate(t.gate, CVar(x)))), env)
        if isinstance(t, S.Meas):
            x = self.fresh("W")
            outcomes = [CApp(k, CCons(f"inj{b}", (CMeas(b, CVar(x)),))) for b in (0, 1)]
            return self.term(t.arg, CLam(x, CBary(outcomes[0], CVar(x), outcomes[1])), env)
        if isinstance(t, S.Tensor):
            x1, x0 = self.fresh("W"), self.fresh("W")
            inner = CLam(x0, CApp(k, CTensor(CVar(x0), CVar(x1))))
            return self.term(t.right, CLam(x1, self.term(t.left, inner, env)), env)
        if isinstance(t, S.Cons):
            args = S.cons_args(t)
            names = [self.fresh("W") for _ in args]
            out: CSTerm = CApp(k, CCons(t.name, tuple(CVar(n) for n in names)))
            # innermost continuation belongs to the argument evaluated last
            for a, n in zip(args, names):
                out = self.term(a, CLam(n, out), env)
            return out
        if isinstance(t, S.Case):
            x = self.fresh("W")
            avoid = cs_free_vars(k)
            arms = []
            for arm in t.arms:
                names, inner = [], env
                for b in arm.classical_binders + arm.quantum_binders:
                    n, inner = self._bind(b, inner, avoid)
                    names.append(n)
                arms.append(CArm(arm.cons, tuple(names), self.term(arm.body, k, inner)))
            default = None
            if t.default is not None:
                y, inner = self._bind(t.default.binder, env, avoid)
                default = CDefault(y, self.term(t.default.body, k, inner))
            return self.term(t.scrutinee, CLam(x, CCase(CVar(x), tuple(arms), default)), env)
        if isinstance(t, S.Tick):
            return CAdd(CReal(1.0), self.term(t.arg, k, env), t.loc)
        raise TypeError(f"not a source term: {S.pretty(t)}")


def _reserved(name: str) -> bool:
    return len(name) > 1 and name[0] in "KW" and name[1:].isdigit()


def translate_value(v: S.Term, signature: Signature | None = None) -> CSTerm:
    return Translator(signature).value(v)


def translate_term(t: S.Term, k: CSTerm, signature: Signature | None = None,
                   translator: Translator | None = None) -> CSTerm:
    tr = translator or Translator(signature, reserved=cs_free_vars(k))
    return tr.term(t, k)
