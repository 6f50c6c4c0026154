"""Simple type checking for cost-structure terms.

Terms produced by the transformer carry no annotations, so checking is
inference by unification.  A real constant may be used at R or at K: it
gets a numeric metavariable that must end up at one of the two, and at K
its value must lie in the carrier of the chosen cost structure.  When the
cost structure is the extended reals, K and R are identified.  Anything
still unconstrained after inference defaults to K.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .costs import CostStructure, RPlus
from .cslang import (KTYPE, QBASIC, RINF, CAdd, CApp, CBary, CCase, CCons, CGate, CKet, CLam,
                     CLetrec, CMeas, CReal, CSArrow, CSBasic, CSTerm, CSType, CTensor, CVar,
                     is_functional, is_value)
from .errors import CSTypeError, NotFunctionalType, OperandNotValue
from .source import Signature

_ids = itertools.count()


@dataclass(eq=False)
class Meta:
    id: int = field(default_factory=lambda: next(_ids))
    ref: Optional[object] = None
    numeric: bool = False

    def __str__(self):
        return f"?{self.id}"


class CSChecker:
    def __init__(self, signature: Signature | None = None, cs: CostStructure | None = None):
        self.sig = signature or Signature.builtin()
        self.cs = cs
        self.k_is_rinf = isinstance(cs, RPlus)
        self.reals: list = []
        self.letrecs: list = []
        self.scrutinees: list = []
        self.types: dict = {}

    # unification

    def resolve(self, t):
        while isinstance(t, Meta) and t.ref is not None:
            t = t.ref
        if self.k_is_rinf and t == KTYPE:
            return RINF
        return t

    def zonk(self, t, default: bool = False) -> CSType:
        t = self.resolve(t)
        if isinstance(t, Meta):
            if not default:
                return t
            t.ref = RINF if self.k_is_rinf else KTYPE
            return self.resolve(t)
        if isinstance(t, CSArrow):
            return CSArrow(self.zonk(t.dom, default), self.zonk(t.cod, default))
        return t

    def _occurs(self, m: Meta, t) -> bool:
        t = self.resolve(t)
        if t is m:
            return True
        return isinstance(t, CSArrow) and (self._occurs(m, t.dom) or self._occurs(m, t.cod))

    def unify(self, a, b, node, rule: str, what: str = ""):
        a, b = self.resolve(a), self.resolve(b)
        if a is b or a == b:
            return
        if isinstance(b, Meta) and not isinstance(a, Meta):
            a, b = b, a
        if isinstance(a, Meta):
            if isinstance(b, Meta):
                b.numeric = b.numeric or a.numeric
                a.ref = b
                return
            if a.numeric and b not in (RINF, KTYPE):
                self._mismatch("a real constant", b, node, rule, what)
            if self._occurs(a, b):
                raise CSTypeError(f"infinite type {a} = {self.zonk(b)}", pos=_pos(node), rule=rule)
            a.ref = b
            return
        if isinstance(a, CSArrow) and isinstance(b, CSArrow):
            self.unify(a.dom, b.dom, node, rule, what)
            self.unify(a.cod, b.cod, node, rule, what)
            return
        self._mismatch(self.zonk(a), b, node, rule, what)

    def _mismatch(self, a, b, node, rule, what):
        about = f" for {what}" if what else ""
        raise CSTypeError(f"type mismatch{about}: {a} vs {self.zonk(b)}", pos=_pos(node), rule=rule)

    # rules

    def _value(self, t: CSTerm, rule: str, role: str):
        if not is_value(t):
            raise OperandNotValue(f"{role} must be a value", pos=_pos(t), rule=rule)

    def infer(self, ctx: dict, t: CSTerm):
        ty = self._infer(ctx, t)
        self.types[id(t)] = ty
        return ty

    def _infer(self, ctx: dict, t: CSTerm):
        if isinstance(t, CVar):
            if t.name not in ctx:
                raise CSTypeError(f"unbound variable {t.name}", pos=_pos(t), rule="ax")
            return ctx[t.name]
        if isinstance(t, CLam):
            m = Meta()
            return CSArrow(m, self.infer({**ctx, t.param: m}, t.body))
        if isinstance(t, CApp):
            self._value(t.arg, "=>e", "the operand of an application")
            tf = self.infer(ctx, t.fun)
            ta = self.infer(ctx, t.arg)
            res = Meta()
            tf_r = self.resolve(tf)
            if not isinstance(tf_r, (CSArrow, Meta)):
                raise CSTypeError(f"applying a term of type {self.zonk(tf_r)}", pos=_pos(t),
                                  rule="=>e")
            self.unify(tf, CSArrow(ta, res), t, "=>e", "the argument")
            return res
        if isinstance(t, CKet):
            return QBASIC
        if isinstance(t, (CGate, CMeas)):
            rule = "un" if isinstance(t, CGate) else "meas"
            self._value(t.arg, rule, "the argument")
            self.unify(self.infer(ctx, t.arg), QBASIC, t, rule)
            return QBASIC
        if isinstance(t, CTensor):
            for side in (t.left, t.right):
                self._value(side, "prod", "a tensor factor")
                self.unify(self.infer(ctx, side), QBASIC, side, "prod")
            return QBASIC
        if isinstance(t, CCons):
            sig = self._constructor(t.name, t, "cons")
            formal = sig.classical_args + sig.quantum_args
            if len(formal) != len(t.args):
                raise CSTypeError(f"{t.name} expects {len(formal)} arguments, got {len(t.args)}",
                                  pos=_pos(t), rule="cons")
            for a, b in zip(t.args, formal):
                self._value(a, "cons", "a constructor argument")
                self.unify(self.infer(ctx, a), CSBasic(b.name), a, "cons", t.name)
            return CSBasic(sig.result.name)
        if isinstance(t, CCase):
            return self._case(ctx, t)
        if isinstance(t, CLetrec):
            m, dom = Meta(), Meta()
            if t.ann is not None:
                if not is_functional(t.ann, self.k_is_rinf):
                    raise NotFunctionalType(f"letrec {t.fun} cannot have type {t.ann}",
                                            pos=_pos(t), rule="rec")
                self.unify(m, t.ann, t, "rec")
            body = self.infer({**ctx, t.fun: m, t.param: dom}, t.body)
            self.unify(m, CSArrow(dom, body), t, "rec")
            self.letrecs.append((t, m))
            return m
        if isinstance(t, CReal):
            if not (t.value >= 0):
                raise CSTypeError(f"real constant {t.value} is negative", pos=_pos(t), rule="real")
            m = Meta(numeric=True)
            self.reals.append((t, m))
            return m
        if isinstance(t, CAdd):
            self.unify(self.infer(ctx, t.left), RINF, t.left, "+^", "the added cost")
            self.unify(self.infer(ctx, t.right), KTYPE, t.right, "+^")
            return KTYPE
        if isinstance(t, CBary):
            self._value(t.weight, "bary", "the weight of a barycentric sum")
            self.unify(self.infer(ctx, t.weight), QBASIC, t.weight, "bary", "the weight")
            self.unify(self.infer(ctx, t.left), KTYPE, t.left, "bary")
            self.unify(self.infer(ctx, t.right), KTYPE, t.right, "bary")
            return KTYPE
        raise CSTypeError(f"not a cost-structure term: {t!r}")

    def _constructor(self, name, node, rule):
        sig = self.sig.constructors.get(name)
        if sig is None:
            raise CSTypeError(f"unknown constructor {name}", pos=_pos(node), rule=rule)
        return sig

    def _case(self, ctx: dict, t: CCase):
        self._value(t.scrutinee, "case", "the scrutinee")
        st = self.infer(ctx, t.scrutinee)
        basic = None
        seen = set()
        for arm in t.arms:
            sig = self._constructor(arm.cons, t, "case")
            if basic is None:
                basic = sig.result.name
            elif sig.result.name != basic:
                raise CSTypeError(f"constructor {arm.cons} does not build {basic}", pos=_pos(t),
                                  rule="case")
            if arm.cons in seen:
                raise CSTypeError(f"duplicate branch for {arm.cons}", pos=_pos(t), rule="case")
            seen.add(arm.cons)
        if basic is not None:
            self.unify(st, CSBasic(basic), t.scrutinee, "case", "the scrutinee")
            if t.default is None:
                missing = [c.name for c in self.sig.constructors_of(basic) if c.name not in seen]
                if missing:
                    raise CSTypeError(f"case has no branch for {', '.join(missing)}",
                                      pos=_pos(t), rule="case")
        else:
            if t.default is None:
                raise CSTypeError("case without branches", pos=_pos(t), rule="case")
            self.scrutinees.append((t, st))
        result = Meta()
        for arm in t.arms:
            sig = self.sig.constructors[arm.cons]
            formal = sig.classical_args + sig.quantum_args
            if len(formal) != len(arm.binders):
                raise CSTypeError(f"pattern {arm.cons} binds {len(arm.binders)} variables, "
                                  f"expected {len(formal)}", pos=_pos(t), rule="case")
            inner = {**ctx, **{x: CSBasic(b.name) for x, b in zip(arm.binders, formal)}}
            self.unify(self.infer(inner, arm.body), result, arm.body, "case", "a branch")
        if t.default is not None:
            body = self.infer({**ctx, t.default.binder: st}, t.default.body)
            self.unify(body, result, t.default.body, "case", "the default branch")
        return result

    def finish(self, ty) -> CSType:
        """Default leftover metavariables and run the deferred side conditions."""
        out = self.zonk(ty, default=True)
        for node, m in self.letrecs:
            ft = self.zonk(m, default=True)
            if not is_functional(ft, self.k_is_rinf):
                raise NotFunctionalType(f"letrec {node.fun} has type {ft}, which is not "
                                        "functional (K or S => F)", pos=_pos(node), rule="rec")
        for node, st in self.scrutinees:
            if not isinstance(self.zonk(st, default=True), CSBasic):
                raise CSTypeError("case scrutinee must have a basic type", pos=_pos(node),
                                  rule="case")
        for node, m in self.reals:
            at = self.zonk(m, default=True)
            if at == KTYPE and self.cs is not None and not self.cs.contains(node.value):
                raise CSTypeError(f"constant {node.value} is outside the carrier of "
                                  f"{self.cs.name}", pos=_pos(node), rule="real")
        return out


def _pos(node):
    return getattr(node, "loc", None)


def cs_typecheck(theta: dict | None, term: CSTerm, expected: CSType | None = None, *,
                 signature: Signature | None = None,
                 cs: CostStructure | None = None) -> CSType:
    """Check ``theta |- term : expected`` (or infer when ``expected`` is None).

    Returns the resolved type.  Raises CSTypeError or one of its subclasses.
    """
    chk = CSChecker(signature, cs)
    if expected is not None and isinstance(term, CLetrec):
        exp = chk.resolve(expected)
        if not isinstance(exp, Meta) and not is_functional(exp, chk.k_is_rinf):
            raise NotFunctionalType(f"letrec {term.fun} cannot have type {exp}",
                                    pos=_pos(term), rule="rec")
    ty = chk.infer(dict(theta or {}), term)
    if expected is not None:
        chk.unify(ty, expected, term, "check", "the term")
    return chk.finish(ty)


def check_cs_program(prog, cs: CostStructure | None = None) -> tuple[CSType, dict]:
    """Type the inputs in order, then the main term.  Returns (type, theta)."""
    theta: dict = {}
    for inp in prog.inputs:
        cs_typecheck(theta, inp.value, inp.type, signature=prog.signature, cs=cs)
        theta[inp.name] = inp.type
    if prog.main is None:
        raise CSTypeError("program has no main term")
    ty = cs_typecheck(theta, prog.main, prog.main_type, signature=prog.signature, cs=cs)
    return ty, theta
