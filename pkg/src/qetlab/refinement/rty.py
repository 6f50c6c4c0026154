"""Reader for ``.rty`` refinement specifications.

An ``.rty`` file is a sequence of directives followed by the type::

    -- the cost bound of cointoss
    cs rplus
    def c(X : Q) : R = 1 + 2 * p1(X)
    let Y : Q
    assume p1(Y) <= 1/2
    inst c = c
    type (X : Q) => {Z : R | Z <= c(X)}

Types: ``{Z : I | phi}`` (``{Z | phi}`` refines K), a bare base type,
``(x : t) => t``, ``t => t`` and ``forall x : t. t``.  Formulae use
``=> \\/ /\\ ~``, ``forall``/``exists x : S.``, the relations
``= != <= < >= > [=`` and terms built from ``+ - * /``, ``min``, ``max``,
``cadd``, ``bary``, ``p0``, ``p1``, ``inf``, calls, and CS values such as
``H(X)``, ``collapse1(X)``, ``tensor(A, B)``, ``inj0(A)`` or ``ket[|0>]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from ..costs import CostStructure, by_name
from ..csl import CSParser
from ..cslang import KTYPE, CSType
from ..errors import ParseError
from ..lexer import describe
from ..source import Signature
from . import formula as F
from .formula import (And, Definition, Exists, FCall, FNum, FOp, Forall, Formula,
                      FormulaTyper, FVar, Implies, Not, Or, Pred)
from .oracle import DEFAULT_SAMPLES, OracleConfig
from .reftypes import Bind, DepArrow, Fact, ForallType, RefBase, RefType, check_closed, wf

_REL = {"=": "eq", "!=": "ne", "<=": "le", "<": "lt", ">=": "ge", ">": "gt", "[=": "sqle"}
_OPS = {"min", "max", "cadd", "bary"}


@dataclass
class RtySpec:
    signature: Signature
    cs_name: str = "rplus"
    defs: dict = field(default_factory=dict)
    ctx: tuple = ()
    inst: dict = field(default_factory=dict)
    type: Optional[RefType] = None

    @property
    def cs(self) -> CostStructure:
        return by_name(self.cs_name)

    def config(self, samples: int = DEFAULT_SAMPLES, seed: int = 0, **kw) -> OracleConfig:
        return OracleConfig(self.signature, self.cs, dict(self.defs), samples, seed, **kw)


class RtyParser(CSParser):
    def __init__(self, text: str, signature: Signature | None = None):
        super().__init__(text, signature)
        self.defs: dict = {}

    # the file

    def spec(self) -> RtySpec:
        out = RtySpec(self.sig)
        ctx: list = []
        while True:
            tok = self.ts.peek()
            if tok.kind == "IDENT" and tok.text in ("data", "qdata"):
                self.decls.data_decl()
            elif tok.kind == "IDENT" and tok.text == "unitary":
                self.decls.unitary_decl()
            elif self.ts.accept("cs"):
                name = self.ts.expect_kind("IDENT", "cost structure name")
                try:
                    by_name(name.text)
                except (KeyError, ValueError):
                    self.ts.error(f"unknown cost structure {name.text}", name)
                out.cs_name = name.text
            elif self.ts.at("def"):
                d = self.definition()
                self.defs[d.name] = d
            elif self.ts.accept("let"):
                name = self._binder()
                self.ts.expect(":")
                ctx.append(Bind(name.text, self.rtype()))
                self.scope.append(name.text)
            elif self.ts.accept("assume"):
                ctx.append(Fact(self.formula()))
            elif self.ts.accept("inst"):
                name = self.ts.expect_kind("IDENT", "variable")
                self.ts.expect("=")
                out.inst[name.text] = self.fterm()
            else:
                break
        if not self.ts.at_kind("EOF"):
            self.ts.accept("type")
            out.type = self.rtype()
        if not self.ts.at_kind("EOF"):
            self.ts.error(f"unexpected {describe(self.ts.peek())}")
        out.defs, out.ctx = dict(self.defs), tuple(ctx)
        return out

    def definition(self) -> Definition:
        self.ts.expect("def")
        name = self._binder()
        self.ts.expect("(")
        params = []
        while not self.ts.at(")"):
            x = self._binder()
            self.ts.expect(":")
            params.append((x.text, self.type()))
            if not self.ts.accept(","):
                break
        self.ts.expect(")")
        self.ts.expect(":")
        result = self.type()
        self.ts.expect("=")
        body = self._with([x for x, _ in params], self.fterm)
        d = Definition(name.text, tuple(params), result, body)
        FormulaTyper(self.sig, None, {**self.defs, d.name: d}).term(dict(params), body)
        return d

    def _with(self, names, parse):
        n = len(self.scope)
        self.scope.extend(names)
        try:
            return parse()
        finally:
            del self.scope[n:]

    # refinement types

    def rtype(self) -> RefType:
        if self.ts.accept("forall"):
            x = self._binder().text
            self.ts.expect(":")
            bound = self.rtype()
            self.ts.expect(".")
            return ForallType(x, bound, self._with([x], self.rtype))
        if self.ts.at("(") and self.ts.at_kind("IDENT", 1) and self.ts.at(":", 2):
            self.ts.next()
            x = self._binder().text
            self.ts.expect(":")
            dom = self.rtype()
            self.ts.expect(")")
            self.ts.expect("=>")
            return DepArrow(x, dom, self._with([x], self.rtype))
        dom = self._rtype_atom()
        if self.ts.accept("=>"):
            return DepArrow("_", dom, self.rtype())
        return dom

    def _rtype_atom(self) -> RefType:
        if self.ts.accept("("):
            t = self.rtype()
            self.ts.expect(")")
            return t
        if self.ts.accept("{"):
            z = self._binder().text
            base: CSType = KTYPE
            if self.ts.accept(":"):
                base = self._type_atom()
            self.ts.expect("|")
            phi = self._with([z], self.formula)
            self.ts.expect("}")
            return RefBase(base, z, phi)
        return RefBase(self._type_atom())

    # formulae

    def formula(self) -> Formula:
        if self.ts.at("forall") or self.ts.at("exists"):
            kind = Forall if self.ts.next().text == "forall" else Exists
            x = self._binder().text
            self.ts.expect(":")
            ty = self.type()
            self.ts.expect(".")
            return kind(x, ty, self._with([x], self.formula))
        hyp = self._disj()
        if self.ts.accept("=>"):
            return Implies(hyp, self.formula())
        return hyp

    def _disj(self) -> Formula:
        items = [self._conj()]
        while self.ts.accept("\\/"):
            items.append(self._conj())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def _conj(self) -> Formula:
        items = [self._neg()]
        while self.ts.accept("/\\"):
            items.append(self._neg())
        return items[0] if len(items) == 1 else And(tuple(items))

    def _neg(self) -> Formula:
        if self.ts.accept("~"):
            return Not(self._neg())
        return self._fatom()

    def _fatom(self) -> Formula:
        if self.ts.accept("true"):
            return F.TOP
        if self.ts.accept("false"):
            return F.BOT
        if self.ts.at("forall") or self.ts.at("exists"):
            return self.formula()
        if self.ts.at("("):
            mark = self.ts.i
            try:
                self.ts.next()
                f = self.formula()
                self.ts.expect(")")
                if not self._at_rel():
                    return f
            except ParseError:
                pass
            self.ts.i = mark
        a = self.fterm()
        tok = self.ts.peek()
        if not self._at_rel():
            self.ts.error(f"expected a relation, found {describe(tok)}")
        self.ts.next()
        return Pred(_REL[tok.text], (a, self.fterm()))

    def _at_rel(self) -> bool:
        tok = self.ts.peek()
        return tok.kind == "PUNCT" and tok.text in _REL

    # formula terms

    def fterm(self):
        t = self._fprod()
        while self.ts.at("+") or self.ts.at("-"):
            op = self.ts.next().text
            t = FOp(op, (t, self._fprod()))
        return t

    def _fprod(self):
        t = self._fatom_term()
        while self.ts.at("*") or self.ts.at("/"):
            op = self.ts.next().text
            t = FOp(op, (t, self._fatom_term()))
        return t

    def _args(self) -> tuple:
        self.ts.expect("(")
        args = []
        while not self.ts.at(")"):
            args.append(self.fterm())
            if not self.ts.accept(","):
                break
        self.ts.expect(")")
        return tuple(args)

    def _fatom_term(self):
        tok = self.ts.peek()
        if tok.kind == "NUM":
            self.ts.next()
            return FNum(float(tok.text))
        if self.ts.at("("):
            if self.ts.at("lam", 1) or self.ts.at("letrec", 1) or self.ts.at("case", 1):
                return F.from_cs(self._atom())
            self.ts.next()
            t = self.fterm()
            self.ts.expect(")")
            return t
        if tok.kind != "IDENT":
            self.ts.error(f"expected a term, found {describe(tok)}")
        name = tok.text
        if name == "inf":
            self.ts.next()
            return FNum(math.inf)
        if name in F.BUILTINS or name in _OPS:
            self.ts.next()
            args = self._args()
            return FCall(name, args) if name in F.BUILTINS else FOp(name, args)
        if name in self.defs and name not in self.scope and self._adjacent_paren_at(1):
            self.ts.next()
            return FCall(name, self._args())
        if (name in self.scope or name in self.defs) and self._adjacent_paren_at(1):
            self.ts.next()
            return FCall(FVar(name), self._args())
        if name in self.scope or name in self.defs:
            self.ts.next()
            return FVar(name)
        # a cost-structure value: gate, collapse, tensor, constructor, ket, real or variable
        return F.from_cs(self._atom())

    def _adjacent_paren_at(self, k: int) -> bool:
        tok, nxt = self.ts.peek(k - 1), self.ts.peek(k)
        return nxt.kind == "PUNCT" and nxt.text == "(" and nxt.start == tok.end


def parse_rty(text: str, signature: Signature | None = None) -> RtySpec:
    """Parse and check a specification: well-formed context, closed and well-formed type."""
    p = RtyParser(text, signature)
    spec = p.spec()
    wf(spec.ctx, spec.type or RefBase(KTYPE), spec.signature, spec.cs, spec.defs)
    if spec.type is not None:
        check_closed(spec.ctx, spec.type)
    return spec


def parse_formula(text: str, signature: Signature | None = None, bound=(), defs=None):
    p = RtyParser(text, signature)
    p.scope.extend(bound)
    p.defs = dict(defs or {})
    f = p.formula()
    if not p.ts.at_kind("EOF"):
        p.ts.error(f"unexpected {describe(p.ts.peek())}")
    return f


def parse_rtype(text: str, signature: Signature | None = None, bound=(), defs=None) -> RefType:
    p = RtyParser(text, signature)
    p.scope.extend(bound)
    p.defs = dict(defs or {})
    t = p.rtype()
    if not p.ts.at_kind("EOF"):
        p.ts.error(f"unexpected {describe(p.ts.peek())}")
    return t


def parse_definition(text: str, signature: Signature | None = None, defs=None) -> Definition:
    p = RtyParser(text, signature)
    p.defs = dict(defs or {})
    return p.definition()
