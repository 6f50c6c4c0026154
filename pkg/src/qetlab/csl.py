"""Reader for ``.csl`` cost-structure programs.

The layout mirrors ``.aql``: declarations, optional ``input`` bindings and
``main : S``, then one term.  Extra forms::

    real 0.5                 real constant
    T0 +^ T1                 cost addition
    T0 (+p0 V) T1            barycentric sum weighted by p0 of state V
    collapse0(V) collapse1(V)
    gate H V                 gate application, needed only when H is shadowed

Variable names are unrestricted apart from keywords and constructors.  An
upper-case name that is a declared gate means the gate unless a binder of
that name is in scope.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .aql import SourceParser
from .errors import ParseError
from .lexer import TokenStream, describe, format_complex, num_atom, parse_ket_body, real_of
from .cslang import (KTYPE, RINF, CApp, CArm, CBary, CCase, CCons, CDefault, CGate, CKet,
                     CLam, CLetrec, CMeas, CReal, CSArrow, CSBasic, CSTerm, CSType, CTensor,
                     CVar, CAdd, pretty)
from .linalg import BUILTIN_GATES
from .source import Signature

KEYWORDS = {"lam", "letrec", "case", "of", "ket", "real", "collapse0", "collapse1", "tensor",
            "gate", "data", "qdata", "unitary", "input", "main"}
_DECL = ("data", "qdata", "unitary", "input", "main")


@dataclass
class CSInput:
    name: str
    type: CSType
    value: CSTerm
    pos: Optional[tuple] = None


@dataclass
class CSProgram:
    signature: Signature
    main: Optional[CSTerm]
    main_type: Optional[CSType] = None
    inputs: list = field(default_factory=list)


def basic_type(name: str) -> CSBasic:
    return CSBasic(name)


class CSParser:
    def __init__(self, text: str, signature: Signature | None = None, bound=()):
        self.ts = TokenStream(text)
        self.decls = SourceParser("", signature, stream=self.ts)
        self.sig = self.decls.sig
        self.scope: list[str] = list(bound)

    def program(self) -> CSProgram:
        prog = CSProgram(self.sig, None)
        while self.ts.peek().kind == "IDENT" and self.ts.peek().text in _DECL:
            kw = self.ts.peek().text
            if kw in ("data", "qdata"):
                self.decls.data_decl()
            elif kw == "unitary":
                self.decls.unitary_decl()
            elif kw == "input":
                self.ts.next()
                name = self._binder()
                self.ts.expect(":")
                ty = self.type()
                self.ts.expect("=")
                prog.inputs.append(CSInput(name.text, ty, self.term(), name.pos))
                self.scope.append(name.text)
            else:
                self.ts.next()
                self.ts.expect(":")
                prog.main_type = self.type()
        if not self.ts.at_kind("EOF"):
            prog.main = self.term()
        if not self.ts.at_kind("EOF"):
            self.ts.error(f"unexpected {describe(self.ts.peek())} after the main term")
        return prog

    # types

    def type(self) -> CSType:
        dom = self._type_atom()
        if self.ts.accept("=>"):
            return CSArrow(dom, self.type())
        return dom

    def _type_atom(self) -> CSType:
        if self.ts.accept("("):
            t = self.type()
            self.ts.expect(")")
            return t
        tok = self.ts.expect_kind("IDENT", "type")
        if tok.text in ("R", "Rinf"):
            return RINF
        if tok.text == "K":
            return KTYPE
        if tok.text not in self.sig.types:
            self.ts.error(f"unknown type {tok.text}", tok)
        return basic_type(tok.text)

    # terms

    def _binder(self):
        tok = self.ts.expect_kind("IDENT", "variable")
        if tok.text in KEYWORDS:
            self.ts.error(f"keyword {tok.text!r} cannot be a variable", tok)
        if tok.text in self.sig.constructors:
            self.ts.error(f"{tok.text} is a constructor, not a variable", tok)
        return tok

    def _scoped(self, names, parse):
        n = len(self.scope)
        self.scope.extend(names)
        try:
            return parse()
        finally:
            del self.scope[n:]

    def term(self) -> CSTerm:
        tok = self.ts.peek()
        if self.ts.at("lam"):
            self.ts.next()
            params = [self._binder().text]
            while not self.ts.at("."):
                params.append(self._binder().text)
            self.ts.expect(".")
            body = self._scoped(params, self.term)
            for p in reversed(params):
                body = CLam(p, body, loc=tok.pos)
            return body
        if self.ts.at("letrec"):
            self.ts.next()
            f = self._binder().text
            params = [self._binder().text]
            while not (self.ts.at("=") or self.ts.at(":")):
                params.append(self._binder().text)
            ann = self.type() if self.ts.accept(":") else None
            self.ts.expect("=")
            body = self._scoped([f] + params, self.term)
            for p in reversed(params[1:]):
                body = CLam(p, body, loc=tok.pos)
            return CLetrec(f, params[0], body, ann, loc=tok.pos)
        if self.ts.at("case"):
            return self._case()
        return self._infix()

    def _infix(self) -> CSTerm:
        left = self._app()
        tok = self.ts.peek()
        if self.ts.accept("+^"):
            return CAdd(left, self._rhs(), loc=tok.pos)
        if self.ts.accept("(+p0"):
            weight = self.term()
            self.ts.expect(")")
            return CBary(left, weight, self._rhs(), loc=tok.pos)
        return left

    def _rhs(self) -> CSTerm:
        if self.ts.at("lam") or self.ts.at("letrec") or self.ts.at("case"):
            return self.term()
        return self._infix()

    def _case(self) -> CSTerm:
        tok = self.ts.next()
        scrut = self.term()
        self.ts.expect("of")
        arms: list = []
        default = None
        self.ts.accept("|")
        while True:
            if default is not None:
                self.ts.error("the default branch must come last")
            ptok = self.ts.peek()
            if ptok.kind == "NUM" or (ptok.kind == "IDENT" and ptok.text in self.sig.constructors):
                self.ts.next()
                if ptok.text not in self.sig.constructors:
                    self.ts.error(f"unknown constructor {ptok.text}", ptok)
                binders: list = []
                if self.ts.accept("("):
                    while not self.ts.at(")"):
                        binders.append(self._binder().text)
                        if not (self.ts.accept(",") or self.ts.accept(";")):
                            break
                    self.ts.expect(")")
                self.ts.expect("->")
                body = self._scoped(binders, self.term)
                arms.append(CArm(ptok.text, tuple(binders), body))
            else:
                y = self._binder().text
                if self.ts.at("("):
                    self.ts.error(f"unknown constructor {y}", ptok)
                self.ts.expect("->")
                default = CDefault(y, self._scoped([y], self.term))
            if not self.ts.accept("|"):
                break
        return CCase(scrut, tuple(arms), default, loc=tok.pos)

    def _starts_atom(self) -> bool:
        tok = self.ts.peek()
        if tok.kind == "NUM":
            return True
        if tok.kind == "IDENT":
            return tok.text not in ("lam", "letrec", "case", "of") and tok.text not in _DECL
        return tok.kind == "PUNCT" and tok.text == "("

    def _app(self) -> CSTerm:
        head = self._atom()
        while self._starts_atom():
            tok = self.ts.peek()
            head = CApp(head, self._atom(), loc=tok.pos)
        return head

    def _gate(self, name_tok) -> CSTerm:
        u = self.sig.unitaries.get(name_tok.text)
        if u is None:
            self.ts.error(f"unknown gate {name_tok.text}", name_tok)
        return CGate(u, self._atom(), loc=name_tok.pos)

    def _atom(self) -> CSTerm:
        tok = self.ts.peek()
        if tok.kind == "NUM":
            return self._numeral()
        if tok.kind == "IDENT":
            text = tok.text
            if text == "ket":
                self.ts.next()
                self.ts.expect("[")
                state = parse_ket_body(self.ts)
                self.ts.expect("]")
                return CKet(state, loc=tok.pos)
            if text == "real":
                self.ts.next()
                ntok = self.ts.peek()
                val = real_of(num_atom(self.ts), self.ts, ntok)
                if val < 0:
                    self.ts.error("real constants are non-negative", ntok)
                return CReal(val, loc=tok.pos)
            if text in ("collapse0", "collapse1"):
                self.ts.next()
                self.ts.expect("(")
                arg = self.term()
                self.ts.expect(")")
                return CMeas(int(text[-1]), arg, loc=tok.pos)
            if text == "tensor":
                self.ts.next()
                self.ts.expect("(")
                a = self.term()
                self.ts.expect(",")
                b = self.term()
                self.ts.expect(")")
                return CTensor(a, b, loc=tok.pos)
            if text == "gate":
                self.ts.next()
                return self._gate(self.ts.expect_kind("IDENT", "gate name"))
            if text in self.sig.constructors:
                self.ts.next()
                return self._cons(text, tok)
            if text in self.sig.unitaries and text not in self.scope:
                self.ts.next()
                return self._gate(tok)
            self._binder()
            return CVar(text, loc=tok.pos)
        if self.ts.accept("("):
            t = self.term()
            self.ts.expect(")")
            return t
        self.ts.error(f"expected a term, found {describe(tok)}")

    def _cons(self, name: str, tok) -> CSTerm:
        if not self.ts.at("(") or self.ts.peek().start != tok.end:
            return CCons(name, (), loc=tok.pos)
        self.ts.next()
        args = []
        while not self.ts.at(")"):
            args.append(self.term())
            if not (self.ts.accept(",") or self.ts.accept(";")):
                break
        self.ts.expect(")")
        return CCons(name, tuple(args), loc=tok.pos)

    def _numeral(self) -> CSTerm:
        tok = self.ts.next()
        if tok.text in self.sig.constructors:
            return self._cons(tok.text, tok)
        zero, succ = self.sig.constructors.get("0"), self.sig.constructors.get("s")
        if tok.text.isdigit() and zero is not None and succ is not None:
            t: CSTerm = CCons("0", (), loc=tok.pos)
            for _ in range(int(tok.text)):
                t = CCons("s", (t,), loc=tok.pos)
            return t
        self.ts.error(f"numeral {tok.text} is not a declared constructor; write real {tok.text}"
                      " for a constant", tok)


def parse_cs_program(text: str, signature: Signature | None = None) -> CSProgram:
    return CSParser(text, signature).program()


def parse_cs_term(text: str, signature: Signature | None = None, bound=()) -> CSTerm:
    p = CSParser(text, signature, bound)
    t = p.term()
    if not p.ts.at_kind("EOF"):
        p.ts.error(f"unexpected {describe(p.ts.peek())}")
    return t


def parse_cs_type(text: str, signature: Signature | None = None) -> CSType:
    p = CSParser(text, signature)
    t = p.type()
    if not p.ts.at_kind("EOF"):
        p.ts.error(f"unexpected {describe(p.ts.peek())} in type")
    return t


def load_cs_program(text: str, signature: Signature | None = None) -> CSProgram:
    prog = parse_cs_program(text, signature)
    if prog.main is None:
        raise ParseError("program has no main term")
    return prog


def format_declarations(sig: Signature) -> list[str]:
    """Declarations of ``sig`` beyond the built-in ones, as source lines."""
    builtin = Signature.builtin()
    lines = []
    for name, ty in sig.types.items():
        if name in builtin.types:
            continue
        conses = []
        for c in sig.constructors_of(name):
            args = ", ".join(a.name for a in c.classical_args)
            if c.quantum_args:
                args += "; " + ", ".join(a.name for a in c.quantum_args)
            elif c.classical_args:
                args += ";"
            conses.append(f"{c.name}({args})" if args else c.name)
        rhs = f" = {' | '.join(conses)}" if conses else ""
        lines.append(f"{'data' if ty.classical else 'qdata'} {name}{rhs}")
    for name, u in sig.unitaries.items():
        if name in BUILTIN_GATES and BUILTIN_GATES[name] == u:
            continue
        rows = ", ".join("[" + ", ".join(format_complex(complex(z)) for z in row) + "]"
                         for row in u.matrix)
        lines.append(f"unitary {name} = [{rows}]")
    return lines


def format_cs_program(prog: CSProgram) -> str:
    lines = format_declarations(prog.signature)
    for inp in prog.inputs:
        lines.append(f"input {inp.name} : {inp.type} = {pretty(inp.value)}")
    if prog.main_type is not None:
        lines.append(f"main : {prog.main_type}")
    if prog.main is not None:
        lines.append(pretty(prog.main))
    return "\n".join(lines) + "\n"
