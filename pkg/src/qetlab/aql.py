"""Reader for ``.aql`` source programs.

A program is a preamble of declarations followed by one main term::

    data Nat = 0 | s(Nat;)
    unitary G = [[...]]
    input y : Q = ket[1|0>]
    main : Q
    letrec ct x : Q -o Q = case tick(meas x) of
      | inj0(;x0) -> x0
      | inj1(;x1) -> ct (H x1)

Variables start with a lower-case letter or underscore; upper-case names
are reserved for gates and types.  Constructors are whatever the preamble
declares (``inj0``/``inj1`` are built in).  When ``0`` and ``s`` build a
type, numerals such as ``3`` abbreviate ``s(s(s(0;););)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import InvalidUnitary, ParseError, QetError
from .lexer import TokenStream, describe, parse_ket_body, parse_matrix
from .linalg import Unitary
from .source import (App, Arm, Basic, Case, Cons, ConsSignature, Default, ExpArrow, Ket,
                     Lam, Letrec, LinArrow, Meas, Signature, SourceType, Tensor, Term, Tick,
                     UnitaryApp, Var)

KEYWORDS = {"lam", "letrec", "case", "of", "ket", "meas", "tick", "tensor",
            "data", "qdata", "unitary", "input", "main"}


@dataclass
class InputDecl:
    name: str
    type: SourceType
    value: Term
    pos: Optional[tuple] = None


@dataclass
class Program:
    signature: Signature
    main: Optional[Term]
    main_type: Optional[SourceType] = None
    inputs: list = field(default_factory=list)
    # constructor declarations as written, validated by the checker
    data_decls: list = field(default_factory=list)

    def sigma(self) -> dict:
        return {d.name: d.value for d in self.inputs}


class SourceParser:
    def __init__(self, text: str, signature: Signature | None = None, *,
                 stream: TokenStream | None = None):
        self.ts = stream if stream is not None else TokenStream(text)
        self.sig = signature.copy() if signature is not None else Signature.builtin()

    # declarations

    def program(self) -> Program:
        prog = Program(self.sig, None)
        while self.ts.peek().kind == "IDENT" and self.ts.peek().text in (
                "data", "qdata", "unitary", "input", "main"):
            kw = self.ts.peek().text
            if kw in ("data", "qdata"):
                prog.data_decls.extend(self.data_decl())
            elif kw == "unitary":
                self.unitary_decl()
            elif kw == "input":
                prog.inputs.append(self.input_decl())
            else:
                self.ts.next()
                self.ts.expect(":")
                prog.main_type = self.type()
        if not self.ts.at_kind("EOF"):
            prog.main = self.term()
        if not self.ts.at_kind("EOF"):
            self.ts.error(f"unexpected {describe(self.ts.peek())} after the main term")
        return prog

    def data_decl(self) -> list:
        kw = self.ts.next()
        name = self.ts.expect_kind("IDENT", "type name")
        try:
            result = self.sig.declare_type(name.text, kw.text == "data", pos=name.pos)
        except QetError as exc:
            raise ParseError(exc.message, pos=name.pos) from None
        out = []
        if self.ts.accept("="):
            self.ts.accept("|")
            while True:
                out.append(self.cons_decl(result))
                if not self.ts.accept("|"):
                    break
        return out

    def cons_decl(self, result: Basic):
        tok = self.ts.next()
        if tok.kind not in ("IDENT", "NUM"):
            self.ts.error(f"expected a constructor name, found {describe(tok)}", tok)
        cargs: list = []
        qargs: list = []
        if self.ts.accept("("):
            first = self._type_list()
            if self.ts.accept(";"):
                cargs, qargs = first, self._type_list()
            else:
                cargs = [t for t in first if t.classical]
                qargs = [t for t in first if not t.classical]
                if first != cargs + qargs:
                    self.ts.error("classical constructor arguments must precede quantum ones")
            self.ts.expect(")")
        sig = ConsSignature(tok.text, tuple(cargs), tuple(qargs), result)
        try:
            self.sig.declare_constructor(sig, pos=tok.pos)
        except QetError as exc:
            raise ParseError(exc.message, pos=tok.pos) from None
        return sig, tok.pos

    def _type_list(self) -> list:
        out = []
        if self.ts.at(")") or self.ts.at(";"):
            return out
        while True:
            tok = self.ts.peek()
            t = self.type()
            if not isinstance(t, Basic):
                self.ts.error("constructor arguments must have basic types", tok)
            out.append(t)
            if not self.ts.accept(","):
                return out

    def unitary_decl(self):
        self.ts.next()
        name = self.ts.expect_kind("IDENT", "unitary name")
        if not name.text[0].isupper():
            self.ts.error("unitary names start with an upper-case letter", name)
        self.ts.expect("=")
        mat = parse_matrix(self.ts)
        try:
            u = Unitary.from_matrix(name.text, mat)
            self.sig.declare_unitary(u, pos=name.pos)
        except (InvalidUnitary, QetError) as exc:
            raise ParseError(exc.message, pos=name.pos) from None

    def input_decl(self) -> InputDecl:
        self.ts.next()
        name = self.ts.expect_kind("IDENT", "variable")
        self._check_var(name)
        self.ts.expect(":")
        ty = self.type()
        self.ts.expect("=")
        return InputDecl(name.text, ty, self.term(), name.pos)

    # types

    def type(self) -> SourceType:
        dom = self._type_atom()
        if self.ts.accept("-o"):
            return LinArrow(dom, self.type())
        if self.ts.accept("=>"):
            return ExpArrow(dom, self.type())
        return dom

    def _type_atom(self) -> SourceType:
        if self.ts.accept("("):
            t = self.type()
            self.ts.expect(")")
            return t
        tok = self.ts.expect_kind("IDENT", "type")
        if tok.text not in self.sig.types:
            self.ts.error(f"unknown type {tok.text}", tok)
        return self.sig.types[tok.text]

    # terms

    def term(self) -> Term:
        tok = self.ts.peek()
        if self.ts.at("lam"):
            self.ts.next()
            params = [self._binder()]
            while not self.ts.at("."):
                params.append(self._binder())
            self.ts.expect(".")
            body = self.term()
            for p in reversed(params):
                body = Lam(p, body, loc=tok.pos)
            return body
        if self.ts.at("letrec"):
            self.ts.next()
            f = self._binder()
            params = [self._binder()]
            while not (self.ts.at("=") or self.ts.at(":")):
                params.append(self._binder())
            ann = self.type() if self.ts.accept(":") else None
            self.ts.expect("=")
            body = self.term()
            # the extra parameters keep the matching tail of the annotation
            tails = []
            rest = ann
            for _ in params[1:]:
                rest = rest.cod if isinstance(rest, (LinArrow, ExpArrow)) else None
                tails.append(rest)
            for p, ty in reversed(list(zip(params[1:], tails))):
                body = Lam(p, body, ty, loc=tok.pos)
            return Letrec(f, params[0], body, ann, loc=tok.pos)
        if self.ts.at("case"):
            return self._case()
        return self._app()

    def _case(self) -> Term:
        tok = self.ts.next()
        scrut = self.term()
        self.ts.expect("of")
        arms: list = []
        default = None
        first = True
        while self.ts.at("|") or first:
            if not self.ts.accept("|") and not first:
                break
            first = False
            if default is not None:
                self.ts.error("the default branch must come last")
            ptok = self.ts.peek()
            if ptok.kind == "NUM" or (ptok.kind == "IDENT" and ptok.text in self.sig.constructors):
                self.ts.next()
                if ptok.text not in self.sig.constructors:
                    self.ts.error(f"unknown constructor {ptok.text}", ptok)
                cb, qb = self._pattern_binders(ptok.text)
                self.ts.expect("->")
                arms.append(Arm(ptok.text, cb, qb, self.term()))
            elif ptok.kind == "IDENT" and ptok.text[:1].isupper():
                self.ts.error(f"unknown constructor {ptok.text}", ptok)
            else:
                y = self._binder()
                if self.ts.at("("):
                    self.ts.error(f"unknown constructor {y}", ptok)
                self.ts.expect("->")
                default = Default(y, self.term())
        return Case(scrut, tuple(arms), default, loc=tok.pos)

    def _pattern_binders(self, cname: str):
        sig = self.sig.constructors[cname]
        if not self.ts.accept("("):
            return (), ()
        first = self._binder_list()
        if self.ts.accept(";"):
            second = self._binder_list()
            self.ts.expect(")")
            return tuple(first), tuple(second)
        self.ts.expect(")")
        k = len(sig.classical_args) if sig.classical_args else 0
        if not sig.classical_args:
            return (), tuple(first)
        return tuple(first[:k]), tuple(first[k:])

    def _binder_list(self) -> list:
        out = []
        if self.ts.at(")") or self.ts.at(";"):
            return out
        out.append(self._binder())
        while self.ts.accept(","):
            out.append(self._binder())
        return out

    def _binder(self) -> str:
        tok = self.ts.expect_kind("IDENT", "variable")
        self._check_var(tok)
        return tok.text

    def _check_var(self, tok):
        if tok.text in KEYWORDS:
            self.ts.error(f"keyword {tok.text!r} cannot be a variable", tok)
        if not (tok.text[0].islower() or tok.text[0] == "_"):
            self.ts.error(f"variable names start with a lower-case letter: {tok.text}", tok)
        if tok.text in self.sig.constructors:
            self.ts.error(f"{tok.text} is a constructor, not a variable", tok)

    def _starts_atom(self) -> bool:
        tok = self.ts.peek()
        if tok.kind == "NUM":
            return True
        if tok.kind == "IDENT":
            return tok.text not in ("lam", "letrec", "case", "of") and tok.text not in (
                "data", "qdata", "unitary", "input", "main")
        return tok.kind == "PUNCT" and tok.text == "("

    def _app(self) -> Term:
        head = self._atom()
        while self._starts_atom():
            tok = self.ts.peek()
            head = App(head, self._atom(), loc=tok.pos)
        return head

    def _atom(self) -> Term:
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
                return Ket(state, loc=tok.pos)
            if text == "meas":
                self.ts.next()
                return Meas(self._atom(), loc=tok.pos)
            if text == "tick":
                self.ts.next()
                return Tick(self._atom(), loc=tok.pos)
            if text == "tensor":
                self.ts.next()
                self.ts.expect("(")
                a = self.term()
                self.ts.expect(",")
                b = self.term()
                self.ts.expect(")")
                return Tensor(a, b, loc=tok.pos)
            if text in self.sig.unitaries:
                self.ts.next()
                return UnitaryApp(self.sig.unitaries[text], self._atom(), loc=tok.pos)
            if text in self.sig.constructors:
                self.ts.next()
                return self._cons(text, tok)
            if text[0].isupper():
                self.ts.error(f"unknown gate or constructor {text}", tok)
            self._check_var(tok)
            self.ts.next()
            return Var(text, loc=tok.pos)
        if self.ts.accept("("):
            t = self.term()
            if self.ts.accept(":"):
                ann = self.type()
                if isinstance(t, Lam):
                    t = Lam(t.param, t.body, ann, t.loc)
                elif isinstance(t, Letrec):
                    t = Letrec(t.fun, t.param, t.body, ann, t.loc)
                else:
                    self.ts.error("type ascriptions are only supported on lam and letrec", tok)
            self.ts.expect(")")
            return t
        self.ts.error(f"expected a term, found {describe(tok)}")

    def _cons(self, name: str, tok) -> Term:
        sig = self.sig.constructors[name]
        if not self.ts.at("(") or self.ts.peek().start != tok.end:
            return Cons(name, (), (), loc=tok.pos)
        self.ts.next()
        first = self._term_list()
        if self.ts.accept(";"):
            second = self._term_list()
            self.ts.expect(")")
            return Cons(name, tuple(first), tuple(second), loc=tok.pos)
        self.ts.expect(")")
        if not sig.classical_args:
            return Cons(name, (), tuple(first), loc=tok.pos)
        k = len(sig.classical_args)
        return Cons(name, tuple(first[:k]), tuple(first[k:]), loc=tok.pos)

    def _term_list(self) -> list:
        out = []
        if self.ts.at(")") or self.ts.at(";"):
            return out
        out.append(self.term())
        while self.ts.accept(","):
            out.append(self.term())
        return out

    def _numeral(self) -> Term:
        tok = self.ts.next()
        if tok.text in self.sig.constructors:
            return self._cons(tok.text, tok)
        zero, succ = self.sig.constructors.get("0"), self.sig.constructors.get("s")
        if (tok.text.isdigit() and zero is not None and succ is not None
                and succ.classical_args == (zero.result,) and succ.result == zero.result):
            t: Term = Cons("0", (), (), loc=tok.pos)
            for _ in range(int(tok.text)):
                t = Cons("s", (t,), (), loc=tok.pos)
            return t
        self.ts.error(f"numeral {tok.text} is not a declared constructor", tok)


def parse_program(text: str, signature: Signature | None = None) -> Program:
    return SourceParser(text, signature).program()


def parse(text: str, signature: Signature | None = None) -> tuple[Signature, Term]:
    """Parse declarations and a main term; the main term is required."""
    prog = parse_program(text, signature)
    if prog.main is None:
        raise ParseError("program has no main term")
    return prog.signature, prog.main


def parse_term(text: str, signature: Signature | None = None) -> Term:
    p = SourceParser(text, signature)
    t = p.term()
    if not p.ts.at_kind("EOF"):
        p.ts.error(f"unexpected {describe(p.ts.peek())}")
    return t


def parse_type(text: str, signature: Signature | None = None) -> SourceType:
    p = SourceParser(text, signature)
    t = p.type()
    if not p.ts.at_kind("EOF"):
        p.ts.error(f"unexpected {describe(p.ts.peek())} in type")
    return t
