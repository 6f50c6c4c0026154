"""Tokenizer and small parsing helpers shared by the .aql, .csl and .rty readers."""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import InvalidState, ParseError
from .linalg import QState

PUNCT = [
    "(+p0", "+^", "-o", "->", "=>", "<=", ">=", "!=", "[=", "/\\", "\\/",
    "(", ")", "[", "]", "{", "}", ",", ";", ":", ".", "|", "=", "+", "-",
    "*", "/", "^", "<", ">", "~",
]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_NUM = re.compile(r"\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")
_BASIS = re.compile(r"\|([01]*)>")


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, NUM, BASIS, PUNCT, EOF
    text: str
    line: int
    col: int
    end: int  # offset just past the token, for adjacency checks
    start: int

    @property
    def pos(self) -> tuple[int, int]:
        return (self.line, self.col)


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i, line, line_start = 0, 1, 0
    n = len(src)
    while i < n:
        ch = src[i]
        if ch == "\n":
            i += 1
            line, line_start = line + 1, i
            continue
        if ch.isspace():
            i += 1
            continue
        if src.startswith("--", i):
            while i < n and src[i] != "\n":
                i += 1
            continue
        col = i - line_start + 1
        m = _BASIS.match(src, i)
        if m:
            toks.append(Token("BASIS", m.group(1), line, col, m.end(), i))
            i = m.end()
            continue
        m = _IDENT.match(src, i)
        if m:
            toks.append(Token("IDENT", m.group(0), line, col, m.end(), i))
            i = m.end()
            continue
        m = _NUM.match(src, i)
        if m:
            toks.append(Token("NUM", m.group(0), line, col, m.end(), i))
            i = m.end()
            continue
        for p in PUNCT:
            if src.startswith(p, i):
                if p == "-o" and i + 2 < n and (src[i + 2].isalnum() or src[i + 2] == "_"):
                    continue
                toks.append(Token("PUNCT", p, line, col, i + len(p), i))
                i += len(p)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", pos=(line, col))
    toks.append(Token("EOF", "", line, i - line_start + 1, i, i))
    return toks


class TokenStream:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "EOF":
            self.i += 1
        return tok

    def at(self, text: str, k: int = 0) -> bool:
        tok = self.peek(k)
        return tok.kind in ("PUNCT", "IDENT") and tok.text == text

    def at_kind(self, kind: str, k: int = 0) -> bool:
        return self.peek(k).kind == kind

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if not self.at(text):
            self.error(f"expected {text!r}, found {describe(tok)}")
        return self.next()

    def expect_kind(self, kind: str, what: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            self.error(f"expected {what or kind.lower()}, found {describe(tok)}")
        return self.next()

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise ParseError(msg, pos=tok.pos)


def describe(tok: Token) -> str:
    if tok.kind == "EOF":
        return "end of input"
    if tok.kind == "BASIS":
        return f"basis ket |{tok.text}>"
    return repr(tok.text)


# numeric expressions (ket coefficients, matrix entries, real constants)

_FUNCS = {
    "sqrt": cmath.sqrt, "exp": cmath.exp, "log": cmath.log,
    "sin": cmath.sin, "cos": cmath.cos, "tan": cmath.tan,
    "asin": cmath.asin, "acos": cmath.acos, "atan": cmath.atan,
}
_CONSTS = {"pi": math.pi, "i": 1j}


def num_sum(ts: TokenStream) -> complex:
    val = num_prod(ts)
    while ts.at("+") or ts.at("-"):
        op = ts.next().text
        rhs = num_prod(ts)
        val = val + rhs if op == "+" else val - rhs
    return val


def num_prod(ts: TokenStream) -> complex:
    val = num_unary(ts)
    while ts.at("*") or ts.at("/"):
        op = ts.next().text
        rhs = num_unary(ts)
        if op == "*":
            val = val * rhs
        else:
            if rhs == 0:
                ts.error("division by zero")
            val = val / rhs
    return val


def num_unary(ts: TokenStream) -> complex:
    if ts.accept("-"):
        return -num_unary(ts)
    if ts.accept("+"):
        return num_unary(ts)
    base = num_atom(ts)
    if ts.accept("^"):
        return base ** num_unary(ts)
    return base


def num_atom(ts: TokenStream) -> complex:
    tok = ts.peek()
    if tok.kind == "NUM":
        ts.next()
        val: complex = float(tok.text)
        nxt = ts.peek()
        if nxt.kind == "IDENT" and nxt.text == "i" and nxt.start == tok.end:
            ts.next()
            val = val * 1j
        return val
    if tok.kind == "IDENT" and tok.text in _FUNCS:
        ts.next()
        ts.expect("(")
        arg = num_sum(ts)
        ts.expect(")")
        return _FUNCS[tok.text](arg)
    if tok.kind == "IDENT" and tok.text in _CONSTS:
        ts.next()
        return _CONSTS[tok.text]
    if ts.accept("("):
        val = num_sum(ts)
        ts.expect(")")
        return val
    ts.error(f"expected a number, found {describe(tok)}")


def real_of(z: complex, ts: TokenStream, tok: Token | None = None) -> float:
    if abs(z.imag) > 1e-12:
        ts.error("expected a real number", tok)
    return float(z.real)


def parse_ket_body(ts: TokenStream) -> QState:
    """Parse ``c|bits> + ...`` up to (not including) the closing bracket."""
    start = ts.peek()
    terms: dict[str, complex] = {}
    width = None
    first = True
    while not ts.at("]"):
        sign = 1
        if ts.at("+") or ts.at("-"):
            sign = -1 if ts.next().text == "-" else 1
        elif not first:
            ts.error(f"expected '+' or '-' between ket terms, found {describe(ts.peek())}")
        coef: complex = 1
        if not ts.at_kind("BASIS"):
            coef = num_prod(ts)
        bits = ts.expect_kind("BASIS", "basis ket like |01>").text
        if width is None:
            width = len(bits)
        elif len(bits) != width:
            ts.error("basis kets of different lengths in one ket literal")
        terms[bits] = terms.get(bits, 0) + sign * coef
        first = False
    if width is None:
        ts.error("empty ket literal", start)
    amps = np.zeros(2 ** width, dtype=np.complex128)
    for bits, c in terms.items():
        amps[int(bits, 2) if bits else 0] = c
    norm = float(np.linalg.norm(amps))
    if abs(norm - 1) > 1e-6:
        raise ParseError(f"ket literal has norm {norm:.9g}; expected 1", pos=start.pos)
    try:
        return QState(width, amps if abs(norm - 1) < 1e-12 else amps / norm)
    except InvalidState as exc:
        raise ParseError(exc.message, pos=start.pos) from None


def parse_matrix(ts: TokenStream) -> np.ndarray:
    start = ts.peek()
    ts.expect("[")
    rows = []
    while True:
        ts.expect("[")
        row = [num_sum(ts)]
        while ts.accept(","):
            row.append(num_sum(ts))
        ts.expect("]")
        rows.append(row)
        if not ts.accept(","):
            break
    ts.expect("]")
    if len({len(r) for r in rows}) != 1:
        raise ParseError("matrix rows have different lengths", pos=start.pos)
    return np.array(rows, dtype=np.complex128)


def format_number(x: float) -> str:
    if x == math.inf:
        return "inf"
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def format_complex(z: complex) -> str:
    if abs(z.imag) == 0:
        return format_number(z.real) if z.real >= 0 else "-" + format_number(-z.real)
    if z.real == 0:
        return f"{format_number(z.imag)}i" if z.imag >= 0 else f"-{format_number(-z.imag)}i"
    sign = "+" if z.imag >= 0 else "-"
    return f"({format_number(z.real) if z.real >= 0 else '-' + format_number(-z.real)}" \
           f"{sign}{format_number(abs(z.imag))}i)"


def format_ket(s: QState) -> str:
    parts = []
    for bits, amp in s.terms():
        if amp.imag == 0 and amp.real < 0:
            sign, mag = "-", format_complex(complex(-amp.real, 0))
        else:
            sign, mag = "+", format_complex(amp)
        coef = "" if mag == "1" else mag
        parts.append((sign, f"{coef}|{bits}>"))
    out = ""
    for idx, (sign, body) in enumerate(parts):
        if idx == 0:
            out = body if sign == "+" else f"-{body}"
        else:
            out += f" {sign} {body}"
    return f"ket[{out}]"
