"""Abstract syntax of the source quantum language.

Terms are immutable dataclasses.  ``loc`` fields carry parser positions for
error messages and never take part in equality.  Case analysis is multi-arm:
a list of constructor arms tried in order plus an optional default binder.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, fields, is_dataclass
from typing import Callable, Iterable, Optional, Union

from .errors import DeclarationError
from .lexer import format_ket
from .linalg import BUILTIN_GATES, QState, Unitary

Loc = Optional[tuple]


# types

@dataclass(frozen=True)
class Basic:
    name: str
    classical: bool

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class LinArrow:
    dom: "SourceType"
    cod: "SourceType"

    def __str__(self):
        return f"{_type_atom(self.dom)} -o {self.cod}"


@dataclass(frozen=True)
class ExpArrow:
    dom: "SourceType"
    cod: "SourceType"

    def __str__(self):
        return f"{_type_atom(self.dom)} => {self.cod}"


SourceType = Union[Basic, LinArrow, ExpArrow]


def _type_atom(t: SourceType) -> str:
    return str(t) if isinstance(t, Basic) else f"({t})"


def is_duplicable(t: SourceType) -> bool:
    """Classical basic types and arrows may be used many times."""
    return not isinstance(t, Basic) or t.classical


def is_arrow(t: SourceType) -> bool:
    return isinstance(t, (LinArrow, ExpArrow))


QTYPE = Basic("Q", False)
OUT = Basic("Out", False)


@dataclass(frozen=True)
class ConsSignature:
    name: str
    classical_args: tuple
    quantum_args: tuple
    result: Basic

    @property
    def arity(self) -> int:
        return len(self.classical_args) + len(self.quantum_args)

    def __str__(self):
        ca = ", ".join(map(str, self.classical_args))
        qa = ", ".join(map(str, self.quantum_args))
        return f"{self.name} :: {ca};{qa} -> {self.result}"


@dataclass
class Signature:
    """Declarations in scope: basic types, constructors and unitaries."""

    types: dict = field(default_factory=dict)
    constructors: dict = field(default_factory=dict)
    unitaries: dict = field(default_factory=dict)
    positions: dict = field(default_factory=dict)

    @classmethod
    def builtin(cls) -> "Signature":
        sig = cls()
        sig.types["Q"] = QTYPE
        sig.types["Out"] = OUT
        for i in (0, 1):
            sig.constructors[f"inj{i}"] = ConsSignature(f"inj{i}", (), (QTYPE,), OUT)
        sig.unitaries.update(BUILTIN_GATES)
        return sig

    def copy(self) -> "Signature":
        return Signature(dict(self.types), dict(self.constructors),
                         dict(self.unitaries), dict(self.positions))

    def constructors_of(self, type_name: str) -> list:
        return [c for c in self.constructors.values() if c.result.name == type_name]

    def declare_type(self, name: str, classical: bool, pos=None) -> Basic:
        if name in self.types:
            raise DeclarationError(f"type {name} declared twice", pos=pos)
        t = Basic(name, classical)
        self.types[name] = t
        self.positions[("type", name)] = pos
        return t

    def declare_constructor(self, sig: ConsSignature, pos=None):
        if sig.name in self.constructors:
            raise DeclarationError(f"constructor {sig.name} declared twice", pos=pos)
        self.constructors[sig.name] = sig
        self.positions[("cons", sig.name)] = pos

    def declare_unitary(self, u: Unitary, pos=None):
        if u.name in self.unitaries:
            raise DeclarationError(f"unitary {u.name} declared twice", pos=pos)
        self.unitaries[u.name] = u
        self.positions[("unitary", u.name)] = pos


# terms

@dataclass(frozen=True)
class Var:
    name: str
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Lam:
    param: str
    body: "Term"
    ann: Optional[SourceType] = None
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Ket:
    state: QState
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class UnitaryApp:
    gate: Unitary
    arg: "Term"
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Meas:
    arg: "Term"
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Tensor:
    left: "Term"
    right: "Term"
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Cons:
    name: str
    classical_args: tuple = ()
    quantum_args: tuple = ()
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Arm:
    cons: str
    classical_binders: tuple
    quantum_binders: tuple
    body: "Term"

    @property
    def binders(self) -> tuple:
        return self.classical_binders + self.quantum_binders


@dataclass(frozen=True)
class Default:
    binder: str
    body: "Term"


@dataclass(frozen=True)
class Case:
    scrutinee: "Term"
    arms: tuple
    default: Optional[Default] = None
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Letrec:
    fun: str
    param: str
    body: "Term"
    ann: Optional[SourceType] = None
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Tick:
    arg: "Term"
    loc: Loc = field(default=None, compare=False, repr=False)


Term = Union[Var, Lam, App, Ket, UnitaryApp, Meas, Tensor, Cons, Case, Letrec, Tick]


def is_value(t: Term) -> bool:
    if isinstance(t, (Var, Lam, Ket, Letrec)):
        return True
    if isinstance(t, Cons):
        return all(is_value(a) for a in t.classical_args + t.quantum_args)
    return False


def cons_args(t: Cons) -> tuple:
    return t.classical_args + t.quantum_args


# free variables and substitution

def free_vars(t: Term) -> frozenset:
    if isinstance(t, Var):
        return frozenset([t.name])
    if isinstance(t, Lam):
        return free_vars(t.body) - {t.param}
    if isinstance(t, Letrec):
        return free_vars(t.body) - {t.fun, t.param}
    if isinstance(t, App):
        return free_vars(t.fun) | free_vars(t.arg)
    if isinstance(t, Ket):
        return frozenset()
    if isinstance(t, (UnitaryApp, Meas, Tick)):
        return free_vars(t.arg)
    if isinstance(t, Tensor):
        return free_vars(t.left) | free_vars(t.right)
    if isinstance(t, Cons):
        return frozenset().union(*(free_vars(a) for a in cons_args(t)))
    if isinstance(t, Case):
        out = set(free_vars(t.scrutinee))
        for arm in t.arms:
            out |= free_vars(arm.body) - set(arm.binders)
        if t.default is not None:
            out |= free_vars(t.default.body) - {t.default.binder}
        return frozenset(out)
    raise TypeError(f"not a term: {t!r}")


def bound_names(t: Term) -> set:
    out: set = set()
    for node in subterms(t):
        if isinstance(node, Lam):
            out.add(node.param)
        elif isinstance(node, Letrec):
            out |= {node.fun, node.param}
        elif isinstance(node, Case):
            for arm in node.arms:
                out |= set(arm.binders)
            if node.default is not None:
                out.add(node.default.binder)
    return out


def all_names(t: Term) -> set:
    return bound_names(t) | set(free_vars(t))


def fresh_name(base: str, avoid) -> str:
    stem = base.rstrip("0123456789'") or "v"
    for k in itertools.count(1):
        cand = f"{stem}{k}"
        if cand not in avoid:
            return cand


def subterms(t: Term) -> Iterable[Term]:
    yield t
    for c in children(t):
        yield from subterms(c)


def children(t: Term) -> list:
    if isinstance(t, (Lam, Letrec)):
        return [t.body]
    if isinstance(t, App):
        return [t.fun, t.arg]
    if isinstance(t, (UnitaryApp, Meas, Tick)):
        return [t.arg]
    if isinstance(t, Tensor):
        return [t.left, t.right]
    if isinstance(t, Cons):
        return list(cons_args(t))
    if isinstance(t, Case):
        out = [t.scrutinee] + [a.body for a in t.arms]
        if t.default is not None:
            out.append(t.default.body)
        return out
    return []


def subst(t: Term, mapping: dict) -> Term:
    """Simultaneous capture-avoiding substitution ``t[mapping]``."""
    if not mapping:
        return t
    fvs = frozenset().union(*(free_vars(v) for v in mapping.values()))
    return _subst(t, dict(mapping), fvs)


def _binder(names: tuple, body: Term, mapping: dict, fvs: frozenset):
    """Drop shadowed keys and rename binders that would capture."""
    inner = {k: v for k, v in mapping.items() if k not in names}
    if not inner or not fvs or not any(n in fvs for n in names):
        return names, body, inner, fvs
    body_fv = free_vars(body)
    if not any(k in body_fv for k in inner):
        return names, body, {}, fvs
    renames = {}
    avoid = set(fvs) | set(body_fv) | set(inner) | set(names)
    new_names = []
    for n in names:
        if n in fvs:
            m = fresh_name(n, avoid)
            avoid.add(m)
            renames[n] = Var(m)
            new_names.append(m)
        else:
            new_names.append(n)
    if renames:
        body = _subst(body, renames, frozenset(v.name for v in renames.values()))
    return tuple(new_names), body, inner, fvs


def _subst(t: Term, m: dict, fvs: frozenset) -> Term:
    if isinstance(t, Var):
        return m.get(t.name, t)
    if isinstance(t, Ket):
        return t
    if isinstance(t, Lam):
        (p,), body, inner, _ = _binder((t.param,), t.body, m, fvs)
        return Lam(p, _subst(body, inner, fvs) if inner else body, t.ann, t.loc)
    if isinstance(t, Letrec):
        (f, x), body, inner, _ = _binder((t.fun, t.param), t.body, m, fvs)
        return Letrec(f, x, _subst(body, inner, fvs) if inner else body, t.ann, t.loc)
    if isinstance(t, App):
        return App(_subst(t.fun, m, fvs), _subst(t.arg, m, fvs), t.loc)
    if isinstance(t, UnitaryApp):
        return UnitaryApp(t.gate, _subst(t.arg, m, fvs), t.loc)
    if isinstance(t, Meas):
        return Meas(_subst(t.arg, m, fvs), t.loc)
    if isinstance(t, Tick):
        return Tick(_subst(t.arg, m, fvs), t.loc)
    if isinstance(t, Tensor):
        return Tensor(_subst(t.left, m, fvs), _subst(t.right, m, fvs), t.loc)
    if isinstance(t, Cons):
        return Cons(t.name, tuple(_subst(a, m, fvs) for a in t.classical_args),
                    tuple(_subst(a, m, fvs) for a in t.quantum_args), t.loc)
    if isinstance(t, Case):
        arms = []
        for arm in t.arms:
            names, body, inner, _ = _binder(arm.binders, arm.body, m, fvs)
            k = len(arm.classical_binders)
            arms.append(Arm(arm.cons, names[:k], names[k:],
                            _subst(body, inner, fvs) if inner else body))
        default = None
        if t.default is not None:
            (y,), body, inner, _ = _binder((t.default.binder,), t.default.body, m, fvs)
            default = Default(y, _subst(body, inner, fvs) if inner else body)
        return Case(_subst(t.scrutinee, m, fvs), tuple(arms), default, t.loc)
    raise TypeError(f"not a term: {t!r}")


# alpha-equivalence and canonical keys

def term_key(t: Term, env: dict | None = None, depth: int = 0, digits: int = 12):
    """Hashable canonical form: bound names become de Bruijn levels."""
    env = env or {}

    def bind(names):
        e = dict(env)
        for i, n in enumerate(names):
            e[n] = depth + i
        return e, depth + len(names)

    if isinstance(t, Var):
        return ("b", depth - 1 - env[t.name]) if t.name in env else ("f", t.name)
    if isinstance(t, Ket):
        return ("ket", t.state.key(digits))
    if isinstance(t, Lam):
        e, d = bind((t.param,))
        return ("lam", term_key(t.body, e, d, digits))
    if isinstance(t, Letrec):
        e, d = bind((t.fun, t.param))
        return ("letrec", term_key(t.body, e, d, digits))
    if isinstance(t, App):
        return ("app", term_key(t.fun, env, depth, digits), term_key(t.arg, env, depth, digits))
    if isinstance(t, UnitaryApp):
        return ("gate", t.gate.name, term_key(t.arg, env, depth, digits))
    if isinstance(t, Meas):
        return ("meas", term_key(t.arg, env, depth, digits))
    if isinstance(t, Tick):
        return ("tick", term_key(t.arg, env, depth, digits))
    if isinstance(t, Tensor):
        return ("tensor", term_key(t.left, env, depth, digits),
                term_key(t.right, env, depth, digits))
    if isinstance(t, Cons):
        return ("cons", t.name, tuple(term_key(a, env, depth, digits) for a in t.classical_args),
                tuple(term_key(a, env, depth, digits) for a in t.quantum_args))
    if isinstance(t, Case):
        arms = []
        for arm in t.arms:
            e, d = bind(arm.binders)
            arms.append((arm.cons, len(arm.classical_binders), len(arm.quantum_binders),
                         term_key(arm.body, e, d, digits)))
        dflt = None
        if t.default is not None:
            e, d = bind((t.default.binder,))
            dflt = term_key(t.default.body, e, d, digits)
        return ("case", term_key(t.scrutinee, env, depth, digits), tuple(arms), dflt)
    raise TypeError(f"not a term: {t!r}")


def alpha_eq(a: Term, b: Term) -> bool:
    return _alpha(a, b, {}, {}, 0)


def _alpha(a, b, ea, eb, d) -> bool:
    if type(a) is not type(b):
        return False

    def bind(na, nb):
        xa, xb = dict(ea), dict(eb)
        for i, (p, q) in enumerate(zip(na, nb)):
            xa[p] = xb[q] = d + i
        return xa, xb, d + len(na)

    if isinstance(a, Var):
        if a.name in ea or b.name in eb:
            return ea.get(a.name) == eb.get(b.name) and a.name in ea and b.name in eb
        return a.name == b.name
    if isinstance(a, Ket):
        return a.state == b.state
    if isinstance(a, Lam):
        return _alpha(a.body, b.body, *bind((a.param,), (b.param,)))
    if isinstance(a, Letrec):
        return _alpha(a.body, b.body, *bind((a.fun, a.param), (b.fun, b.param)))
    if isinstance(a, App):
        return _alpha(a.fun, b.fun, ea, eb, d) and _alpha(a.arg, b.arg, ea, eb, d)
    if isinstance(a, UnitaryApp):
        return a.gate == b.gate and _alpha(a.arg, b.arg, ea, eb, d)
    if isinstance(a, (Meas, Tick)):
        return _alpha(a.arg, b.arg, ea, eb, d)
    if isinstance(a, Tensor):
        return _alpha(a.left, b.left, ea, eb, d) and _alpha(a.right, b.right, ea, eb, d)
    if isinstance(a, Cons):
        return (a.name == b.name and len(a.classical_args) == len(b.classical_args)
                and len(a.quantum_args) == len(b.quantum_args)
                and all(_alpha(x, y, ea, eb, d) for x, y in zip(cons_args(a), cons_args(b))))
    if isinstance(a, Case):
        if len(a.arms) != len(b.arms) or (a.default is None) != (b.default is None):
            return False
        if not _alpha(a.scrutinee, b.scrutinee, ea, eb, d):
            return False
        for x, y in zip(a.arms, b.arms):
            if (x.cons != y.cons or len(x.classical_binders) != len(y.classical_binders)
                    or len(x.quantum_binders) != len(y.quantum_binders)):
                return False
            if not _alpha(x.body, y.body, *bind(x.binders, y.binders)):
                return False
        if a.default is not None:
            return _alpha(a.default.body, b.default.body,
                          *bind((a.default.binder,), (b.default.binder,)))
        return True
    raise TypeError(f"not a term: {a!r}")


# evaluation contexts

@dataclass(frozen=True)
class Frame:
    """One layer of an evaluation context; ``plug`` rebuilds the node."""

    kind: str
    node: Term
    index: int = 0

    def plug(self, t: Term) -> Term:
        n = self.node
        if self.kind == "app-arg":
            return App(n.fun, t, n.loc)
        if self.kind == "app-fun":
            return App(t, n.arg, n.loc)
        if self.kind == "gate":
            return UnitaryApp(n.gate, t, n.loc)
        if self.kind == "meas":
            return Meas(t, n.loc)
        if self.kind == "tensor-right":
            return Tensor(n.left, t, n.loc)
        if self.kind == "tensor-left":
            return Tensor(t, n.right, n.loc)
        if self.kind == "cons":
            args = list(cons_args(n))
            args[self.index] = t
            k = len(n.classical_args)
            return Cons(n.name, tuple(args[:k]), tuple(args[k:]), n.loc)
        if self.kind == "case":
            return Case(t, n.arms, n.default, n.loc)
        raise ValueError(self.kind)


@dataclass(frozen=True)
class EvalContext:
    frames: tuple = ()

    def plug(self, t: Term) -> Term:
        for fr in reversed(self.frames):
            t = fr.plug(t)
        return t

    def __len__(self):
        return len(self.frames)


def decompose(t: Term) -> tuple[EvalContext, Term] | None:
    """Split a non-value into its unique evaluation context and redex.

    Evaluation is right to left: arguments before functions, the right
    tensor operand first, quantum constructor arguments before classical
    ones.  Returns None for values.
    """
    frames: list = []
    while True:
        if isinstance(t, App):
            if not is_value(t.arg):
                frames.append(Frame("app-arg", t))
                t = t.arg
                continue
            if not is_value(t.fun):
                frames.append(Frame("app-fun", t))
                t = t.fun
                continue
            return EvalContext(tuple(frames)), t
        if isinstance(t, UnitaryApp):
            if not is_value(t.arg):
                frames.append(Frame("gate", t))
                t = t.arg
                continue
            return EvalContext(tuple(frames)), t
        if isinstance(t, Meas):
            if not is_value(t.arg):
                frames.append(Frame("meas", t))
                t = t.arg
                continue
            return EvalContext(tuple(frames)), t
        if isinstance(t, Tensor):
            if not is_value(t.right):
                frames.append(Frame("tensor-right", t))
                t = t.right
                continue
            if not is_value(t.left):
                frames.append(Frame("tensor-left", t))
                t = t.left
                continue
            return EvalContext(tuple(frames)), t
        if isinstance(t, Cons):
            args = cons_args(t)
            for idx in range(len(args) - 1, -1, -1):
                if not is_value(args[idx]):
                    frames.append(Frame("cons", t, idx))
                    t = args[idx]
                    break
            else:
                return None  # only reachable at the root: values are never entered
            continue
        if isinstance(t, Case):
            if not is_value(t.scrutinee):
                frames.append(Frame("case", t))
                t = t.scrutinee
                continue
            return EvalContext(tuple(frames)), t
        if isinstance(t, Tick):
            return EvalContext(tuple(frames)), t
        if not frames:
            return None
        return EvalContext(tuple(frames)), t


# pretty printing

def pretty(t: Term) -> str:
    return _pp(t, 0)


def _pp(t: Term, level: int) -> str:
    """level 0: anything, 1: application operand position, 2: atom."""
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Ket):
        return format_ket(t.state)
    if isinstance(t, Cons):
        return _pp_cons(t)
    if isinstance(t, Meas):
        return f"meas({_pp(t.arg, 0)})"
    if isinstance(t, Tick):
        return f"tick({_pp(t.arg, 0)})"
    if isinstance(t, Tensor):
        return f"tensor({_pp(t.left, 0)}, {_pp(t.right, 0)})"
    if isinstance(t, Lam) and t.ann is not None:
        return f"({_pp_lam(t)} : {t.ann})"
    if isinstance(t, App):
        s = f"{_pp(t.fun, 1)} {_pp(t.arg, 2)}"
        return s if level <= 1 else f"({s})"
    if isinstance(t, UnitaryApp):
        s = f"{t.gate.name} {_pp(t.arg, 2)}"
        return s if level == 0 else f"({s})"
    if isinstance(t, (Lam, Letrec, Case)):
        s = _pp_open(t)
        return s if level == 0 else f"({s})"
    raise TypeError(f"not a term: {t!r}")


def _pp_lam(t: Lam) -> str:
    params = [t.param]
    body = t.body
    while isinstance(body, Lam) and body.ann is None:
        params.append(body.param)
        body = body.body
    return f"lam {' '.join(params)}. {_pp(body, 0)}"


def _pp_open(t: Term) -> str:
    if isinstance(t, Lam):
        return _pp_lam(t)
    if isinstance(t, Letrec):
        params = [t.param]
        body = t.body
        tail = t.ann
        while True:
            tail = tail.cod if isinstance(tail, (LinArrow, ExpArrow)) else None
            if not (isinstance(body, Lam) and body.ann == tail):
                break
            params.append(body.param)
            body = body.body
        ann = f" : {t.ann}" if t.ann is not None else ""
        return f"letrec {t.fun} {' '.join(params)}{ann} = {_pp(body, 0)}"
    if isinstance(t, Case):
        parts = [f"case {_pp(t.scrutinee, 0)} of"]
        branches = []
        for arm in t.arms:
            pat = arm.cons
            if arm.binders:
                pat += f"({', '.join(arm.classical_binders)}; {', '.join(arm.quantum_binders)})"
            branches.append((pat, arm.body))
        if t.default is not None:
            branches.append((t.default.binder, t.default.body))
        for i, (pat, body) in enumerate(branches):
            last = i == len(branches) - 1
            lvl = 0 if last or not isinstance(body, (Lam, Letrec, Case)) else 1
            parts.append(f"| {pat} -> {_pp(body, lvl)}")
        return " ".join(parts)
    raise TypeError(t)


def _pp_cons(t: Cons) -> str:
    if not t.classical_args and not t.quantum_args:
        return t.name
    ca = ", ".join(_pp(a, 0) for a in t.classical_args)
    qa = ", ".join(_pp(a, 0) for a in t.quantum_args)
    return f"{t.name}({ca}; {qa})" if qa else f"{t.name}({ca};)"


def term_size(t: Term) -> int:
    return sum(1 for _ in subterms(t))


def map_children(t: Term, f: Callable[[Term], Term]) -> Term:
    """Rebuild ``t`` with ``f`` applied to each immediate subterm."""
    if isinstance(t, Lam):
        return Lam(t.param, f(t.body), t.ann, t.loc)
    if isinstance(t, Letrec):
        return Letrec(t.fun, t.param, f(t.body), t.ann, t.loc)
    if isinstance(t, App):
        return App(f(t.fun), f(t.arg), t.loc)
    if isinstance(t, UnitaryApp):
        return UnitaryApp(t.gate, f(t.arg), t.loc)
    if isinstance(t, Meas):
        return Meas(f(t.arg), t.loc)
    if isinstance(t, Tick):
        return Tick(f(t.arg), t.loc)
    if isinstance(t, Tensor):
        return Tensor(f(t.left), f(t.right), t.loc)
    if isinstance(t, Cons):
        return Cons(t.name, tuple(map(f, t.classical_args)), tuple(map(f, t.quantum_args)), t.loc)
    if isinstance(t, Case):
        arms = tuple(Arm(a.cons, a.classical_binders, a.quantum_binders, f(a.body))
                     for a in t.arms)
        d = t.default and Default(t.default.binder, f(t.default.body))
        return Case(f(t.scrutinee), arms, d, t.loc)
    return t


def ast_json(node):
    """A JSON-ready tree of a term or type; positions are dropped."""
    if isinstance(node, QState):
        return {"node": "State", "ket": format_ket(node)}
    if isinstance(node, Unitary):
        return {"node": "Gate", "name": node.name, "qubits": node.n_qubits}
    if isinstance(node, (tuple, list)):
        return [ast_json(x) for x in node]
    if is_dataclass(node):
        out = {"node": type(node).__name__}
        for f in fields(node):
            if f.name != "loc":
                out[f.name] = ast_json(getattr(node, f.name))
        return out
    return node
