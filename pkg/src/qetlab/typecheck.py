"""Dual-context type checker for source terms.

The exponential context holds duplicable bindings; the affine context holds
bindings that may be used at most once.  Instead of guessing how to split the
affine context between premises, every judgment returns the affine bindings
it left unused and the next premise continues from there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .aql import Program
from .errors import (AffineLeak, AnnotationRequired, ArityMismatch, DeclarationError,
                     LinearityViolation, NoMainTerm, NonExhaustiveCase, QetError,
                     SourceTypeError, TypeMismatch, UnboundVariable, UnknownConstructor)
from .source import (OUT, QTYPE, App, Basic, Case, Cons, ExpArrow, Ket, Lam, Letrec,
                     LinArrow, Meas, Signature, SourceType, Tensor, Term, Tick, UnitaryApp,
                     Var, is_duplicable)


@dataclass(frozen=True)
class Ctx:
    gamma: dict
    delta: dict
    # names hidden by a rule that demands an empty affine context
    blocked: dict = field(default_factory=dict)
    # affine names in scope, available or not, for precise error messages
    affine_scope: frozenset = frozenset()

    def bind_exp(self, x: str, t: SourceType) -> "Ctx":
        g = dict(self.gamma)
        g[x] = t
        d = {k: v for k, v in self.delta.items() if k != x}
        b = {k: v for k, v in self.blocked.items() if k != x}
        return Ctx(g, d, b, self.affine_scope - {x})

    def bind_aff(self, x: str, t: SourceType) -> "Ctx":
        g = {k: v for k, v in self.gamma.items() if k != x}
        d = dict(self.delta)
        d[x] = t
        b = {k: v for k, v in self.blocked.items() if k != x}
        return Ctx(g, d, b, self.affine_scope | {x})

    def with_delta(self, delta: dict) -> "Ctx":
        return Ctx(self.gamma, delta, self.blocked, self.affine_scope)

    def emptied(self, rule: str) -> "Ctx":
        b = dict(self.blocked)
        for k in self.delta:
            b[k] = rule
        return Ctx(self.gamma, {}, b, self.affine_scope)


def _loc(t) -> Optional[tuple]:
    return getattr(t, "loc", None)


def validate_type(t: SourceType, pos=None):
    if isinstance(t, ExpArrow):
        if not is_duplicable(t.dom):
            raise TypeMismatch(f"the domain of {t} is not duplicable", pos=pos)
        validate_type(t.dom, pos)
        validate_type(t.cod, pos)
    elif isinstance(t, LinArrow):
        validate_type(t.dom, pos)
        validate_type(t.cod, pos)


def _synthesizable(t: Term) -> bool:
    if isinstance(t, (Lam, Letrec)):
        return t.ann is not None
    if isinstance(t, Tick):
        return _synthesizable(t.arg)
    return True


class Checker:
    def __init__(self, signature: Signature | None = None):
        self.sig = signature or Signature.builtin()

    # entry points

    def check(self, ctx: Ctx, t: Term, expected: SourceType) -> dict:
        if isinstance(t, Lam):
            return self._check_lam(ctx, t, expected)
        if isinstance(t, Letrec):
            return self._check_letrec(ctx, t, expected)
        if isinstance(t, Case):
            return self._case(ctx, t, expected)[1]
        if isinstance(t, Tick):
            return self.check(ctx, t.arg, expected)
        if isinstance(t, App) and not _synthesizable(t.fun):
            return self._app_infer_fun(ctx, t, expected)
        got, rest = self.synth(ctx, t)
        if got != expected:
            raise TypeMismatch(f"expected {expected}, found {got}", pos=_loc(t))
        return rest

    def synth(self, ctx: Ctx, t: Term) -> tuple:
        if isinstance(t, Var):
            return self._var(ctx, t)
        if isinstance(t, Ket):
            return QTYPE, ctx.delta
        if isinstance(t, UnitaryApp):
            return QTYPE, self._expect(ctx, t.arg, QTYPE, "unitary")
        if isinstance(t, Meas):
            return OUT, self._expect(ctx, t.arg, QTYPE, "meas")
        if isinstance(t, Tensor):
            rest = self._expect(ctx, t.right, QTYPE, "tensor")
            return QTYPE, self._expect(ctx.with_delta(rest), t.left, QTYPE, "tensor")
        if isinstance(t, Cons):
            return self._cons(ctx, t)
        if isinstance(t, App):
            return self._app(ctx, t)
        if isinstance(t, Tick):
            return self.synth(ctx, t.arg)
        if isinstance(t, Case):
            return self._case(ctx, t, None)
        if isinstance(t, (Lam, Letrec)):
            if t.ann is None:
                kind = "lambda" if isinstance(t, Lam) else "letrec"
                raise AnnotationRequired(
                    f"cannot infer the type of this {kind}; add an annotation", pos=_loc(t))
            validate_type(t.ann, _loc(t))
            return t.ann, self.check(ctx, t, t.ann)
        raise TypeError(f"not a term: {t!r}")

    # rules

    def _expect(self, ctx, t, ty, rule) -> dict:
        try:
            return self.check(ctx, t, ty)
        except TypeMismatch as exc:
            if exc.rule is None:
                exc.rule = rule
            raise

    def _var(self, ctx: Ctx, t: Var):
        x = t.name
        if x in ctx.delta:
            rest = dict(ctx.delta)
            ty = rest.pop(x)
            return ty, rest
        if x in ctx.gamma:
            return ctx.gamma[x], ctx.delta
        if x in ctx.blocked:
            raise AffineLeak(f"affine variable {x} used where the affine context must be empty",
                             pos=_loc(t), rule=ctx.blocked[x])
        if x in ctx.affine_scope:
            raise LinearityViolation(f"affine variable {x} used more than once",
                                     pos=_loc(t), rule="ax")
        raise UnboundVariable(f"unbound variable {x}", pos=_loc(t), rule="ax")

    def _restore(self, outer: Ctx, inner_rest: dict, names) -> dict:
        """Drop locally bound names, reinstating shadowed outer bindings."""
        rest = {k: v for k, v in inner_rest.items() if k not in names}
        for n in names:
            if n in outer.delta:
                rest[n] = outer.delta[n]
        return rest

    def _check_lam(self, ctx: Ctx, t: Lam, expected: SourceType) -> dict:
        if t.ann is not None and t.ann != expected:
            raise TypeMismatch(f"annotation {t.ann} does not match expected {expected}",
                               pos=_loc(t))
        if isinstance(expected, LinArrow):
            inner = ctx.bind_aff(t.param, expected.dom)
            rule = "-oi"
        elif isinstance(expected, ExpArrow):
            inner = ctx.bind_exp(t.param, expected.dom)
            rule = "=>i"
        else:
            raise TypeMismatch(f"a function cannot have type {expected}", pos=_loc(t),
                               rule="-oi")
        try:
            rest = self.check(inner, t.body, expected.cod)
        except SourceTypeError as exc:
            exc.rule = exc.rule or rule
            raise
        return self._restore(ctx, rest, (t.param,))

    def _check_letrec(self, ctx: Ctx, t: Letrec, expected: SourceType) -> dict:
        if t.ann is not None and t.ann != expected:
            raise TypeMismatch(f"annotation {t.ann} does not match expected {expected}",
                               pos=_loc(t), rule="rec")
        if not is_duplicable(expected):
            raise TypeMismatch(f"letrec needs a duplicable type, not {expected}",
                               pos=_loc(t), rule="rec")
        inner = ctx.emptied("rec").bind_exp(t.fun, expected)
        self.check(inner, Lam(t.param, t.body, loc=t.loc), expected)
        return ctx.delta

    def _app(self, ctx: Ctx, t: App):
        if isinstance(t.fun, Lam) and t.fun.ann is None:
            return self._redex(ctx, t)
        if not _synthesizable(t.fun):
            raise AnnotationRequired("cannot infer the type of the applied function; "
                                     "annotate it or use it in checking position", pos=_loc(t))
        fty, rest = self.synth(ctx, t.fun)
        after = ctx.with_delta(rest)
        if isinstance(fty, LinArrow):
            return fty.cod, self._expect(after, t.arg, fty.dom, "-oe")
        if isinstance(fty, ExpArrow):
            self._expect(after.emptied("=>e"), t.arg, fty.dom, "=>e")
            return fty.cod, rest
        raise TypeMismatch(f"applying a term of non-function type {fty}", pos=_loc(t),
                           rule="-oe")

    def _redex(self, ctx: Ctx, t: App):
        """(lam x. b) a: type the argument, then the body with x at that type."""
        lam = t.fun
        aty, rest = self.synth(ctx, t.arg)
        after = ctx.with_delta(rest)
        if is_duplicable(aty) and rest == ctx.delta:
            inner = after.bind_exp(lam.param, aty)
        else:
            inner = after.bind_aff(lam.param, aty)
        bty, out = self.synth(inner, lam.body)
        return bty, self._restore(after, out, (lam.param,))

    def _app_infer_fun(self, ctx: Ctx, t: App, expected: SourceType) -> dict:
        aty, rest = self.synth(ctx, t.arg)
        if is_duplicable(aty) and rest == ctx.delta:
            fty: SourceType = ExpArrow(aty, expected)
        else:
            fty = LinArrow(aty, expected)
        return self.check(ctx.with_delta(rest), t.fun, fty)

    def _cons(self, ctx: Ctx, t: Cons):
        sig = self.sig.constructors.get(t.name)
        if sig is None:
            raise UnknownConstructor(f"unknown constructor {t.name}", pos=_loc(t), rule="cons")
        if (len(t.classical_args) != len(sig.classical_args)
                or len(t.quantum_args) != len(sig.quantum_args)):
            raise ArityMismatch(
                f"{t.name} takes {len(sig.classical_args)} classical and "
                f"{len(sig.quantum_args)} quantum arguments, got "
                f"{len(t.classical_args)} and {len(t.quantum_args)}", pos=_loc(t), rule="cons")
        rest = ctx.delta
        pairs = list(zip(t.classical_args + t.quantum_args,
                         sig.classical_args + sig.quantum_args))
        for arg, ty in reversed(pairs):
            rest = self._expect(ctx.with_delta(rest), arg, ty, "cons")
        return sig.result, rest

    def _case(self, ctx: Ctx, t: Case, expected: Optional[SourceType]):
        bty, rest = self.synth(ctx, t.scrutinee)
        if not isinstance(bty, Basic):
            raise TypeMismatch(f"case analysis on non-basic type {bty}", pos=_loc(t),
                               rule="case")
        after = ctx.with_delta(rest)
        outs = []
        seen = set()
        for arm in t.arms:
            sig = self.sig.constructors.get(arm.cons)
            if sig is None:
                raise UnknownConstructor(f"unknown constructor {arm.cons}", pos=_loc(t),
                                         rule="case")
            if sig.result != bty:
                raise TypeMismatch(f"constructor {arm.cons} builds {sig.result}, "
                                   f"not {bty}", pos=_loc(t), rule="case")
            if (len(arm.classical_binders) != len(sig.classical_args)
                    or len(arm.quantum_binders) != len(sig.quantum_args)):
                raise ArityMismatch(f"pattern for {arm.cons} binds the wrong number of "
                                    "variables", pos=_loc(t), rule="case")
            inner = after
            for x, ty in zip(arm.classical_binders, sig.classical_args):
                inner = inner.bind_exp(x, ty)
            for x, ty in zip(arm.quantum_binders, sig.quantum_args):
                inner = inner.bind_aff(x, ty)
            expected, out = self._branch(inner, arm.body, expected)
            outs.append(self._restore(after, out, arm.binders))
            seen.add(arm.cons)
        if t.default is not None:
            y = t.default.binder
            inner = after.bind_exp(y, bty) if bty.classical else after.bind_aff(y, bty)
            expected, out = self._branch(inner, t.default.body, expected)
            outs.append(self._restore(after, out, (y,)))
        else:
            missing = {c.name for c in self.sig.constructors_of(bty.name)} - seen
            if missing or not t.arms:
                raise NonExhaustiveCase(
                    f"case on {bty} misses {', '.join(sorted(missing)) or 'every value'} "
                    "and has no default branch", pos=_loc(t), rule="case")
        common = {k: v for k, v in outs[0].items() if all(k in o for o in outs[1:])}
        return expected, common

    def _branch(self, ctx, body, expected):
        if expected is None:
            ty, out = self.synth(ctx, body)
            return ty, out
        return expected, self.check(ctx, body, expected)


def check_term(gamma: dict, delta: dict, term: Term, expected: SourceType,
               signature: Signature | None = None) -> dict:
    """Check ``gamma; delta |- term : expected``; returns the unused affine bindings."""
    validate_type(expected, _loc(term))
    for x, ty in gamma.items():
        if not is_duplicable(ty):
            raise TypeMismatch(f"exponential binding {x} has non-duplicable type {ty}")
    overlap = set(gamma) & set(delta)
    if overlap:
        raise TypeMismatch(f"contexts share names {sorted(overlap)}")
    ctx = Ctx(dict(gamma), dict(delta), {}, frozenset(delta))
    return Checker(signature).check(ctx, term, expected)


def synth_term(gamma: dict, delta: dict, term: Term, signature: Signature | None = None):
    ctx = Ctx(dict(gamma), dict(delta), {}, frozenset(delta))
    return Checker(signature).synth(ctx, term)[0]


@dataclass
class CheckedProgram:
    program: Program
    type: SourceType
    gamma: dict
    delta: dict


def validate_declarations(sig: Signature, decls) -> list:
    errors = []
    for cs, pos in decls:
        if cs.result.classical and cs.quantum_args:
            errors.append(DeclarationError(
                f"constructor {cs.name} of classical type {cs.result} cannot take quantum "
                "arguments", pos=pos))
        for a in cs.classical_args:
            if not a.classical:
                errors.append(DeclarationError(
                    f"constructor {cs.name}: {a} listed as classical argument", pos=pos))
        for a in cs.quantum_args:
            if a.classical:
                errors.append(DeclarationError(
                    f"constructor {cs.name}: {a} listed as quantum argument", pos=pos))
    return errors


def check_program(prog: Program, annotation: SourceType | None = None) -> CheckedProgram:
    """Validate declarations, inputs and the main term; raise on the first error.

    The raised exception carries every error found in ``all_errors``.
    """
    errors: list = validate_declarations(prog.signature, prog.data_decls)
    gamma: dict = {}
    delta: dict = {}
    for inp in prog.inputs:
        try:
            validate_type(inp.type, inp.pos)
            check_term({}, {}, inp.value, inp.type, prog.signature)
        except QetError as exc:
            exc.pos = exc.pos or inp.pos
            errors.append(exc)
        if is_duplicable(inp.type):
            gamma[inp.name] = inp.type
        else:
            delta[inp.name] = inp.type
    ty = annotation or prog.main_type
    if prog.main is None:
        errors.append(NoMainTerm("program has no main term"))
    elif not errors:
        try:
            if ty is None:
                ty = synth_term(gamma, delta, prog.main, prog.signature)
            else:
                check_term(gamma, delta, prog.main, ty, prog.signature)
        except QetError as exc:
            errors.append(exc)
    if errors:
        first = errors[0]
        first.all_errors = errors
        raise first
    return CheckedProgram(prog, ty, gamma, delta)
