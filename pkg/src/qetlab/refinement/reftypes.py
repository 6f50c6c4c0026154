"""Refinement types, refinement contexts, well-formedness and admissibility."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ..cslang import KTYPE, RINF, CSArrow, CSBasic, CSType
from ..errors import RefUnboundVariable, SkeletonMismatch
from . import formula as F
from .formula import TOP, Formula, FormulaTyper, FVar


@dataclass(frozen=True)
class RefBase:
    base: CSType  # K, R or a basic type
    binder: str = "Z"
    phi: Formula = TOP


@dataclass(frozen=True)
class DepArrow:
    var: str
    dom: "RefType"
    cod: "RefType"


@dataclass(frozen=True)
class ForallType:
    var: str
    bound: "RefType"
    body: "RefType"


RefType = Union[RefBase, DepArrow, ForallType]


@dataclass(frozen=True)
class Bind:
    name: str
    type: RefType


@dataclass(frozen=True)
class Fact:
    phi: Formula


def unrefined(t: CSType) -> RefType:
    if isinstance(t, CSArrow):
        return DepArrow("_", unrefined(t.dom), unrefined(t.cod))
    return RefBase(t)


def skeleton(t: RefType) -> CSType:
    if isinstance(t, RefBase):
        return t.base
    if isinstance(t, DepArrow):
        return CSArrow(skeleton(t.dom), skeleton(t.cod))
    return skeleton(t.body)


def ctx_names(ctx) -> list:
    return [e.name for e in ctx if isinstance(e, Bind)]


def ctx_env(ctx) -> dict:
    """The skeleton of a context, as a CS typing environment."""
    return {e.name: skeleton(e.type) for e in ctx if isinstance(e, Bind)}


def extend(ctx, *entries) -> tuple:
    return tuple(ctx) + tuple(entries)


# free variables and substitution

def type_fv(t: RefType) -> frozenset:
    if isinstance(t, RefBase):
        return F.fv(t.phi) - {t.binder}
    return type_fv(t.dom if isinstance(t, DepArrow) else t.bound) | (
        type_fv(t.cod if isinstance(t, DepArrow) else t.body) - {t.var})


def _parts(t):
    return (t.dom, t.cod) if isinstance(t, DepArrow) else (t.bound, t.body)


def subst_type(t: RefType, m: dict) -> RefType:
    m = {x: r for x, r in m.items() if x in type_fv(t)}
    if not m:
        return t
    incoming = frozenset().union(*(F.term_fv(r) for r in m.values()))
    if isinstance(t, RefBase):
        z, phi = t.binder, t.phi
        if z in incoming:
            z = F.fresh(z, incoming | F.fv(phi) | set(m))
            phi = F.rename(phi, t.binder, z)
        return RefBase(t.base, z, F.subst(phi, {k: v for k, v in m.items() if k != z}))
    first, second = _parts(t)
    var = t.var
    if var in incoming:
        var = F.fresh(var, incoming | type_fv(second) | set(m))
        second = subst_type(second, {t.var: FVar(var)})
    inner = {k: v for k, v in m.items() if k != var}
    return type(t)(var, subst_type(first, m), subst_type(second, inner))


def rename_type(t: RefType, old: str, new: str) -> RefType:
    return subst_type(t, {old: FVar(new)}) if old != new else t


def alpha_eq_type(a: RefType, b: RefType) -> bool:
    if isinstance(a, RefBase) and isinstance(b, RefBase):
        return a.base == b.base and F.rename(a.phi, a.binder, "%z") == F.rename(b.phi, b.binder,
                                                                                "%z")
    if type(a) is type(b) and not isinstance(a, RefBase):
        a1, a2 = _parts(a)
        b1, b2 = _parts(b)
        return alpha_eq_type(a1, b1) and alpha_eq_type(
            rename_type(a2, a.var, "%x"), rename_type(b2, b.var, "%x"))
    return False


# printing

def pretty_type(t: RefType, level: int = 0) -> str:
    if isinstance(t, RefBase):
        if t.phi == TOP:
            return str(t.base)
        return f"{{{t.binder} : {t.base} | {F.pretty(t.phi)}}}"
    if isinstance(t, DepArrow):
        dom = pretty_type(t.dom, 1)
        if t.var in type_fv(t.cod):
            dom = f"({t.var} : {pretty_type(t.dom)})"
        s = f"{dom} => {pretty_type(t.cod)}"
        return f"({s})" if level > 0 else s
    s = f"forall {t.var} : {pretty_type(t.bound)}. {pretty_type(t.body)}"
    return f"({s})" if level > 0 else s


def pretty_ctx(ctx) -> str:
    parts = []
    for e in ctx:
        parts.append(f"{e.name} : {pretty_type(e.type)}" if isinstance(e, Bind)
                     else F.pretty(e.phi))
    return ", ".join(parts) or "."


# well-formedness

def _check_base(base: CSType, sig):
    if base in (KTYPE, RINF):
        return
    if isinstance(base, CSBasic) and base.name in sig.types:
        return
    raise SkeletonMismatch(f"{base} cannot be refined")


def wf_ctx(ctx, sig, cs=None, defs=None) -> None:
    typer = FormulaTyper(sig, cs, defs)
    seen: dict = {}
    for e in ctx:
        if isinstance(e, Bind):
            if e.name in seen:
                raise SkeletonMismatch(f"{e.name} is bound twice in the context")
            _wf(seen, e.type, typer)
            seen[e.name] = skeleton(e.type)
        else:
            typer.formula(seen, e.phi)


def wf(ctx, t: RefType, sig, cs=None, defs=None) -> None:
    """Raise unless ``t`` is well formed under ``ctx``."""
    wf_ctx(ctx, sig, cs, defs)
    _wf(ctx_env(ctx), t, FormulaTyper(sig, cs, defs))


def _wf(env: dict, t: RefType, typer: FormulaTyper):
    if isinstance(t, RefBase):
        _check_base(t.base, typer.sig)
        typer.formula({**env, t.binder: t.base}, t.phi)
        return
    first, second = _parts(t)
    _wf(env, first, typer)
    _wf({**env, t.var: skeleton(first)}, second, typer)


def check_closed(ctx, t: RefType):
    missing = type_fv(t) - set(ctx_names(ctx))
    if missing:
        raise RefUnboundVariable(f"unbound variable {sorted(missing)[0]}")


# admissibility

@dataclass(frozen=True)
class Admissibility:
    ok: bool
    reason: str

    def __bool__(self):
        return self.ok


def _upper_bound(atom: Formula, z: str) -> bool:
    """Z <= e, Z [= e, e >= Z with Z not free in e."""
    if not isinstance(atom, F.Pred) or len(atom.args) != 2:
        return False
    a, b = atom.args
    if atom.name in ("le", "sqle"):
        return a == FVar(z) and z not in F.term_fv(b)
    if atom.name == "ge":
        return b == FVar(z) and z not in F.term_fv(a)
    return False


def admissible(ctx, t: RefType) -> Admissibility:
    if isinstance(t, (DepArrow, ForallType)):
        first, second = _parts(t)
        inner = admissible(extend(ctx, Bind(t.var, first)), second)
        return inner if not inner else Admissibility(True, f"{t.var}: {inner.reason}")
    if t.base not in (KTYPE, RINF):
        return Admissibility(False, f"the result type {t.base} is not a cost type")
    if t.phi == TOP:
        return Admissibility(True, "unrefined: the whole carrier")
    atoms = F.conjuncts(t.phi)
    bad = [a for a in atoms if not _upper_bound(a, t.binder)]
    if bad:
        return Admissibility(False, f"{F.pretty(bad[0])} is not an upper bound on {t.binder} "
                                    f"independent of {t.binder}")
    return Admissibility(True, "upper bounds independent of the bound variable")
