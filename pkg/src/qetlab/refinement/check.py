"""Subtyping and syntax-directed refinement checking of cost-structure terms.

Checking pushes an expected type through ``lam``, ``letrec``, ``case``
and ``forall``; everything else synthesizes a type and meets the
expectation through one subtyping step.  Base subtyping produces a
validity obligation for the oracle, and the verdict of a derivation is
the meet of the verdicts of all its obligations.

Instantiation of a ``forall`` in function position takes its witness from
``instantiations`` (variable name to a CS term or formula term).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import cslang as C
from ..cslang import KTYPE, QBASIC, RINF, CSArrow, CSBasic, CSTerm
from ..cstypes import cs_typecheck
from ..denote import is_real_cost
from ..errors import CSTypeError, NotAdmissible, RefinementError, RefUnboundVariable, \
    SkeletonMismatch
from . import formula as F
from .formula import FCS, FNum, FVar, Exists, Forall, Formula, Pred
from .oracle import OracleConfig, Verdict, VerifiedSyntactic, meet, validity
from .reftypes import (Bind, DepArrow, Fact, ForallType, RefBase, RefType, admissible,
                       alpha_eq_type, ctx_env, ctx_names, extend, pretty_ctx, pretty_type,
                       rename_type, skeleton, subst_type, type_fv, unrefined)


@dataclass
class Obligation:
    rule: str
    ctx: tuple
    formula: Formula
    verdict: Verdict

    def to_json(self) -> dict:
        return {"rule": self.rule, "context": pretty_ctx(self.ctx),
                "formula": F.pretty(self.formula), **self.verdict.to_json()}


@dataclass
class RefinementResult:
    verdict: Verdict
    trace: list = field(default_factory=list)
    obligations: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {**self.verdict.to_json(), "trace": list(self.trace),
                "obligations": [o.to_json() for o in self.obligations]}


def _same_base(a, b, cs) -> bool:
    if a == b:
        return True
    return {a, b} == {KTYPE, RINF} and cs is not None and is_real_cost(cs)


def _avoid(ctx, *more) -> set:
    names = set(ctx_names(ctx))
    for e in ctx:
        names |= F.fv(e.phi) if isinstance(e, Fact) else type_fv(e.type)
    for m in more:
        names |= set(m)
    return names


def _embed(v: CSTerm):
    return F.from_cs(v)


# subtyping

class Subtyper:
    def __init__(self, config: OracleConfig, obligations: list | None = None):
        self.cfg = config
        self.obligations = obligations if obligations is not None else []

    def subtype(self, ctx, t1: RefType, t2: RefType, rule: str = "sub") -> Verdict:
        if alpha_eq_type(t1, t2):
            return VerifiedSyntactic("reflexivity")
        if isinstance(t1, RefBase) and isinstance(t2, RefBase):
            if not _same_base(t1.base, t2.base, self.cfg.cs):
                raise SkeletonMismatch(f"{t1.base} is not a subtype of {t2.base}")
            z = t2.binder
            taken = _avoid(ctx)
            if z in taken:
                z = F.fresh(z, taken | F.fv(t1.phi) | F.fv(t2.phi))
            phi = Forall(z, t2.base, F.Implies(F.rename(t1.phi, t1.binder, z),
                                                F.rename(t2.phi, t2.binder, z)))
            if t2.phi == F.TOP:
                verdict: Verdict = VerifiedSyntactic("unrefined target")
            else:
                verdict = validity(ctx, phi, self.cfg)
            self.obligations.append(Obligation(rule, tuple(ctx), phi, verdict))
            return verdict
        if isinstance(t1, DepArrow) and isinstance(t2, DepArrow):
            x = self._common(ctx, t1, t2)
            left = self.subtype(ctx, t2.dom, t1.dom, rule)
            right = self.subtype(extend(ctx, Bind(x, t2.dom)), rename_type(t1.cod, t1.var, x),
                                 rename_type(t2.cod, t2.var, x), rule)
            return meet(left, right)
        if isinstance(t1, ForallType) and isinstance(t2, ForallType):
            x = self._common(ctx, t1, t2)
            bound = self.subtype(ctx, t2.bound, t1.bound, rule)
            body = self.subtype(extend(ctx, Bind(x, t2.bound)), rename_type(t1.body, t1.var, x),
                                rename_type(t2.body, t2.var, x), rule)
            return meet(bound, body)
        if isinstance(t2, ForallType) and t2.var not in type_fv(t1):
            x = t2.var
            if x in _avoid(ctx):
                x = F.fresh(x, _avoid(ctx) | type_fv(t1))
            return self.subtype(extend(ctx, Bind(x, t2.bound)), t1,
                                rename_type(t2.body, t2.var, x), rule)
        raise SkeletonMismatch(f"{pretty_type(t1)} and {pretty_type(t2)} have different shapes")

    @staticmethod
    def _common(ctx, t1, t2) -> str:
        x = t2.var
        avoid = _avoid(ctx, type_fv(t1), type_fv(t2))
        return x if x not in avoid else F.fresh(x, avoid)


def subtype(ctx, t1: RefType, t2: RefType, config: OracleConfig | None = None) -> Verdict:
    return Subtyper(config or OracleConfig()).subtype(tuple(ctx), t1, t2)


# checking

class Checker:
    def __init__(self, config: OracleConfig, instantiations: dict | None = None):
        self.cfg = config
        self.sig = config.signature
        self.inst = dict(instantiations or {})
        self.trace: list[str] = []
        self.obligations: list[Obligation] = []
        self.sub = Subtyper(config, self.obligations)
        self.depth = 0

    def _log(self, rule: str, ctx, t: CSTerm, ty: RefType | None = None):
        line = f"{'  ' * self.depth}({rule}) {pretty_ctx(ctx)} |- {C.pretty(t)}"
        if ty is not None:
            line += f" : {pretty_type(ty)}"
        self.trace.append(line)

    def _rebind(self, ctx, name: str, body: CSTerm, also=()) -> tuple[str, CSTerm]:
        """Rename a binder that would shadow a context variable."""
        taken = _avoid(ctx, also)
        if name not in taken:
            return name, body
        new = C.fresh_name(name, taken | C.all_names(body))
        return new, C.subst(body, {name: C.CVar(new)})

    # checking mode

    def check(self, ctx, t: CSTerm, ty: RefType) -> None:
        if isinstance(ty, ForallType):
            self._log("Gen", ctx, t, ty)
            x = ty.var
            avoid = _avoid(ctx, C.free_vars(t))
            body = ty.body
            if x in avoid:
                x = F.fresh(x, avoid | type_fv(ty.body))
                body = rename_type(body, ty.var, x)
            self.depth += 1
            self.check(extend(ctx, Bind(x, ty.bound)), t, body)
            self.depth -= 1
            return
        if isinstance(t, C.CLam) and isinstance(ty, DepArrow):
            self._log("=>i", ctx, t, ty)
            x, body = self._rebind(ctx, t.param, t.body, type_fv(ty))
            self.depth += 1
            self.check(extend(ctx, Bind(x, ty.dom)), body, rename_type(ty.cod, ty.var, x))
            self.depth -= 1
            return
        if isinstance(t, C.CLetrec):
            adm = admissible(ctx, ty)
            if not adm:
                raise NotAdmissible(f"letrec {t.fun}: {adm.reason}")
            self._log("rec", ctx, t, ty)
            f, lam = self._rebind(ctx, t.fun, C.CLam(t.param, t.body), type_fv(ty))
            self.depth += 1
            self.check(extend(ctx, Bind(f, ty)), lam, ty)
            self.depth -= 1
            return
        if isinstance(t, C.CCase):
            self._log("case", ctx, t, ty)
            self.depth += 1
            for sub_ctx, body in self._case_branches(ctx, t):
                self.check(sub_ctx, body, ty)
            self.depth -= 1
            return
        got = self.synth(ctx, t)
        self._log("<:", ctx, t, ty)
        self.sub.subtype(ctx, got, ty)

    def _case_branches(self, ctx, t: C.CCase):
        scrut = self.synth(ctx, t.scrutinee)
        if not isinstance(scrut, RefBase) or not isinstance(scrut.base, CSBasic):
            raise SkeletonMismatch("case scrutinee is not of a data type")
        if not C.is_value(t.scrutinee):
            raise RefinementError("case scrutinee must be a value")
        v = _embed(t.scrutinee)
        for arm in t.arms:
            cons = self.sig.constructors[arm.cons]
            arg_types = [CSBasic(a.name) for a in cons.classical_args + cons.quantum_args]
            body, names = arm.body, []
            entries = []
            for x, a in zip(arm.binders, arg_types):
                x2, body = self._rebind(extend(ctx, *entries), x, body, F.term_fv(v))
                names.append(x2)
                entries.append(Bind(x2, RefBase(a)))
            pattern = FCS(C.CCons(arm.cons, tuple(C.CVar(x) for x in names)))
            entries.append(Fact(F.rel("eq", v, pattern)))
            yield extend(ctx, *entries), body
        if t.default is not None:
            y, body = self._rebind(ctx, t.default.binder, t.default.body, F.term_fv(v))
            entries = [Bind(y, RefBase(scrut.base, scrut.binder, scrut.phi)),
                       Fact(F.rel("eq", FVar(y), v))]
            for arm in t.arms:
                cons = self.sig.constructors[arm.cons]
                args = cons.classical_args + cons.quantum_args
                taken = _avoid(ctx, {y})
                xs = []
                for _ in args:
                    xs.append(F.fresh("A", taken))
                    taken.add(xs[-1])
                ne: Formula = F.rel("ne", FVar(y), FCS(C.CCons(arm.cons,
                                                               tuple(C.CVar(x) for x in xs))))
                for x, a in reversed(list(zip(xs, args))):
                    ne = Forall(x, CSBasic(a.name), ne)
                entries.append(Fact(ne))
            yield extend(ctx, *entries), body

    # synthesis mode

    def lookup(self, ctx, name: str) -> RefType:
        for e in reversed(ctx):
            if isinstance(e, Bind) and e.name == name:
                return e.type
        raise RefUnboundVariable(f"unbound variable {name}")

    def _base(self, ctx, v: CSTerm, want=None) -> RefBase:
        ty = self.synth(ctx, v)
        if not isinstance(ty, RefBase) or (want is not None and ty.base != want
                                           and not _same_base(ty.base, want, self.cfg.cs)):
            raise SkeletonMismatch(f"{C.pretty(v)} has type {pretty_type(ty)}")
        return ty

    @staticmethod
    def _at(ty: RefBase, v) -> Formula:
        """The refinement of ``ty`` with its binder replaced by ``v``."""
        return F.subst(ty.phi, {ty.binder: v})

    def _fresh_z(self, ctx, *types) -> list:
        avoid = _avoid(ctx)
        for t in types:
            avoid |= F.fv(t.phi) | F.bound_vars(t.phi) | {t.binder}
        out = []
        for _ in range(len(types) or 1):
            z = F.fresh("Z", avoid)
            avoid.add(z)
            out.append(z)
        return out

    def synth(self, ctx, t: CSTerm) -> RefType:
        if isinstance(t, C.CVar):
            ty = self.lookup(ctx, t.name)
            if isinstance(ty, RefBase):
                z = ty.binder if ty.binder != t.name else F.fresh(ty.binder, {t.name})
                phi = F.rename(ty.phi, ty.binder, z) if z != ty.binder else ty.phi
                ty = RefBase(ty.base, z, F.conj(phi, F.rel("eq", FVar(z), FVar(t.name))))
            self._log("ax", ctx, t, ty)
            return ty
        if isinstance(t, C.CReal):
            ty = RefBase(RINF, "Z", F.rel("eq", FVar("Z"), FNum(float(t.value))))
            self._log("real", ctx, t, ty)
            return ty
        if isinstance(t, C.CKet):
            ty = RefBase(QBASIC, "Z", F.rel("eq", FVar("Z"), FCS(t)))
            self._log("st", ctx, t, ty)
            return ty
        if isinstance(t, (C.CGate, C.CMeas)):
            arg = self._base(ctx, t.arg, QBASIC)
            z = self._fresh_z(ctx, arg)[0]
            ty = RefBase(QBASIC, z, F.conj(F.rel("eq", FVar(z), FCS(t)),
                                           self._at(arg, _embed(t.arg))))
            self._log("un" if isinstance(t, C.CGate) else "meas", ctx, t, ty)
            return ty
        if isinstance(t, C.CTensor):
            a, b = self._base(ctx, t.left, QBASIC), self._base(ctx, t.right, QBASIC)
            z = self._fresh_z(ctx, a, b)[0]
            ty = RefBase(QBASIC, z, F.conj(F.rel("eq", FVar(z), FCS(t)),
                                           self._at(a, _embed(t.left)),
                                           self._at(b, _embed(t.right))))
            self._log("prod", ctx, t, ty)
            return ty
        if isinstance(t, C.CCons):
            cons = self.sig.constructors.get(t.name)
            if cons is None:
                raise SkeletonMismatch(f"unknown constructor {t.name}")
            parts = [self._base(ctx, a) for a in t.args]
            z = self._fresh_z(ctx, *parts)[0] if parts else "Z"
            ty = RefBase(CSBasic(cons.result.name), z, F.conj(
                F.rel("eq", FVar(z), FCS(t)),
                *(self._at(p, _embed(a)) for p, a in zip(parts, t.args))))
            self._log("cons", ctx, t, ty)
            return ty
        if isinstance(t, C.CAdd):
            a, b = self._base(ctx, t.left, RINF), self._base(ctx, t.right)
            z0, z1 = self._fresh_z(ctx, a, b)
            z = F.fresh("Z", _avoid(ctx, {z0, z1}))
            body = F.conj(F.rel("eq", FVar(z), F.FOp("cadd", (FVar(z0), FVar(z1)))),
                          self._at(a, FVar(z0)), self._at(b, FVar(z1)))
            ty = RefBase(KTYPE, z, F.exists_many([(z0, RINF), (z1, KTYPE)], body))
            self._log("+^", ctx, t, ty)
            return ty
        if isinstance(t, C.CBary):
            a, b = self._base(ctx, t.left), self._base(ctx, t.right)
            w = self._base(ctx, t.weight, QBASIC)
            z0, z1 = self._fresh_z(ctx, a, b)
            z = F.fresh("Z", _avoid(ctx, {z0, z1}))
            body = F.conj(F.rel("eq", FVar(z),
                                F.FOp("bary", (FVar(z0), _embed(t.weight), FVar(z1)))),
                          self._at(a, FVar(z0)), self._at(b, FVar(z1)),
                          self._at(w, _embed(t.weight)))
            ty = RefBase(KTYPE, z, F.exists_many([(z0, KTYPE), (z1, KTYPE)], body))
            self._log("bary", ctx, t, ty)
            return ty
        if isinstance(t, C.CApp):
            return self._app(ctx, t)
        if isinstance(t, C.CCase):
            return self._case_synth(ctx, t)
        if isinstance(t, C.CLam):
            sk = self._skeleton(ctx, t)
            x, body = self._rebind(ctx, t.param, t.body)
            dom = unrefined(sk.dom)
            self.depth += 1
            cod = self.synth(extend(ctx, Bind(x, dom)), body)
            self.depth -= 1
            ty = DepArrow(x, dom, cod)
            self._log("=>i", ctx, t, ty)
            return ty
        if isinstance(t, C.CLetrec):
            ty = unrefined(self._skeleton(ctx, t))
            self.check(ctx, t, ty)
            return ty
        raise TypeError(t)

    def _skeleton(self, ctx, t: CSTerm):
        try:
            return cs_typecheck(ctx_env(ctx), t, signature=self.sig, cs=self.cfg.cs)
        except CSTypeError as exc:
            raise SkeletonMismatch(exc.message) from None

    def _app(self, ctx, t: C.CApp) -> RefType:
        arg = t.arg
        if isinstance(t.fun, C.CLam):
            # a redex: type the body under the argument's own type
            aty = self.synth(ctx, arg)
            x, body = self._rebind(ctx, t.fun.param, t.fun.body, C.free_vars(arg))
            self.depth += 1
            res = self.synth(extend(ctx, Bind(x, aty)), body)
            self.depth -= 1
            return self._result(ctx, x, res, t)
        if isinstance(t.fun, C.CLetrec) and t.fun.ann is None:
            # the domain of an unannotated recursive function comes from its argument
            fty = unrefined(CSArrow(self._skeleton(ctx, arg), self._skeleton(ctx, t)))
            self.check(ctx, t.fun, fty)
        else:
            fty = self.synth(ctx, t.fun)
        while isinstance(fty, ForallType):
            if fty.var not in self.inst:
                raise RefinementError(f"no instantiation given for {fty.var}")
            w = self.inst[fty.var]
            w_cs = w if not isinstance(w, (FVar, FNum, FCS, F.FOp, F.FCall)) else F.to_cs(w)
            if w_cs is not None and not isinstance(skeleton(fty.bound), CSArrow):
                self.check(ctx, w_cs, fty.bound)
            wt = w if isinstance(w, (FVar, FNum, FCS, F.FOp, F.FCall)) else _embed(w)
            fty = subst_type(fty.body, {fty.var: wt})
            self._log("Inst", ctx, t.fun, fty)
        if not isinstance(fty, DepArrow):
            raise SkeletonMismatch(f"{C.pretty(t.fun)} is not a function")
        self.depth += 1
        self.check(ctx, arg, fty.dom)
        self.depth -= 1
        return self._result(ctx, fty.var, fty.cod, t)

    def _result(self, ctx, x: str, res: RefType, app: C.CApp) -> RefType:
        if x in type_fv(res):
            if not C.is_value(app.arg):
                raise RefinementError(f"dependent argument {C.pretty(app.arg)} is not a value")
            res = subst_type(res, {x: _embed(app.arg)})
        self._log("=>e", ctx, app, res)
        return res

    def _case_synth(self, ctx, t: C.CCase) -> RefType:
        """The join of the branches: some branch's facts hold and so does its type."""
        disjuncts, base = [], None
        z = None
        for sub_ctx, body in self._case_branches(ctx, t):
            ty = self.synth(sub_ctx, body)
            if not isinstance(ty, RefBase):
                return unrefined(self._skeleton(ctx, t))
            base = ty.base if base is None else base
            if z is None:
                z = F.fresh("Z", _avoid(ctx))
            extra = sub_ctx[len(ctx):]
            phi = F.conj(*(e.phi for e in extra if isinstance(e, Fact)),
                         F.rename(ty.phi, ty.binder, z))
            binds = [(e.name, skeleton(e.type)) for e in extra if isinstance(e, Bind)]
            for e in extra:
                if isinstance(e, Bind) and isinstance(e.type, RefBase) and e.type.phi != F.TOP:
                    phi = F.conj(F.subst(e.type.phi, {e.type.binder: FVar(e.name)}), phi)
            disjuncts.append(F.exists_many(binds, phi))
        ty = RefBase(base, z, disjuncts[0] if len(disjuncts) == 1 else F.Or(tuple(disjuncts)))
        self._log("case", ctx, t, ty)
        return ty


def check_refined(ctx, term: CSTerm, ty: RefType, config: OracleConfig | None = None,
                  instantiations: dict | None = None) -> RefinementResult:
    """Check ``ctx |- term : ty``; the verdict is the meet of all side conditions."""
    cfg = config or OracleConfig()
    ctx = tuple(ctx)
    try:
        cs_typecheck(ctx_env(ctx), term, skeleton(ty), signature=cfg.signature, cs=cfg.cs)
    except CSTypeError as exc:
        raise SkeletonMismatch(f"skeleton check failed: {exc.message}") from None
    chk = Checker(cfg, instantiations)
    chk.check(ctx, term, ty)
    verdict = meet(*(o.verdict for o in chk.obligations))
    return RefinementResult(verdict, chk.trace, chk.obligations)
