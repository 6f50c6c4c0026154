import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qetlab import cslang as C
from qetlab.bundled import entry
from qetlab.costs import instance_rplus
from qetlab.csl import load_cs_program, parse_cs_term
from qetlab.denote import denote
from qetlab.errors import (IllTypedFormula, NotAdmissible, RefUnboundVariable,
                           SkeletonMismatch)
from qetlab.linalg import BUILTIN_GATES
from qetlab.refinement import (And, Bind, DepArrow, Falsified, FCS, FCall, FNum, FOp,
                               FormulaEvaluator, FVar, Implies, Not, NotFalsified, OracleConfig,
                               Or, Pred, RefBase, VerifiedSyntactic, admissible, alpha_eq_type,
                               check_refined, meet, member, parse_formula, parse_rtype,
                               parse_rty, pretty, pretty_type, replay, skeleton, subst_type,
                               subtype, validity, wf)
from qetlab.refinement import formula as F
from qetlab.refinement.oracle import sample_environments
from qetlab.refinement.reftypes import check_closed
from qetlab.source import Signature

from strategies import k_terms, q_values, states

SIG = Signature.builtin()
R = instance_rplus()
CFG = OracleConfig(SIG, R, {})
XQ = (Bind("X", RefBase(C.QBASIC)),)
ECOST = load_cs_program(entry("ecost").text()).main
DAGGER = "forall Z : R. Z <= 1 + p1(X) * c(H(collapse1(X))) => Z <= c(X)"


def spec_with(c):
    return parse_rty(f"cs rplus\ndef c(X : Q) : R = {c}\nlet X : Q\n"
                     f"type (Y : Q) => {{Z : R | Z <= c(Y)}}")


def rtype(text, bound=("X",)):
    return parse_rtype(text, SIG, bound=list(bound))


# well-formedness and skeletons

def test_wf_examples():
    wf(XQ, rtype("{Z : R | Z <= 1 + 2 * p1(X)}"), SIG)
    assert str(skeleton(parse_rtype("(X : Q) => {Z : R | Z <= 1 + 2 * p1(X)}"))) == "Q => R"
    with pytest.raises(RefUnboundVariable):
        check_closed((), rtype("{Z : Q | W = Z}", ("W",)))
    with pytest.raises(RefUnboundVariable):
        wf((), rtype("{Z : Q | W = Z}", ("W",)), SIG)
    with pytest.raises(IllTypedFormula):
        wf((), parse_rtype("{Z : R | Z <= ket[1|0>]}"), SIG)
    with pytest.raises(SkeletonMismatch):
        wf(XQ + XQ, RefBase(C.KTYPE), SIG)


def test_skeleton_drops_quantifiers():
    t = parse_rtype("forall C : Q => R. (X : Q) => {Z : R | Z <= C(X)}")
    assert str(skeleton(t)) == "Q => R"


# validity

@pytest.mark.parametrize("c, verdict", [("1 + 2 * p1(X)", NotFalsified),
                                        ("1 + p1(X)", Falsified)])
def test_dagger(c, verdict):
    spec = spec_with(c)
    phi = parse_formula(DAGGER, SIG, bound=["X"], defs=spec.defs)
    v = validity(spec.ctx, phi, spec.config())
    assert isinstance(v, verdict)
    if isinstance(v, NotFalsified):
        assert v.samples >= 1000
    else:
        assert replay(v.witness, spec.config())
        p1 = np.sum(np.abs(v.witness.valuation["X"].amplitudes.reshape(2, -1)[1]) ** 2)
        assert p1 > 0


def test_tautology_is_syntactic():
    phi = parse_formula("p1(X) <= 1 => p1(X) <= 1", SIG, bound=["X"])
    assert isinstance(validity(XQ, phi, CFG), VerifiedSyntactic)


def test_witness_json():
    spec = spec_with("1 + p1(X)")
    v = validity(spec.ctx, parse_formula(DAGGER, SIG, bound=["X"], defs=spec.defs), spec.config())
    doc = v.to_json()
    assert doc["verdict"] == "Falsified"
    assert doc["witness"]["valuation"]["X"]["qubits"] in (1, 2, 3)


def test_meet():
    a, b, c = VerifiedSyntactic("x"), NotFalsified(10), NotFalsified(5)
    assert meet(a, b) == b and meet(b, c).samples == 5 and meet() .rank == 2


# subtyping

def test_subtype_examples():
    t1, t2 = rtype("{Z | Z <= 1 + p1(X)}"), rtype("{Z | Z <= 1 + 2 * p1(X)}")
    assert isinstance(subtype(XQ, t1, t1, CFG), VerifiedSyntactic)
    assert isinstance(subtype(XQ, t1, t2, CFG), NotFalsified)
    v = subtype((), rtype("{Z | Z <= 2}", ()), rtype("{Z | Z <= 1}", ()), CFG)
    assert isinstance(v, Falsified) and 1 < v.witness.instances["Z"] <= 2
    with pytest.raises(SkeletonMismatch):
        subtype((), rtype("{Z | Z <= 2}", ()), parse_rtype("Q => K"), CFG)


def test_arrow_subtyping_is_contravariant():
    narrow = parse_rtype("{Z : R | Z <= 1} => {Z : R | Z <= 1}")
    wide = parse_rtype("{Z : R | Z <= 2} => {Z : R | Z <= 1}")
    assert not isinstance(subtype((), wide, narrow, CFG), Falsified)
    assert isinstance(subtype((), narrow, wide, CFG), Falsified)


# admissibility

def test_admissibility_examples():
    assert admissible((), parse_rtype("(X : R) => {Z : R | Z <= X * X + X + 1}"))
    bad = admissible((), parse_rtype("{Z : K | 1 [= Z}"))
    assert not bad and "upper bound" in bad.reason
    assert admissible((), parse_rtype("{Z : K | true}"))


bound_terms = st.recursive(
    st.sampled_from([FNum(0.0), FNum(1.0), FNum(2.5), FCall("p1", (FVar("X"),)),
                     FCall("p0", (FVar("X"),))]),
    lambda c: st.builds(lambda op, a, b: FOp(op, (a, b)), st.sampled_from(["+", "*", "max"]), c, c),
    max_leaves=5)


@given(st.lists(bound_terms, min_size=1, max_size=3), bound_terms)
def test_admissibility_monotone(bounds, extra):
    upper = [Pred("le", (FVar("Z"), e)) for e in bounds]
    t = RefBase(C.KTYPE, "Z", F.conj(*upper))
    assert admissible(XQ, t)
    # weakening a bound, or dropping a conjunct, keeps the shape
    looser = [Pred("le", (FVar("Z"), FOp("+", (e, extra)))) for e in bounds]
    assert admissible(XQ, RefBase(C.KTYPE, "Z", F.conj(*looser)))
    assert admissible(XQ, RefBase(C.KTYPE, "Z", F.conj(*upper[1:])))
    lower = Pred("le", (extra, FVar("Z")))
    assert not admissible(XQ, RefBase(C.KTYPE, "Z", F.conj(*upper, lower)))


# checking

@pytest.mark.parametrize("c, verdict", [("1 + 2 * p1(X)", NotFalsified),
                                        ("1 + p1(X)", Falsified)])
def test_ecost_typing(c, verdict):
    spec = spec_with(c)
    res = check_refined(spec.ctx, ECOST, spec.type, spec.config())
    assert isinstance(res.verdict, verdict)
    if isinstance(res.verdict, NotFalsified):
        assert res.verdict.samples >= 1000
    else:
        assert replay(res.verdict.witness, spec.config())
    assert any("rec" in line for line in res.trace)


def test_real_constant_is_syntactic():
    res = check_refined((), C.CReal(2.0), rtype("{Z | Z = 2}", ()), CFG)
    assert isinstance(res.verdict, VerifiedSyntactic)


def test_non_admissible_recursion():
    t = parse_rtype("(X : Q) => {Z : R | 1 <= Z}")
    with pytest.raises(NotAdmissible):
        check_refined((), ECOST, t, CFG)


def test_skeleton_mismatch():
    with pytest.raises(SkeletonMismatch):
        check_refined((), ECOST, parse_rtype("Q => Q"), CFG)


def test_qwalk_style_quantified_bound():
    # a function-typed quantifier instantiated through a declared candidate
    spec = parse_rty(
        "cs rplus\n"
        "def c(X : Q) : R = 1 + 2 * p1(X)\n"
        "inst C = c\n"
        "type forall C : (Y : Q) => {Z : R | Z <= 1 + 2 * p1(Y)}. "
        "(X : Q) => {Z : R | Z <= C(X)}")
    res = check_refined(spec.ctx, ECOST, spec.type, spec.config(samples=200),
                        instantiations=spec.inst)
    assert not isinstance(res.verdict, Falsified)


# soundness shadow: an accepted bound holds on fresh samples

BOUNDS = ["1 + 2 * p1(X)", "2", "1 + p1(X)", "3 * p0(X) + 1", "4"]


@settings(max_examples=25)
@given(k_terms({"X": C.QBASIC}, depth=2), st.sampled_from(BOUNDS), st.integers(0, 10 ** 6))
def test_soundness_shadow(body, bound, seed):
    spec = spec_with(bound)
    cfg = spec.config(samples=60, seed=seed)
    term = C.CLam("Y", C.subst(body, {"X": C.CVar("Y")}))
    res = check_refined(spec.ctx, term, spec.type, cfg)
    if isinstance(res.verdict, Falsified):
        assert replay(res.verdict.witness, cfg)
        return
    ev = FormulaEvaluator(cfg, np.random.default_rng(seed + 1))
    for rho in sample_environments(XQ, cfg, 20, seed + 2):
        s = rho["X"]
        value = denote(C.CApp(term, C.CKet(s)), {}, R, budget=cfg.budget)
        ok, _ = member(value, spec.type.cod, {"Y": s}, ev)
        assert ok


# replay: every falsification is a real counterexample

preds = st.builds(lambda rel, a, b: Pred(rel, (a, b)), st.sampled_from(["le", "lt", "eq", "ge"]),
                  bound_terms, bound_terms)
formulas = st.recursive(preds, lambda c: st.one_of(
    st.builds(lambda a, b: And((a, b)), c, c), st.builds(lambda a, b: Or((a, b)), c, c),
    st.builds(Implies, c, c), st.builds(Not, c)), max_leaves=4)


@given(formulas, st.integers(0, 1000))
def test_falsified_replays(phi, seed):
    v = validity(XQ, phi, CFG, samples=40, seed=seed)
    if isinstance(v, Falsified):
        assert replay(v.witness, CFG)
        ev = FormulaEvaluator(CFG, np.random.default_rng(0))
        assert not ev.holds(phi, v.witness.valuation)[0]


# substitution lemmas

gate_values = st.sampled_from(["H(Y)", "collapse1(Y)", "X(H(Y))", "collapse0(H(Y))"])


@given(formulas, gate_values, states())
def test_formula_substitution(phi, v_text, s):
    v = parse_cs_term(v_text, bound=("Y",))
    ev = FormulaEvaluator(CFG, np.random.default_rng(0))
    lhs = ev.holds(F.subst(phi, {"X": F.from_cs(v)}), {"Y": s})[0]
    rhs = ev.holds(phi, {"Y": s, "X": denote(v, {"Y": s})})[0]
    assert lhs == rhs


@given(st.lists(bound_terms, min_size=1, max_size=2), gate_values, states(),
       st.floats(0, 4))
def test_type_substitution(bounds, v_text, s, z):
    t = RefBase(C.RINF, "Z", F.conj(*[Pred("le", (FVar("Z"), e)) for e in bounds]))
    v = parse_cs_term(v_text, bound=("Y",))
    ev = FormulaEvaluator(CFG, np.random.default_rng(0))
    lhs = member(z, subst_type(t, {"X": F.from_cs(v)}), {"Y": s}, ev)[0]
    rhs = member(z, t, {"Y": s, "X": denote(v, {"Y": s})}, ev)[0]
    assert lhs == rhs


def test_capture_avoiding_type_substitution():
    t = rtype("(Y : Q) => {Z : R | Z <= p1(X) + p1(Y)}")
    out = subst_type(t, {"X": FVar("Y")})
    assert out.var != "Y"
    assert alpha_eq_type(out, parse_rtype("(W : Q) => {Z : R | Z <= p1(Y) + p1(W)}",
                                          SIG, bound=["Y"]))


# the .rty format

def test_rty_printing_roundtrip():
    for text in ["(X : Q) => {Z : R | Z <= 1 + 2 * p1(X)}",
                 "forall C : Q => R. (X : Q) => {Z : R | Z <= C(X)}",
                 "{Z : K | Z [= 1 /\\ ~(Z = 0) \\/ false}",
                 "Q => {Z : R | exists W : R. Z <= W /\\ W <= 2}"]:
        t = parse_rtype(text, SIG)
        assert alpha_eq_type(parse_rtype(pretty_type(t), SIG), t), text


def test_rty_parse_errors():
    from qetlab.errors import ParseError
    with pytest.raises(ParseError):
        parse_rty("cs nonsense\ntype K")
    with pytest.raises(ParseError):
        parse_rty("type {Z : R | Z <= }")


def _inj(name, arg):
    return C.CCons(name, (arg,))


def _case_on(name):
    arms = (C.CArm("inj0", ("A0",), C.CReal(0.0)), C.CArm("inj1", ("B0",), C.CReal(2.0)))
    return C.CCase(_inj(name, C.CVar("Y")), arms, None)


ZERO_KET = parse_cs_term("ket[|0>]")


@pytest.mark.parametrize("body, bound", [
    # the sum's right operand is only defined through cadd: sample it, then solve the total
    (C.CAdd(C.CReal(0.5), C.CApp(C.CLetrec("F0", "X0", C.CReal(1.0)), ZERO_KET)),
     "1 + 2 * p1(X)"),
    # the arm variable is pinned by the constructor equation, not sampled
    (C.CAdd(C.CReal(0.0), _case_on("inj1")), "1 + 2 * p1(X)"),
    # a synthesised case is a disjunction; each arm is instantiated on its own
    (C.CBary(C.CCase(_inj("inj0", C.CVar("Y")),
                     (C.CArm("inj0", ("A0",), C.CReal(0.0)),
                      C.CArm("inj1", ("B0",), C.CReal(0.0))), None),
             C.CVar("Y"), C.CReal(2.0)), "3 * p0(X) + 1"),
])
def test_false_bounds_are_found(body, bound):
    spec = spec_with(bound)
    cfg = spec.config(samples=60)
    res = check_refined(spec.ctx, C.CLam("Y", body), spec.type, cfg)
    assert isinstance(res.verdict, Falsified)
    assert replay(res.verdict.witness, cfg)
