import pytest
from hypothesis import given

from qetlab import cslang as C
from qetlab import source as S
from qetlab.aql import parse_program, parse_term, parse_type
from qetlab.bundled import entry
from qetlab.costs import instance_rplus, instance_unit_forgetful
from qetlab.csl import load_cs_program, parse_cs_term, parse_cs_type
from qetlab.cstypes import cs_typecheck
from qetlab.denote import denote, denote_closed_cost
from qetlab.linalg import measure_prob
from qetlab.qet import Translator, translate_term, translate_type, translate_value, zero_continuation
from qetlab.typecheck import check_program, check_term

from conftest import accepted
from strategies import q_source, states

R = instance_rplus()
UNIT = instance_unit_forgetful()
ECOST = load_cs_program(entry("ecost").text()).main
INDICATOR = load_cs_program(entry("cascade").continuation_text()).main


@pytest.mark.parametrize("src, out", [
    ("Q", "Q"),
    ("Q -o Q", "Q => (Q => K) => K"),
    ("(Q -o Q) => Q", "(Q => (Q => K) => K) => (Q => K) => K"),
])
def test_translate_type(src, out):
    assert translate_type(parse_type(src)) == parse_cs_type(out)


def test_translate_values():
    k = parse_term("ket[1|0>]")
    assert translate_value(k) == C.CKet(k.state)
    ident = translate_value(parse_term("lam y. y"))
    assert C.alpha_eq(ident, parse_cs_term("lam Y K. K Y"))


def test_value_clause():
    k = C.CVar("K")
    assert translate_term(parse_term("ket[1|0>]"), k) == C.CApp(k, C.CKet(parse_term("ket[1|0>]").state))


def test_cointoss_translation_is_a_letrec():
    ct = translate_value(parse_program(entry("cointoss").text()).main.fun)
    assert isinstance(ct, C.CLetrec) and isinstance(ct.body, C.CLam)


@given(states())
def test_tick_meas_clause(s):
    t = parse_term("tick(meas x)")
    tr = Translator(reserved={"K"})
    out = tr.term(t, INDICATOR)
    got = denote(out, {tr.var_name("x"): s}, UNIT)
    # the forgetful cost addition drops the tick
    assert got == pytest.approx(measure_prob(0, s), abs=1e-12)
    got = denote(tr.term(t, zero_continuation()), {tr.var_name("x"): s}, R)
    assert got == 1.0


@given(states())
def test_cointoss_matches_its_cost_function(s):
    prog = parse_program(entry("cointoss").text())
    tr = Translator(prog.signature)
    cps = tr.term(prog.main, zero_continuation(tr.fresh("K")))
    y = tr.var_name("y")
    a = denote_closed_cost(cps, R, 64, rho={y: s}).value
    b = denote_closed_cost(C.CApp(ECOST, C.CVar("Y")), R, 64, rho={"Y": s}).value
    assert a == pytest.approx(b, abs=1e-6)
    assert a == pytest.approx(1 + 2 * measure_prob(1, s), abs=1e-6)


@pytest.mark.parametrize("e", accepted(), ids=lambda e: e.name)
def test_typing_preserved_on_corpus(e):
    p = parse_program(e.text())
    ty = check_program(p).type
    tr = Translator(p.signature)
    theta = {tr.var_name(d.name): translate_type(d.type) for d in p.inputs}
    k = tr.fresh("K")
    out = tr.term(p.main, C.CVar(k))
    theta[k] = C.CSArrow(translate_type(ty), C.KTYPE)
    cs_typecheck(theta, out, C.KTYPE, signature=p.signature)


@given(q_source())
def test_typing_preserved_on_generated_terms(t):
    check_term({}, {}, t, S.QTYPE)
    out = translate_term(t, zero_continuation("Z0"))
    cs_typecheck({}, out, C.KTYPE)


@given(q_source())
def test_continuation_of_value_terms(t):
    if S.is_value(t):
        assert translate_term(t, C.CVar("K")) == C.CApp(C.CVar("K"), translate_value(t))
