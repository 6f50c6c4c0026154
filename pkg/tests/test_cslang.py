import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qetlab import cslang as C
from qetlab.costs import instance_rplus, instance_unit_forgetful
from qetlab.csl import format_cs_program, load_cs_program, parse_cs_term, parse_cs_type
from qetlab.cstypes import check_cs_program, cs_typecheck
from qetlab.denote import (BOTTOM, Evaluator, denote, denote_closed_cost, inhabits)
from qetlab.errors import CSTypeError, NotFunctionalType, OperandNotValue
from qetlab.bundled import entry
from qetlab.linalg import QState, measure_prob, random_state

from strategies import KT, Q, cs_terms, k_terms, q_values, states, typed_cs_terms

R = instance_rplus()
ECOST = load_cs_program(entry("ecost").text()).main
PSI = QState(3, [0, 0.5, 0, 2 ** -0.5, 0.5, 0, 0, 0])


def test_ecost_type():
    assert cs_typecheck({}, ECOST, parse_cs_type("Q => R"), cs=R) == parse_cs_type("Q => R")


def test_duplication_allowed():
    cs_typecheck({}, parse_cs_term("lam X. tensor(X, X)"), parse_cs_type("Q => Q"))


def test_letrec_needs_functional_type():
    with pytest.raises(NotFunctionalType):
        cs_typecheck({}, parse_cs_term("letrec F X = X"), parse_cs_type("Q"))


def test_operand_must_be_value():
    with pytest.raises(OperandNotValue):
        cs_typecheck({}, C.CApp(parse_cs_term("lam X. real 0"), C.CApp(
            parse_cs_term("lam Y. Y"), C.CKet(PSI))))


def test_mismatch():
    with pytest.raises(CSTypeError):
        cs_typecheck({}, parse_cs_term("real 1 +^ ket[1|0>]"))


def test_denote_examples():
    assert denote_closed_cost(C.CApp(ECOST, C.CKet(PSI)), R, 64).value == pytest.approx(1.5, abs=1e-6)
    assert denote(C.CReal(2.5)) == 2.5
    v = QState(2, np.array([1, 0, 1, 1]) / math.sqrt(3))
    out = denote(parse_cs_term("collapse1(X)", bound=("X",)), {"X": v})
    assert out == QState(2, [0, 0, 2 ** -0.5, 2 ** -0.5])


def test_closed_cost_reports():
    res = denote_closed_cost(parse_cs_term("real 2 +^ real 3"), R)
    assert (res.value, res.converged) == (5, True)
    loop = parse_cs_term("(letrec F X = real 1 +^ F X) ket[1|0>]")
    res = denote_closed_cost(loop, R, 32)
    assert not res.converged and res.value == 32
    assert res.to_json()["exhausted"] is True


@given(states())
def test_bary_clause(s):
    t = parse_cs_term("real 2 (+p0 X) real 6", bound=("X",))
    p = measure_prob(0, s)
    assert denote(t, {"X": s}) == pytest.approx(R.bary(p, 2.0, 6.0), abs=1e-12)


@given(states())
def test_kleene_iterates_increase(s):
    prev = 0.0
    for b in range(0, 12):
        ev = Evaluator(R, b)
        v = ev.cost(ev.eval(C.CApp(ECOST, C.CKet(s)), {}))
        assert v >= prev - 1e-12
        prev = v
    assert prev <= 1 + 2 * measure_prob(1, s) + 1e-9


@given(typed_cs_terms())
def test_generated_terms_typecheck(pair):
    term, ty = pair
    cs_typecheck({}, term, ty, cs=R)


@pytest.mark.parametrize("cs", [R, instance_unit_forgetful()], ids=lambda c: c.name)
@given(pair=typed_cs_terms())
def test_type_soundness(cs, pair):
    term, ty = pair
    if cs is not R and _has_large_reals(term):
        return
    v = denote(term, {}, cs, budget=6)
    assert inhabits(v, ty, cs)
    if ty == KT:
        assert v is BOTTOM or cs.contains(v)


def _has_large_reals(t):
    return any(isinstance(u, C.CReal) and u.value > 1 for u in C.subterms(t))


@given(k_terms({"X": Q}), q_values({}), states())
def test_substitution_lemma(body, v, s):
    rho = {}
    direct = denote(C.subst(body, {"X": v}), rho, R, budget=6)
    shifted = denote(body, {"X": denote(v, rho, R)}, R, budget=6)
    assert Evaluator(R).cost(direct) == pytest.approx(Evaluator(R).cost(shifted), abs=1e-9)


@given(cs_terms())
def test_print_parse_roundtrip(t):
    assert C.alpha_eq(parse_cs_term(C.pretty(t), bound=tuple(C.free_vars(t))), t)


def test_nested_bary_roundtrip():
    t = parse_cs_term("lam X. real 1 (+p0 X) (real 1 (+p0 H (collapse1(X))) real 0)")
    assert C.alpha_eq(parse_cs_term(C.pretty(t)), t)


def test_program_roundtrip():
    prog = load_cs_program(entry("grover2").continuation_text())
    again = load_cs_program(format_cs_program(prog))
    assert C.alpha_eq(again.main, prog.main)
    assert again.signature.unitaries["ROT"] == prog.signature.unitaries["ROT"]


@given(cs_terms(), st.sampled_from(["A", "B"]), q_values({"V": Q}))
def test_cs_substitution_free_variables(t, x, v):
    out = C.subst(t, {x: v})
    expect = C.free_vars(t) - {x}
    if x in C.free_vars(t):
        expect |= C.free_vars(v)
    assert C.free_vars(out) == expect
