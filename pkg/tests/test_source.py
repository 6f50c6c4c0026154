import pytest
from hypothesis import given, strategies as st

from qetlab import source as S
from qetlab.aql import parse_program, parse_term, parse_type
from qetlab.bundled import corpus
from qetlab.errors import ParseError, TypeMismatch
from qetlab.linalg import QState
from qetlab.typecheck import validate_type

from strategies import names, source_terms

COINTOSS = "letrec ct x = case tick(meas x) of | inj0(;x0) -> x0 | inj1(;x1) -> ct (H x1)"


def roundtrip(t):
    return parse_term(S.pretty(t))


def test_cointoss_ast():
    t = parse_term(COINTOSS)
    assert isinstance(t, S.Letrec) and (t.fun, t.param) == ("ct", "x")
    case = t.body
    assert isinstance(case, S.Case) and isinstance(case.scrutinee, S.Tick)
    assert isinstance(case.scrutinee.arg, S.Meas)
    assert [a.cons for a in case.arms] == ["inj0", "inj1"]
    assert case.arms[1].quantum_binders == ("x1",)
    rec = case.arms[1].body
    assert isinstance(rec, S.App) and isinstance(rec.arg, S.UnitaryApp)
    assert rec.arg.gate.name == "H"
    assert S.free_vars(t) == frozenset()


def test_single_ket():
    t = parse_term("ket[1|0>]")
    assert isinstance(t, S.Ket) and t.state == QState.basis("0")


def test_parser_is_scope_agnostic():
    assert parse_term("lam x. y") == S.Lam("x", S.Var("y"))


def test_printing_conventions():
    f, a, b = S.Var("f"), S.Var("a"), S.Var("b")
    assert S.pretty(S.App(S.App(f, a), b)) == "f a b"
    assert S.pretty(S.Tensor(a, b)) == "tensor(a, b)"


@pytest.mark.parametrize("text, fragment", [
    ("lam x. Foo x", "unknown gate"),
    ("ket[1|0> + 1|1>]", "norm"),
    ("lam x.", "expected a term"),
    ("case x of | nope(;a) -> a", "unknown constructor"),
])
def test_parse_errors_carry_positions(text, fragment):
    with pytest.raises(ParseError) as info:
        parse_term(text)
    assert fragment in str(info.value)
    assert info.value.pos is not None


def test_types():
    assert str(parse_type("Q -o (Q -o Q) => Q")) == "Q -o (Q -o Q) => Q"
    # the exponential arrow needs a duplicable domain; the checker enforces it
    with pytest.raises(TypeMismatch):
        validate_type(parse_type("Q => Q"))


def test_free_vars():
    assert S.free_vars(S.Var("x")) == {"x"}
    assert S.free_vars(S.Lam("x", S.Var("x"))) == frozenset()
    assert S.free_vars(S.Letrec("f", "x", S.App(S.Var("f"), S.Var("y")))) == {"y"}


@pytest.mark.parametrize("e", [e for e in corpus() if e.file.endswith(".aql")],
                         ids=lambda e: e.name)
def test_corpus_roundtrip(e):
    prog = parse_program(e.text())
    assert S.alpha_eq(parse_term(S.pretty(prog.main), prog.signature), prog.main)


@given(source_terms())
def test_roundtrip(t):
    assert S.alpha_eq(roundtrip(t), t)


@given(source_terms(), names, source_terms(4))
def test_substitution_free_variables(t, x, v):
    out = S.subst(t, {x: v})
    expect = S.free_vars(t) - {x}
    if x in S.free_vars(t):
        expect |= S.free_vars(v)
    assert S.free_vars(out) == expect


@given(source_terms(), names)
def test_substitution_identity(t, x):
    assert S.alpha_eq(S.subst(t, {x: S.Var(x)}), t)


@given(source_terms(), names)
def test_substitution_fresh_and_back(t, x):
    fresh = S.fresh_name("w", S.all_names(t))
    there = S.subst(t, {x: S.Var(fresh)})
    assert S.alpha_eq(S.subst(there, {fresh: S.Var(x)}), t)


@given(source_terms())
def test_alpha_eq_reflexive_and_invariant_under_renaming(t):
    assert S.alpha_eq(t, t)
    if isinstance(t, S.Lam):
        y = S.fresh_name("v", S.all_names(t))
        renamed = S.Lam(y, S.subst(t.body, {t.param: S.Var(y)}))
        assert S.alpha_eq(renamed, t)


@given(source_terms())
def test_decompose_plugs_back(t):
    dec = S.decompose(t)
    if dec is not None:
        ctx, redex = dec
        assert ctx.plug(redex) == t
        assert not S.is_value(redex)


def test_json_ast():
    doc = S.ast_json(parse_term("tick(meas ket[1|0>])"))
    assert doc["node"] == "Tick" and doc["arg"]["node"] == "Meas"
    assert "loc" not in doc
