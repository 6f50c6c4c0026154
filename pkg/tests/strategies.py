"""Hypothesis strategies for source terms, CS terms and states."""

import math

import numpy as np
from hypothesis import strategies as st

from qetlab import cslang as C
from qetlab import source as S
from qetlab.linalg import BUILTIN_GATES, QState, random_state

NAMES = ["x", "y", "z", "f"]
GATES = [BUILTIN_GATES[g] for g in ("H", "X", "CNOT")]
S2 = 1 / math.sqrt(2)
KETS = [QState.basis("0"), QState.basis("1"), QState(1, [S2, S2]), QState.basis("01")]

names = st.sampled_from(NAMES)
kets = st.sampled_from(KETS)


@st.composite
def states(draw, max_qubits=3):
    n = draw(st.integers(1, max_qubits))
    return random_state(np.random.default_rng(draw(st.integers(0, 2 ** 32 - 1))), n)


def _case(children):
    arm = st.builds(lambda c, b, body: S.Arm(c, (), (b,), body),
                    st.sampled_from(["inj0", "inj1"]), names, children)
    default = st.none() | st.builds(S.Default, names, children)
    return st.builds(lambda s, arms, d: S.Case(s, tuple({a.cons: a for a in arms}.values()), d),
                     children, st.lists(arm, min_size=1, max_size=2), default)


def source_terms(max_leaves=12):
    leaves = st.builds(S.Var, names) | st.builds(S.Ket, kets)
    return st.recursive(leaves, lambda c: st.one_of(
        st.builds(S.Lam, names, c),
        st.builds(S.App, c, c),
        st.builds(S.UnitaryApp, st.sampled_from(GATES), c),
        st.builds(S.Meas, c),
        st.builds(S.Tensor, c, c),
        st.builds(S.Tick, c),
        st.builds(S.Letrec, names, names, c),
        st.builds(lambda b, a: S.Cons(b, (), (a,)), st.sampled_from(["inj0", "inj1"]), c),
        _case(c),
    ), max_leaves=max_leaves)


CNAMES = ["A", "B", "V", "F"]
cnames = st.sampled_from(CNAMES)


def cs_values(children=None):
    base = st.builds(C.CVar, cnames) | st.builds(C.CKet, kets)
    if children is None:
        return base
    return base | st.builds(C.CLam, cnames, children)


def cs_terms(max_leaves=12):
    leaves = (st.builds(C.CVar, cnames) | st.builds(C.CKet, kets)
              | st.builds(C.CReal, st.sampled_from([0.0, 0.5, 1.0, 2.0])))

    def extend(c):
        value = st.builds(C.CVar, cnames) | st.builds(C.CKet, kets) | st.builds(C.CLam, cnames, c)
        return st.one_of(
            st.builds(C.CLam, cnames, c),
            st.builds(C.CApp, c, value),
            st.builds(C.CGate, st.sampled_from(GATES), c),
            st.builds(C.CMeas, st.sampled_from([0, 1]), c),
            st.builds(C.CTensor, c, c),
            st.builds(C.CAdd, c, c),
            st.builds(C.CBary, c, st.builds(C.CVar, cnames) | st.builds(C.CKet, kets), c),
            st.builds(lambda b, a: C.CCons(b, (a,)), st.sampled_from(["inj0", "inj1"]), c),
            st.builds(lambda f, x, b: C.CLetrec(f, x, b), cnames, cnames, c),
            st.builds(lambda s, a, b, d: C.CCase(s, (C.CArm("inj0", (a,), d),), None),
                      c, cnames, cnames, c),
        )
    return st.recursive(leaves, extend, max_leaves=max_leaves)


# type-directed generation of well-typed CS terms

Q, OUTT = C.QBASIC, C.CSBasic("Out")
KT = C.KTYPE


@st.composite
def q_values(draw, env, depth=2):
    qvars = [x for x, t in env.items() if t == Q]
    options = ["ket"] + (["var"] * 2 if qvars else []) + (["gate", "meas"] if depth > 0 else [])
    kind = draw(st.sampled_from(options))
    if kind == "ket":
        return C.CKet(draw(kets))
    if kind == "var":
        return C.CVar(draw(st.sampled_from(qvars)))
    inner = draw(q_values(env, depth - 1))
    if kind == "gate":
        return C.CGate(draw(st.sampled_from(GATES)), inner)
    return C.CMeas(draw(st.sampled_from([0, 1])), inner)


def _fresh(env, stem):
    i = 0
    while f"{stem}{i}" in env:
        i += 1
    return f"{stem}{i}"


@st.composite
def k_terms(draw, env, depth=3):
    """Closed-under-env terms of type K."""
    fns = [x for x, t in env.items() if t == C.CSArrow(Q, KT)]
    options = ["real"]
    if depth > 0:
        options += ["add", "bary", "case", "letrec", "redex"] + (["call"] * 2 if fns else [])
    kind = draw(st.sampled_from(options))
    if kind == "real":
        return C.CReal(draw(st.sampled_from([0.0, 0.25, 1.0, 2.0])))
    sub = lambda e=env: draw(k_terms(e, depth - 1))
    if kind == "add":
        return C.CAdd(C.CReal(draw(st.sampled_from([0.0, 1.0, 0.5]))), sub())
    if kind == "bary":
        return C.CBary(sub(), draw(q_values(env)), sub())
    if kind == "call":
        return C.CApp(C.CVar(draw(st.sampled_from(fns))), draw(q_values(env)))
    if kind == "case":
        a, b = _fresh(env, "A"), _fresh(env, "B")
        arms = (C.CArm("inj0", (a,), sub({**env, a: Q})), C.CArm("inj1", (b,), sub({**env, b: Q})))
        scrut = C.CCons(draw(st.sampled_from(["inj0", "inj1"])), (draw(q_values(env)),))
        return C.CCase(scrut, arms)
    if kind == "redex":
        x = _fresh(env, "X")
        return C.CApp(C.CLam(x, sub({**env, x: Q})), draw(q_values(env)))
    f, x = _fresh(env, "F"), _fresh(env, "X")
    body = sub({**env, f: C.CSArrow(Q, KT), x: Q})
    return C.CApp(C.CLetrec(f, x, body), draw(q_values(env)))


@st.composite
def typed_cs_terms(draw, env=None):
    """A pair (term, type) with env |- term : type."""
    env = dict(env or {})
    ty = draw(st.sampled_from(["K", "Q", "Out", "Q=>K"]))
    if ty == "K":
        return draw(k_terms(env)), KT
    if ty == "Q":
        return draw(q_values(env, 3)), Q
    if ty == "Out":
        return C.CCons(draw(st.sampled_from(["inj0", "inj1"])), (draw(q_values(env)),)), OUTT
    x = _fresh(env, "X")
    return C.CLam(x, draw(k_terms({**env, x: Q}))), C.CSArrow(Q, KT)


# closed, well-typed source terms of type Q

def _lin(var):
    return [S.Var(var)] if var else []


@st.composite
def q_source(draw, var=None, depth=3):
    """A term of type Q that uses the affine variable ``var`` at most once."""
    options = ["ket"] + (["var"] * 2 if var else [])
    if depth > 0:
        options += ["gate", "tensor", "tick", "case", "redex", "loop"]
    kind = draw(st.sampled_from(options))
    sub = lambda v=var: draw(q_source(v, depth - 1))
    if kind == "ket":
        return S.Ket(draw(kets))
    if kind == "var":
        return S.Var(var)
    if kind == "gate":
        return S.UnitaryApp(draw(st.sampled_from(GATES)), sub())
    if kind == "tensor":
        left_gets = draw(st.booleans())
        return S.Tensor(sub(var if left_gets else None), sub(None if left_gets else var))
    if kind == "tick":
        return S.Tick(sub())
    if kind == "case":
        # the scrutinee takes the variable or leaves it to the branches
        scrut_gets = draw(st.booleans())
        rest = None if scrut_gets else var
        a, b = f"a{depth}", f"b{depth}"
        arms = (S.Arm("inj0", (), (a,), draw(q_source(draw(st.sampled_from([a, rest])), depth - 1))),
                S.Arm("inj1", (), (b,), draw(q_source(draw(st.sampled_from([b, rest])), depth - 1))))
        return S.Case(S.Meas(sub(var if scrut_gets else None)), arms)
    if kind == "redex":
        x = f"x{depth}"
        return S.App(S.Lam(x, draw(q_source(x, depth - 1))), sub())
    gate = draw(st.sampled_from(GATES[:2]))
    f, x, a, b = (f"{c}{depth}" for c in "fxab")
    body = S.Case(S.Tick(S.Meas(S.Var(x))), (
        S.Arm("inj0", (), (a,), S.Var(a)),
        S.Arm("inj1", (), (b,), S.App(S.Var(f), S.UnitaryApp(gate, S.Var(b))))))
    return S.App(S.Letrec(f, x, body, S.LinArrow(S.QTYPE, S.QTYPE)), sub())
