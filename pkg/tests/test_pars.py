import math

import numpy as np
import pytest

from qetlab import pars
from qetlab import source as S
from qetlab.aql import parse_program, parse_term
from qetlab.bundled import corpus
from qetlab.linalg import QState
from qetlab.typecheck import check_program, check_term

from conftest import accepted, program

PSI = "ket[1/2|001> + 1/sqrt(2)|011> + 1/2|100>]"


def closed(name):
    p = program(name)
    return S.subst(p.main, p.sigma())


def cons_state(t):
    assert isinstance(t, S.Cons)
    return t.name, t.quantum_args[0].state


def test_tick_step():
    s = pars.step(parse_term("tick(ket[1|0>])"))
    assert s.cost == 1 and s.rule == "tick"
    assert [(S.pretty(t), p) for t, p in s.result] == [(S.pretty(parse_term("ket[1|0>]")), 1.0)]


def test_meas_step():
    s = pars.step(parse_term(f"meas {PSI}"))
    assert s.cost == 0
    got = {cons_state(t)[0]: (cons_state(t)[1], p) for t, p in s.result}
    assert got["inj0"][1] == pytest.approx(0.75) and got["inj1"][1] == pytest.approx(0.25)
    assert got["inj1"][0] == QState.basis("100")


def test_beta_step():
    s = pars.step(parse_term("(lam x. x) ket[1|0>]"))
    assert s.cost == 0 and s.rule == "beta"
    assert s.result.entries[0][0].state == QState.basis("0")


def test_values_are_terminal():
    assert pars.step(parse_term("ket[1|0>]")) is pars.TERMINAL


def test_lift_step():
    v = parse_term("ket[1|0>]")
    assert pars.lift_step(pars.WeightedDist([(v, 1.0)])).cost == 0
    half = pars.lift_step(pars.WeightedDist([(S.Tick(v), 0.5), (v, 0.5)]))
    assert half.cost == 0.5
    assert len(half.result) == 1 and half.result.entries[0][1] == pytest.approx(1.0)
    empty = pars.lift_step(pars.WeightedDist())
    assert empty.cost == 0 and len(empty.result) == 0


def test_cointoss_run():
    r = pars.run(closed("cointoss"), 40)
    assert r.accumulated_cost == pytest.approx(1.5, abs=1e-9)
    assert r.normal_forms.mass >= 1 - 2 ** -38


def test_cointoss_partial_sums():
    # one depth unit is a round: everything up to and including the next measurement
    t = closed("cointoss")
    assert [pars.ecost_lower(t, d) for d in (1, 2, 3)] == pytest.approx([1, 1.25, 1.375])


def test_value_runs():
    v = parse_term("ket[1|0>]")
    r = pars.run(v, 5)
    assert r.accumulated_cost == 0 and r.normal_forms.mass == 1
    r = pars.run(parse_term("meas(ket[1|0>])"), 2)
    assert r.accumulated_cost == 0
    assert [cons_state(t)[0] for t, _ in r.normal_forms] == ["inj0"]


def test_nf_dist_of_meas():
    nf = pars.nf_dist(parse_term(f"meas {PSI}"), 2)
    got = {cons_state(t)[0]: p for t, p in nf}
    assert got == pytest.approx({"inj0": 0.75, "inj1": 0.25})


def test_evalue():
    from qetlab.costs import instance_unit_forgetful
    cs = instance_unit_forgetful()
    t = parse_term(f"meas {PSI}")
    assert pars.evalue(t, lambda b: 1.0 if b.name == "inj0" else 0.0, 2, cs) == pytest.approx(0.75)
    assert pars.evalue(t, lambda b: cs.bottom, 2, cs) == cs.bottom


def test_sampler():
    rep = pars.sample(closed("cointoss"), seed=7, trials=20_000)
    assert abs(rep.mean_cost - 1.5) < 0.05
    assert pars.sample(closed("tick_chain"), seed=1, trials=50).mean_cost == 4
    meas0 = pars.sample(parse_term("meas(ket[1|0>])"), seed=3, trials=100)
    assert len(meas0.histogram) == 1
    again = pars.sample(closed("cointoss"), seed=7, trials=20_000)
    assert again.mean_cost == rep.mean_cost


def test_sampler_guard():
    loop = parse_term("(letrec f x = f x) ket[1|0>]")
    rep = pars.sample(loop, seed=0, trials=3, step_budget=50)
    assert rep.nonterminating == 3


# invariants over every runnable corpus program

RUNNABLE = [e for e in accepted()]


@pytest.mark.parametrize("e", RUNNABLE, ids=lambda e: e.name)
def test_run_invariants(e):
    p = parse_program(e.text())
    t = S.subst(p.main, p.sigma())
    prev_nf, prev_cost = 0.0, 0.0
    prev_support = {}
    for r in pars.iterate(t, min(e.depth, 30)):
        total = r.live.mass + r.normal_forms.mass + r.pruned
        assert abs(total - 1) <= 1e-12 * max(1, r.depth)
        assert r.normal_forms.mass >= prev_nf - 1e-15
        assert r.accumulated_cost >= prev_cost
        for k, p_old in prev_support.items():
            assert r.normal_forms.prob_of(k) >= p_old - 1e-15
        prev_nf, prev_cost = r.normal_forms.mass, r.accumulated_cost
        prev_support = {u: q for u, q in r.normal_forms}
        if not r.live.entries:
            break


@pytest.mark.parametrize("e", RUNNABLE, ids=lambda e: e.name)
def test_step_is_deterministic(e):
    p = parse_program(e.text())
    t = S.subst(p.main, p.sigma())
    dist = pars.WeightedDist([(t, 1.0)])
    for _ in range(12):
        a, b = pars.lift_step(dist), pars.lift_step(dist)
        assert a.cost == b.cost
        assert [(S.term_key(u), q) for u, q in a.result] == [(S.term_key(u), q) for u, q in b.result]
        dist = a.result


@pytest.mark.parametrize("e", RUNNABLE, ids=lambda e: e.name)
def test_subject_reduction(e):
    p = parse_program(e.text())
    ty = check_program(p).type
    t = S.subst(p.main, p.sigma())
    dist = pars.WeightedDist([(t, 1.0)])
    for _ in range(10):
        for u, _ in dist:
            check_term({}, {}, u, ty, p.signature)
        dist = pars.lift_step(dist).result


@pytest.mark.parametrize("name", ["cointoss", "nat_loop", "cascade"])
def test_sampler_agrees_with_exact_run(name):
    t = closed(name)
    exact = pars.run(t, 40).accumulated_cost
    rep = pars.sample(t, seed=11, trials=4000)
    assert abs(rep.mean_cost - exact) <= 4 * rep.std_error + 1e-12


def test_step_granularity_partial_sums():
    # hand trace: beta, tick, meas, case, H, beta, tick, ... one tick every five steps
    t = closed("cointoss")
    got = [pars.ecost_lower(t, d, granularity="step") for d in (1, 2, 6, 7, 11, 12)]
    assert got == pytest.approx([0, 1, 1, 1.25, 1.25, 1.375], abs=1e-12)
