"""The ten acceptance criteria, one test each, each printing a single PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from qetlab import cslang as C
from qetlab import pars
from qetlab import source as S
from qetlab.aql import parse_program, parse_type
from qetlab.bundled import corpus_dir, entry
from qetlab.costs import instance_rplus, instance_unit_forgetful
from qetlab.csl import load_cs_program
from qetlab.denote import denote_closed_cost
from qetlab.errors import LinearityViolation
from qetlab.linalg import QState, measure_prob, post_measure, random_state
from qetlab.qet import Translator, zero_continuation
from qetlab.refinement import (Bind, Falsified, NotFalsified, RefBase, check_refined,
                               parse_formula, parse_rty, replay, validity)
from qetlab.soundness import check_expected_cost, check_expected_value
from qetlab.typecheck import check_program, check_term

from conftest import accepted
from laws import instances, law_failures

R = instance_rplus()
PSI = "ket[1/2|001> + 1/sqrt(2)|011> + 1/2|100>]"
DAGGER = "forall Z : R. Z <= 1 + p1(X) * c(H(collapse1(X))) => Z <= c(X)"


@pytest.fixture
def report(capsys):
    t0 = time.perf_counter()

    def done(n, ok, detail, limit):
        dt = time.perf_counter() - t0
        ok = ok and dt < limit
        with capsys.disabled():
            print(f"\ncriterion {n:>2}: {'PASS' if ok else 'FAIL'}  {dt:7.3f}s  {detail}")
        assert ok, detail
    return done


def _cost_of_main(name, state):
    """Denotation of the translated main term with y bound to ``state``."""
    prog = parse_program(entry(name).text())
    tr = Translator(prog.signature)
    cps = tr.term(prog.main, zero_continuation(tr.fresh("K")))
    return denote_closed_cost(cps, R, 64, rho={tr.var_name("y"): state}).value


def test_criterion_01_measurement(report):
    s = 1 / math.sqrt(3)
    thirds = QState.from_amplitudes([s, 0, s, s])
    h = 1 / math.sqrt(2)
    p1 = measure_prob(1, thirds)
    post = post_measure(1, thirds).amplitudes
    ok = abs(p1 - 2 / 3) <= 1e-9 and np.allclose(post, [0, 0, h, h], atol=1e-9, rtol=0)
    report(1, ok, f"p1 = {p1:.12f}, M1 = {np.round(post.real, 12).tolist()}", 0.5)


def test_criterion_02_cointoss(report):
    prog = parse_program(entry("cointoss").text())
    rep = check_expected_cost(prog, depth=40, budget=64, tol=1e-6)
    ok = abs(rep.operational - 1.5) < 1e-6 and abs(rep.denotational - 1.5) < 1e-6
    report(2, ok, f"operational {rep.operational:.9f}, denotational {rep.denotational:.9f}", 1)


def test_criterion_03_cointoss_law(report):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        s = random_state(rng, 3)
        worst = max(worst, abs(_cost_of_main("cointoss", s) - (1 + 2 * measure_prob(1, s))))
    report(3, worst < 1e-6, f"max deviation over 100 states {worst:.2e}", 10)


def test_criterion_04_oracle_equivalence(report):
    entries = accepted()
    failures, checked = [], 0
    for e in entries:
        prog = parse_program(e.text())
        rep = check_expected_cost(prog, depth=e.depth, budget=e.budget, tol=1e-6, name=e.name)
        checked += 1
        if not rep.passed:
            failures.append(rep.summary())
        if e.continuation:
            k = load_cs_program(e.continuation_text(), prog.signature)
            rep = check_expected_value(prog, None, k.main, e.depth, e.budget, 1e-6,
                                       name=e.name, signature=k.signature)
            checked += 1
            if not rep.passed:
                failures.append(rep.summary())
    ok = len(entries) >= 10 and not failures
    report(4, ok, f"{len(entries)} programs, {checked} comparisons, failures {failures}", 60)


def _nat(i):
    t = S.Cons("0")
    for _ in range(i):
        t = S.Cons("s", (t,), ())
    return t


def test_criterion_05_grover(report):
    e = entry("grover2")
    prog = parse_program(e.text())
    k = load_cs_program(e.continuation_text(), prog.signature)
    got = {}
    for i in range(3):
        rep = check_expected_value(prog, {"i": _nat(i)}, k.main, cs=instance_unit_forgetful(),
                                   signature=k.signature)
        got[i] = rep.denotational
    want = {i: math.cos((2 * i + 1) * math.asin(0.5)) ** 2 for i in range(3)}
    ok = all(abs(got[i] - want[i]) < 1e-6 for i in range(3)) and abs(got[1]) < 1e-6
    report(5, ok, "err(i) = " + ", ".join(f"{got[i]:.9f}" for i in range(3)), 5)


def test_criterion_06_laws(report):
    results = {}
    for name, cs in instances().items():
        results[name] = law_failures(cs, 10_000, seed=7)
    ok = all(not bad for bad in results.values())
    detail = ", ".join(f"{n}: {len(b)} failures" for n, b in results.items())
    report(6, ok, f"10000 rounds per instance; {detail}", 5 * len(results))


def test_criterion_07_linearity(report):
    try:
        check_program(parse_program(entry("clone").text()))
        rejected = False
    except LinearityViolation:
        rejected = True
    stated = {"cointoss": ("Q -o Q", lambda m: m.fun),
              "qwalk": ("Q -o (Q -o Q) => Q", lambda m: m.fun.fun),
              "grover2": ("Nat => Q", lambda m: m.fun)}
    accepted_at = []
    for name, (ty, pick) in stated.items():
        prog = parse_program(entry(name).text())
        check_program(prog)
        check_term({}, {}, pick(prog.main), parse_type(ty, prog.signature), prog.signature)
        accepted_at.append(f"{name} : {ty}")
    report(7, rejected, f"clone rejected; {'; '.join(accepted_at)}", 0.5)


def test_criterion_08_refinement(report):
    text = (corpus_dir() / "ecost.rty").read_text()
    good, bad = parse_rty(text), parse_rty((corpus_dir() / "ecost_bad.rty").read_text())
    ecost = load_cs_program(entry("ecost").text()).main
    ctx = (Bind("X", RefBase(C.QBASIC)),)

    def dagger(spec):
        phi = parse_formula(DAGGER, spec.signature, bound=["X"], defs=spec.defs)
        return validity(ctx, phi, spec.config())

    d_good = dagger(good)
    t_good = check_refined(good.ctx, ecost, good.type, good.config()).verdict
    d_bad = dagger(bad)
    t_bad = check_refined(bad.ctx, ecost, bad.type, bad.config()).verdict
    ok = (isinstance(d_good, NotFalsified) and d_good.samples >= 1000
          and isinstance(t_good, NotFalsified) and t_good.samples >= 1000
          and isinstance(d_bad, Falsified) and replay(d_bad.witness, bad.config())
          and isinstance(t_bad, Falsified) and replay(t_bad.witness, bad.config()))
    report(8, ok, f"1+2p1: {d_good} / {t_good}; 1+p1: Falsified, replayed", 30)


def test_criterion_09_pars_invariants(report):
    runs = 0
    for e in accepted():
        p = parse_program(e.text())
        dist = pars.WeightedDist([(S.subst(p.main, p.sigma()), 1.0)])
        prev_nf = 0.0
        for _ in range(min(e.depth, 30) * 4):
            nf = sum(q for u, q in dist if S.is_value(u))
            assert nf >= prev_nf - 1e-15, e.name
            prev_nf = nf
            for u, q in dist:
                if S.is_value(u):
                    continue
                a, b = pars.step(u), pars.step(u)
                assert abs(sum(w for _, w in a.result) - 1) <= 1e-12, e.name
                assert a.cost == b.cost and [(S.term_key(x), w) for x, w in a.result] == \
                    [(S.term_key(x), w) for x, w in b.result], e.name
            dist = pars.lift_step(dist).result
            runs += 1
    report(9, True, f"{runs} lifted steps over {len(accepted())} programs", 60)


def test_criterion_10_qwalk_cointoss(report):
    rng = np.random.default_rng(10)
    worst = 0.0
    for j in range(50):
        s = random_state(rng, 1 + j % 3)
        worst = max(worst, abs(_cost_of_main("qwalk", s) - _cost_of_main("cointoss", s)))
    report(10, worst < 1e-6, f"max disagreement over 50 states {worst:.2e}", 30)
