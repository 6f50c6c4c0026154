"""Small-step probabilistic reduction with costs.

``step`` performs one reduction of a closed term and returns the cost and
the resulting subdistribution.  ``lift_step`` applies ``step`` to every
non-terminal element of a distribution.  ``run`` drives the lifted relation
for a bounded number of rounds; a round either is a single lifted step
(``granularity="step"``) or advances every live term through its
deterministic reductions up to and including its next measurement
(``granularity="round"``, the default), which is what makes depth-bounded
lower bounds on expected cost converge at a useful rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from . import linalg
from .costs import CostStructure, convex_sum
from .errors import StuckTerm
from .source import (App, Case, Cons, Ket, Lam, Letrec, Meas, Tensor, Term, Tick, UnitaryApp,
                     decompose, is_value, map_children, pretty, subst, term_key)

PRUNE = 1e-15


@dataclass
class WeightedDist:
    entries: list = field(default_factory=list)
    pruned: float = 0.0

    @classmethod
    def from_pairs(cls, pairs, pruned: float = 0.0) -> "WeightedDist":
        merged: dict = {}
        for t, p in pairs:
            k = term_key(t)
            if k in merged:
                merged[k][1] += p
            else:
                merged[k] = [t, p]
        entries = []
        for t, p in merged.values():
            if p < PRUNE:
                pruned += p
            else:
                entries.append((t, min(p, 1.0)))
        return cls(entries, pruned)

    @property
    def mass(self) -> float:
        return float(sum(p for _, p in self.entries))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def prob_of(self, t: Term) -> float:
        k = term_key(t)
        return float(sum(p for u, p in self.entries if term_key(u) == k))

    def to_json(self) -> list:
        return [{"term": pretty(t), "prob": p}
                for t, p in sorted(self.entries, key=lambda e: (-e[1], pretty(e[0])))]


@dataclass(frozen=True)
class ReductionStep:
    cost: float
    result: WeightedDist
    rule: str = ""


class Terminal:
    """Marker returned by ``step`` for values."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __bool__(self):
        return False

    def __repr__(self):
        return "TERMINAL"


TERMINAL = Terminal()


def _dirac(t: Term) -> WeightedDist:
    return WeightedDist([(t, 1.0)])


def contract(redex: Term) -> tuple[float, list, str]:
    """Fire a redex: (cost, [(term, prob)], rule name)."""
    if isinstance(redex, App):
        f, v = redex.fun, redex.arg
        if isinstance(f, Lam):
            return 0.0, [(subst(f.body, {f.param: v}), 1.0)], "beta"
        if isinstance(f, Letrec):
            return 0.0, [(subst(f.body, {f.fun: f, f.param: v}), 1.0)], "letrec"
        raise StuckTerm(f"cannot apply {pretty(f)}")
    if isinstance(redex, UnitaryApp):
        if not isinstance(redex.arg, Ket):
            raise StuckTerm(f"unitary applied to non-state {pretty(redex.arg)}")
        return 0.0, [(Ket(linalg.apply_unitary(redex.gate, redex.arg.state)), 1.0)], "unitary"
    if isinstance(redex, Meas):
        if not isinstance(redex.arg, Ket):
            raise StuckTerm(f"measuring non-state {pretty(redex.arg)}")
        s = redex.arg.state
        out = []
        for i in (0, 1):
            p = linalg.measure_prob(i, s)
            if p > linalg.ZERO_PROB:
                out.append((Cons(f"inj{i}", (), (Ket(linalg.post_measure(i, s)),)), p))
        return 0.0, out, "meas"
    if isinstance(redex, Tensor):
        a, b = redex.left, redex.right
        if not (isinstance(a, Ket) and isinstance(b, Ket)):
            raise StuckTerm("tensor of non-states")
        return 0.0, [(Ket(linalg.tensor(a.state, b.state)), 1.0)], "tensor"
    if isinstance(redex, Case):
        v = redex.scrutinee
        if isinstance(v, Cons):
            for arm in redex.arms:
                if arm.cons == v.name:
                    args = v.classical_args + v.quantum_args
                    if len(args) != len(arm.binders):
                        raise StuckTerm(f"pattern arity mismatch for {v.name}")
                    return 0.0, [(subst(arm.body, dict(zip(arm.binders, args))), 1.0)], "case"
        if redex.default is not None:
            d = redex.default
            return 0.0, [(subst(d.body, {d.binder: v}), 1.0)], "case"
        raise StuckTerm(f"no branch matches {pretty(v)}")
    if isinstance(redex, Tick):
        return 1.0, [(redex.arg, 1.0)], "tick"
    raise StuckTerm(f"no rule applies to {pretty(redex)}")


def step(term: Term):
    """One reduction step of a closed term, or ``TERMINAL`` for values."""
    dec = decompose(term)
    if dec is None:
        if is_value(term):
            return TERMINAL
        raise StuckTerm(f"no redex in {pretty(term)}")
    ctx, redex = dec
    cost, results, rule = contract(redex)
    dist = WeightedDist([(ctx.plug(t), p) for t, p in results],
                        pruned=max(0.0, 1.0 - sum(p for _, p in results)) if rule == "meas" else 0.0)
    return ReductionStep(cost, dist, rule)


def lift_step(dist: WeightedDist) -> ReductionStep:
    pairs = []
    cost = 0.0
    pruned = dist.pruned
    for t, p in dist.entries:
        s = step(t)
        if s is TERMINAL:
            pairs.append((t, p))
            continue
        cost += p * s.cost
        pruned += p * s.result.pruned
        pairs.extend((u, p * q) for u, q in s.result.entries)
    return ReductionStep(cost, WeightedDist.from_pairs(pairs, pruned), "lift")


@dataclass
class RunReport:
    depth: int
    accumulated_cost: float
    live: WeightedDist
    normal_forms: WeightedDist
    pruned: float = 0.0
    steps: int = 0

    @property
    def residual_mass(self) -> float:
        return self.live.mass

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "accumulated_cost": self.accumulated_cost,
            "live_mass": self.live.mass,
            "normal_form_mass": self.normal_forms.mass,
            "pruned": self.pruned,
            "steps": self.steps,
            "normal_forms": self.normal_forms.to_json(),
            "live": self.live.to_json(),
        }


def _advance(t: Term, cap: int):
    """Deterministic steps up to and including the next measurement.

    Returns (cost, [(term, prob)], pruned, steps).
    """
    cost = 0.0
    steps = 0
    while steps < cap:
        s = step(t)
        if s is TERMINAL:
            return cost, [(t, 1.0)], 0.0, steps
        steps += 1
        cost += s.cost
        if s.rule == "meas":
            return cost, s.result.entries, s.result.pruned, steps
        t = s.result.entries[0][0]
    return cost, [(t, 1.0)], 0.0, steps


def iterate(term: Term, max_depth: int, *, granularity: str = "round",
            round_cap: int = 10_000) -> Iterator[RunReport]:
    """Yield the run report after each of ``max_depth`` rounds."""
    if granularity not in ("round", "step"):
        raise ValueError("granularity must be 'round' or 'step'")
    live = WeightedDist([(term, 1.0)]) if not is_value(term) else WeightedDist()
    nf = WeightedDist([(term, 1.0)]) if is_value(term) else WeightedDist()
    cost, pruned, steps = 0.0, 0.0, 0
    for depth in range(1, max_depth + 1):
        pairs = list(nf.entries)
        for t, p in live.entries:
            if granularity == "step":
                s = step(t)
                if s is TERMINAL:
                    pairs.append((t, p))
                    continue
                steps += 1
                cost += p * s.cost
                pruned += p * s.result.pruned
                pairs.extend((u, p * q) for u, q in s.result.entries)
            else:
                c, out, pr, n = _advance(t, round_cap)
                steps += n
                cost += p * c
                pruned += p * pr
                pairs.extend((u, p * q) for u, q in out)
        merged = WeightedDist.from_pairs(pairs)
        pruned += merged.pruned
        live = WeightedDist([(t, p) for t, p in merged.entries if not is_value(t)])
        nf = WeightedDist([(t, p) for t, p in merged.entries if is_value(t)])
        yield RunReport(depth, cost, live, nf, pruned, steps)


def run(term: Term, max_depth: int, *, granularity: str = "round",
        round_cap: int = 10_000) -> RunReport:
    report = RunReport(0, 0.0,
                       WeightedDist([(term, 1.0)]) if not is_value(term) else WeightedDist(),
                       WeightedDist([(term, 1.0)]) if is_value(term) else WeightedDist())
    for report in iterate(term, max_depth, granularity=granularity, round_cap=round_cap):
        if not report.live.entries:
            return report
    return report


def ecost_lower(term: Term, max_depth: int, **kw) -> float:
    return run(term, max_depth, **kw).accumulated_cost


def nf_dist(term: Term, max_depth: int, **kw) -> WeightedDist:
    return run(term, max_depth, **kw).normal_forms


def evalue(term: Term, f: Callable[[Term], object], max_depth: int,
           cost_structure: CostStructure, **kw):
    nf = nf_dist(term, max_depth, **kw)
    return convex_sum(cost_structure, [(p, f(b)) for b, p in nf.entries])


# Monte-Carlo sampling

@dataclass
class SampleReport:
    seed: int
    trials: int
    mean_cost: float
    std_error: float
    histogram: dict
    nonterminating: int = 0

    def to_json(self) -> dict:
        return {"seed": self.seed, "trials": self.trials, "mean_cost": self.mean_cost,
                "std_error": self.std_error, "nonterminating": self.nonterminating,
                "histogram": dict(sorted(self.histogram.items()))}


class NonTerminationGuard(Exception):
    """Raised for a single trial that exceeds its step budget."""


def sample_trial(term: Term, rng: np.random.Generator, step_budget: int) -> tuple:
    """Follow one random path; only the drawn measurement branch is computed."""
    cost = 0.0
    t = term
    for _ in range(step_budget):
        dec = decompose(t)
        if dec is None:
            if is_value(t):
                return cost, t
            raise StuckTerm(f"no redex in {pretty(t)}")
        ctx, redex = dec
        if isinstance(redex, Meas) and isinstance(redex.arg, Ket):
            s = redex.arg.state
            i = 0 if rng.random() < linalg.measure_prob(0, s) else 1
            t = ctx.plug(Cons(f"inj{i}", (), (Ket(linalg.post_measure(i, s)),)))
            continue
        c, results, _ = contract(redex)
        cost += c
        t = ctx.plug(results[0][0])
    raise NonTerminationGuard(f"trial exceeded {step_budget} steps")


def _round_kets(t: Term, digits: int) -> Term:
    if isinstance(t, Ket):
        amps = np.round(t.state.amplitudes, digits) + 0.0
        return Ket(linalg.QState.from_amplitudes(amps, normalize=True))
    return map_children(t, lambda c: _round_kets(c, digits))


def outcome_label(t: Term, digits: int = 6) -> str:
    """Histogram key: the pretty-printed value with amplitudes rounded."""
    return pretty(_round_kets(t, digits))


def sample(term: Term, seed: int, trials: int, *, step_budget: int = 100_000,
           label: Callable[[Term], str] = outcome_label) -> SampleReport:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    costs = []
    hist: dict = {}
    guarded = 0
    for _ in range(trials):
        try:
            c, nf = sample_trial(term, rng, step_budget)
        except NonTerminationGuard:
            guarded += 1
            continue
        costs.append(c)
        key = label(nf)
        hist[key] = hist.get(key, 0) + 1
    arr = np.array(costs) if costs else np.zeros(1)
    se = float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return SampleReport(seed, trials, float(arr.mean()), se, hist, guarded)
