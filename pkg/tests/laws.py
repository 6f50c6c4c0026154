"""The barycentric and cost-addition laws, as a randomized check over an instance."""

import math

import numpy as np

from qetlab.costs import INF, RealInterval, forgetful, instance_rplus, instance_unit_forgetful

TOL = 1e-12


def instances():
    return {"rplus": instance_rplus(), "unit": instance_unit_forgetful(),
            "forgetful[0,5]": forgetful(RealInterval(5.0))}


def element(cs, rng):
    hi = getattr(getattr(cs, "base", cs), "hi", INF)
    if hi == INF and rng.random() < 0.1:
        return INF
    if rng.random() < 0.1:
        return float(rng.choice([0.0, min(hi, 1.0)]))
    return float(rng.uniform(0, min(hi, 10.0)))


def cost(rng):
    if rng.random() < 0.1:
        return INF
    return float(rng.choice([0.0, rng.uniform(0, 10)]))


def weight(rng):
    u = rng.random()
    if u < 0.05:
        return 0.0
    if u < 0.1:
        return 1.0
    return float(rng.random())


def close(cs, x, y):
    if math.isinf(x) or math.isinf(y):
        return x == y
    return abs(x - y) <= TOL


def law_failures(cs, n, seed=0):
    """Run n rounds of every law; return the list of (law, inputs) that failed."""
    rng = np.random.default_rng(seed)
    R = instance_rplus()
    bad = []
    for _ in range(n):
        a, b, c, d = (element(cs, rng) for _ in range(4))
        r, s = weight(rng), weight(rng)
        x, y = cost(rng), cost(rng)
        checks = [
            ("unit weight", cs.bary(1.0, a, b), a),
            ("skew commutativity", cs.bary(r, a, b), cs.bary(1 - r, b, a)),
            ("idempotence", cs.bary(r, a, a), a),
            ("zero cost", cs.cadd(0.0, c), c),
            ("cost associativity", cs.cadd(x, cs.cadd(y, c)), cs.cadd(x + y, c)),
            ("interchange", cs.bary(r, cs.cadd(x, c), cs.cadd(y, d)),
             cs.cadd(R.bary(r, x, y), cs.bary(r, c, d))),
            ("scalar zero", cs.scalar(0.0, a), cs.bottom),
            ("scalar one", cs.scalar(1.0, a), a),
        ]
        if r * s != 1:
            t = (s - r * s) / (1 - r * s)
            checks.append(("associativity", cs.bary(s, cs.bary(r, a, b), c),
                           cs.bary(r * s, a, cs.bary(t, b, c))))
        if not cs.leq(cs.bottom, a):
            bad.append(("bottom least", (a,)))
        for name, lhs, rhs in checks:
            if not close(cs, lhs, rhs):
                bad.append((name, (a, b, c, d, r, s, x, y, lhs, rhs)))
    return bad
