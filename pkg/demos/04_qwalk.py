"""A higher-order walk that is cointoss in disguise.

qwalk takes the state transformation as an argument.  Passing the
Hadamard back in should cost exactly what cointoss costs, on any input.
"""

import numpy as np

from qetlab.aql import parse_program
from qetlab.bundled import entry
from qetlab.costs import instance_rplus
from qetlab.denote import denote_closed_cost
from qetlab.linalg import measure_prob, random_state
from qetlab.qet import Translator, zero_continuation

R = instance_rplus()


def cost(name, state):
    prog = parse_program(entry(name).text())
    tr = Translator(prog.signature)
    cps = tr.term(prog.main, zero_continuation(tr.fresh("K")))
    return denote_closed_cost(cps, R, 64, rho={tr.var_name("y"): state}).value


rng = np.random.default_rng(3)
for _ in range(5):
    s = random_state(rng, 2)
    print(f"p1 = {measure_prob(1, s):.4f}   qwalk {cost('qwalk', s):.6f}"
          f"   cointoss {cost('cointoss', s):.6f}   1 + 2 p1 = {1 + 2 * measure_prob(1, s):.6f}")
