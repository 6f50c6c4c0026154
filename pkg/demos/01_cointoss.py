"""Cointoss from source to cost.

A fair coin is tossed until it shows 0, each toss costing one tick.  We
typecheck the program, watch the expected cost build up under reduction,
then get the same number in one shot from the expectation transform.
"""

from qetlab import pars
from qetlab import source as S
from qetlab.aql import parse_program
from qetlab.bundled import entry
from qetlab.costs import instance_rplus
from qetlab.denote import denote_closed_cost
from qetlab.qet import Translator, zero_continuation
from qetlab.typecheck import check_program

prog = parse_program(entry("cointoss").text())
print("program type:", check_program(prog).type)

# Operational side: partial sums of the expected cost, one round per measurement.
closed = S.subst(prog.main, prog.sigma())
for d in (1, 2, 3, 4, 10, 40):
    print(f"  depth {d:2}: ecost >= {pars.ecost_lower(closed, d):.12f}")

# Denotational side: translate with the zero continuation and evaluate.
tr = Translator(prog.signature)
cps = tr.term(closed, zero_continuation(tr.fresh("K")))
res = denote_closed_cost(cps, instance_rplus(), 64)
print(f"denotation: {res.value}  (converged: {res.converged})")

# A Monte-Carlo estimate for good measure.
rep = pars.sample(closed, seed=1, trials=5000)
print(f"sampled mean cost: {rep.mean_cost:.4f} +- {rep.std_error:.4f}")
