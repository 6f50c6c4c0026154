"""Error probability of Grover search on two data qubits.

Feeding the err continuation through the transform gives the probability
of missing the marked item after i iterations.  It should follow
cos^2((2i+1) asin(1/2)), which vanishes at i = 1.
"""

import math

from qetlab import source as S
from qetlab.aql import parse_program
from qetlab.bundled import entry
from qetlab.costs import instance_unit_forgetful
from qetlab.csl import load_cs_program
from qetlab.soundness import check_expected_value

e = entry("grover2")
prog = parse_program(e.text())
err = load_cs_program(e.continuation_text(), prog.signature)


def nat(i):
    t = S.Cons("0")
    for _ in range(i):
        t = S.Cons("s", (t,), ())
    return t


print(" i   reduction   transform   closed form")
for i in range(4):
    rep = check_expected_value(prog, {"i": nat(i)}, err.main, cs=instance_unit_forgetful(),
                               signature=err.signature)
    exact = math.cos((2 * i + 1) * math.asin(0.5)) ** 2
    print(f"{i:2}   {rep.operational:9.6f}   {rep.denotational:9.6f}   {exact:9.6f}")
