"""Certifying a cost bound with refinement types.

ECOST is the translated cointoss.  With c(X) = 1 + 2 p1(X) the bound
survives a thousand sampled states; halve the slope and the oracle
produces a concrete state where it breaks, which we replay.
"""

from qetlab.bundled import corpus_dir, entry
from qetlab.csl import load_cs_program
from qetlab.refinement import Falsified, check_refined, parse_rty, pretty_type, replay

ecost = load_cs_program(entry("ecost").text()).main

for name in ("ecost.rty", "ecost_bad.rty"):
    spec = parse_rty((corpus_dir() / name).read_text())
    cfg = spec.config(samples=1000, seed=0)
    res = check_refined(spec.ctx, ecost, spec.type, cfg)
    print(f"{name}: {pretty_type(spec.type)}")
    print(f"  verdict {res.verdict}, {len(res.obligations)} obligations")
    if isinstance(res.verdict, Falsified):
        w = res.verdict.witness
        x = w.valuation["X"]
        print(f"  counterexample on {x.n_qubits} qubits, instances {w.instances}")
        print(f"  replays: {replay(w, cfg)}")
