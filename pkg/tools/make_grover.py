"""Write the Grover corpus programs for n = 1, 2, 3.

Each ``grover{n}.aql`` declares the diffusion operator G and the oracle UF
for the all-ones marked item, on n data qubits plus one ancilla.  The
matching ``grover{n}_err.csl`` holds the continuation returning the
probability that the data register does not read the marked item.

    python tools/make_grover.py [outdir]
"""

import sys
from fractions import Fraction
from pathlib import Path

import numpy as np


def frac(x: float) -> str:
    f = Fraction(x).limit_denominator(1 << 12)
    assert abs(float(f) - x) < 1e-12
    return str(f)


def matrix(m: np.ndarray) -> str:
    rows = ("[" + ", ".join(frac(v) for v in row) + "]" for row in m.real)
    return "[" + ",\n   ".join(rows) + "]"


def diffusion(n: int) -> np.ndarray:
    d = 2 ** n
    phi = np.full((d, 1), d ** -0.5)
    return np.kron(2 * phi @ phi.T - np.eye(d), np.eye(2))


def oracle(n: int) -> np.ndarray:
    d = 2 ** (n + 1)
    u = np.zeros((d, d))
    marked = 2 ** n - 1
    for x in range(2 ** n):
        for y in (0, 1):
            u[2 * x + (y ^ (x == marked)), 2 * x + y] = 1
    return u


def rotate(n: int) -> np.ndarray:
    """|a b c ...> -> |b c ... a> on n qubits."""
    d = 2 ** n
    u = np.zeros((d, d))
    for x in range(d):
        u[((x << 1) | (x >> (n - 1))) & (d - 1), x] = 1
    return u


def start_ket(n: int) -> str:
    terms = []
    for x in range(2 ** n):
        bits = format(x, f"0{n}b")
        terms.append(f"1/sqrt({2 ** (n + 1)})|{bits}0>")
        terms.append(f"-1/sqrt({2 ** (n + 1)})|{bits}1>")
    return "ket[" + " + ".join(terms).replace("+ -", "- ") + "]"


def program(n: int) -> str:
    return f"""data Nat = 0 | s(Nat;)
unitary G = {matrix(diffusion(n))}
unitary UF = {matrix(oracle(n))}
input i : Nat = 1
main : Q
(letrec grov m : Nat => Q = case m of
  | 0 -> {start_ket(n)}
  | s(k;) -> G (UF (grov k))) i
"""


def err(n: int) -> str:
    decl = ""
    step = "collapse1({})"
    if n > 1:
        decl = f"unitary ROT = {matrix(rotate(n))}\n"
        step = "ROT (collapse1({}))"
    body, arg = "real 0", None
    args = ["X"]
    for _ in range(n - 1):
        args.append(step.format(args[-1]))
    for a in reversed(args):
        body = f"real 1 (+p0 {a}) ({body})" if body != "real 0" else f"real 1 (+p0 {a}) real 0"
    return f"{decl}lam X. {body}\n"


def main(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    for n in (1, 2, 3):
        (out / f"grover{n}.aql").write_text(program(n))
        (out / f"grover{n}_err.csl").write_text(err(n))


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else
         Path(__file__).resolve().parent.parent / "src" / "qetlab" / "corpus")
