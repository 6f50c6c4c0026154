"""Cost structures: barycentric algebras with a bottom, an order and cost addition.

Elements of the real instances are Python floats, with ``math.inf`` as the
top of the extended half-line.  Scaling follows the convention 0 * inf = 0,
which keeps scalar multiplication continuous at the bottom element.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable

from .errors import ChainViolation, ProbabilityMassExceeded

INF = math.inf
DIVERGENCE = 1e15


def ext_mul(r: float, a: float) -> float:
    """r * a on the extended reals with 0 * inf = 0."""
    if r == 0 or a == 0:
        return 0.0
    return r * a


def ext_add(a: float, b: float) -> float:
    return a + b


class Kegelspitze(ABC):
    """Pointed barycentric algebra with an order and chain suprema."""

    name = "kegelspitze"

    @property
    @abstractmethod
    def bottom(self): ...

    @abstractmethod
    def bary(self, r: float, a, b): ...

    @abstractmethod
    def leq(self, a, b) -> bool: ...

    @abstractmethod
    def contains(self, a) -> bool: ...

    def scalar(self, r: float, a):
        return self.bary(r, a, self.bottom)

    def lub(self, chain: Iterable):
        out = self.bottom
        for a in chain:
            out = a
        return out

    def distance(self, a, b) -> float:
        raise NotImplementedError

    def eq(self, a, b, tol: float = 1e-12) -> bool:
        return self.distance(a, b) <= tol


class CostStructure(Kegelspitze):
    """A Kegelspitze with cost addition ``cadd(c, a)`` for c in the extended reals."""

    name = "cost-structure"

    @abstractmethod
    def cadd(self, c: float, a): ...


class RealInterval(Kegelspitze):
    """The interval [lo, hi] of extended reals with the usual mean."""

    def __init__(self, hi: float = INF, name: str | None = None):
        self.hi = hi
        self.name = name or ("rplus" if hi == INF else f"[0,{hi:g}]")

    @property
    def bottom(self) -> float:
        return 0.0

    def bary(self, r: float, a: float, b: float) -> float:
        if r >= 1:
            return a
        if r <= 0:
            return b
        out = ext_mul(r, a) + ext_mul(1 - r, b)
        return min(out, self.hi)

    def leq(self, a: float, b: float) -> bool:
        return a <= b

    def contains(self, a) -> bool:
        return isinstance(a, (int, float)) and not math.isnan(a) and 0 <= a <= self.hi

    def lub(self, chain: Iterable) -> float:
        out = 0.0
        for a in chain:
            out = max(out, a)
        return out

    def distance(self, a: float, b: float) -> float:
        if a == b:
            return 0.0
        return abs(a - b)


class RPlus(RealInterval, CostStructure):
    """Extended non-negative reals with ordinary addition."""

    def __init__(self):
        super().__init__(INF, "rplus")

    def cadd(self, c: float, a: float) -> float:
        return c + a

    def __repr__(self):
        return "RPlus()"


class Forgetful(CostStructure):
    """Any Kegelspitze with cost addition that forgets the cost: c +^ a = a."""

    def __init__(self, base: Kegelspitze, name: str | None = None):
        self.base = base
        self.name = name or f"forgetful({base.name})"

    @property
    def bottom(self):
        return self.base.bottom

    def bary(self, r, a, b):
        return self.base.bary(r, a, b)

    def leq(self, a, b) -> bool:
        return self.base.leq(a, b)

    def contains(self, a) -> bool:
        return self.base.contains(a)

    def lub(self, chain):
        return self.base.lub(chain)

    def distance(self, a, b) -> float:
        return self.base.distance(a, b)

    def cadd(self, c, a):
        return a

    def __repr__(self):
        return f"Forgetful({self.base.name})"


def instance_rplus() -> RPlus:
    return RPlus()


def instance_unit_forgetful() -> Forgetful:
    return Forgetful(RealInterval(1.0, "[0,1]"), name="unit")


def forgetful(k: Kegelspitze) -> Forgetful:
    return Forgetful(k)


def by_name(name: str) -> CostStructure:
    if name == "rplus":
        return instance_rplus()
    if name == "unit":
        return instance_unit_forgetful()
    raise ValueError(f"unknown cost structure {name!r}; expected rplus or unit")


def is_real_carrier(cs: Kegelspitze) -> bool:
    base = cs.base if isinstance(cs, Forgetful) else cs
    return isinstance(base, RealInterval)


def carrier_max(cs: Kegelspitze) -> float:
    base = cs.base if isinstance(cs, Forgetful) else cs
    return base.hi if isinstance(base, RealInterval) else INF


def convex_sum(cs: Kegelspitze, pairs) -> object:
    """Sum of r_i * a_i, unfolded through the binary barycentric operation."""
    pairs = [(float(r), a) for r, a in pairs]
    if any(r < 0 for r, _ in pairs):
        raise ProbabilityMassExceeded("negative probability in convex sum")
    total = math.fsum(r for r, _ in pairs)
    if total > 1 + 1e-12:
        raise ProbabilityMassExceeded(f"probabilities sum to {total!r} > 1")
    pairs = [(r, a) for r, a in pairs if r > 0]
    # descend: the weight of the last item at each level, rescaling the rest
    weights = [r for r, _ in pairs]
    levels = []
    base = cs.bottom
    m = len(pairs)
    while m > 0:
        w = min(weights[m - 1], 1.0)
        if w >= 1.0 - 1e-15:
            base = pairs[m - 1][1]
            break
        levels.append((w, pairs[m - 1][1]))
        weights = [x / (1 - w) for x in weights[: m - 1]]
        m -= 1
    val = base
    for w, a in reversed(levels):
        val = cs.bary(w, a, val)
    return val


@dataclass
class LubResult:
    value: object
    converged: bool
    iterations: int
    diverged: bool = False

    def __iter__(self):
        return iter((self.value, self.converged))


def kleene_lub(cs: Kegelspitze, chain: Iterable, tolerance: float = 1e-9,
               max_iters: int = 1000) -> LubResult:
    """Follow an increasing chain until successive iterates are within tolerance."""
    prev = None
    k = 0
    for k, a in enumerate(chain):
        if k >= max_iters:
            return LubResult(prev, False, k)
        if prev is not None:
            if not cs.leq(prev, a) and cs.distance(prev, a) > tolerance:
                raise ChainViolation(f"iterate {k} ({a!r}) is below iterate {k - 1} ({prev!r})")
            if isinstance(a, float) and a > DIVERGENCE:
                return LubResult(INF, True, k, diverged=True)
            if cs.distance(prev, a) < tolerance:
                return LubResult(a, True, k)
        prev = a
    return LubResult(prev if prev is not None else cs.bottom, False, k + 1)
