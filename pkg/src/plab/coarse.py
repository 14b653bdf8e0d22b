"""Finite-precision interfaces: binning maps, pushforward, pullback, and the
reduction that runs a discrete learner on coarse-grained observations.

A coarse-graining map pi sends continuum points to a countable label alphabet
with its own index order.  Pushing a distribution forward merges weights
exactly; pulling a label set back gives the preimage hypothesis, and
P(preimage(F)) = (pushforward P)(F) holds as an identity of rationals.
"""

from __future__ import annotations

from functools import cached_property
from typing import Container, Iterable

from .emx import FiniteHypothesis, FinSupportDist, IndexedDomain, quantile_learn, sample_complexity


class UniformBinsMap:
    """x -> floor(2^bits * x) on [0,1], clamped into [0, 2^bits - 1].

    The output alphabet is the integer range 0..2^bits-1 in numeric order
    (rank of bin b is b+1).  Points outside [0,1] are a domain error; x = 1.0
    lands in the top bin via the clamp.
    """

    kind = "uniform_bins"

    def __init__(self, bits: int):
        if not isinstance(bits, int) or bits < 0:
            raise ValueError("bits must be a nonnegative integer")
        self.bits = bits

    @cached_property
    def domain(self) -> IndexedDomain:
        return IndexedDomain.integer_range(1 << self.bits)

    def __call__(self, x) -> int:
        x = float(x)
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"point {x!r} outside [0,1]")
        return min(int(x * (1 << self.bits)), (1 << self.bits) - 1)

    def __repr__(self) -> str:
        return f"UniformBinsMap(bits={self.bits})"


class TableMap:
    """Explicit finite map given as (input, output) pairs.

    Output alphabet order is first appearance among the pair outputs; inputs
    outside the table are a domain error.
    """

    kind = "table"

    def __init__(self, pairs: Iterable[tuple]):
        self.pairs = tuple((x, y) for x, y in pairs)
        self._map = {}
        for x, y in self.pairs:
            if x in self._map and self._map[x] != y:
                raise ValueError(f"conflicting outputs for input {x!r}")
            self._map[x] = y

    @cached_property
    def domain(self) -> IndexedDomain:
        seen, order = set(), []
        for _, y in self.pairs:
            if y not in seen:
                seen.add(y)
                order.append(y)
        return IndexedDomain(order)

    def __call__(self, x):
        try:
            return self._map[x]
        except KeyError:
            raise ValueError(f"point {x!r} outside the table domain") from None

    def __repr__(self) -> str:
        return f"TableMap({len(self._map)} entries)"


def coarse_map_from_json(obj: dict):
    """Build a map from {"kind": "uniform_bins", "bits": L} or
    {"kind": "table", "entries": [[in, out], ...]}."""
    kind = obj.get("kind")
    if kind == "uniform_bins":
        return UniformBinsMap(int(obj["bits"]))
    if kind == "table":
        return TableMap(tuple((x, y) for x, y in obj["entries"]))
    raise ValueError(f"unknown coarse map kind {kind!r}")


def coarse_map_to_json(pi) -> dict:
    if isinstance(pi, UniformBinsMap):
        return {"kind": "uniform_bins", "bits": pi.bits}
    if isinstance(pi, TableMap):
        return {"kind": "table", "entries": [list(p) for p in pi.pairs]}
    raise TypeError(f"not a coarse map: {pi!r}")


def pushforward(P: FinSupportDist, pi) -> FinSupportDist:
    """Distribution of pi(X): Q(y) = sum of P(x) over x with pi(x) = y.

    Weights merge exactly (rational adds stay rational); the output support is
    ordered by the label alphabet's index order.
    """
    acc: dict = {}
    for x, w in zip(P.support, P.weights):
        y = pi(x)
        acc[y] = acc.get(y, 0) + w
    labels = sorted(acc, key=pi.domain.idx)
    return FinSupportDist(labels, [acc[y] for y in labels])


class PulledBackHypothesis:
    """Preimage pi^{-1}(F) of a finite label set F; membership tests one point
    by mapping it through pi."""

    __slots__ = ("cells", "pi")

    def __init__(self, cells: Container, pi):
        if not isinstance(cells, (FiniteHypothesis, frozenset)):
            cells = frozenset(cells)
        self.cells = cells
        self.pi = pi

    def __contains__(self, x) -> bool:
        return self.pi(x) in self.cells

    def __repr__(self) -> str:
        return f"PulledBackHypothesis({self.cells!r})"


def pullback(F, pi) -> PulledBackHypothesis:
    """Hypothesis denoting exactly the preimage of the finite label set F."""
    return PulledBackHypothesis(F, pi)


def coarse_learn(sample: Iterable, pi, epsilon, delta) -> PulledBackHypothesis:
    """Discretize the sample through pi, run the quantile learner over the
    label alphabet, and pull the learned segment back.

    Requires len(sample) >= sample_complexity(epsilon, delta) so the discrete
    guarantee transfers.
    """
    pts = tuple(sample)
    if not pts:
        raise ValueError("empty sample")
    need = sample_complexity(epsilon, delta)
    if len(pts) < need:
        raise ValueError(f"sample size {len(pts)} below required {need}")
    segment = quantile_learn((pi(x) for x in pts), pi.domain)
    return pullback(segment, pi)
