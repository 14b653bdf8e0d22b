"""Monotone sample compression for finite-subset hypotheses.

A scheme keeps m_out of m_in sample points and reconstructs a finite set that
must cover the whole input tuple for some kept subtuple (the monotone
condition).  Both constructive directions live here:

  • the 2->1 scheme: keep the point of larger index, reconstruct its initial
    segment;
  • compression_learner: ERM over the reconstructions of all m-subtuples,
    which turns any scheme into a learner once n >= required_n(m);
  • learner_to_compression: any proper learner with sample size d yields a
    scheme with m = ceil(3d/2) by uniting the learner's outputs over all
    d-tuples from the kept points.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

from .emx import FiniteHypothesis, IndexedDomain

ALPHA = Fraction(1, 6)  # weak-learning slack; the three n-conditions below use it


@dataclass(frozen=True)
class CompressionScheme:
    """Reconstruction rule from m_out-tuples, with declared sizes."""

    m_in: int
    m_out: int
    reconstruct: Callable[[tuple], FiniteHypothesis] = field(repr=False)

    def __post_init__(self):
        if not 0 < self.m_out < self.m_in:
            raise ValueError("need 0 < m_out < m_in")


def reconstruct_segment(x, dom: IndexedDomain) -> FiniteHypothesis:
    """Initial segment {y : idx(y) <= idx(x)}; always contains x."""
    return dom.initial_segment(dom.idx(x))


def compress_two_to_one(x1, x2, dom: IndexedDomain):
    """Keep the point of larger index; its segment covers both inputs."""
    return x1 if dom.idx(x1) >= dom.idx(x2) else x2


def two_to_one_scheme(dom: IndexedDomain) -> CompressionScheme:
    """The 2->1 scheme: reconstruct the kept point's initial segment."""

    def reconstruct(sub: tuple) -> FiniteHypothesis:
        (x,) = sub
        return reconstruct_segment(x, dom)

    return CompressionScheme(m_in=2, m_out=1, reconstruct=reconstruct)


def segment_scheme(dom: IndexedDomain, m: int) -> CompressionScheme:
    """Keep-m variant of the segment rule: reconstruct the largest-index
    segment of the kept tuple.  Candidates are nested, which makes the ERM
    below coincide with the quantile learner."""

    def reconstruct(sub: tuple) -> FiniteHypothesis:
        return dom.initial_segment(max(dom.idx(x) for x in sub))

    return CompressionScheme(m_in=m + 1, m_out=m, reconstruct=reconstruct)


def check_monotone_coverage(scheme: CompressionScheme, pts: tuple) -> tuple | None:
    """Exhaustively search the m_out-subtuples of an m_in-tuple; return one
    whose reconstruction contains every input point, or None."""
    pts = tuple(pts)
    if len(pts) != scheme.m_in:
        raise ValueError(f"expected an m_in={scheme.m_in} tuple, got {len(pts)} points")
    for sub in itertools.combinations(pts, scheme.m_out):
        hyp = scheme.reconstruct(sub)
        if all(x in hyp for x in pts):
            return sub
    return None


def required_n(m: int) -> int:
    """Smallest n with m/n <= 1/6, 2*C(n,m)*e^{-(n-m)/18} <= 1/6 and
    e^{-n/18} <= 1/6.

    Evaluated in log form to avoid overflow; the boundary gaps are orders of
    magnitude above float error (see tests for a high-precision cross-check).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    log_alpha = math.log(1.0 / 6.0)
    n = m + 1
    while True:
        cond_ratio = 6 * m <= n
        log_comb = math.lgamma(n + 1) - math.lgamma(m + 1) - math.lgamma(n - m + 1)
        cond_union = math.log(2.0) + log_comb - (n - m) / 18.0 <= log_alpha
        cond_tail = -n / 18.0 <= log_alpha
        if cond_ratio and cond_union and cond_tail:
            return n
        n += 1


def compression_learner(
    scheme: CompressionScheme, sample: Iterable, dom: IndexedDomain
) -> FiniteHypothesis:
    """ERM over the candidate family {reconstruct(m-subtuple of S)}.

    Returns the candidate of maximum empirical mass; ties break toward larger
    cardinality, then the lexicographically smallest index description.
    Requires n >= m_out + 1 so at least one full subtuple exists.
    """
    pts = tuple(sample)
    n, m = len(pts), scheme.m_out
    if n < m + 1:
        raise ValueError(f"sample size {n} below m+1 = {m + 1}")
    counts = Counter(pts)

    best = None  # (emp_mass, cardinality, hyp); description compared lazily
    best_desc = None
    for sub in dict.fromkeys(itertools.combinations(pts, m)):  # dedupe, keep order
        hyp = scheme.reconstruct(sub)
        emp = Fraction(sum(c for x, c in counts.items() if x in hyp), n)
        if best is None or (emp, len(hyp)) > (best[0], best[1]):
            best, best_desc = (emp, len(hyp), hyp), None
            continue
        if (emp, len(hyp)) == (best[0], best[1]) and hyp != best[2]:
            if best_desc is None:
                best_desc = tuple(sorted(dom.idx(x) for x in best[2].elements))
            desc = tuple(sorted(dom.idx(x) for x in hyp.elements))
            if desc < best_desc:
                best, best_desc = (emp, len(hyp), hyp), desc
    return best[2]


def learner_to_compression(
    learner: Callable[[tuple], FiniteHypothesis], d: int, dom: IndexedDomain
) -> CompressionScheme:
    """Scheme with m = ceil(3d/2): reconstruct an m-tuple as the union of its
    own points with the learner's output on every d-tuple (with repetition)
    drawn from them.

    For finite-subset learners the union is itself a finite hypothesis; tuples
    over repeated values are taken once.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    m = math.ceil(3 * d / 2)

    def reconstruct(sub: tuple) -> FiniteHypothesis:
        if len(sub) != m:
            raise ValueError(f"expected an m={m} tuple, got {len(sub)} points")
        out = set(sub)
        values = sorted(set(sub), key=dom.idx)
        for tup in itertools.product(values, repeat=d):
            out.update(learner(tup).elements)
        return FiniteHypothesis.from_elements(out)

    return CompressionScheme(m_in=m + 1, m_out=m, reconstruct=reconstruct)
