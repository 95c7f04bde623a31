"""Exact 2x2 independence test and the structural-similarity protocol.

The protocol asks whether pairs that sit close in a trained embedding
space share their probe-outcome distribution: each tested pair is matched
with its nearest scored pair (and, as a control, a uniformly random one),
both sides collect the outcomes of their closest probe neighbors, and the
two outcome sets go into an exact 2x2 test.  A high non-rejection rate for
the similar pairing, against a low one for the random pairing, is evidence
that structure governs outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Optional, Sequence

import numpy as np

from .. import rng

Pair = tuple[int, int]


@dataclass(frozen=True)
class ContingencyTable2x2:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) < 0:
            raise ValueError("counts must be non-negative")


def fisher_exact(t: ContingencyTable2x2) -> float:
    """Two-sided exact p-value by hypergeometric enumeration.

    Sums the probabilities of all tables with the observed margins whose
    point probability does not exceed the observed table's.  Integer
    weights C(r1, a') * C(r2, c1 - a') share one denominator, so the
    comparison is exact (no floating-point slack needed).
    """
    r1, r2 = t.a + t.b, t.c + t.d
    c1 = t.a + t.c
    n = r1 + r2
    if n == 0:
        return 1.0
    lo = max(0, c1 - r2)
    hi = min(r1, c1)
    weights = {ap: comb(r1, ap) * comb(r2, c1 - ap) for ap in range(lo, hi + 1)}
    observed = weights[t.a]
    total = sum(weights.values())
    favored = sum(w for w in weights.values() if w <= observed)
    return favored / total


@dataclass
class SimilarityTestReport:
    similar_non_rejection: float
    random_non_rejection: float
    tested: int
    skipped: int


def _nearest_index(dists: np.ndarray, exclude: set[int]) -> Optional[int]:
    order = np.argsort(dists, kind="stable")
    for k in order:
        if int(k) not in exclude:
            return int(k)
    return None


def structural_similarity_test(embeddings: np.ndarray,
                               outcomes: Sequence[int],
                               k_neighbors: int = 10, alpha: float = 0.05,
                               seed: int = 0) -> SimilarityTestReport:
    """Non-rejection rates for similar vs random pair matchings.

    `embeddings` holds one row per scored probe pair and `outcomes` its
    binary outcome.  For each tested index q, the partner is its nearest
    row (then a uniformly random row); each side takes its `k_neighbors`
    closest rows as an outcome sample, with rows near both sides assigned
    to the closer one, and the two samples form the 2x2 table
    (side x outcome).  Exact search by linear scan.
    """
    x = np.asarray(embeddings, dtype=float)
    y = np.asarray(outcomes, dtype=np.int64)
    m = len(y)
    if x.shape[0] != m:
        raise ValueError("embeddings and outcomes must align")
    if m < 2 * k_neighbors + 2:
        raise ValueError(f"need at least {2 * k_neighbors + 2} probes, got {m}")

    def non_rejection(q: int, r: int) -> Optional[bool]:
        dq = np.linalg.norm(x - x[q], axis=1)
        dr = np.linalg.norm(x - x[r], axis=1)
        pool_q = [k for k in range(m) if k not in (q, r) and dq[k] <= dr[k]]
        pool_r = [k for k in range(m) if k not in (q, r) and dq[k] > dr[k]]
        if len(pool_q) < k_neighbors or len(pool_r) < k_neighbors:
            return None
        side_q = sorted(pool_q, key=lambda k: (dq[k], k))[:k_neighbors]
        side_r = sorted(pool_r, key=lambda k: (dr[k], k))[:k_neighbors]
        table = ContingencyTable2x2(
            a=int(y[side_q].sum()), b=k_neighbors - int(y[side_q].sum()),
            c=int(y[side_r].sum()), d=k_neighbors - int(y[side_r].sum()))
        return fisher_exact(table) > alpha

    similar_hits = random_hits = tested = skipped = 0
    for q in range(m):
        dq = np.linalg.norm(x - x[q], axis=1)
        nearest = _nearest_index(dq, exclude={q})
        rand = q
        attempt = 0
        while rand == q:
            rand = rng.randrange(m, seed, q, attempt)
            attempt += 1
        sim = non_rejection(q, nearest)
        rnd = non_rejection(q, rand)
        if sim is None or rnd is None:
            skipped += 1
            continue
        tested += 1
        similar_hits += int(sim)
        random_hits += int(rnd)
    if tested == 0:
        raise ValueError("no testable pairs (all skipped)")
    return SimilarityTestReport(
        similar_non_rejection=similar_hits / tested,
        random_non_rejection=random_hits / tested,
        tested=tested, skipped=skipped)


def model_similarity_test(model, probes: Sequence[tuple[Pair, float]],
                          k_neighbors: int = 10, alpha: float = 0.05,
                          seed: int = 0) -> SimilarityTestReport:
    """Run the protocol in a trained model's pairwise embedding space."""
    pairs = [p for (p, _y) in probes]
    outcomes = [int(y) for (_p, y) in probes]
    embeddings = model.features.matrix(pairs)
    return structural_similarity_test(embeddings, outcomes,
                                      k_neighbors=k_neighbors, alpha=alpha,
                                      seed=seed)
