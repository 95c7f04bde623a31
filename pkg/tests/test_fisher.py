import itertools
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from scipy import stats

from orbitlink.tasks.fisher import (
    ContingencyTable2x2,
    fisher_exact,
    structural_similarity_test,
)


def enumeration_oracle(a, b, c, d):
    """Independent full enumeration with exact rationals."""
    r1, r2, c1 = a + b, c + d, a + c
    lo, hi = max(0, c1 - r2), min(r1, c1)
    if r1 + r2 == 0:
        return Fraction(1)
    probs = {}
    for ap in range(lo, hi + 1):
        probs[ap] = Fraction(comb(r1, ap) * comb(r2, c1 - ap),
                             comb(r1 + r2, c1))
    observed = probs[a]
    return sum(p for p in probs.values() if p <= observed)


class TestFisherExact:
    def test_all_zero_convention(self):
        assert fisher_exact(ContingencyTable2x2(0, 0, 0, 0)) == 1.0

    def test_diagonal_five(self):
        # margins (5,5,5,5): weights 1,25,100,100,25,1 -> p = 2/252
        p = fisher_exact(ContingencyTable2x2(5, 0, 0, 5))
        assert abs(p - 2 / 252) < 1e-15

    def test_symmetric_near_null(self):
        assert fisher_exact(ContingencyTable2x2(2, 3, 3, 2)) == 1.0

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            ContingencyTable2x2(-1, 0, 0, 0)

    def test_matches_enumeration_oracle_exhaustively(self):
        # all tables with every margin <= 12
        for a, b, c, d in itertools.product(range(7), repeat=4):
            if a + b > 12 or c + d > 12 or a + c > 12 or b + d > 12:
                continue
            mine = fisher_exact(ContingencyTable2x2(a, b, c, d))
            oracle = float(enumeration_oracle(a, b, c, d))
            assert mine == pytest.approx(oracle, abs=0.0), (a, b, c, d)

    def test_matches_scipy(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a, b, c, d = (int(x) for x in rng.integers(0, 15, size=4))
            if a + b + c + d == 0:
                continue
            mine = fisher_exact(ContingencyTable2x2(a, b, c, d))
            _odds, ref = stats.fisher_exact([[a, b], [c, d]],
                                            alternative="two-sided")
            assert abs(mine - ref) < 1e-9, (a, b, c, d)


class TestStructuralSimilarity:
    def test_separated_rates_similar_beats_random(self):
        # Two embedding clusters with outcome rates 0.9 / 0.1: nearest
        # pairing stays within a cluster (same rate), random pairing
        # crosses clusters half the time.
        gen = np.random.default_rng(7)
        m = 120
        emb, out = [], []
        for k in range(m):
            cluster = k % 2
            emb.append(gen.normal(loc=(0.0, 6.0)[cluster], scale=0.3, size=4))
            rate = (0.9, 0.1)[cluster]
            out.append(int(gen.random() < rate))
        report = structural_similarity_test(np.stack(emb), out,
                                            k_neighbors=10, alpha=0.05,
                                            seed=1)
        assert report.similar_non_rejection > report.random_non_rejection + 0.2

    def test_constant_outcomes_both_one(self):
        gen = np.random.default_rng(3)
        emb = gen.normal(size=(60, 3))
        out = [1] * 60
        report = structural_similarity_test(emb, out, k_neighbors=10,
                                            alpha=0.05, seed=2)
        assert report.similar_non_rejection == 1.0
        assert report.random_non_rejection == 1.0

    def test_too_few_probes(self):
        with pytest.raises(ValueError, match="at least"):
            structural_similarity_test(np.zeros((5, 2)), [0] * 5,
                                       k_neighbors=10)
