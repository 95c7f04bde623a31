"""Shared experiment fixtures built on the simulation engine."""

from __future__ import annotations

from dataclasses import dataclass

from . import rng
from .graphs import Alphabet, ObservedGraph, Permutation
from .mechanisms import (
    FixedSequence,
    LinkedRate,
    MixtureBernoulli,
    SharedPlusPairExo,
    SwitchAfter,
    ValueTable,
)
from .scm import EventLog, ScmSpec, probe, run_scm

Pair = tuple[int, int]

TWO_TRIANGLE_PAIRS = [(0, 0), (0, 1), (1, 2), (0, 2),
                      (3, 3), (3, 4), (4, 5), (3, 5)]
TWO_TRIANGLE_VALUES = [0, 1, 1, 1, 0, 1, 1, 1]


@dataclass
class ScmFixture:
    """A simulated observation plus the hidden trace behind it."""
    spec: ScmSpec
    log: EventLog
    graph: ObservedGraph
    pi: Permutation
    pools: dict[str, list[Pair]]
    rates: dict[str, float]

    def sample(self, per_pool: int, seed: int) -> list[tuple[Pair, float]]:
        """Lone-probe outcomes, `per_pool` per pool, through the engine."""
        t0 = len(self.log)
        out = []
        for pool_idx, name in enumerate(sorted(self.pools)):
            pool = self.pools[name]
            for k in range(per_pool):
                pair = pool[rng.randrange(len(pool), seed, pool_idx, k)]
                rec = probe(self.spec, self.log, self.pi, pair, t0 + 1,
                            rng.derive_seed(seed, pool_idx, k))
                out.append((pair, float(rec.outcome)))
        return out


def two_triangle_spec(after, exo_x=None) -> tuple[ScmSpec, int]:
    """Scripted generation of two disjoint triangles, probed by `after`."""
    spec = ScmSpec(
        alphabet=Alphabet(2),
        pair_mechanism=FixedSequence(pairs=TWO_TRIANGLE_PAIRS, filler=(0, 1)),
        value_mechanism=SwitchAfter(t_switch=len(TWO_TRIANGLE_PAIRS),
                                    before=ValueTable(values=TWO_TRIANGLE_VALUES),
                                    after=after),
        **({"exo_x": exo_x} if exo_x is not None else {}),
    )
    return spec, len(TWO_TRIANGLE_PAIRS)


def two_triangle_fixture(rate_intra: float = 0.9, rate_cross: float = 0.1,
                         seed: int = 0) -> ScmFixture:
    """The node-embedding-bias fixture: a pairwise symmetric graph whose
    intra-triangle pairs link at one rate and cross-triangle pairs at
    another (rates keyed on the pair's orbit through edge membership)."""
    spec, t0 = two_triangle_spec(
        LinkedRate(rate_linked=rate_intra, rate_unlinked=rate_cross))
    log, graph, pi = run_scm(spec, t0=t0, seed=seed)
    intra, cross = [], []
    comp = {x: 0 for x in (0, 1, 2)}
    comp.update({x: 1 for x in (3, 4, 5)})
    for i in range(6):
        for j in range(6):
            if i == j:
                continue
            if comp[pi.inverse()(i)] == comp[pi.inverse()(j)]:
                intra.append((i, j))
            else:
                cross.append((i, j))
    return ScmFixture(spec=spec, log=log, graph=graph, pi=pi,
                      pools={"intra": sorted(intra), "cross": sorted(cross)},
                      rates={"intra": rate_intra, "cross": rate_cross})


def two_triangle_mixture_fixture(w_prob: float = 0.5,
                                 rates: tuple[float, float] = (0.2, 0.8),
                                 seed: int = 0) -> ScmFixture:
    """Two-component latent-mixture fixture for counterfactual estimation:
    one shared latent picks the Bernoulli rate for the whole trace."""
    spec, t0 = two_triangle_spec(
        MixtureBernoulli(w_prob=w_prob, rates=rates),
        exo_x=SharedPlusPairExo())
    log, graph, pi = run_scm(spec, t0=t0, seed=seed)
    marginal = (1 - w_prob) * rates[0] + w_prob * rates[1]
    pairs = [(i, j) for i in range(6) for j in range(6) if i != j]
    return ScmFixture(spec=spec, log=log, graph=graph, pi=pi,
                      pools={"all": pairs}, rates={"all": marginal})
