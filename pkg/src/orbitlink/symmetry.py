"""Automorphism groups, node/pair orbits, and the lifting checkers.

The group search runs a stabilizer chain: for each base point b (in node
order) it looks for one witness automorphism per image c that extends the
partial map fixing 0..b-1 pointwise and sending b to c.  Candidate images
are pruned by stable refinement colors and adjacency consistency.  The
witnesses generate the full group, and the group order is the product of
the per-level orbit sizes, both exact.

Orbits are closed under the generator set directly (union-find); the group
itself is never materialized, since its order can be factorial.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import rng
from .graphs import ObservedGraph, Permutation, apply_permutation, wl_colors
from .scm import EventLog, ProbeRecord, ProbeSequence, ScmSpec, probe

AUTOMORPHISM_LIMIT = 64
LIFT_ALPHA = 0.01

Pair = tuple[int, int]


@dataclass(frozen=True)
class AutomorphismGroup:
    generators: tuple[Permutation, ...]
    order: int


@dataclass
class OrbitPartition:
    node_orbits: np.ndarray            # orbit id per node
    pair_orbits: np.ndarray            # n x n array of orbit ids

    def pair_orbit(self, i: int, j: int) -> int:
        return int(self.pair_orbits[i, j])

    def pair_orbit_members(self, i: int, j: int) -> list[Pair]:
        oid = self.pair_orbits[i, j]
        ii, jj = np.nonzero(self.pair_orbits == oid)
        return list(zip(ii.tolist(), jj.tolist()))

    def csv_rows(self) -> list[str]:
        n = self.pair_orbits.shape[0]
        rows = ["i,j,pair_orbit_id"]
        for i in range(n):
            for j in range(n):
                rows.append(f"{i},{j},{int(self.pair_orbits[i, j])}")
        return rows


def automorphism_group(g: ObservedGraph) -> AutomorphismGroup:
    """Exact automorphism group via color-pruned stabilizer-chain search."""
    n = g.n
    if n > AUTOMORPHISM_LIMIT:
        raise ValueError(f"graph too large for exact automorphism search "
                         f"(n={n} > {AUTOMORPHISM_LIMIT})")
    if n == 0:
        return AutomorphismGroup(generators=(), order=1)
    adj = g.adjacency
    colors = wl_colors(adj, g.alphabet.zero)

    def extend(prefix_len: int, image_of_prefix: list[int]) -> Optional[list[int]]:
        """Complete a partial map (0..prefix_len-1 already assigned) to a
        full automorphism, or report impossibility."""
        mapping = image_of_prefix + [-1] * (n - prefix_len)
        used = [False] * n
        for v in image_of_prefix:
            used[v] = True

        def consistent(x: int, y: int) -> bool:
            if colors[x] != colors[y] or adj[x, x] != adj[y, y]:
                return False
            for w in range(x):
                mw = mapping[w]
                if adj[x, w] != adj[y, mw] or adj[w, x] != adj[mw, y]:
                    return False
            return True

        def rec(x: int) -> bool:
            if x == n:
                return True
            for y in range(n):
                if used[y] or not consistent(x, y):
                    continue
                mapping[x] = y
                used[y] = True
                if rec(x + 1):
                    return True
                used[y] = False
                mapping[x] = -1
            return False

        # verify the prefix itself is consistent before descending
        for x in range(prefix_len):
            y = mapping[x]
            if colors[x] != colors[y] or adj[x, x] != adj[y, y]:
                return None
            for w in range(x + 1):
                if adj[x, w] != adj[y, mapping[w]] or adj[w, x] != adj[mapping[w], y]:
                    return None
        return mapping if rec(prefix_len) else None

    generators: list[Permutation] = []
    order = 1
    for b in range(n):
        images = 1  # b itself
        for c in range(b + 1, n):  # points below b are fixed by this level
            if colors[c] != colors[b]:
                continue
            witness = extend(b + 1, list(range(b)) + [c])
            if witness is not None:
                generators.append(Permutation(tuple(witness)))
                images += 1
        order *= images
    if not generators:
        generators.append(Permutation.identity(n))
    return AutomorphismGroup(generators=tuple(generators), order=order)


def orbits(g: ObservedGraph, group: AutomorphismGroup) -> OrbitPartition:
    """Node and ordered-pair orbits: union-find closure under generators."""
    n = g.n
    parent = list(range(n + n * n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for perm in group.generators:
        m = perm.mapping
        for i in range(n):
            union(i, m[i])
        for i in range(n):
            for j in range(n):
                union(n + i * n + j, n + m[i] * n + m[j])

    node_roots = [find(i) for i in range(n)]
    node_ids = {r: k for k, r in enumerate(sorted(set(node_roots)))}
    node_orbits = np.array([node_ids[r] for r in node_roots], dtype=np.int64)

    pair_roots = [find(n + k) for k in range(n * n)]
    pair_ids = {r: k for k, r in enumerate(sorted(set(pair_roots)))}
    pair_orbits = np.array([pair_ids[r] for r in pair_roots],
                           dtype=np.int64).reshape(n, n)
    return OrbitPartition(node_orbits=node_orbits, pair_orbits=pair_orbits)


def node_pair_orbits(g: ObservedGraph) -> OrbitPartition:
    return orbits(g, automorphism_group(g))


def is_pairwise_symmetric(g: ObservedGraph) -> Optional[tuple[int, int, int, int]]:
    """Witness (i, j, u, v) with u ~ i and v ~ j node-wise but (u, v) not in
    the pair orbit of (i, j); None when no such tuple exists.

    Only pairs of distinct endpoints are considered: diagonal slots hold
    node attributes, not links, and mixing the two would make every graph
    with a nontrivial node orbit a degenerate witness.
    """
    part = node_pair_orbits(g)
    n = g.n
    node = part.node_orbits
    pair = part.pair_orbits
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            for u in range(n):
                if node[u] != node[i]:
                    continue
                for v in range(n):
                    if v == u or node[v] != node[j]:
                        continue
                    if pair[u, v] != pair[i, j]:
                        return (i, j, u, v)
    return None


# ---------------------------------------------------------------------------
# Distribution-equality machinery
# ---------------------------------------------------------------------------

def _histogram(outcomes: Sequence[int], k: int) -> np.ndarray:
    h = np.zeros(k, dtype=np.int64)
    for o in outcomes:
        h[o] += 1
    return h


def chi2_homogeneity(h1: np.ndarray, h2: np.ndarray) -> float:
    """Two-sample chi-square on outcome histograms; all-zero columns are
    dropped, identical point masses give p = 1."""
    table = np.vstack([h1, h2])
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2 or table.sum(axis=1).min() == 0:
        return 1.0
    _chi2, p, _dof, _exp = stats.chi2_contingency(table, correction=False)
    return float(p)


@dataclass
class LiftingArm:
    label: str
    pair: Pair
    histogram: np.ndarray


@dataclass
class LiftingReport:
    arms: list[LiftingArm]
    comparisons: list[tuple[str, str, float]]   # (label_a, label_b, p)
    alpha: float
    bonferroni: int

    @property
    def rejections(self) -> list[tuple[str, str, float]]:
        cut = self.alpha / max(1, self.bonferroni)
        return [c for c in self.comparisons if c[2] < cut]

    @property
    def passed(self) -> bool:
        return not self.rejections


def check_interventional_lifting(spec: ScmSpec, g: ObservedGraph,
                                 pi: Permutation, log: EventLog, pair: Pair,
                                 n_samples: int, seed: int,
                                 alpha: float = LIFT_ALPHA,
                                 gap_probe_time: Optional[int] = None,
                                 max_members: int = 8) -> LiftingReport:
    """Monte Carlo check that probe outcomes are equidistributed over the
    pair's orbit.

    Every orbit member is probed n_samples times with fresh exogenous
    draws; histograms are compared pairwise by chi-square with Bonferroni
    correction.  With `gap_probe_time` an extra arm probes the base pair at
    that later step with intermediate steps simulated (time-gap reduction
    disabled), which exposes mechanisms that read the event clock.
    """
    part = node_pair_orbits(g)
    members = part.pair_orbit_members(*pair)
    if len(members) < 2:
        raise ValueError("lifting vacuous: trivial orbit")
    members = sorted(members)[:max_members]
    t0 = len(log)

    arms = []
    for (i, j) in members:
        outcomes = [
            probe(spec, log, pi, (i, j), t0 + 1,
                  rng.derive_seed(seed, i, j, s)).outcome
            for s in range(n_samples)
        ]
        arms.append(LiftingArm(label=f"orbit({i},{j})", pair=(i, j),
                               histogram=_histogram(outcomes, spec.alphabet.size)))
    if gap_probe_time is not None:
        if gap_probe_time <= t0 + 1:
            raise ValueError("gap probe time must exceed t0 + 1")
        import dataclasses as _dc
        nogap = _dc.replace(spec, flags=_dc.replace(spec.flags, time_gap=False))
        outcomes = [
            probe(nogap, log, pi, pair, gap_probe_time,
                  rng.derive_seed(seed, 91, s)).outcome
            for s in range(n_samples)
        ]
        arms.append(LiftingArm(label=f"gap({pair[0]},{pair[1]})@t{gap_probe_time}",
                               pair=pair,
                               histogram=_histogram(outcomes, spec.alphabet.size)))

    comparisons = []
    for a in range(len(arms)):
        for b in range(a + 1, len(arms)):
            p = chi2_homogeneity(arms[a].histogram, arms[b].histogram)
            comparisons.append((arms[a].label, arms[b].label, p))
    return LiftingReport(arms=arms, comparisons=comparisons, alpha=alpha,
                         bonferroni=len(comparisons))


@dataclass
class CounterfactualReport:
    evidence: ProbeRecord
    arms: list[LiftingArm]
    acceptance_rate: float
    comparisons: list[tuple[str, str, float]]
    alpha: float

    def conditional(self, pair: Pair) -> np.ndarray:
        for arm in self.arms:
            if arm.pair == pair:
                total = arm.histogram.sum()
                return arm.histogram / max(1, total)
        raise KeyError(pair)

    @property
    def passed(self) -> bool:
        cut = self.alpha / max(1, len(self.comparisons))
        return all(p >= cut for (_a, _b, p) in self.comparisons)


def check_counterfactual_lifting(spec: ScmSpec, g: ObservedGraph,
                                 pi: Permutation, log: EventLog, pair: Pair,
                                 evidence: ProbeRecord, n_samples: int,
                                 seed: int, alpha: float = LIFT_ALPHA,
                                 max_members: int = 6,
                                 min_acceptance: float = 1e-3) -> CounterfactualReport:
    """Rejection-sampling estimate of the evidence-conditioned probe
    distribution for every member of the query pair's orbit.

    A trace re-draws the probe-stage exogenous noise (including any
    trace-shared latent) on top of the factual log, simulates the evidence
    probe, and is kept when it reproduces the observed evidence outcome;
    the query probe is then simulated inside the kept trace.
    """
    part = node_pair_orbits(g)
    members = part.pair_orbit_members(*pair)
    if len(members) < 2:
        raise ValueError("lifting vacuous: trivial orbit")
    members = sorted(members)[:max_members]
    t0 = len(log)

    hists = {m: np.zeros(spec.alphabet.size, dtype=np.int64) for m in members}
    accepted = 0
    for s in range(n_samples):
        trace_seed = rng.derive_seed(seed, s)
        sim = probe(spec, log, pi, evidence.pair, t0 + 1, trace_seed)
        if sim.outcome != evidence.outcome:
            continue
        accepted += 1
        for m in members:
            out = probe(spec, log, pi, m, t0 + 1, trace_seed).outcome
            hists[m][out] += 1
    rate = accepted / n_samples
    if rate < min_acceptance:
        raise ValueError("evidence too improbable for rejection sampling")

    arms = [LiftingArm(label=f"cf({i},{j})", pair=(i, j), histogram=hists[(i, j)])
            for (i, j) in members]
    comparisons = []
    for a in range(len(arms)):
        for b in range(a + 1, len(arms)):
            p = chi2_homogeneity(arms[a].histogram, arms[b].histogram)
            comparisons.append((arms[a].label, arms[b].label, p))
    return CounterfactualReport(evidence=evidence, arms=arms,
                                acceptance_rate=rate,
                                comparisons=comparisons, alpha=alpha)


# ---------------------------------------------------------------------------
# Per-orbit MAP outcome estimator
# ---------------------------------------------------------------------------

@dataclass
class OrbitEstimate:
    orbit_id: int
    probs: np.ndarray
    observed: bool
    count: int


def orbit_map_estimator(probes: ProbeSequence, partition: OrbitPartition,
                        pseudo_counts: Sequence[float] = (1.0, 1.0)
                        ) -> dict[int, OrbitEstimate]:
    """Categorical MAP outcome estimate per pair orbit.

    With pseudo-counts alpha the mode is (n_k + a_k - 1) / (N + sum(a) - K);
    orbits without probes report the prior mean, flagged unobserved.
    """
    alpha = np.asarray(pseudo_counts, dtype=float)
    if alpha.ndim != 1 or len(alpha) < 2 or (alpha < 0).any():
        raise ValueError("pseudo-counts must be a nonnegative vector, len >= 2")
    k = len(alpha)
    counts: dict[int, np.ndarray] = {}
    for rec in probes.records:
        oid = partition.pair_orbit(*rec.pair)
        if rec.outcome >= k:
            raise ValueError(f"outcome {rec.outcome} exceeds pseudo-count arity")
        counts.setdefault(oid, np.zeros(k))[rec.outcome] += 1

    out: dict[int, OrbitEstimate] = {}
    all_ids = np.unique(partition.pair_orbits)
    prior_mean = alpha / alpha.sum()
    for oid in all_ids.tolist():
        if oid in counts:
            c = counts[oid]
            denom = c.sum() + alpha.sum() - k
            if denom <= 0:
                probs = prior_mean.copy()
            else:
                probs = np.maximum(c + alpha - 1, 0.0) / denom
            out[oid] = OrbitEstimate(orbit_id=oid, probs=probs, observed=True,
                                     count=int(c.sum()))
        else:
            out[oid] = OrbitEstimate(orbit_id=oid, probs=prior_mean.copy(),
                                     observed=False, count=0)
    return out


def group_dump(group: AutomorphismGroup) -> str:
    """One permutation per line, cycle notation."""
    return "\n".join(p.cycle_notation() for p in group.generators) + "\n"
