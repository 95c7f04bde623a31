"""The embedding zoo: spectral, trainable factorization, one-hot, and
refinement-color embeddings, node-wise and joint pairwise.

Three families with very different invariance behavior live here:

* spectral rows and one-hot rows are positional: distinct nodes of a
  symmetric graph generally get distinct vectors;
* refinement (color) node embeddings are structural: nodes in the same
  orbit always share a row;
* mark-and-refine pairwise embeddings are structural *jointly*: they are
  constant on pair orbits and capture joint properties (distances, the
  entry between the endpoints) that no function of individual node colors
  can supply.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import rng
from .eigen import jacobi_eigh
from .graphs import ObservedGraph, wl_colors
from .symmetry import AUTOMORPHISM_LIMIT, node_pair_orbits

EIGENGROUP_RTOL = 1e-8
PROJECTOR_TOL = 1e-7

Pair = tuple[int, int]


@dataclass
class NodeEmbeddingTable:
    vectors: np.ndarray                 # n x d
    kind: str                           # svd | factorization | one_hot | wl_histogram
    color_ids: Optional[np.ndarray] = None   # exact colors for wl_histogram

    def __post_init__(self):
        if not np.isfinite(self.vectors).all():
            raise ValueError("embedding table contains non-finite entries")
        if self.vectors.ndim != 2 or self.vectors.shape[1] < 1:
            raise ValueError("embedding table must be n x d with d >= 1")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def csv_rows(self) -> list[str]:
        d = self.dim
        rows = ["node," + ",".join(f"dim{k}" for k in range(d))]
        for i, row in enumerate(self.vectors):
            rows.append(f"{i}," + ",".join(f"{x:.10g}" for x in row))
        return rows


# ---------------------------------------------------------------------------
# Spectral (positional) embeddings
# ---------------------------------------------------------------------------

def _spectral_decomposition(g: ObservedGraph):
    a = g.adjacency.astype(float)           # identity cast: code -> real
    left_vals, left_vecs = jacobi_eigh(a @ a.T)
    right_vals, right_vecs = jacobi_eigh(a.T @ a)
    return a, left_vals, left_vecs, right_vals, right_vecs


def svd_embed(g: ObservedGraph, rank: int) -> NodeEmbeddingTable:
    """Rows: top-`rank` left and right singular coordinates, scaled by the
    singular values.  Computed from the symmetric eigendecompositions of
    a a^T and a^T a; right vectors re-derived as a^T u / sigma so that the
    two sides share consistent signs (full-rank reconstruction is exact).
    """
    if rank < 1 or rank > g.n:
        raise ValueError("rank must be in 1..n")
    a, left_vals, left_vecs, right_vals, right_vecs = _spectral_decomposition(g)
    n = g.n
    sig = np.sqrt(np.maximum(left_vals[:rank], 0.0))
    scale = max(1.0, sig.max() if len(sig) else 1.0)
    left = left_vecs[:, :rank]
    right = np.empty((n, rank))
    for k in range(rank):
        if sig[k] > 1e-12 * scale:
            right[:, k] = (a.T @ left[:, k]) / sig[k]
        else:
            sig[k] = 0.0
            right[:, k] = right_vecs[:, k] * 0.0
    vectors = np.hstack([left * sig, right * sig])
    return NodeEmbeddingTable(vectors=vectors, kind="svd")


def svd_reconstruct(g: ObservedGraph) -> np.ndarray:
    """Full-rank reconstruction sum of outer products (identity check)."""
    a, left_vals, left_vecs, _rv, _rw = _spectral_decomposition(g)
    n = g.n
    out = np.zeros((n, n))
    scale = max(1.0, float(np.abs(left_vals).max()) if n else 1.0)
    for k in range(n):
        lam = left_vals[k]
        if lam <= 1e-14 * scale:
            continue
        sigma = np.sqrt(lam)
        u = left_vecs[:, k]
        v = (a.T @ u) / sigma
        out += sigma * np.outer(u, v)
    return out


def _eigengroups(values: np.ndarray) -> list[np.ndarray]:
    """Indices grouped by (nearly) equal eigenvalue, zeros excluded."""
    n = len(values)
    scale = max(1.0, float(np.abs(values).max()) if n else 1.0)
    tol = EIGENGROUP_RTOL * scale
    groups = []
    used = np.zeros(n, dtype=bool)
    for k in range(n):
        if used[k] or abs(values[k]) <= tol:
            continue
        members = np.nonzero(np.abs(values - values[k]) <= tol)[0]
        used[members] = True
        groups.append(members)
    return groups


def _projector_equal_rows(values, vecs, i, j) -> bool:
    """Whether e_i and e_j project identically onto every nonzero
    eigenspace (basis-invariant version of 'equal embedding rows')."""
    for members in _eigengroups(values):
        block = vecs[:, members]
        diff = block[i, :] @ block.T - block[j, :] @ block.T
        if np.abs(diff).max() > PROJECTOR_TOL:
            return False
    return True


@dataclass
class SvdInvarianceReport:
    equal_pairs: list[Pair]          # by the spectral-projector test
    predicate_pairs: list[Pair]      # isomorphic AND identical neighborhoods
    disagreements: list[Pair]

    @property
    def consistent(self) -> bool:
        return not self.disagreements


def svd_invariance_check(g: ObservedGraph) -> SvdInvarianceReport:
    """Compare spectral-row equality against the structural predicate
    (same node orbit and exact same row/column neighborhoods).

    Row equality is decided on spectral projectors of a a^T and a^T a so
    that degenerate spectra need no special casing.
    """
    if g.n > AUTOMORPHISM_LIMIT:
        raise ValueError("graph too large for exact automorphism search")
    a, left_vals, left_vecs, right_vals, right_vecs = _spectral_decomposition(g)
    part = node_pair_orbits(g)
    adj = g.adjacency
    n = g.n
    equal, predicate, disagreements = [], [], []
    for i in range(n):
        for j in range(i + 1, n):
            emb_eq = (_projector_equal_rows(left_vals, left_vecs, i, j)
                      and _projector_equal_rows(right_vals, right_vecs, i, j))
            pred = (part.node_orbits[i] == part.node_orbits[j]
                    and bool(np.array_equal(adj[i, :], adj[j, :]))
                    and bool(np.array_equal(adj[:, i], adj[:, j])))
            if emb_eq:
                equal.append((i, j))
            if pred:
                predicate.append((i, j))
            if emb_eq != pred:
                disagreements.append((i, j))
    return SvdInvarianceReport(equal_pairs=equal, predicate_pairs=predicate,
                               disagreements=disagreements)


# ---------------------------------------------------------------------------
# Refinement-color (structural) embeddings
# ---------------------------------------------------------------------------

def _hash_vector(key: int, dim: int) -> np.ndarray:
    v = np.zeros(dim)
    v[key % dim] = 1.0
    v[(key >> 32) % dim] += 1.0
    return v


def wl_hash_keys(adj: np.ndarray, zero: int, rounds: int,
                 initial_keys: Sequence[int]) -> list[int]:
    """Refinement on 64-bit keys: sorted multiset of (edge code, neighbor
    key) folded into a fixed hash, for exactly `rounds` rounds.

    Keys of a node depend only on its component and the round count, so
    refining a component in isolation reproduces the full-graph keys
    exactly (the pooling cache in PairwiseWlEmbedder relies on this).
    """
    n = adj.shape[0]
    out_nbrs: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    in_nbrs: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for i in range(n):
        row = adj[i]
        for j in np.nonzero(row != zero)[0]:
            out_nbrs[i].append((int(j), int(row[j])))
            in_nbrs[int(j)].append((i, int(row[j])))
    keys = [rng.counter_hash(0x5EED, int(k)) for k in initial_keys]
    for _ in range(rounds):
        keys = [
            rng.counter_hash(
                keys[i],
                *(x for code_key in sorted((code, keys[j])
                                           for j, code in out_nbrs[i])
                  for x in code_key),
                0xD1BAD,
                *(x for code_key in sorted((code, keys[j])
                                           for j, code in in_nbrs[i])
                  for x in code_key))
            for i in range(n)
        ]
    return keys


def wl_node_colors(g: ObservedGraph, iterations: Optional[int] = None,
                   dim: int = 32) -> NodeEmbeddingTable:
    """Refinement-color node embeddings (structural).

    Rows are fixed-dim hash-indicator expansions of the refinement key
    (`iterations` rounds; None runs to guaranteed stability); the exact
    color partition rides along in `color_ids` so tests can verify
    partitions without trusting the hash.
    """
    rounds = iterations if iterations is not None else g.n + 1
    initial = [int(g.adjacency[i, i]) for i in range(g.n)]
    keys = wl_hash_keys(g.adjacency, g.alphabet.zero, rounds, initial)
    colors = wl_colors(g.adjacency, g.alphabet.zero, max_rounds=iterations)
    vectors = np.stack([
        _hash_vector(k, dim) for k in keys
    ]) if g.n else np.zeros((0, dim))
    return NodeEmbeddingTable(vectors=vectors, kind="wl_histogram",
                              color_ids=np.asarray(colors, dtype=np.int64))


DISTANCE_BUCKETS = 6  # d = 0 (diagonal), 1, 2, 3, >=4 finite, unreachable


def _distance_bucket(g: ObservedGraph, i: int, j: int) -> int:
    if i == j:
        return 0
    zero = g.alphabet.zero
    adj = g.adjacency
    n = g.n
    seen = {i}
    frontier = [i]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for x in frontier:
            row = np.nonzero(adj[x] != zero)[0]
            col = np.nonzero(adj[:, x] != zero)[0]
            for y in set(row.tolist()) | set(col.tolist()):
                if y == x:
                    continue
                if y == j:
                    return min(d, 4)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return 5  # unreachable


class PairwiseWlEmbedder:
    """Mark-and-refine joint pairwise embedding over one graph.

    Marks the two endpoints in the initial coloring, reruns refinement, and
    pools hashed colors (whole graph) together with the endpoint colors and
    a bucketed shortest-path distance.  Base colors of untouched components
    are cached: marks can only change colors inside the components of the
    endpoints, so everything else is reused.
    """

    def __init__(self, g: ObservedGraph, iterations: Optional[int] = None,
                 dim: int = 32, pooling: str = "sum"):
        if pooling not in ("sum", "mean"):
            raise ValueError("pooling must be 'sum' or 'mean'")
        self.g = g
        self.rounds = iterations if iterations is not None else g.n + 1
        self.dim = dim
        self.pooling = pooling
        zero = g.alphabet.zero
        adj = g.adjacency
        n = g.n
        self._component = np.zeros(n, dtype=np.int64)
        comp = 0
        seen = np.zeros(n, dtype=bool)
        sym = (adj != zero) | (adj.T != zero)
        for s in range(n):
            if seen[s]:
                continue
            stack = [s]
            seen[s] = True
            while stack:
                x = stack.pop()
                self._component[x] = comp
                for y in np.nonzero(sym[x])[0]:
                    if not seen[y]:
                        seen[y] = True
                        stack.append(int(y))
            comp += 1
        self._ncomp = comp
        base_keys = self._marked_keys(None)
        self._base_vecs = np.stack([
            _hash_vector(k, dim) for k in base_keys]) if n else np.zeros((0, dim))
        self._base_sum_by_comp = np.zeros((comp, dim))
        for x in range(n):
            self._base_sum_by_comp[self._component[x]] += self._base_vecs[x]
        self._base_total = self._base_vecs.sum(axis=0)

    def _marked_keys(self, pair: Optional[Pair],
                     nodes: Optional[np.ndarray] = None) -> list[int]:
        g = self.g
        if nodes is None:
            adj = g.adjacency
            index = list(range(g.n))
        else:
            adj = g.adjacency[np.ix_(nodes, nodes)]
            index = nodes.tolist()
        marks = {}
        if pair is not None:
            i, j = pair
            marks[i] = marks.get(i, 0) + 1
            marks[j] = marks.get(j, 0) + 2
        initial = [rng.counter_hash(0xBEEF, int(adj[k, k]),
                                    marks.get(index[k], 0))
                   for k in range(len(index))]
        return wl_hash_keys(adj, g.alphabet.zero, self.rounds, initial)

    def embed(self, i: int, j: int) -> np.ndarray:
        g = self.g
        if not (0 <= i < g.n and 0 <= j < g.n):
            raise ValueError(f"pair ({i}, {j}) out of range")
        comps = {int(self._component[i]), int(self._component[j])}
        nodes = np.nonzero(np.isin(self._component, list(comps)))[0]
        keys = self._marked_keys((i, j), nodes)
        vecs = {int(x): _hash_vector(k, self.dim)
                for x, k in zip(nodes.tolist(), keys)}
        pooled = self._base_total.copy()
        for c in comps:
            pooled -= self._base_sum_by_comp[c]
        for x, v in vecs.items():
            pooled += v
        if self.pooling == "mean":
            pooled = pooled / max(1, g.n)
        dist = np.zeros(DISTANCE_BUCKETS)
        dist[_distance_bucket(g, i, j)] = 1.0
        return np.concatenate([pooled, vecs[i], vecs[j], dist])

    @property
    def out_dim(self) -> int:
        return 3 * self.dim + DISTANCE_BUCKETS


def pairwise_labeled_wl(g: ObservedGraph, pair: Pair,
                        iterations: Optional[int] = None, dim: int = 32,
                        pooling: str = "sum") -> np.ndarray:
    """One-shot mark-and-refine pairwise vector (see PairwiseWlEmbedder)."""
    return PairwiseWlEmbedder(g, iterations=iterations, dim=dim,
                              pooling=pooling).embed(*pair)


# ---------------------------------------------------------------------------
# Trainable factorization (positional) and one-hot
# ---------------------------------------------------------------------------

def factorization_train(g: ObservedGraph, dim: int, epochs: int = 50,
                        lr: float = 0.05, seed: int = 0,
                        pairs_per_epoch: Optional[int] = None,
                        batch: int = 256) -> NodeEmbeddingTable:
    """SGD on the squared reconstruction error over uniformly sampled pairs.

    Minimizes sum over sampled (i, j) of (a_ij - U_i . V_j)^2; returns rows
    [U_i, V_i].  Deterministic for a given seed.
    """
    n = g.n
    a = g.adjacency.astype(float)
    gen = np.random.default_rng(rng.derive_seed(seed, 0xFAC7))
    scale = 1.0 / np.sqrt(dim)
    U = gen.normal(0.0, scale, size=(n, dim))
    V = gen.normal(0.0, scale, size=(n, dim))
    m = pairs_per_epoch if pairs_per_epoch is not None else n * n
    for _epoch in range(epochs):
        ii = gen.integers(0, n, size=m)
        jj = gen.integers(0, n, size=m)
        for lo in range(0, m, batch):
            bi = ii[lo:lo + batch]
            bj = jj[lo:lo + batch]
            pred = np.einsum("bd,bd->b", U[bi], V[bj])
            err = pred - a[bi, bj]
            loss = float(np.mean(err ** 2))
            if not np.isfinite(loss) or loss > 1e6:
                raise RuntimeError("factorization diverged; reduce lr")
            gu = 2.0 * err[:, None] * V[bj]
            gv = 2.0 * err[:, None] * U[bi]
            np.add.at(U, bi, -lr * gu / len(bi))
            np.add.at(V, bj, -lr * gv / len(bi))
    return NodeEmbeddingTable(vectors=np.hstack([U, V]), kind="factorization")


def factorization_loss(g: ObservedGraph, table: NodeEmbeddingTable) -> float:
    """Mean squared reconstruction error over all pairs."""
    d = table.dim // 2
    U, V = table.vectors[:, :d], table.vectors[:, d:]
    a = g.adjacency.astype(float)
    return float(np.mean((a - U @ V.T) ** 2))


def one_hot_embed(g: ObservedGraph) -> NodeEmbeddingTable:
    """n x n identity rows: the canonical strictly positional embedding."""
    return NodeEmbeddingTable(vectors=np.eye(g.n), kind="one_hot")
