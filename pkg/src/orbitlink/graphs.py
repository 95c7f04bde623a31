"""Core graph, permutation and value-domain types.

Graphs live over a finite code alphabet with a distinguished non-link code
(``ZERO``).  Adjacency is stored dense: at desk scale (n up to a few
thousand) O(n^2) storage keeps the permutation action and symmetry checks
trivial.  Node attributes, when present, sit on the diagonal entries.

Everything here is immutable after construction and safe to share across
threads; all operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

#: Largest n for which exact isomorphism / canonical-form search is allowed.
EXACT_SEARCH_LIMIT = 12


@dataclass(frozen=True)
class Alphabet:
    """Finite edge-value domain. Code 0 is the reserved non-link value."""

    size: int
    zero: int = 0

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("alphabet size must be >= 2")
        if not (0 <= self.zero < self.size):
            raise ValueError("ZERO code must be a member of the alphabet")

    def contains(self, code: int) -> bool:
        return 0 <= code < self.size


@dataclass(frozen=True)
class Permutation:
    """A bijection on 0..n-1, stored as the image array: i -> mapping[i]."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        n = len(self.mapping)
        if sorted(self.mapping) != list(range(n)):
            raise ValueError("mapping is not a bijection on 0..n-1")

    @staticmethod
    def identity(n: int) -> "Permutation":
        return Permutation(tuple(range(n)))

    @staticmethod
    def from_list(mapping: Iterable[int]) -> "Permutation":
        return Permutation(tuple(int(m) for m in mapping))

    def __len__(self) -> int:
        return len(self.mapping)

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.mapping)
        for i, m in enumerate(self.mapping):
            inv[m] = i
        return Permutation(tuple(inv))

    def compose(self, other: "Permutation") -> "Permutation":
        """(self . other)(i) = self(other(i))."""
        if len(self) != len(other):
            raise ValueError("permutation size mismatch")
        return Permutation(tuple(self.mapping[o] for o in other.mapping))

    def apply_pair(self, pair: tuple[int, int]) -> tuple[int, int]:
        return (self.mapping[pair[0]], self.mapping[pair[1]])

    def cycles(self) -> list[tuple[int, ...]]:
        """Disjoint-cycle decomposition, fixed points omitted."""
        seen = [False] * len(self.mapping)
        out = []
        for i in range(len(self.mapping)):
            if seen[i]:
                continue
            cyc = [i]
            seen[i] = True
            j = self.mapping[i]
            while j != i:
                cyc.append(j)
                seen[j] = True
                j = self.mapping[j]
            if len(cyc) > 1:
                out.append(tuple(cyc))
        return out

    def cycle_notation(self) -> str:
        cycs = self.cycles()
        if not cycs:
            return "()"
        return "".join("(" + " ".join(str(x) for x in c) + ")" for c in cycs)


class ObservedGraph:
    """A graph observed at time t0: dense adjacency over a code alphabet."""

    __slots__ = ("n", "directed", "adjacency", "alphabet", "observation_time")

    def __init__(self, adjacency: np.ndarray, alphabet: Alphabet,
                 directed: bool = False, observation_time: int = 0):
        adj = np.asarray(adjacency, dtype=np.int64)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        if adj.size and (adj.min() < 0 or adj.max() >= alphabet.size):
            raise ValueError("adjacency entry outside the declared alphabet")
        if not directed and not np.array_equal(adj, adj.T):
            raise ValueError("undirected graph requires a symmetric adjacency")
        adj = adj.copy()
        adj.setflags(write=False)
        self.n = adj.shape[0]
        self.directed = directed
        self.adjacency = adj
        self.alphabet = alphabet
        self.observation_time = observation_time

    @staticmethod
    def from_edges(n: int, edges: Iterable[tuple[int, int, int]],
                   alphabet: Alphabet, directed: bool = False,
                   observation_time: int = 0) -> "ObservedGraph":
        adj = np.full((n, n), alphabet.zero, dtype=np.int64)
        for i, j, code in edges:
            adj[i, j] = code
            if not directed:
                adj[j, i] = code
        return ObservedGraph(adj, alphabet, directed, observation_time)

    @staticmethod
    def simple(n: int, edges: Iterable[tuple[int, int]],
               observation_time: int = 0) -> "ObservedGraph":
        """Undirected simple graph over the binary alphabet."""
        return ObservedGraph.from_edges(
            n, [(i, j, 1) for i, j in edges], Alphabet(2),
            directed=False, observation_time=observation_time)

    def link_pairs(self) -> list[tuple[int, int]]:
        """Ordered pairs carrying a non-ZERO code (sparse view for WL)."""
        zero = self.alphabet.zero
        ii, jj = np.nonzero(self.adjacency != zero)
        return list(zip(ii.tolist(), jj.tolist()))

    def neighbor_lists(self) -> list[list[tuple[int, int]]]:
        """Per-node list of (neighbor, code) over non-ZERO out-entries."""
        zero = self.alphabet.zero
        out: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        adj = self.adjacency
        for i in range(self.n):
            row = adj[i]
            for j in np.nonzero(row != zero)[0]:
                out[i].append((int(j), int(row[j])))
        return out

    def __eq__(self, other) -> bool:
        return (isinstance(other, ObservedGraph)
                and self.n == other.n
                and self.directed == other.directed
                and self.alphabet == other.alphabet
                and np.array_equal(self.adjacency, other.adjacency))

    def __hash__(self):
        return hash((self.n, self.directed, self.alphabet,
                     self.adjacency.tobytes()))

    def __repr__(self):
        return (f"ObservedGraph(n={self.n}, directed={self.directed}, "
                f"alphabet={self.alphabet.size}, t0={self.observation_time})")


def apply_permutation(p: Permutation, g: ObservedGraph) -> ObservedGraph:
    """Relabel g by p: result[p(i), p(j)] = g[i, j]."""
    if len(p) != g.n:
        raise ValueError("permutation/graph size mismatch")
    inv = p.inverse().mapping
    idx = np.asarray(inv, dtype=np.int64)
    new_adj = g.adjacency[np.ix_(idx, idx)]
    return ObservedGraph(new_adj, g.alphabet, g.directed, g.observation_time)


# ---------------------------------------------------------------------------
# Color refinement (shared by isomorphism search and canonical forms)
# ---------------------------------------------------------------------------

def wl_colors(adj: np.ndarray, zero: int, max_rounds: Optional[int] = None,
              initial: Optional[list] = None) -> list[int]:
    """Stable 1-WL partition of an edge-coded adjacency.

    Color ordinals are assigned by sorted signature, so they are invariant
    under node relabeling: corresponding nodes of isomorphic graphs receive
    the same ordinal.
    """
    n = adj.shape[0]
    if n == 0:
        return []
    out_nbrs: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    in_nbrs: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for i in range(n):
        row = adj[i]
        for j in np.nonzero(row != zero)[0]:
            out_nbrs[i].append((int(j), int(row[j])))
            in_nbrs[int(j)].append((i, int(row[j])))

    if initial is not None:
        sigs: list = list(initial)
    else:
        sigs = [int(adj[i, i]) for i in range(n)]
    uniq = sorted(set(sigs))
    lut = {s: c for c, s in enumerate(uniq)}
    colors = [lut[s] for s in sigs]

    rounds = max_rounds if max_rounds is not None else n + 1
    prev_count = len(set(colors))
    for _ in range(rounds):
        sigs = [
            (colors[i],
             tuple(sorted((code, colors[j]) for j, code in out_nbrs[i])),
             tuple(sorted((code, colors[j]) for j, code in in_nbrs[i])))
            for i in range(n)
        ]
        uniq = sorted(set(sigs))
        lut = {s: c for c, s in enumerate(uniq)}
        colors = [lut[s] for s in sigs]
        count = len(uniq)
        if count == prev_count:
            break
        prev_count = count
    return colors


def _check_exact_limit(n: int, what: str) -> None:
    if n > EXACT_SEARCH_LIMIT:
        raise ValueError(f"instance too large for exact {what} "
                         f"(n={n} > {EXACT_SEARCH_LIMIT})")


def graphs_isomorphic(g1: ObservedGraph, g2: ObservedGraph) -> Optional[Permutation]:
    """Exact isomorphism search; returns a witness p with p.g1 = g2, or None."""
    if g1.alphabet != g2.alphabet:
        raise ValueError("graphs must share an alphabet")
    _check_exact_limit(max(g1.n, g2.n), "isomorphism")
    if g1.n != g2.n or g1.directed != g2.directed:
        return None
    n = g1.n
    if n == 0:
        return Permutation(())

    # Joint refinement on the disjoint union keeps the color ordinals of the
    # two graphs directly comparable.
    zero = g1.alphabet.zero
    union = np.full((2 * n, 2 * n), zero, dtype=np.int64)
    union[:n, :n] = g1.adjacency
    union[n:, n:] = g2.adjacency
    colors = wl_colors(union, zero)
    c1, c2 = colors[:n], colors[n:]
    if sorted(c1) != sorted(c2):
        return None

    a1, a2 = g1.adjacency, g2.adjacency
    candidates = [[v for v in range(n) if c2[v] == c1[u]] for u in range(n)]
    mapping = [-1] * n
    used = [False] * n

    def extend(u: int) -> bool:
        if u == n:
            return True
        for v in candidates[u]:
            if used[v]:
                continue
            if a1[u, u] != a2[v, v]:
                continue
            ok = True
            for w in range(u):
                mv = mapping[w]
                if a1[u, w] != a2[v, mv] or a1[w, u] != a2[mv, v]:
                    ok = False
                    break
            if ok:
                mapping[u] = v
                used[v] = True
                if extend(u + 1):
                    return True
                used[v] = False
                mapping[u] = -1
        return False

    if extend(0):
        return Permutation(tuple(mapping))
    return None


def canonical_form(g: ObservedGraph) -> bytes:
    """Isomorphism-invariant byte string.

    Lexicographic minimum of the serialized adjacency over all relabelings
    that sort nodes by their stable WL color; the restriction is sound
    because WL ordinals are themselves relabeling-invariant, and it prunes
    the n! search down to products of within-class orderings.
    """
    _check_exact_limit(g.n, "isomorphism")
    n = g.n
    header = b"%d|%d|%d|" % (n, 1 if g.directed else 0, g.alphabet.size)
    if n == 0:
        return header
    adj = g.adjacency
    colors = wl_colors(adj, g.alphabet.zero)

    # slots[k] = color required at canonical position k
    order = sorted(range(n), key=lambda i: (colors[i], i))
    slot_color = [colors[i] for i in order]
    by_color: dict[int, list[int]] = {}
    for i in range(n):
        by_color.setdefault(colors[i], []).append(i)

    best: Optional[list[int]] = None  # serialized rows of the best candidate
    assign = [-1] * n    # canonical position -> original node
    used = [False] * n

    def serial_row(k: int) -> list[int]:
        """Entries determined when position k is filled: row k up to col k,
        then column k up to row k-1 (row-major serialization order)."""
        v = assign[k]
        row = [int(adj[v, assign[c]]) for c in range(k + 1)]
        col = [int(adj[assign[r], v]) for r in range(k)]
        return row + col

    def backtrack(k: int, prefix: list[int]) -> None:
        nonlocal best
        if k == n:
            if best is None or prefix < best:
                best = list(prefix)
            return
        for v in by_color[slot_color[k]]:
            if used[v]:
                continue
            assign[k] = v
            new_prefix = prefix + serial_row(k)
            if best is not None and new_prefix > best[:len(new_prefix)]:
                assign[k] = -1
                continue
            used[v] = True
            backtrack(k + 1, new_prefix)
            used[v] = False
            assign[k] = -1

    backtrack(0, [])
    assert best is not None
    # `best` reads out every adjacency entry exactly once (row segment then
    # column segment per position), so it is an injective serialization.
    payload = ",".join(str(x) for x in best).encode()
    return header + payload


# ---------------------------------------------------------------------------
# Edge-list text format
# ---------------------------------------------------------------------------

def to_edge_list_text(g: ObservedGraph) -> str:
    """Serialize: header `n <count> directed <0|1> alphabet <k>`, then
    `i j code` lines for non-ZERO entries (upper triangle if undirected)."""
    lines = [f"n {g.n} directed {1 if g.directed else 0} alphabet {g.alphabet.size}"]
    zero = g.alphabet.zero
    adj = g.adjacency
    for i in range(g.n):
        start = 0 if g.directed else i
        for j in range(start, g.n):
            if int(adj[i, j]) != zero:
                lines.append(f"{i} {j} {int(adj[i, j])}")
    return "\n".join(lines) + "\n"


def from_edge_list_text(text: str, observation_time: int = 0) -> ObservedGraph:
    lines = [ln for ln in text.splitlines()]
    if not lines:
        raise ValueError("empty edge-list document")
    head = lines[0].split()
    if (len(head) != 6 or head[0] != "n" or head[2] != "directed"
            or head[4] != "alphabet"):
        raise ValueError("malformed header line: expected "
                         "'n <count> directed <0|1> alphabet <k>'")
    n, directed, k = int(head[1]), int(head[3]), int(head[5])
    if directed not in (0, 1):
        raise ValueError("directed flag must be 0 or 1")
    alphabet = Alphabet(k)
    adj = np.full((n, n), alphabet.zero, dtype=np.int64)
    for lineno, ln in enumerate(lines[1:], start=2):
        if not ln.strip():
            continue
        parts = ln.split()
        if len(parts) != 3:
            raise ValueError(f"malformed edge line {lineno}: {ln!r}")
        try:
            i, j, code = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ValueError(f"malformed edge line {lineno}: {ln!r}") from exc
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"node index out of range on line {lineno}")
        if not alphabet.contains(code):
            raise ValueError(f"code outside alphabet on line {lineno}")
        adj[i, j] = code
        if not directed:
            adj[j, i] = code
    return ObservedGraph(adj, alphabet, bool(directed), observation_time)
