"""Interaction edge-list loading: bipartite user-item graphs with
group-restricted probes.

Input: lines `user_id item_id timestamp` plus a sidecar group file
`user_id group_label`.  Interactions inside the observation window build
the observed bipartite graph; interactions inside the probe window become
positive probes for the training group, matched 1:1 with uniformly
sampled non-interacting negatives; test queries are built the same way
from the complementary group.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng
from ..graphs import Alphabet, ObservedGraph

Pair = tuple[int, int]


@dataclass
class InteractionData:
    graph: ObservedGraph
    user_index: dict[str, int]
    item_index: dict[str, int]
    train_probes: list[tuple[Pair, float]]
    test_probes: list[tuple[Pair, float]]


def _parse_interactions(text: str) -> list[tuple[str, str, int]]:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"malformed interaction line {lineno}: {line!r}")
        try:
            ts = int(parts[2])
        except ValueError as exc:
            raise ValueError(
                f"malformed interaction line {lineno}: {line!r}") from exc
        rows.append((parts[0], parts[1], ts))
    return rows


def _parse_groups(text: str) -> dict[str, str]:
    groups = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"malformed group line {lineno}: {line!r}")
        groups[parts[0]] = parts[1]
    return groups


def load_interactions(interactions_text: str, groups_text: str,
                      time_window_t0: tuple[int, int],
                      time_window_probe: tuple[int, int],
                      group_filter: str, seed: int = 0) -> InteractionData:
    """Build the observed graph and group-split probe sets.

    `group_filter` names the training group; every other group goes to the
    test side.  Negatives are drawn uniformly over non-interacting
    (user, item) pairs of the matching side, one per positive.
    """
    rows = _parse_interactions(interactions_text)
    groups = _parse_groups(groups_text)

    lo0, hi0 = time_window_t0
    lo1, hi1 = time_window_probe
    obs = [(u, i) for (u, i, ts) in rows if lo0 <= ts < hi0]
    probe_rows = [(u, i) for (u, i, ts) in rows if lo1 <= ts < hi1]
    if not obs:
        raise ValueError("empty observation window")
    if not probe_rows:
        raise ValueError("empty probe window")

    # nodes span both windows so probe pairs are expressible in the graph;
    # edges come from the observation window only
    users = sorted({u for (u, _i) in obs} | {u for (u, _i) in probe_rows})
    items = sorted({i for (_u, i) in obs} | {i for (_u, i) in probe_rows})
    user_index = {u: k for k, u in enumerate(users)}
    item_index = {i: len(users) + k for k, i in enumerate(items)}
    n = len(users) + len(items)
    adj = np.zeros((n, n), dtype=np.int64)
    for (u, i) in obs:
        a, b = user_index[u], item_index[i]
        adj[a, b] = adj[b, a] = 1
    graph = ObservedGraph(adj, Alphabet(2), directed=False)

    interacting = set(obs) | set(probe_rows)

    def build_side(in_group: bool) -> list[tuple[Pair, float]]:
        side_users = [u for u in users
                      if (groups.get(u) == group_filter) == in_group]
        if not side_users:
            if in_group:
                raise ValueError("empty probe group")
            return []   # no complementary group: no test queries
        positives = [(u, i) for (u, i) in probe_rows
                     if (groups.get(u) == group_filter) == in_group]
        out = [((user_index[u], item_index[i]), 1.0) for (u, i) in positives]
        negatives: list[Pair] = []
        guard = 0
        tag = 1 if in_group else 2
        while len(negatives) < len(positives) and guard < 1000 * (len(positives) + 1):
            guard += 1
            u = side_users[rng.randrange(len(side_users), seed, tag, guard, 0)]
            i = items[rng.randrange(len(items), seed, tag, guard, 1)]
            if (u, i) in interacting:
                continue
            pair = (user_index[u], item_index[i])
            if pair in negatives:
                continue
            negatives.append(pair)
        out.extend((p, 0.0) for p in negatives)
        return out

    return InteractionData(graph=graph, user_index=user_index,
                           item_index=item_index,
                           train_probes=build_side(True),
                           test_probes=build_side(False))
