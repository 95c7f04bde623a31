"""Family-tree knowledge base: generation, relation inference, splits.

A forest of households is grown person by person; a fraction of the trees
gets two isomorphic copies of a donor tree planted under one leaf, which
creates node-wise isomorphic pairs across the copies.  Relations within
one copy become training probes, relations within the twin copy become
counterfactual queries, and cross-copy non-relations supply the negatives
that confuse per-node structural representations.

Only the parental edges (plus gender) form the observed graph; the 27
derived relations are computed from them by rule composition:

    gendered (14):  motherOf fatherOf daughterOf sonOf sisterOf brotherOf
                    grandmotherOf grandfatherOf granddaughterOf grandsonOf
                    auntOf uncleOf nieceOf nephewOf
    ungendered/extended (13): childOf siblingOf grandparentOf grandchildOf
                    greatGrandparentOf greatGrandchildOf auntOrUncleOf
                    nieceOrNephewOf cousinOf girlCousinOf boyCousinOf
                    ancestorOf descendantOf
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import rng
from ..graphs import Alphabet, ObservedGraph

Pair = tuple[int, int]

MAX_TREE_SIZE = 26
MAX_DEPTH = 5
MAX_BRANCHING = 5
STOP_PROBABILITY = 0.002
DEFAULT_N_TREES = 100
DEFAULT_ISO_FRACTION = 0.30

FEMALE, MALE = 0, 1

GENDERED_RELATIONS = (
    "motherOf", "fatherOf", "daughterOf", "sonOf", "sisterOf", "brotherOf",
    "grandmotherOf", "grandfatherOf", "granddaughterOf", "grandsonOf",
    "auntOf", "uncleOf", "nieceOf", "nephewOf",
)
UNGENDERED_RELATIONS = (
    "childOf", "siblingOf", "grandparentOf", "grandchildOf",
    "greatGrandparentOf", "greatGrandchildOf", "auntOrUncleOf",
    "nieceOrNephewOf", "cousinOf", "girlCousinOf", "boyCousinOf",
    "ancestorOf", "descendantOf",
)
ALL_RELATIONS = ("parentOf",) + GENDERED_RELATIONS + UNGENDERED_RELATIONS


@dataclass
class PlantedPair:
    """Bookkeeping for one planted twin: node lists plus the isomorphism."""
    tree_id: int
    nodes_a: list[int]
    nodes_b: list[int]
    mapping: dict[int, int]      # node in copy A -> corresponding node in B


@dataclass
class FamilyTreeKb:
    genders: list[int]                       # per person
    parent_edges: list[Pair]                 # (parent, child)
    tree_of: list[int]                       # tree id per person
    planted: list[PlantedPair]
    derived: Optional[dict[str, set[Pair]]] = None

    @property
    def n(self) -> int:
        return len(self.genders)

    def parents_of(self, x: int) -> list[int]:
        return [p for (p, c) in self.parent_edges if c == x]

    def observed_graph(self) -> ObservedGraph:
        """Directed parentOf graph; gender rides on the diagonal."""
        n = self.n
        adj = np.zeros((n, n), dtype=np.int64)
        for (p, c) in self.parent_edges:
            adj[p, c] = 1
        for x in range(n):
            adj[x, x] = 2 + self.genders[x]
        return ObservedGraph(adj, Alphabet(4), directed=True)

    def triples(self) -> list[str]:
        """`head relation tail` lines for every relation incl. parentOf."""
        rel = dict(self.derived or {})
        rel["parentOf"] = set(self.parent_edges)
        lines = []
        for name in ALL_RELATIONS:
            for (h, t) in sorted(rel.get(name, ())):
                lines.append(f"{h} {name} {t}")
        return lines


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

class _TreeBuilder:
    def __init__(self, seed: int, tree_tag: int):
        self.seed = seed
        self.tag = tree_tag
        self.genders: list[int] = []
        self.edges: list[Pair] = []
        self.draws = 0

    def _u(self) -> float:
        self.draws += 1
        return rng.uniform(self.seed, 0xFA, self.tag, self.draws)

    def _add_person(self) -> int:
        self.genders.append(FEMALE if self._u() < 0.5 else MALE)
        return len(self.genders) - 1

    def _depth(self, x: int, memo: dict) -> int:
        if x in memo:
            return memo[x]
        parents = [p for (p, c) in self.edges if c == x]
        d = 0 if not parents else 1 + max(self._depth(p, memo) for p in parents)
        memo[x] = d
        return d

    def _tree_depth(self) -> int:
        memo: dict = {}
        if not self.genders:
            return 0
        return max(self._depth(x, memo) for x in range(len(self.genders)))

    def _children(self, x: int) -> int:
        return sum(1 for (p, _c) in self.edges if p == x)

    def grow(self) -> tuple[list[int], list[Pair]]:
        """Attach children or parents to random persons until the size cap
        or the stop event; growth steps violating depth/branching caps are
        retried (bounded)."""
        self._add_person()
        retries = 0
        while len(self.genders) < MAX_TREE_SIZE:
            if self._u() < STOP_PROBABILITY:
                break
            anchor = int(self._u() * len(self.genders))
            add_child = self._u() < 0.5
            if add_child:
                if self._children(anchor) >= MAX_BRANCHING:
                    retries += 1
                    if retries > 2000:
                        raise RuntimeError("tree growth stuck on constraints")
                    continue
                child = self._add_person()
                self.edges.append((anchor, child))
            else:
                if len([p for (p, c) in self.edges if c == anchor]) >= 2:
                    retries += 1
                    if retries > 2000:
                        raise RuntimeError("tree growth stuck on constraints")
                    continue
                parent = self._add_person()
                self.edges.append((parent, anchor))
            if self._tree_depth() > MAX_DEPTH:
                # undo the violating attachment
                self.edges.pop()
                self.genders.pop()
                retries += 1
                if retries > 2000:
                    raise RuntimeError("tree growth stuck on constraints")
        return self.genders, self.edges


def _tree_fingerprint(genders: list[int], edges: list[Pair]) -> int:
    """Refinement-hash fingerprint for the grown-tree dedup."""
    from ..embeddings import wl_hash_keys
    n = len(genders)
    adj = np.zeros((n, n), dtype=np.int64)
    for (p, c) in edges:
        adj[p, c] = 1
    keys = wl_hash_keys(adj, 0, n + 1, [2 + g for g in genders])
    return rng.counter_hash(0xF03E, *sorted(keys))


def generate_family_forest(n_trees: int = DEFAULT_N_TREES,
                           iso_fraction: float = DEFAULT_ISO_FRACTION,
                           seed: int = 0) -> FamilyTreeKb:
    """Grow `n_trees` pairwise non-isomorphic trees; plant two isomorphic
    copies of a donor tree under one random leaf in `iso_fraction` of them.
    """
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if not (0.0 <= iso_fraction <= 1.0):
        raise ValueError("iso_fraction must be in [0, 1]")
    genders: list[int] = []
    edges: list[Pair] = []
    tree_of: list[int] = []
    planted: list[PlantedPair] = []
    fingerprints: set[int] = set()

    n_planted = round(n_trees * iso_fraction)
    attempt = 0
    for tree_id in range(n_trees):
        while True:
            attempt += 1
            g_t, e_t = _TreeBuilder(seed, attempt).grow()
            fp = _tree_fingerprint(g_t, e_t)
            if fp not in fingerprints:
                fingerprints.add(fp)
                break
            if attempt > 50 * n_trees + 1000:
                raise RuntimeError("cannot generate enough distinct trees")
        base = len(genders)
        genders.extend(g_t)
        edges.extend([(base + p, base + c) for (p, c) in e_t])
        tree_of.extend([tree_id] * len(g_t))

        if tree_id < n_planted:
            # donor grown independently, two copies under one random leaf
            while True:
                attempt += 1
                dg, de = _TreeBuilder(seed, attempt).grow()
                if 2 <= len(dg) <= 12:
                    break
            children = {p for (p, _c) in edges if tree_of[p] == tree_id}
            host_nodes = [x for x in range(base, len(genders))]
            leaves = [x for x in host_nodes if x not in children]
            leaf = leaves[rng.randrange(len(leaves), seed, 0x1EAF, tree_id)]
            copies = []
            for _copy in range(2):
                cbase = len(genders)
                genders.extend(dg)
                edges.extend([(cbase + p, cbase + c) for (p, c) in de])
                edges.append((leaf, cbase))   # donor root becomes a child
                tree_of.extend([tree_id] * len(dg))
                copies.append(list(range(cbase, cbase + len(dg))))
            planted.append(PlantedPair(
                tree_id=tree_id, nodes_a=copies[0], nodes_b=copies[1],
                mapping={a: b for a, b in zip(copies[0], copies[1])}))

    return FamilyTreeKb(genders=genders, parent_edges=edges, tree_of=tree_of,
                        planted=planted)


# ---------------------------------------------------------------------------
# Relation inference
# ---------------------------------------------------------------------------

def infer_relations(kb: FamilyTreeKb) -> dict[str, set[Pair]]:
    """All 27 derived relations as compositions of parentOf, its inverse,
    and gender filters."""
    if any(g not in (FEMALE, MALE) for g in kb.genders):
        raise ValueError("missing gender attribute")
    n = kb.n
    female = [kb.genders[x] == FEMALE for x in range(n)]
    parent: set[Pair] = set(kb.parent_edges)
    children_of: dict[int, set[int]] = {}
    parents_of: dict[int, set[int]] = {}
    for (p, c) in parent:
        children_of.setdefault(p, set()).add(c)
        parents_of.setdefault(c, set()).add(p)

    def compose(rel_a: set[Pair], rel_b: set[Pair]) -> set[Pair]:
        by_head: dict[int, set[int]] = {}
        for (h, t) in rel_b:
            by_head.setdefault(h, set()).add(t)
        return {(h, t2) for (h, t) in rel_a for t2 in by_head.get(t, ())}

    child = {(c, p) for (p, c) in parent}
    sibling = {(x, y)
               for p, kids in children_of.items()
               for x in kids for y in kids if x != y}
    grandparent = compose(parent, parent)
    grandchild = {(c, p) for (p, c) in grandparent}
    great_grandparent = compose(grandparent, parent)
    great_grandchild = {(c, p) for (p, c) in great_grandparent}
    # sibling of a parent
    aunt_or_uncle = {(s, c)
                     for (p, c) in parent
                     for (s, p2) in sibling if p2 == p}
    niece_or_nephew = {(c, s) for (s, c) in aunt_or_uncle}
    # children of siblings who are not themselves siblings
    cousin = set()
    for (pa, pb) in sibling:
        for ca in children_of.get(pa, ()):
            for cb in children_of.get(pb, ()):
                if ca != cb and (ca, cb) not in sibling:
                    cousin.add((ca, cb))

    # transitive closure of parentOf
    ancestor = set(parent)
    frontier = set(parent)
    while frontier:
        frontier = compose(frontier, parent) - ancestor
        ancestor |= frontier
    descendant = {(c, p) for (p, c) in ancestor}

    def gendered(rel: set[Pair], female_head: bool) -> set[Pair]:
        return {(h, t) for (h, t) in rel if female[h] == female_head}

    derived = {
        "motherOf": gendered(parent, True),
        "fatherOf": gendered(parent, False),
        "daughterOf": gendered(child, True),
        "sonOf": gendered(child, False),
        "sisterOf": gendered(sibling, True),
        "brotherOf": gendered(sibling, False),
        "grandmotherOf": gendered(grandparent, True),
        "grandfatherOf": gendered(grandparent, False),
        "granddaughterOf": gendered(grandchild, True),
        "grandsonOf": gendered(grandchild, False),
        "auntOf": gendered(aunt_or_uncle, True),
        "uncleOf": gendered(aunt_or_uncle, False),
        "nieceOf": gendered(niece_or_nephew, True),
        "nephewOf": gendered(niece_or_nephew, False),
        "childOf": child,
        "siblingOf": sibling,
        "grandparentOf": grandparent,
        "grandchildOf": grandchild,
        "greatGrandparentOf": great_grandparent,
        "greatGrandchildOf": great_grandchild,
        "auntOrUncleOf": aunt_or_uncle,
        "nieceOrNephewOf": niece_or_nephew,
        "cousinOf": cousin,
        "girlCousinOf": gendered(cousin, True),
        "boyCousinOf": gendered(cousin, False),
        "ancestorOf": ancestor,
        "descendantOf": descendant,
    }
    assert set(derived) == set(GENDERED_RELATIONS) | set(UNGENDERED_RELATIONS)
    kb.derived = derived
    return derived


def related_pairs(kb: FamilyTreeKb) -> set[Pair]:
    """Ordered pairs holding any relation (parentOf or derived)."""
    if kb.derived is None:
        infer_relations(kb)
    out: set[Pair] = set(kb.parent_edges)
    for rel in kb.derived.values():
        out |= rel
    return out


# ---------------------------------------------------------------------------
# Train/test split over the planted copies
# ---------------------------------------------------------------------------

@dataclass
class FamilySplit:
    train: list[tuple[Pair, int, str]]      # (pair, label, relation tag)
    test: list[tuple[Pair, int, str]]

    def train_probes(self) -> list[tuple[Pair, float]]:
        return [(p, float(lbl)) for (p, lbl, _r) in self.train]

    def test_labeled(self) -> list[tuple[Pair, int]]:
        return [(p, lbl) for (p, lbl, _r) in self.test]


def family_split(kb: FamilyTreeKb, seed: int = 0) -> FamilySplit:
    """Probes from copy A, counterfactual queries from copy B.

    Train: every related pair inside A plus an equal number of uniform
    unrelated pairs inside A.  Test: every related pair inside B plus an
    equal number of cross-copy unrelated pairs (one endpoint per copy).
    """
    if not kb.planted:
        raise ValueError("no isomorphic split available")
    if kb.derived is None:
        infer_relations(kb)
    relation_of: dict[Pair, str] = {}
    for name in ALL_RELATIONS:
        rel = (set(kb.parent_edges) if name == "parentOf"
               else kb.derived.get(name, set()))
        for pair in rel:
            relation_of.setdefault(pair, name)
    related = related_pairs(kb)

    train: list[tuple[Pair, int, str]] = []
    test: list[tuple[Pair, int, str]] = []
    for plant_idx, plant in enumerate(kb.planted):
        set_a, set_b = set(plant.nodes_a), set(plant.nodes_b)
        pos_a = sorted((h, t) for (h, t) in related
                       if h in set_a and t in set_a)
        pos_b = sorted((h, t) for (h, t) in related
                       if h in set_b and t in set_b)
        train.extend([(p, 1, relation_of[p]) for p in pos_a])
        test.extend([(p, 1, relation_of[p]) for p in pos_b])

        # negatives inside A, uniform over unrelated ordered pairs
        nodes_a = plant.nodes_a
        neg_a: list[Pair] = []
        guard = 0
        while len(neg_a) < len(pos_a) and guard < 100 * len(pos_a) + 1000:
            guard += 1
            h = nodes_a[rng.randrange(len(nodes_a), seed, 1, plant_idx, guard, 0)]
            t = nodes_a[rng.randrange(len(nodes_a), seed, 1, plant_idx, guard, 1)]
            if h == t or (h, t) in related or (h, t) in neg_a:
                continue
            neg_a.append((h, t))
        train.extend([(p, 0, "none") for p in neg_a])

        # cross-copy negatives: one endpoint per copy
        nodes_b = plant.nodes_b
        neg_x: list[Pair] = []
        guard = 0
        while len(neg_x) < len(pos_b) and guard < 100 * len(pos_b) + 1000:
            guard += 1
            h = nodes_a[rng.randrange(len(nodes_a), seed, 2, plant_idx, guard, 0)]
            t = nodes_b[rng.randrange(len(nodes_b), seed, 2, plant_idx, guard, 1)]
            if rng.uniform(seed, 2, plant_idx, guard, 2) < 0.5:
                h, t = t, h
            if (h, t) in related or (h, t) in neg_x:
                continue
            neg_x.append((h, t))
        test.extend([(p, 0, "none") for p in neg_x])
    return FamilySplit(train=train, test=test)
