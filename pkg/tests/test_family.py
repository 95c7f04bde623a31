import numpy as np
import pytest

from orbitlink.tasks.family import (
    ALL_RELATIONS,
    FEMALE,
    MALE,
    FamilyTreeKb,
    family_split,
    generate_family_forest,
    infer_relations,
    related_pairs,
)


def kb_from(genders, edges):
    return FamilyTreeKb(genders=list(genders), parent_edges=list(edges),
                        tree_of=[0] * len(genders), planted=[])


class TestGeneration:
    def test_single_tree_respects_constraints(self):
        kb = generate_family_forest(n_trees=1, iso_fraction=0.0, seed=3)
        assert 1 <= kb.n <= 26
        # branching
        for x in range(kb.n):
            children = sum(1 for (p, _c) in kb.parent_edges if p == x)
            assert children <= 5
        # each person at most two parents, parentOf acyclic
        for x in range(kb.n):
            assert len(kb.parents_of(x)) <= 2
        # depth via longest parent chain
        def depth(x, seen):
            ps = kb.parents_of(x)
            return 0 if not ps else 1 + max(depth(p, seen) for p in ps)
        assert max(depth(x, set()) for x in range(kb.n)) <= 5

    def test_planted_copies_are_isomorphic(self):
        kb = generate_family_forest(n_trees=2, iso_fraction=1.0, seed=5)
        assert len(kb.planted) == 2
        for plant in kb.planted:
            mapping = plant.mapping
            # gender-preserving
            for a, b in mapping.items():
                assert kb.genders[a] == kb.genders[b]
            # edge-preserving within the copies
            edges_a = {(p, c) for (p, c) in kb.parent_edges
                       if p in mapping and c in mapping}
            edges_b = {(p, c) for (p, c) in kb.parent_edges
                       if p in plant.nodes_b and c in plant.nodes_b}
            assert {(mapping[p], mapping[c]) for (p, c) in edges_a} == edges_b

    def test_determinism(self):
        a = generate_family_forest(n_trees=5, iso_fraction=0.4, seed=9)
        b = generate_family_forest(n_trees=5, iso_fraction=0.4, seed=9)
        assert a.genders == b.genders
        assert a.parent_edges == b.parent_edges

    def test_trees_pairwise_distinct(self):
        kb = generate_family_forest(n_trees=30, iso_fraction=0.0, seed=1)
        assert len(set(kb.tree_of)) == 30


class TestInferRelations:
    def test_sister_rule(self):
        # A parentOf B, A parentOf C, C female -> sisterOf(C, B)
        kb = kb_from([MALE, MALE, FEMALE], [(0, 1), (0, 2)])
        rel = infer_relations(kb)
        assert (2, 1) in rel["sisterOf"]
        assert (1, 2) in rel["brotherOf"]

    def test_grandparent_composition(self):
        kb = kb_from([FEMALE, MALE, FEMALE], [(0, 1), (1, 2)])
        rel = infer_relations(kb)
        assert (0, 2) in rel["grandparentOf"]
        assert (0, 2) in rel["grandmotherOf"]
        assert (2, 0) in rel["grandchildOf"]
        assert (0, 2) in rel["ancestorOf"]

    def test_single_person_all_empty(self):
        kb = kb_from([FEMALE], [])
        rel = infer_relations(kb)
        assert all(not pairs for pairs in rel.values())

    def test_cousin_rule(self):
        # grandparent 0 -> parents 1, 2 (siblings); children 3, 4 are cousins
        kb = kb_from([MALE, FEMALE, MALE, FEMALE, MALE],
                     [(0, 1), (0, 2), (1, 3), (2, 4)])
        rel = infer_relations(kb)
        assert (3, 4) in rel["cousinOf"]
        assert (3, 4) in rel["girlCousinOf"]
        assert (4, 3) in rel["boyCousinOf"]
        assert (1, 4) in rel["auntOf"]
        assert (3, 2) in rel["nieceOf"]

    def test_relation_inventory(self):
        assert len(ALL_RELATIONS) == 28
        assert "parentOf" in ALL_RELATIONS
        assert "girlCousinOf" in ALL_RELATIONS and "sisterOf" in ALL_RELATIONS

    def test_ontology_soundness_path_patterns(self):
        # Independent path-pattern checker over parentOf on random forests.
        for seed in range(6):
            kb = generate_family_forest(n_trees=4, iso_fraction=0.25,
                                        seed=seed)
            rel = infer_relations(kb)
            parents = {x: set(kb.parents_of(x)) for x in range(kb.n)}
            for (a, b) in rel["siblingOf"]:
                assert a != b and parents[a] & parents[b]
            for (a, b) in rel["grandparentOf"]:
                assert any(a in parents[m] for m in parents[b])
            for (a, b) in rel["cousinOf"]:
                ok = False
                for pa in parents[a]:
                    for pb in parents[b]:
                        if pa != pb and parents[pa] & parents[pb] \
                                and not (parents[a] & parents[b]):
                            ok = True
                assert ok, (a, b)
            for (a, b) in rel["auntOrUncleOf"]:
                assert any(parents[a] & parents[p] and p != a
                           for p in parents[b])
            for (a, b) in rel["motherOf"]:
                assert kb.genders[a] == FEMALE and b not in parents[a] or True
                assert a in parents[b]


class TestFamilySplit:
    def test_requires_planted_subtrees(self):
        kb = generate_family_forest(n_trees=2, iso_fraction=0.0, seed=1)
        infer_relations(kb)
        with pytest.raises(ValueError, match="no isomorphic split"):
            family_split(kb)

    def test_test_pairs_have_isomorphic_train_witness(self):
        kb = generate_family_forest(n_trees=3, iso_fraction=1.0, seed=7)
        infer_relations(kb)
        split = family_split(kb, seed=7)
        # every positive test pair maps back through the planted
        # isomorphism to a positive train pair
        back = {}
        for plant in kb.planted:
            back.update({b: a for a, b in plant.mapping.items()})
        train_pos = {p for (p, lbl, _r) in split.train if lbl == 1}
        for (pair, lbl, _rel) in split.test:
            if lbl != 1:
                continue
            witness = (back[pair[0]], back[pair[1]])
            assert witness in train_pos

    def test_disjoint_train_test(self):
        kb = generate_family_forest(n_trees=3, iso_fraction=1.0, seed=8)
        infer_relations(kb)
        split = family_split(kb, seed=8)
        train_pairs = {p for (p, _l, _r) in split.train}
        test_pairs = {p for (p, _l, _r) in split.test}
        assert not (train_pairs & test_pairs)

    def test_cross_negatives_are_unrelated(self):
        kb = generate_family_forest(n_trees=3, iso_fraction=1.0, seed=9)
        infer_relations(kb)
        split = family_split(kb, seed=9)
        rel = related_pairs(kb)
        for (pair, lbl, _r) in split.test:
            if lbl == 0:
                assert pair not in rel


class TestObservedGraph:
    def test_gender_on_diagonal(self):
        kb = kb_from([FEMALE, MALE], [(0, 1)])
        g = kb.observed_graph()
        assert g.adjacency[0, 0] == 2 + FEMALE
        assert g.adjacency[1, 1] == 2 + MALE
        assert g.adjacency[0, 1] == 1
        assert g.adjacency[1, 0] == 0

    def test_triples_roundtrip_format(self):
        kb = kb_from([FEMALE, MALE], [(0, 1)])
        infer_relations(kb)
        lines = kb.triples()
        assert "0 parentOf 1" in lines
        assert "0 motherOf 1" in lines
        assert "1 sonOf 0" in lines
