import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orbitlink.graphs import (
    Alphabet,
    ObservedGraph,
    Permutation,
    apply_permutation,
    canonical_form,
    from_edge_list_text,
    graphs_isomorphic,
    to_edge_list_text,
)


def path3():
    return ObservedGraph.simple(3, [(0, 1), (1, 2)])


def triangle():
    return ObservedGraph.simple(3, [(0, 1), (1, 2), (0, 2)])


def random_graph(rng, n, directed=False, alphabet_size=2):
    alpha = Alphabet(alphabet_size)
    adj = rng.integers(0, alphabet_size, size=(n, n))
    if not directed:
        adj = np.triu(adj) + np.triu(adj, 1).T
    return ObservedGraph(adj, alpha, directed=directed)


def random_permutation(rng, n):
    return Permutation.from_list(rng.permutation(n))


class TestAlphabetAndTypes:
    def test_alphabet_minimum_size(self):
        with pytest.raises(ValueError):
            Alphabet(1)

    def test_permutation_must_be_bijection(self):
        with pytest.raises(ValueError):
            Permutation((0, 0, 2))

    def test_compose_with_inverse_is_identity(self):
        p = Permutation((2, 0, 1))
        assert p.compose(p.inverse()).mapping == (0, 1, 2)

    def test_undirected_requires_symmetry(self):
        adj = np.array([[0, 1], [0, 0]])
        with pytest.raises(ValueError):
            ObservedGraph(adj, Alphabet(2), directed=False)

    def test_entries_must_be_in_alphabet(self):
        adj = np.array([[0, 5], [5, 0]])
        with pytest.raises(ValueError):
            ObservedGraph(adj, Alphabet(2))


class TestApplyPermutation:
    def test_identity_leaves_graph_unchanged(self):
        g = path3()
        assert apply_permutation(Permutation.identity(3), g) == g

    def test_swap_applied_twice_is_identity(self):
        g = path3()
        swap = Permutation((1, 0, 2))
        assert apply_permutation(swap, apply_permutation(swap, g)) == g

    def test_path_reversal_keeps_edge_set(self):
        # Hand-applied relabeling: p = (2,1,0) sends edges {(0,1),(1,2)}
        # to {(2,1),(1,0)} which is the same undirected edge set.
        g = path3()
        h = apply_permutation(Permutation((2, 1, 0)), g)
        assert h == g

    def test_size_mismatch(self):
        with pytest.raises(ValueError, match="size mismatch"):
            apply_permutation(Permutation((0, 1)), path3())

    def test_entry_level_contract_directed(self):
        rng = np.random.default_rng(7)
        g = random_graph(rng, 5, directed=True, alphabet_size=3)
        p = random_permutation(rng, 5)
        h = apply_permutation(p, g)
        for i in range(5):
            for j in range(5):
                assert h.adjacency[p(i), p(j)] == g.adjacency[i, j]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 7))
def test_roundtrip_and_group_action(seed, n):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, directed=bool(seed % 2), alphabet_size=3)
    p = random_permutation(rng, n)
    q = random_permutation(rng, n)
    assert apply_permutation(p.inverse(), apply_permutation(p, g)) == g
    lhs = apply_permutation(p.compose(q), g)
    rhs = apply_permutation(p, apply_permutation(q, g))
    assert lhs == rhs


class TestIsomorphism:
    def test_k3_self_isomorphic(self):
        g = triangle()
        p = graphs_isomorphic(g, g)
        assert p is not None
        assert apply_permutation(p, g) == g

    def test_p3_relabelings(self):
        # Brute-force oracle: try all 6 permutations by hand.
        g1 = path3()
        g2 = ObservedGraph.simple(3, [(1, 0), (0, 2)])
        oracle = None
        for perm in itertools.permutations(range(3)):
            p = Permutation(perm)
            if apply_permutation(p, g1) == g2:
                oracle = p
                break
        assert oracle is not None
        found = graphs_isomorphic(g1, g2)
        assert found is not None
        assert apply_permutation(found, g1) == g2

    def test_p3_vs_triangle(self):
        assert graphs_isomorphic(path3(), triangle()) is None

    def test_size_limit(self):
        g = ObservedGraph.simple(13, [])
        with pytest.raises(ValueError, match="too large"):
            graphs_isomorphic(g, g)


class TestCanonicalForm:
    def test_star_relabelings_agree(self):
        # 4-node star, all 4! relabelings produce one canonical form
        # (brute-force: apply every permutation, compare bytes).
        star = ObservedGraph.simple(4, [(0, 1), (0, 2), (0, 3)])
        forms = set()
        for perm in itertools.permutations(range(4)):
            h = apply_permutation(Permutation(perm), star)
            forms.add(canonical_form(h))
        assert len(forms) == 1

    def test_p3_vs_k3_differ(self):
        assert canonical_form(path3()) != canonical_form(triangle())

    def test_empty_graph_single_representative(self):
        g = ObservedGraph.simple(3, [])
        assert canonical_form(g) == canonical_form(apply_permutation(
            Permutation((2, 0, 1)), g))

    def test_matches_isomorphism_decision(self):
        rng = np.random.default_rng(3)
        for _ in range(60):
            n = int(rng.integers(2, 6))
            g1 = random_graph(rng, n)
            g2 = random_graph(rng, n)
            same_form = canonical_form(g1) == canonical_form(g2)
            iso = graphs_isomorphic(g1, g2) is not None
            assert same_form == iso


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 8))
def test_canonical_constant_on_orbits(seed, n):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, alphabet_size=2)
    base = canonical_form(g)
    for _ in range(3):
        p = random_permutation(rng, n)
        assert canonical_form(apply_permutation(p, g)) == base


class TestEdgeListFormat:
    def test_roundtrip(self):
        g = ObservedGraph.from_edges(
            4, [(0, 1, 1), (2, 3, 2)], Alphabet(3), directed=False)
        text = to_edge_list_text(g)
        assert text.splitlines()[0] == "n 4 directed 0 alphabet 3"
        h = from_edge_list_text(text)
        assert h == g

    def test_directed_roundtrip(self):
        g = ObservedGraph.from_edges(
            3, [(0, 1, 1), (1, 0, 1), (2, 0, 1)], Alphabet(2), directed=True)
        assert from_edge_list_text(to_edge_list_text(g)) == g

    def test_malformed_header(self):
        with pytest.raises(ValueError, match="header"):
            from_edge_list_text("nodes 3\n0 1 1\n")

    def test_malformed_line_reports_number(self):
        with pytest.raises(ValueError, match="line 3"):
            from_edge_list_text("n 3 directed 0 alphabet 2\n0 1 1\n0 x 1\n")
