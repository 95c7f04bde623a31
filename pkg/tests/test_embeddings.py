import itertools

import numpy as np
import pytest

from orbitlink.eigen import jacobi_eigh
from orbitlink.embeddings import (
    NodeEmbeddingTable,
    PairwiseWlEmbedder,
    factorization_loss,
    factorization_train,
    one_hot_embed,
    pairwise_labeled_wl,
    svd_embed,
    svd_invariance_check,
    svd_reconstruct,
    wl_node_colors,
)
from orbitlink.graphs import (
    Alphabet,
    ObservedGraph,
    Permutation,
    apply_permutation,
)
from orbitlink.symmetry import automorphism_group, node_pair_orbits


def star(leaves=3):
    return ObservedGraph.simple(leaves + 1, [(0, k + 1) for k in range(leaves)])


def two_triangles():
    return ObservedGraph.simple(
        6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])


def random_simple(rng, n):
    adj = rng.integers(0, 2, size=(n, n))
    adj = np.triu(adj, 1)
    return ObservedGraph(adj + adj.T, Alphabet(2))


class TestJacobi:
    def test_matches_numpy_eigh(self):
        rng = np.random.default_rng(1)
        for n in (2, 3, 5, 8, 12):
            m = rng.normal(size=(n, n))
            m = m + m.T
            vals, vecs = jacobi_eigh(m)
            ref = np.sort(np.linalg.eigvalsh(m))[::-1]
            assert np.allclose(vals, ref, atol=1e-8)
            assert np.allclose(vecs @ np.diag(vals) @ vecs.T, m, atol=1e-8)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            jacobi_eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestSvdEmbed:
    def test_star_leaves_identical_rows(self):
        # Leaves share the exact same neighborhood {center}.
        g = star(3)
        table = svd_embed(g, rank=4)
        assert np.allclose(table.vectors[1], table.vectors[2], atol=1e-8)
        assert np.allclose(table.vectors[2], table.vectors[3], atol=1e-8)
        assert not np.allclose(table.vectors[0], table.vectors[1], atol=1e-6)

    def test_full_rank_reconstruction(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            g = random_simple(rng, int(rng.integers(2, 9)))
            recon = svd_reconstruct(g)
            err = np.linalg.norm(recon - g.adjacency.astype(float))
            assert err < 1e-8

    def test_disjoint_edges_isomorphic_but_unequal(self):
        # Oracle: explicit 4x4 eigendecomposition. a^2 = I, the only
        # nonzero eigenspace is the whole space, so e_0 - e_2 cannot be
        # annihilated: rows must differ even though 0 and 2 are isomorphic.
        g = ObservedGraph.simple(4, [(0, 1), (2, 3)])
        report = svd_invariance_check(g)
        assert (0, 2) not in report.equal_pairs
        part = node_pair_orbits(g)
        assert part.node_orbits[0] == part.node_orbits[2]


class TestSvdInvarianceCheck:
    def test_exhaustive_four_node_graphs(self):
        # All 2^6 labeled simple graphs on 4 nodes: the projector test must
        # agree with the isomorphic-and-identical-neighborhood predicate.
        disagreements = 0
        for bits in range(64):
            edges = []
            for k, (i, j) in enumerate(itertools.combinations(range(4), 2)):
                if bits >> k & 1:
                    edges.append((i, j))
            g = ObservedGraph.simple(4, edges)
            report = svd_invariance_check(g)
            disagreements += len(report.disagreements)
        assert disagreements == 0

    def test_duplicate_leaf_star_reports_equal(self):
        report = svd_invariance_check(star(3))
        assert (1, 2) in report.equal_pairs
        assert (1, 2) in report.predicate_pairs

    def test_asymmetric_graph_no_equal_pairs(self):
        g = ObservedGraph.simple(6, [(0, 1), (1, 2), (0, 2), (2, 3),
                                     (3, 4), (1, 5)])
        assert automorphism_group(g).order == 1
        report = svd_invariance_check(g)
        assert report.equal_pairs == []

    def test_random_graphs_consistency(self):
        rng = np.random.default_rng(7)
        for _ in range(120):
            g = random_simple(rng, int(rng.integers(2, 8)))
            assert svd_invariance_check(g).consistent


class TestWlNodeColors:
    def test_k3_single_color(self):
        table = wl_node_colors(ObservedGraph.simple(3, [(0, 1), (1, 2), (0, 2)]))
        assert len(set(table.color_ids.tolist())) == 1

    def test_p3_endpoints_share_color(self):
        table = wl_node_colors(ObservedGraph.simple(3, [(0, 1), (1, 2)]))
        c = table.color_ids
        assert c[0] == c[2] != c[1]
        assert np.array_equal(table.vectors[0], table.vectors[2])

    def test_two_triangles_all_one_color(self):
        # Node-wise refinement cannot separate the components: the failure
        # fixture for node-embedding bias.
        table = wl_node_colors(two_triangles())
        assert len(set(table.color_ids.tolist())) == 1
        assert np.allclose(table.vectors, table.vectors[0])


class TestPairwiseLabeledWl:
    def test_two_triangles_intra_vs_cross(self):
        g = two_triangles()
        intra = pairwise_labeled_wl(g, (0, 1), iterations=3)
        cross = pairwise_labeled_wl(g, (0, 4), iterations=3)
        assert not np.allclose(intra, cross)

    def test_automorphic_pairs_equal(self):
        g = two_triangles()
        emb = PairwiseWlEmbedder(g, iterations=3)
        # component swap + rotation is an automorphism: (0,1) -> (3,4)
        assert np.allclose(emb.embed(0, 1), emb.embed(3, 4))
        part = node_pair_orbits(g)
        assert part.pair_orbit(0, 1) == part.pair_orbit(3, 4)

    def test_diagonal_pair_well_defined(self):
        g = two_triangles()
        emb = PairwiseWlEmbedder(g, iterations=3)
        diag = emb.embed(0, 0)
        off = emb.embed(0, 1)
        assert np.isfinite(diag).all()
        assert not np.allclose(diag, off)

    def test_orbit_invariance_random_graphs(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            g = random_simple(rng, int(rng.integers(3, 7)))
            part = node_pair_orbits(g)
            emb = PairwiseWlEmbedder(g, iterations=4)
            vecs = {}
            n = g.n
            for i in range(n):
                for j in range(n):
                    oid = part.pair_orbit(i, j)
                    v = emb.embed(i, j)
                    if oid in vecs:
                        assert np.allclose(vecs[oid], v), (i, j)
                    else:
                        vecs[oid] = v

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            g = random_simple(rng, 6)
            p = Permutation.from_list(rng.permutation(6))
            h = apply_permutation(p, g)
            emb_g = PairwiseWlEmbedder(g, iterations=3)
            emb_h = PairwiseWlEmbedder(h, iterations=3)
            for i in range(6):
                for j in range(6):
                    assert np.allclose(emb_g.embed(i, j),
                                       emb_h.embed(p(i), p(j)))

    def test_node_concat_degeneracy_vs_pairwise(self):
        # Node-color concatenation cannot split (0,1) from (0,4) on the
        # two-triangle fixture; the joint embedding does.
        g = two_triangles()
        table = wl_node_colors(g)
        concat_a = np.concatenate([table.vectors[0], table.vectors[1]])
        concat_b = np.concatenate([table.vectors[0], table.vectors[4]])
        assert np.array_equal(concat_a, concat_b)
        emb = PairwiseWlEmbedder(g, iterations=3)
        assert not np.allclose(emb.embed(0, 1), emb.embed(0, 4))


class TestFactorization:
    def test_rank_one_matrix_recovered(self):
        # Exact rank-1 integer matrix: outer([1,2,1,2], [1,2,1,2]).
        u = np.array([1, 2, 1, 2])
        codes = np.outer(u, u).astype(np.int64)
        g = ObservedGraph(codes, Alphabet(int(codes.max()) + 1))
        table = factorization_train(g, dim=1, epochs=800, lr=0.1, seed=1)
        assert factorization_loss(g, table) < 1e-3

    def test_zero_matrix_shrinks(self):
        g = ObservedGraph.simple(4, [])
        table = factorization_train(g, dim=2, epochs=400, lr=0.15, seed=2)
        assert factorization_loss(g, table) < 1e-3

    def test_determinism(self):
        g = two_triangles()
        a = factorization_train(g, dim=3, epochs=30, lr=0.05, seed=9)
        b = factorization_train(g, dim=3, epochs=30, lr=0.05, seed=9)
        assert np.array_equal(a.vectors, b.vectors)

    def test_gradient_matches_finite_differences(self):
        # Central finite differences at random coordinates of the sampled
        # objective sum (a_ij - U_i.V_j)^2.
        rng = np.random.default_rng(17)
        g = random_simple(rng, 5)
        a = g.adjacency.astype(float)
        U = rng.normal(size=(5, 3))
        V = rng.normal(size=(5, 3))
        ii = rng.integers(0, 5, size=40)
        jj = rng.integers(0, 5, size=40)

        def loss(Um, Vm):
            pred = np.einsum("bd,bd->b", Um[ii], Vm[jj])
            return np.sum((pred - a[ii, jj]) ** 2)

        gu = np.zeros_like(U)
        gv = np.zeros_like(V)
        err = np.einsum("bd,bd->b", U[ii], V[jj]) - a[ii, jj]
        np.add.at(gu, ii, 2.0 * err[:, None] * V[jj])
        np.add.at(gv, jj, 2.0 * err[:, None] * U[ii])
        eps = 1e-6
        for _ in range(20):
            which = rng.integers(0, 2)
            r, c = int(rng.integers(0, 5)), int(rng.integers(0, 3))
            M = U if which == 0 else V
            M[r, c] += eps
            hi = loss(U, V)
            M[r, c] -= 2 * eps
            lo = loss(U, V)
            M[r, c] += eps
            fd = (hi - lo) / (2 * eps)
            an = (gu if which == 0 else gv)[r, c]
            denom = max(1e-8, abs(fd), abs(an))
            assert abs(fd - an) / denom < 1e-5

    def test_divergence_error(self):
        g = two_triangles()
        with pytest.raises(RuntimeError, match="diverged"):
            factorization_train(g, dim=2, epochs=500, lr=50.0, seed=3)


class TestOneHot:
    def test_identity_rows(self):
        g = ObservedGraph.simple(3, [(0, 1)])
        table = one_hot_embed(g)
        assert np.array_equal(table.vectors, np.eye(3))

    def test_distinct_rows(self):
        table = one_hot_embed(two_triangles())
        uniq = {tuple(r) for r in table.vectors}
        assert len(uniq) == 6


class TestStructuralInvarianceProperty:
    def test_node_table_invariance_under_permutation(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            g = random_simple(rng, 6)
            p = Permutation.from_list(rng.permutation(6))
            h = apply_permutation(p, g)
            tg = wl_node_colors(g, iterations=4)
            th = wl_node_colors(h, iterations=4)
            for i in range(6):
                assert np.array_equal(tg.vectors[i], th.vectors[p(i)])
