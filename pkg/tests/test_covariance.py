import numpy as np
import pytest

from orbitlink.tasks.covariance import (
    build_covariance_task,
    quantize_to_graph,
    sample_covariance,
    synthetic_samples,
)


class TestSampleCovariance:
    def test_textbook_formula_oracle(self):
        # Direct arithmetic on a hand-built 4x3 sample matrix.
        x = np.array([[1.0, 2.0, 0.0],
                      [2.0, 1.0, 1.0],
                      [3.0, 0.0, 0.0],
                      [4.0, 3.0, 1.0]])
        cov = sample_covariance(x)
        m = 4
        for i in range(3):
            for j in range(3):
                xi = x[:, i] - x[:, i].mean()
                xj = x[:, j] - x[:, j].mean()
                expect = float(np.sum(xi * xj) / (m - 1))
                assert abs(cov[i, j] - expect) < 1e-12

    def test_identical_subjects_zero_matrix(self):
        x = np.ones((2, 3))
        assert np.allclose(sample_covariance(x), 0.0)


class TestBuildTask:
    def test_degenerate_identical_subjects(self):
        x = np.tile([[1.0, 2.0, 3.0]], (4, 1))
        with pytest.warns(UserWarning, match="zero-variance"):
            task = build_covariance_task(x, observed_subject_count=2,
                                         quantization_bins=4, seed=0)
        assert task.target_cov.shape == (0, 0)

    def test_split_sizes(self):
        x = synthetic_samples(30, 100, seed=1)
        task = build_covariance_task(x, observed_subject_count=20,
                                     split_fraction=0.75, seed=1)
        assert len(task.train_attributes) == 75
        assert len(task.test_attributes) == 25
        assert not (set(task.train_attributes) & set(task.test_attributes))
        assert sorted(task.train_attributes + task.test_attributes) \
            == list(range(100))

    def test_target_recomputation_matches(self):
        x = synthetic_samples(25, 12, seed=2)
        task = build_covariance_task(x, observed_subject_count=15, seed=2)
        again = sample_covariance(task.samples)
        assert np.abs(again - task.target_cov).max() < 1e-12

    def test_pair_pools_partition_offdiagonal(self):
        x = synthetic_samples(20, 10, seed=3)
        task = build_covariance_task(x, observed_subject_count=12, seed=3)
        k = task.target_cov.shape[0]
        all_pairs = {(i, j) for i in range(k) for j in range(i + 1, k)}
        train = set(task.train_pairs())
        query = set(task.query_pairs())
        assert train | query == all_pairs
        assert not (train & query)

    def test_observed_count_bound(self):
        x = synthetic_samples(10, 5, seed=4)
        with pytest.raises(ValueError, match="below the total"):
            build_covariance_task(x, observed_subject_count=10, seed=4)


class TestQuantization:
    def test_codes_within_alphabet_and_symmetric(self):
        x = synthetic_samples(30, 8, seed=5)
        cov = sample_covariance(x)
        g = quantize_to_graph(cov, bins=8)
        assert g.adjacency.min() >= 1
        assert g.adjacency.max() <= 8
        assert np.array_equal(g.adjacency, g.adjacency.T)

    def test_bins_lower_bound(self):
        with pytest.raises(ValueError, match="bins"):
            quantize_to_graph(np.eye(3), bins=1)
