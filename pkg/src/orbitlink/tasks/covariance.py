"""Covariance-matrix refinement task.

A covariance matrix estimated from a subject subset is the observed graph
(entries quantized onto the code alphabet, raw reals kept aside); the
covariance over the full subject pool provides probe outcomes.  Attributes
split into train/test sets: pairs within the train attributes are probes,
every remaining off-diagonal pair is a counterfactual query scored by MSE
on the raw values.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .. import rng
from ..graphs import Alphabet, ObservedGraph

Pair = tuple[int, int]

DEFAULT_BINS = 32


@dataclass
class CovarianceTask:
    samples: np.ndarray                 # m x k raw measurements
    observed_cov: np.ndarray            # from the subject subset
    target_cov: np.ndarray              # from all subjects
    train_attributes: list[int]
    test_attributes: list[int]
    graph: ObservedGraph
    dropped_attributes: list[int]

    def train_pairs(self) -> list[Pair]:
        tr = self.train_attributes
        return [(i, j) for i in tr for j in tr if i < j]

    def query_pairs(self) -> list[Pair]:
        in_train = set(self.train_attributes)
        k = self.target_cov.shape[0]
        return [(i, j) for i in range(k) for j in range(i + 1, k)
                if not (i in in_train and j in in_train)]

    def target(self, pair: Pair) -> float:
        return float(self.target_cov[pair[0], pair[1]])

    def train_probes(self) -> list[tuple[Pair, float]]:
        return [(p, self.target(p)) for p in self.train_pairs()]

    def query_probes(self) -> list[tuple[Pair, float]]:
        return [(p, self.target(p)) for p in self.query_pairs()]


def sample_covariance(samples: np.ndarray) -> np.ndarray:
    """Textbook unbiased estimate: sum (x - mean)(y - mean) / (m - 1)."""
    x = np.asarray(samples, dtype=float)
    m = x.shape[0]
    if m < 2:
        return np.zeros((x.shape[1], x.shape[1]))
    centered = x - x.mean(axis=0, keepdims=True)
    return centered.T @ centered / (m - 1)


def quantize_to_graph(cov: np.ndarray, bins: int) -> ObservedGraph:
    """Equal-width quantization of the entries onto codes 1..bins, with
    code 0 reserved as the alphabet's non-link value (unused: covariance
    graphs are complete)."""
    if bins < 2:
        raise ValueError("bins must be >= 2")
    lo, hi = float(cov.min()), float(cov.max())
    width = (hi - lo) or 1.0
    codes = np.floor((cov - lo) / width * bins).astype(np.int64)
    codes = np.clip(codes, 0, bins - 1) + 1
    codes = np.minimum(codes, codes.T)  # exact symmetry despite fp rounding
    return ObservedGraph(codes, Alphabet(bins + 1), directed=False)


def build_covariance_task(samples: np.ndarray, observed_subject_count: int,
                          split_fraction: float = 0.75,
                          quantization_bins: int = DEFAULT_BINS,
                          seed: int = 0) -> CovarianceTask:
    x = np.asarray(samples, dtype=float)
    m, k = x.shape
    if not (0 < observed_subject_count < m):
        raise ValueError("observed subject count must be below the total")
    if not (0.0 < split_fraction < 1.0):
        raise ValueError("split fraction must be in (0, 1)")

    subject_order = rng.shuffled_identity(m, seed, 0x5AB)
    observed_idx = sorted(subject_order[:observed_subject_count])
    observed = x[observed_idx]

    # zero-variance attributes after subsetting are unusable
    variances = observed.var(axis=0)
    keep = [a for a in range(k) if variances[a] > 1e-12]
    dropped = [a for a in range(k) if variances[a] <= 1e-12]
    if dropped:
        warnings.warn(f"dropped {len(dropped)} zero-variance attributes")
    x = x[:, keep]
    observed = observed[:, keep]
    k = len(keep)

    observed_cov = sample_covariance(observed)
    target_cov = sample_covariance(x)
    if k == 0:
        graph = ObservedGraph(np.zeros((0, 0), dtype=np.int64),
                              Alphabet(quantization_bins + 1))
    else:
        graph = quantize_to_graph(observed_cov, quantization_bins)

    attr_order = rng.shuffled_identity(k, seed, 0xA77)
    n_train = int(round(split_fraction * k))
    train_attrs = sorted(attr_order[:n_train])
    test_attrs = sorted(attr_order[n_train:])
    return CovarianceTask(samples=x, observed_cov=observed_cov,
                          target_cov=target_cov,
                          train_attributes=train_attrs,
                          test_attributes=test_attrs, graph=graph,
                          dropped_attributes=dropped)


def synthetic_samples(n_subjects: int, n_attributes: int, n_factors: int = 6,
                      noise: float = 0.6, seed: int = 0) -> np.ndarray:
    """Latent-factor Gaussian samples for the synthetic benchmark."""
    gen = np.random.default_rng(rng.derive_seed(seed, 0xC0F))
    loadings = gen.normal(size=(n_attributes, n_factors))
    z = gen.normal(size=(n_subjects, n_factors))
    eps = gen.normal(scale=noise, size=(n_subjects, n_attributes))
    return z @ loadings.T + eps
