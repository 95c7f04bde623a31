"""End-to-end benchmark pipelines comparing embedding families.

Both pipelines train the same link function on the same probes and differ
only in the pair representation:

* ``pairwise``  - mark-and-refine joint embedding (structural pairwise)
* ``node``      - refinement-color node embeddings, concatenated
* ``positional``- trainable factorization rows, concatenated (family task)
                  / spectral rows (covariance task)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .learning import (
    FeatureSpec,
    LinkModel,
    expected_risk,
    hits_at_k,
    predict_many,
    train,
)
from .tasks.covariance import build_covariance_task, synthetic_samples
from .tasks.family import family_split, generate_family_forest, infer_relations

FAMILY_METHODS = {
    "pairwise": FeatureSpec(kind="pairwise_wl", dim=16, iterations=4),
    "node": FeatureSpec(kind="wl", dim=16, iterations=4),
    "positional": FeatureSpec(kind="factorization", dim=16, train_epochs=20,
                              train_lr=0.05),
}

COVARIANCE_METHODS = {
    "pairwise": FeatureSpec(kind="pairwise_wl", dim=16, iterations=2),
    "node": FeatureSpec(kind="wl", dim=16, iterations=2),
    "positional": FeatureSpec(kind="svd", dim=16),
}


@dataclass
class FamilyResult:
    hits: dict[str, float]
    k: int
    n_train: int
    n_test: int


def family_benchmark(n_trees: int = 100, iso_fraction: float = 0.30,
                     seed: int = 0, epochs: int = 300, lr: float = 0.3,
                     hits_fraction: float = 0.05,
                     methods: dict[str, FeatureSpec] | None = None) -> FamilyResult:
    """Knowledge-base completion over planted isomorphic subtrees."""
    kb = generate_family_forest(n_trees=n_trees, iso_fraction=iso_fraction,
                                seed=seed)
    infer_relations(kb)
    split = family_split(kb, seed=seed)
    graph = kb.observed_graph()
    train_probes = split.train_probes()
    test = split.test_labeled()
    k = max(1, round(hits_fraction * len(test)))
    hits = {}
    for name, spec in (methods or FAMILY_METHODS).items():
        model = LinkModel.build(spec, graph, loss_kind="bce", seed=seed)
        model, _report = train(model, train_probes, graph, epochs=epochs,
                               lr=lr, batch=128, seed=seed)
        scores = predict_many(model, [p for (p, _y) in test])
        scored = [(pair, float(s), int(y))
                  for ((pair, y), s) in zip(test, scores)]
        hits[name] = hits_at_k(scored, k)
    return FamilyResult(hits=hits, k=k, n_train=len(train_probes),
                        n_test=len(test))


@dataclass
class CovarianceResult:
    mse: dict[str, float]
    n_train: int
    n_query: int


def covariance_benchmark(n_attributes: int = 60, n_subjects: int = 68,
                         observed_subjects: int = 40, bins: int = 8,
                         seed: int = 0, epochs: int = 400, lr: float = 0.05,
                         methods: dict[str, FeatureSpec] | None = None
                         ) -> CovarianceResult:
    """Covariance refinement: train on within-train-attribute pairs, score
    MSE on the remaining pairs (raw covariance values)."""
    samples = synthetic_samples(n_subjects, n_attributes, seed=seed)
    task = build_covariance_task(samples, observed_subject_count=observed_subjects,
                                 split_fraction=0.75, quantization_bins=bins,
                                 seed=seed)
    graph = task.graph
    train_raw = task.train_probes()
    query_raw = task.query_probes()
    # standardize targets by train statistics for stable squared-error SGD
    y_train = np.array([y for (_p, y) in train_raw])
    mu, sigma = float(y_train.mean()), float(y_train.std() or 1.0)
    train_std = [(p, (y - mu) / sigma) for (p, y) in train_raw]
    mse = {}
    for name, spec in (methods or COVARIANCE_METHODS).items():
        model = LinkModel.build(spec, graph, loss_kind="mse", seed=seed)
        model, _report = train(model, train_std, graph, epochs=epochs, lr=lr,
                               batch=64, seed=seed)
        preds = predict_many(model, [p for (p, _y) in query_raw]) * sigma + mu
        targets = np.array([y for (_p, y) in query_raw])
        mse[name] = float(np.mean((preds - targets) ** 2))
    return CovarianceResult(mse=mse, n_train=len(train_raw),
                            n_query=len(query_raw))
