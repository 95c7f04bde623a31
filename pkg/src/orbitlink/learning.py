"""Supervised link estimation: features, a fixed-shape MLP link function
with hand-derived gradients, training, metrics, and the bias measurement.

The link function is a one-hidden-layer perceptron of the same width as
its input, ELU activation, single output head (sigmoid for binary
cross-entropy, linear for squared error).  Gradients are written out by
hand; training is plain minibatch SGD with optional momentum, with an
adaptive (Adam-style) step behind a flag.  Everything is deterministic
given the seed.
"""

from __future__ import annotations

import hashlib
import json
import struct
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import rng
from .embeddings import (
    NodeEmbeddingTable,
    PairwiseWlEmbedder,
    factorization_train,
    one_hot_embed,
    svd_embed,
    wl_node_colors,
)
from .graphs import ObservedGraph
from .scm import ProbeSequence

Pair = tuple[int, int]
LOSS_KINDS = ("bce", "mse")
BINDINGS = ("concat", "hadamard")

CHECKPOINT_MAGIC = b"OLNK"
CHECKPOINT_VERSION = 1


# ---------------------------------------------------------------------------
# Feature functions
# ---------------------------------------------------------------------------

@dataclass
class FeatureSpec:
    """How pair features are built from the observed graph.

    kind 'pairwise_wl' is the joint structural embedding; every other kind
    is a node table bound per-pair by concatenation (default) or Hadamard
    product.
    """
    kind: str                       # pairwise_wl | wl | svd | one_hot | factorization
    binding: str = "concat"
    dim: int = 32                   # hash dim (wl kinds) / rank (svd) / factor dim
    iterations: Optional[int] = 3
    train_epochs: int = 60          # factorization pre-training
    train_lr: float = 0.05
    seed: int = 0

    def to_config(self) -> dict:
        return {"kind": self.kind, "binding": self.binding, "dim": self.dim,
                "iterations": self.iterations, "train_epochs": self.train_epochs,
                "train_lr": self.train_lr, "seed": self.seed}

    @staticmethod
    def from_config(cfg: dict) -> "FeatureSpec":
        return FeatureSpec(
            kind=cfg["kind"], binding=cfg.get("binding", "concat"),
            dim=int(cfg.get("dim", 32)),
            iterations=cfg.get("iterations", 3),
            train_epochs=int(cfg.get("train_epochs", 60)),
            train_lr=float(cfg.get("train_lr", 0.05)),
            seed=int(cfg.get("seed", 0)))


class PairFeatures:
    """Materialized feature function for one graph."""

    def __init__(self, spec: FeatureSpec, g: ObservedGraph,
                 table: Optional[NodeEmbeddingTable] = None):
        if spec.binding not in BINDINGS:
            raise ValueError(f"unknown binding {spec.binding!r}")
        self.spec = spec
        self.g = g
        self._pair_embedder: Optional[PairwiseWlEmbedder] = None
        self.table = table
        if spec.kind == "pairwise_wl":
            self._pair_embedder = PairwiseWlEmbedder(
                g, iterations=spec.iterations, dim=spec.dim)
            self.dim = self._pair_embedder.out_dim
        else:
            if self.table is None:
                self.table = self._build_table(spec, g)
            d = self.table.dim
            self.dim = 2 * d if spec.binding == "concat" else d

    @staticmethod
    def _build_table(spec: FeatureSpec, g: ObservedGraph) -> NodeEmbeddingTable:
        if spec.kind == "wl":
            return wl_node_colors(g, iterations=spec.iterations, dim=spec.dim)
        if spec.kind == "svd":
            return svd_embed(g, rank=min(spec.dim, g.n))
        if spec.kind == "one_hot":
            return one_hot_embed(g)
        if spec.kind == "factorization":
            return factorization_train(g, dim=spec.dim, epochs=spec.train_epochs,
                                       lr=spec.train_lr, seed=spec.seed,
                                       pairs_per_epoch=min(g.n * g.n, 200_000))
        raise ValueError(f"unknown feature kind {spec.kind!r}")

    def __call__(self, pair: Pair) -> np.ndarray:
        i, j = pair
        if self._pair_embedder is not None:
            return self._pair_embedder.embed(i, j)
        zi = self.table.vectors[i]
        zj = self.table.vectors[j]
        if self.spec.binding == "concat":
            return np.concatenate([zi, zj])
        return zi * zj

    def matrix(self, pairs: Sequence[Pair]) -> np.ndarray:
        return np.stack([self(p) for p in pairs])


# ---------------------------------------------------------------------------
# MLP link function (manual gradients)
# ---------------------------------------------------------------------------

def _elu(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def _elu_grad(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0)))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class Mlp:
    """[d -> d -> 1], hidden width equal to the input width."""
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    @staticmethod
    def init(dim: int, seed: int) -> "Mlp":
        gen = np.random.default_rng(rng.derive_seed(seed, 0x3217))
        scale = 1.0 / np.sqrt(dim)
        return Mlp(w1=gen.normal(0.0, scale, size=(dim, dim)),
                   b1=np.zeros(dim),
                   w2=gen.normal(0.0, scale, size=dim),
                   b2=0.0)

    @staticmethod
    def zeros(dim: int) -> "Mlp":
        return Mlp(w1=np.zeros((dim, dim)), b1=np.zeros(dim),
                   w2=np.zeros(dim), b2=0.0)

    def scores(self, x: np.ndarray) -> np.ndarray:
        h = _elu(x @ self.w1 + self.b1)
        return h @ self.w2 + self.b2

    def scores_and_grads(self, x: np.ndarray, dloss_dscore: np.ndarray):
        """Backprop for a batch; returns parameter gradients (mean over batch)."""
        pre = x @ self.w1 + self.b1
        h = _elu(pre)
        m = x.shape[0]
        gw2 = h.T @ dloss_dscore / m
        gb2 = float(np.mean(dloss_dscore))
        dh = np.outer(dloss_dscore, self.w2)
        dpre = dh * _elu_grad(pre)
        gw1 = x.T @ dpre / m
        gb1 = dpre.mean(axis=0)
        return gw1, gb1, gw2, gb2

    def params(self):
        return [self.w1, self.b1, self.w2]

    def checksum(self) -> str:
        blob = b"".join([self.w1.tobytes(), self.b1.tobytes(),
                         self.w2.tobytes(), struct.pack("<d", self.b2)])
        return hashlib.sha256(blob).hexdigest()


def loss_and_grad(kind: str, y: np.ndarray, scores: np.ndarray):
    """Per-sample loss values and d(loss)/d(score)."""
    if kind == "bce":
        p = _sigmoid(scores)
        eps = 1e-12
        losses = -(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))
        return losses, p - y
    if kind == "mse":
        diff = scores - y
        return diff ** 2, 2.0 * diff
    raise ValueError(f"unknown loss kind {kind!r}")


# ---------------------------------------------------------------------------
# LinkModel and training
# ---------------------------------------------------------------------------

@dataclass
class TrainReport:
    loss_curve: list[float]
    checksum: str
    seed: int
    wall_time: float


@dataclass
class LinkModel:
    features: PairFeatures
    mlp: Mlp
    loss_kind: str = "bce"

    def __post_init__(self):
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.loss_kind!r}")

    @staticmethod
    def build(feature_spec: FeatureSpec, g: ObservedGraph,
              loss_kind: str = "bce", seed: int = 0) -> "LinkModel":
        feats = PairFeatures(feature_spec, g)
        return LinkModel(features=feats, mlp=Mlp.init(feats.dim, seed),
                         loss_kind=loss_kind)


TargetsLike = Union[ProbeSequence, Sequence[tuple[Pair, float]]]


def _targets(probes: TargetsLike) -> tuple[list[Pair], np.ndarray]:
    if isinstance(probes, ProbeSequence):
        pairs = probes.pairs()
        y = probes.outcomes().astype(float)
    else:
        pairs = [p for p, _v in probes]
        y = np.array([v for _p, v in probes], dtype=float)
    return pairs, y


def train(model: LinkModel, probes: TargetsLike, g: ObservedGraph,
          epochs: int = 200, lr: float = 0.1, batch: int = 64,
          seed: int = 0, momentum: float = 0.0,
          adam: bool = False) -> tuple[LinkModel, TrainReport]:
    """Minibatch gradient descent on the mean probe loss.

    The embedding is a fixed feature map; the trainable weights are the
    link function's.  Deterministic given (weights init, seed).
    """
    pairs, y = _targets(probes)
    if len(pairs) == 0:
        raise ValueError("empty probe set")
    if model.loss_kind == "bce" and not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("bce targets must be 0/1")
    x = model.features.matrix(pairs)
    mlp = model.mlp
    gen = np.random.default_rng(rng.derive_seed(seed, 0x7A11))
    start = time.perf_counter()
    curve = []
    vel = [np.zeros_like(p) for p in (mlp.w1, mlp.b1, mlp.w2)] + [0.0]
    m1 = [np.zeros_like(p) for p in (mlp.w1, mlp.b1, mlp.w2)] + [0.0]
    m2 = [np.zeros_like(p) for p in (mlp.w1, mlp.b1, mlp.w2)] + [0.0]
    step = 0
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    n = len(pairs)
    for _epoch in range(epochs):
        order = gen.permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n, batch):
            idx = order[lo:lo + batch]
            xb, yb = x[idx], y[idx]
            scores = mlp.scores(xb)
            losses, dscore = loss_and_grad(model.loss_kind, yb, scores)
            epoch_loss += float(losses.sum())
            grads = mlp.scores_and_grads(xb, dscore)
            step += 1
            params = [mlp.w1, mlp.b1, mlp.w2]
            for k in range(4):
                gk = grads[k]
                if adam:
                    m1[k] = beta1 * m1[k] + (1 - beta1) * gk
                    m2[k] = beta2 * m2[k] + (1 - beta2) * (gk * gk if k < 3
                                                           else gk ** 2)
                    mh = m1[k] / (1 - beta1 ** step)
                    vh = m2[k] / (1 - beta2 ** step)
                    upd = lr * mh / ((np.sqrt(vh) if k < 3 else vh ** 0.5) + eps)
                elif momentum > 0:
                    vel[k] = momentum * vel[k] + gk
                    upd = lr * vel[k]
                else:
                    upd = lr * gk
                if k < 3:
                    params[k] -= upd
                else:
                    mlp.b2 -= upd
        mean_loss = epoch_loss / n
        if not np.isfinite(mean_loss):
            raise RuntimeError("training diverged")
        curve.append(mean_loss)
    report = TrainReport(loss_curve=curve, checksum=mlp.checksum(), seed=seed,
                         wall_time=time.perf_counter() - start)
    return model, report


def predict(model: LinkModel, pair: Pair, g: ObservedGraph) -> float:
    """Score one pair: probability for bce, real value for mse."""
    n = g.n
    if not (0 <= pair[0] < n and 0 <= pair[1] < n):
        raise ValueError(f"pair {pair} out of range")
    score = model.mlp.scores(model.features(pair)[None, :])[0]
    if model.loss_kind == "bce":
        return float(_sigmoid(np.array([score]))[0])
    return float(score)


def predict_many(model: LinkModel, pairs: Sequence[Pair]) -> np.ndarray:
    scores = model.mlp.scores(model.features.matrix(pairs))
    if model.loss_kind == "bce":
        return _sigmoid(scores)
    return scores


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def hits_at_k(scored: Sequence[tuple[Pair, float, int]], k: int) -> float:
    """Fraction of the k best-scored pairs whose label is positive.

    Ties break by pair lexicographic order (deterministic).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(scored) < k:
        raise ValueError(f"need at least k={k} scored pairs, got {len(scored)}")
    ranked = sorted(scored, key=lambda t: (-t[1], t[0]))
    top = ranked[:k]
    return sum(1 for (_p, _s, label) in top if label) / k


def expected_risk(model: LinkModel, probes: TargetsLike) -> float:
    """Mean loss of the model on held-out probes."""
    pairs, y = _targets(probes)
    scores = model.mlp.scores(model.features.matrix(pairs))
    losses, _ = loss_and_grad(model.loss_kind, y, scores)
    return float(losses.mean())


# ---------------------------------------------------------------------------
# Bias measurement on a two-rate fixture
# ---------------------------------------------------------------------------

def measure_bias(feature_spec: FeatureSpec, fixture,
                 trials: int = 600, seed: int = 0,
                 grid_lr: Sequence[float] = (0.1, 0.3),
                 grid_epochs: Sequence[int] = (150, 400),
                 eval_trials: int = 4000) -> float:
    """Best achievable expected loss of the embedding kind on the fixture.

    `fixture` is an orbitlink.fixtures.ScmFixture (or anything with a
    `.graph` and a `.sample(per_pool, seed)` of probe outcomes).  Trains
    over a small lr/epochs grid on `trials` probes per pool and reports the
    minimum held-out risk on fresh probes, approximating the infimum in
    the bias definition.
    """
    g = fixture.graph
    train_probes = fixture.sample(trials, rng.derive_seed(seed, 1))
    eval_probes = fixture.sample(eval_trials, rng.derive_seed(seed, 2))
    best = np.inf
    for lr in grid_lr:
        for epochs in grid_epochs:
            model = LinkModel.build(feature_spec, g, loss_kind="bce",
                                    seed=seed)
            model, _report = train(model, train_probes, g, epochs=epochs,
                                   lr=lr, batch=128, seed=seed)
            risk = expected_risk(model, eval_probes)
            best = min(best, risk)
    return float(best)


# ---------------------------------------------------------------------------
# Checkpoints: versioned header + JSON meta + raw float64 arrays
# ---------------------------------------------------------------------------

def save_checkpoint(path, model: LinkModel) -> None:
    meta = {
        "feature_spec": model.features.spec.to_config(),
        "loss_kind": model.loss_kind,
        "dim": model.features.dim,
        "b2": model.mlp.b2,
        "has_table": model.features.table is not None,
        "table_kind": (model.features.table.kind
                       if model.features.table is not None else None),
    }
    meta_blob = json.dumps(meta, sort_keys=True).encode()
    arrays = [model.mlp.w1, model.mlp.b1, model.mlp.w2]
    if model.features.table is not None:
        arrays.append(model.features.table.vectors)
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<HI", CHECKPOINT_VERSION, len(meta_blob)))
        fh.write(meta_blob)
        fh.write(struct.pack("<I", len(arrays)))
        for arr in arrays:
            arr64 = np.ascontiguousarray(arr, dtype=np.float64)
            fh.write(struct.pack("<II", *((arr64.shape + (1,))[:2])))
            fh.write(arr64.tobytes())


def load_checkpoint(path, g: ObservedGraph) -> LinkModel:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError("not a model checkpoint (bad magic)")
        version, meta_len = struct.unpack("<HI", fh.read(6))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        meta = json.loads(fh.read(meta_len).decode())
        (n_arrays,) = struct.unpack("<I", fh.read(4))
        arrays = []
        for _ in range(n_arrays):
            rows, cols = struct.unpack("<II", fh.read(8))
            count = rows * cols
            arr = np.frombuffer(fh.read(8 * count), dtype=np.float64)
            arrays.append(arr.reshape(rows, cols) if cols > 1 else arr.copy())
    spec = FeatureSpec.from_config(meta["feature_spec"])
    table = None
    if meta["has_table"]:
        table = NodeEmbeddingTable(vectors=np.array(arrays[3]),
                                   kind=meta["table_kind"])
    feats = PairFeatures(spec, g, table=table)
    mlp = Mlp(w1=np.array(arrays[0]), b1=np.array(arrays[1]),
              w2=np.array(arrays[2]), b2=float(meta["b2"]))
    return LinkModel(features=feats, mlp=mlp, loss_kind=meta["loss_kind"])
