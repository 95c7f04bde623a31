"""Sequential graph-process engine: generation, observation, probes, checks.

The process emits one event per step t = 1, 2, ...: a pair mechanism picks
the touched pair (at most one brand-new node, ids assigned smallest-first),
a value mechanism emits a code.  At observation time t0 the node ids are
uniformly shuffled and the latest event per pair wins, which yields the
observed graph.  A probe is a do-intervention on the emitted pair at a
later step; its outcome is the value the mechanism produces there.

All randomness flows through counter-based streams keyed on (seed, step,
pair), so independent trials may run in any order or in parallel and still
reproduce bit-identically.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import rng
from .graphs import Alphabet, ObservedGraph, Permutation, canonical_form
from .mechanisms import (
    ConfigError,
    ExoSampler,
    Pair,
    PairExo,
    PairMechanism,
    StepExo,
    ValueMechanism,
    exo_sampler_from_config,
    pair_mechanism_from_config,
    value_mechanism_from_config,
)

CHI2_ALPHA = 0.01
MIN_CLASS_SAMPLES = 50


@dataclass(frozen=True)
class InvarianceFlags:
    """Declared mechanism invariances; checkers verify, probes exploit."""
    time_gap: bool = True
    time_exch: bool = True
    nonlink_ign: bool = True
    id_exch: bool = True
    non_interfering: bool = True

    def to_config(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ScmSpec:
    """Declarative simulation spec: mechanisms, noise streams, flags."""
    alphabet: Alphabet
    pair_mechanism: PairMechanism
    value_mechanism: ValueMechanism
    exo_x: ExoSampler = field(default_factory=PairExo)
    exo_e: ExoSampler = field(default_factory=StepExo)
    flags: InvarianceFlags = field(default_factory=InvarianceFlags)
    directed: bool = False

    def to_config(self) -> dict:
        return {
            "alphabet": self.alphabet.size,
            "directed": self.directed,
            "pair_mechanism": self.pair_mechanism.to_config(),
            "value_mechanism": self.value_mechanism.to_config(),
            "exo_x": self.exo_x.to_config(),
            "exo_e": self.exo_e.to_config(),
            "flags": self.flags.to_config(),
        }

    @staticmethod
    def from_config(cfg: dict) -> "ScmSpec":
        if "alphabet" not in cfg:
            raise ConfigError("scm.alphabet: missing required field")
        flags = cfg.get("flags", {})
        return ScmSpec(
            alphabet=Alphabet(int(cfg["alphabet"])),
            pair_mechanism=pair_mechanism_from_config(
                cfg.get("pair_mechanism", {"kind": "row_major", "n": 3}),
                "scm.pair_mechanism"),
            value_mechanism=value_mechanism_from_config(
                cfg.get("value_mechanism", {"kind": "constant", "value": 0}),
                "scm.value_mechanism"),
            exo_x=exo_sampler_from_config(cfg.get("exo_x", {"kind": "pair"}),
                                          "scm.exo_x"),
            exo_e=exo_sampler_from_config(cfg.get("exo_e", {"kind": "step"}),
                                          "scm.exo_e"),
            flags=InvarianceFlags(**{k: bool(v) for k, v in flags.items()}),
            directed=bool(cfg.get("directed", False)),
        )


@dataclass
class EventLog:
    """The hidden sequential trace: pairs, values, exogenous draws."""
    pairs: list[Pair]
    values: list[int]
    exo_x: list[tuple[float, ...]]
    exo_e: list[tuple[float, ...]]

    def __post_init__(self):
        if not (len(self.pairs) == len(self.values)
                == len(self.exo_x) == len(self.exo_e)):
            raise ValueError("event sequences must have equal length")
        if self.pairs and tuple(self.pairs[0]) != (0, 0):
            raise ValueError("the first event must touch pair (0, 0)")
        seen = -1
        for t, (i, j) in enumerate(self.pairs, start=1):
            if max(i, j) > seen + 1:
                raise ValueError(f"illegal pair emission at t={t}: "
                                 f"({i}, {j}) introduces more than one new node")
            seen = max(seen, i, j)

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def node_count(self) -> int:
        return max((max(p) for p in self.pairs), default=-1) + 1

    def copy(self) -> "EventLog":
        return EventLog(list(self.pairs), list(self.values),
                        list(self.exo_x), list(self.exo_e))


@dataclass(frozen=True)
class ProbeRecord:
    """One intervention: pair in observed-id space, step, outcome code."""
    pair: Pair
    time: int
    outcome: int


@dataclass
class ProbeSequence:
    records: list[ProbeRecord]
    base_graph: ObservedGraph

    def __post_init__(self):
        times = [r.time for r in self.records]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("probe times must be strictly increasing")
        n = self.base_graph.n
        for r in self.records:
            if not (0 <= r.pair[0] < n and 0 <= r.pair[1] < n):
                raise ValueError(f"probe pair {r.pair} outside the graph")

    def __len__(self):
        return len(self.records)

    def outcomes(self) -> np.ndarray:
        return np.array([r.outcome for r in self.records], dtype=np.int64)

    def pairs(self) -> list[Pair]:
        return [r.pair for r in self.records]


# ---------------------------------------------------------------------------
# Generation and observation
# ---------------------------------------------------------------------------

def _step(spec: ScmSpec, log: EventLog, t: int, seed: int,
          forced_pair: Optional[Pair] = None) -> tuple[Pair, int]:
    """Advance one step; with `forced_pair` the pair mechanism is replaced
    by the constant (do-intervention semantics)."""
    if forced_pair is None:
        u_e = spec.exo_e.draw(seed, t, (0, 0))
        pair = (0, 0) if t == 1 else spec.pair_mechanism.next_pair(
            t, log.pairs, log.values, u_e)
        pair = (int(pair[0]), int(pair[1]))
        seen = log.node_count
        if max(pair) > seen:  # strictly more than one new node
            raise ValueError(f"illegal pair emission at t={t}: {pair}")
    else:
        u_e = ()
        pair = (int(forced_pair[0]), int(forced_pair[1]))
    log.pairs.append(pair)
    log.exo_e.append(tuple(u_e))
    u_x = spec.exo_x.draw(seed, t, pair)
    value = int(spec.value_mechanism.sample(t, log.pairs, log.values, u_x))
    if not spec.alphabet.contains(value):
        raise ValueError(f"value mechanism emitted {value} outside the alphabet")
    log.values.append(value)
    log.exo_x.append(tuple(u_x))
    return pair, value


def observe(log: EventLog, t0: int, pi: Permutation, alphabet: Alphabet,
            directed: bool) -> ObservedGraph:
    """Latest-event-wins adjacency under the hidden-to-observed relabeling."""
    n = log.node_count
    if len(pi) != n:
        raise ValueError("permutation/graph size mismatch")
    adj = np.full((n, n), alphabet.zero, dtype=np.int64)
    latest: dict[Pair, tuple[int, int]] = {}
    for t in range(min(t0, len(log))):
        latest[log.pairs[t]] = (t, log.values[t])
    if directed:
        for (i, j), (_t, v) in latest.items():
            adj[pi(i), pi(j)] = v
    else:
        undirected: dict[frozenset, tuple[int, int]] = {}
        for (i, j), (t, v) in latest.items():
            key = frozenset((i, j))
            if key not in undirected or t > undirected[key][0]:
                undirected[key] = (t, v)
        for key, (_t, v) in undirected.items():
            members = tuple(key)
            i = members[0]
            j = members[-1]
            adj[pi(i), pi(j)] = v
            adj[pi(j), pi(i)] = v
    return ObservedGraph(adj, alphabet, directed, observation_time=t0)


def run_scm(spec: ScmSpec, t0: int, seed: int,
            shuffle_ids: bool = True) -> tuple[EventLog, ObservedGraph, Permutation]:
    """Run the recurrence for t = 1..t0, then observe.

    `shuffle_ids=False` skips the uniform relabeling; it exists purely as a
    test-harness hook for the exchangeability negative control.
    """
    if t0 < 1:
        raise ValueError("t0 must be >= 1")
    log = EventLog([], [], [], [])
    for t in range(1, t0 + 1):
        _step(spec, log, t, seed)
    n = log.node_count
    if shuffle_ids:
        pi = Permutation.from_list(rng.shuffled_identity(n, seed))
    else:
        pi = Permutation.identity(n)
    graph = observe(log, t0, pi, spec.alphabet, spec.directed)
    return log, graph, pi


# ---------------------------------------------------------------------------
# Probes
# ---------------------------------------------------------------------------

def probe(spec: ScmSpec, log: EventLog, pi: Permutation,
          pair_observed: Pair, t1: int, seed: int) -> ProbeRecord:
    """Intervene on `pair_observed` (observed ids) at step t1.

    With the time-gap invariance declared, intermediate steps carry no
    information and are skipped outright: the probe collapses to the slot
    right after observation, making outcomes bit-identical for every t1.
    Without it, the process's own mechanisms drive the steps in between.
    """
    t0 = len(log)
    if t1 <= t0:
        raise ValueError("probe before observation")
    n = log.node_count
    i, j = pair_observed
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"probe pair {pair_observed} out of range")
    inv = pi.inverse()
    hidden = (inv(i), inv(j))
    work = log.copy()
    if spec.flags.time_gap:
        t_eff = t0 + 1
    else:
        for t in range(t0 + 1, t1):
            _step(spec, work, t, seed)
        t_eff = t1
    _, value = _step(spec, work, t_eff, seed, forced_pair=hidden)
    return ProbeRecord(pair=(int(i), int(j)), time=t1, outcome=value)


def probe_sequence(spec: ScmSpec, log: EventLog, pi: Permutation,
                   pairs: Sequence[Pair], times: Sequence[int],
                   seed: int) -> ProbeSequence:
    """Apply probes sequentially; earlier probes become part of the history
    seen by later ones (mechanisms satisfying non-interference ignore them)."""
    t0 = len(log)
    if len(pairs) != len(times):
        raise ValueError("pairs and times must have equal length")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("probe times must be strictly increasing")
    if times and times[0] <= t0:
        raise ValueError("probe before observation")
    inv = pi.inverse()
    work = log.copy()
    records = []
    cursor = t0
    for pair_observed, t_m in zip(pairs, times):
        i, j = pair_observed
        n = work.node_count
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"probe pair {pair_observed} out of range")
        hidden = (inv(i), inv(j))
        if spec.flags.time_gap:
            t_eff = cursor + 1
        else:
            for t in range(cursor + 1, t_m):
                _step(spec, work, t, seed)
            t_eff = t_m
        _, value = _step(spec, work, t_eff, seed, forced_pair=hidden)
        cursor = t_eff
        records.append(ProbeRecord(pair=(int(i), int(j)), time=int(t_m),
                                   outcome=value))
    graph = observe(log, t0, pi, spec.alphabet, spec.directed)
    return ProbeSequence(records=records, base_graph=graph)


def sample_probes(spec: ScmSpec, log: EventLog, pi: Permutation,
                  pairs: Sequence[Pair], seed: int,
                  t1: Optional[int] = None) -> ProbeSequence:
    """Independent lone-probe replicates over `pairs`.

    Each probe runs in its own trace (fresh exogenous stream derived from
    the trial index), which realizes the idealized non-interfering design:
    every outcome is distributed as a lone first probe.
    """
    t0 = len(log)
    t_probe = t1 if t1 is not None else t0 + 1
    records = []
    for m, pair_observed in enumerate(pairs):
        rec = probe(spec, log, pi, pair_observed, t_probe,
                    rng.derive_seed(seed, m))
        records.append(ProbeRecord(pair=rec.pair, time=t0 + 1 + m,
                                   outcome=rec.outcome))
    graph = observe(log, t0, pi, spec.alphabet, spec.directed)
    return ProbeSequence(records=records, base_graph=graph)


# ---------------------------------------------------------------------------
# Exchangeability check (labeled variants uniform within isomorphism class)
# ---------------------------------------------------------------------------

@dataclass
class ClassReport:
    class_id: int
    variant_count_theoretical: int
    total: int
    counts: dict[bytes, int]
    expected: float
    max_deviation: float
    p_value: float


@dataclass
class ExchangeabilityReport:
    classes: list[ClassReport]
    skipped: int
    samples: int

    @property
    def min_p_value(self) -> float:
        return min((c.p_value for c in self.classes), default=1.0)

    def passed(self, alpha: float = CHI2_ALPHA) -> bool:
        return all(c.p_value > alpha for c in self.classes)

    def csv_rows(self) -> list[str]:
        rows = ["class_id,labeled_variant,count,expected,p_value"]
        for c in self.classes:
            for k, (variant, count) in enumerate(sorted(c.counts.items())):
                rows.append(f"{c.class_id},{k},{count},{c.expected:.4f},"
                            f"{c.p_value:.6g}")
        return rows


def check_exchangeability(spec: ScmSpec, t0: int, n_samples: int, seed: int,
                          shuffle_ids: bool = True,
                          min_class_samples: int = MIN_CLASS_SAMPLES,
                          threads: int = 1) -> ExchangeabilityReport:
    """Monte Carlo test that labeled variants are uniform within each
    isomorphism class of the observed graph.

    Uses the exact theoretical variant count n!/|Aut| per class, so variants
    that never showed up still count against uniformity.
    """
    from .symmetry import automorphism_group  # local import to avoid a cycle

    def simulate_range(lo: int, hi: int) -> dict[bytes, int]:
        counts: dict[bytes, int] = {}
        for k in range(lo, hi):
            _log, g, _pi = run_scm(spec, t0, rng.derive_seed(seed, k),
                                   shuffle_ids=shuffle_ids)
            key = (g.n, g.adjacency.tobytes())
            counts[key] = counts.get(key, 0) + 1
        return counts

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        chunk = (n_samples + threads - 1) // threads
        bounds = [(lo, min(lo + chunk, n_samples))
                  for lo in range(0, n_samples, chunk)]
        counts: dict = {}
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(lambda b: simulate_range(*b), bounds):
                for key, c in part.items():
                    counts[key] = counts.get(key, 0) + c
    else:
        counts = simulate_range(0, n_samples)

    # Bucket labeled graphs by canonical form.
    canon_memo: dict = {}
    by_class: dict[bytes, dict[bytes, int]] = {}
    rep_graph: dict[bytes, ObservedGraph] = {}
    for (n, blob), c in counts.items():
        adj = np.frombuffer(blob, dtype=np.int64).reshape(n, n)
        g = ObservedGraph(adj, spec.alphabet, spec.directed)
        key = (n, blob)
        if key not in canon_memo:
            canon_memo[key] = canonical_form(g)
        canon = canon_memo[key]
        by_class.setdefault(canon, {})[blob] = c
        rep_graph.setdefault(canon, g)

    import math
    classes = []
    skipped = 0
    for class_id, (canon, variants) in enumerate(sorted(by_class.items())):
        total = sum(variants.values())
        if total < min_class_samples:
            skipped += 1
            continue
        g = rep_graph[canon]
        aut = automorphism_group(g)
        v = math.factorial(g.n) // aut.order
        expected = total / v
        observed = list(variants.values()) + [0] * (v - len(variants))
        if v == 1:
            p_value = 1.0
            max_dev = 0.0
        else:
            chi2 = sum((o - expected) ** 2 / expected for o in observed)
            p_value = float(stats.chi2.sf(chi2, df=v - 1))
            max_dev = max(abs(o - expected) for o in observed)
        classes.append(ClassReport(
            class_id=class_id, variant_count_theoretical=v, total=total,
            counts=dict(variants), expected=expected,
            max_deviation=max_dev, p_value=p_value))
    return ExchangeabilityReport(classes=classes, skipped=skipped,
                                 samples=n_samples)


# ---------------------------------------------------------------------------
# Mechanism invariance checks
# ---------------------------------------------------------------------------

INVARIANCE_FLAGS = ("time_gap", "time_exch", "nonlink_ign", "id_exch")


@dataclass
class InvarianceReport:
    flag: str
    trials: int
    failures: int
    counterexample: Optional[dict]

    @property
    def ok(self) -> bool:
        return self.failures == 0


def _random_history(spec: ScmSpec, seed: int, min_len: int = 3,
                    max_len: int = 10) -> EventLog:
    t0 = min_len + rng.randrange(max_len - min_len + 1, seed, 1)
    log = EventLog([], [], [], [])
    for t in range(1, t0 + 1):
        _step(spec, log, t, seed)
    return log

def _probe_pair_for(log: EventLog, seed: int) -> Pair:
    n = log.node_count
    return (rng.randrange(n, seed, 7, 0), rng.randrange(n, seed, 7, 1))


def check_mechanism_invariance(spec: ScmSpec, flag: str, trials: int,
                               seed: int, min_len: int = 4,
                               max_len: int = 10) -> InvarianceReport:
    """Direct functional test of one invariance axis of the value mechanism.

    Each axis is tested in isolation on histories drawn from the spec's own
    generator: the clock axis appends link-valued filler events (non-link
    sensitivity has its own axis), the order axis permutes the prefix, the
    non-link axis deletes ZERO-valued events at a fixed mechanism index, and
    the identifier axis applies a joint relabeling.  The exogenous draw is
    held fixed on both sides of every comparison.
    """
    if flag not in INVARIANCE_FLAGS:
        raise ValueError(f"unknown invariance flag {flag!r}")
    zero = spec.alphabet.zero
    failures = 0
    counterexample = None
    for trial in range(trials):
        tseed = rng.derive_seed(seed, trial)
        log = _random_history(spec, tseed, min_len=min_len, max_len=max_len)
        pair = _probe_pair_for(log, tseed)
        t_next = len(log) + 1
        base_pairs = log.pairs + [pair]
        base_values = list(log.values)
        u = spec.exo_x.draw(tseed, t_next, pair)
        base_out = spec.value_mechanism.sample(t_next, base_pairs, base_values, u)

        if flag == "time_gap":
            gap = 1 + rng.randrange(4, tseed, 11)
            extended = log.copy()
            for k in range(gap):
                _step(spec, extended, t_next + k, tseed)
            alt_pairs = extended.pairs + [pair]
            alt_values = list(extended.values)
            alt_out = spec.value_mechanism.sample(
                t_next + gap, alt_pairs, alt_values, u)
        elif flag == "time_exch":
            order = rng.shuffled_identity(len(log), tseed, 13)
            alt_pairs = [log.pairs[k] for k in order] + [pair]
            alt_values = [log.values[k] for k in order]
            alt_out = spec.value_mechanism.sample(
                t_next, alt_pairs, alt_values, u)
        elif flag == "nonlink_ign":
            keep = [k for k in range(len(log)) if log.values[k] != zero]
            alt_pairs = [log.pairs[k] for k in keep] + [pair]
            alt_values = [log.values[k] for k in keep]
            alt_out = spec.value_mechanism.sample(
                t_next, alt_pairs, alt_values, u)
        else:  # id_exch
            n = log.node_count
            relabel = rng.shuffled_identity(n, tseed, 14)
            alt_pairs = ([(relabel[a], relabel[b]) for a, b in log.pairs]
                         + [(relabel[pair[0]], relabel[pair[1]])])
            alt_values = base_values
            alt_out = spec.value_mechanism.sample(
                t_next, alt_pairs, alt_values, u)

        if alt_out != base_out:
            failures += 1
            if counterexample is None:
                counterexample = {
                    "trial": trial,
                    "history_pairs": list(log.pairs),
                    "history_values": list(log.values),
                    "probe_pair": pair,
                    "base_outcome": base_out,
                    "transformed_outcome": alt_out,
                }
    return InvarianceReport(flag=flag, trials=trials, failures=failures,
                            counterexample=counterexample)
