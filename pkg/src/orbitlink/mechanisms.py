"""Closed library of named parametric mechanisms for the graph process.

A simulation spec is fully declarative: pair mechanisms decide *which* pair
an event touches, value mechanisms decide the emitted code, and exogenous
samplers define the per-event noise streams.  Arbitrary user code is
deliberately not accepted; every mechanism is reachable from a small config
dict, which keeps runs serializable and bit-reproducible.

Call convention (mirrors the sequential process definition):

    value.sample(t, pairs, values, u) -> code
        t       event index, 1-based; ``pairs[t-1]`` is the current pair
        pairs   all pairs emitted up to and including t
        values  codes emitted strictly before t
        u       tuple of uniforms from the declared exogenous sampler

    pair.next_pair(t, pairs, values, u) -> (i, j)
        history strictly before t

Mechanisms for undirected processes treat the current pair as unordered.

Several mechanisms exist only as negative controls: each one breaks exactly
one of the four mechanism-invariance axes (event clock, event order,
non-link events, raw identifiers) so the corresponding checker and the
lifting test can be shown to catch the violation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import rng
from .graphs import Alphabet, ObservedGraph, canonical_form

Pair = tuple[int, int]


class ConfigError(ValueError):
    """Raised on malformed mechanism configs; message carries the field path."""


def _require(cfg: dict, key: str, path: str):
    if key not in cfg:
        raise ConfigError(f"{path}.{key}: missing required field")
    return cfg[key]


# ---------------------------------------------------------------------------
# History helpers shared by value mechanisms
# ---------------------------------------------------------------------------

def _as_set(pair: Pair) -> frozenset:
    return frozenset(pair)


def link_events(pairs: Sequence[Pair], values: Sequence[int], zero: int):
    """(pair, value) for every non-ZERO event strictly before the current one."""
    return [(pairs[k], values[k]) for k in range(len(values)) if values[k] != zero]


def latest_link_value(pairs, values, zero, pair: Pair, undirected: bool):
    """Latest-event value on `pair`, or ZERO if it never carried a link."""
    target = _as_set(pair) if undirected else pair
    out = zero
    for k in range(len(values)):
        p = _as_set(pairs[k]) if undirected else pairs[k]
        if p == target:
            out = values[k]
    return out


def ever_linked(pairs, values, zero, pair: Pair, undirected: bool) -> bool:
    """True once any event on `pair` carried a non-ZERO value.

    Order-free and non-link-event-free by construction, which keeps
    mechanisms built on it inside all four invariance assumptions.
    """
    target = _as_set(pair) if undirected else pair
    for k in range(len(values)):
        if values[k] == zero:
            continue
        p = _as_set(pairs[k]) if undirected else pairs[k]
        if p == target:
            return True
    return False


def link_adjacency(pairs, values, zero):
    """Undirected link-neighborhood map from the event history (links only)."""
    nbrs: dict[int, set[int]] = {}
    for k in range(len(values)):
        if values[k] == zero:
            continue
        i, j = pairs[k]
        if i == j:
            nbrs.setdefault(i, set())
            continue
        nbrs.setdefault(i, set()).add(j)
        nbrs.setdefault(j, set()).add(i)
    return nbrs


def _component_of(nbrs: dict[int, set[int]], roots: Sequence[int]) -> set[int]:
    seen = set()
    stack = [r for r in roots]
    while stack:
        x = stack.pop()
        if x in seen:
            continue
        seen.add(x)
        stack.extend(nbrs.get(x, ()))
    return seen


# ---------------------------------------------------------------------------
# Value mechanisms
# ---------------------------------------------------------------------------

class ValueMechanism:
    kind = "abstract"

    def sample(self, t, pairs, values, u):  # pragma: no cover - interface
        raise NotImplementedError

    def to_config(self) -> dict:  # pragma: no cover - interface
        raise NotImplementedError


@dataclass
class ConstantValue(ValueMechanism):
    """Always emits the same code."""
    value: int
    kind = "constant"

    def sample(self, t, pairs, values, u):
        return self.value

    def to_config(self):
        return {"kind": self.kind, "value": self.value}


@dataclass
class BernoulliValue(ValueMechanism):
    """Link (given code) with probability p, independent of history."""
    p: float
    value: int = 1
    kind = "bernoulli"

    def sample(self, t, pairs, values, u):
        return self.value if u[-1] < self.p else 0

    def to_config(self):
        return {"kind": self.kind, "p": self.p, "value": self.value}


@dataclass
class ValueTable(ValueMechanism):
    """Scripted per-event values; cycles when the script runs out."""
    values: list[int]
    kind = "value_table"

    def sample(self, t, pairs, values, u):
        return self.values[(t - 1) % len(self.values)]

    def to_config(self):
        return {"kind": self.kind, "values": list(self.values)}


@dataclass
class BernoulliTable(ValueMechanism):
    """Scripted per-event link rates; cycles when the script runs out."""
    rates: list[float]
    value: int = 1
    kind = "bernoulli_table"

    def sample(self, t, pairs, values, u):
        rate = self.rates[(t - 1) % len(self.rates)]
        return self.value if u[-1] < rate else 0

    def to_config(self):
        return {"kind": self.kind, "rates": list(self.rates),
                "value": self.value}


@dataclass
class ClassTable(ValueMechanism):
    """Trace-level mixture over scripted value rows.

    A shared uniform (first slot of the exogenous tuple) picks a row by
    inverse CDF over `probs`; the row then scripts every event value of the
    trace.  This is the table-driven construction that realizes any target
    distribution over labeled histories; requires the shared+pair sampler.
    """
    probs: list[float]
    rows: list[list[int]]
    kind = "class_table"

    def __post_init__(self):
        if len(self.probs) != len(self.rows):
            raise ConfigError("class_table: probs and rows length mismatch")
        if abs(sum(self.probs) - 1.0) > 1e-9:
            raise ConfigError("class_table: probs must sum to 1")

    def sample(self, t, pairs, values, u):
        if len(u) < 2:
            raise ConfigError("class_table requires the shared_plus_pair sampler")
        w = u[0]
        acc = 0.0
        row = self.rows[-1]
        for p_k, r in zip(self.probs, self.rows):
            acc += p_k
            if w < acc:
                row = r
                break
        return row[(t - 1) % len(row)]

    def to_config(self):
        return {"kind": self.kind, "probs": list(self.probs),
                "rows": [list(r) for r in self.rows]}


@dataclass
class CommonNeighborsValue(ValueMechanism):
    """Deterministic: link iff the pair shares >= threshold link-neighbors."""
    threshold: int = 1
    value: int = 1
    kind = "common_neighbors"

    def sample(self, t, pairs, values, u):
        i, j = pairs[-1]
        nbrs = link_adjacency(pairs, values, 0)
        common = nbrs.get(i, set()) & nbrs.get(j, set())
        common.discard(i)
        common.discard(j)
        return self.value if len(common) >= self.threshold else 0

    def to_config(self):
        return {"kind": self.kind, "threshold": self.threshold, "value": self.value}


@dataclass
class PreferentialAttachmentValue(ValueMechanism):
    """Link with probability min(1, deg(i)*deg(j)/scale) over history links."""
    scale: float = 4.0
    value: int = 1
    kind = "pref_attach"

    def sample(self, t, pairs, values, u):
        i, j = pairs[-1]
        nbrs = link_adjacency(pairs, values, 0)
        rate = min(1.0, len(nbrs.get(i, ())) * len(nbrs.get(j, ())) / self.scale)
        return self.value if u[-1] < rate else 0

    def to_config(self):
        return {"kind": self.kind, "scale": self.scale, "value": self.value}


@dataclass
class LinkedRate(ValueMechanism):
    """Bernoulli rate keyed on whether the probed pair was ever a link.

    The orbit-invariant workhorse for two-rate fixtures (e.g. edge pairs
    at one rate, non-edge pairs at another).
    """
    rate_linked: float
    rate_unlinked: float
    value: int = 1
    undirected: bool = True
    kind = "linked_rate"

    def sample(self, t, pairs, values, u):
        pair = pairs[-1]
        rate = (self.rate_linked
                if ever_linked(pairs, values, 0, pair, self.undirected)
                else self.rate_unlinked)
        return self.value if u[-1] < rate else 0

    def to_config(self):
        return {"kind": self.kind, "rate_linked": self.rate_linked,
                "rate_unlinked": self.rate_unlinked, "value": self.value,
                "undirected": self.undirected}


@dataclass
class ComponentSizeRate(ValueMechanism):
    """Bernoulli rate keyed by the size of the probed pair's link component.

    Component-local: events in other components cannot move the rate, so
    probes placed in disjoint components do not interfere.
    """
    table: dict[int, float]
    default: float = 0.5
    value: int = 1
    kind = "component_size_rate"

    def sample(self, t, pairs, values, u):
        i, j = pairs[-1]
        nbrs = link_adjacency(pairs, values, 0)
        size = len(_component_of(nbrs, [i, j]) | {i, j})
        rate = self.table.get(size, self.default)
        return self.value if u[-1] < rate else 0

    def to_config(self):
        return {"kind": self.kind,
                "table": {str(k): v for k, v in self.table.items()},
                "default": self.default, "value": self.value}


@dataclass
class LinkCountRate(ValueMechanism):
    """Bernoulli rate shifted by the total number of link events so far.

    Interfering on purpose: a probe that lands a link raises the rate seen
    by every later probe.
    """
    base: float = 0.3
    delta: float = 0.1
    value: int = 1
    kind = "link_count_rate"

    def sample(self, t, pairs, values, u):
        count = sum(1 for v in values if v != 0)
        rate = min(1.0, max(0.0, self.base + self.delta * count))
        return self.value if u[-1] < rate else 0

    def to_config(self):
        return {"kind": self.kind, "base": self.base, "delta": self.delta,
                "value": self.value}


@dataclass
class MixtureBernoulli(ValueMechanism):
    """Two-component Bernoulli mixture driven by a trace-shared latent.

    u = (shared, v): the shared uniform picks the component once per trace
    (shared across pairs), v resolves the pair's outcome.  Realizes an
    orbit-level latent in fixtures where all probed pairs sit in one orbit.
    """
    w_prob: float
    rates: tuple[float, float]
    value: int = 1
    kind = "mixture_bernoulli"

    def sample(self, t, pairs, values, u):
        if len(u) < 2:
            raise ConfigError("mixture_bernoulli requires the shared_plus_pair sampler")
        w = 1 if u[0] < self.w_prob else 0
        return self.value if u[1] < self.rates[w] else 0

    def to_config(self):
        return {"kind": self.kind, "w_prob": self.w_prob,
                "rates": list(self.rates), "value": self.value}


@dataclass
class OrbitBernoulli(ValueMechanism):
    """Bernoulli rate keyed exactly on the probed pair's orbit.

    The key is the canonical form of the pair-marked link graph built from
    history, so two probes get the same rate iff their (graph, pair) are
    isomorphic.  Rates are drawn from `rates` by stable hash of the key;
    a single-entry list pins every orbit to one rate.  Exact-search limits
    apply (small fixtures only); keys are memoized per history/pair.
    """
    rates: list[float]
    value: int = 1
    undirected: bool = True
    kind = "orbit_bernoulli"
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def _orbit_rate(self, pairs, values, pair: Pair) -> float:
        links = tuple(sorted(
            (tuple(sorted(p)) if self.undirected else p, v)
            for p, v in link_events(pairs, values, 0)))
        nodes = sorted({x for (p, _v) in links for x in p} | set(pair))
        key = (links, tuple(nodes), tuple(pair))
        if key in self._memo:
            return self._memo[key]
        relabel = {x: k for k, x in enumerate(nodes)}
        n = len(nodes)
        codes = max((v for (_p, v) in links), default=1)
        # marks extend the alphabet on the diagonal: 1=i-mark, 2=j-mark, 3=both
        alpha = Alphabet((codes + 1) * 4)
        adj = np.zeros((n, n), dtype=np.int64)
        for (p, v) in links:
            a, b = relabel[p[0]], relabel[p[1]]
            adj[a, b] = v
            if self.undirected:
                adj[b, a] = v
        i, j = relabel[pair[0]], relabel[pair[1]]
        adj[i, i] += (codes + 1) * (3 if i == j else 1)
        if i != j:
            adj[j, j] += (codes + 1) * 2
        g = ObservedGraph(adj, alpha, directed=not self.undirected)
        h = rng.counter_hash(0x0B17, *canonical_form(g))
        rate = self.rates[h % len(self.rates)]
        self._memo[key] = rate
        return rate

    def sample(self, t, pairs, values, u):
        rate = self._orbit_rate(pairs, values, pairs[-1])
        return self.value if u[-1] < rate else 0

    def to_config(self):
        return {"kind": self.kind, "rates": list(self.rates),
                "value": self.value, "undirected": self.undirected}


@dataclass
class SwitchAfter(ValueMechanism):
    """Time-indexed composition: `before` scripts events up to t_switch,
    `after` takes over from t_switch + 1 on.

    The usual shape of a fixture: a scripted generation phase followed by a
    history-reading probe mechanism.  All four invariances hold whenever
    `after` satisfies them and observation happens at or after t_switch.
    """
    t_switch: int
    before: ValueMechanism
    after: ValueMechanism
    kind = "switch_after"

    def sample(self, t, pairs, values, u):
        mech = self.before if t <= self.t_switch else self.after
        return mech.sample(t, pairs, values, u)

    def to_config(self):
        return {"kind": self.kind, "t_switch": self.t_switch,
                "before": self.before.to_config(),
                "after": self.after.to_config()}


# --- negative controls: each breaks exactly one invariance axis -----------

@dataclass
class ClockParityRate(ValueMechanism):
    """Violates the event-clock invariance: rate depends on the index t."""
    even: float = 0.2
    odd: float = 0.8
    value: int = 1
    kind = "clock_parity_rate"

    def sample(self, t, pairs, values, u):
        rate = self.odd if t % 2 == 1 else self.even
        return self.value if u[-1] < rate else 0

    def to_config(self):
        return {"kind": self.kind, "even": self.even, "odd": self.odd,
                "value": self.value}


@dataclass
class FirstLinkPairRate(ValueMechanism):
    """Violates order invariance: reads which link event came first."""
    match_rate: float = 0.8
    other_rate: float = 0.2
    value: int = 1
    kind = "first_link_pair_rate"

    def sample(self, t, pairs, values, u):
        first: Optional[Pair] = None
        for k in range(len(values)):
            if values[k] != 0:
                first = pairs[k]
                break
        i, j = pairs[-1]
        hit = first is not None and {i, j} <= set(first)
        rate = self.match_rate if hit else self.other_rate
        return self.value if u[-1] < rate else 0

    def to_config(self):
        return {"kind": self.kind, "match_rate": self.match_rate,
                "other_rate": self.other_rate, "value": self.value}


@dataclass
class NonlinkTouchRate(ValueMechanism):
    """Violates non-link ignorability: reads non-link events.

    Rate is `match_rate` when the probed pair contains the first coordinate
    of some non-link event; the multiset of non-link events is read without
    order or identifiers beyond coincidence with the probed pair.
    """
    match_rate: float = 0.8
    other_rate: float = 0.2
    value: int = 1
    kind = "nonlink_touch_rate"

    def sample(self, t, pairs, values, u):
        heads = {pairs[k][0] for k in range(len(values)) if values[k] == 0}
        i, j = pairs[-1]
        rate = self.match_rate if (i in heads or j in heads) else self.other_rate
        return self.value if u[-1] < rate else 0

    def to_config(self):
        return {"kind": self.kind, "match_rate": self.match_rate,
                "other_rate": self.other_rate, "value": self.value}


@dataclass
class RawIdRate(ValueMechanism):
    """Violates identifier invariance: rate keyed on the raw node ids."""
    rates: dict[int, float]
    default: float = 0.2
    value: int = 1
    kind = "raw_id_rate"

    def sample(self, t, pairs, values, u):
        i, j = pairs[-1]
        rate = self.rates.get(min(i, j), self.default)
        return self.value if u[-1] < rate else 0

    def to_config(self):
        return {"kind": self.kind,
                "rates": {str(k): v for k, v in self.rates.items()},
                "default": self.default, "value": self.value}


# ---------------------------------------------------------------------------
# Pair mechanisms
# ---------------------------------------------------------------------------

class PairMechanism:
    kind = "abstract"

    def next_pair(self, t, pairs, values, u) -> Pair:  # pragma: no cover
        raise NotImplementedError

    def to_config(self) -> dict:  # pragma: no cover - interface
        raise NotImplementedError


@dataclass
class FixedSequence(PairMechanism):
    """Scripted pair order; past the script it repeats `filler` (default:
    the last scripted pair)."""
    pairs: list[Pair]
    filler: Optional[Pair] = None
    kind = "fixed_sequence"

    def next_pair(self, t, pairs, values, u):
        if t - 1 < len(self.pairs):
            return tuple(self.pairs[t - 1])
        return tuple(self.filler) if self.filler is not None else tuple(self.pairs[-1])

    def to_config(self):
        cfg = {"kind": self.kind, "pairs": [list(p) for p in self.pairs]}
        if self.filler is not None:
            cfg["filler"] = list(self.filler)
        return cfg


@dataclass
class RowMajor(PairMechanism):
    """Enumerates the n x n grid row-major, cycling past the end."""
    n: int
    kind = "row_major"

    def next_pair(self, t, pairs, values, u):
        k = (t - 1) % (self.n * self.n)
        return (k // self.n, k % self.n)

    def to_config(self):
        return {"kind": self.kind, "n": self.n}


@dataclass
class UniformGrowth(PairMechanism):
    """Random pair among seen nodes; with probability p_new (while below
    n_max) the second slot is the next unseen node."""
    n_max: int
    p_new: float = 0.3
    kind = "uniform_growth"

    def next_pair(self, t, pairs, values, u):
        seen = max((max(p) for p in pairs), default=-1) + 1
        u0, u1, u2 = u[0], u[1], u[2]
        if seen == 0:
            return (0, 0)
        i = int(u1 * seen)
        if seen < self.n_max and u0 < self.p_new:
            return (i, seen)
        j = int(u2 * seen)
        return (i, j)

    def to_config(self):
        return {"kind": self.kind, "n_max": self.n_max, "p_new": self.p_new}


# ---------------------------------------------------------------------------
# Exogenous samplers
# ---------------------------------------------------------------------------

class ExoSampler:
    kind = "abstract"
    width = 1

    def draw(self, seed: int, t: int, pair: Pair) -> tuple[float, ...]:
        raise NotImplementedError

    def to_config(self) -> dict:
        return {"kind": self.kind}


class PairExo(ExoSampler):
    """Independent uniform per (t, pair): the i.i.d. pair-context stream."""
    kind = "pair"
    width = 1

    def draw(self, seed, t, pair):
        return (rng.uniform(seed, rng.STREAM_PAIR_VALUE, t, pair[0], pair[1]),)


class SharedPlusPairExo(ExoSampler):
    """(trace-shared uniform, per-(t, pair) uniform).

    The shared slot is drawn once per trace seed; mechanisms that read it
    (class_table, mixture_bernoulli) obtain trace-level latent structure,
    the explicit-finite-mixture route for dependent exogenous noise.
    """
    kind = "shared_plus_pair"
    width = 2

    def draw(self, seed, t, pair):
        return (rng.uniform(seed, rng.STREAM_SHARED),
                rng.uniform(seed, rng.STREAM_PAIR_VALUE, t, pair[0], pair[1]))


class StepExo(ExoSampler):
    """Three uniforms per step for pair mechanisms (growth decisions)."""
    kind = "step"
    width = 3

    def draw(self, seed, t, pair=(0, 0)):
        return (rng.uniform(seed, rng.STREAM_PAIR_EMIT, t, 0),
                rng.uniform(seed, rng.STREAM_PAIR_EMIT, t, 1),
                rng.uniform(seed, rng.STREAM_PAIR_EMIT, t, 2))


# ---------------------------------------------------------------------------
# Config registry
# ---------------------------------------------------------------------------

_VALUE_KINDS = {
    "constant": lambda c, p: ConstantValue(value=int(_require(c, "value", p))),
    "bernoulli": lambda c, p: BernoulliValue(p=float(_require(c, "p", p)),
                                             value=int(c.get("value", 1))),
    "value_table": lambda c, p: ValueTable(values=[int(v) for v in _require(c, "values", p)]),
    "bernoulli_table": lambda c, p: BernoulliTable(
        rates=[float(x) for x in _require(c, "rates", p)],
        value=int(c.get("value", 1))),
    "class_table": lambda c, p: ClassTable(
        probs=[float(x) for x in _require(c, "probs", p)],
        rows=[[int(v) for v in r] for r in _require(c, "rows", p)]),
    "common_neighbors": lambda c, p: CommonNeighborsValue(
        threshold=int(c.get("threshold", 1)), value=int(c.get("value", 1))),
    "pref_attach": lambda c, p: PreferentialAttachmentValue(
        scale=float(c.get("scale", 4.0)), value=int(c.get("value", 1))),
    "linked_rate": lambda c, p: LinkedRate(
        rate_linked=float(_require(c, "rate_linked", p)),
        rate_unlinked=float(_require(c, "rate_unlinked", p)),
        value=int(c.get("value", 1)),
        undirected=bool(c.get("undirected", True))),
    "component_size_rate": lambda c, p: ComponentSizeRate(
        table={int(k): float(v) for k, v in _require(c, "table", p).items()},
        default=float(c.get("default", 0.5)), value=int(c.get("value", 1))),
    "link_count_rate": lambda c, p: LinkCountRate(
        base=float(c.get("base", 0.3)), delta=float(c.get("delta", 0.1)),
        value=int(c.get("value", 1))),
    "mixture_bernoulli": lambda c, p: MixtureBernoulli(
        w_prob=float(_require(c, "w_prob", p)),
        rates=tuple(float(x) for x in _require(c, "rates", p)),
        value=int(c.get("value", 1))),
    "orbit_bernoulli": lambda c, p: OrbitBernoulli(
        rates=[float(x) for x in _require(c, "rates", p)],
        value=int(c.get("value", 1)),
        undirected=bool(c.get("undirected", True))),
    "switch_after": lambda c, p: SwitchAfter(
        t_switch=int(_require(c, "t_switch", p)),
        before=value_mechanism_from_config(_require(c, "before", p), p + ".before"),
        after=value_mechanism_from_config(_require(c, "after", p), p + ".after")),
    "clock_parity_rate": lambda c, p: ClockParityRate(
        even=float(c.get("even", 0.2)), odd=float(c.get("odd", 0.8)),
        value=int(c.get("value", 1))),
    "first_link_pair_rate": lambda c, p: FirstLinkPairRate(
        match_rate=float(c.get("match_rate", 0.8)),
        other_rate=float(c.get("other_rate", 0.2)),
        value=int(c.get("value", 1))),
    "nonlink_touch_rate": lambda c, p: NonlinkTouchRate(
        match_rate=float(c.get("match_rate", 0.8)),
        other_rate=float(c.get("other_rate", 0.2)),
        value=int(c.get("value", 1))),
    "raw_id_rate": lambda c, p: RawIdRate(
        rates={int(k): float(v) for k, v in _require(c, "rates", p).items()},
        default=float(c.get("default", 0.2)), value=int(c.get("value", 1))),
}

_PAIR_KINDS = {
    "fixed_sequence": lambda c, p: FixedSequence(
        pairs=[tuple(int(x) for x in q) for q in _require(c, "pairs", p)],
        filler=tuple(int(x) for x in c["filler"]) if "filler" in c else None),
    "row_major": lambda c, p: RowMajor(n=int(_require(c, "n", p))),
    "uniform_growth": lambda c, p: UniformGrowth(
        n_max=int(_require(c, "n_max", p)), p_new=float(c.get("p_new", 0.3))),
}

_EXO_KINDS = {
    "pair": lambda c, p: PairExo(),
    "shared_plus_pair": lambda c, p: SharedPlusPairExo(),
    "step": lambda c, p: StepExo(),
}


def value_mechanism_from_config(cfg: dict, path: str = "value_mechanism") -> ValueMechanism:
    kind = _require(cfg, "kind", path)
    if kind not in _VALUE_KINDS:
        raise ConfigError(f"{path}.kind: unknown value mechanism {kind!r}")
    return _VALUE_KINDS[kind](cfg, path)


def pair_mechanism_from_config(cfg: dict, path: str = "pair_mechanism") -> PairMechanism:
    kind = _require(cfg, "kind", path)
    if kind not in _PAIR_KINDS:
        raise ConfigError(f"{path}.kind: unknown pair mechanism {kind!r}")
    return _PAIR_KINDS[kind](cfg, path)


def exo_sampler_from_config(cfg: dict, path: str = "exo") -> ExoSampler:
    kind = _require(cfg, "kind", path)
    if kind not in _EXO_KINDS:
        raise ConfigError(f"{path}.kind: unknown exogenous sampler {kind!r}")
    return _EXO_KINDS[kind](cfg, path)
