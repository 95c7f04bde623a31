"""Counter-based deterministic random streams.

Every stochastic quantity in this package is drawn from a pure function of
(master seed, stream tag, counters...).  This makes simulation replays
independent of evaluation order: parallel Monte Carlo trials, re-runs from a
manifest, and partial replays all produce bit-identical draws.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Stream tags.  Keeping them in one place avoids accidental collisions
# between independent draw families.
STREAM_PAIR_VALUE = 1       # exogenous draw for a value mechanism, keyed (t, i, j)
STREAM_PAIR_EMIT = 2        # exogenous draw for a pair mechanism, keyed (t,)
STREAM_SHUFFLE = 3          # node-identifier permutation at observation time
STREAM_SHARED = 4           # trace-level shared latent draw
STREAM_TRIAL = 5            # per-trial sub-seed derivation
STREAM_GENERIC = 6          # miscellaneous seeded decisions (splits, sampling)


def _mix(z: int) -> int:
    """splitmix64 finalizer: avalanche a 64-bit state."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def counter_hash(seed: int, *parts: int) -> int:
    """64-bit hash of an integer tuple; the basis of every stream."""
    state = _mix((seed & _MASK) ^ _GOLDEN)
    for p in parts:
        state = _mix(state ^ ((p & _MASK) * _GOLDEN & _MASK))
    return state


def uniform(seed: int, *parts: int) -> float:
    """Deterministic draw in [0, 1) for the given counters."""
    return counter_hash(seed, *parts) / 2.0**64


def randrange(n: int, seed: int, *parts: int) -> int:
    """Deterministic integer in [0, n)."""
    if n <= 0:
        raise ValueError("randrange needs n >= 1")
    return counter_hash(seed, *parts) % n


def derive_seed(seed: int, *parts: int) -> int:
    """Sub-seed for an independent child stream (e.g. one Monte Carlo trial)."""
    return counter_hash(seed, STREAM_TRIAL, *parts)


def shuffled_identity(n: int, seed: int, *parts: int) -> list[int]:
    """Uniformly random permutation of 0..n-1 via seeded Fisher-Yates."""
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = counter_hash(seed, STREAM_SHUFFLE, *parts, i) % (i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm
