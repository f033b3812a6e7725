"""Deterministic named random streams.

Every stochastic draw in a run flows through a stream derived from the
experiment seed by a documented 64-bit mix, so a (seed, stream name,
label) triple produces the same value sequence on every run.  Streams
are independent by construction: replication r of an experiment uses
``mix(seed, r)`` as its root, and each consumer (decision tie-breaks,
acquisition attempts, wander jitter, placement) pulls from its own
named child stream.

The mix is splitmix64-style: the state absorbs each label (strings via
64-bit FNV-1a of their UTF-8 bytes, integers directly) and is passed
through the splitmix64 finalizer after each absorption and once more at
the end.  This makes derived seeds portable across platforms and easy
to reimplement elsewhere.
"""

from __future__ import annotations

import random

_MASK = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _fnv1a(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK
    return h


def _finalize(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def mix(seed: int, *labels: int | str) -> int:
    """Derive a 64-bit child seed from ``seed`` and a label path."""
    state = seed & _MASK
    for label in labels:
        if isinstance(label, str):
            state ^= _fnv1a(label.encode("utf-8"))
        else:
            state ^= label & _MASK
        state = _finalize(state)
    return _finalize(state)


class Stream:
    """A counting wrapper around ``random.Random``.

    Tracks how many draws were consumed so decision traces can report
    exactly how much randomness a choice used.
    """

    def __init__(self, seed: int):
        self._rng = random.Random(seed)
        self.draws = 0

    def uniform(self) -> float:
        """One uniform draw in [0, 1)."""
        self.draws += 1
        return self._rng.random()

    def index(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError(f"index() needs n >= 1, got {n}")
        self.draws += 1
        return self._rng.randrange(n)

    def bernoulli(self, p: float) -> bool:
        return self.uniform() < p

    def uniform_in(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()


class StreamHub:
    """Factory and registry of named streams under one root seed.

    The same (name, label) pair always returns the same stream object,
    so a consumer keeps advancing its own sequence across ticks instead
    of re-deriving it.
    """

    def __init__(self, root_seed: int):
        self.root_seed = root_seed & _MASK
        self._streams: dict[tuple[str, int | str | None], Stream] = {}

    def stream(self, name: str, label: int | str | None = None) -> Stream:
        key = (name, label)
        if key not in self._streams:
            labels: tuple[int | str, ...] = (name,) if label is None else (name, label)
            self._streams[key] = Stream(mix(self.root_seed, *labels))
        return self._streams[key]
