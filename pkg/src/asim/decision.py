"""Weighted consequential choice between feeding paths.

Each candidate path carries a positive and a negative weight in [0, 1].
A success averages the positive weight toward one; a failure halves the
positive weight (averaging toward zero) and averages the negative
weight toward one.  A choice compares net scores (positive minus
negative): scores within the configured tolerance of the maximum are
indistinguishable and form a tie set resolved uniformly at random.  A
completely blank table (every weight exactly zero) is also resolved at
random.  All randomness flows through an injected seeded stream, so
every choice is replayable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from .errors import ConfigurationError, StateError
from .rng import Stream

DEFAULT_TOLERANCE = 0.1


@dataclass(frozen=True, slots=True)
class ChoicePath:
    """One route to a goal: an id, its ordered waypoints, and the goal."""

    id: str
    hops: tuple[str, ...]
    goal: str

    def __post_init__(self):
        if not self.hops:
            raise ConfigurationError(f"path {self.id!r} must have at least one hop")


@dataclass(frozen=True, slots=True)
class WeightEntry:
    positive: float = 0.0
    negative: float = 0.0
    successes: int = 0
    failures: int = 0

    def __post_init__(self):
        if not 0.0 <= self.positive <= 1.0:
            raise ConfigurationError(f"positive weight {self.positive} outside [0, 1]")
        if not 0.0 <= self.negative <= 1.0:
            raise ConfigurationError(f"negative weight {self.negative} outside [0, 1]")

    @property
    def blank(self) -> bool:
        return self.positive == 0.0 and self.negative == 0.0


@dataclass(frozen=True, slots=True)
class WeightTable:
    """Per-path weights plus the indistinguishability tolerance."""

    entries: Mapping[str, WeightEntry]
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ConfigurationError(f"tolerance must be > 0, got {self.tolerance}")


@dataclass(frozen=True, slots=True)
class DecisionTrace:
    """Observable record of one choice."""

    chosen: str
    scores: Mapping[str, float]
    tie_broken: bool
    rng_draws: int


def init_table(paths: Sequence[ChoicePath | str], tolerance: float = DEFAULT_TOLERANCE) -> WeightTable:
    """Build a zeroed table over the given paths (ids must be unique)."""
    if not paths:
        raise ConfigurationError("a weight table needs at least one path")
    entries: dict[str, WeightEntry] = {}
    for path in paths:
        pid = path if isinstance(path, str) else path.id
        if pid in entries:
            raise ConfigurationError(f"duplicate path id: {pid!r}")
        entries[pid] = WeightEntry()
    return WeightTable(entries=entries, tolerance=tolerance)


def score(entry: WeightEntry) -> float:
    """Net score of an entry: positive minus negative, in [-1, 1]."""
    return entry.positive - entry.negative


def tie_set(table: WeightTable) -> tuple[str, ...]:
    """Paths whose net score is within tolerance of the maximum, in table order."""
    if not table.entries:
        raise StateError("choose on an empty weight table")
    scores = {pid: score(e) for pid, e in table.entries.items()}
    best = max(scores.values())
    return tuple(pid for pid, s in scores.items() if s >= best - table.tolerance)


def choose(table: WeightTable, rng: Stream) -> DecisionTrace:
    """Pick a path from the table.

    Blank tables (all weights exactly zero) choose uniformly among all
    paths; otherwise the tie set within tolerance of the best net score
    is computed and a singleton is chosen deterministically, a larger
    set uniformly at random.  The stream is consumed only when more
    than one candidate is in play.
    """
    if not table.entries:
        raise StateError("choose on an empty weight table")
    scores = {pid: score(e) for pid, e in table.entries.items()}
    if all(e.blank for e in table.entries.values()):
        candidates = tuple(table.entries)
    else:
        candidates = tie_set(table)
    draws_before = rng.draws
    if len(candidates) == 1:
        chosen = candidates[0]
        tie_broken = False
    else:
        chosen = candidates[rng.index(len(candidates))]
        tie_broken = True
    return DecisionTrace(
        chosen=chosen,
        scores=scores,
        tie_broken=tie_broken,
        rng_draws=rng.draws - draws_before,
    )


def _entry(table: WeightTable, path: str) -> WeightEntry:
    try:
        return table.entries[path]
    except KeyError:
        raise StateError(f"unknown path: {path!r}") from None


def record_success(table: WeightTable, path: str) -> WeightTable:
    """Average the path's positive weight toward one."""
    e = _entry(table, path)
    updated = replace(e, positive=(e.positive + 1.0) / 2.0, successes=e.successes + 1)
    return replace(table, entries={**table.entries, path: updated})


def record_failure(table: WeightTable, path: str) -> WeightTable:
    """Halve the path's positive weight and average its negative weight toward one."""
    e = _entry(table, path)
    updated = replace(
        e,
        positive=e.positive / 2.0,
        negative=(e.negative + 1.0) / 2.0,
        failures=e.failures + 1,
    )
    return replace(table, entries={**table.entries, path: updated})
