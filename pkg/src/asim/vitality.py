"""Energy budget of an agent: store, metabolic ledger, gain curve, vital events.

An agent's charge is consumed by living (a base cost every tick) and by
acting; it is restored only while feeding at a charge source.  The
ledger books every unit actually moved in or out plus the amounts lost
to clamping at the floor and ceiling, so any run can be audited: the
charge delta always equals booked drains minus booked recharges.

Charge zero is death.  A dead store rejects every further operation,
and the event synthesizer emits ``Died`` exactly once.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping

from .errors import ConfigurationError, DeadAgentError

#: Distinguished action that is always accepted and costs only the base drain.
IDLE = "idle"


class VitalKind(Enum):
    POWER_LOW = "PowerLow"
    POWER_LOWER = "PowerLower"
    POWER_CRITICAL = "PowerCritical"
    DIED = "Died"
    RECHARGED = "Recharged"


@dataclass(frozen=True, slots=True)
class VitalEvent:
    kind: VitalKind
    tick: int


@dataclass(frozen=True, slots=True)
class MetabolicLedger:
    """Monotone counters over an agent's lifetime.

    ``total_drained`` and ``total_recharged`` book the energy actually
    applied; ``drain_clamped`` / ``recharge_clamped`` book the residue a
    request lost to the floor at zero or the ceiling at capacity.
    ``info_inflow`` counts percept events absorbed, the simulator's
    stand-in for order-maintaining information inflow.
    """

    total_drained: float = 0.0
    total_recharged: float = 0.0
    drain_clamped: float = 0.0
    recharge_clamped: float = 0.0
    info_inflow: int = 0
    ticks_alive: int = 0


@dataclass(frozen=True, slots=True)
class EnergyStore:
    """Charge state plus the static energy parameters of one agent.

    Thresholds are fractions of capacity.  ``gain_knee`` optionally bends
    the otherwise linear gain curve at one interior point (fraction of
    capacity, gain value); both segments stay monotone for any knee in
    the unit square.
    """

    charge: float
    capacity: float
    base_drain: float = 0.0
    action_costs: Mapping[str, float] = field(default_factory=dict)
    low_threshold: float = 0.30
    critical_threshold: float = 0.15
    gain_knee: tuple[float, float] | None = None
    ledger: MetabolicLedger = field(default_factory=MetabolicLedger)

    def __post_init__(self):
        if self.capacity <= 0:
            raise ConfigurationError(f"capacity must be > 0, got {self.capacity}")
        if not 0.0 <= self.charge <= self.capacity:
            raise ConfigurationError(
                f"charge {self.charge} outside [0, {self.capacity}]")
        if self.base_drain < 0:
            raise ConfigurationError(f"base_drain must be >= 0, got {self.base_drain}")
        if not 0.0 < self.critical_threshold < self.low_threshold < 1.0:
            raise ConfigurationError(
                "thresholds must satisfy 0 < critical < low < 1, got "
                f"critical={self.critical_threshold}, low={self.low_threshold}")
        for action, cost in self.action_costs.items():
            if cost < 0:
                raise ConfigurationError(f"action cost {action!r} must be >= 0, got {cost}")
        if self.gain_knee is not None:
            kx, ky = self.gain_knee
            if not (0.0 < kx < 1.0 and 0.0 <= ky <= 1.0):
                raise ConfigurationError(f"gain knee {self.gain_knee} outside the unit square")

    @property
    def fraction(self) -> float:
        return self.charge / self.capacity

    @property
    def low_level(self) -> float:
        return self.low_threshold * self.capacity

    @property
    def critical_level(self) -> float:
        return self.critical_threshold * self.capacity

    @property
    def is_dead(self) -> bool:
        return self.charge == 0.0


def drain(store: EnergyStore, action: str = IDLE) -> EnergyStore:
    """Apply one tick of drain for ``action``; charge clamps at zero.

    The action must be a configured cost key or the idle action.  Books
    the applied amount (and any clamped residue) and counts the tick.
    """
    if store.is_dead:
        raise DeadAgentError("drain on a dead agent")
    if action != IDLE and action not in store.action_costs:
        raise ConfigurationError(f"unknown action kind: {action!r}")
    requested = store.base_drain + store.action_costs.get(action, 0.0)
    new_charge = max(0.0, store.charge - requested)
    applied = store.charge - new_charge
    ledger = replace(
        store.ledger,
        total_drained=store.ledger.total_drained + applied,
        drain_clamped=store.ledger.drain_clamped + (requested - applied),
        ticks_alive=store.ledger.ticks_alive + 1,
    )
    return replace(store, charge=new_charge, ledger=ledger)


def recharge(store: EnergyStore, rate: float, dt: int = 1) -> EnergyStore:
    """Add ``rate * dt`` units of charge, clamped at capacity."""
    if store.is_dead:
        raise DeadAgentError("recharge on a dead agent")
    if rate < 0:
        raise ValueError(f"recharge rate must be >= 0, got {rate}")
    if dt < 0:
        raise ValueError(f"recharge dt must be >= 0, got {dt}")
    requested = rate * dt
    new_charge = min(store.capacity, store.charge + requested)
    applied = new_charge - store.charge
    ledger = replace(
        store.ledger,
        total_recharged=store.ledger.total_recharged + applied,
        recharge_clamped=store.ledger.recharge_clamped + (requested - applied),
    )
    return replace(store, charge=new_charge, ledger=ledger)


def absorb_percepts(store: EnergyStore, count: int) -> EnergyStore:
    """Count ``count`` absorbed percept events in the ledger."""
    if count < 0:
        raise ValueError(f"percept count must be >= 0, got {count}")
    if count == 0:
        return store
    return replace(store, ledger=replace(store.ledger, info_inflow=store.ledger.info_inflow + count))


def gain(store: EnergyStore) -> float:
    """Amplifier gain in [0, 1]: 0 at empty, 1 at full, monotone in charge.

    Piecewise linear through the optional knee; with no knee the curve
    is the charge fraction itself.
    """
    f = store.fraction
    if store.gain_knee is None:
        return f
    kx, ky = store.gain_knee
    if f <= kx:
        return ky * (f / kx)
    return ky + (1.0 - ky) * (f - kx) / (1.0 - kx)


def vital_events(
    before: EnergyStore,
    after: EnergyStore,
    tick: int,
    *,
    feeding_failed: bool = False,
) -> list[VitalEvent]:
    """Synthesize the vital events implied by one tick's charge change.

    Downward crossings of the low and critical levels emit PowerLow and
    PowerCritical; upward crossings are silent (hysteresis).  Reaching
    zero emits Died; reaching capacity from below emits Recharged.
    ``feeding_failed`` marks a feeding cycle that ended in a lost
    signal/track exit this tick; while below the low level that failure
    emits PowerLower.
    """
    if before.capacity != after.capacity or \
            before.low_threshold != after.low_threshold or \
            before.critical_threshold != after.critical_threshold:
        raise ValueError("vital_events requires stores with shared capacity and thresholds")

    events: list[VitalEvent] = []
    low, critical = before.low_level, before.critical_level
    if before.charge >= low and after.charge < low:
        events.append(VitalEvent(VitalKind.POWER_LOW, tick))
    if feeding_failed and after.charge < low:
        events.append(VitalEvent(VitalKind.POWER_LOWER, tick))
    if before.charge >= critical and after.charge < critical:
        events.append(VitalEvent(VitalKind.POWER_CRITICAL, tick))
    if before.charge > 0.0 and after.charge == 0.0:
        events.append(VitalEvent(VitalKind.DIED, tick))
    if before.charge < before.capacity and after.charge == after.capacity:
        events.append(VitalEvent(VitalKind.RECHARGED, tick))
    return events
