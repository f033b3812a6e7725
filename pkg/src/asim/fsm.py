"""Hierarchical run-to-completion state machine engine and the feeding chart.

Machines are immutable definitions validated at build time; each agent
runs its own MachineInstance.  Dispatch processes one event fully —
including chained completion transitions, decision junctions, and exit
point continuations — before returning, so the configuration is always
a valid root-to-leaf path between events.

Decision junctions are transitions that consult a weight table: the
engine asks the agent's hooks to decide, which invokes the decision
module and records the trace.  Guards and effects are small string
forms resolved by the engine:

    guards:   ``failed:<path>``  ``not_failed:<path>``
    effects:  ``succeed:<path>`` ``fail:<path>``  ``note:<name>``

``fail:<path>`` both records the failure through the hooks and marks
the path failed for the current visit to the enclosing composite, which
is what lets a chart fall back to the alternative path and exit only
when every path has failed.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

from . import decision
from .errors import DeadAgentError, MachineDefinitionError
from .rng import Stream

log = logging.getLogger(__name__)

#: Trigger of transitions taken as soon as their source state is entered.
COMPLETION = "__completion__"

ROOT = "root"

_GUARD_KINDS = ("failed", "not_failed")
_EFFECT_KINDS = ("succeed", "fail", "note")

_MAX_CHAIN = 64


@dataclass(frozen=True, slots=True)
class Transition:
    source: str
    target: str | None = None
    trigger: str = COMPLETION
    guard: str | None = None
    effect: str | None = None
    decision: str | None = None
    targets_by_path: Mapping[str, str] | None = None


@dataclass(frozen=True, slots=True)
class CompositeInfo:
    initial: str
    exits: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class StateDef:
    name: str
    parent: str | None = None
    composite: CompositeInfo | None = None
    timer: str | None = None


@dataclass(frozen=True, slots=True)
class StateMachine:
    name: str
    initial: str
    states: Mapping[str, StateDef]
    transitions: tuple[Transition, ...]
    timers: Mapping[str, int]

    def __post_init__(self):
        validate_machine(self)

    @property
    def exit_points(self) -> dict[str, str]:
        """Exit point name -> owning composite."""
        owners: dict[str, str] = {}
        for s in self.states.values():
            if s.composite:
                for e in s.composite.exits:
                    owners[e] = s.name
        return owners


def validate_machine(m: StateMachine) -> None:
    def fail(msg: str):
        raise MachineDefinitionError(f"machine {m.name!r}: {msg}")

    if m.initial not in m.states:
        fail(f"initial state {m.initial!r} does not exist")
    if m.states[m.initial].parent is not None:
        fail(f"initial state {m.initial!r} must be top-level")

    exit_owner: dict[str, str] = {}
    for s in m.states.values():
        if s.parent is not None:
            parent = m.states.get(s.parent)
            if parent is None or parent.composite is None:
                fail(f"state {s.name!r} claims composite parent {s.parent!r}")
        if s.composite:
            child = m.states.get(s.composite.initial)
            if child is None or child.parent != s.name:
                fail(f"composite {s.name!r} needs its initial {s.composite.initial!r} as a child")
            for e in s.composite.exits:
                if e in exit_owner or e in m.states:
                    fail(f"exit point {e!r} must belong to exactly one composite")
                exit_owner[e] = s.name
        if s.timer is not None and s.timer not in m.timers:
            fail(f"state {s.name!r} arms unknown timer {s.timer!r}")

    continuations: dict[str, int] = {}
    for t in m.transitions:
        if t.source not in m.states and t.source not in exit_owner:
            fail(f"transition from nonexistent state {t.source!r}")
        if t.source in exit_owner:
            continuations[t.source] = continuations.get(t.source, 0) + 1
        if t.decision is not None:
            if t.target is not None:
                fail(f"decision transition from {t.source!r} must not name a single target")
            if not t.targets_by_path or len(t.targets_by_path) < 2:
                fail(f"decision transition from {t.source!r} needs at least 2 candidate targets")
            targets: Sequence[str] = tuple(t.targets_by_path.values())
        else:
            if t.target is None:
                fail(f"transition from {t.source!r} has no target")
            if t.targets_by_path is not None:
                fail(f"transition from {t.source!r} maps paths without a decision point")
            targets = (t.target,)
        for target in targets:
            if target not in m.states and target not in exit_owner:
                fail(f"transition from {t.source!r} targets nonexistent {target!r}")
        if t.guard is not None:
            kind, sep, arg = t.guard.partition(":")
            if kind not in _GUARD_KINDS or not sep or not arg:
                fail(f"unknown guard form {t.guard!r}")
        if t.effect is not None:
            kind, sep, arg = t.effect.partition(":")
            if kind not in _EFFECT_KINDS or not sep or not arg:
                fail(f"unknown effect form {t.effect!r}")
    for e in exit_owner:
        if continuations.get(e, 0) != 1:
            fail(f"exit point {e!r} needs exactly one continuation transition")


class AgentHooks(Protocol):
    """What the engine needs from the agent driving an instance."""

    @property
    def is_dead(self) -> bool: ...

    def decide(self, decision_id: str, paths: Sequence[str]) -> str: ...

    def on_success(self, path: str) -> None: ...

    def on_failure(self, path: str) -> None: ...

    def on_note(self, note: str) -> None: ...


class TableHooks:
    """Standard hooks: a weight table, a random stream, and trace logs."""

    def __init__(self, table: decision.WeightTable, stream: Stream):
        self.table = table
        self.stream = stream
        self.traces: list[decision.DecisionTrace] = []
        self.notes: list[str] = []
        self.is_dead = False

    def decide(self, decision_id: str, paths: Sequence[str]) -> str:
        trace = decision.choose(self.table, self.stream)
        self.traces.append(trace)
        return trace.chosen

    def on_success(self, path: str) -> None:
        self.table = decision.record_success(self.table, path)

    def on_failure(self, path: str) -> None:
        self.table = decision.record_failure(self.table, path)

    def on_note(self, note: str) -> None:
        self.notes.append(note)


@dataclass(slots=True)
class FiredRecord:
    clock: int
    source: str
    trigger: str
    target: str


@dataclass(slots=True)
class MachineInstance:
    """Runtime configuration of one machine for one agent."""

    machine: StateMachine
    configuration: list[str]
    queue: deque[str] = field(default_factory=deque)
    deadlines: dict[str, int] = field(default_factory=dict)
    clock: int = 0
    failed: dict[str, set[str]] = field(default_factory=dict)
    history: deque[FiredRecord] = field(default_factory=lambda: deque(maxlen=256))


def new_instance(machine: StateMachine) -> MachineInstance:
    return MachineInstance(machine=machine, configuration=[ROOT, machine.initial])


def active_path(instance: MachineInstance) -> tuple[str, ...]:
    """Current configuration, root to leaf, without touching the instance."""
    return tuple(instance.configuration)


def leaf_state(instance: MachineInstance) -> str:
    return instance.configuration[-1]


def post(instance: MachineInstance, event: str) -> None:
    instance.queue.append(event)


def _path_to(machine: StateMachine, state: str) -> list[str]:
    chain = [state]
    parent = machine.states[state].parent
    while parent is not None:
        chain.append(parent)
        parent = machine.states[parent].parent
    chain.append(ROOT)
    chain.reverse()
    return chain


def _assert_valid_configuration(instance: MachineInstance) -> None:
    path = instance.configuration
    assert path and path[0] == ROOT, f"configuration must start at root: {path}"
    machine = instance.machine
    for i, name in enumerate(path[1:], start=1):
        s = machine.states[name]
        expected_parent = None if i == 1 else path[i - 1]
        assert s.parent == expected_parent, f"broken configuration path: {path}"


def _guard_ok(instance: MachineInstance, t: Transition) -> bool:
    if t.guard is None:
        return True
    kind, _, arg = t.guard.partition(":")
    src = instance.machine.states.get(t.source)
    owner = src.parent if src else None
    failed = instance.failed.get(owner or ROOT, set())
    if kind == "failed":
        return arg in failed
    return arg not in failed


def _find_enabled(instance: MachineInstance, trigger: str) -> Transition | None:
    for state in reversed(instance.configuration[1:]):
        for t in instance.machine.transitions:
            if t.source == state and t.trigger == trigger and _guard_ok(instance, t):
                return t
    return None


def _run_effect(instance: MachineInstance, t: Transition, hooks: AgentHooks) -> None:
    if t.effect is None:
        return
    kind, _, arg = t.effect.partition(":")
    if kind == "succeed":
        hooks.on_success(arg)
    elif kind == "fail":
        src = instance.machine.states.get(t.source)
        owner = src.parent if src else None
        instance.failed.setdefault(owner or ROOT, set()).add(arg)
        hooks.on_failure(arg)
    else:
        hooks.on_note(arg)


def _disarm(instance: MachineInstance, state: str) -> None:
    timer = instance.machine.states[state].timer
    if timer is not None:
        instance.deadlines.pop(timer, None)


def _enter(instance: MachineInstance, target: str) -> None:
    machine = instance.machine
    instance.configuration = _path_to(machine, target)
    s = machine.states[target]
    if s.timer is not None:
        instance.deadlines[s.timer] = instance.clock + machine.timers[s.timer]
    if s.composite is not None:
        instance.failed[target] = set()
        instance.configuration.append(s.composite.initial)
        child = machine.states[s.composite.initial]
        if child.timer is not None:
            instance.deadlines[child.timer] = instance.clock + machine.timers[child.timer]


def _fire(instance: MachineInstance, t: Transition, hooks: AgentHooks,
          fired: list[Transition]) -> None:
    if len(fired) >= _MAX_CHAIN:
        raise MachineDefinitionError(
            f"machine {instance.machine.name!r}: completion chain exceeded {_MAX_CHAIN} steps")
    machine = instance.machine
    fired.append(t)

    exit_points = machine.exit_points
    if t.source in exit_points:
        source_depth = len(_path_to(machine, exit_points[t.source]))
    else:
        source_depth = len(_path_to(machine, t.source))
    for state in instance.configuration[source_depth - 1:][::-1]:
        _disarm(instance, state)

    _run_effect(instance, t, hooks)

    if t.decision is not None:
        assert t.targets_by_path is not None
        chosen = hooks.decide(t.decision, list(t.targets_by_path))
        if chosen not in t.targets_by_path:
            raise MachineDefinitionError(
                f"decision {t.decision!r} chose {chosen!r}, not a mapped path")
        target = t.targets_by_path[chosen]
    else:
        assert t.target is not None
        target = t.target

    instance.history.append(FiredRecord(instance.clock, t.source, t.trigger, target))

    if target in exit_points:
        owner = exit_points[target]
        # Leaving the composite entirely: drop to the owner's parent level.
        owner_path = _path_to(machine, owner)
        for state in instance.configuration[len(owner_path) - 1:][::-1]:
            _disarm(instance, state)
        instance.configuration = owner_path[:-1]
        continuation = next(
            tr for tr in machine.transitions if tr.source == target)
        _fire(instance, continuation, hooks, fired)
        return

    _enter(instance, target)


def dispatch(instance: MachineInstance, event: str, hooks: AgentHooks) -> list[Transition]:
    """Process one event to quiescence; returns the transitions fired in order.

    Events no state currently handles are tolerated no-ops: a live world
    produces more percepts than any chart consumes.
    """
    if hooks.is_dead:
        raise DeadAgentError("event dispatched to a dead agent")
    fired: list[Transition] = []
    t = _find_enabled(instance, event)
    if t is None:
        log.debug("machine %s ignores event %r in %s",
                  instance.machine.name, event, leaf_state(instance))
        return fired
    _fire(instance, t, hooks, fired)
    while (t := _find_enabled(instance, COMPLETION)) is not None:
        _fire(instance, t, hooks, fired)
    _assert_valid_configuration(instance)
    return fired


def drain_queue(instance: MachineInstance, hooks: AgentHooks) -> list[Transition]:
    """Dispatch every queued event, one at a time, to quiescence."""
    fired: list[Transition] = []
    while instance.queue:
        fired.extend(dispatch(instance, instance.queue.popleft(), hooks))
    return fired


def tick_timers(instance: MachineInstance, now: int) -> list[str]:
    """Advance the clock; fire and disarm every timer due at or before ``now``.

    Expiry events are queued in deadline order, ties broken by timer
    name, and also returned.
    """
    if now < instance.clock:
        raise ValueError(f"clock regression: {now} < {instance.clock}")
    instance.clock = now
    due = sorted(
        (deadline, name) for name, deadline in instance.deadlines.items() if deadline <= now)
    events = []
    for _, name in due:
        del instance.deadlines[name]
        event = f"{name}_expired"
        instance.queue.append(event)
        events.append(event)
    return events


# --- the feeding chart --------------------------------------------------

FCS = "find_charging_station"
FCS_INITIAL = f"{FCS}.initial"

#: Path ids of the feeding decision, in table order.
FEEDING_PATHS = ("signal", "track")

EVENTS = ("power_low", "signal_found", "signal_lost",
          "track_found", "track_lost", "engage", "waitTimer_expired")


def build_feeding_machine(wait_timer: int = 50) -> StateMachine:
    """The power-seeking chart.

    A low battery starts the hunt: locate a food source, then enter the
    nested charging-station machine, where a weighted decision picks
    whether to pursue the beacon or the guide track.  A successful
    pursuit exits at ``located`` and engages the charger; the wait timer
    ends the meal.  A pursuit that loses its cue falls back to the
    alternative path, and only when every path has failed does the
    machine exit at ``lost_signal_track``, noting the deeper power
    deficit and resuming the hunt.  The chart also restarts from its
    final state on the next low-power notification, so feeding recurs
    for as long as the agent lives.  (The charger state doubles as the
    feeding state; one state, two readings.)
    """
    states = {
        "initial": StateDef("initial"),
        "locate_food": StateDef("locate_food"),
        FCS: StateDef(FCS, composite=CompositeInfo(
            initial=FCS_INITIAL, exits=("located", "lost_signal_track"))),
        FCS_INITIAL: StateDef(FCS_INITIAL, parent=FCS),
        "follow_ir_signal": StateDef("follow_ir_signal", parent=FCS),
        "follow_track_path": StateDef("follow_track_path", parent=FCS),
        "recharge": StateDef("recharge", timer="waitTimer"),
        "final": StateDef("final"),
    }
    transitions = (
        Transition("initial", "locate_food", trigger="power_low"),
        Transition("locate_food", FCS, trigger="signal_found"),
        Transition("locate_food", FCS, trigger="track_found"),
        Transition(FCS_INITIAL, decision="feeding", targets_by_path={
            "signal": "follow_ir_signal", "track": "follow_track_path"}),
        Transition("follow_ir_signal", "located", trigger="signal_found",
                   effect="succeed:signal"),
        Transition("follow_ir_signal", "follow_track_path", trigger="signal_lost",
                   guard="not_failed:track", effect="fail:signal"),
        Transition("follow_ir_signal", "lost_signal_track", trigger="signal_lost",
                   guard="failed:track", effect="fail:signal"),
        Transition("follow_track_path", "located", trigger="track_found",
                   effect="succeed:track"),
        Transition("follow_track_path", "follow_ir_signal", trigger="track_lost",
                   guard="not_failed:signal", effect="fail:track"),
        Transition("follow_track_path", "lost_signal_track", trigger="track_lost",
                   guard="failed:signal", effect="fail:track"),
        Transition("located", "recharge", effect="note:engage"),
        Transition("lost_signal_track", "locate_food", effect="note:power_lower"),
        Transition("recharge", "final", trigger="waitTimer_expired"),
        Transition("final", "locate_food", trigger="power_low"),
    )
    return StateMachine(
        name="feeding",
        initial="initial",
        states=states,
        transitions=transitions,
        timers={"waitTimer": wait_timer},
    )


# --- declarative text form ----------------------------------------------

def machine_text(machine: StateMachine) -> str:
    """Serialize a machine to the declarative key = value form."""
    lines = [f"machine.name = {machine.name}", f"machine.initial = {machine.initial}"]
    for name, duration in machine.timers.items():
        lines.append(f"timer.{name} = {duration}")
    for s in machine.states.values():
        attrs = []
        if s.composite:
            attrs.append(f"composite initial={s.composite.initial}")
            attrs.append("exits=" + "|".join(s.composite.exits))
        else:
            attrs.append("simple")
        if s.parent:
            attrs.append(f"in={s.parent}")
        if s.timer:
            attrs.append(f"timer={s.timer}")
        lines.append(f"state.{s.name} = " + " ".join(attrs))
    for i, t in enumerate(machine.transitions):
        if t.decision is not None:
            assert t.targets_by_path is not None
            rhs = f"{t.source} -> choose {t.decision} " + " ".join(
                f"{p}={target}" for p, target in t.targets_by_path.items())
        else:
            rhs = f"{t.source} -> {t.target}"
        if t.trigger != COMPLETION:
            rhs += f" on {t.trigger}"
        if t.guard:
            rhs += f" if {t.guard}"
        if t.effect:
            rhs += f" do {t.effect}"
        lines.append(f"transition.{i} = {rhs}")
    return "\n".join(lines) + "\n"


def _parse_transition(rhs: str, where: str) -> Transition:
    if "->" not in rhs:
        raise MachineDefinitionError(f"{where}: expected 'source -> target', got {rhs!r}")
    source, rest = (part.strip() for part in rhs.split("->", 1))
    words = rest.split()
    if not words:
        raise MachineDefinitionError(f"{where}: missing target")
    trigger, guard, effect = COMPLETION, None, None
    decision_id = None
    targets_by_path: dict[str, str] | None = None
    if words[0] == "choose":
        if len(words) < 2:
            raise MachineDefinitionError(f"{where}: choose needs a decision id")
        decision_id = words[1]
        targets_by_path = {}
        i = 2
        while i < len(words) and "=" in words[i]:
            pid, _, target = words[i].partition("=")
            targets_by_path[pid] = target
            i += 1
        target = None
    else:
        target = words[0]
        i = 1
    while i < len(words):
        key = words[i]
        if key not in ("on", "if", "do") or i + 1 >= len(words):
            raise MachineDefinitionError(f"{where}: unexpected token {key!r}")
        value = words[i + 1]
        if key == "on":
            trigger = value
        elif key == "if":
            guard = value
        else:
            effect = value
        i += 2
    return Transition(source=source, target=target, trigger=trigger, guard=guard,
                      effect=effect, decision=decision_id, targets_by_path=targets_by_path)


def load_machine(text: str) -> StateMachine:
    """Parse a machine from the declarative key = value form."""
    name, initial = "machine", None
    timers: dict[str, int] = {}
    states: dict[str, StateDef] = {}
    transitions: list[tuple[int, Transition]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        where = f"line {lineno}"
        if "=" not in line:
            raise MachineDefinitionError(f"{where}: expected 'key = value', got {line!r}")
        key, _, value = (part.strip() for part in line.partition("="))
        if key == "machine.name":
            name = value
        elif key == "machine.initial":
            initial = value
        elif key.startswith("timer."):
            try:
                timers[key[len("timer."):]] = int(value)
            except ValueError:
                raise MachineDefinitionError(f"{where}: timer duration must be an integer") from None
        elif key.startswith("state."):
            state_name = key[len("state."):]
            words = value.split()
            if not words or words[0] not in ("simple", "composite"):
                raise MachineDefinitionError(f"{where}: state must be 'simple' or 'composite'")
            attrs = dict(w.partition("=")[::2] for w in words[1:])
            composite = None
            if words[0] == "composite":
                if "initial" not in attrs or "exits" not in attrs:
                    raise MachineDefinitionError(f"{where}: composite needs initial= and exits=")
                composite = CompositeInfo(
                    initial=attrs["initial"], exits=tuple(attrs["exits"].split("|")))
            states[state_name] = StateDef(
                name=state_name,
                parent=attrs.get("in"),
                composite=composite,
                timer=attrs.get("timer"),
            )
        elif key.startswith("transition."):
            try:
                order = int(key[len("transition."):])
            except ValueError:
                raise MachineDefinitionError(f"{where}: transition index must be an integer") from None
            transitions.append((order, _parse_transition(value, where)))
        else:
            raise MachineDefinitionError(f"{where}: unknown key {key!r}")
    if initial is None:
        raise MachineDefinitionError("missing machine.initial")
    transitions.sort(key=lambda item: item[0])
    return StateMachine(
        name=name,
        initial=initial,
        states=states,
        transitions=tuple(t for _, t in transitions),
        timers=timers,
    )
