"""2D arena: agents, lights, charging stations, sensing, and emergence metrics.

Kinematics are deliberately minimal: unicycle agents (heading plus
forward speed) with a turn-rate limit, clamp-and-turn boundary
handling, and effective speed scaled by the vitality gain.  Steering
while hunting mixes wander jitter, lamp attraction, short-range
repulsion, and gain-gated light avoidance; pursuit states steer
straight at their cue.  Everything that varies is drawn from named
seeded streams, so a (layout, seed) pair replays byte-identically.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from . import fsm, vitality
from .decision import WeightTable, init_table
from .errors import ConfigurationError, DeadAgentError, StateError
from .fsm import MachineInstance, TableHooks
from .rng import StreamHub
from .vitality import EnergyStore

Vec = tuple[float, float]

MOVE = "move"

PERCEPT_IR = "ir_signal"
PERCEPT_TRACK = "track_mark"
PERCEPT_LIGHT = "light"
PERCEPT_LAMP = "agent_lamp"

CLASSIFICATIONS = ("android", "robot", "automaton", "anima")


def _dist(a: Vec, b: Vec) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _bearing(src: Vec, dst: Vec) -> float:
    return math.atan2(dst[1] - src[1], dst[0] - src[0])


def _wrap_angle(a: float) -> float:
    while a > math.pi:
        a -= 2.0 * math.pi
    while a < -math.pi:
        a += 2.0 * math.pi
    return a


@dataclass(frozen=True, slots=True)
class Percept:
    kind: str
    source: str
    strength: float
    bearing: float
    distance: float


@dataclass(frozen=True, slots=True)
class Station:
    """A charging source offering both an IR beacon and a guide track."""

    position: Vec
    ir_range: float
    ir_reliability: float
    track: tuple[Vec, ...]
    track_reliability: float

    def __post_init__(self):
        if self.ir_range <= 0:
            raise ConfigurationError(f"ir_range must be > 0, got {self.ir_range}")
        for name, p in (("ir_reliability", self.ir_reliability),
                        ("track_reliability", self.track_reliability)):
            if not 0.0 <= p <= 1.0:
                raise ConfigurationError(f"{name} must be in [0, 1], got {p}")
        if len(self.track) < 2:
            raise ConfigurationError("track needs at least 2 vertices")
        if self.track[-1] != self.position:
            raise ConfigurationError("track must end at the station position")


@dataclass(frozen=True, slots=True)
class Light:
    position: Vec
    intensity: float


@dataclass(slots=True)
class Bounds:
    """Rectangular arena or circular corral, centered on the origin."""

    kind: str
    width: float = 0.0
    height: float = 0.0
    radius: float = 0.0

    @classmethod
    def rect(cls, width: float, height: float) -> "Bounds":
        if width <= 0 or height <= 0:
            raise ConfigurationError("rect bounds need positive width and height")
        return cls(kind="rect", width=width, height=height)

    @classmethod
    def circle(cls, radius: float) -> "Bounds":
        if radius <= 0:
            raise ConfigurationError("corral radius must be > 0")
        return cls(kind="circle", radius=radius)

    def contains(self, p: Vec) -> bool:
        if self.kind == "rect":
            return abs(p[0]) <= self.width / 2 and abs(p[1]) <= self.height / 2
        return math.hypot(p[0], p[1]) <= self.radius

    def clamp(self, p: Vec) -> tuple[Vec, Vec | None]:
        """Clamp a point inside; returns (point, inward normal) when clamped."""
        if self.kind == "rect":
            hw, hh = self.width / 2, self.height / 2
            x = min(hw, max(-hw, p[0]))
            y = min(hh, max(-hh, p[1]))
            if (x, y) == p:
                return p, None
            nx = -1.0 if x >= hw else (1.0 if x <= -hw else 0.0)
            ny = -1.0 if y >= hh else (1.0 if y <= -hh else 0.0)
            norm = math.hypot(nx, ny) or 1.0
            return (x, y), (nx / norm, ny / norm)
        r = math.hypot(p[0], p[1])
        if r <= self.radius or r == 0.0:
            return p, None
        scale = self.radius / r
        clamped = (p[0] * scale, p[1] * scale)
        return clamped, (-clamped[0] / self.radius, -clamped[1] / self.radius)


@dataclass(frozen=True, slots=True)
class WorldParams:
    """Behavioral knobs shared by every agent in a world."""

    pattern_n_gate: float = 0.3
    attraction: bool = True
    attraction_weight: float = 1.0
    repulsion_weight: float = 3.0
    collision_radius: float = 2.0
    light_weight: float = 1.0
    arrival_radius: float = 1.5
    turn_rate: float = 0.5
    wander_turn: float = 0.25
    recharge_rate: float = 1.0
    death_awareness: bool = True
    awareness_boost: float = 2.0
    pursuit_cone: float = 0.35
    cluster_threshold: float = 5.0


@dataclass(slots=True)
class AgentBody:
    id: int
    position: Vec
    heading: float
    base_speed: float
    sensor_range: float
    sensitivity: float
    store: EnergyStore
    machine: MachineInstance
    hooks: TableHooks
    classification: str = "anima"
    # pursuit scratch state
    target_station: int | None = None
    track_progress: int = 0
    last_leaf: str = ""

    def __post_init__(self):
        if self.classification not in CLASSIFICATIONS:
            raise ConfigurationError(f"unknown classification {self.classification!r}")
        if not 0.0 <= self.sensitivity <= 1.0:
            raise ConfigurationError(f"sensitivity must be in [0, 1], got {self.sensitivity}")

    @property
    def weights(self) -> WeightTable:
        return self.hooks.table

    @property
    def alive(self) -> bool:
        return not self.store.is_dead

    @property
    def effective_speed(self) -> float:
        return self.base_speed * vitality.gain(self.store)


def make_agent(agent_id: int, position: Vec, heading: float, store: EnergyStore,
               hub: StreamHub, *, base_speed: float = 1.0, sensor_range: float = 10.0,
               sensitivity: float = 1.0, machine: fsm.StateMachine | None = None,
               table: WeightTable | None = None,
               classification: str = "anima") -> AgentBody:
    machine = machine or fsm.build_feeding_machine()
    table = table or init_table(list(fsm.FEEDING_PATHS))
    hooks = TableHooks(table, hub.stream("decision", agent_id))
    return AgentBody(
        id=agent_id, position=position, heading=heading, base_speed=base_speed,
        sensor_range=sensor_range, sensitivity=sensitivity, store=store,
        machine=fsm.new_instance(machine), hooks=hooks, classification=classification)


@dataclass(slots=True)
class World:
    bounds: Bounds
    stations: list[Station]
    lights: list[Light]
    agents: list[AgentBody]
    hub: StreamHub
    params: WorldParams = field(default_factory=WorldParams)
    tick: int = 0
    pursuit_log: deque[dict[int, int]] = field(default_factory=lambda: deque(maxlen=4096))

    def agent(self, agent_id: int) -> AgentBody:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise StateError(f"no agent with id {agent_id}")

    def set_corral_radius(self, radius: float) -> None:
        """Shrink (or grow) a circular corral, clamping everyone inside."""
        self.bounds = Bounds.circle(radius)
        for a in self.agents:
            a.position, _ = self.bounds.clamp(a.position)


def sense(world: World, agent: AgentBody) -> list[Percept]:
    """Percepts for every source within the agent's effective sensing radius.

    Strengths decay with inverse distance.  Beacons additionally require
    the agent inside the station's own broadcast range.
    """
    if not agent.alive:
        raise DeadAgentError("sense on a dead agent")
    reach = agent.sensor_range * agent.sensitivity
    percepts: list[Percept] = []
    if reach <= 0:
        return percepts
    pos = agent.position
    for i, st in enumerate(world.stations):
        d = _dist(pos, st.position)
        if d <= reach and d <= st.ir_range:
            percepts.append(Percept(PERCEPT_IR, f"station:{i}", 1.0 / (1.0 + d),
                                    _bearing(pos, st.position), d))
        for j, v in enumerate(st.track):
            dv = _dist(pos, v)
            if dv <= reach:
                percepts.append(Percept(PERCEPT_TRACK, f"station:{i}.track:{j}",
                                        1.0 / (1.0 + dv), _bearing(pos, v), dv))
    for i, light in enumerate(world.lights):
        d = _dist(pos, light.position)
        if d <= reach:
            percepts.append(Percept(PERCEPT_LIGHT, f"light:{i}",
                                    light.intensity / (1.0 + d), _bearing(pos, light.position), d))
    for other in world.agents:
        if other.id == agent.id or not other.alive:
            continue
        d = _dist(pos, other.position)
        if d <= reach:
            percepts.append(Percept(PERCEPT_LAMP, f"agent:{other.id}",
                                    1.0 / (1.0 + d), _bearing(pos, other.position), d))
    return percepts


def attempt_acquisition(world: World, agent: AgentBody, station_index: int, mode: str) -> bool:
    """One Bernoulli acquisition attempt against the station's reliability."""
    st = world.stations[station_index]
    p = st.ir_reliability if mode == "signal" else st.track_reliability
    return world.hub.stream("acquire", agent.id).bernoulli(p)


def pattern_n_enabled(agent: AgentBody, params: WorldParams) -> bool:
    """Light avoidance is available only while gain exceeds the gate (strictly)."""
    if not agent.alive:
        return False
    return vitality.gain(agent.store) > params.pattern_n_gate


def _critical(agent: AgentBody) -> bool:
    return agent.store.charge < agent.store.critical_level


def _station_index(source: str) -> int:
    # source ids look like "station:3" or "station:3.track:1"
    return int(source.split(":", 2)[1].split(".", 1)[0])


def _nearest(percepts: list[Percept], kind: str) -> Percept | None:
    best: Percept | None = None
    for p in percepts:
        if p.kind == kind and (best is None or p.distance < best.distance):
            best = p
    return best


def _pursuit_events(world: World, agent: AgentBody, percepts: list[Percept]) -> None:
    """Turn this tick's percepts into chart stimuli for the agent's state."""
    leaf = fsm.leaf_state(agent.machine)
    if leaf in ("locate_food",):
        ir = _nearest(percepts, PERCEPT_IR)
        track = _nearest(percepts, PERCEPT_TRACK)
        cue = ir or track
        if cue is not None:
            agent.target_station = _station_index(cue.source)
            fsm.post(agent.machine, "signal_found" if cue.kind == PERCEPT_IR else "track_found")
    elif leaf == "follow_ir_signal":
        ir = _nearest(percepts, PERCEPT_IR)
        if ir is None:
            fsm.post(agent.machine, "signal_lost")
            return
        idx = _station_index(ir.source)
        agent.target_station = idx
        if ir.distance <= world.params.arrival_radius:
            ok = attempt_acquisition(world, agent, idx, "signal")
            fsm.post(agent.machine, "signal_found" if ok else "signal_lost")
    elif leaf == "follow_track_path":
        track = _nearest(percepts, PERCEPT_TRACK)
        if track is None:
            fsm.post(agent.machine, "track_lost")
            return
        idx = agent.target_station if agent.target_station is not None else _station_index(track.source)
        st = world.stations[idx]
        if agent.track_progress >= len(st.track):
            agent.track_progress = len(st.track) - 1
        target = st.track[agent.track_progress]
        if _dist(agent.position, target) <= world.params.arrival_radius:
            if agent.track_progress + 1 < len(st.track):
                agent.track_progress += 1
            else:
                ok = attempt_acquisition(world, agent, idx, "track")
                fsm.post(agent.machine, "track_found" if ok else "track_lost")


def _pursuit_heading(world: World, agent: AgentBody) -> float | None:
    leaf = fsm.leaf_state(agent.machine)
    if leaf == "follow_ir_signal" and agent.target_station is not None:
        return _bearing(agent.position, world.stations[agent.target_station].position)
    if leaf == "follow_track_path" and agent.target_station is not None:
        st = world.stations[agent.target_station]
        idx = min(agent.track_progress, len(st.track) - 1)
        return _bearing(agent.position, st.track[idx])
    return None


def _wander_steering(world: World, agent: AgentBody, percepts: list[Percept]) -> float:
    """Desired heading while not pursuing: wander plus social and light forces."""
    params = world.params
    jitter = world.hub.stream("wander", agent.id).uniform_in(-params.wander_turn, params.wander_turn)
    vx = math.cos(agent.heading + jitter)
    vy = math.sin(agent.heading + jitter)
    for p in percepts:
        if p.kind == PERCEPT_LAMP:
            w = 0.0
            if params.attraction:
                w += params.attraction_weight * p.strength
            if p.distance < params.collision_radius:
                w -= params.repulsion_weight * (1.0 - p.distance / params.collision_radius)
            vx += w * math.cos(p.bearing)
            vy += w * math.sin(p.bearing)
        elif p.kind == PERCEPT_LIGHT:
            if pattern_n_enabled(agent, params):
                w = -params.light_weight * p.strength
            elif params.death_awareness and _critical(agent):
                w = params.awareness_boost * params.light_weight * p.strength
            else:
                w = 0.0
            vx += w * math.cos(p.bearing)
            vy += w * math.sin(p.bearing)
    if vx == 0.0 and vy == 0.0:
        return agent.heading
    return math.atan2(vy, vx)


def _apply_motion(world: World, agent: AgentBody, percepts: list[Percept]) -> bool:
    leaf = fsm.leaf_state(agent.machine)
    if leaf == "recharge":
        return False
    desired = _pursuit_heading(world, agent)
    if desired is None:
        desired = _wander_steering(world, agent, percepts)
    turn = _wrap_angle(desired - agent.heading)
    limit = world.params.turn_rate
    agent.heading = _wrap_angle(agent.heading + max(-limit, min(limit, turn)))
    speed = agent.effective_speed
    if speed <= 0.0:
        return False
    moved = (agent.position[0] + speed * math.cos(agent.heading),
             agent.position[1] + speed * math.sin(agent.heading))
    clamped, normal = world.bounds.clamp(moved)
    agent.position = clamped
    if normal is not None:
        # clamp-and-turn: reflect the heading off the boundary
        nx, ny = normal
        hx, hy = math.cos(agent.heading), math.sin(agent.heading)
        dot = hx * nx + hy * ny
        agent.heading = math.atan2(hy - 2.0 * dot * ny, hx - 2.0 * dot * nx)
    return True


def _record_pursuits(world: World) -> None:
    record: dict[int, int] = {}
    for a in world.agents:
        if not a.alive:
            continue
        reach = a.sensor_range * a.sensitivity
        best_id, best_diff = None, None
        for b in world.agents:
            if b.id == a.id or not b.alive:
                continue
            d = _dist(a.position, b.position)
            if d > reach:
                continue
            diff = abs(_wrap_angle(_bearing(a.position, b.position) - a.heading))
            if best_diff is None or diff < best_diff:
                best_id, best_diff = b.id, diff
        if best_id is not None and best_diff is not None and best_diff <= world.params.pursuit_cone:
            record[a.id] = best_id
    world.pursuit_log.append(record)


def step(world: World) -> list[tuple[int, object]]:
    """Advance the world by one tick; returns (agent id, event) records.

    Events are vital events, decision traces, and fired-transition
    records, in the per-agent order they occurred.  The world object is
    updated in place.  Dead agents are inert: they do not sense, move,
    decide, or drain.
    """
    events: list[tuple[int, object]] = []
    for agent in world.agents:
        if not agent.alive:
            continue
        before = agent.store
        leaf = fsm.leaf_state(agent.machine)
        if leaf != agent.last_leaf:
            if leaf == "follow_track_path":
                agent.track_progress = 0
            agent.last_leaf = leaf

        percepts = sense(world, agent)
        agent.store = vitality.absorb_percepts(agent.store, len(percepts))
        _pursuit_events(world, agent, percepts)
        fsm.tick_timers(agent.machine, world.tick)

        n_notes = len(agent.hooks.notes)
        n_traces = len(agent.hooks.traces)
        fired = fsm.drain_queue(agent.machine, agent.hooks)
        for trace in agent.hooks.traces[n_traces:]:
            events.append((agent.id, trace))
        for t in fired:
            events.append((agent.id, fsm.FiredRecord(world.tick, t.source, t.trigger,
                                                     t.target or "?")))
        feeding_failed = "power_lower" in agent.hooks.notes[n_notes:]

        moved = _apply_motion(world, agent, percepts)
        agent.store = vitality.drain(agent.store, MOVE if moved else vitality.IDLE)
        if not agent.store.is_dead and fsm.leaf_state(agent.machine) == "recharge":
            near = min((_dist(agent.position, st.position) for st in world.stations), default=None)
            if near is not None and near <= world.params.arrival_radius:
                agent.store = vitality.recharge(agent.store, world.params.recharge_rate, 1)

        for ev in vitality.vital_events(before, agent.store, world.tick,
                                        feeding_failed=feeding_failed):
            events.append((agent.id, ev))
        agent.hooks.is_dead = agent.store.is_dead
    _record_pursuits(world)
    world.tick += 1
    return events


# --- emergence observations ----------------------------------------------

class UnionFind:
    """Minimal disjoint-set over integer ids, path compression only."""

    def __init__(self, ids):
        self.parent = {i: i for i in ids}

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def components(self) -> int:
        return len({self.find(i) for i in self.parent})


@dataclass(frozen=True, slots=True)
class AggregationMetrics:
    mean_nearest_neighbor: float
    clusters: int
    flock: bool


def aggregation_metrics(world: World, threshold: float | None = None) -> AggregationMetrics:
    """Mean nearest-neighbor distance and threshold clustering over living agents."""
    agents = [a for a in world.agents if a.alive]
    if len(agents) < 2:
        raise StateError("aggregation metrics need at least 2 living agents")
    threshold = world.params.cluster_threshold if threshold is None else threshold
    uf = UnionFind([a.id for a in agents])
    nearest_total = 0.0
    for a in agents:
        nearest = math.inf
        for b in agents:
            if b.id == a.id:
                continue
            d = _dist(a.position, b.position)
            nearest = min(nearest, d)
            if d <= threshold:
                uf.union(a.id, b.id)
        nearest_total += nearest
    clusters = uf.components()
    return AggregationMetrics(nearest_total / len(agents), clusters, clusters == 1)


def leader_observation(world: World, window: int) -> int | None:
    """The agent most pursued by other agents' headings over the last window.

    Third-party observation only: pursuit is read off poses, never off
    an agent's internal state.  Ties and pursuit-free windows yield None.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    counts: dict[int, int] = {}
    log_slice = list(world.pursuit_log)[-window:]
    for record in log_slice:
        for target in record.values():
            counts[target] = counts.get(target, 0) + 1
    if not counts:
        return None
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
        return None
    return ranked[0][0]
