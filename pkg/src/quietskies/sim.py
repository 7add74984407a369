"""Discrete-time kinematic world: route following, altitude transitions,
takeoff/landing phases, neighbor queries, loss-of-separation detection.

Aircraft fly their corridor sequence at constant ground speed and change
altitude at a constant vertical rate. An initiated altitude change commits:
new vertical actions are ignored until the target level is reached. Vertical
takeoff/landing phases last a fixed duration at the vertiport, during which
the aircraft is excluded from LOS detection.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import noise
from .airspace import Scenario, corridor_intersections, route_corridors, zone_of

M_PER_FT = 0.3048

# action encoding shared with the policy head
DESCEND, MAINTAIN, ASCEND = 0, 1, 2
N_ACTIONS = 3


class MissingAction(Exception):
    """An enroute aircraft was not given an action this step."""


class UnknownAircraft(Exception):
    """An action referenced an aircraft id not present in the world."""


class Phase(Enum):
    PENDING = "pending"
    VERTICAL_TAKEOFF = "vertical_takeoff"
    ENROUTE = "enroute"
    VERTICAL_LANDING = "vertical_landing"
    DONE = "done"


@dataclass(frozen=True)
class SeparationConfig:
    d_los_m: float = 150.0
    d_comm_m: float = 2500.0

    def __post_init__(self):
        if not 0 < self.d_los_m < self.d_comm_m:
            raise ValueError(f"need 0 < d_los_m < d_comm_m, got {self.d_los_m}, {self.d_comm_m}")


@dataclass
class RouteGeometry:
    """Concatenated corridor polyline for one flight, with cumulative lengths."""

    corridor_ids: tuple[str, ...]
    points: np.ndarray  # (n+1, 2) waypoints in meters
    cum_m: tuple[float, ...]  # cumulative length after each corridor

    @property
    def length_m(self) -> float:
        return self.cum_m[-1]

    def position(self, along_m: float) -> np.ndarray:
        s = min(max(along_m, 0.0), self.length_m)
        k = min(bisect.bisect_right(self.cum_m, s), len(self.corridor_ids) - 1)
        s0 = self.cum_m[k - 1] if k > 0 else 0.0
        a, b = self.points[k], self.points[k + 1]
        seg = self.cum_m[k] - s0
        t = 0.0 if seg == 0.0 else (s - s0) / seg
        return a + t * (b - a)

    def corridor_at(self, along_m: float) -> str:
        s = min(max(along_m, 0.0), self.length_m)
        k = min(bisect.bisect_right(self.cum_m, s), len(self.corridor_ids) - 1)
        return self.corridor_ids[k]


@dataclass
class AircraftState:
    id: str
    origin: str
    destination: str
    takeoff_s: float
    route: RouteGeometry
    phase: Phase = Phase.PENDING
    phase_elapsed_s: float = 0.0
    along_m: float = 0.0
    altitude_ft: float = 0.0
    target_altitude_ft: float = 0.0
    last_action: int = MAINTAIN
    ascent_count: int = 0  # completed 500-ft climbs
    ascents_initiated: int = 0
    altitude_changes: int = 0  # completed level changes, up or down
    max_level_ft: float = 0.0
    ascent_initiated_this_step: bool = False

    @property
    def changing(self) -> bool:
        return self.altitude_ft != self.target_altitude_ft

    @property
    def enroute(self) -> bool:
        return self.phase is Phase.ENROUTE

    def position_m(self) -> np.ndarray:
        if self.phase in (Phase.PENDING, Phase.VERTICAL_TAKEOFF):
            return self.route.points[0]
        if self.phase in (Phase.VERTICAL_LANDING, Phase.DONE):
            return self.route.points[-1]
        return self.route.position(self.along_m)

    def current_corridor(self) -> str:
        return self.route.corridor_at(self.along_m)


@dataclass
class EnrouteSnapshot:
    """Positions of every enroute aircraft, rebuilt once per world mutation."""

    ids: list[str]
    index: dict[str, int]
    pos_m: np.ndarray  # (N, 2)
    alt_ft: np.ndarray  # (N,)
    corridors: list[str]


@dataclass
class WorldState:
    scenario: Scenario
    sep: SeparationConfig
    time_s: float
    aircraft: dict[str, AircraftState]
    accumulators: dict[str, noise.ZoneNoiseAccumulator]
    intersections: dict[str, frozenset[str]]
    los_active: set[tuple[str, str]] = field(default_factory=set)
    los_event_count: int = 0
    los_events: list[tuple[float, str, str]] = field(default_factory=list)
    step_count: int = 0
    _snap: EnrouteSnapshot | None = field(default=None, repr=False, compare=False)
    _snap_version: int = field(default=0, repr=False, compare=False)
    _snap_built_at: int = field(default=-1, repr=False, compare=False)

    @property
    def levels_ft(self) -> tuple[float, ...]:
        return self.scenario.network.altitude_levels_ft

    def enroute_ids(self) -> list[str]:
        return list(enroute_snapshot(self).ids)

    def all_done(self) -> bool:
        return all(a.phase is Phase.DONE for a in self.aircraft.values())


def enroute_snapshot(world: "WorldState") -> EnrouteSnapshot:
    if world._snap is not None and world._snap_built_at == world._snap_version:
        return world._snap
    flying = sorted(
        (a for a in world.aircraft.values() if a.enroute), key=lambda a: a.id
    )
    snap = EnrouteSnapshot(
        ids=[a.id for a in flying],
        index={a.id: k for k, a in enumerate(flying)},
        pos_m=(
            np.stack([a.position_m() for a in flying])
            if flying
            else np.zeros((0, 2))
        ),
        alt_ft=np.array([a.altitude_ft for a in flying]),
        corridors=[a.current_corridor() for a in flying],
    )
    world._snap = snap
    world._snap_built_at = world._snap_version
    return snap


def _build_route(scenario: Scenario, origin: str, destination: str) -> RouteGeometry:
    cids = scenario.network.od_pair(origin, destination).corridors
    net = scenario.network
    pts = [None] * (len(cids) + 1)
    here = origin
    pts[0] = np.array([net.vertiport(origin).x_m, net.vertiport(origin).y_m])
    cum: list[float] = []
    total = 0.0
    for k, cid in enumerate(cids):
        c = net.corridor(cid)
        nxt = c.b if here == c.a else c.a
        pts[k + 1] = np.array([net.vertiport(nxt).x_m, net.vertiport(nxt).y_m])
        total += float(np.hypot(*(pts[k + 1] - pts[k])))
        cum.append(total)
        here = nxt
    return RouteGeometry(cids, np.stack(pts), tuple(cum))


def reset(
    scenario: Scenario,
    seed: int | None = None,
    sep: SeparationConfig | None = None,
) -> WorldState:
    """Fresh world at t = 0 with every aircraft pending on the ground."""
    del seed  # kinematics are deterministic; the parameter fixes the interface
    world = WorldState(
        scenario=scenario,
        sep=sep or SeparationConfig(),
        time_s=0.0,
        aircraft={
            f.id: AircraftState(
                id=f.id,
                origin=f.origin,
                destination=f.destination,
                takeoff_s=f.takeoff_s,
                route=_build_route(scenario, f.origin, f.destination),
            )
            for f in scenario.flights
        },
        accumulators={
            z.id: noise.ZoneNoiseAccumulator(z.id, z.ambient_db) for z in scenario.zones
        },
        intersections=corridor_intersections(scenario.network),
    )
    return world


def _apply_action(ac: AircraftState, action: int, levels: tuple[float, ...]) -> None:
    ac.ascent_initiated_this_step = False
    ac.last_action = action
    if ac.changing:
        return  # committed to the current altitude change
    if action == MAINTAIN:
        return
    idx = levels.index(ac.altitude_ft) if ac.altitude_ft in levels else None
    if idx is None:  # between levels can only happen while changing
        return
    if action == ASCEND:
        if idx == len(levels) - 1:
            return  # clamped at the top level
        ac.target_altitude_ft = levels[idx + 1]
        ac.ascents_initiated += 1
        ac.ascent_initiated_this_step = True
    elif action == DESCEND:
        if idx == 0:
            return  # clamped at the bottom level
        ac.target_altitude_ft = levels[idx - 1]


def _advance_altitude(ac: AircraftState, rate_ftpm: float, dt: float) -> None:
    if not ac.changing:
        return
    max_delta = rate_ftpm * dt / 60.0
    delta = ac.target_altitude_ft - ac.altitude_ft
    if abs(delta) <= max_delta:  # final partial step clamps exactly at target
        climbed = delta > 0
        ac.altitude_ft = ac.target_altitude_ft
        ac.altitude_changes += 1
        if climbed:
            ac.ascent_count += 1
        ac.max_level_ft = max(ac.max_level_ft, ac.altitude_ft)
    else:
        ac.altitude_ft += math.copysign(max_delta, delta)


def step(world: WorldState, joint_actions: dict[str, int]) -> WorldState:
    """Advance the world by one timestep, applying per-aircraft actions.

    Every enroute aircraft must have an action. Mutates and returns the world.
    """
    sc = world.scenario
    dt = sc.sim.timestep_s
    levels = world.levels_ft
    for aid in joint_actions:
        if aid not in world.aircraft:
            raise UnknownAircraft(aid)
    for aid in world.enroute_ids():
        if aid not in joint_actions:
            raise MissingAction(aid)

    t0 = world.time_s
    for ac in world.aircraft.values():
        if ac.phase is Phase.PENDING and t0 >= ac.takeoff_s:
            ac.phase = Phase.VERTICAL_TAKEOFF
            ac.phase_elapsed_s = 0.0

        if ac.phase is Phase.VERTICAL_TAKEOFF:
            ac.phase_elapsed_s += dt
            frac = min(1.0, ac.phase_elapsed_s / sc.sim.vertical_phase_s)
            ac.altitude_ft = frac * 250.0  # hover leg altitude, for noise attribution
            if ac.phase_elapsed_s >= sc.sim.vertical_phase_s - 1e-9:
                ac.phase = Phase.ENROUTE
                ac.phase_elapsed_s = 0.0
                ac.along_m = 0.0
                ac.altitude_ft = levels[0]
                ac.target_altitude_ft = levels[0]
                ac.max_level_ft = levels[0]
        elif ac.phase is Phase.ENROUTE:
            _apply_action(ac, joint_actions[ac.id], levels)
            ac.along_m += sc.sim.ground_speed_mps * dt
            _advance_altitude(ac, sc.sim.vertical_rate_ftpm, dt)
            if ac.along_m >= ac.route.length_m:
                ac.along_m = ac.route.length_m
                ac.phase = Phase.VERTICAL_LANDING
                ac.phase_elapsed_s = 0.0
        elif ac.phase is Phase.VERTICAL_LANDING:
            ac.phase_elapsed_s += dt
            frac = min(1.0, ac.phase_elapsed_s / sc.sim.vertical_phase_s)
            ac.altitude_ft = (1.0 - frac) * 250.0
            if ac.phase_elapsed_s >= sc.sim.vertical_phase_s - 1e-9:
                ac.phase = Phase.DONE

    world._snap_version += 1  # states changed; invalidate cached positions
    _accumulate_noise(world, dt)

    current = detect_los(world)
    for pair in current - world.los_active:  # edge-triggered event counting
        world.los_event_count += 1
        world.los_events.append((world.time_s + dt, pair[0], pair[1]))
    world.los_active = current

    world.time_s = t0 + dt
    world.step_count += 1
    return world


def _accumulate_noise(world: WorldState, dt: float) -> None:
    lo, _hi = noise.VALID_DISTANCE_FT
    for ac in world.aircraft.values():
        if ac.phase is Phase.ENROUTE:
            zid = zone_of(world.scenario, ac.position_m(), corridor_id=ac.current_corridor())
        elif ac.phase is Phase.VERTICAL_TAKEOFF:
            zid = zone_of(world.scenario, ac.position_m(), vertiport_id=ac.origin)
        elif ac.phase is Phase.VERTICAL_LANDING:
            zid = zone_of(world.scenario, ac.position_m(), vertiport_id=ac.destination)
        else:
            continue
        # slant distance = altitude AGL, clamped to the NPD validity floor
        sel = noise.npd_sel(max(ac.altitude_ft, lo))
        world.accumulators[zid].add(sel, weight=dt)


def neighbor_indices(world: WorldState, aircraft_id: str) -> tuple[EnrouteSnapshot, np.ndarray]:
    """Snapshot plus indices of the aircraft's neighbors within it, id-sorted."""
    snap = enroute_snapshot(world)
    k = snap.index[aircraft_id]
    own_cid = snap.corridors[k]
    linked = world.intersections[own_cid]
    d = np.hypot(snap.pos_m[:, 0] - snap.pos_m[k, 0], snap.pos_m[:, 1] - snap.pos_m[k, 1])
    corridor_ok = np.array([c == own_cid or c in linked for c in snap.corridors])
    mask = corridor_ok & (d <= world.sep.d_comm_m)
    mask[k] = False
    return snap, np.nonzero(mask)[0]


def neighbors(world: WorldState, aircraft_id: str) -> list[str]:
    """Enroute aircraft within communication range on an intersecting corridor.

    Includes same-corridor traffic; excludes self; sorted by id.
    """
    if not world.aircraft[aircraft_id].enroute:
        return []
    snap, idx = neighbor_indices(world, aircraft_id)
    return [snap.ids[j] for j in idx]


def detect_los(world: WorldState) -> set[tuple[str, str]]:
    """Unordered enroute pairs currently closer than d_los_m in 3-D."""
    snap = enroute_snapshot(world)
    n = len(snap.ids)
    if n < 2:
        return set()
    pos = snap.pos_m
    alt_m = snap.alt_ft * M_PER_FT
    dx = pos[:, None, :] - pos[None, :, :]
    dz = alt_m[:, None] - alt_m[None, :]
    dist = np.sqrt((dx**2).sum(axis=2) + dz**2)
    ii, jj = np.where(dist < world.sep.d_los_m)
    ids = snap.ids
    return {
        (ids[i], ids[j]) for i, j in zip(ii.tolist(), jj.tolist()) if i < j
    }
