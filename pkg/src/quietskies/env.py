"""MDP layer: observation construction, the three-part reward, and episode
rollout orchestration.

Each enroute aircraft is an agent acting through one shared policy on its own
local observation. Rewards are penalties in [-1, 0] per component: perceived
ground noise at the current altitude, proximity-weighted congestion among
same-altitude neighbors, and an escalating charge per initiated ascent.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from . import energy, noise, sim
from .airspace import Scenario, route_length_m
from .sim import ASCEND, DESCEND, MAINTAIN, N_ACTIONS, Phase, SeparationConfig, WorldState

M_PER_FT = 0.3048

OWNSHIP_DIM = 7  # z, changing, z_target, one-hot action (3), ascent count
NEIGHBOR_DIM = 5  # relative z, horizontal distance, one-hot action (3)
ASCENT_COUNT_NORM = 8.0


class NotEnroute(Exception):
    """Observation or reward requested for an aircraft that is not enroute."""


@dataclass(frozen=True)
class RewardWeights:
    rho_noise: float = 0.0
    rho_sep: float = 1.0
    rho_energy: float = 0.0
    c_e: float = 0.05  # energy cost factor per initiated ascent ordinal
    c_max: float = 10.0  # congestion normalizer

    def __post_init__(self):
        for name in ("rho_noise", "rho_sep", "rho_energy"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.c_e < 0 or self.c_max <= 0:
            raise ValueError("c_e must be >= 0 and c_max > 0")


@dataclass(frozen=True)
class EnvConfig:
    weights: RewardWeights = field(default_factory=RewardWeights)
    noise_cfg: noise.NoiseConfig = field(default_factory=noise.NoiseConfig)
    sep: SeparationConfig = field(default_factory=SeparationConfig)


@dataclass(frozen=True)
class Observation:
    ownship: np.ndarray  # (OWNSHIP_DIM,)
    neighbors: np.ndarray  # (k, NEIGHBOR_DIM), k >= 0, ordered by neighbor id


def _one_hot(action: int) -> list[float]:
    v = [0.0] * N_ACTIONS
    v[action] = 1.0
    return v


def observe(world: WorldState, aircraft_id: str) -> Observation:
    """Local observation for one enroute aircraft; deterministic."""
    ac = world.aircraft[aircraft_id]
    if not ac.enroute:
        raise NotEnroute(aircraft_id)
    levels = world.levels_ft
    span = levels[-1] - levels[0]
    z = (ac.altitude_ft - levels[0]) / span
    zt = (ac.target_altitude_ft - levels[0]) / span
    nadj = min(1.0, ac.ascent_count / ASCENT_COUNT_NORM)
    own = np.array(
        [z, 1.0 if ac.changing else 0.0, zt, *_one_hot(ac.last_action), nadj],
        dtype=np.float64,
    )
    snap, idx = sim.neighbor_indices(world, aircraft_id)
    k = snap.index[aircraft_id]
    rows = []
    for j in idx:
        other = world.aircraft[snap.ids[j]]
        z_rel = (snap.alt_ft[j] - snap.alt_ft[k]) / span
        d_o = (
            float(np.hypot(*(snap.pos_m[j] - snap.pos_m[k]))) / world.sep.d_comm_m
        )
        rows.append([z_rel, d_o, *_one_hot(other.last_action)])
    nbr = (
        np.array(rows, dtype=np.float64)
        if rows
        else np.zeros((0, NEIGHBOR_DIM), dtype=np.float64)
    )
    return Observation(ownship=own, neighbors=nbr)


def proximity_weight(d_o_m: float, cfg: SeparationConfig) -> float:
    """Distance-decayed congestion weight: 1 inside LOS range, 0 beyond comm range."""
    if d_o_m < cfg.d_los_m:
        return 1.0
    if d_o_m <= cfg.d_comm_m:
        return (cfg.d_comm_m - d_o_m) / (cfg.d_comm_m - cfg.d_los_m)
    return 0.0


def congestion(world: WorldState, aircraft_id: str) -> float:
    """Sum of proximity weights over neighbors within the same-altitude band."""
    snap, idx = sim.neighbor_indices(world, aircraft_id)
    k = snap.index[aircraft_id]
    total = 0.0
    for j in idx:
        z_rel_m = abs(snap.alt_ft[j] - snap.alt_ft[k]) * M_PER_FT
        if z_rel_m < world.sep.d_los_m:
            total += proximity_weight(
                float(np.hypot(*(snap.pos_m[j] - snap.pos_m[k]))), world.sep
            )
    return total


@dataclass(frozen=True)
class RewardBreakdown:
    total: float
    noise: float
    separation: float
    energy: float


def reward(
    world: WorldState, aircraft_id: str, action: int, cfg: EnvConfig
) -> RewardBreakdown:
    """Reward for one aircraft after its action has been applied this step.

    The noise term is the negated normalized single-event level (a penalty;
    quietest at the highest level). The energy term charges only when this
    step's action actually initiated an ascent, scaled by the ordinal of that
    ascent.
    """
    ac = world.aircraft[aircraft_id]
    if not ac.enroute:
        raise NotEnroute(aircraft_id)
    r_noise = -noise.normalized_noise(ac.altitude_ft, cfg.noise_cfg)
    r_sep = -min(congestion(world, aircraft_id) / cfg.weights.c_max, 1.0)
    if action == ASCEND and ac.ascent_initiated_this_step:
        r_energy = -cfg.weights.c_e * ac.ascents_initiated
    else:
        r_energy = 0.0
    w = cfg.weights
    total = w.rho_noise * r_noise + w.rho_sep * r_sep + w.rho_energy * r_energy
    return RewardBreakdown(total=total, noise=r_noise, separation=r_sep, energy=r_energy)


class Policy(Protocol):
    def act(
        self, observations: list[Observation], rng: np.random.Generator, greedy: bool
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (actions, log_probs, values), each shaped (n,)."""
        ...


class ConstantPolicy:
    """Always plays one fixed action; used as an evaluation baseline."""

    def __init__(self, action: int = MAINTAIN):
        self.action = action

    def act(self, observations, rng, greedy):
        n = len(observations)
        return (
            np.full(n, self.action, dtype=np.int64),
            np.zeros(n),
            np.zeros(n),
        )


@dataclass
class AgentTransition:
    obs: Observation
    action: int
    reward: float
    components: RewardBreakdown
    next_obs: Observation | None  # None once the agent has left the enroute phase
    done: bool
    log_prob: float
    value: float


@dataclass
class EpisodeMetrics:
    los_event_count: int = 0
    zone_increase_db: dict = field(default_factory=dict)  # zone id -> dB or None
    zone_energy_sum: dict = field(default_factory=dict)  # zone id -> event-energy sum
    zone_ambient_db: dict = field(default_factory=dict)
    network_total_increase_db: float | None = None
    total_altitude_changes: int = 0
    ascent_count_total: int = 0
    altitude_occupancy: np.ndarray = field(default_factory=lambda: np.zeros(0))
    per_flight_energy_j: dict = field(default_factory=dict)
    episode_steps: int = 0
    sum_reward: float = 0.0


def _nearest_level_index(altitude_ft: float, levels: tuple[float, ...]) -> int:
    return int(np.argmin([abs(altitude_ft - l) for l in levels]))


def network_total_increase_db(world: WorldState) -> float | None:
    """Headline noise scalar: energy sum over all zones against the energy-mean ambient."""
    total = sum(a.energy_sum for a in world.accumulators.values())
    if total <= 0.0:
        return None
    ambients = [a.ambient_db for a in world.accumulators.values()]
    ambient_ref = 10.0 * math.log10(
        sum(10.0 ** (a / 10.0) for a in ambients) / len(ambients)
    )
    return 10.0 * math.log10(total) - noise.SEL_TO_LEQ_OFFSET_DB - ambient_ref


def finalize_metrics(world: WorldState, occupancy_counts: np.ndarray, sum_reward: float) -> EpisodeMetrics:
    zone_inc = {}
    for zid, acc in world.accumulators.items():
        zone_inc[zid] = noise.cumulative_increase(acc) if acc.energy_sum > 0 else None
    per_flight = {}
    for ac in world.aircraft.values():
        if ac.max_level_ft <= 0:
            continue  # never reached the enroute phase
        dist_ft = ac.route.length_m / M_PER_FT
        try:
            per_flight[ac.id] = energy.mission_energy(dist_ft, ac.max_level_ft).e_total_j
        except energy.RouteTooShort:
            per_flight[ac.id] = math.nan
    occ_total = occupancy_counts.sum()
    occupancy = occupancy_counts / occ_total if occ_total > 0 else occupancy_counts.astype(float)
    return EpisodeMetrics(
        los_event_count=world.los_event_count,
        zone_increase_db=zone_inc,
        zone_energy_sum={zid: acc.energy_sum for zid, acc in world.accumulators.items()},
        zone_ambient_db={zid: acc.ambient_db for zid, acc in world.accumulators.items()},
        network_total_increase_db=network_total_increase_db(world),
        total_altitude_changes=sum(a.altitude_changes for a in world.aircraft.values()),
        ascent_count_total=sum(a.ascent_count for a in world.aircraft.values()),
        altitude_occupancy=occupancy,
        per_flight_energy_j=per_flight,
        episode_steps=world.step_count,
        sum_reward=sum_reward,
    )


def episode_rollout(
    policy: Policy,
    scenario: Scenario,
    seed: int,
    collect: bool = True,
    cfg: EnvConfig | None = None,
    greedy: bool = False,
    trace_path: str | Path | None = None,
) -> tuple[dict[str, list[AgentTransition]], EpisodeMetrics]:
    """Run one full episode with every enroute aircraft acting through the policy.

    Returns per-agent transition lists (empty when collect is False) and the
    episode's metrics. Deterministic for a fixed policy, scenario, and seed.
    """
    cfg = cfg or EnvConfig()
    rng = np.random.default_rng(seed)
    world = sim.reset(scenario, seed, sep=cfg.sep)
    levels = world.levels_ft
    trajectories: dict[str, list[AgentTransition]] = {}
    occupancy = np.zeros(len(levels))
    sum_reward = 0.0
    pending_next: dict[str, AgentTransition] = {}

    trace_file = None
    trace_writer = None
    if trace_path is not None:
        trace_file = open(trace_path, "w", newline="")
        trace_writer = csv.writer(trace_file)
        trace_writer.writerow(
            ["time", "id", "corridor", "along_track_m", "altitude_ft", "action", "in_los_flag"]
        )
    try:
        for _ in range(scenario.sim.max_episode_steps):
            if world.all_done():
                break
            ids = world.enroute_ids()
            actions: dict[str, int] = {}
            if ids:
                obs_list = [observe(world, i) for i in ids]
                acts, logps, values = policy.act(obs_list, rng, greedy)
                actions = {i: int(a) for i, a in zip(ids, acts)}
            sim.step(world, actions)
            in_los = {a for pair in world.los_active for a in pair}
            for k, aid in enumerate(ids):
                ac = world.aircraft[aid]
                still_enroute = ac.enroute
                if still_enroute:
                    rb = reward(world, aid, actions[aid], cfg)
                else:
                    # arrival is the objective; terminal transition carries the
                    # best-case (zero) penalty
                    rb = RewardBreakdown(0.0, 0.0, 0.0, 0.0)
                sum_reward += rb.total
                if collect:
                    tr = AgentTransition(
                        obs=obs_list[k],
                        action=actions[aid],
                        reward=rb.total,
                        components=rb,
                        next_obs=None,
                        done=not still_enroute,
                        log_prob=float(logps[k]),
                        value=float(values[k]),
                    )
                    trajectories.setdefault(aid, []).append(tr)
                    if aid in pending_next:
                        pending_next[aid].next_obs = tr.obs
                    pending_next[aid] = tr
                if still_enroute:
                    occupancy[_nearest_level_index(ac.altitude_ft, levels)] += 1
                    if trace_writer is not None:
                        trace_writer.writerow(
                            [
                                world.time_s,
                                aid,
                                ac.current_corridor(),
                                f"{ac.along_m:.3f}",
                                f"{ac.altitude_ft:.3f}",
                                actions[aid],
                                1 if aid in in_los else 0,
                            ]
                        )
        if collect:
            # agents still enroute at truncation keep next_obs for bootstrapping
            for aid, tr in pending_next.items():
                ac = world.aircraft[aid]
                if tr.next_obs is None and ac.enroute:
                    tr.next_obs = observe(world, aid)
    finally:
        if trace_file is not None:
            trace_file.close()
    return trajectories, finalize_metrics(world, occupancy, sum_reward)
