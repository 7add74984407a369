"""Clipped-surrogate policy optimization: advantage estimation, minibatch
updates with an adaptive-moment optimizer, multi-environment experience
collection, checkpointing, and training logs.

One shared parameter set is trained from experience pooled across every agent
in every environment instance (centralized training); rollouts act on local
observations only (decentralized execution). Environment instances are stepped
round-robin in-process so training is bitwise reproducible for a fixed seed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import env as env_mod
from . import nn, sim
from .airspace import Scenario
from .env import AgentTransition, EnvConfig, observe, reward
from .nn import LossSpec, NetDims, NeuralPolicy, PolicyParameters
from .sim import WorldState

# public name for the experience tuple collected per agent per step
Transition = AgentTransition


class EmptyTrajectory(Exception):
    """Advantage estimation was asked for a trajectory with no transitions."""


@dataclass(frozen=True)
class PpoConfig:
    batch_size: int = 512
    epochs: int = 6
    learning_rate: float = 1e-5
    clip_eps: float = 0.4
    value_coeff: float = 0.01
    entropy_coeff: float = 0.01
    discount: float = 0.99
    update_interval_steps: int = 32
    iterations: int = 10000
    parallel_sims: int = 5
    gae_lambda: float = 0.95
    advantage_estimator: str = "gae"  # "gae" | "returns"
    hidden: int = 256
    checkpoint_interval: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.clip_eps <= 0:
            raise ValueError("clip_eps must be positive")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must be in [0, 1]")
        if self.batch_size <= 0 or self.epochs <= 0 or self.parallel_sims <= 0:
            raise ValueError("batch_size, epochs, parallel_sims must be positive")
        if min(self.value_coeff, self.entropy_coeff, self.learning_rate) < 0:
            raise ValueError("coefficients and learning rate must be nonnegative")
        if self.advantage_estimator not in ("gae", "returns"):
            raise ValueError(f"unknown advantage estimator {self.advantage_estimator!r}")

    def loss_spec(self) -> LossSpec:
        return LossSpec(
            clip_eps=self.clip_eps,
            value_coeff=self.value_coeff,
            entropy_coeff=self.entropy_coeff,
        )


def compute_advantages(
    trajectory: list[Transition],
    discount: float,
    gae_lambda: float,
    bootstrap_value: float = 0.0,
    estimator: str = "gae",
) -> tuple[np.ndarray, np.ndarray]:
    """Per-trajectory advantage and return estimates (raw, unnormalized).

    GAE bootstraps zero at done and bootstrap_value at truncation; with
    gae_lambda = 0 it reduces to the one-step temporal-difference advantage.
    The "returns" estimator uses plain discounted returns minus values.
    """
    if not trajectory:
        raise EmptyTrajectory("no transitions")
    t_len = len(trajectory)
    rewards = np.array([t.reward for t in trajectory])
    values = np.array([t.value for t in trajectory])
    dones = np.array([1.0 if t.done else 0.0 for t in trajectory])
    next_values = np.empty(t_len)
    next_values[:-1] = values[1:]
    next_values[-1] = bootstrap_value
    if estimator == "returns":
        returns = np.empty(t_len)
        running = bootstrap_value
        for t in range(t_len - 1, -1, -1):
            running = rewards[t] + discount * (1.0 - dones[t]) * running
            returns[t] = running
        return returns - values, returns
    deltas = rewards + discount * next_values * (1.0 - dones) - values
    advantages = np.empty(t_len)
    acc = 0.0
    for t in range(t_len - 1, -1, -1):
        acc = deltas[t] + discount * gae_lambda * (1.0 - dones[t]) * acc
        advantages[t] = acc
    return advantages, advantages + values


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    std = advantages.std()
    if std < 1e-12:
        return np.zeros_like(advantages)
    return (advantages - advantages.mean()) / std


class AdamState:
    """Adaptive-moment optimizer state, standard defaults."""

    def __init__(self, params: PolicyParameters, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.blocks.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.blocks.items()}

    def copy(self) -> "AdamState":
        dup = AdamState.__new__(AdamState)
        dup.beta1, dup.beta2, dup.eps = self.beta1, self.beta2, self.eps
        dup.t = self.t
        dup.m = {k: v.copy() for k, v in self.m.items()}
        dup.v = {k: v.copy() for k, v in self.v.items()}
        return dup

    def step(self, params: PolicyParameters, grads: dict[str, np.ndarray], lr: float) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params.blocks[k] -= lr * (self.m[k] / b1c) / (np.sqrt(self.v[k] / b2c) + self.eps)


def ppo_loss(
    params: PolicyParameters, minibatch: dict, cfg: PpoConfig
) -> tuple[float, dict[str, np.ndarray], dict]:
    """Loss, exact gradient set, and diagnostics for one prepared minibatch."""
    if minibatch["actions"].shape[0] == 0:
        raise EmptyTrajectory("empty minibatch")
    return nn.gradients(params, minibatch, cfg.loss_spec())


def prepare_batch(
    segments: list[tuple[list[Transition], float]], cfg: PpoConfig
) -> dict:
    """Pool trajectory segments into packed arrays with normalized advantages."""
    all_tr: list[Transition] = []
    all_adv: list[np.ndarray] = []
    all_ret: list[np.ndarray] = []
    for transitions, bootstrap in segments:
        adv, ret = compute_advantages(
            transitions,
            cfg.discount,
            cfg.gae_lambda,
            bootstrap_value=bootstrap,
            estimator=cfg.advantage_estimator,
        )
        all_tr.extend(transitions)
        all_adv.append(adv)
        all_ret.append(ret)
    own, nbr, mask = nn.pack_observations([t.obs for t in all_tr])
    return {
        "own": own,
        "nbr": nbr,
        "mask": mask,
        "actions": np.array([t.action for t in all_tr], dtype=np.int64),
        "advantages": normalize_advantages(np.concatenate(all_adv)),
        "returns": np.concatenate(all_ret),
        "old_log_probs": np.array([t.log_prob for t in all_tr]),
    }


def update(
    params: PolicyParameters,
    batch: dict,
    cfg: PpoConfig,
    adam: AdamState | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[PolicyParameters, AdamState, dict]:
    """K epochs of shuffled size-B minibatch steps over a prepared batch.

    Works on copies; on NonFiniteLoss the inputs are untouched and the error
    propagates so the caller can skip the round.
    """
    n = batch["actions"].shape[0]
    if n < cfg.batch_size:
        raise ValueError(f"collected batch {n} smaller than batch_size {cfg.batch_size}")
    rng = rng or np.random.default_rng(cfg.seed)
    new_params = params.copy()
    new_adam = adam.copy() if adam is not None else AdamState(new_params)
    losses, entropies, clip_fracs = [], [], []
    for _epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        for start in range(0, n - cfg.batch_size + 1, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            mb = {
                k: batch[k][idx]
                for k in ("own", "nbr", "mask", "actions", "advantages", "returns", "old_log_probs")
            }
            loss, grads, diag = nn.gradients(new_params, mb, cfg.loss_spec())
            new_adam.step(new_params, grads, cfg.learning_rate)
            losses.append(loss)
            entropies.append(diag["entropy"])
            clip_fracs.append(diag["clip_fraction"])
    stats = {
        "loss": float(np.mean(losses)),
        "entropy": float(np.mean(entropies)),
        "clip_fraction": float(np.mean(clip_fracs)),
        "minibatch_steps": len(losses),
    }
    return new_params, new_adam, stats


class Collector:
    """One environment instance producing per-agent trajectory segments.

    Episodes replay the same scenario; variation across episodes comes from
    action sampling. Open trajectories persist across collection windows and
    are closed (with a bootstrap value) when the learner drains them.
    """

    def __init__(self, scenario: Scenario, env_cfg: EnvConfig, seed: int, worker_idx: int):
        self.scenario = scenario
        self.env_cfg = env_cfg
        self.action_rng = np.random.default_rng([seed, worker_idx, 77])
        self.world: WorldState = sim.reset(scenario, seed, sep=env_cfg.sep)
        self.open: dict[str, list[Transition]] = {}
        self.closed: list[tuple[list[Transition], float]] = []
        self.reward_sums = {"total": 0.0, "noise": 0.0, "separation": 0.0, "energy": 0.0}
        self.transition_count = 0
        self.los_events = 0
        self._los_seen = 0

    def collect(self, n_steps: int, policy: NeuralPolicy) -> None:
        for _ in range(n_steps):
            world = self.world
            if world.all_done() or world.step_count >= self.scenario.sim.max_episode_steps:
                self._finish_episode(policy)
                world = self.world
            ids = world.enroute_ids()
            actions: dict[str, int] = {}
            obs_list: list = []
            if ids:
                obs_list = [observe(world, i) for i in ids]
                acts, logps, values = policy.act(obs_list, self.action_rng, greedy=False)
                actions = {i: int(a) for i, a in zip(ids, acts)}
            sim.step(world, actions)
            for k, aid in enumerate(ids):
                ac = world.aircraft[aid]
                if ac.enroute:
                    rb = reward(world, aid, actions[aid], self.env_cfg)
                else:
                    rb = env_mod.RewardBreakdown(0.0, 0.0, 0.0, 0.0)
                tr = Transition(
                    obs=obs_list[k],
                    action=actions[aid],
                    reward=rb.total,
                    components=rb,
                    next_obs=None,
                    done=not ac.enroute,
                    log_prob=float(logps[k]),
                    value=float(values[k]),
                )
                prev = self.open.get(aid)
                if prev:
                    prev[-1].next_obs = tr.obs
                self.open.setdefault(aid, []).append(tr)
                self.reward_sums["total"] += rb.total
                self.reward_sums["noise"] += rb.noise
                self.reward_sums["separation"] += rb.separation
                self.reward_sums["energy"] += rb.energy
                self.transition_count += 1
                if tr.done:
                    self.closed.append((self.open.pop(aid), 0.0))
            self.los_events += world.los_event_count - self._los_seen
            self._los_seen = world.los_event_count

    def _finish_episode(self, policy: NeuralPolicy) -> None:
        # truncated agents bootstrap from their current state value
        self._close_open(policy)
        self.world = sim.reset(self.scenario, None, sep=self.env_cfg.sep)
        self._los_seen = 0

    def _close_open(self, policy: NeuralPolicy) -> None:
        for aid in sorted(self.open):
            transitions = self.open.pop(aid)
            ac = self.world.aircraft[aid]
            if ac.enroute and not transitions[-1].done:
                obs = observe(self.world, aid)
                transitions[-1].next_obs = obs
                _, value = nn.forward(policy.params, obs)
            else:
                value = 0.0
            self.closed.append((transitions, value))

    def drain(self, policy: NeuralPolicy) -> list[tuple[list[Transition], float]]:
        self._close_open(policy)
        out = self.closed
        self.closed = []
        return out

    def pop_stats(self) -> dict:
        stats = {
            "transitions": self.transition_count,
            "los_events": self.los_events,
            **self.reward_sums,
        }
        self.reward_sums = {"total": 0.0, "noise": 0.0, "separation": 0.0, "energy": 0.0}
        self.transition_count = 0
        self.los_events = 0
        return stats


TRAIN_LOG_COLUMNS = [
    "iteration",
    "mean_reward",
    "mean_noise_component",
    "mean_sep_component",
    "mean_energy_component",
    "entropy",
    "clip_fraction",
    "los_events",
]


def train(
    scenario: Scenario,
    env_cfg: EnvConfig,
    cfg: PpoConfig,
    out_dir: str | Path | None = None,
    dims: NetDims | None = None,
) -> tuple[PolicyParameters, list[dict]]:
    """Run the full training loop; returns final parameters and the log rows.

    When out_dir is given, writes training_log.csv, periodic checkpoints, and
    checkpoint_final.npz there.
    """
    dims = dims or NetDims(hidden=cfg.hidden)
    params = nn.init_params(cfg.seed, dims)
    adam = AdamState(params)
    update_rng = np.random.default_rng([cfg.seed, 13])
    workers = [
        Collector(scenario, env_cfg, cfg.seed, worker_idx=w) for w in range(cfg.parallel_sims)
    ]
    out_path = Path(out_dir) if out_dir is not None else None
    log_file = None
    log_writer = None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        log_file = open(out_path / "training_log.csv", "w", newline="")
        log_writer = csv.writer(log_file)
        log_writer.writerow(TRAIN_LOG_COLUMNS)
    log_rows: list[dict] = []
    try:
        for iteration in range(1, cfg.iterations + 1):
            policy = NeuralPolicy(params)
            segments: list[tuple[list[Transition], float]] = []
            pending = 0
            while pending < cfg.batch_size:
                for w in workers:
                    w.collect(cfg.update_interval_steps, policy)
                pending = sum(
                    w.transition_count for w in workers
                )
            for w in workers:
                segments.extend(w.drain(policy))
            batch = prepare_batch(segments, cfg)
            stats = [w.pop_stats() for w in workers]
            n_tr = sum(s["transitions"] for s in stats)
            row = {
                "iteration": iteration,
                "mean_reward": sum(s["total"] for s in stats) / n_tr,
                "mean_noise_component": sum(s["noise"] for s in stats) / n_tr,
                "mean_sep_component": sum(s["separation"] for s in stats) / n_tr,
                "mean_energy_component": sum(s["energy"] for s in stats) / n_tr,
                "los_events": sum(s["los_events"] for s in stats),
            }
            try:
                params, adam, ustats = update(params, batch, cfg, adam, update_rng)
                params.iteration = iteration
                row["entropy"] = ustats["entropy"]
                row["clip_fraction"] = ustats["clip_fraction"]
            except nn.NonFiniteLoss:
                row["entropy"] = math.nan
                row["clip_fraction"] = math.nan
            log_rows.append(row)
            if log_writer is not None:
                log_writer.writerow([row[c] for c in TRAIN_LOG_COLUMNS])
                log_file.flush()
            if out_path is not None and cfg.checkpoint_interval > 0 and iteration % cfg.checkpoint_interval == 0:
                nn.save_params(params, out_path / f"checkpoint_iter{iteration:06d}.npz")
    finally:
        if log_file is not None:
            log_file.close()
    if out_path is not None:
        nn.save_params(params, out_path / "checkpoint_final.npz")
    return params, log_rows
