"""Evaluation metrics over test episodes and reward-weight tradeoff sweeps.

Evaluation runs greedy-mode rollouts with per-episode seeds derived from one
master seed and aggregates each metric with box-plot statistics (mean, median,
quartiles, min, max). Aggregation is a deterministic fold ordered by episode
index, so a fixed checkpoint and master seed reproduce the report byte for
byte.
"""

from __future__ import annotations

import math
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import ppo as ppo_mod
from .airspace import Scenario
from .env import EnvConfig, EpisodeMetrics, Policy, episode_rollout
from .errors import ConfigError
from .nn import NeuralPolicy

__all__ = [
    "EpisodeMetrics",
    "episode_seed",
    "evaluate",
    "sweep",
    "validate_weight_triple",
]

SCALAR_METRICS = [
    "los_event_count",
    "network_total_increase_db",
    "total_altitude_changes",
    "ascent_count_total",
    "mean_flight_energy_mj",
    "episode_steps",
    "sum_reward",
]


def episode_seed(master_seed: int, index: int) -> int:
    return (master_seed + 1000003 * (index + 1)) % (2**63)


def _stats(values: list[float]) -> dict:
    arr = np.array([v for v in values if v is not None and not math.isnan(v)], dtype=float)
    if arr.size == 0:
        return {"mean": None, "median": None, "q1": None, "q3": None, "min": None, "max": None}
    q1, med, q3 = np.percentile(arr, [25.0, 50.0, 75.0])
    return {
        "mean": float(arr.mean()),
        "median": float(med),
        "q1": float(q1),
        "q3": float(q3),
        "min": float(arr.min()),
        "max": float(arr.max()),
    }


def episode_scalars(m: EpisodeMetrics) -> dict:
    energies = [e for e in m.per_flight_energy_j.values() if not math.isnan(e)]
    return {
        "los_event_count": float(m.los_event_count),
        "network_total_increase_db": m.network_total_increase_db,
        "total_altitude_changes": float(m.total_altitude_changes),
        "ascent_count_total": float(m.ascent_count_total),
        "mean_flight_energy_mj": (sum(energies) / len(energies) / 1e6) if energies else None,
        "episode_steps": float(m.episode_steps),
        "sum_reward": m.sum_reward,
    }


def evaluate(
    policy: Policy,
    scenario: Scenario,
    n_episodes: int,
    seed: int,
    cfg: EnvConfig | None = None,
) -> dict:
    """Aggregate report over greedy evaluation episodes.

    Returns a plain JSON-serializable dict: per-metric box statistics, the
    mean altitude occupancy, per-zone noise summaries, and the per-episode
    rows the statistics were folded from.
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    cfg = cfg or EnvConfig()
    episodes: list[EpisodeMetrics] = []
    for i in range(n_episodes):
        _, m = episode_rollout(
            policy, scenario, episode_seed(seed, i), collect=False, cfg=cfg, greedy=True
        )
        episodes.append(m)

    levels = list(scenario.network.altitude_levels_ft)
    per_episode = []
    for i, m in enumerate(episodes):
        row = {"episode": i, "seed": episode_seed(seed, i), **episode_scalars(m)}
        row["altitude_occupancy"] = [float(x) for x in m.altitude_occupancy]
        per_episode.append(row)

    occ_rows = [m.altitude_occupancy for m in episodes if m.altitude_occupancy.sum() > 0]
    mean_occ = (
        [float(x) for x in np.mean(occ_rows, axis=0)] if occ_rows else [0.0 for _ in levels]
    )

    zone_ids = [z.id for z in scenario.zones]
    zones = {}
    for zid in zone_ids:
        vals = [m.zone_increase_db.get(zid) for m in episodes]
        zones[zid] = {
            "mean_increase_db": _stats(vals)["mean"],
            "episodes_with_exposure": sum(1 for v in vals if v is not None),
        }

    report = {
        "n_episodes": n_episodes,
        "master_seed": seed,
        "levels_ft": levels,
        "metrics": {
            name: _stats([row[name] for row in per_episode]) for name in SCALAR_METRICS
        },
        "mean_altitude_occupancy": mean_occ,
        "zones": zones,
        "per_episode": per_episode,
    }
    return report


def validate_weight_triple(triple: tuple[float, float, float], allow_any: bool = False) -> None:
    """Enforce the pairwise sweep design: one objective off, the others sum to 1."""
    rho_noise, rho_sep, rho_energy = triple
    if min(triple) < 0:
        raise ConfigError(f"weights must be nonnegative, got {triple}")
    if allow_any:
        return
    total = rho_noise + rho_sep + rho_energy
    if abs(total - 1.0) > 1e-9 or min(triple) > 1e-12:
        raise ConfigError(
            f"weight triple {triple} must keep one objective at zero and the "
            "other two summing to 1 (pass allow_any to override)"
        )


def sweep(
    weight_grid: list[tuple[float, float, float]],
    scenario: Scenario,
    ppo_cfg: "ppo_mod.PpoConfig",
    base_cfg: EnvConfig | None = None,
    n_episodes: int = 10,
    seed: int = 0,
    allow_any: bool = False,
    out_dir=None,
) -> list[dict]:
    """Train one policy per weight triple, evaluate it, and tabulate tradeoffs.

    With ppo_cfg.iterations == 0 each triple is evaluated at its freshly
    initialized policy (useful for exercising the pipeline without training
    compute). Rows carry the weights plus mean LOS events, mean noise increase,
    and mean altitude adjustments.
    """
    base_cfg = base_cfg or EnvConfig()
    for triple in weight_grid:
        validate_weight_triple(triple, allow_any=allow_any)
    rows = []
    for rho_noise, rho_sep, rho_energy in weight_grid:
        weights = replace(
            base_cfg.weights, rho_noise=rho_noise, rho_sep=rho_sep, rho_energy=rho_energy
        )
        cfg = replace(base_cfg, weights=weights)
        run_dir = None
        if out_dir is not None:
            run_dir = Path(out_dir) / f"policy_n{rho_noise:g}_s{rho_sep:g}_e{rho_energy:g}"
        params, _log = ppo_mod.train(scenario, cfg, ppo_cfg, out_dir=run_dir)
        report = evaluate(NeuralPolicy(params), scenario, n_episodes, seed, cfg)
        rows.append(
            {
                "rho_noise": rho_noise,
                "rho_sep": rho_sep,
                "rho_energy": rho_energy,
                "mean_los_events": report["metrics"]["los_event_count"]["mean"],
                "mean_noise_increase_db": report["metrics"]["network_total_increase_db"]["mean"],
                "mean_altitude_changes": report["metrics"]["total_altitude_changes"]["mean"],
            }
        )
    return rows
