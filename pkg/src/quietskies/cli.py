"""Command-line entry point: scenario generation, training, evaluation,
weight sweeps, and module reports.

Config precedence is CLI flags > environment variables (output dir and worker
count only) > config file > built-in defaults; the resolved union is persisted
into every run directory together with the seed and version stamp. Output
locations are never overwritten silently; pass --force.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__, energy, metrics, nn, plots, ppo
from .airspace import (
    Scenario,
    bundled_scenario_path,
    generate_network,
    generate_scenario,
    load_scenario,
    save_scenario,
)
from .env import ConstantPolicy, EnvConfig, RewardWeights, episode_rollout
from .errors import ConfigError, ParseError, ValidationError
from .noise import NoiseConfig
from .sim import ASCEND, DESCEND, MAINTAIN, SeparationConfig

ENV_OUT = "QUIETSKIES_OUT"
ENV_WORKERS = "QUIETSKIES_WORKERS"

BASELINES = {"maintain": MAINTAIN, "ascend": ASCEND, "descend": DESCEND}

ENV_KEYS = ("rho_noise", "rho_sep", "rho_energy", "c_e", "c_max", "d_los_m", "d_comm_m")
PPO_KEYS = (
    "batch_size", "epochs", "learning_rate", "clip_eps", "value_coeff", "entropy_coeff",
    "discount", "update_interval_steps", "iterations", "parallel_sims", "gae_lambda",
    "advantage_estimator", "hidden", "checkpoint_interval", "seed",
)


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {p} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {p}: top level must be an object")
    return doc


def resolve_configs(args: argparse.Namespace) -> tuple[EnvConfig, ppo.PpoConfig, dict]:
    """Merge defaults <- config file <- env vars <- CLI flags."""
    doc = _load_config_file(getattr(args, "config", None))
    env_vals = {k: doc[k] for k in ENV_KEYS if k in doc}
    ppo_vals = {k: doc[k] for k in PPO_KEYS if k in doc}
    for k in ENV_KEYS:
        flag = getattr(args, k, None)
        if flag is not None:
            env_vals[k] = flag
    workers_env = os.environ.get(ENV_WORKERS)
    if workers_env is not None:
        ppo_vals["parallel_sims"] = int(workers_env)
    for k in PPO_KEYS:
        flag = getattr(args, k, None)
        if flag is not None:
            ppo_vals[k] = flag
    workers_flag = getattr(args, "workers", None)
    if workers_flag is not None:
        ppo_vals["parallel_sims"] = workers_flag
    weights = RewardWeights(
        rho_noise=float(env_vals.get("rho_noise", 0.0)),
        rho_sep=float(env_vals.get("rho_sep", 1.0)),
        rho_energy=float(env_vals.get("rho_energy", 0.0)),
        c_e=float(env_vals.get("c_e", 0.05)),
        c_max=float(env_vals.get("c_max", 10.0)),
    )
    sep = SeparationConfig(
        d_los_m=float(env_vals.get("d_los_m", 150.0)),
        d_comm_m=float(env_vals.get("d_comm_m", 2500.0)),
    )
    env_cfg = EnvConfig(weights=weights, noise_cfg=NoiseConfig(), sep=sep)
    try:
        ppo_cfg = ppo.PpoConfig(**ppo_vals)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad training config: {exc}") from exc
    resolved = {
        "version": __version__,
        "env": {
            "rho_noise": weights.rho_noise,
            "rho_sep": weights.rho_sep,
            "rho_energy": weights.rho_energy,
            "c_e": weights.c_e,
            "c_max": weights.c_max,
            "d_los_m": sep.d_los_m,
            "d_comm_m": sep.d_comm_m,
            "n_min_db": env_cfg.noise_cfg.n_min_db,
            "n_max_db": env_cfg.noise_cfg.n_max_db,
        },
        "ppo": asdict(ppo_cfg),
    }
    return env_cfg, ppo_cfg, resolved


def _resolve_out(args: argparse.Namespace) -> Path:
    out = getattr(args, "out", None) or os.environ.get(ENV_OUT)
    if out is None:
        raise ConfigError(f"no output location: pass --out or set {ENV_OUT}")
    return Path(out)


def _prepare_out_dir(path: Path, force: bool) -> Path:
    if path.exists() and any(path.iterdir()) and not force:
        raise ConfigError(f"output directory {path} is not empty (use --force to overwrite)")
    path.mkdir(parents=True, exist_ok=True)
    (path / "figures").mkdir(exist_ok=True)
    return path


def _guard_out_file(path: Path, force: bool) -> Path:
    if path.exists() and not force:
        raise ConfigError(f"output file {path} exists (use --force to overwrite)")
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_resolved(out_dir: Path, resolved: dict, command: str, extra: dict) -> None:
    doc = {"command": command, **resolved, **extra}
    (out_dir / "resolved_config.json").write_text(json.dumps(doc, indent=2, sort_keys=True))


def _load_scenario_arg(args: argparse.Namespace) -> Scenario:
    path = getattr(args, "scenario", None)
    if path is None or path == "bundled":
        return load_scenario(bundled_scenario_path())
    return load_scenario(path)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_scenario(args: argparse.Namespace) -> int:
    out = _guard_out_file(_resolve_out(args), args.force)
    network = generate_network(
        n_vertiports=args.vertiports,
        n_corridors=args.corridors,
        n_od_pairs=args.od_pairs,
        region_extent_m=args.extent_m,
        seed=args.seed,
    )
    scenario = generate_scenario(
        network,
        n_flights=args.flights,
        seed=args.seed,
        headway_s=args.headway_s,
        ambient_db=args.ambient_db,
    )
    save_scenario(scenario, out)
    print(
        f"wrote {out}: {len(network.vertiports)} vertiports, {len(network.corridors)} corridors "
        f"({network.n_directional_links} directional links), {len(network.od_pairs)} O-D pairs, "
        f"{len(scenario.flights)} flights"
    )
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    env_cfg, ppo_cfg, resolved = resolve_configs(args)
    scenario = _load_scenario_arg(args)
    out_dir = _prepare_out_dir(_resolve_out(args), args.force)
    _write_resolved(out_dir, resolved, "train", {"scenario": str(args.scenario or "bundled"), "seed": ppo_cfg.seed})
    params, log_rows = ppo.train(scenario, env_cfg, ppo_cfg, out_dir=out_dir)
    if log_rows:
        plots.plot_training_curve(
            [r["iteration"] for r in log_rows],
            [r["mean_reward"] for r in log_rows],
            out_dir / "figures" / "training_curve.png",
        )
    print(f"trained {ppo_cfg.iterations} iterations -> {out_dir / 'checkpoint_final.npz'}")
    return 0


def _policy_from_args(args: argparse.Namespace):
    ckpt = getattr(args, "checkpoint", None)
    baseline = getattr(args, "baseline", None)
    if ckpt is not None and baseline is not None:
        raise ConfigError("pass either --checkpoint or --baseline, not both")
    if ckpt is not None:
        return nn.NeuralPolicy(nn.load_params(ckpt)), f"checkpoint:{ckpt}"
    if baseline is not None:
        return ConstantPolicy(BASELINES[baseline]), f"baseline:{baseline}"
    raise ConfigError("a policy is required: pass --checkpoint FILE or --baseline NAME")


def cmd_eval(args: argparse.Namespace) -> int:
    env_cfg, ppo_cfg, resolved = resolve_configs(args)
    scenario = _load_scenario_arg(args)
    policy, policy_desc = _policy_from_args(args)
    out_dir = _prepare_out_dir(_resolve_out(args), args.force)
    report = metrics.evaluate(policy, scenario, args.episodes, args.seed, env_cfg)
    (out_dir / "aggregate.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    _write_resolved(
        out_dir, resolved, "eval",
        {"scenario": str(args.scenario or "bundled"), "seed": args.seed,
         "episodes": args.episodes, "policy": policy_desc},
    )

    levels = report["levels_ft"]
    _write_csv(
        out_dir / "episodes.csv",
        ["episode", "seed", *metrics.SCALAR_METRICS, *[f"occ_{int(l)}ft" for l in levels]],
        [
            [row["episode"], row["seed"], *[row[m] for m in metrics.SCALAR_METRICS], *row["altitude_occupancy"]]
            for row in report["per_episode"]
        ],
    )

    zone_kind = {z.id: z.kind for z in scenario.zones}
    zone_rows = []
    for i in range(args.episodes):
        _, m = episode_rollout(
            policy, scenario, metrics.episode_seed(args.seed, i), collect=False,
            cfg=env_cfg, greedy=True,
        )
        for zid in sorted(m.zone_energy_sum):
            e_sum = m.zone_energy_sum[zid]
            cum = 10.0 * math.log10(e_sum) - 35.56 if e_sum > 0 else None
            inc = m.zone_increase_db[zid]
            zone_rows.append(
                [i, zid, zone_kind[zid], m.zone_ambient_db[zid], repr(e_sum), cum, inc]
            )
    _write_csv(
        out_dir / "zones.csv",
        ["episode", "zone_id", "kind", "ambient_db", "energy_sum", "cumulative_db", "increase_db"],
        zone_rows,
    )

    # plot-data series and their rendered figures
    _write_csv(
        out_dir / "plotdata_alt_hist.csv",
        ["level_ft", "mean_occupancy"],
        [[l, o] for l, o in zip(levels, report["mean_altitude_occupancy"])],
    )
    noise_stats = report["metrics"]["network_total_increase_db"]
    _write_csv(
        out_dir / "plotdata_noise_box.csv",
        ["stat", "value"],
        [[k, noise_stats[k]] for k in ("min", "q1", "median", "q3", "max", "mean")],
    )
    _write_csv(
        out_dir / "plotdata_los_vs_noise.csv",
        ["episode", "los_event_count", "network_total_increase_db"],
        [
            [r["episode"], r["los_event_count"], r["network_total_increase_db"]]
            for r in report["per_episode"]
        ],
    )
    figs = out_dir / "figures"
    plots.plot_altitude_occupancy(report["mean_altitude_occupancy"], levels, figs / "altitude_occupancy.png")
    noise_vals = [
        r["network_total_increase_db"]
        for r in report["per_episode"]
        if r["network_total_increase_db"] is not None
    ]
    if noise_vals:
        plots.plot_noise_box(noise_vals, figs / "noise_box.png")
        plots.plot_los_vs_noise(
            [r["los_event_count"] for r in report["per_episode"] if r["network_total_increase_db"] is not None],
            noise_vals,
            figs / "los_vs_noise.png",
        )

    if args.trace:
        episode_rollout(
            policy, scenario, metrics.episode_seed(args.seed, 0), collect=False,
            cfg=env_cfg, greedy=True, trace_path=out_dir / "trace_episode0.csv",
        )
    mstats = report["metrics"]
    print(
        f"evaluated {args.episodes} episodes: mean LOS {mstats['los_event_count']['mean']}, "
        f"mean noise increase {mstats['network_total_increase_db']['mean']} dB "
        f"-> {out_dir / 'aggregate.json'}"
    )
    return 0


def _parse_weights(items: list[str]) -> list[tuple[float, float, float]]:
    grid = []
    for item in items:
        parts = item.split(",")
        if len(parts) != 3:
            raise ConfigError(f"--weights expects rho_noise,rho_sep,rho_energy; got {item!r}")
        grid.append(tuple(float(x) for x in parts))
    return grid


def cmd_sweep(args: argparse.Namespace) -> int:
    env_cfg, ppo_cfg, resolved = resolve_configs(args)
    scenario = _load_scenario_arg(args)
    grid = _parse_weights(args.weights or [])
    out_dir = _prepare_out_dir(_resolve_out(args), args.force)
    _write_resolved(
        out_dir, resolved, "sweep",
        {"scenario": str(args.scenario or "bundled"), "seed": args.seed,
         "episodes": args.episodes, "grid": [list(g) for g in grid]},
    )
    rows = metrics.sweep(
        grid, scenario, ppo_cfg, env_cfg,
        n_episodes=args.episodes, seed=args.seed,
        allow_any=args.allow_any_weights, out_dir=out_dir,
    )
    header = ["rho_noise", "rho_sep", "rho_energy", "mean_los_events",
              "mean_noise_increase_db", "mean_altitude_changes"]
    _write_csv(out_dir / "tradeoff.csv", header, [[r[h] for h in header] for r in rows])
    if rows:
        plots.plot_tradeoff(
            rows, "mean_noise_increase_db", "mean_los_events", "rho_noise",
            out_dir / "figures" / "tradeoff_los_vs_noise.png",
            "Mean noise increase (dB)", "Mean LOS events",
        )
    print(f"swept {len(rows)} weight settings -> {out_dir / 'tradeoff.csv'}")
    return 0


def cmd_report_energy(args: argparse.Namespace) -> int:
    scenario = _load_scenario_arg(args)
    out_dir = _prepare_out_dir(_resolve_out(args), args.force)
    net = scenario.network
    levels = net.altitude_levels_ft
    rows = []
    ratios_by_alt: dict[float, list[float]] = {l: [] for l in levels if l != levels[0]}
    for od in net.od_pairs:
        dist_m = sum(net.corridor_length_m(c) for c in od.corridors)
        dist_ft = dist_m / 0.3048
        route_id = f"{od.origin}->{od.destination}"
        for alt in levels:
            try:
                me = energy.mission_energy(dist_ft, alt)
            except energy.RouteTooShort:
                continue
            try:
                ratio = energy.extra_energy_ratio(dist_ft, alt)
            except energy.RouteTooShort:
                ratio = None
            if ratio is not None and alt != levels[0]:
                ratios_by_alt[alt].append(ratio)
            rows.append(
                [route_id, round(dist_ft, 1), alt,
                 me.e_hover_j / 1e6, me.e_climb_j / 1e6, me.e_cruise_j / 1e6,
                 me.e_descent_j / 1e6, me.e_total_j / 1e6, ratio]
            )
    _write_csv(
        out_dir / "energy.csv",
        ["route_id", "distance_ft", "alt_ft", "e_hover_mj", "e_climb_mj",
         "e_cruise_mj", "e_descent_mj", "e_total_mj", "extra_ratio"],
        rows,
    )
    conf = energy.conformance_report()
    (out_dir / "conformance.json").write_text(json.dumps(conf, indent=2, sort_keys=True))
    populated = {alt: v for alt, v in ratios_by_alt.items() if v}
    if populated:
        plots.plot_extra_energy_hist(populated, out_dir / "figures" / "extra_energy_hist.png")
    print(
        f"energy report for {len(net.od_pairs)} routes -> {out_dir / 'energy.csv'} "
        f"(cruise-power deviation {conf['cruise_power_abs_dev_kw']:.1f} kW vs published, documented)"
    )
    return 0


def cmd_report_noise(args: argparse.Namespace) -> int:
    env_cfg, _ppo_cfg, _resolved = resolve_configs(args)
    scenario = _load_scenario_arg(args)
    try:
        policy, _desc = _policy_from_args(args)
    except ConfigError:
        policy = ConstantPolicy(MAINTAIN)  # default baseline exposure
    out_dir = _prepare_out_dir(_resolve_out(args), args.force)
    _, m = episode_rollout(policy, scenario, args.seed, collect=False, cfg=env_cfg, greedy=True)
    zone_kind = {z.id: z.kind for z in scenario.zones}
    rows = []
    for zid in sorted(m.zone_energy_sum):
        e_sum = m.zone_energy_sum[zid]
        cum = 10.0 * math.log10(e_sum) - 35.56 if e_sum > 0 else None
        rows.append([zid, zone_kind[zid], m.zone_ambient_db[zid], cum, m.zone_increase_db[zid]])
    _write_csv(
        out_dir / "noise_zones.csv",
        ["zone_id", "kind", "ambient_db", "cumulative_db", "increase_db"],
        rows,
    )
    exposed = [(zid, inc) for zid, _k, _a, _c, inc in rows if inc is not None]
    if exposed:
        plots.plot_zone_increase([z for z, _ in exposed], [v for _, v in exposed],
                                 out_dir / "figures" / "zone_increase.png")
    print(f"noise report over {len(rows)} zones -> {out_dir / 'noise_zones.csv'}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quietskies",
        description="UAM corridor traffic simulator and altitude-policy RL toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", help="scenario JSON path (default: bundled synthetic network)")
        p.add_argument("--out", help=f"output location (or set {ENV_OUT})")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")
        p.add_argument("--config", help="run-config JSON file")

    g = sub.add_parser("gen-scenario", help="write a synthetic scenario file")
    g.add_argument("--vertiports", type=int, default=10)
    g.add_argument("--corridors", type=int, default=19)
    g.add_argument("--od-pairs", dest="od_pairs", type=int, default=28)
    g.add_argument("--flights", type=int, default=136)
    g.add_argument("--extent-m", dest="extent_m", type=float, default=20000.0)
    g.add_argument("--headway-s", dest="headway_s", type=float, default=60.0)
    g.add_argument("--ambient-db", dest="ambient_db", type=float, default=60.0)
    g.add_argument("--seed", type=int, default=7)
    g.add_argument("--out", help=f"output scenario path (or set {ENV_OUT})")
    g.add_argument("--force", action="store_true")
    g.set_defaults(func=cmd_gen_scenario)

    t = sub.add_parser("train", help="train a policy with the shared-parameter PPO loop")
    add_common(t)
    t.add_argument("--iterations", type=int, default=None)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--workers", type=int, default=None, help="environment instances (parallel sims)")
    t.add_argument("--rho-noise", dest="rho_noise", type=float, default=None)
    t.add_argument("--rho-sep", dest="rho_sep", type=float, default=None)
    t.add_argument("--rho-energy", dest="rho_energy", type=float, default=None)
    t.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    t.add_argument("--hidden", type=int, default=None)
    t.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    t.add_argument("--checkpoint-interval", dest="checkpoint_interval", type=int, default=None)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint over test episodes")
    add_common(e)
    e.add_argument("--checkpoint", help="parameter checkpoint to evaluate")
    e.add_argument("--baseline", choices=sorted(BASELINES), help="constant-action baseline instead")
    e.add_argument("--episodes", type=int, default=100)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--trace", action="store_true", help="write a per-step trace of episode 0")
    e.add_argument("--rho-noise", dest="rho_noise", type=float, default=None)
    e.add_argument("--rho-sep", dest="rho_sep", type=float, default=None)
    e.add_argument("--rho-energy", dest="rho_energy", type=float, default=None)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="train+evaluate one policy per reward-weight triple")
    add_common(s)
    s.add_argument("--weights", action="append",
                   help="rho_noise,rho_sep,rho_energy (repeatable)")
    s.add_argument("--episodes", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--iterations", type=int, default=None)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--allow-any-weights", dest="allow_any_weights", action="store_true",
                   help="accept triples outside the pairwise design")
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("report", help="emit module reports (CSV plus figures)")
    rsub = r.add_subparsers(dest="report_kind", required=True)
    re_ = rsub.add_parser("energy", help="per-route mission energy across the flight levels")
    add_common(re_)
    re_.set_defaults(func=cmd_report_energy)
    rn = rsub.add_parser("noise", help="per-zone cumulative noise for one episode")
    add_common(rn)
    rn.add_argument("--checkpoint", help="policy checkpoint (default: always-maintain baseline)")
    rn.add_argument("--baseline", choices=sorted(BASELINES))
    rn.add_argument("--seed", type=int, default=0)
    rn.set_defaults(func=cmd_report_noise)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ParseError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
