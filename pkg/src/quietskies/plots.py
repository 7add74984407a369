"""Figure rendering for the CLI report paths.

Kept separate from the metrics library: every function takes plain data and
writes one PNG. Uses the non-interactive matplotlib backend.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_altitude_occupancy(occupancy, levels_ft, path: Path, title: str = "Altitude occupancy"):
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.bar([f"{l / 1000:g}" for l in levels_ft], occupancy, color="#c55700")
    ax.set_xlabel("Altitude levels ($10^3$ ft)")
    ax.set_ylabel("Occupancy fraction")
    ax.set_ylim(0, 1.05)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_noise_box(values, path: Path, label: str = "Noise increase (dB)"):
    fig, ax = plt.subplots(figsize=(3.5, 4))
    ax.boxplot([values], tick_labels=["episodes"])
    ax.set_ylabel(label)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_los_vs_noise(los_counts, noise_db, path: Path):
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.scatter(noise_db, los_counts, s=18, alpha=0.7)
    ax.set_xlabel("Noise increase (dB)")
    ax.set_ylabel("LOS events")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_extra_energy_hist(ratios_by_alt: dict, path: Path):
    """Histogram of per-route extra-energy fractions, one panel per altitude."""
    alts = sorted(ratios_by_alt)
    fig, axes = plt.subplots(1, len(alts), figsize=(3.2 * len(alts), 3.2), sharey=True)
    if len(alts) == 1:
        axes = [axes]
    for ax, alt in zip(axes, alts):
        vals = 100.0 * np.asarray(ratios_by_alt[alt])
        ax.hist(vals, bins=12, color="#1f77b4", alpha=0.8)
        ax.axvline(vals.mean(), color="k", linestyle="--", linewidth=1)
        ax.set_title(f"{alt:g} ft (mean {vals.mean():.1f}%)")
        ax.set_xlabel("Extra energy (%)")
    axes[0].set_ylabel("Routes")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_zone_increase(zone_ids, increases_db, path: Path):
    fig, ax = plt.subplots(figsize=(max(4.5, 0.3 * len(zone_ids)), 3.5))
    ax.bar(zone_ids, increases_db, color="#77aa77")
    ax.set_ylabel("Noise increase (dB)")
    ax.tick_params(axis="x", rotation=90, labelsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_training_curve(iterations, mean_rewards, path: Path):
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.plot(iterations, mean_rewards, linewidth=1)
    ax.set_xlabel("Iteration")
    ax.set_ylabel("Mean transition reward")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_tradeoff(rows, x_key, y_key, label_key, path: Path, x_label: str, y_label: str):
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    xs = [r[x_key] for r in rows]
    ys = [r[y_key] for r in rows]
    ax.scatter(xs, ys, s=30)
    for r, x, y in zip(rows, xs, ys):
        ax.annotate(f"{r[label_key]:g}", (x, y), fontsize=7, xytext=(3, 3), textcoords="offset points")
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
