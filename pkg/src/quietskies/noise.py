"""Single-event noise regression, cumulative zone exposure, and the normalized
noise term used by the reward.

The single-event model is a quadratic in log10 slant distance,

    SEL(z) = c0 + c1*log10(z) + c2*log10(z)^2   [dB, z in ft, 200 <= z <= 20000]

with one coefficient row per (operational mode, measurement position)
condition. Zone exposure accumulates event energy 10^(SEL/10); the cumulative
level is 10*log10(sum) - 35.56, and the reported increase subtracts the zone's
ambient level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import OutOfRange

SEL_TO_LEQ_OFFSET_DB = 35.56
VALID_DISTANCE_FT = (200.0, 20000.0)


class EmptyAccumulator(Exception):
    """No exposure recorded; the cumulative level is undefined, not -inf."""


@dataclass(frozen=True)
class NpdCondition:
    mode: str  # "L" | "D" | "A"
    position: str  # "centerline" | "side"
    c0: float  # dB
    c1: float  # dB per log10(ft)
    c2: float  # dB per log10(ft)^2


# level flyover (L), dynamic departure (D), approach (A); fitted to the
# reference quadrotor NPD data
NPD_CONDITIONS: dict[tuple[str, str], NpdCondition] = {
    ("L", "centerline"): NpdCondition("L", "centerline", 88.09, 3.21, -2.62),
    ("L", "side"): NpdCondition("L", "side", 78.01, 7.26, -3.39),
    ("D", "centerline"): NpdCondition("D", "centerline", 84.05, 8.76, -4.18),
    ("D", "side"): NpdCondition("D", "side", 77.34, 11.34, -4.72),
    ("A", "centerline"): NpdCondition("A", "centerline", 93.35, 5.17, -2.86),
    ("A", "side"): NpdCondition("A", "side", 85.55, 6.83, -3.14),
}

MODE_L_CENTERLINE = NPD_CONDITIONS[("L", "centerline")]


def npd_sel(distance_ft: float, condition: NpdCondition = MODE_L_CENTERLINE) -> float:
    """A-weighted SEL in dB at a slant distance within the validity window."""
    lo, hi = VALID_DISTANCE_FT
    if not (lo <= distance_ft <= hi):
        raise OutOfRange(
            f"distance {distance_ft} ft outside NPD validity window [{lo}, {hi}] ft"
        )
    lg = math.log10(distance_ft)
    return condition.c0 + condition.c1 * lg + condition.c2 * lg * lg


def _default_n_max() -> float:
    return npd_sel(1000.0, MODE_L_CENTERLINE)


def _default_n_min() -> float:
    return npd_sel(3000.0, MODE_L_CENTERLINE)


@dataclass(frozen=True)
class NoiseConfig:
    """Normalization endpoints for the reward's noise term.

    Defaults evaluate the regression at the lowest and highest flight levels
    (74.14 dB at 1000 ft, 67.5748 dB at 3000 ft); the rounded published
    endpoint 67.54 dB can be set explicitly if wanted.
    """

    n_min_db: float = field(default_factory=_default_n_min)
    n_max_db: float = field(default_factory=_default_n_max)
    sel_to_leq_offset_db: float = SEL_TO_LEQ_OFFSET_DB
    valid_distance_ft: tuple[float, float] = VALID_DISTANCE_FT

    def __post_init__(self):
        if not self.n_min_db < self.n_max_db:
            raise ValueError(f"n_min_db {self.n_min_db} must be < n_max_db {self.n_max_db}")


@dataclass
class ZoneNoiseAccumulator:
    """Per-zone event-energy sum for one episode.

    energy_sum holds sum_i w_i * 10^(SEL_i/10); it is monotone nondecreasing.
    """

    zone_id: str
    ambient_db: float
    energy_sum: float = 0.0

    def add(self, sel_db: float, weight: float = 1.0) -> None:
        if weight <= 0:
            raise ValueError(f"weight must be positive, got {weight}")
        self.energy_sum += weight * 10.0 ** (sel_db / 10.0)

    def merge(self, other: "ZoneNoiseAccumulator") -> "ZoneNoiseAccumulator":
        if other.zone_id != self.zone_id:
            raise ValueError(f"cannot merge accumulators for {self.zone_id} and {other.zone_id}")
        return ZoneNoiseAccumulator(self.zone_id, self.ambient_db, self.energy_sum + other.energy_sum)


def accumulate_event(
    acc: ZoneNoiseAccumulator, sel_db: float, weight: float = 1.0
) -> ZoneNoiseAccumulator:
    """Add one weighted single-event exposure to a zone accumulator."""
    acc.add(sel_db, weight)
    return acc


def cumulative_level(acc: ZoneNoiseAccumulator) -> float:
    """Cumulative zone level in dB: 10*log10(energy_sum) - 35.56."""
    if acc.energy_sum <= 0.0:
        raise EmptyAccumulator(f"zone {acc.zone_id} has no recorded exposure")
    return 10.0 * math.log10(acc.energy_sum) - SEL_TO_LEQ_OFFSET_DB


def cumulative_increase(acc: ZoneNoiseAccumulator) -> float:
    """Cumulative noise increase over the zone's ambient level, in dB."""
    return cumulative_level(acc) - acc.ambient_db


def normalized_noise(
    altitude_ft: float,
    cfg: NoiseConfig | None = None,
    condition: NpdCondition = MODE_L_CENTERLINE,
) -> float:
    """Single-event level at the given altitude mapped to [0, 1].

    1 at the lowest (loudest) level, ~0 at the highest; clamped. The slant
    distance is the altitude AGL (receiver directly under the centerline).
    """
    cfg = cfg or NoiseConfig()
    sel = npd_sel(altitude_ft, condition)
    x = (sel - cfg.n_min_db) / (cfg.n_max_db - cfg.n_min_db)
    return min(1.0, max(0.0, x))
