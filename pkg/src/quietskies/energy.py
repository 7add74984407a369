"""Mission energy model for a tiltrotor-class eVTOL: hover, climb, cruise,
descent segment powers and the extra-energy-vs-cruise-altitude analysis.

The flight profile is vertical takeoff (hover leg to 250 ft), constant-angle
climb to the cruise altitude, level cruise, constant-angle descent, and a
vertical landing hover leg. Forces and powers are computed in SI; ft inputs
are converted at exactly 0.3048 m/ft. Air density follows a linear fit between
sea level and 10,000 ft.

Segment powers:

    P_hover  = (m*g/eta_h) * sqrt(delta / (2*rho0))
    P_climb  = (V_climb/eta_c) * (m*g*sin(gamma) + D(rho_mid, V_climb))
    P_cruise = (V_cruise/eta_r) * D(rho(h), V_cruise)
    P_descent = descent_power_fraction * P_cruise

with drag D(rho, V) = q*S*C_D0 + (m*g)^2 / (4*C_D0*(L/D)max^2 * q*S),
q = rho*V^2/2, and rho_mid the density at the climb's mid altitude
(h - 250)/2 + 250 ft. Climb speed is ROC/sin(gamma); the horizontal distance
consumed by climb plus descent at a 10 deg path angle and 1000 ft/min is
11.34*(h - 250) ft.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import OutOfRange

M_PER_FT = 0.3048
RHO_SEA_LEVEL = 1.225  # kg/m^3
RHO_10000_FT = 0.9046  # kg/m^3


class RouteTooShort(Exception):
    """Route shorter than the climb-plus-descent footprint at this altitude."""


@dataclass(frozen=True)
class EnergyParams:
    mass_kg: float = 1800.0
    g: float = 9.81  # m/s^2
    disk_loading: float = 580.0  # N/m^2
    eta_hover: float = 0.75  # reproduces the published hover power; prose-quoted 0.7 does not
    eta_climb: float = 0.75
    eta_cruise: float = 0.8
    ld_max: float = 20.0
    cd0: float = 0.03
    ref_area_m2: float = 30.0
    flight_path_angle_deg: float = 10.0
    roc_ftpm: float = 1000.0
    v_cruise_ftps: float = 135.0
    hover_leg_ft: float = 250.0
    hover_leg_duration_s: float = 30.0  # per leg; takeoff and landing each
    descent_power_fraction: float = 0.4

    def __post_init__(self):
        for name in ("eta_hover", "eta_climb", "eta_cruise"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {v}")
        for name in (
            "mass_kg", "g", "disk_loading", "ld_max", "cd0", "ref_area_m2",
            "flight_path_angle_deg", "roc_ftpm", "v_cruise_ftps",
            "hover_leg_ft", "hover_leg_duration_s", "descent_power_fraction",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def gamma_rad(self) -> float:
        return math.radians(self.flight_path_angle_deg)

    @property
    def v_climb_ftps(self) -> float:
        # ROC ft/min along a gamma path: V = ROC / (sin(gamma) * 60)
        return self.roc_ftpm / (math.sin(self.gamma_rad) * 60.0)


@dataclass(frozen=True)
class MissionEnergy:
    e_hover_j: float
    e_climb_j: float
    e_cruise_j: float
    e_descent_j: float
    cruise_alt_ft: float
    route_distance_ft: float

    @property
    def e_total_j(self) -> float:
        return self.e_hover_j + self.e_climb_j + self.e_cruise_j + self.e_descent_j


def air_density(alt_ft: float) -> float:
    """Linear density model, 1.225 kg/m^3 at 0 ft to 0.9046 kg/m^3 at 10,000 ft."""
    if not 0.0 <= alt_ft <= 10000.0:
        raise OutOfRange(f"altitude {alt_ft} ft outside density model range [0, 10000] ft")
    return RHO_SEA_LEVEL + (RHO_10000_FT - RHO_SEA_LEVEL) * (alt_ft / 10000.0)


def _drag_n(p: EnergyParams, rho: float, v_mps: float) -> float:
    # parasite + induced, with K = 1 / (4*C_D0*(L/D)max^2)
    q_s = 0.5 * rho * v_mps * v_mps * p.ref_area_m2
    mg = p.mass_kg * p.g
    return q_s * p.cd0 + (mg * mg) / (4.0 * p.cd0 * p.ld_max * p.ld_max * q_s)


def hover_power(p: EnergyParams | None = None) -> float:
    """Momentum-theory hover power in watts, at sea-level density."""
    p = p or EnergyParams()
    return (p.mass_kg * p.g / p.eta_hover) * math.sqrt(p.disk_loading / (2.0 * RHO_SEA_LEVEL))


def climb_power(cruise_alt_ft: float, p: EnergyParams | None = None) -> float:
    """Climb-segment power in watts, using mid-climb air density."""
    p = p or EnergyParams()
    if cruise_alt_ft <= p.hover_leg_ft:
        raise OutOfRange(f"cruise altitude {cruise_alt_ft} ft not above hover leg {p.hover_leg_ft} ft")
    mid_alt_ft = (cruise_alt_ft - p.hover_leg_ft) / 2.0 + p.hover_leg_ft
    rho_mid = air_density(mid_alt_ft)
    v = p.v_climb_ftps * M_PER_FT
    thrust = p.mass_kg * p.g * math.sin(p.gamma_rad) + _drag_n(p, rho_mid, v)
    return (v / p.eta_climb) * thrust


def cruise_power(alt_ft: float, p: EnergyParams | None = None) -> float:
    """Cruise-segment power in watts at the given altitude's density."""
    p = p or EnergyParams()
    v = p.v_cruise_ftps * M_PER_FT
    return (v / p.eta_cruise) * _drag_n(p, air_density(alt_ft), v)


def descent_power(alt_ft: float, p: EnergyParams | None = None) -> float:
    """Descent-segment power: a fixed fraction of cruise power."""
    p = p or EnergyParams()
    return p.descent_power_fraction * cruise_power(alt_ft, p)


def climb_descent_distance_ft(cruise_alt_ft: float, p: EnergyParams | None = None) -> float:
    """Horizontal distance consumed by the climb and descent segments, in ft."""
    p = p or EnergyParams()
    horiz_ftps = p.roc_ftpm / (math.tan(p.gamma_rad) * 60.0)
    t_one_leg_s = (cruise_alt_ft - p.hover_leg_ft) / p.roc_ftpm * 60.0
    return 2.0 * horiz_ftps * t_one_leg_s


def mission_energy(
    route_distance_ft: float, cruise_alt_ft: float, p: EnergyParams | None = None
) -> MissionEnergy:
    """Segment energies in joules for a fixed-cruise-altitude mission."""
    p = p or EnergyParams()
    d_cruise_ft = route_distance_ft - climb_descent_distance_ft(cruise_alt_ft, p)
    if d_cruise_ft <= 0.0:
        raise RouteTooShort(
            f"route {route_distance_ft} ft leaves no cruise segment at {cruise_alt_ft} ft"
        )
    t_leg_s = (cruise_alt_ft - p.hover_leg_ft) / p.roc_ftpm * 60.0  # climb == descent duration
    p_cruise = cruise_power(cruise_alt_ft, p)
    return MissionEnergy(
        e_hover_j=hover_power(p) * 2.0 * p.hover_leg_duration_s,
        e_climb_j=climb_power(cruise_alt_ft, p) * t_leg_s,
        e_cruise_j=p_cruise * (d_cruise_ft / p.v_cruise_ftps),
        e_descent_j=p.descent_power_fraction * p_cruise * t_leg_s,
        cruise_alt_ft=cruise_alt_ft,
        route_distance_ft=route_distance_ft,
    )


def extra_energy_ratio(
    route_distance_ft: float,
    alt_ft: float,
    p: EnergyParams | None = None,
    baseline_alt_ft: float = 1000.0,
) -> float:
    """Fractional extra total energy of cruising at alt_ft vs the baseline level."""
    p = p or EnergyParams()
    e = mission_energy(route_distance_ft, alt_ft, p).e_total_j
    e0 = mission_energy(route_distance_ft, baseline_alt_ft, p).e_total_j
    return e / e0 - 1.0


# published figures the defaults are expected to reproduce, and the one they
# are known not to (cruise power; the printed formula gives ~57.8 kW, the
# narrative 40.8 kW is not recoverable from the stated parameters)
PUBLISHED_HOVER_KW = 362.3
PUBLISHED_CLIMB_1000FT_KW = 154.1
PUBLISHED_E_HOVER_MJ = 21.7
PUBLISHED_CRUISE_1000FT_KW = 40.8


def conformance_report(p: EnergyParams | None = None) -> dict:
    """Computed segment values next to their published counterparts.

    The cruise-power row records a known deviation: the printed cruise formula
    evaluated with the stated parameters does not reproduce the published
    40.8 kW. It is reported, not corrected.
    """
    p = p or EnergyParams()
    hover_kw = hover_power(p) / 1e3
    climb_kw = climb_power(1000.0, p) / 1e3
    cruise_kw = cruise_power(1000.0, p) / 1e3
    e_hover_mj = hover_power(p) * 2.0 * p.hover_leg_duration_s / 1e6
    return {
        "hover_power_kw": hover_kw,
        "hover_power_published_kw": PUBLISHED_HOVER_KW,
        "hover_power_abs_dev_kw": abs(hover_kw - PUBLISHED_HOVER_KW),
        "e_hover_mj": e_hover_mj,
        "e_hover_published_mj": PUBLISHED_E_HOVER_MJ,
        "e_hover_abs_dev_mj": abs(e_hover_mj - PUBLISHED_E_HOVER_MJ),
        "climb_power_1000ft_kw": climb_kw,
        "climb_power_published_kw": PUBLISHED_CLIMB_1000FT_KW,
        "climb_power_abs_dev_kw": abs(climb_kw - PUBLISHED_CLIMB_1000FT_KW),
        "cruise_power_1000ft_kw": cruise_kw,
        "cruise_power_published_kw": PUBLISHED_CRUISE_1000FT_KW,
        "cruise_power_abs_dev_kw": abs(cruise_kw - PUBLISHED_CRUISE_1000FT_KW),
        "cruise_power_deviation_documented": True,
    }
