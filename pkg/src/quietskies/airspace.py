"""Corridor-network data model, scenario file I/O, synthetic generation, spatial queries.

Distances are planar meters except altitudes, which are feet. A corridor is an
undirected straight segment between two vertiports with a canonical orientation
(a -> b); every corridor supports both traversal directions, so a network with
19 corridors carries 38 directional links. Each corridor and each vertiport
owns exactly one noise zone.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ParseError, ValidationError

DEFAULT_LEVELS_FT = (1000.0, 1500.0, 2000.0, 2500.0, 3000.0)
DEFAULT_AMBIENT_DB = 60.0
DEFAULT_CORRIDOR_HALF_WIDTH_M = 250.0
DEFAULT_VERTIPORT_RADIUS_M = 300.0
DEFAULT_HEADWAY_S = 60.0

CORRIDOR_LEN_MIN_M = 2000.0
CORRIDOR_LEN_MAX_M = 15000.0


class InfeasibleTopology(Exception):
    """Network constraints could not be met after bounded retries."""


class NoZone(Exception):
    """A position claims to be off-network: a simulator bug, not a user error."""


@dataclass(frozen=True)
class Vertiport:
    id: str
    x_m: float
    y_m: float


@dataclass(frozen=True)
class Corridor:
    """Undirected corridor with canonical orientation a -> b."""

    id: str
    a: str
    b: str


@dataclass(frozen=True)
class OdPair:
    origin: str
    destination: str
    corridors: tuple[str, ...]


@dataclass(frozen=True)
class Zone:
    """Noise zone owned by one corridor or one vertiport.

    extent_m is the lateral half-width for corridor zones and the disc radius
    for vertiport zones.
    """

    id: str
    kind: str  # "corridor" | "vertiport"
    ref: str
    extent_m: float
    ambient_db: float


@dataclass(frozen=True)
class AirspaceNetwork:
    vertiports: tuple[Vertiport, ...]
    corridors: tuple[Corridor, ...]
    altitude_levels_ft: tuple[float, ...]
    od_pairs: tuple[OdPair, ...]

    def vertiport(self, vid: str) -> Vertiport:
        return self._vertiport_index()[vid]

    def corridor(self, cid: str) -> Corridor:
        return self._corridor_index()[cid]

    def _vertiport_index(self) -> dict[str, Vertiport]:
        idx = self.__dict__.get("_vp_idx")
        if idx is None:
            idx = {v.id: v for v in self.vertiports}
            self.__dict__["_vp_idx"] = idx
        return idx

    def _corridor_index(self) -> dict[str, Corridor]:
        idx = self.__dict__.get("_co_idx")
        if idx is None:
            idx = {c.id: c for c in self.corridors}
            self.__dict__["_co_idx"] = idx
        return idx

    def corridor_endpoints_m(self, cid: str) -> tuple[np.ndarray, np.ndarray]:
        c = self.corridor(cid)
        pa, pb = self.vertiport(c.a), self.vertiport(c.b)
        return np.array([pa.x_m, pa.y_m]), np.array([pb.x_m, pb.y_m])

    def corridor_length_m(self, cid: str) -> float:
        pa, pb = self.corridor_endpoints_m(cid)
        return float(np.hypot(*(pb - pa)))

    @property
    def n_directional_links(self) -> int:
        # every corridor is flyable in both directions
        return 2 * len(self.corridors)

    def od_pair(self, origin: str, destination: str) -> OdPair:
        for od in self.od_pairs:
            if od.origin == origin and od.destination == destination:
                return od
        raise KeyError(f"no O-D pair {origin}->{destination}")


@dataclass(frozen=True)
class SimParams:
    timestep_s: float = 1.0
    max_episode_steps: int = 3600
    headway_s: float = DEFAULT_HEADWAY_S
    ground_speed_mps: float = 67.0
    vertical_rate_ftpm: float = 1000.0
    vertical_phase_s: float = 30.0
    rng_seed: int = 0


@dataclass(frozen=True)
class Flight:
    id: str
    origin: str
    destination: str
    takeoff_s: float


@dataclass(frozen=True)
class Scenario:
    network: AirspaceNetwork
    zones: tuple[Zone, ...]
    flights: tuple[Flight, ...]
    sim: SimParams

    def zone_for(self, kind: str, ref: str) -> Zone:
        idx = self.__dict__.get("_zone_idx")
        if idx is None:
            idx = {(z.kind, z.ref): z for z in self.zones}
            self.__dict__["_zone_idx"] = idx
        return idx[(kind, ref)]


# ---------------------------------------------------------------------------
# geometry helpers


def _point_segment_distance_m(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.hypot(*(p - a)))
    t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.hypot(*(p - (a + t * ab))))


def _orient(p: np.ndarray, q: np.ndarray, r: np.ndarray) -> float:
    return float((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))


def _on_segment(p: np.ndarray, q: np.ndarray, r: np.ndarray) -> bool:
    return (
        min(p[0], r[0]) - 1e-9 <= q[0] <= max(p[0], r[0]) + 1e-9
        and min(p[1], r[1]) - 1e-9 <= q[1] <= max(p[1], r[1]) + 1e-9
    )


def segments_intersect(
    a1: np.ndarray, a2: np.ndarray, b1: np.ndarray, b2: np.ndarray
) -> bool:
    """Segment intersection including shared endpoints and collinear overlap."""
    d1 = _orient(b1, b2, a1)
    d2 = _orient(b1, b2, a2)
    d3 = _orient(a1, a2, b1)
    d4 = _orient(a1, a2, b2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    if abs(d1) < 1e-9 and _on_segment(b1, a1, b2):
        return True
    if abs(d2) < 1e-9 and _on_segment(b1, a2, b2):
        return True
    if abs(d3) < 1e-9 and _on_segment(a1, b1, a2):
        return True
    if abs(d4) < 1e-9 and _on_segment(a1, b2, a2):
        return True
    return False


def corridor_intersections(network: AirspaceNetwork) -> dict[str, frozenset[str]]:
    """Map corridor id -> ids of corridors its segment intersects.

    Symmetric; a corridor never lists itself. Shared vertiport endpoints count
    as intersections.
    """
    ends = {c.id: network.corridor_endpoints_m(c.id) for c in network.corridors}
    ids = [c.id for c in network.corridors]
    out: dict[str, set[str]] = {cid: set() for cid in ids}
    for i, ci in enumerate(ids):
        for cj in ids[i + 1 :]:
            if segments_intersect(*ends[ci], *ends[cj]):
                out[ci].add(cj)
                out[cj].add(ci)
    return {cid: frozenset(s) for cid, s in out.items()}


def zone_of(
    scenario: Scenario,
    position_m: tuple[float, float] | np.ndarray,
    corridor_id: str | None = None,
    vertiport_id: str | None = None,
) -> str:
    """Zone id for an aircraft's current position given its phase context.

    Enroute aircraft pass their corridor id; aircraft in a vertical phase pass
    their vertiport id. Raises NoZone when neither context resolves or the
    position falls outside the claimed zone geometry.
    """
    p = np.asarray(position_m, dtype=float)
    if vertiport_id is not None:
        zone = scenario.zone_for("vertiport", vertiport_id)
        vp = scenario.network.vertiport(vertiport_id)
        if np.hypot(p[0] - vp.x_m, p[1] - vp.y_m) > zone.extent_m + 1e-6:
            raise NoZone(f"position {p.tolist()} outside vertiport zone {zone.id}")
        return zone.id
    if corridor_id is not None:
        zone = scenario.zone_for("corridor", corridor_id)
        a, b = scenario.network.corridor_endpoints_m(corridor_id)
        if _point_segment_distance_m(p, a, b) > zone.extent_m + 1e-6:
            raise NoZone(f"position {p.tolist()} outside corridor zone {zone.id}")
        return zone.id
    raise NoZone(f"position {p.tolist()} has no corridor or vertiport context")


# ---------------------------------------------------------------------------
# validation


def _require(cond: bool, field_name: str, msg: str) -> None:
    if not cond:
        raise ValidationError(f"{field_name}: {msg}")


def validate_network(network: AirspaceNetwork) -> None:
    vids = [v.id for v in network.vertiports]
    _require(len(set(vids)) == len(vids), "network.vertiports", "duplicate vertiport id")
    cids = [c.id for c in network.corridors]
    _require(len(set(cids)) == len(cids), "network.corridors", "duplicate corridor id")
    levels = network.altitude_levels_ft
    _require(
        all(levels[i] < levels[i + 1] for i in range(len(levels) - 1)),
        "network.altitude_levels_ft",
        "must be strictly increasing",
    )
    vset = set(vids)
    for c in network.corridors:
        _require(
            c.a in vset and c.b in vset,
            f"network.corridors[{c.id}]",
            "endpoint references unknown vertiport",
        )
        _require(c.a != c.b, f"network.corridors[{c.id}]", "self-loop corridor")
    for od in network.od_pairs:
        _require(
            od.origin in vset and od.destination in vset,
            f"network.od_pairs[{od.origin}->{od.destination}]",
            "references unknown vertiport",
        )
        _require(
            len(od.corridors) > 0,
            f"network.od_pairs[{od.origin}->{od.destination}].corridors",
            "empty corridor sequence",
        )
        here = od.origin
        for cid in od.corridors:
            _require(
                cid in network._corridor_index(),
                f"network.od_pairs[{od.origin}->{od.destination}].corridors",
                f"unknown corridor {cid}",
            )
            c = network.corridor(cid)
            _require(
                here in (c.a, c.b),
                f"network.od_pairs[{od.origin}->{od.destination}].corridors",
                f"corridor {cid} does not continue the path at {here}",
            )
            here = c.b if here == c.a else c.a
        _require(
            here == od.destination,
            f"network.od_pairs[{od.origin}->{od.destination}].corridors",
            f"path ends at {here}, not the destination",
        )


def validate_scenario(scenario: Scenario) -> None:
    validate_network(scenario.network)
    net = scenario.network
    zone_ids = [z.id for z in scenario.zones]
    _require(len(set(zone_ids)) == len(zone_ids), "zones", "duplicate zone id")
    by_owner: dict[tuple[str, str], int] = {}
    for z in scenario.zones:
        _require(z.kind in ("corridor", "vertiport"), f"zones[{z.id}].kind", "unknown kind")
        _require(
            30.0 <= z.ambient_db <= 90.0 and math.isfinite(z.ambient_db),
            f"zones[{z.id}].ambient_db",
            "must be finite and within [30, 90] dB",
        )
        _require(z.extent_m > 0, f"zones[{z.id}].extent_m", "must be positive")
        owner = (z.kind, z.ref)
        ok = (z.kind == "corridor" and z.ref in net._corridor_index()) or (
            z.kind == "vertiport" and z.ref in net._vertiport_index()
        )
        _require(ok, f"zones[{z.id}].ref", f"unknown {z.kind} {z.ref}")
        by_owner[owner] = by_owner.get(owner, 0) + 1
    for c in net.corridors:
        _require(
            by_owner.get(("corridor", c.id), 0) == 1,
            f"zones(corridor {c.id})",
            "every corridor owns exactly one zone",
        )
    for v in net.vertiports:
        _require(
            by_owner.get(("vertiport", v.id), 0) == 1,
            f"zones(vertiport {v.id})",
            "every vertiport owns exactly one zone",
        )
    fids = [f.id for f in scenario.flights]
    _require(len(set(fids)) == len(fids), "flights", "duplicate aircraft id")
    od_keys = {(od.origin, od.destination) for od in net.od_pairs}
    by_origin: dict[str, list[float]] = {}
    for f in scenario.flights:
        _require(
            (f.origin, f.destination) in od_keys,
            f"flights[{f.id}]",
            f"no O-D pair {f.origin}->{f.destination} in the network",
        )
        _require(f.takeoff_s >= 0, f"flights[{f.id}].takeoff_s", "must be nonnegative")
        by_origin.setdefault(f.origin, []).append(f.takeoff_s)
    headway = scenario.sim.headway_s
    for origin, times in by_origin.items():
        times.sort()
        for t0, t1 in zip(times, times[1:]):
            _require(
                t1 - t0 >= headway - 1e-9,
                f"flights(origin {origin}).takeoff_s",
                f"same-origin departures {t0} s and {t1} s closer than headway {headway} s",
            )
    _require(scenario.sim.timestep_s > 0, "sim.timestep_s", "must be positive")
    _require(scenario.sim.max_episode_steps > 0, "sim.max_episode_steps", "must be positive")


# ---------------------------------------------------------------------------
# scenario file format (JSON)


def scenario_to_dict(scenario: Scenario) -> dict:
    net = scenario.network
    return {
        "network": {
            "vertiports": [{"id": v.id, "x_m": v.x_m, "y_m": v.y_m} for v in net.vertiports],
            "corridors": [{"id": c.id, "a": c.a, "b": c.b} for c in net.corridors],
            "altitude_levels_ft": list(net.altitude_levels_ft),
            "od_pairs": [
                {"origin": od.origin, "destination": od.destination, "corridors": list(od.corridors)}
                for od in net.od_pairs
            ],
        },
        "zones": [
            {"id": z.id, "kind": z.kind, "ref": z.ref, "extent_m": z.extent_m, "ambient_db": z.ambient_db}
            for z in scenario.zones
        ],
        "flights": [
            {"id": f.id, "origin": f.origin, "destination": f.destination, "takeoff_s": f.takeoff_s}
            for f in scenario.flights
        ],
        "sim": {
            "timestep_s": scenario.sim.timestep_s,
            "max_episode_steps": scenario.sim.max_episode_steps,
            "headway_s": scenario.sim.headway_s,
            "ground_speed_mps": scenario.sim.ground_speed_mps,
            "vertical_rate_ftpm": scenario.sim.vertical_rate_ftpm,
            "vertical_phase_s": scenario.sim.vertical_phase_s,
            "rng_seed": scenario.sim.rng_seed,
        },
    }


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        netdoc = doc["network"]
        network = AirspaceNetwork(
            vertiports=tuple(
                Vertiport(str(v["id"]), float(v["x_m"]), float(v["y_m"]))
                for v in netdoc["vertiports"]
            ),
            corridors=tuple(
                Corridor(str(c["id"]), str(c["a"]), str(c["b"])) for c in netdoc["corridors"]
            ),
            altitude_levels_ft=tuple(float(x) for x in netdoc["altitude_levels_ft"]),
            od_pairs=tuple(
                OdPair(str(o["origin"]), str(o["destination"]), tuple(str(c) for c in o["corridors"]))
                for o in netdoc["od_pairs"]
            ),
        )
        zones = tuple(
            Zone(str(z["id"]), str(z["kind"]), str(z["ref"]), float(z["extent_m"]), float(z["ambient_db"]))
            for z in doc["zones"]
        )
        flights = tuple(
            Flight(str(f["id"]), str(f["origin"]), str(f["destination"]), float(f["takeoff_s"]))
            for f in doc["flights"]
        )
        s = doc["sim"]
        sim = SimParams(
            timestep_s=float(s["timestep_s"]),
            max_episode_steps=int(s["max_episode_steps"]),
            headway_s=float(s["headway_s"]),
            ground_speed_mps=float(s["ground_speed_mps"]),
            vertical_rate_ftpm=float(s["vertical_rate_ftpm"]),
            vertical_phase_s=float(s["vertical_phase_s"]),
            rng_seed=int(s["rng_seed"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed scenario document: {exc!r}") from exc
    scenario = Scenario(network=network, zones=zones, flights=flights, sim=sim)
    validate_scenario(scenario)
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.exists():
        raise ParseError(f"scenario file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"scenario file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"scenario file {path}: top level must be an object")
    return scenario_from_dict(doc)


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    validate_scenario(scenario)
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2, sort_keys=True))


def bundled_scenario_path(name: str = "south_austin_synthetic") -> Path:
    """Path of a scenario file shipped with the package."""
    return Path(resources.files("quietskies.data") / f"{name}.json")


# ---------------------------------------------------------------------------
# synthetic generation


def default_zones(
    network: AirspaceNetwork,
    ambient_db: float = DEFAULT_AMBIENT_DB,
    corridor_half_width_m: float = DEFAULT_CORRIDOR_HALF_WIDTH_M,
    vertiport_radius_m: float = DEFAULT_VERTIPORT_RADIUS_M,
) -> tuple[Zone, ...]:
    zones = [
        Zone(f"Z-{c.id}", "corridor", c.id, corridor_half_width_m, ambient_db)
        for c in network.corridors
    ]
    zones += [
        Zone(f"Z-{v.id}", "vertiport", v.id, vertiport_radius_m, ambient_db)
        for v in network.vertiports
    ]
    return tuple(zones)


def _shortest_path(
    adj: dict[str, list[tuple[str, str, float]]], origin: str, destination: str
) -> tuple[tuple[str, ...], float] | None:
    # Dijkstra over the undirected corridor graph; returns (corridor ids, meters).
    import heapq

    dist = {origin: 0.0}
    prev: dict[str, tuple[str, str]] = {}
    heap = [(0.0, origin)]
    seen: set[str] = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in seen:
            continue
        seen.add(u)
        if u == destination:
            break
        for v, cid, w in adj.get(u, ()):
            nd = d + w
            if nd < dist.get(v, math.inf) - 1e-12:
                dist[v] = nd
                prev[v] = (u, cid)
                heapq.heappush(heap, (nd, v))
    if destination not in dist:
        return None
    path: list[str] = []
    node = destination
    while node != origin:
        u, cid = prev[node]
        path.append(cid)
        node = u
    return tuple(reversed(path)), dist[destination]


def generate_network(
    n_vertiports: int,
    n_corridors: int,
    n_od_pairs: int,
    region_extent_m: float,
    seed: int,
    min_od_path_m: float = 4500.0,
) -> AirspaceNetwork:
    """Deterministic synthetic corridor network.

    Produces a connected network whose corridor lengths lie in [2, 15] km by
    construction. O-D pairs prefer corridor paths at least min_od_path_m long
    so that the full mission-profile energy analysis is feasible on them.
    """
    if n_corridors < n_vertiports - 1:
        raise InfeasibleTopology(
            f"n_corridors={n_corridors} cannot connect {n_vertiports} vertiports"
        )
    if n_od_pairs > n_vertiports * (n_vertiports - 1):
        raise InfeasibleTopology(f"n_od_pairs={n_od_pairs} exceeds ordered vertiport pairs")
    rng = np.random.default_rng(seed)
    min_sep = min(CORRIDOR_LEN_MIN_M, 0.35 * region_extent_m)
    for _attempt in range(64):
        pts = _sample_vertiports(rng, n_vertiports, region_extent_m, min_sep)
        if pts is None:
            continue
        cand = [
            (i, j)
            for i in range(n_vertiports)
            for j in range(i + 1, n_vertiports)
            if CORRIDOR_LEN_MIN_M <= float(np.hypot(*(pts[i] - pts[j]))) <= CORRIDOR_LEN_MAX_M
        ]
        if len(cand) < n_corridors:
            continue
        edges = _connected_edge_set(rng, n_vertiports, cand, n_corridors)
        if edges is None:
            continue
        vertiports = tuple(
            Vertiport(f"V{i + 1:02d}", float(pts[i][0]), float(pts[i][1]))
            for i in range(n_vertiports)
        )
        corridors = tuple(
            Corridor(f"C{k + 1:02d}", vertiports[i].id, vertiports[j].id)
            for k, (i, j) in enumerate(edges)
        )
        adj: dict[str, list[tuple[str, str, float]]] = {}
        for c in corridors:
            va = next(v for v in vertiports if v.id == c.a)
            vb = next(v for v in vertiports if v.id == c.b)
            w = float(np.hypot(va.x_m - vb.x_m, va.y_m - vb.y_m))
            adj.setdefault(c.a, []).append((c.b, c.id, w))
            adj.setdefault(c.b, []).append((c.a, c.id, w))
        routed = []
        for vi in vertiports:
            for vj in vertiports:
                if vi.id == vj.id:
                    continue
                sp = _shortest_path(adj, vi.id, vj.id)
                if sp is not None:
                    routed.append((vi.id, vj.id, sp[0], sp[1]))
        if len(routed) < n_od_pairs:
            continue
        long_enough = [r for r in routed if r[3] >= min_od_path_m]
        pool = long_enough if len(long_enough) >= n_od_pairs else routed
        order = rng.permutation(len(pool))
        chosen = [pool[k] for k in order[:n_od_pairs]]
        chosen.sort(key=lambda r: (r[0], r[1]))
        od_pairs = tuple(OdPair(o, d, cs) for o, d, cs, _ in chosen)
        network = AirspaceNetwork(
            vertiports=vertiports,
            corridors=corridors,
            altitude_levels_ft=DEFAULT_LEVELS_FT,
            od_pairs=od_pairs,
        )
        validate_network(network)
        return network
    raise InfeasibleTopology(
        f"could not realize {n_vertiports} vertiports / {n_corridors} corridors "
        f"in a {region_extent_m} m region"
    )


def _sample_vertiports(
    rng: np.random.Generator, n: int, extent_m: float, min_sep_m: float
) -> list[np.ndarray] | None:
    pts: list[np.ndarray] = []
    for _ in range(400 * n):
        p = rng.uniform(0.05 * extent_m, 0.95 * extent_m, size=2)
        if all(float(np.hypot(*(p - q))) >= min_sep_m for q in pts):
            pts.append(p)
            if len(pts) == n:
                return pts
    return None


def _connected_edge_set(
    rng: np.random.Generator,
    n: int,
    candidates: list[tuple[int, int]],
    n_edges: int,
) -> list[tuple[int, int]] | None:
    # randomized Kruskal for a spanning tree, then random extra candidates
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    order = rng.permutation(len(candidates))
    tree: list[tuple[int, int]] = []
    rest: list[tuple[int, int]] = []
    for k in order:
        i, j = candidates[k]
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            tree.append((i, j))
        else:
            rest.append((i, j))
    if len(tree) != n - 1:
        return None  # candidate graph disconnected
    extra = n_edges - len(tree)
    if extra > len(rest):
        return None
    edges = tree + rest[:extra]
    edges.sort()
    return edges


def generate_scenario(
    network: AirspaceNetwork,
    n_flights: int,
    seed: int,
    headway_s: float = DEFAULT_HEADWAY_S,
    ambient_db: float = DEFAULT_AMBIENT_DB,
    sim: SimParams | None = None,
) -> Scenario:
    """Deterministic flight schedule over a network's O-D pairs.

    Flights are dealt round-robin over the O-D pairs; within each origin the
    takeoff times step by the headway so same-origin departures never violate
    it.
    """
    if not network.od_pairs:
        raise ValidationError("network.od_pairs: cannot schedule flights without O-D pairs")
    rng = np.random.default_rng(seed)
    ods = list(network.od_pairs)
    order = rng.permutation(len(ods))
    next_slot: dict[str, int] = {}
    flights = []
    route_len = {
        od: sum(network.corridor_length_m(c) for c in od.corridors) for od in ods
    }
    for k in range(n_flights):
        od = ods[order[k % len(ods)]]
        slot = next_slot.get(od.origin, 0)
        next_slot[od.origin] = slot + 1
        flights.append(
            Flight(f"AC{k + 1:04d}", od.origin, od.destination, float(slot) * headway_s)
        )
    base = sim or SimParams()
    longest_m = max(route_len.values())
    last_takeoff = max(f.takeoff_s for f in flights)
    horizon = last_takeoff + 2 * base.vertical_phase_s + longest_m / base.ground_speed_mps
    max_steps = int(math.ceil(1.25 * horizon / base.timestep_s)) + 10
    scenario = Scenario(
        network=network,
        zones=default_zones(network, ambient_db=ambient_db),
        flights=tuple(flights),
        sim=replace(base, max_episode_steps=max_steps, headway_s=headway_s, rng_seed=seed),
    )
    validate_scenario(scenario)
    return scenario


def route_corridors(scenario: Scenario, flight: Flight) -> tuple[str, ...]:
    return scenario.network.od_pair(flight.origin, flight.destination).corridors


def route_length_m(scenario: Scenario, flight: Flight) -> float:
    return sum(scenario.network.corridor_length_m(c) for c in route_corridors(scenario, flight))
