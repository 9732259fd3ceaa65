"""Chain topologies of drone/HAP nodes and relay planning.

Nodes sit on a 1-D chainage along a great-circle path. Relays forward
photons without detection, so the transmittance of a cascade is the
product of its link transmittances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, NamedTuple, Sequence

from .counting import accidental_rate, effective_visibility
from .optics import WAVELENGTH_M, BeamGeometry, FiberMode, LinkBudget, total_link_budget

EARTH_RADIUS_M = 6371e3
TSIRELSON = 2.0 * math.sqrt(2.0)

Mode = Literal["distribution", "relay"]


class PlanInfeasibleError(ValueError):
    def __init__(self, message: str, constraint: str):
        super().__init__(message)
        self.constraint = constraint


@dataclass(frozen=True)
class NodeSpec:
    id: str
    kind: Literal["ground", "drone", "hap"] = "drone"
    altitude: float = 0.0
    aperture: float = 0.3
    position: float = 0.0

    def __post_init__(self):
        if self.kind not in ("ground", "drone", "hap"):
            raise ValueError(f"unknown node kind {self.kind!r}")
        if self.altitude < 0:
            raise ValueError("altitude must be nonnegative")
        if self.aperture <= 0:
            raise ValueError("aperture must be positive")

    def at(self, id: str, position: float) -> "NodeSpec":
        return NodeSpec(id, self.kind, self.altitude, self.aperture, position)


@dataclass(frozen=True)
class LinkSpec:
    a: NodeSpec
    b: NodeSpec
    distance: float
    budget: LinkBudget

    def __post_init__(self):
        if self.distance <= 0:
            raise ValueError("link distance must be positive")

    @property
    def horizon(self) -> float:
        return horizon_distance(self.a.altitude, self.b.altitude)


class Feasibility(NamedTuple):
    ok: bool
    reasons: tuple[str, ...]


class Prediction(NamedTuple):
    coincidence_rate: float
    accidental_rate: float
    v_eff: float
    abs_S: float


@dataclass(frozen=True)
class PathPlan:
    nodes: tuple[NodeSpec, ...]
    links: tuple[LinkSpec, ...]
    mode: Mode = "relay"
    predicted: Prediction | None = None
    end_to_end_db: float = field(init=False)

    def __post_init__(self):
        if self.mode not in ("distribution", "relay"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if len(self.links) != len(self.nodes) - 1 or not self.links:
            raise ValueError("a plan needs n nodes joined by n-1 links")
        if self.mode == "distribution" and len(self.links) < 2:
            raise ValueError("distribution mode needs a source node between two links")
        for i, link in enumerate(self.links):
            if link.a != self.nodes[i] or link.b != self.nodes[i + 1]:
                raise ValueError(f"link {i} does not join nodes {i} and {i + 1}")
            if link.distance > link.horizon:
                raise ValueError(f"link {i} is beyond the horizon")
        object.__setattr__(self, "end_to_end_db", sum(l.budget.total_db for l in self.links))

    @property
    def relay_count(self) -> int:
        return len(self.links) - 1

    @property
    def max_link_db(self) -> float:
        return max(l.budget.total_db for l in self.links)

    def arm_transmittances(self) -> tuple[float, float]:
        """(Alice, Bob) photon transmittances for the plan's mode.

        distribution: the source is node 1; link 0 serves Alice and the
        remaining links cascade to Bob. relay: the source is at node 0
        with Alice, and Bob's photon traverses every link.
        """
        ts = [l.budget.transmittance for l in self.links]
        if self.mode == "distribution":
            return ts[0], math.prod(ts[1:])
        return 1.0, math.prod(ts)

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "relay_count": self.relay_count,
            "nodes": [
                {"id": n.id, "kind": n.kind, "altitude_m": n.altitude,
                 "aperture_m": n.aperture, "position_m": n.position}
                for n in self.nodes
            ],
            "links": [
                {"from": l.a.id, "to": l.b.id, "distance_m": l.distance,
                 "horizon_m": l.horizon, **l.budget.as_dict()}
                for l in self.links
            ],
            "end_to_end_db": self.end_to_end_db,
        }
        if self.predicted is not None:
            out["predicted"] = self.predicted._asdict()
        return out


def horizon_distance(h1: float, h2: float, earth_radius: float = EARTH_RADIUS_M) -> float:
    """Line-of-sight limit between two altitudes (tangent rays, no refraction)."""
    if h1 < 0 or h2 < 0:
        raise ValueError("altitudes must be nonnegative")
    return math.sqrt(2 * earth_radius * h1) + math.sqrt(2 * earth_radius * h2)


def link_feasible(link: LinkSpec, max_db: float) -> Feasibility:
    reasons = []
    if link.distance > link.horizon:
        reasons.append("curvature")
    if link.budget.total_db > max_db:
        reasons.append("loss")
    return Feasibility(not reasons, tuple(reasons))


def make_link(
    a: NodeSpec,
    b: NodeSpec,
    distance: float,
    condition: str | None,
    *,
    wavelength: float = WAVELENGTH_M,
    waist: float | None = None,
    jitter: float = 0.0,
    fiber: FiberMode = FiberMode(),
    static_db: float = 0.0,
    atmosphere: dict | None = None,
) -> LinkSpec:
    geometry = BeamGeometry(a.aperture, b.aperture, wavelength, waist)
    budget = total_link_budget(geometry, distance, condition, jitter, fiber, static_db, atmosphere)
    return LinkSpec(a, b, distance, budget)


def chain_from_positions(
    positions: Sequence[float],
    node_template: NodeSpec,
    condition: str | None,
    mode: Mode = "relay",
    endpoint: NodeSpec | None = None,
    **link_kwargs,
) -> PathPlan:
    """Plan through nodes at the given chainages (meters, increasing)."""
    nodes = []
    last = len(positions) - 1
    for i, x in enumerate(positions):
        template = endpoint if endpoint is not None and i in (0, last) else node_template
        nodes.append(template.at(f"n{i}", float(x)))
    links = [
        make_link(nodes[i], nodes[i + 1], nodes[i + 1].position - nodes[i].position, condition, **link_kwargs)
        for i in range(last)
    ]
    return PathPlan(tuple(nodes), tuple(links), mode)


def plan_relay_chain(
    total_distance: float,
    node_template: NodeSpec,
    per_link_max_db: float,
    condition: str | None,
    *,
    k_max: int = 64,
    mode: Mode = "relay",
    endpoint: NodeSpec | None = None,
    **link_kwargs,
) -> PathPlan:
    """Fewest equally spaced links whose every hop meets the loss budget.

    Per-link loss increases with distance, so for a given link count equal
    spacing minimizes the worst hop.
    """
    if total_distance <= 0:
        raise ValueError("total distance must be positive")
    k_min = 2 if mode == "distribution" else 1
    binding = "loss"
    for k in range(k_min, k_max + 1):
        hop = total_distance / k
        # Only the end hops can differ (endpoint template); test each hop type once.
        hops = []
        for i in range(k):
            a = endpoint if endpoint is not None and i == 0 else node_template
            b = endpoint if endpoint is not None and i == k - 1 else node_template
            if (a, b) not in hops:
                hops.append((a, b))
        checks = [link_feasible(make_link(a, b, hop, condition, **link_kwargs), per_link_max_db) for a, b in hops]
        if all(c.ok for c in checks):
            positions = [total_distance * i / k for i in range(k + 1)]
            return chain_from_positions(positions, node_template, condition, mode, endpoint, **link_kwargs)
        binding = "curvature" if any("curvature" in c.reasons for c in checks) else "loss"
    raise PlanInfeasibleError(
        f"no chain of <= {k_max} links meets {per_link_max_db} dB per link "
        f"over {total_distance:g} m (binding constraint: {binding})",
        binding,
    )


@dataclass(frozen=True)
class SourceParams:
    pair_rate: float = 2.4e6
    bg_A: float = 0.0
    bg_B: float = 0.0
    window: float = 3e-9


def predict_end_to_end(plan: PathPlan, source: SourceParams, v_src: float) -> Prediction:
    """Closed-form coincidence rate and CHSH value for a singlet-like source.

    Singles behind a polarizer carry half the arm's pair flux; accidentals
    are summed over the four projector combinations of a setting.
    """
    eta_a, eta_b = plan.arm_transmittances()
    true_rate = source.pair_rate * eta_a * eta_b
    s_a = source.pair_rate * eta_a / 2 + source.bg_A
    s_b = source.pair_rate * eta_b / 2 + source.bg_B
    acc = 4.0 * accidental_rate(s_a, s_b, source.window)
    v_eff = effective_visibility(v_src, true_rate, acc)
    return Prediction(true_rate, acc, v_eff, TSIRELSON * v_eff)


def with_prediction(plan: PathPlan, source: SourceParams, v_src: float) -> PathPlan:
    return PathPlan(plan.nodes, plan.links, plan.mode, predict_end_to_end(plan, source, v_src))
