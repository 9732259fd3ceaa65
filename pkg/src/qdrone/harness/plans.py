"""Relay-chain plan specs and their JSON reports."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..network import (
    NodeSpec,
    PathPlan,
    SourceParams,
    link_feasible,
    plan_relay_chain,
    with_prediction,
)
from ..optics import WAVELENGTH_M, FiberMode, fwhm_to_waist
from .config import ConfigError, Section, check_sections, parse_ini

BUILTIN_PLANS = ("local-200m", "local-100m", "widearea-hap")


@dataclass(frozen=True)
class PlanSpec:
    total_distance: float
    per_link_max_db: float
    node: NodeSpec
    mode: str = "relay"
    condition: str | None = None
    endpoint: NodeSpec | None = None
    k_max: int = 64
    wavelength: float = WAVELENGTH_M
    waist: float | None = None
    jitter: float = 0.0
    static_db: float = 0.0
    source: SourceParams | None = None
    v_src: float = 0.974


def _node(parser, name: str, source: str) -> NodeSpec:
    sec = Section(parser, name, source)
    node = NodeSpec(
        id=name,
        kind=sec.get("kind", str, "drone"),
        altitude=sec.get("altitude", float, 0.0),
        aperture=sec.get("aperture", float),
    )
    sec.finish()
    return node


def loads_plan(text: str, source: str = "<string>") -> PlanSpec:
    parser = parse_ini(text, source)
    check_sections(parser, {"plan", "node", "endpoint", "source"}.__contains__, source)
    sec = Section(parser, "plan", source)
    fwhm = sec.get("fwhm", float, None)
    waist = sec.get("waist", float, None)
    if waist is None and fwhm is not None:
        waist = fwhm_to_waist(fwhm)
    kwargs = dict(
        total_distance=sec.get("total_distance", float),
        per_link_max_db=sec.get("per_link_max_db", float),
        mode=sec.get("mode", str, "relay"),
        condition=sec.get_optional_str("condition"),
        k_max=sec.get("k_max", int, 64),
        wavelength=sec.get("wavelength", float, WAVELENGTH_M),
        waist=waist,
        jitter=sec.get("jitter", float, 0.0),
        static_db=sec.get("static_db", float, 0.0),
    )
    sec.finish()
    if kwargs["mode"] not in ("relay", "distribution"):
        raise ConfigError(f"{source}: [plan] mode must be 'relay' or 'distribution'")
    try:
        node = _node(parser, "node", source)
        endpoint = _node(parser, "endpoint", source) if parser.has_section("endpoint") else None
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{source}: {exc}") from None
    src = None
    v_src = 0.974
    if parser.has_section("source"):
        s = Section(parser, "source", source)
        src = SourceParams(
            pair_rate=s.get("pair_rate", float, 2.4e6),
            bg_A=s.get("bg_a", float, 0.0),
            bg_B=s.get("bg_b", float, 0.0),
            window=s.get("window", float, 3e-9),
        )
        v_src = s.get("v_src", float, 0.974)
        s.finish()
    return PlanSpec(node=node, endpoint=endpoint, source=src, v_src=v_src, **kwargs)


def load_plan(path_or_name: str | Path) -> PlanSpec:
    path = Path(path_or_name)
    if path.is_file():
        return loads_plan(path.read_text(), str(path))
    name = str(path_or_name)
    if name in BUILTIN_PLANS:
        text = resources.files("qdrone.scenarios").joinpath(f"plan-{name}.ini").read_text()
        return loads_plan(text, f"<builtin {name}>")
    raise ConfigError(f"no plan file or built-in named {name!r}; built-ins: {', '.join(BUILTIN_PLANS)}")


def build_plan(spec: PlanSpec) -> PathPlan:
    """Raises network.PlanInfeasibleError when no chain fits."""
    plan = plan_relay_chain(
        spec.total_distance,
        spec.node,
        spec.per_link_max_db,
        spec.condition,
        k_max=spec.k_max,
        mode=spec.mode,
        endpoint=spec.endpoint,
        wavelength=spec.wavelength,
        waist=spec.waist,
        jitter=spec.jitter,
        fiber=FiberMode(),
        static_db=spec.static_db,
    )
    if spec.source is not None:
        plan = with_prediction(plan, spec.source, spec.v_src)
    return plan


def summary_lines(plan: PathPlan, max_db: float) -> list[str]:
    lines = [
        f"{plan.mode} chain: {len(plan.nodes)} nodes, {plan.relay_count} relay(s), "
        f"end-to-end {plan.end_to_end_db:.3f} dB"
    ]
    for link in plan.links:
        feas = link_feasible(link, max_db)
        status = "ok" if feas.ok else "violates " + ", ".join(feas.reasons)
        lines.append(
            f"  {link.a.id} -> {link.b.id}: {link.distance:.6g} m, {link.budget.total_db:.3f} dB "
            f"(horizon {link.horizon:.6g} m, limit {max_db:g} dB): {status}"
        )
    if plan.predicted is not None:
        p = plan.predicted
        lines.append(
            f"  predicted coincidences {p.coincidence_rate:.6g}/s, accidentals {p.accidental_rate:.6g}/s, "
            f"V_eff {p.v_eff:.4f}, |S| {p.abs_S:.4f}"
        )
    return lines


def run_plan(spec: PlanSpec) -> tuple[str, list[str]]:
    plan = build_plan(spec)
    doc = plan.to_dict()
    doc["per_link_max_db"] = spec.per_link_max_db
    doc["feasibility"] = [
        {"from": l.a.id, "to": l.b.id, **link_feasible(l, spec.per_link_max_db)._asdict()} for l in plan.links
    ]
    lines = summary_lines(plan, spec.per_link_max_db)
    doc["summary"] = lines
    return json.dumps(doc, indent=2, sort_keys=True) + "\n", lines
