"""Declarative CHSH session scenarios."""
from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from ..apt import PRESETS
from ..optics import ATMOSPHERIC_DB_PER_KM, BeamGeometry, fwhm_to_waist
from ..qstate import AnalyzerAngles
from .config import ConfigError, Section, check_sections, dump_ini, parse_ini

BUILTIN_SCENARIOS = ("lab", "field-day", "field-clear-night", "field-rainy-night", "widearea-hap")
STATIONS = ("alice", "bob")


@dataclass(frozen=True)
class SourceSpec:
    pair_rate: float = 2.4e6
    v_src: float = 0.974


@dataclass(frozen=True)
class StationLink:
    """One arm, source to station. Absent terms contribute no loss."""

    distance: float = 0.0
    condition: str | None = None
    aperture: float | None = None
    fwhm: float | None = None
    waist: float | None = None
    static_db: float = 0.0
    apt_preset: str | None = None
    mode_field_diameter: float = 5e-6
    residual_rotation_deg: float = 0.0
    dark_counts: float = 0.0
    background_per_lux: float = 0.0

    def geometry(self) -> BeamGeometry | None:
        if self.aperture is None:
            return None
        waist = self.waist
        if waist is None and self.fwhm is not None:
            waist = fwhm_to_waist(self.fwhm)
        return BeamGeometry(self.aperture, self.aperture, waist=waist)

    def background(self, illuminance_lx: float) -> float:
        return self.dark_counts + self.background_per_lux * illuminance_lx


@dataclass(frozen=True)
class CountingSpec:
    window: float = 3e-9
    integration: float = 1.0
    illuminance_lx: float = 0.0


@dataclass(frozen=True)
class AptRunSpec:
    duration: float = 1.0
    dt: float = 2e-4


@dataclass(frozen=True)
class Scenario:
    name: str
    source: SourceSpec = SourceSpec()
    alice: StationLink = StationLink()
    bob: StationLink = StationLink()
    counting: CountingSpec = CountingSpec()
    angles_deg: tuple[float, float, float, float] = (0.0, 45.0, 22.5, 67.5)
    apt: AptRunSpec = AptRunSpec()
    seed: int = 0
    trials: int = 1
    description: str = ""

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not 0.0 <= self.source.v_src <= 1.0:
            raise ConfigError("v_src must lie in [0, 1]")
        for station in STATIONS:
            link = getattr(self, station)
            if link.apt_preset is not None and link.apt_preset not in PRESETS:
                raise ConfigError(f"[link.{station}] apt_preset '{link.apt_preset}' does not exist")
            if link.condition is not None and link.condition not in ATMOSPHERIC_DB_PER_KM:
                raise ConfigError(f"[link.{station}] unknown condition '{link.condition}'")
            if link.apt_preset is not None and link.distance <= 0:
                raise ConfigError(f"[link.{station}] apt_preset needs a positive distance")
            if link.aperture is not None and link.distance <= 0:
                raise ConfigError(f"[link.{station}] aperture needs a positive distance")
        self.angles  # validates the range

    @property
    def angles(self) -> AnalyzerAngles:
        try:
            return AnalyzerAngles(*(math.radians(a) for a in self.angles_deg))
        except ValueError as exc:
            raise ConfigError(f"[angles] {exc}") from None

    def link(self, station: str) -> StationLink:
        return getattr(self, station)

    def with_overrides(self, seed: int | None = None, trials: int | None = None) -> "Scenario":
        data = asdict(self)
        data.update(source=self.source, alice=self.alice, bob=self.bob, counting=self.counting, apt=self.apt)
        if seed is not None:
            data["seed"] = seed
        if trials is not None:
            data["trials"] = trials
        return Scenario(**data)

    def to_sections(self) -> dict[str, dict]:
        sections = {
            "scenario": {"name": self.name, "description": self.description,
                         "seed": self.seed, "trials": self.trials},
            "source": asdict(self.source),
            "counting": asdict(self.counting),
            "angles": dict(zip(("a_deg", "a_prime_deg", "b_deg", "b_prime_deg"), self.angles_deg)),
            "apt": asdict(self.apt),
        }
        for station in STATIONS:
            sections[f"link.{station}"] = asdict(self.link(station))
        return sections

    def dumps(self) -> str:
        return dump_ini(self.to_sections())

    def config_hash(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()


def _float(raw: str) -> float:
    value = float(raw)
    if not math.isfinite(value):
        raise ValueError("must be finite")
    return value


def _nonneg(raw: str) -> float:
    value = _float(raw)
    if value < 0:
        raise ValueError("must be nonnegative")
    return value


def _positive(raw: str) -> float:
    value = _float(raw)
    if value <= 0:
        raise ValueError("must be positive")
    return value


def _station(parser, name: str, source: str) -> StationLink:
    sec = Section(parser, f"link.{name}", source)
    link = StationLink(
        distance=sec.get("distance", _nonneg, 0.0),
        condition=sec.get_optional_str("condition"),
        aperture=sec.get("aperture", _positive_or_none, None),
        fwhm=sec.get("fwhm", _positive_or_none, None),
        waist=sec.get("waist", _positive_or_none, None),
        static_db=sec.get("static_db", _nonneg, 0.0),
        apt_preset=sec.get_optional_str("apt_preset"),
        mode_field_diameter=sec.get("mode_field_diameter", _positive, 5e-6),
        residual_rotation_deg=sec.get("residual_rotation_deg", _float, 0.0),
        dark_counts=sec.get("dark_counts", _nonneg, 0.0),
        background_per_lux=sec.get("background_per_lux", _nonneg, 0.0),
    )
    sec.finish()
    return link


def _positive_or_none(raw: str):
    return None if raw.lower() == "none" else _positive(raw)


def _int(raw: str) -> int:
    return int(raw)


def loads_scenario(text: str, source: str = "<string>") -> Scenario:
    parser = parse_ini(text, source)
    allowed = {"scenario", "source", "counting", "angles", "apt", "link.alice", "link.bob"}
    check_sections(parser, allowed.__contains__, source)
    head = Section(parser, "scenario", source)
    name = head.get("name")
    description = head.get("description", str, "")
    seed = head.get("seed", _int, 0)
    trials = head.get("trials", _int, 1)
    head.finish()

    src = Section(parser, "source", source)
    source_spec = SourceSpec(src.get("pair_rate", _nonneg, 2.4e6), src.get("v_src", _float, 0.974))
    src.finish()

    cnt = Section(parser, "counting", source)
    counting = CountingSpec(
        window=cnt.get("window", _positive, 3e-9),
        integration=cnt.get("integration", _positive, 1.0),
        illuminance_lx=cnt.get("illuminance_lx", _nonneg, 0.0),
    )
    cnt.finish()

    ang = Section(parser, "angles", source)
    angles = tuple(
        ang.get(k, _float, d)
        for k, d in (("a_deg", 0.0), ("a_prime_deg", 45.0), ("b_deg", 22.5), ("b_prime_deg", 67.5))
    )
    ang.finish()

    ap = Section(parser, "apt", source)
    apt = AptRunSpec(ap.get("duration", _positive, 1.0), ap.get("dt", _positive, 2e-4))
    ap.finish()

    return Scenario(
        name=name,
        source=source_spec,
        alice=_station(parser, "alice", source),
        bob=_station(parser, "bob", source),
        counting=counting,
        angles_deg=angles,
        apt=apt,
        seed=seed,
        trials=trials,
        description=description,
    )


def load_scenario(path_or_name: str | Path) -> Scenario:
    """Load a scenario file, or a built-in scenario by name."""
    path = Path(path_or_name)
    if path.is_file():
        return loads_scenario(path.read_text(), str(path))
    name = str(path_or_name)
    if name in BUILTIN_SCENARIOS:
        text = resources.files("qdrone.scenarios").joinpath(f"{name}.ini").read_text()
        return loads_scenario(text, f"<builtin {name}>")
    raise ConfigError(f"no scenario file or built-in named {name!r}; built-ins: {', '.join(BUILTIN_SCENARIOS)}")
