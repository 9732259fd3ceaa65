"""Diffraction-loss sweeps exported as plot-ready CSV."""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ..optics import WAVELENGTH_M, BeamGeometry, aperture_sweep, distance_sweep, fwhm_to_waist, loss_table
from .config import ConfigError, Section, check_sections, parse_ini

BUILTIN_SWEEPS = ("wide-area", "local-area", "aperture-100m")


class NonMonotoneError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    kind: str  # "distance" or "aperture"
    start: float
    stop: float
    num: int
    spacing: str = "linear"
    wavelength: float = WAVELENGTH_M
    aperture: float | None = None  # distance sweeps
    fwhm: float | None = None
    waist: float | None = None
    distance: float | None = None  # aperture sweeps

    def grid(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.num)
        return np.linspace(self.start, self.stop, self.num)


def loads_sweep(text: str, source: str = "<string>") -> SweepSpec:
    parser = parse_ini(text, source)
    check_sections(parser, {"sweep"}.__contains__, source)
    sec = Section(parser, "sweep", source)
    kind = sec.get("kind")
    if kind not in ("distance", "aperture"):
        raise ConfigError(f"{source}: [sweep] kind must be 'distance' or 'aperture'")
    spec = SweepSpec(
        kind=kind,
        start=sec.get("start", float),
        stop=sec.get("stop", float),
        num=sec.get("num", int),
        spacing=sec.get("spacing", str, "linear"),
        wavelength=sec.get("wavelength", float, WAVELENGTH_M),
        aperture=sec.get("aperture", float, None),
        fwhm=sec.get("fwhm", float, None),
        waist=sec.get("waist", float, None),
        distance=sec.get("distance", float, None),
    )
    sec.finish()
    if spec.spacing not in ("linear", "log"):
        raise ConfigError(f"{source}: [sweep] spacing must be 'linear' or 'log'")
    if not 0 < spec.start < spec.stop or spec.num < 2:
        raise ConfigError(f"{source}: [sweep] need 0 < start < stop and num >= 2")
    if kind == "distance" and spec.aperture is None:
        raise ConfigError(f"{source}: [sweep] missing required field 'aperture'")
    if kind == "aperture" and spec.distance is None:
        raise ConfigError(f"{source}: [sweep] missing required field 'distance'")
    return spec


def load_sweep(path_or_name: str | Path) -> SweepSpec:
    path = Path(path_or_name)
    if path.is_file():
        return loads_sweep(path.read_text(), str(path))
    name = str(path_or_name)
    if name in BUILTIN_SWEEPS:
        text = resources.files("qdrone.scenarios").joinpath(f"sweep-{name}.ini").read_text()
        return loads_sweep(text, f"<builtin {name}>")
    raise ConfigError(f"no sweep file or built-in named {name!r}; built-ins: {', '.join(BUILTIN_SWEEPS)}")


def run_linkbudget(spec: SweepSpec) -> str:
    """CSV loss table; raises NonMonotoneError if the curve has the wrong shape."""
    grid = spec.grid()
    if spec.kind == "distance":
        waist = spec.waist if spec.waist is not None else (
            fwhm_to_waist(spec.fwhm) if spec.fwhm is not None else None
        )
        geometry = BeamGeometry(spec.aperture, spec.aperture, spec.wavelength, waist)
        rows = distance_sweep(geometry, grid)
        header = ("distance_m", "loss_db")
        ok = all(b[1] >= a[1] - 1e-12 for a, b in zip(rows, rows[1:]))
        shape = "nondecreasing in distance"
    else:
        rows = aperture_sweep(grid, spec.distance, spec.wavelength)
        header = ("aperture_m", "loss_db")
        ok = all(b[1] <= a[1] + 1e-12 for a, b in zip(rows, rows[1:]))
        shape = "nonincreasing in aperture"
    if not ok:
        raise NonMonotoneError(f"loss table is not {shape}")
    return loss_table(rows, header)
