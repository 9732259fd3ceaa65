"""Free-space channel losses between symmetric apertures.

Lengths are in meters and losses in dB (positive numbers are losses).
The "beam aperture" of a link is taken as the diameter of both the
transmit and receive pupils. Transmit truncation is neglected; the
launched waist is instead capped at ``WAIST_CAP`` times the pupil radius.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Union

from scipy.optimize import minimize_scalar

WAVELENGTH_M = 810e-9
FWHM_TO_WAIST = 1.0 / math.sqrt(2.0 * math.log(2.0))
# w0 <= radius keeps >= 86.5% of the launched power inside the pupil.
WAIST_CAP = 1.0

# dB/km. Editable defaults, not measured values.
ATMOSPHERIC_DB_PER_KM = {
    "clear_night": 0.5,
    "clear_day": 0.7,
    "rain": 3.0,
    "high_altitude": 0.03,
}


def db_to_transmittance(db: float) -> float:
    return 10.0 ** (-db / 10.0)


def transmittance_to_db(t: float) -> float:
    if not 0.0 < t <= 1.0:
        raise ValueError("transmittance must lie in (0, 1]")
    return -10.0 * math.log10(t)


def fwhm_to_waist(fwhm: float) -> float:
    """1/e^2 intensity radius of a Gaussian beam with the given intensity FWHM."""
    return fwhm * FWHM_TO_WAIST


@dataclass(frozen=True)
class BeamGeometry:
    tx_aperture: float
    rx_aperture: float
    wavelength: float = WAVELENGTH_M
    # None -> optimal waist; otherwise fixed 1/e^2 radius in meters.
    waist: Union[float, None] = None
    waist_cap: float = WAIST_CAP

    def __post_init__(self):
        if min(self.tx_aperture, self.rx_aperture, self.wavelength) <= 0:
            raise ValueError("apertures and wavelength must be positive")
        if self.wavelength >= min(self.tx_aperture, self.rx_aperture):
            raise ValueError("wavelength must be smaller than the apertures")
        if self.waist is not None and self.waist <= 0:
            raise ValueError("fixed waist must be positive")

    @property
    def waist_mode(self) -> str:
        return "optimal" if self.waist is None else "fixed"

    @classmethod
    def from_fwhm(cls, aperture: float, fwhm: float, wavelength: float = WAVELENGTH_M):
        return cls(aperture, aperture, wavelength, waist=fwhm_to_waist(fwhm))


@dataclass(frozen=True)
class FiberMode:
    mode_field_diameter: float = 5e-6

    def __post_init__(self):
        if self.mode_field_diameter <= 0:
            raise ValueError("mode field diameter must be positive")


@dataclass(frozen=True)
class LinkBudget:
    diffraction_db: float = 0.0
    atmospheric_db: float = 0.0
    pointing_db: float = 0.0
    static_coupling_db: float = 0.0
    total_db: float = field(init=False)

    def __post_init__(self):
        parts = (self.diffraction_db, self.atmospheric_db, self.pointing_db, self.static_coupling_db)
        if min(parts) < 0:
            raise ValueError("budget components must be nonnegative")
        object.__setattr__(self, "total_db", sum(parts))

    @property
    def transmittance(self) -> float:
        return db_to_transmittance(self.total_db)

    def as_dict(self) -> dict:
        return {
            "diffraction_db": self.diffraction_db,
            "atmospheric_db": self.atmospheric_db,
            "pointing_db": self.pointing_db,
            "static_coupling_db": self.static_coupling_db,
            "total_db": self.total_db,
        }


def gaussian_radius(w0: float, z: float, wavelength: float = WAVELENGTH_M) -> float:
    if w0 <= 0 or z < 0:
        raise ValueError("need w0 > 0 and z >= 0")
    return w0 * math.sqrt(1.0 + (z * wavelength / (math.pi * w0 * w0)) ** 2)


def rayleigh_range(w0: float, wavelength: float = WAVELENGTH_M) -> float:
    return math.pi * w0 * w0 / wavelength


def collection_fraction(aperture_radius: float, beam_radius: float) -> float:
    """Power of a centered Gaussian beam inside a circular pupil."""
    if aperture_radius <= 0 or beam_radius <= 0:
        raise ValueError("radii must be positive")
    return -math.expm1(-2.0 * aperture_radius**2 / beam_radius**2)


def optimal_waist(
    aperture_radius: float,
    distance: float,
    wavelength: float = WAVELENGTH_M,
    waist_cap: float = WAIST_CAP,
) -> float:
    """Launch waist maximizing the power collected by a receiver pupil of the same radius."""
    if min(aperture_radius, distance, wavelength) <= 0:
        raise ValueError("inputs must be positive")
    upper = aperture_radius * waist_cap
    # Work in u = w0/upper so the search tolerance is relative.
    res = minimize_scalar(
        lambda u: gaussian_radius(u * upper, distance, wavelength),
        bounds=(1e-9, 1.0),
        method="bounded",
        options={"xatol": 1e-9},
    )
    best = res.x
    if gaussian_radius(upper, distance, wavelength) <= gaussian_radius(best * upper, distance, wavelength):
        best = 1.0
    return best * upper


def launch_waist(geometry: BeamGeometry, distance: float) -> float:
    if geometry.waist is not None:
        return geometry.waist
    return optimal_waist(geometry.tx_aperture / 2, distance, geometry.wavelength, geometry.waist_cap)


def diffraction_loss_db(geometry: BeamGeometry, distance: float) -> float:
    if distance <= 0:
        raise ValueError("distance must be positive")
    w0 = launch_waist(geometry, distance)
    frac = collection_fraction(geometry.rx_aperture / 2, gaussian_radius(w0, distance, geometry.wavelength))
    return max(0.0, transmittance_to_db(frac))


def atmospheric_loss_db(distance: float, condition: str, table: dict | None = None) -> float:
    if distance < 0:
        raise ValueError("distance must be nonnegative")
    table = ATMOSPHERIC_DB_PER_KM if table is None else table
    try:
        coeff = table[condition]
    except KeyError:
        raise ValueError(f"unknown atmospheric condition {condition!r}") from None
    return coeff * distance / 1e3


def pointing_penalty_db(jitter_rms_per_axis: float, fiber: FiberMode = FiberMode()) -> float:
    """Mean SMF coupling loss under isotropic Gaussian lateral jitter.

    Averaging exp(-2 r^2 / w_m^2) over r with per-axis deviation sigma
    gives 1 / (1 + 4 sigma^2 / w_m^2), w_m = MFD/2.
    """
    if jitter_rms_per_axis < 0:
        raise ValueError("jitter must be nonnegative")
    w_m = fiber.mode_field_diameter / 2
    return 10.0 * math.log10(1.0 + 4.0 * jitter_rms_per_axis**2 / w_m**2)


def total_link_budget(
    geometry: BeamGeometry | None,
    distance: float,
    condition: str | None,
    jitter: float = 0.0,
    fiber: FiberMode = FiberMode(),
    static_db: float = 0.0,
    table: dict | None = None,
) -> LinkBudget:
    """Additive budget; ``geometry=None`` or ``condition=None`` drop that term."""
    diffraction = 0.0 if geometry is None else diffraction_loss_db(geometry, distance)
    atmosphere = 0.0 if condition is None else atmospheric_loss_db(distance, condition, table)
    return LinkBudget(diffraction, atmosphere, pointing_penalty_db(jitter, fiber), static_db)


def loss_table(rows: Iterable[tuple[float, float]], header=("distance_m", "loss_db")) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for x, loss in rows:
        writer.writerow([repr(float(x)), repr(float(loss))])
    return buf.getvalue()


def distance_sweep(geometry: BeamGeometry, distances: Iterable[float]) -> list[tuple[float, float]]:
    return [(d, diffraction_loss_db(geometry, d)) for d in distances]


def aperture_sweep(
    apertures: Iterable[float],
    distance: float,
    wavelength: float = WAVELENGTH_M,
    waist_mode: Literal["optimal", "fill"] = "optimal",
) -> list[tuple[float, float]]:
    """Loss vs symmetric aperture diameter.

    ``fill`` launches a waist set by the pupil (w0 = cap * radius) instead
    of optimizing it.
    """
    rows = []
    for ap in apertures:
        waist = None if waist_mode == "optimal" else ap / 2 * WAIST_CAP
        rows.append((ap, diffraction_loss_db(BeamGeometry(ap, ap, wavelength, waist), distance)))
    return rows
