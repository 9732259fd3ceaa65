import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdrone.apt import jitter_summary, preset, simulate_apt
from qdrone.harness.scenario import load_scenario
from qdrone.optics import (
    ATMOSPHERIC_DB_PER_KM,
    BeamGeometry,
    FiberMode,
    LinkBudget,
    aperture_sweep,
    atmospheric_loss_db,
    collection_fraction,
    db_to_transmittance,
    diffraction_loss_db,
    distance_sweep,
    fwhm_to_waist,
    gaussian_radius,
    loss_table,
    optimal_waist,
    pointing_penalty_db,
    rayleigh_range,
    total_link_budget,
    transmittance_to_db,
)

LAM = 810e-9
# 26.4 mm pupils with a 26.4 mm FWHM launched beam, evaluated at 100 m
FIELD_GEOMETRY_100M_DB = 3.018210838862143


def mc_pointing_db(sigma, w_m, n=1_000_000, seed=0):
    rng = np.random.default_rng(seed)
    r2 = (rng.normal(0, sigma, n) ** 2 + rng.normal(0, sigma, n) ** 2) if sigma > 0 else np.zeros(n)
    return -10 * math.log10(np.mean(np.exp(-2 * r2 / w_m**2)))


def test_gaussian_radius_examples():
    w0 = 0.01
    assert gaussian_radius(w0, 0) == w0
    assert gaussian_radius(w0, rayleigh_range(w0)) == pytest.approx(w0 * math.sqrt(2), rel=1e-12)
    z = 100 * rayleigh_range(w0)
    slope = gaussian_radius(w0, z) / z
    assert slope == pytest.approx(LAM / (math.pi * w0), rel=0.01)
    with pytest.raises(ValueError):
        gaussian_radius(0, 1)
    with pytest.raises(ValueError):
        gaussian_radius(1e-3, -1)


def test_collection_fraction_examples():
    assert collection_fraction(1.0, 1.0) == pytest.approx(1 - math.exp(-2))
    assert collection_fraction(1.0, math.sqrt(2)) == pytest.approx(1 - math.exp(-1))
    assert collection_fraction(100.0, 1.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        collection_fraction(0, 1)


@given(st.floats(1e-6, 10), st.floats(1e-6, 10))
def test_collection_fraction_range(a, w):
    assert 0 < collection_fraction(a, w) <= 1


def _grid_best(radius, z):
    grid = np.linspace(radius / 1000, radius, 1000)
    return max(collection_fraction(radius, gaussian_radius(w, z)) for w in grid)


@pytest.mark.parametrize("radius,z", [(0.15, 1e5), (0.0132, 100.0), (0.0132, 1000.0), (0.05, 3e4), (0.15, 1e3)])
def test_optimal_waist_beats_grid(radius, z):
    w = optimal_waist(radius, z)
    assert 0 < w <= radius
    assert collection_fraction(radius, gaussian_radius(w, z)) >= _grid_best(radius, z) - 1e-9


def test_optimal_waist_collapses_to_cap():
    # once sqrt(z*lambda/pi) exceeds the pupil radius the largest admissible waist wins
    assert optimal_waist(0.15, 1e5) == pytest.approx(0.15, rel=1e-9)
    assert optimal_waist(0.0132, 1e3) == pytest.approx(0.0132, rel=1e-9)


def test_optimal_waist_closed_form():
    # unconstrained minimum of w(z) sits at sqrt(z*lambda/pi)
    for radius, z in ((0.15, 3e4), (0.0132, 10.0)):
        assert optimal_waist(radius, z) == pytest.approx(math.sqrt(z * LAM / math.pi), rel=1e-6)


@pytest.mark.parametrize("radius,z", [(0.01, 50.0), (0.05, 5e3), (0.1, 4e4)])
def test_optimal_waist_scaling(radius, z):
    w1 = optimal_waist(radius, z)
    w2 = optimal_waist(2 * radius, 4 * z)
    assert w2 == pytest.approx(2 * w1, rel=1e-6)


def test_diffraction_point_300mm_100km():
    loss = diffraction_loss_db(BeamGeometry(0.3, 0.3, LAM), 1e5)
    assert abs(loss - 2.79) <= 0.75


def test_field_geometry_regression_and_shape():
    g = BeamGeometry.from_fwhm(0.0264, 0.0264)
    assert g.waist == pytest.approx(fwhm_to_waist(0.0264))
    assert diffraction_loss_db(g, 100.0) == pytest.approx(FIELD_GEOMETRY_100M_DB, rel=1e-12)
    losses = [l for _, l in distance_sweep(g, np.geomspace(10, 1000, 60))]
    assert all(b >= a for a, b in zip(losses, losses[1:]))
    assert losses[-1] > losses[0]


def test_fixed_waist_near_field_is_minimum():
    g = BeamGeometry(0.05, 0.05, LAM, waist=0.02)
    near = diffraction_loss_db(g, 1e-3)
    assert all(near <= diffraction_loss_db(g, z) for z in np.geomspace(1, 1e5, 20))


def test_monotonicity_grids():
    apertures = np.geomspace(0.01, 0.5, 20)
    distances = np.geomspace(100, 3e5, 20)
    table = np.array([[diffraction_loss_db(BeamGeometry(a, a, LAM), z) for z in distances] for a in apertures])
    assert np.all(np.diff(table, axis=1) >= -1e-12)  # nondecreasing in distance
    assert np.all(np.diff(table, axis=0) <= 1e-12)  # nonincreasing in aperture
    # one aperture varied with the other fixed
    for z in (1e3, 1e5):
        tx = [diffraction_loss_db(BeamGeometry(a, 0.1, LAM), z) for a in apertures]
        rx = [diffraction_loss_db(BeamGeometry(0.1, a, LAM), z) for a in apertures]
        assert np.all(np.diff(tx) <= 1e-12) and np.all(np.diff(rx) <= 1e-12)


def test_aperture_sweep_modes():
    apertures = np.linspace(0.02, 0.3, 15)
    opt = aperture_sweep(apertures, 100.0)
    fill = aperture_sweep(apertures, 100.0, waist_mode="fill")
    assert all(o <= f + 1e-12 for (_, o), (_, f) in zip(opt, fill))


def test_optimal_beats_random_fixed_waists():
    rng = np.random.default_rng(3)
    for ap, z in ((0.3, 1e5), (0.0264, 100.0), (0.1, 1e4)):
        best = diffraction_loss_db(BeamGeometry(ap, ap, LAM), z)
        for w in rng.uniform(1e-5, ap / 2, 1000):
            assert best <= diffraction_loss_db(BeamGeometry(ap, ap, LAM, waist=float(w)), z) + 1e-9


def test_atmospheric_table():
    t = ATMOSPHERIC_DB_PER_KM
    assert atmospheric_loss_db(0, "rain") == 0
    assert t["rain"] >= t["clear_day"] >= t["clear_night"]
    assert t["high_altitude"] <= 0.03
    assert atmospheric_loss_db(1e5, "high_altitude") <= 3.0
    assert atmospheric_loss_db(2000, "x", table={"x": 1.5}) == 3.0
    with pytest.raises(ValueError):
        atmospheric_loss_db(10, "fog")


def test_pointing_examples():
    assert pointing_penalty_db(0.0) == 0.0
    assert abs(pointing_penalty_db(1.33e-6, FiberMode(5e-6)) - 3.29) <= 0.05
    values = [pointing_penalty_db(s) for s in np.linspace(0, 5e-6, 50)]
    assert all(b > a for a, b in zip(values, values[1:]))
    with pytest.raises(ValueError):
        pointing_penalty_db(-1e-9)


@pytest.mark.parametrize("ratio", [0.0, 0.25, 0.5, 1.0, 1.5, 2.0])
def test_pointing_closed_form_vs_monte_carlo(ratio):
    fiber = FiberMode(5e-6)
    w_m = 2.5e-6
    assert abs(pointing_penalty_db(ratio * w_m, fiber) - mc_pointing_db(ratio * w_m, w_m)) < 0.02


def test_budget_sum():
    assert total_link_budget(None, 100, None).total_db == 0
    b = LinkBudget(1.0, 0.5, 0.25, 2.0)
    assert b.total_db == 1.0 + 0.5 + 0.25 + 2.0
    assert b.transmittance == pytest.approx(10 ** (-0.375))
    with pytest.raises(ValueError):
        LinkBudget(-0.1)
    budget = total_link_budget(BeamGeometry(0.3, 0.3), 1e5, "high_altitude", 1e-6, static_db=3.0)
    d = budget.as_dict()
    assert d["total_db"] == d["diffraction_db"] + d["atmospheric_db"] + d["pointing_db"] + d["static_coupling_db"]


@given(st.floats(0, 60))
def test_db_round_trip(db):
    assert transmittance_to_db(db_to_transmittance(db)) == pytest.approx(db, abs=1e-12)


def test_alice_field_total():
    scen = load_scenario("field-clear-night")
    link = scen.alice
    trace = simulate_apt(preset(link.apt_preset), link.distance, 1.0, 2e-4, seed=0)
    budget = total_link_budget(
        link.geometry(), link.distance, link.condition, jitter_summary(trace),
        FiberMode(link.mode_field_diameter), link.static_db,
    )
    assert abs(budget.total_db - 12.0) <= 1.0


def test_loss_table_csv():
    text = loss_table([(1.0, 0.5), (2.0, 0.75)])
    assert text.splitlines() == ["distance_m,loss_db", "1.0,0.5", "2.0,0.75"]
