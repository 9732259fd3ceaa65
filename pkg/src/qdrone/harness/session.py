"""Seeded Monte Carlo CHSH sessions and their reports."""
from __future__ import annotations

import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import __version__
from ..apt import LockLostError, jitter_summary, preset, simulate_apt
from ..counting import (
    CountingConfig,
    estimate_S,
    simulate_chsh_records,
    singles_rates,
    accidental_rate,
    violation_sigmas,
)
from ..optics import FiberMode, LinkBudget, total_link_budget
from ..qstate import apply_local, rotation_unitary, werner
from .scenario import STATIONS, Scenario, loads_scenario


@dataclass(frozen=True)
class StationResult:
    budget: LinkBudget
    jitter_m: float | None
    locked_fraction: float | None


def trial_seeds(root_seed: int, trial: int) -> list[np.random.SeedSequence]:
    """Independent streams for (alice APT, bob APT, counting) of one trial."""
    return np.random.SeedSequence([root_seed, trial]).spawn(3)


def _station(scenario: Scenario, station: str, seed: np.random.SeedSequence) -> StationResult:
    link = scenario.link(station)
    jitter = locked = None
    if link.apt_preset is not None:
        trace = simulate_apt(preset(link.apt_preset), link.distance, scenario.apt.duration, scenario.apt.dt, seed)
        locked = trace.locked_fraction
        jitter = jitter_summary(trace)  # LockLostError handled by the caller
    budget = total_link_budget(
        link.geometry(),
        link.distance,
        link.condition if link.distance > 0 else None,
        jitter or 0.0,
        FiberMode(link.mode_field_diameter),
        link.static_db,
    )
    return StationResult(budget, jitter, locked)


def run_trial(scenario: Scenario, trial: int) -> dict:
    seeds = trial_seeds(scenario.seed, trial)
    row: dict = {"trial": trial, "ok": True, "failure": None}
    stations = {}
    for station, seed in zip(STATIONS, seeds[:2]):
        try:
            stations[station] = _station(scenario, station, seed)
        except LockLostError as exc:
            row.update(ok=False, failure=f"{station}: {exc}")
            return row
    for station, res in stations.items():
        row[f"{station}_total_db"] = res.budget.total_db
        row[f"{station}_pointing_db"] = res.budget.pointing_db
        row[f"{station}_jitter_m"] = res.jitter_m

    illum = scenario.counting.illuminance_lx
    config = CountingConfig(
        pair_rate=scenario.source.pair_rate,
        eta_A=stations["alice"].budget.transmittance,
        eta_B=stations["bob"].budget.transmittance,
        bg_A=scenario.alice.background(illum),
        bg_B=scenario.bob.background(illum),
        window=scenario.counting.window,
        integration=scenario.counting.integration,
    )
    state = apply_local(
        werner(scenario.source.v_src),
        rotation_unitary(math.radians(scenario.alice.residual_rotation_deg)),
        rotation_unitary(math.radians(scenario.bob.residual_rotation_deg)),
    )
    records = simulate_chsh_records(state, config, scenario.angles, np.random.default_rng(seeds[2]))
    est = estimate_S(records)
    s_a, s_b = singles_rates(state, scenario.angles.a, scenario.angles.b, config)
    row.update(
        S=est.value,
        abs_S=abs(est.value),
        sigma=est.sigma,
        violation_sigmas=violation_sigmas(est) if est.sigma > 0 else None,
        accidental_rate=4 * accidental_rate(s_a, s_b, config.window),
        counts=[list(r.counts) for r in records],
    )
    return row


def aggregate(rows: list[dict]) -> dict:
    ok = [r for r in rows if r["ok"]]
    out = {"trials": len(rows), "ok_trials": len(ok), "failed_trials": len(rows) - len(ok)}
    if not ok:
        return out
    abs_s = [r["abs_S"] for r in ok]
    sigmas = [r["sigma"] for r in ok]
    mean_s = statistics.fmean(abs_s)
    mean_sigma = statistics.fmean(sigmas)
    out.update(
        mean_abs_S=mean_s,
        std_abs_S=statistics.stdev(abs_s) if len(abs_s) > 1 else 0.0,
        mean_sigma=mean_sigma,
        violation_sigmas=(mean_s - 2.0) / mean_sigma if mean_sigma > 0 else None,
        max_trial_violation_sigmas=max(
            (r["violation_sigmas"] for r in ok if r["violation_sigmas"] is not None), default=None
        ),
    )
    return out


@dataclass(frozen=True)
class RunReport:
    scenario: Scenario
    rows: tuple[dict, ...]

    @property
    def summary(self) -> dict:
        return aggregate(list(self.rows))

    def provenance(self) -> dict:
        return {
            "config_hash": self.scenario.config_hash(),
            "seed": self.scenario.seed,
            "trials": self.scenario.trials,
            "version": __version__,
            "scenario": self.scenario.dumps(),
        }

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.name,
            "summary": self.summary,
            "trials": list(self.rows),
            "provenance": self.provenance(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        cols = ["trial", "ok", "S", "abs_S", "sigma", "violation_sigmas",
                "alice_total_db", "bob_total_db", "alice_jitter_m", "bob_jitter_m", "accidental_rate"]
        lines = [",".join(cols)]
        for row in self.rows:
            lines.append(",".join(_cell(row.get(c)) for c in cols))
        return "\n".join(lines) + "\n"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _run_trial_packed(args):
    text, trial = args
    return run_trial(loads_scenario(text), trial)


def run_chsh_session(scenario: Scenario, workers: int = 1) -> RunReport:
    """Run every trial; results do not depend on ``workers``."""
    if workers <= 1:
        rows = [run_trial(scenario, t) for t in range(scenario.trials)]
    else:
        text = scenario.dumps()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_trial_packed, [(text, t) for t in range(scenario.trials)]))
    return RunReport(scenario, tuple(rows))


def report_from_dict(data: dict) -> RunReport:
    scenario = loads_scenario(data["provenance"]["scenario"], "<report provenance>")
    return RunReport(scenario, tuple(data["trials"]))
