"""Coincidence-count simulation and CHSH estimators with Poisson errors.

Accidental coincidences are uncorrelated in polarization: for a pair of
polarizer settings the accidental rate is the product of the two singles
rates times the coincidence window, added on top of the true pair rate.
Counts are never background-subtracted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qstate import (
    AnalyzerAngles,
    CANONICAL_ANGLES,
    TwoQubitState,
    joint_probability,
    marginal_probability,
)

DEFAULT_WINDOW_S = 3e-9


@dataclass(frozen=True)
class CountingConfig:
    pair_rate: float = 2.4e6
    eta_A: float = 1.0
    eta_B: float = 1.0
    bg_A: float = 0.0
    bg_B: float = 0.0
    window: float = DEFAULT_WINDOW_S
    integration: float = 1.0  # seconds per analyzer combination

    def __post_init__(self):
        for name in ("pair_rate", "bg_A", "bg_B"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        for name in ("eta_A", "eta_B"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.window <= 0:
            raise ValueError("window must be positive")
        if self.integration <= 0:
            raise ValueError("integration must be positive")


@dataclass(frozen=True)
class CoincidenceRecord:
    n_ab: int
    n_ab_perp: int
    n_aperp_b: int
    n_aperp_bperp: int
    setting: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if min(self.counts) < 0:
            raise ValueError("counts must be nonnegative")

    @property
    def counts(self) -> tuple[int, int, int, int]:
        return (self.n_ab, self.n_ab_perp, self.n_aperp_b, self.n_aperp_bperp)

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    def __abs__(self) -> float:
        return abs(self.value)


def accidental_rate(s1: float, s2: float, window: float) -> float:
    if s1 < 0 or s2 < 0 or window < 0:
        raise ValueError("rates and window must be nonnegative")
    return s1 * s2 * window


def singles_rates(
    state: TwoQubitState, theta_a: float, theta_b: float, config: CountingConfig
) -> tuple[float, float]:
    s_a = config.pair_rate * config.eta_A * marginal_probability(state, theta_a, "A") + config.bg_A
    s_b = config.pair_rate * config.eta_B * marginal_probability(state, theta_b, "B") + config.bg_B
    return s_a, s_b


def expected_rates(
    state: TwoQubitState, theta_a: float, theta_b: float, config: CountingConfig
) -> np.ndarray:
    """Mean coincidence rates (true + accidental) for ab, ab⊥, a⊥b, a⊥b⊥."""
    ap, bp = theta_a + math.pi / 2, theta_b + math.pi / 2
    pair = config.pair_rate * config.eta_A * config.eta_B
    rates = []
    for ta, tb in ((theta_a, theta_b), (theta_a, bp), (ap, theta_b), (ap, bp)):
        s_a, s_b = singles_rates(state, ta, tb, config)
        rates.append(pair * joint_probability(state, ta, tb) + accidental_rate(s_a, s_b, config.window))
    return np.array(rates)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def simulate_record(
    state: TwoQubitState,
    theta_a: float,
    theta_b: float,
    config: CountingConfig,
    seed=None,
) -> CoincidenceRecord:
    """Draw the four Poisson coincidence counts for one analyzer setting."""
    lam = config.integration * expected_rates(state, theta_a, theta_b, config)
    n = _rng(seed).poisson(lam)
    return CoincidenceRecord(*(int(k) for k in n), setting=(theta_a, theta_b))


def simulate_chsh_records(
    state: TwoQubitState,
    config: CountingConfig,
    angles: AnalyzerAngles = CANONICAL_ANGLES,
    seed=None,
) -> list[CoincidenceRecord]:
    rng = _rng(seed)
    return [simulate_record(state, ta, tb, config, rng) for ta, tb in angles.settings()]


def estimate_E(record: CoincidenceRecord) -> EstimateWithError:
    """Correlation from counts with first-order Poisson error.

    With N = total and D = (n_ab + n_a⊥b⊥) - (n_ab⊥ + n_a⊥b), E = D/N and
    dE/dn_i = (±1 - E)/N, giving var(E) = sum_i n_i (±1 - E)^2 / N^2
    = (1 - E^2)/N.
    """
    total = record.total
    if total <= 0:
        raise ValueError("record has zero total counts")
    e = (record.n_ab + record.n_aperp_bperp - record.n_ab_perp - record.n_aperp_b) / total
    e = min(1.0, max(-1.0, e))
    return EstimateWithError(e, math.sqrt(max(0.0, 1.0 - e * e) / total))


def estimate_S(records: Sequence[CoincidenceRecord]) -> EstimateWithError:
    """Signed S from records ordered (a,b), (a,b'), (a',b), (a',b')."""
    if len(records) != 4:
        raise ValueError(f"need 4 records, got {len(records)}")
    es = [estimate_E(r) for r in records]
    value = es[0].value - es[1].value + es[2].value + es[3].value
    return EstimateWithError(value, math.sqrt(sum(e.sigma**2 for e in es)))


def violation_sigmas(est: EstimateWithError) -> float:
    if est.sigma <= 0:
        raise ValueError("sigma must be positive")
    return (abs(est.value) - 2.0) / est.sigma


def effective_visibility(v_src: float, true_cc_rate: float, acc_cc_rate: float) -> float:
    if not 0.0 <= v_src <= 1.0:
        raise ValueError("v_src outside [0, 1]")
    if true_cc_rate < 0 or acc_cc_rate < 0:
        raise ValueError("rates must be nonnegative")
    if true_cc_rate + acc_cc_rate == 0:
        raise ValueError("both rates are zero")
    return v_src * (true_cc_rate / (true_cc_rate + acc_cc_rate))


@dataclass(frozen=True)
class FringeResult:
    angles: tuple[float, ...]
    counts: tuple[EstimateWithError, ...]
    visibility: float
    offset: float
    amplitude: float
    phase: float


def fit_fringe(angles: Sequence[float], counts: Sequence[float]) -> tuple[float, float, float, float]:
    """Least-squares fit of c0 + c1 cos 2t + s1 sin 2t.

    Returns (visibility, offset, amplitude, phase) where visibility is
    (max - min)/(max + min) of the fitted curve.
    """
    t = np.asarray(angles, dtype=float)
    y = np.asarray(counts, dtype=float)
    design = np.column_stack([np.ones_like(t), np.cos(2 * t), np.sin(2 * t)])
    (c0, c1, s1), *_ = np.linalg.lstsq(design, y, rcond=None)
    amp = math.hypot(c1, s1)
    if not np.isfinite(c0) or c0 <= 0:
        raise ValueError("fringe fit failed: nonpositive offset")
    return min(1.0, amp / c0), float(c0), float(amp), float(math.atan2(s1, c1) / 2)


def visibility_fringe(
    state: TwoQubitState,
    theta_fixed: float,
    sweep: Sequence[float],
    config: CountingConfig,
    seed=None,
) -> FringeResult:
    """Coincidences n(theta_fixed, theta) over Bob's sweep plus fitted visibility."""
    if len(sweep) < 8:
        raise ValueError("sweep needs at least 8 angles")
    rng = _rng(seed)
    pair = config.pair_rate * config.eta_A * config.eta_B
    counts = []
    for theta in sweep:
        s_a, s_b = singles_rates(state, theta_fixed, theta, config)
        lam = config.integration * (
            pair * joint_probability(state, theta_fixed, theta)
            + accidental_rate(s_a, s_b, config.window)
        )
        n = int(rng.poisson(lam))
        counts.append(EstimateWithError(float(n), math.sqrt(n)))
    v, c0, amp, phase = fit_fringe(sweep, [c.value for c in counts])
    return FringeResult(tuple(float(t) for t in sweep), tuple(counts), v, c0, amp, phase)
