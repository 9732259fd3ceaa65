"""Two-stage acquisition/pointing/tracking loop simulation.

One tracking axis is simulated; the orthogonal axis is assumed identical
and independent, so the per-axis residual feeds the isotropic pointing
penalty directly.

Signal chain per step:

    beacon angle  theta = disturbance(t) / distance + offset      [rad]
    coarse error  e_c = theta - gimbal                            [rad]
    fine error    x = focal_length * e_c - fsm                    [m at fiber]

The gimbal loop reads e_c through a noisy camera; the FSM loop reads x
through the PSD, and only while the spot is inside the PSD capture range.
Both plants are first-order lags with rate and range saturation, driven
by discrete PID controllers with integrator clamping.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.signal import butter, lfilter


class AptDivergenceError(RuntimeError):
    """Loop error grew past 1e3 times the disturbance amplitude."""


class LockLostError(RuntimeError):
    """Beacon spent too long off the PSD for a jitter estimate."""


@dataclass(frozen=True)
class PlantParams:
    kind: str  # "gimbal" or "fsm"
    bandwidth_hz: float
    range: float  # rad for the gimbal, m at fiber plane for the FSM
    rate_limit: float  # units/s
    sensor_noise_rms: float = 0.0
    noise_corner_hz: float = 50.0

    def __post_init__(self):
        if self.kind not in ("gimbal", "fsm"):
            raise ValueError(f"unknown plant kind {self.kind!r}")
        if self.bandwidth_hz <= 0 or self.range <= 0 or self.rate_limit <= 0:
            raise ValueError("bandwidth, range and rate_limit must be positive")
        if self.sensor_noise_rms < 0 or self.noise_corner_hz <= 0:
            raise ValueError("invalid sensor noise parameters")


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float  # 1/s
    kd: float = 0.0  # s
    clamp: float = math.inf  # bound on the controller output and integral term

    def __post_init__(self):
        if not all(math.isfinite(g) for g in (self.kp, self.ki, self.kd)):
            raise ValueError("gains must be finite")
        if not self.clamp > 0:
            raise ValueError("clamp must be positive")

    @classmethod
    def off(cls) -> "PidGains":
        return cls(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Sinusoid:
    amplitude: float  # m
    frequency: float  # Hz
    phase: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0 or self.frequency <= 0:
            raise ValueError("need amplitude >= 0 and frequency > 0")


@dataclass(frozen=True)
class DisturbanceModel:
    """Apparent lateral motion of the far terminal, in meters at the link."""

    sinusoids: tuple[Sinusoid, ...] = ()
    broadband_rms: float = 0.0
    broadband_corner_hz: float = 0.2

    def __post_init__(self):
        if self.broadband_rms < 0 or self.broadband_corner_hz <= 0:
            raise ValueError("invalid broadband parameters")

    @property
    def amplitude(self) -> float:
        return sum(s.amplitude for s in self.sinusoids) + 3.0 * self.broadband_rms

    def scaled(self, factor: float) -> "DisturbanceModel":
        return DisturbanceModel(
            tuple(replace(s, amplitude=s.amplitude * factor) for s in self.sinusoids),
            self.broadband_rms * factor,
            self.broadband_corner_hz,
        )

    def sample(self, t: np.ndarray, dt: float, rng: np.random.Generator) -> np.ndarray:
        d = np.zeros_like(t)
        for s in self.sinusoids:
            d += s.amplitude * np.sin(2 * math.pi * s.frequency * t + s.phase)
        if self.broadband_rms > 0:
            d += lowpass_noise(len(t), dt, self.broadband_rms, self.broadband_corner_hz, rng)
        return d


@dataclass(frozen=True)
class AptConfig:
    """A full terminal: both loops, optics mapping and disturbance."""

    coarse: PlantParams
    coarse_gains: PidGains
    fine: PlantParams
    fine_gains: PidGains
    disturbance: DisturbanceModel
    focal_length: float = 0.15  # m at fiber plane per rad of pointing error
    psd_capture: float = 300e-6  # m at fiber plane
    initial_offset: float = 0.0  # rad, residual after acquisition


@dataclass(frozen=True, eq=False)
class AptTrace:
    dt: float
    coarse_error: np.ndarray
    fine_error: np.ndarray
    locked: np.ndarray
    gimbal: np.ndarray
    fsm: np.ndarray

    @property
    def locked_fraction(self) -> float:
        return float(np.mean(self.locked))

    @property
    def time(self) -> np.ndarray:
        return np.arange(len(self.fine_error)) * self.dt

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t_s", "coarse_error_rad", "fine_error_m"])
        for t, ec, ef in zip(self.time, self.coarse_error, self.fine_error):
            writer.writerow([repr(float(t)), repr(float(ec)), repr(float(ef))])
        return buf.getvalue()


def ou_process(n: int, dt: float, rms: float, corner_hz: float, rng: np.random.Generator) -> np.ndarray:
    """Stationary first-order low-pass noise, exactly discretized."""
    a = math.exp(-2 * math.pi * corner_hz * dt)
    kicks = rng.standard_normal(n) * rms * math.sqrt(1 - a * a)
    kicks[0] = rng.standard_normal() * rms
    return lfilter([1.0], [1.0, -a], kicks)


def lowpass_noise(n: int, dt: float, rms: float, corner_hz: float, rng: np.random.Generator) -> np.ndarray:
    """Second-order Butterworth-filtered white noise with stationary std ``rms``.

    The filter runs over a burn-in of ten corner periods so the returned
    segment starts in steady state.
    """
    b, a = butter(2, corner_hz, fs=1.0 / dt)
    burn = int(math.ceil(10.0 / (corner_hz * dt)))
    impulse = np.zeros(burn + n)
    impulse[0] = 1.0
    gain = math.sqrt(np.sum(lfilter(b, a, impulse) ** 2))
    white = rng.standard_normal(burn + n)
    return lfilter(b, a, white)[burn:] * (rms / gain)


def rms(series: Sequence[float]) -> float:
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        raise ValueError("rms of an empty series")
    return float(np.sqrt(np.mean(x * x)))


class _Pid:
    __slots__ = ("kp", "ki", "kd", "clamp", "integral", "prev")

    def __init__(self, gains: PidGains):
        self.kp, self.ki, self.kd, self.clamp = gains.kp, gains.ki, gains.kd, gains.clamp
        self.integral = 0.0
        self.prev = 0.0

    def update(self, e: float, dt: float) -> float:
        if self.ki != 0.0:
            self.integral += e * dt
            lim = self.clamp / abs(self.ki)
            if self.integral > lim:
                self.integral = lim
            elif self.integral < -lim:
                self.integral = -lim
        u = self.kp * e + self.ki * self.integral + self.kd * (e - self.prev) / dt
        self.prev = e
        if u > self.clamp:
            return self.clamp
        if u < -self.clamp:
            return -self.clamp
        return u


def simulate_apt(
    config: AptConfig,
    link_distance: float,
    duration: float,
    dt: float,
    seed=None,
    settle: float = 0.5,
) -> AptTrace:
    """Run both loops and return the trace after ``settle`` seconds.

    The settling interval lets the integrators pick up the disturbance
    velocity present at t=0; it is simulated but not returned.
    """
    coarse, fine = config.coarse, config.fine
    if dt > 1.0 / (10.0 * max(coarse.bandwidth_hz, fine.bandwidth_hz)) * (1 + 1e-12):
        raise ValueError("dt too coarse for the loop bandwidths")
    n = int(round(duration / dt))
    if n < 1000:
        raise ValueError("duration must cover at least 1000 steps")
    if link_distance <= 0:
        raise ValueError("link distance must be positive")

    n_settle = int(round(settle / dt))
    n_out = n
    n += n_settle

    rng = np.random.default_rng(seed)
    t = np.arange(n) * dt
    theta = config.disturbance.sample(t, dt, rng) / link_distance + config.initial_offset
    cam_noise = _sensor_noise(coarse, n, dt, rng)
    psd_noise = _sensor_noise(fine, n, dt, rng)

    # Scale for the divergence check: everything that legitimately moves the loop.
    amp = (
        config.disturbance.amplitude / link_distance
        + abs(config.initial_offset)
        + 3.0 * coarse.sensor_noise_rms
        + 3.0 * fine.sensor_noise_rms / config.focal_length
    )
    limit = 1e3 * max(amp, 1e-12)
    f = config.focal_length
    capture = config.psd_capture

    g_decay = math.exp(-2 * math.pi * coarse.bandwidth_hz * dt)
    g_step, g_range = coarse.rate_limit * dt, coarse.range
    p_decay = math.exp(-2 * math.pi * fine.bandwidth_hz * dt)
    p_step, p_range = fine.rate_limit * dt, fine.range
    pid_c, pid_f = _Pid(config.coarse_gains), _Pid(config.fine_gains)

    ec_out = np.empty(n)
    x_out = np.empty(n)
    lock_out = np.empty(n, dtype=bool)
    g_out = np.empty(n)
    p_out = np.empty(n)

    # Acquisition is complete at t=0: the gimbal starts on the beacon.
    g = min(g_range, max(-g_range, theta[0] - config.initial_offset))
    p = 0.0
    u_f = 0.0
    for k in range(n):
        ec = theta[k] - g
        x = f * ec - p
        if not abs(ec) <= limit:
            raise AptDivergenceError(
                f"coarse error {ec:.3g} rad exceeds 1e3 x disturbance amplitude at t={k * dt:.4g} s"
            )
        locked = abs(x) <= capture
        ec_out[k], x_out[k], lock_out[k], g_out[k], p_out[k] = ec, x, locked, g, p

        u_g = pid_c.update(ec + cam_noise[k], dt)
        if locked:
            u_f = pid_f.update(x + psd_noise[k], dt)

        step = (u_g - g) * (1.0 - g_decay)
        step = min(g_step, max(-g_step, step))
        g = min(g_range, max(-g_range, g + step))
        step = (u_f - p) * (1.0 - p_decay)
        step = min(p_step, max(-p_step, step))
        p = min(p_range, max(-p_range, p + step))

    keep = slice(n_settle, n_settle + n_out)
    return AptTrace(dt, ec_out[keep], x_out[keep], lock_out[keep], g_out[keep], p_out[keep])


def _sensor_noise(plant: PlantParams, n: int, dt: float, rng: np.random.Generator) -> np.ndarray:
    if plant.sensor_noise_rms == 0:
        # Keep the generator stream aligned whether or not noise is on.
        rng.standard_normal(n + 1)
        return np.zeros(n)
    return ou_process(n, dt, plant.sensor_noise_rms, plant.noise_corner_hz, rng)


def jitter_summary(trace: AptTrace, min_locked: float = 0.99) -> float:
    """Per-axis standard deviation of the fiber-plane residual, in meters."""
    if trace.locked_fraction < min_locked:
        raise LockLostError(f"locked fraction {trace.locked_fraction:.3f} < {min_locked}")
    return float(np.std(trace.fine_error))


# Presets. Loop bandwidths, noise levels and disturbances are calibration
# choices tuned to land the fine residual near the measured tracking errors.
_GIMBAL = PlantParams("gimbal", bandwidth_hz=10.0, range=math.pi, rate_limit=1.0,
                      sensor_noise_rms=10e-6, noise_corner_hz=30.0)
_FSM = PlantParams("fsm", bandwidth_hz=400.0, range=400e-6, rate_limit=0.5,
                   sensor_noise_rms=1.3e-6, noise_corner_hz=200.0)
_COARSE_PID = PidGains(kp=1.0, ki=2 * math.pi * 10.0, clamp=math.pi)
_FINE_PID = PidGains(kp=1.0, ki=2 * math.pi * 400.0, clamp=400e-6)

PRESETS: dict[str, AptConfig] = {}


def _register(name: str, config: AptConfig) -> None:
    PRESETS[name] = config


_register("ground", AptConfig(
    _GIMBAL, _COARSE_PID, _FSM, _FINE_PID,
    DisturbanceModel((Sinusoid(0.002, 25.0),), broadband_rms=0.05, broadband_corner_hz=0.5),
))
_register("flight", AptConfig(
    _GIMBAL, _COARSE_PID, _FSM, _FINE_PID,
    DisturbanceModel((Sinusoid(0.25, 0.3), Sinusoid(0.0095, 25.0)),
                     broadband_rms=0.25, broadband_corner_hz=0.2),
))

_FSM_RX = replace(_FSM, sensor_noise_rms=0.65e-6)
_register("ground-rx", AptConfig(
    _GIMBAL, _COARSE_PID, _FSM_RX, _FINE_PID,
    DisturbanceModel((Sinusoid(0.002, 25.0),), broadband_rms=0.05, broadband_corner_hz=0.5),
))
_register("flight-rx", AptConfig(
    _GIMBAL, _COARSE_PID, _FSM_RX, _FINE_PID,
    DisturbanceModel((Sinusoid(0.25, 0.3), Sinusoid(0.004, 25.0)),
                     broadband_rms=0.25, broadband_corner_hz=0.2),
))


def preset(name: str) -> AptConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown APT preset {name!r}; known: {sorted(PRESETS)}") from None
