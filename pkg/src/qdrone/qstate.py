"""Two-qubit polarization algebra.

Basis order for the pair is (HH, HV, VH, VV); photon 1 goes to Alice and
photon 2 to Bob. A linear polarizer at angle theta passes
cos(theta)|H> + sin(theta)|V>, so theta=0 is H, pi/2 is V, pi/4 is D and
3pi/4 (equivalently -pi/4) is A.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

ALGEBRA_TOL = 1e-12
EIGEN_TOL = 1e-10

H = np.array([1.0, 0.0], dtype=complex)
V = np.array([0.0, 1.0], dtype=complex)
D = (H + V) / math.sqrt(2.0)
A = (H - V) / math.sqrt(2.0)


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """Density operator of a polarization pair. Validated on construction."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.shape != (4, 4):
            raise InvalidStateError(f"rho must be 4x4, got {rho.shape}")
        if abs(np.trace(rho) - 1.0) > ALGEBRA_TOL:
            raise InvalidStateError(f"trace {np.trace(rho).real:.3e} != 1")
        if np.max(np.abs(rho - rho.conj().T)) > ALGEBRA_TOL:
            raise InvalidStateError("rho is not Hermitian")
        if np.linalg.eigvalsh(rho).min() < -EIGEN_TOL:
            raise InvalidStateError("rho has a negative eigenvalue")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.rho)


@dataclass(frozen=True, eq=False)
class OneQubitUnitary:
    u: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=complex)
        if u.shape != (2, 2):
            raise ValueError(f"unitary must be 2x2, got {u.shape}")
        if np.max(np.abs(u @ u.conj().T - np.eye(2))) > ALGEBRA_TOL:
            raise ValueError("matrix is not unitary")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    def __matmul__(self, other):
        if isinstance(other, OneQubitUnitary):
            return OneQubitUnitary(self.u @ other.u)
        return self.u @ other


IDENTITY = OneQubitUnitary(np.eye(2))


@dataclass(frozen=True)
class AnalyzerAngles:
    """CHSH analyzer settings in radians, each in [0, pi)."""

    a: float
    a_prime: float
    b: float
    b_prime: float

    def __post_init__(self):
        for name in ("a", "a_prime", "b", "b_prime"):
            value = getattr(self, name)
            if not 0.0 <= value < math.pi:
                raise ValueError(f"{name}={value} outside [0, pi)")

    def settings(self) -> list[tuple[float, float]]:
        """The four (Alice, Bob) pairs in CHSH order: ab, ab', a'b, a'b'."""
        return [
            (self.a, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b),
            (self.a_prime, self.b_prime),
        ]


CANONICAL_ANGLES = AnalyzerAngles(0.0, math.pi / 4, math.pi / 8, 3 * math.pi / 8)


def _ket_to_state(ket: np.ndarray) -> TwoQubitState:
    ket = ket / np.linalg.norm(ket)
    return TwoQubitState(np.outer(ket, ket.conj()))


def bell_psi_minus() -> TwoQubitState:
    """(|HV> - |VH>)/sqrt(2)."""
    return _ket_to_state(np.kron(H, V) - np.kron(V, H))


def maximally_mixed() -> TwoQubitState:
    return TwoQubitState(np.eye(4) / 4.0)


def werner(visibility: float) -> TwoQubitState:
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"visibility {visibility} outside [0, 1]")
    return TwoQubitState(
        visibility * bell_psi_minus().rho + (1.0 - visibility) * np.eye(4) / 4.0
    )


def waveplate_unitary(kind: Literal["HWP", "QWP"], theta: float) -> OneQubitUnitary:
    """Retarder with fast axis at ``theta``.

    HWP(theta) = [[cos 2t, sin 2t], [sin 2t, -cos 2t]] (global phase -i dropped).
    QWP(theta) = R(theta) diag(1, i) R(-theta), i.e. the fast axis carries
    phase 1 and the slow axis phase i. Only this global-phase convention is
    fixed here; no exported quantity depends on it.
    """
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    kind = kind.upper()
    if kind == "HWP":
        return OneQubitUnitary(np.array([[c, s], [s, -c]], dtype=complex))
    if kind == "QWP":
        r = rotation_unitary(theta).u
        return OneQubitUnitary(r @ np.diag([1.0, 1j]) @ r.T)
    raise ValueError(f"unknown waveplate kind {kind!r}")


def rotation_unitary(theta: float) -> OneQubitUnitary:
    c, s = math.cos(theta), math.sin(theta)
    return OneQubitUnitary(np.array([[c, -s], [s, c]], dtype=complex))


def apply_local(
    state: TwoQubitState, u_a: OneQubitUnitary, u_b: OneQubitUnitary
) -> TwoQubitState:
    u = np.kron(u_a.u, u_b.u)
    rho = u @ state.rho @ u.conj().T
    # Re-symmetrize so round-off never trips the Hermiticity check.
    return TwoQubitState((rho + rho.conj().T) / 2.0)


def polarizer_projector(theta: float) -> np.ndarray:
    ket = math.cos(theta) * H + math.sin(theta) * V
    return np.outer(ket, ket.conj())


def joint_probability(state: TwoQubitState, theta_a: float, theta_b: float) -> float:
    proj = np.kron(polarizer_projector(theta_a), polarizer_projector(theta_b))
    p = float(np.real(np.trace(state.rho @ proj)))
    return min(1.0, max(0.0, p))


def marginal_probability(state: TwoQubitState, theta: float, side: Literal["A", "B"]) -> float:
    """Probability that one photon passes its polarizer, the other unmeasured."""
    proj = polarizer_projector(theta)
    op = np.kron(proj, np.eye(2)) if side == "A" else np.kron(np.eye(2), proj)
    return float(np.real(np.trace(state.rho @ op)))


def correlation_E_analytic(state: TwoQubitState, theta_a: float, theta_b: float) -> float:
    ap, bp = theta_a + math.pi / 2, theta_b + math.pi / 2
    return (
        joint_probability(state, theta_a, theta_b)
        + joint_probability(state, ap, bp)
        - joint_probability(state, ap, theta_b)
        - joint_probability(state, theta_a, bp)
    )


def chsh_S_analytic(state: TwoQubitState, angles: AnalyzerAngles = CANONICAL_ANGLES) -> float:
    """Signed S = E(a,b) - E(a,b') + E(a',b) + E(a',b').

    For the singlet at the canonical settings this is -2*sqrt(2); callers
    report ``abs()`` of it.
    """
    e = [correlation_E_analytic(state, ta, tb) for ta, tb in angles.settings()]
    return e[0] - e[1] + e[2] + e[3]


def visibility(state: TwoQubitState, basis: Literal["HV", "DA"] = "HV", n_sweep: int = 721) -> float:
    """Two-photon fringe contrast with Alice fixed at H (or D) and Bob swept.

    For polarizer projections the fringe in Bob's angle is exactly a
    constant plus a cos/sin of 2*theta, so its extrema follow from three
    Fourier coefficients; the dense sweep is kept as a guard.
    """
    theta_fixed = {"HV": 0.0, "DA": math.pi / 4}[basis]
    sweep = np.linspace(0.0, math.pi, n_sweep, endpoint=False)
    p = np.array([joint_probability(state, theta_fixed, t) for t in sweep])
    c0 = p.mean()
    c1 = 2.0 * np.mean(p * np.cos(2 * sweep))
    s1 = 2.0 * np.mean(p * np.sin(2 * sweep))
    amp = math.hypot(c1, s1)
    lo, hi = c0 - amp, c0 + amp
    if hi + lo <= 0.0:
        raise ValueError("degenerate fringe: max + min = 0")
    return float((hi - lo) / (hi + lo))
