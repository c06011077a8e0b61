"""Twisted-rapid-passage sweeps, Hamiltonians and target gates.

All quantities are dimensionless.  Time is ``tau`` and the Schrodinger
equation reads ``i dU/dtau = H(tau) U``.

Twist sense
-----------
The transverse control field is ``cos(phi) x - sin(phi) y`` with
``phi = (eta4 / 2 lambda) tau**4``.  With this sense the frame co-rotating with
the field has longitudinal coefficient ``(tau - eta4 tau**3) / lambda``, so the
qubit is resonant at ``tau = 0, +-eta4**-0.5`` as :func:`resonance_times`
reports.  Pass ``twist_sense=+1`` to rotate the other way, in which case only
``tau = 0`` is resonant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .linalg import I2, SX, SY, SZ, LinalgError, check_unitary

HBAR = 1.0
TWIST_SENSE = -1
DEGENERACY_GAP = 1e-9

_Z1 = np.kron(SZ, I2)
_Z2 = np.kron(I2, SZ)
_X1 = np.kron(SX, I2)
_Y1 = np.kron(SY, I2)
_X2 = np.kron(I2, SX)
_Y2 = np.kron(I2, SY)
_ZZ = np.kron(SZ, SZ)


class ModelError(ValueError):
    """Invalid parameters or an ill-defined Hamiltonian."""


class DegeneracyError(ModelError):
    """The top instantaneous eigenvalue is degenerate, so |E4><E4| is undefined."""

    def __init__(self, tau, gap):
        self.tau = float(tau)
        self.gap = float(gap)
        super().__init__(f"top two eigenvalues nearly degenerate at tau={self.tau:.6g} (gap {self.gap:.2e})")


@dataclass(frozen=True)
class SweepParameters:
    """Dimensionless sweep knobs.

    The sweep runs over ``tau`` in ``[-tau0/2, tau0/2]``.
    """

    lam: float
    eta4: float
    tau0: float

    def __post_init__(self):
        for name in ("lam", "eta4", "tau0"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ModelError(f"{name} must be positive and finite, got {v!r}")

    @property
    def window(self) -> tuple[float, float]:
        return -0.5 * self.tau0, 0.5 * self.tau0


@dataclass(frozen=True)
class TwoQubitSystemParameters:
    c4: float = 0.0
    d1: float = 0.0
    d2: float = 0.0
    d3: float = 1.0
    d4: float = 0.0

    def __post_init__(self):
        for name in ("c4", "d1", "d2", "d3", "d4"):
            if not math.isfinite(getattr(self, name)):
                raise ModelError(f"{name} must be finite")


@dataclass(frozen=True)
class OneQubitLabParameters:
    """Lab-frame sweep: field ``a t z + b (cos phi x + sin phi y)`` with ``phi = B t**4 / 2``."""

    a: float
    b: float
    B: float
    T0: float

    def __post_init__(self):
        for name in ("a", "b", "T0"):
            if not getattr(self, name) > 0:
                raise ModelError(f"{name} must be positive")


@dataclass(frozen=True)
class TwoQubitLabParameters:
    gamma1: float
    gamma2: float
    Brf: float
    B0: float
    Delta: float
    J: float
    a: float
    B: float
    T0: float = 1.0

    def __post_init__(self):
        for name in ("gamma2", "Brf", "B0", "a"):
            if getattr(self, name) == 0:
                raise ModelError(f"{name} must be nonzero")


class Resonance(NamedTuple):
    tau: float
    inside: bool


def phase_quartic(tau, p: SweepParameters):
    """Quartic twist angle ``(eta4 / 2 lambda) tau**4`` in radians."""
    tau = np.asarray(tau, dtype=float)
    return (p.eta4 / (2.0 * p.lam)) * (tau * tau) ** 2


def phase_quartic_rate(tau, p: SweepParameters):
    tau = np.asarray(tau, dtype=float)
    return (2.0 * p.eta4 / p.lam) * tau**3


def resonance_times(p: SweepParameters) -> list[Resonance]:
    """Roots of ``tau - eta4 tau**3 = 0`` flagged by whether they fall inside the sweep."""
    r = p.eta4**-0.5
    lo, hi = p.window
    return [Resonance(t, bool(lo <= t <= hi)) for t in (-r, 0.0, r)]


def lab_to_dimensionless_1q(q: OneQubitLabParameters, hbar: float = HBAR) -> SweepParameters:
    lam = hbar * q.a / q.b**2
    eta4 = hbar * q.B * q.b**2 / q.a**3
    return SweepParameters(lam, eta4, (q.a / q.b) * q.T0)


def lab_to_dimensionless_2q(q: TwoQubitLabParameters, c4: float = 0.0, hbar: float = HBAR):
    """Convert NMR-style lab parameters to ``(SweepParameters, TwoQubitSystemParameters)``.

    ``c4`` has no lab counterpart and is passed through unchanged.
    """
    b1 = hbar * q.gamma1 * q.Brf / 2.0
    b2 = hbar * q.gamma2 * q.Brf / 2.0
    w1 = q.gamma1 * q.B0
    w2 = q.gamma2 * q.B0
    sweep = SweepParameters(hbar * q.a / b2**2, hbar * q.B * b2**2 / q.a**3, (q.a / b2) * q.T0)
    system = TwoQubitSystemParameters(
        c4=c4,
        d1=(w1 - w2) * b2 / q.a,
        d2=(q.Delta / q.a) * b2,
        d3=b1 / b2,
        d4=(q.J / q.a) * b2,
    )
    return sweep, system


def _transverse_angles(taus, p, twist_sense):
    phi = twist_sense * phase_quartic(taus, p)
    return np.cos(phi)[:, None, None], np.sin(phi)[:, None, None]


def h1_stack(taus, p: SweepParameters, twist_sense: int = TWIST_SENSE) -> np.ndarray:
    """One-qubit Hamiltonians on a grid of times, shape ``(n, 2, 2)``."""
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    c, s = _transverse_angles(taus, p, twist_sense)
    return -(taus[:, None, None] * SZ + c * SX + s * SY) / p.lam


def build_h1(tau: float, p: SweepParameters, twist_sense: int = TWIST_SENSE) -> np.ndarray:
    return h1_stack([tau], p, twist_sense)[0]


def h2_base_stack(taus, p: SweepParameters, s: TwoQubitSystemParameters,
                  twist_sense: int = TWIST_SENSE) -> np.ndarray:
    """Two-qubit Hamiltonian without the ``c4`` projector term, shape ``(n, 4, 4)``."""
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    c, sn = _transverse_angles(taus, p, twist_sense)
    t = taus[:, None, None] / p.lam
    return ((-(s.d1 + s.d2) / 2 + t) * _Z1
            - (s.d3 / p.lam) * (c * _X1 + sn * _Y1)
            + (-s.d2 / 2 + t) * _Z2
            - (1.0 / p.lam) * (c * _X2 + sn * _Y2)
            - (math.pi * s.d4 / 2) * _ZZ)


def project_e4(base, taus=None) -> np.ndarray:
    """Projector onto the highest eigenvector of ``base`` (one matrix or a stack).

    Raises :class:`DegeneracyError` when the top gap is below ``DEGENERACY_GAP``;
    ``taus`` only labels the offending time in the message.
    """
    base = np.asarray(base, dtype=complex)
    single = base.ndim == 2
    stack = base[None] if single else base
    w, v = np.linalg.eigh(stack)
    gap = w[:, -1] - w[:, -2]
    bad = np.flatnonzero(gap < DEGENERACY_GAP)
    if bad.size:
        k = int(bad[0])
        tau = np.atleast_1d(taus)[k] if taus is not None else float("nan")
        raise DegeneracyError(tau, gap[k])
    top = v[:, :, -1]
    proj = top[:, :, None] * np.conj(top)[:, None, :]
    return proj[0] if single else proj


def h2_stack(taus, p: SweepParameters, s: TwoQubitSystemParameters,
             twist_sense: int = TWIST_SENSE) -> np.ndarray:
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    base = h2_base_stack(taus, p, s, twist_sense)
    if s.c4 == 0.0:
        return base
    return base + s.c4 * project_e4(base, taus)


def build_h2(tau: float, p: SweepParameters, s: TwoQubitSystemParameters,
             twist_sense: int = TWIST_SENSE) -> np.ndarray:
    return h2_stack([tau], p, s, twist_sense)[0]


def eigenframe_1q(tau: float, p: SweepParameters, twist_sense: int = TWIST_SENSE) -> np.ndarray:
    """Instantaneous eigenbasis of the one-qubit Hamiltonian as a unitary.

    Column 0 is the eigenvector with the larger overlap on ``|u>``.  The spinors
    use the standard convention ``(cos t/2, e^{i phi} sin t/2)`` along the field
    and ``(sin t/2, -e^{i phi} cos t/2)`` against it, where ``t`` is the polar
    angle of the field direction.  One-qubit gates are read out as
    ``W(tau_f)^dag U W(tau_i)``.
    """
    phi = twist_sense * float(phase_quartic(tau, p))
    theta = math.acos(tau / math.hypot(tau, 1.0))
    along = np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])
    against = np.array([math.sin(theta / 2), -np.exp(1j * phi) * math.cos(theta / 2)])
    cols = [along, against] if abs(along[0]) >= abs(against[0]) else [against, along]
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class GateTarget:
    name: str
    matrix: np.ndarray
    qubits: int


_S = 1 / math.sqrt(2)
_TARGETS = {
    "hadamard": (_S * (SZ + SX), 1),
    "not": (SX.copy(), 1),
    "modified_pi8": (math.cos(math.pi / 8) * SX - math.sin(math.pi / 8) * SY, 1),
    "modified_phase": (_S * (SX - SY), 1),
    "modified_controlled_phase": (np.diag([1, 1, -1, 1]).astype(complex), 2),
}
GATE_NAMES = tuple(_TARGETS)


def target_gate(name: str) -> GateTarget:
    try:
        m, n = _TARGETS[name]
    except KeyError:
        raise ModelError(f"unknown gate {name!r}; expected one of {', '.join(GATE_NAMES)}") from None
    m = m.copy()
    m.setflags(write=False)
    try:
        check_unitary(m)
    except LinalgError as exc:  # pragma: no cover - table is static
        raise ModelError(str(exc)) from exc
    return GateTarget(name, m, n)
