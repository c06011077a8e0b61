"""Gate-quality metrics built on the positive operator ``P = (Ua - Ut)^dag (Ua - Ut)``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import LinalgError, adjoint, check_matrix

CLAMP = 1e-12


class MetricError(ArithmeticError):
    """Metric failed an internal consistency check."""


@dataclass(frozen=True)
class GateMetrics:
    trace_p: float
    fidelity: float
    pe_upper_bound: float
    pe_eigen_bound: float
    n_qubits: int

    def as_dict(self) -> dict:
        return {
            "trace_p": self.trace_p,
            "fidelity": self.fidelity,
            "pe_upper_bound": self.pe_upper_bound,
            "pe_eigen_bound": self.pe_eigen_bound,
            "n_qubits": self.n_qubits,
        }


def _pair(ua, ut):
    ua = check_matrix(ua)
    ut = check_matrix(ut)
    if ua.shape != ut.shape:
        raise LinalgError(f"dimension mismatch: {ua.shape} vs {ut.shape}")
    return ua, ut


def error_operator(ua, ut) -> np.ndarray:
    ua, ut = _pair(ua, ut)
    d = ua - ut
    return adjoint(d) @ d


def overlap(ua, ut) -> complex:
    """``Tr(Ua^dag Ut)``."""
    ua, ut = _pair(ua, ut)
    return complex(np.vdot(ua, ut))


def _clamp(tp: float) -> float:
    if tp < -CLAMP:
        raise MetricError(f"Tr P came out negative ({tp:.3e}); inputs are not unitary")
    return max(tp, 0.0)


def trace_p(ua, ut) -> float:
    """``Tr P = 2 d - 2 Re Tr(Ua^dag Ut)``, sensitive to the global phase of ``Ua``."""
    ua, ut = _pair(ua, ut)
    return _clamp(2.0 * ua.shape[0] - 2.0 * overlap(ua, ut).real)


def trace_p_phase_optimized(ua, ut) -> float:
    """``min_theta Tr P(e^{i theta} Ua, Ut)``.

    Diagnostic only: the headline metric keeps the global phase.
    """
    ua, ut = _pair(ua, ut)
    return _clamp(2.0 * ua.shape[0] - 2.0 * abs(overlap(ua, ut)))


def fidelity(ua, ut, n: int | None = None) -> float:
    ua, ut = _pair(ua, ut)
    d = ua.shape[0]
    if n is not None and 2**n != d:
        raise LinalgError(f"{n} qubits need dimension {2**n}, got {d}")
    return overlap(ua, ut).real / d


def pe_of_state(ua, ut, psi) -> float:
    """``<psi|P|psi> = ||(Ua - Ut) psi||^2``."""
    ua, ut = _pair(ua, ut)
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (ua.shape[0],):
        raise LinalgError(f"state has shape {psi.shape}, expected ({ua.shape[0]},)")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise LinalgError("state must be normalised")
    return float(np.linalg.norm((ua - ut) @ psi) ** 2)


def gate_metrics(ua, ut) -> GateMetrics:
    ua, ut = _pair(ua, ut)
    d = ua.shape[0]
    tp = trace_p(ua, ut)
    top = float(np.linalg.eigvalsh(error_operator(ua, ut))[-1])
    return GateMetrics(
        trace_p=tp,
        fidelity=fidelity(ua, ut),
        pe_upper_bound=tp,
        pe_eigen_bound=max(top, 0.0),
        n_qubits=int(round(np.log2(d))),
    )
