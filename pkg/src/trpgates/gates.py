"""From sweep parameters to the applied gate and its metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metrics import GateMetrics, gate_metrics
from .model import (
    TWIST_SENSE,
    ModelError,
    SweepParameters,
    TwoQubitSystemParameters,
    eigenframe_1q,
    target_gate,
)
from .propagate import PropagationPlan, one_qubit_source, propagate, two_qubit_source
from .symmetrize import SymmetrizationSchedule, symmetrized_propagate

FRAMES = ("adiabatic", "lab")


@dataclass(frozen=True)
class GateSetup:
    """Everything needed to produce one applied gate.

    ``frame`` chooses how the propagator is read out.  ``"lab"`` returns it
    as is.  ``"adiabatic"`` (one qubit only) expresses it in the instantaneous
    eigenbases at the two ends of the sweep, ``W(tau_f)^dag U W(tau_i)``, which
    is how a TRP gate maps the computational states.
    """

    target: str
    sweep: SweepParameters
    system: TwoQubitSystemParameters | None = None
    plan: PropagationPlan = field(default_factory=PropagationPlan)
    schedule: SymmetrizationSchedule | None = None
    frame: str = "adiabatic"
    twist_sense: int = TWIST_SENSE
    allow_one_qubit_symmetrization: bool = False

    def __post_init__(self):
        n = target_gate(self.target).qubits
        if n == 2 and self.system is None:
            raise ModelError(f"{self.target} is a two-qubit gate and needs system parameters")
        if n == 1 and self.system is not None:
            raise ModelError(f"{self.target} is a one-qubit gate; system parameters are not allowed")
        if self.frame not in FRAMES:
            raise ModelError(f"frame must be one of {FRAMES}")
        if n == 2 and self.frame != "lab":
            raise ModelError("two-qubit gates are read out in the lab frame")
        if n == 1 and self.schedule is not None and not self.allow_one_qubit_symmetrization:
            raise ModelError("symmetrization is for two-qubit gates (set allow_one_qubit_symmetrization to override)")
        if self.schedule is not None and self.schedule.group.dim != 2**n:
            raise ModelError("symmetry group dimension does not match the gate")
        if self.schedule is not None and self.plan.steps != self.schedule.total_slices:
            raise ModelError(f"plan.steps = {self.plan.steps} does not match the schedule's "
                             f"{self.schedule.total_slices} slices")
        if self.twist_sense not in (-1, 1):
            raise ModelError("twist_sense must be +1 or -1")

    @property
    def n_qubits(self) -> int:
        return target_gate(self.target).qubits


def hamiltonian_source(setup: GateSetup):
    if setup.system is None:
        return one_qubit_source(setup.sweep, setup.twist_sense)
    return two_qubit_source(setup.sweep, setup.system, setup.twist_sense)


def applied_gate(setup: GateSetup) -> np.ndarray:
    src = hamiltonian_source(setup)
    if setup.schedule is not None:
        u = symmetrized_propagate(src, setup.sweep, setup.schedule, setup.plan)
    else:
        u = propagate(src, setup.sweep, setup.plan)
    return readout(setup, u)


def readout(setup: GateSetup, u) -> np.ndarray:
    """Express a lab-frame propagator in the frame selected by ``setup.frame``."""
    if setup.frame != "adiabatic":
        return u
    lo, hi = setup.sweep.window
    wi = eigenframe_1q(lo, setup.sweep, setup.twist_sense)
    wf = eigenframe_1q(hi, setup.sweep, setup.twist_sense)
    return wf.conj().T @ u @ wi


def evaluate_gate(setup: GateSetup) -> tuple[np.ndarray, GateMetrics]:
    ua = applied_gate(setup)
    return ua, gate_metrics(ua, target_gate(setup.target).matrix)
