"""Simulation and optimisation of twisted-rapid-passage (TRP) quantum gates."""

from .gates import GateSetup, applied_gate, evaluate_gate
from .metrics import GateMetrics, fidelity, gate_metrics, trace_p
from .model import (
    SweepParameters,
    TwoQubitSystemParameters,
    build_h1,
    build_h2,
    target_gate,
)
from .propagate import PropagationPlan, convergence_study, propagate
from .symmetrize import (
    SymmetrizationSchedule,
    SymmetryGroup,
    effective_hamiltonian,
    min_subintervals,
    symmetrized_propagate,
    vcp_group,
)

__version__ = "0.1.0"

__all__ = [
    "GateMetrics",
    "GateSetup",
    "PropagationPlan",
    "SweepParameters",
    "SymmetrizationSchedule",
    "SymmetryGroup",
    "TwoQubitSystemParameters",
    "applied_gate",
    "build_h1",
    "build_h2",
    "convergence_study",
    "effective_hamiltonian",
    "evaluate_gate",
    "fidelity",
    "gate_metrics",
    "min_subintervals",
    "propagate",
    "symmetrized_propagate",
    "target_gate",
    "trace_p",
    "vcp_group",
]
