"""One-qubit TRP gates.

A twisted rapid passage sweeps the field through tau in [-tau0/2, tau0/2] while
the field direction twists with a quartic phase.  Interference between the two
resonance crossings produces a gate in the adiabatic frame.  This script
simulates the four one-qubit gates at their tabulated sweep parameters and
prints the error measures.

Run:  python demos/01_one_qubit_gates.py
"""

import time

from trpgates import GateSetup, SweepParameters, evaluate_gate
from trpgates.model import resonance_times
from trpgates.records import format_matrix

GATES = {
    "hadamard": (5.8511, 2.9280e-4),
    "not": (7.3205, 2.9277e-4),
    "modified_pi8": (6.0150, 8.1464e-4),
    "modified_phase": (5.9750, 3.8060e-4),
}

for name, (lam, eta4) in GATES.items():
    sweep = SweepParameters(lam, eta4, tau0=160.0)
    res = resonance_times(sweep)
    setup = GateSetup(name, sweep)  # 160 000 midpoint slices
    t = time.perf_counter()
    ua, m = evaluate_gate(setup)
    print(f"{name}: resonances at {[round(r.tau, 2) for r in res]}, "
          f"Tr P = {m.trace_p:.3e}, F = {m.fidelity:.8f}, "
          f"P_e <= {m.pe_eigen_bound:.3e} ({time.perf_counter() - t:.2f} s)")
    if name == "hadamard":
        print(format_matrix(ua))
