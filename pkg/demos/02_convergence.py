"""Time-step convergence of the propagator.

The propagator is a product of exponentials of the Hamiltonian sampled at
slice midpoints, a second-order scheme.  Halving the slice width should cut
the change in U by four; the fitted slope of log(error) against
log(width) should be close to 2.

Run:  python demos/02_convergence.py
"""

from trpgates import SweepParameters, convergence_study
from trpgates.propagate import one_qubit_source

sweep = SweepParameters(5.8511, 2.9280e-4, 160.0)
report = convergence_study(one_qubit_source(sweep), sweep, base_steps=10_000, doublings=4)
print(report.table())
