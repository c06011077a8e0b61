"""Refining sweep parameters by minimising Tr P.

Tr P measures the distance between the applied and target gates.  Here
Nelder-Mead refines (lambda, eta4) for the Hadamard gate inside a box of
+-1 % around the tabulated point.  The last part scans c4 for the
controlled-phase gate, showing how sensitive the gate is to that coupling.

Run:  python demos/04_optimize.py
"""

from trpgates.config import load_config
from trpgates.optimize import TracePObjective, nelder_mead, sensitivity_scan

cfg = load_config("table1-hadamard-refine", ["optimizer.max_evals=60"])
result = nelder_mead(TracePObjective(cfg.setup, cfg.space), cfg.space, cfg.optimizer)
print(f"Hadamard: best Tr P {result.best_trace_p:.3e} after {result.eval_count} evaluations")
print("best parameters:", {k: round(v, 8) for k, v in result.best_params.items()})

scan = load_config("table2-c4")
for row in sensitivity_scan(scan.setup, scan.scan["param"], scan.scan["offsets"]):
    print(f"c4 = {row.value:.4f}: Tr P = {row.trace_p:.4g}")
