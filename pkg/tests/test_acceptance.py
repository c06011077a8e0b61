"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (the lines are collected in the
terminal summary) or directly with ``python tests/test_acceptance.py``.
Tolerances are pinned here and are not tuned to the results.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from trpgates.config import load_config
from trpgates.gates import GateSetup, evaluate_gate
from trpgates.linalg import I2, SX, SZ, expm_skew, unitarity_error
from trpgates.metrics import fidelity, gate_metrics, trace_p
from trpgates.model import SweepParameters, TwoQubitSystemParameters
from trpgates.optimize import (
    AnnealingSettings, NelderMeadSettings, OptimizerConfig, ParameterSpace, TracePObjective,
    nelder_mead, params_of, sensitivity_scan, simulated_annealing,
)
from trpgates.propagate import (
    PropagationPlan, constant_source, convergence_study, one_qubit_source, propagate, two_qubit_source,
)
from trpgates.records import RunRecord, append_record, read_records
from trpgates.runner import cmd_simulate, replay
from trpgates.symmetrize import (
    SymmetrizationSchedule, SymmetryGroup, effective_hamiltonian, min_subintervals,
    subinterval_bound, symmetrized_propagate, vcp_group,
)

RESULTS: list[str] = []

ONE_QUBIT_POINTS = {
    "hadamard": (5.8511, 2.9280e-4, 8.82e-6),
    "not": (7.3205, 2.9277e-4, 1.10e-5),
    "modified_pi8": (6.0150, 8.1464e-4, 3.03e-5),
    "modified_phase": (5.9750, 3.8060e-4, 8.20e-5),
}
ONE_QUBIT_STEPS = 160_000
VCP_SWEEP = SweepParameters(5.04, 3.0e-4, 120.0)
VCP_SYSTEM = TwoQubitSystemParameters(2.173, 99.3, 0.0, -0.41, 0.8347)
VCP_TRACE_P = 8.87e-5
VCP_FIDELITY = 0.999989
RE_UA = np.array([
    [0.999998, -0.000003, -0.000015, -0.000014],
    [0.000003, 0.999997, 0.000036, 0.000261],
    [-0.000015, 0.000034, -0.999980, -0.003818],
    [-0.000014, -0.000257, -0.003838, 0.999981],
])
IM_UA = np.array([
    [-0.002151, 0.000003, -0.000010, -0.000073],
    [-0.000003, -0.002180, 0.000140, -0.000325],
    [0.000010, -0.001140, 0.001702, 0.004534],
    [-0.000073, -0.000328, -0.004521, -0.001778],
])
# the refinement run below uses this many objective calls; the shipped preset
# budget is larger, see README
VCP_REFINE_EVALS = 300


def report(n, ok, detail):
    line = f"CRITERION {n} {'PASS' if ok else 'FAIL'}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def vcp_setup(**system):
    s = replace(VCP_SYSTEM, **system)
    sched = SymmetrizationSchedule(vcp_group(), 2500, 4)
    return GateSetup("modified_controlled_phase", VCP_SWEEP, s, sched.plan(), sched, frame="lab")


def criterion_1():
    ok, parts = True, []
    for gate, (lam, eta, published) in ONE_QUBIT_POINTS.items():
        base = GateSetup(gate, SweepParameters(lam, eta, 160.0), plan=PropagationPlan(ONE_QUBIT_STEPS))
        t = time.perf_counter()
        _, m = evaluate_gate(base)
        wall = time.perf_counter() - t
        _, m2 = evaluate_gate(replace(base, plan=PropagationPlan(2 * ONE_QUBIT_STEPS)))
        change = abs(m2.trace_p - m.trace_p) / m.trace_p
        ratio = m.trace_p / published
        good = m.trace_p < 1e-4 and 0.5 <= ratio <= 2 and change < 0.02 and wall < 1.0
        ok &= good
        parts.append(f"{gate} TrP={m.trace_p:.3e} (x{ratio:.3f} of published, halving {change:.2%}, {wall:.2f}s)")
    return report(1, ok, "; ".join(parts))


def criterion_2():
    t = time.perf_counter()
    ua, m = evaluate_gate(vcp_setup())
    wall = time.perf_counter() - t
    dev = max(np.max(np.abs(ua.real - RE_UA)), np.max(np.abs(ua.imag - IM_UA)))
    ratio = m.trace_p / VCP_TRACE_P
    ok = (m.trace_p <= 1.5e-4 and 0.5 <= ratio <= 2 and abs(m.fidelity - VCP_FIDELITY) <= 5e-5
          and dev <= 2e-3 and wall < 30)
    return report(2, ok, f"TrP={m.trace_p:.4e} (published 8.87e-5), F={m.fidelity:.6f}, "
                         f"max entry deviation {dev:.3e} (limit 2e-3), {wall:.2f}s")


def criterion_3():
    c4 = sensitivity_scan(vcp_setup(), "c4", [-0.001, 0.0, 0.001])
    d4 = sensitivity_scan(vcp_setup(), "d4", [-1e-4, 0.0, 1e-4])
    c_ok = all(2e-3 <= r.trace_p <= 2e-2 for r in (c4[0], c4[2]))
    d_ok = all(5e-4 <= r.trace_p <= 5e-3 for r in (d4[0], d4[2]))
    min_ok = all(rows[1].trace_p == min(r.trace_p for r in rows) for rows in (c4, d4))
    fmt = lambda rows: ", ".join(f"{r.value:.4f}:{r.trace_p:.3e}" for r in rows)
    return report(3, c_ok and d_ok and min_ok,
                  f"c4 [{fmt(c4)}] d4 [{fmt(d4)}] base-is-minimum={min_ok}")


def criterion_4():
    p = SweepParameters(5.04, 3.0e-4, 120.0)
    n = min_subintervals(p, 0.005)
    bound = subinterval_bound(p, 0.005)
    ok = n == 1601 and abs(bound - 7.5e-2) <= 1e-15
    return report(4, ok, f"N={n}, dt bound={bound!r}")


def criterion_5():
    rng = np.random.default_rng(2024)
    checks = {}
    # unitarity of propagators (plain, symmetrized, long)
    had = SweepParameters(5.8511, 2.9280e-4, 160.0)
    us = [propagate(one_qubit_source(had), had, PropagationPlan(n)) for n in (1, 1000, 1_000_000)]
    us.append(symmetrized_propagate(two_qubit_source(VCP_SWEEP, VCP_SYSTEM), VCP_SWEEP,
                                    SymmetrizationSchedule(vcp_group())))
    checks["unitarity"] = max(unitarity_error(u) for u in us) <= 1e-10
    # fidelity identity and eigen bound on random pairs
    from scipy.stats import unitary_group
    ferr, bound_ok = 0.0, True
    for k in range(1000):
        d = 2 if k % 2 else 4
        ua = unitary_group.rvs(d, random_state=rng)
        ut = unitary_group.rvs(d, random_state=rng)
        n = int(math.log2(d))
        ferr = max(ferr, abs(fidelity(ua, ut) - (1 - trace_p(ua, ut) / 2 ** (n + 1))))
        m = gate_metrics(ua, ut)
        bound_ok &= m.pe_eigen_bound <= m.trace_p + 1e-12
    checks["fidelity identity"] = ferr <= 1e-12
    checks["lambda_max<=TrP"] = bound_ok
    # commutant projection
    g = vcp_group()
    cerr = ierr = 0.0
    for _ in range(200):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        h = (a + a.conj().T) / 2
        ht = effective_hamiltonian(h, g)
        cerr = max(cerr, max(np.max(np.abs(ht @ r - r @ ht)) for r in g.elements))
        ierr = max(ierr, np.max(np.abs(effective_hamiltonian(ht, g) - ht)))
    checks["commutator"] = cerr <= 1e-12
    checks["idempotence"] = ierr <= 1e-12
    # symmetrization limit on a two-level example: error ~ 1/N
    g2 = SymmetryGroup((I2, SZ))
    h = SX + SZ
    ref = expm_skew(effective_hamiltonian(h, g2), 1.0)
    ns = [10, 100, 1000, 10_000]
    errs = [np.max(np.abs(symmetrized_propagate(constant_source(h), SweepParameters(1, 1, 1.0),
                                                SymmetrizationSchedule(g2, n, 1)) - ref)) for n in ns]
    sym_slope = np.polyfit(np.log(ns), np.log(errs), 1)[0]
    checks["symmetrization slope"] = abs(sym_slope + 1.0) <= 0.2
    # integrator order on the Hadamard sweep
    rep = convergence_study(one_qubit_source(had), had, 10_000, 3)
    checks["integrator slope"] = abs(rep.slope - 2.0) <= 0.1
    ok = all(checks.values())
    detail = ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items())
    return report(5, ok, f"{detail}; sym slope {sym_slope:.3f}, order {rep.slope:.3f}, "
                         f"max F err {ferr:.1e}, max [H~,rho] {cerr:.1e}")


def criterion_6():
    checks = {}
    tight = NelderMeadSettings(tol_f=1e-20, tol_x=1e-12)
    r = nelder_mead(lambda v: (v[0] - 1) ** 2 + (v[1] + 2) ** 2,
                    ParameterSpace(("x", "y"), (-5, -5), (5, 5), start=(0, 0)),
                    OptimizerConfig(max_evals=2000, nm=tight))
    checks["NM quadratic"] = abs(r.best_params["x"] - 1) < 1e-6 and abs(r.best_params["y"] + 2) < 1e-6
    r = nelder_mead(lambda v: 100 * (v[1] - v[0] ** 2) ** 2 + (1 - v[0]) ** 2,
                    ParameterSpace(("x", "y"), (-3, -3), (3, 3), start=(-1.2, 1)),
                    OptimizerConfig(max_evals=5000, nm=tight))
    checks["NM Rosenbrock"] = abs(r.best_params["x"] - 1) < 1e-3 and abs(r.best_params["y"] - 1) < 1e-3
    dw = lambda v: (v[0] ** 2 - 1) ** 2 + 0.2 * v[0]
    space = ParameterSpace(("x",), (-2,), (2,), start=(1.0,))
    sa = AnnealingSettings(initial_temperature=1.0, steps_per_epoch=50, restarts=5)
    hits = sum(simulated_annealing(dw, space, OptimizerConfig("simulated_annealing", seed=s, max_evals=2000, sa=sa))
               .best_params["x"] < 0 for s in range(100))
    checks["SA double well"] = hits >= 95
    cfg = OptimizerConfig("simulated_annealing", seed=11, max_evals=2000, sa=sa)
    checks["determinism"] = (simulated_annealing(dw, space, cfg).as_dict()
                             == simulated_annealing(dw, space, cfg).as_dict())

    had = load_config("table1-hadamard-refine")
    res_h = nelder_mead(TracePObjective(had.setup, had.space), had.space, had.optimizer)
    checks["Hadamard refine"] = res_h.best_trace_p <= 2e-5

    vcp = load_config("vcp-refine", [f"optimizer.max_evals={VCP_REFINE_EVALS}"])
    res_v = simulated_annealing(TracePObjective(vcp.setup, vcp.space), vcp.space, vcp.optimizer)
    checks["V_cp refine"] = res_v.best_trace_p <= 1.5e-4
    ok = all(checks.values())
    detail = ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items())
    return report(6, ok, f"{detail}; SA hits {hits}/100, Hadamard best {res_h.best_trace_p:.3e}, "
                         f"V_cp best {res_v.best_trace_p:.3e} after {res_v.eval_count} evals")


def criterion_7(tmp_dir):
    worst = 0.0
    path = tmp_dir / "records.jsonl"
    for preset in ("table1-hadamard", "table1-phase", "vcp-symmetrized"):
        append_record(path, cmd_simulate(load_config(preset), emit=lambda *_: None)[0])
    for rec in read_records(path):
        again = replay(rec)
        worst = max(worst, abs(again.metrics.trace_p - rec["metrics"]["trace_p"]))
    return report(7, worst <= 1e-12, f"max |dTrP| on replay = {worst:.1e} over 3 records")


def test_criterion_1_one_qubit_gates():
    assert criterion_1()


def test_criterion_2_vcp():
    assert criterion_2()


def test_criterion_3_sensitivity_scans():
    assert criterion_3()


def test_criterion_4_subintervals():
    assert criterion_4()


def test_criterion_5_properties():
    assert criterion_5()


def test_criterion_6_optimizers():
    assert criterion_6()


def test_criterion_7_replay(tmp_path):
    assert criterion_7(tmp_path)


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        for fn in (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6):
            fn()
        criterion_7(Path(d))
