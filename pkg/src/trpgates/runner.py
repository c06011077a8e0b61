"""The five workflows behind the ``trp`` command.

Each ``cmd_*`` takes a :class:`~trpgates.config.RunConfig`, returns run
records and writes a human-readable summary through ``emit``.  Persisting the
records is left to the caller.
"""

from __future__ import annotations

import math
import time
from typing import Callable

import numpy as np

from .config import ConfigError, RunConfig, build_config, load_raw
from .gates import GateSetup, applied_gate, hamiltonian_source, readout
from .metrics import gate_metrics
from .model import target_gate
from .optimize import (
    TracePObjective,
    optimize,
    params_of,
    sensitivity_scan,
    setup_from_params,
)
from .propagate import convergence_study, fit_slope
from .records import RunRecord, format_matrix
from .symmetrize import SymmetrizationSchedule, symmetrized_propagate

GateFn = Callable[[GateSetup], np.ndarray]


def _simulate_setup(setup: GateSetup, gate_fn: GateFn):
    t = time.perf_counter()
    ua = gate_fn(setup)
    m = gate_metrics(ua, target_gate(setup.target).matrix)
    return ua, m, time.perf_counter() - t


def cmd_simulate(cfg: RunConfig, emit=print, gate_fn: GateFn = applied_gate) -> list[RunRecord]:
    ua, m, wall = _simulate_setup(cfg.setup, gate_fn)
    emit(f"{cfg.target}: Tr P = {m.trace_p:.6e}  F = {m.fidelity:.6f}  "
         f"lambda_max(P) = {m.pe_eigen_bound:.3e}  ({wall:.2f} s)")
    emit(format_matrix(ua))
    return [RunRecord(cfg.raw, m, ua, wall_time_s=wall)]


def cmd_optimize(cfg: RunConfig, emit=print, gate_fn: GateFn = applied_gate) -> list[RunRecord]:
    t = time.perf_counter()
    obj = TracePObjective(cfg.setup, cfg.space)
    res = optimize(obj, cfg.space, cfg.optimizer)
    best = setup_from_params(cfg.setup, res.best_params)
    ua, m, _ = _simulate_setup(best, gate_fn)
    wall = time.perf_counter() - t
    emit(f"{cfg.optimizer.algorithm}: {res.eval_count} evaluations, {res.message}")
    emit("best " + "  ".join(f"{n} = {res.best_params[n]:.8g}" for n in cfg.space.names))
    emit(f"{cfg.target}: Tr P = {m.trace_p:.6e}  F = {m.fidelity:.6f}  ({wall:.1f} s)")
    extra = {"optimization": res.as_dict(), "best_config": config_at(cfg.raw, res.best_params)}
    return [RunRecord(cfg.raw, m, ua, seed=cfg.optimizer.seed, wall_time_s=wall, extra=extra)]


def config_at(raw: dict, params: dict) -> dict:
    """Simulate-config echo for a parameter point, so an optimum can be replayed."""
    out = {k: v for k, v in raw.items() if k not in ("optimizer", "space", "scan", "converge", "command")}
    out["command"] = "simulate"
    out["sweep"] = {k: params[k] for k in ("lambda", "eta4", "tau0")}
    if "system" in raw:
        out["system"] = {k: params[k] for k in ("c4", "d1", "d2", "d3", "d4")}
    return out


def cmd_scan(cfg: RunConfig, emit=print, workers: int = 1) -> list[RunRecord]:
    name = cfg.scan["param"]
    t = time.perf_counter()
    rows = sensitivity_scan(cfg.setup, name, cfg.scan["offsets"], workers=workers)
    wall = time.perf_counter() - t
    emit(f"{name:>12}  {'Tr P':>12}")
    for r in rows:
        emit(f"{r.value:>12.6g}  {r.trace_p:>12.3e}")
    records = []
    for r in rows:
        point = setup_from_params(cfg.setup, dict(params_of(cfg.setup), **{name: r.value}))
        raw = config_at(cfg.raw, params_of(point))
        records.append(RunRecord(raw, None, None, wall_time_s=wall / max(1, len(rows)),
                                 extra={"scan": {"param": name, "value": r.value, "trace_p": r.trace_p}}))
    return records


def cmd_converge(cfg: RunConfig, emit=print) -> list[RunRecord]:
    setup = cfg.setup
    ut = target_gate(setup.target).matrix
    t = time.perf_counter()
    extra = {}
    if setup.schedule is None:
        report = convergence_study(
            hamiltonian_source(setup), setup.sweep, cfg.converge["base_steps"], cfg.converge["doublings"],
            rule=setup.plan.rule,
            metric=lambda u: gate_metrics(readout(setup, u), ut).trace_p)
        emit(report.table())
        extra["steps"] = {"rows": [[r.steps, r.diff, r.metric] for r in report.rows],
                          "slope": report.slope, "saturated": report.saturated}
    ns = cfg.converge["n_subintervals"] or ([] if setup.schedule is None else
                                            [setup.schedule.n_subintervals // 4,
                                             setup.schedule.n_subintervals // 2,
                                             setup.schedule.n_subintervals])
    if ns:
        if setup.schedule is None:
            raise ConfigError("converge.n_subintervals needs a symmetrization schedule")
        src = hamiltonian_source(setup)
        us, tps = [], []
        for n in ns:
            sched = SymmetrizationSchedule(setup.schedule.group, n, setup.schedule.slices_per_subsub)
            u = symmetrized_propagate(src, setup.sweep, sched, sched.plan(setup.plan.rule))
            us.append(u)
            tps.append(gate_metrics(u, ut).trace_p)
        diffs = [float(np.max(np.abs(a - b))) for a, b in zip(us, us[1:])]
        emit(f"{'N':>8}  {'Tr P':>12}  {'max|U(N)-U(next)|':>18}")
        for i, n in enumerate(ns):
            d = f"{diffs[i]:.3e}" if i < len(diffs) else ""
            emit(f"{n:>8d}  {tps[i]:>12.6e}  {d:>18}")
        slope = fit_slope([1.0 / n for n in ns[:-1]], diffs) if len(diffs) >= 2 else math.nan
        monotone = all(b <= a for a, b in zip(diffs, diffs[1:]))
        emit(f"slope {slope:+.3f}  monotone={monotone}")
        extra["subintervals"] = {"n": ns, "trace_p": tps, "diffs": diffs, "slope": slope, "monotone": monotone}
    wall = time.perf_counter() - t
    return [RunRecord(cfg.raw, None, None, wall_time_s=wall, extra=extra)]


def cmd_report(cfg: RunConfig, emit=print, gate_fn: GateFn = applied_gate) -> list[RunRecord]:
    emit(f"{'gate':<26}  {'lambda':>8}  {'eta4':>11}  {'Tr P':>10}  {'F':>9}")
    records = []
    for source in cfg.runs:
        sub = build_config(dict(load_raw(source), command="simulate"))
        ua, m, wall = _simulate_setup(sub.setup, gate_fn)
        emit(f"{sub.target:<26}  {sub.sweep.lam:>8.4f}  {sub.sweep.eta4:>11.4e}  "
             f"{m.trace_p:>10.2e}  {m.fidelity:>9.6f}")
        records.append(RunRecord(sub.raw, m, ua, wall_time_s=wall))
    return records


def replay(record: dict, gate_fn: GateFn = applied_gate) -> RunRecord:
    """Re-run the simulate config stored in a record (or its optimum, for optimize records)."""
    raw = record.get("extra", {}).get("best_config") or record["config"]
    cfg = build_config(dict(raw, command="simulate"))
    ua, m, wall = _simulate_setup(cfg.setup, gate_fn)
    return RunRecord(cfg.raw, m, ua, wall_time_s=wall)
