"""Derivative-free minimisation of Tr P over sweep and system parameters.

Both optimisers work on the unit box: each free parameter is mapped to
``[0, 1]`` over its bounds, so ``eta4 ~ 1e-4`` and ``d1 ~ 1e2`` share one
simplex.  Objectives take a vector in physical units.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .gates import GateSetup, evaluate_gate
from .model import SweepParameters, TwoQubitSystemParameters

log = logging.getLogger(__name__)

SWEEP_NAMES = ("lambda", "eta4", "tau0")
SYSTEM_NAMES = ("c4", "d1", "d2", "d3", "d4")
PARAM_NAMES = SWEEP_NAMES + SYSTEM_NAMES
PENALTY = 1e6


@dataclass(frozen=True)
class ParameterSpace:
    """Free parameters with box bounds, plus frozen values for the rest.

    Names are free-form here; :class:`TracePObjective` restricts them to
    ``PARAM_NAMES``.  ``start`` defaults to the box centre.
    """

    names: tuple[str, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    fixed: dict = field(default_factory=dict)
    start: tuple[float, ...] | None = None

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        if not names:
            raise ValueError("at least one free parameter is required")
        if len(set(names)) != len(names):
            raise ValueError("duplicate free parameter")
        if not (len(self.lower) == len(self.upper) == len(names)):
            raise ValueError("bounds must match the free parameters")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("lower bounds must be below upper bounds")
        overlap = set(names) & set(self.fixed)
        if overlap:
            raise ValueError(f"parameters both free and fixed: {sorted(overlap)}")
        if self.start is not None:
            start = tuple(float(v) for v in self.start)
            if len(start) != len(names):
                raise ValueError("start must match the free parameters")
            if any(not lo <= s <= hi for s, lo, hi in zip(start, self.lower, self.upper)):
                raise ValueError("start lies outside the bounds")
            object.__setattr__(self, "start", start)

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def span(self) -> np.ndarray:
        return np.subtract(self.upper, self.lower)

    def to_unit(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / self.span

    def from_unit(self, u) -> np.ndarray:
        return np.asarray(self.lower) + np.asarray(u, dtype=float) * self.span

    def initial(self) -> np.ndarray:
        if self.start is not None:
            return np.array(self.start)
        return self.from_unit(np.full(self.dim, 0.5))

    def assemble(self, x) -> dict:
        params = dict(self.fixed)
        params.update(zip(self.names, (float(v) for v in x)))
        return params

    def require(self, needed: Sequence[str]):
        have = set(self.names) | set(self.fixed)
        missing = [n for n in needed if n not in have]
        if missing:
            raise ValueError(f"parameters neither free nor fixed: {missing}")

    @classmethod
    def box_around(cls, point: dict, free: Sequence[str], rel: float, fixed: dict | None = None):
        """Box of relative half-width ``rel`` around ``point`` for the ``free`` names."""
        lo, hi = [], []
        for n in free:
            v = point[n]
            a, b = sorted((v * (1 - rel), v * (1 + rel)))
            lo.append(a)
            hi.append(b)
        rest = {k: v for k, v in point.items() if k not in free}
        rest.update(fixed or {})
        return cls(tuple(free), tuple(lo), tuple(hi), rest, tuple(point[n] for n in free))


@dataclass(frozen=True)
class NelderMeadSettings:
    initial_scale: float | tuple[float, ...] = 0.1   # simplex edge, unit-box coordinates
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    tol_f: float = 1e-12
    tol_x: float = 1e-9


@dataclass(frozen=True)
class AnnealingSettings:
    initial_temperature: float = 1.0
    cooling_factor: float = 0.95
    steps_per_epoch: int = 200
    proposal_scale: float | tuple[float, ...] = 0.1  # Gaussian sigma, unit-box coordinates
    restarts: int = 5

    def __post_init__(self):
        if not 0 < self.cooling_factor < 1:
            raise ValueError("cooling_factor must lie in (0, 1)")
        if not self.initial_temperature > 0:
            raise ValueError("initial_temperature must be positive")
        if self.steps_per_epoch < 1 or self.restarts < 1:
            raise ValueError("steps_per_epoch and restarts must be positive")


@dataclass(frozen=True)
class OptimizerConfig:
    algorithm: str = "nelder_mead"
    seed: int = 0
    max_evals: int = 2000
    nm: NelderMeadSettings = field(default_factory=NelderMeadSettings)
    sa: AnnealingSettings = field(default_factory=AnnealingSettings)
    workers: int = 1

    def __post_init__(self):
        if self.algorithm not in ("nelder_mead", "simulated_annealing"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.max_evals < 1:
            raise ValueError("max_evals must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class OptimizationResult:
    best_params: dict
    best_trace_p: float
    eval_count: int
    trace: list = field(default_factory=list)     # (eval index, objective value)
    seed: int = 0
    message: str = ""

    def as_dict(self) -> dict:
        return {
            "best_params": dict(self.best_params),
            "best_trace_p": self.best_trace_p,
            "eval_count": self.eval_count,
            "trace": [list(t) for t in self.trace],
            "seed": self.seed,
            "message": self.message,
        }


def setup_from_params(base: GateSetup, params: dict) -> GateSetup:
    """Copy of ``base`` with sweep/system values taken from ``params`` where present."""
    sw = base.sweep
    sweep = SweepParameters(params.get("lambda", sw.lam), params.get("eta4", sw.eta4),
                            params.get("tau0", sw.tau0))
    system = base.system
    if system is not None:
        system = TwoQubitSystemParameters(**{n: params.get(n, getattr(system, n)) for n in SYSTEM_NAMES})
    return replace(base, sweep=sweep, system=system)


def params_of(setup: GateSetup) -> dict:
    out = {"lambda": setup.sweep.lam, "eta4": setup.sweep.eta4, "tau0": setup.sweep.tau0}
    if setup.system is not None:
        out.update({n: getattr(setup.system, n) for n in SYSTEM_NAMES})
    return out


@dataclass(frozen=True)
class TracePObjective:
    """Tr P of the applied gate, as a function of the free parameters.

    Any failure to build or propagate the Hamiltonian returns ``PENALTY`` so a
    simplex or annealer keeps moving.  Instances are picklable and can be
    shipped to worker processes.
    """

    base: GateSetup
    space: ParameterSpace

    def __post_init__(self):
        unknown = [n for n in self.space.names + tuple(self.space.fixed) if n not in PARAM_NAMES]
        if unknown:
            raise ValueError(f"unknown parameters {unknown}; expected names from {PARAM_NAMES}")
        if self.base.system is None:
            extra = [n for n in self.space.names if n in SYSTEM_NAMES]
            if extra:
                raise ValueError(f"one-qubit gates have no parameters {extra}")

    def setup_at(self, x) -> GateSetup:
        return setup_from_params(self.base, self.space.assemble(x))

    def __call__(self, x) -> float:
        try:
            _, m = evaluate_gate(self.setup_at(x))
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            log.warning("objective penalised at %s: %s", list(np.asarray(x, dtype=float)), exc)
            return PENALTY
        return m.trace_p


def objective(target, space: ParameterSpace, point, base: GateSetup | None = None) -> float:
    """Evaluate Tr P at ``point``; ``target`` is a gate name or a :class:`GateSetup`."""
    if isinstance(target, GateSetup):
        base = target
    if base is None:
        raise ValueError("a base GateSetup is needed to supply the plan and frame")
    return TracePObjective(base, space)(point)


def _reflect_unit(u: np.ndarray) -> np.ndarray:
    # fold back into [0, 1]; period-2 triangle wave handles far excursions
    u = np.mod(u, 2.0)
    return np.where(u > 1.0, 2.0 - u, u)


class _Counter:
    def __init__(self, f, space, budget):
        self.f, self.space, self.budget = f, space, budget
        self.n = 0
        self.trace = []
        self.best_f = math.inf
        self.best_x = None

    @property
    def exhausted(self) -> bool:
        return self.n >= self.budget

    def __call__(self, u) -> float:
        x = self.space.from_unit(u)
        val = float(self.f(x))
        if not math.isfinite(val):
            val = PENALTY
        self.n += 1
        self.trace.append((self.n, val))
        if val < self.best_f:
            self.best_f, self.best_x = val, x
        return val


def nelder_mead(objective: Callable, space: ParameterSpace, config: OptimizerConfig) -> OptimizationResult:
    """Downhill simplex in the unit box.

    Points leaving the box are reflected back in.  Stops when the spread of
    simplex values drops below ``tol_f``, its diameter below ``tol_x`` or the
    evaluation budget runs out; the best point seen is returned.
    """
    s = config.nm
    n = space.dim
    f = _Counter(objective, space, config.max_evals)
    x0 = space.to_unit(space.initial())
    scale = np.broadcast_to(np.asarray(s.initial_scale, dtype=float), (n,))
    simplex = [x0]
    for i in range(n):
        v = x0.copy()
        v[i] += scale[i] if x0[i] + scale[i] <= 1.0 else -scale[i]
        simplex.append(_reflect_unit(v))
    simplex = np.array(simplex)
    values = []
    for v in simplex:
        if f.exhausted:
            break
        values.append(f(v))
    message = "budget exhausted"
    if len(values) == n + 1:
        values = np.array(values)
        while not f.exhausted:
            order = np.argsort(values, kind="stable")
            simplex, values = simplex[order], values[order]
            if values[-1] - values[0] < s.tol_f:
                message = "converged in f"
                break
            if np.max(np.abs(simplex[1:] - simplex[0])) < s.tol_x:
                message = "converged in x"
                break
            centroid = simplex[:-1].mean(axis=0)
            xr = _reflect_unit(centroid + s.reflection * (centroid - simplex[-1]))
            fr = f(xr)
            if fr < values[0]:
                if f.exhausted:
                    simplex[-1], values[-1] = xr, fr
                    break
                xe = _reflect_unit(centroid + s.expansion * (xr - centroid))
                fe = f(xe)
                simplex[-1], values[-1] = (xe, fe) if fe < fr else (xr, fr)
                continue
            if fr < values[-2]:
                simplex[-1], values[-1] = xr, fr
                continue
            if f.exhausted:
                break
            if fr < values[-1]:
                xc = _reflect_unit(centroid + s.contraction * (xr - centroid))
                fc = f(xc)
                accept = fc <= fr
            else:
                xc = _reflect_unit(centroid + s.contraction * (simplex[-1] - centroid))
                fc = f(xc)
                accept = fc < values[-1]
            if accept:
                simplex[-1], values[-1] = xc, fc
                continue
            for i in range(1, n + 1):
                if f.exhausted:
                    break
                simplex[i] = simplex[0] + s.shrink * (simplex[i] - simplex[0])
                values[i] = f(simplex[i])
    return OptimizationResult(space.assemble(f.best_x), f.best_f, f.n, f.trace, config.seed, message)


def restart_rng(seed: int, restart: int) -> np.random.Generator:
    """Independent stream for one annealing restart."""
    return np.random.default_rng([int(seed), int(restart)])


def _anneal_once(objective, space: ParameterSpace, config: OptimizerConfig, restart: int, budget: int):
    s = config.sa
    rng = restart_rng(config.seed, restart)
    f = _Counter(objective, space, budget)
    scale = np.broadcast_to(np.asarray(s.proposal_scale, dtype=float), (space.dim,))
    u = space.to_unit(space.initial())
    fu = f(u)
    temp = s.initial_temperature
    while not f.exhausted:
        for _ in range(s.steps_per_epoch):
            if f.exhausted:
                break
            v = np.clip(u + scale * rng.standard_normal(space.dim), 0.0, 1.0)
            fv = f(v)
            delta = fv - fu
            # the uniform draw is always consumed so the stream does not depend on branch history
            r = rng.random()
            if delta <= 0 or (temp > 0 and r < math.exp(-delta / temp)):
                u, fu = v, fv
        temp *= s.cooling_factor
    return f.best_x, f.best_f, f.trace


def simulated_annealing(objective: Callable, space: ParameterSpace, config: OptimizerConfig) -> OptimizationResult:
    """Metropolis annealing with geometric cooling and independent restarts.

    The budget ``max_evals`` is split evenly over ``restarts`` runs, all
    started from ``space.initial()``.  Each restart draws from its own stream
    keyed by ``(seed, restart)``, so running restarts in parallel
    (``config.workers > 1``) gives the same result as running them in order.
    """
    r = config.sa.restarts
    budgets = [config.max_evals // r + (1 if i < config.max_evals % r else 0) for i in range(r)]
    jobs = [(i, b) for i, b in enumerate(budgets) if b > 0]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(config.workers, len(jobs))) as pool:
            futures = [pool.submit(_anneal_once, objective, space, config, i, b) for i, b in jobs]
            runs = [fu.result() for fu in futures]
    else:
        runs = [_anneal_once(objective, space, config, i, b) for i, b in jobs]
    trace, offset = [], 0
    best_x, best_f = None, math.inf
    for x, fx, tr in runs:
        trace.extend((offset + k, v) for k, v in tr)
        offset += len(tr)
        if fx < best_f:
            best_x, best_f = x, fx
    return OptimizationResult(space.assemble(best_x), best_f, offset, trace, config.seed,
                              f"{len(jobs)} restarts")


def optimize(objective: Callable, space: ParameterSpace, config: OptimizerConfig) -> OptimizationResult:
    run = nelder_mead if config.algorithm == "nelder_mead" else simulated_annealing
    return run(objective, space, config)


@dataclass(frozen=True)
class ScanRow:
    value: float
    trace_p: float


def _eval_params(base: GateSetup, params: dict) -> float:
    try:
        _, m = evaluate_gate(setup_from_params(base, params))
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        log.warning("scan point penalised: %s", exc)
        return PENALTY
    return m.trace_p


def sensitivity_scan(base: GateSetup, param_name: str, offsets: Sequence[float],
                     workers: int = 1) -> list[ScanRow]:
    """Tr P at ``base + offset`` along one parameter, everything else fixed."""
    params = params_of(base)
    if param_name not in params:
        raise ValueError(f"unknown parameter {param_name!r} for {base.target}; "
                         f"expected one of {', '.join(params)}")
    points = [dict(params, **{param_name: params[param_name] + float(o)}) for o in offsets]
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(points))) as pool:
            values = list(pool.map(_eval_params, [base] * len(points), points))
    else:
        values = [_eval_params(base, pt) for pt in points]
    return [ScanRow(pt[param_name], v) for pt, v in zip(points, values)]
