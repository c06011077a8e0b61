"""Time-ordered integration of ``i dU/dtau = H(tau) U``.

The sweep window is cut into uniform slices and the Hamiltonian is held
constant on each one, so each slice contributes an exact matrix exponential
and the product stays unitary to roundoff however coarse the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .linalg import LinalgError, expm_skew, ordered_product, unitarity_error
from .model import (
    SweepParameters,
    TwoQubitSystemParameters,
    TWIST_SENSE,
    h1_stack,
    h2_stack,
)

RULES = ("midpoint", "endpoint")


class PropagationError(RuntimeError):
    """The Hamiltonian could not be evaluated or the result lost unitarity."""


@dataclass(frozen=True)
class PropagationPlan:
    """How finely to slice the sweep.

    Attributes
    ----------
    steps : int
        Number of uniform slices over the window.
    rule : {"midpoint", "endpoint"}
        Where each slice samples the Hamiltonian.  ``endpoint`` uses the left
        edge and is only first order.
    convergence_check : bool
        If set, :func:`propagate` also runs at ``2 * steps`` and raises when the
        two results differ by more than ``convergence_tol`` (max-abs).
    """

    steps: int = 160_000
    rule: str = "midpoint"
    convergence_check: bool = False
    convergence_tol: float = 1e-6

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps!r}")
        if self.rule not in RULES:
            raise ValueError(f"rule must be one of {RULES}, got {self.rule!r}")


@dataclass(frozen=True)
class HamiltonianSource:
    """A time-dependent Hamiltonian that can be sampled one time or a grid at a time.

    ``stack(taus)`` must return an array of shape ``(len(taus), d, d)``.
    Calling the source with a scalar returns a single matrix.
    """

    stack: Callable[[np.ndarray], np.ndarray]
    dim: int
    label: str = field(default="", compare=False)

    def __call__(self, tau: float) -> np.ndarray:
        return self.stack(np.array([float(tau)]))[0]


def one_qubit_source(p: SweepParameters, twist_sense: int = TWIST_SENSE) -> HamiltonianSource:
    return HamiltonianSource(lambda t: h1_stack(t, p, twist_sense), 2, "one-qubit TRP")


def two_qubit_source(p: SweepParameters, s: TwoQubitSystemParameters,
                     twist_sense: int = TWIST_SENSE) -> HamiltonianSource:
    return HamiltonianSource(lambda t: h2_stack(t, p, s, twist_sense), 4, "two-qubit TRP")


def constant_source(h) -> HamiltonianSource:
    h = np.array(h, dtype=complex)
    return HamiltonianSource(lambda t: np.broadcast_to(h, (len(t),) + h.shape), h.shape[0], "constant")


def sample_times(window: tuple[float, float], steps: int, rule: str = "midpoint") -> tuple[np.ndarray, float]:
    """Sampling instants and the slice width for a uniform grid over ``window``."""
    t0, t1 = window
    dt = (t1 - t0) / steps
    offset = 0.5 if rule == "midpoint" else 0.0
    return t0 + (np.arange(steps) + offset) * dt, dt


def evaluate(hsource, taus: np.ndarray) -> np.ndarray:
    """Sample ``hsource`` on ``taus``; plain callables are evaluated point by point."""
    try:
        if isinstance(hsource, HamiltonianSource):
            hs = hsource.stack(taus)
        else:
            hs = np.stack([np.asarray(hsource(t), dtype=complex) for t in taus])
    except (LinalgError, PropagationError):
        raise
    except ValueError as exc:
        # model errors already carry the offending tau
        raise PropagationError(str(exc)) from exc
    if not np.all(np.isfinite(hs)):
        bad = int(np.flatnonzero(~np.isfinite(hs).all(axis=(1, 2)))[0])
        raise PropagationError(f"non-finite Hamiltonian at tau={taus[bad]:.6g}")
    return hs


def slice_propagators(hsource, window, steps: int, rule: str = "midpoint") -> np.ndarray:
    """Per-slice exponentials ``exp(-i dtau H(tau_k))`` in time order."""
    taus, dt = sample_times(window, steps, rule)
    return expm_skew(evaluate(hsource, taus), dt)


def _propagate_once(hsource, window, steps, rule):
    u = ordered_product(slice_propagators(hsource, window, steps, rule))
    err = unitarity_error(u)
    if err > 1e-10:
        raise PropagationError(f"propagator lost unitarity ({err:.2e})")
    return u


def propagate(hsource, p: SweepParameters, plan: PropagationPlan | None = None,
              window: tuple[float, float] | None = None) -> np.ndarray:
    """Propagator over the sweep window, starting from ``U = I``.

    Parameters
    ----------
    hsource : HamiltonianSource or callable
        ``tau -> H``.  A :class:`HamiltonianSource` is sampled in one vectorised
        call; any other callable is sampled point by point.
    p : SweepParameters
        Supplies the default window ``[-tau0/2, tau0/2]``.
    plan : PropagationPlan, optional
    window : (float, float), optional
        Overrides the window from ``p``.

    Returns
    -------
    ndarray
        ``prod_k exp(-i dtau H(tau_k))`` with the earliest slice rightmost.
    """
    plan = plan or PropagationPlan()
    window = window or p.window
    u = _propagate_once(hsource, window, plan.steps, plan.rule)
    if plan.convergence_check:
        u2 = _propagate_once(hsource, window, 2 * plan.steps, plan.rule)
        diff = float(np.max(np.abs(u - u2)))
        if diff > plan.convergence_tol:
            raise PropagationError(
                f"not converged: step doubling from {plan.steps} changes U by {diff:.2e}")
    return u


@dataclass(frozen=True)
class ConvergenceRow:
    steps: int
    diff: float          # max|U(steps) - U(2 steps)|
    metric: float | None = None


@dataclass
class ConvergenceReport:
    rows: list[ConvergenceRow]
    slope: float         # log-log slope of diff against step width
    saturated: bool      # differences already at the roundoff floor

    def table(self) -> str:
        lines = [f"{'steps':>10}  {'max|dU|':>12}  {'metric':>14}"]
        for r in self.rows:
            m = "" if r.metric is None else f"{r.metric:.6e}"
            lines.append(f"{r.steps:>10d}  {r.diff:>12.3e}  {m:>14}")
        lines.append(f"slope {self.slope:+.3f}" + ("  (saturated at roundoff)" if self.saturated else ""))
        return "\n".join(lines)


ROUNDOFF_FLOOR = 1e-12


def fit_slope(widths, values) -> float:
    """Least-squares slope of ``log(values)`` against ``log(widths)``; nan if undefined."""
    w = np.asarray(widths, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = v > 0
    if keep.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(w[keep]), np.log(v[keep]), 1)[0])


def convergence_study(hsource, p: SweepParameters, base_steps: int, doublings: int,
                      rule: str = "midpoint", metric=None,
                      window: tuple[float, float] | None = None) -> ConvergenceReport:
    """Step-doubling study.

    Propagates at ``base_steps * 2**k`` for ``k = 0 .. doublings`` and records
    ``max|U(n) - U(2n)|`` for every level but the last.  ``metric`` (``U -> float``)
    is evaluated at each recorded level when given.  The reported slope is the
    fit of the differences against slice width, so a second-order rule gives
    about 2.
    """
    if doublings < 1:
        raise ValueError("doublings must be at least 1")
    window = window or p.window
    span = window[1] - window[0]
    us = [_propagate_once(hsource, window, base_steps * 2**k, rule) for k in range(doublings + 1)]
    rows = []
    for k in range(doublings):
        n = base_steps * 2**k
        rows.append(ConvergenceRow(n, float(np.max(np.abs(us[k] - us[k + 1]))),
                                   None if metric is None else float(metric(us[k]))))
    diffs = [r.diff for r in rows]
    saturated = max(diffs) < ROUNDOFF_FLOOR
    slope = fit_slope([span / r.steps for r in rows], diffs) if not saturated else math.nan
    return ConvergenceReport(rows, slope, saturated)
