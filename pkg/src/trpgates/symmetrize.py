"""Group-symmetrized (bang-bang) propagation.

The sweep is cut into ``N`` subintervals.  Each subinterval is split again
into ``|G|`` equal sub-subintervals; during the ``j``-th one the system evolves
under the TRP Hamiltonian and pulses conjugate the evolution by ``rho_j``, so a
subinterval realises ``prod_j rho_j^dag dU_j rho_j`` with ``j = 1`` acting
first.  For large ``N`` the dynamics is generated by the group average
``H~ = (1/|G|) sum_j rho_j^dag H rho_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import I2, I4, SZ, LinalgError, adjoint, ordered_product, unitarity_error
from .model import SweepParameters, phase_quartic, phase_quartic_rate
from .propagate import PropagationError, PropagationPlan, propagate, slice_propagators


class ScheduleError(ValueError):
    """Schedule and integration plan do not line up."""


@dataclass(frozen=True, eq=False)
class SymmetryGroup:
    """Finite unitary group ``rho_1 .. rho_|G|`` with ``rho_1 = I``.

    Closure is checked up to a global phase.
    """

    elements: tuple

    def __post_init__(self):
        els = tuple(np.array(e, dtype=complex) for e in self.elements)
        if not els:
            raise ValueError("group needs at least the identity")
        d = els[0].shape[0]
        if any(e.shape != (d, d) for e in els):
            raise ValueError("group elements must share one square shape")
        if not np.array_equal(els[0], np.eye(d)):
            raise ValueError("first group element must be the identity")
        for e in els:
            if unitarity_error(e) > 1e-12:
                raise ValueError("group elements must be unitary")
        for a in els:
            for b in els:
                if not any(_equal_up_to_phase(a @ b, c) for c in els):
                    raise ValueError("elements are not closed under multiplication")
        for e in els:
            e.setflags(write=False)
        object.__setattr__(self, "elements", els)

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @property
    def trivial(self) -> bool:
        return self.order == 1


def _equal_up_to_phase(a, b, tol=1e-10) -> bool:
    k = np.argmax(np.abs(b))
    idx = np.unravel_index(k, b.shape)
    if abs(a[idx]) < tol:
        return False
    phase = a[idx] / b[idx]
    return abs(abs(phase) - 1) < tol and np.max(np.abs(a - phase * b)) < tol


def vcp_group() -> SymmetryGroup:
    """``{I, Z1, Z2, Z1 Z2}``, the group leaving the controlled-phase gate invariant."""
    return SymmetryGroup((I4, np.kron(SZ, I2), np.kron(I2, SZ), np.kron(SZ, SZ)))


def trivial_group(dim: int = 4) -> SymmetryGroup:
    return SymmetryGroup((np.eye(dim),))


@dataclass(frozen=True)
class SymmetrizationSchedule:
    group: SymmetryGroup
    n_subintervals: int = 2500
    slices_per_subsub: int = 4

    def __post_init__(self):
        for name in ("n_subintervals", "slices_per_subsub"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    @property
    def total_slices(self) -> int:
        return self.n_subintervals * self.group.order * self.slices_per_subsub

    @property
    def pulses_per_subinterval(self) -> int:
        # |G| - 1 interleaved pulses plus the closing one
        return self.group.order

    def plan(self, rule: str = "midpoint") -> PropagationPlan:
        return PropagationPlan(steps=self.total_slices, rule=rule)


def subinterval_bound(p: SweepParameters, ratio: float) -> float:
    """Largest subinterval width keeping ``dphi / phi_f`` below ``ratio``.

    Uses the twist rate at the end of the sweep, ``phi_f / phi'(tau0/2)``, which
    for the quartic profile is exactly ``tau0 / 8``.
    """
    t = 0.5 * p.tau0
    return ratio * float(phase_quartic(t, p)) / float(phase_quartic_rate(t, p))


def min_subintervals(p: SweepParameters, ratio: float) -> int:
    """Smallest ``N`` with ``tau0 / N`` strictly below :func:`subinterval_bound`."""
    if not ratio > 0:
        raise ValueError("ratio must be positive")
    bound = subinterval_bound(p, ratio)
    if bound >= p.tau0:
        return 1
    n = max(1, math.ceil(p.tau0 / bound))
    while p.tau0 / n >= bound:
        n += 1
    while n > 1 and p.tau0 / (n - 1) < bound:
        n -= 1
    return n


def effective_hamiltonian(h, g: SymmetryGroup) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.shape[-1] != g.dim:
        raise LinalgError(f"dimension mismatch: H is {h.shape[-1]}, group acts on {g.dim}")
    return sum(adjoint(r) @ h @ r for r in g.elements) / g.order


def symmetrized_propagate(hsource, p: SweepParameters, sched: SymmetrizationSchedule,
                          plan: PropagationPlan | None = None,
                          window: tuple[float, float] | None = None) -> np.ndarray:
    """Propagate with bang-bang group symmetrization.

    ``plan.steps`` must equal ``sched.total_slices`` so that sub-subinterval
    boundaries fall on slice boundaries.  The pulses are exact matrix
    products: the evolution over sub-subinterval ``j`` is sandwiched as
    ``rho_j^dag dU rho_j``, which is the pulse sequence ``rho_{j+1} rho_j^dag``
    between segments plus a closing ``rho_|G|^dag``.  With the trivial group the
    result is exactly :func:`propagate`.
    """
    plan = plan or sched.plan()
    if plan.steps != sched.total_slices:
        raise ScheduleError(
            f"plan has {plan.steps} slices but the schedule needs "
            f"{sched.n_subintervals} x {sched.group.order} x {sched.slices_per_subsub} = {sched.total_slices}")
    if sched.group.trivial:
        return propagate(hsource, p, plan, window)
    window = window or p.window
    g = sched.group
    slices = slice_propagators(hsource, window, plan.steps, plan.rule)
    if slices.shape[-1] != g.dim:
        raise ScheduleError(f"Hamiltonian acts on dimension {slices.shape[-1]}, group on {g.dim}")
    k = sched.slices_per_subsub
    blocks = slices.reshape(sched.n_subintervals, g.order, k, g.dim, g.dim)
    du = blocks[:, :, 0]
    for i in range(1, k):
        du = blocks[:, :, i] @ du
    rho = np.stack(g.elements)
    du = adjoint(rho) @ du @ rho
    u = ordered_product(du.reshape(-1, g.dim, g.dim))
    err = unitarity_error(u)
    if err > 1e-10:
        raise PropagationError(f"propagator lost unitarity ({err:.2e})")
    return u
