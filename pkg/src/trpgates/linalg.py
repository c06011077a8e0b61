"""Dense complex linear algebra for one- and two-qubit operators.

Operators are plain ``numpy`` arrays of shape ``(d, d)`` with ``d`` in
``{2, 4}``.  Several routines also accept a stack of shape ``(n, d, d)`` so a
whole time grid can be processed in one call.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
ALLOWED_DIMS = (2, 4)

# chunk length for the time-ordered product; bounds peak memory at ~2 MB
_CHUNK = 1 << 15


class LinalgError(ValueError):
    """Raised when an operator violates a structural requirement."""


class EigenDecomposition(NamedTuple):
    """Ascending eigenvalues and the matching orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray


def check_matrix(m, dims=ALLOWED_DIMS) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in dims:
        raise LinalgError(f"expected a square matrix of dimension {dims}, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise LinalgError("matrix has non-finite entries")
    return m


def hermiticity_error(m) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m - np.conj(np.swapaxes(m, -1, -2)))))


def unitarity_error(u) -> float:
    u = np.asarray(u)
    d = u.shape[-1]
    return float(np.max(np.abs(np.conj(np.swapaxes(u, -1, -2)) @ u - np.eye(d))))


def check_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    m = check_matrix(m)
    err = hermiticity_error(m)
    if err > tol:
        raise LinalgError(f"matrix is not Hermitian: max|M - M^dag| = {err:.3e} > {tol:.1e}")
    return m


def check_unitary(u, tol: float = UNITARY_TOL) -> np.ndarray:
    u = check_matrix(u)
    err = unitarity_error(u)
    if err > tol:
        raise LinalgError(f"matrix is not unitary: max|U^dag U - I| = {err:.3e} > {tol:.1e}")
    return u


def adjoint(m) -> np.ndarray:
    return np.conj(np.swapaxes(np.asarray(m), -1, -2))


def matmul(a, b) -> np.ndarray:
    a = check_matrix(a)
    b = check_matrix(b)
    if a.shape != b.shape:
        raise LinalgError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b


def tensor(a, b) -> np.ndarray:
    """Kronecker product of two single-qubit operators.

    The two-qubit basis is ordered ``|uu>, |ud>, |du>, |dd>``, with the first
    factor acting on qubit 1.
    """
    a = check_matrix(a, dims=(2,))
    b = check_matrix(b, dims=(2,))
    return np.kron(a, b)


def eigh(h, tol: float = 1e-10) -> EigenDecomposition:
    """Hermitian eigendecomposition with ascending eigenvalues.

    Accepts a single matrix or a stack.  The decomposition is verified by its
    residual ``max|H v - lambda v|``; a residual above ``tol`` (scaled by the
    operator norm) raises :class:`LinalgError`.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim == 2:
        check_hermitian(h)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise LinalgError(f"eigendecomposition failed: {exc}") from exc
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    resid = float(np.max(np.abs(h @ v - v * w[..., None, :]), initial=0.0))
    if resid > tol * scale:
        raise LinalgError(f"eigendecomposition residual {resid:.3e} exceeds {tol * scale:.1e}")
    return EigenDecomposition(w, v)


def expm_skew(h, dt) -> np.ndarray:
    """Return ``exp(-i dt h)`` for Hermitian ``h``.

    Computed from the eigendecomposition of ``h``, so the result is unitary to
    machine precision.  ``h`` may be a stack ``(n, d, d)``, in which case ``dt``
    may be a scalar or an array of length ``n``.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim == 2:
        check_hermitian(h)
    elif hermiticity_error(h) > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(h), initial=0.0))):
        raise LinalgError("stack contains a non-Hermitian generator")
    w, v = np.linalg.eigh(h)
    phase = np.exp(-1j * np.asarray(dt)[..., None] * w)
    return (v * phase[..., None, :]) @ adjoint(v)


def ordered_product(stack) -> np.ndarray:
    """Time-ordered product ``M[n-1] @ ... @ M[1] @ M[0]`` of a stack.

    Uses pairwise reduction so the work is vectorised; element 0 acts first.
    """
    stack = np.asarray(stack, dtype=complex)
    if stack.ndim != 3:
        raise LinalgError(f"expected a stack of matrices, got shape {stack.shape}")
    d = stack.shape[-1]
    if stack.shape[0] == 0:
        return np.eye(d, dtype=complex)
    result = np.eye(d, dtype=complex)
    for start in range(0, stack.shape[0], _CHUNK):
        m = stack[start:start + _CHUNK]
        while m.shape[0] > 1:
            if m.shape[0] % 2:
                tail = m[-1:]
                m = np.concatenate([m[1:-1:2] @ m[0:-1:2], tail])
            else:
                m = m[1::2] @ m[0::2]
        result = m[0] @ result
    return result
