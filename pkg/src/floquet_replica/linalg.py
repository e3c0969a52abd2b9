"""Dense complex linear algebra kernel and the Schrodinger ODE oracle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

HERMITIAN_RTOL = 1e-12


class NumericalFailure(ArithmeticError):
    """Raised when a computation cannot be carried out reliably (gap closure, ODE breakdown)."""


class NonHermitianError(ValueError):
    pass


class GapClosureError(NumericalFailure):
    pass


class ODEBreakdownError(NumericalFailure):
    pass


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues with orthonormal eigenvectors stored as columns."""

    values: np.ndarray
    vectors: np.ndarray


def hermiticity_defect(a: np.ndarray) -> float:
    """max |A_ij - conj(A_ji)| over all entries (and over a leading batch axis, if any)."""
    a = np.asarray(a)
    return float(np.max(np.abs(a - np.conj(np.swapaxes(a, -1, -2))), initial=0.0))


def check_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> None:
    a = np.asarray(a)
    if not np.all(np.isfinite(a)):
        raise NonHermitianError("matrix has non-finite entries")
    defect = hermiticity_defect(a)
    scale = max(float(np.max(np.abs(a), initial=0.0)), 1.0)
    if defect > rtol * scale:
        raise NonHermitianError(f"matrix is not hermitian: asymmetry {defect:.3e}")


def eig_hermitian(a: np.ndarray, check: bool = True) -> EigenSystem:
    """Eigendecomposition of a hermitian matrix or a stack of them.

    LAPACK's divide-and-conquer driver is deterministic for identical input bits,
    which is all the downstream reductions need.
    """
    a = np.asarray(a)
    if check:
        check_hermitian(a)
    values, vectors = np.linalg.eigh(a)
    return EigenSystem(values, vectors)


def unitary_exp(a: np.ndarray, t: float, check: bool = True) -> np.ndarray:
    """exp(-i t A) for hermitian A through its eigendecomposition."""
    es = eig_hermitian(a, check=check)
    phases = np.exp(-1j * t * es.values)
    v = es.vectors
    return (v * phases[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def op_norm(a: np.ndarray) -> np.ndarray | float:
    """Largest singular value; batched over leading axes."""
    a = np.asarray(a)
    s = np.linalg.svd(a, compute_uv=False)
    out = s[..., 0]
    return float(out) if out.ndim == 0 else out


def integrate_schrodinger(
    apply_h: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    t1: float,
    state: np.ndarray,
    tol: float = 1e-10,
    t_eval: np.ndarray | None = None,
) -> np.ndarray:
    """Integrate i dpsi/dt = H(t) psi for an arbitrary-shaped complex state.

    ``apply_h(t, psi)`` must return H(t) applied to ``psi`` with the same shape.
    Returns the final state, or the states at ``t_eval`` stacked on a leading axis.
    """
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    if not 0.0 < tol <= 1e-6:
        raise ValueError("tol must lie in (0, 1e-6]")
    state = np.asarray(state, dtype=complex)
    shape = state.shape
    if t1 == t0:
        return state.copy() if t_eval is None else np.repeat(state[None], len(t_eval), axis=0)

    def rhs(t, y):
        return (-1j * apply_h(t, y.reshape(shape))).ravel()

    sol = solve_ivp(
        rhs, (t0, t1), state.ravel(), method="DOP853", rtol=tol, atol=tol, t_eval=t_eval
    )
    if sol.status != 0:
        t_fail = float(sol.t[-1]) if sol.t.size else t0
        raise ODEBreakdownError(f"ODE integration broke down at t={t_fail:.6g}: {sol.message}")
    if t_eval is None:
        return sol.y[:, -1].reshape(shape)
    return np.moveaxis(sol.y, -1, 0).reshape((len(t_eval),) + shape)


def ode_propagate(
    h_of_t: Callable[[float], np.ndarray],
    t0: float,
    t1: float,
    tol: float = 1e-10,
) -> np.ndarray:
    """Propagator U(t1, t0) of i dU/dt = H(t) U.

    ``h_of_t`` may return a single (d, d) matrix or a stack (..., d, d); the stack
    is propagated as one ODE so every member shares the step sequence.
    """
    h0 = np.asarray(h_of_t(t0))
    dim = h0.shape[-1]
    identity = np.broadcast_to(np.eye(dim, dtype=complex), h0.shape).copy()
    return integrate_schrodinger(lambda t, u: np.asarray(h_of_t(t)) @ u, t0, t1, identity, tol)
