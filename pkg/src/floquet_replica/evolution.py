"""Exact and truncated-replica evolutions at constant mass, and their error-scaling experiments."""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq
from scipy.sparse.linalg import expm_multiply

from .linalg import ode_propagate, op_norm, unitary_exp
from .parallel import ordered_map
from .replica import ReplicaModel, coupling_matrix, dirac, effective_2x2

TWO_PI = 2 * np.pi


def drive_hamiltonian(model: ReplicaModel, xi, tau: float) -> np.ndarray:
    """H(tau) = xi.sigma + eps (B e^{-i tau} + B* e^{i tau}); xi may be batched."""
    b = coupling_matrix(model.m)
    drive = np.exp(-1j * tau) * b + np.exp(1j * tau) * b.conj().T
    return dirac(xi) + model.eps * drive


def exact_propagator(model: ReplicaModel, xi, tau: float, tol: float = 1e-12) -> np.ndarray:
    """U(tau) solving i dU/dtau = H(tau) U, U(0) = I, by adaptive Runge-Kutta."""
    xi = np.asarray(xi, dtype=float)
    return ode_propagate(lambda t: drive_hamiltonian(model, xi, t), 0.0, tau, tol)


def _with_truncation(model: ReplicaModel, n_trunc: int) -> ReplicaModel:
    if n_trunc < 0:
        raise ValueError("n_trunc must be nonnegative")
    return ReplicaModel(n_trunc, model.m, model.eps)


def truncated_propagator(model: ReplicaModel, xi, tau: float, n_trunc: int) -> np.ndarray:
    """U_n(tau) = sum_k [exp(-i tau H_n)]_{0k}: the replica-0 block row summed over columns.

    Not unitary in general.
    """
    rep = _with_truncation(model, n_trunc)
    full = unitary_exp(rep.hamiltonian(xi), tau, check=False)
    row = 2 * rep.block_index(0)
    blocks = full[..., row : row + 2, :]
    return sum(blocks[..., 2 * i : 2 * i + 2] for i in range(2 * n_trunc + 1))


def truncated_propagator_by_action(model: ReplicaModel, xi, tau: float, n_trunc: int) -> np.ndarray:
    """Same quantity from the action of exp(-i tau H_n) on the replica-summed identity columns.

    Independent bookkeeping (Krylov action instead of the full exponential) for one point.
    """
    rep = _with_truncation(model, n_trunc)
    h = rep.hamiltonian(np.asarray(xi, dtype=float))
    cols = np.tile(np.eye(2, dtype=complex), (2 * n_trunc + 1, 1))
    out = expm_multiply(-1j * tau * h, cols)
    row = 2 * rep.block_index(0)
    return out[row : row + 2]


def periodized_propagator(model: ReplicaModel, xi, tau: float, n_trunc: int) -> np.ndarray:
    """U_n(tau') U_n(2 pi)^N with tau = 2 pi N + tau'."""
    periods = int(np.floor(tau / TWO_PI + 1e-12))
    rest = tau - periods * TWO_PI
    if periods == 0:
        return truncated_propagator(model, xi, tau, n_trunc)
    one = truncated_propagator(model, xi, TWO_PI, n_trunc)
    power = np.linalg.matrix_power(one, periods)
    return truncated_propagator(model, xi, rest, n_trunc) @ power


def fluctuation(model: ReplicaModel, tau: float) -> np.ndarray:
    """First-order corrector u(tau) = (e^{-i tau} - 1) B - (e^{i tau} - 1) B*.

    Obtained from the first Duhamel iterate at xi = 0; anti-hermitian, as a first-order
    correction to a unitary must be. Vanishes at tau = 0 and is 2 pi periodic.
    """
    b = coupling_matrix(model.m)
    return (np.exp(-1j * tau) - 1) * b - (np.exp(1j * tau) - 1) * b.conj().T


def effective_propagator(model: ReplicaModel, xi, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """(exp(-i tau h), u(tau)) for the effective 2x2 model h."""
    u_h = unitary_exp(effective_2x2(model, xi), tau, check=False)
    return u_h, fluctuation(model, tau)


def duhamel_bound(n: int, eps: float, tau: float, b_norm: float = 1.0) -> float:
    """2 (2 |B| eps tau)^{n+1} / (n+1)!."""
    return 2.0 * (2.0 * b_norm * eps * tau) ** (n + 1) / factorial(n + 1)


def coupling_norm(m: float) -> float:
    return float(op_norm(coupling_matrix(m)))


def default_xi_set(count: int = 40, radius: float = 3.0) -> np.ndarray:
    """Deterministic Bloch points with |xi| <= radius, including points on and near the rings."""
    ring_r = [r for ell in (1, 2, 3) for r in (ell - 0.03, float(ell), ell + 0.03) if r <= radius]
    golden = np.pi * (3 - np.sqrt(5))
    ring_pts = [r * np.array([np.cos(golden * i), np.sin(golden * i)]) for i, r in enumerate(ring_r)]
    rest = count - len(ring_pts)
    idx = np.arange(rest)
    r = radius * np.sqrt((idx + 0.5) / rest)
    spiral = np.column_stack([r * np.cos(golden * idx), r * np.sin(golden * idx)])
    return np.vstack([np.asarray(ring_pts), spiral])[:count]


def truncation_errors(
    model: ReplicaModel, tau: float, n_trunc: int, xi_set: np.ndarray, tol: float = 1e-13
) -> np.ndarray:
    """|U(tau) - U_n(tau)|_op at every point of xi_set."""
    exact = exact_propagator(model, xi_set, tau, tol)
    return op_norm(exact - truncated_propagator(model, xi_set, tau, n_trunc))


@dataclass
class SweepRow:
    eps: float
    n: int
    tau: float
    error: float
    bound: float
    pointwise_ok: bool


def fit_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def truncation_sweep(
    m: float,
    eps_values,
    taus,
    n_values,
    xi_set: np.ndarray | None = None,
    tol: float = 1e-13,
    threads: int | None = None,
) -> list[SweepRow]:
    """Maximal truncation error over xi_set for every (eps, tau, n), against the Duhamel bound."""
    xi_set = default_xi_set() if xi_set is None else xi_set
    cells = [(eps, tau) for eps in eps_values for tau in taus]

    def run(cell):
        eps, tau = cell
        model = ReplicaModel(0, m, eps)
        exact = exact_propagator(model, xi_set, tau, tol)
        rows = []
        bnorm = coupling_norm(m)
        for n in n_values:
            err = op_norm(exact - truncated_propagator(model, xi_set, tau, n))
            bound = duhamel_bound(n, eps, tau, bnorm)
            rows.append(SweepRow(eps, n, tau, float(np.max(err)), bound, bool(np.all(err <= bound))))
        return rows

    return [row for rows in ordered_map(run, cells, threads) for row in rows]


def sweep_slopes(rows: list[SweepRow]) -> dict[tuple[int, float], float]:
    """Fitted eps-exponent of the error for each (n, tau)."""
    out = {}
    for key in sorted({(r.n, r.tau) for r in rows}):
        sel = [r for r in rows if (r.n, r.tau) == key]
        out[key] = fit_slope([r.eps for r in sel], [r.error for r in sel])
    return out


def long_time_constant(n: int) -> float:
    """c_n = 2 (4 pi)^{n+1} / (2 pi (n+1)!)."""
    return 2.0 * (4 * np.pi) ** (n + 1) / (TWO_PI * factorial(n + 1))


def long_time_envelope(c: float, n: int, eps: float, tau: float) -> float:
    return c * (tau + 1) * eps ** (n + 1) * np.exp(c * tau * eps ** (n + 1))


@dataclass
class LongTimeResult:
    eps: float
    n: int
    tau: float
    error: float
    envelope: float
    fitted_c: float
    stated_c: float


def long_time_check(
    m: float = 1.0,
    eps: float = 0.05,
    n: int = 1,
    tau: float | None = None,
    xi_set: np.ndarray | None = None,
    tol: float = 1e-12,
) -> LongTimeResult:
    """|U - U_n'| at tau = eps^{-3/2} against the long-time envelope with the constant c_n.

    The fitted constant is the c that makes the envelope equal to the measured error.
    """
    xi_set = default_xi_set() if xi_set is None else xi_set
    tau = eps ** (-1.5) if tau is None else tau
    model = ReplicaModel(0, m, eps)
    exact = exact_propagator(model, xi_set, tau, tol)
    err = float(np.max(op_norm(exact - periodized_propagator(model, xi_set, tau, n))))
    c_n = long_time_constant(n)
    fitted = brentq(lambda c: long_time_envelope(c, n, eps, tau) - err, 0.0, c_n * 10)
    return LongTimeResult(eps, n, tau, err, long_time_envelope(c_n, n, eps, tau), fitted, c_n)


def filtered_points(eps: float, beta: float, c0: float, radial: int = 7, angles: int = 6) -> np.ndarray:
    rmax = c0 * eps**beta
    r = np.linspace(0.0, rmax, radial)
    th = TWO_PI * np.arange(angles) / angles
    rr, tt = np.meshgrid(r, th, indexing="ij")
    return np.column_stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()])


def effective_error(model: ReplicaModel, xi, tau: float, corrected: bool = True, tol: float = 1e-12):
    """|U - U_h - eps u| per point (or |U - U_h| when ``corrected`` is False)."""
    exact = exact_propagator(model, xi, tau, tol)
    u_h, u = effective_propagator(model, xi, tau)
    approx = u_h + model.eps * u if corrected else u_h
    return op_norm(exact - approx)


@dataclass
class CorrectorScaling:
    eps: list[float]
    corrected: list[float]
    uncorrected: list[float]
    corrected_slope: float
    uncorrected_slope: float


def corrector_scaling(
    m: float = 1.0,
    eps_values=(0.01, 0.02, 0.04, 0.08),
    beta: float = 0.5,
    c0: float = 1.0,
    tau: float = np.pi,
) -> CorrectorScaling:
    """Worst error over unit states supported on |xi| <= c0 eps^beta, with and without u."""
    cor, unc = [], []
    for eps in eps_values:
        model = ReplicaModel(0, m, eps)
        pts = filtered_points(eps, beta, c0)
        exact = exact_propagator(model, pts, tau)
        u_h, u = effective_propagator(model, pts, tau)
        cor.append(float(np.max(op_norm(exact - u_h - eps * u))))
        unc.append(float(np.max(op_norm(exact - u_h))))
    return CorrectorScaling(
        list(eps_values), cor, unc, fit_slope(eps_values, cor), fit_slope(eps_values, unc)
    )


def wavepacket_error(
    model: ReplicaModel,
    alpha: float,
    tau: float,
    spinor=(1.0, 0.0),
    radial_nodes: int = 24,
    angles: int = 16,
    cutoff: float = 6.0,
) -> float:
    """L2 error of U_h + eps u on the packet eps^alpha psi(x eps^alpha), psi Gaussian.

    The packet's momentum density is exp(-|xi|^2 / eps^(2 alpha)) truncated at ``cutoff``
    widths; each Bloch component is propagated exactly and with the corrected effective
    evolution, and the error is weighted by the density (packet normalized to 1).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if tau == 0:
        return 0.0
    width = model.eps**alpha
    x, w = leggauss(radial_nodes)
    r = 0.5 * cutoff * width * (x + 1)
    wr = 0.5 * cutoff * width * w
    th = TWO_PI * np.arange(angles) / angles
    rr, tt = np.meshgrid(r, th, indexing="ij")
    pts = np.column_stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()])
    weights = (np.exp(-(rr**2) / width**2) * rr * wr[:, None]).ravel() * (TWO_PI / angles)
    s = np.asarray(spinor, dtype=complex)
    s = s / np.linalg.norm(s)
    exact = exact_propagator(model, pts, tau)
    u_h, u = effective_propagator(model, pts, tau)
    diff = (exact - u_h - model.eps * u) @ s
    err2 = np.sum(weights * np.sum(np.abs(diff) ** 2, axis=-1))
    return float(np.sqrt(err2 / np.sum(weights)))
