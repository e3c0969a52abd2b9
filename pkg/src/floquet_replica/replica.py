"""Replica Bloch Hamiltonians, the coupling matrices B_m, the effective 2x2 model and gap diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np
from scipy.optimize import minimize_scalar

from .linalg import eig_hermitian
from .parallel import ordered_map

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)

B_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
B_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)

MAX_EPS = 0.5


def coupling_matrix(m: float) -> np.ndarray:
    """B_m = (1+m)/2 [[0,1],[0,0]] + (1-m)/2 [[0,0],[1,0]]."""
    if not -1.0 <= m <= 1.0:
        raise ValueError(f"m must lie in [-1, 1], got {m}")
    return 0.5 * (1 + m) * B_PLUS + 0.5 * (1 - m) * B_MINUS


def mass_projector(m: int) -> np.ndarray:
    """Rank-one projector paired with B_m for m = +-1 (B_m P_m = B_m, P_m B_m = 0)."""
    if m == 1:
        return np.diag([0.0, 1.0]).astype(complex)
    if m == -1:
        return np.diag([1.0, 0.0]).astype(complex)
    raise ValueError("projector defined only for m = +-1")


def dirac(xi: np.ndarray) -> np.ndarray:
    """xi . sigma for xi of shape (..., 2)."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(xi.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 1] = xi[..., 0] - 1j * xi[..., 1]
    out[..., 1, 0] = xi[..., 0] + 1j * xi[..., 1]
    return out


@dataclass(frozen=True)
class ReplicaModel:
    """(2n+1)-replica truncation of the driven Dirac operator at constant mass m."""

    n: int
    m: float
    eps: float

    def __post_init__(self):
        if self.n < 0 or int(self.n) != self.n:
            raise ValueError("n must be a nonnegative integer")
        if not -1.0 <= self.m <= 1.0:
            raise ValueError("m must lie in [-1, 1]")
        if not 0.0 <= self.eps <= MAX_EPS:
            raise ValueError(f"eps must lie in [0, {MAX_EPS}]")

    @property
    def dim(self) -> int:
        return 2 * (2 * self.n + 1)

    @property
    def replicas(self) -> np.ndarray:
        """Replica labels in block order, +n first."""
        return np.arange(self.n, -self.n - 1, -1)

    def block_index(self, k: int) -> int:
        if abs(k) > self.n:
            raise ValueError(f"replica {k} outside -{self.n}..{self.n}")
        return self.n - k

    def hamiltonian(self, xi) -> np.ndarray:
        return bloch_hamiltonian(self, xi)

    def velocity_operators(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact derivatives of the Bloch matrix in xi_1 and xi_2."""
        eye = np.eye(2 * self.n + 1)
        return np.kron(eye, SIGMA_1), np.kron(eye, SIGMA_2)

    def effective(self) -> "EffectiveModel":
        return EffectiveModel(self.m, self.eps)


@dataclass(frozen=True)
class EffectiveModel:
    """2x2 model xi.sigma + eps^2 (B*B - BB*), the n = 0 member with the second-order mass."""

    m: float
    eps: float
    n: int = field(default=0, init=False)

    @property
    def dim(self) -> int:
        return 2

    def hamiltonian(self, xi) -> np.ndarray:
        return effective_2x2(self, xi)

    def velocity_operators(self) -> tuple[np.ndarray, np.ndarray]:
        return SIGMA_1.copy(), SIGMA_2.copy()


def bloch_hamiltonian(model: ReplicaModel, xi) -> np.ndarray:
    """Block-tridiagonal Bloch matrix; xi may carry leading batch axes.

    Diagonal block for replica k is k I + xi.sigma, blocks ordered k = n..-n. The block
    coupling replica k-1 (row) to replica k (column) is eps B_m, its mirror eps B_m*.
    """
    xi = np.asarray(xi, dtype=float)
    n, dim = model.n, model.dim
    out = np.zeros(xi.shape[:-1] + (dim, dim), dtype=complex)
    d = dirac(xi)
    b = model.eps * coupling_matrix(model.m)
    for i, k in enumerate(model.replicas):
        sl = slice(2 * i, 2 * i + 2)
        out[..., sl, sl] = d + k * SIGMA_0
        if i < 2 * n:
            nxt = slice(2 * i + 2, 2 * i + 4)
            out[..., nxt, sl] = b
            out[..., sl, nxt] = b.conj().T
    return out


def effective_2x2(model: ReplicaModel | EffectiveModel, xi) -> np.ndarray:
    b = coupling_matrix(model.m)
    mass = b.conj().T @ b - b @ b.conj().T
    return dirac(xi) + model.eps**2 * mass


@dataclass
class BandStructure:
    grid: np.ndarray
    sheets: np.ndarray
    gap_at_zero: np.ndarray

    def symmetry_defect(self) -> float:
        """max_k |E_k + E_{D+1-k}| over the grid."""
        return float(np.max(np.abs(self.sheets + self.sheets[:, ::-1]), initial=0.0))


def band_structure(model, grid, threads: int | None = None, chunk: int = 512) -> BandStructure:
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.shape[0] == 0:
        raise ValueError("grid must be nonempty")
    chunks = [grid[i : i + chunk] for i in range(0, len(grid), chunk)]
    parts = ordered_map(lambda g: eig_hermitian(model.hamiltonian(g)).values, chunks, threads)
    sheets = np.concatenate(parts, axis=0)
    return BandStructure(grid, sheets, np.min(np.abs(sheets), axis=1))


def line_cut(xi1_min: float, xi1_max: float, count: int, xi2: float = 0.0) -> np.ndarray:
    xs = np.linspace(xi1_min, xi1_max, count)
    return np.column_stack([xs, np.full_like(xs, xi2)])


def min_abs_energy(model, xi) -> np.ndarray | float:
    vals = np.linalg.eigvalsh(model.hamiltonian(xi))
    return np.min(np.abs(vals), axis=-1)


def ring_factor(radius: float, ell: int) -> float:
    """prod_{k=1-ell}^{ell-1} |xi| / (|xi|^2 - k^2); equals 1 at |xi| = ell = 1."""
    return prod(radius / (radius**2 - k**2) for k in range(1 - ell, ell))


def ring_gap(
    model: ReplicaModel,
    ell: int,
    scan_points: int = 2001,
    angles: int | None = None,
) -> tuple[float, float]:
    """Full gap 2 min|E| near the ring |xi| ~ ell, and the radius where it is attained.

    The radius is scanned over [ell-1/2, ell+1/2] ([0, 1/2] for ell = 0) and refined by
    bounded Brent minimization. For |m| = 1 the spectrum is rotation invariant and a
    single direction suffices; otherwise ``angles`` directions are scanned.
    """
    if ell < 0 or ell > model.n:
        raise ValueError(f"ring index {ell} must lie in 0..{model.n}")
    lo, hi = (0.0, 0.5) if ell == 0 else (ell - 0.5, ell + 0.5)
    if angles is None:
        angles = 1 if abs(model.m) == 1.0 else 12
    thetas = np.arange(angles) * (2 * np.pi / angles)
    radii = np.linspace(lo, hi, scan_points)
    best = (np.inf, 0.0, 0.0)
    for th in thetas:
        direction = np.array([np.cos(th), np.sin(th)])
        g = min_abs_energy(model, radii[:, None] * direction)
        i = int(np.argmin(g))
        a, b = radii[max(i - 1, 0)], radii[min(i + 1, scan_points - 1)]
        res = minimize_scalar(
            lambda r: float(min_abs_energy(model, r * direction)),
            bounds=(a, b),
            method="bounded",
            options={"xatol": 1e-14},
        )
        val, r = (res.fun, res.x) if res.fun < g[i] else (g[i], radii[i])
        if val < best[0]:
            best = (val, r, th)
    return 2.0 * float(best[0]), float(best[1])


def ring_coupling(model: ReplicaModel, xi, ell: int) -> complex:
    """Mid-gap coupling eta between replicas -ell and +ell at a point near the ring.

    The exact pair of eigenvectors closest to E = 0 is rotated (symmetric Lowdin
    orthonormalization of its overlap) onto the unperturbed mid-gap states
    v1 = e_{-ell} (conj(xh), 1)/sqrt2 and v2 = e_{+ell} (-conj(xh), 1)/sqrt2; eta is the
    resulting off-diagonal element divided by eps^(2 ell).
    """
    if not 1 <= ell <= model.n:
        raise ValueError("ell must lie in 1..n")
    xi = np.asarray(xi, dtype=float)
    xhat = complex(xi[0], xi[1]) / np.hypot(xi[0], xi[1])
    es = eig_hermitian(model.hamiltonian(xi))
    pick = np.argsort(np.abs(es.values))[:2]
    q, e = es.vectors[:, pick], es.values[pick]
    v = np.zeros((model.dim, 2), dtype=complex)
    lo = 2 * model.block_index(-ell)
    hi = 2 * model.block_index(ell)
    v[lo : lo + 2, 0] = np.array([np.conj(xhat), 1.0]) / np.sqrt(2)
    v[hi : hi + 2, 1] = np.array([-np.conj(xhat), 1.0]) / np.sqrt(2)
    u, _, wh = np.linalg.svd(v.conj().T @ q)
    rot = u @ wh
    h_eff = rot @ np.diag(e) @ rot.conj().T
    return complex(h_eff[0, 1]) / model.eps ** (2 * ell)
