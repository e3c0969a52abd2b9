"""Interface (edge) spectra on a periodic strip and conductivity by spectral flow.

The strip y in [-L, L) is periodic and carries two mass interfaces: y = 0 (interface 1,
mass increasing) and y = +-L (interface 2, mass decreasing). Operators are represented
in the plane-wave basis k_j = pi j / L, j = -N/2 .. N/2-1: the y-derivative is diagonal
and multiplication by a smooth function is the Toeplitz matrix of its Fourier
coefficients (Galerkin projection), which keeps every matrix exactly hermitian.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as ssla
from scipy.special import erf

from .linalg import NumericalFailure
from .parallel import ordered_map
from .replica import B_MINUS, B_PLUS, SIGMA_1, SIGMA_2, SIGMA_3, ReplicaModel, ring_gap

OVERLAP_THRESHOLD = 0.7
DENSE_LIMIT = 1000
VELOCITY_MARGIN = 1.1

# A branch crossing E = 0 with dE/dxi_x > 0 at interface 1 counts as -1: with this
# orientation the flow at interface 1 equals minus the bulk-difference invariant.
ORIENTATION = -1


class TrackingError(NumericalFailure):
    """Adjacent-point eigenvector overlaps too small to follow a branch; refine the grid."""


class WindowError(ValueError):
    pass


@dataclass(frozen=True)
class MassProfile:
    """Odd interface profile m0 * s(y / w) with s = tanh or erf."""

    shape: str = "tanh"
    m0: float = 1.0
    w: float = 1.0
    y0: float | None = None

    def __post_init__(self):
        if self.shape not in ("tanh", "erf"):
            raise ValueError("shape must be 'tanh' or 'erf'")
        if self.w <= 0:
            raise ValueError("w must be positive")

    @property
    def plateau(self) -> float:
        """Radius beyond which |m| agrees with m0 to about 1e-3."""
        return self.y0 if self.y0 is not None else 4.0 * self.w

    def step(self, x):
        return np.tanh(x) if self.shape == "tanh" else erf(x)

    def __call__(self, y):
        return self.m0 * self.step(np.asarray(y) / self.w)

    def periodized(self, y, L: float):
        """Smooth odd 2L-periodic profile with interfaces at y = 0 and y = +-L."""
        y = (np.asarray(y) + L) % (2 * L) - L
        s = self.step
        return self.m0 * s(y / self.w) * s((L - y) / self.w) * s((L + y) / self.w)


def wavenumbers(L: float, n_modes: int) -> np.ndarray:
    return np.pi * np.arange(-n_modes // 2, n_modes // 2) / L


def multiplication_operator(fun: Callable, L: float, n_modes: int, n_fine: int = 4096) -> np.ndarray:
    """Galerkin matrix of multiplication by a real 2L-periodic function."""
    y = -L + 2 * L * np.arange(n_fine) / n_fine
    c = np.fft.fft(fun(y)) / n_fine
    # basis e^{i k_j (y + L)} up to a common phase; the phase cancels in c[j - k]
    j = np.arange(-n_modes // 2, n_modes // 2)
    shift = np.exp(1j * np.pi * (j[:, None] - j[None, :]))
    return c[(j[:, None] - j[None, :]) % n_fine] * shift


def density_on_grid(vec: np.ndarray, n_modes: int, n_fine: int) -> np.ndarray:
    """|psi(y)|^2 summed over components, normalized, on y_k = -L + 2Lk/n_fine."""
    coeffs = vec.reshape(-1, n_modes)
    j = np.arange(-n_modes // 2, n_modes // 2)
    full = np.zeros((coeffs.shape[0], n_fine), dtype=complex)
    full[:, j % n_fine] = coeffs * np.exp(1j * np.pi * j)
    dens = np.sum(np.abs(np.fft.ifft(full, axis=1)) ** 2, axis=0)
    return dens / dens.sum()


class StripSystem(Protocol):
    L: float
    N_y: int

    def matrix(self, xi_x: float) -> np.ndarray: ...

    def bulk_gap(self) -> float: ...


@dataclass
class RibbonModel:
    """Replica Hamiltonian with y-dependent coupling B(y) on the periodic two-interface strip.

    With ``effective`` the 2x2 model xi.sigma - eps^2 m(y) sigma_3 is used instead.
    ``potential`` is an optional real scalar function of y added on the diagonal.
    """

    n: int
    eps: float
    profile: MassProfile = field(default_factory=MassProfile)
    L: float = 60.0
    N_y: int = 96
    effective: bool = False
    potential: Callable | None = None
    n_fine: int = 4096

    def __post_init__(self):
        if self.N_y % 2:
            raise ValueError("N_y must be even")
        if self.L < 8 * max(self.profile.plateau, self.profile.w):
            raise ValueError("L must be at least 8 max(y0, w)")
        if self.effective and self.n != 0:
            raise ValueError("the effective model has n = 0")
        if not -1.0 <= self.profile.m0 <= 1.0:
            raise ValueError("m0 must lie in [-1, 1]")

    @property
    def replicas(self) -> int:
        return 2 * self.n + 1

    @property
    def dim(self) -> int:
        return 2 * self.replicas * self.N_y

    def mass_matrix(self) -> np.ndarray:
        return multiplication_operator(
            lambda y: self.profile.periodized(y, self.L), self.L, self.N_y, self.n_fine
        )

    def matrix(self, xi_x: float) -> np.ndarray:
        return build_ribbon(self, xi_x)

    def bulk_gap(self) -> float:
        """Smallest |E| of the asymptotic bulk models (m = +-m0) over the xi plane."""
        m0 = abs(self.profile.m0)
        if self.effective:
            return self.eps**2 * m0
        gaps = [
            ring_gap(ReplicaModel(self.n, s * m0, self.eps), ell)[0] / 2
            for s in (1, -1)
            for ell in range(self.n + 1)
        ]
        return float(min(gaps))


def build_ribbon(model: RibbonModel, xi_x: float) -> np.ndarray:
    """Hermitian strip matrix ordered (replica, spin, plane wave); replicas run +n..-n."""
    n_y = model.N_y
    eye = np.eye(n_y)
    mass = model.mass_matrix()
    deriv = np.diag(wavenumbers(model.L, n_y)).astype(complex)
    dirac = np.kron(SIGMA_1, xi_x * eye) + np.kron(SIGMA_2, deriv)
    if model.potential is not None:
        pot = multiplication_operator(model.potential, model.L, n_y, model.n_fine)
        dirac = dirac + np.kron(np.eye(2), pot)
    if model.effective:
        return dirac - model.eps**2 * np.kron(SIGMA_3, mass)
    coupling = 0.5 * (np.kron(B_PLUS, eye + mass) + np.kron(B_MINUS, eye - mass))
    blk = 2 * n_y
    size = model.replicas * blk
    h = np.zeros((size, size), dtype=complex)
    for i, k in enumerate(range(model.n, -model.n - 1, -1)):
        cur = slice(i * blk, (i + 1) * blk)
        h[cur, cur] = dirac + k * np.eye(blk)
        if i < 2 * model.n:
            nxt = slice((i + 1) * blk, (i + 2) * blk)
            h[nxt, cur] = model.eps * coupling
            h[cur, nxt] = model.eps * coupling.conj().T
    return h


def window_eigenpairs(h: np.ndarray, e_win: float) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs with |E| < e_win, ascending."""
    if e_win <= 0:
        return np.zeros(0), np.zeros((h.shape[0], 0), dtype=complex)
    if h.shape[0] < DENSE_LIMIT:
        vals, vecs = sla.eigh(h, subset_by_value=(-e_win, e_win))
    else:
        k = 16
        v0 = np.ones(h.shape[0], dtype=complex)
        while True:
            k = min(k, h.shape[0] - 2)
            vals, vecs = ssla.eigsh(h, k=k, sigma=0.0, v0=v0)
            if np.max(np.abs(vals)) >= e_win or k >= h.shape[0] - 2:
                break
            k *= 2
        keep = np.abs(vals) < e_win
        vals, vecs = vals[keep], vecs[:, keep]
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    return vals, vecs


def localization_weights(vecs: np.ndarray, n_modes: int, n_fine: int = 2048) -> np.ndarray:
    """Per state: weight within L/4 of interface 1, of interface 2, and in the bulk."""
    y = -1.0 + 2.0 * np.arange(n_fine) / n_fine  # in units of L
    near1 = np.abs(y) <= 0.25
    near2 = np.abs(y) >= 0.75
    out = np.zeros((vecs.shape[1], 3))
    for i in range(vecs.shape[1]):
        d = density_on_grid(vecs[:, i], n_modes, n_fine)
        w1, w2 = d[near1].sum(), d[near2].sum()
        out[i] = (w1, w2, 1.0 - w1 - w2)
    return out


@dataclass
class _Sample:
    xi: float
    energies: np.ndarray
    weights: np.ndarray
    vectors: np.ndarray | None


@dataclass
class EdgeSpectrum:
    """In-window levels per xi_x, with links between adjacent grid points.

    ``links[p]`` maps each level at grid point p to its continuation at p+1 (or -1), and
    ``linked_overlap[p]`` holds the corresponding squared overlaps. A link entry of None
    marks an interval in which the velocity bound already rules out any zero crossing.
    """

    xi: np.ndarray
    energies: list[np.ndarray]
    weights: list[np.ndarray]
    links: list[np.ndarray]
    linked_overlap: list[np.ndarray]
    e_win: float

    def retained(self):
        """(xi, E, interface_id, localization) for states with bulk weight <= 1/2."""
        rows = []
        for x, e, w in zip(self.xi, self.energies, self.weights):
            for ei, wi in zip(e, w):
                if wi[2] > 0.5:
                    continue
                iface = 1 if wi[0] >= wi[1] else 2
                rows.append((float(x), float(ei), iface, float(wi[iface - 1])))
        return rows


def _sample(system: StripSystem, xi: float, e_win: float) -> _Sample:
    vals, vecs = window_eigenpairs(system.matrix(xi), e_win)
    return _Sample(xi, vals, localization_weights(vecs, system.N_y), vecs)


def _link(a: _Sample, b: _Sample) -> tuple[np.ndarray, np.ndarray]:
    if a.energies.size == 0 or b.energies.size == 0:
        return -np.ones(a.energies.size, int), np.zeros(a.energies.size)
    ov = np.abs(a.vectors.conj().T @ b.vectors) ** 2
    best = np.argmax(ov, axis=1)
    # tie-break by energy proximity among near-equal overlaps
    for i in range(len(best)):
        cands = np.flatnonzero(ov[i] >= ov[i, best[i]] - 1e-6)
        if cands.size > 1:
            best[i] = cands[np.argmin(np.abs(b.energies[cands] - a.energies[i]))]
    score = ov[np.arange(len(best)), best]
    return np.where(score >= OVERLAP_THRESHOLD, best, -1), score


def _check_window(system: StripSystem, e_win: float) -> None:
    gap = system.bulk_gap()
    if e_win > gap:
        raise WindowError(f"E_win={e_win:.4g} exceeds the bulk gap {gap:.4g}")


def edge_spectrum(
    system: StripSystem, xi_grid, e_win: float, threads: int | None = None
) -> EdgeSpectrum:
    """Levels with |E| < e_win on a given xi_x grid, linked by eigenvector overlap."""
    xi_grid = np.sort(np.asarray(xi_grid, dtype=float))
    if e_win > 0:
        _check_window(system, e_win)
    samples = ordered_map(lambda x: _sample(system, x, e_win), xi_grid, threads)
    links, scores = [], []
    for a, b in zip(samples[:-1], samples[1:]):
        lk, sc = _link(a, b)
        links.append(lk)
        scores.append(sc)
    return EdgeSpectrum(
        xi_grid,
        [s.energies for s in samples],
        [s.weights for s in samples],
        links,
        scores,
        e_win,
    )


def adaptive_edge_spectrum(
    system: StripSystem,
    e_win: float,
    xi_max: float,
    h0: float = 0.05,
    h_min: float | None = None,
) -> EdgeSpectrum:
    """Edge spectrum on a grid refined only where a zero crossing is possible.

    Level velocities are bounded by 1 (|d xi_x sigma_1 / d xi_x| = 1), so an interval
    [a, b] can host a crossing only if min|E(a)| + min|E(b)| <= b - a (the bound is tight
    for Dirac edge branches, so a 10% margin is applied); those intervals
    are bisected down to ``h_min`` (default e_win/3, which keeps every crossing branch
    inside the window at both ends). The starting grid is offset by h0/3 so that no
    dyadic refinement ever lands on xi_x = 0, where the two interfaces hybridize.
    """
    _check_window(system, e_win)
    if h_min is None:
        h_min = e_win / 3
    start = np.arange(-xi_max + h0 / 3, xi_max, h0)
    cache: dict[float, _Sample] = {}

    def get(x: float) -> _Sample:
        if x not in cache:
            cache[x] = _sample(system, x, e_win)
        return cache[x]

    def min_abs(s: _Sample) -> float:
        return float(np.min(np.abs(s.energies))) if s.energies.size else e_win

    final: list[tuple[float, float, np.ndarray | None, np.ndarray | None]] = []
    stack = [(float(a), float(b)) for a, b in zip(start[:-1], start[1:])][::-1]
    while stack:
        a, b = stack.pop()
        sa, sb = get(a), get(b)
        width = b - a
        if min_abs(sa) + min_abs(sb) > VELOCITY_MARGIN * width:
            final.append((a, b, None, None))
        else:
            lk, sc = _link(sa, sb)
            uncertain = np.any((np.abs(sa.energies) <= width) & (lk < 0))
            if width > h_min or (uncertain and width > h_min / 8):
                mid = 0.5 * (a + b)
                stack.append((mid, b))
                stack.append((a, mid))
                continue
            final.append((a, b, lk, sc))
        # the left end is never revisited once its interval is final
        cache[a].vectors = None
    xs = sorted({p for a, b, _, _ in final for p in (a, b)})
    index = {x: i for i, x in enumerate(xs)}
    links: list = [None] * (len(xs) - 1)
    scores: list = [None] * (len(xs) - 1)
    for a, b, lk, sc in final:
        links[index[a]] = lk
        scores[index[a]] = sc
    return EdgeSpectrum(
        np.asarray(xs),
        [cache[x].energies for x in xs],
        [cache[x].weights for x in xs],
        links,
        scores,
        e_win,
    )


def spectral_flow(spectrum: EdgeSpectrum) -> dict[int, int]:
    """Signed E = 0 crossings per interface, oriented by ORIENTATION."""
    counts = {1: 0, 2: 0}
    for p, (lk, sc) in enumerate(zip(spectrum.links, spectrum.linked_overlap)):
        if lk is None:
            continue
        ea, eb = spectrum.energies[p], spectrum.energies[p + 1]
        wa, wb = spectrum.weights[p], spectrum.weights[p + 1]
        width = spectrum.xi[p + 1] - spectrum.xi[p]
        for i, j in enumerate(lk):
            if j < 0:
                if abs(ea[i]) <= width:
                    raise TrackingError(
                        f"branch at xi_x={spectrum.xi[p]:.6g}, E={ea[i]:.3g} cannot be followed "
                        f"(overlap {sc[i]:.2f} < {OVERLAP_THRESHOLD}); refine the xi_x grid"
                    )
                continue
            if np.sign(ea[i]) == np.sign(eb[j]) or ea[i] == 0:
                continue
            w = 0.5 * (wa[i] + wb[j])
            if w[2] > 0.5:
                continue
            iface = 1 if w[0] >= w[1] else 2
            counts[iface] += ORIENTATION * int(np.sign(eb[j] - ea[i]))
    return counts


def spectral_flow_conductivity(spectrum: EdgeSpectrum, interface: int) -> int:
    """2 pi sigma_I at the chosen interface (1: y = 0, 2: y = +-L)."""
    if interface not in (1, 2):
        raise ValueError("interface must be 1 or 2")
    return spectral_flow(spectrum)[interface]


def default_window(system: StripSystem, fraction: float = 0.7) -> float:
    return fraction * system.bulk_gap()


def bump_potential(amplitude: float, center: float, width: float) -> Callable:
    """Smooth compactly supported a * exp(1 - 1/(1 - x^2)) with x = (y - center)/width."""

    def pot(y):
        x = (np.asarray(y) - center) / width
        out = np.zeros_like(x, dtype=float)
        inside = np.abs(x) < 1
        out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
        return out

    return pot


def seeded_interface_perturbation(eps: float, w: float, seed: int) -> Callable:
    """Random bump of magnitude <= eps^2/4 supported near interface 1."""
    rng = np.random.default_rng(seed)
    amplitude = rng.uniform(-1.0, 1.0) * eps**2 / 4
    center = rng.uniform(-w, w)
    width = rng.uniform(1.0, 3.0) * w
    return bump_potential(amplitude, center, width)


def conductivities(
    system: StripSystem,
    e_win: float | None = None,
    xi_max: float | None = None,
    h0: float = 0.05,
) -> tuple[dict[int, int], EdgeSpectrum]:
    """Spectral-flow conductivity at both interfaces from an adaptive sweep."""
    if e_win is None:
        e_win = default_window(system)
    if xi_max is None:
        xi_max = getattr(system, "n", 0) + 0.25
    spec = adaptive_edge_spectrum(system, e_win, xi_max, h0)
    return spectral_flow(spec), spec
