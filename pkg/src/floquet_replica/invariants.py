"""Berry-curvature integrand, bulk invariants and their ring decomposition."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .linalg import GapClosureError
from .parallel import ordered_map, tree_sum
from .replica import SIGMA_1, SIGMA_2, SIGMA_3, EffectiveModel, ReplicaModel, ring_gap

GAP_FLOOR = 1e-8
DEGENERACY = 1e-10
CURVATURE_NORM = 1j / (8 * np.pi**2)


def kubo_integrand(model, xi) -> np.ndarray | complex:
    """T(xi) = 4 pi i sum_{i<j} (sgn h_i - sgn h_j)/(h_i - h_j)^2 Im(<psi_i, d1H psi_j><psi_j, d2H psi_i>).

    The inner product is linear in its first slot, <a, b> = sum a_k conj(b_k); the
    velocity operators are the exact xi-derivatives of the Bloch matrix. ``xi`` may be
    a single point or carry leading batch axes.
    """
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    pts = xi.reshape(-1, 2)
    vals, vecs = np.linalg.eigh(model.hamiltonian(pts))
    gap = np.min(np.abs(vals), axis=-1)
    if np.any(gap <= GAP_FLOOR):
        k = int(np.argmin(gap))
        raise GapClosureError(f"spectrum gapless at xi=({pts[k, 0]:.6g}, {pts[k, 1]:.6g}): min|E|={gap[k]:.3e}")
    t = kubo_from_eigenpairs(vals, vecs, *model.velocity_operators())
    return complex(t[0]) if single else t.reshape(xi.shape[:-1])


def kubo_from_eigenpairs(vals: np.ndarray, vecs: np.ndarray, d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    """Kubo sum for stacked eigenpairs (batch, D) and (batch, D, D) and velocity operators d1, d2."""
    vh = np.conj(np.swapaxes(vecs, -1, -2))
    a1 = vh @ d1 @ vecs  # a1[i, j] = psi_i^H d1 psi_j
    a2 = vh @ d2 @ vecs
    # <psi_i, d1 psi_j> <psi_j, d2 psi_i> = a1[j, i] a2[i, j]
    im = np.imag(np.swapaxes(a1, -1, -2) * a2)
    sgn = np.sign(vals)
    dsign = sgn[:, :, None] - sgn[:, None, :]
    dh = vals[:, :, None] - vals[:, None, :]
    close = np.abs(dh) < DEGENERACY
    upper = np.triu(np.ones(dh.shape[-2:], dtype=bool), 1)
    if np.any(close & (dsign != 0) & upper):
        raise GapClosureError("eigenvalues of opposite sign coalesce")
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(upper & ~close, dsign / dh**2, 0.0)
    return 4j * np.pi * np.sum(weight * im, axis=(-1, -2))


def curvature_density(model, xi) -> np.ndarray:
    """i/(8 pi^2) T(xi); real by construction."""
    return np.real(CURVATURE_NORM * np.asarray(kubo_integrand(model, xi)))


@dataclass
class CurvatureField:
    model: object
    nodes: np.ndarray
    weights: np.ndarray
    samples: np.ndarray

    def integral(self) -> float:
        return float(np.real(CURVATURE_NORM * tree_sum(self.weights * self.samples)))


def curvature_field(model, nodes, weights) -> CurvatureField:
    nodes = np.asarray(nodes, dtype=float)
    return CurvatureField(model, nodes, np.asarray(weights), np.asarray(kubo_integrand(model, nodes)))


@dataclass
class BulkIntegral:
    value: float
    error_estimate: float
    tail_estimate: float
    rings: dict[int, float] = field(default_factory=dict)
    outer: float = 0.0


@dataclass
class InvariantReport:
    """Bulk difference with annulus contributions; ``outer`` is the part beyond |xi| = n + 1/2."""

    W_plus: float
    W_minus: float
    W_diff: float
    ring_contributions: dict[int, float]
    quadrature_error_estimate: float
    outer_contribution: float = 0.0


def default_angles(model) -> int:
    return 4 if abs(model.m) == 1.0 else 32


def _radial_breakpoints(model, r_max: float, cluster: int = 60) -> np.ndarray:
    """Panel edges clustered geometrically around each ring center, then out to r_max."""
    n = model.n
    edges = [0.0, r_max / 2, r_max]
    edges += [ell + 0.5 for ell in range(n + 1)]
    for ell in range(n + 1):
        if isinstance(model, EffectiveModel):
            gap, center = 2 * model.eps**2 * abs(model.m) if model.m else 1e-6, 0.0
        else:
            gap, center = ring_gap(model, ell)
        if ell == 0:
            center = 0.0
        width = max(gap / 2, 1e-12)
        offsets = np.geomspace(width / 20, 0.45, cluster)
        lo, hi = (0.0, 0.5) if ell == 0 else (ell - 0.5, ell + 0.5)
        pts = np.concatenate([center - offsets, [center], center + offsets])
        edges += list(pts[(pts > lo) & (pts < hi)])
    edges += list(np.geomspace(n + 0.55, r_max, 200))
    edges = np.unique(np.asarray(edges))
    return edges[(edges >= 0) & (edges <= r_max)]


class _PolarRule:
    def __init__(self, order: int, angles: int):
        self.x, self.w = leggauss(order)
        self.theta = 2 * np.pi * np.arange(angles) / angles

    def panels(self, model, a: np.ndarray, b: np.ndarray, threads) -> tuple[np.ndarray, np.ndarray]:
        """Integrals of i/(8pi^2) T r dr dtheta over the annuli [a_k, b_k]: full and half angles."""
        r = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * self.x[None, :]
        wr = 0.5 * (b - a)[:, None] * self.w[None, :]
        rr = r[:, :, None]
        pts = np.stack([rr * np.cos(self.theta), rr * np.sin(self.theta)], axis=-1)
        flat = pts.reshape(-1, 2)
        chunk = 4096
        parts = ordered_map(
            lambda i: curvature_density(model, flat[i : i + chunk]),
            range(0, len(flat), chunk),
            threads,
        )
        dens = np.concatenate(parts).reshape(pts.shape[:-1])
        full = np.sum(dens.mean(axis=2) * r * wr, axis=1) * 2 * np.pi
        half = np.sum(dens[:, :, ::2].mean(axis=2) * r * wr, axis=1) * 2 * np.pi
        return full, half


def bulk_invariant(
    model: ReplicaModel | EffectiveModel,
    r_max: float | None = None,
    angles: int | None = None,
    order: int = 12,
    rel_tol: float = 1e-3,
    abs_tol: float = 1e-10,
    max_rounds: int = 8,
    threads: int | None = None,
) -> BulkIntegral:
    """W = i/(8 pi^2) int_{|xi| <= r_max} T d^2xi on a polar tensor grid.

    Radial panels carry Gauss-Legendre nodes and are bisected while a panel and its two
    halves disagree by more than ``rel_tol`` (relative) or ``abs_tol``; the angular
    trapezoid is checked against every other angle. The reported error adds both
    refinement differences to twice the change between r_max/2 and r_max, an
    empirical bound on the truncated tail.
    """
    if r_max is None:
        r_max = model.n + 39.0
    rule = _PolarRule(order, angles or default_angles(model))
    edges = _radial_breakpoints(model, r_max)
    a, b = edges[:-1], edges[1:]
    val, half = rule.panels(model, a, b, threads)
    ang_err = np.abs(val - half)
    rad_err = np.zeros_like(val)
    todo = np.ones(len(val), dtype=bool)
    for _ in range(max_rounds):
        idx = np.flatnonzero(todo)
        if idx.size == 0:
            break
        mid = 0.5 * (a[idx] + b[idx])
        left, _ = rule.panels(model, a[idx], mid, threads)
        right, _ = rule.panels(model, mid, b[idx], threads)
        split = left + right
        diff = np.abs(split - val[idx])
        val[idx] = split
        rad_err[idx] = diff
        todo[:] = False
        bad = (diff > np.maximum(rel_tol * np.abs(split), abs_tol)) & (b[idx] - a[idx] > 1e-12)
        if not np.any(bad):
            break
        ref = idx[bad]
        m = 0.5 * (a[ref] + b[ref])
        a = np.concatenate([np.delete(a, ref), a[ref], m])
        b = np.concatenate([np.delete(b, ref), m, b[ref]])
        lv, rv = left[bad], right[bad]
        val = np.concatenate([np.delete(val, ref), lv, rv])
        ang_err = np.concatenate([np.delete(ang_err, ref), ang_err[ref] / 2, ang_err[ref] / 2])
        rad_err = np.concatenate([np.delete(rad_err, ref), diff[bad] / 2, diff[bad] / 2])
        todo = np.concatenate([np.zeros(len(a) - 2 * ref.size, bool), np.ones(2 * ref.size, bool)])
    order_idx = np.argsort(a, kind="stable")
    a, b, val = a[order_idx], b[order_idx], val[order_idx]
    total = float(tree_sum(list(val)))
    inner = float(tree_sum(list(val[b <= r_max / 2 + 1e-12])))
    tail = abs(total - inner)
    quad_err = float(np.sum(ang_err) + np.sum(rad_err))
    rings = {}
    for ell in range(model.n + 1):
        lo, hi = (0.0, 0.5) if ell == 0 else (ell - 0.5, ell + 0.5)
        sel = (a >= lo - 1e-12) & (b <= hi + 1e-12)
        rings[ell] = float(tree_sum(list(val[sel])))
    outer = float(tree_sum(list(val[a >= model.n + 0.5 - 1e-12])))
    return BulkIntegral(total, quad_err + 2 * tail, tail, rings, outer)


def bulk_difference(
    model_plus,
    model_minus,
    r_max: float | None = None,
    **quad,
) -> InvariantReport:
    """W^d = W(-m0) - W(+m0) with ring-resolved contributions over |xi| in [l-1/2, l+1/2]."""
    if model_plus.n != model_minus.n or model_plus.eps != model_minus.eps:
        raise ValueError("models must share n and eps")
    plus = bulk_invariant(model_plus, r_max, **quad)
    minus = bulk_invariant(model_minus, r_max, **quad)
    rings = {ell: minus.rings[ell] - plus.rings[ell] for ell in plus.rings}
    return InvariantReport(
        W_plus=plus.value,
        W_minus=minus.value,
        W_diff=minus.value - plus.value,
        ring_contributions=rings,
        quadrature_error_estimate=plus.error_estimate + minus.error_estimate,
        outer_contribution=minus.outer - plus.outer,
    )


def invariant_report(n: int, m0: float, eps: float, effective: bool | None = None, **quad) -> InvariantReport:
    """Bulk difference for the (2n+1)-replica model, or the effective 2x2 model when n = 0."""
    if effective is None:
        effective = n == 0
    if effective:
        plus, minus = EffectiveModel(m0, eps), EffectiveModel(-m0, eps)
    else:
        plus, minus = ReplicaModel(n, m0, eps), ReplicaModel(n, -m0, eps)
    return bulk_difference(plus, minus, **quad)


def expected_difference(n: int) -> int:
    return 1 - 2 * n * (n + 1)


def stokes_invariant(model: EffectiveModel, radius: float, points: int = 4096) -> float:
    """Occupied-band Berry phase around |xi| = radius divided by 2 pi (2x2 model only).

    Uses the gauge in which the spinor component that is nonzero at the origin is real
    positive; that gauge is smooth on the whole disk, so the loop phase equals the
    enclosed curvature with no 2 pi ambiguity.
    """
    theta = 2 * np.pi * np.arange(points + 1) / points
    pts = radius * np.column_stack([np.cos(theta), np.sin(theta)])
    _, vecs = np.linalg.eigh(model.hamiltonian(pts))
    u = vecs[:, :, 0]
    _, v0 = np.linalg.eigh(model.hamiltonian(np.zeros(2)))
    comp = int(np.argmax(np.abs(v0[:, 0])))
    u = u * (np.abs(u[:, comp]) / u[:, comp])[:, None]
    steps = np.sum(np.conj(u[:-1]) * u[1:], axis=1)
    return float(-np.sum(np.angle(steps)) / (2 * np.pi))


def winding_family_closed_form(p: int, tau_sign: int) -> float:
    return -0.5 * p * np.sign(tau_sign)


def winding_family_invariant(
    p: int, tau_sign: float, phi: float = 0.0, radial_nodes: int = 64, angles: int = 32
) -> float:
    """(i/2pi) int (-1/(8|H|^3)) tr H[d_r H, d_theta H] dr dtheta for
    H = cos(p theta + phi) s1 + sin(p theta + phi) s2 + tau r s3, r >= 0.

    The radial axis is mapped to u in [0, pi/2) by r = tan(u)/|tau|.
    """
    if p == 0 or int(p) != p:
        raise ValueError("p must be a nonzero integer")
    tau = float(tau_sign)
    x, w = leggauss(radial_nodes)
    u = 0.25 * np.pi * (x + 1)
    wu = 0.25 * np.pi * w
    r = np.tan(u) / abs(tau)
    jac = 1.0 / (abs(tau) * np.cos(u) ** 2)
    th = 2 * np.pi * np.arange(angles) / angles
    rr, tt = np.meshgrid(r, th, indexing="ij")
    alpha = p * tt + phi
    h = (
        np.cos(alpha)[..., None, None] * SIGMA_1
        + np.sin(alpha)[..., None, None] * SIGMA_2
        + (tau * rr)[..., None, None] * SIGMA_3
    )
    dr = np.broadcast_to(tau * SIGMA_3, h.shape)
    dth = p * (-np.sin(alpha)[..., None, None] * SIGMA_1 + np.cos(alpha)[..., None, None] * SIGMA_2)
    comm = dr @ dth - dth @ dr
    tr = np.trace(h @ comm, axis1=-2, axis2=-1)
    norm = np.sqrt(1.0 + (tau * rr) ** 2)
    integrand = (1j / (2 * np.pi)) * (-1.0 / (8 * norm**3)) * tr
    theta_int = integrand.mean(axis=1) * 2 * np.pi
    return float(np.real(np.sum(theta_int * jac * wu)))
