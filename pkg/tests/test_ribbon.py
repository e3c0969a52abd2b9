from dataclasses import dataclass

import numpy as np
import pytest

from floquet_replica.linalg import hermiticity_defect
from floquet_replica.replica import ReplicaModel, band_structure
from floquet_replica.ribbon import (
    EdgeSpectrum,
    MassProfile,
    RibbonModel,
    TrackingError,
    WindowError,
    build_ribbon,
    conductivities,
    edge_spectrum,
    localization_weights,
    multiplication_operator,
    seeded_interface_perturbation,
    spectral_flow,
    spectral_flow_conductivity,
    wavenumbers,
    window_eigenpairs,
)


@dataclass(frozen=True)
class ConstantMass:
    """Degenerate test profile m(y) = m0 everywhere."""

    m0: float = 1.0
    w: float = 1.0
    plateau: float = 1.0

    def periodized(self, y, L):
        return np.full_like(np.asarray(y, dtype=float), self.m0)


@pytest.mark.parametrize("shape", ["tanh", "erf"])
def test_profile_odd_and_bounded(shape):
    prof = MassProfile(shape=shape, m0=0.8, w=1.5)
    y = np.linspace(-20, 20, 401)
    assert np.allclose(prof(-y), -prof(y))
    assert np.max(np.abs(prof(y))) <= 0.8
    far = np.abs(y) >= prof.plateau
    assert np.allclose(np.abs(prof(y[far])), 0.8, atol=1e-3 * 0.8)


def test_periodized_profile_interfaces():
    prof, L = MassProfile(), 40.0
    y = np.linspace(-L, L, 801)
    per = prof.periodized(y, L)
    assert np.allclose(per, -prof.periodized(-y, L))
    assert np.allclose(prof.periodized(y + 2 * L, L), per)
    assert per[np.argmin(np.abs(y - L / 2))] == pytest.approx(1.0, abs=1e-10)
    assert per[np.argmin(np.abs(y + L / 2))] == pytest.approx(-1.0, abs=1e-10)


def test_profile_validation():
    with pytest.raises(ValueError):
        MassProfile(shape="sine")
    with pytest.raises(ValueError):
        MassProfile(w=0.0)
    with pytest.raises(ValueError):
        RibbonModel(0, 0.3, L=20.0)
    with pytest.raises(ValueError):
        RibbonModel(0, 0.3, N_y=33)


def test_multiplication_operator_is_galerkin():
    L, n = 10.0, 16
    q = np.pi / L
    assert np.allclose(multiplication_operator(lambda y: 2.5 + 0 * y, L, n), 2.5 * np.eye(n))
    op = multiplication_operator(lambda y: np.cos(q * y), L, n)
    assert np.allclose(op, 0.5 * (np.eye(n, k=1) + np.eye(n, k=-1)), atol=1e-13)
    op = multiplication_operator(lambda y: np.sin(q * y), L, n)
    assert np.allclose(op, 0.5j * (np.eye(n, k=1) - np.eye(n, k=-1)), atol=1e-13)


def test_constant_mass_reproduces_bulk_bands():
    L, n_y, xi_x = 16.0, 16, 0.37
    model = RibbonModel(1, 0.2, ConstantMass(), L=L, N_y=n_y)
    strip = np.linalg.eigvalsh(build_ribbon(model, xi_x))
    grid = np.column_stack([np.full(n_y, xi_x), wavenumbers(L, n_y)])
    bulk = np.sort(band_structure(ReplicaModel(1, 1.0, 0.2), grid).sheets.ravel())
    assert np.allclose(strip, bulk, atol=1e-8)


@pytest.mark.parametrize("n, effective", [(0, True), (1, False), (2, False)])
def test_strip_is_hermitian(n, effective):
    rng = np.random.default_rng(n)
    model = RibbonModel(n, float(rng.uniform(0.05, 0.4)), MassProfile(m0=float(rng.uniform(0.9, 1))),
                        L=40.0, N_y=32, effective=effective)
    assert hermiticity_defect(build_ribbon(model, float(rng.uniform(-2, 2)))) <= 1e-12


def test_zero_modes_at_normal_incidence():
    model = RibbonModel(0, 0.3, L=60.0, N_y=96, effective=True)
    vals, vecs = window_eigenpairs(build_ribbon(model, 0.0), 0.5 * model.bulk_gap())
    assert vals.size == 2
    assert np.max(np.abs(vals)) < 1e-3
    w = localization_weights(vecs, model.N_y)
    assert np.allclose(w.sum(axis=1), 1)
    # the pair spans one state per interface; the decay length 1/eps^2 leaves ~7% outside L/4
    assert np.sum(w[:, 0]) == pytest.approx(np.sum(w[:, 1]), abs=1e-6)
    assert np.sum(w[:, 0]) > 0.9


def test_empty_window():
    model = RibbonModel(0, 0.3, effective=True)
    spec = edge_spectrum(model, [-0.1, 0.1], 0.0)
    assert all(e.size == 0 for e in spec.energies)
    assert spectral_flow(spec) == {1: 0, 2: 0}


def test_window_beyond_gap_rejected():
    model = RibbonModel(0, 0.3, effective=True)
    with pytest.raises(WindowError, match="bulk gap 0.09"):
        edge_spectrum(model, [0.0], 0.2)


def test_weights_sum_to_one():
    model = RibbonModel(0, 0.3, effective=True)
    spec = edge_spectrum(model, np.linspace(-0.2, 0.2, 5), 0.06)
    for w in spec.weights:
        assert np.allclose(w.sum(axis=1), 1.0)
    for _, _, iface, loc in spec.retained():
        assert iface in (1, 2) and 0.25 <= loc <= 1.0


def test_effective_flow_and_opposite_interfaces():
    model = RibbonModel(0, 0.3, effective=True)
    counts, spec = conductivities(model)
    assert counts == {1: -1, 2: 1}
    assert spectral_flow_conductivity(spec, 2) == -spectral_flow_conductivity(spec, 1)
    with pytest.raises(ValueError):
        spectral_flow_conductivity(spec, 3)


def test_effective_flow_on_uniform_grid():
    model = RibbonModel(0, 0.3, effective=True)
    spec = edge_spectrum(model, np.linspace(-0.2, 0.2, 41) + 0.003, 0.06)
    assert spectral_flow(spec) == {1: -1, 2: 1}


def test_three_replica_flow():
    counts, _ = conductivities(RibbonModel(1, 0.3))
    assert counts == {1: 3, 2: -3}


@pytest.mark.parametrize(
    "kw",
    [
        dict(L=64.0, N_y=104, profile=MassProfile(w=2.0)),
        dict(N_y=192),
        dict(potential=seeded_interface_perturbation(0.3, 1.0, 5)),
        dict(profile=MassProfile(shape="erf")),
    ],
    ids=["width", "resolution", "perturbation", "erf"],
)
def test_effective_flow_stability(kw):
    counts, _ = conductivities(RibbonModel(0, 0.3, effective=True, **kw))
    assert counts == {1: -1, 2: 1}


def test_seeded_perturbation_bounds():
    eps, w = 0.3, 1.0
    y = np.linspace(-10, 10, 4001)
    for seed in range(20):
        v = seeded_interface_perturbation(eps, w, seed)(y)
        assert np.max(np.abs(v)) <= eps**2 / 4
        assert np.all(v[np.abs(y) > 4 * w] == 0)
    a = seeded_interface_perturbation(eps, w, 3)(y)
    assert np.array_equal(a, seeded_interface_perturbation(eps, w, 3)(y))


def test_lost_branch_raises():
    spec = EdgeSpectrum(
        xi=np.array([0.0, 0.01]),
        energies=[np.array([0.001]), np.array([-0.001])],
        weights=[np.array([[0.9, 0.05, 0.05]]), np.array([[0.9, 0.05, 0.05]])],
        links=[np.array([-1])],
        linked_overlap=[np.array([0.2])],
        e_win=0.05,
    )
    with pytest.raises(TrackingError, match="refine"):
        spectral_flow(spec)
