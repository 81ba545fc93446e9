"""Spectra, eigen matching, and corrector functionals."""

import math

import numpy as np
import pytest

from corrlab.elliptic import EllipticProblem1D
from corrlab.greens import Mesh1D
from corrlab.helmholtz import HelmholtzProblem
from corrlab.randfield import CorrelatedTripleSpec, MAProcessSpec
from corrlab.spectral import (
    MatchResult,
    SpectralPair,
    discrete_unperturbed_spectrum,
    eigenvalue_corrector_covariance,
    fourier_corrector_variance,
    inverse_corrector_covariance,
    match_eigenpairs,
    perturbed_spectrum,
    spectral_gaps,
    spectral_realization,
    unperturbed_spectrum,
)

SPEC = MAProcessSpec(weights=(0.5, 0.5))
SPEC_ZERO = MAProcessSpec(weights=(0.5, 0.5), amplitude=0.0)

# frozen limits for sigma^2 = 1 sine modes: int u_n^4 = 3/2, int u_n^2 u_m^2 = 1
OVERLAP_DIAG = 1.5
OVERLAP_OFF = 1.0
FOURIER_12_VAR = 1.0 / (9.0 * math.pi**4)


def _helm(n_nodes=201, epsilon=0.01, q0=0.0, spec=SPEC):
    mesh = Mesh1D(n_nodes=n_nodes)
    return HelmholtzProblem(
        mesh=mesh, a_star=1.0, q0=q0, field_spec=spec,
        f=np.ones(mesh.n_nodes), epsilon=epsilon,
    )


def test_unperturbed_spectrum_closed_form():
    mesh = Mesh1D(n_nodes=401)
    pairs = unperturbed_spectrum(mesh, a_star=2.0, q0=3.0, n_max=4)
    assert len(pairs) == 4
    for n, p in enumerate(pairs, start=1):
        assert p.lam == pytest.approx(1.0 / (2.0 * (n * math.pi) ** 2 + 3.0))
        # unit quadrature norm
        assert float(np.sum(mesh.quad_weights * p.u**2)) == pytest.approx(1.0, rel=1e-4)
    with pytest.raises(ValueError):
        unperturbed_spectrum(mesh, 1.0, 0.0, 0)


def test_discrete_spectrum_matches_fd_eigenvalue_formula():
    """nu_n = (4a/h^2) sin^2(n pi h / 2) + q0 for the 3-point stencil."""
    mesh = Mesh1D(n_nodes=101)
    a, q0 = 1.5, 2.0
    pairs = discrete_unperturbed_spectrum(mesh, a, q0, n_max=5)
    h = mesh.h
    for n, p in enumerate(pairs, start=1):
        nu = 4.0 * a / (h * h) * math.sin(n * math.pi * h / 2.0) ** 2 + q0
        assert 1.0 / p.lam == pytest.approx(nu, rel=1e-12)
        # eigenvectors stay the sampled sines up to normalization sign
        want = math.sqrt(2.0) * np.sin(n * math.pi * mesh.nodes)
        overlap = float(np.sum(mesh.quad_weights * p.u * want))
        assert abs(overlap) == pytest.approx(1.0, rel=1e-3)
        assert p.u[1] > 0.0


def test_discrete_spectrum_converges_to_continuum():
    errs = []
    for n_nodes in (51, 101, 201):
        mesh = Mesh1D(n_nodes=n_nodes)
        d = discrete_unperturbed_spectrum(mesh, 1.0, 0.0, 3)
        c = unperturbed_spectrum(mesh, 1.0, 0.0, 3)
        errs.append(max(abs(a.lam - b.lam) for a, b in zip(d, c)))
    assert errs[0] / errs[2] == pytest.approx(16.0, rel=0.15)


def test_zero_amplitude_correctors_vanish():
    p = _helm(spec=SPEC_ZERO)
    r = spectral_realization(p, seed=3, n_max=3)
    assert not r.match.any_violation
    for n in (1, 2, 3):
        assert r.inverse_eigenvalue_corrector(n) == 0.0
        assert r.eigenvalue_corrector(n) == 0.0
        assert r.diagonal_defect(n) == pytest.approx(0.0, abs=1e-13)
    assert r.fourier_corrector(1, 2) == pytest.approx(0.0, abs=1e-13)


def test_corrector_identities():
    p = _helm(epsilon=0.02)
    r = spectral_realization(p, seed=7, n_max=3)
    for n in (1, 2, 3):
        lam0 = r.reference[n - 1].lam
        lam1 = r.pairs[r.match.index_map[n - 1]].lam
        inv = r.inverse_eigenvalue_corrector(n)
        ev = r.eigenvalue_corrector(n)
        # exact algebraic relation between the two correctors
        assert ev == pytest.approx(-inv * lam0 * lam1, rel=1e-12)
    with pytest.raises(ValueError):
        r.fourier_corrector(2, 2)


def test_fourier_corrector_antisymmetry():
    """Leading order: (du_n, u_m) = -(du_m, u_n) for small amplitude."""
    spec = MAProcessSpec(weights=(0.5, 0.5), amplitude=1e-4)
    p = _helm(n_nodes=401, spec=spec)
    r = spectral_realization(p, seed=5, n_max=3)
    c12 = r.fourier_corrector(1, 2)
    c21 = r.fourier_corrector(2, 1)
    assert c12 == pytest.approx(-c21, abs=5e-4 * max(1.0, abs(c12)))


def test_spectral_gaps_hand_values():
    pairs = tuple(
        SpectralPair(index=i + 1, lam=l, u=np.zeros(3))
        for i, l in enumerate([1.0, 0.5, 0.4])
    )
    gaps = spectral_gaps(pairs)
    assert np.allclose(gaps, [0.25, 0.05, 0.05])
    single = (SpectralPair(index=1, lam=1.0, u=np.zeros(3)),)
    assert spectral_gaps(single)[0] == math.inf


def test_match_eigenpairs_identity_and_violation():
    mesh = Mesh1D(n_nodes=101)
    ref = discrete_unperturbed_spectrum(mesh, 1.0, 0.0, 4)
    m = match_eigenpairs(ref, ref)
    assert isinstance(m, MatchResult)
    assert np.array_equal(m.index_map, np.arange(4))
    assert not m.any_violation
    # shift every eigenvalue beyond its own half gap: all flagged
    shifted = tuple(
        SpectralPair(index=p.index, lam=p.lam + 10.0, u=p.u) for p in ref
    )
    m2 = match_eigenpairs(ref, shifted)
    assert m2.any_violation
    assert np.all(m2.flags)


def test_perturbed_spectrum_elliptic_route():
    mesh = Mesh1D(n_nodes=201)
    triple = CorrelatedTripleSpec(
        weights=([[0.25, 0.25]], [[0.0]], [[0.5, 0.5]])
    )
    p = EllipticProblem1D(
        mesh=mesh, triple_spec=triple, q0=1.0, rho_bar=1.0,
        f=np.ones(mesh.n_nodes), epsilon=0.01,
    )
    r = spectral_realization(p, seed=2, n_max=2)
    assert not r.match.any_violation
    assert np.isfinite(r.inverse_eigenvalue_corrector(1))
    with pytest.raises(TypeError):
        perturbed_spectrum(object(), 0, 1)


def test_overlap_covariances_frozen():
    mesh = Mesh1D(n_nodes=2001)
    assert inverse_corrector_covariance(mesh, 1.0, 1, 1) == pytest.approx(
        OVERLAP_DIAG, rel=1e-6
    )
    assert inverse_corrector_covariance(mesh, 1.0, 1, 2) == pytest.approx(
        OVERLAP_OFF, rel=1e-6
    )
    assert inverse_corrector_covariance(mesh, 0.5, 2, 2) == pytest.approx(
        0.5 * OVERLAP_DIAG, rel=1e-6
    )
    # A-eigenvalue correctors carry lam_n^2 lam_m^2
    lam1 = 1.0 / math.pi**2
    lam2 = 1.0 / (4 * math.pi**2)
    assert eigenvalue_corrector_covariance(mesh, 1.0, 0.0, 1.0, 1, 2) == pytest.approx(
        lam1**2 * lam2**2 * OVERLAP_OFF, rel=1e-6
    )


def test_fourier_variance_frozen():
    mesh = Mesh1D(n_nodes=2001)
    got = fourier_corrector_variance(mesh, 1.0, 0.0, 1.0, 1, 2)
    assert got == pytest.approx(FOURIER_12_VAR, rel=1e-6)
    assert FOURIER_12_VAR == pytest.approx(1.14066e-3, rel=1e-4)
    with pytest.raises(ValueError):
        fourier_corrector_variance(mesh, 1.0, 0.0, 1.0, 2, 2)


def test_heat_corrector_t_zero_and_linearization():
    p = _helm(n_nodes=201)
    v0 = np.sin(math.pi * p.mesh.nodes) + 0.3 * np.sin(2 * math.pi * p.mesh.nodes)
    r = spectral_realization(p, seed=4, n_max=2)
    d0, s0 = r.heat_corrector(1, 0.0, v0)
    assert d0 == pytest.approx(s0, rel=1e-12)
    with pytest.raises(ValueError):
        r.heat_corrector(1, -1.0, v0)
    # surrogate is the first-order expansion: gap shrinks quadratically in amp
    gaps = []
    for amp in (1e-2, 1e-3):
        spec = MAProcessSpec(weights=(0.5, 0.5), amplitude=amp)
        ra = spectral_realization(_helm(n_nodes=201, spec=spec), seed=4, n_max=2)
        d, s = ra.heat_corrector(1, 0.7, v0, epsilon_const=2.0)
        gaps.append(abs(d - s))
    assert gaps[0] / gaps[1] == pytest.approx(100.0, rel=0.3)


def test_heat_corrector_decay_scale():
    """epsilon_const rescales time in both routes identically."""
    p = _helm(n_nodes=201)
    v0 = np.sin(math.pi * p.mesh.nodes)
    r = spectral_realization(p, seed=6, n_max=1)
    d1, s1 = r.heat_corrector(1, 2.0, v0, epsilon_const=1.0)
    d2, s2 = r.heat_corrector(1, 1.0, v0, epsilon_const=2.0)
    assert d1 == pytest.approx(d2, rel=1e-12)
    assert s1 == pytest.approx(s2, rel=1e-12)
