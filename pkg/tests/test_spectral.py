import math

import numpy as np
import pytest

from altwalk import lattice, spectral


def _rand_k(rng, n):
    return rng.uniform(-math.pi, math.pi, size=n), rng.uniform(-math.pi, math.pi, size=n)


def test_bloch_matrix_unitary(phased_model):
    rng = np.random.default_rng(3)
    for k1, k2 in zip(*_rand_k(rng, 20)):
        m = spectral.bloch_matrix(phased_model, k1, k2)
        assert np.allclose(m @ m.conj().T, np.eye(2), atol=1e-13)


def test_eigenvalues_unimodular_and_product(phased_model):
    rng = np.random.default_rng(4)
    k1, k2 = _rand_k(rng, 500)
    lam1, lam2 = spectral.eigenvalues(phased_model, k1, k2)
    assert np.abs(np.abs(lam1) - 1.0).max() < 1e-13
    assert np.abs(np.abs(lam2) - 1.0).max() < 1e-13
    delta = phased_model.derived.delta
    assert np.abs(lam1 * lam2 - np.exp(1j * delta)).max() < 1e-12


def test_eigensystem_diagonalises(phased_model):
    rng = np.random.default_rng(5)
    for k1, k2 in zip(*_rand_k(rng, 10)):
        sys = spectral.eigensystem(phased_model, k1, k2)
        m = spectral.bloch_matrix(phased_model, k1, k2)
        for p in (0, 1):
            vec = sys.vectors[:, p]
            assert np.linalg.norm(m @ vec - sys.values[p] * vec) < 1e-12


def test_degenerate_point_raises(degenerate_model):
    # tau = +-1 closes the gap at specific wavenumbers of the balanced coin
    with pytest.raises(spectral.DegeneracyError):
        spectral.eigensystem(degenerate_model, -math.pi / 2, math.pi / 2)


def test_group_velocity_matches_fd(reference_model, phased_model):
    h = 1e-6
    rng = np.random.default_rng(6)
    for model in (reference_model, phased_model):
        k1, k2 = _rand_k(rng, 200)
        for p in (1, 2):
            v1 = spectral.group_velocity(model, p, k1, k2)[0]
            lam_p = spectral.eigenvalues(model, k1 + h, k2)[p - 1]
            lam_m = spectral.eigenvalues(model, k1 - h, k2)[p - 1]
            fd = -np.angle(lam_p * np.conj(lam_m)) / (2 * h)
            assert np.abs(v1 - fd).max() < 1e-6 * max(1.0, np.abs(fd).max())


def test_band_velocities_opposite_without_phases(reference_model):
    rng = np.random.default_rng(7)
    k1, k2 = _rand_k(rng, 100)
    v1a, v2a = spectral.group_velocity(reference_model, 1, k1, k2)
    v1b, v2b = spectral.group_velocity(reference_model, 2, k1, k2)
    assert np.abs(v1a + v1b).max() < 1e-12
    assert np.abs(v2a + v2b).max() < 1e-12


def test_fourier_initial_phase_convention():
    state = lattice.initial_state_from_sites({(1, 0): (1.0, 0.0)})
    spectrum = spectral.fourier_initial(state)
    k1, k2 = 0.7, -0.3
    got = spectrum(k1, k2)
    # hat psi(k) = sum_x e^{-i k.x} psi(x)
    assert got[0] == pytest.approx(np.exp(-1j * k1), abs=1e-14)
    assert got[1] == 0.0


def test_parseval_on_grid():
    state = lattice.initial_state_from_sites({
        (0, 0): (0.5, 0.5j),
        (1, 2): (0.5, 0.0),
        (-1, 0): (0.0, 0.5),
    })
    spectrum = spectral.fourier_initial(state)
    n = 64
    g = -math.pi + 2 * math.pi * np.arange(n) / n
    k1, k2 = np.meshgrid(g, g, indexing="ij")
    vals = spectrum(k1, k2)
    mean_norm = float(np.mean(np.sum(np.abs(vals) ** 2, axis=-1)))
    assert mean_norm == pytest.approx(state.norm_sq(), abs=1e-13)


def test_band_weights_sum_to_norm(reference_model):
    state = lattice.initial_state_delta(np.array([1.0, 1.0j]) / math.sqrt(2))
    spectrum = spectral.fourier_initial(state)
    rng = np.random.default_rng(8)
    k1, k2 = _rand_k(rng, 50)
    w1, w2 = spectral.band_weights(reference_model, spectrum, k1, k2)
    assert np.abs(w1 + w2 - 1.0).max() < 1e-12
    assert w1.min() > -1e-12 and w2.min() > -1e-12


def test_spectral_reconstruct_matches_evolution(phased_model):
    state = lattice.initial_state_from_sites({
        (0, 0): (0.8, 0.0),
        (1, -2): (0.0, 0.6),
    })
    t = 6
    direct = lattice.evolve(phased_model, state, t)
    recon = spectral.spectral_reconstruct(phased_model, state, t)
    assert recon.time == t
    # compare over the union of both windows
    for x1 in range(direct.x1_min - 1, direct.x1_max + 2):
        for x2 in range(direct.x2_min - 1, direct.x2_max + 2):
            assert np.allclose(
                direct.amplitude(x1, x2), recon.amplitude(x1, x2), atol=1e-12)


def test_spectral_evolve_is_phase_multiplication(reference_model):
    state = lattice.initial_state_delta(np.array([1.0, 0.0]))
    spectrum = spectral.fourier_initial(state)
    k1 = np.array([0.3]); k2 = np.array([-1.1])
    t = 5
    out = spectral.spectral_evolve(reference_model, spectrum, t, k1, k2)
    m = spectral.bloch_matrix(reference_model, float(k1[0]), float(k2[0]))
    expect = np.linalg.matrix_power(m, t) @ spectrum(float(k1[0]), float(k2[0]))
    assert np.allclose(out[0], expect, atol=1e-12)


def test_char_function_at_zero(reference_model):
    state = lattice.initial_state_delta(np.array([1.0, 0.0]))
    spectrum = spectral.fourier_initial(state)
    val = spectral.numeric_char_function(reference_model, spectrum, (0.0, 0.0), 64)
    assert val == pytest.approx(1.0, abs=1e-12)


def test_char_function_skips_crossings(degenerate_model):
    state = lattice.initial_state_delta(np.array([1.0, 0.0]))
    spectrum = spectral.fourier_initial(state)
    # the 64-point centred grid contains the gap-closing wavenumbers
    val, skipped = spectral.numeric_char_function(
        degenerate_model, spectrum, (0.0, 0.0), 64, with_info=True)
    assert skipped > 0
    assert val == pytest.approx(1.0, abs=1e-12)
