import math

import numpy as np
import pytest

from altwalk import lattice, limit, spectral


@pytest.fixture(scope="module")
def reference_spectrum():
    return spectral.fourier_initial(lattice.initial_state_delta(np.array([1.0, 0.0])))


def _interior_points(model, rng, count):
    """Velocity points strictly inside the support, sampled through the forward map."""
    out1, out2 = [], []
    while len(out1) < count:
        k1, k2 = rng.uniform(-math.pi, math.pi, size=2)
        v1, v2 = (float(x) for x in limit.forward_map(model, k1, k2))
        if limit.support_contains(model, v1, v2) == "inside":
            out1.append(v1)
            out2.append(v2)
    return np.array(out1), np.array(out2)


# --- support geometry -------------------------------------------------------


def test_forward_map_center(reference_model):
    v1, v2 = limit.forward_map(reference_model, math.pi / 2, math.pi / 2)
    assert v1 == pytest.approx(0.0, abs=1e-15)
    assert v2 == pytest.approx(0.0, abs=1e-15)


def test_support_contains_classification(reference_model):
    assert limit.support_contains(reference_model, 0.0, 0.0) == "inside"
    assert limit.support_contains(reference_model, 0.9, 0.0) == "outside"
    # corner point (0.6, 0) sits on both ellipses
    assert limit.support_contains(reference_model, 0.6, 0.0) == "boundary"


def test_support_corners_reference(reference_model):
    corners = limit.support_corners(reference_model)
    assert corners.shape == (4, 2)
    expected = {(0.6, 0.0), (-0.6, 0.0), (0.0, 0.6), (0.0, -0.6)}
    got = {(round(float(c[0]), 12), round(float(c[1]), 12)) for c in corners}
    assert got == expected


def test_support_corners_empty_when_degenerate(degenerate_model):
    assert limit.support_corners(degenerate_model).shape == (0, 2)


def test_support_radius_axes(reference_model):
    # along u1: tighter ellipse has semi-axis sqrt(0.2)
    assert limit.support_radius(reference_model, 0.0) == pytest.approx(
        math.sqrt(0.2), abs=1e-14)
    assert limit.support_radius(reference_model, math.pi / 2) == pytest.approx(
        math.sqrt(0.2), abs=1e-14)


def test_boundary_polyline_on_boundary(reference_model):
    pts = limit.support_boundary(reference_model, 256)
    for v1, v2 in pts[::16]:
        assert limit.support_contains(reference_model, float(v1), float(v2)) == "boundary"


def test_degenerate_boundary_is_circle(degenerate_model):
    pts = limit.support_boundary(degenerate_model, 128)
    radii = np.hypot(pts[:, 0], pts[:, 1])
    assert np.abs(radii - 1.0).max() < 1e-12


# --- Jacobians --------------------------------------------------------------


def test_jacobian_inverse_center_values(reference_model):
    assert limit.jacobian_inverse(reference_model, 0.0, 0.0, +1) == pytest.approx(
        25.0 / 9.0, abs=1e-12)
    assert limit.jacobian_inverse(reference_model, 0.0, 0.0, -1) == pytest.approx(
        16.0 / 9.0, abs=1e-12)


def test_jacobian_inverse_outside_raises(reference_model):
    with pytest.raises(limit.OutsideSupportError):
        limit.jacobian_inverse(reference_model, 0.95, 0.0, +1)


def test_jacobian_forward_positive_inside(reference_model):
    rng = np.random.default_rng(9)
    for _ in range(50):
        k1, k2 = rng.uniform(-math.pi, math.pi, size=2)
        assert limit.jacobian_forward(reference_model, k1, k2) >= 0.0


def test_degenerate_jacobian_form(degenerate_model):
    for v1, v2 in ((0.2, -0.1), (0.55, 0.3), (0.0, 0.0)):
        expect = 1.0 / ((1.0 - v1 * v1) * (1.0 - v2 * v2))
        assert limit.jacobian_inverse(degenerate_model, v1, v2, +1) == expect
        assert limit.jacobian_inverse(degenerate_model, v1, v2, -1) == 0.0


# --- segment families -------------------------------------------------------


def test_kappa_gamma_at_origin(reference_model):
    assert limit.kappa_gamma(reference_model, 0.0, 0.0, +1, "R") == pytest.approx(1.0, abs=1e-12)
    assert limit.kappa_gamma(reference_model, 0.0, 0.0, +1, "T") == pytest.approx(-1.0, abs=1e-12)


def test_kappa_level_sets_close(reference_model, phased_model):
    # the forward image of the segment c2 = kappa c1 lands on the kappa-conic
    for model in (reference_model, phased_model):
        d = model.derived
        for kappa in (0.35, -0.8):
            c1 = np.linspace(-0.93, 0.93, 11)
            l1 = np.arccos(c1)
            l2 = np.arccos(np.clip(kappa * c1, -1.0, 1.0))
            k1 = (l1 - l2) / 2.0 - d.phi_1
            k2 = (l1 + l2) / 2.0 - d.phi_2
            v1, v2 = limit.forward_map(model, k1, k2)
            u1, u2 = limit.rotated_coords(v1, v2)
            res = limit.conic_residual(model, kappa, u1, u2, "R")
            assert np.abs(res).max() < 1e-10


def test_kappa_gamma_recovers_ratio(reference_model):
    d = reference_model.derived
    kappa = 0.4
    c1 = 0.7
    l1 = math.acos(c1)
    l2 = math.acos(kappa * c1)
    k1 = (l1 - l2) / 2.0 - d.phi_1
    k2 = (l1 + l2) / 2.0 - d.phi_2
    v1, v2 = limit.forward_map(reference_model, k1, k2)
    u1, u2 = limit.rotated_coords(float(v1), float(v2))
    got = []
    for s in (+1, -1):
        try:
            got.append(limit.kappa_gamma(reference_model, u1, u2, s, "R"))
        except limit.BranchError:
            pass
    assert any(abs(g - kappa) < 1e-9 for g in got)


# --- branch structure -------------------------------------------------------


def test_classify_branch_example(reference_model):
    br = limit.classify_branch(reference_model, math.pi / 2, math.pi / 2)
    assert (br.n, br.m, br.s, br.p) == (1, 1, "R", 1)


def test_branch_validation():
    with pytest.raises(ValueError):
        limit.Branch(0, 1, "R", 1)
    with pytest.raises(ValueError):
        limit.Branch(1, 5, "R", 1)
    with pytest.raises(ValueError):
        limit.Branch(1, 1, "X", 1)
    with pytest.raises(ValueError):
        limit.Branch(1, 1, "R", 3)


def test_inverse_map_center(reference_model):
    k1, k2 = limit.inverse_map(reference_model, 0.0, 0.0, limit.Branch(1, 1, "R", 1))
    assert k1 == pytest.approx(math.pi / 2, abs=1e-12)
    assert k2 == pytest.approx(math.pi / 2, abs=1e-12)


def test_inverse_map_outside_raises(reference_model):
    with pytest.raises(limit.OutsideSupportError):
        limit.inverse_map(reference_model, 0.9, 0.3, limit.Branch(1, 1, "R", 1))


def test_roundtrip_with_phases(phased_model):
    rng = np.random.default_rng(10)
    worst = 0.0
    done = 0
    while done < 200:
        k1, k2 = rng.uniform(-math.pi, math.pi, size=2)
        v1, v2 = (float(x) for x in limit.forward_map(phased_model, k1, k2))
        if limit.support_contains(phased_model, v1, v2) != "inside":
            continue
        br = limit.classify_branch(phased_model, k1, k2)
        r1, r2 = limit.inverse_map(phased_model, v1, v2, br)
        worst = max(worst, limit._torus_dist(k1, k2, r1, r2))
        done += 1
    assert worst < 1e-9


def test_sixteen_branches_interior(reference_model):
    rng = np.random.default_rng(11)
    v1, v2 = _interior_points(reference_model, rng, 40)
    count_plus = np.zeros(v1.shape, dtype=int)
    count_minus = np.zeros(v1.shape, dtype=int)
    for p in (1, 2):
        for n in range(1, 9):
            for m in range(1, 5):
                _, _, ok = limit.branch_preimages(reference_model, v1, v2, n, m, p)
                if m % 2 == 0:
                    count_plus += ok
                else:
                    count_minus += ok
    assert np.all(count_plus == 8)
    assert np.all(count_minus == 8)


def test_forward_consistency_of_preimages(reference_model):
    rng = np.random.default_rng(12)
    v1, v2 = _interior_points(reference_model, rng, 10)
    for p in (1, 2):
        sign = 1.0 if p == 1 else -1.0
        for n in range(1, 9):
            for m in range(1, 5):
                k1, k2, ok = limit.branch_preimages(reference_model, v1, v2, n, m, p)
                if not ok.any():
                    continue
                w1, w2 = limit.forward_map(reference_model, k1[ok], k2[ok])
                assert np.abs(w1 - sign * v1[ok]).max() < 1e-9
                assert np.abs(w2 - sign * v2[ok]).max() < 1e-9


# --- density ----------------------------------------------------------------


def test_density_refusals(reference_model, reference_spectrum):
    with pytest.raises(limit.OutsideSupportError):
        limit.density(reference_model, reference_spectrum, 0.9, 0.0)


def test_density_positive_inside(reference_model, reference_spectrum):
    rng = np.random.default_rng(13)
    v1, v2 = _interior_points(reference_model, rng, 25)
    grid = limit.density_grid(reference_model, reference_spectrum, v1, v2)
    assert np.all(grid.f[grid.evaluable] > 0.0)


def test_density_grid_masks(reference_model, reference_spectrum):
    grid = limit.density_grid(
        reference_model, reference_spectrum,
        np.array([0.0, 0.9]), np.array([0.0, 0.0]))
    assert grid.inside.tolist() == [True, False]
    assert grid.evaluable.tolist() == [True, False]
    assert grid.f[1] == 0.0
    assert grid.branch_plus[0] == 8 and grid.branch_minus[0] == 8
    # at the origin every preimage carries unit total band weight, so
    # f(0,0) = 4*(25/9) + 4*(16/9) for any delta start
    assert abs(grid.f[0] - 164.0 / 9.0) < 1e-9


def test_density_continuous_across_rotated_axes(reference_model, reference_spectrum):
    # v1 == v2 puts the preimage angles on shared square corners; the value
    # there must match the limit from either side, not double-count slots
    grid = limit.density_grid(
        reference_model, reference_spectrum,
        np.array([0.1, 0.1, 0.1, -0.1]), np.array([0.1, 0.1 + 1e-6, 0.1 - 1e-6, 0.1]))
    assert grid.branch_plus.tolist() == [8, 8, 8, 8]
    assert abs(grid.f[0] - grid.f[1]) < 1e-4 * grid.f[0]
    assert abs(grid.f[0] - grid.f[2]) < 1e-4 * grid.f[0]


def test_degenerate_branches_deduplicated(degenerate_model):
    spectrum = spectral.fourier_initial(lattice.initial_state_delta(np.array([1.0, 0.0])))
    grid = limit.density_grid(
        degenerate_model, spectrum, np.array([0.2, -0.3]), np.array([-0.1, 0.25]))
    assert grid.branch_plus.tolist() == [8, 8]
    assert grid.branch_minus.tolist() == [0, 0]
    assert np.all(grid.f > 0.0)


def test_density_mass_near_one(reference_model, reference_spectrum):
    result = limit.integrate_density(reference_model, reference_spectrum)
    assert result.total == pytest.approx(1.0, abs=1e-2)
    assert result.shell_estimate >= 0.0


def test_density_swap_plus_reflection_symmetric(reference_model):
    # f(v) + f(-v) is symmetric under swapping the two axes for point starts
    spectrum = spectral.fourier_initial(lattice.initial_state_delta(np.array([1.0, 0.0])))
    pts = [(0.12, 0.31), (-0.2, 0.05), (0.3, -0.2)]
    for v1, v2 in pts:
        forward = (limit.density(reference_model, spectrum, v1, v2)
                   + limit.density(reference_model, spectrum, -v1, -v2))
        swapped = (limit.density(reference_model, spectrum, v2, v1)
                   + limit.density(reference_model, spectrum, -v2, -v1))
        assert forward == pytest.approx(swapped, rel=1e-9)


def test_balanced_spinor_density_symmetric(reference_model):
    # the (1, i)/sqrt(2) start gives a density symmetric in v -> (v2, v1)
    spinor = np.array([1.0, 1.0j]) / math.sqrt(2)
    spectrum = spectral.fourier_initial(lattice.initial_state_delta(spinor))
    for v1, v2 in [(0.1, 0.3), (-0.25, 0.3)]:
        f_a = limit.density(reference_model, spectrum, v1, v2)
        f_b = limit.density(reference_model, spectrum, v2, v1)
        assert f_a == pytest.approx(f_b, rel=1e-9)


# --- reference curves -------------------------------------------------------


def test_konno_density_properties():
    r = 1.0 / math.sqrt(2)
    assert limit.konno_density(0.9, r) == 0.0
    assert limit.konno_density(0.3, r) == limit.konno_density(-0.3, r)
    # integrates to one over (-r, r)
    phi = np.linspace(-math.pi / 2, math.pi / 2, 20001)[1:-1]
    v = r * np.sin(phi)
    integrand = limit.konno_density(v, r) * r * np.cos(phi)
    total = np.trapezoid(integrand, phi)
    assert total == pytest.approx(1.0, abs=1e-3)


def test_grover_reference_ellipse():
    inside = limit.reference_ellipse_grover(0.5, np.array([0.3]), np.array([0.0]))
    outside = limit.reference_ellipse_grover(0.5, np.array([0.9]), np.array([-0.9]))
    assert bool(inside[0]) and not bool(outside[0])


def test_weight_table_report_keys(reference_model):
    rep = limit.weight_table_report(reference_model, 0.1, 0.25)
    assert set(rep) == {"octant", "expected_band1", "expected_band2",
                        "actual_band1", "actual_band2", "matches"}
    assert sorted(rep["actual_band1"] + rep["actual_band2"]) != []
