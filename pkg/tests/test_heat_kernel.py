import numpy as np
import pytest

from stablesde.heat_kernel import (
    T_MIN,
    KernelBudgetError,
    build_kernel,
    density_at,
    generator_applied_to_kernel,
    invert_density,
    invert_gradient,
    lp_norm_report,
)
from stablesde.lattice import Lattice
from stablesde.stable_law import four_atom_law


def test_mass_peak_and_positivity(ref_grid):
    rep = ref_grid.truncation_report
    assert abs(rep.mass - 1.0) < 1e-3
    assert rep.aliasing < 1e-3 and rep.truncation < 1e-3
    assert rep.min_value > -1e-6 * rep.peak
    assert rep.imag_residue < 1e-10 * rep.peak


def test_scaling_law_matches_direct_inversion(ref_law, ref_grid):
    lat = ref_grid.lattice
    pts = lat.points_array()
    for t in (0.5, 2.0):
        direct = invert_density(ref_law, lat, t)
        assert np.max(np.abs(direct - density_at(ref_grid, t, pts))) < 1e-4 * direct.max()


def test_scaling_with_center(skew_law):
    # heavier aliasing at t = 2 on this box, so compare on the inner half
    grid = build_kernel(skew_law, 12.0, 512)
    lat = grid.lattice
    direct = invert_density(skew_law, lat, 2.0)
    err = np.abs(direct - density_at(grid, 2.0, lat.points_array()))
    inner = np.ix_(*(np.abs(lat.axis) <= lat.extent / 2,) * 2)
    assert np.max(err[inner]) < 1e-4 * direct.max()


def test_gradient_matches_finite_differences(ref_law):
    # at t = 8 the kernel spans many nodes, so fourth-order differences resolve it
    lat = Lattice(2, 12.8, 512)
    p = invert_density(ref_law, lat, 8.0)
    h = lat.spacing
    fd = (-np.roll(p, -2, 0) + 8 * np.roll(p, -1, 0) - 8 * np.roll(p, 1, 0) + np.roll(p, 2, 0)) / (12 * h)
    g = invert_gradient(ref_law, lat, 8.0)[0]
    assert np.max(np.abs(fd - g)) < 1e-3 * np.max(np.abs(g))


def test_small_time_refused(ref_grid):
    with pytest.raises(ValueError):
        density_at(ref_grid, T_MIN / 2, np.zeros((1, 2)))
    with pytest.raises(ValueError):
        generator_applied_to_kernel(ref_grid, 0.01)


def test_budget_errors(ref_law):
    with pytest.raises(KernelBudgetError):
        build_kernel(ref_law, 1.0, 128)
    with pytest.raises(ValueError):
        build_kernel(ref_law, 12.8, 100)


def test_generator_variants(ref_grid, ref_law):
    lat = ref_grid.lattice
    fwd = generator_applied_to_kernel(ref_grid, 1.0, "forward")
    adj = generator_applied_to_kernel(ref_grid, 1.0, "adjoint")
    # symmetric law: both variants coincide and integrate to zero
    assert np.max(np.abs(fwd - adj)) < 1e-12 * np.max(np.abs(fwd))
    assert abs(lat.integrate(adj)) < 1e-8
    dt = 1e-3
    fd = (invert_density(ref_law, lat, 1 + dt) - invert_density(ref_law, lat, 1 - dt)) / (2 * dt)
    assert np.max(np.abs(fd - adj)) < 1e-4 * np.max(np.abs(adj))


def test_adjoint_variant_is_time_derivative_for_skew_law(skew_law):
    grid = build_kernel(skew_law, 12.0, 512)
    lat = grid.lattice
    dt = 1e-3
    fd = (invert_density(skew_law, lat, 1 + dt) - invert_density(skew_law, lat, 1 - dt)) / (2 * dt)
    adj = generator_applied_to_kernel(grid, 1.0, "adjoint")
    assert np.max(np.abs(fd - adj)) < 1e-4 * np.max(np.abs(adj))


def test_lp_norms(ref_grid):
    one = lp_norm_report(ref_grid, "p1", 1.0)
    assert abs(one.value - 1.0) < 1e-3
    inf = lp_norm_report(ref_grid, "p1", np.inf)
    assert inf.value == ref_grid.peak
    g = lp_norm_report(ref_grid, "grad_p1", 12 / 11)
    assert g.relative_tail < 1e-2 and g.value > 0
    with pytest.raises(ValueError):
        lp_norm_report(ref_grid, "p1", 0.5)


def test_invert_gradient_shape(ref_law):
    lat = Lattice(2, 12.8, 64)
    assert invert_gradient(ref_law, lat).shape == (2, 64, 64)
