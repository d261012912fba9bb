import math

import numpy as np
import pytest

from stablesde.lattice import SpaceTimeField
from stablesde.resolvent import (
    ResolventParams,
    apply_resolvent,
    apply_resolvent_gradient,
    conjugate,
    constant_L,
    constant_M,
    constant_N,
    resolvent_at_point,
    time_integral,
    time_integral_quadrature,
    verify_resolvent_equation,
)

CENTER = np.array([0.2, 0.1])


def gfun(t, x):
    return np.exp(-2 * t) * np.exp(-np.sum((x - CENTER) ** 2, -1) / (2 * 0.3**2))


def test_conjugate():
    assert conjugate(2.0) == 2.0
    assert conjugate(1.0) == math.inf and conjugate(math.inf) == 1.0
    assert math.isclose(conjugate(12.0), 12 / 11)


def test_params_validation():
    with pytest.raises(ValueError):
        ResolventParams(0.0)
    with pytest.raises(ValueError):
        ResolventParams(1.0, t_max=1.0)
    assert ResolventParams(2.0).t_max > math.log(1e10) / 2


def test_constant_resolves_to_inverse_lambda(ref_law, lat):
    one = SpaceTimeField.constant(lat, 1.0, 1.0, 0.05, tail_rate=0.0)
    for lam in (0.5, 2.0, 16.0):
        r = apply_resolvent(ResolventParams(lam), ref_law, one)
        assert np.max(np.abs(r.values - 1 / lam)) < 1e-12


def test_piecewise_linear_time_profile_is_exact(ref_law, lat):
    # g(t) = 1 - t on [0, 1], zero afterwards, is represented exactly by the slices
    e = SpaceTimeField.from_function(lat, lambda t, x: (1 - t) + 0 * x[..., 0], 1.0, 0.05)
    lam = 2.0
    r = apply_resolvent(ResolventParams(lam), ref_law, e)
    rem = 1 - r.times
    exact = rem / lam - (1 - np.exp(-lam * rem)) / lam**2
    assert np.max(np.abs(r.values[:, 0, 0] - exact)) < 1e-13


def test_exponential_tail_is_exact(ref_law, lat):
    e = SpaceTimeField.from_function(lat, lambda t, x: np.exp(-3 * t) + 0 * x[..., 0], 1.0, 0.05, tail_rate=3.0)
    r = apply_resolvent(ResolventParams(2.0), ref_law, e)
    assert math.isclose(r.values[-1, 0, 0], math.exp(-3.0) / 5, rel_tol=1e-13)


def test_spectral_matches_pointwise_oracle(ref_grid, ref_law, lat):
    params = ResolventParams(2.0)
    g = SpaceTimeField.from_function(lat, gfun, 1.0, 0.0125, tail_rate=2.0)
    f = apply_resolvent(params, ref_law, g)
    for i, idx in ((8, (134, 131)), (40, (128, 128))):
        x = lat.axis[list(idx)]
        value, err = resolvent_at_point(params, ref_grid, gfun, i * g.dt, x)
        assert abs(f.values[(i,) + idx] - value) < 1e-3 * abs(value) + err


def test_contraction_and_gradient_shape(ref_law, lat):
    g = SpaceTimeField.from_function(lat, gfun, 1.0, 0.05, tail_rate=2.0)
    params = ResolventParams(4.0)
    f = apply_resolvent(params, ref_law, g)
    assert f.sup_norm() <= g.sup_norm() / 4.0 + 1e-15
    grad = apply_resolvent_gradient(params, ref_law, g)
    assert grad.is_vector and grad.values.shape == (g.n_slices, 2) + lat.shape


def test_resolvent_equation_residual_converges(ref_law, lat):
    def bump(t, x):
        u = t
        chi = math.exp(-0.25 / (u * (1 - u))) if 0 < u < 1 else 0.0
        return chi * np.exp(-np.sum((x - CENTER) ** 2, -1) / (2 * 0.3**2))

    params = ResolventParams(2.0)
    coarse = verify_resolvent_equation(params, ref_law, SpaceTimeField.from_function(lat, bump, 1.0, 0.025))
    fine = verify_resolvent_equation(params, ref_law, SpaceTimeField.from_function(lat, bump, 1.0, 0.0125))
    assert coarse.relative_sup < 2e-2
    assert fine.relative_sup < 0.5 * coarse.relative_sup
    assert coarse.contraction_ok


def test_time_integral_closed_form():
    for a, th in ((1.0, 0.3), (5.0, 0.9), (0.2, 0.55)):
        assert math.isclose(time_integral(a, th), time_integral_quadrature(a, th), rel_tol=1e-10)
    with pytest.raises(ValueError):
        time_integral(1.0, 1.0)


def test_constants_power_laws(ref_grid):
    lams = [1.0, 2.0, 4.0, 8.0, 16.0]
    p = q = 12.0
    qs = conjugate(q)
    thN = 2 / (1.5 * p)
    thM = thN + 1 / 1.5
    N1, M1, L1 = constant_N(1.0, p, q, ref_grid), constant_M(1.0, p, q, ref_grid), constant_L(1.0, ref_grid)
    for lam in lams:
        assert math.isclose(constant_N(lam, p, q, ref_grid), N1 * lam ** (thN - 1 / qs), rel_tol=1e-10)
        assert math.isclose(constant_M(lam, p, q, ref_grid), M1 * lam ** (thM - 1 / qs), rel_tol=1e-10)
        assert math.isclose(constant_L(lam, ref_grid), L1 * lam ** (1 / 1.5 - 1), rel_tol=1e-10)
        assert math.isclose(constant_N(lam, p, q, ref_grid), constant_N(lam, p, q, ref_grid, quadrature=True), rel_tol=1e-10)


def test_constant_preconditions(ref_grid):
    with pytest.raises(ValueError):
        constant_M(1.0, 4, 4, ref_grid)
