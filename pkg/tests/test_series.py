import math

import numpy as np
import pytest

from stablesde.drift import mollify, radial_singular_drift, zero_drift
from stablesde.lattice import Lattice, SpaceTimeField
from stablesde.resolvent import ResolventParams, apply_resolvent
from stablesde.series import (
    SeriesBudgetError,
    apply_B,
    constants,
    evaluate_series,
    kappa,
    lambda_threshold,
    series_of_abs_drift,
)

SMALL = Lattice(2, 2.0, 128)


def bump(center, width=0.3):
    c = np.asarray(center)
    return lambda t, x: np.exp(-2 * t) * np.exp(-np.sum((x - c) ** 2, -1) / (2 * width**2))


@pytest.fixture(scope="module")
def small_drift():
    return radial_singular_drift(SMALL, 0.0183, 0.1, 1.0, 0.05, 12, 12, b1_vector=(0.01, 0.0))


@pytest.fixture(scope="module")
def g_small():
    return SpaceTimeField.from_function(SMALL, bump((0.2, 0.1)), 1.0, 0.05, tail_rate=2.0)


@pytest.fixture(scope="module")
def lam(small_drift, ref_grid):
    return 4 * lambda_threshold(small_drift, ref_grid)


@pytest.fixture(scope="module")
def result(small_drift, ref_grid, g_small, lam):
    return evaluate_series(small_drift, ResolventParams(lam), ref_grid, g_small)


def test_threshold_sits_at_margin(small_drift, ref_grid):
    lam0 = lambda_threshold(small_drift, ref_grid)
    assert math.isclose(kappa(lam0, small_drift, ref_grid), 0.99, rel_tol=1e-9)
    assert kappa(2 * lam0, small_drift, ref_grid) < 0.99


def test_zero_drift_collapses_to_resolvent(ref_grid, g_small):
    params = ResolventParams(3.0)
    res = evaluate_series(zero_drift(SMALL, 1.0, 0.05), params, ref_grid, g_small)
    assert res.order == 0 and res.tail_bound == 0.0
    assert np.array_equal(res.partial_sum.values, apply_resolvent(params, ref_grid.law, g_small).values)


def test_terms_obey_analytic_bounds(result):
    assert not result.bound_violations
    for k in range(1, len(result.term_norms)):
        assert result.term_norms[k] <= result.term_bounds[k]
    assert result.tail_bound <= 1e-6 * result.g_norm


def test_measured_ratios_below_kappa(result):
    assert max(result.ratios) <= result.kappa
    assert max(result.gradient_ratios) <= result.kappa


def test_geometric_rate_of_increments(result):
    n = np.array(result.term_norms[1:12])
    slope = np.polyfit(np.arange(n.size), np.log(n), 1)[0]
    assert slope <= math.log(result.kappa) + 0.05


def test_linearity(small_drift, ref_grid, g_small, lam):
    params = ResolventParams(lam)
    g2 = SpaceTimeField.from_function(SMALL, bump((-0.5, 0.4), 0.2), 1.0, 0.05, tail_rate=2.0)
    combo = SpaceTimeField(SMALL, 2 * g_small.values + 3 * g2.values, 0.05, 2.0)
    a = evaluate_series(small_drift, params, ref_grid, g_small, keep_terms=False).partial_sum.values
    b = evaluate_series(small_drift, params, ref_grid, g2, keep_terms=False).partial_sum.values
    c = evaluate_series(small_drift, params, ref_grid, combo, keep_terms=False).partial_sum.values
    assert np.max(np.abs(c - (2 * a + 3 * b))) < 1e-10 * np.max(np.abs(c))


def test_first_correction_is_resolvent_of_B(small_drift, ref_grid, g_small, lam, result):
    params = ResolventParams(lam)
    t1 = apply_resolvent(params, ref_grid.law, apply_B(small_drift, params, ref_grid, g_small))
    assert np.allclose(result.terms[1].values, t1.values, rtol=0, atol=1e-15)


def test_abs_drift_functional_bounded(small_drift, ref_grid, lam):
    res, sup, bound = series_of_abs_drift(small_drift, ResolventParams(lam), ref_grid)
    assert 0 < sup <= bound
    z = series_of_abs_drift(zero_drift(SMALL, 1.0, 0.05), ResolventParams(lam), ref_grid)
    assert z[1] == 0.0


def test_abs_drift_functional_decreases_in_lambda(small_drift, ref_grid):
    lam0 = lambda_threshold(small_drift, ref_grid)
    sups = [series_of_abs_drift(mollify(small_drift, 8), ResolventParams(f * lam0), ref_grid)[1] for f in (2, 8, 32)]
    assert sups[0] > sups[1] > sups[2]


def test_mollified_series_converge(small_drift, ref_grid, g_small, lam):
    params = ResolventParams(lam)
    full = evaluate_series(small_drift, params, ref_grid, g_small, keep_terms=False).partial_sum.values
    window = np.ix_(np.arange(48, 80), np.arange(48, 80))
    gaps = []
    for n in (4, 8, 16, 32):
        v = evaluate_series(mollify(small_drift, n), params, ref_grid, g_small, keep_terms=False).partial_sum.values
        gaps.append(np.max(np.abs((v - full)[:, window[0], window[1]])))
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_below_threshold_is_refused(small_drift, ref_grid, g_small):
    lam0 = lambda_threshold(small_drift, ref_grid)
    with pytest.raises(SeriesBudgetError):
        evaluate_series(small_drift, ResolventParams(0.5 * lam0), ref_grid, g_small)


def test_huge_drift_has_no_threshold(ref_grid):
    big = radial_singular_drift(SMALL, 1e9, 0.1, 1.0, 0.05, 12, 12)
    with pytest.raises(SeriesBudgetError):
        lambda_threshold(big, ref_grid)


def test_constants_record(small_drift, ref_grid, lam):
    c = constants(lam, small_drift, ref_grid)
    assert math.isclose(c.kappa, c.L * c.M + c.M_lam * c.b2_norm)
    assert set(c.to_dict()) == {"lambda", "N", "M_lambda", "L", "kappa", "M", "b2_norm"}
