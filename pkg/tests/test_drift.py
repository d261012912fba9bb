import math
import warnings

import numpy as np
import pytest

from stablesde.drift import (
    DriftField,
    bump_kernel,
    check_admissible,
    constant_drift,
    lipschitz_drift,
    mixed_norm,
    mollify,
    radial_singular_drift,
    radial_singular_norm,
    zero_drift,
)
from stablesde.lattice import Lattice, SpaceTimeField


@pytest.mark.parametrize(
    "d, alpha, p, q, value, verdict",
    [
        (2, 1.5, 12, 12, 0.29167, True),
        (2, 1.5, 4, 4, 0.875, False),
        (2, 1.5, 8, 6, 0.5, False),
    ],
)
def test_admissibility_table(d, alpha, p, q, value, verdict):
    rep = check_admissible(d, alpha, p, q)
    assert round(rep.value, 5) == value
    assert rep.threshold == alpha - 1
    assert rep.passed is verdict


def test_admissibility_monotone_in_exponents():
    grid = [2, 3, 4, 6, 8, 12, 24, 48]
    for p in grid:
        for q in grid:
            if check_admissible(2, 1.6, p, q).passed:
                assert check_admissible(2, 1.6, 2 * p, q).passed
                assert check_admissible(2, 1.6, p, 2 * q).passed


def test_admissibility_rejects_nonpositive():
    with pytest.raises(ValueError):
        check_admissible(2, 1.5, 0.0, 4)


def test_mixed_norm_constant_closed_form(lat):
    c, T, p, q = 0.7, 1.0, 6.0, 3.0
    f = constant_drift(lat, (c, 0.0), T, 0.1).b1
    expect = c * (2 * lat.extent) ** (2 / p) * T ** (1 / q)
    assert math.isclose(mixed_norm(f, p, q), expect, rel_tol=1e-12)
    assert mixed_norm(zero_drift(lat, T, 0.1).b1, p, q) == 0.0


def test_mixed_norm_homogeneous(lat, rng):
    vals = rng.normal(size=(5, 2) + lat.shape)
    f = SpaceTimeField(lat, vals, 0.1)
    base = mixed_norm(f, 4, 5, warn=False)
    assert math.isclose(mixed_norm(f.scaled(-3.5), 4, 5, warn=False), 3.5 * base, rel_tol=1e-12)


def test_mixed_norm_warns_on_slice_jump(lat):
    vals = np.zeros((3, 2) + lat.shape)
    vals[1] = 1.0
    with pytest.warns(RuntimeWarning):
        mixed_norm(SpaceTimeField(lat, vals, 0.1), 2, 2)


def test_radial_norm_converges_under_refinement():
    exact = radial_singular_norm(1.0, 0.1, 1.0, 12, 12, 1.0)
    errs = []
    for n in (128, 256, 512):
        lat = Lattice(2, 2.0, n)
        d = radial_singular_drift(lat, 1.0, 0.1, 1.0, 0.5, 12, 12)
        errs.append(abs(d.b2_norm - exact) / exact)
    assert errs[-1] < 1e-2
    assert errs[2] < errs[0]


def test_declared_M_must_dominate(lat):
    b1 = constant_drift(lat, (1.0, 0.0), 1.0, 0.5).b1
    with pytest.raises(ValueError):
        DriftField(b1, b1.scaled(0.0), 0.5, 12, 12)


def test_bump_kernel_normalized_and_refusal(lat):
    phi = bump_kernel(lat, 8)
    assert math.isclose(phi.sum(), 1.0, rel_tol=1e-14)
    assert phi[0, 0] == phi.max()
    with pytest.raises(ValueError):
        bump_kernel(lat, 64)


def test_mollified_invariants(ref_drift):
    prev = None
    for n in (4, 8, 16, 32):
        m = mollify(ref_drift, n)
        assert all(m.check_invariants().values())
        gap = mixed_norm(m.b2n - ref_drift.b2, 12, 12, warn=False)
        if prev is not None:
            assert gap < prev
        prev = gap
    assert prev < 0.25 * ref_drift.b2_norm


def test_mollification_of_smooth_drift_is_second_order():
    lat = Lattice(2, 4.0, 512)
    d = lipschitz_drift(lat, 1.0, 0.5, 0.5)
    errs = []
    for n in (4, 8, 16):
        m = mollify(d, n)
        errs.append(np.max(np.abs(m.b1n.values - d.b1.values)))
    assert errs[0] / errs[1] > 3.0 and errs[1] / errs[2] > 3.0


def test_truncation_caps_magnitude(lat):
    d = radial_singular_drift(lat, 5.0, 0.1, 1.0, 0.5, 12, 12)
    m = mollify(d, 4)
    assert m.total().sup_norm() <= 2 * 4
    with pytest.raises(ValueError):
        mollify(d, 0)
