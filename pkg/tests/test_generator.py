import numpy as np
import pytest

from stablesde.generator import (
    QuadratureError,
    affine_function,
    apply_A,
    apply_L,
    fourier_mode,
    gaussian_bump,
)
from stablesde.lattice import Lattice
from stablesde.resolvent import spectral_generator

PTS = np.array([[0.0, 0.0], [0.3, -0.2], [1.0, 0.5], [-2.0, 1.7]])


@pytest.mark.parametrize("u", [(1.0, 0.0), (2.0, -1.0), (0.5, 3.0), (7.0, 4.0)])
def test_fourier_modes_match_symbol(ref_law, skew_law, u):
    for law in (ref_law, skew_law):
        f = fourier_mode(u, a=0.7, b=-0.4, law=law)
        res = apply_A(law, f, PTS)
        scale = max(1.0, abs(complex(law.psi(np.asarray(u)))))
        assert np.max(np.abs(res.value - f.generator(PTS))) < 1e-8 * scale
        assert not np.any(res.flagged)


def test_affine_function_gives_center_term(skew_law):
    f = affine_function((1.5, -2.0), 3.0)
    res = apply_A(skew_law, f, PTS)
    assert np.allclose(res.value, 1.5 * 0.3 + 2.0 * 0.2)


def test_constant_is_annihilated(skew_law):
    f = fourier_mode((0.0, 0.0), a=2.0, law=skew_law)
    assert np.max(np.abs(apply_A(skew_law, f, PTS).value)) < 1e-14


def test_gaussian_bump_matches_spectral_generator(ref_law):
    # a wide periodic box keeps the image contributions far below tolerance
    lat = Lattice(2, 16.0, 512)
    f = gaussian_bump((0.2, 0.1), 0.4)
    spec = spectral_generator(ref_law, lat, f.value(lat.points_array()))
    idx = [(256, 256), (262, 259), (240, 270)]
    x = np.array([[lat.axis[i], lat.axis[j]] for i, j in idx])
    res = apply_A(ref_law, f, x, tol=1e-9)
    ref = np.array([spec[i, j] for i, j in idx])
    assert np.max(np.abs(res.value - ref)) < 1e-4 * np.max(np.abs(ref))


def test_apply_L_adds_drift_term(ref_law):
    f = fourier_mode((1.0, 2.0), law=ref_law)
    b = np.tile([0.5, -0.25], (PTS.shape[0], 1))
    lf = apply_L(ref_law, f, PTS, b).value
    expect = f.generator(PTS) + f.gradient(PTS) @ np.array([0.5, -0.25])
    assert np.allclose(lf, expect, atol=1e-9)


def test_gradients_consistent():
    assert gaussian_bump((0.0, 0.0), 0.3).check_gradient(PTS * 0.2)
    assert fourier_mode((2.0, 1.0)).check_gradient(PTS)


def test_dimension_mismatch(ref_law):
    with pytest.raises(ValueError):
        apply_A(ref_law, fourier_mode((1.0, 0.0, 0.0)), np.zeros((1, 3)))


def test_generic_tail_guard(ref_law):
    from dataclasses import replace

    f = replace(fourier_mode((1.0, 0.0)), kind="generic", length_scale=1e-6)
    with pytest.raises(QuadratureError):
        apply_A(ref_law, f, PTS[:1], max_panels=10, raise_on_flag=True)
