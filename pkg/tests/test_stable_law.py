import json
import math

import numpy as np
import pytest

from stablesde.stable_law import (
    SpectralAtom,
    StableLaw,
    characteristic_exponent,
    four_atom_law,
    levy_radial_integral,
    radial_closed_form,
    uniform_atom_law,
    validate,
)


def test_scaling_identity(skew_law, rng):
    u = rng.normal(size=(100, 2)) * 3
    rho = np.exp(rng.uniform(-3, 3, size=100))
    g = skew_law.gamma
    lhs = characteristic_exponent(skew_law, rho[:, None] * u) + 1j * rho * (u @ g)
    rhs = rho**1.5 * (characteristic_exponent(skew_law, u) + 1j * (u @ g))
    assert np.max(np.abs(lhs - rhs) / np.abs(rhs)) < 1e-12


@pytest.mark.parametrize("s", [-1e3, -2.5, -1e-3, 1e-3, 0.7, 1.0, 40.0, 1e3])
def test_closed_form_matches_radial_quadrature(s):
    q = levy_radial_integral(1.5, s)
    exact = complex(radial_closed_form(1.5, s))
    assert abs(q.value - exact) / abs(exact) < 1e-10
    assert not q.flagged


@pytest.mark.parametrize("alpha", [1.1, 1.5, 1.9])
def test_radial_quadrature_other_alpha(alpha):
    q = levy_radial_integral(alpha, 3.0)
    assert abs(q.value - complex(radial_closed_form(alpha, 3.0))) < 1e-9 * abs(q.value)


def test_psi_zero_and_hermitian(skew_law):
    assert characteristic_exponent(skew_law, np.zeros(2)) == 0
    u = np.array([0.7, -1.3])
    assert np.isclose(skew_law.psi(-u), np.conj(skew_law.psi(u)))


def test_real_part_nonnegative(skew_law, rng):
    u = rng.normal(size=(500, 2)) * 10
    assert np.all(skew_law.psi(u).real >= 0)


def test_symmetric_law_has_real_exponent():
    law = four_atom_law(1.0)
    assert law.is_symmetric()
    u = np.array([[1.0, 2.0], [-3.0, 0.5]])
    c = -math.gamma(-1.5) * math.cos(0.75 * math.pi)
    expect = c * np.sum(np.abs(u) ** 1.5, axis=1) * 2
    assert np.allclose(law.psi(u), expect, rtol=1e-13)


def test_center_is_linear_term():
    law = four_atom_law(0.3, center=(0.5, -0.1))
    base = four_atom_law(0.3)
    u = np.array([1.5, 2.0])
    assert np.isclose(law.psi(u) - base.psi(u), -1j * (u @ law.gamma))


def test_uniform_atoms_near_isotropic():
    law = uniform_atom_law(64, 2.0)
    r = [float(law.psi(np.array([math.cos(a), math.sin(a)])).real) for a in np.linspace(0, math.pi, 11)]
    assert (max(r) - min(r)) / np.mean(r) < 1e-3


def test_validate_rank():
    assert validate(four_atom_law(1.0)).nondegenerate
    line = StableLaw(1.5, (0.0, 0.0), (SpectralAtom(1.0, (1.0, 0.0)), SpectralAtom(1.0, (-1.0, 0.0))))
    rep = validate(line)
    assert rep.rank == 1 and not rep.nondegenerate and not rep.passed


def test_invalid_inputs():
    with pytest.raises(ValueError):
        StableLaw(2.0, (0.0, 0.0), (SpectralAtom(1.0, (1.0, 0.0)),))
    with pytest.raises(ValueError):
        SpectralAtom(-1.0, (1.0, 0.0))
    with pytest.raises(ValueError):
        characteristic_exponent(four_atom_law(), np.ones(3))


def test_json_round_trip_and_unknown_keys(skew_law):
    text = skew_law.to_json()
    assert StableLaw.from_json(text) == skew_law
    block = json.loads(text)
    block["colour"] = "blue"
    with pytest.raises(ValueError):
        StableLaw.from_dict(block)


def test_directions_must_be_unit():
    with pytest.raises(ValueError):
        SpectralAtom(1.0, (3.0, 4.0))
    assert np.allclose(np.linalg.norm(four_atom_law().directions, axis=1), 1.0)
