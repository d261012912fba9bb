import math

import numpy as np
import pytest
from scipy import stats

from stablesde.drift import constant_drift, lipschitz_drift, zero_drift
from stablesde.generator import fourier_mode, martingale_residual
from stablesde.heat_kernel import build_kernel
from stablesde.lattice import Lattice
from stablesde.simulate import (
    LaplaceTarget,
    QuarantineError,
    SimConfig,
    atom_scales,
    block_generator,
    energy_distance,
    euler_paths,
    held_bump,
    sample_stable_increment,
    uniqueness_probe,
)


def test_atom_scales_positive(skew_law):
    s = atom_scales(skew_law, 0.01)
    assert s.shape == (3,) and np.all(s > 0)
    assert np.allclose(atom_scales(skew_law, 0.08), s * 8 ** (1 / 1.5))


def test_characteristic_function_within_clt_band(skew_law):
    n, h = 200_000, 0.01
    x = sample_stable_increment(skew_law, h, block_generator(3, 0), n)
    u = np.random.default_rng(9).normal(size=(20, 2)) * 30
    emp = np.exp(1j * x @ u.T).mean(axis=0)
    assert np.max(np.abs(emp - np.exp(-h * skew_law.psi(u)))) < 4 / math.sqrt(n)


def test_increment_mean_is_center(skew_law):
    n, h = 1_000_000, 0.01
    x = sample_stable_increment(skew_law, h, block_generator(4, 0), n)
    se = x.std(axis=0) / math.sqrt(n)
    assert np.all(np.abs(x.mean(axis=0) - h * skew_law.gamma) < 3 * se)


def test_marginal_matches_kernel(ref_law):
    grid = build_kernel(ref_law, 12.8, 512)
    lat = grid.lattice
    dens = grid.values_p1.sum(axis=1) * lat.spacing
    edges = lat.axis + lat.spacing / 2
    cdf = np.cumsum(dens) * lat.spacing
    n = 100_000
    x1 = sample_stable_increment(ref_law, 1.0, block_generator(5, 0), n)[:, 0]
    ecdf = np.searchsorted(np.sort(x1), edges, side="right") / n
    ks = np.max(np.abs(ecdf - cdf))
    assert ks < 1.628 / math.sqrt(n)


def test_block_streams_are_reproducible():
    a = block_generator(11, 2).standard_normal(5)
    b = block_generator(11, 2).standard_normal(5)
    c = block_generator(11, 3).standard_normal(5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_thread_count_does_not_change_results(ref_law, lat):
    cfg = SimConfig(h=0.01, T_sim=0.5, paths=3000, seed=17, block_size=700)
    d = lipschitz_drift(lat, 0.5, 0.5, 0.05)
    tgt = held_bump((0.0, 0.0), 0.3, 0.5, 4.0)
    runs = [euler_paths(cfg, ref_law, d, checkpoints=(0.25,), lam=2.0, target=tgt, threads=t) for t in (1, 3)]
    assert np.array_equal(runs[0].laplace, runs[1].laplace)
    assert np.array_equal(runs[0].checkpoints[0.25], runs[1].checkpoints[0.25])
    assert np.array_equal(runs[0].abs_drift, runs[1].abs_drift)


def test_laplace_of_one_is_deterministic(ref_law):
    cfg = SimConfig(h=0.001, T_sim=1.0, paths=50, seed=1)
    tgt = LaplaceTarget(lambda t, x: np.ones(x.shape[0]), 1.0)
    ens = euler_paths(cfg, ref_law, None, lam=3.0, target=tgt)
    assert np.allclose(ens.laplace, (1 - math.exp(-3.0)) / 3.0, rtol=1e-12, atol=0)
    assert math.isclose(ens.remainder, math.exp(-3.0) / 3.0)


def test_mean_position_drifts_with_center_and_drift(skew_law, lat):
    cfg = SimConfig(h=0.005, T_sim=0.5, paths=100_000, seed=23, start_x=(0.1, -0.1))
    d = constant_drift(lat, (0.4, 0.2), 1.0, 0.05)
    ens = euler_paths(cfg, skew_law, d, checkpoints=(0.5,))
    expect = np.array([0.1, -0.1]) + 0.5 * (skew_law.gamma + np.array([0.4, 0.2]))
    assert np.all(np.abs(ens.checkpoint_mean(0.5) - expect) < 3 * ens.checkpoint_se(0.5))
    assert np.allclose(ens.abs_drift, 0.5 * math.hypot(0.4, 0.2))


def test_step_halving_within_noise(ref_law, lat):
    d = lipschitz_drift(lat, 1.0, 0.5, 0.05)
    tgt = held_bump((0.1, 0.0), 0.3, 0.5, 4.0)
    est = []
    for h in (0.002, 0.001):
        ens = euler_paths(SimConfig(h=h, T_sim=1.0, paths=20_000, seed=29), ref_law, d, lam=2.0, target=tgt)
        est.append((ens.laplace_mean(), ens.laplace_se()))
    (a, sa), (b, sb) = est
    assert abs(a - b) < 3 * math.hypot(sa, sb)


def test_martingale_residual_is_centered(ref_law, lat):
    k = math.pi / lat.extent
    f = fourier_mode((2 * k, k), law=ref_law)
    d = lipschitz_drift(lat, 0.5, 1.0, 0.05)
    cfg = SimConfig(h=0.001, T_sim=0.5, paths=20_000, seed=31)
    mean, se = martingale_residual(ref_law, d, f, cfg, 0.1, 0.5)
    assert abs(mean) < 3 * se + 1e-3


def test_quarantine_limits(ref_law):
    cfg = SimConfig(h=0.01, T_sim=0.5, paths=1000, seed=2, max_abs=0.05)
    with pytest.raises(QuarantineError):
        euler_paths(cfg, ref_law, None, checkpoints=(0.5,))


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(h=0.02, T_sim=1.0, paths=10, seed=0)
    with pytest.raises(ValueError):
        SimConfig(h=0.001, T_sim=1.0005001, paths=10, seed=0)
    with pytest.raises(ValueError):
        SimConfig(h=0.001, T_sim=1.0, paths=0, seed=0)
    with pytest.raises(ValueError):
        SimConfig(h=0.001, T_sim=1.0, paths=1, seed=-1)


def test_checkpoint_must_be_step_time(ref_law):
    cfg = SimConfig(h=0.01, T_sim=0.5, paths=10, seed=0)
    with pytest.raises(ValueError):
        euler_paths(cfg, ref_law, None, checkpoints=(0.255,))


def test_energy_distance_properties(rng):
    x = rng.normal(size=(500, 2))
    assert abs(energy_distance(x, x)) < 1e-12
    assert energy_distance(x, x + 1.0) > 0.5


def test_zero_drift_levels_are_same_law(ref_law):
    lat = Lattice(2, 2.0, 128)
    cfg = SimConfig(h=0.005, T_sim=0.25, paths=5000, seed=41)
    rep = uniqueness_probe(cfg, ref_law, zero_drift(lat, 0.25, 0.05), (4, 8), 0.25)
    for part in ("first", "second"):
        assert rep[part]["ks_max"] < rep[part]["ks_critical_5pct"]
