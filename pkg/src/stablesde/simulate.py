"""Monte Carlo for dX = dS + b(s + t, X) dt with stable noise.

Increments of S are sums over spectral atoms of totally skewed
one-dimensional stable variables drawn with the Chambers-Mallows-Stuck
transform.  Paths live on R^d; drift and observables are periodic and are
evaluated at the position wrapped onto the lattice torus, which makes the
simulated process the one whose resolvent the spectral series computes.

Paths are processed in fixed-size blocks.  Block ``k`` draws from
``Philox(key=(seed, k))``, so results do not depend on how many threads
run the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import ndimage, stats
from scipy.spatial.distance import cdist
from scipy.special import gamma as gamma_fn

from .drift import DriftField, MollifiedDrift, mollify
from .lattice import Lattice, SpaceTimeField
from .stable_law import StableLaw

__all__ = [
    "SimConfig",
    "LaplaceTarget",
    "held_bump",
    "PathEnsemble",
    "QuarantineError",
    "atom_scales",
    "sample_stable_increment",
    "euler_paths",
    "mc_laplace_vs_series",
    "uniqueness_probe",
    "energy_distance",
    "block_generator",
]


class QuarantineError(RuntimeError):
    """More than the allowed fraction of paths left the representable range."""


@dataclass(frozen=True)
class SimConfig:
    """Euler scheme settings.

    ``start`` is ``(s, x)``: the initial time offset of the drift and the
    initial position.
    """

    h: float
    T_sim: float
    paths: int
    seed: int
    start_s: float = 0.0
    start_x: tuple = (0.0, 0.0)
    block_size: int = 8192
    max_abs: float = 1e12
    max_quarantine: float = 1e-3

    def __post_init__(self):
        if not 0 < self.h <= 0.01:
            raise ValueError("step h must lie in (0, 0.01]")
        if self.paths < 1:
            raise ValueError("need at least one path")
        if self.T_sim <= 0:
            raise ValueError("T_sim must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        steps = self.T_sim / self.h
        if abs(steps - round(steps)) > 1e-9 * max(steps, 1.0):
            raise ValueError("T_sim must be a multiple of h")
        object.__setattr__(self, "start_x", tuple(float(v) for v in self.start_x))

    @property
    def n_steps(self) -> int:
        return int(round(self.T_sim / self.h))


@dataclass(frozen=True)
class LaplaceTarget:
    """An observable g(t, x) for the Laplace functional.

    ``sup``, ``decay`` and ``decay_start`` bound the observable through
    ``|g(t, x)| <= sup exp(-decay max(t - decay_start, 0))``; the bound feeds
    the truncation remainder.
    """

    func: Callable
    sup: float
    decay: float = 0.0
    decay_start: float = 0.0

    def remainder(self, lam: float, s: float, T: float) -> float:
        """Bound on int_T^inf e^{-lam t} |g(s + t, X_t)| dt for T >= decay_start - s."""
        if s + T < self.decay_start:
            raise ValueError("T_sim ends before the observable starts to decay")
        rate = lam + self.decay
        return self.sup * math.exp(-self.decay * (s + T - self.decay_start) - lam * T) / rate


def held_bump(center, width: float, hold: float, decay: float) -> LaplaceTarget:
    """Gaussian bump held on [0, hold], then decaying as exp(-decay (t - hold)).

    The time profile is piecewise linear up to ``hold`` and matches the
    exponential tail of a lattice field, so the series sees it exactly.
    """
    c = np.asarray(center, dtype=float)

    def func(t, x):
        amp = math.exp(-decay * max(t - hold, 0.0))
        return amp * np.exp(-np.sum((x - c) ** 2, axis=-1) / (2 * width * width))

    return LaplaceTarget(func, 1.0, decay, hold)


def atom_scales(law: StableLaw, h: float) -> np.ndarray:
    """Scale sigma_j of the skewed stable variable for each atom over time h.

    The jump part along atom j has log characteristic function
    ``h w_j Gamma(-alpha) |s|^alpha exp(-i sign(s) pi alpha / 2)``, which is
    ``-sigma^alpha |s|^alpha (1 - i sign(s) tan(pi alpha / 2))`` with
    ``sigma^alpha = -h w_j Gamma(-alpha) cos(pi alpha / 2)``: a stable law
    with skewness 1 and zero mean.
    """
    a = law.alpha
    c = -gamma_fn(-a) * math.cos(math.pi * a / 2)
    return (h * law.weights * c) ** (1.0 / a)


def _cms_skewed(alpha: float, V: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Standard stable variables with skewness 1 from uniform V and exponential W."""
    tan = math.tan(math.pi * alpha / 2)
    B = math.atan(tan) / alpha
    S = (1.0 + tan * tan) ** (1.0 / (2 * alpha))
    aVB = alpha * (V + B)
    return S * np.sin(aVB) / np.cos(V) ** (1.0 / alpha) * (np.cos(V - aVB) / W) ** ((1.0 - alpha) / alpha)


def sample_stable_increment(law: StableLaw, h: float, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Draw ``size`` independent copies of S_h, shape (size, d)."""
    if h <= 0:
        raise ValueError("h must be positive")
    sig = atom_scales(law, h)
    J = sig.size
    V = rng.uniform(-math.pi / 2, math.pi / 2, size=(J, size))
    W = rng.standard_exponential(size=(J, size))
    Z = _cms_skewed(law.alpha, V, W) * sig[:, None]
    return Z.T @ law.directions + h * law.gamma


def block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[int(seed), int(block)]))


class _DriftEvaluator:
    """Cubic periodic spline of a drift field, linear in time between slices."""

    def __init__(self, drift, order: int = 3):
        self.active = drift is not None and not drift.is_zero()
        if not self.active:
            return
        total = drift.total()
        self.lattice = total.lattice
        self.dt = total.dt
        self.horizon = total.horizon
        self.order = order
        vals = total.values
        self.constant_in_time = bool(np.all(vals == vals[:1]))
        src = vals[:1] if self.constant_in_time else vals
        self.coeffs = [
            [ndimage.spline_filter(c, order=order, mode="grid-wrap") for c in sl] for sl in src
        ]

    def _at_slice(self, k: int, idx: np.ndarray) -> np.ndarray:
        return np.stack(
            [ndimage.map_coordinates(c, idx, order=self.order, mode="grid-wrap", prefilter=False) for c in self.coeffs[k]],
            axis=-1,
        )

    def __call__(self, t: float, x: np.ndarray) -> Optional[np.ndarray]:
        if not self.active or t >= self.horizon - 1e-12:
            return None
        lat = self.lattice
        idx = ((lat.wrap(x) + lat.extent) / lat.spacing).T
        if self.constant_in_time:
            return self._at_slice(0, idx)
        pos = t / self.dt
        i = min(int(math.floor(pos)), len(self.coeffs) - 2)
        frac = pos - i
        out = (1 - frac) * self._at_slice(i, idx)
        if frac > 0:
            out = out + frac * self._at_slice(i + 1, idx)
        return out


@dataclass
class PathEnsemble:
    """Per-path results of an Euler run (concatenated over blocks in order)."""

    config: SimConfig
    checkpoints: dict
    laplace: Optional[np.ndarray]
    abs_drift: np.ndarray
    martingale: Optional[np.ndarray]
    quarantined: np.ndarray
    remainder: float = 0.0
    lam: Optional[float] = None
    provenance: dict = field(default_factory=dict)

    @property
    def n_quarantined(self) -> int:
        return int(self.quarantined.sum())

    def _good(self, arr):
        return arr[~self.quarantined]

    def laplace_mean(self) -> float:
        return float(np.sum(self._good(self.laplace)) / (~self.quarantined).sum())

    def laplace_se(self) -> float:
        vals = self._good(self.laplace)
        return float(np.std(vals, ddof=1) / math.sqrt(vals.size))

    def checkpoint_mean(self, t: float) -> np.ndarray:
        return np.mean(self._good(self.checkpoints[_key(t)]), axis=0)

    def checkpoint_se(self, t: float) -> np.ndarray:
        v = self._good(self.checkpoints[_key(t)])
        return np.std(v, axis=0, ddof=1) / math.sqrt(v.shape[0])

    def marginal(self, t: float) -> np.ndarray:
        return self._good(self.checkpoints[_key(t)])


def _key(t: float) -> float:
    return round(float(t), 12)


def _exp_weights(x: float):
    if abs(x) < 1e-4:
        e1 = 1 - x / 2 + x * x / 6
        e2 = 0.5 - x / 3 + x * x / 8
    else:
        e1 = -math.expm1(-x) / x
        e2 = (1 - (1 + x) * math.exp(-x)) / (x * x)
    return e1 - e2, e2


def _run_block(block, n, config, law, drift_eval, lattice, steps, check_steps, lam, target, martingale, sig):
    rng = block_generator(config.seed, block)
    d = law.dim
    h = config.h
    s0 = config.start_s
    x = np.tile(np.asarray(config.start_x, dtype=float), (n, 1))
    bad = np.zeros(n, dtype=bool)
    abs_b = np.zeros(n)
    checks = {}
    lap = None
    if lam is not None:
        lap = np.zeros(n)
        w_a, w_b = _exp_weights(lam * h)
        w_a *= h
        w_b *= h
    wrap = lattice.wrap if lattice is not None else (lambda v: v)
    g_prev = target.func(s0, wrap(x)) if lam is not None else None
    mart = None
    if martingale is not None:
        f, t1, t2 = martingale
        i1, i2 = int(round(t1 / h)), int(round(t2 / h))
        mart = np.zeros(n)
    J = sig.size
    for i in range(steps):
        t = i * h
        if i in check_steps:
            checks[check_steps[i]] = x.copy()
        b = drift_eval(s0 + t, x)
        if mart is not None:
            if i == i1:
                mart -= f.value(x)
            if i1 <= i < i2:
                gen = f.generator(x) if f.generator is not None else _quadrature_generator(law, f, x)
                lf = gen
                if b is not None:
                    lf = lf + np.sum(b * f.gradient(x), axis=-1)
                mart -= h * lf
            if i == i2:
                mart += f.value(x)
        V = rng.uniform(-math.pi / 2, math.pi / 2, size=(J, n))
        W = rng.standard_exponential(size=(J, n))
        Z = _cms_skewed(law.alpha, V, W) * sig[:, None]
        dx = Z.T @ law.directions + h * law.gamma
        if b is not None:
            dx += h * b
            abs_b += h * np.sqrt(np.sum(b * b, axis=-1))
        dx[bad] = 0.0
        x = x + dx
        newly = ~np.all(np.isfinite(x), axis=1) | (np.max(np.abs(x), axis=1) > config.max_abs)
        if np.any(newly & ~bad):
            x[newly] = np.where(np.isfinite(x[newly]), x[newly], 0.0)
            bad |= newly
        if lap is not None:
            g_next = target.func(s0 + t + h, wrap(x))
            lap += math.exp(-lam * t) * (w_a * g_prev + w_b * g_next)
            g_prev = g_next
    if steps in check_steps:
        checks[check_steps[steps]] = x.copy()
    if mart is not None and i2 == steps:
        mart += f.value(x)
    return checks, lap, abs_b, mart, bad


def _quadrature_generator(law, f, x):
    from .generator import apply_A

    return apply_A(law, f, x).value


def euler_paths(
    config: SimConfig,
    law: StableLaw,
    drift=None,
    checkpoints=(),
    lam: Optional[float] = None,
    target: Optional[LaplaceTarget] = None,
    martingale=None,
    threads: int = 1,
    lattice: Optional[Lattice] = None,
) -> PathEnsemble:
    """Run the Euler scheme X_{t+h} = X_t + dS + h b(s + t, X_t).

    Parameters
    ----------
    drift : DriftField or MollifiedDrift, optional
        Evaluated at the wrapped position by a periodic cubic spline.  Raw
        singular drifts should be mollified first; this function does not
        check.
    checkpoints : sequence of float
        Times (multiples of h, at most T_sim) at which to store positions.
    lam, target : float, LaplaceTarget
        When given, accumulate int_0^T_sim e^{-lam t} g(s + t, X_t) dt with
        exact exponential weights on each step (g linear across the step).
    martingale : (TestFunction, t1, t2), optional
        Accumulate f(X_t2) - f(X_t1) - sum h L f(X_ti) over t1 <= t_i < t2.
    threads : int
        Worker threads; the output does not depend on it.
    lattice : Lattice, optional
        Torus used to wrap positions for ``target``; defaults to the drift's.
    """
    if law.dim != len(config.start_x):
        raise ValueError("start position has the wrong dimension")
    if (lam is None) != (target is None):
        raise ValueError("lam and target must be given together")
    steps = config.n_steps
    check_steps = {}
    for t in checkpoints:
        k = int(round(t / config.h))
        if abs(k * config.h - t) > 1e-9 or k > steps:
            raise ValueError(f"checkpoint {t} is not a step time within the horizon")
        check_steps[k] = _key(t)
    if martingale is not None:
        _, t1, t2 = martingale
        if not 0 <= t1 < t2 <= config.T_sim:
            raise ValueError("martingale window must satisfy 0 <= t1 < t2 <= T_sim")
    drift_eval = _DriftEvaluator(drift)
    if lattice is None and drift is not None:
        lattice = drift.lattice
    sig = atom_scales(law, config.h)
    n_blocks = -(-config.paths // config.block_size)
    sizes = [min(config.block_size, config.paths - k * config.block_size) for k in range(n_blocks)]

    def work(k):
        return _run_block(k, sizes[k], config, law, drift_eval, lattice, steps, check_steps, lam, target, martingale, sig)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(n_blocks)))
    else:
        results = [work(k) for k in range(n_blocks)]
    checks = {key: np.concatenate([r[0][key] for r in results]) for key in check_steps.values()}
    lap = np.concatenate([r[1] for r in results]) if lam is not None else None
    abs_b = np.concatenate([r[2] for r in results])
    mart = np.concatenate([r[3] for r in results]) if martingale is not None else None
    bad = np.concatenate([r[4] for r in results])
    frac = bad.mean()
    if frac > config.max_quarantine:
        raise QuarantineError(f"{bad.sum()} of {bad.size} paths left the representable range")
    remainder = target.remainder(lam, config.start_s, config.T_sim) if lam is not None else 0.0
    return PathEnsemble(
        config=config,
        checkpoints=checks,
        laplace=lap,
        abs_drift=abs_b,
        martingale=mart,
        quarantined=bad,
        remainder=remainder,
        lam=lam,
        provenance={"seed": int(config.seed), "block_size": config.block_size, "blocks": n_blocks, "rng": "Philox(key=(seed, block))"},
    )


def mc_laplace_vs_series(
    config: SimConfig,
    law: StableLaw,
    drift,
    grid,
    params,
    target: LaplaceTarget,
    level: Optional[int] = None,
    tol: float = 1e-6,
    threads: int = 1,
    checkpoints=(),
    return_ensemble: bool = False,
):
    """Monte Carlo Laplace functional against the resolvent series at (s, x).

    With ``level`` the drift is mollified first and both sides use b^(n).
    ``x`` must be a lattice node so the series value is read without
    interpolation.  With ``return_ensemble`` the path ensemble is returned
    as well, as ``(report, ensemble)``.
    """
    from .series import evaluate_series

    if level is not None:
        drift = mollify(drift, level)
    lat = drift.lattice
    g = SpaceTimeField.from_function(lat, target.func, drift.horizon, drift.dt, tail_rate=target.decay)
    series = evaluate_series(drift, params, grid, g, tol=tol, keep_terms=False)
    s0 = config.start_s
    i = int(round(s0 / drift.dt))
    if abs(i * drift.dt - s0) > 1e-12:
        raise ValueError("start time must be a slice time")
    idx = np.rint((np.asarray(config.start_x) + lat.extent) / lat.spacing).astype(int)
    if np.max(np.abs(lat.axis[idx] - np.asarray(config.start_x))) > 1e-12:
        raise ValueError("start position must be a lattice node")
    series_val = float(series.partial_sum.values[(i,) + tuple(idx)])
    ens = euler_paths(
        config, law, drift, checkpoints=checkpoints, lam=params.lam, target=target, threads=threads, lattice=lat
    )
    mc = ens.laplace_mean()
    se = ens.laplace_se()
    diff = mc - series_val
    budget = 3 * se + series.tail_bound + ens.remainder
    report = {
        "lambda": params.lam,
        "level": level,
        "mc": mc,
        "mc_se": se,
        "series": series_val,
        "tail_bound": series.tail_bound,
        "remainder": ens.remainder,
        "z": diff / se if se > 0 else math.inf,
        "kappa": series.kappa,
        "terms": series.order + 1,
        "passed": bool(abs(diff) <= budget),
        "quarantined": ens.n_quarantined,
    }
    return (report, ens) if return_ensemble else report


def energy_distance(x: np.ndarray, y: np.ndarray) -> float:
    """Energy distance 2E|X-Y| - E|X-X'| - E|Y-Y'| from two samples in R^d."""
    xy = cdist(x, y).mean()
    xx = cdist(x, x).mean()
    yy = cdist(y, y).mean()
    return float(2 * xy - xx - yy)


def _derived_seed(seed: int, tag: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(tag)]).generate_state(1, np.uint64)[0])


def _pair_distance(a: np.ndarray, b: np.ndarray, energy_sample: int) -> dict:
    ks = [stats.ks_2samp(a[:, k], b[:, k]) for k in range(a.shape[1])]
    n, m = a.shape[0], b.shape[0]
    crit = 1.358 * math.sqrt((n + m) / (n * m))
    return {
        "ks": [float(r.statistic) for r in ks],
        "ks_pvalue": [float(r.pvalue) for r in ks],
        "ks_max": float(max(r.statistic for r in ks)),
        "ks_critical_5pct": crit,
        "energy": energy_distance(a[:energy_sample], b[:energy_sample]),
    }


def uniqueness_probe(
    config: SimConfig,
    law: StableLaw,
    drift: DriftField,
    levels: tuple,
    checkpoint: float,
    threads: int = 1,
    energy_sample: int = 2000,
) -> dict:
    """Distances between X_t marginals under two mollification levels.

    Runs levels (n1, n2) and (2 n1, 2 n2).  Every level gets its own seed
    derived from ``config.seed`` and the level, so the two samples in each
    comparison are independent.
    """
    n1, n2 = levels
    if not n1 < n2:
        raise ValueError("levels must satisfy n1 < n2")
    samples = {}
    for n in sorted({n1, n2, 2 * n1, 2 * n2}):
        cfg = _with_seed(config, _derived_seed(config.seed, n))
        ens = euler_paths(cfg, law, mollify(drift, n), checkpoints=(checkpoint,), threads=threads)
        samples[n] = ens.marginal(checkpoint)
    first = _pair_distance(samples[n1], samples[n2], energy_sample)
    second = _pair_distance(samples[2 * n1], samples[2 * n2], energy_sample)
    return {
        "levels": [n1, n2],
        "checkpoint": checkpoint,
        "first": first,
        "second": second,
        "decreasing": bool(second["ks_max"] < first["ks_max"] and second["energy"] < first["energy"]),
    }


def same_law_control(config: SimConfig, law: StableLaw, drift, level: Optional[int], checkpoint: float, threads: int = 1) -> dict:
    """Two independent ensembles of the same law; KS should not reject."""
    d = mollify(drift, level) if level is not None else drift
    out = []
    for tag in (1, 2):
        cfg = _with_seed(config, _derived_seed(config.seed, 10_000 + tag))
        out.append(euler_paths(cfg, law, d, checkpoints=(checkpoint,), threads=threads).marginal(checkpoint))
    rep = _pair_distance(out[0], out[1], 2000)
    rep["passed"] = bool(rep["ks_max"] < rep["ks_critical_5pct"])
    return rep


def _with_seed(config: SimConfig, seed: int) -> SimConfig:
    from dataclasses import replace

    return replace(config, seed=seed)


__all__ += ["same_law_control"]
