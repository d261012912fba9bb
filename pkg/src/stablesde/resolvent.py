"""Time-space resolvent R^lambda, its gradient and the operator constants.

For a field f on [0, T] x torus,

    R^lambda f(s, x) = int_0^inf e^{-lambda t} E f(s + t, x + S_t) dt.

In Fourier space the transition operator multiplies the mode
``exp(i u . x)`` by ``exp(-t psi(u))``, so each mode satisfies a scalar
Laplace-type integral in time.  Treating f as piecewise linear between its
slices, the integral over each slice interval is exact:

    F_i = dt (E1 - E2)(z dt) g_i + dt E2(z dt) g_{i+1} + exp(-z dt) F_{i+1},

with ``z = lambda + psi(u)``, ``E1(x) = (1 - e^{-x}) / x`` and
``E2(x) = (1 - (1 + x) e^{-x}) / x^2``.  No spatial kernel is sampled, so
the short-time singularity of the gradient kernel never has to be resolved
on the lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from scipy import integrate
from scipy.special import gamma as gamma_fn
from scipy.special import roots_legendre

from .heat_kernel import T_MIN, KernelGrid, lp_norm, psi_on_lattice
from .lattice import SpaceTimeField
from .stable_law import StableLaw

__all__ = [
    "ResolventParams",
    "ResidualReport",
    "apply_resolvent",
    "apply_resolvent_gradient",
    "resolvent_and_gradient",
    "resolvent_at_point",
    "constant_N",
    "constant_M",
    "constant_L",
    "time_integral",
    "time_integral_quadrature",
    "spectral_generator",
    "verify_resolvent_equation",
    "conjugate",
]


def conjugate(p: float) -> float:
    """Hoelder conjugate exponent; 1 maps to infinity."""
    if p < 1:
        raise ValueError("exponent must be at least 1")
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class ResolventParams:
    """Resolvent settings.

    ``t_max`` and ``eps0`` only matter for the direct-quadrature oracle
    :func:`resolvent_at_point`; the spectral solver integrates to infinity
    exactly.
    """

    lam: float
    t_max: float | None = None
    eps0: float = 1e-3

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError("lambda must be positive")
        if self.t_max is None:
            object.__setattr__(self, "t_max", math.log(1e10) / self.lam * 1.05)
        if math.exp(-self.lam * self.t_max) >= 1e-10:
            raise ValueError("t_max too short: exp(-lambda t_max) must be below 1e-10")
        if not 0 < self.eps0 <= T_MIN:
            raise ValueError(f"eps0 must lie in (0, {T_MIN}]")


def _law_of(grid) -> StableLaw:
    return grid.law if isinstance(grid, KernelGrid) else grid


def _phi_weights(x: np.ndarray):
    """E1 - E2 and E2 at complex arguments, with a series near zero."""
    small = np.abs(x) < 0.5
    e1 = np.empty_like(x)
    e2 = np.empty_like(x)
    xl = np.where(small, 1.0, x)
    ex = np.exp(-xl)
    e1[:] = -np.expm1(-xl) / xl
    e2[:] = (1.0 - (1.0 + xl) * ex) / xl**2
    if np.any(small):
        xs = x[small]
        s1 = np.zeros_like(xs)
        s2 = np.zeros_like(xs)
        term = np.ones_like(xs)  # (-x)^k / k!
        for k in range(18):
            s1 += term / (k + 1)
            s2 += term / (k + 2)
            term = term * (-xs) / (k + 1)
        e1[small] = s1
        e2[small] = s2
    return e1 - e2, e2


def _resolvent_hat(law: StableLaw, f: SpaceTimeField, lam: float, workers=None):
    """Spectral slices of R^lambda f (rfftn layout), plus the output tail rate."""
    lat = f.lattice
    if law.dim != lat.dim:
        raise ValueError("law and field dimensions differ")
    d = lat.dim
    axes = tuple(range(f.values.ndim - d, f.values.ndim))
    ghat = sfft.rfftn(f.values, axes=axes, workers=workers)
    z = lam + psi_on_lattice(law, lat, real=True)
    if f.is_vector:
        z_b = z[None]
    else:
        z_b = z
    x = z_b * f.dt
    w0, w1 = _phi_weights(x)
    decay = np.exp(-x)
    out = np.empty_like(ghat)
    if f.tail_rate is None:
        out[-1] = 0.0
    else:
        out[-1] = ghat[-1] / (z_b + f.tail_rate)
    for i in range(f.n_slices - 2, -1, -1):
        out[i] = f.dt * (w0 * ghat[i] + w1 * ghat[i + 1]) + decay * out[i + 1]
    return out


def _to_real(lat, spec, workers=None):
    d = lat.dim
    axes = tuple(range(spec.ndim - d, spec.ndim))
    return sfft.irfftn(spec, s=lat.shape, axes=axes, workers=workers)


def apply_resolvent(params: ResolventParams, grid, f: SpaceTimeField, workers=None) -> SpaceTimeField:
    """R^lambda f on the slices of ``f`` (scalar or componentwise vector)."""
    law = _law_of(grid)
    spec = _resolvent_hat(law, f, params.lam, workers)
    vals = _to_real(f.lattice, spec, workers)
    return SpaceTimeField(f.lattice, vals, f.dt, f.tail_rate)


def _gradient_from_hat(lat, spec, workers=None):
    comps = []
    for u in lat.rfrequencies():
        comps.append(_to_real(lat, 1j * u * spec, workers))
    return np.stack(comps, axis=1)


def apply_resolvent_gradient(params: ResolventParams, grid, f: SpaceTimeField, workers=None) -> SpaceTimeField:
    """grad_x R^lambda f for a scalar field, as a vector field."""
    if f.is_vector:
        raise ValueError("gradient is defined for scalar fields")
    law = _law_of(grid)
    spec = _resolvent_hat(law, f, params.lam, workers)
    return SpaceTimeField(f.lattice, _gradient_from_hat(f.lattice, spec, workers), f.dt, f.tail_rate)


def resolvent_and_gradient(params: ResolventParams, grid, f: SpaceTimeField, workers=None):
    """R^lambda f and its gradient from a single spectral pass."""
    law = _law_of(grid)
    spec = _resolvent_hat(law, f, params.lam, workers)
    val = SpaceTimeField(f.lattice, _to_real(f.lattice, spec, workers), f.dt, f.tail_rate)
    grad = SpaceTimeField(f.lattice, _gradient_from_hat(f.lattice, spec, workers), f.dt, f.tail_rate)
    return val, grad


def spectral_generator(law: StableLaw, lattice, values: np.ndarray, workers=None) -> np.ndarray:
    """A applied to lattice samples (last d axes) through the symbol -psi(u)."""
    d = lattice.dim
    axes = tuple(range(values.ndim - d, values.ndim))
    vhat = sfft.rfftn(values, axes=axes, workers=workers)
    sym = -psi_on_lattice(law, lattice, real=True)
    return sfft.irfftn(sym * vhat, s=lattice.shape, axes=axes, workers=workers)


def resolvent_at_point(params: ResolventParams, grid: KernelGrid, func, s: float, x, panels_per_octave: int = 1, order: int = 16):
    """Direct quadrature of R^lambda f(s, x) on R^d.

    The spatial integral at time t uses the scaling law,
    ``int p_t(y - x) f(y) dy = int p_1(z) f(x + t^{1/alpha} z - (t^{1/alpha} - t) gamma) dz``,
    summed over the stored p_1 nodes.  Times below ``eps0`` use the
    translated point mass ``f(s + t, x + gamma t)``, and the time integral
    stops at ``t_max``.

    Returns ``(value, small_time_error_bound)``; the bound is
    ``eps0 * sup|f - f(. + gamma t)|`` approximated by ``eps0 * 2 sup|f|``.
    """
    law = grid.law
    lam = params.lam
    x = np.asarray(x, dtype=float)
    z = grid.lattice.points_array().reshape(-1, law.dim)
    keep = grid.values_p1.ravel() > 1e-16 * grid.peak
    z = z[keep]
    w_space = grid.values_p1.ravel()[keep] * grid.lattice.cell_volume
    gam = law.gamma
    alpha = law.alpha

    def spatial(t):
        scale = t ** (1.0 / alpha)
        pts = x + scale * z - (scale - t) * gam
        return float(np.sum(w_space * func(s + t, pts)))

    gx, gw = roots_legendre(order)
    eps0 = params.eps0
    # point-mass segment
    a, b = 0.0, eps0
    tt = (a + b) / 2 + (b - a) / 2 * gx
    small = sum(
        wk * (b - a) / 2 * math.exp(-lam * tk) * float(func(s + tk, (x + gam * tk)[None])[0])
        for tk, wk in zip(tt, gw)
    )
    # geometric panels on [eps0, t_max]
    edges = [eps0]
    while edges[-1] < params.t_max:
        edges.append(min(edges[-1] * 2 ** (1.0 / panels_per_octave), params.t_max))
    big = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        tt = (a + b) / 2 + (b - a) / 2 * gx
        for tk, wk in zip(tt, gw):
            big += wk * (b - a) / 2 * math.exp(-lam * tk) * spatial(tk)
    sup_f = float(np.max(np.abs(func(s, z[:1] * 0 + x))))
    return small + big, 2 * eps0 * sup_f


# -- constants ------------------------------------------------------------

def time_integral(a: float, theta: float) -> float:
    """int_0^inf exp(-a t) t^{-theta} dt = Gamma(1 - theta) a^{theta - 1}."""
    if theta >= 1:
        raise ValueError(f"time integral diverges: exponent {theta} >= 1")
    return gamma_fn(1.0 - theta) * a ** (theta - 1.0)


def time_integral_quadrature(a: float, theta: float) -> float:
    """Same integral by adaptive quadrature (algebraic weight near zero)."""
    if theta >= 1:
        raise ValueError(f"time integral diverges: exponent {theta} >= 1")
    split = 1.0 / a
    head, _ = integrate.quad(lambda t: math.exp(-a * t), 0.0, split, weight="alg", wvar=(-theta, 0.0), epsabs=0, epsrel=1e-13)
    tail, _ = integrate.quad(lambda t: math.exp(-a * t) * t ** (-theta), split, np.inf, epsabs=0, epsrel=1e-13)
    return head + tail


def _exponents(d: int, alpha: float, p: float):
    ps = conjugate(p)
    return ps, d / (alpha * p)


def constant_N(lam: float, p: float, q: float, grid: KernelGrid, quadrature: bool = False) -> float:
    """N_lambda with sup|R^lambda f| <= N_lambda ||f||_{L^q L^p}."""
    d, alpha = grid.lattice.dim, grid.law.alpha
    if not d / p + alpha / q < alpha:
        raise ValueError("N_lambda needs d/p + alpha/q < alpha")
    ps, theta = _exponents(d, alpha, p)
    qs = conjugate(q)
    integral = (time_integral_quadrature if quadrature else time_integral)(qs * lam, qs * theta)
    return integral ** (1.0 / qs) * lp_norm(grid, "p1", ps)


def constant_M(lam: float, p: float, q: float, grid: KernelGrid, quadrature: bool = False) -> float:
    """M_lambda with sup|grad R^lambda f| <= M_lambda ||f||_{L^q L^p}."""
    d, alpha = grid.lattice.dim, grid.law.alpha
    if not d / p + alpha / q < alpha - 1:
        raise ValueError("M_lambda needs d/p + alpha/q < alpha - 1")
    ps, theta = _exponents(d, alpha, p)
    qs = conjugate(q)
    theta = theta + 1.0 / alpha
    integral = (time_integral_quadrature if quadrature else time_integral)(qs * lam, qs * theta)
    return integral ** (1.0 / qs) * lp_norm(grid, "grad_p1", ps)


def constant_L(lam: float, grid: KernelGrid) -> float:
    """L_lambda = Gamma(1 - 1/alpha) lambda^{1/alpha - 1} ||grad p_1||_1."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    alpha = grid.law.alpha
    return time_integral(lam, 1.0 / alpha) * lp_norm(grid, "grad_p1", 1.0)


# -- resolvent equation -----------------------------------------------------

@dataclass(frozen=True)
class ResidualReport:
    sup_residual: float
    mean_residual: float
    g_norm: float
    relative_sup: float
    differencing_estimate: float
    f_norm: float
    contraction_ok: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _ds(values: np.ndarray, dt: float) -> np.ndarray:
    """Second-order d/ds: central inside, one-sided at the ends."""
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2 * dt)
    out[0] = (-3 * values[0] + 4 * values[1] - values[2]) / (2 * dt)
    out[-1] = (3 * values[-1] - 4 * values[-2] + values[-3]) / (2 * dt)
    return out


def verify_resolvent_equation(params: ResolventParams, grid, g: SpaceTimeField, window: float | None = None) -> ResidualReport:
    """Residual of lambda f - d_s f - A f = g for f = R^lambda g.

    ``A f`` is applied spectrally per slice and ``d_s f`` by second-order
    differences.  Nodes with ``|x|_inf <= window`` (default half the extent)
    and all slices are included.  The differencing estimate is the gap
    between the second-order difference and a fourth-order one.
    """
    law = _law_of(grid)
    if g.is_vector:
        raise ValueError("g must be a scalar field")
    if g.n_slices < 5:
        raise ValueError("need at least five slices")
    lat = g.lattice
    f = apply_resolvent(params, law, g)
    af = spectral_generator(law, lat, f.values)
    dsf = _ds(f.values, g.dt)
    res = params.lam * f.values - dsf - af - g.values
    window = lat.extent / 2 if window is None else window
    mask = np.ones(lat.shape, dtype=bool)
    for c in lat.coords():
        mask = mask & (np.abs(c) <= window)
    inner = res[:, mask]
    # fourth-order central difference on interior slices for an error estimate
    v = f.values
    d4 = (-v[4:] + 8 * v[3:-1] - 8 * v[1:-3] + v[:-4]) / (12 * g.dt)
    diff_est = float(np.max(np.abs(d4 - dsf[2:-2])[:, mask])) if v.shape[0] > 4 else float("nan")
    g_norm = g.sup_norm()
    f_norm = f.sup_norm()
    sup_res = float(np.max(np.abs(inner)))
    return ResidualReport(
        sup_residual=sup_res,
        mean_residual=float(np.mean(np.abs(inner))),
        g_norm=g_norm,
        relative_sup=sup_res / g_norm if g_norm > 0 else 0.0,
        differencing_estimate=diff_est,
        f_norm=f_norm,
        contraction_ok=bool(f_norm <= g_norm / params.lam * (1 + 1e-9) + 1e-300),
    )
