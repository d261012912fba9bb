"""The nonlocal generator A and the drifted generator A + b . grad.

For a stable law with atoms ``(w_j, xi_j)``

    A f(x) = sum_j w_j int_0^inf [f(x + r xi_j) - f(x) - r xi_j . grad f(x)] r^{-1-alpha} dr
             + gamma . grad f(x).

Each radial integral is split at ``r = 1``.  On [0, 1] the compensated
difference is divided by ``r^2`` and integrated against the weight
``r^{1-alpha}`` (Gauss-Jacobi on the first panel, Gauss-Legendre after).
On [1, inf) the compensator integrates in closed form and the remaining
``int f(x + r xi) r^{-1-alpha} dr`` is handled according to what the test
function declares about itself: Fourier modes use the Fourier quadrature
rule, functions with bounded support stop at the support, and anything else
is truncated where the tail bound ``|f| R^{-alpha} / alpha`` falls below
the tolerance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.special import roots_jacobi, roots_legendre

from .stable_law import StableLaw, characteristic_exponent

__all__ = [
    "TestFunction",
    "AResult",
    "QuadratureError",
    "apply_A",
    "apply_L",
    "fourier_mode",
    "gaussian_bump",
    "affine_function",
    "martingale_residual",
]


class QuadratureError(RuntimeError):
    """Adaptive radial quadrature did not reach its tolerance."""


@dataclass(frozen=True)
class TestFunction:
    """A C_b^2 test function with its derivatives and a tail description.

    The callables take points of shape (..., d) and return arrays of shape
    (...), (..., d) and (..., d, d).

    Parameters
    ----------
    kind : {"generic", "fourier", "compact", "affine"}
        ``fourier`` functions are ``Re(c exp(i u . x))`` with ``wavevector``
        u and ``coefficient`` c.  ``compact`` functions vanish (to double
        precision) outside the ball ``support = (center, radius)``.
        ``affine`` functions have zero Hessian.
    length_scale : float
        Variation scale used to size quadrature panels.
    generator : callable, optional
        Exact ``A f`` when known, used by path functionals instead of the
        quadrature.
    """

    __test__ = False  # keep pytest from collecting this class

    value: Callable
    gradient: Callable
    hessian: Callable
    sup_f: float
    sup_grad: float
    sup_hess: float
    kind: str = "generic"
    length_scale: float = 1.0
    wavevector: Optional[np.ndarray] = None
    coefficient: complex = 1.0
    support: Optional[tuple] = None
    generator: Optional[Callable] = field(default=None, compare=False)

    def __call__(self, x):
        return self.value(x)

    def check_gradient(self, points, rel_tol: float = 1e-6, step: float = 1e-5) -> bool:
        """Central differences of ``value`` against ``gradient``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        grad = self.gradient(pts)
        fd = np.empty_like(grad)
        for k in range(pts.shape[-1]):
            e = np.zeros(pts.shape[-1])
            e[k] = step
            fd[..., k] = (self.value(pts + e) - self.value(pts - e)) / (2 * step)
        scale = max(self.sup_grad, 1e-300)
        return bool(np.max(np.abs(fd - grad)) <= rel_tol * scale)


def fourier_mode(u, a: float = 1.0, b: float = 0.0, law: StableLaw | None = None) -> TestFunction:
    """f(x) = a cos(u . x) + b sin(u . x).

    When ``law`` is given the exact generator ``Re(c (-psi(u)) e^{iu.x})`` is
    attached, with ``c = a - i b``.
    """
    u = np.asarray(u, dtype=float)
    c = complex(a, -b)
    k = float(np.linalg.norm(u))

    def value(x):
        return np.real(c * np.exp(1j * (np.asarray(x) @ u)))

    def gradient(x):
        ph = c * np.exp(1j * (np.asarray(x) @ u))
        return np.real(1j * ph)[..., None] * u

    def hessian(x):
        ph = c * np.exp(1j * (np.asarray(x) @ u))
        return -np.real(ph)[..., None, None] * np.outer(u, u)

    gen = None
    if law is not None:
        psi_u = complex(characteristic_exponent(law, u))

        def gen(x):
            return np.real(c * (-psi_u) * np.exp(1j * (np.asarray(x) @ u)))

    amp = abs(c)
    return TestFunction(
        value, gradient, hessian, amp, amp * k, amp * k * k,
        kind="fourier", length_scale=1.0 / max(k, 1e-12), wavevector=u, coefficient=c, generator=gen,
    )


def gaussian_bump(center, width: float, height: float = 1.0) -> TestFunction:
    """height exp(-|x - center|^2 / (2 width^2)), treated as compactly supported."""
    center = np.asarray(center, dtype=float)
    radius = width * math.sqrt(2 * 40.0)  # exp(-40) is below double-precision roundoff of height

    def value(x):
        z = np.asarray(x) - center
        return height * np.exp(-np.sum(z * z, axis=-1) / (2 * width**2))

    def gradient(x):
        z = np.asarray(x) - center
        return -(value(x) / width**2)[..., None] * z

    def hessian(x):
        z = np.asarray(x) - center
        v = value(x)[..., None, None]
        eye = np.eye(center.size)
        return v * (np.einsum("...i,...j->...ij", z, z) / width**4 - eye / width**2)

    return TestFunction(
        value, gradient, hessian, height, height / (width * math.sqrt(math.e)), height / width**2,
        kind="compact", length_scale=width, support=(center, radius),
    )


def affine_function(a, c0: float = 0.0) -> TestFunction:
    """f(x) = a . x + c0 (unbounded, so only its exact generator is meaningful)."""
    a = np.asarray(a, dtype=float)

    def value(x):
        return np.asarray(x) @ a + c0

    def gradient(x):
        return np.broadcast_to(a, np.shape(x)).copy()

    def hessian(x):
        return np.zeros(np.shape(x)[:-1] + (a.size, a.size))

    return TestFunction(value, gradient, hessian, math.inf, float(np.linalg.norm(a)), 0.0, kind="affine")


@dataclass(frozen=True)
class AResult:
    value: np.ndarray
    error: np.ndarray
    flagged: bool


@lru_cache(maxsize=32)
def _jacobi_rule(n: int, alpha: float):
    # int_0^1 g(r) r^{1-alpha} dr ~ sum W_i g(r_i)
    x, w = roots_jacobi(n, 0.0, 1.0 - alpha)
    return (x + 1) / 2, w * 0.5 ** (2.0 - alpha)


@lru_cache(maxsize=32)
def _legendre_rule(n: int):
    x, w = roots_legendre(n)
    return (x + 1) / 2, w / 2


def _panel_edges(a: float, b: float, width: float) -> np.ndarray:
    count = max(1, int(math.ceil((b - a) / width)))
    return np.linspace(a, b, count + 1)


def _compensated(f: TestFunction, x, xi, r, fx, dfx):
    pts = x[..., None, :] + r[..., None] * xi
    return f.value(pts) - fx[..., None] - r * dfx[..., None]


def _near_integral(f: TestFunction, x, xi, alpha, fx, dfx, panels: int, order: int):
    """int_0^1 F(r) r^{-1-alpha} dr with F the compensated difference."""
    edges = np.linspace(0.0, 1.0, panels + 1)
    r0 = edges[1]
    jr, jw = _jacobi_rule(order, alpha)
    r = r0 * jr
    F = _compensated(f, x, xi, r, fx, dfx)
    total = (F / r**2) @ jw * r0 ** (2.0 - alpha)
    if panels > 1:
        gr, gw = _legendre_rule(order)
        a = edges[1:-1, None]
        width = np.diff(edges)[1:, None]
        rr = (a + width * gr).ravel()
        ww = (width * gw * 1.0).ravel() * rr ** (-1.0 - alpha)
        F = _compensated(f, x, xi, rr, fx, dfx)
        total = total + F @ ww
    return total


def _fourier_tail(f: TestFunction, x, xi, alpha):
    """int_1^inf f(x + r xi) r^{-1-alpha} dr for a Fourier mode."""
    s = float(f.wavevector @ xi)
    if s == 0.0:
        t_val = 1.0 / alpha
    else:
        a = abs(s)
        opts = dict(epsabs=1e-15, limlst=200)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            cs, _ = integrate.quad(lambda r: r ** (-1.0 - alpha), 1.0, np.inf, weight="cos", wvar=a, **opts)
            sn, _ = integrate.quad(lambda r: r ** (-1.0 - alpha), 1.0, np.inf, weight="sin", wvar=a, **opts)
        t_val = complex(cs, sn if s > 0 else -sn)
    phase = f.coefficient * np.exp(1j * (x @ f.wavevector))
    return np.real(phase * t_val)


def _panel_tail(f: TestFunction, x, xi, alpha, R: np.ndarray, width: float, order: int):
    """int_1^R f(x + r xi) r^{-1-alpha} dr on panels of the given width."""
    gr, gw = _legendre_rule(order)
    out = np.zeros(x.shape[:-1])
    flat_x = x.reshape(-1, x.shape[-1])
    flat_R = np.broadcast_to(R, x.shape[:-1]).ravel()
    flat_out = out.reshape(-1)
    for k, (xk, Rk) in enumerate(zip(flat_x, flat_R)):
        if Rk <= 1.0:
            continue
        edges = _panel_edges(1.0, float(Rk), width)
        a = edges[:-1, None]
        w = np.diff(edges)[:, None]
        rr = (a + w * gr).ravel()
        ww = (w * gw).ravel() * rr ** (-1.0 - alpha)
        vals = f.value(xk + rr[:, None] * xi)
        flat_out[k] = vals @ ww
    return out


def _tail_radius(f: TestFunction, x, xi, alpha: float, tol: float) -> np.ndarray:
    if f.kind == "compact":
        center, radius = f.support
        dist = np.linalg.norm(x - center, axis=-1)
        return dist + radius
    return np.full(x.shape[:-1], (f.sup_f / (alpha * tol)) ** (1.0 / alpha))


def _atom_tail(f, x, xi, alpha, fx, dfx, order, tol, max_panels):
    """int_1^inf of the compensated integrand along one atom direction."""
    if f.kind == "fourier":
        far = _fourier_tail(f, x, xi, alpha)
    else:
        R = _tail_radius(f, x, xi, alpha, tol)
        width = max(f.length_scale, 1e-12) / 2
        if np.max(R) / width > max_panels:
            raise QuadratureError(
                f"tail up to R = {np.max(R):.3g} needs more than {max_panels} panels; "
                "declare the function's support or Fourier structure"
            )
        far = _panel_tail(f, x, xi, alpha, R, width, order)
    return far - fx / alpha - dfx / (alpha - 1.0)


def apply_A(
    law: StableLaw,
    f: TestFunction,
    x,
    tol: float = 1e-10,
    order: int = 12,
    max_panels: int = 200_000,
    raise_on_flag: bool = False,
) -> AResult:
    """Apply the jump generator plus the center term to ``f`` at points ``x``.

    The near-origin panels are refined until two successive levels agree to
    ``tol`` (absolute, relative to the C^2 size of f).  The error field is the
    difference between the last two levels.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != law.dim:
        raise ValueError("points must have the law's dimension on the last axis")
    grad = f.gradient(x)
    drift_term = grad @ law.gamma
    if f.kind == "affine":
        zero = np.zeros(x.shape[:-1])
        return AResult(drift_term, zero, False)
    fx = f.value(x)
    alpha = law.alpha
    scale = max(f.sup_f, f.sup_grad, f.sup_hess, 1e-300)
    panels = max(1, int(math.ceil(1.0 / max(f.length_scale, 1e-12))))
    tails = [
        _atom_tail(f, x, xi, alpha, fx, grad @ xi, order, tol, max_panels) for xi in law.directions
    ]
    prev = None
    flagged = True
    for _ in range(8):
        total = np.zeros(x.shape[:-1])
        for w, xi, tail in zip(law.weights, law.directions, tails):
            total = total + w * (_near_integral(f, x, xi, alpha, fx, grad @ xi, panels, order) + tail)
        if prev is not None:
            err = np.abs(total - prev)
            if np.max(err) <= tol * scale:
                flagged = False
                break
        prev = total
        panels *= 2
    if prev is None or flagged:
        err = np.abs(total - prev) if prev is not None else np.full(total.shape, np.inf)
    if flagged and raise_on_flag:
        raise QuadratureError(f"radial quadrature did not converge (error {np.max(err):.3e})")
    return AResult(total + drift_term, err, flagged)


def apply_L(law: StableLaw, f: TestFunction, x, b_values, **kwargs) -> AResult:
    """A f(x) + b(x) . grad f(x) with drift values ``b_values`` of shape (..., d)."""
    res = apply_A(law, f, x, **kwargs)
    extra = np.sum(np.asarray(b_values) * f.gradient(np.asarray(x, dtype=float)), axis=-1)
    return AResult(res.value + extra, res.error, res.flagged)


def martingale_residual(law: StableLaw, drift, f: TestFunction, config, t1: float, t2: float):
    """Ensemble mean and standard error of the martingale increment on [t1, t2].

    Returns ``(mean, standard_error)`` of
    ``f(X_{t2}) - f(X_{t1}) - int_{t1}^{t2} L_u f(X_u) du`` over the paths
    described by ``config`` (a :class:`stablesde.simulate.SimConfig`).
    """
    from .simulate import euler_paths

    ens = euler_paths(config, law, drift, martingale=(f, t1, t2))
    vals = ens.martingale
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(vals.size))
