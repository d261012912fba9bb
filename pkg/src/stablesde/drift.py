"""Decomposed singular drifts b = b1 + b2, mixed norms and mollification.

Drifts are stored as vector :class:`SpaceTimeField` samples on a periodic
lattice with uniform time slices over the support ``[0, T]``.  The bounded
part ``b1`` carries a declared sup bound ``M``; the singular part ``b2`` is
measured in the mixed norm ``L^q([0, T]; L^p)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft
from scipy import integrate

from .lattice import Lattice, SpaceTimeField

__all__ = [
    "AdmissibilityReport",
    "DriftField",
    "MollifiedDrift",
    "check_admissible",
    "mixed_norm",
    "mollify",
    "bump_kernel",
    "constant_drift",
    "lipschitz_drift",
    "radial_singular_component",
    "radial_singular_drift",
    "radial_singular_norm",
    "zero_drift",
]


@dataclass(frozen=True)
class AdmissibilityReport:
    value: float
    threshold: float
    margin: float
    passed: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_admissible(d: int, alpha: float, p: float, q: float) -> AdmissibilityReport:
    """Evaluate the drift integrability condition d/p + alpha/q < alpha - 1.

    The inequality is strict, so equality fails.  When ``d/p`` and
    ``alpha/q`` are representable exactly the comparison is exact in floating
    point as well; values within one ulp of the threshold are treated as
    equality.
    """
    if p <= 0 or q <= 0:
        raise ValueError("p and q must be positive")
    value = d / p + alpha / q
    threshold = alpha - 1.0
    margin = threshold - value
    passed = margin > 4 * np.finfo(float).eps * max(abs(threshold), 1.0)
    return AdmissibilityReport(float(value), float(threshold), float(margin), bool(passed))


def _slice_norms(values: np.ndarray, lattice: Lattice, p: float) -> np.ndarray:
    if values.ndim == lattice.dim + 2:
        mag = np.sqrt(np.sum(values**2, axis=1))
    else:
        mag = np.abs(values)
    axes = tuple(range(1, mag.ndim))
    if math.isinf(p):
        return mag.max(axis=axes)
    return (np.sum(mag**p, axis=axes) * lattice.cell_volume) ** (1.0 / p)


def _time_weights(n_slices: int, dt: float) -> np.ndarray:
    if n_slices == 1:
        return np.array([dt])
    w = np.full(n_slices, dt)
    w[0] = w[-1] = dt / 2
    return w


def mixed_norm(field: SpaceTimeField, p: float, q: float, warn: bool = True) -> float:
    """L^q in time of the spatial L^p norm of |field|.

    Spatial sums are cell-volume weighted, the time integral uses the
    trapezoid rule over the slices.  A jump of more than 50% between
    adjacent slice norms triggers an under-resolution warning.
    """
    if p < 1 or q < 1:
        raise ValueError("lattice mixed norms are implemented for p, q >= 1")
    norms = _slice_norms(field.values, field.lattice, p)
    if warn and norms.size > 1:
        hi = np.maximum(norms[1:], norms[:-1])
        jump = np.abs(np.diff(norms))
        if np.any((hi > 0) & (jump > 0.5 * hi)):
            warnings.warn("adjacent slice norms differ by more than 50%; time grid may be under-resolved", RuntimeWarning)
    if math.isinf(q):
        return float(norms.max())
    w = _time_weights(field.n_slices, field.dt)
    return float(np.sum(w * norms**q) ** (1.0 / q))


class DriftField:
    """b = b1 + b2 with support in [0, T].

    Parameters
    ----------
    b1, b2 : SpaceTimeField
        Vector fields on the same lattice and slices ``0, dt, ..., T``.
    M : float
        Declared bound on sup |b1|; it must dominate the sampled sup.
    p, q : float
        Exponents of the mixed norm used for ``b2``.
    """

    def __init__(self, b1: SpaceTimeField, b2: SpaceTimeField, M: float, p: float, q: float, label: str = ""):
        if not (b1.is_vector and b2.is_vector):
            raise ValueError("drift components must be vector fields")
        b1._check_compatible(b2)
        if b1.tail_rate is not None or b2.tail_rate is not None:
            raise ValueError("drift components must vanish after the horizon")
        sup1 = b1.sup_norm()
        if M < sup1 * (1 - 1e-12):
            raise ValueError(f"declared M = {M} is below the sampled sup |b1| = {sup1}")
        self.b1 = b1
        self.b2 = b2
        self.M = float(M)
        self.p = float(p)
        self.q = float(q)
        self.label = label
        self.b2_norm = mixed_norm(b2, p, q, warn=False)
        if not math.isfinite(self.b2_norm):
            raise ValueError("b2 mixed norm is not finite")

    @property
    def lattice(self) -> Lattice:
        return self.b1.lattice

    @property
    def dim(self) -> int:
        return self.lattice.dim

    @property
    def dt(self) -> float:
        return self.b1.dt

    @property
    def horizon(self) -> float:
        return self.b1.horizon

    @property
    def level(self):
        return None

    def is_zero(self) -> bool:
        return not (np.any(self.b1.values) or np.any(self.b2.values))

    def total(self) -> SpaceTimeField:
        return self.b1 + self.b2

    def admissibility(self, alpha: float) -> AdmissibilityReport:
        return check_admissible(self.dim, alpha, self.p, self.q)

    def scaled(self, c1: float = 1.0, c2: float = 1.0) -> "DriftField":
        return DriftField(self.b1.scaled(c1), self.b2.scaled(c2), abs(c1) * self.M, self.p, self.q, self.label)

    def sup_bound(self) -> float:
        return self.total().sup_norm()


@dataclass(frozen=True)
class MollifiedDrift:
    """Level-n mollification of a :class:`DriftField`."""

    level: int
    b1n: SpaceTimeField
    b2n: SpaceTimeField
    lipschitz_estimate: float
    M: float
    p: float
    q: float
    b2_norm: float
    source_b2_norm: float
    label: str = ""

    @property
    def lattice(self) -> Lattice:
        return self.b1n.lattice

    @property
    def dim(self) -> int:
        return self.lattice.dim

    @property
    def dt(self) -> float:
        return self.b1n.dt

    @property
    def horizon(self) -> float:
        return self.b1n.horizon

    def is_zero(self) -> bool:
        return not (np.any(self.b1n.values) or np.any(self.b2n.values))

    def total(self) -> SpaceTimeField:
        return self.b1n + self.b2n

    def admissibility(self, alpha: float) -> AdmissibilityReport:
        return check_admissible(self.dim, alpha, self.p, self.q)

    def check_invariants(self) -> dict:
        sup1 = self.b1n.sup_norm()
        total_sup = self.total().sup_norm()
        return {
            "b1n_le_M": bool(sup1 <= self.M * (1 + 1e-12)),
            "b2n_norm_le_b2": bool(self.b2_norm <= self.source_b2_norm * (1 + 1e-12)),
            "sup_le_2n": bool(total_sup <= 2 * self.level * (1 + 1e-12)),
        }


def _phi(r2):
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = np.exp(1.0 / (r2[inside] - 1.0))
    return out


def bump_kernel(lattice: Lattice, n: int) -> np.ndarray:
    """Bump exp(1/(|nx|^2 - 1)) on the periodic lattice, summing to one.

    The array is centered at index 0 (wrap-around order) so it can be used
    directly in an FFT convolution.
    """
    h = lattice.spacing
    if 1.0 / n < h:
        raise ValueError(f"mollifier radius 1/{n} is below the lattice spacing {h:g}")
    offs = np.fft.fftfreq(lattice.points, 1.0 / lattice.points) * h
    r2 = sum(c**2 for c in np.meshgrid(*([offs] * lattice.dim), indexing="ij"))
    phi = _phi(r2 * n * n)
    return phi / phi.sum()


@lru_cache(maxsize=None)
def _grad_phi_l1(d: int) -> float:
    # || grad phi_1 ||_1 / || phi_1 ||_1 for the radial bump on the unit ball
    def phi(r):
        return math.exp(1.0 / (r * r - 1.0)) if r < 1 else 0.0

    def dphi(r):
        return phi(r) * 2 * r / (r * r - 1.0) ** 2 if r < 1 else 0.0

    num, _ = integrate.quad(lambda r: dphi(r) * r ** (d - 1), 0, 1, limit=200)
    den, _ = integrate.quad(lambda r: phi(r) * r ** (d - 1), 0, 1, limit=200)
    return num / den


def _convolve(values: np.ndarray, kernel_hat: np.ndarray, dim: int) -> np.ndarray:
    axes = tuple(range(values.ndim - dim, values.ndim))
    shape = values.shape[-dim:]
    vhat = sfft.rfftn(values, axes=axes)
    return sfft.irfftn(vhat * kernel_hat, s=shape, axes=axes)


def _truncate(values: np.ndarray, n: float) -> np.ndarray:
    mag = np.sqrt(np.sum(values**2, axis=1, keepdims=True))
    return np.where(mag <= n, values, 0.0)


def mollify(drift: DriftField, n: int) -> MollifiedDrift:
    """Truncate each component at |b| <= n, then convolve with the radius 1/n bump."""
    if n < 1 or int(n) != n:
        raise ValueError("level n must be a positive integer")
    n = int(n)
    lat = drift.lattice
    phi = bump_kernel(lat, n)
    phi_hat = sfft.rfftn(phi)
    t1 = _truncate(drift.b1.values, n)
    t2 = _truncate(drift.b2.values, n)
    b1n = _convolve(t1, phi_hat, lat.dim)
    b2n = _convolve(t2, phi_hat, lat.dim)
    f1 = SpaceTimeField(lat, b1n, drift.dt)
    f2 = SpaceTimeField(lat, b2n, drift.dt)
    sup_trunc = float(np.sqrt(np.max(np.sum(t1**2, axis=1)))) + float(np.sqrt(np.max(np.sum(t2**2, axis=1))))
    lip = sup_trunc * n * _grad_phi_l1(lat.dim)
    return MollifiedDrift(
        level=n,
        b1n=f1,
        b2n=f2,
        lipschitz_estimate=lip,
        M=drift.M,
        p=drift.p,
        q=drift.q,
        b2_norm=mixed_norm(f2, drift.p, drift.q, warn=False),
        source_b2_norm=drift.b2_norm,
        label=drift.label,
    )


# -- built-in families ----------------------------------------------------

def _time_const(lattice: Lattice, values: np.ndarray, horizon: float, dt: float) -> SpaceTimeField:
    n_slices = int(round(horizon / dt)) + 1
    if abs((n_slices - 1) * dt - horizon) > 1e-9 * max(horizon, 1.0):
        raise ValueError("horizon must be a multiple of dt")
    return SpaceTimeField(lattice, np.broadcast_to(values, (n_slices,) + values.shape).copy(), dt)


def _zeros(lattice: Lattice, horizon: float, dt: float) -> SpaceTimeField:
    return _time_const(lattice, np.zeros((lattice.dim,) + lattice.shape), horizon, dt)


def zero_drift(lattice: Lattice, horizon: float, dt: float, p: float = 12.0, q: float = 12.0) -> DriftField:
    z = _zeros(lattice, horizon, dt)
    return DriftField(z, z, 0.0, p, q, label="zero")


def constant_drift(lattice: Lattice, vector, horizon: float, dt: float, p: float = 12.0, q: float = 12.0) -> DriftField:
    """Spatially constant b1 on [0, T], no singular part."""
    vec = np.asarray(vector, dtype=float)
    vals = np.broadcast_to(vec.reshape((-1,) + (1,) * lattice.dim), (lattice.dim,) + lattice.shape)
    b1 = _time_const(lattice, np.array(vals), horizon, dt)
    return DriftField(b1, _zeros(lattice, horizon, dt), float(np.linalg.norm(vec)), p, q, label="constant")


def lipschitz_drift(lattice: Lattice, amplitude: float, horizon: float, dt: float, p: float = 12.0, q: float = 12.0) -> DriftField:
    """Smooth periodic rotation-like field amplitude (sin(k y), -sin(k x)) with |b1| <= amplitude."""
    if lattice.dim != 2:
        raise ValueError("the built-in Lipschitz family is two-dimensional")
    k = math.pi / lattice.extent
    x, y = lattice.coords()
    vals = np.stack(np.broadcast_arrays(np.sin(k * y), -np.sin(k * x))) * (amplitude / math.sqrt(2))
    b1 = _time_const(lattice, vals, horizon, dt)
    return DriftField(b1, _zeros(lattice, horizon, dt), abs(amplitude), p, q, label="lipschitz")


def radial_singular_component(lattice: Lattice, amplitude: float, theta: float, radius: float = 1.0, inward: bool = True) -> np.ndarray:
    """amplitude |x|^{-theta} x/|x| on |x| <= radius, sign flipped when inward.

    The node at the origin has no direction and is set to zero.
    """
    pts = lattice.points_array()
    r = np.sqrt(np.sum(pts**2, axis=-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = np.where((r > 0) & (r <= radius), amplitude * r ** (-theta), 0.0)
        unit = np.where(r[..., None] > 0, pts / r[..., None], 0.0)
    vals = (-1.0 if inward else 1.0) * mag[..., None] * unit
    return np.moveaxis(vals, -1, 0)


def radial_singular_norm(amplitude: float, theta: float, radius: float, p: float, q: float, horizon: float, d: int = 2) -> float:
    """Exact L^q L^p norm of the radial family (requires theta p < d)."""
    if theta * p >= d:
        raise ValueError("theta * p must be below d for a finite norm")
    area = 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)
    spatial = amplitude * (area * radius ** (d - theta * p) / (d - theta * p)) ** (1.0 / p)
    return spatial * horizon ** (1.0 / q)


def radial_singular_drift(
    lattice: Lattice,
    amplitude: float,
    theta: float,
    horizon: float,
    dt: float,
    p: float,
    q: float,
    radius: float = 1.0,
    inward: bool = True,
    b1_vector=None,
) -> DriftField:
    """Singular b2 from the radial family plus an optional constant b1."""
    b2 = _time_const(lattice, radial_singular_component(lattice, amplitude, theta, radius, inward), horizon, dt)
    if b1_vector is None:
        b1 = _zeros(lattice, horizon, dt)
        M = 0.0
    else:
        b1 = constant_drift(lattice, b1_vector, horizon, dt).b1
        M = float(np.linalg.norm(b1_vector))
    return DriftField(b1, b2, M, p, q, label="radial")

