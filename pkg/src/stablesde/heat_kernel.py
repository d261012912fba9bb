"""Heat kernel of a stable law by Fourier inversion on a periodic lattice.

The density of ``S_t`` is

    p_t(x) = (2 pi)^{-d} int exp(-i u . x) exp(-t psi(u)) du.

On the lattice ``x_k = -L + k h`` with ``u_m = 2 pi m / (2L)`` the
Riemann sum is a plain FFT after the phase ``exp(i u_m L) = (-1)^m`` is
folded in.  The sum returns the periodization of ``p_t`` over the
period ``2L``; that aliasing, plus the spectral cutoff, is what the
truncation report measures.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.special import gamma as gamma_fn
from scipy.special import gammaincc

from .lattice import Lattice, PeriodicSpline
from .stable_law import StableLaw, characteristic_exponent, validate

__all__ = [
    "KernelBudgetError",
    "TruncationReport",
    "KernelGrid",
    "NormReport",
    "T_MIN",
    "build_kernel",
    "invert_density",
    "invert_gradient",
    "density_at",
    "generator_applied_to_kernel",
    "lp_norm",
    "lp_norm_report",
    "psi_on_lattice",
]

T_MIN = 0.05
BUDGET = 1e-3


class KernelBudgetError(RuntimeError):
    """Raised when the lattice cannot represent the kernel to budget."""


def _sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2) / gamma_fn(d / 2)


def _sign_mask(lattice: Lattice) -> np.ndarray:
    m = np.fft.fftfreq(lattice.points, 1.0 / lattice.points).astype(int)
    s = np.where(m % 2 == 0, 1.0, -1.0)
    out = np.ones(lattice.shape)
    for k in range(lattice.dim):
        shape = [1] * lattice.dim
        shape[k] = lattice.points
        out = out * s.reshape(shape)
    return out


def psi_on_lattice(law: StableLaw, lattice: Lattice, real: bool = False) -> np.ndarray:
    """psi sampled on the dual lattice in ``fftn`` (or ``rfftn``) order."""
    if law.dim != lattice.dim:
        raise ValueError("law and lattice dimensions differ")
    return characteristic_exponent(law, lattice.frequency_points(real=real))


def _invert(lattice: Lattice, spectrum: np.ndarray, workers=None) -> np.ndarray:
    """(2L)^{-d} sum_m spectrum_m exp(-i u_m . x_k), complex."""
    return sfft.fftn(_sign_mask(lattice) * spectrum, workers=workers) / (2 * lattice.extent) ** lattice.dim


def invert_density(law: StableLaw, lattice: Lattice, t: float = 1.0, workers=None, complex_out=False):
    """Periodized density of ``S_t`` on the lattice by direct inversion."""
    if t <= 0:
        raise ValueError("t must be positive")
    vals = _invert(lattice, np.exp(-t * psi_on_lattice(law, lattice)), workers)
    return vals if complex_out else vals.real


def invert_gradient(law: StableLaw, lattice: Lattice, t: float = 1.0, workers=None) -> np.ndarray:
    """Gradient of the periodized density, shape (d, *grid)."""
    spec = np.exp(-t * psi_on_lattice(law, lattice))
    out = [_invert(lattice, -1j * u * spec, workers).real for u in lattice.frequencies()]
    return np.stack(out)


@dataclass(frozen=True)
class TruncationReport:
    mass: float
    peak: float
    imag_residue: float
    aliasing: float
    truncation: float
    tail_mass: float
    decay_constant: float
    min_value: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class KernelGrid:
    """p_1 and its gradient on a lattice, with the truncation diagnostics."""

    law: StableLaw
    lattice: Lattice
    values_p1: np.ndarray
    values_grad_p1: np.ndarray
    truncation_report: TruncationReport
    spline_order: int = 5
    _spline: PeriodicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.values_p1.setflags(write=False)
        self.values_grad_p1.setflags(write=False)
        spline = PeriodicSpline(self.lattice, self.values_p1, self.spline_order, periodic=False)
        object.__setattr__(self, "_spline", spline)

    @property
    def extent(self) -> float:
        return self.lattice.extent

    @property
    def points(self) -> int:
        return self.lattice.points

    @property
    def peak(self) -> float:
        return self.truncation_report.peak


def _truncation_tail(c: float, alpha: float, d: int, u_max: float) -> float:
    # (2 pi)^{-d} int_{|u| > U} exp(-c |u|^alpha) du
    a = d / alpha
    radial = gamma_fn(a) * gammaincc(a, c * u_max**alpha) / (alpha * c**a)
    return _sphere_area(d) * radial / (2 * math.pi) ** d


def _boundary_max(values: np.ndarray) -> float:
    best = 0.0
    for k in range(values.ndim):
        best = max(best, float(np.max(np.abs(np.take(values, 0, axis=k)))))
        best = max(best, float(np.max(np.abs(np.take(values, -1, axis=k)))))
    return best


def build_kernel(
    law: StableLaw,
    extent: float,
    points: int,
    budget: float = BUDGET,
    spline_order: int = 5,
    workers=None,
) -> KernelGrid:
    """Invert ``exp(-psi)`` on a ``points^d`` lattice over [-extent, extent)^d.

    Raises
    ------
    KernelBudgetError
        If the boundary value of p_1 (aliasing proxy) or the frequency
        cutoff tail exceeds ``budget`` times the peak density.
    """
    report = validate(law)
    if not report.nondegenerate:
        raise ValueError(f"law is degenerate: direction rank {report.rank} < {law.dim}")
    if points < 64 or points & (points - 1):
        raise ValueError("points must be a power of two and at least 64")
    lattice = Lattice(law.dim, float(extent), int(points))
    raw = invert_density(law, lattice, 1.0, workers=workers, complex_out=True)
    p1 = np.ascontiguousarray(raw.real)
    peak = float(p1.max())
    u_max = math.pi / lattice.spacing
    trunc = _truncation_tail(report.decay_constant, law.alpha, law.dim, u_max)
    rep = TruncationReport(
        mass=lattice.integrate(p1),
        peak=peak,
        imag_residue=float(np.max(np.abs(raw.imag))),
        aliasing=_boundary_max(p1) / peak,
        truncation=trunc / peak,
        tail_mass=law.levy_tail_mass(extent),
        decay_constant=report.decay_constant,
        min_value=float(p1.min()),
    )
    if rep.aliasing > budget:
        raise KernelBudgetError(
            f"aliasing estimate {rep.aliasing:.3e} of peak exceeds {budget:g}; increase the extent"
        )
    if rep.truncation > budget:
        raise KernelBudgetError(
            f"frequency truncation {rep.truncation:.3e} of peak exceeds {budget:g}; refine the lattice"
        )
    grad = invert_gradient(law, lattice, 1.0, workers=workers)
    return KernelGrid(law, lattice, p1, np.ascontiguousarray(grad), rep, spline_order)


def density_at(grid: KernelGrid, t: float, x) -> np.ndarray:
    """p_t(x) from p_1 through the scaling law.

    ``x`` has shape (..., d).  Points whose rescaled position falls outside
    the lattice footprint return zero; the mass lost that way is bounded by
    the reported tail mass.
    """
    if t < T_MIN:
        raise ValueError(f"t = {t} is below the lattice limit t_min = {T_MIN}")
    law = grid.law
    x = np.asarray(x, dtype=float)
    scale = t ** (-1.0 / law.alpha)
    shift = (1.0 - t ** (1.0 - 1.0 / law.alpha)) * law.gamma
    return t ** (-law.dim / law.alpha) * grid._spline(scale * x + shift)


def generator_applied_to_kernel(grid: KernelGrid, t: float, variant: str = "forward", workers=None) -> np.ndarray:
    """The generator applied to the kernel at time ``t`` on the lattice.

    ``variant="forward"`` returns ``A p_t`` (symbol ``-psi(-u)`` against
    ``exp(-i u x)``).  ``variant="adjoint"`` returns ``z -> A_x p_t(y - x)``
    at ``z = y - x`` (symbol ``-psi(u)``), which equals ``d/dt p_t(z)``.
    """
    if t < T_MIN:
        raise ValueError(f"t = {t} is below the lattice limit t_min = {T_MIN}")
    psi = psi_on_lattice(grid.law, grid.lattice)
    if variant == "forward":
        symbol = -np.conj(psi)  # psi(-u) = conj(psi(u))
    elif variant == "adjoint":
        symbol = -psi
    else:
        raise ValueError("variant must be 'forward' or 'adjoint'")
    return _invert(grid.lattice, symbol * np.exp(-t * psi), workers).real


@dataclass(frozen=True)
class NormReport:
    value: float
    tail_estimate: float
    relative_tail: float


def _box_sums(values: np.ndarray, lattice: Lattice, radii) -> list[float]:
    mask_axes = [np.abs(c) for c in lattice.coords()]
    out = []
    for r in radii:
        mask = np.ones(lattice.shape, dtype=bool)
        for c in mask_axes:
            mask = mask & (c <= r)
        out.append(float(np.sum(values[mask])) * lattice.cell_volume)
    return out


def lp_norm_report(grid: KernelGrid, which: str = "p1", p_star: float = 1.0) -> NormReport:
    """Lattice L^{p*} norm of p_1 or of |grad p_1| with a tail estimate.

    The mass outside the box is extrapolated from the growth of the power
    sum over the nested boxes of half-width L/4, L/2 and L, assuming the
    increments decay geometrically.
    """
    if p_star < 1:
        raise ValueError("p_star must be at least 1")
    lat = grid.lattice
    if which == "p1":
        field_ = np.abs(grid.values_p1)
    elif which == "grad_p1":
        field_ = np.sqrt(np.sum(grid.values_grad_p1**2, axis=0))
    else:
        raise ValueError("which must be 'p1' or 'grad_p1'")
    if math.isinf(p_star):
        return NormReport(float(field_.max()), 0.0, 0.0)
    powered = field_**p_star
    L = lat.extent
    s1, s2, s3 = _box_sums(powered, lat, (L / 4, L / 2, L))
    power_sum = float(np.sum(powered)) * lat.cell_volume
    d1, d2 = s2 - s1, power_sum - s2
    if d1 > 0 and 0 <= d2 < d1:
        ratio = d2 / d1
        tail = d2 * ratio / (1.0 - ratio)
    else:
        tail = math.inf
    value = power_sum ** (1.0 / p_star)
    rel = tail / power_sum if power_sum > 0 else 0.0
    if rel > 1e-2:
        warnings.warn(f"L^{p_star:g} tail correction is {rel:.2%} of the lattice norm", RuntimeWarning)
    return NormReport(value, tail, rel)


def lp_norm(grid: KernelGrid, which: str = "p1", p_star: float = 1.0) -> float:
    return lp_norm_report(grid, which, p_star).value
