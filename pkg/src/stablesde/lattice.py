"""Periodic spatial lattices, space-time fields and the shared binary format.

All lattice objects live on the torus ``[-L, L)^d`` sampled at
``x_k = -L + k h`` with ``h = 2L / N``.  Fourier multipliers follow the numpy
convention: the mode ``exp(i u . x)`` has frequency ``u = 2 pi fftfreq(N, h)``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import ndimage

__all__ = [
    "Lattice",
    "SpaceTimeField",
    "PeriodicSpline",
    "write_slices",
    "read_slices",
    "BinaryHeader",
]


@dataclass(frozen=True)
class Lattice:
    """Uniform periodic lattice with ``points`` nodes per axis on [-L, L)^d."""

    dim: int
    extent: float
    points: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if self.extent <= 0:
            raise ValueError("extent must be positive")
        if self.points < 2:
            raise ValueError("need at least two points per axis")

    @property
    def spacing(self) -> float:
        return 2.0 * self.extent / self.points

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.extent + self.spacing * np.arange(self.points)

    @cached_property
    def freq_axis(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.spacing)

    def coords(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per axis."""
        return _open_mesh(self.axis, self.dim)

    def points_array(self) -> np.ndarray:
        """All nodes as an array of shape (*shape, d)."""
        return np.stack(np.meshgrid(*([self.axis] * self.dim), indexing="ij"), axis=-1)

    def frequencies(self) -> list[np.ndarray]:
        """Broadcastable frequency arrays matching ``np.fft.fftn`` ordering."""
        return _open_mesh(self.freq_axis, self.dim)

    def rfrequencies(self) -> list[np.ndarray]:
        """Frequency arrays matching ``np.fft.rfftn`` ordering."""
        full = self.freq_axis
        half = 2.0 * np.pi * np.fft.rfftfreq(self.points, d=self.spacing)
        axes = [full] * (self.dim - 1) + [half]
        out = []
        for k, ax in enumerate(axes):
            shape = [1] * self.dim
            shape[k] = ax.size
            out.append(ax.reshape(shape))
        return out

    def frequency_points(self, real: bool = False) -> np.ndarray:
        """Dual lattice as an array of shape (*spectral shape, d)."""
        freqs = self.rfrequencies() if real else self.frequencies()
        return np.stack(np.broadcast_arrays(*freqs), axis=-1)

    def wrap(self, x):
        """Map points of R^d to their representative in [-L, L)^d."""
        L = self.extent
        return np.mod(np.asarray(x, dtype=float) + L, 2 * L) - L

    def nearest_index(self, x) -> tuple[int, ...]:
        idx = np.rint((self.wrap(x) + self.extent) / self.spacing).astype(int) % self.points
        return tuple(int(i) for i in np.atleast_1d(idx))

    def integrate(self, values) -> float:
        return float(np.sum(values) * self.cell_volume)

    def refine(self, factor: int = 2) -> "Lattice":
        return Lattice(self.dim, self.extent, self.points * factor)


def _open_mesh(axis: np.ndarray, dim: int) -> list[np.ndarray]:
    out = []
    for k in range(dim):
        shape = [1] * dim
        shape[k] = axis.size
        out.append(axis.reshape(shape))
    return out


class PeriodicSpline:
    """Periodic B-spline interpolant of a lattice field.

    Parameters
    ----------
    lattice : Lattice
    values : ndarray
        Samples on ``lattice`` (shape ``lattice.shape``).
    order : int
        Spline degree, 1 to 5.
    periodic : bool
        When False, points outside the lattice footprint evaluate to zero
        instead of wrapping.
    """

    def __init__(self, lattice: Lattice, values, order: int = 5, periodic: bool = True):
        values = np.asarray(values, dtype=float)
        if values.shape != lattice.shape:
            raise ValueError("values do not match the lattice shape")
        self.lattice = lattice
        self.order = order
        self.periodic = periodic
        if order > 1:
            self._coeffs = ndimage.spline_filter(values, order=order, mode="grid-wrap")
        else:
            self._coeffs = values

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lat = self.lattice
        flat = x.reshape(-1, lat.dim)
        idx = (lat.wrap(flat) + lat.extent) / lat.spacing
        out = ndimage.map_coordinates(
            self._coeffs, idx.T, order=self.order, mode="grid-wrap", prefilter=False
        )
        if not self.periodic:
            # the last cell [L - h, L) wraps to the first node; treat it as outside
            inside = np.all((flat >= -lat.extent) & (flat <= lat.extent - lat.spacing), axis=1)
            out = np.where(inside, out, 0.0)
        return out.reshape(x.shape[:-1])


class SpaceTimeField:
    """A scalar or vector field on uniform time slices times a lattice.

    ``values`` has shape ``(K + 1, *lattice.shape)`` for scalar fields and
    ``(K + 1, d, *lattice.shape)`` for vector fields; slice ``i`` sits at time
    ``i * dt``.  The field is taken to vanish after the last slice unless a
    ``tail_rate`` is given, in which case it continues as
    ``f(T, x) exp(-tail_rate (s - T))``; a zero rate continues it unchanged.
    """

    def __init__(self, lattice: Lattice, values, dt: float, tail_rate: float | None = None):
        values = np.asarray(values, dtype=float)
        if values.ndim == lattice.dim + 1:
            vector = False
        elif values.ndim == lattice.dim + 2 and values.shape[1] == lattice.dim:
            vector = True
        else:
            raise ValueError("values must have shape (K+1, *grid) or (K+1, d, *grid)")
        if values.shape[-lattice.dim:] != lattice.shape:
            raise ValueError("values do not match the lattice shape")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        if dt <= 0:
            raise ValueError("dt must be positive")
        if tail_rate is not None and not (tail_rate >= 0 and np.isfinite(tail_rate)):
            raise ValueError("tail_rate must be nonnegative and finite")
        self.lattice = lattice
        self.values = values
        self.values.setflags(write=False)
        self.dt = float(dt)
        self.tail_rate = tail_rate
        self.is_vector = vector

    @classmethod
    def from_function(cls, lattice: Lattice, func, horizon: float, dt: float, tail_rate=None):
        """Sample ``func(t, x)`` at each slice; ``x`` has shape (*grid, d)."""
        n_slices = int(round(horizon / dt)) + 1
        if abs((n_slices - 1) * dt - horizon) > 1e-9 * max(horizon, 1.0):
            raise ValueError("horizon must be a multiple of dt")
        pts = lattice.points_array()
        vals = np.stack([np.asarray(func(i * dt, pts), dtype=float) for i in range(n_slices)])
        if vals.ndim == lattice.dim + 2 and vals.shape[-1] == lattice.dim and vals.shape[1] != lattice.dim:
            vals = np.moveaxis(vals, -1, 1)
        return cls(lattice, vals, dt, tail_rate)

    @classmethod
    def constant(cls, lattice: Lattice, value: float, horizon: float, dt: float, tail_rate=None):
        n_slices = int(round(horizon / dt)) + 1
        vals = np.full((n_slices,) + lattice.shape, float(value))
        return cls(lattice, vals, dt, tail_rate)

    @property
    def n_slices(self) -> int:
        return self.values.shape[0]

    @property
    def horizon(self) -> float:
        return (self.n_slices - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_slices)

    def sup_norm(self) -> float:
        """Sup over slices and nodes of the (Euclidean, for vectors) magnitude."""
        if self.is_vector:
            return float(np.sqrt(np.max(np.sum(self.values**2, axis=1))))
        return float(np.max(np.abs(self.values)))

    def support_horizon(self) -> float:
        """Time of the last slice with a nonzero value."""
        axes = tuple(range(1, self.values.ndim))
        nonzero = np.flatnonzero(np.any(self.values != 0, axis=axes))
        return float(nonzero[-1] * self.dt) if nonzero.size else 0.0

    def component(self, k: int) -> "SpaceTimeField":
        if not self.is_vector:
            raise ValueError("scalar field has no components")
        return SpaceTimeField(self.lattice, self.values[:, k], self.dt, self.tail_rate)

    def magnitude(self) -> "SpaceTimeField":
        if not self.is_vector:
            return SpaceTimeField(self.lattice, np.abs(self.values), self.dt, self.tail_rate)
        return SpaceTimeField(self.lattice, np.sqrt(np.sum(self.values**2, axis=1)), self.dt, self.tail_rate)

    def dot(self, other: "SpaceTimeField") -> "SpaceTimeField":
        """Pointwise dot product of two vector fields on the same slices."""
        self._check_compatible(other)
        if not (self.is_vector and other.is_vector):
            raise ValueError("dot requires two vector fields")
        return SpaceTimeField(self.lattice, np.einsum("ik...,ik...->i...", self.values, other.values), self.dt)

    def scaled(self, factor: float) -> "SpaceTimeField":
        return SpaceTimeField(self.lattice, factor * self.values, self.dt, self.tail_rate)

    def __add__(self, other: "SpaceTimeField") -> "SpaceTimeField":
        self._check_compatible(other)
        if self.tail_rate != other.tail_rate:
            raise ValueError("cannot add fields with different tails")
        return SpaceTimeField(self.lattice, self.values + other.values, self.dt, self.tail_rate)

    def __sub__(self, other: "SpaceTimeField") -> "SpaceTimeField":
        return self + other.scaled(-1.0)

    def _check_compatible(self, other: "SpaceTimeField"):
        if other.lattice != self.lattice or other.n_slices != self.n_slices or other.dt != self.dt:
            raise ValueError("fields live on different space-time grids")

    def slice_at(self, s: float) -> np.ndarray:
        """Linear interpolation in time (zero or exponential tail past the end)."""
        if s < 0:
            raise ValueError("s must be nonnegative")
        if s >= self.horizon:
            last = self.values[-1]
            if s == self.horizon:
                return np.array(last)
            if self.tail_rate is None:
                return np.zeros_like(last)
            return last * np.exp(-self.tail_rate * (s - self.horizon))
        pos = s / self.dt
        i = int(np.floor(pos))
        frac = pos - i
        return (1 - frac) * self.values[i] + frac * self.values[i + 1]

    def probe(self, s: float, x, order: int = 5) -> np.ndarray:
        """Evaluate at time ``s`` and spatial points ``x`` (periodic spline)."""
        sl = self.slice_at(s)
        if self.is_vector:
            return np.stack([PeriodicSpline(self.lattice, c, order)(x) for c in sl], axis=-1)
        return PeriodicSpline(self.lattice, sl, order)(x)

    # -- binary io -----------------------------------------------------
    def save(self, path, alpha: float = float("nan")):
        write_slices(path, self.lattice, self.values, self.dt, alpha=alpha, vector=self.is_vector)

    @classmethod
    def load(cls, path) -> "SpaceTimeField":
        header, values = read_slices(path)
        lat = Lattice(header.dim, header.extent, header.points)
        if header.n_components == 1:
            values = values[:, 0]
        return cls(lat, values, header.dt)


_MAGIC = b"STSLICE1"
_HEADER = struct.Struct("<8siidd i i d")


@dataclass(frozen=True)
class BinaryHeader:
    dim: int
    points: int
    extent: float
    alpha: float
    n_slices: int
    n_components: int
    dt: float


def write_slices(path, lattice: Lattice, values, dt: float, alpha: float = float("nan"), vector=None):
    """Write slices in the shared little-endian row-major format.

    Layout: an 8-byte magic, int32 d, int32 N, float64 L, float64 alpha,
    int32 slice count, int32 component count, float64 dt, then float64 data
    in C order with shape (slices, components, N, ..., N).
    """
    values = np.asarray(values, dtype="<f8")
    d = lattice.dim
    if vector is None:
        vector = values.ndim == d + 2
    if not vector:
        if values.ndim == d:
            values = values[None]
        values = values[:, None]
    header = _HEADER.pack(
        _MAGIC, d, lattice.points, float(lattice.extent), float(alpha),
        values.shape[0], values.shape[1], float(dt),
    )
    with open(Path(path), "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(values).tobytes())


def read_slices(path) -> tuple[BinaryHeader, np.ndarray]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError("file too short for a slice header")
    magic, d, n, extent, alpha, n_slices, n_comp, dt = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError("not a slice file (bad magic)")
    header = BinaryHeader(d, n, extent, alpha, n_slices, n_comp, dt)
    count = n_slices * n_comp * n**d
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if data.size != count:
        raise ValueError(f"expected {count} values, found {data.size}")
    return header, data.reshape((n_slices, n_comp) + (n,) * d).astype(float)
