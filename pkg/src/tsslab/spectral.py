"""Fourier pseudo-spectral machinery on a uniform periodic box.

Scalar fields are real arrays of shape ``grid.shape``; vector fields carry a
leading component axis, shape ``(grid.dims, *grid.shape)``.  Spectral arrays
are the half-spectrum output of a real FFT over the trailing ``dims`` axes.

Conventions
-----------
The forward transform is unnormalized and the inverse carries ``1/N`` per
axis, so the zero mode of a constant field ``f == a`` equals ``a * N**dims``.
Integrals are ``(box_length / N)**dims`` times the sum over grid points.

Odd derivatives use wavenumbers with the Nyquist entry zeroed; the Laplacian,
Stokes operator and Yosida resolvent use the full ``|k|**2``.  The two agree
on every field without Nyquist content, which includes everything that has
passed through :meth:`Grid.dealias`.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .exceptions import ConfigurationError

__all__ = [
    "Grid",
    "is_solenoidal",
    "write_snapshot",
    "read_snapshot",
]

MIN_POINTS = 8


@dataclass(frozen=True)
class Grid:
    """Cubic periodic grid with cached wavenumber tables.

    Parameters
    ----------
    dims : int
        Spatial dimension, 2 or 3.
    points_per_axis : int
        Even number of grid points per axis, at least 8.
    box_length : float
        Period of the box along every axis.
    """

    dims: int = 2
    points_per_axis: int = 64
    box_length: float = 2 * np.pi

    def __post_init__(self):
        if self.dims not in (2, 3):
            raise ConfigurationError(f"dims must be 2 or 3, got {self.dims}")
        n = self.points_per_axis
        if int(n) != n or n < MIN_POINTS or n % 2:
            raise ConfigurationError(
                f"points_per_axis must be an even integer >= {MIN_POINTS}, got {n}"
            )
        if not (np.isfinite(self.box_length) and self.box_length > 0):
            raise ConfigurationError(f"box_length must be positive, got {self.box_length}")
        object.__setattr__(self, "points_per_axis", int(n))
        object.__setattr__(self, "box_length", float(self.box_length))

    # -- geometry ---------------------------------------------------------

    @property
    def shape(self):
        return (self.points_per_axis,) * self.dims

    @property
    def spectral_shape(self):
        n = self.points_per_axis
        return (n,) * (self.dims - 1) + (n // 2 + 1,)

    @property
    def axes(self):
        return tuple(range(-self.dims, 0))

    @property
    def dx(self):
        return self.box_length / self.points_per_axis

    @property
    def cell_volume(self):
        return self.dx**self.dims

    @property
    def volume(self):
        return self.box_length**self.dims

    @property
    def npoints(self):
        return self.points_per_axis**self.dims

    @cached_property
    def coords(self):
        """Tuple of broadcastable coordinate arrays ``x_0, ..., x_{d-1}``."""
        x = np.arange(self.points_per_axis) * self.dx
        return tuple(np.meshgrid(*([x] * self.dims), indexing="ij"))

    # -- wavenumbers ------------------------------------------------------

    @cached_property
    def mode_indices(self):
        """Integer mode numbers per axis, broadcastable to ``spectral_shape``."""
        n = self.points_per_axis
        full = np.fft.fftfreq(n, 1.0 / n)
        half = np.fft.rfftfreq(n, 1.0 / n)
        out = []
        for ax in range(self.dims):
            m = half if ax == self.dims - 1 else full
            shape = [1] * self.dims
            shape[ax] = m.size
            out.append(m.reshape(shape))
        return tuple(out)

    @cached_property
    def wavenumbers(self):
        scale = 2 * np.pi / self.box_length
        return tuple(scale * m for m in self.mode_indices)

    @cached_property
    def derivative_wavenumbers(self):
        n = self.points_per_axis
        out = []
        for k, m in zip(self.wavenumbers, self.mode_indices):
            out.append(np.where(np.abs(m) == n // 2, 0.0, k))
        return tuple(out)

    @cached_property
    def k2(self):
        return sum(k**2 for k in self.wavenumbers)

    @cached_property
    def _kd2_safe(self):
        kd2 = sum(k**2 for k in self.derivative_wavenumbers)
        return np.where(kd2 == 0, 1.0, kd2)

    @cached_property
    def dealias_mask(self):
        """Two-thirds rule: keep modes with ``|m| < N/3`` on every axis."""
        cut = self.points_per_axis / 3.0
        mask = np.ones(self.spectral_shape, dtype=bool)
        for m in self.mode_indices:
            mask = mask & (np.abs(m) < cut)
        return mask

    @cached_property
    def _half_weights(self):
        # multiplicity of each half-spectrum coefficient in the full spectrum
        n = self.points_per_axis
        w = np.full(self.spectral_shape, 2.0)
        w[..., 0] = 1.0
        w[..., n // 2] = 1.0
        return w

    # -- transforms -------------------------------------------------------

    def to_spectral(self, f):
        """Forward real FFT of a scalar or vector field."""
        f = np.asarray(f, dtype=float)
        self._check_physical(f)
        return sfft.rfftn(f, axes=self.axes)

    def to_physical(self, f_hat):
        """Inverse transform; exact inverse of :meth:`to_spectral`."""
        f_hat = np.asarray(f_hat)
        if f_hat.shape[-self.dims:] != self.spectral_shape:
            raise ConfigurationError(
                f"spectral array shape {f_hat.shape} does not match grid {self.spectral_shape}"
            )
        return sfft.irfftn(f_hat, s=self.shape, axes=self.axes)

    def _check_physical(self, f):
        if f.shape[-self.dims:] != self.shape:
            raise ConfigurationError(f"field shape {f.shape} does not match grid {self.shape}")

    def dealias(self, f_hat):
        return f_hat * self.dealias_mask

    # -- quadrature -------------------------------------------------------

    def integrate(self, f):
        """Rectangle-rule integral over the box (spectrally exact for periodic data)."""
        return self.cell_volume * np.sum(f, axis=self.axes)

    def inner(self, f, g):
        """L2 inner product; vector fields are contracted over components."""
        return float(np.sum(self.integrate(np.asarray(f) * np.asarray(g))))

    def norm(self, f):
        return np.sqrt(self.inner(f, f))

    def spectral_norm(self, f_hat):
        """L2 norm computed from Fourier coefficients (Parseval)."""
        energy = np.sum(self._half_weights * np.abs(f_hat) ** 2)
        return float(np.sqrt(energy * self.cell_volume / self.npoints))

    # -- differential operators (spectral in, spectral out) ---------------

    def grad_hat(self, f_hat):
        return np.stack([1j * k * f_hat for k in self.derivative_wavenumbers])

    def div_hat(self, v_hat):
        return sum(1j * k * v_hat[i] for i, k in enumerate(self.derivative_wavenumbers))

    def laplacian_hat(self, f_hat):
        return -self.k2 * f_hat

    def leray_hat(self, v_hat):
        """Helmholtz projection ``(I - k k^T / |k|^2) v``; zero mode untouched."""
        kd = self.derivative_wavenumbers
        k_dot_v = sum(k * v_hat[i] for i, k in enumerate(kd)) / self._kd2_safe
        return np.stack([v_hat[i] - k * k_dot_v for i, k in enumerate(kd)])

    def stokes_hat(self, u_hat):
        return self.k2 * self.leray_hat(u_hat)

    def yosida_hat(self, u_hat, eps):
        if not eps > 0:
            raise ValueError(f"Yosida parameter must be positive, got {eps}")
        return self.leray_hat(u_hat) / (1.0 + eps * self.k2)

    # -- physical-space conveniences --------------------------------------

    def grad(self, f):
        return self.to_physical(self.grad_hat(self.to_spectral(f)))

    def div(self, v):
        return self.to_physical(self.div_hat(self.to_spectral(v)))

    def laplacian(self, f):
        return self.to_physical(self.laplacian_hat(self.to_spectral(f)))

    def leray_project(self, v):
        self._check_vector(v)
        return self.to_physical(self.leray_hat(self.to_spectral(v)))

    def stokes_apply(self, u):
        """Stokes operator ``A u = -P Laplacian u``."""
        self._check_vector(u)
        return self.to_physical(self.stokes_hat(self.to_spectral(u)))

    def yosida_apply(self, u, eps):
        """Resolvent ``(1 + eps A)^{-1} u`` on solenoidal fields."""
        self._check_vector(u)
        return self.to_physical(self.yosida_hat(self.to_spectral(u), eps))

    def _check_vector(self, v):
        if np.ndim(v) != self.dims + 1 or np.shape(v)[0] != self.dims:
            raise ConfigurationError(
                f"vector field must have shape {(self.dims, *self.shape)}, got {np.shape(v)}"
            )

    # -- random test data --------------------------------------------------

    def random_field(self, rng, band_limited=True, components=None):
        """White-noise field, optionally truncated to the dealiased band."""
        shape = self.shape if components is None else (components, *self.shape)
        f = rng.standard_normal(shape)
        if band_limited:
            f = self.to_physical(self.dealias(self.to_spectral(f)))
        return f

    def random_solenoidal(self, rng, band_limited=True):
        v = self.random_field(rng, band_limited=band_limited, components=self.dims)
        return self.leray_project(v)


def is_solenoidal(grid, u, rtol=1e-10):
    """Spectral divergence relative to the field's max modulus."""
    scale = np.max(np.abs(u))
    if scale == 0:
        return True
    return float(np.max(np.abs(grid.div(u)))) <= rtol * scale


# -- snapshots -------------------------------------------------------------


def write_snapshot(path, grid, fields, time):
    """Dump physical fields as delimited text, one grid point per row.

    ``fields`` maps names to scalar arrays; vector fields are split into
    ``name0, name1, ...`` columns.  Rows run over grid points in row-major
    (C) order.
    """
    names, columns = [], []
    for name, arr in fields.items():
        arr = np.asarray(arr, dtype=float)
        if arr.shape == grid.shape:
            names.append(name)
            columns.append(arr.ravel())
        else:
            for i, comp in enumerate(arr):
                names.append(f"{name}{i}")
                columns.append(comp.ravel())
    header = (
        f"dims={grid.dims} points_per_axis={grid.points_per_axis} "
        f"box_length={grid.box_length!r} time={float(time)!r} fields={','.join(names)}"
    )
    np.savetxt(path, np.column_stack(columns), fmt="%.17g", header=header, comments="# ")


def read_snapshot(path):
    """Inverse of :func:`write_snapshot`; returns ``(grid, fields, time)``."""
    with open(path) as fh:
        header = fh.readline().lstrip("#").strip()
    meta = dict(item.split("=", 1) for item in header.split())
    grid = Grid(int(meta["dims"]), int(meta["points_per_axis"]), float(meta["box_length"]))
    data = np.loadtxt(path, ndmin=2)
    names = meta["fields"].split(",")
    fields = {name: data[:, i].reshape(grid.shape) for i, name in enumerate(names)}
    return grid, fields, float(meta["time"])
