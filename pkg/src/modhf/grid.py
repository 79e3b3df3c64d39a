"""Periodic grids approximating R^d, the Fourier transform and L^p norms.

The Fourier transform follows ``F f(w) = int f(t) exp(-2 pi i t.w) dt``.
On a grid of half-width ``L`` with ``n`` samples per axis the spatial
lattice is ``x_m = -L + m dx`` (``dx = 2L/n``) and the frequency lattice is
``xi_j = j dxi`` with ``j in [-n/2, n/2)`` and ``dxi = 1/(2L)``.  Both are
stored in "centered" order, so array index ``n/2`` holds ``x = 0`` and
``xi = 0``.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import ConfigError, DomainError

__all__ = [
    "GridSpec",
    "Field",
    "forward_fourier",
    "inverse_fourier",
    "fft_c",
    "ifft_c",
    "lp_norm",
    "lp_norm_array",
    "fft_workers",
]


def fft_workers():
    """Worker count for scipy.fft, capped by ``MODHF_THREADS`` if set."""
    value = os.environ.get("MODHF_THREADS")
    if not value:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        return 1


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on ``[-L, L)^d``.

    Parameters
    ----------
    d : int
        Spatial dimension.
    n : int
        Samples per dimension, a power of two and at least 8.
    L : float
        Half-width of the box.
    """

    d: int
    n: int
    L: float

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError(f"dimension must be >= 1, got {self.d}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ConfigError(f"n_per_dim must be a power of two >= 8, got {self.n}")
        if not self.L > 0:
            raise ConfigError(f"half_width must be positive, got {self.L}")
        object.__setattr__(self, "L", float(self.L))

    @property
    def dx(self):
        return 2.0 * self.L / self.n

    @property
    def dxi(self):
        return 1.0 / (2.0 * self.L)

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def size(self):
        return self.n**self.d

    @property
    def cell(self):
        """Spatial quadrature weight ``dx^d``."""
        return self.dx**self.d

    @property
    def freq_cell(self):
        """Frequency quadrature weight ``dxi^d``."""
        return self.dxi**self.d

    @property
    def xi_max(self):
        """Largest |xi_j| on the lattice (attained at j = -n/2)."""
        return self.n * self.dxi / 2.0

    @property
    def is_self_dual(self):
        """True when the spatial and frequency lattices coincide (n = 4 L^2)."""
        return math.isclose(self.dx, self.dxi, rel_tol=1e-12)

    @property
    def axes(self):
        return tuple(range(-self.d, 0))

    @cached_property
    def x(self):
        """1-D spatial coordinates."""
        return -self.L + self.dx * np.arange(self.n)

    @cached_property
    def xi(self):
        """1-D frequency coordinates."""
        return self.dxi * (np.arange(self.n) - self.n // 2)

    @cached_property
    def mesh(self):
        """Tuple of ``d`` coordinate arrays of shape ``self.shape``."""
        return tuple(np.meshgrid(*([self.x] * self.d), indexing="ij"))

    @cached_property
    def freq_mesh(self):
        return tuple(np.meshgrid(*([self.xi] * self.d), indexing="ij"))

    @cached_property
    def r2(self):
        """|x|^2 on the grid."""
        return sum(c**2 for c in self.mesh)

    @cached_property
    def xi2(self):
        """|xi|^2 on the frequency lattice."""
        return sum(c**2 for c in self.freq_mesh)

    def zeros(self):
        return Field(self, np.zeros(self.shape, dtype=complex))

    def field(self, func):
        """Sample ``func(*mesh)`` on the grid."""
        return Field(self, func(*self.mesh))


class Field:
    """Complex samples on a :class:`GridSpec`.

    The sample array is copied and frozen on construction, so a Field can be
    shared freely between workers.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        values = np.array(values, dtype=complex)
        if values.shape != grid.shape:
            raise ConfigError(
                f"field of shape {values.shape} does not match grid shape {grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("field contains non-finite samples")
        values.flags.writeable = False
        self.grid = grid
        self.values = values

    def __repr__(self):
        return f"Field(grid={self.grid!r}, norm={lp_norm(self, 2):.6g})"

    def _coerce(self, other):
        if isinstance(other, Field):
            if other.grid != self.grid:
                raise ConfigError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return Field(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return Field(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return Field(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Field(self.grid, self.values / self._coerce(other))

    def __neg__(self):
        return Field(self.grid, -self.values)

    def conj(self):
        return Field(self.grid, self.values.conj())

    def abs2(self):
        return Field(self.grid, np.abs(self.values) ** 2)


def _check(f, grid=None):
    if not isinstance(f, Field):
        raise ConfigError(f"expected a Field, got {type(f).__name__}")
    if grid is not None and f.grid != grid:
        raise ConfigError("grid mismatch")


def fft_c(values, grid):
    """Centered, quadrature-weighted forward transform on the trailing ``d`` axes."""
    axes = grid.axes
    out = sfft.fftn(sfft.ifftshift(values, axes=axes), axes=axes, workers=fft_workers())
    return sfft.fftshift(out, axes=axes) * grid.cell


def ifft_c(values, grid):
    """Inverse of :func:`fft_c`."""
    axes = grid.axes
    out = sfft.ifftn(sfft.ifftshift(values, axes=axes), axes=axes, workers=fft_workers())
    return sfft.fftshift(out, axes=axes) / grid.cell


def forward_fourier(f):
    """Approximate ``f^(xi) = int f(x) exp(-2 pi i x.xi) dx`` on the frequency lattice.

    The result is a Field on the same grid whose sample ``j`` (centered
    order) is the transform at ``xi_j``.  When ``grid.is_self_dual`` the
    frequency and spatial lattices coincide and the result can be read as an
    ordinary spatial field.
    """
    _check(f)
    return Field(f.grid, fft_c(f.values, f.grid))


def inverse_fourier(fhat):
    """Inverse of :func:`forward_fourier`."""
    _check(fhat)
    return Field(fhat.grid, ifft_c(fhat.values, fhat.grid))


def lp_norm_array(values, p, cell, axes=None):
    """Riemann-sum L^p norm over ``axes`` (all axes by default)."""
    a = np.abs(values)
    if p == math.inf:
        return np.max(a, axis=axes)
    if p == 1:
        return np.sum(a, axis=axes) * cell
    if p == 2:
        return np.sqrt(np.sum(a * a, axis=axes) * cell)
    return (np.sum(a**p, axis=axes) * cell) ** (1.0 / p)


def lp_norm(f, p):
    """``(sum |f|^p dx^d)^(1/p)``; the maximum of ``|f|`` for ``p = inf``."""
    _check(f)
    p = float(p)
    if not p >= 1:
        raise DomainError(f"L^p norm needs p >= 1, got {p}")
    return float(lp_norm_array(f.values, p, f.grid.cell))
