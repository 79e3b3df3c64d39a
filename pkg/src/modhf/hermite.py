"""Hermite functions and the harmonic-oscillator propagator.

The basis is built from the normalised three-term recurrence, so degrees
in the hundreds stay finite.  Coefficients are grid Riemann sums, the same
quadrature used by every other norm in the package.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ConfigError, TruncationWarning
from .grid import Field, GridSpec, fft_c, ifft_c, lp_norm_array

__all__ = [
    "HermiteBasis",
    "hermite_functions",
    "grid_capacity",
    "build_basis",
    "hermite_transform",
    "reconstruct",
    "spectral_projection",
    "hermite_multiplier",
    "harmonic_propagate",
    "energy",
    "apply_harmonic",
]

DEFAULT_DEGREE = {1: 128, 2: 64}
GRAM_TOL = 1e-10
RESIDUAL_TOL = 1e-6


def hermite_functions(K, x):
    """Rows ``h_0 .. h_K`` evaluated at ``x``, shape ``(K + 1, len(x))``."""
    x = np.asarray(x, dtype=float)
    h = np.empty((K + 1, x.size))
    h[0] = math.pi**-0.25 * np.exp(-0.5 * x**2)
    if K >= 1:
        h[1] = math.sqrt(2.0) * x * h[0]
    for k in range(1, K):
        h[k + 1] = x * math.sqrt(2.0 / (k + 1)) * h[k] - math.sqrt(k / (k + 1)) * h[k - 1]
    return h


def grid_capacity(grid, tol=GRAM_TOL, limit=512):
    """Largest 1-D degree ``K`` whose Gram matrix is within ``tol`` of identity.

    Two effects cap it: ``h_K`` must have decayed at ``|x| = L`` (it lives
    on ``|x| <~ sqrt(2K + 1)``), and its oscillations must be resolved by
    ``dx`` (frequency up to ``sqrt(2K + 1) / (2 pi)``).
    """
    h = hermite_functions(limit, grid.x)
    gram = (h @ h.T) * grid.dx
    err = np.abs(gram - np.eye(limit + 1))
    # worst entry of the leading (K+1) x (K+1) block, for every K
    lead = np.maximum.accumulate(np.tril(err).max(axis=1))
    bad = np.nonzero(lead > tol)[0]
    return int(bad[0] - 1) if bad.size else limit


@dataclass(frozen=True, eq=False)
class HermiteBasis:
    """Truncated tensor Hermite basis on a grid.

    Parameters
    ----------
    grid : GridSpec
    K : int
        Maximum total degree ``|alpha|``.
    h1 : ndarray
        1-D functions ``h_0 .. h_K`` sampled on ``grid.x``, shape ``(K+1, n)``.
    """

    grid: GridSpec
    K: int
    h1: np.ndarray = dc_field(repr=False)

    @property
    def d(self):
        return self.grid.d

    def degrees(self):
        """Total degree ``|alpha|`` of every stored coefficient slot."""
        k = np.arange(self.K + 1)
        if self.d == 1:
            return k
        return k[:, None] + k[None, :]

    def mask(self):
        """Slots with ``|alpha| <= K``."""
        return self.degrees() <= self.K

    def eigenvalues(self):
        return 2.0 * self.degrees() + self.d

    def gram_error(self):
        gram = (self.h1 @ self.h1.T) * self.grid.dx
        return float(np.abs(gram - np.eye(self.K + 1)).max())


def build_basis(grid, K=None, tol=GRAM_TOL):
    """Hermite basis of total degree ``K`` (default 128 for d=1, 64 for d=2).

    When the grid cannot hold ``K`` orthonormal functions to ``tol`` the
    degree is lowered to the grid capacity and a :class:`TruncationWarning`
    is emitted.
    """
    if grid.d not in (1, 2):
        raise ConfigError("Hermite basis is implemented for d = 1 and d = 2")
    requested = DEFAULT_DEGREE[grid.d] if K is None else int(K)
    if requested < 0:
        raise ConfigError(f"degree must be >= 0, got {requested}")
    cap = grid_capacity(grid, tol, limit=max(requested, 1))
    if cap < requested:
        warnings.warn(
            f"grid (L={grid.L:g}, n={grid.n}) resolves Hermite degree <= {cap}; "
            f"truncating from {requested}",
            TruncationWarning,
            stacklevel=2,
        )
    K = min(cap, requested)
    return HermiteBasis(grid=grid, K=K, h1=hermite_functions(K, grid.x))


def _coeffs(values, basis):
    """Quadrature coefficients on the trailing d axes (batched)."""
    h, dx = basis.h1, basis.grid.dx
    if basis.d == 1:
        return values @ h.T * dx
    c = np.einsum("am,...mn,bn->...ab", h, values, h, optimize=True) * dx * dx
    return c * basis.mask()


def _synth(coeffs, basis):
    h = basis.h1
    if basis.d == 1:
        return coeffs @ h
    return np.einsum("am,...ab,bn->...mn", h, coeffs * basis.mask(), h, optimize=True)


def reconstruct(coeffs, basis):
    """Field ``sum_alpha c_alpha Phi_alpha``."""
    return Field(basis.grid, _synth(np.asarray(coeffs), basis))


def hermite_transform(f, basis, warn=True):
    """Coefficients ``<f, Phi_alpha>`` and the reconstruction residual.

    Returns
    -------
    coeffs : ndarray
        Shape ``(K+1,)`` for d = 1 and ``(K+1, K+1)`` for d = 2 (entries
        with ``|alpha| > K`` are zero).
    residual : float
        ``||f - sum c_alpha Phi_alpha||_{L^2}``.
    """
    if f.grid != basis.grid:
        raise ConfigError("field and basis live on different grids")
    c = _coeffs(f.values, basis)
    residual = float(lp_norm_array(f.values - _synth(c, basis), 2, basis.grid.cell))
    if warn and residual > RESIDUAL_TOL:
        warnings.warn(
            f"Hermite truncation residual {residual:.3e} exceeds {RESIDUAL_TOL:g}",
            TruncationWarning,
            stacklevel=2,
        )
    return c, residual


def spectral_projection(f, basis, k):
    """``P_k f``: the component of ``f`` in eigenvalue ``2k + d``."""
    c, _ = hermite_transform(f, basis, warn=False)
    return reconstruct(np.where(basis.degrees() == k, c, 0), basis)


def hermite_multiplier(f, basis, m):
    """``m(H) f = sum_k m(2k + d) P_k f`` for a callable ``m``."""
    c, _ = hermite_transform(f, basis)
    return reconstruct(c * m(basis.eigenvalues()), basis)


def harmonic_propagate(f, basis, t, sign=-1):
    """``exp(sign * i t H) f`` with ``H = -Delta + |x|^2``.

    The default ``sign=-1`` gives the free flow of ``i d/dt psi = H psi``.
    ``sign=+1`` is the multiplier ``exp(+i t H)``.
    """
    if sign not in (-1, 1):
        raise ConfigError("sign must be +1 or -1")
    if t == 0:
        return f
    return hermite_multiplier(f, basis, lambda lam: np.exp(sign * 1j * t * lam))


def energy(f, basis):
    """``<H f, f>`` from the coefficients."""
    c, _ = hermite_transform(f, basis, warn=False)
    return float(np.sum(basis.eigenvalues() * np.abs(c) ** 2 * basis.mask()))


def apply_harmonic(f):
    """``H f`` by spectral differentiation (independent of the basis)."""
    grid = f.grid
    lap = ifft_c((2 * math.pi) ** 2 * grid.xi2 * fft_c(f.values, grid), grid)
    return Field(grid, lap + grid.r2 * f.values)
