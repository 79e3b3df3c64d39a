"""Riesz-potential interaction: Hartree factor, Fock exchange and H_gamma.

The kernel ``K(x) = kappa |x|^(-gamma)`` acts as the Fourier multiplier

    K^(xi) = kappa C(d, gamma) |xi|^(gamma - d),
    C(d, gamma) = pi^(gamma - d/2) Gamma((d - gamma)/2) / Gamma(gamma/2).

The multiplier is singular at ``xi = 0``.  Two zero-mode policies exist:

``"zero"``
    ``K^(0) = 0``.  On the torus this shifts the potential by a constant,
    which only multiplies every state by a common phase.
``"zeta"``
    ``K^(0)`` is the lattice-sum correction that makes the periodic sum
    approximate the integral over R^d.  It comes from the expansion
    ``h^d sum_{j != 0} |h j|^(-a) g(h j) = int |xi|^(-a) g + h^(d-a) Z_d(a) g(0) + ...``
    with ``Z_d(a) = sum_{k in Z^d, k != 0} |k|^(-a)`` (an Epstein zeta value).
    Use it when pointwise values of ``K * f`` on R^d matter.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import mpmath
import numpy as np

from .errors import ConfigError, DomainError
from .grid import Field, GridSpec, fft_c, ifft_c, lp_norm_array

__all__ = [
    "riesz_constant",
    "epstein_zeta",
    "HartreePotential",
    "riesz_convolve",
    "hartree_factor",
    "fock_term",
    "fock_all",
    "hartree_all",
    "trilinear",
    "kernel_split",
]

ZERO_MODES = ("zero", "zeta")


def riesz_constant(d, gamma):
    """``C(d, gamma)`` with ``F[|x|^-gamma] = C |xi|^(gamma - d)``."""
    return math.pi ** (gamma - d / 2.0) * math.gamma((d - gamma) / 2.0) / math.gamma(gamma / 2.0)


def epstein_zeta(d, a):
    """``Z_d(a) = sum_{k in Z^d \\ 0} |k|^-a`` (analytically continued).

    Uses ``Z_1(a) = 2 zeta(a)`` and ``Z_2(a) = 4 zeta(a/2) beta(a/2)`` with
    ``beta`` the Dirichlet beta function.
    """
    if d == 1:
        return float(2 * mpmath.zeta(a))
    if d == 2:
        s = mpmath.mpf(a) / 2
        beta = (mpmath.zeta(s, 0.25) - mpmath.zeta(s, 0.75)) / mpmath.power(4, s)
        return float(4 * mpmath.zeta(s) * beta)
    raise ConfigError("lattice zeta correction is implemented for d = 1 and d = 2")


@dataclass(frozen=True)
class HartreePotential:
    """``kappa |x|^(-gamma)`` on a grid.

    Parameters
    ----------
    grid : GridSpec
    gamma : float
        Singularity order, ``0 < gamma < d``.
    kappa : float
        Coupling; positive is defocusing.
    zero_mode : {"zero", "zeta"}
        Treatment of the singular ``xi = 0`` sample.
    """

    grid: GridSpec
    gamma: float
    kappa: float = 1.0
    zero_mode: str = "zero"

    def __post_init__(self):
        d = self.grid.d
        if not 0 < self.gamma < d:
            raise ConfigError(f"gamma must satisfy 0 < gamma < d = {d}, got {self.gamma}")
        if self.zero_mode not in ZERO_MODES:
            raise ConfigError(f"zero_mode must be one of {ZERO_MODES}, got {self.zero_mode!r}")
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def constant(self):
        return riesz_constant(self.grid.d, self.gamma)

    def zero_value(self):
        """Multiplier value used at ``xi = 0``."""
        if self.zero_mode == "zero":
            return 0.0
        d = self.grid.d
        a = d - self.gamma
        return -self.kappa * self.constant * epstein_zeta(d, a) * self.grid.dxi ** (-a)

    @cached_property
    def multiplier(self):
        """``K^`` on the frequency lattice (read-only)."""
        xi2 = self.grid.xi2
        with np.errstate(divide="ignore"):
            m = self.kappa * self.constant * xi2 ** ((self.gamma - self.grid.d) / 2.0)
        m[xi2 == 0] = self.zero_value()
        m.flags.writeable = False
        return m


def _values(f):
    return f.values if isinstance(f, Field) else np.asarray(f)


def _convolve_values(values, pot):
    return ifft_c(pot.multiplier * fft_c(values, pot.grid), pot.grid)


def riesz_convolve(f, pot):
    """``K * f`` as the multiplier ``F^{-1}[K^ f^]``."""
    if f.grid != pot.grid:
        raise ConfigError("field and potential live on different grids")
    return Field(f.grid, _convolve_values(f.values, pot))


def _check_states(states, pot):
    states = list(states)
    if not states:
        raise DomainError("need at least one state")
    for s in states:
        if s.grid != pot.grid:
            raise ConfigError("states and potential live on different grids")
    return states


def hartree_factor(states, pot):
    """Real potential ``sum_l K * |psi_l|^2``."""
    states = _check_states(states, pot)
    density = sum(np.abs(s.values) ** 2 for s in states)
    return Field(pot.grid, _convolve_values(density, pot).real)


def fock_term(k, states, pot):
    """Exchange term ``sum_l psi_l (K * (conj(psi_l) psi_k))`` for 0-based ``k``."""
    states = _check_states(states, pot)
    if not 0 <= k < len(states):
        raise DomainError(f"component index {k} out of range for N = {len(states)}")
    psi_k = states[k].values
    stack = np.stack([s.values for s in states])
    conv = _convolve_values(np.conj(stack) * psi_k, pot)
    return Field(pot.grid, np.sum(stack * conv, axis=0))


def fock_all(stack, pot):
    """Exchange terms for every component of an ``(N, *shape)`` array."""
    pair = np.conj(stack)[:, None] * stack[None, :]  # [l, k] = conj(psi_l) psi_k
    conv = _convolve_values(pair, pot)
    return np.einsum("l...,lk...->k...", stack, conv)


def hartree_all(stack, pot):
    """Real Hartree potential from an ``(N, *shape)`` array."""
    density = np.sum(np.abs(stack) ** 2, axis=0)
    return _convolve_values(density, pot).real


def trilinear(f, g, h, pot):
    """``H_gamma(f, g, h) = (K * (f conj(g))) h``."""
    for u in (f, g, h):
        if u.grid != pot.grid:
            raise ConfigError("fields and potential live on different grids")
    return Field(pot.grid, _convolve_values(f.values * np.conj(g.values), pot) * h.values)


def kernel_split(pot, q):
    """Sizes of the low/high frequency pieces of ``K^``.

    Returns a dict with ``k1_l1`` (lattice ``L^1`` norm of ``K^`` on
    ``|xi| <= 1``, zero mode excluded), ``k1_l1_exact`` (the continuum value
    ``|kappa| C |S^{d-1}| / gamma``) and ``k2_lq`` (lattice ``L^q`` norm on
    ``|xi| > 1``).
    """
    grid = pot.grid
    d = grid.d
    xi2 = grid.xi2
    m = np.abs(pot.multiplier)
    low = (xi2 <= 1.0) & (xi2 > 0)
    high = xi2 > 1.0
    sphere = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
    return {
        "k1_l1": float(np.sum(m[low]) * grid.freq_cell),
        "k1_l1_exact": abs(pot.kappa) * pot.constant * sphere / pot.gamma,
        "k2_lq": float(lp_norm_array(m[high], q, grid.freq_cell)),
    }
