"""Dispersion symbols and the unimodular propagators they generate.

Symbols are written in the momentum variable ``D <-> 2 pi xi``: the
fractional symbol is ``|2 pi xi|^alpha`` and a polynomial symbol is
``sum_beta c_beta (2 pi xi)^beta``.  With this choice the Laplacian symbol
``|2 pi xi|^2`` is the symbol of ``-Delta`` and

    propagate(f, sym, t) = F^{-1}[exp(-i t Phi(xi)) F f]

solves ``i d/dt psi = Phi(D) psi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, DomainError
from .grid import Field, fft_c, ifft_c
from .modspace import bump_profile, mod_norm

__all__ = [
    "SymbolSpec",
    "symbol_values",
    "propagate",
    "multiplier_ratios",
    "fit_growth_exponent",
    "multiplier_growth_probe",
    "growth_exponent_bound",
    "hyperbolic_symbol",
    "kernel_l1_norm",
    "kernel_l1_norm_direct",
    "kernel_growth_fit",
]


@dataclass(frozen=True)
class SymbolSpec:
    """Real dispersion symbol ``Phi = phi o h``.

    Use the constructors :meth:`fractional`, :meth:`laplacian` and
    :meth:`polynomial` rather than filling the fields by hand.

    ``coeffs`` holds ``(multi_index, coefficient)`` pairs for polynomial
    symbols.  ``m1``, ``m2`` and ``lam`` are the growth and homogeneity
    parameters entering the multiplier bounds.
    """

    kind: str
    alpha: float = 2.0
    coeffs: tuple = ()
    m1: float = 2.0
    m2: float = 2.0
    lam: float = 1.0

    def __post_init__(self):
        if self.kind not in ("fractional", "polynomial", "laplacian"):
            raise ConfigError(f"unknown symbol kind {self.kind!r}")
        if self.kind == "fractional" and not self.alpha > 0:
            raise DomainError(f"fractional order must be positive, got {self.alpha}")
        if self.kind == "polynomial":
            if not self.coeffs:
                raise ConfigError("polynomial symbol needs at least one coefficient")
            for beta, c in self.coeffs:
                if any(b < 0 for b in beta):
                    raise ConfigError(f"negative multi-index {beta}")
                if isinstance(c, complex) and c.imag != 0:
                    raise ConfigError("polynomial symbol must be real-valued")
            if self.order < 1:
                raise ConfigError("polynomial symbol must have order >= 1")

    @classmethod
    def fractional(cls, alpha):
        alpha = float(alpha)
        return cls("fractional", alpha=alpha, m1=alpha, m2=alpha, lam=1.0)

    @classmethod
    def laplacian(cls):
        return cls("laplacian", alpha=2.0, m1=2.0, m2=2.0, lam=1.0)

    @classmethod
    def polynomial(cls, coeffs):
        """``coeffs`` maps multi-index tuples to real coefficients."""
        items = tuple(sorted((tuple(int(b) for b in k), float(v)) for k, v in dict(coeffs).items()))
        order = max(sum(b) for b, _ in items) if items else 0
        return cls("polynomial", alpha=float(order), coeffs=items, m1=float(order),
                   m2=float(order), lam=1.0)

    @property
    def order(self):
        if self.kind == "polynomial":
            return max(sum(b) for b, c in self.coeffs if c != 0) if self.coeffs else 0
        return self.alpha

    @property
    def label(self):
        if self.kind == "polynomial":
            terms = "+".join(f"{c:g}*D^{''.join(map(str, b))}" for b, c in self.coeffs)
            return f"poly[{terms}]"
        return f"{self.kind}[{self.alpha:g}]"

    def evaluate(self, xi):
        """Symbol at frequencies ``xi`` (sequence of d coordinate arrays)."""
        xi = [np.asarray(c, dtype=float) for c in xi]
        if self.kind == "polynomial":
            d = len(xi)
            out = np.zeros(np.broadcast(*xi).shape)
            for beta, c in self.coeffs:
                if len(beta) != d:
                    raise ConfigError(f"multi-index {beta} does not match dimension {d}")
                term = np.full(out.shape, c)
                for comp, b in zip(xi, beta):
                    if b:
                        term = term * (2 * math.pi * comp) ** b
                out = out + term
            return out
        r = 2 * math.pi * np.sqrt(sum(c**2 for c in xi))
        return r**self.alpha


@lru_cache(maxsize=64)
def symbol_values(sym, grid):
    """Symbol sampled on the grid's frequency lattice (cached, read-only)."""
    vals = sym.evaluate(grid.freq_mesh)
    if not np.all(np.isfinite(vals)):
        raise DomainError(f"symbol {sym.label} is not finite on the lattice")
    vals = np.ascontiguousarray(vals)
    vals.flags.writeable = False
    return vals


def propagate(f, sym, t):
    """``U(t) f = F^{-1}[exp(-i t Phi) F f]``; exactly unitary on the grid."""
    if not isinstance(f, Field):
        raise ConfigError("propagate expects a Field")
    if t == 0:
        return f
    mult = np.exp(-1j * float(t) * symbol_values(sym, f.grid))
    return Field(f.grid, ifft_c(mult * fft_c(f.values, f.grid), f.grid))


def growth_exponent_bound(sym, p, d):
    """Exponent ``d |1/p - 1/2|`` of the multiplier bound, plus the
    derivative loss ``d (m - 2) |1/2 - 1/p|`` for orders above two."""
    base = d * abs(1.0 / p - 0.5)
    m = sym.m1 * sym.lam if sym.kind != "polynomial" else sym.order
    loss = max(0.0, d * (m - 2.0) * abs(0.5 - 1.0 / p))
    return base, loss


def multiplier_ratios(sym, params, t_list, family, method="stft", dec=None):
    """``r(t) = max_f ||U(t) f|| / ||f||`` over ``family`` for each ``t``."""
    family = list(family)
    if not family:
        raise DomainError("multiplier probe needs a non-empty family")
    base = [mod_norm(f, params, method, dec=dec) for f in family]
    out = []
    for t in t_list:
        r = 0.0
        for f, b in zip(family, base):
            r = max(r, mod_norm(propagate(f, sym, t), params, method, dec=dec) / b)
        out.append(r)
    return np.array(out)


def fit_growth_exponent(t_list, ratios):
    """Least-squares slope of ``log r`` against ``log(1 + t)``.

    The model is ``r(t) = C (1 + |t|)^slope`` with ``C`` free, since the
    bounds being probed hold up to a constant.  Sample ``t`` well past the
    transient (``r`` of a narrow packet only reaches its power law once
    ``t`` exceeds the packet's spreading time).
    """
    x = np.log1p(np.abs(np.asarray(t_list, dtype=float)))
    y = np.log(np.asarray(ratios, dtype=float))
    if np.unique(x).size < 2:
        raise DomainError("growth fit needs at least two distinct |t|")
    return float(np.polyfit(x, y, 1)[0])


def multiplier_growth_probe(sym, params, t_list, family, method="stft", dec=None):
    """Fitted growth exponent of ``U(t)`` on ``M^{p,q}`` over a test family."""
    ratios = multiplier_ratios(sym, params, t_list, family, method, dec)
    return fit_growth_exponent(t_list, ratios)


def hyperbolic_symbol(z):
    """``P(xi, eta) = |xi|^2 - |eta|^2`` with z = (xi_1..xi_d, eta_1..eta_d)."""
    half = len(z) // 2
    return sum(c**2 for c in z[:half]) - sum(c**2 for c in z[half:])


def _hyperbolic_gradient(k):
    half = len(k) // 2
    return np.array([2.0 * v for v in k[:half]] + [-2.0 * v for v in k[half:]])


def _sigma_centered(grid):
    """``sigma_k(k + z)`` on the lattice ``z``; identical for every integer k."""
    z = grid.freq_mesh
    rho = bump_profile(np.stack(z))
    total = np.ones(grid.shape)
    for comp in z:
        total = total * sum(
            bump_profile(np.stack([comp - m])) for m in range(-2, 3)
        )
    return rho / total


def _check_kernel_grid(grid):
    if grid.xi_max < 1.5:
        raise ConfigError("kernel diagnostic needs the frequency lattice to cover [-1.5, 1.5]^d")


def kernel_l1_norm(t, k, grid, symbol=hyperbolic_symbol, gradient=_hyperbolic_gradient):
    """Discrete ``||F^{-1}(sigma_k exp(i t P))||_{L^1}``.

    Uses the translation/modulation invariance of the L^1 norm to replace
    ``P(z + k)`` by ``P(z + k) - P(k) - grad P(k) . z``, so the kernel stays
    centred on the grid for every ``k``.  ``P`` acts on raw frequencies.
    """
    _check_kernel_grid(grid)
    k = np.asarray(k, dtype=float)
    if k.shape != (grid.d,):
        raise ConfigError("k must have one entry per grid dimension")
    z = grid.freq_mesh
    shifted = [c + kj for c, kj in zip(z, k)]
    lam = symbol(shifted) - symbol(list(k)) - sum(gj * c for gj, c in zip(gradient(k), z))
    G = _sigma_centered(grid) * np.exp(1j * t * lam)
    kernel = ifft_c(G, grid)
    return float(np.sum(np.abs(kernel)) * grid.cell)


def kernel_l1_norm_direct(t, k, grid, symbol=hyperbolic_symbol):
    """Same quantity without the affine reduction (lattice shifted to ``k``)."""
    _check_kernel_grid(grid)
    z = grid.freq_mesh
    shifted = [c + kj for c, kj in zip(z, k)]
    G = _sigma_centered(grid) * np.exp(1j * t * symbol(shifted))
    kernel = ifft_c(G, grid)
    return float(np.sum(np.abs(kernel)) * grid.cell)


def kernel_growth_fit(t_list, norms, d):
    """Fit ``N(t) ~ C max(t^d, 1)``.

    Returns a dict with ``exponent`` (log-log slope over ``t >= 1``),
    ``constant`` (``max N(t) / max(t^d, 1)``) and ``small_t_spread``
    (``max/min`` of ``N`` over ``t <= 1``).
    """
    t = np.asarray(t_list, dtype=float)
    n = np.asarray(norms, dtype=float)
    shape = np.maximum(t**d, 1.0)
    big = t >= 1
    if big.sum() >= 2:
        exponent = float(np.polyfit(np.log(t[big]), np.log(n[big]), 1)[0])
    else:
        exponent = 0.0
    small = n[t <= 1]
    spread = float(small.max() / small.min()) if small.size else 1.0
    return {"exponent": exponent, "constant": float(np.max(n / shape)), "small_t_spread": spread}
