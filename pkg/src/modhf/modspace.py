"""Modulation-space norms: STFT definition and frequency-uniform decomposition.

Two routes to ``||f||_{M^{p,q}_s}`` are provided:

* :func:`mod_norm_stft` integrates the short-time Fourier transform against
  a Gaussian window, with x running over the spatial grid and w over the
  frequency lattice.
* :func:`mod_norm_decomp` sums ``||box_k f||_{L^p}`` over integer frequency
  cubes, where ``box_k`` is the Fourier multiplier by a smooth partition of
  unity ``sigma_k``.

The two are equivalent norms, not equal ones; :mod:`modhf.verify` records
the empirical equivalence constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ConfigError, DomainError
from .grid import Field, GridSpec, fft_c, ifft_c, lp_norm_array

__all__ = [
    "WindowSpec",
    "NormParams",
    "DecompositionSpec",
    "bump_profile",
    "stft",
    "stft_matrix",
    "mod_norm_stft",
    "build_partition",
    "box_op",
    "box_all",
    "mod_norm_decomp",
    "mod_norm",
    "embedding_check",
]


def _as_exponent(value, name):
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "oo"):
            return math.inf
        value = float(value)
    value = float(value)
    if math.isnan(value) or value < 1:
        raise DomainError(f"{name} must lie in [1, inf], got {value}")
    return value


@dataclass(frozen=True)
class NormParams:
    """Exponents ``(p, q)`` and weight ``s`` of ``M^{p,q}_s``."""

    p: float
    q: float
    s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "p", _as_exponent(self.p, "p"))
        object.__setattr__(self, "q", _as_exponent(self.q, "q"))
        s = float(self.s)
        if not s >= 0:
            raise DomainError(f"weight exponent s must be >= 0, got {self.s}")
        object.__setattr__(self, "s", s)

    def label(self):
        def fmt(v):
            return "inf" if v == math.inf else f"{v:.6g}"

        return f"M^{{{fmt(self.p)},{fmt(self.q)}}}_{fmt(self.s)}"


@dataclass(frozen=True)
class WindowSpec:
    """Unit-L^2 Gaussian window ``pi^(-d/4) exp(-|x|^2/2)``.

    This is the ground state of ``-Delta + |x|^2``, which makes the
    harmonic propagator act on ``V_g f`` as an exact phase-space rotation.
    """

    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind != "gaussian":
            raise ConfigError(f"unsupported window kind {self.kind!r}")

    def evaluate(self, r2, d):
        return math.pi ** (-d / 4.0) * np.exp(-0.5 * r2)

    def samples(self, grid):
        """Window on the grid, renormalised to unit discrete L^2 norm."""
        g = self.evaluate(grid.r2, grid.d).astype(complex)
        g /= math.sqrt(np.sum(np.abs(g) ** 2) * grid.cell)
        return g


def _periodic_offset(x, L):
    """Minimal-image representative of ``x`` in ``[-L, L)``."""
    return (np.asarray(x) + L) % (2 * L) - L


def stft(f, g, x, w):
    """Single value ``V_g f(x, w) = <f, M_w T_x g>`` by quadrature.

    ``x`` and ``w`` are coordinate tuples (or scalars when d = 1).  The
    translated window is wrapped periodically onto the grid.
    """
    if not isinstance(f, Field):
        raise ConfigError("stft expects a Field")
    grid = f.grid
    x = np.atleast_1d(np.asarray(x, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if x.shape != (grid.d,) or w.shape != (grid.d,):
        raise ConfigError("x and w must have one coordinate per dimension")
    r2 = sum(_periodic_offset(m - xj, grid.L) ** 2 for m, xj in zip(grid.mesh, x))
    gx = g.evaluate(r2, grid.d) / _window_scale(g, grid)
    phase = np.exp(-2j * math.pi * sum(m * wj for m, wj in zip(grid.mesh, w)))
    return complex(np.sum(f.values * np.conj(gx) * phase) * grid.cell)


def _window_scale(g, grid):
    raw = g.evaluate(grid.r2, grid.d)
    return math.sqrt(np.sum(raw**2) * grid.cell)


def _stft_blocks(values, gvals, grid):
    """Yield blocks of ``V_g f`` on (spatial grid) x (frequency lattice).

    For d = 1 a single ``(n, n)`` block indexed ``[x, xi]`` is produced.  For
    d = 2 one ``(n, n, n)`` block per first translation coordinate, indexed
    ``[x2, xi1, xi2]``.
    """
    n, d = grid.n, grid.d
    half = n // 2
    if d == 1:
        idx = (np.arange(n)[None, :] - np.arange(n)[:, None] + half) % n
        yield fft_c(values[None, :] * np.conj(gvals[idx]), grid)
    elif d == 2:
        idx = (np.arange(n)[None, :] - np.arange(n)[:, None] + half) % n
        gconj = np.conj(gvals)
        for a1 in range(n):
            rows = gconj[idx[a1]]  # (m1, m2) with first coordinate shifted
            win = rows[:, idx].transpose(1, 0, 2)  # (a2, m1, m2)
            yield fft_c(values[None, :, :] * win, grid)
    else:
        raise ConfigError("bulk STFT is implemented for d = 1 and d = 2")


def stft_matrix(f, g=None):
    """Full STFT array, shape ``grid.shape * 2`` (translations first)."""
    g = g or WindowSpec()
    grid = f.grid
    blocks = list(_stft_blocks(f.values, g.samples(grid), grid))
    if grid.d == 1:
        return blocks[0]
    return np.stack(blocks, axis=0)


def mod_norm_stft(f, params, g=None):
    """``||f||_{M^{p,q}_s}`` from the STFT definition by lattice quadrature."""
    if not isinstance(f, Field):
        raise ConfigError("mod_norm_stft expects a Field")
    g = g or WindowSpec()
    grid = f.grid
    p, q, s = params.p, params.q, params.s
    gvals = g.samples(grid)
    acc = np.zeros(grid.shape)
    for block in _stft_blocks(f.values, gvals, grid):
        a = np.abs(block)
        if p == math.inf:
            acc = np.maximum(acc, a.max(axis=0))
        elif p == 1:
            acc += a.sum(axis=0)
        elif p == 2:
            acc += (a * a).sum(axis=0)
        else:
            acc += (a**p).sum(axis=0)
    if p == math.inf:
        inner = acc
    else:
        inner = (acc * grid.cell) ** (1.0 / p)
    if s:
        inner = inner * (1.0 + grid.xi2) ** (s / 2.0)
    return float(lp_norm_array(inner, q, grid.freq_cell))


def _theta(r):
    """C-infinity cutoff: 1 on [0, 1/2], 0 on [1, inf)."""
    r = np.abs(np.asarray(r, dtype=float))
    u = np.clip(2.0 * (1.0 - r), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return a / (a + b)


def bump_profile(xi):
    """Tensor bump ``rho(xi) = prod_j theta(|xi_j|)``; ``xi`` has shape (d, ...)."""
    xi = np.asarray(xi, dtype=float)
    out = np.ones(xi.shape[1:])
    for comp in xi:
        out = out * _theta(comp)
    return out


@dataclass(frozen=True, eq=False)
class DecompositionSpec:
    """Cached ``sigma_k`` for all integer ``k`` touching the frequency lattice."""

    grid: GridSpec
    radius: int
    ks: np.ndarray = dc_field(repr=False)
    factors: np.ndarray = dc_field(repr=False)  # (2*radius+1, n): 1-D sigma_k

    def index(self, k):
        k = tuple(int(v) for v in np.atleast_1d(k))
        if len(k) != self.grid.d:
            raise DomainError(f"lattice point {k} has wrong dimension")
        if max(abs(v) for v in k) > self.radius:
            raise DomainError(f"k = {k} lies outside the retained radius {self.radius}")
        return k

    def sigma(self, k):
        """``sigma_k`` sampled on the frequency lattice."""
        k = self.index(k)
        out = self.factors[k[0] + self.radius]
        for kj in k[1:]:
            out = np.multiply.outer(out, self.factors[kj + self.radius])
        return out

    def sigma_stack(self):
        return np.stack([self.sigma(k) for k in self.ks])

    def weights(self, s):
        norms = np.sqrt(np.sum(self.ks.astype(float) ** 2, axis=1))
        return (1.0 + norms) ** s


def build_partition(grid):
    """Smooth partition of unity ``sigma_k = rho_k / sum_l rho_l`` on the lattice."""
    if grid.xi_max < 3:
        raise ConfigError(
            f"frequency range |xi| <= {grid.xi_max:g} holds fewer than 3 unit cubes; "
            "increase n or decrease L"
        )
    R = int(math.ceil(grid.xi_max)) + 1
    ls = np.arange(-R, R + 1)
    xi = grid.xi
    rho = _theta(xi[None, :] - ls[:, None])  # (2R+1, n)
    total = rho.sum(axis=0)
    sig = rho / total
    live = np.nonzero(np.any(sig > 0, axis=1))[0]
    radius = int(np.max(np.abs(ls[live])))
    keep = (ls >= -radius) & (ls <= radius)
    factors = sig[keep]
    axes1 = np.arange(-radius, radius + 1)
    ks = np.array(np.meshgrid(*([axes1] * grid.d), indexing="ij")).reshape(grid.d, -1).T
    return DecompositionSpec(grid=grid, radius=radius, ks=ks, factors=factors)


def box_op(k, f, dec):
    """Frequency-uniform piece ``F^{-1} sigma_k F f``."""
    if f.grid != dec.grid:
        raise ConfigError("field and decomposition live on different grids")
    sig = dec.sigma(k)
    return Field(f.grid, ifft_c(sig * fft_c(f.values, f.grid), f.grid))


def box_all(f, dec):
    """All pieces at once, shape ``(len(dec.ks), *grid.shape)``."""
    if f.grid != dec.grid:
        raise ConfigError("field and decomposition live on different grids")
    fhat = fft_c(f.values, f.grid)
    return ifft_c(dec.sigma_stack() * fhat[None], f.grid)


def mod_norm_decomp(f, params, dec):
    """``(sum_k ||box_k f||_{L^p}^q (1+|k|)^{sq})^{1/q}``."""
    pieces = box_all(f, dec)
    grid = f.grid
    norms = lp_norm_array(pieces, params.p, grid.cell, axes=tuple(range(1, grid.d + 1)))
    if params.s:
        norms = norms * dec.weights(params.s)
    return float(lp_norm_array(norms, params.q, 1.0))


def mod_norm(f, params, method="stft", g=None, dec=None):
    """Dispatch to :func:`mod_norm_stft` or :func:`mod_norm_decomp`."""
    if method == "stft":
        return mod_norm_stft(f, params, g)
    if method == "decomp":
        return mod_norm_decomp(f, params, dec or build_partition(f.grid))
    raise ConfigError(f"unknown norm method {method!r}")


def embedding_check(f, src, dst, method="stft", g=None, dec=None):
    """Ratio ``||f||_dst / ||f||_src`` for an ordered embedding pair.

    Raises :class:`DomainError` unless ``p1 <= p2``, ``q1 <= q2`` and
    ``s2 <= s1``.
    """
    if not (src.p <= dst.p and src.q <= dst.q and dst.s <= src.s):
        raise DomainError(f"{src.label()} does not embed into {dst.label()} by index ordering")
    if src == dst:
        return 1.0
    if method == "decomp" and dec is None:
        dec = build_partition(f.grid)
    top = mod_norm(f, dst, method, g, dec)
    bottom = mod_norm(f, src, method, g, dec)
    if bottom == 0:
        return 0.0 if top == 0 else math.inf
    return top / bottom

