"""Frozen test families for the estimate checks.

All members are smooth, decay below ``1e-12`` at the edge of the reference
grid and carry negligible spectral content near the lattice edge, so norms
computed on the grid are stable under refinement.  Every member is
normalised to unit discrete L^2 norm on the grid it is sampled on.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import erf

from .errors import ConfigError
from .grid import Field, GridSpec
from .hermite import hermite_functions

__all__ = [
    "REFERENCE_GRID",
    "ISOMETRY_GRID",
    "FAMILY_SEED",
    "reference_profiles",
    "reference_family",
    "isometry_profiles",
    "isometry_family",
]

REFERENCE_GRID = GridSpec(1, 256, 8.0)
ISOMETRY_GRID = GridSpec(1, 1024, 24.0)
FAMILY_SEED = 20240611


def _gauss(x, w, x0=0.0):
    return np.exp(-math.pi * ((x - x0) / w) ** 2)


def _plateau(x, R, edge=0.6):
    """Smoothed indicator of ``[-R, R]`` with Gaussian-error-function edges."""
    return 0.5 * (erf((x + R) / edge) - erf((x - R) / edge))


def _hermite(k, x, x0=0.0):
    """``h_k`` rescaled to the width of ``exp(-pi x^2)``."""
    return hermite_functions(k, math.sqrt(2 * math.pi) * (np.asarray(x) - x0))[k]


def _band_limited(rng, band=2.0, spacing=0.25, envelope=6.0):
    freqs = np.arange(-band, band + spacing / 2, spacing)
    coef = rng.standard_normal(freqs.size) + 1j * rng.standard_normal(freqs.size)

    def f(x):
        x = np.asarray(x, dtype=float)
        wave = np.exp(2j * math.pi * np.multiply.outer(x, freqs)) @ coef
        return wave * np.exp(-math.pi * x**2 / envelope)

    return f


def reference_profiles():
    """``(id, callable)`` pairs of the 20 one-dimensional reference profiles."""
    rng = np.random.default_rng(FAMILY_SEED)
    out = [
        ("gauss_w0.5", lambda x: _gauss(x, 0.5)),
        ("gauss_w1", lambda x: _gauss(x, 1.0)),
        ("gauss_w2", lambda x: _gauss(x, 2.0)),
        ("chirp_w1.5_b1", lambda x: _gauss(x, 1.5) * np.exp(1j * math.pi * x**2)),
        ("chirp_w1_b2", lambda x: _gauss(x, 1.0) * np.exp(2j * math.pi * x**2)),
        ("chirp_w2_b-0.5", lambda x: _gauss(x, 2.0) * np.exp(-0.5j * math.pi * x**2)),
        ("plateau_R2_xi0", lambda x: _plateau(x, 2.0)),
        ("plateau_R3_xi1.5", lambda x: _plateau(x, 3.0) * np.exp(3j * math.pi * x)),
        ("plateau_R1.5_xi-2.5", lambda x: _plateau(x, 1.5) * np.exp(-5j * math.pi * x)),
        ("hermite_2", lambda x: _hermite(2, x)),
        ("hermite_5", lambda x: _hermite(5, x)),
        ("hermite_9", lambda x: _hermite(9, x)),
    ]
    for i in range(4):
        out.append((f"bandlimited_{i}", _band_limited(rng)))
    out += [
        ("shift_gauss_x2_w0.7", lambda x: _gauss(x, 0.7, 2.0)),
        ("shift_mod_hermite3", lambda x: _hermite(3, x, -1.5) * np.exp(2j * math.pi * x)),
        ("dilated_chirp", lambda x: _gauss(x, 0.8, 1.0) * np.exp(3j * math.pi * (x - 1.0) ** 2)),
        ("gauss_pair", lambda x: _gauss(x, 1.0, -2.5) + 0.5j * _gauss(x, 0.6, 2.0)),
    ]
    return out


def isometry_profiles():
    """``(id, callable)`` pairs of the six harmonic-isometry test profiles."""
    h0 = lambda x, x0=0.0: np.exp(-0.5 * (np.asarray(x) - x0) ** 2)  # noqa: E731
    return [
        ("ground", lambda x: h0(x)),
        ("displaced", lambda x: h0(x, 1.5)),
        ("squeezed", lambda x: np.exp(-0.5 * (x / 0.6) ** 2)),
        ("hermite_3", lambda x: _hermite(3, x)),
        ("modulated", lambda x: h0(x) * np.exp(2j * math.pi * 0.5 * x)),
        ("chirp", lambda x: h0(x) * np.exp(0.5j * x**2)),
    ]


def _sample(profiles, grid):
    if grid.d not in (1, 2):
        raise ConfigError("families are defined for d = 1 and d = 2")
    fields = []
    m = len(profiles)
    for i, (name, f) in enumerate(profiles):
        if grid.d == 1:
            vals = f(grid.x)
            fid = name
        else:
            # pair each profile with a fixed partner for the second axis
            pname, pf = profiles[(7 * i + 3) % m]
            vals = np.multiply.outer(f(grid.x), pf(grid.x))
            fid = f"{name}*{pname}"
        vals = np.asarray(vals, dtype=complex)
        vals = vals / math.sqrt(np.sum(np.abs(vals) ** 2) * grid.cell)
        fields.append((fid, Field(grid, vals)))
    return fields


def reference_family(grid=REFERENCE_GRID):
    """The 20 reference fields as ``(id, Field)`` pairs."""
    return _sample(reference_profiles(), grid)


def isometry_family(grid=ISOMETRY_GRID):
    """The six isometry fields as ``(id, Field)`` pairs."""
    return _sample(isometry_profiles(), grid)
