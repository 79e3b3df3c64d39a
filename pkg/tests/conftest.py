import math
from pathlib import Path

import numpy as np
import pytest

from modhf.grid import Field, GridSpec, fft_c, ifft_c

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def gaussian(grid, center=0.0, width=1.0, momentum=0.0):
    """Unit-L^2 Gaussian packet ``exp(-(x-c)^2 / 2w^2 + 2 pi i k x)`` (d = 1)."""
    vals = np.exp(-((grid.x - center) ** 2) / (2 * width**2) + 2j * math.pi * momentum * grid.x)
    return Field(grid, vals / math.sqrt(np.sum(np.abs(vals) ** 2) * grid.cell))


def random_field(grid, rng, width=1.5, band=3.0):
    """Smooth random field: filtered complex noise times a Gaussian envelope."""
    noise = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    smooth = ifft_c(fft_c(noise, grid) * np.exp(-grid.xi2 / band**2), grid)
    vals = smooth * np.exp(-grid.r2 / (2 * width**2))
    return Field(grid, vals / math.sqrt(np.sum(np.abs(vals) ** 2) * grid.cell))


def l2(a, b=None, cell=1.0):
    diff = a if b is None else a - b
    return float(np.sqrt(np.sum(np.abs(diff) ** 2) * cell))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid1():
    return GridSpec(1, 256, 8.0)


@pytest.fixture(scope="session")
def grid2():
    return GridSpec(2, 64, 8.0)
