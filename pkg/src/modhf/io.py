"""Run artifacts: binary snapshot files and CSV tables.

Snapshot file layout (all integers little-endian):

=======  ==========================================================
offset   content
=======  ==========================================================
0        magic ``b"MODHF1\\n"`` (7 bytes)
7        ``uint64`` header length ``H`` in bytes
15       UTF-8 JSON header ``{"d", "n", "L", "N", "times", ...}``
15 + H   ``complex128`` samples (``<c16``: float64 real, float64 imag),
         C order, shape ``(len(times), N, n, ..., n)``
=======  ==========================================================

A single field is stored as a snapshot file with one time and ``N = 1``.
"""
from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grid import Field, GridSpec

__all__ = [
    "MAGIC",
    "write_snapshots",
    "read_snapshots",
    "write_field",
    "read_field",
    "write_diagnostics_csv",
    "write_csv",
    "fmt_float",
]

MAGIC = b"MODHF1\n"
DIAG_COLUMNS = ("t", "k", "mass", "m_norm_22", "m_norm_2q", "strichartz_acc", "picard_iters")


def fmt_float(x):
    """Shortest round-trip text for a float (``repr``), ``inf`` spelled out."""
    x = float(x)
    if x == float("inf"):
        return "inf"
    return repr(x)


def write_snapshots(path, grid, times, states, extra=None):
    """Write ``states`` (``(n_snap, N, *grid.shape)``) with grid metadata."""
    states = np.asarray(states, dtype="<c16")
    if states.ndim != grid.d + 2 or states.shape[2:] != grid.shape:
        raise ConfigError(f"states of shape {states.shape} do not match grid {grid.shape}")
    if states.shape[0] != len(times):
        raise ConfigError("one state block per time is required")
    header = {"d": grid.d, "n": grid.n, "L": grid.L, "N": int(states.shape[1]),
              "times": [float(t) for t in times]}
    if extra:
        header.update(extra)
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(states).tobytes())


def read_snapshots(path):
    """Inverse of :func:`write_snapshots`: ``(grid, times, states, header)``.

    Raises :class:`ConfigError` for any structural problem with the file.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if not raw.startswith(MAGIC) or len(raw) < len(MAGIC) + 8:
        raise ConfigError(f"{path} is not a snapshot file")
    (hlen,) = struct.unpack_from("<Q", raw, len(MAGIC))
    start = len(MAGIC) + 8
    try:
        header = json.loads(raw[start:start + hlen].decode("utf-8"))
        grid = GridSpec(int(header["d"]), int(header["n"]), float(header["L"]))
        times = [float(t) for t in header["times"]]
        N = int(header["N"])
    except (ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"malformed header in {path}: {exc}") from None
    body = raw[start + hlen:]
    shape = (len(times), N) + grid.shape
    if len(body) != 16 * int(np.prod(shape)):
        raise ConfigError(f"{path}: payload size does not match header")
    states = np.frombuffer(body, dtype="<c16").reshape(shape)
    if not np.all(np.isfinite(states)):
        raise ConfigError(f"{path} contains non-finite samples")
    return grid, times, states, header


def write_field(path, f):
    write_snapshots(path, f.grid, [0.0], f.values[None, None])


def read_field(path):
    grid, _, states, _ = read_snapshots(path)
    if states.shape[:2] != (1, 1):
        raise ConfigError(f"{path} holds {states.shape[1]} fields at {states.shape[0]} times")
    return Field(grid, states[0, 0])


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])


def write_diagnostics_csv(path, traj):
    diag = traj.diagnostics
    rows = []
    for i, t in enumerate(traj.times):
        for k in range(diag["mass"].shape[1]):
            rows.append((
                float(t), k, float(diag["mass"][i, k]), float(diag["m_norm_22"][i, k]),
                float(diag["m_norm_2q"][i, k]), float(diag["strichartz_acc"][i, k]),
                int(diag["picard_iters"][i]),
            ))
    write_csv(path, DIAG_COLUMNS, rows)
