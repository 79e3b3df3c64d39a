"""Time integration of the coupled Hartree-Fock systems.

Every system is written as ``i d/dt psi_k = A psi_k + N_k(psi)`` where ``A``
is the dispersion (a Fourier symbol or the harmonic oscillator) and

==========================  =============================
system                      ``N_k``
==========================  =============================
Fourier, Fock on            ``-V psi_k + F_k``
Fourier, Fock off           ``-V psi_k``
harmonic, Fock on           ``+V psi_k + F_k``
harmonic, Fock off          ``+V psi_k``
==========================  =============================

with ``V = sum_l K * |psi_l|^2`` and ``F_k = sum_l psi_l K * (conj(psi_l) psi_k)``.

Two schemes are available.  :func:`picard_step` solves the Duhamel formula
on one step by fixed-point iteration of a 4-stage Gauss-Legendre
collocation in the interaction picture; :func:`split_step` is a Strang
splitting of the dispersive and interaction flows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import BlowUpSuspected, ConfigError, StepDiverged
from .grid import Field, GridSpec, fft_c, ifft_c, lp_norm_array
from .hartree import HartreePotential, _convolve_values
from .hermite import _coeffs, _synth, build_basis
from .modspace import NormParams, build_partition, mod_norm
from .symbols import SymbolSpec, symbol_values

__all__ = [
    "ProblemSpec",
    "Trajectory",
    "FourierPropagator",
    "HermitePropagator",
    "make_propagator",
    "nonlinearity",
    "picard_step",
    "split_step",
    "integrate",
    "strichartz_pair",
    "gronwall_envelope",
]

PICARD_TOL = 1e-10
PICARD_MAX_ITER = 50
DT_FLOOR = 1e-6
CEILING_FACTOR = 1e6


def _gauss_legendre(stages):
    """Nodes ``c``, weights ``b`` and collocation matrix ``A`` on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(stages)
    c = (x + 1.0) / 2.0
    b = w / 2.0
    A = np.empty((stages, stages))
    P = np.polynomial.Polynomial
    for j in range(stages):
        others = np.delete(c, j)
        lj = P.fromroots(others) / np.prod(c[j] - others)
        anti = lj.integ()
        A[:, j] = anti(c) - anti(0.0)
    return c, b, A


GL_C, GL_B, GL_A = _gauss_legendre(4)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """One Cauchy problem.

    Parameters
    ----------
    grid : GridSpec
    gamma, kappa : float
        Kernel ``kappa |x|^-gamma`` with ``0 < gamma < d``.
    dispersion : SymbolSpec or "harmonic"
    fock_enabled : bool
        Include the exchange term (HF) or drop it (reduced HF).
    initial : tuple of Field
        ``psi_{0k}``, one per particle.
    T : float
        Horizon.
    radial_hint : bool
        Declares radial data for the fractional radial regime.
    zero_mode : str
        Zero-frequency policy of the kernel multiplier.
    hermite_degree : int or None
        Truncation degree for harmonic dispersion (package default if None).
    """

    grid: GridSpec
    gamma: float
    kappa: float
    dispersion: object
    fock_enabled: bool
    initial: tuple
    T: float
    radial_hint: bool = False
    zero_mode: str = "zero"
    hermite_degree: int | None = None

    def __post_init__(self):
        d = self.grid.d
        object.__setattr__(self, "initial", tuple(self.initial))
        if not self.initial:
            raise ConfigError("N must be >= 1 (no initial data given)")
        for f in self.initial:
            if not isinstance(f, Field) or f.grid != self.grid:
                raise ConfigError("every initial state must be a Field on the problem grid")
        if not 0 < self.gamma < d:
            raise ConfigError(f"gamma must satisfy 0 < gamma < d = {d}, got {self.gamma}")
        if not self.T > 0:
            raise ConfigError(f"horizon T must be positive, got {self.T}")
        if not (self.dispersion == "harmonic" or isinstance(self.dispersion, SymbolSpec)):
            raise ConfigError("dispersion must be a SymbolSpec or 'harmonic'")
        if self.radial_hint:
            lo = 2.0 * d / (2.0 * d - 1.0)
            ok = (
                d >= 2
                and isinstance(self.dispersion, SymbolSpec)
                and self.dispersion.kind == "fractional"
                and lo < self.dispersion.alpha < 2
            )
            if not ok:
                raise ConfigError(
                    "radial_hint applies only to fractional dispersion with "
                    f"{lo:g} < alpha < 2 in dimension d >= 2"
                )

    @property
    def N(self):
        return len(self.initial)

    @property
    def harmonic(self):
        return self.dispersion == "harmonic"

    @property
    def alpha(self):
        if self.harmonic:
            return 2.0
        return float(self.dispersion.order)

    def potential(self):
        return HartreePotential(self.grid, self.gamma, self.kappa, self.zero_mode)

    def initial_stack(self):
        return np.stack([f.values for f in self.initial])


@dataclass
class Trajectory:
    """Snapshots and diagnostics of one run.

    ``states`` has shape ``(n_snap, N, *grid.shape)``.  Every entry of
    ``diagnostics`` is an array of shape ``(n_snap, N)`` except
    ``picard_iters`` which is ``(n_snap,)`` (iterations of the step ending at
    that snapshot).  ``step_iterations`` lists the per-step counts.
    """

    grid: GridSpec
    times: list = dc_field(default_factory=list)
    states: list = dc_field(default_factory=list)
    diagnostics: dict = dc_field(default_factory=dict)
    step_iterations: list = dc_field(default_factory=list)
    strichartz: tuple = (2.0, 2.0)
    envelope: dict = dc_field(default_factory=dict)

    def state_fields(self, i):
        return [Field(self.grid, v) for v in self.states[i]]

    def final(self):
        return self.state_fields(-1)

    def mass_drift(self):
        m = np.asarray(self.diagnostics["mass"])
        return np.abs(m / m[0] - 1.0).max(axis=0)


class FourierPropagator:
    """Dispersion ``Phi(D)`` diagonal in the Fourier basis."""

    def __init__(self, grid, sym):
        self.grid = grid
        self.lam = np.asarray(symbol_values(sym, grid))

    def to_spectral(self, values):
        return fft_c(values, self.grid)

    def from_spectral(self, values):
        return ifft_c(values, self.grid)

    def l2(self, spec, axes):
        return np.sqrt(np.sum(np.abs(spec) ** 2, axis=axes) * self.grid.freq_cell)

    def phase(self, t):
        return np.exp(-1j * t * self.lam)


class HermitePropagator:
    """Harmonic oscillator ``-Delta + |x|^2`` diagonal in the Hermite basis."""

    def __init__(self, basis):
        self.grid = basis.grid
        self.basis = basis
        self.lam = basis.eigenvalues() * basis.mask()

    def to_spectral(self, values):
        return _coeffs(values, self.basis)

    def from_spectral(self, values):
        return _synth(values, self.basis)

    def l2(self, spec, axes):
        return np.sqrt(np.sum(np.abs(spec) ** 2, axis=axes))

    def phase(self, t):
        return np.exp(-1j * t * self.lam) * self.basis.mask()


def make_propagator(spec):
    if spec.harmonic:
        return HermitePropagator(build_basis(spec.grid, spec.hermite_degree))
    return FourierPropagator(spec.grid, spec.dispersion)


def nonlinearity(stack, spec, pot=None):
    """``N_k`` for a stack whose component axis sits just before the grid axes."""
    pot = pot or spec.potential()
    d = spec.grid.d
    comp = -(d + 1)
    if pot.kappa == 0:
        return np.zeros_like(stack)
    density = np.sum(np.abs(stack) ** 2, axis=comp, keepdims=True)
    V = _convolve_values(density, pot).real
    sign = 1.0 if spec.harmonic else -1.0
    out = sign * V * stack
    if spec.fock_enabled:
        left = np.expand_dims(np.conj(stack), comp)  # [..., l, 1, x]
        right = np.expand_dims(stack, comp - 1)  # [..., 1, k, x]
        conv = _convolve_values(left * right, pot)  # [..., l, k, x]
        out = out + np.sum(np.expand_dims(stack, comp) * conv, axis=comp - 1)
    return out


def _as_stack(states):
    if isinstance(states, np.ndarray):
        return states
    return np.stack([f.values for f in states])


def picard_step(states, spec, t0, dt, tol=PICARD_TOL, max_iter=PICARD_MAX_ITER, *,
                prop=None, pot=None):
    """Advance ``states`` by ``dt`` through the Duhamel fixed point.

    In the interaction picture ``v(s) = U(-s) psi(t0 + s)`` the equation
    reads ``v' = -i U(-s) N(U(s) v)``.  Four Gauss-Legendre collocation
    stages are iterated from the free-flow guess until the end-of-step
    value moves by less than ``tol`` in L^2 (max over components).

    Returns
    -------
    states : list of Field (or ndarray if an array was given)
    iterations : int

    Raises
    ------
    StepDiverged
        ``max_iter`` iterations without reaching ``tol``.
    """
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if not tol > 0:
        raise ConfigError(f"tol must be positive, got {tol}")
    array_in = isinstance(states, np.ndarray)
    stack = _as_stack(states)
    prop = prop or make_propagator(spec)
    pot = pot or spec.potential()
    spec_axes = tuple(range(-prop.lam.ndim, 0))

    v0 = prop.to_spectral(stack)
    if pot.kappa == 0:
        out = prop.from_spectral(prop.phase(dt) * v0)
        return (out if array_in else [Field(spec.grid, v) for v in out]), 1

    s = GL_C * dt
    fwd = np.stack([prop.phase(si) for si in s])[:, None]  # U(s_i), broadcast over N
    back = np.stack([np.conj(prop.phase(si)) for si in s])[:, None]
    if isinstance(prop, HermitePropagator):
        back = back * prop.basis.mask()
    V = np.broadcast_to(v0, (len(s),) + v0.shape)
    v1_prev = v0
    for it in range(1, max_iter + 1):
        phys = prop.from_spectral(fwd * V)
        G = -1j * back * prop.to_spectral(nonlinearity(phys, spec, pot))
        V = v0 + dt * np.tensordot(GL_A, G, axes=(1, 0))
        v1 = v0 + dt * np.tensordot(GL_B, G, axes=(0, 0))
        if not np.all(np.isfinite(v1)):
            raise StepDiverged(f"non-finite iterate after {it} sweeps", it, math.inf)
        change = float(np.max(prop.l2(v1 - v1_prev, spec_axes)))
        v1_prev = v1
        if change < tol:
            out = prop.from_spectral(prop.phase(dt) * v1)
            return (out if array_in else [Field(spec.grid, v) for v in out]), it
    raise StepDiverged(f"no contraction to {tol:g} in {max_iter} sweeps (last change {change:.3e})",
                       max_iter, change)


def _interaction_substep(stack, spec, pot, tau, tol=PICARD_TOL, max_iter=PICARD_MAX_ITER):
    """Flow of ``i psi' = N(psi)`` over ``tau``.

    Without exchange the potential ``V`` is constant along this flow, so the
    flow is the exact phase rotation ``exp(-+ i tau V)``.  With exchange the
    implicit midpoint rule is used: the operator is frozen at the midpoint
    and the resulting linear problem is solved by fixed-point iteration.
    """
    if pot.kappa == 0:
        return stack
    if not spec.fock_enabled:
        density = np.sum(np.abs(stack) ** 2, axis=0, keepdims=True)
        V = _convolve_values(density, pot).real
        sign = 1.0 if spec.harmonic else -1.0
        return np.exp(-1j * sign * tau * V) * stack
    cell = spec.grid.cell
    axes = tuple(range(1, stack.ndim))
    new = stack
    for it in range(max_iter):
        mid = 0.5 * (stack + new)
        nxt = stack - 1j * tau * nonlinearity(mid, spec, pot)
        change = float(np.max(np.sqrt(np.sum(np.abs(nxt - new) ** 2, axis=axes) * cell)))
        new = nxt
        if change < tol:
            return new
    raise StepDiverged(f"midpoint solve did not converge in {max_iter} sweeps", max_iter, change)


def split_step(states, spec, t0, dt, *, prop=None, pot=None):
    """Strang step: half interaction, full dispersion, half interaction."""
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    array_in = isinstance(states, np.ndarray)
    stack = _as_stack(states)
    prop = prop or make_propagator(spec)
    pot = pot or spec.potential()
    stack = _interaction_substep(stack, spec, pot, dt / 2)
    stack = prop.from_spectral(prop.phase(dt) * prop.to_spectral(stack))
    stack = _interaction_substep(stack, spec, pot, dt / 2)
    return (stack if array_in else [Field(spec.grid, v) for v in stack]), 1


def strichartz_pair(spec):
    """Space-time exponents ``(q, r)`` tracked by the accumulator."""
    d, g = spec.grid.d, spec.gamma
    r = 4.0 * d / (2.0 * d - g)
    q = 8.0 / g if spec.harmonic else 4.0 * spec.alpha / g
    return q, r


def gronwall_envelope(times, h, spec):
    """Exponential envelope for ``h(t)`` implied by ``h^b' <= C (1 + int h^b')``.

    ``b`` comes from the admissible pair ``(2b, 4)``, i.e. ``b = 2 alpha / d``,
    and ``b'`` is its dual exponent.  ``C`` is the smallest constant making
    the integral inequality hold along the run; the Gronwall consequence is
    ``h(t) <= (C exp(C t))^(1/b')``.  ``escape`` is ``max h / envelope``
    and must not exceed 1.
    """
    t = np.asarray(times, dtype=float)
    h = np.asarray(h, dtype=float)
    beta = 2.0 * spec.alpha / spec.grid.d
    bp = beta / (beta - 1.0) if beta > 1 else math.inf
    if not math.isfinite(bp):
        return {"beta": beta, "beta_dual": bp, "C": math.nan, "escape": math.nan,
                "hypothesis_ok": False}
    hb = h**bp
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (hb[1:] + hb[:-1]) * np.diff(t))])
    C = float(np.max(hb / (1.0 + integral)))
    env = (C * np.exp(C * t)) ** (1.0 / bp)
    return {
        "beta": beta,
        "beta_dual": bp,
        "C": C,
        "envelope": env,
        "escape": float(np.max(h / env)),
        "hypothesis_ok": spec.gamma < spec.grid.d / 2.0,
    }


def _x_norm(stack, spec, dec, q_x):
    params = NormParams(2, q_x)
    return [mod_norm(Field(spec.grid, v), params, "decomp", dec=dec) for v in stack]


def integrate(spec, dt, snapshot_stride=1, scheme="picard", tol=PICARD_TOL,
              max_iter=PICARD_MAX_ITER, dt_floor=DT_FLOOR, ceiling_factor=CEILING_FACTOR,
              norm_method="decomp"):
    """Run ``spec`` to its horizon.

    Each nominal step of size ``dt`` that fails to converge is retried as
    two half steps, recursively, down to ``dt_floor``.  The X-norm
    ``sum_k ||psi_k||_{M^{2, 2d/(d+gamma)}}`` is checked at snapshots
    against ``ceiling_factor`` times its initial value.

    Raises
    ------
    BlowUpSuspected
        Step size exhausted, non-finite state, or X-norm above the ceiling.
    """
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if snapshot_stride < 1:
        raise ConfigError("snapshot_stride must be >= 1")
    if scheme not in ("picard", "split"):
        raise ConfigError(f"unknown scheme {scheme!r}")
    grid = spec.grid
    prop = make_propagator(spec)
    pot = spec.potential()
    dec = build_partition(grid)
    d, g = grid.d, spec.gamma
    q_x = 2.0 * d / (d + g)
    p22, p2q = NormParams(2, 2), NormParams(2, q_x)
    qs, rs = strichartz_pair(spec)
    n_steps = max(1, int(math.ceil(spec.T / dt - 1e-9)))

    stack = spec.initial_stack()
    if spec.harmonic:
        stack = prop.from_spectral(prop.to_spectral(stack))
    traj = Trajectory(grid=grid, strichartz=(qs, rs))
    diag = {k: [] for k in ("mass", "m_norm_22", "m_norm_2q", "strichartz_acc", "picard_iters")}
    acc = np.zeros(spec.N)
    lr_prev = lp_norm_array(stack, rs, grid.cell, axes=grid.axes) ** qs

    def norms(st):
        fields = [Field(grid, v) for v in st]
        m22 = [mod_norm(f, p22, norm_method, dec=dec) for f in fields]
        m2q = [mod_norm(f, p2q, norm_method, dec=dec) for f in fields]
        return m22, m2q

    def record(t, st, iters):
        m22, m2q = norms(st)
        traj.times.append(float(t))
        traj.states.append(np.array(st))
        diag["mass"].append(lp_norm_array(st, 2, grid.cell, axes=grid.axes))
        diag["m_norm_22"].append(m22)
        diag["m_norm_2q"].append(m2q)
        diag["strichartz_acc"].append(acc ** (1.0 / qs))
        diag["picard_iters"].append(iters)
        return sum(m2q)

    x0 = record(0.0, stack, 0)
    ceiling = ceiling_factor * x0

    def advance(st, t0, h):
        try:
            if scheme == "picard":
                return picard_step(st, spec, t0, h, tol, max_iter, prop=prop, pot=pot)
            return split_step(st, spec, t0, h, prop=prop, pot=pot)
        except StepDiverged:
            if h / 2 < dt_floor:
                raise BlowUpSuspected(f"step size fell below {dt_floor:g} at t = {t0:.6g}", t0,
                                      math.inf) from None
            st, i1 = advance(st, t0, h / 2)
            st, i2 = advance(st, t0 + h / 2, h / 2)
            return st, i1 + i2

    t = 0.0
    for step in range(1, n_steps + 1):
        h = min(dt, spec.T - t) if step == n_steps else dt
        stack, iters = advance(stack, t, h)
        t = spec.T if step == n_steps else step * dt
        if not np.all(np.isfinite(stack)):
            raise BlowUpSuspected(f"non-finite state at t = {t:.6g}", t, math.inf)
        traj.step_iterations.append(iters)
        lr = lp_norm_array(stack, rs, grid.cell, axes=grid.axes) ** qs
        acc += 0.5 * h * (lr + lr_prev)
        lr_prev = lr
        if step % snapshot_stride == 0 or step == n_steps:
            x = record(t, stack, iters)
            if x > ceiling:
                raise BlowUpSuspected(f"X-norm {x:.3e} exceeds ceiling {ceiling:.3e} at t = {t:.6g}",
                                      t, x)
    traj.diagnostics = {k: np.asarray(v) for k, v in diag.items()}
    h_curve = traj.diagnostics["m_norm_2q"].sum(axis=1)
    traj.envelope = gronwall_envelope(traj.times, h_curve, spec)
    return traj
