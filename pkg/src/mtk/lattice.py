"""Finite-difference solver for the damped, driven double-well field.

The canonical (dimensionless) equation is

    psi_tt - psi_xx + rho_t psi_t + psi^3 - psi - sigma = 0,

with ``rho_t = gamma / sqrt(M A)``; unit speed is the sound velocity v0.
Space uses the 3-point Laplacian. Time stepping is velocity Verlet in which
each half kick integrates ``v' = F - rho_t v`` exactly for frozen ``F``,
so the friction needs no stability limit and the scheme reduces to plain
velocity Verlet at ``rho_t = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import linregress

from .errors import CFLViolation, InsufficientSamples, InvalidInput, MultipleCrossings, NoFront, NonFinite, UnderResolved
from .traveling_wave import CubicRoots, cubic_roots, dimensionless_kink
from .units import DimensionlessSystem, MTParameters, nondimensionalize


@dataclass(frozen=True)
class Grid1D:
    n_sites: int
    dx: float
    x0: float = 0.0
    boundary: str = "dirichlet"

    def __post_init__(self):
        if self.n_sites < 16:
            raise InvalidInput("n_sites must be >= 16")
        if not self.dx > 0:
            raise InvalidInput("dx must be positive")
        if self.boundary not in ("dirichlet", "periodic"):
            raise InvalidInput(f"unknown boundary {self.boundary!r}")

    @classmethod
    def spanning(cls, x_min: float, x_max: float, dx: float, boundary: str = "dirichlet") -> "Grid1D":
        n = int(round((x_max - x_min) / dx))
        if boundary == "dirichlet":
            n += 1
        return cls(n_sites=n, dx=dx, x0=x_min, boundary=boundary)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n_sites)

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    def weights(self) -> np.ndarray:
        """Trapezoid weights for on-site densities."""
        w = np.full(self.n_sites, self.dx)
        if not self.periodic:
            w[0] = w[-1] = 0.5 * self.dx
        return w

    def bond_differences(self, u: np.ndarray) -> np.ndarray:
        """Forward differences u[i+1] - u[i] over every bond of the lattice."""
        if self.periodic:
            return np.roll(u, -1) - u
        return np.diff(u)


@dataclass
class LatticeState:
    """Field and its time derivative on a grid (dimensionless unless ``mode`` says otherwise)."""

    u: np.ndarray
    u_t: np.ndarray
    grid: Grid1D
    t: float = 0.0
    mode: str = "dimensionless"

    def __post_init__(self):
        self.u = np.array(self.u, dtype=float)
        self.u_t = np.array(self.u_t, dtype=float)
        n = self.grid.n_sites
        if self.u.shape != (n,) or self.u_t.shape != (n,):
            raise InvalidInput(f"state arrays must have shape ({n},)")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.u_t))):
            raise NonFinite("state contains non-finite values")
        if self.mode not in ("dimensionless", "physical"):
            raise InvalidInput(f"unknown mode {self.mode!r}")

    def copy(self) -> "LatticeState":
        return LatticeState(self.u.copy(), self.u_t.copy(), self.grid, self.t, self.mode)


def laplacian(u: np.ndarray, grid: Grid1D, out: np.ndarray | None = None) -> np.ndarray:
    """3-point Laplacian; zero on Dirichlet boundary sites."""
    if out is None:
        out = np.empty_like(u)
    inv = 1.0 / grid.dx**2
    if grid.periodic:
        np.subtract(np.roll(u, 1) + np.roll(u, -1), 2.0 * u, out=out)
        out *= inv
    else:
        out[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) * inv
        out[0] = out[-1] = 0.0
    return out


def verlet_advance(u, v, n_steps, dt, force, damping=0.0, f=None):
    """Advance ``(u, v)`` in place by ``n_steps`` damped velocity-Verlet steps.

    ``force(u)`` must return the acceleration without friction (zero on
    clamped sites). ``f`` is the force at the current ``u`` if already known.
    Returns the force at the final ``u`` for reuse.
    """
    if damping > 0:
        decay = math.exp(-0.5 * damping * dt)
        gain = -math.expm1(-0.5 * damping * dt) / damping
    else:
        decay, gain = 1.0, 0.5 * dt
    if f is None:
        f = force(u)
    for _ in range(n_steps):
        v *= decay
        v += gain * f
        u += dt * v
        f = force(u)
        v *= decay
        v += gain * f
    return f


@dataclass(frozen=True)
class Trajectory:
    """Result of `PhiFourChain.evolve`."""

    times: np.ndarray
    u: np.ndarray
    u_t: np.ndarray
    energies: np.ndarray
    track_times: np.ndarray
    track_positions: np.ndarray
    level: float | None
    final: LatticeState
    dt: float


@dataclass(frozen=True)
class FrontTrack:
    times: np.ndarray
    positions: np.ndarray
    level: float | None
    fitted_speed: float
    fit_stderr: float


@dataclass(frozen=True)
class PhiFourChain:
    """Dimensionless damped, driven double-well chain.

    Parameters
    ----------
    damping : float
        ``rho_t = gamma / sqrt(M A)``.
    drive : float
        ``sigma = q sqrt(B) A^(-3/2) E``.
    cfl_fraction : float
        Largest allowed ``dt / dx`` (the wave speed is 1).
    """

    damping: float = 0.0
    drive: float = 0.0
    cfl_fraction: float = 0.5

    def __post_init__(self):
        if self.damping < 0:
            raise InvalidInput("damping must be non-negative")

    @classmethod
    def from_parameters(cls, p: MTParameters, **kwargs) -> "PhiFourChain":
        ds = nondimensionalize(p)
        return cls(damping=ds.rho_tilde, drive=ds.sigma, **kwargs)

    @property
    def roots(self) -> CubicRoots:
        return cubic_roots(self.drive)

    def force(self, u: np.ndarray, grid: Grid1D) -> np.ndarray:
        f = laplacian(u, grid)
        onsite = u * (u * u - 1.0) - self.drive
        if grid.periodic:
            f -= onsite
        else:
            f[1:-1] -= onsite[1:-1]
        return f

    def potential(self, u: np.ndarray) -> np.ndarray:
        """On-site potential shifted so the deeper vacuum has zero density."""
        r = self.roots
        vmin = min(self._bare_potential(r.a), self._bare_potential(r.b))
        return self._bare_potential(u) - vmin

    def _bare_potential(self, u):
        u2 = u * u
        return 0.25 * u2 * u2 - 0.5 * u2 - self.drive * u

    def check_dt(self, dt: float, grid: Grid1D):
        if not dt > 0 or dt > self.cfl_fraction * grid.dx * (1 + 1e-12):
            raise CFLViolation(f"dt = {dt} exceeds {self.cfl_fraction} dx = {self.cfl_fraction * grid.dx}")

    def step(self, state: LatticeState, dt: float) -> LatticeState:
        """One time step; returns a new state."""
        self.check_dt(dt, state.grid)
        new = state.copy()
        verlet_advance(new.u, new.u_t, 1, dt, lambda u: self.force(u, state.grid), self.damping)
        if not (np.all(np.isfinite(new.u)) and np.all(np.isfinite(new.u_t))):
            raise NonFinite(f"non-finite field after step at t = {state.t + dt}")
        new.t = state.t + dt
        return new

    def total_energy(self, state: LatticeState) -> float:
        """Lattice energy: trapezoid on-site terms plus bond gradient terms."""
        g = state.grid
        onsite = 0.5 * state.u_t**2 + self.potential(state.u)
        grad = 0.5 * (g.bond_differences(state.u) / g.dx) ** 2
        return float(np.dot(g.weights(), onsite) + g.dx * grad.sum())

    def evolve(
        self,
        state: LatticeState,
        t_end: float,
        dt: float,
        observer_stride: int = 100,
        track: bool = True,
        level: float | None = None,
    ) -> Trajectory:
        """Integrate to ``t_end`` taking snapshots every ``observer_stride`` steps.

        The front is located after every step when ``track`` is set; steps
        where no single crossing exists are skipped in the track.
        """
        self.check_dt(dt, state.grid)
        if not t_end > state.t:
            raise InvalidInput("t_end must exceed the current time")
        if observer_stride < 1:
            raise InvalidInput("observer_stride must be >= 1")
        n_steps = int(round((t_end - state.t) / dt))
        grid = state.grid
        if track and level is None:
            level = _default_level(state)
        u, v = state.u.copy(), state.u_t.copy()
        t0 = state.t

        def force(x):
            return self.force(x, grid)

        snap_t, snap_u, snap_v, snap_e = [], [], [], []
        tr_t, tr_x = [], []

        def observe(i, cur):
            snap_t.append(t0 + i * dt)
            snap_u.append(cur.u.copy())
            snap_v.append(cur.u_t.copy())
            snap_e.append(self.total_energy(cur))

        def locate(i):
            try:
                x = _crossing(u, grid, level)
            except (NoFront, MultipleCrossings):
                return
            tr_t.append(t0 + i * dt)
            tr_x.append(x)

        observe(0, state)
        if track:
            locate(0)
        i = 0
        f = None
        while i < n_steps:
            chunk = 1 if track else min(observer_stride - i % observer_stride, n_steps - i)
            f = verlet_advance(u, v, chunk, dt, force, self.damping, f)
            i += chunk
            if track:
                locate(i)
            if i % observer_stride == 0 or i == n_steps:
                if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
                    raise NonFinite(f"non-finite field at t = {t0 + i * dt}")
                observe(i, LatticeState(u, v, grid, t0 + i * dt, state.mode))
        final = LatticeState(u, v, grid, t0 + n_steps * dt, state.mode)
        return Trajectory(
            times=np.array(snap_t),
            u=np.array(snap_u),
            u_t=np.array(snap_v),
            energies=np.array(snap_e),
            track_times=np.array(tr_t),
            track_positions=np.array(tr_x),
            level=level,
            final=final,
            dt=dt,
        )


def _default_level(state: LatticeState) -> float:
    u = state.u
    if state.grid.periodic:
        return 0.5 * (u.max() + u.min())
    return 0.5 * (u[0] + u[-1])


def _crossing(u: np.ndarray, grid: Grid1D, level: float) -> float:
    if np.ptp(u) < 1e-12:
        raise NoFront("field is uniform")
    above = u > level
    idx = np.flatnonzero(above[1:] != above[:-1])
    if idx.size == 0:
        raise NoFront(f"field never crosses level {level}")
    if idx.size > 1:
        raise MultipleCrossings(f"{idx.size} crossings of level {level}")
    i = idx[0]
    return grid.x0 + grid.dx * (i + (level - u[i]) / (u[i + 1] - u[i]))


def front_position(state: LatticeState, level: float | None = None) -> float:
    """Position where the field crosses ``level``, by linear interpolation.

    The default level is the mean of the two boundary values, which for a
    kink between vacua ``a`` and ``b`` is ``(a + b) / 2``.
    """
    if level is None:
        if np.ptp(state.u) < 1e-12:
            raise NoFront("field is uniform")
        level = _default_level(state)
    return _crossing(state.u, state.grid, level)


def init_kink(
    grid: Grid1D,
    roots: CubicRoots,
    v_init: float = 0.0,
    center: float = 0.0,
    orientation: int | None = None,
) -> LatticeState:
    """Sample the analytic front, moving at ``v_init`` (units of v0), on ``grid``.

    The profile is Lorentz-contracted by ``sqrt(1 - v_init^2)`` and ``u_t``
    is its exact co-moving derivative. Dirichlet end sites are set to the
    vacua with zero velocity.
    """
    if abs(v_init) >= 1:
        raise InvalidInput("|v_init| must be below the sound speed (1)")
    kink = dimensionless_kink(roots, orientation)
    gamma_l = math.sqrt(1.0 - v_init**2)
    width = kink.width * gamma_l
    if width < 4 * grid.dx:
        raise UnderResolved(f"kink width {width:.4g} < 4 dx = {4 * grid.dx:.4g}")
    xi = (grid.x - center) / gamma_l
    u = kink.psi(xi)
    u_t = -v_init / gamma_l * kink.dpsi(xi)
    if not grid.periodic:
        u[0], u[-1] = kink.left, kink.right
        u_t[0] = u_t[-1] = 0.0
    return LatticeState(u, u_t, grid)


def init_vacuum(grid: Grid1D, value: float) -> LatticeState:
    n = grid.n_sites
    return LatticeState(np.full(n, float(value)), np.zeros(n), grid)


def measure_speed(
    trajectory: Trajectory,
    t_window: tuple[float, float] | None = None,
    discard_fraction: float = 0.2,
) -> FrontTrack:
    """Least-squares front speed over ``t_window``.

    Without an explicit window the first ``discard_fraction`` of the run is
    dropped as transient.
    """
    t, x = trajectory.track_times, trajectory.track_positions
    if t_window is None:
        t_start = trajectory.times[0]
        t_stop = trajectory.final.t
        t_window = (t_start + discard_fraction * (t_stop - t_start), t_stop)
    sel = (t >= t_window[0]) & (t <= t_window[1])
    t, x = t[sel], x[sel]
    if t.size < 10:
        raise InsufficientSamples(f"{t.size} front samples in window {t_window}; need >= 10")
    fit = linregress(t, x)
    return FrontTrack(
        times=t,
        positions=x,
        level=trajectory.level,
        fitted_speed=float(fit.slope),
        fit_stderr=float(fit.stderr),
    )


def predicted_speed(damping: float, drive: float) -> float:
    """Selected front speed in units of v0 for the dimensionless chain."""
    d = cubic_roots(drive).d
    if damping == 0:
        return 1.0
    if d == 0:
        return 0.0
    return 1.0 / math.sqrt(1.0 + 2.0 * damping**2 / (9.0 * d * d))


def to_physical(state: LatticeState, ds: DimensionlessSystem) -> LatticeState:
    """Physical view of a dimensionless state: metres, seconds, m/s."""
    length = ds.rest_length
    grid = replace(state.grid, dx=state.grid.dx * length, x0=state.grid.x0 * length)
    return LatticeState(
        state.u * ds.amplitude_scale,
        state.u_t * ds.amplitude_scale / ds.time_scale,
        grid,
        state.t * ds.time_scale,
        mode="physical",
    )


def dimensionless_energy_to_si(energy: float, ds: DimensionlessSystem) -> float:
    return energy * ds.energy_scale
