"""Gaussian-smeared (mean-field) quantum corrections to the kink.

Quantum fluctuations of width ``Sigma = G(x, x) - G0(x, x)`` replace every
potential derivative ``U^(n)(z)`` by its heat-kernel smearing

    M^(n)(z) = exp(Sigma/2 d^2/dz^2) U^(n)(z) = E[U^(n)(z + w)],  w ~ N(0, Sigma),

which for polynomials is the finite sum over ``Sigma^k / (2^k k!) U^(n+2k)``.
The mean field ``C`` and its momentum ``D`` then follow the Hamilton flow
``C' = D``, ``D' = C_xx - M^(1)(C)`` with the kernels held fixed.

Lattice conventions: ``G`` and ``G0`` are covariance matrices of the site
variables, so ``Sigma_i = G_ii - G0_ii``; the momentum covariance is
``G^-1 / 4 + 4 Pi G Pi`` for the site momenta ``p_i = dx * pi_i``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .errors import CFLViolation, InvalidInput, SingularKernel, SymmetryRestored
from .lattice import Grid1D, laplacian, verlet_advance
from .traveling_wave import KinkSolution, cubic_roots, dimensionless_kink, ode_residual, selection_rho, standard_grid

MAX_DEGREE = 12


def _check_poly(U: Polynomial) -> Polynomial:
    if not isinstance(U, Polynomial):
        U = Polynomial(U)
    if U.degree() > MAX_DEGREE:
        raise InvalidInput(f"polynomial degree {U.degree()} exceeds {MAX_DEGREE}")
    if not np.all(np.isfinite(U.coef)):
        raise InvalidInput("polynomial coefficients must be finite")
    return U


def canonical_potential(drive: float = 0.0, offset: float = 0.0) -> Polynomial:
    """Dimensionless double well ``-z^2/2 + z^4/4 - drive z + offset``."""
    return Polynomial([offset, -drive, -0.5, 0.0, 0.25])


def gaussian_smear(U, Sigma: float, n: int = 0) -> Polynomial:
    """Heat-kernel smearing of the ``n``-th derivative of ``U`` at width ``Sigma``."""
    U = _check_poly(U)
    if Sigma < 0:
        raise InvalidInput("Sigma must be non-negative")
    if n < 0:
        raise InvalidInput("derivative order must be non-negative")
    term = U.deriv(n) if n else U
    out = term.copy()
    k = 0
    while term.degree() >= 2:
        term = term.deriv(2)
        k += 1
        out = out + term * (Sigma**k / (2**k * math.factorial(k)))
    return out


def smeared_derivative(U, Sigma, n: int, z) -> np.ndarray:
    """Evaluate ``M^(n)(z)`` for per-site widths ``Sigma`` (scalar or array)."""
    U = _check_poly(U)
    Sigma = np.asarray(Sigma, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(Sigma < 0):
        raise InvalidInput("Sigma must be non-negative")
    term = U.deriv(n) if n else U
    out = np.zeros(np.broadcast(z, Sigma).shape)
    weight = np.ones_like(Sigma)
    k = 0
    while True:
        out = out + weight * term(z)
        if term.degree() < 2:
            break
        term = term.deriv(2)
        k += 1
        weight = weight * Sigma / (2 * k)
    return out


@dataclass(frozen=True)
class QuantumKink:
    """Quantum-corrected kink of the smeared canonical double well.

    The smeared force is ``z^3 - (1 - 3 Sigma) z - drive``; its vacua and
    front follow from the classical machinery with ``m2 = 1 - 3 Sigma``.
    """

    Sigma: float
    drive: float
    solution: KinkSolution
    classical: KinkSolution
    rho: float
    residual: float

    @property
    def m2(self) -> float:
        return self.solution.roots.m2

    @property
    def vacua(self) -> tuple[float, float]:
        return (self.solution.roots.a, self.solution.roots.b)

    @property
    def rho_selected(self) -> float:
        return self.solution.rho_selected


def modified_soliton_solve(
    Sigma: float, drive: float = 0.0, rho: float | None = None, orientation: int | None = None
) -> QuantumKink:
    """Solve the smeared traveling-wave equation for constant ``Sigma``.

    ``residual`` is the maximum ODE residual of the returned profile at
    ``rho`` (default: the selected value) on the standard grid.
    """
    if Sigma < 0:
        raise InvalidInput("Sigma must be non-negative")
    m2 = 1.0 - 3.0 * Sigma
    if m2 <= 0:
        raise SymmetryRestored(f"1 - 3 Sigma = {m2} <= 0: no broken-symmetry vacua")
    roots = cubic_roots(drive, m2=m2)
    sol = dimensionless_kink(roots, orientation)
    classical = dimensionless_kink(cubic_roots(drive), sol.orientation)
    if rho is None:
        rho = sol.rho_selected
    res = ode_residual(sol, rho, drive, standard_grid(sol))
    return QuantumKink(Sigma=Sigma, drive=drive, solution=sol, classical=classical, rho=rho, residual=res)


def lattice_laplacian_matrix(grid: Grid1D) -> np.ndarray:
    n, inv = grid.n_sites, 1.0 / grid.dx**2
    L = np.diag(np.full(n, -2.0 * inv)) + np.diag(np.full(n - 1, inv), 1) + np.diag(np.full(n - 1, inv), -1)
    if grid.periodic:
        L[0, -1] = L[-1, 0] = inv
    return L


def vacuum_kernel(grid: Grid1D, mass: float) -> np.ndarray:
    """Ground-state covariance of a free lattice scalar of the given mass.

    ``G0 = (2 dx)^-1 (-Laplacian + mass^2)^(-1/2)``, built from the
    eigendecomposition of the lattice Laplacian.
    """
    if mass <= 0 and grid.periodic:
        raise InvalidInput("periodic zero mode needs a positive mass")
    lam, vec = np.linalg.eigh(-lattice_laplacian_matrix(grid))
    omega = np.sqrt(lam + mass**2)
    G0 = (vec / omega) @ vec.T / (2.0 * grid.dx)
    return 0.5 * (G0 + G0.T)


def reference_mass(Sigma: float) -> float:
    """Mass of the reference vacuum: sqrt of the smeared quadratic coefficient."""
    return math.sqrt(abs(1.0 - 3.0 * Sigma))


def _spd_condition(X: np.ndarray, name: str) -> float:
    try:
        np.linalg.cholesky(X)
    except np.linalg.LinAlgError as exc:
        raise SingularKernel(f"{name} is not positive definite") from exc
    cond = float(np.linalg.cond(X))
    if not cond < 1.0 / (X.shape[0] * np.finfo(float).eps):
        raise SingularKernel(f"{name} condition number {cond:.3g} too large")
    return cond


@dataclass(frozen=True)
class KernelPair:
    """Two-point kernels of the squeezed state, frozen in time."""

    G: np.ndarray
    Pi: np.ndarray
    G0: np.ndarray
    cond_G: float = field(init=False)
    cond_G0: float = field(init=False)

    def __post_init__(self):
        for name in ("G", "Pi", "G0"):
            X = np.asarray(getattr(self, name), dtype=float)
            if X.ndim != 2 or X.shape[0] != X.shape[1]:
                raise InvalidInput(f"{name} must be square")
            if not np.allclose(X, X.T, rtol=0, atol=1e-12 * max(1.0, np.abs(X).max())):
                raise InvalidInput(f"{name} must be symmetric")
            object.__setattr__(self, name, X)
        if not self.G.shape == self.Pi.shape == self.G0.shape:
            raise InvalidInput("kernel shapes differ")
        object.__setattr__(self, "cond_G", _spd_condition(self.G, "G"))
        object.__setattr__(self, "cond_G0", _spd_condition(self.G0, "G0"))

    @classmethod
    def vacuum(cls, grid: Grid1D, mass: float = 1.0) -> "KernelPair":
        G0 = vacuum_kernel(grid, mass)
        return cls(G=G0.copy(), Pi=np.zeros_like(G0), G0=G0)

    @classmethod
    def from_smearing(cls, grid: Grid1D, Sigma, mass: float | None = None) -> "KernelPair":
        """Kernels with ``G = G0 + diag(Sigma)`` so the smearing width is exactly ``Sigma``."""
        Sigma = np.broadcast_to(np.asarray(Sigma, dtype=float), (grid.n_sites,))
        if np.any(Sigma < 0):
            raise InvalidInput("Sigma must be non-negative")
        if mass is None:
            mass = reference_mass(float(Sigma.mean()))
        G0 = vacuum_kernel(grid, mass)
        return cls(G=G0 + np.diag(Sigma), Pi=np.zeros_like(G0), G0=G0)

    @property
    def Sigma(self) -> np.ndarray:
        return np.diag(self.G) - np.diag(self.G0)


@dataclass
class MeanFieldState:
    """Mean field ``C`` (the quantum-corrected displacement), momentum ``D``, frozen kernels."""

    C: np.ndarray
    D: np.ndarray
    kernels: KernelPair
    grid: Grid1D
    t: float = 0.0

    def __post_init__(self):
        self.C = np.array(self.C, dtype=float)
        self.D = np.array(self.D, dtype=float)
        n = self.grid.n_sites
        if self.C.shape != (n,) or self.D.shape != (n,) or self.kernels.G.shape != (n, n):
            raise InvalidInput("C, D and kernels must match the grid size")
        if not (np.all(np.isfinite(self.C)) and np.all(np.isfinite(self.D))):
            raise InvalidInput("C and D must be finite")
        sigma = self.kernels.Sigma
        if np.any(sigma < -1e-12):
            raise InvalidInput("G(x,x) - G0(x,x) must be non-negative")
        self._sigma = np.clip(sigma, 0.0, None)

    @property
    def Sigma(self) -> np.ndarray:
        return self._sigma

    def copy(self) -> "MeanFieldState":
        return MeanFieldState(self.C.copy(), self.D.copy(), self.kernels, self.grid, self.t)


def _bond_coincidence(K: np.ndarray, grid: Grid1D) -> np.ndarray:
    # <(u_{i+1} - u_i)^2> per bond from a covariance matrix
    d = np.diag(K)
    if grid.periodic:
        return np.roll(d, -1) - 2.0 * np.diag(np.roll(K, -1, axis=1)) + d
    return d[1:] - 2.0 * np.diag(K, 1) + d[:-1]


def energy_functional(state: MeanFieldState, U) -> tuple[float, np.ndarray]:
    """Vacuum-subtracted quantum energy on the lattice.

    Returns ``(total, density)`` with ``total = dx * density.sum()``. Bond
    (gradient) contributions are assigned to the left site of each bond.
    """
    U = _check_poly(U)
    g, k = state.grid, state.kernels
    dx = g.dx
    try:
        Ginv = np.linalg.inv(k.G)
        G0inv = np.linalg.inv(k.G0)
    except np.linalg.LinAlgError as exc:
        raise SingularKernel(str(exc)) from exc

    onsite = 0.5 * state.D**2 + smeared_derivative(U, state.Sigma, 0, state.C)
    PGP = k.Pi @ k.G @ k.Pi
    onsite = onsite + (0.125 * (np.diag(Ginv) - np.diag(G0inv)) + 2.0 * np.diag(PGP)) / dx**2

    bonds = 0.5 * (g.bond_differences(state.C) / dx) ** 2
    bonds = bonds + 0.5 * (_bond_coincidence(k.G, g) - _bond_coincidence(k.G0, g)) / dx**2

    density = onsite * (g.weights() / dx)
    density[: bonds.size] += bonds
    return float(dx * density.sum()), density


def mean_field_force(C: np.ndarray, grid: Grid1D, U, Sigma) -> np.ndarray:
    f = laplacian(C, grid)
    onsite = smeared_derivative(U, Sigma, 1, C)
    if grid.periodic:
        f -= onsite
    else:
        f[1:-1] -= onsite[1:-1]
    return f


def cd_hamilton_step(state: MeanFieldState, dt: float, U, cfl_fraction: float = 0.5, n_steps: int = 1) -> MeanFieldState:
    """Velocity-Verlet steps of ``C' = D``, ``D' = C_xx - M^(1)(C)`` with frozen kernels."""
    U = _check_poly(U)
    if not dt > 0 or dt > cfl_fraction * state.grid.dx * (1 + 1e-12):
        raise CFLViolation(f"dt = {dt} exceeds {cfl_fraction} dx")
    new = state.copy()
    sigma = state.Sigma
    verlet_advance(new.C, new.D, n_steps, dt, lambda c: mean_field_force(c, state.grid, U, sigma))
    new.t = state.t + n_steps * dt
    return new


def quantum_kink_state(grid: Grid1D, qk: QuantumKink, kernels: KernelPair | None = None, center: float = 0.0) -> MeanFieldState:
    """Mean-field initial data sampled from a static quantum kink."""
    if kernels is None:
        kernels = KernelPair.from_smearing(grid, qk.Sigma)
    sol = qk.solution
    C = sol.psi(grid.x - center)
    if not grid.periodic:
        C[0], C[-1] = sol.left, sol.right
    return MeanFieldState(C, np.zeros(grid.n_sites), kernels, grid)


__all__ = [
    "canonical_potential",
    "gaussian_smear",
    "smeared_derivative",
    "QuantumKink",
    "modified_soliton_solve",
    "vacuum_kernel",
    "reference_mass",
    "KernelPair",
    "MeanFieldState",
    "energy_functional",
    "cd_hamilton_step",
    "mean_field_force",
    "quantum_kink_state",
    "lattice_laplacian_matrix",
    "selection_rho",
]
