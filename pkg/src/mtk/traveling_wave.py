"""Analytic kink fronts of the damped, driven double-well chain.

In the co-moving coordinate ``xi = alpha (x - v t)`` the reduced field
``psi = u / sqrt(A/B)`` obeys

    psi'' + rho psi' - psi^3 + psi + sigma = 0.

Writing the force cubic as ``(psi - a)(psi - d)(psi - b)`` the logistic front
between the outer roots solves the first-order reduction
``psi' = (s / sqrt 2)(psi - a)(psi - b)`` exactly, provided
``rho = -3 s d / sqrt 2``. The orientation ``s = +1`` puts ``b`` at
``xi -> -inf`` and ``a`` at ``xi -> +inf``; ``s = -1`` mirrors it.

Every routine also accepts a general linear coefficient ``m2`` for the cubic
``psi^3 - m2 psi - sigma`` so the smeared (quantum-corrected) force reuses
the same machinery.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.integrate import trapezoid
from scipy.special import expit

from .errors import ComplexRoots, DegenerateRoots, InvalidInput, NoKink, SupersonicFrame, ZeroVelocity
from .units import MTParameters, field_sigma, nondimensionalize

SQRT2 = math.sqrt(2.0)
SIGMA_CRIT = 2.0 / (3.0 * math.sqrt(3.0))
DEGENERATE_TOL = 1e-9


def sigma_crit(m2: float = 1.0) -> float:
    """Largest |sigma| for which ``psi^3 - m2 psi - sigma`` has three real roots."""
    return 2.0 * (m2 / 3.0) ** 1.5 if m2 > 0 else 0.0


@dataclass(frozen=True)
class CubicRoots:
    """Real roots ``a <= d <= b`` of ``psi^3 - m2 psi - sigma``."""

    a: float
    d: float
    b: float
    sigma: float
    m2: float = 1.0
    degenerate: bool = False

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a, self.d, self.b)


def _polish(x, m2, sigma):
    # one Newton step; skipped at (near) double roots where f' vanishes
    fp = 3 * x * x - m2
    if abs(fp) > 1e-6:
        x = x - (x**3 - m2 * x - sigma) / fp
    return x


def cubic_roots(sigma: float, m2: float = 1.0) -> CubicRoots:
    """Three real roots of the force cubic by the trigonometric method."""
    if m2 <= 0:
        raise ComplexRoots(f"linear coefficient {m2} <= 0 leaves a single well")
    crit = sigma_crit(m2)
    if abs(sigma) > crit * (1 + 1e-12):
        raise ComplexRoots(f"|sigma| = {abs(sigma)} exceeds {crit}")
    r = 2.0 * math.sqrt(m2 / 3.0)
    # cos(3 theta) = sigma / crit for psi = r cos(theta)
    c = min(1.0, max(-1.0, sigma / crit))
    theta = math.acos(c) / 3.0
    roots = sorted(_polish(r * math.cos(theta - 2 * math.pi * j / 3), m2, sigma) for j in range(3))
    a, d, b = roots
    degenerate = min(d - a, b - d) < DEGENERATE_TOL
    return CubicRoots(a=a, d=d, b=b, sigma=sigma, m2=m2, degenerate=degenerate)


def forward_orientation(roots: CubicRoots) -> int:
    """Orientation whose selected rho is non-negative (front runs toward +x)."""
    return 1 if roots.d <= 0 else -1


def selection_rho(roots: CubicRoots, orientation: int = 1) -> float:
    """Friction at which the logistic front solves the reduced ODE: -3 s d / sqrt 2."""
    if orientation not in (1, -1):
        raise InvalidInput("orientation must be +1 or -1")
    if roots.b - roots.a < DEGENERATE_TOL:
        raise DegenerateRoots("outer roots coincide")
    return -3.0 * orientation * roots.d / SQRT2


@dataclass(frozen=True)
class KinkSolution:
    """Logistic front ``psi(xi) = a + (b - a) / (1 + exp(s (b - a) xi / sqrt 2))``.

    Physical profile: ``u(x, t) = c1 (tanh(c2 (x - v t)) + c3)``. For a
    dimensionless solution ``alpha = amplitude = 1`` and ``v = 0``.
    """

    roots: CubicRoots
    orientation: int
    rho_selected: float
    v: float = 0.0
    alpha: float = 1.0
    amplitude: float = 1.0

    @property
    def left(self) -> float:
        return self.roots.b if self.orientation == 1 else self.roots.a

    @property
    def right(self) -> float:
        return self.roots.a if self.orientation == 1 else self.roots.b

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.roots.a + self.roots.b)

    @property
    def width(self) -> float:
        """Characteristic length sqrt 2 / (b - a) in xi units."""
        return SQRT2 / (self.roots.b - self.roots.a)

    @property
    def coefficients(self) -> tuple[float, float, float]:
        """(c1, c2, c3) of the tanh form in physical units (m, 1/m, 1)."""
        a, b, s = self.roots.a, self.roots.b, self.orientation
        c1 = -s * (b - a) / 2 * self.amplitude
        c2 = self.alpha * (b - a) / (2 * SQRT2)
        c3 = -s * (a + b) / (b - a)
        return c1, c2, c3

    def psi(self, xi):
        a, b = self.roots.a, self.roots.b
        return a + (b - a) * expit(-self.orientation * (b - a) * np.asarray(xi, dtype=float) / SQRT2)

    def dpsi(self, xi):
        p = self.psi(xi)
        return self.orientation / SQRT2 * (p - self.roots.a) * (p - self.roots.b)

    def d2psi(self, xi):
        p = self.psi(xi)
        return self.orientation / SQRT2 * (2 * p - self.roots.a - self.roots.b) * self.dpsi(xi)

    def displacement(self, x, t=0.0):
        """Physical field u(x, t) in metres."""
        return self.amplitude * self.psi(self.alpha * (np.asarray(x, dtype=float) - self.v * t))


def dimensionless_kink(roots: CubicRoots, orientation: int | None = None) -> KinkSolution:
    if orientation is None:
        orientation = forward_orientation(roots)
    return KinkSolution(roots=roots, orientation=orientation, rho_selected=selection_rho(roots, orientation))


def _check_kink_regime(p: MTParameters) -> CubicRoots:
    try:
        return cubic_roots(field_sigma(p))
    except ComplexRoots as exc:
        raise NoKink(str(exc)) from exc


def selected_velocity(p: MTParameters) -> float:
    """Speed magnitude v0 [1 + 2 gamma^2 / (9 d^2 M |A|)]^(-1/2) picked by friction."""
    nondimensionalize(p)  # validates the double well
    roots = _check_kink_regime(p)
    if p.gamma == 0:
        return p.v0
    d = roots.d
    if d == 0:
        return 0.0
    return p.v0 / math.sqrt(1.0 + 2.0 * p.gamma**2 / (9.0 * d * d * p.M * abs(p.A)))


def velocity_by_root_solve(p: MTParameters) -> float:
    """Independent route to the selected speed: solve rho(gamma, v) = 3 |d| / sqrt 2 for v."""
    nondimensionalize(p)
    roots = _check_kink_regime(p)
    target = 3.0 * abs(roots.d) / SQRT2
    if p.gamma == 0:
        return p.v0
    if target == 0:
        return 0.0
    v0, MA = p.v0, p.M * abs(p.A)

    # rho(v) - target, multiplied through by the positive sqrt to stay finite at v0
    def f(v):
        return p.gamma * v - target * math.sqrt(MA * (v0 - v) * (v0 + v))

    return brentq(f, 0.0, v0, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def kink_profile(
    roots: CubicRoots, p: MTParameters, v: float, orientation: int | None = None
) -> KinkSolution:
    """Physical kink moving at ``v``; ``alpha = sqrt(|A| / (M (v0^2 - v^2)))``."""
    if abs(v) >= p.v0:
        raise SupersonicFrame(f"|v| = {abs(v)} >= v0 = {p.v0}")
    if orientation is None:
        orientation = forward_orientation(roots)
    alpha = math.sqrt(abs(p.A) / (p.M * (p.v0**2 - v**2)))
    return KinkSolution(
        roots=roots,
        orientation=orientation,
        rho_selected=selection_rho(roots, orientation),
        v=v,
        alpha=alpha,
        amplitude=p.amplitude,
    )


def kink_from_parameters(p: MTParameters, orientation: int | None = None) -> KinkSolution:
    """Roots, selected speed and profile for a parameter set in one call."""
    roots = _check_kink_regime(p)
    if orientation is None:
        orientation = forward_orientation(roots)
    v = selected_velocity(p)
    # the selected speed carries the sign of rho for the chosen orientation
    if selection_rho(roots, orientation) < 0:
        v = -v
    return kink_profile(roots, p, v, orientation)


def residual_profile(solution: KinkSolution, rho: float, sigma: float, xi) -> np.ndarray:
    """Pointwise ``psi'' + rho psi' - psi^3 + m2 psi + sigma`` with analytic derivatives."""
    xi = np.asarray(xi, dtype=float)
    p = solution.psi(xi)
    return solution.d2psi(xi) + rho * solution.dpsi(xi) - p**3 + solution.roots.m2 * p + sigma


def ode_residual(solution: KinkSolution, rho: float, sigma: float, xi) -> float:
    """Max absolute residual of the traveling-wave ODE on ``xi``."""
    return float(np.max(np.abs(residual_profile(solution, rho, sigma, xi))))


def standard_grid(solution: KinkSolution, span: float = 20.0, n: int = 4001) -> np.ndarray:
    """Symmetric xi grid covering ``span`` front widths on either side."""
    half = span * solution.width
    return np.linspace(-half, half, n)


@dataclass(frozen=True)
class KinkEnergy:
    """Kink energy decomposition, joules.

    ``binding``, ``kinetic``, ``total`` and ``M_star`` are the integrated
    values (authoritative). The ``printed_*`` fields evaluate the closed-form
    coefficients as quoted in the literature for comparison only.
    """

    binding: float
    kinetic: float
    total: float
    M_star: float
    printed_binding: float
    printed_M_star: float
    printed_kinetic: float
    n_points: int

    @property
    def printed_total(self) -> float:
        return self.printed_binding + self.printed_kinetic

    @property
    def binding_deviation(self) -> float:
        """Relative deviation of the printed binding term from the integral."""
        return self.printed_binding / self.binding - 1.0

    @property
    def M_star_deviation(self) -> float:
        return self.printed_M_star / self.M_star - 1.0


def _integrated_energy(p: MTParameters, v: float, n: int, span: float = 40.0) -> float:
    # field-free symmetric well: u = u0 psi(alpha x), psi = -tanh(xi / sqrt 2)
    alpha = math.sqrt(p.A / (p.M * (p.v0**2 - v**2)))
    u0 = p.amplitude
    xi = np.linspace(-span, span, n)
    psi = -np.tanh(xi / SQRT2)
    dpsi = -(1.0 - psi**2) / SQRT2
    ux = u0 * alpha * dpsi
    ut = -v * ux
    u = u0 * psi
    density = 0.5 * p.M * ut**2 + 0.5 * p.k * p.R0**2 * ux**2 + 0.25 * p.B * (u**2 - u0**2) ** 2
    return float(trapezoid(density, xi)) / (alpha * p.R0)


def integrated_kink_energy(p: MTParameters, v: float = 0.0, tol: float = 1e-3, n0: int = 65) -> tuple[float, int]:
    """Trapezoid energy of the analytic profile, doubling resolution until the
    relative change drops below ``tol`` (and then once more)."""
    n = n0
    prev = _integrated_energy(p, v, n)
    while True:
        n = 2 * n - 1
        cur = _integrated_energy(p, v, n)
        if abs(cur - prev) <= tol * abs(cur) or n > 2**20:
            break
        prev = cur
    return cur, n


def kink_energy(p: MTParameters, v: float = 0.0, tol: float = 1e-3) -> KinkEnergy:
    """Energy of the kink moving at ``v`` in the field-free double well."""
    if p.A <= 0:
        raise NoKink("no double well for A <= 0")
    if abs(v) >= p.v0:
        raise SupersonicFrame(f"|v| = {abs(v)} >= v0 = {p.v0}")
    binding, n_b = integrated_kink_energy(p, 0.0, tol)
    if v == 0:
        kinetic, n_v = 0.0, n_b
    else:
        # same grid for both terms so the difference is not quadrature noise
        n_v = max(n_b, integrated_kink_energy(p, v, tol)[1])
        kinetic = _integrated_energy(p, v, n_v) - _integrated_energy(p, 0.0, n_v)
    alpha = math.sqrt(p.A / (p.M * (p.v0**2 - v**2)))
    printed_binding = (2 * SQRT2 / 3) * p.A**2 / p.B + (SQRT2 / 3) * p.k * p.A / p.B
    printed_M_star = 4 / (3 * SQRT2) * p.M * p.A * alpha / (p.R0 * p.B)
    return KinkEnergy(
        binding=binding,
        kinetic=kinetic,
        total=binding + kinetic,
        M_star=binding / p.v0**2,
        printed_binding=printed_binding,
        printed_M_star=printed_M_star,
        printed_kinetic=0.5 * printed_M_star * v**2,
        n_points=n_v,
    )


def transfer_time(L: float, v: float) -> float:
    """Time for a front at speed ``v`` to cross length ``L``."""
    if L < 0:
        raise InvalidInput("L must be non-negative")
    if v <= 0:
        raise ZeroVelocity(f"transfer needs v > 0, got {v}")
    return L / v
