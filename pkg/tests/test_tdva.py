import math

import numpy as np
import pytest
from numpy.polynomial import Polynomial
from numpy.polynomial.hermite_e import hermegauss

from mtk.errors import CFLViolation, InvalidInput, SingularKernel, SymmetryRestored
from mtk.lattice import Grid1D, LatticeState, PhiFourChain, init_kink
from mtk.tdva import (
    KernelPair,
    MeanFieldState,
    canonical_potential,
    cd_hamilton_step,
    energy_functional,
    gaussian_smear,
    modified_soliton_solve,
    quantum_kink_state,
    smeared_derivative,
    vacuum_kernel,
)
from mtk.traveling_wave import dimensionless_kink, cubic_roots

NODES, WEIGHTS = hermegauss(64)


def quadrature(U, Sigma, n, z):
    return float(WEIGHTS @ U.deriv(n)(z + math.sqrt(Sigma) * NODES) / math.sqrt(2 * math.pi))


def test_identity_smearing():
    U = Polynomial([1.0, -2.0, 0.5, 3.0, 0.25])
    assert np.array_equal(gaussian_smear(U, 0.0, 0).coef, U.coef)
    assert np.array_equal(gaussian_smear(U, 0.0, 2).coef, U.deriv(2).coef)


def test_canonical_force_smearing():
    for s in (0.0, 0.1, 0.25, 1.3):
        M1 = gaussian_smear(canonical_potential(), s, 1)
        expected = Polynomial([0.0, -(1 - 3 * s), 0.0, 1.0])
        assert np.allclose(M1.coef, expected.coef, atol=1e-15)
        for z in (-1.3, 0.2, 0.9):
            assert M1(z) == pytest.approx(quadrature(canonical_potential(), s, 1, z), abs=1e-12)


def test_second_moment_identity():
    U = Polynomial([0.0, 0.0, 1.0])
    out = gaussian_smear(U, 0.7, 0)
    assert np.allclose(out.coef, [0.7, 0.0, 1.0], atol=1e-15)


def test_quadrature_equivalence_random():
    rng = np.random.default_rng(3)
    for _ in range(100):
        U = Polynomial(rng.normal(size=rng.integers(1, 10)))
        s, n, z = rng.uniform(0, 2), int(rng.integers(0, 3)), rng.uniform(-2, 2)
        got, ref = gaussian_smear(U, s, n)(z), quadrature(U, s, n, z)
        assert abs(got - ref) <= 1e-10 * max(1.0, abs(ref))


def test_linearity_and_composition():
    rng = np.random.default_rng(4)
    for _ in range(20):
        U, V = Polynomial(rng.normal(size=9)), Polynomial(rng.normal(size=7))
        s1, s2 = rng.uniform(0, 1, 2)
        lhs = gaussian_smear(2.0 * U + V, s1)
        rhs = 2.0 * gaussian_smear(U, s1) + gaussian_smear(V, s1)
        assert np.allclose(lhs.coef, rhs.coef, atol=1e-12)
        twice = gaussian_smear(gaussian_smear(U, s1), s2)
        once = gaussian_smear(U, s1 + s2)
        assert np.allclose(twice.coef, once.coef, atol=1e-12)


def test_smear_errors():
    with pytest.raises(InvalidInput):
        gaussian_smear(canonical_potential(), -0.1)
    with pytest.raises(InvalidInput):
        gaussian_smear(Polynomial(np.ones(14)), 0.1)


def test_smeared_derivative_matches_polynomial():
    U = canonical_potential(0.1)
    z = np.linspace(-2, 2, 7)
    S = np.linspace(0, 0.3, 7)
    expected = [gaussian_smear(U, s, 1)(zz) for zz, s in zip(z, S)]
    assert smeared_derivative(U, S, 1, z) == pytest.approx(expected, abs=1e-14)


def test_quantum_kink_reduces_to_classical():
    qk = modified_soliton_solve(0.0, 0.2)
    cl = dimensionless_kink(cubic_roots(0.2))
    xi = np.linspace(-10, 10, 201)
    assert np.max(np.abs(qk.solution.psi(xi) - cl.psi(xi))) < 1e-10
    assert qk.rho_selected == pytest.approx(cl.rho_selected, abs=1e-12)


@pytest.mark.parametrize("Sigma", [0.05, 0.1, 0.2])
def test_quantum_vacua(Sigma):
    qk = modified_soliton_solve(Sigma)
    m = math.sqrt(1 - 3 * Sigma)
    assert qk.vacua == pytest.approx((-m, m), abs=1e-12)
    assert qk.residual < 1e-10
    xi = np.linspace(-8, 8, 101)
    assert np.abs(qk.solution.psi(xi)) == pytest.approx(np.abs(m * np.tanh(math.sqrt((1 - 3 * Sigma) / 2) * xi)), abs=1e-12)


def test_symmetry_restored():
    with pytest.raises(SymmetryRestored):
        modified_soliton_solve(1.0 / 3.0)
    with pytest.raises(SymmetryRestored):
        modified_soliton_solve(0.5)


def test_amplitude_square_root_exponent():
    eps = np.geomspace(1e-2, 1e-6, 12)
    amp = [modified_soliton_solve(1 / 3 - e).vacua[1] for e in eps]
    slope = np.polyfit(np.log(eps), np.log(amp), 1)[0]
    assert slope == pytest.approx(0.5, abs=0.01)


@pytest.fixture(scope="module")
def grid():
    return Grid1D.spanning(-20, 20, 0.05)


def test_vacuum_kernel_is_free_covariance(grid):
    G0 = vacuum_kernel(grid, 1.0)
    # G0 = (1 / 4 dx^2) K^-1/2 squared gives (1 / 4 dx^2) (-L + m^2)^-1
    from mtk.tdva import lattice_laplacian_matrix

    K = -lattice_laplacian_matrix(grid) + np.eye(grid.n_sites)
    assert np.allclose(4 * grid.dx**2 * G0 @ G0 @ K, np.eye(grid.n_sites), atol=1e-9)


def test_kernel_pair_checks(grid):
    G0 = vacuum_kernel(grid, 1.0)
    with pytest.raises(InvalidInput):
        KernelPair(G0 + np.triu(np.ones_like(G0), 1) * 1e-3, np.zeros_like(G0), G0)
    with pytest.raises(SingularKernel):
        KernelPair(np.zeros_like(G0), np.zeros_like(G0), G0)
    kp = KernelPair.from_smearing(grid, 0.1)
    assert kp.Sigma == pytest.approx(np.full(grid.n_sites, 0.1), abs=1e-12)
    assert kp.cond_G > 1


def test_energy_zero_on_vacuum(grid):
    kp = KernelPair.vacuum(grid)
    st = MeanFieldState(np.zeros(grid.n_sites), np.zeros(grid.n_sites), kp, grid)
    total, density = energy_functional(st, canonical_potential())
    assert total == 0.0 and np.all(density == 0.0)


def test_classical_limit_energy(grid):
    chain = PhiFourChain()
    ls = init_kink(grid, chain.roots)
    st = MeanFieldState(ls.u, ls.u_t, KernelPair.vacuum(grid), grid)
    total, _ = energy_functional(st, canonical_potential(offset=0.25))
    assert total == pytest.approx(chain.total_energy(ls), rel=1e-10, abs=1e-10)


def test_step_reduces_to_lattice(grid):
    chain = PhiFourChain()
    ls = init_kink(grid, chain.roots, v_init=0.2)
    st = MeanFieldState(ls.u, ls.u_t, KernelPair.vacuum(grid), grid)
    a = cd_hamilton_step(st, 0.02, canonical_potential())
    b = chain.step(ls, 0.02)
    assert np.max(np.abs(a.C - b.u)) < 1e-12 and np.max(np.abs(a.D - b.u_t)) < 1e-12
    with pytest.raises(CFLViolation):
        cd_hamilton_step(st, 0.05, canonical_potential())


def test_quantum_kink_stationary(grid):
    qk = modified_soliton_solve(0.1)
    st = quantum_kink_state(grid, qk)
    nxt = cd_hamilton_step(st, 0.01, canonical_potential())
    assert np.max(np.abs(nxt.C - st.C)) < 1e-8


def test_perturbed_kink_oscillates_and_conserves(grid):
    qk = modified_soliton_solve(0.1)
    st = quantum_kink_state(grid, qk)
    st.D[:] = 0.05 * np.exp(-grid.x**2)
    U = canonical_potential()
    e0, _ = energy_functional(st, U)
    out = st
    centre = []
    for _ in range(20):
        out = cd_hamilton_step(out, 0.025, U, n_steps=50)
        centre.append(out.C[grid.n_sites // 2])
    e1, _ = energy_functional(out, U)
    assert abs(e1 - e0) / abs(e0) < 1e-6
    assert np.ptp(centre) > 1e-3
