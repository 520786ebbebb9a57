import math

import numpy as np
import pytest

from mtk.cavity import (
    CavityParameters,
    DipoleVector,
    cavity_pipeline,
    collapse_time,
    collapse_witness,
    dimer_dipole_estimate,
    dipole_dipole_energy,
    dipole_quanta_lifetime,
    min_alignment_dipole,
    mt_total_dipole,
    quality_factor,
    rabi_coupling,
    rabi_matrix_oracle,
    rabi_peaks,
    rabi_peaks_from,
    thermal_crossover_radius,
    vacuum_field_amplitude,
)
from mtk.errors import DivergentCollapse, InvalidInput, ZeroSeparation
from mtk.units import CONSTANTS, debye_to_si

EPS10 = 10 * CONSTANTS.eps0
D90 = debye_to_si(90.0)


def test_dipole_energy_geometry():
    x, y, z = np.eye(3)
    assert dipole_dipole_energy(x, y, z * 1e-10, EPS10) == 0.0
    p1, p2, r = 1e-29, 2e-29, 3e-10
    e = dipole_dipole_energy(p1 * z, p2 * z, r * z, EPS10)
    assert e == pytest.approx(-2 * p1 * p2 / (4 * math.pi * EPS10 * r**3), rel=1e-14)
    with pytest.raises(ZeroSeparation):
        dipole_dipole_energy(x, y, np.zeros(3), EPS10)


def test_dipole_energy_properties():
    rng = np.random.default_rng(5)
    di, dj, dk = rng.normal(size=(3, 3)) * 1e-29
    r = rng.normal(size=3) * 1e-10
    e = lambda a, b, rr=r: dipole_dipole_energy(a, b, rr, EPS10)
    assert e(2 * di + dk, dj) == pytest.approx(2 * e(di, dj) + e(dk, dj), rel=1e-12)
    assert e(di, dj) == pytest.approx(e(dj, di, -r), rel=1e-14)
    scales = np.geomspace(1, 10, 8)
    vals = [abs(e(di, dj, s * r)) for s in scales]
    assert np.polyfit(np.log(scales), np.log(vals), 1)[0] == pytest.approx(-3.0, abs=1e-6)


def test_pair_energy_at_contact():
    water = 2 * CONSTANTS.e * 0.2e-10
    z = np.array([0.0, 0.0, 1.0])
    e = abs(dipole_dipole_energy(D90 * z, water * z, 3e-10 * z, EPS10)) / CONSTANTS.e
    # recorded value: the collinear pair at 3 A is of order 1 eV
    assert e == pytest.approx(0.7990, rel=1e-3)


def test_crossover_scaling():
    water = 2 * CONSTANTS.e * 0.2e-10
    r = thermal_crossover_radius(D90, water, EPS10, 300.0)
    assert thermal_crossover_radius(2 * D90, 2 * water, EPS10, 300.0) == pytest.approx(r * 4 ** (1 / 3), rel=1e-14)
    assert thermal_crossover_radius(D90, water, EPS10 / 8, 300.0) == pytest.approx(2 * r, rel=1e-14)
    # at the crossover the collinear energy equals kB T
    z = np.array([0.0, 0.0, 1.0])
    assert abs(dipole_dipole_energy(D90 * z, water * z, r * z, EPS10)) == pytest.approx(CONSTANTS.kB * 300, rel=1e-12)
    assert 1e-10 < r < 1e-8
    assert thermal_crossover_radius(DipoleVector((D90, 0, 0)), (0, water, 0), EPS10, 300.0) == pytest.approx(r)


def test_dimer_dipole():
    d = dimer_dipole_estimate(36, 4e-9, 80)
    assert d.si == pytest.approx(2.884e-28, rel=1e-3)
    assert 86 <= d.debye <= 90
    assert dimer_dipole_estimate(36, 4e-9, 1).debye == pytest.approx(6916.6, rel=1e-4)
    assert dimer_dipole_estimate(0, 4e-9, 80).si == 0.0


def test_mt_total_dipole():
    agg = mt_total_dipole(3.5e-6, 12, 8e-9, debye_to_si(15.0))
    assert agg.n_dimers == 5256
    quoted = mt_total_dipole(3.5e-6, 12, 8e-9, debye_to_si(15.0), n_dimers=5280)
    assert quoted.n_from_geometry == 5256
    assert quoted.total_debye == pytest.approx(79200.0, rel=1e-12)
    assert mt_total_dipole(0.0, 12, 8e-9, 1.0).total == 0.0
    big = mt_total_dipole(1e-6, 13, 8e-9, D90)
    assert big.n_dimers == 1625 and big.total_debye == pytest.approx(146250.0, rel=1e-12)


def test_min_alignment():
    p = min_alignment_dipole(2.1e5, 294.0)
    assert p.si == pytest.approx(1.933e-26, rel=1e-3)
    assert p.debye == pytest.approx(6000.0, rel=0.1)
    assert min_alignment_dipole(4.2e5, 294.0).si == pytest.approx(p.si / 2, rel=1e-14)
    assert min_alignment_dipole(2.1e5, 147.0).si == pytest.approx(p.si / 2, rel=1e-14)


def test_vacuum_field():
    V = math.pi * (7.5e-9) ** 2 * 1e-6
    f = vacuum_field_amplitude(6e12, 80, V)
    assert 1e4 <= f.si <= 1e5 and 1e4 <= f.gaussian_as_printed <= 1e6
    assert vacuum_field_amplitude(6e12, 80, 4 * V).si == pytest.approx(f.si / 2, rel=1e-14)
    assert vacuum_field_amplitude(6e12, 320, V).value == pytest.approx(f.si / 2, rel=1e-14)
    g = vacuum_field_amplitude(6e12, 80, V, "gaussian-as-printed")
    assert g.value == g.gaussian_as_printed
    assert g.gaussian_as_printed / g.si == pytest.approx(math.sqrt(4 * math.pi), rel=1e-14)
    with pytest.raises(InvalidInput):
        vacuum_field_amplitude(6e12, 80, V, "cgs")


def test_rabi_coupling():
    assert rabi_coupling(1e4, D90, 0.0) == 0.0
    assert rabi_coupling(1e4, 2 * D90) == pytest.approx(2 * rabi_coupling(1e4, D90), rel=1e-15)
    with pytest.raises(InvalidInput):
        rabi_coupling(1e4, D90, 1.5)


def test_rabi_resonant_and_uncoupled():
    s = rabi_peaks_from(1e12, 0.0, 100, 1e10)
    assert s.omega_plus == 1e12 + 1e10 * 10
    assert s.omega_minus == 1e12 - 1e10 * 10
    assert s.weight_plus == s.weight_minus == 0.5
    z = rabi_peaks_from(1e12, 3e11, 50, 0.0)
    assert (z.omega_plus, z.omega_minus) == (1e12, 1e12 - 3e11)
    assert (z.weight_plus, z.weight_minus) == (1.0, 0.0)


def test_rabi_reference_case():
    s = rabi_peaks_from(1e12, 1e11, 100, 1e10)
    up, lo = rabi_matrix_oracle(1e12, 1e11, 100, 1e10)
    half = 0.5 * math.sqrt(1e22 + 4 * 100 * 1e20)
    assert s.omega_plus == pytest.approx(1e12 - 5e10 + half, rel=1e-15)
    assert (s.omega_plus, s.omega_minus) == pytest.approx((up, lo), rel=1e-12)
    assert s.weight_plus + s.weight_minus == pytest.approx(1.0)


def test_rabi_oracle_equivalence():
    rng = np.random.default_rng(6)
    for _ in range(1000):
        w0 = 10 ** rng.uniform(11, 13)
        Delta = rng.uniform(-1, 1) * 10 ** rng.uniform(9, 12)
        N = int(rng.integers(1, 10000))
        lam = 10 ** rng.uniform(7, 11)
        s = rabi_peaks_from(w0, Delta, N, lam)
        up, lo = rabi_matrix_oracle(w0, Delta, N, lam)
        assert s.omega_plus == pytest.approx(up, rel=1e-10)
        assert s.omega_minus == pytest.approx(lo, rel=1e-10)


def test_gap_monotone():
    gaps_l = [rabi_peaks_from(1e12, 2e10, 100, lam).splitting for lam in np.linspace(0, 1e10, 20)]
    gaps_n = [rabi_peaks_from(1e12, 2e10, N, 1e9).splitting for N in range(1, 200, 10)]
    assert np.all(np.diff(gaps_l) >= 0) and np.all(np.diff(gaps_n) >= 0)


def test_detuning_convention(pset):
    a = CavityParameters.from_config(pset.cavity, convention="paper")
    b = CavityParameters.from_config(pset.cavity, convention="spectroscopic")
    assert a.Delta == -b.Delta == pset.cavity.omega_c - pset.cavity.omega0
    assert a.N_dimers == 125
    lam = 1e10
    assert rabi_peaks(a, lam).omega_plus != rabi_peaks(b, lam).omega_plus
    with pytest.raises(InvalidInput):
        CavityParameters.from_config(pset.cavity, convention="other")


def test_lifetime_audit(pset):
    params = CavityParameters.from_config(pset.cavity)
    si = dipole_quanta_lifetime(params, "si")
    cgs = dipole_quanta_lifetime(params, "gaussian")
    assert not si.audit.is_time and not cgs.audit.is_time
    assert dict(si.audit.exponents) == {"kg": 3, "m": 8, "s": -9, "A": -4}
    # an action: erg s
    assert dict(cgs.audit.exponents) == {"g": 1, "cm": 2, "s": -1}
    assert si.quoted == 1e-4
    twice_nw = dipole_quanta_lifetime(CavityParameters(**{**params.__dict__, "N_w": 2 * params.N_w}))
    twice_l = dipole_quanta_lifetime(CavityParameters(**{**params.__dict__, "L": 2 * params.L}))
    assert twice_nw.value == pytest.approx(si.value / 2, rel=1e-14)
    assert twice_l.value == pytest.approx(si.value / 2, rel=1e-14)


def test_collapse_time_bounds():
    c = collapse_time(1e-4, 1, 125, 1e10, 1e11, 1e-4)
    assert c.value >= c.lower_bound == pytest.approx(1e-4 / 250)
    # sin^2 = 1 attains the bound
    lam, N, n, Delta = 1.0, 1, 1, 1.0
    t = (math.pi / 2) * Delta / (N * n * lam**2)
    hit = collapse_time(1e-4, n, N, lam, Delta, t)
    assert hit.value == pytest.approx(hit.lower_bound, rel=1e-14)
    doubled = collapse_time(2e-4, 1, 125, 1e10, 1e11, 1e-4)
    assert doubled.value == pytest.approx(2 * c.value, rel=1e-14)
    with pytest.raises(DivergentCollapse):
        collapse_time(1e-4, 1, 1, 1.0, 1.0, math.pi)
    with pytest.raises(InvalidInput):
        collapse_time(1e-4, 0, 1, 1.0, 1.0, 1.0)


def test_collapse_lower_bound_random():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n, N = int(rng.integers(1, 11)), int(rng.integers(1, 6000))
        lam = 10 ** rng.uniform(8, 11)
        try:
            c = collapse_time(1e-4, n, N, lam, rng.uniform(10, 100) * lam, 1e-4)
        except DivergentCollapse:
            continue
        assert c.value >= 1e-4 / (2 * n * N)


def test_collapse_witness_is_reproducible(pset):
    lam = cavity_pipeline(pset)["lambda"]
    w = collapse_witness(1e-4, 125, lam, 1e-4)
    assert (w.n, w.detuning_ratio) == (4, 85.0)
    assert 1e-7 <= w.estimate.value <= 1e-6
    assert (pset.cavity.n_quanta, pset.cavity.detuning_ratio) == (w.n, w.detuning_ratio)


def test_quality_factor():
    assert quality_factor(6e12, 1e-4) == pytest.approx(6e8)
    assert quality_factor(1.0, 1.0) == 1.0
    assert quality_factor(6e12, 1e-7) == pytest.approx(6e5)


def test_pipeline(pset):
    r = cavity_pipeline(pset)
    assert r["N_dimers"] == 125
    assert r["E_c_used"] == 1e4
    assert r["lambda_collective"] == pytest.approx(3e11, rel=2.0)
    assert 1e-7 <= r["collapse_time"] <= 1e-6
    assert r["quality_factor"] == pytest.approx(6e8)
    doc = r.as_dict()
    assert doc["audits"]["lifetime_gaussian"] == "g cm^2 s^-1"
    assert r.as_dict() == cavity_pipeline(pset).as_dict()
