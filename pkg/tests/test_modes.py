import numpy as np
import pytest

from pijunction.modes import (
    ModeSolverError, RecursionPivotWarning, Sector, Symmetry, analytic_junction_modes,
    dispersion, dispersion_curve, edge_splitting_scan, fit_splitting_decay,
    five_term_residual, kernel_basis, max_principal_angle, solve_modes,
    zero_modes_by_recursion,
)
from pijunction.wire import (
    JunctionKind, JunctionProfile, WireParameters, assemble_m, build_pi_junction,
    build_uniform_kitaev,
)

SHORT = JunctionProfile(JunctionKind.SHORT_JUNCTION, gamma=1.0, tunneling=0.5, upsilon=0.2)


def test_kitaev_limit_spectrum():
    # perfect dimerization: 7 bonds of strength 2 and one decoupled pair of end Majoranas
    ms = solve_modes(assemble_m(build_uniform_kitaev(8, 1.0, 1.0, 0.0)))
    assert np.allclose(ms.lambdas[1:], 2.0, atol=1e-14)
    assert ms.lambdas[0] < 1e-14
    assert ms.count_zero_energy() == 2
    assert len(ms.bdg_energies()) == 16


def test_uniform_spectrum_matches_dense_oracle():
    m = assemble_m(build_uniform_kitaev(40, 1.0, 0.5, 0.0)).m
    ms = solve_modes(m)
    oracle = np.sqrt(np.clip(np.linalg.eigvalsh(m @ m.T), 0, None))
    assert np.allclose(ms.lambdas, np.sort(oracle), atol=1e-7)
    # gapped bulk: the only sub-gap level is the exponentially split edge pair
    assert ms.lambdas[1] > 0.5 * 2 * 0.5


def test_vectors_and_pairing_residuals():
    p = build_pi_junction(40, SHORT, 0.2)
    m = assemble_m(p).m
    ms = solve_modes(m)
    assert np.allclose(np.linalg.norm(ms.phi, axis=0), 1)
    assert np.allclose(np.linalg.norm(ms.xi, axis=0), 1)
    assert ms.pairing_residuals(m).max() < 1e-12
    band = np.flatnonzero(ms.lambdas > 1e-6)
    worst = max(five_term_residual(p, ms.xi[:, k], ms.lambdas[k] ** 2) for k in band[:10])
    assert worst < 1e-12


def test_short_junction_zero_count():
    ms = solve_modes(assemble_m(build_pi_junction(40, SHORT, 0.2)))
    assert ms.count_zero_energy() == 4
    assert len(ms.zero_levels()) == 2
    assert ms.lambdas[2] > 0.5


def test_svd_failure_reported():
    bad = np.full((4, 4), np.nan)
    with pytest.raises((ModeSolverError, ValueError)):
        solve_modes(bad)


def test_recursion_kitaev_edges_single_component():
    p = build_uniform_kitaev(8, 1.0, 1.0, 0.0)
    with pytest.warns(RecursionPivotWarning):
        modes = zero_modes_by_recursion(p)
    assert len(modes) == 2
    eta = next(z for z in modes if z.sector is Sector.ETA)
    nu = next(z for z in modes if z.sector is Sector.NU)
    assert eta.symmetry is Symmetry.EDGE_LEFT and nu.symmetry is Symmetry.EDGE_RIGHT
    assert np.array_equal(np.abs(eta.profile), np.eye(8)[0])
    assert np.array_equal(np.abs(nu.profile), np.eye(8)[7])


def test_recursion_short_junction_mu0():
    p = build_pi_junction(20, SHORT, 0.0)
    with pytest.warns(RecursionPivotWarning):
        modes = zero_modes_by_recursion(p)
    anti = next(z for z in modes if z.symmetry is Symmetry.ANTISYMMETRIC)
    support = set(p.sites[np.abs(anti.profile) > 1e-12])
    assert support == {-1, 1}


@pytest.mark.parametrize("mu", [0.0, 0.2, 0.3, -0.4])
def test_recursion_matches_svd_kernel(mu):
    p = build_pi_junction(40, SHORT, mu)
    with pytest.warns(RecursionPivotWarning):
        modes = zero_modes_by_recursion(p)
    assert len(modes) == 4
    labels = sorted(z.symmetry.value for z in modes)
    assert labels == sorted(["Symmetric", "Antisymmetric", "EdgeLeft", "EdgeRight"])
    ms = solve_modes(assemble_m(p))
    for sector in Sector:
        rec = np.column_stack([z.profile for z in modes if z.sector is sector])
        assert max_principal_angle(rec, kernel_basis(ms, sector)) < 1e-8
    for z in modes:
        assert z.energy_residual <= 1e-10
        if z.symmetry is Symmetry.SYMMETRIC:
            assert z.parity() == pytest.approx(1, abs=1e-8)
        if z.symmetry is Symmetry.ANTISYMMETRIC:
            assert z.parity() == pytest.approx(-1, abs=1e-8)


def test_antisymmetric_geometric_ratio():
    # away from the junction each step multiplies the amplitude by -mu/2
    mu = 0.3
    p = build_pi_junction(40, SHORT, mu)
    with pytest.warns(RecursionPivotWarning):
        modes = zero_modes_by_recursion(p)
    anti = next(z for z in modes if z.symmetry is Symmetry.ANTISYMMETRIC)
    i0 = 20  # site 0
    ratios = anti.profile[i0 + 2:i0 + 8] / anti.profile[i0 + 1:i0 + 7]
    assert np.allclose(ratios, -mu / 2, rtol=1e-9)


def test_long_junction_modes():
    prof = JunctionProfile(JunctionKind.LONG_JUNCTION, gamma=1.0, tunneling=1.0, normal_length=4)
    p = build_pi_junction(40, prof, 0.2)
    with pytest.warns(RecursionPivotWarning):
        modes = zero_modes_by_recursion(p)
    ms = solve_modes(assemble_m(p))
    assert len(modes) == ms.count_zero_energy()


def test_analytic_mu0_support():
    zs, za = analytic_junction_modes(0.0, 0.5, 0.2, 20)
    assert set(zs.sites[np.abs(zs.profile) > 0]) == {-2, 0, 2}
    assert set(za.sites[np.abs(za.profile) > 0]) == {-1, 1}
    # n = +/-2 weight is -(t - upsilon)/2 relative to n = 0
    i0 = 10
    assert zs.profile[i0 + 2] / zs.profile[i0] == pytest.approx(-(0.5 - 0.2) / 2)


def test_analytic_parity_exact():
    zs, za = analytic_junction_modes(0.35, 0.5, 0.2, 30)
    assert zs.parity() == pytest.approx(1, abs=1e-12)
    assert za.parity() == pytest.approx(-1, abs=1e-12)
    with pytest.raises(ValueError):
        analytic_junction_modes(1.0, 0.5, 0.2, 30)


@pytest.mark.parametrize("sign", [1, -1])
def test_analytic_overlap_both_pairing_signs(sign):
    p = build_pi_junction(60, SHORT, 0.2)
    if sign == -1:
        t, g = p.hopping_pairing()
        p = WireParameters.from_hopping_pairing(0.2, t, -g)
    with pytest.warns(RecursionPivotWarning):
        modes = zero_modes_by_recursion(p)
    for ana in analytic_junction_modes(0.2, 0.5, 0.2, 60, pairing_sign=sign):
        num = next(z for z in modes if z.symmetry is ana.symmetry)
        assert num.sector is ana.sector
        assert abs(num.profile @ ana.profile) > 0.999999


def test_edge_splitting_kitaev_exact_zero():
    prof = JunctionProfile(JunctionKind.UNIFORM_KITAEV, gamma=1.0)
    # exact dimerization: zero up to the rounding of the SVD itself
    assert all(v < 1e-15 for _, v in edge_splitting_scan(prof, 0.0, [8, 20, 30]))


def test_edge_splitting_decays():
    prof = JunctionProfile(JunctionKind.SHORT_JUNCTION, gamma=0.5, tunneling=0.5, upsilon=0.2)
    scan = edge_splitting_scan(prof, 0.4, [20, 30, 40, 60])
    assert [n for n, _ in scan] == [20, 30, 40, 60]
    assert fit_splitting_decay(scan) < 0
    assert fit_splitting_decay(scan[:1]) is None
    with pytest.raises(ValueError):
        edge_splitting_scan(prof, 0.4, [30, 20])


def test_dispersion():
    d = dispersion(0.0, 1.0, 0.3)
    assert (d.e_plus, d.e_minus) == pytest.approx((1.3, 0.7))
    for k in (-1.3, -0.2, 0.4, 2.0):
        d = dispersion(k, 1.0, 0.0)
        assert d.e_plus == pytest.approx(k * k + 1 + 2 * abs(k))
        assert d.e_minus == pytest.approx(k * k + 1 - 2 * abs(k))
    ks = np.linspace(-2, 2, 41)
    curve = dispersion_curve(ks, 0.7, 0.2)
    for a, b in zip(curve, curve[::-1]):
        assert a.e_plus == pytest.approx(b.e_plus) and a.e_minus == pytest.approx(b.e_minus)
        assert a.e_plus >= a.e_minus
