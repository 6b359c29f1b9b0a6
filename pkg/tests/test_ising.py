import itertools
import math

import numpy as np
import pytest

from pijunction.baths import BathSpec
from pijunction.ising import (
    IsingInstance, KernelSpec, KernelVariant, Tendency, build_instance, decay_exponent,
    enumerate_partition, evaluate_kernel, ferro_para_diagnostic, frustrated_kernel,
    kernel_g, kernel_g_asymptotic,
)

PURE = KernelVariant.PURE_DEPHASING


def _brute(instance):
    """Plain loop over all 2^L configurations (test oracle)."""
    L = instance.n_slices
    J = instance.couplings
    z = 0.0
    corr = np.zeros(L)
    mag = np.zeros(L)
    for conf in itertools.product((1.0, -1.0), repeat=L):
        s = np.array(conf)
        w = math.exp(sum(J[i, j] * s[i] * s[j] for i in range(L) for j in range(i + 1, L)))
        z += w
        corr += w * s[0] * s
        mag += w * s
    return math.log(z / 2**L), corr / z, mag / z


def test_kernel_g_examples():
    assert kernel_g(BathSpec(1, 1), 0.0) == pytest.approx(0.25, rel=1e-15)
    assert kernel_g(BathSpec(1, 1), 2.0) == pytest.approx(0.0625, rel=1e-15)
    ratio = kernel_g(BathSpec(1, 1), 1e3) / kernel_g_asymptotic(BathSpec(1, 1), 1e3)
    assert abs(ratio - 1) < 5e-3
    r4 = kernel_g(BathSpec(1, 1), 1e6) / kernel_g_asymptotic(BathSpec(1, 1), 1e6)
    assert abs(r4 - 1) < abs(ratio - 1)
    with pytest.raises(ValueError):
        kernel_g(BathSpec(1, 1), -1.0)


def test_frustrated_kernel_ohmic_slope():
    for lam in (0.3, 0.8, 1.2):
        d = np.geomspace(1, 1e4, 30)
        k = [frustrated_kernel(lam, 1.0, x) for x in d]
        slope = np.polyfit(np.log(d), np.log(k), 1)[0]
        assert slope == pytest.approx(-2 * (1 + lam**2), abs=1e-12)
    assert frustrated_kernel(1e-8, 1.0, 10.0) / 1e-16 == pytest.approx(10.0**-2, rel=1e-6)


def test_frustrated_kernel_sub_ohmic_shape():
    for d in (0.5, 1.0, 4.0, 9.0, 100.0):
        assert frustrated_kernel(1.0, 0.5, d) * d**2 == pytest.approx(math.exp(-math.sqrt(d)), rel=1e-14)
    with pytest.raises(ValueError):
        frustrated_kernel(1.0, 1.5, 1.0)
    with pytest.raises(ValueError):
        frustrated_kernel(1.0, 0.5, 0.0)


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec(KernelVariant.FRUSTRATED_SUB_OHMIC, BathSpec(1.0, 1))
    with pytest.raises(ValueError):
        KernelSpec(KernelVariant.FRUSTRATED_OHMIC, BathSpec(0.5, 1))
    KernelSpec(KernelVariant.FRUSTRATED_SUB_OHMIC, BathSpec(0.4, 1))


def test_kernels_positive():
    specs = [KernelSpec(PURE, BathSpec(s, 0.7)) for s in (0.2, 1, 3)]
    specs += [KernelSpec(KernelVariant.FRUSTRATED_OHMIC, BathSpec(1, 0.7)),
              KernelSpec(KernelVariant.FRUSTRATED_SUB_OHMIC, BathSpec(0.5, 0.7))]
    for k in specs:
        assert all(evaluate_kernel(k, d) >= 0 for d in np.geomspace(1e-3, 1e3, 25))


def test_build_instance():
    k = KernelSpec(PURE, BathSpec(0.8, 0.0))
    assert not build_instance(k, 6, 0.5).couplings.any()
    k = KernelSpec(PURE, BathSpec(0.8, 0.7))
    inst = build_instance(k, 2, 0.5)
    assert inst.couplings[0, 1] == pytest.approx(0.49 * kernel_g(k.bath, 0.5) * 0.25, rel=1e-15)
    inst = build_instance(k, 10, 0.5)
    row = inst.couplings[0, 1:]
    assert np.all(np.diff(row) < 0)
    fk = KernelSpec(KernelVariant.FRUSTRATED_OHMIC, BathSpec(1, 0.5))
    assert build_instance(fk, 3, 2.0).couplings[0, 2] == pytest.approx(frustrated_kernel(0.5, 1, 4.0) * 4.0)
    with pytest.raises(ValueError):
        build_instance(k, 1, 0.5)
    with pytest.raises(ValueError):
        build_instance(k, 4, 0.0)


def test_instance_invariants():
    with pytest.raises(ValueError):
        IsingInstance(3, 1.0, np.array([[0, 1, 2], [1, 0, 1], [2, 1, 1.0]]), 1.0)
    with pytest.raises(ValueError):
        IsingInstance(3, 1.0, np.array([[0, 1, 2], [1, 0, 3], [2, 3, 0.0]]), 1.0)
    with pytest.raises(ValueError):
        IsingInstance(2, 1.0, np.array([[0, 1], [2, 0.0]]), 1.0)


def test_free_chain():
    res = enumerate_partition(build_instance(KernelSpec(PURE, BathSpec(1, 0)), 8, 1.0))
    assert res.z_ratio == pytest.approx(1.0, abs=1e-15)
    assert np.all(res.correlations[1:] == 0)


def test_two_spins():
    for j in (0.0, 0.3, 2.5, 40.0):
        inst = IsingInstance(2, 1.0, np.array([[0, j], [j, 0]]), 1.0)
        res = enumerate_partition(inst)
        assert res.correlations[1] == pytest.approx(math.tanh(j), abs=1e-15)
        assert res.log_z_ratio == pytest.approx(math.log(math.cosh(j)), rel=1e-14)


@pytest.mark.parametrize("L", [3, 7, 13, 14])
def test_matches_brute_force(L):
    k = KernelSpec(PURE, BathSpec(0.6, 1.1))
    inst = build_instance(k, L, 0.7)
    if L > 10:
        # brute force is slow in pure Python; compare against an exact vectorized sum instead
        codes = np.arange(2**L)[:, None]
        s = 1.0 - 2.0 * ((codes >> np.arange(L)) & 1)
        e = 0.5 * np.einsum("ki,ij,kj->k", s, inst.couplings, s)
        w = np.exp(e - e.max())
        ref_corr = (w @ (s[:, :1] * s)) / w.sum()
        ref_mag = (w @ s) / w.sum()
        ref_logz = e.max() + math.log(w.sum()) - L * math.log(2)
    else:
        ref_logz, ref_corr, ref_mag = _brute(inst)
    res = enumerate_partition(inst)
    assert res.log_z_ratio == pytest.approx(ref_logz, rel=1e-12)
    assert np.allclose(res.correlations, ref_corr, atol=1e-13)
    assert np.allclose(ref_mag, 0, atol=1e-13)
    assert np.all(res.magnetization == 0)


def test_large_couplings_no_overflow():
    inst = build_instance(KernelSpec(PURE, BathSpec(0.5, 30.0)), 16, 1.0)
    res = enumerate_partition(inst)
    assert math.isfinite(res.log_z_ratio)
    assert np.allclose(res.correlations, 1.0, atol=1e-12)


def test_correlations_monotone_and_bath_ordering():
    results = {}
    for s in (0.5, 1.5):
        res = enumerate_partition(build_instance(KernelSpec(PURE, BathSpec(s, 1.0)), 12, 1.0))
        assert np.all(np.diff(res.correlations) <= 1e-15)
        results[s] = res.correlations[-1]
    assert results[0.5] > results[1.5]


def test_enumeration_bound():
    inst = build_instance(KernelSpec(PURE, BathSpec(1, 1)), 25, 1.0)
    with pytest.raises(ValueError, match="L <= 24"):
        enumerate_partition(inst)


def test_diagnostic():
    assert ferro_para_diagnostic(KernelSpec(PURE, BathSpec(0.5, 1))) is Tendency.FERROMAGNETIC
    assert ferro_para_diagnostic(KernelSpec(PURE, BathSpec(1.5, 1))) is Tendency.PARAMAGNETIC
    assert ferro_para_diagnostic(KernelSpec(PURE, BathSpec(1.0, 1))) is Tendency.MARGINAL
    for lam in (0.1, 0.5, 2.0):
        k = KernelSpec(KernelVariant.FRUSTRATED_OHMIC, BathSpec(1, lam))
        assert decay_exponent(k) == pytest.approx(2 * (1 + lam**2))
        assert ferro_para_diagnostic(k) is Tendency.PARAMAGNETIC
    assert ferro_para_diagnostic(KernelSpec(KernelVariant.FRUSTRATED_OHMIC, BathSpec(1, 0))) is Tendency.MARGINAL
    sub = KernelSpec(KernelVariant.FRUSTRATED_SUB_OHMIC, BathSpec(0.5, 0.4))
    assert decay_exponent(sub) == math.inf
    assert ferro_para_diagnostic(sub) is Tendency.PARAMAGNETIC


def test_csv_exports():
    inst = build_instance(KernelSpec(PURE, BathSpec(1, 1)), 4, 1.0)
    lines = inst.to_csv().splitlines()
    assert lines[0] == "i,j,J" and len(lines) == 1 + 6
    assert float(lines[1].split(",")[2]) == inst.couplings[0, 1]
    res = enumerate_partition(inst)
    rows = res.to_csv().splitlines()
    assert rows[0] == "r,corr,magnetization" and len(rows) == 5
    assert float(rows[2].split(",")[1]) == res.correlations[1]


def test_block_and_chunk_split(monkeypatch):
    import pijunction.ising as mod
    inst = build_instance(KernelSpec(PURE, BathSpec(0.4, 1.3)), 10, 0.6)
    ref = enumerate_partition(inst)
    # force several outer chunks so the streaming rescale path runs
    monkeypatch.setattr(mod, "_INNER_BITS", 3)
    monkeypatch.setattr(mod, "_CHUNK", 7)
    res = enumerate_partition(inst)
    assert res.log_z_ratio == pytest.approx(ref.log_z_ratio, rel=1e-13)
    assert np.allclose(res.correlations, ref.correlations, atol=1e-14)
    logz, corr, _ = _brute(inst)
    assert res.log_z_ratio == pytest.approx(logz, rel=1e-12)
