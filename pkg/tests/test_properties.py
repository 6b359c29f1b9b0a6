"""Randomized invariants."""

import math

import numpy as np
from hypothesis import given, settings, strategies as st

from pijunction.baths import BathSpec, RTNEnsemble, psd_estimate
from pijunction.dephasing import decoherence_closed_form, decoherence_exponent
from pijunction.ising import KernelSpec, KernelVariant, build_instance, enumerate_partition, frustrated_kernel, kernel_g
from pijunction.modes import solve_modes
from pijunction.rg import ENTROPY_OF, classify_phase, closed_form_lambda, integrate_flow
from pijunction.wire import WireParameters, assemble_m

finite = st.floats(-5, 5, allow_nan=False)
even_n = st.integers(2, 12).map(lambda k: 2 * k)
s_pos = st.floats(0.05, 4.0)
lam_st = st.floats(0.0, 2.0)


@st.composite
def wires(draw):
    n = draw(even_n)
    bonds = draw(st.lists(st.tuples(finite, finite), min_size=n - 1, max_size=n - 1))
    return WireParameters(n, draw(finite), tuple(bonds))


@given(wires())
def test_wire_text_round_trip(p):
    assert WireParameters.from_text(p.to_text()) == p


@given(wires())
def test_matrix_layout_and_transpose(p):
    m = assemble_m(p).m
    n = p.n_sites
    assert np.all(np.diag(m) == p.mu)
    assert np.array_equal(np.diag(m, -1), p.alphas) and np.array_equal(np.diag(m, 1), p.betas)
    assert np.count_nonzero(np.triu(m, 2)) == np.count_nonzero(np.tril(m, -2)) == 0
    # swapping alpha and beta on every bond transposes M
    flipped = WireParameters(n, p.mu, tuple((b, a) for a, b in p.bonds))
    assert np.array_equal(assemble_m(flipped).m, m.T)
    # so does negating every pairing
    t, g = p.hopping_pairing()
    neg = WireParameters.from_hopping_pairing(p.mu, t, -g)
    assert np.allclose(assemble_m(neg).m, m.T, atol=1e-14)


@given(wires())
def test_singular_triplets(p):
    m = assemble_m(p).m
    ms = solve_modes(m)
    scale = max(1.0, float(np.max(np.abs(m))))
    assert np.all(np.diff(ms.lambdas) >= 0)
    assert np.max(ms.pairing_residuals(m)) < 1e-12 * scale * p.n_sites
    assert np.allclose(ms.phi.T @ ms.phi, np.eye(p.n_sites), atol=1e-10)
    e = ms.bdg_energies()
    assert np.allclose(e, -e[::-1])


@given(st.integers(1, 20), st.floats(1e-4, 1e-2), st.floats(2.0, 1e3), st.integers(0, 2**31))
def test_rtn_text_round_trip(n, lo, ratio, seed):
    ens = RTNEnsemble.log_uniform(n, lo, lo * ratio, seed)
    assert RTNEnsemble.from_text(ens.to_text()) == ens


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=8, max_size=256).filter(lambda x: len(x) % 2 == 0),
       st.floats(0.01, 10))
def test_psd_parseval(x, dt):
    x = np.asarray(x)
    w, p = psd_estimate(x, dt)
    dw = w[1] - w[0]
    assert math.isclose(p.sum() * dw, x.var(), rel_tol=1e-9, abs_tol=1e-12)


@given(s_pos, lam_st, st.floats(0.5, 5.0), st.floats(0.0, 1e6))
def test_coherence_bounded(s, lam, uc, t):
    spec = BathSpec(s, lam, uc, uc)
    v = decoherence_closed_form(spec, t)
    assert abs(v) <= 1 + 1e-15
    assert decoherence_exponent(spec, t).real >= -1e-15


@given(st.floats(0.05, 2.0), lam_st, st.floats(1e-3, 1e4), st.floats(1.0, 10.0))
def test_coherence_monotone_in_time(s, lam, t, factor):
    # for s > 2 Re Phi overshoots its plateau, so only s <= 2 is monotone
    spec = BathSpec(s, lam)
    assert abs(decoherence_closed_form(spec, t * factor)) <= abs(decoherence_closed_form(spec, t)) + 1e-15


@given(st.floats(1e-3, 10.0), lam_st, st.floats(1e-3, 1e3))
def test_ohmic_is_continuous_limit(t, lam, _):
    near = decoherence_exponent(BathSpec(1 + 1e-7, lam), t)
    at = decoherence_exponent(BathSpec(1.0, lam), t)
    assert abs(near - at) <= 1e-5 * max(abs(at), 1e-300)


@given(s_pos, st.floats(0.0, 5.0), st.floats(0.0, 50.0) | st.floats(1e-300, 1e-3))
def test_kernels_positive(s, lam, dtau):
    assert kernel_g(BathSpec(s, 1.0), dtau) > 0
    if s <= 1 and dtau > 0:
        assert frustrated_kernel(lam, s, dtau) >= 0


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 2.0), st.floats(0.0, 1.5), st.integers(2, 10), st.floats(0.1, 3.0))
def test_ferromagnetic_correlations(s, lam, L, dtau):
    res = enumerate_partition(build_instance(KernelSpec(KernelVariant.PURE_DEPHASING, BathSpec(s, lam)), L, dtau))
    # Griffiths: ferromagnetic couplings give nonnegative correlations
    assert np.all(res.correlations >= -1e-12) and np.all(res.correlations <= 1 + 1e-12)
    assert res.log_z_ratio >= -1e-12
    assert np.all(res.magnetization == 0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.01, 3.0))
def test_flow_heads_to_fixed_point(s, lam0):
    tr = integrate_flow(lam0, s, 10.0, 0.5)
    target = math.sqrt(1 - s) if s < 1 else 0.0
    gaps = np.abs(tr.lam - target)
    assert np.all(np.diff(gaps) <= 1e-12)
    assert np.allclose(tr.lam, closed_form_lambda(lam0, s, tr.ell), rtol=1e-8)


@given(st.floats(0.0, 3.0), st.floats(0.0, 3.0), st.floats(0.05, 0.95))
def test_phase_label_consistent(s, lam0, s_star):
    lab = classify_phase(s, lam0, s_star)
    assert ENTROPY_OF[lab.label] is lab.entropy_class
    assert lab.free == (lam0 == 0)
