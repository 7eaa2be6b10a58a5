from fractions import Fraction

import numpy as np
import pytest

from zdg.gibbs import (cauchy_decay_study, chain_mean, effective_sample_size,
                       importance_ensemble, integrated_autocorr,
                       lr_stability_study, nelson_scan, pcn_chain,
                       pcn_parallel, weighted_mean)
from zdg.interaction import KernelSpec, assemble_interaction, interaction_energy
from zdg.zonal import build_basis

CONSTANT = KernelSpec(kind="constant", kappa=1.0)


@pytest.fixture(scope="module")
def tensor_n3():
    basis = build_basis(2, 3, grid_size=24)
    return assemble_interaction(basis, CONSTANT)


@pytest.fixture(scope="module")
def tensor_n16():
    basis = build_basis(2, 16, grid_size=50)
    return assemble_interaction(basis, CONSTANT)


def test_effective_sample_size_limits():
    assert effective_sample_size(np.zeros(100)) == pytest.approx(100.0)
    lw = np.full(100, -30.0)
    lw[0] = 0.0
    assert effective_sample_size(lw) == pytest.approx(1.0, rel=1e-10)


def test_weighted_mean_reduces_to_plain_mean():
    x = np.arange(10.0)
    mean, se = weighted_mean(x, np.zeros(10))
    assert mean == pytest.approx(x.mean())
    assert se == pytest.approx(x.std() / np.sqrt(10), rel=0.1)


def test_weighted_mean_known_case():
    x = np.array([1.0, 3.0])
    mean, _ = weighted_mean(x, np.log([0.25, 0.75]))
    assert mean == pytest.approx(0.25 * 1 + 0.75 * 3)


def test_integrated_autocorr_iid_and_ar1():
    rng = np.random.default_rng(3)
    iid = rng.normal(size=20000)
    assert integrated_autocorr(iid) == pytest.approx(1.0, abs=0.15)
    phi = 0.8
    ar = np.empty(40000)
    ar[0] = 0.0
    noise = rng.normal(size=40000)
    for i in range(1, 40000):
        ar[i] = phi * ar[i - 1] + noise[i]
    expected = (1 + phi) / (1 - phi)
    assert integrated_autocorr(ar) == pytest.approx(expected, rel=0.25)


def test_importance_ensemble_reproducible(tensor_n3):
    a = importance_ensemble(tensor_n3, 500, seed=11)
    b = importance_ensemble(tensor_n3, 500, seed=11)
    assert np.array_equal(a.coeffs, b.coeffs)
    assert np.array_equal(a.log_weights, b.log_weights)
    assert 1.0 <= a.ess <= 500.0
    assert np.all(np.isfinite(a.log_weights))
    c = importance_ensemble(tensor_n3, 500, seed=12)
    assert not np.allclose(a.coeffs, c.coeffs)


def test_pcn_chain_basics(tensor_n3):
    ens = pcn_chain(tensor_n3, 400, seed=21)
    assert ens.coeffs.shape == (400, 4)
    assert 0.0 < ens.acc_rate < 1.0
    assert ens.thin >= 1
    assert ens.iact >= 1.0
    again = pcn_chain(tensor_n3, 400, seed=21)
    assert np.array_equal(ens.coeffs, again.coeffs)


def test_pcn_parallel_shape_and_rate(tensor_n3):
    ens = pcn_parallel(tensor_n3, 256, 50, seed=5, beta=0.5)
    assert ens.coeffs.shape == (256, 4)
    assert 0.05 < ens.acc_rate < 0.95


def test_pcn_matches_importance_moments(tensor_n3):
    # same target measure through two unrelated samplers
    imp = importance_ensemble(tensor_n3, 60000, seed=31)
    chain = pcn_chain(tensor_n3, 4000, seed=32)
    for k in range(4):
        x_imp = np.abs(imp.coeffs[:, k]) ** 2
        m_imp, se_imp = weighted_mean(x_imp, imp.log_weights)
        x_ch = np.abs(chain.coeffs[:, k]) ** 2
        m_ch, se_ch, _ = chain_mean(x_ch)
        combined = np.hypot(se_imp, se_ch)
        assert abs(m_imp - m_ch) < 4 * combined


def test_gibbs_weight_reweights_prior_mean(tensor_n3):
    # E_gibbs[X] = E_mu[X R] / E_mu[R]; check against pcn on the energy
    imp = importance_ensemble(tensor_n3, 80000, seed=41)
    e_vals = interaction_energy(tensor_n3, imp.coeffs)
    m_imp, se_imp = weighted_mean(e_vals, imp.log_weights)
    chain = pcn_chain(tensor_n3, 4000, seed=42)
    e_ch = interaction_energy(tensor_n3, chain.coeffs)
    m_ch, se_ch, _ = chain_mean(e_ch)
    assert abs(m_imp - m_ch) < 4 * np.hypot(se_imp, se_ch)


def test_cauchy_decay_study(tensor_n16):
    out = cauchy_decay_study(tensor_n16, [2, 4, 8], 40000, seed=51)
    assert out["slope"] < -0.1
    for row in out["rows"]:
        assert row["exact"] <= row["bound"] + 1e-12
        assert abs(row["z"]) < 3.5
    with pytest.raises(ValueError):
        cauchy_decay_study(tensor_n16, [16], 10, seed=1)


def test_nelson_scan_constant_kernel_closed_form(tensor_n16):
    out = nelson_scan(tensor_n16, [2, 4, 8], 20000, seed=61)
    for row in out["rows"]:
        n = row["n"]
        harmonic = Fraction(0)
        for p in range(n + 1):
            harmonic += Fraction(1, p + 1)
        assert row["bound"] == pytest.approx(-3.0 * float(harmonic) ** 2,
                                             rel=1e-12)
        assert row["respects_bound"]
        assert row["min"] >= row["bound"]
    assert out["growth_slope"] > 0


def test_lr_stability_study(tensor_n16):
    out = lr_stability_study(tensor_n16, [2, 4, 8, 16], [2, 4], 30000,
                             seed=71)
    for r in (2, 4):
        rows = out[r]["rows"]
        assert all(np.isfinite(row["log_norm"]) for row in rows)
        # The norms climb toward a finite limit: each doubling of the
        # cutoff adds less than the previous one, so the family stays
        # uniformly L^r bounded.  A divergent family would show
        # increments that grow with the cutoff instead.
        deltas = [inc["delta"] for inc in out[r]["increments"]]
        assert all(d < 0.5 for d in deltas)
        for prev, nxt in zip(deltas, deltas[1:]):
            assert nxt < prev + 0.02


def test_hypercontractivity_of_chaos_increment(tensor_n16):
    # degree-4 chaos: ||X||_4 <= 3^2 ||X||_2
    from zdg.field import GaussianSampleSpec, gaussian_coeffs
    hi = tensor_n16.slice(8)
    lo = tensor_n16.slice(4)
    g = gaussian_coeffs(GaussianSampleSpec(seed=81, label="test.hyper"),
                        hi.n_modes, size=50000)
    x = interaction_energy(hi, g / hi.lam) \
        - interaction_energy(lo, g[:, :5] / lo.lam)
    l2 = np.sqrt(np.mean(x ** 2))
    l4 = np.mean(x ** 4) ** 0.25
    assert l4 <= 9.0 * l2
