import numpy as np
import pytest

from zdg.dynamics import (FlowConfig, ensemble_observables, flow, flow_energy,
                          hamiltonian, invariance_test, mass, reversal_error,
                          vector_field, vector_field_check)
from zdg.field import GaussianSampleSpec, gaussian_coeffs
from zdg.interaction import KernelSpec, assemble_interaction
from zdg.zonal import build_basis

CONSTANT = KernelSpec(kind="constant", kappa=1.0)
SEPARABLE = KernelSpec(kind="separable", profile="one_plus_cos", amplitude=1.0)


@pytest.fixture(scope="module")
def tensor_const():
    return assemble_interaction(build_basis(2, 6, grid_size=30), CONSTANT)


@pytest.fixture(scope="module")
def tensor_sep():
    return assemble_interaction(build_basis(2, 5, grid_size=28), SEPARABLE)


@pytest.fixture(scope="module")
def tensor_zero():
    return assemble_interaction(build_basis(2, 6, grid_size=30),
                                KernelSpec(kind="constant", kappa=0.0))


def sample_state(tensor, seed=1, size=None):
    g = gaussian_coeffs(GaussianSampleSpec(seed=seed, label="test.dyn"),
                        tensor.n_modes, size)
    return g / tensor.lam


def test_hamiltonian_pinned_vacuum_value():
    t0 = assemble_interaction(build_basis(2, 0, grid_size=8), CONSTANT)
    zero = np.zeros(1, dtype=complex)
    assert hamiltonian(t0, zero) == pytest.approx(0.5, abs=1e-12)
    assert flow_energy(t0, zero) == pytest.approx(1.0, abs=1e-12)


def test_vector_field_gradient_audit(tensor_sep, tensor_const):
    for t in (tensor_sep, tensor_const):
        out = vector_field_check(t, seed=3)
        assert out["grad_quarter_energy"] < 1e-6
        assert out["directional"] < 1e-6


def test_free_flow_exact_with_lawson(tensor_zero):
    c0 = sample_state(tensor_zero, seed=5)
    cfg = FlowConfig(dt=1e-2, t_final=3.0, integrator="lawson-rk4")
    traj = flow(tensor_zero, c0, cfg)
    omega = tensor_zero.lam ** 2
    exact = c0 * np.exp(-1j * omega * 3.0)
    assert np.max(np.abs(traj.states[-1] - exact)) < 1e-12


def test_free_flow_midpoint_phase_error_matches_theory(tensor_zero):
    # midpoint rotates each mode by 2 atan(omega h / 2) per step; the phase
    # defect per step is omega^3 h^3 / 12 + O(h^5)
    c0 = np.zeros(tensor_zero.n_modes, dtype=complex)
    c0[-1] = 1.0
    omega = float(tensor_zero.lam[-1] ** 2)
    h = 1e-2
    t_final = 2.0
    cfg = FlowConfig(dt=h, t_final=t_final, integrator="midpoint")
    traj = flow(tensor_zero, c0, cfg)
    exact = np.exp(-1j * omega * t_final)
    got = traj.states[-1][-1]
    predicted_defect = (omega * h) ** 3 / 12.0 * (t_final / h)
    measured = abs(np.angle(got / exact))
    assert measured == pytest.approx(predicted_defect, rel=2e-3)


def test_constant_kernel_conservation(tensor_const):
    c0 = sample_state(tensor_const, seed=7)
    cfg = FlowConfig(dt=5e-3, t_final=2.0, integrator="midpoint",
                     solver_tol=1e-14, sample_every=50)
    traj = flow(tensor_const, c0, cfg)
    m0 = mass(c0)
    assert np.max(np.abs(traj.mass - m0)) < 1e-11 * m0
    h0 = traj.hamiltonian[0]
    assert np.max(np.abs(traj.hamiltonian - h0)) < 1e-10 * max(1, abs(h0))
    f0 = traj.flow_energy[0]
    assert np.max(np.abs(traj.flow_energy - f0)) < 1e-10 * max(1, abs(f0))
    # at a constant kernel every mode modulus is individually conserved
    assert np.allclose(np.abs(traj.states[-1]), np.abs(c0), atol=1e-11)


def test_flow_energy_drift_second_order_at_coupling_kernel(tensor_sep):
    # The midpoint rule conserves quadratic invariants exactly but the
    # quartic part of the flow energy only up to a bounded O(dt^2) defect
    # (no secular growth).  Check the bound and the dt^2 scaling.
    c0 = sample_state(tensor_sep, seed=9)
    drifts = {}
    for dt in (4e-3, 2e-3):
        cfg = FlowConfig(dt=dt, t_final=1.0, integrator="midpoint",
                         solver_tol=1e-14, sample_every=50)
        traj = flow(tensor_sep, c0, cfg)
        drifts[dt] = np.max(np.abs(traj.flow_energy - traj.flow_energy[0]))
        assert drifts[dt] < 20.0 * dt ** 2
        m0 = traj.mass[0]
        assert np.max(np.abs(traj.mass - m0)) < 1e-11 * m0
    ratio = drifts[4e-3] / drifts[2e-3]
    assert 3.2 < ratio < 4.8
    # the observable (1/2)K + (1/4)E is NOT an invariant of this flow, so
    # its drift dwarfs the integrator defect (traj is the dt=2e-3 run)
    h_drift = np.max(np.abs(traj.hamiltonian - traj.hamiltonian[0]))
    assert h_drift > 100 * drifts[2e-3]


def test_integrators_agree_on_coupled_flow(tensor_sep):
    c0 = sample_state(tensor_sep, seed=11)
    mid = flow(tensor_sep, c0, FlowConfig(dt=2e-4, t_final=0.5,
                                          integrator="midpoint",
                                          solver_tol=1e-14))
    law = flow(tensor_sep, c0, FlowConfig(dt=2e-4, t_final=0.5,
                                          integrator="lawson-rk4"))
    assert np.max(np.abs(mid.states[-1] - law.states[-1])) < 2e-6


def test_reversal(tensor_sep):
    c0 = sample_state(tensor_sep, seed=13)
    cfg = FlowConfig(dt=1e-3, t_final=1.0, integrator="midpoint",
                     solver_tol=1e-14)
    assert reversal_error(tensor_sep, c0, cfg) < 1e-8


def test_gauge_equivariance(tensor_sep):
    c0 = sample_state(tensor_sep, seed=15)
    cfg = FlowConfig(dt=5e-3, t_final=0.5, integrator="midpoint",
                     solver_tol=1e-14)
    alpha = 0.83
    a = flow(tensor_sep, np.exp(1j * alpha) * c0, cfg).states[-1]
    b = np.exp(1j * alpha) * flow(tensor_sep, c0, cfg).states[-1]
    assert np.max(np.abs(a - b)) < 1e-10


def test_high_mode_riders(tensor_const):
    # state carries extra modes beyond the tensor cutoff; they must rotate
    # with the exact free phases while the low block is unaffected by them
    c0 = sample_state(tensor_const, seed=17)
    extra = np.array([0.3 - 0.2j, 0.1 + 0.4j])
    full = np.concatenate([c0, extra])
    cfg = FlowConfig(dt=1e-2, t_final=1.0, integrator="midpoint",
                     solver_tol=1e-13)
    traj_full = flow(tensor_const, full, cfg)
    traj_low = flow(tensor_const, c0, cfg)
    assert np.allclose(traj_full.states[-1][:7], traj_low.states[-1],
                       atol=1e-13)
    n_hi = np.arange(7, 9)
    omega_hi = n_hi + 1.0
    expect = extra * np.exp(-1j * omega_hi * 1.0)
    assert np.allclose(traj_full.states[-1][7:], expect, atol=1e-13)


def test_batched_flow_matches_loop(tensor_sep):
    states = sample_state(tensor_sep, seed=19, size=4)
    cfg = FlowConfig(dt=5e-3, t_final=0.3, integrator="midpoint",
                     solver_tol=1e-14)
    batch = flow(tensor_sep, states, cfg).states[-1]
    for i in range(4):
        single = flow(tensor_sep, states[i], cfg).states[-1]
        assert np.allclose(batch[i], single, atol=1e-10)


def test_flow_argument_validation(tensor_const):
    c0 = sample_state(tensor_const, seed=21)
    with pytest.raises(ValueError):
        flow(tensor_const, c0, FlowConfig(dt=1e-2, t_final=0.305))
    with pytest.raises(ValueError):
        flow(tensor_const, c0, FlowConfig(integrator="rk9000"))
    with pytest.raises(ValueError):
        flow(tensor_const, c0[:3], FlowConfig())


def test_trajectory_sampling_grid(tensor_const):
    c0 = sample_state(tensor_const, seed=23)
    cfg = FlowConfig(dt=0.01, t_final=0.1, sample_every=4)
    traj = flow(tensor_const, c0, cfg)
    assert np.allclose(traj.times, [0.0, 0.04, 0.08, 0.1])


def test_observables_table(tensor_const):
    coeffs = sample_state(tensor_const, seed=25, size=64)
    obs = ensemble_observables(tensor_const, coeffs, kmax=3, sobolev_s=-0.6)
    assert set(obs) == {"re_c0", "im_c0", "abs2_c0", "re_c1", "im_c1",
                        "abs2_c1", "re_c2", "im_c2", "abs2_c2", "re_c3",
                        "im_c3", "abs2_c3", "energy", "hs_norm"}
    assert all(v.shape == (64,) for v in obs.values())


def test_invariance_positive_and_negative_controls(tensor_sep):
    common = dict(n_ensemble=2500, t_final=1.5, dt=0.01, seed=2024,
                  burn_steps=600, beta=0.35, kmax=4)
    good = invariance_test(tensor_sep, **common)
    assert good["all_pass"], [r for r in good["rows"] if not r["pass"]]
    bad = invariance_test(tensor_sep, disable_counterterms=True, **common)
    assert not bad["all_pass"]
    energy_row = next(r for r in bad["rows"] if r["observable"] == "energy")
    assert not energy_row["pass"]
