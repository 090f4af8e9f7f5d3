from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groundmode.evolution import (
    IntegratorConfig,
    _ground_in_triplet_space,
    ensemble_run,
    evolve,
    expm_apply,
    init_rng,
    initial_state,
    read_trace_csv,
    step,
    trajectory_seeds,
    write_trace_csv,
)
from groundmode.hamiltonian import HamiltonianConfig, NoiseSchedule, wire_hamiltonian
from groundmode.network import BooleanNetwork, canonical_network, random_network
from groundmode.spin_algebra import PAIR_Q_BASIS, maxabs, symmetrizer

CANON = canonical_network()
SINGLET = np.asarray(PAIR_Q_BASIS)[:, 0]


def random_hermitian(rng, d, scale=1.0):
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * (A + A.conj().T) / 2


def expm_oracle(H, dt):
    w, V = np.linalg.eigh(H)
    return V @ np.diag(np.exp(-1j * w * dt)) @ V.conj().T


# ---------------------------------------------------------------- initial states


@pytest.mark.parametrize("kind", ["random_symmetric", "uniform_triplet", "basis_symmetric"])
@pytest.mark.parametrize("T", [1, 2, 3])
def test_initial_states_in_triplet_space(kind, T):
    n = random_network(T, T, np.random.default_rng(T))
    P = symmetrizer(T)
    for s in range(5):
        psi = initial_state(n, kind, s)
        assert abs(np.linalg.norm(psi) - 1) < 1e-12
        assert np.linalg.norm(psi - P @ psi) < 1e-12


def test_random_symmetric_ensemble_is_uniform_on_triplets():
    P = symmetrizer(2)
    rng = np.random.default_rng(0)
    rho = np.zeros((16, 16), dtype=complex)
    dist = {}
    for k in range(1, 4001):
        psi = initial_state(CANON, "random_symmetric", rng)
        rho += np.outer(psi, psi.conj())
        if k in (250, 1000, 4000):
            dist[k] = np.linalg.norm(rho / k - P / 9)
    assert dist[250] > dist[1000] > dist[4000]
    assert dist[4000] < 0.03


def test_unknown_init_kind():
    with pytest.raises(ValueError):
        initial_state(CANON, "plane_wave", 0)


def test_field_ground_is_lowest_projected_state():
    rng = np.random.default_rng(4)
    P = symmetrizer(2)
    H = random_hermitian(rng, 16)
    psi = _ground_in_triplet_space(H[None], P)[0]
    assert np.linalg.norm(psi - P @ psi) < 1e-10
    # oracle: minimize over an orthonormal basis of ran(P)
    w, V = np.linalg.eigh(P)
    U = V[:, w > 0.5]
    emin = np.linalg.eigvalsh(U.conj().T @ H @ U).min()
    assert np.vdot(psi, H @ psi).real == pytest.approx(emin, abs=1e-10)


# ---------------------------------------------------------------- single steps


def test_step_zero_hamiltonian():
    psi = initial_state(CANON, "random_symmetric", 1)
    assert np.array_equal(step(psi, np.zeros((16, 16)), 0.1), psi)


def test_step_eigenstate_phase():
    psi = np.zeros(4, dtype=complex)
    psi[2] = 1
    H = np.diag([0.0, 1.0, 2.5, -1.0])
    out = step(psi, H, 0.3)
    assert abs(out[2] - np.exp(-1j * 2.5 * 0.3)) < 1e-14
    assert np.sum(np.abs(out)) == pytest.approx(1.0, abs=1e-14)


def test_step_rejects_non_hermitian():
    H = np.zeros((4, 4), dtype=complex)
    H[0, 1] = 1.0
    with pytest.raises(ValueError):
        step(np.eye(4)[0], H, 0.1)


def test_first_order_residual_is_second_order():
    rng = np.random.default_rng(2)
    H = random_hermitian(rng, 16)
    psi = initial_state(CANON, "random_symmetric", rng)
    res = []
    for dt in (1e-2, 5e-3):
        res.append(np.linalg.norm(step(psi, H, dt) - (psi - 1j * dt * H @ psi)))
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.05)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-4, 3.0))
def test_expm_apply_matches_eigh_oracle(seed, dt):
    rng = np.random.default_rng(seed)
    H = np.stack([random_hermitian(rng, 16, scale) for scale in (0.1, 1.0, 5.0)])
    psi = rng.standard_normal((3, 16)) + 1j * rng.standard_normal((3, 16))
    out = expm_apply(H, psi, dt)
    for b in range(3):
        assert np.allclose(out[b], expm_oracle(H[b], dt) @ psi[b], atol=1e-11)


def test_expm_apply_rows_are_independent():
    rng = np.random.default_rng(3)
    H = np.stack([random_hermitian(rng, 16, s) for s in (0.1, 10.0)])
    psi = rng.standard_normal((2, 16)) + 0j
    both = expm_apply(H, psi, 0.2)
    assert np.array_equal(both[0], expm_apply(H[:1], psi[:1], 0.2)[0])


def test_per_step_unitarity():
    rng = np.random.default_rng(5)
    for _ in range(100):
        H = random_hermitian(rng, 16, 2.0)
        psi = initial_state(CANON, "random_symmetric", rng)
        assert abs(np.linalg.norm(step(psi, H, 0.01)) - 1) < 1e-12


# ---------------------------------------------------------------- trajectories


def test_zero_noise_keeps_stationary_state():
    # eigenvector of H_N in the triplet space: the unique solution state
    sched = NoiseSchedule(sigma0=0.0)
    cfg = IntegratorConfig(dt=0.01, t_max=2.0, record_stride=20)
    w, V = np.linalg.eigh(symmetrizer(2) @ wire_hamiltonian(HamiltonianConfig(CANON)) @ symmetrizer(2) + 5 * (np.eye(16) - symmetrizer(2)))
    psi = V[:, 0]
    tr = evolve(CANON, cfg, sched, psi)
    assert np.allclose(tr.p0, 1.0, atol=1e-12)
    assert abs(abs(np.vdot(psi, tr.final_state)) - 1) < 1e-12


def test_zero_noise_random_state_has_constant_populations():
    tr = evolve(CANON, IntegratorConfig(dt=0.01, t_max=1.0), NoiseSchedule(sigma0=0.0), "random_symmetric")
    assert np.ptp(tr.p0) < 1e-12 and np.ptp(tr.pF) < 1e-12


@pytest.mark.parametrize("T", [1, 2, 3])
def test_actual_regime_stays_in_triplet_space(T):
    n = random_network(T, 2 * T, np.random.default_rng(10 + T))
    cfg = IntegratorConfig(dt=0.0025, t_max=5.0, record_stride=100)
    tr = evolve(n, cfg, NoiseSchedule(sigma0=0.5, seed=T), "random_symmetric")
    assert tr.pV.max() <= 1e-10
    assert np.allclose(tr.p0 + tr.pF, 1.0, atol=1e-10)


def test_comparison_regime_leaks():
    cfg = IntegratorConfig(dt=0.004, t_max=5.0, regime="comparison", record_stride=50)
    tr = evolve(CANON, cfg, NoiseSchedule(sigma0=0.5, seed=1), "random_symmetric")
    assert tr.pV.max() > 1e-3
    assert np.allclose(tr.p0 + tr.pF + tr.pV, 1.0, atol=1e-10)


def test_projected_regime_has_no_violation_and_decaying_weight():
    cfg = IntegratorConfig(dt=0.004, t_max=3.0, regime="projected", record_stride=30)
    tr = evolve(CANON, cfg, NoiseSchedule(sigma0=0.5, seed=2), "random_symmetric")
    assert tr.pV.max() < 1e-12
    assert np.all(np.diff(tr.weight) <= 1e-15)
    assert 0 < tr.survival_weight < 1
    assert not tr.extinguished


def test_projected_extinction_flag():
    psi = np.kron(SINGLET, SINGLET)
    cfg = IntegratorConfig(dt=0.01, t_max=0.1, regime="projected")
    tr = evolve(CANON, cfg, NoiseSchedule(sigma0=0.0), psi)
    assert tr.extinguished
    assert tr.survival_weight == 0.0
    # frozen state is left untouched after extinction
    assert np.allclose(tr.final_state, psi)


def test_symmetrizer_expectation_conserved_in_actual_regime():
    P = symmetrizer(2)
    rng = np.random.default_rng(8)
    z = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    psi = z / np.linalg.norm(z)
    cfg = IntegratorConfig(dt=0.004, t_max=2.0, record_stride=50, store_states=True)
    tr = evolve(CANON, cfg, NoiseSchedule(sigma0=0.5, seed=3), psi)
    ev = [np.vdot(s, P @ s).real for s in tr.states]
    assert np.ptp(ev) < 1e-10
    assert tr.pV == pytest.approx(1 - ev[0], abs=1e-10)


@pytest.mark.slow
def test_cumulative_norm_drift_over_many_steps():
    cfg = IntegratorConfig(dt=0.002, t_max=200.0, record_stride=10_000)
    assert cfg.n_steps == 100_000
    tr = evolve(CANON, cfg, NoiseSchedule(sigma0=0.5, envelope="constant", seed=4), "random_symmetric")
    assert abs(np.linalg.norm(tr.final_state) - 1) < 1e-8


def test_projection_converges_first_order():
    # matched noise: both twins see one realization on a 1e-3 grid
    sched = NoiseSchedule(sigma0=0.5, envelope="constant", seed=21, noise_dt=1e-3)
    psi0 = initial_state(CANON, "random_symmetric", 21)
    dts = [4e-3, 2e-3, 1e-3]
    dist = []
    for dt in dts:
        a = evolve(CANON, IntegratorConfig(dt=dt, t_max=1.0, record_stride=10**6, pair_mean_fields=True), sched, psi0)
        p = evolve(CANON, IntegratorConfig(dt=dt, t_max=1.0, regime="projected", record_stride=10**6), sched, psi0)
        dist.append(np.linalg.norm(a.final_state - p.final_state))
    order = np.polyfit(np.log(dts), np.log(dist), 1)[0]
    assert 0.8 <= order <= 1.2


def test_dt_bound_enforced():
    with pytest.raises(ValueError, match="too large"):
        evolve(CANON, IntegratorConfig(dt=0.05, t_max=1.0), NoiseSchedule(sigma0=1.0), "random_symmetric")


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.0, t_max=1.0)
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.1, t_max=1.0, regime="exact")
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.1, t_max=1.0, record_stride=0)


def test_unnormalized_init_rejected():
    with pytest.raises(ValueError, match="normalized"):
        evolve(CANON, IntegratorConfig(dt=0.01, t_max=0.1), NoiseSchedule(sigma0=0.0), np.ones(16))


# ---------------------------------------------------------------- ensembles


def test_trajectory_seeds_are_prefix_stable():
    assert trajectory_seeds(5, 3) == trajectory_seeds(5, 10)[:3]
    assert len(set(trajectory_seeds(5, 100))) == 100


def test_single_trajectory_ensemble_equals_evolve():
    cfg = IntegratorConfig(dt=0.004, t_max=1.0, record_stride=25)
    sched = NoiseSchedule(sigma0=0.5, seed=0)
    res = ensemble_run(CANON, cfg, sched, 1, master_seed=9)
    seed = trajectory_seeds(9, 1)[0]
    tr = evolve(CANON, cfg, replace(sched, seed=seed), initial_state(CANON, "random_symmetric", init_rng(seed)))
    assert np.array_equal(res.p0, tr.p0)
    assert np.array_equal(res.pF, tr.pF)


def test_ensemble_is_deterministic_and_batch_independent():
    cfg = IntegratorConfig(dt=0.004, t_max=1.0, regime="projected", record_stride=25)
    sched = NoiseSchedule(sigma0=0.5)
    a = ensemble_run(CANON, cfg, sched, 7, master_seed=3)
    b = ensemble_run(CANON, cfg, sched, 7, master_seed=3, batch_size=2)
    for name in ("p0", "pF", "pV", "energy", "weight"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert a.samples == b.samples and a.counts == b.counts
    c = ensemble_run(CANON, cfg, sched, 7, master_seed=4)
    assert not np.array_equal(a.p0, c.p0)


@pytest.mark.parametrize("regime", ["actual", "comparison", "projected"])
def test_ensemble_probabilities_sum_to_one(regime):
    cfg = IntegratorConfig(dt=0.004, t_max=1.0, regime=regime, record_stride=25)
    res = ensemble_run(CANON, cfg, NoiseSchedule(sigma0=0.5), 6, master_seed=2)
    assert np.allclose(res.p0 + res.pF + res.pV, 1.0, atol=1e-9)


def test_ensemble_measurements_obey_triodes():
    cfg = IntegratorConfig(dt=0.004, t_max=0.5, record_stride=25)
    res = ensemble_run(CANON, cfg, NoiseSchedule(sigma0=0.5), 40, master_seed=1)
    assert sum(res.counts.values()) == 40
    for a in res.samples:
        assert sum(a[:3]) == 2 and sum(a[3:]) == 2


def test_zero_trajectories_rejected():
    with pytest.raises(ValueError):
        ensemble_run(CANON, IntegratorConfig(dt=0.01, t_max=0.1), NoiseSchedule(), 0, 1)


def test_trace_csv_round_trip(tmp_path):
    res = ensemble_run(CANON, IntegratorConfig(dt=0.004, t_max=0.5, record_stride=5), NoiseSchedule(sigma0=0.5), 3, 2)
    path = tmp_path / "trace.csv"
    write_trace_csv(path, res)
    assert path.read_text().splitlines()[0] == "t,p0,pF,pV,E_N,weight"
    back = read_trace_csv(path)
    for key, name in (("t", "times"), ("p0", "p0"), ("pF", "pF"), ("pV", "pV"), ("E_N", "energy")):
        assert np.array_equal(back[key], getattr(res, name))


def test_trace_csv_missing_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,p0\n0.0,1.0\n")
    with pytest.raises(ValueError, match="missing"):
        read_trace_csv(path)


def test_single_triode_zero_wires_has_no_frustration():
    n = BooleanNetwork(((1, 2, 3),))
    tr = evolve(n, IntegratorConfig(dt=0.005, t_max=1.0), NoiseSchedule(sigma0=1.0), "random_symmetric")
    assert np.allclose(tr.p0, 1.0, atol=1e-12)
    assert np.allclose(tr.energy, 0.0, atol=1e-12)
