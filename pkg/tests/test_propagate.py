import logging

import numpy as np
import pytest
from scipy.linalg import expm

from conftest import DL, plus_state, random_feature_pair, two_level_model
from ttnheom import bath, envs, generator as G, oracle, propagate as P, ttn
from ttnheom.units import CM_PER_INVFS

logging.disable(logging.WARNING)


def _dl_generator(n=8, energy=0.0, coupling=1000.0):
    model = two_level_model(energy=energy, coupling=coupling)
    fs = bath.decompose([DL], 300.0, 0)
    space = G.make_space(fs, n)
    return G.build_generator(model, fs, space), space


def _pair_generator(rng, n=4):
    model = two_level_model(energy=600.0)
    f1, f2 = random_feature_pair(rng)
    fs = bath.FeatureSet((f1, f2), 300.0, 0)
    space = G.make_space(fs, n)
    return G.build_generator(model, fs, space), space


def test_closed_system_matches_matrix_exponential():
    energy = 2500.0
    model = two_level_model(energy=energy, coupling=0.0)
    fs = bath.decompose([], 300.0, 0)
    gen = G.build_generator(model, fs, G.make_space(fs, 2))
    topo = ttn.make_topology("train", (), 2)
    rho0 = plus_state()
    sched = P.Schedule(100.0, 5.0)
    for strategy, kwargs in (
        ("direct", {"integrator": P.IntegratorConfig(rtol=1e-9, atol=1e-11)}),
        ("ps1", {"ps": P.PsConfig(delta=0.05, rtol=1e-9, atol=1e-11)}),
    ):
        st = ttn.init_state(topo, rho0, 1)
        traj = P.run(st, gen, strategy, sched, **kwargs)
        for row in traj.rows:
            u = expm(-1j * model.h0 * row.t / CM_PER_INVFS)
            ref = u @ rho0 @ u.conj().T
            assert np.max(np.abs(row.rho - ref)) < 1e-8
        # phase of the coherence rotates at the level splitting
        assert traj.rows[-1].rho[0, 1] == pytest.approx(
            0.5 * np.exp(1j * energy / CM_PER_INVFS * 100.0), abs=1e-7
        )


def test_zero_generator_keeps_state(rng):
    gen, space = _pair_generator(rng)
    null = G.SystemModel(2, np.zeros((2, 2)), {"Q": np.zeros((2, 2))})
    fs0 = bath.FeatureSet(
        (
            bath.Feature(1e-30 + 0j, 1e-30 + 0j, -1e-30 + 0j),
            bath.Feature(1e-30 + 0j, 1e-30 + 0j, -1e-30 + 0j),
        ),
        300.0,
        0,
    )
    genz = G.build_generator(null, fs0, G.make_space(fs0, 4))
    topo = ttn.make_topology("train", genz.depths, 2)
    st = ttn.init_state(topo, plus_state(), 4)
    gg = envs.GroupedGenerator.from_sop(genz)
    rho_before = ttn.extract_rho(st)
    P.step_ps1(st, gg, P.PsConfig(delta=0.1))
    assert np.max(np.abs(ttn.extract_rho(st) - rho_before)) < 1e-12
    P.step_ps2(st, gg, P.PsConfig(delta=0.1, svd_tol=1e-10, max_rank=8))
    assert np.max(np.abs(ttn.extract_rho(st) - rho_before)) < 1e-12


@pytest.mark.parametrize(
    "strategy,kwargs",
    [
        ("direct", {"integrator": P.IntegratorConfig(rtol=1e-8, atol=1e-10, epsilon=1e-6)}),
        ("ps1", {"ps": P.PsConfig(delta=0.01, rtol=1e-9, atol=1e-11)}),
        ("ps2", {"ps": P.PsConfig(delta=0.01, svd_tol=1e-10, max_rank=16, rtol=1e-9, atol=1e-11)}),
    ],
)
def test_full_rank_matches_dense(strategy, kwargs, rng):
    gen, space = _pair_generator(rng)
    rho0 = plus_state()
    ref = oracle.dense_run(gen, rho0, 30.0, 2.0)
    topo = ttn.make_topology("balanced", space.depths, 2)
    st = ttn.init_state(topo, rho0, 64)
    traj = P.run(st, gen, strategy, P.Schedule(30.0, 2.0), **kwargs)
    assert traj.max_rho_diff(ref) <= 1e-6
    # the truncated ladder of this deliberately strong random pair breaks
    # conjugate symmetry at ~1e-7 already at the dense level
    _conservation(traj, herm=5e-6)


def _conservation(traj, herm=1e-7):
    for row in traj.rows:
        assert abs(np.trace(row.rho) - 1.0) <= 1e-7
        assert np.max(np.abs(row.rho - row.rho.conj().T)) <= herm
        assert row.purity <= 1.0 + 1e-7


def test_ps_semiunitarity_many_steps(rng):
    gen, space = _pair_generator(rng)
    topo = ttn.make_topology("train", space.depths, 2)
    st = ttn.init_state(topo, plus_state(), 4)
    gg = envs.GroupedGenerator.from_sop(gen)
    cfg = P.PsConfig(delta=0.05)
    for _ in range(200):
        P.step_ps1(st, gg, cfg)
    assert max(ttn.check_semiunitary(st).values()) <= 1e-10


def test_ps2_rank_growth_and_cap(rng):
    gen, space = _pair_generator(rng, n=6)
    topo = ttn.make_topology("train", space.depths, 2)
    st = ttn.init_state(topo, plus_state(), 1)
    gg = envs.GroupedGenerator.from_sop(gen)
    cfg = P.PsConfig(delta=0.1, svd_tol=1e-9, max_rank=5)
    P.step_ps2(st, gg, cfg)
    assert st.max_rank() > 1  # the bath immediately entangles the system
    for _ in range(20):
        P.step_ps2(st, gg, cfg)
    assert st.max_rank() <= 5


def test_trotter_order_one_step(rng):
    """Local error of the splitting step.

    At full rank the splitting reproduces the exact flow (defect at
    roundoff); at reduced rank the Richardson self-defect shows the cubic
    local error, halving the step cuts it by ~8x.
    """
    gen, space = _dl_generator(n=6)
    topo = ttn.make_topology("train", space.depths, 2)
    gg = envs.GroupedGenerator.from_sop(gen)

    full = ttn.init_state(topo, plus_state(), 4)
    for _ in range(100):
        P.step_ps1(full, gg, P.PsConfig(delta=0.05, rtol=1e-11, atol=1e-13))
    om0 = ttn.dense_edo(full)
    from ttnheom.rk import integrate

    for delta in (0.04, 0.02, 0.01):
        y, _ = integrate(
            lambda t, ys: [oracle.dense_rhs(ys[0], gen, t)],
            [om0], full.time, full.time + delta, rtol=1e-12, atol=1e-14,
        )
        work = full.copy()
        P.step_ps1(work, gg, P.PsConfig(delta=delta, rtol=1e-12, atol=1e-14))
        assert np.max(np.abs(ttn.extract_rho(work) - y[0][:, :, 0])) < 1e-12

    low = ttn.init_state(topo, plus_state(), 2)
    for _ in range(100):
        P.step_ps1(low, gg, P.PsConfig(delta=0.05, rtol=1e-11, atol=1e-13))
    defects = []
    for delta in (0.04, 0.02, 0.01):
        one = low.copy()
        P.step_ps1(one, gg, P.PsConfig(delta=delta, rtol=1e-12, atol=1e-14))
        two = low.copy()
        for _ in range(2):
            P.step_ps1(two, gg, P.PsConfig(delta=delta / 2, rtol=1e-12, atol=1e-14))
        defects.append(np.max(np.abs(ttn.extract_rho(one) - ttn.extract_rho(two))))
    assert 4.0 <= defects[0] / defects[1] <= 16.0
    assert 4.0 <= defects[1] / defects[2] <= 16.0


def test_mixed_switches_once(rng, caplog):
    gen, space = _pair_generator(rng, n=6)
    topo = ttn.make_topology("train", space.depths, 2)
    st = ttn.init_state(topo, plus_state(), 1)
    traj = P.run(
        st,
        gen,
        "mixed",
        P.Schedule(10.0, 1.0),
        mixed=P.MixedConfig(
            ps2=P.PsConfig(delta=0.05, svd_tol=1e-9, max_rank=6),
            direct=P.IntegratorConfig(rtol=1e-7, atol=1e-9, epsilon=1e-5),
            switch_rank=3,
        ),
    )
    assert st.max_rank() >= 3
    _conservation(traj, herm=5e-6)


def test_run_zero_horizon(rng):
    gen, space = _pair_generator(rng)
    topo = ttn.make_topology("train", space.depths, 2)
    st = ttn.init_state(topo, plus_state(), 2)
    traj = P.run(st, gen, "direct", P.Schedule(0.0, 1.0))
    assert len(traj) == 1
    assert traj.rows[0].t == 0.0


def test_underflow_aborts():
    gen, space = _dl_generator(n=6)
    topo = ttn.make_topology("train", space.depths, 2)
    st = ttn.init_state(topo, plus_state(), 4)
    cfg = P.IntegratorConfig(rtol=1e-13, atol=1e-16, epsilon=1e-9, min_step=1e-4)
    with pytest.raises(P.PropagationAbort):
        P.step_direct(st, envs.GroupedGenerator.from_sop(gen), cfg, 1.0)


def test_topology_independence_same_strategy(rng):
    """Train and balanced trees give the same reduced dynamics."""
    gen, space = _pair_generator(rng, n=4)
    rho0 = plus_state()
    out = {}
    for kind in ("train", "balanced"):
        topo = ttn.make_topology(kind, space.depths, 2)
        st = ttn.init_state(topo, rho0, 16)
        out[kind] = P.run(
            st, gen, "ps1", P.Schedule(30.0, 2.0), ps=P.PsConfig(delta=0.02, rtol=1e-9, atol=1e-11)
        )
    assert out["train"].max_rho_diff(out["balanced"]) <= 1e-6
