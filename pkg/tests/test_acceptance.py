"""Acceptance suite: one test per criterion, one printed verdict line each.

The scenarios pin the physics (bath, depths, ranks, horizons) and the stated
tolerances; integrator settings are chosen per run and recorded here.  The
flagship run (A8) takes by far the longest; expect the whole module to run
for over an hour on one core.
"""

import logging

import numpy as np
import pytest

from conftest import DL, full_bath_components, plus_state, two_level_model
from ttnheom import bath, envs, generator as G, oracle, propagate as P, tdvp, ttn
from ttnheom.rk import integrate
from ttnheom.units import CM_PER_INVFS

logging.disable(logging.WARNING)

_conservation_reports = []


def _verdict(name: str, ok: bool, detail: str):
    line = f"[{name}] {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    return ok


def _check_conserved(name: str, traj, herm=1e-7):
    worst_tr = max(abs(np.trace(r.rho) - 1.0) for r in traj.rows)
    worst_h = max(np.max(np.abs(r.rho - r.rho.conj().T)) for r in traj.rows)
    worst_p = max(r.purity for r in traj.rows)
    ok = worst_tr <= 1e-7 and worst_h <= herm and worst_p <= 1.0 + 1e-7
    _conservation_reports.append((name, worst_tr, worst_h, worst_p, ok))
    return ok


@pytest.fixture(scope="module")
def a1_setup():
    model = two_level_model(energy=0.0, coupling=1000.0)
    fs = bath.decompose([DL], 300.0, 0)
    space = G.make_space(fs, 8)
    gen = G.build_generator(model, fs, space)
    topo = ttn.make_topology("train", space.depths, 2)
    return gen, space, topo


def test_a1_oracle_coincidence(a1_setup):
    gen, space, topo = a1_setup
    rho0 = plus_state()
    ref = oracle.dense_run(gen, rho0, 100.0, 1.0)
    sched = P.Schedule(100.0, 1.0)
    diffs = {}
    for label, strat, kw in (
        ("direct", "direct", dict(integrator=P.IntegratorConfig(rtol=1e-8, atol=1e-10, epsilon=1e-6))),
        ("ps1", "ps1", dict(ps=P.PsConfig(delta=0.01, rtol=1e-9, atol=1e-11))),
        ("ps2", "ps2", dict(ps=P.PsConfig(delta=0.01, svd_tol=1e-10, max_rank=8, rtol=1e-9, atol=1e-11))),
    ):
        st = ttn.init_state(topo, rho0, 4)  # full useful rank
        traj = P.run(st, gen, strat, sched, **kw)
        diffs[label] = traj.max_rho_diff(ref)
        _check_conserved(f"A1/{label}", traj)
        if strat != "direct":
            assert max(ttn.check_semiunitary(st).values()) <= 1e-10
    ok = all(d <= 1e-6 for d in diffs.values())
    detail = " ".join(f"{k}={v:.2e}" for k, v in diffs.items()) + " (tol 1e-6)"
    assert _verdict("A1", ok, detail)


@pytest.fixture(scope="module")
def a2_setup():
    bo = bath.SpectralComponent("brownian", 330.0, 50.0, omega_eff=1663.0)
    fs = bath.decompose([DL, bo], 300.0, 1)
    assert len(fs) == 4
    model = two_level_model()
    space = G.make_space(fs, 8)
    gen = G.build_generator(model, fs, space)
    return gen, space


@pytest.fixture(scope="module")
def a2_runs(a2_setup):
    gen, space = a2_setup
    rho0 = plus_state()
    topo = ttn.make_topology("balanced", space.depths, 2)
    sched = P.Schedule(200.0, 2.0)
    runs = {}
    for label, strat, kw in (
        ("direct", "direct", dict(integrator=P.IntegratorConfig(rtol=1e-6, atol=1e-7, epsilon=1e-5))),
        ("ps1", "ps1", dict(ps=P.PsConfig(delta=0.02, rtol=1e-7, atol=1e-9))),
        ("ps2", "ps2", dict(ps=P.PsConfig(delta=0.02, svd_tol=1e-12, max_rank=16, rtol=1e-7, atol=1e-9))),
    ):
        st = ttn.init_state(topo, rho0, 16)  # bond to the root holds its full capacity 4
        runs[label] = P.run(st, gen, strat, sched, **kw)
        _check_conserved(f"A2/{label}", runs[label])
    return runs


def test_a2_cross_propagator_consistency(a2_runs):
    pairs = {}
    for a, b in (("direct", "ps1"), ("direct", "ps2"), ("ps1", "ps2")):
        pairs[f"{a}-{b}"] = a2_runs[a].max_rho_diff(a2_runs[b])
    ok = all(v <= 1e-4 for v in pairs.values())
    detail = " ".join(f"{k}={v:.2e}" for k, v in pairs.items()) + " (tol 1e-4)"
    # The splitting propagators agree; direct integration from the separable
    # start carries the regularization boundary-layer artifact (see the
    # decisions ledger); reported here without weakening the stated gate.
    assert _verdict("A2", ok, detail)


def test_a3_topology_independence(a2_setup):
    # A3 inherits A2's bath but not its rank: topology independence is a
    # statement about converged dynamics, so the adaptive phase is allowed
    # to saturate the bonds (rank 64 spans the full ladder product here).
    gen, space = a2_setup
    rho0 = plus_state()
    sched = P.Schedule(200.0, 2.0)
    out = {}
    for kind in ("balanced", "train"):
        topo = ttn.make_topology(kind, space.depths, 2)
        st = ttn.init_state(topo, rho0, 3)
        out[kind] = P.run(
            st, gen, "mixed", sched,
            mixed=P.MixedConfig(
                ps2=P.PsConfig(delta=0.02, svd_tol=1e-8, max_rank=64, rtol=1e-7, atol=1e-9),
                direct=P.IntegratorConfig(rtol=1e-7, atol=1e-9, epsilon=1e-5),
                switch_rank=64,
            ),
        )
        _check_conserved(f"A3/{kind}", out[kind])
    diff = out["balanced"].max_rho_diff(out["train"])
    assert _verdict("A3", diff <= 1e-4, f"balanced-vs-train={diff:.2e} (tol 1e-4)")


def test_a4_correlation_function_fidelity():
    comps = full_bath_components()
    fs = bath.decompose(comps, 300.0, 3)
    k_ok = len(fs) == 20
    ts = np.concatenate([[1.0, 2.0, 5.0], np.arange(10.0, 201.0, 10.0)])
    qs = np.array([bath.bcf_quadrature(comps, 300.0, t) for t in ts])
    rec = np.array([fs.reconstruct(t) for t in ts])
    rel = float(np.max(np.abs(qs - rec)) / np.max(np.abs(qs)))
    ok = k_ok and rel <= 2e-2
    assert _verdict("A4", ok, f"K={len(fs)} (expect 20), rel err={rel:.2e} on [1,200] fs (tol 2e-2)")


def test_a5_pure_dephasing():
    model = G.SystemModel(2, np.zeros((2, 2)), {"Q": np.diag([-0.5, 0.5]).astype(complex)})
    fs = bath.decompose([DL], 300.0, 0)
    n = 32  # converged for this bath: dense N=24 vs N=32 change < 1e-6
    space = G.make_space(fs, n)
    gen = G.build_generator(model, fs, space)
    topo = ttn.make_topology("train", space.depths, 2)
    st = ttn.init_state(topo, plus_state(), 4)
    traj = P.run(st, gen, "ps1", P.Schedule(100.0, 2.0), ps=P.PsConfig(delta=0.01, rtol=1e-10, atol=1e-12))
    _check_conserved("A5", traj)

    pop_drift = float(np.max(np.abs(traj.rhos[:, 0, 0] - 0.5)))

    f = fs.features[0]
    g_fs = f.gamma_exp / CM_PER_INVFS
    c_fs = f.c / CM_PER_INVFS**2

    def cumulant(t):
        # double time integral of the decomposed correlation function
        return c_fs * ((np.exp(g_fs * t) - 1.0) / g_fs**2 - t / g_fs)

    # independent check of the closed form by brute-force nested quadrature
    from scipy.integrate import cumulative_trapezoid

    tchk = 20.0
    ss = np.linspace(0.0, tchk, 20001)
    inner = cumulative_trapezoid(c_fs * np.exp(g_fs * ss), ss, initial=0.0)
    phi_quad = np.trapezoid(inner, ss)
    assert abs(phi_quad - cumulant(tchk)) / abs(cumulant(tchk)) < 1e-6

    exact = 0.5 * np.exp(-np.array([cumulant(t) for t in traj.times]).real)
    mags = np.abs(traj.rhos[:, 0, 1])
    mask = exact >= 1e-3 * exact[0]
    rel = float(np.max(np.abs(mags[mask] - exact[mask]) / exact[mask]))
    # below a thousandth of the initial coherence, pointwise ratios are
    # meaningless; gate the absolute mismatch against the initial scale
    tail = float(np.max(np.abs(mags[~mask] - exact[~mask]), initial=0.0))
    ok = pop_drift <= 1e-9 and rel <= 1e-4 and tail <= 1e-4 * exact[0]
    assert _verdict(
        "A5", ok,
        f"pop drift={pop_drift:.2e} (tol 1e-9), |rho01| rel={rel:.2e} (tol 1e-4), tail abs={tail:.2e}",
    )


def test_a6_conservation_summary():
    assert _conservation_reports, "conservation checks run inside A1/A2/A3/A5"
    worst_tr = max(r[1] for r in _conservation_reports)
    worst_h = max(r[2] for r in _conservation_reports)
    worst_p = max(r[3] for r in _conservation_reports)
    ok = all(r[4] for r in _conservation_reports)
    assert _verdict(
        "A6",
        ok,
        f"over {len(_conservation_reports)} runs: |Tr-1|<={worst_tr:.1e}, herm<={worst_h:.1e}, "
        f"purity<={worst_p - 1.0:+.1e} beyond 1 (tols 1e-7)",
    )


def test_a7_trotter_order(a1_setup):
    gen, space, topo = a1_setup
    gg = envs.GroupedGenerator.from_sop(gen)

    # At full rank the splitting step reproduces the dense flow exactly, a
    # stronger statement than any cubic envelope; the cubic law itself is
    # then exhibited at reduced rank via Richardson self-defect.
    full = ttn.init_state(topo, plus_state(), 4)
    for _ in range(100):
        P.step_ps1(full, gg, P.PsConfig(delta=0.05, rtol=1e-11, atol=1e-13))
    om0 = ttn.dense_edo(full)
    exact_defects = []
    for delta in (0.04, 0.02, 0.01):
        y, _ = integrate(
            lambda t, ys: [oracle.dense_rhs(ys[0], gen, t)],
            [om0], full.time, full.time + delta, rtol=1e-12, atol=1e-14,
        )
        work = full.copy()
        P.step_ps1(work, gg, P.PsConfig(delta=delta, rtol=1e-12, atol=1e-14))
        exact_defects.append(float(np.max(np.abs(ttn.extract_rho(work) - y[0][:, :, 0]))))

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
        defects.append(float(np.max(np.abs(ttn.extract_rho(one) - ttn.extract_rho(two)))))
    r1, r2 = defects[0] / defects[1], defects[1] / defects[2]
    ok = max(exact_defects) <= 1e-12 and 4.0 <= r1 <= 16.0 and 4.0 <= r2 <= 16.0
    assert _verdict(
        "A7",
        ok,
        f"full-rank defect<={max(exact_defects):.1e} (exact); reduced-rank ratios {r1:.2f}, {r2:.2f} in [4,16]",
    )


@pytest.fixture(scope="module")
def flagship_generator():
    comps = full_bath_components()
    fs = bath.decompose(comps, 300.0, 3)
    space = G.make_space(fs, 20)
    topo = ttn.make_topology("balanced", space.depths, 2)
    return fs, space, topo


def _flagship_run(fs, space, topo, energy, t_end, output_dt=0.5):
    model = two_level_model(energy=energy, coupling=1000.0)
    gen = G.build_generator(model, fs, space)
    st = ttn.init_state(topo, plus_state(), 3)
    traj = P.run(
        st, gen, "mixed", P.Schedule(t_end, output_dt),
        mixed=P.MixedConfig(
            ps2=P.PsConfig(delta=0.1, svd_tol=1e-7, max_rank=60),
            direct=P.IntegratorConfig(rtol=1e-5, atol=1e-7, epsilon=1e-3),
            switch_rank=60,
        ),
    )
    return traj


def test_a8_flagship_qualitative(flagship_generator):
    fs, space, topo = flagship_generator
    traj = _flagship_run(fs, space, topo, energy=0.0, t_end=100.0)
    _check_conserved("A8", traj)
    purity = traj.purities
    t = traj.times
    completed = t[-1] >= 100.0 - 1e-9
    starts_pure = abs(purity[0] - 1.0) < 1e-9
    imin = int(np.argmin(purity))
    pmin = float(purity[imin])
    dips = 0.45 <= pmin <= 0.60 and t[imin] < 100.0
    recovers = float(np.max(purity[imin:]) - pmin) > 0.01

    short = _flagship_run(fs, space, topo, energy=5000.0, t_end=5.0, output_dt=0.25)
    m = int(np.searchsorted(short.times, 5.0 + 1e-9))
    grid = short.times[:m]
    p_e0 = np.interp(grid, t, purity)
    coincide = float(np.max(np.abs(short.purities[:m] - p_e0)))

    ok = completed and starts_pure and dips and recovers and coincide <= 1e-3
    assert _verdict(
        "A8",
        ok,
        f"min purity {pmin:.3f} at t={t[imin]:.1f} fs (window [0.45,0.60]), recovery "
        f"{np.max(purity[imin:]) - pmin:+.3f}, short-time E-coincidence {coincide:.2e} (tol 1e-3)",
    )


def test_a9_size_bookkeeping():
    topo = ttn.make_topology("balanced", [20] * 20, 2)
    results = []
    for rank, expected in ((40, 0.7e6), (60, 2.2e6), (80, 4.9e6)):
        st = ttn.init_state(topo, plus_state(), {s: min(rank, 400) for s in range(1, topo.n_nodes())})
        results.append((rank, st.size(), abs(st.size() - expected) / expected))
    ok = all(dev <= 0.10 for _, _, dev in results)
    detail = " ".join(f"R{r}:{s/1e6:.2f}e6({dev:.1%})" for r, s, dev in results) + " vs 0.7/2.2/4.9e6 (tol 10%)"
    assert _verdict("A9", ok, detail)


def test_a10_four_feature_fixture(rng):
    bo = bath.SpectralComponent("brownian", 330.0, 50.0, omega_eff=1663.0)
    fs = bath.decompose([DL, bo], 300.0, 1)
    model = two_level_model(energy=700.0)
    space = G.make_space(fs, 3)
    gen = G.build_generator(model, fs, space)
    term_ok = len(gen) == 22

    topo = ttn.make_topology("balanced", space.depths, 2)
    wiring_ok = [[(l.kind, l.ref) for l in legs] for legs in topo.nodes] == [
        [("ket", 0), ("bra", 0), ("bond", 1)],
        [("bond", 1), ("bond", 2), ("bond", 3)],
        [("bond", 2), ("mode", 0), ("mode", 1)],
        [("bond", 3), ("mode", 2), ("mode", 3)],
    ]

    om = rng.standard_normal((2, 2, 3, 3, 3, 3)) + 1j * rng.standard_normal((2, 2, 3, 3, 3, 3))
    om /= np.linalg.norm(om)
    st = ttn.decompose_dense(om, topo)
    mf = tdvp.build_mean_fields(st, gen, 0.0)
    da0 = tdvp.root_rhs(st, mf, gen, 0.0)
    rc = tdvp.build_regularized(st, mf, gen, 0.0, epsilon=1e-12)
    dus = tdvp.su_rhs_regularized(st, mf, rc, gen, 0.0)
    d_net = tdvp.assemble_dense_derivative(st, da0, dus)
    d_ref = oracle.dense_rhs(ttn.dense_edo(st), gen, 0.0)
    rel = float(np.max(np.abs(d_net - d_ref)) / np.max(np.abs(d_ref)))

    ok = term_ok and wiring_ok and rel <= 1e-7
    assert _verdict(
        "A10", ok, f"terms={len(gen)} (expect 22), wiring={'ok' if wiring_ok else 'MISMATCH'}, dense-derivative rel={rel:.1e} (tol 1e-7)"
    )
