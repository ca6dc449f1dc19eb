"""Built-in oracle suite behind ``ttnheom verify``.

The small suite runs in seconds and checks the load-bearing identities
against brute force; the full suite adds the 100 fs network-vs-dense
coincidence run used in the acceptance tests.
"""

from __future__ import annotations

import numpy as np

from . import bath, envs, generator as G, oracle, propagate as P, tdvp, ttn


def _dl_setup(n_modes: int = 8, t_end: float = 10.0):
    comp = bath.SpectralComponent("drude_lorentz", 715.73, 54.45)
    fs = bath.decompose([comp], 300.0, 0)
    h = np.array([[0.0, 1000.0], [1000.0, 0.0]], dtype=complex)
    q = np.array([[-0.5, 0.0], [0.0, 0.5]], dtype=complex)
    model = G.SystemModel(2, h, {"Q": q})
    space = G.make_space(fs, n_modes)
    gen = G.build_generator(model, fs, space)
    rho0 = np.full((2, 2), 0.5, dtype=complex)
    return comp, fs, gen, space, rho0, t_end


def run_suite(which: str) -> int:
    checks: list[tuple[str, bool, str]] = []

    def add(name: str, ok: bool, info: str = ""):
        checks.append((name, ok, info))
        print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f"  ({info})" if info else ""))

    up, dn = G.ladder_ops(4)
    comm = dn @ up - up @ dn
    add("ladder commutator", bool(np.allclose(comm[:3, :3], np.eye(3))))

    comp, fs, gen, space, rho0, t_end = _dl_setup()
    fs_corrected = bath.decompose([comp], 300.0, 3)
    ts = [2.0, 10.0, 50.0]
    qs = [bath.bcf_quadrature([comp], 300.0, t) for t in ts]
    scale = max(abs(v) for v in qs)
    err = max(abs(q - fs_corrected.reconstruct(t)) / scale for t, q in zip(ts, qs))
    add("correlation function vs quadrature", err < 2e-2, f"rel err {err:.2e}")

    topo = ttn.make_topology("train", space.depths, 2)
    st = ttn.init_state(topo, rho0, 4)
    add("initial extraction", bool(np.allclose(ttn.extract_rho(st), rho0)))
    add("initial semi-unitarity", max(ttn.check_semiunitary(st).values()) < 1e-12)

    rng = np.random.default_rng(0)
    om = rng.standard_normal((2, 2, 3, 3)) + 1j * rng.standard_normal((2, 2, 3, 3))
    om /= np.linalg.norm(om)
    fs2 = bath.FeatureSet(
        (
            bath.Feature(300.0 + 10j, 300.0 - 10j, -40.0 + 25j, "Q"),
            bath.Feature(300.0 - 10j, 300.0 + 10j, -40.0 - 25j, "Q"),
        ),
        300.0,
        0,
    )
    gen2 = G.build_generator(
        G.SystemModel(2, np.array([[0, 500.0], [500.0, 0]], dtype=complex), {"Q": np.diag([-0.5, 0.5]).astype(complex)}),
        fs2,
        G.make_space(fs2, 3),
    )
    st2 = ttn.decompose_dense(om, ttn.make_topology("train", (3, 3), 2))
    mf = tdvp.build_mean_fields(st2, gen2, 0.0)
    da0 = tdvp.root_rhs(st2, mf, gen2, 0.0)
    rc = tdvp.build_regularized(st2, mf, gen2, 0.0, epsilon=1e-12)
    dus = tdvp.su_rhs_regularized(st2, mf, rc, gen2, 0.0)
    d_net = tdvp.assemble_dense_derivative(st2, da0, dus)
    d_ref = oracle.dense_rhs(ttn.dense_edo(st2), gen2, 0.0)
    rel = np.max(np.abs(d_net - d_ref)) / np.max(np.abs(d_ref))
    add("full-rank derivative vs dense", rel < 1e-10, f"rel {rel:.2e}")

    horizon = 100.0 if which == "full" else t_end
    ref = oracle.dense_run(gen, rho0, horizon, 1.0)
    sched = P.Schedule(horizon, 1.0)
    tight = P.IntegratorConfig(rtol=1e-8, atol=1e-10, epsilon=1e-7)
    for strategy, kwargs in (
        ("direct", {"integrator": tight}),
        ("ps1", {"ps": P.PsConfig(delta=0.01, rtol=1e-8, atol=1e-10)}),
        ("ps2", {"ps": P.PsConfig(delta=0.01, svd_tol=1e-10, max_rank=8, rtol=1e-8, atol=1e-10)}),
    ):
        st3 = ttn.init_state(topo, rho0, 4)
        traj = P.run(st3, gen, strategy, sched, **kwargs)
        diff = traj.max_rho_diff(ref)
        add(f"{strategy} vs dense over {horizon:.0f} fs", diff < 1e-6, f"max diff {diff:.2e}")

    failed = [c for c in checks if not c[1]]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return 1 if failed else 0
