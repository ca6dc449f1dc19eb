import numpy as np
import pytest

from conftest import random_feature_pair, two_level_model
from ttnheom import bath, envs, generator as G, tdvp, ttn


def _random_state(rng, kind, depths, two_couplings=False, drive=False):
    h = np.array([[-300.0, 800.0], [800.0, 300.0]], dtype=complex)
    couplings = {"Q": np.diag([-0.5, 0.5]).astype(complex)}
    cids = ["Q"] * len(depths)
    if two_couplings:
        couplings["R"] = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
        cids[-2:] = ["R", "R"]
    drives = []
    if drive:
        drives = [G.Drive({"kind": "sinusoid", "amplitude": 150.0, "frequency": 0.4},
                          np.array([[0.0, 1.0], [1.0, 0.0]]))]
    model = G.SystemModel(2, h, couplings, drives)
    feats = []
    while len(feats) < len(depths):
        feats.extend(random_feature_pair(rng))
    feats = [
        bath.Feature(f.c, f.c_bar, f.gamma_exp, cid)
        for f, cid in zip(feats[: len(depths)], cids)
    ]
    fs = bath.FeatureSet(tuple(feats), 300.0, 0)
    gen = G.build_generator(model, fs, G.make_space(fs, depths))
    topo = ttn.make_topology(kind, depths, 2)
    shape = (2, 2) + tuple(depths)
    om = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    om /= np.linalg.norm(om)
    return gen, ttn.decompose_dense(om, topo)


@pytest.mark.parametrize("kind", ["train", "balanced"])
@pytest.mark.parametrize("two_couplings", [False, True])
def test_grouped_rhs_equals_per_term(kind, two_couplings, rng):
    gen, st = _random_state(rng, kind, (3, 3, 2, 3), two_couplings=two_couplings)
    eps = 1e-9
    mf = tdvp.build_mean_fields(st, gen, 0.0)
    da0 = tdvp.root_rhs(st, mf, gen, 0.0)
    rc = tdvp.build_regularized(st, mf, gen, 0.0, epsilon=eps)
    dus = tdvp.su_rhs_regularized(st, mf, rc, gen, 0.0)
    fast = envs.direct_rhs(st, envs.GroupedGenerator.from_sop(gen), 0.0, eps)
    assert np.max(np.abs(fast[0] - da0)) < 1e-13
    for s in range(1, st.topology.n_nodes()):
        assert np.max(np.abs(fast[s] - dus[s])) < 1e-13


def test_grouped_rhs_time_dependent_drive(rng):
    gen, st = _random_state(rng, "balanced", (3, 3, 3, 3), drive=True)
    gg = envs.GroupedGenerator.from_sop(gen)
    for t in (0.0, 1.7, 6.3):
        mf = tdvp.build_mean_fields(st, gen, t)
        da0 = tdvp.root_rhs(st, mf, gen, t)
        fast = envs.direct_rhs(st, gg, t, 1e-9)
        assert np.max(np.abs(fast[0] - da0)) < 1e-13


def test_down_envs_match_grouped_mean_fields(rng):
    """Edge environments are the scalar-weighted sums of per-term fields."""
    gen, st = _random_state(rng, "balanced", (3, 3, 3, 3))
    gg = envs.GroupedGenerator.from_sop(gen)
    ev = envs.down_envs(st, gg)
    mf = tdvp.build_mean_fields(st, gen, 0.0)
    topo = st.topology
    for s in range(1, topo.n_nodes()):
        r = topo.parent[s]
        # number group: sum of the pure-ladder term fields below this bond
        acc = {}
        for term in gen.terms:
            f = mf.get(id(term), s)
            if f is None:
                continue
            acc.setdefault(term.kind.split("_")[0] if term.kind != "num" else "num", 0)
        num_sum = None
        qk_sum = None
        qb_sum = None
        ident = np.eye(st.tensors[s].shape[0])
        for term in gen.terms:
            f = mf.get(id(term), s)
            if f is None:
                continue
            if term.kind == "num":
                num_sum = f if num_sum is None else num_sum + f
            elif term.kind in ("up_ket", "dn_ket"):
                qk_sum = f if qk_sum is None else qk_sum + f
            elif term.kind in ("up_bra", "dn_bra"):
                qb_sum = f if qb_sum is None else qb_sum + f
        e = ev[(r, s)]
        if num_sum is not None:
            assert np.allclose(e.num, num_sum, atol=1e-13)
        if qk_sum is not None:
            assert np.allclose(e.qk["Q"], qk_sum, atol=1e-13)
        if qb_sum is not None:
            assert np.allclose(e.qb["Q"], qb_sum, atol=1e-13)
