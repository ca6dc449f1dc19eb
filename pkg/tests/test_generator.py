import numpy as np
import pytest

from conftest import DL, plus_state, random_feature_pair, two_level_model
from ttnheom import bath, generator as G, oracle
from ttnheom.units import CM_PER_INVFS


def test_ladder_examples():
    up, dn = G.ladder_ops(2)
    assert np.array_equal(up, np.array([[0, 0], [1, 0]]))
    assert np.array_equal(dn, np.array([[0, 1], [0, 0]]))
    up3, _ = G.ladder_ops(3)
    assert up3[2, 1] == pytest.approx(np.sqrt(2.0))
    with pytest.raises(ValueError):
        G.ladder_ops(1)


def test_ladder_commutator_truncation():
    up, dn = G.ladder_ops(6)
    comm = dn @ up - up @ dn
    assert np.allclose(comm[:5, :5], np.eye(5))
    assert comm[5, 5] == pytest.approx(-5.0)  # broken only on the top rung


def test_term_counts():
    model = two_level_model()
    fs1 = bath.decompose([DL], 300.0, 0)
    gen = G.build_generator(model, fs1, G.make_space(fs1, 4))
    assert len(gen) == 7

    fs0 = bath.decompose([], 300.0, 0)
    gen0 = G.build_generator(model, fs0, G.make_space(fs0, 2))
    assert len(gen0) == 2

    from conftest import full_bath_components

    fs20 = bath.decompose(full_bath_components(), 300.0, 3)
    gen20 = G.build_generator(model, fs20, G.make_space(fs20, 4))
    assert len(gen20) == 5 * 20 + 2


def test_term_structure():
    model = two_level_model()
    fs = bath.decompose([DL], 300.0, 0)
    space = G.make_space(fs, 5)
    gen = G.build_generator(model, fs, space)
    kinds = [t.kind for t in gen.terms]
    assert kinds == ["ham_ket", "ham_bra", "num", "up_ket", "up_bra", "dn_ket", "dn_bra"]
    num = gen.terms[2]
    assert num.h_gt is None and num.h_lt is None  # pure ladder term
    for t in gen.terms[2:]:
        assert (t.h_gt is None) or (t.h_lt is None)  # one system side at most


def test_default_metric():
    f1 = bath.Feature(c=4.0 + 0j, c_bar=4.0 - 0j, gamma_exp=-10.0 + 0j)
    fs = bath.FeatureSet((f1,), 300.0, 0)
    assert G.default_metric(fs)[0] == pytest.approx(2j)
    f2 = bath.Feature(c=-3.0 + 4.0j, c_bar=-3.0 - 4.0j, gamma_exp=-10.0 + 0j)
    fs2 = bath.FeatureSet((f2,), 300.0, 0)
    assert G.default_metric(fs2)[0] == pytest.approx(1j * np.sqrt(5.0))


def test_validation_errors():
    bad_h = np.array([[0.0, 1.0], [0.5, 0.0]])
    with pytest.raises(ValueError):
        G.SystemModel(2, bad_h, {})
    model = two_level_model()
    f = bath.Feature(c=1.0 + 0j, c_bar=1.0 - 0j, gamma_exp=-1.0 + 0j, coupling_id="missing")
    fs = bath.FeatureSet((f,), 300.0, 0)
    with pytest.raises(KeyError):
        G.build_generator(model, fs, G.make_space(fs, 3))
    with pytest.raises(ValueError):
        G.BexcitonSpace((1,), (1j,))
    with pytest.raises(ValueError):
        G.BexcitonSpace((3,), (0j,))


def test_envelopes():
    assert G.make_envelope({"kind": "constant", "amplitude": 2.0})(17.0) == 2.0
    sin = G.make_envelope({"kind": "sinusoid", "amplitude": 3.0, "frequency": 0.5, "phase": 0.1})
    assert sin(2.0) == pytest.approx(3.0 * np.sin(1.1))
    g = G.make_envelope({"kind": "gaussian_pulse", "amplitude": 1.0, "center": 5.0, "width": 2.0})
    assert g(5.0) == 1.0 and g(7.0) == pytest.approx(np.exp(-0.5))
    with pytest.raises(ValueError):
        G.make_envelope({"kind": "sawtooth"})


def test_metric_is_a_gauge(rng):
    """Dense trajectories are invariant under rescaling the metric scalars."""
    model = two_level_model(energy=500.0)
    f1, f2 = random_feature_pair(rng)
    fs = bath.FeatureSet((f1, f2), 300.0, 0)
    rho0 = plus_state()
    base = G.make_space(fs, 4)
    scaled = G.BexcitonSpace(base.depths, tuple(2.0 * z for z in base.metric_z))
    t_a = oracle.dense_run(G.build_generator(model, fs, base), rho0, 50.0, 5.0)
    t_b = oracle.dense_run(G.build_generator(model, fs, scaled), rho0, 50.0, 5.0)
    assert t_a.max_rho_diff(t_b) <= 1e-8


def test_units_fold_into_matrices():
    model = two_level_model(energy=0.0, coupling=CM_PER_INVFS)  # 1 rad/fs coupling
    fs = bath.decompose([], 300.0, 0)
    gen = G.build_generator(model, fs, G.make_space(fs, 2))
    ham_ket = gen.terms[0]
    assert ham_ket.h_gt[0, 1] == pytest.approx(-1j)
