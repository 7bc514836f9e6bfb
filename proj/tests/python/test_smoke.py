"""Smoke tests for the python bindings: each exposed operation runs end to end
on a small problem and agrees with an independent numpy computation."""

import numpy as np
import pytest

import qksvm


def rng():
    return np.random.default_rng(12345)


def test_bsp_statevector_trivial_and_normalized():
    amps = qksvm.bsp_statevector(np.zeros(3))
    assert amps.shape == (8,)
    assert abs(amps[0] - 1.0) < 1e-14

    amps = qksvm.bsp_statevector(rng().uniform(-1, 1, size=4), reps=2, dof=3)
    assert abs(np.sum(np.abs(amps) ** 2) - 1.0) < 1e-12


def test_fidelity_matches_statevector_overlap():
    r = rng()
    a = r.uniform(-1, 1, size=3)
    b = r.uniform(-1, 1, size=3)
    sa = qksvm.bsp_statevector(a)
    sb = qksvm.bsp_statevector(b)
    want = abs(np.vdot(sa, sb)) ** 2
    assert abs(qksvm.fidelity(a, b) - want) < 1e-12


def test_quantum_kernel_symmetric_unit_diagonal():
    x = rng().uniform(-1, 1, size=(6, 3))
    k = qksvm.quantum_kernel(x)
    assert k.shape == (6, 6)
    assert np.allclose(np.diag(k), 1.0, atol=1e-12)
    assert np.array_equal(k, k.T)
    cross = qksvm.quantum_kernel(x[:2], x)
    assert cross.shape == (2, 6)
    assert np.allclose(cross, k[:2], atol=1e-12)


def test_classical_kernels_match_numpy():
    r = rng()
    x = r.normal(size=(5, 4))
    assert np.allclose(qksvm.linear_kernel(x), x @ x.T, atol=1e-12)

    gamma = 0.7
    d2 = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
    assert np.allclose(qksvm.rbf_kernel(x, gamma=gamma), np.exp(-gamma * d2), atol=1e-12)

    var = x.var()
    assert abs(qksvm.scale_gamma(x) - 1.0 / (4 * var)) < 1e-10


def test_normalization_and_spectrum():
    x = rng().uniform(-1, 1, size=(8, 3))
    k = qksvm.quantum_kernel(x)
    kn, stats = qksvm.normalize_kernel(k, mode="trace")
    assert abs(np.trace(kn) - 1.0) < 1e-12
    assert abs(stats["trace"] - np.trace(k)) < 1e-12

    cross = qksvm.quantum_kernel(x[:3], x)
    crossn = qksvm.normalize_test_kernel(cross, stats)
    assert np.allclose(crossn, cross / stats["trace"], atol=1e-15)

    rep = qksvm.spectrum(kn)
    rep_raw = qksvm.spectrum(k)
    assert abs(rep["eff_rank"] - rep_raw["eff_rank"]) < 1e-9 * rep_raw["eff_rank"]
    assert 1.0 <= rep["eff_rank"] <= rep["n_positive"]


def test_sym_eigen_reconstruction():
    r = rng()
    a = r.normal(size=(6, 6))
    m = a @ a.T
    w, v = qksvm.sym_eigen(m)
    assert np.all(np.diff(w) <= 1e-12)
    assert np.allclose(v @ np.diag(w) @ v.T, m, atol=1e-8)


def test_pipeline_and_split():
    r = rng()
    features = r.normal(size=(60, 10))
    labels = [0] * 40 + [1] * 20
    train, val, test = qksvm.split_indices(labels, seed=0)
    assert len(train) == 48 and len(val) == 6 and len(test) == 6
    assert sorted(train + val + test) == list(range(60))

    pipe = qksvm.FittedPipeline.fit(features, train, q=3)
    x_train = pipe.transform(features[train])
    assert x_train.shape == (48, 3)
    assert np.isclose(x_train.min(axis=0), -1.0).all()
    assert np.isclose(x_train.max(axis=0), 1.0).all()
    assert len(pipe.explained_fraction) == 3

    k = qksvm.linear_kernel(x_train)
    rep = qksvm.spectrum(k)
    assert rep["n_positive"] == 3  # PCA-q linear kernel has exactly q directions


def test_svc_against_simple_problem():
    k = np.eye(2)
    model = qksvm.svc_train(k, [0, 1], c=10.0)
    assert model.dual_coef == pytest.approx([-1.0, 1.0], abs=1e-8)
    assert qksvm.predict(model, k) == [0, 1]
    scores = qksvm.decision_scores(model, k)
    assert scores[1] > 0 > scores[0]


def test_metrics_and_bootstrap():
    y = [1, 1, 0, 0]
    pred = [1, 0, 0, 1]
    rep = qksvm.evaluate(y, pred, np.array([0.9, 0.1, 0.2, 0.8]))
    assert rep["tp"] == 1 and rep["fn"] == 1 and rep["fp"] == 1 and rep["tn"] == 1
    assert rep["f1_minority"] == pytest.approx(0.5)

    boot = qksvm.paired_bootstrap(y, pred, pred, resamples=50, seed=42)
    assert boot["p_value"] == 1.0
    assert boot["delta_observed"] == 0.0
    again = qksvm.paired_bootstrap(y, pred, pred, resamples=50, seed=42, threads=4)
    assert again == boot


def test_projected_kernel_round_trip():
    x = rng().uniform(-1, 1, size=(10, 3))
    z = qksvm.pauli_z_features(x)
    assert z.shape == (10, 3)
    assert np.all(z >= -1.0) and np.all(z <= 1.0)
    k = qksvm.projected_kernel(z, gamma=1e-8)
    assert np.allclose(k, 1.0, atol=1e-6)


def test_rank_match_gamma_round_trip():
    x = rng().normal(size=(20, 4))
    target = qksvm.spectrum(qksvm.rbf_kernel(x, gamma=0.4))["eff_rank"]
    gamma = qksvm.rank_match_gamma(x, target, tol_rel=0.01)
    achieved = qksvm.spectrum(qksvm.rbf_kernel(x, gamma=gamma))["eff_rank"]
    assert abs(achieved - target) <= 0.01 * target
