import json

import numpy as np
import pytest

import microloc as ml


def test_clifford_relation_in_schwarzschild():
    m = ml.Metric.schwarzschild(1.0)
    x = [0.0, 7.0, 1.1, 0.4]
    g = ml.metric_at(m, x)["g_inv"]
    gs = ml.gammas(m, x)
    for mu in range(4):
        for nu in range(4):
            ac = gs[mu] @ gs[nu] + gs[nu] @ gs[mu]
            assert np.allclose(ac, 2 * g[mu, nu] * np.eye(4), atol=1e-12)
    assert ml.anticommutator_residual(m, x) < 1e-10


def test_minkowski_strip_is_a_straight_line():
    m = ml.Metric.minkowski()
    s = ml.propagate(m, [0, 0, 0, 0], [1, -0.6, -0.8, 0], tau1=2.0, steps=4)
    assert s["x"].shape == (5, 4)
    assert np.allclose(s["xi"], [1, -0.6, -0.8, 0])
    assert np.allclose(s["x"][-1], [4.0, 2.4, 3.2, 0.0])
    assert s["max_drift"] < 1e-12


def test_non_null_start_raises():
    with pytest.raises(ml.MicrolocError) as info:
        ml.propagate(ml.Metric.minkowski(), [0, 0, 0, 0], [1, 0, 0, 0])
    assert info.value.code == "NonNullStart"


def test_spin_transport_stays_in_the_kernel():
    m = ml.Metric.schwarzschild(1.0)
    x = [0.0, 6.0, 1.3, 0.0]
    xi = ml.null_covector(m, x, [0.5, 0.5, -0.2])
    w0 = ml.slash(m, x, xi) @ np.array([1, 0.5j, -0.25, 0.1])
    t = ml.transport("dirac", m, x, xi, w0, mode="spin", mass=0.7, tau1=1.0, steps=10)
    for k in range(t["fibre"].shape[0]):
        p = ml.principal_symbol("dirac", m, t["x"][k], t["xi"][k])
        assert np.linalg.norm(p @ t["fibre"][k]) < 1e-8 * np.linalg.norm(t["fibre"][k]) * np.linalg.norm(p)


def test_predictions_and_product_criterion():
    m = ml.Metric.minkowski()
    null = ml.predict_wf(m, [0, 0, 0, 0], [1, 1, 0, 0])
    assert len(null) == 1 and null[0]["xi"][0] > 0
    assert ml.predict_wf(m, [0, 0, 0, 0], [0, 1, 0, 0]) == []
    assert len(ml.predict_wf(m, [0, 0, 0, 0], [0, 0, 0, 0], kind="feynman")) == 64
    assert ml.product_admissible(m, [0, 0, 0, 0], [0, 0, 0, 0])
    assert not ml.product_admissible(m, [0, 0, 0, 0], [0, 0, 0, 0], kind="feynman")
    pol = ml.predict_pol_dirac(m, [0, 0, 0, 0], [1, 0, 1, 0])
    assert pol[0]["fibre"].shape == (4, 4)


def test_detector_on_delta():
    eps = 0.01
    rep = ml.wf_detect("delta", 1, [-10.0], [eps / 8], [16001], eps, [[0.0], [5.0]])
    verdicts = [(e["base"][0], e["verdict"]) for e in rep["entries"]]
    assert verdicts == [(0.0, "Singular"), (0.0, "Singular"), (5.0, "Regular"), (5.0, "Regular")]
    s = ml.sample("delta", 1, [-1.0], [eps / 8], [1601], eps)
    assert s.shape == (1601, 1) and s.dtype == np.complex128


def test_verify_and_cli(tmp_path):
    res = ml.verify(["anticommutator", "rpt"])
    assert len(res) == 4 and all(r["pass"] for r in res)
    cfg = tmp_path / "run.ini"
    cfg.write_text("[metric]\nname = minkowski\n[command]\nname = predict\nkind = hadamard-scalar\n"
                   "x = [0, 0, 0, 0]\ny = [1, 1, 0, 0]\n")
    code, out, err = ml.run(str(cfg), str(tmp_path / "out"))
    assert code == 0, err
    data = json.loads((tmp_path / "out" / "predict.json").read_text())
    assert len(data["pairs"][0]["elements"]) == 1
    cfg.write_text("[command]\nname = = 3\n")
    code, _, err = ml.run(str(cfg), str(tmp_path / "bad"))
    assert code == 2
    assert json.loads(err)["error"]["line"] == 2
