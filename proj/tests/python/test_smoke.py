import numpy as np
import pytest

import ecmpc


def simulate_ar2(phi1, phi2, n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=n + 200)
    z = np.zeros(n + 200)
    for t in range(2, n + 200):
        z[t] = phi1 * z[t - 1] + phi2 * z[t - 2] + a[t]
    return z[200:].reshape(-1, 1)


def test_fit_and_predict():
    z = simulate_ar2(0.6, -0.3, 4000, 1)
    model, residuals, rss = ecmpc.fit_armav(z, 2, 0)
    assert model.ar_order == 2 and model.dim == 1
    assert abs(model.phi[0][0, 0] - 0.6) < 0.05
    assert abs(model.phi[1][0, 0] + 0.3) < 0.05
    assert residuals.shape == z.shape
    assert rss > 0
    pred = model.predict_k_steps(5)
    assert pred.shape == (5, 1)
    assert pred[0, 0] == model.predict_one_step()[0]
    assert ecmpc.whiteness_fraction(residuals[2:], 20) >= 0.8


def test_model_json_round_trip():
    model = ecmpc.ArmavModel([np.array([[0.5]])], [np.array([[0.2]])], np.zeros(1))
    back = ecmpc.ArmavModel.from_json(model.to_json())
    assert back.phi[0][0, 0] == 0.5
    assert back.theta[0][0, 0] == 0.2
    assert back.ma_spectral_radius() == pytest.approx(0.2)


def test_select_order():
    n, m, model = ecmpc.select_order(simulate_ar2(0.6, -0.3, 4000, 2), 0.95, 3)
    assert (n, m) == (2, 0)
    assert model.ar_order == 2


def test_errors_carry_a_code():
    with pytest.raises(ecmpc.Error) as info:
        ecmpc.fit_armav(np.zeros((5, 2)), 2, 1)
    assert info.value.code == "InsufficientData"


def test_qp_box():
    h = np.eye(2)
    f = np.array([-3.0, 1.0])
    sol = ecmpc.solve_qp(h, f, a_ineq=np.eye(2), lower=np.array([-1.0, -1.0]), upper=np.array([1.0, 1.0]))
    assert sol["status"] == "solved"
    np.testing.assert_allclose(sol["y"], [1.0, -1.0], atol=1e-12)
    assert sol["dual_upper"][0] == pytest.approx(2.0)
    assert sol["kkt_residual"] < 1e-9


def test_scenario_config():
    assert ecmpc.scenario_names() == ["ground_truth", "wrong_mass", "payload_8kg"]
    cfg = ecmpc.scenario("wrong_mass", duration=2.0, mpc={"horizon": 8})
    assert cfg["duration"] == 2.0
    assert cfg["mpc"]["horizon"] == 8
    assert cfg["model_mass"] != cfg["true_mass"]
    with pytest.raises(ecmpc.Error):
        ecmpc.run({"durration": 1.0})


def test_short_run():
    r = ecmpc.run("ground_truth", duration=1.5, warmup=0.5)
    tel = r["telemetry"]
    assert tel.shape == (50, len(r["columns"]))
    assert r["columns"][0] == "time"
    assert not r["diverged"]
    assert abs(r["metrics"]["mean_height"] - 0.38) < 0.02
    again = ecmpc.run("ground_truth", duration=1.5, warmup=0.5)
    np.testing.assert_array_equal(tel, again["telemetry"])
