import json
import math

import numpy as np
import pytest

import rfcurves


def test_scalar_functions():
    assert rfcurves.q_function(0.0) == pytest.approx(0.5)
    assert rfcurves.q_function(1.0) + rfcurves.q_function(-1.0) == pytest.approx(1.0)
    assert rfcurves.std_normal_pdf(0.0) == pytest.approx(1.0 / math.sqrt(2 * math.pi))


def test_activation_constants():
    rho1, rho_star2 = rfcurves.activation_constants("tanh")
    assert rho1 == pytest.approx(0.6057055096, abs=1e-9)
    assert rho_star2 == pytest.approx(0.0274153260, abs=1e-9)
    assert rfcurves.activation_constants("identity") == pytest.approx((1.0, 0.0))


def test_predict_matches_simulation_shape():
    rho1, rho_star2 = rfcurves.activation_constants("tanh")
    pred = rfcurves.predict(
        gamma=0.5, delta=1.0, sigma_eps2=0.1, lambda_=1e-3, alpha=1e-2,
        rho1=rho1, rho_star2=rho_star2,
    )
    assert pred["residual"] < 1e-6
    assert 0.0 < pred["train_error"] < pred["gen_error"]
    assert 0.0 < pred["nonzero_fraction"] <= 1.0


def test_fit_elastic_net_scalar_case():
    X = np.array([[2.0]])
    y = np.array([3.0])
    theta, iterations, residual = rfcurves.fit_elastic_net(X, y, 0.0, 1.0)
    assert theta[0] == pytest.approx(1.2, abs=1e-8)
    assert residual <= 1e-9


def test_run_trials_deterministic():
    kwargs = dict(n=80, m=40, d=40, sigma_eps2=0.1, lambda_=1e-3, alpha=1e-2,
                  seed=7, trials=3, features="surrogate")
    first = rfcurves.run_trials(**kwargs)
    second = rfcurves.run_trials(**kwargs)
    assert first == second
    assert first["trials_failed"] == 0


def test_sweep_csv():
    config = {
        "mode": "theory",
        "sweep_axis": "gamma",
        "axis_values": [0.5, 1.5],
        "lambda": 1e-3,
        "alpha": 1e-2,
    }
    csv_text = rfcurves.sweep(json.dumps(config))
    lines = csv_text.strip().split("\n")
    assert lines[0].startswith("gamma,lambda,alpha,train_theory,gen_theory")
    assert len(lines) == 3
