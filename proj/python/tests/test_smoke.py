import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

import dropsurv

CONFIGS = Path(os.environ.get("DROPSURV_CONFIG_DIR", Path(__file__).resolve().parents[2] / "configs"))


def survival_data(seed, n=200, p=3):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, p))
    beta = np.array([0.6, -0.4, 0.0][:p])
    risk = np.exp(x @ beta)
    times = np.minimum(np.ceil(rng.exponential(4.0 / risk)), 14).astype(int)
    events = rng.random(n) < 0.75
    return x, times.tolist(), events.tolist()


def test_partial_likelihood_matches_statsmodels():
    sm = pytest.importorskip("statsmodels.api")
    x, times, events = survival_data(1)
    model = sm.PHReg(np.array(times, float), x, status=np.array(events, int), ties="breslow")
    for beta in (np.zeros(3), np.array([0.3, -0.2, 0.5])):
        assert dropsurv.log_partial_likelihood(x, times, events, beta) == pytest.approx(
            model.loglike(beta), rel=1e-12
        )
        np.testing.assert_allclose(dropsurv.pll_gradient(x, times, events, beta), model.score(beta), rtol=1e-10)
        np.testing.assert_allclose(
            dropsurv.pll_hessian(x, times, events, beta), model.hessian(beta), rtol=1e-9, atol=1e-9
        )


def test_cox_fit_matches_statsmodels():
    sm = pytest.importorskip("statsmodels.api")
    x, times, events = survival_data(2)
    ours = dropsurv.fit_cox(x, times, events)
    ref = sm.PHReg(np.array(times, float), x, status=np.array(events, int), ties="breslow").fit()
    np.testing.assert_allclose(ours["beta"], ref.params, atol=1e-7)
    np.testing.assert_allclose(ours["standard_errors"], ref.bse, rtol=1e-6)
    assert ours["log_likelihood"] == pytest.approx(ref.llf, rel=1e-12)


def test_baseline_with_tie_at_zero_beta():
    x = np.array([[0.1], [0.2], [0.3], [0.4]])
    steps = dropsurv.baseline_hazard(x, [1, 1, 2, 2], [True, True, True, False], np.zeros(1))
    assert steps == [(1, 0.5), (2, 0.5)]


def test_prediction_median_rule():
    assert dropsurv.predict_semester([(1, 0.25), (2, 0.5)], math.log(2)) == (2, False)
    assert dropsurv.predict_semester([(1, 0.01)], 0.0, horizon=14) == (14, True)


def test_ols_matches_lstsq():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(60, 3))
    y = np.clip(np.rint(5 + x @ [1.0, -0.5, 0.2] + rng.normal(size=60)), 1, 14).astype(int)
    intercept, weights = dropsurv.fit_ols(x, y.tolist())
    ref, *_ = np.linalg.lstsq(np.column_stack([np.ones(60), x]), y, rcond=None)
    np.testing.assert_allclose([intercept, *weights], ref, atol=1e-10)


def test_svr_dual_matches_cvxopt():
    cvxopt = pytest.importorskip("cvxopt")
    rng = np.random.default_rng(4)
    n, eps, cost = 7, 0.25, 2.0
    x = rng.normal(size=(n, 2))
    y = np.clip(np.rint(5 + 1.5 * x[:, 0] + rng.normal(size=n)), 1, 14)
    k = x @ x.T
    # Variables (alpha, alpha*); maximize -(1/2)(a-a*)'K(a-a*) - eps 1'(a+a*) + y'(a-a*).
    P = np.block([[k, -k], [-k, k]])
    q = np.concatenate([eps - y, eps + y])
    G = np.vstack([-np.eye(2 * n), np.eye(2 * n)])
    h = np.concatenate([np.zeros(2 * n), cost * np.ones(2 * n)])
    A = np.concatenate([np.ones(n), -np.ones(n)])[None, :]
    cvxopt.solvers.options.update(show_progress=False, abstol=1e-12, reltol=1e-12, feastol=1e-12)
    sol = cvxopt.solvers.qp(*(cvxopt.matrix(v) for v in (P + 1e-12 * np.eye(2 * n), q, G, h, A, np.zeros(1))))
    dual = -sol["primal objective"]
    fit = dropsurv.fit_svr(x, y.astype(int).tolist(), epsilon=eps, cost=cost, standardize=False)
    assert fit["dual_objective"] == pytest.approx(dual, abs=1e-6)
    assert fit["relative_gap"] < 1e-6


def test_metrics():
    assert dropsurv.mae([2, 4], [3, 3]) == 1.0
    b = dropsurv.error_balance([1, 5, 3], [3, 3, 3])
    assert (b["uper"], b["oper"], b["exact"]) == (0.5, 0.5, 1)
    assert dropsurv.error_balance([2, 4], [2, 4])["uper"] is None
    with pytest.raises(dropsurv.Error):
        dropsurv.mae([], [])


def test_cli_pipeline(tmp_path):
    cohort, model, report = tmp_path / "c.csv", tmp_path / "m.json", tmp_path / "r.json"
    code, out, err = dropsurv.run_cli(
        ["generate", "--input", str(CONFIGS / "small.yaml"), "--output", str(cohort)]
    )
    assert code == 0, err
    assert "students: 400" in out
    assert dropsurv.run_cli(["train", "--input", str(cohort), "--output", str(model)])[0] == 0
    assert json.loads(model.read_text())["kind"] == "cox"
    code, out, err = dropsurv.run_cli(["predict", "--model", str(model), "--input", str(cohort)])
    assert code == 0, err
    assert len(out.splitlines()) == 401
    code, _, err = dropsurv.run_cli(["evaluate", "--input", str(cohort), "--json", str(report)])
    assert code == 0, err
    assert [m["model"] for m in json.loads(report.read_text())["models"]] == ["Regression", "SVR", "Cox"]


def test_errors_surface_as_exceptions():
    with pytest.raises(dropsurv.Error, match="no events"):
        dropsurv.log_partial_likelihood(np.ones((2, 1)), [1, 2], [False, False], np.zeros(1))
