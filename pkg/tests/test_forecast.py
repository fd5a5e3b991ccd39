"""Point and quantile forecasters against closed-form fits."""

import numpy as np
import pytest

from inertiacast.data import Dataset
from inertiacast.forecast import (
    DEFAULT_H_FLOOR,
    ForecastError,
    ForecastModel,
    QuantileFitConfig,
    QuantileFitError,
    QuantileModel,
    fit_mse,
    fit_quantile,
    inverse_cdf,
    load_model,
    pinball_loss,
    predict,
    predict_quantiles,
    save_model,
)


def _dataset(features, y, names=None):
    """Builder: features without the constant column, y is inertia."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    if features.shape[0] != len(y):
        features = features.T
    n, k = features.shape
    X = np.column_stack([np.ones(n), features])
    names = tuple(names or (f"f{j}" for j in range(k)))
    return Dataset(("const", *names), X, np.asarray(y, dtype=float),
                   np.ones(n), tuple(f"t{s}" for s in range(n)))


def test_predict_applies_floor():
    m = ForecastModel(np.array([5000.0]))
    assert predict(m, np.array([1.0])) == 5000.0
    low = ForecastModel(np.array([100.0]))
    assert predict(low, np.array([1.0])) == pytest.approx(DEFAULT_H_FLOOR)
    batch = predict(m, np.ones((4, 1)))
    assert batch.shape == (4,) and np.all(batch == 5000.0)


def test_predict_checks_dimensions():
    m = ForecastModel(np.array([1.0, 2.0]))
    with pytest.raises(ForecastError, match="features"):
        predict(m, np.ones(3))


def test_fit_mse_recovers_affine_truth():
    rng = np.random.default_rng(0)
    f = rng.uniform(10000.0, 40000.0, size=400)
    y = 900.0 + 0.17 * f
    m = fit_mse(_dataset(f, y))
    assert m.theta[0] == pytest.approx(900.0, abs=1e-6)
    assert m.theta[1] == pytest.approx(0.17, abs=1e-10)
    assert predict(m, np.array([1.0, 20000.0])) == pytest.approx(4300.0)


def test_fit_mse_matches_pseudoinverse():
    rng = np.random.default_rng(1)
    n, k = 300, 5
    F = rng.normal(size=(n, k)) * rng.uniform(1, 1000, size=k)
    y = 5000 + F @ rng.normal(size=k) + rng.normal(size=n) * 50
    d = _dataset(F, y)
    m = fit_mse(d)
    want = np.linalg.pinv(d.X) @ y
    assert np.allclose(m.theta, want, rtol=1e-8, atol=1e-8)


def test_fit_mse_uses_train_split_only():
    rng = np.random.default_rng(2)
    f = rng.uniform(0, 10, size=100)
    y = 3000 + 100 * f
    d = _dataset(f, y)
    d.split[50:] = "test"
    d.inertia[50:] = 99999.0  # corrupt the test rows; the fit must not see them
    m = fit_mse(d)
    assert m.theta[1] == pytest.approx(100.0, abs=1e-8)


def test_fit_mse_rank_deficiency():
    f = np.linspace(0, 10, 50)
    dup = np.column_stack([f, f])  # perfectly collinear
    y = 3000 + 5 * f
    d = _dataset(dup, y)
    m = fit_mse(d)  # ridge fallback keeps it finite
    assert np.all(np.isfinite(m.theta))
    assert predict(m, np.array([1.0, 4.0, 4.0])) == pytest.approx(3020.0, rel=1e-3)
    with pytest.raises(ForecastError, match="rank deficient"):
        fit_mse(d, ridge=None)
    # underdetermined is just another singular Gram: ridge handles it
    under = fit_mse(_dataset(np.ones((2, 3)), [10.0, 10.0]))
    assert np.all(np.isfinite(under.theta))
    with pytest.raises(ForecastError, match="rank deficient"):
        fit_mse(_dataset(np.ones((2, 3)), [10.0, 10.0]), ridge=None)


def test_fit_quantile_recovers_shifted_levels():
    rng = np.random.default_rng(3)
    n = 3000
    f = rng.uniform(0.0, 50.0, size=n)
    noise = rng.uniform(0.0, 100.0, size=n)  # tau-quantile is exactly 100 tau
    y = 2000.0 + 40.0 * f + noise
    qm = fit_quantile(_dataset(f, y), taus=(0.25, 0.5, 0.75))
    x = np.array([1.0, 30.0])
    got = predict_quantiles(qm, x)
    want = 2000.0 + 40.0 * 30.0 + 100.0 * np.array([0.25, 0.5, 0.75])
    assert np.allclose(got, want, atol=8.0)


def test_quantile_median_tracks_mse_on_symmetric_noise():
    rng = np.random.default_rng(4)
    n = 4000
    f = rng.uniform(0, 100, size=n)
    y = 4000 + 20 * f + rng.normal(0, 60, size=n)
    d = _dataset(f, y)
    med = fit_quantile(d, taus=(0.5,))
    ls = fit_mse(d)
    x = np.column_stack([np.ones(5), np.linspace(0, 100, 5)])
    assert np.allclose(predict_quantiles(med, x)[:, 0], predict(ls, x), atol=10.0)


def test_predict_quantiles_rearranges_crossings():
    # deliberately crossing curves: raw order flips with the feature sign
    qm = QuantileModel(np.array([0.3, 0.7]),
                       np.array([[5000.0, -10.0], [5000.0, 10.0]]))
    lo_x = np.array([1.0, -20.0])
    assert np.all(np.diff(predict_quantiles(qm, lo_x)) >= 0)
    hi_x = np.array([1.0, 20.0])
    assert np.all(np.diff(predict_quantiles(qm, hi_x)) >= 0)


def test_inverse_cdf_interpolates_and_extrapolates():
    taus = np.array([0.1, 0.5, 0.9])
    qm = QuantileModel(taus, np.array([[4000.0], [5000.0], [6000.0]]))
    x = np.array([1.0])
    at_taus = inverse_cdf(qm, x, taus)
    assert np.allclose(at_taus, [4000.0, 5000.0, 6000.0])
    probs = np.array([0.001, 0.01, 0.1, 0.5, 0.9, 0.99, 0.999])
    vals = inverse_cdf(qm, x, probs)
    assert np.all(np.diff(vals) >= 0)
    assert vals[0] < 4000.0 and vals[-1] > 6000.0  # tails extend past the grid
    assert np.all(vals >= qm.h_floor)
    with pytest.raises(ForecastError):
        inverse_cdf(qm, x, np.array([0.0]))
    with pytest.raises(ForecastError):
        inverse_cdf(qm, x, np.array([1.0]))


def test_inverse_cdf_single_level_is_constant():
    qm = QuantileModel(np.array([0.5]), np.array([[4500.0]]))
    vals = inverse_cdf(qm, np.array([1.0]), np.array([0.01, 0.5, 0.99]))
    assert np.all(vals == 4500.0)


def test_quantile_fit_nonconvergence_carries_trajectory():
    rng = np.random.default_rng(5)
    f = rng.uniform(0, 10, size=200)
    y = 3000 + 100 * f + rng.normal(0, 30, size=200)
    cfg = QuantileFitConfig(max_iters=1)  # starved optimizer cannot converge
    with pytest.raises(QuantileFitError) as ei:
        fit_quantile(_dataset(f, y), taus=(0.9,), cfg=cfg)
    assert len(ei.value.loss_trajectory) >= 1
    assert np.all(np.isfinite(ei.value.loss_trajectory))
    with pytest.raises(Exception):
        QuantileFitConfig(bandwidths=(0.02, 0.2))  # must shrink, not grow


def test_model_serialization_round_trip(tmp_path):
    m = ForecastModel(np.array([1808.5, 0.123456789012345]), 1700.0, ("const", "load"))
    p = tmp_path / "point.json"
    save_model(m, p)
    back = load_model(p)
    assert isinstance(back, ForecastModel)
    assert np.array_equal(back.theta, m.theta)
    assert back.h_floor == m.h_floor and back.feature_names == m.feature_names

    qm = QuantileModel(np.array([0.1, 0.9]),
                       np.array([[4000.0, 1e-7], [6000.0, -2e-7]]),
                       1650.0, ("const", "load"))
    pq = tmp_path / "quant.json"
    save_model(qm, pq)
    backq = load_model(pq)
    assert isinstance(backq, QuantileModel)
    assert np.array_equal(backq.thetas, qm.thetas)
    assert np.array_equal(backq.taus, qm.taus)

    # identical content writes identical bytes
    p2 = tmp_path / "point2.json"
    save_model(m, p2)
    assert p.read_bytes() == p2.read_bytes()


def test_model_validation():
    with pytest.raises(ForecastError):
        ForecastModel(np.array([[1.0, 2.0]]))  # not 1-D
    with pytest.raises(ForecastError):
        ForecastModel(np.array([np.inf]))
    with pytest.raises(ForecastError):
        ForecastModel(np.array([1.0]), h_floor=-5.0)
    with pytest.raises(ForecastError):
        QuantileModel(np.array([0.5, 0.5]), np.zeros((2, 1)))
    with pytest.raises(ForecastError):
        QuantileModel(np.array([0.0, 0.5]), np.zeros((2, 1)))


def test_pinball_loss_known_values():
    X = np.array([[1.0], [1.0]])
    y = np.array([1.0, 3.0])
    # theta = [2]: residuals -1 and +1, symmetric at tau = 0.5
    loss, grad = pinball_loss(np.array([2.0]), X, y, 0.5)
    assert loss == pytest.approx(0.5)
    assert grad == pytest.approx([0.0])
    # tau = 0.9 penalizes under-prediction 9x over-prediction
    loss, grad = pinball_loss(np.array([2.0]), X, y, 0.9)
    assert loss == pytest.approx(0.5 * (0.1 * 1.0 + 0.9 * 1.0))
    assert grad == pytest.approx([0.5 * (-0.9 + 0.1)])
    # zero residual takes the tau branch
    loss, grad = pinball_loss(np.array([1.0]), np.array([[1.0]]),
                              np.array([1.0]), 0.3)
    assert loss == 0.0
    assert grad == pytest.approx([-0.3])
    with pytest.raises(ForecastError):
        pinball_loss(np.array([2.0]), X, y, 1.0)


def test_pinball_loss_gradient_matches_differences():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n, p = rng.integers(5, 40), rng.integers(1, 4)
        X = np.column_stack([np.ones(n), rng.normal(size=(n, p - 1))]) \
            if p > 1 else np.ones((n, 1))
        y = rng.normal(size=n) * 10.0
        theta = rng.normal(size=p)
        tau = float(rng.uniform(0.05, 0.95))
        _, grad = pinball_loss(theta, X, y, tau)
        h = 1e-6
        for j in range(p):
            e = np.zeros(p)
            e[j] = h
            lo, _ = pinball_loss(theta - e, X, y, tau)
            hi, _ = pinball_loss(theta + e, X, y, tau)
            fd = (hi - lo) / (2 * h)
            assert grad[j] == pytest.approx(fd, abs=1e-5)


def test_pinball_loss_minimized_at_sample_quantile():
    # intercept-only model: the optimum is the tau-quantile of y
    y = np.arange(1.0, 102.0)  # 1..101, quantiles are exact order stats
    X = np.ones((y.size, 1))
    for tau in (0.1, 0.5, 0.9):
        target = np.quantile(y, tau)
        best = pinball_loss(np.array([target]), X, y, tau)[0]
        for shift in (-5.0, -0.5, 0.5, 5.0):
            assert pinball_loss(np.array([target + shift]), X, y, tau)[0] >= best
