"""Decision-cost objective, its subgradient, and the trainer."""

import numpy as np
import pytest

from inertiacast.data import Dataset, generate_synthetic
from inertiacast.forecast import predict
from inertiacast.market import (
    default_fleet,
    default_frequency_params,
    reserve_from_inertia,
    saturation_inertia,
)
from inertiacast.risk import RiskConfig, beta_max
from inertiacast.train import (
    TrainConfig,
    TrainingError,
    raobf_loss,
    raobf_subgradient,
    train_raobf,
)

FLEET = default_fleet()
FP = default_frequency_params()


def _dataset(features, inertia, realized=None):
    features = np.atleast_2d(np.asarray(features, dtype=float))
    if features.shape[0] != len(inertia):
        features = features.T
    n, k = features.shape
    X = np.column_stack([np.ones(n), features])
    inertia = np.asarray(inertia, dtype=float)
    if realized is None:
        realized = reserve_from_inertia(inertia, FP)
    return Dataset(("const", *(f"f{j}" for j in range(k))), X, inertia,
                   np.asarray(realized, dtype=float),
                   tuple(f"t{s}" for s in range(n)))


def _const_dataset(inertia):
    inertia = np.asarray(inertia, dtype=float)
    n = inertia.size
    return Dataset(("const",), np.ones((n, 1)), inertia,
                   np.asarray(reserve_from_inertia(inertia, FP)),
                   tuple(f"t{s}" for s in range(n)))


def test_loss_single_scenario_reference():
    d = _const_dataset([2500.0 * 0 + 10125000.0 / 2500.0])  # realized_req 2500
    loss = raobf_loss(np.array([5000.0]), d, FLEET, FP, RiskConfig(0.0, 0.5))
    assert loss == pytest.approx(190175.0)


def test_loss_alpha_blend():
    rng = np.random.default_rng(0)
    d = _const_dataset(rng.uniform(3000.0, 8000.0, size=40))
    theta = np.array([5000.0])
    m = raobf_loss(theta, d, FLEET, FP, RiskConfig(0.0, 0.9))
    c = raobf_loss(theta, d, FLEET, FP, RiskConfig(1.0, 0.9))
    mid = raobf_loss(theta, d, FLEET, FP, RiskConfig(0.3, 0.9))
    assert mid == pytest.approx(0.7 * m + 0.3 * c)
    assert c >= m


def test_loss_beta_max_is_worst_case():
    rng = np.random.default_rng(1)
    h = rng.uniform(3000.0, 8000.0, size=25)
    d = _const_dataset(h)
    theta = np.array([6000.0])
    worst = raobf_loss(theta, d, FLEET, FP, RiskConfig(1.0, beta_max(25)))
    from inertiacast.market import two_stage_cost
    t = min(reserve_from_inertia(6000.0, FP), FLEET.total_capacity)
    costs = two_stage_cost(np.full(25, t), d.realized_req, FLEET)
    assert worst == pytest.approx(costs.max())


def test_identical_scenarios_make_alpha_irrelevant():
    d = _const_dataset([5000.0] * 8)
    theta = np.array([5400.0])
    a = raobf_loss(theta, d, FLEET, FP, RiskConfig(0.0, 0.9))
    b = raobf_loss(theta, d, FLEET, FP, RiskConfig(1.0, 0.9))
    assert a == pytest.approx(b)


def test_subgradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    n = 60
    f = rng.uniform(0.5, 2.0, size=(n, 2))
    inertia = 3500.0 + 900.0 * f[:, 0] + 400.0 * f[:, 1] + rng.normal(0, 80, n)
    d = _dataset(f, inertia)
    risk = RiskConfig(0.35, 0.8)
    checked = 0
    for trial in range(2000):
        theta = np.array([rng.uniform(3000.0, 4000.0),
                          rng.uniform(500.0, 1300.0),
                          rng.uniform(100.0, 700.0)])
        g = raobf_subgradient(theta, d, FLEET, FP, risk)
        j = int(rng.integers(0, 3))
        delta = 1e-7 * max(abs(theta[j]), 1.0)
        up = theta.copy()
        up[j] += delta
        dn = theta.copy()
        dn[j] -= delta
        g_up = raobf_subgradient(up, d, FLEET, FP, risk)
        g_dn = raobf_subgradient(dn, d, FLEET, FP, risk)
        # the loss is smooth between kinks (1/h through the reserve rule);
        # a regime change makes the gradient jump by orders more than the
        # smooth drift across this stencil, so a loose match filters kinks
        if not np.allclose(g_up, g_dn, rtol=1e-5, atol=1e-10):
            continue
        fd = (raobf_loss(up, d, FLEET, FP, risk)
              - raobf_loss(dn, d, FLEET, FP, risk)) / (2 * delta)
        assert g[j] == pytest.approx(fd, rel=1e-4, abs=1e-7)
        checked += 1
        if checked >= 25:
            break
    assert checked >= 25


def test_exact_procurement_is_a_kink_minimum():
    # forecast hits the realized requirement in every scenario
    h_star = 5000.0
    d = _const_dataset([h_star] * 6)
    theta = np.array([h_star])
    risk = RiskConfig(0.0, 0.5)
    base = raobf_loss(theta, d, FLEET, FP, risk)
    for delta in (0.5, 2.0, 10.0):
        assert raobf_loss(np.array([h_star + delta]), d, FLEET, FP, risk) > base
        assert raobf_loss(np.array([h_star - delta]), d, FLEET, FP, risk) > base
    # the one-sided derivative pair brackets zero, so 0 is a subgradient
    g = raobf_subgradient(theta, d, FLEET, FP, risk)[0]
    dtdh = FP.nadir_constant / h_star ** 2
    assert -153.0 * dtdh - 1e-9 <= g <= 47.0 * dtdh + 1e-9


def test_floored_forecast_has_zero_subgradient():
    floor = saturation_inertia(FLEET, FP)
    d = _const_dataset([5000.0] * 5)
    g = raobf_subgradient(np.array([floor - 500.0]), d, FLEET, FP,
                          RiskConfig(0.0, 0.5))
    assert g[0] == 0.0


def test_train_single_scenario_recovers_requirement():
    h_true = 5000.0
    d = _dataset(np.array([[3.0]]), np.array([h_true]))
    cfg = TrainConfig(risk=RiskConfig(0.0, 0.5), restarts=2, max_iters=300, seed=0)
    rep = train_raobf(d, FLEET, FP, cfg)
    got = predict(rep.model, d.X[0])
    assert got == pytest.approx(h_true, abs=1.0)


def test_train_objective_is_reevaluated_loss():
    d = _const_dataset(np.random.default_rng(3).uniform(3500, 7500, size=150))
    cfg = TrainConfig(risk=RiskConfig(0.25, 0.8), restarts=2, max_iters=120, seed=1)
    rep = train_raobf(d, FLEET, FP, cfg)
    again = raobf_loss(rep.model.theta, d, FLEET, FP, cfg.risk)
    assert rep.objective == pytest.approx(again, rel=1e-12)
    assert rep.objective <= rep.loss_trajectory[0] + 1e-9
    assert rep.objective == pytest.approx(min(rep.loss_trajectory), rel=1e-12)


def test_train_is_deterministic():
    rng = np.random.default_rng(4)
    f = rng.uniform(0, 10, size=400)
    inertia = 4000 + 300 * f + rng.normal(0, 120, size=400)
    d = _dataset(f, inertia)
    cfg = TrainConfig(risk=RiskConfig(0.5, 0.9), restarts=3, max_iters=100, seed=7)
    a = train_raobf(d, FLEET, FP, cfg)
    b = train_raobf(d, FLEET, FP, cfg)
    assert np.array_equal(a.model.theta, b.model.theta)
    assert a.objective == b.objective and a.restart == b.restart


def test_train_beats_mse_fit_on_its_own_objective():
    rng = np.random.default_rng(5)
    n = 1500
    f = rng.uniform(0, 10, size=n)
    inertia = 4000 + 300 * f + rng.normal(0, 150, size=n)
    d = _dataset(f, inertia)
    risk = RiskConfig(0.0, 0.5)
    from inertiacast.forecast import fit_mse
    mse_model = fit_mse(d, h_floor=saturation_inertia(FLEET, FP))
    mse_obj = raobf_loss(mse_model.theta, d, FLEET, FP, risk)
    rep = train_raobf(d, FLEET, FP, TrainConfig(risk=risk, restarts=3,
                                                max_iters=250, seed=0))
    assert rep.objective < mse_obj * 0.999


def test_train_alpha_one_is_more_conservative():
    rng = np.random.default_rng(6)
    n = 2500
    f = rng.uniform(0, 10, size=(n, 2))
    inertia = 3600 + 250 * f[:, 0] + 150 * f[:, 1] + rng.normal(0, 130, n)
    d = _dataset(f, inertia)
    d.split[-400:] = "test"
    neutral = train_raobf(d, FLEET, FP, TrainConfig(
        risk=RiskConfig(0.0, 0.9), restarts=3, max_iters=250, seed=0))
    averse = train_raobf(d, FLEET, FP, TrainConfig(
        risk=RiskConfig(1.0, 0.9), restarts=3, max_iters=250, seed=0))
    te = d.test()
    h_neutral = np.maximum(te.X @ neutral.model.theta, neutral.model.h_floor)
    h_averse = np.maximum(te.X @ averse.model.theta, averse.model.h_floor)
    # lower inertia forecast means a larger reserve buy
    assert np.mean(h_averse < h_neutral) >= 0.95


def test_train_beta_max_escapes_the_capacity_plateau():
    # near beta = 1 the objective is the sample max, and any scenario whose
    # forecast hits the floor pins it at the full-capacity clearing cost with
    # a dead subgradient; the corridor start must find the interior optimum
    rng = np.random.default_rng(12)
    n = 1200
    f = rng.uniform(0, 10, size=n)
    inertia = np.clip(2600 + 500 * f + rng.normal(0, 260, size=n), 2000, None)
    d = _dataset(f, inertia)
    risk = RiskConfig(1.0, beta_max(n))
    rep = train_raobf(d, FLEET, FP, TrainConfig(risk=risk, seed=0))
    from inertiacast.market import day_ahead_cost
    plateau = day_ahead_cost(FLEET.total_capacity, FLEET)
    # the max cost can never beat clearing the worst realized requirement
    tr = d.train()
    lower = day_ahead_cost(float(tr.realized_req.max()), FLEET)
    assert rep.objective < plateau * 0.999
    assert rep.objective >= lower - 1e-6


def test_train_matches_grid_scan_on_tiny_instance():
    rng = np.random.default_rng(8)
    h = rng.uniform(3200.0, 7500.0, size=30)
    d = _const_dataset(h)
    risk = RiskConfig(0.4, 0.8)
    rep = train_raobf(d, FLEET, FP, TrainConfig(risk=risk, restarts=4,
                                                max_iters=400, seed=0))
    grid = np.arange(2500.0, 9000.0, 1.0)
    best = min(raobf_loss(np.array([g]), d, FLEET, FP, risk) for g in grid)
    assert rep.objective <= best * 1.005 + 1e-9


def test_train_validation():
    d = _const_dataset([5000.0] * 4)
    with pytest.raises(TrainingError):
        TrainConfig(restarts=0)
    with pytest.raises(TrainingError):
        train_raobf(d, FLEET, FP, TrainConfig(warm_start=np.ones(3)))
    empty = _const_dataset([5000.0])
    empty.split[:] = "test"
    with pytest.raises(TrainingError):
        train_raobf(empty, FLEET, FP)


def test_warm_start_is_respected():
    rng = np.random.default_rng(9)
    d = _const_dataset(rng.uniform(4000, 7000, size=200))
    risk = RiskConfig(0.0, 0.5)
    ref = train_raobf(d, FLEET, FP, TrainConfig(risk=risk, restarts=2,
                                                max_iters=200, seed=0))
    warm = train_raobf(d, FLEET, FP, TrainConfig(
        risk=risk, restarts=1, max_iters=50, seed=0,
        warm_start=ref.model.theta))
    assert warm.objective <= ref.objective + 1e-6
