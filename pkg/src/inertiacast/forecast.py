"""Linear inertia forecasters: point models and quantile curves.

Point models are theta'x with a floor that keeps the implied reserve
requirement finite and feasible; the floor defaults to the inertia at
which the default fleet saturates. Quantile models hold one coefficient
vector per level, are fit by subgradient descent on the pinball loss,
and are made monotone across levels by rearrangement at prediction
time. The inverse CDF interpolates the fitted levels on a normal
z-score axis, which extrapolates sanely into the tails where no level
was fit.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .market import default_fleet, default_frequency_params, saturation_inertia


class ForecastError(ValueError):
    pass


class QuantileFitError(ForecastError):
    """Raised when a pinball fit fails to converge; carries the loss path."""

    def __init__(self, message, loss_trajectory):
        super().__init__(message)
        self.loss_trajectory = np.asarray(loss_trajectory)


DEFAULT_H_FLOOR = saturation_inertia(default_fleet(), default_frequency_params())

DEFAULT_TAUS = (0.005, 0.01, 0.025, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5,
                0.6, 0.7, 0.8, 0.9, 0.95, 0.975, 0.99, 0.995)


@dataclass(frozen=True, eq=False)
class ForecastModel:
    """Point forecaster: predicts max(theta'x, h_floor)."""

    theta: np.ndarray
    h_floor: float = DEFAULT_H_FLOOR
    feature_names: tuple = ()

    def __post_init__(self):
        t = np.asarray(self.theta, dtype=float)
        if t.ndim != 1 or t.size == 0 or not np.all(np.isfinite(t)):
            raise ForecastError("theta must be a finite 1-D vector")
        object.__setattr__(self, "theta", t)
        if not (math.isfinite(self.h_floor) and self.h_floor > 0):
            raise ForecastError("h_floor must be positive")


@dataclass(frozen=True, eq=False)
class QuantileModel:
    """One coefficient vector per level; levels strictly increasing."""

    taus: np.ndarray
    thetas: np.ndarray
    h_floor: float = DEFAULT_H_FLOOR
    feature_names: tuple = ()

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float)
        thetas = np.asarray(self.thetas, dtype=float)
        if taus.ndim != 1 or taus.size == 0 or np.any(np.diff(taus) <= 0):
            raise ForecastError("taus must be strictly increasing")
        if np.any(taus <= 0) or np.any(taus >= 1):
            raise ForecastError("taus must lie strictly inside (0, 1)")
        if thetas.shape != (taus.size, thetas.shape[-1]) or thetas.ndim != 2:
            raise ForecastError("thetas must be (n_taus, n_features)")
        if not np.all(np.isfinite(thetas)):
            raise ForecastError("thetas must be finite")
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "thetas", thetas)
        if not (math.isfinite(self.h_floor) and self.h_floor > 0):
            raise ForecastError("h_floor must be positive")


def predict(model: ForecastModel, x):
    """Floored point prediction; x is one row (k,) or a matrix (n, k)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.theta.size:
        raise ForecastError(
            f"x has {x.shape[-1]} features, model expects {model.theta.size}")
    h = np.maximum(x @ model.theta, model.h_floor)
    return float(h) if x.ndim == 1 else h


def fit_mse(data, h_floor: float = None, ridge: float = 1e-10) -> ForecastModel:
    """Least squares on the train split via normal equations.

    A singular Gram matrix falls back to a relative ridge; pass
    ridge=None to make rank deficiency an error instead.
    """
    tr = data.train()
    X, y = tr.X, tr.inertia
    if len(tr) == 0:
        raise ForecastError("no training rows")
    G = X.T @ X / len(tr)
    b = X.T @ y / len(tr)
    ev = np.linalg.eigvalsh(G)
    if ev[0] <= ev[-1] * 1e-12:
        # collinear or underdetermined; the ridge picks a small-norm solution
        if ridge is None:
            raise ForecastError("feature matrix is rank deficient")
        G = G + ridge * max(ev[-1], 1.0) * np.eye(G.shape[0])
    theta = np.linalg.solve(G, b)
    floor = DEFAULT_H_FLOOR if h_floor is None else h_floor
    return ForecastModel(theta, floor, tr.feature_names)


def pinball_loss(theta, X, y, tau):
    """Mean check loss of the residuals y - X theta and a subgradient.

    Zero residuals take the tau branch, which is one valid subgradient
    choice at the kink. Returns (loss, gradient wrt theta).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if not 0.0 < tau < 1.0:
        raise ForecastError(f"tau must lie in (0, 1), got {tau!r}")
    u = y - X @ theta
    loss = float(np.mean(np.where(u >= 0, tau * u, (tau - 1.0) * u)))
    grad = -X.T @ np.where(u >= 0, tau, tau - 1.0) / y.size
    return loss, grad


@dataclass(frozen=True)
class QuantileFitConfig:
    """Smoothed-pinball fit knobs.

    The check loss is convolution-smoothed with a logistic kernel and
    minimized by L-BFGS, once per bandwidth from coarse to fine.
    Bandwidths are relative to the warm-start residual scale; max_iters
    and tol bound each L-BFGS stage.
    """

    max_iters: int = 500
    tol: float = 1e-12
    bandwidths: tuple = (0.2, 0.02)

    def __post_init__(self):
        if self.max_iters < 1:
            raise ForecastError("max_iters must be >= 1")
        if not (math.isfinite(self.tol) and self.tol > 0):
            raise ForecastError("tol must be positive")
        bw = tuple(self.bandwidths)
        if not bw or any(b <= 0 for b in bw) or list(bw) != sorted(bw, reverse=True):
            raise ForecastError("bandwidths must be positive and decreasing")


def _fit_one_tau(Xs, ys, tau, theta0, cfg):
    """Minimize the logistic-smoothed check loss, shrinking the bandwidth.

    Works on a standardized target, so bandwidths and tolerances are
    scale-free. Returns the solution and the trajectory of function
    evaluations; a stage that stops without converging raises.
    """
    from scipy.optimize import minimize

    n = ys.size
    traj = []
    theta = theta0
    for eps in cfg.bandwidths:
        def fg(th, eps=eps):
            u = ys - Xs @ th
            z = -u / eps
            soft = np.where(z > 30, z, np.log1p(np.exp(np.minimum(z, 30.0))))
            loss = float(np.mean(tau * u + eps * soft))
            sig = 1.0 / (1.0 + np.exp(np.clip(-z, -500.0, 500.0)))
            grad = -Xs.T @ (tau - sig) / n
            traj.append(loss)
            return loss, grad

        res = minimize(fg, theta, jac=True, method="L-BFGS-B",
                       options={"maxiter": cfg.max_iters, "ftol": cfg.tol,
                                "gtol": 1e-10})
        theta = res.x
        if not res.success:
            raise QuantileFitError(
                f"smoothed pinball fit at tau={tau} (bandwidth {eps}) stopped: "
                f"{res.message}", traj)
    return theta, np.array(traj)


def fit_quantile(data, taus=DEFAULT_TAUS, h_floor: float = None,
                 cfg: QuantileFitConfig = None) -> QuantileModel:
    """Fit one linear quantile curve per level on the train split."""
    cfg = cfg or QuantileFitConfig()
    taus = np.asarray(sorted(set(float(t) for t in np.atleast_1d(taus))))
    if taus.size == 0 or np.any(taus <= 0) or np.any(taus >= 1):
        raise ForecastError("taus must lie strictly inside (0, 1)")
    tr = data.train()
    X, y = tr.X, tr.inertia
    if len(tr) < X.shape[1]:
        raise ForecastError(f"{len(tr)} rows cannot fit {X.shape[1]} coefficients")

    # column scaling keeps the quasi-Newton geometry well conditioned
    scale = np.sqrt(np.mean(X * X, axis=0))
    scale[scale == 0] = 1.0
    Xs = X / scale

    base = fit_mse(data, ridge=1e-10)
    theta_mse = base.theta * scale  # into column-scaled space
    res = y - Xs @ theta_mse
    sd = float(np.std(res)) or 1.0
    ys = y / sd  # standardized target; bandwidths become scale-free

    thetas = []
    for tau in taus:
        theta0 = theta_mse.copy()
        theta0[0] += float(np.quantile(res, tau))  # shift intercept to the level
        th, _ = _fit_one_tau(Xs, ys, float(tau), theta0 / sd, cfg)
        thetas.append(th * sd / scale)  # back to raw feature space
    floor = DEFAULT_H_FLOOR if h_floor is None else h_floor
    return QuantileModel(taus, np.vstack(thetas), floor, tr.feature_names)


def predict_quantiles(qm: QuantileModel, x):
    """Per-level predictions, floored and rearranged to be nondecreasing.

    x (k,) -> (n_taus,); x (n, k) -> (n, n_taus).
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != qm.thetas.shape[1]:
        raise ForecastError(
            f"x has {x.shape[-1]} features, model expects {qm.thetas.shape[1]}")
    q = x @ qm.thetas.T
    q = np.maximum(q, qm.h_floor)
    return np.sort(q, axis=-1)


def inverse_cdf(qm: QuantileModel, x, probs):
    """Inertia quantiles at arbitrary probabilities for one feature row.

    Interpolates the fitted levels linearly on the normal z-score axis
    and extends the end segments outward, so tail probabilities beyond
    the fitted range stay finite and ordered.
    """
    probs = np.asarray(probs, dtype=float)
    if np.any(probs <= 0) or np.any(probs >= 1):
        raise ForecastError("probs must lie strictly inside (0, 1)")
    q = predict_quantiles(qm, np.asarray(x, dtype=float))
    if q.ndim != 1:
        raise ForecastError("inverse_cdf takes a single feature row")
    if qm.taus.size == 1:
        out = np.full(probs.shape, q[0])
        return out if probs.ndim else float(out)
    zg = ndtri(qm.taus)
    z = ndtri(np.clip(probs, 1e-12, 1.0 - 1e-12))
    out = np.interp(z, zg, q)
    # linear extension of the end segments
    lo_slope = (q[1] - q[0]) / (zg[1] - zg[0])
    hi_slope = (q[-1] - q[-2]) / (zg[-1] - zg[-2])
    out = np.where(z < zg[0], q[0] + (z - zg[0]) * lo_slope, out)
    out = np.where(z > zg[-1], q[-1] + (z - zg[-1]) * hi_slope, out)
    out = np.maximum(out, qm.h_floor)
    return out if probs.ndim else float(out)


# ---------------------------------------------------------------------------
# serialization


def save_model(model, path) -> None:
    """Write a point or quantile model as deterministic JSON."""
    if isinstance(model, ForecastModel):
        doc = {"kind": "point", "theta": model.theta.tolist(),
               "h_floor": model.h_floor,
               "feature_names": list(model.feature_names)}
    elif isinstance(model, QuantileModel):
        doc = {"kind": "quantile", "taus": model.taus.tolist(),
               "thetas": model.thetas.tolist(), "h_floor": model.h_floor,
               "feature_names": list(model.feature_names)}
    else:
        raise ForecastError(f"cannot serialize {type(model).__name__}")
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path):
    """Read a model written by save_model."""
    with open(path) as fh:
        doc = json.load(fh)
    kind = doc.get("kind")
    if kind == "point":
        return ForecastModel(np.asarray(doc["theta"]), float(doc["h_floor"]),
                             tuple(doc.get("feature_names", ())))
    if kind == "quantile":
        return QuantileModel(np.asarray(doc["taus"]), np.asarray(doc["thetas"]),
                             float(doc["h_floor"]),
                             tuple(doc.get("feature_names", ())))
    raise ForecastError(f"{path}: unknown model kind {kind!r}")
