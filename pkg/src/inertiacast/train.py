"""Training point forecasters on market cost instead of squared error.

The objective is (1 - alpha) * mean + alpha * CVaR_beta of the two-stage
procurement cost that each scenario would incur if the day-ahead buy
were sized by the forecast. It is piecewise linear in the forecast, so
the optimizer is multi-start subgradient descent with a 1/sqrt(k) step
decay. Starts are informed rather than random: the squared-error fit, a
low conditional-quantile fit (risk weighting wants the forecast under
the mean, since cheap day-ahead reserve makes under-forecasting the safe
direction), an LP-found point below the full-capacity cost plateau for
the beta -> 1 tail, and seeded downshifted perturbations. Small scenario
sets additionally start from enumerated per-scenario cost bottoms, and
the winner gets an axis pattern-search polish, which settles the valley
vertices the subgradient zigzag circles around.

The chain rule runs forecast -> requirement -> clearing cost: the
requirement scales as 1/forecast, the market marginal comes from the
merit orders, and the risk weights pick out the scenarios that matter.
Where the forecast is floored (requirement pinned at fleet capacity)
the gradient is zero, a valid subgradient on the flat region.
"""

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from .forecast import ForecastError, ForecastModel, fit_mse, fit_quantile
from .market import (
    FleetSpec,
    FrequencyParams,
    day_ahead_cost,
    reserve_from_inertia,
    saturation_inertia,
    two_stage_cost,
    two_stage_marginal,
)
from .risk import RiskConfig, mean_cvar_objective, mean_cvar_weights, var_cvar


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer knobs; defaults are sized for tens of thousands of rows."""

    risk: RiskConfig = field(default_factory=RiskConfig)
    restarts: int = 4
    max_iters: int = 400
    step0: float = None  # None: scaled so the first move shifts ~120 MW*s
    tol: float = 1e-7
    window: int = 60
    seed: int = 0
    warm_start: np.ndarray = None  # overrides the squared-error start

    def __post_init__(self):
        if self.restarts < 1:
            raise TrainingError("restarts must be >= 1")
        if self.max_iters < 1:
            raise TrainingError("max_iters must be >= 1")
        if not (math.isfinite(self.tol) and self.tol > 0):
            raise TrainingError("tol must be positive")
        if self.window < 1:
            raise TrainingError("window must be >= 1")


@dataclass(frozen=True, eq=False)
class TrainReport:
    """Winning model plus how the optimizer got there."""

    model: ForecastModel
    objective: float
    var: float
    loss_trajectory: np.ndarray
    restart: int
    iterations: int


def _decision_costs(theta, X, realized, floor, fleet, params):
    """Scenario costs implied by theta, with the floored-prediction mask."""
    raw = X @ theta
    hhat = np.maximum(raw, floor)
    t = np.minimum(reserve_from_inertia(hhat, params), fleet.total_capacity)
    costs = two_stage_cost(t, realized, fleet)
    return hhat, t, costs, raw > floor


def _corridor_start(X, realized, floor, fleet, params, level):
    """A start whose every scenario cost stays below `level`, or None.

    Any scenario predicted at or under the floor costs exactly the
    full-capacity clearing price with a dead subgradient, and near beta = 1
    that plateau swallows the whole tail objective, so descent needs to begin
    where no scenario is floored and none is badly under-procured. Cost is
    unimodal in the prediction, which makes "cost <= level" a per-scenario
    prediction interval and the start a linear feasibility problem: find it
    with an LP that maximizes clearance above the floor. The descent itself
    still does all the optimizing below `level`.
    """
    n = len(realized)
    lo, hi = np.zeros(n), realized.copy()
    cheap_rt = two_stage_cost(lo, realized, fleet) <= level
    for _ in range(60):  # smallest admissible day-ahead total, per scenario
        mid = 0.5 * (lo + hi)
        good = two_stage_cost(mid, realized, fleet) <= level
        hi = np.where(good, mid, hi)
        lo = np.where(good, lo, mid)
    t_least = np.where(cheap_rt, 0.0, hi)
    with np.errstate(divide="ignore"):
        ub = np.where(t_least > 0, params.nadir_constant / t_least, np.inf)
    ub = np.minimum(ub, 1e7)  # keeps the LP bounded; far above any forecast
    k = X.shape[1]
    cons = np.vstack([np.hstack([-X, np.ones((n, 1))]),
                      np.hstack([X, np.zeros((n, 1))])])
    rhs = np.concatenate([-np.full(n, floor), ub])
    obj = np.zeros(k + 1)
    obj[-1] = -1.0
    res = linprog(obj, A_ub=cons, b_ub=rhs,
                  bounds=[(None, None)] * k + [(0.0, None)], method="highs")
    if res.status != 0 or res.x is None or -res.fun <= 0:
        return None
    theta = res.x[:k]
    _, _, costs, _ = _decision_costs(theta, X, realized, floor, fleet, params)
    if costs.max() > level * (1 + 1e-6):
        return None
    return theta


def _vertex_starts(X, Xs, scale, realized, params, cap_flats=12, cap_solves=24):
    """Candidate starts at per-scenario cost bottoms, for small scenario sets.

    A scenario's cost bottoms where the forecast equals the inertia whose
    requirement is exactly the realized one (the day-ahead buy lands on the
    requirement, no top-up and no waste). With few scenarios the candidate
    postures are enumerable: a flat forecast through each such bottom, and
    for 2-3 coefficients the exact interpolations of that many bottoms.
    Scenarios are visited in descending-requirement order, the ones risk
    weighting tends to bind on.
    """
    n, k = Xs.shape
    targets = params.nadir_constant / realized
    order = np.argsort(-realized, kind="stable")
    out = []
    const_cols = np.flatnonzero(np.ptp(X, axis=0) == 0)
    if const_cols.size and X[0, const_cols[0]] != 0:
        c = const_cols[0]
        for i in order[:cap_flats]:
            s = np.zeros(k)
            s[c] = targets[i] / X[0, c] * scale[c]
            out.append(s)
    if 2 <= k <= 3:
        rows = order[: min(n, k + 4)]
        for subset in list(combinations(rows, k))[:cap_solves]:
            sel = list(subset)
            try:
                s = np.linalg.solve(Xs[sel], targets[sel])
            except np.linalg.LinAlgError:
                continue
            if np.all(np.isfinite(s)):
                out.append(s)
    return out


def _pattern_polish(fn, ts, step0, budget=4000):
    """Axis pattern search from ts; returns the polished point and value.

    The descent zigzags on piecewise-linear valleys and dies on the flat
    cost plateau, where its subgradient is exactly zero. Coordinate probes
    with a halving step walk both, and need no gradient. Stops below a
    1/256 MW*s-equivalent step (column-scaled space) or on budget.
    """
    best = fn(ts)
    step = step0
    evals = 0
    while step >= 1.0 / 256.0 and evals < budget:
        improved = False
        for j in range(ts.size):
            for sgn in (1.0, -1.0):
                cand = ts.copy()
                cand[j] += sgn * step
                val = fn(cand)
                evals += 1
                if val < best - 1e-12 * max(abs(best), 1.0):
                    ts, best = cand, val
                    improved = True
                    break
        if not improved:
            step *= 0.5
    return ts, best


def raobf_loss(theta, data, fleet: FleetSpec, params: FrequencyParams,
               risk: RiskConfig) -> float:
    """Risk-blended two-stage cost of theta on the train split."""
    tr = data.train()
    floor = saturation_inertia(fleet, params)
    _, _, costs, _ = _decision_costs(np.asarray(theta, dtype=float), tr.X,
                                     tr.realized_req, floor, fleet, params)
    return mean_cvar_objective(costs, risk)


def raobf_subgradient(theta, data, fleet: FleetSpec, params: FrequencyParams,
                      risk: RiskConfig) -> np.ndarray:
    """Subgradient of raobf_loss at theta, one entry per coefficient."""
    tr = data.train()
    floor = saturation_inertia(fleet, params)
    theta = np.asarray(theta, dtype=float)
    hhat, t, costs, active = _decision_costs(theta, tr.X, tr.realized_req,
                                             floor, fleet, params)
    w = mean_cvar_weights(costs, risk)
    dcdt = two_stage_marginal(t, tr.realized_req, fleet)
    dtdh = -params.nadir_constant / hhat ** 2
    per_row = np.where(active, w * dcdt * dtdh, 0.0)
    return tr.X.T @ per_row


def train_raobf(data, fleet: FleetSpec, params: FrequencyParams,
                cfg: TrainConfig = None) -> TrainReport:
    """Multi-start subgradient descent on the risk-blended market cost."""
    cfg = cfg or TrainConfig()
    tr = data.train()
    if len(tr) == 0:
        raise TrainingError("no training rows")
    X, realized = tr.X, tr.realized_req
    floor = saturation_inertia(fleet, params)
    cap = fleet.total_capacity

    # column scaling: steps move every coefficient on a common footing
    scale = np.sqrt(np.mean(X * X, axis=0))
    scale[scale == 0] = 1.0
    Xs = X / scale

    base = fit_mse(data, h_floor=floor)
    theta0s = base.theta * scale  # scaled space: Xs @ ts == X @ theta
    sd = float(np.std(tr.inertia - Xs @ theta0s)) or 1.0
    rng = np.random.default_rng(cfg.seed)

    def jitter_start(r):
        s = theta0s.copy()
        s[0] -= sd * 0.8 * r  # probe lower quantiles
        s += 0.1 * sd * rng.standard_normal(s.size)
        return s

    starts = []
    for r in range(cfg.restarts):
        if r == 0:
            if cfg.warm_start is not None:
                ws = np.asarray(cfg.warm_start, dtype=float)
                if ws.shape != theta0s.shape:
                    raise TrainingError("warm_start shape does not match features")
                starts.append(ws * scale)
            else:
                starts.append(theta0s.copy())
        elif r == 1:
            # envelope start: a low conditional-quantile curve sits where risk
            # weighting wants to go, which a cold start cannot reach by
            # zig-zagging across tail scenarios one subgradient at a time
            tau = min(max(0.5 * (1.0 - cfg.risk.beta), 0.005), 0.45)
            try:
                env = fit_quantile(data, taus=(tau,), h_floor=floor)
                s = env.thetas[0] * scale
                lift = (floor + 0.05 * sd + 1.0) - float((Xs @ s).min())
                if lift > 0.0:  # keep every scenario off the floored plateau
                    s[0] += lift
                starts.append(s)
            except ForecastError:
                starts.append(jitter_start(r))
        elif r == 2:
            # near beta = 1 the tail objective is the sample max, and any
            # scenario parked on the floor pins it at the full-capacity
            # plateau; start inside the sub-plateau corridor instead
            budget = len(tr) * (1.0 - cfg.risk.beta)
            corridor = None
            if cfg.risk.alpha == 1.0 and budget <= 64.0:
                level = 0.997 * day_ahead_cost(cap, fleet)
                corridor = _corridor_start(Xs, realized, floor, fleet,
                                           params, level)
            if corridor is not None:
                starts.append(corridor)
            else:
                # "cover" start: lowest prediction lands just above the floor
                s = theta0s.copy()
                s[0] -= float((Xs @ s).min()) - (floor + 0.05 * sd + 1.0)
                starts.append(s)
        else:
            starts.append(jitter_start(r - 2))

    if len(tr) <= 512:  # enumerable candidate postures, descent is cheap here
        starts.extend(_vertex_starts(X, Xs, scale, realized, params))

    def objective_and_grad(ts):
        hhat, t, costs, active = _decision_costs(ts, Xs, realized, floor,
                                                 fleet, params)
        if not np.all(np.isfinite(costs)):
            return np.inf, None, np.nan
        obj = mean_cvar_objective(costs, cfg.risk)
        w = mean_cvar_weights(costs, cfg.risk)
        dcdt = two_stage_marginal(t, realized, fleet)
        dtdh = -params.nadir_constant / hhat ** 2
        per_row = np.where(active, w * dcdt * dtdh, 0.0)
        g = Xs.T @ per_row
        v = var_cvar(costs, cfg.risk.beta)[0]
        return obj, g, v

    best = None  # (objective, ts, var, trajectory, restart, iterations)
    for r, ts in enumerate(starts):
        obj, g, v = objective_and_grad(ts)
        if not math.isfinite(obj):
            continue
        if cfg.step0 is not None:
            step0 = cfg.step0
        else:
            move = np.abs(Xs @ g)
            rms = float(np.sqrt(np.mean(move * move)))
            step0 = 120.0 / rms if rms > 0 else 1.0
        traj = [obj]
        best_obj, best_ts, best_v = obj, ts.copy(), v
        anchor = obj
        n_iters = 0
        for k in range(1, cfg.max_iters + 1):
            if g is None or not g.any():
                break
            ts = ts - (step0 / math.sqrt(k)) * g
            obj, g, v = objective_and_grad(ts)
            if not math.isfinite(obj):
                break
            traj.append(obj)
            n_iters = k
            if obj < best_obj:
                best_obj, best_ts, best_v = obj, ts.copy(), v
            if k % cfg.window == 0:
                if anchor - best_obj <= cfg.tol * max(abs(anchor), 1.0):
                    break
                anchor = best_obj
        if best is None or best_obj < best[0]:
            best = (best_obj, best_ts, best_v, np.array(traj), r, n_iters)

    if best is None:
        raise TrainingError("every restart diverged to a non-finite objective")
    obj, ts, v, traj, r, iters = best

    def objective_only(ts_):
        _, _, costs, _ = _decision_costs(ts_, Xs, realized, floor, fleet,
                                         params)
        if not np.all(np.isfinite(costs)):
            return np.inf
        return mean_cvar_objective(costs, cfg.risk)

    step0 = min(max(4.0, 0.25 * sd), 256.0)
    ts_p, obj_p = _pattern_polish(objective_only, ts.copy(), step0)
    if obj_p < obj:
        ts, obj = ts_p, obj_p
        _, _, costs, _ = _decision_costs(ts, Xs, realized, floor, fleet,
                                         params)
        v = var_cvar(costs, cfg.risk.beta)[0]
        traj = np.append(traj, obj)

    model = ForecastModel(ts / scale, floor, tr.feature_names)
    return TrainReport(model, float(obj), float(v), traj, r, iters)
