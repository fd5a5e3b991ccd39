"""Reference pipelines that forecast a distribution, then optimize under it.

Both competitors start from a conditional quantile model instead of a
point forecast: the stochastic program hedges the expected two-stage cost
over a stratified scenario set drawn from the model, and the robust
program guards a one-sided inertia box anchored at a low quantile.
Merit-order clearing makes the per-class schedule a function of the
day-ahead total alone, so both programs collapse to picking one scalar
and solve exactly without a mathematical-programming solver.
"""

from dataclasses import dataclass

import numpy as np

from .forecast import QuantileModel, inverse_cdf
from .market import FleetSpec, FrequencyParams, reserve_from_inertia, two_stage_cost


class BaselineError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    """Reserve-requirement realizations with their probabilities."""

    requirements: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        req = np.atleast_1d(np.asarray(self.requirements, dtype=float))
        p = np.atleast_1d(np.asarray(self.probabilities, dtype=float))
        if req.shape != p.shape or req.ndim != 1 or req.size == 0:
            raise BaselineError("requirements and probabilities must be "
                                "matching non-empty vectors")
        if not np.all(np.isfinite(req)) or np.any(req < 0):
            raise BaselineError("requirements must be finite and nonnegative")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise BaselineError("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "requirements", req)
        object.__setattr__(self, "probabilities", p)

    def __len__(self):
        return self.requirements.size


@dataclass(frozen=True)
class UncertaintySet:
    """Box on inertia; only the low edge is adverse for reserve cost."""

    h_low: float
    h_high: float
    lam: float = 0.95

    def __post_init__(self):
        if not (np.isfinite(self.h_low) and np.isfinite(self.h_high)
                and 0 < self.h_low <= self.h_high):
            raise BaselineError("need 0 < h_low <= h_high")
        if not (np.isfinite(self.lam) and 0 <= self.lam < 1):
            raise BaselineError("lam must lie in [0, 1)")


def build_scenario_set(qm: QuantileModel, x, n_scen: int, lam: float,
                       seed: int, params: FrequencyParams) -> ScenarioSet:
    """Stratified requirement scenarios from the conditional quantiles.

    Splits the central probability interval [(1-lam)/2, (1+lam)/2] into
    n_scen equal bins, draws one uniform point per bin, and maps each
    through the model's inverse CDF at x and then the reserve rule.
    Probabilities are uniform.
    """
    if n_scen < 1:
        raise BaselineError("n_scen must be >= 1")
    if not 0 <= lam < 1:
        raise BaselineError("lam must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    lo = (1.0 - lam) / 2.0
    u = lo + lam * (np.arange(n_scen) + rng.random(n_scen)) / n_scen
    u = np.clip(u, 1e-12, 1 - 1e-12)  # lam = 0 collapses every bin to 0.5
    h = inverse_cdf(qm, x, u)
    req = reserve_from_inertia(np.atleast_1d(h), params)
    return ScenarioSet(req, np.full(n_scen, 1.0 / n_scen))


def _breakpoints(scen: ScenarioSet, fleet: FleetSpec) -> np.ndarray:
    """Every day-ahead total where the expected two-stage cost can kink.

    The cost kinks where the total crosses a class boundary, where a
    scenario's shortfall vanishes, and where a scenario's shortfall
    crosses a cumulative real-time residual level (residuals shrink as
    day-ahead eats into flexible classes, so those levels depend on which
    class is marginal). Superfluous candidates are harmless; missing ones
    would break exactness.
    """
    arr = fleet._arrays
    cap = fleet.total_capacity
    req = scen.requirements
    cand = [np.array([0.0, cap]), np.minimum(arr["da_cum"], cap), req]
    caps, prev_of = arr["caps"], arr["prev_of"]
    for seg_start in arr["da_prev"]:
        used = np.clip(seg_start - prev_of, 0.0, caps)
        residual = caps - used
        levels = np.cumsum(residual[arr["rt"]])
        for s in levels:
            cand.append(req - s)
    out = np.unique(np.concatenate(cand))
    return out[(out >= 0.0) & (out <= cap)]


def _expected_cost(t, scen: ScenarioSet, fleet: FleetSpec) -> float:
    costs = two_stage_cost(np.full(len(scen), float(t)), scen.requirements,
                           fleet)
    return float(scen.probabilities @ costs)


def solve_sp(scen: ScenarioSet, fleet: FleetSpec):
    """Exact two-stage stochastic plan: (day-ahead total, expected cost).

    Evaluates the piecewise-linear expected cost at every breakpoint and
    keeps the smallest total among minimizers.
    """
    cand = _breakpoints(scen, fleet)
    exp = np.array([_expected_cost(t, scen, fleet) for t in cand])
    best = int(np.argmin(exp))  # candidates ascend, so ties pick smallest t
    return float(cand[best]), float(exp[best])


def solve_ro(uset: UncertaintySet, fleet: FleetSpec,
             params: FrequencyParams):
    """Exact robust plan over the box: (day-ahead total, worst-case cost).

    Requirement falls with inertia and two-stage cost rises with the
    requirement, so the worst case sits at h_low and the min-max collapses
    to deterministic clearing of that one scenario.
    """
    r_low = float(reserve_from_inertia(uset.h_low, params))
    t = min(r_low, fleet.total_capacity)
    return t, float(two_stage_cost(t, r_low, fleet))


def sp_forecast_equivalent(scen: ScenarioSet, fleet: FleetSpec,
                           params: FrequencyParams) -> float:
    """Inertia forecast whose deterministic clearing copies the SP plan.

    Inverts the nadir rule at the stochastic plan's day-ahead total, so a
    point forecaster posting this value buys exactly the SP first stage.
    """
    t, _ = solve_sp(scen, fleet)
    if t <= 0:
        raise BaselineError("plan defers everything to real time; "
                            "no finite inertia maps to a zero buy")
    return params.nadir_constant / t


def uncertainty_from_quantiles(qm: QuantileModel, x, lam: float) -> UncertaintySet:
    """One-sided box: low edge at the (1-lam) conditional quantile.

    Only low inertia is adverse, so the box runs from that quantile up to
    the conditional median.
    """
    if not 0 < lam < 1:
        raise BaselineError("lam must lie in (0, 1)")
    h_low = float(inverse_cdf(qm, x, 1.0 - lam))
    h_high = float(inverse_cdf(qm, x, 0.5))
    return UncertaintySet(h_low, h_high, lam)
