"""Frequency-security reserve rule and two-stage reserve market.

The reserve requirement comes from post-fault frequency physics: the
nadir limit ties required reserve to 1/inertia, the steady-state limit
is an inertia-independent floor, and the RoCoF limit is a pure inertia
screen that reserve cannot fix. Clearing is merit order in both stages;
that is optimal here because each stage is linear with box constraints
and a single balance constraint.

Day-ahead procurement is an equality (excess reserve is not refunded),
real-time top-up is an inequality served only by classes flagged as
flexible, and any residual shortfall is priced at a penalty that stands
in for involuntary demand curtailment.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np


class MarketError(ValueError):
    pass


class InfeasibleRequirement(MarketError):
    """Requirement exceeds what the fleet can deliver day-ahead."""


@dataclass(frozen=True)
class FrequencyParams:
    """Post-fault frequency limits and the system constants behind them.

    dp_loss       size of the largest credible infeed loss, MW
    t_deliver     full delivery time of primary response, s
    df_nadir_max  largest tolerable nadir deviation, Hz
    df_ss_max     largest tolerable steady-state deviation, Hz
    rocof_max     RoCoF limit, Hz/s
    damping       load damping, fraction of demand per Hz
    demand        system demand seen by the damping term, MW
    """

    dp_loss: float = 1800.0
    t_deliver: float = 10.0
    df_nadir_max: float = 0.8
    df_ss_max: float = 0.5
    rocof_max: float = 0.125
    damping: float = 0.01
    demand: float = 30000.0

    def __post_init__(self):
        for name in ("dp_loss", "t_deliver", "df_nadir_max", "df_ss_max",
                     "rocof_max", "damping", "demand"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise MarketError(f"{name} must be a positive finite number, got {v!r}")

    @property
    def nadir_constant(self) -> float:
        """Product reserve*inertia required by the nadir limit, MW * MW*s."""
        return self.dp_loss ** 2 * self.t_deliver / (4.0 * self.df_nadir_max)

    @property
    def ss_reserve(self) -> float:
        """Inertia-independent reserve floor from the steady-state limit, MW."""
        return self.dp_loss - self.damping * self.demand * self.df_ss_max


def default_frequency_params() -> FrequencyParams:
    return FrequencyParams()


@dataclass(frozen=True)
class UnitClass:
    """A homogeneous block of reserve providers."""

    name: str
    count: int
    capacity_each: float
    price_da: float
    price_rt: float
    rt_flexible: bool

    def __post_init__(self):
        if self.count < 0:
            raise MarketError(f"count must be >= 0, got {self.count}")
        if not (math.isfinite(self.capacity_each) and self.capacity_each >= 0):
            raise MarketError(f"capacity_each must be >= 0, got {self.capacity_each}")
        if not (math.isfinite(self.price_da) and self.price_da >= 0):
            raise MarketError(f"price_da must be >= 0, got {self.price_da}")
        if not (math.isfinite(self.price_rt) and self.price_rt >= 0):
            raise MarketError(f"price_rt must be >= 0, got {self.price_rt}")

    @property
    def capacity(self) -> float:
        return self.count * self.capacity_each


@dataclass(frozen=True)
class FleetSpec:
    """The reserve fleet plus the shortfall penalty price."""

    classes: tuple
    penalty_price: float = 3000.0

    def __post_init__(self):
        if not self.classes:
            raise MarketError("fleet needs at least one unit class")
        if not math.isfinite(self.penalty_price) or self.penalty_price <= 0:
            raise MarketError("penalty_price must be positive")
        worst_rt = max((c.price_rt for c in self.classes if c.rt_flexible), default=0.0)
        if self.penalty_price < worst_rt:
            raise MarketError("penalty_price must be >= every real-time price")

    @property
    def total_capacity(self) -> float:
        return sum(c.capacity for c in self.classes)

    # merit orders are stable sorts: price ties break by declaration order
    @cached_property
    def da_order(self) -> tuple:
        return tuple(sorted(range(len(self.classes)), key=lambda i: self.classes[i].price_da))

    @cached_property
    def rt_order(self) -> tuple:
        flex = [i for i in range(len(self.classes)) if self.classes[i].rt_flexible]
        return tuple(sorted(flex, key=lambda i: self.classes[i].price_rt))

    @cached_property
    def _arrays(self) -> dict:
        """Precomputed numpy views used by the vectorized cost paths."""
        caps = np.array([c.capacity for c in self.classes], dtype=float)
        da = np.array(self.da_order, dtype=int)
        da_caps = caps[da]
        da_cum = np.cumsum(da_caps)
        da_prev = da_cum - da_caps
        # day-ahead fill position of every class, keyed by original index
        prev_of = np.empty(len(self.classes))
        prev_of[da] = da_prev
        return {
            "caps": caps,
            "da": da,
            "da_caps": da_caps,
            "da_prices": np.array([self.classes[i].price_da for i in da]),
            "da_cum": da_cum,
            "da_prev": da_prev,
            "prev_of": prev_of,
            "rt": np.array(self.rt_order, dtype=int),
            "rt_prices": np.array([self.classes[i].price_rt for i in self.rt_order]),
            "price_rt_of": np.array([c.price_rt for c in self.classes]),
            "flex_of": np.array([c.rt_flexible for c in self.classes], dtype=bool),
        }


def default_fleet() -> FleetSpec:
    """100x50 MW inflexible units at 47 and 30x20 MW flexible units at 200."""
    return FleetSpec(classes=(
        UnitClass("ccgt", 100, 50.0, 47.0, 47.0, False),
        UnitClass("ocgt", 30, 20.0, 200.0, 200.0, True),
    ))


# ---------------------------------------------------------------------------
# reserve rule


def reserve_from_inertia(inertia, params: FrequencyParams, include_ss: bool = False):
    """Reserve requirement (MW) for a given system inertia (MW*s).

    Scalar in, scalar out; array in, array out. The nadir branch scales
    as 1/inertia; with include_ss the steady-state floor is applied too.
    """
    h = np.asarray(inertia, dtype=float)
    if not np.all(np.isfinite(h)) or np.any(h <= 0):
        raise MarketError("inertia must be positive and finite")
    req = params.nadir_constant / h
    if include_ss:
        req = np.maximum(req, params.ss_reserve)
    if np.ndim(inertia) == 0:
        return float(req)
    return req


def check_rocof(inertia: float, params: FrequencyParams) -> bool:
    """True when the initial frequency gradient stays within the limit."""
    if not (math.isfinite(inertia) and inertia > 0):
        raise MarketError("inertia must be positive and finite")
    return params.dp_loss / (2.0 * inertia) <= params.rocof_max


def saturation_inertia(fleet: FleetSpec, params: FrequencyParams) -> float:
    """Inertia below which the nadir requirement exceeds fleet capacity."""
    return params.nadir_constant / fleet.total_capacity


# ---------------------------------------------------------------------------
# scalar clearing, returns full dispatch records


@dataclass(frozen=True, eq=False)
class DispatchResult:
    """Cleared schedules (per class, declaration order) and their cost."""

    da_schedule: np.ndarray
    rt_schedule: np.ndarray
    slack: float
    da_cost: float
    rt_cost: float
    total_cost: float


_FEAS_TOL = 1e-6


def clear_day_ahead(requirement: float, fleet: FleetSpec) -> DispatchResult:
    """Merit-order day-ahead clearing; procured reserve equals requirement."""
    if not math.isfinite(requirement) or requirement < 0:
        raise MarketError(f"requirement must be >= 0, got {requirement!r}")
    cap = fleet.total_capacity
    if requirement > cap + _FEAS_TOL:
        raise InfeasibleRequirement(
            f"requirement {requirement:.1f} MW exceeds fleet capacity {cap:.1f} MW")
    requirement = min(requirement, cap)
    n = len(fleet.classes)
    da = np.zeros(n)
    left = requirement
    for i in fleet.da_order:
        take = min(left, fleet.classes[i].capacity)
        da[i] = take
        left -= take
    cost = float(sum(fleet.classes[i].price_da * da[i] for i in range(n)))
    return DispatchResult(da, np.zeros(n), 0.0, cost, 0.0, cost)


def clear_real_time(realized_req: float, da_schedule, fleet: FleetSpec) -> DispatchResult:
    """Top up a fixed day-ahead schedule against the realized requirement.

    Only flexible classes can add reserve, each within its residual
    headroom; whatever cannot be served becomes slack at the penalty
    price. Over-procurement is not refunded.
    """
    if not math.isfinite(realized_req) or realized_req < 0:
        raise MarketError(f"realized_req must be >= 0, got {realized_req!r}")
    da = np.asarray(da_schedule, dtype=float)
    n = len(fleet.classes)
    if da.shape != (n,):
        raise MarketError(f"da_schedule must have one entry per class, got shape {da.shape}")
    caps = fleet._arrays["caps"]
    if np.any(da < -_FEAS_TOL) or np.any(da > caps + _FEAS_TOL):
        raise MarketError("da_schedule outside class capacity")
    rt = np.zeros(n)
    shortfall = max(realized_req - float(da.sum()), 0.0)
    left = shortfall
    for i in fleet.rt_order:
        take = min(left, caps[i] - da[i])
        rt[i] = take
        left -= take
    slack = left
    da_cost = float(sum(fleet.classes[i].price_da * da[i] for i in range(n)))
    rt_cost = float(sum(fleet.classes[i].price_rt * rt[i] for i in range(n)))
    total = da_cost + rt_cost + slack * fleet.penalty_price
    return DispatchResult(da, rt, slack, da_cost, rt_cost, total)


def total_cost(h_forecast: float, realized_req: float, fleet: FleetSpec,
               params: FrequencyParams) -> DispatchResult:
    """Two-stage cost of procuring on a forecast and settling on reality.

    The forecast-implied requirement uses the nadir branch only and is
    clamped to fleet capacity so a pessimistic forecast stays feasible.
    """
    req = min(reserve_from_inertia(h_forecast, params), fleet.total_capacity)
    da = clear_day_ahead(req, fleet)
    return clear_real_time(realized_req, da.da_schedule, fleet)


# ---------------------------------------------------------------------------
# vectorized costs over scenario arrays; these are what training loops on


def day_ahead_cost(t, fleet: FleetSpec):
    """Day-ahead cost of procuring t MW (array ok, clamped to capacity)."""
    a = fleet._arrays
    t = np.minimum(np.asarray(t, dtype=float), fleet.total_capacity)
    cost = np.zeros_like(t)
    for cap_i, price_i, prev_i in zip(a["da_caps"], a["da_prices"], a["da_prev"]):
        cost += price_i * np.clip(t - prev_i, 0.0, cap_i)
    return cost


def two_stage_cost(t, realized, fleet: FleetSpec):
    """Total two-stage cost for day-ahead totals t against realized needs.

    Broadcasts t against realized. Returns the total including the slack
    penalty, matching what the scalar clear_* pair would produce.
    """
    a = fleet._arrays
    t = np.minimum(np.asarray(t, dtype=float), fleet.total_capacity)
    realized = np.asarray(realized, dtype=float)
    t, realized = np.broadcast_arrays(t, realized)
    cost = day_ahead_cost(t, fleet)
    shortfall = np.maximum(realized - t, 0.0)
    served = np.zeros_like(shortfall)
    for i in a["rt"]:
        residual = a["caps"][i] - np.clip(t - a["prev_of"][i], 0.0, a["caps"][i])
        take = np.clip(shortfall - served, 0.0, residual)
        cost += a["price_rt_of"][i] * take
        served += take
    cost += fleet.penalty_price * (shortfall - served)
    return cost


def two_stage_marginal(t, realized, fleet: FleetSpec):
    """d(two_stage_cost)/dt, right-derivative convention at kinks.

    On the over-procured side the marginal is the day-ahead price of the
    marginal class. Under shortfall, buying one more MW ahead saves the
    marginal real-time MW, except that when the marginal day-ahead class
    is itself flexible with a fully used residual, the extra day-ahead MW
    also shrinks real-time headroom and the net effect passes through to
    the most expensive real-time MW actually used.
    """
    a = fleet._arrays
    t = np.asarray(t, dtype=float)
    realized = np.asarray(realized, dtype=float)
    t, realized = np.broadcast_arrays(t, realized)
    cap = fleet.total_capacity
    tc = np.minimum(t, cap)
    shortfall = realized - tc

    pos = np.searchsorted(a["da_cum"], tc, side="right")
    pos = np.minimum(pos, len(a["da_cum"]) - 1)
    marg_class = a["da"][pos]
    marg_da = a["da_prices"][pos]

    # walk the real-time order once, tracking the marginal rt price and the
    # cumulative residual at the day-ahead marginal class's own position
    q = np.maximum(shortfall, 0.0)
    cum_res = np.zeros_like(tc)
    cumres_at_marg = np.full_like(tc, np.inf)
    marg_rt = np.full_like(tc, fleet.penalty_price)
    found = np.zeros(tc.shape, dtype=bool)
    for i in a["rt"]:
        residual = a["caps"][i] - np.clip(tc - a["prev_of"][i], 0.0, a["caps"][i])
        cum_res += residual
        cumres_at_marg = np.where(marg_class == i, cum_res, cumres_at_marg)
        newly = ~found & (cum_res >= q)
        marg_rt = np.where(newly, a["price_rt_of"][i], marg_rt)
        found |= newly

    binding = a["flex_of"][marg_class] & (q >= cumres_at_marg)
    adj = np.where(binding, marg_rt - a["price_rt_of"][marg_class], 0.0)
    out = np.where(shortfall > 0, marg_da - marg_rt + adj, marg_da)
    out = np.where(t >= cap, 0.0, out)  # clamped region is flat
    return out
