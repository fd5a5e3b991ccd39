"""Sample tail-risk measures over scenario costs.

CVaR at level beta is the mean of the worst (1-beta) fraction of costs.
Everything here works on the empirical distribution: VaR is the smallest
sample value that leaves at most (1-beta)*n scenarios strictly above it,
which is exactly the smallest minimizer (restricted to sample values) of
the shortfall-based variational form v + mean((c - v)+) / (1 - beta).
The subgradient weights make the chain rule through CVaR explicit.
"""

import math
from dataclasses import dataclass

import numpy as np


class RiskError(ValueError):
    pass


@dataclass(frozen=True)
class RiskConfig:
    """Blend weight alpha between mean and CVaR, tail level beta."""

    alpha: float = 0.0
    beta: float = 0.95

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and 0.0 <= self.alpha <= 1.0):
            raise RiskError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if not (math.isfinite(self.beta) and 0.0 <= self.beta < 1.0):
            raise RiskError(f"beta must lie in [0, 1), got {self.beta!r}")


def beta_max(n_scenarios: int) -> float:
    """Largest usable tail level: beyond it CVaR is just the sample max."""
    if n_scenarios < 1:
        raise RiskError("need at least one scenario")
    return 1.0 - 1.0 / n_scenarios


def _check_costs(costs) -> np.ndarray:
    c = np.asarray(costs, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise RiskError("costs must be a nonempty 1-D array")
    if not np.all(np.isfinite(c)):
        raise RiskError("costs must be finite")
    return c


def var_cvar(costs, beta: float):
    """(VaR, CVaR) of a cost sample at tail level beta in [0, 1)."""
    c = _check_costs(costs)
    if not (0.0 <= beta < 1.0):
        raise RiskError(f"beta must lie in [0, 1), got {beta!r}")
    cs = np.sort(c)
    n = cs.size
    # n - beta*n keeps integer budgets exact; (1-beta)*n would not
    budget = n - beta * n  # scenario mass allowed above VaR
    above = n - np.searchsorted(cs, cs, side="right")
    k = int(np.argmax(above <= budget + 1e-9))  # `above` is nonincreasing
    var = float(cs[k])
    cvar = var + float(np.sum(cs[cs > var] - var)) / budget
    return var, cvar


def cvar_subgradient(costs, beta: float) -> np.ndarray:
    """Weights w with dCVaR/dc_s = w_s; they are >= 0 and sum to 1.

    Scenarios strictly above VaR get 1 / ((1-beta) n); scenarios at VaR
    share whatever tail mass is left; everything below gets zero.
    """
    c = _check_costs(costs)
    var, _ = var_cvar(c, beta)
    n = c.size
    budget = n - beta * n
    w = np.zeros(n)
    above = c > var
    at = c == var
    w[above] = 1.0 / budget
    n_above = int(above.sum())
    leftover = budget - n_above
    if leftover > 0 and at.any():
        w[at] = leftover / (budget * int(at.sum()))
    return w


def mean_cvar_objective(costs, risk: RiskConfig) -> float:
    """(1 - alpha) * mean + alpha * CVaR_beta of the cost sample."""
    c = _check_costs(costs)
    _, cvar = var_cvar(c, risk.beta)
    return float((1.0 - risk.alpha) * c.mean() + risk.alpha * cvar)


def mean_cvar_weights(costs, risk: RiskConfig) -> np.ndarray:
    """Per-scenario weights of the blended objective; they sum to 1."""
    c = _check_costs(costs)
    w = risk.alpha * cvar_subgradient(c, risk.beta)
    w += (1.0 - risk.alpha) / c.size
    return w
