"""Out-of-sample scoring of reserve plans under inertia uncertainty.

Each test scenario's day-ahead buy is frozen, then stress-tested against
a per-scenario perturbation set: stratified quantile draws from the
conditional distribution of inertia, re-clearing only real time. That
yields a cost sample per scenario, summarized four ways across the test
window: mean cost at the recorded realization (MSOC), mean tail risk of
the perturbed costs (MCVaR), mean worst perturbed cost (MMaxSOC), and
forecast error (MAPE). Perturbation draws are seeded per scenario index,
so scoring is a pure function of the inputs and the seed.
"""

import math
from dataclasses import dataclass

import numpy as np

from .forecast import ForecastModel, QuantileModel, inverse_cdf, predict
from .market import FleetSpec, FrequencyParams, reserve_from_inertia, two_stage_cost
from .risk import var_cvar


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class EvalConfig:
    """Tail level for the risk summary, perturbation count, and seed."""

    beta_eval: float = 0.95
    k_size: int = 200
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.beta_eval) and 0.0 <= self.beta_eval < 1.0):
            raise EvalError(f"beta_eval must lie in [0, 1), got {self.beta_eval!r}")
        if self.k_size < 1:
            raise EvalError(f"k_size must be >= 1, got {self.k_size!r}")


@dataclass(frozen=True, eq=False)
class ScenarioScore:
    """One test scenario: its plan and its cost summary.

    prediction is the forecast inertia behind the plan, or None when a
    fixed plan was scored directly. soc is the cost at the recorded
    realization; the remaining fields summarize the perturbation sample.
    """

    prediction: float
    day_ahead: float
    soc: float
    soc_mean: float
    var: float
    cvar: float
    max_soc: float


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Test-window averages plus the per-scenario detail rows."""

    msoc: float
    mcvar: float
    mmaxsoc: float
    mape: float
    per_scenario: tuple


def _perturbation_probs(rng, k):
    # one draw per equal-probability bin covers the distribution evenly
    u = (np.arange(k) + rng.random(k)) / k
    return np.clip(u, 1e-12, 1.0 - 1e-12)


def evaluate_plans(day_ahead, test, fleet: FleetSpec, fp: FrequencyParams,
                   cfg: EvalConfig, qm: QuantileModel,
                   predictions=None) -> EvalReport:
    """Score one frozen day-ahead buy per test row; the shared engine.

    Real time is re-cleared against every perturbed realization, since
    real time by definition reacts to what happens. MAPE needs forecasts,
    so it is None when only plans are given.
    """
    if len(test) == 0:
        raise EvalError("test set is empty")
    t = np.asarray(day_ahead, dtype=float)
    if t.shape != (len(test),):
        raise EvalError(f"need one day-ahead total per test row, got {t.shape}")
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise EvalError("day-ahead totals must be finite and >= 0")

    soc = two_stage_cost(t, test.realized_req, fleet)
    rows = []
    for n in range(len(test)):
        rng = np.random.default_rng([cfg.seed, n])
        probs = _perturbation_probs(rng, cfg.k_size)
        h = inverse_cdf(qm, test.X[n], probs)
        req = reserve_from_inertia(np.atleast_1d(h), fp)
        costs = two_stage_cost(t[n], req, fleet)
        v, cv = var_cvar(costs, cfg.beta_eval)
        pred = None if predictions is None else float(predictions[n])
        rows.append(ScenarioScore(pred, float(t[n]), float(soc[n]),
                                  float(costs.mean()), v, cv,
                                  float(costs.max())))

    mape = None
    if predictions is not None:
        err = np.abs(np.asarray(predictions, dtype=float) - test.inertia)
        mape = float(np.mean(err / test.inertia) * 100.0)
    return EvalReport(float(soc.mean()),
                      float(np.mean([r.cvar for r in rows])),
                      float(np.mean([r.max_soc for r in rows])),
                      mape, tuple(rows))


def evaluate(model: ForecastModel, test, fleet: FleetSpec,
             fp: FrequencyParams, cfg: EvalConfig,
             qm: QuantileModel) -> EvalReport:
    """Score a point forecaster on every row of `test`.

    The forecast fixes the day-ahead buy through the reserve rule
    (clamped to fleet capacity); everything downstream is evaluate_plans.
    """
    preds = predict(model, test.X) if len(test) else np.empty(0)
    preds = np.atleast_1d(preds)
    t = np.minimum(reserve_from_inertia(preds, fp), fleet.total_capacity)
    return evaluate_plans(t, test, fleet, fp, cfg, qm, predictions=preds)


# ---------------------------------------------------------------------------
# cross-model comparison


METRICS = ("msoc", "mcvar", "mmaxsoc", "mape")


@dataclass(frozen=True, eq=False)
class Comparison:
    """Metric values per report plus all pairwise percentage gaps.

    gaps holds (metric, name_a, name_b, (a-b)/b*100) rows; the gap is
    None when either side is missing or the denominator is zero.
    """

    names: tuple
    values: dict
    gaps: tuple


def compare(reports) -> Comparison:
    """Compare named evaluation reports; `reports` maps name -> EvalReport."""
    names = tuple(reports)
    if len(names) < 2:
        raise EvalError("need at least two reports to compare")
    values = {m: tuple(getattr(reports[n], m) for n in names) for m in METRICS}
    gaps = []
    for m in METRICS:
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                a, b = values[m][i], values[m][j]
                g = None if a is None or b is None or b == 0 \
                    else (a - b) / b * 100.0
                gaps.append((m, names[i], names[j], g))
    return Comparison(names, values, tuple(gaps))


def format_comparison(comp: Comparison) -> str:
    """Aligned plain-text rendering of a comparison."""
    width = max(len(n) for n in comp.names + METRICS) + 2
    def cell(v):
        return "-".rjust(width) if v is None else f"{v:.4f}".rjust(width)

    lines = ["metric".ljust(width) + "".join(n.rjust(width) for n in comp.names)]
    for m in METRICS:
        lines.append(m.ljust(width) + "".join(cell(v) for v in comp.values[m]))
    lines.append("")
    lines.append("pairwise gaps, (a - b) / b * 100%")
    for m, a, b, g in comp.gaps:
        shown = "-" if g is None else f"{g:+.4f}%"
        lines.append(f"  {m}: {a} vs {b}: {shown}")
    return "\n".join(lines) + "\n"


def comparison_rows(comp: Comparison):
    """Flat CSV rows: header first, then one row per value and per gap."""
    rows = [("kind", "metric", "a", "b", "value")]
    for m in METRICS:
        for name, v in zip(comp.names, comp.values[m]):
            rows.append(("value", m, name, "", "" if v is None else repr(float(v))))
    for m, a, b, g in comp.gaps:
        rows.append(("gap", m, a, b, "" if g is None else repr(float(g))))
    return rows


def report_to_dict(rep: EvalReport, per_scenario: bool = True) -> dict:
    """JSON-ready view of a report; detail rows are optional."""
    doc = {"msoc": rep.msoc, "mcvar": rep.mcvar, "mmaxsoc": rep.mmaxsoc,
           "mape": rep.mape}
    if per_scenario:
        doc["per_scenario"] = [
            {"prediction": r.prediction, "day_ahead": r.day_ahead,
             "soc": r.soc, "soc_mean": r.soc_mean, "var": r.var,
             "cvar": r.cvar, "max_soc": r.max_soc}
            for r in rep.per_scenario]
    return doc
