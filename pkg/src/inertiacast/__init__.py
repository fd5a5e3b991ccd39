"""Decision-cost-aware inertia forecasting for reserve markets.

Train linear point forecasters of system inertia against the two-stage
reserve-market cost they cause (blended mean/CVaR), instead of squared
error. The trained forecast plus deterministic clearing matches
scenario-based stochastic and robust procurement baselines on the same
quantile model, at a small fraction of their per-instance runtime.

Layout: market clearing and frequency rules in market, synthetic data
and CSV IO in data, point/quantile fits in forecast, CVaR machinery in
risk, the cost-trained optimizer in train, stochastic/robust reference
solvers in baselines, test-window scoring in evaluate, and the
command-line harness in cli.
"""

from .baselines import (
    BaselineError,
    ScenarioSet,
    UncertaintySet,
    build_scenario_set,
    solve_ro,
    solve_sp,
    sp_forecast_equivalent,
    uncertainty_from_quantiles,
)
from .data import (
    DataError,
    Dataset,
    GeneratorConfig,
    generate_synthetic,
    load_csv,
    save_csv,
)
from .evaluate import (
    Comparison,
    EvalConfig,
    EvalError,
    EvalReport,
    compare,
    evaluate,
    evaluate_plans,
    format_comparison,
    report_to_dict,
)
from .forecast import (
    ForecastError,
    ForecastModel,
    QuantileFitConfig,
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
from .market import (
    FleetSpec,
    FrequencyParams,
    InfeasibleRequirement,
    MarketError,
    UnitClass,
    clear_day_ahead,
    clear_real_time,
    default_fleet,
    default_frequency_params,
    reserve_from_inertia,
    saturation_inertia,
    total_cost,
    two_stage_cost,
)
from .risk import (
    RiskConfig,
    RiskError,
    beta_max,
    cvar_subgradient,
    mean_cvar_objective,
    mean_cvar_weights,
    var_cvar,
)
from .train import (
    TrainConfig,
    TrainReport,
    TrainingError,
    raobf_loss,
    raobf_subgradient,
    train_raobf,
)

__version__ = "0.1.0"

__all__ = [
    "BaselineError",
    "Comparison",
    "DataError",
    "Dataset",
    "EvalConfig",
    "EvalError",
    "EvalReport",
    "FleetSpec",
    "ForecastError",
    "ForecastModel",
    "FrequencyParams",
    "GeneratorConfig",
    "InfeasibleRequirement",
    "MarketError",
    "QuantileFitConfig",
    "QuantileModel",
    "RiskConfig",
    "RiskError",
    "ScenarioSet",
    "TrainConfig",
    "TrainReport",
    "TrainingError",
    "UncertaintySet",
    "UnitClass",
    "beta_max",
    "build_scenario_set",
    "clear_day_ahead",
    "clear_real_time",
    "compare",
    "cvar_subgradient",
    "default_fleet",
    "default_frequency_params",
    "evaluate",
    "evaluate_plans",
    "fit_mse",
    "fit_quantile",
    "format_comparison",
    "generate_synthetic",
    "inverse_cdf",
    "load_csv",
    "load_model",
    "mean_cvar_objective",
    "mean_cvar_weights",
    "pinball_loss",
    "predict",
    "predict_quantiles",
    "raobf_loss",
    "raobf_subgradient",
    "report_to_dict",
    "reserve_from_inertia",
    "saturation_inertia",
    "save_csv",
    "save_model",
    "solve_ro",
    "solve_sp",
    "sp_forecast_equivalent",
    "total_cost",
    "train_raobf",
    "two_stage_cost",
    "uncertainty_from_quantiles",
    "var_cvar",
    "__version__",
]
