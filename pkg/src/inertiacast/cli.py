"""Experiment runner binding the library modules into subcommands.

Subcommands: gen-data, train, eval, sweep, compare-sp, compare-ro.
Options come from flags, optionally preloaded from a key = value config
file given with --config; flags win over file values. Every result file
is deterministic given the same inputs and seeds: floats are written
with repr, JSON keys are sorted, and anything wall-clock dependent
(timestamps, durations) goes to a <output>.meta.json sidecar instead.

Exit codes: 0 success, 1 runtime or IO failure, 2 usage or config error.
"""

import argparse
import datetime
import hashlib
import json
import os
import sys
import time

import numpy as np

from .baselines import (BaselineError, build_scenario_set, solve_ro, solve_sp,
                        uncertainty_from_quantiles)
from .data import (DataError, GeneratorConfig, NOISE_KINDS, generate_synthetic,
                   load_csv, save_csv)
from .evaluate import EvalConfig, evaluate, evaluate_plans, report_to_dict
from .forecast import (ForecastError, ForecastModel, QuantileModel, fit_mse,
                       fit_quantile, load_model, predict, save_model)
from .market import (FleetSpec, FrequencyParams, MarketError, UnitClass,
                     default_fleet, default_frequency_params,
                     reserve_from_inertia)
from .risk import RiskConfig, RiskError, beta_max
from .train import TrainConfig, TrainingError, train_raobf


class ConfigError(ValueError):
    """Bad config file or bad option values; maps to exit code 2."""


# ---------------------------------------------------------------------------
# config file: one `key = value` per line, # comments, lists are comma split


def _as_int(text, where):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{where}: expected an integer, got {text!r}") from None


def _as_float(text, where):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{where}: expected a number, got {text!r}") from None


def _as_floats(text, where):
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise ConfigError(f"{where}: expected a comma separated list")
    return tuple(_as_float(s, where) for s in items)


def _as_ints(text, where):
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise ConfigError(f"{where}: expected a comma separated list")
    return tuple(_as_int(s, where) for s in items)


def _as_str(text, where):
    return text


def _as_bool(text, where):
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{where}: expected true/false, got {text!r}")


# every documented config key and its parser; flag names use the same
# words with dashes, e.g. alpha_grid <-> --alpha-grid
_FP_KEYS = ("dp_loss", "t_deliver", "df_nadir_max", "df_ss_max",
            "rocof_max", "damping", "demand")

_CONFIG_KEYS = {
    "data": _as_str, "out": _as_str, "model": _as_str,
    "quantile_model": _as_str, "report": _as_str, "fleet": _as_str,
    "n": _as_int, "n_test": _as_int, "seed": _as_int,
    "noise": _as_str, "noise_scale": _as_float, "n_features": _as_int,
    "method": _as_str, "alpha": _as_float, "beta": _as_float,
    "beta_max": _as_bool, "taus": _as_floats,
    "restarts": _as_int, "max_iters": _as_int, "step0": _as_float,
    "tol": _as_float,
    "beta_eval": _as_float, "k_size": _as_int, "eval_seed": _as_int,
    "per_scenario": _as_bool,
    "alpha_grid": _as_floats, "beta_grid": _as_floats, "plot": _as_str,
    "scenario_counts": _as_ints, "lam": _as_float, "sp_seed": _as_int,
    "lam_grid": _as_floats, "no_tail": _as_bool, "tail_out": _as_str,
    "tail_n": _as_int, "tail_n_test": _as_int, "tail_seed": _as_int,
    "tail_beta_grid": _as_floats,
    "dp_loss": _as_float, "t_deliver": _as_float, "df_nadir_max": _as_float,
    "df_ss_max": _as_float, "rocof_max": _as_float, "damping": _as_float,
    "demand": _as_float,
}

_TRAIN_KEYS = ("restarts", "max_iters", "step0", "tol", "seed")
_EVAL_KEYS = ("beta_eval", "k_size", "eval_seed")

# which config keys each subcommand consumes; the rest are ignored there
_COMMAND_KEYS = {
    "gen-data": ("out", "n", "n_test", "seed", "noise", "noise_scale",
                 "n_features") + _FP_KEYS,
    "train": ("data", "n_test", "fleet", "method", "out", "report", "alpha",
              "beta", "beta_max", "taus") + _TRAIN_KEYS + _FP_KEYS,
    "eval": ("data", "n_test", "fleet", "model", "quantile_model", "out",
             "per_scenario") + _EVAL_KEYS + _FP_KEYS,
    "sweep": ("data", "n_test", "fleet", "quantile_model", "out", "alpha_grid",
              "beta_grid", "plot") + _TRAIN_KEYS + _EVAL_KEYS + _FP_KEYS,
    "compare-sp": ("data", "n_test", "fleet", "quantile_model", "model", "out",
                   "scenario_counts", "lam",
                   "sp_seed") + _TRAIN_KEYS + _EVAL_KEYS + _FP_KEYS,
    "compare-ro": ("data", "n_test", "fleet", "quantile_model", "model", "out",
                   "lam_grid", "beta", "beta_max", "no_tail", "tail_out",
                   "tail_n", "tail_n_test", "tail_seed",
                   "tail_beta_grid") + _TRAIN_KEYS + _EVAL_KEYS + _FP_KEYS,
}


def load_config(path):
    """Parse a key = value file into typed option defaults."""
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}") from None
    cfg = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().replace("-", "_")
        val = val.strip()
        where = f"{path}:{lineno}"
        if not sep or not key or not val:
            raise ConfigError(f"{where}: expected 'key = value'")
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if key in cfg:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        cfg[key] = _CONFIG_KEYS[key](val, where)
    return cfg


# ---------------------------------------------------------------------------
# deterministic writers and the wall-clock sidecar


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(_fmt(c) for c in row) for row in rows]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _write_meta(out_path, command, started, t0, **extra):
    doc = {"command": command,
           "started_utc": started,
           "duration_s": time.perf_counter() - t0}
    doc.update(extra)
    _write_json(str(out_path) + ".meta.json", doc)


def _now_utc():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _config_hash(parts) -> str:
    blob = json.dumps(parts, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# shared option handling


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise ConfigError(f"missing required option --{name.replace('_', '-')} "
                              f"(or config key {name!r})")


def _frequency_params(args) -> FrequencyParams:
    fields = ("dp_loss", "t_deliver", "df_nadir_max", "df_ss_max",
              "rocof_max", "damping", "demand")
    overrides = {f: getattr(args, f) for f in fields if getattr(args, f) is not None}
    try:
        return FrequencyParams(**overrides) if overrides else default_frequency_params()
    except MarketError as e:
        raise ConfigError(str(e)) from None


def load_fleet(path) -> FleetSpec:
    """Read a fleet description: {penalty_price, classes: [unit class...]}."""
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
        classes = tuple(UnitClass(str(c["name"]), int(c["count"]),
                                  float(c["capacity_each"]), float(c["price_da"]),
                                  float(c["price_rt"]), bool(c["rt_flexible"]))
                        for c in doc["classes"])
        return FleetSpec(classes, float(doc.get("penalty_price", 3000.0)))
    except (KeyError, TypeError, ValueError, MarketError) as e:
        raise ConfigError(f"{path}: bad fleet description: {e}") from None


def _fleet(args) -> FleetSpec:
    return load_fleet(args.fleet) if args.fleet else default_fleet()


def _load_dataset(args, fp):
    _require(args, "data")
    return load_csv(args.data, params=fp, n_test=args.n_test)


def _eval_config(args) -> EvalConfig:
    try:
        return EvalConfig(beta_eval=args.beta_eval, k_size=args.k_size,
                          seed=args.eval_seed)
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from None


def _train_config(args, risk) -> TrainConfig:
    try:
        return TrainConfig(risk=risk, restarts=args.restarts,
                           max_iters=args.max_iters, step0=args.step0,
                           tol=args.tol, seed=args.seed)
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from None


def _risk(args, n_train) -> RiskConfig:
    beta = beta_max(n_train) if args.beta_max else args.beta
    try:
        return RiskConfig(alpha=args.alpha, beta=beta)
    except RiskError as e:
        raise ConfigError(str(e)) from None


def _quantile_model(args, data):
    if args.quantile_model:
        qm = load_model(args.quantile_model)
        if not isinstance(qm, QuantileModel):
            raise ConfigError(f"{args.quantile_model}: not a quantile model")
        return qm
    return fit_quantile(data)


def _point_model(path) -> ForecastModel:
    model = load_model(path)
    if not isinstance(model, ForecastModel):
        raise ConfigError(f"{path}: not a point model")
    return model


def _ro_plans(qm, test, lam, fleet, fp):
    """Per instance robust plans from the conditional quantile box."""
    plans = np.empty(len(test))
    for i in range(len(test)):
        uset = uncertainty_from_quantiles(qm, test.X[i], lam)
        plans[i], _ = solve_ro(uset, fleet, fp)
    return plans


def _gap(a, b):
    return (a - b) / b * 100.0


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_data(args) -> int:
    started, t0 = _now_utc(), time.perf_counter()
    _require(args, "out")
    if not 0 <= args.n_test < args.n:
        raise ConfigError(f"n_test must lie in [0, n), got {args.n_test}")
    try:
        gcfg = GeneratorConfig(noise_scale=args.noise_scale,
                               n_features=args.n_features,
                               noise_kind=args.noise)
    except DataError as e:
        raise ConfigError(str(e)) from None
    fp = _frequency_params(args)
    ds = generate_synthetic(args.n, args.seed, config=gcfg, params=fp,
                            n_test=args.n_test)
    save_csv(ds, args.out)
    print(f"wrote {args.out}: {len(ds)} scenarios "
          f"({len(ds.train())} train, {len(ds.test())} test)")
    print(f"inertia MW*s: min {ds.inertia.min():.1f} "
          f"mean {ds.inertia.mean():.1f} max {ds.inertia.max():.1f}")
    print(f"requirement MW: min {ds.realized_req.min():.1f} "
          f"mean {ds.realized_req.mean():.1f} max {ds.realized_req.max():.1f}")
    _write_meta(args.out, "gen-data", started, t0, seed=args.seed,
                noise=args.noise, sha256=_sha256(args.out))
    return 0


def cmd_train(args) -> int:
    started, t0 = _now_utc(), time.perf_counter()
    _require(args, "out")
    fp = _frequency_params(args)
    fleet = _fleet(args)
    ds = _load_dataset(args, fp)
    report = {"method": args.method, "data_sha256": _sha256(args.data),
              "n_train": len(ds.train())}

    if args.method == "mse":
        model = fit_mse(ds)
    elif args.method == "quantile":
        model = fit_quantile(ds, taus=args.taus) if args.taus else fit_quantile(ds)
    else:
        risk = _risk(args, len(ds.train()))
        rep = train_raobf(ds, fleet, fp, _train_config(args, risk))
        model = rep.model
        report.update(alpha=risk.alpha, beta=risk.beta,
                      beta_is_max=bool(args.beta_max),
                      objective=rep.objective, var=rep.var,
                      restart=rep.restart, iterations=rep.iterations,
                      seed=args.seed)
        print(f"raobf alpha={risk.alpha} beta={risk.beta:.6f}: "
              f"objective {rep.objective:.2f}, var {rep.var:.2f}, "
              f"restart {rep.restart}, {rep.iterations} iterations")

    save_model(model, args.out)
    print(f"wrote {args.out}")
    if args.report:
        _write_json(args.report, report)
        print(f"wrote {args.report}")
    _write_meta(args.out, "train", started, t0, method=args.method)
    return 0


def cmd_eval(args) -> int:
    started, t0 = _now_utc(), time.perf_counter()
    _require(args, "model", "out")
    fp = _frequency_params(args)
    fleet = _fleet(args)
    ds = _load_dataset(args, fp)
    model = _point_model(args.model)
    qm = _quantile_model(args, ds)
    rep = evaluate(model, ds.test(), fleet, fp, _eval_config(args), qm)
    _write_json(args.out, report_to_dict(rep, per_scenario=args.per_scenario))
    print(f"msoc {rep.msoc:.2f}  mcvar {rep.mcvar:.2f}  "
          f"mmaxsoc {rep.mmaxsoc:.2f}  mape {rep.mape:.4f}")
    print(f"wrote {args.out}")
    _write_meta(args.out, "eval", started, t0, n_test=len(ds.test()))
    return 0


def cmd_sweep(args) -> int:
    started, t0 = _now_utc(), time.perf_counter()
    _require(args, "out")
    if not args.alpha_grid or not args.beta_grid:
        raise ConfigError("alpha_grid and beta_grid must be non-empty")
    fp = _frequency_params(args)
    fleet = _fleet(args)
    ds = _load_dataset(args, fp)
    qm = _quantile_model(args, ds)
    ecfg = _eval_config(args)
    chash = _config_hash({
        "data_sha256": _sha256(args.data), "n_test": args.n_test,
        "alpha_grid": sorted(args.alpha_grid), "beta_grid": sorted(args.beta_grid),
        "restarts": args.restarts, "max_iters": args.max_iters,
        "step0": args.step0, "tol": args.tol, "seed": args.seed,
        "beta_eval": ecfg.beta_eval, "k_size": ecfg.k_size,
        "eval_seed": ecfg.seed})

    rows, cell_seconds = [], []
    test = ds.test()
    for beta in sorted(set(args.beta_grid)):
        for alpha in sorted(set(args.alpha_grid)):
            c0 = time.perf_counter()
            try:
                risk = RiskConfig(alpha=alpha, beta=beta)
            except RiskError as e:
                raise ConfigError(str(e)) from None
            rep = train_raobf(ds, fleet, fp, _train_config(args, risk))
            ev = evaluate(rep.model, test, fleet, fp, ecfg, qm)
            rows.append((beta, alpha, ev.msoc, ev.mcvar, ev.mmaxsoc, ev.mape,
                         chash))
            cell_seconds.append(time.perf_counter() - c0)
            print(f"beta={beta} alpha={alpha}: msoc {ev.msoc:.2f} "
                  f"mcvar {ev.mcvar:.2f} mmaxsoc {ev.mmaxsoc:.2f} "
                  f"mape {ev.mape:.4f}")
    _write_csv(args.out, ("beta", "alpha", "msoc", "mcvar", "mmaxsoc", "mape",
                          "config_hash"), rows)
    print(f"wrote {args.out}: {len(rows)} rows")
    if args.plot:
        _write_sweep_plot(args.plot, rows)
        print(f"wrote {args.plot}")
    _write_meta(args.out, "sweep", started, t0, cell_seconds=cell_seconds)
    return 0


def _write_sweep_plot(path, rows):
    """Sweep curves as a deterministic SVG: one line per beta, per metric."""
    try:
        import matplotlib
    except ImportError:
        raise ConfigError("--plot needs matplotlib "
                          "(pip install 'inertiacast[plots]')") from None
    matplotlib.use("Agg")
    # fixed hash salt and no date metadata keep reruns byte-identical
    matplotlib.rcParams["svg.hashsalt"] = "inertiacast"
    import matplotlib.pyplot as plt

    betas = sorted({r[0] for r in rows})
    fig, axes = plt.subplots(1, 3, figsize=(12.0, 3.6))
    panels = (("mean cost", 2), ("sampled worst case", 4),
              ("forecast error %", 5))
    for ax, (label, col) in zip(axes, panels):
        for beta in betas:
            pts = sorted((r[1], r[col]) for r in rows if r[0] == beta)
            ax.plot([p[0] for p in pts], [p[1] for p in pts],
                    marker="o", label=f"beta={beta:g}")
        ax.set_xlabel("alpha")
        ax.set_title(label)
        ax.grid(True, alpha=0.3)
    axes[0].legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_compare_sp(args) -> int:
    started, t0 = _now_utc(), time.perf_counter()
    _require(args, "out")
    if not args.scenario_counts or any(c < 1 for c in args.scenario_counts):
        raise ConfigError("scenario_counts must be positive")
    if not 0.0 < args.lam < 1.0:
        raise ConfigError(f"lam must lie in (0, 1), got {args.lam}")
    fp = _frequency_params(args)
    fleet = _fleet(args)
    ds = _load_dataset(args, fp)
    qm = _quantile_model(args, ds)
    ecfg = _eval_config(args)
    test = ds.test()
    if len(test) == 0:
        raise ConfigError("the dataset has no test rows; pass --n-test")

    if args.model:
        model = _point_model(args.model)
    else:
        # alpha = 0 is the mean-cost forecaster the SP baseline is matched to
        risk = RiskConfig(alpha=0.0, beta=0.95)
        model = train_raobf(ds, fleet, fp, _train_config(args, risk)).model
    r_rb = evaluate(model, test, fleet, fp, ecfg, qm)

    # (a) forecaster inference plus deterministic clearing, per instance
    cap = fleet.total_capacity
    a0 = time.perf_counter()
    for i in range(len(test)):
        h = predict(model, test.X[i])
        min(reserve_from_inertia(h, fp), cap)
    raobf_s = (time.perf_counter() - a0) / len(test)

    rows, sp_seconds = [], {}
    for n_scen in sorted(set(args.scenario_counts)):
        b0 = time.perf_counter()
        plans = np.empty(len(test))
        for i in range(len(test)):
            scen = build_scenario_set(qm, test.X[i], n_scen, args.lam,
                                      args.sp_seed + i, fp)
            plans[i], _ = solve_sp(scen, fleet)
        sp_seconds[n_scen] = (time.perf_counter() - b0) / len(test)
        r_sp = evaluate_plans(plans, test, fleet, fp, ecfg, qm)
        rows.append((n_scen, r_sp.msoc, r_sp.mcvar, r_sp.mmaxsoc,
                     r_rb.msoc, r_rb.mcvar, r_rb.mmaxsoc,
                     _gap(r_rb.msoc, r_sp.msoc), _gap(r_rb.mcvar, r_sp.mcvar),
                     _gap(r_rb.mmaxsoc, r_sp.mmaxsoc)))
        print(f"n_scen={n_scen}: sp msoc {r_sp.msoc:.2f}, "
              f"msoc gap {rows[-1][7]:+.3f}%, "
              f"sp {sp_seconds[n_scen] * 1e3:.2f} ms/instance")
    _write_csv(args.out,
               ("n_scen", "msoc_sp", "mcvar_sp", "mmaxsoc_sp", "msoc_raobf",
                "mcvar_raobf", "mmaxsoc_raobf", "msoc_gap_pct",
                "mcvar_gap_pct", "mmaxsoc_gap_pct"), rows)
    largest = max(sp_seconds)
    speedup = sp_seconds[largest] / raobf_s if raobf_s > 0 else float("inf")
    print(f"wrote {args.out}: {len(rows)} rows")
    print(f"raobf {raobf_s * 1e6:.1f} us/instance; "
          f"sp({largest}) {sp_seconds[largest] * 1e3:.2f} ms/instance; "
          f"speedup {speedup:.0f}x")
    _write_meta(args.out, "compare-sp", started, t0,
                raobf_seconds_per_instance=raobf_s,
                sp_seconds_per_instance={str(k): v for k, v in sp_seconds.items()},
                speedup_at_largest_count=speedup)
    return 0


def cmd_compare_ro(args) -> int:
    started, t0 = _now_utc(), time.perf_counter()
    _require(args, "out")
    if not args.lam_grid or any(not 0.0 < g < 1.0 for g in args.lam_grid):
        raise ConfigError("lam_grid values must lie in (0, 1)")
    fp = _frequency_params(args)
    fleet = _fleet(args)
    ds = _load_dataset(args, fp)
    qm = _quantile_model(args, ds)
    ecfg = _eval_config(args)
    test = ds.test()
    if len(test) == 0:
        raise ConfigError("the dataset has no test rows; pass --n-test")

    # beta defaults to the finite-sample stand-in for 0.9999: 1 - 1/n
    use_max = args.beta_max or args.beta is None
    beta = beta_max(len(ds.train())) if use_max else args.beta
    if args.model:
        model = _point_model(args.model)
    else:
        risk = RiskConfig(alpha=1.0, beta=beta)
        model = train_raobf(ds, fleet, fp, _train_config(args, risk)).model
    r_rb = evaluate(model, test, fleet, fp, ecfg, qm)

    rows = []
    for lam in sorted(set(args.lam_grid)):
        plans = _ro_plans(qm, test, lam, fleet, fp)
        r_ro = evaluate_plans(plans, test, fleet, fp, ecfg, qm)
        rows.append((lam, beta, use_max, r_ro.msoc, r_ro.mcvar, r_ro.mmaxsoc,
                     r_rb.msoc, r_rb.mcvar, r_rb.mmaxsoc,
                     _gap(r_rb.msoc, r_ro.msoc), _gap(r_rb.mcvar, r_ro.mcvar),
                     _gap(r_rb.mmaxsoc, r_ro.mmaxsoc)))
        print(f"lam={lam}: ro msoc {r_ro.msoc:.2f}, "
              f"msoc gap {rows[-1][9]:+.3f}%, mmaxsoc gap {rows[-1][11]:+.3f}%")
    _write_csv(args.out,
               ("lam", "beta", "beta_is_max", "msoc_ro", "mcvar_ro",
                "mmaxsoc_ro", "msoc_raobf", "mcvar_raobf", "mmaxsoc_raobf",
                "msoc_gap_pct", "mcvar_gap_pct", "mmaxsoc_gap_pct"), rows)
    print(f"wrote {args.out}: {len(rows)} rows")

    extra = {}
    if not args.no_tail:
        tail_out = args.tail_out
        if tail_out is None:
            stem, ext = os.path.splitext(args.out)
            tail_out = stem + "_tail" + (ext or ".csv")
        extra["tail_out"] = tail_out
        _tail_effect(args, fleet, fp, ecfg, tail_out)
    _write_meta(args.out, "compare-ro", started, t0, **extra)
    return 0


def _tail_effect(args, fleet, fp, ecfg, tail_out):
    """Gap-vs-beta curves on a thin-tailed and a fat-tailed noise config."""
    if not args.tail_beta_grid or any(not 0.0 <= b < 1.0 for b in args.tail_beta_grid):
        raise ConfigError("tail_beta_grid values must lie in [0, 1)")
    if not 0 < args.tail_n_test < args.tail_n:
        raise ConfigError("tail_n_test must lie in (0, tail_n)")
    rows = []
    for case, kind in (("low-tail", "uniform"), ("high-tail", "heavy")):
        dsk = generate_synthetic(args.tail_n, args.tail_seed,
                                 config=GeneratorConfig(noise_kind=kind),
                                 params=fp, n_test=args.tail_n_test)
        qmk = fit_quantile(dsk)
        test = dsk.test()
        plans = _ro_plans(qmk, test, 0.9999, fleet, fp)
        r_ro = evaluate_plans(plans, test, fleet, fp, ecfg, qmk)
        for beta in sorted(set(args.tail_beta_grid)):
            risk = RiskConfig(alpha=1.0, beta=beta)
            rep = train_raobf(dsk, fleet, fp, _train_config(args, risk))
            r_rb = evaluate(rep.model, test, fleet, fp, ecfg, qmk)
            rows.append((case, kind, beta, r_rb.mmaxsoc, r_ro.mmaxsoc,
                         _gap(r_rb.mmaxsoc, r_ro.mmaxsoc)))
            print(f"{case} beta={beta}: mmaxsoc gap {rows[-1][5]:+.3f}%")
    _write_csv(tail_out, ("case", "noise_kind", "beta", "mmaxsoc_raobf",
                          "mmaxsoc_ro", "mmaxsoc_gap_pct"), rows)
    print(f"wrote {tail_out}: {len(rows)} rows")


# ---------------------------------------------------------------------------
# parser assembly


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _float_list(text):
    try:
        return _as_floats(text, "argument")
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e))


def _int_list(text):
    try:
        return _as_ints(text, "argument")
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e))


def _add_fp_options(p):
    g = p.add_argument_group("frequency parameters (defaults: GB-like system)")
    for name in ("dp-loss", "t-deliver", "df-nadir-max", "df-ss-max",
                 "rocof-max", "damping", "demand"):
        g.add_argument(f"--{name}", type=float, default=None)


def _add_data_options(p):
    p.add_argument("--data", help="scenario CSV produced by gen-data")
    p.add_argument("--n-test", type=int, default=336,
                   help="last rows held out as the test week (default 336)")
    p.add_argument("--fleet", help="fleet description JSON (default built in)")


def _add_train_options(p):
    g = p.add_argument_group("training")
    g.add_argument("--restarts", type=int, default=4)
    g.add_argument("--max-iters", type=int, default=400)
    g.add_argument("--step0", type=float, default=None)
    g.add_argument("--tol", type=float, default=1e-7)
    g.add_argument("--seed", type=int, default=0, help="multi-start seed")


def _add_eval_options(p):
    g = p.add_argument_group("evaluation")
    g.add_argument("--beta-eval", type=float, default=0.95)
    g.add_argument("--k-size", type=int, default=200)
    g.add_argument("--eval-seed", type=int, default=0)


def build_parser():
    """Return the argument parser and the subparser-by-command map."""
    parser = argparse.ArgumentParser(
        prog="inertiacast",
        description="Decision-cost-aware inertia forecasting experiments.")
    parser.add_argument("--config", help="key = value defaults file; flags win")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {}

    p = commands["gen-data"] = sub.add_parser(
        "gen-data", help="write a synthetic scenario CSV")
    p.add_argument("--out")
    p.add_argument("--n", type=_positive_int, default=35376,
                   help="scenario count (default 2 years + 1 week half-hourly)")
    p.add_argument("--n-test", type=int, default=336)
    p.add_argument("--seed", type=int, default=11)
    p.add_argument("--noise", choices=NOISE_KINDS, default="gaussian")
    p.add_argument("--noise-scale", type=float, default=0.08)
    p.add_argument("--n-features", type=int, default=11)
    _add_fp_options(p)
    p.set_defaults(func=cmd_gen_data)

    p = commands["train"] = sub.add_parser(
        "train", help="fit a forecaster and save it as JSON")
    _add_data_options(p)
    p.add_argument("--method", choices=("mse", "quantile", "raobf"),
                   default="raobf")
    p.add_argument("--out", help="model JSON path")
    p.add_argument("--report", help="optional deterministic report JSON")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.95)
    p.add_argument("--beta-max", action="store_true",
                   help="use beta = 1 - 1/n_train instead of --beta")
    p.add_argument("--taus", type=_float_list, default=None,
                   help="quantile levels for --method quantile")
    _add_train_options(p)
    _add_fp_options(p)
    p.set_defaults(func=cmd_train)

    p = commands["eval"] = sub.add_parser(
        "eval", help="score a saved model on the test split")
    _add_data_options(p)
    p.add_argument("--model", help="point model JSON")
    p.add_argument("--quantile-model",
                   help="quantile model JSON (default: fit on the train split)")
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--per-scenario", action="store_true",
                   help="include per scenario detail rows in the report")
    _add_eval_options(p)
    _add_fp_options(p)
    p.set_defaults(func=cmd_eval)

    p = commands["sweep"] = sub.add_parser(
        "sweep", help="train and score across an alpha x beta grid")
    _add_data_options(p)
    p.add_argument("--quantile-model")
    p.add_argument("--out", help="sweep CSV path")
    p.add_argument("--alpha-grid", type=_float_list,
                   default=(0.0, 0.25, 0.5, 0.75, 1.0))
    p.add_argument("--beta-grid", type=_float_list, default=(0.5, 0.9))
    p.add_argument("--plot", help="optional SVG of the sweep curves")
    _add_train_options(p)
    _add_eval_options(p)
    _add_fp_options(p)
    p.set_defaults(func=cmd_sweep)

    p = commands["compare-sp"] = sub.add_parser(
        "compare-sp", help="forecast-then-stochastic-program baseline")
    _add_data_options(p)
    p.add_argument("--quantile-model")
    p.add_argument("--model", help="reuse a trained point model JSON")
    p.add_argument("--out", help="comparison CSV path")
    p.add_argument("--scenario-counts", type=_int_list,
                   default=(5, 10, 20, 40, 100))
    p.add_argument("--lam", type=float, default=0.95,
                   help="prediction interval confidence for scenario draws")
    p.add_argument("--sp-seed", type=int, default=1000,
                   help="base seed; instance i draws with sp_seed + i")
    _add_train_options(p)
    _add_eval_options(p)
    _add_fp_options(p)
    p.set_defaults(func=cmd_compare_sp)

    p = commands["compare-ro"] = sub.add_parser(
        "compare-ro", help="forecast-then-robust baseline plus tail effect")
    _add_data_options(p)
    p.add_argument("--quantile-model")
    p.add_argument("--model", help="reuse a trained point model JSON")
    p.add_argument("--out", help="comparison CSV path")
    p.add_argument("--lam-grid", type=_float_list,
                   default=(0.7, 0.9, 0.99, 0.999, 0.9999))
    p.add_argument("--beta", type=float, default=None,
                   help="RAOBF beta (default: 1 - 1/n_train, recorded as such)")
    p.add_argument("--beta-max", action="store_true",
                   help="force beta = 1 - 1/n_train")
    p.add_argument("--no-tail", action="store_true",
                   help="skip the two-dataset tail effect experiment")
    p.add_argument("--tail-out", help="tail effect CSV (default <out>_tail.csv)")
    p.add_argument("--tail-n", type=_positive_int, default=9072)
    p.add_argument("--tail-n-test", type=int, default=336)
    p.add_argument("--tail-seed", type=int, default=11)
    p.add_argument("--tail-beta-grid", type=_float_list, default=(0.5, 0.7, 0.9))
    _add_train_options(p)
    _add_eval_options(p)
    _add_fp_options(p)
    p.set_defaults(func=cmd_compare_ro)

    return parser, commands


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, commands = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        if known.config:
            file_cfg = load_config(known.config)
            # config values become subcommand defaults, so explicit flags win
            for name, sp in commands.items():
                sp.set_defaults(**{k: v for k, v in file_cfg.items()
                                   if k in _COMMAND_KEYS[name]})
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, DataError, ForecastError,
            MarketError, RiskError, TrainingError, BaselineError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
