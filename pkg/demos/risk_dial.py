"""Turn the risk dial and watch mean cost trade against tail cost.

The training objective blends (1 - alpha) * mean with alpha * CVaR_beta
of the two-stage market cost. Sweeping alpha from 0 to 1 at two tail
levels shows the dial working: average spend drifts up, the sampled
worst case comes down, and forecast error grows because the forecaster
is deliberately biased low where misses are expensive.

Run: python3 demos/risk_dial.py  (about a minute)
"""

from inertiacast.data import generate_synthetic
from inertiacast.evaluate import EvalConfig, evaluate
from inertiacast.forecast import fit_quantile
from inertiacast.market import FrequencyParams, default_fleet
from inertiacast.risk import RiskConfig
from inertiacast.train import TrainConfig, train_raobf

fleet = default_fleet()
fp = FrequencyParams()

print("one synthetic year plus a test week...")
ds = generate_synthetic(17520 + 336, seed=11, n_test=336)
qm = fit_quantile(ds)
ecfg = EvalConfig(0.95, 200, 0)

for beta in (0.5, 0.9):
    print(f"\ntail level beta = {beta}")
    header = f"{'alpha':>6}{'MSOC':>12}{'MMaxSOC':>12}{'MAPE':>8}"
    print(header)
    print("-" * len(header))
    for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
        rep = train_raobf(ds, fleet, fp,
                          TrainConfig(risk=RiskConfig(alpha, beta)))
        r = evaluate(rep.model, ds.test(), fleet, fp, ecfg, qm)
        print(f"{alpha:>6.2f}{r.msoc:>12,.0f}{r.mmaxsoc:>12,.0f}"
              f"{r.mape:>8.2f}")

print("\nreading the columns: MSOC nondecreasing in alpha, MMaxSOC "
      "nonincreasing,\nMAPE nondecreasing; the dial buys tail protection "
      "with mean cost and\nstatistical accuracy.")
