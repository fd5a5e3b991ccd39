"""Synthetic half-hourly system snapshots and their CSV round-trip.

Inertia is tied to the dispatch picture: it rises with load and
synchronous thermal output and falls as converter-connected wind, solar
and imports displace synchronous machines. The generator builds
plausible feature trajectories, maps a synchronous-generation proxy
affinely into the configured inertia band, and adds heteroscedastic
noise whose spread grows with the renewable share. The realized reserve
requirement is always derived from true inertia via the nadir rule, so
data and market stay consistent by construction.
"""

import csv
import datetime
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .market import FrequencyParams, default_frequency_params, reserve_from_inertia


class DataError(ValueError):
    pass


FEATURE_POOL = (
    "load", "coal", "solar", "wind_onshore", "wind_offshore",
    "ic_french", "ic_dutch", "ic_irish", "ic_eastwest",
    "weekday", "temperature",
)

NOISE_KINDS = ("gaussian", "uniform", "heavy")


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs of the synthetic scenario generator.

    noise_kind picks the shape of the inertia noise: gaussian, uniform
    (bounded, thin-tailed) or heavy (gaussian scale mixture, fat-tailed).
    n_features takes the first n names from FEATURE_POOL.
    """

    inertia_min: float = 2000.0
    inertia_max: float = 10000.0
    noise_scale: float = 0.08
    n_features: int = 11
    noise_kind: str = "gaussian"

    def __post_init__(self):
        if not (math.isfinite(self.inertia_min) and self.inertia_min > 0):
            raise DataError(f"inertia_min must be > 0, got {self.inertia_min!r}")
        if not (math.isfinite(self.inertia_max) and self.inertia_max > self.inertia_min):
            raise DataError("inertia_max must exceed inertia_min")
        if not (math.isfinite(self.noise_scale) and self.noise_scale >= 0):
            raise DataError(f"noise_scale must be >= 0, got {self.noise_scale!r}")
        if not (1 <= self.n_features <= len(FEATURE_POOL)):
            raise DataError(f"n_features must lie in [1, {len(FEATURE_POOL)}]")
        if self.noise_kind not in NOISE_KINDS:
            raise DataError(f"noise_kind must be one of {NOISE_KINDS}")


@dataclass(frozen=True, eq=False)
class Scenario:
    """One half-hour snapshot; features carry a leading constant 1."""

    timestamp: str
    features: np.ndarray
    inertia_true: float
    realized_req: float


@dataclass(eq=False)
class Dataset:
    """Scenario table with a train/test split tag per row.

    X has one row per scenario and a leading all-ones column named
    'const'; inertia is MW*s, realized_req is MW.
    """

    feature_names: tuple
    X: np.ndarray
    inertia: np.ndarray
    realized_req: np.ndarray
    timestamps: tuple
    split: np.ndarray = field(default=None)

    def __post_init__(self):
        n, k = self.X.shape
        if self.split is None:
            self.split = np.full(n, "train", dtype="<U5")
        if len(self.feature_names) != k or self.feature_names[0] != "const":
            raise DataError("feature_names must start with 'const' and match X")
        if not (self.inertia.shape == self.realized_req.shape == (n,)
                and len(self.timestamps) == n and self.split.shape == (n,)):
            raise DataError("column lengths disagree")
        if not np.all(np.isfinite(self.X)):
            raise DataError("features must be finite")
        if np.any(self.inertia <= 0) or not np.all(np.isfinite(self.inertia)):
            raise DataError("inertia must be positive and finite")
        if np.any(self.realized_req < 0) or not np.all(np.isfinite(self.realized_req)):
            raise DataError("realized_req must be >= 0 and finite")

    def __len__(self):
        return self.X.shape[0]

    def __getitem__(self, i) -> Scenario:
        return Scenario(self.timestamps[i], self.X[i], float(self.inertia[i]),
                        float(self.realized_req[i]))

    def _subset(self, mask) -> "Dataset":
        return Dataset(self.feature_names, self.X[mask], self.inertia[mask],
                       self.realized_req[mask],
                       tuple(t for t, m in zip(self.timestamps, mask) if m),
                       self.split[mask])

    def train(self) -> "Dataset":
        return self._subset(self.split == "train")

    def test(self) -> "Dataset":
        return self._subset(self.split == "test")

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.feature_names == other.feature_names
                and self.timestamps == other.timestamps
                and np.array_equal(self.X, other.X)
                and np.array_equal(self.inertia, other.inertia)
                and np.array_equal(self.realized_req, other.realized_req)
                and np.array_equal(self.split, other.split))


def _ar1(rng, n, phi, sigma=1.0):
    """Stationary-ish AR(1) driven by unit normals."""
    e = sigma * rng.standard_normal(n)
    return lfilter([1.0], [1.0, -phi], e)


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def _noise(rng, n, kind):
    """Unit-variance noise draws; draw count is independent of `kind`."""
    core = rng.standard_normal(n)
    tail = rng.standard_normal(n)
    pick = rng.random(n)
    if kind == "gaussian":
        return core
    if kind == "uniform":
        # bounded support, variance 1
        return math.sqrt(3.0) * (2.0 * pick - 1.0)
    # heavy: gaussian scale mixture, ~5% of draws from a 3x component
    s = math.sqrt((1.0 - 0.05 * 9.0) / 0.95)
    return np.where(pick < 0.05, 3.0 * tail, s * core)


def generate_synthetic(n_scenarios: int, seed: int, config: GeneratorConfig = None,
                       params: FrequencyParams = None, n_test: int = 0) -> Dataset:
    """Simulate n_scenarios half-hours; the last n_test rows are tagged test."""
    cfg = config or GeneratorConfig()
    fp = params or default_frequency_params()
    if n_scenarios < 1:
        raise DataError("n_scenarios must be >= 1")
    if not (0 <= n_test < n_scenarios):
        raise DataError("n_test must lie in [0, n_scenarios)")
    n = n_scenarios
    rng = np.random.default_rng(seed)

    i = np.arange(n)
    hod = (i % 48) / 48.0
    day = i // 48
    weekday = ((day % 7) < 5).astype(float)
    season = np.cos(2.0 * np.pi * ((day % 365) - 15) / 365.0)  # +1 mid-winter
    diurnal = -np.cos(2.0 * np.pi * hod)  # trough overnight, peak midday

    load = 27000 + 4500 * season + 5500 * diurnal + 900 * _ar1(rng, n, 0.95)
    coal = np.maximum(600 + 500 * season + 300 * _ar1(rng, n, 0.9), 0.0)
    sun = np.maximum(np.sin(np.pi * (hod * 24 - 6) / 12.0), 0.0)
    sun[(hod < 6 / 24) | (hod > 18 / 24)] = 0.0
    cloud = np.clip(0.7 + 0.12 * _ar1(rng, n, 0.8), 0.05, 1.0)
    solar = 4200 * sun * (1.0 - 0.55 * season) * cloud
    onshore = 6500 * _sigmoid(0.9 * _ar1(rng, n, 0.97) + 0.3 * season)
    offshore = 9000 * _sigmoid(0.9 * _ar1(rng, n, 0.96) + 0.4 * season + 0.2)
    french = 2000 * np.tanh(0.8 * _ar1(rng, n, 0.9) + 0.3)
    dutch = 1000 * np.tanh(0.8 * _ar1(rng, n, 0.9) + 0.2)
    irish = 500 * np.tanh(0.8 * _ar1(rng, n, 0.9) + 0.1)
    eastwest = 500 * np.tanh(0.8 * _ar1(rng, n, 0.9) + 0.1)
    temperature = 11 - 7.5 * season + 2.5 * diurnal * 0.4 + 1.8 * _ar1(rng, n, 0.9)

    columns = {
        "load": load, "coal": coal, "solar": solar,
        "wind_onshore": onshore, "wind_offshore": offshore,
        "ic_french": french, "ic_dutch": dutch,
        "ic_irish": irish, "ic_eastwest": eastwest,
        "weekday": weekday, "temperature": temperature,
    }

    # synchronous-generation proxy -> inertia band, robust affine map;
    # interior margins keep the conditional mean away from the band edges
    # so the linear relationship is not kinked by clipping
    proxy = load + coal - (solar + onshore + offshore) \
        - (french + dutch + irish + eastwest)
    lo, hi = np.quantile(proxy, [0.002, 0.998])
    span = cfg.inertia_max - cfg.inertia_min
    mu = cfg.inertia_min + 0.10 * span + (proxy - lo) / (hi - lo) * 0.80 * span
    mu = np.clip(mu, cfg.inertia_min + 0.05 * span, cfg.inertia_max - 0.05 * span)
    share = np.clip((solar + onshore + offshore) / load, 0.0, 1.0)
    sigma = cfg.noise_scale * mu * (0.25 + share)
    z = _noise(rng, n, cfg.noise_kind)
    inertia = np.clip(mu + sigma * z, cfg.inertia_min, cfg.inertia_max)
    realized = reserve_from_inertia(inertia, fp)

    names = ("const",) + FEATURE_POOL[:cfg.n_features]
    X = np.column_stack([np.ones(n)] + [columns[f] for f in names[1:]])

    t0 = datetime.datetime(2028, 1, 1)
    stamps = tuple((t0 + datetime.timedelta(minutes=30 * int(k))).isoformat()
                   for k in i)
    split = np.full(n, "train", dtype="<U5")
    if n_test:
        split[n - n_test:] = "test"
    return Dataset(names, X, inertia, np.asarray(realized), stamps, split)


# ---------------------------------------------------------------------------
# CSV interchange: timestamp, <features...>, inertia_true[, realized_req]


def save_csv(data: Dataset, path) -> None:
    """Write the scenario table; floats use repr so reloads are exact."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", *data.feature_names[1:], "inertia_true",
                    "realized_req"])
        for s in range(len(data)):
            row = [data.timestamps[s]]
            row += [repr(float(v)) for v in data.X[s, 1:]]
            row += [repr(float(data.inertia[s])), repr(float(data.realized_req[s]))]
            w.writerow(row)


def load_csv(path, params: FrequencyParams = None, n_test: int = 0) -> Dataset:
    """Read a scenario table; realized_req is derived when the column is absent."""
    fp = params or default_frequency_params()
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = rows[0]
    if len(header) < 2 or header[0] != "timestamp":
        raise DataError(f"{path}: first column must be 'timestamp'")
    has_req = header[-1] == "realized_req"
    h_col = -2 if has_req else -1
    if header[h_col] != "inertia_true":
        raise DataError(f"{path}: expected an 'inertia_true' column")
    feat = header[1:h_col]
    width = len(header)

    stamps, feats, inertia, req = [], [], [], []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise DataError(f"{path}: row {r} has {len(row)} fields, expected {width}")
        stamps.append(row[0])
        vals = []
        for name, cell in zip(header[1:], row[1:]):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {r}, column {name}: "
                                f"not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise DataError(f"{path}: row {r}, column {name}: non-finite value")
            vals.append(v)
        h = vals[len(feat)]
        if h <= 0:
            raise DataError(f"{path}: row {r}, column inertia_true: must be > 0")
        feats.append(vals[:len(feat)])
        inertia.append(h)
        if has_req:
            if vals[-1] < 0:
                raise DataError(f"{path}: row {r}, column realized_req: must be >= 0")
            req.append(vals[-1])
    n = len(stamps)
    if n == 0:
        raise DataError(f"{path}: no data rows")
    if not (0 <= n_test < n):
        raise DataError(f"n_test must lie in [0, {n})")
    inertia = np.array(inertia)
    realized = np.array(req) if has_req else np.asarray(
        reserve_from_inertia(inertia, fp))
    X = np.column_stack([np.ones(n), np.array(feats)]) if feat else np.ones((n, 1))
    split = np.full(n, "train", dtype="<U5")
    if n_test:
        split[n - n_test:] = "test"
    return Dataset(("const", *feat), X, inertia, realized, tuple(stamps), split)
