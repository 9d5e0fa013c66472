"""Random-forest probes of prosodic targets from layer embeddings."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from sklearn.ensemble import RandomForestRegressor


class DegenerateTarget(ValueError):
    pass


@dataclass(frozen=True)
class LayerProbeResult:
    layer: int
    target_name: str
    mae_pct: float
    ci_low: float
    ci_high: float
    n: int = 0


def default_regressor(seed: int):
    return RandomForestRegressor(n_estimators=100, max_depth=None, random_state=seed, n_jobs=1)


def mae_pct(y_true: np.ndarray, y_pred: np.ndarray, target_range: float) -> float:
    return float(np.mean(np.abs(np.asarray(y_true) - np.asarray(y_pred))) / target_range * 100.0)


def probe_layer(embeddings: np.ndarray, targets: np.ndarray, seed: int = 0, *, layer: int = 0,
                target_name: str = "", n_bootstrap: int = 100, test_fraction: float = 0.2,
                regressor: Callable[[int], object] = default_regressor) -> LayerProbeResult:
    """Fit on a seeded 80% split, score MAE% on the rest.

    MAE% divides the test MAE by the target's max-min range over all
    ``targets``.  The 95% interval is the 2.5/97.5 percentile of MAE% over
    ``n_bootstrap`` resamples of the test predictions, widened if needed so
    it contains the point estimate.
    """
    X = np.asarray(embeddings, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if len(X) != len(y):
        raise ValueError("embeddings and targets differ in length")
    span = float(y.max() - y.min()) if len(y) else 0.0
    if span <= 0:
        raise DegenerateTarget(f"target {target_name!r} is constant")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(y))
    n_test = max(1, int(round(test_fraction * len(y))))
    test, train = order[:n_test], order[n_test:]
    model = regressor(seed)
    model.fit(X[train], y[train])
    pred = np.asarray(model.predict(X[test]), dtype=np.float64)
    err = np.abs(y[test] - pred)
    point = float(err.mean() / span * 100.0)
    boot = np.array([err[rng.integers(0, n_test, n_test)].mean() / span * 100.0
                     for _ in range(n_bootstrap)])
    lo, hi = np.percentile(boot, [2.5, 97.5]) if n_bootstrap else (point, point)
    return LayerProbeResult(layer, target_name, point, float(min(lo, point)), float(max(hi, point)), len(y))
