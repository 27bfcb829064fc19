"""Stacked ensemble over disjoint few-shot partitions.

Level-0 models are boosted-tree regressors, each trained on its own
disjoint shot set with its own feature subset and optional winsorized
target, so diversity comes from the sample space as much as from the model
space. Their predictions on the leftover (meta) rows feed a small MLP
blender, and the blended score is discretized into sell/hold/buy actions by
thresholds calibrated to a target action distribution.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .booster import Model, predict, train
from .dataset import CATEGORICAL, Dataset, bin_features
from .errors import ValidationError
from .fsl import fsl_preset
from .mlp import MLP, train_mlp
from .params import Params

ACTIONS = ("sell", "hold", "buy")


def partition_shots(n: int, k_per_model: int, m_models: int, seed: int
                    ) -> tuple[list[np.ndarray], np.ndarray]:
    """Disjoint uniform-random index sets of size k, plus the leftover pool."""
    if k_per_model < 1 or m_models < 1:
        raise ValidationError("k_per_model and m_models must be >= 1")
    if m_models * k_per_model > n:
        raise ValidationError(
            f"partition capacity exceeded: {m_models} models x {k_per_model} shots > {n} rows"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    parts = [np.sort(perm[i * k_per_model:(i + 1) * k_per_model]).astype(np.intp)
             for i in range(m_models)]
    leftover = np.sort(perm[m_models * k_per_model:]).astype(np.intp)
    return parts, leftover


def _quantile(x: np.ndarray, q: float) -> float:
    # linear interpolation between closest ranks
    return float(np.quantile(x, q))


def winsorize(y, lo_q: float, hi_q: float) -> np.ndarray:
    """Clip to the empirical [lo_q, hi_q] quantiles (linear interpolation)."""
    if not 0.0 <= lo_q < hi_q <= 1.0:
        raise ValidationError("quantiles must satisfy 0 <= lo_q < hi_q <= 1")
    y = np.asarray(y, dtype=np.float64)
    return np.clip(y, _quantile(y, lo_q), _quantile(y, hi_q))


@dataclass(frozen=True)
class Level0Config:
    """One base model: its shots, feature subset, target transform, params."""

    name: str
    feature_set: tuple[int, ...]
    params: Params
    shot_indices: np.ndarray
    winsor_quantiles: tuple[float, float] | None = None


@dataclass
class Level0Fit:
    config: Level0Config
    model: Model


@dataclass
class Level0Result:
    fits: list[Level0Fit]
    meta_features: np.ndarray
    meta_indices: np.ndarray


def _check_disjoint(configs: Sequence[Level0Config]) -> None:
    seen: dict[int, str] = {}
    for cfg in configs:
        for idx in cfg.shot_indices:
            idx = int(idx)
            if idx in seen:
                raise ValidationError(
                    f"shot sets overlap: row {idx} in both {seen[idx]!r} and {cfg.name!r}"
                )
            seen[idx] = cfg.name


def train_level0(ds: Dataset, configs: Sequence[Level0Config]) -> Level0Result:
    """Train every config on its own shots; predict all of them on the meta pool.

    Level-0 models are regressors: the objective is forced to squared error.
    The meta pool is every row not claimed by any shot set and must be
    non-empty. ``meta_features`` columns follow config order.
    """
    if not configs:
        raise ValidationError("at least one level-0 config is required")
    if ds.target is None:
        raise ValidationError("level-0 training requires a target column")
    _check_disjoint(configs)
    mask = np.ones(ds.n_rows, dtype=bool)
    for cfg in configs:
        mask[np.asarray(cfg.shot_indices, dtype=np.intp)] = False
    meta_indices = np.flatnonzero(mask).astype(np.intp)
    if meta_indices.size == 0:
        raise ValidationError("meta pool is empty: shot sets cover every row")

    fits: list[Level0Fit] = []
    meta_cols = []
    for cfg in configs:
        try:
            sub = ds.take(cfg.shot_indices).select_features(cfg.feature_set)
            if cfg.winsor_quantiles is not None:
                lo, hi = cfg.winsor_quantiles
                sub.target = winsorize(sub.target, lo, hi)
            params = dataclasses.replace(cfg.params, objective="mse")
            bds = bin_features(sub, params.max_bin, params.min_data_in_bin)
            model = train(bds, params)
            meta_cols.append(predict(model, ds.values[np.ix_(meta_indices, cfg.feature_set)]))
        except ValidationError as exc:
            raise ValidationError(f"level-0 config {cfg.name!r}: {exc}") from exc
        fits.append(Level0Fit(config=cfg, model=model))
    return Level0Result(
        fits=fits,
        meta_features=np.column_stack(meta_cols),
        meta_indices=meta_indices,
    )


def level0_predictions(fits: Sequence[Level0Fit], rows: np.ndarray) -> np.ndarray:
    """Matrix of per-model predictions on full-arity raw rows."""
    rows = np.asarray(rows, dtype=np.float64)
    cols = [predict(fit.model, rows[:, list(fit.config.feature_set)]) for fit in fits]
    return np.column_stack(cols)


@dataclass(frozen=True)
class ActionThresholds:
    """Score cutpoints: below t_low sells, above t_high buys, else holds."""

    t_low: float
    t_high: float

    def __post_init__(self) -> None:
        if self.t_low > self.t_high:
            raise ValidationError(
                f"t_low {self.t_low} must not exceed t_high {self.t_high}")

    def apply(self, scores) -> np.ndarray:
        s = np.asarray(scores, dtype=np.float64)
        return np.where(s < self.t_low, -1, np.where(s > self.t_high, 1, 0)).astype(np.int64)


def _check_target_dist(target_dist: Mapping[str, float]) -> tuple[float, float, float]:
    missing = [a for a in ACTIONS if a not in target_dist]
    if missing:
        raise ValidationError(f"target distribution is missing actions: {missing}")
    p = tuple(float(target_dist[a]) for a in ACTIONS)
    if any(v < 0 for v in p):
        raise ValidationError("action probabilities must be non-negative")
    if abs(sum(p) - 1.0) > 1e-9:
        raise ValidationError(f"action probabilities must sum to 1, got {sum(p)}")
    return p


def calibrate_thresholds(scores, target_dist: Mapping[str, float]) -> ActionThresholds:
    """Cut scores so the empirical action frequencies match ``target_dist``.

    Thresholds sit at midpoints between the order statistics around rank
    ``n * p``, which keeps every achieved action count within one row of its
    target on distinct scores. Zero-probability edge actions get infinite
    sentinels, and fully tied scores collapse to hold whenever hold has mass.
    """
    p_sell, p_hold, p_buy = _check_target_dist(target_dist)
    s = np.asarray(scores, dtype=np.float64).ravel()
    if s.size == 0:
        raise ValidationError("scores must be non-empty")
    n = s.size
    xs = np.sort(s)
    n_sell = int(round(n * p_sell))
    n_buy = int(round(n * p_buy))
    if n_sell + n_buy > n:
        n_buy = n - n_sell

    if n_sell == 0:
        t_low = -np.inf
    elif n_sell == n:
        t_low = np.inf
    else:
        t_low = 0.5 * (xs[n_sell - 1] + xs[n_sell])
    if n_buy == 0:
        t_high = np.inf
    elif n_buy == n:
        t_high = -np.inf
    else:
        t_high = 0.5 * (xs[n - n_buy - 1] + xs[n - n_buy])
    return ActionThresholds(t_low=float(t_low), t_high=float(t_high))


def predict_actions(fits: Sequence[Level0Fit], mlp: MLP, thresholds: ActionThresholds,
                    rows) -> np.ndarray:
    """Level-0 predictions -> MLP blend -> thresholds -> {-1, 0, +1}."""
    meta = level0_predictions(fits, rows)
    return thresholds.apply(mlp.forward(meta))


@dataclass
class StackingPipeline:
    fits: list[Level0Fit]
    mlp: MLP
    thresholds: ActionThresholds

    def predict_score(self, rows) -> np.ndarray:
        return self.mlp.forward(level0_predictions(self.fits, rows))

    def predict_actions(self, rows) -> np.ndarray:
        return predict_actions(self.fits, self.mlp, self.thresholds, rows)

    def to_dict(self) -> dict:
        def enc(v: float) -> float | None:
            return None if np.isinf(v) else float(v)

        return {
            "format": "fewboost-pipeline",
            "version": 1,
            "level0": [
                {
                    "name": fit.config.name,
                    "feature_set": list(fit.config.feature_set),
                    "winsor_quantiles": (
                        None if fit.config.winsor_quantiles is None
                        else list(fit.config.winsor_quantiles)
                    ),
                    "shot_indices": [int(i) for i in fit.config.shot_indices],
                    "params": fit.config.params.to_dict(),
                    "model": fit.model.to_dict(),
                }
                for fit in self.fits
            ],
            "mlp": self.mlp.to_dict(),
            "thresholds": {
                "t_low": enc(self.thresholds.t_low),
                "t_high": enc(self.thresholds.t_high),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StackingPipeline":
        if d.get("format") != "fewboost-pipeline":
            raise ValidationError("not a fewboost pipeline document")
        fits = []
        for entry in d["level0"]:
            cfg = Level0Config(
                name=entry["name"],
                feature_set=tuple(int(j) for j in entry["feature_set"]),
                params=Params.from_dict(entry["params"]),
                shot_indices=np.asarray(entry["shot_indices"], dtype=np.intp),
                winsor_quantiles=(
                    None if entry["winsor_quantiles"] is None
                    else tuple(entry["winsor_quantiles"])
                ),
            )
            fits.append(Level0Fit(config=cfg, model=Model.from_dict(entry["model"])))
        th = d["thresholds"]
        return cls(
            fits=fits,
            mlp=MLP.from_dict(d["mlp"]),
            thresholds=ActionThresholds(
                t_low=-np.inf if th["t_low"] is None else float(th["t_low"]),
                t_high=np.inf if th["t_high"] is None else float(th["t_high"]),
            ),
        )


def save_pipeline(pipeline: StackingPipeline, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(pipeline.to_dict(), fh, indent=2)
        fh.write("\n")


def load_pipeline(path) -> StackingPipeline:
    with open(path, "r", encoding="utf-8") as fh:
        return StackingPipeline.from_dict(json.load(fh))


def make_default_zoo(ds: Dataset, k_per_model: int, seed: int = 0,
                     params: Params | None = None) -> list[Level0Config]:
    """Five-model zoo over disjoint shot partitions.

    Feature groups are detected by name: ``dI*`` columns are relative
    features, other ``I*`` columns are static, and categorical columns form
    their own group (falling back to all-numeric as the relative set when
    the naming convention is absent). The zoo varies the split-selection
    mode, the target transform, and the feature set:

    1. randomized trees on the base set (relative + categorical)
    2. greedy trees on the base set
    3. randomized trees on the base set with a winsorized target
    4. randomized trees with categoricals removed
    5. randomized trees with static features added back
    """
    base_params = params if params is not None else dataclasses.replace(
        fsl_preset(), objective="mse")
    relative = [j for j, name in enumerate(ds.feature_names)
                if name.startswith("dI") and ds.kinds[j] != CATEGORICAL]
    cats = [j for j, kind in enumerate(ds.kinds) if kind == CATEGORICAL]
    static = [j for j in range(ds.n_features) if j not in relative and j not in cats]
    if not relative:
        relative, static = static, []
    base = tuple(sorted(relative + cats))
    no_cats = tuple(sorted(relative))
    with_static = tuple(sorted(relative + cats + static))

    parts, _ = partition_shots(ds.n_rows, k_per_model, 5, seed)
    spec = [
        ("extra-base", base, None, True),
        ("gbdt-base", base, None, False),
        ("extra-base-winsor", base, (0.005, 0.995), True),
        ("extra-no-cats", no_cats, None, True),
        ("extra-with-static", with_static, None, True),
    ]
    configs = []
    for i, (name, feats, quantiles, extra) in enumerate(spec):
        configs.append(Level0Config(
            name=name,
            feature_set=feats,
            params=dataclasses.replace(base_params, extra_trees=extra, seed=seed + i),
            shot_indices=parts[i],
            winsor_quantiles=quantiles,
        ))
    return configs


def fit_stacking(ds: Dataset, configs: Sequence[Level0Config],
                 target_dist: Mapping[str, float], seed: int = 0,
                 val_fraction: float = 0.10, max_epochs: int = 64) -> StackingPipeline:
    """Full pipeline: level-0 fits, MLP blend, threshold calibration."""
    result = train_level0(ds, configs)
    meta_targets = ds.target[result.meta_indices]
    mlp, _ = train_mlp(result.meta_features, meta_targets,
                       val_fraction=val_fraction, max_epochs=max_epochs, seed=seed)
    blended = mlp.forward(result.meta_features)
    thresholds = calibrate_thresholds(blended, target_dist)
    return StackingPipeline(fits=result.fits, mlp=mlp, thresholds=thresholds)
