"""Gradient boosting driver: losses, bagging schedule, ensemble prediction.

A model is the initial score plus the eta-scaled sum of tree outputs, pushed
through the objective's link (sigmoid for binary log-loss, identity
otherwise). Training is deterministic for a fixed seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .dataset import BinnedDataset, FeatureBins, bin_matrix
from .errors import ValidationError
from .params import Params
from .tree import Tree, grow_tree

BASE_SCORE_CLAMP = 10.0  # log-odds clamp when the training target is single-class


@dataclass
class GradientPairs:
    """First and second loss derivatives per row (columnar)."""

    grad: np.ndarray
    hess: np.ndarray


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def compute_gradients(objective: str, targets, scores) -> GradientPairs:
    """Per-row gradient/hessian of the loss at the current raw scores.

    binary-logloss: grad = sigmoid(score) - y, hess = p(1-p).
    mse: grad = score - y, hess = 1.
    mae: grad = sign(score - y), hess = 1 (constant-hessian surrogate).
    """
    y = np.asarray(targets, dtype=np.float64)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape != s.shape:
        raise ValidationError("targets and scores must have equal length")
    if objective == "binary-logloss":
        p = _sigmoid(s)
        return GradientPairs(grad=p - y, hess=p * (1.0 - p))
    if objective == "mse":
        return GradientPairs(grad=s - y, hess=np.ones_like(s))
    if objective == "mae":
        return GradientPairs(grad=np.sign(s - y), hess=np.ones_like(s))
    raise ValidationError(f"unknown objective {objective!r}")


def _initial_score(objective: str, y: np.ndarray) -> float:
    if objective in ("mse", "mae"):
        return float(np.mean(y))
    p = float(np.mean(y))
    if p <= 0.0:
        return -BASE_SCORE_CLAMP
    if p >= 1.0:
        return BASE_SCORE_CLAMP
    return math.log(p / (1.0 - p))


@dataclass
class Model:
    """Trained ensemble plus the binning rules needed to score raw rows."""

    trees: list[Tree]
    base_score: float
    objective: str
    params: Params
    mapper: list[FeatureBins]

    @property
    def n_features(self) -> int:
        return len(self.mapper)

    def raw_scores(self, rows: np.ndarray) -> np.ndarray:
        bins = bin_matrix(self.mapper, np.asarray(rows, dtype=np.float64))
        out = np.full(bins.shape[0], self.base_score, dtype=np.float64)
        for tree in self.trees:
            out += self.params.eta * tree.predict_bins(bins)
        return out

    def all_single_leaf(self) -> bool:
        return all(t.is_single_leaf for t in self.trees)

    def to_dict(self) -> dict:
        features = []
        for fb in self.mapper:
            d: dict = {"name": fb.name, "kind": fb.kind, "n_real_bins": fb.n_real_bins}
            if fb.edges is not None:
                d["edges"] = [float(e) for e in fb.edges]
            if fb.categories is not None:
                d["categories"] = list(fb.categories)
            features.append(d)
        return {
            "format": "fewboost-model",
            "version": 1,
            "objective": self.objective,
            "base_score": self.base_score,
            "params": self.params.to_dict(),
            "features": features,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Model":
        if d.get("format") != "fewboost-model":
            raise ValidationError("not a fewboost model document")
        if d.get("version") != 1:
            raise ValidationError(f"unsupported model version {d.get('version')!r}")
        mapper = []
        for f in d["features"]:
            mapper.append(FeatureBins(
                name=f["name"], kind=f["kind"], n_real_bins=int(f["n_real_bins"]),
                edges=np.asarray(f["edges"], dtype=np.float64) if "edges" in f else None,
                categories=tuple(f["categories"]) if "categories" in f else None,
            ))
        return cls(
            trees=[Tree.from_dict(t) for t in d["trees"]],
            base_score=float(d["base_score"]),
            objective=str(d["objective"]),
            params=Params.from_dict(d["params"]),
            mapper=mapper,
        )


def train(bds: BinnedDataset, params: Params) -> Model:
    """Run ``n_rounds`` boosting iterations over a binned dataset.

    Each iteration recomputes gradients at the current predictions, applies
    the bagging schedule (a fresh row subset of size
    floor(bagging_fraction * n) every ``bagging_freq`` iterations) and
    per-tree feature sampling, then grows one tree and advances predictions
    by ``eta`` times its output. A tree whose gate is closed everywhere stays
    a single leaf and only shifts predictions by a constant.
    """
    if bds.target is None:
        raise ValidationError("training requires a target column")
    y = bds.target
    n = bds.n_rows
    if n < 1:
        raise ValidationError("training requires at least one row")
    if params.objective == "binary-logloss" and not np.all(np.isin(y, (0.0, 1.0))):
        raise ValidationError("binary-logloss requires targets in {0, 1}")

    rng = np.random.default_rng(params.seed)
    base = _initial_score(params.objective, y)
    scores = np.full(n, base, dtype=np.float64)
    all_rows = np.arange(n, dtype=np.intp)
    all_feats = np.arange(bds.n_features, dtype=np.intp)
    bag = all_rows
    trees: list[Tree] = []

    for it in range(params.n_rounds):
        grads = compute_gradients(params.objective, y, scores)
        if params.bagging_freq > 0 and params.bagging_fraction < 1.0:
            if it % params.bagging_freq == 0:
                size = max(1, math.floor(params.bagging_fraction * n + 1e-9))
                bag = np.sort(rng.choice(n, size=size, replace=False)).astype(np.intp)
            rows = bag
        else:
            rows = all_rows
        if params.feature_fraction < 1.0 and bds.n_features > 1:
            size = max(1, math.floor(params.feature_fraction * bds.n_features + 0.5))
            feats = np.sort(rng.choice(bds.n_features, size=size, replace=False))
        else:
            feats = all_feats
        tree = grow_tree(bds, grads, rows, feats, params, rng)
        scores += params.eta * tree.predict_bins(bds.bins)
        trees.append(tree)

    return Model(trees=trees, base_score=base, objective=params.objective,
                 params=params, mapper=list(bds.mapper))


def predict(model: Model, rows) -> np.ndarray:
    """Score raw (unbinned) feature rows through the stored binning rules.

    Binary log-loss models return probabilities clipped to the open (0, 1)
    interval; regression objectives return raw scores.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ValidationError(f"expected a 2-d row matrix, got shape {rows.shape}")
    if rows.shape[1] != model.n_features:
        raise ValidationError(
            f"row arity {rows.shape[1]} does not match the model's {model.n_features} features"
        )
    raw = model.raw_scores(rows)
    if model.objective == "binary-logloss":
        return np.clip(_sigmoid(raw), 1e-15, 1.0 - 1e-15)
    return raw


def save_model(model: Model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=2)
        fh.write("\n")


def load_model(path) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        return Model.from_dict(json.load(fh))
