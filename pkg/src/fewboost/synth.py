"""Synthetic dataset generators for benchmarks and the stacking pipeline."""

from __future__ import annotations

import numpy as np

from .booster import _sigmoid
from .dataset import CATEGORICAL, Dataset, NUMERIC


def make_synthetic_binary(n_rows: int = 500, n_features: int = 6, n_informative: int = 2,
                          noise_sd: float = 1.0, seed: int = 0,
                          coef: float = 4.0) -> Dataset:
    """Binary classification task with a linear logit.

    The first ``n_informative`` features are bimodal (modes at +-1.5 with
    within-mode sd 0.5) so that even very coarse histogram cuts can separate
    them; their logit weights start at ``coef`` and halve with alternating
    sign. The remaining features are standard-normal noise. Gaussian noise
    with sd ``noise_sd`` is added inside the logit before Bernoulli sampling.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_rows, n_features))
    w = np.zeros(n_features)
    for j in range(n_informative):
        modes = rng.choice((-1.0, 1.0), size=n_rows)
        x[:, j] = 1.5 * modes + 0.5 * rng.standard_normal(n_rows)
        w[j] = coef * (0.5 ** j) * (1.0 if j % 2 == 0 else -1.0)
    logit = x @ w + noise_sd * rng.standard_normal(n_rows)
    y = (rng.random(n_rows) < _sigmoid(logit)).astype(np.float64)
    return Dataset(
        feature_names=[f"x{j}" for j in range(n_features)],
        kinds=[NUMERIC] * n_features,
        values=x,
        categories=[None] * n_features,
        target=y,
        target_name="y",
        name="synthetic-binary",
    )


def make_synthetic_stock(n_rows: int = 2000, n_relative: int = 8, n_static: int = 4,
                         n_groups: int = 6, noise_sd: float = 0.6,
                         seed: int = 0) -> Dataset:
    """Regression task shaped like a market-indicator table.

    Columns ``dI1..dIk`` are one-period relative changes and carry most of
    the signal; ``I1..Im`` are static indicator levels with weak influence;
    ``Group`` is a categorical sector with its own offsets. The continuous
    target ``Perform`` mixes the linear signal with Gaussian noise.
    """
    rng = np.random.default_rng(seed)
    rel = rng.standard_normal((n_rows, n_relative))
    stat = rng.standard_normal((n_rows, n_static))
    group = rng.integers(n_groups, size=n_rows)

    w_rel = rng.uniform(0.4, 1.0, size=n_relative) * rng.choice((-1.0, 1.0), size=n_relative)
    w_stat = rng.uniform(0.05, 0.15, size=n_static) * rng.choice((-1.0, 1.0), size=n_static)
    group_offset = rng.normal(0.0, 0.3, size=n_groups)
    y = rel @ w_rel + stat @ w_stat + group_offset[group] + noise_sd * rng.standard_normal(n_rows)
    # scale to a small-return magnitude
    y = 0.1 * y

    values = np.column_stack([rel, stat, group.astype(np.float64)])
    names = [f"dI{j + 1}" for j in range(n_relative)] + \
            [f"I{j + 1}" for j in range(n_static)] + ["Group"]
    kinds = [NUMERIC] * (n_relative + n_static) + [CATEGORICAL]
    categories: list[list[str] | None] = [None] * (n_relative + n_static)
    categories.append([f"G{g}" for g in range(n_groups)])
    return Dataset(
        feature_names=names,
        kinds=kinds,
        values=values,
        categories=categories,
        target=y,
        target_name="Perform",
        name="synthetic-stock",
    )
