"""Leaf-wise tree growth with histogram split finding.

Split search scans cumulative gradient/hessian statistics over bin
boundaries. A boundary is admissible only when both resulting children hold
at least ``min_data_in_leaf`` rows; boundaries failing on the left are
skipped and the scan stops once the right side falls below the floor, which
is what makes tiny training sets unsplittable under large leaf floors.

Two gain evaluators are provided. The default is the hessian-weighted
children score ``GL^2/HL + GR^2/HR`` minus the parent score
``(GL+GR)^2/(HL+HR)``. The alternative is the count-normalized variance form
``(GL^2/n_left + GR^2/n_right) / n_node``, kept for cross-checking: with unit
hessians the children score equals ``n_node`` times the variance form, so
both evaluators rank boundaries identically.

Rows whose feature value is missing sit in a reserved trailing bin and are
attached to whichever side of a split yields the higher gain
(``default_left``).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .dataset import BinnedDataset, CATEGORICAL
from .errors import ValidationError
from .params import Params

LEAF_VALUE_CLAMP = 1e4

# ---------------------------------------------------------------------------
# split-search state


@dataclass
class FeatureHistogram:
    """Per-bin accumulated gradient statistics for one feature at one node."""

    feature: int
    sum_grad: np.ndarray
    sum_hess: np.ndarray
    count: np.ndarray
    missing_bin: int
    is_categorical: bool = False


@dataclass
class NodeStats:
    """Rows at a node plus their folded gradient totals."""

    row_set: np.ndarray
    n: int
    sum_grad: float
    sum_hess: float

    @classmethod
    def from_rows(cls, rows, grads) -> "NodeStats":
        rows = np.asarray(rows, dtype=np.intp)
        return cls(
            row_set=rows,
            n=int(rows.size),
            sum_grad=float(grads.grad[rows].sum()),
            sum_hess=float(grads.hess[rows].sum()),
        )


@dataclass(frozen=True)
class SplitCandidate:
    """A single admissible split: numeric boundary or category subset."""

    feature: int
    gain: float
    n_left: int
    n_right: int
    default_left: bool
    threshold_bin: int | None = None
    left_cats: tuple[int, ...] | None = None

    @property
    def is_categorical(self) -> bool:
        return self.left_cats is not None


# ---------------------------------------------------------------------------
# gain evaluators


def _side_score(g, h):
    """Hessian-form per-side score g^2/h; 0/0 is 0, x/0 is +inf."""
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    safe = h > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(safe, g * g / np.where(safe, h, 1.0),
                       np.where(g == 0, 0.0, np.inf))
    return out


def children_score(g_left: float, h_left: float, g_right: float, h_right: float) -> float:
    """Hessian-form two-child score GL^2/HL + GR^2/HR."""
    return float(_side_score(g_left, h_left) + _side_score(g_right, h_right))


def split_gain(g_left: float, h_left: float, g_right: float, h_right: float) -> float:
    """Children score minus the parent score (always >= 0 for h > 0)."""
    return children_score(g_left, h_left, g_right, h_right) - float(
        _side_score(g_left + g_right, h_left + h_right)
    )


def variance_gain(g_left, n_left, g_right, n_right, n_node) -> np.ndarray | float:
    """Count-normalized variance-after-split: (GL^2/nl + GR^2/nr) / n_node."""
    g_left = np.asarray(g_left, dtype=np.float64)
    g_right = np.asarray(g_right, dtype=np.float64)
    nl = np.asarray(n_left, dtype=np.float64)
    nr = np.asarray(n_right, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        left = np.where(nl > 0, g_left * g_left / np.where(nl > 0, nl, 1.0), 0.0)
        right = np.where(nr > 0, g_right * g_right / np.where(nr > 0, nr, 1.0), 0.0)
    out = (left + right) / float(n_node)
    return float(out) if np.ndim(out) == 0 else out


def _finite_or_neg_inf(gain: np.ndarray) -> np.ndarray:
    return np.where(np.isnan(gain), -np.inf, gain)


# ---------------------------------------------------------------------------
# histogram construction


def build_histogram(bds: BinnedDataset, feature: int, node: NodeStats, grads) -> FeatureHistogram:
    """Accumulate grad/hess/count per bin over the node's rows."""
    fb = bds.mapper[feature]
    b = bds.bins[node.row_set, feature]
    nb = fb.n_bins
    return FeatureHistogram(
        feature=feature,
        sum_grad=np.bincount(b, weights=grads.grad[node.row_set], minlength=nb),
        sum_hess=np.bincount(b, weights=grads.hess[node.row_set], minlength=nb),
        count=np.bincount(b, minlength=nb).astype(np.int64),
        missing_bin=fb.missing_bin,
        is_categorical=fb.kind == CATEGORICAL,
    )


# ---------------------------------------------------------------------------
# numeric split search


def _numeric_scan(hist: FeatureHistogram, node: NodeStats, min_leaf: int, gain_form: str):
    """Cumulative boundary scan; returns per-boundary gains and counts.

    Boundary ``d`` sends real bins ``0..d`` left and the rest right; missing
    rows are tried on both sides and the better direction is kept (ties go
    left). Inadmissible boundaries get gain -inf.
    """
    k = hist.missing_bin
    if k < 2:
        return None
    cg = np.cumsum(hist.sum_grad[:k])[:-1]
    ch = np.cumsum(hist.sum_hess[:k])[:-1]
    cc = np.cumsum(hist.count[:k])[:-1]
    mg = float(hist.sum_grad[k])
    mh = float(hist.sum_hess[k])
    mc = int(hist.count[k])
    tg, th, tn = node.sum_grad, node.sum_hess, node.n

    nl_r, nr_r = cc, tn - cc
    nl_l, nr_l = cc + mc, tn - cc - mc
    ok_r = (nl_r >= min_leaf) & (nr_r >= min_leaf)
    ok_l = (nl_l >= min_leaf) & (nr_l >= min_leaf)

    if gain_form == "hessian":
        parent = float(_side_score(tg, th))
        gain_r = _side_score(cg, ch) + _side_score(tg - cg, th - ch) - parent
        gain_l = _side_score(cg + mg, ch + mh) + _side_score(tg - cg - mg, th - ch - mh) - parent
    elif gain_form == "variance":
        gain_r = variance_gain(cg, nl_r, tg - cg, nr_r, tn)
        gain_l = variance_gain(cg + mg, nl_l, tg - cg - mg, nr_l, tn)
    else:
        raise ValidationError(f"unknown gain_form {gain_form!r}")

    gain_r = np.where(ok_r, _finite_or_neg_inf(gain_r), -np.inf)
    gain_l = np.where(ok_l, _finite_or_neg_inf(gain_l), -np.inf)
    use_left = gain_l >= gain_r
    gain = np.where(use_left, gain_l, gain_r)
    n_left = np.where(use_left, nl_l, nl_r)
    return gain, use_left, n_left


def find_best_split(hist: FeatureHistogram, node: NodeStats, params: Params,
                    gain_form: str = "hessian") -> SplitCandidate | None:
    """Best admissible boundary for a numeric feature, or None.

    None means not splittable: either no boundary passes the
    ``min_data_in_leaf`` gate on both sides, or the best gain is not a
    finite positive number.
    """
    if hist.is_categorical:
        raise ValidationError("find_best_split handles numeric features; use categorical_split")
    scan = _numeric_scan(hist, node, params.min_data_in_leaf, gain_form)
    if scan is None:
        return None
    gain, use_left, n_left = scan
    d = int(np.argmax(gain))
    best = float(gain[d])
    if not (np.isfinite(best) and best > 0.0):
        return None
    nl = int(n_left[d])
    return SplitCandidate(
        feature=hist.feature, gain=best, n_left=nl, n_right=node.n - nl,
        default_left=bool(use_left[d]), threshold_bin=d,
    )


def extra_random_split(hist: FeatureHistogram, node: NodeStats, params: Params,
                       rng: np.random.Generator) -> SplitCandidate | None:
    """One uniformly random admissible boundary instead of the greedy best.

    Admissibility is the same ``min_data_in_leaf`` gate (a boundary counts as
    admissible when at least one missing-value direction passes). The drawn
    boundary keeps its higher-gain missing direction and is still rejected if
    its gain is not finite-positive.
    """
    if hist.is_categorical:
        raise ValidationError("extra_random_split handles numeric features; use categorical_split")
    scan = _numeric_scan(hist, node, params.min_data_in_leaf, "hessian")
    if scan is None:
        return None
    gain, use_left, n_left = scan
    admissible = np.flatnonzero(gain > -np.inf)
    if admissible.size == 0:
        return None
    d = int(admissible[int(rng.integers(admissible.size))])
    best = float(gain[d])
    if not (np.isfinite(best) and best > 0.0):
        return None
    nl = int(n_left[d])
    return SplitCandidate(
        feature=hist.feature, gain=best, n_left=nl, n_right=node.n - nl,
        default_left=bool(use_left[d]), threshold_bin=d,
    )


# ---------------------------------------------------------------------------
# categorical split search


def _best_direction(gl, hl, nl, tg, th, tn, mg, mh, mc, min_leaf, l2=0.0):
    """Evaluate one left-set (gl, hl, nl exclude missing) with both missing
    directions; returns (gain, n_left, default_left) or None."""
    best = None
    for put_left in (True, False):
        g_left = gl + mg if put_left else gl
        h_left = hl + mh if put_left else hl
        n_left = nl + mc if put_left else nl
        n_right = tn - n_left
        if n_left < min_leaf or n_right < min_leaf:
            continue
        g_right = tg - g_left
        h_right = th - h_left
        gain = (
            float(_side_score(g_left, h_left + l2))
            + float(_side_score(g_right, h_right + l2))
            - float(_side_score(tg, th + l2))
        )
        if np.isnan(gain):
            gain = -np.inf
        # ties keep the left direction (True is tried first)
        if best is None or gain > best[0]:
            best = (gain, n_left, put_left)
    return best


def categorical_split(hist: FeatureHistogram, node: NodeStats, params: Params,
                      rng: np.random.Generator | None = None) -> SplitCandidate | None:
    """Best admissible categorical split, or None.

    With at most ``max_cat_to_onehot`` distinct categories at the node, every
    one-vs-other split (a single category on the left) is evaluated. With
    more, categories are ordered by the smoothed score
    ``sum_grad / (sum_hess + cat_smooth)``, categories holding fewer than
    ``min_data_per_group`` rows are dropped from the ordering (their rows
    always route right), and prefix cuts of the ordering are scanned with
    ``cat_l2`` added to each side's hessian denominator. When ``rng`` is
    given and ``extra_trees`` is on, the prefix cut is drawn uniformly from
    the admissible ones instead of greedily maximized.
    """
    if not hist.is_categorical:
        raise ValidationError("categorical_split requires a categorical feature histogram")
    k = hist.missing_bin
    min_leaf = params.min_data_in_leaf
    present = np.flatnonzero(hist.count[:k] > 0)
    if present.size == 0:
        return None
    mg = float(hist.sum_grad[k])
    mh = float(hist.sum_hess[k])
    mc = int(hist.count[k])
    tg, th, tn = node.sum_grad, node.sum_hess, node.n

    best: SplitCandidate | None = None
    if present.size <= params.max_cat_to_onehot:
        for c in present:
            res = _best_direction(
                float(hist.sum_grad[c]), float(hist.sum_hess[c]), int(hist.count[c]),
                tg, th, tn, mg, mh, mc, min_leaf,
            )
            if res is None:
                continue
            gain, n_left, default_left = res
            if best is None or gain > best.gain:
                best = SplitCandidate(
                    feature=hist.feature, gain=gain, n_left=n_left,
                    n_right=tn - n_left, default_left=default_left,
                    left_cats=(int(c),),
                )
    else:
        eligible = [int(c) for c in present if hist.count[c] >= params.min_data_per_group]
        if not eligible:
            return None

        def smoothed(c: int) -> float:
            denom = float(hist.sum_hess[c]) + params.cat_smooth
            g = float(hist.sum_grad[c])
            if denom <= 0:
                return np.inf if g > 0 else (-np.inf if g < 0 else 0.0)
            return g / denom

        order = sorted(eligible, key=lambda c: (smoothed(c), c))
        cuts = range(1, len(order) + 1)
        if rng is not None and params.extra_trees:
            admissible = [
                p for p in cuts
                if _prefix_direction(order, p, hist, tg, th, tn, mg, mh, mc, min_leaf, params.cat_l2)
                is not None
            ]
            if not admissible:
                return None
            cuts = [admissible[int(rng.integers(len(admissible)))]]
        for p in cuts:
            res = _prefix_direction(order, p, hist, tg, th, tn, mg, mh, mc, min_leaf, params.cat_l2)
            if res is None:
                continue
            gain, n_left, default_left = res
            if best is None or gain > best.gain:
                best = SplitCandidate(
                    feature=hist.feature, gain=gain, n_left=n_left,
                    n_right=tn - n_left, default_left=default_left,
                    left_cats=tuple(sorted(order[:p])),
                )
    if best is None or not (np.isfinite(best.gain) and best.gain > 0.0):
        return None
    return best


def _prefix_direction(order, p, hist, tg, th, tn, mg, mh, mc, min_leaf, l2):
    cats = order[:p]
    gl = float(hist.sum_grad[cats].sum())
    hl = float(hist.sum_hess[cats].sum())
    nl = int(hist.count[cats].sum())
    return _best_direction(gl, hl, nl, tg, th, tn, mg, mh, mc, min_leaf, l2)


# ---------------------------------------------------------------------------
# tree structure and growth


@dataclass
class TreeNode:
    value: float = 0.0
    count: int = 0
    feature: int = -1
    threshold_bin: int = -1
    left_cats: np.ndarray | None = None
    missing_bin: int = -1
    default_left: bool = False
    left: int = -1
    right: int = -1

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


@dataclass
class Tree:
    nodes: list[TreeNode] = field(default_factory=list)
    num_leaves_used: int = 0

    @property
    def is_single_leaf(self) -> bool:
        return len(self.nodes) == 1

    def internal_nodes(self) -> Iterator[TreeNode]:
        return (nd for nd in self.nodes if not nd.is_leaf)

    def predict_bins(self, bins: np.ndarray) -> np.ndarray:
        """Leaf value per row of a binned matrix (vectorized routing)."""
        n = bins.shape[0]
        out = np.zeros(n, dtype=np.float64)
        root = self.nodes[0]
        if root.is_leaf:
            out[:] = root.value
            return out
        stack: list[tuple[int, np.ndarray]] = [(0, np.arange(n, dtype=np.intp))]
        while stack:
            nid, idx = stack.pop()
            nd = self.nodes[nid]
            if nd.is_leaf:
                out[idx] = nd.value
                continue
            if idx.size == 0:
                continue
            fb = bins[idx, nd.feature]
            if nd.left_cats is not None:
                go_left = np.isin(fb, nd.left_cats)
            else:
                go_left = fb <= nd.threshold_bin
            go_left = np.where(fb == nd.missing_bin, nd.default_left, go_left)
            stack.append((nd.left, idx[go_left]))
            stack.append((nd.right, idx[~go_left]))
        return out

    def to_dict(self) -> dict:
        return {"num_leaves_used": self.num_leaves_used, "root": self._node_dict(0)}

    def _node_dict(self, nid: int) -> dict:
        nd = self.nodes[nid]
        if nd.is_leaf:
            return {"leaf": nd.value, "count": nd.count}
        d = {
            "feature": nd.feature,
            "count": nd.count,
            "default_left": nd.default_left,
            "missing_bin": nd.missing_bin,
            "left": self._node_dict(nd.left),
            "right": self._node_dict(nd.right),
        }
        if nd.left_cats is not None:
            d["left_cats"] = [int(c) for c in nd.left_cats]
        else:
            d["threshold_bin"] = nd.threshold_bin
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        tree = cls(num_leaves_used=int(d["num_leaves_used"]))

        def build(nd: dict) -> int:
            nid = len(tree.nodes)
            if "leaf" in nd:
                tree.nodes.append(TreeNode(value=float(nd["leaf"]), count=int(nd["count"])))
                return nid
            tree.nodes.append(TreeNode())
            node = tree.nodes[nid]
            node.feature = int(nd["feature"])
            node.count = int(nd["count"])
            node.default_left = bool(nd["default_left"])
            node.missing_bin = int(nd["missing_bin"])
            if "left_cats" in nd:
                node.left_cats = np.asarray(nd["left_cats"], dtype=np.int64)
            else:
                node.threshold_bin = int(nd["threshold_bin"])
            node.left = build(nd["left"])
            node.right = build(nd["right"])
            return nid

        build(d["root"])
        return tree


def _leaf_value(stats: NodeStats) -> float:
    if stats.sum_hess <= 0.0:
        return 0.0
    v = -stats.sum_grad / stats.sum_hess
    return float(np.clip(v, -LEAF_VALUE_CLAMP, LEAF_VALUE_CLAMP))


def grow_tree(bds: BinnedDataset, grads, row_set, feature_subset, params: Params,
              rng: np.random.Generator, gain_form: str = "hessian") -> Tree:
    """Grow one tree leaf-wise (best-first) under the leaf budget.

    The frontier leaf with the highest candidate gain is split until
    ``num_leaves`` is reached or nothing is splittable. Leaf values are the
    Newton step ``-sum_grad / sum_hess`` clamped to +-1e4.
    """
    row_set = np.asarray(row_set, dtype=np.intp)
    if row_set.size == 0:
        raise ValidationError("grow_tree requires a non-empty row set")
    features = sorted(int(f) for f in feature_subset)

    def evaluate(stats: NodeStats) -> SplitCandidate | None:
        best: SplitCandidate | None = None
        for f in features:
            hist = build_histogram(bds, f, stats, grads)
            if hist.is_categorical:
                cand = categorical_split(hist, stats, params,
                                         rng if params.extra_trees else None)
            elif params.extra_trees:
                cand = extra_random_split(hist, stats, params, rng)
            else:
                cand = find_best_split(hist, stats, params, gain_form)
            # strict > keeps the lowest feature index on gain ties
            if cand is not None and (best is None or cand.gain > best.gain):
                best = cand
        return best

    tree = Tree()
    root_stats = NodeStats.from_rows(row_set, grads)
    tree.nodes.append(TreeNode(value=_leaf_value(root_stats), count=root_stats.n))
    tree.num_leaves_used = 1

    frontier: list[tuple[float, int, SplitCandidate, NodeStats]] = []
    cand = evaluate(root_stats)
    if cand is not None:
        heapq.heappush(frontier, (-cand.gain, 0, cand, root_stats))

    while frontier and tree.num_leaves_used < params.num_leaves:
        _, nid, cand, stats = heapq.heappop(frontier)
        fb = bds.bins[stats.row_set, cand.feature]
        if cand.left_cats is not None:
            go_left = np.isin(fb, np.asarray(cand.left_cats, dtype=np.int64))
        else:
            go_left = fb <= cand.threshold_bin
        missing_bin = bds.mapper[cand.feature].missing_bin
        go_left = np.where(fb == missing_bin, cand.default_left, go_left)
        left_rows = stats.row_set[go_left]
        right_rows = stats.row_set[~go_left]
        assert left_rows.size == cand.n_left and right_rows.size == cand.n_right

        left_stats = NodeStats.from_rows(left_rows, grads)
        right_stats = NodeStats.from_rows(right_rows, grads)
        node = tree.nodes[nid]
        node.feature = cand.feature
        node.default_left = cand.default_left
        node.missing_bin = missing_bin
        if cand.left_cats is not None:
            node.left_cats = np.asarray(cand.left_cats, dtype=np.int64)
        else:
            node.threshold_bin = cand.threshold_bin
        node.left = len(tree.nodes)
        tree.nodes.append(TreeNode(value=_leaf_value(left_stats), count=left_stats.n))
        node.right = len(tree.nodes)
        tree.nodes.append(TreeNode(value=_leaf_value(right_stats), count=right_stats.n))
        tree.num_leaves_used += 1

        for child_id, child_stats in ((node.left, left_stats), (node.right, right_stats)):
            child_cand = evaluate(child_stats)
            if child_cand is not None:
                heapq.heappush(frontier, (-child_cand.gain, child_id, child_cand, child_stats))
    return tree
