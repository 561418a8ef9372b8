"""From-scratch random forest: training, prediction, CV, metrics, importance.

Trees split on Gini impurity decrease over mtry randomly drawn features;
candidate thresholds are midpoints between consecutive distinct sorted
values. Split selection compares impurities with exact integer arithmetic
(cross-multiplied rationals), so chosen splits are reproducible and agree
with an exhaustive-enumeration oracle; ties break on (lower feature index,
lower threshold). All randomness descends from (seed, tree index), making
per-tree bootstraps reproducible regardless of scheduling.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

CLASS_LABELS = ("benign", "phishing")  # y encoding: 0, 1


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    X: np.ndarray  # (n, d) float64
    y: np.ndarray  # (n,) int64, values in {0, 1}
    feature_names: tuple[str, ...]

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or len(self.y) != len(self.X):
            raise DatasetError("X must be 2-D with one label per row")
        if self.X.shape[1] != len(self.feature_names):
            raise DatasetError("feature_names arity does not match X")
        if np.isnan(self.X).any():
            raise DatasetError("dataset contains NaN values")
        if not np.isin(self.y, (0, 1)).all():
            raise DatasetError("labels must be 0 (benign) or 1 (phishing)")

    def __len__(self) -> int:
        return len(self.y)

    @classmethod
    def from_feature_rows(cls, rows) -> "Dataset":
        """Build from (snapshot_id, FeatureVector) pairs; all rows need labels."""
        from .features import FEATURE_NAMES

        X, y = [], []
        for snapshot_id, vec in rows:
            if vec.label not in CLASS_LABELS:
                raise DatasetError(f"{snapshot_id}: row is unlabeled")
            X.append(vec.values())
            y.append(CLASS_LABELS.index(vec.label))
        return cls(np.array(X, dtype=np.float64), np.array(y), tuple(FEATURE_NAMES))

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.feature_names)


@dataclass(frozen=True)
class TrainParams:
    n_trees: int = 200
    max_depth: int | None = None
    min_leaf: int = 1
    mtry: int | None = None  # None -> ceil(sqrt(n_features))
    seed: int = 0

    def resolved_mtry(self, n_features: int) -> int:
        m = self.mtry if self.mtry is not None else math.ceil(math.sqrt(n_features))
        return max(1, min(m, n_features))


@dataclass
class TreeNode:
    counts: tuple[int, int]  # (benign, phishing) samples reaching this node
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass
class ForestModel:
    trees: list[TreeNode]
    params: TrainParams
    feature_names: tuple[str, ...]
    n_rows: int

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


def bootstrap_indices(seed: int, tree_index: int, n: int) -> np.ndarray:
    """The bootstrap sample (with replacement, size n) of one tree."""
    rng = np.random.default_rng([seed, tree_index])
    return rng.integers(0, n, size=n)


def _split_rational(pl: int, nl: int, pr: int, nr: int) -> tuple[int, int]:
    """Weighted child impurity as an exact rational (num, den); lower is better."""
    return pl * (nl - pl) * nr + pr * (nr - pr) * nl, nl * nr


def _rational_less(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] * b[1] < b[0] * a[1]


def _best_split_for_feature(vals, ys, min_leaf):
    """Best (num, den, threshold) for one feature, lowest threshold on ties."""
    order = np.argsort(vals, kind="stable")
    sv = vals[order]
    cum1 = np.cumsum(ys[order])
    n = len(sv)
    p = int(cum1[-1])
    cut = np.nonzero(sv[:-1] != sv[1:])[0]
    if cut.size == 0:
        return None
    nl = cut + 1
    keep = (nl >= min_leaf) & ((n - nl) >= min_leaf)
    cut, nl = cut[keep], nl[keep]
    if cut.size == 0:
        return None
    pl = cum1[cut]
    nr = n - nl
    pr = p - pl
    num = pl * (nl - pl) * nr + pr * (nr - pr) * nl
    den = nl * nr
    score = num / den
    # Shortlist by float score, then settle exactly in ascending-threshold
    # order so equal scores resolve to the lowest threshold.
    lo = score.min()
    best = None
    for j in np.nonzero(score <= lo + 1e-9 * (abs(lo) + 1.0))[0]:
        cand = (int(num[j]), int(den[j]))
        if best is None or _rational_less(cand, best[:2]):
            best = (*cand, float((sv[cut[j]] + sv[cut[j] + 1]) / 2.0))
    return best


def _build_tree(Xb, yb, rows, depth, params, mtry, rng) -> TreeNode:
    n = len(rows)
    p = int(yb[rows].sum())
    node = TreeNode(counts=(n - p, p))
    if (
        p in (0, n)
        or n < 2 * params.min_leaf
        or (params.max_depth is not None and depth >= params.max_depth)
    ):
        return node

    d = Xb.shape[1]
    if mtry < d:
        features = np.sort(rng.choice(d, size=mtry, replace=False))
    else:
        features = np.arange(d)

    best = None  # (num, den, feature, threshold)
    for f in features:
        found = _best_split_for_feature(Xb[rows, f], yb[rows], params.min_leaf)
        if found is None:
            continue
        num, den, thr = found
        if best is None or _rational_less((num, den), best[:2]):
            best = (num, den, int(f), thr)
    if best is None:
        return node

    _, _, feature, threshold = best
    mask = Xb[rows, feature] < threshold
    node.feature = feature
    node.threshold = threshold
    node.left = _build_tree(Xb, yb, rows[mask], depth + 1, params, mtry, rng)
    node.right = _build_tree(Xb, yb, rows[~mask], depth + 1, params, mtry, rng)
    return node


def train(data: Dataset, params: TrainParams = TrainParams()) -> ForestModel:
    """Train a forest; deterministic given params.seed.

    Raises DatasetError for empty or single-class training data.
    """
    if len(data) == 0:
        raise DatasetError("cannot train on an empty dataset")
    if len(set(data.y.tolist())) < 2:
        raise DatasetError("training data must contain both classes")
    mtry = params.resolved_mtry(data.X.shape[1])
    trees = []
    for t in range(params.n_trees):
        idx = bootstrap_indices(params.seed, t, len(data))
        rng = np.random.default_rng([params.seed, t, 1])  # feature-draw stream
        Xb, yb = data.X[idx], data.y[idx]
        trees.append(
            _build_tree(Xb, yb, np.arange(len(idx)), 0, params, mtry, rng)
        )
    return ForestModel(
        trees=trees,
        params=params,
        feature_names=data.feature_names,
        n_rows=len(data),
    )


def _leaf_for(node: TreeNode, x) -> TreeNode:
    while not node.is_leaf:
        node = node.left if x[node.feature] < node.threshold else node.right
    return node


def predict_proba(model: ForestModel, x) -> float:
    """Phishing probability: mean over trees of the leaf phishing fraction."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise DatasetError(
            f"feature arity mismatch: model expects {model.n_features}, got {x.shape}"
        )
    total = 0.0
    for tree in model.trees:
        leaf = _leaf_for(tree, x)
        total += leaf.counts[1] / sum(leaf.counts)
    return total / len(model.trees)


def predict(model: ForestModel, x) -> tuple[str, float]:
    """(class label, phishing probability); phishing iff probability >= 0.5."""
    proba = predict_proba(model, x)
    return CLASS_LABELS[1] if proba >= 0.5 else CLASS_LABELS[0], proba


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    roc_auc: float
    tp: int
    fp: int
    tn: int
    fn: int

    @classmethod
    def from_confusion(cls, tp: int, fp: int, tn: int, fn: int, roc_auc: float) -> "Metrics":
        total = tp + fp + tn + fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
        return cls(
            accuracy=(tp + tn) / total if total else 0.0,
            precision=precision,
            recall=recall,
            f1=f1,
            roc_auc=roc_auc,
            tp=tp, fp=fp, tn=tn, fn=fn,
        )

    def as_dict(self) -> dict:
        return asdict(self)


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    sorted_vals = values[order]
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def roc_auc(y_true, scores) -> float:
    """Rank-statistic AUC; ties contribute 1/2. 0.5 when one class is absent."""
    y_true = np.asarray(y_true)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int((y_true == 1).sum())
    n_neg = len(y_true) - n_pos
    if n_pos == 0 or n_neg == 0:
        return 0.5
    ranks = _midranks(scores)
    rank_sum = float(ranks[y_true == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def evaluate(model: ForestModel, test: Dataset) -> Metrics:
    if len(test) == 0:
        raise DatasetError("cannot evaluate on an empty test set")
    probs = np.array([predict_proba(model, row) for row in test.X])
    pred = probs >= 0.5
    actual = test.y == 1
    tp = int((pred & actual).sum())
    fp = int((pred & ~actual).sum())
    tn = int((~pred & ~actual).sum())
    fn = int((~pred & actual).sum())
    return Metrics.from_confusion(tp, fp, tn, fn, roc_auc(test.y, probs))


def stratified_folds(y, k: int, split_seed: int) -> list[np.ndarray]:
    """Test-index arrays of k stratified folds with sizes differing by <= 1."""
    y = np.asarray(y)
    n = len(y)
    if k < 2:
        raise DatasetError("k must be >= 2")
    if k > n:
        raise DatasetError(f"k={k} exceeds dataset size {n}")
    order = np.random.default_rng(split_seed).permutation(n)
    folds: list[list[int]] = [[] for _ in range(k)]
    planned = [0] * k
    for cls in sorted(set(y.tolist())):
        cls_idx = [int(i) for i in order if y[i] == cls]
        if len(cls_idx) < k:
            warnings.warn(
                f"class {cls} has {len(cls_idx)} rows < {k} folds; "
                "stratification degrades",
                stacklevel=2,
            )
        base, rem = divmod(len(cls_idx), k)
        by_load = sorted(range(k), key=lambda f: (planned[f], f))
        extras = set(by_load[:rem])
        pos = 0
        for f in range(k):
            take = base + (1 if f in extras else 0)
            folds[f].extend(cls_idx[pos:pos + take])
            planned[f] += take
            pos += take
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def cross_validate(
    data: Dataset,
    k: int,
    split_seed: int,
    params: TrainParams = TrainParams(),
) -> tuple[list[Metrics], Metrics]:
    """k-fold stratified CV; returns (per-fold metrics, mean metrics)."""
    folds = stratified_folds(data.y, k, split_seed)
    all_idx = np.arange(len(data))
    per_fold = []
    for test_idx in folds:
        train_idx = np.setdiff1d(all_idx, test_idx)
        model = train(data.subset(train_idx), params)
        per_fold.append(evaluate(model, data.subset(test_idx)))
    mean = Metrics(
        accuracy=float(np.mean([m.accuracy for m in per_fold])),
        precision=float(np.mean([m.precision for m in per_fold])),
        recall=float(np.mean([m.recall for m in per_fold])),
        f1=float(np.mean([m.f1 for m in per_fold])),
        roc_auc=float(np.mean([m.roc_auc for m in per_fold])),
        tp=sum(m.tp for m in per_fold),
        fp=sum(m.fp for m in per_fold),
        tn=sum(m.tn for m in per_fold),
        fn=sum(m.fn for m in per_fold),
    )
    return per_fold, mean


def holdout_split(
    data: Dataset, test_fraction: float, split_seed: int
) -> tuple[Dataset, Dataset]:
    """Stratified train/test split (e.g. 0.3 for a 70:30 protocol)."""
    if not 0.0 < test_fraction < 1.0:
        raise DatasetError("test_fraction must be in (0, 1)")
    order = np.random.default_rng(split_seed).permutation(len(data))
    test_sel: list[int] = []
    for cls in sorted(set(data.y.tolist())):
        cls_idx = [int(i) for i in order if data.y[i] == cls]
        test_sel.extend(cls_idx[: round(len(cls_idx) * test_fraction)])
    test_idx = np.array(sorted(test_sel), dtype=np.int64)
    train_idx = np.setdiff1d(np.arange(len(data)), test_idx)
    return data.subset(train_idx), data.subset(test_idx)


def _gini(counts: tuple[int, int]) -> float:
    n = sum(counts)
    if n == 0:
        return 0.0
    return 1.0 - sum((c / n) ** 2 for c in counts)


def feature_importance(model: ForestModel) -> list[tuple[str, float]]:
    """Mean decrease in Gini impurity, count-weighted, normalized to sum 1.

    A forest with no splits at all yields all-zero importances.
    """
    raw = np.zeros(model.n_features)

    def visit(node: TreeNode, n_root: int):
        if node.is_leaf:
            return
        n = sum(node.counts)
        nl, nr = sum(node.left.counts), sum(node.right.counts)
        decrease = _gini(node.counts) - (
            nl / n * _gini(node.left.counts) + nr / n * _gini(node.right.counts)
        )
        raw[node.feature] += (n / n_root) * decrease
        visit(node.left, n_root)
        visit(node.right, n_root)

    for tree in model.trees:
        visit(tree, sum(tree.counts))
    total = raw.sum()
    if total > 0:
        raw = raw / total
    return list(zip(model.feature_names, raw.tolist()))


def _node_to_json(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"c": list(node.counts)}
    return {
        "c": list(node.counts),
        "f": node.feature,
        "t": node.threshold,
        "l": _node_to_json(node.left),
        "r": _node_to_json(node.right),
    }


def _node_from_json(obj: dict) -> TreeNode:
    node = TreeNode(counts=tuple(obj["c"]))
    if "f" in obj:
        node.feature = obj["f"]
        node.threshold = obj["t"]
        node.left = _node_from_json(obj["l"])
        node.right = _node_from_json(obj["r"])
    return node


def save_model(model: ForestModel, path: str | Path) -> None:
    doc = {
        "format": "nftscout-forest-v1",
        "params": asdict(model.params),
        "feature_names": list(model.feature_names),
        "classes": list(CLASS_LABELS),
        "n_rows": model.n_rows,
        "trees": [_node_to_json(t) for t in model.trees],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> ForestModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != "nftscout-forest-v1":
        raise ValueError(f"{path}: not a forest model file")
    return ForestModel(
        trees=[_node_from_json(t) for t in doc["trees"]],
        params=TrainParams(**doc["params"]),
        feature_names=tuple(doc["feature_names"]),
        n_rows=doc["n_rows"],
    )


__all__ = [
    "CLASS_LABELS",
    "Dataset",
    "DatasetError",
    "ForestModel",
    "Metrics",
    "TrainParams",
    "TreeNode",
    "bootstrap_indices",
    "cross_validate",
    "evaluate",
    "feature_importance",
    "holdout_split",
    "load_model",
    "predict",
    "predict_proba",
    "roc_auc",
    "save_model",
    "stratified_folds",
    "train",
]
