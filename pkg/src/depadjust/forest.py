"""Random forest with chance-adjusted split criteria.

Trees split categorical features multiway over their present categories
and real features on the best binary threshold. Splits are scored by one
of three criteria computed from the node's contingency table:

``gini``
    raw Gini gain.
``sgini``
    Gini gain standardized by its null mean and variance.
``agini``
    Gini gain minus the Cantelli upper bound of its null
    ``(1 - alpha)``-quantile.

The criterion picks the split; growth stops when a node is pure, when no
sampled feature yields an eligible split, or when the chosen split has no
raw Gini gain. ``ForestConfig(stop_rule="adjusted")`` stops instead as
soon as the best adjusted score is not positive, which makes AGini trees
very shallow on data without strong single-feature signal.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import rng as _rng
from .errors import EstimationError
from .measures import ContingencyTable

__all__ = [
    "SplitCriterion",
    "ForestConfig",
    "FeatureInfo",
    "TrainingData",
    "Node",
    "Tree",
    "Forest",
    "criterion_scores",
    "score_split",
    "build_tree",
    "train_forest",
    "predict_proba",
    "auc",
    "forest_auc",
    "cross_validate",
    "tune_alpha",
    "DEFAULT_ALPHA_GRID",
    "FORMAT_VERSION",
]

FORMAT_VERSION = 1
DEFAULT_ALPHA_GRID = (0.01, 0.05, 0.1, 0.2, 0.4)
_MIN_GAIN = 1e-12


@dataclass(frozen=True)
class SplitCriterion:
    kind: str = "gini"
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in ("gini", "sgini", "agini"):
            raise EstimationError("bad-criterion", f"unknown criterion {self.kind!r}")
        if self.kind == "agini":
            if self.alpha is None:
                raise EstimationError("bad-alpha", "agini needs alpha")
            if not 0.0 < self.alpha <= 1.0:
                raise EstimationError("bad-alpha", f"alpha={self.alpha} not in (0, 1]")

    def __str__(self):
        return f"agini(alpha={self.alpha:g})" if self.kind == "agini" else self.kind


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 500
    mtry: int | None = None
    subsample: float = 0.5
    max_depth: int | None = None
    stop_rule: str = "raw_gain"

    def __post_init__(self):
        if self.stop_rule not in ("raw_gain", "adjusted"):
            raise EstimationError("bad-config", f"unknown stop rule {self.stop_rule!r}")

    def resolved_mtry(self, n_features: int) -> int:
        if self.mtry is None:
            return max(1, math.ceil(math.sqrt(n_features)))
        return max(1, min(self.mtry, n_features))


# --------------------------------------------------------------------------
# data


@dataclass(frozen=True)
class FeatureInfo:
    name: str
    kind: str  # "categorical" or "real"
    categories: tuple = ()


@dataclass
class TrainingData:
    """Encoded feature columns and class codes.

    Categorical columns hold integer codes (-1 for missing); real columns
    hold floats (NaN for missing).
    """

    columns: list
    features: list
    y: np.ndarray
    classes: tuple

    @property
    def n_rows(self) -> int:
        return len(self.y)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @classmethod
    def from_columns(cls, columns: dict, target: str, kinds: dict | None = None) -> TrainingData:
        """Encode a name -> values mapping. Rows with a missing target are dropped."""
        if target not in columns:
            raise EstimationError("unknown-column", target)
        kinds = kinds or {}
        y_raw = list(columns[target])
        keep = np.array([not _missing(v) for v in y_raw], dtype=bool)
        classes = tuple(sorted({_key(v) for v, k in zip(y_raw, keep) if k}, key=_sort_key))
        if len(classes) < 2:
            raise EstimationError("degenerate-target", f"target {target!r} has fewer than 2 classes")
        class_index = {c: i for i, c in enumerate(classes)}
        y = np.array([class_index[_key(v)] for v, k in zip(y_raw, keep) if k], dtype=np.int64)
        cols = []
        feats = []
        for name, values in columns.items():
            if name == target:
                continue
            values = [v for v, k in zip(values, keep) if k]
            kind = kinds.get(name) or _infer_kind(values)
            info, col = _encode_column(name, kind, values)
            feats.append(info)
            cols.append(col)
        return cls(cols, feats, y, classes)

    def encode(self, columns: dict) -> list:
        """Encode new data with this training set's category maps."""
        return encode_columns(self.features, columns)


def encode_columns(features, columns: dict) -> list:
    out = []
    for info in features:
        if info.name not in columns:
            raise EstimationError("unknown-column", info.name)
        values = columns[info.name]
        if info.kind == "real":
            out.append(np.array([np.nan if _missing(v) else float(v) for v in values]))
        else:
            index = {c: i for i, c in enumerate(info.categories)}
            out.append(
                np.array(
                    [-1 if _missing(v) else index.get(_key(v), -2) for v in values],
                    dtype=np.int64,
                )
            )
    return out


def _missing(v) -> bool:
    return v is None or (isinstance(v, (float, np.floating)) and math.isnan(v))


def _key(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def _sort_key(v):
    return (0, v, "") if isinstance(v, (int, float)) else (1, 0, str(v))


def _infer_kind(values) -> str:
    for v in values:
        if _missing(v):
            continue
        if isinstance(v, (bool, np.bool_)) or not isinstance(v, (int, float, np.integer, np.floating)):
            return "categorical"
    return "real"


def _encode_column(name, kind, values):
    if kind == "real":
        return FeatureInfo(name, "real"), np.array(
            [np.nan if _missing(v) else float(v) for v in values]
        )
    cats = tuple(sorted({_key(v) for v in values if not _missing(v)}, key=_sort_key))
    index = {c: i for i, c in enumerate(cats)}
    codes = np.array([-1 if _missing(v) else index[_key(v)] for v in values], dtype=np.int64)
    return FeatureInfo(name, "categorical", cats), codes


# --------------------------------------------------------------------------
# split scoring


def criterion_scores(tables: np.ndarray, criterion: SplitCriterion) -> np.ndarray:
    """Score a stack of (T, r, c) contingency tables; NaN marks ineligible.

    Every row of every table must be nonempty.
    """
    t = np.asarray(tables, dtype=np.float64)
    n = t.sum(axis=(1, 2))
    ni = t.sum(axis=2)
    q = t.sum(axis=1) / n[:, None]
    s2 = (q**2).sum(axis=1)
    within = (t / ni[:, :, None]) ** 2
    gini = 1.0 - s2 - (ni / n[:, None] * (1.0 - within.sum(axis=2))).sum(axis=1)
    if criterion.kind == "gini":
        return gini
    r = t.shape[1]
    s3 = (q**3).sum(axis=1)
    mean = (r - 1) / n * (1.0 - s2)
    var = (
        (r - 1) * (2 * s2 + 2 * s2**2 - 4 * s3)
        + ((1.0 / ni).sum(axis=1) - 2 * r / n + 1 / n) * (-2 * s2 - 6 * s2**2 + 8 * s3)
    ) / n**2
    var = np.maximum(var, 0.0)
    if criterion.kind == "sgini":
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(var > 0, (gini - mean) / np.sqrt(var), np.nan)
    a = criterion.alpha
    return gini - (mean + np.sqrt((1.0 - a) / a * var))


_GINI = SplitCriterion("gini")


def score_split(table: ContingencyTable, criterion: SplitCriterion) -> float:
    value = float(criterion_scores(table.counts[None], criterion)[0])
    if math.isnan(value):
        raise EstimationError("degenerate-null-variance")
    return value


def _raw_gain(table, criterion, value):
    if criterion.kind == "gini":
        return float(value)
    return float(criterion_scores(table, _GINI)[0])


def _best_categorical(codes, y, n_categories, n_classes, criterion):
    mask = codes >= 0
    c = codes[mask]
    if len(c) < 2:
        return None
    counts = np.bincount(c * n_classes + y[mask], minlength=n_categories * n_classes)
    counts = counts.reshape(n_categories, n_classes)
    present = np.flatnonzero(counts.sum(axis=1) > 0)
    if len(present) < 2:
        return None
    table = counts[present][None]
    value = criterion_scores(table, criterion)[0]
    if math.isnan(value):
        return None
    return value, present, _raw_gain(table, criterion, value)


def _best_threshold(values, y, n_classes, criterion):
    mask = ~np.isnan(values)
    v = values[mask]
    if len(v) < 2:
        return None
    order = np.argsort(v, kind="stable")
    sv = v[order]
    sy = y[mask][order]
    cuts = np.flatnonzero(sv[1:] != sv[:-1])
    if len(cuts) == 0:
        return None
    onehot = np.zeros((len(sv), n_classes))
    onehot[np.arange(len(sv)), sy] = 1.0
    cum = np.cumsum(onehot, axis=0)
    left = cum[cuts]
    right = cum[-1] - left
    values_ = criterion_scores(np.stack([left, right], axis=1), criterion)
    if np.all(np.isnan(values_)):
        return None
    best = int(np.nanargmax(values_))
    threshold = 0.5 * (sv[cuts[best]] + sv[cuts[best] + 1])
    gain = _raw_gain(np.stack([left[best : best + 1], right[best : best + 1]], axis=1), criterion, values_[best])
    return float(values_[best]), threshold, gain


# --------------------------------------------------------------------------
# trees


@dataclass
class Node:
    probs: np.ndarray | None = None
    feature: int = -1
    threshold: float | None = None
    branches: dict = field(default_factory=dict)  # category code -> child index
    children: list = field(default_factory=list)
    majority: int = -1  # child that receives missing / unseen values

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


@dataclass
class Tree:
    nodes: list

    @property
    def depth(self) -> int:
        def walk(i):
            node = self.nodes[i]
            return 0 if node.is_leaf else 1 + max(walk(c) for c in node.children)

        return walk(0)

    def apply(self, columns: list) -> np.ndarray:
        """Leaf index reached by every row."""
        n = len(columns[0]) if columns else 0
        out = np.empty(n, dtype=np.int64)
        stack = [(0, np.arange(n))]
        while stack:
            i, idx = stack.pop()
            node = self.nodes[i]
            if node.is_leaf:
                out[idx] = i
                continue
            col = columns[node.feature][idx]
            if node.threshold is not None:
                child = np.where(col <= node.threshold, node.children[0], node.children[1])
                child[np.isnan(col)] = node.majority
            else:
                codes = np.asarray(col, dtype=np.int64)
                size = max(node.branches) + 2
                lut = np.full(size, node.majority, dtype=np.int64)
                for code, c in node.branches.items():
                    lut[code] = c
                codes = np.where((codes < 0) | (codes >= size - 1), size - 1, codes)
                child = lut[codes]
            for c in node.children:
                sel = idx[child == c]
                if len(sel):
                    stack.append((c, sel))
        return out

    def predict_proba(self, columns: list) -> np.ndarray:
        leaves = self.apply(columns)
        return np.stack([self.nodes[i].probs for i in leaves]) if len(leaves) else np.empty((0, 0))


def build_tree(
    data: TrainingData,
    rows: np.ndarray,
    config: ForestConfig,
    criterion: SplitCriterion,
    rng: np.random.Generator,
) -> Tree:
    """Grow one tree greedily on ``rows`` of ``data``."""
    k = data.n_classes
    n_features = len(data.features)
    mtry = config.resolved_mtry(n_features)
    nodes: list[Node] = []

    def leaf(idx):
        counts = np.bincount(data.y[idx], minlength=k).astype(np.float64)
        return Node(probs=counts / counts.sum())

    nodes.append(None)
    stack = [(0, np.asarray(rows), 0)]
    while stack:
        slot, idx, depth = stack.pop()
        y = data.y[idx]
        if (
            len(idx) < 2
            or np.all(y == y[0])
            or n_features == 0
            or (config.max_depth is not None and depth >= config.max_depth)
        ):
            nodes[slot] = leaf(idx)
            continue
        candidates = rng.choice(n_features, size=mtry, replace=False)
        best = None
        for f in candidates:
            info = data.features[f]
            col = data.columns[f][idx]
            if info.kind == "categorical":
                found = _best_categorical(col, y, len(info.categories), k, criterion)
            else:
                found = _best_threshold(col, y, k, criterion)
            if found is not None and (best is None or found[0] > best[0]):
                best = (found[0], int(f), found[1], found[2])
        if best is None:
            nodes[slot] = leaf(idx)
            continue
        if config.stop_rule == "adjusted" and criterion.kind != "gini":
            stop = best[0] <= 0.0
        else:
            stop = best[3] <= _MIN_GAIN
        if stop:
            nodes[slot] = leaf(idx)
            continue

        _, f, split, _ = best
        col = data.columns[f][idx]
        node = Node(feature=f)
        if data.features[f].kind == "categorical":
            parts = [(int(code), idx[col == code]) for code in split]
        else:
            node.threshold = split
            present = ~np.isnan(col)
            parts = [
                (None, idx[present & (col <= split)]),
                (None, idx[present & (col > split)]),
            ]
        sizes = [len(p) for _, p in parts]
        majority_pos = int(np.argmax(sizes))
        missing = idx[col < 0] if data.features[f].kind == "categorical" else idx[np.isnan(col)]
        for pos, (code, part) in enumerate(parts):
            child = len(nodes)
            nodes.append(None)
            node.children.append(child)
            if code is not None:
                node.branches[code] = child
            if pos == majority_pos:
                node.majority = child
                part = np.concatenate([part, missing]) if len(missing) else part
            stack.append((child, part, depth + 1))
        nodes[slot] = node
    return Tree(nodes)


# --------------------------------------------------------------------------
# forests


@dataclass
class Forest:
    trees: list
    features: list
    classes: tuple
    config: ForestConfig
    criterion: SplitCriterion
    seed: int

    def predict_proba(self, columns: list) -> np.ndarray:
        total = None
        for tree in self.trees:
            p = tree.predict_proba(columns)
            total = p if total is None else total + p
        return total / len(self.trees)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_dict(self) -> dict:
        return {
            "format": "depadjust-forest",
            "version": FORMAT_VERSION,
            "seed": self.seed,
            "config": asdict(self.config),
            "criterion": asdict(self.criterion),
            "classes": list(self.classes),
            "features": [
                {"name": f.name, "kind": f.kind, "categories": list(f.categories)}
                for f in self.features
            ],
            "trees": [[_node_to_dict(nd) for nd in t.nodes] for t in self.trees],
        }

    @classmethod
    def from_json(cls, text: str) -> Forest:
        doc = json.loads(text)
        if doc.get("format") != "depadjust-forest":
            raise EstimationError("bad-model", "not a forest model file")
        if doc.get("version") != FORMAT_VERSION:
            raise EstimationError("bad-model", f"unsupported model version {doc.get('version')}")
        features = [
            FeatureInfo(f["name"], f["kind"], tuple(f["categories"])) for f in doc["features"]
        ]
        trees = [Tree([_node_from_dict(d) for d in t]) for t in doc["trees"]]
        return cls(
            trees,
            features,
            tuple(doc["classes"]),
            ForestConfig(**doc["config"]),
            SplitCriterion(**doc["criterion"]),
            doc["seed"],
        )


def _node_to_dict(node: Node) -> dict:
    if node.is_leaf:
        return {"leaf": [float(p) for p in node.probs]}
    out = {"feature": node.feature, "children": node.children, "majority": node.majority}
    if node.threshold is not None:
        out["threshold"] = node.threshold
    else:
        out["branches"] = [[code, child] for code, child in sorted(node.branches.items())]
    return out


def _node_from_dict(d: dict) -> Node:
    if "leaf" in d:
        return Node(probs=np.array(d["leaf"], dtype=np.float64))
    return Node(
        feature=d["feature"],
        threshold=d.get("threshold"),
        branches={int(c): int(ch) for c, ch in d.get("branches", [])},
        children=list(d["children"]),
        majority=d["majority"],
    )


def train_forest(
    data: TrainingData,
    config: ForestConfig = ForestConfig(),
    criterion: SplitCriterion = SplitCriterion(),
    seed: int = 0,
    rows: np.ndarray | None = None,
) -> Forest:
    """Train on ``rows`` (default: all rows); tree ``i`` uses substream ``i``."""
    rows = np.arange(data.n_rows) if rows is None else np.asarray(rows)
    if len(rows) == 0:
        raise EstimationError("empty-sample")
    if len(np.unique(data.y[rows])) < 2:
        raise EstimationError("degenerate-target", "training rows hold a single class")
    m = max(1, int(math.floor(config.subsample * len(rows))))
    trees = []
    for i in range(config.n_trees):
        rng = _rng.substream(seed, i, _rng.TREE)
        sub = rows[np.sort(rng.choice(len(rows), size=m, replace=False))]
        trees.append(build_tree(data, sub, config, criterion, rng))
    return Forest(trees, list(data.features), data.classes, config, criterion, seed)


def predict_proba(forest: Forest, columns: list) -> np.ndarray:
    return forest.predict_proba(columns)


def _binary_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    """Mann-Whitney AUC with midranks for ties."""
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    if n_pos == 0 or n_neg == 0:
        return math.nan
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    ranks = np.empty(len(s))
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and s[j + 1] == s[i]:
            j += 1
        ranks[i : j + 1] = 0.5 * (i + j) + 1.0
        i = j + 1
    r = np.empty(len(s))
    r[order] = ranks
    return float((r[positive].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def auc(probs: np.ndarray, y: np.ndarray) -> float:
    """Binary AUC, or unweighted one-vs-rest macro AUC for more classes.

    Classes absent from ``y`` are left out of the macro average.
    """
    probs = np.asarray(probs, dtype=np.float64)
    y = np.asarray(y)
    if probs.shape[1] == 2:
        return _binary_auc(probs[:, 1], y == 1)
    values = [_binary_auc(probs[:, k], y == k) for k in range(probs.shape[1])]
    values = [v for v in values if not math.isnan(v)]
    return float(np.mean(values)) if values else math.nan


def forest_auc(forest: Forest, data: TrainingData, rows: np.ndarray | None = None) -> float:
    rows = np.arange(data.n_rows) if rows is None else np.asarray(rows)
    columns = [c[rows] for c in data.columns]
    return auc(forest.predict_proba(columns), data.y[rows])


def _two_fold(n: int, rng: np.random.Generator, folds: int = 2) -> list:
    perm = rng.permutation(n)
    return [np.sort(perm[i::folds]) for i in range(folds)]


def cross_validate(
    data: TrainingData,
    config: ForestConfig,
    criterion: SplitCriterion,
    reps: int = 50,
    folds: int = 2,
    seed: int = 0,
    rows: np.ndarray | None = None,
) -> list[float]:
    """Per-replication AUC of repeated k-fold cross-validation.

    Replication ``r`` reshuffles the rows with substream ``r``; its AUC is the
    mean over the held-out folds.
    """
    rows = np.arange(data.n_rows) if rows is None else np.asarray(rows)
    out = []
    for r in range(reps):
        rng = _rng.substream(seed, r, _rng.SPLIT)
        parts = [rows[p] for p in _two_fold(len(rows), rng, folds)]
        fold_auc = []
        for i, test in enumerate(parts):
            train = np.concatenate([p for j, p in enumerate(parts) if j != i])
            forest = train_forest(data, config, criterion, seed=seed + 7919 * (r * folds + i + 1), rows=train)
            fold_auc.append(forest_auc(forest, data, test))
        out.append(float(np.nanmean(fold_auc)))
    return out


def tune_alpha(
    data: TrainingData,
    config: ForestConfig,
    grid=DEFAULT_ALPHA_GRID,
    folds: int = 2,
    seed: int = 0,
    rows: np.ndarray | None = None,
    reps: int = 1,
) -> tuple[float, dict]:
    """Pick the AGini alpha with the best mean validation AUC on ``rows``.

    Returns ``(best_alpha, {alpha: mean_auc})``; ties go to the smaller alpha.
    """
    grid = sorted(float(a) for a in grid)
    if not grid:
        raise EstimationError("bad-config", "empty alpha grid")
    if len(grid) == 1:
        return grid[0], {grid[0]: math.nan}
    results = {}
    for a in grid:
        values = cross_validate(data, config, SplitCriterion("agini", a), reps, folds, seed, rows)
        results[a] = float(np.nanmean(values)) if not all(math.isnan(v) for v in values) else -math.inf
    best = max(grid, key=lambda a: (results[a], -a))
    return best, results
