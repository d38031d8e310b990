"""Gradient-boosted decision trees predicting friend acceptance.

Trees are regression trees on the logistic-loss gradient with exact greedy
axis-aligned splits (squared-error reduction) and Newton leaf values.  The
trained model scores (player, candidate) pairs and ranks fused candidate
pools into top@N lists.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import Dataset, PlayerId
from .features import CHANNELS, FeatureSet, InteractionGraph, pagerank
from .pipeline import FusedSet

FEATURE_NAMES = (
    "sim_social",
    "sim_gameplay",
    "sim_avatar",
    "sim_baseline",
    "friend_count_gap",
    "common_neighbors",
    "candidate_pagerank",
)


@dataclass
class PairContext:
    """Shared state for building (player, candidate) features: unit-normalised
    channel matrices, the cumulative interaction graph of the week before the
    split, its pagerank, and pre-split friend counts."""

    fs: FeatureSet
    units: dict[str, np.ndarray]
    neighbor_sets: dict[PlayerId, set[PlayerId]]
    scores: dict[PlayerId, float]
    friend_counts: dict[PlayerId, int]

    @classmethod
    def build(cls, ds: Dataset, fs: FeatureSet, window_days: int = 7) -> "PairContext":
        from .data import temporal_split

        train, _ = temporal_split(ds)
        start = max(0, ds.split_day - window_days)
        graph = InteractionGraph.window(train, start, ds.split_day)
        scores = pagerank(graph) if len(graph) else {}
        neighbor_sets = {node: set(graph.neighbors(node)) for node in graph.nodes()}
        units = {}
        for channel, matrix in fs.channels.items():
            norms = fs.norms(channel)
            safe = np.where(norms > 0, norms, 1.0)
            units[channel] = matrix / safe[:, None]
        friend_counts = {p.id: len(p.friends_before) for p in ds.players}
        return cls(
            fs=fs,
            units=units,
            neighbor_sets=neighbor_sets,
            scores=scores,
            friend_counts=friend_counts,
        )


def pair_feature_matrix(
    ctx: PairContext, player: PlayerId, candidates: Sequence[PlayerId]
) -> np.ndarray:
    """One feature row per (player, candidate) pair."""
    rows = np.asarray([ctx.fs.index[c] for c in candidates])
    prow = ctx.fs.index[player]
    X = np.zeros((len(candidates), len(FEATURE_NAMES)))
    for j, channel in enumerate(CHANNELS):
        units = ctx.units[channel]
        X[:, j] = units[rows] @ units[prow]
    fc_p = ctx.friend_counts.get(player, 0)
    X[:, 4] = [abs(fc_p - ctx.friend_counts.get(c, 0)) for c in candidates]
    nbrs = ctx.neighbor_sets.get(player, set())
    X[:, 5] = [len(nbrs & ctx.neighbor_sets.get(c, set())) for c in candidates]
    X[:, 6] = [ctx.scores.get(c, 0.0) for c in candidates]
    return X


def build_training_set(
    ds: Dataset,
    ctx: PairContext,
    seed: int = 0,
    negatives_per_positive: int = 1,
) -> tuple[np.ndarray, np.ndarray, list[tuple[PlayerId, PlayerId]]]:
    """Directed labelled pairs: every (player, new friend) from the held-out
    window is a positive; an equal number of seeded uniform non-friend
    candidates per player are negatives.  Features come from the training
    window only."""
    rng = np.random.default_rng(seed)
    all_ids = np.asarray(sorted(ds.player_ids()))
    rows: list[np.ndarray] = []
    labels: list[int] = []
    pairs: list[tuple[PlayerId, PlayerId]] = []
    for rec in ds.players:
        positives = sorted(rec.friends_after)
        if not positives:
            continue
        blocked = rec.friends_after | rec.friends_before | {rec.id}
        eligible = np.asarray([p for p in all_ids if p not in blocked])
        n_neg = min(len(positives) * negatives_per_positive, eligible.size)
        negatives = (
            sorted(int(x) for x in rng.choice(eligible, size=n_neg, replace=False))
            if n_neg
            else []
        )
        batch = positives + list(negatives)
        X = pair_feature_matrix(ctx, rec.id, batch)
        rows.append(X)
        labels.extend([1] * len(positives) + [0] * len(negatives))
        pairs.extend((rec.id, c) for c in batch)
    if not rows:
        raise ValueError("no positive pairs: the held-out window is empty")
    return np.vstack(rows), np.asarray(labels), pairs


# ---------------------------------------------------------------------------
# boosted trees
# ---------------------------------------------------------------------------

_GAIN_EPS = 1e-12


@dataclass
class _Tree:
    feature: list[int] = field(default_factory=list)  # -1 for leaves
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)

    def add_leaf(self, value: float) -> int:
        idx = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(idx)
        self.right.append(idx)
        self.value.append(value)
        return idx

    def add_split(self, feature: int, threshold: float) -> int:
        idx = len(self.feature)
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return idx

    def _frozen(self) -> tuple[np.ndarray, ...]:
        cached = getattr(self, "_arrays", None)
        if cached is None or cached[0].size != len(self.feature):
            cached = (
                np.asarray(self.feature),
                np.asarray(self.threshold),
                np.asarray(self.left),
                np.asarray(self.right),
                np.asarray(self.value),
            )
            self._arrays = cached
        return cached

    def predict(self, X: np.ndarray) -> np.ndarray:
        feature, threshold, left, right, value = self._frozen()
        idx = np.zeros(X.shape[0], dtype=np.int64)
        # every path terminates within len(feature) hops; leaves self-loop
        for _ in range(len(self.feature)):
            feat = feature[idx]
            active = feat >= 0
            if not active.any():
                break
            rows = np.flatnonzero(active)
            goes_left = X[rows, feat[rows]] <= threshold[idx[rows]]
            idx[rows] = np.where(goes_left, left[idx[rows]], right[idx[rows]])
        return value[idx]

    def depth(self) -> int:
        def walk(node: int) -> int:
            if self.feature[node] < 0:
                return 0
            return 1 + max(walk(self.left[node]), walk(self.right[node]))

        return walk(0) if self.feature else 0

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "value": self.value,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "_Tree":
        return cls(
            feature=[int(x) for x in obj["feature"]],
            threshold=[float(x) for x in obj["threshold"]],
            left=[int(x) for x in obj["left"]],
            right=[int(x) for x in obj["right"]],
            value=[float(x) for x in obj["value"]],
        )


def _best_split(
    X: np.ndarray, grad: np.ndarray, rows: np.ndarray, min_leaf: int
) -> tuple[int, float, np.ndarray] | None:
    """Exact greedy search maximising squared-error reduction of the gradient.
    Deterministic: first feature, then first threshold among equal gains."""
    n = rows.size
    if n < 2 * min_leaf:
        return None
    r = grad[rows]
    total = r.sum()
    base = total * total / n
    best_gain = _GAIN_EPS
    best: tuple[int, float, np.ndarray] | None = None
    for feat in range(X.shape[1]):
        values = X[rows, feat]
        order = np.argsort(values, kind="stable")
        vs = values[order]
        rs = r[order]
        csum = np.cumsum(rs)[:-1]
        n_left = np.arange(1, n)
        n_right = n - n_left
        valid = (vs[1:] > vs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            continue
        gains = np.where(
            valid,
            csum**2 / n_left + (total - csum) ** 2 / n_right - base,
            -np.inf,
        )
        pick = int(np.argmax(gains))
        if gains[pick] > best_gain:
            best_gain = float(gains[pick])
            threshold = (vs[pick] + vs[pick + 1]) / 2.0
            mask = values <= threshold
            best = (feat, float(threshold), rows[mask])
    return best


def _leaf_value(grad: np.ndarray, hess: np.ndarray, rows: np.ndarray) -> float:
    g = grad[rows].sum()
    h = hess[rows].sum()
    return float(g / (h + 1e-12))


def _grow_tree(
    X: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    rows: np.ndarray,
    max_depth: int,
    min_leaf: int,
) -> _Tree:
    tree = _Tree()

    def grow(rows: np.ndarray, depth: int) -> int:
        if depth >= max_depth:
            return tree.add_leaf(_leaf_value(grad, hess, rows))
        split = _best_split(X, grad, rows, min_leaf)
        if split is None:
            return tree.add_leaf(_leaf_value(grad, hess, rows))
        feat, threshold, left_rows = split
        mask = np.ones(rows.size, dtype=bool)
        mask[np.searchsorted(rows, left_rows)] = False
        right_rows = rows[mask]
        node = tree.add_split(feat, threshold)
        tree.left[node] = grow(np.sort(left_rows), depth + 1)
        tree.right[node] = grow(np.sort(right_rows), depth + 1)
        return node

    grow(np.sort(rows), 0)
    return tree


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -35.0, 35.0)))


def log_loss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    return float(-(y * np.log(p) + (1 - y) * np.log(1 - p)).mean())


@dataclass
class GBDTModel:
    base_score: float
    learning_rate: float
    trees: list[_Tree]
    train_loss_curve: list[float]

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        score = np.full(X.shape[0], self.base_score)
        for tree in self.trees:
            score += self.learning_rate * tree.predict(X)
        return score

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.decision_function(X))

    def max_depth(self) -> int:
        return max((t.depth() for t in self.trees), default=0)

    def save(self, path: str | Path) -> None:
        payload = {
            "format": "gbdt-v1",
            "base_score": self.base_score,
            "learning_rate": self.learning_rate,
            "trees": [t.to_dict() for t in self.trees],
            "train_loss_curve": self.train_loss_curve,
        }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "GBDTModel":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != "gbdt-v1":
            raise ValueError(f"unsupported model format: {payload.get('format')!r}")
        return cls(
            base_score=float(payload["base_score"]),
            learning_rate=float(payload["learning_rate"]),
            trees=[_Tree.from_dict(t) for t in payload["trees"]],
            train_loss_curve=[float(x) for x in payload["train_loss_curve"]],
        )


def train_gbdt(
    X: np.ndarray,
    y: np.ndarray,
    learning_rate: float = 0.06,
    subsample: float = 0.56,
    max_depth: int = 9,
    n_trees: int = 100,
    min_leaf: int = 20,
    seed: int = 0,
    progress=None,
    should_stop=None,
) -> GBDTModel:
    """Boosted trees under logistic loss with per-tree row subsampling.

    Raises InterruptedError between rounds when should_stop() turns true, so
    a cancelled training run never yields a partially boosted model.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D with one label per row")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    classes = np.unique(y)
    if not np.array_equal(classes, np.array([0.0, 1.0])):
        raise ValueError("need both classes (labels 0 and 1) present")
    if not (0.0 < subsample <= 1.0):
        raise ValueError(f"subsample must lie in (0, 1], got {subsample}")

    n = X.shape[0]
    prior = float(y.mean())
    base = math.log(prior / (1.0 - prior))
    score = np.full(n, base)
    trees: list[_Tree] = []
    curve: list[float] = [log_loss(y, _sigmoid(score))]
    for t in range(n_trees):
        if should_stop is not None and should_stop():
            raise InterruptedError(f"training cancelled after {t} of {n_trees} rounds")
        p = _sigmoid(score)
        grad = y - p
        hess = p * (1.0 - p)
        if subsample < 1.0:
            rng = np.random.default_rng([seed, t])
            size = max(1, int(round(n * subsample)))
            rows = np.sort(rng.choice(n, size=size, replace=False))
        else:
            rows = np.arange(n)
        tree = _grow_tree(X, grad, hess, rows, max_depth, min_leaf)
        trees.append(tree)
        score += learning_rate * tree.predict(X)
        curve.append(log_loss(y, _sigmoid(score)))
        if progress is not None:
            progress(t + 1, n_trees)
    return GBDTModel(
        base_score=base, learning_rate=learning_rate, trees=trees, train_loss_curve=curve
    )


# ---------------------------------------------------------------------------
# evaluation and ranking
# ---------------------------------------------------------------------------


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    ranks[order] = np.arange(1, len(values) + 1)
    # average ranks over ties
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        if j > i:
            avg = (i + j) / 2.0 + 1.0
            ranks[order[i : j + 1]] = avg
        i = j + 1
    return ranks


def auc_score(y: np.ndarray, scores: np.ndarray) -> float:
    y = np.asarray(y)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined: need both classes in the test set")
    ranks = _average_ranks(np.asarray(scores, dtype=float))
    rank_sum = ranks[y == 1].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def evaluate(model: GBDTModel, X: np.ndarray, y: np.ndarray) -> dict[str, float]:
    """Accuracy/recall/precision/F1 at threshold 0.5 plus rank-statistic AUC."""
    y = np.asarray(y)
    if len(y) == 0:
        raise ValueError("empty test set")
    proba = model.predict_proba(np.asarray(X, dtype=float))
    auc = auc_score(y, proba)
    predicted = (proba >= 0.5).astype(int)
    tp = int(((predicted == 1) & (y == 1)).sum())
    fp = int(((predicted == 1) & (y == 0)).sum())
    fn = int(((predicted == 0) & (y == 1)).sum())
    accuracy = float((predicted == y).mean())
    recall = tp / (tp + fn) if tp + fn else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "accuracy": accuracy,
        "recall": recall,
        "precision": precision,
        "f1": f1,
        "auc": auc,
    }


@dataclass(frozen=True)
class RankedList:
    player: PlayerId
    n: int
    entries: tuple[tuple[PlayerId, float], ...]  # (candidate, probability) desc

    def ids(self) -> list[PlayerId]:
        return [pid for pid, _ in self.entries]


def rank(
    model: GBDTModel,
    ctx: PairContext,
    player: PlayerId,
    fused: FusedSet,
    n: int = 10,
) -> RankedList:
    """Top-n fused candidates by predicted acceptance probability; ties break
    by ascending candidate id; n clamps to the pool size."""
    if len(fused) == 0:
        raise ValueError("cannot rank an empty fused set")
    candidates = fused.ids()
    X = pair_feature_matrix(ctx, player, candidates)
    proba = model.predict_proba(X)
    pids = np.asarray(candidates)
    order = np.lexsort((pids, -proba))
    take = min(n, len(candidates))
    entries = tuple((int(pids[i]), float(proba[i])) for i in order[:take])
    return RankedList(player=player, n=take, entries=entries)
