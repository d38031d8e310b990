"""Spreads expert-assigned preference ratios from representative players
across a group over a kNN similarity graph, and surfaces the least-confident
assignments for expert re-mediation.

The substrate is a union-symmetrised kNN graph over the players'
concatenated, per-channel L2-normalised feature vectors with Gaussian-of-
cosine edge weights.  Diffusion iterates F <- alpha*S*F + (1-alpha)*Y with
labelled rows clamped; rows that no label can reach fall back to a uniform
distribution (maximum uncertainty) so they surface first for re-mediation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .data import PlayerId
from .features import CHANNELS, FeatureSet


@dataclass
class SimilarityGraph:
    players: list[PlayerId]  # sorted
    index: dict[PlayerId, int]
    weights: np.ndarray  # symmetric, zero diagonal
    transition: np.ndarray  # row-stochastic
    components: list[set[PlayerId]]
    k: int
    sigma: float

    def edge_count(self) -> int:
        return int((self.weights > 0).sum() // 2)


def group_vectors(fs: FeatureSet, players: Sequence[PlayerId]) -> np.ndarray:
    """Concatenation of per-channel L2-normalised vectors per player."""
    rows = np.asarray([fs.index[p] for p in players])
    blocks = []
    for channel in CHANNELS:
        matrix = fs.channels[channel][rows]
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        blocks.append(matrix / np.where(norms > 0, norms, 1.0))
    return np.hstack(blocks)


def build_similarity_graph(
    group: Iterable[PlayerId],
    fs: FeatureSet,
    k: int = 10,
    sigma: float = 0.5,
) -> SimilarityGraph:
    """Union-symmetrised kNN graph with weights exp(-(1-cos)/sigma)."""
    players = sorted(group)
    if len(players) < 2:
        raise ValueError("need at least two players to build a similarity graph")
    n = len(players)
    k = min(k, n - 1)
    X = group_vectors(fs, players)
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    units = X / np.where(norms > 0, norms, 1.0)
    sims = np.clip(units @ units.T, -1.0, 1.0)
    np.fill_diagonal(sims, -np.inf)

    weights = np.zeros((n, n))
    order = np.argsort(-sims, axis=1, kind="stable")
    for i in range(n):
        for j in order[i, :k]:
            w = float(np.exp(-(1.0 - sims[i, j]) / sigma))
            weights[i, j] = w
            weights[j, i] = w

    degree = weights.sum(axis=1)
    transition = np.zeros_like(weights)
    has_edges = degree > 0
    transition[has_edges] = weights[has_edges] / degree[has_edges, None]

    components = _components(players, weights)
    return SimilarityGraph(
        players=players,
        index={p: i for i, p in enumerate(players)},
        weights=weights,
        transition=transition,
        components=components,
        k=k,
        sigma=sigma,
    )


def _components(players: list[PlayerId], weights: np.ndarray) -> list[set[PlayerId]]:
    n = len(players)
    seen = np.zeros(n, dtype=bool)
    components = []
    for start in range(n):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = {players[start]}
        while stack:
            cur = stack.pop()
            for nxt in np.flatnonzero(weights[cur] > 0):
                if not seen[nxt]:
                    seen[nxt] = True
                    comp.add(players[nxt])
                    stack.append(int(nxt))
        components.append(comp)
    return components


@dataclass
class PropagationResult:
    players: list[PlayerId]
    ratio_ids: list[str]
    probabilities: np.ndarray  # (n_players, n_ratios), rows sum to 1
    labeled: dict[PlayerId, str]
    converged: bool
    iterations: int

    def distribution(self, player: PlayerId) -> dict[str, float]:
        row = self.probabilities[self.players.index(player)]
        return {rid: float(p) for rid, p in zip(self.ratio_ids, row)}

    def assigned(self, player: PlayerId) -> str:
        row = self.probabilities[self.players.index(player)]
        return self.ratio_ids[int(np.argmax(row))]

    def assignment(self) -> dict[PlayerId, str]:
        return {
            p: self.ratio_ids[int(np.argmax(self.probabilities[i]))]
            for i, p in enumerate(self.players)
        }

    def uncertainty(self, player: PlayerId) -> float:
        row = self.probabilities[self.players.index(player)]
        return float(1.0 - row.max())

    def to_dict(self) -> dict:
        return {
            "players": self.players,
            "ratio_ids": self.ratio_ids,
            "probabilities": self.probabilities.tolist(),
            "labeled": {str(k): v for k, v in self.labeled.items()},
            "converged": self.converged,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "PropagationResult":
        return cls(
            players=[int(p) for p in obj["players"]],
            ratio_ids=[str(r) for r in obj["ratio_ids"]],
            probabilities=np.asarray(obj["probabilities"], dtype=float),
            labeled={int(k): str(v) for k, v in obj["labeled"].items()},
            converged=bool(obj["converged"]),
            iterations=int(obj["iterations"]),
        )


def propagate(
    graph: SimilarityGraph,
    labels: Mapping[PlayerId, str],
    alpha: float = 0.85,
    tol: float = 1e-6,
    max_iter: int = 1000,
    ratio_ids: Sequence[str] | None = None,
    progress: Callable[[int, int], None] | None = None,
    should_stop: Callable[[], bool] | None = None,
) -> PropagationResult:
    """Diffuse representative labels until the largest entry change drops
    below tol.  Labelled players stay clamped to their own ratio; final rows
    are renormalised and unreachable rows become uniform."""
    if not labels:
        raise ValueError("propagation needs at least one labelled representative")
    unknown = set(labels) - set(graph.players)
    if unknown:
        raise KeyError(f"labelled players outside the group: {sorted(unknown)}")
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")

    ids = sorted(set(labels.values()) | set(ratio_ids or []))
    n, r = len(graph.players), len(ids)
    column = {rid: j for j, rid in enumerate(ids)}
    Y = np.zeros((n, r))
    clamp_rows = []
    for player, rid in labels.items():
        i = graph.index[player]
        Y[i, column[rid]] = 1.0
        clamp_rows.append(i)
    clamp_rows = np.asarray(sorted(clamp_rows))

    F = Y.copy()
    S = graph.transition
    converged = False
    iterations = 0
    for iteration in range(1, max_iter + 1):
        iterations = iteration
        fresh = alpha * (S @ F) + (1.0 - alpha) * Y
        fresh[clamp_rows] = Y[clamp_rows]
        delta = float(np.max(np.abs(fresh - F)))
        F = fresh
        if progress is not None and iteration % 50 == 0:
            progress(iteration, max_iter)
        if delta < tol:
            converged = True
            break
        if should_stop is not None and should_stop():
            break

    sums = F.sum(axis=1)
    unreached = sums <= 1e-30
    F[unreached] = 1.0 / r
    reached = ~unreached
    F[reached] = F[reached] / sums[reached, None]

    return PropagationResult(
        players=list(graph.players),
        ratio_ids=ids,
        probabilities=F,
        labeled=dict(labels),
        converged=converged,
        iterations=iterations,
    )


def uncertain_players(
    result: PropagationResult, k: int
) -> list[tuple[PlayerId, dict[str, float], float]]:
    """Top-k unlabelled players by descending uncertainty (ties by id)."""
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    rows = []
    for i, player in enumerate(result.players):
        if player in result.labeled:
            continue
        row = result.probabilities[i]
        uncertainty = float(1.0 - row.max())
        rows.append((player, dict(zip(result.ratio_ids, map(float, row))), uncertainty))
    rows.sort(key=lambda item: (-item[2], item[0]))
    return rows[:k]


def remediate_and_repropagate(
    graph: SimilarityGraph,
    labels: Mapping[PlayerId, str],
    player: PlayerId,
    ratio_id: str,
    alpha: float = 0.85,
    tol: float = 1e-6,
    max_iter: int = 1000,
    ratio_ids: Sequence[str] | None = None,
) -> tuple[dict[PlayerId, str], PropagationResult]:
    """Add (or override) one expert label and re-run propagation."""
    if player not in graph.index:
        raise KeyError(f"player {player} is not in the group")
    updated = dict(labels)
    updated[player] = ratio_id
    result = propagate(
        graph, updated, alpha=alpha, tol=tol, max_iter=max_iter, ratio_ids=ratio_ids
    )
    return updated, result
