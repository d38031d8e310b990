"""Independent brute-force oracles used across the test suite.

Everything here is deliberately naive (dense matrices, exhaustive
enumeration, hand BFS) and shares no code with the package implementations
it checks.
"""

from __future__ import annotations

import numpy as np


def google_matrix_scores(
    nodes: list[int],
    edges: list[tuple[int, int, float]],
    damping: float = 0.85,
) -> dict[int, float]:
    """Dense power iteration on the full Google matrix."""
    n = len(nodes)
    index = {node: i for i, node in enumerate(nodes)}
    weight = np.zeros((n, n))
    for u, v, w in edges:
        weight[index[u], index[v]] += w
        weight[index[v], index[u]] += w
    out = weight.sum(axis=1)
    transition = np.zeros((n, n))
    for i in range(n):
        if out[i] > 0:
            transition[i] = weight[i] / out[i]
        else:
            transition[i] = 1.0 / n
    google = damping * transition + (1.0 - damping) / n
    x = np.full(n, 1.0 / n)
    for _ in range(100000):
        fresh = x @ google
        if np.max(np.abs(fresh - x)) < 1e-13:
            x = fresh
            break
        x = fresh
    return {node: float(x[index[node]]) for node in nodes}


def peel_core_numbers(
    nodes: list[int], edges: list[tuple[int, int]]
) -> dict[int, int]:
    """Per-k subgraph check: node is in the k-core iff it survives repeated
    removal of all degree<k nodes."""
    adjacency = {node: set() for node in nodes}
    for u, v in edges:
        adjacency[u].add(v)
        adjacency[v].add(u)
    core = {node: 0 for node in nodes}
    max_k = max((len(a) for a in adjacency.values()), default=0)
    for k in range(1, max_k + 1):
        alive = set(nodes)
        changed = True
        while changed:
            changed = False
            for node in list(alive):
                if len(adjacency[node] & alive) < k:
                    alive.discard(node)
                    changed = True
        for node in alive:
            core[node] = k
    return core


def floyd_warshall_closeness(
    nodes: list[int], edges: list[tuple[int, int]]
) -> dict[int, float]:
    """(reachable-1)/sum-of-distances via dense Floyd-Warshall."""
    n = len(nodes)
    index = {node: i for i, node in enumerate(nodes)}
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    for u, v in edges:
        dist[index[u], index[v]] = 1.0
        dist[index[v], index[u]] = 1.0
    for k in range(n):
        dist = np.minimum(dist, dist[:, k : k + 1] + dist[k : k + 1, :])
    out = {}
    for node in nodes:
        row = dist[index[node]]
        finite = np.isfinite(row)
        total = row[finite].sum()
        reachable = int(finite.sum()) - 1
        out[node] = reachable / total if total > 0 else 0.0
    return out


def cosine_direct(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na = float(np.sqrt((a * a).sum()))
    nb = float(np.sqrt((b * b).sum()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float((a * b).sum() / (na * nb))


def best_stump(X: np.ndarray, residuals: np.ndarray):
    """Exhaustive search over every (feature, midpoint threshold) split,
    maximising squared-error reduction.  Returns the row partition."""
    n = X.shape[0]
    total = residuals.sum()
    best_gain = 0.0
    best_mask = None
    base = (residuals**2).sum() - total**2 / n
    for feat in range(X.shape[1]):
        values = np.unique(X[:, feat])
        for lo, hi in zip(values[:-1], values[1:]):
            threshold = (lo + hi) / 2.0
            mask = X[:, feat] <= threshold
            nl = int(mask.sum())
            nr = n - nl
            if nl == 0 or nr == 0:
                continue
            sl = residuals[mask].sum()
            sr = total - sl
            sse = (
                (residuals[mask] ** 2).sum()
                - sl**2 / nl
                + (residuals[~mask] ** 2).sum()
                - sr**2 / nr
            )
            gain = base - sse
            if gain > best_gain + 1e-12:
                best_gain = gain
                best_mask = mask
    return best_mask, best_gain


def auc_by_pair_counting(scores: np.ndarray, labels: np.ndarray) -> float:
    """AUC as the fraction of (positive, negative) pairs ranked correctly,
    ties counting half."""
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = 0.0
    for p in pos:
        wins += float(np.sum(p > neg)) + 0.5 * float(np.sum(p == neg))
    return wins / (len(pos) * len(neg))


def nearest_hex_center(
    point: tuple[float, float], radius: float, search: int = 12
) -> tuple[int, int]:
    """Brute-force nearest pointy-top hex centre over a window of axial
    coordinates around the point."""
    x, y = point
    # approximate axial coordinates to centre the search window
    q0 = round((np.sqrt(3) / 3 * x - y / 3) / radius)
    r0 = round((2 * y / 3) / radius)
    best = None
    best_d = np.inf
    for q in range(q0 - search, q0 + search + 1):
        for r in range(r0 - search, r0 + search + 1):
            cx = radius * np.sqrt(3) * (q + r / 2.0)
            cy = radius * 1.5 * r
            d = (cx - x) ** 2 + (cy - y) ** 2
            if d < best_d - 1e-12 or (
                abs(d - best_d) <= 1e-12 and best is not None and (q, r) < best
            ):
                best_d = d
                best = (q, r)
    return best
