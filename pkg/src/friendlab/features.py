"""Per-player preference vectors over four channels.

social   = long-term random-walk node embedding over a cumulative weekly
           interaction graph, concatenated with per-day (pagerank, k-core,
           closeness) triples over the short-term window
gameplay = trailing per-mode engagement means over 1/3/5/7-day windows
avatar   = inventory counts, hashed displayed-avatar id, acquisition-source
           histogram, and the displayed avatar's visual embedding
baseline = z-scored behavioural aggregates (interaction volume, per-mode
           engagement totals, friend count, inventory size)

Only training-window days ever feed these vectors.  Players absent from a
day's interaction graph contribute exact zeros for that day's metrics.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, PlayerId, PlayerRecord, TrainView, temporal_split

CHANNELS = ("social", "gameplay", "avatar", "baseline")

GAMEPLAY_WINDOWS = (1, 3, 5, 7)


class InteractionGraph:
    """Undirected weighted graph over players; no self-loops, weights > 0."""

    def __init__(self) -> None:
        self.adj: dict[PlayerId, dict[PlayerId, float]] = {}

    def add_node(self, node: PlayerId) -> None:
        self.adj.setdefault(node, {})

    def add_edge(self, u: PlayerId, v: PlayerId, weight: float = 1.0) -> None:
        if u == v:
            raise ValueError(f"self-loop on node {u}")
        if weight <= 0:
            raise ValueError(f"non-positive weight {weight} on edge ({u}, {v})")
        self.adj.setdefault(u, {})[v] = self.adj.get(u, {}).get(v, 0.0) + weight
        self.adj.setdefault(v, {})[u] = self.adj[u][v]

    @classmethod
    def from_edges(cls, edges) -> "InteractionGraph":
        g = cls()
        for u, v, *rest in edges:
            g.add_edge(u, v, rest[0] if rest else 1.0)
        return g

    @classmethod
    def daily(cls, view: TrainView, day: int) -> "InteractionGraph":
        return cls.window(view, day, day + 1)

    @classmethod
    def window(cls, view: TrainView, start: int, end: int) -> "InteractionGraph":
        """Cumulative graph over day indices [start, end) of the train view.

        An interaction row is the per-(day, pair) count; both endpoints may
        carry a copy, so per-day weights merge by max rather than sum.
        """
        end = min(end, view.ds.split_day)
        per_day: dict[tuple[int, PlayerId, PlayerId], float] = {}
        for rec in view.ds.players:
            for day, partner, weight in view.interactions(rec):
                if start <= day < end:
                    key = (day, min(rec.id, partner), max(rec.id, partner))
                    per_day[key] = max(per_day.get(key, 0.0), float(weight))
        g = cls()
        for (_, u, v), weight in sorted(per_day.items()):
            g.add_edge(u, v, weight)
        return g

    def nodes(self) -> list[PlayerId]:
        return sorted(self.adj)

    def neighbors(self, node: PlayerId) -> dict[PlayerId, float]:
        return self.adj[node]

    def degree(self, node: PlayerId) -> int:
        return len(self.adj[node])

    def __len__(self) -> int:
        return len(self.adj)

    def __contains__(self, node: PlayerId) -> bool:
        return node in self.adj


def _edge_arrays(
    g: InteractionGraph, nodes: list[PlayerId]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Directed (src, dst, weight) arrays covering both edge directions."""
    index = {node: i for i, node in enumerate(nodes)}
    src, dst, weights = [], [], []
    for node in nodes:
        i = index[node]
        for nbr, weight in g.neighbors(node).items():
            src.append(i)
            dst.append(index[nbr])
            weights.append(weight)
    return (
        np.asarray(src, dtype=np.int64),
        np.asarray(dst, dtype=np.int64),
        np.asarray(weights, dtype=float),
    )


def pagerank(
    g: InteractionGraph, damping: float = 0.85, tol: float = 1e-9, max_iter: int = 1000
) -> dict[PlayerId, float]:
    """Damped power iteration on the weighted transition matrix.

    Dangling nodes redistribute uniformly.  Scores sum to 1 within tol.
    """
    nodes = g.nodes()
    if not nodes:
        raise ValueError("pagerank needs a nonempty graph")
    n = len(nodes)
    src, dst, weights = _edge_arrays(g, nodes)
    strength = np.zeros(n)
    np.add.at(strength, src, weights)
    share = np.zeros_like(weights)
    nonzero = strength[src] > 0
    share[nonzero] = weights[nonzero] / strength[src][nonzero]
    dangling = strength == 0.0
    scores = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        incoming = np.zeros(n)
        if src.size:
            np.add.at(incoming, dst, scores[src] * share)
        loose = scores[dangling].sum() if dangling.any() else 0.0
        fresh = (1.0 - damping) / n + damping * (incoming + loose / n)
        done = np.max(np.abs(fresh - scores)) < tol
        scores = fresh
        if done:
            break
    return {node: float(scores[i]) for i, node in enumerate(nodes)}


def kcore(g: InteractionGraph) -> dict[PlayerId, int]:
    """Core numbers by iterative minimum-degree peeling (bucket queue)."""
    nodes = g.nodes()
    degrees = {node: g.degree(node) for node in nodes}
    if not nodes:
        return {}
    max_deg = max(degrees.values())
    bins: list[list[PlayerId]] = [[] for _ in range(max_deg + 1)]
    for node in nodes:
        bins[degrees[node]].append(node)
    core: dict[PlayerId, int] = {}
    current = 0
    cursor = 0
    removed: set[PlayerId] = set()
    while len(core) < len(nodes):
        while cursor <= max_deg and not bins[cursor]:
            cursor += 1
        node = bins[cursor].pop()
        if node in removed:
            continue
        removed.add(node)
        current = max(current, degrees[node])
        core[node] = current
        for nbr in g.neighbors(node):
            if nbr in removed:
                continue
            d = degrees[nbr]
            if d > degrees[node]:
                degrees[nbr] = d - 1
                bins[d - 1].append(nbr)
                cursor = min(cursor, d - 1)
    return core


def closeness(g: InteractionGraph) -> dict[PlayerId, float]:
    """(reachable - 1) / sum of BFS distances within the node's component;
    isolated nodes score 0.  Distances ignore edge weights."""
    nodes = g.nodes()
    n = len(nodes)
    if n == 0:
        return {}
    if n > 64:
        # level-synchronous all-pairs BFS via sparse boolean matmul
        from scipy.sparse import coo_matrix

        src, dst, _ = _edge_arrays(g, nodes)
        mat = coo_matrix(
            (np.ones(src.size, dtype=np.float32), (src, dst)), shape=(n, n)
        ).tocsr()
        visited = np.eye(n, dtype=bool)
        frontier = visited.copy()
        reach_sum = np.zeros(n)
        reach_cnt = np.zeros(n, dtype=np.int64)
        level = 0
        while frontier.any():
            level += 1
            spread = mat @ frontier.astype(np.float32)
            frontier = (spread > 0) & ~visited
            visited |= frontier
            hits = frontier.sum(axis=0)
            reach_sum += level * hits
            reach_cnt += hits
        return {
            node: (reach_cnt[i] / reach_sum[i] if reach_sum[i] > 0 else 0.0)
            for i, node in enumerate(nodes)
        }
    result: dict[PlayerId, float] = {}
    for node in nodes:
        dist = {node: 0}
        queue = deque([node])
        total = 0
        while queue:
            cur = queue.popleft()
            for nbr in g.neighbors(cur):
                if nbr not in dist:
                    dist[nbr] = dist[cur] + 1
                    total += dist[nbr]
                    queue.append(nbr)
        reachable = len(dist) - 1
        result[node] = reachable / total if total > 0 else 0.0
    return result


# ---------------------------------------------------------------------------
# random-walk node embedding (skip-gram with negative sampling)
# ---------------------------------------------------------------------------


def _walks(
    g: InteractionGraph,
    nodes: list[PlayerId],
    walk_len: int,
    walks_per_node: int,
    seed: int,
) -> list[np.ndarray]:
    """Unbiased weighted random walks, one seeded stream per start node so the
    corpus is independent of any parallel schedule."""
    index = {node: i for i, node in enumerate(nodes)}
    nbr_ids: list[np.ndarray] = []
    nbr_cum: list[np.ndarray] = []
    for node in nodes:
        nbrs = g.neighbors(node)
        ids = np.asarray([index[x] for x in sorted(nbrs)], dtype=np.int64)
        weights = np.asarray([nbrs[x] for x in sorted(nbrs)], dtype=float)
        nbr_ids.append(ids)
        cum = np.cumsum(weights)
        nbr_cum.append(cum / cum[-1] if ids.size else cum)
    walks = []
    for node in nodes:
        start = index[node]
        if nbr_ids[start].size == 0:
            continue
        rng = np.random.default_rng([seed, start])
        for _ in range(walks_per_node):
            walk = np.empty(walk_len, dtype=np.int64)
            walk[0] = start
            cur = start
            length = 1
            for step in range(1, walk_len):
                ids = nbr_ids[cur]
                if ids.size == 0:
                    break
                cur = int(ids[np.searchsorted(nbr_cum[cur], rng.random())])
                walk[step] = cur
                length = step + 1
            walks.append(walk[:length])
    return walks


def node_embedding(
    g: InteractionGraph,
    dims: int = 64,
    walk_len: int = 20,
    walks_per_node: int = 10,
    window: int = 5,
    seed: int = 0,
    epochs: int = 8,
    negatives: int = 5,
    lr: float = 0.05,
    batch_size: int | None = None,
    max_pairs: int = 400_000,
) -> dict[PlayerId, np.ndarray]:
    """Skip-gram-with-negative-sampling embedding of seeded random walks.

    Deterministic for a fixed seed.  Nodes with no neighbours (and graphs
    with no edges at all) map to the zero vector.  Corpora larger than
    max_pairs train on a seeded subsample to bound compute.
    """
    nodes = g.nodes()
    if not nodes:
        raise ValueError("node_embedding needs a nonempty graph")
    n = len(nodes)
    walks = _walks(g, nodes, walk_len, walks_per_node, seed)
    zero = {node: np.zeros(dims) for node in nodes}
    if not walks:
        return zero

    centers_l, contexts_l = [], []
    for walk in walks:
        length = walk.shape[0]
        for offset in range(1, window + 1):
            if length <= offset:
                continue
            centers_l.append(walk[:-offset])
            contexts_l.append(walk[offset:])
            centers_l.append(walk[offset:])
            contexts_l.append(walk[:-offset])
    centers = np.concatenate(centers_l)
    contexts = np.concatenate(contexts_l)
    if centers.size == 0:
        return zero
    if centers.size > max_pairs:
        keep = np.random.default_rng([seed, n, 2]).choice(
            centers.size, size=max_pairs, replace=False
        )
        centers, contexts = centers[keep], contexts[keep]

    counts = np.bincount(contexts, minlength=n).astype(float)
    noise = counts**0.75
    noise /= noise.sum()

    rng = np.random.default_rng([seed, n, 1])
    w_in = (rng.random((n, dims)) - 0.5) / dims
    w_out = np.zeros((n, dims))

    n_pairs = centers.shape[0]
    if batch_size is None:
        # roughly 20 update steps per epoch, bounded on both ends
        batch_size = int(np.clip(n_pairs // 20, 256, 4096))
    for epoch in range(epochs):
        order = rng.permutation(n_pairs)
        step_lr = lr * (1.0 - epoch / max(1, epochs))
        step_lr = max(step_lr, lr * 0.1)
        for lo in range(0, n_pairs, batch_size):
            batch = order[lo : lo + batch_size]
            c = centers[batch]
            o = contexts[batch]
            # negatives are shared across the batch: the per-row scatter
            # collapses into one small dense update
            neg = rng.choice(n, size=negatives, p=noise)

            v_c = w_in[c]
            v_o = w_out[o]
            v_n = w_out[neg]

            pos_score = _sigmoid(np.sum(v_c * v_o, axis=1))
            neg_score = _sigmoid(v_c @ v_n.T)

            g_pos = (pos_score - 1.0)[:, None]
            grad_c = g_pos * v_o + neg_score @ v_n
            grad_o = g_pos * v_c
            grad_n = neg_score.T @ v_c / batch.shape[0]

            _scatter_mean(w_in, c, -step_lr * grad_c)
            _scatter_mean(w_out, o, -step_lr * grad_o)
            w_out[neg] -= step_lr * grad_n

    return {
        node: (w_in[i].copy() if g.degree(node) else np.zeros(dims))
        for i, node in enumerate(nodes)
    }


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -30.0, 30.0)))


def _scatter_mean(target: np.ndarray, idx: np.ndarray, grads: np.ndarray) -> None:
    """Row-wise scatter of per-row MEAN gradients; averaging keeps step sizes
    bounded when a small vocabulary repeats within one batch."""
    counts = np.bincount(idx, minlength=target.shape[0]).astype(float)
    np.add.at(target, idx, grads / counts[idx][:, None])


# ---------------------------------------------------------------------------
# channel assembly
# ---------------------------------------------------------------------------


@dataclass
class FeatureSet:
    """Dense per-channel feature matrices with a shared player row order."""

    players: list[PlayerId]
    channels: dict[str, np.ndarray]
    index: dict[PlayerId, int] = field(init=False)

    def __post_init__(self) -> None:
        self.index = {pid: i for i, pid in enumerate(self.players)}
        for name, matrix in self.channels.items():
            if matrix.shape[0] != len(self.players):
                raise ValueError(f"channel {name}: row count mismatch")
            if not np.all(np.isfinite(matrix)):
                raise ValueError(f"channel {name}: non-finite entries")

    def vector(self, player: PlayerId, channel: str) -> np.ndarray:
        return self.channels[channel][self.index[player]]

    def dim(self, channel: str) -> int:
        return self.channels[channel].shape[1]

    def norms(self, channel: str) -> np.ndarray:
        cache = getattr(self, "_norms", None)
        if cache is None:
            cache = {}
            object.__setattr__(self, "_norms", cache)
        if channel not in cache:
            cache[channel] = np.linalg.norm(self.channels[channel], axis=1)
        return cache[channel]


def hash_bucket(value: int, buckets: int) -> int:
    # Knuth multiplicative hash keeps adjacent ids apart
    return ((value * 2654435761) & 0xFFFFFFFF) % buckets


def build_preferences(
    ds: Dataset,
    embedding_dims: int = 64,
    walk_length: int = 20,
    walks_per_node: int = 10,
    sgns_window: int = 5,
    short_window_days: int = 7,
    displayed_hash_buckets: int = 16,
    seed: int = 0,
) -> FeatureSet:
    """Build all four channels for every player from the training window."""
    train, _ = temporal_split(ds)
    players = sorted(ds.player_ids())
    by_id = ds.by_id()
    split = ds.split_day
    window_start = max(0, split - short_window_days)
    window_days = list(range(window_start, split))

    # index interaction rows by day once; graphs below reuse it
    edges_by_day: dict[int, dict[tuple[PlayerId, PlayerId], float]] = {
        day: {} for day in window_days
    }
    for rec in ds.players:
        for day, partner, weight in rec.daily_interactions:
            if window_start <= day < split:
                key = (min(rec.id, partner), max(rec.id, partner))
                acc = edges_by_day[day]
                acc[key] = max(acc.get(key, 0.0), float(weight))

    def graph_for(days: list[int]) -> InteractionGraph:
        merged: dict[tuple[PlayerId, PlayerId], float] = {}
        for day in days:
            for key, weight in edges_by_day[day].items():
                merged[key] = merged.get(key, 0.0) + weight
        g = InteractionGraph()
        for (u, v), weight in sorted(merged.items()):
            g.add_edge(u, v, weight)
        return g

    # --- social
    weekly = graph_for(window_days)
    embedding = node_embedding(
        weekly,
        dims=embedding_dims,
        walk_len=walk_length,
        walks_per_node=walks_per_node,
        window=sgns_window,
        seed=seed,
    ) if len(weekly) else {}
    daily_metrics: list[dict[PlayerId, tuple[float, float, float]]] = []
    for day in window_days:
        g = graph_for([day])
        if len(g):
            pr = pagerank(g)
            kc = kcore(g)
            cl = closeness(g)
            daily_metrics.append(
                {node: (pr[node], float(kc[node]), cl[node]) for node in g.nodes()}
            )
        else:
            daily_metrics.append({})

    social_dim = embedding_dims + 3 * len(window_days)
    social = np.zeros((len(players), social_dim))
    for row, pid in enumerate(players):
        if pid in embedding:
            social[row, :embedding_dims] = embedding[pid]
        for d, metrics in enumerate(daily_metrics):
            triple = metrics.get(pid)
            if triple is not None:
                social[row, embedding_dims + 3 * d : embedding_dims + 3 * d + 3] = triple

    # --- gameplay
    modes = ds.modes
    gameplay = np.zeros((len(players), len(GAMEPLAY_WINDOWS) * len(modes)))
    for row, pid in enumerate(players):
        rec = by_id[pid]
        col = 0
        for w in GAMEPLAY_WINDOWS:
            days = range(max(0, split - w), split)
            for mode in modes:
                flags = [rec.daily_gameplay.get(day, {}).get(mode, 0) for day in days]
                gameplay[row, col] = float(np.mean(flags)) if flags else 0.0
                col += 1

    # --- avatar
    sources = sorted(
        {src for rec in ds.players for src in rec.avatar_acquisitions.values()}
    )
    source_index = {s: i for i, s in enumerate(sources)}
    visual_dim = (
        len(next(iter(ds.avatar_visual_embeddings.values())))
        if ds.avatar_visual_embeddings
        else 0
    )
    avatar_dim = 2 + displayed_hash_buckets + len(sources) + visual_dim
    avatar = np.zeros((len(players), avatar_dim))
    for row, pid in enumerate(players):
        rec = by_id[pid]
        count = len(rec.avatar_inventory)
        avatar[row, 0] = float(count)
        avatar[row, 1] = float(np.log1p(count))
        if rec.displayed_avatar is not None:
            bucket = hash_bucket(rec.displayed_avatar, displayed_hash_buckets)
            avatar[row, 2 + bucket] = 1.0
        base = 2 + displayed_hash_buckets
        for av, src in rec.avatar_acquisitions.items():
            avatar[row, base + source_index[src]] += 1.0
        if rec.displayed_avatar is not None and visual_dim:
            vec = ds.avatar_visual_embeddings.get(rec.displayed_avatar)
            if vec is None:
                raise KeyError(f"avatar {rec.displayed_avatar} has no visual embedding")
            avatar[row, base + len(sources) :] = vec

    # --- baseline
    raw = np.zeros((len(players), 3 + len(modes)))
    for row, pid in enumerate(players):
        rec = by_id[pid]
        raw[row, 0] = np.log1p(rec.interaction_count(before_day=split))
        for m, mode in enumerate(modes):
            raw[row, 1 + m] = sum(
                rec.daily_gameplay.get(day, {}).get(mode, 0) for day in range(split)
            )
        raw[row, 1 + len(modes)] = float(len(rec.friends_before))
        raw[row, 2 + len(modes)] = float(len(rec.avatar_inventory))
    mean = raw.mean(axis=0)
    std = raw.std(axis=0)
    baseline = np.where(std > 1e-12, (raw - mean) / np.where(std > 1e-12, std, 1.0), 0.0)

    return FeatureSet(
        players=players,
        channels={
            "social": social,
            "gameplay": gameplay,
            "avatar": avatar,
            "baseline": baseline,
        },
    )


def channel_summaries(fs: FeatureSet) -> dict[PlayerId, dict[str, float]]:
    """Scalar per-channel activity summary per player (mean vector entry);
    serves hexbin tooltips and the parallel-coordinates payload."""
    out: dict[PlayerId, dict[str, float]] = {}
    for pid in fs.players:
        row = fs.index[pid]
        out[pid] = {
            channel: float(fs.channels[channel][row].mean()) for channel in fs.channels
        }
    return out


def export_features(fs: FeatureSet, path: str | Path) -> None:
    """Columnar text dump for offline debugging."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for channel in CHANNELS:
            if channel not in fs.channels:
                continue
            matrix = fs.channels[channel]
            for row, pid in enumerate(fs.players):
                values = "\t".join(f"{x:.6g}" for x in matrix[row])
                fh.write(f"{channel}\t{pid}\t{values}\n")
