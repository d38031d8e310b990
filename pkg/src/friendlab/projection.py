"""2D views of the preference space: exact t-SNE per channel, pointy-top
hexagonal density binning, and the radial band layout for the sampling view.

The t-SNE here is the exact O(n^2) formulation (dense pairwise affinities,
early exaggeration for the first 250 iterations, adaptive gains, momentum
switch at 250) -- deterministic under a fixed seed and sized for desk-scale
populations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .data import PlayerId
from .features import FeatureSet
from .pipeline import BandedCandidates

EXAGGERATION_ITERS = 250
EXAGGERATION_FACTOR = 12.0


def _pairwise_sq_dists(X: np.ndarray) -> np.ndarray:
    sq = (X * X).sum(axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.fill_diagonal(d, 0.0)
    return np.maximum(d, 0.0)


def _conditional_probs(dists_row: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    p = np.exp(-dists_row * beta)
    total = p.sum()
    if total <= 0.0:
        p = np.full_like(p, 1.0 / p.size)
        total = 1.0
        return p, 0.0
    p /= total
    # Shannon entropy of the row in nats
    nz = p > 0
    h = float(-(p[nz] * np.log(p[nz])).sum())
    return p, h


def _binary_search_beta(
    dists_row: np.ndarray, perplexity: float, iters: int = 64, tol: float = 1e-7
) -> np.ndarray:
    target = math.log(perplexity)
    beta, lo, hi = 1.0, 0.0, np.inf
    probs = None
    for _ in range(iters):
        probs, h = _conditional_probs(dists_row, beta)
        diff = h - target
        if abs(diff) < tol:
            break
        if diff > 0:  # entropy too high -> sharpen
            lo = beta
            beta = beta * 2.0 if hi == np.inf else (beta + hi) / 2.0
        else:
            hi = beta
            beta = beta / 2.0 if lo == 0.0 else (beta + lo) / 2.0
    return probs


def joint_probabilities(X: np.ndarray, perplexity: float) -> np.ndarray:
    n = X.shape[0]
    dists = _pairwise_sq_dists(X)
    P = np.zeros((n, n))
    for i in range(n):
        row = np.delete(dists[i], i)
        probs = _binary_search_beta(row, perplexity)
        P[i, np.arange(n) != i] = probs
    P = (P + P.T) / (2.0 * n)
    return np.maximum(P, 1e-12)


def _kl_divergence(P: np.ndarray, Y: np.ndarray) -> float:
    Q, _ = _low_dim_affinities(Y)
    return float((P * np.log(P / Q)).sum())


def _low_dim_affinities(Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = _pairwise_sq_dists(Y)
    num = 1.0 / (1.0 + d)
    np.fill_diagonal(num, 0.0)
    Q = num / num.sum()
    return np.maximum(Q, 1e-12), num


@dataclass
class TSNEResult:
    coords: np.ndarray
    kl_final: float
    kl_post_exaggeration: float
    perplexity: float
    seed: int


def tsne(
    X: np.ndarray,
    perplexity: float = 30.0,
    iters: int = 1000,
    seed: int = 0,
    learning_rate: float = 200.0,
) -> TSNEResult:
    """Exact t-SNE to 2D.  Perplexity auto-reduces to floor((n-1)/3) when the
    population is too small for the requested value."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 4:
        raise ValueError(f"t-SNE needs at least 4 points, got {n}")
    max_perplexity = (n - 1) // 3
    perplexity = float(min(perplexity, max_perplexity))
    perplexity = max(perplexity, 1.0)

    P = joint_probabilities(X, perplexity)
    rng = np.random.default_rng(seed)
    Y = rng.normal(0.0, 1e-4, size=(n, 2))
    velocity = np.zeros_like(Y)
    gains = np.ones_like(Y)
    kl_post_exaggeration = np.inf

    exaggerated = P * EXAGGERATION_FACTOR
    for it in range(1, iters + 1):
        target = exaggerated if it <= EXAGGERATION_ITERS else P
        Q, num = _low_dim_affinities(Y)
        coeff = (target - Q) * num
        grad = 4.0 * ((np.diag(coeff.sum(axis=1)) - coeff) @ Y)

        momentum = 0.5 if it <= EXAGGERATION_ITERS else 0.8
        same_sign = np.sign(grad) == np.sign(velocity)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        velocity = momentum * velocity - learning_rate * gains * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)

        if it == EXAGGERATION_ITERS:
            kl_post_exaggeration = _kl_divergence(P, Y)

    kl_final = _kl_divergence(P, Y)
    if iters <= EXAGGERATION_ITERS:
        kl_post_exaggeration = kl_final
    return TSNEResult(
        coords=Y,
        kl_final=kl_final,
        kl_post_exaggeration=kl_post_exaggeration,
        perplexity=perplexity,
        seed=seed,
    )


@dataclass
class Projection2D:
    channel: str
    positions: dict[PlayerId, tuple[float, float]]
    seed: int
    perplexity: float
    kl_final: float
    kl_post_exaggeration: float

    def to_dict(self) -> dict:
        return {
            "channel": self.channel,
            "positions": {str(p): list(xy) for p, xy in sorted(self.positions.items())},
            "seed": self.seed,
            "perplexity": self.perplexity,
            "kl_final": self.kl_final,
            "kl_post_exaggeration": self.kl_post_exaggeration,
        }


def project_channel(
    fs: FeatureSet,
    channel: str,
    perplexity: float = 30.0,
    iters: int = 1000,
    seed: int = 0,
) -> Projection2D:
    result = tsne(fs.channels[channel], perplexity=perplexity, iters=iters, seed=seed)
    positions = {
        pid: (float(result.coords[i, 0]), float(result.coords[i, 1]))
        for i, pid in enumerate(fs.players)
    }
    return Projection2D(
        channel=channel,
        positions=positions,
        seed=seed,
        perplexity=result.perplexity,
        kl_final=result.kl_final,
        kl_post_exaggeration=result.kl_post_exaggeration,
    )


# ---------------------------------------------------------------------------
# hexagonal binning (pointy-top, axial coordinates)
# ---------------------------------------------------------------------------


def hex_center(q: int, r: int, radius: float) -> tuple[float, float]:
    return (radius * math.sqrt(3.0) * (q + r / 2.0), radius * 1.5 * r)


def point_to_hex(x: float, y: float, radius: float) -> tuple[int, int]:
    """Axial coordinates of the pointy-top hex containing (x, y), via cube
    rounding."""
    qf = (math.sqrt(3.0) / 3.0 * x - y / 3.0) / radius
    rf = (2.0 / 3.0 * y) / radius
    sf = -qf - rf
    q, r, s = round(qf), round(rf), round(sf)
    dq, dr, ds = abs(q - qf), abs(r - rf), abs(s - sf)
    if dq > dr and dq > ds:
        q = -r - s
    elif dr > ds:
        r = -q - s
    return int(q), int(r)


@dataclass
class HexBin:
    q: int
    r: int
    count: int
    members: list[PlayerId]
    channel_means: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "r": self.r,
            "count": self.count,
            "members": self.members,
            "channel_means": self.channel_means,
        }


@dataclass
class HexbinGrid:
    radius: float
    bins: dict[tuple[int, int], HexBin]

    def total_count(self) -> int:
        return sum(b.count for b in self.bins.values())

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "bins": [b.to_dict() for _, b in sorted(self.bins.items())],
        }


def hexbin(
    proj: Projection2D,
    radius: float,
    summaries: Mapping[PlayerId, Mapping[str, float]] | None = None,
) -> HexbinGrid:
    """Assign every projected player to exactly one hex; per-bin payload is
    the member count plus mean per-channel summary values (tooltip data)."""
    if radius <= 0:
        raise ValueError(f"hex radius must be positive, got {radius}")
    buckets: dict[tuple[int, int], list[PlayerId]] = {}
    for pid, (x, y) in sorted(proj.positions.items()):
        key = point_to_hex(x, y, radius)
        buckets.setdefault(key, []).append(pid)
    bins = {}
    for (q, r), members in buckets.items():
        means: dict[str, float] = {}
        if summaries:
            keys = sorted({k for m in members for k in summaries.get(m, {})})
            for key in keys:
                means[key] = float(
                    np.mean([summaries[m][key] for m in members if m in summaries])
                )
        bins[(q, r)] = HexBin(
            q=q, r=r, count=len(members), members=members, channel_means=means
        )
    return HexbinGrid(radius=radius, bins=bins)


# ---------------------------------------------------------------------------
# radial band layout
# ---------------------------------------------------------------------------


@dataclass
class RadialLayout:
    generated_for: PlayerId
    channel: str
    # player -> (angle in radians, ring radius)
    points: dict[PlayerId, tuple[float, float]]
    ring_radii: tuple[float, float, float, float] = (1.0, 2.0, 3.0, 4.0)

    def to_dict(self) -> dict:
        return {
            "generated_for": self.generated_for,
            "channel": self.channel,
            "ring_radii": list(self.ring_radii),
            "points": {
                str(p): {"angle": a, "radius": r}
                for p, (a, r) in sorted(self.points.items())
            },
        }


def radial_layout(bc: BandedCandidates, seed: int = 0) -> RadialLayout:
    """Band i sits on the ring of radius i+1; angular positions are seeded
    uniform draws, deterministic per seed."""
    rng = np.random.default_rng(seed)
    points: dict[PlayerId, tuple[float, float]] = {}
    for band_index, band in enumerate(bc.bands):
        radius = float(band_index + 1)
        for pid, _ in band:
            angle = float(rng.uniform(0.0, 2.0 * math.pi))
            points[pid] = (angle, radius)
    return RadialLayout(
        generated_for=bc.generated_for, channel=bc.channel, points=points
    )
