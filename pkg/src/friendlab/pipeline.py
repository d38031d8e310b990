"""Multi-channel candidate mediation: per-channel top-K retrieval by cosine,
concentric-band classification by rank quartile, frequency-controlled
within-band sampling, and weighted cross-channel fusion into one pool.

Band 0 is the innermost (most similar) band.  All sampling and fusion steps
are pure functions of their inputs plus an explicit seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .data import Dataset, PlayerId
from .features import CHANNELS, FeatureSet

N_BANDS = 4


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; zero vectors compare as 0 by convention."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class ChannelCandidates:
    channel: str
    generated_for: PlayerId
    # (candidate, similarity), sorted by similarity desc, ties by id asc
    entries: tuple[tuple[PlayerId, float], ...]

    def ids(self) -> list[PlayerId]:
        return [pid for pid, _ in self.entries]


def generate_candidates(
    fs: FeatureSet,
    ds: Dataset,
    player: PlayerId,
    channel: str,
    k: int = 400,
) -> ChannelCandidates:
    """Top-k most similar players on one channel, excluding the player and
    their existing friends.  Ties break by ascending id."""
    if player not in fs.index:
        raise KeyError(f"unknown player {player}")
    matrix = fs.channels[channel]
    row = fs.index[player]
    target = matrix[row]
    norms = fs.norms(channel)
    tn = norms[row]
    sims = np.zeros(len(fs.players))
    if tn > 0.0:
        ok = norms > 0.0
        sims[ok] = (matrix[ok] @ target) / (norms[ok] * tn)
    sims = np.clip(sims, -1.0, 1.0)

    excluded = set(ds.by_id()[player].friends_before) | {player}
    pids = np.asarray(fs.players)
    keep = np.asarray([pid not in excluded for pid in fs.players])
    pids, sims = pids[keep], sims[keep]
    order = np.lexsort((pids, -sims))[: max(k, 0)]
    entries = tuple((int(pids[i]), float(sims[i])) for i in order)
    return ChannelCandidates(channel=channel, generated_for=player, entries=entries)


@dataclass(frozen=True)
class BandedCandidates:
    channel: str
    generated_for: PlayerId
    bands: tuple[tuple[tuple[PlayerId, float], ...], ...]  # band 0 = innermost

    def all_entries(self) -> list[tuple[PlayerId, float]]:
        return [entry for band in self.bands for entry in band]


def band_classify(cc: ChannelCandidates) -> BandedCandidates:
    """Partition ranked candidates into four contiguous rank-quartile bands;
    band sizes differ by at most one, remainders filling inner bands first."""
    n = len(cc.entries)
    if n == 0:
        raise ValueError("cannot band an empty candidate list")
    base, extra = divmod(n, N_BANDS)
    bands = []
    cursor = 0
    for b in range(N_BANDS):
        size = base + (1 if b < extra else 0)
        bands.append(tuple(cc.entries[cursor : cursor + size]))
        cursor += size
    return BandedCandidates(
        channel=cc.channel, generated_for=cc.generated_for, bands=tuple(bands)
    )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def sample(
    bc: BandedCandidates, freqs: Sequence[float], seed: int = 0
) -> ChannelCandidates:
    """Draw round(freq_i * |band_i|) candidates uniformly without replacement
    from each band; frequency 1 keeps the whole band.  Output is re-sorted by
    similarity (ties by ascending id)."""
    if len(freqs) != N_BANDS:
        raise ValueError(f"need {N_BANDS} frequencies, got {len(freqs)}")
    for f in freqs:
        if not (0.0 <= f <= 1.0):
            raise ValueError(f"sampling frequency {f} outside [0, 1]")
    rng = np.random.default_rng(seed)
    chosen: list[tuple[PlayerId, float]] = []
    for f, band in zip(freqs, bc.bands):
        take = _round_half_up(f * len(band))
        if take >= len(band):
            chosen.extend(band)
        elif take > 0:
            picks = rng.choice(len(band), size=take, replace=False)
            chosen.extend(band[i] for i in sorted(picks))
    chosen.sort(key=lambda e: (-e[1], e[0]))
    return ChannelCandidates(
        channel=bc.channel, generated_for=bc.generated_for, entries=tuple(chosen)
    )


# ---------------------------------------------------------------------------
# preference ratios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntraRatio:
    """Per-channel band sampling frequencies (4 per channel, each in [0,1])."""

    freqs: Mapping[str, tuple[float, float, float, float]]

    def __post_init__(self) -> None:
        for channel, values in self.freqs.items():
            if len(values) != N_BANDS:
                raise ValueError(f"{channel}: need {N_BANDS} frequencies")
            for f in values:
                if not (0.0 <= f <= 1.0):
                    raise ValueError(f"{channel}: frequency {f} outside [0, 1]")

    def for_channel(self, channel: str) -> tuple[float, float, float, float]:
        return tuple(self.freqs.get(channel, (1.0, 1.0, 1.0, 1.0)))


@dataclass(frozen=True)
class InterRatio:
    """Per-channel fusion weights, non-negative, summing to one."""

    weights: Mapping[str, float]

    def __post_init__(self) -> None:
        if not self.weights:
            raise ValueError("need at least one channel weight")
        for channel, w in self.weights.items():
            if w < 0.0:
                raise ValueError(f"{channel}: negative weight {w}")
        total = sum(self.weights.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {total}, expected 1")

    def channels(self) -> list[str]:
        return sorted(self.weights)


@dataclass(frozen=True)
class PreferenceRatio:
    ratio_id: str
    intra: IntraRatio
    inter: InterRatio

    def __post_init__(self) -> None:
        if not self.inter.weights:
            raise ValueError("ratio needs at least one active channel")

    @property
    def active_channels(self) -> list[str]:
        return self.inter.channels()

    def to_dict(self) -> dict:
        return {
            "ratio_id": self.ratio_id,
            "intra": {c: list(v) for c, v in sorted(self.intra.freqs.items())},
            "inter": {c: w for c, w in sorted(self.inter.weights.items())},
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "PreferenceRatio":
        return cls(
            ratio_id=str(obj["ratio_id"]),
            intra=IntraRatio({c: tuple(v) for c, v in obj["intra"].items()}),
            inter=InterRatio(dict(obj["inter"])),
        )


def baseline_ratio() -> PreferenceRatio:
    """The reserved comparison ratio: all candidates from the baseline
    channel, every band kept."""
    return PreferenceRatio(
        ratio_id="baseline",
        intra=IntraRatio({"baseline": (1.0, 1.0, 1.0, 1.0)}),
        inter=InterRatio({"baseline": 1.0}),
    )


def write_ratio(ratio: PreferenceRatio, path: str | Path) -> None:
    Path(path).write_text(json.dumps(ratio.to_dict(), indent=2) + "\n", encoding="utf-8")


def read_ratio(path: str | Path) -> PreferenceRatio:
    return PreferenceRatio.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# fusion
# ---------------------------------------------------------------------------


@dataclass
class FusedEntry:
    player: PlayerId
    sims: dict[str, float]  # similarity per channel where sampled
    members: set[str]  # channels that consumed this candidate

    def best_sim(self) -> float:
        return max(self.sims.values())


@dataclass
class FusedSet:
    target_size: int
    entries: list[FusedEntry]

    def ids(self) -> list[PlayerId]:
        return [e.player for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def fusion_quotas(inter: InterRatio, m: int) -> dict[str, int]:
    """round(w_c * m) slots per channel, the largest-weight channel absorbing
    the rounding correction so quotas sum to m."""
    if m <= 0:
        raise ValueError(f"target size must be positive, got {m}")
    channels = inter.channels()
    quotas = {c: _round_half_up(inter.weights[c] * m) for c in channels}
    drift = sum(quotas.values()) - m
    if drift != 0:
        largest = max(channels, key=lambda c: (inter.weights[c], c))
        quotas[largest] -= drift
        if quotas[largest] < 0:
            raise ValueError("rounding correction produced a negative quota")
    return quotas


def fuse(
    samples: Mapping[str, ChannelCandidates],
    inter: InterRatio,
    m: int = 100,
) -> FusedSet:
    """Merge per-channel samples under the fusion weights.

    Each channel consumes its quota from its sample in descending similarity.
    A candidate already taken by another channel still consumes the slot but
    merges into the existing entry's membership (one visual entity per
    candidate).  Slots left over when a channel exhausts its sample cascade
    to the remaining channels in descending-weight order.  Channels with
    weight zero never contribute.
    """
    active = {c for c, w in inter.weights.items() if w > 0.0}
    stray = set(samples) - set(inter.weights)
    missing = active - set(samples)
    if stray or missing:
        raise ValueError(
            f"weights cover {sorted(inter.weights)} but samples cover {sorted(samples)}"
        )
    quotas = fusion_quotas(inter, m)
    order = sorted(active, key=lambda c: (-inter.weights[c], c))
    cursors = {c: 0 for c in order}
    by_player: dict[PlayerId, FusedEntry] = {}
    entry_order: list[PlayerId] = []

    def consume(channel: str, budget: int) -> int:
        used = 0
        entries = samples[channel].entries
        while used < budget and cursors[channel] < len(entries):
            pid, sim = entries[cursors[channel]]
            cursors[channel] += 1
            used += 1
            entry = by_player.get(pid)
            if entry is None:
                by_player[pid] = FusedEntry(
                    player=pid, sims={channel: sim}, members={channel}
                )
                entry_order.append(pid)
            else:
                entry.sims[channel] = sim
                entry.members.add(channel)
        return used

    slots_left = 0
    for channel in order:
        want = quotas[channel] + slots_left
        used = consume(channel, want)
        slots_left = want - used
    # wrap-around pass: spend leftover slots on channels that still have
    # unconsumed candidates
    while slots_left > 0:
        progressed = False
        for channel in order:
            if slots_left == 0:
                break
            used = consume(channel, slots_left)
            slots_left -= used
            progressed = progressed or used > 0
        if not progressed:
            break

    return FusedSet(target_size=m, entries=[by_player[pid] for pid in entry_order])
