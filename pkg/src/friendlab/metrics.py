"""Similarity-diversity and recommendation-quality metrics, plus the
per-iteration history that backs the result-comparison view.

The SD triple is (content_diversity, total_sim, fri_sim); lower similarity
means a more diverse list.  All three default to the baseline channel and are
reported raw, never collapsed into one scalar.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .data import PlayerId
from .features import FeatureSet
from .pipeline import cosine


@dataclass(frozen=True)
class SDMetrics:
    content_diversity: float
    total_sim: float
    fri_sim: float

    def to_dict(self) -> dict:
        return {
            "content_diversity": self.content_diversity,
            "total_sim": self.total_sim,
            "fri_sim": self.fri_sim,
        }


@dataclass(frozen=True)
class QualityMetrics:
    recall: float
    precision: float
    f1: float
    hit_rate: float

    def to_dict(self) -> dict:
        return {
            "recall": self.recall,
            "precision": self.precision,
            "f1": self.f1,
            "hit_rate": self.hit_rate,
        }


def _vector(fs: FeatureSet, player: PlayerId, channel: str) -> np.ndarray:
    if player not in fs.index:
        raise KeyError(f"unknown player {player}")
    return fs.vector(player, channel)


def content_diversity(
    recs: Sequence[PlayerId], fs: FeatureSet, channel: str = "baseline"
) -> float:
    """1 - mean pairwise cosine among the recommended candidates, clamped to
    [0, 1].  Duplicates collapse; fewer than two distinct candidates score 0."""
    unique = list(dict.fromkeys(recs))
    if len(unique) < 2:
        return 0.0
    vectors = [_vector(fs, pid, channel) for pid in unique]
    sims = [
        cosine(vectors[i], vectors[j])
        for i in range(len(vectors))
        for j in range(i + 1, len(vectors))
    ]
    return float(np.clip(1.0 - np.mean(sims), 0.0, 1.0))


def total_sim(
    player: PlayerId,
    recs: Sequence[PlayerId],
    fs: FeatureSet,
    channel: str = "baseline",
) -> float:
    """Mean cosine between the player and each recommended candidate."""
    if not recs:
        raise ValueError("total_sim needs a nonempty recommendation list")
    target = _vector(fs, player, channel)
    return float(np.mean([cosine(target, _vector(fs, pid, channel)) for pid in recs]))


def fri_sim(
    player: PlayerId,
    recs: Sequence[PlayerId],
    friends: Iterable[PlayerId],
    fs: FeatureSet,
    channel: str = "baseline",
) -> float:
    """Mean cosine over all (recommended candidate, existing friend) pairs;
    0 when the player has no friends yet."""
    if not recs:
        raise ValueError("fri_sim needs a nonempty recommendation list")
    friends = sorted(friends)
    if not friends:
        return 0.0
    rec_vectors = [_vector(fs, pid, channel) for pid in recs]
    friend_vectors = [_vector(fs, pid, channel) for pid in friends]
    sims = [cosine(r, f) for r in rec_vectors for f in friend_vectors]
    return float(np.mean(sims))


def sd_metrics(
    player: PlayerId,
    recs: Sequence[PlayerId],
    friends: Iterable[PlayerId],
    fs: FeatureSet,
    channel: str = "baseline",
) -> SDMetrics:
    return SDMetrics(
        content_diversity=content_diversity(recs, fs, channel),
        total_sim=total_sim(player, recs, fs, channel),
        fri_sim=fri_sim(player, recs, friends, fs, channel),
    )


def quality(
    recs: Sequence[PlayerId], ground_truth: Iterable[PlayerId], n: int
) -> QualityMetrics:
    """recall = hits/|GT| (0 for empty GT), precision = hits/n, F1 harmonic,
    hit_rate indicates at least one hit."""
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    gt = set(ground_truth)
    hits = len(set(recs) & gt)
    recall = hits / len(gt) if gt else 0.0
    precision = hits / n
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return QualityMetrics(
        recall=recall, precision=precision, f1=f1, hit_rate=1.0 if hits else 0.0
    )


def mean_sd(metrics: Sequence[SDMetrics]) -> SDMetrics:
    if not metrics:
        raise ValueError("cannot average an empty metric list")
    return SDMetrics(
        content_diversity=float(np.mean([m.content_diversity for m in metrics])),
        total_sim=float(np.mean([m.total_sim for m in metrics])),
        fri_sim=float(np.mean([m.fri_sim for m in metrics])),
    )


def mean_quality(metrics: Sequence[QualityMetrics]) -> QualityMetrics:
    if not metrics:
        raise ValueError("cannot average an empty metric list")
    return QualityMetrics(
        recall=float(np.mean([m.recall for m in metrics])),
        precision=float(np.mean([m.precision for m in metrics])),
        f1=float(np.mean([m.f1 for m in metrics])),
        hit_rate=float(np.mean([m.hit_rate for m in metrics])),
    )


# ---------------------------------------------------------------------------
# iteration history
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    group_id: str
    sd: SDMetrics
    quality: QualityMetrics
    ratio_assignment: dict[str, str]  # player id (as str) -> ratio id

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "group_id": self.group_id,
            "sd": self.sd.to_dict(),
            "quality": self.quality.to_dict(),
            "ratio_assignment": dict(sorted(self.ratio_assignment.items())),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "IterationRecord":
        return cls(
            iteration=int(obj["iteration"]),
            group_id=str(obj["group_id"]),
            sd=SDMetrics(**obj["sd"]),
            quality=QualityMetrics(**obj["quality"]),
            ratio_assignment=dict(obj["ratio_assignment"]),
        )


@dataclass
class IterationHistory:
    """Append-only per-session metric history with monotone iteration ids."""

    records: list[IterationRecord] = field(default_factory=list)

    def record(
        self,
        group_id: str,
        sd: SDMetrics,
        qual: QualityMetrics,
        ratio_assignment: dict[PlayerId, str],
    ) -> IterationRecord:
        rec = IterationRecord(
            iteration=len(self.records) + 1,
            group_id=group_id,
            sd=sd,
            quality=qual,
            ratio_assignment={str(k): v for k, v in ratio_assignment.items()},
        )
        self.records.append(rec)
        return rec

    def to_dicts(self) -> list[dict]:
        return [r.to_dict() for r in self.records]

    @classmethod
    def from_dicts(cls, objs: list[dict]) -> "IterationHistory":
        return cls(records=[IterationRecord.from_dict(o) for o in objs])

    def export_table(self, path: str | Path) -> None:
        """Tabular text export for offline plotting."""
        header = (
            "iteration\tgroup_id\tcontent_diversity\ttotal_sim\tfri_sim"
            "\trecall\tprecision\tf1\thit_rate"
        )
        lines = [header]
        for r in self.records:
            lines.append(
                f"{r.iteration}\t{r.group_id}\t{r.sd.content_diversity:.6f}"
                f"\t{r.sd.total_sim:.6f}\t{r.sd.fri_sim:.6f}\t{r.quality.recall:.6f}"
                f"\t{r.quality.precision:.6f}\t{r.quality.f1:.6f}"
                f"\t{r.quality.hit_rate:.6f}"
            )
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
