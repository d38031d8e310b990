"""End-to-end recommendation driver: candidate generation, band sampling,
fusion, ranking, and SD/quality measurement for one player or a whole group
under assigned preference ratios.  Shared by the CLI, the HTTP service, and
the verification suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import AppConfig
from .data import Dataset, PlayerId, dataset_summary
from .features import FeatureSet, build_preferences, channel_summaries
from .metrics import (
    QualityMetrics,
    SDMetrics,
    mean_quality,
    mean_sd,
    quality,
    sd_metrics,
)
from .pipeline import (
    BandedCandidates,
    ChannelCandidates,
    FusedSet,
    PreferenceRatio,
    band_classify,
    fuse,
    generate_candidates,
    sample,
)
from .ranker import (
    GBDTModel,
    PairContext,
    RankedList,
    build_training_set,
    pair_feature_matrix,
    train_gbdt,
)


@dataclass
class Recommendation:
    player: PlayerId
    banded: dict[str, BandedCandidates]
    samples: dict[str, ChannelCandidates]
    fused: FusedSet
    ranked: RankedList
    sd: SDMetrics
    quality: QualityMetrics


@dataclass
class Engine:
    """A loaded dataset with features, pair context, and a lazily trained
    ranking model."""

    ds: Dataset
    fs: FeatureSet
    ctx: PairContext
    config: AppConfig
    model: GBDTModel | None = None
    summaries: dict[PlayerId, dict[str, float]] = field(default_factory=dict)

    @classmethod
    def from_dataset(cls, ds: Dataset, config: AppConfig | None = None) -> "Engine":
        config = config or AppConfig()
        fs = build_preferences(
            ds,
            embedding_dims=config.embedding_dims,
            walk_length=config.walk_length,
            walks_per_node=config.walks_per_node,
            sgns_window=config.sgns_window,
            short_window_days=config.short_window_days,
            displayed_hash_buckets=config.displayed_hash_buckets,
            seed=config.seed,
        )
        ctx = PairContext.build(ds, fs, window_days=config.short_window_days)
        return cls(
            ds=ds, fs=fs, ctx=ctx, config=config, summaries=channel_summaries(fs)
        )

    def summary(self) -> dict:
        return dataset_summary(self.ds)

    def ensure_model(self, progress=None, should_stop=None) -> GBDTModel:
        if self.model is None:
            X, y, _ = build_training_set(self.ds, self.ctx, seed=self.config.seed)
            g = self.config.gbdt
            self.model = train_gbdt(
                X,
                y,
                learning_rate=g.learning_rate,
                subsample=g.subsample,
                max_depth=g.max_depth,
                n_trees=g.n_trees,
                min_leaf=g.min_leaf,
                seed=self.config.seed,
                progress=progress,
                should_stop=should_stop,
            )
        return self.model

    # -- single-player mediation steps ------------------------------------

    def banded_candidates(self, player: PlayerId, channel: str) -> BandedCandidates:
        cc = generate_candidates(
            self.fs, self.ds, player, channel, k=self.config.candidates_k
        )
        return band_classify(cc)

    def sample_channels(
        self,
        player: PlayerId,
        ratio: PreferenceRatio,
        seed: int | None = None,
    ) -> tuple[dict[str, BandedCandidates], dict[str, ChannelCandidates]]:
        seed = self.config.seed if seed is None else seed
        banded: dict[str, BandedCandidates] = {}
        samples: dict[str, ChannelCandidates] = {}
        for channel in ratio.active_channels:
            if ratio.inter.weights.get(channel, 0.0) <= 0.0:
                continue
            bc = self.banded_candidates(player, channel)
            banded[channel] = bc
            samples[channel] = sample(bc, ratio.intra.for_channel(channel), seed=seed)
        return banded, samples

    def recommend(
        self,
        player: PlayerId,
        ratio: PreferenceRatio,
        seed: int | None = None,
        n: int | None = None,
    ) -> Recommendation:
        n = self.config.top_n if n is None else n
        model = self.ensure_model()
        banded, samples = self.sample_channels(player, ratio, seed=seed)
        fused = fuse(samples, ratio.inter, m=self.config.fused_m)
        from .ranker import rank as rank_fused

        ranked = rank_fused(model, self.ctx, player, fused, n=n)
        rec = self.ds.by_id()[player]
        sd = sd_metrics(player, ranked.ids(), rec.friends_before, self.fs)
        qual = quality(ranked.ids(), rec.friends_after, n=max(len(ranked.ids()), 1))
        return Recommendation(
            player=player,
            banded=banded,
            samples=samples,
            fused=fused,
            ranked=ranked,
            sd=sd,
            quality=qual,
        )

    # -- group evaluation ---------------------------------------------------

    def evaluate_group(
        self,
        assignment: dict[PlayerId, PreferenceRatio],
        seed: int | None = None,
        n: int | None = None,
    ) -> tuple[SDMetrics, QualityMetrics, dict[PlayerId, SDMetrics]]:
        """Mean SD / quality over a group, each player recommended under
        their assigned ratio.  Ranking is batched across players."""
        n = self.config.top_n if n is None else n
        model = self.ensure_model()
        pools: list[tuple[PlayerId, list[PlayerId]]] = []
        blocks: list[np.ndarray] = []
        for player in sorted(assignment):
            ratio = assignment[player]
            _, samples = self.sample_channels(player, ratio, seed=seed)
            fused = fuse(samples, ratio.inter, m=self.config.fused_m)
            candidates = fused.ids()
            if not candidates:
                continue
            pools.append((player, candidates))
            blocks.append(pair_feature_matrix(self.ctx, player, candidates))
        if not pools:
            raise ValueError("no candidates for any group member")
        proba = model.predict_proba(np.vstack(blocks))
        by_id = self.ds.by_id()
        sds: list[SDMetrics] = []
        quals: list[QualityMetrics] = []
        per_player: dict[PlayerId, SDMetrics] = {}
        offset = 0
        for player, candidates in pools:
            scores = proba[offset : offset + len(candidates)]
            offset += len(candidates)
            pids = np.asarray(candidates)
            order = np.lexsort((pids, -scores))[: min(n, len(candidates))]
            recs = [int(pids[i]) for i in order]
            rec = by_id[player]
            sd = sd_metrics(player, recs, rec.friends_before, self.fs)
            sds.append(sd)
            per_player[player] = sd
            quals.append(quality(recs, rec.friends_after, n=max(len(recs), 1)))
        return mean_sd(sds), mean_quality(quals), per_player
