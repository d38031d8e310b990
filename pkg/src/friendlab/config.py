"""Runtime defaults for the recommendation workbench.

Every tunable referenced by the pipeline, ranker, propagation, and projection
code lives here so that the CLI, the HTTP service, and tests share one source
of truth.  Values can be overridden by a JSON config file or selectively via
keyword arguments; the data directory additionally honours the
``FRIENDLAB_DATA`` environment variable.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class GBDTConfig:
    learning_rate: float = 0.06
    subsample: float = 0.56
    max_depth: int = 9
    n_trees: int = 100
    min_leaf: int = 20


@dataclass(frozen=True)
class AppConfig:
    # candidate generation / fusion / ranking
    candidates_k: int = 400
    fused_m: int = 100
    top_n: int = 10
    # propagation substrate
    knn_k: int = 10
    sigma: float = 0.5
    alpha: float = 0.85
    propagation_tol: float = 1e-6
    propagation_max_iter: int = 1000
    uncertain_k: int = 5
    # 2D projection; hex radius calibrated so the densest bin on the
    # reference synthetic fixture holds at most 5% of the population
    tsne_perplexity: float = 30.0
    tsne_iters: int = 1000
    hex_radius: float = 1.0
    # feature extraction
    embedding_dims: int = 64
    walk_length: int = 20
    walks_per_node: int = 10
    sgns_window: int = 5
    short_window_days: int = 7
    displayed_hash_buckets: int = 16
    # model
    gbdt: GBDTConfig = field(default_factory=GBDTConfig)
    # global seed for service-side deterministic operations
    seed: int = 0
    data_dir: str = "friendlab-data"

    def resolved_data_dir(self) -> Path:
        return Path(os.environ.get("FRIENDLAB_DATA", self.data_dir))


def load_config(path: str | Path | None = None, **overrides) -> AppConfig:
    """Build an AppConfig from an optional JSON file plus keyword overrides.

    The file may nest GBDT settings under a "gbdt" key; unknown keys are
    rejected so typos fail loudly.
    """
    values: dict = {}
    if path is not None:
        values = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(values, dict):
            raise ValueError(f"config file {path} must hold a JSON object")
    values.update(overrides)

    gbdt_values = values.pop("gbdt", {})
    known = {f.name for f in dataclasses.fields(AppConfig)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    known_gbdt = {f.name for f in dataclasses.fields(GBDTConfig)}
    unknown_gbdt = set(gbdt_values) - known_gbdt
    if unknown_gbdt:
        raise ValueError(f"unknown gbdt config keys: {sorted(unknown_gbdt)}")
    return AppConfig(gbdt=GBDTConfig(**gbdt_values), **values)
