"""Command-line interface: synthetic generation, log ingestion, feature
extraction, batch recommendation, ranker evaluation, and serving the HTTP
API."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .config import AppConfig, load_config
from .data import (
    SyntheticConfig,
    dataset_summary,
    generate_synthetic,
    load_avatar_embeddings,
    parse_logs,
    write_logs,
)
from .engine import Engine
from .features import build_preferences, export_features
from .pipeline import baseline_ratio, read_ratio
from .ranker import auc_score, build_training_set, evaluate, train_gbdt


def _config(path: str | None, **overrides) -> AppConfig:
    return load_config(path, **overrides) if path or overrides else AppConfig()


@click.group()
def main() -> None:
    """Similarity-diversity workbench for multi-channel friend
    recommendations."""


@main.command()
@click.option("--players", default=500, show_default=True)
@click.option("--groups", default=3, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--span", default=60, show_default=True)
@click.option("--split", default=40, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def generate(players: int, groups: int, seed: int, span: int, split: int, out: str):
    """Generate a synthetic population and write it in the log format."""
    cfg = SyntheticConfig(
        n_players=players, n_groups=groups, seed=seed, span_days=span, split_day=split
    )
    ds = generate_synthetic(cfg)
    write_logs(ds, out)
    click.echo(json.dumps(dataset_summary(ds)))


@main.command()
@click.option("--logs", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False))
def ingest(logs: str, embeddings: str | None):
    """Parse and validate a log file; print the dataset summary."""
    ds = parse_logs(logs)
    if embeddings:
        ds.avatar_visual_embeddings.update(load_avatar_embeddings(embeddings))
    click.echo(json.dumps(dataset_summary(ds)))


@main.command()
@click.option("--logs", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--seed", default=0, show_default=True)
def extract(logs: str, out: str, seed: int):
    """Build the four preference channels and dump them as columnar text."""
    ds = parse_logs(logs)
    fs = build_preferences(ds, seed=seed)
    export_features(fs, out)
    click.echo(f"wrote {sum(m.shape[1] for m in fs.channels.values())} columns "
               f"x {len(fs.players)} players to {out}")


@main.command()
@click.option("--logs", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--ratio", "ratio_path", type=click.Path(exists=True, dir_okay=False),
              help="Preference-ratio JSON; defaults to the baseline ratio.")
@click.option("--player", "players_opt", type=int, multiple=True,
              help="Player id(s); defaults to every player.")
@click.option("--n", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "model_path", type=click.Path(dir_okay=False),
              help="model file to load if present, else train and save there")
def recommend(logs, ratio_path, players_opt, n, seed, config_path, model_path):
    """Emit top@N lists with SD metrics as tab-separated text."""
    config = _config(config_path, seed=seed)
    ds = parse_logs(logs)
    engine = Engine.from_dataset(ds, config)
    if model_path and Path(model_path).exists():
        from .ranker import GBDTModel

        engine.model = GBDTModel.load(model_path)
    ratio = read_ratio(ratio_path) if ratio_path else baseline_ratio()
    targets = list(players_opt) if players_opt else sorted(ds.player_ids())
    engine.ensure_model()
    if model_path and not Path(model_path).exists():
        engine.model.save(model_path)
    click.echo("player\trank\tcandidate\tprobability\tcontent_diversity\ttotal_sim\tfri_sim")
    for player in targets:
        rec = engine.recommend(player, ratio, seed=seed, n=n)
        for position, (candidate, prob) in enumerate(rec.ranked.entries, start=1):
            click.echo(
                f"{player}\t{position}\t{candidate}\t{prob:.6f}"
                f"\t{rec.sd.content_diversity:.6f}\t{rec.sd.total_sim:.6f}"
                f"\t{rec.sd.fri_sim:.6f}"
            )


@main.command("evaluate")
@click.option("--logs", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--test-fraction", default=0.25, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def evaluate_cmd(logs, seed, test_fraction, config_path):
    """Train the ranker on a player-disjoint split and report test metrics."""
    config = _config(config_path, seed=seed)
    ds = parse_logs(logs)
    engine = Engine.from_dataset(ds, config)
    X, y, pairs = build_training_set(ds, engine.ctx, seed=seed)
    rng = np.random.default_rng(seed)
    players = sorted({p for p, _ in pairs})
    n_test = max(1, int(len(players) * test_fraction))
    test_players = set(rng.choice(players, size=n_test, replace=False))
    mask = np.array([p in test_players for p, _ in pairs])
    if mask.all() or not mask.any():
        raise click.ClickException("degenerate split; adjust --test-fraction")
    g = config.gbdt
    model = train_gbdt(
        X[~mask], y[~mask],
        learning_rate=g.learning_rate, subsample=g.subsample,
        max_depth=g.max_depth, n_trees=g.n_trees, min_leaf=g.min_leaf, seed=seed,
    )
    metrics = evaluate(model, X[mask], y[mask])
    click.echo(json.dumps({k: round(v, 4) for k, v in metrics.items()}))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--data-dir", type=click.Path(file_okay=False))
def serve(host, port, config_path, data_dir):
    """Start the HTTP JSON API."""
    import uvicorn

    overrides = {"data_dir": data_dir} if data_dir else {}
    config = _config(config_path, **overrides)
    from .service import create_app

    uvicorn.run(create_app(config), host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
