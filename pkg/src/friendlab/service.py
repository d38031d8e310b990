"""Session workflow and HTTP JSON API for the two-step mediation loop.

Step 1 (per representative): select a group (1.1), pick a representative
(1.2), mediate band frequencies and fusion weights (1.3), verify the SD ratio
of the ranked list (1.4), optionally loop back for re-adjustment, then assign
the tuned ratio.  Step 2: propagate assigned ratios across the group (2.1),
review group metrics and the uncertainty table (2.2), and re-mediate the
least certain players (2.3 loop).

Sessions persist as versioned JSON snapshots after every successful mutation;
any call that is illegal in the current step returns a structured 409 and
leaves the session untouched.  All payloads are view-model shaped so clients
render without recomputing metrics.
"""

from __future__ import annotations

import json
import threading
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .config import AppConfig
from .data import (
    Dataset,
    SyntheticConfig,
    generate_synthetic,
    parse_logs,
)
from .engine import Engine
from .features import CHANNELS
from .metrics import IterationHistory, sd_metrics
from .pipeline import (
    InterRatio,
    IntraRatio,
    PreferenceRatio,
    band_classify,
    fuse,
    generate_candidates,
    sample,
)
from .projection import Projection2D, hexbin, project_channel, radial_layout
from .propagation import (
    PropagationResult,
    build_similarity_graph,
    propagate,
    uncertain_players,
)
from .ranker import pair_feature_matrix

SNAPSHOT_VERSION = 1

STEP_GROUP = "1.1"
STEP_REPRESENTATIVE = "1.2"
STEP_MEDIATE = "1.3"
STEP_VERIFY = "1.4"
STEP_PROPAGATE = "2.1"
STEP_EVALUATE = "2.2"

GUIDANCE_STEPS = ("1.1", "1.2", "1.3", "1.4", "2.1", "2.2")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def illegal_state(current: str, operation: str) -> ApiError:
    return ApiError(
        409,
        "illegal_state",
        f"operation '{operation}' is not allowed in step {current}",
    )


# ---------------------------------------------------------------------------
# session model
# ---------------------------------------------------------------------------


@dataclass
class Session:
    session_id: str
    dataset_id: str
    state: str = STEP_GROUP
    group_bins: dict[str, list[list[int]]] = field(default_factory=dict)
    group: list[int] = field(default_factory=list)
    representatives: list[int] = field(default_factory=list)
    current_rep: int | None = None
    # expert labels: player id (str) -> ratio id
    assignments: dict[str, str] = field(default_factory=dict)
    ratios: dict[str, dict] = field(default_factory=dict)
    ratio_counter: int = 0
    work: dict[str, Any] = field(default_factory=dict)
    ratio_table: list[dict] = field(default_factory=list)
    propagation: dict | None = None
    history: IterationHistory = field(default_factory=IterationHistory)
    job: dict[str, Any] = field(
        default_factory=lambda: {"name": None, "progress": 1.0, "cancelled": False}
    )

    def to_dict(self) -> dict:
        return {
            "version": SNAPSHOT_VERSION,
            "session_id": self.session_id,
            "dataset_id": self.dataset_id,
            "state": self.state,
            "group_bins": self.group_bins,
            "group": self.group,
            "representatives": self.representatives,
            "current_rep": self.current_rep,
            "assignments": self.assignments,
            "ratios": self.ratios,
            "ratio_counter": self.ratio_counter,
            "work": self.work,
            "ratio_table": self.ratio_table,
            "propagation": self.propagation,
            "history": self.history.to_dicts(),
            "job": self.job,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Session":
        if obj.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported session snapshot version {obj.get('version')}")
        return cls(
            session_id=obj["session_id"],
            dataset_id=obj["dataset_id"],
            state=obj["state"],
            group_bins=obj["group_bins"],
            group=[int(p) for p in obj["group"]],
            representatives=[int(p) for p in obj["representatives"]],
            current_rep=obj["current_rep"],
            assignments=dict(obj["assignments"]),
            ratios=dict(obj["ratios"]),
            ratio_counter=int(obj["ratio_counter"]),
            work=dict(obj["work"]),
            ratio_table=list(obj["ratio_table"]),
            propagation=obj["propagation"],
            history=IterationHistory.from_dicts(obj["history"]),
            job=dict(obj["job"]),
        )

    def guidance(self) -> list[dict]:
        """Step statuses for the guidance strip: completed / active / future."""
        reached = GUIDANCE_STEPS.index(self.state) if self.state in GUIDANCE_STEPS else 0
        rows = []
        for i, step in enumerate(GUIDANCE_STEPS):
            if i < reached:
                status = "completed"
            elif i == reached:
                status = "active"
            else:
                status = "future"
            rows.append({"step": step, "status": status})
        return rows

    def ratio_of(self, ratio_id: str) -> PreferenceRatio:
        if ratio_id not in self.ratios:
            raise ApiError(404, "unknown_ratio", f"ratio {ratio_id} is not registered")
        return PreferenceRatio.from_dict(self.ratios[ratio_id])


# ---------------------------------------------------------------------------
# stores
# ---------------------------------------------------------------------------


class WorkbenchStore:
    """Datasets (with engines and cached projections) plus persisted sessions."""

    def __init__(self, config: AppConfig):
        self.config = config
        self.data_dir = config.resolved_data_dir()
        self.sessions_dir = self.data_dir / "sessions"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self.engines: dict[str, Engine] = {}
        self.sources: dict[str, dict] = {}
        self.projections: dict[str, dict[str, Projection2D]] = {}
        self.hexgrids: dict[str, dict[str, dict]] = {}
        self.sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._load_registry()

    # -- persistence --------------------------------------------------------

    def _registry_path(self) -> Path:
        return self.data_dir / "datasets.json"

    def _load_registry(self) -> None:
        if self._registry_path().exists():
            self.sources = json.loads(self._registry_path().read_text(encoding="utf-8"))
        for path in sorted(self.sessions_dir.glob("*.json")):
            obj = json.loads(path.read_text(encoding="utf-8"))
            session = Session.from_dict(obj)
            self.sessions[session.session_id] = session

    def _save_registry(self) -> None:
        self._registry_path().write_text(
            json.dumps(self.sources, indent=2, sort_keys=True), encoding="utf-8"
        )

    def save_session(self, session: Session) -> None:
        path = self.sessions_dir / f"{session.session_id}.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(
            json.dumps(session.to_dict(), sort_keys=True), encoding="utf-8"
        )
        tmp.replace(path)

    def lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    # -- datasets -------------------------------------------------------------

    def _next_id(self, prefix: str, existing) -> str:
        numbers = [
            int(x.split("-")[-1])
            for x in existing
            if x.startswith(prefix) and x.split("-")[-1].isdigit()
        ]
        return f"{prefix}-{max(numbers, default=0) + 1}"

    def load_dataset(self, source: dict) -> tuple[str, Engine]:
        ds = self._build_dataset(source)
        engine = Engine.from_dataset(ds, self.config)
        with self._registry_lock:
            dataset_id = self._next_id("ds", self.sources)
            self.sources[dataset_id] = source
            self.engines[dataset_id] = engine
            self._save_registry()
        self._project(dataset_id, engine)
        return dataset_id, engine

    def _build_dataset(self, source: dict) -> Dataset:
        kind = source.get("kind")
        if kind == "logs":
            path = Path(source["path"])
            if not path.exists():
                raise ApiError(404, "not_found", f"log file {path} does not exist")
            return parse_logs(path)
        if kind == "synthetic":
            cfg = SyntheticConfig(**source.get("config", {}))
            return generate_synthetic(cfg)
        raise ApiError(400, "bad_source", f"unknown dataset source kind {kind!r}")

    def _project(self, dataset_id: str, engine: Engine) -> None:
        projections: dict[str, Projection2D] = {}
        grids: dict[str, dict] = {}
        for channel in CHANNELS:
            proj = project_channel(
                engine.fs,
                channel,
                perplexity=self.config.tsne_perplexity,
                iters=self.config.tsne_iters,
                seed=self.config.seed,
            )
            projections[channel] = proj
            grids[channel] = hexbin(
                proj, self.config.hex_radius, summaries=engine.summaries
            ).to_dict()
        self.projections[dataset_id] = projections
        self.hexgrids[dataset_id] = grids

    def engine_of(self, dataset_id: str) -> Engine:
        if dataset_id not in self.engines:
            if dataset_id not in self.sources:
                raise ApiError(404, "not_found", f"unknown dataset {dataset_id}")
            ds = self._build_dataset(self.sources[dataset_id])
            self.engines[dataset_id] = Engine.from_dataset(ds, self.config)
        return self.engines[dataset_id]

    def grids_of(self, dataset_id: str) -> dict[str, dict]:
        if dataset_id not in self.hexgrids:
            self._project(dataset_id, self.engine_of(dataset_id))
        return self.hexgrids[dataset_id]

    # -- sessions -------------------------------------------------------------

    def create_session(self, dataset_id: str) -> Session:
        if dataset_id not in self.sources and dataset_id not in self.engines:
            raise ApiError(404, "not_found", f"unknown dataset {dataset_id}")
        with self._registry_lock:
            session_id = self._next_id("s", self.sessions)
            session = Session(session_id=session_id, dataset_id=dataset_id)
            self.sessions[session_id] = session
        self.save_session(session)
        return session

    def session_of(self, session_id: str) -> Session:
        if session_id not in self.sessions:
            raise ApiError(404, "not_found", f"unknown session {session_id}")
        return self.sessions[session_id]


# ---------------------------------------------------------------------------
# workflow operations (pure functions over store + session)
# ---------------------------------------------------------------------------


def _player_attributes(engine: Engine, player: int) -> dict[str, float]:
    rec = engine.ds.by_id()[player]
    split = engine.ds.split_day
    attrs: dict[str, float] = {}
    for channel in CHANNELS:
        attrs[f"{channel}_summary"] = engine.summaries[player][channel]
    gameplay = engine.fs.vector(player, "gameplay")
    n_modes = len(engine.ds.modes)
    for m, mode in enumerate(engine.ds.modes):
        attrs[f"engagement_{mode}"] = float(gameplay[3 * n_modes + m])  # 7d window
    attrs["friend_count"] = float(len(rec.friends_before))
    attrs["inventory_size"] = float(len(rec.avatar_inventory))
    attrs["interaction_volume"] = float(np.log1p(rec.interaction_count(split)))
    return attrs


def select_group(store: WorkbenchStore, session: Session, bins: dict) -> dict:
    if session.state != STEP_GROUP:
        raise illegal_state(session.state, "select_group")
    if not bins or not any(v for v in bins.values()):
        raise ApiError(400, "empty_selection", "select at least one hexbin")
    grids = store.grids_of(session.dataset_id)
    members: set[int] = set()
    for channel, keys in bins.items():
        if channel not in grids:
            raise ApiError(400, "bad_channel", f"unknown channel {channel}")
        available = {(b["q"], b["r"]): b["members"] for b in grids[channel]["bins"]}
        for key in keys:
            q, r = int(key[0]), int(key[1])
            if (q, r) not in available:
                raise ApiError(404, "unknown_bin", f"no hexbin ({q}, {r}) in {channel}")
            members.update(available[(q, r)])
    if not members:
        raise ApiError(400, "empty_selection", "selected bins contain no players")
    engine = store.engine_of(session.dataset_id)
    session.group_bins = {c: [list(map(int, k)) for k in keys] for c, keys in bins.items()}
    session.group = sorted(members)
    session.state = STEP_REPRESENTATIVE
    store.save_session(session)
    return group_payload(engine, session)


def group_payload(engine: Engine, session: Session) -> dict:
    players = []
    for pid in session.group:
        rec = engine.ds.by_id()[pid]
        players.append(
            {
                "player": pid,
                "attributes": _player_attributes(engine, pid),
                "displayed_avatar": rec.displayed_avatar,
            }
        )
    names = sorted(players[0]["attributes"]) if players else []
    ranges = {
        name: [
            min(p["attributes"][name] for p in players),
            max(p["attributes"][name] for p in players),
        ]
        for name in names
    }
    return {
        "group_size": len(session.group),
        "attributes": names,
        "players": players,
        "ranges": ranges,
        "guidance": session.guidance(),
    }


def select_representative(store: WorkbenchStore, session: Session, player: int) -> dict:
    if session.state not in (STEP_REPRESENTATIVE, STEP_VERIFY):
        raise illegal_state(session.state, "select_representative")
    if player not in session.group:
        raise ApiError(404, "unknown_player", f"player {player} is not in the group")
    session.current_rep = player
    if player not in session.representatives:
        session.representatives.append(player)
    session.work = {"player": player}
    session.state = STEP_MEDIATE
    store.save_session(session)
    engine = store.engine_of(session.dataset_id)
    return {
        "player": player,
        "attributes": _player_attributes(engine, player),
        "guidance": session.guidance(),
    }


def run_sample(
    store: WorkbenchStore, session: Session, freqs: dict, seed: int | None
) -> dict:
    if session.state not in (STEP_MEDIATE, STEP_VERIFY):
        raise illegal_state(session.state, "sample")
    if session.current_rep is None:
        raise ApiError(409, "no_representative", "select a representative first")
    if not freqs:
        raise ApiError(400, "bad_freqs", "provide per-channel band frequencies")
    engine = store.engine_of(session.dataset_id)
    player = session.current_rep
    seed = engine.config.seed if seed is None else int(seed)
    channels_payload: dict[str, dict] = {}
    work_samples: dict[str, list] = dict(session.work.get("samples", {}))
    work_freqs: dict[str, list] = dict(session.work.get("freqs", {}))
    banded_sizes: dict[str, list[int]] = {}
    for channel, values in freqs.items():
        if channel not in engine.fs.channels:
            raise ApiError(400, "bad_channel", f"unknown channel {channel}")
        if len(values) != 4 or not all(0.0 <= float(f) <= 1.0 for f in values):
            raise ApiError(
                400, "bad_freqs", f"{channel}: need 4 frequencies in [0, 1]"
            )
        bc = engine.banded_candidates(player, channel)
        sampled = sample(bc, tuple(float(f) for f in values), seed=seed)
        layout = radial_layout(bc, seed=seed)
        from .metrics import content_diversity

        diversity = content_diversity(sampled.ids(), engine.fs)
        work_samples[channel] = [[pid, sim] for pid, sim in sampled.entries]
        work_freqs[channel] = [float(f) for f in values]
        banded_sizes[channel] = [len(b) for b in bc.bands]
        channels_payload[channel] = {
            "layout": layout.to_dict(),
            "band_sizes": banded_sizes[channel],
            "sampled": work_samples[channel],
            "sampled_count": len(sampled.entries),
            "content_diversity": diversity,
            "entries": [[pid, sim] for pid, sim in bc.all_entries()],
        }
    session.work.update(
        {"samples": work_samples, "freqs": work_freqs, "seed": seed}
    )
    session.state = STEP_MEDIATE
    store.save_session(session)
    return {"channels": channels_payload, "guidance": session.guidance()}


def _fusion_positions(engine: Engine, candidates: list[int], seed: int) -> dict:
    """2D spread of the fused pool for the pie scatter; tiny pools fall back
    to a circle."""
    from .propagation import group_vectors
    from .projection import tsne

    if len(candidates) >= 4:
        X = group_vectors(engine.fs, candidates)
        iters = min(engine.config.tsne_iters, 300)
        coords = tsne(X, perplexity=min(30.0, (len(candidates) - 1) // 3), iters=iters, seed=seed).coords
    else:
        angles = np.linspace(0.0, 2 * np.pi, num=max(len(candidates), 1), endpoint=False)
        coords = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return {str(pid): [float(x), float(y)] for pid, (x, y) in zip(candidates, coords)}


def run_fuse(store: WorkbenchStore, session: Session, weights: dict) -> dict:
    if session.state not in (STEP_MEDIATE, STEP_VERIFY):
        raise illegal_state(session.state, "fuse")
    samples_data = session.work.get("samples") or {}
    try:
        inter = InterRatio({str(c): float(w) for c, w in weights.items()})
    except ValueError as exc:
        raise ApiError(400, "bad_weights", str(exc)) from exc
    missing = [c for c, w in inter.weights.items() if w > 0 and c not in samples_data]
    if missing:
        raise ApiError(409, "missing_samples", f"sample channels first: {missing}")
    engine = store.engine_of(session.dataset_id)
    from .pipeline import ChannelCandidates

    samples = {
        channel: ChannelCandidates(
            channel=channel,
            generated_for=session.current_rep,
            entries=tuple((int(p), float(s)) for p, s in samples_data[channel]),
        )
        for channel in samples_data
        if inter.weights.get(channel, 0.0) > 0.0
    }
    fused = fuse(samples, inter, m=engine.config.fused_m)
    session.work["weights"] = {c: float(w) for c, w in inter.weights.items()}
    session.work["fused"] = [
        {
            "player": e.player,
            "sims": {c: float(s) for c, s in sorted(e.sims.items())},
            "members": sorted(e.members),
        }
        for e in fused.entries
    ]
    session.state = STEP_MEDIATE
    store.save_session(session)
    seed = int(session.work.get("seed", engine.config.seed))
    positions = _fusion_positions(engine, fused.ids(), seed)
    return {
        "entries": [
            {**entry, "radius": max(entry["sims"].values())}
            for entry in session.work["fused"]
        ],
        "positions": positions,
        "fused_count": len(fused),
        "target_size": fused.target_size,
        "guidance": session.guidance(),
    }


def _table_fingerprint(session: Session, n: int) -> str:
    basis = {
        "representative": session.current_rep,
        "freqs": session.work.get("freqs", {}),
        "weights": session.work.get("weights", {}),
        "seed": session.work.get("seed"),
        "n": n,
    }
    return json.dumps(basis, sort_keys=True)


def run_rank(store: WorkbenchStore, session: Session, n: int | None) -> dict:
    if session.state not in (STEP_MEDIATE, STEP_VERIFY):
        raise illegal_state(session.state, "rank")
    fused_data = session.work.get("fused")
    if not fused_data:
        raise ApiError(409, "missing_fusion", "fuse sampled channels before ranking")
    engine = store.engine_of(session.dataset_id)
    n = engine.config.top_n if n is None else int(n)
    if n <= 0:
        raise ApiError(400, "bad_n", f"n must be positive, got {n}")

    def job_progress(done, total):
        session.job.update({"name": "train", "progress": done / total})

    try:
        model = engine.ensure_model(
            progress=job_progress,
            should_stop=lambda: bool(session.job.get("cancelled")),
        )
    except InterruptedError as exc:
        session.job = {"name": None, "progress": 1.0, "cancelled": False}
        store.save_session(session)
        raise ApiError(409, "cancelled", str(exc)) from exc
    session.job.update({"name": None, "progress": 1.0})

    from .pipeline import FusedEntry, FusedSet
    from .ranker import rank as rank_fused

    fused = FusedSet(
        target_size=engine.config.fused_m,
        entries=[
            FusedEntry(
                player=int(e["player"]),
                sims={c: float(s) for c, s in e["sims"].items()},
                members=set(e["members"]),
            )
            for e in fused_data
        ],
    )
    player = session.current_rep
    ranked = rank_fused(model, engine.ctx, player, fused, n=n)
    rec = engine.ds.by_id()[player]
    sd = sd_metrics(player, ranked.ids(), rec.friends_before, engine.fs)
    from .metrics import quality as quality_of

    qual = quality_of(ranked.ids(), rec.friends_after, n=max(len(ranked.ids()), 1))

    lineup = lineup_payload(engine, session, ranked, fused)
    fingerprint = _table_fingerprint(session, n)
    row = {
        "row_id": None,
        "representative": player,
        "intra": session.work.get("freqs", {}),
        "inter": session.work.get("weights", {}),
        "seed": session.work.get("seed"),
        "n": n,
        "sd": sd.to_dict(),
        "quality": qual.to_dict(),
        "fingerprint": fingerprint,
    }
    existing = [r for r in session.ratio_table if r["fingerprint"] == fingerprint]
    if existing:
        row["row_id"] = existing[0]["row_id"]
        session.ratio_table[session.ratio_table.index(existing[0])] = row
    else:
        row["row_id"] = len(session.ratio_table) + 1
        session.ratio_table.append(row)
    session.work["ranked"] = [[pid, prob] for pid, prob in ranked.entries]
    session.work["last_n"] = n
    session.state = STEP_VERIFY
    store.save_session(session)
    return {
        "ranked": session.work["ranked"],
        "sd": sd.to_dict(),
        "quality": qual.to_dict(),
        "lineup": lineup,
        "ratio_table": session.ratio_table,
        "guidance": session.guidance(),
    }


def lineup_payload(engine: Engine, session: Session, ranked, fused) -> list[dict]:
    """One row per ranked candidate with per-channel similarity, membership,
    per-channel rank position (for the cross-column curves), individual SD
    contributions, and the avatar placeholder key."""
    player = session.current_rep
    rec = engine.ds.by_id()[player]
    samples_data = session.work.get("samples", {})
    channel_positions: dict[str, dict[int, int]] = {
        channel: {int(p): i for i, (p, _) in enumerate(entries)}
        for channel, entries in samples_data.items()
    }
    by_player = {e.player: e for e in fused.entries}
    rows = []
    for position, (pid, prob) in enumerate(ranked.entries):
        entry = by_player[pid]
        cand = engine.ds.by_id()[pid]
        rows.append(
            {
                "rank": position + 1,
                "player": pid,
                "probability": prob,
                "members": sorted(entry.members),
                "sims": {c: float(s) for c, s in sorted(entry.sims.items())},
                "channel_ranks": {
                    c: channel_positions.get(c, {}).get(pid)
                    for c in sorted(entry.members)
                },
                "total_sim": sd_metrics(player, [pid], rec.friends_before, engine.fs).total_sim,
                "fri_sim": sd_metrics(player, [pid], rec.friends_before, engine.fs).fri_sim,
                "displayed_avatar": cand.displayed_avatar,
            }
        )
    return rows


def assign_ratio(store: WorkbenchStore, session: Session, ratio_id: str | None) -> dict:
    if session.state != STEP_VERIFY:
        raise illegal_state(session.state, "assign_ratio")
    player = session.current_rep
    freqs = session.work.get("freqs") or {}
    weights = session.work.get("weights") or {}
    if not weights:
        raise ApiError(409, "missing_fusion", "nothing to assign: fuse and rank first")
    if ratio_id is None:
        session.ratio_counter += 1
        ratio_id = f"ratio-{session.ratio_counter}"
    ratio = PreferenceRatio(
        ratio_id=ratio_id,
        intra=IntraRatio({c: tuple(v) for c, v in freqs.items()}),
        inter=InterRatio(weights),
    )
    session.ratios[ratio_id] = ratio.to_dict()
    session.assignments[str(player)] = ratio_id
    session.state = STEP_REPRESENTATIVE
    store.save_session(session)
    return {
        "ratio": ratio.to_dict(),
        "assignments": dict(session.assignments),
        "guidance": session.guidance(),
    }


def _group_assignment_ratios(session: Session, result: PropagationResult) -> dict[int, PreferenceRatio]:
    assignment = {}
    for player in result.players:
        rid = result.assigned(player)
        assignment[player] = session.ratio_of(rid)
    return assignment


def run_propagation(store: WorkbenchStore, session: Session) -> dict:
    if session.state not in (STEP_REPRESENTATIVE, STEP_VERIFY, STEP_EVALUATE):
        raise illegal_state(session.state, "propagate")
    if not session.assignments:
        raise ApiError(409, "no_assignments", "assign at least one preference ratio")
    if len(session.group) < 2:
        raise ApiError(409, "group_too_small", "need at least two group members")
    engine = store.engine_of(session.dataset_id)
    session.state = STEP_PROPAGATE
    session.job = {"name": "propagate", "progress": 0.0, "cancelled": False}

    graph = build_similarity_graph(
        session.group, engine.fs, k=engine.config.knn_k, sigma=engine.config.sigma
    )
    labels = {int(p): rid for p, rid in session.assignments.items()}

    def on_progress(i, total):
        session.job["progress"] = i / total

    def cancelled() -> bool:
        return bool(session.job.get("cancelled"))

    result = propagate(
        graph,
        labels,
        alpha=engine.config.alpha,
        tol=engine.config.propagation_tol,
        max_iter=engine.config.propagation_max_iter,
        ratio_ids=sorted(session.ratios),
        progress=on_progress,
        should_stop=cancelled,
    )
    if session.job.get("cancelled"):
        session.state = STEP_REPRESENTATIVE
        session.job = {"name": None, "progress": 1.0, "cancelled": False}
        store.save_session(session)
        raise ApiError(409, "cancelled", "propagation was cancelled")

    session.propagation = result.to_dict()
    sd, qual, _ = engine.evaluate_group(
        _group_assignment_ratios(session, result),
        seed=int(session.work.get("seed", engine.config.seed)),
    )
    record = session.history.record(
        group_id=_group_id(session), sd=sd, qual=qual, ratio_assignment=result.assignment()
    )
    session.state = STEP_EVALUATE
    session.job = {"name": None, "progress": 1.0, "cancelled": False}
    store.save_session(session)
    return {
        "converged": result.converged,
        "iterations": result.iterations,
        "ratio_ids": result.ratio_ids,
        "assignment": {str(k): v for k, v in result.assignment().items()},
        "record": record.to_dict(),
        "guidance": session.guidance(),
    }


def _group_id(session: Session) -> str:
    return f"{session.session_id}-group"


def uncertainty_rows(session: Session, k: int, offset: int = 0) -> dict:
    if session.state != STEP_EVALUATE:
        raise illegal_state(session.state, "uncertain")
    if session.propagation is None:
        raise ApiError(409, "no_propagation", "run propagation first")
    if k <= 0:
        raise ApiError(400, "bad_k", f"k must be positive, got {k}")
    result = PropagationResult.from_dict(session.propagation)
    rows = uncertain_players(result, k=max(k + offset, k))
    rows = rows[offset : offset + k]
    return {
        "rows": [
            {
                "player": player,
                "probabilities": probs,
                "uncertainty": uncertainty,
            }
            for player, probs, uncertainty in rows
        ],
        "ratio_ids": result.ratio_ids,
    }


def run_remediation(
    store: WorkbenchStore,
    session: Session,
    player: int,
    ratio_id: str | None,
    ratio_spec: dict | None,
) -> dict:
    if session.state != STEP_EVALUATE:
        raise illegal_state(session.state, "remediate")
    if player not in session.group:
        raise ApiError(404, "unknown_player", f"player {player} is not in the group")
    if ratio_spec is not None:
        session.ratio_counter += 1
        new_id = ratio_spec.get("ratio_id") or f"ratio-{session.ratio_counter}"
        try:
            ratio = PreferenceRatio(
                ratio_id=new_id,
                intra=IntraRatio(
                    {c: tuple(float(x) for x in v) for c, v in ratio_spec["intra"].items()}
                ),
                inter=InterRatio(
                    {c: float(w) for c, w in ratio_spec["inter"].items()}
                ),
            )
        except (KeyError, ValueError) as exc:
            raise ApiError(400, "bad_ratio", f"invalid ratio: {exc}") from exc
        session.ratios[ratio.ratio_id] = ratio.to_dict()
        ratio_id = ratio.ratio_id
    if ratio_id is None:
        raise ApiError(400, "bad_ratio", "provide ratio_id or a ratio definition")
    session.ratio_of(ratio_id)  # validates registration
    session.assignments[str(player)] = ratio_id
    if player not in session.representatives:
        session.representatives.append(player)
    session.state = STEP_REPRESENTATIVE  # re-propagation happens next
    store.save_session(session)
    return run_propagation(store, session)


# ---------------------------------------------------------------------------
# FastAPI app
# ---------------------------------------------------------------------------


def create_app(config: AppConfig | None = None) -> FastAPI:
    config = config or AppConfig()
    store = WorkbenchStore(config)
    app = FastAPI(title="friendlab", version="0.1.0")
    app.state.store = store

    @app.exception_handler(ApiError)
    async def api_error_handler(_: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    def mutate(session_id: str):
        return store.lock_for(session_id)

    @app.post("/api/v1/datasets")
    def load_dataset(body: dict):
        if "path" in body:
            source = {"kind": "logs", "path": str(body["path"])}
        elif "synthetic" in body:
            try:
                SyntheticConfig(**body["synthetic"]).validate()
            except (TypeError, ValueError) as exc:
                raise ApiError(400, "bad_config", str(exc)) from exc
            source = {"kind": "synthetic", "config": dict(body["synthetic"])}
        else:
            raise ApiError(400, "bad_source", "provide 'path' or 'synthetic'")
        dataset_id, engine = store.load_dataset(source)
        return {"dataset_id": dataset_id, "summary": engine.summary()}

    @app.get("/api/v1/datasets/{dataset_id}/projection/{channel}")
    def get_projection(dataset_id: str, channel: str):
        grids = store.grids_of(dataset_id)
        if channel not in grids:
            raise ApiError(404, "bad_channel", f"unknown channel {channel}")
        proj = store.projections[dataset_id][channel]
        return {"channel": channel, "hexbins": grids[channel], "projection": proj.to_dict()}

    @app.post("/api/v1/sessions")
    def create_session(body: dict):
        dataset_id = body.get("dataset_id")
        if not dataset_id:
            raise ApiError(400, "bad_request", "dataset_id is required")
        session = store.create_session(str(dataset_id))
        return {"session_id": session.session_id, "state": session.state,
                "guidance": session.guidance()}

    @app.get("/api/v1/sessions/{session_id}")
    def get_session(session_id: str):
        session = store.session_of(session_id)
        return session.to_dict()

    @app.post("/api/v1/sessions/{session_id}/group")
    def post_group(session_id: str, body: dict):
        session = store.session_of(session_id)
        with mutate(session_id):
            return select_group(store, session, body.get("bins") or {})

    @app.post("/api/v1/sessions/{session_id}/representative")
    def post_representative(session_id: str, body: dict):
        session = store.session_of(session_id)
        if "player" not in body:
            raise ApiError(400, "bad_request", "player is required")
        with mutate(session_id):
            return select_representative(store, session, int(body["player"]))

    @app.post("/api/v1/sessions/{session_id}/sample")
    def post_sample(session_id: str, body: dict):
        session = store.session_of(session_id)
        with mutate(session_id):
            return run_sample(store, session, body.get("freqs") or {}, body.get("seed"))

    @app.post("/api/v1/sessions/{session_id}/fuse")
    def post_fuse(session_id: str, body: dict):
        session = store.session_of(session_id)
        with mutate(session_id):
            return run_fuse(store, session, body.get("weights") or {})

    @app.post("/api/v1/sessions/{session_id}/rank")
    def post_rank(session_id: str, body: dict):
        session = store.session_of(session_id)
        with mutate(session_id):
            return run_rank(store, session, body.get("n"))

    @app.post("/api/v1/sessions/{session_id}/assign")
    def post_assign(session_id: str, body: dict):
        session = store.session_of(session_id)
        with mutate(session_id):
            return assign_ratio(store, session, body.get("ratio_id"))

    @app.post("/api/v1/sessions/{session_id}/propagate")
    def post_propagate(session_id: str):
        session = store.session_of(session_id)
        with mutate(session_id):
            return run_propagation(store, session)

    @app.get("/api/v1/sessions/{session_id}/uncertain")
    def get_uncertain(session_id: str, k: int | None = None, offset: int = 0):
        session = store.session_of(session_id)
        return uncertainty_rows(session, k or config.uncertain_k, offset)

    @app.post("/api/v1/sessions/{session_id}/remediate")
    def post_remediate(session_id: str, body: dict):
        session = store.session_of(session_id)
        if "player" not in body:
            raise ApiError(400, "bad_request", "player is required")
        with mutate(session_id):
            return run_remediation(
                store,
                session,
                int(body["player"]),
                body.get("ratio_id"),
                body.get("ratio"),
            )

    @app.get("/api/v1/sessions/{session_id}/history")
    def get_history(session_id: str):
        session = store.session_of(session_id)
        return {"records": session.history.to_dicts()}

    @app.get("/api/v1/sessions/{session_id}/progress")
    def get_progress(session_id: str):
        session = store.session_of(session_id)
        return dict(session.job)

    @app.post("/api/v1/sessions/{session_id}/cancel")
    def post_cancel(session_id: str):
        session = store.session_of(session_id)
        session.job["cancelled"] = True
        return dict(session.job)

    return app
