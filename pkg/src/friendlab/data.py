"""Core player/log types, the line-delimited log format, synthetic population
generation with planted group structure, and the temporal train/test split.

Log format (JSON lines):

    {"span_days": 60, "split_day": 40, "modes": ["PVE", "PVP", "Guild"]}
    {"avatar": 3, "vector": [0.12, -0.4, ...]}
    {"day": 0, "player": 1, "partners": [[2, 3]], "modes": {"PVE": 1},
     "acquired": [[3, 0]], "displayed": 3, "befriended": [2]}

The first line is the header.  Embedding records ("avatar" key) map avatar
ids to their visual-embedding vectors.  Day records ("player" key) carry that
player's interactions (partner id, weight count), per-mode engagement flags,
avatar acquisition events (avatar id, source id), the currently displayed
avatar, and friendships initiated that day.  Friendship events are recorded
once, on the initiating player's record, and are symmetric after parsing.

Avatar inventories are treated as split-day snapshots: acquisition days are
not retained on :class:`PlayerRecord`, and the synthetic generator only emits
avatar events inside the training window.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

PlayerId = int


class SchemaError(ValueError):
    """A log line violated the documented record schema."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DataInvariantError(ValueError):
    """A structurally valid record set violated a dataset invariant."""


@dataclass
class PlayerRecord:
    id: PlayerId
    # (day index, partner id, weight count); no self-edges
    daily_interactions: list[tuple[int, PlayerId, int]] = field(default_factory=list)
    # day -> mode -> 0/1 engagement flag
    daily_gameplay: dict[int, dict[str, int]] = field(default_factory=dict)
    avatar_inventory: set[int] = field(default_factory=set)
    displayed_avatar: int | None = None
    # avatar id -> acquisition-source id
    avatar_acquisitions: dict[int, int] = field(default_factory=dict)
    friends_before: set[PlayerId] = field(default_factory=set)
    friends_after: set[PlayerId] = field(default_factory=set)

    def interaction_count(self, before_day: int | None = None) -> int:
        total = 0
        for day, _, weight in self.daily_interactions:
            if before_day is None or day < before_day:
                total += weight
        return total


@dataclass
class Dataset:
    players: list[PlayerRecord]
    span_days: int = 60
    split_day: int = 40
    modes: tuple[str, ...] = ("PVE", "PVP", "Guild")
    # avatar id -> dense visual embedding
    avatar_visual_embeddings: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        validate_dataset(self)

    def player_ids(self) -> list[PlayerId]:
        return [p.id for p in self.players]

    def by_id(self) -> dict[PlayerId, PlayerRecord]:
        # records are immutable after construction, so cache the lookup
        cached = getattr(self, "_by_id", None)
        if cached is None or len(cached) != len(self.players):
            cached = {p.id: p for p in self.players}
            self._by_id = cached
        return cached


def validate_dataset(ds: Dataset) -> None:
    if not (0 < ds.split_day < ds.span_days):
        raise DataInvariantError(
            f"split_day must satisfy 0 < split_day < span_days, got "
            f"{ds.split_day}/{ds.span_days}"
        )
    seen: set[PlayerId] = set()
    for rec in ds.players:
        if rec.id in seen:
            raise DataInvariantError(f"duplicate player id {rec.id}")
        seen.add(rec.id)
    for rec in ds.players:
        for day, partner, weight in rec.daily_interactions:
            if partner == rec.id:
                raise DataInvariantError(f"player {rec.id}: self-edge on day {day}")
            if not (0 <= day < ds.span_days):
                raise DataInvariantError(
                    f"player {rec.id}: interaction day {day} outside span"
                )
            if weight <= 0:
                raise DataInvariantError(
                    f"player {rec.id}: non-positive interaction weight {weight}"
                )
        for day in rec.daily_gameplay:
            if not (0 <= day < ds.span_days):
                raise DataInvariantError(
                    f"player {rec.id}: gameplay day {day} outside span"
                )
        if rec.displayed_avatar is not None and rec.displayed_avatar not in rec.avatar_inventory:
            raise DataInvariantError(
                f"player {rec.id}: displayed avatar {rec.displayed_avatar} "
                f"not in inventory"
            )
        if set(rec.avatar_acquisitions) != rec.avatar_inventory:
            raise DataInvariantError(
                f"player {rec.id}: acquisition map does not cover inventory"
            )
        overlap = rec.friends_before & rec.friends_after
        if overlap:
            raise DataInvariantError(
                f"player {rec.id}: friends before/after overlap: {sorted(overlap)}"
            )
        if rec.id in rec.friends_before or rec.id in rec.friends_after:
            raise DataInvariantError(f"player {rec.id}: self-friendship")
        for avatar in rec.avatar_inventory:
            if avatar not in ds.avatar_visual_embeddings:
                raise DataInvariantError(
                    f"player {rec.id}: avatar {avatar} has no visual embedding"
                )


def datasets_equal(a: Dataset, b: Dataset) -> bool:
    """Structural equality, including embedding vectors."""
    if (a.span_days, a.split_day, a.modes) != (b.span_days, b.split_day, b.modes):
        return False
    if sorted(a.avatar_visual_embeddings) != sorted(b.avatar_visual_embeddings):
        return False
    for avatar, vec in a.avatar_visual_embeddings.items():
        if not np.array_equal(vec, b.avatar_visual_embeddings[avatar]):
            return False
    if len(a.players) != len(b.players):
        return False
    bb = b.by_id()
    for rec in a.players:
        other = bb.get(rec.id)
        if other is None:
            return False
        if sorted(rec.daily_interactions) != sorted(other.daily_interactions):
            return False
        if rec.daily_gameplay != other.daily_gameplay:
            return False
        if (rec.avatar_inventory, rec.displayed_avatar, rec.avatar_acquisitions) != (
            other.avatar_inventory,
            other.displayed_avatar,
            other.avatar_acquisitions,
        ):
            return False
        if (rec.friends_before, rec.friends_after) != (
            other.friends_before,
            other.friends_after,
        ):
            return False
    return True


# ---------------------------------------------------------------------------
# log file parsing / writing
# ---------------------------------------------------------------------------


def _require(condition: bool, line_no: int, message: str) -> None:
    if not condition:
        raise SchemaError(line_no, message)


def parse_logs(path: str | Path) -> Dataset:
    """Parse a log file into a validated Dataset.

    Raises SchemaError (with the offending line number) for malformed lines
    and DataInvariantError (naming the player) for invariant violations.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        return _parse_log_lines(fh)


def _parse_log_lines(lines: Iterable[str]) -> Dataset:
    header: dict | None = None
    embeddings: dict[int, np.ndarray] = {}
    records: dict[PlayerId, PlayerRecord] = {}
    friend_events: list[tuple[int, PlayerId, PlayerId]] = []
    line_no = 0

    for line_no, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SchemaError(line_no, f"invalid JSON: {exc.msg}") from exc
        _require(isinstance(obj, dict), line_no, "record must be a JSON object")

        if header is None:
            _require(
                "span_days" in obj and "split_day" in obj,
                line_no,
                "first line must be the header with span_days/split_day",
            )
            header = obj
            continue

        if "avatar" in obj:
            _require(
                isinstance(obj.get("avatar"), int)
                and isinstance(obj.get("vector"), list),
                line_no,
                "embedding record needs integer 'avatar' and list 'vector'",
            )
            embeddings[obj["avatar"]] = np.asarray(obj["vector"], dtype=float)
            continue

        _require("player" in obj and "day" in obj, line_no, "unrecognised record kind")
        _require(isinstance(obj["player"], int), line_no, "'player' must be an integer")
        _require(isinstance(obj["day"], int), line_no, "'day' must be an integer")
        pid, day = obj["player"], obj["day"]
        rec = records.setdefault(pid, PlayerRecord(id=pid))

        for item in obj.get("partners", []):
            _require(
                isinstance(item, list) and len(item) == 2,
                line_no,
                "'partners' entries must be [partner, weight] pairs",
            )
            partner, weight = item
            rec.daily_interactions.append((day, int(partner), int(weight)))
        mode_flags = obj.get("modes", {})
        _require(isinstance(mode_flags, dict), line_no, "'modes' must be an object")
        if mode_flags:
            merged = rec.daily_gameplay.setdefault(day, {})
            for mode, flag in mode_flags.items():
                merged[str(mode)] = int(flag)
        for item in obj.get("acquired", []):
            _require(
                isinstance(item, list) and len(item) == 2,
                line_no,
                "'acquired' entries must be [avatar, source] pairs",
            )
            avatar, source = int(item[0]), int(item[1])
            rec.avatar_inventory.add(avatar)
            rec.avatar_acquisitions[avatar] = source
        if "displayed" in obj and obj["displayed"] is not None:
            rec.displayed_avatar = int(obj["displayed"])
        for friend in obj.get("befriended", []):
            friend_events.append((day, pid, int(friend)))

    _require(header is not None, max(line_no, 1), "missing header line")
    span = int(header["span_days"])
    split = int(header["split_day"])
    modes = tuple(str(m) for m in header.get("modes", ("PVE", "PVP", "Guild")))

    for day, a, b in friend_events:
        if b not in records:
            records[b] = PlayerRecord(id=b)
        for x, y in ((a, b), (b, a)):
            rec = records[x]
            if day < split:
                rec.friends_before.add(y)
            elif y not in rec.friends_before:
                rec.friends_after.add(y)

    players = [records[pid] for pid in sorted(records)]
    return Dataset(
        players=players,
        span_days=span,
        split_day=split,
        modes=modes,
        avatar_visual_embeddings=embeddings,
    )


def write_logs(ds: Dataset, path: str | Path) -> None:
    """Write a Dataset in the documented log format (deterministic order)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        header = {
            "span_days": ds.span_days,
            "split_day": ds.split_day,
            "modes": list(ds.modes),
        }
        fh.write(json.dumps(header) + "\n")
        for avatar in sorted(ds.avatar_visual_embeddings):
            vec = ds.avatar_visual_embeddings[avatar]
            fh.write(json.dumps({"avatar": avatar, "vector": list(map(float, vec))}) + "\n")
        for rec in sorted(ds.players, key=lambda r: r.id):
            for obj in _day_records(rec, ds.split_day):
                fh.write(json.dumps(obj) + "\n")


def _day_records(rec: PlayerRecord, split_day: int) -> Iterator[dict]:
    by_day: dict[int, dict] = {}

    def day_obj(day: int) -> dict:
        return by_day.setdefault(day, {"day": day, "player": rec.id})

    for day, partner, weight in sorted(rec.daily_interactions):
        day_obj(day).setdefault("partners", []).append([partner, weight])
    for day, flags in sorted(rec.daily_gameplay.items()):
        day_obj(day)["modes"] = {m: flags[m] for m in sorted(flags)}
    # acquisition days are not retained; emit the snapshot on day 0
    if rec.avatar_inventory:
        day_obj(0)["acquired"] = [
            [avatar, rec.avatar_acquisitions[avatar]]
            for avatar in sorted(rec.avatar_inventory)
        ]
    if rec.displayed_avatar is not None:
        day_obj(0)["displayed"] = rec.displayed_avatar
    # friendships are written once, from the lower-id endpoint
    before = sorted(f for f in rec.friends_before if rec.id < f)
    after = sorted(f for f in rec.friends_after if rec.id < f)
    if before:
        day_obj(0)["befriended"] = before
    if after:
        day_obj(split_day)["befriended"] = after
    for day in sorted(by_day):
        yield by_day[day]


def load_avatar_embeddings(path: str | Path) -> dict[int, np.ndarray]:
    """Read a standalone avatar embedding file: `id v1 v2 ...` per line."""
    embeddings: dict[int, np.ndarray] = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        raw = raw.strip()
        if not raw:
            continue
        parts = raw.split()
        try:
            embeddings[int(parts[0])] = np.asarray([float(x) for x in parts[1:]], dtype=float)
        except ValueError as exc:
            raise SchemaError(line_no, f"bad embedding line: {exc}") from exc
    return embeddings


# ---------------------------------------------------------------------------
# synthetic generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupArchetype:
    """Planted per-group behaviour profile."""

    engagement: tuple[float, ...]  # per-mode daily engagement probability
    social_density: float = 1.0  # multiplier on daily interaction volume
    avatar_pool: tuple[int, ...] = ()
    preferred_source: int = 0


@dataclass(frozen=True)
class SyntheticConfig:
    n_players: int = 500
    n_groups: int = 3
    span_days: int = 60
    split_day: int = 40
    modes: tuple[str, ...] = ("PVE", "PVP", "Guild")
    archetypes: tuple[GroupArchetype, ...] | None = None
    intra_group_prob: float = 0.9
    inter_group_prob: float = 0.1
    contacts_per_day: float = 3.0
    friend_rate: float = 0.15
    friend_signal: float = 6.0
    friend_contact_prob: float = 0.25
    avatars_per_group: int = 12
    avatar_pool_loyalty: float = 0.85
    n_sources: int = 4
    embedding_dim: int = 32
    latent_dim: int = 8
    seed: int = 0

    def validate(self) -> None:
        if self.n_players < self.n_groups or self.n_groups < 1:
            raise ValueError("need n_players >= n_groups >= 1")
        for name in (
            "intra_group_prob",
            "inter_group_prob",
            "friend_rate",
            "friend_contact_prob",
            "avatar_pool_loyalty",
        ):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if not (0 < self.split_day < self.span_days):
            raise ValueError("need 0 < split_day < span_days")
        if self.contacts_per_day < 0:
            raise ValueError("contacts_per_day must be non-negative")


def default_archetypes(cfg: SyntheticConfig) -> tuple[GroupArchetype, ...]:
    """Well-separated group profiles: each group leans on different modes,
    alternates social density, and owns a disjoint avatar pool."""
    archetypes = []
    n_modes = len(cfg.modes)
    for g in range(cfg.n_groups):
        engagement = tuple(
            0.9 if (m % cfg.n_groups) == g else 0.15 for m in range(n_modes)
        )
        pool = tuple(
            range(g * cfg.avatars_per_group, (g + 1) * cfg.avatars_per_group)
        )
        archetypes.append(
            GroupArchetype(
                engagement=engagement,
                social_density=1.0 + 0.5 * (g % 2),
                avatar_pool=pool,
                preferred_source=g % cfg.n_sources,
            )
        )
    return tuple(archetypes)


def group_assignment(cfg: SyntheticConfig) -> np.ndarray:
    """Contiguous block assignment of players to groups."""
    sizes = [len(block) for block in np.array_split(np.arange(cfg.n_players), cfg.n_groups)]
    labels = np.repeat(np.arange(cfg.n_groups), sizes)
    return labels


def generate_synthetic(cfg: SyntheticConfig) -> Dataset:
    """Generate a population with planted group structure.

    Same-group players share engagement archetypes, avatar pools, and denser
    interactions; friendships form preferentially between players with a high
    latent-trait cosine, giving the ranker a learnable but imperfect signal.
    Deterministic for a fixed seed.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    archetypes = cfg.archetypes or default_archetypes(cfg)
    if len(archetypes) != cfg.n_groups:
        raise ValueError("need one archetype per group")
    groups = group_assignment(cfg)
    members: list[np.ndarray] = [np.flatnonzero(groups == g) for g in range(cfg.n_groups)]
    n = cfg.n_players

    # latent traits drive friendships and within-group behavioural variation
    centers = rng.normal(0.0, 1.0, size=(cfg.n_groups, cfg.latent_dim)) * 2.0
    latent = centers[groups] + rng.normal(0.0, 0.7, size=(n, cfg.latent_dim))
    latent_unit = latent / np.linalg.norm(latent, axis=1, keepdims=True)

    n_modes = len(cfg.modes)
    engage_prob = np.empty((n, n_modes))
    for i in range(n):
        base = np.asarray(archetypes[groups[i]].engagement, dtype=float)
        jitter = 0.12 * np.tanh(latent[i][np.arange(n_modes) % cfg.latent_dim])
        engage_prob[i] = np.clip(base + jitter, 0.05, 0.95)
    engaged = rng.random((n, cfg.span_days, n_modes)) < engage_prob[:, None, :]

    records = [PlayerRecord(id=i) for i in range(n)]
    for i in range(n):
        for day in range(cfg.span_days):
            flags = {
                mode: int(engaged[i, day, m]) for m, mode in enumerate(cfg.modes)
            }
            records[i].daily_gameplay[day] = flags

    # avatar universe: per-group pools plus a small shared tail
    all_avatars = sorted(
        {a for arc in archetypes for a in arc.avatar_pool}
        | set(
            range(
                cfg.n_groups * cfg.avatars_per_group,
                cfg.n_groups * cfg.avatars_per_group + cfg.avatars_per_group // 2 + 1,
            )
        )
    )
    pool_of = {a: g for g, arc in enumerate(archetypes) for a in arc.avatar_pool}
    avatar_centers = rng.normal(0.0, 1.0, size=(cfg.n_groups + 1, cfg.embedding_dim)) * 1.5
    embeddings: dict[int, np.ndarray] = {}
    for avatar in all_avatars:
        center = avatar_centers[pool_of.get(avatar, cfg.n_groups)]
        embeddings[avatar] = center + rng.normal(0.0, 0.4, size=cfg.embedding_dim)

    for i in range(n):
        arc = archetypes[groups[i]]
        n_owned = 1 + rng.poisson(1.5 * arc.social_density)
        pool = list(arc.avatar_pool) or all_avatars
        owned: set[int] = set()
        for _ in range(n_owned):
            if rng.random() < cfg.avatar_pool_loyalty:
                owned.add(pool[rng.integers(len(pool))])
            else:
                owned.add(all_avatars[rng.integers(len(all_avatars))])
        for avatar in sorted(owned):
            if rng.random() < 0.7:
                source = arc.preferred_source
            else:
                source = int(rng.integers(cfg.n_sources))
            records[i].avatar_acquisitions[avatar] = source
        records[i].avatar_inventory = owned
        in_pool = sorted(a for a in owned if a in set(pool))
        records[i].displayed_avatar = in_pool[0] if in_pool else sorted(owned)[0]

    # interactions: per day each player makes intra- and inter-group contacts
    interactions: dict[tuple[int, int, int], int] = {}

    def add_edge(day: int, a: int, b: int) -> None:
        if a == b:
            return
        key = (day, min(a, b), max(a, b))
        interactions[key] = interactions.get(key, 0) + 1

    friendships: set[tuple[int, int]] = set()
    friend_day: dict[tuple[int, int], int] = {}
    friend_sets: dict[int, set[int]] = {i: set() for i in range(n)}

    for day in range(cfg.span_days):
        for i in range(n):
            g = groups[i]
            attempts = rng.poisson(cfg.contacts_per_day * archetypes[g].social_density)
            if attempts == 0:
                continue
            own = members[g]
            intra = rng.binomial(attempts, cfg.intra_group_prob)
            inter = rng.binomial(attempts, cfg.inter_group_prob)
            if len(own) > 1:
                for _ in range(intra):
                    j = int(own[rng.integers(len(own))])
                    while j == i:
                        j = int(own[rng.integers(len(own))])
                    add_edge(day, i, j)
            if len(own) < n:
                for _ in range(inter):
                    j = int(rng.integers(n))
                    while groups[j] == g:
                        j = int(rng.integers(n))
                    add_edge(day, i, j)
        # established friends keep interacting, aligning the social graph
        # with the friendship signal
        for a, b in sorted(friendships):
            if friend_day[(a, b)] < day and rng.random() < cfg.friend_contact_prob:
                add_edge(day, a, b)
        # friend formation: partner choice weighted by latent similarity
        for i in range(n):
            if rng.random() >= cfg.friend_rate:
                continue
            pool_size = min(25, n - 1)
            cand = rng.choice(n, size=pool_size, replace=False)
            existing = friend_sets[i]
            cand = np.asarray(
                [c for c in cand if c != i and c not in existing], dtype=int
            )
            if cand.size == 0:
                continue
            sims = latent_unit[cand] @ latent_unit[i]
            weights = np.exp(cfg.friend_signal * (sims - sims.max()))
            weights /= weights.sum()
            j = int(cand[rng.choice(cand.size, p=weights)])
            key = (min(i, j), max(i, j))
            friendships.add(key)
            friend_day[key] = day
            friend_sets[i].add(j)
            friend_sets[j].add(i)

    for (day, a, b), weight in sorted(interactions.items()):
        records[a].daily_interactions.append((day, b, weight))
        records[b].daily_interactions.append((day, a, weight))

    for (a, b), day in sorted(friend_day.items()):
        if day < cfg.split_day:
            records[a].friends_before.add(b)
            records[b].friends_before.add(a)
        else:
            records[a].friends_after.add(b)
            records[b].friends_after.add(a)

    return Dataset(
        players=records,
        span_days=cfg.span_days,
        split_day=cfg.split_day,
        modes=cfg.modes,
        avatar_visual_embeddings=embeddings,
    )


# ---------------------------------------------------------------------------
# temporal split
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainView:
    """Exposes only pre-split days and pre-split friendships."""

    ds: Dataset

    @property
    def days(self) -> range:
        return range(0, self.ds.split_day)

    def interactions(self, rec: PlayerRecord) -> list[tuple[int, PlayerId, int]]:
        return [e for e in rec.daily_interactions if e[0] < self.ds.split_day]

    def gameplay(self, rec: PlayerRecord, day: int) -> dict[str, int]:
        if day >= self.ds.split_day:
            raise KeyError(f"day {day} is outside the training window")
        return rec.daily_gameplay.get(day, {})

    def friends(self, rec: PlayerRecord) -> set[PlayerId]:
        return rec.friends_before


@dataclass(frozen=True)
class TestView:
    """Exposes the held-out window; friends_after are the ranking labels."""

    ds: Dataset

    @property
    def days(self) -> range:
        return range(self.ds.split_day, self.ds.span_days)

    def labels(self, rec: PlayerRecord) -> set[PlayerId]:
        return rec.friends_after


def temporal_split(ds: Dataset) -> tuple[TrainView, TestView]:
    return TrainView(ds), TestView(ds)


# ---------------------------------------------------------------------------
# summary statistics (service / CLI)
# ---------------------------------------------------------------------------


def dataset_summary(ds: Dataset) -> dict:
    n = len(ds.players)
    before = [len(p.friends_before) for p in ds.players]
    after = [len(p.friends_after) for p in ds.players]
    return {
        "player_count": n,
        "span_days": ds.span_days,
        "split_day": ds.split_day,
        "modes": list(ds.modes),
        "avatar_count": len(ds.avatar_visual_embeddings),
        "avg_friends_before": float(np.mean(before)) if n else 0.0,
        "avg_friends_after": float(np.mean(after)) if n else 0.0,
    }
