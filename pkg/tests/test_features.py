from __future__ import annotations

import itertools

import numpy as np
import pytest

from friendlab.data import SyntheticConfig, generate_synthetic, group_assignment, temporal_split
from friendlab.features import (
    CHANNELS,
    FeatureSet,
    InteractionGraph,
    build_preferences,
    closeness,
    export_features,
    kcore,
    node_embedding,
    pagerank,
)
from oracles import (
    cosine_direct,
    floyd_warshall_closeness,
    google_matrix_scores,
    peel_core_numbers,
)


def graph_of(edges):
    return InteractionGraph.from_edges(edges)


class TestPagerank:
    def test_three_cycle_uniform(self):
        g = graph_of([(0, 1), (1, 2), (2, 0)])
        scores = pagerank(g)
        for node in (0, 1, 2):
            assert scores[node] == pytest.approx(1 / 3, abs=1e-9)

    def test_star_center_dominates(self):
        g = graph_of([(0, 1), (0, 2), (0, 3)])
        scores = pagerank(g)
        assert scores[0] > scores[1]
        assert scores[1] == pytest.approx(scores[2], abs=1e-9)

    def test_scores_sum_to_one(self):
        g = graph_of([(0, 1, 2.0), (1, 2, 1.0), (3, 4, 5.0)])
        scores = pagerank(g)
        assert sum(scores.values()) == pytest.approx(1.0, abs=1e-6)

    def test_four_node_fixture_matches_google_matrix(self):
        edges = [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (0, 2, 0.5)]
        g = graph_of(edges)
        scores = pagerank(g)
        oracle = google_matrix_scores([0, 1, 2, 3], edges)
        for node in oracle:
            assert scores[node] == pytest.approx(oracle[node], abs=1e-6)


class TestKcore:
    def test_complete_graph(self):
        g = graph_of([(a, b) for a in range(4) for b in range(a + 1, 4)])
        assert set(kcore(g).values()) == {3}

    def test_path(self):
        g = graph_of([(0, 1), (1, 2)])
        assert set(kcore(g).values()) == {1}

    def test_clique_with_pendant(self):
        edges = [(a, b) for a in range(4) for b in range(a + 1, 4)] + [(0, 9)]
        g = graph_of(edges)
        result = kcore(g)
        assert result[9] == 1
        for node in range(4):
            assert result[node] == 3

    def test_exhaustive_small_graphs(self):
        # all labelled graphs on up to 5 nodes
        for n in (2, 3, 4, 5):
            pairs = list(itertools.combinations(range(n), 2))
            for mask in range(1, 2 ** len(pairs)):
                edges = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
                nodes = sorted({x for e in edges for x in e})
                g = graph_of(edges)
                assert kcore(g) == {
                    v: peel_core_numbers(nodes, edges)[v] for v in nodes
                }

    def test_atlas_classes_and_random_eight_node_graphs(self):
        # one representative of every graph on 6-7 nodes (kcore is
        # label-equivariant), plus random 8-node graphs
        import networkx as nx

        for atlas_graph in nx.graph_atlas_g():
            if not (6 <= atlas_graph.number_of_nodes() <= 7):
                continue
            edges = list(atlas_graph.edges())
            if not edges:
                continue
            nodes = sorted({x for e in edges for x in e})
            g = graph_of(edges)
            assert kcore(g) == {v: peel_core_numbers(nodes, edges)[v] for v in nodes}
        rng = np.random.default_rng(44)
        for trial in range(200):
            edges = [
                (a, b)
                for a in range(8)
                for b in range(a + 1, 8)
                if rng.random() < 0.35
            ]
            if not edges:
                continue
            nodes = sorted({x for e in edges for x in e})
            g = graph_of(edges)
            assert kcore(g) == {v: peel_core_numbers(nodes, edges)[v] for v in nodes}


class TestCloseness:
    def test_path_three(self):
        g = graph_of([(0, 1), (1, 2)])
        result = closeness(g)
        assert result[1] == pytest.approx(1.0)
        assert result[0] == pytest.approx(2 / 3)

    def test_isolated_node_zero(self):
        g = graph_of([(0, 1)])
        g.add_node(5)
        assert closeness(g)[5] == 0.0

    def test_complete_graph(self):
        g = graph_of([(a, b) for a in range(4) for b in range(a + 1, 4)])
        assert all(v == pytest.approx(1.0) for v in closeness(g).values())

    def test_matches_floyd_warshall_on_random_graphs(self):
        rng = np.random.default_rng(5)
        for trial in range(10):
            n = 12
            edges = [
                (a, b)
                for a in range(n)
                for b in range(a + 1, n)
                if rng.random() < 0.2
            ]
            if not edges:
                continue
            g = graph_of(edges)
            for node in g.nodes():
                assert closeness(g)[node] == pytest.approx(
                    floyd_warshall_closeness(g.nodes(), edges)[node], abs=1e-9
                )

    def test_large_graph_path_uses_same_formula(self):
        # force the sparse-BFS code path (n > 64)
        n = 80
        edges = [(i, i + 1) for i in range(n - 1)]
        g = graph_of(edges)
        oracle = floyd_warshall_closeness(g.nodes(), edges)
        result = closeness(g)
        for node in g.nodes():
            assert result[node] == pytest.approx(oracle[node], abs=1e-9)


class TestNodeEmbedding:
    def test_deterministic(self):
        g = graph_of([(0, 1), (1, 2), (2, 0), (2, 3)])
        a = node_embedding(g, dims=16, seed=9)
        b = node_embedding(g, dims=16, seed=9)
        for node in a:
            assert np.array_equal(a[node], b[node])

    def test_two_cliques_cluster(self):
        edges = [(a, b) for a in range(6) for b in range(a + 1, 6)]
        edges += [(a, b) for a in range(10, 16) for b in range(a + 1, 16)]
        g = graph_of(edges)
        emb = node_embedding(g, dims=16, seed=4)
        left = [emb[n] for n in range(6)]
        right = [emb[n] for n in range(10, 16)]
        intra = [
            cosine_direct(a, b)
            for group in (left, right)
            for i, a in enumerate(group)
            for b in group[i + 1 :]
        ]
        inter = [cosine_direct(a, b) for a in left for b in right]
        assert np.mean(intra) > np.mean(inter)

    def test_single_node_zero_vector(self):
        g = InteractionGraph()
        g.add_node(3)
        emb = node_embedding(g, dims=64)
        assert emb[3].shape == (64,)
        assert np.all(emb[3] == 0.0)


@pytest.fixture(scope="module")
def built(small_synthetic):
    return build_preferences(small_synthetic, seed=2)


class TestBuildPreferences:

    def test_all_channels_present_and_constant_dim(self, built, small_synthetic):
        assert set(built.channels) == set(CHANNELS)
        for channel in CHANNELS:
            matrix = built.channels[channel]
            assert matrix.shape[0] == len(small_synthetic.players)
            assert np.all(np.isfinite(matrix))

    def test_gameplay_bounded(self, built):
        gameplay = built.channels["gameplay"]
        assert gameplay.min() >= 0.0
        assert gameplay.max() <= 1.0

    def test_absent_player_shortterm_zero(self, two_player_dataset):
        # interactions on days 0 and 5 only; the 7-day window before split
        # (days 33..39) has no activity, so short-term metrics are zero
        fs = build_preferences(two_player_dataset, embedding_dims=8)
        social = fs.vector(0, "social")
        assert np.all(social[8:] == 0.0)

    def test_identical_logs_identical_vectors(self, small_synthetic):
        fs = build_preferences(small_synthetic, seed=2)
        again = build_preferences(small_synthetic, seed=2)
        for channel in CHANNELS:
            assert np.array_equal(fs.channels[channel], again.channels[channel])

    def test_always_engaged_mode_is_one(self):
        cfg = SyntheticConfig(n_players=12, n_groups=1, seed=0)
        ds = generate_synthetic(cfg)
        # force player 0 to engage PVE every day
        for day in range(ds.span_days):
            ds.players[0].daily_gameplay.setdefault(day, {})["PVE"] = 1
        fs = build_preferences(ds, embedding_dims=8)
        vec = fs.vector(0, "gameplay")
        pve = ds.modes.index("PVE")
        for w in range(4):
            assert vec[w * len(ds.modes) + pve] == 1.0

    def test_planted_separability_all_channels(self):
        cfg = SyntheticConfig(n_players=80, n_groups=2, seed=21)
        ds = generate_synthetic(cfg)
        fs = build_preferences(ds, seed=21)
        groups = group_assignment(cfg)
        for channel in CHANNELS:
            matrix = fs.channels[channel]
            intra, inter = [], []
            for i in range(len(fs.players)):
                for j in range(i + 1, len(fs.players)):
                    sim = cosine_direct(matrix[i], matrix[j])
                    (intra if groups[i] == groups[j] else inter).append(sim)
            assert np.mean(intra) > np.mean(inter), channel

    def test_export(self, built, tmp_path):
        out = tmp_path / "features.tsv"
        export_features(built, out)
        lines = out.read_text().splitlines()
        assert len(lines) == 4 * len(built.players)


class TestWindowGraph:
    def test_merges_duplicate_rows_by_max(self, two_player_dataset):
        train, _ = temporal_split(two_player_dataset)
        g = InteractionGraph.window(train, 0, 40)
        # day 0 weight 3 + day 5 weight 1, counted once per day
        assert g.neighbors(0)[1] == pytest.approx(4.0)

    def test_rejects_self_loop(self):
        g = InteractionGraph()
        with pytest.raises(ValueError):
            g.add_edge(1, 1)
