from __future__ import annotations

import numpy as np
import pytest

from friendlab.features import FeatureSet
from friendlab.propagation import (
    SimilarityGraph,
    build_similarity_graph,
    propagate,
    remediate_and_repropagate,
    uncertain_players,
)


def feature_set(vectors: np.ndarray) -> FeatureSet:
    n = vectors.shape[0]
    return FeatureSet(
        players=list(range(n)),
        channels={
            "social": vectors,
            "gameplay": vectors.copy(),
            "avatar": vectors.copy(),
            "baseline": vectors.copy(),
        },
    )


def two_cluster_vectors(n: int, seed: int = 0, spread: float = 0.3) -> np.ndarray:
    rng = np.random.default_rng(seed)
    half = n // 2
    a = np.array([4.0, 0.0, 0.0]) + spread * rng.normal(size=(half, 3))
    b = np.array([0.0, 4.0, 0.0]) + spread * rng.normal(size=(n - half, 3))
    return np.vstack([a, b])


def path_graph() -> SimilarityGraph:
    """Three players on a line: 0 - 1 - 2 with equal weights."""
    vectors = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    fs = feature_set(vectors)
    g = build_similarity_graph([0, 1, 2], fs, k=1)
    return g


class TestBuildGraph:
    def test_identical_vectors_complete_triangle(self):
        fs = feature_set(np.ones((3, 4)))
        g = build_similarity_graph([0, 1, 2], fs, k=2)
        assert g.edge_count() == 3
        off_diag = g.weights[~np.eye(3, dtype=bool)]
        assert np.allclose(off_diag, np.exp(0.0))

    def test_k_clamps_to_group(self):
        fs = feature_set(np.eye(5))
        g = build_similarity_graph(range(5), fs, k=50)
        assert g.edge_count() == 10  # complete graph on 5

    def test_too_small_group(self):
        fs = feature_set(np.eye(3))
        with pytest.raises(ValueError):
            build_similarity_graph([0], fs)

    def test_planted_clusters_mostly_intra(self):
        vectors = two_cluster_vectors(40, seed=3)
        fs = feature_set(vectors)
        g = build_similarity_graph(range(40), fs, k=5)
        intra = inter = 0
        for i in range(40):
            for j in range(i + 1, 40):
                if g.weights[i, j] > 0:
                    if (i < 20) == (j < 20):
                        intra += 1
                    else:
                        inter += 1
        assert intra / (intra + inter) >= 0.95

    def test_transition_rows_stochastic(self):
        vectors = two_cluster_vectors(20, seed=5)
        fs = feature_set(vectors)
        g = build_similarity_graph(range(20), fs, k=4)
        sums = g.transition.sum(axis=1)
        assert np.allclose(sums, 1.0, atol=1e-9)


class TestPropagate:
    def test_fully_labeled_is_identity(self):
        fs = feature_set(np.ones((3, 2)))
        g = build_similarity_graph([0, 1, 2], fs, k=2)
        labels = {0: "r1", 1: "r2", 2: "r1"}
        result = propagate(g, labels)
        for player, rid in labels.items():
            assert result.assigned(player) == rid
            assert result.distribution(player)[rid] == pytest.approx(1.0)

    def test_path_symmetry(self):
        g = path_graph()
        result = propagate(g, {0: "r1", 2: "r2"})
        dist = result.distribution(1)
        assert dist["r1"] == pytest.approx(0.5, abs=1e-6)
        assert dist["r2"] == pytest.approx(0.5, abs=1e-6)

    def test_rows_sum_to_one(self):
        vectors = two_cluster_vectors(30, seed=2)
        fs = feature_set(vectors)
        g = build_similarity_graph(range(30), fs, k=4)
        result = propagate(g, {0: "a", 29: "b"})
        assert np.allclose(result.probabilities.sum(axis=1), 1.0, atol=1e-9)

    def test_two_cluster_agreement(self):
        for n in (40, 400):
            vectors = two_cluster_vectors(n, seed=7)
            fs = feature_set(vectors)
            g = build_similarity_graph(range(n), fs, k=8)
            result = propagate(g, {0: "left", n - 1: "right"})
            assert result.converged
            correct = sum(
                1
                for i, player in enumerate(result.players)
                if result.assigned(player) == ("left" if player < n // 2 else "right")
            )
            assert correct / n >= 0.95

    def test_no_labels_rejected(self):
        g = path_graph()
        with pytest.raises(ValueError):
            propagate(g, {})

    def test_label_outside_group_rejected(self):
        g = path_graph()
        with pytest.raises(KeyError):
            propagate(g, {99: "r1"})

    def test_representatives_keep_their_label(self):
        vectors = two_cluster_vectors(30, seed=9)
        fs = feature_set(vectors)
        g = build_similarity_graph(range(30), fs, k=5)
        # deliberately label a left-cluster player with the "wrong" ratio
        result = propagate(g, {0: "odd", 1: "left", 29: "right"})
        assert result.assigned(0) == "odd"

    def test_permutation_equivariance(self):
        vectors = two_cluster_vectors(12, seed=4)
        fs_a = feature_set(vectors)
        g_a = build_similarity_graph(range(12), fs_a, k=3)
        res_a = propagate(g_a, {0: "x", 11: "y"})

        # relabel players 0..11 -> 100..111 (order preserving)
        fs_b = FeatureSet(
            players=[100 + i for i in range(12)],
            channels={c: m.copy() for c, m in fs_a.channels.items()},
        )
        g_b = build_similarity_graph([100 + i for i in range(12)], fs_b, k=3)
        res_b = propagate(g_b, {100: "x", 111: "y"})
        assert np.allclose(res_a.probabilities, res_b.probabilities, atol=1e-12)

    def test_round_trip_serialization(self):
        g = path_graph()
        result = propagate(g, {0: "r1", 2: "r2"})
        from friendlab.propagation import PropagationResult

        restored = PropagationResult.from_dict(result.to_dict())
        assert np.allclose(restored.probabilities, result.probabilities)
        assert restored.labeled == result.labeled


class TestUncertain:
    def test_dominance(self):
        g = path_graph()
        result = propagate(g, {0: "r1", 2: "r2"})
        # only player 1 is unlabelled
        rows = uncertain_players(result, k=5)
        assert [r[0] for r in rows] == [1]
        assert rows[0][2] == pytest.approx(0.5, abs=1e-6)

    def test_ordering_and_ties(self):
        vectors = two_cluster_vectors(10, seed=6)
        fs = feature_set(vectors)
        g = build_similarity_graph(range(10), fs, k=3)
        result = propagate(g, {0: "a", 9: "b"})
        rows = uncertain_players(result, k=10)
        uncertainties = [u for _, _, u in rows]
        assert uncertainties == sorted(uncertainties, reverse=True)
        assert all(player not in result.labeled for player, _, _ in rows)

    def test_k_validation(self):
        g = path_graph()
        result = propagate(g, {0: "r1"})
        with pytest.raises(ValueError):
            uncertain_players(result, k=0)


class TestRemediate:
    def test_outlier_signature_and_improvement(self):
        # one representative is an outlier: its ratio's propagation
        # probabilities stay low everywhere else
        rng = np.random.default_rng(12)
        core = np.array([4.0, 0.0, 0.0]) + 0.2 * rng.normal(size=(30, 3))
        outlier = np.array([[-4.0, 0.0, 1.0]])
        vectors = np.vstack([core, outlier])
        fs = feature_set(vectors)
        g = build_similarity_graph(range(31), fs, k=8)
        labels = {0: "core", 30: "outlier"}
        result = propagate(g, labels)
        others = [p for p in result.players if p not in labels]
        outlier_probs = [result.distribution(p)["outlier"] for p in others]
        assert max(outlier_probs) < 0.2

        before = float(
            np.mean([result.probabilities[result.players.index(p)].max() for p in others])
        )
        worst = uncertain_players(result, k=1)[0][0]
        updated, after_result = remediate_and_repropagate(g, labels, worst, "core")
        remaining = [p for p in after_result.players if p not in updated]
        after = float(
            np.mean(
                [
                    after_result.probabilities[after_result.players.index(p)].max()
                    for p in remaining
                ]
            )
        )
        assert after > before

    def test_relabel_bridge_clamps(self):
        g = path_graph()
        labels = {0: "r1", 2: "r2"}
        updated, result = remediate_and_repropagate(g, labels, 1, "r1")
        assert result.assigned(1) == "r1"
        assert result.uncertainty(1) == pytest.approx(0.0, abs=1e-12)

    def test_existing_ratio_reuse_keeps_ratio_count(self):
        vectors = two_cluster_vectors(10, seed=8)
        fs = feature_set(vectors)
        g = build_similarity_graph(range(10), fs, k=3)
        labels = {0: "a", 9: "b"}
        updated, result = remediate_and_repropagate(g, labels, 5, "a")
        assert len(updated) == 3
        assert set(result.ratio_ids) == {"a", "b"}

    def test_unknown_player_rejected(self):
        g = path_graph()
        with pytest.raises(KeyError):
            remediate_and_repropagate(g, {0: "r1"}, 42, "r1")
