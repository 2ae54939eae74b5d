import itertools

import numpy as np
import pytest

from neurosig import sort
from neurosig.errors import NeurosigError
from neurosig.sort import (
    ClusterModel,
    FeatureMatrix,
    accuracy_eval,
    af_train,
    classify,
    classify_block,
    jacobi_eigh,
    kmeans_train,
    load_model,
    mac_project,
    mac_project_block,
    match_events,
    pca_train,
    save_model,
)


def _spike_classes(rng, n_per_class=120, sep=60.0, noise=6.0):
    """Three synthetic waveform classes with controllable separation."""
    t = np.arange(64)
    base = [
        np.exp(-((t - 20) / 3.0) ** 2) - 0.5 * np.exp(-((t - 28) / 6.0) ** 2),
        np.exp(-((t - 20) / 6.0) ** 2) - 0.3 * np.exp(-((t - 34) / 8.0) ** 2),
        np.exp(-((t - 18) / 2.2) ** 2) - 0.8 * np.exp(-((t - 25) / 4.0) ** 2),
    ]
    spikes = []
    labels = []
    for cls, shape in enumerate(base):
        for _ in range(n_per_class):
            w = sep * shape + rng.normal(0, noise, size=64)
            spikes.append(np.clip(np.rint(w), -256, 255))
        labels += [cls] * n_per_class
    return np.asarray(spikes, dtype=np.int16), np.asarray(labels)


class TestMacProject:
    def test_zero_spike(self):
        F = FeatureMatrix(rows=np.ones((3, 64), dtype=np.int16))
        assert mac_project(F, np.zeros(64, dtype=np.int16)).tolist() == [0, 0, 0]

    def test_one_hot_single_product(self):
        rows = np.zeros((1, 64), dtype=np.int16)
        rows[0, 5] = 2**15 - 1
        spike = np.zeros(64, dtype=np.int16)
        spike[5] = 2
        assert mac_project(FeatureMatrix(rows=rows), spike)[0] == 65534

    def test_matches_bigint_oracle_mod_2_32(self, rng):
        for _ in range(200):
            rows = rng.integers(-32768, 32768, size=(4, 64)).astype(np.int16)
            spike = rng.integers(-256, 256, size=64).astype(np.int16)
            got = mac_project(FeatureMatrix(rows=rows), spike)
            for r in range(4):
                exact = sum(int(a) * int(b) for a, b in zip(rows[r], spike))
                wrapped = (exact + 2**31) % 2**32 - 2**31
                assert int(got[r]) == wrapped

    def test_block_matches_single(self, rng):
        rows = rng.integers(-32768, 32768, size=(3, 64)).astype(np.int16)
        F = FeatureMatrix(rows=rows)
        spikes = rng.integers(-256, 256, size=(50, 64)).astype(np.int16)
        block = mac_project_block(F, spikes)
        for i in range(50):
            assert np.array_equal(block[i], mac_project(F, spikes[i]))


class TestJacobi:
    def test_matches_numpy_eigh(self, rng):
        a = rng.normal(size=(24, 24))
        a = a @ a.T
        evals, evecs = jacobi_eigh(a)
        ref = np.sort(np.linalg.eigvalsh(a))[::-1]
        assert np.allclose(evals, ref, atol=1e-8)
        assert np.allclose(a @ evecs, evecs * evals, atol=1e-6)

    def test_orthonormal_basis(self, rng):
        a = rng.normal(size=(16, 16))
        a = a + a.T
        _, v = jacobi_eigh(a)
        assert np.allclose(v.T @ v, np.eye(16), atol=1e-9)

    def test_zero_matrix(self):
        evals, evecs = jacobi_eigh(np.zeros((5, 5)))
        assert np.allclose(evals, 0)
        assert np.allclose(evecs, np.eye(5))


class TestPcaTrain:
    def test_rank_one_line_recovered(self, rng):
        direction = rng.normal(size=64)
        direction /= np.linalg.norm(direction)
        coeffs = rng.normal(0, 50, size=200)
        spikes = np.rint(np.outer(coeffs, direction)).astype(np.int16)
        F = pca_train(spikes, 1)
        got = F.rows[0].astype(float) / 2**15
        cos = abs(np.dot(got, direction)) / np.linalg.norm(got)
        assert cos > 0.999

    def test_full_rank_orthonormality_after_quantization(self, rng):
        spikes = rng.integers(-200, 200, size=(300, 64)).astype(np.int16)
        F = pca_train(spikes, 64)
        deq = F.rows.astype(float) / 2**15
        gram = deq @ deq.T
        off = gram - np.diag(np.diag(gram))
        assert np.max(np.abs(off)) < 2**-10

    def test_unit_row_norms_within_quantization(self, rng):
        spikes, _ = _spike_classes(rng)
        F = pca_train(spikes, 3)
        norms = np.linalg.norm(F.rows.astype(float) / 2**15, axis=1)
        assert np.all(np.abs(norms - 1) < 2**-10)

    def test_identical_spikes_degenerate_path(self, rng):
        spikes = np.tile(rng.integers(-100, 100, size=64), (20, 1)).astype(np.int16)
        with pytest.warns(UserWarning, match="rank"):
            F = pca_train(spikes, 3)
        assert not F.rows.any()  # zero covariance pads all rows

    def test_too_few_spikes_rejected(self):
        with pytest.raises(ValueError):
            pca_train(np.zeros((3, 64), dtype=np.int16), 3)


class TestAfTrain:
    def test_two_class_templates_converge(self, rng):
        spikes, labels = _spike_classes(rng, n_per_class=300, sep=80.0, noise=4.0)
        two = spikes[labels != 2]
        F = af_train(two, 2)
        class_means = [two[labels[labels != 2] == c].mean(axis=0) for c in (0, 1)]
        for row in F.rows.astype(float):
            angles = []
            for mean in class_means:
                cos = np.dot(row, mean) / (np.linalg.norm(row) * np.linalg.norm(mean))
                angles.append(np.degrees(np.arccos(np.clip(abs(cos), 0, 1))))
            assert min(angles) < 10.0

    def test_single_template_identical_spikes(self, rng):
        spike = rng.integers(-100, 100, size=64).astype(np.int16)
        spikes = np.tile(spike, (200, 1))
        F = af_train(spikes, 1)
        got = F.rows[0].astype(float) / 2**15
        expected = spike / np.linalg.norm(spike)
        assert np.max(np.abs(got - expected)) <= 2 / 2**10

    def test_more_templates_than_classes_is_valid(self, rng):
        spikes, _ = _spike_classes(rng, n_per_class=50)
        F = af_train(spikes, 5)
        assert F.rows.shape == (5, 64)
        assert np.all(np.isfinite(F.rows))


class TestKmeans:
    def test_separated_singletons(self):
        feats = np.array([[0], [10], [0], [10], [1], [9]])
        model = kmeans_train(feats, 2, seed=1)
        centroids = sorted(int(c[0]) for c in model.centroids)
        assert centroids[0] in (0, 1) and centroids[1] in (9, 10)

    def test_three_blobs_recovered(self, rng):
        centers = np.array([[0, 0, 0], [100, 0, 50], [0, 120, -40]])
        feats = np.concatenate(
            [rng.normal(c, 5.0, size=(200, 3)) for c in centers]
        ).astype(np.int64)
        model = kmeans_train(feats, 3, seed=42)
        got = np.asarray(sorted(model.centroids.tolist()))
        want = np.asarray(sorted(centers.tolist()))
        assert np.max(np.abs(got - want)) < 3 * 5.0 / np.sqrt(200) * 3 + 2

    def test_empty_cluster_reseeded_at_far_point(self):
        # collinear points with a far outlier; k=3 forces a reseed event
        feats = np.array([[0], [1], [2], [3], [1000]])
        model = kmeans_train(feats, 3, seed=0)
        assert len(np.unique(model.centroids, axis=0)) == 3

    def test_k_larger_than_points_rejected(self):
        with pytest.raises(ValueError):
            kmeans_train(np.zeros((2, 3)), 5)

    def test_objective_non_increasing(self, rng):
        feats = rng.normal(0, 50, size=(400, 3))
        wcss = []
        assign = None
        centroids = sort._kmeans_pp_init(feats, 4, np.random.default_rng(42))
        for _ in range(30):
            d2 = np.sum((feats[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
            assign = np.argmin(d2, axis=1)
            wcss.append(float(d2[np.arange(len(feats)), assign].sum()))
            for c in range(4):
                pts = feats[assign == c]
                if len(pts):
                    centroids[c] = pts.mean(axis=0)
        assert all(b <= a + 1e-9 for a, b in zip(wcss, wcss[1:]))


class TestClassify:
    def test_exact_centroid_hit(self):
        model = ClusterModel(k=2, centroids=np.array([[0, 0], [10, 10]]))
        assert classify(model, np.array([10, 10])) == 1

    def test_tie_breaks_to_lowest_index(self):
        model = ClusterModel(k=2, centroids=np.array([[0], [10]]))
        assert classify(model, np.array([5])) == 0

    def test_scaling_invariance(self, rng):
        centroids = rng.integers(-100, 100, size=(4, 3))
        model = ClusterModel(k=4, centroids=centroids)
        scaled = ClusterModel(k=4, centroids=centroids * 7)
        for _ in range(100):
            f = rng.integers(-150, 150, size=3)
            assert classify(model, f) == classify(scaled, f * 7)

    def test_mahalanobis_disagrees_with_euclidean_on_anisotropy(self):
        """Hand-built 2D case: Euclidean picks cluster 1, Mahalanobis picks
        cluster 0 whose elongated covariance absorbs the offset."""
        centroids = np.array([[0, 0], [14, 0]])
        inv_cov = np.empty((2, 2, 2))
        inv_cov[0] = np.linalg.inv(np.array([[100.0, 0.0], [0.0, 1.0]]))
        inv_cov[1] = np.linalg.inv(np.array([[1.0, 0.0], [0.0, 1.0]]))
        maha = ClusterModel(
            k=2, centroids=centroids, metric="mahalanobis", inv_cov=inv_cov
        )
        eucl = ClusterModel(k=2, centroids=centroids)
        f = np.array([8, 0])
        assert classify(eucl, f) == 1
        d0 = 8**2 / 100.0
        d1 = 6**2 / 1.0
        assert d0 < d1
        assert classify(maha, f) == 0

    def test_block_matches_scalar(self, rng):
        centroids = rng.integers(-100, 100, size=(3, 4))
        model = ClusterModel(k=3, centroids=centroids)
        feats = rng.integers(-200, 200, size=(100, 4))
        block = classify_block(model, feats)
        assert block.tolist() == [classify(model, f) for f in feats]


class TestMatchingAndAccuracy:
    def test_perfect_labels(self):
        times = [100, 200, 300]
        res = accuracy_eval(times, [0, 1, 2], times, [0, 1, 2])
        assert res.accuracy == 1.0

    def test_matching_tolerance_window(self):
        res = match_events([100, 300], [108, 292, 500])
        assert res.pairs == [(0, 0), (1, 1)]
        res = match_events([100], [111])
        assert res.pairs == []

    def test_one_to_one_greedy_nearest(self):
        # one detection between two truths: nearest wins, no double match
        res = match_events([100], [95, 104])
        assert res.pairs == [(0, 1)]
        assert res.unmatched_truth == 1

    def test_permuted_labels_near_chance(self, rng):
        n = 3000
        times = np.arange(n) * 100 + 50
        classes = rng.integers(0, 3, size=n)
        labels = rng.permutation(classes)
        res = accuracy_eval(times, labels, times, classes)
        assert abs(res.accuracy - 1 / 3) < 0.02

    def test_hungarian_beats_every_fixed_permutation(self, rng):
        for k in (2, 3, 4, 5):
            times = np.arange(600) * 50 + 50
            classes = rng.integers(0, k, size=600)
            labels = (classes + rng.integers(0, k, size=600) * (rng.random(600) < 0.4)) % k
            res = accuracy_eval(times, labels, times, classes)
            best = 0
            for perm in itertools.permutations(range(k)):
                correct = sum(1 for l, c in zip(labels, classes) if perm[l] == c)
                best = max(best, correct)
            assert res.correct == best

    def test_no_matches_is_an_error(self):
        with pytest.raises(NeurosigError):
            accuracy_eval([100], [0], [500], [0])


def test_model_file_round_trip(tmp_path, rng):
    spikes, _ = _spike_classes(rng)
    F = pca_train(spikes, 3)
    feats = mac_project_block(F, spikes)
    model = kmeans_train(feats, 3, seed=42, metric="mahalanobis")
    path = tmp_path / "m.nsrt"
    save_model(path, F, model)
    F2, model2 = load_model(path)
    assert np.array_equal(F2.rows, F.rows)
    assert F2.method == F.method
    assert np.array_equal(model2.centroids, model.centroids)
    assert model2.metric == model.metric
    assert np.allclose(model2.inv_cov, model.inv_cov)
    assert np.array_equal(classify_block(model2, feats), classify_block(model, feats))


def test_end_to_end_synthetic_three_classes(rng):
    spikes, labels = _spike_classes(rng, n_per_class=200, sep=70.0, noise=5.0)
    F = pca_train(spikes, 3)
    feats = mac_project_block(F, spikes)
    model = kmeans_train(feats, 3, seed=42)
    got = classify_block(model, feats)
    times = np.arange(len(labels)) * 100 + 50
    res = accuracy_eval(times, got, times, labels)
    assert res.accuracy > 0.99
