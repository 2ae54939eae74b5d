"""Spike sorting: fixed-point feature extraction, k-means, and evaluation.

Feature extraction mirrors the hardware MAC path: a quantized Q1.15 feature
matrix is multiplied against raw 64-sample spike windows with 9x16-bit signed
products accumulated in a wrapping 32-bit register. Matrices come from PCA
(cyclic Jacobi eigensolver on the spike covariance) or from adaptive-filter
template tracking. Clustering is seeded k-means++ with Lloyd iterations;
inference supports squared-Euclidean and Mahalanobis distances. Accuracy
against ground truth matches detections one-to-one within a +-10 sample
tolerance and scores the best cluster-to-class assignment (Hungarian).
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import SPIKE_WINDOW
from .errors import FormatError, NeurosigError

METHOD_PCA = "pca"
METHOD_AF = "af"
METRIC_EUCLIDEAN = "euclidean"
METRIC_MAHALANOBIS = "mahalanobis"

Q15_ONE = 1 << 15
Q15_MAX = Q15_ONE - 1
MAC_WRAP = 1 << 32

MATCH_TOLERANCE = 10  # 0.5 ms at 20 kHz

MODEL_MAGIC = b"NSRT"
_METHOD_CODES = {METHOD_PCA: 0, METHOD_AF: 1}
_METRIC_CODES = {METRIC_EUCLIDEAN: 0, METRIC_MAHALANOBIS: 1}


@dataclass
class FeatureMatrix:
    """P x 64 Q1.15 rows consumed by the MAC projection path."""

    rows: np.ndarray
    method: str = METHOD_PCA

    def __post_init__(self):
        self.rows = np.ascontiguousarray(self.rows, dtype=np.int16)
        if self.rows.ndim != 2 or self.rows.shape[1] != SPIKE_WINDOW:
            raise ValueError(f"rows must be (P, {SPIKE_WINDOW})")
        if self.rows.shape[0] < 1:
            raise ValueError("need at least one feature row")
        if self.method not in (METHOD_PCA, METHOD_AF):
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def p(self):
        return self.rows.shape[0]


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray
    metric: str = METRIC_EUCLIDEAN
    inv_cov: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.centroids = np.ascontiguousarray(self.centroids, dtype=np.int64)
        if self.centroids.shape[0] != self.k:
            raise ValueError("centroid count must equal k")
        if self.metric not in (METRIC_EUCLIDEAN, METRIC_MAHALANOBIS):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.metric == METRIC_MAHALANOBIS and self.inv_cov is None:
            raise ValueError("Mahalanobis metric requires inv_cov")

    @property
    def p(self):
        return self.centroids.shape[1]


def mac_project(feature_matrix, spike):
    """Project one spike; exact integer dot products reduced mod 2^32.

    Accumulation order is ascending sample index; the result is the two's
    complement interpretation of the wrapped 32-bit accumulator.
    """
    spike = np.asarray(spike, dtype=np.int64)
    if spike.shape != (SPIKE_WINDOW,):
        raise ValueError(f"spike must have {SPIKE_WINDOW} samples")
    acc = feature_matrix.rows.astype(np.int64) @ spike
    return _wrap_i32(acc)


def mac_project_block(feature_matrix, spikes):
    spikes = np.asarray(spikes, dtype=np.int64)
    acc = spikes @ feature_matrix.rows.astype(np.int64).T
    return _wrap_i32(acc)


def _wrap_i32(acc):
    return ((acc + (1 << 31)) % MAC_WRAP - (1 << 31)).astype(np.int32)


def jacobi_eigh(matrix, tol=1e-10, max_sweeps=100):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Sweeps stop when the off-diagonal Frobenius mass falls below tol times
    the total Frobenius norm. Returns (eigenvalues desc, eigenvectors as
    columns) with a deterministic sign convention.
    """
    a = np.array(matrix, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    total = np.linalg.norm(a)
    if total == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= tol * total:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(diff) > 2.0 * abs(apq) * 1e12:
                    # Rotation angle below float resolution; asymptotic tan.
                    t = apq / diff
                elif diff == 0.0:
                    t = 1.0
                else:
                    theta = diff / (2.0 * apq)
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    evals = np.diag(a).copy()
    order = np.argsort(-evals, kind="stable")
    evals = evals[order]
    vecs = v[:, order]
    for j in range(n):
        col = vecs[:, j]
        pivot = np.argmax(np.abs(col))
        if col[pivot] < 0:
            vecs[:, j] = -col
    return evals, vecs


def _quantize_q15(rows):
    q = np.rint(rows * Q15_ONE)
    return np.clip(q, -Q15_MAX, Q15_MAX).astype(np.int16)


def pca_train(spikes, p):
    """Top-p principal components of the spike set, quantized to Q1.15.

    Rank deficiency (fewer informative directions than p) pads the remaining
    rows with zeros and warns.
    """
    spikes = np.asarray(spikes, dtype=np.float64)
    if spikes.ndim != 2 or spikes.shape[1] != SPIKE_WINDOW:
        raise ValueError(f"spikes must be (n, {SPIKE_WINDOW})")
    n = spikes.shape[0]
    if n < p + 1:
        raise ValueError(f"need at least {p + 1} spikes for p={p}")
    centered = spikes - spikes.mean(axis=0)
    cov = centered.T @ centered / n
    evals, vecs = jacobi_eigh(cov)
    scale = float(np.max(np.abs(evals))) if evals.size else 0.0
    rows = np.zeros((p, SPIKE_WINDOW))
    rank = 0
    for j in range(min(p, SPIKE_WINDOW)):
        if scale == 0.0 or evals[j] <= 1e-12 * scale:
            break
        rows[j] = vecs[:, j]
        rank += 1
    if rank < p:
        warnings.warn(f"covariance rank {rank} < p={p}; padding with zero rows")
    return FeatureMatrix(rows=_quantize_q15(rows), method=METHOD_PCA)


def af_train(spikes, k_templates, gain_shift=4):
    """Adaptive-filter templates: farthest-first seeding, leaky mean tracking.

    Each spike nudges its best-matching template by (s - w)/16; the final
    templates are L2-normalized and quantized like PCA rows so they ride the
    same MAC path.
    """
    spikes = np.asarray(spikes, dtype=np.float64)
    n = spikes.shape[0]
    if n < k_templates:
        raise ValueError("need at least k_templates spikes")
    mean = spikes.mean(axis=0)
    dist = np.sum((spikes - mean) ** 2, axis=1)
    seeds = [int(np.argmax(dist))]
    while len(seeds) < k_templates:
        chosen = spikes[seeds]
        dmin = np.min(
            np.sum((spikes[:, None, :] - chosen[None, :, :]) ** 2, axis=2), axis=1
        )
        dmin[seeds] = -1.0
        seeds.append(int(np.argmax(dmin)))
    templates = spikes[seeds].copy()
    for s in spikes:
        best = int(np.argmin(np.sum((templates - s) ** 2, axis=1)))
        templates[best] += (s - templates[best]) / (1 << gain_shift)
    rows = np.zeros_like(templates)
    for i, w in enumerate(templates):
        norm = np.linalg.norm(w)
        rows[i] = w / norm if norm > 0 else w
    return FeatureMatrix(rows=_quantize_q15(rows), method=METHOD_AF)


def kmeans_train(features, k, seed=42, metric=METRIC_EUCLIDEAN, max_iter=100, n_init=8):
    """k-means++ seeded Lloyd clustering over integer feature vectors.

    n_init restarts are drawn deterministically from the seed and the lowest
    within-cluster sum of squares wins (single inits land in bad local
    optima too often on small spike sets). An emptied cluster is re-seeded
    at the point farthest from its assigned centroid. The Mahalanobis
    variant additionally fits per-cluster covariances with Tikhonov
    regularization eps = 1e-3 * trace(cov) / P.
    """
    features = np.asarray(features, dtype=np.float64)
    n, p = features.shape
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points {n}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        centroids = _kmeans_pp_init(features, k, rng)
        assign = np.full(n, -1)
        for _ in range(max_iter):
            d2 = np.sum((features[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
            new_assign = np.argmin(d2, axis=1)
            for c in range(k):
                if not np.any(new_assign == c):
                    far = int(np.argmax(d2[np.arange(n), new_assign]))
                    centroids[c] = features[far]
                    new_assign[far] = c
            if np.array_equal(new_assign, assign):
                break
            assign = new_assign
            for c in range(k):
                centroids[c] = features[assign == c].mean(axis=0)
        d2 = np.sum((features[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        wcss = float(d2[np.arange(n), np.argmin(d2, axis=1)].sum())
        if best is None or wcss < best[0]:
            best = (wcss, centroids, assign)
    _, centroids, assign = best
    inv_cov = None
    if metric == METRIC_MAHALANOBIS:
        inv_cov = np.empty((k, p, p))
        for c in range(k):
            pts = features[assign == c] - centroids[c]
            cov = pts.T @ pts / max(len(pts), 1)
            eps = 1e-3 * np.trace(cov) / p
            if eps <= 0:
                eps = 1e-6
            cov += eps * np.eye(p)
            inv_cov[c] = np.linalg.inv(cov)
    return ClusterModel(
        k=k,
        centroids=np.rint(centroids).astype(np.int64),
        metric=metric,
        inv_cov=inv_cov,
    )


def _kmeans_pp_init(features, k, rng):
    n = features.shape[0]
    centroids = np.empty((k, features.shape[1]))
    centroids[0] = features[rng.integers(n)]
    d2 = np.sum((features - centroids[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[c] = features[rng.integers(n)]
            continue
        centroids[c] = features[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((features - centroids[c]) ** 2, axis=1))
    return centroids


def classify(model, feature):
    """Nearest-cluster index; exact integer Euclidean or float Mahalanobis.

    Ties break to the lowest cluster index.
    """
    feature = np.asarray(feature, dtype=np.int64)
    if model.metric == METRIC_EUCLIDEAN:
        best = 0
        best_d = None
        for c in range(model.k):
            diff = [int(a) - int(b) for a, b in zip(feature, model.centroids[c])]
            d = sum(v * v for v in diff)
            if best_d is None or d < best_d:
                best_d = d
                best = c
        return best
    diffs = feature[None, :] - model.centroids
    d2 = np.einsum("ki,kij,kj->k", diffs, model.inv_cov, diffs)
    return int(np.argmin(d2))


def classify_block(model, features):
    features = np.asarray(features, dtype=np.int64)
    if model.metric == METRIC_EUCLIDEAN:
        d2 = np.sum(
            (features[:, None, :] - model.centroids[None, :, :]).astype(np.float64) ** 2,
            axis=2,
        )
        labels = np.argmin(d2, axis=1)
        # Re-run the exact integer rule where float distances tie.
        sorted_d2 = np.sort(d2, axis=1)
        close = sorted_d2[:, 0] * (1 + 1e-12) >= sorted_d2[:, 1] if model.k > 1 else None
        if close is not None and np.any(close):
            for i in np.flatnonzero(close):
                labels[i] = classify(model, features[i])
        return labels.astype(np.int64)
    diffs = features[:, None, :] - model.centroids[None, :, :]
    d2 = np.einsum("nki,kij,nkj->nk", diffs, model.inv_cov, diffs)
    return np.argmin(d2, axis=1)


class MatchResult(NamedTuple):
    pairs: list
    unmatched_detections: int
    unmatched_truth: int


def match_events(det_times, gt_times, tolerance=MATCH_TOLERANCE):
    """Greedy nearest one-to-one matching within the sample tolerance."""
    candidates = []
    gt_times = np.asarray(gt_times, dtype=np.int64)
    det_times = np.asarray(det_times, dtype=np.int64)
    for i, t in enumerate(det_times.tolist()):
        lo = np.searchsorted(gt_times, t - tolerance)
        hi = np.searchsorted(gt_times, t + tolerance, side="right")
        for j in range(int(lo), int(hi)):
            candidates.append((abs(t - int(gt_times[j])), j, i))
    candidates.sort()
    det_used = set()
    gt_used = set()
    pairs = []
    for _, j, i in candidates:
        if i in det_used or j in gt_used:
            continue
        det_used.add(i)
        gt_used.add(j)
        pairs.append((i, j))
    return MatchResult(
        pairs=sorted(pairs),
        unmatched_detections=len(det_times) - len(pairs),
        unmatched_truth=len(gt_times) - len(pairs),
    )


class AccuracyResult(NamedTuple):
    accuracy: float
    matched: int
    correct: int
    confusion: np.ndarray
    assignment: dict


def accuracy_eval(det_times, det_labels, gt_times, gt_classes, tolerance=MATCH_TOLERANCE):
    """Fraction of matched spikes whose cluster maps to the true class.

    Cluster-to-class assignment maximizes the matched-and-correct count over
    the confusion matrix (Hungarian algorithm).
    """
    det_labels = np.asarray(det_labels, dtype=np.int64)
    gt_classes = np.asarray(gt_classes, dtype=np.int64)
    match = match_events(det_times, gt_times, tolerance)
    if not match.pairs:
        raise NeurosigError("accuracy undefined: no detections matched ground truth")
    n_clusters = int(det_labels.max()) + 1 if det_labels.size else 1
    n_classes = int(gt_classes.max()) + 1 if gt_classes.size else 1
    confusion = np.zeros((n_clusters, n_classes), dtype=np.int64)
    for i, j in match.pairs:
        confusion[det_labels[i], gt_classes[j]] += 1
    rows, cols = linear_sum_assignment(confusion, maximize=True)
    correct = int(confusion[rows, cols].sum())
    assignment = {int(r): int(c) for r, c in zip(rows, cols)}
    return AccuracyResult(
        accuracy=correct / len(match.pairs),
        matched=len(match.pairs),
        correct=correct,
        confusion=confusion,
        assignment=assignment,
    )


def save_model(path, feature_matrix, model):
    """Binary model file: magic NSRT, method, P, k, metric, F, centroids, inv_cov."""
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(
            struct.pack(
                "<BBBB",
                _METHOD_CODES[feature_matrix.method],
                feature_matrix.p,
                model.k,
                _METRIC_CODES[model.metric],
            )
        )
        fh.write(feature_matrix.rows.astype("<i2").tobytes())
        fh.write(model.centroids.astype("<i4").tobytes())
        if model.inv_cov is not None:
            fh.write(b"\x01")
            fh.write(model.inv_cov.astype("<f8").tobytes())
        else:
            fh.write(b"\x00")


def load_model(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MODEL_MAGIC:
        raise FormatError(f"bad model magic {data[:4]!r}", offset=0)
    method_code, p, k, metric_code = struct.unpack_from("<BBBB", data, 4)
    methods = {v: k_ for k_, v in _METHOD_CODES.items()}
    metrics = {v: k_ for k_, v in _METRIC_CODES.items()}
    pos = 8
    rows = np.frombuffer(data, dtype="<i2", count=p * SPIKE_WINDOW, offset=pos).reshape(
        p, SPIKE_WINDOW
    )
    pos += 2 * p * SPIKE_WINDOW
    centroids = np.frombuffer(data, dtype="<i4", count=k * p, offset=pos).reshape(k, p)
    pos += 4 * k * p
    has_cov = data[pos]
    pos += 1
    inv_cov = None
    if has_cov:
        inv_cov = np.frombuffer(data, dtype="<f8", count=k * p * p, offset=pos).reshape(
            k, p, p
        )
    feature_matrix = FeatureMatrix(rows=rows.copy(), method=methods[method_code])
    model = ClusterModel(
        k=k,
        centroids=centroids.astype(np.int64),
        metric=metrics[metric_code],
        inv_cov=inv_cov.copy() if inv_cov is not None else None,
    )
    return feature_matrix, model
