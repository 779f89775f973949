"""Lloyd's k-means with k-means++ seeding, restarts and canonical labels.

Labels are 1-based throughout (``1..K``) so that they read like the cluster
indicators ``D_1 .. D_K`` in exported tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TooFewPoints
from .statcore import rng_stream

MAX_LLOYD_ITER = 300


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray  # (N,) ints in 1..K
    centroids: np.ndarray  # (K, d)
    sse: float
    K: int
    sse_trace: tuple = field(default=(), compare=False)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels - 1, minlength=self.K)


@dataclass(frozen=True)
class ClusterRule:
    """Nearest-centroid rule on (optionally standardized) driver values.

    ``assign`` maps raw driver rows to labels by first applying
    ``(z - center) / scale``. Used to classify fresh draws (e.g. in the
    conditional-average-response oracle) exactly as the estimation sample was.
    """

    centroids: np.ndarray
    center: np.ndarray
    scale: np.ndarray

    @property
    def K(self) -> int:
        return len(self.centroids)

    def assign(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        return assign_labels((Z - self.center) / self.scale, self.centroids)


def _as_matrix(Z):
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    return Z


def _sq_dist(Z, centroids):
    return ((Z[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def assign_labels(Z, centroids) -> np.ndarray:
    """Nearest centroid in Euclidean distance; ties go to the lowest cluster index."""
    Z = _as_matrix(Z)
    centroids = _as_matrix(centroids)
    return np.argmin(_sq_dist(Z, centroids), axis=1) + 1


def sse_of(Z, labels, centroids) -> float:
    Z = _as_matrix(Z)
    return float(((Z - _as_matrix(centroids)[np.asarray(labels) - 1]) ** 2).sum())


def kmeans_pp_init(Z, K: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: first row uniform, later rows with probability proportional to D^2."""
    Z = _as_matrix(Z)
    n = len(Z)
    if n < K:
        raise TooFewPoints(f"{n} points for {K} clusters")
    chosen = [int(rng.integers(n))]
    d2 = ((Z - Z[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # all remaining rows coincide with chosen centroids
            free = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(free))
        chosen.append(idx)
        d2 = np.minimum(d2, ((Z - Z[idx]) ** 2).sum(axis=1))
    return Z[chosen].copy()


def _centroids_from_labels(Z, labels0, K):
    counts = np.bincount(labels0, minlength=K).astype(float)
    sums = np.column_stack([np.bincount(labels0, weights=Z[:, j], minlength=K) for j in range(Z.shape[1])])
    with np.errstate(invalid="ignore", divide="ignore"):
        return sums / counts[:, None], counts


def _repair_empty(Z, labels0, K):
    """Move the farthest points (never a cluster's last member) into empty clusters."""
    centroids, counts = _centroids_from_labels(Z, labels0, K)
    while (counts == 0).any():
        empty = int(np.argmin(counts))
        resid = ((Z - np.nan_to_num(centroids[labels0])) ** 2).sum(axis=1)
        resid[counts[labels0] <= 1] = -1.0
        labels0[int(np.argmax(resid))] = empty
        centroids, counts = _centroids_from_labels(Z, labels0, K)
    return labels0, centroids


def lloyd(Z, centroids, max_iter: int = MAX_LLOYD_ITER):
    """Run Lloyd iterations to a fixed labeling.

    Returns ``(labels (1-based), centroids, sse_trace)``. Empty clusters are
    repaired by moving in the point farthest from its own centroid. Iteration
    stops when the assignment step leaves the labels unchanged or no longer
    lowers the SSE (which only happens with exact distance ties).
    """
    Z = _as_matrix(Z)
    centroids = np.array(centroids, dtype=float)
    K = len(centroids)
    labels0 = np.argmin(_sq_dist(Z, centroids), axis=1)
    trace = []
    for _ in range(max_iter):
        labels0, centroids = _repair_empty(Z, labels0, K)
        trace.append(float(((Z - centroids[labels0]) ** 2).sum()))
        new = np.argmin(_sq_dist(Z, centroids), axis=1)
        if np.array_equal(new, labels0) or float(((Z - centroids[new]) ** 2).sum()) >= trace[-1]:
            break
        labels0 = new
    else:
        labels0, centroids = _repair_empty(Z, labels0, K)
        trace.append(float(((Z - centroids[labels0]) ** 2).sum()))
    return labels0 + 1, centroids, tuple(trace)


def canonicalize(assignment: ClusterAssignment) -> ClusterAssignment:
    """Relabel clusters 1..K in lexicographic order of centroid coordinates."""
    C = assignment.centroids
    order = np.lexsort(C.T[::-1]) if C.shape[1] else np.arange(len(C))
    new_of_old = np.empty(len(order), dtype=int)
    new_of_old[order] = np.arange(len(order))
    labels = new_of_old[assignment.labels - 1] + 1
    return ClusterAssignment(
        labels=labels,
        centroids=C[order].copy(),
        sse=assignment.sse,
        K=assignment.K,
        sse_trace=assignment.sse_trace,
    )


def kmeans_fit(Z, K: int, seed: int = 0, restarts: int = 10, stream: tuple = ()) -> ClusterAssignment:
    """Best-of-``restarts`` k-means.

    Restart ``r`` draws its seeding from ``rng_stream(seed, stream + (r,))``; the
    lowest-SSE run wins with ties going to the lowest restart index. The result is
    canonicalized.
    """
    Z = _as_matrix(Z)
    if not np.isfinite(Z).all():
        raise ValueError("driver matrix contains non-finite values")
    n = len(Z)
    if K < 1:
        raise ValueError("K must be positive")
    if n < K:
        raise TooFewPoints(f"{n} points for {K} clusters")
    best = None
    for r in range(restarts):
        rng = rng_stream(seed, tuple(stream) + (r,))
        init = kmeans_pp_init(Z, K, rng)
        labels, centroids, trace = lloyd(Z, init)
        sse = sse_of(Z, labels, centroids)
        if best is None or sse < best.sse:
            best = ClusterAssignment(labels=labels, centroids=centroids, sse=sse, K=K, sse_trace=trace)
    return canonicalize(best)


def assignment_from_labels(Z, labels, K: int | None = None) -> ClusterAssignment:
    """Build an assignment for a fixed partition (centroids are member means)."""
    Z = _as_matrix(Z)
    labels = np.asarray(labels, dtype=int)
    K = int(labels.max()) if K is None else K
    centroids, _ = _centroids_from_labels(Z, labels - 1, K)
    sse = float(np.nansum((Z - centroids[labels - 1]) ** 2))
    return ClusterAssignment(labels=labels, centroids=centroids, sse=sse, K=K)
