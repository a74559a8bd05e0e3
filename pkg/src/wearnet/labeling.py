"""Unsupervised wear-level labeling with Lloyd's K-means.

Clusters are found on the entropy-of-feature series and renumbered so that
level 0 has the lowest centroid (healthiest) and level K-1 the highest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError

WEAR_LEVEL_NAMES = (
    "0%-9%",
    "10%-24%",
    "25%-39%",
    "40%-54%",
    "55%-69%",
    "70%-84%",
    "85%-100%",
)

DEFAULT_RESTARTS = 10
DEFAULT_MAX_ITER = 300
DEFAULT_TOL = 1e-9


def level_names(k: int) -> tuple[str, ...]:
    if k == len(WEAR_LEVEL_NAMES):
        return WEAR_LEVEL_NAMES
    return tuple(f"level-{i}" for i in range(k))


def _as_points(points) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError("points must be 1-D or 2-D")
    return x


def _sq_dist(x, centroids):
    return ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def wcss(points, centroids, assignment) -> float:
    """Within-cluster sum of squares."""
    x = _as_points(points)
    c = _as_points(centroids)
    return float(((x - c[np.asarray(assignment)]) ** 2).sum())


def kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]))
    centroids[0] = x[rng.integers(n)]
    d2 = _sq_dist(x, centroids[:1]).ravel()
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centroids[j] = x[idx]
        d2 = np.minimum(d2, _sq_dist(x, centroids[j : j + 1]).ravel())
    return centroids


def lloyd(x: np.ndarray, centroids: np.ndarray, max_iter: int, tol: float, history=None):
    """Lloyd iterations from ``centroids``; returns (centroids, assignment, n_iter).

    Ties go to the lower centroid index.  An empty cluster is reseeded with the
    point farthest from its own centroid.  If ``history`` is a list, the WCSS
    after each assignment step is appended to it.
    """
    c = centroids.copy()
    k = c.shape[0]
    assign = np.zeros(x.shape[0], dtype=np.intp)
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d2 = _sq_dist(x, c)
        assign = np.argmin(d2, axis=1)
        if history is not None:
            history.append(float(d2[np.arange(x.shape[0]), assign].sum()))
        new = c.copy()
        for j in range(k):
            members = assign == j
            if members.any():
                new[j] = x[members].mean(axis=0)
            else:
                own = d2[np.arange(x.shape[0]), assign]
                far = int(np.argmax(own))
                new[j] = x[far]
                assign[far] = j
                d2[far, :] = 0.0
        shift = np.sqrt(((new - c) ** 2).sum(axis=1)).max()
        c = new
        if shift < tol:
            break
    assign = np.argmin(_sq_dist(x, c), axis=1)
    return c, assign, n_iter


def kmeans(points, k: int, seed: int = 0, max_iter: int = DEFAULT_MAX_ITER,
           tol: float = DEFAULT_TOL, restarts: int = DEFAULT_RESTARTS):
    """Best-of-``restarts`` K-means on 1-D or 2-D points.

    Returns ``(centroids, assignment)`` with centroids shaped ``(k, dim)``.
    The restart with the lowest WCSS wins; ties keep the earliest restart.
    """
    x = _as_points(points)
    if k < 1:
        raise ValueError("k must be positive")
    if x.shape[0] < k:
        raise CapacityError(f"{x.shape[0]} points cannot form {k} clusters")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, restarts)):
        init = kmeans_pp_init(x, k, rng)
        c, a, _ = lloyd(x, init, max_iter, tol)
        score = wcss(x, c, a)
        if best is None or score < best[0]:
            best = (score, c, a)
    return best[1], best[2]


def kmeans_1d(points, K: int, seed: int = 0, max_iter: int = DEFAULT_MAX_ITER,
              tol: float = DEFAULT_TOL, restarts: int = DEFAULT_RESTARTS):
    c, a = kmeans(np.asarray(points, dtype=np.float64).ravel(), K, seed, max_iter, tol, restarts)
    return c[:, 0], a


@dataclass(frozen=True)
class WearLabeling:
    K: int
    centroids: np.ndarray
    assignment: np.ndarray
    level_names: tuple[str, ...]

    def counts(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.K)

    def name_of(self, snapshot: int) -> str:
        return self.level_names[self.assignment[snapshot]]


def order_by_centroid(centroids, assignment):
    """Renumber clusters so centroid values ascend (first coordinate)."""
    c = _as_points(centroids)
    order = np.argsort(c[:, 0], kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return c[order], rank[np.asarray(assignment)]


def label_run(entropy, K: int = 7, seed: int = 0, window_len: int = 1,
              features=None, **kmeans_kw) -> WearLabeling:
    """Assign every snapshot a wear level.

    ``entropy[j]`` belongs to the snapshot closing its window, i.e. snapshot
    ``j + window_len - 1``; the first ``window_len - 1`` snapshots inherit
    the level of the first labeled one.  Passing ``features`` (the raw
    feature values aligned the same way as ``entropy``) clusters 2-D
    (entropy, feature) points instead of entropy alone.
    """
    h = np.asarray(entropy, dtype=np.float64).ravel()
    if features is not None:
        f = np.asarray(features, dtype=np.float64).ravel()
        if f.size != h.size:
            raise ValueError("features must align with entropy")
        pts = np.column_stack([h, f])
    else:
        pts = h
    centroids, assign = kmeans(pts, K, seed, **kmeans_kw)
    centroids, assign = order_by_centroid(centroids, assign)
    # centroids equal up to rounding (e.g. constant input) resolve to the lower level
    x = _as_points(pts)
    d2 = _sq_dist(x, centroids)
    near = d2 <= d2.min(axis=1, keepdims=True) + 1e-12 * (1.0 + np.abs(x).max()) ** 2
    assign = np.argmax(near, axis=1)
    full = np.concatenate([np.full(window_len - 1, assign[0], dtype=np.intp), assign])
    cents = centroids[:, 0] if features is None else centroids
    return WearLabeling(K, cents, full.astype(np.intp), level_names(K))
