"""Server clustering: k-means++ on (hops, delay) features and spectral
clustering on the switch adjacency graph.

Both paths share the same seeded D²-sampling initializer and Lloyd refiner,
so a fixed seed yields a bit-identical model on every run.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .rng import SplitMix64
from .topology import FeatureSet, Topology, all_pairs_shortest_paths, server_features

DEFAULT_RESTARTS = 10


class ClusteringError(ValueError):
    """Invalid clustering input or configuration."""


@dataclass(frozen=True)
class ClusteringConfig:
    k: int
    max_iterations: int = 100
    tolerance: float = 1e-9
    rng_seed: int = 0
    normalize_features: bool = False
    restarts: int = DEFAULT_RESTARTS

    def __post_init__(self):
        if self.k < 1:
            raise ClusteringError("k must be >= 1")
        if self.max_iterations < 1:
            raise ClusteringError("max_iterations must be >= 1")
        if self.tolerance < 0:
            raise ClusteringError("tolerance must be >= 0")
        if self.restarts < 1:
            raise ClusteringError("restarts must be >= 1")


@dataclass(frozen=True)
class ClusterModel:
    """Point-to-cluster assignment with per-cluster centroid statistics.

    assignment is parallel to the FeatureSet it was fitted on; centroids are
    (mean_hops, mean_delay_ms) in original feature units; sse is measured in
    the space the clustering actually ran in (normalized or embedding space
    where applicable); priority_order lists cluster indices ascending by
    (mean_hops, mean_delay_ms). Labels are canonical: clusters are numbered
    by priority rank, so priority_order is the identity permutation.
    sse_trace records per-iteration SSE of the winning run.
    """

    assignment: tuple[int, ...]
    centroids: tuple[tuple[float, float], ...]
    sse: float
    priority_order: tuple[int, ...]
    sse_trace: tuple[float, ...] = ()

    @property
    def n_clusters(self) -> int:
        return len(self.centroids)

    def members(self, cluster: int) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.assignment) if c == cluster)


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    switch_ids: tuple[str, ...]
    entries: np.ndarray
    kind: str = "adjacency"


def effective_k(requested_k: int, n_points: int) -> int:
    """Cluster count actually used: the requested k, capped at the number
    of points available."""
    if requested_k < 1 or n_points < 1:
        raise ClusteringError("requested_k and n_points must be >= 1")
    return min(requested_k, n_points)


# -- k-means++ core ---------------------------------------------------------


def _d2_seed(points: np.ndarray, k: int, rng: SplitMix64) -> np.ndarray:
    """D²-sampling: first center uniform, later centers proportional to the
    squared distance to the nearest chosen center. If all remaining mass is
    zero (duplicate points), the next center is uniform among points."""
    n = len(points)
    if k > n:
        raise ClusteringError(f"cannot seed {k} centers from {n} points")
    chosen = [rng.below(n)]
    d2 = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(k - 1):
        total = float(d2.sum())
        if total > 0.0:
            u = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), u, side="right"))
            idx = min(idx, n - 1)
        else:
            idx = rng.below(n)
        chosen.append(idx)
        d2 = np.minimum(d2, ((points - points[idx]) ** 2).sum(axis=1))
    return points[chosen].astype(float).copy()


def kmeanspp_seed(features: FeatureSet, k: int, rng_seed: int) -> np.ndarray:
    """Pick k initial centroids from the feature points (deterministic for a
    given rng_seed). Returns a (k, 2) array."""
    return _d2_seed(features.array, k, SplitMix64(rng_seed))


def _reseed_empty(
    dist2: np.ndarray, assignment: np.ndarray, k: int
) -> np.ndarray:
    """Move the point farthest from its assigned centroid into each empty
    cluster (candidates only from clusters that keep >= 1 member)."""
    assignment = assignment.copy()
    for cluster in range(k):
        if (assignment == cluster).any():
            continue
        counts = np.bincount(assignment, minlength=k)
        movable = counts[assignment] >= 2
        if not movable.any():
            raise ClusteringError("more clusters than points; cannot fill empty cluster")
        cost = np.where(movable, dist2[np.arange(len(assignment)), assignment], -1.0)
        assignment[int(cost.argmax())] = cluster
    return assignment


def _lloyd(
    points: np.ndarray, initial_centroids: np.ndarray, config: ClusteringConfig
) -> tuple[np.ndarray, np.ndarray, float, tuple[float, ...]]:
    """Lloyd refinement. Returns (assignment, centroids, sse, sse_trace)."""
    k = len(initial_centroids)
    if k < 1:
        raise ClusteringError("need at least one initial centroid")
    if k > len(points):
        raise ClusteringError("more initial centroids than points")

    centroids = np.asarray(initial_centroids, dtype=float)
    assignment = np.full(len(points), -1, dtype=np.int64)
    trace: list[float] = []
    prev_sse = math.inf
    sse = math.inf
    for _ in range(config.max_iterations):
        dist2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assignment = dist2.argmin(axis=1)  # ties go to the lowest index
        if (np.bincount(new_assignment, minlength=k) == 0).any():
            new_assignment = _reseed_empty(dist2, new_assignment, k)
        centroids = np.stack([points[new_assignment == c].mean(axis=0) for c in range(k)])
        sse = float(((points - centroids[new_assignment]) ** 2).sum())
        assert not trace or sse <= trace[-1] + 1e-9, "Lloyd SSE increased"
        trace.append(sse)
        stable = bool(np.array_equal(new_assignment, assignment))
        assignment = new_assignment
        if stable or prev_sse - sse < config.tolerance:
            break
        prev_sse = sse
    return assignment, centroids, sse, tuple(trace)


def lloyd(
    features: FeatureSet, initial_centroids: np.ndarray, config: ClusteringConfig
) -> ClusterModel:
    """Run Lloyd refinement from the given centroids over raw features."""
    assignment, centroids, sse, trace = _lloyd(features.array, initial_centroids, config)
    return _model_from(assignment, centroids, sse, trace)


def _priority_order(centroids: np.ndarray) -> tuple[int, ...]:
    return tuple(
        sorted(range(len(centroids)), key=lambda c: (centroids[c][0], centroids[c][1], c))
    )


def _model_from(
    assignment: np.ndarray, centroids: np.ndarray, sse: float, trace: tuple[float, ...]
) -> ClusterModel:
    # canonical labels: clusters renumbered by priority rank (0 = nearest),
    # so identical partitions serialize identically regardless of seed
    order = _priority_order(centroids)
    relabel = {old: new for new, old in enumerate(order)}
    return ClusterModel(
        assignment=tuple(relabel[int(a)] for a in assignment),
        centroids=tuple((float(centroids[old][0]), float(centroids[old][1])) for old in order),
        sse=sse,
        priority_order=tuple(range(len(order))),
        sse_trace=trace,
    )


def _best_of_restarts(
    points: np.ndarray, k: int, config: ClusteringConfig
) -> tuple[np.ndarray, np.ndarray, float, tuple[float, ...]]:
    """Seeded restarts; keeps the lowest-SSE run (ties: earliest restart)."""
    seed_stream = SplitMix64(config.rng_seed)
    best = None
    for _ in range(config.restarts):
        rng = SplitMix64(seed_stream.next_u64())
        initial = _d2_seed(points, k, rng)
        result = _lloyd(points, initial, config)
        if best is None or result[2] < best[2]:
            best = result
    return best


def kmeans_cluster(features: FeatureSet, config: ClusteringConfig) -> ClusterModel:
    """k-means++ with Lloyd refinement over (hops, delay) server features.

    Runs config.restarts seeded restarts and keeps the lowest-SSE model.
    Centroids are reported in original units even when normalize_features
    is on; sse stays in the space the clustering ran in.
    """
    k = effective_k(config.k, len(features))
    raw = features.array
    points = _minmax_scale(raw) if config.normalize_features else raw
    assignment, _, sse, trace = _best_of_restarts(points, k, config)
    centroids = np.stack([raw[assignment == c].mean(axis=0) for c in range(k)])
    return _model_from(assignment, centroids, sse, trace)


def _minmax_scale(points: np.ndarray) -> np.ndarray:
    lo = points.min(axis=0)
    span = points.max(axis=0) - lo
    span[span == 0.0] = 1.0  # constant dimensions map to 0
    return (points - lo) / span


def brute_force_kmeans(features: FeatureSet, k: int) -> float:
    """Exact minimum SSE over all surjective assignments (test oracle).

    Enumerates every assignment of points to k non-empty clusters; only
    usable for small instances (<= 10 points).
    """
    points = features.array
    n = len(points)
    if n > 10:
        raise ClusteringError("brute force oracle limited to 10 points")
    k = effective_k(k, n)
    best = math.inf
    for assign in itertools.product(range(k), repeat=n):
        if len(set(assign)) != k:
            continue
        labels = np.asarray(assign)
        sse = 0.0
        for c in range(k):
            members = points[labels == c]
            sse += float(((members - members.mean(axis=0)) ** 2).sum())
        best = min(best, sse)
    return best


# -- spectral clustering ----------------------------------------------------


def similarity_matrix(topology: Topology) -> SimilarityMatrix:
    """Binary switch adjacency (1 iff a link joins the pair), zero diagonal."""
    return SimilarityMatrix(switch_ids=topology.switch_ids, entries=topology.switch_adjacency())


def sym_eigendecomposition(
    matrix: np.ndarray, off_tol: float = 1e-10, max_sweeps: int = 100
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm drops below off_tol.
    Returns (eigenvalues ascending, orthonormal eigenvectors as columns).
    """
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ClusteringError("matrix must be square")
    if A.size and float(np.abs(A - A.T).max()) > 1e-9:
        raise ClusteringError("matrix must be symmetric within 1e-9")
    A = (A + A.T) / 2.0
    n = A.shape[0]
    V = np.eye(n)

    for _ in range(max_sweeps):
        off_diag = A - np.diag(np.diag(A))
        if math.sqrt(float((off_diag**2).sum())) < off_tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                sign = 1.0 if theta >= 0.0 else -1.0
                if theta * theta >= 1e300:  # near-identity rotation; avoid overflow
                    t = 0.0 if math.isinf(theta) else 0.5 / theta
                else:
                    t = sign / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p, col_q = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p, row_q = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
                vec_p, vec_q = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vec_p - s * vec_q
                V[:, q] = s * vec_p + c * vec_q
    else:
        raise ArithmeticError("Jacobi sweeps did not converge")

    values = np.diag(A).copy()
    order = np.argsort(values, kind="stable")
    return values[order], V[:, order]


def normalized_laplacian(adjacency: np.ndarray) -> np.ndarray:
    """Symmetric normalized Laplacian I - D^(-1/2) A D^(-1/2)."""
    A = np.asarray(adjacency, dtype=float)
    degrees = A.sum(axis=1)
    zero = np.flatnonzero(degrees == 0.0)
    if zero.size:
        raise ClusteringError(f"vertex {int(zero[0])} has degree 0")
    inv_sqrt = 1.0 / np.sqrt(degrees)
    L = np.eye(len(A)) - inv_sqrt[:, None] * A * inv_sqrt[None, :]
    return (L + L.T) / 2.0


def spectral_embedding(adjacency: np.ndarray, k: int) -> np.ndarray:
    """Rows of the k smallest Laplacian eigenvectors, normalized to unit
    length (zero rows are left as zeros)."""
    L = normalized_laplacian(adjacency)
    _, vectors = sym_eigendecomposition(L)
    embedding = vectors[:, :k].copy()
    norms = np.linalg.norm(embedding, axis=1)
    nonzero = norms > 0.0
    embedding[nonzero] /= norms[nonzero, None]
    return embedding


def spectral_cluster(topology: Topology, config: ClusteringConfig) -> ClusterModel:
    """Cluster the switch graph spectrally and map servers to their
    switch's cluster.

    The Laplacian covers all switches; the embedded k-means runs on the
    rows of server-bearing switches only, so every cluster owns at least
    one server. Centroids are reported in (hops, delay) units for
    comparability with the feature-space path.
    """
    sim = similarity_matrix(topology)
    degrees = sim.entries.sum(axis=1)
    for sid, degree in zip(sim.switch_ids, degrees):
        if degree == 0.0:
            raise ClusteringError(
                f"switch '{sid}' has no switch links; spectral clustering needs degree >= 1"
            )

    paths = all_pairs_shortest_paths(topology)
    features = server_features(topology, paths)
    switch_index = {s: i for i, s in enumerate(sim.switch_ids)}
    bearing = sorted(
        {topology.attached_switch(server) for server in features.server_ids},
        key=lambda s: switch_index[s],
    )
    k = effective_k(config.k, len(bearing))

    embedding = spectral_embedding(sim.entries, k)
    rows = embedding[[switch_index[s] for s in bearing]]
    switch_assignment, _, sse, trace = _best_of_restarts(rows, k, config)
    by_switch = {s: int(c) for s, c in zip(bearing, switch_assignment)}

    assignment = np.asarray(
        [by_switch[topology.attached_switch(server)] for server in features.server_ids],
        dtype=np.int64,
    )
    raw = features.array
    centroids = np.stack([raw[assignment == c].mean(axis=0) for c in range(k)])
    return _model_from(assignment, centroids, sse, trace)


# -- serialization ----------------------------------------------------------


def cluster_model_document(model: ClusterModel, features: FeatureSet) -> dict:
    """Wire format shared by the REST service and the CLI."""
    sizes = [0] * model.n_clusters
    for c in model.assignment:
        sizes[c] += 1
    return {
        "k": model.n_clusters,
        "servers": [
            {"server_id": sid, "cluster": int(c)}
            for sid, c in zip(features.server_ids, model.assignment)
        ],
        "centroids": [
            {
                "cluster": c,
                "mean_hops": model.centroids[c][0],
                "mean_delay_ms": model.centroids[c][1],
                "size": sizes[c],
            }
            for c in range(model.n_clusters)
        ],
        "priority_order": list(model.priority_order),
        "sse": model.sse,
    }
