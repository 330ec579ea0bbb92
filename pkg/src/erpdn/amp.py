"""Motion-primitive library: cluster feature vectors into a codebook, assign
per-frame index distributions over the nearest centroids, and compress traces
by merging consecutive distributions with the same support.

k-means is written out (k-means++ seeding, Lloyd iterations) instead of
delegated so that the per-iteration inertia trace and the empty-cluster
reseeding rule stay observable and deterministic.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import fileformats
from .numerics import make_rng

DISTANCE_FLOOR = 1e-8  # added to distances before inverting, keeps exact hits finite


@dataclass
class AmpLibrary:
    centroids: np.ndarray  # (clusters, dim)
    kind: str
    seed: int
    top_k: int = 3
    inertia_history: list = field(default_factory=list)

    def __post_init__(self):
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.centroids.ndim != 2 or self.centroids.shape[0] < 2:
            raise ValueError("library needs at least 2 centroids")

    @property
    def size(self):
        return self.centroids.shape[0]


@dataclass
class AmpDistribution:
    """Top-k cluster indices with probabilities, nearest first."""

    indices: tuple
    probs: tuple

    def __post_init__(self):
        self.indices = tuple(int(i) for i in self.indices)
        self.probs = tuple(float(p) for p in self.probs)
        if len(self.indices) != len(set(self.indices)):
            raise ValueError("duplicate indices in distribution")
        if any(p <= 0.0 for p in self.probs):
            raise ValueError("probabilities must be positive")
        if abs(sum(self.probs) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {sum(self.probs)}, not 1")

    @property
    def support(self):
        return frozenset(self.indices)

    @property
    def top(self):
        return self.indices[int(np.argmax(self.probs))]


@dataclass
class RecognizedPlan:
    """A fixed-length sequence of future primitive indices for one region."""

    plan_index: int
    steps: tuple

    def __post_init__(self):
        self.steps = tuple(int(s) for s in self.steps)
        if not self.steps:
            raise ValueError("empty plan")


def _squared_distances(points, centroids):
    # (n, k) squared euclidean distances without forming n*k*dim temporaries
    p2 = np.sum(points * points, axis=1)[:, None]
    c2 = np.sum(centroids * centroids, axis=1)[None, :]
    return np.maximum(p2 + c2 - 2.0 * points @ centroids.T, 0.0)


def _kmeanspp_seed(points, k, rng):
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    closest = np.sum((points - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            centroids[j] = points[rng.integers(n)]
            continue
        r = rng.uniform(0.0, total)
        idx = int(np.searchsorted(np.cumsum(closest), r))
        idx = min(idx, n - 1)
        centroids[j] = points[idx]
        closest = np.minimum(closest, np.sum((points - centroids[j]) ** 2, axis=1))
    return centroids


def kmeans_fit(features, clusters, seed=0, max_iter=100, kind="hod"):
    """Lloyd's algorithm with k-means++ seeding.

    Stops at the assignment fixpoint or max_iter.  The returned library
    carries the inertia recorded after every centroid update; the sequence is
    non-increasing.  An emptied cluster is reseeded to the point currently
    farthest from its own centroid.
    """
    points = np.stack([np.asarray(getattr(f, "values", f), dtype=np.float64) for f in features])
    n = points.shape[0]
    if n < clusters:
        raise ValueError(f"{n} points cannot fill {clusters} clusters")
    rng = make_rng(seed)
    centroids = _kmeanspp_seed(points, clusters, rng)
    history = []
    assign = None
    for _ in range(max_iter):
        dist = _squared_distances(points, centroids)
        new_assign = np.argmin(dist, axis=1)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        own_dist = dist[np.arange(n), assign].copy()
        for j in range(clusters):
            members = points[assign == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
            else:
                worst = int(np.argmax(own_dist))
                centroids[j] = points[worst]
                own_dist[worst] = -np.inf  # a second empty cluster picks a different point
        history.append(float(_squared_distances(points, centroids).min(axis=1).sum()))
    return AmpLibrary(centroids, kind=kind, seed=int(seed), inertia_history=history)


def assign_distribution(feature, lib, top_k=None):
    """Distribution over the top_k nearest centroids, inverse-distance weighted."""
    top_k = lib.top_k if top_k is None else int(top_k)
    if top_k > lib.size:
        raise ValueError(f"top_k={top_k} exceeds library size {lib.size}")
    vec = np.asarray(getattr(feature, "values", feature), dtype=np.float64)
    if vec.shape != (lib.centroids.shape[1],):
        raise ValueError(f"feature length {vec.shape} vs centroid dim {lib.centroids.shape[1]}")
    dists = np.sqrt(np.sum((lib.centroids - vec) ** 2, axis=1))
    order = np.argsort(dists, kind="stable")[:top_k]
    inv = 1.0 / (dists[order] + DISTANCE_FLOOR)
    probs = inv / inv.sum()
    return AmpDistribution(tuple(order), tuple(probs))


def merge_consecutive(trace):
    """Collapse runs with identical index sets into one run-averaged distribution."""
    if not trace:
        raise ValueError("empty trace")
    merged = []
    run = [trace[0]]
    for dist in trace[1:]:
        if dist.support == run[-1].support:
            run.append(dist)
        else:
            merged.append(_average_run(run))
            run = [dist]
    merged.append(_average_run(run))
    return merged


def _average_run(run):
    if len(run) == 1:
        return run[0]
    totals = {}
    for dist in run:
        for i, p in zip(dist.indices, dist.probs):
            totals[i] = totals.get(i, 0.0) + p
    items = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))
    indices = tuple(i for i, _ in items)
    probs = tuple(t / len(run) for _, t in items)
    return AmpDistribution(indices, probs)


def decode_amp(index, lib):
    """Centroid vector for a primitive index."""
    if not 0 <= index < lib.size:
        raise IndexError(f"index {index} out of range for library of {lib.size}")
    return lib.centroids[int(index)].copy()


def save_library(lib, json_path, tensor_path):
    fileformats.save_tensor(tensor_path, lib.centroids)
    header = {
        "clusters": lib.size,
        "kind": lib.kind,
        "seed": lib.seed,
        "top_k": lib.top_k,
        "inertia_history": lib.inertia_history,
    }
    with open(json_path, "w") as fh:
        json.dump(header, fh, sort_keys=True)
        fh.write("\n")


def load_library(json_path, tensor_path):
    with open(json_path) as fh:
        header = json.load(fh)
    return AmpLibrary(
        fileformats.load_tensor(tensor_path),
        kind=header["kind"],
        seed=header["seed"],
        top_k=header["top_k"],
        inertia_history=list(header.get("inertia_history", [])),
    )


def save_traces(traces, path):
    """Plan traces as JSON lists of (index, probability) pairs."""
    payload = [
        [[list(pair) for pair in zip(d.indices, d.probs)] for d in trace] for trace in traces
    ]
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_traces(path):
    with open(path) as fh:
        payload = json.load(fh)
    traces = []
    for trace in payload:
        traces.append(
            [AmpDistribution(tuple(i for i, _ in d), tuple(p for _, p in d)) for d in trace]
        )
    return traces
