import numpy as np
import pytest

from erpdn import amp
from erpdn.numerics import make_rng

from conftest import assert_bit_identical


def blob_data(seed=0, per_blob=40, spread=0.01):
    rng = make_rng(seed)
    means = np.array([[0.0, 0.0, 4.0], [4.0, 0.0, 0.0], [0.0, 4.0, 0.0]])
    points = np.concatenate(
        [mean + spread * rng.standard_normal((per_blob, 3)) for mean in means]
    )
    return points, means


def test_kmeans_recovers_blob_means():
    points, means = blob_data()
    lib = amp.kmeans_fit(points, 3, seed=1)
    for mean in means:
        dist = np.linalg.norm(lib.centroids - mean, axis=1).min()
        assert dist < 0.1


def test_kmeans_one_cluster_per_point_zero_inertia():
    points = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [3.0, 3.0]])
    lib = amp.kmeans_fit(points, 4, seed=2)
    assert lib.inertia_history[-1] <= 1e-12


def test_kmeans_seed_determinism():
    points, _ = blob_data(seed=3)
    a = amp.kmeans_fit(points, 3, seed=7)
    b = amp.kmeans_fit(points, 3, seed=7)
    assert_bit_identical(a.centroids, b.centroids)


def test_kmeans_inertia_non_increasing():
    rng = make_rng(4)
    points = rng.standard_normal((120, 6))
    lib = amp.kmeans_fit(points, 10, seed=5)
    hist = lib.inertia_history
    assert len(hist) >= 1
    assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))


def test_kmeans_too_few_points():
    with pytest.raises(ValueError):
        amp.kmeans_fit(np.zeros((3, 2)), 4)


def small_library():
    centroids = np.array(
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]]
    )
    return amp.AmpLibrary(centroids, kind="hod", seed=0)


def test_assign_exact_centroid_is_near_point_mass():
    lib = small_library()
    dist = amp.assign_distribution(lib.centroids[2], lib, top_k=1)
    assert dist.indices == (2,)
    assert dist.probs[0] == 1.0


def test_assign_equidistant_uniform():
    lib = amp.AmpLibrary(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 5.0]]), kind="hod", seed=0)
    dist = amp.assign_distribution(np.zeros(2), lib, top_k=2)
    assert set(dist.indices) == {0, 1}
    assert np.allclose(dist.probs, [0.5, 0.5])


def test_assign_matches_sort_oracle():
    rng = make_rng(6)
    centroids = rng.standard_normal((12, 5))
    lib = amp.AmpLibrary(centroids, kind="hod", seed=0)
    f = rng.standard_normal(5)
    dist = amp.assign_distribution(f, lib, top_k=4)
    d = np.sqrt(((centroids - f) ** 2).sum(axis=1))
    order = np.argsort(d)[:4]
    assert set(dist.indices) == set(int(i) for i in order)
    inv = 1.0 / (d[list(dist.indices)] + amp.DISTANCE_FLOOR)
    assert np.allclose(dist.probs, inv / inv.sum())


def test_assign_permutation_stability():
    rng = make_rng(7)
    centroids = rng.standard_normal((6, 4))
    f = rng.standard_normal(4)
    lib = amp.AmpLibrary(centroids, kind="hod", seed=0)
    perm = np.array([3, 1, 5, 0, 2, 4])
    lib2 = amp.AmpLibrary(centroids[perm], kind="hod", seed=0)
    a = amp.assign_distribution(f, lib, top_k=3)
    b = amp.assign_distribution(f, lib2, top_k=3)
    assert a.probs == b.probs
    assert [int(perm[i]) for i in b.indices] == list(a.indices)


def test_assign_top_k_too_large():
    with pytest.raises(ValueError):
        amp.assign_distribution(np.zeros(3), small_library(), top_k=9)


def d(indices, probs):
    return amp.AmpDistribution(tuple(indices), tuple(probs))


def test_merge_run_average():
    trace = [d([0, 1], [0.6, 0.4]), d([0, 1], [0.8, 0.2]), d([2], [1.0])]
    merged = amp.merge_consecutive(trace)
    assert len(merged) == 2
    first = dict(zip(merged[0].indices, merged[0].probs))
    assert first == pytest.approx({0: 0.7, 1: 0.3})
    assert merged[1].indices == (2,)


def test_merge_distinct_unchanged():
    trace = [d([0], [1.0]), d([1], [1.0]), d([2], [1.0])]
    assert amp.merge_consecutive(trace) == trace


def test_merge_length_matches_run_boundaries():
    rng = make_rng(8)
    trace = []
    for _ in range(40):
        support = tuple(sorted(rng.choice(6, size=2, replace=False)))
        trace.append(d(support, [0.5, 0.5]))
    merged = amp.merge_consecutive(trace)
    boundaries = sum(
        1 for a, b in zip(trace, trace[1:]) if a.support != b.support
    )
    assert len(merged) == boundaries + 1


def test_merge_idempotent():
    rng = make_rng(9)
    trace = []
    for _ in range(30):
        support = tuple(sorted(rng.choice(4, size=2, replace=False)))
        p = rng.uniform(0.2, 0.8)
        trace.append(d(support, [p, 1.0 - p]))
    once = amp.merge_consecutive(trace)
    assert amp.merge_consecutive(once) == once


def test_merge_empty_trace():
    with pytest.raises(ValueError):
        amp.merge_consecutive([])


def test_decode_round_trip():
    lib = small_library()
    for i in range(lib.size):
        dist = amp.assign_distribution(lib.centroids[i], lib, top_k=1)
        assert np.array_equal(amp.decode_amp(dist.top, lib), lib.centroids[i])


def test_decode_out_of_range():
    with pytest.raises(IndexError):
        amp.decode_amp(4, small_library())


def test_decode_lengths_consistent():
    lib = small_library()
    lengths = {amp.decode_amp(i, lib).shape for i in range(lib.size)}
    assert lengths == {(3,)}


def test_distribution_invariants():
    with pytest.raises(ValueError):
        amp.AmpDistribution((0, 0), (0.5, 0.5))
    with pytest.raises(ValueError):
        amp.AmpDistribution((0, 1), (0.9, 0.2))
    with pytest.raises(ValueError):
        amp.AmpDistribution((0, 1), (1.0, -0.0))


def test_library_persistence_round_trip(tmp_path):
    points, _ = blob_data(seed=10)
    lib = amp.kmeans_fit(points, 3, seed=11)
    amp.save_library(lib, tmp_path / "lib.json", tmp_path / "lib.pdnt")
    back = amp.load_library(tmp_path / "lib.json", tmp_path / "lib.pdnt")
    assert_bit_identical(back.centroids, lib.centroids)
    assert back.kind == lib.kind and back.seed == lib.seed


def test_trace_persistence_round_trip(tmp_path):
    traces = [
        [d([0, 2], [0.4, 0.6]), d([1], [1.0])],
        [d([3], [1.0])],
    ]
    amp.save_traces(traces, tmp_path / "traces.json")
    back = amp.load_traces(tmp_path / "traces.json")
    assert back == traces
