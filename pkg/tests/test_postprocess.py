import json
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oft3d.postprocess import (
    GraphFormatError,
    SkeletonGraph,
    bresenham_3d,
    dice,
    dilate,
    merge_skeleton_nodes,
    normalize_slice_median,
    percentile_threshold,
    rasterize_skeleton,
    read_graph,
    round_half_away,
    slice_scale_factors,
    threshold,
    write_graph,
)
from oft3d.volume import Volume


class TestThreshold:
    def test_extremes(self, rng):
        vol = Volume(rng.random((4, 5, 6)))
        assert np.all(threshold(vol, -1.0).data == 1)
        assert np.all(threshold(vol, vol.data.max()).data == 0)

    def test_strict(self):
        assert threshold(Volume(np.array([[1.0, 2.0, 3.0]])), 2.0).data.tolist() == [[[0, 0, 1]]]

    def test_percentile(self, rng):
        vol = Volume(rng.random((20, 20, 20)))
        binary, t = percentile_threshold(vol, 99.0)
        assert binary.data.mean() <= 0.01
        assert t == pytest.approx(np.percentile(vol.data, 99.0, method="higher"))
        with pytest.raises(ValueError):
            percentile_threshold(vol, 101)


class TestSliceMedian:
    def test_auto_two_slices(self):
        vol = Volume(np.stack([np.ones((3, 3)), np.full((3, 3), 2.0)]))
        assert np.allclose(slice_scale_factors(vol), [1.5, 0.75])
        out = normalize_slice_median(vol)
        assert np.allclose(np.median(out.data.reshape(2, -1), axis=1), 1.5)

    def test_shared_median_unchanged(self, rng):
        a = rng.random((3, 5, 5))
        a -= np.median(a.reshape(3, -1), axis=1)[:, None, None] - 1.0
        vol = Volume(a)
        assert np.allclose(normalize_slice_median(vol).data, vol.data, rtol=1e-6)

    def test_zero_slice_guarded(self):
        vol = Volume(np.stack([np.zeros((3, 3)), np.ones((3, 3)), np.full((3, 3), 4.0)]))
        out = normalize_slice_median(vol, 2.0)
        assert np.all(out.data[0] == 0)
        assert np.allclose(out.data[1:], 2.0)

    def test_explicit_target(self, rng):
        out = normalize_slice_median(Volume(rng.random((4, 6, 6)) + 0.1), target=3.0)
        assert np.allclose(np.median(out.data.reshape(4, -1), axis=1), 3.0, rtol=1e-6)

    def test_bad_target(self):
        with pytest.raises(ValueError):
            normalize_slice_median(Volume.zeros((2, 2, 2)), "median")

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        vol = Volume(rng.gamma(2.0, size=(5, 7, 7)) * rng.uniform(0.1, 10, size=(5, 1, 1)))
        once = normalize_slice_median(vol)
        twice = normalize_slice_median(once)
        assert np.allclose(twice.data, once.data, rtol=1e-6, atol=0)


class TestMetrics:
    def test_dilate(self):
        m = np.zeros((5, 5, 5), np.float32)
        m[2, 2, 2] = 1
        assert dilate(Volume(m)).data.sum() == 27
        assert dilate(Volume(m[2])).data.sum() == 9

    def test_dice(self):
        a = Volume(np.array([[1, 1, 0, 0]], np.float32))
        b = Volume(np.array([[0, 1, 1, 0]], np.float32))
        assert dice(a, b) == 0.5
        assert dice(a, a) == 1.0


def pairwise_min(g):
    xyz = np.array(list(g.nodes.values()))
    if len(xyz) < 2:
        return np.inf
    return min(np.linalg.norm(p - q) for p, q in itertools.combinations(xyz, 2))


class TestMerge:
    def test_no_close_pair(self):
        g = SkeletonGraph({1: (0, 0, 0), 2: (5, 0, 0)}, {(1, 2)})
        assert merge_skeleton_nodes(g, 2.0) == g

    def test_two_nodes_to_midpoint(self):
        g = SkeletonGraph({4: (0, 0, 0), 9: (1, 1, 0)}, {(4, 9)})
        d = 2 * np.sqrt(2)
        out = merge_skeleton_nodes(g, d)
        assert out.nodes == {4: (0.5, 0.5, 0.0)}
        assert out.edges == set()

    def test_collinear_chain(self):
        d = 1.0
        g = SkeletonGraph({0: (0, 0, 0), 1: (0.6, 0, 0), 2: (1.2, 0, 0), 3: (9, 0, 0)}, {(0, 1), (1, 2), (2, 3)})
        out = merge_skeleton_nodes(g, d)
        assert set(out.nodes) == {0, 3}
        assert out.nodes[0] == pytest.approx((0.6, 0, 0))
        assert out.edges == {(0, 3)}

    def test_exact_distance_not_merged(self):
        g = SkeletonGraph({0: (0, 0, 0), 1: (2, 0, 0)})
        assert len(merge_skeleton_nodes(g, 2.0).nodes) == 2

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.5, 4.0))
    def test_terminates_with_no_close_pair(self, seed, d):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 60))
        nodes = {i: tuple(rng.uniform(0, 12, 3)) for i in range(n)}
        edges = {tuple(sorted(rng.choice(n, 2, replace=False))) for _ in range(n)}
        out = merge_skeleton_nodes(SkeletonGraph(nodes, edges), d)
        assert pairwise_min(out) >= d
        assert all(a in out.nodes and b in out.nodes and a != b for a, b in out.edges)

    def test_bad_distance(self):
        with pytest.raises(ValueError):
            merge_skeleton_nodes(SkeletonGraph(), 0.0)


class TestGraphIO:
    def test_roundtrip(self, tmp_path):
        g = SkeletonGraph({0: (0.5, 1, 2), 3: (4, 5, 6)}, {(3, 0)})
        path = write_graph(g, tmp_path / "g.json")
        assert read_graph(path) == g

    @pytest.mark.parametrize(
        "doc",
        [
            {"nodes": [{"id": 0, "xyz": [0, 0, 0]}], "edges": [[0, 1]]},
            {"nodes": [{"id": 0, "xyz": [0, 0]}]},
            {"nodes": [{"id": 0, "xyz": [0, 0, 0]}, {"id": 0, "xyz": [1, 0, 0]}]},
            {"edges": []},
            {"nodes": [{"id": 0, "xyz": [0, 0, 0]}, {"id": 1, "xyz": [1, 0, 0]}], "edges": [[0, 1, 2]]},
        ],
    )
    def test_rejects(self, tmp_path, doc):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(GraphFormatError):
            read_graph(path)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nodes")
        with pytest.raises(GraphFormatError):
            read_graph(path)


class TestRaster:
    def test_axis_line(self):
        pts = bresenham_3d((0, 0, 0), (5, 0, 0))
        assert pts.tolist() == [[i, 0, 0] for i in range(6)]

    def test_diagonal(self):
        assert bresenham_3d((0, 0, 0), (3, 3, 3)).tolist() == [[i, i, i] for i in range(4)]

    def test_single_point(self):
        assert bresenham_3d((2, 3, 4), (2, 3, 4)).tolist() == [[2, 3, 4]]

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(-20, 20), min_size=6, max_size=6))
    def test_connected_with_endpoints(self, c):
        p0, p1 = c[:3], c[3:]
        pts = bresenham_3d(p0, p1)
        assert pts[0].tolist() == p0 and pts[-1].tolist() == p1
        steps = np.abs(np.diff(pts, axis=0))
        assert np.all(steps.max(axis=1) == 1)
        assert len(pts) == max(abs(a - b) for a, b in zip(p0, p1)) + 1

    def test_rasterize(self):
        g = SkeletonGraph({0: (0.4, 0, 0), 1: (4.6, 0, 0), 2: (2, 3, 0)}, {(0, 1)})
        out = rasterize_skeleton(g, (6, 4, 1))
        assert out.data[0, 0, :].tolist() == [1, 1, 1, 1, 1, 1]
        assert out.data[0, 3, 2] == 1
        assert out.data.sum() == 7

    def test_out_of_bounds(self):
        g = SkeletonGraph({7: (5.5, 0, 0)})
        with pytest.raises(ValueError, match="node 7"):
            rasterize_skeleton(g, (6, 1, 1))

    def test_round_half_away(self):
        assert round_half_away([0.5, 1.5, -0.5, 2.49]).tolist() == [1, 2, -1, 2]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 500), st.floats(50.0, 100.0))
def test_percentile_fraction_bound(n, q):
    vol = Volume(np.random.default_rng(n).random((1, 1, n)))
    binary, _ = percentile_threshold(vol, q)
    assert binary.data.sum() <= n * (1 - q / 100) + 1e-9
