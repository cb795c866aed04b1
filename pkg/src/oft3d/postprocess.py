"""
Thresholding, per-slice median normalisation and skeleton graph denoising.

Skeleton graphs come from an external skeletonisation step. Denoising
merges nearby nodes (single-linkage clusters replaced by their centroid,
repeated until stable) and re-draws the edges as 3D Bresenham lines.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from oft3d.volume import Volume

MEDIAN_FLOOR = 1e-12


def threshold(vol: Volume, t: float) -> Volume:
    """Binary volume, 1 where ``vol > t``."""
    t = float(t)
    if not math.isfinite(t):
        raise ValueError(f"threshold must be finite, got {t}")
    return Volume((vol.data > t).astype(np.float32))


def percentile_threshold(vol: Volume, q: float) -> tuple[Volume, float]:
    """Threshold at the ``q``-th percentile of ``vol``; returns ``(binary, t)``.

    The percentile is taken as an actual data value (rounding the rank up),
    so at most a ``1 - q/100`` fraction of voxels ends up above it.
    """
    if not 0.0 <= q <= 100.0:
        raise ValueError(f"percentile must lie in [0, 100], got {q}")
    t = float(np.percentile(vol.data, q, method="higher"))
    return threshold(vol, t), t


def normalize_slice_median(vol: Volume, target="auto") -> Volume:
    """Scale each z-slice so its median equals ``target``.

    ``target="auto"`` uses the median of the slice medians. Slices whose
    median is at or below 1e-12 are left as they are and do not take part
    in the automatic target.
    """
    data = vol.data.astype(np.float64)
    medians = np.median(data.reshape(data.shape[0], -1), axis=1)
    ok = medians > MEDIAN_FLOOR
    if isinstance(target, str):
        if target.lower() != "auto":
            raise ValueError(f"target must be a number or 'auto', got {target!r}")
        if not np.any(ok):
            return Volume(vol.data.copy())
        target = float(np.median(medians[ok]))
    target = float(target)
    scale = np.ones_like(medians)
    scale[ok] = target / medians[ok]
    return Volume(data * scale[:, None, None])


def slice_scale_factors(vol: Volume, target="auto") -> np.ndarray:
    before = np.median(vol.data.reshape(vol.data.shape[0], -1).astype(np.float64), axis=1)
    after = np.median(
        normalize_slice_median(vol, target).data.reshape(vol.data.shape[0], -1).astype(np.float64), axis=1
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(before > MEDIAN_FLOOR, after / before, 1.0)


def dilate(mask: Volume, iterations: int = 1) -> Volume:
    """Binary dilation with the 26-neighbourhood (8-neighbourhood in 2D)."""
    arr = mask.data > 0
    structure = np.ones((3, 3, 3) if arr.shape[0] > 1 else (1, 3, 3), dtype=bool)
    return Volume(ndimage.binary_dilation(arr, structure, iterations=iterations).astype(np.float32))


def dice(a: Volume, b: Volume) -> float:
    x = a.data > 0
    y = b.data > 0
    denom = x.sum() + y.sum()
    if denom == 0:
        return 1.0
    return float(2.0 * np.logical_and(x, y).sum() / denom)


# --------------------------------------------------------------------------
# Skeleton graphs
# --------------------------------------------------------------------------

class GraphFormatError(ValueError):
    pass


@dataclass
class SkeletonGraph:
    """Undirected graph with real-valued voxel coordinates per node."""

    nodes: dict = field(default_factory=dict)
    edges: set = field(default_factory=set)

    def __post_init__(self):
        self.nodes = {int(k): tuple(float(c) for c in v) for k, v in self.nodes.items()}
        for xyz in self.nodes.values():
            if len(xyz) != 3:
                raise GraphFormatError("node coordinates must be (x, y, z) triples")
        edges = set()
        for e in self.edges:
            a, b = (int(v) for v in e)
            if a not in self.nodes or b not in self.nodes:
                raise GraphFormatError(f"edge ({a}, {b}) references a missing node")
            if a == b:
                raise GraphFormatError(f"self-loop on node {a}")
            edges.add((min(a, b), max(a, b)))
        self.edges = edges

    def to_json(self) -> dict:
        return {
            "nodes": [{"id": i, "xyz": list(self.nodes[i])} for i in sorted(self.nodes)],
            "edges": [list(e) for e in sorted(self.edges)],
        }

    @classmethod
    def from_json(cls, obj) -> "SkeletonGraph":
        try:
            nodes = {}
            for n in obj["nodes"]:
                nid = int(n["id"])
                if nid in nodes:
                    raise GraphFormatError(f"duplicate node id {nid}")
                nodes[nid] = n["xyz"]
            raw_edges = [tuple(e) for e in obj.get("edges", [])]
        except (KeyError, TypeError) as exc:
            raise GraphFormatError(f"malformed skeleton graph: {exc}") from exc
        for e in raw_edges:
            if len(e) != 2:
                raise GraphFormatError(f"edge {list(e)} is not a node pair")
        # duplicate edges collapse; loops are dropped as in merging
        return cls(nodes, {e for e in raw_edges if int(e[0]) != int(e[1])})


def read_graph(path) -> SkeletonGraph:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"invalid JSON in {path}: {exc}") from exc
    return SkeletonGraph.from_json(obj)


def write_graph(g: SkeletonGraph, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(g.to_json(), sort_keys=True) + "\n", encoding="utf-8")
    return path


def _merge_pass(g: SkeletonGraph, d: float) -> SkeletonGraph | None:
    ids = sorted(g.nodes)
    if len(ids) < 2:
        return None
    xyz = np.array([g.nodes[i] for i in ids])
    pairs = cKDTree(xyz).query_pairs(d, output_type="ndarray")
    if len(pairs):
        dist = np.linalg.norm(xyz[pairs[:, 0]] - xyz[pairs[:, 1]], axis=1)
        pairs = pairs[dist < d]
    if len(pairs) == 0:
        return None
    n = len(ids)
    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    # each cluster is represented by its lowest id
    rep = {}
    members = {}
    for pos, nid in enumerate(ids):
        lab = labels[pos]
        rep.setdefault(lab, nid)
        members.setdefault(lab, []).append(pos)
    nodes = {}
    for lab, idxs in members.items():
        nodes[rep[lab]] = tuple(float(c) for c in xyz[idxs].mean(axis=0))
    remap = {nid: rep[labels[pos]] for pos, nid in enumerate(ids)}
    edges = set()
    for a, b in g.edges:
        ra, rb = remap[a], remap[b]
        if ra != rb:
            edges.add((min(ra, rb), max(ra, rb)))
    return SkeletonGraph(nodes, edges)


def merge_skeleton_nodes(g: SkeletonGraph, d: float, max_passes: int = 10_000) -> SkeletonGraph:
    """Merge clusters of nodes closer than ``d`` until no such pair is left.

    Each pass links every node pair at distance ``< d`` (single linkage),
    replaces each cluster by one node at its centroid, keeping the smallest
    id, and re-attaches edges, dropping self-loops and duplicates.
    """
    d = float(d)
    if not d > 0:
        raise ValueError(f"merge distance must be positive, got {d}")
    current = SkeletonGraph(dict(g.nodes), set(g.edges))
    for _ in range(max_passes):
        merged = _merge_pass(current, d)
        if merged is None:
            return current
        current = merged
    raise RuntimeError("node merging did not converge")  # unreachable: node count drops every pass


def round_half_away(x):
    x = np.asarray(x, dtype=np.float64)
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)


def bresenham_3d(p0, p1) -> np.ndarray:
    """Integer voxel line from ``p0`` to ``p1`` inclusive, as an ``(n, 3)`` array.

    Steps along the axis of largest extent; consecutive voxels differ by at
    most one along every axis.
    """
    x0, y0, z0 = (int(v) for v in p0)
    x1, y1, z1 = (int(v) for v in p1)
    dx, dy, dz = abs(x1 - x0), abs(y1 - y0), abs(z1 - z0)
    sx = 1 if x1 >= x0 else -1
    sy = 1 if y1 >= y0 else -1
    sz = 1 if z1 >= z0 else -1
    pts = [(x0, y0, z0)]
    if dx >= dy and dx >= dz:
        e1, e2 = 2 * dy - dx, 2 * dz - dx
        while x0 != x1:
            x0 += sx
            if e1 > 0:
                y0 += sy
                e1 -= 2 * dx
            if e2 > 0:
                z0 += sz
                e2 -= 2 * dx
            e1 += 2 * dy
            e2 += 2 * dz
            pts.append((x0, y0, z0))
    elif dy >= dx and dy >= dz:
        e1, e2 = 2 * dx - dy, 2 * dz - dy
        while y0 != y1:
            y0 += sy
            if e1 > 0:
                x0 += sx
                e1 -= 2 * dy
            if e2 > 0:
                z0 += sz
                e2 -= 2 * dy
            e1 += 2 * dx
            e2 += 2 * dz
            pts.append((x0, y0, z0))
    else:
        e1, e2 = 2 * dy - dz, 2 * dx - dz
        while z0 != z1:
            z0 += sz
            if e1 > 0:
                y0 += sy
                e1 -= 2 * dz
            if e2 > 0:
                x0 += sx
                e2 -= 2 * dz
            e1 += 2 * dy
            e2 += 2 * dx
            pts.append((x0, y0, z0))
    return np.array(pts, dtype=np.int64)


def rasterize_skeleton(g: SkeletonGraph, dims) -> Volume:
    """Binary volume with a Bresenham line for every edge and every node voxel set."""
    nx, ny, nz = (int(v) for v in dims)
    out = np.zeros((nz, ny, nx), dtype=np.float32)
    vox = {}
    for nid in sorted(g.nodes):
        v = round_half_away(g.nodes[nid])
        if not (0 <= v[0] < nx and 0 <= v[1] < ny and 0 <= v[2] < nz):
            raise ValueError(f"node {nid} at {g.nodes[nid]} rounds outside the grid {tuple(dims)}")
        vox[nid] = v
        out[v[2], v[1], v[0]] = 1.0
    for a, b in sorted(g.edges):
        line = bresenham_3d(vox[a], vox[b])
        out[line[:, 2], line[:, 1], line[:, 0]] = 1.0
    return Volume(out)
