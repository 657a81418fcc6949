"""Point-referenced honeycombs clipped to an observation window.

A honeycomb is a tessellation of the plane (or of R^d for the cubic lattice)
by closed convex polytopes, each carrying a reference point, such that every
shared facet is orthogonal to the difference of the two reference points.
Three families are built here:

* hypercubic lattices in any dimension d >= 2 (implicit cell geometry),
* regular hexagonal tilings in 2D,
* Voronoi diagrams of arbitrary 2D generator clouds.

Cells whose closure lies inside the observation window are the ones the
estimators operate on; facets between two such cells are "interior".
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, QhullError, cKDTree

# geometric tolerances, in the spatial units of the tessellation
DUPLICATE_TOL = 1e-12     # generators closer than this are merged
CONTAINMENT_TOL = 1e-12   # slack for the closed-cell containment test
MIN_FACET_FRACTION = 1e-12  # facets shorter than this fraction of the window scale are dropped
NORMALITY_TOL = 1e-9      # angular tolerance of the facet/reference-difference check

_BOX_EDGE = -1  # edge label for guard-box boundary pieces


@dataclass(eq=False)
class Box:
    """Axis-aligned d-box [lo_1, hi_1] x ... x [lo_d, hi_d]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if self.lo.shape != self.hi.shape or self.lo.ndim != 1:
            raise ValueError("box corners must be 1-d arrays of equal length")
        if np.any(self.hi <= self.lo):
            raise ValueError("box must have positive side lengths")

    @property
    def d(self) -> int:
        return self.lo.size

    @property
    def side_lengths(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def expanded(self, margin: float) -> "Box":
        return Box(self.lo - margin, self.hi + margin)

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Boolean mask of points inside the closed box, with outward slack tol."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((pts >= self.lo - tol) & (pts <= self.hi + tol), axis=1)


@dataclass(eq=False)
class FacetSet:
    """Flat table of shared facets.

    Args:
        a: integer cell index of the first cell of each facet.
        b: integer cell index of the second cell.
        measure: sigma_{d-1} measure of each facet (length in 2D).
        normal: (n, d) unit normals, oriented from cell a toward cell b.
        endpoints: (n, 2, 2) segment endpoints for 2D facets, or None.
    """

    a: np.ndarray
    b: np.ndarray
    measure: np.ndarray
    normal: np.ndarray
    endpoints: np.ndarray | None = None

    def __len__(self) -> int:
        return self.a.size

    def select(self, mask: np.ndarray) -> "FacetSet":
        return FacetSet(
            a=self.a[mask],
            b=self.b[mask],
            measure=self.measure[mask],
            normal=self.normal[mask],
            endpoints=None if self.endpoints is None else self.endpoints[mask],
        )

    @staticmethod
    def empty(d: int) -> "FacetSet":
        return FacetSet(
            a=np.empty(0, dtype=np.int64),
            b=np.empty(0, dtype=np.int64),
            measure=np.empty(0),
            normal=np.empty((0, d)),
            endpoints=np.empty((0, 2, 2)) if d == 2 else None,
        )


@dataclass(eq=False)
class Honeycomb:
    """Full tessellation of the guard region.

    Args:
        d: ambient dimension.
        cells: list of (m_i, 2) CCW vertex arrays for 2D families, or None for
            the implicit hypercubic lattice.
        ref_points: (n, d) reference point of each cell.
        cell_volumes: (n,) sigma_d measure of each (unclipped) cell.
        facets: all positive-measure shared facets, indexed by global cell id.
        window: the observation window T.
        window_areas: (n,) sigma_d(P intersect T) per cell.
        diameter_bound: max over cells of diam(P intersect T).
    """

    d: int
    cells: list | None
    ref_points: np.ndarray
    cell_volumes: np.ndarray
    facets: FacetSet
    window: Box
    window_areas: np.ndarray
    diameter_bound: float


@dataclass(eq=False)
class WindowedHoneycomb:
    """A honeycomb together with its window-interior view.

    ``inside`` marks cells entirely contained in the closed window;
    ``interior_facets`` keeps only facets between two inside cells, with cell
    indices remapped to positions in the inside-cell ordering (the ordering
    used by field samples and excursion indicators).
    """

    parent: Honeycomb
    inside: np.ndarray
    interior_facets: FacetSet
    coverage_ratio: float
    duplicates_merged: int = 0
    inside_index: np.ndarray = field(init=False)

    def __post_init__(self):
        self.inside_index = np.flatnonzero(self.inside)

    @property
    def d(self) -> int:
        return self.parent.d

    @property
    def window(self) -> Box:
        return self.parent.window

    @property
    def n_inside(self) -> int:
        return int(self.inside_index.size)

    @property
    def ref_points_inside(self) -> np.ndarray:
        return self.parent.ref_points[self.inside_index]

    @property
    def cell_volumes_inside(self) -> np.ndarray:
        return self.parent.cell_volumes[self.inside_index]

    @property
    def diameter_bound(self) -> float:
        return self.parent.diameter_bound


def _windowed(parent: Honeycomb, duplicates_merged: int = 0) -> WindowedHoneycomb:
    """Build the interior view: inside mask, local facet table, coverage."""
    n = parent.ref_points.shape[0]
    inside = np.zeros(n, dtype=bool)
    if parent.cells is None:
        inside[:] = True
    else:
        for i, verts in enumerate(parent.cells):
            if verts is None or len(verts) < 3:
                continue
            inside[i] = bool(
                np.all(verts >= parent.window.lo - CONTAINMENT_TOL)
                and np.all(verts <= parent.window.hi + CONTAINMENT_TOL)
            )
    local = np.cumsum(inside) - 1
    f = parent.facets
    mask = inside[f.a] & inside[f.b]
    interior = FacetSet(
        a=local[f.a[mask]],
        b=local[f.b[mask]],
        measure=f.measure[mask],
        normal=f.normal[mask],
        endpoints=None if f.endpoints is None else f.endpoints[mask],
    )
    coverage = float(np.sum(parent.cell_volumes[inside]) / parent.window.volume)
    return WindowedHoneycomb(
        parent=parent,
        inside=inside,
        interior_facets=interior,
        coverage_ratio=coverage,
        duplicates_merged=duplicates_merged,
    )


# ---------------------------------------------------------------------------
# hypercubic lattice
# ---------------------------------------------------------------------------

def hypercubic_honeycomb(delta: float, half_extent: int, d: int) -> WindowedHoneycomb:
    """Cubic lattice of spacing delta covering T = [-delta*N, delta*N]^d.

    Cells are the cubes delta*i + [0, delta]^d for i in [-N, N-1]^d, each
    referenced by its corner delta*i, so the reference-point ordering matches
    the row-major node ordering of a sampling grid with the same shape.  Cell
    vertex lists are not materialized; facet geometry is generated by index
    arithmetic.

    Args:
        delta: positive lattice spacing.
        half_extent: N, the number of cells per half-axis.
        d: dimension, at least 2.

    Returns:
        WindowedHoneycomb with every cell inside and coverage exactly 1.
    """
    if delta <= 0:
        raise ValueError(f"spacing must be positive, got {delta}")
    if half_extent < 1:
        raise ValueError(f"half extent must be >= 1, got {half_extent}")
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    n_side = 2 * half_extent
    shape = (n_side,) * d
    half = delta * half_extent
    window = Box(np.full(d, -half), np.full(d, half))

    axes = [delta * np.arange(-half_extent, half_extent, dtype=float) for _ in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    ref_points = np.stack([m.reshape(-1) for m in mesh], axis=1)

    ids = np.arange(n_side**d, dtype=np.int64).reshape(shape)
    a_parts, b_parts, ax_parts = [], [], []
    for axis in range(d):
        sl_lo = [slice(None)] * d
        sl_hi = [slice(None)] * d
        sl_lo[axis] = slice(0, n_side - 1)
        sl_hi[axis] = slice(1, n_side)
        a_parts.append(ids[tuple(sl_lo)].reshape(-1))
        b_parts.append(ids[tuple(sl_hi)].reshape(-1))
        ax_parts.append(np.full(a_parts[-1].size, axis, dtype=np.int64))
    a = np.concatenate(a_parts)
    b = np.concatenate(b_parts)
    ax = np.concatenate(ax_parts)
    normal = np.zeros((a.size, d))
    normal[np.arange(a.size), ax] = 1.0
    measure = np.full(a.size, delta ** (d - 1))

    endpoints = None
    if d == 2:
        # shared face of cells i and i+e_axis: for axis 0 it is the segment
        # x = ref_a_x + delta, y in [ref_a_y, ref_a_y + delta]; symmetric for axis 1
        ra = ref_points[a]
        endpoints = np.empty((a.size, 2, 2))
        x0 = ra[:, 0] + np.where(ax == 0, delta, 0.0)
        y0 = ra[:, 1] + np.where(ax == 1, delta, 0.0)
        endpoints[:, 0, 0] = x0
        endpoints[:, 0, 1] = y0
        endpoints[:, 1, 0] = x0 + np.where(ax == 0, 0.0, delta)
        endpoints[:, 1, 1] = y0 + np.where(ax == 1, 0.0, delta)

    facets = FacetSet(a=a, b=b, measure=measure, normal=normal, endpoints=endpoints)
    parent = Honeycomb(
        d=d,
        cells=None,
        ref_points=ref_points,
        cell_volumes=np.full(ref_points.shape[0], delta**d),
        facets=facets,
        window=window,
        window_areas=np.full(ref_points.shape[0], delta**d),
        diameter_bound=delta * float(np.sqrt(d)),
    )
    wh = _windowed(parent)
    wh.coverage_ratio = 1.0  # lattice cells tile T by construction
    return wh


# ---------------------------------------------------------------------------
# regular hexagonal tiling (2D)
# ---------------------------------------------------------------------------

def hexagonal_honeycomb(delta: float, window: Box) -> WindowedHoneycomb:
    """Regular hexagonal tiling with circumradius delta, centers as references.

    Cell side length equals delta and adjacent centers are sqrt(3)*delta
    apart, orthogonal to the shared edge, so the reference-normality property
    holds by symmetry.

    Args:
        delta: hexagon circumradius; must be smaller than the shortest window side.
        window: 2D observation window.

    Returns:
        WindowedHoneycomb covering the window (plus a margin of cells).
    """
    if window.d != 2:
        raise ValueError("hexagonal tiling is 2D only")
    if delta <= 0:
        raise ValueError(f"circumradius must be positive, got {delta}")
    if delta >= np.min(window.side_lengths):
        raise ValueError("circumradius must be smaller than the window sides")

    root3 = np.sqrt(3.0)
    margin = 2.0 * delta
    # axial lattice: center(q, r) = q*a1 + r*a2
    a1 = np.array([1.5 * delta, 0.5 * root3 * delta])
    a2 = np.array([0.0, -root3 * delta])

    q_lo = int(np.ceil((window.lo[0] - margin) / a1[0]))
    q_hi = int(np.floor((window.hi[0] + margin) / a1[0]))
    centers, keys = [], {}
    for q in range(q_lo, q_hi + 1):
        y_of_q = q * a1[1]
        r_lo = int(np.ceil((y_of_q - (window.hi[1] + margin)) / root3 / delta))
        r_hi = int(np.floor((y_of_q - (window.lo[1] - margin)) / root3 / delta))
        for r in range(r_lo, r_hi + 1):
            keys[(q, r)] = len(centers)
            centers.append(q * a1 + r * a2)
    centers = np.asarray(centers)

    angles = np.deg2rad(60.0 * np.arange(6))
    hex_offsets = delta * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    cells = [c + hex_offsets for c in centers]

    # neighbor at direction angle 30 + 60k shares the edge (vertex k, vertex k+1)
    neighbor_steps = [((1, 0), 0), ((0, -1), 1), ((-1, -1), 2)]
    fa, fb, ends = [], [], []
    for (q, r), i in keys.items():
        for (dq, dr), k in neighbor_steps:
            j = keys.get((q + dq, r + dr))
            if j is None:
                continue
            fa.append(i)
            fb.append(j)
            ends.append((cells[i][k], cells[i][(k + 1) % 6]))
    fa = np.asarray(fa, dtype=np.int64)
    fb = np.asarray(fb, dtype=np.int64)
    endpoints = np.asarray(ends).reshape(-1, 2, 2)
    diffs = centers[fb] - centers[fa]
    dist = np.linalg.norm(diffs, axis=1)
    facets = FacetSet(
        a=fa,
        b=fb,
        measure=np.full(fa.size, delta),
        normal=diffs / dist[:, None],
        endpoints=endpoints,
    )

    cell_volumes = np.array([_shoelace_area(v) for v in cells])
    window_areas, diameter = _window_clip_stats(cells, window)
    parent = Honeycomb(
        d=2,
        cells=cells,
        ref_points=centers,
        cell_volumes=cell_volumes,
        facets=facets,
        window=window,
        window_areas=window_areas,
        diameter_bound=diameter,
    )
    return _windowed(parent)


# ---------------------------------------------------------------------------
# Voronoi diagram (2D)
# ---------------------------------------------------------------------------

def voronoi_honeycomb_2d(points, window: Box, guard: float) -> WindowedHoneycomb:
    """Voronoi tessellation of a 2D generator cloud, clipped to a guard box.

    Each cell is the intersection of the bisector half-planes against its
    Delaunay neighbors with the guard box (window expanded by ``guard``), so
    every cell is bounded.  Generators are the reference points; facets lie on
    perpendicular bisectors, which makes them orthogonal to the corresponding
    generator difference by construction.

    Args:
        points: (n, 2) generator positions, n >= 2.  Generators should cover
            the window plus the guard margin so that every cell meeting the
            window is a true (unclipped) Voronoi cell.
        window: 2D observation window.
        guard: nonnegative guard margin; 0 clips the diagram exactly to the window.

    Returns:
        WindowedHoneycomb. Duplicate generators closer than 1e-12 are merged
        and counted in ``duplicates_merged``.

    Raises:
        ValueError: fewer than 2 distinct generators, or a non-2D window.
    """
    if window.d != 2:
        raise ValueError("voronoi construction is 2D only")
    if guard < 0:
        raise ValueError(f"guard margin must be nonnegative, got {guard}")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError("points must have shape (n, 2)")

    merged = 0
    if points.shape[0] >= 2:
        pairs = cKDTree(points).query_pairs(DUPLICATE_TOL, output_type="ndarray")
        if pairs.size:
            drop = np.zeros(points.shape[0], dtype=bool)
            # keep the lower index of every duplicate pair
            drop[np.maximum(pairs[:, 0], pairs[:, 1])] = True
            merged = int(drop.sum())
            points = points[~drop]
            warnings.warn(f"merged {merged} duplicate generator(s)", stacklevel=2)
    n = points.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 distinct generators, got {n}")

    guard_box = window.expanded(guard)
    neighbors = _candidate_neighbors(points)

    box_verts = np.array(
        [
            [guard_box.lo[0], guard_box.lo[1]],
            [guard_box.hi[0], guard_box.lo[1]],
            [guard_box.hi[0], guard_box.hi[1]],
            [guard_box.lo[0], guard_box.hi[1]],
        ]
    )
    box_labels = [_BOX_EDGE] * 4

    min_len = MIN_FACET_FRACTION * float(np.max(guard_box.side_lengths))
    cells = []
    facet_map = {}
    for i in range(n):
        verts = box_verts
        labels = box_labels
        pi = points[i]
        for j in neighbors[i]:
            mid = 0.5 * (pi + points[j])
            nrm = points[j] - pi
            verts, labels = _clip_half_plane(verts, labels, nrm, float(nrm @ mid), int(j))
            if len(verts) == 0:
                break
        cells.append(np.asarray(verts))
        for k, lab in enumerate(labels):
            if lab >= 0 and i < lab:
                facet_map[(i, lab)] = (verts[k - 1], verts[k])

    fa, fb, ends = [], [], []
    for (i, j), (p0, p1) in facet_map.items():
        if np.hypot(p1[0] - p0[0], p1[1] - p0[1]) > min_len:
            fa.append(i)
            fb.append(j)
            ends.append((p0, p1))
    fa = np.asarray(fa, dtype=np.int64)
    fb = np.asarray(fb, dtype=np.int64)
    if fa.size:
        endpoints = np.asarray(ends).reshape(-1, 2, 2)
        measure = np.linalg.norm(endpoints[:, 1] - endpoints[:, 0], axis=1)
        diffs = points[fb] - points[fa]
        normal = diffs / np.linalg.norm(diffs, axis=1)[:, None]
        facets = FacetSet(a=fa, b=fb, measure=measure, normal=normal, endpoints=endpoints)
    else:
        facets = FacetSet.empty(2)

    cell_volumes = np.array([_shoelace_area(v) for v in cells])
    window_areas, diameter = _window_clip_stats(cells, window)
    parent = Honeycomb(
        d=2,
        cells=cells,
        ref_points=points,
        cell_volumes=cell_volumes,
        facets=facets,
        window=window,
        window_areas=window_areas,
        diameter_bound=diameter,
    )
    return _windowed(parent, duplicates_merged=merged)


def _candidate_neighbors(points: np.ndarray) -> list:
    """Per-generator candidate neighbor lists for bisector clipping.

    Uses Delaunay adjacency when available: every Voronoi neighbor pair with a
    positive-length shared facet appears in any Delaunay triangulation, and a
    bisector constraint missing on a cocircular tie touches the cell in a
    single point only, so clipping against Delaunay neighbors is exact.  Falls
    back to all pairs for tiny or degenerate (collinear) clouds.
    """
    n = points.shape[0]
    if n >= 4:
        try:
            tri = Delaunay(points)
            indptr, idx = tri.vertex_neighbor_vertices
            return [idx[indptr[i]:indptr[i + 1]] for i in range(n)]
        except QhullError:
            pass
    everyone = np.arange(n)
    return [everyone[everyone != i] for i in range(n)]


def _clip_half_plane(verts, labels, normal_vec, offset, new_label):
    """Clip a convex polygon with labeled edges against {x : normal . x <= offset}.

    ``labels[k]`` is the label of the edge from vertex k-1 to vertex k.  Edge
    pieces created on the clip line get ``new_label``.
    """
    m = len(verts)
    vals = [float(v @ normal_vec) - offset for v in verts]
    ins = [val <= CONTAINMENT_TOL for val in vals]
    out_v, out_l = [], []
    for k in range(m):
        s_in, e_in = ins[k - 1], ins[k]
        if s_in and e_in:
            out_v.append(verts[k])
            out_l.append(labels[k])
        elif s_in and not e_in:
            t = vals[k - 1] / (vals[k - 1] - vals[k])
            out_v.append(verts[k - 1] + t * (verts[k] - verts[k - 1]))
            out_l.append(labels[k])
        elif not s_in and e_in:
            t = vals[k - 1] / (vals[k - 1] - vals[k])
            out_v.append(verts[k - 1] + t * (verts[k] - verts[k - 1]))
            out_l.append(new_label)
            out_v.append(verts[k])
            out_l.append(labels[k])
    if len(out_v) < 3:
        return [], []
    return out_v, out_l


# ---------------------------------------------------------------------------
# shared geometry helpers
# ---------------------------------------------------------------------------

def _shoelace_area(verts) -> float:
    v = np.asarray(verts)
    if v.ndim != 2 or v.shape[0] < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(np.sum(x * np.roll(y, -1) - y * np.roll(x, -1))))


def clip_polygon_to_box(verts, box: Box):
    """Intersection of a convex CCW polygon with an axis-aligned 2D box."""
    v = [np.asarray(p, dtype=float) for p in verts]
    labels = [_BOX_EDGE] * len(v)
    for sign, axis in ((1.0, 0), (1.0, 1), (-1.0, 0), (-1.0, 1)):
        nrm = np.zeros(2)
        nrm[axis] = sign
        offset = box.hi[axis] if sign > 0 else -box.lo[axis]
        v, labels = _clip_half_plane(v, labels, nrm, float(offset), _BOX_EDGE)
        if not v:
            return np.empty((0, 2))
    return np.asarray(v)


def _window_clip_stats(cells, window: Box):
    """Per-cell window-clipped areas and the max clipped diameter."""
    areas = np.zeros(len(cells))
    diameter = 0.0
    for i, verts in enumerate(cells):
        if len(verts) < 3:
            continue
        clipped = clip_polygon_to_box(verts, window)
        if clipped.shape[0] < 3:
            continue
        areas[i] = _shoelace_area(clipped)
        diff = clipped[:, None, :] - clipped[None, :, :]
        diameter = max(diameter, float(np.sqrt((diff**2).sum(axis=2).max())))
    return areas, diameter


def polygon_contains_point(verts, point, tol: float = 1e-12) -> bool:
    """Membership test for a convex CCW polygon (closed, with slack tol)."""
    v = np.asarray(verts)
    p = np.asarray(point, dtype=float)
    e = np.roll(v, -1, axis=0) - v
    w = p - v
    cross = e[:, 0] * w[:, 1] - e[:, 1] * w[:, 0]
    return bool(np.all(cross >= -tol))


def pyramid_identity_sum(wh: WindowedHoneycomb) -> float:
    """Sum over ordered interior facet pairs of measure * reference distance.

    The value is bounded by 2*d*sigma_d(T) and converges to that bound as the
    cell diameter goes to 0, which is the geometric identity behind the
    surface estimator's limiting constant.
    """
    f = wh.interior_facets
    if len(f) == 0:
        return 0.0
    refs = wh.ref_points_inside
    dist = np.linalg.norm(refs[f.b] - refs[f.a], axis=1)
    return float(2.0 * np.sum(f.measure * dist))


def facet_normality_violation(wh: WindowedHoneycomb) -> float:
    """Max |cos angle| between interior facet directions and reference differences.

    Returns 0 for honeycombs without explicit facet endpoints (the lattice
    family, whose facets are axis-aligned by construction).
    """
    f = wh.interior_facets
    if f.endpoints is None or len(f) == 0:
        return 0.0
    tangent = f.endpoints[:, 1] - f.endpoints[:, 0]
    t_norm = np.linalg.norm(tangent, axis=1)
    refs = wh.ref_points_inside
    diff = refs[f.b] - refs[f.a]
    d_norm = np.linalg.norm(diff, axis=1)
    dots = np.abs(np.sum(tangent * diff, axis=1))
    return float(np.max(dots / (t_norm * d_norm)))


def honeycomb_edge_csv(wh: WindowedHoneycomb, path) -> None:
    """Write interior facets as a CSV edge list: ax,ay,bx,by,cell_a,cell_b,length.

    Cell ids are positions in the inside-cell ordering, matching the indicator
    alignment used by the estimators.
    """
    f = wh.interior_facets
    if f.endpoints is None:
        raise ValueError("edge export requires explicit 2D facet endpoints")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ax", "ay", "bx", "by", "cell_a", "cell_b", "length"])
        for k in range(len(f)):
            writer.writerow(
                [
                    format(f.endpoints[k, 0, 0], ".17g"),
                    format(f.endpoints[k, 0, 1], ".17g"),
                    format(f.endpoints[k, 1, 0], ".17g"),
                    format(f.endpoints[k, 1, 1], ".17g"),
                    int(f.a[k]),
                    int(f.b[k]),
                    format(f.measure[k], ".17g"),
                ]
            )
