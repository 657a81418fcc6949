import math
import warnings

import numpy as np
import pytest
from scipy.spatial import cKDTree

from excursionkit.sampling import sample_poisson_process
from excursionkit.tessellation import (
    Box,
    clip_polygon_to_box,
    facet_normality_violation,
    hexagonal_honeycomb,
    honeycomb_edge_csv,
    hypercubic_honeycomb,
    polygon_contains_point,
    pyramid_identity_sum,
    voronoi_honeycomb_2d,
)


class TestBox:
    def test_volume_and_sides(self):
        b = Box(np.array([-1.0, 0.0]), np.array([3.0, 2.0]))
        assert b.volume == pytest.approx(8.0)
        assert np.allclose(b.side_lengths, [4.0, 2.0])
        assert b.d == 2

    def test_contains_closed(self):
        b = Box(np.zeros(2), np.ones(2))
        pts = np.array([[0.0, 0.0], [1.0, 1.0], [0.5, 0.5], [1.0 + 1e-6, 0.5]])
        assert list(b.contains(pts)) == [True, True, True, False]

    def test_expanded(self):
        b = Box(np.zeros(2), np.ones(2)).expanded(0.5)
        assert np.allclose(b.lo, [-0.5, -0.5]) and np.allclose(b.hi, [1.5, 1.5])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Box(np.zeros(2), np.zeros(2))


class TestHypercubic:
    def test_two_by_two_counts(self):
        wh = hypercubic_honeycomb(1.0, 1, 2)
        assert wh.n_inside == 4
        assert wh.interior_facets.measure.size == 4
        assert wh.coverage_ratio == 1.0
        assert wh.window.volume == pytest.approx(4.0)

    def test_two_by_two_pyramid(self):
        wh = hypercubic_honeycomb(1.0, 1, 2)
        assert pyramid_identity_sum(wh) == pytest.approx(8.0)
        # the identity upper bound is 2 d sigma_d(T) = 16
        assert pyramid_identity_sum(wh) <= 2 * 2 * wh.window.volume

    def test_half_spacing_counts(self):
        wh = hypercubic_honeycomb(0.5, 2, 2)
        assert wh.n_inside == 16
        assert wh.interior_facets.measure.size == 24

    @pytest.mark.parametrize("n", [1, 2, 4, 8])
    def test_pyramid_closed_form_2d(self, n):
        wh = hypercubic_honeycomb(1.0 / n, n, 2)
        ratio = pyramid_identity_sum(wh) / (2 * 2 * wh.window.volume)
        assert ratio == pytest.approx(1.0 - 1.0 / (2 * n), rel=1e-12)

    def test_pyramid_closed_form_3d(self):
        wh = hypercubic_honeycomb(1.0, 2, 3)
        assert wh.n_inside == 64
        assert wh.interior_facets.measure.size == 144
        ratio = pyramid_identity_sum(wh) / (2 * 3 * wh.window.volume)
        assert ratio == pytest.approx(1.0 - 1.0 / 4.0, rel=1e-12)

    def test_pyramid_ratio_nondecreasing_in_refinement(self):
        ratios = []
        for n in (2, 4, 8, 16):
            wh = hypercubic_honeycomb(2.0 / n, n, 2)
            ratios.append(pyramid_identity_sum(wh) / (4 * wh.window.volume))
        assert all(b > a for a, b in zip(ratios, ratios[1:]))

    def test_geometry_metadata(self):
        wh = hypercubic_honeycomb(0.25, 4, 2)
        assert np.allclose(wh.window.lo, [-1.0, -1.0])
        assert wh.diameter_bound == pytest.approx(0.25 * math.sqrt(2))
        assert np.all(wh.parent.cell_volumes == pytest.approx(0.25**2))

    def test_ref_points_row_major_and_centered(self):
        wh = hypercubic_honeycomb(1.0, 1, 2)
        assert np.allclose(wh.ref_points_inside, [[-1, -1], [-1, 0], [0, -1], [0, 0]])

    def test_facet_normals_axis_aligned(self):
        wh = hypercubic_honeycomb(0.5, 2, 3)
        fs = wh.interior_facets
        norms = np.abs(fs.normal)
        assert np.allclose(norms.max(axis=1), 1.0)
        assert np.allclose(norms.sum(axis=1), 1.0)
        assert np.all(fs.measure == pytest.approx(0.25))

    def test_facets_connect_adjacent_cells(self):
        wh = hypercubic_honeycomb(1.0, 2, 2)
        refs = wh.ref_points_inside
        fs = wh.interior_facets
        gaps = np.linalg.norm(refs[fs.a] - refs[fs.b], axis=1)
        assert np.allclose(gaps, 1.0)

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            hypercubic_honeycomb(0.0, 2, 2)
        with pytest.raises(ValueError):
            hypercubic_honeycomb(0.5, 0, 2)


class TestHexagonal:
    WINDOW = Box(np.full(2, -6.0), np.full(2, 6.0))

    def test_single_cell_area(self):
        wh = hexagonal_honeycomb(1.0, self.WINDOW)
        # regular hexagon with circumradius 1
        assert np.allclose(wh.cell_volumes_inside, 1.5 * math.sqrt(3))

    def test_facet_measure_is_side_length(self):
        wh = hexagonal_honeycomb(0.5, self.WINDOW)
        assert np.all(wh.interior_facets.measure == pytest.approx(0.5))

    def test_neighbor_spacing(self):
        wh = hexagonal_honeycomb(0.5, self.WINDOW)
        refs = wh.ref_points_inside
        fs = wh.interior_facets
        gaps = np.linalg.norm(refs[fs.a] - refs[fs.b], axis=1)
        assert np.allclose(gaps, 0.5 * math.sqrt(3))

    def test_facet_normality(self):
        wh = hexagonal_honeycomb(0.4, self.WINDOW)
        assert facet_normality_violation(wh) < 1e-9

    def test_interior_cell_has_three_unordered_facets(self):
        wh = hexagonal_honeycomb(0.5, self.WINDOW)
        fs = wh.interior_facets
        center = np.argmin(np.linalg.norm(wh.ref_points_inside, axis=1))
        degree = np.sum(fs.a == center) + np.sum(fs.b == center)
        assert degree == 6  # all six neighbors inside, three facets own the cell on each side

    def test_pyramid_bound(self):
        wh = hexagonal_honeycomb(0.5, self.WINDOW)
        assert pyramid_identity_sum(wh) <= 4 * wh.window.volume

    def test_coverage_below_one(self):
        wh = hexagonal_honeycomb(1.0, self.WINDOW)
        assert 0.5 < wh.coverage_ratio < 1.0


class TestVoronoiTwoGenerators:
    WINDOW = Box(np.array([-1.0, -1.0]), np.array([2.0, 1.0]))

    def build(self):
        return voronoi_honeycomb_2d(
            np.array([[0.0, 0.0], [1.0, 0.0]]), self.WINDOW, guard=0.0
        )

    def test_counts(self):
        wh = self.build()
        assert wh.n_inside == 2
        assert wh.interior_facets.measure.size == 1

    def test_facet_geometry(self):
        wh = self.build()
        fs = wh.interior_facets
        assert fs.measure[0] == pytest.approx(2.0, rel=1e-12)
        assert abs(fs.normal[0, 0]) == pytest.approx(1.0, rel=1e-12)
        mid = fs.endpoints[0].mean(axis=0)
        assert mid[0] == pytest.approx(0.5, rel=1e-12)

    def test_volumes_partition_window(self):
        wh = self.build()
        assert wh.window.volume == pytest.approx(6.0)
        assert np.sort(wh.cell_volumes_inside).tolist() == pytest.approx([3.0, 3.0])
        assert wh.coverage_ratio == pytest.approx(1.0, rel=1e-12)

    def test_crossing_surface_value(self):
        # exceedance on one side only: estimate = facet length / window area
        from excursionkit.estimators import ExcursionIndicator, surface_estimate

        wh = self.build()
        ind = ExcursionIndicator(flags=np.array([True, False]), u=0.0)
        assert surface_estimate(wh, ind) == pytest.approx(1.0 / 3.0, rel=1e-12)


class TestVoronoiCornerGenerators:
    def test_no_diagonal_facets(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        window = Box(np.zeros(2), np.ones(2))
        wh = voronoi_honeycomb_2d(pts, window, guard=0.0)
        assert wh.n_inside == 4
        fs = wh.interior_facets
        # cocircular generators: the two bisector segments give 4 facets of
        # length 1/2; the diagonal pairs touch only at the center point
        assert fs.measure.size == 4
        assert np.allclose(fs.measure, 0.5)
        pairs = {tuple(sorted((int(a), int(b)))) for a, b in zip(fs.a, fs.b)}
        assert (0, 3) not in pairs and (1, 2) not in pairs
        assert np.allclose(wh.cell_volumes_inside, 0.25)


class TestVoronoiClouds:
    def make_cloud(self, seed, n=60, half=3.0):
        rng = np.random.default_rng(seed)
        return rng.uniform(-half, half, size=(n, 2))

    def test_nearest_generator_oracle(self):
        pts = self.make_cloud(2)
        window = Box(np.full(2, -3.0), np.full(2, 3.0))
        wh = voronoi_honeycomb_2d(pts, window, guard=1.0)
        tree = cKDTree(pts)
        rng = np.random.default_rng(3)
        queries = rng.uniform(-2.0, 2.0, size=(200, 2))
        cells = wh.parent.cells
        hits = 0
        for q in queries:
            for ci, poly in enumerate(cells):
                if polygon_contains_point(poly, q):
                    assert tree.query(q)[1] == ci
                    hits += 1
                    break
        assert hits >= 190  # nearly all queries land strictly inside some cell

    def test_cells_partition_window(self):
        pts = self.make_cloud(5)
        window = Box(np.full(2, -3.0), np.full(2, 3.0))
        wh = voronoi_honeycomb_2d(pts, window, guard=1.0)
        assert np.sum(wh.parent.window_areas) == pytest.approx(window.volume, rel=1e-9)

    def test_facet_normality(self):
        pts = self.make_cloud(7)
        wh = voronoi_honeycomb_2d(pts, Box(np.full(2, -3.0), np.full(2, 3.0)), guard=1.0)
        assert facet_normality_violation(wh) < 1e-9

    @pytest.mark.parametrize("seed", [11, 12, 13])
    def test_pyramid_inequality(self, seed):
        window = Box(np.full(2, -4.0), np.full(2, 4.0))
        pts = sample_poisson_process(1.5, window.expanded(1.5), seed)
        wh = voronoi_honeycomb_2d(pts, window, guard=1.5)
        assert pyramid_identity_sum(wh) <= 2 * 2 * window.volume

    def test_interior_facet_requires_both_cells_inside(self):
        pts = self.make_cloud(9)
        window = Box(np.full(2, -3.0), np.full(2, 3.0))
        wh = voronoi_honeycomb_2d(pts, window, guard=1.0)
        assert np.all(wh.inside[wh.inside_index[wh.interior_facets.a]])
        assert np.all(wh.inside[wh.inside_index[wh.interior_facets.b]])

    def test_rescaling_halves_facet_lengths(self):
        pts = self.make_cloud(15)
        big = voronoi_honeycomb_2d(pts, Box(np.full(2, -3.0), np.full(2, 3.0)), guard=1.0)
        small = voronoi_honeycomb_2d(
            0.5 * pts, Box(np.full(2, -1.5), np.full(2, 1.5)), guard=0.5
        )
        assert small.interior_facets.measure.sum() == pytest.approx(
            0.5 * big.interior_facets.measure.sum(), rel=1e-9
        )

    def test_collinear_generators_supported(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        window = Box(np.array([-0.5, -1.0]), np.array([2.5, 1.0]))
        wh = voronoi_honeycomb_2d(pts, window, guard=0.0)
        assert wh.n_inside == 3
        assert wh.interior_facets.measure.size == 2
        assert np.allclose(wh.interior_facets.measure, 2.0)

    def test_duplicate_generators_merged_with_warning(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0 + 1e-14, 0.0]])
        window = Box(np.array([-1.0, -1.0]), np.array([2.0, 1.0]))
        with warnings.catch_warnings(record=True) as rec:
            warnings.simplefilter("always")
            wh = voronoi_honeycomb_2d(pts, window, guard=0.0)
        assert wh.duplicates_merged == 1
        assert any("duplicate" in str(w.message).lower() for w in rec)
        assert wh.parent.ref_points.shape[0] == 2

    def test_too_few_generators_rejected(self):
        window = Box(np.zeros(2), np.ones(2))
        with pytest.raises(ValueError):
            voronoi_honeycomb_2d(np.array([[0.5, 0.5]]), window, guard=0.0)

    def test_single_inside_cell_has_no_interior_facets(self):
        # one generator deep inside, others far outside the window
        pts = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [-10.0, -10.0]])
        window = Box(np.full(2, -2.0), np.full(2, 2.0))
        wh = voronoi_honeycomb_2d(pts, window, guard=10.0)
        assert wh.n_inside <= 1
        assert wh.interior_facets.measure.size == 0

    def test_negative_guard_rejected(self):
        window = Box(np.zeros(2), np.ones(2))
        with pytest.raises(ValueError):
            voronoi_honeycomb_2d(np.array([[0.2, 0.2], [0.8, 0.8]]), window, guard=-0.5)


class TestPolygonHelpers:
    def test_clip_to_box(self):
        tri = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]])
        clipped = clip_polygon_to_box(tri, Box(np.zeros(2), np.ones(2)))
        # unit square corner cut by the line x + y = 4 stays the full square
        from excursionkit.tessellation import _shoelace_area

        assert _shoelace_area(clipped) == pytest.approx(1.0)

    def test_contains_point(self):
        square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        assert polygon_contains_point(square, np.array([0.5, 0.5]))
        assert not polygon_contains_point(square, np.array([1.5, 0.5]))


class TestEdgeCsv:
    def test_two_generator_export(self, tmp_path):
        window = Box(np.array([-1.0, -1.0]), np.array([2.0, 1.0]))
        wh = voronoi_honeycomb_2d(np.array([[0.0, 0.0], [1.0, 0.0]]), window, guard=0.0)
        path = tmp_path / "edges.csv"
        honeycomb_edge_csv(wh, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "ax,ay,bx,by,cell_a,cell_b,length"
        assert len(lines) == 2
        fields = lines[1].split(",")
        assert float(fields[0]) == pytest.approx(0.5)
        assert float(fields[2]) == pytest.approx(0.5)
        assert float(fields[6]) == pytest.approx(2.0)
