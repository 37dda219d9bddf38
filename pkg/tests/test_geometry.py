import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morphline.errors import DegenerateConfiguration, TopologyMismatch
from morphline.geometry import (
    FLIP_INDEX_MAP,
    LANDMARK_COUNT,
    TEMPLATE_68,
    LandmarkSet,
    SimilarityTransform,
    TriangleMesh,
    boundary_anchors,
    delaunay,
    estimate_similarity,
    triangulate,
    validate_landmarks,
    warp_piecewise_affine,
    warp_image_float,
)


def template_landmarks(w=200, h=200):
    return LandmarkSet(TEMPLATE_68 * np.array([w, h]), w, h)


class TestValidateLandmarks:
    def test_template_in_bounds(self):
        assert validate_landmarks(template_landmarks())

    def test_wrong_count(self):
        l = LandmarkSet(np.zeros((67, 2)) + 5.0, 100, 100)
        assert not validate_landmarks(l)

    def test_out_of_bounds_point(self):
        pts = TEMPLATE_68 * 100
        pts = pts.copy()
        pts[3] = (-1.0, 5.0)
        assert not validate_landmarks(LandmarkSet(pts, 100, 100))

    def test_boundary_is_exclusive(self):
        pts = TEMPLATE_68 * 100
        pts = pts.copy()
        pts[0] = (100.0, 50.0)  # x == width is outside
        assert not validate_landmarks(LandmarkSet(pts, 100, 100))

    def test_non_finite(self):
        pts = TEMPLATE_68 * 100
        pts = pts.copy()
        pts[10, 1] = np.nan
        assert not validate_landmarks(LandmarkSet(pts, 100, 100))

    def test_flip_map_is_involution(self):
        assert np.array_equal(FLIP_INDEX_MAP[FLIP_INDEX_MAP], np.arange(LANDMARK_COUNT))

    def test_template_is_symmetric(self):
        mirrored = TEMPLATE_68[FLIP_INDEX_MAP].copy()
        mirrored[:, 0] = 1.0 - mirrored[:, 0]
        assert np.allclose(mirrored, TEMPLATE_68, atol=1e-12)


class TestEstimateSimilarity:
    def test_identity(self):
        l = template_landmarks()
        t = estimate_similarity(l, l)
        assert t.scale == pytest.approx(1.0, abs=1e-9)
        assert t.rotation == pytest.approx(0.0, abs=1e-9)
        assert np.allclose(t.translation, 0.0, atol=1e-9)

    def test_rotation_and_shift_recovered(self):
        src = TEMPLATE_68 * 100
        # rotate 90 degrees about the origin, then shift by (10, 0)
        rot = np.array([[0.0, -1.0], [1.0, 0.0]])
        dst = src @ rot.T + np.array([10.0, 0.0])
        t = estimate_similarity(src, dst)
        assert t.rotation == pytest.approx(np.pi / 2, abs=1e-6)
        assert t.translation[0] == pytest.approx(10.0, abs=1e-6)
        assert t.translation[1] == pytest.approx(0.0, abs=1e-6)

    def test_scale_recovered(self):
        src = TEMPLATE_68 * 100
        t = estimate_similarity(src, src * 2.0)
        assert t.scale == pytest.approx(2.0, abs=1e-6)

    def test_coincident_points_degenerate(self):
        src = np.ones((68, 2)) * 5.0
        with pytest.raises(DegenerateConfiguration):
            estimate_similarity(src, TEMPLATE_68 * 100)

    def test_inverse_round_trip(self):
        t = SimilarityTransform(1.7, 0.3, np.array([4.0, -2.5]))
        pts = TEMPLATE_68 * 100
        back = t.inverse().apply(t.apply(pts))
        assert np.abs(back - pts).max() < 1e-6

    @settings(max_examples=50, deadline=None)
    @given(
        scale=st.floats(0.2, 5.0),
        rotation=st.floats(-3.1, 3.1),
        tx=st.floats(-50, 50),
        ty=st.floats(-50, 50),
    )
    def test_round_trip_recovers_parameters(self, scale, rotation, tx, ty):
        src = TEMPLATE_68 * 100
        t_true = SimilarityTransform(scale, rotation, np.array([tx, ty]))
        t_est = estimate_similarity(src, t_true.apply(src))
        assert t_est.scale == pytest.approx(scale, rel=1e-6)
        assert t_est.rotation == pytest.approx(rotation, abs=1e-6)
        assert np.allclose(t_est.translation, [tx, ty], atol=1e-6)


def circumcircle_contains(pts, tri, point_idx):
    """Brute-force empty-circumcircle check: strictly inside the circle."""
    a, b, c = (pts[i] for i in tri)
    d = pts[point_idx]
    area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if area2 < 0:
        a, b = b, a
    m = np.array([
        [a[0] - d[0], a[1] - d[1], (a[0] - d[0]) ** 2 + (a[1] - d[1]) ** 2],
        [b[0] - d[0], b[1] - d[1], (b[0] - d[0]) ** 2 + (b[1] - d[1]) ** 2],
        [c[0] - d[0], c[1] - d[1], (c[0] - d[0]) ** 2 + (c[1] - d[1]) ** 2],
    ])
    extent = float(np.ptp(pts, axis=0).max())
    return np.linalg.det(m) > 1e-9 * extent ** 4


class TestDelaunay:
    def test_anchors_only_cover_rect(self):
        mesh = triangulate([], 100, 100)
        total = sum(abs(signed_area(mesh.vertices, t)) for t in mesh.triangles)
        assert total == pytest.approx(10000.0, abs=1e-6)

    def test_empty_circumcircle_vs_bruteforce(self):
        rng = np.random.default_rng(5)
        for trial in range(5):
            pts = rng.uniform(5, 95, size=(20, 2))
            tris = delaunay(pts)
            for tri in tris:
                for i in range(len(pts)):
                    if i in tri:
                        continue
                    assert not circumcircle_contains(pts, tri, i), (
                        f"point {i} inside circumcircle of {tri}"
                    )

    def test_cocircular_square_two_triangles_lowest_index(self):
        pts = np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]])
        tris = delaunay(pts)
        assert len(tris) == 2
        # the preferred diagonal contains vertex 0: triangles (0,1,2) and (0,2,3)
        as_sets = {frozenset(t) for t in map(tuple, tris)}
        assert as_sets == {frozenset({0, 1, 2}), frozenset({0, 2, 3})}

    def test_cocircular_tiebreak_other_labelling(self):
        # same square, rotated labels: lowest index 0 now sits at (10, 0)
        pts = np.array([[10.0, 0.0], [10.0, 10.0], [0.0, 10.0], [0.0, 0.0]])
        tris = delaunay(pts)
        assert len(tris) == 2
        as_sets = {frozenset(t) for t in map(tuple, tris)}
        assert as_sets == {frozenset({0, 1, 2}), frozenset({0, 2, 3})}

    def test_collinear_degenerate(self):
        pts = np.stack([np.linspace(0, 10, 6), np.linspace(0, 5, 6)], axis=1)
        with pytest.raises(DegenerateConfiguration):
            delaunay(pts)

    def test_too_few_points(self):
        with pytest.raises(DegenerateConfiguration):
            delaunay(np.array([[0.0, 0.0], [1.0, 1.0]]))

    def test_full_coverage_with_landmarks(self):
        mesh = triangulate(TEMPLATE_68 * 128, 128, 128)
        total = sum(abs(signed_area(mesh.vertices, t)) for t in mesh.triangles)
        assert total == pytest.approx(128 * 128, abs=1e-6)

    def test_no_degenerate_triangles(self):
        mesh = triangulate(TEMPLATE_68 * 128, 128, 128)
        for tri in mesh.triangles:
            assert abs(signed_area(mesh.vertices, tri)) > 0.0

    def test_indices_valid(self):
        mesh = triangulate(TEMPLATE_68 * 128, 128, 128)
        assert mesh.triangles.min() >= 0
        assert mesh.triangles.max() < len(mesh.vertices)


def signed_area(pts, tri):
    a, b, c = pts[tri[0]], pts[tri[1]], pts[tri[2]]
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def checkerboard(h, w, block=4):
    yy, xx = np.mgrid[0:h, 0:w]
    base = ((yy // block + xx // block) % 2 * 255).astype(np.uint8)
    return np.stack([base] * 3, axis=-1)


class TestWarp:
    def test_identity_warp_bit_identical(self):
        img = checkerboard(64, 64)
        mesh = triangulate(TEMPLATE_68 * 64, 64, 64)
        out = warp_piecewise_affine(img, mesh, mesh)
        assert np.array_equal(out, img)

    def test_translation_moves_patch(self):
        img = np.zeros((64, 64, 3), dtype=np.uint8)
        img[30:35, 20:25] = 255  # distinctive 5x5 patch
        src = triangulate([], 64, 64)
        dst = TriangleMesh(src.vertices + np.array([10.0, 0.0]), src.triangles)
        out = warp_piecewise_affine(img, src, dst)
        assert np.all(out[30:35, 30:35] == 255)
        assert np.all(out[30:35, 20:25] == 0)

    def test_constant_image_stays_constant(self):
        img = np.full((50, 50, 3), 137, dtype=np.uint8)
        src = triangulate(TEMPLATE_68 * 50, 50, 50)
        rng = np.random.default_rng(3)
        jitter = rng.uniform(-2, 2, size=src.vertices.shape)
        jitter[-8:] = 0.0  # keep anchors put so coverage holds
        dst = TriangleMesh(src.vertices + jitter, src.triangles)
        out = warp_piecewise_affine(img, src, dst)
        assert np.all(out == 137)

    def test_topology_mismatch(self):
        mesh_a = triangulate(TEMPLATE_68 * 64, 64, 64)
        mesh_b = triangulate(TEMPLATE_68[:30] * 64, 64, 64)  # fewer vertices
        img = checkerboard(64, 64)
        with pytest.raises(TopologyMismatch):
            warp_piecewise_affine(img, mesh_a, mesh_b)

    def test_warp_locality(self):
        # pixels strictly inside a destination triangle depend only on source
        # pixels inside the corresponding source triangle's bbox (+1 margin)
        rng = np.random.default_rng(9)
        img = rng.integers(0, 256, size=(64, 64, 3)).astype(np.uint8)
        src = triangulate(TEMPLATE_68 * 64, 64, 64)
        jitter = rng.uniform(-1.5, 1.5, size=src.vertices.shape)
        jitter[-8:] = 0.0
        dst = TriangleMesh(src.vertices + jitter, src.triangles)
        out = warp_image_float(img.astype(float), src, dst)

        tri = src.triangles[len(src.triangles) // 2]
        sv = src.vertices[tri]
        dv = dst.vertices[tri]
        x0 = int(np.floor(sv[:, 0].min())) - 1
        x1 = int(np.ceil(sv[:, 0].max())) + 1
        y0 = int(np.floor(sv[:, 1].min())) - 1
        y1 = int(np.ceil(sv[:, 1].max())) + 1
        tampered = img.astype(float).copy()
        mask = np.ones((64, 64), dtype=bool)
        mask[max(y0, 0):y1 + 1, max(x0, 0):x1 + 1] = False
        tampered[mask] += 40.0
        out2 = warp_image_float(tampered, src, dst)

        # probe pixels strictly interior to the destination triangle
        cx, cy = dv.mean(axis=0)
        probes = [dv.mean(axis=0), 0.7 * dv.mean(axis=0) + 0.3 * dv[0]]
        for px, py in probes:
            ix, iy = int(round(px)), int(round(py))
            lams = barycentric(dv, (ix, iy))
            if min(lams) > 0.05:
                assert np.allclose(out[iy, ix], out2[iy, ix])

    def test_boundary_anchor_layout(self):
        anchors = boundary_anchors(100, 50)
        assert anchors.shape == (8, 2)
        assert anchors[:, 0].max() == 100.0
        assert anchors[:, 1].max() == 50.0


def barycentric(tri, p):
    a, b, c = tri
    det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
    l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det
    l2 = (-(p[0] - a[0]) * (b[1] - a[1]) + (b[0] - a[0]) * (p[1] - a[1])) / det
    return 1 - l1 - l2, l1, l2
