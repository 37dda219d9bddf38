"""Landmark geometry: validation, similarity alignment, Delaunay meshing, warping.

Coordinates are pixels with origin at the top-left corner, x growing right
and y growing down. Landmark sets follow the common 68-point face layout
(jaw 0-16, brows 17-26, nose 27-35, eyes 36-47, mouth 48-67), 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay as _SciDelaunay
from scipy.spatial import QhullError

from .errors import DegenerateConfiguration, TopologyMismatch

LANDMARK_COUNT = 68

# Tolerance for the cocircular tie-break test, relative to extent^4 (the
# incircle determinant scales with the fourth power of coordinate magnitude).
_COCIRCULAR_RTOL = 1e-9


def _build_template():
    """Canonical 68-point layout in normalized [0,1] coordinates.

    Left-right symmetric about x = 0.5. Used by the landmark stub, the
    synthetic-face renderer and the asymmetry canonical frame.
    """
    pts = np.zeros((LANDMARK_COUNT, 2))
    # jaw 0-16: lower half-ellipse, point 8 is the chin
    t = np.linspace(0.0, np.pi, 17)
    pts[0:17, 0] = 0.5 - 0.30 * np.cos(t)
    pts[0:17, 1] = 0.46 + 0.40 * np.sin(t)
    # brows 17-21 (left) and 22-26 (right)
    bx = np.array([0.250, 0.295, 0.345, 0.395, 0.440])
    by = np.array([0.335, 0.322, 0.315, 0.320, 0.330])
    pts[17:22] = np.stack([bx, by], axis=1)
    pts[22:27] = np.stack([1.0 - bx[::-1], by[::-1]], axis=1)
    # nose bridge 27-30 (30 is the tip) and nostrils 31-35
    pts[27:31] = [(0.5, 0.36), (0.5, 0.42), (0.5, 0.48), (0.5, 0.54)]
    pts[31:36] = [(0.44, 0.58), (0.47, 0.59), (0.50, 0.60), (0.53, 0.59), (0.56, 0.58)]
    # eyes 36-41 (left) and 42-47 (right), each corner-top-top-corner-bottom-bottom
    left_eye = np.array([
        (0.305, 0.400), (0.335, 0.385), (0.370, 0.385),
        (0.400, 0.400), (0.370, 0.415), (0.335, 0.415),
    ])
    pts[36:42] = left_eye
    right_eye = left_eye.copy()
    right_eye[:, 0] = 1.0 - right_eye[:, 0]
    # mirror order so 42 is the inner corner and 45 the outer one
    pts[42:48] = right_eye[[3, 2, 1, 0, 5, 4]]
    # outer mouth 48-59 (48/54 corners, 51/57 top/bottom centers)
    pts[48:60] = [
        (0.400, 0.700), (0.435, 0.685), (0.470, 0.678), (0.500, 0.682),
        (0.530, 0.678), (0.565, 0.685), (0.600, 0.700), (0.565, 0.725),
        (0.530, 0.738), (0.500, 0.740), (0.470, 0.738), (0.435, 0.725),
    ]
    # inner mouth 60-67
    pts[60:68] = [
        (0.425, 0.700), (0.465, 0.695), (0.500, 0.697), (0.535, 0.695),
        (0.575, 0.700), (0.535, 0.712), (0.500, 0.715), (0.465, 0.712),
    ]
    pts.setflags(write=False)
    return pts


TEMPLATE_68 = _build_template()

# Index i maps to FLIP_INDEX_MAP[i] under a horizontal mirror of the face.
FLIP_INDEX_MAP = np.array(
    list(range(16, -1, -1))              # jaw
    + list(range(26, 16, -1))            # brows
    + [27, 28, 29, 30]                   # nose bridge (on the axis)
    + [35, 34, 33, 32, 31]               # nostrils
    + [45, 44, 43, 42, 47, 46]           # left eye -> right eye
    + [39, 38, 37, 36, 41, 40]           # right eye -> left eye
    + [54, 53, 52, 51, 50, 49, 48, 59, 58, 57, 56, 55]  # outer mouth
    + [64, 63, 62, 61, 60, 67, 66, 65]   # inner mouth
)


@dataclass(frozen=True)
class LandmarkSet:
    """68 (x, y) landmark coordinates bound to an image size."""

    points: np.ndarray  # (68, 2) float64
    image_width: int
    image_height: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        object.__setattr__(self, "points", pts)

    def scaled(self, new_width, new_height):
        """Landmarks rescaled proportionally to a new image size."""
        sx = new_width / self.image_width
        sy = new_height / self.image_height
        return LandmarkSet(self.points * np.array([sx, sy]), new_width, new_height)

    def flipped(self):
        """Landmarks of the horizontally mirrored image, semantically reindexed."""
        pts = self.points[FLIP_INDEX_MAP].copy()
        pts[:, 0] = (self.image_width - 1) - pts[:, 0]
        return LandmarkSet(pts, self.image_width, self.image_height)


def validate_landmarks(l: LandmarkSet) -> bool:
    """True iff the set has exactly 68 finite points inside [0,w) x [0,h)."""
    pts = np.asarray(l.points, dtype=np.float64)
    if pts.shape != (LANDMARK_COUNT, 2):
        return False
    if not np.all(np.isfinite(pts)):
        return False
    if np.any(pts[:, 0] < 0) or np.any(pts[:, 0] >= l.image_width):
        return False
    if np.any(pts[:, 1] < 0) or np.any(pts[:, 1] >= l.image_height):
        return False
    return True


@dataclass(frozen=True)
class SimilarityTransform:
    """Uniform scale + rotation + translation, applied as s*R(theta)*p + t."""

    scale: float
    rotation: float
    translation: np.ndarray  # (2,)

    def __post_init__(self):
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64))

    @property
    def matrix(self) -> np.ndarray:
        """2x3 affine matrix [sR | t]."""
        c, s = np.cos(self.rotation), np.sin(self.rotation)
        rot = self.scale * np.array([[c, -s], [s, c]])
        return np.hstack([rot, self.translation.reshape(2, 1)])

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        m = self.matrix
        return pts @ m[:, :2].T + m[:, 2]

    def inverse(self) -> "SimilarityTransform":
        inv_scale = 1.0 / self.scale
        c, s = np.cos(-self.rotation), np.sin(-self.rotation)
        rot = inv_scale * np.array([[c, -s], [s, c]])
        return SimilarityTransform(inv_scale, -self.rotation, -(rot @ self.translation))


def _as_points(obj) -> np.ndarray:
    if isinstance(obj, LandmarkSet):
        return obj.points
    return np.asarray(obj, dtype=np.float64)


def estimate_similarity(src, dst) -> SimilarityTransform:
    """Least-squares similarity transform mapping src points onto dst points.

    Closed-form Umeyama fit over all point pairs; the residual is the global
    minimum of the similarity-constrained least-squares problem.

    Raises:
        DegenerateConfiguration: all source points coincide.
    """
    s_pts = _as_points(src)
    d_pts = _as_points(dst)
    if s_pts.shape != d_pts.shape or s_pts.ndim != 2 or s_pts.shape[1] != 2:
        raise ValueError("point sets must share shape (N, 2)")
    mu_s = s_pts.mean(axis=0)
    mu_d = d_pts.mean(axis=0)
    cs = s_pts - mu_s
    cd = d_pts - mu_d
    var_s = float((cs ** 2).sum(axis=1).mean())
    if var_s <= 0.0:
        raise DegenerateConfiguration("all source points are coincident")
    cov = cd.T @ cs / len(s_pts)
    u, d, vt = np.linalg.svd(cov)
    sign = np.sign(np.linalg.det(u) * np.linalg.det(vt))
    if sign == 0:
        sign = 1.0
    fix = np.array([1.0, sign])
    rot = u @ np.diag(fix) @ vt
    scale = float((d * fix).sum() / var_s)
    if scale <= 0.0:
        raise DegenerateConfiguration("similarity fit collapsed to non-positive scale")
    translation = mu_d - scale * rot @ mu_s
    rotation = float(np.arctan2(rot[1, 0], rot[0, 0]))
    return SimilarityTransform(scale, rotation, translation)


@dataclass(frozen=True)
class TriangleMesh:
    """Shared-topology mesh: vertex coordinates plus index triples."""

    vertices: np.ndarray   # (N, 2) float64
    triangles: np.ndarray  # (M, 3) int64

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=np.float64))
        object.__setattr__(self, "triangles", np.asarray(self.triangles, dtype=np.int64))

    def with_vertices(self, vertices) -> "TriangleMesh":
        """Same triangle triples over a different vertex set."""
        vertices = np.asarray(vertices, dtype=np.float64)
        if len(vertices) != len(self.vertices):
            raise TopologyMismatch("vertex count differs from mesh topology")
        return TriangleMesh(vertices, self.triangles)


def boundary_anchors(width, height) -> np.ndarray:
    """4 corners + 4 edge midpoints of the [0,w] x [0,h] rectangle."""
    w, h = float(width), float(height)
    return np.array([
        (0.0, 0.0), (w, 0.0), (w, h), (0.0, h),
        (w / 2.0, 0.0), (w, h / 2.0), (w / 2.0, h), (0.0, h / 2.0),
    ])


def _triangle_area2(pts, tri):
    a, b, c = pts[tri[0]], pts[tri[1]], pts[tri[2]]
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _incircle_det(pts, a, b, c, d):
    """Positive when d lies inside the circumcircle of ccw triangle (a,b,c)."""
    rows = []
    for idx in (a, b, c):
        dx = pts[idx, 0] - pts[d, 0]
        dy = pts[idx, 1] - pts[d, 1]
        rows.append([dx, dy, dx * dx + dy * dy])
    return float(np.linalg.det(np.array(rows)))


def _orient(pts, a, b, c):
    return float(
        (pts[b, 0] - pts[a, 0]) * (pts[c, 1] - pts[a, 1])
        - (pts[b, 1] - pts[a, 1]) * (pts[c, 0] - pts[a, 0])
    )


def _canonicalize_cocircular(pts, tris):
    """Flip diagonals of cocircular quads to the one holding the lowest index.

    Qhull breaks cocircular ties arbitrarily; this pass makes the output
    deterministic across platforms. Only exactly-tied (within tolerance)
    quads are touched, so the Delaunay property is preserved.
    """
    extent = float(np.ptp(pts, axis=0).max()) or 1.0
    tol = _COCIRCULAR_RTOL * extent ** 4
    tris = [tuple(t) for t in tris]
    max_rounds = 4 * len(tris) + 16
    for _ in range(max_rounds):
        edge_map = {}
        for ti, tri in enumerate(tris):
            for k in range(3):
                e = tuple(sorted((tri[k], tri[(k + 1) % 3])))
                edge_map.setdefault(e, []).append((ti, tri[(k + 2) % 3]))
        flipped = False
        for (a, b), owners in edge_map.items():
            if len(owners) != 2:
                continue
            (t1, c), (t2, d) = owners
            lowest = min(a, b, c, d)
            if lowest in (a, b):
                continue
            # require a strictly convex quad: c,d on opposite sides of ab and
            # a,b on opposite sides of cd
            if _orient(pts, a, b, c) * _orient(pts, a, b, d) >= 0:
                continue
            if _orient(pts, c, d, a) * _orient(pts, c, d, b) >= 0:
                continue
            if abs(_incircle_det(pts, a, b, c, d)) > tol:
                continue
            tris[t1] = (c, d, a)
            tris[t2] = (c, d, b)
            flipped = True
            break
        if not flipped:
            break
    return tris


def delaunay(points) -> np.ndarray:
    """Delaunay triangulation of a raw point set.

    Returns (M, 3) index triples in canonical order: indices sorted within
    each triple, triples sorted lexicographically. Cocircular ties are broken
    toward the diagonal containing the lowest vertex index.

    Raises:
        DegenerateConfiguration: fewer than 3 points, or all collinear.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must have shape (N, 2)")
    if len(pts) < 3:
        raise DegenerateConfiguration("need at least 3 points")
    try:
        tri = _SciDelaunay(pts)
    except QhullError as exc:
        raise DegenerateConfiguration(f"degenerate point set: {exc}") from exc
    simplices = [t for t in tri.simplices if abs(_triangle_area2(pts, t)) > 0.0]
    if not simplices:
        raise DegenerateConfiguration("all points collinear")
    simplices = _canonicalize_cocircular(pts, simplices)
    canon = np.sort(np.asarray(simplices, dtype=np.int64), axis=1)
    order = np.lexsort((canon[:, 2], canon[:, 1], canon[:, 0]))
    return canon[order]


def triangulate(points, width, height) -> TriangleMesh:
    """Delaunay mesh of the given points plus 8 boundary anchors.

    The anchors guarantee the triangle union covers the full [0,w] x [0,h]
    image rectangle, so a piecewise-affine warp leaves no undefined pixels.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    vertices = np.vstack([pts, boundary_anchors(width, height)]) if len(pts) else boundary_anchors(width, height)
    triples = delaunay(vertices)
    return TriangleMesh(vertices, triples)


def _bilinear_sample(img, xs, ys):
    """Bilinear sample with edge clamping. img is (H, W, C) float64."""
    h, w = img.shape[:2]
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[:, None]
    fy = (ys - y0)[:, None]
    top = img[y0, x0] * (1.0 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1.0 - fx) + img[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def _warp_pass(img, out, assigned, src_mesh, dst_mesh, eps):
    h, w = img.shape[:2]
    for tri in dst_mesh.triangles:
        dv = dst_mesh.vertices[tri]
        sv = src_mesh.vertices[tri]
        x_min = max(int(np.floor(dv[:, 0].min())), 0)
        x_max = min(int(np.ceil(dv[:, 0].max())), w - 1)
        y_min = max(int(np.floor(dv[:, 1].min())), 0)
        y_max = min(int(np.ceil(dv[:, 1].max())), h - 1)
        if x_min > x_max or y_min > y_max:
            continue
        det = (dv[1, 0] - dv[0, 0]) * (dv[2, 1] - dv[0, 1]) - (dv[2, 0] - dv[0, 0]) * (dv[1, 1] - dv[0, 1])
        if det == 0.0:
            continue
        ys, xs = np.mgrid[y_min:y_max + 1, x_min:x_max + 1]
        region = assigned[y_min:y_max + 1, x_min:x_max + 1]
        px = xs.astype(np.float64) - dv[0, 0]
        py = ys.astype(np.float64) - dv[0, 1]
        l1 = ((dv[2, 1] - dv[0, 1]) * px - (dv[2, 0] - dv[0, 0]) * py) / det
        l2 = (-(dv[1, 1] - dv[0, 1]) * px + (dv[1, 0] - dv[0, 0]) * py) / det
        l0 = 1.0 - l1 - l2
        inside = (l0 >= -eps) & (l1 >= -eps) & (l2 >= -eps) & ~region
        if not inside.any():
            continue
        if np.array_equal(sv, dv):
            # identical triangle: sample at exact integer positions
            sxs = xs[inside].astype(np.float64)
            sys_ = ys[inside].astype(np.float64)
        else:
            sxs = l0[inside] * sv[0, 0] + l1[inside] * sv[1, 0] + l2[inside] * sv[2, 0]
            sys_ = l0[inside] * sv[0, 1] + l1[inside] * sv[1, 1] + l2[inside] * sv[2, 1]
        out[ys[inside], xs[inside]] = _bilinear_sample(img, sxs, sys_)
        region[inside] = True


def warp_image_float(img, src_mesh: TriangleMesh, dst_mesh: TriangleMesh) -> np.ndarray:
    """Piecewise-affine warp on a float image; the core behind the 8-bit API.

    For each destination pixel, the containing destination triangle's affine
    map locates the source position; the sample is bilinear with edge
    clamping. Output dimensions equal input dimensions.
    """
    if not np.array_equal(src_mesh.triangles, dst_mesh.triangles):
        raise TopologyMismatch("meshes do not share triangle index triples")
    if len(src_mesh.vertices) != len(dst_mesh.vertices):
        raise TopologyMismatch("meshes do not share vertex count")
    img = np.asarray(img, dtype=np.float64)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[:, :, None]
    if np.array_equal(src_mesh.vertices, dst_mesh.vertices):
        out = img.copy()
        return out[:, :, 0] if squeeze else out
    h, w = img.shape[:2]
    out = np.zeros_like(img)
    assigned = np.zeros((h, w), dtype=bool)
    _warp_pass(img, out, assigned, src_mesh, dst_mesh, eps=1e-9)
    if not assigned.all():
        # float noise can leave hairline gaps along shared edges
        _warp_pass(img, out, assigned, src_mesh, dst_mesh, eps=1e-6)
    if not assigned.all():
        ys, xs = np.nonzero(~assigned)
        out[ys, xs] = img[ys, xs]
    return out[:, :, 0] if squeeze else out


def round_half_up_u8(values) -> np.ndarray:
    """Round half-up to 8-bit; python round() (half-even) is deliberately avoided."""
    return np.clip(np.floor(np.asarray(values, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


def warp_piecewise_affine(img, src_mesh: TriangleMesh, dst_mesh: TriangleMesh) -> np.ndarray:
    """8-bit piecewise-affine warp; identical meshes return a bit-identical copy."""
    raster = np.asarray(img)
    if np.array_equal(src_mesh.triangles, dst_mesh.triangles) and np.array_equal(
        src_mesh.vertices, dst_mesh.vertices
    ):
        return raster.copy()
    return round_half_up_u8(warp_image_float(raster, src_mesh, dst_mesh))


def warp_similarity(img, transform: SimilarityTransform, out_width=None, out_height=None) -> np.ndarray:
    """Warp a full image by a similarity transform (inverse-mapped, bilinear)."""
    img = np.asarray(img, dtype=np.float64)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[:, :, None]
    h, w = img.shape[:2]
    ow = int(out_width) if out_width is not None else w
    oh = int(out_height) if out_height is not None else h
    inv = transform.inverse().matrix
    ys, xs = np.mgrid[0:oh, 0:ow]
    xs = xs.ravel().astype(np.float64)
    ys = ys.ravel().astype(np.float64)
    sxs = inv[0, 0] * xs + inv[0, 1] * ys + inv[0, 2]
    sys_ = inv[1, 0] * xs + inv[1, 1] * ys + inv[1, 2]
    out = _bilinear_sample(img, sxs, sys_).reshape(oh, ow, img.shape[2])
    return out[:, :, 0] if squeeze else out
