"""Facial-asymmetry metric: landmark ROIs, SSIM, three-region average.

Six rectangles (eyes, cheeks, mouth; left and right) are cut from the
aligned face using fixed landmark index pairs. Each right-side crop is
mirrored, the pair is brought to a common size, and structural similarity
is computed per pair. Scores are percentages; 100 means the two sides are
identical.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from PIL import Image
from scipy.ndimage import correlate1d

from .errors import DegenerateRoi, DimensionMismatch
from .geometry import TEMPLATE_68, LandmarkSet, estimate_similarity, warp_similarity
from .scoring import rec601_gray


class Region(enum.Enum):
    LEFT_EYE = "left_eye"
    RIGHT_EYE = "right_eye"
    LEFT_CHEEK = "left_cheek"
    RIGHT_CHEEK = "right_cheek"
    LEFT_MOUTH = "left_mouth"
    RIGHT_MOUTH = "right_mouth"


# Corner definitions as ((x-landmark, y-landmark), (x-landmark, y-landmark)),
# 0-based indices into the 68-point layout. Reproduced exactly as designed,
# including the irregular-looking right-cheek and mouth second corners;
# corner normalization makes any ordering valid.
ROI_LANDMARK_PAIRS: Dict[Region, Tuple[Tuple[int, int], Tuple[int, int]]] = {
    Region.LEFT_EYE: ((17, 19), (29, 29)),
    Region.RIGHT_EYE: ((29, 24), (26, 29)),
    Region.LEFT_CHEEK: ((4, 30), (48, 4)),
    Region.RIGHT_CHEEK: ((54, 30), (12, 54)),
    Region.LEFT_MOUTH: ((5, 51), (8, 8)),
    Region.RIGHT_MOUTH: ((51, 51), (11, 8)),
}

_REGION_PAIRS = (
    ("eyes", Region.LEFT_EYE, Region.RIGHT_EYE),
    ("cheeks", Region.LEFT_CHEEK, Region.RIGHT_CHEEK),
    ("mouth", Region.LEFT_MOUTH, Region.RIGHT_MOUTH),
)


@dataclass(frozen=True)
class RoiRect:
    """Axis-aligned rectangle with normalized corners (p1 < p2 per axis)."""

    region: Region
    p1: Tuple[float, float]
    p2: Tuple[float, float]

    def __post_init__(self):
        x1, y1 = self.p1
        x2, y2 = self.p2
        lo = (min(x1, x2), min(y1, y2))
        hi = (max(x1, x2), max(y1, y2))
        object.__setattr__(self, "p1", lo)
        object.__setattr__(self, "p2", hi)

    @property
    def width(self) -> float:
        return self.p2[0] - self.p1[0]

    @property
    def height(self) -> float:
        return self.p2[1] - self.p1[1]


@dataclass(frozen=True)
class SsimParams:
    """Constants for the structural-similarity index."""

    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0
    window_size: int = 11
    sigma: float = 1.5

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2


@dataclass(frozen=True)
class AsymmetryReport:
    """Per-region symmetry percentages and their arithmetic mean."""

    eyes: float
    cheeks: float
    mouth: float
    mean: float


def _rois_from_points(points: np.ndarray, width, height) -> Dict[Region, RoiRect]:
    rois = {}
    for region, ((xi1, yi1), (xi2, yi2)) in ROI_LANDMARK_PAIRS.items():
        p1 = (points[xi1, 0], points[yi1, 1])
        p2 = (points[xi2, 0], points[yi2, 1])
        rect = RoiRect(region, p1, p2)
        clipped = RoiRect(
            region,
            (min(max(rect.p1[0], 0.0), float(width)), min(max(rect.p1[1], 0.0), float(height))),
            (min(max(rect.p2[0], 0.0), float(width)), min(max(rect.p2[1], 0.0), float(height))),
        )
        if clipped.width <= 0.0 or clipped.height <= 0.0:
            raise DegenerateRoi(f"{region.value} rectangle clips to zero area")
        rois[region] = clipped
    return rois


def extract_rois(l: LandmarkSet) -> Dict[Region, RoiRect]:
    """Six ROI rectangles from the fixed landmark index pairs, clipped to bounds."""
    return _rois_from_points(l.points, l.image_width, l.image_height)


def _gaussian_kernel_1d(size: int, sigma: float) -> np.ndarray:
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    k = np.exp(-(offsets ** 2) / (2.0 * sigma * sigma))
    return k / k.sum()


def _global_ssim(x: np.ndarray, y: np.ndarray, p: SsimParams) -> float:
    mu_x = x.mean()
    mu_y = y.mean()
    var_x = x.var()
    var_y = y.var()
    cov = ((x - mu_x) * (y - mu_y)).mean()
    num = (2.0 * mu_x * mu_y + p.c1) * (2.0 * cov + p.c2)
    den = (mu_x ** 2 + mu_y ** 2 + p.c1) * (var_x + var_y + p.c2)
    return float(num / den)


def ssim(x, y, params: SsimParams = SsimParams()) -> float:
    """Structural similarity of two grayscale images, in [-1, 1].

    Images at least as large as the window use Gaussian-weighted local
    statistics averaged over all fully-covered positions; smaller images
    fall back to one global window (plain means/variances/covariance).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 2:
        raise DimensionMismatch(f"shapes differ: {x.shape} vs {y.shape}")
    win = params.window_size
    h, w = x.shape
    if h < win or w < win:
        return _global_ssim(x, y, params)

    kernel = _gaussian_kernel_1d(win, params.sigma)
    half = win // 2

    def local_mean(img):
        full = correlate1d(correlate1d(img, kernel, axis=0, mode="constant"), kernel, axis=1, mode="constant")
        return full[half:h - half, half:w - half]

    mu_x = local_mean(x)
    mu_y = local_mean(y)
    var_x = local_mean(x * x) - mu_x ** 2
    var_y = local_mean(y * y) - mu_y ** 2
    cov = local_mean(x * y) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + params.c1) * (2.0 * cov + params.c2)
    den = (mu_x ** 2 + mu_y ** 2 + params.c1) * (var_x + var_y + params.c2)
    return float((num / den).mean())


def _resize_gray(img: np.ndarray, width: int, height: int) -> np.ndarray:
    if img.shape == (height, width):
        return img
    pil = Image.fromarray(img.astype(np.float32), mode="F")
    return np.asarray(pil.resize((width, height), Image.Resampling.BILINEAR), dtype=np.float64)


def _crop(gray: np.ndarray, rect: RoiRect) -> np.ndarray:
    """Subpixel ROI extraction: bilinear samples at the cell centers of the rect.

    Integer-grid crops would misalign a mirrored rectangle pair by up to one
    column whenever a boundary falls on a pixel center, which punishes even
    perfectly symmetric faces; sampling at exact fractional positions keeps
    mirrored rectangles bit-for-bit comparable.
    """
    from .geometry import _bilinear_sample

    nx = max(1, int(round(rect.width)))
    ny = max(1, int(round(rect.height)))
    us = rect.p1[0] + (np.arange(nx) + 0.5) * (rect.width / nx)
    vs = rect.p1[1] + (np.arange(ny) + 0.5) * (rect.height / ny)
    xs, ys = np.meshgrid(us, vs)
    samples = _bilinear_sample(gray[:, :, None], xs.ravel(), ys.ravel())
    return samples.reshape(ny, nx)


def asymmetry_report(raster, landmarks: LandmarkSet, params: SsimParams = SsimParams()) -> AsymmetryReport:
    """Left/right symmetry percentages for eyes, cheeks and mouth.

    Pipeline: align the face to the canonical landmark frame, extract the
    six ROIs, mirror each right-side crop, bring each pair to the
    element-wise max dimensions, grayscale, SSIM per pair, scores x100.
    """
    h, w = np.asarray(raster).shape[:2]
    target = TEMPLATE_68 * np.array([w, h], dtype=np.float64)
    transform = estimate_similarity(landmarks.points, target)
    aligned = warp_similarity(np.asarray(raster, dtype=np.float64), transform, w, h)
    aligned_pts = transform.apply(landmarks.points)
    gray = rec601_gray(aligned)
    rois = _rois_from_points(aligned_pts, w, h)

    scores = {}
    for name, left_region, right_region in _REGION_PAIRS:
        left = _crop(gray, rois[left_region])
        right = np.fliplr(_crop(gray, rois[right_region]))
        tw = max(left.shape[1], right.shape[1])
        th = max(left.shape[0], right.shape[0])
        left = _resize_gray(left, tw, th)
        right = _resize_gray(right, tw, th)
        scores[name] = ssim(left, right, params) * 100.0

    mean = (scores["eyes"] + scores["cheeks"] + scores["mouth"]) / 3.0
    return AsymmetryReport(scores["eyes"], scores["cheeks"], scores["mouth"], mean)
