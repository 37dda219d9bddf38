"""Procedural synthetic-face corpus with exact landmark sidecars.

Faces are parameterized deformations of the canonical 68-point template;
every feature is drawn at its landmark position, so the sidecar coordinates
are exact by construction. Per-identity speckle noise gives the images the
high-frequency texture the sharpness-based forgery stub keys on.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

import numpy as np
from PIL import Image, ImageDraw

from .fusion import FaceAsset, Pool
from .geometry import FLIP_INDEX_MAP, TEMPLATE_68, LandmarkSet

DEFAULT_CORPUS_SIZE = 128


@dataclass(frozen=True)
class FaceParams:
    """Identity parameters in template [0,1] space plus appearance."""

    face_scale: Tuple[float, float]
    eye_scale: float
    brow_dy: float
    mouth_scale: float
    mouth_dy: float
    nose_dy: float
    jitter: np.ndarray  # (68, 2), asymmetric per-point offsets
    skin: Tuple[int, int, int]
    lips: Tuple[int, int, int]
    iris: int
    background: int
    noise_sigma: float
    noise_seed: int


def sample_params(rng: np.random.Generator) -> FaceParams:
    r = int(rng.integers(168, 216))
    skin = (r, int(r * rng.uniform(0.74, 0.82)), int(r * rng.uniform(0.58, 0.68)))
    lips = (int(rng.integers(150, 190)), int(rng.integers(70, 96)), int(rng.integers(75, 96)))
    jitter = rng.normal(0.0, 0.0025, size=(68, 2)).clip(-0.006, 0.006)
    return FaceParams(
        face_scale=(float(rng.uniform(0.92, 1.06)), float(rng.uniform(0.94, 1.06))),
        eye_scale=float(rng.uniform(0.85, 1.20)),
        brow_dy=float(rng.uniform(-0.015, 0.015)),
        mouth_scale=float(rng.uniform(0.85, 1.15)),
        mouth_dy=float(rng.uniform(-0.02, 0.025)),
        nose_dy=float(rng.uniform(-0.01, 0.015)),
        jitter=jitter,
        skin=skin,
        lips=lips,
        iris=int(rng.integers(40, 110)),
        background=int(rng.integers(25, 70)),
        noise_sigma=float(rng.uniform(3.0, 12.0)),
        noise_seed=int(rng.integers(0, 2 ** 31)),
    )


def _scale_group(pts: np.ndarray, idx, factor: float) -> None:
    center = pts[idx].mean(axis=0)
    pts[idx] = center + (pts[idx] - center) * factor


def build_landmarks(params: FaceParams) -> np.ndarray:
    """Deformed template landmarks in [0,1] space."""
    pts = TEMPLATE_68.copy()
    _scale_group(pts, slice(36, 42), params.eye_scale)
    _scale_group(pts, slice(42, 48), params.eye_scale)
    pts[17:27, 1] += params.brow_dy
    _scale_group(pts, slice(48, 68), params.mouth_scale)
    pts[48:68, 1] += params.mouth_dy
    pts[27:36, 1] += params.nose_dy
    center = np.array([0.5, 0.5])
    pts = center + (pts - center) * np.asarray(params.face_scale)
    pts = pts + params.jitter
    return pts.clip(0.03, 0.97)


def _forehead_arc(pts_px: np.ndarray, n: int = 15) -> List[Tuple[float, float]]:
    left, right = pts_px[0], pts_px[16]
    cx, cy = (left[0] + right[0]) / 2.0, (left[1] + right[1]) / 2.0
    a = (right[0] - left[0]) / 2.0
    brow_y = pts_px[17:27, 1].min()
    b = max(cy - brow_y, 1.0) * 1.9
    ts = np.linspace(0.0, np.pi, n + 2)[1:-1]
    return [(cx + a * float(np.cos(t)), cy - b * float(np.sin(t))) for t in ts]


def render_face(params: FaceParams, size: int = DEFAULT_CORPUS_SIZE) -> Tuple[np.ndarray, LandmarkSet]:
    """Rasterize one identity; returns (RGB uint8, exact landmarks)."""
    pts = build_landmarks(params) * size
    img = Image.new("RGB", (size, size))
    draw = ImageDraw.Draw(img)

    bg = params.background
    draw.rectangle([0, 0, size, size], fill=(bg, bg, int(bg * 1.2)))

    face_outline = [tuple(p) for p in pts[0:17]] + _forehead_arc(pts)
    draw.polygon(face_outline, fill=params.skin)

    brow_color = (70, 50, 40)
    width = max(1, size // 48)
    draw.line([tuple(p) for p in pts[17:22]], fill=brow_color, width=width)
    draw.line([tuple(p) for p in pts[22:27]], fill=brow_color, width=width)

    nose_shade = tuple(int(c * 0.88) for c in params.skin)
    draw.line([tuple(p) for p in pts[27:31]], fill=nose_shade, width=max(1, size // 64))
    draw.polygon([tuple(p) for p in pts[31:36]], fill=nose_shade)

    for eye in (pts[36:42], pts[42:48]):
        draw.polygon([tuple(p) for p in eye], fill=(235, 235, 235))
        cx, cy = eye.mean(axis=0)
        r = max(1.2, (eye[:, 1].max() - eye[:, 1].min()) * 0.55)
        g = params.iris
        draw.ellipse([cx - r, cy - r, cx + r, cy + r], fill=(g, g, g))
        pr = max(0.8, r * 0.45)
        draw.ellipse([cx - pr, cy - pr, cx + pr, cy + pr], fill=(15, 15, 15))

    draw.polygon([tuple(p) for p in pts[48:60]], fill=params.lips)
    inner = tuple(int(c * 0.6) for c in params.lips)
    draw.polygon([tuple(p) for p in pts[60:68]], fill=inner)

    raster = np.asarray(img, dtype=np.float64)
    # lighting ramp plus per-identity speckle texture
    ramp = np.linspace(1.05, 0.93, size)[:, None, None]
    raster = raster * ramp
    noise_rng = np.random.Generator(np.random.PCG64(params.noise_seed))
    raster = raster + noise_rng.normal(0.0, params.noise_sigma, size=(size, size, 1))
    raster = np.clip(np.floor(raster + 0.5), 0, 255).astype(np.uint8)
    return raster, LandmarkSet(pts, size, size)


def make_face(seed: int, index: int, size: int = DEFAULT_CORPUS_SIZE) -> Tuple[np.ndarray, LandmarkSet]:
    """Deterministic identity (seed, index) rendered at the given size."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))
    return render_face(sample_params(rng), size)


def make_symmetric_face(size: int = DEFAULT_CORPUS_SIZE, noise: bool = False) -> Tuple[np.ndarray, LandmarkSet]:
    """Exactly left-right symmetric face for asymmetry-metric fixtures.

    The raster is symmetrized about the (size-1)/2 pixel axis and the
    landmarks are mirror-averaged with their reindexed reflection. Speckle
    is off by default: symmetric noise would still decorrelate under the
    unequal cheek-crop stretch and drag SSIM down.
    """
    params = FaceParams(
        face_scale=(1.0, 1.0),
        eye_scale=1.0,
        brow_dy=0.0,
        mouth_scale=1.0,
        mouth_dy=0.0,
        nose_dy=0.0,
        jitter=np.zeros((68, 2)),
        skin=(196, 154, 124),
        lips=(168, 84, 86),
        iris=70,
        background=45,
        noise_sigma=3.0 if noise else 0.0,
        noise_seed=7,
    )
    raster, landmarks = render_face(params, size)
    flipped = raster[:, ::-1]
    sym = ((raster.astype(np.int32) + flipped.astype(np.int32) + 1) // 2).astype(np.uint8)
    pts = landmarks.points
    mirrored = pts[FLIP_INDEX_MAP].copy()
    mirrored[:, 0] = (size - 1) - mirrored[:, 0]
    sym_pts = ((pts + mirrored) / 2.0).clip(0.0, size - 1e-6)
    return sym, LandmarkSet(sym_pts, size, size)


def make_assets(seed: int, count: int, size: int = DEFAULT_CORPUS_SIZE, pool: Pool = Pool.DRUG_ORIGINAL,
                prefix: str = "face") -> List[FaceAsset]:
    """In-memory corpus, no files involved."""
    assets = []
    for i in range(count):
        raster, landmarks = make_face(seed, i, size)
        assets.append(
            FaceAsset(id=f"{prefix}_{i:03d}", raster=raster, landmarks=landmarks, pool=pool)
        )
    return assets


def write_corpus(out_dir, count: int, seed: int, size: int = DEFAULT_CORPUS_SIZE) -> List[Path]:
    """Write count faces plus exact sidecars; same seed gives identical bytes."""
    from .dataset_io import save_image, write_sidecar  # local import, avoids a cycle

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        raster, landmarks = make_face(seed, i, size)
        name = f"face_{i:03d}.png"
        save_image(out / name, raster)
        write_sidecar(out / f"face_{i:03d}.landmarks.json", name, landmarks)
        paths.append(out / name)
    return paths
