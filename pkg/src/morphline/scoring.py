"""Fitness layer: forgery confidence, anonymity matching, landmark provisioning.

Each scorer comes in two flavors selected by a ScorerBinding: a deterministic
built-in stub (no models, desk-scale testing) or an external command speaking
a one-shot JSON protocol:

    <command> <absolute-image-path>

The command writes a single JSON object to stdout and exits 0. Schemas:
forgery ``{"real_confidence": <float 0..1>}``, embedding
``{"embedding": [<floats>]}``, landmarks ``{"points": [[x, y] x 68]}``.
Any other exit code, missing key, wrong arity or timeout is AdapterFailure;
a landmark adapter exits 4 to report "no face".
"""

from __future__ import annotations

import enum
import json
import math
import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from PIL import Image

from .errors import AdapterFailure, InvalidThreshold, NoFaceFound
from .geometry import (
    LANDMARK_COUNT,
    TEMPLATE_68,
    LandmarkSet,
    estimate_similarity,
    validate_landmarks,
    warp_similarity,
)

NO_FACE_EXIT_CODE = 4

# Stub forgery calibration: logistic midpoint / scale on the Laplacian
# variance of the grayscale image. Defaults are tuned on the bundled
# synthetic corpus (at its default 128px size) so originals score well above
# 0.5 while repeated cross-dissolves, which roughly halve speckle variance
# per generation near alpha = 0.5, drift below it within a few generations.
DEFAULT_FORGERY_MIDPOINT = 300.0
DEFAULT_FORGERY_SCALE = 80.0

# Face crop used by the stub embedding, as fractions of the aligned frame.
_FACE_CROP = (0.18, 0.26, 0.82, 0.90)
_EMBED_SIZE = 16


class Verdict(enum.Enum):
    REAL = "real"
    FAKE = "fake"


class ScorerKind(enum.Enum):
    BUILTIN_STUB = "stub"
    EXTERNAL_COMMAND = "command"


@dataclass(frozen=True)
class ScorerBinding:
    kind: ScorerKind = ScorerKind.BUILTIN_STUB
    command: Optional[str] = None
    timeout: float = 60.0

    def __post_init__(self):
        if self.kind is ScorerKind.EXTERNAL_COMMAND and not self.command:
            raise ValueError("external scorer binding requires a command")

    @classmethod
    def stub(cls) -> "ScorerBinding":
        return cls(ScorerKind.BUILTIN_STUB)

    @classmethod
    def external(cls, command: str, timeout: float = 60.0) -> "ScorerBinding":
        return cls(ScorerKind.EXTERNAL_COMMAND, command, timeout)


@dataclass(frozen=True)
class ForgeryScore:
    real_confidence: float
    verdict: Verdict
    threshold_used: float


@dataclass(frozen=True)
class AnonymityReport:
    min_distance: float
    matched_id: Optional[str]
    is_unknown: bool
    threshold_used: float


@dataclass(frozen=True)
class EmbeddingGallery:
    """Immutable id -> embedding table, plus the binding that produced it."""

    ids: tuple
    embeddings: np.ndarray  # (N, D) float64
    binding: ScorerBinding

    def __len__(self):
        return len(self.ids)


def rec601_gray(raster) -> np.ndarray:
    """Rec. 601 luma as float64."""
    img = np.asarray(raster, dtype=np.float64)
    if img.ndim == 2:
        return img
    return img[..., 0] * 0.299 + img[..., 1] * 0.587 + img[..., 2] * 0.114


def laplacian_variance(raster) -> float:
    """Variance of the 3x3 Laplacian response on the grayscale image."""
    g = rec601_gray(raster)
    if g.shape[0] < 3 or g.shape[1] < 3:
        return 0.0
    lap = (
        g[:-2, 1:-1] + g[2:, 1:-1] + g[1:-1, :-2] + g[1:-1, 2:]
        - 4.0 * g[1:-1, 1:-1]
    )
    return float(lap.var())


def _run_adapter(binding: ScorerBinding, image_path: str) -> dict:
    argv = shlex.split(binding.command) + [os.path.abspath(image_path)]
    try:
        proc = subprocess.run(
            argv,
            capture_output=True,
            timeout=binding.timeout,
            text=True,
        )
    except subprocess.TimeoutExpired as exc:
        raise AdapterFailure(f"adapter timed out after {binding.timeout}s: {binding.command}") from exc
    except OSError as exc:
        raise AdapterFailure(f"adapter could not be launched: {exc}") from exc
    if proc.returncode == NO_FACE_EXIT_CODE:
        raise NoFaceFound(f"adapter reported no face: {binding.command}")
    if proc.returncode != 0:
        raise AdapterFailure(
            f"adapter exited {proc.returncode}: {binding.command}\n{proc.stderr.strip()}",
            exit_code=proc.returncode,
        )
    try:
        payload = json.loads(proc.stdout)
    except json.JSONDecodeError as exc:
        raise AdapterFailure(f"adapter wrote invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise AdapterFailure("adapter output is not a JSON object")
    return payload


def _with_image_file(raster, image_path, fn):
    """Run fn(path), writing the raster to a temp PNG when no path is given."""
    if image_path is not None:
        return fn(image_path)
    fd, tmp = tempfile.mkstemp(suffix=".png")
    os.close(fd)
    try:
        Image.fromarray(np.ascontiguousarray(np.asarray(raster))).save(tmp, format="PNG")
        return fn(tmp)
    finally:
        os.unlink(tmp)


def _check_threshold(threshold, low, high):
    t = float(threshold)
    if not math.isfinite(t) or not low <= t <= high:
        raise InvalidThreshold(f"threshold {threshold!r} outside [{low}, {high}]")
    return t


def score_forgery(
    raster,
    binding: ScorerBinding,
    threshold: float,
    midpoint: float = DEFAULT_FORGERY_MIDPOINT,
    scale: float = DEFAULT_FORGERY_SCALE,
    image_path: Optional[str] = None,
) -> ForgeryScore:
    """Real/fake confidence for one image; verdict Real iff confidence >= threshold."""
    threshold = _check_threshold(threshold, 0.0, 1.0)
    if binding.kind is ScorerKind.BUILTIN_STUB:
        sharpness = laplacian_variance(raster)
        confidence = 1.0 / (1.0 + math.exp(-(sharpness - midpoint) / scale))
    else:
        payload = _with_image_file(raster, image_path, lambda p: _run_adapter(binding, p))
        if "real_confidence" not in payload:
            raise AdapterFailure("forgery adapter output lacks 'real_confidence'")
        confidence = payload["real_confidence"]
        if not isinstance(confidence, (int, float)) or not 0.0 <= float(confidence) <= 1.0:
            raise AdapterFailure(f"real_confidence out of range: {confidence!r}")
        confidence = float(confidence)
    verdict = Verdict.REAL if confidence >= threshold else Verdict.FAKE
    return ForgeryScore(confidence, verdict, threshold)


def stub_embedding(raster, landmarks: LandmarkSet) -> np.ndarray:
    """16x16 grayscale downsample of the landmark-aligned face crop, L2-normalized."""
    h, w = np.asarray(raster).shape[:2]
    target = TEMPLATE_68 * np.array([w, h], dtype=np.float64)
    transform = estimate_similarity(landmarks.points, target)
    aligned = warp_similarity(rec601_gray(raster), transform, w, h)
    x0 = int(round(_FACE_CROP[0] * w))
    y0 = int(round(_FACE_CROP[1] * h))
    x1 = int(round(_FACE_CROP[2] * w))
    y1 = int(round(_FACE_CROP[3] * h))
    crop = aligned[y0:y1, x0:x1]
    img = Image.fromarray(crop.astype(np.float32), mode="F")
    small = np.asarray(
        img.resize((_EMBED_SIZE, _EMBED_SIZE), Image.Resampling.BILINEAR), dtype=np.float64
    )
    vec = small.ravel()
    norm = float(np.linalg.norm(vec))
    return vec / norm if norm > 0.0 else vec


def _adapter_embedding(binding, raster, image_path) -> np.ndarray:
    payload = _with_image_file(raster, image_path, lambda p: _run_adapter(binding, p))
    if "embedding" not in payload:
        raise AdapterFailure("embedding adapter output lacks 'embedding'")
    vec = payload["embedding"]
    if not isinstance(vec, list) or not vec or not all(isinstance(v, (int, float)) for v in vec):
        raise AdapterFailure("embedding must be a non-empty list of numbers")
    arr = np.asarray(vec, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise AdapterFailure("embedding contains non-finite values")
    return arr


def embed_face(raster, landmarks: LandmarkSet, binding: ScorerBinding, image_path=None) -> np.ndarray:
    if binding.kind is ScorerKind.BUILTIN_STUB:
        return stub_embedding(raster, landmarks)
    return _adapter_embedding(binding, raster, image_path)


def build_gallery(assets, binding: ScorerBinding) -> EmbeddingGallery:
    """One embedding per asset id, in asset order."""
    assets = list(assets)
    if not assets:
        raise ValueError("gallery requires at least one asset")
    vectors: List[np.ndarray] = []
    for asset in assets:
        vectors.append(embed_face(asset.raster, asset.landmarks, binding, asset.source_path))
    dims = {v.shape[0] for v in vectors}
    if len(dims) != 1:
        raise AdapterFailure(f"inconsistent embedding arities in gallery: {sorted(dims)}")
    return EmbeddingGallery(
        ids=tuple(a.id for a in assets),
        embeddings=np.stack(vectors),
        binding=binding,
    )


def check_anonymity(
    raster,
    landmarks: LandmarkSet,
    gallery: EmbeddingGallery,
    threshold: float,
    image_path: Optional[str] = None,
) -> AnonymityReport:
    """Min L2 distance to the gallery; unknown iff the distance exceeds the threshold.

    Distance ties resolve to the lexicographically smallest gallery id.
    """
    threshold = _check_threshold(threshold, 0.0, float(np.finfo(np.float64).max))
    if len(gallery) == 0:
        raise ValueError("gallery is empty")
    probe = embed_face(raster, landmarks, gallery.binding, image_path)
    if probe.shape[0] != gallery.embeddings.shape[1]:
        raise AdapterFailure(
            f"probe embedding arity {probe.shape[0]} does not match gallery "
            f"arity {gallery.embeddings.shape[1]}"
        )
    dists = np.linalg.norm(gallery.embeddings - probe, axis=1)
    min_distance = float(dists.min())
    is_unknown = min_distance > threshold
    matched_id = None
    if not is_unknown:
        tied = [gallery.ids[i] for i in np.nonzero(dists == dists.min())[0]]
        matched_id = min(tied)
    return AnonymityReport(min_distance, matched_id, is_unknown, threshold)


def detect_landmarks(raster, binding: ScorerBinding, image_path: Optional[str] = None) -> LandmarkSet:
    """68 landmarks for an image: template stub, or parsed from an adapter."""
    h, w = np.asarray(raster).shape[:2]
    if binding.kind is ScorerKind.BUILTIN_STUB:
        pts = TEMPLATE_68 * np.array([w, h], dtype=np.float64)
        return LandmarkSet(pts, w, h)
    payload = _with_image_file(raster, image_path, lambda p: _run_adapter(binding, p))
    if "points" not in payload:
        raise AdapterFailure("landmark adapter output lacks 'points'")
    pts = payload["points"]
    if not isinstance(pts, list) or len(pts) != LANDMARK_COUNT:
        raise AdapterFailure(f"landmark adapter must return exactly {LANDMARK_COUNT} points")
    try:
        arr = np.asarray(pts, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise AdapterFailure(f"landmark points are not numeric pairs: {exc}") from exc
    if arr.shape != (LANDMARK_COUNT, 2):
        raise AdapterFailure("landmark points must be [x, y] pairs")
    result = LandmarkSet(arr, w, h)
    if not validate_landmarks(result):
        raise AdapterFailure("landmark adapter returned out-of-bounds or non-finite points")
    return result
