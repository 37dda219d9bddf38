"""Alpha-parameterized face merge: warp both parents to the blended shape, cross-dissolve.

Alpha is the fraction of the drugged face: alpha=1 reproduces the drug
parent exactly, alpha=0 the healthy parent.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from PIL import Image

from .errors import DimensionMismatch
from .geometry import (
    LandmarkSet,
    TriangleMesh,
    boundary_anchors,
    round_half_up_u8,
    triangulate,
    validate_landmarks,
    warp_image_float,
)


class Pool(enum.Enum):
    DRUG_ORIGINAL = "drug_original"
    HEALTHY_GAN = "healthy_gan"
    GENERATED = "generated"


class OpType(enum.Enum):
    CROSSOVER = "crossover"
    MUTATION = "mutation"


@dataclass(frozen=True)
class MorphSpec:
    """Fusion coefficient for one merge.

    Quantized specs carry the exact tenths integer so 0.1-grid values never
    drift through float round-trips.
    """

    alpha: float
    tenths: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.tenths is not None:
            if not 0 <= self.tenths <= 10:
                raise ValueError(f"tenths must lie in [0, 10], got {self.tenths}")
            if self.alpha != self.tenths / 10.0:
                raise ValueError("alpha does not match its tenths value")

    @classmethod
    def from_tenths(cls, tenths: int) -> "MorphSpec":
        tenths = int(tenths)
        return cls(alpha=tenths / 10.0, tenths=tenths)

    @property
    def quantized(self) -> bool:
        return self.tenths is not None


@dataclass(frozen=True)
class Lineage:
    """Parent record of a generated asset."""

    drug_id: str
    healthy_id: str
    alpha: float
    op_type: OpType
    alpha_tenths: Optional[int] = None


@dataclass
class FaceAsset:
    """An image raster plus its landmarks and lineage; the GA chromosome."""

    id: str
    raster: np.ndarray  # (H, W, 3) uint8
    landmarks: LandmarkSet
    pool: Pool
    generation: int = 0
    parents: Optional[Lineage] = None
    forgery: object = None     # ForgeryScore, filled by the engine
    anonymity: object = None   # AnonymityReport, filled by the engine
    attempt_index: Optional[int] = None
    source_path: Optional[str] = None

    def __post_init__(self):
        if self.pool is Pool.GENERATED and self.parents is None:
            raise ValueError("generated assets must carry parents")
        if self.pool is not Pool.GENERATED and self.parents is not None:
            raise ValueError("original assets must not carry parents")
        if self.pool is not Pool.GENERATED and self.generation != 0:
            raise ValueError("original assets live in generation 0")

    @property
    def width(self) -> int:
        return self.raster.shape[1]

    @property
    def height(self) -> int:
        return self.raster.shape[0]


def resize_raster(raster: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resize via Pillow; no-op when dimensions already match."""
    h, w = raster.shape[:2]
    if (w, h) == (width, height):
        return raster
    img = Image.fromarray(np.ascontiguousarray(raster))
    return np.asarray(img.resize((width, height), Image.Resampling.BILINEAR))


def _parent_mesh(mesh: TriangleMesh, landmarks: np.ndarray, width, height) -> TriangleMesh:
    vertices = np.vstack([landmarks, boundary_anchors(width, height)])
    return mesh.with_vertices(vertices)


def face_merge(
    drug: FaceAsset,
    healthy: FaceAsset,
    spec: MorphSpec,
    child_id: Optional[str] = None,
    op_type: OpType = OpType.CROSSOVER,
    allow_resize: bool = True,
) -> FaceAsset:
    """Merge two faces at the given alpha.

    The intermediate landmark set is the pointwise blend
    alpha*drug + (1-alpha)*healthy; both images are warped onto it through a
    shared-topology piecewise-affine warp and cross-dissolved with the same
    alpha, rounded half-up to 8 bits at the very end.
    """
    if not validate_landmarks(drug.landmarks) or not validate_landmarks(healthy.landmarks):
        raise ValueError("both parents must carry valid landmarks")
    h_raster, h_landmarks = healthy.raster, healthy.landmarks
    if (healthy.width, healthy.height) != (drug.width, drug.height):
        if not allow_resize:
            raise DimensionMismatch(
                f"{drug.id} is {drug.width}x{drug.height} but {healthy.id} "
                f"is {healthy.width}x{healthy.height}"
            )
        h_raster = resize_raster(h_raster, drug.width, drug.height)
        h_landmarks = h_landmarks.scaled(drug.width, drug.height)

    alpha = spec.alpha
    w, h = drug.width, drug.height
    blended = alpha * drug.landmarks.points + (1.0 - alpha) * h_landmarks.points
    mesh = triangulate(blended, w, h)
    drug_mesh = _parent_mesh(mesh, drug.landmarks.points, w, h)
    healthy_mesh = _parent_mesh(mesh, h_landmarks.points, w, h)

    # endpoint alphas carry zero weight for one parent; skipping its warp is exact
    if alpha == 1.0:
        raster = round_half_up_u8(warp_image_float(drug.raster, drug_mesh, mesh))
    elif alpha == 0.0:
        raster = round_half_up_u8(warp_image_float(h_raster, healthy_mesh, mesh))
    else:
        warped_drug = warp_image_float(drug.raster, drug_mesh, mesh)
        warped_healthy = warp_image_float(h_raster, healthy_mesh, mesh)
        raster = round_half_up_u8(alpha * warped_drug + (1.0 - alpha) * warped_healthy)

    if child_id is None:
        tag = spec.tenths if spec.quantized else f"{alpha:.3f}"
        child_id = f"{drug.id}+{healthy.id}@a{tag}"
    lineage = Lineage(
        drug_id=drug.id,
        healthy_id=healthy.id,
        alpha=alpha,
        op_type=op_type,
        alpha_tenths=spec.tenths,
    )
    return FaceAsset(
        id=child_id,
        raster=raster,
        landmarks=LandmarkSet(blended, w, h),
        pool=Pool.GENERATED,
        generation=max(drug.generation, healthy.generation) + 1,
        parents=lineage,
    )
