"""Embedding adapter: emits {"embedding": [128 floats]} for the detected face.

The vector is a 16x8 grayscale thumbnail of the face crop, zero-meaned and
L2-normalized: crude but stable, and the arity matches what common face
embedding networks produce.
"""

from __future__ import annotations

import sys

import numpy as np
from PIL import Image

from .common import detect_face_box, run_adapter

EMBED_SHAPE = (16, 8)  # rows x cols = 128 values


def embedding_for(gray: np.ndarray) -> dict:
    x0, y0, x1, y1 = detect_face_box(gray)
    crop = gray[y0:y1, x0:x1]
    img = Image.fromarray(crop.astype(np.float32), mode="F")
    small = np.asarray(
        img.resize((EMBED_SHAPE[1], EMBED_SHAPE[0]), Image.Resampling.BILINEAR),
        dtype=np.float64,
    )
    vec = small.ravel()
    vec = vec - vec.mean()
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec = vec / norm
    return {"embedding": [float(v) for v in vec]}


def main() -> None:
    sys.exit(run_adapter(sys.argv, embedding_for))


if __name__ == "__main__":
    main()
