"""68-landmark adapter: emits {"points": [[x, y] x 68]} for the detected face.

Points follow the usual 68-point ordering (jaw 0-16, brows 17-26, nose
27-35, eyes 36-47, mouth 48-67) and are estimated geometrically from the
detected face box using standard frontal-face proportions.
"""

from __future__ import annotations

import sys

import numpy as np

from .common import detect_face_box, run_adapter


def _box_template() -> np.ndarray:
    """68 points in face-box coordinates (u right, v down, both in [0, 1])."""
    pts = np.zeros((68, 2))
    # jaw: half ellipse from left temple down to the chin and back up
    t = np.linspace(0.0, np.pi, 17)
    pts[0:17, 0] = 0.5 - 0.48 * np.cos(t)
    pts[0:17, 1] = 0.52 + 0.46 * np.sin(t)
    bx = np.linspace(0.13, 0.42, 5)
    pts[17:22] = np.stack([bx, np.full(5, 0.33) - 0.02 * np.sin(np.linspace(0, np.pi, 5))], axis=1)
    pts[22:27] = np.stack([1.0 - bx[::-1], pts[17:22, 1][::-1]], axis=1)
    pts[27:31] = [(0.5, 0.38), (0.5, 0.46), (0.5, 0.54), (0.5, 0.62)]
    pts[31:36] = [(0.42, 0.66), (0.46, 0.67), (0.5, 0.68), (0.54, 0.67), (0.58, 0.66)]
    eye = np.array([
        (0.20, 0.44), (0.25, 0.42), (0.31, 0.42),
        (0.36, 0.44), (0.31, 0.46), (0.25, 0.46),
    ])
    pts[36:42] = eye
    mirrored = eye.copy()
    mirrored[:, 0] = 1.0 - mirrored[:, 0]
    pts[42:48] = mirrored[[3, 2, 1, 0, 5, 4]]
    pts[48:60] = [
        (0.33, 0.80), (0.39, 0.78), (0.45, 0.77), (0.50, 0.78),
        (0.55, 0.77), (0.61, 0.78), (0.67, 0.80), (0.61, 0.84),
        (0.55, 0.86), (0.50, 0.86), (0.45, 0.86), (0.39, 0.84),
    ]
    pts[60:68] = [
        (0.37, 0.80), (0.44, 0.79), (0.50, 0.80), (0.56, 0.79),
        (0.63, 0.80), (0.56, 0.82), (0.50, 0.82), (0.44, 0.82),
    ]
    return pts


_TEMPLATE = _box_template()


def landmarks_for(gray: np.ndarray) -> dict:
    h, w = gray.shape
    x0, y0, x1, y1 = detect_face_box(gray)
    scale = np.array([x1 - x0, y1 - y0], dtype=np.float64)
    offset = np.array([x0, y0], dtype=np.float64)
    pts = _TEMPLATE * scale + offset
    pts[:, 0] = pts[:, 0].clip(0.0, w - 1e-3)
    pts[:, 1] = pts[:, 1].clip(0.0, h - 1e-3)
    return {"points": [[float(x), float(y)] for x, y in pts]}


def main() -> None:
    sys.exit(run_adapter(sys.argv, landmarks_for))


if __name__ == "__main__":
    main()
