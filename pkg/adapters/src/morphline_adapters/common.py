"""Shared plumbing: image loading, face detection, exit-code discipline."""

from __future__ import annotations

import json
import sys

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NO_FACE = 4

# face-region sanity limits, as fractions of the frame
MIN_AREA_FRACTION = 0.04
MIN_WIDTH_FRACTION = 0.15
ASPECT_RANGE = (0.6, 2.4)


class NoFace(Exception):
    pass


def load_gray(path: str) -> np.ndarray:
    with Image.open(path) as img:
        rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
    return rgb[..., 0] * 0.299 + rgb[..., 1] * 0.587 + rgb[..., 2] * 0.114


def _otsu_threshold(gray: np.ndarray) -> float:
    hist, edges = np.histogram(gray, bins=64, range=(0.0, 255.0))
    centers = (edges[:-1] + edges[1:]) / 2.0
    total = hist.sum()
    best_t, best_var = 128.0, -1.0
    w0 = 0.0
    sum0 = 0.0
    sum_all = float((hist * centers).sum())
    for i in range(63):
        w0 += hist[i]
        if w0 == 0:
            continue
        w1 = total - w0
        if w1 == 0:
            break
        sum0 += hist[i] * centers[i]
        mu0 = sum0 / w0
        mu1 = (sum_all - sum0) / w1
        var = w0 * w1 * (mu0 - mu1) ** 2
        if var > best_var:
            best_var = var
            best_t = centers[i]
    return best_t


def detect_face_box(gray: np.ndarray):
    """Bounding box (x0, y0, x1, y1) of the dominant bright blob, or NoFace.

    A frontal face against a darker background segments cleanly with a
    global threshold; the largest connected component is taken and sanity
    checked for size and aspect ratio.
    """
    h, w = gray.shape
    if float(gray.std()) < 2.0:
        raise NoFace("image is flat")
    smooth = ndimage.uniform_filter(gray, size=max(3, min(h, w) // 32))
    mask = smooth > _otsu_threshold(smooth)
    labels, count = ndimage.label(mask)
    if count == 0:
        raise NoFace("no foreground component")
    sizes = ndimage.sum_labels(np.ones_like(gray), labels, index=np.arange(1, count + 1))
    best = int(np.argmax(sizes)) + 1
    if sizes[best - 1] < MIN_AREA_FRACTION * h * w:
        raise NoFace("largest component too small")
    ys, xs = np.nonzero(labels == best)
    x0, x1 = int(xs.min()), int(xs.max()) + 1
    y0, y1 = int(ys.min()), int(ys.max()) + 1
    bw, bh = x1 - x0, y1 - y0
    if bw < MIN_WIDTH_FRACTION * w:
        raise NoFace("component too narrow")
    aspect = bh / bw
    if not ASPECT_RANGE[0] <= aspect <= ASPECT_RANGE[1]:
        raise NoFace(f"aspect ratio {aspect:.2f} not face-like")
    return x0, y0, x1, y1


def run_adapter(argv, compute) -> int:
    """Protocol shell: one path argument in, one JSON object out.

    compute(gray) returns the payload dict or raises NoFace. Any output is
    written only on success so failure paths keep stdout empty.
    """
    if len(argv) != 2:
        print("usage: adapter <image-path>", file=sys.stderr)
        return EXIT_INPUT
    try:
        gray = load_gray(argv[1])
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        print(f"cannot read image: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        payload = compute(gray)
    except NoFace as exc:
        print(f"no face: {exc}", file=sys.stderr)
        return EXIT_NO_FACE
    json.dump(payload, sys.stdout)
    sys.stdout.write("\n")
    return EXIT_OK
