"""Forgery adapter: emits {"real_confidence": p} for an image.

Confidence comes from the high-frequency share of the spectral energy.
Repeated cross-dissolves and resampling wash out fine detail, so heavily
fused images lose high-frequency mass relative to camera-like or freshly
rendered ones. The squashing constants were fitted on the synthetic corpus
so originals land well above 0.5 and deep-generation fusions below it.
"""

from __future__ import annotations

import math
import sys

import numpy as np

from .common import run_adapter

# logistic calibration on the high-frequency energy share: synthetic-corpus
# originals sit near 0.05-0.15, first-generation fusions near 0.03-0.04 and
# deeper generations below 0.025
HF_MIDPOINT = 0.035
HF_SCALE = 0.008
# frequencies below this fraction of Nyquist count as "low"
LOW_FREQ_CUTOFF = 0.25


def high_frequency_share(gray: np.ndarray) -> float:
    spectrum = np.abs(np.fft.fft2(gray - gray.mean())) ** 2
    total = float(spectrum.sum())
    if total <= 0.0:
        return 0.0
    h, w = gray.shape
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    low = (np.abs(fy) < LOW_FREQ_CUTOFF / 2) & (np.abs(fx) < LOW_FREQ_CUTOFF / 2)
    return float(spectrum[~low].sum() / total)


def forgery_for(gray: np.ndarray) -> dict:
    share = high_frequency_share(gray)
    confidence = 1.0 / (1.0 + math.exp(-(share - HF_MIDPOINT) / HF_SCALE))
    return {"real_confidence": float(confidence)}


def main() -> None:
    sys.exit(run_adapter(sys.argv, forgery_for))


if __name__ == "__main__":
    main()
