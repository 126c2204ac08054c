"""Synthetic degradation used to build self-contained fixtures.

Stands in for an external codec: real training pairs come from actual
encoder output, but tests need reproducible degraded/original pairs
without an encoder.  Severity s in 1..4 applies a Gaussian blur of sigma
0.5*s to all three planes plus sigma-2 Gaussian noise to the chroma
planes, then clamps back to bytes.
"""

import numpy as np

from .color import quantize_plane
from .rng import Rng
from .yuvio import YuvImage

BLUR_SIGMA = {1: 0.5, 2: 1.0, 3: 1.5, 4: 2.0}
CHROMA_NOISE_SIGMA = 2.0


def gaussian_blur(plane: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur (3-sigma kernel, edge-replicated borders)."""
    out = np.asarray(plane, dtype=np.float64)
    if sigma <= 0:
        return out
    radius = int(np.ceil(3.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    kernel /= kernel.sum()
    for axis in (0, 1):
        pad = [(0, 0), (0, 0)]
        pad[axis] = (radius, radius)
        padded = np.pad(out, pad, mode="edge")
        acc = np.zeros_like(out)
        for i, w in enumerate(kernel):
            if axis == 0:
                acc += w * padded[i:i + out.shape[0], :]
            else:
                acc += w * padded[:, i:i + out.shape[1]]
        out = acc
    return out


def degrade_planes(
    img: YuvImage, blur_sigma: float, noise_sigma: float, seed: int
) -> YuvImage:
    """Blur all planes, add seeded Gaussian noise to chroma, quantize.

    Noise is drawn U plane first, then V, from ``Rng(seed)``; identical
    (input, parameters, seed) yields byte-identical output.
    """
    rng = Rng(seed)
    y = gaussian_blur(img.y, blur_sigma)
    u = gaussian_blur(img.u, blur_sigma)
    v = gaussian_blur(img.v, blur_sigma)
    if noise_sigma > 0:
        u = u + rng.normal(u.shape, std=noise_sigma)
        v = v + rng.normal(v.shape, std=noise_sigma)
    return YuvImage(
        width=img.width,
        height=img.height,
        y=quantize_plane(y),
        u=quantize_plane(u),
        v=quantize_plane(v),
    )


def synth_degrade(img: YuvImage, severity: int, seed: int) -> YuvImage:
    """Severity-graded degradation; higher severity strictly hurts PSNR."""
    if severity not in BLUR_SIGMA:
        raise ValueError(f"severity must be in 1..4, got {severity}")
    return degrade_planes(img, BLUR_SIGMA[severity], CHROMA_NOISE_SIGMA, seed)
