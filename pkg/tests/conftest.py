import numpy as np
import pytest

from chromaboost.rng import Rng
from chromaboost.yuvio import YuvImage


def textured_plane(rng: Rng, w: int, h: int) -> np.ndarray:
    """Band-limited random texture: realistic enough to make blur costly."""
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    plane = np.zeros((h, w))
    for _ in range(6):
        freq = rng.uniform(2) * 0.2
        phase = float(rng.uniform(1)[0]) * 2.0 * np.pi
        amp = float(rng.uniform(1)[0]) * 40.0 + 10.0
        plane += amp * np.cos(2.0 * np.pi * (freq[0] * xx + freq[1] * yy) + phase)
    plane = 128.0 + plane - plane.mean()
    return np.clip(plane, 0, 255).astype(np.uint8)


def textured_image(rng: Rng, width: int, height: int) -> YuvImage:
    return YuvImage(
        width=width,
        height=height,
        y=textured_plane(rng, width, height),
        u=textured_plane(rng, width // 2, height // 2),
        v=textured_plane(rng, width // 2, height // 2),
    )


@pytest.fixture
def rng():
    return Rng(20240817)


@pytest.fixture
def image_96(rng):
    return textured_image(rng, 96, 96)
