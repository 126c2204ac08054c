"""RGB <-> YUV plane math and 4:2:0 chroma resampling.

Conversion uses the BT.709-style matrix with offsets (16, 128, 128).  Full
range RGB can leave [0, 255] after conversion (white maps to Y = 271), so
byte quantization clamps first and then rounds half-up.  Chroma planes are
downsampled with a 2x2 box average and upsampled by nearest-neighbour
replication.
"""

import numpy as np

RGB_TO_YUV = np.array(
    [
        [0.2126, 0.7152, 0.0722],
        [-0.1146, -0.3854, 0.5000],
        [0.5000, -0.4542, -0.0458],
    ],
    dtype=np.float64,
)
YUV_OFFSET = np.array([16.0, 128.0, 128.0], dtype=np.float64)
YUV_TO_RGB = np.linalg.inv(RGB_TO_YUV)


def quantize_plane(plane: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255], round half-up, return uint8."""
    clipped = np.clip(np.asarray(plane, dtype=np.float64), 0.0, 255.0)
    return np.floor(clipped + 0.5).clip(0, 255).astype(np.uint8)


def rgb_to_yuv444(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """H x W x 3 byte image -> real-valued (Y, U, V) planes (unclamped)."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected H x W x 3 RGB array, got shape {rgb.shape}")
    flat = rgb.reshape(-1, 3).astype(np.float64)
    yuv = flat @ RGB_TO_YUV.T + YUV_OFFSET
    planes = yuv.reshape(rgb.shape).transpose(2, 0, 1)
    return planes[0], planes[1], planes[2]


def yuv444_to_rgb(y: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Full-resolution planes -> H x W x 3 byte image (clamped, half-up)."""
    y, u, v = (np.asarray(p, dtype=np.float64) for p in (y, u, v))
    if not (y.shape == u.shape == v.shape):
        raise ValueError("Y, U and V planes must share a shape")
    yuv = np.stack([y, u, v], axis=-1).reshape(-1, 3) - YUV_OFFSET
    rgb = yuv @ YUV_TO_RGB.T
    return quantize_plane(rgb.reshape(y.shape + (3,)))


def _box_down2(plane: np.ndarray) -> np.ndarray:
    plane = np.asarray(plane, dtype=np.float64)
    h, w = plane.shape
    if h % 2 or w % 2:
        raise ValueError(f"plane dims must be even, got {h}x{w}")
    mean = plane.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))
    return quantize_plane(mean)


def _replicate_up2(plane: np.ndarray) -> np.ndarray:
    plane = np.asarray(plane)
    return plane.repeat(2, axis=0).repeat(2, axis=1)


def subsample_420(u444: np.ndarray, v444: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Half-size chroma planes via 2x2 box average (round half-up)."""
    return _box_down2(u444), _box_down2(v444)


def upsample_420(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full-size chroma planes via nearest-neighbour 2x replication."""
    return _replicate_up2(u), _replicate_up2(v)
