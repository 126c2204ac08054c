"""Whole-frame enhancement by tiling chroma planes through the model.

Chroma planes are cut into the 32x32 tiles the model was trained on, each
with its co-located 64x64 luma tile; edge tiles are replicate-padded to
full size and cropped back after inference.  The luma plane passes through
untouched.
"""

import numpy as np

from .blocks import ModelParams, model_forward
from .dataset import PIXEL_SCALE
from .color import quantize_plane
from .tensor import Tensor
from .yuvio import CHROMA_PATCH, YuvImage

TILE_BATCH = 64  # tiles per forward pass; caps activation memory


def _pad_to_multiple(plane: np.ndarray, multiple: int) -> np.ndarray:
    h, w = plane.shape
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph == 0 and pw == 0:
        return plane
    return np.pad(plane, ((0, ph), (0, pw)), mode="edge")


def enhance_plane(
    chroma: np.ndarray, luma: np.ndarray, params: ModelParams, tile_batch: int = TILE_BATCH
) -> np.ndarray:
    """Run one chroma plane (with its 2x-size luma plane) through the model."""
    ch, cw = chroma.shape
    if luma.shape != (2 * ch, 2 * cw):
        raise ValueError(f"luma shape {luma.shape} must be twice chroma {chroma.shape}")
    t = CHROMA_PATCH
    cpad = _pad_to_multiple(chroma, t)
    lpad = _pad_to_multiple(luma, 2 * t)
    rows, cols = cpad.shape[0] // t, cpad.shape[1] // t

    ctiles = (
        cpad.reshape(rows, t, cols, t).transpose(0, 2, 1, 3).reshape(rows * cols, 1, t, t)
    )
    ltiles = (
        lpad.reshape(rows, 2 * t, cols, 2 * t)
        .transpose(0, 2, 1, 3)
        .reshape(rows * cols, 1, 2 * t, 2 * t)
    )

    outs = []
    for start in range(0, rows * cols, tile_batch):
        sl = slice(start, min(start + tile_batch, rows * cols))
        pred = model_forward(
            Tensor(ctiles[sl].astype(np.float32) / PIXEL_SCALE),
            Tensor(ltiles[sl].astype(np.float32) / PIXEL_SCALE),
            params,
        )
        outs.append(pred.data[:, 0] * PIXEL_SCALE)
    merged = np.concatenate(outs)
    full = merged.reshape(rows, cols, t, t).transpose(0, 2, 1, 3).reshape(cpad.shape)
    return quantize_plane(full[:ch, :cw])


def enhance_frame(
    img: YuvImage, params: ModelParams, planes: tuple[str, ...] = ("u", "v")
) -> YuvImage:
    """Enhance the selected chroma planes; Y is copied through unchanged."""
    new = {"u": img.u, "v": img.v}
    for plane in planes:
        if plane not in new:
            raise ValueError(f"enhanceable planes are 'u' and 'v', got {plane!r}")
        new[plane] = enhance_plane(img.plane(plane), img.y, params)
    return YuvImage(width=img.width, height=img.height, y=img.y.copy(),
                    u=new["u"], v=new["v"])
