"""Patch dataset assembly from paired degraded/original YUV directories."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .yuvio import extract_patches, frame_count, read_yuv420

log = logging.getLogger(__name__)

PIXEL_SCALE = 255.0  # byte planes map to [0, 1] network inputs


@dataclass
class Dataset:
    """Stacked float32 patch tensors in [0, 1], one row per patch pair."""

    degraded_chroma: np.ndarray  # (n, 1, 32, 32)
    original_chroma: np.ndarray  # (n, 1, 32, 32)
    degraded_luma: np.ndarray  # (n, 1, 64, 64)

    def __len__(self) -> int:
        return self.degraded_chroma.shape[0]


def build_dataset(
    degraded_dir: str | Path,
    original_dir: str | Path,
    width: int,
    height: int,
    plane: str = "u",
) -> Dataset:
    """Pair .yuv files by name, tile every frame, stack the patches.

    Files are visited in sorted name order and frames in file order, so the
    dataset layout is reproducible.  Unpaired files or an empty directory
    are errors.
    """
    degraded_dir = Path(degraded_dir)
    original_dir = Path(original_dir)
    deg_names = sorted(p.name for p in degraded_dir.glob("*.yuv"))
    org_names = sorted(p.name for p in original_dir.glob("*.yuv"))
    if not deg_names:
        raise ValueError(f"no .yuv files in {degraded_dir}")
    if deg_names != org_names:
        only_deg = sorted(set(deg_names) - set(org_names))
        only_org = sorted(set(org_names) - set(deg_names))
        raise ValueError(
            f"unpaired files between {degraded_dir} and {original_dir}: "
            f"degraded-only {only_deg}, original-only {only_org}")

    deg_c, org_c, deg_l = [], [], []
    for name in deg_names:
        deg_path = degraded_dir / name
        org_path = original_dir / name
        frames = frame_count(deg_path, width, height)
        if frames != frame_count(org_path, width, height):
            raise ValueError(f"{name}: frame count differs between directories")
        for idx in range(frames):
            degraded = read_yuv420(deg_path, width, height, idx)
            original = read_yuv420(org_path, width, height, idx)
            for pair in extract_patches(degraded, original, plane):
                deg_c.append(pair.degraded_chroma)
                org_c.append(pair.original_chroma)
                deg_l.append(pair.degraded_luma)
    if not deg_c:
        raise ValueError(
            f"no full 32x32 chroma tiles in {width}x{height} frames "
            f"(chroma planes are {width // 2}x{height // 2})")
    log.info("dataset: %d patch pairs from %d files", len(deg_c), len(deg_names))

    def stack(planes: list[np.ndarray]) -> np.ndarray:
        arr = np.stack(planes).astype(np.float32) / PIXEL_SCALE
        return arr[:, None, :, :]

    return Dataset(
        degraded_chroma=stack(deg_c),
        original_chroma=stack(org_c),
        degraded_luma=stack(deg_l),
    )
