"""Planar I420 (.yuv) and binary PPM file handling plus patch extraction.

I420 frames are stored as all Y rows, then the half-size U plane, then the
half-size V plane, 8 bits per sample, with no header; dimensions travel
out-of-band.  Multi-frame files are simple concatenations.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

CHROMA_PATCH = 32
LUMA_PATCH = 64


@dataclass
class YuvImage:
    """One 4:2:0 frame: full-size Y plane, half-size U and V planes."""

    width: int
    height: int
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0 or self.width % 2 or self.height % 2:
            raise ValueError(f"frame dims must be positive and even, got {self.width}x{self.height}")
        self.y = np.asarray(self.y, dtype=np.uint8)
        self.u = np.asarray(self.u, dtype=np.uint8)
        self.v = np.asarray(self.v, dtype=np.uint8)
        if self.y.shape != (self.height, self.width):
            raise ValueError(f"Y plane shape {self.y.shape} != {(self.height, self.width)}")
        half = (self.height // 2, self.width // 2)
        if self.u.shape != half or self.v.shape != half:
            raise ValueError(f"chroma plane shapes {self.u.shape}/{self.v.shape} != {half}")

    def plane(self, name: str) -> np.ndarray:
        try:
            return {"y": self.y, "u": self.u, "v": self.v}[name.lower()]
        except KeyError:
            raise ValueError(f"unknown plane {name!r}")


def frame_bytes(width: int, height: int) -> int:
    return width * height * 3 // 2


def frame_count(path: str | Path, width: int, height: int) -> int:
    size = Path(path).stat().st_size
    per = frame_bytes(width, height)
    if size % per:
        raise ValueError(f"{path}: size {size} is not a multiple of frame size {per}")
    return size // per


def read_yuv420(path: str | Path, width: int, height: int, frame_index: int = 0) -> YuvImage:
    """Read one I420 frame; raises on truncated files or odd dims."""
    if width % 2 or height % 2:
        raise ValueError(f"dims must be even, got {width}x{height}")
    per = frame_bytes(width, height)
    offset = frame_index * per
    with open(path, "rb") as fh:
        fh.seek(offset)
        raw = fh.read(per)
    if len(raw) != per:
        raise ValueError(
            f"{path}: truncated (frame {frame_index} needs bytes "
            f"[{offset}, {offset + per}), file has fewer)")
    ysize = width * height
    csize = ysize // 4
    buf = np.frombuffer(raw, dtype=np.uint8)
    return YuvImage(
        width=width,
        height=height,
        y=buf[:ysize].reshape(height, width),
        u=buf[ysize:ysize + csize].reshape(height // 2, width // 2),
        v=buf[ysize + csize:].reshape(height // 2, width // 2),
    )


def write_yuv420(img: YuvImage, path: str | Path, append: bool = False) -> None:
    mode = "ab" if append else "wb"
    with open(path, mode) as fh:
        fh.write(img.y.tobytes())
        fh.write(img.u.tobytes())
        fh.write(img.v.tobytes())


def read_ppm(path: str | Path) -> np.ndarray:
    """Binary PPM (P6, maxval 255) -> H x W x 3 uint8 array."""
    blob = Path(path).read_bytes()
    if blob[:2] != b"P6":
        raise ValueError(f"{path}: not a binary PPM (P6) file")
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        if blob[pos:pos + 1] == b"#":  # comment runs to end of line
            while pos < len(blob) and blob[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(blob[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 supported, got {maxval}")
    data = np.frombuffer(blob, dtype=np.uint8, count=width * height * 3, offset=pos)
    if data.size != width * height * 3:
        raise ValueError(f"{path}: truncated pixel data")
    return data.reshape(height, width, 3).copy()


def write_ppm(rgb: np.ndarray, path: str | Path) -> None:
    rgb = np.asarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected H x W x 3 array, got shape {rgb.shape}")
    header = f"P6\n{rgb.shape[1]} {rgb.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + rgb.tobytes())


@dataclass
class PatchPair:
    """Co-located training patches: chroma tile plus 2x-size luma tile."""

    degraded_chroma: np.ndarray  # 32x32 uint8
    original_chroma: np.ndarray  # 32x32 uint8
    degraded_luma: np.ndarray  # 64x64 uint8
    plane: str  # "u" or "v"
    chroma_origin: tuple[int, int]  # (row, col) in the chroma plane


def extract_patches(degraded: YuvImage, original: YuvImage, plane: str) -> list[PatchPair]:
    """Non-overlapping 32x32 chroma tiles in raster order, partial tiles dropped.

    Each tile is paired with the degraded 64x64 luma tile whose top-left
    corner sits at twice the chroma coordinates.
    """
    if plane.lower() not in ("u", "v"):
        raise ValueError(f"patches come from chroma planes, got {plane!r}")
    if (degraded.width, degraded.height) != (original.width, original.height):
        raise ValueError(
            f"frame size mismatch: {degraded.width}x{degraded.height} vs "
            f"{original.width}x{original.height}")
    deg_c = degraded.plane(plane)
    org_c = original.plane(plane)
    luma = degraded.y
    ch, cw = deg_c.shape
    pairs = []
    for row in range(0, ch - CHROMA_PATCH + 1, CHROMA_PATCH):
        for col in range(0, cw - CHROMA_PATCH + 1, CHROMA_PATCH):
            lr, lc = 2 * row, 2 * col
            pairs.append(PatchPair(
                degraded_chroma=deg_c[row:row + CHROMA_PATCH, col:col + CHROMA_PATCH].copy(),
                original_chroma=org_c[row:row + CHROMA_PATCH, col:col + CHROMA_PATCH].copy(),
                degraded_luma=luma[lr:lr + LUMA_PATCH, lc:lc + LUMA_PATCH].copy(),
                plane=plane.lower(),
                chroma_origin=(row, col),
            ))
    return pairs
