"""Binary checkpoint format for model weights.

Layout (all integers little-endian u32, all reals little-endian float32)::

    "CBW1" | version | record*
    record = name_len | name (UTF-8) | rank | extents[rank] | values[prod(extents)]

Weights shared between recursions are stored exactly once under their
canonical names (see ``ModelParams.named_tensors``).
"""

import struct
from pathlib import Path

import numpy as np

from .blocks import ModelConfig, ModelParams
from .rng import Rng
from .tensor import LEAKY_SLOPE

MAGIC = b"CBW1"
VERSION = 1


class CheckpointError(ValueError):
    """Malformed, truncated, or incompatible checkpoint file."""


def save_arrays(named: list[tuple[str, np.ndarray]], path: str | Path) -> None:
    """Write (name, array) records in the given order."""
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    for name, arr in named:
        raw = name.encode("utf-8")
        arr = np.asarray(arr, dtype="<f4")
        chunks.append(struct.pack("<I", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def save_params(params: ModelParams, path: str | Path) -> None:
    save_arrays([(n, t.data) for n, t in params.named_tensors()], path)


def load_arrays(path: str | Path) -> dict[str, np.ndarray]:
    """Read all records into an ordered name -> float32 array mapping."""
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {blob[:4]!r}")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    out: dict[str, np.ndarray] = {}
    pos = 8
    end = len(blob)
    while pos < end:
        try:
            (name_len,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            name = blob[pos:pos + name_len].decode("utf-8")
            if len(blob[pos:pos + name_len]) != name_len:
                raise struct.error("short name")
            pos += name_len
            (rank,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            extents = struct.unpack_from(f"<{rank}I", blob, pos)
            pos += 4 * rank
            count = int(np.prod(extents)) if rank else 1
            data = np.frombuffer(blob, dtype="<f4", count=count, offset=pos)
            if data.size != count:
                raise struct.error("short data")
            pos += 4 * count
        except struct.error as exc:
            raise CheckpointError(f"{path}: truncated checkpoint ({exc})") from exc
        if name in out:
            raise CheckpointError(f"{path}: duplicate record {name!r}")
        out[name] = data.reshape(extents).astype(np.float32)
    return out


def load_params(
    path: str | Path,
    leaky_slope: float = LEAKY_SLOPE,
    use_luma_guidance: bool = True,
) -> ModelParams:
    """Rebuild ``ModelParams`` from a checkpoint.

    The architecture (channel width, recursion count, block counts) is
    inferred from record names and shapes; the two runtime-only settings
    are taken from the arguments.
    """
    arrays = load_arrays(path)
    try:
        channels = arrays["chroma.entry.weight"].shape[0]
    except KeyError:
        raise CheckpointError(f"{path}: missing chroma.entry.weight record")
    config = ModelConfig(
        channels=int(channels),
        num_recursions=sum(1 for n in arrays if n.startswith("chroma.gate_")),
        num_luma_blocks=len({n.split(".")[0] for n in arrays if n.startswith("luma_block_")}),
        head_depth=sum(1 for n in arrays if n.startswith("head.conv_") and n.endswith(".weight")),
        leaky_slope=leaky_slope,
        use_luma_guidance=use_luma_guidance,
    )
    params = ModelParams.init(config, Rng(0))
    expected = dict(params.named_tensors())
    if set(expected) != set(arrays):
        missing = sorted(set(expected) - set(arrays))
        extra = sorted(set(arrays) - set(expected))
        raise CheckpointError(f"{path}: record mismatch (missing {missing}, extra {extra})")
    for name, tensor in expected.items():
        arr = arrays[name]
        if arr.shape != tensor.data.shape:
            raise CheckpointError(
                f"{path}: {name} has shape {arr.shape}, expected {tensor.data.shape}")
        tensor.data = arr.copy()
    return params


