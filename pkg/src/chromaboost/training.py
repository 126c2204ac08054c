"""Training and fine-tuning of the enhancement model on U-plane patches.

A run is fully determined by (config, seed, data): weight init, batch
shuffles and every update are driven by one deterministic generator, so
repeated runs write byte-identical checkpoints.  Models are trained on the
U plane only; the same checkpoint is applied unchanged to V at inference.
"""

import logging
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .blocks import ModelConfig, ModelParams, model_forward
from .checkpoint import CheckpointError, load_params, save_arrays, save_params
from .dataset import Dataset, build_dataset
from .optim import AdamState, adam_step
from .rng import Rng
from .tensor import LEAKY_SLOPE, NumericError, Tensor, backward, l1_loss

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """Hyperparameters and paths for one training or fine-tuning run."""

    degraded_dir: str
    original_dir: str
    width: int
    height: int
    out_checkpoint: str
    qp_label: int = 37
    batch_size: int = 32
    epochs: int = 40
    base_lr: float = 1e-4
    decay_factor: float = 0.1
    decay_epoch: int = 20
    seed: int = 0
    channels: int = 64
    leaky_slope: float = LEAKY_SLOPE
    use_luma_guidance: bool = True
    init_checkpoint: str | None = None

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            channels=self.channels,
            leaky_slope=self.leaky_slope,
            use_luma_guidance=self.use_luma_guidance,
        )

    def lr_at(self, epoch: int) -> float:
        """Single step decay: base through decay_epoch, scaled afterwards."""
        return self.base_lr if epoch <= self.decay_epoch else self.base_lr * self.decay_factor


def best_checkpoint_path(out_checkpoint: str | Path) -> Path:
    return Path(str(out_checkpoint) + ".best")


def eval_loss(params: ModelParams, dataset: Dataset, batch_size: int = 32) -> float:
    """Mean L1 over a dataset (sample-weighted, no parameter updates)."""
    total = 0.0
    n = len(dataset)
    for start in range(0, n, batch_size):
        sl = slice(start, min(start + batch_size, n))
        pred = model_forward(
            Tensor(dataset.degraded_chroma[sl]),
            Tensor(dataset.degraded_luma[sl]),
            params,
        )
        loss = l1_loss(pred, Tensor(dataset.original_chroma[sl]))
        total += float(loss.data) * (sl.stop - sl.start)
    return total / n


def _init_params(cfg: TrainConfig, rng: Rng) -> ModelParams:
    if cfg.init_checkpoint is None:
        return ModelParams.init(cfg.model_config(), rng)
    params = load_params(
        cfg.init_checkpoint,
        leaky_slope=cfg.leaky_slope,
        use_luma_guidance=cfg.use_luma_guidance,
    )
    if params.config.channels != cfg.channels:
        raise CheckpointError(
            f"{cfg.init_checkpoint}: checkpoint width {params.config.channels} "
            f"!= configured width {cfg.channels}")
    return params


def train(cfg: TrainConfig) -> Path:
    """Run the configured number of epochs and write final/best checkpoints.

    Returns the final checkpoint path; the best-epoch weights (lowest mean
    training loss) are written next to it with a ``.best`` suffix.
    """
    dataset = build_dataset(cfg.degraded_dir, cfg.original_dir, cfg.width, cfg.height, plane="u")
    rng = Rng(cfg.seed)
    params = _init_params(cfg, rng)
    tensors = params.parameters()
    state = AdamState.for_params(tensors)
    n = len(dataset)
    if cfg.batch_size <= 0:
        raise ValueError("batch_size must be positive")
    batches_per_epoch = n // cfg.batch_size
    if cfg.epochs > 0 and batches_per_epoch == 0:
        raise ValueError(
            f"dataset has {n} patches, fewer than one batch of {cfg.batch_size}")

    best_loss = float("inf")
    best_blobs: list[np.ndarray] | None = None
    log.info("training: %d patches, %d batches/epoch, %d epochs, qp label %d",
             n, batches_per_epoch, cfg.epochs, cfg.qp_label)
    for epoch in range(1, cfg.epochs + 1):
        lr = cfg.lr_at(epoch)
        perm = rng.permutation(n)
        epoch_loss = 0.0
        t0 = time.monotonic()
        for b in range(batches_per_epoch):
            idx = perm[b * cfg.batch_size:(b + 1) * cfg.batch_size]
            pred = model_forward(
                Tensor(dataset.degraded_chroma[idx]),
                Tensor(dataset.degraded_luma[idx]),
                params,
            )
            loss = l1_loss(pred, Tensor(dataset.original_chroma[idx]))
            loss_val = float(loss.data)
            if not np.isfinite(loss_val):
                raise NumericError(
                    f"non-finite loss {loss_val} at epoch {epoch} batch {b} "
                    f"(lr {lr}, seed {cfg.seed})")
            for t in tensors:
                t.zero_grad()
            backward(loss)
            grads = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in tensors]
            adam_step(tensors, grads, state, lr)
            epoch_loss += loss_val
        epoch_loss /= batches_per_epoch
        log.info("epoch %3d  lr %.2e  loss %.6f  (%.1fs)",
                 epoch, lr, epoch_loss, time.monotonic() - t0)
        if epoch_loss < best_loss:
            best_loss = epoch_loss
            best_blobs = [t.data.copy() for t in tensors]

    out = Path(cfg.out_checkpoint)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_params(params, out)
    names = [n for n, _ in params.named_tensors()]
    if best_blobs is not None:
        save_arrays(list(zip(names, best_blobs)), best_checkpoint_path(out))
    else:  # zero epochs: best == final
        save_params(params, best_checkpoint_path(out))
    return out


def finetune(base_checkpoint: str | Path, cfg: TrainConfig) -> Path:
    """Same loop as ``train`` but always initialized from ``base_checkpoint``."""
    return train(replace(cfg, init_checkpoint=str(base_checkpoint)))
