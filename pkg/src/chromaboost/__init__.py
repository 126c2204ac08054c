"""Luminance-guided chrominance enhancement for compressed YUV 4:2:0 images."""

from .blocks import (
    BranchUnitParams,
    FeatureBlockParams,
    GatedRecursiveParams,
    ModelConfig,
    ModelParams,
    RecursiveUnitParams,
    branch_unit_forward,
    feature_block_forward,
    gated_recursive_forward,
    luma_branch,
    model_forward,
    param_count,
    recursive_unit_forward,
)
from .checkpoint import CheckpointError, load_arrays, load_params, save_params
from .color import rgb_to_yuv444, subsample_420, upsample_420, yuv444_to_rgb
from .dataset import Dataset, build_dataset
from .degrade import synth_degrade
from .enhance import enhance_frame, enhance_plane
from .metrics import EvalReport, EvalRow, RdPoint, bd_psnr, bd_rate, delta_psnr, psnr
from .optim import Adam, AdamState, adam_step
from .rng import Rng
from .tensor import (
    LEAKY_SLOPE,
    NumericError,
    Tensor,
    add,
    avg_pool3,
    backward,
    conv2d,
    l1_loss,
    leaky_relu,
    relu,
    scale,
)
from .training import TrainConfig, eval_loss, finetune, train
from .yuvio import PatchPair, YuvImage, extract_patches, read_yuv420, write_yuv420

__version__ = "0.1.0"
