"""Network blocks: gated recursive chroma branch, luma feature branch, fusion.

The model restores a degraded half-resolution chroma plane with guidance
from the co-located full-resolution luma plane:

* chroma path: entry conv, then a stack of recursive units that share one
  set of weights and differ only in a learnable gate scalar, then a 3x3
  fusion conv;
* luma path: four feature blocks (four ReLU convs whose outputs are
  summed), then a stride-2 conv to match the chroma resolution;
* the two paths are added elementwise and a six-conv reconstruction head
  plus a global residual skip produces the output plane.

Each recursive unit runs one "shallow" multi-branch unit followed by three
"deep" ones (weights shared among the three) with skip connections, a post
conv, and a gated residual onto its input.  A multi-branch unit combines a
1x1 conv, 1x1 -> 3x3, 1x1 -> 3x3 average pool, and a direct 3x3 conv, then
applies leaky ReLU to the sum.
"""

from dataclasses import dataclass

import numpy as np

from .rng import Rng
from .tensor import LEAKY_SLOPE, Tensor, add, avg_pool3, conv2d, leaky_relu, relu, scale


@dataclass
class ModelConfig:
    """Architecture knobs; the checkpoint stores shapes, not this object."""

    channels: int = 64
    num_recursions: int = 6
    num_luma_blocks: int = 4
    head_depth: int = 6
    leaky_slope: float = LEAKY_SLOPE
    use_luma_guidance: bool = True  # off = chroma-only ablation


@dataclass
class ConvLayer:
    weight: Tensor
    bias: Tensor

    @classmethod
    def init(cls, cout: int, cin: int, k: int, rng: Rng) -> "ConvLayer":
        # Zero-mean Gaussian, variance 1/(3*fan_in); zero biases.  A plain
        # sqrt(2/fan_in) He std makes the four-branch units amplify roughly
        # 4x in power per application, which compounds to ~1e8 over six
        # recursions; the smaller variance keeps the initial forward pass
        # near the identity.
        std = float(np.sqrt(1.0 / (3.0 * cin * k * k)))
        w = rng.normal((cout, cin, k, k), std=std).astype(np.float32)
        return cls(
            weight=Tensor(w, requires_grad=True),
            bias=Tensor(np.zeros(cout, dtype=np.float32), requires_grad=True),
        )

    def named(self, prefix: str) -> list[tuple[str, Tensor]]:
        return [(f"{prefix}.weight", self.weight), (f"{prefix}.bias", self.bias)]


@dataclass
class BranchUnitParams:
    """Three 1x1 convs and two 3x3 convs, all C -> C."""

    conv1x1: list[ConvLayer]  # branch 1, pre-3x3, pre-pool
    conv3x3: list[ConvLayer]  # after 1x1 branch, direct branch

    @classmethod
    def init(cls, channels: int, rng: Rng) -> "BranchUnitParams":
        return cls(
            conv1x1=[ConvLayer.init(channels, channels, 1, rng) for _ in range(3)],
            conv3x3=[ConvLayer.init(channels, channels, 3, rng) for _ in range(2)],
        )

    def named(self, prefix: str) -> list[tuple[str, Tensor]]:
        out = []
        for i, layer in enumerate(self.conv1x1, 1):
            out += layer.named(f"{prefix}.conv1x1_{i}")
        for i, layer in enumerate(self.conv3x3, 1):
            out += layer.named(f"{prefix}.conv3x3_{i}")
        return out


@dataclass
class RecursiveUnitParams:
    """One shallow + one deep branch unit and the post conv, shared by all
    recursions (the three deep applications inside a unit also share
    ``deep``)."""

    shallow: BranchUnitParams
    deep: BranchUnitParams
    post: ConvLayer  # 3x3, C -> C

    @classmethod
    def init(cls, channels: int, rng: Rng) -> "RecursiveUnitParams":
        return cls(
            shallow=BranchUnitParams.init(channels, rng),
            deep=BranchUnitParams.init(channels, rng),
            post=ConvLayer.init(channels, channels, 3, rng),
        )

    def named(self, prefix: str) -> list[tuple[str, Tensor]]:
        return (
            self.shallow.named(f"{prefix}.shallow")
            + self.deep.named(f"{prefix}.deep")
            + self.post.named(f"{prefix}.post")
        )


@dataclass
class GatedRecursiveParams:
    """Entry conv, shared recursive unit, one gate scalar per recursion."""

    entry: ConvLayer  # 3x3, 1 -> C
    unit: RecursiveUnitParams
    gates: list[Tensor]

    @classmethod
    def init(cls, channels: int, num_recursions: int, rng: Rng) -> "GatedRecursiveParams":
        return cls(
            entry=ConvLayer.init(channels, 1, 3, rng),
            unit=RecursiveUnitParams.init(channels, rng),
            gates=[
                Tensor(np.ones(1, dtype=np.float32), requires_grad=True)
                for _ in range(num_recursions)
            ],
        )

    def named(self, prefix: str) -> list[tuple[str, Tensor]]:
        out = self.entry.named(f"{prefix}.entry") + self.unit.named(f"{prefix}.unit")
        out += [(f"{prefix}.gate_{i}", g) for i, g in enumerate(self.gates, 1)]
        return out


@dataclass
class FeatureBlockParams:
    """Four 3x3 stride-1 conv layers, each followed by ReLU."""

    convs: list[ConvLayer]

    @classmethod
    def init(cls, channels: int, cin: int, rng: Rng) -> "FeatureBlockParams":
        layers = [ConvLayer.init(channels, cin, 3, rng)]
        layers += [ConvLayer.init(channels, channels, 3, rng) for _ in range(3)]
        return cls(convs=layers)

    def named(self, prefix: str) -> list[tuple[str, Tensor]]:
        out = []
        for i, layer in enumerate(self.convs, 1):
            out += layer.named(f"{prefix}.conv_{i}")
        return out


@dataclass
class ModelParams:
    config: ModelConfig
    chroma: GatedRecursiveParams
    fuse: ConvLayer  # 3x3, C -> C, after the recursive stack
    luma_blocks: list[FeatureBlockParams]
    luma_down: ConvLayer  # 3x3 stride 2, C -> C
    head: list[ConvLayer]  # head_depth-1 convs C -> C with leaky ReLU, final C -> 1

    @classmethod
    def init(cls, config: ModelConfig, rng: Rng) -> "ModelParams":
        c = config.channels
        chroma = GatedRecursiveParams.init(c, config.num_recursions, rng)
        fuse = ConvLayer.init(c, c, 3, rng)
        luma_blocks = [FeatureBlockParams.init(c, 1, rng)]
        luma_blocks += [
            FeatureBlockParams.init(c, c, rng) for _ in range(config.num_luma_blocks - 1)
        ]
        luma_down = ConvLayer.init(c, c, 3, rng)
        head = [ConvLayer.init(c, c, 3, rng) for _ in range(config.head_depth - 1)]
        head.append(ConvLayer.init(1, c, 3, rng))
        return cls(config, chroma, fuse, luma_blocks, luma_down, head)

    @classmethod
    def zeros(cls, config: ModelConfig) -> "ModelParams":
        params = cls.init(config, Rng(0))
        for _, t in params.named_tensors():
            t.data = np.zeros_like(t.data)
        return params

    def named_tensors(self) -> list[tuple[str, Tensor]]:
        """Canonical (name, tensor) order; shared weights appear once."""
        out = self.chroma.named("chroma")
        out += self.fuse.named("fuse")
        for i, block in enumerate(self.luma_blocks, 1):
            out += block.named(f"luma_block_{i}")
        out += self.luma_down.named("luma_down")
        for i, layer in enumerate(self.head, 1):
            out += layer.named(f"head.conv_{i}")
        return out

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_tensors()]


# ---------------------------------------------------------------------------
# forward passes


def branch_unit_forward(x: Tensor, p: BranchUnitParams, slope: float = LEAKY_SLOPE) -> Tensor:
    """Sum of the four conv branches, then leaky ReLU; shape preserved."""
    p1, p2, p3 = p.conv1x1
    q1, q2 = p.conv3x3
    b1 = conv2d(x, p1.weight, p1.bias, stride=1, padding=0)
    b2 = conv2d(conv2d(x, p2.weight, p2.bias, stride=1, padding=0),
                q1.weight, q1.bias, stride=1, padding=1)
    b3 = avg_pool3(conv2d(x, p3.weight, p3.bias, stride=1, padding=0))
    b4 = conv2d(x, q2.weight, q2.bias, stride=1, padding=1)
    return leaky_relu(add(add(b1, b2), add(b3, b4)), slope)


def recursive_unit_forward(
    y_prev: Tensor, p: RecursiveUnitParams, gate: Tensor, slope: float = LEAKY_SLOPE
) -> Tensor:
    """gate * post(deep(deep(deep(shallow(y)) + shallow(y)) + shallow(y))) + y."""
    a1 = branch_unit_forward(y_prev, p.shallow, slope)
    a2 = branch_unit_forward(a1, p.deep, slope)
    a3 = branch_unit_forward(add(a2, a1), p.deep, slope)
    a4 = branch_unit_forward(add(a3, a1), p.deep, slope)
    residual = conv2d(a4, p.post.weight, p.post.bias, stride=1, padding=1)
    return add(scale(residual, gate), y_prev)


def gated_recursive_forward(
    chroma: Tensor, p: GatedRecursiveParams, slope: float = LEAKY_SLOPE
) -> Tensor:
    """Entry conv, then every gated recursion of the shared unit."""
    if chroma.data.ndim != 4 or chroma.data.shape[1] != 1:
        raise ValueError(f"expected N x 1 x h x w chroma input, got {chroma.data.shape}")
    y = conv2d(chroma, p.entry.weight, p.entry.bias, stride=1, padding=1)
    for gate in p.gates:
        y = recursive_unit_forward(y, p.unit, gate, slope)
    return y


def feature_block_forward(x: Tensor, p: FeatureBlockParams) -> Tensor:
    """Sum of all four ReLU conv outputs (the input itself is not summed)."""
    total = None
    g = x
    for layer in p.convs:
        g = relu(conv2d(g, layer.weight, layer.bias, stride=1, padding=1))
        total = g if total is None else add(total, g)
    return total


def luma_branch(luma: Tensor, p: ModelParams) -> Tensor:
    """Chained feature blocks, then a stride-2 conv to half resolution."""
    if luma.data.ndim != 4 or luma.data.shape[1] != 1:
        raise ValueError(f"expected N x 1 x H x W luma input, got {luma.data.shape}")
    if luma.data.shape[2] % 2 or luma.data.shape[3] % 2:
        raise ValueError(f"luma spatial dims must be even, got {luma.data.shape[2:]}")
    g = luma
    for block in p.luma_blocks:
        g = feature_block_forward(g, block)
    return conv2d(g, p.luma_down.weight, p.luma_down.bias, stride=2, padding=1)


def model_forward(chroma: Tensor, luma: Tensor, p: ModelParams) -> Tensor:
    """Full restoration pass; returns a plane shaped like ``chroma``."""
    n, _, h, w = chroma.data.shape
    if luma.data.shape != (n, 1, 2 * h, 2 * w):
        raise ValueError(
            f"luma shape {luma.data.shape} must be twice chroma {chroma.data.shape}")
    slope = p.config.leaky_slope
    inter = gated_recursive_forward(chroma, p.chroma, slope)
    fused = conv2d(inter, p.fuse.weight, p.fuse.bias, stride=1, padding=1)
    if p.config.use_luma_guidance:
        fused = add(fused, luma_branch(luma, p))
    out = fused
    for layer in p.head[:-1]:
        out = leaky_relu(conv2d(out, layer.weight, layer.bias, stride=1, padding=1), slope)
    last = p.head[-1]
    out = conv2d(out, last.weight, last.bias, stride=1, padding=1)
    return add(out, chroma)


def param_count(p: ModelParams) -> list[tuple[str, int]]:
    """Per-block trainable scalar counts plus a total row."""
    blocks: dict[str, int] = {}
    for name, t in p.named_tensors():
        block = name.split(".")[0]
        blocks[block] = blocks.get(block, 0) + t.data.size
    rows = list(blocks.items())
    rows.append(("total", sum(blocks.values())))
    return rows
