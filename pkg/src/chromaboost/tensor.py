"""Dense float32 tensors with reverse-mode automatic differentiation.

The operator set is exactly what the enhancement network needs: 2-D
convolution (1x1 or 3x3 kernels, stride 1 or 2), 3x3 average pooling,
ReLU / leaky ReLU, elementwise addition, scalar gating, and mean absolute
error.  Activations use N x C x H x W layout; convolution weights use
Cout x Cin x Kh x Kw.

All storage and matrix arithmetic is float32 (loss reduction in float64);
the window sizes here are small enough that float32 accumulation stays
orders of magnitude inside the gradient-check tolerance.  Every op
validates that its output is finite; NaN or Inf raises
:class:`NumericError`.

Gradients accumulate across :func:`backward` calls until cleared with
``Tensor.zero_grad``.
"""

import numpy as np

LEAKY_SLOPE = 0.1  # network-wide leaky-ReLU slope


class NumericError(ArithmeticError):
    """A forward or backward pass produced a non-finite value."""


def _check_finite(arr: np.ndarray, what: str) -> None:
    if not np.isfinite(arr).all():
        raise NumericError(f"non-finite values in {what}")


class Tensor:
    """N-D float32 array, optionally tracked by the autodiff graph.

    ``grad`` is lazily allocated and always matches ``data``'s shape.
    Tensors produced by ops hold references to their parents and a
    backward closure; leaf tensors hold neither.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float32)
        _check_finite(self.data, "tensor constructor")
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._backward_fn = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, g: np.ndarray) -> None:
        g = np.asarray(g, dtype=np.float32)
        if g.shape != self.data.shape:
            raise ValueError(f"gradient shape {g.shape} != data shape {self.data.shape}")
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad += g

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _from_op(data: np.ndarray, parents: tuple, backward_fn, what: str) -> Tensor:
    out = Tensor.__new__(Tensor)
    data = np.asarray(data, dtype=np.float32)
    if data.ndim and not data.flags.c_contiguous:
        data = np.ascontiguousarray(data)  # keeps 0-d losses 0-d
    out.data = data
    _check_finite(out.data, what)
    out.grad = None
    out.requires_grad = any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = parents
        out._backward_fn = backward_fn
    else:
        out._parents = ()
        out._backward_fn = None
    return out


def zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape, dtype=np.float32))


def ones(shape) -> Tensor:
    return Tensor(np.ones(shape, dtype=np.float32))


# ---------------------------------------------------------------------------
# convolution and pooling


def _pad_nchw(x: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return x
    n, c, h, w = x.shape
    xp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=x.dtype)
    xp[:, :, pad:pad + h, pad:pad + w] = x
    return xp


def _build_cols(xp: np.ndarray, k: int, stride: int, ho: int, wo: int, dtype) -> np.ndarray:
    """Patch matrix (C*k*k, N*Ho*Wo) of a padded input, rows in (c, ki, kj)
    order to match a (Cout, Cin*k*k) weight flattening."""
    n, c = xp.shape[:2]
    cols = np.empty((c, k, k, n, ho, wo), dtype=dtype)
    for ki in range(k):
        for kj in range(k):
            xs = xp[:, :, ki:ki + stride * (ho - 1) + 1:stride,
                    kj:kj + stride * (wo - 1) + 1:stride]
            cols[:, ki, kj] = xs.transpose(1, 0, 2, 3)
    return cols.reshape(c * k * k, n * ho * wo)


def conv2d(x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """2-D cross-correlation of NCHW input with Cout x Cin x K x K weights.

    Output spatial size is floor((H + 2*padding - K) / stride) + 1.  Only
    the kernel/stride combinations the network uses are accepted.
    """
    if x.data.ndim != 4 or weight.data.ndim != 4:
        raise ValueError("conv2d expects 4-D input and weight")
    n, cin, h, w = x.data.shape
    cout, cin_w, kh, kw = weight.data.shape
    if kh != kw or kh not in (1, 3):
        raise ValueError(f"unsupported kernel size {kh}x{kw}")
    if stride not in (1, 2):
        raise ValueError(f"unsupported stride {stride}")
    if padding < 0:
        raise ValueError("padding must be non-negative")
    if cin != cin_w:
        raise ValueError(f"input channels {cin} != weight channels {cin_w}")
    if bias.data.shape != (cout,):
        raise ValueError(f"bias shape {bias.data.shape} != ({cout},)")
    if stride == 2 and (h % 2 or w % 2):
        raise ValueError(f"stride-2 conv needs even spatial dims, got {h}x{w}")
    k = kh
    ho = (h + 2 * padding - k) // stride + 1
    wo = (w + 2 * padding - k) // stride + 1
    if ho <= 0 or wo <= 0:
        raise ValueError("empty conv output")

    cols = _build_cols(_pad_nchw(x.data, padding), k, stride, ho, wo)
    wflat = weight.data.reshape(cout, cin * k * k)
    out = wflat @ cols
    out += bias.data[:, None]
    out = out.reshape(cout, n, ho, wo).transpose(1, 0, 2, 3)

    def backward_fn(g: np.ndarray):
        gflat = g.transpose(1, 0, 2, 3).reshape(cout, n * ho * wo)
        gx = gw = gb = None
        if weight.requires_grad:
            # im2col is rebuilt rather than cached: the graph then only pins
            # the input itself, not a per-op patch matrix.
            cols_b = _build_cols(_pad_nchw(x.data, padding), k, stride, ho, wo)
            gw = (gflat @ cols_b.T).reshape(cout, cin, k, k)
        if bias.requires_grad:
            gb = g.sum(axis=(0, 2, 3))
        if x.requires_grad:
            dcols = (wflat.T @ gflat).reshape(cin, k, k, n, ho, wo)
            dxp = np.zeros((n, cin, h + 2 * padding, w + 2 * padding), dtype=np.float32)
            for ki in range(k):
                for kj in range(k):
                    dxp[:, :, ki:ki + stride * (ho - 1) + 1:stride,
                        kj:kj + stride * (wo - 1) + 1:stride] += \
                        dcols[:, ki, kj].transpose(1, 0, 2, 3)
            gx = dxp[:, :, padding:padding + h, padding:padding + w]
        return gx, gw, gb

    return _from_op(out, (x, weight, bias), backward_fn, "conv2d output")


def avg_pool3(x: Tensor) -> Tensor:
    """3x3 mean pool, stride 1, zero padding 1, fixed divisor 9."""
    if x.data.ndim != 4:
        raise ValueError("avg_pool3 expects a 4-D input")
    n, c, h, w = x.data.shape
    xp = _pad_nchw(x.data, 1)
    acc = np.zeros((n, c, h, w), dtype=np.float32)
    for i in range(3):
        for j in range(3):
            acc += xp[:, :, i:i + h, j:j + w]
    out = acc * np.float32(1.0 / 9.0)

    def backward_fn(g: np.ndarray):
        if not x.requires_grad:
            return (None,)
        g9 = g * np.float32(1.0 / 9.0)
        dxp = np.zeros((n, c, h + 2, w + 2), dtype=np.float32)
        for i in range(3):
            for j in range(3):
                dxp[:, :, i:i + h, j:j + w] += g9
        return (dxp[:, :, 1:1 + h, 1:1 + w],)

    return _from_op(out, (x,), backward_fn, "avg_pool3 output")


# ---------------------------------------------------------------------------
# elementwise ops


def leaky_relu(x: Tensor, slope: float = LEAKY_SLOPE) -> Tensor:
    """max(x, slope*x); the subgradient at 0 is 1 (positive side)."""
    if not 0.0 < slope < 1.0:
        raise ValueError(f"slope must be in (0, 1), got {slope}")
    out = np.where(x.data < 0, np.float32(slope) * x.data, x.data)

    def backward_fn(g: np.ndarray):
        return (np.where(x.data < 0, np.float32(slope), np.float32(1.0)) * g,)

    return _from_op(out, (x,), backward_fn, "leaky_relu output")


def relu(x: Tensor) -> Tensor:
    """max(x, 0); the subgradient at 0 is 1 (positive side)."""
    out = np.maximum(x.data, 0)

    def backward_fn(g: np.ndarray):
        return (np.where(x.data < 0, np.float32(0.0), np.float32(1.0)) * g,)

    return _from_op(out, (x,), backward_fn, "relu output")


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum of identically shaped tensors (no broadcasting)."""
    if a.data.shape != b.data.shape:
        raise ValueError(f"add shape mismatch: {a.data.shape} vs {b.data.shape}")

    def backward_fn(g: np.ndarray):
        return (g if a.requires_grad else None, g if b.requires_grad else None)

    return _from_op(a.data + b.data, (a, b), backward_fn, "add output")


def scale(x: Tensor, beta: Tensor) -> Tensor:
    """Gate a tensor by a learnable one-element scalar."""
    if beta.data.size != 1:
        raise ValueError(f"gate parameter must have one element, got shape {beta.data.shape}")
    b = np.float32(beta.data.reshape(()))  # copy: the gate may be updated in place later

    def backward_fn(g: np.ndarray):
        gx = b * g if x.requires_grad else None
        gb = None
        if beta.requires_grad:
            gb = np.array(
                np.sum(g.astype(np.float64) * x.data.astype(np.float64)),
                dtype=np.float32).reshape(beta.data.shape)
        return gx, gb

    return _from_op(b * x.data, (x, beta), backward_fn, "scale output")


def l1_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean absolute difference as a scalar tensor; subgradient at 0 is 0."""
    if pred.data.shape != target.data.shape:
        raise ValueError(f"l1_loss shape mismatch: {pred.data.shape} vs {target.data.shape}")
    if target.requires_grad:
        raise ValueError("l1_loss target must not require gradients")
    diff = pred.data.astype(np.float64) - target.data.astype(np.float64)
    out = np.float32(np.mean(np.abs(diff)))

    def backward_fn(g: np.ndarray):
        if not pred.requires_grad:
            return (None, None)
        gp = (np.sign(diff) / diff.size) * np.float64(g)
        return gp, None

    return _from_op(out, (pred, target), backward_fn, "l1_loss output")


# ---------------------------------------------------------------------------
# reverse-mode sweep


def backward(loss: Tensor) -> None:
    """Propagate d(loss)/d(node) to every reachable requires_grad tensor.

    Contributions are summed per call into ``Tensor.grad``, so repeated
    calls on the same graph accumulate (call ``zero_grad`` between steps).
    """
    if loss.data.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))

    # Per-call gradient table keeps accumulation exact: persistent .grad is
    # only touched once per node per call.
    table: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(topo):
        g = table.pop(id(node), None)
        if g is None:
            continue
        _check_finite(g, "backward gradient")
        if node._backward_fn is None:
            # Leaf: park the gradient; intermediates only relay theirs.
            if node.requires_grad:
                node.accumulate_grad(g)
            continue
        for parent, pg in zip(node._parents, node._backward_fn(g)):
            if pg is None or not parent.requires_grad:
                continue
            pg32 = np.asarray(pg, dtype=np.float32)
            prev = table.get(id(parent))
            if prev is None:
                table[id(parent)] = pg32
            else:
                prev += pg32
