"""Bias-corrected Adam for the float32 parameter tensors."""

from dataclasses import dataclass, field

import numpy as np

from .tensor import NumericError, Tensor


@dataclass
class AdamState:
    """First/second moment estimates, one float64 array per parameter."""

    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    step: int = 0

    @classmethod
    def for_params(cls, params: list[Tensor]) -> "AdamState":
        return cls(
            m=[np.zeros(p.data.shape, dtype=np.float64) for p in params],
            v=[np.zeros(p.data.shape, dtype=np.float64) for p in params],
        )


def adam_step(
    params: list[Tensor],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One in-place Adam update; increments ``state.step``.

    p <- p - lr * m_hat / (sqrt(v_hat) + eps) with the usual 1/(1-beta^t)
    bias correction.  Raises on shape disagreement or non-finite gradients.
    """
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise ValueError("params, grads and state must have equal lengths")
    state.step += 1
    t = state.step
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.data.shape}")
        if not np.isfinite(g).all():
            raise NumericError("non-finite gradient in adam_step")
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        update = lr * (m / c1) / (np.sqrt(v / c2) + eps)
        p.data = (p.data.astype(np.float64) - update).astype(np.float32)


class Adam:
    """Convenience wrapper: pulls gradients from the parameters themselves."""

    def __init__(self, params: list[Tensor], lr: float = 1e-4):
        self.params = params
        self.lr = lr
        self.state = AdamState.for_params(params)

    def step(self) -> None:
        grads = []
        for p in self.params:
            if p.grad is None:
                grads.append(np.zeros(p.data.shape, dtype=np.float64))
            else:
                grads.append(p.grad)
        adam_step(self.params, grads, self.state, self.lr)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
