from __future__ import annotations

import numpy as np

from .params import ParamStore


def adam_step(params: dict, grads: dict, state: dict, lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One in-place Adam update with bias correction.

    ``state`` carries ``t``, ``m`` and ``v`` between calls; parameters are
    visited in dict order so repeated runs are bit-identical.
    """
    state["t"] = t = state.get("t", 0) + 1
    ms = state.setdefault("m", {})
    vs = state.setdefault("v", {})
    c1 = 1 - beta1 ** t
    c2 = 1 - beta2 ** t
    for name, p in params.items():
        g = grads[name]
        m = ms.setdefault(name, np.zeros_like(p))
        v = vs.setdefault(name, np.zeros_like(p))
        m *= beta1
        m += (1 - beta1) * g
        v *= beta2
        v += (1 - beta2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


class Adam:
    def __init__(self, store: ParamStore, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.store = store
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.state: dict = {}

    def step(self) -> None:
        adam_step(self.store.params, self.store.grads, self.state, self.lr, self.beta1, self.beta2, self.eps)
