from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from .params import ParamStore


def grad_check(model_fn: Callable[[], float], params: ParamStore, eps: float = 1e-4,
               names: Iterable[str] | None = None, max_elems: int | None = None,
               rng: np.random.Generator | None = None) -> float:
    """Largest per-tensor relative error between analytic and central-difference gradients.

    ``model_fn`` must zero the gradients, run forward and backward, and return
    the scalar loss. Per tensor the error is ``|a - n| / (|a| + |n|)`` in the
    2-norm (0 when both vanish). ``max_elems`` samples that many entries of
    large tensors instead of perturbing all of them.
    """
    rng = rng or np.random.default_rng(0)
    model_fn()
    analytic = {k: g.copy() for k, g in params.grads.items()}
    worst = 0.0
    for name in names if names is not None else list(params):
        p = params[name]
        flat = p.reshape(-1)
        idx = np.arange(flat.size)
        if max_elems is not None and flat.size > max_elems:
            idx = np.sort(rng.choice(flat.size, size=max_elems, replace=False))
        num = np.empty(len(idx))
        for j, k in enumerate(idx):
            old = flat[k]
            flat[k] = old + eps
            up = model_fn()
            flat[k] = old - eps
            down = model_fn()
            flat[k] = old
            num[j] = (up - down) / (2 * eps)
        ana = analytic[name].reshape(-1)[idx]
        denom = np.linalg.norm(ana) + np.linalg.norm(num)
        err = 0.0 if denom == 0 else float(np.linalg.norm(ana - num) / denom)
        worst = max(worst, err)
    model_fn()  # leave grads consistent with unperturbed params
    return worst
