"""Small randomized grad-check problems, one per differentiable layer.

Each builder takes a seed and returns ``(store, loss_fn, tolerance)``. The loss
is a fixed random projection of the layer output, so every output element
feeds the gradient.
"""

from __future__ import annotations

import numpy as np

from emojidict.nn import (LSTM, BiLSTM, CharCNN, Conv1d, Dense, Embedding, FeatureAttention, ParamStore,
                          TemporalAttention, cross_entropy, maxpool1d, maxpool1d_backward, relu, relu_backward,
                          weighted_bce_logits)

TOL = 1e-4
LSTM_TOL = 1e-3


def _proj(rng, shape):
    return rng.normal(size=shape)


def embedding(seed):
    rng = np.random.default_rng(seed)
    s = ParamStore()
    layer = Embedding(s, "emb", 5, 4, rng)
    ids = rng.integers(0, 5, size=(3, 4))
    R = _proj(rng, (3, 4, 4))

    def fn():
        s.zero_grad()
        out, c = layer.forward(ids)
        layer.backward(R, c)
        return float((out * R).sum())
    return s, fn, TOL


def dense(seed):
    rng = np.random.default_rng(seed)
    s = ParamStore()
    layer = Dense(s, "d", 6, 3, rng)
    s.add("x", rng.normal(size=(4, 6)))
    R = _proj(rng, (4, 3))

    def fn():
        s.zero_grad()
        out, c = layer.forward(s["x"])
        s.grads["x"] += layer.backward(R, c)
        return float((out * R).sum())
    return s, fn, TOL


def conv_relu_pool(seed):
    """Dilated conv on a 6x8 input, then ReLU and max-pool (pool 2)."""
    rng = np.random.default_rng(seed)
    s = ParamStore()
    conv = Conv1d(s, "conv", 8, 5, 3, 2, rng)
    s.add("x", rng.normal(size=(2, 6, 8)))
    R = _proj(rng, (2, 1, 5))

    def fn():
        s.zero_grad()
        h, cc = conv.forward(s["x"])
        a = relu(h)
        p, pc = maxpool1d(a, 2)
        dp = maxpool1d_backward(R, pc)
        s.grads["x"] += conv.backward(relu_backward(dp, h), cc)
        return float((p * R).sum())
    return s, fn, TOL


def lstm(seed, reverse=False):
    rng = np.random.default_rng(seed)
    s = ParamStore()
    layer = LSTM(s, "lstm", 3, 5, rng, reverse=reverse)
    s.add("x", rng.normal(size=(2, 4, 3)))
    mask = np.array([[1, 1, 1, 1], [1, 1, 1, 0]], dtype=float)
    R = _proj(rng, (2, 4, 5))

    def fn():
        s.zero_grad()
        out, c = layer.forward(s["x"], mask)
        s.grads["x"] += layer.backward(R, c)
        return float((out * R).sum())
    return s, fn, LSTM_TOL


def lstm_reverse(seed):
    return lstm(seed, reverse=True)


def bilstm(seed):
    rng = np.random.default_rng(seed)
    s = ParamStore()
    layer = BiLSTM(s, "bi", 3, 4, rng)
    s.add("x", rng.normal(size=(2, 4, 3)))
    R = _proj(rng, (2, 4, 8))

    def fn():
        s.zero_grad()
        out, c = layer.forward(s["x"])
        s.grads["x"] += layer.backward(R, c)
        return float((out * R).sum())
    return s, fn, LSTM_TOL


def char_cnn(seed):
    rng = np.random.default_rng(seed)
    s = ParamStore()
    layer = CharCNN(s, "cc", 10, 3, {1: 2, 2: 3, 3: 2}, rng)
    chars = rng.integers(2, 10, size=(2, 3, 5))
    lengths = np.array([[5, 1, 3], [2, 4, 0]])
    for b in range(2):
        for t in range(3):
            chars[b, t, lengths[b, t]:] = 0
    R = _proj(rng, (2, 3, 7))

    def fn():
        s.zero_grad()
        out, c = layer.forward(chars, lengths)
        layer.backward(R, c)
        return float((out * R).sum())
    return s, fn, TOL


def feature_attention(seed):
    rng = np.random.default_rng(seed)
    s = ParamStore()
    layer = FeatureAttention(s, "fa", 4, 6, rng)
    s.add("w", rng.normal(size=(2, 3, 4)))
    s.add("c", rng.normal(size=(2, 3, 6)))
    R = _proj(rng, (2, 3, 10))

    def fn():
        s.zero_grad()
        out, cache = layer.forward(s["w"], s["c"])
        dw, dc = layer.backward(R, cache)
        s.grads["w"] += dw
        s.grads["c"] += dc
        return float((out * R).sum())
    return s, fn, TOL


def temporal_attention(seed):
    rng = np.random.default_rng(seed)
    s = ParamStore()
    layer = TemporalAttention(s, "ta", 5, 3, rng)
    s.add("h", rng.normal(size=(2, 4, 5)))
    mask = np.array([[1, 1, 1, 1], [1, 1, 0, 0]], dtype=float)
    R = _proj(rng, (2, 5))

    def fn():
        s.zero_grad()
        out, c = layer.forward(s["h"], mask)
        s.grads["h"] += layer.backward(R, c)
        return float((out * R).sum())
    return s, fn, TOL


def bce_logits(seed):
    rng = np.random.default_rng(seed)
    s = ParamStore()
    s.add("z", rng.normal(size=8))
    labels = rng.random(8) < 0.5

    def fn():
        s.zero_grad()
        loss, g = weighted_bce_logits(s["z"], labels, 0.3)
        s.grads["z"] += g
        return loss
    return s, fn, TOL


def softmax_ce(seed):
    rng = np.random.default_rng(seed)
    s = ParamStore()
    s.add("z", rng.normal(size=(4, 6)))
    y = rng.integers(0, 6, size=4)

    def fn():
        s.zero_grad()
        loss, g = cross_entropy(s["z"], y)
        s.grads["z"] += g
        return loss
    return s, fn, TOL


CASES = {
    "embedding": embedding,
    "dense": dense,
    "conv_relu_pool": conv_relu_pool,
    "lstm_fwd": lstm,
    "lstm_bwd": lstm_reverse,
    "bilstm": bilstm,
    "char_cnn": char_cnn,
    "feature_attention": feature_attention,
    "temporal_attention": temporal_attention,
    "bce_logits": bce_logits,
    "softmax_ce": softmax_ce,
}
