"""Layers with hand-written backward passes.

Every layer is stateless between calls: ``forward`` returns ``(out, cache)``
and ``backward(dout, cache)`` returns the input gradient while accumulating
parameter gradients into the owning ParamStore. A frozen model can therefore
serve concurrent forward calls.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from ..errors import IdOutOfRange, InputTooShort, ShapeMismatch
from .params import ParamStore, glorot_uniform, orthogonal


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))  # never overflows
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def softmax(x, axis=-1):
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def relu(x):
    return np.maximum(x, 0.0)


def relu_backward(dout, x):
    return dout * (x > 0)


def maxpool1d(x, pool: int = 2):
    """Non-overlapping max pooling over axis 1 of a (B, T, C) array; ties route to the first index."""
    B, T, C = x.shape
    if T < pool:
        raise InputTooShort(f"maxpool needs T >= {pool}, got {T}")
    n = T // pool
    blocks = x[:, : n * pool].reshape(B, n, pool, C)
    idx = blocks.argmax(axis=2)
    out = np.take_along_axis(blocks, idx[:, :, None, :], axis=2)[:, :, 0, :]
    return out, (x.shape, idx, pool)


def maxpool1d_backward(dout, cache):
    shape, idx, pool = cache
    B, T, C = shape
    n = T // pool
    dblocks = np.zeros((B, n, pool, C))
    np.put_along_axis(dblocks, idx[:, :, None, :], dout[:, :, None, :], axis=2)
    dx = np.zeros(shape)
    dx[:, : n * pool] = dblocks.reshape(B, n * pool, C)
    return dx


class Embedding:
    def __init__(self, store: ParamStore, name: str, rows: int, dim: int, rng: np.random.Generator):
        self.store, self.name = store, name
        self.rows, self.dim = rows, dim
        store.add(name, rng.uniform(-0.05, 0.05, size=(rows, dim)))

    def forward(self, ids):
        ids = np.asarray(ids)
        if ids.size and (ids.min() < 0 or ids.max() >= self.rows):
            raise IdOutOfRange(f"{self.name}: ids must lie in [0, {self.rows})")
        return self.store[self.name][ids], ids

    def backward(self, dout, ids):
        np.add.at(self.store.grads[self.name], ids.reshape(-1), dout.reshape(-1, self.dim))


class Dense:
    def __init__(self, store: ParamStore, name: str, n_in: int, n_out: int, rng: np.random.Generator):
        self.store, self.W, self.b = store, f"{name}.W", f"{name}.b"
        self.n_in, self.n_out = n_in, n_out
        store.add(self.W, glorot_uniform(rng, (n_in, n_out), n_in, n_out))
        store.add(self.b, np.zeros(n_out))

    def forward(self, x):
        if x.shape[-1] != self.n_in:
            raise ShapeMismatch(f"dense expects last dim {self.n_in}, got {x.shape}")
        return x @ self.store[self.W] + self.store[self.b], x

    def backward(self, dout, x):
        x2 = x.reshape(-1, self.n_in)
        d2 = dout.reshape(-1, self.n_out)
        self.store.grads[self.W] += x2.T @ d2
        self.store.grads[self.b] += d2.sum(axis=0)
        return dout @ self.store[self.W].T


class Conv1d:
    """Valid (unpadded) dilated convolution over axis 1 of (B, T, C_in)."""

    def __init__(self, store: ParamStore, name: str, c_in: int, filters: int, kernel: int,
                 dilation: int, rng: np.random.Generator):
        self.store, self.W, self.b = store, f"{name}.W", f"{name}.b"
        self.c_in, self.filters, self.kernel, self.dilation = c_in, filters, kernel, dilation
        store.add(self.W, glorot_uniform(rng, (kernel, c_in, filters), kernel * c_in, filters))
        store.add(self.b, np.zeros(filters))

    @property
    def span(self) -> int:
        return (self.kernel - 1) * self.dilation + 1

    def out_len(self, T: int) -> int:
        return T - (self.kernel - 1) * self.dilation

    def forward(self, x):
        B, T, C = x.shape
        if C != self.c_in:
            raise ShapeMismatch(f"conv expects {self.c_in} channels, got {C}")
        if T < self.span:
            raise InputTooShort(f"conv with kernel {self.kernel}, dilation {self.dilation} needs T >= {self.span}")
        T2 = self.out_len(T)
        cols = np.concatenate([x[:, k * self.dilation: k * self.dilation + T2] for k in range(self.kernel)], axis=2)
        Wm = self.store[self.W].reshape(self.kernel * C, self.filters)
        return cols @ Wm + self.store[self.b], (x.shape, cols)

    def backward(self, dout, cache):
        shape, cols = cache
        B, T, C = shape
        T2 = dout.shape[1]
        Wm = self.store[self.W].reshape(self.kernel * C, self.filters)
        self.store.grads[self.W] += (cols.reshape(-1, self.kernel * C).T @ dout.reshape(-1, self.filters)).reshape(
            self.kernel, C, self.filters)
        self.store.grads[self.b] += dout.sum(axis=(0, 1))
        dcols = dout @ Wm.T
        dx = np.zeros(shape)
        for k in range(self.kernel):
            dx[:, k * self.dilation: k * self.dilation + T2] += dcols[:, :, k * C:(k + 1) * C]
        return dx


class LSTM:
    """Single-direction LSTM, zero initial state, gate order (input, forget, cell, output).

    ``mask`` (B, T) marks real steps. On masked steps the state is carried
    through unchanged and the output is zero, so right-padded batches work in
    both directions.
    """

    def __init__(self, store: ParamStore, name: str, d_in: int, hidden: int, rng: np.random.Generator,
                 reverse: bool = False):
        self.store = store
        self.Wx, self.Wh, self.b = f"{name}.Wx", f"{name}.Wh", f"{name}.b"
        self.d_in, self.hidden, self.reverse = d_in, hidden, reverse
        H = hidden
        store.add(self.Wx, glorot_uniform(rng, (d_in, 4 * H), d_in, 4 * H))
        store.add(self.Wh, np.concatenate([orthogonal(rng, H, H) for _ in range(4)], axis=1))
        b = np.zeros(4 * H)
        b[H:2 * H] = 1.0  # forget gate
        store.add(self.b, b)

    def forward(self, x, mask=None):
        B, T, D = x.shape
        if D != self.d_in:
            raise ShapeMismatch(f"lstm expects input dim {self.d_in}, got {D}")
        H = self.hidden
        Wx, Wh, b = self.store[self.Wx], self.store[self.Wh], self.store[self.b]
        m = np.ones((B, T)) if mask is None else np.asarray(mask, dtype=np.float64)
        xz = x @ Wx + b  # (B, T, 4H)
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        out = np.zeros((B, T, H))
        steps = []
        order = range(T - 1, -1, -1) if self.reverse else range(T)
        for t in order:
            z = xz[:, t] + h @ Wh
            i = _sig(z[:, :H])
            f = _sig(z[:, H:2 * H])
            g = np.tanh(z[:, 2 * H:3 * H])
            o = _sig(z[:, 3 * H:])
            c_new = f * c + i * g
            tc = np.tanh(c_new)
            h_new = o * tc
            mt = m[:, t:t + 1]
            steps.append((t, h, c, i, f, g, o, tc, mt))
            c = mt * c_new + (1 - mt) * c
            h = mt * h_new + (1 - mt) * h
            out[:, t] = mt * h
        return out, (x, steps)

    def backward(self, dout, cache):
        x, steps = cache
        H = self.hidden
        Wx, Wh = self.store[self.Wx], self.store[self.Wh]
        B, T, D = x.shape
        dz_all = np.zeros((B, T, 4 * H))
        dWh = np.zeros_like(Wh)
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t, h_prev, c_prev, i, f, g, o, tc, mt in reversed(steps):
            dh = dout[:, t] * mt + dh_next
            dh_new = mt * dh
            dc_new = mt * dc_next + dh_new * o * (1 - tc * tc)
            do = dh_new * tc
            di = dc_new * g
            dg = dc_new * i
            df = dc_new * c_prev
            dz = np.concatenate([di * i * (1 - i), df * f * (1 - f), dg * (1 - g * g), do * o * (1 - o)], axis=1)
            dz_all[:, t] = dz
            dWh += h_prev.T @ dz
            dh_next = dz @ Wh.T + (1 - mt) * dh
            dc_next = dc_new * f + (1 - mt) * dc_next
        self.store.grads[self.Wx] += x.reshape(-1, D).T @ dz_all.reshape(-1, 4 * H)
        self.store.grads[self.Wh] += dWh
        self.store.grads[self.b] += dz_all.sum(axis=(0, 1))
        return dz_all @ Wx.T


def _sig(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class BiLSTM:
    def __init__(self, store: ParamStore, name: str, d_in: int, hidden: int, rng: np.random.Generator):
        self.fwd = LSTM(store, f"{name}.fwd", d_in, hidden, rng)
        self.bwd = LSTM(store, f"{name}.bwd", d_in, hidden, rng, reverse=True)
        self.hidden = hidden

    def forward(self, x, mask=None):
        a, ca = self.fwd.forward(x, mask)
        b, cb = self.bwd.forward(x, mask)
        return np.concatenate([a, b], axis=-1), (ca, cb)

    def backward(self, dout, cache):
        ca, cb = cache
        H = self.hidden
        return self.fwd.backward(dout[..., :H], ca) + self.bwd.backward(dout[..., H:], cb)


class CharCNN:
    """Char embeddings -> one valid convolution per kernel width -> max over time -> tanh.

    ``kernels`` maps width to filter count. A word shorter than a width has no
    valid position for it, and those filters output 0.
    """

    def __init__(self, store: ParamStore, name: str, n_chars: int, char_dim: int,
                 kernels: Mapping[int, int], rng: np.random.Generator):
        self.store = store
        self.emb = Embedding(store, f"{name}.emb", n_chars, char_dim, rng)
        self.kernels = dict(sorted(kernels.items()))
        self.char_dim = char_dim
        for w, nf in self.kernels.items():
            store.add(f"{name}.w{w}.W", glorot_uniform(rng, (w * char_dim, nf), w * char_dim, nf))
            store.add(f"{name}.w{w}.b", np.zeros(nf))
        self.name = name

    @property
    def out_dim(self) -> int:
        return sum(self.kernels.values())

    def forward(self, chars, lengths):
        """chars (..., L) int ids, lengths (...) -> (..., out_dim)."""
        lead = chars.shape[:-1]
        L = chars.shape[-1]
        ch = chars.reshape(-1, L)
        ln = np.asarray(lengths).reshape(-1)
        e, ecache = self.emb.forward(ch)  # (N, L, C)
        N = e.shape[0]
        outs, parts = [], []
        for w, nf in self.kernels.items():
            P = L - w + 1
            if P <= 0:
                outs.append(np.zeros((N, nf)))
                parts.append((w, None, None, None, None))
                continue
            cols = np.concatenate([e[:, k:k + P] for k in range(w)], axis=2)  # (N, P, w*C)
            conv = cols @ self.store[f"{self.name}.w{w}.W"] + self.store[f"{self.name}.w{w}.b"]
            valid = (np.arange(P)[None, :] + w) <= ln[:, None]  # (N, P)
            masked = np.where(valid[:, :, None], conv, -np.inf)
            idx = masked.argmax(axis=1)  # (N, nf)
            has = valid.any(axis=1)  # (N,)
            mx = np.take_along_axis(conv, idx[:, None, :], axis=1)[:, 0, :]
            out = np.where(has[:, None], np.tanh(mx), 0.0)
            outs.append(out)
            parts.append((w, cols, idx, has, out))
        feat = np.concatenate(outs, axis=1)
        return feat.reshape(*lead, self.out_dim), (lead, L, ecache, e.shape, parts)

    def backward(self, dout, cache):
        lead, L, ecache, eshape, parts = cache
        N = eshape[0]
        d = dout.reshape(N, self.out_dim)
        de = np.zeros(eshape)
        C = self.char_dim
        col = 0
        for (w, cols, idx, has, out), nf in zip(parts, self.kernels.values()):
            dpart = d[:, col:col + nf]
            col += nf
            if cols is None:
                continue
            P = cols.shape[1]
            dmx = dpart * (1 - out * out) * has[:, None]
            dconv = np.zeros((N, P, nf))
            np.put_along_axis(dconv, idx[:, None, :], dmx[:, None, :], axis=1)
            Wn = f"{self.name}.w{w}.W"
            self.store.grads[Wn] += cols.reshape(-1, w * C).T @ dconv.reshape(-1, nf)
            self.store.grads[f"{self.name}.w{w}.b"] += dconv.sum(axis=(0, 1))
            dcols = dconv @ self.store[Wn].T
            for k in range(w):
                de[:, k:k + P] += dcols[:, :, k * C:(k + 1) * C]
        self.emb.backward(de, ecache)


class FeatureAttention:
    """Gate a word vector and a char vector with a two-way softmax, then concatenate.

    score_word = v_w . word + b_w, score_char = v_c . char + b_c,
    (a_w, a_c) = softmax(score_word, score_char), out = [a_w * word ; a_c * char].
    """

    def __init__(self, store: ParamStore, name: str, d_word: int, d_char: int, rng: np.random.Generator):
        self.store = store
        self.d_word, self.d_char = d_word, d_char
        self.vw, self.bw, self.vc, self.bc = (f"{name}.v_word", f"{name}.b_word", f"{name}.v_char", f"{name}.b_char")
        store.add(self.vw, glorot_uniform(rng, (d_word,), d_word, 1))
        store.add(self.bw, np.zeros(1))
        store.add(self.vc, glorot_uniform(rng, (d_char,), d_char, 1))
        store.add(self.bc, np.zeros(1))

    @property
    def out_dim(self) -> int:
        return self.d_word + self.d_char

    def gates(self, word, char):
        s = np.stack([word @ self.store[self.vw] + self.store[self.bw][0],
                      char @ self.store[self.vc] + self.store[self.bc][0]], axis=-1)
        return softmax(s, axis=-1)

    def forward(self, word, char):
        a = self.gates(word, char)
        out = np.concatenate([a[..., :1] * word, a[..., 1:] * char], axis=-1)
        return out, (word, char, a)

    def backward(self, dout, cache):
        word, char, a = cache
        d1, d2 = dout[..., :self.d_word], dout[..., self.d_word:]
        aw, ac = a[..., 0], a[..., 1]
        daw = (d1 * word).sum(-1)
        dac = (d2 * char).sum(-1)
        avg = aw * daw + ac * dac
        dsw = aw * (daw - avg)
        dsc = ac * (dac - avg)
        g = self.store.grads
        g[self.vw] += (dsw[..., None] * word).reshape(-1, self.d_word).sum(0)
        g[self.bw] += dsw.sum()
        g[self.vc] += (dsc[..., None] * char).reshape(-1, self.d_char).sum(0)
        g[self.bc] += dsc.sum()
        dword = aw[..., None] * d1 + dsw[..., None] * self.store[self.vw]
        dchar = ac[..., None] * d2 + dsc[..., None] * self.store[self.vc]
        return dword, dchar


class TemporalAttention:
    """Score each step with u . tanh(W h_t), softmax over real steps, return the weighted sum."""

    def __init__(self, store: ParamStore, name: str, dim: int, att_dim: int, rng: np.random.Generator):
        self.store, self.W, self.u = store, f"{name}.W", f"{name}.u"
        self.dim, self.att_dim = dim, att_dim
        store.add(self.W, glorot_uniform(rng, (dim, att_dim), dim, att_dim))
        store.add(self.u, glorot_uniform(rng, (att_dim,), att_dim, 1))

    def weights(self, h, mask=None):
        s = np.tanh(h @ self.store[self.W])
        e = s @ self.store[self.u]
        if mask is not None:
            e = np.where(np.asarray(mask) > 0, e, -np.inf)
        return softmax(e, axis=-1), s

    def forward(self, h, mask=None):
        if h.shape[-1] != self.dim:
            raise ShapeMismatch(f"attention expects dim {self.dim}, got {h.shape}")
        alpha, s = self.weights(h, mask)
        out = np.einsum("bt,btd->bd", alpha, h)
        return out, (h, s, alpha)

    def backward(self, dout, cache):
        h, s, alpha = cache
        dalpha = np.einsum("bd,btd->bt", dout, h)
        dh = alpha[..., None] * dout[:, None, :]
        de = alpha * (dalpha - (alpha * dalpha).sum(-1, keepdims=True))
        self.store.grads[self.u] += np.einsum("bt,bta->a", de, s)
        dpre = de[..., None] * self.store[self.u] * (1 - s * s)
        self.store.grads[self.W] += h.reshape(-1, self.dim).T @ dpre.reshape(-1, self.att_dim)
        dh += dpre @ self.store[self.W].T
        return dh
