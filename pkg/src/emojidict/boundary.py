"""Emoji-boundary detector: a dilated 1-D CNN over 6-word windows (plus a BiLSTM baseline).

The decision for token i looks at tokens i-3 .. i+2; the window geometry is
shared with the training-data builder through ``dataset.window_matrix``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dataset import (PAD, ClassStats, LabeledTokenSeq, SampleSet, Vocabulary, build_vocab, class_stats,
                      compile_samples, label_corpus, window_matrix)
from .errors import EmptyEvalSet, InvalidConfig, WrongWindowWidth
from .nn import (Adam, BiLSTM, Conv1d, Dense, Embedding, ParamStore, class_weight, maxpool1d, maxpool1d_backward,
                 param_count, relu, relu_backward, sigmoid, weighted_bce_logits)
from .nn.serialize import load_weights, save_weights
from .subpart import BoundarySet, TriggerLexicon
from .textnorm import TokenSeq

ARCHS = ("cnn", "bilstm")


@dataclass
class BoundaryConfig:
    window: int = 6
    offset: int = 4
    vocab_size: int = 20000
    emb_dim: int = 50
    filters: int = 512
    kernel: int = 3
    dilation: int = 2
    pool: int = 2
    arch: str = "cnn"
    bilstm_hidden: int = 64
    class_weight_ratio: float | None = None  # BiLSTM ablation weight; replaces N/M when set
    use_class_weight: bool = True
    threshold: float = 0.5

    def validate(self) -> "BoundaryConfig":
        if self.arch not in ARCHS:
            raise InvalidConfig(f"arch must be one of {ARCHS}, got {self.arch!r}")
        if self.window < 2 or not 1 <= self.offset <= self.window:
            raise InvalidConfig(f"need window >= 2 and 1 <= offset <= window (got {self.window}, {self.offset})")
        for name in ("vocab_size", "emb_dim", "filters", "kernel", "dilation", "pool", "bilstm_hidden"):
            if getattr(self, name) <= 0:
                raise InvalidConfig(f"{name} must be positive")
        if self.vocab_size < 2:
            raise InvalidConfig("vocab_size must cover PAD and UNK")
        if not 0.0 < self.threshold < 1.0:
            raise InvalidConfig(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.class_weight_ratio is not None and self.class_weight_ratio <= 0:
            raise InvalidConfig("class_weight_ratio must be positive")
        return self

    @property
    def input_len(self) -> int:
        """Window length after right-padding so the conv and pool stages have room."""
        if self.arch != "cnn":
            return self.window
        return max(self.window, (self.kernel - 1) * self.dilation + self.pool)

    @classmethod
    def from_dict(cls, d: dict) -> "BoundaryConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names}).validate()


@dataclass(frozen=True)
class BoundaryMetrics:
    precision: float
    recall: float
    f1: float
    accuracy: float
    multiline_accuracy: float
    n_positions: int = 0
    n_multiline: int = 0

    def rows(self) -> list[tuple[str, float]]:
        return [("precision", self.precision), ("recall", self.recall), ("f1", self.f1),
                ("accuracy", self.accuracy), ("multiline_accuracy", self.multiline_accuracy)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "value"])
        for k, v in self.rows():
            w.writerow([k, f"{v:.4f}"])
        return buf.getvalue()


@dataclass
class TrainHyper:
    epochs: int = 10
    batch_size: int = 64
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 42
    target_accuracy: float | None = None  # stop once full-pass training accuracy reaches this


class BoundaryModel:
    def __init__(self, config: BoundaryConfig, seed: int = 42):
        self.config = config.validate()
        self.store = ParamStore()
        rng = np.random.default_rng(seed)
        c = config
        self.emb = Embedding(self.store, "emb", c.vocab_size, c.emb_dim, rng)
        if c.arch == "cnn":
            self.conv = Conv1d(self.store, "conv", c.emb_dim, c.filters, c.kernel, c.dilation, rng)
            pooled = self.conv.out_len(c.input_len) // c.pool
            self.dense = Dense(self.store, "dense", pooled * c.filters, 1, rng)
        else:
            self.rnn = BiLSTM(self.store, "bilstm", c.emb_dim, c.bilstm_hidden, rng)
            self.dense = Dense(self.store, "dense", 2 * c.bilstm_hidden, 1, rng)

    def _pad(self, windows: np.ndarray) -> np.ndarray:
        extra = self.config.input_len - windows.shape[1]
        if extra:
            windows = np.concatenate([windows, np.full((windows.shape[0], extra), PAD)], axis=1)
        return windows

    def forward(self, windows):
        windows = np.asarray(windows, dtype=np.int64)
        if windows.ndim != 2 or windows.shape[1] != self.config.window:
            raise WrongWindowWidth(f"expected windows of width {self.config.window}, got shape {windows.shape}")
        x, ecache = self.emb.forward(self._pad(windows))
        if self.config.arch == "cnn":
            conv, ccache = self.conv.forward(x)
            act = relu(conv)
            pooled, pcache = maxpool1d(act, self.config.pool)
            flat = pooled.reshape(len(windows), -1)
            logit, dcache = self.dense.forward(flat)
            return logit[:, 0], (ecache, ccache, conv, pcache, pooled.shape, dcache)
        h, rcache = self.rnn.forward(x)
        center = h[:, self.config.offset - 1]
        logit, dcache = self.dense.forward(center)
        return logit[:, 0], (ecache, rcache, h.shape, dcache)

    def backward(self, dlogit, cache) -> None:
        d = dlogit[:, None]
        if self.config.arch == "cnn":
            ecache, ccache, conv, pcache, pshape, dcache = cache
            dflat = self.dense.backward(d, dcache)
            dact = maxpool1d_backward(dflat.reshape(pshape), pcache)
            dx = self.conv.backward(relu_backward(dact, conv), ccache)
        else:
            ecache, rcache, hshape, dcache = cache
            dh = np.zeros(hshape)
            dh[:, self.config.offset - 1] = self.dense.backward(d, dcache)
            dx = self.rnn.backward(dh, rcache)
        self.emb.backward(dx, ecache)

    def predict_proba(self, windows, batch_size: int = 4096) -> np.ndarray:
        windows = np.asarray(windows, dtype=np.int64)
        if len(windows) == 0:
            return np.zeros(0)
        out = [sigmoid(self.forward(windows[i:i + batch_size])[0]) for i in range(0, len(windows), batch_size)]
        return np.concatenate(out)

    def param_count(self) -> int:
        return param_count(self.store)

    def save(self, path: str | Path, vocab: Vocabulary, quantized: bool = False) -> int:
        size = save_weights(path, self.store, quantized)
        meta = {"kind": "boundary", "config": asdict(self.config), "vocab": list(vocab.id_to_word)}
        Path(f"{path}.json").write_text(json.dumps(meta, sort_keys=True), encoding="utf-8")
        return size

    @classmethod
    def load(cls, path: str | Path) -> tuple["BoundaryModel", Vocabulary]:
        meta = json.loads(Path(f"{path}.json").read_text(encoding="utf-8"))
        if meta.get("kind") != "boundary":
            raise InvalidConfig(f"{path} is not a boundary model")
        model = cls(BoundaryConfig.from_dict(meta["config"]))
        arrays, _ = load_weights(path)
        model.store.load_state(arrays)
        return model, Vocabulary(tuple(meta["vocab"]))


def build(config: BoundaryConfig, seed: int = 42) -> BoundaryModel:
    return BoundaryModel(config, seed)


def predict_window(model: BoundaryModel, window: Sequence[int]) -> float:
    window = np.asarray(window, dtype=np.int64)
    if window.ndim != 1 or len(window) != model.config.window:
        raise WrongWindowWidth(f"expected {model.config.window} ids, got {len(window)}")
    return float(model.predict_proba(window[None, :])[0])


def boundary_probs(model: BoundaryModel, words: Sequence[str], vocab: Vocabulary) -> np.ndarray:
    c = model.config
    return model.predict_proba(window_matrix(vocab.encode(words), c.window, c.offset))


def predict_boundaries(model: BoundaryModel, seq: TokenSeq | Sequence[str], vocab: Vocabulary,
                       threshold: float | None = None) -> BoundarySet:
    words = seq.words if isinstance(seq, TokenSeq) else list(seq)
    tau = model.config.threshold if threshold is None else threshold
    p = boundary_probs(model, words, vocab)
    return BoundarySet.of(np.flatnonzero(p >= tau), len(words))


def negative_weight(model: BoundaryModel, stats: ClassStats) -> float:
    c = model.config
    if c.arch == "bilstm" and c.class_weight_ratio is not None:
        return c.class_weight_ratio
    if not c.use_class_weight:
        return 1.0
    return class_weight(stats)


def train(model: BoundaryModel, samples: SampleSet, stats: ClassStats | None = None,
          hyper: TrainHyper | None = None, log=None) -> list[dict]:
    """Mini-batch Adam on the class-weighted BCE; returns per-epoch loss and training accuracy."""
    hyper = hyper or TrainHyper()
    if len(samples) == 0:
        raise EmptyEvalSet("no training samples")
    stats = stats or class_stats(samples)
    w = negative_weight(model, stats)
    opt = Adam(model.store, hyper.lr, hyper.beta1, hyper.beta2, hyper.eps)
    rng = np.random.default_rng(hyper.seed)
    X, y = samples.windows, samples.labels.astype(np.float64)
    history = []
    for epoch in range(1, hyper.epochs + 1):
        order = rng.permutation(len(y))
        total = 0.0
        for start in range(0, len(y), hyper.batch_size):
            idx = order[start:start + hyper.batch_size]
            model.store.zero_grad()
            logits, cache = model.forward(X[idx])
            loss, dlogits = weighted_bce_logits(logits, y[idx], w)
            model.backward(dlogits, cache)
            opt.step()
            total += loss * len(idx)
        acc = float(np.mean((model.predict_proba(X) >= model.config.threshold) == samples.labels))
        history.append({"epoch": epoch, "loss": total / len(y), "accuracy": acc})
        if log:
            log(f"epoch {epoch}: loss {total / len(y):.4f} train acc {100 * acc:.2f}%")
        if hyper.target_accuracy is not None and acc >= hyper.target_accuracy:
            break
    return history


def _pct(num: int, den: int, vacuous: float) -> float:
    return 100.0 * num / den if den else vacuous


def metrics_from_sets(gold: Sequence[LabeledTokenSeq], predicted: Sequence[BoundarySet]) -> BoundaryMetrics:
    """Token-position metrics; multi-line accuracy is exact set match over inputs with >= 2 gold sub-parts.

    Precision with nothing predicted and recall with nothing to find are 100 (vacuous).
    """
    if not gold:
        raise EmptyEvalSet("evaluation set is empty")
    tp = fp = fn = tn = 0
    multi = multi_ok = 0
    for g, p in zip(gold, predicted, strict=True):
        gold_set = set(g.positions)
        pred_set = set(p.positions)
        n = len(g)
        tp += len(gold_set & pred_set)
        fp += len(pred_set - gold_set)
        fn += len(gold_set - pred_set)
        tn += n - len(gold_set | pred_set)
        if sum(g.boundary_after[:-1]) + 1 >= 2:
            multi += 1
            multi_ok += gold_set == pred_set
    precision = _pct(tp, tp + fp, 100.0)
    recall = _pct(tp, tp + fn, 100.0)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    total = tp + fp + fn + tn
    return BoundaryMetrics(precision, recall, f1, _pct(tp + tn, total, 100.0), _pct(multi_ok, multi, 0.0),
                           total, multi)


def evaluate(model: BoundaryModel, eval_set: Sequence[LabeledTokenSeq], vocab: Vocabulary,
             threshold: float | None = None) -> BoundaryMetrics:
    if not eval_set:
        raise EmptyEvalSet("evaluation set is empty")
    preds = [predict_boundaries(model, seq.words, vocab, threshold) for seq in eval_set]
    return metrics_from_sets(eval_set, preds)


def sweep_offset(W: int) -> int:
    """Decision slot that keeps the 3:1:2 left/centre/right proportion of the 6-word window."""
    return math.ceil(2 * W / 3)


def window_sweep(docs: Sequence[str], sizes: Iterable[int] = range(2, 11), base: BoundaryConfig | None = None,
                 hyper: TrainHyper | None = None, held_out: float = 0.2, lex: TriggerLexicon | None = None,
                 seed: int = 42, log=None) -> list[tuple[int, float]]:
    """Train one fixed-budget model per window size and report held-out sample accuracy (percent)."""
    docs = list(docs)
    if len(docs) < 2:
        raise EmptyEvalSet("window sweep needs at least two documents")
    base = base or BoundaryConfig()
    hyper = hyper or TrainHyper(seed=seed)
    perm = np.random.default_rng(seed).permutation(len(docs))
    n_test = max(1, int(round(held_out * len(docs))))
    test_docs = [docs[i] for i in perm[:n_test]]
    train_docs = [docs[i] for i in perm[n_test:]]
    train_lab = label_corpus(train_docs, lex)
    test_lab = label_corpus(test_docs, lex)
    vocab = build_vocab((w for s in train_lab for w in s.words), base.vocab_size)
    results = []
    for W in sizes:
        off = sweep_offset(W)
        cfg = BoundaryConfig(**{**asdict(base), "window": W, "offset": off, "vocab_size": len(vocab)})
        model = BoundaryModel(cfg, seed)
        tr = compile_samples(train_lab, vocab, W, off)
        te = compile_samples(test_lab, vocab, W, off)
        train(model, tr, class_stats(tr), hyper)
        acc = 100.0 * float(np.mean((model.predict_proba(te.windows) >= cfg.threshold) == te.labels))
        if log:
            log(f"window {W} (offset {off}): held-out accuracy {acc:.2f}%")
        results.append((W, acc))
    return results


def sweep_csv(results: Sequence[tuple[int, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["window", "accuracy"])
    for W, acc in results:
        w.writerow([W, f"{acc:.4f}"])
    return buf.getvalue()
