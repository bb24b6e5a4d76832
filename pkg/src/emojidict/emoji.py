"""Emoji prediction for a sub-part: the attention-based char-aware LSTM and its baselines.

Each token is represented twice: a word embedding (16) and char-CNN features
(5 + 10 + 15 filters of widths 1, 2, 3). A learned two-way gate fuses them
(46), two stacked LSTMs (128 each) read the fused sequence, and temporal
attention pools the per-step concatenation [fused ; h1 ; h2] (302) before a
64-way softmax. The char path keeps out-of-vocabulary words informative.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import PAD, UNK, Vocabulary
from .errors import DataError, EmptyEvalSet, EmptySubpart, InvalidConfig
from .nn import (LSTM, Adam, CharCNN, Dense, Embedding, FeatureAttention, ParamStore, TemporalAttention,
                 cross_entropy, param_count, softmax)
from .nn.serialize import load_weights, save_weights
from .textnorm import TokenSeq

KINDS = ("aca", "bow", "lstm_char", "lstm_word")
DEEPMOJI_PARAMS = 22_400_000
CHAR_PAD, CHAR_UNK = 0, 1
N_CHARS = 28  # PAD, UNK, a-z


@dataclass(frozen=True)
class EmojiLabel:
    emoji: str
    category: str
    name: str


@dataclass(frozen=True)
class EmojiLabelSet:
    labels: tuple[EmojiLabel, ...]

    def __post_init__(self):
        emojis = [l.emoji for l in self.labels]
        if len(set(emojis)) != len(emojis):
            raise DataError("duplicate emoji in label set")
        if any(not l.category for l in self.labels):
            raise DataError("every label needs a category")

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, i) -> EmojiLabel:
        return self.labels[i]

    def index(self, emoji: str) -> int:
        for i, l in enumerate(self.labels):
            if l.emoji == emoji:
                return i
        raise KeyError(emoji)

    def category(self, emoji: str) -> str:
        return self.labels[self.index(emoji)].category

    @classmethod
    def parse(cls, text: str, expected: int | None = 64) -> "EmojiLabelSet":
        labels = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"label line {lineno}: expected emoji<TAB>category<TAB>name")
            labels.append(EmojiLabel(*(p.strip() for p in parts)))
        if expected is not None and len(labels) != expected:
            raise DataError(f"label set has {len(labels)} entries, expected {expected}")
        return cls(tuple(labels))

    @classmethod
    def load(cls, path: str | Path, expected: int | None = 64) -> "EmojiLabelSet":
        return cls.parse(Path(path).read_text(encoding="utf-8"), expected)

    def rows(self) -> list[list[str]]:
        return [[l.emoji, l.category, l.name] for l in self.labels]


def default_labels() -> EmojiLabelSet:
    return EmojiLabelSet.parse(resources.files("emojidict.data").joinpath("emoji_labels.tsv").read_text("utf-8"))


@dataclass
class EmojiConfig:
    kind: str = "aca"
    vocab_size: int = 60000
    word_emb: int = 16
    char_emb: int = 8
    kernels: dict = field(default_factory=lambda: {1: 5, 2: 10, 3: 15})
    lstm1: int = 128
    lstm2: int = 128
    att_dim: int = 64
    classes: int = 64
    max_word_len: int = 24
    # expected derived widths; None skips the check (shrunken test models)
    fused_dim: int | None = 46
    concat_dim: int | None = 302

    def __post_init__(self):
        self.kernels = {int(k): int(v) for k, v in self.kernels.items()}

    @property
    def char_dim(self) -> int:
        return sum(self.kernels.values())

    def validate(self) -> "EmojiConfig":
        if self.kind not in KINDS:
            raise InvalidConfig(f"kind must be one of {KINDS}, got {self.kind!r}")
        for name in ("vocab_size", "word_emb", "char_emb", "lstm1", "lstm2", "att_dim", "classes", "max_word_len"):
            if getattr(self, name) <= 0:
                raise InvalidConfig(f"{name} must be positive")
        if not self.kernels or any(w <= 0 or n <= 0 for w, n in self.kernels.items()):
            raise InvalidConfig("kernels must map positive widths to positive filter counts")
        if self.kind == "aca":
            fused = self.word_emb + self.char_dim
            concat = fused + self.lstm1 + self.lstm2
            if self.fused_dim is not None and fused != self.fused_dim:
                raise InvalidConfig(f"fused width {fused} != expected {self.fused_dim}")
            if self.concat_dim is not None and concat != self.concat_dim:
                raise InvalidConfig(f"concat width {concat} != expected {self.concat_dim}")
        return self

    @classmethod
    def from_dict(cls, d: dict) -> "EmojiConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names}).validate()


AcaConfig = EmojiConfig


@dataclass
class Batch:
    ids: np.ndarray  # (B, T)
    chars: np.ndarray  # (B, T, L)
    lengths: np.ndarray  # (B, T)
    mask: np.ndarray  # (B, T)


def char_ids(word: str, max_len: int) -> list[int]:
    return [2 + ord(c) - 97 if "a" <= c <= "z" else CHAR_UNK for c in word[:max_len]]


def encode_batch(token_lists: Sequence[Sequence[str]], vocab: Vocabulary, max_word_len: int = 24) -> Batch:
    B = len(token_lists)
    T = max(1, max(len(t) for t in token_lists))
    L = max(1, min(max_word_len, max((len(w) for t in token_lists for w in t), default=1)))
    ids = np.full((B, T), PAD, dtype=np.int64)
    chars = np.full((B, T, L), CHAR_PAD, dtype=np.int64)
    lengths = np.zeros((B, T), dtype=np.int64)
    mask = np.zeros((B, T))
    for b, toks in enumerate(token_lists):
        for t, w in enumerate(toks):
            ids[b, t] = vocab.lookup(w)
            c = char_ids(w, L)
            chars[b, t, :len(c)] = c
            lengths[b, t] = len(c)
            mask[b, t] = 1.0
    return Batch(ids, chars, lengths, mask)


class EmojiModel:
    def __init__(self, config: EmojiConfig, seed: int = 42):
        self.config = c = config.validate()
        self.store = ParamStore()
        rng = np.random.default_rng(seed)
        s = self.store
        if c.kind == "bow":
            self.out = Dense(s, "out", c.vocab_size, c.classes, rng)
            return
        if c.kind in ("aca", "lstm_word"):
            self.emb = Embedding(s, "word_emb", c.vocab_size, c.word_emb, rng)
        if c.kind in ("aca", "lstm_char"):
            self.chars = CharCNN(s, "char_cnn", N_CHARS, c.char_emb, c.kernels, rng)
        if c.kind == "aca":
            self.gate = FeatureAttention(s, "fuse", c.word_emb, c.char_dim, rng)
            self.lstm1 = LSTM(s, "lstm1", self.gate.out_dim, c.lstm1, rng)
            self.lstm2 = LSTM(s, "lstm2", c.lstm1, c.lstm2, rng)
            width = self.gate.out_dim + c.lstm1 + c.lstm2
        else:
            d_in = c.word_emb if c.kind == "lstm_word" else c.char_dim
            self.lstm1 = LSTM(s, "lstm1", d_in, c.lstm1, rng)
            width = c.lstm1
        self.att = TemporalAttention(s, "att", width, c.att_dim, rng)
        self.out = Dense(s, "out", width, c.classes, rng)

    @property
    def concat_width(self) -> int:
        return self.att.dim

    def forward(self, batch: Batch):
        c = self.config
        if c.kind == "bow":
            counts = np.zeros((len(batch.ids), c.vocab_size))
            rows = np.repeat(np.arange(len(batch.ids)), batch.ids.shape[1])
            np.add.at(counts, (rows, batch.ids.reshape(-1)), batch.mask.reshape(-1))
            logits, oc = self.out.forward(counts)
            return logits, (oc,)
        caches = {}
        if c.kind in ("aca", "lstm_word"):
            wv, caches["emb"] = self.emb.forward(batch.ids)
        if c.kind in ("aca", "lstm_char"):
            cv, caches["chars"] = self.chars.forward(batch.chars, batch.lengths)
        if c.kind == "aca":
            fused, caches["gate"] = self.gate.forward(wv, cv)
            h1, caches["lstm1"] = self.lstm1.forward(fused, batch.mask)
            h2, caches["lstm2"] = self.lstm2.forward(h1, batch.mask)
            seq = np.concatenate([fused, h1, h2], axis=-1)
        else:
            x = wv if c.kind == "lstm_word" else cv
            seq, caches["lstm1"] = self.lstm1.forward(x, batch.mask)
        ctx, caches["att"] = self.att.forward(seq, batch.mask)
        logits, caches["out"] = self.out.forward(ctx)
        return logits, caches

    def backward(self, dlogits, caches) -> None:
        c = self.config
        if c.kind == "bow":
            self.out.backward(dlogits, caches[0])
            return
        dseq = self.att.backward(self.out.backward(dlogits, caches["out"]), caches["att"])
        if c.kind == "aca":
            f, h1 = self.gate.out_dim, c.lstm1
            dfused = dseq[..., :f]
            dh1 = dseq[..., f:f + h1] + self.lstm2.backward(dseq[..., f + h1:], caches["lstm2"])
            dfused = dfused + self.lstm1.backward(dh1, caches["lstm1"])
            dwv, dcv = self.gate.backward(dfused, caches["gate"])
            self.emb.backward(dwv, caches["emb"])
            self.chars.backward(dcv, caches["chars"])
            return
        dx = self.lstm1.backward(dseq, caches["lstm1"])
        if c.kind == "lstm_word":
            self.emb.backward(dx, caches["emb"])
        else:
            self.chars.backward(dx, caches["chars"])

    def predict_proba(self, token_lists: Sequence[Sequence[str]], vocab: Vocabulary,
                      batch_size: int = 256) -> np.ndarray:
        out = []
        for i in range(0, len(token_lists), batch_size):
            batch = encode_batch(token_lists[i:i + batch_size], vocab, self.config.max_word_len)
            out.append(softmax(self.forward(batch)[0]))
        return np.concatenate(out) if out else np.zeros((0, self.config.classes))

    def param_count(self) -> int:
        return param_count(self.store)

    def save(self, path: str | Path, vocab: Vocabulary, labels: EmojiLabelSet | None = None,
             quantized: bool = False) -> int:
        size = save_weights(path, self.store, quantized)
        meta = {"kind": "emoji", "config": asdict(self.config), "vocab": list(vocab.id_to_word),
                "labels": labels.rows() if labels is not None else None}
        Path(f"{path}.json").write_text(json.dumps(meta, sort_keys=True, ensure_ascii=False), encoding="utf-8")
        return size

    @classmethod
    def load(cls, path: str | Path) -> tuple["EmojiModel", Vocabulary, EmojiLabelSet | None]:
        meta = json.loads(Path(f"{path}.json").read_text(encoding="utf-8"))
        if meta.get("kind") != "emoji":
            raise InvalidConfig(f"{path} is not an emoji model")
        model = cls(EmojiConfig.from_dict(meta["config"]))
        arrays, _ = load_weights(path)
        model.store.load_state(arrays)
        labels = None
        if meta.get("labels"):
            labels = EmojiLabelSet(tuple(EmojiLabel(*r) for r in meta["labels"]))
        return model, Vocabulary(tuple(meta["vocab"])), labels


def build_aca(config: EmojiConfig | None = None, seed: int = 42) -> EmojiModel:
    config = config or EmojiConfig()
    if config.kind != "aca":
        raise InvalidConfig("build_aca needs kind='aca'")
    return EmojiModel(config, seed)


def build_baseline(kind: str, config: EmojiConfig | None = None, seed: int = 42) -> EmojiModel:
    if kind not in ("bow", "lstm_char", "lstm_word"):
        raise InvalidConfig(f"unknown baseline {kind!r}")
    base = asdict(config) if config is not None else {}
    return EmojiModel(EmojiConfig(**{**base, "kind": kind}), seed)


@dataclass(frozen=True)
class EmojiDistribution:
    probabilities: np.ndarray
    ranked: tuple[int, ...]

    @classmethod
    def from_probs(cls, probs: np.ndarray, k: int | None = None) -> "EmojiDistribution":
        order = np.argsort(-probs, kind="stable")  # ties keep the lower label index first
        return cls(probs, tuple(int(i) for i in order[:k]))

    def top(self, k: int) -> tuple[int, ...]:
        return self.ranked[:k]


def predict_topk(model: EmojiModel, subpart: TokenSeq | Sequence[str], vocab: Vocabulary,
                 k: int = 5) -> EmojiDistribution:
    words = subpart.words if isinstance(subpart, TokenSeq) else list(subpart)
    if not words:
        raise EmptySubpart("cannot predict an emoji for an empty sub-part")
    if not 1 <= k <= model.config.classes:
        raise ValueError(f"k must lie in [1, {model.config.classes}]")
    return EmojiDistribution.from_probs(model.predict_proba([words], vocab)[0], k)


@dataclass
class EmojiHyper:
    epochs: int = 20
    batch_size: int = 32
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 42
    target_accuracy: float | None = None
    word_dropout: float = 0.5  # chance a training token's word id is swapped for UNK


def train(model: EmojiModel, data: Sequence[tuple[Sequence[str], int]], vocab: Vocabulary,
          hyper: EmojiHyper | None = None, log=None) -> list[dict]:
    """Softmax cross-entropy with Adam; history holds loss and full-pass top-1/top-5 accuracy per epoch."""
    hyper = hyper or EmojiHyper()
    if not data:
        raise EmptyEvalSet("no emoji training data")
    tokens = [list(t) for t, _ in data]
    y = np.array([lab for _, lab in data], dtype=np.int64)
    if y.min() < 0 or y.max() >= model.config.classes:
        raise DataError(f"labels must lie in [0, {model.config.classes})")
    if not 0.0 <= hyper.word_dropout < 1.0:
        raise InvalidConfig("word_dropout must lie in [0, 1)")
    opt = Adam(model.store, hyper.lr, hyper.beta1, hyper.beta2, hyper.eps)
    rng = np.random.default_rng(hyper.seed)
    history = []
    for epoch in range(1, hyper.epochs + 1):
        order = rng.permutation(len(y))
        total = 0.0
        for start in range(0, len(y), hyper.batch_size):
            idx = order[start:start + hyper.batch_size]
            batch = encode_batch([tokens[i] for i in idx], vocab, model.config.max_word_len)
            if hyper.word_dropout:
                # the spelling stays, so the char path has to learn to stand in for the word
                drop = (rng.random(batch.ids.shape) < hyper.word_dropout) & (batch.mask > 0)
                batch.ids[drop] = UNK
            model.store.zero_grad()
            logits, cache = model.forward(batch)
            loss, dlogits = cross_entropy(logits, y[idx])
            model.backward(dlogits, cache)
            opt.step()
            total += loss * len(idx)
        m = metrics_from_probs(model.predict_proba(tokens, vocab), y)
        acc = m.top1 / 100
        history.append({"epoch": epoch, "loss": total / len(y), "top1": acc, "top5": m.top5 / 100})
        if log:
            log(f"epoch {epoch}: loss {total / len(y):.4f} train top-1 {100 * acc:.2f}%")
        if hyper.target_accuracy is not None and acc >= hyper.target_accuracy:
            break
    return history


@dataclass(frozen=True)
class EmojiMetrics:
    top1: float
    top5: float
    f1: float  # support-weighted mean of per-class F1, percent
    n: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "value"])
        for k in ("top1", "top5", "f1"):
            w.writerow([k if k != "f1" else "f1_weighted", f"{getattr(self, k):.4f}"])
        return buf.getvalue()


def weighted_f1(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Per-class F1 averaged with class-support weights (fraction in [0, 1])."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    total = 0.0
    for c in np.unique(y_true):
        tp = np.sum((y_pred == c) & (y_true == c))
        fp = np.sum((y_pred == c) & (y_true != c))
        fn = np.sum((y_pred != c) & (y_true == c))
        f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
        total += f1 * np.sum(y_true == c)
    return float(total / len(y_true))


def metrics_from_probs(probs: np.ndarray, y: np.ndarray) -> EmojiMetrics:
    if len(y) == 0:
        raise EmptyEvalSet("emoji evaluation set is empty")
    order = np.argsort(-probs, axis=1, kind="stable")
    hits = order == np.asarray(y)[:, None]
    top1 = float(hits[:, :1].any(axis=1).mean())
    top5 = float(hits[:, :5].any(axis=1).mean())
    return EmojiMetrics(100 * top1, 100 * top5, 100 * weighted_f1(y, order[:, 0]), len(y))


def evaluate(model: EmojiModel, data: Sequence[tuple[Sequence[str], int]], vocab: Vocabulary) -> EmojiMetrics:
    if not data:
        raise EmptyEvalSet("emoji evaluation set is empty")
    probs = model.predict_proba([list(t) for t, _ in data], vocab)
    return metrics_from_probs(probs, np.array([lab for _, lab in data]))


def read_emoji_data(path: str | Path) -> list[tuple[int, str]]:
    """Rows of ``label_index<TAB>text``."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            try:
                lab, text = line.split("\t", 1)
                rows.append((int(lab), text))
            except ValueError:
                raise DataError(f"{path}:{lineno}: expected label_index<TAB>text") from None
    return rows


def write_emoji_data(path: str | Path, rows: Sequence[tuple[int, str]]) -> None:
    Path(path).write_text("".join(f"{lab}\t{text}\n" for lab, text in rows), encoding="utf-8")

