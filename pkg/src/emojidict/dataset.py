"""Vocabulary, boundary labels and fixed-width window samples.

Written text carries its own boundary labels: a word followed by ``.``, ``?``
or ``!`` ends a sentence, and a trigger word opens a new sub-part. Once
labels are derived the punctuation is thrown away, so the model only ever
sees the punctuation-free word stream that dictation produces.
"""

from __future__ import annotations

import struct
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DataError, EmptyCorpus, InvalidWindowConfig
from .subpart import TriggerLexicon, default_lexicon, mark_subpart_boundaries, tag
from .textnorm import ExpansionTable, TokenSeq, normalize, tokenize

PAD, UNK = 0, 1
PAD_TOKEN, UNK_TOKEN = "<pad>", "<unk>"
SENTENCE_FINAL = frozenset(".?!…")
DEFAULT_WINDOW, DEFAULT_OFFSET = 6, 4

_CACHE_MAGIC = b"VMDS"
_CACHE_VERSION = 1


@dataclass(frozen=True)
class Vocabulary:
    id_to_word: tuple[str, ...]
    word_to_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.id_to_word[:2] != (PAD_TOKEN, UNK_TOKEN):
            raise ValueError("vocabulary must start with PAD and UNK")
        mapping = {w: i for i, w in enumerate(self.id_to_word)}
        if len(mapping) != len(self.id_to_word):
            raise ValueError("duplicate vocabulary entries")
        object.__setattr__(self, "word_to_id", mapping)

    @property
    def size(self) -> int:
        return len(self.id_to_word)

    def __len__(self):
        return len(self.id_to_word)

    def lookup(self, word: str) -> int:
        return self.word_to_id.get(word, UNK)

    def encode(self, words: Iterable[str]) -> np.ndarray:
        return np.array([self.word_to_id.get(w, UNK) for w in words], dtype=np.int64)

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.id_to_word) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls(tuple(Path(path).read_text(encoding="utf-8").splitlines()))


def build_vocab(corpus: Iterable[str], size: int = 20000) -> Vocabulary:
    """Keep the ``size - 2`` most frequent words; ties go to the lexicographically smaller word."""
    if size < 2:
        raise ValueError("vocabulary size must leave room for PAD and UNK")
    counts = Counter(corpus)
    if not counts:
        raise EmptyCorpus("cannot build a vocabulary from an empty corpus")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    words = [w for w, _ in ranked if w not in (PAD_TOKEN, UNK_TOKEN)][: size - 2]
    return Vocabulary((PAD_TOKEN, UNK_TOKEN, *words))


@dataclass(frozen=True)
class LabeledTokenSeq:
    tokens: TokenSeq
    boundary_after: tuple[bool, ...]

    def __post_init__(self):
        if len(self.boundary_after) != len(self.tokens):
            raise ValueError("one label per token required")

    def __len__(self):
        return len(self.tokens)

    @property
    def words(self) -> list[str]:
        return self.tokens.words

    @property
    def positions(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.boundary_after) if b)


@dataclass(frozen=True)
class Sample:
    window: tuple[int, ...]
    label: bool


@dataclass(frozen=True)
class ClassStats:
    N: int  # boundary-positive samples
    M: int  # boundary-negative samples

    def __post_init__(self):
        if self.N < 0 or self.M < 0:
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return self.N + self.M


def derive_labels(raw_article: str, lex: TriggerLexicon | None = None,
                  contractions: ExpansionTable | None = None) -> LabeledTokenSeq:
    seq = normalize(tokenize(raw_article), contractions)
    triggers = mark_subpart_boundaries(seq, tag(seq, lex or default_lexicon()))
    labels = tuple(
        bool(SENTENCE_FINAL.intersection(t.punct)) or i in triggers
        for i, t in enumerate(seq.tokens)
    )
    bare = TokenSeq(tuple(replace(t, punct="") for t in seq.tokens), seq.original)
    return LabeledTokenSeq(bare, labels)


def check_window(W: int, offset: int) -> None:
    if W < 2 or not 1 <= offset <= W:
        raise InvalidWindowConfig(f"need W >= 2 and 1 <= offset <= W, got W={W}, offset={offset}")


def window_matrix(ids: Sequence[int] | np.ndarray, W: int = DEFAULT_WINDOW,
                  offset: int = DEFAULT_OFFSET) -> np.ndarray:
    """One row per token: ``offset - 1`` words of left context, ``W - offset`` of right, PAD outside.

    This is the single windowing routine used for both training data and inference.
    """
    check_window(W, offset)
    ids = np.asarray(ids, dtype=np.int64)
    padded = np.concatenate([np.full(offset - 1, PAD), ids, np.full(W - offset, PAD)])
    if len(ids) == 0:
        return np.zeros((0, W), dtype=np.int64)
    return np.lib.stride_tricks.sliding_window_view(padded, W).copy()


def make_windows(seq: LabeledTokenSeq, vocab: Vocabulary, W: int = DEFAULT_WINDOW,
                 offset: int = DEFAULT_OFFSET) -> list[Sample]:
    rows = window_matrix(vocab.encode(seq.words), W, offset)
    return [Sample(tuple(int(x) for x in row), lab) for row, lab in zip(rows, seq.boundary_after)]


def class_stats(samples) -> ClassStats:
    if isinstance(samples, SampleSet):
        n = int(samples.labels.sum())
        return ClassStats(n, len(samples) - n)
    n = sum(1 for s in samples if s.label)
    return ClassStats(n, len(samples) - n)


@dataclass
class SampleSet:
    """Array form of a list of samples, as stored in the binary cache."""

    windows: np.ndarray  # (n, W) int64
    labels: np.ndarray  # (n,) bool
    W: int = DEFAULT_WINDOW
    offset: int = DEFAULT_OFFSET

    def __len__(self):
        return len(self.labels)

    @classmethod
    def from_samples(cls, samples: Sequence[Sample], W: int = DEFAULT_WINDOW,
                     offset: int = DEFAULT_OFFSET) -> "SampleSet":
        windows = np.array([s.window for s in samples], dtype=np.int64).reshape(len(samples), W)
        return cls(windows, np.array([s.label for s in samples], dtype=bool), W, offset)

    def to_samples(self) -> list[Sample]:
        return [Sample(tuple(int(x) for x in w), bool(l)) for w, l in zip(self.windows, self.labels)]

    def save(self, path: str | Path) -> None:
        rec = np.zeros(len(self), dtype=np.dtype([("ids", "<u4", (self.W,)), ("label", "u1")]))
        rec["ids"] = self.windows
        rec["label"] = self.labels
        with open(path, "wb") as fh:
            fh.write(_CACHE_MAGIC)
            fh.write(struct.pack("<IIIQ", _CACHE_VERSION, self.W, self.offset, len(self)))
            fh.write(rec.tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "SampleSet":
        blob = Path(path).read_bytes()
        if blob[:4] != _CACHE_MAGIC:
            raise DataError(f"{path}: not a samples cache")
        version, W, offset, count = struct.unpack_from("<IIIQ", blob, 4)
        if version != _CACHE_VERSION:
            raise DataError(f"{path}: unsupported cache version {version}")
        dtype = np.dtype([("ids", "<u4", (W,)), ("label", "u1")])
        if len(blob) != 24 + count * dtype.itemsize:
            raise DataError(f"{path}: cache size does not match its header")
        rec = np.frombuffer(blob, dtype=dtype, count=count, offset=24)
        return cls(rec["ids"].astype(np.int64), rec["label"].astype(bool), W, offset)


def read_corpus(path: str | Path) -> Iterator[str]:
    """One document per line; blank lines are skipped."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield line


def _label_doc(args):
    doc, lex, contractions = args
    return derive_labels(doc, lex, contractions)


def label_corpus(docs: Iterable[str], lex: TriggerLexicon | None = None,
                 contractions: ExpansionTable | None = None, workers: int = 1) -> list[LabeledTokenSeq]:
    """Label every document; with several workers the output keeps input order."""
    lex = lex or default_lexicon()
    jobs = [(d, lex, contractions) for d in docs]
    if workers <= 1:
        return [_label_doc(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_label_doc, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def compile_samples(labeled: Iterable[LabeledTokenSeq], vocab: Vocabulary, W: int = DEFAULT_WINDOW,
                    offset: int = DEFAULT_OFFSET) -> SampleSet:
    check_window(W, offset)
    windows, labels = [], []
    for seq in labeled:
        if len(seq) == 0:
            continue
        windows.append(window_matrix(vocab.encode(seq.words), W, offset))
        labels.append(np.array(seq.boundary_after, dtype=bool))
    if not windows:
        return SampleSet(np.zeros((0, W), dtype=np.int64), np.zeros(0, dtype=bool), W, offset)
    return SampleSet(np.concatenate(windows), np.concatenate(labels), W, offset)


def extract_multisentence(dialog_corpus: Iterable[str], lex: TriggerLexicon | None = None,
                          contractions: ExpansionTable | None = None) -> list[LabeledTokenSeq]:
    """Keep dialogues with at least two sub-parts.

    The end of the text always closes a sub-part, so the final token is marked
    as a gold boundary and a dialogue qualifies once any earlier boundary exists.
    """
    kept = []
    for doc in dialog_corpus:
        lab = derive_labels(doc, lex, contractions)
        if len(lab) == 0:
            continue
        gold = lab.boundary_after[:-1] + (True,)
        if sum(gold) >= 2:
            kept.append(LabeledTokenSeq(lab.tokens, gold))
    return kept
