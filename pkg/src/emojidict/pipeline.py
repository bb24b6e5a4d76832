"""End-to-end annotation: normalize, find boundaries, split sub-parts, pick one emoji per sub-part."""

from __future__ import annotations

import csv
import io
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .boundary import BoundaryModel, predict_boundaries
from .dataset import Vocabulary
from .emoji import EmojiLabelSet, EmojiModel, default_labels
from .errors import DataError, InvalidConfig, ModelNotLoaded
from .textnorm import ExpansionTable, TokenSeq, default_contractions, default_shortforms, prepare


@dataclass(frozen=True)
class PipelineConfig:
    emoji_threshold: float = 0.3
    boundary_threshold: float | None = None  # None defers to the boundary model's own threshold

    def __post_init__(self):
        if not 0.0 <= self.emoji_threshold <= 1.0:
            raise InvalidConfig("emoji_threshold must lie in [0, 1]")
        if self.boundary_threshold is not None and not 0.0 <= self.boundary_threshold <= 1.0:
            raise InvalidConfig("boundary_threshold must lie in [0, 1]")


@dataclass(frozen=True)
class Insertion:
    index: int  # emoji goes after this token
    emoji: str
    probability: float = 1.0


@dataclass(frozen=True)
class AnnotatedText:
    original: str
    tokens: tuple[str, ...]
    insertions: tuple[Insertion, ...] = ()
    boundaries: tuple[int, ...] = ()

    def __post_init__(self):
        idx = [i.index for i in self.insertions]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise DataError("insertion indices must be strictly increasing")
        if idx and (idx[0] < 0 or idx[-1] >= len(self.tokens)):
            raise DataError("insertion index out of range")

    @property
    def pairs(self) -> tuple[tuple[int, str], ...]:
        return tuple((i.index, i.emoji) for i in self.insertions)


def render(annotated: AnnotatedText) -> str:
    out = []
    emoji_at = {i.index: i.emoji for i in annotated.insertions}
    for k, w in enumerate(annotated.tokens):
        out.append(w)
        if k in emoji_at:
            out.append(emoji_at[k])
    return " ".join(out)


def subpart_ends(boundaries: Sequence[int], n_tokens: int) -> list[int]:
    """Last token index of every sub-part; the final token always closes one."""
    if n_tokens == 0:
        return []
    ends = sorted({b for b in boundaries if b < n_tokens - 1} | {n_tokens - 1})
    return ends


@dataclass
class Pipeline:
    boundary_model: BoundaryModel | None
    boundary_vocab: Vocabulary | None
    emoji_model: EmojiModel | None
    emoji_vocab: Vocabulary | None
    labels: EmojiLabelSet = field(default_factory=default_labels)
    config: PipelineConfig = field(default_factory=PipelineConfig)
    contractions: ExpansionTable = field(default_factory=default_contractions)
    shortforms: ExpansionTable = field(default_factory=default_shortforms)

    @classmethod
    def load(cls, boundary_path: str | Path, emoji_path: str | Path,
             config: PipelineConfig | None = None) -> "Pipeline":
        bmodel, bvocab = BoundaryModel.load(boundary_path)
        emodel, evocab, labels = EmojiModel.load(emoji_path)
        labels = labels or default_labels()
        if len(labels) != emodel.config.classes:
            raise DataError(f"label set has {len(labels)} entries but the emoji model has "
                            f"{emodel.config.classes} classes")
        return cls(bmodel, bvocab, emodel, evocab, labels, config or PipelineConfig())

    def _check(self) -> None:
        if self.boundary_model is None or self.emoji_model is None:
            raise ModelNotLoaded("both the boundary and emoji models must be loaded")

    def tokens(self, text: str) -> TokenSeq:
        return prepare(text, self.contractions, self.shortforms)

    def boundaries(self, words: Sequence[str]) -> tuple[int, ...]:
        self._check()
        if not words:
            return ()
        return predict_boundaries(self.boundary_model, words, self.boundary_vocab,
                                  self.config.boundary_threshold).positions

    def emoji_probs(self, subparts: Sequence[Sequence[str]]) -> np.ndarray:
        self._check()
        return self.emoji_model.predict_proba(subparts, self.emoji_vocab)

    def annotate(self, text: str) -> AnnotatedText:
        self._check()
        words = self.tokens(text).words
        bounds = self.boundaries(words)
        ends = subpart_ends(bounds, len(words))
        starts = [0] + [e + 1 for e in ends[:-1]]
        subparts = [words[s:e + 1] for s, e in zip(starts, ends)]
        insertions = []
        if subparts:
            probs = self.emoji_probs(subparts)
            for end, p in zip(ends, probs):
                # first maximum wins, matching the stable ranking used elsewhere
                best = int(np.argmax(p))
                if p[best] >= self.config.emoji_threshold:
                    insertions.append(Insertion(end, self.labels[best].emoji, float(p[best])))
        return AnnotatedText(text, tuple(words), tuple(insertions), tuple(bounds))


@dataclass(frozen=True)
class GoldRow:
    text: str
    insertions: tuple[tuple[int, str], ...]


def parse_insertions(field_text: str) -> tuple[tuple[int, str], ...]:
    out = []
    for part in filter(None, (p.strip() for p in field_text.split(","))):
        pos, sep, emoji = part.partition(":")
        if not sep or not emoji:
            raise DataError(f"bad insertion {part!r}; expected pos:emoji")
        if not pos.strip().isdigit():
            raise DataError(f"bad insertion position {pos!r}")
        out.append((int(pos), emoji))
    return tuple(out)


def format_insertions(pairs: Sequence[tuple[int, str]]) -> str:
    return ",".join(f"{i}:{e}" for i, e in pairs)


def read_gold(path: str | Path) -> list[GoldRow]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            text, sep, ann = line.partition("\t")
            if not sep:
                raise DataError(f"{path}:{lineno}: expected text<TAB>pos:emoji[,pos:emoji...]")
            try:
                rows.append(GoldRow(text, parse_insertions(ann)))
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    return rows


def write_gold(path: str | Path, rows: Sequence[GoldRow]) -> None:
    Path(path).write_text("".join(f"{r.text}\t{format_insertions(r.insertions)}\n" for r in rows),
                          encoding="utf-8")


def _pairs(x) -> tuple[tuple[int, str], ...]:
    if isinstance(x, AnnotatedText):
        return x.pairs
    if isinstance(x, GoldRow):
        return x.insertions
    return tuple(x)


def message_correct(pred, gold, labels: EmojiLabelSet) -> bool:
    """Every gold insertion matched at its position by a same-category emoji, and nothing extra."""
    p, g = dict(_pairs(pred)), dict(_pairs(gold))
    if set(p) != set(g):
        return False
    return all(labels.category(p[i]) == labels.category(g[i]) for i in g)


def overall_accuracy(preds: Sequence, golds: Sequence, labels: EmojiLabelSet | None = None) -> float:
    if len(preds) != len(golds):
        raise DataError(f"{len(preds)} predictions for {len(golds)} gold messages")
    if not golds:
        raise DataError("no gold messages")
    labels = labels or default_labels()
    return 100.0 * sum(message_correct(p, g, labels) for p, g in zip(preds, golds)) / len(golds)


BENCH_STAGES = ("boundary", "emoji", "pipeline")


@dataclass(frozen=True)
class BenchReport:
    per_word_ms: dict  # stage -> array of per-word timings in ms
    sizes: dict  # file label -> bytes

    def summary(self) -> list[tuple[str, str, float]]:
        rows = []
        for stage in BENCH_STAGES:
            t = self.per_word_ms[stage]
            rows += [(stage, "mean", float(np.mean(t))), (stage, "median", float(np.median(t))),
                     (stage, "p99", float(np.percentile(t, 99)))]
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["stage", "metric", "value_ms"])
        for stage, metric, v in self.summary():
            w.writerow([stage, metric, f"{v:.4f}"])
        return buf.getvalue()

    def sizes_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["file", "bytes"])
        for k, v in self.sizes.items():
            w.writerow([k, v])
        return buf.getvalue()


def bench(texts: Sequence[str], pipeline: Pipeline, warmup: int = 100, iters: int = 1000,
          files: dict | None = None) -> BenchReport:
    """Single-threaded per-word wall time for each stage, cycling through ``texts``."""
    pipeline._check()
    prepared = [pipeline.tokens(t).words for t in texts]
    keep = [i for i, w in enumerate(prepared) if w]
    if not keep:
        raise DataError("bench needs at least one non-empty text")
    texts = [texts[i] for i in keep]
    prepared = [prepared[i] for i in keep]
    subparts = []
    for w in prepared:
        ends = subpart_ends(pipeline.boundaries(w), len(w))
        starts = [0] + [e + 1 for e in ends[:-1]]
        subparts.append([w[s:e + 1] for s, e in zip(starts, ends)])

    stages = {
        "boundary": lambda k: pipeline.boundaries(prepared[k]),
        "emoji": lambda k: pipeline.emoji_probs(subparts[k]),
        "pipeline": lambda k: pipeline.annotate(texts[k]),
    }
    timings = {}
    for stage, fn in stages.items():
        for i in range(warmup):
            fn(i % len(texts))
        out = np.empty(iters)
        for i in range(iters):
            k = i % len(texts)
            t0 = time.perf_counter()
            fn(k)
            out[i] = (time.perf_counter() - t0) * 1000.0 / len(prepared[k])
        timings[stage] = out
    sizes = {k: os.path.getsize(v) for k, v in (files or {}).items()}
    return BenchReport(timings, sizes)
