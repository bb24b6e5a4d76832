"""Closed-class trigger tagging and intra-sentence boundary candidates.

Only five Penn Treebank tags matter for splitting a sentence into emoji-worthy
sub-parts (CC, IN, WP, WP$, WDT). All five are closed word classes, so a
word list with a handful of ordered disambiguation rules stands in for a full
statistical tagger.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

from .textnorm import TokenSeq


class TriggerTag(str, enum.Enum):
    CC = "CC"
    IN = "IN"
    WP = "WP"
    WPS = "WP$"
    WDT = "WDT"
    NONE = "NONE"

    @classmethod
    def parse(cls, text: str) -> "TriggerTag":
        text = text.strip().upper()
        if text == "WPS":
            return cls.WPS
        return cls(text)


# words that never count as "noun-like" when resolving "that"
FUNCTION_WORDS = frozenset("""
a an the this these those my your his her its our their some any no every each
i you he she it we they me him us them myself yourself itself ourselves themselves
is am are was were be been being do does did have has had will would shall should
can could may might must not to of in on at by for with from about into over under
up down out off than as very too also just only then there here now
""".split())

# tokens that can open a clause; used to tell conjunction "so"/"yet" from adverbs
CLAUSE_OPENERS = frozenset("""
i you he she it we they this that these those there the a an my your his her our their
what who which whose when where why how let lets please
""".split())

# Rule signature: (words, index, candidate kinds, lexicon) -> resolved tag, or None to defer.
Rule = Callable[[Sequence[str], int, frozenset, "TriggerLexicon"], "TriggerTag | None"]


def _rule_that(words, i, kinds, lex):
    if words[i] != "that":
        return None
    prev = words[i - 1] if i > 0 else None
    if prev is not None and prev not in FUNCTION_WORDS and prev not in lex.word_to_kinds:
        return TriggerTag.WDT
    return TriggerTag.IN


def _rule_which(words, i, kinds, lex):
    return TriggerTag.WDT if words[i] == "which" else None


def _rule_adverbial(words, i, kinds, lex):
    # "so badly", "not yet": adverbs, not conjunctions
    if words[i] not in ("so", "yet"):
        return None
    nxt = words[i + 1] if i + 1 < len(words) else None
    if nxt is None or nxt not in CLAUSE_OPENERS:
        return TriggerTag.NONE
    return None


def _rule_tie(words, i, kinds, lex):
    if len(kinds) == 1:
        return next(iter(kinds))
    if TriggerTag.IN in kinds:
        return TriggerTag.IN
    for tag in (TriggerTag.CC, TriggerTag.WP, TriggerTag.WPS, TriggerTag.WDT):
        if tag in kinds:
            return tag
    return TriggerTag.NONE


DEFAULT_RULES: tuple[Rule, ...] = (_rule_adverbial, _rule_that, _rule_which, _rule_tie)


@dataclass(frozen=True)
class TriggerLexicon:
    word_to_kinds: dict[str, frozenset]
    disambiguation_rules: tuple[Rule, ...] = field(default=DEFAULT_RULES)

    def __post_init__(self):
        for word, kinds in self.word_to_kinds.items():
            if not kinds:
                raise ValueError(f"lexicon word {word!r} has no kinds")
            if TriggerTag.NONE in kinds:
                raise ValueError(f"lexicon word {word!r} lists NONE")

    @classmethod
    def parse(cls, text: str, rules: tuple[Rule, ...] = DEFAULT_RULES) -> "TriggerLexicon":
        table: dict[str, frozenset] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                word, kinds = line.split("\t")
            except ValueError:
                raise ValueError(f"line {lineno}: expected 'word<TAB>KIND[,KIND...]', got {raw!r}") from None
            table[word.strip().lower()] = frozenset(TriggerTag.parse(k) for k in kinds.split(","))
        return cls(table, rules)

    @classmethod
    def load(cls, path: str | Path) -> "TriggerLexicon":
        return cls.parse(Path(path).read_text(encoding="utf-8"))


_DEFAULT_LEXICON: TriggerLexicon | None = None


def default_lexicon() -> TriggerLexicon:
    global _DEFAULT_LEXICON
    if _DEFAULT_LEXICON is None:
        text = resources.files("emojidict.data").joinpath("triggers.tsv").read_text("utf-8")
        _DEFAULT_LEXICON = TriggerLexicon.parse(text)
    return _DEFAULT_LEXICON


@dataclass(frozen=True)
class BoundarySet:
    """After-token indices where an emoji may be inserted."""

    positions: tuple[int, ...]
    n_tokens: int

    def __post_init__(self):
        ps = self.positions
        if any(b <= a for a, b in zip(ps, ps[1:])):
            raise ValueError("boundary positions must be strictly increasing")
        if ps and (ps[0] < 0 or ps[-1] >= self.n_tokens):
            raise ValueError(f"boundary position out of range for {self.n_tokens} tokens")

    @classmethod
    def of(cls, positions, n_tokens: int) -> "BoundarySet":
        return cls(tuple(sorted(set(int(p) for p in positions))), n_tokens)

    def __contains__(self, p):
        return p in self.positions

    def __iter__(self):
        return iter(self.positions)

    def __len__(self):
        return len(self.positions)


def _words(seq) -> list[str]:
    return seq.words if isinstance(seq, TokenSeq) else list(seq)


def tag(seq: TokenSeq | Sequence[str], lex: TriggerLexicon | None = None) -> list[TriggerTag]:
    lex = lex or default_lexicon()
    words = _words(seq)
    tags = []
    for i, w in enumerate(words):
        kinds = lex.word_to_kinds.get(w)
        if not kinds:
            tags.append(TriggerTag.NONE)
            continue
        resolved = None
        for rule in lex.disambiguation_rules:
            resolved = rule(words, i, kinds, lex)
            if resolved is not None:
                break
        tags.append(resolved if resolved is not None else TriggerTag.IN)
    return tags


def mark_subpart_boundaries(seq: TokenSeq | Sequence[str], tags: Sequence[TriggerTag]) -> BoundarySet:
    """A trigger at index i > 0 licenses a boundary after token i-1."""
    n = len(_words(seq))
    if len(tags) != n:
        raise ValueError(f"{len(tags)} tags for {n} tokens")
    return BoundarySet.of((i - 1 for i, t in enumerate(tags) if t is not TriggerTag.NONE and i > 0), n)
