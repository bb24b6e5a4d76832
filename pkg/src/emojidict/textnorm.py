"""Tokenization and normalization of transcribed text.

Dictation output is lowercased, contractions are expanded to full words,
digits and symbols are stripped, and chat short forms ("gn") are expanded.
Trailing punctuation is kept as a token attribute so written corpora can be
turned into boundary labels; it never becomes a token of its own.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable

_APOSTROPHES = {"’": "'", "‘": "'", "ʼ": "'", "`": "'"}


@dataclass(frozen=True)
class Token:
    surface: str
    source_span: tuple[int, int]
    punct: str = ""  # punctuation that followed the word in the raw text

    def __post_init__(self):
        if not self.surface:
            raise ValueError("token surface must be non-empty")
        if not self.source_span[0] < self.source_span[1]:
            raise ValueError(f"bad source span {self.source_span}")


@dataclass(frozen=True)
class TokenSeq:
    tokens: tuple[Token, ...] = ()
    original: str = ""

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    @property
    def words(self) -> list[str]:
        return [t.surface for t in self.tokens]

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "TokenSeq":
        """Build a sequence from already-split words (spans refer to the space-joined text)."""
        tokens, pos = [], 0
        for w in words:
            tokens.append(Token(w, (pos, pos + len(w))))
            pos += len(w) + 1
        return cls(tuple(tokens), " ".join(t.surface for t in tokens))


@dataclass(frozen=True)
class ExpansionTable:
    entries: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for key, words in self.entries.items():
            if key != key.lower():
                raise ValueError(f"expansion key {key!r} is not lowercase")
            if not words:
                raise ValueError(f"empty expansion for {key!r}")
            if words == (key,):
                raise ValueError(f"{key!r} maps to itself")
            for w in words:
                if not w.isalpha() or w != w.lower():
                    raise ValueError(f"expansion word {w!r} for {key!r} is not a lowercase word")
                # keeps normalize() idempotent
                if w in self.entries:
                    raise ValueError(f"expansion of {key!r} produces another key {w!r}")

    def __contains__(self, key):
        return key in self.entries

    def __getitem__(self, key):
        return self.entries[key]

    def __len__(self):
        return len(self.entries)

    @classmethod
    def parse(cls, text: str) -> "ExpansionTable":
        entries = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "\t" not in line:
                raise ValueError(f"line {lineno}: expected 'short<TAB>expansion', got {raw!r}")
            short, expansion = line.split("\t", 1)
            entries[_fold_apostrophes(short.strip())] = tuple(expansion.split())
        return cls(entries)

    @classmethod
    def load(cls, path: str | Path) -> "ExpansionTable":
        return cls.parse(Path(path).read_text(encoding="utf-8"))


def _fold_apostrophes(s: str) -> str:
    for k, v in _APOSTROPHES.items():
        s = s.replace(k, v)
    return s


def _is_punct(ch: str) -> bool:
    return ch != "'" and unicodedata.category(ch).startswith("P")


def default_contractions() -> ExpansionTable:
    return ExpansionTable.parse(resources.files("emojidict.data").joinpath("contractions.tsv").read_text("utf-8"))


def default_shortforms() -> ExpansionTable:
    return ExpansionTable.parse(resources.files("emojidict.data").joinpath("shortforms.tsv").read_text("utf-8"))


def tokenize(text: str) -> TokenSeq:
    """Split on whitespace, lowercase, and peel punctuation off word edges.

    Punctuation-only chunks are folded into the previous token's ``punct``.
    """
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        chunk = _fold_apostrophes(text[i:j])
        start, end = 0, len(chunk)
        while start < end and _is_punct(chunk[start]):
            start += 1
        while end > start and _is_punct(chunk[end - 1]):
            end -= 1
        trailing = chunk[end:]
        if start == end:
            if tokens:
                tokens[-1] = replace(tokens[-1], punct=tokens[-1].punct + chunk)
        else:
            tokens.append(Token(chunk[start:end].lower(), (i + start, i + end), trailing))
        i = j
    return TokenSeq(tuple(tokens), text)


def _expand_token(tok: Token, words: tuple[str, ...]) -> list[Token]:
    # expanded words share the span of the token they came from
    out = [Token(w, tok.source_span) for w in words]
    out[-1] = replace(out[-1], punct=tok.punct)
    return out


def normalize(seq: TokenSeq, contractions: ExpansionTable | None = None) -> TokenSeq:
    """Expand contractions and strip digits/symbols; drop tokens left empty.

    Lookup tries the word with apostrophes first ("it's") and then the
    apostrophe-free spelling dictation engines emit ("dont"). Punctuation
    attached to a dropped token moves to the preceding kept token.
    """
    if contractions is None:
        contractions = default_contractions()
    out: list[Token] = []
    for tok in seq.tokens:
        with_apos = "".join(ch for ch in tok.surface if ch == "'" or ch.isalpha())
        bare = with_apos.replace("'", "")
        if with_apos in contractions:
            new = _expand_token(tok, contractions[with_apos])
        elif bare in contractions:
            new = _expand_token(tok, contractions[bare])
        elif bare:
            new = [Token(bare.lower(), tok.source_span, tok.punct)]
        else:
            if out:
                out[-1] = replace(out[-1], punct=out[-1].punct + tok.punct)
            continue
        out.extend(new)
    return TokenSeq(tuple(out), seq.original)


def expand_shortforms(seq: TokenSeq, table: ExpansionTable | None = None) -> TokenSeq:
    """Replace whole-token chat short forms by their expansions in one left-to-right pass."""
    if table is None:
        table = default_shortforms()
    out: list[Token] = []
    for tok in seq.tokens:
        if tok.surface in table:
            out.extend(_expand_token(tok, table[tok.surface]))
        else:
            out.append(tok)
    return TokenSeq(tuple(out), seq.original)


def prepare(text: str, contractions: ExpansionTable | None = None,
            shortforms: ExpansionTable | None = None) -> TokenSeq:
    """Full dictation preprocessing: tokenize, normalize, expand short forms."""
    return expand_shortforms(normalize(tokenize(text), contractions), shortforms)
