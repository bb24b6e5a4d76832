"""Deterministic synthetic corpora.

A small clause grammar keyed to emoji categories ("families") feeds three
consumers: written documents with punctuation for the boundary model,
``label<TAB>text`` rows for the emoji model, and dictation-style messages with
gold emoji positions for end-to-end checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SUBJECTS = ("i", "we", "you", "they", "he", "she")

CONJUNCTIONS = ("and", "but", "because", "so", "while", "although", "after", "before")

TIMES = ("today", "yesterday", "tonight", "again", "now")


@dataclass(frozen=True)
class Family:
    name: str
    emoji: str
    clauses: tuple[str, ...]  # "{S}" is replaced by a subject


FAMILIES: dict[str, Family] = {f.name: f for f in (
    Family("office", "🏢", (
        "{S} came late to office", "{S} went to the office", "{S} had a long meeting with the client",
        "{S} finished the report for the boss", "{S} have an important meeting with my client",
        "{S} worked late at the office", "my boss gave me extra work", "{S} missed the office bus",
    )),
    Family("rain", "🌧️", (
        "it was raining", "{S} got wet in the rain", "{S} forgot my umbrella", "it is raining heavily",
        "{S} saw a huge storm", "the rain did not stop", "{S} heard the thunder", "it rained all day",
    )),
    Family("birthday", "🎂", (
        "{S} baked a birthday cake", "today is my birthday", "{S} went to a birthday party",
        "{S} got a birthday gift", "yesterday was my birthday", "{S} blew out the candles",
        "the birthday cake was huge", "{S} sang happy birthday",
    )),
    Family("food", "🍕", (
        "{S} ordered pizza", "{S} had a burger for lunch", "the pizza was delicious",
        "{S} cooked pasta for dinner", "{S} ate a huge lunch", "the food was tasty",
        "{S} had ordered pizza for lunch", "{S} ate noodles for dinner",
    )),
    Family("love", "❤️", (
        "{S} love my family", "{S} miss my girlfriend", "{S} adore my husband", "{S} love my wife",
        "my heart belongs to my partner", "{S} kissed my boyfriend", "{S} love my parents",
        "{S} hugged my mother",
    )),
    Family("sleep", "😴", (
        "{S} feel sleepy", "{S} need some sleep", "{S} went to bed early", "{S} could not sleep last night",
        "{S} took a long nap", "{S} am going to bed", "{S} want to sleep", "{S} am yawning",
    )),
    Family("travel", "✈️", (
        "{S} booked a flight to paris", "{S} are going on a trip", "{S} reached the airport",
        "{S} packed the bags for the vacation", "the flight was delayed", "{S} landed in london",
        "{S} boarded the plane", "{S} visited the beach on holiday",
    )),
    Family("sad", "😢", (
        "{S} feel really sad", "{S} lost my phone", "{S} failed the exam", "{S} miss my old friends",
        "{S} cried all night", "{S} feel lonely", "my dog died", "{S} got bad news",
    )),
    Family("shopping", "🛍️", (
        "{S} saw one amazing dress", "{S} wanted to buy the dress", "{S} went shopping at the mall",
        "{S} bought new shoes", "the dress was expensive", "{S} need a new jacket",
    )),
    Family("happy", "😊", (
        "{S} am really happy", "{S} feel great", "the day was wonderful", "{S} am so glad",
        "{S} had a lovely time", "{S} passed the exam",
    )),
    Family("sorry", "🙏", (
        "{S} am really sorry", "{S} apologize for the delay", "please forgive me", "{S} regret the mistake",
        "{S} can not make it", "{S} will definitely come next time",
    )),
    Family("drink", "🍺", (
        "{S} feel like going out for a drink", "{S} had a cold beer", "{S} want a glass of wine",
        "the bar was crowded", "{S} drank some whisky",
    )),
)}

# eight families used by the capacity checks
TOY_FAMILIES = ("office", "rain", "birthday", "food", "love", "sleep", "travel", "sad")


def _clause(rng: np.random.Generator, family: Family, time_prob: float = 0.25) -> list[str]:
    template = family.clauses[rng.integers(len(family.clauses))]
    words = template.replace("{S}", SUBJECTS[rng.integers(len(SUBJECTS))]).split()
    if rng.random() < time_prob:
        words.append(TIMES[rng.integers(len(TIMES))])
    return words


def _family(rng, names) -> Family:
    return FAMILIES[names[rng.integers(len(names))]]


def written_sentence(rng: np.random.Generator, names=TOY_FAMILIES, conj_prob: float = 0.5) -> str:
    words = _clause(rng, _family(rng, names))
    if rng.random() < conj_prob:
        words += [CONJUNCTIONS[rng.integers(len(CONJUNCTIONS))]] + _clause(rng, _family(rng, names))
    end = ("." * 6 + "!?")[rng.integers(8)]
    words[0] = words[0].capitalize()
    return " ".join(words) + end


def trigger_corpus(n_sentences: int = 200, seed: int = 7, names=TOY_FAMILIES,
                   sentences_per_doc: tuple[int, int] = (3, 6)) -> list[str]:
    """Documents (one per string) built from ``n_sentences`` punctuated sentences."""
    rng = np.random.default_rng(seed)
    docs, left = [], n_sentences
    while left > 0:
        k = min(left, int(rng.integers(sentences_per_doc[0], sentences_per_doc[1] + 1)))
        docs.append(" ".join(written_sentence(rng, names) for _ in range(k)))
        left -= k
    return docs


def emoji_rows(n: int = 500, seed: int = 11, names=TOY_FAMILIES, labels=None,
               conj_prob: float = 0.3) -> list[tuple[int, str]]:
    """``(label index, text)`` rows; label indices refer to ``labels`` (default label set).

    Some rows open with a conjunction, since a sub-part cut at a trigger keeps it.
    """
    from .emoji import default_labels

    labels = labels or default_labels()
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n):
        fam = _family(rng, names)
        words = _clause(rng, fam)
        if rng.random() < conj_prob:
            words.insert(0, CONJUNCTIONS[rng.integers(len(CONJUNCTIONS))])
        rows.append((labels.index(fam.emoji), " ".join(words)))
    return rows


def dictation_message(rng: np.random.Generator, names, n_clauses: int) -> tuple[str, list[tuple[int, str]]]:
    """Unpunctuated message plus gold (after-token index, emoji) pairs at each clause end."""
    words: list[str] = []
    gold = []
    for c in range(n_clauses):
        if c and rng.random() < 0.5:
            words.append(CONJUNCTIONS[rng.integers(len(CONJUNCTIONS))])
        fam = _family(rng, names)
        words += _clause(rng, fam, time_prob=0.15)
        gold.append((len(words) - 1, fam.emoji))
    return " ".join(words), gold


# Table-style scenarios: two phrasings of one message, a sarcastic line and an ungrammatical one
SCENARIOS = (
    ("because it was raining i came late to office", ((3, "🌧️"), (8, "🏢"))),
    ("i came late to office because its was raining", ((4, "🏢"), (8, "🌧️"))),
    ("do you really think i am happy", ((6, "🙄"),)),
    ("yesterday is mine birthday", ((3, "🎂"),)),
)


def gold_messages(n: int = 46, seed: int = 23, names=tuple(FAMILIES)) -> list[tuple[str, tuple]]:
    """``n`` generated dictation messages with gold insertions, followed by the fixed scenarios."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        text, gold = dictation_message(rng, names, int(rng.integers(1, 4)))
        out.append((text, tuple(gold)))
    return out + list(SCENARIOS)
