"""Shared fixtures and the acceptance-criterion summary."""

from __future__ import annotations

import numpy as np
import pytest

from emojidict import boundary as bnd
from emojidict import emoji as emo
from emojidict import synth
from emojidict.dataset import build_vocab, compile_samples, label_corpus
from emojidict.pipeline import Pipeline

CRITERIA = {
    1: "gradient correctness",
    2: "windowing oracle",
    3: "loss semantics",
    4: "boundary capacity",
    5: "emoji capacity",
    6: "parameter reduction",
    7: "footprint",
    8: "latency budget",
    9: "end-to-end fixtures",
    10: "determinism",
}

_outcomes: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _outcomes.setdefault(marker.args[0], []).append(rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, name in CRITERIA.items():
        if n not in _outcomes:
            status = "NOT RUN"
        else:
            status = "PASS" if all(_outcomes[n]) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d} ({name}): {status}")


ALL_FAMILIES = tuple(synth.FAMILIES)


@pytest.fixture(scope="session")
def fixture_corpus():
    return synth.trigger_corpus(400, seed=7, names=ALL_FAMILIES)


@pytest.fixture(scope="session")
def fixture_boundary(fixture_corpus):
    """CNN boundary model trained on the full-family synthetic corpus."""
    labeled = label_corpus(fixture_corpus)
    vocab = build_vocab((w for s in labeled for w in s.words), 20000)
    samples = compile_samples(labeled, vocab)
    model = bnd.build(bnd.BoundaryConfig(vocab_size=vocab.size), seed=42)
    bnd.train(model, samples, hyper=bnd.TrainHyper(epochs=15, seed=42))
    return model, vocab, samples


@pytest.fixture(scope="session")
def fixture_emoji():
    """Full-width ACA model trained on keyword-family rows covering every family."""
    rows = synth.emoji_rows(1000, seed=11, names=ALL_FAMILIES)
    data = [(text.split(), lab) for lab, text in rows]
    vocab = build_vocab((w for ws, _ in data for w in ws), 60000)
    model = emo.build_aca(emo.EmojiConfig(vocab_size=vocab.size), seed=42)
    emo.train(model, data, vocab, emo.EmojiHyper(epochs=15, seed=42))
    return model, vocab, data


@pytest.fixture(scope="session")
def fixture_pipeline(fixture_boundary, fixture_emoji):
    bmodel, bvocab, _ = fixture_boundary
    emodel, evocab, _ = fixture_emoji
    return Pipeline(bmodel, bvocab, emodel, evocab)


@pytest.fixture(scope="session")
def fixture_weights(tmp_path_factory, fixture_boundary, fixture_emoji):
    d = tmp_path_factory.mktemp("weights")
    bmodel, bvocab, _ = fixture_boundary
    emodel, evocab, _ = fixture_emoji
    bmodel.save(d / "boundary.vmw", bvocab)
    emodel.save(d / "emoji.vmw", evocab, emo.default_labels())
    return d / "boundary.vmw", d / "emoji.vmw"


@pytest.fixture
def rng():
    return np.random.default_rng(0)
