import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.metrics import f1_score

from emojidict import emoji as emo
from emojidict.dataset import build_vocab
from emojidict.errors import DataError, EmptyEvalSet, EmptySubpart, InvalidConfig
from emojidict.nn import cross_entropy, grad_check

TINY = emo.EmojiConfig(vocab_size=12, word_emb=3, char_emb=2, kernels={1: 2, 2: 2}, lstm1=4, lstm2=3, att_dim=3,
                       classes=5, fused_dim=None, concat_dim=None)
TINY_VOCAB = build_vocab("cake rain office pizza sleep".split())


def test_label_set_shape():
    labels = emo.default_labels()
    assert len(labels) == 64
    assert len({l.emoji for l in labels}) == 64
    assert labels.category("🎂") == labels.category("🎉") == "birthday"
    assert labels.category("🙄") != labels.category("😊")
    assert labels[labels.index("🏢")].emoji == "🏢"


@pytest.mark.parametrize("text", ["😀\thappy", "😀\thappy\tgrin\n😀\thappy\tgrin", "😀\t\tgrin"])
def test_label_set_rejects_bad_files(text):
    with pytest.raises(DataError):
        emo.EmojiLabelSet.parse(text, expected=None)


def test_label_set_size_is_enforced():
    with pytest.raises(DataError):
        emo.EmojiLabelSet.parse("😀\thappy\tgrin\n")


def test_aca_dimension_invariants():
    c = emo.EmojiConfig()
    assert c.word_emb + c.char_dim == 46
    m = emo.build_aca(dataclasses.replace(c, vocab_size=100))
    assert m.concat_width == 46 + 128 + 128 == 302
    with pytest.raises(InvalidConfig):
        emo.build_aca(emo.EmojiConfig(word_emb=20))
    with pytest.raises(InvalidConfig):
        emo.build_aca(emo.EmojiConfig(lstm2=64))


def test_full_aca_is_small_next_to_deepmoji():
    n = emo.build_aca().param_count()
    assert n <= 0.25 * emo.DEEPMOJI_PARAMS
    assert n == 1_220_830  # frozen from the layer shapes below
    shapes = (60000 * 16 + 28 * 8 + (8 * 5 + 5) + (16 * 10 + 10) + (24 * 15 + 15) + (16 + 1 + 30 + 1)
              + (46 * 512 + 128 * 512 + 512) + (128 * 512 + 128 * 512 + 512) + (302 * 64 + 64) + (302 * 64 + 64))
    assert n == shapes


@pytest.mark.parametrize("kind", emo.KINDS)
def test_model_grad_check(kind):
    m = emo.EmojiModel(dataclasses.replace(TINY, kind=kind), seed=1)
    batch = emo.encode_batch([["cake", "zzq"], ["rain"]], TINY_VOCAB)
    y = np.array([2, 4])

    def fn():
        m.store.zero_grad()
        z, cache = m.forward(batch)
        loss, dz = cross_entropy(z, y)
        m.backward(dz, cache)
        return loss
    assert grad_check(fn, m.store) <= 1e-3


def test_single_token_gives_a_distribution():
    m = emo.build_aca(dataclasses.replace(emo.EmojiConfig(), vocab_size=10))
    p = m.predict_proba([["cake"]], build_vocab(["cake"]))
    assert p.shape == (1, 64) and abs(p.sum() - 1) < 1e-9 and np.all(p > 0)


def test_encode_batch_pads_and_truncates():
    b = emo.encode_batch([["a" * 30, "b"], ["c"]], TINY_VOCAB, max_word_len=24)
    assert b.chars.shape == (2, 2, 24)
    assert b.lengths.tolist() == [[24, 1], [1, 0]]
    assert b.mask.tolist() == [[1, 1], [1, 0]]
    assert emo.char_ids("az!", 5) == [2, 27, 1]


def test_predict_topk_contract():
    m = emo.EmojiModel(TINY, seed=0)
    full = emo.predict_topk(m, ["cake"], TINY_VOCAB, k=5)
    assert sorted(full.ranked) == list(range(5))
    top1 = emo.predict_topk(m, ["cake"], TINY_VOCAB, k=1)
    assert top1.ranked[0] == full.ranked[0] == int(np.argmax(full.probabilities))
    with pytest.raises(EmptySubpart):
        emo.predict_topk(m, [], TINY_VOCAB)


def test_full_ranking_is_a_permutation_of_all_labels():
    m = emo.build_aca(dataclasses.replace(emo.EmojiConfig(), vocab_size=10))
    d = emo.predict_topk(m, ["hello"], build_vocab(["hello"]), k=64)
    assert sorted(d.ranked) == list(range(64))
    assert d.top(5)[0] == d.ranked[0]


def test_ranking_breaks_ties_by_label_order():
    d = emo.EmojiDistribution.from_probs(np.array([0.2, 0.4, 0.4]))
    assert d.ranked == (1, 2, 0)


def test_metrics_perfect_and_prefix():
    probs = np.eye(6)[[0, 3, 5, 1]]
    m = emo.metrics_from_probs(probs, np.array([0, 3, 5, 1]))
    assert m.top1 == m.top5 == m.f1 == 100.0


def test_uniform_random_model_hits_chance():
    rng = np.random.default_rng(0)
    n = 10_000
    y = np.tile(np.arange(64), n // 64 + 1)[:n]
    m = emo.metrics_from_probs(rng.random((n, 64)), y)
    assert abs(m.top1 - 100 / 64) <= 2.0
    assert abs(m.top5 - 500 / 64) <= 2.0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 60), st.integers(2, 12))
def test_top5_never_below_top1_and_f1_matches_sklearn(seed, n, k):
    rng = np.random.default_rng(seed)
    probs = rng.random((n, k))
    y = rng.integers(0, k, size=n)
    m = emo.metrics_from_probs(probs, y)
    assert m.top5 >= m.top1
    pred = np.argsort(-probs, axis=1, kind="stable")[:, 0]
    assert m.f1 == pytest.approx(100 * f1_score(y, pred, average="weighted", labels=np.unique(y)), abs=1e-9)


def test_evaluate_needs_data():
    with pytest.raises(EmptyEvalSet):
        emo.evaluate(emo.EmojiModel(TINY), [], TINY_VOCAB)


def test_train_is_deterministic_and_logs_top5():
    data = [(["cake"], 0), (["rain"], 1), (["office", "pizza"], 2), (["sleep"], 3)]
    runs = []
    for _ in range(2):
        m = emo.EmojiModel(TINY, seed=4)
        hist = emo.train(m, data, TINY_VOCAB, emo.EmojiHyper(epochs=3, batch_size=2, seed=4))
        runs.append(m.store.state())
    assert all(h["top5"] >= h["top1"] for h in hist)
    assert all(np.array_equal(runs[0][k], runs[1][k]) for k in runs[0])
    with pytest.raises(DataError):
        emo.train(emo.EmojiModel(TINY), [(["cake"], 9)], TINY_VOCAB)
    with pytest.raises(InvalidConfig):
        emo.train(emo.EmojiModel(TINY), data, TINY_VOCAB, emo.EmojiHyper(word_dropout=1.0))


def test_save_load_roundtrip(tmp_path):
    m = emo.EmojiModel(TINY, seed=2)
    labels = emo.EmojiLabelSet.parse("a\tx\tone\nb\tx\ttwo\nc\ty\tthree\nd\ty\tfour\ne\tz\tfive\n", expected=5)
    m.save(tmp_path / "e.vmw", TINY_VOCAB, labels)
    m2, v2, l2 = emo.EmojiModel.load(tmp_path / "e.vmw")
    assert v2 == TINY_VOCAB and l2 == labels
    toks = [["cake", "rain"]]
    assert np.allclose(m2.predict_proba(toks, v2), m.predict_proba(toks, TINY_VOCAB), atol=1e-5)


def test_emoji_data_file_roundtrip(tmp_path):
    rows = [(3, "i baked a cake"), (0, "hello")]
    emo.write_emoji_data(tmp_path / "d.tsv", rows)
    assert emo.read_emoji_data(tmp_path / "d.tsv") == rows
    (tmp_path / "bad.tsv").write_text("x\thello\n", encoding="utf-8")
    with pytest.raises(DataError):
        emo.read_emoji_data(tmp_path / "bad.tsv")


@pytest.mark.parametrize("kind", ["bow", "lstm_char", "lstm_word"])
def test_baselines_build(kind):
    m = emo.build_baseline(kind, dataclasses.replace(emo.EmojiConfig(), vocab_size=50))
    p = m.predict_proba([["cake", "party"]], build_vocab(["cake"]))
    assert p.shape == (1, 64)
    with pytest.raises(InvalidConfig):
        emo.build_baseline("aca")


def test_misspelled_words_are_read_through_the_char_path(fixture_emoji):
    model, vocab, data = fixture_emoji
    rows = data[:300]
    y = np.array([lab for _, lab in rows])
    garbled = [[w + w[-1] * 2 for w in ws] for ws, _ in rows]
    assert not any(vocab.lookup(w) > 1 for ws in garbled for w in ws)
    top1 = float(np.mean(model.predict_proba(garbled, vocab).argmax(1) == y))
    # every word is out of vocabulary, yet the spelling still beats guessing the commonest label
    assert top1 >= 2 * np.bincount(y).max() / len(y)
    assert np.abs(emo.predict_topk(model, ["birthdayyyy"], vocab).probabilities - 1 / 64).max() > 0.05


def test_char_path_carries_signal(fixture_emoji):
    model, vocab, data = fixture_emoji
    sample = [ws for ws, _ in data[:40]]
    as_unk = [["qqunknownqq"] * len(ws) for ws in sample]
    with_words = model.predict_proba(sample, vocab)
    masked = model.predict_proba([[w + "zz" for w in ws] for ws in sample], vocab)
    # same lengths, every word out of vocabulary: predictions still move with the spelling
    assert np.abs(with_words - masked).max() > 0
    assert np.abs(model.predict_proba(as_unk, vocab) - masked).max() > 1e-3


def test_zeroed_char_path_collapses_oov_inputs(fixture_emoji):
    model, vocab, _ = fixture_emoji
    saved = model.store.state()
    try:
        for name in model.store:
            if name.startswith("char_cnn."):
                model.store[name][...] = 0
        p = model.predict_proba([["xyzzy"], ["plugh"], ["quux", "frob"], ["zork", "blorb"]], vocab)
        assert np.allclose(p[0], p[1]) and np.allclose(p[2], p[3])
    finally:
        model.store.load_state(saved)
