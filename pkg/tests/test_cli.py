import subprocess
import sys

import pytest

from emojidict import cli
from emojidict.emoji import write_emoji_data
from emojidict.synth import SCENARIOS, emoji_rows, trigger_corpus

SMALL_B = ["--emb-dim", "8", "--filters", "16", "--epochs", "3"]
SMALL_E = ["--word-emb", "4", "--char-emb", "4", "--kernels", "1:2,2:2", "--lstm1", "8", "--lstm2", "8",
           "--att-dim", "4", "--fused-dim", "8", "--concat-dim", "24", "--epochs", "2"]


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "corpus.txt").write_text("\n".join(trigger_corpus(40, seed=1)) + "\n", encoding="utf-8")
    write_emoji_data(d / "emoji.tsv", emoji_rows(80, seed=2))
    return d


@pytest.fixture(scope="module")
def small_models(corpus):
    b, e = corpus / "b.vmw", corpus / "e.vmw"
    assert cli.main(["train-boundary", str(corpus / "corpus.txt"), "--out", str(b), *SMALL_B]) == 0
    assert cli.main(["train-emoji", str(corpus / "emoji.tsv"), "--out", str(e), *SMALL_E]) == 0
    return b, e


def test_params_prints_one_integer(capsys):
    code, out, _ = run(capsys, "params")
    assert code == 0 and out == "1220830\n"
    code, out, _ = run(capsys, "params", "--model", "boundary")
    assert out == f"{20000 * 50 + 3 * 50 * 512 + 512 + 513}\n"


def test_params_of_a_weight_file(capsys, small_models):
    code, out, _ = run(capsys, "params", small_models[0])
    assert code == 0 and int(out) > 0


def test_usage_errors_exit_1(capsys, tmp_path):
    assert run(capsys, "no-such-command")[0] == 1
    assert run(capsys, "annotate", "--text", "hi")[0] == 1  # missing weights
    (tmp_path / "bad.cfg").write_text("not_a_key = 3\n", encoding="utf-8")
    assert run(capsys, "params", "--config", tmp_path / "bad.cfg")[0] == 1
    assert run(capsys, "train-boundary", tmp_path / "x.txt")[0] == 1  # no --out


def test_data_errors_exit_2(capsys, tmp_path):
    (tmp_path / "junk.vmw").write_bytes(b"not a weight file")
    assert run(capsys, "params", tmp_path / "junk.vmw")[0] == 2
    assert run(capsys, "eval-pipeline", tmp_path / "missing.tsv", "--pred", tmp_path / "missing.tsv")[0] == 2
    code, _, err = run(capsys, "params", "--word-emb", "20")
    assert code == 2 and "fused" in err


def test_config_file_then_flags(capsys, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# shrink it\nvocab_size = 100\nlstm1 = 64\nconcat_dim = None\n", encoding="utf-8")
    _, from_file, _ = run(capsys, "params", "--config", cfg)
    _, overridden, _ = run(capsys, "params", "--config", cfg, "--vocab-size", "200")
    assert int(overridden) - int(from_file) == 100 * 16


def test_annotate_empty_text(capsys, small_models):
    b, e = small_models
    code, out, _ = run(capsys, "annotate", "--boundary", b, "--emoji", e, "--text", "")
    assert code == 0 and out == ""


def test_annotate_keeps_words_and_is_deterministic(capsys, small_models):
    b, e = small_models
    text = SCENARIOS[0][0]
    args = ("annotate", "--boundary", b, "--emoji", e, "--text", text, "--emoji-threshold", "0", "--tsv")
    code, first, _ = run(capsys, *args)
    assert code == 0 and first == run(capsys, *args)[1]
    rendered, pairs = first.rstrip("\n").split("\t")
    assert [w for w in rendered.split() if w.isascii()] == text.split()
    assert pairs.endswith(f"{len(text.split()) - 1}:" + pairs.rsplit(":", 1)[1])


def test_bench_emits_nine_metric_rows(capsys, small_models, tmp_path):
    b, e = small_models
    (tmp_path / "t.tsv").write_text("i came home late\t3:🏢\nhello there\n", encoding="utf-8")
    code, out, err = run(capsys, "bench", tmp_path / "t.tsv", "--boundary", b, "--emoji", e,
                         "--warmup", "1", "--iters", "4")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "stage,metric,value_ms" and len(lines) == 10
    assert "size boundary" in err and "size emoji" in err


def test_quantize_shrinks_and_keeps_sidecar(capsys, small_models, tmp_path):
    b, _ = small_models
    q = tmp_path / "q.vmw"
    assert run(capsys, "quantize", b, "--out", q)[0] == 0
    assert q.stat().st_size < b.stat().st_size
    assert (tmp_path / "q.vmw.json").read_text() == b.with_name(b.name + ".json").read_text()


def test_build_data_then_train_from_cache(capsys, corpus, tmp_path):
    out = tmp_path / "data"
    assert run(capsys, "build-data", corpus / "corpus.txt", "--out", out)[0] == 0
    assert {p.name for p in out.iterdir()} == {"samples.vmds", "vocab.txt", "stats.csv"}
    assert (out / "stats.csv").read_text().splitlines()[0] == "N,M,total"
    assert run(capsys, "train-boundary", out, "--out", tmp_path / "b.vmw", *SMALL_B)[0] == 0
    code, _, err = run(capsys, "train-boundary", out, "--out", tmp_path / "b2.vmw", "--window", "5", *SMALL_B)
    assert code == 2 and "window" in err


def test_eval_commands(capsys, corpus, small_models):
    b, e = small_models
    code, out, _ = run(capsys, "eval-boundary", b, corpus / "corpus.txt")
    assert code == 0 and out.splitlines()[0] == "metric,value" and len(out.splitlines()) == 6
    code, out, _ = run(capsys, "eval-emoji", e, corpus / "emoji.tsv")
    assert code == 0 and [l.split(",")[0] for l in out.splitlines()[1:]] == ["top1", "top5", "f1_weighted"]


def test_eval_pipeline_on_shipped_fixtures(capsys):
    from importlib import resources
    data = resources.files("emojidict") / "data"
    code, out, _ = run(capsys, "eval-pipeline", data / "gold_fixture.tsv", "--pred", data / "pred_fixture.tsv")
    assert code == 0 and float(out) == 94.0


def test_sweep_window(capsys, corpus):
    code, out, _ = run(capsys, "sweep-window", corpus / "corpus.txt", "--sizes", "2,4", *SMALL_B)
    assert code == 0 and [l.split(",")[0] for l in out.splitlines()] == ["window", "2", "4"]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "emojidict", "params"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == "1220830\n"
