"""Command-line interface.

Every command accepts ``--config FILE`` (``key = value`` lines), ``--seed``,
``--out`` and ``--threads``. Hyperparameters resolve as defaults, then the
config file, then flags. Results go to stdout (or ``--out``), diagnostics to
stderr. Exit codes: 0 success, 1 usage error, 2 data or model error.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from dataclasses import MISSING, fields
from pathlib import Path

from . import boundary as bnd
from . import emoji as emo
from .dataset import (SampleSet, Vocabulary, build_vocab, class_stats, compile_samples, extract_multisentence,
                      label_corpus, read_corpus)
from .errors import DataError, InvalidConfig
from .nn.params import ParamStore, param_count
from .nn.serialize import load_weights, save_weights
from .pipeline import (AnnotatedText, Pipeline, PipelineConfig, bench, format_insertions, overall_accuracy,
                       read_gold, render)
from .textnorm import prepare


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


# ---- configuration ---------------------------------------------------------------------------------------

EXTRA_KEYS = {
    "workers": 1, "held_out": 0.2, "sizes": "2-10", "quantize": False, "multisentence": False,
    "emoji_threshold": 0.3, "boundary_threshold": None, "warmup": 100, "iters": 1000, "model": "emoji",
}


def read_config(path: str | Path) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _coerce(key: str, raw, default, annotation: str = ""):
    if not isinstance(raw, str):
        return raw
    if raw.lower() in ("none", "") and (default is None or "None" in annotation):
        return None
    try:
        if isinstance(default, bool) or "bool" in annotation:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, dict):
            return {int(k): int(v) for k, v in (p.split(":") for p in raw.split(","))}
        if isinstance(default, int) or annotation.startswith("int"):
            return int(raw)
        if isinstance(default, float) or "float" in annotation:
            return float(raw)
    except ValueError:
        raise UsageError(f"bad value for {key}: {raw!r}") from None
    return raw


def _spec(*classes, extras=()) -> dict[str, tuple]:
    """key -> (default, annotation) for the dataclasses and extra keys a command understands."""
    spec = {}
    for cls in classes:
        for f in fields(cls):
            if f.name == "seed":
                continue
            default = f.default if f.default is not MISSING else f.default_factory()
            spec[f.name] = (default, str(f.type))
    for k in extras:
        spec[k] = (EXTRA_KEYS[k], "")
    return spec


ALL_KEYS = set(_spec(bnd.BoundaryConfig, bnd.TrainHyper, emo.EmojiConfig, emo.EmojiHyper, extras=EXTRA_KEYS))


def resolve(args, spec: dict[str, tuple]) -> dict:
    values = {k: d for k, (d, _) in spec.items()}
    if args.config:
        from_file = read_config(args.config)
        unknown = sorted(set(from_file) - ALL_KEYS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        values.update({k: v for k, v in from_file.items() if k in spec})
    for k in spec:
        v = getattr(args, k, None)
        if v is not None:
            values[k] = v
    return {k: _coerce(k, v, spec[k][0], spec[k][1]) for k, v in values.items()}


def _pick(cls, values: dict, **over):
    names = {f.name for f in fields(cls)}
    return cls(**{**{k: v for k, v in values.items() if k in names}, **over})


def _add_keys(p, spec: dict[str, tuple]) -> None:
    for k in spec:
        p.add_argument("--" + k.replace("_", "-"), dest=k, default=None, metavar="V")


# ---- helpers -----------------------------------------------------------------------------------------------

def _write(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _emoji_rows(path) -> list[tuple[list[str], int]]:
    return [(prepare(text).words, lab) for lab, text in emo.read_emoji_data(path)]


def _parse_sizes(raw) -> list[int]:
    sizes = []
    for part in str(raw).split(","):
        lo, sep, hi = part.partition("-")
        sizes += list(range(int(lo), int(hi) + 1)) if sep else [int(lo)]
    return sizes


def _labels(args):
    return emo.EmojiLabelSet.load(args.labels) if getattr(args, "labels", None) else emo.default_labels()


def _pipeline(args, v) -> Pipeline:
    cfg = PipelineConfig(v["emoji_threshold"], v["boundary_threshold"])
    return Pipeline.load(args.boundary, args.emoji, cfg)


# ---- commands ----------------------------------------------------------------------------------------------

def cmd_build_data(args, v):
    out = Path(args.out or "data_out")
    out.mkdir(parents=True, exist_ok=True)
    labeled = label_corpus(read_corpus(args.corpus), workers=v["workers"])
    vocab = build_vocab((w for s in labeled for w in s.words), v["vocab_size"])
    samples = compile_samples(labeled, vocab, v["window"], v["offset"])
    stats = class_stats(samples)
    samples.save(out / "samples.vmds")
    vocab.save(out / "vocab.txt")
    (out / "stats.csv").write_text(f"N,M,total\n{stats.N},{stats.M},{stats.total}\n", encoding="utf-8")
    _log(f"{len(labeled)} documents, {len(samples)} windows, N={stats.N} M={stats.M}, vocab {vocab.size}")


def _boundary_data(path: str, v: dict) -> tuple[SampleSet, Vocabulary]:
    p = Path(path)
    if p.is_dir():
        samples = SampleSet.load(p / "samples.vmds")
        vocab = Vocabulary.load(p / "vocab.txt")
        if (samples.W, samples.offset) != (v["window"], v["offset"]):
            raise InvalidConfig(f"cached samples use window {samples.W}/offset {samples.offset}, "
                                f"config asks for {v['window']}/{v['offset']}")
        return samples, vocab
    labeled = label_corpus(read_corpus(p), workers=v["workers"])
    vocab = build_vocab((w for s in labeled for w in s.words), v["vocab_size"])
    return compile_samples(labeled, vocab, v["window"], v["offset"]), vocab


def cmd_train_boundary(args, v):
    if not args.out:
        raise UsageError("train-boundary needs --out")
    samples, vocab = _boundary_data(args.data, v)
    config = _pick(bnd.BoundaryConfig, v, vocab_size=vocab.size).validate()
    hyper = _pick(bnd.TrainHyper, v, seed=args.seed)
    model = bnd.build(config, args.seed)
    hist = bnd.train(model, samples, class_stats(samples), hyper, _log)
    size = model.save(args.out, vocab, quantized=v["quantize"])
    _log(f"wrote {args.out} ({size} bytes, {model.param_count()} parameters, "
         f"final train accuracy {100 * hist[-1]['accuracy']:.2f}%)")


def cmd_train_emoji(args, v):
    if not args.out:
        raise UsageError("train-emoji needs --out")
    labels = _labels(args)
    data = _emoji_rows(args.data)
    vocab = build_vocab((w for ws, _ in data for w in ws), v["vocab_size"])
    config = _pick(emo.EmojiConfig, v, vocab_size=vocab.size, classes=len(labels))
    if config.kind != "aca":
        config.fused_dim = config.concat_dim = None
    hyper = _pick(emo.EmojiHyper, v, seed=args.seed)
    model = emo.EmojiModel(config.validate(), args.seed)
    hist = emo.train(model, data, vocab, hyper, _log)
    size = model.save(args.out, vocab, labels, quantized=v["quantize"])
    _log(f"wrote {args.out} ({size} bytes, {model.param_count()} parameters, "
         f"final train top-1 {100 * hist[-1]['top1']:.2f}%)")


def cmd_eval_boundary(args, v):
    model, vocab = bnd.BoundaryModel.load(args.weights)
    docs = list(read_corpus(args.corpus))
    eval_set = extract_multisentence(docs) if v["multisentence"] else label_corpus(docs, workers=v["workers"])
    _write(args, bnd.evaluate(model, eval_set, vocab, v["boundary_threshold"]).to_csv())


def cmd_eval_emoji(args, v):
    model, vocab, _ = emo.EmojiModel.load(args.weights)
    _write(args, emo.evaluate(model, _emoji_rows(args.data), vocab).to_csv())


def cmd_eval_pipeline(args, v):
    gold = read_gold(args.gold)
    if args.pred:
        preds = read_gold(args.pred)
        labels = _labels(args)
    else:
        if not (args.boundary and args.emoji):
            raise UsageError("eval-pipeline needs --boundary and --emoji weights, or --pred")
        pipe = _pipeline(args, v)
        preds = [pipe.annotate(g.text) for g in gold]
        labels = pipe.labels
    _write(args, f"{overall_accuracy(preds, gold, labels):.4f}\n")


def cmd_annotate(args, v):
    pipe = _pipeline(args, v)
    lines = [args.text] if args.text is not None else sys.stdin.read().splitlines()
    out = []
    for line in lines:
        ann: AnnotatedText = pipe.annotate(line)
        if not ann.tokens:
            continue
        out.append(f"{render(ann)}\t{format_insertions(ann.pairs)}" if args.tsv else render(ann))
    _write(args, "".join(o + "\n" for o in out))


def cmd_sweep_window(args, v):
    base = _pick(bnd.BoundaryConfig, v)
    hyper = _pick(bnd.TrainHyper, v, seed=args.seed)
    results = bnd.window_sweep(list(read_corpus(args.corpus)), _parse_sizes(v["sizes"]), base, hyper,
                               v["held_out"], seed=args.seed, log=_log)
    _write(args, bnd.sweep_csv(results))


def cmd_bench(args, v):
    pipe = _pipeline(args, v)
    p = Path(args.texts)
    lines = [l.split("\t", 1)[0] for l in p.read_text(encoding="utf-8").splitlines() if l.strip()]
    report = bench(lines, pipe, v["warmup"], v["iters"], {"boundary": args.boundary, "emoji": args.emoji})
    _write(args, report.to_csv())
    for k, size in report.sizes.items():
        _log(f"size {k} {size} bytes")


def cmd_quantize(args, v):
    if not args.out:
        raise UsageError("quantize needs --out")
    arrays, _ = load_weights(args.weights)
    store = ParamStore()
    for name, a in arrays.items():
        store.add(name, a)
    size = save_weights(args.out, store, quantized=True)
    side = Path(f"{args.weights}.json")
    if side.exists():
        shutil.copyfile(side, f"{args.out}.json")
    _log(f"wrote {args.out} ({size} bytes)")


def cmd_params(args, v):
    if args.weights:
        arrays, _ = load_weights(args.weights)
        n = sum(a.size for a in arrays.values())
    elif v["model"] == "boundary":
        # vocab_size is shared with the emoji config; keep the boundary default unless set explicitly
        explicit = args.vocab_size is not None or (args.config and "vocab_size" in read_config(args.config))
        over = {} if explicit else {"vocab_size": bnd.BoundaryConfig.vocab_size}
        n = bnd.build(_pick(bnd.BoundaryConfig, v, **over).validate(), args.seed).param_count()
    else:
        config = _pick(emo.EmojiConfig, v)
        if config.kind != "aca":
            config.fused_dim = config.concat_dim = None
        n = param_count(emo.EmojiModel(config.validate(), args.seed).store)
    _write(args, f"{n}\n")


COMMANDS = {
    "build-data": (cmd_build_data, "label a corpus and cache windowed samples",
                   lambda: _spec(extras=("workers",)) | {"window": (6, "int"), "offset": (4, "int"),
                                                         "vocab_size": (20000, "int")}),
    "train-boundary": (cmd_train_boundary, "train the boundary classifier",
                       lambda: _spec(bnd.BoundaryConfig, bnd.TrainHyper, extras=("workers", "quantize"))),
    "train-emoji": (cmd_train_emoji, "train an emoji model",
                    lambda: _spec(emo.EmojiConfig, emo.EmojiHyper, extras=("quantize",))),
    "eval-boundary": (cmd_eval_boundary, "boundary precision/recall/F1/accuracy",
                      lambda: _spec(extras=("workers", "multisentence", "boundary_threshold"))),
    "eval-emoji": (cmd_eval_emoji, "emoji top-1/top-5/weighted F1", lambda: _spec()),
    "eval-pipeline": (cmd_eval_pipeline, "strict overall accuracy against a gold file",
                      lambda: _spec(extras=("emoji_threshold", "boundary_threshold"))),
    "annotate": (cmd_annotate, "insert emoji into text",
                 lambda: _spec(extras=("emoji_threshold", "boundary_threshold"))),
    "sweep-window": (cmd_sweep_window, "held-out accuracy per window size",
                     lambda: _spec(bnd.BoundaryConfig, bnd.TrainHyper, extras=("held_out", "sizes"))),
    "bench": (cmd_bench, "per-word latency report",
              lambda: _spec(extras=("emoji_threshold", "boundary_threshold", "warmup", "iters"))),
    "quantize": (cmd_quantize, "write an int8 copy of a weight file", lambda: _spec()),
    "params": (cmd_params, "print a parameter count",
               lambda: _spec(bnd.BoundaryConfig, emo.EmojiConfig, extras=("model",))),
}

POSITIONAL = {
    "build-data": ("corpus",), "train-boundary": ("data",), "train-emoji": ("data",),
    "eval-boundary": ("weights", "corpus"), "eval-emoji": ("weights", "data"), "eval-pipeline": ("gold",),
    "annotate": (), "sweep-window": ("corpus",), "bench": ("texts",), "quantize": ("weights",), "params": (),
}


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = _Parser(prog="emojidict", description="Emoji insertion for dictated text.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    specs = {}
    for name, (_, help_text, spec_fn) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        for pos in POSITIONAL[name]:
            p.add_argument(pos)
        if name == "params":
            p.add_argument("weights", nargs="?")
        if name in ("eval-pipeline", "annotate", "bench"):
            p.add_argument("--boundary", help="boundary weight file")
            p.add_argument("--emoji", help="emoji weight file")
        if name == "eval-pipeline":
            p.add_argument("--pred", help="score a prediction file instead of running models")
        if name == "annotate":
            p.add_argument("--text", help="annotate this text instead of stdin lines")
            p.add_argument("--tsv", action="store_true", help="also print pos:emoji pairs")
        if name in ("train-emoji", "eval-pipeline"):
            p.add_argument("--labels", help="emoji label file (emoji<TAB>category<TAB>name)")
        p.add_argument("--config")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--out")
        p.add_argument("--threads", type=int, default=None)
        specs[name] = spec_fn()
        _add_keys(p, specs[name])
    return parser, specs


def main(argv=None) -> int:
    parser, specs = build_parser()
    try:
        args = parser.parse_args(argv)
        values = resolve(args, specs[args.command])
        if args.command in ("annotate", "bench") and not (args.boundary and args.emoji):
            raise UsageError(f"{args.command} needs --boundary and --emoji")
        handler = COMMANDS[args.command][0]
        if args.threads:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=args.threads):
                handler(args, values)
        else:
            handler(args, values)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        _log(f"error: {exc}")
        return 1
    except (DataError, OSError, json.JSONDecodeError) as exc:
        _log(f"error: {exc}")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
