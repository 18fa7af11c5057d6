"""End-to-end pipeline orchestration: flat key=value configuration with
presets, stage execution with checksum-based resume, the run manifest, and
the built-in self test.

Stage order: prepare -> label -> train-lm -> extract-semantic -> train-ner
-> extract-syntactic -> concat-tables -> train-summarizer -> generate ->
evaluate. Every stage reads only its declared inputs and writes its declared
outputs; a stage whose recorded input digest and output checksums still
match is skipped on re-run.
"""

import hashlib
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, charlm, corpus, embeddings, javalex, metrics, ner, nnet, summarizer, synth

PRESETS = {
    "paper-defaults": {
        "seed": "13",
        "mode": "lamner",
        "data.dataset": "bundled",
        "data.bundled_size": "200",
        "data.format": "jsonl",
        "data.max_code_len": "300",
        "data.max_comment_len": "30",
        "data.min_count": "2",
        "charlm.hidden": "128",
        "charlm.d_char": "32",
        "charlm.dropout": "0.1",
        "charlm.lr": "0.1",
        "charlm.epochs": "100",
        "charlm.window": "128",
        "charlm.patience": "7",
        "ner.hidden": "128",
        "ner.d_proj": "256",
        "ner.dropout": "0.1",
        "ner.lr": "0.1",
        "ner.epochs": "50",
        "ner.batch": "16",
        "ner.patience": "7",
        "summ.enc_hidden": "512",
        "summ.dec_hidden": "512",
        "summ.att_dim": "0",
        "summ.dec_emb": "256",
        "summ.dropout": "0.1",
        "summ.lr": "0.1",
        "summ.batch": "16",
        "summ.epochs": "100",
        "summ.patience": "7",
        "generate.beam_width": "1",
        "generate.attention_samples": "5",
    },
    "desk-scale": {
        "seed": "13",
        "mode": "lamner",
        "data.dataset": "bundled",
        "data.bundled_size": "200",
        "data.format": "jsonl",
        "data.max_code_len": "300",
        "data.max_comment_len": "30",
        "data.min_count": "1",
        "charlm.hidden": "32",
        "charlm.d_char": "16",
        "charlm.dropout": "0.1",
        "charlm.lr": "0.5",
        "charlm.epochs": "3",
        "charlm.window": "128",
        "charlm.patience": "7",
        "ner.hidden": "32",
        "ner.d_proj": "48",
        "ner.dropout": "0.1",
        "ner.lr": "0.1",
        "ner.epochs": "4",
        "ner.batch": "16",
        "ner.patience": "7",
        "summ.enc_hidden": "64",
        "summ.dec_hidden": "64",
        "summ.att_dim": "48",
        "summ.dec_emb": "32",
        "summ.dropout": "0.1",
        "summ.lr": "0.25",
        "summ.batch": "8",
        "summ.epochs": "10",
        "summ.patience": "7",
        "generate.beam_width": "1",
        "generate.attention_samples": "5",
    },
}


class ConfigError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    """Resolved flat configuration plus the working directory."""

    values: dict
    workdir: Path

    @classmethod
    def from_preset(cls, preset: str, workdir, overrides: dict | None = None):
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; have {sorted(PRESETS)}")
        values = dict(PRESETS[preset])
        values.update(overrides or {})
        return cls(values=values, workdir=Path(workdir))

    @classmethod
    def from_file(cls, path, workdir, overrides: dict | None = None):
        values = {}
        with open(path, encoding="utf-8") as f:
            for lineno, raw in enumerate(f, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if line.startswith("include "):
                    preset = line.split(None, 1)[1].strip()
                    if preset not in PRESETS:
                        raise ConfigError(f"line {lineno}: unknown preset {preset!r}")
                    base = dict(PRESETS[preset])
                    base.update(values)
                    values = base
                    continue
                if "=" not in line:
                    raise ConfigError(f"line {lineno}: expected key = value")
                key, _, val = line.partition("=")
                values[key.strip()] = val.strip()
        merged = dict(PRESETS["paper-defaults"])
        merged.update(values)
        merged.update(overrides or {})
        return cls(values=merged, workdir=Path(workdir))

    def get(self, key: str) -> str:
        if key not in self.values:
            raise ConfigError(f"missing config key {key!r}")
        return self.values[key]

    def get_int(self, key: str) -> int:
        return int(self.get(key))

    def get_float(self, key: str) -> float:
        return float(self.get(key))

    def path(self, name: str) -> Path:
        return self.workdir / name


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path: Path, obj) -> None:
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp, path)


def _charlm_config(cfg: PipelineConfig) -> charlm.CharLmConfig:
    return charlm.CharLmConfig(
        hidden=cfg.get_int("charlm.hidden"),
        d_char=cfg.get_int("charlm.d_char"),
        dropout=cfg.get_float("charlm.dropout"),
        learning_rate=cfg.get_float("charlm.lr"),
        epochs=cfg.get_int("charlm.epochs"),
        bptt_window=cfg.get_int("charlm.window"),
        patience=cfg.get_int("charlm.patience"),
        seed=cfg.get_int("seed"),
    )


def _ner_config(cfg: PipelineConfig) -> ner.NerConfig:
    return ner.NerConfig(
        hidden=cfg.get_int("ner.hidden"),
        d_proj=cfg.get_int("ner.d_proj"),
        dropout=cfg.get_float("ner.dropout"),
        learning_rate=cfg.get_float("ner.lr"),
        epochs=cfg.get_int("ner.epochs"),
        batch_size=cfg.get_int("ner.batch"),
        patience=cfg.get_int("ner.patience"),
        seed=cfg.get_int("seed"),
    )


def _summ_config(cfg: PipelineConfig) -> summarizer.SummarizerConfig:
    att = cfg.get_int("summ.att_dim")
    return summarizer.SummarizerConfig(
        enc_hidden_total=cfg.get_int("summ.enc_hidden"),
        dec_hidden=cfg.get_int("summ.dec_hidden"),
        att_dim=att or None,
        dec_emb_dim=cfg.get_int("summ.dec_emb"),
        dropout=cfg.get_float("summ.dropout"),
        learning_rate=cfg.get_float("summ.lr"),
        batch_size=cfg.get_int("summ.batch"),
        epochs=cfg.get_int("summ.epochs"),
        patience=cfg.get_int("summ.patience"),
        seed=cfg.get_int("seed"),
    )


def write_conll(path, sequences) -> None:
    """Two-column token TAB label file, blank line between sequences."""
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        for tokens, labels in sequences:
            for t, l in zip(tokens, labels):
                f.write(f"{t}\t{l}\n")
            f.write("\n")
    os.replace(tmp, path)


def read_conll(path):
    sequences = []
    tokens, labels = [], []
    with open(path, encoding="utf-8") as f:
        for raw in f:
            line = raw.rstrip("\n")
            if not line:
                if tokens:
                    sequences.append((tokens, labels))
                    tokens, labels = [], []
                continue
            tok, _, lab = line.partition("\t")
            tokens.append(tok)
            labels.append(lab)
    if tokens:
        sequences.append((tokens, labels))
    return sequences


def _write_pairs_jsonl(path, pairs) -> None:
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        for p in pairs:
            f.write(
                json.dumps(
                    {"id": p.id, "code": " ".join(p.code_tokens), "comment": " ".join(p.comment_tokens)},
                    sort_keys=True,
                )
                + "\n"
            )
    os.replace(tmp, path)


# ------------------------------------------------------------------ stages

def _stage_prepare(cfg: PipelineConfig):
    dataset = cfg.get("data.dataset")
    if dataset == "bundled":
        records = synth.make_corpus(cfg.get_int("data.bundled_size"), seed=cfg.get_int("seed"))
        synth.write_jsonl(cfg.path("dataset.jsonl"), records)
        dataset_path = cfg.path("dataset.jsonl")
    else:
        dataset_path = Path(dataset)
    raw = corpus.load_dataset(dataset_path, format=cfg.get("data.format"))
    pre = [
        corpus.preprocess(
            p,
            max_code_len=cfg.get_int("data.max_code_len"),
            max_comment_len=cfg.get_int("data.max_comment_len"),
        )
        for p in raw
    ]
    spec = corpus.SplitSpec(seed=cfg.get_int("seed"))
    pre_train, pre_valid, pre_test = corpus.split(pre, spec)
    raw_train, _, _ = corpus.split(raw, spec)
    _write_pairs_jsonl(cfg.path("train.jsonl"), pre_train)
    _write_pairs_jsonl(cfg.path("valid.jsonl"), pre_valid)
    _write_pairs_jsonl(cfg.path("test.jsonl"), pre_test)
    with open(cfg.path("train_sources.txt.tmp"), "w", encoding="utf-8") as f:
        for p in raw_train:
            f.write(javalex.strip_comments(" ".join(p.code_tokens)).strip() + "\n")
    os.replace(cfg.path("train_sources.txt.tmp"), cfg.path("train_sources.txt"))
    code_vocab = corpus.build_vocab(pre_train, "code", min_count=cfg.get_int("data.min_count"))
    comment_vocab = corpus.build_vocab(pre_train, "comment", min_count=cfg.get_int("data.min_count"))
    _write_json(cfg.path("code_vocab.json"), code_vocab.to_json())
    _write_json(cfg.path("comment_vocab.json"), comment_vocab.to_json())


def _stage_label(cfg: PipelineConfig):
    with open(cfg.path("train_sources.txt"), encoding="utf-8") as f:
        sources = [line.rstrip("\n") for line in f if line.strip()]
    methods = [javalex.tokenize(src) for src in sources]
    index = javalex.build_class_index(methods)
    sequences = []
    for m in methods:
        labeled = javalex.label(m, index)
        pairs = javalex.sequence_labels(labeled)
        sequences.append(([t for t, _ in pairs], [l for _, l in pairs]))
    write_conll(cfg.path("ner_train.conll"), sequences)


def _stage_train_lm(cfg: PipelineConfig):
    with open(cfg.path("train_sources.txt"), encoding="utf-8") as f:
        lines = [line.rstrip("\n") for line in f if line.strip()]
    model, _history = charlm.train_char_lm(lines, _charlm_config(cfg))
    charlm.save(model, cfg.path("charlm.ckpt"))


def _stage_extract_semantic(cfg: PipelineConfig):
    model = charlm.load(cfg.path("charlm.ckpt"))
    vocab = corpus.Vocabulary.from_json(json.load(open(cfg.path("code_vocab.json"))))
    with open(cfg.path("train_sources.txt"), encoding="utf-8") as f:
        sources = [line.rstrip("\n") for line in f if line.strip()]
    methods = [javalex.tokenize(src) for src in sources]
    table = charlm.build_semantic_table(model, methods, vocab, seed=cfg.get_int("seed"))
    embeddings.write_vec(cfg.path("semantic.vec"), table)


def _stage_train_ner(cfg: PipelineConfig):
    sequences = read_conll(cfg.path("ner_train.conll"))
    table = embeddings.read_vec(cfg.path("semantic.vec"))
    model, _history = ner.train_ner(sequences, table, _ner_config(cfg))
    ner.save(model, cfg.path("ner.ckpt"))


def _stage_extract_syntactic(cfg: PipelineConfig):
    model = ner.load(cfg.path("ner.ckpt"))
    vocab = corpus.Vocabulary.from_json(json.load(open(cfg.path("code_vocab.json"))))
    sequences = [toks for toks, _ in read_conll(cfg.path("ner_train.conll"))]
    table = ner.build_syntactic_table(model, sequences, vocab, seed=cfg.get_int("seed"))
    embeddings.write_vec(cfg.path("syntactic.vec"), table)


def _stage_concat_tables(cfg: PipelineConfig):
    sem = embeddings.read_vec(cfg.path("semantic.vec"))
    syn = embeddings.read_vec(cfg.path("syntactic.vec"))
    embeddings.write_vec(cfg.path("combined.vec"), embeddings.concat_tables(sem, syn))


def table_for_mode(cfg: PipelineConfig, mode: str) -> Path:
    return {
        "lamner": cfg.path("combined.vec"),
        "static": cfg.path("combined.vec"),
        "lam": cfg.path("semantic.vec"),
        "ner": cfg.path("syntactic.vec"),
    }[mode]


def _load_pairs_jsonl(path):
    pairs = corpus.load_dataset(path, format="jsonl")
    return pairs


def _stage_train_summarizer(cfg: PipelineConfig):
    mode = cfg.get("mode")
    table = embeddings.read_vec(table_for_mode(cfg, mode))
    comment_vocab = corpus.Vocabulary.from_json(json.load(open(cfg.path("comment_vocab.json"))))
    scfg = _summ_config(cfg)
    model = summarizer.init_summarizer(table, comment_vocab, scfg, mode=mode)
    train_pairs = _load_pairs_jsonl(cfg.path("train.jsonl"))
    valid_pairs = _load_pairs_jsonl(cfg.path("valid.jsonl"))
    model, _history = summarizer.train_summarizer(model, train_pairs, valid_pairs, scfg)
    summarizer.save(model, cfg.path("summarizer.ckpt"))


def _stage_generate(cfg: PipelineConfig):
    model = summarizer.load(cfg.path("summarizer.ckpt"))
    test_pairs = _load_pairs_jsonl(cfg.path("test.jsonl"))
    beam = cfg.get_int("generate.beam_width")
    attention_dir = cfg.path("attention")
    attention_dir.mkdir(parents=True, exist_ok=True)
    n_attention = cfg.get_int("generate.attention_samples")
    tmp = Path(str(cfg.path("predictions.jsonl")) + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        for i, pair in enumerate(test_pairs):
            code_idx = model.code_vocab.encode(pair.code_tokens)
            if beam > 1:
                out, record = summarizer.beam_generate(model, code_idx, beam_width=beam)
            else:
                out, record = summarizer.generate(model, code_idx)
            f.write(json.dumps({"id": pair.id, "prediction": " ".join(out)}, sort_keys=True) + "\n")
            if i < n_attention:
                summarizer.export_attention(
                    record, list(pair.code_tokens), out, attention_dir / f"{pair.id}.att"
                )
    os.replace(tmp, cfg.path("predictions.jsonl"))


def _stage_evaluate(cfg: PipelineConfig):
    test_pairs = _load_pairs_jsonl(cfg.path("test.jsonl"))
    refs = {p.id: list(p.comment_tokens) for p in test_pairs}
    candidates, references, ids = [], [], []
    with open(cfg.path("predictions.jsonl"), encoding="utf-8") as f:
        for line in f:
            rec = json.loads(line)
            if rec["id"] not in refs:
                raise ValueError(f"prediction id {rec['id']!r} has no reference")
            candidates.append(rec["prediction"].split())
            references.append(refs[rec["id"]])
            ids.append(rec["id"])
    pairs = metrics.make_pairs(candidates, references, ids)
    rep = metrics.report(pairs)
    _write_json(cfg.path("report.json"), rep.summary())
    _write_json(cfg.path("per_sample.json"), rep.per_sample)


STAGES = [
    ("prepare", _stage_prepare,
     [], ["train.jsonl", "valid.jsonl", "test.jsonl", "train_sources.txt", "code_vocab.json", "comment_vocab.json"],
     ["seed", "data.dataset", "data.format", "data.max_code_len", "data.max_comment_len", "data.min_count"]),
    ("label", _stage_label, ["train_sources.txt"], ["ner_train.conll"], []),
    ("train-lm", _stage_train_lm, ["train_sources.txt"], ["charlm.ckpt"],
     ["seed", "charlm.hidden", "charlm.d_char", "charlm.dropout", "charlm.lr", "charlm.epochs", "charlm.window", "charlm.patience"]),
    ("extract-semantic", _stage_extract_semantic,
     ["charlm.ckpt", "code_vocab.json", "train_sources.txt"], ["semantic.vec"], ["seed"]),
    ("train-ner", _stage_train_ner, ["ner_train.conll", "semantic.vec"], ["ner.ckpt"],
     ["seed", "ner.hidden", "ner.d_proj", "ner.dropout", "ner.lr", "ner.epochs", "ner.batch", "ner.patience"]),
    ("extract-syntactic", _stage_extract_syntactic,
     ["ner.ckpt", "code_vocab.json", "ner_train.conll"], ["syntactic.vec"], ["seed"]),
    ("concat-tables", _stage_concat_tables, ["semantic.vec", "syntactic.vec"], ["combined.vec"], []),
    ("train-summarizer", _stage_train_summarizer,
     ["train.jsonl", "valid.jsonl", "comment_vocab.json", "semantic.vec", "syntactic.vec", "combined.vec"],
     ["summarizer.ckpt"],
     ["seed", "mode", "summ.enc_hidden", "summ.dec_hidden", "summ.att_dim", "summ.dec_emb",
      "summ.dropout", "summ.lr", "summ.batch", "summ.epochs", "summ.patience"]),
    ("generate", _stage_generate, ["summarizer.ckpt", "test.jsonl"], ["predictions.jsonl"],
     ["generate.beam_width", "generate.attention_samples"]),
    ("evaluate", _stage_evaluate, ["predictions.jsonl", "test.jsonl"], ["report.json", "per_sample.json"], []),
]


def _stage_digest(cfg: PipelineConfig, inputs, config_keys) -> str:
    h = hashlib.sha256()
    h.update(__version__.encode())
    for key in config_keys:
        h.update(f"{key}={cfg.get(key)};".encode())
    for name in inputs:
        p = cfg.path(name)
        h.update(name.encode())
        h.update(_sha256(p).encode())
    return h.hexdigest()


def run_pipeline(cfg: PipelineConfig, force: bool = False, log=print) -> dict:
    """Run all stages, resuming from matching checkpoints. Returns the run
    manifest (also written to workdir/manifest.json)."""
    cfg.workdir.mkdir(parents=True, exist_ok=True)
    manifest_path = cfg.path("manifest.json")
    manifest = {"version": __version__, "config": dict(cfg.values), "stages": {}}
    if manifest_path.exists() and not force:
        try:
            old = json.load(open(manifest_path))
            if old.get("config") == manifest["config"] and old.get("version") == __version__:
                manifest["stages"] = old.get("stages", {})
        except (json.JSONDecodeError, OSError):
            pass
    for name, fn, inputs, outputs, config_keys in STAGES:
        try:
            digest = _stage_digest(cfg, inputs, config_keys)
            recorded = manifest["stages"].get(name)
            outputs_ok = all(cfg.path(o).exists() for o in outputs) and recorded is not None
            if outputs_ok and not force and recorded.get("digest") == digest:
                stale = any(
                    recorded["outputs"].get(o) != _sha256(cfg.path(o)) for o in outputs
                )
                if not stale:
                    log(f"[{name}] up to date, skipping")
                    continue
                log(f"[{name}] stale outputs detected, re-running")
            start = time.time()
            fn(cfg)
            elapsed = time.time() - start
            manifest["stages"][name] = {
                "digest": digest,
                "outputs": {o: _sha256(cfg.path(o)) for o in outputs},
                "wall_clock_sec": round(elapsed, 3),
            }
            _write_json(manifest_path, manifest)
            log(f"[{name}] done in {elapsed:.1f}s")
        except Exception as e:  # noqa: BLE001 - stage boundary
            raise StageError(name, e) from e
    return manifest


# ---------------------------------------------------------------- self test

def self_test(log=print) -> dict:
    """Fast verification suites: gradient checks, CRF vs brute force,
    metric identities, and the lexer rule examples. Returns per-suite
    pass/fail counts."""
    import itertools

    results = {}

    def suite(name):
        results[name] = {"passed": 0, "failed": 0, "failures": []}
        return results[name]

    def check(s, label, ok):
        if ok:
            s["passed"] += 1
        else:
            s["failed"] += 1
            s["failures"].append(label)

    s = suite("gradients")
    rng = np.random.default_rng(0)
    w = rng.normal(size=(4, 3))
    b = rng.normal(size=3)
    x = rng.normal(size=4)
    params = {"w": w, "b": b}
    target = 1

    def linear_loss():
        return nnet.softmax_xent(x @ params["w"] + params["b"], target)[0]

    logits = x @ w + b
    loss, dlogits = nnet.softmax_xent(logits, target)
    analytic = {"w": np.outer(x, dlogits), "b": dlogits}
    check(s, "linear+softmax", nnet.grad_check(linear_loss, params, analytic) < 1e-6)

    p = nnet.init_lstm(rng, 3, 4)
    xs = rng.normal(size=(5, 3))
    R = rng.normal(size=(5, 4))
    lstm_params = {}
    nnet.add_lstm(lstm_params, "c", p)

    def lstm_loss():
        hs, _, _ = nnet.lstm_run(nnet.get_lstm(lstm_params, "c"), xs)
        return float((hs * R).sum())

    hs, _, cache = nnet.lstm_run(p, xs)
    _, g, _, _ = nnet.lstm_run_backward(p, cache, R.copy())
    check(
        s,
        "lstm-sequence",
        nnet.grad_check(lstm_loss, lstm_params, {f"c.{k}": v for k, v in g.items()}) < 1e-4,
    )

    s = suite("crf-oracle")
    from . import kernels

    for trial in range(10):
        trng = np.random.default_rng(100 + trial)
        T = int(trng.integers(1, 6))
        L = int(trng.integers(2, 5))
        emis = trng.normal(size=(T, L))
        trans = trng.normal(size=(L, L))
        bos = trng.normal(size=L)
        eos = trng.normal(size=L)
        logz, _ = kernels.crf_forward(emis, trans, bos, eos)
        total = -np.inf
        best = -np.inf
        for path in itertools.product(range(L), repeat=T):
            sc = bos[path[0]] + emis[0, path[0]]
            for t in range(1, T):
                sc += trans[path[t - 1], path[t]] + emis[t, path[t]]
            sc += eos[path[-1]]
            total = np.logaddexp(total, sc)
            best = max(best, sc)
        _, vscore = kernels.crf_viterbi(emis, trans, bos, eos)
        check(s, f"logZ-{trial}", abs(logz - total) < 1e-8)
        check(s, f"viterbi-{trial}", abs(vscore - best) < 1e-8)

    s = suite("metrics-golden")
    pairs = metrics.make_pairs([["a", "b", "c", "d"]], [["a", "b", "x", "d"]])
    check(s, "bleu2-hand-value", abs(metrics.bleu(pairs, 2) - 50.0) < 1e-6)
    pairs = metrics.make_pairs([["the", "cat", "ran"]], [["the", "cat", "sat"]])
    check(s, "rouge-hand-value", abs(metrics.rouge_l(pairs) - 200.0 / 3.0) < 1e-6)
    four = [["the", "lazy", "dog", "sleeps"]]
    pairs = metrics.make_pairs(four, four)
    check(s, "meteor-identity", abs(metrics.meteor(pairs) - 99.21875) < 1e-6)
    sents = [["gets", "the", "maximum", "value", "."], ["sets", "a", "flag", "here"], ["returns", "true", "if", "empty"]]
    pairs = metrics.make_pairs(sents, sents)
    check(s, "cider-self-similarity", abs(metrics.cider(pairs)[0] - 10.0) < 1e-6)

    s = suite("lexer-golden")
    m = javalex.lex_and_label("public Boolean getBoolean2 ( ) { }")
    got = [(t.text, t.label) for t in m.tokens]
    check(
        s,
        "paper-example",
        got
        == [
            ("public", "modifier"),
            ("Boolean", "return-type"),
            ("getBoolean2", "function"),
            ("(", "other-separator"),
            (")", "other-separator"),
            ("{", "body-start-delimiter"),
            ("}", "body-end-delimiter"),
        ],
    )
    m = javalex.lex_and_label("Foo foo = new Foo ( ) ;")
    labels = [t.label for t in m.tokens]
    check(s, "class-object-rule", labels == ["class", "object", "operator", "keyword", "object", "other-separator", "other-separator", "eol"])

    for name, r in results.items():
        log(f"{name}: {r['passed']} passed, {r['failed']} failed")
        for f in r["failures"]:
            log(f"  FAIL {f}")
    return results
