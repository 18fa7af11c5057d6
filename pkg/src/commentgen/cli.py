"""Command-line interface. Subcommands mirror the pipeline stages plus
run-pipeline and self-test; exit code 0 on success, 1 with a message (and
the failing stage's name for run-pipeline) otherwise.
"""

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__, charlm, corpus, embeddings, javalex, metrics, ner, pipeline, summarizer


def _cmd_lex(args):
    source = Path(args.file).read_text(encoding="utf-8")
    method = javalex.lex_and_label(source)
    for tok in method.tokens:
        print(f"{tok.text}\t{tok.label}\t{tok.span[0]}\t{tok.span[1]}")


def _cmd_label_corpus(args):
    if args.input.endswith(".jsonl"):
        pairs = corpus.load_dataset(args.input, format="jsonl")
        sources = [" ".join(p.code_tokens) for p in pairs]
    else:
        with open(args.input, encoding="utf-8") as f:
            sources = [line.rstrip("\n") for line in f if line.strip()]
    methods = [javalex.tokenize(src) for src in sources]
    index = javalex.build_class_index(methods)
    sequences = []
    for m in methods:
        seq = javalex.sequence_labels(javalex.label(m, index))
        sequences.append(([t for t, _ in seq], [l for _, l in seq]))
    pipeline.write_conll(args.out, sequences)
    print(f"labeled {len(sequences)} methods -> {args.out}")


def _cmd_train_lm(args):
    with open(args.corpus, encoding="utf-8") as f:
        lines = [javalex.strip_comments(line.rstrip("\n")) for line in f if line.strip()]
    cfg = charlm.CharLmConfig(
        hidden=args.hidden,
        d_char=args.d_char,
        dropout=args.dropout,
        learning_rate=args.lr,
        epochs=args.epochs,
        seed=args.seed,
    )
    model, history = charlm.train_char_lm(lines, cfg)
    charlm.save(model, args.out)
    print(f"trained {len(history)} epochs, final loss {history[-1]:.4f} -> {args.out}")


def _cmd_extract_semantic(args):
    model = charlm.load(args.checkpoint)
    vocab = corpus.Vocabulary.from_json(json.load(open(args.vocab)))
    with open(args.corpus, encoding="utf-8") as f:
        sources = [line.rstrip("\n") for line in f if line.strip()]
    methods = [javalex.tokenize(src) for src in sources]
    table = charlm.build_semantic_table(model, methods, vocab, seed=args.seed)
    embeddings.write_vec(args.out, table)
    print(f"wrote {len(table)} x {table.dim} table -> {args.out}")


def _cmd_train_ner(args):
    sequences = pipeline.read_conll(args.train)
    table = embeddings.read_vec(args.semantic)
    cfg = ner.NerConfig(
        hidden=args.hidden,
        d_proj=args.d_proj,
        dropout=args.dropout,
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch,
        seed=args.seed,
    )
    valid = pipeline.read_conll(args.valid) if args.valid else None
    model, history = ner.train_ner(sequences, table, cfg, valid=valid)
    ner.save(model, args.out)
    print(f"trained {len(history)} epochs, final loss {history[-1]:.4f} -> {args.out}")


def _cmd_eval_ner(args):
    model = ner.load(args.checkpoint)
    gold = pipeline.read_conll(args.gold)
    result = ner.evaluate_ner(model, gold)
    micro = result["micro"]
    print(
        f"micro precision {micro['precision']:.4f} recall {micro['recall']:.4f} "
        f"f1 {micro['f1']:.4f}"
    )
    for lab, vals in sorted(result["per_label"].items()):
        if vals["support"]:
            print(
                f"  {lab:22s} P {vals['precision']:.3f} R {vals['recall']:.3f} "
                f"F1 {vals['f1']:.3f} (n={vals['support']})"
            )
    if args.json:
        with open(args.json, "w", encoding="utf-8") as f:
            json.dump(result, f, indent=2, sort_keys=True)


def _cmd_extract_syntactic(args):
    model = ner.load(args.checkpoint)
    vocab = corpus.Vocabulary.from_json(json.load(open(args.vocab)))
    sequences = [toks for toks, _ in pipeline.read_conll(args.corpus)]
    table = ner.build_syntactic_table(model, sequences, vocab, seed=args.seed)
    embeddings.write_vec(args.out, table)
    print(f"wrote {len(table)} x {table.dim} table -> {args.out}")


def _cmd_concat_tables(args):
    sem = embeddings.read_vec(args.semantic)
    syn = embeddings.read_vec(args.syntactic)
    combined = embeddings.concat_tables(sem, syn)
    embeddings.write_vec(args.out, combined)
    print(f"wrote {len(combined)} x {combined.dim} table -> {args.out}")


def _cmd_train_summarizer(args):
    if args.code_table:
        table = embeddings.read_vec(args.code_table)
    elif args.mode in ("lamner", "static"):
        sem = embeddings.read_vec(args.semantic)
        syn = embeddings.read_vec(args.syntactic)
        table = embeddings.concat_tables(sem, syn)
    elif args.mode == "lam":
        table = embeddings.read_vec(args.semantic)
    else:
        table = embeddings.read_vec(args.syntactic)
    comment_vocab = corpus.Vocabulary.from_json(json.load(open(args.comment_vocab)))
    cfg = summarizer.SummarizerConfig(
        enc_hidden_total=args.enc_hidden,
        dec_hidden=args.dec_hidden,
        att_dim=args.att_dim or None,
        dec_emb_dim=args.dec_emb,
        dropout=args.dropout,
        learning_rate=args.lr,
        batch_size=args.batch,
        epochs=args.epochs,
        seed=args.seed,
    )
    model = summarizer.init_summarizer(table, comment_vocab, cfg, mode=args.mode)
    train_pairs = corpus.load_dataset(args.train, format="jsonl")
    valid_pairs = corpus.load_dataset(args.valid, format="jsonl") if args.valid else None
    model, history = summarizer.train_summarizer(model, train_pairs, valid_pairs, cfg)
    summarizer.save(model, args.out)
    print(f"trained {len(history)} epochs, final loss {history[-1]:.4f} -> {args.out}")


def _cmd_generate(args):
    model = summarizer.load(args.checkpoint)
    pairs = corpus.load_dataset(args.input, format="jsonl")
    if args.attention_dir:
        Path(args.attention_dir).mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", encoding="utf-8") as f:
        for pair in pairs:
            code_idx = model.code_vocab.encode(pair.code_tokens)
            if args.beam_width > 1:
                out, record = summarizer.beam_generate(model, code_idx, beam_width=args.beam_width)
            else:
                out, record = summarizer.generate(model, code_idx, max_len=args.max_len)
            f.write(json.dumps({"id": pair.id, "prediction": " ".join(out)}, sort_keys=True) + "\n")
            if args.attention_dir:
                summarizer.export_attention(
                    record, list(pair.code_tokens), out,
                    Path(args.attention_dir) / f"{pair.id}.att",
                )
    print(f"wrote predictions -> {args.out}")


def _cmd_evaluate(args):
    refs = {}
    with open(args.references, encoding="utf-8") as f:
        for line in f:
            rec = json.loads(line)
            text = rec.get("comment", rec.get("reference"))
            if text is None:
                raise ValueError("reference records need a comment or reference field")
            refs[str(rec["id"])] = corpus.tokenize_comment(text)
    candidates, references, ids = [], [], []
    with open(args.predictions, encoding="utf-8") as f:
        for line in f:
            rec = json.loads(line)
            pid = str(rec["id"])
            if pid not in refs:
                raise ValueError(f"prediction id {pid!r} has no reference")
            candidates.append(corpus.tokenize_comment(rec["prediction"]))
            references.append(refs[pid])
            ids.append(pid)
    report = metrics.report(metrics.make_pairs(candidates, references, ids))
    print(report.table())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(report.summary(), f, indent=2, sort_keys=True)
            f.write("\n")
        print(f"wrote report -> {args.out}")


def _cmd_run_pipeline(args):
    config_path = os.environ.get("COMMENTGEN_CONFIG", args.config)
    overrides = {}
    for item in args.set or []:
        key, _, val = item.partition("=")
        if not val:
            raise pipeline.ConfigError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = val.strip()
    if args.dataset:
        overrides["data.dataset"] = args.dataset
    for key, flag in (
        ("data.max_code_len", args.max_code_len),
        ("data.max_comment_len", args.max_comment_len),
        ("data.min_count", args.min_count),
        ("seed", args.seed),
    ):
        if flag is not None:
            overrides[key] = str(flag)
    if config_path:
        cfg = pipeline.PipelineConfig.from_file(config_path, args.workdir, overrides)
    else:
        cfg = pipeline.PipelineConfig.from_preset(args.preset, args.workdir, overrides)
    manifest = pipeline.run_pipeline(cfg, force=args.force)
    report_path = cfg.path("report.json")
    if report_path.exists():
        print(json.dumps(json.load(open(report_path)), indent=2, sort_keys=True))
    return manifest


def _cmd_self_test(args):
    results = pipeline.self_test()
    failed = sum(r["failed"] for r in results.values())
    if failed:
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="commentgen",
        description="Code comment generation pipeline: lexing/labeling, "
        "character-LM and tagger embedding training, attentive seq2seq "
        "summarization, and metric evaluation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lex", help="tokenize and label one Java method file")
    p.add_argument("file")
    p.set_defaults(fn=_cmd_lex)

    p = sub.add_parser("label-corpus", help="emit the tagger training file (CoNLL style)")
    p.add_argument("--input", required=True, help="dataset .jsonl or one-method-per-line text")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_label_corpus)

    p = sub.add_parser("train-lm", help="train the bidirectional character language model")
    p.add_argument("--corpus", required=True, help="one method per line")
    p.add_argument("--out", required=True)
    p.add_argument("--hidden", type=int, default=128)
    p.add_argument("--d-char", type=int, default=32)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_train_lm)

    p = sub.add_parser("extract-semantic", help="build the semantic token table from a trained LM")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_extract_semantic)

    p = sub.add_parser("train-ner", help="train the BiLSTM-CRF tagger")
    p.add_argument("--train", required=True, help="CoNLL-style token/label file")
    p.add_argument("--valid")
    p.add_argument("--semantic", required=True, help="semantic .vec table")
    p.add_argument("--out", required=True)
    p.add_argument("--hidden", type=int, default=128)
    p.add_argument("--d-proj", type=int, default=256)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_train_ner)

    p = sub.add_parser("eval-ner", help="precision/recall/F1 of a tagger checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--json", help="also write the full result as JSON")
    p.set_defaults(fn=_cmd_eval_ner)

    p = sub.add_parser("extract-syntactic", help="build the syntactic token table from a tagger")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True, help="CoNLL file supplying token sequences")
    p.add_argument("--vocab", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_extract_syntactic)

    p = sub.add_parser("concat-tables", help="row-wise concatenation, semantic first")
    p.add_argument("--semantic", required=True)
    p.add_argument("--syntactic", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_concat_tables)

    p = sub.add_parser("train-summarizer", help="train the attentive encoder-decoder")
    p.add_argument("--mode", choices=summarizer.MODES, default="lamner")
    p.add_argument("--semantic", help="semantic .vec table")
    p.add_argument("--syntactic", help="syntactic .vec table")
    p.add_argument("--code-table", help="any external .vec table overriding the mode tables")
    p.add_argument("--comment-vocab", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--valid")
    p.add_argument("--out", required=True)
    p.add_argument("--enc-hidden", type=int, default=512)
    p.add_argument("--dec-hidden", type=int, default=512)
    p.add_argument("--att-dim", type=int, default=0)
    p.add_argument("--dec-emb", type=int, default=256)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_train_summarizer)

    p = sub.add_parser("generate", help="generate comments for a code .jsonl file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--attention-dir")
    p.add_argument("--beam-width", type=int, default=1)
    p.add_argument("--max-len", type=int, default=30)
    p.set_defaults(fn=_cmd_generate)

    p = sub.add_parser("evaluate", help="score predictions against references")
    p.add_argument("--predictions", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("run-pipeline", help="run every stage end to end")
    p.add_argument("--config", help="key=value config file (env COMMENTGEN_CONFIG overrides)")
    p.add_argument("--preset", choices=sorted(pipeline.PRESETS), default="desk-scale")
    p.add_argument("--workdir", required=True)
    p.add_argument("--dataset", help="dataset path (default: bundled synthetic corpus)")
    p.add_argument("--max-code-len", type=int, help="code token cap (default 300)")
    p.add_argument("--max-comment-len", type=int, help="comment token cap (default 30)")
    p.add_argument("--min-count", type=int, help="vocabulary frequency threshold")
    p.add_argument("--seed", type=int, help="pipeline seed")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    p.add_argument("--force", action="store_true", help="ignore cached stage outputs")
    p.set_defaults(fn=_cmd_run_pipeline)

    p = sub.add_parser("self-test", help="run the built-in verification suites")
    p.set_defaults(fn=_cmd_self_test)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except pipeline.StageError as e:
        print(str(e), file=sys.stderr)
        return 1
    except (
        corpus.DatasetError,
        embeddings.TableError,
        pipeline.ConfigError,
        javalex.LexError,
        ValueError,
        FileNotFoundError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
