"""CLI surface: every documented subcommand exists, the stage commands wire
files through correctly, and failures exit nonzero with a message."""

import json

import pytest

from commentgen import cli

SUBCOMMANDS = [
    "lex", "label-corpus", "train-lm", "extract-semantic", "train-ner",
    "eval-ner", "extract-syntactic", "concat-tables", "train-summarizer",
    "generate", "evaluate", "run-pipeline", "self-test",
]


def run_cli(args):
    return cli.main(args)


class TestParser:
    def test_all_subcommands_present(self):
        parser = cli.build_parser()
        sub = next(a for a in parser._actions if a.dest == "command")
        assert set(SUBCOMMANDS) <= set(sub.choices)


class TestLex:
    def test_output_format(self, tmp_path, capsys):
        f = tmp_path / "m.java"
        f.write_text("int x = 5 ; // c")
        assert run_cli(["lex", str(f)]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].split("\t") == ["int", "data-type", "0", "3"]
        assert len(lines) == 5

    def test_lex_error_exit_code(self, tmp_path, capsys):
        f = tmp_path / "m.java"
        f.write_text('s = "unterminated')
        assert run_cli(["lex", str(f)]) == 1
        assert "error" in capsys.readouterr().err


class TestLabelCorpus:
    def test_conll_emission(self, tmp_path, capsys):
        data = tmp_path / "d.jsonl"
        data.write_text('{"code":"int x = 1 ;","comment":"c"}\n{"code":"{ }","comment":"c"}\n')
        out = tmp_path / "out.conll"
        assert run_cli(["label-corpus", "--input", str(data), "--out", str(out)]) == 0
        text = out.read_text()
        assert "int\tdata-type" in text
        assert "\n\n" in text  # blank line between methods
        assert "NUM\tnumber" in text


class TestEvaluate:
    def test_report_keys_and_values(self, tmp_path, capsys):
        preds = tmp_path / "p.jsonl"
        refs = tmp_path / "r.jsonl"
        preds.write_text(
            json.dumps({"id": "1", "prediction": "sets the value"}) + "\n"
            + json.dumps({"id": "2", "prediction": "gets a name"}) + "\n"
        )
        refs.write_text(
            json.dumps({"id": "1", "comment": "sets the value"}) + "\n"
            + json.dumps({"id": "2", "comment": "returns the name"}) + "\n"
        )
        out = tmp_path / "report.json"
        assert run_cli([
            "evaluate", "--predictions", str(preds), "--references", str(refs), "--out", str(out)
        ]) == 0
        report = json.loads(out.read_text())
        assert set(report) == {"bleu1", "bleu2", "bleu3", "bleu4", "rouge_l", "meteor", "cider"}
        assert 0 < report["bleu1"] < 100

    def test_unmatched_prediction_id(self, tmp_path, capsys):
        preds = tmp_path / "p.jsonl"
        refs = tmp_path / "r.jsonl"
        preds.write_text(json.dumps({"id": "zz", "prediction": "x"}) + "\n")
        refs.write_text(json.dumps({"id": "1", "comment": "x"}) + "\n")
        assert run_cli(["evaluate", "--predictions", str(preds), "--references", str(refs)]) == 1


class TestStageCommands:
    def test_micro_pipeline_via_individual_commands(self, tmp_path, capsys):
        # train-lm -> extract-semantic -> train-ner -> extract-syntactic ->
        # concat-tables -> train-summarizer -> generate on a tiny corpus
        from commentgen import synth

        records = synth.make_corpus(12, seed=31)
        data = tmp_path / "d.jsonl"
        synth.write_jsonl(data, records)
        sources = tmp_path / "sources.txt"
        sources.write_text("".join(r["code"] + "\n" for r in records))

        conll = tmp_path / "train.conll"
        assert run_cli(["label-corpus", "--input", str(sources), "--out", str(conll)]) == 0

        from commentgen import corpus as cp

        pairs = [
            cp.preprocess(
                cp.ParallelPair(tuple(r["code"].split()), tuple(cp.tokenize_comment(r["comment"])), r["id"])
            )
            for r in records
        ]
        code_vocab = cp.build_vocab(pairs, "code", min_count=1)
        comment_vocab = cp.build_vocab(pairs, "comment", min_count=1)
        (tmp_path / "code_vocab.json").write_text(json.dumps(code_vocab.to_json()))
        (tmp_path / "comment_vocab.json").write_text(json.dumps(comment_vocab.to_json()))

        lm = tmp_path / "lm.ckpt"
        assert run_cli([
            "train-lm", "--corpus", str(sources), "--out", str(lm),
            "--hidden", "12", "--d-char", "8", "--epochs", "1", "--lr", "0.3",
        ]) == 0

        sem = tmp_path / "sem.vec"
        assert run_cli([
            "extract-semantic", "--checkpoint", str(lm), "--corpus", str(sources),
            "--vocab", str(tmp_path / "code_vocab.json"), "--out", str(sem),
        ]) == 0

        nerck = tmp_path / "ner.ckpt"
        assert run_cli([
            "train-ner", "--train", str(conll), "--semantic", str(sem), "--out", str(nerck),
            "--hidden", "8", "--d-proj", "10", "--epochs", "1",
        ]) == 0

        assert run_cli(["eval-ner", "--checkpoint", str(nerck), "--gold", str(conll)]) == 0

        syn = tmp_path / "syn.vec"
        assert run_cli([
            "extract-syntactic", "--checkpoint", str(nerck), "--corpus", str(conll),
            "--vocab", str(tmp_path / "code_vocab.json"), "--out", str(syn),
        ]) == 0

        comb = tmp_path / "comb.vec"
        assert run_cli(["concat-tables", "--semantic", str(sem), "--syntactic", str(syn), "--out", str(comb)]) == 0

        # preprocessed pairs file for training
        train = tmp_path / "train.jsonl"
        with open(train, "w") as f:
            for p in pairs:
                f.write(json.dumps({"id": p.id, "code": " ".join(p.code_tokens), "comment": " ".join(p.comment_tokens)}) + "\n")

        summ = tmp_path / "summ.ckpt"
        assert run_cli([
            "train-summarizer", "--mode", "lamner", "--semantic", str(sem), "--syntactic", str(syn),
            "--comment-vocab", str(tmp_path / "comment_vocab.json"),
            "--train", str(train), "--out", str(summ),
            "--enc-hidden", "16", "--dec-hidden", "16", "--dec-emb", "8", "--epochs", "1",
        ]) == 0

        preds = tmp_path / "preds.jsonl"
        att_dir = tmp_path / "att"
        assert run_cli([
            "generate", "--checkpoint", str(summ), "--input", str(train),
            "--out", str(preds), "--attention-dir", str(att_dir),
        ]) == 0
        assert preds.exists()
        assert list(att_dir.glob("*.att"))

        report = tmp_path / "report.json"
        assert run_cli([
            "evaluate", "--predictions", str(preds), "--references", str(train), "--out", str(report)
        ]) == 0
        assert set(json.loads(report.read_text())) == {
            "bleu1", "bleu2", "bleu3", "bleu4", "rouge_l", "meteor", "cider"
        }


class TestRunPipelineCommand:
    def test_env_var_overrides_config_path(self, tmp_path, monkeypatch, capsys):
        conf = tmp_path / "env.conf"
        conf.write_text(
            "include desk-scale\ndata.bundled_size = 30\ncharlm.epochs = 1\n"
            "ner.epochs = 1\nsumm.epochs = 1\n"
        )
        monkeypatch.setenv("COMMENTGEN_CONFIG", str(conf))
        workdir = tmp_path / "run"
        assert run_cli(["run-pipeline", "--workdir", str(workdir)]) == 0
        assert (workdir / "report.json").exists()

    def test_failure_exit_names_stage(self, tmp_path, capsys):
        rc = run_cli([
            "run-pipeline", "--workdir", str(tmp_path / "w"),
            "--dataset", str(tmp_path / "nope.jsonl"),
        ])
        assert rc == 1
        assert "prepare" in capsys.readouterr().err


class TestSelfTestCommand:
    def test_exit_zero(self, capsys):
        assert run_cli(["self-test"]) == 0
