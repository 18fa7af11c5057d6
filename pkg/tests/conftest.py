import json
import os
from pathlib import Path

import numpy as np
import pytest

from commentgen import corpus as cp
from commentgen import metrics, summarizer, synth
from commentgen.embeddings import EmbeddingTable

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def metrics_golden():
    return json.load(open(GOLDEN_DIR / "metrics_golden.json"))


@pytest.fixture(scope="session")
def lexer_golden():
    return json.load(open(GOLDEN_DIR / "lexer_golden.json"))


@pytest.fixture(scope="session")
def overfit_pairs():
    """Criterion 7's corpus: 50 synthetic preprocessed pairs."""
    records = synth.make_corpus(50, seed=9)
    return [
        cp.preprocess(
            cp.ParallelPair(
                tuple(r["code"].split()),
                tuple(cp.tokenize_comment(r["comment"])),
                r["id"],
            )
        )
        for r in records
    ]


@pytest.fixture(scope="session")
def overfit_vocabs(overfit_pairs):
    code_vocab = cp.build_vocab(overfit_pairs, "code", min_count=1)
    comment_vocab = cp.build_vocab(overfit_pairs, "comment", min_count=1)
    return code_vocab, comment_vocab


@pytest.fixture(scope="session")
def overfit_table(overfit_vocabs):
    code_vocab, _ = overfit_vocabs
    rng = np.random.default_rng(0)
    return EmbeddingTable(
        code_vocab.itos, rng.uniform(-0.3, 0.3, size=(len(code_vocab), 48))
    )


OVERFIT_CONFIG = summarizer.SummarizerConfig(
    enc_hidden_total=96,
    dec_hidden=96,
    att_dim=64,
    dec_emb_dim=32,
    dropout=0.1,
    learning_rate=0.5,
    batch_size=8,
    epochs=150,
    patience=12,
    seed=4,
)


@pytest.fixture(scope="session")
def overfit_model(overfit_pairs, overfit_vocabs, overfit_table):
    """Criterion 7's trained summarizer, shared by criteria 7, 8, and 10."""
    _, comment_vocab = overfit_vocabs
    model = summarizer.init_summarizer(
        overfit_table, comment_vocab, OVERFIT_CONFIG, mode="lamner"
    )
    model, history = summarizer.train_summarizer(
        model, overfit_pairs, config=OVERFIT_CONFIG
    )
    return model, history


def generations_for(model, pairs):
    outs = []
    records = []
    for p in pairs:
        out, rec = summarizer.generate(model, model.code_vocab.encode(p.code_tokens))
        outs.append(out)
        records.append(rec)
    return outs, records


def corpus_bleu1(outs, pairs):
    eval_pairs = metrics.make_pairs(outs, [list(p.comment_tokens) for p in pairs])
    return metrics.bleu(eval_pairs, 1)
