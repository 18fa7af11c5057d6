"""Character LM contracts: embedding extraction conventions, causality,
training determinism, and the per-type table."""

import numpy as np
import pytest

from commentgen import charlm
from commentgen import corpus as cp
from commentgen import javalex as jl
from commentgen.embeddings import fallback_row

LINES = [
    "int add ( int a ) { return a + 1 ; }",
    "void go ( ) { run ( ) ; }",
    "long id ( ) { return id ; }",
]

FAST = charlm.CharLmConfig(hidden=12, d_char=8, dropout=0.0, learning_rate=0.3, epochs=2, seed=5)


@pytest.fixture(scope="module")
def tiny_model():
    model, _ = charlm.train_char_lm(LINES, FAST)
    return model


class TestTokenEmbedding:
    def test_length_is_twice_hidden(self, tiny_model):
        vec = charlm.token_embedding(tiny_model, LINES[0], (0, 3))
        assert vec.shape == (2 * tiny_model.hidden,)
        assert np.all(np.isfinite(vec))

    def test_single_character_text(self, tiny_model):
        vec = charlm.token_embedding(tiny_model, "x", (0, 1))
        hs_fwd, hs_bwd = charlm.line_states(tiny_model, "x")
        np.testing.assert_array_equal(vec[: tiny_model.hidden], hs_fwd[0])
        np.testing.assert_array_equal(vec[tiny_model.hidden :], hs_bwd[0])

    def test_empty_span_rejected(self, tiny_model):
        with pytest.raises(ValueError):
            charlm.token_embedding(tiny_model, "abc", (1, 1))

    def test_contextuality(self, tiny_model):
        # the same token text in different contexts embeds differently
        a = charlm.token_embedding(tiny_model, "int a = b ;", (4, 5))
        b = charlm.token_embedding(tiny_model, "foo ( a ) ;", (6, 7))
        cos = float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
        assert cos < 0.999

    def test_exclude_first_convention_differs(self, tiny_model):
        inc = charlm.token_embedding(tiny_model, "abc def", (0, 3), convention="include_first")
        exc = charlm.token_embedding(tiny_model, "abc def", (0, 3), convention="exclude_first")
        assert not np.array_equal(inc, exc)
        np.testing.assert_array_equal(inc[: tiny_model.hidden], exc[: tiny_model.hidden])


class TestCausality:
    def test_forward_ignores_future_characters(self, tiny_model):
        a = "int x = 1 ;"
        b = "int x = 9 ;"  # differs only after position 7
        ha, _ = charlm.line_states(tiny_model, a)
        hb, _ = charlm.line_states(tiny_model, b)
        np.testing.assert_array_equal(ha[:8], hb[:8])
        assert not np.array_equal(ha[8:], hb[8:])

    def test_backward_ignores_past_characters(self, tiny_model):
        a = "abc = end ;"
        b = "xbc = end ;"  # differs only at position 0
        _, ba = charlm.line_states(tiny_model, a)
        _, bb = charlm.line_states(tiny_model, b)
        np.testing.assert_array_equal(ba[1:], bb[1:])
        assert not np.array_equal(ba[0], bb[0])


class TestTraining:
    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            charlm.train_char_lm([], FAST)

    def test_loss_no_worse_than_uniform(self):
        model, history = charlm.train_char_lm(LINES, FAST)
        bound = np.log(len(model.vocab)) + 0.1
        assert all(h <= bound for h in history)

    def test_deterministic_checkpoints(self, tmp_path):
        m1, _ = charlm.train_char_lm(LINES, FAST)
        m2, _ = charlm.train_char_lm(LINES, FAST)
        charlm.save(m1, tmp_path / "a.ckpt")
        charlm.save(m2, tmp_path / "b.ckpt")
        assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()

    def test_save_load_round_trip(self, tiny_model, tmp_path):
        charlm.save(tiny_model, tmp_path / "m.ckpt")
        loaded = charlm.load(tmp_path / "m.ckpt")
        assert loaded.hidden == tiny_model.hidden
        assert loaded.vocab.itos == tiny_model.vocab.itos
        a = charlm.token_embedding(tiny_model, "int x ;", (0, 3))
        b = charlm.token_embedding(loaded, "int x ;", (0, 3))
        np.testing.assert_array_equal(a, b)


class TestSemanticTable:
    def _vocab_and_methods(self):
        methods = [jl.tokenize(l) for l in LINES]
        pairs = [
            cp.ParallelPair(tuple(t for t, _ in jl.sequence_labels(jl.label(m))), ("c",))
            for m in methods
        ]
        vocab = cp.build_vocab(pairs, "code", min_count=1)
        return vocab, methods

    def test_single_occurrence_row_equals_embedding(self, tiny_model):
        vocab, methods = self._vocab_and_methods()
        table = charlm.build_semantic_table(tiny_model, methods, vocab, seed=1)
        # "add" occurs exactly once, in LINES[0] at span (4, 7)
        expected = charlm.token_embedding(tiny_model, LINES[0], (4, 7))
        np.testing.assert_allclose(table.row("add"), expected, atol=1e-12)

    def test_mean_over_occurrences(self, tiny_model):
        vocab, methods = self._vocab_and_methods()
        table = charlm.build_semantic_table(tiny_model, methods, vocab, seed=1)
        occurrences = []
        for m in methods:
            for tok in m.tokens:
                if tok.text == "return":
                    occurrences.append(charlm.token_embedding(tiny_model, m.source, tok.span))
        assert len(occurrences) == 2
        np.testing.assert_allclose(table.row("return"), np.mean(occurrences, axis=0), atol=1e-12)

    def test_absent_token_gets_seeded_fallback(self, tiny_model):
        vocab, methods = self._vocab_and_methods()
        table = charlm.build_semantic_table(tiny_model, methods, vocab, seed=9)
        np.testing.assert_array_equal(
            table.row("<unk>"), fallback_row("<unk>", table.dim, 9)
        )

    def test_numeric_occurrences_pool_under_num(self, tiny_model):
        vocab, methods = self._vocab_and_methods()
        table = charlm.build_semantic_table(tiny_model, methods, vocab, seed=1)
        span = next(t.span for t in jl.tokenize(LINES[0]).tokens if t.text == "1")
        expected = charlm.token_embedding(tiny_model, LINES[0], span)
        np.testing.assert_allclose(table.row("NUM"), expected, atol=1e-12)


class TestGeneration:
    def test_generates_from_first_char(self, tiny_model):
        out = charlm.generate_line(tiny_model, "i", max_len=50)
        assert out.startswith("i")
        assert "\n" not in out
