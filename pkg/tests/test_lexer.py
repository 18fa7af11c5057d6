"""Lexer and labeling rules: operation examples, the golden corpus, error
cases, and the structural invariants."""

import json

import pytest

from commentgen import javalex as jl
from commentgen import synth


class TestTokenize:
    def test_line_comment_stripped(self):
        m = jl.tokenize("int x = 5 ; // note")
        assert [t.text for t in m.tokens] == ["int", "x", "=", "5", ";"]

    def test_paper_example_token_count(self):
        m = jl.tokenize("public Boolean getBoolean2 ( ) { }")
        assert len(m.tokens) == 7

    def test_escaped_quote_single_string_token(self):
        m = jl.tokenize('"a\\"b"')
        assert len(m.tokens) == 1
        assert m.tokens[0].kind == "string"

    def test_spans_match_source(self):
        src = "public  int\tgetX ( ) { return 0xFF ; } // c"
        m = jl.tokenize(src)
        for t in m.tokens:
            assert src[t.span[0] : t.span[1]] == t.text

    def test_spans_strictly_increasing(self):
        m = jl.tokenize("a = b + c ;")
        spans = [t.span for t in m.tokens]
        for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
            assert e1 <= s2 and s1 < e1

    def test_unterminated_string(self):
        with pytest.raises(jl.LexError, match="unterminated string"):
            jl.tokenize('s = "oops ;')

    def test_unterminated_char(self):
        with pytest.raises(jl.LexError, match="unterminated char"):
            jl.tokenize("c = 'x ;")

    def test_unterminated_block_comment(self):
        with pytest.raises(jl.LexError, match="unterminated block comment"):
            jl.tokenize("int x ; /* never closed")

    def test_operators_longest_match(self):
        m = jl.tokenize("a >>= b >>> c >= d > e")
        assert [t.text for t in m.tokens if t.kind == "operator"] == [">>=", ">>>", ">=", ">"]


class TestLabelRules:
    def test_label_totality_over_synth_corpus(self):
        records = synth.make_corpus(120, seed=3)
        for r in records:
            m = jl.lex_and_label(r["code"])
            for t in m.tokens:
                assert t.label in jl.ENTITY_LABELS

    def test_determinism(self):
        src = "public List < String > get ( ) { return new ArrayList ( ) ; }"
        a = [(t.text, t.label) for t in jl.lex_and_label(src).tokens]
        b = [(t.text, t.label) for t in jl.lex_and_label(src).tokens]
        assert a == b

    def test_class_never_followed_by_paren(self):
        records = synth.make_corpus(150, seed=4)
        for r in records:
            m = jl.lex_and_label(r["code"])
            for i, t in enumerate(m.tokens):
                if t.label == "class" and i + 1 < len(m.tokens):
                    assert m.tokens[i + 1].text != "("
                if t.label == "body-start-delimiter":
                    assert t.text == "{"

    def test_corpus_level_class_index(self):
        # "Foo" is only known as a class from another method in the corpus
        defining = jl.tokenize("Foo foo = null ;")
        using = jl.tokenize("x = Foo ( ) ;")
        index = jl.build_class_index([defining, using])
        labeled = jl.label(using, index)
        assert labeled.tokens[2].label == "object"
        labeled_alone = jl.label(using)
        assert labeled_alone.tokens[2].label == "function"

    def test_sequence_labels_num_str_replacement(self):
        m = jl.lex_and_label('int x = 42 ; String s = "hi" ;')
        seq = jl.sequence_labels(m)
        assert ("NUM", "number") in seq
        assert ("STR", "string") in seq
        assert all(tok != "42" for tok, _ in seq)

    def test_sequence_labels_requires_labels(self):
        with pytest.raises(ValueError):
            jl.sequence_labels(jl.tokenize("int x ;"))

    def test_empty_method_body(self):
        seq = jl.sequence_labels(jl.lex_and_label("{ }"))
        assert seq == [("{", "body-start-delimiter"), ("}", "body-end-delimiter")]


class TestGoldenCorpus:
    def test_thirty_methods_exact_agreement(self, lexer_golden):
        assert len(lexer_golden) == 30
        failures = []
        for case in lexer_golden:
            m = jl.lex_and_label(case["source"])
            got = [[t.text, t.label] for t in m.tokens]
            if got != case["expected"]:
                failures.append(case["name"])
        assert failures == []


class TestRoundTrip:
    def test_reconstruct_equals_comment_stripped_source(self):
        sources = [
            "int x = 1 ; // note\nint y = 2 ;",
            "/* head */ public   void f ( ) { }",
            "a = b; /* mid */ c = d;",
        ]
        for src in sources:
            m = jl.tokenize(src)
            assert jl.reconstruct(m) == jl.strip_comments(src)

    def test_round_trip_over_synth_corpus(self):
        for r in synth.make_corpus(60, seed=5):
            m = jl.tokenize(r["code"])
            assert jl.reconstruct(m) == jl.strip_comments(r["code"])


class TestBraceBalance:
    def test_complete_methods_balance(self):
        for r in synth.make_corpus(80, seed=6):
            assert jl.brace_balance_ok(jl.tokenize(r["code"]))

    def test_negative_running_sum_detected(self):
        assert not jl.brace_balance_ok(jl.tokenize("} {"))

    def test_unclosed_detected(self):
        assert not jl.brace_balance_ok(jl.tokenize("{ { }"))
