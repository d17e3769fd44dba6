from collections import Counter

import numpy as np
import pytest

from modules.corpus import (
    LanguageTag,
    build_vocabulary,
    corpus_from_lines,
    load_bitext,
    load_tsv_bitext,
    normalize,
)
from modules.errors import DecodeError, EmptyCorpusError, LineCountMismatchError, UsageError
from modules.settings import NormConfig
from tests.conftest import make_corpus, random_sentences


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


class TestNormalize:
    def test_case_fold_and_whitespace(self):
        assert normalize("The  cat", NormConfig(case_fold=True)).tokens == ("the", "cat")

    def test_empty(self):
        assert normalize("").tokens == ()

    def test_repeated_tokens_kept(self):
        sentence = normalize("a b a")
        assert sentence.tokens == ("a", "b", "a")
        assert len(sentence) == 3

    def test_separator_is_stripped(self):
        assert normalize("a <sep> b").tokens == ("a", "b")

    def test_unicode_composition(self):
        assert normalize("café").tokens == ("café",)

    @pytest.mark.parametrize("raw", ["  Hello   World ", "x\ty\nz", "ÉCOLE école", ""])
    def test_idempotent_on_joined_tokens(self, raw):
        norm = NormConfig()
        first = normalize(raw, norm)
        assert normalize(" ".join(first.tokens), norm).tokens == first.tokens

    def test_surface_keeps_casing(self):
        sentence = normalize("The Cat", NormConfig(case_fold=True))
        assert sentence.tokens == ("the", "cat")
        assert sentence.surface == "The Cat"

    def test_norm_id_round_trip(self):
        norm = NormConfig(form="NFKC", case_fold=True)
        assert NormConfig.from_id(norm.norm_id).norm_id == norm.norm_id


class TestLanguageTag:
    @pytest.mark.parametrize("code", ["", "EN", "e n", " de"])
    def test_rejects_bad_codes(self, code):
        with pytest.raises(UsageError):
            LanguageTag(code)

    def test_accepts_lowercase(self):
        assert str(LanguageTag("zh-tw")) == "zh-tw"


class TestLoadBitext:
    def test_three_lines(self, tmp_path):
        pivot = write_lines(tmp_path / "a.en", ["one", "two", "three"])
        other = write_lines(tmp_path / "a.de", ["eins", "zwei", "drei"])
        corpus = load_bitext(pivot, other, "en", "de")
        assert len(corpus) == 3
        assert corpus.drop_count == 0
        assert corpus.corpus_id == "en-de"
        assert corpus.pivot(1).tokens == ("two",)

    def test_line_count_mismatch_names_both_counts(self, tmp_path):
        pivot = write_lines(tmp_path / "a.en", ["a"] * 4)
        other = write_lines(tmp_path / "a.de", ["b"] * 5)
        with pytest.raises(LineCountMismatchError) as info:
            load_bitext(pivot, other, "en", "de")
        assert info.value.pivot_count == 4
        assert info.value.other_count == 5
        assert "4" in str(info.value) and "5" in str(info.value)

    def test_empty_side_dropped_and_counted(self, tmp_path):
        pivot = write_lines(tmp_path / "a.en", ["one", "   ", "three"])
        other = write_lines(tmp_path / "a.de", ["eins", "zwei", "drei"])
        corpus = load_bitext(pivot, other, "en", "de")
        assert len(corpus) == 2
        assert corpus.drop_count == 1
        assert corpus.dropped_lines == (1,)
        assert corpus.source_lines == (0, 2)

    def test_undecodable_bytes_report_line(self, tmp_path):
        pivot = tmp_path / "a.en"
        pivot.write_bytes(b"fine\n\xff\xfe broken\n")
        other = write_lines(tmp_path / "a.de", ["gut", "kaputt"])
        with pytest.raises(DecodeError) as info:
            load_bitext(pivot, other, "en", "de")
        assert info.value.line_number == 2

    def test_loading_twice_is_identical(self, tmp_path):
        pivot = write_lines(tmp_path / "a.en", ["The cat", "a dog"])
        other = write_lines(tmp_path / "a.de", ["Die Katze", "ein Hund"])
        first = load_bitext(pivot, other, "en", "de")
        second = load_bitext(pivot, other, "en", "de")
        assert first == second
        assert first.fingerprint() == second.fingerprint()

    def test_tsv(self, tmp_path):
        tsv = write_lines(tmp_path / "a.tsv", ["hello\thallo", "bye\ttschuess"])
        corpus = load_tsv_bitext(tsv, "en", "de")
        assert [p.text for p, _ in corpus.pairs] == ["hello", "bye"]
        assert [o.text for _, o in corpus.pairs] == ["hallo", "tschuess"]

    def test_tsv_wrong_column_count(self, tmp_path):
        tsv = write_lines(tmp_path / "a.tsv", ["hello\thallo", "only one column"])
        with pytest.raises(DecodeError) as info:
            load_tsv_bitext(tsv, "en", "de")
        assert info.value.line_number == 2


class TestVocabulary:
    def test_counts(self):
        corpus = make_corpus([["p"], ["q"]], other_sentences=[["a", "b"], ["b", "c"]])
        vocab = build_vocabulary(corpus, "other")
        assert vocab.entries == {"a": 1, "b": 2, "c": 1}
        assert vocab.total == 4

    def test_single_pair(self):
        corpus = make_corpus([["p"]], other_sentences=[["x"]])
        vocab = build_vocabulary(corpus, "other")
        assert vocab.entries == {"x": 1}
        assert vocab.total == 1

    def test_entries_match_independent_count(self, rng):
        alphabet = [f"t{k}" for k in range(100)]
        sentences = random_sentences(rng, 10_000, alphabet, 1, 10)
        corpus = make_corpus([["p"]] * len(sentences), other_sentences=sentences)
        vocab = build_vocabulary(corpus, "other")
        expected = Counter(token for sentence in sentences for token in sentence)
        assert set(vocab.entries) == set(alphabet)
        assert vocab.entries == dict(expected)
        assert vocab.total == sum(len(s) for s in sentences)

    def test_empty_corpus(self):
        corpus = corpus_from_lines([], [], "en", "de")
        with pytest.raises(EmptyCorpusError):
            build_vocabulary(corpus)

    def test_sampling_is_reproducible(self):
        corpus = make_corpus([["p"]] * 3, other_sentences=[["a", "b"], ["b", "c"], ["c", "c"]])
        vocab = build_vocabulary(corpus)
        first, second = np.random.default_rng(5), np.random.default_rng(5)
        draws_a = [vocab.sample(first) for _ in range(50)]
        draws_b = [vocab.sample(second) for _ in range(50)]
        assert draws_a == draws_b
        assert set(draws_a) <= {"a", "b", "c"}

    def test_frequency_weighting(self):
        corpus = make_corpus([["p"]] * 2, other_sentences=[["a"] * 9, ["b"]])
        vocab = build_vocabulary(corpus)
        generator = np.random.default_rng(1)
        draws = Counter(vocab.sample(generator, "frequency") for _ in range(20_000))
        assert draws["a"] / 20_000 == pytest.approx(0.9, abs=0.01)
        uniform = Counter(vocab.sample(generator, "uniform") for _ in range(20_000))
        assert uniform["a"] / 20_000 == pytest.approx(0.5, abs=0.02)
