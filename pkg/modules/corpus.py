"""
Corpus Module
Loads line-aligned bitext, normalizes and tokenizes it, and builds the
target-side vocabulary used by noising
"""

import csv
import hashlib
import logging
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Tuple

import numpy as np

from config import SEP_TOKEN
from modules.errors import (
    DecodeError, EmptyCorpusError, LineCountMismatchError, UsageError, VocabularyError,
)
from modules.settings import NormConfig

logger = logging.getLogger(__name__)

_LANG_RE = re.compile(r"^[a-z0-9][a-z0-9_-]*$")


@dataclass(frozen=True, order=True)
class LanguageTag:
    code: str

    def __post_init__(self):
        if not self.code or not _LANG_RE.match(self.code):
            raise UsageError(f"invalid language tag {self.code!r}: must be non-empty, lowercase, no whitespace")

    def __str__(self):
        return self.code


def as_language(value):
    return value if isinstance(value, LanguageTag) else LanguageTag(str(value))


@dataclass(frozen=True)
class Sentence:
    raw: str
    tokens: Tuple[str, ...]
    norm_id: str

    def __len__(self):
        return len(self.tokens)

    @property
    def text(self):
        return " ".join(self.tokens)

    @property
    def surface_tokens(self):
        """Tokens with the original casing, used for everything written out"""
        if "fold" not in self.norm_id:
            return self.tokens
        return _tokenize(self.raw, NormConfig.from_id(self.norm_id).form, case_fold=False)

    @property
    def surface(self):
        return " ".join(self.surface_tokens)


def _tokenize(raw, form, case_fold):
    text = unicodedata.normalize(form, raw)
    if case_fold:
        text = unicodedata.normalize(form, text.casefold())
    # the separator is reserved for generator inputs
    text = text.replace(SEP_TOKEN, " ")
    return tuple(text.split())


def normalize(raw, norm=None):
    """
    Normalize one line of text

    Steps, in order: unicode composition, case folding (optional),
    separator stripping, whitespace collapsing and splitting.
    """
    norm = norm or NormConfig()
    return Sentence(raw=raw, tokens=_tokenize(raw, norm.form, norm.case_fold), norm_id=norm.norm_id)


@dataclass(frozen=True)
class BitextCorpus:
    pivot_lang: LanguageTag
    other_lang: LanguageTag
    pairs: Tuple[Tuple[Sentence, Sentence], ...]
    corpus_id: str
    source_lines: Tuple[int, ...] = ()
    dropped_lines: Tuple[int, ...] = ()

    def __len__(self):
        return len(self.pairs)

    @property
    def drop_count(self):
        return len(self.dropped_lines)

    def pivot(self, index):
        return self.pairs[index][0]

    def other(self, index):
        return self.pairs[index][1]

    def side(self, side):
        if side not in ("pivot", "other"):
            raise UsageError(f"side must be 'pivot' or 'other', got {side!r}")
        position = 0 if side == "pivot" else 1
        return [pair[position] for pair in self.pairs]

    def fingerprint(self):
        """Content hash, stable across runs"""
        digest = hashlib.blake2b(digest_size=16)
        digest.update(f"{self.pivot_lang}\t{self.other_lang}\t{self.corpus_id}\n".encode("utf-8"))
        for pivot, other in self.pairs:
            digest.update(f"{pivot.raw}\t{other.raw}\n".encode("utf-8"))
        return digest.hexdigest()


def corpus_from_lines(pivot_lines, other_lines, pivot_lang, other_lang, norm=None, corpus_id=None):
    """
    Build a corpus from two aligned lists of raw lines

    Pairs where either side normalizes to nothing are dropped and their
    zero-based line numbers recorded in `dropped_lines`.
    """
    pivot_lang, other_lang = as_language(pivot_lang), as_language(other_lang)
    norm = norm or NormConfig()
    if len(pivot_lines) != len(other_lines):
        raise LineCountMismatchError("<pivot>", len(pivot_lines), "<other>", len(other_lines))

    other_norm = norm.for_other()
    pairs, kept, dropped = [], [], []
    for line_no, (pivot_raw, other_raw) in enumerate(zip(pivot_lines, other_lines)):
        pivot = normalize(pivot_raw, norm)
        other = normalize(other_raw, other_norm)
        if not pivot.tokens or not other.tokens:
            dropped.append(line_no)
            continue
        pairs.append((pivot, other))
        kept.append(line_no)

    corpus_id = corpus_id or f"{pivot_lang}-{other_lang}"
    if dropped:
        logger.info("%s: dropped %d empty pair(s) of %d", corpus_id, len(dropped), len(pivot_lines))
    return BitextCorpus(
        pivot_lang=pivot_lang,
        other_lang=other_lang,
        pairs=tuple(pairs),
        corpus_id=corpus_id,
        source_lines=tuple(kept),
        dropped_lines=tuple(dropped),
    )


def read_lines(path):
    """Read a UTF-8, LF-terminated text file into a list of lines"""
    path = Path(path)
    data = path.read_bytes()
    chunks = data.split(b"\n")
    if chunks and chunks[-1] == b"":
        chunks.pop()
    lines = []
    for number, chunk in enumerate(chunks, start=1):
        try:
            lines.append(chunk.decode("utf-8").rstrip("\r"))
        except UnicodeDecodeError as e:
            raise DecodeError(path, number, e.reason)
    return lines


def load_bitext(pivot_path, other_path, pivot_lang, other_lang, norm=None, corpus_id=None):
    """
    Load a bitext from two line-aligned files

    Returns:
        BitextCorpus with pairs in file order
    """
    pivot_lines = read_lines(pivot_path)
    other_lines = read_lines(other_path)
    if len(pivot_lines) != len(other_lines):
        raise LineCountMismatchError(pivot_path, len(pivot_lines), other_path, len(other_lines))
    corpus = corpus_from_lines(pivot_lines, other_lines, pivot_lang, other_lang, norm, corpus_id)
    logger.info("loaded %s: %d pairs (%d dropped)", corpus.corpus_id, len(corpus), corpus.drop_count)
    return corpus


def load_tsv_bitext(tsv_path, pivot_lang, other_lang, norm=None, corpus_id=None, pivot_column=0):
    """Load a bitext from a two-column TSV file"""
    pivot_lines, other_lines = [], []
    for number, line in enumerate(read_lines(tsv_path), start=1):
        row = next(csv.reader([line], delimiter="\t", quoting=csv.QUOTE_NONE))
        if len(row) != 2:
            raise DecodeError(tsv_path, number, f"expected 2 tab-separated columns, found {len(row)}")
        pivot_lines.append(row[pivot_column])
        other_lines.append(row[1 - pivot_column])
    corpus = corpus_from_lines(pivot_lines, other_lines, pivot_lang, other_lang, norm, corpus_id)
    logger.info("loaded %s from TSV: %d pairs (%d dropped)", corpus.corpus_id, len(corpus), corpus.drop_count)
    return corpus


def load_manifest_entry(entry, norm=None):
    if entry.tsv_path:
        return load_tsv_bitext(entry.tsv_path, entry.pivot_lang, entry.other_lang, norm)
    return load_bitext(entry.pivot_path, entry.other_path, entry.pivot_lang, entry.other_lang, norm)


@dataclass(frozen=True)
class Vocabulary:
    entries: Dict[str, int]
    total: int
    source_corpus_id: str
    _tokens: np.ndarray = field(init=False, repr=False, compare=False)
    _cumulative: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if any(count < 1 for count in self.entries.values()):
            raise VocabularyError("vocabulary counts must be >= 1")
        if self.total != sum(self.entries.values()):
            raise VocabularyError("vocabulary total does not match its counts")
        # sorted so sampling does not depend on insertion order
        tokens = sorted(self.entries)
        counts = np.array([self.entries[t] for t in tokens], dtype=np.float64)
        object.__setattr__(self, "_tokens", np.array(tokens, dtype=object))
        object.__setattr__(self, "_cumulative", np.cumsum(counts) / counts.sum() if len(tokens) else counts)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, token):
        return token in self.entries

    def sample(self, rng, weighting="frequency"):
        """Draw one token; `weighting` is 'frequency' or 'uniform'"""
        if not self.entries:
            raise VocabularyError(f"cannot sample from the empty vocabulary of {self.source_corpus_id}")
        if weighting == "uniform":
            return self._tokens[rng.integers(len(self._tokens))]
        position = int(np.searchsorted(self._cumulative, rng.random(), side="right"))
        return self._tokens[min(position, len(self._tokens) - 1)]


def build_vocabulary(corpus, side="other"):
    """
    Count every token occurrence on one side of a corpus

    Returns:
        Vocabulary whose total equals the side's token count
    """
    if len(corpus) == 0:
        raise EmptyCorpusError(f"cannot build a vocabulary from empty corpus {corpus.corpus_id}")
    counts = Counter()
    for sentence in corpus.side(side):
        counts.update(sentence.tokens)
    return Vocabulary(entries=dict(counts), total=sum(counts.values()), source_corpus_id=corpus.corpus_id)
