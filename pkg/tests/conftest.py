"""Shared fixtures: synthetic corpora and a small multilingual world"""

import json
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pytest

from modules.corpus import corpus_from_lines
from modules.settings import NormConfig

ECHO = str(Path(__file__).with_name("echo_generator.py"))


def random_sentences(rng, count, vocab, min_len=3, max_len=30):
    lengths = rng.integers(min_len, max_len + 1, size=count)
    return [[vocab[k] for k in rng.integers(len(vocab), size=n)] for n in lengths]


def make_corpus(pivot_sentences, other_lang="de", pivot_lang="en", other_sentences=None, corpus_id=None):
    """Corpus from token lists; the other side defaults to a tagged copy of the pivot side"""
    pivot_lines = [" ".join(s) for s in pivot_sentences]
    if other_sentences is None:
        other_sentences = [[f"{other_lang}_{t}" for t in s] for s in pivot_sentences]
    other_lines = [" ".join(s) for s in other_sentences]
    return corpus_from_lines(pivot_lines, other_lines, pivot_lang, other_lang, NormConfig(), corpus_id)


def build_world(langs=("de", "fr"), size=500, shared=150, seed=7, vocab_size=50):
    """
    Pivot corpora for several languages over one 50-word pivot vocabulary

    Each language's words are given by a bijective lexicon (w12 -> de12). The
    second language's corpus contains `shared` planted copies of sentences
    from the first one, a third of them verbatim and the rest with exactly
    one word substituted. The expected multi-way records for that pair are
    enumerated from the plan.
    """
    rng = np.random.default_rng(seed)
    vocab = [f"w{k}" for k in range(vocab_size)]
    lexicons = {lang: {w: f"{lang}{k}" for k, w in enumerate(vocab)} for lang in langs}
    pivots = {lang: random_sentences(rng, size, vocab, 8, 12) for lang in langs}

    first, second = langs[0], langs[1]
    left_rows = rng.choice(size, shared, replace=False)
    right_rows = rng.choice(size, shared, replace=False)
    planted = []
    for k, (i, j) in enumerate(zip(left_rows, right_rows)):
        variant = list(pivots[first][i])
        if k % 3:
            p = int(rng.integers(len(variant)))
            choices = [w for w in vocab if w != variant[p]]
            variant[p] = choices[int(rng.integers(len(choices)))]
        pivots[second][j] = variant
        planted.append((int(i), int(j)))

    def translate(lang, sentence):
        return [lexicons[lang][w] for w in sentence]

    expected = []
    for i, j in sorted(planted):
        x1 = pivots[first][i]
        expected.append({
            "pivot": " ".join(x1),
            "left": " ".join(translate(first, x1)),
            "right": " ".join(translate(second, x1)),
            "left_index": i,
            "right_index": j,
        })
    others = {lang: [translate(lang, s) for s in pivots[lang]] for lang in langs}
    return SimpleNamespace(langs=tuple(langs), pivots=pivots, others=others, lexicons=lexicons,
                           expected=expected, planted=sorted(planted))


def write_world(world, directory):
    """Write corpora, lexicons and a manifest; returns (manifest path, lexicon paths)"""
    directory.mkdir(parents=True, exist_ok=True)
    entries, lexicon_paths = [], {}
    for lang in world.langs:
        pivot_path = directory / f"en-{lang}.en"
        other_path = directory / f"en-{lang}.{lang}"
        pivot_path.write_text("".join(" ".join(s) + "\n" for s in world.pivots[lang]), encoding="utf-8")
        other_path.write_text("".join(" ".join(s) + "\n" for s in world.others[lang]), encoding="utf-8")
        entries.append({"pivot_path": pivot_path.name, "other_path": other_path.name,
                        "pivot_lang": "en", "other_lang": lang})
        lexicon_path = directory / f"{lang}.lex"
        lexicon_path.write_text("".join(f"{w}\t{t}\n" for w, t in world.lexicons[lang].items()), encoding="utf-8")
        lexicon_paths[lang] = str(lexicon_path)
    manifest = directory / "manifest.json"
    manifest.write_text(json.dumps(entries, indent=2), encoding="utf-8")
    return manifest, lexicon_paths


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


@pytest.fixture
def world():
    return build_world()


@pytest.fixture
def world_files(world, tmp_path):
    manifest, lexicons = write_world(world, tmp_path / "data")
    return SimpleNamespace(world=world, manifest=str(manifest), lexicons=lexicons, root=tmp_path)
