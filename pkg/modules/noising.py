"""
Noising Module
Builds self-supervised generator training examples: the target sentence is
corrupted with random insertions, removals and substitutions drawn from the
target-side vocabulary, and paired with its pivot sentence
"""

import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import Dict, Tuple

import numpy as np
from scipy import stats
from tqdm import tqdm

from config import NOISE_OPS, SEP_TOKEN
from modules.corpus import build_vocabulary
from modules.errors import DataError, EmptyCorpusError, VocabularyError
from modules.settings import NoiseConfig

logger = logging.getLogger(__name__)

INSERT, REMOVE, SUBSTITUTE = NOISE_OPS


@dataclass(frozen=True)
class NoiseResult:
    tokens: Tuple[str, ...]
    ops: Tuple[Tuple[int, str], ...]   # (original position, operation)

    @property
    def op_count(self):
        return len(self.ops)


@dataclass(frozen=True)
class NoisedTrainingExample:
    source: Tuple[str, ...]
    target: Tuple[str, ...]
    meta: Dict[str, object] = field(default_factory=dict, compare=False)

    def to_record(self):
        return {"source": " ".join(self.source), "target": " ".join(self.target), "meta": self.meta}


def pair_rng(seed, corpus_id, pair_index):
    """Generator for one pair, independent of worker count and schedule"""
    corpus_key = int.from_bytes(hashlib.blake2b(corpus_id.encode("utf-8"), digest_size=8).digest(), "little")
    return np.random.default_rng(np.random.SeedSequence([seed, corpus_key, pair_index]))


def _check_vocabulary(cfg, vocab):
    if cfg.needs_vocabulary and (vocab is None or len(vocab) == 0):
        raise VocabularyError("insert/substitute noise needs a non-empty vocabulary")


def noise_with_trace(y, cfg, vocab, rng):
    """
    Corrupt a token sequence, reporting which operations were applied

    Walks the original positions left to right; each position is noised with
    probability beta by exactly one operation drawn from cfg.op_weights.
    Insertion places the sampled token before the current one.
    """
    _check_vocabulary(cfg, vocab)
    out, ops = [], []
    weights = np.asarray(cfg.op_weights)
    for position, token in enumerate(y):
        if cfg.max_ops and len(ops) >= cfg.max_ops:
            out.append(token)
            continue
        if rng.random() >= cfg.beta:
            out.append(token)
            continue
        op = NOISE_OPS[rng.choice(3, p=weights)]
        if op == INSERT:
            out.append(vocab.sample(rng, cfg.sampling))
            out.append(token)
        elif op == SUBSTITUTE:
            out.append(vocab.sample(rng, cfg.sampling))
        ops.append((position, op))
    return NoiseResult(tokens=tuple(out), ops=tuple(ops))


def noise(y, cfg, vocab, rng):
    return noise_with_trace(y, cfg, vocab, rng).tokens


def make_training_example(x2, y2, cfg, vocab, rng, meta=None):
    """Source is x2 <sep> noise(y2); target is y2 untouched"""
    noised = noise(y2.surface_tokens, cfg, vocab, rng)
    return NoisedTrainingExample(
        source=tuple(x2.surface_tokens) + (SEP_TOKEN,) + noised,
        target=tuple(y2.surface_tokens),
        meta=dict(meta or {}),
    )


@dataclass
class EmitReport:
    pairs: int = 0
    positions: int = 0
    noised_positions: int = 0
    op_counts: Dict[str, int] = field(default_factory=lambda: {op: 0 for op in NOISE_OPS})

    def as_dict(self):
        return {
            "pairs": self.pairs,
            "positions": self.positions,
            "noised_positions": self.noised_positions,
            "op_counts": dict(self.op_counts),
        }


_WORKER = {}


def _init_worker(corpus, cfg, vocab):
    _WORKER.update(corpus=corpus, cfg=cfg, vocab=vocab)


def _noise_range(bounds):
    start, stop = bounds
    corpus, cfg, vocab = _WORKER["corpus"], _WORKER["cfg"], _WORKER["vocab"]
    rows = []
    for index in range(start, stop):
        x2, y2 = corpus.pairs[index]
        rng = pair_rng(cfg.seed, corpus.corpus_id, index)
        result = noise_with_trace(y2.surface_tokens, cfg, vocab, rng)
        example = NoisedTrainingExample(
            source=tuple(x2.surface_tokens) + (SEP_TOKEN,) + result.tokens,
            target=tuple(y2.surface_tokens),
            meta={"corpus": corpus.corpus_id, "index": index},
        )
        rows.append((example, len(y2), result.ops))
    return rows


def _open_for_write(path):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", encoding="utf-8", newline="\n")
    except OSError as e:
        raise DataError(f"cannot write {path}: {e}")


def emit_training_set(corpus, cfg, source_path=None, target_path=None, jsonl_path=None,
                      vocab=None, progress=False):
    """
    Write one generator training example per corpus pair, in corpus order

    Args:
        corpus: BitextCorpus whose other side is the generator's target language
        cfg: NoiseConfig
        source_path, target_path: parallel plain-text outputs
        jsonl_path: optional {source, target, meta} output
        vocab: noising vocabulary; built from the corpus's other side when omitted

    Returns:
        EmitReport
    """
    if len(corpus) == 0:
        raise EmptyCorpusError(f"corpus {corpus.corpus_id} is empty")
    if vocab is None:
        vocab = build_vocabulary(corpus, side="other")
    _check_vocabulary(cfg, vocab)

    report = EmitReport()
    handles = {}
    try:
        for name, path in (("source", source_path), ("target", target_path), ("jsonl", jsonl_path)):
            if path:
                handles[name] = (path, _open_for_write(path))

        step = 1024
        bounds = [(start, min(start + step, len(corpus))) for start in range(0, len(corpus), step)]
        bar = tqdm(total=len(corpus), desc=f"noise {corpus.corpus_id}", unit="pair",
                   disable=not progress, leave=False)
        pool = None
        if cfg.jobs > 1:
            pool = Pool(cfg.jobs, initializer=_init_worker, initargs=(corpus, cfg, vocab))
            chunks = pool.imap(_noise_range, bounds)
        else:
            _init_worker(corpus, cfg, vocab)
            chunks = map(_noise_range, bounds)
        try:
            for rows in chunks:
                for example, length, ops in rows:
                    _write_example(handles, example)
                    report.pairs += 1
                    report.positions += length
                    report.noised_positions += len(ops)
                    for _, op in ops:
                        report.op_counts[op] += 1
                bar.update(len(rows))
        finally:
            bar.close()
            if pool is not None:
                pool.terminate()
            _WORKER.clear()
    finally:
        for _, handle in handles.values():
            handle.close()

    logger.info("%s: emitted %d training examples (%d/%d positions noised)",
                corpus.corpus_id, report.pairs, report.noised_positions, report.positions)
    return report


def _write_example(handles, example):
    for name, (path, handle) in handles.items():
        if name == "source":
            line = " ".join(example.source)
        elif name == "target":
            line = " ".join(example.target)
        else:
            line = json.dumps(example.to_record(), ensure_ascii=False, separators=(",", ":"))
        try:
            handle.write(line + "\n")
        except OSError as e:
            raise DataError(f"cannot write {path}: {e}")


def noise_statistics(sentences, cfg, vocab, corpus_id="stats"):
    """
    Empirical noise behaviour over a list of token sequences

    Returns:
        dict with positions, empirical rate, op shares, and test p-values
        (binomial test of the rate against beta, chi-square of the op mix
        against the configured weights)
    """
    positions, ops = 0, Counter()
    for index, tokens in enumerate(sentences):
        result = noise_with_trace(tokens, cfg, vocab, pair_rng(cfg.seed, corpus_id, index))
        positions += len(tokens)
        ops.update(op for _, op in result.ops)

    noised = sum(ops.values())
    summary = {
        "beta": cfg.beta,
        "positions": positions,
        "noised_positions": noised,
        "rate": noised / positions if positions else 0.0,
        "op_shares": {op: (ops[op] / noised if noised else 0.0) for op in NOISE_OPS},
        "rate_pvalue": None,
        "mix_pvalue": None,
    }
    if positions and not cfg.max_ops:
        summary["rate_pvalue"] = float(stats.binomtest(noised, positions, cfg.beta).pvalue)
    observed = np.array([ops[op] for op in NOISE_OPS], dtype=float)
    expected = np.asarray(cfg.op_weights) * noised
    if noised and np.all(expected > 0):
        summary["mix_pvalue"] = float(stats.chisquare(observed, expected).pvalue)
    return summary
