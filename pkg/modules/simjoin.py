"""
Similarity Join Module
Finds every cross-corpus pair whose pivot sentences are within the
gamma-scaled edit-distance threshold, using a length-bucketed q-gram
inverted index, loss-free length and count filters, and banded verification
"""

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Dict, List, Tuple

from tqdm import tqdm

from config import BRUTE_FORCE_MAX_PAIRS
from modules.corpus import Sentence
from modules.distance import bounded_edit_distance, budget, length_compatible, threshold
from modules.errors import LanguageMismatchError, OracleSizeError
from modules.settings import JoinConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidateAlignedExample:
    left_corpus_id: str
    right_corpus_id: str
    left_index: int
    right_index: int
    x1: Sentence
    y1: Sentence
    x2: Sentence
    y2: Sentence
    distance: int
    threshold: float

    @property
    def key(self):
        return (self.x1.tokens, self.y1.tokens, self.x2.tokens, self.y2.tokens)

    def to_record(self, stats_only=False):
        record = {
            "left_corpus": self.left_corpus_id,
            "right_corpus": self.right_corpus_id,
            "left_index": self.left_index,
            "right_index": self.right_index,
        }
        if not stats_only:
            record.update({
                "x1": self.x1.surface,
                "y1": self.y1.surface,
                "x2": self.x2.surface,
                "y2": self.y2.surface,
            })
        record["distance"] = self.distance
        record["threshold"] = self.threshold
        return record


@dataclass
class JoinStats:
    left_admitted: int = 0
    left_skipped: int = 0
    right_admitted: int = 0
    right_skipped: int = 0
    filtered: int = 0          # pairs surviving the length and count filters
    verified: int = 0          # pairs passing banded verification
    duplicates: int = 0
    capped: int = 0
    emitted: int = 0

    def as_dict(self):
        return dict(self.__dict__)


def qgrams(tokens, q):
    return [tuple(tokens[k:k + q]) for k in range(len(tokens) - q + 1)]


def required_overlap(len_a, len_b, q, tau):
    """Lower bound on shared q-grams for two sequences within distance tau"""
    return max(len_a, len_b) - q + 1 - tau * q


@dataclass
class SimIndex:
    """
    Inverted index over one corpus's pivot side

    `buckets[length // bucket_width][qgram]` holds one (line index, length)
    posting per q-gram occurrence, sorted by line index. `by_length` lists the
    admitted sentences of each length for the direct-verification fallback.
    """

    corpus_id: str
    q: int
    bucket_width: int
    buckets: Dict[int, Dict[tuple, List[Tuple[int, int]]]] = field(default_factory=dict)
    by_length: Dict[int, List[int]] = field(default_factory=dict)
    lengths: Dict[int, int] = field(default_factory=dict)
    skipped: int = 0

    @property
    def admitted(self):
        return len(self.lengths)

    def postings(self, gram, min_len, max_len):
        """Postings for `gram` restricted to sentence lengths in [min_len, max_len]"""
        for bucket in range(min_len // self.bucket_width, max_len // self.bucket_width + 1):
            for posting in self.buckets.get(bucket, {}).get(gram, ()):
                if min_len <= posting[1] <= max_len:
                    yield posting

    def posting_count(self):
        return sum(len(p) for grams in self.buckets.values() for p in grams.values())


def build_index(corpus, cfg=None):
    """
    Index the pivot side of a corpus

    Sentences outside [min_tokens, max_tokens] are skipped and counted.
    """
    cfg = cfg or JoinConfig()
    index = SimIndex(corpus_id=corpus.corpus_id, q=cfg.qgram, bucket_width=cfg.bucket_width)
    for line_index, (pivot, _) in enumerate(corpus.pairs):
        length = len(pivot.tokens)
        if not cfg.admits(length):
            index.skipped += 1
            continue
        index.lengths[line_index] = length
        index.by_length.setdefault(length, []).append(line_index)
        grams = index.buckets.setdefault(length // cfg.bucket_width, {})
        for gram in qgrams(pivot.tokens, cfg.qgram):
            grams.setdefault(gram, []).append((line_index, length))
    logger.debug("indexed %s: %d sentences, %d skipped", corpus.corpus_id, index.admitted, index.skipped)
    return index


def length_window(length, gamma):
    """Partner lengths that can satisfy the length filter (a superset; exact check follows)"""
    low = math.floor(length / (1.0 + gamma))
    high = length + math.ceil(gamma * length)
    return max(low, 0), high


def probe(tokens, index, right_pivots, gamma):
    """
    All right-side matches for one left sentence

    Returns:
        (matches, filtered) where matches is a list of (right_index, distance)
        sorted by right index, and filtered counts pairs reaching verification
    """
    la = len(tokens)
    low, high = length_window(la, gamma)
    q = index.q

    shared = defaultdict(int)
    needs_counting = any(
        required_overlap(la, lb, q, budget(la, lb, gamma)) > 0 for lb in range(low, high + 1)
    )
    if needs_counting:
        for gram, count_a in Counter(qgrams(tokens, q)).items():
            per_sentence = Counter(line for line, _ in index.postings(gram, low, high))
            for line, count_b in per_sentence.items():
                shared[line] += min(count_a, count_b)

    candidates = set()
    for line, overlap in shared.items():
        lb = index.lengths[line]
        if overlap >= required_overlap(la, lb, q, budget(la, lb, gamma)):
            candidates.add(line)
    # the count filter proves nothing for these lengths: verify directly
    for lb in range(low, high + 1):
        if required_overlap(la, lb, q, budget(la, lb, gamma)) <= 0:
            candidates.update(index.by_length.get(lb, ()))

    matches, filtered = [], 0
    for line in sorted(candidates):
        lb = index.lengths[line]
        if not length_compatible(la, lb, gamma):
            continue
        filtered += 1
        distance = bounded_edit_distance(tokens, right_pivots[line], budget(la, lb, gamma))
        if distance is not None:
            matches.append((line, distance))
    return matches, filtered


# worker state, set once per process by _init_worker
_WORKER = {}


def _init_worker(index, right_pivots, left_pivots, gamma):
    _WORKER.update(index=index, right=right_pivots, left=left_pivots, gamma=gamma)


def _probe_shard(shard):
    start, stop = shard
    results = []
    for left_index in range(start, stop):
        tokens = _WORKER["left"][left_index]
        if tokens is None:
            results.append((left_index, [], 0))
            continue
        matches, filtered = probe(tokens, _WORKER["index"], _WORKER["right"], _WORKER["gamma"])
        results.append((left_index, matches, filtered))
    return results


def _shards(n, jobs):
    size = max(1, min(2048, math.ceil(n / (jobs * 8)) if jobs > 1 else n))
    return [(start, min(start + size, n)) for start in range(0, n, size)]


def _check_languages(left, right):
    if left.pivot_lang != right.pivot_lang:
        raise LanguageMismatchError(
            f"pivot languages differ: {left.corpus_id} has {left.pivot_lang}, "
            f"{right.corpus_id} has {right.pivot_lang}"
        )
    if left.other_lang == right.other_lang:
        raise LanguageMismatchError(
            f"{left.corpus_id} and {right.corpus_id} share the non-pivot language {left.other_lang}"
        )


def _make_candidate(left, right, i, j, distance, gamma):
    x1, y1 = left.pairs[i]
    x2, y2 = right.pairs[j]
    return CandidateAlignedExample(
        left_corpus_id=left.corpus_id,
        right_corpus_id=right.corpus_id,
        left_index=i,
        right_index=j,
        x1=x1, y1=y1, x2=x2, y2=y2,
        distance=distance,
        threshold=threshold(len(x1), len(x2), gamma),
    )


def extract_candidates(left, right, cfg=None, stats=None, progress=False):
    """
    Stream candidate aligned examples between two corpora

    Emits exactly the pairs satisfying the threshold rule, minus exact
    duplicates (when cfg.deduplicate) and beyond the per-example cap (when
    cfg.max_pairs_per_example > 0, keeping lowest distances, then lowest right
    index). Output is ordered by (left_index, right_index).

    Args:
        left, right: BitextCorpus sharing the pivot language
        cfg: JoinConfig
        stats: optional JoinStats filled in while streaming
        progress: show a tqdm bar over left sentences

    Yields:
        CandidateAlignedExample
    """
    cfg = cfg or JoinConfig()
    stats = stats if stats is not None else JoinStats()
    _check_languages(left, right)
    if len(left) == 0 or len(right) == 0:
        return

    index = build_index(right, cfg)
    stats.right_admitted, stats.right_skipped = index.admitted, index.skipped
    right_pivots = [pivot.tokens for pivot, _ in right.pairs]
    left_pivots = []
    for pivot, _ in left.pairs:
        if cfg.admits(len(pivot.tokens)):
            left_pivots.append(pivot.tokens)
            stats.left_admitted += 1
        else:
            left_pivots.append(None)
            stats.left_skipped += 1

    shards = _shards(len(left), cfg.jobs)
    bar = tqdm(total=len(left), desc=f"join {left.corpus_id}|{right.corpus_id}",
               unit="sent", disable=not progress, leave=False)
    seen = set()
    try:
        if cfg.jobs == 1:
            _init_worker(index, right_pivots, left_pivots, cfg.gamma)
            shard_results = map(_probe_shard, shards)
            pool = None
        else:
            pool = Pool(cfg.jobs, initializer=_init_worker,
                        initargs=(index, right_pivots, left_pivots, cfg.gamma))
            shard_results = pool.imap(_probe_shard, shards)

        for results in shard_results:
            for left_index, matches, filtered in results:
                stats.filtered += filtered
                stats.verified += len(matches)
                yield from _merge_matches(left, right, left_index, matches, cfg, stats, seen)
            bar.update(len(results))
    finally:
        bar.close()
        if cfg.jobs == 1:
            _WORKER.clear()
        elif pool is not None:
            pool.terminate()


def _merge_matches(left, right, left_index, matches, cfg, stats, seen):
    """Dedup and fan-out cap for one left sentence's matches"""
    if cfg.max_pairs_per_example > 0:
        matches = sorted(matches, key=lambda m: (m[1], m[0]))
    kept = []
    for right_index, distance in matches:
        candidate = _make_candidate(left, right, left_index, right_index, distance, cfg.gamma)
        if cfg.deduplicate:
            if candidate.key in seen:
                stats.duplicates += 1
                continue
            seen.add(candidate.key)
        if cfg.max_pairs_per_example and len(kept) >= cfg.max_pairs_per_example:
            stats.capped += 1
            continue
        kept.append(candidate)
    kept.sort(key=lambda c: c.right_index)
    stats.emitted += len(kept)
    return kept


def brute_force_candidates(left, right, gamma, size_cap=BRUTE_FORCE_MAX_PAIRS, deduplicate=True):
    """
    All-pairs evaluation of the threshold rule, for testing the indexed join

    No filters and no fan-out cap; duplicates are collapsed the same way the
    indexed join collapses them.
    """
    _check_languages(left, right)
    work = len(left) * len(right)
    if work > size_cap:
        raise OracleSizeError(
            f"{len(left)} x {len(right)} = {work} pairs exceeds the brute-force cap of {size_cap}; "
            f"use extract_candidates instead"
        )
    found, seen = set(), set()
    for i, (x1, _) in enumerate(left.pairs):
        for j, (x2, _) in enumerate(right.pairs):
            distance = bounded_edit_distance(x1.tokens, x2.tokens, budget(len(x1), len(x2), gamma))
            if distance is None:
                continue
            candidate = _make_candidate(left, right, i, j, distance, gamma)
            if deduplicate:
                if candidate.key in seen:
                    continue
                seen.add(candidate.key)
            found.add(candidate)
    return found


def candidate_from_record(record, left, right):
    """Rebuild a candidate from its JSON record and the two corpora"""
    i, j = record["left_index"], record["right_index"]
    x1, y1 = left.pairs[i]
    x2, y2 = right.pairs[j]
    return CandidateAlignedExample(
        left_corpus_id=left.corpus_id,
        right_corpus_id=right.corpus_id,
        left_index=i,
        right_index=j,
        x1=x1, y1=y1, x2=x2, y2=y2,
        distance=int(record["distance"]),
        threshold=float(record["threshold"]),
    )
