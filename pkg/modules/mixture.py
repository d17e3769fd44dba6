"""
Mixture Module
Temperature-based sampling plan over language pairs and language-token
tagging of training lines for multilingual training
"""

import logging
import re
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Tuple

import numpy as np

from config import LANGUAGE_TOKEN_FORMAT, LANGUAGE_TOKEN_PATTERN
from modules.corpus import as_language
from modules.errors import DataError, UsageError

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(LANGUAGE_TOKEN_PATTERN)


@dataclass(frozen=True)
class MixturePlan:
    counts: Dict[Hashable, int]
    total: int
    temperature: float
    probabilities: Dict[Hashable, float] = field(default_factory=dict)

    def as_dict(self):
        return {
            "temperature": self.temperature,
            "total": self.total,
            "counts": {str(k): v for k, v in self.counts.items()},
            "probabilities": {str(k): p for k, p in self.probabilities.items()},
        }


def temperature_probabilities(available, temperature):
    """p_i = n_i^(1/T) / sum_j n_j^(1/T)"""
    keys = list(available)
    sizes = np.array([available[k] for k in keys], dtype=np.float64)
    weights = np.power(sizes, 1.0 / temperature)
    norm = weights.sum()
    if norm == 0:
        return {k: 0.0 for k in keys}
    return {k: float(w / norm) for k, w in zip(keys, weights)}


def _largest_remainder(probabilities, total, order):
    quotas = {k: probabilities[k] * total for k in order}
    counts = {k: int(np.floor(q)) for k, q in quotas.items()}
    leftover = total - sum(counts.values())
    by_remainder = sorted(order, key=lambda k: (-(quotas[k] - counts[k]), order.index(k)))
    for k in by_remainder[:leftover]:
        counts[k] += 1
    return counts


def temperature_sample(available, temperature, total, rng=None):
    """
    Temperature-based sampling plan

    Counts are the largest-remainder rounding of p_i * total; a key whose
    count exceeds its availability is clamped and the surplus is re-split
    among the remaining keys by the same rule.

    Args:
        available: map key -> number of examples (key is a pair or a target language)
        temperature: T >= 1; T = 1 is proportional sampling
        total: number of examples to draw
        rng: optional numpy Generator used to break remainder ties at random;
             ties go to key order without one

    Returns:
        MixturePlan
    """
    if temperature < 1:
        raise UsageError(f"temperature must be >= 1, got {temperature}")
    if total < 0:
        raise UsageError("total must be >= 0")
    if any(n < 0 for n in available.values()):
        raise DataError("available counts must be >= 0")
    if total > sum(available.values()):
        raise DataError(f"requested {total} examples but only {sum(available.values())} are available")

    keys = list(available)
    order = [keys[i] for i in rng.permutation(len(keys))] if rng is not None else keys
    probabilities = temperature_probabilities(available, temperature)

    counts = {}
    active = [k for k in order if available[k] > 0]
    remaining = total
    while active:
        allocation = _largest_remainder(temperature_probabilities({k: available[k] for k in active}, temperature),
                                        remaining, active)
        over = [k for k in active if allocation[k] > available[k]]
        if not over:
            counts.update(allocation)
            break
        for k in over:
            counts[k] = available[k]
            remaining -= available[k]
        active = [k for k in active if k not in over]

    counts = {k: counts.get(k, 0) for k in keys}
    return MixturePlan(counts=counts, total=total, temperature=temperature, probabilities=probabilities)


def language_token(target_lang):
    return LANGUAGE_TOKEN_FORMAT.format(code=as_language(target_lang).code)


def prepend_language_token(text, target_lang):
    return f"{language_token(target_lang)} {text}"


def parse_language_token(line):
    """Target language code from a tagged line, or None"""
    first = line.split(" ", 1)[0]
    match = _TOKEN_RE.match(first)
    return match.group(1) if match else None


@dataclass
class MixtureSource:
    """All examples for one translation direction"""

    src_lang: str
    tgt_lang: str
    examples: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def direction(self):
        return f"{self.src_lang}-{self.tgt_lang}"


def mixture_key(source, key):
    return source.direction if key == "pair" else source.tgt_lang


def draw_mixture(sources, temperature, total=None, key="pair", rng=None):
    """
    Sample tagged training lines across directions

    Args:
        sources: list of MixtureSource
        temperature: sampling temperature
        total: number of lines; all available when None
        key: 'pair' to balance directions, 'target' to balance target languages
        rng: numpy Generator for example selection and shuffling

    Returns:
        (plan, list of (tagged_source_line, target_line))
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    groups = {}
    for source in sources:
        groups.setdefault(mixture_key(source, key), []).append(source)
    available = {k: sum(len(s.examples) for s in members) for k, members in sorted(groups.items())}
    total = sum(available.values()) if total is None else total
    plan = temperature_sample(available, temperature, total)

    lines = []
    for k, members in sorted(groups.items()):
        pool = [(s.tgt_lang, ex) for s in members for ex in s.examples]
        picked = np.sort(rng.choice(len(pool), size=plan.counts[k], replace=False)) if plan.counts[k] else []
        for position in picked:
            tgt_lang, (src_text, tgt_text) = pool[position]
            lines.append((prepend_language_token(src_text, tgt_lang), tgt_text))
    order = rng.permutation(len(lines))
    logger.info("mixture: %d lines over %d %s groups (T=%s)", len(lines), len(groups), key, temperature)
    return plan, [lines[i] for i in order]
