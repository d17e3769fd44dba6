"""
Edit Distance Module
Token-level Levenshtein distance and the similarity threshold rule
"""

import math
from typing import Optional, Sequence

from rapidfuzz.distance import Levenshtein


def edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Unit-cost Levenshtein distance over tokens (plain two-row dynamic program)"""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, token_a in enumerate(a, start=1):
        current = [i]
        for j, token_b in enumerate(b, start=1):
            current.append(min(
                previous[j] + 1,                             # delete
                current[j - 1] + 1,                          # insert
                previous[j - 1] + (token_a != token_b),      # substitute / keep
            ))
        previous = current
    return previous[-1]


def bounded_edit_distance(a: Sequence[str], b: Sequence[str], tau: int) -> Optional[int]:
    """
    Edit distance with a cutoff

    Returns:
        the distance when it is <= tau, otherwise None
    """
    if tau < 0 or abs(len(a) - len(b)) > tau:
        return None
    distance = Levenshtein.distance(list(a), list(b), score_cutoff=tau)
    return distance if distance <= tau else None


def threshold(len_a: int, len_b: int, gamma: float) -> float:
    """Right-hand side of the extraction rule, gamma * min(|a|, |b|)"""
    return gamma * min(len_a, len_b)


def budget(len_a: int, len_b: int, gamma: float) -> int:
    """Largest integer distance the rule admits"""
    return math.floor(threshold(len_a, len_b, gamma))


def length_compatible(len_a: int, len_b: int, gamma: float) -> bool:
    return abs(len_a - len_b) <= threshold(len_a, len_b, gamma)


def passes_threshold(a: Sequence[str], b: Sequence[str], gamma: float) -> bool:
    # distances are integers, so comparing against floor(product) is exact
    return bounded_edit_distance(a, b, budget(len(a), len(b), gamma)) is not None
