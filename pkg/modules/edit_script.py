"""
Edit Script Module
Minimal token-level edit scripts: compute by DP backtrace, apply to a sequence
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

KEEP = "keep"
SUBSTITUTE = "substitute"
DELETE = "delete"
INSERT = "insert"


class EditOp(NamedTuple):
    kind: str
    pos: int                      # position in the source sequence
    token: Optional[str] = None   # new token for insert / substitute


@dataclass(frozen=True)
class EditScript:
    ops: Tuple[EditOp, ...]

    @property
    def edits(self):
        return tuple(op for op in self.ops if op.kind != KEEP)

    @property
    def distance(self):
        return len(self.edits)

    def apply(self, src):
        return apply_edit_script(self, src)


def _distance_matrix(src, dst):
    """Full DP table; rows vectorized, insertions folded in with a running minimum"""
    ids = {}
    a = np.array([ids.setdefault(t, len(ids)) for t in src], dtype=np.int64)
    b = np.array([ids.setdefault(t, len(ids)) for t in dst], dtype=np.int64)
    n, m = len(a), len(b)
    cols = np.arange(m + 1, dtype=np.int64)
    table = np.empty((n + 1, m + 1), dtype=np.int64)
    table[0] = cols
    for i in range(1, n + 1):
        prev = table[i - 1]
        row = np.empty(m + 1, dtype=np.int64)
        row[0] = i
        row[1:] = np.minimum(prev[1:] + 1, prev[:-1] + (b != a[i - 1]))
        table[i] = np.minimum.accumulate(row - cols) + cols
    return table


def compute_edit_script(src: Sequence[str], dst: Sequence[str]) -> EditScript:
    """
    Minimal edit script turning src into dst

    Ties between minimal scripts are broken at every backtrace step in the
    order keep, substitute, delete, insert.
    """
    table = _distance_matrix(src, dst)
    i, j = len(src), len(dst)
    reversed_ops = []
    while i > 0 or j > 0:
        here = table[i, j]
        if i > 0 and j > 0 and src[i - 1] == dst[j - 1] and here == table[i - 1, j - 1]:
            reversed_ops.append(EditOp(KEEP, i - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and here == table[i - 1, j - 1] + 1:
            reversed_ops.append(EditOp(SUBSTITUTE, i - 1, dst[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and here == table[i - 1, j] + 1:
            reversed_ops.append(EditOp(DELETE, i - 1))
            i -= 1
        else:
            reversed_ops.append(EditOp(INSERT, i, dst[j - 1]))
            j -= 1
    return EditScript(ops=tuple(reversed(reversed_ops)))


def apply_edit_script(script: EditScript, src: Sequence[str]) -> Tuple[str, ...]:
    out = []
    for op in script.ops:
        if op.kind == KEEP:
            out.append(src[op.pos])
        elif op.kind in (SUBSTITUTE, INSERT):
            out.append(op.token)
        elif op.kind != DELETE:
            raise ValueError(f"unknown edit op {op.kind!r}")
    return tuple(out)
