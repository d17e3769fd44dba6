"""
Corpus Statistics Module
Language x language matrix of available training examples
"""

import json
import logging
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Tuple

import numpy as np
import pandas as pd
import plotly.graph_objects as go

from config import UI_THEME
from modules.errors import DataError

logger = logging.getLogger(__name__)


class PairCount(NamedTuple):
    lang_a: str
    lang_b: str
    count: int


@dataclass(frozen=True, eq=False)
class CorpusStats:
    languages: Tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        if not np.array_equal(self.counts, self.counts.T):
            raise DataError("corpus stats matrix must be symmetric")
        if np.any(np.diag(self.counts) != 0):
            raise DataError("corpus stats matrix must have an empty diagonal")

    def count(self, lang_a, lang_b):
        return int(self.counts[self.languages.index(lang_a), self.languages.index(lang_b)])

    def to_frame(self, scale=1.0):
        frame = pd.DataFrame(self.counts / scale if scale != 1 else self.counts,
                             index=list(self.languages), columns=list(self.languages))
        return frame

    def render_text(self, scale=1.0, precision=1):
        """Aligned text table; diagonal cells are blank"""
        frame = self.to_frame(scale).astype(object)
        for i, lang in enumerate(self.languages):
            for j, other in enumerate(self.languages):
                value = frame.iat[i, j]
                if i == j:
                    frame.iat[i, j] = ""
                elif scale != 1:
                    frame.iat[i, j] = f"{value:.{precision}f}"
                else:
                    frame.iat[i, j] = str(int(value))
        return frame.to_string()

    def to_json(self):
        return {"languages": list(self.languages), "counts": self.counts.astype(int).tolist()}

    def dumps(self):
        return json.dumps(self.to_json(), ensure_ascii=False, indent=2)

    def heatmap_figure(self, title="Available training examples", scale=1.0):
        frame = self.to_frame(scale)
        figure = go.Figure(data=go.Heatmap(
            z=frame.values,
            x=frame.columns,
            y=frame.index,
            colorscale=UI_THEME["heatmap_scale"],
            hovertemplate="%{y} - %{x}: %{z}<extra></extra>",
        ))
        figure.update_layout(title=title, yaxis_autorange="reversed", height=450)
        return figure

    def write_html(self, path, **kwargs):
        self.heatmap_figure(**kwargs).write_html(str(path), include_plotlyjs="cdn")


def stats_matrix(entries: Iterable[PairCount], languages=None):
    """
    Fill a symmetric language x language matrix with example counts

    Counts for the same unordered pair are summed. Languages appear in the
    given order, or sorted when not given.
    """
    entries = [PairCount(*e) for e in entries]
    if languages is None:
        languages = sorted({e.lang_a for e in entries} | {e.lang_b for e in entries})
    languages = tuple(str(lang) for lang in languages)
    position = {lang: k for k, lang in enumerate(languages)}
    counts = np.zeros((len(languages), len(languages)), dtype=np.int64)
    for entry in entries:
        if entry.lang_a == entry.lang_b:
            raise DataError(f"a corpus cannot pair {entry.lang_a} with itself")
        if entry.lang_a not in position or entry.lang_b not in position:
            raise DataError(f"unknown language in {entry}")
        a, b = position[entry.lang_a], position[entry.lang_b]
        counts[a, b] += entry.count
        counts[b, a] += entry.count
    return CorpusStats(languages=languages, counts=counts)


def stats_from_report(report, which="constructed"):
    """
    Rebuild a matrix from a run report

    Args:
        which: 'constructed' (pivot bitexts + generated corpora) or
               'baseline' (pivot bitexts + exact-match extraction)
    """
    section = report.get("stats", {}).get(which)
    if section is None:
        raise DataError(f"run report has no '{which}' stats")
    return CorpusStats(languages=tuple(section["languages"]), counts=np.array(section["counts"], dtype=np.int64))
