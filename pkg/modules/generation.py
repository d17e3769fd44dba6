"""
Generation Module
Turns candidate aligned examples into multi-way examples: builds the
"x1 <sep> y2" generator input, obtains a hypothesis from a generator, and
assembles (x1, y1, hypothesis) after plumbing-level sanity filters
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

from config import REJECTION_REASONS, SEP_TOKEN
from modules.corpus import Sentence, normalize
from modules.edit_script import DELETE, INSERT, KEEP, SUBSTITUTE, EditOp, EditScript, apply_edit_script, compute_edit_script
from modules.errors import DataError, TransportError, StageError
from modules.settings import FilterConfig, NormConfig
from modules.transport import GenerationRequest, open_transport, remote_generate

logger = logging.getLogger(__name__)


def load_lexicon(path):
    """Read a pivot-token TAB target-token file"""
    lexicon = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataError(f"cannot read lexicon {path}: {e}")
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip() or len(parts[1].split()) != 1:
            raise DataError(f"{path}: line {number} must be 'pivot-token<TAB>target-token'")
        lexicon.setdefault(parts[0].strip(), parts[1].strip())
    return lexicon


@dataclass(frozen=True)
class ReplayResult:
    sentence: Sentence
    copied_through: int
    unplaced: int = 0


def edit_replay_generate(cand, lexicon):
    """
    Deterministic stand-in generator

    Computes the edit script x2 -> x1 and replays it onto y2: every edit at
    pivot position p lands on y2 position p (clamped to y2's length), and
    inserted/substituted pivot tokens are mapped through the lexicon. The
    script aligns the folded tokens, but lookups and copied-through tokens use
    the surface form of x1 (falling back to the folded key for the lookup).
    Tokens missing from the lexicon are copied through and counted. A second
    substitute/delete landing on an already edited y2 position is dropped and
    counted as unplaced.
    """
    script = compute_edit_script(cand.x2.tokens, cand.x1.tokens)
    surface = cand.x1.surface_tokens
    target = cand.y2.tokens
    size = len(target)

    inserts = {}
    replaced = {}
    copied, unplaced = 0, 0
    dst = 0
    for op in script.ops:
        # keep, substitute and insert each consume one x1 token, in order
        source = surface[dst] if op.kind != DELETE else None
        if op.kind != DELETE:
            dst += 1
        if op.kind == KEEP:
            continue
        token = None
        if op.kind in (INSERT, SUBSTITUTE):
            token = lexicon.get(source, lexicon.get(op.token))
            if token is None:
                token, copied = source, copied + 1
        if op.kind == INSERT:
            inserts.setdefault(min(op.pos, size), []).append(token)
            continue
        if size == 0:
            unplaced += 1
            continue
        position = min(op.pos, size - 1)
        if position in replaced:
            unplaced += 1
            continue
        replaced[position] = EditOp(op.kind, position, token)

    ops = []
    for position in range(size + 1):
        ops.extend(EditOp(INSERT, position, t) for t in inserts.get(position, ()))
        if position < size:
            ops.append(replaced.get(position, EditOp(KEEP, position)))
    tokens = apply_edit_script(EditScript(ops=tuple(ops)), target)

    hypothesis = normalize(" ".join(tokens), NormConfig.from_id(cand.y2.norm_id))
    return ReplayResult(sentence=hypothesis, copied_through=copied, unplaced=unplaced)


@dataclass(frozen=True)
class Provenance:
    left_corpus: str
    right_corpus: str
    left_index: int
    right_index: int
    distance: int
    generator_id: str


@dataclass(frozen=True)
class MultiWayExample:
    pivot: Sentence
    left: Sentence
    right: Sentence
    left_lang: str
    right_lang: str
    provenance: Provenance

    def to_record(self):
        return {
            "pivot": self.pivot.surface,
            "left": self.left.surface,
            "right": self.right.surface,
            "left_lang": self.left_lang,
            "right_lang": self.right_lang,
            "provenance": self.provenance.__dict__.copy(),
        }


@dataclass(frozen=True)
class Rejection:
    reason: str
    left_index: int
    right_index: int


def generator_source(cand):
    return f"{cand.x1.surface} {SEP_TOKEN} {cand.y2.surface}"


def assemble_multiway(cand, hypothesis, filters=None, generator_id="edit-replay",
                      left_lang=None, right_lang=None):
    """
    Accept or reject a generated sentence for one candidate

    Returns:
        MultiWayExample, or Rejection with reason 'empty', 'separator' or 'ratio'
    """
    filters = filters or FilterConfig()
    if not hypothesis.tokens:
        return Rejection("empty", cand.left_index, cand.right_index)
    if SEP_TOKEN in hypothesis.raw:
        return Rejection("separator", cand.left_index, cand.right_index)
    ratio = len(hypothesis.tokens) / len(cand.y2.tokens)
    if not (filters.min_ratio <= ratio <= filters.max_ratio):
        return Rejection("ratio", cand.left_index, cand.right_index)

    return MultiWayExample(
        pivot=cand.x1,
        left=cand.y1,
        right=hypothesis,
        left_lang=left_lang or cand.left_corpus_id.split("-")[-1],
        right_lang=right_lang or cand.right_corpus_id.split("-")[-1],
        provenance=Provenance(
            left_corpus=cand.left_corpus_id,
            right_corpus=cand.right_corpus_id,
            left_index=cand.left_index,
            right_index=cand.right_index,
            distance=cand.distance,
            generator_id=generator_id,
        ),
    )


class EditReplayGenerator:
    """Pure, order-independent generator backed by a bilingual lexicon"""

    def __init__(self, lexicon, generator_id="edit-replay"):
        self.lexicon = lexicon
        self.generator_id = generator_id
        self.copied_through = 0
        self.unplaced = 0

    def generate(self, candidates):
        hypotheses = []
        for cand in candidates:
            result = edit_replay_generate(cand, self.lexicon)
            self.copied_through += result.copied_through
            self.unplaced += result.unplaced
            hypotheses.append(result.sentence)
        return hypotheses

    def close(self):
        pass


class RemoteGenerator:
    """Generator behind the wire protocol; request ids are candidate stream positions"""

    def __init__(self, transport_cfg, target_lang, norm=None):
        self.cfg = transport_cfg
        self.generator_id = transport_cfg.generator_id(target_lang)
        self.norm = (norm or NormConfig()).for_other()
        self.transport = open_transport(transport_cfg)
        self.next_id = 0

    def generate(self, candidates):
        batch = []
        for cand in candidates:
            batch.append(GenerationRequest(id=self.next_id, source=generator_source(cand)))
            self.next_id += 1
        responses = remote_generate(batch, self.cfg, transport=self.transport)
        return [normalize(r.hypothesis, self.norm) for r in responses]

    def close(self):
        self.transport.close()


class HypothesisFileGenerator:
    """Replays hypotheses produced offline, one line per candidate in candidate order"""

    def __init__(self, path):
        self.path = Path(path)
        self.generator_id = f"file:{self.path.name}"
        self._handle = open(self.path, "r", encoding="utf-8")
        self._line = 0

    def generate(self, candidates):
        hypotheses = []
        for cand in candidates:
            line = self._handle.readline()
            if not line:
                raise DataError(f"{self.path} ends after {self._line} hypotheses; more candidates remain")
            self._line += 1
            hypotheses.append(normalize(line.rstrip("\n"), NormConfig.from_id(cand.y2.norm_id)))
        return hypotheses

    def close(self):
        self._handle.close()


@dataclass
class GenerationTally:
    candidates: int = 0
    accepted: int = 0
    rejected: int = 0
    reasons: Dict[str, int] = field(default_factory=lambda: {r: 0 for r in REJECTION_REASONS})
    last_index: Optional[int] = None

    def as_dict(self):
        return {
            "candidates": self.candidates,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "reasons": dict(self.reasons),
            "last_index": self.last_index,
        }


@dataclass(frozen=True)
class GenerationOutcome:
    index: int
    candidate: object
    example: Optional[MultiWayExample] = None
    rejection: Optional[Rejection] = None


def run_generation(candidates, generator, filters=None, batch_size=64, start=0, tally=None,
                   left_lang=None, right_lang=None):
    """
    Generate and assemble, in candidate order

    Args:
        candidates: iterable of CandidateAlignedExample
        generator: object with generate(list_of_candidates) -> list of Sentence
        filters: FilterConfig for assembly
        batch_size: candidates handed to the generator at a time
        start: skip candidates with stream position < start (resume)
        tally: GenerationTally updated in place

    Yields:
        GenerationOutcome per candidate

    Raises:
        StageError with the last fully processed candidate position on transport failure
    """
    tally = tally if tally is not None else GenerationTally()
    batch = []

    def flush():
        try:
            hypotheses = generator.generate([cand for _, cand in batch])
        except TransportError as e:
            raise StageError("generate", e, checkpoint=tally.last_index)
        outcomes = []
        for (index, cand), hypothesis in zip(batch, hypotheses):
            result = assemble_multiway(cand, hypothesis, filters, generator.generator_id, left_lang, right_lang)
            tally.candidates += 1
            if isinstance(result, Rejection):
                tally.rejected += 1
                tally.reasons[result.reason] += 1
                logger.debug("rejected %d/%d: %s", cand.left_index, cand.right_index, result.reason)
                outcomes.append(GenerationOutcome(index, cand, rejection=result))
            else:
                tally.accepted += 1
                outcomes.append(GenerationOutcome(index, cand, example=result))
        return outcomes

    for index, cand in enumerate(candidates):
        if index < start:
            continue
        batch.append((index, cand))
        if len(batch) >= batch_size:
            outcomes = flush()
            batch = []
            for outcome in outcomes:
                yield outcome
                tally.last_index = outcome.index
    if batch:
        for outcome in flush():
            yield outcome
            tally.last_index = outcome.index
