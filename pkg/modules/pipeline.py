"""
Pipeline Module
End-to-end run: extract -> emit generator training data -> generate ->
assemble -> stats -> mixture, one language pair at a time, with a JSON run
report and a checkpoint ledger for resuming
"""

import hashlib
import itertools
import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from config import LEDGER_FILENAME, OUTPUT_DIRS, REPORT_FILENAME, REPORT_SCHEMA_VERSION
from database.db import clear_checkpoints, initialize_database, load_checkpoint, save_checkpoint
from modules.corpus import build_vocabulary, load_manifest_entry
from modules.errors import DataError, EAGError, StageError, TransportError, UsageError
from modules.generation import (
    EditReplayGenerator,
    GenerationTally,
    HypothesisFileGenerator,
    RemoteGenerator,
    load_lexicon,
    run_generation,
)
from modules.mixture import MixtureSource, draw_mixture
from modules.noising import emit_training_set, noise_statistics
from modules.settings import JoinConfig, NoiseConfig
from modules.simjoin import JoinStats, candidate_from_record, extract_candidates
from modules.stats import PairCount, stats_matrix

logger = logging.getLogger(__name__)


class RunLayout:
    """Where every artifact of a run lives"""

    def __init__(self, output_dir):
        self.root = Path(output_dir)

    def _path(self, kind, name):
        directory = self.root / OUTPUT_DIRS[kind]
        directory.mkdir(parents=True, exist_ok=True)
        return directory / name

    def candidates(self, pair):
        return self._path("candidates", f"{pair}.jsonl")

    def hypotheses(self, pair):
        return self._path("hypotheses", f"{pair}.txt")

    def multiway(self, pair):
        return self._path("multiway", f"{pair}.jsonl")

    def training(self, corpus_id):
        return self._path("training", f"{corpus_id}.src"), self._path("training", f"{corpus_id}.tgt")

    def mixture(self):
        return self._path("mixture", "train.src"), self._path("mixture", "train.tgt")

    def mixture_plan(self):
        return self._path("mixture", "plan.json")

    def stats(self, name):
        return self._path("stats", name)

    @property
    def report(self):
        return self.root / REPORT_FILENAME

    @property
    def ledger(self):
        return str(self.root / LEDGER_FILENAME)


def dump_json(path, data):
    Path(path).write_text(json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def report_stamp(path):
    """Modification time of a run report, for invalidating cached copies"""
    return Path(path).stat().st_mtime_ns


def write_jsonl(handle, record):
    handle.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")) + "\n")


def read_jsonl(path):
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            if line.strip():
                try:
                    yield json.loads(line)
                except json.JSONDecodeError as e:
                    raise DataError(f"{path}: line {number} is not JSON ({e})")


def load_corpora(cfg):
    """
    Load every manifest corpus, keyed by its non-pivot language

    Raises:
        DataError when the corpora do not share one pivot language or repeat a language
    """
    if not cfg.manifest:
        raise UsageError("the manifest lists no corpora")
    corpora = {}
    for entry in cfg.manifest:
        corpus = load_manifest_entry(entry, cfg.norm)
        lang = corpus.other_lang.code
        if lang in corpora:
            raise DataError(f"the manifest lists language {lang} twice")
        corpora[lang] = corpus
    pivots = {c.pivot_lang.code for c in corpora.values()}
    if len(pivots) != 1:
        raise DataError(f"corpora must share one pivot language, found {', '.join(sorted(pivots))}")
    return dict(sorted(corpora.items()))


def language_pairs(corpora):
    """Every unordered pair of non-pivot languages, sorted"""
    return list(itertools.combinations(sorted(corpora), 2))


def pair_name(lang_a, lang_b):
    return f"{lang_a}-{lang_b}"


def write_candidates(path, candidates, stats_only=False):
    """Write candidates as JSONL; returns (count, mean distance)"""
    count, distance_sum = 0, 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for candidate in candidates:
            write_jsonl(f, candidate.to_record(stats_only=stats_only))
            count += 1
            distance_sum += candidate.distance
    return count, (distance_sum / count if count else 0.0)


def iter_candidates(path, left, right):
    if not Path(path).exists():
        raise UsageError(f"no candidates at {path}; run extract first")
    for record in read_jsonl(path):
        yield candidate_from_record(record, left, right)


def make_generator(cfg, target_lang):
    if cfg.generator == "remote":
        return RemoteGenerator(cfg.transport, target_lang, cfg.norm)
    lexicon_path = cfg.lexicons.get(str(target_lang))
    if not lexicon_path:
        raise UsageError(f"the edit-replay generator needs a lexicon for {target_lang}")
    return EditReplayGenerator(load_lexicon(lexicon_path), generator_id=f"edit-replay:{target_lang}")


def corpus_pair(corpora, lang_a, lang_b):
    """Validate a requested language pair; returns (pair name, left corpus, right corpus) in sorted order"""
    missing = [lang for lang in (lang_a, lang_b) if lang not in corpora]
    if missing:
        raise UsageError(f"language(s) not in the manifest: {', '.join(missing)}")
    if lang_a == lang_b:
        raise UsageError(f"a pair needs two different languages, got {lang_a} twice")
    lang_a, lang_b = sorted((lang_a, lang_b))
    return pair_name(lang_a, lang_b), corpora[lang_a], corpora[lang_b]


def extract_pair(pair, left, right, cfg, layout, progress=False):
    """Extract one pair's candidates to its JSONL file; returns the report section"""
    join_stats = JoinStats()
    count, mean = write_candidates(
        layout.candidates(pair),
        extract_candidates(left, right, cfg.join, join_stats, progress=progress),
        stats_only=cfg.stats_only,
    )
    baseline = None
    if cfg.baseline:
        baseline = sum(1 for _ in extract_candidates(left, right, replace(cfg.join, gamma=0.0)))
    logger.info("%s: %d candidates (mean distance %.2f)", pair, count, mean)
    return {"candidates": count, "mean_distance": mean, "baseline_candidates": baseline,
            "join": join_stats.as_dict()}


def _batches(iterable, size):
    iterator = iter(iterable)
    while True:
        batch = list(itertools.islice(iterator, size))
        if not batch:
            return
        yield batch


def write_hypotheses(pair, left, right, cfg, layout):
    """Run the generator alone over a pair's candidates, one hypothesis line per candidate"""
    generator = make_generator(cfg, right.other_lang)
    count = 0
    try:
        with open(layout.hypotheses(pair), "w", encoding="utf-8", newline="\n") as out:
            candidates = iter_candidates(layout.candidates(pair), left, right)
            for batch in _batches(candidates, cfg.transport.batch_size):
                for hypothesis in generator.generate(batch):
                    out.write(" ".join(hypothesis.raw.split()) + "\n")
                    count += 1
    except TransportError as e:
        raise StageError("generate", e, pair=pair, checkpoint=count - 1 if count else None)
    finally:
        generator.close()
    logger.info("%s: %d hypotheses written", pair, count)
    return count


def assemble_pair(pair, left, right, cfg, layout, hypotheses_path=None):
    """Assemble a pair's multi-way corpus from a hypothesis file; returns GenerationTally"""
    path = Path(hypotheses_path or layout.hypotheses(pair))
    if not path.exists():
        raise UsageError(f"no hypotheses at {path}; run generate first")
    tally = GenerationTally()
    generator = HypothesisFileGenerator(path)
    try:
        with open(layout.multiway(pair), "w", encoding="utf-8", newline="\n") as out:
            for outcome in run_generation(
                iter_candidates(layout.candidates(pair), left, right), generator, cfg.filters,
                batch_size=cfg.transport.batch_size, tally=tally,
                left_lang=left.other_lang.code, right_lang=right.other_lang.code,
            ):
                if outcome.example is not None:
                    write_jsonl(out, outcome.example.to_record())
    finally:
        generator.close()
    logger.info("%s: %d accepted, %d rejected", pair, tally.accepted, tally.rejected)
    return tally


def write_stats(report, corpora, layout, include_baseline=True):
    """Fill report['stats'] and write the text tables; returns the matrices"""
    pivot = next(iter(corpora.values())).pivot_lang.code
    languages = [pivot] + list(corpora)
    original = [PairCount(pivot, lang, len(c)) for lang, c in corpora.items()]
    constructed = original + [
        PairCount(*entry["languages"], entry.get("generation", {}).get("accepted", 0))
        for entry in report["pairs"].values()
    ]
    matrices = {"original": stats_matrix(original, languages),
                "constructed": stats_matrix(constructed, languages)}
    if include_baseline:
        matrices["baseline"] = stats_matrix(original + [
            PairCount(*entry["languages"], entry["baseline_candidates"])
            for entry in report["pairs"].values()
        ], languages)
    for name, matrix in matrices.items():
        report.setdefault("stats", {})[name] = matrix.to_json()
        layout.stats(f"{name}.txt").write_text(matrix.render_text() + "\n", encoding="utf-8")
    return matrices


def write_mixture(corpora, cfg, layout):
    """Draw the tagged training mixture over every direction; returns the plan"""
    plan, lines = draw_mixture(
        mixture_sources(corpora, layout, language_pairs(corpora)), cfg.temperature,
        total=cfg.mix_total, key=cfg.mix_key, rng=np.random.default_rng(cfg.seed),
    )
    source_path, target_path = layout.mixture()
    with open(source_path, "w", encoding="utf-8", newline="\n") as src, \
            open(target_path, "w", encoding="utf-8", newline="\n") as tgt:
        for tagged, target in lines:
            src.write(tagged + "\n")
            tgt.write(target + "\n")
    dump_json(layout.mixture_plan(), plan.as_dict())
    return plan


def config_fingerprint(cfg):
    """Hash of everything that changes outputs (not jobs, not the output directory)"""
    data = cfg.to_dict()
    for key in ("jobs", "output_dir"):
        data.pop(key, None)
    data["join"].pop("jobs", None)
    data["noise"].pop("jobs", None)
    blob = json.dumps(data, sort_keys=True, default=str)
    return hashlib.blake2b(blob.encode("utf-8"), digest_size=12).hexdigest()


class _Timer:
    def __init__(self):
        self.seconds = {}
        self._lock = threading.Lock()

    @contextmanager
    def stage(self, name):
        started = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - started
            with self._lock:
                self.seconds[name] = self.seconds.get(name, 0.0) + elapsed


def _finished(ledger, key, stage, fingerprint):
    checkpoint = load_checkpoint(ledger, key, stage)
    if checkpoint and checkpoint["status"] == "done" and checkpoint["payload"].get("fingerprint") == fingerprint:
        return checkpoint["payload"]
    return None


def _truncate_lines(path, keep):
    """Cut a text file back to its first `keep` lines"""
    if not Path(path).exists():
        return
    with open(path, "r", encoding="utf-8") as f:
        lines = [line for _, line in zip(range(keep), f)]
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.writelines(lines)


def generate_pair(pair, left, right, cfg, layout, fingerprint):
    """
    Generate and assemble one language pair from its candidate file

    Resumes from the ledger when a previous attempt stopped part way.

    Returns:
        GenerationTally
    """
    ledger = layout.ledger
    tally, start, lines = GenerationTally(), 0, 0
    checkpoint = load_checkpoint(ledger, pair, "generate")
    if checkpoint and checkpoint["status"] == "running" \
            and checkpoint["payload"].get("fingerprint") == fingerprint and checkpoint["position"] is not None:
        payload = checkpoint["payload"]
        start, lines = checkpoint["position"] + 1, payload["lines"]
        tally = GenerationTally(**{k: v for k, v in payload["tally"].items()})
        _truncate_lines(layout.multiway(pair), lines)
        logger.info("%s: resuming generation after candidate %d", pair, checkpoint["position"])
        mode = "a"
    else:
        mode = "w"

    def persist(position, status="running"):
        save_checkpoint(ledger, pair, "generate", position, status,
                        {"fingerprint": fingerprint, "lines": lines, "tally": tally.as_dict()})

    generator = make_generator(cfg, right.other_lang)
    batch_size = cfg.transport.batch_size
    try:
        with open(layout.multiway(pair), mode, encoding="utf-8", newline="\n") as out:
            outcomes = run_generation(
                iter_candidates(layout.candidates(pair), left, right), generator, cfg.filters,
                batch_size=batch_size, start=start, tally=tally,
                left_lang=left.other_lang.code, right_lang=right.other_lang.code,
            )
            try:
                for outcome in outcomes:
                    if outcome.example is not None:
                        write_jsonl(out, outcome.example.to_record())
                        lines += 1
                    if (outcome.index + 1) % batch_size == 0:
                        out.flush()
                        persist(outcome.index)
            except StageError as e:
                out.flush()
                persist(e.checkpoint)
                raise StageError("generate", e.cause, pair=pair, checkpoint=e.checkpoint)
    finally:
        generator.close()

    persist(tally.last_index, status="done")
    if isinstance(generator, EditReplayGenerator):
        logger.info("%s: edit-replay copied %d token(s) through, %d edit(s) unplaced",
                    pair, generator.copied_through, generator.unplaced)
    return tally


def run_pair(lang_a, lang_b, corpora, cfg, layout, fingerprint, timer, entry, progress=False):
    """
    Extract and generate one language pair, filling its report entry

    Raises:
        StageError naming the stage and pair that failed
    """
    pair = pair_name(lang_a, lang_b)
    left, right = corpora[lang_a], corpora[lang_b]
    stage = "extract"
    try:
        with timer.stage("extract"):
            done = _finished(layout.ledger, pair, "extract", fingerprint)
            if done is None:
                done = extract_pair(pair, left, right, cfg, layout, progress)
                save_checkpoint(layout.ledger, pair, "extract", done["candidates"], "done",
                                dict(done, fingerprint=fingerprint))
            entry.update({k: done[k] for k in ("candidates", "mean_distance", "baseline_candidates", "join")})

        if cfg.stats_only:
            return

        stage = "generate"
        with timer.stage("generate"):
            done = _finished(layout.ledger, pair, "generate", fingerprint)
            if done is None:
                tally = generate_pair(pair, left, right, cfg, layout, fingerprint).as_dict()
            else:
                tally = done["tally"]
            entry["generation"] = tally
            logger.info("%s: %d accepted, %d rejected", pair, tally["accepted"], tally["rejected"])
    except StageError:
        raise
    except EAGError as e:
        raise StageError(stage, e, pair=pair)


def run_pairs(pairs, corpora, cfg, layout, fingerprint, timer, report, progress=False):
    """
    Run every language pair, several at a time when cfg.jobs allows

    Pairs share nothing but the ledger, so up to cfg.jobs of them run on
    threads; each then gets jobs // workers processes for its join. Report entries are created in pair order up front. When pairs
    fail, the first failure in pair order is raised after the rest finish.
    """
    entries = [report["pairs"].setdefault(pair_name(a, b), {"languages": [a, b]}) for a, b in pairs]
    workers = max(1, min(cfg.jobs, len(pairs)))
    if workers == 1:
        for (lang_a, lang_b), entry in zip(pairs, entries):
            run_pair(lang_a, lang_b, corpora, cfg, layout, fingerprint, timer, entry, progress)
        return

    pair_cfg = replace(cfg, jobs=max(1, cfg.jobs // workers))
    logger.info("running %d pairs on %d workers", len(pairs), workers)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [
            executor.submit(run_pair, lang_a, lang_b, corpora, pair_cfg, layout, fingerprint, timer, entry, False)
            for (lang_a, lang_b), entry in zip(pairs, entries)
        ]
    for future in futures:
        error = future.exception()
        if error is not None:
            raise error


def mixture_sources(corpora, layout, pairs):
    """Both directions of every pivot bitext and of every constructed corpus"""
    sources = []
    for lang, corpus in corpora.items():
        pivot = corpus.pivot_lang.code
        forward = [(p.surface, o.surface) for p, o in corpus.pairs]
        sources.append(MixtureSource(pivot, lang, forward))
        sources.append(MixtureSource(lang, pivot, [(o, p) for p, o in forward]))
    for lang_a, lang_b in pairs:
        path = layout.multiway(pair_name(lang_a, lang_b))
        rows = [(r["left"], r["right"]) for r in read_jsonl(path)] if path.exists() else []
        sources.append(MixtureSource(lang_a, lang_b, rows))
        sources.append(MixtureSource(lang_b, lang_a, [(r, l) for l, r in rows]))
    return sources


def run_pipeline(cfg, fresh=False, progress=False):
    """
    Build multi-way corpora for every pair of non-pivot languages

    Args:
        cfg: PipelineConfig
        fresh: ignore and clear the checkpoint ledger
        progress: show progress bars

    Returns:
        run report dict (also written to <output_dir>/run_report.json)

    Raises:
        StageError naming the failed stage; the report is still written
    """
    layout = RunLayout(cfg.output_dir)
    layout.root.mkdir(parents=True, exist_ok=True)
    initialize_database(layout.ledger)
    if fresh:
        clear_checkpoints(layout.ledger)
    fingerprint = config_fingerprint(cfg)
    timer = _Timer()

    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "status": "running",
        "fingerprint": fingerprint,
        "config": cfg.to_dict(),
        "corpora": {},
        "training": {},
        "pairs": {},
        "stats": {},
        "mixture": None,
        "timings": timer.seconds,
    }
    stage, current = "load", None
    try:
        with timer.stage("load"):
            corpora = load_corpora(cfg)
        pivot = next(iter(corpora.values())).pivot_lang.code
        languages = [pivot] + list(corpora)
        pairs = language_pairs(corpora)
        report["pivot_lang"] = pivot
        report["languages"] = languages
        for lang, corpus in corpora.items():
            report["corpora"][lang] = {
                "corpus_id": corpus.corpus_id,
                "pairs": len(corpus),
                "dropped": corpus.drop_count,
            }
        logger.info("run over %d corpora, %d language pair(s)", len(corpora), len(pairs))

        stage = "noise"
        with timer.stage("noise"):
            for lang, corpus in corpora.items():
                current = corpus.corpus_id
                done = _finished(layout.ledger, corpus.corpus_id, "noise", fingerprint)
                if done is None:
                    source_path, target_path = layout.training(corpus.corpus_id)
                    emitted = emit_training_set(
                        corpus, cfg.noise, source_path, target_path,
                        vocab=build_vocabulary(corpus, "other"), progress=progress,
                    ).as_dict()
                    save_checkpoint(layout.ledger, corpus.corpus_id, "noise", emitted["pairs"], "done",
                                    {"fingerprint": fingerprint, "report": emitted})
                else:
                    emitted = done["report"]
                report["training"][lang] = emitted

        stage, current = "pairs", None
        run_pairs(pairs, corpora, cfg, layout, fingerprint, timer, report, progress)

        stage, current = "stats", None
        with timer.stage("stats"):
            write_stats(report, corpora, layout, include_baseline=cfg.baseline)

        if not cfg.stats_only:
            stage = "mix"
            with timer.stage("mix"):
                report["mixture"] = write_mixture(corpora, cfg, layout).as_dict()

        report["status"] = "ok"
    except EAGError as e:
        failure = e if isinstance(e, StageError) else StageError(stage, e, pair=current)
        report["status"] = "failed"
        report["failure"] = {
            "stage": failure.stage,
            "pair": failure.pair,
            "checkpoint": failure.checkpoint,
            "message": str(failure.cause),
        }
        logger.error("%s", failure)
        raise failure
    finally:
        dump_json(layout.report, report)
    return report


def sweep(left, right, gammas, betas=(), join_cfg=None, noise_cfg=None):
    """
    Data-side sweep over gamma and beta for one corpus pair

    Returns:
        dict with 'extraction' rows (gamma, candidates, mean distance) and
        'noising' rows (beta, empirical rate, op shares, p-values)
    """
    if not gammas and not betas:
        raise UsageError("sweep needs at least one gamma or beta value")
    join_cfg = join_cfg or JoinConfig()
    extraction = []
    for gamma in sorted(gammas):
        distances = [c.distance for c in extract_candidates(left, right, replace(join_cfg, gamma=gamma))]
        extraction.append({
            "gamma": gamma,
            "candidates": len(distances),
            "mean_distance": float(np.mean(distances)) if distances else 0.0,
        })
        logger.info("sweep gamma=%.2f: %d candidates", gamma, len(distances))

    noising = []
    if betas:
        vocab = build_vocabulary(right, "other")
        sentences = [other.surface_tokens for _, other in right.pairs]
        base = noise_cfg or NoiseConfig()
        for beta in sorted(betas):
            summary = noise_statistics(sentences, replace(base, beta=beta), vocab, right.corpus_id)
            noising.append(summary)
            logger.info("sweep beta=%.2f: empirical rate %.4f", beta, summary["rate"])
    return {"pair": pair_name(left.other_lang.code, right.other_lang.code),
            "extraction": extraction, "noising": noising}


def sweep_table(result):
    """Sweep result as two pandas frames (extraction, noising)"""
    extraction = pd.DataFrame(result["extraction"])
    rows = []
    for summary in result["noising"]:
        row = {k: summary[k] for k in ("beta", "positions", "rate", "rate_pvalue", "mix_pvalue")}
        row.update({f"share_{op}": share for op, share in summary["op_shares"].items()})
        rows.append(row)
    return extraction, pd.DataFrame(rows)
