"""
Command line entry point for the multi-way corpus builder

Usage:
    python cli.py run --config run.json
    python cli.py extract de fr --manifest corpora.json --gamma 0.3
    python cli.py sweep de fr --gammas 0 0.2 0.4 --betas 0.1 0.5
"""

import argparse
import json
import logging
import sys

from config import EXIT_CODES, SWEEP_BETAS, SWEEP_GAMMAS
from modules.corpus import build_vocabulary
from modules.errors import EAGError, UsageError
from modules.logging_setup import configure_logging
from modules.noising import emit_training_set, noise, noise_statistics, pair_rng
from modules.pipeline import (
    RunLayout,
    assemble_pair,
    corpus_pair,
    dump_json,
    extract_pair,
    load_corpora,
    run_pipeline,
    sweep,
    sweep_table,
    write_hypotheses,
    write_mixture,
)
from modules.settings import build_pipeline_config
from modules.stats import stats_from_report

logger = logging.getLogger("cli")


class CliParser(argparse.ArgumentParser):
    """argparse that reports bad usage as UsageError instead of exiting with 2"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _global_flags():
    flags = argparse.ArgumentParser(add_help=False)
    group = flags.add_argument_group("run settings")
    group.add_argument("--config", help="JSON config file")
    group.add_argument("--manifest", help="JSON manifest of corpora")
    group.add_argument("--output-dir", help="where artifacts are written")
    group.add_argument("--gamma", type=float, help="similarity threshold scale")
    group.add_argument("--beta", type=float, help="per-position noise probability")
    group.add_argument("--temperature", type=float, help="mixture sampling temperature (>= 1)")
    group.add_argument("--seed", type=int)
    group.add_argument("--jobs", type=int, help="worker processes")
    group.add_argument("--sorted-output", action="store_const", const=True,
                       help="emit candidates in (left, right) index order (always the case; kept for scripts)")
    group.add_argument("--generator", choices=["edit-replay", "remote"])
    group.add_argument("--lexicon", action="append", metavar="LANG=PATH",
                       help="edit-replay lexicon for a target language (repeatable)")
    group.add_argument("--transport", choices=["stdio", "http"], help="remote generator transport")
    group.add_argument("--command", help="generator command for the stdio transport")
    group.add_argument("--url", help="generator endpoint for the http transport")
    group.add_argument("--stats-only", action="store_const", const=True,
                       help="write candidate indices and distances without text")
    group.add_argument("--mix-total", type=int, help="number of mixture lines (default: all)")
    group.add_argument("--mix-key", choices=["pair", "target"])
    group.add_argument("-v", "--verbose", action="count", default=0)
    group.add_argument("-q", "--quiet", action="store_true")
    return flags


def build_parser():
    parser = CliParser(prog="cli.py", description="Build multi-way aligned corpora from pivot-centric bitext")
    commands = parser.add_subparsers(dest="command_name", metavar="command", parser_class=CliParser)
    commands.required = True
    flags = [_global_flags()]

    def pair_command(name, help_text):
        sub = commands.add_parser(name, help=help_text, parents=flags)
        sub.add_argument("lang_a")
        sub.add_argument("lang_b")
        return sub

    pair_command("extract", "extract candidate aligned examples for one language pair")

    sub = commands.add_parser("noise", help="noise one corpus's target side and report statistics", parents=flags)
    sub.add_argument("lang")
    sub.add_argument("--out", help="write noised sentences here instead of stdout")

    sub = commands.add_parser("train-data", help="emit generator training data for one corpus", parents=flags)
    sub.add_argument("lang")
    sub.add_argument("--jsonl", help="also write {source, target, meta} records here")

    pair_command("generate", "run the generator over a pair's candidates")

    sub = pair_command("assemble", "assemble a pair's multi-way corpus from generated hypotheses")
    sub.add_argument("--hypotheses", help="hypothesis file (default: the one generate wrote)")

    commands.add_parser("mix", help="draw the tagged training mixture", parents=flags)

    sub = commands.add_parser("stats", help="print a corpus statistics matrix from a run report", parents=flags)
    sub.add_argument("--report", help="run report (default: <output-dir>/run_report.json)")
    sub.add_argument("--which", choices=["original", "constructed", "baseline"], default="constructed")
    sub.add_argument("--scale", type=float, default=1.0, help="divide counts, e.g. 1e6 for millions")
    sub.add_argument("--html", help="also write a plotly heatmap here")

    sub = pair_command("sweep", "candidate counts over a gamma grid and noise statistics over a beta grid")
    sub.add_argument("--gammas", type=float, nargs="*", default=list(SWEEP_GAMMAS))
    sub.add_argument("--betas", type=float, nargs="*", default=list(SWEEP_BETAS))
    sub.add_argument("--json", help="write the sweep result here")

    sub = commands.add_parser("run", help="full pipeline", parents=flags)
    sub.add_argument("--fresh", action="store_true", help="ignore checkpoints from earlier runs")
    return parser


def overrides_from_args(args):
    """CLI flags shaped like the config file; unset flags stay None"""
    lexicons = None
    if args.lexicon:
        lexicons = {}
        for item in args.lexicon:
            lang, sep, path = item.partition("=")
            if not sep or not lang or not path:
                raise UsageError(f"--lexicon expects LANG=PATH, got {item!r}")
            lexicons[lang] = path
    return {
        "manifest": args.manifest,
        "output_dir": args.output_dir,
        "gamma": args.gamma,
        "beta": args.beta,
        "temperature": args.temperature,
        "seed": args.seed,
        "jobs": args.jobs,
        "sorted_output": args.sorted_output,
        "generator": args.generator,
        "lexicons": lexicons,
        "stats_only": args.stats_only,
        "mix_total": args.mix_total,
        "mix_key": args.mix_key,
        "transport": {"kind": args.transport, "command": args.command, "url": args.url},
    }


def _print(data):
    print(json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True))


def cmd_extract(cfg, args, progress):
    pair, left, right = corpus_pair(load_corpora(cfg), args.lang_a, args.lang_b)
    _print({"pair": pair, **extract_pair(pair, left, right, cfg, RunLayout(cfg.output_dir), progress)})


def cmd_noise(cfg, args, progress):
    corpora = load_corpora(cfg)
    if args.lang not in corpora:
        raise UsageError(f"language not in the manifest: {args.lang}")
    corpus = corpora[args.lang]
    vocab = build_vocabulary(corpus, "other")
    sentences = [other.surface_tokens for _, other in corpus.pairs]
    out = open(args.out, "w", encoding="utf-8", newline="\n") if args.out else sys.stdout
    try:
        for index, tokens in enumerate(sentences):
            out.write(" ".join(noise(tokens, cfg.noise, vocab, pair_rng(cfg.seed, corpus.corpus_id, index))) + "\n")
    finally:
        if args.out:
            out.close()
    summary = noise_statistics(sentences, cfg.noise, vocab, corpus.corpus_id)
    logger.info("noised %d positions: rate %.4f (p=%s)", summary["positions"], summary["rate"], summary["rate_pvalue"])


def cmd_train_data(cfg, args, progress):
    corpora = load_corpora(cfg)
    if args.lang not in corpora:
        raise UsageError(f"language not in the manifest: {args.lang}")
    corpus = corpora[args.lang]
    source_path, target_path = RunLayout(cfg.output_dir).training(corpus.corpus_id)
    report = emit_training_set(corpus, cfg.noise, source_path, target_path, jsonl_path=args.jsonl,
                               progress=progress)
    _print({"corpus": corpus.corpus_id, "source": str(source_path), "target": str(target_path), **report.as_dict()})


def cmd_generate(cfg, args, progress):
    pair, left, right = corpus_pair(load_corpora(cfg), args.lang_a, args.lang_b)
    count = write_hypotheses(pair, left, right, cfg, RunLayout(cfg.output_dir))
    _print({"pair": pair, "hypotheses": count})


def cmd_assemble(cfg, args, progress):
    pair, left, right = corpus_pair(load_corpora(cfg), args.lang_a, args.lang_b)
    tally = assemble_pair(pair, left, right, cfg, RunLayout(cfg.output_dir), args.hypotheses)
    _print({"pair": pair, **tally.as_dict()})


def cmd_mix(cfg, args, progress):
    _print(write_mixture(load_corpora(cfg), cfg, RunLayout(cfg.output_dir)).as_dict())


def cmd_stats(cfg, args, progress):
    path = args.report or RunLayout(cfg.output_dir).report
    try:
        with open(path, "r", encoding="utf-8") as f:
            report = json.load(f)
    except FileNotFoundError:
        raise UsageError(f"run report not found: {path}")
    except json.JSONDecodeError as e:
        raise UsageError(f"run report {path} is not valid JSON: {e}")
    matrix = stats_from_report(report, args.which)
    print(matrix.render_text(scale=args.scale))
    if args.html:
        matrix.write_html(args.html, scale=args.scale)


def cmd_sweep(cfg, args, progress):
    _, left, right = corpus_pair(load_corpora(cfg), args.lang_a, args.lang_b)
    result = sweep(left, right, args.gammas, args.betas, join_cfg=cfg.join, noise_cfg=cfg.noise)
    extraction, noising = sweep_table(result)
    print(extraction.to_string(index=False))
    if not noising.empty:
        print()
        print(noising.to_string(index=False))
    if args.json:
        dump_json(args.json, result)


def cmd_run(cfg, args, progress):
    report = run_pipeline(cfg, fresh=args.fresh, progress=progress)
    for pair, entry in report["pairs"].items():
        generation = entry.get("generation", {})
        logger.info("%s: %d candidates, %d accepted", pair, entry["candidates"], generation.get("accepted", 0))
    print(RunLayout(cfg.output_dir).report)


COMMANDS = {
    "extract": cmd_extract,
    "noise": cmd_noise,
    "train-data": cmd_train_data,
    "generate": cmd_generate,
    "assemble": cmd_assemble,
    "mix": cmd_mix,
    "stats": cmd_stats,
    "sweep": cmd_sweep,
    "run": cmd_run,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.verbose, args.quiet)
        cfg = build_pipeline_config(args.config, overrides_from_args(args))
        progress = not args.quiet and sys.stderr.isatty()
        COMMANDS[args.command_name](cfg, args, progress)
    except EAGError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    return EXIT_CODES["ok"]


if __name__ == "__main__":
    sys.exit(main())
