"""Command-line interface.

One subcommand per toolkit operation plus `run` for the full pipeline.
Exit codes: 0 success, 1 recipe/operation failure, 2 invalid config or
usage. The pipeline config path may also come from CORDSEARCH_CONFIG.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import report
from .corpus import (
    IndexVariant,
    attach_fulltext,
    build_indexable_docs,
    parse_metadata,
    read_fulltext_sidecar,
)
from .errors import ConfigInvalid, CordSearchError
from .eval import agreement, evaluate_all, read_qrels, source_stats
from .fusion import RrfParams, rrf_fuse
from .index import Tokenizer, build_index, load_index, load_stopwords, save_index
from .pipeline import load_config, run_pipeline
from .query import (
    EntityLexicon,
    Ontology,
    build_weighted_query,
    empty_lexicon,
    empty_ontology,
    generate_variations,
    parse_topics,
)
from .retrieval import Bm25Params, bm25_search
from .runs import read_run, validate_run, write_run

CONFIG_ENV_VAR = "CORDSEARCH_CONFIG"


def _tokenizer_from_args(args) -> Tokenizer:
    if getattr(args, "stopwords", None):
        return Tokenizer(
            lowercase=not args.no_lowercase,
            stopwords=load_stopwords(args.stopwords),
            stem=not args.no_stem,
        )
    return Tokenizer(lowercase=not args.no_lowercase, stem=not args.no_stem)


def _add_tokenizer_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--no-stem", action="store_true", help="disable Porter stemming")
    parser.add_argument("--no-lowercase", action="store_true", help="keep original case")
    parser.add_argument("--stopwords", help="stopword list file (one term per line)")


def _cmd_index(args) -> int:
    records = parse_metadata(args.metadata)
    if args.fulltext:
        records = attach_fulltext(records, read_fulltext_sidecar(args.fulltext))
    variant = IndexVariant(args.variant)
    docs = build_indexable_docs(records, variant)
    index = build_index(docs, _tokenizer_from_args(args))
    save_index(index, args.out)
    print(
        f"indexed {index.n_docs} docs ({variant.value}), "
        f"{len(index.postings)} terms, avgdl {index.avgdl:.2f} -> {args.out}"
    )
    return 0


def _cmd_topics(args) -> int:
    for topic in parse_topics(args.topics):
        print(f"{topic.number}\t{topic.query}")
    return 0


def _cmd_search(args) -> int:
    index = load_index(args.index)
    tokenizer = _tokenizer_from_args(args)
    params = Bm25Params(k1=args.k1, b=args.b, max_results=args.max_results)
    entries = bm25_search(
        index,
        tokenizer.tokenize(args.query),
        params,
        topic=args.topic,
        tag=args.tag,
        tokenizer=tokenizer,
    )
    for e in entries:
        print(f"{e.topic} Q0 {e.surrogate_id} {e.rank} {e.score:.6f} {e.tag}")
    return 0


def _cmd_expand(args) -> int:
    topics = parse_topics(args.topics)
    wanted = [t for t in topics if t.number == args.number]
    if not wanted:
        print(f"topic {args.number} not found", file=sys.stderr)
        return 1
    ontology = Ontology.load(args.ontology) if args.ontology else empty_ontology()
    lexicon = EntityLexicon.load(args.lexicon) if args.lexicon else empty_lexicon()
    weighted = build_weighted_query(wanted[0], ontology, lexicon)
    for term in weighted.terms:
        print(f"{term.weight:.1f}\t{term.origin.value}\t{term.text}")
    for variation in generate_variations(wanted[0], lexicon):
        print(f"{variation.variation_id}\t{variation.text}")
    return 0


def _cmd_fuse(args) -> int:
    runs = [read_run(path) for path in args.runs]
    fused = rrf_fuse(runs, RrfParams(k=args.k), tag=args.tag)
    if args.out:
        write_run(fused, args.out)
    else:
        for e in fused.entries:
            print(f"{e.topic} Q0 {e.surrogate_id} {e.rank} {e.score:.6f} {e.tag}")
    return 0


def _cmd_eval(args) -> int:
    run = read_run(args.run)
    qrels = read_qrels(args.qrels)
    cutoffs = args.cut or [5, 10, 15, 20, 30]
    metrics = evaluate_all(run, qrels, cutoffs=cutoffs, rbp_p=args.rbp_p)
    print(report.metric_table(metrics), end="")
    if args.report_dir:
        paths = report.write_metric_report(
            metrics, args.report_dir, Path(args.run).stem + "_metrics", title=run.tag
        )
        print("wrote " + ", ".join(str(p) for p in paths))
    return 0


def _cmd_stats(args) -> int:
    qrels = read_qrels(args.qrels)
    records = parse_metadata(args.metadata)
    stats = source_stats(qrels, records)
    print(report.source_table(stats), end="")
    if args.report_dir:
        paths = report.write_source_stats(stats, args.report_dir, "source_stats")
        print("wrote " + ", ".join(str(p) for p in paths))
    return 0


def _cmd_agreement(args) -> int:
    qrels_a, qrels_b = read_qrels(args.qrels_a), read_qrels(args.qrels_b)
    graded = agreement(qrels_a, qrels_b)
    binary = agreement(qrels_a, qrels_b, binary=True)
    print(f"common labels: {graded.common}")
    for label, result in (("graded", graded), ("binary", binary)):
        print(
            f"{label}: agreed {result.agreed} ({100 * (1 - result.pct_disagree):.1f}%), "
            f"disagreed {result.disagreed} ({100 * result.pct_disagree:.1f}%)"
        )
    return 0


def _cmd_validate_run(args) -> int:
    run = read_run(args.run)
    problems = validate_run(run, cap=args.cap)
    for problem in problems:
        print(problem)
    if not problems:
        print(f"{args.run}: OK ({len(run.entries)} entries, {len(run.topics())} topics)")
    return 1 if problems else 0


def _cmd_run(args) -> int:
    config_path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if not config_path:
        print(f"no config given and {CONFIG_ENV_VAR} is unset", file=sys.stderr)
        return 2
    config = load_config(config_path)
    result = run_pipeline(config)
    for recipe, path in result.run_files.items():
        print(f"{recipe}: {path}")
    if config.qrels is None:
        print("no qrels configured; evaluation skipped")
    else:
        for stem, paths in result.report_files.items():
            print(f"{stem}: " + ", ".join(p.name for p in paths))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cordsearch",
        description="Batch meta-search and evaluation toolkit for TREC-style corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build and save an inverted index")
    p.add_argument("--metadata", required=True)
    p.add_argument("--fulltext")
    p.add_argument("--variant", default="title_abstract",
                   choices=[v.value for v in IndexVariant])
    p.add_argument("--out", required=True)
    _add_tokenizer_flags(p)
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("topics", help="parse a TREC topics file")
    p.add_argument("--topics", required=True)
    p.set_defaults(func=_cmd_topics)

    p = sub.add_parser("search", help="BM25 search against a saved index")
    p.add_argument("--index", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--topic", type=int, default=0)
    p.add_argument("--tag", default="bm25")
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    p.add_argument("--max-results", type=int, default=1000)
    _add_tokenizer_flags(p)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("expand", help="weighted expansion and variations for one topic")
    p.add_argument("--topics", required=True)
    p.add_argument("--number", type=int, required=True)
    p.add_argument("--ontology")
    p.add_argument("--lexicon")
    p.set_defaults(func=_cmd_expand)

    p = sub.add_parser("fuse", help="reciprocal rank fusion of run files")
    p.add_argument("runs", nargs="+")
    p.add_argument("--k", type=float, default=60.0)
    p.add_argument("--tag", default="rrf")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("eval", help="score a run against qrels")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--cut", type=int, action="append",
                   help="cutoff K (repeatable; default 5 10 15 20 30)")
    p.add_argument("--rbp-p", type=float, default=0.5)
    p.add_argument("--report-dir", help="also write txt/csv/png report files here")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("stats", help="per-source relevance distribution")
    p.add_argument("--qrels", required=True)
    p.add_argument("--metadata", required=True)
    p.add_argument("--report-dir")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("agreement", help="compare two qrels files (graded and binarized)")
    p.add_argument("--qrels-a", required=True)
    p.add_argument("--qrels-b", required=True)
    p.set_defaults(func=_cmd_agreement)

    p = sub.add_parser("validate-run", help="check run-file invariants and the 1000 cap")
    p.add_argument("--run", required=True)
    p.add_argument("--cap", type=int, default=1000)
    p.set_defaults(func=_cmd_validate_run)

    p = sub.add_parser("run", help="execute the configured pipeline")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CordSearchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
