"""Ranking: BM25 (plain and term-weighted), RM3 feedback, recency and
vector-similarity reranking, and paragraph-to-document collapsing.

BM25 uses the non-negative idf form ln(1 + (N - df + 0.5)/(df + 0.5)).
Query terms are treated as a set: duplicates in the input contribute once.
Ties are always broken by descending docid string so that written ranks
agree with evaluation-time ordering. Every operation is pure; nothing
mutates the index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .corpus import DocumentRecord, records_by_id
from .errors import DimensionMismatch, MissingVector, TokenizerMismatch, UnknownDocId
from .index import InvertedIndex, Tokenizer, doc_term_counts
from .runs import Run, RunEntry, from_ranked

DEFAULT_TOP_N = 50
DEFAULT_BOOST_YEAR = 2020


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75
    max_results: int = 1000

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError("k1 must be >= 0")
        if not 0 <= self.b <= 1:
            raise ValueError("b must lie in [0, 1]")
        if self.max_results < 1:
            raise ValueError("max_results must be >= 1")


@dataclass(frozen=True)
class Rm3Params:
    fb_docs: int = 10
    fb_terms: int = 10
    original_weight: float = 0.5

    def __post_init__(self):
        if self.fb_docs < 1 or self.fb_terms < 1:
            raise ValueError("fb_docs and fb_terms must be >= 1")
        if not 0 <= self.original_weight <= 1:
            raise ValueError("original_weight must lie in [0, 1]")


def idf(index: InvertedIndex, term: str) -> float:
    df = index.df(term)
    if df == 0:
        return 0.0
    return math.log(1 + (index.n_docs - df + 0.5) / (df + 0.5))


def _check_tokenizer(index: InvertedIndex, tokenizer: Tokenizer | None) -> None:
    if tokenizer is not None and tokenizer.fingerprint() != index.tokenizer_fingerprint:
        raise TokenizerMismatch(
            "query tokenizer fingerprint does not match the one recorded in the index"
        )


def _weighted_scores(
    index: InvertedIndex, term_weights: Mapping[str, float], params: Bm25Params
) -> dict[int, float]:
    """Accumulated per-document BM25 contributions for a term->weight map."""
    k1, b = params.k1, params.b
    avgdl = index.avgdl
    scores: dict[int, float] = {}
    for term, weight in term_weights.items():
        plist = index.postings.get(term)
        if not plist or weight == 0.0:
            continue
        term_idf = idf(index, term)
        for ordinal, tf in plist:
            dl = index.doc_table[ordinal].length
            norm = tf + k1 * (1 - b + b * dl / avgdl)
            contribution = weight * term_idf * tf * (k1 + 1) / norm
            scores[ordinal] = scores.get(ordinal, 0.0) + contribution
    return scores


def _rank(
    index: InvertedIndex,
    scores: Mapping[int, float],
    params: Bm25Params,
    topic: int,
    tag: str,
) -> list[RunEntry]:
    table = index.doc_table
    ordered = sorted(
        scores.items(),
        key=lambda item: (item[1], table[item[0]].surrogate_id),
        reverse=True,
    )[: params.max_results]
    ranked = [
        (table[ordinal].surrogate_id, table[ordinal].original_id, score)
        for ordinal, score in ordered
    ]
    return from_ranked(topic, ranked, tag)


def bm25_search(
    index: InvertedIndex,
    query_terms: Sequence[str],
    params: Bm25Params = Bm25Params(),
    *,
    topic: int = 0,
    tag: str = "bm25",
    tokenizer: Tokenizer | None = None,
) -> list[RunEntry]:
    """Top documents for a tokenized query; only matching docs are scored."""
    _check_tokenizer(index, tokenizer)
    scores = _weighted_scores(index, {term: 1.0 for term in query_terms}, params)
    return _rank(index, scores, params, topic, tag)


def weighted_bm25_search(
    index: InvertedIndex,
    weighted_query,
    params: Bm25Params = Bm25Params(),
    *,
    topic: int = 0,
    tag: str = "weighted",
    tokenizer: Tokenizer | None = None,
) -> list[RunEntry]:
    """Linear combination of per-term BM25 scores under the term weights.

    Multi-word expansion terms are tokenized with the supplied tokenizer;
    tokens reachable from several weighted terms accumulate their weights.
    """
    _check_tokenizer(index, tokenizer)
    term_weights: dict[str, float] = {}
    for term in weighted_query.terms:
        tokens = tokenizer.tokenize(term.text) if tokenizer else term.text.split()
        for token in tokens:
            term_weights[token] = term_weights.get(token, 0.0) + term.weight
    scores = _weighted_scores(index, term_weights, params)
    return _rank(index, scores, params, topic, tag)


def rm3_search(
    index: InvertedIndex,
    query_terms: Sequence[str],
    bm25_params: Bm25Params = Bm25Params(),
    rm3_params: Rm3Params = Rm3Params(),
    *,
    topic: int = 0,
    tag: str = "rm3",
    tokenizer: Tokenizer | None = None,
) -> list[RunEntry]:
    """BM25 with RM3 pseudo-relevance feedback.

    The relevance model weights each feedback document by the softmax of
    its BM25 score and each term by its in-document likelihood; the top
    feedback terms are interpolated with a uniform distribution over the
    original query terms and the expanded weighted query is rescored.
    With original_weight=1 the expansion carries no mass and the ranking
    reduces to plain BM25.
    """
    _check_tokenizer(index, tokenizer)
    originals = sorted(set(query_terms))
    scores = _weighted_scores(index, {term: 1.0 for term in originals}, bm25_params)
    if not scores:
        return []
    table = index.doc_table
    initial = sorted(
        scores.items(),
        key=lambda item: (item[1], table[item[0]].surrogate_id),
        reverse=True,
    )
    feedback = initial[: rm3_params.fb_docs]
    fb_scores = np.array([score for _, score in feedback])
    softmax = np.exp(fb_scores - fb_scores.max())
    softmax /= softmax.sum()
    vectors = doc_term_counts(index, [ordinal for ordinal, _ in feedback])
    relevance_model: dict[str, float] = {}
    for (ordinal, _), doc_weight in zip(feedback, softmax):
        dl = table[ordinal].length
        if dl == 0:
            continue
        for term, tf in vectors[ordinal].items():
            relevance_model[term] = relevance_model.get(term, 0.0) + doc_weight * tf / dl
    stop = tokenizer.stopwords if tokenizer else frozenset()
    candidates = sorted(
        ((term, p) for term, p in relevance_model.items() if term not in stop),
        key=lambda item: (-item[1], item[0]),
    )[: rm3_params.fb_terms]
    ow = rm3_params.original_weight
    uniform = 1.0 / len(originals)
    expanded: dict[str, float] = {term: ow * uniform for term in originals}
    for term, p in candidates:
        expanded[term] = expanded.get(term, 0.0) + (1 - ow) * p
    total = sum(expanded.values())
    final_weights = {term: w / total for term, w in expanded.items() if w > 0}
    final_scores = _weighted_scores(index, final_weights, bm25_params)
    return _rank(index, final_scores, bm25_params, topic, tag)


def _reassigned(entries: list[RunEntry]) -> list[RunEntry]:
    """Fresh contiguous ranks with rank-descending integer scores."""
    n = len(entries)
    return [
        replace(entry, rank=i + 1, score=float(n - i)) for i, entry in enumerate(entries)
    ]


def _resolve_records(records) -> Mapping[str, DocumentRecord]:
    if isinstance(records, Mapping):
        return records
    return records_by_id(records)


def recency_rerank(
    run: Run,
    records,
    top_n: int = DEFAULT_TOP_N,
    boost_year: int = DEFAULT_BOOST_YEAR,
) -> Run:
    """Stably move boost-year articles ahead of the rest of the top ranks."""
    by_id = _resolve_records(records)
    out: list[RunEntry] = []
    for topic in run.topics():
        entries = run.for_topic(topic)
        head, tail = entries[:top_n], entries[top_n:]
        boosted, rest = [], []
        for entry in head:
            record = by_id.get(entry.original_id)
            if record is None:
                raise UnknownDocId(entry.original_id)
            (boosted if record.publish_year == boost_year else rest).append(entry)
        out.extend(_reassigned(boosted + rest + tail))
    return Run(run.tag, out)


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    if denom == 0.0:
        return 0.0
    return float(np.dot(a, b)) / denom


def similarity_rerank(
    run: Run,
    doc_vectors: Mapping[str, Sequence[float]],
    topic_vector,
    top_n: int = DEFAULT_TOP_N,
) -> Run:
    """Reorder the top ranks by cosine similarity to the topic vector.

    topic_vector may be a single vector or a mapping topic -> vector for
    multi-topic runs. Sorting is stable, so equal similarities keep their
    original relative order.
    """
    out: list[RunEntry] = []
    for topic in run.topics():
        if isinstance(topic_vector, Mapping):
            if topic not in topic_vector:
                raise MissingVector(f"topic {topic}")
            reference = np.asarray(topic_vector[topic], dtype=float)
        else:
            reference = np.asarray(topic_vector, dtype=float)
        entries = run.for_topic(topic)
        head, tail = entries[:top_n], entries[top_n:]
        similarities = []
        for entry in head:
            if entry.surrogate_id not in doc_vectors:
                raise MissingVector(entry.surrogate_id)
            vector = np.asarray(doc_vectors[entry.surrogate_id], dtype=float)
            if vector.shape != reference.shape:
                raise DimensionMismatch(
                    f"{entry.surrogate_id}: vector has {vector.shape[0]} dims, "
                    f"topic vector has {reference.shape[0]}"
                )
            similarities.append(_cosine(vector, reference))
        reordered = [
            entry
            for _, entry in sorted(
                zip(similarities, head), key=lambda pair: -pair[0]
            )
        ]
        out.extend(_reassigned(reordered + tail))
    return Run(run.tag, out)


def collapse_paragraphs(run: Run) -> Run:
    """Keep the first occurrence of each original document id per topic."""
    out: list[RunEntry] = []
    for topic in run.topics():
        seen: set[str] = set()
        kept: list[RunEntry] = []
        for entry in run.for_topic(topic):
            if entry.original_id in seen:
                continue
            seen.add(entry.original_id)
            kept.append(
                replace(entry, surrogate_id=entry.original_id, rank=len(kept) + 1)
            )
        out.extend(kept)
    return Run(run.tag, out)
