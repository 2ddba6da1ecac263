"""Qrels handling, trec_eval-convention effectiveness metrics, and the
qrels analyses (assessor agreement, per-source relevance distribution).

Binary metrics treat grade >= 1 as relevant; NDCG uses the raw grades as
gains with a log2(rank+1) discount. Topics enter the means only when they
hold at least one relevant judgment; qrels topics missing from the run
score zero everywhere (the reference evaluator's complete-judgment mode),
and run topics missing from the qrels are reported, not scored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import DocumentRecord, records_by_id
from .errors import DuplicateJudgment, InvalidGrade, MalformedLine, NoOverlap
from .runs import Run

DEFAULT_CUTOFFS = (5, 10, 15, 20, 30)
DEFAULT_RBP_P = 0.5

GRADES = (0, 1, 2)


@dataclass
class Qrels:
    judgments: dict[int, dict[str, int]] = field(default_factory=dict)

    def topics(self) -> list[int]:
        return sorted(self.judgments)

    def grade(self, topic: int, doc_id: str) -> int | None:
        return self.judgments.get(topic, {}).get(doc_id)

    def relevant_count(self, topic: int) -> int:
        return sum(1 for g in self.judgments.get(topic, {}).values() if g >= 1)


def read_qrels(path: str | Path) -> Qrels:
    """Parse "topic 0 docid grade" lines; grades outside {0,1,2} are rejected."""
    judgments: dict[int, dict[str, int]] = {}
    with Path(path).open(encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 4:
                raise MalformedLine(f"{path}:{line_number}: expected 4 fields, got {len(fields)}")
            topic_s, _iteration, doc_id, grade_s = fields
            try:
                topic, grade = int(topic_s), int(grade_s)
            except ValueError as exc:
                raise MalformedLine(f"{path}:{line_number}: {exc}") from exc
            if grade not in GRADES:
                raise InvalidGrade(f"{path}:{line_number}: grade {grade} not in {GRADES}")
            per_topic = judgments.setdefault(topic, {})
            if doc_id in per_topic:
                raise DuplicateJudgment(f"{path}:{line_number}: ({topic}, {doc_id}) judged twice")
            per_topic[doc_id] = grade
    return Qrels(judgments)


def write_qrels(qrels: Qrels, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for topic in qrels.topics():
            for doc_id in sorted(qrels.judgments[topic]):
                handle.write(f"{topic} 0 {doc_id} {qrels.judgments[topic][doc_id]}\n")


def _ranked_ids(run: Run, topic: int) -> list[str]:
    return [e.surrogate_id for e in run.for_topic(topic)]


def _precision_at_k(ranked: Sequence[str], judged: Mapping[str, int], k: int) -> float:
    hits = sum(1 for doc_id in ranked[:k] if judged.get(doc_id, 0) >= 1)
    return hits / k


def _ndcg_at_k(ranked: Sequence[str], judged: Mapping[str, int], k: int) -> float:
    dcg = sum(
        judged.get(doc_id, 0) / math.log2(i + 1)
        for i, doc_id in enumerate(ranked[:k], start=1)
    )
    ideal = sorted(judged.values(), reverse=True)[:k]
    idcg = sum(g / math.log2(i + 1) for i, g in enumerate(ideal, start=1))
    return dcg / idcg if idcg > 0 else 0.0


def _bpref(ranked: Sequence[str], judged: Mapping[str, int]) -> float:
    n_rel = sum(1 for g in judged.values() if g >= 1)
    n_nonrel = sum(1 for g in judged.values() if g == 0)
    if n_rel == 0:
        return 0.0
    bound = min(n_rel, n_nonrel)
    nonrel_above = 0
    total = 0.0
    for doc_id in ranked:
        grade = judged.get(doc_id)
        if grade is None:
            continue
        if grade >= 1:
            total += 1.0 if nonrel_above == 0 else 1.0 - min(nonrel_above, n_rel) / bound
        else:
            nonrel_above += 1
    return total / n_rel


def _rbp(ranked: Sequence[str], judged: Mapping[str, int], p: float) -> float:
    return (1 - p) * sum(
        p ** (i - 1)
        for i, doc_id in enumerate(ranked, start=1)
        if judged.get(doc_id, 0) >= 1
    )


def _average_precision(ranked: Sequence[str], judged: Mapping[str, int]) -> float:
    n_rel = sum(1 for g in judged.values() if g >= 1)
    if n_rel == 0:
        return 0.0
    hits = 0
    total = 0.0
    for rank, doc_id in enumerate(ranked, start=1):
        if judged.get(doc_id, 0) >= 1:
            hits += 1
            total += hits / rank
    return total / n_rel


@dataclass
class MetricReport:
    per_topic: dict[int, dict[str, float]]
    means: dict[str, float]
    unjudged_topics: list[int]
    cutoffs: tuple[int, ...]

    def metric_names(self) -> list[str]:
        ordered = [f"P@{k}" for k in self.cutoffs]
        ordered += [f"NDCG@{k}" for k in self.cutoffs]
        ordered += ["Bpref", "RBP", "AP", "num_rel", "num_rel_ret"]
        return ordered


def evaluate_all(
    run: Run,
    qrels: Qrels,
    cutoffs: Sequence[int] = DEFAULT_CUTOFFS,
    rbp_p: float = DEFAULT_RBP_P,
    include_missing: bool = True,
) -> MetricReport:
    """Score a run against qrels over every supported metric."""
    cutoffs = tuple(cutoffs)
    eligible = [t for t in qrels.topics() if qrels.relevant_count(t) > 0]
    run_topics = set(run.topics())
    if not include_missing:
        eligible = [t for t in eligible if t in run_topics]
    per_topic: dict[int, dict[str, float]] = {}
    for topic in eligible:
        judged = qrels.judgments[topic]
        ranked = _ranked_ids(run, topic) if topic in run_topics else []
        row: dict[str, float] = {}
        for k in cutoffs:
            row[f"P@{k}"] = _precision_at_k(ranked, judged, k)
        for k in cutoffs:
            row[f"NDCG@{k}"] = _ndcg_at_k(ranked, judged, k)
        row["Bpref"] = _bpref(ranked, judged)
        row["RBP"] = _rbp(ranked, judged, rbp_p)
        row["AP"] = _average_precision(ranked, judged)
        row["num_rel"] = float(sum(1 for g in judged.values() if g >= 1))
        row["num_rel_ret"] = float(
            sum(1 for doc_id in ranked if judged.get(doc_id, 0) >= 1)
        )
        per_topic[topic] = row
    means: dict[str, float] = {}
    if per_topic:
        names = next(iter(per_topic.values())).keys()
        for name in names:
            values = [row[name] for row in per_topic.values()]
            if name.startswith("num_"):
                means[name] = float(sum(values))
            else:
                means[name] = sum(values) / len(values)
    unjudged = sorted(t for t in run_topics if t not in qrels.judgments)
    return MetricReport(per_topic, means, unjudged, cutoffs)


def precision_at_k(run: Run, qrels: Qrels, k: int) -> float:
    return _mean_metric(run, qrels, lambda ranked, judged: _precision_at_k(ranked, judged, k))


def ndcg_at_k(run: Run, qrels: Qrels, k: int) -> float:
    return _mean_metric(run, qrels, lambda ranked, judged: _ndcg_at_k(ranked, judged, k))


def bpref(run: Run, qrels: Qrels) -> float:
    return _mean_metric(run, qrels, _bpref)


def rbp(run: Run, qrels: Qrels, p: float = DEFAULT_RBP_P) -> float:
    return _mean_metric(run, qrels, lambda ranked, judged: _rbp(ranked, judged, p))


def average_precision(run: Run, qrels: Qrels) -> float:
    return _mean_metric(run, qrels, _average_precision)


map_score = average_precision


def _mean_metric(run: Run, qrels: Qrels, metric) -> float:
    eligible = [t for t in qrels.topics() if qrels.relevant_count(t) > 0]
    if not eligible:
        return 0.0
    run_topics = set(run.topics())
    total = 0.0
    for topic in eligible:
        ranked = _ranked_ids(run, topic) if topic in run_topics else []
        total += metric(ranked, qrels.judgments[topic])
    return total / len(eligible)


@dataclass
class AgreementReport:
    common: int
    agreed: int
    disagreed: int
    pct_disagree: float


def agreement(qrels_a: Qrels, qrels_b: Qrels, binary: bool = False) -> AgreementReport:
    """Compare two assessment sets over their shared (topic, doc) pairs."""
    common = agreed = 0
    for topic, judged_a in qrels_a.judgments.items():
        judged_b = qrels_b.judgments.get(topic)
        if not judged_b:
            continue
        for doc_id, grade_a in judged_a.items():
            if doc_id not in judged_b:
                continue
            grade_b = judged_b[doc_id]
            common += 1
            if binary:
                agreed += (grade_a >= 1) == (grade_b >= 1)
            else:
                agreed += grade_a == grade_b
    if common == 0:
        raise NoOverlap("the two qrels share no (topic, doc) pairs")
    disagreed = common - agreed
    return AgreementReport(common, agreed, disagreed, disagreed / common)


@dataclass
class SourceRow:
    source: str
    partial: int
    partial_pct: float
    relevant: int
    relevant_pct: float
    corpus_docs: int


@dataclass
class SourceStats:
    rows: list[SourceRow]
    total_partial: int
    total_relevant: int
    total_docs: int


def source_stats(qrels: Qrels, records: Iterable[DocumentRecord] | Mapping[str, DocumentRecord]) -> SourceStats:
    """Unique partially-relevant / relevant document counts per source."""
    by_id = records if isinstance(records, Mapping) else records_by_id(records)
    partial_docs: set[str] = set()
    relevant_docs: set[str] = set()
    for judged in qrels.judgments.values():
        for doc_id, grade in judged.items():
            if grade == 1:
                partial_docs.add(doc_id)
            elif grade == 2:
                relevant_docs.add(doc_id)

    def source_of(doc_id: str) -> str:
        record = by_id.get(doc_id)
        return record.source if record is not None and record.source else "unknown"

    sources: set[str] = {r.source or "unknown" for r in by_id.values()}
    sources.update(source_of(d) for d in partial_docs | relevant_docs)
    per_source_docs: dict[str, int] = {}
    for record in by_id.values():
        key = record.source or "unknown"
        per_source_docs[key] = per_source_docs.get(key, 0) + 1
    total_partial = len(partial_docs)
    total_relevant = len(relevant_docs)
    rows = []
    for source in sorted(sources, key=str.lower):
        n_partial = sum(1 for d in partial_docs if source_of(d) == source)
        n_relevant = sum(1 for d in relevant_docs if source_of(d) == source)
        rows.append(
            SourceRow(
                source=source,
                partial=n_partial,
                partial_pct=100.0 * n_partial / total_partial if total_partial else 0.0,
                relevant=n_relevant,
                relevant_pct=100.0 * n_relevant / total_relevant if total_relevant else 0.0,
                corpus_docs=per_source_docs.get(source, 0),
            )
        )
    return SourceStats(rows, total_partial, total_relevant, sum(per_source_docs.values()))
