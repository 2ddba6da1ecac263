"""TREC run files: the ranked result lists every stage produces and consumes.

File lines are "topic Q0 docid rank score tag". Within a topic, ranks are
contiguous from 1, scores never increase with rank, and ties are broken by
descending docid string so written order agrees with evaluation order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CapExceededWarning, MalformedLine, RankGap

MAX_RESULTS_CAP = 1000


@dataclass(frozen=True)
class RunEntry:
    topic: int
    surrogate_id: str
    original_id: str
    rank: int
    score: float
    tag: str


@dataclass
class Run:
    tag: str
    entries: list[RunEntry]

    def topics(self) -> list[int]:
        return sorted({e.topic for e in self.entries})

    def for_topic(self, topic: int) -> list[RunEntry]:
        return sorted((e for e in self.entries if e.topic == topic), key=lambda e: e.rank)

    def retagged(self, tag: str) -> "Run":
        return Run(tag, [replace(e, tag=tag) for e in self.entries])


def from_ranked(topic: int, ranked_ids: Sequence[tuple[str, str, float]], tag: str) -> list[RunEntry]:
    """Build entries from (surrogate_id, original_id, score) triples already in order."""
    return [
        RunEntry(topic, surrogate, original, rank, score, tag)
        for rank, (surrogate, original, score) in enumerate(ranked_ids, start=1)
    ]


def read_run(path: str | Path) -> Run:
    """Parse a TREC run file; ranks must be contiguous per topic."""
    entries: list[RunEntry] = []
    tag = ""
    with Path(path).open(encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 6:
                raise MalformedLine(f"{path}:{line_number}: expected 6 fields, got {len(fields)}")
            topic_s, _q0, doc_id, rank_s, score_s, tag = fields
            try:
                entry = RunEntry(int(topic_s), doc_id, doc_id, int(rank_s), float(score_s), tag)
            except ValueError as exc:
                raise MalformedLine(f"{path}:{line_number}: {exc}") from exc
            entries.append(entry)
    entries.sort(key=lambda e: (e.topic, e.rank))
    for topic in sorted({e.topic for e in entries}):
        ranks = [e.rank for e in entries if e.topic == topic]
        if ranks != list(range(1, len(ranks) + 1)):
            raise RankGap(f"{path}: topic {topic} ranks are not contiguous from 1")
    return Run(tag, entries)


def write_run(run: Run, path: str | Path) -> None:
    """Write entries sorted by topic then rank; scores carry 6 decimals."""
    target = Path(path)
    tmp = target.with_name(target.name + ".tmp")
    with tmp.open("w", encoding="utf-8") as handle:
        for entry in sorted(run.entries, key=lambda e: (e.topic, e.rank)):
            handle.write(
                f"{entry.topic} Q0 {entry.surrogate_id} {entry.rank} {entry.score:.6f} {entry.tag}\n"
            )
    tmp.replace(target)


def validate_run(run: Run, cap: int = MAX_RESULTS_CAP) -> list[str]:
    """Check the per-topic rank/score/tie-break invariants and the entry cap."""
    problems: list[str] = []
    for topic in run.topics():
        entries = run.for_topic(topic)
        ranks = [e.rank for e in entries]
        if ranks != list(range(1, len(entries) + 1)):
            problems.append(f"topic {topic}: ranks are not contiguous from 1")
            continue
        for prev, cur in zip(entries, entries[1:]):
            if cur.score > prev.score:
                problems.append(f"topic {topic}: score increases at rank {cur.rank}")
            elif cur.score == prev.score and cur.surrogate_id > prev.surrogate_id:
                problems.append(
                    f"topic {topic}: tie at rank {cur.rank} not in descending docid order"
                )
        if len(entries) > cap:
            message = f"topic {topic}: {len(entries)} entries exceed the {cap}-result cap"
            warnings.warn(message, CapExceededWarning, stacklevel=2)
            problems.append(message)
        seen: set[str] = set()
        for entry in entries:
            if entry.surrogate_id in seen:
                problems.append(f"topic {topic}: duplicate docid {entry.surrogate_id}")
            seen.add(entry.surrogate_id)
    return problems


def merge_topic_entries(per_topic: Iterable[list[RunEntry]], tag: str) -> Run:
    entries: list[RunEntry] = []
    for chunk in per_topic:
        entries.extend(replace(e, tag=tag) for e in chunk)
    entries.sort(key=lambda e: (e.topic, e.rank))
    return Run(tag, entries)
