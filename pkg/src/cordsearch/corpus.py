"""CORD-19-style corpus ingestion and surrogate-document construction.

Metadata arrives as a CSV (CORD-19 column names) or a JSONL file with the
same keys; full text lives in a JSONL sidecar keyed by document id. Three
families of indexable documents are derived per record: title+abstract,
full text, and one artificial document per paragraph.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DuplicateDocId, MalformedRow, MissingColumn

_YEAR = re.compile(r"\d{4}")

# CSV column -> extra-map key, for the awkwardly named CORD-19 columns
_EXTRA_ALIASES = {
    "who #covidence": "who_covidence",
    "who_covidence": "who_covidence",
    "microsoft academic paper id": "microsoft_id",
    "microsoft_id": "microsoft_id",
}
_ID_COLUMNS = ("cord_uid", "doc_id")
_SOURCE_COLUMNS = ("source_x", "source")


class IndexVariant(Enum):
    TITLE_ABSTRACT = "title_abstract"
    FULL_TEXT = "full_text"
    PARAGRAPH = "paragraph"


@dataclass(frozen=True)
class DocumentRecord:
    """One corpus article; immutable once parsed."""

    doc_id: str
    title: str = ""
    abstract: str = ""
    paragraphs: tuple[str, ...] = ()
    publish_year: int | None = None
    source: str = ""
    extra: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class IndexableDoc:
    surrogate_id: str
    original_id: str
    text: str
    variant: IndexVariant
    paragraph_index: int | None = None


def extract_year(publish_time: str) -> int | None:
    """First 4-digit token of a date string; CORD-19 mixes several formats."""
    match = _YEAR.search(publish_time or "")
    return int(match.group()) if match else None


def _build_record(row: Mapping[str, str], row_number: int) -> DocumentRecord:
    doc_id = ""
    for key in _ID_COLUMNS:
        if row.get(key):
            doc_id = row[key].strip()
            break
    if not doc_id:
        raise MalformedRow(f"row {row_number}: empty document id")
    source = ""
    for key in _SOURCE_COLUMNS:
        if row.get(key):
            source = row[key].strip()
            break
    extra = {}
    consumed = set(_ID_COLUMNS) | set(_SOURCE_COLUMNS) | {"title", "abstract", "publish_time"}
    for key, value in row.items():
        if key in consumed or value in ("", None):
            continue
        extra[_EXTRA_ALIASES.get(key.lower(), key)] = value
    return DocumentRecord(
        doc_id=doc_id,
        title=(row.get("title") or "").strip(),
        abstract=(row.get("abstract") or "").strip(),
        publish_year=extract_year(row.get("publish_time", "")),
        source=source,
        extra=extra,
    )


def _require_columns(names: Iterable[str], where: str) -> None:
    present = set(names)
    if not any(c in present for c in _ID_COLUMNS):
        raise MissingColumn(f"{where}: missing id column 'cord_uid'")
    for column in ("title", "abstract"):
        if column not in present:
            raise MissingColumn(f"{where}: missing column '{column}'")


def parse_metadata(path: str | Path, format: str | None = None) -> list[DocumentRecord]:
    """Parse a metadata file into records; duplicates are a hard error."""
    path = Path(path)
    fmt = format or ("jsonl" if path.suffix in (".jsonl", ".json") else "csv")
    if fmt == "csv":
        records = _parse_csv(path)
    elif fmt == "jsonl":
        records = _parse_jsonl(path)
    else:
        raise ValueError(f"unknown metadata format: {fmt}")
    seen: set[str] = set()
    for record in records:
        if record.doc_id in seen:
            raise DuplicateDocId(record.doc_id)
        seen.add(record.doc_id)
    return records


def _parse_csv(path: Path) -> list[DocumentRecord]:
    records = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn(f"{path}: empty file, no header") from None
        _require_columns(header, str(path))
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedRow(f"row {row_number}: {len(row)} fields, header has {len(header)}")
            records.append(_build_record(dict(zip(header, row)), row_number))
    return records


def _parse_jsonl(path: Path) -> list[DocumentRecord]:
    records = []
    first = True
    with path.open(encoding="utf-8") as handle:
        for row_number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRow(f"row {row_number}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise MalformedRow(f"row {row_number}: expected an object")
            if first:
                _require_columns(obj.keys(), str(path))
                first = False
            row = {k: ("" if v is None else str(v)) for k, v in obj.items()}
            records.append(_build_record(row, row_number))
    return records


def write_metadata(records: Sequence[DocumentRecord], path: str | Path, format: str | None = None) -> None:
    """Serialize records so that parse(write(parse(x))) is a fixed point."""
    path = Path(path)
    fmt = format or ("jsonl" if path.suffix in (".jsonl", ".json") else "csv")
    extra_keys = sorted({k for r in records for k in r.extra})
    if fmt == "csv":
        header = ["cord_uid", "title", "abstract", "publish_time", "source_x", *extra_keys]
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            for r in records:
                year = "" if r.publish_year is None else str(r.publish_year)
                writer.writerow(
                    [r.doc_id, r.title, r.abstract, year, r.source]
                    + [r.extra.get(k, "") for k in extra_keys]
                )
    elif fmt == "jsonl":
        with path.open("w", encoding="utf-8") as handle:
            for r in records:
                obj = {
                    "cord_uid": r.doc_id,
                    "title": r.title,
                    "abstract": r.abstract,
                    "publish_time": "" if r.publish_year is None else str(r.publish_year),
                    "source_x": r.source,
                }
                obj.update({k: r.extra[k] for k in extra_keys if k in r.extra})
                handle.write(json.dumps(obj, sort_keys=False) + "\n")
    else:
        raise ValueError(f"unknown metadata format: {fmt}")


def read_fulltext_sidecar(path: str | Path) -> dict[str, tuple[str, ...]]:
    """JSONL sidecar: one {"doc_id": ..., "paragraphs": [...]} object per line."""
    paragraphs: dict[str, tuple[str, ...]] = {}
    with Path(path).open(encoding="utf-8") as handle:
        for row_number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRow(f"row {row_number}: invalid JSON ({exc.msg})") from exc
            doc_id = obj.get("doc_id")
            if not doc_id:
                raise MalformedRow(f"row {row_number}: missing doc_id")
            paragraphs[doc_id] = tuple(str(p) for p in obj.get("paragraphs", []))
    return paragraphs


def attach_fulltext(
    records: Sequence[DocumentRecord], sidecar: Mapping[str, tuple[str, ...]]
) -> list[DocumentRecord]:
    """Return records with paragraphs filled in from the sidecar mapping."""
    out = []
    for record in records:
        paragraphs = sidecar.get(record.doc_id)
        if paragraphs:
            record = DocumentRecord(
                doc_id=record.doc_id,
                title=record.title,
                abstract=record.abstract,
                paragraphs=tuple(paragraphs),
                publish_year=record.publish_year,
                source=record.source,
                extra=record.extra,
            )
        out.append(record)
    return out


def paragraph_surrogate_id(doc_id: str, paragraph_index: int) -> str:
    return f"{doc_id}.{paragraph_index}"


def split_surrogate_id(surrogate_id: str) -> tuple[str, int]:
    """Inverse of paragraph_surrogate_id."""
    doc_id, _, index = surrogate_id.rpartition(".")
    return doc_id, int(index)


def _joined(*parts: str) -> str:
    return " ".join(p for p in parts if p)


def build_indexable_docs(
    records: Sequence[DocumentRecord], variant: IndexVariant
) -> list[IndexableDoc]:
    """Construct the surrogate documents for one index variant.

    A record with no paragraphs still yields exactly one paragraph-variant
    document (title+abstract only), so every record stays retrievable.
    """
    docs: list[IndexableDoc] = []
    for record in records:
        if variant is IndexVariant.TITLE_ABSTRACT:
            docs.append(
                IndexableDoc(
                    surrogate_id=record.doc_id,
                    original_id=record.doc_id,
                    text=_joined(record.title, record.abstract),
                    variant=variant,
                )
            )
        elif variant is IndexVariant.FULL_TEXT:
            docs.append(
                IndexableDoc(
                    surrogate_id=record.doc_id,
                    original_id=record.doc_id,
                    text=_joined(record.title, record.abstract, *record.paragraphs),
                    variant=variant,
                )
            )
        elif variant is IndexVariant.PARAGRAPH:
            paragraphs = record.paragraphs or ("",)
            for i, paragraph in enumerate(paragraphs):
                docs.append(
                    IndexableDoc(
                        surrogate_id=paragraph_surrogate_id(record.doc_id, i),
                        original_id=record.doc_id,
                        text=_joined(record.title, record.abstract, paragraph),
                        variant=variant,
                        paragraph_index=i,
                    )
                )
        else:
            raise ValueError(f"unknown variant: {variant}")
    return docs


def records_by_id(records: Iterable[DocumentRecord]) -> dict[str, DocumentRecord]:
    return {record.doc_id: record for record in records}
