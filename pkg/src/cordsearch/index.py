"""Tokenization and the immutable inverted index.

The index stores everything BM25 and relevance-model feedback need:
postings with term frequencies, per-document lengths, corpus counts and a
fingerprint of the tokenizer it was built with. Persistence is a single
versioned binary file whose byte layout is deterministic (terms are
written in sorted order), so saving the same index twice yields identical
files.
"""

from __future__ import annotations

import hashlib
import re
import struct
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from . import porter
from .corpus import IndexableDoc, IndexVariant
from .errors import DuplicateSurrogateId, EmptyCorpus, FormatVersionMismatch, IoFailure

_TOKEN_SPLIT = re.compile(r"[^0-9A-Za-z]+")

_MAGIC = b"CSIX"
_VERSION = 1


def default_stopwords() -> frozenset[str]:
    """Bundled English stopword list, one term per line."""
    text = resources.files("cordsearch").joinpath("data/stopwords_en.txt").read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


def load_stopwords(path: str | Path) -> frozenset[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return frozenset(line.strip() for line in lines if line.strip())


@dataclass(frozen=True)
class Tokenizer:
    """Deterministic text-to-token pipeline: split, lowercase, stop, stem."""

    lowercase: bool = True
    stopwords: frozenset[str] = field(default_factory=default_stopwords)
    stem: bool = True

    def tokenize(self, text: str) -> list[str]:
        tokens = [t for t in _TOKEN_SPLIT.split(text) if t]
        if self.lowercase:
            tokens = [t.lower() for t in tokens]
        if self.stopwords:
            tokens = [t for t in tokens if t not in self.stopwords]
        if self.stem:
            tokens = [porter.stem(t) for t in tokens]
        return tokens

    def fingerprint(self) -> str:
        """Stable digest of the configuration, recorded inside every index."""
        h = hashlib.sha256()
        h.update(b"lower=%d;stem=%d;" % (self.lowercase, self.stem))
        for word in sorted(self.stopwords):
            h.update(word.encode("utf-8"))
            h.update(b"\n")
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class DocEntry:
    surrogate_id: str
    original_id: str
    length: int


@dataclass
class InvertedIndex:
    postings: dict[str, list[tuple[int, int]]]  # term -> [(doc ordinal, tf)]
    doc_table: list[DocEntry]
    total_terms: int
    variant: IndexVariant
    tokenizer_fingerprint: str

    @property
    def n_docs(self) -> int:
        return len(self.doc_table)

    @property
    def avgdl(self) -> float:
        return self.total_terms / self.n_docs

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))


def build_index(docs: Sequence[IndexableDoc], tokenizer: Tokenizer) -> InvertedIndex:
    """Index the given documents; ordinals follow input order."""
    if not docs:
        raise EmptyCorpus("cannot build an index from zero documents")
    postings: dict[str, list[tuple[int, int]]] = {}
    doc_table: list[DocEntry] = []
    seen: set[str] = set()
    total_terms = 0
    for ordinal, doc in enumerate(docs):
        if doc.surrogate_id in seen:
            raise DuplicateSurrogateId(doc.surrogate_id)
        seen.add(doc.surrogate_id)
        tokens = tokenizer.tokenize(doc.text)
        counts: dict[str, int] = {}
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1
        for term, tf in counts.items():
            postings.setdefault(term, []).append((ordinal, tf))
        doc_table.append(DocEntry(doc.surrogate_id, doc.original_id, len(tokens)))
        total_terms += len(tokens)
    return InvertedIndex(
        postings=postings,
        doc_table=doc_table,
        total_terms=total_terms,
        variant=docs[0].variant,
        tokenizer_fingerprint=tokenizer.fingerprint(),
    )


def _pack_str(value: str) -> bytes:
    raw = value.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise IoFailure("index file is truncated")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def save_index(index: InvertedIndex, path: str | Path) -> None:
    """Write a deterministic, versioned binary image of the index."""
    parts: list[bytes] = [_MAGIC, struct.pack("<H", _VERSION)]
    parts.append(struct.pack("<B", list(IndexVariant).index(index.variant)))
    parts.append(_pack_str(index.tokenizer_fingerprint))
    parts.append(struct.pack("<I", index.n_docs))
    parts.append(struct.pack("<Q", index.total_terms))
    for entry in index.doc_table:
        parts.append(_pack_str(entry.surrogate_id))
        parts.append(_pack_str(entry.original_id))
        parts.append(struct.pack("<I", entry.length))
    parts.append(struct.pack("<I", len(index.postings)))
    for term in sorted(index.postings):
        plist = index.postings[term]
        parts.append(_pack_str(term))
        parts.append(struct.pack("<I", len(plist)))
        for ordinal, tf in plist:
            parts.append(struct.pack("<II", ordinal, tf))
    blob = b"".join(parts)
    target = Path(path)
    tmp = target.with_name(target.name + ".tmp")
    try:
        tmp.write_bytes(blob)
        tmp.replace(target)
    except OSError as exc:
        raise IoFailure(f"cannot write index to {target}: {exc}") from exc


def load_index(path: str | Path) -> InvertedIndex:
    """Load an index written by save_index; never returns a partial index."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read index from {path}: {exc}") from exc
    reader = _Reader(data)
    if reader.take(4) != _MAGIC:
        raise FormatVersionMismatch("not an index file (bad magic)")
    version = struct.unpack("<H", reader.take(2))[0]
    if version != _VERSION:
        raise FormatVersionMismatch(f"index format v{version}, expected v{_VERSION}")
    variant = list(IndexVariant)[struct.unpack("<B", reader.take(1))[0]]
    fingerprint = reader.string()
    n_docs = reader.u32()
    total_terms = reader.u64()
    doc_table = []
    for _ in range(n_docs):
        surrogate = reader.string()
        original = reader.string()
        length = reader.u32()
        doc_table.append(DocEntry(surrogate, original, length))
    postings: dict[str, list[tuple[int, int]]] = {}
    for _ in range(reader.u32()):
        term = reader.string()
        plist_len = reader.u32()
        plist = []
        for _ in range(plist_len):
            ordinal, tf = struct.unpack("<II", reader.take(8))
            plist.append((ordinal, tf))
        postings[term] = plist
    if reader.pos != len(data):
        raise IoFailure("index file holds trailing bytes")
    return InvertedIndex(
        postings=postings,
        doc_table=doc_table,
        total_terms=total_terms,
        variant=variant,
        tokenizer_fingerprint=fingerprint,
    )


def tokenize(text: str, tokenizer: Tokenizer | None = None) -> list[str]:
    """Module-level convenience wrapper used by the CLI."""
    return (tokenizer or Tokenizer()).tokenize(text)


def doc_term_counts(index: InvertedIndex, ordinals: Iterable[int]) -> dict[int, dict[str, int]]:
    """Term-frequency vectors for the given ordinals, via one postings scan."""
    wanted = set(ordinals)
    vectors: dict[int, dict[str, int]] = {o: {} for o in wanted}
    for term, plist in index.postings.items():
        for ordinal, tf in plist:
            if ordinal in wanted:
                vectors[ordinal][term] = tf
    return vectors
