"""Topic parsing, dictionary-based entity tagging, ontology expansion and
the weighted / variation query builders.

Entity recognition is a deterministic longest-match dictionary tagger over
a user-supplied lexicon, and ontology expansion walks exactly one level up
and one level down from a matched concept. Both operate on lowercased
word sequences, so "SARS-CoV-2" and "sars cov 2" match the same entry.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import MalformedXml, MissingField

_WORDS = re.compile(r"[0-9a-z]+")
_WS = re.compile(r"\s+")


def _words(text: str) -> list[str]:
    return _WORDS.findall(text.lower())


def _norm(text: str) -> str:
    """Canonical key used for all phrase matching."""
    return " ".join(_words(text))


@dataclass(frozen=True)
class Topic:
    number: int
    query: str
    question: str
    narrative: str


def parse_topics(path: str | Path) -> list[Topic]:
    """Parse a TREC topics XML file, normalizing whitespace in every field."""
    try:
        root = ET.parse(Path(path)).getroot()
    except ET.ParseError as exc:
        raise MalformedXml(f"{path}: {exc}") from exc
    topics = []
    elements = [root] if root.tag == "topic" else root.iter("topic")
    for element in elements:
        number_attr = element.get("number")
        if number_attr is None:
            raise MissingField(f"{path}: <topic> without a number attribute")
        fields = {}
        for name in ("query", "question", "narrative"):
            child = element.find(name)
            if child is None:
                raise MissingField(f"topic {number_attr}: missing <{name}>")
            fields[name] = _WS.sub(" ", (child.text or "")).strip()
        topics.append(Topic(int(number_attr), fields["query"], fields["question"], fields["narrative"]))
    return topics


@dataclass(frozen=True)
class Concept:
    label: str
    parents: tuple[str, ...]
    children: tuple[str, ...]
    synonyms: tuple[str, ...]


@dataclass
class Ontology:
    concepts: dict[str, Concept]  # keyed by normalized label
    by_synonym: dict[str, str]  # normalized synonym -> normalized label
    dropped_refs: int = 0

    @classmethod
    def load(cls, path: str | Path) -> "Ontology":
        """Load concepts from JSONL; dangling parent/child refs are dropped."""
        import json

        raw: dict[str, dict] = {}
        with Path(path).open(encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                raw[_norm(obj["label"])] = obj
        concepts: dict[str, Concept] = {}
        by_synonym: dict[str, str] = {}
        dropped = 0
        for key, obj in raw.items():
            parents = []
            children = []
            for name in obj.get("parents", []):
                if _norm(name) in raw:
                    parents.append(name)
                else:
                    dropped += 1
            for name in obj.get("children", []):
                if _norm(name) in raw:
                    children.append(name)
                else:
                    dropped += 1
            concepts[key] = Concept(
                label=obj["label"],
                parents=tuple(parents),
                children=tuple(children),
                synonyms=tuple(obj.get("synonyms", [])),
            )
            for synonym in obj.get("synonyms", []):
                by_synonym.setdefault(_norm(synonym), key)
        return cls(concepts=concepts, by_synonym=by_synonym, dropped_refs=dropped)

    def lookup(self, phrase: str) -> Concept | None:
        key = _norm(phrase)
        if key in self.concepts:
            return self.concepts[key]
        if key in self.by_synonym:
            return self.concepts[self.by_synonym[key]]
        return None

    def max_label_words(self) -> int:
        lengths = [len(_words(c.label)) for c in self.concepts.values()]
        lengths += [len(_words(s)) for s in self.by_synonym]
        return max(lengths, default=1)


def empty_ontology() -> Ontology:
    return Ontology(concepts={}, by_synonym={})


@dataclass(frozen=True)
class Entity:
    label: str
    entity_type: str


@dataclass
class EntityLexicon:
    entries: dict[tuple[str, ...], Entity]  # surface word tuple -> entity

    @classmethod
    def load(cls, path: str | Path) -> "EntityLexicon":
        """TSV with columns: surface, label, entity_type."""
        entries: dict[tuple[str, ...], Entity] = {}
        with Path(path).open(encoding="utf-8") as handle:
            for line in handle:
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ValueError(f"{path}: lexicon lines need 3 tab-separated columns: {line!r}")
                surface, label, entity_type = parts
                words = tuple(_words(surface))
                if not words:
                    raise ValueError(f"{path}: empty surface form in line {line!r}")
                entries[words] = Entity(label, entity_type)
        return cls(entries=entries)

    def max_words(self) -> int:
        return max((len(words) for words in self.entries), default=1)


def empty_lexicon() -> EntityLexicon:
    return EntityLexicon(entries={})


def extract_entities(text: str, lexicon: EntityLexicon) -> list[Entity]:
    """Greedy longest-match tagging, non-overlapping, deduplicated."""
    words = _words(text)
    longest = lexicon.max_words()
    found: list[Entity] = []
    seen: set[Entity] = set()
    i = 0
    while i < len(words):
        match = None
        for span in range(min(longest, len(words) - i), 0, -1):
            candidate = tuple(words[i : i + span])
            if candidate in lexicon.entries:
                match = (lexicon.entries[candidate], span)
                break
        if match is None:
            i += 1
            continue
        entity, span = match
        if entity not in seen:
            seen.add(entity)
            found.append(entity)
        i += span
    return found


def expand_with_ontology(query_terms: Sequence[str], ontology: Ontology) -> list[str]:
    """Alternative terms: direct parents and children of matched concepts."""
    originals = {_norm(term) for term in query_terms}
    alternatives: list[str] = []
    emitted: set[str] = set()
    for term in query_terms:
        concept = ontology.lookup(term)
        if concept is None:
            continue
        for label in (*concept.parents, *concept.children):
            key = _norm(label)
            if key in originals or key in emitted:
                continue
            emitted.add(key)
            alternatives.append(label)
    return alternatives


class TermOrigin(Enum):
    ORIGINAL = "original"
    ONTOLOGY_ALTERNATIVE = "ontology_alternative"
    ENTITY_LABEL = "entity_label"
    ENTITY_TYPE = "entity_type"


ORIGIN_WEIGHTS: Mapping[TermOrigin, float] = {
    TermOrigin.ORIGINAL: 1.0,
    TermOrigin.ONTOLOGY_ALTERNATIVE: 0.7,
    TermOrigin.ENTITY_LABEL: 0.4,
    TermOrigin.ENTITY_TYPE: 0.1,
}


@dataclass(frozen=True)
class WeightedTerm:
    text: str
    weight: float
    origin: TermOrigin


@dataclass
class WeightedQuery:
    terms: list[WeightedTerm] = field(default_factory=list)

    def as_dict(self) -> dict[str, float]:
        return {t.text: t.weight for t in self.terms}


def _query_phrases(query: str, max_words: int) -> list[str]:
    """All contiguous word n-grams of the query, longest span capped."""
    words = _words(query)
    phrases = []
    for span in range(1, min(max_words, len(words)) + 1):
        for start in range(len(words) - span + 1):
            phrases.append(" ".join(words[start : start + span]))
    return phrases


def build_weighted_query(topic: Topic, ontology: Ontology, lexicon: EntityLexicon) -> WeightedQuery:
    """Assemble the expansion-weighted term bag for one topic.

    Original query terms carry weight 1.0, ontology parents/children 0.7,
    entity labels 0.4 and entity types 0.1. A term reachable through
    several origins keeps its highest weight once.
    """
    candidates: list[tuple[str, TermOrigin]] = []
    for word in _words(topic.query):
        candidates.append((word, TermOrigin.ORIGINAL))
    phrases = _query_phrases(topic.query, ontology.max_label_words())
    for alternative in expand_with_ontology(phrases, ontology):
        candidates.append((_norm(alternative), TermOrigin.ONTOLOGY_ALTERNATIVE))
    tagged_text = f"{topic.query} {topic.question}"
    for entity in extract_entities(tagged_text, lexicon):
        candidates.append((_norm(entity.label), TermOrigin.ENTITY_LABEL))
    for entity in extract_entities(tagged_text, lexicon):
        candidates.append((_norm(entity.entity_type), TermOrigin.ENTITY_TYPE))
    best: dict[str, tuple[float, TermOrigin]] = {}
    order: list[str] = []
    for text, origin in candidates:
        weight = ORIGIN_WEIGHTS[origin]
        if text not in best:
            best[text] = (weight, origin)
            order.append(text)
        elif weight > best[text][0]:
            best[text] = (weight, origin)
    return WeightedQuery(
        terms=[WeightedTerm(text, best[text][0], best[text][1]) for text in order]
    )


@dataclass(frozen=True)
class QueryVariation:
    variation_id: str
    text: str


def generate_variations(topic: Topic, lexicon: EntityLexicon) -> list[QueryVariation]:
    """The four query/question role swaps with tagged-entity expansions."""

    def ne(text: str) -> list[str]:
        return [entity.label for entity in extract_entities(text, lexicon)]

    def joined(parts: Iterable[str]) -> str:
        return " ".join(p for p in parts if p)

    return [
        QueryVariation("V1", joined([topic.query, *ne(topic.question)])),
        QueryVariation("V2", joined([topic.query, *ne(topic.question), *ne(topic.narrative)])),
        QueryVariation("V3", joined([topic.question, *ne(topic.query)])),
        QueryVariation("V4", joined([topic.question, *ne(topic.query), *ne(topic.narrative)])),
    ]
