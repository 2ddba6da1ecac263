"""Config-driven batch pipeline: ingest, index, expand, retrieve, rerank,
fuse, evaluate and analyze in one deterministic pass.

The config is a YAML mapping; all file paths are resolved relative to the
config file's directory. Every requested recipe writes one TREC run file
into the output directory, plus metric reports (text, CSV, figure) when
qrels are configured.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
import numpy as np
import yaml

from . import report
from .corpus import (
    DocumentRecord,
    IndexVariant,
    attach_fulltext,
    build_indexable_docs,
    parse_metadata,
    read_fulltext_sidecar,
    records_by_id,
)
from .errors import ConfigInvalid, CordSearchError
from .eval import Qrels, evaluate_all, read_qrels, source_stats
from .fusion import (
    RrfParams,
    SoboroffParams,
    all_filtering,
    fusion_of_fusions,
    fusion_of_runs,
    rrf_fuse,
    soboroff_select,
)
from .index import InvertedIndex, Tokenizer, build_index, load_stopwords
from .query import (
    EntityLexicon,
    Ontology,
    Topic,
    build_weighted_query,
    empty_lexicon,
    empty_ontology,
    generate_variations,
    parse_topics,
)
from .retrieval import (
    Bm25Params,
    Rm3Params,
    bm25_search,
    collapse_paragraphs,
    recency_rerank,
    rm3_search,
    similarity_rerank,
    weighted_bm25_search,
)
from .runs import Run, merge_topic_entries, read_run, validate_run, write_run

KNOWN_RECIPES = (
    "ku_run1",
    "ku_run2",
    "ku_run3",
    "fusionOfRuns",
    "fusionOfFusions",
    "allFiltering",
    "soboroffFiltering",
)

_FUSION_CONFIGS = ("title_abstract", "full_text", "paragraph", "paragraph_collapsed")


class RecipeFailure(CordSearchError):
    """A recipe raised; carries the recipe name in the message."""


@dataclass
class PipelineConfig:
    base_dir: Path
    metadata: Path
    topics: Path
    fulltext: Path | None = None
    qrels: Path | None = None
    ontology: Path | None = None
    lexicon: Path | None = None
    vectors: Path | None = None
    stopwords: Path | None = None
    lowercase: bool = True
    stem: bool = True
    bm25: Bm25Params = field(default_factory=Bm25Params)
    rm3: Rm3Params = field(default_factory=Rm3Params)
    rrf: RrfParams = field(default_factory=RrfParams)
    soboroff: SoboroffParams = field(default_factory=SoboroffParams)
    rerank_top_n: int = 50
    boost_year: int = 2020
    indices: list[IndexVariant] = field(default_factory=list)
    external_runs: list[Path] = field(default_factory=list)
    recipes: list[str] = field(default_factory=list)
    output_dir: Path = Path("out")
    seed: int = 0

    def tokenizer(self) -> Tokenizer:
        if self.stopwords is not None:
            stop = load_stopwords(self.stopwords)
            return Tokenizer(lowercase=self.lowercase, stopwords=stop, stem=self.stem)
        return Tokenizer(lowercase=self.lowercase, stem=self.stem)


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base / path


def _require_file(path: Path, where: str) -> Path:
    if not path.is_file():
        raise ConfigInvalid(f"{where}: file not found: {path}")
    return path


def load_config(path: str | Path) -> PipelineConfig:
    """Parse and validate a pipeline config file."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigInvalid(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigInvalid(f"{path}: config must be a mapping")
    base = path.parent

    def section(name: str) -> dict:
        value = raw.get(name, {})
        if value is None:
            return {}
        if not isinstance(value, dict):
            raise ConfigInvalid(f"{name}: expected a mapping")
        return value

    corpus = section("corpus")
    if "metadata" not in corpus:
        raise ConfigInvalid("corpus.metadata: required")
    if "topics" not in raw:
        raise ConfigInvalid("topics: required")
    resources = section("resources")
    tokenizer_cfg = section("tokenizer")

    def optional_file(value: str | None, where: str) -> Path | None:
        if value is None:
            return None
        return _require_file(_resolve(base, value), where)

    try:
        bm25 = Bm25Params(**section("bm25"))
        rm3 = Rm3Params(**section("rm3"))
        rrf = RrfParams(**section("rrf"))
        soboroff = SoboroffParams(**{"seed": raw.get("seed", 0), **section("soboroff")})
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"parameter block: {exc}") from exc

    rerank = section("rerank")
    indices = []
    for name in raw.get("indices") or []:
        try:
            indices.append(IndexVariant(name))
        except ValueError:
            known = ", ".join(v.value for v in IndexVariant)
            raise ConfigInvalid(f"indices: unknown variant {name!r} (known: {known})") from None
    recipes = raw.get("recipes") or []
    if len(set(recipes)) != len(recipes):
        raise ConfigInvalid("recipes: names must be unique")
    for name in recipes:
        if name not in KNOWN_RECIPES:
            raise ConfigInvalid(f"recipes: unknown recipe {name!r} (known: {', '.join(KNOWN_RECIPES)})")

    external: list[Path] = []
    if raw.get("external_runs"):
        value = raw["external_runs"]
        if isinstance(value, str):
            run_dir = _resolve(base, value)
            if not run_dir.is_dir():
                raise ConfigInvalid(f"external_runs: directory not found: {run_dir}")
            external = sorted(run_dir.glob("*.run"))
        else:
            external = [_require_file(_resolve(base, v), "external_runs") for v in value]
    for name in ("allFiltering", "soboroffFiltering"):
        if name in recipes and not external:
            raise ConfigInvalid(f"external_runs: required by the {name} recipe")

    return PipelineConfig(
        base_dir=base,
        metadata=_require_file(_resolve(base, corpus["metadata"]), "corpus.metadata"),
        fulltext=optional_file(corpus.get("fulltext"), "corpus.fulltext"),
        topics=_require_file(_resolve(base, raw["topics"]), "topics"),
        qrels=optional_file(raw.get("qrels"), "qrels"),
        ontology=optional_file(resources.get("ontology"), "resources.ontology"),
        lexicon=optional_file(resources.get("lexicon"), "resources.lexicon"),
        vectors=optional_file(resources.get("vectors"), "resources.vectors"),
        stopwords=optional_file(tokenizer_cfg.get("stopwords"), "tokenizer.stopwords"),
        lowercase=bool(tokenizer_cfg.get("lowercase", True)),
        stem=bool(tokenizer_cfg.get("stem", True)),
        bm25=bm25,
        rm3=rm3,
        rrf=rrf,
        soboroff=soboroff,
        rerank_top_n=int(rerank.get("top_n", 50)),
        boost_year=int(rerank.get("boost_year", 2020)),
        indices=indices,
        external_runs=external,
        recipes=list(recipes),
        output_dir=_resolve(base, raw.get("output_dir", "out")),
        seed=int(raw.get("seed", 0)),
    )


def load_vectors(path: str | Path) -> tuple[dict[str, np.ndarray], dict[int, np.ndarray]]:
    """JSONL of {"id": ..., "vector": [...]}; topic vectors use id "topic:<n>"."""
    doc_vectors: dict[str, np.ndarray] = {}
    topic_vectors: dict[int, np.ndarray] = {}
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            vector = np.asarray(obj["vector"], dtype=float)
            key = str(obj["id"])
            if key.startswith("topic:"):
                topic_vectors[int(key.split(":", 1)[1])] = vector
            else:
                doc_vectors[key] = vector
    return doc_vectors, topic_vectors


@dataclass
class PipelineResult:
    run_files: dict[str, Path]
    report_files: dict[str, list[Path]]


class _PipelineState:
    """Lazily built shared artifacts: indices, topics, resources, runs."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.tokenizer = config.tokenizer()
        records = parse_metadata(config.metadata)
        if config.fulltext is not None:
            records = attach_fulltext(records, read_fulltext_sidecar(config.fulltext))
        self.records: list[DocumentRecord] = records
        self.by_id = records_by_id(records)
        self.topics: list[Topic] = parse_topics(config.topics)
        self.ontology: Ontology = (
            Ontology.load(config.ontology) if config.ontology else empty_ontology()
        )
        self.lexicon: EntityLexicon = (
            EntityLexicon.load(config.lexicon) if config.lexicon else empty_lexicon()
        )
        self.doc_vectors: dict[str, np.ndarray] = {}
        self.topic_vectors: dict[int, np.ndarray] = {}
        if config.vectors is not None:
            self.doc_vectors, self.topic_vectors = load_vectors(config.vectors)
        self._indices: dict[IndexVariant, InvertedIndex] = {}
        self._rm3_grid: dict[tuple[str, str], Run] | None = None
        self._external: list[Run] | None = None

    def index(self, variant: IndexVariant) -> InvertedIndex:
        if variant not in self._indices:
            docs = build_indexable_docs(self.records, variant)
            self._indices[variant] = build_index(docs, self.tokenizer)
        return self._indices[variant]

    def external_runs(self) -> list[Run]:
        if self._external is None:
            self._external = [read_run(p) for p in self.config.external_runs]
        return self._external

    def search_run(self, tag: str, search_fn) -> Run:
        """Per-topic search results merged into one tagged run."""
        return merge_topic_entries(
            (search_fn(topic) for topic in self.topics), tag
        )

    def rm3_grid(self) -> dict[tuple[str, str], Run]:
        """The 16 feedback runs: variation id x index configuration."""
        if self._rm3_grid is not None:
            return self._rm3_grid
        config = self.config
        grid: dict[tuple[str, str], Run] = {}
        variations = {t.number: generate_variations(t, self.lexicon) for t in self.topics}
        for v_index in range(4):
            variation_id = f"V{v_index + 1}"
            for index_config in _FUSION_CONFIGS:
                variant = {
                    "title_abstract": IndexVariant.TITLE_ABSTRACT,
                    "full_text": IndexVariant.FULL_TEXT,
                    "paragraph": IndexVariant.PARAGRAPH,
                    "paragraph_collapsed": IndexVariant.PARAGRAPH,
                }[index_config]
                index = self.index(variant)
                tag = f"{variation_id}.{index_config}"

                def searcher(topic: Topic, _index=index, _vi=v_index):
                    text = variations[topic.number][_vi].text
                    return rm3_search(
                        _index,
                        self.tokenizer.tokenize(text),
                        config.bm25,
                        config.rm3,
                        topic=topic.number,
                        tag="rm3",
                        tokenizer=self.tokenizer,
                    )

                run = self.search_run(tag, searcher)
                if index_config == "paragraph_collapsed":
                    run = collapse_paragraphs(run).retagged(tag)
                grid[(variation_id, index_config)] = run
        self._rm3_grid = grid
        return grid


def _recipe_ku_run1(state: _PipelineState) -> Run:
    config = state.config
    index = state.index(IndexVariant.TITLE_ABSTRACT)
    run = state.search_run(
        "ku_run1",
        lambda topic: bm25_search(
            index,
            state.tokenizer.tokenize(topic.query),
            config.bm25,
            topic=topic.number,
            tag="ku_run1",
            tokenizer=state.tokenizer,
        ),
    )
    return recency_rerank(run, state.by_id, config.rerank_top_n, config.boost_year)


def _recipe_ku_run2(state: _PipelineState) -> Run:
    config = state.config
    index = state.index(IndexVariant.TITLE_ABSTRACT)

    def searcher(topic: Topic):
        weighted = build_weighted_query(topic, state.ontology, state.lexicon)
        return weighted_bm25_search(
            index,
            weighted,
            config.bm25,
            topic=topic.number,
            tag="ku_run2",
            tokenizer=state.tokenizer,
        )

    return state.search_run("ku_run2", searcher)


def _recipe_ku_run3(state: _PipelineState) -> Run:
    config = state.config
    index = state.index(IndexVariant.PARAGRAPH)
    run = state.search_run(
        "ku_run3",
        lambda topic: bm25_search(
            index,
            state.tokenizer.tokenize(topic.query),
            config.bm25,
            topic=topic.number,
            tag="ku_run3",
            tokenizer=state.tokenizer,
        ),
    )
    run = collapse_paragraphs(run)
    run = recency_rerank(run, state.by_id, config.rerank_top_n, config.boost_year)
    return similarity_rerank(
        run, state.doc_vectors, state.topic_vectors, config.rerank_top_n
    )


def _recipe_fusion_of_runs(state: _PipelineState) -> Run:
    grid = state.rm3_grid()
    runs = [grid[key] for key in sorted(grid)]  # order is irrelevant to RRF
    return fusion_of_runs(runs, state.config.rrf, tag="fusionOfRuns")


def _recipe_fusion_of_fusions(state: _PipelineState) -> Run:
    grid = state.rm3_grid()
    groups = [
        [grid[(f"V{v + 1}", c)] for c in _FUSION_CONFIGS] for v in range(4)
    ]
    return fusion_of_fusions(groups, state.config.rrf, tag="fusionOfFusions")


def _recipe_all_filtering(state: _PipelineState) -> Run:
    external = state.external_runs()
    if not external:
        raise ConfigInvalid("external_runs: required by the allFiltering recipe")
    own = [_recipe_fusion_of_fusions(state), _recipe_fusion_of_runs(state)]
    return all_filtering(external, own, state.config.rrf, tag="allFiltering")


def _recipe_soboroff_filtering(state: _PipelineState) -> Run:
    external = state.external_runs()
    if not external:
        raise ConfigInvalid("external_runs: required by the soboroffFiltering recipe")
    selected = soboroff_select(external, state.config.soboroff)
    own = [_recipe_fusion_of_fusions(state), _recipe_fusion_of_runs(state)]
    return rrf_fuse(list(selected) + own, state.config.rrf, tag="soboroffFiltering")


_RECIPE_BUILDERS = {
    "ku_run1": _recipe_ku_run1,
    "ku_run2": _recipe_ku_run2,
    "ku_run3": _recipe_ku_run3,
    "fusionOfRuns": _recipe_fusion_of_runs,
    "fusionOfFusions": _recipe_fusion_of_fusions,
    "allFiltering": _recipe_all_filtering,
    "soboroffFiltering": _recipe_soboroff_filtering,
}


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Execute every configured recipe; outputs are pure functions of the
    config, the input files and the seed."""
    state = _PipelineState(config)
    for variant in config.indices:
        state.index(variant)
    out_dir = config.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    qrels: Qrels | None = read_qrels(config.qrels) if config.qrels else None
    run_files: dict[str, Path] = {}
    report_files: dict[str, list[Path]] = {}
    for recipe in config.recipes:
        try:
            run = _RECIPE_BUILDERS[recipe](state).retagged(recipe)
            problems = validate_run(run)
            if problems:
                raise RecipeFailure(f"{recipe}: invalid run: {problems[0]}")
            run_path = out_dir / f"{recipe}.run"
            write_run(run, run_path)
            run_files[recipe] = run_path
            if qrels is not None:
                metrics = evaluate_all(run, qrels)
                report_files[recipe] = report.write_metric_report(
                    metrics, out_dir, f"{recipe}_metrics", title=recipe
                )
        except CordSearchError as exc:
            raise RecipeFailure(f"recipe {recipe}: {exc}") from exc
    if qrels is not None:
        stats = source_stats(qrels, state.by_id)
        report_files["source_stats"] = report.write_source_stats(
            stats, out_dir, "source_stats", title="assessed documents by source"
        )
    return PipelineResult(run_files, report_files)
