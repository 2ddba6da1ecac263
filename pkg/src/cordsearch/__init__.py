"""Batch meta-search and evaluation toolkit for TREC-style retrieval over
CORD-19-like corpora: multi-index BM25/RM3 search, weighted biomedical
query expansion, reciprocal rank fusion and trec_eval-convention scoring.
"""

from .corpus import (
    DocumentRecord,
    IndexableDoc,
    IndexVariant,
    attach_fulltext,
    build_indexable_docs,
    parse_metadata,
    read_fulltext_sidecar,
)
from .eval import (
    MetricReport,
    Qrels,
    agreement,
    evaluate_all,
    read_qrels,
    source_stats,
)
from .fusion import (
    RrfParams,
    SoboroffParams,
    all_filtering,
    fusion_of_fusions,
    fusion_of_runs,
    rrf_fuse,
    soboroff_select,
)
from .index import InvertedIndex, Tokenizer, build_index, load_index, save_index
from .pipeline import PipelineConfig, load_config, run_pipeline
from .query import (
    EntityLexicon,
    Ontology,
    Topic,
    WeightedQuery,
    build_weighted_query,
    expand_with_ontology,
    extract_entities,
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
from .runs import Run, RunEntry, read_run, validate_run, write_run

__version__ = "0.1.0"
