import math
import random

import pytest

from oracles import (
    naive_bm25_scores,
    naive_first_seen,
    naive_rank,
    naive_stable_partition,
)

from cordsearch.corpus import DocumentRecord, IndexableDoc, IndexVariant
from cordsearch.errors import (
    DimensionMismatch,
    MissingVector,
    TokenizerMismatch,
    UnknownDocId,
)
from cordsearch.index import Tokenizer, build_index
from cordsearch.query import WeightedQuery, WeightedTerm, TermOrigin
from cordsearch.retrieval import (
    Bm25Params,
    bm25_search,
    collapse_paragraphs,
    recency_rerank,
    similarity_rerank,
    weighted_bm25_search,
)
from cordsearch.runs import Run, from_ranked, validate_run

PLAIN = Tokenizer(stopwords=frozenset(), stem=False)


def _index(texts, ids=None, variant=IndexVariant.TITLE_ABSTRACT):
    ids = ids or [f"d{i}" for i in range(len(texts))]
    docs = [IndexableDoc(i, i.split(".")[0], t, variant) for i, t in zip(ids, texts)]
    return build_index(docs, PLAIN)


def _wq(pairs):
    return WeightedQuery(
        [WeightedTerm(text, weight, TermOrigin.ORIGINAL) for text, weight in pairs]
    )


def test_exclusive_term_retrieves_one_doc():
    index = _index(["a b", "b c"])
    entries = bm25_search(index, ["a"])
    assert [e.surrogate_id for e in entries] == ["d0"]
    assert entries[0].rank == 1
    assert entries[0].score > 0


def test_tie_broken_by_descending_id():
    index = _index(["a b", "b c"])
    entries = bm25_search(index, ["b"])
    assert [e.surrogate_id for e in entries] == ["d1", "d0"]
    assert entries[0].score == pytest.approx(entries[1].score)
    # hand evaluation: tf=1, dl=avgdl so the normalizer is k1+1-scaled
    expected = math.log(1 + (2 - 2 + 0.5) / (2 + 0.5))
    assert entries[0].score == pytest.approx(expected)


def test_unknown_terms_empty_result():
    index = _index(["a b", "b c"])
    assert bm25_search(index, ["zzz"]) == []


def test_max_results_cap():
    index = _index([f"common w{i}" for i in range(30)])
    entries = bm25_search(index, ["common"], Bm25Params(max_results=10))
    assert len(entries) == 10
    assert [e.rank for e in entries] == list(range(1, 11))


def test_scores_match_naive_full_scan():
    rng = random.Random(17)
    vocab = [f"w{i}" for i in range(25)]
    for _ in range(20):
        texts = [
            " ".join(rng.choices(vocab, k=rng.randint(1, 30)))
            for _ in range(rng.randint(2, 25))
        ]
        index = _index(texts)
        query = rng.sample(vocab, rng.randint(1, 4))
        entries = bm25_search(index, query)
        naive = naive_bm25_scores([t.split() for t in texts], {t: 1.0 for t in query})
        expected_ids = naive_rank(
            [(f"d{i}", s) for i, s in enumerate(naive)], limit=1000
        )
        assert [e.surrogate_id for e in entries] == expected_ids
        by_id = {f"d{i}": s for i, s in enumerate(naive)}
        for entry in entries:
            assert entry.score == pytest.approx(by_id[entry.surrogate_id], abs=1e-9)


def test_duplicate_query_terms_count_once():
    index = _index(["a b", "b c"])
    assert bm25_search(index, ["a", "a"]) == bm25_search(index, ["a"])


def test_tokenizer_fingerprint_checked():
    tokenizer = Tokenizer()
    docs = [IndexableDoc("d0", "d0", "covid spread", IndexVariant.TITLE_ABSTRACT)]
    index = build_index(docs, tokenizer)
    assert bm25_search(index, ["covid"], tokenizer=tokenizer)
    with pytest.raises(TokenizerMismatch):
        bm25_search(index, ["covid"], tokenizer=PLAIN)


def test_weighted_all_ones_equals_plain():
    index = _index(["a b c", "b c d", "c d e"])
    plain = bm25_search(index, ["b", "d"])
    weighted = weighted_bm25_search(index, _wq([("b", 1.0), ("d", 1.0)]))
    assert [(e.surrogate_id, e.rank) for e in plain] == [
        (e.surrogate_id, e.rank) for e in weighted
    ]
    for p, w in zip(plain, weighted):
        assert p.score == pytest.approx(w.score)


def test_weighted_single_term_scales_linearly():
    index = _index(["a b", "a a c", "b c"])
    full = weighted_bm25_search(index, _wq([("a", 1.0)]))
    scaled = weighted_bm25_search(index, _wq([("a", 0.7)]))
    assert [e.surrogate_id for e in full] == [e.surrogate_id for e in scaled]
    for f, s in zip(full, scaled):
        assert s.score == pytest.approx(0.7 * f.score)


def test_weighted_mixed_matches_naive():
    rng = random.Random(23)
    vocab = [f"w{i}" for i in range(15)]
    for _ in range(15):
        texts = [
            " ".join(rng.choices(vocab, k=rng.randint(2, 20)))
            for _ in range(rng.randint(2, 15))
        ]
        index = _index(texts)
        weights = {t: rng.choice([1.0, 0.7, 0.4, 0.1]) for t in rng.sample(vocab, 5)}
        entries = weighted_bm25_search(index, _wq(list(weights.items())))
        naive = naive_bm25_scores([t.split() for t in texts], weights)
        expected_ids = naive_rank([(f"d{i}", s) for i, s in enumerate(naive)])
        assert [e.surrogate_id for e in entries] == expected_ids


def test_uniform_weight_preserves_ranking_property():
    rng = random.Random(4)
    vocab = [f"w{i}" for i in range(12)]
    texts = [" ".join(rng.choices(vocab, k=10)) for _ in range(20)]
    index = _index(texts)
    query = ["w1", "w2", "w3"]
    base = bm25_search(index, query)
    for w in (0.5, 0.1):
        scaled = weighted_bm25_search(index, _wq([(t, w) for t in query]))
        assert [e.surrogate_id for e in scaled] == [e.surrogate_id for e in base]
        for b, s in zip(base, scaled):
            assert s.score == pytest.approx(w * b.score)


# ---------------------------------------------------------------- reranking

def _run_from_ids(ids, topic=1, tag="t"):
    ranked = [(i, i, float(len(ids) - n)) for n, i in enumerate(ids)]
    return Run(tag, from_ranked(topic, ranked, tag))


def _records(years):
    return {
        doc_id: DocumentRecord(doc_id, publish_year=year) for doc_id, year in years.items()
    }


def test_recency_single_boost():
    run = _run_from_ids(["a", "b", "c"])
    records = _records({"a": 2019, "b": 2020, "c": 2018})
    result = recency_rerank(run, records, top_n=3)
    assert [e.surrogate_id for e in result.entries] == ["b", "a", "c"]
    assert [e.rank for e in result.entries] == [1, 2, 3]
    assert validate_run(result) == []


def test_recency_fixed_point_when_all_boosted():
    run = _run_from_ids(["a", "b", "c"])
    records = _records({"a": 2020, "b": 2020, "c": 2020})
    result = recency_rerank(run, records, top_n=3)
    assert [e.surrogate_id for e in result.entries] == ["a", "b", "c"]


def test_recency_stable_partition_with_missing_years():
    years = {"a": 2020, "b": 2005, "c": 2020, "d": None, "e": 2020}
    run = _run_from_ids(list("abcde"))
    result = recency_rerank(run, _records(years), top_n=5)
    expected = naive_stable_partition(list("abcde"), lambda i: years[i] == 2020)
    assert [e.surrogate_id for e in result.entries] == expected == ["a", "c", "e", "b", "d"]


def test_recency_tail_untouched():
    years = {c: (2020 if c in "bd" else 2010) for c in "abcdef"}
    run = _run_from_ids(list("abcdef"))
    result = recency_rerank(run, _records(years), top_n=3)
    # only the first three may move; d stays below even though it is 2020
    assert [e.surrogate_id for e in result.entries] == ["b", "a", "c", "d", "e", "f"]


def test_recency_unknown_doc():
    run = _run_from_ids(["a", "zz"])
    with pytest.raises(UnknownDocId):
        recency_rerank(run, _records({"a": 2020}), top_n=2)


def test_recency_multiset_conserved():
    rng = random.Random(31)
    ids = [f"d{i}" for i in range(40)]
    years = {i: rng.choice([2018, 2019, 2020, None]) for i in ids}
    run = _run_from_ids(ids)
    result = recency_rerank(run, _records(years), top_n=20)
    assert sorted(e.surrogate_id for e in result.entries) == sorted(ids)
    head = [e.surrogate_id for e in result.entries][:20]
    assert sorted(head) == sorted(ids[:20])


def test_similarity_self_vector_first():
    run = _run_from_ids(["a", "b", "c"])
    vectors = {"a": [0.0, 1.0], "b": [1.0, 0.0], "c": [0.5, 0.5]}
    result = similarity_rerank(run, vectors, [1.0, 0.0], top_n=3)
    assert result.entries[0].surrogate_id == "b"


def test_similarity_hand_angles():
    run = _run_from_ids(["far", "mid", "near"])
    vectors = {
        "near": [1.0, 0.0],  # 0 degrees
        "mid": [1.0, 1.0],  # 45 degrees
        "far": [0.0, 1.0],  # 90 degrees
    }
    result = similarity_rerank(run, vectors, [1.0, 0.0], top_n=3)
    assert [e.surrogate_id for e in result.entries] == ["near", "mid", "far"]


def test_similarity_ties_stable():
    run = _run_from_ids(["a", "b", "c"])
    vectors = {i: [1.0, 1.0] for i in "abc"}
    result = similarity_rerank(run, vectors, [1.0, 0.0], top_n=3)
    assert [e.surrogate_id for e in result.entries] == ["a", "b", "c"]


def test_similarity_missing_vector_and_dimension():
    run = _run_from_ids(["a", "b"])
    with pytest.raises(MissingVector):
        similarity_rerank(run, {"a": [1.0]}, [1.0], top_n=2)
    with pytest.raises(DimensionMismatch):
        similarity_rerank(run, {"a": [1.0], "b": [1.0, 2.0]}, [1.0], top_n=2)


def test_similarity_tail_untouched_and_conserved():
    run = _run_from_ids(list("abcdef"))
    vectors = {i: [1.0, float(n)] for n, i in enumerate("abcdef")}
    result = similarity_rerank(run, vectors, [0.0, 1.0], top_n=3)
    ids = [e.surrogate_id for e in result.entries]
    assert ids[3:] == ["d", "e", "f"]
    assert sorted(ids[:3]) == ["a", "b", "c"]
    assert ids[:3] == ["c", "b", "a"]  # larger second component is closer


def test_collapse_definitional():
    ranked = [("a.0", "a", 3.0), ("b.3", "b", 2.0), ("a.2", "a", 1.0)]
    run = Run("t", from_ranked(1, ranked, "t"))
    result = collapse_paragraphs(run)
    assert [(e.surrogate_id, e.rank) for e in result.entries] == [("a", 1), ("b", 2)]


def test_collapse_unique_originals_fixed_point():
    ranked = [("a", "a", 3.0), ("b", "b", 2.0)]
    run = Run("t", from_ranked(1, ranked, "t"))
    result = collapse_paragraphs(run)
    assert [(e.surrogate_id, e.rank, e.score) for e in result.entries] == [
        ("a", 1, 3.0),
        ("b", 2, 2.0),
    ]


def test_collapse_matches_first_seen_oracle():
    rng = random.Random(8)
    originals = [f"doc{i}" for i in range(20)]
    pairs = []
    for rank in range(100):
        original = rng.choice(originals)
        pairs.append((f"{original}.{rank}", original))
    ranked = [(s, o, float(200 - i)) for i, (s, o) in enumerate(pairs)]
    run = Run("t", from_ranked(1, ranked, "t"))
    result = collapse_paragraphs(run)
    assert [e.surrogate_id for e in result.entries] == naive_first_seen(pairs)
    assert len({e.original_id for e in result.entries}) == len(result.entries)


def test_rerank_ops_are_deterministic():
    rng = random.Random(12)
    ids = [f"d{i}" for i in range(30)]
    years = {i: rng.choice([2019, 2020]) for i in ids}
    vectors = {i: [rng.random(), rng.random()] for i in ids}
    run = _run_from_ids(ids)
    first = recency_rerank(run, _records(years), top_n=10)
    second = recency_rerank(run, _records(years), top_n=10)
    assert first == second
    sim1 = similarity_rerank(run, vectors, [1.0, 0.5], top_n=10)
    sim2 = similarity_rerank(run, vectors, [1.0, 0.5], top_n=10)
    assert sim1 == sim2
