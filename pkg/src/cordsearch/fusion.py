"""Reciprocal Rank Fusion and the run-combination strategies built on it,
including pseudo-qrels run selection for picking mid-field systems.

RRF scores a document by the sum of 1/(k + rank) over every input run
that retrieved it; documents absent from a run simply contribute nothing.
When a run holds several entries for the same document (paragraph-level
runs), the first occurrence provides its rank.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    EmptyRunList,
    InvalidFraction,
    TooFewRuns,
    TopicSetMismatch,
    WrongGroupShape,
    WrongRunCount,
)
from .runs import MAX_RESULTS_CAP, Run, from_ranked


@dataclass(frozen=True)
class RrfParams:
    k: float = 60.0

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("k must be positive")


@dataclass(frozen=True)
class SoboroffParams:
    pool_depth: int = 100
    sample_fraction: float = 0.1
    trials: int = 50
    select_middle: int = 9
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.sample_fraction <= 1:
            raise InvalidFraction(f"sample_fraction {self.sample_fraction} not in (0, 1]")
        if self.pool_depth < 1 or self.trials < 1 or self.select_middle < 1:
            raise ValueError("pool_depth, trials and select_middle must be >= 1")


def _first_ranks(run: Run, topic: int) -> dict[str, int]:
    ranks: dict[str, int] = {}
    for entry in run.for_topic(topic):
        ranks.setdefault(entry.original_id, entry.rank)
    return ranks


def rrf_fuse(runs: Sequence[Run], params: RrfParams = RrfParams(), tag: str = "rrf") -> Run:
    """Fuse runs over a shared topic set; ties break on descending docid."""
    if not runs:
        raise EmptyRunList("rrf_fuse needs at least one run")
    topic_sets = [set(run.topics()) for run in runs]
    if any(ts != topic_sets[0] for ts in topic_sets[1:]):
        raise TopicSetMismatch("input runs cover different topic sets")
    entries = []
    for topic in sorted(topic_sets[0]):
        doc_ranks: dict[str, list[int]] = {}
        for run in runs:
            for doc_id, rank in _first_ranks(run, topic).items():
                doc_ranks.setdefault(doc_id, []).append(rank)
        # summing in sorted rank order makes the score exactly independent
        # of the run-list order despite float addition; scores are rounded
        # to the 6 decimals run files carry, so deep-rank near-ties become
        # real ties and written order matches evaluation-time re-sorting
        scores = {
            doc_id: round(sum(1.0 / (params.k + rank) for rank in sorted(ranks)), 6)
            for doc_id, ranks in doc_ranks.items()
        }
        ordered = sorted(scores.items(), key=lambda kv: (kv[1], kv[0]), reverse=True)
        ranked = [(doc_id, doc_id, score) for doc_id, score in ordered[:MAX_RESULTS_CAP]]
        entries.extend(from_ranked(topic, ranked, tag))
    return Run(tag, entries)


def fusion_of_runs(
    runs_16: Sequence[Run], params: RrfParams = RrfParams(), tag: str = "fusionOfRuns"
) -> Run:
    """One RRF pass over all sixteen variation/index runs."""
    if len(runs_16) != 16:
        raise WrongRunCount(f"expected 16 runs, got {len(runs_16)}")
    return rrf_fuse(runs_16, params, tag)


def fusion_of_fusions(
    groups: Sequence[Sequence[Run]],
    params: RrfParams = RrfParams(),
    tag: str = "fusionOfFusions",
) -> Run:
    """RRF per variation group, then RRF over the four fused runs."""
    if len(groups) != 4 or any(len(group) != 4 for group in groups):
        raise WrongGroupShape(
            f"expected 4 groups of 4 runs, got {[len(g) for g in groups]}"
        )
    staged = [
        rrf_fuse(group, params, tag=f"{tag}.group{i + 1}") for i, group in enumerate(groups)
    ]
    return rrf_fuse(staged, params, tag)


def all_filtering(
    external_runs: Sequence[Run],
    own_runs: Sequence[Run],
    params: RrfParams = RrfParams(),
    tag: str = "allFiltering",
) -> Run:
    """RRF over the union of external and own runs; no deduplication."""
    return rrf_fuse(list(external_runs) + list(own_runs), params, tag)


def soboroff_mean_ranks(
    candidate_runs: Sequence[Run],
    params: SoboroffParams = SoboroffParams(),
    eval_metric: Callable[[Run, "object"], float] | None = None,
) -> list[float]:
    """Mean rank of each candidate over repeated pseudo-qrels trials.

    Each trial pools the top pool_depth documents per topic across all
    candidates, samples a fraction of each pool uniformly as
    pseudo-relevant, scores every run against the sampled judgments
    (default metric: MAP) and ranks the runs; ties keep input order.
    """
    from .eval import Qrels, map_score

    if eval_metric is None:
        eval_metric = map_score

    topics = sorted({t for run in candidate_runs for t in run.topics()})
    pools: dict[int, list[str]] = {}
    for topic in topics:
        pool: set[str] = set()
        for run in candidate_runs:
            pool.update(e.original_id for e in run.for_topic(topic)[: params.pool_depth])
        pools[topic] = sorted(pool)

    n = len(candidate_runs)
    rank_sums = np.zeros(n)
    for trial in range(params.trials):
        rng = np.random.default_rng([params.seed, trial])
        judgments: dict[int, dict[str, int]] = {}
        for topic in topics:
            pool = pools[topic]
            if not pool:
                continue
            draw = math.ceil(params.sample_fraction * len(pool))
            sampled = rng.choice(pool, size=draw, replace=False)
            judgments[topic] = {doc_id: 1 for doc_id in sampled}
        pseudo_qrels = Qrels(judgments)
        scores = [eval_metric(run, pseudo_qrels) for run in candidate_runs]
        order = sorted(range(n), key=lambda i: (-scores[i], i))
        for position, run_index in enumerate(order):
            rank_sums[run_index] += position + 1

    return list(rank_sums / params.trials)


def soboroff_select(
    candidate_runs: Sequence[Run],
    params: SoboroffParams = SoboroffParams(),
    eval_metric: Callable[[Run, "object"], float] | None = None,
) -> list[Run]:
    """Pick the mid-field runs: order candidates by trial mean rank and
    keep the select_middle runs centered on the median position."""
    if len(candidate_runs) < params.select_middle:
        raise TooFewRuns(
            f"need at least {params.select_middle} candidates, got {len(candidate_runs)}"
        )
    mean_ranks = soboroff_mean_ranks(candidate_runs, params, eval_metric)
    n = len(candidate_runs)
    final_order = sorted(range(n), key=lambda i: (mean_ranks[i], i))
    start = (n - params.select_middle) // 2
    return [candidate_runs[i] for i in final_order[start : start + params.select_middle]]
