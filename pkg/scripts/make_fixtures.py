#!/usr/bin/env python3
"""Regenerate the committed test fixtures (toy corpus, agreement qrels,
golden evaluation reference). Deterministic: rerunning must reproduce the
files byte for byte. Run from the repo root:

    python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import csv
import json
import random
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "fixtures"
sys.path.insert(0, str(REPO / "tests"))

import oracles  # noqa: E402

SOURCES = ["Elsevier", "PMC", "medrxiv", "biorxiv", "WHO", "CZI"]
SOURCE_WEIGHTS = [38, 35, 10, 8, 6, 3]

GENERAL_VOCAB = """
virus infection disease protein genome cell receptor immune response study
analysis patient hospital clinical data model rate population sample test
result method outbreak pandemic epidemiology mutation spike sequence host
human animal health risk factor severe acute syndrome respiratory care
measure effect evidence report region country spread control public period
age group outcome detection laboratory assay serology imaging marker level
""".split()

THEMES = {
    1: {
        "query": "coronavirus origin",
        "question": "what is the origin of covid-19",
        "narrative": (
            "seeking information about the origin of the coronavirus including "
            "bat and pangolin reservoirs zoonotic spillover and the wuhan market"
        ),
        "keywords": ["origin", "bat", "pangolin", "zoonotic", "spillover", "wuhan"],
    },
    2: {
        "query": "coronavirus transmission",
        "question": "how does covid-19 spread between humans",
        "narrative": (
            "studies of transmission routes such as aerosol droplet and surface "
            "contact and the effect of distancing on spread"
        ),
        "keywords": ["transmission", "aerosol", "droplet", "surface", "distancing"],
    },
    3: {
        "query": "coronavirus vaccine",
        "question": "what vaccine candidates exist for covid-19",
        "narrative": (
            "reports on vaccine development antibody responses immune protection "
            "and clinical trial results"
        ),
        "keywords": ["vaccine", "antibody", "trial", "protection", "immunization"],
    },
    4: {
        "query": "covid-19 treatment",
        "question": "which drugs help treat covid-19 patients",
        "narrative": (
            "evidence on treatment options including remdesivir steroid therapy "
            "convalescent plasma and supportive oxygen"
        ),
        "keywords": ["treatment", "drug", "remdesivir", "steroid", "plasma"],
    },
    5: {
        "query": "covid-19 symptoms",
        "question": "what are the common symptoms of covid-19",
        "narrative": (
            "descriptions of symptoms such as fever cough fatigue pneumonia and "
            "loss of smell across patient cohorts"
        ),
        "keywords": ["symptom", "fever", "cough", "fatigue", "pneumonia"],
    },
}

LEXICON_ROWS = [
    ("covid-19", "covid-19", "condition"),
    ("sars-cov-2", "sars-cov-2", "virus"),
    ("coronavirus", "coronavirus", "virus"),
    ("pain", "pain", "condition"),
    ("stomach", "stomach", "anatomy"),
    ("fever", "fever", "symptom"),
    ("cough", "cough", "symptom"),
    ("pneumonia", "pneumonia", "condition"),
    ("wuhan", "wuhan", "location"),
    ("transmission", "transmission", "process"),
    ("vaccine", "vaccine", "treatment"),
    ("remdesivir", "remdesivir", "drug"),
    ("lung", "lung", "anatomy"),
]

ONTOLOGY_CONCEPTS = [
    {
        "label": "COVID-19",
        "parents": ["coronavirus infection"],
        "children": [],
        "synonyms": ["covid-19", "covid", "sars-cov-2", "coronavirus"],
    },
    {
        "label": "coronavirus infection",
        "parents": ["viral infectious disease"],
        "children": ["COVID-19", "SARS", "MERS"],
        "synonyms": [],
    },
    {
        "label": "viral infectious disease",
        "parents": ["disease by infectious agent"],
        "children": ["coronavirus infection", "influenza"],
        "synonyms": [],
    },
    {
        "label": "disease by infectious agent",
        "parents": [],
        "children": ["viral infectious disease"],
        "synonyms": [],
    },
    {"label": "SARS", "parents": ["coronavirus infection"], "children": [],
     "synonyms": ["severe acute respiratory syndrome"]},
    {"label": "MERS", "parents": ["coronavirus infection"], "children": [],
     "synonyms": ["middle east respiratory syndrome"]},
    {"label": "influenza", "parents": ["viral infectious disease"], "children": [],
     "synonyms": ["flu"]},
    {"label": "fever", "parents": [], "children": [], "synonyms": ["pyrexia"]},
]


def words(rng: random.Random, pool: list[str], n: int) -> list[str]:
    return [rng.choice(pool) for _ in range(n)]


def make_toy(out: Path) -> None:
    rng = random.Random(20200410)
    out.mkdir(parents=True, exist_ok=True)
    (out / "external_runs").mkdir(exist_ok=True)

    doc_ids = [f"d{i:03d}" for i in range(200)]
    themes: dict[str, int | None] = {}
    titles: dict[str, str] = {}
    abstracts: dict[str, str] = {}
    paragraphs: dict[str, list[str]] = {}
    years: dict[str, str] = {}
    sources: dict[str, str] = {}

    all_keywords = [w for theme in THEMES.values() for w in theme["keywords"]]
    for doc_id in doc_ids:
        theme = rng.choices([1, 2, 3, 4, 5, None], weights=[14, 14, 14, 14, 14, 30])[0]
        themes[doc_id] = theme
        pool = list(GENERAL_VOCAB) + all_keywords
        if theme is not None:
            pool += THEMES[theme]["keywords"] * 4 + ["coronavirus", "covid"] * 2
        titles[doc_id] = " ".join(words(rng, pool, rng.randint(4, 7)))
        abstracts[doc_id] = " ".join(words(rng, pool, rng.randint(15, 30)))
        n_paragraphs = rng.choices([0, 1, 2, 3, 4], weights=[15, 20, 30, 20, 15])[0]
        paragraphs[doc_id] = [
            " ".join(words(rng, pool, rng.randint(20, 40))) for _ in range(n_paragraphs)
        ]
        roll = rng.random()
        if roll < 0.08:
            years[doc_id] = ""
        elif roll < 0.52:
            years[doc_id] = f"2020-{rng.randint(1, 4):02d}-{rng.randint(1, 28):02d}"
        else:
            year = rng.randint(2003, 2019)
            years[doc_id] = str(year) if rng.random() < 0.4 else f"{year}-{rng.randint(1, 12):02d}-01"
        sources[doc_id] = rng.choices(SOURCES, weights=SOURCE_WEIGHTS)[0]

    with (out / "metadata.csv").open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["cord_uid", "title", "abstract", "publish_time", "source_x", "doi", "authors"]
        )
        for doc_id in doc_ids:
            doi = f"10.1000/{doc_id}" if rng.random() < 0.7 else ""
            authors = f"Author {doc_id.upper()}" if rng.random() < 0.8 else ""
            writer.writerow(
                [doc_id, titles[doc_id], abstracts[doc_id], years[doc_id],
                 sources[doc_id], doi, authors]
            )

    with (out / "fulltext.jsonl").open("w", encoding="utf-8") as handle:
        for doc_id in doc_ids:
            if paragraphs[doc_id]:
                handle.write(
                    json.dumps({"doc_id": doc_id, "paragraphs": paragraphs[doc_id]}) + "\n"
                )

    with (out / "topics.xml").open("w", encoding="utf-8") as handle:
        handle.write('<topics task="toy">\n')
        for number, theme in THEMES.items():
            handle.write(f'<topic number="{number}">\n')
            handle.write(f"<query>{theme['query']}</query>\n")
            handle.write(f"<question>{theme['question']}</question>\n")
            handle.write(f"<narrative>{theme['narrative']}</narrative>\n")
            handle.write("</topic>\n")
        handle.write("</topics>\n")

    # qrels from a simple keyword-coverage rule over the raw text
    qrels_lines = []
    relevant_per_topic = {n: 0 for n in THEMES}
    for number, theme in THEMES.items():
        keywords = set(theme["keywords"])
        for doc_id in doc_ids:
            text = " ".join([titles[doc_id], abstracts[doc_id], *paragraphs[doc_id]])
            present = {w for w in text.split() if w in keywords}
            if len(present) >= 4:
                grade = 2
            elif len(present) == 3:
                grade = 1
            elif len(present) >= 1:
                grade = 0
            else:
                continue
            qrels_lines.append(f"{number} 0 {doc_id} {grade}")
            if grade >= 1:
                relevant_per_topic[number] += 1
    assert all(v > 5 for v in relevant_per_topic.values()), relevant_per_topic
    (out / "qrels.txt").write_text("\n".join(qrels_lines) + "\n", encoding="utf-8")

    with (out / "ontology.jsonl").open("w", encoding="utf-8") as handle:
        for concept in ONTOLOGY_CONCEPTS:
            handle.write(json.dumps(concept) + "\n")

    with (out / "lexicon.tsv").open("w", encoding="utf-8") as handle:
        for surface, label, entity_type in LEXICON_ROWS:
            handle.write(f"{surface}\t{label}\t{entity_type}\n")

    # vectors: themed docs sit near their topic vector, others are noise
    dim = 8
    with (out / "vectors.jsonl").open("w", encoding="utf-8") as handle:
        for number in THEMES:
            base = [0.0] * dim
            base[number - 1] = 1.0
            base[5 + number % 3] = 0.5
            handle.write(json.dumps({"id": f"topic:{number}", "vector": base}) + "\n")
        for doc_id in doc_ids:
            theme = themes[doc_id]
            vector = [rng.gauss(0, 0.3) for _ in range(dim)]
            if theme is not None:
                vector[theme - 1] += 1.0
                vector[5 + theme % 3] += 0.5
            vector = [round(v, 4) for v in vector]
            handle.write(json.dumps({"id": doc_id, "vector": vector}) + "\n")

    # external runs of varying quality for the filtering recipes
    grade_of = {}
    for line in qrels_lines:
        topic_s, _, doc_id, grade_s = line.split()
        grade_of[(int(topic_s), doc_id)] = int(grade_s)
    for r in range(12):
        quality = (r + 1) / 12
        lines = []
        for number in THEMES:
            noisy = sorted(
                doc_ids,
                key=lambda d: grade_of.get((number, d), 0) * quality + rng.random() * (1.2 - quality),
                reverse=True,
            )[:100]
            for rank, doc_id in enumerate(noisy, start=1):
                score = (100 - rank + 1) * 0.5
                lines.append(f"{number} Q0 {doc_id} {rank} {score:.6f} external{r + 1:02d}")
        (out / "external_runs" / f"external{r + 1:02d}.run").write_text(
            "\n".join(lines) + "\n", encoding="utf-8"
        )

    (out / "config.yaml").write_text(
        """\
corpus:
  metadata: metadata.csv
  fulltext: fulltext.jsonl
topics: topics.xml
qrels: qrels.txt
resources:
  ontology: ontology.jsonl
  lexicon: lexicon.tsv
  vectors: vectors.jsonl
indices: [title_abstract, full_text, paragraph]
bm25: {k1: 1.2, b: 0.75, max_results: 1000}
rm3: {fb_docs: 10, fb_terms: 10, original_weight: 0.5}
rrf: {k: 60}
soboroff: {pool_depth: 100, sample_fraction: 0.2, trials: 10, select_middle: 5}
rerank: {top_n: 50, boost_year: 2020}
external_runs: external_runs
recipes: [ku_run1, ku_run2, ku_run3, fusionOfRuns, fusionOfFusions, allFiltering, soboroffFiltering]
output_dir: out
seed: 42
""",
        encoding="utf-8",
    )
    print(f"toy: 200 docs, 5 topics, {len(qrels_lines)} judgments, 12 external runs")


def make_agreement(out: Path) -> None:
    """Two assessment sets with 243 common pairs: 127 agree, 116 differ."""
    out.mkdir(parents=True, exist_ok=True)
    lines_a, lines_b = [], []
    for i in range(243):
        topic = (i % 30) + 1
        doc_id = f"q{i:03d}"
        grade_a = i % 3
        if i < 127:
            grade_b = grade_a
        else:
            grade_b = (grade_a + 1 + i % 2) % 3
        lines_a.append(f"{topic} 0 {doc_id} {grade_a}")
        lines_b.append(f"{topic} 0 {doc_id} {grade_b}")
    for i in range(55):
        lines_b.append(f"{(i % 30) + 1} 0 x{i:03d} {i % 3}")
    for i in range(20):
        lines_a.append(f"{(i % 30) + 1} 0 y{i:03d} {(i + 1) % 3}")
    (out / "qrels_expert.txt").write_text("\n".join(lines_a) + "\n", encoding="utf-8")
    (out / "qrels_team.txt").write_text("\n".join(lines_b) + "\n", encoding="utf-8")
    print("agreement: 243 common, 127 agreed, 116 disagreed")


def make_golden(out: Path) -> None:
    """A 5-topic run + qrels with reference metric values frozen from the
    independent oracle implementations."""
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(777)
    doc_ids = [f"g{i:03d}" for i in range(80)]
    qrels_lines = []
    run_lines = []
    expected: dict[str, dict] = {"per_topic": {}, "means": {}}
    per_topic_rows = []
    for topic in range(1, 6):
        judged_docs = rng.sample(doc_ids, 30)
        grades = {}
        for doc_id in judged_docs:
            grades[doc_id] = rng.choices([0, 1, 2], weights=[50, 25, 25])[0]
        if not any(g >= 1 for g in grades.values()):
            grades[judged_docs[0]] = 2
        for doc_id in sorted(grades):
            qrels_lines.append(f"{topic} 0 {doc_id} {grades[doc_id]}")
        ranking = rng.sample(doc_ids, 50)
        for rank, doc_id in enumerate(ranking, start=1):
            score = (60 - rank) * 0.25
            run_lines.append(f"{topic} Q0 {doc_id} {rank} {score:.6f} golden")
        row = oracles.oracle_topic_metrics(ranking, grades)
        expected["per_topic"][str(topic)] = {k: round(v, 6) for k, v in row.items()}
        per_topic_rows.append(row)
    means = {}
    for name in per_topic_rows[0]:
        values = [row[name] for row in per_topic_rows]
        if name.startswith("num_"):
            means[name] = round(float(sum(values)), 6)
        else:
            means[name] = round(sum(values) / len(values), 6)
    expected["means"] = means
    (out / "qrels.txt").write_text("\n".join(qrels_lines) + "\n", encoding="utf-8")
    (out / "run.txt").write_text("\n".join(run_lines) + "\n", encoding="utf-8")
    (out / "expected_metrics.json").write_text(
        json.dumps(expected, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"golden: 5 topics, MAP={means['AP']:.4f}")


def main() -> None:
    make_toy(FIXTURES / "toy")
    make_agreement(FIXTURES / "agreement")
    make_golden(FIXTURES / "golden")


if __name__ == "__main__":
    main()
