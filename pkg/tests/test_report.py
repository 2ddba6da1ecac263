from cordsearch.corpus import DocumentRecord
from cordsearch.eval import Qrels, evaluate_all, source_stats
from cordsearch.report import (
    metric_table,
    source_table,
    write_metric_report,
    write_source_stats,
)
from cordsearch.runs import Run, from_ranked


def _report():
    run = Run("t", from_ranked(1, [("a", "a", 2.0), ("b", "b", 1.0)], "t"))
    qrels = Qrels({1: {"a": 2, "b": 0, "c": 1}})
    return evaluate_all(run, qrels)


def _stats():
    records = {
        "a": DocumentRecord("a", source="PMC"),
        "b": DocumentRecord("b", source="Elsevier"),
    }
    return source_stats(Qrels({1: {"a": 2, "b": 1}}), records)


def test_metric_table_shape():
    table = metric_table(_report())
    lines = table.splitlines()
    assert lines[0].startswith("topic")
    assert "P@5" in lines[0] and "Bpref" in lines[0] and "AP" in lines[0]
    assert lines[1].startswith("1")
    assert lines[-1].startswith("all")


def test_metric_report_files(tmp_path):
    paths = write_metric_report(_report(), tmp_path, "m")
    assert [p.name for p in paths] == ["m.txt", "m.csv", "m.png"]
    for path in paths:
        assert path.is_file() and path.stat().st_size > 0
    header = (tmp_path / "m.csv").read_text().splitlines()[0]
    assert header.startswith("topic,P@5")
    assert (tmp_path / "m.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_metric_report_deterministic_bytes(tmp_path):
    first = tmp_path / "a"
    second = tmp_path / "b"
    write_metric_report(_report(), first, "m")
    write_metric_report(_report(), second, "m")
    for name in ("m.txt", "m.csv", "m.png"):
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_source_table_shape():
    table = source_table(_stats())
    assert "Elsevier" in table
    assert "Total" in table.splitlines()[-1]


def test_source_stats_files_deterministic(tmp_path):
    first = write_source_stats(_stats(), tmp_path / "a", "s")
    second = write_source_stats(_stats(), tmp_path / "b", "s")
    for p1, p2 in zip(first, second):
        assert p1.read_bytes() == p2.read_bytes()
