import gzip
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lhcdata.columnar import (
    BENCH_CSV_COLUMNS,
    SUPPORT,
    FileFormat,
    all_formats,
    detect_format,
    ingest_jsonl,
    read_table,
    run_benchmark,
    write_table,
)
from lhcdata.errors import DomainError, FormatError, IoError, ParseError, UnsupportedCombination
from lhcdata.model import EventTable, RaggedArray, events_from_table, table_from_events, validate_table


@pytest.fixture(scope="module")
def table(mixed_reco):
    return table_from_events(mixed_reco)


def _text_kind(fmt):
    return fmt.kind in ("Jsonl", "Csv")


@pytest.mark.parametrize("fmt", all_formats(), ids=str)
def test_round_trip_every_format(table, fmt, tmp_path):
    path = tmp_path / f"t{fmt.suffix}"
    n = write_table(table, path, fmt)
    assert n == path.stat().st_size > 0
    back = read_table(path)
    if _text_kind(fmt):
        assert back.equals(table, rel_tol=1e-12)
    assert back == table  # repr() floats survive decimal text exactly
    assert validate_table(back).ok
    assert back.warnings == []


def test_events_survive_parquet(mixed_reco, tmp_path):
    path = tmp_path / "e.parquet"
    write_table(table_from_events(mixed_reco), path, FileFormat("Parquet", "zstd"))
    assert events_from_table(read_table(path)) == mixed_reco


@pytest.mark.parametrize("fmt", [FileFormat("ArrowIPC", "none"), FileFormat("Parquet", "none"),
                                 FileFormat("Jsonl", "none"), FileFormat("Csv", "gzip")], ids=str)
def test_empty_table(fmt, tmp_path):
    path = tmp_path / f"empty{fmt.suffix}"
    write_table(table_from_events([]), path, fmt)
    back = read_table(path)
    assert back.n_rows == 0
    assert back == table_from_events([])


def test_cross_format_agreement(table, tmp_path):
    a, b = tmp_path / "a.arrow", tmp_path / "b.parquet"
    write_table(table, a, FileFormat("ArrowIPC", "lz4"))
    write_table(table, b, FileFormat("Parquet", "snappy"))
    assert read_table(a) == read_table(b)


def test_support_matrix():
    with pytest.raises(UnsupportedCombination):
        FileFormat("ArrowIPC", "brotli")
    with pytest.raises(UnsupportedCombination):
        FileFormat("Csv", "snappy")
    with pytest.raises(UnsupportedCombination):
        FileFormat("Root", "none")
    assert SUPPORT["ArrowIPC"] == ("none", "zstd", "lz4")
    assert len(all_formats()) == 14
    assert FileFormat.parse("parquet+gzip") == FileFormat("Parquet", "gzip")
    assert FileFormat.parse("feather") == FileFormat("ArrowIPC", "zstd")
    assert FileFormat() == FileFormat("ArrowIPC", "zstd")


@pytest.mark.parametrize("fmt", all_formats(), ids=str)
def test_magic_detection_ignores_extension(table, fmt, tmp_path):
    path = tmp_path / "noext.bin"
    write_table(table.take([0, 1]), path, fmt)
    if fmt.kind in ("ArrowIPC", "Parquet") or fmt.compression == "none" and fmt.kind == "Jsonl":
        assert detect_format(path) == fmt.kind
    assert read_table(path, fmt) == table.take([0, 1])


@pytest.mark.parametrize("fmt", all_formats(), ids=str)
def test_truncated_file_raises_format_error(table, fmt, tmp_path):
    path = tmp_path / f"cut{fmt.suffix}"
    write_table(table, path, fmt)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) * 2 // 3])
    with pytest.raises(FormatError) as exc:
        read_table(path)
    assert exc.value.offset is not None


def test_missing_file(tmp_path):
    with pytest.raises(IoError):
        read_table(tmp_path / "nope.arrow")
    with pytest.raises(IoError):
        write_table(table_from_events([]), tmp_path / "no" / "dir" / "x.arrow")


def test_corrupt_jsonl_reports_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"nMuon": 0}\n{"nMuon": \n')
    with pytest.raises(ParseError) as exc:
        read_table(path)
    assert exc.value.line == 2


def test_hand_written_jsonl_fixture(tmp_path):
    path = tmp_path / "two.jsonl"
    rows = [
        {"nEvent": 1, "nMuon": 3, "vecMuon_PT": [70.2, 3.0, 1.2], "vecMuon_Eta": [-2.4, 0.1, -1.9],
         "vecMuon_Phi": [-2.8, 0.5, -2.0], "vecMuon_Q": [-1.0, 1.0, 1.0], "nPF": 1,
         "vecPF_PT": [0.4], "vecPF_Eta": [-1.3], "vecPF_Phi": [1.2]},
        {"nEvent": 2, "nMuon": 4, "vecMuon_PT": [8.3, 5.0, 19.7, 2.0], "vecMuon_Eta": [1.53, 0.0, 0.9, 0.2],
         "vecMuon_Phi": [-0.0, 1.0, 1.0, 2.0], "vecMuon_Q": [1.0, -1.0, -1.0, 1.0], "nPF": 2,
         "vecPF_PT": [2.8, 0.2], "vecPF_Eta": [-1.2, -3.6], "vecPF_Phi": [-1.3, -0.4], "myExtra": 7},
    ]
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    t = ingest_jsonl(path)
    assert t["nMuon"].tolist() == [3, 4]
    assert t["nPF"].tolist() == [1, 2]
    assert t["vecMuon_StaPt"].lengths().tolist() == [3, 4]
    assert "myExtra" in t
    assert any("myExtra" in w for w in t.warnings)
    assert any("vecMuon_StaPt" in w for w in t.warnings)
    ev = events_from_table(EventTable({k: v for k, v in t.columns.items() if k != "myExtra"}, t.n_rows))
    assert max(m.pt for m in ev[1].muons) == 19.7


def test_ingest_empty_and_mismatch(tmp_path):
    empty = tmp_path / "e.jsonl"
    empty.write_text("")
    assert ingest_jsonl(empty).n_rows == 0
    bad = tmp_path / "b.jsonl"
    bad.write_text('{"nMuon": 0}\n{"nMuon": 2, "vecMuon_PT": [1.0, 2.0, 3.0]}\n')
    with pytest.raises(ParseError) as exc:
        ingest_jsonl(bad)
    assert exc.value.line == 2
    assert "vecMuon_PT" in str(exc.value)


def test_csv_cells_are_quoted_json(table, tmp_path):
    path = tmp_path / "t.csv"
    write_table(table.take([0]), path, FileFormat("Csv", "none"))
    text = path.read_text()
    assert text.endswith("\n")
    assert '"[' in text


def test_gzip_text_is_gzip(table, tmp_path):
    path = tmp_path / "t.jsonl.gz"
    write_table(table.take([0]), path, FileFormat("Jsonl", "gzip"))
    assert json.loads(gzip.decompress(path.read_bytes()).splitlines()[0])["nEvent"] == table["nEvent"][0]


def test_unknown_columns_survive_binary(table, tmp_path):
    cols = dict(table.columns)
    cols["vecMuon_Custom"] = RaggedArray(table["vecMuon_PT"].offsets, table["vecMuon_PT"].values * 2)
    t = EventTable(cols, table.n_rows)
    path = tmp_path / "x.arrow"
    write_table(t, path)
    back = read_table(path)
    assert back == t
    assert any("vecMuon_Custom" in w for w in back.warnings)


floats = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=40, deadline=None)
@given(rows=st.lists(st.lists(floats, max_size=4), max_size=6), kind=st.sampled_from(["Jsonl", "Csv"]))
def test_text_float_round_trip(rows, kind, tmp_path_factory):
    path = tmp_path_factory.mktemp("f") / f"x.{kind.lower()}"
    t = EventTable({"nThing": np.array([len(r) for r in rows], dtype=np.int64),
                    "vecThing_V": RaggedArray.from_lists(rows, dtype=np.float64)}, len(rows))
    write_table(t, path, FileFormat(kind, "none"))
    back = read_table(path)
    if rows:
        assert back["vecThing_V"].to_lists() == [[float(x) for x in r] for r in rows]


class TestBenchmark:
    def test_rows_and_serialisation(self, table, tmp_path):
        matrix = [FileFormat("ArrowIPC", "none"), FileFormat("Jsonl", "gzip")]
        rep = run_benchmark(table, matrix, 3, tmp_path)
        assert [r.ok for r in rep.rows] == [True, True]
        for r in rep.rows:
            assert r.file_bytes > 0 and r.write_ms > 0 and r.read_ms > 0
            assert len(r.write_ms_raw) == 3 and r.write_ms == pytest.approx(np.median(r.write_ms_raw))
        assert list(tmp_path.iterdir()) == []
        lines = rep.to_csv().splitlines()
        assert lines[0] == ",".join(BENCH_CSV_COLUMNS)
        assert len(lines) == 3
        assert json.loads(rep.to_json())["rows"][0]["format"] == "ArrowIPC"

    def test_repetitions_precondition(self, table, tmp_path):
        with pytest.raises(DomainError):
            run_benchmark(table, [FileFormat()], 1, tmp_path)

    def test_failed_row_does_not_abort(self, table, tmp_path):
        bad = EventTable({"nThing": np.zeros(2, dtype=np.int64),
                          "vecThing_V": RaggedArray.from_lists([[object()], []], dtype=object)}, 2)
        rep = run_benchmark(bad, [FileFormat("ArrowIPC", "none"), FileFormat("Jsonl", "none")], 3, tmp_path)
        assert not rep.rows[0].ok and rep.rows[0].error
        assert len(rep.rows) == 2

    def test_redundant_table_compresses(self, tmp_path):
        n = 2000
        t = EventTable({"nThing": np.full(n, 3, dtype=np.int64),
                        "vecThing_V": RaggedArray.from_lists([[1.0, 2.0, 3.0]] * n)}, n)
        for kind in ("ArrowIPC", "Parquet", "Jsonl", "Csv"):
            sizes = {c: write_table(t, tmp_path / f"r{c}", FileFormat(kind, c)) for c in SUPPORT[kind]}
            assert all(sizes[c] <= sizes["none"] for c in sizes), (kind, sizes)
