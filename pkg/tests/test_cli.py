import json
import math

import pytest

from lhcdata.analysis import W_SELECTION, apply_selection
from lhcdata.cli import EXIT_INVALID, EXIT_IO, EXIT_USAGE, build_parser, main
from lhcdata.columnar import read_table
from lhcdata.model import events_from_table
from lhcdata.toygen import DetectorParams, format_config

SUBCOMMANDS = ["generate", "smear", "convert", "validate", "select", "hist", "image", "bench", "analyze-w"]


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def sample(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run("generate", "--process", "w-munu", "-n", 150, "--seed", 5, "-o", d / "w_truth.arrow") == 0
    assert run("smear", "-i", d / "w_truth.arrow", "-o", d / "w.arrow", "--seed", 6) == 0
    assert run("generate", "--process", "multijet", "-n", 150, "--seed", 7, "-o", d / "mj_truth.arrow") == 0
    assert run("smear", "-i", d / "mj_truth.arrow", "-o", d / "mj.arrow", "--seed", 8) == 0
    return d


@pytest.mark.parametrize("cmd", [None] + SUBCOMMANDS)
def test_help_exits_zero(cmd, capsys):
    assert main(["--help"] if cmd is None else [cmd, "--help"]) == 0
    assert "usage" in capsys.readouterr().out


def test_usage_errors(tmp_path, capsys):
    assert run("generate", "--process", "higgs", "-n", 3, "-o", tmp_path / "x.arrow") == EXIT_USAGE
    assert run("generate", "--process", "z-mumu", "-n", -1, "-o", tmp_path / "x.arrow") == EXIT_USAGE
    assert run("frobnicate") == EXIT_USAGE
    assert run("smear", "-i", tmp_path / "missing.arrow", "-o", tmp_path / "y.arrow") == EXIT_IO
    capsys.readouterr()


def test_generate_deterministic_and_empty(tmp_path):
    for name in ("a", "b"):
        assert run("generate", "--process", "z-mumu", "-n", 20, "--seed", 3, "-o", tmp_path / f"{name}.parquet") == 0
    assert (tmp_path / "a.parquet").read_bytes() == (tmp_path / "b.parquet").read_bytes()
    assert run("generate", "--process", "z-mumu", "-n", 0, "-o", tmp_path / "e.jsonl") == 0
    assert read_table(tmp_path / "e.jsonl").n_rows == 0


def test_identity_smear_and_zero_efficiency(tmp_path):
    run("generate", "--process", "z-mumu", "-n", 10, "--seed", 1, "-o", tmp_path / "t.arrow")
    assert run("smear", "-i", tmp_path / "t.arrow", "-o", tmp_path / "r.arrow", "--identity") == 0
    truth = events_from_table(read_table(tmp_path / "t.arrow"))
    reco = events_from_table(read_table(tmp_path / "r.arrow"))
    for t, r in zip(truth, reco):
        mus = sorted((p.pt for p in t.mc_truth if abs(p.pdg_id) == 13), reverse=True)
        assert sorted((m.pt for m in r.muons), reverse=True) == mus
    (tmp_path / "nofakes.cfg").write_text(format_config(DetectorParams(fake_soft_rate=0.0)))
    assert run("smear", "-i", tmp_path / "t.arrow", "-o", tmp_path / "z.arrow", "--efficiency", 0,
               "--detector", tmp_path / "nofakes.cfg") == 0
    assert all(not e.muons for e in events_from_table(read_table(tmp_path / "z.arrow")))


def test_convert_validate(sample, tmp_path, capsys):
    src = read_table(sample / "w.arrow")
    for out in ("w.parquet", "w.jsonl.gz", "w.csv"):
        assert run("convert", "-i", sample / "w.arrow", "-o", tmp_path / out) == 0
        assert read_table(tmp_path / out) == src
        assert run("validate", "-i", tmp_path / out) == 0
    assert run("convert", "-i", sample / "w.arrow", "-o", tmp_path / "w.bin", "--format", "csv+zstd") == 0
    assert read_table(tmp_path / "w.bin") == src
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"nMuon": 1, "vecMuon_PT": [1.0, 2.0]}\n')
    assert run("validate", "-i", bad) == EXIT_INVALID
    trunc = tmp_path / "trunc.parquet"
    trunc.write_bytes((tmp_path / "w.parquet").read_bytes()[:500])
    assert run("validate", "-i", trunc) == EXIT_INVALID
    capsys.readouterr()


def test_select_cutflow(sample, tmp_path, capsys):
    spec = tmp_path / "w.cuts"
    spec.write_text(W_SELECTION.to_text())
    assert run("select", "-i", sample / "w.arrow", "--spec", spec, "--cutflow", tmp_path / "flow.csv",
               "-o", tmp_path / "sel.arrow") == 0
    rows = [r.split(",") for r in (tmp_path / "flow.csv").read_text().splitlines()[1:]]
    assert [r[0] for r in rows] == ["one_muon", "muon_pt", "met", "isolation"]
    assert rows[0][1] == "150"
    assert all(a[2] == b[1] for a, b in zip(rows, rows[1:]))
    assert read_table(tmp_path / "sel.arrow").n_rows == int(rows[-1][2])
    assert "isolation" in capsys.readouterr().out


def test_hist_outputs(sample, tmp_path):
    args = ("hist", "-i", sample / "w.arrow", "--quantity", "leading_muon_pt", "--bins", 10, "--range", 0, 100)
    assert run(*args, "-o", tmp_path / "h1") == 0
    assert run(*args, "-o", tmp_path / "h2") == 0
    for ext in ("csv", "json", "svg"):
        assert (tmp_path / f"h1.{ext}").read_bytes() == (tmp_path / f"h2.{ext}").read_bytes()
    h = json.loads((tmp_path / "h1.json").read_text())
    events = events_from_table(read_table(sample / "w.arrow"))
    n_with_muon = sum(1 for e in events if e.muons)
    assert sum(h["contents"]) + h["underflow"] + h["overflow"] == n_with_muon
    assert run(*args[:-1], -5, "-o", tmp_path / "h3") == EXIT_USAGE
    assert run("hist", "-i", sample / "w.arrow", "--quantity", "bogus", "-o", tmp_path / "h4") == EXIT_USAGE
    assert run(*args, "--normalize", "-o", tmp_path / "hn") == 0
    hn = json.loads((tmp_path / "hn.json").read_text())
    assert math.isclose(sum(hn["contents"]) * 10.0, 1.0, rel_tol=1e-12)


def test_image(sample, tmp_path):
    assert run("image", "-i", sample / "w.arrow", "--event", 2, "--n-eta", 16, "--n-phi", 8,
               "-o", tmp_path / "img") == 0
    assert (tmp_path / "img.pgm").read_bytes().startswith(b"P5\n16 8\n65535\n")
    assert len((tmp_path / "img.csv").read_text().splitlines()) == 16
    assert run("image", "-i", sample / "w.arrow", "--event", 10_000, "-o", tmp_path / "x") == EXIT_USAGE


def test_bench(tmp_path, capsys):
    fmts = ["arrow", "arrow+zstd", "parquet+zstd", "csv"]
    assert run("bench", "-n", 50, "--repetitions", 3, "--formats", *fmts, "-o", tmp_path / "b") == 0
    lines = (tmp_path / "b" / "bench.csv").read_text().splitlines()
    assert len(lines) == 5
    assert json.loads((tmp_path / "b" / "bench.json").read_text())
    assert sorted(p.name for p in (tmp_path / "b").iterdir()) == ["bench.csv", "bench.json"]
    assert run("bench", "-n", 10, "--repetitions", 2, "-o", tmp_path / "c") == EXIT_USAGE
    capsys.readouterr()


def test_analyze_w(sample, tmp_path, capsys):
    out = tmp_path / "aw"
    assert run("analyze-w", "--signal", sample / "w.arrow", "--background", sample / "mj.arrow", 0.5,
               "--data", sample / "w.arrow", "-o", out) == 0
    summary = json.loads((out / "summary.json").read_text())
    sig, bkg = summary["samples"]
    mask, flow = apply_selection(events_from_table(read_table(sample / "w.arrow")), W_SELECTION)
    assert sig["passed"] == flow.events_passed == summary["data"]["passed"]
    _, bflow = apply_selection(events_from_table(read_table(sample / "mj.arrow")), W_SELECTION, [0.5] * 150)
    assert bkg["weight"] == 0.5 and bkg["weighted_passed"] == bflow.weighted_passed
    for name in ("muon_pt", "met", "reliso", "eta"):
        for ext in ("csv", "svg", "json"):
            assert (out / f"hist_{name}.{ext}").exists()
    assert run("analyze-w", "--signal", sample / "w.arrow", "--background", sample / "mj.arrow", "-o", out) \
        == EXIT_USAGE
    assert run("analyze-w", "--signal", sample / "w.arrow", "--background", sample / "mj.arrow", "heavy",
               "-o", out) == EXIT_USAGE
    capsys.readouterr()


def test_analyze_w_signal_only_ratio_is_one(sample, tmp_path):
    out = tmp_path / "sig"
    assert run("analyze-w", "--signal", sample / "w.arrow", "--data", sample / "w.arrow", "-o", out) == 0
    panel = json.loads((out / "hist_met.json").read_text())
    ratios = [r for r in panel["comparison"]["ratio"] if r is not None]
    assert ratios and all(r == 1.0 for r in ratios)
    assert panel["comparison"]["chi2"] == 0.0


def test_parser_lists_all_subcommands():
    text = build_parser().format_help()
    for cmd in SUBCOMMANDS:
        assert cmd in text
