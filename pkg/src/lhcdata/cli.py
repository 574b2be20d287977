"""Command-line front end: ``lhcdata <subcommand> ...``.

Exit codes: 0 success, 1 validation failure, 2 I/O or configuration
error, 64 usage error.  Diagnostics go to stderr; tables and reports to
the paths given on the command line.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    W_SELECTION,
    apply_selection,
    compare_data_mc,
    eta_phi_image,
    fill_histogram,
    known_quantities,
    load_selection,
    normalize_to_unity,
    quantity_values,
    render_svg,
    uniform_edges,
)
from .columnar import FileFormat, all_formats, read_table, run_benchmark, write_table
from .errors import FormatError, LhcDataError, SchemaError, UnknownQuantity
from .model import events_from_table, table_from_events, validate_event, validate_table
from .toygen import (
    PROCESS_ALIASES,
    DetectorParams,
    ProcessParams,
    generate_truth,
    load_detector_config,
    load_process_config,
    smear_detector,
)

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_USAGE = 0, 1, 2, 64

log = logging.getLogger("lhcdata")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _format_arg(text: str) -> FileFormat:
    try:
        return FileFormat.parse(text)
    except LhcDataError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _output_format(args, path: Path) -> FileFormat:
    if args.format is not None:
        return args.format
    suffixes = [s.lower() for s in path.suffixes]
    comp = {".gz": "gzip", ".zst": "zstd"}.get(suffixes[-1]) if suffixes else None
    if comp:
        suffixes = suffixes[:-1]
    ext = suffixes[-1] if suffixes else ""
    kind = {".arrow": "ArrowIPC", ".feather": "ArrowIPC", ".ipc": "ArrowIPC", ".parquet": "Parquet",
            ".jsonl": "Jsonl", ".json": "Jsonl", ".csv": "Csv"}.get(ext, "ArrowIPC")
    if comp is None:
        comp = "zstd" if kind == "ArrowIPC" else "none"
    return FileFormat(kind, comp)


def _read_events(path):
    table = read_table(path)
    return events_from_table(table)


def _write_events(events, path: Path, fmt: FileFormat):
    path.parent.mkdir(parents=True, exist_ok=True)
    write_table(table_from_events(events), path, fmt)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.n < 0:
        raise UsageError("-n must be >= 0")
    if args.config:
        params = load_process_config(args.config, args.process)
    else:
        params = ProcessParams.for_process(args.process)
    events = generate_truth(args.n, params, args.seed, start=args.start)
    out = Path(args.output)
    _write_events(events, out, _output_format(args, out))
    print(f"wrote {len(events)} {params.process} truth events to {out}", file=sys.stderr)
    return EXIT_OK


def _detector(args) -> DetectorParams:
    if args.identity:
        d = DetectorParams.identity()
    elif args.detector:
        d = load_detector_config(args.detector)
    else:
        d = DetectorParams()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.efficiency is not None:
        overrides["muon_efficiency"] = args.efficiency
    if overrides:
        from dataclasses import replace

        d = replace(d, **overrides)
    return d


def cmd_smear(args) -> int:
    d = _detector(args)
    truth = _read_events(args.input)
    reco = smear_detector(truth, d)
    out = Path(args.output)
    _write_events(reco, out, _output_format(args, out))
    print(f"wrote {len(reco)} reco events to {out}", file=sys.stderr)
    return EXIT_OK


def cmd_convert(args) -> int:
    table = read_table(args.input, args.input_format)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    n = write_table(table, out, _output_format(args, out))
    print(f"wrote {table.n_rows} rows ({n} bytes) to {out}", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        table = read_table(args.input)
    except FormatError as exc:
        print(exc)
        print(f"{args.input}: unreadable", file=sys.stderr)
        return EXIT_INVALID
    report = validate_table(table)
    problems = [str(v) for v in report.violations]
    if not problems:
        try:
            events = events_from_table(table)
        except SchemaError as exc:
            problems.append(str(exc))
        else:
            for i, e in enumerate(events):
                for v in validate_event(e):
                    problems.append(f"event {i}: {v}")
    for w in report.warnings:
        print(f"warning: {w}")
    for p in problems:
        print(p)
    if problems:
        print(f"{args.input}: {len(problems)} violation(s)", file=sys.stderr)
        return EXIT_INVALID
    print(f"{args.input}: ok ({table.n_rows} events)")
    return EXIT_OK


def _spec(args):
    return load_selection(args.spec) if args.spec else W_SELECTION


def cmd_select(args) -> int:
    spec = _spec(args)
    events = _read_events(args.input)
    weights = np.full(len(events), args.weight)
    mask, flow = apply_selection(events, spec, weights)
    sys.stdout.write(flow.to_text())
    if args.cutflow:
        Path(args.cutflow).parent.mkdir(parents=True, exist_ok=True)
        Path(args.cutflow).write_text(flow.to_csv())
    if args.output:
        out = Path(args.output)
        _write_events([e for e, keep in zip(events, mask) if keep], out, _output_format(args, out))
    return EXIT_OK


def _check_quantity_arg(qid):
    if qid not in known_quantities():
        raise UsageError(f"unknown quantity {qid!r}; known: {', '.join(known_quantities())}")


def _hist_outputs(prefix: Path, hist, title, xlabel, stack=None, data=None):
    prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{prefix}.csv").write_text(hist.to_csv())
    Path(f"{prefix}.json").write_text(hist.to_json() + "\n")
    layers = stack if stack is not None else [(title or "sample", hist)]
    Path(f"{prefix}.svg").write_text(render_svg(layers, data, title=title, xlabel=xlabel))


def _quantity_hist(events, qid, edges, weight=1.0):
    vals = quantity_values(events, qid)
    picked = [float(v) for v in vals if v is not None]
    return fill_histogram(picked, np.full(len(picked), weight), edges)


def cmd_hist(args) -> int:
    _check_quantity_arg(args.quantity)
    if not args.range[1] > args.range[0] or args.bins < 1:
        raise UsageError("--range needs lo < hi and --bins >= 1")
    events = _read_events(args.input)
    if args.spec:
        mask, _ = apply_selection(events, load_selection(args.spec))
        events = [e for e, keep in zip(events, mask) if keep]
    h = _quantity_hist(events, args.quantity, uniform_edges(args.bins, *args.range), args.weight)
    if args.normalize:
        h = normalize_to_unity(h)
    _hist_outputs(Path(args.output), h, args.quantity, args.quantity)
    return EXIT_OK


def cmd_image(args) -> int:
    if args.n_eta < 1 or args.n_phi < 1:
        raise UsageError("--n-eta and --n-phi must be positive")
    events = _read_events(args.input)
    if not 0 <= args.event < len(events):
        raise UsageError(f"--event must lie in [0, {len(events)})")
    img = eta_phi_image(events[args.event], args.collection, args.n_eta, args.n_phi,
                        tuple(args.eta_range), (-math.pi, math.pi))
    prefix = Path(args.output)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{prefix}.pgm").write_bytes(img.to_pgm())
    Path(f"{prefix}.csv").write_text(img.to_csv())
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.repetitions < 3:
        raise UsageError("--repetitions must be >= 3")
    if args.input:
        table = read_table(args.input)
    else:
        events = smear_detector(generate_truth(args.n, ProcessParams.for_process(args.process), args.seed),
                                DetectorParams(seed=args.seed))
        table = table_from_events(events)
    matrix = args.formats or all_formats()
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    report = run_benchmark(table, matrix, args.repetitions, out / "scratch")
    (out / "scratch").rmdir()
    (out / "bench.csv").write_text(report.to_csv())
    (out / "bench.json").write_text(report.to_json() + "\n")
    sys.stdout.write(report.to_csv())
    failed = [r for r in report.rows if not r.ok]
    for r in failed:
        print(f"{r.format}+{r.compression} failed: {r.error}", file=sys.stderr)
    return EXIT_OK


W_PANELS = (
    ("muon_pt", "leading_muon_pt", 40, (0.0, 100.0), "muon pT [GeV]"),
    ("met", "met_pt", 40, (0.0, 100.0), "MET [GeV]"),
    ("reliso", "leading_muon_reliso", 40, (0.0, 0.2), "TrkIso03 / pT"),
    ("eta", "leading_muon_eta", 30, (-3.0, 3.0), "muon eta"),
)


def cmd_analyze_w(args) -> int:
    for _, w in args.background:
        try:
            if not float(w) > 0:
                raise ValueError
        except ValueError:
            raise UsageError(f"background weight {w!r} must be a positive number") from None
    spec = _spec(args)
    samples = [("signal", args.signal, args.signal_weight)]
    samples += [(Path(p).stem, p, float(w)) for p, w in args.background]
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    selected = []
    summary = {"selection": spec.to_text().splitlines(), "samples": []}
    for name, path, weight in samples:
        events = _read_events(path)
        mask, flow = apply_selection(events, spec, np.full(len(events), weight))
        (out / f"cutflow_{name}.csv").write_text(flow.to_csv())
        selected.append((name, [e for e, keep in zip(events, mask) if keep], weight))
        summary["samples"].append({"name": name, "path": str(path), "weight": weight,
                                   "n_events": flow.n_events, "passed": flow.events_passed,
                                   "weighted_passed": flow.weighted_passed})
    data_events = None
    if args.data:
        events = _read_events(args.data)
        mask, flow = apply_selection(events, spec)
        (out / "cutflow_data.csv").write_text(flow.to_csv())
        data_events = [e for e, keep in zip(events, mask) if keep]
        summary["data"] = {"path": str(args.data), "n_events": flow.n_events, "passed": flow.events_passed}
    summary["panels"] = {}
    for label, qid, bins, rng, xlabel in W_PANELS:
        edges = uniform_edges(bins, *rng)
        mc = [(n, _quantity_hist(ev, qid, edges), w) for n, ev, w in selected]
        stack = [(n, h.scaled(w)) for n, h, w in mc]
        data_h = _quantity_hist(data_events, qid, edges) if data_events is not None else None
        prefix = out / f"hist_{label}"
        total = stack[0][1]
        for _, h in stack[1:]:
            total = total + h
        Path(f"{prefix}.csv").write_text(total.to_csv())
        Path(f"{prefix}.svg").write_text(render_svg(stack, ("data", data_h) if data_h else None,
                                                    title=label, xlabel=xlabel))
        panel = {"mc": {n: h.to_dict() for n, h in stack}}
        if data_h is not None:
            rep = compare_data_mc(data_h, [(h, w) for _, h, w in mc])
            panel["comparison"] = rep.to_dict()
        Path(f"{prefix}.json").write_text(json.dumps(panel, indent=1) + "\n")
        if data_h is not None:
            summary["panels"][label] = {"chi2": rep.chi2, "ndf": rep.ndf}
    (out / "summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    for s in summary["samples"]:
        print(f"{s['name']:<20} passed {s['passed']:>8d} / {s['n_events']:<8d} weighted {s['weighted_passed']:.6g}")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lhcdata", description="Toy collider event data: generate, smear, convert, analyse.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more log output on stderr")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def io_args(sp, need_output=True):
        sp.add_argument("-i", "--input", required=True, help="input table (format auto-detected)")
        if need_output:
            sp.add_argument("-o", "--output", required=True, help="output table path")
        sp.add_argument("--format", type=_format_arg, default=None,
                        help="output format, e.g. arrow+zstd, parquet+gzip, jsonl, csv+zstd "
                             "(default: from the output extension, else arrow+zstd)")

    g = sub.add_parser("generate", help="generate truth-level toy events")
    g.add_argument("--process", required=True, choices=sorted(PROCESS_ALIASES) + sorted(PROCESS_ALIASES.values()),
                   help="process to simulate")
    g.add_argument("-n", type=int, required=True, help="number of events")
    g.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    g.add_argument("--start", type=int, default=0, help="index of the first event (default 0)")
    g.add_argument("--config", help="process key = value config file")
    g.add_argument("-o", "--output", required=True, help="output table path")
    g.add_argument("--format", type=_format_arg, default=None, help="output format (see convert)")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("smear", help="simulate the detector response")
    io_args(s)
    s.add_argument("--detector", help="detector key = value config file")
    s.add_argument("--identity", action="store_true", help="perfect detector")
    s.add_argument("--seed", type=int, default=None, help="override the detector seed")
    s.add_argument("--efficiency", type=float, default=None, help="override the muon efficiency")
    s.set_defaults(func=cmd_smear)

    c = sub.add_parser("convert", help="convert between table formats")
    io_args(c)
    c.add_argument("--input-format", type=_format_arg, default=None, help="skip format auto-detection")
    c.set_defaults(func=cmd_convert)

    v = sub.add_parser("validate", help="check a table against the event schema")
    v.add_argument("-i", "--input", required=True, help="input table")
    v.set_defaults(func=cmd_validate)

    se = sub.add_parser("select", help="apply a selection and print the cutflow")
    io_args(se, need_output=False)
    se.add_argument("-o", "--output", help="write the selected events here")
    se.add_argument("--spec", help="selection file (default: the W selection)")
    se.add_argument("--weight", type=float, default=1.0, help="per-event weight (default 1)")
    se.add_argument("--cutflow", help="write the cutflow as CSV")
    se.set_defaults(func=cmd_select)

    h = sub.add_parser("hist", help="histogram one quantity")
    h.add_argument("-i", "--input", required=True, help="input table")
    h.add_argument("-o", "--output", required=True, help="output prefix (.csv, .json, .svg are added)")
    h.add_argument("--quantity", required=True, help="quantity id, e.g. leading_muon_pt")
    h.add_argument("--bins", type=int, default=50, help="number of bins (default 50)")
    h.add_argument("--range", type=float, nargs=2, metavar=("LO", "HI"), default=(0.0, 100.0),
                   help="histogram range (default 0 100)")
    h.add_argument("--weight", type=float, default=1.0, help="per-event weight (default 1)")
    h.add_argument("--spec", help="apply this selection first")
    h.add_argument("--normalize", action="store_true", help="normalize the area to 1")
    h.set_defaults(func=cmd_hist)

    im = sub.add_parser("image", help="eta-phi pt image of one event")
    im.add_argument("-i", "--input", required=True, help="input table")
    im.add_argument("-o", "--output", required=True, help="output prefix (.pgm and .csv are added)")
    im.add_argument("--event", type=int, default=0, help="event row (default 0)")
    im.add_argument("--collection", default="pf", help="pf, jets, muons, ... (default pf)")
    im.add_argument("--n-eta", type=int, default=32, help="eta bins (default 32)")
    im.add_argument("--n-phi", type=int, default=32, help="phi bins (default 32)")
    im.add_argument("--eta-range", type=float, nargs=2, default=(-4.0, 4.0), metavar=("LO", "HI"),
                    help="eta range (default -4 4)")
    im.set_defaults(func=cmd_image)

    b = sub.add_parser("bench", help="benchmark formats and compressions")
    b.add_argument("-i", "--input", help="table to benchmark (default: generate toy events)")
    b.add_argument("-n", type=int, default=10000, help="toy events when no input is given")
    b.add_argument("--process", default="z-mumu", choices=sorted(PROCESS_ALIASES), help="toy process")
    b.add_argument("--seed", type=int, default=0, help="toy seed")
    b.add_argument("--formats", type=_format_arg, nargs="+", help="combinations (default: all supported)")
    b.add_argument("--repetitions", type=int, default=5, help="timed repetitions, >= 3 (default 5)")
    b.add_argument("-o", "--output", required=True, help="output directory for bench.csv/bench.json")
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("analyze-w", help="W selection, comparison histograms and summary")
    a.add_argument("--signal", required=True, help="signal sample table")
    a.add_argument("--signal-weight", type=float, default=1.0, help="signal weight (default 1)")
    a.add_argument("--background", nargs=2, action="append", default=[], metavar=("PATH", "WEIGHT"),
                   help="background table and its weight; repeatable")
    a.add_argument("--data", help="data table to compare against")
    a.add_argument("--spec", help="selection file (default: the W selection)")
    a.add_argument("-o", "--output", required=True, help="output directory")
    a.set_defaults(func=cmd_analyze_w)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --help, --version and usage errors; hand the code back instead of exiting
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"lhcdata {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnknownQuantity as exc:
        print(f"lhcdata {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (LhcDataError, OSError) as exc:
        print(f"lhcdata {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
