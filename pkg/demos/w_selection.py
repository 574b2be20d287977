"""W -> mu nu against multijet background with the standard W cuts.

Prints both cutflows and writes stacked MET / muon pt plots with a toy
"data" sample drawn from the same generators.

    python3 demos/w_selection.py [n_events] [out_dir]
"""

import sys
from pathlib import Path

from lhcdata.analysis import (
    W_SELECTION,
    apply_selection,
    compare_data_mc,
    histogram_quantity,
    render_svg,
    uniform_edges,
)
from lhcdata.toygen import DetectorParams, ProcessParams, generate_truth, smear_detector

n = int(sys.argv[1]) if len(sys.argv) > 1 else 3000
out = Path(sys.argv[2] if len(sys.argv) > 2 else "demo_out")
out.mkdir(exist_ok=True)
det = DetectorParams(seed=7)


def sample(process, seed, k=n):
    return smear_detector(generate_truth(k, ProcessParams.for_process(process), seed), det)


w, mj = sample("w-munu", 1), sample("multijet", 2)
# pseudo-data: 70 % W, 30 % multijet, independent seeds
data = sample("w-munu", 3, int(0.7 * n)) + sample("multijet", 4, int(0.3 * n))

selected = {}
for name, events, weight in (("W", w, 0.7), ("multijet", mj, 0.3), ("data", data, 1.0)):
    mask, flow = apply_selection(events, W_SELECTION, [weight] * len(events))
    print(f"--- {name}")
    print(flow.to_text(), end="")
    selected[name] = [e for e, keep in zip(events, mask) if keep]

for qid, lo, hi in (("met_pt", 0.0, 100.0), ("leading_muon_pt", 0.0, 100.0)):
    edges = uniform_edges(25, lo, hi)
    hw = histogram_quantity(selected["W"], qid, edges)
    hmj = histogram_quantity(selected["multijet"], qid, edges)
    hd = histogram_quantity(selected["data"], qid, edges)
    rep = compare_data_mc(hd, [(hw, 0.7), (hmj, 0.3)])
    print(f"{qid}: chi2/ndf = {rep.chi2:.1f}/{rep.ndf}")
    svg = render_svg([("W", hw.scaled(0.7)), ("multijet", hmj.scaled(0.3))], data=("data", hd),
                     title=qid, xlabel=f"{qid} [GeV]")
    (out / f"w_{qid}.svg").write_text(svg)
