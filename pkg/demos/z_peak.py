"""Generate toy Z -> mu mu events, smear them and look at the dimuon mass.

    python3 demos/z_peak.py [n_events] [out_dir]
"""

import sys
from pathlib import Path

import numpy as np

from lhcdata.analysis import histogram_quantity, multiplicity_histogram, render_svg, uniform_edges
from lhcdata.toygen import Z_MASS, DetectorParams, ProcessParams, generate_truth, smear_detector

n = int(sys.argv[1]) if len(sys.argv) > 1 else 5000
out = Path(sys.argv[2] if len(sys.argv) > 2 else "demo_out")
out.mkdir(exist_ok=True)

truth = generate_truth(n, ProcessParams.for_process("z-mumu"), seed=1)
reco = smear_detector(truth, DetectorParams(seed=2))

edges = uniform_edges(60, 60.0, 120.0)
h_truth = histogram_quantity(truth, "truth_dimuon_mass", edges)
h_reco = histogram_quantity(reco, "dimuon_mass", edges)
print(f"truth peak bin centre {h_truth.centers[np.argmax(h_truth.contents)]:.1f} GeV (Z mass {Z_MASS})")
print(f"reco  peak bin centre {h_reco.centers[np.argmax(h_reco.contents)]:.1f} GeV")

mult = multiplicity_histogram(reco, "muons", 5.0)
print("muons above 5 GeV per event:", dict(zip(mult.centers.astype(int).tolist(), mult.contents.astype(int).tolist())))

(out / "z_mass.svg").write_text(render_svg([("reco", h_reco)], data=("truth", h_truth),
                                           title="dimuon mass", xlabel="M(mu mu) [GeV]"))
print(f"wrote {out / 'z_mass.svg'}")
