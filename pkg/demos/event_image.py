"""Cluster one toy multijet event into anti-kT jets and write its eta-phi image.

    python3 demos/event_image.py [out_dir]
"""

import sys
from pathlib import Path

from lhcdata.analysis import eta_phi_image, in_range_pt
from lhcdata.jetclust import ClusterConfig, antikt_cluster
from lhcdata.toygen import DetectorParams, ProcessParams, generate_truth, smear_detector

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)

(event,) = smear_detector(generate_truth(1, ProcessParams.for_process("multijet"), seed=5),
                          DetectorParams(seed=6))
pf = [(p.pt, p.eta, p.phi, p.mass) for p in event.pf]
jets = antikt_cluster(pf, ClusterConfig(r_param=0.4, min_jet_pt=20.0))
print(f"{len(pf)} PF objects -> {len(jets)} jets above 20 GeV")
for j in jets:
    print(f"  pt {j.pt:7.1f}  eta {j.eta:+.2f}  phi {j.phi:+.2f}  constituents {len(j.constituent_indices)}")

img = eta_phi_image(event, "pf", 64, 64)
print(f"image sum {img.total():.3f} GeV, in-range PF pt {in_range_pt(event):.3f} GeV")
(out / "event.pgm").write_bytes(img.to_pgm())
print(f"wrote {out / 'event.pgm'}")
