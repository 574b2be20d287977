"""Registry of per-event quantities usable in cuts and histograms.

``evaluate_quantity(e, qid)`` returns a number (or bool for triggers), or
``None`` when the quantity is absent, e.g. ``leading_muon_pt`` in an event
without muons.  "Leading" means highest pt; equal pt goes to the lower
index.
"""

from __future__ import annotations

import math
from typing import Callable

from ..errors import UnknownQuantity
from ..kinematics import from_pt_eta_phi_mass, invariant_mass, relative_isolation
from ..model import Event, TRIGGERS

ABSENT = None
MUON_MASS = 0.105


def _ranked(objs):
    # stable: equal pt keeps the lower index first
    return sorted(range(len(objs)), key=lambda i: -objs[i].pt)


def _leading(objs, rank=0):
    if len(objs) <= rank:
        return None
    if rank == 0:
        best = 0
        for i in range(1, len(objs)):
            if objs[i].pt > objs[best].pt:
                best = i
        return objs[best]
    return objs[_ranked(objs)[rank]]


def _attr(getter: Callable, collection: str, rank=0):
    def fn(e: Event):
        o = _leading(getattr(e, collection), rank)
        return None if o is None else getter(o)
    return fn


def _reliso(m):
    if m.pt <= 0:
        return None
    return float(relative_isolation(m.trk_iso03, m.pt))


def _pair_mass(objs, mass):
    if len(objs) < 2:
        return None
    i, j = _ranked(objs)[:2]
    a = from_pt_eta_phi_mass(objs[i].pt, objs[i].eta, objs[i].phi, mass)
    b = from_pt_eta_phi_mass(objs[j].pt, objs[j].eta, objs[j].phi, mass)
    return float(invariant_mass(a, b))


def _truth_muons(e):
    return [t for t in e.mc_truth if abs(t.pdg_id) == 13]


def _truth_pair_mass(e):
    mus = _truth_muons(e)
    if len(mus) < 2:
        return None
    i, j = _ranked(mus)[:2]
    a = from_pt_eta_phi_mass(mus[i].pt, mus[i].eta, mus[i].phi, mus[i].mass)
    b = from_pt_eta_phi_mass(mus[j].pt, mus[j].eta, mus[j].phi, mus[j].mass)
    return float(invariant_mass(a, b))


def _truth_lepton_nu_mass(e):
    leps = [t for t in e.mc_truth if abs(t.pdg_id) in (11, 13, 15)]
    nus = [t for t in e.mc_truth if abs(t.pdg_id) in (12, 14, 16)]
    if not leps or not nus:
        return None
    l, n = leps[0], nus[0]
    return float(invariant_mass(from_pt_eta_phi_mass(l.pt, l.eta, l.phi, l.mass),
                                from_pt_eta_phi_mass(n.pt, n.eta, n.phi, n.mass)))


REGISTRY: dict[str, tuple[str, Callable[[Event], object]]] = {
    "reco_muon_count": ("number of reconstructed muons", lambda e: len(e.muons)),
    "electron_count": ("number of electrons", lambda e: len(e.electrons)),
    "tau_count": ("number of taus", lambda e: len(e.taus)),
    "photon_count": ("number of photons", lambda e: len(e.photons)),
    "jet_count": ("number of PF jets", lambda e: len(e.jets)),
    "pf_count": ("number of PF candidates", lambda e: len(e.pf)),
    "vertex_count": ("number of vertices", lambda e: len(e.vertices)),
    "truth_count": ("number of generator particles", lambda e: len(e.mc_truth)),
    "leading_muon_pt": ("pt of the leading muon [GeV]", _attr(lambda m: m.pt, "muons")),
    "leading_muon_eta": ("eta of the leading muon", _attr(lambda m: m.eta, "muons")),
    "leading_muon_abs_eta": ("|eta| of the leading muon", _attr(lambda m: abs(m.eta), "muons")),
    "leading_muon_phi": ("phi of the leading muon", _attr(lambda m: m.phi, "muons")),
    "leading_muon_charge": ("charge of the leading muon", _attr(lambda m: m.charge, "muons")),
    "leading_muon_trkiso": ("TrkIso03 of the leading muon [GeV]", _attr(lambda m: m.trk_iso03, "muons")),
    "leading_muon_reliso": ("TrkIso03 / pt of the leading muon", _attr(_reliso, "muons")),
    "subleading_muon_pt": ("pt of the second muon [GeV]", _attr(lambda m: m.pt, "muons", 1)),
    "leading_electron_pt": ("pt of the leading electron [GeV]", _attr(lambda m: m.pt, "electrons")),
    "leading_jet_pt": ("pt of the leading jet [GeV]", _attr(lambda j: j.pt, "jets")),
    "leading_jet_eta": ("eta of the leading jet", _attr(lambda j: j.eta, "jets")),
    "met_pt": ("missing transverse energy [GeV]", lambda e: e.meta.met_pt),
    "met_phi": ("azimuth of the missing transverse energy", lambda e: e.meta.met_phi),
    "ht": ("scalar pt sum of jets [GeV]", lambda e: math.fsum(j.pt for j in e.jets)),
    "dimuon_mass": ("invariant mass of the two leading muons [GeV]",
                    lambda e: _pair_mass(e.muons, MUON_MASS)),
    "truth_dimuon_mass": ("invariant mass of the two leading generator muons [GeV]", _truth_pair_mass),
    "truth_lepton_nu_mass": ("generator lepton-neutrino mass [GeV]", _truth_lepton_nu_mass),
    "truth_muon_count": ("number of generator muons", lambda e: len(_truth_muons(e))),
}

TRIGGER_PREFIX = "trigger:"


def known_quantities() -> list[str]:
    return sorted(REGISTRY) + [TRIGGER_PREFIX + t for t in TRIGGERS]


def check_quantity(qid: str) -> None:
    if qid in REGISTRY:
        return
    if qid.startswith(TRIGGER_PREFIX) and qid[len(TRIGGER_PREFIX):] in TRIGGERS:
        return
    raise UnknownQuantity(qid)


def evaluate_quantity(e: Event, qid: str):
    """Value of quantity ``qid`` for ``e``, or ``None`` if absent.

    Raises
    ------
    UnknownQuantity
        If ``qid`` is not registered.
    """
    entry = REGISTRY.get(qid)
    if entry is not None:
        return entry[1](e)
    if qid.startswith(TRIGGER_PREFIX):
        name = qid[len(TRIGGER_PREFIX):]
        if name in TRIGGERS:
            return bool(e.meta.triggers.get(name, False))
    raise UnknownQuantity(qid)


def quantity_values(events, qid: str) -> list:
    check_quantity(qid)
    return [evaluate_quantity(e, qid) for e in events]
