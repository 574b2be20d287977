import math

import pytest

from lhcdata.model import Event, EventMeta, Muon, PFObject
from lhcdata.toygen import DetectorParams, ProcessParams, generate_truth, smear_detector


@pytest.fixture(scope="session")
def z_params():
    return ProcessParams.for_process("ZToMuMu")


@pytest.fixture(scope="session")
def w_params():
    return ProcessParams.for_process("WToMuNu")


@pytest.fixture(scope="session")
def mj_params():
    return ProcessParams.for_process("Multijet")


@pytest.fixture(scope="session")
def z_truth(z_params):
    return generate_truth(200, z_params, seed=11)


@pytest.fixture(scope="session")
def w_truth(w_params):
    return generate_truth(200, w_params, seed=12)


@pytest.fixture(scope="session")
def mj_truth(mj_params):
    return generate_truth(100, mj_params, seed=13)


@pytest.fixture(scope="session")
def z_reco(z_truth):
    return smear_detector(z_truth, DetectorParams(seed=21))


@pytest.fixture(scope="session")
def mixed_reco(z_truth, w_truth, mj_truth):
    d = DetectorParams(seed=22)
    return (smear_detector(z_truth[:40], d) + smear_detector(w_truth[:40], d)
            + smear_detector(mj_truth[:40], d))


def make_event(muons=(), pf=(), met=0.0, n_event=1, **kw):
    """Small hand-built event; muons/pf are (pt, eta, phi[, charge]) tuples."""
    mus = tuple(Muon(pt=m[0], eta=m[1], phi=m[2], charge=m[3] if len(m) > 3 else -1) for m in muons)
    pfs = tuple(PFObject(pt=p[0], eta=p[1], phi=p[2], energy=p[0] * math.cosh(p[1]),
                         charge=p[3] if len(p) > 3 else 0, mass=0.0,
                         pf_type=211 if (len(p) > 3 and p[3]) else 22) for p in pf)
    return Event(meta=EventMeta(n_event=n_event, met_pt=met), muons=mus, pf=pfs, **kw)
