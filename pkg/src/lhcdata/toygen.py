"""Seeded toy Monte Carlo: generator-level events and a detector response.

Processes
---------
``ZToMuMu``
    Z boson with a truncated Cauchy line shape, isotropic decay to
    mu+ mu-, a transverse kick balanced by one recoil parton.
``WToMuNu``
    Same for the W boson decaying to a muon and a neutrino.
``Multijet``
    ``Poisson(4) + 2`` massless partons with a falling pt spectrum, balanced
    in the transverse plane; with probability ``soft_muon_prob`` one parton
    hands a fraction of its momentum to a collinear (dR < 0.2) muon.

Random streams
--------------
Every event draws from its own ``numpy.random.Generator`` (PCG64) seeded by
``SeedSequence([seed, stream, event_index])``.  Generation uses the stream
of the process code, detector simulation stream ``SMEAR_STREAM``.  Any
event range can therefore be produced independently (e.g. in parallel)
and concatenated to reproduce the serial output bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError
from .jetclust import ClusterConfig, antikt_cluster
from .kinematics import isolation_sum, met_from_objects, rest_mass
from .model import (
    Event,
    EventMeta,
    Jet,
    McTruthParticle,
    Muon,
    PFObject,
    TRIGGERS,
    Vertex,
)

# Particle masses (GeV)
Z_MASS = 91.1876
W_MASS = 80.379
MUON_MASS = 0.105
# Widths are not among the tabulated constants; standard values, overridable.
Z_WIDTH = 2.495
W_WIDTH = 2.085
SQRT_S = 8000.0

PROCESSES = ("ZToMuMu", "WToMuNu", "Multijet")
PROCESS_ALIASES = {"z-mumu": "ZToMuMu", "w-munu": "WToMuNu", "multijet": "Multijet"}
_PROCESS_STREAM = {"ZToMuMu": 1, "WToMuNu": 2, "Multijet": 3}
SMEAR_STREAM = 100

_NEUTRINOS = frozenset({12, 14, 16})
_LINE_SHAPE_CUT = 5.0  # truncate the line shape at +-5 widths


def pdg_charge(pdg: int) -> int:
    """Integer electric charge for the particle codes used by the toy."""
    a = abs(int(pdg))
    if a in (11, 13, 15):
        return -1 if pdg > 0 else 1
    if a in (211, 321, 2212, 24):
        return 1 if pdg > 0 else -1
    return 0


def event_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """Generator for one event of one stream (the stream-splitting rule)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), stream, int(index)])))


# --------------------------------------------------------------------------
# parameters
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ProcessParams:
    process: str = "ZToMuMu"
    resonance_mass: float = Z_MASS
    resonance_width: float = Z_WIDTH
    boson_pt_scale: float = 6.0
    max_abs_eta: float = 2.0
    jet_spectrum_slope: float = 15.0
    soft_muon_prob: float = 0.3
    jet_pt_min: float = 10.0
    w_plus_fraction: float = 1.0

    def __post_init__(self):
        proc = PROCESS_ALIASES.get(self.process, self.process)
        if proc not in PROCESSES:
            raise DomainError(f"unknown process {self.process!r}")
        object.__setattr__(self, "process", proc)
        for name in ("resonance_mass", "resonance_width", "boson_pt_scale", "max_abs_eta",
                     "jet_spectrum_slope"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.jet_pt_min < 0:
            raise DomainError("jet_pt_min must be non-negative")
        for name in ("soft_muon_prob", "w_plus_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1]")

    @classmethod
    def for_process(cls, process: str, **overrides) -> "ProcessParams":
        proc = PROCESS_ALIASES.get(process, process)
        base = {"ZToMuMu": dict(resonance_mass=Z_MASS, resonance_width=Z_WIDTH),
                "WToMuNu": dict(resonance_mass=W_MASS, resonance_width=W_WIDTH),
                "Multijet": dict()}
        if proc not in base:
            raise DomainError(f"unknown process {process!r}")
        return cls(process=proc, **{**base[proc], **overrides})


@dataclass(frozen=True)
class DetectorParams:
    """Detector response.

    Tracks: ``sigma(pt)/pt = a (+) b*pt``.  Calorimeter:
    ``sigma(E)/E = s/sqrt(E)``.  The defaults are placeholders of a plausible
    magnitude, not measured values.
    """

    track_res_a: float = 0.01
    track_res_b: float = 1e-4
    calo_res_stoch: float = 0.5
    muon_efficiency: float = 0.95
    fake_soft_rate: float = 0.2
    fake_pt_scale: float = 3.0
    pileup_mean: float = 20.0
    seed: int = 0
    jet_r: float = 0.4
    jet_min_pt: float = 3.0

    def __post_init__(self):
        if not 0.0 <= self.muon_efficiency <= 1.0:
            raise DomainError("muon_efficiency must lie in [0, 1]")
        for name in ("track_res_a", "track_res_b", "calo_res_stoch", "fake_soft_rate",
                     "pileup_mean", "jet_min_pt"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")
        if not self.fake_pt_scale > 0 or not self.jet_r > 0:
            raise DomainError("fake_pt_scale and jet_r must be positive")

    @classmethod
    def identity(cls, seed: int = 0) -> "DetectorParams":
        """Perfect detector: no smearing, full efficiency, no fakes, no pile-up."""
        return cls(track_res_a=0.0, track_res_b=0.0, calo_res_stoch=0.0, muon_efficiency=1.0,
                   fake_soft_rate=0.0, pileup_mean=0.0, seed=seed)

    def track_resolution(self, pt):
        return np.sqrt(self.track_res_a ** 2 + (self.track_res_b * np.asarray(pt)) ** 2)


def parse_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, value = line.split("=", 1)
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise DomainError(f"config line {lineno}: expected 'key = value'")
            key, value = parts
        out[key.strip()] = value.strip()
    return out


def params_from_mapping(cls, values: Mapping[str, object], **base):
    """Build ``cls`` from string or typed values, converting by field type."""
    kinds = {f.name: f.type for f in fields(cls)}
    kwargs = dict(base)
    for key, value in values.items():
        if key not in kinds:
            raise DomainError(f"unknown {cls.__name__} key {key!r}")
        kind = kinds[key]
        if isinstance(value, str):
            if kind in ("int", int):
                value = int(value)
            elif kind in ("float", float):
                value = float(value)
        kwargs[key] = value
    if cls is ProcessParams and "process" in kwargs:
        proc = kwargs.pop("process")
        return ProcessParams.for_process(str(proc), **kwargs)
    return cls(**kwargs)


def load_process_config(path, process: str | None = None) -> ProcessParams:
    values = parse_config(Path(path).read_text())
    if process is not None:
        values.setdefault("process", process)
    if "process" not in values:
        raise DomainError("process config needs a 'process' key")
    return params_from_mapping(ProcessParams, values)


def load_detector_config(path) -> DetectorParams:
    return params_from_mapping(DetectorParams, parse_config(Path(path).read_text()))


def format_config(params) -> str:
    return "".join(f"{f.name} = {getattr(params, f.name)}\n" for f in fields(params))


# --------------------------------------------------------------------------
# generator level
# --------------------------------------------------------------------------


def _sample_line_shape(rng, mass, width):
    # inverse-CDF Cauchy (FWHM = width) restricted to |m - M| <= 5 width
    umax = math.atan(2 * _LINE_SHAPE_CUT) / math.pi
    u = rng.uniform(-umax, umax)
    return mass + 0.5 * width * math.tan(math.pi * u)


def _boost(p4, b):
    """Boost (e, px, py, pz) by velocity vector ``b``."""
    e, px, py, pz = p4
    bx, by, bz = b
    b2 = bx * bx + by * by + bz * bz
    if b2 == 0.0:
        return p4
    gamma = 1.0 / math.sqrt(1.0 - b2)
    bp = bx * px + by * py + bz * pz
    g2 = (gamma - 1.0) / b2
    return (gamma * (e + bp),
            px + g2 * bp * bx + gamma * bx * e,
            py + g2 * bp * by + gamma * by * e,
            pz + g2 * bp * bz + gamma * bz * e)


def _ptetaphi(p4):
    e, px, py, pz = p4
    pt = math.hypot(px, py)
    return pt, math.asinh(pz / pt), math.atan2(py, px)


def _rapidity(pt, eta, m):
    if pt == 0.0:
        return 0.0
    # y = asinh(pt sinh(eta) / mT)
    return math.asinh(pt * math.sinh(eta) / math.sqrt(pt * pt + m * m))


def _two_body(rng, p: ProcessParams, m1, m2):
    """Resonance decay to two bodies; returns (m, lab p4 of d1, d2)."""
    while True:
        m = _sample_line_shape(rng, p.resonance_mass, p.resonance_width)
        if m > m1 + m2:
            break
    pstar = math.sqrt((m * m - (m1 + m2) ** 2) * (m * m - (m1 - m2) ** 2)) / (2 * m)
    cos_t = rng.uniform(-1.0, 1.0)
    sin_t = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))
    phi_s = rng.uniform(-math.pi, math.pi)
    d = (pstar * sin_t * math.cos(phi_s), pstar * sin_t * math.sin(phi_s), pstar * cos_t)
    r1 = (math.sqrt(pstar * pstar + m1 * m1), d[0], d[1], d[2])
    r2 = (math.sqrt(pstar * pstar + m2 * m2), -d[0], -d[1], -d[2])
    pt_b = rng.exponential(p.boson_pt_scale)
    phi_b = rng.uniform(-math.pi, math.pi)
    y_b = rng.uniform(-p.max_abs_eta, p.max_abs_eta)
    mt = math.sqrt(m * m + pt_b * pt_b)
    e_b = mt * math.cosh(y_b)
    b = (pt_b * math.cos(phi_b) / e_b, pt_b * math.sin(phi_b) / e_b, mt * math.sinh(y_b) / e_b)
    return m, _boost(r1, b), _boost(r2, b)


def _recoil(rng, particles, eta_window):
    """Parton balancing the transverse momentum of ``particles`` (pt, eta, phi, m, pdg)."""
    sx = -math.fsum(pt * math.cos(phi) for pt, _, phi, *_ in particles)
    sy = -math.fsum(pt * math.sin(phi) for pt, _, phi, *_ in particles)
    pt = math.hypot(sx, sy)
    if pt == 0.0:
        return None
    return (pt, rng.uniform(-eta_window, eta_window), math.atan2(sy, sx), 0.0, 21)


def _beam_fractions(particles):
    e = math.fsum(pt * math.cosh(eta) if m == 0 else math.sqrt((pt * math.cosh(eta)) ** 2 + m * m)
                  for pt, eta, _, m, _ in particles)
    pz = math.fsum(pt * math.sinh(eta) for pt, eta, _, _, _ in particles)
    x1 = min(1.0, max(0.0, (e + pz) / SQRT_S))
    x2 = min(1.0, max(0.0, (e - pz) / SQRT_S))
    return x1, x2


def _truth_boson(rng, p: ProcessParams):
    if p.process == "ZToMuMu":
        id1 = 2 if rng.random() < 0.5 else 1
        partons = (id1, -id1)
        _, mu_minus, mu_plus = _two_body(rng, p, MUON_MASS, MUON_MASS)
        decay = [(*_ptetaphi(mu_minus), MUON_MASS, 13), (*_ptetaphi(mu_plus), MUON_MASS, -13)]
    else:
        plus = rng.random() < p.w_plus_fraction
        partons = (2, -1) if plus else (1, -2)
        _, lep, nu = _two_body(rng, p, MUON_MASS, 0.0)
        decay = [(*_ptetaphi(lep), MUON_MASS, -13 if plus else 13),
                 (*_ptetaphi(nu), 0.0, 14 if plus else -14)]
    rec = _recoil(rng, decay, p.max_abs_eta + 0.5)
    if rec is not None:
        decay.append(rec)
    return decay, partons


def _truth_multijet(rng, p: ProcessParams):
    n = int(rng.poisson(4.0)) + 2
    pts = p.jet_pt_min + rng.exponential(p.jet_spectrum_slope, n)
    phis = rng.uniform(-math.pi, math.pi, n)
    etas = rng.uniform(-p.max_abs_eta - 0.5, p.max_abs_eta + 0.5, n)
    px = pts * np.cos(phis)
    py = pts * np.sin(phis)
    px = px - math.fsum(px.tolist()) / n
    py = py - math.fsum(py.tolist()) / n
    jets = [[math.hypot(x, y), float(eta), math.atan2(y, x)] for x, y, eta in zip(px, py, etas)]
    flavours = [21 if rng.random() < 0.7 else int(rng.integers(1, 6)) * (1 if rng.random() < 0.5 else -1)
                for _ in range(n)]
    particles = []
    if rng.random() < p.soft_muon_prob:
        k = int(rng.integers(n))
        jpt, jeta, jphi = jets[k]
        r = rng.uniform(0.0, 0.15)
        a = rng.uniform(-math.pi, math.pi)
        mu_eta = jeta + r * math.cos(a)
        mu_phi = math.remainder(jphi + r * math.sin(a), 2 * math.pi)
        mu_pt = jpt * rng.uniform(0.05, 0.35)
        jx = jpt * math.cos(jphi) - mu_pt * math.cos(mu_phi)
        jy = jpt * math.sin(jphi) - mu_pt * math.sin(mu_phi)
        jets[k] = [math.hypot(jx, jy), jeta, math.atan2(jy, jx)]
        pdg = 13 if rng.random() < 0.5 else -13
        particles.append((mu_pt, mu_eta, mu_phi, MUON_MASS, pdg))
    particles = [(pt, eta, phi, 0.0, fl) for (pt, eta, phi), fl in zip(jets, flavours)] + particles
    return particles, (21, 21)


def generate_truth(n: int, p: ProcessParams, seed: int, start: int = 0) -> list[Event]:
    """Generate ``n`` generator-level events with indices ``start .. start+n-1``.

    Only ``mc_truth`` (final-state particles, status 1) and the event meta are
    filled; the meta MET holds the neutrino transverse-momentum sum.
    """
    if n < 0 or start < 0:
        raise DomainError("n and start must be non-negative")
    if not isinstance(p, ProcessParams):
        raise DomainError("p must be a ProcessParams")
    stream = _PROCESS_STREAM[p.process]
    out = []
    for index in range(start, start + n):
        rng = event_rng(seed, stream, index)
        if p.process == "Multijet":
            particles, partons = _truth_multijet(rng, p)
        else:
            particles, partons = _truth_boson(rng, p)
        x1, x2 = _beam_fractions(particles)
        truth = tuple(
            McTruthParticle(pt=pt, eta=eta, phi=phi, mass=m, pdg_id=pdg, status=1,
                            id_1=partons[0], id_2=partons[1], x_1=x1, x_2=x2,
                            y=_rapidity(pt, eta, m))
            for pt, eta, phi, m, pdg in particles
        )
        nus = [(t.pt, t.phi) for t in truth if abs(t.pdg_id) in _NEUTRINOS]
        nu_x = math.fsum(pt * math.cos(phi) for pt, phi in nus)
        nu_y = math.fsum(pt * math.sin(phi) for pt, phi in nus)
        nu_pt = math.hypot(nu_x, nu_y)
        meta = EventMeta(n_event=index + 1, run_num=1, evt_num=index + 1,
                         lumisection=float(index // 1000 + 1),
                         met_pt=nu_pt, met_eta=0.0,
                         met_phi=math.atan2(nu_y, nu_x) if nu_pt > 0 else 0.0,
                         triggers={t: False for t in TRIGGERS})
        out.append(Event(meta=meta, mc_truth=truth))
    return out


def truth_pt_balance(e: Event) -> float:
    """Magnitude of the vector pt sum over all truth particles."""
    sx = math.fsum(t.pt * math.cos(t.phi) for t in e.mc_truth)
    sy = math.fsum(t.pt * math.sin(t.phi) for t in e.mc_truth)
    return math.hypot(sx, sy)


# --------------------------------------------------------------------------
# detector level
# --------------------------------------------------------------------------


def _positive_factor(rng, sigma):
    f = 1.0 + sigma * rng.standard_normal()
    return f if f > 1e-3 else 1e-3


def _energy(pt, eta, m):
    p = pt * math.cosh(eta)
    return math.sqrt(p * p + m * m)


def _dr(eta1, phi1, eta2, phi2):
    dphi = math.remainder(phi1 - phi2, 2 * math.pi)
    return math.hypot(eta1 - eta2, dphi)


def _make_jets(pf: list[dict], truth: Sequence[McTruthParticle], d: DetectorParams):
    """Cluster non-muon PF objects; returns (jets, jet_num per PF)."""
    idx = [i for i, o in enumerate(pf) if abs(o["pf_type"]) != 13]
    jet_num = [-1] * len(pf)
    if not idx:
        return [], jet_num
    protos = antikt_cluster([(pf[i]["pt"], pf[i]["eta"], pf[i]["phi"], pf[i]["mass"]) for i in idx],
                            ClusterConfig(d.jet_r, d.jet_min_pt))
    partons = sorted((t for t in truth if abs(t.pdg_id) in (1, 2, 3, 4, 5, 6, 21)),
                     key=lambda t: -t.pt)
    jets = []
    for num, pj in enumerate(protos):
        cons = [pf[idx[c]] for c in pj.constituent_indices]
        for c in pj.constituent_indices:
            jet_num[idx[c]] = num
        v = pj.four_vector
        pt = math.hypot(v.px, v.py)
        eta, phi = math.asinh(v.pz / pt), math.atan2(v.py, v.px)
        n_ch = sum(1 for o in cons if o["charge"] != 0)
        ch_had = math.fsum(o["energy"] for o in cons if o["charge"] != 0 and abs(o["pf_type"]) != 11)
        neu_had = math.fsum(o["energy"] for o in cons if o["charge"] == 0 and o["pf_type"] != 22)
        ch_em = math.fsum(o["energy"] for o in cons if abs(o["pf_type"]) == 11)
        neu_em = math.fsum(o["energy"] for o in cons if o["pf_type"] == 22)
        w = [o["pt"] * o["pt"] for o in cons]
        dr2 = math.fsum(wi * _dr(eta, phi, o["eta"], o["phi"]) ** 2 for wi, o in zip(w, cons))
        match, best = -1, d.jet_r
        for k, t in enumerate(partons):
            dr = _dr(eta, phi, t.eta, t.phi)
            if dr < best:
                match, best = k, dr
        gen = partons[match] if match >= 0 else None
        neutral_frac = (neu_had + neu_em) / v.e if v.e > 0 else 0.0
        jets.append(Jet(
            pt=pt, eta=eta, phi=phi, mass=float(rest_mass(v)), energy=float(v.e),
            charge=float(sum(o["charge"] for o in cons)),
            n_charged=n_ch, n_neutrals=len(cons) - n_ch, n_particles=len(cons),
            beta=1.0, beta_star=0.0, dr2_mean=dr2 / math.fsum(w),
            area=math.pi * d.jet_r ** 2,
            ch_em_energy=ch_em, neu_em_energy=neu_em, ch_had_energy=ch_had, neu_had_energy=neu_had,
            mc_flavor=abs(gen.pdg_id) if gen else 0,
            gen_pt=gen.pt if gen else 0.0, gen_eta=gen.eta if gen else 0.0,
            gen_phi=gen.phi if gen else 0.0, gen_mass=gen.mass if gen else 0.0,
            flavor_match_pt=gen.pt if gen else 0.0,
            id_quality=2 if (len(cons) > 1 and neutral_frac < 0.9) else 1,
            num=num, match_idx=match, jec=1.0,
        ))
    return jets, jet_num


def smear_event(truth: Event, d: DetectorParams) -> Event:
    """Detector response for one event (see :func:`smear_detector`)."""
    rng = event_rng(d.seed, SMEAR_STREAM, truth.meta.n_event - 1)
    pv = (0.0015 * rng.standard_normal(), 0.0015 * rng.standard_normal(), 5.0 * rng.standard_normal())
    pf: list[dict] = []  # PFObject fields; objects are built once jets are known
    muons_in: list[tuple] = []
    for t in truth.mc_truth:
        apdg = abs(t.pdg_id)
        if apdg in _NEUTRINOS:
            continue
        if apdg == 13:
            if rng.random() >= d.muon_efficiency:
                continue
            sigma = float(d.track_resolution(t.pt))
            pt = t.pt * _positive_factor(rng, sigma) if sigma > 0 else t.pt
            q = pdg_charge(t.pdg_id)
            muons_in.append((pt, t.eta, t.phi, q, sigma * pt))
            pf.append(dict(pt=pt, eta=t.eta, phi=t.phi, energy=_energy(pt, t.eta, MUON_MASS),
                           charge=q, mass=MUON_MASS, pf_type=int(t.pdg_id)))
            continue
        # hadronic: calorimeter smearing, split into two charged and one neutral constituent
        e_true = _energy(t.pt, t.eta, 0.0)
        sigma = d.calo_res_stoch / math.sqrt(e_true) if d.calo_res_stoch > 0 else 0.0
        pt = t.pt * _positive_factor(rng, sigma) if sigma > 0 else t.pt
        frac = rng.dirichlet((3.0, 3.0, 3.0)).tolist()
        signs = rng.integers(0, 2, 2).tolist()
        ndofs = rng.integers(5, 30, 2).tolist()
        chi2s = rng.chisquare(10, 2).tolist()
        for k in range(3):
            cpt = pt * frac[k]
            ce = _energy(cpt, t.eta, 0.0)
            if k < 2:
                q = 1 if signs[k] else -1
                pf.append(dict(pt=cpt, eta=t.eta, phi=t.phi, energy=ce, charge=q, mass=0.0,
                               pf_type=211 * q, hcal_e=ce, ndof=float(ndofs[k]), chi2=chi2s[k]))
            else:
                pf.append(dict(pt=cpt, eta=t.eta, phi=t.phi, energy=ce, charge=0, mass=0.0,
                               pf_type=22, ecal_e=ce))

    met, met_phi = met_from_objects((o["pt"], o["phi"]) for o in pf)

    # isolation sums over the PF candidates around each reconstructed muon
    if pf:
        a_pt = np.array([o["pt"] for o in pf])
        a_eta = np.array([o["eta"] for o in pf])
        a_phi = np.array([o["phi"] for o in pf])
        a_ch = np.array([o["charge"] != 0 for o in pf])
        a_ecal = np.array([o.get("ecal_e", 0.0) for o in pf])
        a_hcal = np.array([o.get("hcal_e", 0.0) for o in pf])
        every = np.ones(len(pf), dtype=bool)
    muons = []
    for pt, eta, phi, q, pt_err in muons_in:
        muons.append(Muon(
            pt=pt, eta=eta, phi=phi, charge=q, pt_err=pt_err, sta_pt=pt, sta_eta=eta, sta_phi=phi,
            trk_iso03=isolation_sum(eta, phi, a_eta, a_phi, a_pt, a_ch, 0.3),
            ecal_iso03=isolation_sum(eta, phi, a_eta, a_phi, a_ecal, every, 0.3),
            hcal_iso03=isolation_sum(eta, phi, a_eta, a_phi, a_hcal, every, 0.3),
        ))
    for _ in range(int(rng.poisson(d.fake_soft_rate))):
        pt = float(rng.exponential(d.fake_pt_scale))
        if pt <= 0.0:
            continue
        iso = pt * (1.0 + rng.exponential(1.0))
        muons.append(Muon(pt=pt, eta=rng.uniform(-2.4, 2.4), phi=rng.uniform(-math.pi, math.pi),
                          charge=1 if rng.random() < 0.5 else -1,
                          pt_err=float(d.track_resolution(pt)) * pt,
                          sta_pt=pt, trk_iso03=iso, ecal_iso03=0.5 * iso, hcal_iso03=0.5 * iso))
    muons.sort(key=lambda m: -m.pt)

    jets, jet_num = _make_jets(pf, truth.mc_truth, d)
    pf_objs = [PFObject(**o, jet_num=jn, pv_id=0, vx=pv[0], vy=pv[1], vz=pv[2])
               for o, jn in zip(pf, jet_num)]

    n_charged = sum(1 for o in pf if o["charge"] != 0)
    vertices = [Vertex(n_tracks_fit=n_charged, ndof=max(0.0, 2.0 * n_charged - 3.0),
                       chi2=max(0.0, 2.0 * n_charged - 3.0), x=pv[0], y=pv[1], z=pv[2])]
    n_pu = int(rng.poisson(d.pileup_mean))
    if n_pu:
        ntr = rng.poisson(15, n_pu)
        ndof = np.maximum(0.0, 2.0 * ntr - 3.0)
        chi2 = rng.chisquare(np.maximum(ndof, 1.0))
        xyz = (rng.standard_normal((n_pu, 3)) * (0.0015, 0.0015, 5.0)).tolist()
        for nt, nd, c2, (x, y, z) in zip(ntr.tolist(), ndof.tolist(), chi2.tolist(), xyz):
            vertices.append(Vertex(n_tracks_fit=nt, ndof=nd, chi2=c2, x=x, y=y, z=z))

    mu_pts = [m.pt for m in muons]
    ht = math.fsum(j.pt for j in jets)
    triggers = {
        "HLT_Mu17_Mu8": len(mu_pts) >= 2 and mu_pts[0] > 17.0 and mu_pts[1] > 8.0,
        "HLT_Mu24": any(x > 24.0 for x in mu_pts),
        "HLT_MET120_v": met > 120.0,
        "HLT_Ele27": False,
        "HLT_HT350": ht > 350.0,
    }
    meta = replace(truth.meta, met_pt=met, met_eta=0.0, met_phi=met_phi, triggers=triggers)
    return Event(meta=meta, pf=tuple(pf_objs), muons=tuple(muons), vertices=tuple(vertices),
                 mc_truth=truth.mc_truth, jets=tuple(jets))


def smear_detector(truth: Iterable[Event], d: DetectorParams) -> list[Event]:
    """Simulate the detector for each truth event.

    Per truth muon: reconstructed with probability ``muon_efficiency`` and
    pt scaled by ``1 + N(0, sigma(pt)/pt)``.  Partons become three
    collinear PF candidates after calorimeter smearing; neutrinos leave
    nothing.  MET is recomputed from the PF set, isolation from the PF
    candidates in a 0.3 cone, PF jets by anti-kT.  Fake soft muons
    (``Poisson(fake_soft_rate)``, exponential pt, large isolation) and
    ``Poisson(pileup_mean)`` pile-up vertices are added.  Trigger flags
    follow the reconstructed quantities.  Truth collections are kept.
    """
    return [smear_event(e, d) for e in truth]


# --------------------------------------------------------------------------
# weights
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightedSample:
    """Events with one per-sample weight applied when histogramming."""

    events: Sequence[Event]
    weight: float = 1.0
    name: str = ""

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    @property
    def weights(self) -> np.ndarray:
        return np.full(len(self.events), float(self.weight))


def weight_events(events, scale: float, name: str = "") -> WeightedSample:
    """Attach a per-sample weight; counts scale linearly with it."""
    if not scale > 0:
        raise DomainError("scale must be positive")
    if isinstance(events, WeightedSample):
        return WeightedSample(events.events, events.weight * scale, name or events.name)
    return WeightedSample(list(events), float(scale), name)
