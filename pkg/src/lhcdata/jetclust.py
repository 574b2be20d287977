"""Anti-kT clustering of particle-flow objects.

Distances use the pseudorapidity-azimuth plane::

    d_ij = min(1/pt_i^2, 1/pt_j^2) * dR_ij^2 / R^2
    d_iB = 1/pt_i^2

At each step the smallest distance is taken.  A pair distance merges the
two pseudojets by four-vector addition (E-scheme); a beam distance promotes
the pseudojet to a final jet.  Exact ties are resolved towards the lowest
participating index and, for the same index, a pair before the beam, so
results are deterministic.

:func:`antikt_cluster` keeps a nearest-neighbour table and touches only the
affected rows after each merge (O(N^2) overall).  :func:`antikt_cluster_reference`
re-scans every pair at every step and serves as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError
from .kinematics import FourVector, rest_mass

_PI = math.pi
_TWO_PI = 2.0 * math.pi
_SMALL_N = 48  # below this the list-based loop is faster


@dataclass(frozen=True)
class ClusterConfig:
    """Distance parameter and reporting threshold (GeV)."""

    r_param: float = 0.4
    min_jet_pt: float = 0.0

    def __post_init__(self):
        if not self.r_param > 0:
            raise DomainError("r_param must be positive")
        if self.min_jet_pt < 0:
            raise DomainError("min_jet_pt must be non-negative")


@dataclass(frozen=True)
class ProtoJet:
    four_vector: FourVector
    constituent_indices: tuple[int, ...]

    @property
    def pt(self) -> float:
        return self.four_vector.pt

    @property
    def eta(self) -> float:
        return self.four_vector.eta

    @property
    def phi(self) -> float:
        return self.four_vector.phi

    @property
    def mass(self) -> float:
        return self.four_vector.mass


class _Kin:
    """Scalar kinematics of one pseudojet, computed with ``math`` only."""

    __slots__ = ("e", "px", "py", "pz", "pt", "eta", "phi", "inv_pt2")

    def __init__(self, e, px, py, pz):
        self.e, self.px, self.py, self.pz = e, px, py, pz
        self.pt = math.sqrt(px * px + py * py)
        self.eta = math.asinh(pz / self.pt) if self.pt > 0 else math.copysign(math.inf, pz)
        self.phi = math.atan2(py, px)
        self.inv_pt2 = 1.0 / (self.pt * self.pt) if self.pt > 0 else math.inf

    @classmethod
    def from_ptetaphim(cls, pt, eta, phi, m):
        px = pt * math.cos(phi)
        py = pt * math.sin(phi)
        pz = pt * math.sinh(eta)
        p = pt * math.cosh(eta)
        return cls(math.sqrt(p * p + m * m), px, py, pz)

    def __add__(self, other):
        return _Kin(self.e + other.e, self.px + other.px, self.py + other.py, self.pz + other.pz)


def _dphi_scalar(a, b):
    d = a - b
    d = d - _TWO_PI * math.floor((d + _PI) / _TWO_PI)
    if d <= -_PI:
        d += _TWO_PI
    return d


def _dphi_array(a, b):
    d = a - b
    d = d - _TWO_PI * np.floor((d + _PI) / _TWO_PI)
    return np.where(d <= -_PI, d + _TWO_PI, d)


def _prepare(pf, cfg):
    kins = []
    for row in pf:
        pt, eta, phi, m = (float(x) for x in row)
        if not pt > 0:
            raise DomainError("all input pt must be positive")
        kins.append(_Kin.from_ptetaphim(pt, eta, phi, m))
    return kins


def _finish(finished, cfg):
    out = []
    for kin, idx in finished:
        if kin.pt >= cfg.min_jet_pt:
            out.append(ProtoJet(FourVector(kin.e, kin.px, kin.py, kin.pz), tuple(sorted(idx))))
    out.sort(key=lambda j: (-j.four_vector.pt, j.constituent_indices[0]))
    return out


def antikt_cluster(pf: Sequence[Sequence[float]], cfg: ClusterConfig = ClusterConfig()) -> list[ProtoJet]:
    """Cluster ``(pt, eta, phi, mass)`` rows into anti-kT jets.

    Returns jets with ``pt >= cfg.min_jet_pt`` in descending pt order
    (ties by lowest constituent index).  Every input index ends up in
    exactly one jet before the threshold is applied.

    Raises
    ------
    DomainError
        If any input pt is not positive.
    """
    kins = _prepare(pf, cfg)
    n = len(kins)
    if n == 0:
        return []
    if n <= _SMALL_N:
        return _finish(_nn_lists(kins, cfg.r_param * cfg.r_param), cfg)
    r2 = cfg.r_param * cfg.r_param
    # slot arrays; merged pseudojets reuse the lower slot
    eta = np.array([k.eta for k in kins])
    phi = np.array([k.phi for k in kins])
    inv = np.array([k.inv_pt2 for k in kins])
    active = np.ones(n, dtype=bool)
    members: list[list[int]] = [[i] for i in range(n)]
    nn_dist = np.full(n, np.inf)
    nn_idx = np.full(n, -1, dtype=np.int64)

    def row(i):
        # pair distances from slot i to every slot (inf for self/inactive)
        deta = eta[i] - eta
        dphi = _dphi_array(phi[i], phi)
        d = np.minimum(inv[i], inv) * (deta * deta + dphi * dphi) / r2
        d[~active] = np.inf
        d[i] = np.inf
        return d

    def refresh(i):
        d = row(i)
        j = int(np.argmin(d))
        nn_dist[i] = d[j]
        nn_idx[i] = j if np.isfinite(d[j]) else -1

    for i in range(n):
        refresh(i)

    finished = []
    remaining = n
    while remaining:
        # candidate per slot: min(pair, beam); pair wins exact ties in-row
        cand = np.where(active, np.minimum(nn_dist, inv), np.inf)
        i = int(np.argmin(cand))
        dmin = cand[i]
        j = int(nn_idx[i])
        if j >= 0 and nn_dist[i] <= inv[i] and nn_dist[i] == dmin:
            lo, hi = (i, j) if i < j else (j, i)
            kins[lo] = kins[lo] + kins[hi]
            members[lo].extend(members[hi])
            active[hi] = False
            eta[lo], phi[lo], inv[lo] = kins[lo].eta, kins[lo].phi, kins[lo].inv_pt2
            eta[hi], phi[hi], inv[hi] = 0.0, 0.0, np.inf
            remaining -= 1
            stale = {lo} | {int(k) for k in np.nonzero(active & ((nn_idx == lo) | (nn_idx == hi)))[0]}
            # rows whose distance to the new pseudojet shrank also need updating
            d_new = row(lo)
            closer = np.nonzero(active & (d_new < nn_dist))[0]
            for k in closer:
                nn_dist[k] = d_new[k]
                nn_idx[k] = lo
            # equal distance to a lower index must win the tie as well
            tie = np.nonzero(active & (d_new == nn_dist) & (lo < nn_idx))[0]
            for k in tie:
                nn_idx[k] = lo
            for k in stale:
                refresh(k)
        else:
            finished.append((kins[i], members[i]))
            active[i] = False
            eta[i], phi[i], inv[i] = 0.0, 0.0, np.inf
            remaining -= 1
            for k in np.nonzero(active & (nn_idx == i))[0]:
                refresh(int(k))
    return _finish(finished, cfg)


def _nn_lists(kins, r2):
    """Nearest-neighbour loop on plain lists; numpy overhead dominates for small N."""
    n = len(kins)
    inf = math.inf
    pi, two_pi, floor = _PI, _TWO_PI, math.floor
    active = [True] * n
    members = [[i] for i in range(n)]
    eta = [k.eta for k in kins]
    phi = [k.phi for k in kins]
    inv = [k.inv_pt2 for k in kins]

    def dist(i, k):
        deta = eta[i] - eta[k]
        d = phi[i] - phi[k]
        d -= two_pi * floor((d + pi) / two_pi)
        if d <= -pi:
            d += two_pi
        return (inv[i] if inv[i] < inv[k] else inv[k]) * (deta * deta + d * d) / r2

    nn_dist = [inf] * n
    nn_idx = [-1] * n

    def refresh(i):
        best, arg = inf, -1
        ei, fi, vi = eta[i], phi[i], inv[i]
        for k in range(n):
            if k != i and active[k]:
                deta = ei - eta[k]
                d = fi - phi[k]
                d -= two_pi * floor((d + pi) / two_pi)
                if d <= -pi:
                    d += two_pi
                d = (vi if vi < inv[k] else inv[k]) * (deta * deta + d * d) / r2
                if d < best:
                    best, arg = d, k
        nn_dist[i], nn_idx[i] = best, arg

    for i in range(n):
        refresh(i)
    finished = []
    remaining = n
    while remaining:
        i, dmin = -1, inf
        for k in range(n):
            if active[k]:
                c = nn_dist[k] if nn_dist[k] < inv[k] else inv[k]
                if c < dmin or i < 0:
                    i, dmin = k, c
        j = nn_idx[i]
        if j >= 0 and nn_dist[i] <= inv[i]:
            lo, hi = (i, j) if i < j else (j, i)
            kins[lo] = kins[lo] + kins[hi]
            eta[lo], phi[lo], inv[lo] = kins[lo].eta, kins[lo].phi, kins[lo].inv_pt2
            members[lo].extend(members[hi])
            active[hi] = False
            remaining -= 1
            for k in range(n):
                if not active[k] or k == lo:
                    continue
                if nn_idx[k] == lo or nn_idx[k] == hi:
                    refresh(k)
                    continue
                d = dist(k, lo)
                if d < nn_dist[k] or (d == nn_dist[k] and lo < nn_idx[k]):
                    nn_dist[k], nn_idx[k] = d, lo
            refresh(lo)
        else:
            finished.append((kins[i], members[i]))
            active[i] = False
            remaining -= 1
            for k in range(n):
                if active[k] and nn_idx[k] == i:
                    refresh(k)
    return finished


def antikt_cluster_reference(pf: Sequence[Sequence[float]],
                             cfg: ClusterConfig = ClusterConfig()) -> list[ProtoJet]:
    """Brute-force anti-kT: rescan all pairs each iteration.  Same contract."""
    kins = _prepare(pf, cfg)
    r2 = cfg.r_param * cfg.r_param
    live = {i: (kins[i], [i]) for i in range(len(kins))}
    finished = []
    while live:
        best = None  # (d, i, order, j)
        keys = sorted(live)
        for a_pos, a in enumerate(keys):
            ka = live[a][0]
            for b in keys[a_pos + 1:]:
                kb = live[b][0]
                deta = ka.eta - kb.eta
                dphi = _dphi_scalar(ka.phi, kb.phi)
                d = min(ka.inv_pt2, kb.inv_pt2) * (deta * deta + dphi * dphi) / r2
                cand = (d, a, 0, b)
                if best is None or cand < best:
                    best = cand
            cand = (ka.inv_pt2, a, 1, a)
            if best is None or cand < best:
                best = cand
        d, a, is_beam, b = best
        if is_beam:
            finished.append(live.pop(a))
        else:
            ka, ma = live.pop(a)
            kb, mb = live.pop(b)
            live[a] = (ka + kb, ma + mb)
    return _finish(finished, cfg)


class JetObservables(NamedTuple):
    pt: float
    eta: float
    phi: float
    mass: float
    energy: float
    n_charged: int
    n_neutrals: int
    n_particles: int
    charge: float


def jet_observables(j: ProtoJet, pf: Sequence) -> JetObservables:
    """Kinematics of the summed four-vector plus constituent charge counts.

    ``pf`` holds the clustered objects, each with a ``charge`` attribute.

    Raises
    ------
    IndexError
        If a constituent index is outside ``pf``.
    """
    charges = []
    for idx in j.constituent_indices:
        if idx < 0 or idx >= len(pf):
            raise IndexError(f"constituent index {idx} outside the particle list")
        charges.append(pf[idx].charge)
    v = j.four_vector
    n_charged = sum(1 for q in charges if q != 0)
    n_neutral = len(charges) - n_charged
    return JetObservables(
        pt=float(v.pt), eta=float(v.eta), phi=float(v.phi),
        mass=float(rest_mass(v)), energy=float(v.e),
        n_charged=n_charged, n_neutrals=n_neutral, n_particles=len(charges),
        charge=float(sum(charges)),
    )
