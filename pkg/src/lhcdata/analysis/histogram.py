"""Weighted 1-d histograms, normalization and data/MC comparison.

Bins are left-closed and right-open, except the last bin which also
contains the upper edge.  Per-bin sums use ``math.fsum`` so results do
not depend on the event order.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import BadEdges, BinningMismatch, DomainError, EmptyHistogram
from ..model import Event


@dataclass(frozen=True, eq=False)
class Histogram1D:
    edges: np.ndarray
    contents: np.ndarray
    underflow: float = 0.0
    overflow: float = 0.0
    sumw2: np.ndarray | None = None

    def __post_init__(self):
        edges = _check_edges(self.edges)
        contents = np.asarray(self.contents, dtype=float)
        if contents.shape != (len(edges) - 1,):
            raise BadEdges("contents need one entry per bin")
        if not np.all(np.isfinite(contents)):
            raise DomainError("contents must be finite")
        sumw2 = np.zeros_like(contents) if self.sumw2 is None else np.asarray(self.sumw2, dtype=float)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "contents", contents)
        object.__setattr__(self, "sumw2", sumw2)
        object.__setattr__(self, "underflow", float(self.underflow))
        object.__setattr__(self, "overflow", float(self.overflow))

    @property
    def n_bins(self) -> int:
        return len(self.contents)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def errors(self) -> np.ndarray:
        return np.sqrt(self.sumw2)

    def total(self) -> float:
        """In-range plus under- and overflow weight."""
        return math.fsum(self.contents.tolist() + [self.underflow, self.overflow])

    def integral(self) -> float:
        """Area: sum of content times bin width."""
        return math.fsum((self.contents * self.widths).tolist())

    def mode_bin(self) -> int:
        return int(np.argmax(self.contents))

    def scaled(self, factor: float) -> "Histogram1D":
        return Histogram1D(self.edges, self.contents * factor, self.underflow * factor,
                           self.overflow * factor, self.sumw2 * factor * factor)

    def same_binning(self, other: "Histogram1D") -> bool:
        return self.edges.shape == other.edges.shape and np.array_equal(self.edges, other.edges)

    def __add__(self, other: "Histogram1D") -> "Histogram1D":
        if not self.same_binning(other):
            raise BinningMismatch("histograms have different edges")
        return Histogram1D(self.edges, self.contents + other.contents, self.underflow + other.underflow,
                           self.overflow + other.overflow, self.sumw2 + other.sumw2)

    def __eq__(self, other):
        if not isinstance(other, Histogram1D):
            return NotImplemented
        return (self.same_binning(other) and np.array_equal(self.contents, other.contents)
                and self.underflow == other.underflow and self.overflow == other.overflow
                and np.array_equal(self.sumw2, other.sumw2))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["edge_lo", "edge_hi", "content", "sumw2"])
        for lo, hi, c, s in zip(self.edges[:-1], self.edges[1:], self.contents, self.sumw2):
            w.writerow([repr(float(lo)), repr(float(hi)), repr(float(c)), repr(float(s))])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"edges": self.edges.tolist(), "contents": self.contents.tolist(),
                "underflow": self.underflow, "overflow": self.overflow, "sumw2": self.sumw2.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d) -> "Histogram1D":
        return cls(np.asarray(d["edges"]), np.asarray(d["contents"]), d.get("underflow", 0.0),
                   d.get("overflow", 0.0), np.asarray(d.get("sumw2", np.zeros(len(d["contents"])))))


def _check_edges(edges) -> np.ndarray:
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or len(edges) < 2:
        raise BadEdges("need at least two edges")
    if not np.all(np.isfinite(edges)):
        raise BadEdges("edges must be finite")
    if not np.all(np.diff(edges) > 0):
        raise BadEdges("edges must be strictly ascending")
    return edges


def uniform_edges(n_bins: int, lo: float, hi: float) -> np.ndarray:
    if n_bins < 1 or not hi > lo:
        raise BadEdges("need n_bins >= 1 and hi > lo")
    return np.linspace(lo, hi, n_bins + 1)


def bin_index(values, edges) -> np.ndarray:
    """Bin number per value: -1 underflow, ``n`` overflow."""
    edges = _check_edges(edges)
    v = np.asarray(values, dtype=float)
    idx = np.searchsorted(edges, v, side="right") - 1
    n = len(edges) - 1
    idx = np.where(v == edges[-1], n - 1, idx)
    idx = np.where(v > edges[-1], n, idx)
    return np.where(v < edges[0], -1, idx)


def _grouped_fsum(idx, w, n):
    # compensated per-group sums; groups are -1 .. n
    order = np.argsort(idx, kind="stable")
    sidx, sw = idx[order], w[order]
    bounds = np.searchsorted(sidx, np.arange(-1, n + 2))
    wl = sw.tolist()
    return [math.fsum(wl[bounds[k]:bounds[k + 1]]) for k in range(n + 2)]


def fill_histogram(values, weights=None, edges=None) -> Histogram1D:
    """Weighted histogram of ``values``.

    ``values`` equal to an interior edge go to the bin on the right; the
    last edge belongs to the last bin.  Values outside the edges land in
    under/overflow, so contents + underflow + overflow add up to the total
    weight.

    Raises
    ------
    BadEdges
        If ``edges`` has fewer than two entries or is not strictly ascending.
    """
    if edges is None:
        raise BadEdges("edges are required")
    edges = _check_edges(edges)
    v = np.asarray(values, dtype=float).ravel()
    if np.any(np.isnan(v)):
        raise DomainError("values must not be NaN")
    w = np.ones(len(v)) if weights is None else np.asarray(weights, dtype=float).ravel()
    if w.shape != v.shape:
        raise DomainError("weights must match values")
    n = len(edges) - 1
    idx = bin_index(v, edges)
    sums = _grouped_fsum(idx, w, n)
    sq = _grouped_fsum(idx, w * w, n)
    return Histogram1D(edges, np.array(sums[1:n + 1]), sums[0], sums[n + 1], np.array(sq[1:n + 1]))


def histogram_quantity(events, qid: str, edges, weights=None) -> Histogram1D:
    """Histogram a registry quantity; events where it is absent are skipped."""
    from ..toygen import WeightedSample
    from .quantities import quantity_values

    if isinstance(events, WeightedSample):
        w = events.weights if weights is None else events.weights * np.asarray(weights, float)
        events = events.events
    else:
        events = list(events)
        w = np.ones(len(events)) if weights is None else np.asarray(weights, dtype=float)
    vals = quantity_values(events, qid)
    keep = [i for i, x in enumerate(vals) if x is not None]
    return fill_histogram([float(vals[i]) for i in keep], w[keep] if keep else [], edges)


def normalize_to_unity(h: Histogram1D) -> Histogram1D:
    """Rescale so that the area (content times bin width) is 1.

    Raises
    ------
    EmptyHistogram
        If the area is not positive.
    """
    area = h.integral()
    if not area > 0:
        raise EmptyHistogram("histogram has no in-range weight")
    return h.scaled(1.0 / area)


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    data: Histogram1D
    components: tuple[Histogram1D, ...]
    stacked: Histogram1D
    ratio: np.ndarray          # NaN where the MC prediction is zero
    chi2: float
    ndf: int

    @property
    def ratio_defined(self) -> np.ndarray:
        return self.stacked.contents > 0

    def to_dict(self) -> dict:
        return {
            "edges": self.data.edges.tolist(),
            "data": self.data.contents.tolist(),
            "stacked": self.stacked.contents.tolist(),
            "ratio": [None if math.isnan(r) else float(r) for r in self.ratio],
            "chi2": self.chi2,
            "ndf": self.ndf,
        }


def compare_data_mc(data: Histogram1D, mc: Sequence[tuple[Histogram1D, float]]) -> ComparisonReport:
    """Stack weighted MC, then ratio and chi-square against data.

    chi2 sums ``(data - mc)^2 / mc`` over bins where the stacked MC is
    positive; the ratio is NaN in the other bins.

    Raises
    ------
    BinningMismatch
        If any input uses different edges.
    """
    comps = []
    for h, w in mc:
        if not h.same_binning(data):
            raise BinningMismatch("MC histogram edges differ from data")
        comps.append(h.scaled(float(w)))
    if comps:
        stack_c = np.array([math.fsum(col) for col in zip(*(c.contents.tolist() for c in comps))])
        stack_s = np.array([math.fsum(col) for col in zip(*(c.sumw2.tolist() for c in comps))])
        under = math.fsum(c.underflow for c in comps)
        over = math.fsum(c.overflow for c in comps)
        stacked = Histogram1D(data.edges, stack_c, under, over, stack_s)
    else:
        stacked = Histogram1D(data.edges, np.zeros(data.n_bins))
    m = stacked.contents
    ok = m > 0
    ratio = np.full(data.n_bins, np.nan)
    ratio[ok] = data.contents[ok] / m[ok]
    chi2 = math.fsum((((data.contents[ok] - m[ok]) ** 2) / m[ok]).tolist())
    return ComparisonReport(data, tuple(comps), stacked, ratio, chi2, int(ok.sum()))


_COLLECTION_ALIASES = {
    "muon": "muons", "muons": "muons", "electron": "electrons", "electrons": "electrons",
    "ele": "electrons", "tau": "taus", "taus": "taus", "photon": "photons", "photons": "photons",
    "jet": "jets", "jets": "jets", "pf": "pf", "mctruth": "mc_truth", "mc_truth": "mc_truth",
    "truth": "mc_truth",
}


def collection_attr(name: str) -> str:
    try:
        return _COLLECTION_ALIASES[name.lower()]
    except KeyError:
        raise DomainError(f"unknown collection {name!r}") from None


def object_counts(events: Sequence[Event], collection: str, pt_cutoff: float = 0.0) -> np.ndarray:
    if pt_cutoff < 0:
        raise DomainError("pt_cutoff must be >= 0")
    attr = collection_attr(collection)
    return np.array([sum(1 for o in getattr(e, attr) if o.pt > pt_cutoff) for e in events], dtype=np.int64)


def multiplicity_histogram(events, collection: str, pt_cutoff: float = 0.0, weights=None) -> Histogram1D:
    """Distribution of the number of objects with ``pt > pt_cutoff``.

    Unit bins centred on the integers ``0 .. max``.
    """
    from ..toygen import WeightedSample

    if isinstance(events, WeightedSample):
        weights = events.weights
        events = events.events
    counts = object_counts(list(events), collection, pt_cutoff)
    top = int(counts.max()) if len(counts) else 0
    edges = np.arange(top + 2, dtype=float) - 0.5
    return fill_histogram(counts, weights, edges)
