"""Event-record data model.

An :class:`Event` is one collision: scalar meta and trigger fields plus one
ragged collection per object type.  An :class:`EventTable` is the columnar
form of a batch of events, keyed by the record's variable names
(``nMuon``, ``vecMuon_PT``, ``fMET_PT``, ...).  Column names follow the
convention ``<prefix><Object>_<Suffix>`` where the prefix is ``n`` for
per-event object counts, ``f`` for event-level floats and ``vec`` for
per-object arrays.

Units are GeV for energies and momenta, cm for positions and radians for
angles.  Reference indices (``pv_id``, ``jet_num``, ``match_idx``, the
mother indices) use -1 for "none".
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field, fields
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidEvent, SchemaError

log = logging.getLogger(__name__)

TRIGGERS = ("HLT_Mu17_Mu8", "HLT_Mu24", "HLT_MET120_v", "HLT_Ele27", "HLT_HT350")
META_WHITELIST = frozenset({"nEvent", "runNum", "evtNum", "lumisection", *TRIGGERS})
ETA_SANITY = 10.0


# --------------------------------------------------------------------------
# object records
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PFObject:
    pt: float
    eta: float
    phi: float
    energy: float
    charge: int
    mass: float
    pf_type: int
    ecal_e: float = 0.0
    hcal_e: float = 0.0
    ndof: float = 0.0
    chi2: float = 0.0
    pv_id: int = -1
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    jet_num: int = -1


@dataclass(frozen=True)
class Muon:
    pt: float
    eta: float
    phi: float
    charge: int
    pt_err: float = 0.0
    sta_pt: float = 0.0
    sta_eta: float = 0.0
    sta_phi: float = 0.0
    trk_iso03: float = 0.0
    ecal_iso03: float = 0.0
    hcal_iso03: float = 0.0


@dataclass(frozen=True)
class Electron:
    pt: float
    eta: float
    phi: float
    charge: int
    trk_iso03: float = 0.0
    ecal_iso03: float = 0.0
    hcal_iso03: float = 0.0
    d0: float = 0.0
    dz: float = 0.0


@dataclass(frozen=True)
class Tau:
    """Tau candidate.  The four raw-isolation values are optional (None)."""

    pt: float
    eta: float
    phi: float
    charge: int
    raw_iso_3hits: float | None = None
    raw_iso_mva3_old_dm_wo_lt: float | None = None
    raw_iso_mva3_new_dm_wo_lt: float | None = None
    raw_iso_mva3_new_dm_w_lt: float | None = None


@dataclass(frozen=True)
class Photon:
    pt: float
    eta: float
    phi: float
    hovere: float = 0.0
    sthovere: float = 0.0
    has_pixel_seed: bool = False
    is_conv: bool = False
    pass_electron_veto: bool = True


@dataclass(frozen=True)
class Vertex:
    n_tracks_fit: int
    ndof: float = 0.0
    chi2: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0


@dataclass(frozen=True)
class McTruthParticle:
    """Generator-level particle.  ``x_1``/``x_2`` are -1 when unset."""

    pt: float
    eta: float
    phi: float
    mass: float
    pdg_id: int
    status: int = 1
    mothers_first: int = -1
    mothers_second: int = -1
    id_1: int = 0
    id_2: int = 0
    x_1: float = -1.0
    x_2: float = -1.0
    y: float = 0.0


@dataclass(frozen=True)
class Jet:
    pt: float
    eta: float
    phi: float
    mass: float
    energy: float
    charge: float = 0.0
    d0: float = 0.0
    dz: float = 0.0
    n_charged: int = 0
    n_neutrals: int = 0
    n_particles: int = 0
    beta: float = 0.0
    beta_star: float = 0.0
    dr2_mean: float = 0.0
    area: float = 0.0
    ch_em_energy: float = 0.0
    neu_em_energy: float = 0.0
    ch_had_energy: float = 0.0
    neu_had_energy: float = 0.0
    mc_flavor: int = 0
    gen_pt: float = 0.0
    gen_eta: float = 0.0
    gen_phi: float = 0.0
    gen_mass: float = 0.0
    flavor_match_pt: float = 0.0
    id_quality: int = 0
    num: int = 0
    match_idx: int = -1
    jec: float = 1.0


def _default_triggers():
    return {name: False for name in TRIGGERS}


@dataclass(frozen=True)
class EventMeta:
    n_event: int = 1
    run_num: int = 1
    evt_num: int = 1
    lumisection: float = 1.0
    met_pt: float = 0.0
    met_eta: float = 0.0
    met_phi: float = 0.0
    triggers: Mapping[str, bool] = field(default_factory=_default_triggers)


@dataclass(frozen=True)
class Event:
    meta: EventMeta = field(default_factory=EventMeta)
    pf: tuple[PFObject, ...] = ()
    muons: tuple[Muon, ...] = ()
    electrons: tuple[Electron, ...] = ()
    taus: tuple[Tau, ...] = ()
    photons: tuple[Photon, ...] = ()
    vertices: tuple[Vertex, ...] = ()
    mc_truth: tuple[McTruthParticle, ...] = ()
    jets: tuple[Jet, ...] = ()

    def __post_init__(self):
        for f in fields(self):
            if f.name != "meta":
                value = getattr(self, f.name)
                if not isinstance(value, tuple):
                    object.__setattr__(self, f.name, tuple(value))

    def replace(self, **changes) -> "Event":
        from dataclasses import replace

        return replace(self, **changes)


# --------------------------------------------------------------------------
# schema
# --------------------------------------------------------------------------

# kind codes: f = float64, i = int64, b = bool, q = integer held as float on disk


@dataclass(frozen=True)
class Column:
    name: str
    attr: str
    kind: str
    optional: bool = False

    @property
    def dtype(self):
        return {"f": np.float64, "i": np.int64, "b": np.bool_, "q": np.float64}[self.kind]


@dataclass(frozen=True)
class Collection:
    attr: str          # Event attribute
    infix: str         # object infix in column names
    count: str         # count column name
    cls: type
    columns: tuple[Column, ...]

    def vec(self, suffix: str) -> str:
        return f"vec{self.infix}_{suffix}"


def _cols(infix, spec):
    out = []
    for item in spec:
        suffix, attr, kind, *rest = item
        out.append(Column(f"vec{infix}_{suffix}", attr, kind, bool(rest and rest[0])))
    return tuple(out)


COLLECTIONS: tuple[Collection, ...] = (
    Collection("pf", "PF", "nPF", PFObject, _cols("PF", [
        ("PT", "pt", "f"), ("Eta", "eta", "f"), ("Phi", "phi", "f"), ("E", "energy", "f"),
        ("Q", "charge", "q"), ("Mass", "mass", "f"), ("PfType", "pf_type", "i"),
        ("EcalE", "ecal_e", "f"), ("HcalE", "hcal_e", "f"), ("ndof", "ndof", "f"),
        ("Chi2", "chi2", "f"), ("pvId", "pv_id", "i"), ("X", "vx", "f"), ("Y", "vy", "f"),
        ("Z", "vz", "f"), ("JetNum", "jet_num", "i"),
    ])),
    Collection("electrons", "Ele", "nEle", Electron, _cols("Ele", [
        ("PT", "pt", "f"), ("Eta", "eta", "f"), ("Phi", "phi", "f"), ("Q", "charge", "q"),
        ("TrkIso03", "trk_iso03", "f"), ("EcalIso03", "ecal_iso03", "f"),
        ("HcalIso03", "hcal_iso03", "f"), ("D0", "d0", "f"), ("Dz", "dz", "f"),
    ])),
    Collection("muons", "Muon", "nMuon", Muon, _cols("Muon", [
        ("PT", "pt", "f"), ("Eta", "eta", "f"), ("Phi", "phi", "f"), ("PTErr", "pt_err", "f"),
        ("Q", "charge", "q"), ("StaPt", "sta_pt", "f"), ("StaEta", "sta_eta", "f"),
        ("StaPhi", "sta_phi", "f"), ("TrkIso03", "trk_iso03", "f"),
        ("EcalIso03", "ecal_iso03", "f"), ("HcalIso03", "hcal_iso03", "f"),
    ])),
    Collection("taus", "Tau", "nTau", Tau, _cols("Tau", [
        ("PT", "pt", "f"), ("Eta", "eta", "f"), ("Phi", "phi", "f"), ("Q", "charge", "q"),
        ("RawIso3Hits", "raw_iso_3hits", "f", True),
        ("RawIsoMVA3oldDMwoLT", "raw_iso_mva3_old_dm_wo_lt", "f", True),
        ("RawIsoMVA3newDMwoLT", "raw_iso_mva3_new_dm_wo_lt", "f", True),
        ("RawIsoMVA3newDMwLT", "raw_iso_mva3_new_dm_w_lt", "f", True),
    ])),
    Collection("photons", "Photon", "nPhoton", Photon, _cols("Photon", [
        ("PT", "pt", "f"), ("Eta", "eta", "f"), ("Phi", "phi", "f"), ("Hovere", "hovere", "f"),
        ("Sthovere", "sthovere", "f"), ("HasPixelSeed", "has_pixel_seed", "b"),
        ("IsConv", "is_conv", "b"), ("PassElectronVeto", "pass_electron_veto", "b"),
    ])),
    Collection("vertices", "Vertex", "nVertex", Vertex, _cols("Vertex", [
        ("nTracksfit", "n_tracks_fit", "i"), ("ndof", "ndof", "f"), ("Chi2", "chi2", "f"),
        ("X", "x", "f"), ("Y", "y", "f"), ("Z", "z", "f"),
    ])),
    Collection("mc_truth", "Mctruth", "nMctruth", McTruthParticle, _cols("Mctruth", [
        ("PT", "pt", "f"), ("Eta", "eta", "f"), ("Phi", "phi", "f"), ("Mass", "mass", "f"),
        ("Mothers.first", "mothers_first", "i"), ("Mothers.second", "mothers_second", "i"),
        ("Id_1", "id_1", "i"), ("Id_2", "id_2", "i"), ("X_1", "x_1", "f"), ("X_2", "x_2", "f"),
        ("PdgId", "pdg_id", "q"), ("Status", "status", "i"), ("Y", "y", "f"),
    ])),
    Collection("jets", "Jet", "nJets", Jet, _cols("Jet", [
        ("PT", "pt", "f"), ("Eta", "eta", "f"), ("Phi", "phi", "f"), ("Q", "charge", "f"),
        ("Mass", "mass", "f"), ("D0", "d0", "f"), ("Dz", "dz", "f"),
        ("nCharged", "n_charged", "i"), ("nNeutrals", "n_neutrals", "i"),
        ("nParticles", "n_particles", "i"), ("Beta", "beta", "f"), ("BetaStar", "beta_star", "f"),
        ("dR2Mean", "dr2_mean", "f"), ("Area", "area", "f"), ("Energy", "energy", "f"),
        ("chEmEnergy", "ch_em_energy", "f"), ("neuEmEnergy", "neu_em_energy", "f"),
        ("chHadEnergy", "ch_had_energy", "f"), ("neuHadEnergy", "neu_had_energy", "f"),
        ("mcFlavor", "mc_flavor", "i"), ("GenPT", "gen_pt", "f"), ("GenEta", "gen_eta", "f"),
        ("GenPhi", "gen_phi", "f"), ("GenMass", "gen_mass", "f"),
        ("flavorMatchPT", "flavor_match_pt", "f"), ("ID", "id_quality", "i"),
        ("Num", "num", "i"), ("MatchIdx", "match_idx", "i"), ("JEC", "jec", "f"),
    ])),
)

COLLECTION_BY_ATTR = {c.attr: c for c in COLLECTIONS}
COLLECTION_BY_INFIX = {c.infix: c for c in COLLECTIONS}

META_COLUMNS: tuple[Column, ...] = (
    Column("nEvent", "n_event", "i"),
    Column("runNum", "run_num", "i"),
    Column("evtNum", "evt_num", "i"),
    Column("lumisection", "lumisection", "f"),
    Column("fMET_PT", "met_pt", "f"),
    Column("fMET_Eta", "met_eta", "f"),
    Column("fMET_Phi", "met_phi", "f"),
) + tuple(Column(t, t, "b") for t in TRIGGERS)


def schema_columns(include_optional: bool = False) -> list[str]:
    """Names of every schema column in canonical order."""
    names = [c.name for c in META_COLUMNS]
    for coll in COLLECTIONS:
        names.append(coll.count)
        names.extend(c.name for c in coll.columns if include_optional or not c.optional)
    return names


_NAME_RE = re.compile(r"^(vec|f)([A-Za-z][A-Za-z0-9]*)_(.+)$")
_COUNT_RE = re.compile(r"^n([A-Z][A-Za-z0-9]*)$")


def parse_column_name(name: str) -> tuple[str, str, str] | None:
    """Split a column name into ``(prefix, object, suffix)``.

    Count columns have an empty suffix.  Returns None if the name does not
    follow the convention (whitelisted meta names included).
    """
    m = _NAME_RE.match(name)
    if m:
        return m.group(1), m.group(2), m.group(3)
    m = _COUNT_RE.match(name)
    if m:
        return "n", m.group(1), ""
    return None


def count_column_for(infix: str) -> str:
    coll = COLLECTION_BY_INFIX.get(infix)
    return coll.count if coll else f"n{infix}"


# --------------------------------------------------------------------------
# ragged arrays and the table
# --------------------------------------------------------------------------


class RaggedArray:
    """Variable-length rows stored as flat ``values`` plus ``offsets``.

    Row ``i`` is ``values[offsets[i]:offsets[i+1]]``; ``offsets`` has
    ``n_rows + 1`` entries starting at 0.
    """

    __slots__ = ("offsets", "values")

    def __init__(self, offsets, values):
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.values = np.asarray(values)
        if self.offsets.ndim != 1 or len(self.offsets) == 0 or self.offsets[0] != 0:
            raise ValueError("offsets must be a 1-d array starting at 0")
        if np.any(np.diff(self.offsets) < 0) or self.offsets[-1] != len(self.values):
            raise ValueError("offsets must be non-decreasing and end at len(values)")

    @classmethod
    def from_lists(cls, rows: Iterable[Sequence], dtype=None) -> "RaggedArray":
        rows = [list(r) for r in rows]
        lengths = np.fromiter((len(r) for r in rows), np.int64, len(rows))
        offsets = np.zeros(len(rows) + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        flat = [v for r in rows for v in r]
        values = np.asarray(flat, dtype=dtype) if flat else np.zeros(0, dtype=dtype or np.float64)
        return cls(offsets, values)

    def __len__(self):
        return len(self.offsets) - 1

    def __getitem__(self, i):
        return self.values[self.offsets[i]:self.offsets[i + 1]]

    def lengths(self) -> np.ndarray:
        return np.diff(self.offsets)

    def to_lists(self) -> list[list]:
        flat = self.values.tolist()
        off = self.offsets.tolist()
        return [flat[off[i]:off[i + 1]] for i in range(len(self))]

    def take(self, rows) -> "RaggedArray":
        rows = np.asarray(rows, dtype=np.int64)
        lengths = self.lengths()[rows]
        offsets = np.zeros(len(rows) + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        if len(rows) == 0:
            return RaggedArray(offsets, self.values[:0])
        idx = np.concatenate([np.arange(self.offsets[r], self.offsets[r + 1]) for r in rows])
        return RaggedArray(offsets, self.values[idx.astype(np.int64)])

    def __eq__(self, other):
        if not isinstance(other, RaggedArray):
            return NotImplemented
        return (np.array_equal(self.offsets, other.offsets)
                and self.values.dtype.kind == other.values.dtype.kind
                and _bit_equal(self.values, other.values))

    def __repr__(self):
        return f"RaggedArray(n_rows={len(self)}, n_values={len(self.values)}, dtype={self.values.dtype})"


def _bit_equal(a: np.ndarray, b: np.ndarray) -> bool:
    if a.shape != b.shape:
        return False
    if a.dtype.kind == "f" and b.dtype.kind == "f":
        return np.array_equal(a.astype(np.float64).view(np.int64), b.astype(np.float64).view(np.int64))
    return np.array_equal(a, b)


ColumnData = "np.ndarray | RaggedArray"


@dataclass
class EventTable:
    """Columnar batch of events keyed by record variable names.

    ``columns`` maps a name to a 1-d numpy array (one value per event) or a
    :class:`RaggedArray` (one variable-length row per event).  ``warnings``
    collects non-fatal schema findings from ingestion or reading.
    """

    columns: dict[str, Any]
    n_rows: int
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        for name, col in self.columns.items():
            if len(col) != self.n_rows:
                raise SchemaError(name, f"has {len(col)} entries, expected {self.n_rows}")

    def __getitem__(self, name):
        return self.columns[name]

    def __contains__(self, name):
        return name in self.columns

    def __len__(self):
        return self.n_rows

    @property
    def column_names(self) -> list[str]:
        return list(self.columns)

    def take(self, rows) -> "EventTable":
        rows = np.asarray(rows, dtype=np.int64)
        cols = {k: (v.take(rows) if isinstance(v, RaggedArray) else v[rows])
                for k, v in self.columns.items()}
        return EventTable(cols, len(rows), list(self.warnings))

    def equals(self, other: "EventTable", rel_tol: float = 0.0) -> bool:
        """Column-by-column equality; floats compared within ``rel_tol``."""
        if self.n_rows != other.n_rows or set(self.columns) != set(other.columns):
            return False
        for name, a in self.columns.items():
            b = other.columns[name]
            if isinstance(a, RaggedArray) != isinstance(b, RaggedArray):
                return False
            if isinstance(a, RaggedArray):
                if not np.array_equal(a.offsets, b.offsets):
                    return False
                a, b = a.values, b.values
            if a.dtype.kind == "f" or b.dtype.kind == "f":
                if rel_tol == 0.0:
                    if not _bit_equal(np.asarray(a, float), np.asarray(b, float)):
                        return False
                elif not np.allclose(a, b, rtol=rel_tol, atol=0.0, equal_nan=True):
                    return False
            elif not np.array_equal(a, b):
                return False
        return True

    def __eq__(self, other):
        if not isinstance(other, EventTable):
            return NotImplemented
        return self.equals(other)


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def add(self, path, message):
        self.violations.append(Violation(path, message))


def _check_object(report, path, obj, n_jets, n_vertices):
    def bad(fld, msg):
        report.add(f"{path}.{fld}", msg)

    if isinstance(obj, PFObject):
        for f_ in ("pt", "energy", "ecal_e", "hcal_e"):
            if not getattr(obj, f_) >= 0:
                bad(f_, "must be >= 0")
        if not -math.pi <= obj.phi <= math.pi:
            bad("phi", "must lie in [-pi, pi]")
        if not abs(obj.eta) <= ETA_SANITY:
            bad("eta", f"|eta| must be <= {ETA_SANITY}")
        if obj.charge not in (-1, 0, 1):
            bad("charge", "must be -1, 0 or +1")
        if obj.pf_type == 0:
            bad("pf_type", "pdgId must be non-zero")
        if not (obj.jet_num == -1 or 0 <= obj.jet_num < n_jets):
            bad("jet_num", f"must be -1 or in [0, {n_jets})")
        if not -1 <= obj.pv_id < n_vertices:
            bad("pv_id", f"must lie in [-1, {n_vertices})")
    elif isinstance(obj, Muon):
        if obj.charge not in (-1, 1):
            bad("charge", "must be -1 or +1")
        if not obj.pt >= 0:
            bad("pt", "must be >= 0")
        for f_ in ("trk_iso03", "ecal_iso03", "hcal_iso03"):
            if not getattr(obj, f_) >= 0:
                bad(f_, "must be >= 0")
    elif isinstance(obj, (Electron, Tau)):
        if obj.charge not in (-1, 1):
            bad("charge", "must be -1 or +1")
        if not obj.pt >= 0:
            bad("pt", "must be >= 0")
    elif isinstance(obj, Photon):
        if not obj.pt >= 0:
            bad("pt", "must be >= 0")
        if not obj.hovere >= 0:
            bad("hovere", "must be >= 0")
    elif isinstance(obj, Vertex):
        if obj.n_tracks_fit < 0:
            bad("n_tracks_fit", "must be >= 0")
    elif isinstance(obj, McTruthParticle):
        if not obj.pt >= 0:
            bad("pt", "must be >= 0")
        if obj.pdg_id == 0:
            bad("pdg_id", "pdgId must be non-zero")
        for f_ in ("x_1", "x_2"):
            x = getattr(obj, f_)
            if not (x == -1.0 or 0.0 <= x <= 1.0):
                bad(f_, "must lie in [0, 1] (or -1 when unset)")
    elif isinstance(obj, Jet):
        if obj.n_particles != obj.n_charged + obj.n_neutrals:
            bad("n_particles", "must equal n_charged + n_neutrals")
        if obj.id_quality not in (0, 1, 2):
            bad("id_quality", "must be 0, 1 or 2")
        if not obj.jec > 0:
            bad("jec", "must be > 0")


def validate_event(e) -> ValidationReport:
    """Check every structural invariant of one event.

    ``e`` is an :class:`Event` or a per-event record (mapping of column
    name to scalar or list, as in a JSON-lines row).  Never raises; every
    problem is listed in the returned report.
    """
    if isinstance(e, Mapping):
        return validate_record(e)
    report = ValidationReport()
    m = e.meta
    if not m.met_pt >= 0:
        report.add("meta.met_pt", "must be >= 0")
    if m.n_event < 1:
        report.add("meta.n_event", "must be >= 1")
    n_jets, n_vtx = len(e.jets), len(e.vertices)
    for coll in COLLECTIONS:
        for i, obj in enumerate(getattr(e, coll.attr)):
            if not isinstance(obj, coll.cls):
                report.add(f"{coll.attr}[{i}]", f"expected {coll.cls.__name__}")
                continue
            _check_object(report, f"{coll.attr}[{i}]", obj, n_jets, n_vtx)
    optional = [c for c in COLLECTION_BY_ATTR["taus"].columns if c.optional]
    for i, tau in enumerate(e.taus):
        present = [getattr(tau, c.attr) is not None for c in optional]
        if any(present) and not all(present):
            report.add(f"taus[{i}]", "raw isolation values must be all set or all unset")
    return report


def validate_record(rec: Mapping) -> ValidationReport:
    """Count-consistency check of one per-event record."""
    report = ValidationReport()
    for coll in COLLECTIONS:
        n = rec.get(coll.count)
        for col in coll.columns:
            if col.name not in rec:
                continue
            value = rec[col.name]
            if not isinstance(value, (list, tuple, np.ndarray)):
                report.add(col.name, "expected an array")
                continue
            if n is None:
                n = len(value)
            elif len(value) != n:
                report.add(col.name, f"has {len(value)} entries but {coll.count} = {n}")
    return report


def validate_table(t: EventTable) -> ValidationReport:
    """Schema and count-consistency check of a whole table."""
    report = ValidationReport()
    for name, col in t.columns.items():
        if len(col) != t.n_rows:
            report.add(name, f"has {len(col)} entries, expected {t.n_rows}")
    known = set(schema_columns(include_optional=True))
    for col in META_COLUMNS:
        if col.name not in t.columns:
            report.add(col.name, "missing column")
        elif isinstance(t.columns[col.name], RaggedArray):
            report.add(col.name, "expected a scalar column")
    for coll in COLLECTIONS:
        if coll.count not in t.columns:
            report.add(coll.count, "missing column")
            continue
        counts = np.asarray(t.columns[coll.count])
        for col in coll.columns:
            data = t.columns.get(col.name)
            if data is None:
                if not col.optional:
                    report.add(col.name, "missing column")
                continue
            if not isinstance(data, RaggedArray):
                report.add(col.name, "expected a ragged column")
                continue
            bad = np.nonzero(data.lengths() != counts)[0]
            if len(bad):
                report.add(col.name, f"row {int(bad[0])}: length {int(data.lengths()[bad[0]])} "
                                     f"!= {coll.count} = {int(counts[bad[0]])}")
    # unknown columns: accepted, but reported and count-checked when possible
    for name, data in t.columns.items():
        if name in known:
            continue
        parsed = parse_column_name(name)
        if parsed is None:
            report.warnings.append(f"unknown column {name!r} does not follow the naming convention")
            continue
        report.warnings.append(f"unknown column {name!r} kept as an extra column")
        prefix, infix, _ = parsed
        count_name = count_column_for(infix)
        if prefix == "vec" and isinstance(data, RaggedArray) and count_name in t.columns:
            counts = np.asarray(t.columns[count_name])
            bad = np.nonzero(data.lengths() != counts)[0]
            if len(bad):
                report.add(name, f"row {int(bad[0])}: length {int(data.lengths()[bad[0]])} "
                                 f"!= {count_name} = {int(counts[bad[0]])}")
    return report


# --------------------------------------------------------------------------
# transposition
# --------------------------------------------------------------------------


def _to_column(values: list, kind: str) -> np.ndarray:
    dtype = {"f": np.float64, "i": np.int64, "b": np.bool_, "q": np.float64}[kind]
    return np.asarray(values, dtype=dtype) if values else np.zeros(0, dtype=dtype)


def table_from_events(events: Sequence[Event]) -> EventTable:
    """Transpose a batch of per-event records into per-variable columns.

    Raises
    ------
    InvalidEvent
        If any event fails :func:`validate_event`.
    """
    events = list(events)
    for i, ev in enumerate(events):
        report = validate_event(ev)
        if not report.ok:
            raise InvalidEvent(f"event {i} is invalid: {report.violations[0]}", report)
    cols: dict[str, Any] = {}
    metas = [ev.meta for ev in events]
    for col in META_COLUMNS:
        if col.kind == "b":
            vals = [bool(m.triggers.get(col.attr, False)) for m in metas]
        else:
            vals = [getattr(m, col.attr) for m in metas]
        cols[col.name] = _to_column(vals, col.kind)
    for coll in COLLECTIONS:
        per_event = [getattr(ev, coll.attr) for ev in events]
        lengths = np.fromiter((len(p) for p in per_event), np.int64, len(events))
        offsets = np.zeros(len(events) + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        flat = [o for p in per_event for o in p]
        cols[coll.count] = lengths.astype(np.int64)
        for col in coll.columns:
            vals = [getattr(o, col.attr) for o in flat]
            if col.optional:
                if not flat or any(v is None for v in vals):
                    if any(v is not None for v in vals):
                        raise InvalidEvent(f"{col.name} is set for some but not all objects")
                    continue
            cols[col.name] = RaggedArray(offsets, _to_column(vals, col.kind))
    return EventTable(cols, len(events))


def _first_schema_problem(t: EventTable):
    report = validate_table(t)
    if report.violations:
        v = report.violations[0]
        raise SchemaError(v.path, v.message)
    return report


def events_from_table(t: EventTable) -> list[Event]:
    """Rebuild per-event records from a table (inverse of table_from_events).

    Raises
    ------
    SchemaError
        Naming the first offending column.
    """
    report = _first_schema_problem(t)
    for w in report.warnings:
        log.warning(w)
    n = t.n_rows
    meta_vals = {}
    for col in META_COLUMNS:
        meta_vals[col.name] = np.asarray(t.columns[col.name]).tolist()
    metas = []
    for i in range(n):
        metas.append(EventMeta(
            n_event=int(meta_vals["nEvent"][i]),
            run_num=int(meta_vals["runNum"][i]),
            evt_num=int(meta_vals["evtNum"][i]),
            lumisection=float(meta_vals["lumisection"][i]),
            met_pt=float(meta_vals["fMET_PT"][i]),
            met_eta=float(meta_vals["fMET_Eta"][i]),
            met_phi=float(meta_vals["fMET_Phi"][i]),
            triggers={name: bool(meta_vals[name][i]) for name in TRIGGERS},
        ))
    per_coll: dict[str, list[tuple]] = {}
    for coll in COLLECTIONS:
        offsets = np.asarray(t.columns[coll.columns[0].name].offsets).tolist()
        field_values = []
        attrs = []
        for col in coll.columns:
            data = t.columns.get(col.name)
            if data is None:
                continue
            vals = data.values
            if col.kind == "q":
                fv = np.asarray(vals, dtype=float)
                if not np.all(fv == np.round(fv)):
                    raise SchemaError(col.name, "charge/id values must be integral")
                vals = fv.astype(np.int64)
            elif col.kind == "i":
                vals = np.asarray(vals).astype(np.int64)
            elif col.kind == "b":
                vals = np.asarray(vals).astype(bool)
            else:
                vals = np.asarray(vals, dtype=np.float64)
            field_values.append(vals.tolist())
            attrs.append(col.attr)
        cls = coll.cls
        if field_values:
            flat = [cls(**dict(zip(attrs, row))) for row in zip(*field_values)]
        else:
            flat = []
        per_coll[coll.attr] = [tuple(flat[offsets[i]:offsets[i + 1]]) for i in range(n)]
    return [
        Event(meta=metas[i], **{c.attr: per_coll[c.attr][i] for c in COLLECTIONS})
        for i in range(n)
    ]


# --------------------------------------------------------------------------
# per-event records (JSON-lines rows)
# --------------------------------------------------------------------------


def event_to_record(e: Event) -> dict[str, Any]:
    """One event as a mapping of column name to scalar or list."""
    rec: dict[str, Any] = {}
    m = e.meta
    for col in META_COLUMNS:
        rec[col.name] = bool(m.triggers.get(col.attr, False)) if col.kind == "b" else getattr(m, col.attr)
    for coll in COLLECTIONS:
        objs = getattr(e, coll.attr)
        rec[coll.count] = len(objs)
        for col in coll.columns:
            vals = [getattr(o, col.attr) for o in objs]
            if col.optional and (not vals or any(v is None for v in vals)):
                continue
            if col.kind == "q":
                vals = [float(v) for v in vals]
            rec[col.name] = vals
    return rec
