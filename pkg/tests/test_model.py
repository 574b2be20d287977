import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lhcdata.errors import InvalidEvent, SchemaError
from lhcdata.model import (
    COLLECTIONS,
    META_COLUMNS,
    META_WHITELIST,
    Event,
    EventMeta,
    EventTable,
    Jet,
    McTruthParticle,
    Muon,
    PFObject,
    TRIGGERS,
    RaggedArray,
    Tau,
    Vertex,
    event_to_record,
    events_from_table,
    parse_column_name,
    schema_columns,
    table_from_events,
    validate_event,
    validate_record,
    validate_table,
)

# object counts of three recorded collisions: (nPF, nMuon)
SAMPLE_ROW_COUNTS = [(1046, 3), (1820, 4), (1524, 7)]


def _pf(i, n):
    # deterministic filler kinematics in the valid ranges
    eta = -4.0 + 8.0 * (i + 0.5) / n
    phi = -math.pi + 2 * math.pi * ((i * 0.618) % 1.0)
    return PFObject(pt=0.2 + (i % 7) * 0.3, eta=eta, phi=phi, energy=1.0 * math.cosh(eta),
                    charge=(i % 3) - 1, mass=0.0, pf_type=22 if i % 3 == 1 else 211)


def sample_rows_events():
    out = []
    for k, (n_pf, n_mu) in enumerate(SAMPLE_ROW_COUNTS):
        mus = [Muon(pt=1.0 + j, eta=0.1 * j, phi=0.2 * j, charge=1 if j % 2 else -1) for j in range(n_mu)]
        out.append(Event(meta=EventMeta(n_event=k + 1), pf=[_pf(i, n_pf) for i in range(n_pf)],
                         muons=mus, vertices=[Vertex(n_tracks_fit=5)]))
    return out


def test_sample_row_counts_through_table():
    t = table_from_events(sample_rows_events())
    assert t["nPF"].tolist() == [1046, 1820, 1524]
    assert t["nMuon"].tolist() == [3, 4, 7]
    assert t["vecMuon_PT"].lengths().tolist() == [3, 4, 7]
    assert validate_table(t).ok


def test_three_muon_event_is_valid():
    assert validate_event(sample_rows_events()[0]).ok


def test_empty_event_is_valid():
    assert validate_event(Event()).ok
    assert len(validate_event(Event())) == 0


def test_record_count_mismatch_names_column():
    rec = event_to_record(Event(muons=[Muon(1.0, 0.0, 0.0, 1), Muon(2.0, 0.0, 0.0, -1)]))
    rec["vecMuon_PT"] = [1.0, 2.0, 3.0]
    report = validate_record(rec)
    assert not report.ok
    assert [v.path for v in report] == ["vecMuon_PT"]
    assert validate_event(rec).violations == report.violations


@pytest.mark.parametrize("obj, field", [
    (PFObject(pt=-1.0, eta=0, phi=0, energy=1, charge=0, mass=0, pf_type=22), "pt"),
    (PFObject(pt=1.0, eta=0, phi=4.0, energy=1, charge=0, mass=0, pf_type=22), "phi"),
    (PFObject(pt=1.0, eta=11.0, phi=0, energy=1, charge=0, mass=0, pf_type=22), "eta"),
    (PFObject(pt=1.0, eta=0, phi=0, energy=1, charge=2, mass=0, pf_type=22), "charge"),
    (PFObject(pt=1.0, eta=0, phi=0, energy=1, charge=0, mass=0, pf_type=0), "pf_type"),
    (PFObject(pt=1.0, eta=0, phi=0, energy=1, charge=0, mass=0, pf_type=22, jet_num=0), "jet_num"),
    (PFObject(pt=1.0, eta=0, phi=0, energy=1, charge=0, mass=0, pf_type=22, pv_id=1), "pv_id"),
])
def test_pf_violations(obj, field):
    report = validate_event(Event(pf=[obj]))
    assert [v.path for v in report] == [f"pf[0].{field}"]


def test_other_object_violations():
    bad = Event(
        muons=[Muon(1.0, 0.0, 0.0, 0)],
        jets=[Jet(pt=1, eta=0, phi=0, mass=0, energy=1, n_charged=1, n_neutrals=1, n_particles=3,
                  id_quality=3, jec=0.0)],
        mc_truth=[McTruthParticle(pt=1, eta=0, phi=0, mass=0, pdg_id=0, x_1=1.5)],
        taus=[Tau(1.0, 0.0, 0.0, 1, raw_iso_3hits=0.3)],
    )
    paths = {v.path for v in validate_event(bad)}
    assert paths == {"muons[0].charge", "jets[0].n_particles", "jets[0].id_quality", "jets[0].jec",
                     "mc_truth[0].pdg_id", "mc_truth[0].x_1", "taus[0]"}


def test_empty_batch_has_full_column_set():
    t = table_from_events([])
    assert t.n_rows == 0
    assert set(schema_columns()) <= set(t.column_names)
    assert events_from_table(t) == []


def test_invalid_event_refused():
    with pytest.raises(InvalidEvent):
        table_from_events([Event(muons=[Muon(1.0, 0.0, 0.0, 5)])])


def test_table_with_three_muons_rebuilds_one_event():
    ev = sample_rows_events()[0]
    (back,) = events_from_table(table_from_events([ev]))
    assert len(back.muons) == 3
    assert back == ev


def test_missing_column_raises_schema_error():
    t = table_from_events(sample_rows_events()[:1])
    cols = dict(t.columns)
    del cols["vecMuon_Eta"]
    with pytest.raises(SchemaError) as exc:
        events_from_table(EventTable(cols, t.n_rows))
    assert exc.value.column == "vecMuon_Eta"


def test_optional_tau_columns():
    taus = [Tau(5.0, 0.1, 0.2, 1, 0.1, 0.2, 0.3, 0.4)]
    t = table_from_events([Event(taus=taus)])
    assert "vecTau_RawIso3Hits" in t
    assert events_from_table(t)[0].taus == tuple(taus)
    t2 = table_from_events([Event(taus=[Tau(5.0, 0.1, 0.2, 1)])])
    assert "vecTau_RawIso3Hits" not in t2
    assert validate_table(t2).ok


def test_naming_convention_total():
    t = table_from_events(sample_rows_events())
    bare = {"nEvent", "runNum", "evtNum", "lumisection"}
    for name in t.column_names:
        if name in META_WHITELIST:
            assert name in bare or name.startswith("HLT_")
            continue
        parsed = parse_column_name(name)
        assert parsed is not None, name
        assert parsed[0] in ("n", "f", "vec")
    assert parse_column_name("vecMuon_PT") == ("vec", "Muon", "PT")
    assert parse_column_name("fMET_PT") == ("f", "MET", "PT")
    assert parse_column_name("nPF") == ("n", "PF", "")
    assert parse_column_name("bogus") is None


def test_unknown_columns_warn_not_fail():
    t = table_from_events(sample_rows_events()[:2])
    cols = dict(t.columns)
    cols["vecMuon_Extra"] = RaggedArray.from_lists([[1.0] * 3, [2.0] * 4])
    cols["weird"] = np.zeros(2)
    report = validate_table(EventTable(cols, 2))
    assert report.ok
    assert len(report.warnings) == 2
    cols["vecMuon_Extra"] = RaggedArray.from_lists([[1.0] * 3, [2.0] * 3])
    assert [v.path for v in validate_table(EventTable(cols, 2))] == ["vecMuon_Extra"]


def test_ragged_array_basics():
    r = RaggedArray.from_lists([[1, 2], [], [3]], dtype=np.int64)
    assert r.lengths().tolist() == [2, 0, 1]
    assert r.to_lists() == [[1, 2], [], [3]]
    assert r.take([2, 0]).to_lists() == [[3], [1, 2]]
    with pytest.raises(ValueError):
        RaggedArray([1, 2], [0.0])
    with pytest.raises(SchemaError):
        EventTable({"x": np.zeros(3)}, 2)


def test_charges_stored_as_floats():
    t = table_from_events([Event(muons=[Muon(1.0, 0.0, 0.0, -1)])])
    assert t["vecMuon_Q"].values.dtype == np.float64
    assert events_from_table(t)[0].muons[0].charge == -1
    cols = dict(t.columns)
    cols["vecMuon_Q"] = RaggedArray([0, 1], [0.5])
    with pytest.raises(SchemaError):
        events_from_table(EventTable(cols, 1))


# fuzzed round-trips ---------------------------------------------------------

_f = st.floats(-50.0, 50.0, allow_nan=False, width=64)
_pos = st.floats(0.0, 1e3)
_phi = st.floats(-math.pi, math.pi)
_eta = st.floats(-10.0, 10.0)

muon_st = st.builds(Muon, pt=_pos, eta=_eta, phi=_phi, charge=st.sampled_from([-1, 1]),
                    pt_err=_pos, trk_iso03=_pos, ecal_iso03=_pos, hcal_iso03=_pos)
vertex_st = st.builds(Vertex, n_tracks_fit=st.integers(0, 100), ndof=_pos, chi2=_pos, x=_f, y=_f, z=_f)
truth_st = st.builds(McTruthParticle, pt=_pos, eta=_eta, phi=_phi, mass=_pos,
                     pdg_id=st.sampled_from([13, -13, 14, 21, 2]), x_1=st.floats(0, 1), x_2=st.just(-1.0))


@st.composite
def events(draw):
    vtx = draw(st.lists(vertex_st, max_size=3))
    n_jets = draw(st.integers(0, 2))
    jets = [Jet(pt=draw(_pos), eta=draw(_eta), phi=draw(_phi), mass=0.0, energy=draw(_pos),
                n_charged=1, n_neutrals=0, n_particles=1, id_quality=draw(st.integers(0, 2)))
            for _ in range(n_jets)]
    pf = [PFObject(pt=draw(_pos), eta=draw(_eta), phi=draw(_phi), energy=draw(_pos),
                   charge=draw(st.sampled_from([-1, 0, 1])), mass=0.0,
                   pf_type=draw(st.sampled_from([22, 211, -211, 13])),
                   pv_id=draw(st.integers(-1, len(vtx) - 1)), jet_num=draw(st.integers(-1, n_jets - 1)))
          for _ in range(draw(st.integers(0, 4)))]
    meta = EventMeta(n_event=draw(st.integers(1, 10 ** 6)), met_pt=draw(_pos), met_phi=draw(_phi),
                     triggers={t: draw(st.booleans()) for t in TRIGGERS})
    return Event(meta=meta, pf=pf, muons=draw(st.lists(muon_st, max_size=3)), vertices=vtx,
                 mc_truth=draw(st.lists(truth_st, max_size=3)), jets=jets)


@settings(max_examples=60, deadline=None)
@given(st.lists(events(), max_size=5))
def test_round_trip_exact(evs):
    assert all(validate_event(e).ok for e in evs)
    assert events_from_table(table_from_events(evs)) == evs


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=6), st.data())
def test_validation_rejects_exactly_count_mismatches(counts, data):
    evs = [Event(muons=[Muon(1.0, 0.0, 0.0, 1)] * n) for n in counts]
    t = table_from_events(evs)
    cols = dict(t.columns)
    new_counts = data.draw(st.lists(st.integers(0, 4), min_size=len(counts), max_size=len(counts)))
    cols["nMuon"] = np.array(new_counts, dtype=np.int64)
    report = validate_table(EventTable(cols, len(counts)))
    assert report.ok == (new_counts == counts)
    if not report.ok:
        assert all(v.path.startswith("vecMuon_") for v in report)


def test_meta_columns_present():
    t = table_from_events([Event()])
    for c in META_COLUMNS:
        assert c.name in t
    for coll in COLLECTIONS:
        assert t[coll.count].tolist() == [0]
