import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import lhcdata.jetclust as jc
from lhcdata.errors import DomainError
from lhcdata.jetclust import ClusterConfig, antikt_cluster, antikt_cluster_reference, jet_observables
from lhcdata.kinematics import from_pt_eta_phi_mass, invariant_mass
from lhcdata.model import PFObject

from oracles import hand_antikt, random_configs, two_particle_expectation

M_50_30_DETA01 = 3.874597290998227


def _sets(jets):
    return {frozenset(j.constituent_indices) for j in jets}


def _pf(charge):
    return PFObject(pt=1.0, eta=0.0, phi=0.0, energy=1.0, charge=charge, mass=0.0,
                    pf_type=211 if charge else 22)


@pytest.fixture(params=["lists", "table"])
def cluster(request, monkeypatch):
    # run every check through both nearest-neighbour paths
    if request.param == "table":
        monkeypatch.setattr(jc, "_SMALL_N", 0)
    return antikt_cluster


def test_single_particle(cluster):
    (j,) = cluster([(12.0, 0.5, 1.0, 0.0)])
    v = from_pt_eta_phi_mass(12.0, 0.5, 1.0, 0.0)
    assert j.constituent_indices == (0,)
    assert j.four_vector.e == pytest.approx(v.e, rel=1e-15)
    assert j.pt == pytest.approx(12.0, rel=1e-15)


def test_close_pair_merges(cluster):
    (j,) = cluster([(50.0, 0.0, 0.0, 0.0), (30.0, 0.1, 0.0, 0.0)], ClusterConfig(0.4))
    s = from_pt_eta_phi_mass(50.0, 0.0, 0.0, 0.0) + from_pt_eta_phi_mass(30.0, 0.1, 0.0, 0.0)
    for f in ("e", "px", "py", "pz"):
        assert getattr(j.four_vector, f) == pytest.approx(getattr(s, f), rel=1e-14)
    assert j.mass == pytest.approx(M_50_30_DETA01, rel=1e-9)


def test_far_pair_splits(cluster):
    jets = cluster([(50.0, 0.0, 0.0, 0.0), (30.0, 1.0, 0.0, 0.0)], ClusterConfig(0.4))
    assert [j.constituent_indices for j in jets] == [(0,), (1,)]


def test_empty_and_bad_input(cluster):
    assert cluster([]) == []
    with pytest.raises(DomainError):
        cluster([(0.0, 0.0, 0.0, 0.0)])
    with pytest.raises(DomainError):
        ClusterConfig(0.0)
    with pytest.raises(DomainError):
        ClusterConfig(0.4, -1.0)


def test_min_jet_pt_filters_after_clustering(cluster):
    pf = [(50.0, 0.0, 0.0, 0.0), (2.0, 2.0, 2.0, 0.0)]
    assert len(cluster(pf, ClusterConfig(0.4, 0.0))) == 2
    assert [j.constituent_indices for j in cluster(pf, ClusterConfig(0.4, 3.0))] == [(0,)]


def test_hand_two_particle_cases(cluster):
    rng = np.random.default_rng(5)
    for cfg in random_configs(rng, 2, 150):
        (pt1, e1, f1, _), (pt2, e2, f2, _) = cfg
        merged = two_particle_expectation(pt1, e1, f1, pt2, e2, f2, 0.4)
        assert (len(cluster(cfg, ClusterConfig(0.4))) == 1) == merged


def test_hand_three_particle_cases(cluster):
    rng = np.random.default_rng(6)
    for cfg in random_configs(rng, 3, 150):
        assert _sets(cluster(cfg, ClusterConfig(0.4))) == hand_antikt(cfg, 0.4)


def test_hard_centre(cluster):
    rng = np.random.default_rng(7)
    for _ in range(20):
        soft = [(float(rng.uniform(0.1, 1.0)), float(rng.uniform(-0.09, 0.09)), float(rng.uniform(-0.09, 0.09)), 0.0)
                for _ in range(10)]
        jets = cluster([(100.0, 0.0, 0.0, 0.0)] + soft, ClusterConfig(0.4))
        assert len(jets) == 1
        assert 0 in jets[0].constituent_indices


def test_infrared_sanity(cluster):
    rng = np.random.default_rng(8)
    for _ in range(20):
        pf = [(float(rng.uniform(5, 50)), float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)), 0.0)
              for _ in range(8)]
        before = cluster(pf, ClusterConfig(0.4))
        after = cluster(pf + [(1e-6, 3.5, 3.0, 0.0)], ClusterConfig(0.4))
        hard = [j for j in after if j.constituent_indices != (len(pf),)]
        assert len(hard) == len(before)
        for a, b in zip(before, hard):
            assert abs(b.pt - a.pt) < 1e-5 * a.pt


def test_ordering_and_ties(cluster):
    pf = [(10.0, 0.0, 0.0, 0.0), (10.0, 2.0, 2.0, 0.0), (20.0, -2.0, -2.0, 0.0)]
    jets = cluster(pf)
    assert [j.constituent_indices for j in jets] == [(2,), (0,), (1,)]


jet_pt = st.floats(0.5, 200.0)
jet_eta = st.floats(-3.0, 3.0)
jet_phi = st.floats(-math.pi, math.pi)
particles = st.lists(st.tuples(jet_pt, jet_eta, jet_phi, st.just(0.0)), min_size=1, max_size=25)


@settings(max_examples=60, deadline=None)
@given(particles, st.floats(0.1, 1.5))
def test_partition(pf, r):
    jets = antikt_cluster(pf, ClusterConfig(r))
    seen = [i for j in jets for i in j.constituent_indices]
    assert sorted(seen) == list(range(len(pf)))
    pts = [j.pt for j in jets]
    assert all(a >= b for a, b in zip(pts, pts[1:]))


@settings(max_examples=60, deadline=None)
@given(particles, st.floats(0.05, 1.5), st.data())
def test_collinear_pair_shares_jet(pf, r, data):
    k = data.draw(st.integers(0, len(pf) - 1))
    twin = (pf[k][0] * 0.5, pf[k][1], pf[k][2], 0.0)
    jets = antikt_cluster(pf + [twin], ClusterConfig(r))
    owner = {i: n for n, j in enumerate(jets) for i in j.constituent_indices}
    assert owner[k] == owner[len(pf)]


@settings(max_examples=40, deadline=None)
@given(particles, st.floats(0.1, 1.5))
def test_fast_paths_match_reference(pf, r):
    ref = antikt_cluster_reference(pf, ClusterConfig(r))
    fast = antikt_cluster(pf, ClusterConfig(r))
    saved = jc._SMALL_N
    jc._SMALL_N = 0
    try:
        table = antikt_cluster(pf, ClusterConfig(r))
    finally:
        jc._SMALL_N = saved
    assert [j.constituent_indices for j in fast] == [j.constituent_indices for j in ref]
    assert [j.constituent_indices for j in table] == [j.constituent_indices for j in ref]


def test_exact_coincidences_resolve_identically():
    grid = [(5.0 + (i % 3), 0.2 * (i % 4), 0.3 * (i % 5), 0.0) for i in range(40)]
    ref = [j.constituent_indices for j in antikt_cluster_reference(grid, ClusterConfig(0.4))]
    assert [j.constituent_indices for j in antikt_cluster(grid, ClusterConfig(0.4))] == ref


def test_jet_observables_counts_and_mass():
    pf = [_pf(1), _pf(-1), _pf(0)]
    j = antikt_cluster([(50.0, 0.0, 0.0, 0.0), (30.0, 0.1, 0.0, 0.0), (5.0, 0.05, 0.05, 0.0)])[0]
    obs = jet_observables(j, pf)
    assert (obs.n_charged, obs.n_neutrals, obs.n_particles, obs.charge) == (2, 1, 3, 0.0)
    (single,) = antikt_cluster([(7.0, 0.3, 0.3, 0.0)])
    assert jet_observables(single, [_pf(0)]).mass == 0.0
    (pair,) = antikt_cluster([(50.0, 0.0, 0.0, 0.0), (30.0, 0.1, 0.0, 0.0)])
    expect = invariant_mass(from_pt_eta_phi_mass(50.0, 0.0, 0.0, 0.0), from_pt_eta_phi_mass(30.0, 0.1, 0.0, 0.0))
    assert jet_observables(pair, [_pf(1), _pf(1)]).mass == pytest.approx(expect, rel=1e-12)
    with pytest.raises(IndexError):
        jet_observables(pair, [_pf(1)])
