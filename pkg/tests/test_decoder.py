from __future__ import annotations

import numpy as np
import pytest

from holosurf import lattice as lt
from holosurf.decoder import (
    Decoder,
    DecodingGraph,
    Event,
    MatchingGraph,
    SyndromeHistory,
    _match_blossom,
    _match_dp,
    build_matching_graph,
    contact_misread_mc,
    contact_vote,
    decide_and_correct,
    detection_events,
    match,
    memory_experiment,
    movement_misdetection_mc,
    movement_vote,
)
from holosurf.noise import NoiseParams, syndrome_round
from holosurf.pauli import PauliOp
from holosurf.tableau import from_lattice


def _patch(L: int = 5):
    lat = lt.build(L)
    return lat, from_lattice(lat), Decoder(lat)


def test_constant_history_has_no_events():
    h = SyndromeHistory([[1, -1, 1]] * 3, ["a", "b", "c"], init_signs=[1, -1, 1])
    assert detection_events(h) == []


def test_data_error_gives_two_events_in_one_round():
    lat = lt.build(5)
    positions = [g.position for g in lat.active_generators()]
    clean, _ = syndrome_round(lat, PauliOp.identity(), NoiseParams(p=0.0))
    dirty, _ = syndrome_round(lat, PauliOp.single(lat.index[(4, 4)], "X"), NoiseParams(p=0.0))
    events = detection_events(SyndromeHistory([clean, clean, dirty, dirty], positions))
    assert len(events) == 2 and {e.round for e in events} == {2}


def test_measurement_flip_gives_events_in_consecutive_rounds():
    rounds = [[1, 1, 1] for _ in range(4)]
    rounds[1][2] = -1
    events = detection_events(SyndromeHistory(rounds, ["a", "b", "c"]))
    assert events == [Event("c", 1), Event("c", 2)]


def test_history_validation():
    with pytest.raises(ValueError):
        SyndromeHistory([[1, 1], [1]], ["a", "b"])
    with pytest.raises(ValueError):
        SyndromeHistory([[1, 0]], ["a", "b"])
    with pytest.raises(ValueError):
        detection_events(SyndromeHistory([], ["a"]))


def test_adjacent_events_match_each_other():
    lat, _, dec = _patch(7)
    nodes = dec.syndrome_nodes(PauliOp.single(lat.index[(6, 6)], "X"), "X")
    assert len(nodes) == 2
    pr = dec.decode_nodes([(v, 0) for v in nodes], "X")
    assert pr.pairs == [(0, 1)] and pr.to_boundary == [] and pr.weight == 1


def test_short_chain_is_recovered():
    lat, tab, dec = _patch(5)
    err = PauliOp.single(lat.index[(4, 4)], "X")
    residual, fails = decide_and_correct(tab, dec.decode_error(err), err)
    assert not any(fails.values())
    assert tab.anticommuting(residual) == []


def test_long_chain_between_boundaries_becomes_logical():
    lat, tab, dec = _patch(5)
    px, _ = lt.patch_logicals(lat)
    middle = px.qubits[1:4]  # three of five, each end one step from a boundary
    err = PauliOp.from_axis(middle, "X")
    pairings = dec.decode_error(err)
    x_pairing = pairings[0]
    assert x_pairing.pairs == [] and len(x_pairing.to_boundary) == 2
    _, fails = decide_and_correct(tab, pairings, err)
    assert any(fails.values())


def test_clean_frame_has_no_failure():
    _, tab, dec = _patch(4)
    residual, fails = decide_and_correct(tab, dec.decode_error(PauliOp.identity()), PauliOp.identity())
    assert residual.is_identity and not any(fails.values())


def test_odd_events_without_boundary_are_infeasible():
    g = MatchingGraph([(0, 0), (1, 0), (2, 0)], [], np.ones((3, 3)), np.zeros((3, 0)))
    with pytest.raises(ValueError):
        match(g)


@pytest.mark.parametrize("k", [12, 14, 16])
def test_blossom_agrees_with_exact_enumeration(k):
    rng = np.random.default_rng(k)
    for _ in range(5):
        pts = rng.integers(0, 10, size=(k, 3))
        w = np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2).astype(float)
        bw = rng.integers(1, 8, size=k).astype(float)
        assert _match_blossom(w, bw)[2] == pytest.approx(_match_dp(w, bw)[2])


def test_space_time_weights_add_round_difference():
    lat = lt.build(5)
    dg = DecodingGraph.from_lattice(lat, "X")
    v = next(i for i in range(dg.n_nodes) if i not in dg.free)
    assert dg.dist[v, dg.free].min() == 1  # next to the boundary
    near = build_matching_graph(dg, [(v, 0), (v, 1)])
    assert near.weights[0, 1] == 1 and match(near).pairs == [(0, 1)]
    far = build_matching_graph(dg, [(v, 0), (v, 3)])
    assert far.weights[0, 1] == 3 and len(match(far).to_boundary) == 2


def test_memory_experiment_without_noise_never_fails():
    assert memory_experiment(3, 0.0, 50, np.random.default_rng(0)) == 0


def test_movement_vote_examples():
    d = 16
    clean = np.ones((d // 4, d // 8), dtype=int)
    assert movement_vote(clean, d).trigger_full_EC is False
    bad = clean.copy()
    bad[2] = -1
    vote = movement_vote(bad, d)
    assert vote.trigger_full_EC and vote.flagged_rows == [2]
    with pytest.raises(ValueError):
        movement_vote(np.ones((3, 3)), d)


def test_contact_vote_examples():
    assert contact_vote([1, 1, 1]) == 1
    assert contact_vote([1, -1, 1]) == 1
    assert contact_vote([-1, -1, 1]) == -1
    for bad in ([1, -1], [], [1, 0, 1]):
        with pytest.raises(ValueError):
            contact_vote(bad)


def test_vote_monte_carlo_reports():
    rng = np.random.default_rng(3)
    mv = movement_misdetection_mc(16, 0.0, 1000, rng)
    assert mv["missed"] == 0 and mv["P_false"] == 0.0 and mv["trials"] == 1000
    cv = contact_misread_mc(12, 0.0, 1000, rng)
    assert cv["wrong"] == 0 and cv["ties"] == 0
    assert contact_misread_mc(12, 1.0, 10, rng)["P_wrong"] == 1.0
