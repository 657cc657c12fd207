from __future__ import annotations

import math

import numpy as np
import pytest

from holosurf import lattice as lt
from holosurf.deformation import DeformationStep, enlarge_hole
from holosurf.noise import (
    ErrorEvent,
    NoiseParams,
    error_rates,
    events_from_csv,
    events_to_csv,
    events_to_frame,
    propagate,
    sample_thermal,
    syndrome_round,
)
from holosurf.pauli import PauliOp, commutes, multiply
from holosurf.scenarios import enlargement_square
from holosurf.tableau import from_lattice


def _shared_qubit_lattice():
    """Two neighbouring stars switched off; the qubit between them borders both."""
    lat = lt.build(8)
    for pos in ((3, 4), (3, 6)):
        lat.set_active(pos, False)
    return lat, lat.index[(3, 5)]


def test_infinite_gap_gives_no_events():
    lat = lt.build(5)
    tab = from_lattice(lat)
    assert sample_thermal(NoiseParams(cbJ=math.inf, p=0.0), tab, 50, np.random.default_rng(0), lat) == []


def test_bulk_and_shared_qubit_rates():
    cbJ = 3.0
    lat = lt.build(8)
    rates, counts = error_rates(NoiseParams(cbJ=cbJ), from_lattice(lat), lat)
    q = lat.index[(6, 6)]
    assert counts[q, 1] == 2 and rates[q, 1] == pytest.approx(math.exp(-2 * cbJ))
    lat, q = _shared_qubit_lattice()
    rates, counts = error_rates(NoiseParams(cbJ=cbJ), from_lattice(lat), lat)
    assert counts[q, 0] == 2 and rates[q, 0] == pytest.approx(math.exp(-4 * cbJ))
    assert counts[q, 1] == 0 and rates[q, 1] == 0.001  # no gap protects sigma_z there


def test_single_flip_next_to_hole_costs_2j():
    sc = enlargement_square()
    rates, counts = error_rates(NoiseParams(cbJ=3.0), sc.tab, sc.lat)
    hole = sc.defects["a"].holes[0]
    edge = sorted(sc.lat.hole_boundary(hole))
    assert all(counts[q, 0] == 1 for q in edge)
    assert all(rates[q, 0] == pytest.approx(math.exp(-6.0)) for q in edge)


def test_empirical_bulk_rate_within_three_sigma():
    cbJ, trials = 3.0, 10**6
    rate = math.exp(-2 * cbJ)
    lat = lt.build(8)
    q = lat.index[(6, 6)]
    rates, _ = error_rates(NoiseParams(cbJ=cbJ), from_lattice(lat), lat)
    hits = (np.random.default_rng(1).random(trials) < rates[q, 1]).sum()
    sigma = math.sqrt(trials * rate * (1 - rate))
    assert abs(hits - trials * rate) < 3 * sigma


def test_sampled_events_carry_their_class():
    lat = lt.build(4)
    events = sample_thermal(NoiseParams(cbJ=0.5, p=0.0), from_lattice(lat), 20, np.random.default_rng(2), lat)
    assert events and all(e.gap_class == "bulk-2J" for e in events)


def test_noiseless_round_reports_trivial_syndrome():
    lat = lt.build(5)
    signs, frame = syndrome_round(lat, PauliOp.identity(), NoiseParams(p=0.0))
    assert set(signs) == {1} and frame.is_identity


def test_single_x_flips_two_plaquettes():
    lat = lt.build(6)
    err = PauliOp.single(lat.index[(4, 4)], "X")
    signs, frame = syndrome_round(lat, err, NoiseParams(p=0.0))
    flipped = [g for g, s in zip(lat.active_generators(), signs) if s == -1]
    assert len(flipped) == 2 and {g.kind for g in flipped} == {"Z"}
    assert frame == err


def test_csv_roundtrip():
    events = [ErrorEvent(0, 3, "X", "bulk-2J"), ErrorEvent(2, 7, "Z", "boundary-4J")]
    assert events_from_csv(events_to_csv(events)) == events
    assert events_to_frame(events, upto_step=0) == PauliOp.single(3, "X")


@pytest.mark.parametrize(
    "text",
    ["", "a,b,c,d\n", "step,qubit,axis,gap_class\n0,1,W,bulk-2J\n", "step,qubit,axis,gap_class\n0,1,X,hot\n"],
)
def test_malformed_csv_is_rejected(text):
    with pytest.raises(ValueError):
        events_from_csv(text)


def test_invalid_parameters_are_rejected():
    for kwargs in ({"cbJ": -1}, {"p": 2}, {"m": 0}):
        with pytest.raises(ValueError):
            NoiseParams(**kwargs)


def test_propagation_of_commuting_error_is_unchanged():
    sc = enlargement_square()
    q1 = sc.op({1: "Y", 2: "Z", 5: "Z", 6: "Z"})
    history = [DeformationStep((q1,))]
    err = PauliOp.single(sc.labels[7], "Z")
    assert commutes(err, q1) and propagate(err, history) == err
    with pytest.raises(ValueError):
        propagate(err, history, 2)


def test_propagation_is_a_homomorphism():
    sc = enlargement_square()
    history = enlarge_hole(sc.lat, sc.defects["a"], 8)
    a, b = sc.op({1: "Z"}), sc.op({2: "X", 5: "Z"})
    lhs = propagate(multiply(a, b), history)
    assert lhs.same_up_to_phase(multiply(propagate(a, history), propagate(b, history)))

