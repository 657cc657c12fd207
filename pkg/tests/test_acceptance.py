"""Acceptance checks. Each test prints one PASS/FAIL line through the ``verdict`` fixture."""

from __future__ import annotations

import itertools
import math
import time

import numpy as np
import pytest
from scipy.special import beta as beta_fn
from scipy.stats import binomtest

from holosurf import lattice as lt
from holosurf.analysis import RateQuery, ResourceQuery, adiabatic_budget, estimate_resources, logical_rate
from holosurf.decoder import (
    Decoder,
    MatchingGraph,
    decide_and_correct,
    match,
    memory_experiment,
    movement_misdetection_mc,
)
from holosurf.deformation import check_parallel, check_validity, enlarge_hole, execute, expand_hole
from holosurf.noise import effective_error, propagate
from holosurf.oracle import (
    DenseSystem,
    SchedulePolicy,
    adiabatic_error,
    clifford_prediction,
    error_prediction,
    fidelity,
    ground_state,
    integrate,
    stabilizer_chain,
)
from holosurf.pauli import PauliOp, multiply, product
from holosurf.protocols import RM15, STEANE, decode_z_errors, output_error_rate, parity_check_route, weight3_coefficient
from holosurf.scenarios import braid_report, braid_setup, enlargement_square, movement_rows, tall_hole
from holosurf.tableau import apply_rotation, equivalent, from_lattice, toggle_generator

# -- tolerances -----------------------------------------------------------------------

TABLE_RUNTIME_S = 1.0
BRAID_RUNTIME_S = 10.0
RATE_WINDOW = (5e-9, 2e-8)
FORMULA_RUNTIME_S = 1.0
EVOLUTION_MIN_FIDELITY = 1 - 1e-3
ERROR_RUN_MIN_FIDELITY = 1 - 1e-2
ORACLE_RUNTIME_S = 300.0
MATCH_INSTANCES = 1000
MATCH_MAX_EVENTS = 8
DECODER_RUNTIME_S = 120.0
MEMORY_TRIALS = 100_000
MEMORY_P = 1e-3
MEMORY_CONFIDENCE = 0.95
MEMORY_RUNTIME_S = 600.0
DISTILL_PS = (1e-2, 3e-3, 1e-3)
DISTILL_SLOPE = (3.0, 0.3)
DISTILL_RUNTIME_S = 300.0
VOTE_DS = (16, 32, 48)
VOTE_PS = (0.05, 0.1, 0.2)
VOTE_TRIALS = 2_000_000
VOTE_SLOPE_TOL = 0.5
VOTE_RUNTIME_S = 600.0


# -- 1: rotation sequence on the enlargement tableau ------------------------------------

def _enlargement_columns():
    sc = enlargement_square()
    lat, tab = sc.lat, sc.tab
    Zc = {k: lat.generator(sc.extra[c]).op() for k, c in (("s1", "s1"), ("s2", "p2"), ("s3", "p3"), ("s4", "p4"))}
    x = {k: sc.op({k: "X"}) for k in (1, 2, 4)}
    # the final column's third pinned qubit is the hole/p4 edge, label 4
    expected = [
        ([Zc["s1"]], [Zc["s2"], Zc["s3"], Zc["s4"]]),
        ([Zc["s1"], Zc["s2"]], [x[1], Zc["s3"], Zc["s4"]]),
        ([Zc["s1"], Zc["s2"], Zc["s3"]], [x[1], x[2], Zc["s4"]]),
        ([Zc["s1"], Zc["s2"], Zc["s3"], Zc["s4"]], [x[1], x[2], x[4]]),
    ]
    qs = [
        sc.op({1: "Y", 2: "Z", 5: "Z", 6: "Z"}),
        sc.op({2: "Y", 3: "Z", 7: "Z", 8: "Z"}),
        sc.op({4: "Y", 3: "Z", 9: "Z", 10: "Z"}),
    ]
    return sc, tab, expected, qs


def _column_matches(tab, xl0, l1_parts, stabs) -> list[str]:
    problems = []
    lp = tab.logical("a")
    l1 = product(l1_parts)
    for s in stabs:
        if tab.find(s) is None:
            problems.append(f"missing generator {s}")
    # L1: tracked logical times pinned single-qubit generators on its X part equals the product exactly
    pinned = [PauliOp.single(q, "X") for q, a in lp.Z.support.items() if a in "XY" and tab.find(PauliOp.single(q, "X")) is not None]
    if not multiply(lp.Z, product(pinned)).same_up_to_phase(l1):
        problems.append(f"L1 {lp.Z} is not {l1} times pinned generators")
    if not equivalent(tab, lp.Z, l1):
        problems.append("L1 not equivalent modulo stabilizers")
    if lp.X != xl0:
        problems.append(f"L2 changed to {lp.X}")
    return problems


def test_criterion_1_table_columns(verdict):
    t0 = time.perf_counter()
    sc, tab, expected, qs = _enlargement_columns()
    xl0 = tab.logical("a").X
    problems = _column_matches(tab, xl0, *expected[0])
    for q, col in zip(qs, expected[1:]):
        apply_rotation(tab, q)
        problems += _column_matches(tab, xl0, *col)
    elapsed = time.perf_counter() - t0
    ok = not problems and elapsed < TABLE_RUNTIME_S
    verdict("1", ok, f"4 columns, problems={problems or 'none'}, {elapsed:.3f}s < {TABLE_RUNTIME_S}s")


# -- 2: braid ---------------------------------------------------------------------------------

def test_criterion_2_braid_cnot(verdict):
    t0 = time.perf_counter()
    report = braid_report(braid_setup(18, 8))
    elapsed = time.perf_counter() - t0
    got = {r["logical"]: r["ok"] for r in report["mappings"]}
    ok = report["ok"] and len(got) == 4 and report["winding"] == 1 and elapsed < BRAID_RUNTIME_S
    verdict("2", ok, f"mappings={got}, winding={report['winding']}, {elapsed:.2f}s < {BRAID_RUNTIME_S}s")


# -- 3: propagation products --------------------------------------------------------------------

def test_criterion_3a_enlargement_error(verdict):
    sc = enlargement_square()
    start = len(sc.tab.history)
    steps = enlarge_hole(sc.lat, sc.defects["a"], 8)
    q1 = sc.op({1: "Y", 2: "Z", 5: "Z", 6: "Z"})
    assert q1 in steps[0].rotations
    execute(sc.tab, steps[:1], sc.lat)
    moved = propagate(sc.op({1: "Z"}), sc.tab.history, start)
    target = sc.op({1: "X", 2: "Z", 5: "Z", 6: "Z"})
    eff = effective_error(sc.tab, moved)
    ok = moved.same_up_to_phase(target) and eff == sc.op({2: "Z", 5: "Z", 6: "Z"})
    verdict("3a", ok, f"sigma_z1 -> {moved} (expected {target} up to sign), effective {eff}")


def test_criterion_3b_movement_products(verdict):
    results = {}
    for axis in ("Z", "X"):
        sc = movement_rows()
        start = len(sc.tab.history)
        execute(sc.tab, expand_hole(sc.lat, sc.defects["a"], "right", 2), sc.lat)
        moved = propagate(sc.op({1: axis, 2: axis}), sc.tab.history, start)
        results[axis] = (effective_error(sc.tab, moved), sc)
    ez, sc = results["Z"]
    ex, _ = results["X"]
    want_z = sc.op({k: "Z" for k in range(3, 13)})
    want_x = sc.op({k: "Z" for k in range(1, 13)})
    ok = ez == want_z and ex == want_x
    verdict("3b", ok, f"ZZ -> weight {ez.weight} all-Z={ez == want_z}; XX -> weight {ex.weight} all-Z={ex == want_x}")


# -- 4: closed forms -------------------------------------------------------------------------------

def test_criterion_4_rate_and_resources(verdict):
    t0 = time.perf_counter()
    rate = logical_rate(RateQuery(d=11, m=1e8, p=1e-3, cbJ=12))
    r1 = estimate_resources(ResourceQuery(M=1e14, delta=0.1, p=1e-3, cbJ=12, m_grid=(1e8,)))
    r2 = estimate_resources(ResourceQuery(M=1e14, delta=0.1, p=1e-3, cbJ=15, m_grid=(1e10,)))
    elapsed = time.perf_counter() - t0
    ok = (
        RATE_WINDOW[0] <= rate <= RATE_WINDOW[1]
        and (r1.d, r1.n_tot) == (11, 441)
        and (r2.d, r2.n_tot) == (7, 169)
        and elapsed < FORMULA_RUNTIME_S
    )
    verdict("4", ok, f"rate={rate:.4e} in {RATE_WINDOW}, estimates ({r1.d},{r1.n_tot}) ({r2.d},{r2.n_tot}), {elapsed:.3f}s")


# -- 5, 6: dense oracle ------------------------------------------------------------------------

def _budget_time(order: int, gap: float = 2.0) -> float:
    fmax = math.pi / 4 * 0.25**order / beta_fn(order + 1, order + 1)
    return adiabatic_budget(1.0, order, 2 * fmax, gap)["T_q"]


def test_criterion_5_evolution_matches_rotations(verdict):
    t0 = time.perf_counter()
    sys_ = stabilizer_chain()
    psi0 = ground_state(sys_, seed=1)
    point = adiabatic_error(sys_, SchedulePolicy(_budget_time(4), 4, 0.01), psi0)
    deltas = [adiabatic_error(sys_, SchedulePolicy(math.pi * 2**k, 4, 0.01), psi0).delta for k in range(5)]
    monotone = all(b < a for a, b in zip(deltas, deltas[1:]))
    elapsed = time.perf_counter() - t0
    ok = point.fidelity >= EVOLUTION_MIN_FIDELITY and monotone and elapsed < ORACLE_RUNTIME_S
    verdict("5", ok, f"fidelity={point.fidelity:.9f} >= {EVOLUTION_MIN_FIDELITY}, deltas={[f'{d:.2e}' for d in deltas]}, {elapsed:.1f}s")


def test_criterion_6_error_propagation_in_evolution(verdict):
    t0 = time.perf_counter()
    base = stabilizer_chain()
    sys_ = DenseSystem(base.n, base.terms, [[PauliOp.parse("X0")], [PauliOp.parse("X3")]])
    psi0 = ground_state(sys_, seed=1)
    sched = SchedulePolicy(_budget_time(4), 4, 0.01)
    fids = {}
    for name in ("X1", "Z0", "Z1", "Y2", "X0", "Z3"):
        err = (1, PauliOp.parse(name))
        fids[name] = fidelity(error_prediction(sys_, psi0, err), integrate(sys_, sched, psi0, err))
    elapsed = time.perf_counter() - t0
    ok = min(fids.values()) >= ERROR_RUN_MIN_FIDELITY and elapsed < ORACLE_RUNTIME_S
    verdict("6", ok, f"min fidelity={min(fids.values()):.9f} >= {ERROR_RUN_MIN_FIDELITY} over {sorted(fids)}, {elapsed:.1f}s")


# -- 7: validity checks ------------------------------------------------------------------------

def test_criterion_7_validity(verdict):
    sc = tall_hole(L=12, height=4, width=2)
    tab, lat = sc.tab, sc.lat
    colA, colC = sc.extra["colA"], sc.extra["colC"]
    X = lambda k: sc.op({k: "X"})  # noqa: E731
    expansion = [multiply(X(l), lat.generator(colC[l - 1]).op()).scaled(1j) for l in range(1, 5)]
    parallel_ok = check_parallel(tab, expansion)
    for q in expansion:
        apply_rotation(tab, q)
    q5 = multiply(lat.generator(colA[0]).op(), X(5)).scaled(1j)
    before = check_validity(tab, q5)
    for k in (9, 10, 11):
        toggle_generator(tab, X(k), True)
    for k in (12, 13, 14):
        toggle_generator(tab, X(k), False)
    after = check_validity(tab, q5)
    ok = (before.odd_count, before.valid, after.odd_count, after.valid, parallel_ok) == (2, False, 1, True, True)
    verdict("7", ok, f"before swap count={before.odd_count}, after count={after.odd_count}, parallel={parallel_ok}")


# -- 8: decoder ----------------------------------------------------------------------------------

def _brute_force_matching(w: np.ndarray, bw: np.ndarray) -> float:
    """Enumerate every pairing in which each node pairs with another node or the boundary."""
    def best(nodes: tuple[int, ...]) -> float:
        if not nodes:
            return 0.0
        first, rest = nodes[0], nodes[1:]
        out = bw[first] + best(rest)
        for i, other in enumerate(rest):
            out = min(out, w[first, other] + best(rest[:i] + rest[i + 1:]))
        return out

    return best(tuple(range(len(bw))))


def test_criterion_8a_matching_optimal(verdict):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    agree = 0
    for _ in range(MATCH_INSTANCES):
        k = int(rng.integers(1, MATCH_MAX_EVENTS + 1))
        pts = rng.integers(0, 12, size=(k, 3))
        w = np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2).astype(float)
        bw = rng.integers(1, 10, size=(k, 2)).astype(float)
        g = MatchingGraph([(i, 0) for i in range(k)], [0, 1], w, bw)
        got = match(g).weight
        agree += math.isclose(got, _brute_force_matching(w, bw.min(axis=1)))
    elapsed = time.perf_counter() - t0
    verdict("8a", agree == MATCH_INSTANCES and elapsed < DECODER_RUNTIME_S, f"{agree}/{MATCH_INSTANCES} optimal, {elapsed:.1f}s")


def _exhaustive_failures(L: int, max_weight: int) -> tuple[int, int]:
    lat = lt.build(L)
    tab = from_lattice(lat)
    dec = Decoder(lat)
    bad = total = 0
    for w in range(1, max_weight + 1):
        for qs in itertools.combinations(range(lat.n_qubits), w):
            for axes in itertools.product("XYZ", repeat=w):
                err = PauliOp(dict(zip(qs, axes)))
                _, fails = decide_and_correct(tab, dec.decode_error(err), err)
                bad += any(fails.values())
                total += 1
    return bad, total


@pytest.mark.xfail(strict=True, reason="an L=4 patch has distance 4; some weight-2 errors share a syndrome with a logically distinct weight-2 error")
def test_criterion_8b_exhaustive_weight2_L4(verdict):
    t0 = time.perf_counter()
    bad, total = _exhaustive_failures(4, 2)
    elapsed = time.perf_counter() - t0
    verdict("8b", bad == 0 and elapsed < DECODER_RUNTIME_S, f"L=4 weight<=2: {bad}/{total} logical failures, {elapsed:.1f}s")


def test_criterion_8b_witness_ambiguous_pair():
    """Two weight-2 errors with equal syndromes whose product is a logical: no decoder corrects both."""
    lat = lt.build(4)
    tab = from_lattice(lat)
    px, pz = lt.patch_logicals(lat)
    assert pz.weight == 4
    half = pz.qubits[:2], pz.qubits[2:]
    e1, e2 = PauliOp.from_axis(half[0], "Z"), PauliOp.from_axis(half[1], "Z")
    both = multiply(e1, e2)
    assert tab.anticommuting(both) == []  # same syndrome
    assert not both.commutes(px)  # logically distinct


def test_criterion_8b_achievable_cases():
    assert _exhaustive_failures(4, 1)[0] == 0
    assert _exhaustive_failures(5, 2)[0] == 0


# -- 9: memory Monte Carlo ----------------------------------------------------------------

@pytest.mark.slow
def test_criterion_9_memory(verdict):
    t0 = time.perf_counter()
    fails = {}
    for L in (3, 5):
        fails[L] = sum(
            memory_experiment(L, MEMORY_P, MEMORY_TRIALS, np.random.default_rng([9, L, i]), axis=axis)
            for i, axis in enumerate("XZ")
        )
    # equal trial counts: conditional on the total, failures at L=3 are Binomial(total, 1/2) under equal rates
    total = fails[3] + fails[5]
    pval = binomtest(fails[3], total, 0.5, alternative="greater").pvalue if total else 1.0
    elapsed = time.perf_counter() - t0
    ok = fails[5] < fails[3] and pval < 1 - MEMORY_CONFIDENCE and elapsed < MEMORY_RUNTIME_S
    verdict("9", ok, f"failures d=3: {fails[3]}, d=5: {fails[5]} over {2 * MEMORY_TRIALS} trials each, one-sided p={pval:.2e}, {elapsed:.1f}s")


# -- 10: distillation ------------------------------------------------------------------------

def test_criterion_10_distillation(verdict):
    t0 = time.perf_counter()
    details = []
    ok = True
    for code in (STEANE, RM15):
        for i in range(code.n):
            e = np.zeros(code.n, dtype=np.uint8)
            e[i] = 1
            ok &= not decode_z_errors(code, e)[0] and not parity_check_route(code, e)[0]
        outs = [output_error_rate(code, p)[0] for p in DISTILL_PS]
        slope, icpt = np.polyfit(np.log(DISTILL_PS), np.log(outs), 1)
        coeff = weight3_coefficient(code)
        low_ratio = outs[-1] / (coeff * DISTILL_PS[-1] ** 3)
        ok &= abs(slope - DISTILL_SLOPE[0]) <= DISTILL_SLOPE[1] and abs(low_ratio - 1) < 0.1
        details.append(f"{code.name}: {code.n} weight-1 rejected, slope={slope:.3f}, weight-3 count={coeff}, ratio={low_ratio:.3f}")
    elapsed = time.perf_counter() - t0
    verdict("10", ok and elapsed < DISTILL_RUNTIME_S, "; ".join(details) + f", {elapsed:.1f}s")


# -- 11: majority votes -----------------------------------------------------------------

@pytest.mark.slow
def test_criterion_11_vote_exponents(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    slopes = {}
    for d in VOTE_DS:
        probs = [movement_misdetection_mc(d, p, VOTE_TRIALS, rng)["P_row_miss"] for p in VOTE_PS]
        slopes[d] = float(np.polyfit(np.log(VOTE_PS), np.log(probs), 1)[0])
    elapsed = time.perf_counter() - t0
    ok = all(abs(slopes[d] - (d // 16 + 1)) <= VOTE_SLOPE_TOL for d in VOTE_DS) and elapsed < VOTE_RUNTIME_S
    verdict("11", ok, f"slopes {({d: round(s, 2) for d, s in slopes.items()})} vs floor(d/16)+1 +- {VOTE_SLOPE_TOL}, {elapsed:.1f}s")
