"""Space-time minimum-weight matching decoder and the majority-vote detectors."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from .lattice import OTHER, Lattice, _string_graph
from .pauli import PauliOp, commutes, multiply
from .tableau import Tableau

BRUTE_FORCE_LIMIT = 10


@dataclass
class SyndromeHistory:
    rounds: list[list[int]]
    positions: list
    init_signs: list[int] | None = None

    def __post_init__(self):
        for r in self.rounds:
            if len(r) != len(self.positions):
                raise ValueError("every round must report every generator")
            if any(s not in (1, -1) for s in r):
                raise ValueError("signs must be +1 or -1")


@dataclass(frozen=True)
class Event:
    position: tuple
    round: int


def detection_events(h: SyndromeHistory) -> list[Event]:
    """(position, round) wherever a reported sign differs from the previous round."""
    if not h.rounds:
        raise ValueError("history needs at least one round")
    prev = h.init_signs if h.init_signs is not None else [1] * len(h.positions)
    out = []
    for t, cur in enumerate(h.rounds):
        for i, (a, b) in enumerate(zip(prev, cur)):
            if a != b:
                out.append(Event(h.positions[i], t))
        prev = cur
    return out


# -- spatial decoding graph ---------------------------------------------------

@dataclass
class DecodingGraph:
    """Graph whose vertices are generators detecting ``axis`` errors.

    Edges are data qubits; free vertices (patch boundaries and holes) act as
    boundary nodes.
    """

    axis: str
    n_nodes: int
    edges: list
    free: list[int]
    node_of: dict
    dist: np.ndarray
    pred: np.ndarray
    edge_qubit: dict

    @classmethod
    def from_lattice(cls, lat: Lattice, axis: str) -> DecodingGraph:
        n_nodes, edges, free, node_of, _ = _string_graph(lat, axis)
        rows = [a for _, a, b in edges] + [b for _, a, b in edges]
        cols = [b for _, a, b in edges] + [a for _, a, b in edges]
        g = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()
        dist, pred = shortest_path(g, unweighted=True, return_predecessors=True)
        edge_qubit = {}
        for q, a, b in edges:
            edge_qubit.setdefault((a, b), q)
            edge_qubit.setdefault((b, a), q)
        return cls(axis, n_nodes, edges, free, node_of, dist, pred, edge_qubit)

    def path_qubits(self, a: int, b: int) -> list[int]:
        out = []
        cur = b
        while cur != a:
            prev = int(self.pred[a, cur])
            if prev < 0:
                raise ValueError("nodes are disconnected")
            out.append(self.edge_qubit[(prev, cur)])
            cur = prev
        return out

    def check_matrix(self, n_qubits: int) -> tuple[np.ndarray, list[int]]:
        """Dense parity-check matrix restricted to constrained (non-free) nodes."""
        cons = [v for v in range(self.n_nodes) if v not in self.free]
        row = {v: i for i, v in enumerate(cons)}
        H = np.zeros((len(cons), n_qubits), dtype=np.uint8)
        for q, a, b in self.edges:
            for v in (a, b):
                if v in row:
                    H[row[v], q] ^= 1
        return H, cons


@dataclass
class MatchingGraph:
    nodes: list[tuple[int, int]]  # (graph vertex, round)
    boundary: list[int]
    weights: np.ndarray
    bweights: np.ndarray

    def to_json(self) -> str:
        return json.dumps(
            {
                "nodes": [list(n) for n in self.nodes],
                "boundary": list(self.boundary),
                "weights": self.weights.tolist(),
                "boundary_weights": self.bweights.tolist(),
            }
        )


@dataclass
class Pairing:
    pairs: list[tuple[int, int]]
    to_boundary: list[tuple[int, int]]  # (node index, boundary index)
    weight: float
    correction: PauliOp = field(default_factory=PauliOp.identity)

    def to_json(self) -> str:
        return json.dumps({"pairs": self.pairs, "to_boundary": self.to_boundary, "weight": self.weight})


def build_matching_graph(dg: DecodingGraph, nodes: list[tuple[int, int]]) -> MatchingGraph:
    """Unit-weight space-time distances: spatial graph distance plus round difference."""
    k = len(nodes)
    v = np.array([n[0] for n in nodes], dtype=int)
    t = np.array([n[1] for n in nodes], dtype=float)
    w = dg.dist[np.ix_(v, v)] + np.abs(t[:, None] - t[None, :]) if k else np.zeros((0, 0))
    bw = dg.dist[np.ix_(v, dg.free)] if k else np.zeros((0, len(dg.free)))
    return MatchingGraph(list(nodes), list(dg.free), w, bw)


def match(g: MatchingGraph) -> Pairing:
    """Exact minimum-weight matching with free boundary absorption."""
    k = len(g.nodes)
    if k == 0:
        return Pairing([], [], 0.0)
    if not g.boundary and k % 2:
        raise ValueError("odd number of events and no boundary")
    bw = g.bweights.min(axis=1) if g.boundary else np.full(k, np.inf)
    bidx = g.bweights.argmin(axis=1) if g.boundary else np.zeros(k, dtype=int)
    if k <= BRUTE_FORCE_LIMIT:
        pairs, tob, total = _match_dp(g.weights, bw)
    else:
        pairs, tob, total = _match_blossom(g.weights, bw)
    if not np.isfinite(total):
        raise ValueError("matching graph is infeasible")
    return Pairing(pairs, [(i, int(bidx[i])) for i in tob], float(total))


def _match_dp(w: np.ndarray, bw: np.ndarray):
    k = len(bw)
    full = (1 << k) - 1
    best = {0: (0.0, None)}

    def solve(mask: int) -> float:
        if mask in best:
            return best[mask][0]
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        cand = (bw[i] + solve(rest), (i, None))
        j_mask = rest
        while j_mask:
            j = (j_mask & -j_mask).bit_length() - 1
            j_mask &= j_mask - 1
            c = w[i, j] + solve(rest & ~(1 << j))
            if c < cand[0]:
                cand = (c, (i, j))
        best[mask] = cand
        return cand[0]

    total = solve(full)
    pairs, tob = [], []
    mask = full
    while mask:
        _, (i, j) = best[mask]
        if j is None:
            tob.append(i)
            mask &= ~(1 << i)
        else:
            pairs.append((i, j))
            mask &= ~((1 << i) | (1 << j))
    return pairs, tob, total


def _match_blossom(w: np.ndarray, bw: np.ndarray):
    k = len(bw)
    G = nx.Graph()
    finite = [x for x in list(w[np.isfinite(w)]) + list(bw[np.isfinite(bw)])]
    big = (max(finite) if finite else 0.0) * 2 + 10.0
    for i in range(k):
        for j in range(i + 1, k):
            if np.isfinite(w[i, j]):
                G.add_edge(i, j, weight=big - w[i, j])
        if np.isfinite(bw[i]):
            G.add_edge(i, k + i, weight=big - bw[i])
            for j in range(i + 1, k):
                if np.isfinite(bw[j]):
                    G.add_edge(k + i, k + j, weight=big)
    mate = nx.max_weight_matching(G, maxcardinality=True)
    pairs, tob, total = [], [], 0.0
    covered = set()
    for a, b in mate:
        a, b = min(a, b), max(a, b)
        if b < k:
            pairs.append((a, b))
            total += w[a, b]
            covered |= {a, b}
        elif a < k:
            tob.append(a)
            total += bw[a]
            covered.add(a)
    if len(covered) != k:
        return pairs, tob, np.inf
    return sorted(pairs), sorted(tob), total


def correction_for(dg: DecodingGraph, g: MatchingGraph, pairing: Pairing) -> PauliOp:
    qubits: set[int] = set()
    for i, j in pairing.pairs:
        qubits ^= set(dg.path_qubits(g.nodes[i][0], g.nodes[j][0]))
    for i, b in pairing.to_boundary:
        qubits ^= set(dg.path_qubits(g.nodes[i][0], g.boundary[b]))
    return PauliOp.from_axis(sorted(qubits), dg.axis)


def decide_and_correct(tab: Tableau, pairing: Pairing | list[Pairing], frame: PauliOp) -> tuple[PauliOp, dict[str, bool]]:
    """Apply the pairing's correction and report a failure flag per logical pair."""
    pairings = pairing if isinstance(pairing, list) else [pairing]
    residual = frame
    for pr in pairings:
        residual = multiply(residual, pr.correction)
    bad = tab.anticommuting(residual)
    if bad:
        raise AssertionError("correction did not return the frame to the code space")
    fails = {lp.name: not (commutes(residual, lp.X) and commutes(residual, lp.Z)) for lp in tab.logicals}
    return residual.unsigned(), fails


class Decoder:
    """Matching decoder for both error axes of a lattice (holes act as boundaries)."""

    def __init__(self, lat: Lattice):
        self.lat = lat
        self.graphs = {a: DecodingGraph.from_lattice(lat, a) for a in ("X", "Z")}

    def syndrome_nodes(self, error: PauliOp, axis: str) -> list[int]:
        dg = self.graphs[axis]
        det = OTHER[axis]
        hits = {}
        for q in error.qubits:
            if axis not in {"X": "X", "Y": "XZ", "Z": "Z"}[error.axis(q)]:
                continue
            for p in self.lat.generator_neighbors(q, det):
                if p in dg.node_of and dg.node_of[p] not in dg.free:
                    v = dg.node_of[p]
                    hits[v] = hits.get(v, 0) ^ 1
        return sorted(v for v, h in hits.items() if h)

    def decode_nodes(self, nodes: list[tuple[int, int]], axis: str) -> Pairing:
        dg = self.graphs[axis]
        g = build_matching_graph(dg, nodes)
        pr = match(g)
        pr.correction = correction_for(dg, g, pr)
        return pr

    def decode_error(self, error: PauliOp) -> list[Pairing]:
        """Perfect-syndrome decoding of both axes."""
        return [self.decode_nodes([(v, 0) for v in self.syndrome_nodes(error, a)], a) for a in ("X", "Z")]


# -- phenomenological memory experiment ---------------------------------------

def memory_experiment(
    L: int, p: float, trials: int, rng: np.random.Generator, rounds: int | None = None, axis: str = "X", q: float | None = None,
    chunk: int = 20000,
) -> int:
    """Count logical failures of a bare patch under data and measurement flips.

    Each of ``rounds`` noisy rounds flips every data qubit with probability p
    and every syndrome bit with probability q (default p); a final perfect
    round closes the history. Only trials with detection events are decoded.
    """
    from .lattice import build, patch_logicals

    rounds = L if rounds is None else rounds
    q = p if q is None else q
    lat = build(L)
    dg = DecodingGraph.from_lattice(lat, axis)
    H, cons = dg.check_matrix(lat.n_qubits)
    px, pz = patch_logicals(lat)
    logical = pz if axis == "X" else px  # the logical that detects this error axis
    lmask = np.zeros(lat.n_qubits, dtype=np.uint8)
    lmask[logical.qubits] = 1
    failures = 0
    for start in range(0, trials, chunk):
        n = min(chunk, trials - start)
        failures += _memory_chunk(dg, H, cons, lmask, n, rounds, p, q, rng)
    return failures


def _memory_chunk(dg, H, cons, lmask, trials, rounds, p, q, rng) -> int:
    nq = H.shape[1]
    data = rng.random((trials, rounds, nq)) < p
    cum = (np.cumsum(data, axis=1) % 2).astype(np.uint8)
    synd = (cum.astype(np.int32) @ H.T.astype(np.int32)) % 2
    meas = rng.random((trials, rounds, len(cons))) < q
    noisy = synd.astype(bool) ^ meas
    final = synd[:, -1, :].astype(bool)  # perfect closing round
    hist = np.concatenate([np.zeros((trials, 1, len(cons)), dtype=bool), noisy, final[:, None, :]], axis=1)
    events = hist[:, 1:, :] ^ hist[:, :-1, :]
    residual_last = cum[:, -1, :]
    has_events = events.reshape(trials, -1).any(axis=1)
    failures = 0
    for t in range(trials):
        err = residual_last[t]
        if has_events[t]:
            rr, cc = np.nonzero(events[t])
            nodes = [(cons[c], int(r)) for r, c in zip(rr, cc)]
            g = build_matching_graph(dg, nodes)
            pr = match(g)
            corr = np.zeros(nq, dtype=np.uint8)
            corr[correction_for(dg, g, pr).qubits] = 1
            err = err ^ corr
        if int(err @ lmask) % 2:
            failures += 1
    return failures


# -- majority-vote detectors --------------------------------------------------

@dataclass(frozen=True)
class MovementVote:
    trigger_full_EC: bool
    flagged_rows: list[int]


def movement_vote(rows, d: int) -> MovementVote:
    """Flag rows whose -1 count reaches half the row; any flag triggers full correction.

    ``rows`` has d/4 rows of d/8 single-qubit outcomes.
    """
    arr = np.asarray(rows)
    if d % 8 or arr.shape != (d // 4, d // 8):
        raise ValueError(f"expected shape {(d // 4, d // 8)} for d={d}")
    if not np.isin(arr, (1, -1)).all():
        raise ValueError("outcomes must be +1 or -1")
    neg = (arr == -1).sum(axis=1)
    flagged = [int(i) for i in np.nonzero(2 * neg >= arr.shape[1])[0]]
    return MovementVote(bool(flagged), flagged)


def movement_vote_batch(outcomes: np.ndarray) -> np.ndarray:
    """Vectorized trigger decision for trials x rows x cols arrays of +-1."""
    neg = (outcomes == -1).sum(axis=2)
    return (2 * neg >= outcomes.shape[2]).any(axis=1)


def contact_vote(outcomes) -> int:
    """Majority sign of single-qubit outcomes; ties are rejected."""
    arr = np.asarray(outcomes)
    if arr.size == 0 or not np.isin(arr, (1, -1)).all():
        raise ValueError("outcomes must be a non-empty list of +1/-1")
    s = int(arr.sum())
    if s == 0:
        raise ValueError("tied vote")
    return 1 if s > 0 else -1


def movement_misdetection_mc(d: int, p: float, trials: int, rng: np.random.Generator, chunk: int = 200_000) -> dict:
    """Monte Carlo of one expansion epoch with and without a boundary error.

    With an error, one random row reads -1 everywhere before measurement
    flips; misdetection means no trigger. Without an error, a trigger is a
    false alarm. ``P_row_miss`` counts only the corrupted row failing its
    own vote, which carries the leading power of p.
    """
    rows, cols = d // 4, d // 8
    missed = alarms = row_missed = 0
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        clean = np.where(rng.random((n, rows, cols)) < p, -1, 1)
        alarms += int(movement_vote_batch(clean).sum())
        hit = np.zeros((n, rows, 1), dtype=bool)
        bad = rng.integers(0, rows, size=n)
        hit[np.arange(n), bad, 0] = True
        corrupted = np.where(hit ^ (rng.random((n, rows, cols)) < p), -1, 1)
        missed += int((~movement_vote_batch(corrupted)).sum())
        bad_neg = (corrupted[np.arange(n), bad] == -1).sum(axis=1)
        row_missed += int((2 * bad_neg < cols).sum())
        done += n
    return {
        "missed": missed,
        "trials": trials,
        "P_miss": missed / trials if trials else 0.0,
        "P_row_miss": row_missed / trials if trials else 0.0,
        "P_false": alarms / trials if trials else 0.0,
    }


def contact_misread_mc(d: int, p: float, trials: int, rng: np.random.Generator, chunk: int = 200_000) -> dict:
    """Monte Carlo of a contact vote over d/4 single-qubit outcomes with flip probability p.

    The true value is +1; a wrong majority is a misread, a tie is rejected.
    """
    if d % 4:
        raise ValueError("d must be a multiple of 4")
    n_out = d // 4
    wrong = ties = done = 0
    while done < trials:
        n = min(chunk, trials - done)
        neg = (rng.random((n, n_out)) < p).sum(axis=1)
        wrong += int((2 * neg > n_out).sum())
        ties += int((2 * neg == n_out).sum())
        done += n
    return {"wrong": wrong, "ties": ties, "trials": trials, "P_wrong": wrong / trials if trials else 0.0}
