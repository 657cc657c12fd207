"""Thermal and circuit-level Pauli noise, and error propagation through deformations."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .lattice import Lattice
from .pauli import PauliOp, conjugate_by_rotation, multiply
from .tableau import Tableau, membership_sign

GAP_CLASSES = ("unprotected", "bulk-2J", "boundary-4J")
CSV_HEADER = ["step", "qubit", "axis", "gap_class"]


@dataclass(frozen=True)
class NoiseParams:
    cbJ: float = 10.0
    p: float = 1e-3
    m: int = 1
    J: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.cbJ < 0:
            raise ValueError("cbJ must be non-negative")
        if not 0 <= self.p <= 1:
            raise ValueError("p must lie in [0, 1]")
        if self.m < 1:
            raise ValueError("m must be at least 1")


@dataclass(frozen=True)
class ErrorEvent:
    step: int
    qubit: int
    axis: str
    gap_class: str


def gap_class(count: int, bulk: bool = False) -> str:
    """Class of an error flipping ``count`` active generators.

    Away from holes a single-qubit error creates one excitation pair and costs the
    bulk gap 2J. Next to a hole each flipped generator costs 2J on its own.
    """
    if count <= 0:
        return "unprotected"
    if bulk or count == 1:
        return "bulk-2J"
    return "boundary-4J"


CLASS_EXPONENT = {"bulk-2J": 2.0, "boundary-4J": 4.0}


def thermal_rate(params: NoiseParams, cls: str) -> float:
    """exp(-cbJ * penalty / J) for the class; ``p`` when nothing is flipped."""
    if cls == "unprotected":
        return params.p
    return math.exp(-CLASS_EXPONENT[cls] * params.cbJ)


def _touches_hole(lat: Lattice | None, tab: Tableau, q: int) -> bool:
    if lat is not None:
        r, c = lat.coords[q]
        around = [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
        return any(lat.has_generator(p) and not lat.generator(p).active for p in around)
    # without the lattice, a pinned one- or two-qubit term marks a deformed region
    return any(q in g.op.support and g.op.weight <= 2 for g in tab.generators)


def error_rates(params: NoiseParams, tab: Tableau, lat: Lattice | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-qubit rates for X and Z events and their anticommuting counts."""
    rates = np.zeros((tab.n, 2))
    counts = np.zeros((tab.n, 2), dtype=int)
    for q in range(tab.n):
        bulk = not _touches_hole(lat, tab, q)
        for a, axis in enumerate(("X", "Z")):
            op = PauliOp.single(q, axis)
            k = len(tab.anticommuting(op))
            counts[q, a] = k
            if k == 0 and membership_sign(tab, op, max_rounds=2) is not None:
                continue  # the error is itself a stabilizer element
            rates[q, a] = thermal_rate(params, gap_class(k, bulk))
    return rates, counts


def sample_thermal(
    params: NoiseParams, tab: Tableau, steps: int, rng: np.random.Generator | None = None, lat: Lattice | None = None
) -> list[ErrorEvent]:
    """Independent Bernoulli X and Z events per qubit per step at the gap-class rate."""
    rng = rng if rng is not None else np.random.default_rng(params.seed)
    rates, counts = error_rates(params, tab, lat)
    bulk = [not _touches_hole(lat, tab, q) for q in range(tab.n)]
    events = []
    for t in range(steps):
        hits = rng.random(rates.shape) < rates
        for q, a in zip(*np.nonzero(hits)):
            events.append(ErrorEvent(t, int(q), "XZ"[a], gap_class(int(counts[q, a]), bulk[q])))
    return events


def events_to_csv(events: list[ErrorEvent]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for e in events:
        w.writerow([e.step, e.qubit, e.axis, e.gap_class])
    return buf.getvalue()


def events_from_csv(text: str) -> list[ErrorEvent]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError(f"error log must start with header {CSV_HEADER}")
    out = []
    for r in rows[1:]:
        if r[2] not in ("X", "Y", "Z") or r[3] not in GAP_CLASSES:
            raise ValueError(f"malformed error-log row {r}")
        out.append(ErrorEvent(int(r[0]), int(r[1]), r[2], r[3]))
    return out


def events_to_frame(events: list[ErrorEvent], upto_step: int | None = None) -> PauliOp:
    frame = PauliOp.identity()
    for e in events:
        if upto_step is None or e.step <= upto_step:
            frame = multiply(frame, PauliOp.single(e.qubit, e.axis))
    return frame


# -- propagation -------------------------------------------------------------

def propagate(error: PauliOp, history: list, from_step: int = 0, to_step: int | None = None) -> PauliOp:
    """Conjugate an error by every rotation in history[from_step:to_step], in order."""
    to_step = len(history) if to_step is None else to_step
    if not 0 <= from_step <= to_step <= len(history):
        raise ValueError("step range outside the history")
    for step in history[from_step:to_step]:
        for q in step.rotations:
            error = conjugate_by_rotation(error, q)
    return error


def effective_error(tab: Tableau, error: PauliOp) -> PauliOp:
    """Drop single-qubit factors that are themselves stabilizer elements (phase ignored)."""
    out = error
    for q in error.qubits:
        for axis in ("X", "Z"):
            if axis not in _components(out.axis(q)):
                continue
            single = PauliOp.single(q, axis)
            if tab.anticommuting(single):
                continue
            if membership_sign(tab, single, max_rounds=2) is not None:
                out = multiply(out, single)
    return out.unsigned()


def _components(axis: str) -> str:
    return {"X": "X", "Z": "Z", "Y": "XZ", "I": ""}[axis]


# -- circuit-level syndrome extraction ---------------------------------------

ORDER = ((-1, 0), (0, -1), (0, 1), (1, 0))  # north, west, east, south


@dataclass
class SyndromeCircuit:
    """Index tables for measuring the lattice's active generators in parallel."""

    kinds: np.ndarray  # 1 for X-type ancilla, 0 for Z-type
    layers: list[np.ndarray]  # per direction: rows (generator index, data qubit)
    positions: list

    @classmethod
    def from_lattice(cls, lat: Lattice) -> SyndromeCircuit:
        gens = lat.active_generators()
        kinds = np.array([1 if g.kind == "X" else 0 for g in gens], dtype=bool)
        layers = []
        for dr, dc in ORDER:
            rows = []
            for i, g in enumerate(gens):
                pos = (g.position[0] + dr, g.position[1] + dc)
                if pos in lat.index:
                    rows.append((i, lat.index[pos]))
            layers.append(np.array(rows, dtype=int).reshape(-1, 2))
        return cls(kinds, layers, [g.position for g in gens])


_TWO_QUBIT = np.array([(a, b) for a in range(4) for b in range(4) if (a, b) != (0, 0)])
_XBIT = np.array([0, 1, 1, 0], dtype=bool)  # I X Y Z
_ZBIT = np.array([0, 0, 1, 1], dtype=bool)


def syndrome_round_batch(
    circ: SyndromeCircuit, dx: np.ndarray, dz: np.ndarray, p: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One noisy round for a batch of data frames (trials x qubits boolean arrays).

    Returns (flips, dx, dz) where ``flips`` is trials x generators, True when the
    reported sign is -1.
    """
    dx = dx.copy()
    dz = dz.copy()
    trials = dx.shape[0]
    ng = len(circ.kinds)
    ax = np.zeros((trials, ng), dtype=bool)
    az = np.zeros((trials, ng), dtype=bool)
    xk = circ.kinds

    def hadamard_with_noise():
        nonlocal ax, az
        ax_new = np.where(xk, az, ax)
        az_new = np.where(xk, ax, az)
        ax, az = ax_new, az_new
        if p > 0:
            hit = (rng.random((trials, ng)) < p) & xk
            which = rng.integers(1, 4, size=(trials, ng))
            ax ^= hit & _XBIT[which]
            az ^= hit & _ZBIT[which]

    if p > 0:
        ax ^= rng.random((trials, ng)) < p  # initialization flip
    hadamard_with_noise()
    for rows in circ.layers:
        if len(rows) == 0:
            continue
        gi, qi = rows[:, 0], rows[:, 1]
        is_x = xk[gi]
        # X-type: ancilla controls the data qubit; Z-type: data controls the ancilla
        cx = np.where(is_x, ax[:, gi], dx[:, qi])
        cz_t = np.where(is_x, dz[:, qi], az[:, gi])
        new_tx = np.where(is_x, dx[:, qi], ax[:, gi]) ^ cx
        new_cz = np.where(is_x, az[:, gi], dz[:, qi]) ^ cz_t
        ax[:, gi] = np.where(is_x, ax[:, gi], new_tx)
        dx[:, qi] = np.where(is_x, new_tx, dx[:, qi])
        az[:, gi] = np.where(is_x, new_cz, az[:, gi])
        dz[:, qi] = np.where(is_x, dz[:, qi], new_cz)
        if p > 0:
            hit = rng.random((trials, len(gi))) < p
            pick = _TWO_QUBIT[rng.integers(0, 15, size=(trials, len(gi)))]
            pa, pd = pick[..., 0], pick[..., 1]
            ax[:, gi] ^= hit & _XBIT[pa]
            az[:, gi] ^= hit & _ZBIT[pa]
            dx[:, qi] ^= hit & _XBIT[pd]
            dz[:, qi] ^= hit & _ZBIT[pd]
    hadamard_with_noise()
    flips = ax.copy()
    if p > 0:
        flips ^= rng.random((trials, ng)) < p
    return flips, dx, dz


def syndrome_round(
    lat: Lattice, frame: PauliOp, params: NoiseParams, rng: np.random.Generator | None = None
) -> tuple[list[int], PauliOp]:
    """One noisy measurement round of every active lattice generator.

    Returns the reported signs (ordered as ``lat.active_generators()``) and the
    data-qubit error frame after the round.
    """
    rng = rng if rng is not None else np.random.default_rng(params.seed)
    circ = SyndromeCircuit.from_lattice(lat)
    n = lat.n_qubits
    dx = np.zeros((1, n), dtype=bool)
    dz = np.zeros((1, n), dtype=bool)
    for q, a in frame.support.items():
        dx[0, q] = a in "XY"
        dz[0, q] = a in "ZY"
    flips, dx, dz = syndrome_round_batch(circ, dx, dz, params.p, rng)
    signs = [-1 if f else 1 for f in flips[0]]
    out = {}
    for q in range(n):
        if dx[0, q] or dz[0, q]:
            out[q] = "Y" if dx[0, q] and dz[0, q] else ("X" if dx[0, q] else "Z")
    return signs, PauliOp(out)
