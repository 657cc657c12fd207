"""Deformation schedules for holes: enlargement, movement, braiding.

Every step is a set of commuting pi/4 rotation generators plus generator
toggles that run before the rotations. For a hole whose cells are
generators of kind K (``G``) and whose pinned single-qubit terms carry the
opposite axis (``s``), the two rotation shapes are

* expansion onto a new cell n through edge e:   ``Q = i s_e G_n``
* contraction off a cell t towards edge e:      ``Q = i G_t s_e``

The contraction order makes a reactivated cell come back with eigenvalue +1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .lattice import OTHER, DefectQubit, Hole, Lattice, Pos
from .pauli import PauliOp, commutes, multiply
from .tableau import Tableau, toggle_generator

DIRECTIONS = {"up": (-2, 0), "down": (2, 0), "left": (0, -2), "right": (0, 2)}


@dataclass(frozen=True)
class Schedule:
    profile: str = "smoothstep"
    order: int = 4
    f_start: float = 0.0
    f_end: float = math.pi / 4


@dataclass(frozen=True)
class HoleUpdate:
    defect: str
    hole: int
    cells: frozenset
    pinned: frozenset


@dataclass
class DeformationStep:
    rotations: tuple[PauliOp, ...] = ()
    toggles: tuple[tuple[PauliOp, bool], ...] = ()
    schedule: Schedule = field(default_factory=Schedule)
    updates: tuple[HoleUpdate, ...] = ()
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "note": self.note,
            "toggles": [{"op": str(op), "on": on} for op, on in self.toggles],
            "rotations": [str(q) for q in self.rotations],
            "schedule": {"profile": self.schedule.profile, "order": self.schedule.order},
        }


@dataclass(frozen=True)
class ValidityReport:
    odd_count: int
    valid: bool


@dataclass
class BraidPath:
    moves: list[tuple[str, int]]
    centers: list[tuple[float, float]]
    target_center: tuple[float, float]

    @property
    def closed(self) -> bool:
        return self.centers[0] == self.centers[-1]

    @property
    def winding(self) -> int:
        return winding_number(self.centers, self.target_center)


def steps_to_json(steps: list[DeformationStep]) -> str:
    return json.dumps([s.to_dict() for s in steps], indent=1)


# -- checks ------------------------------------------------------------------

def check_validity(tab: Tableau, q: PauliOp) -> ValidityReport:
    n = len(tab.anticommuting(q))
    return ValidityReport(n, n % 2 == 1)


def check_parallel(tab: Tableau, qs) -> bool:
    """Pairwise commuting, each with an odd anticommuting set, sets disjoint."""
    qs = list(qs)
    seen: set[int] = set()
    for i, q in enumerate(qs):
        bad = set(tab.anticommuting(q))
        if len(bad) % 2 == 0 or bad & seen:
            return False
        seen |= bad
        for q2 in qs[i + 1:]:
            if not commutes(q, q2):
                return False
    return True


# -- execution ---------------------------------------------------------------

def execute(tab: Tableau, steps: list[DeformationStep], lat: Lattice | None = None, check: bool = True) -> Tableau:
    """Apply steps in order: toggles, parallelism check, rotations, bookkeeping."""
    for step in steps:
        for op, on in step.toggles:
            toggle_generator(tab, op, on)
        if check and step.rotations and not check_parallel(tab, step.rotations):
            raise ValueError(f"step '{step.note}' violates the parallel-rotation conditions")
        for q in step.rotations:
            tab._conjugate_all(q)
        tab.history.append(step)
        tab.check_weights()
        if lat is not None:
            _apply_updates(lat, step.updates)
    return tab


def _apply_updates(lat: Lattice, updates) -> None:
    by_name = {dq.name: dq for dq in lat.defects}
    for u in updates:
        hole = by_name[u.defect].holes[u.hole]
        for c in hole.cells - u.cells:
            lat.set_active(c, True)
        for c in u.cells - hole.cells:
            lat.set_active(c, False)
        hole.cells = set(u.cells)
        hole.pinned = set(u.pinned)


# -- rotation shapes ---------------------------------------------------------

def _pin_op(lat: Lattice, kind: str, q: int) -> PauliOp:
    return PauliOp.single(q, OTHER[kind])


def expansion_rotation(lat: Lattice, kind: str, front: Pos, new: Pos) -> PauliOp:
    e = lat.shared_qubit(front, new)
    return multiply(_pin_op(lat, kind, e), lat.generator(new).op()).scaled(1j)


def contraction_rotation(lat: Lattice, kind: str, cell: Pos, inner: Pos) -> PauliOp:
    e = lat.shared_qubit(cell, inner)
    return multiply(lat.generator(cell).op(), _pin_op(lat, kind, e)).scaled(1j)


class _Planner:
    """Simulates hole geometry while emitting steps, so schedules chain."""

    def __init__(self, lat: Lattice, defects: list[DefectQubit]):
        self.lat = lat
        self.state = {(dq.name, i): h.copy() for dq in defects for i, h in enumerate(dq.holes)}
        self.others = [h for d in lat.defects if d.name not in {x.name for x in defects} for h in d.holes]

    def hole(self, key) -> Hole:
        return self.state[key]

    def _occupied_support(self, exclude) -> set[int]:
        out: set[int] = set()
        holes = self.others + [h for k, h in self.state.items() if k != exclude]
        for h in holes:
            for c in h.cells:
                out |= self.lat.generator(c).support
        return out

    def check_new_cell(self, key, cell: Pos) -> None:
        lat = self.lat
        h = self.state[key]
        if cell not in lat.gen_index or lat.kind_at(cell) != h.kind:
            raise ValueError(f"hole would leave the lattice at {cell}")
        g = lat.generator(cell)
        if len(g.support) != 4:
            raise ValueError(f"hole would touch the boundary at {cell}")
        if g.support & self._occupied_support(key):
            raise ValueError(f"hole would collide with another hole at {cell}")

    def update(self, key) -> HoleUpdate:
        h = self.state[key]
        return HoleUpdate(key[0], key[1], frozenset(h.cells), frozenset(h.pinned))

    # -- primitive pieces -----------------------------------------------------
    def expand(self, key, direction: str) -> list[PauliOp]:
        """Grow the hole by one slice in ``direction``; return the rotations."""
        lat = self.lat
        h = self.state[key]
        dr, dc = DIRECTIONS[direction]
        front = _slice(h.cells, (dr, dc), front=True)
        qs = []
        for f in sorted(front):
            n = (f[0] + dr, f[1] + dc)
            self.check_new_cell(key, n)
            qs.append(expansion_rotation(lat, h.kind, f, n))
            h.pinned.add(lat.shared_qubit(f, n))
        for f in front:
            h.cells.add((f[0] + dr, f[1] + dc))
        return qs

    def configure(self, key, direction: str, spine_front: bool = True) -> list[tuple[PauliOp, bool]]:
        """Toggles that bring the pinned set to the layout needed to drop the trailing slice.

        Layout: every edge between consecutive cells along ``direction`` plus
        the edges inside one slice (the front one by default, else the one
        farthest from the trailing slice).
        """
        lat = self.lat
        h = self.state[key]
        dr, dc = DIRECTIONS[direction]
        want: set[int] = set()
        for c in h.cells:
            nb = (c[0] + dr, c[1] + dc)
            if nb in h.cells:
                want.add(lat.shared_qubit(c, nb))
        spine = _slice(h.cells, (dr, dc), front=spine_front)
        for a in spine:
            for b in spine:
                if a < b and abs(a[0] - b[0]) + abs(a[1] - b[1]) == 2:
                    want.add(lat.shared_qubit(a, b))
        on = sorted(want - h.pinned)
        off = sorted(h.pinned - want)
        h.pinned = want
        return [(_pin_op(lat, h.kind, q), True) for q in on] + [(_pin_op(lat, h.kind, q), False) for q in off]

    def contract(self, key, direction: str) -> list[PauliOp]:
        """Drop the trailing slice (opposite to ``direction``)."""
        lat = self.lat
        h = self.state[key]
        dr, dc = DIRECTIONS[direction]
        trail = _slice(h.cells, (dr, dc), front=False)
        if len(trail) == len(h.cells):
            raise ValueError("cannot contract a hole to nothing")
        qs = []
        for t in sorted(trail):
            inner = (t[0] + dr, t[1] + dc)
            qs.append(contraction_rotation(lat, h.kind, t, inner))
            h.pinned.discard(lat.shared_qubit(t, inner))
        h.cells -= trail
        return qs


def _slice(cells, d, front: bool) -> set[Pos]:
    proj = {c: c[0] * d[0] + c[1] * d[1] for c in cells}
    target = max(proj.values()) if front else min(proj.values())
    return {c for c, v in proj.items() if v == target}


def _extent(cells, d) -> int:
    proj = [c[0] * d[0] + c[1] * d[1] for c in cells]
    return (max(proj) - min(proj)) // 4 + 1


# -- public schedule builders -------------------------------------------------

def enlarge_hole(lat: Lattice, dq: DefectQubit, d: int, holes=None) -> list[DeformationStep]:
    """Grow minimal holes into d/4 x d/4 squares: a vertical strip, then columns.

    Both holes (or those listed in ``holes``) grow in lock-step so each step
    carries one rotation per hole per new cell.
    """
    if d % 4:
        raise ValueError("target perimeter must be a multiple of 4")
    side = d // 4
    plan = _Planner(lat, [dq])
    keys = [(dq.name, i) for i in (holes if holes is not None else range(len(dq.holes)))]
    for k in keys:
        h = plan.hole(k)
        rows = _extent(h.cells, (2, 0))
        cols = _extent(h.cells, (0, 2))
        if 2 * (rows + cols) > d:
            raise ValueError("hole already larger than the target")
        if (rows, cols) != (1, 1) and 2 * (rows + cols) != d:
            raise ValueError("enlargement starts from a minimal hole")
    steps = []
    for direction in ("down", "right"):
        for _ in range(side - 1):
            qs = []
            for k in keys:
                if _extent(plan.hole(k).cells, DIRECTIONS[direction]) < side:
                    qs += plan.expand(k, direction)
            if qs:
                steps.append(
                    DeformationStep(tuple(qs), (), updates=tuple(plan.update(k) for k in keys), note=f"enlarge {direction}")
                )
    return steps


def move_hole(
    lat: Lattice, dq: DefectQubit, direction: str, units: int, hole: int = 0, composite: bool = True
) -> list[DeformationStep]:
    """Translate one hole by ``units`` cells; one combined step per unit by default."""
    plan = _Planner(lat, [dq])
    return _move(plan, (dq.name, hole), direction, units, composite)


def _move(plan: _Planner, key, direction: str, units: int, composite: bool) -> list[DeformationStep]:
    steps = []
    for _ in range(units):
        thick = _extent(plan.hole(key).cells, DIRECTIONS[direction]) >= 2
        if composite and thick:
            toggles = plan.configure(key, direction)
            qs = plan.expand(key, direction) + plan.contract(key, direction)
            steps.append(DeformationStep(tuple(qs), tuple(toggles), updates=(plan.update(key),), note=f"move {direction}"))
        else:
            qs = plan.expand(key, direction)
            steps.append(DeformationStep(tuple(qs), (), updates=(plan.update(key),), note=f"expand {direction}"))
            toggles = plan.configure(key, direction, spine_front=True)
            qs = plan.contract(key, direction)
            steps.append(DeformationStep(tuple(qs), tuple(toggles), updates=(plan.update(key),), note=f"contract {direction}"))
    return steps


def expand_hole(lat: Lattice, dq: DefectQubit, direction: str, units: int, hole: int = 0) -> list[DeformationStep]:
    """Expansion-only steps (the first phase of a move)."""
    plan = _Planner(lat, [dq])
    key = (dq.name, hole)
    return [
        DeformationStep(tuple(plan.expand(key, direction)), (), updates=(plan.update(key),), note=f"expand {direction}")
        for _ in range(units)
    ]


def shrink_hole(lat: Lattice, dq: DefectQubit, hole: int = 0) -> list[DeformationStep]:
    """Undo a canonical enlargement: drop columns from the right, then rows from the bottom."""
    plan = _Planner(lat, [dq])
    key = (dq.name, hole)
    steps = []
    for direction, axis in (("left", (0, 2)), ("up", (2, 0))):
        while _extent(plan.hole(key).cells, axis) > 1:
            toggles = plan.configure(key, direction, spine_front=True)
            qs = plan.contract(key, direction)
            steps.append(DeformationStep(tuple(qs), tuple(toggles), updates=(plan.update(key),), note=f"shrink {direction}"))
    return steps


def _center(cells) -> tuple[float, float]:
    return (sum(c[0] for c in cells) / len(cells), sum(c[1] for c in cells) / len(cells))


def winding_number(points, center) -> int:
    total = 0.0
    for (r0, c0), (r1, c1) in zip(points, points[1:]):
        a0 = math.atan2(r0 - center[0], c0 - center[1])
        a1 = math.atan2(r1 - center[0], c1 - center[1])
        da = a1 - a0
        while da > math.pi:
            da -= 2 * math.pi
        while da < -math.pi:
            da += 2 * math.pi
        total += da
    return round(total / (2 * math.pi))


def loop_around(lat: Lattice, control: DefectQubit, target: DefectQubit, margin: int = 5) -> list[tuple[str, int]]:
    """Rectangular loop taking the control's first hole around the target's first hole."""
    h = control.holes[0].cells
    t = target.holes[0].cells
    hr0, hr1 = min(c[0] for c in h), max(c[0] for c in h)
    hc0, hc1 = min(c[1] for c in h), max(c[1] for c in h)
    tr0, tr1 = min(c[0] for c in t), max(c[0] for c in t)
    tc0, tc1 = min(c[1] for c in t), max(c[1] for c in t)
    if hr1 + margin > tr0:
        raise ValueError("control hole must start above the target hole")
    right = max(0, (tc1 + margin - hc0 + 1) // 2)
    down = (tr1 + margin - hr0 + 1) // 2
    width = hc1 - hc0
    left_to = tc0 - margin - width  # new hc0
    left = (hc0 + 2 * right - left_to + 1) // 2
    back = left - right
    moves = [("right", right), ("down", down), ("left", left), ("up", down)]
    moves.append(("right", back) if back > 0 else ("left", -back))
    return [m for m in moves if m[1] > 0]


def braid(
    lat: Lattice, control: DefectQubit, target: DefectQubit, moves: list[tuple[str, int]] | None = None
) -> tuple[BraidPath, list[DeformationStep]]:
    """Closed loop of the control's first hole; default loop encloses the target."""
    if control.cut_kind != "Z" or target.cut_kind != "X":
        raise ValueError("braid expects a Z-cut control and an X-cut target")
    if moves is None:
        moves = loop_around(lat, control, target)
    plan = _Planner(lat, [control])
    key = (control.name, 0)
    centers = [_center(plan.hole(key).cells)]
    steps = []
    for direction, units in moves:
        for _ in range(units):
            steps += _move(plan, key, direction, 1, True)
            centers.append(_center(plan.hole(key).cells))
    path = BraidPath(list(moves), centers, _center(target.holes[0].cells))
    if not path.closed:
        raise ValueError("braid path is not closed")
    return path, steps
