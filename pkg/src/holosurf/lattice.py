"""Planar surface-code geometry, defect holes and their logical operators.

Coordinates use a doubled grid ``(r, c)`` with ``0 <= r, c <= 2L-2``:

* data qubits sit where ``r + c`` is even;
* star generators ``X_s`` sit at (odd r, even c);
* plaquette generators ``Z_p`` sit at (even r, odd c).

Stars lose a leg on the left/right edges (X boundaries) and plaquettes lose a
leg on the top/bottom edges (Z boundaries). Two generators of the same kind
are neighbours when their positions differ by 2 in one coordinate; the data
qubit at the midpoint is shared by both.
"""

from __future__ import annotations

import copy
import json
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from .pauli import PauliOp

Pos = tuple[int, int]
AXIS = {"X": "X", "Z": "Z"}
OTHER = {"X": "Z", "Z": "X"}


@dataclass(frozen=True)
class GeneratorDef:
    kind: str  # "X" for a star X_s, "Z" for a plaquette Z_p
    position: Pos
    support: frozenset[int]
    active: bool = True

    def op(self) -> PauliOp:
        return PauliOp.from_axis(self.support, self.kind)

    @property
    def label(self) -> str:
        return f"{self.kind}{self.position[0]},{self.position[1]}"


@dataclass
class Hole:
    kind: str  # kind of the switched-off generators: "X" (X-cut) or "Z" (Z-cut)
    cells: set[Pos]
    pinned: set[int] = field(default_factory=set)  # qubits carrying single-qubit terms

    def copy(self) -> Hole:
        return Hole(self.kind, set(self.cells), set(self.pinned))


@dataclass
class DefectQubit:
    name: str
    cut_kind: str
    holes: list[Hole]
    d: int
    logical_X: PauliOp
    logical_Z: PauliOp
    init_label: str


def _kind_at(pos: Pos) -> str | None:
    r, c = pos
    if r % 2 == 1 and c % 2 == 0:
        return "X"
    if r % 2 == 0 and c % 2 == 1:
        return "Z"
    return None


@dataclass
class Lattice:
    L: int
    coords: list[Pos]
    index: dict[Pos, int]
    generators: list[GeneratorDef]
    gen_index: dict[Pos, int]
    boundary_type: dict[str, str] = field(
        default_factory=lambda: {"left": "X", "right": "X", "top": "Z", "bottom": "Z"}
    )
    defects: list[DefectQubit] = field(default_factory=list)

    # -- geometry helpers --------------------------------------------------
    @property
    def n_qubits(self) -> int:
        return len(self.coords)

    @property
    def size(self) -> int:
        return 2 * self.L - 1

    def inside(self, pos: Pos) -> bool:
        return 0 <= pos[0] < self.size and 0 <= pos[1] < self.size

    def qubit(self, pos: Pos) -> int:
        return self.index[pos]

    def edge_label(self, q: int) -> tuple[int, int, str]:
        """Edge coordinate (row, col, 'v'|'h') of a data qubit."""
        r, c = self.coords[q]
        return (r // 2, c // 2, "v" if r % 2 == 0 else "h")

    def generator(self, pos: Pos) -> GeneratorDef:
        return self.generators[self.gen_index[pos]]

    def has_generator(self, pos: Pos) -> bool:
        return pos in self.gen_index

    def kind_at(self, pos: Pos) -> str | None:
        return _kind_at(pos) if pos in self.gen_index else None

    def shared_qubit(self, a: Pos, b: Pos) -> int:
        if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 2 or (a[0] != b[0] and a[1] != b[1]):
            raise ValueError(f"{a} and {b} are not neighbours")
        return self.index[((a[0] + b[0]) // 2, (a[1] + b[1]) // 2)]

    def generator_neighbors(self, q: int, kind: str) -> list[Pos]:
        """Positions (existing or not) of the two kind-generators touching qubit q."""
        r, c = self.coords[q]
        cand = [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
        return [p for p in cand if _kind_at(p) == kind]

    def same_kind_neighbors(self, pos: Pos) -> list[Pos]:
        r, c = pos
        out = [(r, c + 2), (r, c - 2), (r + 2, c), (r - 2, c)]
        return [p for p in out if p in self.gen_index]

    def set_active(self, pos: Pos, active: bool) -> None:
        i = self.gen_index[pos]
        self.generators[i] = replace(self.generators[i], active=active)

    def active_generators(self) -> list[GeneratorDef]:
        return [g for g in self.generators if g.active]

    def copy(self) -> Lattice:
        return Lattice(
            self.L,
            self.coords,
            self.index,
            list(self.generators),
            self.gen_index,
            dict(self.boundary_type),
            copy.deepcopy(self.defects),
        )

    # -- hole bookkeeping ----------------------------------------------------
    def holes(self) -> list[Hole]:
        return [h for dq in self.defects for h in dq.holes]

    def hole_interior(self, hole: Hole) -> set[int]:
        """Qubits shared by two cells of the hole."""
        out = set()
        for cell in hole.cells:
            for nb in self.same_kind_neighbors(cell):
                if nb in hole.cells:
                    out.add(self.shared_qubit(cell, nb))
        return out

    def hole_boundary(self, hole: Hole) -> set[int]:
        """Qubits touching exactly one cell of the hole (the ring support)."""
        counts: dict[int, int] = {}
        for cell in hole.cells:
            for q in self.generator(cell).support:
                counts[q] = counts.get(q, 0) + 1
        return {q for q, n in counts.items() if n == 1}

    def to_json(self) -> str:
        data = {
            "L": self.L,
            "boundary_type": self.boundary_type,
            "qubits": [
                {"id": i, "edge": list(self.edge_label(i)), "grid": list(p)}
                for i, p in enumerate(self.coords)
            ],
            "generators": [
                {
                    "kind": g.kind,
                    "position": list(g.position),
                    "support": sorted(g.support),
                    "active": g.active,
                }
                for g in self.generators
            ],
            "defects": [
                {
                    "name": dq.name,
                    "cut_kind": dq.cut_kind,
                    "d": dq.d,
                    "holes": [sorted(list(c) for c in h.cells) for h in dq.holes],
                    "logical_X": str(dq.logical_X),
                    "logical_Z": str(dq.logical_Z),
                    "init_label": dq.init_label,
                }
                for dq in self.defects
            ],
        }
        return json.dumps(data, indent=1)


def build(L: int) -> Lattice:
    """Fully stabilized L x L planar patch."""
    if L < 2:
        raise ValueError("lattice size must be at least 2")
    n = 2 * L - 1
    coords = [(r, c) for r in range(n) for c in range(n) if (r + c) % 2 == 0]
    index = {p: i for i, p in enumerate(coords)}
    gens: list[GeneratorDef] = []
    for r in range(n):
        for c in range(n):
            kind = _kind_at((r, c))
            if kind is None:
                continue
            legs = [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
            supp = frozenset(index[p] for p in legs if p in index)
            gens.append(GeneratorDef(kind, (r, c), supp))
    gen_index = {g.position: i for i, g in enumerate(gens)}
    return Lattice(L, coords, index, gens, gen_index)


def patch_logicals(lat: Lattice) -> tuple[PauliOp, PauliOp]:
    """(X_L, Z_L) of the bare patch: X along the top row, Z down the left column."""
    xs = [lat.index[(0, c)] for c in range(0, lat.size, 2)]
    zs = [lat.index[(r, 0)] for r in range(0, lat.size, 2)]
    return PauliOp.from_axis(xs, "X"), PauliOp.from_axis(zs, "Z")


def _cell_path(lat: Lattice, kind: str, start: Pos, goal: Pos, blocked: set[Pos]) -> list[Pos]:
    prev: dict[Pos, Pos | None] = {start: None}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        if cur == goal:
            break
        for nb in lat.same_kind_neighbors(cur):
            if nb in prev or nb in blocked:
                continue
            prev[nb] = cur
            queue.append(nb)
    if goal not in prev:
        raise ValueError(f"no path between {start} and {goal}")
    path = [goal]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


def chain_between(lat: Lattice, kind: str, start: Pos, goal: Pos, blocked: set[Pos] = frozenset()) -> PauliOp:
    """String operator of the opposite axis linking two kind-cells along a shortest path."""
    path = _cell_path(lat, kind, start, goal, set(blocked))
    qubits = [lat.shared_qubit(a, b) for a, b in zip(path, path[1:])]
    return PauliOp.from_axis(qubits, OTHER[kind])


def create_double_cut(lat: Lattice, kind: str, pos1: Pos, pos2: Pos, name: str | None = None) -> DefectQubit:
    """Switch off two same-kind generators and return the new defect qubit.

    kind "X" makes an X-cut pair (two stars off, initialized to |+>), kind "Z"
    a Z-cut pair (two plaquettes off, initialized to |0>). The lattice is
    updated in place.
    """
    if kind not in ("X", "Z"):
        raise ValueError("cut kind must be 'X' or 'Z'")
    for pos in (pos1, pos2):
        if pos not in lat.gen_index:
            raise ValueError(f"no generator at {pos}")
        g = lat.generator(pos)
        if g.kind != kind:
            raise ValueError(f"generator at {pos} is {g.kind}, expected {kind}")
        if not g.active:
            raise ValueError(f"generator at {pos} is already inactive")
    if pos1 == pos2:
        raise ValueError("positions must differ")
    blocked = set()
    for h in lat.holes():
        blocked |= h.cells
    ring = lat.generator(pos1).op()
    chain = chain_between(lat, kind, pos1, pos2, blocked)
    for pos in (pos1, pos2):
        lat.set_active(pos, False)
    if kind == "X":
        lx, lz, label = ring, chain, "|+>"
    else:
        lx, lz, label = chain, ring, "|0>"
    dq = DefectQubit(
        name=name or f"q{len(lat.defects)}",
        cut_kind=kind,
        holes=[Hole(kind, {pos1}), Hole(kind, {pos2})],
        d=4,
        logical_X=lx,
        logical_Z=lz,
        init_label=label,
    )
    lat.defects.append(dq)
    return dq


def close_double_cut(lat: Lattice, dq: DefectQubit) -> None:
    """Reactivate every cell of the defect's holes and forget the defect."""
    for h in dq.holes:
        for pos in h.cells:
            lat.set_active(pos, True)
    lat.defects = [d for d in lat.defects if d is not dq]


# -- exact minimum logical weight -------------------------------------------

def _string_graph(lat: Lattice, axis: str):
    """Edge list for strings of the given axis.

    Z strings live on the star graph, X strings on the plaquette graph. Cells
    of holes that switch off the relevant generators become free super-nodes,
    as do the two boundaries where such strings can end.
    """
    det = OTHER[axis]  # kind of generator that detects this axis
    cut_same = [h for h in lat.holes() if h.kind == det]  # free super-nodes
    cut_other = [h for h in lat.holes() if h.kind != det]
    forbidden: set[int] = set()
    for h in cut_other:
        forbidden |= lat.hole_interior(h)
    node_of: dict[Pos, int] = {}
    free: list[int] = []
    n_nodes = 0
    for h in cut_same:
        for cell in h.cells:
            node_of[cell] = n_nodes
        free.append(n_nodes)
        n_nodes += 1
    b1, b2 = n_nodes, n_nodes + 1
    free += [b1, b2]
    n_nodes += 2
    for g in lat.generators:
        if g.kind == det and g.position not in node_of:
            node_of[g.position] = n_nodes
            n_nodes += 1
    edges = []
    for q, (r, c) in enumerate(lat.coords):
        if q in forbidden:
            continue
        ends = []
        for p in lat.generator_neighbors(q, det):
            if p in node_of:
                ends.append(node_of[p])
            elif axis == "Z":
                ends.append(b1 if p[0] < 0 else b2)
            else:
                ends.append(b1 if p[1] < 0 else b2)
        if len(ends) != 2 or ends[0] == ends[1]:
            continue
        edges.append((q, ends[0], ends[1]))
    return n_nodes, edges, free, node_of, (b1, b2)


def reference_operators(lat: Lattice, axis: str) -> list[PauliOp]:
    """A complete set of independent logical representatives of the given axis.

    Used as signature probes: two operators of the opposite axis are equivalent
    modulo stabilizers iff they commute identically with all of these.
    """
    det = OTHER[axis]
    n_nodes, edges, free, node_of, (b1, b2) = _string_graph(lat, axis)
    holes_same = [h for h in lat.holes() if h.kind == det]
    holes_other = [h for h in lat.holes() if h.kind != det]
    adj: dict[int, list[tuple[int, int]]] = {}
    for q, a, b in edges:
        adj.setdefault(a, []).append((b, q))
        adj.setdefault(b, []).append((a, q))
    hole_nodes = set(free) - {b1, b2}

    def bfs(src: int, dst: int) -> list[int]:
        prev = {src: None}
        queue = deque([src])
        while queue:
            cur = queue.popleft()
            if cur == dst:
                break
            if cur != src and cur in hole_nodes:
                continue
            for nb, q in adj.get(cur, []):
                if nb not in prev and (nb == dst or nb not in hole_nodes or nb == src):
                    prev[nb] = (cur, q)
                    queue.append(nb)
        if dst not in prev:
            raise ValueError("reference path not found")
        qs = []
        cur = dst
        while prev[cur] is not None:
            cur, q = prev[cur]
            qs.append(q)
        return qs

    refs = [PauliOp.from_axis(bfs(b1, b2), axis)]
    for i, _h in enumerate(holes_same):
        refs.append(PauliOp.from_axis(bfs(i, b1), axis))
    for h in holes_other:
        refs.append(PauliOp.from_axis(lat.hole_boundary(h), axis))
    return refs


def _signature(op: PauliOp, refs: list[PauliOp]) -> int:
    s = 0
    for j, r in enumerate(refs):
        if not op.commutes(r):
            s |= 1 << j
    return s


def min_weight_in_class(lat: Lattice, op: PauliOp) -> int:
    """Exact minimum weight of a pure-X or pure-Z operator's stabilizer coset."""
    if op.x and op.z:
        raise ValueError("operator must be pure X or pure Z")
    axis = "X" if op.x else "Z"
    refs = reference_operators(lat, OTHER[axis])
    target = _signature(op, refs)
    if target == 0:
        return 0
    table = _piece_weights(lat, axis, refs)
    m = len(refs)
    best = dict(table)
    # closure under disjoint unions of pieces
    changed = True
    while changed:
        changed = False
        for s1, w1 in list(best.items()):
            for s2, w2 in list(best.items()):
                s = s1 ^ s2
                if s and w1 + w2 < best.get(s, np.inf):
                    best[s] = w1 + w2
                    changed = True
    if target not in best:
        raise ValueError("operator class not reachable")
    assert target < (1 << m)
    return int(best[target])


def _piece_weights(lat: Lattice, axis: str, refs: list[PauliOp]) -> dict[int, float]:
    """Shortest closed walk or free-to-free path for every signature."""
    n_nodes, edges, free, _node_of, _b = _string_graph(lat, axis)
    m = len(refs)
    layers = 1 << m
    sig = {q: 0 for q, _, _ in edges}
    for j, r in enumerate(refs):
        for q in r.qubits:
            if q in sig:
                sig[q] |= 1 << j
    rows, cols = [], []
    for q, a, b in edges:
        s = sig[q]
        for layer in range(layers):
            rows += [a * layers + layer, b * layers + layer]
            cols += [b * layers + (layer ^ s), a * layers + (layer ^ s)]
    size = n_nodes * layers
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(size, size)).tocsr()
    sources = sorted({a for q, a, b in edges if sig[q]} | {b for q, a, b in edges if sig[q]} | set(free))
    dist = shortest_path(graph, unweighted=True, indices=[v * layers for v in sources])
    best: dict[int, float] = {}
    for i, v in enumerate(sources):
        for s in range(1, layers):
            d = dist[i, v * layers + s]
            if np.isfinite(d) and d < best.get(s, np.inf):
                best[s] = d
        if v in free:
            for u in free:
                if u == v:
                    continue
                for s in range(1, layers):
                    d = dist[i, u * layers + s]
                    if np.isfinite(d) and d < best.get(s, np.inf):
                        best[s] = d
    return best


def min_logical_weight(lat: Lattice, dq: DefectQubit) -> int:
    """Code distance of a defect qubit: the lighter of its two logical classes."""
    return min(min_weight_in_class(lat, dq.logical_X), min_weight_in_class(lat, dq.logical_Z))
