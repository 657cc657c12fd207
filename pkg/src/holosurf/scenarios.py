"""Ready-made geometries shared by tests and the command line."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import lattice as lt
from .deformation import braid, enlarge_hole, execute, expand_hole
from .lattice import DefectQubit, Lattice
from .pauli import PauliOp, multiply
from .tableau import Tableau, equivalent, from_lattice, reduce_mod_stabilizer


@dataclass
class Scenario:
    lat: Lattice
    tab: Tableau
    defects: dict[str, DefectQubit]
    labels: dict[int, int] = field(default_factory=dict)  # reference label -> qubit id
    extra: dict = field(default_factory=dict)

    def q(self, label: int) -> int:
        return self.labels[label]

    def op(self, spec: dict[int, str]) -> PauliOp:
        return PauliOp({self.labels[k]: a for k, a in spec.items()})


def enlargement_square(L: int = 8) -> Scenario:
    """Minimal Z-cut hole s1 with its lower neighbour p2, p3 and right neighbour p4.

    Labels: 1 = s1|p2, 2 = p2|p3, 3 = p3|p4, 4 = s1|p4, then the remaining
    legs of p2 (5, 6), p3 (7, 8) and p4 (9, 10) in qubit-id order.
    """
    lat = lt.build(L)
    s1 = (4, 9)
    p2, p3, p4 = (6, 9), (6, 11), (4, 11)
    dq = lt.create_double_cut(lat, "Z", s1, (4, 1), name="a")
    tab = from_lattice(lat)
    sh = lat.shared_qubit
    labels = {1: sh(s1, p2), 2: sh(p2, p3), 3: sh(p3, p4), 4: sh(s1, p4)}
    for first, cell in ((5, p2), (7, p3), (9, p4)):
        rest = sorted(lat.generator(cell).support - set(labels.values()))
        labels[first], labels[first + 1] = rest
    return Scenario(lat, tab, {"a": dq}, labels, {"s1": s1, "p2": p2, "p3": p3, "p4": p4})


def tall_hole(L: int = 12, height: int = 4, width: int = 2) -> Scenario:
    """Z-cut hole ``height`` cells tall and ``width`` wide, partner hole far left.

    Labels for width 2: 1..4 right edges of column
    B (top to bottom), 5..8 edges between columns A and B, 9..11 vertical
    edges inside B, 12..14 vertical edges inside A.
    """
    lat = lt.build(L)
    top = (4, 9)
    dq = lt.create_double_cut(lat, "Z", top, (4, 1), name="a")
    tab = from_lattice(lat)
    # expand_hole plans from the current geometry, so the two phases run separately
    execute(tab, expand_hole(lat, dq, "down", height - 1), lat)
    if width > 1:
        execute(tab, expand_hole(lat, dq, "right", width - 1), lat)
    colA = [(top[0] + 2 * i, top[1]) for i in range(height)]
    colB = [(r, c + 2) for r, c in colA]
    colC = [(r, c + 2) for r, c in colB]
    sh = lat.shared_qubit
    labels: dict[int, int] = {}
    for i in range(height):
        labels[1 + i] = sh(colB[i], colC[i])
        labels[5 + i] = sh(colA[i], colB[i])
    for i in range(height - 1):
        labels[9 + i] = sh(colB[i], colB[i + 1])
        labels[12 + i] = sh(colA[i], colA[i + 1])
    return Scenario(lat, tab, {"a": dq}, labels, {"colA": colA, "colB": colB, "colC": colC})


def movement_rows(L: int = 18, height: int = 3, units: int = 2) -> Scenario:
    """Width-2 hole about to expand ``units`` cells right, with errors watched on its top and bottom rows.

    Labels: 1 and 2 are the right boundary edges of the top and bottom rows.
    3..7 and 8..12 (for two units) are the outer edges of the strip each of
    those rows sweeps, excluding labels 1 and 2, in qubit-id order.
    """
    if height < 3:
        raise ValueError("the watched rows must not be adjacent")
    sc = tall_hole(L, height, 2)
    colB = sc.extra["colB"]
    labels = {1: sc.q(1), 2: sc.q(height)}
    nxt = 3
    for row, lab in ((colB[0], 1), (colB[-1], 2)):
        strip = [(row[0], row[1] + 2 * k) for k in range(1, units + 1)]
        edges: set[int] = set()
        for cell in strip:
            edges ^= sc.lat.generator(cell).support
        for q in sorted(edges - {labels[lab]}):
            labels[nxt] = q
            nxt += 1
    return Scenario(sc.lat, sc.tab, sc.defects, labels, {"units": units, "height": height})


def braid_setup(L: int = 18, d: int = 8) -> Scenario:
    """Z-cut pair (control) above-left of an X-cut pair (target), all holes enlarged to perimeter d."""
    lat = lt.build(L)
    ctrl = lt.create_double_cut(lat, "Z", (8, 17), (8, 3), name="control")
    targ = lt.create_double_cut(lat, "X", (17, 18), (17, 30), name="target")
    tab = from_lattice(lat)
    for dq in (ctrl, targ):
        execute(tab, enlarge_hole(lat, dq, d), lat)
        dq.d = d
    return Scenario(lat, tab, {"control": ctrl, "target": targ})


def run_braid(sc: Scenario, moves=None):
    """Execute a braid on a copy of the scenario; returns (path, steps, tableau)."""
    lat = sc.lat.copy()
    tab = sc.tab.copy()
    ctrl = next(d for d in lat.defects if d.name == "control")
    targ = next(d for d in lat.defects if d.name == "target")
    path, steps = braid(lat, ctrl, targ, moves)
    execute(tab, steps, lat)
    return path, steps, tab, lat


def braid_report(sc: Scenario, moves=None) -> dict:
    """Run the braid and compare each final logical with the CNOT image of the originals."""
    c0, t0 = sc.tab.logical("control"), sc.tab.logical("target")
    expected = {
        "X_control": multiply(c0.X, t0.X),
        "X_target": t0.X,
        "Z_control": c0.Z,
        "Z_target": multiply(c0.Z, t0.Z),
    }
    path, steps, tab, lat = run_braid(sc, moves)
    c1, t1 = tab.logical("control"), tab.logical("target")
    actual = {"X_control": c1.X, "X_target": t1.X, "Z_control": c1.Z, "Z_target": t1.Z}
    rows = []
    for key, exp in expected.items():
        reduced, _ = reduce_mod_stabilizer(tab, actual[key])
        rows.append({"logical": key, "expected": str(exp), "reduced": str(reduced), "ok": equivalent(tab, actual[key], exp)})
    return {"steps": len(steps), "winding": path.winding, "mappings": rows, "ok": all(r["ok"] for r in rows)}
