"""Heisenberg-picture stabilizer tableau under pi/4 rotations and generator toggles."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations

from .lattice import DefectQubit, Lattice, patch_logicals
from .pauli import PauliOp, commutes, conjugate_by_rotation, multiply


class UnknownSignError(ValueError):
    """Raised when a generator is switched on without a derivable eigenvalue."""


@dataclass
class GenEntry:
    op: PauliOp  # unsigned operator
    sign: int  # eigenvalue of ``op`` on the code state
    label: str

    def signed(self) -> PauliOp:
        return self.op if self.sign == 1 else self.op.scaled(-1)


@dataclass
class LogicalPair:
    name: str
    X: PauliOp
    Z: PauliOp


@dataclass
class EigenspaceLabel:
    s: list[int]

    def energy(self, J: float = 1.0) -> float:
        return -J * sum(self.s)


def _key(op: PauliOp) -> tuple[int, int]:
    return (op.x, op.z)


@dataclass
class Tableau:
    n: int
    generators: list[GenEntry] = field(default_factory=list)
    logicals: list[LogicalPair] = field(default_factory=list)
    history: list = field(default_factory=list)
    max_weight: int | None = 4
    retired: dict = field(default_factory=dict)
    _by_qubit: dict = field(default_factory=dict, repr=False)
    _by_key: dict = field(default_factory=dict, repr=False)
    _echelon_cache: dict | None = field(default=None, repr=False)
    _rotations: int = 0

    # -- indexing ------------------------------------------------------------
    def _index_add(self, i: int) -> None:
        g = self.generators[i]
        for q in g.op.qubits:
            self._by_qubit.setdefault(q, set()).add(i)
        self._by_key[_key(g.op)] = i

    def _index_remove(self, i: int) -> None:
        g = self.generators[i]
        for q in g.op.qubits:
            self._by_qubit[q].discard(i)
        self._by_key.pop(_key(g.op), None)

    def _rebuild_index(self) -> None:
        self._by_qubit = {}
        self._by_key = {}
        for i in range(len(self.generators)):
            self._index_add(i)

    def touching(self, qubits) -> set[int]:
        out: set[int] = set()
        for q in qubits:
            out |= self._by_qubit.get(q, set())
        return out

    def anticommuting(self, p: PauliOp) -> list[int]:
        """Indices of active generators anticommuting with p."""
        return sorted(i for i in self.touching(p.qubits) if not commutes(self.generators[i].op, p))

    def find(self, op: PauliOp) -> int | None:
        return self._by_key.get(_key(op))

    def find_label(self, label: str) -> int | None:
        for i, g in enumerate(self.generators):
            if g.label == label:
                return i
        return None

    def signed(self, i: int) -> PauliOp:
        return self.generators[i].signed()

    def logical(self, name: str) -> LogicalPair:
        for lp in self.logicals:
            if lp.name == name:
                return lp
        raise KeyError(name)

    def copy(self) -> Tableau:
        t = Tableau(
            self.n,
            [GenEntry(g.op, g.sign, g.label) for g in self.generators],
            [LogicalPair(lp.name, lp.X, lp.Z) for lp in self.logicals],
            list(self.history),
            self.max_weight,
            dict(self.retired),
        )
        t._rotations = self._rotations
        t._rebuild_index()
        return t

    # -- mutation ------------------------------------------------------------
    def _set_generator(self, i: int, signed: PauliOp) -> None:
        self._index_remove(i)
        g = self.generators[i]
        g.op = signed.unsigned()
        g.sign = 1 if signed.phase == 1 else -1
        self._index_add(i)

    def _conjugate_all(self, q: PauliOp) -> None:
        for i in self.anticommuting(q):
            self._set_generator(i, conjugate_by_rotation(self.signed(i), q))
        for lp in self.logicals:
            lp.X = conjugate_by_rotation(lp.X, q)
            lp.Z = conjugate_by_rotation(lp.Z, q)
        self._rotations += 1
        self._echelon_cache = None

    def add_generator(self, op: PauliOp, sign: int, label: str) -> int:
        self.generators.append(GenEntry(op.unsigned(), sign, label))
        i = len(self.generators) - 1
        self._index_add(i)
        self._echelon_cache = None
        return i

    def remove_generator(self, i: int) -> GenEntry:
        self._index_remove(i)
        g = self.generators.pop(i)
        self._rebuild_index()
        self._echelon_cache = None
        return g

    def check_weights(self) -> None:
        if self.max_weight is None:
            return
        for g in self.generators:
            if g.op.weight > self.max_weight:
                raise AssertionError(f"generator {g.label} has weight {g.op.weight} > {self.max_weight}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "generators": [{"label": g.label, "op": str(g.op), "sign": g.sign} for g in self.generators],
                "logicals": [{"name": lp.name, "X": str(lp.X), "Z": str(lp.Z)} for lp in self.logicals],
                "steps_applied": len(self.history),
            },
            indent=1,
        )


def from_lattice(lat: Lattice, include_patch: bool = True) -> Tableau:
    """Tableau of the lattice's active generators (all +1) and its defect qubits."""
    tab = Tableau(lat.n_qubits)
    for g in lat.generators:
        if g.active:
            tab.generators.append(GenEntry(g.op(), 1, g.label))
    tab._rebuild_index()
    if include_patch:
        px, pz = patch_logicals(lat)
        tab.logicals.append(LogicalPair("patch", px, pz))
    for dq in lat.defects:
        register_defect(tab, dq)
    return tab


def register_defect(tab: Tableau, dq: DefectQubit) -> None:
    tab.logicals.append(LogicalPair(dq.name, dq.logical_X, dq.logical_Z))


def apply_rotation(tab: Tableau, q: PauliOp, record: bool = True) -> Tableau:
    """Conjugate every active generator and logical by exp(i pi/4 q)."""
    if not q.is_hermitian:
        raise ValueError("rotation generator must be Hermitian")
    tab._conjugate_all(q)
    if record:
        from .deformation import DeformationStep

        tab.history.append(DeformationStep(rotations=(q,)))
    return tab


def toggle_generator(tab: Tableau, gen: PauliOp | str, on: bool, sign: int | None = None) -> Tableau:
    """Switch a Hamiltonian term off or on.

    Switching on needs a known eigenvalue: it is derived from the current
    stabilizer group when the operator belongs to it, restored from the
    retirement ledger when no rotation has happened since it was switched off,
    or taken from ``sign``.
    """
    if not on:
        i = tab.find_label(gen) if isinstance(gen, str) else tab.find(gen)
        if i is None:
            raise KeyError(f"no active generator {gen}")
        g = tab.remove_generator(i)
        tab.retired[_key(g.op)] = (g.sign, tab._rotations, g.label)
        return tab
    if isinstance(gen, str):
        raise ValueError("switching on needs the operator itself")
    op = gen.unsigned()
    if tab.find(op) is not None:
        raise ValueError(f"generator {op} already active")
    for i in tab.anticommuting(op):
        raise ValueError(f"{op} anticommutes with active generator {tab.generators[i].label}")
    for lp in tab.logicals:
        if not (commutes(op, lp.X) and commutes(op, lp.Z)):
            raise ValueError(f"{op} anticommutes with logical {lp.name}")
    known = membership_sign(tab, op)
    label = None
    if known is None:
        rec = tab.retired.get(_key(op))
        if rec is not None and rec[1] == tab._rotations:
            known, label = rec[0], rec[2]
    if known is None:
        known = sign
    elif sign is not None and sign != known:
        raise ValueError(f"requested sign {sign} contradicts derived sign {known}")
    if known is None:
        raise UnknownSignError(f"eigenvalue of {op} is not determined by the current state")
    if label is None:
        label = _default_label(op)
    tab.add_generator(op, known, label)
    return tab


def _default_label(op: PauliOp) -> str:
    return "".join(f"{a.lower()}{q}" for q, a in op.support.items())


# -- linear algebra over the stabilizer group --------------------------------

def _vec(op: PauliOp, n: int) -> int:
    return op.x | (op.z << n)


def _echelon(rows: list[PauliOp], n: int) -> dict[int, PauliOp]:
    """Reduced row echelon form keyed by pivot bit, with exact phases."""
    piv: dict[int, PauliOp] = {}
    for r in rows:
        r = _reduce(r, piv, n)
        v = _vec(r, n)
        if v == 0:
            if r.phase != 1:
                raise ValueError("inconsistent stabilizer signs (-I in the group)")
            continue
        lead = v.bit_length() - 1
        for b in list(piv):
            if (_vec(piv[b], n) >> lead) & 1:
                piv[b] = multiply(piv[b], r)
        piv[lead] = r
    return piv


def _reduce(p: PauliOp, piv: dict[int, PauliOp], n: int) -> PauliOp:
    for b in sorted(piv, reverse=True):
        if (_vec(p, n) >> b) & 1:
            p = multiply(p, piv[b])
    return p


def _global_echelon(tab: Tableau) -> dict[int, PauliOp]:
    if tab._echelon_cache is None:
        tab._echelon_cache = _echelon([g.signed() for g in tab.generators], tab.n)
    return tab._echelon_cache


def membership_sign(tab: Tableau, p: PauliOp, max_rounds: int = 6) -> int | None:
    """Return s if s*p (s = +-1) lies in the stabilizer group, else None."""
    p = p.unsigned()
    region = set(p.qubits)
    seen: set[int] = set()
    for _ in range(max_rounds):
        idx = tab.touching(region)
        if idx == seen:
            break
        seen = idx
        piv = _echelon([tab.signed(i) for i in sorted(idx)], tab.n)
        r = _reduce(p, piv, tab.n)
        if r.is_identity:
            return 1 if r.phase == 1 else -1
        for i in idx:
            region |= set(tab.generators[i].op.qubits)
    r = _reduce(p, _global_echelon(tab), tab.n)
    if r.is_identity:
        return 1 if r.phase == 1 else -1
    return None


def _require_normalizer(tab: Tableau, p: PauliOp) -> None:
    bad = tab.anticommuting(p)
    if bad:
        raise ValueError(f"{p} anticommutes with active generator {tab.generators[bad[0]].label}")


def canonical_representative(tab: Tableau, p: PauliOp) -> PauliOp:
    """Unique coset representative from the reduced echelon form of the group."""
    _require_normalizer(tab, p)
    return _reduce(p, _global_echelon(tab), tab.n)


def equivalent(tab: Tableau, a: PauliOp, b: PauliOp) -> bool:
    """True iff a and b act identically on the code space (equal up to a stabilizer)."""
    _require_normalizer(tab, a)
    _require_normalizer(tab, b)
    if a == b:
        return True
    prod = multiply(a, b)
    # a*b must be a stabilizer element with eigenvalue +1 (a, b Hermitian => a*b = a*b)
    if not prod.is_hermitian:
        return False
    s = membership_sign(tab, prod)
    return s is not None and s * (1 if prod.phase == 1 else -1) == 1


def _single_qubit_elements(tab: Tableau, qubits) -> list[PauliOp]:
    """Signed single-qubit stabilizer elements sitting on the given qubits."""
    out = []
    for q in qubits:
        for axis in ("X", "Z"):
            op = PauliOp.single(q, axis)
            if tab.anticommuting(op):
                continue
            s = membership_sign(tab, op, max_rounds=2)
            if s is not None:
                out.append(op if s == 1 else op.scaled(-1))
    return out


def _pool(tab: Tableau, p: PauliOp) -> list[PauliOp]:
    pool = {_key(g): g for g in (tab.signed(i) for i in sorted(tab.touching(p.qubits)))}
    for g in _single_qubit_elements(tab, p.qubits):
        pool.setdefault(_key(g), g)
    return list(pool.values())


def reduce_mod_stabilizer(tab: Tableau, p: PauliOp, budget: int = 16) -> tuple[PauliOp, bool]:
    """Low-weight representative of p's coset.

    The search pool holds the generators overlapping the current operator and
    any single-qubit stabilizer elements on its support. Greedy descent is
    followed by an exhaustive search over all subsets of the pool members of
    the operator's own type (pure X, pure Z, or everything when mixed) when
    there are at most ``budget`` of them. The flag reports whether that
    exhaustive pass ran; when it is False the greedy result is returned.
    """
    _require_normalizer(tab, p)
    cur = p
    while True:
        best = None
        for g in _pool(tab, cur):
            cand = multiply(cur, g)
            if cand.weight < (best or cur).weight:
                best = cand
        if best is None:
            break
        cur = best
    pool = _pool(tab, cur)
    if cur.z == 0:
        pool = [g for g in pool if g.z == 0]
    elif cur.x == 0:
        pool = [g for g in pool if g.x == 0]
    if len(pool) > budget:
        return cur, False
    best = cur
    acc = cur
    # Gray-code walk over all subsets
    for step in range(1, 1 << len(pool)):
        bit = (step & -step).bit_length() - 1
        acc = multiply(acc, pool[bit])
        if acc.weight < best.weight or (acc.weight == best.weight and _key(acc) < _key(best)):
            best = acc
    return best, True


# -- invariants --------------------------------------------------------------

def check_invariants(tab: Tableau) -> None:
    """Exhaustive commutation checks; raises AssertionError on violation."""
    gens = [g.op for g in tab.generators]
    for i, g in enumerate(gens):
        for j in tab.touching(g.qubits):
            if j > i and not commutes(g, gens[j]):
                raise AssertionError(f"generators {tab.generators[i].label} and {tab.generators[j].label} anticommute")
    for lp in tab.logicals:
        for op in (lp.X, lp.Z):
            bad = tab.anticommuting(op)
            if bad:
                raise AssertionError(f"logical {lp.name} anticommutes with {tab.generators[bad[0]].label}")
        if commutes(lp.X, lp.Z):
            raise AssertionError(f"logical pair {lp.name} commutes")
    for a, b in combinations(tab.logicals, 2):
        for pa in (a.X, a.Z):
            for pb in (b.X, b.Z):
                if not commutes(pa, pb):
                    raise AssertionError(f"logicals {a.name} and {b.name} anticommute")
    tab.check_weights()


def symplectic_rank(ops: list[PauliOp], n: int) -> int:
    piv: dict[int, int] = {}
    rank = 0
    for op in ops:
        v = _vec(op, n)
        while v:
            lead = v.bit_length() - 1
            if lead in piv:
                v ^= piv[lead]
            else:
                piv[lead] = v
                rank += 1
                break
    return rank


def eigenspace_label(tab: Tableau, error: PauliOp) -> EigenspaceLabel:
    """Eigenvalues of the signed generators after ``error`` acts on the code state."""
    bad = set(tab.anticommuting(error))
    return EigenspaceLabel([-1 if i in bad else 1 for i in range(len(tab.generators))])
