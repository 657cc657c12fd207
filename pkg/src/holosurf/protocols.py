"""Logical-level computation: composite CNOTs, measurements, injection, distillation, S/T/H.

The register keeps an exact dense state of its logical slots (physical
frame) and a software Pauli frame; the logical state is frame * dense
state. Only two operations act on the dense state as gates: the braid CNOT
from a Z-cut control to an X-cut target, and the injection pulse on a fresh
X-cut |+> slot. Everything else is built from those, first-kind
measurements and frame updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

MAX_SLOTS = 12
_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


@dataclass
class MagicLabel:
    theta: float
    infidelity: float = 0.0
    error: bool = False  # twirled Z error actually present (known to the simulator only)


@dataclass
class Slot:
    name: str
    cut: str  # "X" or "Z"
    label: str  # "|0>", "|+>", "data", "magic"
    magic: MagicLabel | None = None


@dataclass
class OpRecord:
    op: str
    qubits: tuple
    outcome: int | None = None


class PoolError(RuntimeError):
    pass


class LogicalRegister:
    """Dense logical state plus software frame, with ancilla and magic pools."""

    def __init__(self, data: dict[str, str], x_ancillas: int = 2, z_ancillas: int = 2, seed: int = 0):
        self.rng = np.random.default_rng(seed)
        self.slots: dict[str, Slot] = {}
        self.order: list[str] = []
        self.frame: dict[str, list[int]] = {}
        self.alias: dict[str, str] = {}  # logical name -> slot name
        self.log: list[OpRecord] = []
        self.state = np.ones((), dtype=complex)
        for name, cut in data.items():
            slot = f"{name}@0"  # slot names never coincide with logical names
            self._new_slot(slot, cut, "|+>" if cut == "X" else "|0>")
            self.alias[name] = slot
        self.pool = {"X": [], "Z": []}
        for i in range(x_ancillas):
            self._new_slot(f"_ax{i}", "X", "|+>")
            self._declare(f"_ax{i}", "Z")
            self.pool["X"].append(f"_ax{i}")
        for i in range(z_ancillas):
            self._new_slot(f"_az{i}", "Z", "|0>")
            self._declare(f"_az{i}", "X")
            self.pool["Z"].append(f"_az{i}")
        self.magic_pool: list[str] = []
        self._n_magic = 0

    # -- dense-state plumbing ------------------------------------------------
    def _new_slot(self, name: str, cut: str, label: str) -> None:
        if cut not in ("X", "Z"):
            raise ValueError("cut type must be 'X' or 'Z'")
        if len(self.order) >= MAX_SLOTS:
            raise PoolError(f"dense register limited to {MAX_SLOTS} slots")
        vec = np.array([1, 1], dtype=complex) / math.sqrt(2) if label == "|+>" else np.array([1, 0], dtype=complex)
        self.state = np.multiply.outer(self.state, vec)
        self.order.append(name)
        self.slots[name] = Slot(name, cut, label)
        self.frame[name] = [0, 0]

    def _axis(self, slot: str) -> int:
        return self.order.index(slot)

    def _apply_1q(self, slot: str, u: np.ndarray) -> None:
        ax = self._axis(slot)
        self.state = np.moveaxis(np.tensordot(u, self.state, axes=([1], [ax])), 0, ax)

    def _cnot_dense(self, c: str, t: str) -> None:
        ci, ti = self._axis(c), self._axis(t)
        sl = [slice(None)] * self.state.ndim
        sl[ci] = 1
        sub = self.state[tuple(sl)]
        self.state[tuple(sl)] = np.flip(sub, axis=ti if ti < ci else ti - 1)

    def _measure_dense(self, slot: str, basis: str) -> int:
        if basis == "X":
            self._apply_1q(slot, _H)
        ax = self._axis(slot)
        p1 = float(np.sum(np.abs(np.take(self.state, 1, axis=ax)) ** 2))
        bit = int(self.rng.random() < p1)
        proj = np.zeros(2)
        proj[bit] = 1.0
        shape = [1] * self.state.ndim
        shape[ax] = 2
        self.state = self.state * proj.reshape(shape)
        self.state /= np.linalg.norm(self.state)
        if basis == "X":
            self._apply_1q(slot, _H)
        return bit

    def _declare(self, slot: str, basis: str) -> int:
        """Native measurement, then choose the frame so the slot reads |0> or |+>."""
        bit = self._measure_dense(slot, basis)
        self.frame[slot] = [bit, 0] if basis == "Z" else [0, bit]
        self.slots[slot].label = "|0>" if basis == "Z" else "|+>"
        self.slots[slot].magic = None
        return bit

    # -- frame-aware primitives ----------------------------------------------
    def slot_of(self, name: str) -> str:
        return self.alias.get(name, name)

    def cut(self, name: str) -> str:
        return self.slots[self.slot_of(name)].cut

    def braid_cnot(self, c: str, t: str) -> None:
        """Native CNOT from a Z-cut control to an X-cut target."""
        c, t = self.slot_of(c), self.slot_of(t)
        if self.slots[c].cut != "Z" or self.slots[t].cut != "X":
            raise ValueError("native CNOT needs a Z-cut control and an X-cut target")
        self._cnot_dense(c, t)
        fc, ft = self.frame[c], self.frame[t]
        ft[0] ^= fc[0]
        fc[1] ^= ft[1]
        self._mark_used(c, t)
        self.log.append(OpRecord("braid", (c, t)))

    def _mark_used(self, *slots: str) -> None:
        for s in slots:
            if self.slots[s].label in ("|0>", "|+>"):
                self.slots[s].label = "data"

    def measure_native(self, name: str, basis: str) -> int:
        """First-kind measurement: Z on an X-cut or X on a Z-cut slot. Returns +-1."""
        s = self.slot_of(name)
        cut = self.slots[s].cut
        if (basis, cut) not in (("Z", "X"), ("X", "Z")):
            raise ValueError(f"{basis} measurement on a {cut}-cut qubit is not native")
        bit = self._measure_dense(s, basis)
        bit ^= self.frame[s][0] if basis == "Z" else self.frame[s][1]
        out = -1 if bit else 1
        self.log.append(OpRecord(f"measure{basis}", (s,), out))
        return out

    def flip(self, name: str, x: int = 0, z: int = 0) -> None:
        """Software Pauli correction."""
        f = self.frame[self.slot_of(name)]
        f[0] ^= x
        f[1] ^= z

    def take_ancilla(self, cut: str) -> str:
        if not self.pool[cut]:
            raise PoolError(f"no free {cut}-cut ancilla")
        return self.pool[cut].pop(0)

    def recycle(self, slot: str) -> None:
        """Return a slot to its pool in the declared native state."""
        cut = self.slots[slot].cut
        self._declare(slot, "Z" if cut == "X" else "X")
        self.pool[cut].append(slot)

    # -- views ------------------------------------------------------------------
    def logical_state(self, names: list[str] | None = None) -> np.ndarray:
        """Frame-corrected state of the named logical qubits (must be unentangled from the rest)."""
        names = names if names is not None else [n for n in self.alias]
        full = self.state.copy()
        for s, (x, z) in self.frame.items():
            ax = self.order.index(s)
            if z:
                full = np.moveaxis(np.tensordot(np.diag([1, -1]).astype(complex), full, axes=([1], [ax])), 0, ax)
            if x:
                full = np.flip(full, axis=ax)
        keep = [self.order.index(self.slot_of(n)) for n in names]
        rest = [i for i in range(full.ndim) if i not in keep]
        mat = np.transpose(full, keep + rest).reshape(2 ** len(keep), -1)
        u, sv, _ = np.linalg.svd(mat, full_matrices=False)
        if len(sv) > 1 and sv[1] > 1e-9:
            raise ValueError("requested qubits are entangled with the rest of the register")
        vec = u[:, 0]
        k = int(np.argmax(np.abs(vec) > 1e-12))
        return vec * np.exp(-1j * np.angle(vec[k]))

    def set_state(self, names: list[str], vec) -> None:
        """Overwrite named slots (currently unentangled from the rest) with a given state."""
        vec = np.asarray(vec, dtype=complex)
        vec = vec / np.linalg.norm(vec)
        slots = [self.slot_of(n) for n in names]
        self.logical_state(names)  # raises if entangled
        keep = [self.order.index(s) for s in slots]
        rest = [i for i in range(self.state.ndim) if i not in keep]
        mat = np.transpose(self.state, keep + rest).reshape(2 ** len(keep), -1)
        _, _, vh = np.linalg.svd(mat, full_matrices=False)
        other = vh[0]
        new = np.multiply.outer(vec, other).reshape([2] * self.state.ndim)
        inv = np.argsort(keep + rest)
        self.state = np.transpose(new, inv)
        for s in slots:
            self.frame[s] = [0, 0]
            self.slots[s].label = "data"


# -- composite operations ------------------------------------------------------

def cnot(reg: LogicalRegister, control: str, target: str) -> LogicalRegister:
    """Logical CNOT for any pair of cut types."""
    cc, ct = reg.cut(control), reg.cut(target)
    if cc == "Z" and ct == "X":
        reg.braid_cnot(control, target)
    elif cc == "Z" and ct == "Z":
        _cnot_zz(reg, control, target)
    elif cc == "X" and ct == "X":
        _cnot_xx(reg, control, target)
    else:
        _cnot_xx(reg, control, target)
    return reg


def _cnot_zz(reg: LogicalRegister, c: str, t: str) -> None:
    a1 = reg.take_ancilla("X")  # |0> on an X-cut pair
    a2 = reg.take_ancilla("Z")  # |+> on a Z-cut pair
    reg.braid_cnot(t, a1)
    reg.braid_cnot(c, a1)
    reg.braid_cnot(a2, a1)
    mz = reg.measure_native(a1, "Z")
    mx = reg.measure_native(t, "X")
    old_t = reg.slot_of(t)
    reg.alias[t] = a2
    if mz == -1:
        reg.flip(t, x=1)
    if mx == -1:
        reg.flip(t, z=1)
        reg.flip(c, z=1)
    reg.recycle(a1)
    reg.recycle(old_t)


def _cnot_xx(reg: LogicalRegister, c: str, t: str) -> None:
    """X-cut control; the target may be X-cut (native) or Z-cut (nested composite)."""
    a1 = reg.take_ancilla("X")  # |0> on an X-cut pair, becomes the control
    a2 = reg.take_ancilla("Z")  # |+> on a Z-cut pair
    reg.braid_cnot(a2, c)
    cnot(reg, a2, t)
    reg.braid_cnot(a2, a1)
    mz = reg.measure_native(c, "Z")
    mx = reg.measure_native(a2, "X")
    old_c = reg.slot_of(c)
    reg.alias[c] = a1
    if mz == -1:
        reg.flip(c, x=1)
        reg.flip(t, x=1)
    if mx == -1:
        reg.flip(c, z=1)
    reg.recycle(old_c)
    reg.recycle(a2)


def measure_logical(reg: LogicalRegister, qubit: str, basis: str) -> int:
    """Non-destructive logical measurement; second-kind cases go through an ancilla."""
    cut = reg.cut(qubit)
    if (basis, cut) in (("Z", "X"), ("X", "Z")):
        return reg.measure_native(qubit, basis)
    if basis == "Z":  # Z on a Z-cut qubit: copy onto an X-cut |0> ancilla
        a = reg.take_ancilla("X")
        reg.braid_cnot(qubit, a)
        out = reg.measure_native(a, "Z")
        reg.recycle(a)
        return out
    if basis == "X":  # X on an X-cut qubit: parity onto a Z-cut |+> ancilla
        a = reg.take_ancilla("Z")
        reg.braid_cnot(a, qubit)
        out = reg.measure_native(a, "X")
        reg.recycle(a)
        return out
    raise ValueError("basis must be 'X' or 'Z'")


def recycle_chain(reg: LogicalRegister, qubit: str) -> tuple[int, int]:
    """Measure Z on an X-cut qubit, then CNOT from a |+> Z-cut ancilla and measure it in X.

    The X-cut qubit ends in an X eigenstate and is ready for reuse.
    """
    if reg.cut(qubit) != "X":
        raise ValueError("recycling chain applies to X-cut qubits")
    mz = reg.measure_native(qubit, "Z")
    a = reg.take_ancilla("Z")
    reg.braid_cnot(a, qubit)
    mx = reg.measure_native(a, "X")
    reg.recycle(a)
    return mz, mx


def prepare_plus(reg: LogicalRegister, qubit: str) -> None:
    """Bring an X-cut qubit to |+> with the recycling chain; the X outcome fixes the sign."""
    _, mx = recycle_chain(reg, qubit)
    if mx == -1:
        reg.flip(qubit, z=1)
    reg.slots[reg.slot_of(qubit)].label = "|+>"


# -- injection -----------------------------------------------------------------

def inject(
    reg: LogicalRegister, qubit: str, theta: float, flip_prob: float = 0.0, theta_sigma: float = 0.0
) -> LogicalRegister:
    """Turn an X-cut |+> slot into |0> + e^{i theta}|1> with an optional noise model.

    A Z-cut target receives the state by injecting into an X-cut ancilla and
    swapping it in.
    """
    if reg.cut(qubit) == "Z":
        a = _borrow(reg, reg.take_ancilla("X"))
        prepare_plus(reg, a)
        inject(reg, a, theta, flip_prob, theta_sigma)
        magic = reg.slots[reg.slot_of(a)].magic
        swap(reg, a, qubit)
        s = reg.slot_of(qubit)
        reg.slots[s].label, reg.slots[s].magic = "magic", magic
        reg.recycle(reg.alias.pop(a))
        return reg
    s = reg.slot_of(qubit)
    if reg.slots[s].label != "|+>":
        raise ValueError("injection needs a fresh X-cut qubit in |+>")
    reg.frame[s][0] = 0  # X acts trivially on |+>
    eps = reg.rng.normal(0.0, theta_sigma) if theta_sigma > 0 else 0.0
    ang = theta + eps
    reg._apply_1q(s, np.diag([np.exp(-0.5j * ang), np.exp(0.5j * ang)]))
    err = bool(flip_prob > 0 and reg.rng.random() < flip_prob)
    if err:
        reg.flip(s, z=1)
    reg.slots[s].label = "magic"
    reg.slots[s].magic = MagicLabel(theta, flip_prob, err)
    reg.log.append(OpRecord("inject", (s,)))
    return reg




def swap(reg: LogicalRegister, a: str, b: str) -> None:
    cnot(reg, a, b)
    cnot(reg, b, a)
    cnot(reg, a, b)


def fresh_magic(reg: LogicalRegister, theta: float, flip_prob: float = 0.0) -> str:
    """Injected magic state on a new X-cut slot, added to the magic pool."""
    name = f"_m{reg._n_magic}"
    reg._n_magic += 1
    reg._new_slot(name, "X", "|+>")
    inject(reg, name, theta, flip_prob)
    reg.magic_pool.append(name)
    return name


def _take_magic(reg: LogicalRegister, theta: float) -> str:
    for i, s in enumerate(reg.magic_pool):
        m = reg.slots[s].magic
        if m is not None and math.isclose(m.theta, theta):
            return reg.magic_pool.pop(i)
    raise PoolError(f"no magic state with angle {theta:.4f} available")


# -- S, T, H -----------------------------------------------------------------------

def apply_S(reg: LogicalRegister, qubit: str) -> LogicalRegister:
    """S via a |Y> state: CNOT |Y> -> qubit, measure Z, fix up with Z X on the output."""
    y = _borrow(reg, _take_magic(reg, math.pi / 2))
    cnot(reg, y, qubit)
    m = measure_logical(reg, qubit, "Z")
    old = reg.slot_of(qubit)
    _hand_over(reg, y, qubit)
    if m == -1:
        reg.flip(qubit, x=1, z=1)
    _retire(reg, old)
    reg.log.append(OpRecord("S", (qubit,), m))
    return reg


def apply_RX(reg: LogicalRegister, qubit: str) -> LogicalRegister:
    """exp(-i pi/4 X) via a |Y> state: CNOT qubit -> |Y>, measure X.

    With |Y> = |0> + i|1> the +1 branch leaves exp(+i pi/4 X), fixed by X;
    the -1 branch leaves Z exp(-i pi/4 X), fixed by Z.
    """
    y = _borrow(reg, _take_magic(reg, math.pi / 2))
    cnot(reg, qubit, y)
    m = measure_logical(reg, qubit, "X")
    old = reg.slot_of(qubit)
    _hand_over(reg, y, qubit)
    if m == 1:
        reg.flip(qubit, x=1)
    else:
        reg.flip(qubit, z=1)
    _retire(reg, old)
    reg.log.append(OpRecord("RX", (qubit,), m))
    return reg


def apply_T(reg: LogicalRegister, qubit: str) -> LogicalRegister:
    """T via an |A> state; the -1 branch yields X T^dagger and needs Z X S."""
    a = _borrow(reg, _take_magic(reg, math.pi / 4))
    cnot(reg, a, qubit)
    m = measure_logical(reg, qubit, "Z")
    old = reg.slot_of(qubit)
    _hand_over(reg, a, qubit)
    _retire(reg, old)
    if m == -1:
        apply_S(reg, qubit)
        reg.flip(qubit, x=1, z=1)
    reg.log.append(OpRecord("T", (qubit,), m))
    return reg


def apply_H(reg: LogicalRegister, qubit: str) -> LogicalRegister:
    """Hadamard as S, then exp(-i pi/4 X), then S."""
    apply_S(reg, qubit)
    apply_RX(reg, qubit)
    apply_S(reg, qubit)
    return reg


def _retire(reg: LogicalRegister, slot: str) -> None:
    reg.recycle(slot)


def _borrow(reg: LogicalRegister, slot: str) -> str:
    """Temporary logical name for a consumed magic slot (composite CNOTs may move it)."""
    name = f"_use{len(reg.log)}_{slot}"
    reg.alias[name] = slot
    return name


def _hand_over(reg: LogicalRegister, tmp: str, qubit: str) -> None:
    """The teleported output now carries the logical name ``qubit``."""
    slot = reg.alias.pop(tmp)
    reg.alias[qubit] = slot
    reg.slots[slot].label, reg.slots[slot].magic = "data", None


# -- distillation ------------------------------------------------------------------

STEANE_HX = np.array(
    [[0, 0, 0, 1, 1, 1, 1], [0, 1, 1, 0, 0, 1, 1], [1, 0, 1, 0, 1, 0, 1]], dtype=np.uint8
)
RM15_HX = np.array([[(v >> i) & 1 for v in range(1, 16)] for i in range(4)], dtype=np.uint8)


@dataclass
class CSSCode:
    """Code given by its X checks (detecting Z errors) and logical X support."""

    name: str
    hx: np.ndarray
    logical_x: np.ndarray
    encoder: list[tuple[int, int]] = field(default_factory=list)  # CNOTs (control, target)
    pivots: list[int] = field(default_factory=list)
    data_qubit: int = 0

    @property
    def n(self) -> int:
        return self.hx.shape[1]


def _rref(mat: np.ndarray) -> tuple[np.ndarray, list[int]]:
    m = mat.copy() % 2
    pivots = []
    r = 0
    for c in range(m.shape[1]):
        rows = [i for i in range(r, m.shape[0]) if m[i, c]]
        if not rows:
            continue
        m[[r, rows[0]]] = m[[rows[0], r]]
        for i in range(m.shape[0]):
            if i != r and m[i, c]:
                m[i] ^= m[r]
        pivots.append(c)
        r += 1
        if r == m.shape[0]:
            break
    return m[:r], pivots


def css_encoder(name: str, hx: np.ndarray) -> CSSCode:
    """Encoder |x> -> sum over the X-check span shifted by x * logical X.

    The X-check rows (in reduced echelon form) are fanned out from their pivot
    qubits prepared in |+>; the logical X support, cleared on the pivot
    columns, is fanned out from the input qubit.
    """
    g, piv = _rref(hx)
    n = hx.shape[1]
    lx = np.ones(n, dtype=np.uint8)
    for row, p in zip(g, piv):
        if lx[p]:
            lx ^= row
    j0 = int(np.nonzero(lx)[0][0])
    cnots = [(j0, int(t)) for t in np.nonzero(lx)[0] if t != j0]
    for row, p in zip(g, piv):
        cnots += [(p, int(t)) for t in np.nonzero(row)[0] if t != p]
    return CSSCode(name, hx, lx, cnots, list(piv), j0)


STEANE = css_encoder("steane", STEANE_HX)
RM15 = css_encoder("rm15", RM15_HX)


def decode_z_errors(code: CSSCode, z_errors: np.ndarray) -> tuple[bool, bool]:
    """Propagate Z errors through the reversed encoder.

    Returns (accept, output_error): pivots read in the X basis must all be
    +1; the input qubit carries the output Z error.
    """
    z = np.array(z_errors, dtype=np.uint8) % 2
    for c, t in reversed(code.encoder):
        z[c] ^= z[t]  # Z on the target spreads to the control
    accept = not any(z[p] for p in code.pivots)
    return accept, bool(z[code.data_qubit])


def parity_check_route(code: CSSCode, z_errors: np.ndarray) -> tuple[bool, bool]:
    """Same decision from the check matrix: syndrome and overlap with logical X."""
    z = np.array(z_errors, dtype=np.uint8) % 2
    accept = not (code.hx.astype(int) @ z % 2).any()
    return accept, bool(int(code.logical_x.astype(int) @ z) % 2)


def output_error_rate(code: CSSCode, p: float) -> tuple[float, float]:
    """Exact (output error | accept, accept probability) for iid input flips at rate p."""
    n = code.n
    acc = err = 0.0
    for mask in range(1 << n):
        e = np.array([(mask >> i) & 1 for i in range(n)], dtype=np.uint8)
        w = int(e.sum())
        prob = p**w * (1 - p) ** (n - w)
        a, o = decode_z_errors(code, e)
        if a:
            acc += prob
            if o:
                err += prob
    return err / acc, acc


def weight3_coefficient(code: CSSCode) -> int:
    """Number of weight-3 input error patterns that pass the checks and flip the output."""
    n = code.n
    count = 0
    for trip in combinations(range(n), 3):
        e = np.zeros(n, dtype=np.uint8)
        e[list(trip)] = 1
        a, o = parity_check_route(code, e)
        count += a and o
    return count


def _distill(reg: LogicalRegister, inputs: list[str], code: CSSCode, theta: float) -> dict:
    if len(inputs) < code.n:
        raise PoolError(f"{code.name} distillation needs {code.n} inputs")
    inputs = inputs[: code.n]
    labels = []
    for s in inputs:
        m = reg.slots[reg.slot_of(s)].magic
        if m is None or not math.isclose(m.theta, theta):
            raise ValueError(f"input {s} is not a magic state with angle {theta:.4f}")
        labels.append(m)
    errs = np.array([m.error for m in labels], dtype=np.uint8)
    accept, out_err = decode_z_errors(code, errs)
    p_in = float(np.mean([m.infidelity for m in labels]))
    p_out = output_error_rate(code, p_in)[0] if p_in > 0 else 0.0
    out = reg.slot_of(inputs[code.data_qubit])
    for i, s in enumerate(inputs):
        slot = reg.slot_of(s)
        if s in reg.magic_pool:
            reg.magic_pool.remove(s)
        if slot == out and accept:
            continue
        reg.recycle(slot)
    if accept:
        vec = np.array([1, np.exp(1j * theta)]) / math.sqrt(2)
        reg.set_state([out], vec)
        if out_err:
            reg.flip(out, z=1)
        reg.slots[out].label = "magic"
        reg.slots[out].magic = MagicLabel(theta, p_out, out_err)
        reg.magic_pool.append(out)
    reg.log.append(OpRecord(f"distill_{code.name}", tuple(inputs), 1 if accept else -1))
    return {"output": out if accept else None, "accept": accept, "output_error": out_err, "p_out": p_out}


def distill_Y(reg: LogicalRegister, inputs: list[str]) -> dict:
    return _distill(reg, inputs, STEANE, math.pi / 2)


def distill_A(reg: LogicalRegister, inputs: list[str]) -> dict:
    return _distill(reg, inputs, RM15, math.pi / 4)


# -- logical programs -------------------------------------------------------------

def run_program(program: dict, seed: int = 0) -> dict:
    """Execute {"qubits": {name: cut}, "ops": [{"op": ..., "qubits": [...], "params": {...}}]}."""
    reg = LogicalRegister(
        program["qubits"], program.get("x_ancillas", 2), program.get("z_ancillas", 2), seed=seed
    )
    outcomes = []
    for rec in program.get("ops", []):
        op, qs, params = rec["op"], rec.get("qubits", []), rec.get("params", {})
        if op == "cnot":
            cnot(reg, qs[0], qs[1])
        elif op == "measure":
            outcomes.append({"qubit": qs[0], "basis": params.get("basis", "Z"), "outcome": measure_logical(reg, qs[0], params.get("basis", "Z"))})
        elif op == "magic":
            for _ in range(int(params.get("count", 1))):
                fresh_magic(reg, float(params["theta"]), float(params.get("flip_prob", 0.0)))
        elif op in ("S", "T", "H", "RX"):
            {"S": apply_S, "T": apply_T, "H": apply_H, "RX": apply_RX}[op](reg, qs[0])
        else:
            raise ValueError(f"unknown op {op!r}")
    return {"outcomes": outcomes, "ops": len(reg.log)}
