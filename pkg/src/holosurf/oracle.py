"""Dense state-vector checks of the adiabatic rotation picture on small systems.

The Hamiltonian during a step is H(t) = U(t) H_prev U(t)^dagger with
U = prod exp(i f(t) Q); each term either commutes with Q or becomes
cos(2f) S + sin(2f) iQS. The integrator is fixed-step RK4 on sparse
matrices; predictions use the dense rotations g = (1 + iQ)/sqrt(2).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.special import beta as beta_fn
from scipy.special import betainc

from .pauli import PauliOp, commutes, conjugate_by_rotation, multiply

MAX_QUBITS = 12


class IntegrationError(RuntimeError):
    pass


class OpenLoopError(ValueError):
    pass


@dataclass
class DenseSystem:
    """H0 = sum c_j S_j (real c_j, Hermitian Paulis) and a list of rotation steps."""

    n: int
    terms: list[tuple[float, PauliOp]]
    steps: list[list[PauliOp]] = field(default_factory=list)

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise ValueError(f"dense systems hold 1..{MAX_QUBITS} qubits")


@dataclass(frozen=True)
class SchedulePolicy:
    """Per-step duration T, boundary-flat order N and RK4 step dt."""

    T: float
    order: int = 4
    dt: float = 0.01

    def f(self, s: float) -> float:
        """Rotation angle at fraction s of the step: (pi/4) * smoothstep of order 2N+1."""
        return math.pi / 4 * float(betainc(self.order + 1, self.order + 1, min(max(s, 0.0), 1.0)))

    def fdot(self, s: float) -> float:
        """df/dt."""
        n = self.order
        return math.pi / 4 * s**n * (1 - s) ** n / beta_fn(n + 1, n + 1) / self.T


@dataclass(frozen=True)
class CurvePoint:
    T: float
    order: int
    delta: float
    fidelity: float


# -- dense Pauli algebra ---------------------------------------------------------

def pauli_matrix(op: PauliOp, n: int) -> sparse.csr_matrix:
    """Sparse matrix of i^k X^x Z^z with qubit j on bit j of the basis index."""
    b = np.arange(1 << n)
    sign = np.where(np.array([bin(v).count("1") & 1 for v in (b & op.z)]), -1.0, 1.0)
    data = (1j**op.k) * sign
    return sparse.csr_matrix((data, (b ^ op.x, b)), shape=(1 << n, 1 << n))


def rotation_matrix(qs: list[PauliOp], n: int, angle: float = math.pi / 4) -> sparse.csr_matrix:
    """prod exp(i angle Q) for mutually commuting Q."""
    eye = sparse.identity(1 << n, dtype=complex, format="csr")
    out = eye
    for q in qs:
        out = (math.cos(angle) * eye + 1j * math.sin(angle) * pauli_matrix(q, n)) @ out
    return out.tocsr()


def hamiltonian_matrix(terms: list[tuple[complex, PauliOp]], n: int) -> sparse.csr_matrix:
    h = sparse.csr_matrix((1 << n, 1 << n), dtype=complex)
    for c, op in terms:
        h = h + c * pauli_matrix(op, n)
    return h


def keyframe_terms(sys: DenseSystem, step: int) -> list[tuple[float, PauliOp]]:
    """Hamiltonian terms at the start of ``step`` (all earlier rotations applied)."""
    terms = list(sys.terms)
    for qs in sys.steps[:step]:
        for q in qs:
            terms = [(c, conjugate_by_rotation(s, q)) for c, s in terms]
    return terms


def _expand(terms, qs):
    """Split each term into (coef, op, n_cos, n_sin) pieces under the step's rotations."""
    pieces = [(c, s, 0, 0) for c, s in terms]
    for q in qs:
        nxt = []
        for c, s, a, b in pieces:
            if commutes(s, q):
                nxt.append((c, s, a, b))
            else:
                nxt.append((c, s, a + 1, b))
                nxt.append((c, multiply(PauliOp.from_bits(q.x, q.z, q.k + 1), s), a, b + 1))
        pieces = nxt
    return pieces


class _StepOperator:
    """H(f) = sum_{a,b} cos(2f)^a sin(2f)^b M_ab for one step."""

    def __init__(self, terms, qs, n):
        groups: dict[tuple[int, int], sparse.csr_matrix] = {}
        for c, op, a, b in _expand(terms, qs):
            m = c * pauli_matrix(op, n)
            groups[(a, b)] = groups[(a, b)] + m if (a, b) in groups else m
        self.groups = [(a, b, m.tocsr()) for (a, b), m in groups.items()]

    def matrix(self, f: float) -> sparse.csr_matrix:
        c, s = math.cos(2 * f), math.sin(2 * f)
        return sum((c**a * s**b) * m for a, b, m in self.groups)

    def apply(self, f: float, psi: np.ndarray) -> np.ndarray:
        c, s = math.cos(2 * f), math.sin(2 * f)
        out = np.zeros_like(psi)
        for a, b, m in self.groups:
            out += (c**a * s**b) * (m @ psi)
        return out


# -- ground spaces -----------------------------------------------------------------

def ground_space(h, tol: float = 1e-8) -> tuple[float, np.ndarray]:
    """Lowest eigenvalue and an orthonormal basis (columns) of its eigenspace."""
    dense = h.toarray() if sparse.issparse(h) else np.asarray(h)
    w, v = np.linalg.eigh(dense)
    k = int(np.sum(w < w[0] + tol))
    return float(w[0]), v[:, :k]


def ground_state(sys: DenseSystem, coeffs=None, seed: int = 0) -> np.ndarray:
    """A state in the ground space of H0: given coefficients, or a seeded random combination."""
    _, basis = ground_space(hamiltonian_matrix(sys.terms, sys.n))
    if coeffs is None:
        rng = np.random.default_rng(seed)
        coeffs = rng.normal(size=basis.shape[1]) + 1j * rng.normal(size=basis.shape[1])
    psi = basis @ np.asarray(coeffs, dtype=complex)
    return psi / np.linalg.norm(psi)


def spectral_gap(h) -> float:
    dense = h.toarray() if sparse.issparse(h) else np.asarray(h)
    w = np.linalg.eigvalsh(dense)
    above = w[w > w[0] + 1e-8]
    return float(above[0] - w[0]) if len(above) else math.inf


def gap_along_step(sys: DenseSystem, step: int, samples: int = 9) -> list[float]:
    """Spectral gap of H at evenly spaced rotation angles within ``step``."""
    op = _StepOperator(keyframe_terms(sys, step), sys.steps[step], sys.n)
    return [spectral_gap(op.matrix(math.pi / 4 * i / (samples - 1))) for i in range(samples)]


def is_trivial_deformation(terms, qs) -> bool:
    """True when every rotation commutes with every term (H never changes)."""
    return all(commutes(s, q) for _, s in terms for q in qs)


# -- integration --------------------------------------------------------------------

def integrate(
    sys: DenseSystem,
    sched: SchedulePolicy,
    psi0: np.ndarray,
    error: tuple[int, PauliOp] | None = None,
) -> np.ndarray:
    """RK4 integration of i dpsi/dt = H(t) psi through every step.

    ``error=(r, F)`` applies the Pauli F just before step r starts.
    """
    psi = np.asarray(psi0, dtype=complex).copy()
    n_sub = max(1, int(math.ceil(sched.T / sched.dt)))
    h = sched.T / n_sub
    for r, qs in enumerate(sys.steps):
        if error is not None and error[0] == r:
            psi = pauli_matrix(error[1], sys.n) @ psi
        op = _StepOperator(keyframe_terms(sys, r), qs, sys.n)

        def rhs(t, v):
            return -1j * op.apply(sched.f(t / sched.T), v)

        t = 0.0
        for _ in range(n_sub):
            k1 = rhs(t, psi)
            k2 = rhs(t + h / 2, psi + h / 2 * k1)
            k3 = rhs(t + h / 2, psi + h / 2 * k2)
            k4 = rhs(t + h, psi + h * k3)
            psi = psi + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        norm = np.linalg.norm(psi)
        if abs(norm - 1) > 1e-6:
            raise IntegrationError(f"norm drift {abs(norm - 1):.2e} in step {r}; reduce dt")
        psi /= norm
    if error is not None and error[0] == len(sys.steps):
        psi = pauli_matrix(error[1], sys.n) @ psi
    return psi


def clifford_prediction(sys: DenseSystem, psi0: np.ndarray) -> np.ndarray:
    """Omega |psi0> with Omega the product of the step rotations g = exp(i pi/4 Q)."""
    psi = np.asarray(psi0, dtype=complex)
    for qs in sys.steps:
        psi = rotation_matrix(qs, sys.n) @ psi
    return psi


def propagated_error(sys: DenseSystem, error: tuple[int, PauliOp]) -> PauliOp:
    """F conjugated by the rotations after its injection point (Pauli-engine route)."""
    r, f = error
    for qs in sys.steps[r:]:
        for q in qs:
            f = conjugate_by_rotation(f, q)
    return f


def error_prediction(sys: DenseSystem, psi0: np.ndarray, error: tuple[int, PauliOp]) -> np.ndarray:
    """F^{pq} Omega |psi0>: the propagated error applied after the error-free evolution."""
    return pauli_matrix(propagated_error(sys, error), sys.n) @ clifford_prediction(sys, psi0)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) ** 2)


# -- holonomy ---------------------------------------------------------------------------

def _polar(m: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def holonomy(sys: DenseSystem, basis_initial: np.ndarray | None = None, samples: int = 64) -> np.ndarray:
    """Ground-space holonomy of the closed loop traced by the steps (horizontal lift).

    The frame is parallel-transported by projecting onto each instantaneous
    ground space and taking the polar part of the overlap.
    """
    h0 = hamiltonian_matrix(sys.terms, sys.n).toarray()
    _, v0 = ground_space(h0)
    frame = v0 if basis_initial is None else np.asarray(basis_initial, dtype=complex)
    start = frame.copy()
    for r, qs in enumerate(sys.steps):
        op = _StepOperator(keyframe_terms(sys, r), qs, sys.n)
        for i in range(1, samples + 1):
            _, w = ground_space(op.matrix(math.pi / 4 * i / samples))
            frame = w @ _polar(w.conj().T @ frame)
    p0 = v0 @ v0.conj().T
    pT = frame @ frame.conj().T
    if np.linalg.norm(p0 - pT) > 1e-6:
        raise OpenLoopError("the path does not return to the initial ground space")
    return start.conj().T @ frame


# -- adiabatic error curves -----------------------------------------------------------------

def adiabatic_error(sys: DenseSystem, sched: SchedulePolicy, psi0: np.ndarray) -> CurvePoint:
    out = integrate(sys, sched, psi0)
    fid = fidelity(clifford_prediction(sys, psi0), out)
    return CurvePoint(sched.T, sched.order, 1.0 - fid, fid)


def adiabatic_error_curve(
    sys: DenseSystem, psi0: np.ndarray, Ts: list[float], orders: list[int], dt: float = 0.01
) -> list[CurvePoint]:
    """delta_ad = 1 - |<prediction|final>|^2 over every (T, N) pair."""
    return [adiabatic_error(sys, SchedulePolicy(T, N, dt), psi0) for N in orders for T in Ts]


def curve_to_csv(points: list[CurvePoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["T", "N", "delta_ad", "fidelity"])
    for p in points:
        w.writerow([f"{p.T:.6g}", p.order, f"{p.delta:.6e}", f"{p.fidelity:.12f}"])
    return buf.getvalue()


# -- reference instances -----------------------------------------------------------------------

def toy_chain(J: float = 1.0) -> DenseSystem:
    """4-qubit H0 = -J (Z1 Z2 + X2 X3 + Z3 Z4) with one step generated by X1."""
    terms = [(-J, PauliOp.parse("Z0 Z1")), (-J, PauliOp.parse("X1 X2")), (-J, PauliOp.parse("Z2 Z3"))]
    return DenseSystem(4, terms, [[PauliOp.parse("X0")]])


def aligned_time(target: float, gap: float = 2.0) -> float:
    """Smallest T >= target with gap * T a multiple of 2 pi."""
    unit = 2 * math.pi / gap
    return unit * max(1, math.ceil(target / unit - 1e-9))


def stabilizer_chain(J: float = 1.0) -> DenseSystem:
    """4-qubit commuting H0 = -J (Z0 Z1 + Z1 Z2 + Z2 Z3 + X0 X1 X2 X3), one step generated by X0.

    Its eigenspaces are labelled by generator signs, so every excitation sits
    in a single eigenspace and the gap is 2J.
    """
    terms = [(-J, PauliOp.parse(s)) for s in ("Z0 Z1", "Z1 Z2", "Z2 Z3", "X0 X1 X2 X3")]
    return DenseSystem(4, terms, [[PauliOp.parse("X0")]])
