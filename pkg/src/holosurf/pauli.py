"""Sparse Pauli-group algebra with exact phase tracking.

Internally an operator is stored as ``i**k * X^x * Z^z`` where ``x`` and ``z``
are integer bitsets over qubit ids. The public phase is the coefficient in
front of the ordinary product of single-qubit X, Y, Z factors.
"""

from __future__ import annotations

import re
from typing import Iterable, Mapping

_AXES = ("X", "Y", "Z")
_PHASES = {0: 1, 1: 1j, 2: -1, 3: -1j}
_PHASE_TOKENS = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_TOKEN_PHASES = {v: k for k, v in _PHASE_TOKENS.items()}


def _popcount(v: int) -> int:
    return v.bit_count()


def _phase_exponent(phase) -> int:
    for k, val in _PHASES.items():
        if phase == val:
            return k
    raise ValueError(f"phase must be one of +1, -1, +i, -i; got {phase!r}")


def _bits(v: int) -> Iterable[int]:
    while v:
        low = v & -v
        yield low.bit_length() - 1
        v ^= low


class PauliOp:
    """Immutable Pauli operator on integer-labelled qubits."""

    __slots__ = ("x", "z", "k")

    def __init__(self, support: Mapping[int, str] | None = None, phase=1):
        x = z = 0
        for q, axis in (support or {}).items():
            if q < 0:
                raise ValueError("qubit ids must be non-negative")
            a = axis.upper()
            if a == "I":
                continue
            if a not in _AXES:
                raise ValueError(f"unknown axis {axis!r}")
            if a in ("X", "Y"):
                x |= 1 << q
            if a in ("Z", "Y"):
                z |= 1 << q
        self.x = x
        self.z = z
        self.k = (_phase_exponent(phase) + _popcount(x & z)) % 4

    @classmethod
    def from_bits(cls, x: int, z: int, k: int = 0) -> PauliOp:
        """Build from the raw ``i**k X^x Z^z`` form."""
        op = cls.__new__(cls)
        op.x = x
        op.z = z
        op.k = k % 4
        return op

    @classmethod
    def identity(cls) -> PauliOp:
        return cls.from_bits(0, 0, 0)

    @classmethod
    def single(cls, q: int, axis: str) -> PauliOp:
        return cls({q: axis})

    @classmethod
    def from_axis(cls, qubits: Iterable[int], axis: str, phase=1) -> PauliOp:
        return cls({q: axis for q in qubits}, phase)

    @classmethod
    def parse(cls, text: str) -> PauliOp:
        """Inverse of ``str()``: ``"-i X3 Z17"``; a bare ``"I"`` is the identity."""
        tokens = text.split()
        if not tokens:
            raise ValueError("empty Pauli string")
        k = 0
        if tokens[0] in _TOKEN_PHASES:
            k = _TOKEN_PHASES[tokens.pop(0)]
        support: dict[int, str] = {}
        for tok in tokens:
            if tok == "I":
                continue
            m = re.fullmatch(r"([XYZ])(\d+)", tok)
            if not m:
                raise ValueError(f"bad Pauli token {tok!r}")
            q = int(m.group(2))
            if q in support:
                raise ValueError(f"qubit {q} repeated")
            support[q] = m.group(1)
        return cls(support, _PHASES[k])

    # -- views -------------------------------------------------------------
    @property
    def phase_exponent(self) -> int:
        """Exponent e with phase = i**e relative to the X/Y/Z factor product."""
        return (self.k - _popcount(self.x & self.z)) % 4

    @property
    def phase(self) -> complex | int:
        return _PHASES[self.phase_exponent]

    @property
    def support(self) -> dict[int, str]:
        out = {}
        for q in _bits(self.x | self.z):
            bx = (self.x >> q) & 1
            bz = (self.z >> q) & 1
            out[q] = "Y" if bx and bz else ("X" if bx else "Z")
        return dict(sorted(out.items()))

    @property
    def qubits(self) -> list[int]:
        return list(_bits(self.x | self.z))

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def is_hermitian(self) -> bool:
        return self.phase_exponent % 2 == 0

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def axis(self, q: int) -> str:
        bx = (self.x >> q) & 1
        bz = (self.z >> q) & 1
        return "Y" if bx and bz else ("X" if bx else ("Z" if bz else "I"))

    def unsigned(self) -> PauliOp:
        """Same operator with phase +1."""
        return PauliOp.from_bits(self.x, self.z, _popcount(self.x & self.z))

    def with_phase(self, phase) -> PauliOp:
        return PauliOp.from_bits(self.x, self.z, _phase_exponent(phase) + _popcount(self.x & self.z))

    def scaled(self, phase) -> PauliOp:
        """Multiply the operator by a scalar in {+1, -1, +i, -i}."""
        return PauliOp.from_bits(self.x, self.z, self.k + _phase_exponent(phase))

    def same_up_to_phase(self, other: PauliOp) -> bool:
        return self.x == other.x and self.z == other.z

    # -- algebra -----------------------------------------------------------
    def __mul__(self, other: PauliOp) -> PauliOp:
        return multiply(self, other)

    def commutes(self, other: PauliOp) -> bool:
        return commutes(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliOp):
            return NotImplemented
        return self.x == other.x and self.z == other.z and self.k == other.k

    def __hash__(self) -> int:
        return hash((self.x, self.z, self.k))

    def __str__(self) -> str:
        body = " ".join(f"{a}{q}" for q, a in self.support.items()) or "I"
        return f"{_PHASE_TOKENS[self.phase_exponent]} {body}"

    def __repr__(self) -> str:
        return f"PauliOp({str(self)!r})"


def multiply(a: PauliOp, b: PauliOp) -> PauliOp:
    """Exact product a*b including the phase."""
    k = a.k + b.k + 2 * _popcount(a.z & b.x)
    return PauliOp.from_bits(a.x ^ b.x, a.z ^ b.z, k)


def commutes(a: PauliOp, b: PauliOp) -> bool:
    return _popcount((a.x & b.z) ^ (a.z & b.x)) % 2 == 0


def conjugate_by_rotation(p: PauliOp, q: PauliOp) -> PauliOp:
    """Return g p g^dagger for g = exp(i pi/4 q).

    Commuting operators are unchanged; otherwise the image is i*q*p.
    """
    if not q.is_hermitian:
        raise ValueError("rotation generator must be Hermitian")
    if commutes(p, q):
        return p
    return multiply(q, p).scaled(1j)


def product(ops: Iterable[PauliOp]) -> PauliOp:
    out = PauliOp.identity()
    for op in ops:
        out = multiply(out, op)
    return out
