from __future__ import annotations

import numpy as np
import pytest

from holosurf.pauli import PauliOp, commutes, conjugate_by_rotation, multiply, product
from holosurf.scenarios import enlargement_square

P = PauliOp.parse
MATS = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1, -1])}


def dense(op: PauliOp, n: int) -> np.ndarray:
    out = np.array([[1]], dtype=complex)
    for q in range(n):
        out = np.kron(out, MATS[op.axis(q)])
    return op.phase * out


def test_xz_is_minus_i_y():
    assert multiply(P("X0"), P("Z0")) == P("-i Y0")


@pytest.mark.parametrize("text", ["X0", "Y3 Z5", "X1 Y2 Z9 X40"])
def test_hermitian_square_is_identity(text):
    assert multiply(P(text), P(text)) == PauliOp.identity()


def test_multiply_matches_dense_matrices():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a, b = (PauliOp({q: "IXYZ"[rng.integers(4)] for q in range(3)}, phase=1j ** rng.integers(4)) for _ in range(2))
        assert np.allclose(dense(multiply(a, b), 3), dense(a, 3) @ dense(b, 3))
        am, bm = dense(a, 3), dense(b, 3)
        assert commutes(a, b) == np.allclose(am @ bm, bm @ am)


def test_parse_roundtrip_and_phase():
    op = P("-i X3 Z17")
    assert PauliOp.parse(str(op)) == op
    assert op.phase == -1j and not op.is_hermitian
    assert P("I").is_identity


def test_everything_commutes_with_identity():
    assert commutes(P("X0 Y1 Z2"), PauliOp.identity())


def test_rotation_matches_dense_conjugation():
    rng = np.random.default_rng(1)
    for _ in range(100):
        p = PauliOp({q: "IXYZ"[rng.integers(4)] for q in range(3)})
        q = PauliOp({q: "IXYZ"[rng.integers(4)] for q in range(3)})
        if q.is_identity:
            continue
        g = (np.eye(8) + 1j * dense(q, 3)) / np.sqrt(2)
        assert np.allclose(dense(conjugate_by_rotation(p, q), 3), g @ dense(p, 3) @ g.conj().T)


def test_rotation_needs_hermitian_generator():
    with pytest.raises(ValueError):
        conjugate_by_rotation(P("X0"), P("i Z0"))


def test_enlargement_rotation_examples():
    sc = enlargement_square()
    zs1 = sc.lat.generator(sc.extra["s1"]).op()
    zs2 = sc.lat.generator(sc.extra["p2"]).op()
    q1 = sc.op({1: "Y", 2: "Z", 5: "Z", 6: "Z"})
    assert not commutes(q1, zs2)
    assert commutes(q1, sc.tab.logical("a").X)
    assert conjugate_by_rotation(zs2, q1).same_up_to_phase(sc.op({1: "X"}))
    image = conjugate_by_rotation(zs1, q1)
    # equal to Zs1 Zs2 up to the new single-qubit stabilizer on qubit 1
    assert multiply(image, sc.op({1: "X"})).same_up_to_phase(multiply(zs1, zs2))
    assert conjugate_by_rotation(P("Z100"), q1) == P("Z100")


def test_product_of_empty_is_identity():
    assert product([]) == PauliOp.identity()
