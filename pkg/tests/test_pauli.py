from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randstab import random_circuit
from z2metts.model import LatticeConfig, QubitLayout, gauss_operators
from z2metts.mupb import w_circuit
from z2metts.pauli import (
    CNOT,
    H,
    S,
    X,
    CliffordCircuit,
    CliffordGate,
    PauliString,
    PhaseError,
    commutes,
    conjugate_by_gate,
    multiply,
)

P = PauliString.parse

pauli_text = st.integers(1, 5).flatmap(
    lambda n: st.tuples(st.sampled_from("+-"), st.text("IXYZ", min_size=n, max_size=n))
).map(lambda t: t[0] + t[1])


def _gate_matrix(g: CliffordGate, n: int) -> np.ndarray:
    from z2metts.statevec import circuit_unitary

    return circuit_unitary(CliffordCircuit(n, (g,)))


def test_parse_and_print():
    p = P("-ZXIIIII")
    assert p.n_qubits == 7 and p.sign == -1
    assert str(p) == "-ZXIIIII"
    assert str(P("XY")) == "+XY"
    assert P("−Z") == P("-Z")
    with pytest.raises(ValueError):
        P("XQ")


def test_commutes_examples():
    assert not commutes(P("X"), P("Z"))
    assert commutes(P("XZX"), P("YZY"))
    with pytest.raises(ValueError):
        commutes(P("X"), P("XX"))


def test_gauss_pair_commutes_and_product():
    g1, g2 = gauss_operators(LatticeConfig(4))[:2]
    lay = QubitLayout(4)
    assert g1 == PauliString.from_literals(7, {lay.site(1): "Z", lay.link(1): "X"}, sign=-1)
    assert commutes(g1, g2)
    prod = multiply(g1, g2)
    expected = PauliString.from_literals(7, {lay.site(1): "Z", lay.site(2): "Z", lay.link(2): "X"}, sign=-1)
    assert prod == expected


def test_multiply_examples():
    assert multiply(P("Z"), P("Z")) == P("I")
    assert multiply(P("XZ"), P("IZ")) == P("XI")
    with pytest.raises(PhaseError):
        multiply(P("X"), P("Z"))


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_multiply_matches_dense(n, seed):
    rng = np.random.default_rng(seed)
    lits = "IXYZ"
    while True:
        a = P("".join(rng.choice(list(lits), n)))
        b = P(("-" if rng.random() < 0.5 else "+") + "".join(rng.choice(list(lits), n)))
        if commutes(a, b):
            break
    np.testing.assert_allclose(multiply(a, b).to_matrix(), a.to_matrix() @ b.to_matrix(), atol=1e-12)


def test_multiply_associative():
    rng = np.random.default_rng(0)
    found = 0
    while found < 30:
        a, b, c = (P("".join(rng.choice(list("IXYZ"), 3))) for _ in range(3))
        if commutes(a, b) and commutes(b, c) and commutes(a, c):
            assert multiply(multiply(a, b), c) == multiply(a, multiply(b, c))
            found += 1


def test_conjugation_rules():
    assert conjugate_by_gate(P("X"), H(0)) == P("Z")
    assert conjugate_by_gate(P("Y"), H(0)) == P("-Y")
    assert conjugate_by_gate(P("X"), S(0)) == P("Y")
    assert conjugate_by_gate(P("Y"), S(0)) == P("-X")
    assert conjugate_by_gate(P("Z"), S(0)) == P("Z")
    assert conjugate_by_gate(P("XI"), CNOT(0, 1)) == P("XX")
    assert conjugate_by_gate(P("IZ"), CNOT(0, 1)) == P("ZZ")
    assert conjugate_by_gate(P("IX"), CNOT(0, 1)) == P("IX")
    assert conjugate_by_gate(P("ZI"), CNOT(0, 1)) == P("ZI")
    assert conjugate_by_gate(P("Z"), X(0)) == P("-Z")
    assert conjugate_by_gate(P("Y"), X(0)) == P("-Y")
    assert conjugate_by_gate(P("X"), X(0)) == P("X")


@settings(max_examples=100, deadline=None)
@given(pauli_text, st.integers(0, 2**32 - 1))
def test_conjugation_matches_dense(text, seed):
    p = P(text)
    n = p.n_qubits
    rng = np.random.default_rng(seed)
    g = random_circuit(n, 1, rng).gates[0]
    u = _gate_matrix(g, n)
    np.testing.assert_allclose(conjugate_by_gate(p, g).to_matrix(), u @ p.to_matrix() @ u.conj().T, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(pauli_text, pauli_text, st.integers(0, 2**32 - 1))
def test_conjugation_preserves_commutation(a, b, seed):
    p, q = P(a), P(b)
    if p.n_qubits != q.n_qubits:
        return
    circ = random_circuit(p.n_qubits, 12, np.random.default_rng(seed))
    assert commutes(p, q) == commutes(circ.conjugate(p), circ.conjugate(q))


@settings(max_examples=60, deadline=None)
@given(pauli_text, st.integers(0, 2**32 - 1))
def test_inverse_circuit_undoes_conjugation(text, seed):
    p = P(text)
    circ = random_circuit(p.n_qubits, 15, np.random.default_rng(seed))
    assert circ.inverse().conjugate(circ.conjugate(p)) == p
    assert circ.then(circ.inverse()).conjugate(p) == p


def test_s_needs_three_repeats_to_invert():
    p = P("X")
    once = conjugate_by_gate(p, S(0))
    assert once != p
    three = conjugate_by_gate(conjugate_by_gate(once, S(0)), S(0))
    assert conjugate_by_gate(three, S(0)) == p


def test_circuit_order_first_listed_acts_first():
    # H then S on |0>: S H |0> = |+i>, stabilized by +Y
    circ = CliffordCircuit(1, (H(0), S(0)))
    assert circ.conjugate(P("Z")) == P("Y")
    reversed_ = CliffordCircuit(1, (S(0), H(0)))
    assert reversed_.conjugate(P("Z")) == P("X")


@pytest.mark.parametrize("l_ks", [2, 3, 4, 5])
def test_w_circuit_leaves_gauss_invariant(l_ks):
    cfg = LatticeConfig(l_ks)
    w = w_circuit(cfg)
    for g in gauss_operators(cfg):
        assert w.conjugate(g) == g


def test_gate_text_roundtrip():
    circ = CliffordCircuit(6, (H(2), CNOT(1, 4), S(0), X(3)))
    text = circ.to_text()
    assert text.splitlines() == ["H 3", "CNOT 2 5", "S 1", "X 4"]
    assert CliffordCircuit.from_text(6, text) == circ


def test_gate_validation():
    with pytest.raises(ValueError):
        CNOT(1, 1)
    with pytest.raises(IndexError):
        CliffordCircuit(2, (H(2),))
