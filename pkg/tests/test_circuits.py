import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from persistent_harmonics.circuits import (
    PYTHAGOREAN_MATRIX,
    Circuit,
    ExactState,
    Gate,
    IntegerState,
    UnsupportedGate,
    apply_gate,
    preidle,
)

from oracles import gate_matrix


def test_pythagorean_is_orthogonal():
    m = np.array(PYTHAGOREAN_MATRIX, dtype=float)
    assert np.allclose(m @ m.T, np.eye(2))
    assert PYTHAGOREAN_MATRIX[0][0] == Fraction(3, 5)


def test_gate_validation():
    with pytest.raises(UnsupportedGate):
        Gate("hadamard", target=0)
    with pytest.raises(ValueError):
        Gate.cnot(1, 1)
    assert Gate("cnot", 0, 1) == Gate.cnot(0, 1)
    assert Gate("id").qubits == ()


gates = st.one_of(
    st.builds(Gate.pythagorean, st.integers(0, 2)),
    st.builds(lambda c, d: Gate.cnot(c, (c + d) % 3), st.integers(0, 2), st.integers(1, 2)),
    st.just(Gate.identity()),
)


@given(st.lists(gates, max_size=4), st.integers(0, 2))
def test_unitary_matches_dense_oracle(gs, idle):
    c = Circuit(3, tuple(gs), idle)
    want = np.eye(8)
    for t in range(1, c.length + 1):
        want = gate_matrix(c.gate(t), 3) @ want
    got = c.unitary().to_dense_float()
    assert np.allclose(got, want)
    # exact orthogonality
    u = c.unitary()
    assert u.T @ u == u.identity(8)


@given(st.lists(gates, max_size=4))
def test_adjoint_inverts(gs):
    c = Circuit(3, tuple(gs))
    psi = {5: Fraction(1)}
    for t in range(1, c.length + 1):
        psi = c.apply(psi, t)
    for t in range(c.length, 0, -1):
        psi = c.apply(psi, t, adjoint=True)
    assert psi == {5: 1}


def test_circuit_json_round_trip_and_errors():
    c = Circuit(2, (Gate.pythagorean(1), Gate.cnot(0, 1), Gate.identity()), idle=2)
    assert Circuit.from_json(json.loads(json.dumps(c.to_json()))) == c
    with pytest.raises(ValueError, match=r"circuit.gates\[0\]"):
        Circuit.from_json({"qubits": 1, "gates": [{"kind": "pythagorean", "target": 3}]})
    with pytest.raises(ValueError, match=r"circuit.gates\[0\]"):
        Circuit.from_json({"qubits": 1, "gates": [{"kind": "toffoli", "target": 0}]})
    with pytest.raises(ValueError, match="circuit.qubits"):
        Circuit.from_json({"gates": []})


def test_preidle():
    c = preidle(Circuit(1, (Gate.pythagorean(0),)), 3)
    assert (c.L, c.T, c.length) == (3, 1, 4)
    assert c.gate(1) == Gate.identity()


def test_exact_state_overlaps():
    a = ExactState(4, {0: Fraction(1), 1: Fraction(1)}, Fraction(1, 2))
    b = ExactState(4, {0: Fraction(1)})
    assert a.norm_sq() == 1
    assert a.overlap_sq(b) == Fraction(1, 2)
    assert np.isclose(np.linalg.norm(a.to_array()), 1.0)
    with pytest.raises(ValueError):
        ExactState(4, {4: Fraction(1)})


def test_integer_state():
    s = IntegerState((0, 1), {1: 3, 2: -4})
    assert s.z_sq == 25 and s.z == 5.0
    p = s.projector()
    assert p @ p == p
    assert s.to_exact_state().norm_sq() == 1


def test_apply_gate_cnot_truth_table():
    g = Gate.cnot(0, 1)
    table = {x: apply_gate(g, {x: Fraction(1)}, 2) for x in range(4)}
    assert table == {0: {0: 1}, 1: {1: 1}, 2: {3: 1}, 3: {2: 1}}
