import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm
from scipy.stats import unitary_group

from cnotsynth import qmat
from cnotsynth.circuit import (
    Circuit,
    CircuitError,
    Cnot,
    ControlledU,
    NamedSingle,
    ParamSingle,
    ccy_cz_target,
    config_to_template,
    control_wire_gates,
    controlled_matrix,
    decompose_controlled_u,
    eval_circuit,
    flip_cnot,
    format_circuit,
    gate_matrix,
    margolus_reference_circuit,
    margolus_target,
    parse_circuit,
    parse_config,
    permuted_target,
    su2_zyz,
    swap_matrix,
    toffoli,
)
from cnotsynth.qmat import G, I2, X, Y, Z
from cnotsynth.survey import gauge_variation

PAULI_Y = np.array([[0, -1j], [1j, 0]])


def basis(bits):
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1
    return v


def rz(a):
    return expm(-0.5j * a * Z)


def ry(t):
    return expm(-0.5j * t * PAULI_Y)


def test_gate_matrix_embedding():
    assert np.array_equal(gate_matrix(NamedSingle("Z", 1), 3), np.kron(I2, np.kron(Z, I2)))
    assert np.array_equal(gate_matrix(Cnot(2, 0), 3) @ basis("100"), basis("101"))
    assert gate_matrix(NamedSingle("G", 0), 1 + 1)[0, 0] == pytest.approx(0.9238795325)


def test_gate_validation():
    with pytest.raises(CircuitError):
        Circuit(3, [Cnot(1, 1)])
    with pytest.raises(CircuitError):
        Circuit(2, [NamedSingle("X", 2)])
    with pytest.raises(CircuitError):
        Circuit(4, [])
    with pytest.raises(CircuitError):
        ParamSingle(0, math.inf)
    with pytest.raises(CircuitError):
        NamedSingle("T", 0)


def test_su2_zyz_matches_rotation_products():
    assert np.array_equal(su2_zyz(0, 0, 0), I2)
    g = su2_zyz(0, math.pi / 4, 0)
    assert qmat.is_unitary(g)
    assert qmat.phase_dist(g, G) == 0
    assert qmat.frob_dist(ry(math.pi / 4), G) < 1e-15
    x = su2_zyz(math.pi, math.pi, 0)
    assert qmat.frob_dist(x, rz(math.pi) @ ry(math.pi)) < 1e-14
    assert qmat.phase_dist(x, X) < 1e-15


@settings(max_examples=50, deadline=None)
@given(*(st.floats(-2 * math.pi, 2 * math.pi) for _ in range(3)))
def test_su2_zyz_equals_expm_product(a, b, c):
    assert qmat.frob_dist(su2_zyz(a, b, c), rz(a) @ ry(b) @ rz(c)) < 1e-13


def test_eval_circuit_basics():
    assert np.array_equal(eval_circuit(Circuit(3)), np.eye(8))
    assert np.array_equal(eval_circuit(Circuit(3, [Cnot(1, 0), Cnot(1, 0)])), np.eye(8))
    u = eval_circuit(margolus_reference_circuit())
    assert np.allclose(u @ basis("101"), -basis("101"), atol=1e-15)


def test_eval_order_is_left_to_right():
    c = Circuit(2, [NamedSingle("H", 0), NamedSingle("Z", 0)])
    assert np.allclose(eval_circuit(c), np.kron(I2, Z @ qmat.H))


def test_margolus_target_actions():
    m = margolus_target()
    assert np.array_equal(m @ basis("000"), basis("000"))
    assert np.array_equal(m @ basis("101"), -basis("101"))
    assert np.array_equal(m @ basis("110"), basis("111"))


def test_margolus_target_is_hermitian_involution():
    m = margolus_target()
    assert qmat.is_unitary(m)
    assert np.array_equal(m, m.conj().T)
    assert np.array_equal(m @ m, np.eye(8))


def test_margolus_vs_toffoli_diagonal():
    m = margolus_target()
    assert qmat.is_diag_phase_equiv(m, toffoli())
    assert np.array_equal(np.diag(m @ toffoli().conj().T), [1, 1, 1, 1, 1, -1, 1, 1])


def test_reference_circuit():
    c = margolus_reference_circuit()
    assert c.cnot_count == 3 and c.single_count == 4
    assert c.cnot_config() == (0, 1, 0)
    assert qmat.phase_dist(eval_circuit(c), margolus_target()) <= 1e-12


def test_ccy_cz_target():
    t = ccy_cz_target()
    for phi in (basis("0"), basis("1"), np.array([0.6, 0.8j])):
        assert np.allclose(t @ np.kron(basis("11"), phi), np.kron(basis("11"), (Z @ Y) @ phi))
        assert np.allclose(t @ np.kron(basis("10"), phi), np.kron(basis("10"), Z @ phi))
    assert np.array_equal(Z @ Y, X)
    assert qmat.frob_dist(t, margolus_target()) == 0


def test_permuted_target():
    mp = permuted_target(True)
    # oracle: explicit relabelling of basis states with q2 and q1 exchanged
    perm = lambda i: ((i >> 1) & 1) << 2 | ((i >> 2) & 1) << 1 | (i & 1)
    m = margolus_target()
    manual = np.zeros((8, 8), dtype=complex)
    for i in range(8):
        for j in range(8):
            manual[perm(i), perm(j)] = m[i, j]
    assert np.array_equal(mp, manual)
    assert np.array_equal(mp @ basis("011"), -basis("011"))
    s = swap_matrix(2, 1)
    assert np.array_equal(mp, s @ m @ s)
    assert np.array_equal(mp @ mp, np.eye(8))
    assert np.array_equal(permuted_target(False), m)


def test_flip_cnot():
    c = Circuit(2, [Cnot(0, 1)])
    f = flip_cnot(c, 0)
    assert [type(g).__name__ for g in f.gates] == ["NamedSingle"] * 2 + ["Cnot"] + ["NamedSingle"] * 2
    assert qmat.frob_dist(eval_circuit(f), eval_circuit(c)) < 1e-15
    ff = flip_cnot(f, 2)
    assert qmat.frob_dist(eval_circuit(ff), eval_circuit(c)) < 1e-14
    m = margolus_reference_circuit()
    for i, g in enumerate(m.gates):
        if isinstance(g, Cnot):
            assert qmat.phase_dist(eval_circuit(flip_cnot(m, i)), margolus_target()) < 1e-14


def test_flip_cnot_errors():
    c = margolus_reference_circuit()
    with pytest.raises(CircuitError):
        flip_cnot(c, 0)
    with pytest.raises(CircuitError):
        flip_cnot(c, 99)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_flip_preserves_random_circuits(seed):
    rng = np.random.default_rng(seed)
    gates = []
    for _ in range(6):
        if rng.random() < 0.5:
            a, b = rng.choice(3, size=2, replace=False)
            gates.append(Cnot(int(a), int(b)))
        else:
            gates.append(ParamSingle(int(rng.integers(3)), *rng.uniform(-math.pi, math.pi, 3)))
    c = Circuit(3, gates)
    u = eval_circuit(c)
    for i, g in enumerate(c.gates):
        if isinstance(g, Cnot):
            assert np.max(np.abs(eval_circuit(flip_cnot(c, i)) - u)) <= 1e-12


def cu(u):
    return controlled_matrix(u, 1, 0, 2)


def test_controlled_u_gate_matches_matrix():
    u = unitary_group.rvs(2, random_state=np.random.default_rng(1))
    assert np.array_equal(eval_circuit(Circuit(2, [ControlledU(1, 0, u)])), cu(u))
    assert np.array_equal(cu(X), gate_matrix(Cnot(1, 0), 2))


@pytest.mark.parametrize("u", [X, Z, Y, qmat.H, G, I2, np.diag([1, 1j])])
def test_decompose_controlled_u_named(u):
    c = decompose_controlled_u(u)
    assert c.n_wires == 2 and c.cnot_count == 2
    assert [isinstance(g, Cnot) for g in c.gates] == [False, False, True, False, False, True, False, False]
    assert qmat.phase_dist(eval_circuit(c), cu(u)) <= 1e-12


def test_decompose_controlled_u_haar():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        u = unitary_group.rvs(2, random_state=rng)
        assert qmat.phase_dist(eval_circuit(decompose_controlled_u(u)), cu(u)) <= 1e-10


def test_decompose_rejects_non_unitary():
    with pytest.raises(qmat.NotUnitaryError):
        decompose_controlled_u(2 * I2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sparse_first_control_gate_forces_sparse_companions(seed):
    rng = np.random.default_rng(seed)
    u = unitary_group.rvs(2, random_state=rng)
    base = decompose_controlled_u(u)
    for circ in [base] + [gauge_variation(base, rng) for _ in range(3)]:
        assert qmat.phase_dist(eval_circuit(circ), cu(u)) <= 1e-10
        a = control_wire_gates(circ)
        assert len(a) == 3
        if qmat.is_sparse(a[0], 1e-9):
            assert all(qmat.is_sparse(g, 1e-9) for g in a[1:])


def test_config_to_template():
    t = config_to_template((0, 1, 0))
    assert t.cnot_count == 3 and t.single_count == 12
    assert t.cnot_config() == (0, 1, 0)
    t1 = config_to_template((0,))
    assert t1.cnot_count == 1 and t1.single_count == 6
    bare = Circuit(3, [Cnot(1, 0), Cnot(2, 0), Cnot(1, 0)])
    assert np.array_equal(eval_circuit(t), eval_circuit(bare))


def test_parse_config():
    assert parse_config("0,1,0") == (0, 1, 0)
    assert parse_config([2]) == (2,)
    for bad in ("", "0,3", "0,1,0,1", "a"):
        with pytest.raises(CircuitError):
            parse_config(bad)


def test_circuit_text_roundtrip():
    c = Circuit(3, [NamedSingle("G", 0), Cnot(1, 0), ParamSingle(2, 0.12, 1.57, -0.3), NamedSingle("Gdag", 0)])
    text = format_circuit(c)
    assert "CNOT 1 0" in text and "G 0" in text
    assert parse_circuit(text) == c
    parsed = parse_circuit("G 0  # rotation\nCNOT 1 0\nSU2 0 0.12 1.57 -0.3\n")
    assert parsed.n_wires == 2 and len(parsed) == 3


def test_parse_circuit_errors():
    with pytest.raises(CircuitError):
        parse_circuit("FOO 0\n")
    with pytest.raises(CircuitError):
        parse_circuit("CNOT 1\n")
