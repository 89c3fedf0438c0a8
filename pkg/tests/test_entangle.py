import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cnotsynth.circuit import margolus_target
from cnotsynth.entangle import (
    ZERO_X,
    Bipartition,
    BipartitionError,
    apply_controlled,
    entangling_connectivity,
    haar_unitary,
    ket,
    lemma1_predicate,
    lemma2_output,
    local_operator,
    product_state,
    random_state,
    schmidt_rank,
)
from cnotsynth.qmat import X, Z

CUTS = [Bipartition({2}, {1, 0}), Bipartition({1}, {2, 0}), Bipartition({0}, {2, 1})]


def test_schmidt_rank_examples():
    assert schmidt_rank(ket("000"), Bipartition({2}, {1, 0})) == 1
    bell = (ket("00") + ket("11")) / math.sqrt(2)
    assert schmidt_rank(bell, Bipartition({1}, {0})) == 2
    phi = ket("0")
    psi_in = np.kron((ket("00") + ket("10") + ket("11")) / math.sqrt(3), phi)
    assert schmidt_rank(margolus_target() @ psi_in, Bipartition({2, 1}, {0})) == 2


def test_schmidt_rank_noncontiguous_cut():
    # |q2 q1 q0> with q2, q0 in a Bell pair and q1 = |0>
    state = (ket("000") + ket("101")) / math.sqrt(2)
    assert schmidt_rank(state, Bipartition({1}, {2, 0})) == 1
    assert schmidt_rank(state, Bipartition({2}, {1, 0})) == 2
    assert schmidt_rank(state, Bipartition({0}, n_wires=3)) == 2


def test_bipartition_validation():
    with pytest.raises(BipartitionError):
        Bipartition({0}, {0, 1})
    with pytest.raises(BipartitionError):
        Bipartition(set(), {0, 1})
    with pytest.raises(BipartitionError):
        Bipartition({0}, {2})
    with pytest.raises(BipartitionError):
        schmidt_rank(ket("00"), Bipartition({2}, {1, 0}))


def test_schmidt_rank_rejects_unnormalized():
    with pytest.raises(ValueError):
        schmidt_rank(2 * ket("00"), Bipartition({1}, {0}))


def test_entanglement_predicate_examples():
    assert lemma1_predicate(ZERO_X, ket("0"), X)
    assert schmidt_rank(apply_controlled(X, ZERO_X, ket("0")), Bipartition({1}, {0})) == 2
    assert not lemma1_predicate(ZERO_X, ZERO_X, X)
    rng = np.random.default_rng(5)
    for _ in range(10):
        assert not lemma1_predicate(ket("0"), random_state(rng, 2), haar_unitary(rng, 2))


def test_eigen_control_examples():
    out = lemma2_output(ZERO_X, ket("1"), Z)
    assert np.allclose(out, np.kron((ket("0") - ket("1")) / math.sqrt(2), ket("1")), atol=1e-15)
    psi = np.array([0.6, 0.8j])
    assert np.allclose(lemma2_output(psi, ZERO_X, X), np.kron(psi, ZERO_X), atol=1e-15)
    with pytest.raises(ValueError):
        lemma2_output(psi, ket("0"), X)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_eigen_control_matches_direct_application(seed):
    rng = np.random.default_rng(seed)
    u = haar_unitary(rng, 2)
    phi = np.linalg.eig(u)[1][:, rng.integers(2)]
    phi = phi / np.linalg.norm(phi)
    psi = random_state(rng, 2)
    assert np.linalg.norm(lemma2_output(psi, phi, u) - apply_controlled(u, psi, phi)) <= 1e-12


def test_entanglement_predicate_agrees_with_schmidt_rank():
    rng = np.random.default_rng(1234)
    cut = Bipartition({1}, {0})
    for i in range(1000):
        u = haar_unitary(rng, 2)
        psi, phi = random_state(rng, 2), random_state(rng, 2)
        if i % 4 == 0:
            phi = np.linalg.eig(u)[1][:, i % 2]
            phi = phi / np.linalg.norm(phi)
        elif i % 4 == 1:
            psi = ket(str(i % 2)) * np.exp(1j * rng.uniform(0, 2 * math.pi))
        elif i % 4 == 2:
            u = np.exp(1j * rng.uniform(0, 2 * math.pi)) * np.eye(2)
        rank = schmidt_rank(apply_controlled(u, psi, phi), cut, 1e-8)
        assert lemma1_predicate(psi, phi, u, 1e-8) == (rank == 2)


@pytest.mark.parametrize(
    "cfg, expected",
    [((0, 0, 0), False), ((0, 1, 0), True), ((2, 2, 2), False), ((0, 2), True), ((1,), False)],
)
def test_entangling_connectivity(cfg, expected):
    assert entangling_connectivity(cfg) is expected


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(CUTS), st.booleans())
def test_local_unitaries_preserve_schmidt_rank(seed, cut, product):
    rng = np.random.default_rng(seed)
    if product:
        state = product_state(random_state(rng, 2 ** len(cut.side_a)), random_state(rng, 2 ** len(cut.side_b)), cut)
    else:
        state = random_state(rng, 8)
    op = local_operator(haar_unitary(rng, 2 ** len(cut.side_a)), haar_unitary(rng, 2 ** len(cut.side_b)), cut)
    before = schmidt_rank(state, cut, 1e-8)
    assert before == (1 if product else 2)
    assert schmidt_rank(op @ state, cut, 1e-8) == before


def test_local_operator_matches_kron_for_contiguous_cut():
    rng = np.random.default_rng(0)
    a, b = haar_unitary(rng, 2), haar_unitary(rng, 4)
    assert np.allclose(local_operator(a, b, Bipartition({2}, {1, 0})), np.kron(a, b))
    # wire 1 alone: operator must act as I (x) a (x) I after reordering
    c = haar_unitary(rng, 2)
    op = local_operator(c, np.kron(np.eye(2), np.eye(2)), Bipartition({1}, {2, 0}))
    assert np.allclose(op, np.kron(np.eye(2), np.kron(c, np.eye(2))))
