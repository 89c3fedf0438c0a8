"""Schmidt rank across wire bipartitions and checks of the controlled-U entanglement rules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from . import qmat
from .circuit import CNOT_CODES, controlled_matrix, parse_config


class BipartitionError(ValueError):
    pass


@dataclass(frozen=True)
class Bipartition:
    side_a: frozenset
    side_b: frozenset

    def __init__(self, side_a, side_b=None, n_wires: int | None = None):
        a = frozenset(side_a)
        if side_b is None:
            if n_wires is None:
                raise BipartitionError("give side_b or n_wires")
            side_b = set(range(n_wires)) - a
        b = frozenset(side_b)
        object.__setattr__(self, "side_a", a)
        object.__setattr__(self, "side_b", b)
        wires = a | b
        if not a or not b or a & b or wires != set(range(len(wires))):
            raise BipartitionError(f"{sorted(a)}|{sorted(b)} is not a cover of wires 0..n-1 by two nonempty disjoint sets")

    @property
    def n_wires(self) -> int:
        return len(self.side_a) + len(self.side_b)

    def __str__(self):
        fmt = lambda s: "{" + ",".join(str(w) for w in sorted(s, reverse=True)) + "}"
        return f"{fmt(self.side_a)}|{fmt(self.side_b)}"


def bipartite_matrix(state, cut: Bipartition) -> np.ndarray:
    """Amplitudes reshaped to a ``2^|A| x 2^|B|`` matrix."""
    psi = qmat.as_cvec(state)
    n = cut.n_wires
    if psi.shape[0] != 2**n:
        raise BipartitionError(f"state of length {psi.shape[0]} does not match {n} wires")
    t = psi.reshape((2,) * n).transpose(_axes(cut))
    return t.reshape(2 ** len(cut.side_a), 2 ** len(cut.side_b))


def _axes(cut: Bipartition) -> list[int]:
    # tensor axis i holds wire n-1-i (big-endian)
    n = cut.n_wires
    return [n - 1 - w for w in sorted(cut.side_a, reverse=True)] + [n - 1 - w for w in sorted(cut.side_b, reverse=True)]


def product_state(a, b, cut: Bipartition) -> np.ndarray:
    """The state ``a (x) b`` with ``a`` on ``cut.side_a`` and ``b`` on ``cut.side_b``."""
    n = cut.n_wires
    t = np.outer(a, b).reshape((2,) * n)
    return t.transpose(np.argsort(_axes(cut))).reshape(-1)


def schmidt_rank(state, cut: Bipartition, tol: float = 1e-10) -> int:
    """Number of singular values above ``tol`` times the largest one."""
    psi = qmat.as_cvec(state)
    norm = np.linalg.norm(psi)
    if abs(norm - 1) > max(tol, 1e-10):
        raise ValueError(f"state is not normalized (norm {norm:.12g})")
    s = np.linalg.svd(bipartite_matrix(psi, cut), compute_uv=False)
    return int(np.sum(s > tol * s[0]))


def ket(bits: str) -> np.ndarray:
    """Computational basis state, e.g. ``ket("101")`` for ``|q2 q1 q0> = |101>``."""
    v = np.zeros(2 ** len(bits), dtype=np.complex128)
    v[int(bits, 2)] = 1
    return v


ZERO_X = np.array([1, 1], dtype=np.complex128) / np.sqrt(2)


def eigen_residual(phi, u) -> float:
    """Distance of ``u phi`` from the line spanned by ``phi`` (``phi`` normalized)."""
    phi = qmat.as_cvec(phi, dims=(2,))
    v = qmat.as_cmat(u, dims=(2,)) @ phi
    return float(np.linalg.norm(v - np.vdot(phi, v) * phi))


def lemma1_predicate(psi, phi, u, tol: float = 1e-8) -> bool:
    """Whether controlled-``u`` on ``psi (x) phi`` entangles: ``phi`` is not an eigenvector of ``u`` and ``psi`` has both amplitudes."""
    psi = qmat.as_cvec(psi, dims=(2,))
    return eigen_residual(phi, u) > tol and abs(psi[0]) > tol and abs(psi[1]) > tol


def lemma2_output(psi, phi, u, tol: float = 1e-10) -> np.ndarray:
    """``diag(1, lam) psi (x) phi`` where ``u phi = lam phi``."""
    psi = qmat.as_cvec(psi, dims=(2,))
    phi = qmat.as_cvec(phi, dims=(2,))
    u = qmat.as_cmat(u, dims=(2,))
    if eigen_residual(phi, u) > tol:
        raise ValueError("phi is not an eigenvector of u")
    lam = np.vdot(phi, u @ phi) / np.vdot(phi, phi)
    return np.kron(np.array([psi[0], lam * psi[1]]), phi)


def apply_controlled(u, psi, phi) -> np.ndarray:
    """Controlled-``u`` (control = wire 1) applied to ``psi (x) phi``."""
    return controlled_matrix(qmat.as_cmat(u, dims=(2,)), 1, 0, 2) @ np.kron(psi, phi)


def entangling_connectivity(cfg) -> bool:
    """True iff the CNOTs of ``cfg`` connect all three wires."""
    parent = {0: 0, 1: 1, 2: 2}

    def find(w):
        while parent[w] != w:
            w = parent[w]
        return w

    for code in parse_config(cfg):
        a, b = CNOT_CODES[code]
        parent[find(a)] = find(b)
    return len({find(w) for w in range(3)}) == 1


def local_operator(u_a, u_b, cut: Bipartition) -> np.ndarray:
    """Full-width ``U_A (x) U_B`` for a possibly non-contiguous cut."""
    n = cut.n_wires
    a_wires = sorted(cut.side_a, reverse=True)
    b_wires = sorted(cut.side_b, reverse=True)
    u_a, u_b = np.asarray(u_a), np.asarray(u_b)
    op = np.kron(u_a, u_b)  # acts on the wire order a_wires + b_wires
    order = a_wires + b_wires
    dim = 2**n
    perm = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(dim):
        # bits of i in the (a, b) ordering -> natural basis index
        j = 0
        for pos, w in enumerate(order):
            bit = (i >> (n - 1 - pos)) & 1
            j |= bit << w
        perm[j, i] = 1
    return perm @ op @ perm.T


def random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=rng)
