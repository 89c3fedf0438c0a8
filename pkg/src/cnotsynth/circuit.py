"""Circuit IR over CNOT and single-qubit gates.

Wire 0 is the least significant qubit (bottom wire); on three wires a basis
index is ``4*q2 + 2*q1 + q0``.  Gates are listed in the order they are applied,
so the circuit unitary is the matrix product in reverse gate order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import qmat
from .qmat import G, H, I2, X, Y, Z

NAMED = {
    "X": X,
    "Z": Z,
    "Y": Y,
    "H": H,
    "G": G,
    "Gdag": G.conj().T,
}

# Placement codes of normalized CNOTs (control above target) on three wires.
CNOT_CODES = {0: (1, 0), 1: (2, 0), 2: (2, 1)}


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class NamedSingle:
    name: str
    wire: int

    def __post_init__(self):
        if self.name not in NAMED:
            raise CircuitError(f"unknown gate {self.name!r}; expected one of {sorted(NAMED)}")


@dataclass(frozen=True)
class ParamSingle:
    """Single-qubit ``Rz(phi) Ry(theta) Rz(lam)``."""

    wire: int
    phi: float = 0.0
    theta: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(a) for a in (self.phi, self.theta, self.lam)):
            raise CircuitError("ParamSingle angles must be finite")


@dataclass(frozen=True)
class Cnot:
    control: int
    target: int


@dataclass(frozen=True, eq=False)
class ControlledU:
    control: int
    target: int
    u: np.ndarray


Gate = Union[NamedSingle, ParamSingle, Cnot, ControlledU]


@dataclass(frozen=True)
class Circuit:
    n_wires: int
    gates: tuple = ()

    def __post_init__(self):
        if self.n_wires not in (2, 3):
            raise CircuitError(f"n_wires must be 2 or 3, got {self.n_wires}")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            _check_gate(g, self.n_wires)

    def __len__(self):
        return len(self.gates)

    @property
    def cnot_count(self) -> int:
        return sum(isinstance(g, Cnot) for g in self.gates)

    @property
    def single_count(self) -> int:
        return sum(isinstance(g, (NamedSingle, ParamSingle)) for g in self.gates)

    def cnot_config(self) -> tuple[int, ...]:
        """Placement codes of the CNOTs, in order.  Only defined on three wires."""
        lookup = {v: k for k, v in CNOT_CODES.items()}
        codes = []
        for g in self.gates:
            if isinstance(g, Cnot):
                key = (g.control, g.target)
                if key not in lookup:
                    raise CircuitError(f"CNOT {key} has no placement code")
                codes.append(lookup[key])
        return tuple(codes)


def _check_wire(w: int, n_wires: int) -> None:
    if not isinstance(w, (int, np.integer)) or not 0 <= w < n_wires:
        raise CircuitError(f"wire {w!r} out of range for {n_wires} wires")


def _check_gate(g, n_wires: int) -> None:
    if isinstance(g, (NamedSingle, ParamSingle)):
        _check_wire(g.wire, n_wires)
    elif isinstance(g, (Cnot, ControlledU)):
        _check_wire(g.control, n_wires)
        _check_wire(g.target, n_wires)
        if g.control == g.target:
            raise CircuitError("control and target must differ")
        if isinstance(g, ControlledU):
            qmat.as_cmat(g.u, dims=(2,))
    else:
        raise CircuitError(f"not a gate instance: {g!r}")


def parse_config(text) -> tuple[int, ...]:
    """Parse ``"0,1,0"`` (or a sequence of ints) into a validated CNOT configuration."""
    if isinstance(text, str):
        try:
            codes = tuple(int(t) for t in text.split(","))
        except ValueError:
            raise CircuitError(f"bad config literal {text!r}") from None
    else:
        codes = tuple(int(t) for t in text)
    if not 1 <= len(codes) <= 3 or any(c not in CNOT_CODES for c in codes):
        raise CircuitError(f"config must be 1 to 3 codes from {{0,1,2}}, got {codes}")
    return codes


def format_config(cfg: Sequence[int]) -> str:
    return ",".join(str(c) for c in cfg)


# -- matrices -----------------------------------------------------------------


def su2_zyz(phi: float, theta: float, lam: float) -> np.ndarray:
    """``Rz(phi) @ Ry(theta) @ Rz(lam)`` with ``Ry(t) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]]``.

    With this sign convention ``su2_zyz(0, pi/4, 0)`` is exactly ``G``.
    """
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    ep, el = np.exp(-0.5j * phi), np.exp(-0.5j * lam)
    return np.array(
        [[ep * el * c, -ep * el.conjugate() * s], [ep.conjugate() * el * s, ep.conjugate() * el.conjugate() * c]],
        dtype=np.complex128,
    )


def embed_single(u: np.ndarray, wire: int, n_wires: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for w in reversed(range(n_wires)):
        out = np.kron(out, u if w == wire else I2)
    return out


def controlled_matrix(u: np.ndarray, control: int, target: int, n_wires: int) -> np.ndarray:
    dim = 2**n_wires
    out = np.zeros((dim, dim), dtype=np.complex128)
    tbit = 1 << target
    for col in range(dim):
        if not (col >> control) & 1:
            out[col, col] = 1
            continue
        t = (col >> target) & 1
        base = col & ~tbit
        for t_out in (0, 1):
            out[base | (t_out * tbit), col] = u[t_out, t]
    return out


def cnot_matrix(control: int, target: int, n_wires: int) -> np.ndarray:
    return controlled_matrix(X, control, target, n_wires)


def gate_matrix(g, n_wires: int) -> np.ndarray:
    """Full-width unitary of a single gate instance."""
    _check_gate(g, n_wires)
    if isinstance(g, NamedSingle):
        return embed_single(NAMED[g.name], g.wire, n_wires)
    if isinstance(g, ParamSingle):
        return embed_single(su2_zyz(g.phi, g.theta, g.lam), g.wire, n_wires)
    if isinstance(g, Cnot):
        return cnot_matrix(g.control, g.target, n_wires)
    return controlled_matrix(qmat.as_cmat(g.u, dims=(2,)), g.control, g.target, n_wires)


def eval_circuit(c: Circuit) -> np.ndarray:
    u = np.eye(2**c.n_wires, dtype=np.complex128)
    for g in c.gates:
        u = gate_matrix(g, c.n_wires) @ u
    return u


# -- named targets and circuits ----------------------------------------------


def margolus_target() -> np.ndarray:
    """The simplified Toffoli map: identity on ``|00>, |01>`` controls, Z on ``|10>``, X on ``|11>``."""
    m = np.zeros((8, 8), dtype=np.complex128)
    for block, op in enumerate((I2, I2, Z, X)):
        m[2 * block : 2 * block + 2, 2 * block : 2 * block + 2] = op
    return m


def toffoli() -> np.ndarray:
    t = np.eye(8, dtype=np.complex128)
    t[6:8, 6:8] = X
    return t


def margolus_reference_circuit() -> Circuit:
    return Circuit(
        3,
        (
            NamedSingle("G", 0),
            Cnot(1, 0),
            NamedSingle("G", 0),
            Cnot(2, 0),
            NamedSingle("Gdag", 0),
            Cnot(1, 0),
            NamedSingle("Gdag", 0),
        ),
    )


def ccy_target() -> np.ndarray:
    """Y on wire 0 controlled by wires 2 and 1."""
    m = np.eye(8, dtype=np.complex128)
    m[6:8, 6:8] = Y
    return m


def ccy_cz_target() -> np.ndarray:
    """Doubly controlled Y followed by Z on wire 0 controlled by wire 2."""
    return controlled_matrix(Z, 2, 0, 3) @ ccy_target()


def swap_matrix(a: int, b: int, n_wires: int = 3) -> np.ndarray:
    dim = 2**n_wires
    p = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(dim):
        ba, bb = (i >> a) & 1, (i >> b) & 1
        j = i & ~((1 << a) | (1 << b)) | (ba << b) | (bb << a)
        p[j, i] = 1
    return p


def permuted_target(swap_top_two: bool = True) -> np.ndarray:
    """The simplified Toffoli map with wires 2 and 1 exchanged (or ``M`` itself)."""
    m = margolus_target()
    if not swap_top_two:
        return m
    s = swap_matrix(2, 1)
    return s @ m @ s


# -- rewrites and decompositions ---------------------------------------------


def flip_cnot(c: Circuit, index: int) -> Circuit:
    """Replace ``Cnot(a, b)`` at ``index`` by Hadamards around ``Cnot(b, a)``."""
    if not 0 <= index < len(c.gates):
        raise CircuitError(f"gate index {index} out of range")
    g = c.gates[index]
    if not isinstance(g, Cnot):
        raise CircuitError(f"gate {index} is not a CNOT: {g!r}")
    a, b = g.control, g.target
    hs = (NamedSingle("H", a), NamedSingle("H", b))
    return Circuit(c.n_wires, c.gates[:index] + hs + (Cnot(b, a),) + hs + c.gates[index + 1 :])


def zyz_angles(u) -> tuple[float, float, float, float]:
    """Return ``(delta, phi, theta, lam)`` with ``u = e^{i delta} su2_zyz(phi, theta, lam)``."""
    u = qmat.require_unitary(qmat.as_cmat(u, dims=(2,)))
    delta = 0.5 * float(np.angle(np.linalg.det(u)))
    v = u * np.exp(-1j * delta)
    a, c, d = v[0, 0], v[1, 0], v[1, 1]
    theta = 2.0 * math.atan2(abs(c), abs(a))
    sum_half = float(np.angle(d)) if abs(d) > 1e-12 else 0.0
    diff_half = float(np.angle(c)) if abs(c) > 1e-12 else 0.0
    return delta, sum_half + diff_half, theta, sum_half - diff_half


def _param(wire: int, phi: float, theta: float, lam: float) -> ParamSingle:
    return ParamSingle(wire, float(phi), float(theta), float(lam))


def decompose_controlled_u(u) -> Circuit:
    """Two-CNOT realization of ``ControlledU(1, 0, u)`` up to global phase.

    Gate order per layer is control wire then target wire.  The target wire
    carries the usual Euler splitting ``A X B X C = e^{-i delta} u`` with
    ``ABC = I``; the relative phase ``e^{i delta}`` sits on the control wire in
    the last layer, and the first two control-wire gates are identities.
    """
    delta, alpha, gamma, beta = zyz_angles(u)
    a_t = (alpha, gamma / 2, 0.0)  # Rz(alpha) Ry(gamma/2)
    b_t = (0.0, -gamma / 2, -(alpha + beta) / 2)  # Ry(-gamma/2) Rz(-(alpha+beta)/2)
    c_t = ((beta - alpha) / 2, 0.0, 0.0)  # Rz((beta-alpha)/2)
    return Circuit(
        2,
        (
            _param(1, 0, 0, 0),
            _param(0, *c_t),
            Cnot(1, 0),
            _param(1, 0, 0, 0),
            _param(0, *b_t),
            Cnot(1, 0),
            # diag(1, e^{i delta}) = e^{i delta/2} Rz(delta)
            _param(1, delta, 0, 0),
            _param(0, *a_t),
        ),
    )


def control_wire_gates(c: Circuit, wire: int = 1) -> list[np.ndarray]:
    """2x2 matrices of the single-qubit gates on ``wire``, in order."""
    return [
        single_matrix(g)
        for g in c.gates
        if isinstance(g, (NamedSingle, ParamSingle)) and g.wire == wire
    ]


def single_matrix(g) -> np.ndarray:
    if isinstance(g, NamedSingle):
        return NAMED[g.name]
    return su2_zyz(g.phi, g.theta, g.lam)


def config_to_template(cfg: Sequence[int], n_wires: int = 3) -> Circuit:
    """CNOTs of ``cfg`` with a zero-angle ``ParamSingle`` on every wire in every layer.

    Slot ``layer * n_wires + wire`` is the ``ParamSingle`` on ``wire`` before
    CNOT number ``layer`` (the last layer follows the last CNOT).
    """
    cfg = parse_config(cfg)
    pairs = [CNOT_CODES[code] for code in cfg]
    if n_wires == 2:
        if any(p != (1, 0) for p in pairs):
            raise CircuitError("only code 0 is available on two wires")
    gates: list = []
    for layer in range(len(pairs) + 1):
        gates.extend(ParamSingle(w) for w in range(n_wires))
        if layer < len(pairs):
            gates.append(Cnot(*pairs[layer]))
    return Circuit(n_wires, gates)


def two_wire_template(k: int) -> Circuit:
    return config_to_template((0,) * k, n_wires=2)


# -- text format --------------------------------------------------------------


def format_circuit(c: Circuit) -> str:
    lines = [f"# wires {c.n_wires}"]
    for g in c.gates:
        if isinstance(g, NamedSingle):
            lines.append(f"{g.name} {g.wire}")
        elif isinstance(g, ParamSingle):
            lines.append(f"SU2 {g.wire} {g.phi!r} {g.theta!r} {g.lam!r}")
        elif isinstance(g, Cnot):
            lines.append(f"CNOT {g.control} {g.target}")
        else:
            raise CircuitError("ControlledU has no text form; decompose it first")
    return "\n".join(lines) + "\n"


def parse_circuit(text: str, n_wires: int | None = None) -> Circuit:
    """Parse the one-gate-per-line format.  ``# wires N`` sets the width if ``n_wires`` is not given."""
    gates = []
    declared = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "wires":
                declared = int(parts[1])
            continue
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        op, *args = line.split()
        try:
            if op == "CNOT" and len(args) == 2:
                gates.append(Cnot(int(args[0]), int(args[1])))
            elif op == "SU2" and len(args) == 4:
                gates.append(ParamSingle(int(args[0]), *(float(a) for a in args[1:])))
            elif op in NAMED and len(args) == 1:
                gates.append(NamedSingle(op, int(args[0])))
            else:
                raise CircuitError(f"unrecognized gate {line!r}")
        except ValueError as exc:
            raise CircuitError(f"line {lineno}: {exc}") from None
    if n_wires is None:
        n_wires = declared
    if n_wires is None:
        wires = [w for g in gates for w in _wires(g)]
        n_wires = max(2, max(wires, default=0) + 1)
    return Circuit(n_wires, gates)


def _wires(g) -> tuple[int, ...]:
    if isinstance(g, (NamedSingle, ParamSingle)):
        return (g.wire,)
    return (g.control, g.target)
