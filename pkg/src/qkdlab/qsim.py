"""Exact statevector simulation for one- and two-qubit protocol rounds.

Amplitudes are stored as plain tuples of Python complex numbers. Basis index
``i`` encodes the ket ``|i>`` with qubit 0 as the least significant bit, so
the outcome string for index 1 on two qubits is ``"01"`` (read ``q1 q0``).

Noise is applied as stochastic Pauli trajectories, not density matrices.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

MAX_QUBITS = 2
NORM_TOL = 1e-10


class RandomStream(Protocol):
    def random(self) -> float: ...


class GateKind(enum.Enum):
    IDENTITY = "id"
    NOT_X = "x"
    HADAMARD = "h"
    SQRT_X = "sx"
    SQRT_X_INV = "sxdg"


_R2 = 1 / math.sqrt(2)

# row-major ((u00, u01), (u10, u11))
_MATRICES: dict[GateKind, tuple[tuple[complex, complex], tuple[complex, complex]]] = {
    GateKind.IDENTITY: ((1, 0), (0, 1)),
    GateKind.NOT_X: ((0, 1), (1, 0)),
    GateKind.HADAMARD: ((_R2, _R2), (_R2, -_R2)),
    GateKind.SQRT_X: ((0.5 + 0.5j, 0.5 - 0.5j), (0.5 - 0.5j, 0.5 + 0.5j)),
    GateKind.SQRT_X_INV: ((0.5 - 0.5j, 0.5 + 0.5j), (0.5 + 0.5j, 0.5 - 0.5j)),
}
_MATRICES = {k: tuple(tuple(complex(x) for x in row) for row in m) for k, m in _MATRICES.items()}

_PAULI_X = _MATRICES[GateKind.NOT_X]
_PAULI_Y = ((0j, -1j), (1j, 0j))
_PAULI_Z = ((1 + 0j, 0j), (0j, -1 + 0j))
PAULIS = (_PAULI_X, _PAULI_Y, _PAULI_Z)


def gate_matrix(kind: GateKind) -> np.ndarray:
    """Return the fixed 2x2 unitary for ``kind`` as a fresh complex array."""
    return np.array(_MATRICES[kind], dtype=complex)


@dataclass(frozen=True)
class Statevector:
    n_qubits: int
    amps: tuple[complex, ...]

    def __post_init__(self):
        if self.n_qubits not in (1, 2):
            raise ValueError(f"n_qubits must be 1 or 2, got {self.n_qubits}")
        if len(self.amps) != 1 << self.n_qubits:
            raise ValueError(f"expected {1 << self.n_qubits} amplitudes, got {len(self.amps)}")
        for a in self.amps:
            if not (math.isfinite(a.real) and math.isfinite(a.imag)):
                raise ValueError("amplitudes must be finite")

    @classmethod
    def from_amplitudes(cls, amps) -> Statevector:
        amps = tuple(complex(a) for a in amps)
        n = len(amps).bit_length() - 1
        state = cls(n, amps)
        norm = sum(abs(a) ** 2 for a in amps)
        if abs(norm - 1) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        return state

    def to_array(self) -> np.ndarray:
        return np.array(self.amps, dtype=complex)

    def norm_squared(self) -> float:
        return sum(abs(a) ** 2 for a in self.amps)


def new_state(n_qubits: int) -> Statevector:
    if n_qubits not in (1, 2):
        raise ValueError(f"only 1- or 2-qubit states are simulated, got {n_qubits}")
    amps = [0j] * (1 << n_qubits)
    amps[0] = 1 + 0j
    return Statevector(n_qubits, tuple(amps))


def basis_state(bits: str) -> Statevector:
    """State ``|bits>`` with the string read as ``q[n-1] ... q[0]``."""
    state = new_state(len(bits))
    for q, b in enumerate(reversed(bits)):
        if b == "1":
            state = apply_1q(state, GateKind.NOT_X, q)
        elif b != "0":
            raise ValueError(f"invalid bit {b!r}")
    return state


def _check_qubit(state: Statevector, q: int, what: str = "target"):
    if not 0 <= q < state.n_qubits:
        raise IndexError(f"{what} qubit {q} out of range for {state.n_qubits}-qubit state")


def _apply_matrix(state: Statevector, u, target: int) -> Statevector:
    (u00, u01), (u10, u11) = u
    amps = list(state.amps)
    bit = 1 << target
    for i in range(len(amps)):
        if i & bit:
            continue
        a0, a1 = amps[i], amps[i | bit]
        amps[i] = u00 * a0 + u01 * a1
        amps[i | bit] = u10 * a0 + u11 * a1
    return Statevector(state.n_qubits, tuple(amps))


def apply_1q(state: Statevector, kind: GateKind, target: int) -> Statevector:
    _check_qubit(state, target)
    if kind is GateKind.IDENTITY:
        return state
    return _apply_matrix(state, _MATRICES[kind], target)


def apply_cnot(state: Statevector, control: int, target: int) -> Statevector:
    if state.n_qubits != 2:
        raise ValueError("CNOT needs a 2-qubit state")
    _check_qubit(state, control, "control")
    _check_qubit(state, target)
    if control == target:
        raise ValueError("control and target must differ")
    c, t = 1 << control, 1 << target
    amps = list(state.amps)
    lo, hi = c, c | t  # |c=1,t=0> and |c=1,t=1>
    amps[lo], amps[hi] = amps[hi], amps[lo]
    return Statevector(state.n_qubits, tuple(amps))


def outcome_label(index: int, n_qubits: int) -> str:
    return format(index, f"0{n_qubits}b")


def probabilities(state: Statevector) -> dict[str, float]:
    """Map each outcome string (``q[n-1]..q[0]``) to ``|amp|^2``."""
    return {outcome_label(i, state.n_qubits): abs(a) ** 2 for i, a in enumerate(state.amps)}


def _sample_index(weights, rng: RandomStream) -> int:
    u = rng.random() * sum(weights)
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if u < acc:
            return i
    # u landed on the float rounding slack; take the last nonzero outcome
    return max(i for i, w in enumerate(weights) if w > 0)


def measure_all(state: Statevector, rng: RandomStream) -> str:
    """Terminal measurement of every qubit; consumes one draw from ``rng``."""
    weights = [abs(a) ** 2 for a in state.amps]
    return outcome_label(_sample_index(weights, rng), state.n_qubits)


def qubit_branches(state: Statevector, target: int) -> list[tuple[int, float, Statevector]]:
    """Projective Z measurement of one qubit as ``(bit, prob, post_state)`` branches.

    Zero-probability branches are omitted.
    """
    _check_qubit(state, target)
    bit = 1 << target
    out = []
    for b in (0, 1):
        kept = [a if bool(i & bit) == bool(b) else 0j for i, a in enumerate(state.amps)]
        p = sum(abs(a) ** 2 for a in kept)
        if p > 0:
            s = 1 / math.sqrt(p)
            out.append((b, p, Statevector(state.n_qubits, tuple(a * s for a in kept))))
    return out


def measure_qubit(state: Statevector, target: int, rng: RandomStream) -> tuple[int, Statevector]:
    branches = qubit_branches(state, target)
    b, _, post = branches[_sample_index([p for _, p, _ in branches], rng)]
    return b, post


def _check_probability(p: float, name: str):
    if not 0 <= p <= 1:
        raise ValueError(f"{name} must be in [0, 1], got {p}")


def apply_depolarizing(state: Statevector, p: float, target: int, rng: RandomStream) -> Statevector:
    """With probability ``p`` apply a uniformly chosen Pauli X, Y or Z to ``target``."""
    _check_probability(p, "p")
    _check_qubit(state, target)
    if p == 0 or rng.random() >= p:
        return state
    k = min(int(rng.random() * 3), 2)
    return _apply_matrix(state, PAULIS[k], target)


def flip_readout(bits: str, epsilon: float, rng: RandomStream) -> str:
    """Flip each character of ``bits`` independently with probability ``epsilon``."""
    _check_probability(epsilon, "epsilon")
    if epsilon == 0:
        return bits
    return "".join(("1" if b == "0" else "0") if rng.random() < epsilon else b for b in bits)
