"""Basis families, the quantum channel, classical messages and the attacker.

A basis family is the pair of gates a sender may apply to encode (flag 1) and
the receiver applies to decode (flag 1). Flag 0 means no gate.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qsim import (
    GateKind,
    RandomStream,
    Statevector,
    _check_probability,
    _check_qubit,
    _sample_index,
    apply_1q,
    apply_depolarizing,
    gate_matrix,
    qubit_branches,
)


@dataclass(frozen=True)
class BasisFamily:
    name: str
    encode_gate: GateKind
    decode_gate: GateKind

    def __post_init__(self):
        product = gate_matrix(self.decode_gate) @ gate_matrix(self.encode_gate)
        if not np.allclose(product, np.eye(2), rtol=0, atol=1e-12):
            raise ValueError(f"decode gate of family {self.name!r} does not invert its encode gate")


HADAMARD = BasisFamily("hadamard", GateKind.HADAMARD, GateKind.HADAMARD)
SX = BasisFamily("sx", GateKind.SQRT_X, GateKind.SQRT_X_INV)
FAMILIES = {f.name: f for f in (HADAMARD, SX)}


def get_family(name: str) -> BasisFamily:
    try:
        return FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown basis family {name!r}; choose from {sorted(FAMILIES)}") from None


@dataclass(frozen=True)
class NoiseConfig:
    readout_epsilon: float = 0.0
    depolarizing_p: float = 0.0

    def __post_init__(self):
        _check_probability(self.readout_epsilon, "readout_epsilon")
        _check_probability(self.depolarizing_p, "depolarizing_p")


NOISELESS = NoiseConfig()


@dataclass(frozen=True)
class EveConfig:
    enabled: bool = False
    strategy: str = "intercept_resend"

    def __post_init__(self):
        if self.strategy != "intercept_resend":
            raise ValueError(f"unsupported attack strategy {self.strategy!r}")


NO_EVE = EveConfig()


# Classical channel. Authenticated and reliable; messages only need to be
# recorded and replayable.

@dataclass(frozen=True)
class BasisSequence:
    sender: str
    flags: str

    def to_dict(self) -> dict:
        return {"type": "basis_sequence", "sender": self.sender, "flags": self.flags}


@dataclass(frozen=True)
class MatchIndices:
    indices: tuple[int, ...]
    round_count: int

    def __post_init__(self):
        prev = -1
        for i in self.indices:
            if i <= prev or i >= self.round_count:
                raise ValueError("match indices must be strictly increasing and below the round count")
            prev = i

    def to_dict(self) -> dict:
        return {"type": "match_indices", "round_count": self.round_count, "indices": list(self.indices)}


def message_from_dict(d: dict):
    kind = d.get("type")
    if kind == "basis_sequence":
        return BasisSequence(d["sender"], d["flags"])
    if kind == "match_indices":
        return MatchIndices(tuple(d["indices"]), d["round_count"])
    raise ValueError(f"unknown classical message type {kind!r}")


def intercept_branches(
    state: Statevector, target: int, family: BasisFamily, eve_flag: int
) -> list[tuple[float, Statevector]]:
    """Exact outcome mixture of one intercept-resend on ``target``.

    Eve decodes if ``eve_flag`` is 1, measures, re-prepares the observed bit
    and re-encodes with the same flag.
    """
    if eve_flag:
        state = apply_1q(state, family.decode_gate, target)
    out = []
    for _, p, post in qubit_branches(state, target):
        if eve_flag:
            post = apply_1q(post, family.encode_gate, target)
        out.append((p, post))
    return out


def transmit(
    state: Statevector,
    target: int,
    noise: NoiseConfig,
    eve: EveConfig,
    family: BasisFamily,
    rng: RandomStream,
) -> Statevector:
    """Send ``target`` through the quantum channel.

    Order: optional intercept-resend, then depolarizing noise. Readout error is
    left to the receiver's measurement.
    """
    _check_qubit(state, target)
    if eve.enabled:
        eve_flag = int(rng.random() < 0.5)
        branches = intercept_branches(state, target, family, eve_flag)
        state = branches[_sample_index([p for p, _ in branches], rng)][1]
    if noise.depolarizing_p:
        state = apply_depolarizing(state, noise.depolarizing_p, target, rng)
    return state


def sift(alice_flags: Sequence[int], bob_flags: Sequence[int]) -> list[int]:
    """Indices where both parties chose the same basis flag, ascending."""
    if len(alice_flags) != len(bob_flags):
        raise ValueError(f"flag sequences differ in length ({len(alice_flags)} vs {len(bob_flags)})")
    return [i for i, (a, b) in enumerate(zip(alice_flags, bob_flags)) if int(a) == int(b)]


def qber(alice_key: str, bob_key: str) -> float:
    if len(alice_key) != len(bob_key):
        raise ValueError(f"keys differ in length ({len(alice_key)} vs {len(bob_key)})")
    if not alice_key:
        raise ValueError("QBER of an empty key is undefined")
    return sum(a != b for a, b in zip(alice_key, bob_key)) / len(alice_key)
