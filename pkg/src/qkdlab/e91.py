"""Entanglement-based (E91-style) key agreement over Bell pairs.

A trusted source prepares ``(|00> + |11>)/sqrt(2)``. Alice holds qubit 0 and
may apply the family's encode gate; Bob holds qubit 1 and may apply the decode
gate. Both measure. Since each family's decode matrix is the complex conjugate
of its encode matrix, matched flags leave the Bell state unchanged and the two
outcomes agree.

Only basis-agreement sifting is done; there are no CHSH test rounds.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .bb84 import ProtocolTranscript, _draw
from .channel import NOISELESS, BasisFamily, NoiseConfig, get_family
from .qsim import (
    GateKind,
    RandomStream,
    Statevector,
    apply_1q,
    apply_cnot,
    apply_depolarizing,
    flip_readout,
    measure_all,
    new_state,
)
from .seeding import round_stream

ALICE_QUBIT = 0
BOB_QUBIT = 1


@dataclass(frozen=True)
class PairRound:
    index: int
    alice_flag: int
    bob_flag: int
    alice_bit: int
    bob_bit: int

    @property
    def sifted(self) -> bool:
        return self.alice_flag == self.bob_flag


def make_bell_pair() -> Statevector:
    state = apply_1q(new_state(2), GateKind.HADAMARD, 0)
    return apply_cnot(state, 0, 1)


def apply_flags(state: Statevector, alice_flag: int, bob_flag: int, family: BasisFamily) -> Statevector:
    if alice_flag:
        state = apply_1q(state, family.encode_gate, ALICE_QUBIT)
    if bob_flag:
        state = apply_1q(state, family.decode_gate, BOB_QUBIT)
    return state


def e91_round(
    family: BasisFamily,
    noise: NoiseConfig,
    rng: RandomStream,
    index: int = 0,
    *,
    alice_flag: Optional[int] = None,
    bob_flag: Optional[int] = None,
) -> PairRound:
    a_flag = _draw(rng, alice_flag)
    b_flag = _draw(rng, bob_flag)
    state = make_bell_pair()
    if noise.depolarizing_p:
        # distribution noise; the uniform Pauli channel commutes with the local gates
        state = apply_depolarizing(state, noise.depolarizing_p, ALICE_QUBIT, rng)
        state = apply_depolarizing(state, noise.depolarizing_p, BOB_QUBIT, rng)
    state = apply_flags(state, a_flag, b_flag, family)
    outcome = flip_readout(measure_all(state, rng), noise.readout_epsilon, rng)
    # outcome string reads q1 q0
    return PairRound(index, a_flag, b_flag, alice_bit=int(outcome[1]), bob_bit=int(outcome[0]))


def e91_run(
    n_rounds: int,
    family: Union[BasisFamily, str],
    noise: NoiseConfig = NOISELESS,
    master_seed: int = 0,
) -> ProtocolTranscript:
    if n_rounds < 1:
        raise ValueError(f"n_rounds must be at least 1, got {n_rounds}")
    if isinstance(family, str):
        family = get_family(family)
    rounds = [e91_round(family, noise, round_stream(master_seed, i), i) for i in range(n_rounds)]
    return ProtocolTranscript("e91", family.name, master_seed, rounds)
