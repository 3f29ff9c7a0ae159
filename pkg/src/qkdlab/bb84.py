"""BB84 prepare-and-measure engine.

One round is simulated as an independent single-qubit statevector:

1. Alice flips ``|0>`` to ``|1>`` when her bit is 1.
2. She applies the family's encode gate when her flag is 1.
3. The qubit crosses the channel (attacker, depolarizing noise).
4. Bob applies the decode gate when his flag is 1.
5. Bob measures; readout error flips the observed bit.

Sifting keeps rounds whose flags agree.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .channel import (
    NO_EVE,
    NOISELESS,
    BasisFamily,
    BasisSequence,
    EveConfig,
    MatchIndices,
    NoiseConfig,
    get_family,
    message_from_dict,
    sift,
    transmit,
)
from .qsim import GateKind, RandomStream, Statevector, apply_1q, flip_readout, measure_all, new_state
from .seeding import round_stream


@dataclass(frozen=True)
class RoundRecord:
    index: int
    alice_bit: int
    alice_flag: int
    bob_flag: int
    bob_bit: int

    @property
    def sifted(self) -> bool:
        return self.alice_flag == self.bob_flag


def _bits(values) -> str:
    return "".join(str(int(v)) for v in values)


@dataclass
class ProtocolTranscript:
    protocol: str
    family: str
    master_seed: int
    rounds: list = field(repr=False)
    alice_key: str = field(init=False, repr=False)
    bob_key: str = field(init=False, repr=False)
    sifted_indices: list[int] = field(init=False, repr=False)

    def __post_init__(self):
        self.sifted_indices = sift([r.alice_flag for r in self.rounds], [r.bob_flag for r in self.rounds])
        self.alice_key = "".join(str(self.rounds[i].alice_bit) for i in self.sifted_indices)
        self.bob_key = "".join(str(self.rounds[i].bob_bit) for i in self.sifted_indices)

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    @property
    def sift_fraction(self) -> float:
        return len(self.sifted_indices) / len(self.rounds)

    def messages(self) -> list:
        """Classical exchange: Bob announces his flags, Alice answers with the matches."""
        return [
            BasisSequence("bob", _bits(r.bob_flag for r in self.rounds)),
            MatchIndices(tuple(self.sifted_indices), len(self.rounds)),
        ]

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "family": self.family,
            "master_seed": self.master_seed,
            "n_rounds": self.n_rounds,
            "alice_bits": _bits(r.alice_bit for r in self.rounds),
            "alice_flags": _bits(r.alice_flag for r in self.rounds),
            "bob_flags": _bits(r.bob_flag for r in self.rounds),
            "bob_bits": _bits(r.bob_bit for r in self.rounds),
            "messages": [m.to_dict() for m in self.messages()],
            "alice_key": self.alice_key,
            "bob_key": self.bob_key,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ProtocolTranscript:
        if d["protocol"] == "e91":
            from .e91 import PairRound as record_type
        else:
            record_type = RoundRecord
        cols = zip(d["alice_bits"], d["alice_flags"], d["bob_flags"], d["bob_bits"])
        rounds = [
            record_type(index=i, alice_bit=int(ab), alice_flag=int(af), bob_flag=int(bf), bob_bit=int(bb))
            for i, (ab, af, bf, bb) in enumerate(cols)
        ]
        t = cls(d["protocol"], d["family"], d["master_seed"], rounds)
        for m in d.get("messages", []):
            msg = message_from_dict(m)
            if isinstance(msg, MatchIndices) and list(msg.indices) != t.sifted_indices:
                raise ValueError("recorded match indices disagree with the round flags")
        if t.alice_key != d["alice_key"] or t.bob_key != d["bob_key"]:
            raise ValueError("recorded keys disagree with the round data")
        return t


def prepare(bit: int, flag: int, family: BasisFamily) -> Statevector:
    state = new_state(1)
    if bit:
        state = apply_1q(state, GateKind.NOT_X, 0)
    if flag:
        state = apply_1q(state, family.encode_gate, 0)
    return state


def receive(state: Statevector, flag: int, family: BasisFamily) -> Statevector:
    """Bob's basis operation, just before measurement."""
    if flag:
        state = apply_1q(state, family.decode_gate, 0)
    return state


def _draw(rng: RandomStream, forced: Optional[int]) -> int:
    # always consume the draw so forcing one value leaves the others unchanged
    drawn = int(rng.random() < 0.5)
    return drawn if forced is None else int(forced)


def bb84_round(
    family: BasisFamily,
    noise: NoiseConfig,
    eve: EveConfig,
    rng: RandomStream,
    index: int = 0,
    *,
    alice_bit: Optional[int] = None,
    alice_flag: Optional[int] = None,
    bob_flag: Optional[int] = None,
) -> RoundRecord:
    """Simulate one BB84 round.

    The keyword overrides pin Alice's bit or either basis flag instead of
    drawing it; the corresponding random draw is still consumed.
    """
    a_bit = _draw(rng, alice_bit)
    a_flag = _draw(rng, alice_flag)
    b_flag = _draw(rng, bob_flag)
    state = prepare(a_bit, a_flag, family)
    state = transmit(state, 0, noise, eve, family, rng)
    state = receive(state, b_flag, family)
    observed = flip_readout(measure_all(state, rng), noise.readout_epsilon, rng)
    return RoundRecord(index, a_bit, a_flag, b_flag, int(observed))


def bb84_run(
    n_rounds: int,
    family: Union[BasisFamily, str],
    noise: NoiseConfig = NOISELESS,
    eve: EveConfig = NO_EVE,
    master_seed: int = 0,
) -> ProtocolTranscript:
    if n_rounds < 1:
        raise ValueError(f"n_rounds must be at least 1, got {n_rounds}")
    if isinstance(family, str):
        family = get_family(family)
    rounds = [bb84_round(family, noise, eve, round_stream(master_seed, i), i) for i in range(n_rounds)]
    return ProtocolTranscript("bb84", family.name, master_seed, rounds)
