"""Channel noise on in-transit photons and a repetition code for message bits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quantum import StateVector, apply_pauli

_FLIPS = ("X", "Y", "Z")


@dataclass(frozen=True)
class NoiseModel:
    """Per-photon Pauli noise on a transmission leg.

    ``depolarizing_p`` is the total probability of a uniformly chosen X, Y or
    Z error; ``dephasing_q`` the probability of an extra Z error.
    """

    depolarizing_p: float = 0.0
    dephasing_q: float = 0.0

    def __post_init__(self) -> None:
        for name in ("depolarizing_p", "dephasing_q"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")

    @property
    def is_noiseless(self) -> bool:
        return self.depolarizing_p == 0.0 and self.dephasing_q == 0.0

    def apply(self, state: StateVector, qubit: int, rng: np.random.Generator) -> StateVector:
        state = apply_depolarizing(state, qubit, self.depolarizing_p, rng)
        return apply_dephasing(state, qubit, self.dephasing_q, rng)


def _check_prob(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must be in [0, 1], got {p}")


def apply_depolarizing(state: StateVector, qubit: int, p: float, rng: np.random.Generator) -> StateVector:
    _check_prob(p)
    if p == 0.0:
        return state
    u = rng.random()
    if u >= p:
        return state
    return apply_pauli(state, qubit, _FLIPS[min(int(3 * u / p), 2)])


def apply_dephasing(state: StateVector, qubit: int, q: float, rng: np.random.Generator) -> StateVector:
    _check_prob(q)
    if q == 0.0:
        return state
    if rng.random() < q:
        return apply_pauli(state, qubit, "Z")
    return state


def flip_rate_on_xy_eigenstate(noise: NoiseModel) -> float:
    """Probability that an X or Y eigenstate leaves the leg with its sign
    flipped: two of the three depolarizing Paulis flip it, and so does Z."""
    dep = 2.0 * noise.depolarizing_p / 3.0
    q = noise.dephasing_q
    return dep * (1 - q) + q * (1 - dep)


@dataclass(frozen=True)
class RepetitionCode:
    r: int = 5

    def __post_init__(self) -> None:
        if self.r < 1 or self.r % 2 == 0:
            raise ValueError(f"repetition factor must be odd and >= 1, got {self.r}")

    def encode(self, bits):
        return repetition_encode(bits, self.r)

    def decode(self, bits):
        return repetition_decode(bits, self.r)


def _check_r(r: int) -> None:
    if r < 1 or r % 2 == 0:
        raise ValueError(f"repetition factor must be odd and >= 1, got {r}")


def repetition_encode(bits, r: int = 5):
    """Repeat every bit ``r`` times. Strings stay strings, arrays stay arrays."""
    _check_r(r)
    if isinstance(bits, str):
        return "".join(b * r for b in bits)
    return np.repeat(np.asarray(bits, dtype=np.uint8), r)


def repetition_decode(bits, r: int = 5):
    """Majority vote over consecutive blocks of ``r``."""
    _check_r(r)
    as_str = isinstance(bits, str)
    arr = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0") if as_str else np.asarray(bits, dtype=np.uint8)
    if arr.size % r:
        raise ValueError(f"input length {arr.size} is not a multiple of r={r}")
    out = (arr.reshape(-1, r).sum(axis=1) > r // 2).astype(np.uint8)
    if as_str:
        return "".join(map(str, out.tolist()))
    return out


def logical_error_rate(p: float, r: int = 5) -> float:
    """Exact probability that majority decoding of one block fails."""
    _check_prob(p)
    _check_r(r)
    return math.fsum(math.comb(r, k) * p**k * (1 - p) ** (r - k) for k in range(r // 2 + 1, r + 1))
