"""Attacks on the sender's photon stream and detection-rate experiments.

Two attacks are modeled:

* intercept-resend: every in-transit sender photon is measured in a random
  X/Y basis and replaced by the observed eigenstate;
* teleportation-based: a corrupt receiver swaps the sender's photons for
  halves of its own pairs, keeps the sender's photons, and later measures
  them jointly with its kept halves (pair rounds) or in a random basis
  (decoy rounds, once their positions are public).

Taps only ever see in-transit states. They never touch the sender's retained
photons or her decoy key.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .ghz import GhzLabel, ProductStateSpec, allowed_label_set_cached
from .quantum import (
    Eigenstate,
    PauliBasis,
    StateVector,
    bell_basis,
    bell_phi_minus,
    identify_eigenstate,
    insert_qubit,
    measure_in_basis,
    project,
    tensor,
)

_XY = (PauliBasis.X, PauliBasis.Y)


class AttackKind(str, enum.Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept-resend"
    TELEPORT = "teleport"

    @classmethod
    def parse(cls, value: "AttackKind | str | None") -> "AttackKind":
        if value is None:
            return cls.NONE
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"ir": "intercept-resend", "teleportation": "teleport", "teleportation-based": "teleport"}
        return cls(aliases.get(key, key))


def _random_xy_basis(rng: np.random.Generator) -> PauliBasis:
    return _XY[int(rng.integers(2))]


def intercept_resend_tap(
    state: StateVector, qubit: int, rng: np.random.Generator
) -> tuple[Eigenstate, StateVector]:
    """Measure the in-transit ``qubit`` in a random X/Y basis and resend.

    Any entanglement with the sender's retained photon is broken. Returns the
    resent eigenstate and the joint state with the resent photon in place.
    """
    basis = _random_xy_basis(rng)
    sign, rest = measure_in_basis(state, qubit, basis, rng)
    resent = Eigenstate(basis, sign)
    if state.num_qubits == 1:
        return resent, resent.vector()
    return resent, insert_qubit(rest, qubit, resent.vector())


@dataclass(frozen=True)
class TeleportSetup:
    """Fresh pairs on (S1, S2); S1 halves go to the analyzer, S2 halves stay."""

    pairs: tuple[StateVector, ...]

    @property
    def substitute(self) -> tuple[tuple[int, int], ...]:
        return tuple((i, 0) for i in range(len(self.pairs)))

    @property
    def kept(self) -> tuple[tuple[int, int], ...]:
        return tuple((i, 1) for i in range(len(self.pairs)))


def teleportation_attack_setup(k_rounds: int) -> TeleportSetup:
    if k_rounds < 0:
        raise ValueError("k_rounds must be non-negative")
    pair = bell_phi_minus()
    return TeleportSetup(tuple(pair for _ in range(k_rounds)))


_BELL = bell_basis()
_PAIR = bell_phi_minus().amplitudes.reshape(2, 2)
# Bell outcome on (K', S2) maps the kept photon's state onto K:
#   K = sum_{k'} <bell|_{k' s} pair[k, k'] e[s]
_BELL_MAPS = {
    name: np.einsum("ab,ka->kb", b.amplitudes.reshape(2, 2).conj(), _PAIR) for name, b in _BELL.items()
}


@dataclass(frozen=True)
class TeleportInference:
    inferred: Eigenstate
    bell_outcome: str | None = None
    retained: StateVector | None = field(default=None, compare=False, repr=False)


def teleportation_attack_infer(
    intercepted: StateVector, kept: StateVector, kind: str, rng: np.random.Generator
) -> TeleportInference:
    """The corrupt receiver's measurement once decoy positions are public.

    ``kind == "pair"``: ``intercepted`` is the (K, K') state with K' held by
    the attacker, ``kept`` is the collapsed S2 photon. A Bell measurement on
    (K', S2) teleports S2's state onto the sender's K up to a known map, so
    the attacker learns K exactly; ``retained`` is K's new state.

    ``kind == "decoy"``: ``intercepted`` is the single decoy photon, measured
    in a random X/Y basis.
    """
    if kind == "decoy":
        basis = _random_xy_basis(rng)
        sign, _ = measure_in_basis(intercepted, 0, basis, rng)
        return TeleportInference(Eigenstate(basis, sign))
    if kind != "pair":
        raise ValueError(f"unknown round kind {kind!r}")
    if intercepted.num_qubits != 2 or kept.num_qubits != 1:
        raise ValueError("pair inference needs a (K, K') state and one kept photon")
    joint = tensor([intercepted, kept])
    outcomes = []
    for name, b in _BELL.items():
        prob, residual = project(joint, (1, 2), b)
        if residual is not None:
            outcomes.append((name, prob, residual))
    u = rng.random() * sum(p for _, p, _ in outcomes)
    acc = 0.0
    for name, prob, residual in outcomes:
        acc += prob
        if u < acc:
            break
    guess = StateVector.from_unnormalized(_BELL_MAPS[name] @ kept.amplitudes)
    inferred = identify_eigenstate(guess)
    if inferred is None:
        raise ValueError("kept photon is not a Pauli eigenstate")
    return TeleportInference(inferred, name, residual)


def choose_announcement(
    true_state: Eigenstate,
    sender_guess: Eigenstate,
    label: GhzLabel,
    others: dict[int, Eigenstate],
    position: int,
) -> Eigenstate:
    """State the corrupt receiver publishes for a decoy round.

    ``others`` maps receiver index to already-published states. If the guessed
    sender state plus the published states has an even Y count, the receiver
    keeps or flips its own sign so the heralded label looks consistent;
    otherwise the round will not be checked under the guess and it tells the
    truth.
    """
    def spec_with(me: Eigenstate) -> ProductStateSpec:
        photons = [sender_guess]
        for i in range(len(others) + 1):
            photons.append(me if i == position else others[i])
        return ProductStateSpec(tuple(photons))

    if spec_with(true_state).alpha % 2:
        return true_state
    for cand in (true_state, true_state.flipped()):
        if label in allowed_label_set_cached(spec_with(cand).photons):
            return cand
    return true_state


class TeleportAttacker:
    """Per-session state of a teleportation-based attack."""

    def __init__(self, position: int, rng: np.random.Generator):
        self.position = position
        self.rng = rng
        self._pair = teleportation_attack_setup(1).pairs[0]
        self._held: dict[int, StateVector] = {}
        self._kept: dict[int, StateVector] = {}

    def substitute(self, index: int, in_transit: StateVector) -> StateVector:
        """Keep the sender's photon(s); return the (S1, S2) pair sent instead."""
        self._held[index] = in_transit
        return self._pair

    def keep(self, index: int, s2: StateVector | None) -> None:
        if s2 is not None:
            self._kept[index] = s2

    def infer(self, index: int, kind: str) -> TeleportInference | None:
        if index not in self._kept:
            return None
        return teleportation_attack_infer(self._held[index], self._kept[index], kind, self.rng)


@dataclass(frozen=True)
class DetectionStats:
    attack: AttackKind
    sessions: int
    aborted: int
    checked_rounds: int
    check_errors: int
    check_shortfalls: int = 0

    def __post_init__(self) -> None:
        if self.aborted > self.sessions or self.check_errors > self.checked_rounds:
            raise ValueError("counts are inconsistent")

    @property
    def per_check_error_rate(self) -> float:
        return self.check_errors / self.checked_rounds if self.checked_rounds else 0.0

    @property
    def detection_rate(self) -> float:
        return self.aborted / self.sessions if self.sessions else 0.0

    def to_dict(self) -> dict:
        return {
            "kind": "detection",
            "attack": self.attack.value,
            "sessions": self.sessions,
            "aborted": self.aborted,
            "checked_rounds": self.checked_rounds,
            "check_errors": self.check_errors,
            "check_shortfalls": self.check_shortfalls,
            "per_check_error_rate": self.per_check_error_rate,
            "detection_rate": self.detection_rate,
        }


def measure_detection_rate(config, attack: AttackKind | str, trials: int) -> DetectionStats:
    """Run ``trials`` independent sessions under ``attack`` and count aborts.

    Session ``i`` uses a seed derived from ``(config.master_seed, i)``.
    """
    from dataclasses import replace

    from .protocol import Verdict, run_session
    from .streams import derive_seed

    if trials < 1:
        raise ValueError("trials must be >= 1")
    attack = AttackKind.parse(attack)
    aborted = checked = errors = shortfalls = 0
    for i in range(trials):
        cfg = replace(config, attack=attack, master_seed=derive_seed(config.master_seed, "detect", i))
        t = run_session(cfg)
        aborted += t.check.verdict is Verdict.ABORT
        checked += t.check.checked
        errors += t.check.errors
        shortfalls += t.check.shortfall
    return DetectionStats(attack, trials, aborted, checked, errors, shortfalls)
