"""Sender-controlled secret sharing over an untrusted GHZ analyzer.

A session runs the whole exchange for one sender and ``n_receivers``
receivers:

1. the sender prepares ``k1`` pairs, keeps one half of each, and hides ``k2``
   random X/Y decoy photons among the other halves;
2. every receiver prepares one random X/Y photon per slot; the analyzer
   looks at one sender photon plus one photon per receiver;
3. decoy positions are revealed, receivers publish their decoy-round states
   and the sender counts heralded labels that are impossible for the
   published preparations;
4. if the error rate is at or below the threshold, the sender flips the
   sign of retained photons to encode message and sampling bits;
5. receivers read the bits back with either decoding method.

Everything the simulation knows ends up in an immutable ``Transcript``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .adversary import AttackKind, TeleportAttacker, choose_announcement, intercept_resend_tap
from .coding import NoiseModel, repetition_decode, repetition_encode
from .ghz import (
    AnalyzerOutcome,
    allowed_label_set_cached,
    analyze_ideal,
    analyze_linear_optics,
    reference_collapse,
)
from .quantum import (
    XY_EIGENSTATES,
    Eigenstate,
    PauliBasis,
    StateVector,
    bell_phi_minus,
    identify_eigenstate,
    measure_in_basis,
    tensor,
)
from .streams import SeedStreams


class ConfigError(ValueError):
    pass


class ProtocolError(RuntimeError):
    pass


class MissingAnnouncement(ProtocolError):
    pass


class AnnouncementOrderError(ProtocolError):
    pass


class AnalyzerKind(str, enum.Enum):
    LINEAR = "linear"
    IDEAL = "ideal"


class DecodeMethod(str, enum.Enum):
    I = "I"  # noqa: E741
    II = "II"


class Verdict(str, enum.Enum):
    PROCEED = "proceed"
    ABORT = "abort"


class SlotKind(str, enum.Enum):
    PAIR = "pair"
    DECOY = "decoy"


_ANALYZER_ALIASES = {"linear-optics": "linear", "linear_optics": "linear"}


def _parse_enum(cls, value, field_name):
    try:
        if cls is AttackKind:
            return AttackKind.parse(value)
        if cls is AnalyzerKind and isinstance(value, str):
            value = _ANALYZER_ALIASES.get(value.lower(), value.lower())
        return cls(value)
    except ValueError:
        raise ConfigError(f"invalid {field_name}: {value!r}") from None


@dataclass(frozen=True)
class SessionConfig:
    n_receivers: int = 2
    k1: int = 200
    k2: int = 100
    analyzer: AnalyzerKind = AnalyzerKind.LINEAR
    attack: AttackKind = AttackKind.NONE
    noise: NoiseModel | None = None
    error_threshold: float = 0.05
    sampling_bit_fraction: float = 0.10
    decode_method: DecodeMethod = DecodeMethod.I
    master_seed: int = 0
    message: str | None = None
    repetition: int = 1
    # Use only the first `check_rounds` eligible decoy rounds; None = all of them.
    check_rounds: int | None = None
    corrupt_receiver: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "analyzer", _parse_enum(AnalyzerKind, self.analyzer, "analyzer"))
        object.__setattr__(self, "attack", _parse_enum(AttackKind, self.attack, "attack"))
        object.__setattr__(self, "decode_method", _parse_enum(DecodeMethod, self.decode_method, "decode_method"))
        self.validate()

    def validate(self) -> None:
        if self.n_receivers < 2:
            raise ConfigError("n_receivers must be >= 2")
        if self.n_receivers + 1 > 14:
            raise ConfigError("at most 13 receivers are supported")
        if self.k1 < 1:
            raise ConfigError("k1 must be >= 1")
        if self.k2 < 0:
            raise ConfigError("k2 must be >= 0")
        for name in ("error_threshold", "sampling_bit_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")
        if self.message is not None and set(self.message) - {"0", "1"}:
            raise ConfigError("message must be a string of 0/1 characters")
        if self.repetition < 1 or self.repetition % 2 == 0:
            raise ConfigError("repetition must be odd and >= 1")
        if self.check_rounds is not None and self.check_rounds < 1:
            raise ConfigError("check_rounds must be >= 1 when given")
        if not 0 <= self.corrupt_receiver < self.n_receivers:
            raise ConfigError("corrupt_receiver must index a receiver")

    def to_dict(self) -> dict[str, Any]:
        noise = self.noise or NoiseModel()
        return {
            "n_receivers": self.n_receivers,
            "k1": self.k1,
            "k2": self.k2,
            "analyzer": self.analyzer.value,
            "attack": self.attack.value,
            "noise": {"depolarizing_p": noise.depolarizing_p, "dephasing_q": noise.dephasing_q},
            "error_threshold": self.error_threshold,
            "sampling_bit_fraction": self.sampling_bit_fraction,
            "decode_method": self.decode_method.value,
            "master_seed": self.master_seed,
            "message": self.message,
            "repetition": self.repetition,
            "check_rounds": self.check_rounds,
            "corrupt_receiver": self.corrupt_receiver,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SessionConfig":
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        noise = data.get("noise")
        if isinstance(noise, Mapping):
            try:
                nm = NoiseModel(float(noise.get("depolarizing_p", 0.0)), float(noise.get("dephasing_q", 0.0)))
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            data["noise"] = None if nm.is_noiseless else nm
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class SequenceSlot:
    kind: SlotKind
    pair_id: int | None = None
    decoy: Eigenstate | None = None

    @classmethod
    def pair_half(cls, pair_id: int) -> "SequenceSlot":
        return cls(SlotKind.PAIR, pair_id=pair_id)

    @classmethod
    def decoy_photon(cls, state: Eigenstate) -> "SequenceSlot":
        return cls(SlotKind.DECOY, decoy=state)


@dataclass(frozen=True)
class SenderSequences:
    retained: tuple[int, ...]
    outgoing: tuple[SequenceSlot, ...]
    decoy_positions: frozenset[int]


def prepare_sender_sequences(k1: int, k2: int, rng: np.random.Generator) -> SenderSequences:
    """Pair halves in pair order with ``k2`` decoys at uniformly random slots."""
    if k1 < 1 or k2 < 0:
        raise ConfigError("need k1 >= 1 and k2 >= 0")
    total = k1 + k2
    decoy_at = set(rng.choice(total, size=k2, replace=False).tolist()) if k2 else set()
    states = rng.integers(len(XY_EIGENSTATES), size=k2)
    outgoing = []
    pair_id = decoy_id = 0
    for pos in range(total):
        if pos in decoy_at:
            outgoing.append(SequenceSlot.decoy_photon(XY_EIGENSTATES[int(states[decoy_id])]))
            decoy_id += 1
        else:
            outgoing.append(SequenceSlot.pair_half(pair_id))
            pair_id += 1
    return SenderSequences(tuple(range(k1)), tuple(outgoing), frozenset(decoy_at))


def prepare_receiver_sequence(length: int, rng: np.random.Generator) -> tuple[Eigenstate, ...]:
    return tuple(XY_EIGENSTATES[int(i)] for i in rng.integers(len(XY_EIGENSTATES), size=length))


@dataclass(frozen=True)
class Announcement:
    seq: int
    party: str
    topic: str
    position: int | None
    value: str

    def to_dict(self) -> dict[str, Any]:
        return {"seq": self.seq, "party": self.party, "topic": self.topic, "position": self.position, "value": self.value}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Announcement":
        return cls(d["seq"], d["party"], d["topic"], d["position"], d["value"])


def receiver_name(i: int) -> str:
    return f"receiver-{i + 1}"


def _eig(e: Eigenstate | None) -> str | None:
    return None if e is None else str(e)


def _uneig(s: str | None) -> Eigenstate | None:
    return None if s is None else Eigenstate.parse(s)


@dataclass(frozen=True)
class RoundRecord:
    index: int
    kind: SlotKind
    pair_id: int | None
    decoy: Eigenstate | None
    receiver_preparations: tuple[Eigenstate, ...]
    outcome: AnalyzerOutcome
    alice_collapsed: Eigenstate | None = None
    announced: tuple[Eigenstate, ...] | None = None
    attacker_inference: Eigenstate | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "kind": self.kind.value,
            "pair_id": self.pair_id,
            "decoy": _eig(self.decoy),
            "receivers": [str(e) for e in self.receiver_preparations],
            "success": self.outcome.success,
            "label": self.outcome.label,
            "clicks": self.outcome.clicks,
            "alice_collapsed": _eig(self.alice_collapsed),
            "announced": None if self.announced is None else [str(e) for e in self.announced],
            "attacker_inference": _eig(self.attacker_inference),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "RoundRecord":
        return cls(
            index=d["index"],
            kind=SlotKind(d["kind"]),
            pair_id=d["pair_id"],
            decoy=_uneig(d["decoy"]),
            receiver_preparations=tuple(Eigenstate.parse(s) for s in d["receivers"]),
            outcome=AnalyzerOutcome(d["success"], d["label"], d["clicks"]),
            alice_collapsed=_uneig(d["alice_collapsed"]),
            announced=None if d["announced"] is None else tuple(Eigenstate.parse(s) for s in d["announced"]),
            attacker_inference=_uneig(d["attacker_inference"]),
        )


@dataclass(frozen=True)
class RoundResult:
    """A round as it leaves the analyzer, before anything is announced."""

    record: RoundRecord
    retained: StateVector | None = field(default=None, compare=False, repr=False)


def _analyze(kind: AnalyzerKind, state: StateVector, rng, subsystem) -> AnalyzerOutcome:
    if kind is AnalyzerKind.LINEAR:
        return analyze_linear_optics(state, rng, subsystem)
    return analyze_ideal(state, rng, subsystem)


def run_round(
    index: int,
    slot: SequenceSlot,
    receiver_preparations: Sequence[Eigenstate],
    *,
    analyzer: AnalyzerKind | str,
    streams: SeedStreams,
    noise: NoiseModel | None = None,
    attack: AttackKind | str = AttackKind.NONE,
    attacker: TeleportAttacker | None = None,
) -> RoundResult:
    """Send one sender photon and one photon per receiver through the analyzer.

    In transit order: sender channel noise, then the attack tap, then the
    analyzer. For pair slots the joint state carries the retained photon K
    as qubit 0 and the outgoing half K' as qubit 1.
    """
    analyzer = AnalyzerKind(analyzer)
    attack = AttackKind.parse(attack)
    preps = tuple(receiver_preparations)
    for p in preps:
        if p.basis is PauliBasis.Z:
            raise ValueError(f"receiver preparations must be X/Y eigenstates, got {p}")
    n = len(preps)
    if slot.kind is SlotKind.PAIR:
        sender, a_pos = bell_phi_minus(), 1
    else:
        sender, a_pos = slot.decoy.vector(), 0
    if noise is not None and not noise.is_noiseless:
        sender = noise.apply(sender, a_pos, streams("channel-sender"))

    rng = streams("analyzer")
    if attack is AttackKind.TELEPORT:
        if attacker is None:
            raise ValueError("teleportation attack needs a TeleportAttacker")
        front = attacker.substitute(index, sender)
        joint = tensor([front, *(p.vector() for p in preps)])
        outcome = _analyze(analyzer, joint, rng, (0, *range(2, n + 2)))
        attacker.keep(index, outcome.residual if outcome.success else None)
        retained = None
    else:
        if attack is AttackKind.INTERCEPT_RESEND:
            _, sender = intercept_resend_tap(sender, a_pos, streams("attack"))
        joint = tensor([sender, *(p.vector() for p in preps)])
        offset = sender.num_qubits
        outcome = _analyze(analyzer, joint, rng, (a_pos, *range(offset, offset + n)))
        retained = outcome.residual if (outcome.success and slot.kind is SlotKind.PAIR) else None

    collapsed = identify_eigenstate(retained) if retained is not None else None
    outcome = replace(outcome, residual=None)
    record = RoundRecord(index, slot.kind, slot.pair_id, slot.decoy, preps, outcome, collapsed)
    return RoundResult(record, retained)


@dataclass(frozen=True)
class CheckResult:
    error_rate: float
    checked: int
    errors: int
    eligible: int
    verdict: Verdict
    no_checks: bool = False
    shortfall: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "error_rate": self.error_rate,
            "checked": self.checked,
            "errors": self.errors,
            "eligible": self.eligible,
            "verdict": self.verdict.value,
            "no_checks": self.no_checks,
            "shortfall": self.shortfall,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "CheckResult":
        return cls(d["error_rate"], d["checked"], d["errors"], d["eligible"], Verdict(d["verdict"]),
                   d["no_checks"], d["shortfall"])


def check_round_consistent(sender_state: Eigenstate, announced: Sequence[Eigenstate], label: str) -> bool | None:
    """None when the round has an odd Y count and cannot be checked."""
    photons = (sender_state, *announced)
    if sum(p.basis is PauliBasis.Y for p in photons) % 2:
        return None
    return label in allowed_label_set_cached(photons)


def security_check(
    rounds: Sequence[RoundRecord],
    announced: Mapping[int, Sequence[Eigenstate]],
    decoy_keys: Mapping[int, Eigenstate],
    threshold: float,
    limit: int | None = None,
) -> CheckResult:
    """Error rate over successful decoy rounds with an even Y count.

    ``announced`` maps round index to the receivers' published states,
    ``decoy_keys`` maps round index to the sender's decoy preparation. With
    ``limit`` only the first ``limit`` eligible rounds are checked; having
    fewer than that is a shortfall and aborts.
    """
    checked = errors = eligible = 0
    for rec in rounds:
        if rec.index not in decoy_keys or not rec.outcome.success:
            continue
        if rec.index not in announced:
            raise MissingAnnouncement(f"no receiver announcements for decoy round {rec.index}")
        ok = check_round_consistent(decoy_keys[rec.index], announced[rec.index], rec.outcome.label)
        if ok is None:
            continue
        eligible += 1
        if limit is not None and checked >= limit:
            continue
        checked += 1
        errors += not ok
    shortfall = limit is not None and checked < limit
    rate = errors / checked if checked else 0.0
    verdict = Verdict.ABORT if (rate > threshold or shortfall) else Verdict.PROCEED
    return CheckResult(rate, checked, errors, eligible, verdict, no_checks=checked == 0, shortfall=shortfall)


def encode_bit(state: Eigenstate, bit: int) -> Eigenstate:
    """Apply diag(1, -1) for bit 1: swaps +x/-x and +y/-y."""
    if state.basis is PauliBasis.Z:
        raise ValueError("encoding is defined on X/Y eigenstates only")
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    return state.flipped() if bit else state


class Role(str, enum.Enum):
    MESSAGE = "message"
    SAMPLING = "sampling"
    PAD = "pad"


@dataclass(frozen=True)
class EncodedPosition:
    position: int
    role: Role
    bit: int
    receiver: int

    def to_dict(self) -> dict[str, Any]:
        return {"position": self.position, "role": self.role.value, "bit": self.bit, "receiver": self.receiver}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "EncodedPosition":
        return cls(d["position"], Role(d["role"]), d["bit"], d["receiver"])


@dataclass(frozen=True)
class Encoding:
    message: str
    codeword: str
    truncated: bool
    positions: tuple[EncodedPosition, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "message": self.message,
            "codeword": self.codeword,
            "truncated": self.truncated,
            "positions": [p.to_dict() for p in self.positions],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Encoding":
        return cls(d["message"], d["codeword"], d["truncated"],
                   tuple(EncodedPosition.from_dict(p) for p in d["positions"]))


def plan_encoding(
    usable: Sequence[int],
    n_receivers: int,
    message: str | None,
    repetition: int,
    sampling_fraction: float,
    rng: np.random.Generator,
) -> Encoding:
    """Assign message, sampling and padding bits to the usable positions.

    Positions go to receivers round-robin in sequence order. Sampling
    positions are a uniform random subset; message codeword bits fill the rest
    in order and any leftover positions carry random padding.
    """
    usable = list(usable)
    n_sampling = int(round(sampling_fraction * len(usable)))
    sampling = set(rng.choice(len(usable), size=n_sampling, replace=False).tolist()) if n_sampling else set()
    capacity = len(usable) - n_sampling
    max_bits = capacity // repetition
    if message is None:
        message = "".join(map(str, rng.integers(2, size=max_bits).tolist()))
    truncated = len(message) > max_bits
    message = message[:max_bits]
    codeword = repetition_encode(message, repetition)
    filler = rng.integers(2, size=len(usable)).tolist()
    positions = []
    cw_iter = iter(codeword)
    for order, pos in enumerate(usable):
        if order in sampling:
            role, bit = Role.SAMPLING, int(filler[order])
        else:
            c = next(cw_iter, None)
            role, bit = (Role.PAD, int(filler[order])) if c is None else (Role.MESSAGE, int(c))
        positions.append(EncodedPosition(pos, role, bit, order % n_receivers))
    return Encoding(message, codeword, truncated, tuple(positions))


@dataclass(frozen=True)
class DecodeResult:
    method: DecodeMethod
    bits_per_receiver: dict[int, str]
    decoded_codeword: str
    recovered_message: str
    integrity_ok: bool
    sampling_mismatches: int
    announcements: tuple[Announcement, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method.value,
            "bits_per_receiver": {str(k): v for k, v in sorted(self.bits_per_receiver.items())},
            "decoded_codeword": self.decoded_codeword,
            "recovered_message": self.recovered_message,
            "integrity_ok": self.integrity_ok,
            "sampling_mismatches": self.sampling_mismatches,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any], announcements: Iterable[Announcement] = ()) -> "DecodeResult":
        return cls(DecodeMethod(d["method"]), {int(k): v for k, v in d["bits_per_receiver"].items()},
                   d["decoded_codeword"], d["recovered_message"], d["integrity_ok"], d["sampling_mismatches"],
                   tuple(announcements))


@dataclass(frozen=True)
class Transcript:
    config: SessionConfig
    rounds: tuple[RoundRecord, ...]
    decoy_positions: tuple[int, ...]
    check: CheckResult
    encoding: Encoding | None
    decoding: DecodeResult | None
    announcements: tuple[Announcement, ...]

    @property
    def verdict(self) -> Verdict:
        return self.check.verdict

    @property
    def check_error_rate(self) -> float:
        return self.check.error_rate

    @property
    def encoded_positions(self) -> tuple[int, ...]:
        return tuple(p.position for p in self.encoding.positions) if self.encoding else ()

    @property
    def usable_positions(self) -> tuple[int, ...]:
        return tuple(
            r.index for r in self.rounds
            if r.kind is SlotKind.PAIR and r.outcome.success and r.alice_collapsed is not None
        )

    @property
    def analyzer_success_fraction(self) -> float:
        return sum(r.outcome.success for r in self.rounds) / len(self.rounds) if self.rounds else 0.0

    @property
    def message_bit_errors(self) -> int | None:
        if self.encoding is None or self.decoding is None:
            return None
        sent, got = self.encoding.message, self.decoding.recovered_message
        return sum(a != b for a, b in zip(sent, got)) + abs(len(sent) - len(got))

    @property
    def message_bit_error_rate(self) -> float | None:
        errs = self.message_bit_errors
        if errs is None:
            return None
        return errs / len(self.encoding.message) if self.encoding.message else 0.0

    @property
    def integrity_ok(self) -> bool | None:
        return None if self.decoding is None else self.decoding.integrity_ok

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "transcript",
            "config": self.config.to_dict(),
            "rounds": [r.to_dict() for r in self.rounds],
            "decoy_positions": list(self.decoy_positions),
            "check": self.check.to_dict(),
            "encoding": None if self.encoding is None else self.encoding.to_dict(),
            "decoding": None if self.decoding is None else self.decoding.to_dict(),
            "announcements": [a.to_dict() for a in self.announcements],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Transcript":
        anns = tuple(Announcement.from_dict(a) for a in d["announcements"])
        dec = d["decoding"]
        decoding = None
        if dec is not None:
            decoding = DecodeResult.from_dict(dec, (a for a in anns if a.topic.startswith("decode")))
        return cls(
            config=SessionConfig.from_dict(d["config"]),
            rounds=tuple(RoundRecord.from_dict(r) for r in d["rounds"]),
            decoy_positions=tuple(d["decoy_positions"]),
            check=CheckResult.from_dict(d["check"]),
            encoding=None if d["encoding"] is None else Encoding.from_dict(d["encoding"]),
            decoding=decoding,
            announcements=anns,
        )

    @classmethod
    def from_json(cls, text: str) -> "Transcript":
        return cls.from_dict(json.loads(text))


class AnnouncementLog:
    def __init__(self, start: int = 0):
        self._items: list[Announcement] = []
        self._next = start

    def publish(self, party: str, topic: str, position: int | None, value: str) -> Announcement:
        a = Announcement(self._next, party, topic, position, value)
        self._next += 1
        self._items.append(a)
        return a

    def items(self) -> tuple[Announcement, ...]:
        return tuple(self._items)


class DecodingSession:
    """Step-by-step readout of the encoded photons.

    Method I: the sender forwards each encoded photon to its receiver, the
    other receivers publish their states, the receiver measures in the
    reference basis.

    Method II: receivers announce their bases, the sender measures her own
    encoded photons and publishes the outcomes, then receivers exchange
    states. Publishing outcomes before all bases are in raises
    ``AnnouncementOrderError``.
    """

    def __init__(self, transcript: Transcript, method: DecodeMethod | str, streams: SeedStreams | None = None):
        if transcript.verdict is not Verdict.PROCEED or transcript.encoding is None:
            raise ProtocolError("decoding requires a session that passed the security check and was encoded")
        self.t = transcript
        self.method = DecodeMethod(method)
        self.streams = streams or SeedStreams(transcript.config.master_seed)
        self.rng = self.streams(f"decode-{self.method.value}")
        self.log = AnnouncementLog(len(transcript.announcements))
        self.rounds = {r.index: r for r in transcript.rounds}
        self.n = transcript.config.n_receivers
        self._alice_results: dict[int, str] = {}
        self._readings: dict[int, int] = {}
        self._bases_in: set[tuple[int, int]] = set()

    def _encoded_state(self, ep: EncodedPosition) -> Eigenstate:
        collapsed = self.rounds[ep.position].alice_collapsed
        if collapsed is None:
            raise ProtocolError(f"position {ep.position} has no retained photon")
        return encode_bit(collapsed, ep.bit)

    def _reference(self, position: int) -> Eigenstate:
        rec = self.rounds[position]
        return reference_collapse(rec.outcome.label, rec.receiver_preparations)

    def receivers_announce_bases(self) -> None:
        for ep in self.t.encoding.positions:
            preps = self.rounds[ep.position].receiver_preparations
            for i, p in enumerate(preps):
                self.log.publish(receiver_name(i), "decode-basis", ep.position, p.basis.value)
                self._bases_in.add((ep.position, i))

    def alice_publish_results(self) -> None:
        for ep in self.t.encoding.positions:
            missing = [i for i in range(self.n) if (ep.position, i) not in self._bases_in]
            if missing:
                raise AnnouncementOrderError(
                    f"sender would publish position {ep.position} before "
                    f"{', '.join(receiver_name(i) for i in missing)} announced a basis"
                )
            rec = self.rounds[ep.position]
            alpha = sum(p.basis is PauliBasis.Y for p in rec.receiver_preparations)
            basis = PauliBasis.X if alpha % 2 == 0 else PauliBasis.Y
            sign, _ = measure_in_basis(self._encoded_state(ep).vector(), 0, basis, self.rng)
            self._alice_results[ep.position] = sign
            self.log.publish("alice", "decode-result", ep.position, f"{sign}{basis.value.lower()}")

    def receivers_exchange_states(self) -> None:
        for ep in self.t.encoding.positions:
            preps = self.rounds[ep.position].receiver_preparations
            for i, p in enumerate(preps):
                if i != ep.receiver:
                    self.log.publish(receiver_name(i), "decode-state", ep.position, str(p))

    def forward_and_measure(self) -> None:
        noise = self.t.config.noise
        channel = self.streams("channel-return")
        for ep in self.t.encoding.positions:
            state = self._encoded_state(ep).vector()
            if noise is not None and not noise.is_noiseless:
                state = noise.apply(state, 0, channel)
            ref = self._reference(ep.position)
            sign, _ = measure_in_basis(state, 0, ref.basis, self.streams(f"decode-{receiver_name(ep.receiver)}"))
            self._readings[ep.position] = int(sign != ref.sign)

    def read_from_results(self) -> None:
        for ep in self.t.encoding.positions:
            if ep.position not in self._alice_results:
                raise AnnouncementOrderError(f"no published sender result for position {ep.position}")
            ref = self._reference(ep.position)
            self._readings[ep.position] = int(self._alice_results[ep.position] != ref.sign)

    def run(self) -> DecodeResult:
        if self.method is DecodeMethod.I:
            self.receivers_exchange_states()
            self.forward_and_measure()
        else:
            self.receivers_announce_bases()
            self.alice_publish_results()
            self.receivers_exchange_states()
            self.read_from_results()
        return self.finish()

    def finish(self) -> DecodeResult:
        enc = self.t.encoding
        per: dict[int, list[str]] = {i: [] for i in range(self.n)}
        codeword = []
        mismatches = 0
        sampling = []
        for ep in enc.positions:
            bit = self._readings[ep.position]
            per[ep.receiver].append(str(bit))
            if ep.role is Role.MESSAGE:
                codeword.append(str(bit))
            elif ep.role is Role.SAMPLING:
                sampling.append(ep)
                mismatches += bit != ep.bit
        for ep in sampling:
            self.log.publish("alice", "decode-sampling", ep.position, str(ep.bit))
        cw = "".join(codeword)
        recovered = repetition_decode(cw, self.t.config.repetition) if cw else ""
        return DecodeResult(
            self.method,
            {i: "".join(b) for i, b in per.items()},
            cw,
            recovered,
            mismatches == 0,
            mismatches,
            self.log.items(),
        )


def decode_message(transcript: Transcript, method: DecodeMethod | str | None = None) -> DecodeResult:
    method = transcript.config.decode_method if method is None else DecodeMethod(method)
    return DecodingSession(transcript, method).run()


def run_session(config: SessionConfig) -> Transcript:
    config.validate()
    streams = SeedStreams(config.master_seed)
    n = config.n_receivers
    seqs = prepare_sender_sequences(config.k1, config.k2, streams("alice"))
    total = len(seqs.outgoing)
    receiver_seqs = [prepare_receiver_sequence(total, streams(f"prepare-{receiver_name(i)}")) for i in range(n)]
    attacker = None
    if config.attack is AttackKind.TELEPORT:
        attacker = TeleportAttacker(config.corrupt_receiver, streams("attack"))

    results = [
        run_round(
            idx,
            slot,
            [receiver_seqs[i][idx] for i in range(n)],
            analyzer=config.analyzer,
            streams=streams,
            noise=config.noise,
            attack=config.attack,
            attacker=attacker,
        )
        for idx, slot in enumerate(seqs.outgoing)
    ]
    records = [r.record for r in results]
    log = AnnouncementLog()
    for rec in records:
        log.publish("relay", "analyzer", rec.index, rec.outcome.label if rec.outcome.success else "fail")
    decoy_positions = tuple(sorted(seqs.decoy_positions))
    log.publish("alice", "decoy-positions", None, ",".join(map(str, decoy_positions)))

    # The corrupt receiver acts after decoy positions are public.
    if attacker is not None:
        for k, rec in enumerate(records):
            if not rec.outcome.success:
                continue
            inf = attacker.infer(rec.index, rec.kind.value)
            collapsed = rec.alice_collapsed
            if rec.kind is SlotKind.PAIR and inf.retained is not None:
                collapsed = identify_eigenstate(inf.retained)
            records[k] = replace(rec, attacker_inference=inf.inferred, alice_collapsed=collapsed)

    announced: dict[int, tuple[Eigenstate, ...]] = {}
    corrupt = config.corrupt_receiver if attacker is not None else None
    for k, rec in enumerate(records):
        if rec.kind is not SlotKind.DECOY or not rec.outcome.success:
            continue
        published: dict[int, Eigenstate] = {}
        for i in range(n):
            if i == corrupt:
                continue
            published[i] = rec.receiver_preparations[i]
            log.publish(receiver_name(i), "decoy-state", rec.index, str(published[i]))
        if corrupt is not None:
            published[corrupt] = choose_announcement(
                rec.receiver_preparations[corrupt], rec.attacker_inference, rec.outcome.label, published, corrupt
            )
            log.publish(receiver_name(corrupt), "decoy-state", rec.index, str(published[corrupt]))
        announced[rec.index] = tuple(published[i] for i in range(n))
        records[k] = replace(rec, announced=announced[rec.index])

    keys = {rec.index: rec.decoy for rec in records if rec.kind is SlotKind.DECOY}
    check = security_check(records, announced, keys, config.error_threshold, config.check_rounds)
    log.publish("alice", "verdict", None, check.verdict.value)

    transcript = Transcript(config, tuple(records), decoy_positions, check, None, None, log.items())
    if check.verdict is Verdict.ABORT:
        return transcript
    encoding = plan_encoding(
        transcript.usable_positions, n, config.message, config.repetition,
        config.sampling_bit_fraction, streams("alice-encode"),
    )
    transcript = replace(transcript, encoding=encoding)
    decoding = DecodingSession(transcript, config.decode_method, streams).run()
    return replace(transcript, decoding=decoding, announcements=transcript.announcements + decoding.announcements)
