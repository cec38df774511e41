"""Small dense state-vector algebra for a handful of polarization qubits.

Qubit 0 is the leftmost bit of a computational-basis index, so the amplitude
of ``|b0 b1 ... b_{m-1}>`` lives at ``int("b0b1...", 2)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

ZERO_TOL = 1e-9
NORM_TOL = 1e-12
PROB_FLOOR = 1e-12

_SQRT_HALF = 1.0 / math.sqrt(2.0)


class PauliBasis(str, enum.Enum):
    Z = "Z"
    X = "X"
    Y = "Y"


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state of ``num_qubits`` qubits.

    A zero-qubit state (a single amplitude of 1) marks "nothing left" after a
    projection that consumed every qubit.
    """

    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        size = amps.shape[0] if amps.ndim == 1 else -1
        if size < 1 or size & (size - 1):
            raise ValueError(f"amplitude vector length must be a power of two, got shape {amps.shape}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        if amps.flags.writeable:
            amps = amps.copy()
            amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_unnormalized(cls, amplitudes: Sequence[complex] | np.ndarray) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm < PROB_FLOOR:
            raise ValueError("cannot normalize a zero vector")
        return cls(amps / norm)

    @classmethod
    def basis_state(cls, bits: str) -> "StateVector":
        amps = np.zeros(2 ** len(bits), dtype=complex)
        amps[int(bits, 2) if bits else 0] = 1.0
        return cls(amps)

    @property
    def num_qubits(self) -> int:
        return self.amplitudes.shape[0].bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        return abs(self.inner(other)) ** 2

    def allclose(self, other: "StateVector", atol: float = ZERO_TOL) -> bool:
        return self.dim == other.dim and bool(np.allclose(self.amplitudes, other.amplitudes, atol=atol, rtol=0))

    def equal_up_to_phase(self, other: "StateVector", atol: float = ZERO_TOL) -> bool:
        return self.dim == other.dim and abs(self.fidelity(other) - 1.0) < atol

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateVector):
            return NotImplemented
        return self.dim == other.dim and bool(np.array_equal(self.amplitudes, other.amplitudes))

    def __hash__(self) -> int:
        return hash(self.amplitudes.tobytes())


SCALAR = StateVector(np.ones(1, dtype=complex))


@dataclass(frozen=True, order=True)
class Eigenstate:
    """A Pauli eigenstate; ``sign`` is ``"+"`` or ``"-"``.

    For Z, ``+`` is ``|0>`` and ``-`` is ``|1>``.
    """

    basis: PauliBasis
    sign: str

    def __post_init__(self) -> None:
        if self.sign not in ("+", "-"):
            raise ValueError(f"sign must be '+' or '-', got {self.sign!r}")
        object.__setattr__(self, "basis", PauliBasis(self.basis))

    @classmethod
    def parse(cls, token: str) -> "Eigenstate":
        """Parse ``"+x"``, ``"-Y"``, ``"+z"`` and so on."""
        token = token.strip()
        if len(token) != 2 or token[0] not in "+-" or token[1].upper() not in "XYZ":
            raise ValueError(f"not an eigenstate token: {token!r}")
        return cls(PauliBasis(token[1].upper()), token[0])

    def flipped(self) -> "Eigenstate":
        return Eigenstate(self.basis, "-" if self.sign == "+" else "+")

    def vector(self) -> StateVector:
        return eigenstate(self.basis, self.sign)

    def __str__(self) -> str:
        return f"{self.sign}{self.basis.value.lower()}"


def _eigen_amplitudes(basis: PauliBasis, sign: str) -> np.ndarray:
    s = 1.0 if sign == "+" else -1.0
    if basis is PauliBasis.Z:
        return np.array([1.0, 0.0] if sign == "+" else [0.0, 1.0], dtype=complex)
    if basis is PauliBasis.X:
        return np.array([_SQRT_HALF, s * _SQRT_HALF], dtype=complex)
    return np.array([_SQRT_HALF, s * 1j * _SQRT_HALF], dtype=complex)


_EIGEN_CACHE = {
    (b, s): StateVector(_eigen_amplitudes(b, s)) for b in PauliBasis for s in ("+", "-")
}

ALL_EIGENSTATES = tuple(Eigenstate(b, s) for b in PauliBasis for s in ("+", "-"))
XY_EIGENSTATES = tuple(e for e in ALL_EIGENSTATES if e.basis is not PauliBasis.Z)


def eigenstate(basis: PauliBasis | str, sign: str) -> StateVector:
    return _EIGEN_CACHE[(PauliBasis(basis), sign)]


def bell_phi_minus() -> StateVector:
    """(|01> - |10>)/sqrt(2), the pair state the sender distributes."""
    return StateVector(np.array([0.0, _SQRT_HALF, -_SQRT_HALF, 0.0], dtype=complex))


def bell_basis() -> dict[str, StateVector]:
    """The four Bell states, keyed by conventional name."""
    h = _SQRT_HALF
    return {
        "phi+": StateVector(np.array([h, 0, 0, h], dtype=complex)),
        "phi-": StateVector(np.array([h, 0, 0, -h], dtype=complex)),
        "psi+": StateVector(np.array([0, h, h, 0], dtype=complex)),
        "psi-": StateVector(np.array([0, h, -h, 0], dtype=complex)),
    }


def tensor(parts: Sequence[StateVector]) -> StateVector:
    if not parts:
        raise ValueError("tensor() needs at least one factor")
    if len(parts) == 1:
        return parts[0]
    amps = parts[0].amplitudes
    for part in parts[1:]:
        # same as np.kron for vectors, without its per-call overhead
        amps = np.outer(amps, part.amplitudes).ravel()
    return StateVector.from_unnormalized(amps)


def _check_subsystem(num_qubits: int, subsystem: Sequence[int]) -> tuple[int, ...]:
    sub = tuple(int(q) for q in subsystem)
    if len(set(sub)) != len(sub):
        raise ValueError(f"subsystem indices must be distinct: {sub}")
    for q in sub:
        if not 0 <= q < num_qubits:
            raise ValueError(f"qubit index {q} out of range for {num_qubits} qubits")
    return sub


def split_subsystem(state: StateVector, subsystem: Sequence[int]) -> np.ndarray:
    """Reshape ``state`` to a (2^k, 2^(m-k)) matrix.

    Rows index the ``subsystem`` qubits in the given order; columns index the
    remaining qubits in their original order.
    """
    m = state.num_qubits
    sub = _check_subsystem(m, subsystem)
    rest = [q for q in range(m) if q not in sub]
    psi = state.amplitudes.reshape((2,) * m) if m else state.amplitudes
    if m:
        psi = np.transpose(psi, sub + tuple(rest))
    return psi.reshape(2 ** len(sub), 2 ** len(rest))


def _residual(vec: np.ndarray) -> tuple[float, StateVector | None]:
    prob = float(np.vdot(vec, vec).real)
    if prob < PROB_FLOOR:
        return 0.0, None
    if vec.shape[0] == 1:
        return prob, SCALAR
    return prob, StateVector(vec / math.sqrt(prob))


def project(
    state: StateVector, subsystem: Sequence[int], target: StateVector
) -> tuple[float, StateVector | None]:
    """Project ``subsystem`` of ``state`` onto ``target``.

    Returns the Born probability and the normalized state left on the other
    qubits (``None`` if the probability is below 1e-12, ``SCALAR`` if no
    qubits remain).
    """
    sub = tuple(subsystem)
    if target.num_qubits != len(sub):
        raise ValueError(
            f"target has {target.num_qubits} qubits but subsystem lists {len(sub)}"
        )
    mat = split_subsystem(state, sub)
    return _residual(target.amplitudes.conj() @ mat)


def insert_qubit(state: StateVector, index: int, qubit: StateVector) -> StateVector:
    """Tensor a single-qubit ``qubit`` into ``state`` so that it sits at ``index``."""
    if qubit.num_qubits != 1:
        raise ValueError("insert_qubit expects a one-qubit state")
    m = state.num_qubits
    if not 0 <= index <= m:
        raise ValueError(f"insert position {index} out of range")
    if m == 0:
        return qubit
    joint = np.kron(qubit.amplitudes, state.amplitudes).reshape((2,) * (m + 1))
    order = list(range(1, m + 1))
    order.insert(index, 0)
    return StateVector(np.transpose(joint, order).reshape(-1))


def measure_in_basis(
    state: StateVector, qubit: int, basis: PauliBasis | str, rng: np.random.Generator
) -> tuple[str, StateVector]:
    """Projective measurement of one qubit in a Pauli basis.

    Returns the observed sign and the post-measurement state of the other
    qubits; when ``qubit`` was the only qubit, the observed eigenstate itself.
    """
    basis = PauliBasis(basis)
    _check_subsystem(state.num_qubits, (qubit,))
    mat = split_subsystem(state, (qubit,))
    plus = eigenstate(basis, "+").amplitudes.conj() @ mat
    p_plus = float(np.vdot(plus, plus).real)
    sign = "+" if rng.random() < p_plus else "-"
    if state.num_qubits == 1:
        return sign, eigenstate(basis, sign)
    vec = plus if sign == "+" else eigenstate(basis, "-").amplitudes.conj() @ mat
    _, residual = _residual(vec)
    assert residual is not None
    return sign, residual


PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def apply_single_qubit(state: StateVector, qubit: int, op: np.ndarray) -> StateVector:
    """Apply a 2x2 unitary to one qubit."""
    m = state.num_qubits
    _check_subsystem(m, (qubit,))
    psi = state.amplitudes.reshape((2,) * m)
    psi = np.moveaxis(np.tensordot(op, psi, axes=([1], [qubit])), 0, qubit)
    return StateVector.from_unnormalized(psi.reshape(-1))


def apply_pauli(state: StateVector, qubit: int, pauli: str) -> StateVector:
    if pauli == "I":
        return state
    return apply_single_qubit(state, qubit, PAULI_MATRICES[pauli])


def identify_eigenstate(
    state: StateVector, candidates: Sequence[Eigenstate] = ALL_EIGENSTATES, atol: float = ZERO_TOL
) -> Eigenstate | None:
    """Name the Pauli eigenstate ``state`` equals up to global phase, if any."""
    if state.num_qubits != 1:
        return None
    for cand in candidates:
        if abs(cand.vector().fidelity(state) - 1.0) < atol:
            return cand
    return None
