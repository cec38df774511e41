"""GHZ basis, product-state decompositions and the two analyzer models.

A label ``a_0 ... a_{m-1}`` names

    (|0 a_0 ... a_{m-2}> + (-1)^{a_{m-1}} |1 ~a_0 ... ~a_{m-2}>) / sqrt(2)

so for three photons ``"110"`` is ``(|011> + |100>)/sqrt(2)``. Labels are plain
bit strings; click patterns likewise.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .quantum import (
    ZERO_TOL,
    Eigenstate,
    PauliBasis,
    StateVector,
    bell_phi_minus,
    identify_eigenstate,
    project,
    split_subsystem,
    tensor,
)

MIN_PHOTONS = 2
MAX_PHOTONS = 14

GhzLabel = str
ClickPattern = str


def _check_m(m: int) -> None:
    if not MIN_PHOTONS <= m <= MAX_PHOTONS:
        raise ValueError(f"photon count must be in [{MIN_PHOTONS}, {MAX_PHOTONS}], got {m}")


def label_bits(index: int, m: int) -> GhzLabel:
    return format(index, f"0{m}b")


def all_labels(m: int) -> list[GhzLabel]:
    return [label_bits(i, m) for i in range(2**m)]


def _ghz_support(label: GhzLabel) -> tuple[int, int, float]:
    """(index of |0 prefix>, index of |1 ~prefix>, relative sign)."""
    m = len(label)
    prefix = int(label[:-1], 2) if m > 1 else 0
    half = 2 ** (m - 1)
    return prefix, half + (half - 1 - prefix), -1.0 if label[-1] == "1" else 1.0


@functools.lru_cache(maxsize=None)
def ghz_matrix(m: int) -> np.ndarray:
    """Rows are the GHZ states of ``m`` photons, ordered by label value."""
    _check_m(m)
    dim = 2**m
    mat = np.zeros((dim, dim), dtype=complex)
    amp = 1.0 / math.sqrt(2.0)
    for row in range(dim):
        lo, hi, sign = _ghz_support(label_bits(row, m))
        mat[row, lo] = amp
        mat[row, hi] = sign * amp
    mat.flags.writeable = False
    return mat


def ghz_state(label: GhzLabel) -> StateVector:
    m = len(label)
    return StateVector(ghz_matrix(m)[int(label, 2)])


def ghz_basis(m: int) -> list[StateVector]:
    return [StateVector(row) for row in ghz_matrix(m)]


def identifiable_labels(m: int) -> tuple[GhzLabel, GhzLabel]:
    """The two labels a linear-optics analyzer can herald."""
    return "0" * m, "0" * (m - 1) + "1"


def is_identifiable(label: GhzLabel) -> bool:
    return len(label) >= MIN_PHOTONS and set(label[:-1]) == {"0"}


@dataclass(frozen=True)
class Decomposition:
    m: int
    entries: dict[GhzLabel, complex]

    def amplitude(self, label: GhzLabel) -> complex:
        return self.entries.get(label, 0j)

    def support(self, tol: float = ZERO_TOL) -> set[GhzLabel]:
        return {lab for lab, amp in self.entries.items() if abs(amp) > tol}

    def probabilities(self) -> dict[GhzLabel, float]:
        return {lab: abs(amp) ** 2 for lab, amp in self.entries.items()}

    def reconstruct(self) -> StateVector:
        coeffs = np.array([self.amplitude(lab) for lab in all_labels(self.m)], dtype=complex)
        return StateVector.from_unnormalized(coeffs @ ghz_matrix(self.m))


def decompose_in_ghz_basis(state: StateVector) -> Decomposition:
    m = state.num_qubits
    _check_m(m)
    coeffs = ghz_matrix(m).conj() @ state.amplitudes
    return Decomposition(m, {label_bits(i, m): complex(c) for i, c in enumerate(coeffs)})


@dataclass(frozen=True)
class ProductStateSpec:
    """One X- or Y-basis eigenstate per photon, in analyzer order."""

    photons: tuple[Eigenstate, ...]

    def __post_init__(self) -> None:
        photons = tuple(self.photons)
        if not photons:
            raise ValueError("a product state needs at least one photon")
        for p in photons:
            if p.basis is PauliBasis.Z:
                raise ValueError(f"photon states are restricted to X/Y eigenstates, got {p}")
        object.__setattr__(self, "photons", photons)

    @classmethod
    def parse(cls, tokens: str | Iterable[str]) -> "ProductStateSpec":
        if isinstance(tokens, str):
            tokens = tokens.replace(",", " ").split()
        return cls(tuple(Eigenstate.parse(t) for t in tokens))

    @property
    def m(self) -> int:
        return len(self.photons)

    @property
    def alpha(self) -> int:
        """Number of photons prepared in the Y basis."""
        return sum(p.basis is PauliBasis.Y for p in self.photons)

    @property
    def beta(self) -> int:
        """Number of photons prepared with the minus sign."""
        return sum(p.sign == "-" for p in self.photons)

    def state(self) -> StateVector:
        return tensor([p.vector() for p in self.photons])

    def __str__(self) -> str:
        return " ".join(str(p) for p in self.photons)


def all_product_specs(m: int) -> Iterable[ProductStateSpec]:
    """Every X/Y eigenstate assignment of ``m`` photons (4^m of them)."""
    from .quantum import XY_EIGENSTATES

    for combo in itertools.product(XY_EIGENSTATES, repeat=m):
        yield ProductStateSpec(combo)


def allowed_label_set(spec: ProductStateSpec) -> set[GhzLabel]:
    _check_m(spec.m)
    return decompose_in_ghz_basis(spec.state()).support()


@functools.lru_cache(maxsize=4096)
def allowed_label_set_cached(photons: tuple[Eigenstate, ...]) -> frozenset[GhzLabel]:
    return frozenset(allowed_label_set(ProductStateSpec(photons)))


# --- product-state bookkeeping in the computational basis -------------------


@dataclass(frozen=True)
class ProductTerm:
    """One computational-basis component of a product state.

    ``gamma`` counts Y-basis photons sitting in |1>, ``eta`` counts
    minus-sign photons sitting in |1>.
    """

    bits: str
    gamma: int
    eta: int


def product_terms(spec: ProductStateSpec) -> list[ProductTerm]:
    ys = [p.basis is PauliBasis.Y for p in spec.photons]
    minus = [p.sign == "-" for p in spec.photons]
    terms = []
    for bits in itertools.product("01", repeat=spec.m):
        ones = [b == "1" for b in bits]
        terms.append(
            ProductTerm(
                "".join(bits),
                sum(o and y for o, y in zip(ones, ys)),
                sum(o and n for o, n in zip(ones, minus)),
            )
        )
    return terms


def _complement(bits: str) -> str:
    return bits.translate(str.maketrans("01", "10"))


def expand_product_terms(spec: ProductStateSpec) -> StateVector:
    """sum_j i^gamma_j (-1)^eta_j |w_j> / sqrt(N)."""
    n = 2**spec.m
    amps = np.zeros(n, dtype=complex)
    for t in product_terms(spec):
        amps[int(t.bits, 2)] += (1j**t.gamma) * (-1) ** t.eta
    return StateVector(amps / math.sqrt(n))


def expand_complement_terms(spec: ProductStateSpec) -> StateVector:
    """The same state indexed by complemented strings:
    sum_j i^(alpha-gamma_j) (-1)^(beta-eta_j) |~w_j> / sqrt(N)."""
    n = 2**spec.m
    a, b = spec.alpha, spec.beta
    amps = np.zeros(n, dtype=complex)
    for t in product_terms(spec):
        amps[int(_complement(t.bits), 2)] += (1j ** (a - t.gamma)) * (-1) ** (b - t.eta)
    return StateVector(amps / math.sqrt(n))


def expand_symmetrized_terms(spec: ProductStateSpec) -> StateVector:
    """Average of the two forms above, grouped pairwise:
    sum_j (-1)^eta_j i^gamma_j [|w_j> + i^(alpha-2 gamma_j) (-1)^beta |~w_j>] / (2 sqrt(N)).

    Every string appears once as ``w_j`` and once as a complement, so the
    normalization over all N terms is 1/(2 sqrt(N)).
    """
    n = 2**spec.m
    a, b = spec.alpha, spec.beta
    amps = np.zeros(n, dtype=complex)
    for t in product_terms(spec):
        c = (-1) ** t.eta * (1j**t.gamma)
        amps[int(t.bits, 2)] += c
        amps[int(_complement(t.bits), 2)] += c * (1j ** (a - 2 * t.gamma)) * (-1) ** b
    return StateVector(amps / (2 * math.sqrt(n)))


def multiparty_product_state(spec: ProductStateSpec) -> StateVector:
    _check_m(spec.m)
    return spec.state()


# --- analyzers ---------------------------------------------------------------


@dataclass(frozen=True)
class AnalyzerOutcome:
    """A heralded GHZ label with its detector clicks, or a failed analysis.

    ``residual`` carries the post-measurement state of qubits outside the
    analyzed subsystem; it is simulation-internal and excluded from equality.
    """

    success: bool
    label: GhzLabel | None = None
    clicks: ClickPattern | None = None
    residual: StateVector | None = field(default=None, compare=False, repr=False)

    @classmethod
    def failure(cls) -> "AnalyzerOutcome":
        return cls(False)


def click_patterns(label: GhzLabel) -> list[ClickPattern]:
    """Detector patterns that herald an identifiable ``label``: all strings
    whose parity equals the label's last bit."""
    m = len(label)
    parity = int(label[-1])
    return [p for p in all_labels(m) if p.count("1") % 2 == parity]


def _draw_clicks(m: int, last_bit: int, rng: np.random.Generator) -> ClickPattern:
    head = label_bits(int(rng.integers(2 ** (m - 1))), m - 1)
    return head + str((head.count("1") + last_bit) % 2)


def _subsystem(state: StateVector, subsystem: Sequence[int] | None) -> tuple[int, ...]:
    return tuple(range(state.num_qubits)) if subsystem is None else tuple(subsystem)


def _normalized(vec: np.ndarray) -> StateVector | None:
    if vec.shape[0] == 1:
        return None
    return StateVector.from_unnormalized(vec)


def linear_optics_success_probability(state: StateVector, subsystem: Sequence[int] | None = None) -> float:
    sub = _subsystem(state, subsystem)
    m = len(sub)
    _check_m(m)
    rows = ghz_matrix(m)[:2].conj() @ split_subsystem(state, sub)
    return float(np.sum(np.abs(rows) ** 2))


def analyze_linear_optics(
    state: StateVector, rng: np.random.Generator, subsystem: Sequence[int] | None = None
) -> AnalyzerOutcome:
    """Partial GHZ analysis built from beam splitters and detectors.

    Only the all-zero-prefix pair of labels can be heralded; everything else
    is a failure. ``subsystem`` selects the analyzed photons (default: all).
    """
    sub = _subsystem(state, subsystem)
    m = len(sub)
    _check_m(m)
    # labels "0...00" and "0...01" are rows 0 and 1 of the GHZ matrix
    rows = ghz_matrix(m)[:2].conj() @ split_subsystem(state, sub)
    p0 = float(np.vdot(rows[0], rows[0]).real)
    p1 = float(np.vdot(rows[1], rows[1]).real)
    u = rng.random()
    if u < p0:
        last = 0
    elif u < p0 + p1:
        last = 1
    else:
        return AnalyzerOutcome.failure()
    label = "0" * (m - 1) + str(last)
    clicks = _draw_clicks(m, last, rng)
    return AnalyzerOutcome(True, label, clicks, _normalized(rows[last]))


def analyze_ideal(
    state: StateVector, rng: np.random.Generator, subsystem: Sequence[int] | None = None
) -> AnalyzerOutcome:
    """Complete projective measurement in the GHZ basis; never fails."""
    sub = _subsystem(state, subsystem)
    m = len(sub)
    _check_m(m)
    coeffs = ghz_matrix(m).conj() @ split_subsystem(state, sub)
    probs = np.sum(np.abs(coeffs) ** 2, axis=1)
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    idx = min(idx, len(probs) - 1)
    return AnalyzerOutcome(True, label_bits(idx, m), None, _normalized(coeffs[idx]))


# --- collapse of the sender's retained photon -------------------------------


class NonIdentifiableLabel(ValueError):
    pass


class TableMismatch(AssertionError):
    pass


def collapse_state(label: GhzLabel, receivers: Sequence[Eigenstate]) -> StateVector:
    """State of the sender's retained photon K after (K', receivers...) is
    projected onto ``label``, starting from the pair state on (K, K')."""
    n = len(receivers)
    if len(label) != n + 1:
        raise ValueError(f"label {label!r} does not match {n} receivers")
    joint = tensor([bell_phi_minus(), *(r.vector() for r in receivers)])
    prob, residual = project(joint, tuple(range(1, n + 2)), ghz_state(label))
    if residual is None:
        raise ValueError(f"label {label!r} has zero probability for receivers {receivers}")
    return residual


def reference_collapse(label: GhzLabel, receivers: Sequence[Eigenstate]) -> Eigenstate:
    """Eigenstate of the retained photon for any heralded label."""
    found = identify_eigenstate(collapse_state(label, receivers))
    if found is None:
        raise ValueError(f"retained photon is not a Pauli eigenstate for {label!r}")
    return found


# Rows: alpha - 2*gamma_j; columns: Case 1..4. Label ending in 0, then in 1.
_TABLE_LAST0 = {
    0: {1: "-x", 2: "+x"},
    2: {1: "+x", 2: "-x"},
    -1: {3: "-y", 4: "+y"},
    1: {3: "+y", 4: "-y"},
}
_TABLE_LAST1 = {
    0: {1: "+x", 2: "-x"},
    2: {1: "-x", 2: "+x"},
    -1: {3: "+y", 4: "-y"},
    1: {3: "-y", 4: "+y"},
}


def table_case(alpha: int, beta: int) -> int:
    if alpha % 2 == 0:
        return 1 if beta % 2 == 0 else 2
    return 3 if beta % 2 == 0 else 4


def collapse_by_table(label: GhzLabel, receivers: Sequence[Eigenstate]) -> Eigenstate:
    """Three-party lookup keyed by the Y-count and minus-count of the two
    receivers.

    The row is read at the |00> component of the receivers' state
    (gamma_j = 0, so row = alpha). The complementary |11> component sits at
    row -alpha and is not used for the lookup.
    """
    if len(receivers) != 2:
        raise ValueError("the lookup tables cover exactly two receivers")
    if not is_identifiable(label):
        raise NonIdentifiableLabel(label)
    spec = ProductStateSpec(tuple(receivers))
    a, b = spec.alpha, spec.beta
    gamma_ref = 0
    table = _TABLE_LAST0 if label[-1] == "0" else _TABLE_LAST1
    return Eigenstate.parse(table[a - 2 * gamma_ref][table_case(a, b)])


def collapse_by_phase_rule(label: GhzLabel, receivers: Sequence[Eigenstate]) -> Eigenstate:
    """Closed form for any number of receivers and an identifiable label.

    The retained photon ends in |0> - (-1)^(a+beta) i^(-alpha) |1>, with ``a``
    the label's last bit.
    """
    if not is_identifiable(label):
        raise NonIdentifiableLabel(label)
    spec = ProductStateSpec(tuple(receivers))
    a, b = spec.alpha, spec.beta
    rel = -((-1) ** (int(label[-1]) + b)) * (1j ** (-a))
    basis = PauliBasis.X if a % 2 == 0 else PauliBasis.Y
    unit = 1 if basis is PauliBasis.X else 1j
    sign = "+" if abs(rel - unit) < ZERO_TOL else "-"
    return Eigenstate(basis, sign)


def predict_collapse(
    label: GhzLabel, receivers: Sequence[Eigenstate], *, check_tables: bool = False
) -> Eigenstate:
    """Eigenstate the retained photon collapses to for a heralded,
    linear-optics-identifiable ``label``.

    The projection is authoritative. With ``check_tables`` the lookup rules
    are evaluated too and a disagreement raises ``TableMismatch``.
    """
    if not is_identifiable(label):
        raise NonIdentifiableLabel(f"{label!r} cannot be heralded by a linear-optics analyzer")
    for r in receivers:
        if r.basis is PauliBasis.Z:
            raise ValueError(f"receiver states are restricted to X/Y eigenstates, got {r}")
    result = reference_collapse(label, receivers)
    if check_tables:
        rules = [collapse_by_phase_rule(label, receivers)]
        if len(receivers) == 2:
            rules.append(collapse_by_table(label, receivers))
        for rule in rules:
            if rule != result:
                raise TableMismatch(f"{label} {[str(r) for r in receivers]}: rule {rule}, projection {result}")
    return result
