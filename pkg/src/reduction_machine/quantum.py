"""Binary meter states and the event-reading pipeline of a pin.

A pin's meter variable is binary: eigenvalue 0 for potential off, 1 for
potential on.  Its statistical state is a 2x2 density matrix.  An event
reading runs the full chain

    decohere -> purify -> evolve_von_neumann -> apply_superselection -> event_read

where the interaction generator v_terminal * m * P_z displaces the pointer
branch tied to meter eigenvalue m, the center-of-mass superselection rule
strips relative phases between branches, and the final reading samples one
eigenvalue from the diagonal weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ContractViolationError, PointerNotSeparatedError

#: Matrix-level tolerance (hermiticity, trace, positivity, normalization).
MATRIX_TOL = 1e-12

#: Tolerance on probability-vector normalization.
WEIGHT_SUM_TOL = 1e-9

#: A state counts as pure (deterministic reading) above this weight.
PURITY_TOL = 1e-12


@dataclass(frozen=True)
class DensityMatrix:
    """2x2 complex density matrix in the meter eigenbasis |0>, |1>.

    Validated on construction: Hermitian, unit trace and positive
    semidefinite, each to MATRIX_TOL.
    """

    m00: complex
    m01: complex
    m10: complex
    m11: complex

    def __post_init__(self):
        m00, m01, m10, m11 = self.m00, self.m01, self.m10, self.m11
        if abs(m00.imag) > MATRIX_TOL or abs(m11.imag) > MATRIX_TOL:
            raise ContractViolationError("density matrix diagonal must be real")
        if abs(m01 - m10.conjugate()) > MATRIX_TOL:
            raise ContractViolationError("density matrix must be Hermitian")
        trace = m00.real + m11.real
        if abs(trace - 1.0) > MATRIX_TOL:
            raise ContractViolationError(f"density matrix trace {trace} != 1")
        # eigenvalues of a Hermitian 2x2 in closed form
        half_gap = 0.5 * (m00.real - m11.real)
        disc = math.sqrt(half_gap * half_gap + abs(m01) ** 2)
        if 0.5 * trace - disc < -MATRIX_TOL:
            raise ContractViolationError(
                f"density matrix not positive semidefinite (lambda_min={0.5 * trace - disc})"
            )

    @classmethod
    def from_weights(cls, p0: float, p1: float) -> "DensityMatrix":
        """Diagonal state diag(p0, p1)."""
        return cls(complex(p0), 0j, 0j, complex(p1))

    @classmethod
    def pure(cls, m: int) -> "DensityMatrix":
        """Eigenstate |m><m| of the meter variable."""
        if m not in (0, 1):
            raise ContractViolationError(f"meter eigenvalue must be 0 or 1, got {m}")
        return cls.from_weights(1.0 - m, float(m))

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> "DensityMatrix":
        mat = np.asarray(mat, dtype=complex)
        if mat.shape != (2, 2):
            raise ContractViolationError(f"expected a 2x2 matrix, got shape {mat.shape}")
        return cls(complex(mat[0, 0]), complex(mat[0, 1]), complex(mat[1, 0]), complex(mat[1, 1]))

    @property
    def weights(self) -> tuple[float, float]:
        """Diagonal weights (p0, p1)."""
        return (self.m00.real, self.m11.real)

    def is_diagonal(self, tol: float = MATRIX_TOL) -> bool:
        return abs(self.m01) <= tol and abs(self.m10) <= tol

    def is_pure_eigenstate(self, tol: float = PURITY_TOL) -> bool:
        """True when one diagonal weight carries (almost) all the mass."""
        return self.is_diagonal() and (self.m00.real >= 1.0 - tol or self.m11.real >= 1.0 - tol)

    def to_matrix(self) -> np.ndarray:
        return np.array([[self.m00, self.m01], [self.m10, self.m11]], dtype=complex)

    def to_json(self) -> list[list[float]]:
        """Row-major [[re, im], ...] encoding used in traces."""
        return [[z.real, z.imag] for z in (self.m00, self.m01, self.m10, self.m11)]


@dataclass(frozen=True)
class PurifiedState:
    """Schmidt-form pure state sum_m a_m |m>|r_m> over meter x reference.

    The fictitious reference system stays internal to this type; only the
    meter-side weights |a_m|^2 are ever observable downstream.
    """

    a0: complex
    a1: complex

    def __post_init__(self):
        norm = abs(self.a0) ** 2 + abs(self.a1) ** 2
        if abs(norm - 1.0) > MATRIX_TOL:
            raise ContractViolationError(f"purified state norm {norm} != 1")

    @property
    def weights(self) -> tuple[float, float]:
        return (abs(self.a0) ** 2, abs(self.a1) ** 2)

    def reduced_density(self) -> DensityMatrix:
        """Partial trace over the reference system (exactly diagonal)."""
        w0, w1 = self.weights
        return DensityMatrix.from_weights(w0, w1)

    def with_branch_phases(self, theta0: float, theta1: float) -> "PurifiedState":
        """Inject relative phases exp(i*theta_m) into the two branches."""
        return PurifiedState(
            self.a0 * complex(math.cos(theta0), math.sin(theta0)),
            self.a1 * complex(math.cos(theta1), math.sin(theta1)),
        )


@dataclass(frozen=True)
class PointerState:
    """Superselected center-of-mass record of the condensate pointer.

    q and p_mom are the classical canonical pair; sigma_q the position
    spread.  shift1 is the accumulated displacement of the branch tied to
    meter eigenvalue 1; the eigenvalue-0 branch never displaces (the
    generator acts proportionally to m), which shift0 pins at zero.
    """

    sigma_q: float
    q: float = 0.0
    p_mom: float = 0.0
    shift0: float = 0.0
    shift1: float = 0.0

    def __post_init__(self):
        if self.sigma_q <= 0:
            raise ContractViolationError(f"sigma_q must be positive, got {self.sigma_q}")
        if self.shift0 != 0.0:
            raise ContractViolationError("branch m=0 must never displace")

    @property
    def shift_ledger(self) -> dict[int, float]:
        """Meter eigenvalue -> accumulated branch displacement [m]."""
        return {0: self.shift0, 1: self.shift1}

    @property
    def separation(self) -> float:
        return abs(self.shift1 - self.shift0)


class EventReading(NamedTuple):
    outcome: int
    rho_after: DensityMatrix
    surprisal_bits: float


# the two post-reading eigenstates, cached (DensityMatrix is immutable and
# event_read sits in the machine's hot path)
_PURE_STATES = (DensityMatrix.from_weights(1.0, 0.0), DensityMatrix.from_weights(0.0, 1.0))


def decohere(rho: DensityMatrix) -> DensityMatrix:
    """Erase off-diagonal coherences, keeping the diagonal. Idempotent."""
    return DensityMatrix.from_weights(rho.m00.real, rho.m11.real)


def purify(rho_diag: DensityMatrix) -> PurifiedState:
    """Embed a diagonal mixed state into a Schmidt-form pure state.

    Coefficients are sqrt(p_m); the partial trace over the reference
    reproduces the input exactly.  Non-diagonal input is a contract
    violation (run decohere first).
    """
    if not rho_diag.is_diagonal():
        raise ContractViolationError("purify requires a diagonal density matrix")
    p0, p1 = rho_diag.weights
    return PurifiedState(complex(math.sqrt(max(p0, 0.0))), complex(math.sqrt(max(p1, 0.0))))


def evolve_von_neumann(
    state: PurifiedState, pointer: PointerState, lam: float, t: float
) -> tuple[PurifiedState, PointerState]:
    """Apply the measurement coupling for duration t.

    The generator lam * m * P_z translates the pointer branch correlated
    with meter eigenvalue m by lam*m*t along the tubule axis.  Meter
    populations are untouched (the coupling commutes with the meter
    variable); t=0 is the identity.
    """
    if t < 0:
        raise ContractViolationError(f"t must be non-negative, got {t}")
    if lam < 0:
        raise ContractViolationError(f"lam must be non-negative, got {lam}")
    return state, replace(pointer, shift1=pointer.shift1 + lam * t)


def apply_superselection(state: PurifiedState, pointer: PointerState) -> DensityMatrix:
    """Project onto the observables commuting with the center-of-mass pair.

    Relative phases between meter branches are physically unobservable
    under the superselection rule; only the diagonal weights survive.
    """
    w0, w1 = state.weights
    return DensityMatrix.from_weights(w0, w1)


def event_read(
    rho_diag: DensityMatrix,
    pointer: PointerState,
    eta: float,
    rng: np.random.Generator,
) -> EventReading:
    """Select one meter eigenstate from the diagonal weights.

    A mixed state may only be read once the pointer branches are separated
    by at least eta*sigma_q; a pure state reads immediately and consumes no
    randomness.  The outcome is sampled with the diagonal weights (one
    uniform draw, outcome 1 iff u < p1), the post-reading state is the
    selected eigenstate, and the surprisal is -log2 of the selected weight.
    """
    if not rho_diag.is_diagonal():
        raise ContractViolationError("event_read requires a diagonal density matrix")
    p0, p1 = rho_diag.weights
    if p1 >= 1.0 - PURITY_TOL:
        return EventReading(1, _PURE_STATES[1], 0.0)
    if p0 >= 1.0 - PURITY_TOL:
        return EventReading(0, _PURE_STATES[0], 0.0)
    threshold = eta * pointer.sigma_q
    if pointer.separation < threshold * (1.0 - 1e-12):
        raise PointerNotSeparatedError(
            f"pointer separation {pointer.separation} below threshold {threshold}; "
            "evolve the coupling longer before reading"
        )
    outcome = 1 if rng.random() < p1 else 0
    p_out = p1 if outcome == 1 else p0
    return EventReading(outcome, _PURE_STATES[outcome], -math.log2(p_out))


def shannon_entropy(weights: Sequence[float]) -> float:
    """Entropy -sum p log2 p in bits, with 0*log(0) = 0.

    Weights must be non-negative and sum to 1 within WEIGHT_SUM_TOL.
    """
    total = 0.0
    for w in weights:
        if w < -PURITY_TOL:
            raise ContractViolationError(f"negative weight {w}")
        total += w
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ContractViolationError(f"weights sum to {total}, expected 1")
    h = 0.0
    for w in weights:
        if w > 0.0:
            h -= w * math.log2(w)
    return h


def binary_entropy(p1: float) -> float:
    """Entropy of a (1-p1, p1) event distribution in bits."""
    if p1 <= 0.0 or p1 >= 1.0:
        return 0.0
    p0 = 1.0 - p1
    return -(p0 * math.log2(p0) + p1 * math.log2(p1))
