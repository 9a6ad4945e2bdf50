"""State propagation between events.

Unitary steps generated by a Hamiltonian, exponential dephasing in a
configurable pointer basis (the minimal model of environmental
decoherence), and the synaptic-release branch generator that turns n
independent release/no-release bifurcations into a 2**n-branch mixture.

Simulation units use hbar = 1; durations and rates are dimensionless.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DimensionMismatchError, ValidationError
from .opalg import (
    VALIDITY_ATOL,
    WeightOperator,
    as_complex_matrix,
    hermiticity_defect,
)

# exp(-x) underflows to subnormal around x ~ 708; treat anything past 700
# as fully decohered.
_FULL_DECOHERENCE_EXPONENT = 700.0

# Dense materialization cap for branch mixtures: 2**10 matches the dense
# operator-algebra target; beyond it the diagonal representation stands in.
MAX_DENSE_BRANCH_TERMINALS = 10

MAX_BRANCH_TERMINALS = 20


@dataclass(frozen=True)
class HamiltonianSpec:
    """Hermitian generator of unitary steps exp(-iHd), hbar = 1 units."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_complex_matrix(self.matrix, name="hamiltonian")
        object.__setattr__(self, "matrix", m)
        defect = hermiticity_defect(m)
        if defect > VALIDITY_ATOL:
            raise ValidationError(
                f"hamiltonian hermiticity defect {defect:.3e} > {VALIDITY_ATOL:.0e}"
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def rabi_hamiltonian(omega: float) -> HamiltonianSpec:
    """Two-level coupling (omega/2) * sigma_x."""
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
    return HamiltonianSpec(0.5 * float(omega) * sx)


def random_hermitian(dim: int, seed: int) -> HamiltonianSpec:
    """Seeded random Hermitian matrix with entries of order one."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return HamiltonianSpec(0.5 * (a + a.conj().T))


def propagator(h: HamiltonianSpec, d: float) -> np.ndarray:
    """``exp(-iHd)`` via Hermitian eigendecomposition.

    Exact to round-off at these dimensions and unitary by construction,
    unlike a truncated series.
    """
    if d < 0.0:
        raise ValidationError(f"duration must be >= 0, got {d}")
    evals, vecs = np.linalg.eigh(h.matrix)
    phases = np.exp(-1j * evals * d)
    return (vecs * phases) @ vecs.conj().T


def evolve_unitary(s: WeightOperator, h: HamiltonianSpec, d: float) -> WeightOperator:
    """Conjugate the state by the propagator: ``U S U^dagger``."""
    if h.dim != s.dim:
        raise DimensionMismatchError(f"hamiltonian dim {h.dim} != state dim {s.dim}")
    u = propagator(h, d)
    return WeightOperator(u @ s.matrix @ u.conj().T)


@dataclass(frozen=True)
class DephasingChannel:
    """Exponential decay of coherences in a fixed pointer basis.

    ``pointer_basis`` columns are the decohered basis vectors; ``rate`` is
    the inverse decoherence time (1/tau_dec) in simulation units.
    """

    pointer_basis: np.ndarray
    rate: float

    def __post_init__(self):
        u = as_complex_matrix(self.pointer_basis, name="pointer basis")
        object.__setattr__(self, "pointer_basis", u)
        defect = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
        if defect > VALIDITY_ATOL:
            raise ValidationError(f"pointer basis unitarity defect {defect:.3e}")
        if not self.rate >= 0.0:
            raise ValidationError(f"dephasing rate must be >= 0, got {self.rate}")

    @property
    def dim(self) -> int:
        return self.pointer_basis.shape[0]


def computational_dephasing(dim: int, rate: float) -> DephasingChannel:
    """Dephasing whose pointer basis is the computational basis."""
    return DephasingChannel(np.eye(dim, dtype=np.complex128), rate)


def coherence_multiplier(ch: DephasingChannel, d: float) -> float:
    """Off-diagonal damping factor over a duration ``d``."""
    x = ch.rate * d
    return 0.0 if x > _FULL_DECOHERENCE_EXPONENT else float(np.exp(-x))


def _dephase_raw(m: np.ndarray, ch: DephasingChannel, d: float) -> np.ndarray:
    f = coherence_multiplier(ch, d)
    if f == 1.0:
        return m
    u = ch.pointer_basis
    pointer = u.conj().T @ m @ u
    damp = np.full(pointer.shape, f)
    np.fill_diagonal(damp, 1.0)
    return u @ (pointer * damp) @ u.conj().T


def apply_dephasing(s: WeightOperator, ch: DephasingChannel, d: float) -> WeightOperator:
    """Damp pointer-basis coherences by ``exp(-rate*d)``.

    Diagonal entries in the pointer basis, and hence the trace, are
    untouched; positivity is preserved (the damping mask is a positive
    semidefinite correlation matrix, so this is a Schur-product channel).
    """
    if d < 0.0:
        raise ValidationError(f"duration must be >= 0, got {d}")
    if ch.dim != s.dim:
        raise DimensionMismatchError(f"channel dim {ch.dim} != state dim {s.dim}")
    return WeightOperator(_dephase_raw(s.matrix, ch, d))


@dataclass(frozen=True)
class BranchConfig:
    """Per-terminal release bifurcation: n terminals, each releasing
    independently with the same probability."""

    terminal_count: int
    release_probability: float

    def __post_init__(self):
        n = int(self.terminal_count)
        if n < 1:
            raise ValidationError(f"terminal_count must be >= 1, got {n}")
        if n > MAX_BRANCH_TERMINALS:
            raise CapacityError(
                f"terminal_count {n} exceeds the 2**{MAX_BRANCH_TERMINALS} branch cap"
            )
        p = float(self.release_probability)
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"release_probability must be in [0, 1], got {p}")
        object.__setattr__(self, "terminal_count", n)
        object.__setattr__(self, "release_probability", p)


@dataclass(frozen=True)
class BranchMixture:
    """Diagonal weight operator over release patterns, stored as its diagonal.

    Basis state ``i`` encodes the release pattern in binary: bit ``t`` set
    means terminal ``t`` released. The operator is strictly diagonal (a
    post-decoherence mixture), so only the 2**n weights are kept; a dense
    matrix at n = 16 would already need ~69 GB.
    """

    weights: np.ndarray
    terminal_count: int

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.weights.size

    @property
    def trace(self) -> float:
        return float(self.weights.sum())

    def pattern_weight(self, pattern: int) -> float:
        return float(self.weights[pattern])

    def hamming_class_weights(self) -> np.ndarray:
        """Total weight per number-of-releases class, length n + 1."""
        k = np.bitwise_count(np.arange(self.dim, dtype=np.uint32))
        return np.bincount(k, weights=self.weights, minlength=self.terminal_count + 1)

    def to_weight_operator(self) -> WeightOperator:
        """Materialize the dense diagonal operator (small n only)."""
        if self.terminal_count > MAX_DENSE_BRANCH_TERMINALS:
            raise CapacityError(
                f"dense materialization capped at n <= {MAX_DENSE_BRANCH_TERMINALS}, "
                f"got n = {self.terminal_count}"
            )
        return WeightOperator(np.diag(self.weights.astype(np.complex128)))


def release_branch_mixture(cfg: BranchConfig) -> BranchMixture:
    """Mixture over all 2**n release patterns.

    A pattern with k releases carries weight p**k * (1-p)**(n-k); the
    total trace is 1 and every cross-pattern coherence is zero.
    """
    n = cfg.terminal_count
    p = cfg.release_probability
    k = np.bitwise_count(np.arange(2**n, dtype=np.uint32)).astype(np.float64)
    weights = p**k * (1.0 - p) ** (n - k)
    return BranchMixture(weights=weights, terminal_count=n)
