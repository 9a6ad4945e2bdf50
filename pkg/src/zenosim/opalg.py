"""Dense complex operator algebra.

Weight operators (unnormalized positive Hermitian matrices whose trace
carries statistical weight), projectors, tensor products and partial
traces. Everything downstream computes on these values.

States are carried *unnormalized*: ``S / Tr S`` is the density matrix,
and normalization happens only inside ratio formulas such as
:func:`expectation_value`. All types are immutable after construction
and all operations are pure functions.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, ValidationError

# Validity tolerance (Hermiticity defect, idempotence defect, eigenvalue
# floor) and the tighter tolerance for conservation laws such as trace
# preservation under partial tracing. Both sit ~100x above double round-off
# at the target dimensions (<= ~2**10).
VALIDITY_ATOL = 1e-10
CONSERVATION_ATOL = 1e-12


def as_complex_matrix(entries, *, name: str = "matrix") -> np.ndarray:
    """Coerce input to an immutable square complex128 matrix."""
    m = np.array(entries, dtype=np.complex128, order="C")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {m.shape}")
    if m.shape[0] < 1:
        raise ValidationError(f"{name} must have dim >= 1")
    if not np.all(np.isfinite(m.view(np.float64))):
        raise ValidationError(f"{name} contains non-finite entries")
    m.setflags(write=False)
    return m


def hermiticity_defect(m: np.ndarray) -> float:
    """Max-norm distance from the Hermitian cone, ``max |M - M^dagger|``."""
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def min_eigenvalue(m: np.ndarray) -> float:
    """Smallest eigenvalue of the Hermitian part ``(M + M^dagger)/2``."""
    herm = 0.5 * (m + m.conj().T)
    return float(np.linalg.eigvalsh(herm)[0])


@dataclass(frozen=True)
class ValidationReport:
    """Numeric defects of a candidate weight operator, never repaired."""

    dim: int
    hermiticity_defect: float
    min_eigenvalue: float
    trace: complex
    passed: bool
    failures: tuple[str, ...]


def validate_weight_operator(m) -> ValidationReport:
    """Report how far ``m`` is from being a valid weight operator.

    Checks Hermiticity, positive semidefiniteness and positivity of the
    trace against the package-wide tolerances. Defects are reported as
    numbers; nothing is silently fixed.
    """
    m = as_complex_matrix(m)
    defect = hermiticity_defect(m)
    lo = min_eigenvalue(m)
    tr = complex(np.trace(m))
    failures = []
    if defect > VALIDITY_ATOL:
        failures.append(f"hermiticity defect {defect:.3e} > {VALIDITY_ATOL:.0e}")
    if lo < -VALIDITY_ATOL:
        failures.append(f"min eigenvalue {lo:.3e} < -{VALIDITY_ATOL:.0e}")
    if abs(tr.imag) > VALIDITY_ATOL * max(1.0, abs(tr.real)):
        failures.append(f"trace has imaginary part {tr.imag:.3e}")
    if not tr.real > 0.0:
        failures.append(f"trace {tr.real:.3e} is not positive")
    return ValidationReport(
        dim=m.shape[0],
        hermiticity_defect=defect,
        min_eigenvalue=lo,
        trace=tr,
        passed=not failures,
        failures=tuple(failures),
    )


@dataclass(frozen=True)
class WeightOperator:
    """Unnormalized positive Hermitian operator; trace = statistical weight."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_complex_matrix(self.matrix, name="weight operator")
        object.__setattr__(self, "matrix", m)
        report = validate_weight_operator(m)
        if not report.passed:
            raise ValidationError(
                "not a valid weight operator: " + "; ".join(report.failures)
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> np.ndarray:
        """The density matrix ``S / Tr S``."""
        return self.matrix / self.trace

    def scaled(self, c: float) -> "WeightOperator":
        """Rescale the statistical weight by ``c > 0``."""
        if not c > 0.0:
            raise ValidationError(f"scale factor must be positive, got {c}")
        return WeightOperator(self.matrix * c)


@dataclass(frozen=True)
class Projector:
    """Hermitian idempotent selecting the patterns compatible with one
    experience; ``label`` identifies that experience."""

    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = as_complex_matrix(self.matrix, name="projector")
        object.__setattr__(self, "matrix", m)
        defect = hermiticity_defect(m)
        if defect > VALIDITY_ATOL:
            raise ValidationError(
                f"projector {self.label!r}: hermiticity defect {defect:.3e}"
            )
        idem = float(np.max(np.abs(m @ m - m)))
        if idem > VALIDITY_ATOL:
            raise ValidationError(
                f"projector {self.label!r}: idempotence defect {idem:.3e}"
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def complement(self) -> "Projector":
        """The projector ``1 - P`` onto the orthogonal subspace."""
        eye = np.eye(self.dim)
        label = f"not({self.label})" if self.label else ""
        return Projector(eye - self.matrix, label=label)


def basis_projector(dim: int, indices, *, label: str = "") -> Projector:
    """Projector onto the span of the given computational basis states."""
    idx = sorted(set(int(i) for i in indices))
    if not idx:
        raise ValidationError("basis projector needs at least one index")
    if idx[0] < 0 or idx[-1] >= dim:
        raise ValidationError(f"basis indices {idx} out of range for dim {dim}")
    m = np.zeros((dim, dim), dtype=np.complex128)
    for i in idx:
        m[i, i] = 1.0
    return Projector(m, label=label or f"basis{tuple(idx)}")


@dataclass(frozen=True)
class FactorSpace:
    """Tensor factorization of the full space, with the kept factors
    designating the subsystem of interest (the brain part)."""

    factor_dims: tuple[int, ...]
    kept_indices: tuple[int, ...] = field(default=())

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims or any(d < 1 for d in dims):
            raise ValidationError(f"factor_dims must be positive, got {dims}")
        kept = tuple(sorted(set(int(k) for k in self.kept_indices)))
        if not kept:
            raise ValidationError("kept_indices must be non-empty")
        if kept[0] < 0 or kept[-1] >= len(dims):
            raise ValidationError(
                f"kept_indices {kept} out of range for {len(dims)} factors"
            )
        object.__setattr__(self, "factor_dims", dims)
        object.__setattr__(self, "kept_indices", kept)

    @property
    def full_dim(self) -> int:
        return int(np.prod(self.factor_dims))

    @property
    def kept_dim(self) -> int:
        return int(np.prod([self.factor_dims[k] for k in self.kept_indices]))


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product with ``a`` as the leading factor."""
    a = as_complex_matrix(a, name="left factor")
    b = as_complex_matrix(b, name="right factor")
    return np.kron(a, b)


def partial_trace(s: WeightOperator, space: FactorSpace) -> WeightOperator:
    """Trace out every factor not in ``space.kept_indices``.

    Returns the reduced weight operator on the kept factors (in ascending
    factor order). Trace is preserved to within ``CONSERVATION_ATOL`` and
    positivity is inherited from the input.
    """
    if s.dim != space.full_dim:
        raise DimensionMismatchError(
            f"factor_dims {space.factor_dims} give dim {space.full_dim}, "
            f"operator has dim {s.dim}"
        )
    dims = space.factor_dims
    n = len(dims)
    kept = space.kept_indices
    t = s.matrix.reshape(dims + dims)

    letters = iter(string.ascii_letters)
    row = [""] * n
    col = [""] * n
    for k in range(n):
        if k in kept:
            row[k] = next(letters)
            col[k] = next(letters)
        else:
            row[k] = col[k] = next(letters)
    out = "".join(row[k] for k in kept) + "".join(col[k] for k in kept)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = space.kept_dim
    return WeightOperator(reduced.reshape(d, d))


def expectation_value(s: WeightOperator, a) -> complex:
    """``Tr(S A) / Tr(S)``: the ensemble average of observable ``a``.

    Real to within the validity tolerance whenever ``a`` is Hermitian,
    and invariant under positive rescaling of ``s``.
    """
    a = as_complex_matrix(a, name="observable")
    if a.shape[0] != s.dim:
        raise DimensionMismatchError(
            f"observable dim {a.shape[0]} != state dim {s.dim}"
        )
    return complex(np.trace(s.matrix @ a) / s.trace)
