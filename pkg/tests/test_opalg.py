import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_partial_trace
from support import random_psd, seeds, small_dims

from zenosim.errors import DimensionMismatchError, ValidationError
from zenosim.opalg import (
    CONSERVATION_ATOL,
    FactorSpace,
    Projector,
    WeightOperator,
    basis_projector,
    expectation_value,
    partial_trace,
    tensor_product,
    validate_weight_operator,
)


def bell_state():
    v = np.zeros(4, dtype=np.complex128)
    v[0] = v[3] = 1.0 / np.sqrt(2.0)
    return np.outer(v, v.conj())


class TestWeightOperator:
    def test_accepts_valid(self):
        s = WeightOperator(np.diag([0.7, 0.3]))
        assert s.dim == 2
        assert s.trace == pytest.approx(1.0)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            WeightOperator([[0, 1], [0, 0]])

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValidationError):
            WeightOperator([[1, 2], [2, 1]])

    def test_rejects_zero_trace(self):
        with pytest.raises(ValidationError):
            WeightOperator(np.zeros((2, 2)))

    def test_rejects_non_square(self):
        with pytest.raises(ValidationError):
            WeightOperator(np.ones((2, 3)))

    def test_matrix_is_immutable(self):
        s = WeightOperator(np.eye(2))
        with pytest.raises(ValueError):
            s.matrix[0, 0] = 5.0

    def test_normalized_has_unit_trace(self):
        s = WeightOperator(np.diag([3.0, 1.0]))
        assert np.trace(s.normalized()).real == pytest.approx(1.0)

    def test_scaled_requires_positive_factor(self):
        s = WeightOperator(np.eye(2))
        assert s.scaled(2.0).trace == pytest.approx(4.0)
        with pytest.raises(ValidationError):
            s.scaled(-1.0)


class TestProjector:
    def test_accepts_basis_projector(self):
        p = basis_projector(3, [0, 2], label="watch")
        assert p.label == "watch"
        assert np.allclose(p.matrix, np.diag([1.0, 0.0, 1.0]))

    def test_complement(self):
        p = basis_projector(2, [0])
        assert np.allclose(p.complement().matrix, np.diag([0.0, 1.0]))

    def test_rejects_non_idempotent(self):
        with pytest.raises(ValidationError):
            Projector(np.diag([0.5, 0.5]))

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            Projector([[0, 1], [0, 0]])

    def test_rank_one_superposition_projector(self):
        v = np.array([1.0, 1.0]) / np.sqrt(2.0)
        p = Projector(np.outer(v, v))
        assert np.allclose(p.matrix @ p.matrix, p.matrix)


class TestTensorProduct:
    def test_identity_times_identity(self):
        assert np.array_equal(tensor_product(np.eye(2), np.eye(2)), np.eye(4))

    def test_trace_multiplicativity_small(self):
        a = np.diag([1.0, 2.0])
        b = np.diag([3.0, 4.0])
        assert np.trace(tensor_product(a, b)).real == pytest.approx(21.0)

    def test_basis_projector_placement(self):
        p0 = np.diag([1.0, 0.0])
        p1 = np.diag([0.0, 1.0])
        out = tensor_product(p0, p1)
        expected = np.zeros((4, 4))
        expected[1, 1] = 1.0
        assert np.array_equal(out, expected)

    @settings(max_examples=100, deadline=None)
    @given(seed=seeds, da=small_dims, db=small_dims)
    def test_trace_multiplicativity_random(self, seed, da, db):
        a = random_psd(da, seed)
        b = random_psd(db, seed + 1)
        lhs = np.trace(tensor_product(a, b))
        rhs = np.trace(a) * np.trace(b)
        assert abs(lhs - rhs) <= 1e-9 * abs(rhs)


class TestPartialTrace:
    def test_bell_marginal_is_maximally_mixed(self):
        s = WeightOperator(bell_state())
        space = FactorSpace(factor_dims=(2, 2), kept_indices=(0,))
        out = partial_trace(s, space)
        assert np.allclose(out.matrix, np.eye(2) / 2.0, atol=1e-12)

    def test_product_state_factorizes(self):
        rho_a = random_psd(2, 11)
        rho_b = random_psd(3, 12)
        s = WeightOperator(tensor_product(rho_a, rho_b))
        out = partial_trace(s, FactorSpace((2, 3), (0,)))
        assert np.allclose(out.matrix, rho_a * np.trace(rho_b), atol=1e-10)

    def test_keep_second_factor(self):
        rho_a = random_psd(2, 13)
        rho_b = random_psd(2, 14)
        s = WeightOperator(tensor_product(rho_a, rho_b))
        out = partial_trace(s, FactorSpace((2, 2), (1,)))
        assert np.allclose(out.matrix, rho_b * np.trace(rho_a), atol=1e-10)

    def test_dimension_mismatch_names_factors(self):
        s = WeightOperator(np.eye(4))
        with pytest.raises(DimensionMismatchError, match="factor_dims"):
            partial_trace(s, FactorSpace((2, 3), (0,)))

    @settings(max_examples=100, deadline=None)
    @given(seed=seeds)
    def test_two_qubit_matches_brute_force_oracle(self, seed):
        m = random_psd(4, seed)
        s = WeightOperator(m)
        out = partial_trace(s, FactorSpace((2, 2), (0,)))
        expected = np.array(brute_partial_trace(m.tolist(), [2, 2], [0]))
        assert np.max(np.abs(out.matrix - expected)) <= 1e-10
        assert abs(out.trace - s.trace) <= CONSERVATION_ATOL * s.trace

    @settings(max_examples=100, deadline=None)
    @given(seed=seeds)
    def test_three_factor_matches_brute_force_oracle(self, seed):
        m = random_psd(8, seed)
        s = WeightOperator(m)
        out = partial_trace(s, FactorSpace((2, 2, 2), (0, 2)))
        expected = np.array(brute_partial_trace(m.tolist(), [2, 2, 2], [0, 2]))
        assert np.max(np.abs(out.matrix - expected)) <= 1e-10

    @settings(max_examples=100, deadline=None)
    @given(seed=seeds)
    def test_preserves_trace_and_positivity(self, seed):
        s = WeightOperator(random_psd(4, seed))
        out = partial_trace(s, FactorSpace((2, 2), (1,)))
        assert abs(out.trace - s.trace) <= CONSERVATION_ATOL * s.trace
        assert np.min(np.linalg.eigvalsh(out.matrix)) >= -1e-10

    @settings(max_examples=100, deadline=None)
    @given(seed=seeds, alpha=st.floats(0.01, 5.0), beta=st.floats(0.01, 5.0))
    def test_linearity(self, seed, alpha, beta):
        m1 = random_psd(4, seed)
        m2 = random_psd(4, seed + 1)
        space = FactorSpace((2, 2), (0,))
        combined = partial_trace(WeightOperator(alpha * m1 + beta * m2), space)
        separate = alpha * partial_trace(WeightOperator(m1), space).matrix + (
            beta * partial_trace(WeightOperator(m2), space).matrix
        )
        assert np.max(np.abs(combined.matrix - separate)) <= 1e-12 * (alpha + beta) * 10


class TestFactorSpace:
    def test_rejects_empty_kept_indices(self):
        with pytest.raises(ValidationError):
            FactorSpace((2, 2), ())

    def test_rejects_out_of_range_index(self):
        with pytest.raises(ValidationError):
            FactorSpace((2, 2), (2,))

    def test_dims(self):
        space = FactorSpace((2, 3, 2), (0, 2))
        assert space.full_dim == 12
        assert space.kept_dim == 4


class TestExpectationValue:
    def test_symmetric_observable_on_identity(self):
        s = WeightOperator(np.eye(2))
        assert expectation_value(s, np.diag([1.0, -1.0])) == pytest.approx(0.0)

    def test_diagonal_readout(self):
        s = WeightOperator(np.diag([0.7, 0.3]))
        val = expectation_value(s, np.diag([1.0, 0.0]))
        assert val.real == pytest.approx(0.7)
        assert abs(val.imag) <= 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            expectation_value(WeightOperator(np.eye(2)), np.eye(3))

    @settings(max_examples=100, deadline=None)
    @given(seed=seeds, c=st.floats(1e-3, 1e3))
    def test_invariant_under_positive_scaling(self, seed, c):
        m = random_psd(3, seed)
        a = random_psd(3, seed + 1)
        scaled = expectation_value(WeightOperator(c * m), a)
        plain = expectation_value(WeightOperator(m), a)
        # the ratio definition cancels c up to rounding in the two sums
        assert abs(scaled - plain) <= 1e-12 * max(1.0, abs(plain))

    def test_three_state_mixture_equals_weighted_average(self):
        rng = np.random.default_rng(99)
        states = []
        for k in range(3):
            m = random_psd(4, 100 + k)
            states.append(m / np.trace(m).real)
        probs = rng.dirichlet(np.ones(3))
        a = random_psd(4, 200)
        mixture = WeightOperator(sum(p * m for p, m in zip(probs, states)))
        lhs = expectation_value(mixture, a)
        rhs = sum(
            p * expectation_value(WeightOperator(m), a) for p, m in zip(probs, states)
        )
        assert abs(lhs - rhs) <= 1e-10

    @settings(max_examples=100, deadline=None)
    @given(seed=seeds)
    def test_mixture_equivalence_random(self, seed):
        # ensemble average over unit-trace components = expectation of the sum
        states = [random_psd(4, seed + k) for k in range(3)]
        states = [m / np.trace(m).real for m in states]
        probs = np.random.default_rng(seed).dirichlet(np.ones(3))
        a = random_psd(4, seed + 7)
        mixture = WeightOperator(sum(p * m for p, m in zip(probs, states)))
        lhs = expectation_value(mixture, a)
        rhs = sum(
            p * expectation_value(WeightOperator(m), a) for p, m in zip(probs, states)
        )
        assert abs(lhs - rhs) <= 1e-10


class TestValidateWeightOperator:
    def test_identity_passes(self):
        rep = validate_weight_operator(np.eye(4))
        assert rep.passed
        assert rep.min_eigenvalue == pytest.approx(1.0)
        assert rep.trace == pytest.approx(4.0)

    def test_non_hermitian_fails(self):
        rep = validate_weight_operator([[0, 1], [0, 0]])
        assert not rep.passed
        assert rep.hermiticity_defect > 1e-10
        assert any("hermit" in f.lower() for f in rep.failures)

    def test_negative_eigenvalue_fails(self):
        rep = validate_weight_operator([[1, 2], [2, 1]])
        assert not rep.passed
        assert rep.min_eigenvalue == pytest.approx(-1.0)

    def test_report_never_repairs(self):
        m = np.array([[1.0, 2.0], [2.0, 1.0]])
        validate_weight_operator(m)
        assert np.array_equal(m, [[1.0, 2.0], [2.0, 1.0]])
