"""Shared random-instance builders for the test suite.

Instances are derived deterministically from integer seeds so hypothesis
can own the randomness (and shrink failures) without us fighting float
strategies.
"""

import numpy as np
from hypothesis import strategies as st

seeds = st.integers(min_value=0, max_value=2**32 - 1)
small_dims = st.sampled_from([2, 3, 4])


def random_psd(dim, seed, floor=1e-6):
    """Positive semidefinite complex matrix with trace O(dim)."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return a @ a.conj().T + floor * np.eye(dim)


def random_hermitian_matrix(dim, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2.0


def random_basis_indices(dim, seed):
    """Non-empty proper subset of basis indices (so 1-P is nonzero too)."""
    rng = np.random.default_rng(seed)
    size = int(rng.integers(1, dim))
    return sorted(rng.choice(dim, size=size, replace=False).tolist())
