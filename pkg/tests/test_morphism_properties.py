"""Randomized property suite for the averaged lift M = lift_mn.

Four algebraic properties, 200 seeded random instances each:
contraction, the 1/N commutator identity, the *-homomorphism relation,
and unitality.  All tolerances 1e-10.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from picklab.sector import enumerate_basis, lift_mn

N_INSTANCES = 200
TOL = 1e-10

_CASES = [(2, 2), (2, 3), (3, 2), (3, 3), (4, 3), (2, 4), (3, 4), (5, 2)]
_BASES = {nd: enumerate_basis(*nd) for nd in _CASES}


def _instance(seed):
    rng = np.random.default_rng(seed)
    N, d = _CASES[seed % len(_CASES)]
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    B = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return _BASES[(N, d)], A, B


@pytest.mark.parametrize("seed", range(N_INSTANCES))
def test_contraction(seed):
    basis, A, _ = _instance(seed)
    H = A + A.conj().T
    assert np.linalg.norm(lift_mn(H, basis), 2) <= np.linalg.norm(H, 2) + TOL


@pytest.mark.parametrize("seed", range(N_INSTANCES))
def test_commutator_identity(seed):
    basis, A, B = _instance(seed)
    MA, MB = lift_mn(A, basis), lift_mn(B, basis)
    lhs = MA @ MB - MB @ MA
    rhs = lift_mn(A @ B - B @ A, basis) / basis.N
    scale = max(np.abs(rhs).max(), 1.0)
    assert np.abs(lhs - rhs).max() <= TOL * scale


@pytest.mark.parametrize("seed", range(N_INSTANCES))
def test_star_homomorphism(seed):
    basis, A, _ = _instance(seed)
    assert_allclose(lift_mn(A.conj().T, basis), lift_mn(A, basis).conj().T,
                    atol=TOL)


@pytest.mark.parametrize("seed", range(N_INSTANCES))
def test_unitality(seed):
    basis, _, _ = _instance(seed)
    assert_allclose(lift_mn(np.eye(basis.d), basis), np.eye(basis.size),
                    atol=TOL)
