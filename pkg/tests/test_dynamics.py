import numpy as np
import pytest
from numpy.testing import assert_allclose

from picklab.dynamics import (IntegratorInstability, NBodyPropagator,
                              build_hamiltonian, hartree_energy,
                              hartree_integrate, hartree_rhs)
from picklab.geometry import GridGeometry, grid_inner, grid_norm, kinetic_matrix, normalize
from picklab.potentials import build_potential
from picklab.sector import enumerate_basis, lift_mn, lift_one_body, product_state


@pytest.fixture
def geom():
    return GridGeometry(d=6, L=2 * np.pi)


def gaussian_state(geom):
    delta = np.minimum(geom.x, geom.L - geom.x)
    return normalize(np.exp(-(delta**2)).astype(complex), geom)


def test_free_hamiltonian_spectrum(geom):
    zero = build_potential("gaussian", {"g": 0.0}, geom)
    single = np.linalg.eigvalsh(kinetic_matrix(geom))
    # N = 1: single-particle kinetic spectrum
    b1 = enumerate_basis(1, geom.d)
    w1 = np.linalg.eigvalsh(build_hamiltonian(zero, b1, geom))
    assert_allclose(np.sort(w1), np.sort(single), atol=1e-11)
    # N = 2: sums of pairs of single-particle eigenvalues (bosonic multiset)
    b2 = enumerate_basis(2, geom.d)
    w2 = np.sort(np.linalg.eigvalsh(build_hamiltonian(zero, b2, geom)))
    sums = np.sort([single[i] + single[j]
                    for i in range(geom.d) for j in range(i, geom.d)])
    assert_allclose(w2, sums, atol=1e-10)


def test_constant_potential_shifts_spectrum(geom):
    c = 0.8
    const = build_potential("custom_table", {"values": np.full(geom.d, c)}, geom)
    zero = build_potential("gaussian", {"g": 0.0}, geom)
    b = enumerate_basis(3, geom.d)
    w_free = np.sort(np.linalg.eigvalsh(build_hamiltonian(zero, b, geom)))
    w_shift = np.sort(np.linalg.eigvalsh(build_hamiltonian(const, b, geom)))
    assert_allclose(w_shift, w_free + c * (3 - 1) / 2, atol=1e-10)


def test_propagator_basics(geom):
    v = build_potential("soft_coulomb", {"g": 0.5, "eps": 0.5}, geom)
    b = enumerate_basis(2, geom.d)
    prop = NBodyPropagator(H=build_hamiltonian(v, b, geom), hbar=1.0)
    rng = np.random.default_rng(0)
    Psi = rng.normal(size=b.size) + 1j * rng.normal(size=b.size)
    Psi /= np.linalg.norm(Psi)
    assert_allclose(prop.propagate(Psi, 0.0), Psi, atol=1e-12)
    # group law
    one_shot = prop.propagate(Psi, 0.7)
    two_step = prop.propagate(prop.propagate(Psi, 0.3), 0.4)
    assert_allclose(one_shot, two_step, atol=1e-10)
    # eigenvector picks up a pure phase
    k = 2
    vec = prop.eigenvectors[:, k]
    out = prop.propagate(vec, 0.5)
    assert_allclose(out, np.exp(-1j * prop.eigenvalues[k] * 0.5) * vec, atol=1e-11)
    # norm preserved
    assert abs(np.linalg.norm(prop.propagate(Psi, 2.0)) - 1.0) < 1e-10


def test_propagator_taylor_oracle(geom):
    v = build_potential("gaussian", {"g": 0.4}, geom)
    b = enumerate_basis(2, geom.d)
    H = build_hamiltonian(v, b, geom)
    prop = NBodyPropagator(H=H, hbar=1.0)
    t = 1e-3
    U = prop.unitary(t)
    taylor = np.eye(len(H), dtype=complex)
    term = np.eye(len(H), dtype=complex)
    for k in range(1, 5):
        term = term @ (-1j * t * H) / k
        taylor = taylor + term
    assert np.abs(U - taylor).max() < 10 * (t * np.linalg.norm(H, 2)) ** 5


def test_heisenberg_lift(geom):
    v = build_potential("soft_coulomb", {"g": 0.3, "eps": 0.5}, geom)
    b = enumerate_basis(2, geom.d)
    prop = NBodyPropagator(H=build_hamiltonian(v, b, geom), hbar=1.0)
    rng = np.random.default_rng(1)
    A = rng.normal(size=(geom.d, geom.d))
    A = A + A.T
    M0 = lift_mn(A, b)
    assert_allclose(prop.heisenberg(M0, 0.0), M0, atol=1e-12)
    Mt = prop.heisenberg(M0, 0.9)
    # spectrum preserved, norm contractive relative to ||A||
    assert_allclose(np.linalg.eigvalsh(Mt), np.linalg.eigvalsh(M0), atol=1e-10)
    assert np.linalg.norm(Mt, 2) <= np.linalg.norm(A, 2) + 1e-10
    # identity is a fixed point
    assert_allclose(prop.heisenberg(np.eye(b.size), 1.3), np.eye(b.size), atol=1e-10)


def test_hartree_rhs_properties(geom):
    K = kinetic_matrix(geom)
    v = build_potential("gaussian", {"g": 0.6}, geom)
    rng = np.random.default_rng(5)
    psi = normalize(rng.normal(size=geom.d) + 1j * rng.normal(size=geom.d), geom)
    rhs = hartree_rhs(psi, v, geom, K)
    # norm-conservation generator: Re<psi, rhs> = 0, <psi, i*hbar*rhs> real
    assert abs(grid_inner(psi, rhs, geom).real) < 1e-12
    assert abs(grid_inner(psi, 1j * geom.hbar * rhs, geom).imag) < 1e-12
    # free plane wave: rhs = -i * dispersion/2 * psi
    zero = build_potential("gaussian", {"g": 0.0}, geom)
    from picklab.geometry import dispersion
    omega = geom.omegas[1]
    wave = normalize(np.exp(1j * omega * geom.x), geom)
    expected = -0.5j * dispersion(geom, omega) * wave
    assert_allclose(hartree_rhs(wave, zero, geom, K), expected, atol=1e-12)


def test_hartree_conservation(geom):
    v = build_potential("soft_coulomb", {"g": 0.5, "eps": geom.L / 8}, geom)
    psi0 = gaussian_state(geom)
    traj = hartree_integrate(psi0, v, geom, t_final=1.0, dt=1e-3, method="rk4")
    assert traj.norm_drift.max() < 1e-10
    assert traj.energy_drift.max() < 1e-8


def test_free_strang_is_exact():
    geom = GridGeometry(d=8, L=2 * np.pi, kinetic="spectral")
    zero = build_potential("gaussian", {"g": 0.0}, geom)
    psi0 = gaussian_state(geom)
    traj = hartree_integrate(psi0, zero, geom, t_final=0.5, dt=1e-2, method="strang")
    K = kinetic_matrix(geom)
    w, Q = np.linalg.eigh(K)
    exact = (Q * np.exp(-1j * w * 0.5)) @ Q.conj().T @ psi0
    assert_allclose(traj.state_at(0.5), exact, atol=1e-10)


def test_rk4_strang_agree(geom):
    v = build_potential("gaussian", {"g": 0.4}, geom)
    psi0 = gaussian_state(geom)
    dt = 1e-3
    a = hartree_integrate(psi0, v, geom, 0.2, dt, method="rk4").state_at(0.2)
    b = hartree_integrate(psi0, v, geom, 0.2, dt, method="strang").state_at(0.2)
    assert np.abs(a - b).max() < 50 * dt**2


def test_integrator_guards(geom):
    v = build_potential("gaussian", {"g": 0.4}, geom)
    psi0 = gaussian_state(geom)
    with pytest.raises(ValueError):
        hartree_integrate(psi0, v, geom, 1.0, dt=3e-4)  # not a divisor
    with pytest.raises(ValueError):
        hartree_integrate(2 * psi0, v, geom, 1.0, dt=1e-3)
    with pytest.raises(ValueError):
        hartree_integrate(psi0, v, geom, 1.0, dt=1e-3, method="euler")


def test_product_data_stays_product_free(geom):
    # v = 0: product initial data remains product; F1 follows the free flow
    zero = build_potential("gaussian", {"g": 0.0}, geom)
    b = enumerate_basis(2, geom.d)
    prop = NBodyPropagator(H=build_hamiltonian(zero, b, geom), hbar=1.0)
    psi0 = gaussian_state(geom)
    Psi0 = product_state(psi0, b, geom)
    K = kinetic_matrix(geom)
    w, Q = np.linalg.eigh(K)
    t = 0.8
    psi_t = (Q * np.exp(-1j * w * t)) @ Q.conj().T @ psi0
    expected = product_state(psi_t, b, geom)
    got = prop.propagate(Psi0, t)
    phase = np.vdot(expected, got)
    assert_allclose(abs(phase), 1.0, atol=1e-10)
    assert_allclose(got, phase * expected, atol=1e-9)
