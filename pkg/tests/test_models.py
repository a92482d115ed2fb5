import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qchaos.hilbert import InvalidDimensionError, random_state, random_states
from qchaos.models import (CAT_MATRIX, CatMapParams, KickedIsingParams, catmap_classical_step, catmap_quantum,
                           catmap_tangent, global_spin_flip, goe_hamiltonian, kicked_ising, kicked_ising_parts,
                           linear_cat_unitary, pauli, site_operator)
from qchaos.hilbert import QuantumState, coherent_state, husimi


def unitarity_error(m):
    return np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))


@pytest.mark.parametrize("N", [2, 4, 10, 64, 256])
def test_cat_unitary_kappa_zero(N):
    assert unitarity_error(catmap_quantum(CatMapParams(N, 0.0)).to_dense()) < 1e-10


def test_cat_n2_entries_equal_modulus():
    U = catmap_quantum(CatMapParams(2, 0.0)).to_dense()
    assert np.allclose(np.abs(U), 1 / math.sqrt(2), atol=1e-14)


def test_cat_matrix_elements_closed_form():
    # element formula for A = [[2,1],[1,1]]: (iN)^(-1/2) exp[(i pi/N)(2k^2 - 2jk + j^2)]
    N = 12
    j, k = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    ref = np.exp(1j * np.pi / N * (2 * k**2 - 2 * j * k + j**2)) / np.sqrt(1j * N)
    assert np.allclose(linear_cat_unitary(N), ref, atol=1e-13)


def test_cat_round_trip():
    U = catmap_quantum(CatMapParams(128, 0.25))
    psi = random_state(128, 3).amplitudes
    assert np.allclose(U.apply_adjoint(U.apply(psi)), psi, atol=1e-10)


def test_cat_odd_dimension_rejected():
    with pytest.raises(InvalidDimensionError):
        CatMapParams(7, 0.1)


@pytest.mark.parametrize("kappa", [0.0, 0.3])
def test_factored_matches_dense(kappa):
    N = 64
    dense = catmap_quantum(CatMapParams(N, kappa), factored=False)
    fact = catmap_quantum(CatMapParams(N, kappa), factored=True)
    assert np.allclose(dense.to_dense(), fact.to_dense(), atol=1e-12)
    x = random_states(N, 3, 1)
    assert np.allclose(dense.apply_adjoint(x), fact.apply_adjoint(x), atol=1e-12)
    op = np.diag(np.arange(N)).astype(complex)
    assert np.allclose(dense.conjugate(op), fact.conjugate(op), atol=1e-10)


def test_cat_group_property():
    N = 64
    UA = linear_cat_unitary(N)
    A2 = np.array(CAT_MATRIX) @ np.array(CAT_MATRIX)
    UA2 = linear_cat_unitary(N, A2.tolist())
    for s in range(5):
        psi = random_state(N, s).amplitudes
        assert abs(abs(np.vdot(UA2 @ psi, UA @ (UA @ psi))) - 1) < 1e-8


def test_cat_moves_packet_classically():
    N, q0, p0 = 256, 0.1, 0.2
    psi = catmap_quantum(CatMapParams(N, 0.0)).apply(coherent_state(N, q0, p0).amplitudes)
    Q = husimi(QuantumState.from_vector(psi))
    j, k = np.unravel_index(np.argmax(Q), Q.shape)
    # the image packet is sheared, so allow one grid cell
    assert abs(j - 0.4 * N) <= 1 and abs(k - 0.3 * N) <= 1


def test_classical_step_examples():
    assert catmap_classical_step((0.0, 0.0), 0.0) == (0.0, 0.0)
    q, p = catmap_classical_step((0.1, 0.2), 0.0)
    assert q == pytest.approx(0.4, abs=1e-15) and p == pytest.approx(0.3, abs=1e-15)
    q, p = catmap_classical_step((0.25, 0.1), 0.5)
    pt = 0.1 + 0.5 / (2 * math.pi)
    assert q == pytest.approx((0.5 + pt) % 1) and p == pytest.approx((0.25 + pt) % 1)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(0, 12), a=st.integers(0, 96), b=st.integers(0, 96))
def test_classical_iterates_equal_matrix_power_exactly(n, a, b):
    q, p = Fraction(a, 97), Fraction(b, 97)
    x, y = q, p
    for _ in range(n):
        x, y = catmap_classical_step((x, y), 0)
    M = np.linalg.matrix_power(np.array(CAT_MATRIX, dtype=object), n) if n else np.eye(2, dtype=int).astype(object)
    assert (x, y) == ((M[0, 0] * q + M[0, 1] * p) % 1, (M[1, 0] * q + M[1, 1] * p) % 1)


@settings(max_examples=60, deadline=None)
@given(q=st.floats(0, 1, exclude_max=True), p=st.floats(0, 1, exclude_max=True),
       kappa=st.floats(-5, 5))
def test_tangent_is_area_preserving(q, p, kappa):
    assert abs(np.linalg.det(catmap_tangent((q, p), kappa)) - 1) < 1e-12


def test_tangent_matches_finite_difference():
    q, p, kappa, h = 0.31, 0.47, 0.7, 1e-7
    J = catmap_tangent((q, p), kappa)
    f0 = np.array(catmap_classical_step((q, p), kappa))
    fq = np.array(catmap_classical_step((q + h, p), kappa))
    fp = np.array(catmap_classical_step((q, p + h), kappa))
    num = np.column_stack([(fq - f0) / h, (fp - f0) / h])
    assert np.allclose(J, num, atol=1e-5)


def test_kicked_ising_trivial_identity():
    U = kicked_ising(KickedIsingParams(4, J=0.0, b=0.0, h=0.0)).to_dense()
    assert np.allclose(U, np.eye(16), atol=1e-15)


def test_kicked_ising_two_site_kick():
    U = kicked_ising(KickedIsingParams(2, J=0.0, b=math.pi / 2, h=0.0)).to_dense()
    assert np.allclose(U, -np.kron(pauli("x"), pauli("x")), atol=1e-14)


def test_kicked_ising_matches_dense_construction():
    from scipy.linalg import expm
    p = KickedIsingParams(4, J=0.7, b=0.3, h=0.2, boundary="periodic")
    hz, hx = kicked_ising_parts(p)
    ref = expm(-1j * hz.entries) @ expm(-1j * hx.entries)
    assert np.allclose(kicked_ising(p).to_dense(), ref, atol=1e-12)
    # explicit Pauli sums as an independent oracle for the two parts
    L = p.L
    zz = sum(p.J * site_operator(L, j).entries @ site_operator(L, (j + 1) % L).entries for j in range(L))
    z = sum(p.h * site_operator(L, j).entries for j in range(L))
    x = sum(p.b * site_operator(L, j, "x").entries for j in range(L))
    assert np.allclose(hz.entries, zz + z) and np.allclose(hx.entries, x)


def test_open_boundary_drops_wrap_bond():
    p = KickedIsingParams(3, J=1.0, b=0.0, h=0.0, boundary="open")
    hz, _ = kicked_ising_parts(p)
    zz = sum(site_operator(3, j).entries @ site_operator(3, j + 1).entries for j in range(2))
    assert np.allclose(hz.entries, zz)


@settings(max_examples=15, deadline=None)
@given(L=st.integers(2, 7), J=st.floats(-3, 3), b=st.floats(-3, 3), h=st.floats(-3, 3))
def test_kicked_ising_unitary(L, J, b, h):
    assert unitarity_error(kicked_ising(KickedIsingParams(L, J, b, h)).to_dense()) < 1e-10


def test_integrable_line_spin_flip_symmetry():
    L = 6
    P = global_spin_flip(L)
    U0 = kicked_ising(KickedIsingParams.integrable_line(L)).to_dense()
    U1 = kicked_ising(KickedIsingParams.chaotic(L)).to_dense()
    assert np.max(np.abs(U0 @ P - P @ U0)) < 1e-10
    assert np.max(np.abs(U1 @ P - P @ U1)) > 1e-3


def test_ising_size_guard():
    with pytest.raises(InvalidDimensionError):
        kicked_ising(KickedIsingParams(15))


def test_goe_properties():
    H = goe_hamiltonian(512, 4)
    m = H.entries
    assert np.array_equal(m, m.T)
    assert np.all(m.imag == 0)
    assert abs(np.max(np.abs(np.linalg.eigvalsh(m))) - 2) < 0.1
    off = m[np.triu_indices(512, 1)].real
    assert off.var() * 512 == pytest.approx(1.0, rel=0.02)
    assert np.diagonal(m).real.var() * 512 == pytest.approx(2.0, rel=0.15)
    assert np.array_equal(goe_hamiltonian(32, 9).entries, goe_hamiltonian(32, 9).entries)
