import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from qchaos.hilbert import DenseOperator, QuantumState, op_inner, random_state
from qchaos.models import CatMapParams, FloquetMap, catmap_quantum, goe_hamiltonian, pauli
from qchaos.propagate import (HamiltonianPropagator, chebyshev_propagate, evolve_floquet, evolve_hamiltonian,
                              heisenberg_evolve, trotter_evolve, trotter_step)

SX = DenseOperator.from_matrix(pauli("x"))
SY = DenseOperator.from_matrix(pauli("y"))
SZ = DenseOperator.from_matrix(pauli("z"))


def test_floquet_zero_steps():
    psi = random_state(8, 0)
    tr = evolve_floquet(FloquetMap(np.eye(8)), psi, 0)
    assert len(tr) == 1 and np.array_equal(tr.states[0], psi.amplitudes)


def test_floquet_identity_map():
    psi = random_state(8, 0)
    tr = evolve_floquet(FloquetMap(np.eye(8)), psi, 5)
    assert np.allclose(tr.states, psi.amplitudes[None, :])
    assert np.array_equal(tr.times, np.arange(6))


def test_floquet_cat_norm_drift():
    tr = evolve_floquet(catmap_quantum(CatMapParams(64, 0.3)), random_state(64, 1), 10)
    assert np.max(np.abs(tr.norms() - 1)) < 1e-10


def test_floquet_dimension_mismatch():
    with pytest.raises(ValueError):
        evolve_floquet(FloquetMap(np.eye(4)), random_state(8, 0), 2)


def test_hamiltonian_phase_example():
    H = DenseOperator(np.diag([1.0, 2.0]).astype(complex), hermitian=True)
    tr = evolve_hamiltonian(H, QuantumState.basis(2, 0), [0.0, math.pi])
    assert np.allclose(tr.states[1], [-1, 0], atol=1e-15)
    assert np.array_equal(tr.states[0], [1, 0])


def test_hamiltonian_energy_conserved():
    H = goe_hamiltonian(64, 2)
    tr = evolve_hamiltonian(H, random_state(64, 3), np.linspace(0, 10, 21))
    e = np.einsum("ti,ij,tj->t", tr.states.conj(), H.entries, tr.states).real
    assert np.max(np.abs(e - e[0])) < 1e-10


def test_hamiltonian_rejects_nonhermitian():
    with pytest.raises(ValueError):
        evolve_hamiltonian(DenseOperator(np.array([[0, 1], [0, 0]], dtype=complex)), QuantumState.basis(2, 0), [1.0])


def test_chebyshev_matches_eigendecomposition():
    H = goe_hamiltonian(128, 5)
    psi = random_state(128, 6)
    t = 5.0
    order = int(1.2 * t * 2.1) + 20
    res = chebyshev_propagate(H, psi, t, order)
    exact = HamiltonianPropagator(H).evolve(psi.amplitudes, t)
    assert res.status == "ok"
    assert np.max(np.abs(res.state - exact)) < 1e-10
    assert abs(np.linalg.norm(res.state) - 1) < 1e-10


@pytest.mark.parametrize("order", [1, 3, 10])
def test_chebyshev_t_zero(order):
    psi = random_state(32, 1)
    res = chebyshev_propagate(goe_hamiltonian(32, 1), psi, 0.0, order)
    assert np.max(np.abs(res.state - psi.amplitudes)) < 1e-14


def test_chebyshev_low_order_warns():
    with pytest.warns(RuntimeWarning):
        res = chebyshev_propagate(goe_hamiltonian(32, 1), random_state(32, 1), 10.0, 5)
    assert res.status == "warning" and res.truncation_estimate > 1e-10


def test_chebyshev_error_decreases_with_order():
    H = goe_hamiltonian(64, 7)
    psi = random_state(64, 8)
    exact = HamiltonianPropagator(H).evolve(psi.amplitudes, 4.0)
    errs = []
    for order in range(12, 40, 4):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            errs.append(np.linalg.norm(chebyshev_propagate(H, psi, 4.0, order).state - exact))
    assert all(b <= a * 1.01 for a, b in zip(errs, errs[1:]))


def test_trotter_commuting_parts_exact():
    a = DenseOperator(np.diag([0.3, -1.0, 2.0]).astype(complex), hermitian=True)
    b = DenseOperator(np.diag([1.5, 0.2, -0.7]).astype(complex), hermitian=True)
    psi = random_state(3, 0)
    exact = expm(-1j * 0.8 * (a.entries + b.entries)) @ psi.amplitudes
    for scheme in ("first", "second"):
        assert np.max(np.abs(trotter_step([a, b], psi, 0.8, scheme) - exact)) < 1e-12


def test_trotter_zero_step_identity():
    psi = random_state(2, 0)
    assert np.allclose(trotter_step([SX, SZ], psi, 0.0), psi.amplitudes, atol=1e-15)


def test_trotter_empty_parts():
    with pytest.raises(ValueError):
        trotter_step([], random_state(2, 0), 0.1)


def test_trotter_second_order_slope():
    psi = random_state(2, 4)
    t = 1.0
    exact = expm(-1j * t * (SX.entries + SZ.entries)) @ psi.amplitudes
    steps = np.array([8, 16, 32, 64, 128])
    errs = [np.linalg.norm(trotter_evolve([SX, SZ], psi, t, n, "second") - exact) for n in steps]
    slope = np.polyfit(np.log(t / steps), np.log(errs), 1)[0]
    assert abs(slope - 2.0) < 0.1
    errs1 = [np.linalg.norm(trotter_evolve([SX, SZ], psi, t, n, "first") - exact) for n in steps]
    assert abs(np.polyfit(np.log(t / steps), np.log(errs1), 1)[0] - 1.0) < 0.1


def test_heisenberg_identity_and_commuting():
    H = DenseOperator(np.diag([0.1, 0.5, -2.0]).astype(complex), hermitian=True)
    O = DenseOperator(np.diag([1.0, 2.0, 3.0]).astype(complex), hermitian=True)
    assert np.allclose(heisenberg_evolve(H, DenseOperator.identity(3), 3.7).entries, np.eye(3), atol=1e-14)
    assert np.max(np.abs(heisenberg_evolve(H, O, 2.3).entries - O.entries)) < 1e-12


@pytest.mark.parametrize("t", [0.0, 0.3, 1.1, 2.5])
def test_heisenberg_two_level_closed_form(t):
    out = heisenberg_evolve(SZ, SX, t)
    ref = math.cos(2 * t) * pauli("x") - math.sin(2 * t) * pauli("y")
    assert np.max(np.abs(out.entries - ref)) < 1e-12
    assert out.hermitian


def test_heisenberg_floquet_matches_dense():
    U = catmap_quantum(CatMapParams(32, 0.2))
    O = DenseOperator.from_matrix(np.diag(np.cos(2 * np.pi * np.arange(32) / 32)))
    Ud = U.to_dense()
    ref = O.entries
    for _ in range(3):
        ref = Ud.conj().T @ ref @ Ud
    assert np.allclose(heisenberg_evolve(U, O, 3).entries, ref, atol=1e-12)
    with pytest.raises(ValueError):
        heisenberg_evolve(U, O, 1.5)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), t=st.floats(-20, 20))
def test_propagators_preserve_inner_products(seed, t):
    H = goe_hamiltonian(16, seed)
    a, b = random_state(16, seed + 1), random_state(16, seed + 2)
    P = HamiltonianPropagator(H)
    assert abs(np.vdot(P.evolve(a.amplitudes, t), P.evolve(b.amplitudes, t)) - np.vdot(a.amplitudes, b.amplitudes)) < 1e-10
    U = catmap_quantum(CatMapParams(16, t))
    assert abs(np.vdot(U.apply(a.amplitudes), U.apply(b.amplitudes)) - np.vdot(a.amplitudes, b.amplitudes)) < 1e-10


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), t=st.floats(0, 20))
def test_heisenberg_preserves_operator_norm(seed, t):
    H = goe_hamiltonian(12, seed)
    gen = np.random.default_rng(seed)
    O = DenseOperator.from_matrix(gen.standard_normal((12, 12)) + 1j * gen.standard_normal((12, 12)))
    assert abs(op_inner(heisenberg_evolve(H, O, t), heisenberg_evolve(H, O, t)) - op_inner(O, O)) < 1e-10
