import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qchaos.hilbert import DenseOperator
from qchaos.models import FloquetMap, KickedIsingParams, goe_hamiltonian, kicked_ising, pauli, site_operator
from qchaos.otoc import (RhoSpec, haar_saturation, lightcone, otoc, otoc_higher, saturation_stats, sign_operators,
                         torus_surrogates)

SX = DenseOperator.from_matrix(pauli("x"))
SZ = DenseOperator.from_matrix(pauli("z"))


def haar_unitary(dim, rng):
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def test_spin_precession_closed_form():
    t = np.linspace(0, 3, 31)
    s = otoc(SX, SX, SZ, t)
    assert np.max(np.abs(s.F - np.cos(4 * t))) < 1e-12
    assert np.max(np.abs(s.C - 2 * (1 - np.cos(4 * t)))) < 1e-12
    f2 = otoc_higher(SX, SX, SZ, t, 2)
    assert np.max(np.abs(f2.values - np.cos(4 * t))) < 1e-12


def test_commuting_operators_start_at_zero():
    p = KickedIsingParams.chaotic(6)
    s = otoc(site_operator(6, 0), site_operator(6, 3), kicked_ising(p), np.arange(4))
    assert s.C[0] < 1e-14 and s.F[0] == pytest.approx(1.0)


def test_hermitian_unitary_identity_goe():
    rng = np.random.default_rng(0)
    V, W = sign_operators(64, rng)
    s = otoc(V, W, goe_hamiltonian(64, rng), np.linspace(0, 10, 21))
    assert np.max(np.abs(s.C - 2 * (1 - s.F.real))) < 1e-10


def test_decomposition_matches_direct():
    rng = np.random.default_rng(1)
    H = goe_hamiltonian(32, rng)
    V = DenseOperator.from_matrix(goe_hamiltonian(32, rng).entries)
    W = DenseOperator.from_matrix(np.diag(rng.normal(size=32)))
    for rho in (RhoSpec.infinite(), RhoSpec.thermal(0.7, H)):
        s = otoc(V, W, H, np.linspace(0, 5, 11), rho)
        assert np.max(np.abs(s.C - s.C_decomposed)) < 1e-10 * max(1, np.max(s.C))


def test_zero_beta_equals_infinite():
    rng = np.random.default_rng(2)
    H = goe_hamiltonian(24, rng)
    V, W = sign_operators(24, rng)
    t = np.linspace(0, 4, 9)
    a = otoc(V, W, H, t)
    b = otoc(V, W, H, t, RhoSpec.thermal(0.0, H))
    c = otoc(V, W, H, t, RhoSpec.from_density(np.eye(24) / 24))
    assert np.max(np.abs(a.C - b.C)) < 1e-12 and np.max(np.abs(a.C - c.C)) < 1e-12


def test_pure_state_route_matches_density():
    rng = np.random.default_rng(3)
    H = goe_hamiltonian(16, rng)
    V, W = sign_operators(16, rng)
    psi = rng.normal(size=16) + 1j * rng.normal(size=16)
    psi /= np.linalg.norm(psi)
    t = np.linspace(0, 3, 7)
    a = otoc(V, W, H, t, RhoSpec.pure(psi))
    b = otoc(V, W, H, t, RhoSpec.from_density(np.outer(psi, psi.conj())))
    assert np.max(np.abs(a.C - b.C)) < 1e-10 and np.max(np.abs(a.F - b.F)) < 1e-10


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**16))
def test_basis_invariance(seed):
    rng = np.random.default_rng(seed)
    H = goe_hamiltonian(12, rng)
    V, W = sign_operators(12, rng)
    q = haar_unitary(12, rng)

    def rot(op, **flags):
        return DenseOperator(q @ op.entries @ q.conj().T, **flags)

    t = np.linspace(0, 2, 5)
    a = otoc(V, W, H, t)
    b = otoc(rot(V, hermitian=True), rot(W, hermitian=True), rot(H, hermitian=True), t)
    assert np.max(np.abs(a.C - b.C)) < 1e-9 and np.max(np.abs(a.F - b.F)) < 1e-9


@settings(max_examples=15, deadline=None)
@given(beta=st.floats(0, 5), seed=st.integers(0, 2**16))
def test_thermal_commutator_nonnegative(beta, seed):
    rng = np.random.default_rng(seed)
    H = goe_hamiltonian(10, rng)
    V = DenseOperator.from_matrix(goe_hamiltonian(10, rng).entries)
    W = DenseOperator.from_matrix(goe_hamiltonian(10, rng).entries)
    s = otoc(V, W, H, np.linspace(0, 3, 7), RhoSpec.thermal(beta, H))
    assert np.all(s.C >= -1e-12)


def test_haar_reference_value():
    assert haar_saturation(4) == 1.5
    assert haar_saturation(256) == pytest.approx(2 * 255 / 256)


def test_haar_average_at_dimension_four():
    # Weingarten calculus for traceless, hermitian-unitary V, W gives C = 2 D^2 / (D^2 - 1) exactly;
    # the reference plateau 2(1 - 1/D) agrees with it only to leading order.
    rng = np.random.default_rng(4)
    V, W = sign_operators(4, rng)
    vals = [otoc(V, W, FloquetMap(haar_unitary(4, rng)), [1]).C[0] for _ in range(4000)]
    sem = np.std(vals) / np.sqrt(len(vals))
    assert abs(np.mean(vals) - 32 / 15) < 4 * sem


def test_saturation_stats_rejects_early_window():
    t = np.linspace(0, 10, 41)
    s = otoc(SX, SX, SZ, t)
    with pytest.raises(ValueError):
        saturation_stats(s, (2.0, 10.0), scrambling_time=3.0)
    st_ = saturation_stats(s, (5.0, 10.0), scrambling_time=3.0)
    assert st_.haar_reference == 1.0


def test_random_estimator_close_to_exact():
    p = KickedIsingParams.chaotic(8)
    U = kicked_ising(p)
    V, W = site_operator(8, 0), site_operator(8, 2)
    t = np.arange(8)
    exact = otoc(V, W, U, t, estimator="exact")
    est = otoc(V, W, U, t, estimator="random", n_samples=64, rng=np.random.default_rng(0))
    assert est.estimator == "random" and est.n_samples == 64
    assert np.max(np.abs(exact.C - est.C)) < 0.15


def test_random_estimator_needs_infinite_temperature():
    H = goe_hamiltonian(8, np.random.default_rng(0))
    with pytest.raises(ValueError):
        otoc(SX, SX, SZ, [0.0], RhoSpec.thermal(1.0, DenseOperator.from_matrix(pauli("z"))), estimator="random")
    with pytest.raises(ValueError):
        otoc(SX, SX, H, [0.0])


def test_torus_surrogates_normalized():
    V, W = torus_surrogates(64)
    for op in (V, W):
        assert abs(np.trace(op.entries)) < 1e-10
        assert np.trace(op.entries @ op.entries).real == pytest.approx(64)


def test_lightcone_ordering():
    data = lightcone(KickedIsingParams.chaotic(8), t_max=8)
    assert all(c[0] < 1e-14 for c in data.curves.values())
    assert data.curves[1][2] > 1e-3 > data.curves[3][2]
    ok = ~np.isnan(data.arrival_times)
    assert np.all(np.diff(data.arrival_times[ok]) >= 0)
