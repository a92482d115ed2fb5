"""Time evolution of states and Heisenberg operators under Hamiltonians and Floquet maps (hbar = 1)."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from .hilbert import DenseOperator, QuantumState, check_same_dim, is_hermitian, is_unitary
from .models import FloquetMap


@dataclass(frozen=True)
class Trajectory:
    """Times and the raw state vectors, one row per time."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if len(self.states) != times.size:
            raise ValueError("times and states differ in length")
        object.__setattr__(self, "times", times)

    def __len__(self):
        return self.times.size

    def state(self, i: int) -> QuantumState:
        return QuantumState(self.states[i])

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)


class HamiltonianPropagator:
    """Exact e^{-iHt} through one full eigendecomposition."""

    def __init__(self, H: DenseOperator):
        if not H.hermitian:
            raise ValueError("Hamiltonian evolution requires a hermitian operator")
        self.H = H
        self.dim = H.dim
        self.energies, self.vectors = np.linalg.eigh(H.entries)

    def evolve(self, x: np.ndarray, t: float) -> np.ndarray:
        coeffs = self.vectors.conj().T @ x
        phase = np.exp(-1j * self.energies * t)
        return self.vectors @ (phase[:, None] * coeffs if coeffs.ndim == 2 else phase * coeffs)

    def unitary(self, t: float) -> np.ndarray:
        return (self.vectors * np.exp(-1j * self.energies * t)) @ self.vectors.conj().T


def as_propagator(evolver):
    """FloquetMap and HamiltonianPropagator pass through; a hermitian DenseOperator is wrapped."""
    if isinstance(evolver, (FloquetMap, HamiltonianPropagator)):
        return evolver
    if isinstance(evolver, DenseOperator):
        if evolver.hermitian:
            return HamiltonianPropagator(evolver)
        if evolver.unitary:
            return FloquetMap(evolver.entries, evolver.label or "dense unitary")
        raise ValueError("operator is neither hermitian (Hamiltonian) nor unitary (map)")
    raise TypeError(f"not an evolver: {type(evolver).__name__}")


def _vec(psi) -> np.ndarray:
    return psi.amplitudes if isinstance(psi, QuantumState) else np.asarray(psi, dtype=complex)


def evolve_floquet(U: FloquetMap, psi0, steps: int) -> Trajectory:
    """States U^n psi0 for n = 0..steps."""
    psi = _vec(psi0)
    check_same_dim(U.dim, psi.shape[0])
    if steps < 0:
        raise ValueError("steps must be >= 0")
    out = np.empty((steps + 1, U.dim), dtype=complex)
    out[0] = psi
    for n in range(steps):
        psi = U.apply(psi)
        out[n + 1] = psi
    return Trajectory(np.arange(steps + 1, dtype=float), out)


def evolve_hamiltonian(H, psi0, t_grid) -> Trajectory:
    prop = H if isinstance(H, HamiltonianPropagator) else as_propagator(H)
    if not isinstance(prop, HamiltonianPropagator):
        raise ValueError("evolve_hamiltonian requires a hermitian operator")
    psi = _vec(psi0)
    check_same_dim(prop.dim, psi.shape[0])
    t_grid = np.asarray(t_grid, dtype=float)
    coeffs = prop.vectors.conj().T @ psi
    phases = np.exp(-1j * np.outer(t_grid, prop.energies))
    states = (phases * coeffs[None, :]) @ prop.vectors.T
    return Trajectory(t_grid, states)


@dataclass(frozen=True)
class ChebyshevResult:
    state: np.ndarray
    truncation_estimate: float
    status: str
    order: int
    center: float
    half_width: float


def spectral_radius(H: np.ndarray, iterations: int = 200, seed: int = 0) -> float:
    """Power-iteration estimate of max |E| (lower bound converging from below)."""
    gen = np.random.default_rng(seed)
    x = gen.standard_normal(H.shape[0]) + 1j * gen.standard_normal(H.shape[0])
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iterations):
        y = H @ x
        est = np.linalg.norm(y)
        if est == 0:
            return 0.0
        x = y / est
    return float(est)


def chebyshev_propagate(H: DenseOperator, psi0, t: float, order: int, tol: float = 1e-10) -> ChebyshevResult:
    """Chebyshev expansion of e^{-iHt} psi0.

    The spectrum is mapped onto [-1, 1] with half-width 1.05 x (power-iteration spectral radius).
    ``truncation_estimate`` is |c_order|, the last retained Bessel coefficient; when it exceeds
    ``tol`` the result carries status "warning" instead of raising.
    """
    if not H.hermitian:
        raise ValueError("Chebyshev propagation requires a hermitian operator")
    if order < 1:
        raise ValueError("order must be >= 1")
    psi = _vec(psi0)
    check_same_dim(H.dim, psi.shape[0])
    m = H.entries
    half = 1.05 * spectral_radius(m)
    if half == 0:
        return ChebyshevResult(psi.copy(), 0.0, "ok", order, 0.0, 0.0)
    x = half * t
    ks = np.arange(order + 1)
    coeffs = 2.0 * (-1j) ** ks * jv(ks, x)
    coeffs[0] /= 2
    prev = psi.copy()
    cur = (m @ psi) / half
    acc = coeffs[0] * prev + coeffs[1] * cur
    for k in range(2, order + 1):
        prev, cur = cur, 2.0 * (m @ cur) / half - prev
        acc = acc + coeffs[k] * cur
    trunc = float(abs(coeffs[-1]))
    status = "ok" if trunc <= tol else "warning"
    if status == "warning":
        warnings.warn(f"Chebyshev order {order} may be too small: last coefficient {trunc:.2e}", RuntimeWarning)
    return ChebyshevResult(acc, trunc, status, order, 0.0, half)


def expm_hermitian(H: DenseOperator | np.ndarray, t: float) -> np.ndarray:
    m = H.entries if isinstance(H, DenseOperator) else np.asarray(H)
    e, v = np.linalg.eigh(m)
    return (v * np.exp(-1j * e * t)) @ v.conj().T


def trotter_step(parts, psi, dt: float, scheme: str = "second") -> np.ndarray:
    """One Trotter-Suzuki step of sum(parts); part exponentials are exact.

    first:  e^{-i H_n dt} ... e^{-i H_1 dt} psi
    second: symmetric splitting, half steps on H_1..H_{n-1} around a full H_n step.
    """
    parts = list(parts)
    if not parts:
        raise ValueError("need at least one Hamiltonian part")
    for p in parts:
        if not p.hermitian:
            raise ValueError("Trotter parts must be hermitian")
    x = _vec(psi)
    if scheme == "first":
        for p in parts:
            x = expm_hermitian(p, dt) @ x
    elif scheme == "second":
        halves = [expm_hermitian(p, dt / 2) for p in parts[:-1]]
        for u in halves:
            x = u @ x
        x = expm_hermitian(parts[-1], dt) @ x
        for u in reversed(halves):
            x = u @ x
    else:
        raise ValueError(f"unknown Trotter scheme {scheme!r}")
    return x


def trotter_evolve(parts, psi, t: float, n_steps: int, scheme: str = "second") -> np.ndarray:
    parts = list(parts)
    dt = t / n_steps
    if scheme == "first":
        step = np.eye(parts[0].dim, dtype=complex)
        for p in parts:
            step = expm_hermitian(p, dt) @ step
    else:
        halves = [expm_hermitian(p, dt / 2) for p in parts[:-1]]
        step = expm_hermitian(parts[-1], dt)
        for u in halves:
            step = u @ step @ u
    x = _vec(psi)
    for _ in range(n_steps):
        x = step @ x
    return x


def heisenberg_evolve(evolver, O: DenseOperator, n_or_t) -> DenseOperator:
    """U^dag^n O U^n for maps, e^{iHt} O e^{-iHt} for Hamiltonians."""
    prop = as_propagator(evolver)
    check_same_dim(prop.dim, O.dim)
    if isinstance(prop, FloquetMap):
        n = int(n_or_t)
        if n != n_or_t or n < 0:
            raise ValueError("Floquet Heisenberg evolution needs a non-negative integer step count")
        m = np.array(O.entries)
        for _ in range(n):
            m = prop.conjugate(m)
    else:
        v, e = prop.vectors, prop.energies
        rot = v.conj().T @ O.entries @ v
        rot = rot * np.exp(1j * np.subtract.outer(e, e) * float(n_or_t))
        m = v @ rot @ v.conj().T
    return DenseOperator(
        m,
        hermitian=O.hermitian and is_hermitian(m),
        unitary=O.unitary and is_unitary(m),
        label=f"{O.label}({n_or_t})",
    )
