"""Krylov-space tools: Lanczos for states and operators, Arnoldi for unitaries, K-complexity."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.linalg import expm

from .hilbert import DenseOperator, check_same_dim
from .models import FloquetMap

REORTH_PASSES = 2


class KrylovDegeneracyWarning(UserWarning):
    pass


@dataclass
class LanczosData:
    """a_n (n = 0..K-1) and b_n (n = 1..K-1); ``basis`` rows are the orthonormal Krylov vectors."""

    a: np.ndarray
    b: np.ndarray
    basis: np.ndarray
    status: str
    kind: str = "state"

    @property
    def size(self) -> int:
        return self.a.size

    def tridiagonal(self) -> np.ndarray:
        return np.diag(self.a) + np.diag(self.b, 1) + np.diag(self.b, -1)


@dataclass
class ArnoldiData:
    hessenberg: np.ndarray
    basis: np.ndarray
    status: str

    @property
    def size(self) -> int:
        return self.hessenberg.shape[0]

    @property
    def subdiagonal(self) -> np.ndarray:
        return np.abs(np.diagonal(self.hessenberg, -1)).copy()


@dataclass
class KrylovAmplitudes:
    """c_n(t) on the Krylov chain; rows are times."""

    times: np.ndarray
    amplitudes: np.ndarray

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _matrix(H) -> np.ndarray:
    if isinstance(H, DenseOperator):
        if not H.hermitian:
            raise ValueError("Lanczos requires a hermitian generator")
        return H.entries
    m = np.asarray(H, dtype=complex)
    if not np.allclose(m, m.conj().T, atol=1e-12):
        raise ValueError("Lanczos requires a hermitian generator")
    return m


def _lanczos(apply, v0: np.ndarray, max_k: int, tol: float, zero_a: bool, weight: float = 1.0):
    """Hermitian Lanczos on flat vectors with inner product weight * vdot, full two-pass reorthogonalization."""
    v0 = v0.ravel()
    q = np.zeros((max_k, v0.size), dtype=complex)
    q[0] = v0 / math.sqrt(weight * np.vdot(v0, v0).real)
    a, b = [], []
    status = "max_k"
    for n in range(max_k):
        w = apply(q[n])
        an = weight * np.vdot(q[n], w)
        a.append(0.0 if zero_a else an.real)
        if n + 1 == max_k:
            break
        for _ in range(REORTH_PASSES):
            w = w - q[: n + 1].T @ (weight * (q[: n + 1].conj() @ w))
        bn = math.sqrt(max(weight * np.vdot(w, w).real, 0.0))
        if bn < tol:
            status = "exhausted"
            break
        b.append(bn)
        q[n + 1] = w / bn
    return np.array(a, dtype=float), np.array(b, dtype=float), q[: len(a)], status


def lanczos_state(H, psi0, max_k: int, tol: float | None = None) -> LanczosData:
    """Lanczos coefficients of psi0 under H with full (two-pass) reorthogonalization.

    Stops early with status "exhausted" once b_n < tol (default 1e-12 ||H||).
    """
    m = _matrix(H)
    v0 = np.asarray(getattr(psi0, "amplitudes", psi0), dtype=complex)
    check_same_dim(m.shape[0], v0.shape[0])
    if max_k < 1:
        raise ValueError("max_k must be >= 1")
    if tol is None:
        tol = 1e-12 * max(np.linalg.norm(m, 2), 1.0)
    a, b, basis, status = _lanczos(lambda x: m @ x, v0, min(max_k, v0.size), tol, False)
    return LanczosData(a, b, basis, status, "state")


def lanczos_operator(H, O, max_k: int, tol: float | None = None) -> LanczosData:
    """Lanczos on the Liouvillian [H, .] with (A|B) = tr(A^dag B)/D.

    For hermitian O the diagonal a_n vanish identically and are set to zero.
    """
    m = _matrix(H)
    o = O.entries if isinstance(O, DenseOperator) else np.asarray(O, dtype=complex)
    check_same_dim(m.shape[0], o.shape[0])
    if max_k < 1:
        raise ValueError("max_k must be >= 1")
    dim = m.shape[0]
    if tol is None:
        tol = 1e-12 * max(np.linalg.norm(m, 2), 1.0)
    hermitian_o = np.allclose(o, o.conj().T, atol=1e-12)
    def liouvillian(x):
        x = x.reshape(dim, dim)
        return (m @ x - x @ m).ravel()

    a, b, basis, status = _lanczos(liouvillian, o, min(max_k, dim * dim), tol, hermitian_o, 1.0 / dim)
    return LanczosData(a, b, basis.reshape(-1, dim, dim), status, "operator")


def arnoldi_unitary(U, psi0, max_k: int, tol: float = 1e-12) -> ArnoldiData:
    """Arnoldi iteration for a unitary map; |h_{n+1,n}| plays the role of b_n."""
    apply = U.apply if isinstance(U, FloquetMap) else (lambda x: np.asarray(getattr(U, "entries", U)) @ x)
    v = np.asarray(getattr(psi0, "amplitudes", psi0), dtype=complex)
    v = v / np.linalg.norm(v)
    dim = v.shape[0]
    max_k = min(max_k, dim)
    q = np.zeros((max_k, dim), dtype=complex)
    q[0] = v
    h = np.zeros((max_k + 1, max_k), dtype=complex)
    status = "max_k"
    k = max_k
    for j in range(max_k):
        w = apply(q[j])
        for _ in range(REORTH_PASSES):
            c = q[: j + 1].conj() @ w
            h[: j + 1, j] += c
            w = w - q[: j + 1].T @ c
        nrm = np.linalg.norm(w)
        h[j + 1, j] = nrm
        if nrm < tol:
            status = "exhausted"
            k = j + 1
            break
        if j + 1 < max_k:
            q[j + 1] = w / nrm
    return ArnoldiData(h[:k, :k].copy(), q[:k].copy(), status)


def krylov_propagate(data, t_grid) -> KrylovAmplitudes:
    """Amplitudes c_n(t) of the evolved state or operator in its own Krylov basis.

    States: c(t) = exp(-i T t) e_0. Operators (Heisenberg, dO/dt = i[H, O]): c(t) = exp(+i T t) e_0.
    Arnoldi data: c(t) = H^t e_0 for integer t (exact while t < K).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if isinstance(data, ArnoldiData):
        if np.any(t_grid != np.round(t_grid)) or np.any(t_grid < 0):
            raise ValueError("unitary Krylov propagation needs non-negative integer steps")
        out = np.zeros((t_grid.size, data.size), dtype=complex)
        c = np.zeros(data.size, dtype=complex)
        c[0] = 1.0
        n = 0
        for i, t in enumerate(t_grid):
            while n < int(t):
                c = data.hessenberg @ c
                n += 1
            out[i] = c
        return KrylovAmplitudes(t_grid, out)
    e, q = np.linalg.eigh(data.tridiagonal())
    sign = -1.0 if data.kind == "state" else 1.0
    phases = np.exp(sign * 1j * np.outer(t_grid, e))
    return KrylovAmplitudes(t_grid, (phases * q[0]) @ q.T)


def operator_wavefunction(data: LanczosData, t_grid) -> np.ndarray:
    """Real chain amplitudes phi_n(t) from d phi_n/dt = b_n phi_{n-1} - b_{n+1} phi_{n+1}, phi(0) = e_0.

    Related to the complex amplitudes of :func:`krylov_propagate` by c_n = i^n phi_n.
    """
    if data.kind != "operator":
        raise ValueError("the real-coefficient chain applies to operator Lanczos data")
    k = data.size
    gen = np.zeros((k, k))
    gen[np.arange(1, k), np.arange(k - 1)] = data.b
    gen[np.arange(k - 1), np.arange(1, k)] = -data.b
    e0 = np.zeros(k)
    e0[0] = 1.0
    return np.array([expm(gen * t) @ e0 for t in np.asarray(t_grid, dtype=float)])


def k_complexity(amps: KrylovAmplitudes) -> np.ndarray:
    """K(t) = sum_n n |c_n(t)|^2."""
    p = amps.probabilities
    return p @ np.arange(p.shape[1])


def k_saturation(data: LanczosData, degeneracy_tol: float = 1e-10) -> float:
    """Long-time average of K(t) from the tridiagonal eigenvectors: sum_n n sum_k |Q_0k|^2 |Q_nk|^2.

    Valid for a non-degenerate chain spectrum; warns otherwise.
    """
    e, q = np.linalg.eigh(data.tridiagonal())
    if e.size > 1 and np.min(np.diff(e)) < degeneracy_tol:
        warnings.warn("degenerate Krylov spectrum; saturation formula is approximate",
                      KrylovDegeneracyWarning, stacklevel=2)
    w = np.abs(q) ** 2
    return float(np.arange(e.size) @ (w @ w[0]))


@dataclass
class LanczosStats:
    initial_slope: float
    plateau: float
    fluctuation: float


MIN_STATS_SIZE = 16


def lanczos_stats(data) -> LanczosStats:
    """Initial growth slope of b_n, then the mean of b_n and the variance of ln(b_{n+1}/b_n),
    both over the middle half of the sequence. Accepts LanczosData or the b_n array."""
    b = np.asarray(data.b if isinstance(data, LanczosData) else data, dtype=float)
    if b.size < MIN_STATS_SIZE:
        raise ValueError(f"need at least {MIN_STATS_SIZE} Lanczos coefficients, got {b.size}")
    m = max(4, b.size // 10)
    n = np.arange(1, b.size + 1)
    slope = stats.linregress(n[:m], b[:m]).slope
    lo, hi = b.size // 4, max(b.size // 4 + 1, (3 * b.size) // 4)
    mid = b[lo:hi]
    mid = mid[mid > 0]
    ratios = np.log(mid[1:] / mid[:-1]) if mid.size > 1 else np.zeros(1)
    return LanczosStats(float(slope), float(b[lo:hi].mean()), float(ratios.var()))
