"""Model builders: perturbed cat map (quantum and classical), kicked Ising chain, GOE matrices."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import (
    DenseOperator,
    InvalidDimensionError,
    as_generator,
    check_dim,
    check_same_dim,
    is_unitary,
)

CAT_MATRIX = ((2, 1), (1, 1))
CAT_LYAPUNOV = math.log((3 + math.sqrt(5)) / 2)
MAX_ISING_SITES = 14
FACTORED_MIN_DIM = 512


@dataclass(frozen=True)
class CatMapParams:
    N: int
    kappa: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2 or self.N % 2:
            raise InvalidDimensionError(f"cat map needs an even N >= 2, got {self.N!r}")
        if not math.isfinite(self.kappa):
            raise ValueError("kappa must be finite")

    @property
    def hbar(self) -> float:
        return 1.0 / (2 * math.pi * self.N)


@dataclass(frozen=True)
class KickedIsingParams:
    L: int
    J: float = math.pi / 4
    b: float = math.pi / 4
    h: float = 0.4
    boundary: str = "periodic"

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise InvalidDimensionError(f"kicked Ising needs L >= 2, got {self.L!r}")
        if self.boundary not in ("periodic", "open"):
            raise ValueError(f"boundary must be 'periodic' or 'open', got {self.boundary!r}")
        if not all(math.isfinite(x) for x in (self.J, self.b, self.h)):
            raise ValueError("kicked Ising angles must be finite")

    @property
    def dim(self) -> int:
        return 2**self.L

    @property
    def integrable(self) -> bool:
        return self.h == 0

    @classmethod
    def chaotic(cls, L: int, boundary: str = "periodic") -> "KickedIsingParams":
        return cls(L, math.pi / 4, math.pi / 4, 0.4, boundary)

    @classmethod
    def integrable_line(cls, L: int, boundary: str = "periodic") -> "KickedIsingParams":
        return cls(L, math.pi / 4, math.pi / 4, 0.0, boundary)


class FloquetMap:
    """One-period unitary. Subclasses may override the application rule with a factored form."""

    def __init__(self, matrix, description: str = ""):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InvalidDimensionError("Floquet matrix must be square")
        self._matrix = matrix
        self._matrix.setflags(write=False)
        self.dim = matrix.shape[0]
        self.description = description

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, {self.description!r})"

    def apply(self, x: np.ndarray) -> np.ndarray:
        """U @ x for a vector or a (dim, k) block of column vectors."""
        return self._matrix @ x

    def apply_adjoint(self, x: np.ndarray) -> np.ndarray:
        return self._matrix.conj().T @ x

    def conjugate(self, op: np.ndarray) -> np.ndarray:
        """Heisenberg step U^dag op U."""
        right = self.apply_adjoint(np.conj(op).T).conj().T  # op @ U
        return self.apply_adjoint(right)

    def to_dense(self) -> np.ndarray:
        return self._matrix

    def as_operator(self) -> DenseOperator:
        return DenseOperator(self.to_dense(), unitary=True, label=self.description)

    def check_unitary(self, tol: float = 1e-10) -> bool:
        return is_unitary(self.to_dense(), tol)


class FactoredCatMap(FloquetMap):
    """Cat map applied as kick -> quadratic phase -> FFT -> quadratic phase, O(N log N) per vector."""

    def __init__(self, N: int, kick: np.ndarray, description: str = ""):
        self.dim = N
        self.description = description
        j = np.arange(N)
        self._kick = kick
        self._pre = np.exp(2j * np.pi * j.astype(float) ** 2 / N)
        self._post = np.exp(1j * np.pi * j.astype(float) ** 2 / N) / np.sqrt(1j * N)
        self._matrix = None

    @staticmethod
    def _col(v, x):
        return v if x.ndim == 1 else v[:, None]

    def apply(self, x):
        y = np.fft.fft(self._col(self._kick * self._pre, x) * x, axis=0)
        return self._col(self._post, x) * y

    def apply_adjoint(self, x):
        y = self._col(np.conj(self._post), x) * x
        y = np.fft.ifft(y, axis=0) * self.dim
        return self._col(np.conj(self._kick * self._pre), x) * y

    def to_dense(self):
        if self._matrix is None:
            self._matrix = self.apply(np.eye(self.dim, dtype=complex))
            self._matrix.setflags(write=False)
        return self._matrix


class KickedIsingMap(FloquetMap):
    """Kicked Ising step applied as L single-site x-rotations followed by a diagonal phase."""

    def __init__(self, params: KickedIsingParams, phases: np.ndarray, description: str = ""):
        self.params = params
        self.dim = params.dim
        self.description = description
        self._phases = phases
        c, s = math.cos(params.b), math.sin(params.b)
        self._rot = np.array([[c, -1j * s], [-1j * s, c]])
        self._matrix = None

    def _rotate(self, x, rot):
        L = self.params.L
        shape = x.shape
        rest = x.size // self.dim
        out = np.array(x, dtype=complex, order="C").reshape(self.dim, rest)
        for site in range(L):
            blk = out.reshape(2**site, 2, -1)
            a0 = blk[:, 0].copy()
            a1 = blk[:, 1].copy()
            blk[:, 0] = rot[0, 0] * a0 + rot[0, 1] * a1
            blk[:, 1] = rot[1, 0] * a0 + rot[1, 1] * a1
        return out.reshape(shape)

    def _col(self, v, x):
        return v if x.ndim == 1 else v[:, None]

    def apply(self, x):
        return self._col(self._phases, x) * self._rotate(x, self._rot)

    def apply_adjoint(self, x):
        return self._rotate(self._col(np.conj(self._phases), x) * x, self._rot.conj().T)

    def conjugate(self, op):
        # U^dag op U = K^dag (P^* op P) K, rotations applied to rows then (via transpose) columns
        x = np.conj(self._phases)[:, None] * op * self._phases[None, :]
        x = self._rotate(x, self._rot.conj().T)
        x = self._rotate(x.T, self._rot.T).T
        return np.ascontiguousarray(x)

    def to_dense(self):
        if self._matrix is None:
            self._matrix = self.apply(np.eye(self.dim, dtype=complex))
            self._matrix.setflags(write=False)
        return self._matrix


def linear_cat_unitary(N: int, matrix=CAT_MATRIX) -> np.ndarray:
    """Exact torus quantization of an integer SL(2,Z) matrix [[a, b], [c, d]] with b >= 1.

    <j|U|k> = (iNb)^(-1/2) sum_{m<b} exp[(i pi / (N b)) (a (k+mN)^2 - 2 j (k+mN) + d j^2)]
    maps a packet at (q, p) to one at (a q + b p, c q + d p).
    """
    (a, b), (c, d) = matrix
    if a * d - b * c != 1:
        raise ValueError("cat matrix must have unit determinant")
    if b < 1:
        raise ValueError("upper-right entry must be positive")
    j = np.arange(N, dtype=float)[:, None]
    k = np.arange(N, dtype=float)[None, :]
    out = np.zeros((N, N), dtype=complex)
    for m in range(b):
        km = k + m * N
        out += np.exp(1j * np.pi / (N * b) * (a * km * km - 2 * j * km + d * j * j))
    return out / np.sqrt(1j * N * b)


def cat_kick_phases(N: int, kappa: float) -> np.ndarray:
    """Diagonal kick exp[-i (N kappa / 2 pi) cos(2 pi j / N)], the quantized V(q) = kappa cos(2 pi q) / 4 pi^2."""
    j = np.arange(N)
    return np.exp(-1j * N * kappa / (2 * np.pi) * np.cos(2 * np.pi * j / N))


def cat_potential(q):
    """Kick potential per unit kappa; the classical kick is p -> p - kappa V'(q)."""
    return np.cos(2 * np.pi * q) / (4 * np.pi**2)


def catmap_quantum(params: CatMapParams, factored: bool | None = None) -> FloquetMap:
    """Perturbed quantum cat map U = U_cat V_kappa (kick first)."""
    N = params.N
    kick = cat_kick_phases(N, params.kappa)
    desc = f"catmap N={N} kappa={params.kappa!r}"
    if factored is None:
        factored = N >= FACTORED_MIN_DIM
    if factored:
        return FactoredCatMap(N, kick, desc)
    return FloquetMap(linear_cat_unitary(N) * kick[None, :], desc)


def catmap_classical_step(point, kappa: float):
    """One kick-then-cat step on the unit torus. Works on scalars, arrays or Fractions (kappa = 0)."""
    q, p = point
    if kappa:
        p = p + kappa / (2 * np.pi) * np.sin(2 * np.pi * q)
    return (2 * q + p) % 1, (q + p) % 1


def catmap_tangent(point, kappa: float) -> np.ndarray:
    """Jacobian of :func:`catmap_classical_step` at ``point``."""
    q, _ = point
    shear = np.array([[1.0, 0.0], [kappa * math.cos(2 * math.pi * q), 1.0]])
    return np.array(CAT_MATRIX, dtype=float) @ shear


def _ising_spins(L: int) -> np.ndarray:
    # site 0 is the most significant bit (kron order); spin up (bit 0) -> +1
    idx = np.arange(2**L)
    bits = (idx[:, None] >> np.arange(L - 1, -1, -1)[None, :]) & 1
    return 1 - 2 * bits


def ising_diagonal(params: KickedIsingParams) -> np.ndarray:
    """Diagonal of sum_j (J z_j z_{j+1} + h z_j)."""
    s = _ising_spins(params.L)
    bonds = s[:, :-1] * s[:, 1:]
    energy = params.J * bonds.sum(axis=1)
    if params.boundary == "periodic" and params.L > 2:
        energy = energy + params.J * s[:, -1] * s[:, 0]
    return energy + params.h * s.sum(axis=1)


def kicked_ising(params: KickedIsingParams) -> KickedIsingMap:
    """U = exp[-i sum(J zz + h z)] exp[-i b sum x]."""
    if params.L > MAX_ISING_SITES:
        raise InvalidDimensionError(f"L={params.L} exceeds the dense limit of {MAX_ISING_SITES} sites")
    phases = np.exp(-1j * ising_diagonal(params))
    desc = f"kicked Ising L={params.L} J={params.J!r} b={params.b!r} h={params.h!r} {params.boundary}"
    return KickedIsingMap(params, phases, desc)


def pauli(kind: str) -> np.ndarray:
    return {
        "i": np.eye(2, dtype=complex),
        "x": np.array([[0, 1], [1, 0]], dtype=complex),
        "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
        "z": np.array([[1, 0], [0, -1]], dtype=complex),
    }[kind.lower()]


def site_operator(L: int, site: int, kind: str = "z") -> DenseOperator:
    """Pauli ``kind`` acting on ``site`` of an L-site chain."""
    if not 0 <= site < L:
        raise ValueError(f"site {site} outside chain of length {L}")
    if kind.lower() == "z":
        diag = _ising_spins(L)[:, site].astype(complex)
        return DenseOperator(np.diag(diag), hermitian=True, unitary=True, label=f"z{site}")
    out = np.eye(1, dtype=complex)
    for j in range(L):
        out = np.kron(out, pauli(kind) if j == site else np.eye(2))
    return DenseOperator(out, hermitian=True, unitary=True, label=f"{kind}{site}")


def kicked_ising_parts(params: KickedIsingParams) -> tuple[DenseOperator, DenseOperator]:
    """The two Hamiltonian parts (Ising + longitudinal field, transverse kick) whose sum is the period average."""
    if params.L > MAX_ISING_SITES:
        raise InvalidDimensionError(f"L={params.L} exceeds the dense limit of {MAX_ISING_SITES} sites")
    dim = params.dim
    hz = np.diag(ising_diagonal(params)).astype(complex)
    hx = np.zeros((dim, dim), dtype=complex)
    idx = np.arange(dim)
    for site in range(params.L):
        hx[idx ^ (1 << (params.L - 1 - site)), idx] += params.b
    return (DenseOperator(hz, hermitian=True, label="H_zz"), DenseOperator(hx, hermitian=True, label="H_x"))


def goe_hamiltonian(dim: int, rng) -> DenseOperator:
    """Real symmetric GOE matrix, off-diagonal variance 1/dim, diagonal variance 2/dim (semicircle radius 2)."""
    check_dim(dim)
    if dim < 2:
        raise InvalidDimensionError("GOE needs dim >= 2")
    gen = as_generator(rng)
    a = gen.standard_normal((dim, dim))
    h = (a + a.T) / np.sqrt(2 * dim)
    return DenseOperator(h.astype(complex), hermitian=True, label=f"GOE({dim})")


def global_spin_flip(L: int) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for _ in range(L):
        out = np.kron(out, pauli("x"))
    return out


__all__ = [
    "CAT_LYAPUNOV",
    "CatMapParams",
    "KickedIsingParams",
    "FloquetMap",
    "FactoredCatMap",
    "KickedIsingMap",
    "catmap_quantum",
    "catmap_classical_step",
    "catmap_tangent",
    "cat_kick_phases",
    "cat_potential",
    "linear_cat_unitary",
    "kicked_ising",
    "kicked_ising_parts",
    "site_operator",
    "goe_hamiltonian",
    "global_spin_flip",
    "check_same_dim",
]
