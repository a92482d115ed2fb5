"""Hilbert-space primitives: states, dense operators, inner products and seeded randomness."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RNG_ALGORITHM = "numpy.PCG64"


class InvalidDimensionError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class QuantumState:
    """Normalized amplitude vector. Construction rejects vectors whose norm is off by more than 1e-10."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.size == 0:
            raise InvalidDimensionError("state dimension must be >= 1")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state is not normalized (norm={norm!r})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vec) -> "QuantumState":
        vec = np.asarray(vec, dtype=complex).ravel()
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(vec / norm)

    @classmethod
    def basis(cls, dim: int, index: int) -> "QuantumState":
        check_dim(dim)
        vec = np.zeros(dim, dtype=complex)
        vec[index] = 1.0
        return cls(vec)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class DenseOperator:
    """Square complex matrix with optional hermitian/unitary flags.

    Flags are verified on construction (hermitian to 1e-12, unitary to 1e-10).
    Use :meth:`from_matrix` to detect them automatically.
    """

    entries: np.ndarray
    hermitian: bool = False
    unitary: bool = False
    label: str = ""

    def __post_init__(self):
        m = _frozen(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise InvalidDimensionError(f"operator must be a non-empty square matrix, got shape {m.shape}")
        object.__setattr__(self, "entries", m)
        if self.hermitian and not is_hermitian(m):
            raise ValueError("hermitian flag set but matrix is not hermitian to 1e-12")
        if self.unitary and not is_unitary(m):
            raise ValueError("unitary flag set but matrix is not unitary to 1e-10")

    @classmethod
    def from_matrix(cls, m, label: str = "") -> "DenseOperator":
        m = np.asarray(m, dtype=complex)
        return cls(m, hermitian=is_hermitian(m), unitary=is_unitary(m), label=label)

    @classmethod
    def identity(cls, dim: int) -> "DenseOperator":
        check_dim(dim)
        return cls(np.eye(dim), hermitian=True, unitary=True, label="I")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def is_diagonal(self) -> bool:
        m = self.entries
        return not np.any(m - np.diag(np.diagonal(m)))

    @property
    def dagger(self) -> "DenseOperator":
        return DenseOperator(self.entries.conj().T, self.hermitian, self.unitary, self.label + "^dag")

    def __matmul__(self, other):
        if isinstance(other, DenseOperator):
            check_same_dim(self.dim, other.dim)
            return DenseOperator.from_matrix(self.entries @ other.entries)
        if isinstance(other, QuantumState):
            check_same_dim(self.dim, other.dim)
            return self.entries @ other.amplitudes
        return self.entries @ other

    def apply(self, state: QuantumState) -> QuantumState:
        """Apply a unitary operator to a state."""
        if not self.unitary:
            raise ValueError("apply() requires a unitary operator")
        check_same_dim(self.dim, state.dim)
        return QuantumState(self.entries @ state.amplitudes)


@dataclass(frozen=True)
class RngStream:
    """Seeded random stream; identical (seed, algorithm) pairs give identical draws."""

    seed: int
    algorithm: str = RNG_ALGORITHM
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.algorithm != RNG_ALGORITHM:
            raise ValueError(f"unsupported RNG algorithm {self.algorithm!r}")
        seed = int(self.seed) & 0xFFFFFFFFFFFFFFFF
        object.__setattr__(self, "seed", seed)
        object.__setattr__(self, "_gen", np.random.Generator(np.random.PCG64(seed)))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def spawn(self, index: int) -> "RngStream":
        """Independent child stream keyed by ``index`` (order-independent)."""
        child = np.random.SeedSequence([self.seed, int(index)]).generate_state(1, dtype=np.uint64)[0]
        return RngStream(int(child), self.algorithm)

    def manifest(self) -> dict:
        return {"seed": self.seed, "algorithm": self.algorithm}


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return RngStream(0 if rng is None else int(rng)).generator
    raise TypeError(f"cannot use {type(rng).__name__} as a random stream")


def check_dim(dim: int) -> int:
    if int(dim) != dim or dim < 1:
        raise InvalidDimensionError(f"dimension must be a positive integer, got {dim!r}")
    return int(dim)


def check_same_dim(a: int, b: int) -> None:
    if a != b:
        raise DimensionMismatchError(f"dimension mismatch: {a} vs {b}")


def is_hermitian(m: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) < tol)


def is_unitary(m: np.ndarray, tol: float = 1e-10) -> bool:
    eye = np.eye(m.shape[0])
    return bool(np.max(np.abs(m.conj().T @ m - eye), initial=0.0) < tol)


def random_state(dim: int, rng) -> QuantumState:
    """Haar-random pure state from normalized i.i.d. complex Gaussians."""
    check_dim(dim)
    gen = as_generator(rng)
    vec = gen.standard_normal(dim) + 1j * gen.standard_normal(dim)
    return QuantumState.from_vector(vec)


def random_states(dim: int, count: int, rng) -> np.ndarray:
    """``count`` Haar-random states as the columns of a (dim, count) array."""
    check_dim(dim)
    gen = as_generator(rng)
    block = gen.standard_normal((dim, count)) + 1j * gen.standard_normal((dim, count))
    return block / np.linalg.norm(block, axis=0)


def coherent_amplitudes(dim: int, q0: float, p0: float) -> np.ndarray:
    # periodized Gaussian, variance hbar_eff/2 with hbar_eff = 1/(2 pi dim)
    x = np.arange(dim) / dim - q0
    n_images = int(np.ceil(np.sqrt(40.0 / (np.pi * dim)))) + 1
    amps = np.zeros(dim, dtype=complex)
    for m in range(-n_images, n_images + 1):
        xm = x + m
        amps += np.exp(-np.pi * dim * xm**2 + 2j * np.pi * dim * p0 * xm)
    return amps / np.linalg.norm(amps)


def coherent_state(dim: int, q0: float, p0: float) -> QuantumState:
    """Gaussian wave packet on the discrete torus centred at (q0, p0).

    Position eigenstates sit at q_j = j/dim and momentum eigenstates at
    p_k = k/dim (numpy FFT convention), so the packet is localized at the
    grid cell nearest (q0, p0).
    """
    check_dim(dim)
    if dim < 2:
        raise InvalidDimensionError("coherent states need dim >= 2")
    if not (0.0 <= q0 < 1.0 and 0.0 <= p0 < 1.0):
        raise ValueError("(q0, p0) must lie in [0, 1)")
    return QuantumState(coherent_amplitudes(dim, q0, p0))


def husimi(state: QuantumState) -> np.ndarray:
    """Husimi density |<q,p|psi>|^2 on the dim x dim grid, indexed [q, p]."""
    n = state.dim
    grid = np.arange(n) / n
    out = np.empty((n, n))
    for i, q in enumerate(grid):
        for j, p in enumerate(grid):
            out[i, j] = abs(np.vdot(coherent_amplitudes(n, q, p), state.amplitudes)) ** 2
    return out


def inner(a: QuantumState, b: QuantumState) -> complex:
    """<a|b>."""
    check_same_dim(a.dim, b.dim)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def op_inner(a: DenseOperator, b: DenseOperator) -> complex:
    """Infinite-temperature Frobenius product tr(A^dag B)/dim."""
    check_same_dim(a.dim, b.dim)
    return complex(np.vdot(a.entries, b.entries) / a.dim)


def op_norm(a: DenseOperator) -> float:
    return float(np.sqrt(op_inner(a, a).real))
