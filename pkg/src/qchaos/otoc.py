"""Out-of-time-ordered correlators: F(t), squared commutator C(t), higher orders, light cones, plateaus."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .analysis import TimeSeries, tail_values
from .hilbert import DenseOperator, RngStream, as_generator, check_same_dim, is_hermitian, random_states
from .models import FloquetMap, KickedIsingParams, kicked_ising, site_operator
from .propagate import HamiltonianPropagator, as_propagator

EXACT_MAX_DIM = 2048


@dataclass(frozen=True)
class RhoSpec:
    """Averaging state: infinite temperature (I/D), a pure state, a thermal state e^{-beta H}/Z or an explicit density."""

    kind: str = "infinite"
    psi: np.ndarray | None = None
    beta: float | None = None
    hamiltonian: DenseOperator | None = None
    density: np.ndarray | None = None

    @classmethod
    def infinite(cls) -> "RhoSpec":
        return cls("infinite")

    @classmethod
    def pure(cls, psi) -> "RhoSpec":
        vec = np.asarray(getattr(psi, "amplitudes", psi), dtype=complex)
        return cls("pure", psi=vec / np.linalg.norm(vec))

    @classmethod
    def thermal(cls, beta: float, hamiltonian: DenseOperator) -> "RhoSpec":
        if beta < 0:
            raise ValueError("beta must be >= 0")
        if not hamiltonian.hermitian:
            raise ValueError("thermal state needs a hermitian Hamiltonian")
        return cls("thermal", beta=float(beta), hamiltonian=hamiltonian)

    @classmethod
    def from_density(cls, rho) -> "RhoSpec":
        rho = np.asarray(rho, dtype=complex)
        if not is_hermitian(rho):
            raise ValueError("density matrix is not hermitian")
        return cls("density", density=rho)

    @property
    def is_infinite(self) -> bool:
        return self.kind == "infinite" or (self.kind == "thermal" and self.beta == 0)

    def describe(self) -> str:
        if self.kind == "thermal":
            return f"thermal(beta={self.beta!r})"
        return self.kind

    def factor(self, dim: int) -> np.ndarray | None:
        """S with rho = S S^dag; None stands for the infinite-temperature I/sqrt(D)."""
        if self.is_infinite:
            return None
        if self.kind == "pure":
            check_same_dim(dim, self.psi.shape[0])
            return self.psi[:, None]
        if self.kind == "thermal":
            check_same_dim(dim, self.hamiltonian.dim)
            e, v = np.linalg.eigh(self.hamiltonian.entries)
            w = np.exp(-self.beta * (e - e.min()))
            w /= w.sum()
            return v * np.sqrt(w)
        check_same_dim(dim, self.density.shape[0])
        e, v = np.linalg.eigh(self.density)
        if e.min() < -1e-12:
            raise ValueError("density matrix is not positive semidefinite")
        e = np.clip(e, 0, None)
        return v * np.sqrt(e / e.sum())


@dataclass(frozen=True)
class OtocSeries:
    """F(t) = <W(t)^dag V^dag W(t) V>, C(t) = <|[W(t), V]|^2> and the time-ordered terms D, I."""

    times: np.ndarray
    F: np.ndarray
    C: np.ndarray
    D: np.ndarray
    I: np.ndarray
    rho: str
    operators: tuple = ("V", "W")
    dim: int = 0
    estimator: str = "exact"
    n_samples: int | None = None

    @property
    def C_decomposed(self) -> np.ndarray:
        return self.D + self.I - 2 * self.F.real

    def as_timeseries(self, which: str = "C") -> TimeSeries:
        return TimeSeries(self.times, getattr(self, which), {"dim": self.dim, "rho": self.rho})


def _products(V: np.ndarray, v_diag, Wt: np.ndarray):
    """(W V, V W) with a fast path for diagonal V."""
    if v_diag is not None:
        return Wt * v_diag[None, :], v_diag[:, None] * Wt
    return Wt @ V, V @ Wt


def _rho_dot(a: np.ndarray, b: np.ndarray, S, dim: int) -> complex:
    """tr(rho a^dag b) for rho = S S^dag (S None: rho = I/dim)."""
    if S is None:
        return complex(np.vdot(a, b) / dim)
    return complex(np.vdot(a @ S, b @ S))


def _vec_dot(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.vdot(a, b))


def _times(prop, t_grid) -> np.ndarray:
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size > 1 and np.any(np.diff(t_grid) < 0):
        raise ValueError("time grid must be non-decreasing")
    if isinstance(prop, FloquetMap):
        if np.any(t_grid != np.round(t_grid)) or np.any(t_grid < 0):
            raise ValueError("Floquet times must be non-negative integers")
    return t_grid


def heisenberg_stream(prop, W: np.ndarray, t_grid):
    """Yield W(t) for each t; Floquet maps are stepped incrementally (U^dag W U per step)."""
    if isinstance(prop, FloquetMap):
        cur, n = np.array(W, dtype=complex), 0
        for t in t_grid:
            while n < int(t):
                cur = prop.conjugate(cur)
                n += 1
            yield cur
    else:
        v, e = prop.vectors, prop.energies
        rot = v.conj().T @ W @ v
        gaps = np.subtract.outer(e, e)
        for t in t_grid:
            yield v @ (rot * np.exp(1j * gaps * t)) @ v.conj().T


def _diag_or_none(op: DenseOperator):
    return np.diagonal(op.entries).copy() if op.is_diagonal else None


def _forward(prop, x, t):
    if isinstance(prop, FloquetMap):
        for _ in range(int(t)):
            x = prop.apply(x)
        return x
    return prop.evolve(x, t)


def _backward(prop, x, t):
    if isinstance(prop, FloquetMap):
        for _ in range(int(t)):
            x = prop.apply_adjoint(x)
        return x
    return prop.evolve(x, -t)


def otoc(V: DenseOperator, W: DenseOperator, evolver, t_grid, rho_spec: RhoSpec = RhoSpec(),
         estimator: str = "auto", n_samples: int = 32, rng=None) -> OtocSeries:
    """Exact OTOC series.

    C is computed directly as tr(rho K^dag K), K = [W(t), V]; D, I and F come from the same
    products so that C = D + I - 2 Re F can be cross-checked. ``estimator="random"`` (default
    for dim > 2048 at infinite temperature) replaces the trace by an average over ``n_samples``
    Haar-random states propagated as vectors; pure states always take the vector route.
    """
    prop = as_propagator(evolver)
    check_same_dim(V.dim, W.dim)
    check_same_dim(V.dim, prop.dim)
    dim = V.dim
    times = _times(prop, t_grid)
    if estimator == "auto":
        estimator = "random" if (rho_spec.is_infinite and dim > EXACT_MAX_DIM) else "exact"
    if estimator not in ("exact", "random"):
        raise ValueError(f"unknown estimator {estimator!r}")
    if estimator == "random" and not rho_spec.is_infinite:
        raise ValueError("the random-state estimator only covers infinite temperature")
    v_diag = _diag_or_none(V)
    Vm = V.entries
    out = {k: np.empty(times.size, dtype=complex if k == "F" else float) for k in "FCDI"}

    if estimator == "random" or rho_spec.kind == "pure":
        if estimator == "random":
            S = random_states(dim, n_samples, as_generator(rng)) / math.sqrt(n_samples)
        else:
            S = rho_spec.factor(dim)
        VS = v_diag[:, None] * S if v_diag is not None else Vm @ S
        Wm = W.entries
        for i, t in enumerate(times):
            wts = _backward(prop, Wm @ _forward(prop, S, t), t)
            wtvs = _backward(prop, Wm @ _forward(prop, VS, t), t)
            vws = v_diag[:, None] * wts if v_diag is not None else Vm @ wts
            k = wtvs - vws
            out["C"][i] = _vec_dot(k, k).real
            out["F"][i] = _vec_dot(vws, wtvs)
            out["D"][i] = _vec_dot(vws, vws).real
            out["I"][i] = _vec_dot(wtvs, wtvs).real
    else:
        S = rho_spec.factor(dim)
        for i, Wt in enumerate(heisenberg_stream(prop, W.entries, times)):
            wv, vw = _products(Vm, v_diag, Wt)
            k = wv - vw
            out["C"][i] = _rho_dot(k, k, S, dim).real
            out["F"][i] = _rho_dot(vw, wv, S, dim)
            out["D"][i] = _rho_dot(vw, vw, S, dim).real
            out["I"][i] = _rho_dot(wv, wv, S, dim).real
    return OtocSeries(times, out["F"], out["C"], out["D"], out["I"], rho_spec.describe(),
                      (V.label or "V", W.label or "W"), dim, estimator,
                      n_samples if estimator == "random" else None)


def otoc_higher(V: DenseOperator, W: DenseOperator, evolver, t_grid, n: int,
                rho_spec: RhoSpec = RhoSpec()) -> TimeSeries:
    """F_n(t) = tr(rho (W(t) V)^n), exact."""
    if n < 1:
        raise ValueError("order n must be >= 1")
    prop = as_propagator(evolver)
    check_same_dim(V.dim, W.dim)
    check_same_dim(V.dim, prop.dim)
    dim = V.dim
    times = _times(prop, t_grid)
    S = rho_spec.factor(dim)
    v_diag = _diag_or_none(V)
    vals = np.empty(times.size, dtype=complex)
    for i, Wt in enumerate(heisenberg_stream(prop, W.entries, times)):
        wv, _ = _products(V.entries, v_diag, Wt)
        if S is None:
            vals[i] = np.trace(np.linalg.matrix_power(wv, n)) / dim
        else:
            x = S
            for _ in range(n):
                x = wv @ x
            vals[i] = np.trace(S.conj().T @ x)
    return TimeSeries(times, vals, {"n": n, "dim": dim, "rho": rho_spec.describe()})


def torus_surrogates(N: int) -> tuple[DenseOperator, DenseOperator]:
    """sqrt(2) cos(2 pi q) and its discrete-Fourier conjugate sqrt(2) cos(2 pi p); traceless, tr(X^2) = N."""
    j = np.arange(N)
    v = np.sqrt(2) * np.cos(2 * np.pi * j / N)
    V = DenseOperator(np.diag(v).astype(complex), hermitian=True, label="sqrt2 cos(2pi q)")
    F = np.fft.fft(np.eye(N), axis=0) / np.sqrt(N)
    w = F.conj().T @ np.diag(v) @ F
    w = (w + w.conj().T) / 2
    W = DenseOperator(w, hermitian=True, label="sqrt2 cos(2pi p)")
    return V, W


@dataclass
class SaturationStats:
    mean_C: float
    mean_F: complex
    var_C: float
    haar_reference: float
    mean_abs_F: float = 0.0


def haar_saturation(dim: int) -> float:
    return 2.0 * (1.0 - 1.0 / dim)


def saturation_stats(series: OtocSeries, tail_window, scrambling_time: float | None = None) -> SaturationStats:
    """Tail means of C and F and the variance of C, with the Haar plateau 2(1 - 1/D) attached."""
    if np.isscalar(tail_window):
        n = max(1, int(round(float(tail_window) * series.times.size)))
        start = series.times[-n]
    else:
        start = tail_window[0]
    if scrambling_time is not None and start < scrambling_time:
        raise ValueError(f"tail window starts at {start} before the scrambling time {scrambling_time}")
    c = np.real(tail_values(series.as_timeseries("C"), tail_window))
    f = tail_values(series.as_timeseries("F"), tail_window)
    return SaturationStats(float(c.mean()), complex(f.mean()), float(c.var()),
                           haar_saturation(series.dim), float(np.abs(f.mean())))


@dataclass
class LightconeData:
    distances: np.ndarray
    arrival_times: np.ndarray
    threshold: float
    butterfly_velocity: float = math.nan
    r_squared: float = math.nan
    absent: list = field(default_factory=list)
    curves: dict = field(default_factory=dict)
    times: np.ndarray | None = None


def lightcone(model: KickedIsingParams, site_op: str = "z", threshold: float = 0.5, t_max: int = 12,
              estimator: str = "auto", n_samples: int = 16, seed: int = 0) -> LightconeData:
    """Arrival time of C_l(t) at threshold x (Haar plateau) for V at site 0 and W at site l = 1..L/2.

    v_b is the inverse slope of a linear fit of arrival time against distance.
    """
    U = kicked_ising(model)
    L = model.L
    V = site_operator(L, 0, site_op)
    times = np.arange(t_max + 1)
    sat = haar_saturation(U.dim)
    dists = np.arange(1, L // 2 + 1)
    arrivals = np.full(dists.size, np.nan)
    curves = {}
    rng = RngStream(seed)
    for i, l in enumerate(dists):
        W = site_operator(L, int(l), site_op)
        s = otoc(V, W, U, times, RhoSpec.infinite(), estimator, n_samples, rng.spawn(int(l)))
        curves[int(l)] = s.C
        hit = np.nonzero(s.C >= threshold * sat)[0]
        if hit.size:
            arrivals[i] = times[hit[0]]
    ok = ~np.isnan(arrivals)
    data = LightconeData(dists, arrivals, threshold, absent=[int(d) for d in dists[~ok]],
                         curves=curves, times=times)
    if ok.sum() >= 2:
        res = stats.linregress(dists[ok], arrivals[ok])
        data.butterfly_velocity = 1.0 / res.slope if res.slope else math.inf
        data.r_squared = float(res.rvalue**2)
    return data


def sign_operators(dim: int, rng) -> tuple[DenseOperator, DenseOperator]:
    """Traceless hermitian-unitary pair: V = diag(+1..., -1...) and W = O V O^T for a Haar orthogonal O."""
    if dim % 2:
        raise ValueError("traceless +-1 operators need an even dimension")
    s = np.concatenate([np.ones(dim // 2), -np.ones(dim // 2)])
    V = DenseOperator(np.diag(s).astype(complex), hermitian=True, unitary=True, label="sign")
    q, r = np.linalg.qr(as_generator(rng).standard_normal((dim, dim)))
    q = q * np.sign(np.diagonal(r))
    w = (q * s) @ q.T
    w = (w + w.T) / 2
    return V, DenseOperator(w.astype(complex), hermitian=True, unitary=True, label="rotated sign")
