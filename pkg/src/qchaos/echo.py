"""Loschmidt echo: protocol, forward/overlap identity, saturation and decay-rate sweeps."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import FitError, FitResult, NoWindowError, TimeSeries, auto_window, fit_decay
from .hilbert import DenseOperator, QuantumState, RngStream, check_same_dim, coherent_amplitudes, random_states
from .models import FloquetMap
from .propagate import HamiltonianPropagator, as_propagator


class EchoRunError(RuntimeError):
    def __init__(self, kappa, cause):
        super().__init__(f"echo run failed at kappa={kappa!r}: {cause}")
        self.kappa = kappa
        self.cause = cause


@dataclass(frozen=True)
class EchoSeries(TimeSeries):
    """M(t) samples. M(0) = 1 and 0 <= M <= 1 up to 1e-12."""

    def __post_init__(self):
        super().__post_init__()
        v = np.real(self.values)
        if v.size and abs(v[0] - 1.0) > 1e-12 and self.times[0] == 0:
            raise ValueError(f"echo must start at 1, got {v[0]!r}")
        if np.any(v < -1e-12) or np.any(v > 1 + 1e-12):
            raise ValueError("echo values outside [0, 1]")


@dataclass(frozen=True)
class SaturationResult:
    mean: float
    variance: float
    crossover_time: float | None = None


@dataclass
class RateCurve:
    kappas: np.ndarray
    rates: np.ndarray
    windows: list
    residuals: np.ndarray
    fits: list = field(default_factory=list)
    series: list = field(default_factory=list)

    def __post_init__(self):
        self.kappas = np.asarray(self.kappas, dtype=float)
        self.rates = np.asarray(self.rates, dtype=float)
        self.residuals = np.asarray(self.residuals, dtype=float)
        if not (self.kappas.size == self.rates.size == len(self.windows) == self.residuals.size):
            raise ValueError("rate curve columns differ in length")


def _state_block(psi0, dim: int) -> np.ndarray:
    if isinstance(psi0, QuantumState):
        block = psi0.amplitudes[:, None]
    elif isinstance(psi0, (list, tuple)):
        block = np.stack([p.amplitudes if isinstance(p, QuantumState) else np.asarray(p) for p in psi0], axis=1)
    else:
        block = np.asarray(psi0, dtype=complex)
        if block.ndim == 1:
            block = block[:, None]
    check_same_dim(dim, block.shape[0])
    return block.astype(complex)


def _pair(U1, U2):
    p1, p2 = as_propagator(U1), as_propagator(U2)
    if isinstance(p1, FloquetMap) != isinstance(p2, FloquetMap):
        raise ValueError("cannot compare a Floquet map with a Hamiltonian")
    check_same_dim(p1.dim, p2.dim)
    return p1, p2


def _overlaps(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # normalized so that rounding in the norms cannot push M past 1
    na = np.sum(np.conj(a) * a, axis=0).real
    nb = np.sum(np.conj(b) * b, axis=0).real
    return np.abs(np.sum(np.conj(b) * a, axis=0)) ** 2 / (na * nb)


def loschmidt_echo(U1, U2, psi0, steps_or_tgrid, metadata: dict | None = None) -> EchoSeries:
    """M(t) = |<psi2(t)|psi1(t)>|^2 with both states evolved forward.

    ``psi0`` may be one state or an ensemble (list or (dim, k) block); ensembles are
    averaged arithmetically.
    """
    p1, p2 = _pair(U1, U2)
    block = _state_block(psi0, p1.dim)
    meta = {"dim": p1.dim, "ensemble": block.shape[1]}
    meta.update(metadata or {})
    if isinstance(p1, FloquetMap):
        steps = int(steps_or_tgrid)
        if steps < 0:
            raise ValueError("steps must be >= 0")
        a = block.copy()
        b = block.copy()
        vals = np.empty(steps + 1)
        vals[0] = np.mean(_overlaps(a, b))
        for n in range(1, steps + 1):
            a = p1.apply(a)
            b = p2.apply(b)
            vals[n] = np.mean(_overlaps(a, b))
        times = np.arange(steps + 1, dtype=float)
    else:
        times = np.asarray(steps_or_tgrid, dtype=float)
        vals = np.array([np.mean(_overlaps(p1.evolve(block, t), p2.evolve(block, t))) for t in times])
    return EchoSeries(times, np.clip(vals, 0.0, 1.0), meta)


def echo_forward_overlap_identity(U1, U2, psi0, t) -> tuple[float, float]:
    """(protocol echo |<psi0|U2^-t U1^t|psi0>|^2, forward overlap |<U2^t psi0|U1^t psi0>|^2)."""
    p1, p2 = _pair(U1, U2)
    psi = _state_block(psi0, p1.dim)[:, 0]
    if isinstance(p1, FloquetMap):
        n = int(t)
        fwd1, fwd2 = psi, psi
        for _ in range(n):
            fwd1 = p1.apply(fwd1)
            fwd2 = p2.apply(fwd2)
        back = fwd1
        for _ in range(n):
            back = p2.apply_adjoint(back)
    else:
        fwd1 = p1.evolve(psi, t)
        fwd2 = p2.evolve(psi, t)
        back = p2.evolve(fwd1, -t)
    echo = abs(np.vdot(psi, back)) ** 2
    overlap = abs(np.vdot(fwd2, fwd1)) ** 2
    return float(echo), float(overlap)


def echo_saturation(series: TimeSeries, tail_fraction: float = 0.5, rate: float | None = None,
                    dim: int | None = None, min_samples: int = 20) -> SaturationResult:
    """Tail mean and variance; with a decay ``rate`` also the crossover time ln(dim)/rate."""
    n = int(round(tail_fraction * len(series)))
    if n < min_samples:
        raise ValueError(f"tail holds {n} samples, need {min_samples}")
    tail = np.real(series.values[-n:])
    dim = dim or series.metadata.get("dim")
    ts = None
    if rate is not None and rate > 0 and dim:
        ts = math.log(dim) / rate
    return SaturationResult(float(tail.mean()), float(tail.var()), ts)


def hamiltonian_eta(H1: DenseOperator, H2: DenseOperator, psi0) -> float:
    """Parabolic-decay scale: sqrt of the (ensemble-mean) variance of H2 - H1 in psi0."""
    check_same_dim(H1.dim, H2.dim)
    block = _state_block(psi0, H1.dim)
    dh = H2.entries - H1.entries
    x = dh @ block
    mean = np.sum(np.conj(block) * x, axis=0).real
    sq = np.sum(np.abs(x) ** 2, axis=0)
    return float(math.sqrt(max(np.mean(sq - mean**2), 0.0)))


def map_eta(U1: FloquetMap, U2: FloquetMap) -> float:
    """One-step curvature scale of a pair of maps, sqrt(1 - M(1)) averaged over Haar-random states.

    With X = U2^dag U1, the Haar average of |<psi|X|psi>|^2 is (|tr X|^2 + N) / (N (N + 1)).
    """
    check_same_dim(U1.dim, U2.dim)
    n = U1.dim
    x = U2.apply_adjoint(U1.to_dense())
    m1 = (abs(np.trace(x)) ** 2 + n) / (n * (n + 1))
    return float(math.sqrt(max(1.0 - m1, 0.0)))


def curvature_time(U1, U2, psi0=None) -> float:
    p1, p2 = _pair(U1, U2)
    if isinstance(p1, FloquetMap):
        eta = map_eta(p1, p2)
    else:
        eta = hamiltonian_eta(p1.H, p2.H, psi0)
    return math.inf if eta == 0 else 1.0 / eta


def torus_centers(count: int, rng) -> np.ndarray:
    gen = rng.generator if isinstance(rng, RngStream) else rng
    return gen.random((count, 2))


@dataclass(frozen=True)
class EchoProtocol:
    """Sweep settings. U1 = builder(base_kappa), U2 = builder(base_kappa + kappa)."""

    steps: int = 40
    n_states: int = 50
    seed: int = 0
    base_kappa: float = 0.0
    initial: str = "coherent"
    guard: float = 3.0
    min_fit_points: int = 3
    workers: int = 1


def initial_ensemble(dim: int, protocol: EchoProtocol) -> np.ndarray:
    rng = RngStream(protocol.seed)
    if protocol.initial == "coherent":
        centers = torus_centers(protocol.n_states, rng)
        return np.stack([coherent_amplitudes(dim, q, p) for q, p in centers], axis=1)
    if protocol.initial == "random":
        return random_states(dim, protocol.n_states, rng)
    raise ValueError(f"unknown initial ensemble {protocol.initial!r}")


def _sweep_point(builder, kappa: float, protocol: EchoProtocol, block_cache: dict):
    U1 = builder(protocol.base_kappa)
    U2 = builder(protocol.base_kappa + kappa)
    dim = U1.dim
    if dim not in block_cache:
        block_cache[dim] = initial_ensemble(dim, protocol)
    block = block_cache[dim]
    series = loschmidt_echo(U1, U2, block, protocol.steps,
                            {"kappa": kappa, "base_kappa": protocol.base_kappa, "seed": protocol.seed})
    tc = curvature_time(U1, U2, block)
    try:
        window = auto_window(series, 1.0 / dim, tc, protocol.guard, protocol.min_fit_points)
    except NoWindowError:
        if np.max(np.abs(series.values - 1.0)) <= 1e-12:
            # no decay at all: a flat fit over the whole run
            window = (float(series.times[0]), float(series.times[-1]))
            flat = FitResult("exponential", (0.0, 1.0), window, 0.0, 1.0, len(series))
            return series, flat, None, tc
        raise
    exp_fit = fit_decay(series, "exponential", window, protocol.min_fit_points)
    try:
        gauss_fit = fit_decay(series, "gaussian", window, protocol.min_fit_points)
    except FitError:
        gauss_fit = None
    return series, exp_fit, gauss_fit, tc


def rate_sweep(model_builder, kappa_list, protocol: EchoProtocol = EchoProtocol()) -> RateCurve:
    """Ensemble-averaged echo decay rate for each kappa, fitted on the automatic window.

    ``model_builder(kappa)`` returns a FloquetMap. The exponential rate is the reported
    Gamma; a Gaussian-in-t fit of the same window is kept alongside in ``fits``.
    """
    kappas = sorted(float(k) for k in kappa_list)
    if len(kappas) < 3:
        raise ValueError("rate sweep needs at least 3 kappa values")
    cache: dict = {}

    def run(kappa):
        try:
            return _sweep_point(model_builder, kappa, protocol, cache)
        except Exception as exc:  # noqa: BLE001 - re-raised with kappa attached
            raise EchoRunError(kappa, exc) from exc

    if protocol.workers > 1:
        # fill the state cache once so threads share a single ensemble
        cache[model_builder(protocol.base_kappa).dim] = initial_ensemble(
            model_builder(protocol.base_kappa).dim, protocol)
        with ThreadPoolExecutor(protocol.workers) as pool:
            results = list(pool.map(run, kappas))
    else:
        results = [run(k) for k in kappas]

    rates, windows, resid, fits, series = [], [], [], [], []
    for kappa, (s, exp_fit, gauss_fit, tc) in zip(kappas, results):
        rates.append(max(exp_fit.rate, 0.0))
        windows.append(exp_fit.window)
        resid.append(exp_fit.residual)
        fits.append({
            "kappa": kappa,
            "curvature_time": tc,
            "exponential": exp_fit.to_dict(),
            "gaussian": gauss_fit.to_dict() if gauss_fit else None,
        })
        series.append(s)
    return RateCurve(np.array(kappas), np.array(rates), windows, np.array(resid), fits, series)
