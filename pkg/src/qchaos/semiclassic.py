"""Classical oracles: Benettin Lyapunov exponents and the dephasing-representation echo."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import TimeSeries
from .hilbert import RngStream, as_generator
from .models import CAT_MATRIX, CatMapParams, cat_potential, catmap_classical_step, catmap_tangent

DEFAULT_TRANSIENT = 100


@dataclass(frozen=True)
class PhasePoint:
    q: float
    p: float

    def __post_init__(self):
        object.__setattr__(self, "q", self.q % 1.0)
        object.__setattr__(self, "p", self.p % 1.0)


@dataclass(frozen=True)
class LyapunovResult:
    lambda_: float
    n_steps: int
    n_transient: int
    seed: int | None
    stderr: float

    def __post_init__(self):
        if not math.isfinite(self.lambda_):
            raise ValueError("Lyapunov exponent is not finite")


class TorusMap:
    """Area-preserving torus map with its tangent map; the default is the perturbed cat map."""

    def __init__(self, step, tangent):
        self.step = step
        self.tangent = tangent

    @classmethod
    def cat(cls, kappa: float) -> "TorusMap":
        return cls(lambda pt: catmap_classical_step(pt, kappa), lambda pt: catmap_tangent(pt, kappa))

    @classmethod
    def rotation(cls, alpha: float, beta: float) -> "TorusMap":
        """Rigid translation (q, p) -> (q + alpha, p + beta); an isometry with zero exponent."""
        return cls(lambda pt: ((pt[0] + alpha) % 1, (pt[1] + beta) % 1), lambda pt: np.eye(2))


def _torus_map(map_params) -> TorusMap:
    if isinstance(map_params, TorusMap):
        return map_params
    if isinstance(map_params, CatMapParams):
        return TorusMap.cat(map_params.kappa)
    if isinstance(map_params, (int, float)):
        return TorusMap.cat(float(map_params))
    raise TypeError(f"cannot build a torus map from {type(map_params).__name__}")


def lyapunov_exponent(map_params, rng, n_steps: int = 100_000,
                      n_transient: int = DEFAULT_TRANSIENT, n_blocks: int = 20) -> LyapunovResult:
    """Benettin estimate: tangent vector renormalized every step, log growth averaged after a burn-in.

    ``stderr`` comes from the spread of ``n_blocks`` block means.
    """
    if n_steps < 1000:
        raise ValueError("n_steps must be >= 1000")
    tmap = _torus_map(map_params)
    gen = as_generator(rng)
    seed = rng.seed if isinstance(rng, RngStream) else None
    q, p = gen.random(2)
    pt = (float(q), float(p))
    v = np.array([1.0, 0.0]) + 1e-3 * gen.standard_normal(2)
    v /= np.linalg.norm(v)
    logs = np.empty(n_steps)
    for n in range(n_transient + n_steps):
        v = tmap.tangent(pt) @ v
        pt = tmap.step(pt)
        growth = np.linalg.norm(v)
        v /= growth
        if n >= n_transient:
            logs[n - n_transient] = math.log(growth)
    blocks = np.array([b.mean() for b in np.array_split(logs, n_blocks)])
    return LyapunovResult(float(logs.mean()), n_steps, n_transient, seed,
                          float(blocks.std(ddof=1) / math.sqrt(n_blocks)))


def monodromy_exponent(matrix=CAT_MATRIX) -> float:
    """log of the largest |eigenvalue| of a linear torus map."""
    return float(np.log(np.max(np.abs(np.linalg.eigvals(np.array(matrix, dtype=float))))))


def coherent_wigner_sampler(q0: float, p0: float, hbar: float):
    """Sampler of the Gaussian Wigner density of a coherent state (variance hbar/2 per axis)."""
    sigma = math.sqrt(hbar / 2)

    def sample(gen: np.random.Generator, n: int):
        q = (q0 + sigma * gen.standard_normal(n)) % 1.0
        p = (p0 + sigma * gen.standard_normal(n)) % 1.0
        return q, p

    return sample


@dataclass(frozen=True)
class DephasingSeries:
    times: np.ndarray
    m: np.ndarray
    fidelity: np.ndarray
    stderr: np.ndarray
    stderr_m: np.ndarray
    n_samples: int
    seed: int | None

    def as_timeseries(self) -> TimeSeries:
        return TimeSeries(self.times, self.fidelity, {"n_samples": self.n_samples, "seed": self.seed})


def dephasing_echo(map_params: CatMapParams, kappa: float, W0_sampler, n_samples: int, t_max: int,
                   rng, hbar: float | None = None, potential=cat_potential) -> DephasingSeries:
    """Monte Carlo m(t) = < exp(-i dR / hbar) > over the initial Wigner density.

    Trajectories follow the unperturbed map (kick ``map_params.kappa``); the action difference
    is dR = -kappa * sum_{tau < t} potential(q_tau), one kick evaluation per step at the pre-kick
    position. ``stderr`` is the delta-method standard error of |m|^2.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    hbar = map_params.hbar if hbar is None else hbar
    gen = as_generator(rng)
    seed = rng.seed if isinstance(rng, RngStream) else None
    q, p = W0_sampler(gen, n_samples)
    action = np.zeros(n_samples)
    m = np.empty(t_max + 1, dtype=complex)
    se_fid = np.empty(t_max + 1)
    se_m = np.empty(t_max + 1)
    for t in range(t_max + 1):
        z = np.exp(-1j * action / hbar)
        mean = z.mean()
        m[t] = mean
        se_m[t] = math.sqrt(max(np.mean(np.abs(z - mean) ** 2), 0.0) / n_samples)
        amp = abs(mean)
        if amp > 0:
            proj = np.real(z * np.conj(mean) / amp)
            se_fid[t] = 2 * amp * proj.std() / math.sqrt(n_samples)
        else:
            se_fid[t] = se_m[t] ** 2
        if t < t_max:
            action -= kappa * potential(q)
            q, p = catmap_classical_step((q, p), map_params.kappa)
    return DephasingSeries(np.arange(t_max + 1, dtype=float), m, np.abs(m) ** 2, se_fid, se_m, n_samples, seed)
