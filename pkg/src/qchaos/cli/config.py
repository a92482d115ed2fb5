"""Experiment configuration: TOML file -> validated ExperimentConfig.

Grammar (all keys optional unless noted)::

    experiment = "echo"          # required: echo | echo-sweep | otoc | otoc-lightcone |
                                 #           krylov | arnoldi | dephasing | lyapunov
    seed = 0
    output = "out"               # overridden by --out

    [model]                      # required
    kind = "catmap"              # catmap | kicked_ising | goe
    N = 512                      # catmap: even Hilbert dimension
    kappa = 0.0                  # catmap: kick strength of the reference map
    L = 10                       # kicked_ising: sites (<= 14)
    J = 0.785398...              # kicked_ising couplings (defaults: chaotic point)
    b = 0.785398...
    h = 0.4
    boundary = "periodic"        # periodic | open
    dim = 256                    # goe: matrix dimension

    [diagnostic]                 # experiment-specific, see DIAGNOSTIC_DEFAULTS
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..models import MAX_ISING_SITES

EXPERIMENTS = ("echo", "echo-sweep", "otoc", "otoc-lightcone", "krylov", "arnoldi", "dephasing", "lyapunov")
MODEL_KINDS = ("catmap", "kicked_ising", "goe")
SUPPORTED = {
    "echo": {"catmap", "kicked_ising", "goe"},
    "echo-sweep": {"catmap"},
    "otoc": {"catmap", "kicked_ising", "goe"},
    "otoc-lightcone": {"kicked_ising"},
    "krylov": {"kicked_ising", "goe"},
    "arnoldi": {"catmap", "kicked_ising"},
    "dephasing": {"catmap"},
    "lyapunov": {"catmap"},
}
MAX_GOE_DIM = 4096
MAX_CAT_DIM = 16384

MODEL_DEFAULTS = {
    "catmap": {"N": 512, "kappa": 0.0},
    "kicked_ising": {"L": 10, "J": math.pi / 4, "b": math.pi / 4, "h": 0.4, "boundary": "periodic"},
    "goe": {"dim": 256},
}

DIAGNOSTIC_DEFAULTS = {
    "echo": {"t_max": 40, "kappa": 0.01, "n_states": 50, "initial": "coherent"},
    "echo-sweep": {"t_max": 40, "kappas": [0.14, 0.17, 0.2, 0.24, 0.28], "n_states": 50,
                   "initial": "coherent", "min_fit_points": 3},
    "otoc": {"t_max": 20, "dt": 1.0, "operators": ["z", "z"], "sites": [0, 1], "n": 1,
             "rho": "infinite", "beta": 0.0, "estimator": "auto", "n_samples": 32},
    "otoc-lightcone": {"t_max": 12, "operator": "z", "threshold": 0.5, "estimator": "auto", "n_samples": 16},
    "krylov": {"mode": "state", "max_k": 64, "t_max": 20.0, "n_times": 201, "operator": "z", "site": 0},
    "arnoldi": {"max_k": 100},
    "dephasing": {"t_max": 8, "kappa": 0.002, "n_samples": 100000, "q0": 0.3, "p0": 0.6},
    "lyapunov": {"kappas": [0.0], "n_steps": 100000, "n_transient": 100},
}


class ConfigError(ValueError):
    def __init__(self, diagnostics):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = list(diagnostics)


@dataclass
class ExperimentConfig:
    experiment: str
    model: dict
    diagnostic: dict
    seed: int = 0
    output: str = "out"
    raw: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.model["kind"]


def load_toml(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _check_model(kind: str, model: dict) -> list[str]:
    out = []
    if kind == "catmap":
        N = model["N"]
        if not _is_int(N) or N < 2:
            out.append(f"model.N: must be an integer >= 2, got {N!r}")
        elif N % 2:
            out.append(f"model.N: cat map quantization needs even N, got {N}")
        elif N > MAX_CAT_DIM:
            out.append(f"model.N: {N} exceeds the supported maximum {MAX_CAT_DIM}")
        if not _is_num(model["kappa"]):
            out.append("model.kappa: must be a number")
    elif kind == "kicked_ising":
        L = model["L"]
        if not _is_int(L) or L < 2:
            out.append(f"model.L: must be an integer >= 2, got {L!r}")
        elif L > MAX_ISING_SITES:
            out.append(f"model.L: L={L} gives dimension 2^{L}, beyond dense feasibility (L <= {MAX_ISING_SITES})")
        for key in ("J", "b", "h"):
            if not _is_num(model[key]):
                out.append(f"model.{key}: must be a number")
        if model["boundary"] not in ("periodic", "open"):
            out.append(f"model.boundary: must be 'periodic' or 'open', got {model['boundary']!r}")
    elif kind == "goe":
        d = model["dim"]
        if not _is_int(d) or d < 2:
            out.append(f"model.dim: must be an integer >= 2, got {d!r}")
        elif d > MAX_GOE_DIM:
            out.append(f"model.dim: {d} exceeds dense feasibility ({MAX_GOE_DIM})")
    return out


def _check_diagnostic(exp: str, kind: str, model: dict, diag: dict) -> list[str]:
    out = []

    def positive_int(key, minimum=1):
        v = diag[key]
        if not _is_int(v) or v < minimum:
            out.append(f"diagnostic.{key}: must be an integer >= {minimum}, got {v!r}")

    if "t_max" in diag and exp != "krylov":
        if kind == "goe":
            if not _is_num(diag["t_max"]) or diag["t_max"] <= 0:
                out.append("diagnostic.t_max: must be a positive number")
        else:
            positive_int("t_max", 1)
    if exp in ("echo-sweep", "lyapunov"):
        ks = diag["kappas"]
        if not isinstance(ks, list) or not ks or not all(_is_num(k) for k in ks):
            out.append("diagnostic.kappas: must be a non-empty list of numbers")
        elif exp == "echo-sweep" and len(ks) < 3:
            out.append("diagnostic.kappas: a rate sweep needs at least 3 values")
    if exp in ("echo", "echo-sweep"):
        positive_int("n_states")
        if diag["initial"] not in ("coherent", "random"):
            out.append(f"diagnostic.initial: must be 'coherent' or 'random', got {diag['initial']!r}")
    if exp == "echo-sweep":
        positive_int("min_fit_points", 2)
    if exp == "otoc":
        positive_int("n")
        if not _is_num(diag["dt"]) or diag["dt"] <= 0:
            out.append("diagnostic.dt: must be a positive number")
        positive_int("n_samples")
        if diag["rho"] not in ("infinite", "thermal"):
            out.append(f"diagnostic.rho: must be 'infinite' or 'thermal', got {diag['rho']!r}")
        if diag["rho"] == "thermal" and kind != "goe":
            out.append("diagnostic.rho: thermal averaging needs a Hamiltonian model (goe)")
        if diag["estimator"] not in ("auto", "exact", "random"):
            out.append(f"diagnostic.estimator: unknown estimator {diag['estimator']!r}")
        if kind == "kicked_ising":
            ops, sites = diag["operators"], diag["sites"]
            if not (isinstance(ops, list) and len(ops) == 2 and all(o in ("x", "y", "z") for o in ops)):
                out.append("diagnostic.operators: must be two of 'x', 'y', 'z'")
            L = model["L"]
            if not (isinstance(sites, list) and len(sites) == 2 and all(_is_int(s) for s in sites)):
                out.append("diagnostic.sites: must be two integers")
            elif _is_int(L) and any(not 0 <= s < L for s in sites):
                out.append(f"diagnostic.sites: sites must lie in [0, {L})")
    if exp == "otoc-lightcone":
        if diag["operator"] not in ("x", "y", "z"):
            out.append("diagnostic.operator: must be 'x', 'y' or 'z'")
        if not (_is_num(diag["threshold"]) and 0 < diag["threshold"] <= 1):
            out.append("diagnostic.threshold: must lie in (0, 1]")
    if exp == "krylov":
        if diag["mode"] not in ("state", "operator"):
            out.append(f"diagnostic.mode: must be 'state' or 'operator', got {diag['mode']!r}")
        positive_int("max_k")
        positive_int("n_times", 2)
        if not _is_num(diag["t_max"]) or diag["t_max"] <= 0:
            out.append("diagnostic.t_max: must be a positive number")
    if exp == "arnoldi":
        positive_int("max_k")
    if exp == "dephasing":
        positive_int("n_samples")
        for key in ("q0", "p0"):
            if not (_is_num(diag[key]) and 0 <= diag[key] < 1):
                out.append(f"diagnostic.{key}: must lie in [0, 1)")
    if exp == "lyapunov":
        positive_int("n_steps", 1000)
    return out


def diagnose(data: dict) -> list[str]:
    """Human-readable problems with a parsed config; empty when runnable."""
    out = []
    if not isinstance(data, dict):
        return ["config: top level must be a table"]
    exp = data.get("experiment")
    if exp is None:
        out.append("experiment: missing")
    elif exp not in EXPERIMENTS:
        out.append(f"experiment: unknown experiment {exp!r} (choose from {', '.join(EXPERIMENTS)})")
    seed = data.get("seed", 0)
    if not _is_int(seed) or seed < 0:
        out.append(f"seed: must be a non-negative integer, got {seed!r}")
    model = data.get("model")
    if not isinstance(model, dict):
        out.append("model: missing [model] table")
        return out
    kind = model.get("kind")
    if kind not in MODEL_KINDS:
        out.append(f"model.kind: unknown model {kind!r} (choose from {', '.join(MODEL_KINDS)})")
        return out
    unknown = set(model) - set(MODEL_DEFAULTS[kind]) - {"kind"}
    if unknown:
        out.append(f"model: unknown keys for {kind}: {', '.join(sorted(unknown))}")
    full_model = {**MODEL_DEFAULTS[kind], **model}
    out += _check_model(kind, full_model)
    if exp not in EXPERIMENTS:
        return out
    if kind not in SUPPORTED[exp]:
        out.append(f"model.kind: experiment {exp!r} does not support model {kind!r}")
        return out
    diag = data.get("diagnostic", {})
    if not isinstance(diag, dict):
        out.append("diagnostic: must be a table")
        return out
    unknown = set(diag) - set(DIAGNOSTIC_DEFAULTS[exp])
    if unknown:
        out.append(f"diagnostic: unknown keys for {exp}: {', '.join(sorted(unknown))}")
    out += _check_diagnostic(exp, kind, full_model, {**DIAGNOSTIC_DEFAULTS[exp], **diag})
    unknown = set(data) - {"experiment", "seed", "output", "model", "diagnostic"}
    if unknown:
        out.append(f"config: unknown top-level keys: {', '.join(sorted(unknown))}")
    return out


def validate(path) -> list[str]:
    try:
        data = load_toml(path)
    except FileNotFoundError:
        return [f"config: file not found: {path}"]
    except tomllib.TOMLDecodeError as exc:
        return [f"config: TOML syntax error: {exc}"]
    return diagnose(data)


def parse(data: dict) -> ExperimentConfig:
    problems = diagnose(data)
    if problems:
        raise ConfigError(problems)
    exp = data["experiment"]
    kind = data["model"]["kind"]
    model = {**MODEL_DEFAULTS[kind], **data["model"]}
    diag = {**DIAGNOSTIC_DEFAULTS[exp], **data.get("diagnostic", {})}
    return ExperimentConfig(exp, model, diag, data.get("seed", 0), str(data.get("output", "out")), data)


def load(path) -> ExperimentConfig:
    problems = validate(path)
    if problems:
        raise ConfigError(problems)
    cfg = parse(load_toml(path))
    if "output" not in cfg.raw:
        cfg.output = str(Path(path).with_suffix("").name + "_out")
    return cfg
