"""Experiment execution: config -> CSV series, SVG plots and a JSON manifest."""
from __future__ import annotations

import math
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..analysis import FitError, fit_decay, scaling_exponent
from ..echo import EchoProtocol, initial_ensemble, loschmidt_echo, rate_sweep
from ..hilbert import RNG_ALGORITHM, DenseOperator, RngStream, coherent_state, random_state, random_states
from ..krylov import (MIN_STATS_SIZE, arnoldi_unitary, k_complexity, k_saturation, krylov_propagate, lanczos_operator,
                      lanczos_state, lanczos_stats)
from ..models import (CatMapParams, KickedIsingParams, catmap_quantum, goe_hamiltonian, kicked_ising,
                      kicked_ising_parts, site_operator)
from ..otoc import RhoSpec, lightcone, otoc, otoc_higher, sign_operators, torus_surrogates
from ..semiclassic import coherent_wigner_sampler, dephasing_echo, lyapunov_exponent
from .config import ExperimentConfig
from .output import svg_plot, write_csv, write_json


@dataclass
class Series:
    name: str
    header: list
    columns: list
    log_y: bool = False


@dataclass
class TaskResult:
    series: list = field(default_factory=list)
    info: dict = field(default_factory=dict)


def _cat(model: dict, kappa: float | None = None):
    return catmap_quantum(CatMapParams(model["N"], model["kappa"] if kappa is None else kappa))


def _ising(model: dict, **override) -> KickedIsingParams:
    keys = {k: model[k] for k in ("L", "J", "b", "h", "boundary")}
    keys.update(override)
    return KickedIsingParams(**keys)


def _ising_hamiltonian(model: dict) -> DenseOperator:
    hz, hx = kicked_ising_parts(_ising(model))
    return DenseOperator.from_matrix(hz.entries + hx.entries, label="H_zz + H_x")


def _dim(cfg: ExperimentConfig) -> int:
    m = cfg.model
    return {"catmap": lambda: m["N"], "kicked_ising": lambda: 2 ** m["L"], "goe": lambda: m["dim"]}[cfg.kind]()


# experiments: each returns a list of (sub-task name, callable -> TaskResult)

def _echo(cfg: ExperimentConfig, workers: int):
    d, m = cfg.diagnostic, cfg.model
    delta = float(d["kappa"])
    rng = RngStream(cfg.seed)

    def task():
        if cfg.kind == "catmap":
            U1, U2 = _cat(m), _cat(m, m["kappa"] + delta)
            proto = EchoProtocol(n_states=d["n_states"], seed=cfg.seed, initial=d["initial"])
            block = initial_ensemble(U1.dim, proto)
            s = loschmidt_echo(U1, U2, block, d["t_max"])
        elif cfg.kind == "kicked_ising":
            U1, U2 = kicked_ising(_ising(m)), kicked_ising(_ising(m, h=m["h"] + delta))
            s = loschmidt_echo(U1, U2, random_states(U1.dim, d["n_states"], rng.spawn(1)), d["t_max"])
        else:
            H1 = goe_hamiltonian(m["dim"], rng.spawn(0))
            P = goe_hamiltonian(m["dim"], rng.spawn(1))
            H2 = DenseOperator.from_matrix(H1.entries + delta * P.entries)
            times = np.arange(d["t_max"] + 1, dtype=float)
            s = loschmidt_echo(H1, H2, random_states(H1.dim, d["n_states"], rng.spawn(2)), times)
        return TaskResult([Series("echo", ["t", "M"], [s.times, s.values], True)],
                          {"final_M": float(s.values[-1])})

    return [("echo", task)]


def _echo_sweep(cfg: ExperimentConfig, workers: int):
    d, m = cfg.diagnostic, cfg.model

    def task():
        proto = EchoProtocol(steps=d["t_max"], n_states=d["n_states"], seed=cfg.seed, base_kappa=m["kappa"],
                             initial=d["initial"], min_fit_points=d["min_fit_points"], workers=workers)
        curve = rate_sweep(lambda k: _cat(m, k), d["kappas"], proto)
        out = [Series("rate_curve", ["kappa", "rate", "t_lo", "t_hi", "residual"],
                      [curve.kappas, curve.rates, [w[0] for w in curve.windows],
                       [w[1] for w in curve.windows], curve.residuals], True)]
        for i, s in enumerate(curve.series):
            out.append(Series(f"echo_{i:02d}", ["t", "M"], [s.times, s.values], True))
        info = {"fits": curve.fits}
        try:
            slope, err = scaling_exponent(curve.kappas[curve.rates > 0], curve.rates[curve.rates > 0])
            info["loglog_slope"] = {"slope": slope, "stderr": err}
        except FitError as exc:
            info["loglog_slope"] = {"error": str(exc)}
        return TaskResult(out, info)

    return [("rate_sweep", task)]


def _otoc_setup(cfg: ExperimentConfig):
    d, m = cfg.diagnostic, cfg.model
    rng = RngStream(cfg.seed)
    if cfg.kind == "catmap":
        V, W = torus_surrogates(m["N"])
        U = _cat(m)
        times = np.arange(d["t_max"] + 1, dtype=float)
    elif cfg.kind == "kicked_ising":
        (ov, ow), (sv, sw) = d["operators"], d["sites"]
        V, W = site_operator(m["L"], sv, ov), site_operator(m["L"], sw, ow)
        U = kicked_ising(_ising(m))
        times = np.arange(d["t_max"] + 1, dtype=float)
    else:
        U = goe_hamiltonian(m["dim"], rng.spawn(0))
        V, W = sign_operators(m["dim"], rng.spawn(1))
        times = np.arange(int(round(d["t_max"] / d["dt"])) + 1) * float(d["dt"])
    rho = RhoSpec.thermal(d["beta"], U) if d["rho"] == "thermal" else RhoSpec.infinite()
    return U, V, W, times, rho, rng


def _otoc(cfg: ExperimentConfig, workers: int):
    d = cfg.diagnostic

    def task():
        U, V, W, times, rho, rng = _otoc_setup(cfg)
        s = otoc(V, W, U, times, rho, d["estimator"], d["n_samples"], rng.spawn(2))
        cols = [s.times, s.C, s.F.real, s.F.imag, s.D, s.I]
        header = ["t", "C", "ReF", "ImF", "D", "I"]
        if d["n"] > 1:
            fn = otoc_higher(V, W, U, times, d["n"], rho)
            cols += [fn.values.real, fn.values.imag]
            header += [f"ReF{d['n']}", f"ImF{d['n']}"]
        return TaskResult([Series("otoc", header, cols, True)],
                          {"estimator": s.estimator, "rho": s.rho, "dim": s.dim, "n_samples": s.n_samples})

    return [("otoc", task)]


def _lightcone(cfg: ExperimentConfig, workers: int):
    d = cfg.diagnostic

    def task():
        lc = lightcone(_ising(cfg.model), d["operator"], d["threshold"], d["t_max"], d["estimator"],
                       d["n_samples"], cfg.seed)
        curves = Series("lightcone_curves", ["t"] + [f"C_{l}" for l in lc.curves],
                        [lc.times] + list(lc.curves.values()), False)
        arrivals = Series("lightcone", ["distance", "arrival_time"], [lc.distances, lc.arrival_times])
        return TaskResult([arrivals, curves], {
            "butterfly_velocity": lc.butterfly_velocity, "r_squared": lc.r_squared,
            "threshold": lc.threshold, "absent_distances": lc.absent})

    return [("lightcone", task)]


def _krylov(cfg: ExperimentConfig, workers: int):
    d, m = cfg.diagnostic, cfg.model

    def task():
        rng = RngStream(cfg.seed)
        if cfg.kind == "goe":
            H = goe_hamiltonian(m["dim"], rng.spawn(0))
        else:
            H = _ising_hamiltonian(m)
        if d["mode"] == "state":
            data = lanczos_state(H, random_state(H.dim, rng.spawn(1)), d["max_k"])
        else:
            if cfg.kind == "goe":
                O, _ = sign_operators(m["dim"], rng.spawn(1))
            else:
                O = site_operator(m["L"], d["site"], d["operator"])
            data = lanczos_operator(H, O, d["max_k"])
        times = np.linspace(0.0, float(d["t_max"]), d["n_times"])
        kc = k_complexity(krylov_propagate(data, times))
        n = np.arange(data.size)
        b = np.concatenate([[0.0], data.b])
        info = {"status": data.status, "size": data.size, "k_saturation": k_saturation(data)}
        if data.b.size >= MIN_STATS_SIZE:
            st = lanczos_stats(data)
            info.update(initial_slope=st.initial_slope, plateau=st.plateau, fluctuation_measure=st.fluctuation)
        return TaskResult([Series("lanczos", ["n", "a", "b"], [n, data.a, b]),
                           Series("complexity", ["t", "K"], [times, kc])], info)

    return [("krylov", task)]


def _arnoldi(cfg: ExperimentConfig, workers: int):
    d, m = cfg.diagnostic, cfg.model

    def task():
        U = _cat(m) if cfg.kind == "catmap" else kicked_ising(_ising(m))
        data = arnoldi_unitary(U, random_state(U.dim, RngStream(cfg.seed)), d["max_k"])
        sub = data.subdiagonal
        return TaskResult([Series("arnoldi", ["n", "subdiagonal"], [np.arange(1, sub.size + 1), sub])],
                          {"status": data.status, "mean_subdiagonal": float(sub.mean()) if sub.size else math.nan})

    return [("arnoldi", task)]


def _dephasing(cfg: ExperimentConfig, workers: int):
    d, m = cfg.diagnostic, cfg.model

    def task():
        params = CatMapParams(m["N"], m["kappa"])
        kappa = float(d["kappa"])
        ds = dephasing_echo(params, kappa, coherent_wigner_sampler(d["q0"], d["p0"], params.hbar),
                            d["n_samples"], d["t_max"], RngStream(cfg.seed))
        psi = coherent_state(m["N"], d["q0"], d["p0"])
        q = loschmidt_echo(_cat(m), _cat(m, m["kappa"] + kappa), psi, d["t_max"])
        z = (ds.fidelity - q.values) / np.where(ds.stderr > 0, ds.stderr, np.inf)
        return TaskResult([Series("dephasing", ["t", "M_quantum", "m_abs2", "stderr"],
                                  [ds.times, q.values, ds.fidelity, ds.stderr], True)],
                          {"max_abs_z": float(np.max(np.abs(z)))})

    return [("dephasing", task)]


def _lyapunov(cfg: ExperimentConfig, workers: int):
    d = cfg.diagnostic
    stream = RngStream(cfg.seed)
    results: dict = {}

    def one(i, kappa):
        def task():
            r = lyapunov_exponent(float(kappa), stream.spawn(i), d["n_steps"], d["n_transient"])
            results[i] = (float(kappa), r.lambda_, r.stderr)
            return TaskResult([], {"kappa": float(kappa), "lambda": r.lambda_, "stderr": r.stderr})
        return task

    tasks = [(f"kappa_{i:02d}", one(i, k)) for i, k in enumerate(d["kappas"])]

    def collect():
        rows = [results[i] for i in sorted(results)]
        cols = [list(c) for c in zip(*rows)] if rows else [[], [], []]
        return TaskResult([Series("lyapunov", ["kappa", "lambda", "stderr"], cols)], {})

    return tasks + [("collect", collect)]


EXPERIMENTS = {
    "echo": _echo,
    "echo-sweep": _echo_sweep,
    "otoc": _otoc,
    "otoc-lightcone": _lightcone,
    "krylov": _krylov,
    "arnoldi": _arnoldi,
    "dephasing": _dephasing,
    "lyapunov": _lyapunov,
}


def _run_task(fn):
    t0 = time.perf_counter()
    try:
        res, status, err = fn(), "ok", None
    except Exception as exc:  # noqa: BLE001 - recorded in the manifest
        res, status = TaskResult(), "failed"
        err = "".join(traceback.format_exception_only(type(exc), exc)).strip()
    return res, status, err, time.perf_counter() - t0


def run(cfg: ExperimentConfig, out_dir=None, workers: int = 1) -> dict:
    """Run an experiment; every sub-task is attempted and the manifest is always written."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    out = Path(out_dir or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    tasks = EXPERIMENTS[cfg.experiment](cfg, workers)
    # the last task of a sweep may depend on the others (collect), so run those first
    body, tail = (tasks[:-1], tasks[-1:]) if cfg.experiment == "lyapunov" else (tasks, [])
    if workers > 1 and len(body) > 1:
        with ThreadPoolExecutor(workers) as pool:
            done = list(pool.map(lambda t: _run_task(t[1]), body))
    else:
        done = [_run_task(fn) for _, fn in body]
    done += [_run_task(fn) for _, fn in tail]

    manifest = {
        "config": cfg.raw,
        "experiment": cfg.experiment,
        "version": __version__,
        "rng": {"algorithm": RNG_ALGORITHM, "seed": cfg.seed},
        "workers": workers,
        "tasks": [],
        "outputs": {},
    }
    # output writing is serialized and ordered by task
    for (name, _), (res, status, err, wall) in zip(tasks, done):
        entry = {"name": name, "status": status, "wall_clock_s": wall, "results": res.info}
        if err:
            entry["error"] = err
        for s in res.series:
            try:
                path = out / f"{s.name}.csv"
                digest = write_csv(path, s.header, s.columns)
                svg = out / f"{s.name}.svg"
                cols = [np.asarray(c, dtype=float) for c in s.columns]
                svg.write_text(svg_plot(cols[0], dict(zip(s.header[1:], cols[1:])), s.log_y, s.header[0], s.name))
                manifest["outputs"][path.name] = {"sha256": digest, "svg": svg.name}
            except Exception as exc:  # noqa: BLE001
                entry["status"] = "failed"
                entry.setdefault("error", f"writing {s.name}: {exc}")
        manifest["tasks"].append(entry)
    manifest["wall_clock_s"] = time.perf_counter() - t0
    manifest["status"] = "ok" if all(t["status"] == "ok" for t in manifest["tasks"]) else "partial"
    write_json(out / "manifest.json", manifest)
    return manifest
