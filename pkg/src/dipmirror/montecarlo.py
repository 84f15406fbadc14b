"""Averaging of observables over disorder realizations.

Realization ``k`` always draws from the stream ``(seed, k)``.  Results are
reduced in realization order whatever the worker scheduling, so a run is
reproducible bit-for-bit for a fixed seed.
"""

from __future__ import annotations

import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import ExperimentConfig
from .dynamics import NumericalError, evolve, spectrum, trapping_time
from .ensemble import ConfigError, GenerationError, sample_configuration
from .hamiltonian import AssemblyError, assemble

MAX_FAILURE_FRACTION = 0.01


class MonteCarloError(RuntimeError):
    def __init__(self, message: str, failures):
        super().__init__(message)
        self.failures = failures


@dataclass
class AveragedObservable:
    grid: np.ndarray
    mean: np.ndarray
    stderr: Optional[np.ndarray]
    n_realizations: int
    seed: int


@dataclass
class TrappingSummary:
    taus: np.ndarray  # NaN where P_sum never reached 1/e
    tau_mean: Optional[float]
    tau_stderr: Optional[float]
    tau_of_mean: Optional[float]
    n_failed: int


@dataclass
class SweepPoint:
    value: float
    trapping: TrappingSummary


@dataclass
class RunResult:
    config: ExperimentConfig
    spectrum: Optional[AveragedObservable] = None
    decay: Optional[AveragedObservable] = None
    decay_rate: Optional[AveragedObservable] = None
    trapping: Optional[TrappingSummary] = None
    sweep: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    elapsed: float = 0.0


def average(samples: np.ndarray, grid: np.ndarray, seed: int) -> AveragedObservable:
    """Per-point mean and standard error of the mean over axis 0."""
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    mean = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / np.sqrt(n) if n >= 2 else None
    return AveragedObservable(np.asarray(grid), mean, stderr, n, seed)


def summarize_trapping(taus, t: np.ndarray, mean_curve: np.ndarray) -> TrappingSummary:
    taus = np.asarray(taus, dtype=float)
    ok = taus[np.isfinite(taus)]
    mean = float(ok.mean()) if len(ok) else None
    err = float(ok.std(ddof=1) / np.sqrt(len(ok))) if len(ok) >= 2 else None
    return TrappingSummary(
        taus=taus,
        tau_mean=mean,
        tau_stderr=err,
        tau_of_mean=trapping_time((t, mean_curve)).tau,
        n_failed=int(np.sum(~np.isfinite(taus))),
    )


def _point_config(cfg: ExperimentConfig, value: float) -> ExperimentConfig:
    if cfg.observable == "trapping_vs_stark":
        return cfg.with_(stark_splitting=value)
    return cfg.with_(inhom_width=value)


def _decay_of(cfg: ExperimentConfig, k: int):
    conf = sample_configuration(
        cfg.n, cfg.geometry, cfg.inhom_width, cfg.m_init, cfg.seed, k,
        detuning_model=cfg.detuning_model, r_min=cfg.r_min,
    )
    H = assemble(conf, cfg.stark(), cfg.mirror_enabled)
    return evolve(H, conf.excited, cfg.time)


def realize(cfg: ExperimentConfig, k: int) -> dict:
    """Observables of realization ``k``; raises on generation/solver failure."""
    if cfg.observable == "spectrum":
        conf = sample_configuration(
            cfg.n, cfg.geometry, cfg.inhom_width, cfg.m_init, cfg.seed, k,
            detuning_model=cfg.detuning_model, r_min=cfg.r_min,
        )
        H = assemble(conf, cfg.stark(), cfg.mirror_enabled)
        res = spectrum(H, conf.excited, cfg.spectrum.grid(), offset=cfg.spectrum_offset())
        return {"spectrum": res.values}
    if cfg.observable == "decay":
        d = _decay_of(cfg, k)
        tau = trapping_time(d).tau
        return {
            "p_sum": d.p_sum,
            "dp_sum": d.dp_sum,
            "tau": np.nan if tau is None else tau,
        }
    curves, taus = [], []
    for value in cfg.sweep:
        d = _decay_of(_point_config(cfg, value), k)
        tau = trapping_time(d).tau
        curves.append(d.p_sum)
        taus.append(np.nan if tau is None else tau)
    return {"p_sum": np.array(curves), "tau": np.array(taus)}


def _safe_realize(task):
    cfg, k = task
    try:
        return k, realize(cfg, k), None
    except (GenerationError, NumericalError, AssemblyError, ConfigError, np.linalg.LinAlgError) as exc:
        return k, None, f"{type(exc).__name__}: {exc}"


def _progress(done: int, total: int, start: float):
    print(
        f"[montecarlo] {done}/{total} realizations ({time.perf_counter() - start:.1f}s)",
        file=sys.stderr,
        flush=True,
    )


def run_average(cfg: ExperimentConfig, progress: bool = False) -> RunResult:
    """Run ``cfg.n_realizations`` realizations and average their observables.

    Runs with more than 1% failed realizations raise MonteCarloError.
    Realizations whose population never reaches 1/e are not failures; they
    are counted in ``n_failed`` of the trapping summary.
    """
    start = time.perf_counter()
    total = cfg.n_realizations
    tasks = [(cfg, k) for k in range(total)]
    report_every = max(1, total // 10)
    outputs = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for i, out in enumerate(pool.map(_safe_realize, tasks, chunksize=max(1, total // (4 * cfg.workers)))):
                outputs.append(out)
                if progress and (i + 1) % report_every == 0:
                    _progress(i + 1, total, start)
    else:
        for i, task in enumerate(tasks):
            outputs.append(_safe_realize(task))
            if progress and (i + 1) % report_every == 0:
                _progress(i + 1, total, start)

    outputs.sort(key=lambda o: o[0])
    failures = [(k, msg) for k, _, msg in outputs if msg is not None]
    if len(failures) > MAX_FAILURE_FRACTION * total:
        raise MonteCarloError(
            f"{len(failures)} of {total} realizations failed; first: {failures[0]}", failures
        )
    good = [res for _, res, msg in outputs if msg is None]
    result = RunResult(config=cfg, failures=failures)

    if cfg.observable == "spectrum":
        result.spectrum = average([g["spectrum"] for g in good], cfg.spectrum.grid().values(), cfg.seed)
    elif cfg.observable == "decay":
        t = cfg.time.values()
        p = np.array([g["p_sum"] for g in good])
        dp = np.array([g["dp_sum"] for g in good])
        result.decay = average(p, t, cfg.seed)
        # rate of the averaged curve, -d ln <P_sum> / dt
        rate = -dp.mean(axis=0) / p.mean(axis=0)
        result.decay_rate = AveragedObservable(t, rate, None, len(good), cfg.seed)
        result.trapping = summarize_trapping([g["tau"] for g in good], t, result.decay.mean)
    else:
        t = cfg.time.values()
        curves = np.array([g["p_sum"] for g in good])  # (n_real, n_sweep, n_t)
        taus = np.array([g["tau"] for g in good])
        for j, value in enumerate(cfg.sweep):
            summary = summarize_trapping(taus[:, j], t, curves[:, j].mean(axis=0))
            result.sweep.append(SweepPoint(float(value), summary))
    result.elapsed = time.perf_counter() - start
    return result
