"""Named experiment bundles (fig1a ... fig5).

Each preset expands to a list of ``(label, ExperimentConfig)`` runs.  The
scale knob changes only the cylinder size and realization counts.
"""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .config import ExperimentConfig
from .ensemble import Geometry
from .montecarlo import run_average

log = logging.getLogger(__name__)

STARK_SWEEP = tuple(float(v) for v in np.arange(0.0, 5.01, 0.5))
INHOM_SWEEP = (0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0)
FIG2_SPLITTINGS = (0.0, 0.5, 1.0, 2.0, 3.0)


@dataclass(frozen=True)
class Scale:
    name: str
    R: float
    L: float
    curve_realizations: int
    sweep_realizations: int
    calibration_realizations: int
    seed: int = 1


SCALES = {
    "full": Scale("full", R=12.0, L=13.0, curve_realizations=200, sweep_realizations=500,
                  calibration_realizations=200),
    "desk": Scale("desk", R=6.0, L=7.0, curve_realizations=100, sweep_realizations=200,
                  calibration_realizations=100),
}


def _base(scale: Scale, **kw) -> ExperimentConfig:
    return ExperimentConfig(
        n=0.05,
        geometry=Geometry(R=scale.R, L=scale.L, z_exc=1.0),
        inhom_width=0.0,
        seed=scale.seed,
        **kw,
    )


def _four_cases(scale: Scale, observable: str, m: int, tag: str):
    cases = [
        ("free", 0.0, False),
        ("field", 1.0, False),
        ("surface", 0.0, True),
        ("field_surface", 1.0, True),
    ]
    return [
        (
            f"{tag}_{name}",
            _base(scale, observable=observable, m_init=m, stark_splitting=split,
                  mirror_enabled=mirror, n_realizations=scale.curve_realizations),
        )
        for name, split, mirror in cases
    ]


def fig1(scale: Scale, m: int, tag: str):
    return _four_cases(scale, "spectrum", m, tag)


def fig2(scale: Scale, mirror: bool, tag: str):
    runs = []
    for split in FIG2_SPLITTINGS:
        cfg = _base(scale, observable="spectrum", m_init=0, stark_splitting=split,
                    mirror_enabled=mirror, n_realizations=scale.curve_realizations)
        cfg = cfg.with_(spectrum=replace(cfg.spectrum, reference="sigma"))
        runs.append((f"{tag}_delta{split:g}", cfg))
    return runs


def fig3(scale: Scale, m: int, tag: str):
    return _four_cases(scale, "decay", m, tag)


def fig4(scale: Scale):
    runs = []
    for mirror in (True, False):
        for m in (0, 1):
            cfg = _base(scale, observable="trapping_vs_stark", m_init=m, mirror_enabled=mirror,
                        sweep=STARK_SWEEP, n_realizations=scale.sweep_realizations)
            runs.append((f"fig4_{'surface' if mirror else 'free'}_m{m}", cfg))
    return runs


def mean_tau(cfg: ExperimentConfig) -> float:
    res = run_average(cfg.with_(observable="decay", sweep=()))
    if res.trapping.tau_mean is None:
        raise RuntimeError("trapping time not reached during calibration")
    return res.trapping.tau_mean


def calibrate_size(
    reference: ExperimentConfig,
    n_target: float,
    realizations: int,
    rtol: float = 0.05,
    max_iter: int = 12,
    tau: Callable[[ExperimentConfig], float] = mean_tau,
):
    """Shrink the cylinder at fixed aspect ratio until the density
    ``n_target`` gives the same mean trapping time (inhomogeneous width 0)
    as ``reference``.  Bisection on the length; returns
    ``(geometry, tau_reference, tau_calibrated)``.
    """
    ref = reference.with_(inhom_width=0.0, n_realizations=realizations)
    target = tau(ref)
    g0 = ref.geometry

    def trial(s: float):
        geom = Geometry(R=g0.R * s, L=g0.L * s, z_exc=g0.z_exc, mirror_enabled=g0.mirror_enabled)
        return geom, tau(ref.with_(n=n_target, geometry=geom))

    lo = max(0.25, 1.5 * g0.z_exc / g0.L)
    hi = 1.0
    geom, t_hi = trial(hi)
    best = (abs(t_hi / target - 1.0), geom, t_hi)
    if t_hi <= target:
        log.warning("denser sample is not slower at full size; keeping reference geometry")
        return geom, target, t_hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        geom, t_mid = trial(mid)
        err = abs(t_mid / target - 1.0)
        if err < best[0]:
            best = (err, geom, t_mid)
        if err <= rtol:
            break
        if t_mid > target:
            hi = mid
        else:
            lo = mid
    _, geom, t_cal = best
    return geom, target, t_cal


def fig5(scale: Scale, calibrate: bool = True):
    """tau versus inhomogeneous width at n = 0.05 and a size-matched n = 0.1."""
    runs = []
    for m in (1, 0):
        ref = _base(scale, observable="trapping_vs_inhom", m_init=m, mirror_enabled=True,
                    sweep=INHOM_SWEEP, n_realizations=scale.sweep_realizations)
        if calibrate:
            geom, t_ref, t_cal = calibrate_size(ref, 0.1, scale.calibration_realizations)
            print(
                f"[fig5] m={m}: n=0.1 size R={geom.R:.4g} L={geom.L:.4g} "
                f"(tau {t_cal:.4g} vs reference {t_ref:.4g})",
                file=sys.stderr,
            )
        else:
            geom = ref.geometry
        runs.append((f"fig5_n0.1_m{m}", ref.with_(n=0.1, geometry=geom)))
        runs.append((f"fig5_n0.05_m{m}", ref))
    return runs


PRESETS: dict[str, tuple[str, Callable[[Scale], list]]] = {
    "fig1a": ("m=0 spectra: free, field only, surface only, field and surface",
              lambda s: fig1(s, 0, "fig1a")),
    "fig1b": ("m=+1 spectra: free, field only, surface only, field and surface",
              lambda s: fig1(s, 1, "fig1b")),
    "fig2a": ("m=0 spectra near the surface, splitting 0..3, axis relative to the sigma line",
              lambda s: fig2(s, True, "fig2a")),
    "fig2b": ("m=0 spectra in free space, splitting 0..3, axis relative to the sigma line",
              lambda s: fig2(s, False, "fig2b")),
    "fig3a": ("m=0 total excited population vs time, four cases",
              lambda s: fig3(s, 0, "fig3a")),
    "fig3b": ("m=+1 total excited population vs time, four cases",
              lambda s: fig3(s, 1, "fig3b")),
    "fig4": ("trapping time vs splitting 0..5, m=0 and m=+1, surface and free",
             fig4),
    "fig5": ("trapping time vs inhomogeneous width, n=0.05 and size-matched n=0.1",
             fig5),
}


def expand(name: str, scale: str = "desk", seed: int = 1) -> list:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    if scale not in SCALES:
        raise KeyError(f"unknown scale {scale!r}; choose from {sorted(SCALES)}")
    return PRESETS[name][1](replace(SCALES[scale], seed=seed))


def list_presets() -> str:
    lines = ["scales:"]
    for s in SCALES.values():
        lines.append(
            f"  {s.name:<5} R={s.R:g} L={s.L:g} realizations: curves={s.curve_realizations} "
            f"sweeps={s.sweep_realizations}"
        )
    lines.append("presets:")
    for name, (desc, _) in PRESETS.items():
        lines.append(f"  {name:<6} {desc}")
    lines.append("all presets: n=0.05 (fig5 adds n=0.1), z_exc=1, inhomogeneous width 0 unless swept")
    return "\n".join(lines)
