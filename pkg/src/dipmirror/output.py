"""CSV results and run manifests.

Every file is written to a temporary sibling and renamed into place, so a
failed run never leaves a partial output behind.
"""

from __future__ import annotations

import datetime as _dt
import os
import tempfile
from pathlib import Path

import yaml

from . import __version__
from .montecarlo import RunResult, TrappingSummary

UNITS_LINE = "# units: frequency gamma0, time tau0 = 1/gamma0, length 1/k0 (reduced wavelength)"


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(result: RunResult) -> str:
    lines = [UNITS_LINE]
    if result.spectrum is not None:
        obs = result.spectrum
        lines.append("delta_omega,mean,stderr")
        for i, w in enumerate(obs.grid):
            err = None if obs.stderr is None else obs.stderr[i]
            lines.append(f"{_fmt(w)},{_fmt(obs.mean[i])},{_fmt(err)}")
    elif result.decay is not None:
        obs = result.decay
        lines.append("t,P_sum_mean,P_sum_stderr")
        for i, t in enumerate(obs.grid):
            err = None if obs.stderr is None else obs.stderr[i]
            lines.append(f"{_fmt(t)},{_fmt(obs.mean[i])},{_fmt(err)}")
    else:
        lines.append("sweep_value,tau_mean,tau_stderr,tau_of_mean,n_failed")
        for point in result.sweep:
            s = point.trapping
            lines.append(
                f"{_fmt(point.value)},{_fmt(s.tau_mean)},{_fmt(s.tau_stderr)},"
                f"{_fmt(s.tau_of_mean)},{s.n_failed}"
            )
    return "\n".join(lines) + "\n"


def _trapping_dict(s: TrappingSummary) -> dict:
    return {
        "tau_mean": s.tau_mean,
        "tau_stderr": s.tau_stderr,
        "tau_of_mean": s.tau_of_mean,
        "n_failed": s.n_failed,
    }


def manifest_dict(result: RunResult, csv_path: Path) -> dict:
    summary: dict = {
        "failed_realizations": [{"index": k, "error": msg} for k, msg in result.failures],
    }
    if result.trapping is not None:
        summary["trapping"] = _trapping_dict(result.trapping)
    if result.sweep:
        summary["sweep"] = [{"value": p.value, **_trapping_dict(p.trapping)} for p in result.sweep]
    return {
        "manifest_version": 1,
        "code_version": __version__,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "wall_clock_seconds": round(result.elapsed, 3),
        "output": str(csv_path),
        "config": result.config.to_dict(),
        "results": summary,
    }


def manifest_path_for(csv_path) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + ".manifest.yaml")


def write_result(result: RunResult) -> tuple[Path, Path]:
    """Write the CSV at ``config.output_path`` and its manifest beside it."""
    csv_path = Path(result.config.output_path)
    text = csv_text(result)
    manifest = yaml.safe_dump(manifest_dict(result, csv_path), sort_keys=False)
    atomic_write(csv_path, text)
    mpath = atomic_write(manifest_path_for(csv_path), manifest)
    return csv_path, mpath
