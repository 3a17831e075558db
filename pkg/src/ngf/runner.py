"""Execute a validated :class:`RunConfig` and write its artifacts.

Every run directory holds ``manifest.json`` (resolved config, seeds, code
version, output list) and ``config.txt``; either can be fed back to
``ngf run`` to reproduce the CSVs bit-identically.
"""
from __future__ import annotations

import csv
import functools
import json
import logging
import os
import platform
from dataclasses import dataclass, field

import numpy as np
import scipy

from . import __version__, ansatz
from .config import RunConfig
from .errors import ConfigError, IntegrationError
from .filtering import FilterTrajectory, forward_run, initial_state, run_filter, write_snapshots
from .integrator import ForwardTrajectory, integrate
from .linalg import eigen_fraction, sym_eigenvalues
from .observer import LiveObservations, NgsTruth, RecordedObservations, write_observation_log
from .oracle import InitialCondition, SpectralGrid, SpectralTruth, solve_reference
from .pde_rhs import get_rhs

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    output_dir: str
    outputs: list = field(default_factory=list)
    status: str = "ok"
    summary: dict = field(default_factory=dict)
    trajectory: object = None


@functools.lru_cache(maxsize=4)
def reference_truth(ic: InitialCondition, xi: float, T: float, grid: SpectralGrid, dt: float,
                    output_dt: float) -> SpectralTruth:
    """Spectral ground truth, cached per process (the solve takes seconds)."""
    return solve_reference(ic, xi, T, grid, dt=dt, output_dt=output_dt)


def oracle_truth(cfg: RunConfig) -> SpectralTruth:
    return reference_truth(cfg.initial_condition, float(cfg.xi_true), float(cfg.T), cfg.spectral_grid,
                           cfg.oracle_dt, cfg.oracle_output_dt)


def _fit_theta0(cfg: RunConfig, setup, frame0=None):
    if cfg.init == "u0":
        return initial_state(setup, u0=cfg.initial_condition)
    return initial_state(setup, frame0=frame0)


def _spectrum_rows(k, t, lam):
    return [k, repr(float(t)), *(repr(float(v)) for v in lam)]


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _snapshot_grid(cfg: RunConfig) -> np.ndarray:
    return cfg.domain.grid(cfg.snapshot_points)


def _snapshot_times(cfg: RunConfig, t_end: float) -> list:
    return [s for s in cfg.snapshot_times if s <= t_end + 1e-12]


def run(cfg: RunConfig) -> RunResult:
    cfg.validate()
    os.makedirs(cfg.output_dir, exist_ok=True)
    result = RunResult(cfg.output_dir)
    handler = {"fit_only": _run_fit_only, "forward": _run_forward, "diagnose": _run_diagnose,
               "filter": _run_filter}[cfg.mode]
    handler(cfg, result)
    _write_manifest(cfg, result)
    return result


def _out(result: RunResult, name: str) -> str:
    result.outputs.append(name)
    return os.path.join(result.output_dir, name)


def _save_fit(result, fitres):
    fitres.write_report(_out(result, "fit_report.csv"))
    ansatz.write_theta_csv(_out(result, "theta0.csv"), fitres.theta)
    result.summary["init_rmse"] = float(fitres.rmse)


def _run_fit_only(cfg: RunConfig, result: RunResult) -> None:
    setup = cfg.filter_setup()
    frame0 = None
    if cfg.init == "observations":
        frame0 = _observations(cfg, setup, None).frame(0)
    _save_fit(result, _fit_theta0(cfg, setup, frame0))


def _run_forward(cfg: RunConfig, result: RunResult) -> None:
    setup = cfg.filter_setup()
    rhs = get_rhs(cfg.rhs)
    fitres = _fit_theta0(cfg, setup)
    _save_fit(result, fitres)
    try:
        times, thetas, _ = forward_run(setup, fitres.theta, rhs, cfg.xi_true)
    except IntegrationError as exc:
        result.status = f"aborted: {exc}"
        partial = exc.partial
        times, thetas = np.array(partial.times), partial.theta_array
    ForwardTrajectory(list(times), list(thetas), cfg.scheme, cfg.seed).to_csv(_out(result, "trajectory.csv"))
    truth = oracle_truth(cfg) if cfg.truth == "oracle" else None
    x = _snapshot_grid(cfg)
    snaps = _snapshot_times(cfg, times[-1])
    write_snapshots(_out(result, "snapshots.csv"), times, thetas, snaps, x, truth)
    if truth is not None:
        errs = []
        for ts in snaps:
            i = int(np.argmin(np.abs(times - ts)))
            u, ut = ansatz.evaluate(thetas[i], x), truth.sample(times[i], x)
            errs.append(float(np.linalg.norm(u - ut) / np.linalg.norm(ut)))
        result.summary["snapshot_rel_l2"] = errs


def _run_diagnose(cfg: RunConfig, result: RunResult) -> None:
    """Forward run at xi_true emitting the eigenvalue spectrum of M at every step."""
    setup = cfg.filter_setup()
    rhs = get_rhs(cfg.rhs)
    fitres = _fit_theta0(cfg, setup)
    _save_fit(result, fitres)
    captured = {}
    flow = setup.flow(rhs, lambda step, stage, system: captured.setdefault(step, system) if stage == 0 else None)
    traj = integrate(fitres.theta, setup.time, flow.at(cfg.xi_true), cfg.scheme, seed=cfg.seed)
    spec_rows, frac_rows = [], []
    for k, (t, th) in enumerate(zip(traj.times, traj.thetas)):
        system = captured.get(k) or flow.system(th, t, cfg.xi_true, step=k, stage=0)
        lam = sym_eigenvalues(system.M / flow.weight)
        spec_rows.append(_spectrum_rows(k, t, lam))
        frac_rows.append([k, repr(float(t)), repr(eigen_fraction(lam, cfg.eig_threshold))])
    traj.to_csv(_out(result, "trajectory.csv"))
    _write_rows(_out(result, "eigenvalues.csv"), ["step", "t", *(f"lambda_{i + 1}" for i in range(len(lam)))],
                spec_rows)
    _write_rows(_out(result, "eigenfractions.csv"), ["k", "t_k", "eig_fraction"], frac_rows)
    fr = np.array([float(r[2]) for r in frac_rows])
    result.summary["eig_fraction_median"] = float(np.median(fr))


def _truth(cfg: RunConfig, setup, theta0, rhs):
    if cfg.truth == "oracle":
        return oracle_truth(cfg)
    times, thetas, dots = forward_run(setup, theta0, rhs, cfg.xi_true, with_velocities=True)
    return NgsTruth(times, thetas, dots, rhs, cfg.xi_true)


def _observations(cfg: RunConfig, setup, truth):
    if cfg.observation_log:
        return RecordedObservations.from_csv(cfg.observation_log)
    if truth is None:
        truth = oracle_truth(cfg)
    return LiveObservations(truth, cfg.schedule(), setup.time.times, cfg.dt_obs, domain=cfg.domain,
                            derivative=cfg.zdot, noise_std=cfg.noise_std, seed=cfg.seed)


def _run_filter(cfg: RunConfig, result: RunResult) -> None:
    setup = cfg.filter_setup()
    rhs = get_rhs(cfg.rhs)
    replay = bool(cfg.observation_log)
    truth = None
    if cfg.init == "u0":
        fitres = _fit_theta0(cfg, setup)
        if not replay:
            truth = _truth(cfg, setup, fitres.theta, rhs)
        observations = _observations(cfg, setup, truth)
    else:
        if not replay:
            truth = oracle_truth(cfg)
        observations = _observations(cfg, setup, truth)
        fitres = _fit_theta0(cfg, setup, observations.frame(0))
    _save_fit(result, fitres)

    traj = run_filter(setup, observations, rhs, theta0=fitres.theta, xi_true=cfg.xi_true)
    traj.init_rmse = fitres.rmse
    result.status = traj.status
    result.trajectory = traj

    traj.to_csv(_out(result, "trajectory.csv"))
    if setup.record_spectrum:
        traj.eigenfractions_to_csv(_out(result, "eigenfractions.csv"))
        traj.spectrum_to_csv(_out(result, "eigenvalues.csv"))
    times = traj.times
    thetas = np.array([r.theta for r in traj.records])
    write_snapshots(_out(result, "snapshots.csv"), times, thetas,
                    _snapshot_times(cfg, times[-1]), _snapshot_grid(cfg), truth)
    if isinstance(observations, LiveObservations):
        frames = sorted(observations._cache.items())
    else:
        frames = sorted(observations.frames.items())
    write_observation_log(_out(result, "observations.csv"), frames)
    result.summary.update(summarize(traj))


def summarize(traj: FilterTrajectory) -> dict:
    out = {"steps": len(traj), "status": traj.status, "final_xi": float(traj.xis[-1]) if len(traj) else None}
    errs = traj.errors
    if len(traj) and np.all(np.isfinite(errs)):
        t = traj.times
        early = errs[t <= 3.0 + 1e-12]
        out.update(median_err=float(np.median(errs)), final_err=float(errs[-1]), max_err=float(errs.max()),
                   mean_err_t_le_3=float(early.mean()) if early.size else None)
    fr = traj.eig_fractions
    if len(traj) and np.any(np.isfinite(fr)):
        out["eig_fraction_median"] = float(np.nanmedian(fr))
    return out


def summarize_csv(path) -> dict:
    """Summary statistics of a filter trajectory CSV written by ``ngf run``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        needed = {"k", "t_k", "xi_k", "err_k"}
        if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
            raise ValueError(f"{path}: not a filter trajectory (need columns {sorted(needed)})")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no rows")
    t = np.array([float(r["t_k"]) for r in rows])
    xi = np.array([float(r["xi_k"]) for r in rows])
    out = {"steps": len(rows), "t_final": float(t[-1]), "final_xi": float(xi[-1]),
           "median_xi": float(np.median(xi))}
    if all(r["err_k"] != "" for r in rows):
        err = np.array([float(r["err_k"]) for r in rows])
        early = err[t <= 3.0 + 1e-12]
        out.update(median_err=float(np.median(err)), final_err=float(err[-1]), max_err=float(err.max()),
                   mean_err_t_le_3=float(early.mean()) if early.size else None)
    if "eig_fraction" in rows[0] and all(r["eig_fraction"] != "" for r in rows):
        fr = np.array([float(r["eig_fraction"]) for r in rows])
        out.update(eig_fraction_median=float(np.median(fr)), eig_fraction_min=float(fr.min()),
                   eig_fraction_max=float(fr.max()))
    return out


def _write_manifest(cfg: RunConfig, result: RunResult) -> None:
    with open(os.path.join(cfg.output_dir, "config.txt"), "w") as fh:
        fh.write(cfg.to_text())
    manifest = {
        "config": cfg.to_dict(),
        "seeds": {
            "quadrature": f"SeedSequence([{cfg.seed}, step(, stage)]) per resample_policy={cfg.resample_policy}",
            "fit_points": f"SeedSequence([{cfg.seed}, 90210])",
            "fit_jitter": f"SeedSequence([{cfg.seed}, 7211])",
            "noise": f"SeedSequence([{cfg.seed}, 4242, k])",
        },
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "status": result.status,
        "outputs": ["config.txt", *result.outputs],
        "summary": result.summary,
    }
    with open(os.path.join(cfg.output_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_run_config(path) -> RunConfig:
    """Config from a ``key = value`` file or from a run manifest (``*.json``)."""
    from .config import from_mapping, load

    if str(path).endswith(".json"):
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict) or "config" not in data:
            raise ConfigError([f"{path}: manifest has no 'config' section"])
        return from_mapping(data["config"])
    return load(path)
