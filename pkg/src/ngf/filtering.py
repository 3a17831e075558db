"""Two-stage filter: alternate a Galerkin state step (S) and a grid-search parameter step (P).

Step k -> k+1:
    S: theta_{k+1} = one time step of theta' = eta(theta; xi_k)
    P: xi_{k+1} = argmin_{xi in grid} sum_i |f(t_{k+1}, x_i, U(x_i, theta_{k+1}), xi) - zdot_i|^2

With ``pairing="paper"`` the velocities zdot come from the frame at t_k; with
``pairing="consistent"`` from the frame at t_{k+1}.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import ansatz
from .ansatz import NetworkConfig, theta_header
from .assembly import GalerkinFlow, QuadratureConfig, SpatialDomain
from .errors import SolveError
from .fit_init import FitProblem, FitSettings, fit, fit_points
from .integrator import TimeGrid, get_stepper, integrate
from .linalg import eigen_fraction, sym_eigenvalues
from .pde_rhs import ParamDomain

log = logging.getLogger(__name__)

PAIRINGS = ("paper", "consistent")
P_METHODS = ("grid", "closed_form")


@dataclass(frozen=True)
class ParamGrid:
    domain: ParamDomain = ParamDomain(0.0, 10.0)
    count: int = 101

    def __post_init__(self):
        if self.count < 2:
            raise ValueError(f"parameter grid needs at least 2 values, got {self.count}")

    @property
    def values(self) -> np.ndarray:
        lo, hi = self.domain.lo, self.domain.hi
        # lo + (hi - lo) * i / (count - 1) keeps round values exact (6.0 on [0, 10] x 101)
        return np.array([lo + (hi - lo) * i / (self.count - 1) for i in range(self.count)])


def p_step(theta, frame, t_eval, grid: ParamGrid, rhs, method: str = "grid"):
    """Returns (xi, loss). Grid search breaks ties toward the smallest xi.

    ``method="closed_form"`` uses the exact minimizer of the affine-in-xi
    residual (clipped to the parameter interval); it is there for
    cross-checking the grid search.
    """
    x = np.asarray(frame.positions, dtype=float)
    zdot = np.asarray(frame.zdot, dtype=float)
    jet = ansatz.spatial_jet(theta, x, rhs.max_spatial_order)
    if method == "grid":
        xis = grid.values
        f = np.asarray(rhs.evaluate(t_eval, x, jet, xis[:, None]), dtype=float)
        losses = np.sum((f - zdot) ** 2, axis=1)
        i = int(np.argmin(losses))
        return float(xis[i]), float(losses[i])
    if method == "closed_form":
        f0, f1 = rhs.affine_parts(t_eval, x, jet)
        denom = f1 @ f1
        xi = grid.domain.lo if denom == 0 else float(np.clip(-(f0 - zdot) @ f1 / denom, grid.domain.lo, grid.domain.hi))
        r = f0 + xi * f1 - zdot
        return xi, float(r @ r)
    raise ValueError(f"unknown P-step method {method!r}; known: {P_METHODS}")


def s_step(theta, xi, t, dt, scheme: str, flow: GalerkinFlow, step: int = 0):
    return get_stepper(scheme)(flow.at(xi), theta, t, dt, step=step)


@dataclass
class FilterSetup:
    network: NetworkConfig = NetworkConfig()
    domain: SpatialDomain = SpatialDomain()
    time: TimeGrid = TimeGrid()
    quadrature: QuadratureConfig = QuadratureConfig()
    eps: float = 1e-3
    measure: str = "lebesgue"
    scheme: str = "rk4"
    param_grid: ParamGrid = ParamGrid()
    pairing: str = "paper"
    p_method: str = "grid"
    eig_threshold: float = 1e-6
    record_spectrum: bool = True
    fit: FitSettings = FitSettings()
    fit_points: int = 1000

    def __post_init__(self):
        if self.pairing not in PAIRINGS:
            raise ValueError(f"pairing must be one of {PAIRINGS}, got {self.pairing!r}")
        if self.p_method not in P_METHODS:
            raise ValueError(f"p_method must be one of {P_METHODS}, got {self.p_method!r}")

    def flow(self, rhs, on_system=None) -> GalerkinFlow:
        return GalerkinFlow(rhs, self.domain, self.quadrature, self.eps, self.measure, on_system)


@dataclass
class FilterRecord:
    k: int
    t: float
    theta: np.ndarray
    xi: float
    err: Optional[float]
    pstep_loss: float
    eig_fraction: Optional[float] = None
    eigenvalues: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class FilterTrajectory:
    records: list = field(default_factory=list)
    xi_true: Optional[float] = None
    status: str = "ok"
    init_rmse: Optional[float] = None

    def __len__(self):
        return len(self.records)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    @property
    def xis(self) -> np.ndarray:
        return np.array([r.xi for r in self.records])

    @property
    def errors(self) -> np.ndarray:
        return np.array([np.nan if r.err is None else r.err for r in self.records])

    @property
    def eig_fractions(self) -> np.ndarray:
        return np.array([np.nan if r.eig_fraction is None else r.eig_fraction for r in self.records])

    def theta_at(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.times - t)))
        return self.records[i].theta

    def to_csv(self, path) -> None:
        size = len(self.records[0].theta) if self.records else 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "t_k", "xi_k", "err_k", "pstep_loss", "eig_fraction", *theta_header(size)])
            for r in self.records:
                w.writerow([r.k, repr(float(r.t)), repr(float(r.xi)), "" if r.err is None else repr(float(r.err)),
                            repr(float(r.pstep_loss)), "" if r.eig_fraction is None else repr(float(r.eig_fraction)),
                            *(repr(float(v)) for v in r.theta)])

    def eigenfractions_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "t_k", "eig_fraction"])
            for r in self.records:
                if r.eig_fraction is not None:
                    w.writerow([r.k, repr(float(r.t)), repr(float(r.eig_fraction))])

    def spectrum_to_csv(self, path) -> None:
        rows = [r for r in self.records if r.eigenvalues is not None]
        dim = len(rows[0].eigenvalues) if rows else 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "t", *(f"lambda_{i + 1}" for i in range(dim))])
            for r in rows:
                w.writerow([r.k, repr(float(r.t)), *(repr(float(v)) for v in r.eigenvalues)])


def write_snapshots(path, times, thetas, snapshot_times, x, truth=None) -> None:
    """Reconstruction snapshots (t, x, u_est[, u_true]) at the stored times closest to ``snapshot_times``."""
    times = np.asarray(times)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "u_est", "u_true"])
        for ts in snapshot_times:
            i = int(np.argmin(np.abs(times - ts)))
            u = ansatz.evaluate(thetas[i], x)
            ut = truth.sample(times[i], x) if truth is not None else [None] * len(x)
            for xv, uv, tv in zip(x, u, ut):
                w.writerow([repr(float(times[i])), repr(float(xv)), repr(float(uv)), "" if tv is None else repr(float(tv))])


def initial_state(setup: FilterSetup, u0=None, frame0=None):
    """theta_0 from the known initial condition when available, otherwise from the t=0 sensor values."""
    if u0 is not None:
        x = fit_points(setup.domain, setup.fit_points, setup.quadrature.seed)
        y = u0(x)
    elif frame0 is not None:
        x, y = frame0.positions, frame0.z
    else:
        raise ValueError("need either the initial condition or a t=0 observation frame")
    return fit(FitProblem(x, y, setup.network, setup.fit, setup.domain))


def run_filter(setup: FilterSetup, observations, rhs, *, theta0=None, u0=None, xi_true=None,
               steps: Optional[int] = None) -> FilterTrajectory:
    """Run the filter over ``setup.time`` (or its first ``steps`` steps).

    ``observations.frame(k)`` must give the frame at time t_k. theta_0 is taken
    as given, else fitted to ``u0``, else fitted to the t=0 frame. When
    ``xi_true`` is known every record carries err_k = |xi_true - xi_k| / |xi_true|.
    ``steps=0`` stops after the initial (theta_0, xi_0) record.
    """
    grid = setup.time
    steps = grid.K if steps is None else steps
    if not 0 <= steps <= grid.K:
        raise ValueError(f"steps must lie in [0, {grid.K}], got {steps}")
    traj = FilterTrajectory(xi_true=xi_true)
    if theta0 is None:
        result = initial_state(setup, u0=u0, frame0=None if u0 is not None else observations.frame(0))
        theta0, traj.init_rmse = result.theta, result.rmse
    theta = np.array(theta0, dtype=float)
    captured = {}

    def on_system(step, stage, system):
        if stage == 0:
            captured[step] = system

    flow = setup.flow(rhs, on_system if setup.record_spectrum else None)

    def err_of(xi):
        return None if xi_true is None else abs(xi_true - xi) / abs(xi_true)

    def spectrum(k, th):
        if not setup.record_spectrum:
            return None, None
        system = captured.pop(k, None) or flow.system(th, grid.time(k), xi, step=k, stage=0)
        # diagnostic on the sample-mean matrix (1/J) V V^T, independent of the assembly measure
        lam = sym_eigenvalues(system.M / flow.weight)
        return eigen_fraction(lam, setup.eig_threshold), lam

    t1 = grid.time(1)
    xi, loss = p_step(theta, observations.frame(0), t1 if setup.pairing == "paper" else grid.time(0),
                      setup.param_grid, rhs, setup.p_method)
    pending = FilterRecord(0, grid.time(0), theta.copy(), xi, err_of(xi), loss)
    for k in range(steps):
        t_next = grid.time(k + 1)
        try:
            theta = s_step(theta, xi, grid.time(k), grid.dt, setup.scheme, flow, step=k)
        except (FloatingPointError, SolveError) as exc:
            traj.records.append(pending)
            traj.status = f"aborted at step {k}: {exc}"
            log.warning(traj.status)
            return traj
        pending.eig_fraction, pending.eigenvalues = spectrum(k, pending.theta)
        traj.records.append(pending)
        if not np.all(np.isfinite(theta)):
            traj.status = f"aborted at step {k + 1}: non-finite state"
            log.warning(traj.status)
            return traj
        frame = observations.frame(k if setup.pairing == "paper" else k + 1)
        xi, loss = p_step(theta, frame, t_next, setup.param_grid, rhs, setup.p_method)
        pending = FilterRecord(k + 1, t_next, theta.copy(), xi, err_of(xi), loss)
    pending.eig_fraction, pending.eigenvalues = spectrum(steps, pending.theta)
    traj.records.append(pending)
    return traj


def forward_run(setup: FilterSetup, theta0, rhs, xi: float, with_velocities: bool = False):
    """Plain forward Galerkin run at fixed xi. Returns (times, thetas, thetadots or None).

    ``thetadots[k]`` is the velocity at checkpoint k evaluated with step k's samples.
    """
    field_ = setup.flow(rhs).at(xi)
    traj = integrate(theta0, setup.time, field_, setup.scheme, seed=setup.quadrature.seed)
    thetas = traj.theta_array
    dots = None
    if with_velocities:
        dots = np.array([field_(th, t, k, 0) for k, (t, th) in enumerate(zip(traj.times, thetas))])
    return np.array(traj.times), thetas, dots
