"""Explicit time stepping of the weight ODE theta' = eta(theta, t).

A velocity field is any callable ``field(theta, t, step, stage) -> eta``; the
step/stage indices let the Galerkin field pick its quadrature samples.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field as dc_field

import numpy as np

from .ansatz import theta_header
from .errors import IntegrationError, SolveError

SCHEMES = ("rk4", "euler")


@dataclass(frozen=True)
class TimeGrid:
    t0: float = 0.0
    T: float = 4.0
    K: int = 1000

    def __post_init__(self):
        if not self.T > self.t0:
            raise ValueError(f"time grid needs T > t0, got t0={self.t0}, T={self.T}")
        if self.K < 1:
            raise ValueError(f"need K >= 1 steps, got {self.K}")

    @property
    def dt(self) -> float:
        return (self.T - self.t0) / self.K

    def time(self, k: int) -> float:
        # computed the same way everywhere so checkpoint times compare exactly
        return self.t0 + k * (self.T - self.t0) / self.K

    @property
    def times(self) -> np.ndarray:
        return np.array([self.time(k) for k in range(self.K + 1)])


@dataclass
class ForwardTrajectory:
    times: list = dc_field(default_factory=list)
    thetas: list = dc_field(default_factory=list)
    scheme: str = "rk4"
    seed: int | None = None

    def __len__(self):
        return len(self.times)

    @property
    def theta_array(self) -> np.ndarray:
        return np.array(self.thetas)

    def to_csv(self, path) -> None:
        size = len(self.thetas[0]) if self.thetas else 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "t_k", *theta_header(size)])
            for k, (t, th) in enumerate(zip(self.times, self.thetas)):
                w.writerow([k, repr(float(t)), *(repr(float(v)) for v in th)])


def euler_step(field, theta, t, dt, step: int = 0):
    """theta + dt * eta, with eta evaluated at the *new* time t + dt."""
    if dt <= 0:
        raise ValueError(f"time step must be positive, got {dt}")
    return theta + dt * field(theta, t + dt, step, 0)


def rk4_step(field, theta, t, dt, step: int = 0):
    if dt <= 0:
        raise ValueError(f"time step must be positive, got {dt}")
    half = 0.5 * dt
    k1 = field(theta, t, step, 0)
    k2 = field(theta + half * k1, t + half, step, 1)
    k3 = field(theta + half * k2, t + half, step, 2)
    k4 = field(theta + dt * k3, t + dt, step, 3)
    return theta + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


STEPPERS = {"rk4": rk4_step, "euler": euler_step}


def get_stepper(scheme: str):
    try:
        return STEPPERS[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; known: {SCHEMES}") from None


def integrate(theta0, grid: TimeGrid, field, scheme: str = "rk4", seed=None) -> ForwardTrajectory:
    step_fn = get_stepper(scheme)
    theta = np.array(theta0, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("initial state is not finite")
    traj = ForwardTrajectory(times=[grid.time(0)], thetas=[theta.copy()], scheme=scheme, seed=seed)
    for k in range(grid.K):
        try:
            theta = step_fn(field, theta, grid.time(k), grid.dt, step=k)
        except (FloatingPointError, SolveError) as exc:
            raise IntegrationError(f"step {k} failed at t={grid.time(k)}: {exc}", partial=traj) from exc
        if not np.all(np.isfinite(theta)):
            raise IntegrationError(
                f"non-finite state at step {k + 1}; last finite checkpoint t={traj.times[-1]}", partial=traj
            )
        traj.times.append(grid.time(k + 1))
        traj.thetas.append(theta.copy())
    return traj
