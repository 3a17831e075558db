"""Sensor schedules, truth sources and the (z, zdot) observation stream."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from . import ansatz
from .assembly import SpatialDomain
from .errors import DomainError

log = logging.getLogger(__name__)

SENSOR_KINDS = ("uniform_fixed", "interval_fixed", "moving_interval")


@dataclass(frozen=True)
class SensorSchedule:
    """m equidistant sensors on [lo0 + lo1 t, hi0 + hi1 t], endpoints included."""

    kind: str
    m: int
    lo0: float
    hi0: float
    lo1: float = 0.0
    hi1: float = 0.0

    def __post_init__(self):
        if self.kind not in SENSOR_KINDS:
            raise ValueError(f"sensor kind must be one of {SENSOR_KINDS}, got {self.kind!r}")
        if self.m < 1:
            raise ValueError(f"need m >= 1 sensors, got {self.m}")
        if self.kind != "moving_interval" and (self.lo1 or self.hi1):
            raise ValueError(f"{self.kind} sensors cannot move")

    @classmethod
    def uniform_fixed(cls, domain: SpatialDomain, m: int):
        return cls("uniform_fixed", m, domain.lo, domain.hi)

    @classmethod
    def interval_fixed(cls, lo: float, hi: float, m: int):
        return cls("interval_fixed", m, lo, hi)

    @classmethod
    def moving_interval(cls, lo0: float, lo1: float, hi0: float, hi1: float, m: int):
        return cls("moving_interval", m, lo0, hi0, lo1, hi1)

    def interval(self, t: float) -> tuple[float, float]:
        return self.lo0 + self.lo1 * t, self.hi0 + self.hi1 * t

    def validate(self, T: float) -> None:
        # both ends are affine in t, so checking the endpoints of [0, T] suffices
        for t in (0.0, T):
            lo, hi = self.interval(t)
            if not lo < hi:
                raise ValueError(f"sensor interval collapses at t={t}: [{lo}, {hi}]")


_clamp_warned: set = set()


def positions(schedule: SensorSchedule, t: float, domain: SpatialDomain | None = None) -> np.ndarray:
    lo, hi = schedule.interval(t)
    if schedule.m == 1:
        x = np.array([0.5 * (lo + hi)])
    else:
        x = lo + (hi - lo) * np.arange(schedule.m) / (schedule.m - 1)
    if domain is not None and (x[0] < domain.lo or x[-1] > domain.hi):
        if schedule not in _clamp_warned:
            _clamp_warned.add(schedule)
            log.warning("sensors leave [%g, %g] at t=%.4g (interval [%g, %g]); clamping to the domain",
                        domain.lo, domain.hi, t, lo, hi)
        x = np.clip(x, domain.lo, domain.hi)
    return x


@dataclass(frozen=True)
class ObservationFrame:
    t: float
    positions: np.ndarray
    z: np.ndarray
    zdot: np.ndarray

    def __post_init__(self):
        m = len(self.positions)
        if m == 0 or len(self.z) != m or len(self.zdot) != m:
            raise ValueError("observation arrays must share a nonzero length")
        if not (np.all(np.isfinite(self.z)) and np.all(np.isfinite(self.zdot))):
            raise DomainError(f"non-finite observation at t={self.t}")

    @property
    def m(self) -> int:
        return len(self.positions)


class TruthSource(Protocol):
    t_max: float

    def sample(self, t, x) -> np.ndarray: ...


class AnalyticTruth:
    """Wraps a closed-form field ``fn(t, x)`` (optionally with its exact time derivative)."""

    def __init__(self, fn, t_max: float, dt_fn=None):
        self.fn = fn
        self.t_max = t_max
        self.dt_fn = dt_fn

    def sample(self, t, x):
        return np.broadcast_to(np.asarray(self.fn(t, np.asarray(x, dtype=float)), dtype=float), np.shape(x)).copy()

    def velocity(self, t, x):
        if self.dt_fn is None:
            raise NotImplementedError("no exact time derivative attached")
        return np.asarray(self.dt_fn(t, np.asarray(x, dtype=float)), dtype=float)


class NgsTruth:
    """Field U(x, theta(t)) from a stored forward trajectory at fixed xi.

    Between checkpoints theta is interpolated by cubic Hermite using the stored
    velocities. At checkpoint times everything is exact, and :meth:`velocity`
    returns the model right-hand side f(t, x, U, xi) on the stored state.
    """

    def __init__(self, times, thetas, thetadots, rhs, xi):
        self.times = np.asarray(times, dtype=float)
        self.thetas = np.asarray(thetas, dtype=float)
        self.thetadots = np.asarray(thetadots, dtype=float)
        self.rhs = rhs
        self.xi = xi
        self.t_max = float(self.times[-1])

    def theta(self, t) -> np.ndarray:
        times = self.times
        tol = 1e-12 * max(1.0, abs(t))
        if t < times[0] - tol or t > times[-1] + tol:
            raise DomainError(f"t={t} outside stored interval [{times[0]}, {times[-1]}]")
        k = min(int(np.searchsorted(times, t)), len(times) - 1)  # first checkpoint >= t
        if abs(times[k] - t) <= tol:
            return self.thetas[k]
        if k > 0 and abs(times[k - 1] - t) <= tol:
            return self.thetas[k - 1]
        k -= 1
        h = times[k + 1] - times[k]
        s = (t - times[k]) / h
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return (h00 * self.thetas[k] + h10 * h * self.thetadots[k]
                + h01 * self.thetas[k + 1] + h11 * h * self.thetadots[k + 1])

    def sample(self, t, x):
        return np.atleast_1d(ansatz.evaluate(self.theta(t), np.atleast_1d(np.asarray(x, dtype=float))))

    def velocity(self, t, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        jet = ansatz.spatial_jet(self.theta(t), x, self.rhs.max_spatial_order)
        return np.asarray(self.rhs.evaluate(t, x, jet, self.xi), dtype=float)


def observe(truth, schedule: SensorSchedule, t: float, dt_obs: float = 1e-3, *,
            domain: SpatialDomain | None = None, derivative: str = "fd",
            noise_std: float = 0.0, rng=None) -> ObservationFrame:
    """Sample z and zdot at the sensor positions of time t.

    ``derivative="fd"`` uses a forward difference with sensors frozen at their
    time-t positions (backward difference if t + dt_obs runs past the truth
    horizon); ``"exact"`` asks the truth source for its time derivative.
    Optional additive Gaussian noise (off by default) is applied to z and zdot.
    """
    x = positions(schedule, t, domain)
    z = np.asarray(truth.sample(t, x), dtype=float)
    if derivative == "exact":
        zdot = np.asarray(truth.velocity(t, x), dtype=float)
    elif derivative == "fd":
        if dt_obs <= 0:
            raise ValueError(f"dt_obs must be positive, got {dt_obs}")
        if t + dt_obs <= truth.t_max + 1e-12:
            zdot = (np.asarray(truth.sample(t + dt_obs, x)) - z) / dt_obs
        else:
            zdot = (z - np.asarray(truth.sample(t - dt_obs, x))) / dt_obs
    else:
        raise ValueError(f"derivative must be 'fd' or 'exact', got {derivative!r}")
    if noise_std > 0:
        rng = rng if rng is not None else np.random.default_rng()
        z = z + noise_std * rng.standard_normal(z.size)
        zdot = zdot + noise_std * rng.standard_normal(zdot.size)
    return ObservationFrame(t=float(t), positions=x, z=z, zdot=zdot)


class LiveObservations:
    """Frame k observed from a truth source at time ``times[k]``."""

    def __init__(self, truth, schedule, times, dt_obs=1e-3, *, domain=None, derivative="fd",
                 noise_std=0.0, seed=0):
        self.truth = truth
        self.schedule = schedule
        self.times = list(times)
        self.dt_obs = dt_obs
        self.domain = domain
        self.derivative = derivative
        self.noise_std = noise_std
        self.seed = seed
        self._cache: dict[int, ObservationFrame] = {}

    def __len__(self):
        return len(self.times)

    def frame(self, k: int) -> ObservationFrame:
        if k not in self._cache:
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, 4242, k])) if self.noise_std > 0 else None
            self._cache[k] = observe(self.truth, self.schedule, self.times[k], self.dt_obs, domain=self.domain,
                                     derivative=self.derivative, noise_std=self.noise_std, rng=rng)
        return self._cache[k]


class RecordedObservations:
    """Frames replayed from an observation log."""

    def __init__(self, frames: dict[int, ObservationFrame]):
        self.frames = dict(frames)

    def __len__(self):
        return len(self.frames)

    def frame(self, k: int) -> ObservationFrame:
        try:
            return self.frames[k]
        except KeyError:
            raise KeyError(f"observation log has no frame for step {k}") from None

    @classmethod
    def from_csv(cls, path):
        rows: dict[int, list] = {}
        times: dict[int, float] = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            expected = ["k", "t", "i", "x_i", "z_i", "zdot_i"]
            if reader.fieldnames != expected:
                raise ValueError(f"{path}: expected columns {expected}, got {reader.fieldnames}")
            for row in reader:
                k = int(row["k"])
                times[k] = float(row["t"])
                rows.setdefault(k, []).append((int(row["i"]), float(row["x_i"]), float(row["z_i"]), float(row["zdot_i"])))
        frames = {}
        for k, entries in rows.items():
            entries.sort()
            arr = np.array([e[1:] for e in entries])
            frames[k] = ObservationFrame(t=times[k], positions=arr[:, 0], z=arr[:, 1], zdot=arr[:, 2])
        return cls(frames)


def write_observation_log(path, frames) -> None:
    """``frames`` is an iterable of (k, ObservationFrame)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "t", "i", "x_i", "z_i", "zdot_i"])
        for k, fr in frames:
            for i in range(fr.m):
                w.writerow([k, repr(float(fr.t)), i, repr(float(fr.positions[i])),
                            repr(float(fr.z[i])), repr(float(fr.zdot[i]))])
