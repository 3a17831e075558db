"""Independent reference solver for u_t = -u_xxx - xi u u_x on a periodic box.

Fourier pseudo-spectral in space, integrating-factor RK4 in time (the stiff
dispersive term is integrated exactly). Snapshots are stored as real-FFT
coefficients; :meth:`SpectralTruth.sample` evaluates the trigonometric
interpolant in x and a 4-point Lagrange interpolant in t.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import fft

from .errors import DomainError, IntegrationError
from .pde_rhs import soliton_field


@dataclass(frozen=True)
class SpectralGrid:
    N: int = 1024
    lo: float = -30.0
    hi: float = 40.0

    def __post_init__(self):
        if self.N < 64 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 64, got {self.N}")
        if not self.hi > self.lo:
            raise ValueError("spectral box needs hi > lo")

    @property
    def L(self) -> float:
        return self.hi - self.lo

    @property
    def x(self) -> np.ndarray:
        return self.lo + self.L * np.arange(self.N) / self.N

    @property
    def wavenumbers(self) -> np.ndarray:
        k = 2.0 * np.pi / self.L * np.arange(self.N // 2 + 1)
        k[-1] = 0.0  # Nyquist mode carries no odd derivative
        return k

    def contains(self, lo: float, hi: float, margin: float = 10.0) -> bool:
        return self.lo <= lo - margin and hi + margin <= self.hi


@dataclass(frozen=True)
class InitialCondition:
    """Superposition of two sech^2 solitons (speeds c1, c2, crests a1, a2)."""

    c1: float = 6.0
    a1: float = -5.0
    c2: float = 4.0
    a2: float = 1.0
    xi_ref: float = 6.0

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("soliton speeds must be positive")
        if self.xi_ref == 0:
            raise ValueError("xi_ref must be nonzero")

    def __call__(self, x):
        return two_soliton_u0(x, self)


def two_soliton_u0(x, ic: InitialCondition = InitialCondition()):
    return soliton_field(x, 0.0, ic.c1, ic.a1, ic.xi_ref) + soliton_field(x, 0.0, ic.c2, ic.a2, ic.xi_ref)


class SpectralTruth:
    """Ground-truth field sampled from stored spectral snapshots."""

    def __init__(self, grid: SpectralGrid, times, coeffs, xi):
        self.grid = grid
        self.times = np.asarray(times, dtype=float)
        self.coeffs = np.asarray(coeffs)
        self.xi = xi
        self.t_max = float(self.times[-1])
        self._basis_key = None
        self._basis = None

    def _time_weights(self, t):
        times = self.times
        if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
            raise DomainError(f"t={t} outside stored interval [{times[0]}, {times[-1]}]")
        nt = len(times)
        if nt < 4:
            i = int(np.argmin(np.abs(times - t)))
            return np.array([i]), np.ones(1)
        dt = times[1] - times[0]
        i = int(np.floor((t - times[0]) / dt))
        i0 = min(max(i - 1, 0), nt - 4)
        idx = np.arange(i0, i0 + 4)
        nodes = times[idx]
        hit = np.isclose(nodes, t, rtol=0.0, atol=1e-13 * max(1.0, abs(t)))
        if hit.any():
            return idx[hit][:1], np.ones(1)
        w = np.ones(4)
        for a in range(4):
            for b in range(4):
                if a != b:
                    w[a] *= (t - nodes[b]) / (nodes[a] - nodes[b])
        return idx, w

    def _basis_for(self, x):
        key = x.tobytes()
        if key != self._basis_key:
            g = self.grid
            modes = 2.0 * np.pi / g.L * np.arange(g.N // 2 + 1)
            weights = np.full(modes.size, 2.0)
            weights[0] = 1.0
            weights[-1] = 1.0
            E = np.exp(1j * np.outer(x - g.lo, modes)) * (weights / g.N)
            self._basis_key, self._basis = key, E
        return self._basis

    def coefficients(self, t) -> np.ndarray:
        idx, w = self._time_weights(float(t))
        return w @ self.coeffs[idx]

    def sample(self, t, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        c = self.coefficients(t)
        E = self._basis_for(x)
        return (E @ c).real

    def velocity(self, t, x):
        """Exact du/dt = -u_xxx - xi u u_x of the stored solution, evaluated spectrally."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        c = self.coefficients(t)
        ik = 1j * self.grid.wavenumbers
        N = self.grid.N
        u = fft.irfft(c, n=N)
        ux = fft.irfft(ik * c, n=N)
        uxxx = fft.irfft(ik**3 * c, n=N)
        ct = fft.rfft(-uxxx - self.xi * u * ux)
        return (self._basis_for(x) @ ct).real

    def field_on_grid(self, t) -> np.ndarray:
        return fft.irfft(self.coefficients(t), n=self.grid.N)

    def mass(self, t) -> float:
        return float(self.grid.L * self.coefficients(t)[0].real / self.grid.N)

    def momentum(self, t) -> float:
        u = self.field_on_grid(t)
        return float(self.grid.L * np.mean(u * u))

    def dump_csv(self, path, times=None, x=None) -> None:
        times = self.times if times is None else times
        x = self.grid.x if x is None else np.asarray(x, dtype=float)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "u"])
            for t in times:
                for xv, uv in zip(x, self.sample(t, x)):
                    w.writerow([repr(float(t)), repr(float(xv)), repr(float(uv))])


def solve_reference(u0, xi: float, T: float, grid: SpectralGrid = SpectralGrid(), dt: float = 1e-4,
                    output_dt: float = 4e-3, blowup: float = 1e3, dealias: bool = False) -> SpectralTruth:
    """Integrate from u0 (callable on the collocation points) up to T.

    Snapshots are kept every ``output_dt`` (rounded to a whole number of steps).
    ``dealias`` zeroes the top third of the spectrum in the nonlinear term; the
    default grid does not need it, finer grids (N >= 2048) do.
    """
    x = grid.x
    u = np.asarray(u0(x), dtype=float)
    edge = max(abs(u[0]), abs(u[-1]))
    if edge > 1e-8:
        raise DomainError(f"initial field is {edge:.2e} at the box edge; widen the spectral box")
    every = max(1, int(round(output_dt / dt)))
    nsteps = int(round(T / dt))
    nsteps = ((nsteps + every - 1) // every) * every
    dt = T / nsteps
    k = grid.wavenumbers
    lin = 1j * k**3  # -(ik)^3
    E = np.exp(0.5 * dt * lin)
    E2 = E * E
    g = -0.5j * xi * k * dt  # transform of -xi u u_x = -(xi/2)(u^2)_x, times dt
    N = grid.N
    if dealias:
        g = g * (np.arange(k.size) < N // 3)

    def nl(vhat):
        w = fft.irfft(vhat, n=N)
        return g * fft.rfft(w * w)

    v = fft.rfft(u)
    times = [0.0]
    coeffs = [v.copy()]
    for step in range(1, nsteps + 1):
        a = nl(v)
        b = nl(E * (v + 0.5 * a))
        c = nl(E * v + 0.5 * b)
        d = nl(E2 * v + E * c)
        v = E2 * v + (E2 * a + 2.0 * E * (b + c) + d) / 6.0
        if step % every == 0:
            if not np.all(np.isfinite(v)) or np.abs(fft.irfft(v, n=N)).max() > blowup:
                raise IntegrationError(f"reference solution blew up at t={step * dt:.4f}")
            times.append(step * dt)
            coeffs.append(v.copy())
    return SpectralTruth(grid, times, np.array(coeffs), xi)
