"""Shallow Gaussian network U(x, theta) = sum_i c_i exp(-w_i^2 |x - b_i|^2).

Parameter layout: theta is a flat float vector made of ``n`` contiguous unit
blocks ``(c_i, w_i, b_i[0..d-1])``, so ``theta.reshape(n, d + 2)`` gives one row
per unit. Every other module goes through :func:`unpack` rather than indexing
by hand.

All functions accept either a single point or a batch of points. For ``d == 1``
a batch is a 1-D array; for ``d > 1`` it is an ``(N, d)`` array.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, UnsupportedOrderError

MAX_SPATIAL_ORDER = 3


@dataclass(frozen=True)
class NetworkConfig:
    n: int = 12
    d: int = 1

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError(f"need n >= 1 and d >= 1, got n={self.n}, d={self.d}")

    @property
    def size(self) -> int:
        return self.n * (self.d + 2)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size)


@dataclass(frozen=True)
class FieldJet:
    """U and its spatial derivatives at one point or a batch of points.

    ``dx[k - 1]`` holds the k-th derivative, so ``dx`` has ``max_order`` rows
    (scalars for a single point, arrays over the batch otherwise).
    """

    value: np.ndarray
    dx: np.ndarray

    @property
    def max_order(self) -> int:
        return len(self.dx)


def check_theta(theta, d: int = 1) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size == 0 or theta.size % (d + 2):
        raise DomainError(f"parameter vector of length {theta.size} is not a multiple of d+2={d + 2}")
    if not np.all(np.isfinite(theta)):
        raise DomainError("parameter vector has non-finite entries")
    return theta


def unpack(theta, d: int = 1):
    """Split theta into amplitudes c (n,), widths w (n,) and centers b (n, d)."""
    blocks = np.asarray(theta, dtype=float).reshape(-1, d + 2)
    return blocks[:, 0], blocks[:, 1], blocks[:, 2:]


def pack(c, w, b) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float).reshape(c.size, -1)
    return np.column_stack([c, np.asarray(w, dtype=float), b]).ravel()


def _points(x, d):
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0 if d == 1 else x.ndim == 1
    pts = x.reshape(-1, d)
    if not np.all(np.isfinite(pts)):
        raise DomainError("evaluation point is not finite")
    return pts, scalar


def _offsets(theta, x, d):
    theta = check_theta(theta, d)
    c, w, b = unpack(theta, d)
    pts, scalar = _points(x, d)
    s = pts[:, None, :] - b[None, :, :]  # (N, n, d)
    r2 = np.einsum("jik,jik->ji", s, s)
    phi = np.exp(-(w**2)[None, :] * r2)
    return c, w, s, r2, phi, scalar


def evaluate(theta, x, d: int = 1):
    """U(x, theta). Returns a float for a single point, an array for a batch."""
    c, _, _, _, phi, scalar = _offsets(theta, x, d)
    u = phi @ c
    return float(u[0]) if scalar else u


def grad_theta(theta, x, d: int = 1) -> np.ndarray:
    """Gradient of U with respect to theta, in the same block layout as theta.

    Shape ``(P,)`` for a single point, ``(N, P)`` for a batch of N points.
    """
    c, w, s, r2, phi, scalar = _offsets(theta, x, d)
    npts, n = phi.shape
    g = np.empty((npts, n, d + 2))
    g[:, :, 0] = phi
    g[:, :, 1] = -2.0 * c * w * r2 * phi
    g[:, :, 2:] = (2.0 * c * w**2 * phi)[:, :, None] * s
    g = g.reshape(npts, n * (d + 2))
    return g[0] if scalar else g


def spatial_jet(theta, x, max_order: int = MAX_SPATIAL_ORDER) -> FieldJet:
    """Value and x-derivatives up to ``max_order`` (1-D only).

    With s = x - b, a = w^2 and g = exp(-a s^2):
        g'   = -2 a s g
        g''  = (4 a^2 s^2 - 2 a) g
        g''' = (12 a^2 s - 8 a^3 s^3) g
    """
    if not 0 <= max_order <= MAX_SPATIAL_ORDER:
        raise UnsupportedOrderError(f"spatial derivatives are available up to order {MAX_SPATIAL_ORDER}, got {max_order}")
    theta = check_theta(theta, 1)
    c, w, b = unpack(theta, 1)
    pts, scalar = _points(x, 1)
    s = pts - b[None, :, 0]
    a = w**2
    g = np.exp(-a * s**2)
    cg = c * g
    value = cg.sum(axis=1)
    dx = np.empty((max_order, len(pts)))
    if max_order >= 1:
        dx[0] = (cg * (-2.0 * a * s)).sum(axis=1)
    if max_order >= 2:
        dx[1] = (cg * (4.0 * a**2 * s**2 - 2.0 * a)).sum(axis=1)
    if max_order >= 3:
        dx[2] = (cg * (12.0 * a**2 * s - 8.0 * a**3 * s**3)).sum(axis=1)
    if scalar:
        return FieldJet(value=float(value[0]), dx=dx[:, 0].copy())
    return FieldJet(value=value, dx=dx)


def theta_header(size: int) -> list[str]:
    return [f"theta_{i}" for i in range(size)]


def write_theta_csv(path, theta) -> None:
    theta = np.asarray(theta, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(theta_header(theta.size))
        w.writerow([repr(float(v)) for v in theta])


def read_theta_csv(path, d: int = 1) -> np.ndarray:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise DomainError(f"{path}: expected a header row and one data row")
    header, data = rows[0], rows[1]
    if header != theta_header(len(header)) or len(data) != len(header):
        raise DomainError(f"{path}: malformed parameter header")
    return check_theta([float(v) for v in data], d)
