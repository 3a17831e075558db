"""Monte-Carlo assembly of the Galerkin system M(theta) eta = F(t, theta).

    M = (w/J) sum_j g_j g_j^T,   F = (w/J) sum_j g_j f(t, x_j, U(x_j)),   g_j = grad_theta U(x_j)

with x_j uniform on the spatial domain. ``w = 1`` gives the sample mean;
``w = |X|`` (the flow's default) gives the Monte-Carlo estimate of the Lebesgue
integral over X, which is the scale the regularization eps is measured against.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import ansatz
from .errors import AssemblyError
from .linalg import regularized_solve

RESAMPLE_POLICIES = ("per_step", "per_stage", "frozen")
MEASURES = ("lebesgue", "mean")


@dataclass(frozen=True)
class SpatialDomain:
    lo: float = -10.0
    hi: float = 20.0

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"spatial domain needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def grid(self, count: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, count)


@dataclass(frozen=True)
class QuadratureConfig:
    J: int = 1000
    seed: int = 0
    resample_policy: str = "per_step"

    def __post_init__(self):
        if self.J < 1:
            raise ValueError(f"need J >= 1 samples, got {self.J}")
        if self.resample_policy not in RESAMPLE_POLICIES:
            raise ValueError(f"resample_policy must be one of {RESAMPLE_POLICIES}, got {self.resample_policy!r}")


@dataclass
class GalerkinSystem:
    M: np.ndarray
    F: np.ndarray
    t: float
    sample_count: int


def draw_samples(domain: SpatialDomain, cfg: QuadratureConfig, step: int = 0, stage: int = 0) -> np.ndarray:
    """J uniform points, reproducible from (seed, step, stage) as the policy dictates."""
    if cfg.resample_policy == "frozen":
        key = [cfg.seed]
    elif cfg.resample_policy == "per_step":
        key = [cfg.seed, step]
    else:
        key = [cfg.seed, step, stage]
    rng = np.random.default_rng(np.random.SeedSequence(key))
    return rng.uniform(domain.lo, domain.hi, size=cfg.J)


def assemble(theta, t, xi, rhs, samples, weight: float = 1.0) -> GalerkinSystem:
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("assembly needs at least one sample")
    G = ansatz.grad_theta(theta, samples)
    jet = ansatz.spatial_jet(theta, samples, rhs.max_spatial_order)
    f = np.asarray(rhs.evaluate(t, samples, jet, xi), dtype=float)
    bad = ~(np.all(np.isfinite(G), axis=1) & np.isfinite(f))
    if bad.any():
        j = int(np.argmax(bad))
        raise AssemblyError(f"non-finite integrand at sample x={samples[j]!r} (t={t})", sample=float(samples[j]))
    scale = weight / samples.size
    M = (G.T @ G) * scale
    M = 0.5 * (M + M.T)
    F = (G.T @ f) * scale
    return GalerkinSystem(M=M, F=F, t=float(t), sample_count=samples.size)


def velocity(theta, t, xi, rhs, samples, eps: float, weight: float = 1.0) -> np.ndarray:
    system = assemble(theta, t, xi, rhs, samples, weight)
    return regularized_solve(system.M, system.F, eps)


@dataclass
class GalerkinFlow:
    """Everything the time stepper needs to turn theta into theta-dot.

    ``on_system(step, stage, system)`` is called after every assembly when set
    (used for the eigenvalue diagnostic).
    """

    rhs: object
    domain: SpatialDomain
    quadrature: QuadratureConfig
    eps: float = 1e-3
    measure: str = "lebesgue"
    on_system: Optional[Callable] = None

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ValueError(f"measure must be one of {MEASURES}, got {self.measure!r}")
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")

    @property
    def weight(self) -> float:
        return self.domain.length if self.measure == "lebesgue" else 1.0

    def samples(self, step: int, stage: int) -> np.ndarray:
        return draw_samples(self.domain, self.quadrature, step, stage)

    def system(self, theta, t, xi, step: int = 0, stage: int = 0) -> GalerkinSystem:
        sys_ = assemble(theta, t, xi, self.rhs, self.samples(step, stage), self.weight)
        if self.on_system is not None:
            self.on_system(step, stage, sys_)
        return sys_

    def at(self, xi):
        """Velocity field with xi frozen, signature ``(theta, t, step, stage) -> eta``."""

        def field(theta, t, step, stage):
            sys_ = self.system(theta, t, xi, step, stage)
            return regularized_solve(sys_.M, sys_.F, self.eps)

        return field
