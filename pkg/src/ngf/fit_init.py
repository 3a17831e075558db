"""Least-squares fit of the network to point data (initial condition or t=0 sensor values).

Levenberg-Marquardt on the residual r(theta) = U(x, theta) - y, with the
analytic parameter gradient as Jacobian, restarted from jittered copies of a
deterministic initial guess.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import ansatz
from .ansatz import NetworkConfig
from .assembly import SpatialDomain
from .errors import FitError


@dataclass(frozen=True)
class FitSettings:
    max_iters: int = 500
    tol: float = 1e-10
    restarts: int = 4
    jitter: float = 0.1
    seed: int = 0
    workers: int = 1


@dataclass
class FitProblem:
    x: np.ndarray
    y: np.ndarray
    network: NetworkConfig = NetworkConfig()
    settings: FitSettings = FitSettings()
    domain: SpatialDomain | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).ravel()
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.x.size == 0 or self.x.size != self.y.size:
            raise ValueError(f"need matching non-empty targets, got {self.x.size} points and {self.y.size} values")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise ValueError("fit targets must be finite")


@dataclass
class RestartReport:
    restart: int
    iterations: int
    rmse: float
    converged: bool
    losses: list = field(default_factory=list, repr=False)


@dataclass
class FitResult:
    theta: np.ndarray
    rmse: float
    reports: list

    def __iter__(self):
        return iter((self.theta, self.rmse))

    def write_report(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["restart", "iterations", "final_rmse", "converged"])
            for r in self.reports:
                w.writerow([r.restart, r.iterations, repr(float(r.rmse)), int(r.converged)])


def fit_points(domain: SpatialDomain, count: int, seed: int = 0) -> np.ndarray:
    """Uniform points for fitting a known initial condition (own seed stream, independent of quadrature)."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 90210]))
    return rng.uniform(domain.lo, domain.hi, size=count)


def default_init(network: NetworkConfig, domain: SpatialDomain | None, x, y) -> np.ndarray:
    """Centers spread over the target support, common width n / support length,
    amplitudes from a linear least-squares solve with centers and widths frozen."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = network.n
    peak = np.abs(y).max() if y.size else 0.0
    inside = x[np.abs(y) > 0.01 * peak] if peak > 0 else x[:0]
    if inside.size >= 1 and inside.max() > inside.min():
        lo, hi = inside.min(), inside.max()
    elif domain is not None:
        lo, hi = domain.lo, domain.hi
    else:
        lo, hi = x.min(), x.max()
        if hi <= lo:
            lo, hi = lo - 1.0, hi + 1.0
    b = np.linspace(lo, hi, n) if n > 1 else np.array([0.5 * (lo + hi)])
    w = np.full(n, n / (hi - lo))
    theta = ansatz.pack(np.ones(n), w, b)
    Phi = ansatz.grad_theta(theta, x).reshape(x.size, n, 3)[:, :, 0]
    c, *_ = np.linalg.lstsq(Phi, y, rcond=None)
    return ansatz.pack(c, w, b)


def levenberg_marquardt(x, y, theta0, max_iters=500, tol=1e-10):
    """Returns (theta, iterations, converged, accepted_losses).

    Loss is 0.5 * ||r||^2; the loop stops once ||J^T r|| <= tol, when the damping
    saturates (no step decreases the loss), or after ``max_iters``.
    """
    theta = np.array(theta0, dtype=float)
    lam = 1e-3
    r = ansatz.evaluate(theta, x) - y
    loss = 0.5 * r @ r
    losses = [loss]
    for it in range(1, max_iters + 1):
        Jac = ansatz.grad_theta(theta, x)
        grad = Jac.T @ r
        if np.linalg.norm(grad) <= tol:
            return theta, it - 1, True, losses
        JtJ = Jac.T @ Jac
        diag = np.diag(JtJ).copy()
        diag += 1e-9 * max(diag.max(), 1e-300)
        while True:
            try:
                step = np.linalg.solve(JtJ + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                step = None
            if step is not None:
                cand = theta + step
                r_new = ansatz.evaluate(cand, x) - y if np.all(np.isfinite(cand)) else None
                if r_new is not None and np.all(np.isfinite(r_new)):
                    new_loss = 0.5 * r_new @ r_new
                    if new_loss < loss:
                        theta, r, loss = cand, r_new, new_loss
                        losses.append(loss)
                        lam = max(lam / 3.0, 1e-12)
                        break
            lam *= 4.0
            if lam > 1e16:
                return theta, it, False, losses
    return theta, max_iters, False, losses


def _run_restart(problem: FitProblem, index: int, start: np.ndarray) -> tuple[np.ndarray, RestartReport]:
    s = problem.settings
    theta, iters, converged, losses = levenberg_marquardt(problem.x, problem.y, start, s.max_iters, s.tol)
    if np.all(np.isfinite(theta)):
        r = ansatz.evaluate(theta, problem.x) - problem.y
        rmse = float(np.sqrt(np.mean(r * r)))
    else:
        rmse = float("nan")
    return theta, RestartReport(index, iters, rmse, converged, losses)


def fit(problem: FitProblem) -> FitResult:
    """Multi-start LM. Restart 0 starts from :func:`default_init` as is, the
    others from copies jittered by ``settings.jitter`` (relative, Gaussian).
    Picks the lowest RMSE, ties going to the lowest restart index."""
    s = problem.settings
    base = default_init(problem.network, problem.domain, problem.x, problem.y)
    rng = np.random.default_rng(np.random.SeedSequence([s.seed, 7211]))
    starts = [base]
    for _ in range(1, max(s.restarts, 1)):
        scale = s.jitter * np.maximum(np.abs(base), 1e-3)
        starts.append(base + scale * rng.standard_normal(base.size))
    if s.workers > 1:
        with ThreadPoolExecutor(max_workers=s.workers) as pool:
            outcomes = list(pool.map(lambda a: _run_restart(problem, *a), enumerate(starts)))
    else:
        outcomes = [_run_restart(problem, i, st) for i, st in enumerate(starts)]
    finite = [(rep.rmse, rep.restart, th) for th, rep in outcomes if np.isfinite(rep.rmse) and np.all(np.isfinite(th))]
    reports = [rep for _, rep in outcomes]
    if not finite:
        raise FitError("every restart diverged", reports)
    rmse, _, theta = min(finite, key=lambda item: (item[0], item[1]))
    return FitResult(theta=theta, rmse=rmse, reports=reports)
