"""Flat ``key = value`` run configuration, validation and the named scenario presets.

Format: one ``key = value`` per line, ``#`` starts a comment, blank lines are
ignored. Every key is optional (defaults below); unknown or repeated keys are
errors. Validation collects every problem before raising :class:`ConfigError`.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from typing import Optional

from .ansatz import NetworkConfig
from .assembly import MEASURES, RESAMPLE_POLICIES, QuadratureConfig, SpatialDomain
from .errors import ConfigError
from .filtering import P_METHODS, PAIRINGS, FilterSetup, ParamGrid
from .fit_init import FitSettings
from .integrator import STEPPERS, TimeGrid
from .observer import SENSOR_KINDS, SensorSchedule
from .oracle import InitialCondition, SpectralGrid
from .pde_rhs import RHS_REGISTRY, ParamDomain

MODES = ("forward", "filter", "fit_only", "diagnose")
TRUTHS = ("oracle", "ngs")
DERIVATIVES = ("fd", "exact")
INITS = ("u0", "observations")


@dataclass
class RunConfig:
    mode: str = "filter"
    rhs: str = "kdv"
    # network and spatial domain
    n: int = 12
    domain_lo: float = -10.0
    domain_hi: float = 20.0
    # time grid
    T: float = 4.0
    K: int = 1000
    scheme: str = "rk4"
    # Monte-Carlo quadrature and regularization
    J: int = 1000
    seed: int = 0
    resample_policy: str = "per_step"
    epsilon: float = 1e-3
    measure: str = "lebesgue"
    # sensors: x_i(t) equidistant on [lo0 + lo1 t, hi0 + hi1 t]; uniform_fixed uses the domain
    sensors: str = "uniform_fixed"
    m: int = 100
    sensor_lo0: float = -10.0
    sensor_hi0: float = 20.0
    sensor_lo1: float = 0.0
    sensor_hi1: float = 0.0
    dt_obs: float = 1e-3
    zdot: str = "fd"
    noise_std: float = 0.0
    observation_log: str = ""
    # truth
    truth: str = "oracle"
    xi_true: Optional[float] = 6.0
    u0_c1: float = 6.0
    u0_a1: float = -5.0
    u0_c2: float = 4.0
    u0_a2: float = 1.0
    u0_xi: float = 6.0
    oracle_N: int = 1024
    oracle_lo: float = -30.0
    oracle_hi: float = 40.0
    oracle_dt: float = 1e-4
    oracle_output_dt: float = 4e-3
    # parameter step
    xi_lo: float = 0.0
    xi_hi: float = 10.0
    xi_count: int = 101
    pairing: str = "paper"
    p_method: str = "grid"
    # initial fit
    init: str = "u0"
    fit_points: int = 1000
    fit_max_iters: int = 500
    fit_tol: float = 1e-10
    fit_restarts: int = 4
    fit_jitter: float = 0.1
    # diagnostics and output
    eig_threshold: float = 1e-6
    record_spectrum: bool = True
    snapshot_times: tuple = (0.5, 1.0, 1.51, 2.0, 2.5, 3.01)
    snapshot_points: int = 601
    output_dir: str = "runs/default"
    workers: int = 1

    # -- derived module configs ------------------------------------------------

    @property
    def domain(self) -> SpatialDomain:
        return SpatialDomain(self.domain_lo, self.domain_hi)

    @property
    def initial_condition(self) -> InitialCondition:
        return InitialCondition(self.u0_c1, self.u0_a1, self.u0_c2, self.u0_a2, self.u0_xi)

    @property
    def spectral_grid(self) -> SpectralGrid:
        return SpectralGrid(self.oracle_N, self.oracle_lo, self.oracle_hi)

    def schedule(self) -> SensorSchedule:
        if self.sensors == "uniform_fixed":
            return SensorSchedule.uniform_fixed(self.domain, self.m)
        if self.sensors == "interval_fixed":
            return SensorSchedule.interval_fixed(self.sensor_lo0, self.sensor_hi0, self.m)
        return SensorSchedule.moving_interval(self.sensor_lo0, self.sensor_lo1, self.sensor_hi0, self.sensor_hi1,
                                              self.m)

    def fit_settings(self) -> FitSettings:
        return FitSettings(self.fit_max_iters, self.fit_tol, self.fit_restarts, self.fit_jitter, self.seed,
                           self.workers)

    def filter_setup(self) -> FilterSetup:
        return FilterSetup(
            network=NetworkConfig(self.n),
            domain=self.domain,
            time=TimeGrid(0.0, self.T, self.K),
            quadrature=QuadratureConfig(self.J, self.seed, self.resample_policy),
            eps=self.epsilon,
            measure=self.measure,
            scheme=self.scheme,
            param_grid=ParamGrid(ParamDomain(self.xi_lo, self.xi_hi), self.xi_count),
            pairing=self.pairing,
            p_method=self.p_method,
            eig_threshold=self.eig_threshold,
            record_spectrum=self.record_spectrum,
            fit=self.fit_settings(),
            fit_points=self.fit_points,
        )

    # -- validation ------------------------------------------------------------

    def problems(self) -> list[str]:
        """Every violated constraint, as human-readable strings (empty if valid)."""
        out = []

        def choice(key, allowed):
            if getattr(self, key) not in allowed:
                out.append(f"{key}: must be one of {list(allowed)}, got {getattr(self, key)!r}")

        def positive(*keys):
            for key in keys:
                if not getattr(self, key) > 0:
                    out.append(f"{key}: must be > 0, got {getattr(self, key)!r}")

        choice("mode", MODES)
        choice("rhs", RHS_REGISTRY)
        choice("scheme", STEPPERS)
        choice("resample_policy", RESAMPLE_POLICIES)
        choice("measure", MEASURES)
        choice("sensors", SENSOR_KINDS)
        choice("zdot", DERIVATIVES)
        choice("truth", TRUTHS)
        choice("pairing", PAIRINGS)
        choice("p_method", P_METHODS)
        choice("init", INITS)
        positive("n", "T", "K", "J", "epsilon", "m", "dt_obs", "oracle_dt", "oracle_output_dt", "fit_points",
                 "fit_max_iters", "fit_tol", "fit_restarts", "snapshot_points", "workers")
        if self.seed < 0:
            out.append(f"seed: must be >= 0, got {self.seed}")
        if self.noise_std < 0:
            out.append(f"noise_std: must be >= 0, got {self.noise_std}")
        if self.fit_jitter < 0:
            out.append(f"fit_jitter: must be >= 0, got {self.fit_jitter}")
        if not self.domain_lo < self.domain_hi:
            out.append(f"domain_lo/domain_hi: need domain_lo < domain_hi, got [{self.domain_lo}, {self.domain_hi}]")
        if not self.xi_lo < self.xi_hi:
            out.append(f"xi_lo/xi_hi: need xi_lo < xi_hi, got [{self.xi_lo}, {self.xi_hi}]")
        if self.xi_count < 2:
            out.append(f"xi_count: need at least 2 grid values, got {self.xi_count}")
        if self.xi_true is not None and self.xi_true == 0:
            out.append("xi_true: must be nonzero (relative error divides by it)")
        if self.u0_c1 <= 0 or self.u0_c2 <= 0:
            out.append("u0_c1/u0_c2: soliton speeds must be positive")
        if self.u0_xi == 0:
            out.append("u0_xi: must be nonzero")
        if self.oracle_N < 64 or self.oracle_N & (self.oracle_N - 1):
            out.append(f"oracle_N: must be a power of two >= 64, got {self.oracle_N}")
        elif self.oracle_lo < self.oracle_hi and not SpectralGrid(self.oracle_N, self.oracle_lo,
                                                                  self.oracle_hi).contains(self.domain_lo,
                                                                                           self.domain_hi):
            out.append("oracle_lo/oracle_hi: spectral box must contain the domain with a margin of 10")
        if self.sensors != "moving_interval" and (self.sensor_lo1 or self.sensor_hi1):
            out.append(f"sensor_lo1/sensor_hi1: {self.sensors} sensors cannot move")
        if self.sensors != "uniform_fixed" and self.m >= 1:
            for t in (0.0, self.T):
                lo = self.sensor_lo0 + self.sensor_lo1 * t
                hi = self.sensor_hi0 + self.sensor_hi1 * t
                if not lo < hi:
                    out.append(f"sensor interval collapses at t={t}: [{lo}, {hi}]")
        if self.mode in ("filter", "forward", "diagnose") and self.xi_true is None and not self.observation_log:
            out.append(f"xi_true: required for mode={self.mode} without an observation_log")
        if self.truth == "ngs" and self.init != "u0":
            out.append("truth=ngs: the model truth is started from the fitted u0, so init must be 'u0'")
        if any(s < 0.0 for s in self.snapshot_times):
            out.append(f"snapshot_times: must be >= 0 (times past T are skipped), got {list(self.snapshot_times)}")
        return out

    def validate(self) -> "RunConfig":
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        return self

    # -- text round trip -------------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {_format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["snapshot_times"] = list(self.snapshot_times)
        return d


def _format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(repr(float(s)) for s in v)
    return str(v)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "Optional[float]":
        return None if raw.lower() in ("", "none") else float(raw)
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "tuple":
        return tuple(float(s) for s in raw.split(",") if s.strip())
    return raw


def from_mapping(values: dict, base: RunConfig | None = None) -> RunConfig:
    """Apply raw string (or already typed) values onto ``base``; collects every problem."""
    cfg = dataclasses.replace(base) if base is not None else RunConfig()
    problems = []
    for key, raw in values.items():
        if key not in _FIELD_TYPES:
            problems.append(f"unknown key {key!r}")
            continue
        try:
            value = _convert(key, raw) if isinstance(raw, str) else raw
            if _FIELD_TYPES[key] == "tuple":
                value = tuple(float(v) for v in value)
        except (TypeError, ValueError) as exc:
            problems.append(f"{key}: cannot parse {raw!r} ({exc})")
            continue
        setattr(cfg, key, value)
    if problems:
        raise ConfigError(problems + cfg.problems())
    return cfg


def parse_text(text: str, base: RunConfig | None = None) -> RunConfig:
    values = {}
    problems = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        key, raw = (s.strip() for s in line.split("=", 1))
        if key in values:
            problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        values[key] = raw
    try:
        cfg = from_mapping(values, base)
    except ConfigError as exc:
        raise ConfigError(problems + exc.problems) from None
    if problems:
        raise ConfigError(problems + cfg.problems())
    return cfg


def load(path) -> RunConfig:
    with open(path) as fh:
        return parse_text(fh.read())


PRESETS = {
    "paper-m100": dict(sensors="uniform_fixed", m=100),
    "paper-m10-uniform": dict(sensors="uniform_fixed", m=10),
    "paper-m10-support": dict(sensors="interval_fixed", m=10, sensor_lo0=-5.0, sensor_hi0=0.0),
    "paper-m10-moving": dict(sensors="moving_interval", m=10, sensor_lo0=-5.0, sensor_lo1=4.0, sensor_hi0=0.0,
                             sensor_hi1=6.0),
}


def preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    cfg = RunConfig(mode="filter", output_dir=f"runs/{name}", **PRESETS[name])
    return cfg.validate()
