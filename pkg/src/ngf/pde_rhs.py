"""Right-hand sides f(t, x, u, xi) of du/dt = f, evaluated through a FieldJet."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .ansatz import FieldJet
from .errors import DomainError


@dataclass(frozen=True)
class ParamDomain:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"parameter interval needs lo <= hi, got [{self.lo}, {self.hi}]")


class RhsSpec(Protocol):
    name: str
    max_spatial_order: int

    def evaluate(self, t, x, jet: FieldJet, xi): ...


@dataclass(frozen=True)
class KdV:
    """du/dt = -u_xxx - xi * u * u_x. Autonomous: ``t`` is accepted and ignored."""

    name: str = "kdv"
    max_spatial_order: int = 3

    def evaluate(self, t, x, jet: FieldJet, xi):
        return kdv_rhs(t, x, jet, xi)

    def affine_parts(self, t, x, jet: FieldJet):
        """(f0, f1) with f(xi) = f0 + xi * f1 at every point."""
        _require(jet, 3)
        return -jet.dx[2], -jet.value * jet.dx[0]


def _require(jet: FieldJet, order: int):
    if jet.max_order < order:
        raise ValueError(f"rhs needs spatial derivatives up to order {order}, jet carries {jet.max_order}")


def kdv_rhs(t, x, jet: FieldJet, xi):
    _require(jet, 3)
    return -jet.dx[2] - xi * jet.value * jet.dx[0]


def soliton_field(x, t, c, a, xi):
    """Exact traveling wave (3c/xi) sech^2(sqrt(c)/2 (x - c t - a)) of the KdV equation above."""
    if xi == 0:
        raise DomainError("soliton amplitude 3c/xi is undefined for xi = 0")
    if c <= 0:
        raise DomainError(f"soliton speed must be positive, got {c}")
    arg = 0.5 * np.sqrt(c) * (np.asarray(x, dtype=float) - c * t - a)
    return (3.0 * c / xi) * _sech2(arg)


def _sech2(arg):
    # 4 e^{-2|a|} / (1 + e^{-2|a|})^2: no overflow far from the crest
    e = np.exp(-2.0 * np.abs(arg))
    return 4.0 * e / (1.0 + e) ** 2


def soliton_dt(x, t, c, a, xi):
    """Analytic time derivative of :func:`soliton_field`."""
    k = 0.5 * np.sqrt(c)
    arg = k * (np.asarray(x, dtype=float) - c * t - a)
    # d/dt sech^2(arg) = -2 sech^2 tanh * d(arg)/dt, d(arg)/dt = -k c
    return (3.0 * c / xi) * 2.0 * k * c * np.tanh(arg) * _sech2(arg)


RHS_REGISTRY = {"kdv": KdV()}


def get_rhs(name: str):
    try:
        return RHS_REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown rhs {name!r}; known: {sorted(RHS_REGISTRY)}") from None
