"""Empirical measures: particle positions with fixed weights."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ZeroMass


@dataclass(frozen=True, eq=False)
class ParticleEnsemble:
    positions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.array(self.positions, dtype=float)
        m = np.array(self.weights, dtype=float)
        if x.ndim != 1 or x.shape != m.shape:
            raise ValueError("positions and weights must be 1-D arrays of equal length")
        if not np.all(np.isfinite(x)):
            raise ValueError("particle positions must be finite")
        if np.any(m < 0):
            raise ValueError("weights must be nonnegative")
        if abs(m.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 (got {m.sum():.17g})")
        x.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "weights", m)

    @property
    def n(self) -> int:
        return self.positions.size

    def moved(self, positions) -> ParticleEnsemble:
        return ParticleEnsemble(positions, self.weights)


def barenblatt(tau: float, x):
    """Barenblatt profile ``tau^(-1/3)/12 * (3^(4/3) - x^2 / tau^(2/3))_+``.

    Unit mass, supported on ``|x| <= 3^(2/3) tau^(1/3)``.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    x = np.asarray(x, dtype=float)
    core = 3.0 ** (4.0 / 3.0) - x * x / tau ** (2.0 / 3.0)
    return tau ** (-1.0 / 3.0) / 12.0 * np.maximum(core, 0.0)


def barenblatt_radius(tau: float) -> float:
    return 3.0 ** (2.0 / 3.0) * tau ** (1.0 / 3.0)


@dataclass(frozen=True)
class InitialDensity:
    """Initial condition: ``"barenblatt"`` (with ``tau``), ``"uniform"`` or ``"custom"``."""

    kind: str
    tau: float = 0.0625
    func: Callable | None = None

    @classmethod
    def barenblatt(cls, tau: float = 0.0625) -> InitialDensity:
        return cls("barenblatt", tau=tau)

    @classmethod
    def uniform(cls) -> InitialDensity:
        return cls("uniform")

    @classmethod
    def custom(cls, func: Callable) -> InitialDensity:
        return cls("custom", func=func)

    def density(self, x, omega=(-1.0, 1.0)):
        x = np.asarray(x, dtype=float)
        if self.kind == "barenblatt":
            return barenblatt(self.tau, x)
        if self.kind == "uniform":
            a, b = omega
            return np.where((x >= a) & (x <= b), 1.0 / (b - a), 0.0)
        if self.kind == "custom":
            return np.asarray(self.func(x), dtype=float)
        raise ValueError(f"unknown initial density kind {self.kind!r}")


def lattice_midpoints(n: int, omega=(-1.0, 1.0)) -> np.ndarray:
    a, b = omega
    # written about the centre so a symmetric omega gives exactly mirrored points
    centre = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return centre + half * ((2.0 * np.arange(n) + 1.0 - n) / n)


def init_from_density(rho0: InitialDensity, n: int, omega=(-1.0, 1.0)) -> ParticleEnsemble:
    """Midpoints of ``n`` equal cells of ``omega`` with weights ``∝ rho0(midpoint)``.

    Particles where ``rho0`` vanishes keep weight zero; they still move but
    exert no force.
    """
    if n < 1:
        raise ValueError("need at least one particle")
    x = lattice_midpoints(n, omega)
    w = np.maximum(rho0.density(x, omega), 0.0)
    total = math.fsum(w)
    if not total > 0:
        raise ZeroMass("initial density vanishes at every lattice midpoint")
    w = w / total
    return ParticleEnsemble(x, w)
