"""Diagnostics computed from particle snapshots."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateFit, EmptyOmegaMass
from .mollifier import Mollifier
from .quadrature import QuadratureSpec, integrate_interval
from .targets import TargetDensity

DEFAULT_SPEC = QuadratureSpec(abs_tol=1e-11, rel_tol=1e-9, max_subdivisions=200000)

_CHUNK = 1 << 22  # particles x evaluation points per block


@dataclass(frozen=True, eq=False)
class KdeSnapshot:
    """Kernel density estimate ``sum_i zeta_eps(X^i - x) m^i`` of one particle state."""

    positions: np.ndarray
    weights: np.ndarray
    mollifier: Mollifier

    def __post_init__(self):
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))

    @property
    def epsilon(self) -> float:
        return self.mollifier.epsilon

    def __call__(self, x):
        return kde_eval(self, x)

    def mass(self, a: float, b: float) -> float:
        """Exact ``int_a^b`` of the estimate (Gaussian CDFs)."""
        from scipy.special import ndtr

        eps = self.epsilon
        upper = ndtr((b - self.positions) / eps)
        lower = ndtr((a - self.positions) / eps)
        return float(np.sum(self.weights * (upper - lower)))

    def support_hull(self, pad: float = 12.0) -> tuple[float, float]:
        return (float(self.positions.min() - pad * self.epsilon),
                float(self.positions.max() + pad * self.epsilon))


def kde_eval(s: KdeSnapshot, x):
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.empty(flat.size)
    step = max(1, _CHUNK // max(1, s.positions.size))
    for lo in range(0, flat.size, step):
        block = flat[lo:lo + step]
        out[lo:lo + step] = s.weights @ s.mollifier.eval(s.positions[:, None] - block[None, :])
    return out.reshape(x.shape)


def _spec_for(s: KdeSnapshot, spec: QuadratureSpec, extra=()) -> QuadratureSpec:
    """Resolve features of the estimate: initial pieces no wider than eps."""
    width = s.epsilon if spec.max_initial_width is None else min(spec.max_initial_width, s.epsilon)
    return QuadratureSpec(spec.abs_tol, spec.rel_tol, spec.max_subdivisions,
                          tuple(sorted(set(spec.breakpoints) | set(extra))), width)


def mass_in_interval(s: KdeSnapshot, a: float, b: float, spec: QuadratureSpec | None = None) -> float:
    """``int_a^b`` of the estimate, clipped to [0, 1].

    Uses the Gaussian CDF in closed form; ``spec`` is accepted for API symmetry.
    """
    if not a < b:
        raise ValueError("need a < b")
    return min(1.0, max(0.0, s.mass(a, b)))


def mass_in_omega(s: KdeSnapshot, omega=(-1.0, 1.0)) -> float:
    return mass_in_interval(s, *omega)


def kl_divergence(s: KdeSnapshot, target: TargetDensity, omega=(-1.0, 1.0),
                  spec: QuadratureSpec | None = None) -> float:
    """KL divergence on omega between the renormalised estimate and the target.

    The estimate is divided by its mass ``C`` on omega so that it is a
    probability density there; ``0 log 0 = 0`` and log arguments are clamped
    at 1e-300.
    """
    spec = spec or DEFAULT_SPEC
    a, b = omega
    c = s.mass(a, b)
    if c <= 1e-300:
        raise EmptyOmegaMass(f"estimate has mass {c:.3g} on omega")

    def integrand(x):
        p = kde_eval(s, x) / c
        q = target.density(x)
        ratio = np.maximum(p, 1e-300) / np.maximum(q, 1e-300)
        return np.where(p > 0, p * np.log(ratio), 0.0)

    value, _ = integrate_interval(integrand, a, b, _spec_for(s, spec, target.finite_breakpoints))
    return value


def l1_distance(f: Callable, g: Callable, omega=(-1.0, 1.0), spec: QuadratureSpec | None = None) -> float:
    """``int_omega |f - g|`` for vectorised callables."""
    spec = spec or DEFAULT_SPEC
    a, b = omega
    value, _ = integrate_interval(lambda x: np.abs(np.asarray(f(x)) - np.asarray(g(x))), a, b, spec)
    return value


def l1_kde_distance(s: KdeSnapshot, other: Callable, omega=(-1.0, 1.0),
                    spec: QuadratureSpec | None = None, breakpoints=()) -> float:
    """L1 distance on omega between an estimate and another density."""
    spec = _spec_for(s, spec or DEFAULT_SPEC, breakpoints)
    if isinstance(other, KdeSnapshot):
        spec = _spec_for(other, spec)
    return l1_distance(s, other, omega, spec)


def fit_convergence_order(ns, errors) -> tuple[float, float]:
    """Least-squares fit ``log err = intercept - order * log N``; returns ``(order, intercept)``."""
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if ns.shape != errors.shape or ns.size < 2:
        raise ValueError("need two or more (N, error) pairs of equal length")
    if np.any(errors <= 0) or np.any(ns <= 0):
        raise ValueError("N and errors must be positive")
    if np.all(ns == ns[0]):
        raise DegenerateFit("all N values are equal")
    slope, intercept = np.polyfit(np.log(ns), np.log(errors), 1)
    return float(-slope), float(intercept)


def semilog_slope(times, values) -> float:
    """Least-squares slope of ``log(values)`` against ``times``."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    return float(np.polyfit(times, np.log(values), 1)[0])


@dataclass
class DiagnosticsRecord:
    time: float
    kl: float
    energy: float
    mass_in_omega: float
    l1_vs_reference: float = math.nan

    def __post_init__(self):
        if self.kl < -1e-10:
            raise ValueError(f"negative KL divergence {self.kl}")
        self.kl = max(self.kl, 0.0)
        if not -1e-12 <= self.mass_in_omega <= 1 + 1e-12:
            raise ValueError("mass_in_omega outside [0, 1]")

    def row(self) -> tuple[float, ...]:
        return (self.time, self.kl, self.energy, self.mass_in_omega, self.l1_vs_reference)
