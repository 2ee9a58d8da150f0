"""Confining potential V_k and the (mollified) external potential V."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .mollifier import Mollifier
from .quadrature import QuadratureSpec, integrate_interval


@dataclass(frozen=True)
class ConfiningPotential:
    """Quadratic wall ``(k/2) dist(x, [a, b])^2``; zero on the closed interval.

    ``k = 0`` switches confinement off. Large ``k`` (1e9) makes the particle
    system stiff, which is the integrator's problem, not this class's.
    """

    k: float = 1e9
    omega: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        a, b = self.omega
        if self.k < 0:
            raise ValueError("confinement strength k must be nonnegative")
        if not a < b:
            raise ValueError("omega must satisfy a < b")

    def _excess(self, x):
        a, b = self.omega
        x = np.asarray(x, dtype=float)
        return np.where(x < a, x - a, np.where(x > b, x - b, 0.0))

    def value(self, x):
        e = self._excess(x)
        return 0.5 * self.k * e * e

    def grad(self, x):
        return self.k * self._excess(x)

    def hess(self, x):
        a, b = self.omega
        x = np.asarray(x, dtype=float)
        return np.where((x < a) | (x > b), float(self.k), 0.0)


_MOLLIFIED_QUAD = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-10)


@dataclass(frozen=True)
class ExternalPotential:
    """External potential ``V``; the dynamics only see ``zeta_eps * V``.

    ``grad`` (and optionally ``hess``) of V are needed for a custom potential;
    ``value`` is only used for the energy.
    """

    value: Callable | None = field(default=None, compare=False)
    grad: Callable | None = field(default=None, compare=False)
    hess: Callable | None = field(default=None, compare=False)

    @classmethod
    def zero(cls) -> ExternalPotential:
        return cls()

    @property
    def is_zero(self) -> bool:
        return self.grad is None

    def _smooth(self, fn, moll: Mollifier, x):
        eps = moll.epsilon
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape)
        for idx in np.ndindex(x.shape):
            xi = float(x[idx])
            out[idx] = integrate_interval(lambda z: moll.eval(xi - z) * fn(z),
                                          xi - 10 * eps, xi + 10 * eps,
                                          QuadratureSpec(1e-14, 1e-10, breakpoints=(xi,)))[0]
        return out

    def mollified_value(self, moll: Mollifier, x):
        if self.is_zero or self.value is None:
            return np.zeros(np.shape(x))
        return self._smooth(self.value, moll, x)

    def mollified_grad(self, moll: Mollifier, x):
        """``d/dx (zeta_eps * V)(x) = (zeta_eps * V')(x)``; exactly 0 for ``V = 0``."""
        if self.is_zero:
            return np.zeros(np.shape(x))
        return self._smooth(self.grad, moll, x)

    def mollified_hess(self, moll: Mollifier, x):
        if self.is_zero:
            return np.zeros(np.shape(x))
        if self.hess is not None:
            return self._smooth(self.hess, moll, x)
        # (zeta * V')' = zeta' * V'
        eps = moll.epsilon
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape)
        for idx in np.ndindex(x.shape):
            xi = float(x[idx])
            out[idx] = integrate_interval(lambda z: moll.grad(xi - z) * self.grad(z),
                                          xi - 10 * eps, xi + 10 * eps,
                                          QuadratureSpec(1e-14, 1e-10, breakpoints=(xi,)))[0]
        return out

    def hess_inf(self, lo: float = -10.0, hi: float = 10.0, n: int = 4001) -> float:
        """Grid estimate of ``inf V''``; 0 for the zero potential."""
        if self.is_zero:
            return 0.0
        z = np.linspace(lo, hi, n)
        if self.hess is not None:
            return float(np.min(self.hess(z)))
        h = z[1] - z[0]
        return float(np.min(np.gradient(np.asarray(self.grad(z), dtype=float), h)))


def external_grad(p: ExternalPotential, moll: Mollifier, x):
    return p.mollified_grad(moll, x)
