"""Particle ODE right-hand side, its Jacobian, and the discrete energy.

    dX^i/dt = -sum_j f(X^i, X^j) m^j - (zeta_eps * V)'(X^i) - V_k'(X^i)
    F(X)    = 1/2 sum_ij g(X^i, X^j) m^i m^j + sum_i m^i (V_k + zeta_eps * V)(X^i)

so that ``m^i dX^i/dt = -dF/dX^i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .potentials import ConfiningPotential, ExternalPotential
from .targets import InteractionKernels, KernelMode


@dataclass(frozen=True, eq=False)
class DynamicsContext:
    kernels: InteractionKernels
    confine: ConfiningPotential
    weights: np.ndarray
    external: ExternalPotential = field(default_factory=ExternalPotential.zero)

    def __post_init__(self):
        m = np.array(self.weights, dtype=float)
        if m.ndim != 1:
            raise ValueError("weights must be a 1-D array")
        if abs(m.sum() - 1.0) > 1e-12 or np.any(m < 0):
            raise ValueError("weights must be nonnegative and sum to 1")
        m.setflags(write=False)
        object.__setattr__(self, "weights", m)

    @property
    def mollifier(self):
        return self.kernels.mollifier

    @property
    def n(self) -> int:
        return self.weights.size

    def _pairs(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != self.weights.shape:
            raise ValueError(f"expected {self.n} positions, got shape {x.shape}")
        return x[:, None], x[None, :]

    def _potential_grad(self, x):
        out = self.confine.grad(x)
        if not self.external.is_zero:
            out = out + self.external.mollified_grad(self.mollifier, x)
        return out

    def interaction(self, x) -> np.ndarray:
        """``sum_j f(X^i, X^j) m^j`` (self-term included)."""
        xi, xj = self._pairs(x)
        if self.kernels.pair_sums is not None:
            return self.kernels.pair_sums.force(x, self.weights)
        return (self.kernels.f(xi, xj) * self.weights).sum(axis=1)

    def rhs(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return -self.interaction(x) - self._potential_grad(x)

    __call__ = rhs

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kernels.mode is not KernelMode.ANALYTIC:
            return finite_difference_jacobian(self.rhs, x)
        self._pairs(x)
        jac = -self.kernels.pair_sums.jacobian(x, self.weights)
        diag = -self.confine.hess(x)
        if not self.external.is_zero:
            diag = diag - self.external.mollified_hess(self.mollifier, x)
        jac[np.diag_indices_from(jac)] += diag
        return jac

    def jacobian_sparse(self, x):
        """Sparse (CSC) Jacobian; entries that are exactly zero are not stored."""
        from scipy import sparse

        x = np.asarray(x, dtype=float)
        if self.kernels.mode is not KernelMode.ANALYTIC:
            return sparse.csc_matrix(self.jacobian(x))
        self._pairs(x)
        rows, cols, vals = self.kernels.pair_sums.jacobian_coo(x, self.weights)
        n = self.n
        diag = np.arange(n)
        vals = np.concatenate([-vals, -self.confine.hess(x) - (
            self.external.mollified_hess(self.mollifier, x) if not self.external.is_zero else 0.0)])
        rows = np.concatenate([rows, diag])
        cols = np.concatenate([cols, diag])
        return sparse.csc_matrix((vals, (rows, cols)), shape=(n, n))

    def energy(self, x) -> float:
        x = np.asarray(x, dtype=float)
        xi, xj = self._pairs(x)
        m = self.weights
        if self.kernels.pair_sums is not None:
            interaction = float(self.kernels.pair_sums.energy(x, m))
        else:
            interaction = 0.5 * float(np.sum((self.kernels.g(xi, xj) * m).sum(axis=1) * m))
        potential = float(np.sum(m * self.confine.value(x)))
        if not self.external.is_zero:
            potential += float(np.sum(m * self.external.mollified_value(self.mollifier, x)))
        return interaction + potential

    def energy_gradient(self, x) -> np.ndarray:
        return -self.weights * self.rhs(x)

    def stability_rate(self) -> float:
        """``-eps^-3 * sup|zeta''| / inf(rho_bar) + inf V''`` (d = 1).

        ``-inf`` when the target is not bounded away from zero.
        """
        lower = self.kernels.target.bounds[0]
        if lower <= 0:
            return -math.inf
        return -self.mollifier.hess_sup() / lower + self.external.hess_inf()


def finite_difference_jacobian(fun, x, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian, step ``h * max(1, |x_j|)``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    jac = np.empty((n, n))
    for j in range(n):
        step = h * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += step
        xm[j] -= step
        jac[:, j] = (np.asarray(fun(xp)) - np.asarray(fun(xm))) / (2.0 * step)
    return jac
