"""Independent reference computations used to check the fast paths.

Everything here is deliberately slow and simple: SciPy's QUADPACK instead of
the package's own quadrature, central differences instead of analytic
derivatives, and the exact Barenblatt solution of ``u_t = (u^2)_xx``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .ensemble import ParticleEnsemble, barenblatt, barenblatt_radius
from .errors import QuadratureFailure
from .mollifier import Mollifier
from .targets import TargetDensity


def _quad(func, a, b, points=(), epsrel=1e-12):
    # nearly coincident points leave slivers QUADPACK cannot subdivide; merge them
    gap = 1e-9 * (b - a)
    pts = []
    for p in sorted(float(p) for p in set(points) if a + gap < p < b - gap):
        if not pts or p - pts[-1] > gap:
            pts.append(p)
    kw = dict(points=pts or None, limit=2000, epsabs=0.0, epsrel=epsrel)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, _ = integrate.quad(func, a, b, **kw)
    for w in caught:
        # roundoff warnings are expected when the integral cancels to ~0
        if issubclass(w.category, integrate.IntegrationWarning) and "roundoff" not in str(w.message):
            raise QuadratureFailure(str(w.message))
    return value


def reference_kernel(target: TargetDensity, moll: Mollifier, x: float, y: float,
                     which: str = "g", absolute: bool = False) -> float:
    """QUADPACK value of the defining integral of ``g`` or ``f``.

    ``absolute=True`` integrates the modulus of the integrand instead, which is
    the natural scale for judging cancelling values of ``f``.
    """
    eps = moll.epsilon
    first = moll.grad if which == "f" else moll.eval

    def integrand(z):
        v = float(first(x - z) * moll.eval(y - z) / target.density(z))
        return abs(v) if absolute else v

    a = min(x, y) - 10 * eps
    b = max(x, y) + 10 * eps
    pts = {x, y, 0.5 * (x + y), *target.finite_breakpoints}
    return _quad(integrand, a, b, pts)


def kernel_relative_error(value: float, reference: float, scale: float, floor: float = 1e-290) -> float:
    """``|value - reference| / scale`` with scales below ``floor`` treated as ``floor``."""
    return abs(value - reference) / max(scale, floor)


def finite_difference_jacobian(fun, x, h: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2 * h))
    return np.stack(cols, axis=1)


def finite_difference_gradient(fun, x, h: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        out[j] = (fun(x + e) - fun(x - e)) / (2 * h)
    return out


@dataclass(frozen=True)
class ExactSolution:
    """Self-similar Barenblatt solution ``psi_{t + tau0}`` of ``u_t = (u^2)_xx``.

    For the constant target 1/2 with no potentials the weighted equation
    reduces to this one.
    """

    tau0: float = 0.0625

    def __call__(self, x, t: float = 0.0):
        return exact_barenblatt(self, x, t)

    def radius(self, t: float) -> float:
        return barenblatt_radius(t + self.tau0)

    def mass(self, t: float) -> float:
        r = self.radius(t)
        return _quad(lambda x: float(self(x, t)), -r, r, (0.0,))


def exact_barenblatt(sol: ExactSolution, x, t: float):
    return barenblatt(t + sol.tau0, x)


def pde_residual(sol: ExactSolution, x, t: float, h: float = 1e-4):
    """Central-difference residual ``u_t - (u^2)_xx`` at smooth interior points."""
    x = np.asarray(x, dtype=float)
    # one-sided in time at t = 0 would lose an order; tau0 > 0 lets us centre.
    u_t = (sol(x, t + h) - sol(x, t - h)) / (2 * h)
    sq = lambda z: sol(z, t) ** 2  # noqa: E731
    u2_xx = (sq(x + h) - 2 * sq(x) + sq(x - h)) / (h * h)
    return u_t - u2_xx


def w1_ensemble_vs_density(e: ParticleEnsemble, rho, support: tuple[float, float]) -> float:
    """1-D Wasserstein-1 distance as the L1 distance between CDFs."""
    order = np.argsort(e.positions, kind="stable")
    xs = e.positions[order]
    cum = np.concatenate([[0.0], np.cumsum(e.weights[order])])
    lo = min(support[0], float(xs[0]))
    hi = max(support[1], float(xs[-1]))
    edges = np.concatenate([[lo], xs, [hi]])
    rho_s = lambda z: float(rho(z)) if support[0] <= z <= support[1] else 0.0  # noqa: E731
    total = 0.0
    cdf_left = 0.0
    for k in range(edges.size - 1):
        a, b = float(edges[k]), float(edges[k + 1])
        if b <= a:
            continue
        level = float(cum[k])

        def gap(x, a=a, base=cdf_left, level=level):
            inner = _quad(rho_s, a, x, epsrel=1e-10) if x > a else 0.0
            return abs(level - (base + inner))

        total += _quad(gap, a, b, epsrel=1e-9)
        cdf_left += _quad(rho_s, a, b, epsrel=1e-10)
    return total

def w1_between_ensembles(p: ParticleEnsemble, q: ParticleEnsemble) -> float:
    """Exact W1 between two weighted point clouds (CDF step functions)."""
    pts = np.concatenate([p.positions, q.positions])
    order = np.argsort(pts, kind="stable")
    pts = pts[order]
    steps = np.concatenate([p.weights, -q.weights])[order]
    diff = np.cumsum(steps)[:-1]
    return float(np.sum(np.abs(diff) * np.diff(pts)))


__all__ = [
    "ExactSolution", "exact_barenblatt", "pde_residual", "reference_kernel",
    "kernel_relative_error", "finite_difference_jacobian", "finite_difference_gradient",
    "w1_ensemble_vs_density", "w1_between_ensembles",
]
