"""Target densities and their interaction kernels.

For a target ``rho_bar`` and the Gaussian mollifier ``zeta`` the two kernels are

    g(x, y) = int zeta(x - z) zeta(y - z) / rho_bar(z) dz
    f(x, y) = d/dx g(x, y)

``f`` drives the particle velocities and ``g`` enters the discrete energy.
Closed forms exist for piecewise-constant targets (uniform included) and for
``C / (1 + x^2)``; anything else is integrated numerically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy import special

from .errors import QuadratureFailure
from .mollifier import Mollifier
from .quadrature import QuadratureSpec, integrate_interval, parse_extended_real

_SQRT_PI = math.sqrt(math.pi)


class TargetKind(str, Enum):
    UNIFORM = "uniform"
    LOG_CONCAVE = "log_concave"
    PIECEWISE_CONSTANT = "piecewise_constant"
    CUSTOM = "custom"


class KernelMode(str, Enum):
    ANALYTIC = "analytic"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class TargetDensity:
    """A target density on the real line.

    ``breakpoints``/``values`` describe the pieces ``[b_k, b_{k+1})`` of a
    piecewise-constant target (the uniform target is the one-piece case);
    ``normalization`` is the constant of the log-concave target; ``func`` is the
    user density of a custom target. ``bounds`` are the infimum and supremum of
    the density over the real line.
    """

    kind: TargetKind
    breakpoints: tuple[float, ...] = ()
    values: tuple[float, ...] = ()
    normalization: float = 0.0
    func: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    bounds: tuple[float, float] = (0.0, 0.0)
    name: str = ""

    def density(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is TargetKind.LOG_CONCAVE:
            return self.normalization / (1.0 + x * x)
        if self.kind is TargetKind.CUSTOM:
            return np.asarray(self.func(x), dtype=float)
        inner = np.asarray(self.breakpoints[1:-1])
        idx = np.searchsorted(inner, x, side="right")
        return np.asarray(self.values)[idx]

    @property
    def finite_breakpoints(self) -> tuple[float, ...]:
        return tuple(b for b in self.breakpoints if math.isfinite(b))

    def pieces(self):
        return list(zip(self.breakpoints[:-1], self.breakpoints[1:], self.values))


def uniform(c: float = 0.5) -> TargetDensity:
    """Constant target ``c`` extended to the whole line."""
    if not c > 0:
        raise ValueError("uniform target needs c > 0")
    return TargetDensity(TargetKind.UNIFORM, (-math.inf, math.inf), (float(c),),
                         bounds=(float(c), float(c)), name="uniform")


def log_concave(normalization: float = 2.0 / math.pi) -> TargetDensity:
    """``C / (1 + x^2)``; unit mass on (-1, 1) for the default ``C = 2/pi``.

    The density tends to zero at infinity, so its lower bound over the line is 0.
    """
    if not normalization > 0:
        raise ValueError("normalization must be positive")
    return TargetDensity(TargetKind.LOG_CONCAVE, normalization=float(normalization),
                         bounds=(0.0, float(normalization)), name="log_concave")


def piecewise_constant(breakpoints, values) -> TargetDensity:
    """Piecewise-constant target with pieces ``[b_k, b_{k+1})``.

    Breakpoints may include ``"-inf"``/``"+inf"`` tokens. Finite outer
    breakpoints are dropped: the first and last values extend to infinity so
    the target stays bounded below on the whole line.
    """
    bps = [parse_extended_real(b) for b in breakpoints]
    vals = [float(v) for v in values]
    if len(bps) != len(vals) + 1:
        raise ValueError("need len(breakpoints) == len(values) + 1")
    if any(v <= 0 for v in vals):
        raise ValueError("piece values must be strictly positive")
    if any(not lo < hi for lo, hi in zip(bps[:-1], bps[1:])):
        raise ValueError("breakpoints must be strictly increasing")
    bps[0] = -math.inf
    bps[-1] = math.inf
    return TargetDensity(TargetKind.PIECEWISE_CONSTANT, tuple(bps), tuple(vals),
                         bounds=(min(vals), max(vals)), name="piecewise_constant")


def default_piecewise() -> TargetDensity:
    """The five-piece 1/3, 2/3 target with unit mass on (-1, 1)."""
    third = 1.0 / 3.0
    return piecewise_constant(
        ["-inf", -0.75, -0.25, 0.25, 0.75, "+inf"],
        [third, 2 * third, third, 2 * third, third],
    )


def custom(func, lower: float, upper: float, breakpoints=(), name: str = "custom") -> TargetDensity:
    if not 0 < lower <= upper < math.inf:
        raise ValueError("custom target needs 0 < lower <= upper < inf")
    return TargetDensity(TargetKind.CUSTOM, tuple(float(b) for b in breakpoints), func=func,
                         bounds=(float(lower), float(upper)), name=name)


# --------------------------------------------------------------------------- closed forms

def _piecewise_kernels(target: TargetDensity, eps: float, x, y, order: int):
    """g, f and (order 2) f_x, f_y for a piecewise-constant target.

    Per piece [a, b) with m = (x+y)/2, d = x-y:
        I   = exp(-d^2/4eps^2) / (4 sqrt(pi) eps) * [erf((b-m)/eps) - erf((a-m)/eps)]
        Q(t)= exp(-((x-t)^2 + (y-t)^2) / 2eps^2) / (4 sqrt(pi) eps)
        I_x = -d/(2eps^2) I - [Q(b) - Q(a)] / (eps sqrt(pi))
    and the pieces are summed with weights 1/c_k, telescoped per breakpoint.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    eps2 = eps * eps
    d = x - y
    k1 = d * (0.5 / eps2)
    amp = np.exp(d * k1 * -0.5)
    amp *= 1.0 / (4.0 * _SQRT_PI * eps)

    inv = [1.0 / c for c in target.values]
    # breakpoint weight: inverse value of the piece it closes minus the one it opens
    terms = [(beta, inv[j - 1] - inv[j])
             for j, beta in enumerate(target.breakpoints[1:-1], start=1) if inv[j - 1] != inv[j]]
    delta_e = inv[-1] + inv[0]
    sum_q = sum_xq = sum_yq = 0.0
    if terms:
        m = 0.5 * (x + y)
        for beta, w in terms:
            delta_e = delta_e + w * special.erf((beta - m) / eps)
            xb = x - beta
            yb = y - beta
            q = np.exp((xb * xb + yb * yb) * (-0.5 / eps2)) * (w / (4.0 * _SQRT_PI * eps))
            sum_q = sum_q + q
            if order > 1:
                sum_xq = sum_xq + xb * q
                sum_yq = sum_yq + yb * q

    g = amp * delta_e
    f = -k1 * g
    if terms:
        qterm = sum_q / (eps * _SQRT_PI)
        f -= qterm
    if order <= 1:
        return g, f
    f_y_first = k1 * g
    if terms:
        f_y_first -= qterm
    c3 = 1.0 / (eps2 * eps * _SQRT_PI)
    half_g = g * (0.5 / eps2)
    f_x = -half_g - k1 * f
    f_y = half_g - k1 * f_y_first
    if terms:
        f_x += c3 * sum_xq
        f_y += c3 * sum_yq
    return g, f, f_x, f_y


def _log_concave_kernels(target: TargetDensity, eps: float, x, y, order: int):
    """Closed forms for ``rho_bar = C / (1 + z^2)``.

    With S = exp(-d^2/4eps^2) / (2 sqrt(pi) eps C) and w = 1 + m^2 + eps^2/2:
        g = S w,   f = S (m - d w / (2 eps^2)).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    eps2 = eps * eps
    d = x - y
    m = 0.5 * (x + y)
    s = np.exp(d * d * (-0.25 / eps2))
    s *= 1.0 / (2.0 * _SQRT_PI * eps * target.normalization)
    w = 1.0 + m * m + 0.5 * eps2
    k1 = d / (2.0 * eps2)
    h = m - k1 * w
    g = s * w
    f = s * h
    if order <= 1:
        return g, f
    h_x = 0.5 - w / (2.0 * eps2) - k1 * m
    h_y = 0.5 + w / (2.0 * eps2) - k1 * m
    f_x = s * (h_x - k1 * h)
    f_y = s * (h_y + k1 * h)
    return g, f, f_x, f_y


_CLOSED_FORMS = {
    TargetKind.UNIFORM: _piecewise_kernels,
    TargetKind.PIECEWISE_CONSTANT: _piecewise_kernels,
    TargetKind.LOG_CONCAVE: _log_concave_kernels,
}


# --------------------------------------------------------------------------- quadrature route

_KERNEL_QUAD = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-11, max_subdivisions=20000)


def kernel_integrand(target: TargetDensity, moll: Mollifier, x: float, y: float, which: str):
    """The integrand of ``g`` (``which="g"``) or ``f`` (``which="f"``) as a function of z."""
    first = moll.grad if which == "f" else moll.eval

    def integrand(z):
        return first(x - z) * moll.eval(y - z) / target.density(z)

    return integrand


def quadrature_kernel(target: TargetDensity, moll: Mollifier, x: float, y: float,
                      which: str, spec: QuadratureSpec = _KERNEL_QUAD) -> float:
    """Defining integral of ``g`` or ``f`` by adaptive Gauss-Kronrod.

    The Gaussian factors are negligible beyond 10 eps of the pair, so the
    integral runs over ``[min(x, y) - 10 eps, max(x, y) + 10 eps]``.
    """
    eps = moll.epsilon
    x = float(x)
    y = float(y)
    a = min(x, y) - 10.0 * eps
    b = max(x, y) + 10.0 * eps
    pts = {x, y, 0.5 * (x + y)} | set(target.finite_breakpoints)
    spec = QuadratureSpec(spec.abs_tol, spec.rel_tol, spec.max_subdivisions,
                          tuple(sorted(pts)), max_initial_width=eps)
    value, _ = integrate_interval(kernel_integrand(target, moll, x, y, which), a, b, spec)
    return value


# --------------------------------------------------------------------------- kernel table

def _pair_sums(target: TargetDensity, eps: float):
    from ._pairsum import PairSums

    if target.kind is TargetKind.LOG_CONCAVE:
        return PairSums("log_concave", eps, norm=target.normalization)
    inv = [1.0 / c for c in target.values]
    terms = [(beta, inv[j - 1] - inv[j])
             for j, beta in enumerate(target.breakpoints[1:-1], start=1) if inv[j - 1] != inv[j]]
    return PairSums("piecewise", eps, betas=[b for b, _ in terms], ws=[w for _, w in terms],
                    de0=inv[-1] + inv[0])


class InteractionKernels:
    """Kernel evaluator for one (target, mollifier) pair.

    Use :func:`build_kernel_table` to construct; it picks the closed form when
    one exists and verifies it against finite differences first.
    """

    def __init__(self, target: TargetDensity, mollifier: Mollifier, mode: KernelMode):
        if mode is KernelMode.ANALYTIC and target.kind not in _CLOSED_FORMS:
            raise ValueError(f"no closed form registered for {target.kind.value}")
        self.target = target
        self.mollifier = mollifier
        self.mode = mode
        self.warnings: list[str] = []
        self.pair_sums = _pair_sums(target, mollifier.epsilon) if mode is KernelMode.ANALYTIC else None

    @property
    def epsilon(self) -> float:
        return self.mollifier.epsilon

    def _closed(self, x, y, order):
        return _CLOSED_FORMS[self.target.kind](self.target, self.epsilon, x, y, order)

    def _quad(self, x, y, which):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        out = np.empty(x.shape)
        for idx in np.ndindex(x.shape):
            out[idx] = quadrature_kernel(self.target, self.mollifier, x[idx], y[idx], which)
        return out

    def g(self, x, y):
        if self.mode is KernelMode.ANALYTIC:
            return self._closed(x, y, 1)[0]
        return self._quad(x, y, "g")

    def f(self, x, y):
        if self.mode is KernelMode.ANALYTIC:
            return self._closed(x, y, 1)[1]
        return self._quad(x, y, "f")

    def g_and_f(self, x, y):
        if self.mode is KernelMode.ANALYTIC:
            return self._closed(x, y, 1)
        return self._quad(x, y, "g"), self._quad(x, y, "f")

    def derivatives(self, x, y):
        """``(f, df/dx, df/dy)``; closed forms only."""
        if self.mode is not KernelMode.ANALYTIC:
            raise NotImplementedError("kernel derivatives are only available in analytic mode")
        _, f, f_x, f_y = self._closed(x, y, 2)
        return f, f_x, f_y

    def __repr__(self):
        return f"InteractionKernels({self.target.name}, eps={self.epsilon:g}, mode={self.mode.value})"


def self_check_points(eps: float):
    """25 deterministic (x, y) pairs mixing far-apart and nearby particles."""
    xs = np.linspace(-1.2, 1.2, 5)
    offsets = eps * np.array([-2.0, -0.5, 0.0, 0.7, 1.5])
    x, off = np.meshgrid(xs, offsets, indexing="ij")
    return x.ravel(), (x + off).ravel()


def finite_difference_mismatch(kernels: InteractionKernels, x, y, h: float) -> float:
    """max |f - (g(x+h) - g(x-h)) / 2h| / max(1, |f|) over the given pairs."""
    f = kernels.f(x, y)
    fd = (kernels.g(x + h, y) - kernels.g(x - h, y)) / (2.0 * h)
    return float(np.max(np.abs(f - fd) / np.maximum(1.0, np.abs(f))))


def build_kernel_table(target: TargetDensity, mollifier: Mollifier,
                       check_tol: float = 1e-5) -> InteractionKernels:
    if target.kind not in _CLOSED_FORMS:
        return InteractionKernels(target, mollifier, KernelMode.QUADRATURE)
    table = InteractionKernels(target, mollifier, KernelMode.ANALYTIC)
    x, y = self_check_points(mollifier.epsilon)
    mismatch = finite_difference_mismatch(table, x, y, 1e-3 * mollifier.epsilon)
    if not mismatch <= check_tol:
        msg = (f"closed-form kernels for {target.name} failed the f = dg/dx self-check "
               f"(mismatch {mismatch:.3g}); falling back to quadrature")
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        table = InteractionKernels(target, mollifier, KernelMode.QUADRATURE)
        table.warnings.append(msg)
    return table


__all__ = [
    "TargetKind", "KernelMode", "TargetDensity", "InteractionKernels", "QuadratureFailure",
    "uniform", "log_concave", "piecewise_constant", "default_piecewise", "custom",
    "build_kernel_table", "quadrature_kernel", "kernel_integrand",
]
