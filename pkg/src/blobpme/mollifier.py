"""Gaussian mollifier and its derivatives."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# sup |zeta''| of the unit Gaussian; attained at the origin (|zeta''(sqrt 3)| is smaller).
STANDARD_HESS_SUP = _INV_SQRT_2PI


@dataclass(frozen=True)
class Mollifier:
    """Gaussian kernel ``zeta_eps(x) = exp(-x^2 / 2 eps^2) / sqrt(2 pi eps^2)``.

    All methods accept scalars or arrays and broadcast.
    """

    epsilon: float

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive and finite, got {self.epsilon!r}")

    def eval(self, x):
        eps = self.epsilon
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * (x / eps) ** 2) * (_INV_SQRT_2PI / eps)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        return -x / self.epsilon**2 * self.eval(x)

    def hess(self, x):
        x = np.asarray(x, dtype=float)
        eps2 = self.epsilon**2
        return (x * x / eps2 - 1.0) / eps2 * self.eval(x)

    def scaled_variance_eval(self, x):
        """Gaussian density with variance ``2 eps^2``, i.e. ``zeta_eps * zeta_eps``."""
        eps = self.epsilon
        x = np.asarray(x, dtype=float)
        return np.exp(-0.25 * (x / eps) ** 2) / (2.0 * eps * math.sqrt(math.pi))

    def cdf(self, x):
        """``int_{-inf}^x zeta_eps``."""
        from scipy.special import ndtr

        return ndtr(np.asarray(x, dtype=float) / self.epsilon)

    def hess_sup(self) -> float:
        return STANDARD_HESS_SUP / self.epsilon**3
