from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blobpme.errors import QuadratureFailure
from blobpme.mollifier import Mollifier
from blobpme.quadrature import QuadratureSpec, erf, integrate_interval, parse_extended_real


def test_constant():
    value, err = integrate_interval(lambda x: np.ones_like(x), -1.0, 1.0, QuadratureSpec())
    assert value == 2.0
    assert err >= 0


def test_gaussian_mass():
    m = Mollifier(0.1)
    value, _ = integrate_interval(m.eval, -1.0, 1.0, QuadratureSpec())
    assert value == pytest.approx(math.erf(1 / (0.1 * math.sqrt(2))), abs=1e-12)
    assert value == pytest.approx(1.0, abs=1e-12)


def test_polynomial():
    value, _ = integrate_interval(lambda x: x * x, 0.0, 1.0, QuadratureSpec())
    assert abs(value - 1 / 3) <= 1e-12


def test_piecewise_constant_with_breakpoints_is_exact():
    f = lambda x: np.where(x < 0.3, 1.0, np.where(x < 0.8, 2.5, -0.5))  # noqa: E731
    spec = QuadratureSpec(breakpoints=(0.3, 0.8))
    value, _ = integrate_interval(f, -1.0, 2.0, spec)
    assert abs(value - (1.3 * 1.0 + 0.5 * 2.5 - 1.2 * 0.5)) <= 1e-13


@given(st.floats(-2, 0), st.floats(0.01, 1.0), st.floats(1.01, 3))
def test_additivity(a, c, b):
    f = lambda x: np.exp(-x * x) * np.cos(3 * x)  # noqa: E731
    spec = QuadratureSpec()
    left, el = integrate_interval(f, a, c, spec)
    right, er = integrate_interval(f, c, b, spec)
    whole, ew = integrate_interval(f, a, b, spec)
    assert abs(left + right - whole) <= 3 * (spec.abs_tol + spec.rel_tol * abs(whole)) + el + er + ew


def test_sharp_peak_meets_tolerance():
    f = lambda x: 1e-3 / (x * x + 1e-6)  # noqa: E731
    value, _ = integrate_interval(f, -1.0, 1.0, QuadratureSpec(rel_tol=1e-10))
    exact = 1e-3 * 2 * math.atan(1 / 1e-3) / 1e-3
    assert value == pytest.approx(exact, rel=1e-10)


def test_failure_when_subdivisions_exhausted():
    with pytest.raises(QuadratureFailure):
        integrate_interval(lambda x: np.sign(np.sin(1000 * x)), 0.0, 1.0,
                           QuadratureSpec(abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=20))


def test_reversed_limits_rejected():
    with pytest.raises(ValueError):
        integrate_interval(lambda x: x, 1.0, 0.0, QuadratureSpec())


@pytest.mark.parametrize("kw", [{"abs_tol": 0.0}, {"rel_tol": -1.0}, {"max_subdivisions": 0}])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        QuadratureSpec(**kw)


def test_erf_values():
    assert erf(0.0) == 0.0
    assert erf(1.0) == pytest.approx(0.8427007929497149, abs=1e-15)
    assert erf("+inf") == 1.0
    assert erf("-inf") == -1.0
    assert erf(math.inf) == 1.0


@given(st.floats(-10, 10))
def test_erf_odd(x):
    assert erf(-x) == -erf(x)


def test_erf_against_defining_integral():
    for x in (0.1, 0.5, 2.0):
        value, _ = integrate_interval(lambda t: 2 / math.sqrt(math.pi) * np.exp(-t * t), 0.0, x,
                                      QuadratureSpec(abs_tol=1e-15, rel_tol=1e-14))
        assert abs(erf(x) - value) <= 1e-12


def test_parse_extended_real():
    assert parse_extended_real("-inf") == -math.inf
    assert parse_extended_real("+inf") == math.inf
    assert parse_extended_real(0.25) == 0.25
    with pytest.raises(ValueError):
        parse_extended_real("nonsense")
