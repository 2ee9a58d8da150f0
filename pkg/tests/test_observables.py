from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blobpme.ensemble import InitialDensity, init_from_density
from blobpme.errors import DegenerateFit, EmptyOmegaMass
from blobpme.mollifier import Mollifier
from blobpme.observables import (
    DiagnosticsRecord, KdeSnapshot, fit_convergence_order, kde_eval, kl_divergence, l1_distance,
    l1_kde_distance, mass_in_interval, mass_in_omega, semilog_slope,
)
from blobpme.quadrature import QuadratureSpec, integrate_interval
from blobpme.targets import log_concave, default_piecewise, uniform


def snap(x, m, eps):
    return KdeSnapshot(np.asarray(x, float), np.asarray(m, float), Mollifier(eps))


def test_single_particle_kde_is_the_mollifier():
    s = snap([0.0], [1.0], 0.3)
    x = np.linspace(-2, 2, 11)
    np.testing.assert_array_equal(kde_eval(s, x), Mollifier(0.3).eval(x))
    np.testing.assert_array_equal(s(x), kde_eval(s, x))


def test_symmetric_pair_kde_is_even():
    s = snap([-0.4, 0.4], [0.5, 0.5], 0.2)
    x = np.linspace(0, 2, 21)
    np.testing.assert_allclose(s(x), s(-x), rtol=1e-15)


@pytest.mark.parametrize("seed", range(3))
def test_kde_unit_mass(seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, 50)
    m = rng.uniform(0, 1, 50)
    s = snap(x, m / m.sum(), 0.05)
    lo, hi = s.support_hull()
    total, _ = integrate_interval(s, lo, hi, QuadratureSpec(max_initial_width=0.05))
    assert abs(total - 1.0) <= 1e-8
    assert s.mass(lo - 10, hi + 10) == pytest.approx(1.0, abs=1e-14)


def test_kde_evaluates_large_batches_in_chunks():
    rng = np.random.default_rng(9)
    s = snap(rng.uniform(-1, 1, 3000), np.full(3000, 1 / 3000), 0.01)
    x = np.linspace(-1, 1, 3003)
    direct = (Mollifier(0.01).eval(s.positions[None, :] - x[:, None]) * s.weights).sum(axis=1)
    np.testing.assert_allclose(s(x), direct, rtol=1e-12)
    assert s(x.reshape(3, -1)).shape == (3, 1001)


def test_mass_in_interval_examples():
    inside = snap([-0.2, 0.1, 0.3], [0.2, 0.5, 0.3], 0.01)
    assert mass_in_interval(inside, -1, 1) == pytest.approx(1.0, abs=1e-6)
    edge = snap([-1.0], [1.0], 0.001)
    assert mass_in_interval(edge, -1, 1) == pytest.approx(0.5, abs=1e-12)
    s = snap([-0.95, 0.5, 1.02], [0.3, 0.3, 0.4], 0.05)
    parts = mass_in_interval(s, -5, -1) + mass_in_interval(s, -1, 1) + mass_in_interval(s, 1, 5)
    assert parts == pytest.approx(1.0, abs=1e-6)
    assert mass_in_omega(s) == mass_in_interval(s, -1, 1)
    with pytest.raises(ValueError):
        mass_in_interval(s, 1, -1)


def test_mass_in_interval_matches_quadrature():
    s = snap([-0.95, 0.5, 1.02], [0.3, 0.3, 0.4], 0.05)
    value, _ = integrate_interval(s, -0.7, 1.1, QuadratureSpec(max_initial_width=0.05))
    assert mass_in_interval(s, -0.7, 1.1) == pytest.approx(value, abs=1e-12)


def test_kl_zero_for_proportional_density():
    from blobpme.targets import custom

    s = snap([0.0], [1.0], 0.3)
    t = custom(lambda z: Mollifier(0.3).eval(z) / s.mass(-1, 1), 0.01, 10.0)
    assert abs(kl_divergence(s, t)) <= 1e-9


@given(st.integers(0, 10 ** 6))
def test_kl_nonnegative(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 30))
    x = rng.uniform(-1.5, 1.5, n)
    m = rng.uniform(0.01, 1, n)
    s = snap(x, m / m.sum(), float(rng.uniform(0.05, 0.5)))
    for t in (uniform(), default_piecewise()):
        assert kl_divergence(s, t) >= -1e-10


def test_kl_of_fine_sample_of_target_is_small():
    n = 2000
    e = init_from_density(InitialDensity.custom(log_concave().density), n)
    s = KdeSnapshot(e.positions, e.weights, Mollifier(4 / n ** 0.99))
    assert kl_divergence(s, log_concave()) <= 0.05


def test_kl_empty_omega():
    s = snap([30.0], [1.0], 0.1)
    with pytest.raises(EmptyOmegaMass):
        kl_divergence(s, uniform())


def test_l1_examples():
    half = lambda x: np.full(np.shape(x), 0.5)  # noqa: E731
    third = lambda x: np.full(np.shape(x), 1 / 3)  # noqa: E731
    assert l1_distance(half, half) == 0.0
    assert l1_distance(half, third) == pytest.approx(1 / 3, abs=1e-12)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_l1_triangle_inequality(a, b, c):
    f = lambda x: np.sin(3 * x + a)  # noqa: E731
    g = lambda x: np.cos(2 * x + b)  # noqa: E731
    h = lambda x: x * c  # noqa: E731
    tol = 1e-9 * 3
    assert l1_distance(f, h) <= l1_distance(f, g) + l1_distance(g, h) + tol


def test_l1_kde_against_piecewise_target_uses_breakpoints():
    t = default_piecewise()
    s = snap([0.0], [1.0], 0.2)
    value = l1_kde_distance(s, t.density, breakpoints=t.finite_breakpoints)
    ref, _ = integrate_interval(lambda x: np.abs(s(x) - t.density(x)), -1, 1,
                                QuadratureSpec(1e-13, 1e-12, breakpoints=t.finite_breakpoints))
    assert value == pytest.approx(ref, rel=1e-8)


def test_l1_between_two_estimates():
    a = snap([0.0], [1.0], 0.2)
    assert l1_kde_distance(a, a) == 0.0
    b = snap([0.1], [1.0], 0.2)
    assert l1_kde_distance(a, b) == pytest.approx(l1_kde_distance(b, a), rel=1e-10)


def test_fit_examples():
    assert fit_convergence_order([10, 20, 40], [1, 0.5, 0.25])[0] == pytest.approx(1.0, abs=1e-12)
    assert fit_convergence_order([10, 100], [1, 0.01])[0] == pytest.approx(2.0, abs=1e-12)
    assert fit_convergence_order([10, 20, 40], [1, 1, 1])[0] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DegenerateFit):
        fit_convergence_order([10, 10], [1, 0.5])
    with pytest.raises(ValueError):
        fit_convergence_order([10, 20], [1, -0.5])


@given(st.floats(1e-6, 1e6))
def test_fit_invariant_to_error_scale(scale):
    ns = [20, 40, 80, 160]
    errs = [0.3, 0.11, 0.05, 0.02]
    o1, i1 = fit_convergence_order(ns, errs)
    o2, i2 = fit_convergence_order(ns, [scale * e for e in errs])
    assert o1 == pytest.approx(o2, abs=1e-9)
    assert i2 - i1 == pytest.approx(math.log(scale), abs=1e-9)


def test_semilog_slope():
    t = np.linspace(0, 1, 11)
    assert semilog_slope(t, 3 * np.exp(-2.5 * t)) == pytest.approx(-2.5, rel=1e-12)


def test_diagnostics_record_invariants():
    r = DiagnosticsRecord(0.1, -1e-12, 0.4, 0.99)
    assert r.kl == 0.0
    assert math.isnan(r.l1_vs_reference)
    assert r.row()[:4] == (0.1, 0.0, 0.4, 0.99)
    with pytest.raises(ValueError):
        DiagnosticsRecord(0.1, -1.0, 0.4, 0.99)
    with pytest.raises(ValueError):
        DiagnosticsRecord(0.1, 0.0, 0.4, 1.5)
