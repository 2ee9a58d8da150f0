from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blobpme.dynamics import DynamicsContext, finite_difference_jacobian
from blobpme.mollifier import Mollifier
from blobpme.potentials import ConfiningPotential, ExternalPotential
from blobpme.targets import KernelMode, build_kernel_table, custom, log_concave, default_piecewise, uniform

TARGETS = {"uniform": uniform(), "log_concave": log_concave(), "piecewise": default_piecewise()}


def context(target, eps, weights, k=0.0, external=None):
    kernels = build_kernel_table(target, Mollifier(eps))
    return DynamicsContext(kernels, ConfiningPotential(k), np.asarray(weights, float),
                           external or ExternalPotential.zero())


def random_state(seed, n=8, spread=1.2):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-spread, spread, n)
    m = rng.uniform(0.2, 1.0, n)
    return x, m / m.sum()


def test_single_interior_particle_is_stationary():
    ctx = context(uniform(), 0.3, [1.0], k=1e9)
    assert ctx.rhs(np.array([0.4]))[0] == 0.0


def test_two_particle_repulsion_value():
    ctx = context(uniform(0.5), 1.0, [0.5, 0.5])
    r = ctx.rhs(np.array([-0.5, 0.5]))
    assert r[0] == pytest.approx(-0.5 * math.exp(-0.25) / (2 * math.sqrt(math.pi)), rel=1e-14)
    assert r[0] == pytest.approx(-0.10984782, abs=1e-8)
    assert r[1] == -r[0]


@pytest.mark.parametrize("name", ["uniform", "log_concave", "piecewise"])
def test_mirror_symmetric_rhs(name):
    rng = np.random.default_rng(5)
    half = np.sort(rng.uniform(0.05, 1.1, 6))
    x = np.concatenate([-half[::-1], half])
    mh = rng.uniform(0.1, 1, 6)
    m = np.concatenate([mh[::-1], mh])
    m /= m.sum()
    ctx = context(TARGETS[name], 0.2, m, k=100.0)
    r = ctx.rhs(x)
    np.testing.assert_allclose(r, -r[::-1], rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("name", ["uniform", "log_concave", "piecewise"])
@pytest.mark.parametrize("seed", range(3))
def test_jacobian_matches_finite_differences(name, seed):
    x, m = random_state(seed)
    ctx = context(TARGETS[name], 0.3, m, k=100.0)
    jac = ctx.jacobian(x)
    fd = finite_difference_jacobian(ctx.rhs, x, 1e-6)
    assert np.all(np.abs(jac - fd) <= 1e-4 * (1 + np.abs(jac)))


def test_single_particle_jacobian_vanishes_for_constant_target():
    # f(x, y) depends on x - y only, so d/dx [f(x, x)] = f_x + f_y = 0
    ctx = context(uniform(0.5), 0.7, [1.0])
    kernels = ctx.kernels
    _, fx, fy = kernels.derivatives(np.array([0.2]), np.array([0.2]))
    assert fx[0] < 0 and fy[0] == -fx[0]
    assert ctx.jacobian(np.array([0.2]))[0, 0] == 0.0


def test_zero_weight_column_has_no_interaction_part():
    x = np.array([-0.4, 0.1, 0.3, 0.8])
    m = np.array([0.3, 0.0, 0.3, 0.4])
    ctx = context(default_piecewise(), 0.3, m, k=0.0)
    jac = ctx.jacobian(x)
    col = jac[:, 1].copy()
    col[1] = 0.0
    np.testing.assert_array_equal(col, np.zeros(4))


@pytest.mark.parametrize("name", ["uniform", "log_concave", "piecewise"])
def test_sparse_jacobian_equals_dense(name):
    rng = np.random.default_rng(6)
    x = rng.uniform(-1.3, 1.3, 300)
    m = rng.uniform(0, 1, 300)
    m[::7] = 0.0
    m /= m.sum()
    ctx = context(TARGETS[name], 0.02, m, k=1e9)
    dense = ctx.jacobian(x)
    sparse = ctx.jacobian_sparse(x)
    assert sparse.nnz < dense.size
    np.testing.assert_allclose(sparse.toarray(), dense, rtol=0, atol=1e-12 * np.abs(dense).max())


def test_energy_examples():
    ctx = context(uniform(0.5), 1.0, [1.0], k=100.0)
    assert ctx.energy(np.array([0.3])) == pytest.approx(1 / (2 * math.sqrt(math.pi)), rel=1e-14)
    assert ctx.energy(np.array([0.3])) == pytest.approx(0.28209479, abs=1e-8)
    assert ctx.energy(np.array([1.1])) == pytest.approx(0.28209479 + 0.5, abs=1e-8)


@pytest.mark.parametrize("name", ["uniform", "log_concave", "piecewise"])
def test_energy_permutation_invariant(name):
    x, m = random_state(7, n=12)
    perm = np.random.default_rng(8).permutation(12)
    a = context(TARGETS[name], 0.25, m, k=100.0).energy(x)
    b = context(TARGETS[name], 0.25, m[perm], k=100.0).energy(x[perm])
    assert a == pytest.approx(b, rel=1e-14)


@pytest.mark.parametrize("name", ["uniform", "log_concave", "piecewise"])
@pytest.mark.parametrize("seed", range(3))
def test_gradient_flow_consistency(name, seed):
    x, m = random_state(10 + seed, spread=1.15)
    ctx = context(TARGETS[name], 0.3, m, k=100.0)
    h = 1e-6
    grad = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (ctx.energy(x + e) - ctx.energy(x - e)) / (2 * h)
    lhs = m * ctx.rhs(x)
    np.testing.assert_allclose(lhs, -grad, rtol=1e-5, atol=1e-5 * np.abs(grad).max())
    np.testing.assert_allclose(ctx.energy_gradient(x), -lhs)


def test_dissipation_identity():
    x, m = random_state(20)
    r = context(default_piecewise(), 0.2, m, k=1e9).rhs(x)
    assert float(np.sum(m * r * r)) >= 0.0


@given(st.floats(-3, 3))
def test_translation_covariance_uniform(shift):
    x, m = random_state(21)
    ctx = context(uniform(), 0.2, m, k=0.0)
    np.testing.assert_allclose(ctx.rhs(x + shift), ctx.rhs(x), rtol=1e-9, atol=1e-12)


def test_stability_rate():
    ctx = context(uniform(0.5), 1.0, [1.0])
    assert ctx.stability_rate() == pytest.approx(-2 / math.sqrt(2 * math.pi), rel=1e-15)
    assert ctx.stability_rate() == pytest.approx(-0.7978845608, abs=1e-10)
    half = context(uniform(0.5), 0.5, [1.0])
    assert half.stability_rate() == pytest.approx(8 * ctx.stability_rate(), rel=1e-14)
    assert context(default_piecewise(), 0.3, [1.0]).stability_rate() <= 0.0
    # no positive lower bound on the whole line
    assert context(log_concave(), 0.3, [1.0]).stability_rate() == -math.inf


def test_quadrature_mode_context_matches_closed_form():
    x, m = random_state(30, n=5)
    c = custom(lambda z: np.full(np.shape(z), 0.5), 0.5, 0.5, name="flat")
    q = context(c, 0.4, m, k=100.0)
    a = context(uniform(0.5), 0.4, m, k=100.0)
    assert q.kernels.mode is KernelMode.QUADRATURE
    np.testing.assert_allclose(q.rhs(x), a.rhs(x), rtol=1e-8, atol=1e-10)
    assert q.energy(x) == pytest.approx(a.energy(x), rel=1e-9)
    np.testing.assert_allclose(q.jacobian(x), a.jacobian(x), rtol=1e-4, atol=1e-5)


def test_external_potential_enters_rhs_and_energy():
    x, m = random_state(31, n=6)
    ext = ExternalPotential(value=lambda z: 0.5 * np.asarray(z) ** 2, grad=lambda z: np.asarray(z),
                            hess=lambda z: np.ones(np.shape(z)))
    plain = context(uniform(), 0.3, m)
    pushed = context(uniform(), 0.3, m, external=ext)
    # zeta * (x^2/2) = x^2/2 + eps^2/2, with gradient x
    np.testing.assert_allclose(pushed.rhs(x) - plain.rhs(x), -x, rtol=1e-8, atol=1e-12)
    assert pushed.energy(x) - plain.energy(x) == pytest.approx(
        float(np.sum(m * (0.5 * x * x + 0.045))), rel=1e-8)
    fd = finite_difference_jacobian(pushed.rhs, x)
    assert np.all(np.abs(pushed.jacobian(x) - fd) <= 1e-4 * (1 + np.abs(fd)))
    assert pushed.stability_rate() == pytest.approx(plain.stability_rate() + 1.0)


def test_weights_validated():
    with pytest.raises(ValueError):
        context(uniform(), 0.3, [0.5, 0.6])
    ctx = context(uniform(), 0.3, [0.5, 0.5])
    with pytest.raises(ValueError):
        ctx.rhs(np.zeros(3))
