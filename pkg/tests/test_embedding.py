import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polymkv.core import ConstantPolicy, Interval, RngStream, TimeGrid, euler_step
from polymkv.embedding import (
    PolynomialMkvSpec,
    centered_coefficients,
    moment_ode,
    moment_powers,
    particle_oracle,
    reduce,
    systemic_spec,
)
from polymkv.problems import SystemicParams, embedding_crosscheck_systemic, systemic_problem

coef = st.floats(-1.0, 1.0)


def _const(c):
    return lambda *args: c + 0.0 * args[0]


def test_validation():
    with pytest.raises(ValueError):
        PolynomialMkvSpec(degree=1)
    with pytest.raises(ValueError):
        PolynomialMkvSpec(degree=2, f=(_const(0.0),) * 4)


def test_z0_and_powers():
    spec = PolynomialMkvSpec(degree=3, x0=-2.0)
    np.testing.assert_array_equal(spec.z0, [-2.0, 4.0, -8.0])
    spec = PolynomialMkvSpec(degree=3, x0=-2.0, absolute_moments=True)
    np.testing.assert_array_equal(spec.z0, [-2.0, 4.0, 8.0])
    y = moment_powers(np.array([[1.5, 3.0, 7.0]]), 3)
    assert [float(v[0]) for v in y] == [1.0, 1.5, 3.0, 7.0]


@given(coef, coef, coef, coef, coef, coef, st.floats(-2, 2), st.floats(0.1, 3), st.floats(-3, 3))
def test_moment_drift_matches_ito(b0, b1, t0, t1, g0, g1, m, v, a):
    """Drift of E[X^k | W0] for a Gaussian conditional law, against Ito's
    formula applied to x^k and integrated with Gauss-Hermite quadrature."""
    spec = PolynomialMkvSpec(degree=3, b0=_const(b0), b1=_const(b1), th0=_const(t0), th1=_const(t1),
                             g0=_const(g0), g1=_const(g1))
    problem = reduce(spec, TimeGrid(1.0, 10), Interval(-5, 5))
    x, w = np.polynomial.hermite_e.hermegauss(10)
    w = w / w.sum()
    xs = m + math.sqrt(v) * x
    z = np.array([[np.sum(w * xs), np.sum(w * xs**2), np.sum(w * xs**3)]])
    drift = problem.drift(0.0, z, np.array([a]))[0]
    diff = problem.diffusion(0.0, z, np.array([a]))[0]
    for k in (1, 2, 3):
        d1 = k * xs ** (k - 1)
        d2 = k * (k - 1) * xs ** max(k - 2, 0)
        ito = d1 * (b0 + b1 * xs) + 0.5 * d2 * ((t0 + t1 * xs) ** 2 + (g0 + g1 * xs) ** 2)
        vol = d1 * (g0 + g1 * xs)
        assert drift[k - 1] == pytest.approx(np.sum(w * ito), abs=1e-10)
        assert diff[k - 1] == pytest.approx(np.sum(w * vol), abs=1e-10)


def test_moment_ode_mean_closed_form():
    b0, b1 = 0.3, -0.7
    spec = PolynomialMkvSpec(degree=2, b0=_const(b0), b1=_const(b1), th1=_const(0.2), x0=1.0)
    grid = TimeGrid(1.0, 10)
    out = moment_ode(spec, 0.0, grid)
    t = grid.nodes
    mean = np.exp(b1 * t) + b0 / b1 * (np.exp(b1 * t) - 1.0)
    np.testing.assert_allclose(out[:, 0], mean, rtol=1e-10)


def test_systemic_embedding_matches_direct_dynamics():
    for sp in (SystemicParams(), SystemicParams(rho=0.1), SystemicParams(rho=-0.8, kappa=2.0)):
        rep = embedding_crosscheck_systemic(sp, n_points=1000, seed=3)
        assert rep["drift_max_rel"] < 1e-10
        assert rep["diffusion_max_rel"] < 1e-10
        assert rep["euler_max_rel"] < 1e-10


def test_centered_needs_degree_two():
    spec = PolynomialMkvSpec(degree=3)
    with pytest.raises(ValueError):
        centered_coefficients(reduce(spec, TimeGrid(1.0, 2), None))


def test_systemic_costs_in_moments():
    sp = SystemicParams(eta=10.0, c=100.0)
    raw = reduce(systemic_spec(sp), sp.grid, Interval(0, 10))
    direct = systemic_problem(sp)
    xb, var, a = 9.0, 0.3, np.array([1.5])
    zraw = np.array([[xb, var + xb * xb]])
    zc = np.array([[xb, var]])
    assert raw.running_cost(0.0, zraw, a)[0] == pytest.approx(direct.running_cost(0.0, zc, a)[0], rel=1e-12)
    assert raw.terminal_cost(zraw)[0] == pytest.approx(direct.terminal_cost(zc)[0], rel=1e-12)


def test_particle_oracle_validation():
    with pytest.raises(ValueError):
        particle_oracle(systemic_spec(SystemicParams()), 0.0, 10, TimeGrid(1.0, 2), RngStream(0))


def test_particle_oracle_matches_reduced_sde():
    """Particles and the reduced moment SDE share one common-noise path; the
    empirical conditional moments agree up to particle noise."""
    sp = SystemicParams(x0=10.0, y0=0.0)
    grid = TimeGrid(1.0, 50)
    spec = systemic_spec(sp)
    N = 100_000
    rng = RngStream(7)
    common = rng.generator(0).standard_normal(grid.steps)
    parts = particle_oracle(spec, 1.0, N, grid, rng, common_noise=common)
    raw = reduce(spec, grid, Interval(0, 10))
    z = spec.z0[None, :]
    for n in range(grid.steps):
        z = euler_step(raw, n, z, np.array([1.0]), np.array([common[n]]))
    rel = np.abs(parts[-1] - z[0]) / np.abs(z[0])
    assert np.all(rel < 3.0 / math.sqrt(N))


@pytest.mark.parametrize("seed", [7, 8])
def test_particle_variance_matches_centered_sde(seed):
    """The conditional variance is a small difference of raw moments, so it
    is compared with the centered systemic state on a fine time grid."""
    sp = SystemicParams(steps=400)
    spec = systemic_spec(sp)
    N = 100_000
    rng = RngStream(seed)
    common = rng.generator(0).standard_normal(sp.steps)
    parts = particle_oracle(spec, 1.0, N, sp.grid, rng, common_noise=common)
    direct = systemic_problem(sp)
    z = sp.z0[None, :]
    for n in range(sp.steps):
        z = euler_step(direct, n, z, np.array([1.0]), np.array([common[n]]))
    var = parts[-1, 1] - parts[-1, 0] ** 2
    assert abs(var - z[0, 1]) / z[0, 1] < 3.0 * math.sqrt(2.0 / N)


def test_reduced_problem_is_simulable():
    sp = SystemicParams()
    raw = reduce(systemic_spec(sp), sp.grid, Interval(0, 10))
    from polymkv.core import evaluate_policy

    est = evaluate_policy(raw, ConstantPolicy(1.0), systemic_spec(sp).z0, 1000, RngStream(0))
    assert np.isfinite(est.mean)
