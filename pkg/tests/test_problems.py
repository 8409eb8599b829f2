import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polymkv.core import ConstantPolicy, RngStream, evaluate_policy, simulate_paths
from polymkv.problems import (
    TABLE1,
    TABLE2,
    TABLE3_C,
    TABLE3_RHO,
    GaussianPriorWeight,
    LiquidationParams,
    SelectionParams,
    SystemicParams,
    ToyLQParams,
    erfi,
    liquidation_basis,
    liquidation_bench_policy,
    liquidation_bench_value,
    liquidation_opt_policy,
    liquidation_opt_rate,
    liquidation_price_integral,
    liquidation_problem,
    log_weight_F,
    selection_closed_form_value,
    selection_opt_policy,
    selection_opt_strategy,
    selection_problem,
    systemic_problem,
    toy_lq_problem,
    toy_lq_riccati,
    toy_lq_value,
    weight_F,
)

import oracles

b0s = st.floats(-0.5, 0.5)
g0s = st.floats(0.05, 1.5)


# --------------------------------------------------------------------------
# Density weight


@given(b0s, g0s, st.floats(0.05, 2.0), st.floats(0.0, 2.0), st.floats(-4, 4))
def test_log_weight_consistent(b0, g0, sigma, t, w):
    prior = GaussianPriorWeight(b0, g0, sigma)
    assert math.log(weight_F(t, w, prior)) == pytest.approx(float(log_weight_F(t, w, prior)), abs=1e-10)


@given(b0s, g0s, st.floats(0.1, 1.0), st.floats(0.05, 2.0), st.floats(-3, 3))
def test_weight_is_bayesian_mixture(b0, g0, sigma, t, w):
    """``F(t, w) = E_theta[exp(theta w - theta^2 t / 2)]`` with
    ``theta ~ N(b0 / sigma, (g0 / sigma)^2)``, by quadrature."""
    mp.mp.dps = 25
    m, s = b0 / sigma, g0 / sigma
    ref = mp.quad(lambda th: mp.exp(th * w - th * th * t / 2) * mp.npdf(th, m, s), [-mp.inf, m, mp.inf])
    assert float(weight_F(t, w, GaussianPriorWeight(b0, g0, sigma))) == pytest.approx(float(ref), rel=1e-8)


@settings(max_examples=20)
@given(b0s, st.floats(0.05, 1.0), st.floats(0.1, 2.0))
def test_weight_has_unit_mean(b0, g0, t):
    prior = GaussianPriorWeight(b0, g0, 0.4)
    mp.mp.dps = 20
    s = math.sqrt(t)
    mean = mp.quad(lambda w: mp.exp(float(log_weight_F(t, float(w), prior)) - w * w / (2 * t)) / (s * mp.sqrt(2 * mp.pi)),
                   [-mp.inf, 0, mp.inf])
    assert float(mean) == pytest.approx(1.0, abs=1e-8)


def test_predictive_law_matches_weight_ratio():
    """One-step density ratio F(t+dt)/F(t) is the Gaussian predictive law."""
    prior = GaussianPriorWeight(0.1, 0.7, 0.4)
    t, w, dt = 0.3, 0.25, 0.01
    mean, scale = prior.predictive(t, w, dt)
    x, q = np.polynomial.hermite_e.hermegauss(60)
    q = q / q.sum()
    dW = math.sqrt(dt) * x
    ratio = weight_F(t + dt, w + dW, prior) / weight_F(t, w, prior)
    assert np.sum(q * ratio * dW) == pytest.approx(mean * dt, rel=1e-8)
    assert np.sum(q * ratio * dW**2) == pytest.approx((mean * dt) ** 2 + scale**2 * dt, rel=1e-8)


@given(st.floats(-5.9, 5.9))
def test_erfi_matches_mpmath(x):
    assert erfi(x) == pytest.approx(float(mp.erfi(x)), rel=1e-12, abs=1e-300)


def test_erfi_range():
    with pytest.raises(ValueError):
        erfi(7.0)


# --------------------------------------------------------------------------
# Liquidation


@pytest.mark.parametrize("b0,g0", [(0.1, 0.1), (0.1, 0.5), (0.1, 1.0), (-0.1, 0.1), (0.3, 0.05)])
def test_price_integral_two_routes(b0, g0):
    quad = oracles.mp_price_integral(1.0, b0, g0)
    closed = oracles.mp_price_integral_erfi(1.0, b0, g0)
    assert quad == pytest.approx(closed, rel=1e-12)
    assert float(liquidation_price_integral(1.0, b0, g0)) == pytest.approx(quad, rel=1e-12)


def test_price_integral_degenerate_prior():
    assert float(liquidation_price_integral(0.5, 0.0, 0.0)) == 0.5
    assert float(liquidation_price_integral(1.0, 0.2, 0.0)) == pytest.approx(math.expm1(0.2) / 0.2)


def test_opt_rate_martingale_example():
    p = LiquidationParams(b0=0.0, gamma0=0.0)
    assert float(liquidation_opt_rate(0.0, 6.0, 1.0, p)) == pytest.approx(oracles.OPT_RATE_MARTINGALE, rel=1e-12)


@given(st.floats(0.0, 0.9), st.floats(0.5, 10.0), st.floats(-1.0, 2.0))
def test_opt_rate_tends_to_vwap(t, s, y):
    p = LiquidationParams(b0=0.0, gamma0=0.0, eta=1e12)
    assert float(liquidation_opt_rate(t, s, y, p)) == pytest.approx(-y / (1.0 - t), rel=1e-8, abs=1e-9)


def test_vwap_liquidates_exactly():
    p = LiquidationParams(b0=0.0, gamma0=0.0, eta=1e6)
    paths = simulate_paths(liquidation_problem(p), liquidation_opt_policy(p), p.z0, 100, RngStream(0),
                           keep_paths=True)
    assert np.max(np.abs(paths.states[:, -1, 1])) < 1e-5


def test_bench_value_discrete_and_continuous():
    p = LiquidationParams(gamma0=0.5)
    cont = liquidation_bench_value(p, discrete=False)
    disc = liquidation_bench_value(p, discrete=True)
    assert abs(cont - disc) < 0.01
    assert cont == pytest.approx(-p.s0 * oracles.mp_price_integral(1.0, p.b0, p.gamma0) + p.gamma, rel=1e-12)
    est = evaluate_policy(liquidation_problem(p), liquidation_bench_policy(p), p.z0, 100_000, RngStream(1))
    assert abs(est.mean - disc) < 3 * est.std_error


@pytest.mark.parametrize("gamma0", [0.1, 1.0])
def test_liquidation_forms_agree(gamma0):
    p = LiquidationParams(gamma0=gamma0, steps=20)
    pol = liquidation_opt_policy(p)
    ests = [evaluate_policy(liquidation_problem(p, form), pol, p.z0, 100_000, RngStream(2))
            for form in ("weighted", "filtered")]
    se = math.hypot(ests[0].std_error, ests[1].std_error)
    assert abs(ests[0].mean - ests[1].mean) < 4 * se


def test_reference_measure_agrees_for_small_prior():
    # the weighted estimator is heavy tailed for large gamma0; small prior only
    p = LiquidationParams(gamma0=0.1, steps=20)
    pol = liquidation_opt_policy(p)
    phys = evaluate_policy(liquidation_problem(p), pol, p.z0, 100_000, RngStream(2))
    ref = evaluate_policy(liquidation_problem(p), pol, p.z0, 100_000, RngStream(3), measure="reference")
    assert abs(ref.mean - phys.mean) < 4 * math.hypot(ref.std_error, phys.std_error)


def test_unknown_form():
    with pytest.raises(ValueError):
        liquidation_problem(LiquidationParams(), "other")


@pytest.mark.parametrize("form", ["weighted", "filtered"])
def test_liquidation_basis_expectations(form):
    p = LiquidationParams(gamma0=0.6)
    problem = liquidation_problem(p, form)
    basis = liquidation_basis(p)
    n, z, a = 30, np.array([[0.2, 0.6]]), np.array([-0.8])
    got = basis.cond_features(problem, n, z, a)[0]
    x, w = np.polynomial.hermite_e.hermegauss(40)
    w = w / w.sum()
    nxt = np.stack([np.repeat(z, x.size, axis=0)[:, 0], np.repeat(z, x.size, axis=0)[:, 1]], axis=-1)
    from polymkv.core import euler_step

    nxt = euler_step(problem, n, np.repeat(z, x.size, axis=0), np.repeat(a, x.size), x)
    ref = w @ basis.features(problem.t(n + 1), nxt)
    np.testing.assert_allclose(got, ref, rtol=1e-9)
    assert liquidation_basis(p, control=True).size == basis.size + 4


def test_liquidation_params_validation():
    with pytest.raises(ValueError):
        LiquidationParams(gamma=0.0)
    with pytest.raises(ValueError):
        LiquidationParams(gamma0=-1.0)


# --------------------------------------------------------------------------
# Selection


def test_selection_initial_strategy():
    sp = SelectionParams(gamma0=0.5)
    expected = sp.b0 / (sp.p * (sp.sigma**2 + sp.gamma0**2 * sp.horizon))
    assert float(selection_opt_strategy(0.0, 0.0, sp)) == pytest.approx(expected)


def test_selection_closed_form_known_drift():
    sp = SelectionParams(gamma0=0.0)
    expected = -math.exp(-sp.p * sp.b0**2 * sp.horizon / (2 * sp.sigma**2))
    assert selection_closed_form_value(sp) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("gamma0", [0.1, 0.5])
@pytest.mark.parametrize("measure", ["physical", "reference"])
def test_selection_constant_policy_exact(gamma0, measure):
    """Constant investment: terminal wealth is Gaussian under the mixture."""
    sp = SelectionParams(gamma0=gamma0, steps=10)
    a = 0.4
    T = sp.horizon
    var = sp.sigma**2 * a * a * (T + gamma0**2 * T * T / sp.sigma**2)
    exact = -math.exp(-sp.p * a * sp.b0 * T + 0.5 * sp.p**2 * var)
    est = evaluate_policy(selection_problem(sp), ConstantPolicy(a), sp.z0, 200_000, RngStream(5), measure=measure)
    assert abs(est.mean - exact) < 3 * est.std_error


def test_selection_forms_agree():
    sp = SelectionParams(gamma0=1.0, steps=20)
    pol = selection_opt_policy(sp)
    a = evaluate_policy(selection_problem(sp), pol, sp.z0, 100_000, RngStream(1))
    b = evaluate_policy(selection_problem(sp, "filtered"), pol, sp.z0, 100_000, RngStream(2))
    assert abs(a.mean - b.mean) < 4 * math.hypot(a.std_error, b.std_error)


def test_selection_params_validation():
    with pytest.raises(ValueError):
        SelectionParams(p=0.0)


# --------------------------------------------------------------------------
# Systemic risk


def test_systemic_reflects_variance():
    sp = SystemicParams()
    pr = systemic_problem(sp)
    assert pr.reflect == (1,)
    paths = simulate_paths(pr, ConstantPolicy(10.0), sp.z0, 200, RngStream(0), keep_paths=True)
    assert np.all(paths.states[:, :, 1] >= 0)


def test_systemic_params_validation():
    with pytest.raises(ValueError):
        SystemicParams(rho=1.5)
    with pytest.raises(ValueError):
        SystemicParams(c=-1.0)


# --------------------------------------------------------------------------
# Toy LQ and reference tables


def test_toy_riccati_two_routes():
    tp = ToyLQParams()
    assert toy_lq_value(tp) == pytest.approx(oracles.TOY_RICCATI_VALUE, abs=1e-15)
    lattice = oracles.toy_lq_lattice_dp(tp.sigma, tp.z0, tp.horizon, tp.steps, tp.a_lo, tp.a_hi)
    assert lattice == pytest.approx(oracles.TOY_RICCATI_VALUE, abs=2e-4)


def test_toy_riccati_recursion():
    P, c = toy_lq_riccati(ToyLQParams(steps=1, horizon=0.5))
    assert P[0] == pytest.approx(1.0 / (1.0 + 2 * 0.5))
    assert c[0] == pytest.approx(0.25 * 0.5)


def test_toy_finite_actions():
    from polymkv.core import FiniteSet

    assert isinstance(toy_lq_problem(ToyLQParams(actions=(-1.0, 1.0))).control_space, FiniteSet)


def test_reference_tables_cover_acceptance_points():
    assert TABLE1[(0.1, 1.0)][1.0]["opt"] == -2.918
    assert TABLE1[(-0.1, 0.5)][0.1]["opt"] == 3.689
    assert {0.1, 0.5, 1.0} <= set(TABLE2[(0.1, 1.0)])
    assert TABLE3_RHO[0.5][2] == 7.37 and TABLE3_C[50.0][0] == 11.08
