"""Benchmark control problems: portfolio liquidation and portfolio selection
under a Gaussian prior on the unknown drift, and an interbank systemic-risk
model with partial observation.

Drift uncertainty is handled by a change of measure: under the reference
measure the log-price driver ``W`` is a Brownian motion and all costs carry
the density weight ``F(t, W_t)``. Each Bayesian problem also exposes the
equivalent physical-measure formulation (``W`` with a random constant drift
``beta / sigma``, ``beta ~ N(b0, gamma0^2)``, unweighted costs), which has
the same expectation for every nonanticipative policy, also in discrete
time, and a finite variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import dawsn

from .core import (
    ClosedFormPolicy,
    ConstantPolicy,
    DiscreteProblem,
    FiniteSet,
    Interval,
    PhysicalMeasure,
    Sense,
    TimeGrid,
)

__all__ = [
    "GaussianPriorWeight",
    "LiquidationParams",
    "SelectionParams",
    "SystemicParams",
    "weight_F",
    "log_weight_F",
    "erfi",
    "liquidation_problem",
    "liquidation_price_integral",
    "liquidation_basis",
    "liquidation_opt_rate",
    "liquidation_opt_policy",
    "liquidation_bench_policy",
    "liquidation_bench_value",
    "selection_problem",
    "selection_posterior_mean",
    "selection_opt_strategy",
    "selection_opt_policy",
    "selection_closed_form_value",
    "systemic_problem",
    "embedding_crosscheck_systemic",
    "ToyLQParams",
    "toy_lq_problem",
    "toy_lq_riccati",
    "toy_lq_value",
    "TABLE1",
    "TABLE2",
    "TABLE3_RHO",
    "TABLE3_C",
]

ERFI_RANGE = 6.0


@dataclass(frozen=True)
class GaussianPriorWeight:
    b0: float
    gamma0: float
    sigma: float

    def __call__(self, t, w):
        return weight_F(t, w, self)

    def posterior(self, t, w):
        """Posterior mean and variance of ``theta = beta / sigma`` given
        ``W_t = w``."""
        s2, g2 = self.sigma**2, self.gamma0**2
        v = s2 + g2 * np.asarray(t, dtype=float)
        return (self.b0 * self.sigma + g2 * np.asarray(w, dtype=float)) / v, g2 / v

    def predictive(self, t, w, dt):
        """Mean drift and diffusion factor of the next increment: under the
        physical measure ``W_{t+dt} - w ~ N(mean dt, scale^2 dt)`` given
        ``W_t = w``, exactly."""
        mean, var = self.posterior(t, w)
        return mean, np.sqrt(1.0 + var * dt) + 0.0 * mean

    def log_density(self, t, z):
        """``log F`` as a function of the state, ``w`` in column 0."""
        return log_weight_F(t, np.atleast_2d(z)[:, 0], self)

    def sample_drift(self, gen, size):
        """Per-path drift of ``W`` under the physical measure."""
        beta = self.b0 + self.gamma0 * gen.standard_normal(size)
        return beta / self.sigma


def log_weight_F(t, w, prior: GaussianPriorWeight):
    """``log F(t, w)``, finite where ``F`` itself overflows."""
    s2, g2, b0 = prior.sigma**2, prior.gamma0**2, prior.b0
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    v = s2 + g2 * t
    return 0.5 * np.log(s2 / v) + (-b0 * b0 * t + 2.0 * b0 * prior.sigma * w + g2 * w * w) / (2.0 * v)


def weight_F(t, w, prior: GaussianPriorWeight):
    """Density ``F(t, w)`` of the Bayesian mixture w.r.t. the driftless law.

    ``F = sigma / sqrt(sigma^2 + g^2 t) * exp((-b0^2 t + 2 b0 sigma w + g^2 w^2)
    / (2 (sigma^2 + g^2 t)))`` with ``g = gamma0``.
    """
    s2, g2, b0 = prior.sigma**2, prior.gamma0**2, prior.b0
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    v = s2 + g2 * t
    return prior.sigma / np.sqrt(v) * np.exp(
        (-b0 * b0 * t + 2.0 * b0 * prior.sigma * w + g2 * w * w) / (2.0 * v)
    )


def erfi(x):
    """Imaginary error function ``2/sqrt(pi) int_0^x exp(t^2) dt`` via the
    Dawson integral, for ``|x| <= 6``."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > ERFI_RANGE):
        raise ValueError(f"erfi argument outside [-{ERFI_RANGE}, {ERFI_RANGE}]")
    out = 2.0 / math.sqrt(math.pi) * np.exp(x * x) * dawsn(x)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# Portfolio liquidation


@dataclass(frozen=True)
class LiquidationParams:
    gamma: float = 5.0
    eta: float = 100.0
    sigma: float = 0.4
    b0: float = 0.1
    gamma0: float = 0.1
    s0: float = 6.0
    y0: float = 1.0
    horizon: float = 1.0
    steps: int = 100
    a_lo: float = -5.0
    a_hi: float = 1.0

    def __post_init__(self):
        if min(self.gamma, self.eta, self.sigma, self.s0) <= 0:
            raise ValueError("gamma, eta, sigma, s0 must be positive")
        if self.gamma0 < 0:
            raise ValueError("gamma0 must be nonnegative")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.horizon, self.steps)

    @property
    def prior(self) -> GaussianPriorWeight:
        return GaussianPriorWeight(self.b0, self.gamma0, self.sigma)

    @property
    def z0(self) -> np.ndarray:
        return np.array([0.0, self.y0])

    def price(self, t, w):
        return self.s0 * np.exp(self.sigma * w - 0.5 * self.sigma**2 * t)


def _check_form(form):
    if form not in ("weighted", "filtered"):
        raise ValueError(f"unknown problem form {form!r}; use 'weighted' or 'filtered'")


def liquidation_problem(p: LiquidationParams, form: str = "weighted") -> DiscreteProblem:
    """State ``(w, y)``; trading rate ``a`` moves inventory ``y``; the cost
    is the execution cost plus a terminal inventory penalty.

    ``form="weighted"``: ``W`` is driftless and costs carry ``F(t, w)``.
    ``form="filtered"``: ``W`` follows its exact one-step posterior
    predictive law and costs are unweighted. Both give the same value for
    every feedback policy of ``(t, w, y)``.
    """
    _check_form(form)
    prior, T, dt = p.prior, p.horizon, p.grid.dt

    def f_phys(t, z, a):
        return a * (p.price(t, z[:, 0]) + p.gamma * a)

    def g_phys(z):
        return p.eta * z[:, 1] ** 2

    if form == "filtered":
        def drift(t, z, a):
            m, _ = prior.predictive(t, z[:, 0], dt)
            return np.stack([m, np.broadcast_to(a, m.shape)], axis=-1)

        def diffusion(t, z, a):
            _, sc = prior.predictive(t, z[:, 0], dt)
            return np.stack([sc, np.zeros_like(sc)], axis=-1)

        return DiscreteProblem(
            dim=2, drift=drift, diffusion=diffusion, running_cost=f_phys,
            terminal_cost=g_phys, control_space=Interval(p.a_lo, p.a_hi),
            grid=p.grid, sense=Sense.MINIMIZE, name="liquidation-filtered",
        )

    def drift(t, z, a):
        return np.stack([np.zeros_like(a), a], axis=-1)

    def diffusion(t, z, a):
        return np.broadcast_to(np.array([1.0, 0.0]), z.shape)

    def f(t, z, a):
        return weight_F(t, z[:, 0], prior) * f_phys(t, z, a)

    def g(z):
        return weight_F(T, z[:, 0], prior) * g_phys(z)

    return DiscreteProblem(
        dim=2,
        drift=drift,
        diffusion=diffusion,
        running_cost=f,
        terminal_cost=g,
        control_space=Interval(p.a_lo, p.a_hi),
        grid=p.grid,
        sense=Sense.MINIMIZE,
        physical=PhysicalMeasure(prior.sample_drift, f_phys, g_phys, prior.log_density),
        name="liquidation",
    )


def liquidation_basis(p: LiquidationParams, control: bool = False):
    """Regression basis ``{1, s, y, y^2, s y, s y^2}`` in the price
    ``s = s(t, w)`` and inventory, with exact one-step expectations for any
    problem whose ``w`` increment is Gaussian and ``y`` moves without noise
    (both liquidation forms). ``control=True`` appends ``{a, a^2, a y, a s}``
    for control randomization.
    """
    from .regmc import Basis, BasisTerm

    powers = ((0, 0), (1, 0), (0, 1), (0, 2), (1, 1), (1, 2))

    def name(j, k):
        parts = (["s"] if j else []) + ([f"y^{k}" if k > 1 else "y"] if k else [])
        return "*".join(parts) or "1"

    def make(j, k):
        def fn(t, z, a):
            return p.price(t, z[:, 0]) ** j * z[:, 1] ** k

        def cond_exp(problem, n, z, a):
            t, dt = problem.t(n), problem.dt
            a = np.broadcast_to(np.asarray(a, dtype=float), (z.shape[0],))
            b = problem.drift(t, z, a)
            sd = problem.diffusion(t, z, a)[:, 0] * math.sqrt(dt)
            y_next = z[:, 1] + b[:, 1] * dt
            m = z[:, 0] + b[:, 0] * dt
            s_mom = 1.0 if j == 0 else p.s0 * np.exp(
                p.sigma * m + 0.5 * (p.sigma * sd) ** 2 - 0.5 * p.sigma**2 * problem.t(n + 1))
            return s_mom * y_next**k

        return BasisTerm(name(j, k), fn, cond_exp)

    terms = [make(j, k) for j, k in powers]
    if control:
        extra = (
            ("a", lambda t, z, a: np.broadcast_to(a, (z.shape[0],)) + 0.0),
            ("a^2", lambda t, z, a: np.broadcast_to(a, (z.shape[0],)) ** 2),
            ("a*y", lambda t, z, a: a * z[:, 1]),
            ("a*s", lambda t, z, a: a * p.price(t, z[:, 0])),
        )
        terms += [BasisTerm(nm, fn) for nm, fn in extra]
    return Basis(tuple(terms))


def liquidation_price_integral(h, b0, gamma0):
    """``int_0^h exp(b0 u + gamma0^2 u^2 / 2) du`` in closed form.

    Equals the erfi expression ``(1/gamma0) sqrt(pi/2) exp(-b0^2/(2 gamma0^2))
    (erfi(v1) - erfi(v0))``; evaluated through the Dawson integral so that
    large ``|b0| / gamma0`` does not overflow.
    """
    h = np.asarray(h, dtype=float)
    if gamma0 == 0.0:
        if b0 == 0.0:
            return h
        return np.expm1(b0 * h) / b0
    r2 = math.sqrt(2.0) * gamma0
    v0 = b0 / r2
    v1 = (b0 + gamma0**2 * h) / r2
    if max(abs(v0), float(np.max(np.abs(v1)))) > ERFI_RANGE:
        raise ValueError("erfi argument outside benchmark range")
    return (math.sqrt(2.0) / gamma0) * (
        np.exp(b0 * h + 0.5 * gamma0**2 * h * h) * dawsn(v1) - dawsn(v0)
    )


def liquidation_opt_rate(t, s, y, p: LiquidationParams):
    """Closed-form optimal trading rate.

    ``a* = -(1/tau) {y + (1/(2 gamma)) [tau - I(T-t)] s}`` with
    ``tau = T - t + gamma/eta`` and ``I`` the price growth integral under
    the drift prior.
    """
    h = p.horizon - np.asarray(t, dtype=float)
    tau = h + p.gamma / p.eta
    I = liquidation_price_integral(h, p.b0, p.gamma0)
    return -(y + (tau - I) * s / (2.0 * p.gamma)) / tau


def liquidation_opt_policy(p: LiquidationParams, clip: bool = True) -> ClosedFormPolicy:
    def fn(t, z):
        return liquidation_opt_rate(t, p.price(t, z[:, 0]), z[:, 1], p)

    return ClosedFormPolicy(fn, p.grid, Interval(p.a_lo, p.a_hi) if clip else None)


def liquidation_bench_policy(p: LiquidationParams) -> ConstantPolicy:
    """Constant-rate liquidation at ``-y0 / T`` (VWAP)."""
    return ConstantPolicy(-p.y0 / p.horizon)


def liquidation_bench_value(p: LiquidationParams, discrete: bool = True) -> float:
    """Expected cost of the constant-rate strategy.

    Uses ``E[F(t, W_t) S_t] = s0 exp(b0 t + gamma0^2 t^2 / 2)``; the discrete
    version is the left-point sum matching the simulated Euler scheme.
    """
    a = -p.y0 / p.horizon
    quad = p.gamma * a * a * p.horizon
    if discrete:
        t = p.grid.nodes[:-1]
        growth = np.sum(np.exp(p.b0 * t + 0.5 * p.gamma0**2 * t * t)) * p.grid.dt
    else:
        growth = float(liquidation_price_integral(p.horizon, p.b0, p.gamma0))
    y_T = p.y0 + a * p.horizon
    return float(a * p.s0 * growth + quad + p.eta * y_T**2)


# --------------------------------------------------------------------------
# Portfolio selection


@dataclass(frozen=True)
class SelectionParams:
    p: float = 1.0
    sigma: float = 0.4
    b0: float = 0.1
    gamma0: float = 0.1
    s0: float = 1.0
    x0: float = 0.0
    horizon: float = 1.0
    steps: int = 100
    a_lo: float = -2.0
    a_hi: float = 2.0

    def __post_init__(self):
        if min(self.p, self.sigma) <= 0:
            raise ValueError("p and sigma must be positive")
        if self.gamma0 < 0:
            raise ValueError("gamma0 must be nonnegative")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.horizon, self.steps)

    @property
    def prior(self) -> GaussianPriorWeight:
        return GaussianPriorWeight(self.b0, self.gamma0, self.sigma)

    @property
    def z0(self) -> np.ndarray:
        return np.array([0.0, self.x0])


def selection_problem(sp: SelectionParams, form: str = "weighted") -> DiscreteProblem:
    """State ``(w, x)``; ``a`` is the amount invested in the risky asset and
    the reward is the CARA utility of terminal wealth, weighted by
    ``F(T, w)`` (``form="weighted"``) or under the exact posterior
    predictive law of ``W`` (``form="filtered"``)."""
    _check_form(form)
    prior, T, dt = sp.prior, sp.horizon, sp.grid.dt

    def zero(t, z, a):
        return np.zeros(z.shape[0])

    def g_phys(z):
        return -np.exp(-sp.p * z[:, 1])

    if form == "filtered":
        def drift(t, z, a):
            m, _ = prior.predictive(t, z[:, 0], dt)
            return np.stack([m, sp.sigma * a * m], axis=-1)

        def diffusion(t, z, a):
            _, sc = prior.predictive(t, z[:, 0], dt)
            return np.stack([sc, sp.sigma * a * sc], axis=-1)

        return DiscreteProblem(
            dim=2, drift=drift, diffusion=diffusion, running_cost=zero,
            terminal_cost=g_phys, control_space=Interval(sp.a_lo, sp.a_hi),
            grid=sp.grid, sense=Sense.MAXIMIZE, name="selection-filtered",
        )

    def drift(t, z, a):
        return np.zeros(z.shape)

    def diffusion(t, z, a):
        return np.stack([np.ones_like(a), sp.sigma * a], axis=-1)

    def g(z):
        return weight_F(T, z[:, 0], prior) * g_phys(z)

    return DiscreteProblem(
        dim=2,
        drift=drift,
        diffusion=diffusion,
        running_cost=zero,
        terminal_cost=g,
        control_space=Interval(sp.a_lo, sp.a_hi),
        grid=sp.grid,
        sense=Sense.MAXIMIZE,
        physical=PhysicalMeasure(prior.sample_drift, zero, g_phys, prior.log_density),
        name="selection",
    )


def selection_posterior_mean(t, w, sp: SelectionParams):
    """Posterior mean of the drift given ``W_t = w`` (``sigma w`` equals
    ``ln(S_t/S_0) + sigma^2 t / 2``)."""
    v = sp.sigma**2 + sp.gamma0**2 * np.asarray(t, dtype=float)
    return (sp.sigma**2 * sp.b0 + sp.gamma0**2 * sp.sigma * np.asarray(w, dtype=float)) / v


def selection_opt_strategy(t, w, sp: SelectionParams):
    v_t = sp.sigma**2 + sp.gamma0**2 * np.asarray(t, dtype=float)
    v_T = sp.sigma**2 + sp.gamma0**2 * sp.horizon
    return v_t / v_T * selection_posterior_mean(t, w, sp) / (sp.p * sp.sigma**2)


def selection_opt_policy(sp: SelectionParams, clip: bool = True) -> ClosedFormPolicy:
    def fn(t, z):
        return selection_opt_strategy(t, z[:, 0], sp)

    return ClosedFormPolicy(fn, sp.grid, Interval(sp.a_lo, sp.a_hi) if clip else None)


def selection_closed_form_value(sp: SelectionParams) -> float:
    """The published closed-form optimal performance for CARA utility."""
    s2, g2T = sp.sigma**2, sp.gamma0**2 * sp.horizon
    inner = (
        sp.x0
        + (math.log((s2 + g2T) / s2) - g2T / (s2 + g2T)) / (2.0 * sp.p)
        + sp.b0**2 / (2.0 * sp.p * s2) * s2 * sp.horizon / (s2 + g2T)
    )
    return -math.exp(-sp.p * inner)


# --------------------------------------------------------------------------
# Systemic risk


@dataclass(frozen=True)
class SystemicParams:
    kappa: float = 0.5
    sigma: float = 0.1
    rho: float = 0.5
    eta: float = 10.0
    c: float = 100.0
    x0: float = 10.0
    y0: float = 0.0
    horizon: float = 1.0
    steps: int = 100
    a_lo: float = 0.0
    a_hi: float = 10.0

    def __post_init__(self):
        if self.kappa <= 0 or self.sigma <= 0:
            raise ValueError("kappa and sigma must be positive")
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [-1, 1]")
        if self.eta < 0 or self.c < 0 or self.y0 < 0:
            raise ValueError("eta, c, y0 must be nonnegative")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.horizon, self.steps)

    @property
    def z0(self) -> np.ndarray:
        return np.array([self.x0, self.y0])


def _systemic_coefficients(sp: SystemicParams):
    s, r, k = sp.sigma, sp.rho, sp.kappa

    def drift(t, z, a):
        xb, y = z[..., 0], z[..., 1]
        dy = (s * s - 2.0 * (k + a)) * y + s * s * (1.0 - r * r) * xb * xb
        return np.stack([np.zeros_like(dy), dy], axis=-1)

    def diffusion(t, z, a):
        xb, y = z[..., 0], z[..., 1]
        return np.stack([s * r * xb, 2.0 * r * s * y], axis=-1)

    return drift, diffusion


def systemic_problem(sp: SystemicParams, reflect: bool = True) -> DiscreteProblem:
    """State ``(xbar, y)``: conditional mean and variance of the
    representative bank's reserve; ``a`` strengthens mean reversion."""
    drift, diffusion = _systemic_coefficients(sp)

    def f(t, z, a):
        return 0.5 * a * a + 0.5 * sp.eta * z[:, 1]

    def g(z):
        return 0.5 * sp.c * z[:, 1]

    return DiscreteProblem(
        dim=2,
        drift=drift,
        diffusion=diffusion,
        running_cost=f,
        terminal_cost=g,
        control_space=Interval(sp.a_lo, sp.a_hi),
        grid=sp.grid,
        sense=Sense.MINIMIZE,
        reflect=(1,) if reflect else (),
        name="systemic",
    )


def embedding_crosscheck_systemic(sp: SystemicParams, n_points: int = 100, seed: int = 0) -> dict:
    """Compare the direct systemic dynamics with the polynomial moment
    embedding followed by the centered change of variables.

    Returns the maximal absolute discrepancy of drift, diffusion and one
    Euler step over random (state, control, noise) triples.
    """
    from .embedding import centered_coefficients, reduce, systemic_spec

    rng = np.random.default_rng(seed)
    direct = systemic_problem(sp, reflect=False)
    raw = reduce(systemic_spec(sp), sp.grid, direct.control_space)
    drift_c, diff_c = centered_coefficients(raw)
    xb = rng.uniform(-20.0, 20.0, n_points)
    yc = rng.uniform(0.0, 50.0, n_points)
    a = rng.uniform(sp.a_lo, sp.a_hi, n_points)
    eps = rng.standard_normal(n_points)
    zc = np.stack([xb, yc], axis=-1)
    zraw = np.stack([xb, yc + xb * xb], axis=-1)
    d_direct, s_direct = direct.drift(0.0, zc, a), direct.diffusion(0.0, zc, a)
    d_emb, s_emb = drift_c(0.0, zraw, a), diff_c(0.0, zraw, a)
    scale = 1.0 + np.abs(d_direct) + np.abs(s_direct)
    dt = sp.grid.dt
    step_direct = zc + d_direct * dt + s_direct * math.sqrt(dt) * eps[:, None]
    step_emb = zc + d_emb * dt + s_emb * math.sqrt(dt) * eps[:, None]
    return {
        "n_points": n_points,
        "drift_max_rel": float(np.max(np.abs(d_direct - d_emb) / scale)),
        "diffusion_max_rel": float(np.max(np.abs(s_direct - s_emb) / scale)),
        "euler_max_rel": float(np.max(np.abs(step_direct - step_emb) / (1.0 + np.abs(step_direct)))),
    }


# --------------------------------------------------------------------------
# Toy linear-quadratic problem


@dataclass(frozen=True)
class ToyLQParams:
    """``dZ = a dt + sigma dW``, reward ``-a^2/2`` per unit time and
    ``-Z_T^2`` at the horizon (maximized)."""

    sigma: float = 0.5
    z0: float = 1.0
    horizon: float = 1.0
    steps: int = 10
    a_lo: float = -3.0
    a_hi: float = 3.0
    actions: tuple = ()

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.horizon, self.steps)

    @property
    def control_space(self):
        if self.actions:
            return FiniteSet(self.actions)
        return Interval(self.a_lo, self.a_hi)


def toy_lq_problem(tp: ToyLQParams) -> DiscreteProblem:
    def drift(t, z, a):
        return np.asarray(a, dtype=float)[:, None] + 0.0 * z

    def diffusion(t, z, a):
        return np.full(z.shape, tp.sigma)

    def f(t, z, a):
        return -0.5 * np.asarray(a, dtype=float) ** 2 + 0.0 * z[:, 0]

    def g(z):
        return -z[:, 0] ** 2

    return DiscreteProblem(
        dim=1,
        drift=drift,
        diffusion=diffusion,
        running_cost=f,
        terminal_cost=g,
        control_space=tp.control_space,
        grid=tp.grid,
        sense=Sense.MAXIMIZE,
        name="toy-lq",
    )


def toy_lq_riccati(tp: ToyLQParams):
    """Unconstrained discrete-time solution ``V_n(z) = -P_n z^2 - c_n`` and
    feedback ``a_n(z) = -2 P_{n+1} z / (1 + 2 P_{n+1} dt)``.

    Returns arrays ``(P, c)`` of length ``N + 1``.
    """
    dt, N = tp.grid.dt, tp.steps
    P, c = np.empty(N + 1), np.empty(N + 1)
    P[N], c[N] = 1.0, 0.0
    for n in range(N - 1, -1, -1):
        P[n] = P[n + 1] / (1.0 + 2.0 * P[n + 1] * dt)
        c[n] = c[n + 1] + P[n + 1] * tp.sigma**2 * dt
    return P, c


def toy_lq_value(tp: ToyLQParams) -> float:
    P, c = toy_lq_riccati(tp)
    return float(-P[0] * tp.z0**2 - c[0])


# --------------------------------------------------------------------------
# Published reference values

# liquidation: (b0, T) -> gamma0 -> {method: value}
TABLE1 = {
    (0.1, 1.0): {
        0.1: {"opt": -1.347, "rlmc": -1.356, "cr": -1.278, "q": -1.368, "bench": -1.318},
        0.2: {"opt": -1.385, "rlmc": -1.39, "cr": -1.283, "q": -1.401, "bench": -1.348},
        0.3: {"opt": -1.445, "rlmc": -1.446, "cr": -1.314, "q": -1.46, "bench": -1.402},
        0.4: {"opt": -1.523, "rlmc": -1.524, "cr": -1.323, "q": -1.556, "bench": -1.485},
        0.5: {"opt": -1.642, "rlmc": -1.637, "cr": -1.348, "q": -1.673, "bench": -1.585},
        0.6: {"opt": -1.783, "rlmc": -1.777, "cr": -1.425, "q": -1.826, "bench": -1.711},
        0.7: {"opt": -1.973, "rlmc": -1.927, "cr": -1.513, "q": -2.018, "bench": -1.87},
        0.8: {"opt": -2.213, "rlmc": -2.003, "cr": -1.637, "q": -2.243, "bench": -2.057},
        0.9: {"opt": -2.526, "rlmc": -2.457, "cr": -1.819, "q": -2.516, "bench": -2.288},
        1.0: {"opt": -2.918, "rlmc": -2.801, "cr": -1.806, "q": -2.829, "bench": -2.56},
    },
    (-0.1, 0.5): {
        0.1: {"opt": 3.689, "rlmc": 3.687, "cr": 3.995, "q": 3.686, "bench": 4.144},
        0.2: {"opt": 3.682, "rlmc": 3.682, "cr": 3.847, "q": 3.679, "bench": 4.138},
        0.3: {"opt": 3.67, "rlmc": 3.674, "cr": 4.034, "q": 3.667, "bench": 4.126},
        0.4: {"opt": 3.655, "rlmc": 3.674, "cr": 4.128, "q": 3.65, "bench": 4.108},
        0.5: {"opt": 3.636, "rlmc": 3.664, "cr": 4.243, "q": 3.63, "bench": 4.088},
        0.6: {"opt": 3.611, "rlmc": 3.64, "cr": 4.386, "q": 3.607, "bench": 4.064},
        0.7: {"opt": 3.581, "rlmc": 3.613, "cr": 4.783, "q": 3.572, "bench": 4.029},
        0.8: {"opt": 3.545, "rlmc": 3.575, "cr": 5.142, "q": 3.537, "bench": 3.992},
        0.9: {"opt": 3.5, "rlmc": 3.53, "cr": 5.345, "q": 3.498, "bench": 3.952},
        1.0: {"opt": 3.453, "rlmc": 3.513, "cr": 6.765, "q": 3.452, "bench": 3.903},
    },
}

# selection: (b0, T) -> gamma0 -> (opt, q)
TABLE2 = {
    (0.1, 1.0): {
        0.1: (-0.985, -0.985), 0.2: (-0.982, -0.982), 0.3: (-0.973, -0.973),
        0.4: (-0.954, -0.953), 0.5: (-0.927, -0.927), 0.6: (-0.896, -0.896),
        0.7: (-0.863, -0.863), 0.8: (-0.830, -0.830), 0.9: (-0.797, -0.797),
        1.0: (-0.767, -0.766),
    },
    (-0.1, 0.5): {
        0.1: (-0.992, -0.992), 0.2: (-0.991, -0.991), 0.3: (-0.988, -0.988),
        0.4: (-0.981, -0.981), 0.5: (-0.969, -0.969), 0.6: (-0.952, -0.952),
        0.7: (-0.932, -0.932), 0.8: (-0.910, -0.910), 0.9: (-0.886, -0.886),
        1.0: (-0.863, -0.863),
    },
}

# systemic, c=100, eta=10: rho -> (rlmc, cr, q, bench)
TABLE3_RHO = {
    0.1: (8.88, 9.12, 8.76, 8.94), 0.2: (8.73, 8.98, 8.69, 8.77),
    0.3: (8.42, 8.69, 8.32, 8.48), 0.4: (8.02, 8.25, 7.91, 8.06),
    0.5: (7.61, 7.73, 7.37, 7.51), 0.6: (6.93, 6.97, 6.68, 6.79),
    0.7: (5.94, 6.07, 5.78, 5.87), 0.8: (4.86, 4.82, 4.62, 4.67),
    0.9: (3.32, 3.10, 3.02, 2.97),
}

# systemic, rho=0.5, eta=100: c -> (rlmc, cr, q, bench)
TABLE3_C = {
    0.0: (7.79, 7.78, 7.77, 7.79), 1.0: (7.88, 7.87, 7.86, 7.88),
    5.0: (8.22, 8.23, 8.21, 8.23), 10.0: (8.63, 8.64, 8.61, 8.62),
    25.0: (9.69, 9.76, 9.61, 9.62), 50.0: (11.08, 11.27, 10.94, 10.97),
}
