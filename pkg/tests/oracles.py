"""Independent reference computations used by the test suite.

Nothing here imports the solver modules: each oracle re-derives its value
from first principles (tree recursion, dense lattices, mpmath quadrature).
"""

import itertools

import mpmath as mp
import numpy as np

# Frozen values, recomputed by the functions below when the tests run.

# L=2 optimal N(0,1) quantizer: E[Z | Z > 0]
L2_POINT = 0.7978845608028654
# L=3 optimal N(0,1) quantizer: x = E[Z | Z > x/2]
L3_POINT = 1.2240063619249615
# toy LQ (sigma=.5, z0=1, T=1, N=10), unconstrained discrete Riccati
TOY_RICCATI_VALUE = -0.4793619574869576
# liquidation opt rate at gamma0=0, b0=0, t=0, s=6, y=1 (gamma=5, eta=100, T=1)
OPT_RATE_MARTINGALE = -1.03 / 1.05


def mp_quantizer_l3() -> float:
    mp.mp.dps = 30

    def residual(x):
        c = x / 2
        return mp.npdf(c) / (1 - mp.ncdf(c)) - x

    return float(mp.findroot(residual, 1.2))


def mp_price_integral(h, b0, gamma0) -> float:
    """``int_0^h exp(b0 u + gamma0^2 u^2 / 2) du`` by adaptive quadrature."""
    mp.mp.dps = 30
    return float(mp.quad(lambda u: mp.exp(b0 * u + gamma0**2 * u**2 / 2), [0, h]))


def mp_price_integral_erfi(h, b0, gamma0) -> float:
    """The same integral through the erfi closed form, in extended precision."""
    mp.mp.dps = 40
    r = mp.sqrt(2) * gamma0
    pre = mp.sqrt(mp.pi / 2) / gamma0 * mp.exp(-mp.mpf(b0) ** 2 / (2 * gamma0**2))
    return float(pre * (mp.erfi((b0 + gamma0**2 * h) / r) - mp.erfi(b0 / r)))


def tree_dp(f, g, step, actions, atoms, probs, z0, steps, dt, maximize=True):
    """Exact dynamic programming by recursion over the full scenario tree.

    ``step(z, a, e)`` is the scalar transition, ``f(z, a)`` the running
    reward and ``g(z)`` the terminal reward.
    """
    best = max if maximize else min

    def value(n, z):
        if n == steps:
            return g(z)
        cands = []
        for a in actions:
            acc = 0.0
            for e, p in zip(atoms, probs):
                acc += p * value(n + 1, step(z, a, e))
            cands.append(f(z, a) * dt + acc)
        return best(cands)

    return value(0, z0)


def open_loop_max(f, g, step, actions, z0, steps, dt):
    """Best deterministic action sequence by enumeration."""
    out = -np.inf
    for seq in itertools.product(actions, repeat=steps):
        z, rewards = z0, []
        for a in seq:
            rewards.append(f(z, a) * dt)
            z = step(z, a, 0.0)
        # accumulate from the horizon backwards, as a Bellman recursion does
        total = g(z)
        for r in reversed(rewards):
            total = r + total
        out = max(out, total)
    return out


def toy_lq_lattice_dp(sigma, z0, horizon, steps, a_lo, a_hi, *, h=0.005, width=8.0,
                      n_actions=1201, n_nodes=24):
    """Value of the discrete-time toy LQ problem on a dense state lattice.

    Gauss-Hermite nodes replace the Gaussian increment; the continuation
    ``C(y) = E V(y + sigma sqrt(dt) eps)`` depends on ``y = z + a dt`` only
    and is linearly interpolated.
    """
    dt = horizon / steps
    x, w = np.polynomial.hermite_e.hermegauss(n_nodes)
    w = w / w.sum()
    zs = np.arange(-width, width + h / 2, h)
    acts = np.linspace(a_lo, a_hi, n_actions)
    V = -zs**2
    for _ in range(steps):
        # flat extrapolation only touches states far out in the tails
        C = sum(wk * np.interp(zs + sigma * np.sqrt(dt) * xk, zs, V) for xk, wk in zip(x, w))
        best = np.full(zs.size, -np.inf)
        for a in acts:
            best = np.maximum(best, -0.5 * a * a * dt + np.interp(zs + a * dt, zs, C))
        V = best
    return float(np.interp(z0, zs, V))
