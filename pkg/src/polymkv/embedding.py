"""Moment embedding of polynomial conditional McKean-Vlasov dynamics.

A scalar controlled state

    dX = (b0 + b1 X) dt + (th0 + th1 X) dB + (g0 + g1 X) dW0

whose coefficients depend on the conditional law of ``X`` given the common
noise ``W0`` only through its first ``p`` moments is reduced to a
``p``-dimensional controlled diffusion in ``(xbar, y_2, ..., y_p)``,
``y_k = E[X^k | W0]``, driven by ``W0`` alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import DiscreteProblem, RngStream, Sense, TimeGrid

__all__ = [
    "PolynomialMkvSpec",
    "reduce",
    "moment_powers",
    "particle_oracle",
    "moment_ode",
    "centered_coefficients",
    "systemic_spec",
]


def _zero(*args):
    return np.zeros(np.broadcast(*args).shape) if args else 0.0


@dataclass(frozen=True)
class PolynomialMkvSpec:
    """Coefficients of a polynomial conditional MKV problem.

    Every coefficient callable takes ``(xbar, y2, ..., yp, a)`` (costs ``g_k``
    omit ``a``) as broadcastable arrays. Cost coefficient ``k`` multiplies
    the ``k``-th moment (``m_0 = 1``, ``m_1 = xbar``).
    """

    degree: int
    b0: Callable = _zero
    b1: Callable = _zero
    th0: Callable = _zero
    th1: Callable = _zero
    g0: Callable = _zero
    g1: Callable = _zero
    f: Sequence[Callable] = ()
    g: Sequence[Callable] = ()
    x0: float = 0.0
    sense: Sense = Sense.MINIMIZE
    absolute_moments: bool = False

    def __post_init__(self):
        if self.degree < 2:
            raise ValueError("moment embedding needs degree p >= 2")
        for name, seq in (("f", self.f), ("g", self.g)):
            if len(seq) > self.degree + 1:
                raise ValueError(f"at most p+1 cost coefficients allowed for {name}")

    @property
    def z0(self) -> np.ndarray:
        x = abs(self.x0) if self.absolute_moments else self.x0
        return np.array([self.x0] + [x**k for k in range(2, self.degree + 1)])


def moment_powers(z: np.ndarray, p: int) -> list:
    """``[y^0, y^1, ..., y^p]`` with ``y^0 = 1`` and ``y^1 = xbar``."""
    ones = np.ones(z.shape[:-1])
    return [ones, z[..., 0]] + [z[..., k - 1] for k in range(2, p + 1)]


def _args(z):
    return [z[..., i] for i in range(z.shape[-1])]


def reduce(spec: PolynomialMkvSpec, grid: TimeGrid, control_space) -> DiscreteProblem:
    """Finite-dimensional control problem for the conditional moments."""
    p = spec.degree

    def coeffs(z, a):
        args = _args(z) + [a]
        shape = np.broadcast(*args).shape
        return [np.broadcast_to(c(*args), shape) for c in
                (spec.b0, spec.b1, spec.th0, spec.th1, spec.g0, spec.g1)]

    def drift(t, z, a):
        b0, b1, th0, th1, g0, g1 = coeffs(z, a)
        y = moment_powers(z, p)
        out = [b0 + b1 * y[1]]
        for k in range(2, p + 1):
            c2 = 0.5 * k * (k - 1)
            out.append(
                k * b0 * y[k - 1]
                + k * b1 * y[k]
                + c2 * (th0**2 + g0**2) * y[k - 2]
                + c2 * (th1**2 + g1**2) * y[k]
                + k * (k - 1) * (th0 * th1 + g0 * g1) * y[k - 1]
            )
        return np.stack(out, axis=-1)

    def diffusion(t, z, a):
        _, _, _, _, g0, g1 = coeffs(z, a)
        y = moment_powers(z, p)
        out = [g0 + g1 * y[1]]
        out += [k * (g0 * y[k - 1] + g1 * y[k]) for k in range(2, p + 1)]
        return np.stack(out, axis=-1)

    def running(t, z, a):
        y = moment_powers(z, p)
        args = _args(z) + [a]
        return sum(fk(*args) * y[k] for k, fk in enumerate(spec.f)) + np.zeros(z.shape[:-1])

    def terminal(z):
        y = moment_powers(z, p)
        args = _args(z)
        return sum(gk(*args) * y[k] for k, gk in enumerate(spec.g)) + np.zeros(z.shape[:-1])

    return DiscreteProblem(
        dim=p,
        drift=drift,
        diffusion=diffusion,
        running_cost=running,
        terminal_cost=terminal,
        control_space=control_space,
        grid=grid,
        sense=spec.sense,
        name="moment-embedding",
    )


def centered_coefficients(raw: DiscreteProblem):
    """Drift and diffusion of ``(xbar, y2 - xbar^2)`` for a degree-2 raw
    embedding, as functions of the raw state (Ito change of variables)."""
    if raw.dim != 2:
        raise ValueError("centered change of variables implemented for p = 2")

    def drift(t, z, a):
        b, s = raw.drift(t, z, a), raw.diffusion(t, z, a)
        xb = z[..., 0]
        return np.stack([b[..., 0], b[..., 1] - 2.0 * xb * b[..., 0] - s[..., 0] ** 2], axis=-1)

    def diffusion(t, z, a):
        s = raw.diffusion(t, z, a)
        return np.stack([s[..., 0], s[..., 1] - 2.0 * z[..., 0] * s[..., 0]], axis=-1)

    return drift, diffusion


def systemic_spec(sp) -> PolynomialMkvSpec:
    """Systemic-risk reserves as a degree-2 polynomial MKV specification."""
    s, r, k = sp.sigma, sp.rho, sp.kappa
    th1 = s * math.sqrt(max(0.0, 1.0 - r * r))
    return PolynomialMkvSpec(
        degree=2,
        b0=lambda xb, y2, a: (k + a) * xb,
        b1=lambda xb, y2, a: -(k + a) + 0.0 * xb,
        th1=lambda xb, y2, a: th1 + 0.0 * xb,
        g1=lambda xb, y2, a: s * r + 0.0 * xb,
        f=(lambda xb, y2, a: 0.5 * a * a - 0.5 * sp.eta * xb * xb + 0.0 * y2,
           lambda xb, y2, a: 0.0 * xb,
           lambda xb, y2, a: 0.5 * sp.eta + 0.0 * xb),
        g=(lambda xb, y2: -0.5 * sp.c * xb * xb,
           lambda xb, y2: 0.0 * xb,
           lambda xb, y2: 0.5 * sp.c + 0.0 * xb),
        x0=sp.x0,
    )


def particle_oracle(
    spec: PolynomialMkvSpec,
    controls,
    n_particles: int,
    grid: TimeGrid,
    rng: RngStream,
    common_noise=None,
    initial=None,
) -> np.ndarray:
    """Empirical conditional moments of an interacting particle system.

    All particles share one common-noise path (``common_noise``, shape
    ``(N,)``, drawn from ``rng`` when omitted) and carry independent
    idiosyncratic noises. Coefficients are evaluated at the empirical
    moments. Returns an array ``(N + 1, p)`` of ``(mean, m_2, ..., m_p)``.
    """
    if n_particles < 100:
        raise ValueError("particle oracle needs at least 100 particles")
    p, N, dt = spec.degree, grid.steps, grid.dt
    controls = np.broadcast_to(np.asarray(controls, dtype=float), (N,))
    if common_noise is None:
        common_noise = rng.generator(0).standard_normal(N)
    idio = rng.generator(1)
    x = (np.full(n_particles, float(spec.x0)) if initial is None
         else np.asarray(initial, dtype=float).copy())

    def moments(x):
        xs = np.abs(x) if spec.absolute_moments else x
        return np.array([x.mean()] + [np.mean(xs**k) for k in range(2, p + 1)])

    out = np.empty((N + 1, p))
    out[0] = moments(x)
    sq = math.sqrt(dt)
    for n in range(N):
        args = list(out[n]) + [controls[n]]
        b0, b1, th0, th1, g0, g1 = (float(c(*args)) for c in
                                    (spec.b0, spec.b1, spec.th0, spec.th1, spec.g0, spec.g1))
        dB = sq * idio.standard_normal(n_particles)
        x = x + (b0 + b1 * x) * dt + (th0 + th1 * x) * dB + (g0 + g1 * x) * sq * common_noise[n]
        out[n + 1] = moments(x)
    return out


def moment_ode(spec: PolynomialMkvSpec, controls, grid: TimeGrid, substeps: int = 50) -> np.ndarray:
    """Deterministic moment flow (no common noise) by RK4 on a refined grid.

    Returns the moments at the nodes of ``grid``, shape ``(N + 1, p)``.
    """
    problem = reduce(spec, grid, None)
    N, dt = grid.steps, grid.dt / substeps
    controls = np.broadcast_to(np.asarray(controls, dtype=float), (N,))
    z = spec.z0[None, :].astype(float)
    out = [z[0].copy()]
    for n in range(N):
        a = np.array([controls[n]])
        rhs = lambda zz: problem.drift(0.0, zz, a)  # noqa: E731
        for _ in range(substeps):
            k1 = rhs(z)
            k2 = rhs(z + 0.5 * dt * k1)
            k3 = rhs(z + 0.5 * dt * k2)
            k4 = rhs(z + dt * k3)
            z = z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(z[0].copy())
    return np.array(out)
