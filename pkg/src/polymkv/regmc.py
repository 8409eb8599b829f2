"""Regression Monte Carlo backward solvers.

Regress-Later (RL) regresses the next-step value on basis functions of the
next-step state and integrates the basis analytically over one Euler step.
Control Randomization (CR) simulates training paths under random controls
and regresses the next-step value on basis functions of the current state
and control.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from .core import BackwardResult, RngStream, SolverError, simulate_paths, value_iteration_backward
from .ctrlsearch import Method, SearchSpec, default_search, maximize_batch

__all__ = [
    "BasisTerm",
    "Basis",
    "monomial_exponents",
    "monomial_basis",
    "control_monomial_basis",
    "gaussian_moments",
    "monomial_cond_exp",
    "fit_least_squares",
    "ConditioningError",
    "ProductDesign",
    "Normal",
    "Uniform",
    "HalfNormal",
    "EmpiricalDesign",
    "RegressionPolicy",
    "RLBackend",
    "CRBackend",
    "rl_backward",
    "cr_backward",
    "iterate_explore_exploit",
    "write_coefficients",
    "read_coefficients",
]

MAX_MONOMIAL_DEGREE = 8
MAX_CONDITION = 1e12


class ConditioningError(SolverError):
    """Regression normal equations are too ill-conditioned to solve."""


# --------------------------------------------------------------------------
# Bases


def gaussian_moments(order: int) -> np.ndarray:
    """``E[eps^j]`` for ``j = 0..order``: zero for odd ``j``, ``(j-1)!!`` for even."""
    out = np.zeros(order + 1)
    out[0] = 1.0
    for j in range(2, order + 1, 2):
        out[j] = out[j - 2] * (j - 1)
    return out


def monomial_exponents(dim: int, degree: int) -> list:
    """Exponent tuples of all monomials of total degree ``<= degree``, in
    graded order."""
    terms = [e for e in product(range(degree + 1), repeat=dim) if sum(e) <= degree]
    return sorted(terms, key=lambda e: (sum(e), tuple(-x for x in e)))


def _monomial_moments(mean, scale, exponents):
    """``E[prod_i (mean_i + scale_i eps)^{k_i}]`` per row, eps ~ N(0, 1)."""
    exponents = [tuple(int(k) for k in e) for e in exponents]
    deg = max((sum(e) for e in exponents), default=0)
    if deg > MAX_MONOMIAL_DEGREE:
        raise ValueError(f"monomial degree {deg} exceeds {MAX_MONOMIAL_DEGREE}")
    mom = gaussian_moments(deg)
    P = mean.shape[0]
    out = np.empty((P, len(exponents)))
    for j, e in enumerate(exponents):
        # polynomial in eps, coefficients per row, lowest order first
        poly = np.ones((P, 1))
        for i, k in enumerate(e):
            if k == 0:
                continue
            factor = np.stack(
                [math.comb(k, r) * mean[:, i] ** (k - r) * scale[:, i] ** r for r in range(k + 1)],
                axis=1,
            )
            new = np.zeros((P, poly.shape[1] + k))
            for r in range(k + 1):
                new[:, r : r + poly.shape[1]] += factor[:, r : r + 1] * poly
            poly = new
        out[:, j] = poly @ mom[: poly.shape[1]]
    return out


def monomial_cond_exp(problem, n, z, a, exponents) -> np.ndarray:
    """Exact one-step expectations of monomials of the next Euler state.

    ``Z' = z + b dt + sigma0 sqrt(dt) eps`` with one scalar ``eps`` shared
    by all coordinates; returns shape ``(P, K)``. Reflection of the Euler
    step, if any, is ignored.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    a = np.broadcast_to(np.asarray(a, dtype=float), (z.shape[0],))
    t, dt = problem.t(n), problem.dt
    mean = z + problem.drift(t, z, a) * dt
    scale = problem.diffusion(t, z, a) * math.sqrt(dt)
    return _monomial_moments(mean, np.broadcast_to(scale, mean.shape), exponents)


@dataclass(frozen=True)
class BasisTerm:
    """One basis function ``fn(t, z, a)``; for regress-later it also carries
    its one-step conditional expectation ``cond_exp(problem, n, z, a)``."""

    name: str
    fn: Callable
    cond_exp: Optional[Callable] = None


@dataclass(frozen=True)
class Basis:
    terms: tuple
    exponents: Optional[tuple] = None  # monomial fast path

    def __post_init__(self):
        if len(self.terms) < 1:
            raise ValueError("basis needs at least one function")

    @property
    def size(self) -> int:
        return len(self.terms)

    @property
    def names(self) -> list:
        return [t.name for t in self.terms]

    def features(self, t, z, a=None) -> np.ndarray:
        z = np.atleast_2d(z)
        return np.stack(
            [np.broadcast_to(term.fn(t, z, a), (z.shape[0],)) for term in self.terms], axis=1
        )

    def cond_features(self, problem, n, z, a) -> np.ndarray:
        if self.exponents is not None:
            return monomial_cond_exp(problem, n, z, a, self.exponents)
        z = np.atleast_2d(z)
        cols = []
        for term in self.terms:
            if term.cond_exp is None:
                raise ValueError(f"basis function {term.name!r} has no one-step expectation")
            cols.append(np.broadcast_to(term.cond_exp(problem, n, z, a), (z.shape[0],)))
        return np.stack(cols, axis=1)


def _monomial_name(e, names):
    parts = [f"{v}^{k}" if k > 1 else v for v, k in zip(names, e) if k]
    return "*".join(parts) or "1"


def monomial_basis(dim: int, degree: int, names: Sequence[str] = None) -> Basis:
    """All state monomials of total degree ``<= degree`` with exact
    one-step Gaussian expectations."""
    names = list(names or [f"z{i}" for i in range(dim)])
    exps = monomial_exponents(dim, degree)
    terms = []
    for e in exps:
        def fn(t, z, a, e=e):
            return np.prod([z[:, i] ** k for i, k in enumerate(e)], axis=0)
        terms.append(BasisTerm(_monomial_name(e, names), fn))
    return Basis(tuple(terms), tuple(exps))


def control_monomial_basis(dim: int, degree: int, names: Sequence[str] = None) -> Basis:
    """Monomials of total degree ``<= degree`` in the state coordinates and
    the control (last variable); for control randomization."""
    names = list(names or [f"z{i}" for i in range(dim)]) + ["a"]
    terms = []
    for e in monomial_exponents(dim + 1, degree):
        def fn(t, z, a, e=e):
            cols = [z[:, i] for i in range(dim)] + [np.broadcast_to(a, (z.shape[0],))]
            return np.prod([c ** k for c, k in zip(cols, e)], axis=0)
        terms.append(BasisTerm(_monomial_name(e, names), fn))
    return Basis(tuple(terms))


# --------------------------------------------------------------------------
# Regression


def fit_least_squares(targets, features, ridge: Optional[float] = None, *, drop_collinear: bool = False):
    """Empirical least-squares projection ``beta = (A + ridge I)^-1 b``.

    ``A = (1/M) sum phi phi^T`` and ``b = (1/M) sum v phi``. The default
    ridge is ``1e-8 trace(A) / K``. Raises :class:`ConditioningError` when
    the regularized matrix has condition number above 1e12, unless
    ``drop_collinear`` is set, in which case a maximal well-conditioned
    subset of columns is selected by pivoted QR and the remaining
    coefficients are zero.
    """
    X = np.asarray(features, dtype=float)
    v = np.asarray(targets, dtype=float)
    M, K = X.shape
    if M < K:
        raise ValueError(f"need at least K={K} samples, got {M}")
    A = X.T @ X / M
    b = X.T @ v / M
    if ridge is None:
        ridge = 1e-8 * np.trace(A) / K
    Ar = A + ridge * np.eye(K)
    cond = np.linalg.cond(Ar)
    if cond <= MAX_CONDITION:
        return scipy.linalg.solve(Ar, b, assume_a="pos")
    if not drop_collinear:
        raise ConditioningError(
            f"regression matrix condition number {cond:.2e} exceeds {MAX_CONDITION:.0e}; "
            "increase the ridge or widen the training design"
        )
    _, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    keep = piv[diag > diag[0] * 1e-8]
    beta = np.zeros(K)
    sub = A[np.ix_(keep, keep)] + ridge * np.eye(keep.size)
    beta[keep] = scipy.linalg.solve(sub, b[keep], assume_a="pos")
    return beta


# --------------------------------------------------------------------------
# Training designs


@dataclass(frozen=True)
class Normal:
    mean: Callable  # t -> float
    std: Callable

    def sample(self, n, t, gen, M):
        return self.mean(t) + self.std(t) * gen.standard_normal(M)


@dataclass(frozen=True)
class HalfNormal:
    """``|N(0, std(t)^2)|``: nonnegative coordinates centered at zero."""

    std: Callable

    def sample(self, n, t, gen, M):
        return np.abs(self.std(t) * gen.standard_normal(M))


@dataclass(frozen=True)
class Uniform:
    lo: Callable
    hi: Callable

    def sample(self, n, t, gen, M):
        return gen.uniform(self.lo(t), self.hi(t), M)


@dataclass(frozen=True)
class ProductDesign:
    """Independent marginals per coordinate; step 0 is the start state."""

    marginals: tuple

    def sample(self, n, t, gen, M):
        return np.stack([m.sample(n, t, gen, M) for m in self.marginals], axis=1)


@dataclass(frozen=True)
class EmpiricalDesign:
    """Resample per-step clouds (e.g. from a previous forward run)."""

    clouds: Sequence[np.ndarray]

    def sample(self, n, t, gen, M):
        cloud = np.asarray(self.clouds[n])
        return cloud[gen.integers(0, cloud.shape[0], M)]


# --------------------------------------------------------------------------
# Policies and backends


def _q_values(problem, n, z, a, cond):
    return problem.running_cost(problem.t(n), z, a) * problem.dt + cond(n, z, a)


@dataclass
class RegressionPolicy:
    """Feedback control ``argopt_a {f dt + continuation(n, z, a)}`` recomputed
    at query states from stored regression coefficients."""

    problem: object
    continuation: Callable
    search: SearchSpec

    def act(self, n, z):
        z = np.atleast_2d(z)
        sign = self.problem.sense.sign
        a, _ = maximize_batch(
            lambda a: sign * _q_values(self.problem, n, z, a, self.continuation),
            z.shape[0], self.problem.control_space, self.search,
        )
        return a


class RLBackend:
    """Regress-later value representation on per-step training samples."""

    def __init__(self, problem, basis: Basis, design, n_samples: int, rng: RngStream,
                 z0, ridge=None, shared_covariance=False):
        if n_samples < basis.size:
            raise ValueError("need at least as many training points as basis functions")
        self.problem, self.basis, self.design = problem, basis, design
        self.M, self.rng, self.ridge = n_samples, rng, ridge
        self.z0 = np.asarray(z0, dtype=float).reshape(1, -1)
        self.shared_covariance = shared_covariance
        self.betas = [None] * (problem.steps + 1)
        self._cov = None
        self._states = {}

    def states(self, n):
        if n == 0:
            return self.z0
        if n not in self._states:
            gen = self.rng.generator(n)
            self._states[n] = self.design.sample(n, self.problem.t(n), gen, self.M)
        return self._states[n]

    def set_next(self, n, values):
        X = self.basis.features(self.problem.t(n), self.states(n))
        v = np.asarray(values, dtype=float)
        try:
            if self.shared_covariance:
                if self._cov is None:
                    A = X.T @ X / X.shape[0]
                    ridge = self.ridge if self.ridge is not None else 1e-8 * np.trace(A) / A.shape[0]
                    self._cov = A + ridge * np.eye(A.shape[0])
                    if np.linalg.cond(self._cov) > MAX_CONDITION:
                        raise ConditioningError("shared covariance matrix is ill-conditioned")
                self.betas[n] = scipy.linalg.solve(self._cov, X.T @ v / X.shape[0], assume_a="pos")
            else:
                self.betas[n] = fit_least_squares(v, X, self.ridge)
        except ConditioningError as exc:
            raise ConditioningError(f"step n={n}: {exc}") from exc
        # states of this layer are no longer needed
        self._states.pop(n, None)

    def continuation(self, n, z, a):
        return self.basis.cond_features(self.problem, n, z, a) @ self.betas[n + 1]

    cond_exp = continuation

    def make_policy(self, controls):
        return controls


class CRBackend:
    """Control-randomization regression on forward training paths."""

    def __init__(self, problem, basis: Basis, control_sampler, n_samples: int, rng: RngStream,
                 z0, ridge=None):
        if n_samples < basis.size:
            raise ValueError("need at least as many training paths as basis functions")
        self.problem, self.basis, self.ridge = problem, basis, ridge
        self.betas = [None] * problem.steps
        self.Z, self.I = _randomized_paths(problem, control_sampler, n_samples, rng, z0)
        lo, hi = self.Z[:, 0].min(axis=0), self.Z[:, 0].max(axis=0)
        z0 = np.asarray(z0, dtype=float)
        if np.any(z0 < lo) or np.any(z0 > hi):
            warnings.warn("training cloud does not cover the start state", RuntimeWarning)

    def states(self, n):
        return self.Z[:, n]

    def set_next(self, n, values):
        k = n - 1
        X = self.basis.features(self.problem.t(k), self.Z[:, k], self.I[:, k])
        degenerate = np.ptp(self.Z[:, k], axis=0).max() == 0.0
        try:
            self.betas[k] = fit_least_squares(values, X, self.ridge, drop_collinear=degenerate)
        except ConditioningError as exc:
            raise ConditioningError(f"step n={k}: {exc}") from exc

    def continuation(self, n, z, a):
        return self.basis.features(self.problem.t(n), z, a) @ self.betas[n]

    cond_exp = continuation

    def make_policy(self, controls):
        return controls


def _randomized_paths(problem, control_sampler, M, rng, z0):
    from .core import euler_step

    gen = rng.generator(0)
    N = problem.steps
    Z = np.empty((M, N + 1, problem.dim))
    I = np.empty((M, N))
    Z[:, 0] = np.asarray(z0, dtype=float)
    eps = gen.standard_normal((M, N))
    for n in range(N):
        I[:, n] = problem.control_space.clip(control_sampler(n, problem.t(n), gen, M))
        Z[:, n + 1] = euler_step(problem, n, Z[:, n], I[:, n], eps[:, n])
    return Z, I


@dataclass
class RegressionResult:
    policy: RegressionPolicy
    betas: list
    basis: Basis
    values: list
    backend: object = None


def _run(problem, backend, search):
    res = value_iteration_backward(problem, backend, search)
    policy = RegressionPolicy(problem, backend.continuation, search)
    return RegressionResult(policy, backend.betas, backend.basis, res.values, backend)


def rl_backward(problem, basis: Basis, design, n_samples: int, rng: RngStream, z0,
                search: SearchSpec = None, *, ridge=None, shared_covariance=False) -> RegressionResult:
    """Regress-later value iteration; the returned policy re-optimizes
    ``f dt + beta^{n+1} . phi_hat^n(z, a)`` at query states."""
    search = search or default_search(problem.control_space)
    backend = RLBackend(problem, basis, design, n_samples, rng, z0, ridge, shared_covariance)
    return _run(problem, backend, search)


def cr_backward(problem, basis: Basis, control_sampler, n_samples: int, rng: RngStream, z0,
                search: SearchSpec = None, *, ridge=None) -> RegressionResult:
    """Control-randomization value iteration.

    ``control_sampler(n, t, gen, M)`` draws the random controls ``I_n``;
    they are clipped into the control space.
    """
    search = search or default_search(problem.control_space)
    backend = CRBackend(problem, basis, control_sampler, n_samples, rng, z0, ridge)
    return _run(problem, backend, search)


def _clouds(problem, policy, z0, M, rng):
    paths = simulate_paths(problem, policy, z0, M, rng, measure="reference", keep_paths=True)
    return paths.states[paths.valid], paths.controls[paths.valid]


def iterate_explore_exploit(kind: str, problem, basis: Basis, first, n_samples: int,
                            rng: RngStream, z0, rounds: int = 2, search: SearchSpec = None,
                            *, perturbation: float = 0.1, ridge=None) -> RegressionResult:
    """Repeat a regression solver, redesigning the training data from
    forward simulations under the previous round's policy.

    ``kind`` is ``"rl"`` (``first`` is a training design; later rounds
    resample visited states) or ``"cr"`` (``first`` is a control sampler;
    later rounds draw the visited controls plus Gaussian noise of relative
    size ``perturbation`` times the control range, clipped to the space).
    """
    if rounds < 1:
        raise ValueError("need at least one round")
    if kind not in ("rl", "cr"):
        raise ValueError(f"unknown regression method {kind!r}")
    space = problem.control_space
    width = float(space.hi - space.lo)
    current = first
    result = None
    for r in range(rounds):
        sub = rng.child(r)
        if kind == "rl":
            result = rl_backward(problem, basis, current, n_samples, sub, z0, search, ridge=ridge)
        else:
            result = cr_backward(problem, basis, current, n_samples, sub, z0, search, ridge=ridge)
        if r == rounds - 1:
            break
        states, controls = _clouds(problem, result.policy, z0, n_samples, sub.child(99))
        for n in range(1, problem.steps + 1):
            if np.unique(states[:, n], axis=0).shape[0] < basis.size:
                if kind == "rl":
                    raise SolverError(f"empirical cloud at step {n} collapsed below K={basis.size} points")
        if kind == "rl":
            current = EmpiricalDesign([states[:, n] for n in range(problem.steps + 1)])
        else:
            def sampler(n, t, gen, M, controls=controls):
                base = controls[gen.integers(0, controls.shape[0], M), n]
                return space.clip(base + perturbation * width * gen.standard_normal(M))
            current = sampler
    return result


# --------------------------------------------------------------------------
# Coefficient persistence


def write_coefficients(path, result: RegressionResult, comments: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "basis_index", "basis", "beta"])
        for n, beta in enumerate(result.betas):
            if beta is None:
                continue
            for k, (name, b) in enumerate(zip(result.basis.names, beta)):
                w.writerow([n, k, name, repr(float(b))])


def read_coefficients(path, steps: int) -> list:
    betas = [None] * steps
    rows = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(line for line in fh if not line.startswith("#")):
            rows.setdefault(int(row["step"]), []).append((int(row["basis_index"]), float(row["beta"])))
    for n, items in rows.items():
        items.sort()
        betas[n] = np.array([b for _, b in items])
    return betas
