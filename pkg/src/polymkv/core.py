"""Discrete-time controlled diffusions: problem model, Euler simulation,
Bellman recursions and forward Monte Carlo policy evaluation.

State arrays are vectorized throughout: a batch of ``P`` states has shape
``(P, d)``, controls have shape ``(P,)``. Problem callables receive the
current time ``t`` as their first argument so that time-inhomogeneous
costs (e.g. density weights ``F(t, w)``) fit the same interface.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence

import numpy as np
from numpy.random import Generator, PCG64, SeedSequence

__all__ = [
    "Sense",
    "TimeGrid",
    "Interval",
    "FiniteSet",
    "PhysicalMeasure",
    "DiscreteProblem",
    "RngStream",
    "ValueEstimate",
    "PathSet",
    "SimulationError",
    "SolverError",
    "Policy",
    "ConstantPolicy",
    "ConstantRatePolicy",
    "ClosedFormPolicy",
    "TablePolicy",
    "euler_step",
    "simulate_paths",
    "evaluate_policy",
    "CondExpBackend",
    "BackwardResult",
    "value_iteration_backward",
    "performance_iteration_backward",
    "ExactEnumerationBackend",
]

INVALID_PATH_LIMIT = 1e-3
BLOCK_SIZE = 8192


class SimulationError(RuntimeError):
    """Too many forward paths produced non-finite states or rewards."""


class SolverError(RuntimeError):
    """A backward solver failed at a given time step / state."""


class Sense(enum.Enum):
    MAXIMIZE = 1
    MINIMIZE = -1

    @property
    def sign(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    steps: int

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("TimeGrid needs at least one step")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    def t(self, n: int) -> float:
        return n * self.dt


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def contains(self, a) -> np.ndarray:
        a = np.asarray(a)
        return (a >= self.lo) & (a <= self.hi)

    def clip(self, a):
        return np.clip(a, self.lo, self.hi)


@dataclass(frozen=True)
class FiniteSet:
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("FiniteSet must be nonempty")
        if len(set(vals)) != len(vals):
            raise ValueError("FiniteSet values must be distinct")
        object.__setattr__(self, "values", vals)

    @property
    def lo(self) -> float:
        return min(self.values)

    @property
    def hi(self) -> float:
        return max(self.values)

    def contains(self, a) -> np.ndarray:
        return np.isin(np.asarray(a, dtype=float), np.array(self.values))

    def clip(self, a):
        # nearest admissible value, ties toward the smaller one
        v = np.sort(np.array(self.values))
        a = np.asarray(a, dtype=float)
        i = np.clip(np.searchsorted(v, a), 1, len(v) - 1) if len(v) > 1 else None
        if i is None:
            return np.full_like(a, v[0])
        left, right = v[i - 1], v[i]
        return np.where(a - left <= right - a, left, right)


@dataclass(frozen=True)
class PhysicalMeasure:
    """Alternative simulation measure for problems whose costs carry a
    Radon-Nikodym weight of the common noise.

    Under this measure the common noise has a random per-path drift
    ``theta`` (sampled once per path), and the unweighted costs apply.
    Expectations agree exactly with the weighted (reference) formulation,
    also in discrete time, while variance stays finite.

    ``log_density(t, z)``, when given, is the log of the weight ``F`` that
    links the two formulations (weighted cost = ``F`` times unweighted).
    """

    sample_drift: Callable[[Generator, int], np.ndarray]
    running_cost: Callable
    terminal_cost: Callable
    log_density: Optional[Callable] = None


@dataclass(frozen=True)
class DiscreteProblem:
    """Controlled SDE ``dZ = b dt + sigma0 dW`` driven by one scalar noise,
    with running cost ``f`` (per unit time) and terminal cost ``g``.

    ``reflect`` lists state coordinates replaced by their absolute value
    after each Euler step.
    """

    dim: int
    drift: Callable
    diffusion: Callable
    running_cost: Callable
    terminal_cost: Callable
    control_space: object
    grid: TimeGrid
    sense: Sense = Sense.MAXIMIZE
    reflect: tuple = ()
    physical: Optional[PhysicalMeasure] = None
    name: str = ""

    @property
    def dt(self) -> float:
        return self.grid.dt

    @property
    def steps(self) -> int:
        return self.grid.steps

    def t(self, n: int) -> float:
        return self.grid.t(n)


@dataclass(frozen=True)
class RngStream:
    """Reproducible noise source: identical ``(seed, stream)`` gives the
    identical noise, block by block, independently of how blocks are
    scheduled."""

    seed: int
    stream: int = 0

    def generator(self, *keys: int) -> Generator:
        return Generator(PCG64(SeedSequence([self.seed, self.stream, *keys])))

    def child(self, stream: int) -> "RngStream":
        return RngStream(self.seed, self.stream * 1_000_003 + stream + 1)


@dataclass(frozen=True)
class ValueEstimate:
    mean: float
    std_error: float
    n_paths: int
    n_invalid: int = 0

    def __str__(self):
        return f"{self.mean:.6f} +/- {self.std_error:.6f} (M={self.n_paths})"


class Policy(Protocol):
    def act(self, n: int, z: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class ConstantPolicy:
    value: float

    def act(self, n, z):
        return np.full(np.shape(z)[0], self.value, dtype=float)


# liquidation benchmark: trade at -y0/T throughout
ConstantRatePolicy = ConstantPolicy


@dataclass(frozen=True)
class ClosedFormPolicy:
    """Analytic feedback ``fn(t, z) -> a``, clipped into the control space."""

    fn: Callable
    grid: TimeGrid
    space: object = None

    def act(self, n, z):
        a = np.asarray(self.fn(self.grid.t(n), z), dtype=float)
        a = np.broadcast_to(a, (np.shape(z)[0],)).astype(float)
        return a if self.space is None else self.space.clip(a)


@dataclass
class TablePolicy:
    """Per-step control tables on scattered states, nearest-neighbour lookup."""

    states: list
    controls: list
    _trees: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        from scipy.spatial import cKDTree

        self._trees = [cKDTree(s) for s in self.states]

    def act(self, n, z):
        _, idx = self._trees[n].query(np.atleast_2d(z))
        return np.asarray(self.controls[n])[idx]


def euler_step(problem: DiscreteProblem, n: int, z, a, eps) -> np.ndarray:
    """One Euler step ``G(z, a, eps) = z + b dt + sigma0 sqrt(dt) eps``."""
    z = np.asarray(z, dtype=float)
    a = np.asarray(a, dtype=float)
    eps = np.asarray(eps, dtype=float)
    t, dt = problem.t(n), problem.dt
    out = (
        z
        + problem.drift(t, z, a) * dt
        + problem.diffusion(t, z, a) * (math.sqrt(dt) * eps)[..., None]
    )
    for k in problem.reflect:
        out[..., k] = np.abs(out[..., k])
    return out


@dataclass
class PathSet:
    rewards: np.ndarray
    valid: np.ndarray
    states: Optional[np.ndarray] = None
    controls: Optional[np.ndarray] = None


def _resolve_measure(problem, measure):
    if measure == "auto":
        return "physical" if problem.physical is not None else "reference"
    if measure == "physical" and problem.physical is None:
        raise ValueError(f"problem {problem.name!r} has no physical measure")
    if measure not in ("physical", "reference"):
        raise ValueError(f"unknown measure {measure!r}")
    return measure


def simulate_paths(
    problem: DiscreteProblem,
    policy,
    z0,
    n_paths: int,
    rng: RngStream,
    *,
    measure: str = "auto",
    keep_paths: bool = False,
    block_size: int = BLOCK_SIZE,
) -> PathSet:
    """Forward Euler simulation of ``n_paths`` controlled paths from ``z0``.

    Rewards are the left-point Riemann sum of the running cost plus the
    terminal cost. Paths are generated in fixed-size blocks, each with its
    own noise stream keyed by the block index.
    """
    if n_paths < 1:
        raise ValueError("need at least one path")
    measure = _resolve_measure(problem, measure)
    z0 = np.asarray(z0, dtype=float).reshape(problem.dim)
    N, dt = problem.steps, problem.dt
    if measure == "physical":
        f, g = problem.physical.running_cost, problem.physical.terminal_cost
    else:
        f, g = problem.running_cost, problem.terminal_cost

    rewards = np.empty(n_paths)
    states = np.empty((n_paths, N + 1, problem.dim)) if keep_paths else None
    controls = np.empty((n_paths, N)) if keep_paths else None
    with np.errstate(all="ignore"):
        for b, start in enumerate(range(0, n_paths, block_size)):
            size = min(block_size, n_paths - start)
            gen = rng.generator(b)
            eps = gen.standard_normal((size, N))
            if measure == "physical":
                theta = problem.physical.sample_drift(gen, size)
                eps = eps + theta[:, None] * math.sqrt(dt)
            z = np.repeat(z0[None, :], size, axis=0)
            acc = np.zeros(size)
            if keep_paths:
                states[start : start + size, 0] = z
            for n in range(N):
                a = policy.act(n, z)
                acc += f(problem.t(n), z, a) * dt
                z = euler_step(problem, n, z, a, eps[:, n])
                if keep_paths:
                    states[start : start + size, n + 1] = z
                    controls[start : start + size, n] = a
            rewards[start : start + size] = acc + g(z)
    valid = np.isfinite(rewards)
    n_bad = int((~valid).sum())
    if n_bad > INVALID_PATH_LIMIT * n_paths:
        raise SimulationError(
            f"{n_bad} of {n_paths} paths produced non-finite values"
        )
    return PathSet(rewards, valid, states, controls)


def evaluate_policy(
    problem, policy, z0, n_paths, rng, *, measure="auto"
) -> ValueEstimate:
    """Monte Carlo value of ``policy``: a statistical lower bound of the
    discrete-time value for maximization (upper bound for minimization)."""
    paths = simulate_paths(problem, policy, z0, n_paths, rng, measure=measure)
    r = paths.rewards[paths.valid]
    m = r.size
    se = float(r.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    return ValueEstimate(float(r.mean()), se, m, n_paths - m)


# --------------------------------------------------------------------------
# Bellman recursions


class CondExpBackend(Protocol):
    """Approximate conditional expectation operator for value iteration."""

    def states(self, n: int) -> np.ndarray: ...

    def set_next(self, n: int, values: np.ndarray) -> None: ...

    def cond_exp(self, n: int, z: np.ndarray, a: np.ndarray) -> np.ndarray: ...

    def make_policy(self, controls: list): ...


@dataclass
class BackwardResult:
    policy: object
    values: list
    controls: list
    diagnostics: dict = field(default_factory=dict)


def _q_function(problem, backend, n):
    t, dt = problem.t(n), problem.dt
    z = backend.states(n)

    def q(a):
        return problem.running_cost(t, z, a) * dt + backend.cond_exp(n, z, a)

    return z, q


def _optimize(problem, q, n_points, search, n):
    from .ctrlsearch import maximize_batch

    sign = problem.sense.sign
    try:
        a, v = maximize_batch(lambda a: sign * q(a), n_points, problem.control_space, search)
    except Exception as exc:  # noqa: BLE001 - re-raised with location
        raise SolverError(f"control search failed at step n={n}: {exc}") from exc
    bad = ~np.isfinite(v)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise SolverError(f"control search failed at step n={n}, point index {i}")
    return a, sign * v


def value_iteration_backward(problem: DiscreteProblem, backend, search=None) -> BackwardResult:
    """Backward Bellman recursion ``V_n = opt_a {f dt + E-approx[V_{n+1}]}``.

    The backend supplies the states at which each ``V_n`` is represented and
    the conditional-expectation operator; ``search`` is a
    :class:`~polymkv.ctrlsearch.SearchSpec`.
    """
    from .ctrlsearch import default_search

    search = search or default_search(problem.control_space)
    N = problem.steps
    values = [None] * (N + 1)
    controls = [None] * N
    values[N] = problem.terminal_cost(backend.states(N))
    for n in range(N - 1, -1, -1):
        backend.set_next(n + 1, values[n + 1])
        z, q = _q_function(problem, backend, n)
        controls[n], values[n] = _optimize(problem, q, z.shape[0], search, n)
    return BackwardResult(backend.make_policy(controls), values, controls)


def performance_iteration_backward(
    problem: DiscreteProblem,
    states: Sequence[np.ndarray],
    eps: np.ndarray,
    weights: Optional[np.ndarray] = None,
    search=None,
    *,
    budget: float = 5e9,
) -> BackwardResult:
    """Performance iteration: candidate actions are scored by re-simulating
    the reward-to-go along sample noise paths under the controls already
    fixed for later steps.

    ``states[n]`` holds the points where the step-``n`` control is computed;
    ``eps`` has shape ``(M, N)`` (common random numbers shared by all
    candidates) and ``weights`` (default uniform) the path weights. The
    later-step controls act by nearest-neighbour lookup on ``states``.
    """
    from .ctrlsearch import default_search

    search = search or default_search(problem.control_space)
    N, dt = problem.steps, problem.dt
    eps = np.asarray(eps, dtype=float)
    M = eps.shape[0]
    w = np.full(M, 1.0 / M) if weights is None else np.asarray(weights, float)
    cost = sum(len(states[n]) * M * (N - n) for n in range(N)) * search.max_evals
    if cost > budget:
        raise SolverError(
            f"performance iteration needs ~{cost:.2e} state updates, budget {budget:.2e}"
        )
    controls = [None] * N
    values = [None] * (N + 1)
    values[N] = problem.terminal_cost(states[N])
    policy_tail = TablePolicy(list(states[:N]), [np.zeros(len(s)) for s in states[:N]])

    for n in range(N - 1, -1, -1):
        z = np.asarray(states[n], float)
        P = z.shape[0]
        zz = np.repeat(z, M, axis=0)
        t = problem.t(n)

        def q(a, zz=zz, n=n, t=t, P=P):
            aa = np.repeat(a, M)
            r = problem.running_cost(t, zz, aa) * dt
            x = euler_step(problem, n, zz, aa, np.tile(eps[:, n], P))
            for k in range(n + 1, N):
                ak = policy_tail.act(k, x)
                r = r + problem.running_cost(problem.t(k), x, ak) * dt
                x = euler_step(problem, k, x, ak, np.tile(eps[:, k], P))
            r = r + problem.terminal_cost(x)
            return (r.reshape(P, M) * w).sum(axis=1)

        controls[n], values[n] = _optimize(problem, q, P, search, n)
        policy_tail.controls[n] = controls[n]
    return BackwardResult(TablePolicy(list(states[:N]), controls), values, controls)


class ExactEnumerationBackend:
    """Exact conditional expectations for problems whose Euler transitions,
    under a finite noise law, stay on a finite lattice of states."""

    def __init__(self, problem, lattice, atoms, probs):
        self.problem = problem
        self.lattice = np.asarray(lattice, float).reshape(-1, problem.dim)
        self.atoms = np.asarray(atoms, float)
        self.probs = np.asarray(probs, float)
        self._next = None
        self._index = {tuple(p): i for i, p in enumerate(self.lattice)}

    def states(self, n):
        return self.lattice

    def set_next(self, n, values):
        self._next = np.asarray(values, float)

    def _lookup(self, x):
        try:
            return np.array([self._index[tuple(p)] for p in x])
        except KeyError as exc:
            raise SolverError(f"transition left the lattice: {exc}") from exc

    def cond_exp(self, n, z, a):
        out = np.zeros(z.shape[0])
        for e, p in zip(self.atoms, self.probs):
            x = euler_step(self.problem, n, z, a, np.full(z.shape[0], e))
            out += p * self._next[self._lookup(np.round(x, 12) + 0.0)]
        return out

    def make_policy(self, controls):
        return TablePolicy([self.lattice] * len(controls), controls)
