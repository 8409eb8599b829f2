"""Scalar control optimization over finite sets and intervals.

Every routine is vectorized over a batch of ``P`` independent objectives:
``objective(a)`` maps controls of shape ``(P,)`` to values of shape
``(P,)``, one objective per batch entry (typically one per grid point).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .core import FiniteSet, Interval

__all__ = [
    "Method",
    "SearchSpec",
    "SearchResult",
    "default_search",
    "maximize",
    "maximize_batch",
    "quadratic_argmax",
]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class Method(enum.Enum):
    EXHAUSTIVE = "exhaustive"
    GOLDEN = "golden"
    PARABOLIC = "parabolic"
    CLOSED_FORM = "closed-form"


@dataclass(frozen=True)
class SearchSpec:
    method: Method = Method.GOLDEN
    tol: float = 1e-6
    max_evals: int = 200
    multistart: int = 1

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.multistart < 1:
            raise ValueError("multistart must be >= 1")
        if self.max_evals < 3:
            raise ValueError("max_evals must be >= 3")

    def with_multistart(self, k: int) -> "SearchSpec":
        return replace(self, multistart=max(self.multistart, k))


@dataclass(frozen=True)
class SearchResult:
    control: float
    value: float
    n_evals: int
    budget_exhausted: bool = False

    def __iter__(self):
        return iter((self.control, self.value))


def default_search(space) -> SearchSpec:
    if isinstance(space, FiniteSet):
        return SearchSpec(Method.EXHAUSTIVE)
    return SearchSpec(Method.GOLDEN)


def quadratic_argmax(c0, c1, c2, space: Interval):
    """Maximizer of ``c0 + c1 a + c2 a^2`` over an interval.

    Concave case: clamped vertex. Otherwise the better endpoint, ties to
    the lower one. Accepts scalars or arrays.
    """
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    lo, hi = space.lo, space.hi
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        vertex = np.clip(-c1 / (2.0 * c2), lo, hi)
    v_lo = c1 * lo + c2 * lo * lo
    v_hi = c1 * hi + c2 * hi * hi
    endpoint = np.where(v_hi > v_lo, hi, lo)
    out = np.where(c2 < 0, vertex, endpoint)
    return float(out) if out.ndim == 0 else out


def _exhaustive(objective, P, values):
    vals = np.sort(np.asarray(values, dtype=float))
    best_a = np.full(P, vals[0])
    best_v = objective(best_a.copy())
    for v in vals[1:]:
        a = np.full(P, v)
        f = objective(a)
        # strict improvement keeps the lowest control on ties
        better = f > best_v
        best_a = np.where(better, v, best_a)
        best_v = np.where(better, f, best_v)
    return best_a, best_v, len(vals), False


def _golden(objective, lo, hi, tol, max_evals):
    """Vectorized golden-section search on per-entry brackets [lo, hi]."""
    a, b = lo.copy(), hi.copy()
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = objective(c), objective(d)
    evals = 2
    while np.max(b - a) > tol and evals < max_evals:
        left = fc >= fd  # keep [a, d]; ties move left
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        # the surviving interior point moves over, one new evaluation
        keep, fkeep = np.where(left, c, d), np.where(left, fc, fd)
        x = np.where(left, b - _INVPHI * (b - a), a + _INVPHI * (b - a))
        fx = objective(x)
        evals += 1
        c, fc = np.where(left, x, keep), np.where(left, fx, fkeep)
        d, fd = np.where(left, keep, x), np.where(left, fkeep, fx)
    exhausted = bool(np.max(b - a) > tol)
    pick_c = fc >= fd
    return np.where(pick_c, c, d), np.where(pick_c, fc, fd), evals, exhausted


def _parabolic_polish(objective, x, fx, lo, hi, h, rounds=2):
    """Successive three-point parabolic steps around ``x``; keeps a step
    only when it improves the objective."""
    evals = 0
    for _ in range(rounds):
        xl = np.maximum(x - h, lo)
        xr = np.minimum(x + h, hi)
        fl, fr = objective(xl), objective(xr)
        evals += 2
        d1 = (fr - fx) / np.where(xr > x, xr - x, 1.0)
        d0 = (fx - fl) / np.where(x > xl, x - xl, 1.0)
        curv = (d1 - d0) / np.where(xr > xl, (xr - xl) / 2.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = -(d0 + d1) / 2.0 / curv
        ok = (curv < 0) & np.isfinite(step) & (xr > x) & (x > xl)
        cand = np.clip(np.where(ok, x + step, x), lo, hi)
        fcand = objective(cand)
        evals += 1
        for xx, ff in ((cand, fcand), (xl, fl), (xr, fr)):
            better = ff > fx
            x = np.where(better, xx, x)
            fx = np.where(better, ff, fx)
        h = h / 4.0
    return x, fx, evals


def maximize_batch(objective, P: int, space, spec: SearchSpec, *, quadratic=None):
    """Maximize ``P`` scalar objectives in parallel.

    Returns ``(controls, values)``; with ``quadratic`` given as a tuple of
    coefficient arrays ``(c0, c1, c2)`` the closed form is used directly.
    """
    a, v, _, _ = _maximize_batch(objective, P, space, spec, quadratic)
    return a, v


def _maximize_batch(objective, P, space, spec, quadratic=None):
    if spec.method is Method.EXHAUSTIVE:
        if not isinstance(space, FiniteSet):
            raise ValueError("exhaustive search needs a FiniteSet control space")
        return _exhaustive(objective, P, space.values)
    if isinstance(space, FiniteSet):
        raise ValueError(f"{spec.method.value} search needs an Interval control space")
    lo, hi = float(space.lo), float(space.hi)
    if hi == lo:
        a = np.full(P, lo)
        return a, objective(a), 1, False

    if spec.method is Method.CLOSED_FORM:
        if quadratic is None:
            # recover the coefficients from three evaluations
            x = np.array([lo, 0.5 * (lo + hi), hi])
            f = [objective(np.full(P, xi)) for xi in x]
            c2 = (f[0] - 2 * f[1] + f[2]) / (2 * ((hi - lo) / 2) ** 2)
            c1 = (f[2] - f[0]) / (hi - lo) - c2 * (lo + hi)
            evals = 4
        else:
            _, c1, c2 = (np.broadcast_to(np.asarray(c, float), (P,)) for c in quadratic)
            evals = 1
        a = np.broadcast_to(quadratic_argmax(0.0, c1, c2, space), (P,)).astype(float)
        return a, objective(a), evals, False

    k = spec.multistart
    edges = np.linspace(lo, hi, k + 1)
    budget = max(spec.max_evals // k, 3)
    best_a = best_v = None
    total, exhausted = 0, False
    for j in range(k):
        sub_lo = np.full(P, edges[j])
        sub_hi = np.full(P, edges[j + 1])
        if spec.method is Method.PARABOLIC:
            # coarse golden bracket then parabolic acceleration
            coarse = max(spec.tol, (edges[j + 1] - edges[j]) * 1e-3)
            a, v, e, ex = _golden(objective, sub_lo, sub_hi, coarse, budget)
            a, v, e2 = _parabolic_polish(objective, a, v, sub_lo, sub_hi, coarse, rounds=3)
            e += e2
            ex = ex or e > budget
        else:
            a, v, e, ex = _golden(objective, sub_lo, sub_hi, spec.tol, budget)
        total += e
        exhausted |= ex
        if best_a is None:
            best_a, best_v = a, v
        else:
            better = v > best_v
            best_a = np.where(better, a, best_a)
            best_v = np.where(better, v, best_v)
    # endpoints guard against boundary optima missed by interior probes
    for edge in (lo, hi):
        e_a = np.full(P, edge)
        e_v = objective(e_a)
        total += 1
        better = e_v > best_v
        best_a = np.where(better, e_a, best_a)
        best_v = np.where(better, e_v, best_v)
    return best_a, best_v, total, exhausted


def maximize(objective, space, spec: SearchSpec | None = None, *, quadratic=None) -> SearchResult:
    """Maximize a scalar objective ``a -> float`` over ``space``.

    Returns a :class:`SearchResult`, which unpacks as ``(a_star, value)``.
    """
    spec = spec or default_search(space)

    def batched(a):
        return np.array([float(objective(float(x))) for x in np.atleast_1d(a)])

    quad = None if quadratic is None else tuple(np.atleast_1d(c) for c in quadratic)
    a, v, n, ex = _maximize_batch(batched, 1, space, spec, quad)
    return SearchResult(float(a[0]), float(v[0]), n, ex)
