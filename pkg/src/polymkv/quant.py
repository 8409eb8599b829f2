"""Optimal quantization of the Gaussian noise, time-layer state grids, and
the quantization-based backward solver.

Conditional expectations ``E[V(G(z, a, eps))]`` are approximated by
replacing ``eps`` with an ``L``-point stationary quantizer and reading the
next-step value table on a grid, either by nearest-point projection
(piecewise constant in ``a``) or by linear interpolation along chosen
coordinates (continuous in ``a``).
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .core import BackwardResult, euler_step, value_iteration_backward

__all__ = [
    "Quantizer",
    "lloyd_gaussian",
    "project",
    "LayerGrid",
    "BrownianScaled",
    "Centered",
    "Empirical",
    "Fixed",
    "build_layer_grids",
    "cond_exp_pc",
    "cond_exp_semilinear",
    "GridPolicy",
    "QuantBackend",
    "q_backward",
    "BOUNDARY_WARN_RATE",
]

BOUNDARY_WARN_RATE = 0.2
_SQRT2PI = math.sqrt(2.0 * math.pi)


def _pdf(x):
    return np.exp(-0.5 * x * x) / _SQRT2PI


@dataclass(frozen=True)
class Quantizer:
    """Scalar quantizer: sorted points, Voronoi cells and cell probabilities."""

    points: np.ndarray
    weights: np.ndarray
    distortion: float = float("nan")
    residual: float = float("nan")

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def bounds(self):
        mid = 0.5 * (self.points[1:] + self.points[:-1])
        return np.concatenate([[-np.inf], mid]), np.concatenate([mid, [np.inf]])

    def to_csv(self, path) -> None:
        lo, hi = self.bounds
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "point", "weight", "lower", "upper"])
            for i, row in enumerate(zip(self.points, self.weights, lo, hi)):
                w.writerow([i] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "Quantizer":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(row for row in fh if not row.startswith("#")))
        pts = np.array([float(r["point"]) for r in rows])
        wts = np.array([float(r["weight"]) for r in rows])
        if np.any(np.diff(pts) <= 0):
            raise ValueError("quantizer points must be strictly increasing")
        return cls(pts, wts)


def _gaussian_cells(points):
    mid = 0.5 * (points[1:] + points[:-1])
    lo = np.concatenate([[-np.inf], mid])
    hi = np.concatenate([mid, [np.inf]])
    # upper-tail cells via survival functions to avoid cancellation
    upper = lo >= 0
    m0 = np.where(upper, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))
    m1 = _pdf(lo) - _pdf(hi)
    return lo, hi, m0, m1


def _gaussian_distortion(points):
    lo, hi, m0, m1 = _gaussian_cells(points)
    xlo = np.where(np.isfinite(lo), np.nan_to_num(lo) * _pdf(lo), 0.0)
    xhi = np.where(np.isfinite(hi), np.nan_to_num(hi) * _pdf(hi), 0.0)
    m2 = m0 - (xhi - xlo)
    return float(np.sum(m2 - 2.0 * points * m1 + points**2 * m0))


def _newton_polish(x, tol, max_iter=50):
    """Newton steps on the stationarity equations ``centroid(x) - x = 0``
    (tridiagonal Jacobian)."""
    from scipy.linalg import solve_banded

    for _ in range(max_iter):
        lo, hi, m0, m1 = _gaussian_cells(x)
        c = m1 / m0
        r = c - x
        if np.max(np.abs(r)) < tol:
            return x, True
        d_hi = np.where(np.isfinite(hi), _pdf(hi) * (np.nan_to_num(hi) - c) / m0, 0.0)
        d_lo = np.where(np.isfinite(lo), _pdf(lo) * (c - np.nan_to_num(lo)) / m0, 0.0)
        ab = np.zeros((3, x.size))
        ab[0, 1:] = 0.5 * d_hi[:-1]  # d c_i / d x_{i+1}
        ab[1] = 0.5 * (d_hi + d_lo) - 1.0
        ab[2, :-1] = 0.5 * d_lo[1:]  # d c_i / d x_{i-1}
        x = x - solve_banded((1, 1), ab, r)
        x = 0.5 * (x - x[::-1])
    lo, hi, m0, m1 = _gaussian_cells(x)
    return x, bool(np.max(np.abs(m1 / m0 - x)) < tol)


def lloyd_gaussian(size: int, tol: float = 1e-12, max_iter: int = 500_000) -> Quantizer:
    """Stationary quantizer of N(0, 1) by Lloyd's fixed-point iteration.

    Starts from equiprobable quantiles; each sweep maps every point to the
    Gaussian mean of its Voronoi cell. Lloyd converges linearly with a rate
    that degrades with ``size``, so once the moves are small the fixed point
    is finished by Newton steps. Raises if the stationarity
    residual is still above ``tol`` after ``max_iter`` sweeps.
    """
    from scipy.special import ndtri

    if size < 1:
        raise ValueError("quantizer size must be >= 1")
    if size == 1:
        return Quantizer(np.zeros(1), np.ones(1), 1.0, 0.0)
    x = ndtri((np.arange(size) + 0.5) / size)
    residual = np.inf
    converged = False
    newton_at = 1e-3
    for _ in range(max_iter):
        _, _, m0, m1 = _gaussian_cells(x)
        new = m1 / m0
        # symmetrize to remove round-off drift
        new = 0.5 * (new - new[::-1])
        residual = float(np.max(np.abs(new - x)))
        x = new
        if residual < tol:
            converged = True
            break
        if residual < newton_at:
            x_newton, converged = _newton_polish(x, tol)
            if converged and np.all(np.diff(x_newton) > 0):
                x = x_newton
                break
            converged = False
            newton_at /= 10.0
    if not converged:
        raise RuntimeError(f"Lloyd iteration did not converge: residual {residual:.3e}")
    _, _, m0, m1 = _gaussian_cells(x)
    stationarity = float(np.max(np.abs(m1 / m0 - x)))
    return Quantizer(x, m0 / m0.sum(), _gaussian_distortion(x), stationarity)


def project(grid, x):
    """Nearest grid point (index, point); exact midpoints go to the lower index."""
    grid = np.asarray(grid, dtype=float)
    x = np.asarray(x, dtype=float)
    if grid.size == 1:
        idx = np.zeros(x.shape, dtype=np.intp)
    else:
        mid = 0.5 * (grid[1:] + grid[:-1])
        idx = np.searchsorted(mid, x, side="left")
    return idx, grid[idx]


# --------------------------------------------------------------------------
# Grids


@dataclass(frozen=True)
class LayerGrid:
    """Outer-product grid of sorted coordinate point sets."""

    coords: tuple

    def __post_init__(self):
        cs = tuple(np.unique(np.asarray(c, dtype=float)) for c in self.coords)
        if any(c.size == 0 for c in cs):
            raise ValueError("empty coordinate grid")
        object.__setattr__(self, "coords", cs)

    @property
    def shape(self):
        return tuple(c.size for c in self.coords)

    @property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.coords, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def __len__(self):
        return int(np.prod(self.shape))


@dataclass(frozen=True)
class BrownianScaled:
    """``center(t) + scale * t^power * Gamma``; ``power=0.5`` matches the
    Brownian standard deviation, ``power=1`` is the literal ``t_n`` recipe."""

    center: float = 0.0
    scale: float = 1.0
    power: float = 0.5
    drift: float = 0.0

    def points(self, n, t, base):
        return self.center + self.drift * t + self.scale * t**self.power * base


@dataclass(frozen=True)
class Centered:
    """``m_n + r_n * Gamma`` for given center and radius paths."""

    centers: Sequence[float]
    radii: Sequence[float]

    def points(self, n, t, base):
        return self.centers[n] + self.radii[n] * base


@dataclass(frozen=True)
class Empirical:
    """Grid from a sample cloud per step: empirical quantiles at the
    cumulative levels of the base quantizer cells."""

    clouds: Sequence[np.ndarray]
    size: Optional[int] = None

    def points(self, n, t, base):
        cloud = np.asarray(self.clouds[n], dtype=float)
        if cloud.size == 0:
            raise ValueError(f"empty empirical cloud at step {n}")
        if self.size is not None:
            base = lloyd_gaussian(self.size).points
        levels = ndtr(base)
        return np.quantile(cloud, levels, method="inverted_cdf")


@dataclass(frozen=True)
class Fixed:
    """The same explicit point set at every step."""

    values: Sequence[float]

    def points(self, n, t, base):
        return np.asarray(self.values, dtype=float)


def build_layer_grids(time_grid, base: Quantizer, schemes, z0, *, positive=(), positive_floor=0.0):
    """Per-step outer-product grids, one scheme per state coordinate.

    Step 0 is the singleton ``{z0}``. Coordinates listed in ``positive``
    are shifted to points ``> positive_floor``.
    """
    z0 = np.asarray(z0, dtype=float)
    if len(schemes) != z0.size:
        raise ValueError("need one grid scheme per state coordinate")
    grids = [LayerGrid(tuple(np.array([v]) for v in z0))]
    for n in range(1, time_grid.steps + 1):
        t = time_grid.t(n)
        coords = []
        for k, scheme in enumerate(schemes):
            pts = np.asarray(scheme.points(n, t, base.points), dtype=float)
            if k in positive:
                pts = pts[pts > positive_floor] if np.any(pts > positive_floor) else pts
                pts = np.maximum(pts, positive_floor + 1e-12)
            coords.append(pts)
        grids.append(LayerGrid(tuple(coords)))
    return grids


# --------------------------------------------------------------------------
# Conditional expectation operators


def _bracket(grid, x):
    """Indices and weight for linear interpolation with clamping outside the
    hull: ``value = lam * V[hi] + (1 - lam) * V[lo]``."""
    m = grid.size
    if m == 1:
        zero = np.zeros(x.shape, dtype=np.intp)
        return zero, zero, np.ones(x.shape), np.zeros(x.shape, bool)
    hi = np.clip(np.searchsorted(grid, x, side="right"), 1, m - 1)
    lo = hi - 1
    lam = (x - grid[lo]) / (grid[hi] - grid[lo])
    lam = np.clip(lam, 0.0, 1.0)
    return lo, hi, lam, (x < grid[0]) | (x > grid[-1])


def _targets(problem, n, z, a, quantizer):
    P, L = z.shape[0], quantizer.size
    zz = np.repeat(z, L, axis=0)
    aa = np.repeat(np.asarray(a, dtype=float), L)
    ee = np.tile(quantizer.points, P)
    return euler_step(problem, n, zz, aa, ee), P, L


def _coord_part(grid_next, x_k, k, interp):
    """Interpolation indices/weights for one coordinate and its
    outside-hull mask."""
    g = grid_next.coords[k]
    if k in interp:
        lo, hi, lam, out = _bracket(g, x_k)
        return (lo, hi, lam), out
    idx, _ = project(g, x_k)
    return (idx, None, None), (x_k < g[0]) | (x_k > g[-1])


def _interp_table(table, grid_next, x, interp, fixed=None):
    """Evaluate the value table at target states ``x`` (rows): projection on
    non-interpolated coordinates, multilinear on ``interp`` ones.

    ``fixed`` maps coordinates to precomputed :func:`_coord_part` results.
    """
    fixed = fixed or {}
    outside = np.zeros(x.shape[0], bool)
    index_parts = []
    for k in range(len(grid_next.coords)):
        part, out = fixed[k] if k in fixed else _coord_part(grid_next, x[:, k], k, interp)
        index_parts.append(part)
        outside |= out
    flat = table.reshape(-1)
    strides = np.cumprod((1,) + grid_next.shape[::-1])[::-1][1:]
    acc = [(np.zeros(x.shape[0], np.intp), np.ones(x.shape[0]))]
    for k, (lo, hi, lam) in enumerate(index_parts):
        nxt = []
        for off, w in acc:
            if hi is None:
                nxt.append((off + lo * strides[k], w))
            else:
                nxt.append((off + lo * strides[k], w * (1.0 - lam)))
                nxt.append((off + hi * strides[k], w * lam))
        acc = nxt
    val = sum(w * flat[off] for off, w in acc)
    return val, outside


def cond_exp_pc(problem, n, z, a, table, grid_next: LayerGrid, quantizer: Quantizer, *,
                log_density=None, return_outside=False):
    """``sum_l p_l V_{n+1}(Proj(G(z, a, e_l)))`` for rows of ``z``."""
    return cond_exp_semilinear(problem, n, z, a, table, grid_next, quantizer, interp=(),
                               log_density=log_density, return_outside=return_outside)


def _node_weights(problem, n, z, x, quantizer, log_density, P, L):
    """Quantizer weights, tilted by the one-step density ratio and
    renormalized per row when ``log_density`` is given."""
    if log_density is None:
        return np.broadcast_to(quantizer.weights, (P, L))
    lw = np.log(quantizer.weights)[None, :] + log_density(problem.t(n + 1), x).reshape(P, L)
    lw -= lw.max(axis=1, keepdims=True)
    w = np.exp(lw)
    return w / w.sum(axis=1, keepdims=True)


def cond_exp_semilinear(problem, n, z, a, table, grid_next: LayerGrid, quantizer: Quantizer,
                        interp=(1,), *, log_density=None, node_weights=None, fixed=None,
                        return_outside=False):
    """Quantized conditional expectation with linear interpolation along the
    ``interp`` coordinates (clamped outside the grid hull) and projection on
    the others. Continuous in ``a``.

    With ``log_density`` the node weights are tilted by the density ratio
    between consecutive steps, which turns the weighted expectation into an
    expectation of density-normalized values. ``node_weights`` of shape
    ``(P, L)`` and ``fixed`` coordinate parts (see :func:`_interp_table`)
    may be passed when already known.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    x, P, L = _targets(problem, n, z, a, quantizer)
    val, outside = _interp_table(np.asarray(table), grid_next, x, tuple(interp), fixed)
    w = node_weights if node_weights is not None else _node_weights(
        problem, n, z, x, quantizer, log_density, P, L)
    out = (val.reshape(P, L) * w).sum(axis=1)
    if return_outside:
        return out, (outside.reshape(P, L), w)
    return out


# --------------------------------------------------------------------------
# Backward solver


@dataclass
class GridPolicy:
    """Projects each state coordinate on the step grid and returns the stored
    control (optionally interpolating along ``interp`` coordinates)."""

    grids: list
    controls: list
    interp: tuple = ()
    space: object = None

    def act(self, n, z):
        z = np.atleast_2d(z)
        g = self.grids[n]
        table = np.asarray(self.controls[n]).reshape(g.shape)
        a, _ = _interp_table(table, g, z, self.interp)
        return a if self.space is None else self.space.clip(a)


class QuantBackend:
    """Conditional expectations on quantization grids for value iteration.

    When the interpolated coordinate moves without noise and the projected
    coordinates move independently of the control and of the interpolated
    coordinate (``separable``), the noise average is taken once per step on
    the projected coordinates and every control evaluation is ``O(P)``. The
    result is identical to the direct sum. ``separable=None`` probes the
    problem coefficients on the grids to decide.

    ``log_density`` tilts the node weights (see :func:`cond_exp_semilinear`);
    the tables then hold density-normalized values.
    """

    def __init__(self, problem, grids, quantizer, mode="semilinear", interp=(1,), separable=None,
                 log_density=None):
        if mode not in ("pc", "semilinear"):
            raise ValueError(f"unknown interpolation mode {mode!r}")
        if len(grids) != problem.steps + 1:
            raise ValueError("need one grid per time node")
        self.problem = problem
        self.grids = grids
        self.quantizer = quantizer
        self.mode = mode
        self.interp = tuple(interp) if mode == "semilinear" else ()
        self.log_density = log_density
        if separable is None:
            separable = len(self.interp) == 1 and self._probe_separable()
        self.separable = bool(separable) and len(self.interp) == 1
        self._next = None
        self._cache = None
        self._points = None
        self._static_cache = None

    def _probe_separable(self) -> bool:
        P = self.problem
        k = self.interp[0]
        others = [i for i in range(P.dim) if i != k]
        space = P.control_space
        for n in sorted({1, P.steps // 2, P.steps - 1}):
            z = self.grids[n].points
            t = P.t(n)
            base_b = base_s = None
            for a_val in (space.lo, 0.5 * (space.lo + space.hi), space.hi):
                a = np.full(z.shape[0], a_val)
                b, s = P.drift(t, z, a), np.broadcast_to(P.diffusion(t, z, a), z.shape)
                if np.any(s[:, k] != 0.0):
                    return False
                if base_b is None:
                    base_b, base_s = b[:, others], s[:, others]
                elif not (np.array_equal(b[:, others], base_b) and np.array_equal(s[:, others], base_s)):
                    return False
            # projected-coordinate coefficients must not depend on the interp coordinate
            _, inv = np.unique(z[:, others], axis=0, return_inverse=True)
            inv = inv.ravel()
            for arr in (base_b, base_s):
                ref = np.zeros((inv.max() + 1, arr.shape[1]))
                ref[inv] = arr
                if not np.array_equal(ref[inv], arr):
                    return False
            if self.log_density is not None:
                moved = z.copy()
                moved[:, k] = 0.0
                if not np.array_equal(self.log_density(t, z), self.log_density(t, moved)):
                    return False
        return True

    def states(self, n):
        if self._points is None or self._points[0] != n:
            self._points = (n, self.grids[n].points)
        return self._points[1]

    def set_next(self, n, values):
        self._next = (n, np.asarray(values).reshape(self.grids[n].shape))
        self._cache = None

    def _averaged(self, n):
        """Noise average of the next table over projected coordinates, per
        group of current states sharing projected coordinates."""
        if self._cache is not None:
            return self._cache
        P, k = self.problem, self.interp[0]
        others = [i for i in range(P.dim) if i != k]
        z = self.states(n)
        keys, first, inv = np.unique(z[:, others], axis=0, return_index=True, return_inverse=True)
        inv = inv.ravel()
        rep = z[first]
        a0 = np.full(rep.shape[0], 0.5 * (P.control_space.lo + P.control_space.hi))
        x, G, L = _targets(P, n, rep, a0, self.quantizer)
        table = self._next[1]
        grid_next = self.grids[n + 1]
        # move the interp axis last, flatten the projected ones
        tab = np.moveaxis(table, k, -1)
        shape_o = tab.shape[:-1]
        tab = tab.reshape(-1, tab.shape[-1])
        flat = np.zeros(x.shape[0], np.intp)
        outside = np.zeros(x.shape[0], bool)
        stride = 1
        for i in reversed(others):
            g = grid_next.coords[i]
            idx, _ = project(g, x[:, i])
            outside |= (x[:, i] < g[0]) | (x[:, i] > g[-1])
            flat += idx * stride
            stride *= g.size
        w = _node_weights(P, n, rep, x, self.quantizer, self.log_density, G, L)
        U = (tab[flat].reshape(G, L, -1) * w[:, :, None]).sum(axis=1)
        out_rate = (outside.reshape(G, L) * w).sum(axis=1)
        self._cache = (U, inv, out_rate)
        return self._cache

    def cond_exp(self, n, z, a):
        m, table = self._next
        if m != n + 1:
            raise RuntimeError("value table for the next step is not set")
        if not self.separable or z is not self.states(n):
            weights, fixed = self._static(n) if z is self.states(n) else (None, None)
            return cond_exp_semilinear(self.problem, n, z, a, table, self.grids[n + 1],
                                       self.quantizer, self.interp, log_density=self.log_density,
                                       node_weights=weights, fixed=fixed)
        U, inv, _ = self._averaged(n)
        k = self.interp[0]
        P = self.problem
        a = np.broadcast_to(np.asarray(a, dtype=float), (z.shape[0],))
        target = z[:, k] + P.drift(P.t(n), z, a)[:, k] * P.dt
        lo, hi, lam, _ = _bracket(self.grids[n + 1].coords[k], target)
        return lam * U[inv, hi] + (1.0 - lam) * U[inv, lo]

    def _static(self, n):
        """Per-step quantities that do not depend on the control, detected by
        comparing the transitions at both ends of the control range: tilted
        node weights and interpolation parts of control-free coordinates."""
        if self._static_cache is not None and self._static_cache[0] == n:
            return self._static_cache[1]
        P, z = self.problem, self.states(n)
        space = P.control_space
        lo, hi = (space.lo, space.hi) if hasattr(space, "lo") else (min(space.values), max(space.values))
        xs, ws = [], []
        for a_val in (lo, hi):
            x, G, L = _targets(P, n, z, np.full(z.shape[0], float(a_val)), self.quantizer)
            xs.append(x)
            if self.log_density is not None:
                ws.append(_node_weights(P, n, z, x, self.quantizer, self.log_density, G, L))
        weights = ws[0] if ws and np.array_equal(ws[0], ws[1]) else None
        grid_next = self.grids[n + 1]
        fixed = {k: _coord_part(grid_next, xs[0][:, k], k, self.interp)
                 for k in range(P.dim) if np.array_equal(xs[0][:, k], xs[1][:, k])}
        self._static_cache = (n, (weights, fixed))
        return weights, fixed

    def boundary_rate(self, n, a) -> float:
        """Probability-weighted share of quantized transitions that leave
        the hull of the next grid."""
        _, (out, w) = cond_exp_semilinear(self.problem, n, self.states(n), a, self._next[1],
                                          self.grids[n + 1], self.quantizer, self.interp,
                                          log_density=self.log_density, return_outside=True)
        return float((out * w).sum(axis=1).mean())

    def make_policy(self, controls):
        return GridPolicy(self.grids[:-1], controls, (), self.problem.control_space)


def q_backward(problem, grids, quantizer, search=None, mode="semilinear", interp=(1,),
               policy_interp=None, separable=None, normalize="auto") -> BackwardResult:
    """Quantization value iteration on per-step grids.

    Returns a :class:`BackwardResult` whose ``values[n]`` are tables on
    ``grids[n]`` and whose policy is a :class:`GridPolicy` (projection on
    every coordinate unless ``policy_interp`` names coordinates to
    interpolate). Reports the fraction of quantized transitions leaving the
    next grid per step in ``diagnostics['boundary_rate']`` and warns when it
    exceeds 20%.

    ``normalize`` (``"auto"``, True or False) solves for values divided by
    the density weight of the problem's physical measure, using the
    unweighted costs and tilted node weights. The weighted and normalized
    recursions coincide up to quantization error; the normalized tables stay
    bounded where the weight grows fast. Returned ``values`` are always on
    the weighted scale.
    """
    from .ctrlsearch import default_search

    phys = problem.physical
    has_density = phys is not None and phys.log_density is not None
    if normalize == "auto":
        normalize = has_density
    if normalize and not has_density:
        raise ValueError("normalize=True needs a physical measure with log_density")

    search = search or default_search(problem.control_space)
    if mode == "pc":
        search = search.with_multistart(4)
    solved = problem
    log_density = None
    if normalize:
        solved = replace(problem, running_cost=phys.running_cost,
                         terminal_cost=phys.terminal_cost, physical=None)
        log_density = phys.log_density
    backend = QuantBackend(solved, grids, quantizer, mode, interp, separable, log_density)
    res = value_iteration_backward(solved, backend, search)
    rates = np.zeros(problem.steps)
    for n in range(problem.steps):
        backend.set_next(n + 1, res.values[n + 1])
        rates[n] = backend.boundary_rate(n, res.controls[n])
    overall = float(rates.mean())
    if overall > BOUNDARY_WARN_RATE:
        warnings.warn(f"{overall:.1%} of quantized transitions leave the grid hull", RuntimeWarning)
    if normalize:
        res.values = [v * np.exp(log_density(problem.t(n), grids[n].points))
                      for n, v in enumerate(res.values)]
    if policy_interp is not None:
        res.policy = GridPolicy(grids[:-1], res.controls, tuple(policy_interp), problem.control_space)
    res.diagnostics["boundary_rate"] = rates
    res.diagnostics["normalized"] = bool(normalize)
    return res
