"""Space-specialized minimizers for the mean-set objective.

Every solver here is validated against ``grid_oracle``, the brute-force
candidate sweep that serves as ground truth: a solver's achieved objective
value must never exceed the oracle band minimum by more than the value
tolerance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ConfigurationError,
    ConvergenceFailure,
    DiscreteMeasure,
    FrechetConfig,
    MeanSetApprox,
    Space,
    estimate_resolution,
    frechet_functional,
    relaxed_mean_set,
)
from .spaces import BuresWassersteinSpace, EuclideanSpace, matrix_sqrt

__all__ = [
    "SolverConfig",
    "grid_oracle",
    "weiszfeld_median",
    "euclidean_pmean",
    "bw_barycenter",
    "refine_mean_set",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """Iteration budget and tolerances shared by the iterative solvers."""

    max_iterations: int = 500
    step_tolerance: float = 1e-10
    value_tolerance: float = 1e-9
    init: str = "mean"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("need at least one iteration")
        if self.step_tolerance <= 0 or self.value_tolerance <= 0:
            raise ValueError("tolerances must be positive")


def grid_oracle(space: Space, mu: DiscreteMeasure, config: FrechetConfig,
                grid, resolution: float | None = None) -> MeanSetApprox:
    """Exact argmin band over an explicit finite grid.

    This is the independent reference for every other solver; it never
    delegates to them. Pass the grid step as ``resolution`` whenever it is
    known, otherwise a mesh estimate is attempted (small grids only).
    """
    grid = list(grid)
    if not grid:
        raise ValueError("grid must be nonempty")
    if resolution is None:
        resolution = estimate_resolution(space, grid)
    return relaxed_mean_set(space, mu, config, grid, resolution=resolution)


def _as_array_support(mu: DiscreteMeasure) -> np.ndarray:
    return np.asarray([np.asarray(y, dtype=float) for y in mu.support])


def weiszfeld_median(space: EuclideanSpace, mu: DiscreteMeasure,
                     config: SolverConfig | None = None,
                     callback=None) -> np.ndarray:
    """Geometric median by the reweighting iteration, with anchor handling.

    When an iterate coincides with a support atom, the optimality of that
    atom is decided by the subgradient condition (the pull of the other
    atoms against the atom's own weight); if the atom is not optimal the
    iterate is pushed off along the pull direction. The objective is
    non-increasing at every step; ``callback(x)`` is invoked on each
    iterate.
    """
    if not isinstance(space, EuclideanSpace):
        raise ConfigurationError("the median iteration runs on Euclidean spaces")
    config = config or SolverConfig()
    ys = _as_array_support(mu)
    w = mu.weights
    if mu.is_degenerate():
        return ys[0].copy()

    x = ys.T @ w  # weighted average start
    if callback is not None:
        callback(x.copy())
    scale = 1.0 + float(np.max(np.linalg.norm(ys - x, axis=1)))

    # Optimality certificate at an atom: the pull of the other atoms does
    # not exceed the atom's own weight. It certifies the global optimum of
    # the convex objective, and it rescues the atom-optimal instances where
    # the plain iteration converges sublinearly. Verdicts are cached since
    # the nearest atom stabilizes quickly.
    certified: dict[int, bool] = {}

    def atom_is_optimal(j: int) -> bool:
        if j not in certified:
            yj = ys[j]
            dj = np.linalg.norm(ys - yj, axis=1)
            same = dj <= 1e-12 * scale
            pull = ((ys[~same] - yj) / dj[~same, None]).T @ w[~same]
            certified[j] = float(np.linalg.norm(pull)) <= float(w[same].sum())
        return certified[j]

    f_prev = math.inf
    for _ in range(config.max_iterations):
        dist = np.linalg.norm(ys - x, axis=1)
        j = int(np.argmin(dist))
        if atom_is_optimal(j):
            return ys[j].copy()
        f_here = float(np.dot(w, dist))
        if abs(f_prev - f_here) <= config.value_tolerance * (1.0 + abs(f_here)):
            return x
        f_prev = f_here
        if dist[j] <= 1e-12 * scale:
            # Sitting on a non-optimal atom: push off along the pull,
            # damped by the anchor weight (the iteration map is singular).
            same = dist <= 1e-12 * scale
            others = ~same
            pull = ((ys[others] - x) / dist[others, None]).T @ w[others]
            pull_norm = float(np.linalg.norm(pull))
            anchor_weight = float(w[same].sum())
            denom = float(np.sum(w[others] / dist[others]))
            step = (1.0 - anchor_weight / pull_norm) * (pull_norm / denom)
            x = x + step * (pull / pull_norm)
            if callback is not None:
                callback(x.copy())
            continue
        inv = w / dist
        x_next = ys.T @ inv / inv.sum()
        move = float(np.linalg.norm(x_next - x))
        x = x_next
        if callback is not None:
            callback(x.copy())
        if move <= config.step_tolerance * scale:
            return x
    raise ConvergenceFailure("median iteration did not converge",
                             last_point=x, iterations=config.max_iterations,
                             value=f_prev)


def _pmoment(ys: np.ndarray, w: np.ndarray, x: np.ndarray, p: float) -> float:
    return float(np.dot(w, np.linalg.norm(ys - x, axis=1) ** p))


def euclidean_pmean(space: EuclideanSpace, mu: DiscreteMeasure, p: float,
                    config: SolverConfig | None = None,
                    callback=None) -> np.ndarray:
    """Minimizer of the p-th distance moment on R^d.

    The objective is convex for p >= 1. p = 2 is the weighted average in
    closed form; p = 1 delegates to the median iteration; anything else
    runs backtracking gradient descent from the weighted average.
    ``callback(x)`` is invoked on each iterate.
    """
    if not isinstance(space, EuclideanSpace):
        raise ConfigurationError("this solver runs on Euclidean spaces")
    if p < 1:
        raise ValueError("order p must be >= 1")
    config = config or SolverConfig()
    ys = _as_array_support(mu)
    w = mu.weights
    if mu.is_degenerate():
        return ys[0].copy()
    if p == 2.0:
        return ys.T @ w
    if p == 1.0:
        return weiszfeld_median(space, mu, config, callback=callback)

    x = ys.T @ w
    if callback is not None:
        callback(x.copy())
    scale = 1.0 + float(np.max(np.linalg.norm(ys - x, axis=1)))
    f = _pmoment(ys, w, x, p)
    lr = 1.0
    for _ in range(config.max_iterations):
        diff = x - ys
        dist = np.linalg.norm(diff, axis=1)
        mask = dist > 1e-15 * scale
        grad = p * ((w[mask] * dist[mask] ** (p - 2.0))[:, None] * diff[mask]).sum(axis=0)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= config.step_tolerance:
            return x
        step = lr
        for _ in range(60):  # backtracking keeps the descent monotone
            x_try = x - step * grad
            f_try = _pmoment(ys, w, x_try, p)
            if f_try <= f - 0.5 * step * gnorm * gnorm * 1e-4:
                break
            step *= 0.5
        else:
            return x  # no descent direction at floating-point resolution
        moved = step * gnorm
        stalled = f - f_try <= config.value_tolerance * (1.0 + abs(f_try))
        x, f = x_try, f_try
        if stalled:
            if callback is not None:
                callback(x.copy())
            return x
        if callback is not None:
            callback(x.copy())
        lr = min(step * 4.0, 1e6)
        if moved <= config.step_tolerance * scale:
            return x
    raise ConvergenceFailure("gradient descent did not converge",
                             last_point=x, iterations=config.max_iterations, value=f)


def _clamped_root_pair(space: BuresWassersteinSpace, sigma: np.ndarray,
                       floor_ratio: float = 1e-12):
    """Square root and inverse square root with a strict positivity clamp."""
    lam, vec = np.linalg.eigh((sigma + sigma.T) / 2.0)
    top = float(lam[-1]) if float(lam[-1]) > 0 else 1.0
    floor = floor_ratio * top
    clamped = np.maximum(lam, floor)
    if np.any(lam < floor):
        log.warning("clamped %d eigenvalue(s) to keep an iterate positive definite",
                    int(np.sum(lam < floor)))
    root = (vec * np.sqrt(clamped)) @ vec.T
    inv_root = (vec / np.sqrt(clamped)) @ vec.T
    return root, inv_root


def bw_barycenter(space: BuresWassersteinSpace, mu: DiscreteMeasure,
                  config: SolverConfig | None = None,
                  callback=None) -> np.ndarray:
    """Order-2 mean of covariance matrices by the fixed-point iteration.

    Starting from the Euclidean average, each step maps the current
    matrix S to S^{-1/2} (sum_i w_i (S^{1/2} Sigma_i S^{1/2})^{1/2})^2 S^{-1/2}.
    Iteration stops once one more step moves the iterate by less than the
    step tolerance in the space's own metric. ``callback(S)`` is invoked
    on each iterate.
    """
    if not isinstance(space, BuresWassersteinSpace):
        raise ConfigurationError("this solver runs on Bures-Wasserstein spaces")
    config = config or SolverConfig()
    mats = [np.asarray(m, dtype=float) for m in mu.support]
    w = mu.weights
    if mu.is_degenerate():
        return mats[0].copy()

    current = sum(wi * m for wi, m in zip(w, mats))
    if callback is not None:
        callback(current.copy())
    scale = 1.0 + float(np.trace(current))
    for _ in range(config.max_iterations):
        root, inv_root = _clamped_root_pair(space, current)
        mixed = np.zeros_like(current)
        for wi, m in zip(w, mats):
            inner = root @ m @ root
            mixed += wi * matrix_sqrt(space, (inner + inner.T) / 2.0)
        nxt = inv_root @ mixed @ mixed @ inv_root
        nxt = (nxt + nxt.T) / 2.0
        if callback is not None:
            callback(nxt.copy())
        # The Frobenius gap of the roots upper-bounds the metric step and
        # stays numerically meaningful near the fixed point, where the
        # metric formula reduces to the square root of round-off noise.
        step_bound = float(np.linalg.norm(root - matrix_sqrt(space, nxt)))
        if step_bound <= config.step_tolerance * scale:
            return nxt
        current = nxt
    raise ConvergenceFailure("fixed-point iteration did not converge",
                             last_point=current, iterations=config.max_iterations)


def refine_mean_set(space: Space, mu: DiscreteMeasure, config: FrechetConfig,
                    coarse: MeanSetApprox) -> MeanSetApprox:
    """One local refinement round around a coarse band.

    Lays a ball-grid of half the coarse resolution around every coarse
    member, keeps the coarse members themselves, and re-extracts the band.
    The resolution halves and the achieved value cannot increase. Needs a
    space with a ball-grid candidate scheme.
    """
    if config.epsilon == 0.0 and mu.is_degenerate():
        return coarse
    res = coarse.resolution
    step = res / 2.0
    refined = list(coarse.points)
    for pt in coarse.points:
        refined.extend(space.candidates(mu, "ball-grid", center=pt,
                                        radius=res, step=step))
    refined = space.dedup(refined) if len(refined) <= 4096 else refined
    return relaxed_mean_set(space, mu, config, refined, resolution=step)
