"""Metric-space contract, discrete measures, and the renormalized objective.

The central quantity is the renormalized cost

    W(mu, x, xref) = sum_i w_i * (d(x, y_i)**p - d(xref, y_i)**p),

a difference of p-th-power distance averages against a reference point.
Minimizing it over ``x`` is equivalent to minimizing the plain p-th moment
whenever the latter is finite, but the difference form stays finite under
weaker moment behavior and shifts by a constant when the reference point
changes, so the minimizer set does not depend on the reference.

Mean sets are represented by finite candidate enumeration: a candidate
scheme (grid, support-derived, or solver-seeded) produces a finite point
list with a known covering radius, and the epsilon-band of near-minimal
candidates approximates the true compact minimizer set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

Point = Any

# Membership band for floating-point ties at the minimum; relative so that
# symmetric minimizers are never dropped on large-magnitude objectives.
DEFAULT_VALUE_TOLERANCE = 1e-9


class ConfigurationError(Exception):
    """Inputs are structurally valid but inconsistently configured."""


class ConvergenceFailure(RuntimeError):
    """An iterative solver exhausted its iteration budget.

    Carries the last iterate so callers can inspect or reuse partial
    progress.
    """

    def __init__(self, message: str, last_point=None, iterations: int = 0,
                 value: float | None = None):
        super().__init__(message)
        self.last_point = last_point
        self.iterations = iterations
        self.value = value


class Space:
    """Contract every concrete metric space implements.

    A space is an immutable configuration object; ``distance`` must be a
    metric on the points it ``contains``. All methods are pure, so spaces
    and the values built on them are safe to share across threads.
    """

    def distance(self, x: Point, y: Point) -> float:
        raise NotImplementedError

    def contains(self, x: Point) -> bool:
        raise NotImplementedError

    def points_equal(self, x: Point, y: Point, tol: float = 1e-9) -> bool:
        """Point-equality predicate; d(x, y) = 0 must imply this holds."""
        return self.distance(x, y) <= tol

    def pairwise_distances(self, xs: Sequence[Point], ys: Sequence[Point]) -> np.ndarray:
        """Distance matrix with shape (len(xs), len(ys)).

        Generic double loop; subclasses with array points override this
        with a vectorized path.
        """
        return np.array([[self.distance(x, y) for y in ys] for x in xs], dtype=float)

    def candidates(self, mu: "DiscreteMeasure", scheme: str = "support", *,
                   step: float | None = None, center: Point | None = None,
                   radius: float | None = None, pad: float = 0.0,
                   **kwargs) -> list:
        """Deterministic candidate points for mean-set enumeration.

        The base class only knows the ``support`` scheme (deduplicated
        support atoms); subclasses add ``grid`` and ``ball-grid`` where the
        geometry allows it.
        """
        if scheme == "support":
            return self.dedup(mu.support)
        raise ConfigurationError(
            f"candidate scheme {scheme!r} is not supported by {type(self).__name__}")

    def dedup(self, points: Sequence[Point]) -> list:
        out: list = []
        for x in points:
            if not any(self.points_equal(x, y) for y in out):
                out.append(x)
        return out

    def sample_point(self, rng: np.random.Generator, scale: float = 1.0) -> Point:
        """Random point, used by the randomized axiom and algebra checks."""
        raise NotImplementedError

    def point_to_json(self, x: Point):
        raise NotImplementedError

    def point_from_json(self, obj) -> Point:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely supported probability measure on one space.

    This is the only measure representation: empirical measures and
    reference measures alike are finite lists of support points with
    nonnegative weights summing to one (within 1e-12). Support points may
    repeat; weights then add.
    """

    space: Space
    support: tuple
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "support", tuple(self.support))
        if len(self.support) == 0:
            raise ValueError("measure needs at least one support point")
        if w.shape != (len(self.support),):
            raise ValueError("weights must align with support points")
        if np.any(w < -1e-15):
            raise ValueError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")
        for y in self.support:
            if not self.space.contains(y):
                raise ConfigurationError("support point does not belong to the space")

    @classmethod
    def uniform(cls, space: Space, points: Sequence[Point]) -> "DiscreteMeasure":
        points = list(points)
        n = len(points)
        if n == 0:
            raise ValueError("measure needs at least one support point")
        return cls(space, tuple(points), np.full(n, 1.0 / n))

    @classmethod
    def dirac(cls, space: Space, point: Point) -> "DiscreteMeasure":
        return cls(space, (point,), np.array([1.0]))

    @classmethod
    def from_weights(cls, space: Space, points: Sequence[Point],
                     weights: Sequence[float], normalize: bool = False) -> "DiscreteMeasure":
        w = np.asarray(weights, dtype=float)
        if normalize:
            total = float(w.sum())
            if total <= 0:
                raise ValueError("weights must have positive total mass")
            w = w / total
        return cls(space, tuple(points), w)

    def is_degenerate(self, tol: float = 1e-12) -> bool:
        """True when all support points coincide (a single atom)."""
        if len(self.support) == 1:
            return True
        row = self.space.pairwise_distances(self.support[:1], self.support)
        return bool(np.max(row) <= tol)


@dataclass(frozen=True)
class FrechetConfig:
    """Order p >= 1, relaxation level epsilon >= 0, optional origin point.

    The origin defaults to the first support atom of the measure at hand;
    the minimizer set is the same for every choice.
    """

    p: float
    epsilon: float = 0.0
    origin: Any = None

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("order p must be >= 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")


@dataclass(frozen=True, eq=False)
class MeanSetApprox:
    """Finite point set with a resolution radius approximating a mean set.

    ``points`` are the candidates whose objective value lies within
    ``epsilon`` (plus a floating-point tolerance) of ``achieved_value``,
    the best value seen over the candidate scheme. ``resolution`` is the
    covering radius of that scheme.
    """

    points: tuple
    resolution: float
    achieved_value: float

    def __post_init__(self):
        if len(self.points) == 0:
            raise ValueError("mean-set approximation must be nonempty")
        if self.resolution < 0:
            raise ValueError("resolution must be positive")


def _check_pair(space: Space, mu: DiscreteMeasure) -> None:
    if mu.space is not space and mu.space != space:
        raise ConfigurationError("measure is supported on a different space")


def value_tolerance(achieved: float) -> float:
    """Relative tie tolerance for membership in the epsilon-band."""
    return DEFAULT_VALUE_TOLERANCE * (1.0 + abs(achieved))


def frechet_functional(space: Space, mu: DiscreteMeasure, x: Point, xref: Point,
                       p: float) -> float:
    """Renormalized cost sum_i w_i * (d(x, y_i)**p - d(xref, y_i)**p).

    Always finite for finitely supported ``mu``. Satisfies the cocycle
    identity W(x, x') + W(x', x'') = W(x, x'') and the bound
    |W(x, x')| <= p d(x, x') sum_i w_i (d(x,y_i)**(p-1) + d(x',y_i)**(p-1)).
    """
    _check_pair(space, mu)
    if p < 1:
        raise ValueError("order p must be >= 1")
    d = space.pairwise_distances([x, xref], mu.support)
    return float(np.dot(mu.weights, d[0] ** p - d[1] ** p))


def moment(space: Space, mu: DiscreteMeasure, r: float, x: Point) -> float:
    """r-th distance moment sum_i w_i * d(x, y_i)**r."""
    _check_pair(space, mu)
    if r < 0:
        raise ValueError("moment order must be >= 0")
    d = space.pairwise_distances([x], mu.support)[0]
    return float(np.dot(mu.weights, d ** r))


def _band_values(space: Space, mu: DiscreteMeasure, config: FrechetConfig,
                 candidates: Sequence[Point]) -> np.ndarray:
    """Objective values of all candidates against the configured origin."""
    origin = config.origin if config.origin is not None else mu.support[0]
    d = space.pairwise_distances(list(candidates), mu.support)
    ref = space.pairwise_distances([origin], mu.support)[0]
    shift = float(np.dot(mu.weights, ref ** config.p))
    return d ** config.p @ mu.weights - shift


def frechet_variance(space: Space, mu: DiscreteMeasure, config: FrechetConfig,
                     candidates: Sequence[Point]) -> float:
    """Best renormalized cost over the candidates.

    An upper bound of the true infimum; tightens as the candidate scheme
    refines.
    """
    _check_pair(space, mu)
    candidates = list(candidates)
    if not candidates:
        raise ValueError("candidates must be nonempty")
    return float(np.min(_band_values(space, mu, config, candidates)))


def estimate_resolution(space: Space, candidates: Sequence[Point]) -> float:
    """Mesh of a candidate set: the largest nearest-neighbor distance.

    Quadratic in the candidate count, so only small sets are accepted;
    grid-based callers should pass the grid step explicitly instead.
    """
    candidates = list(candidates)
    if len(candidates) == 1:
        return 1e-12
    if len(candidates) > 128:
        raise ValueError("candidate set too large to estimate a resolution; "
                         "pass resolution explicitly")
    dm = space.pairwise_distances(candidates, candidates)
    np.fill_diagonal(dm, np.inf)
    return float(max(np.max(np.min(dm, axis=1)), 1e-12))


def relaxed_mean_set(space: Space, mu: DiscreteMeasure, config: FrechetConfig,
                     candidates: Sequence[Point],
                     resolution: float | None = None) -> MeanSetApprox:
    """Candidates whose cost lies within epsilon of the candidate minimum.

    The output point set is independent of the configured origin (the
    objective shifts by a constant) and grows monotonically with epsilon.
    A measure concentrated on a single atom short-circuits to that atom
    when epsilon is zero; the exact minimizer needs no sweep there.
    """
    _check_pair(space, mu)
    candidates = list(candidates)
    if not candidates:
        raise ValueError("candidates must be nonempty")
    if config.epsilon == 0.0 and mu.is_degenerate():
        atom = mu.support[0]
        achieved = frechet_functional(
            space, mu, atom,
            config.origin if config.origin is not None else atom, config.p)
        res = resolution if resolution is not None else 1e-12
        return MeanSetApprox((atom,), res, achieved)

    values = _band_values(space, mu, config, candidates)
    achieved = float(np.min(values))
    cut = achieved + config.epsilon + value_tolerance(achieved)
    kept = tuple(c for c, v in zip(candidates, values) if v <= cut)
    if resolution is None:
        resolution = estimate_resolution(space, candidates)
    return MeanSetApprox(kept, resolution, achieved)


# ---------------------------------------------------------------------------
# Algebraic diagnostics. These return slack values (how far an identity or
# bound is from being violated) so tests and the CLI diagnostics command can
# report worst cases instead of bare booleans.
# ---------------------------------------------------------------------------

def cocycle_gap(space: Space, mu: DiscreteMeasure, x: Point, x1: Point, x2: Point,
                p: float) -> float:
    """|W(x, x1) + W(x1, x2) - W(x, x2)|; zero up to accumulation error."""
    a = frechet_functional(space, mu, x, x1, p)
    b = frechet_functional(space, mu, x1, x2, p)
    c = frechet_functional(space, mu, x, x2, p)
    return abs(a + b - c)


def renorm_bound_slack(space: Space, mu: DiscreteMeasure, x: Point, x1: Point,
                       p: float) -> float:
    """Bound minus |W(x, x1)|; nonnegative when the inequality holds."""
    w = abs(frechet_functional(space, mu, x, x1, p))
    d = space.pairwise_distances([x, x1], mu.support)
    bound = p * space.distance(x, x1) * float(
        np.dot(mu.weights, d[0] ** (p - 1) + d[1] ** (p - 1)))
    return bound - w


def power_bound_slack(space: Space, x: Point, x1: Point, x2: Point, r: float) -> float:
    """c_r (d(x,x1)**r + d(x1,x2)**r) - d(x,x2)**r with c_r = max(1, 2**(r-1))."""
    if r < 0:
        raise ValueError("exponent must be >= 0")
    c_r = max(1.0, 2.0 ** (r - 1.0))
    return (c_r * (space.distance(x, x1) ** r + space.distance(x1, x2) ** r)
            - space.distance(x, x2) ** r)


def metric_axiom_violations(space: Space, rng: np.random.Generator, trials: int = 1000,
                            scale: float = 1.0, tol: float = 1e-9) -> dict:
    """Worst violations of the metric axioms over random triples.

    Returns max violations for symmetry, triangle inequality, identity
    (d(x, x) = 0), and nonnegativity; all should be <= tol.
    """
    worst = {"symmetry": 0.0, "triangle": 0.0, "identity": 0.0, "nonnegative": 0.0}
    for _ in range(trials):
        x = space.sample_point(rng, scale)
        y = space.sample_point(rng, scale)
        z = space.sample_point(rng, scale)
        dxy, dyx = space.distance(x, y), space.distance(y, x)
        dyz, dxz = space.distance(y, z), space.distance(x, z)
        worst["symmetry"] = max(worst["symmetry"], abs(dxy - dyx))
        worst["triangle"] = max(worst["triangle"], dxz - (dxy + dyz))
        worst["identity"] = max(worst["identity"], space.distance(x, x))
        worst["nonnegative"] = max(worst["nonnegative"], -min(dxy, dyz, dxz))
    worst["passed"] = all(worst[k] <= tol for k in
                          ("symmetry", "triangle", "identity", "nonnegative"))
    return worst
