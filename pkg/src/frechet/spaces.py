"""Concrete metric spaces: Euclidean, l_q vectors, metric spiders,
one-dimensional Wasserstein, Bures-Wasserstein covariance matrices, and
persistence diagrams with partial matching.

Each space supplies the distance, a point-equality predicate, candidate
generation for mean-set enumeration, JSON point codecs, and a random point
sampler used by the randomized axiom checks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import ConfigurationError, DiscreteMeasure, Space

__all__ = [
    "EuclideanSpace",
    "LqSequenceSpace",
    "SpiderSpace",
    "Measure1D",
    "Wasserstein1D",
    "BuresWassersteinSpace",
    "PersistenceDiagramSpace",
    "matrix_sqrt",
    "quantile_barycenter",
    "space_from_json",
    "space_to_json",
]


def _axis_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Inclusive grid lo, lo+step, ..., covering hi."""
    if step <= 0:
        raise ValueError("grid step must be positive")
    n = max(int(math.ceil((hi - lo) / step - 1e-12)), 0)
    return lo + step * np.arange(n + 1)


def _box_grid(lows: np.ndarray, highs: np.ndarray, step: float) -> list:
    axes = [_axis_grid(float(lo), float(hi), step) for lo, hi in zip(lows, highs)]
    return [np.array(pt, dtype=float) for pt in itertools.product(*axes)]


@dataclass(frozen=True)
class EuclideanSpace(Space):
    """R^dim with the Euclidean distance. Points are float vectors."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")

    def distance(self, x, y) -> float:
        return float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))

    def contains(self, x) -> bool:
        arr = np.asarray(x, dtype=float)
        return arr.shape == (self.dim,) and bool(np.all(np.isfinite(arr)))

    def points_equal(self, x, y, tol: float = 1e-9) -> bool:
        return self.distance(x, y) <= tol

    def pairwise_distances(self, xs, ys) -> np.ndarray:
        a = np.asarray([np.asarray(x, dtype=float) for x in xs])
        b = np.asarray([np.asarray(y, dtype=float) for y in ys])
        diff = a[:, None, :] - b[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=2))

    def candidates(self, mu: DiscreteMeasure, scheme: str = "support", *,
                   step: float | None = None, center=None, radius: float | None = None,
                   pad: float = 0.0, **kwargs) -> list:
        if scheme == "support":
            arr = np.asarray([np.asarray(y, dtype=float) for y in mu.support])
            uniq = np.unique(np.round(arr, 12), axis=0)
            return [row for row in uniq]
        if scheme == "grid":
            if step is None:
                raise ValueError("grid scheme needs a step")
            arr = np.asarray([np.asarray(y, dtype=float) for y in mu.support])
            lows, highs = arr.min(axis=0) - pad, arr.max(axis=0) + pad
            return _box_grid(lows, highs, step)
        if scheme == "ball-grid":
            if step is None or center is None or radius is None:
                raise ValueError("ball-grid scheme needs center, radius and step")
            c = np.asarray(center, dtype=float)
            return _box_grid(c - radius, c + radius, step)
        return super().candidates(mu, scheme)

    def sample_point(self, rng: np.random.Generator, scale: float = 1.0):
        return rng.normal(scale=scale, size=self.dim)

    def point_to_json(self, x):
        return [float(v) for v in np.asarray(x, dtype=float)]

    def point_from_json(self, obj):
        return np.asarray(obj, dtype=float)


@dataclass(frozen=True)
class LqSequenceSpace(Space):
    """Truncated l_q space: vectors of length ``truncation``, q in (1, inf).

    A finite-dimensional stand-in for the uniformly convex sequence
    spaces; the geometry (uniform convexity) survives truncation.
    """

    truncation: int
    q: float

    def __post_init__(self):
        if self.truncation < 1:
            raise ValueError("truncation must be positive")
        if not (1.0 < self.q < math.inf):
            raise ValueError("exponent q must lie strictly between 1 and infinity")

    def distance(self, x, y) -> float:
        diff = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        return float(np.sum(diff ** self.q) ** (1.0 / self.q))

    def contains(self, x) -> bool:
        arr = np.asarray(x, dtype=float)
        return arr.shape == (self.truncation,) and bool(np.all(np.isfinite(arr)))

    def pairwise_distances(self, xs, ys) -> np.ndarray:
        a = np.asarray([np.asarray(x, dtype=float) for x in xs])
        b = np.asarray([np.asarray(y, dtype=float) for y in ys])
        diff = np.abs(a[:, None, :] - b[None, :, :])
        return np.sum(diff ** self.q, axis=2) ** (1.0 / self.q)

    def candidates(self, mu, scheme="support", *, step=None, center=None,
                   radius=None, pad: float = 0.0, **kwargs) -> list:
        # Vector points; the box-grid construction is metric-agnostic.
        return EuclideanSpace.candidates(self, mu, scheme, step=step, center=center,
                                         radius=radius, pad=pad, **kwargs)

    def sample_point(self, rng, scale: float = 1.0):
        return rng.normal(scale=scale, size=self.truncation)

    def point_to_json(self, x):
        return [float(v) for v in np.asarray(x, dtype=float)]

    def point_from_json(self, obj):
        return np.asarray(obj, dtype=float)


@dataclass(frozen=True)
class SpiderSpace(Space):
    """K rays glued at a common center; a metric tree.

    Points are pairs (leg, t) with arc length t >= 0; every (leg, 0) is
    the same center point. Distance is |s - t| along a shared leg and
    s + t across legs, which makes the space CAT(0).
    """

    legs: int

    def __post_init__(self):
        if self.legs < 1:
            raise ValueError("need at least one leg")

    def distance(self, x, y) -> float:
        (i, s), (j, t) = x, y
        return abs(s - t) if i == j else s + t

    def contains(self, x) -> bool:
        try:
            leg, t = x
        except (TypeError, ValueError):
            return False
        return 0 <= int(leg) < self.legs and float(t) >= 0.0 and math.isfinite(float(t))

    def candidates(self, mu, scheme="support", *, step=None, center=None,
                   radius=None, pad: float = 0.0, **kwargs) -> list:
        if scheme == "support":
            return self.dedup(mu.support)
        if scheme == "grid":
            if step is None:
                raise ValueError("grid scheme needs a step")
            reach = max(t for _, t in mu.support) + pad
            pts: list = [(0, 0.0)]
            for leg in range(self.legs):
                n = int(math.ceil(reach / step - 1e-12))
                pts.extend((leg, step * k) for k in range(1, n + 1))
            return pts
        if scheme == "ball-grid":
            if step is None or center is None or radius is None:
                raise ValueError("ball-grid scheme needs center, radius and step")
            leg0, t0 = center
            pts = []
            lo, hi = max(t0 - radius, 0.0), t0 + radius
            for t in _axis_grid(lo, hi, step):
                pts.append((leg0, float(t)))
            spill = radius - t0
            if spill > 0:  # ball reaches through the center onto other legs
                for leg in range(self.legs):
                    if leg == leg0:
                        continue
                    for t in _axis_grid(0.0, spill, step):
                        pts.append((leg, float(t)))
            return self.dedup(pts)
        return super().candidates(mu, scheme)

    def sample_point(self, rng, scale: float = 1.0):
        return (int(rng.integers(self.legs)), float(abs(rng.normal(scale=scale))))

    def point_to_json(self, x):
        return [int(x[0]), float(x[1])]

    def point_from_json(self, obj):
        return (int(obj[0]), float(obj[1]))


class Measure1D:
    """Discrete probability measure on the real line, used as a point of
    the one-dimensional Wasserstein space.

    Atoms are kept sorted and duplicates merged, so equal measures compare
    equal structurally.
    """

    __slots__ = ("atoms", "weights", "_cum")

    def __init__(self, atoms: Sequence[float], weights: Sequence[float] | None = None):
        atoms = np.asarray(atoms, dtype=float)
        if atoms.ndim != 1 or atoms.size == 0:
            raise ValueError("a 1-D measure needs at least one atom")
        if weights is None:
            weights = np.full(atoms.size, 1.0 / atoms.size)
        else:
            weights = np.asarray(weights, dtype=float)
            if weights.shape != atoms.shape:
                raise ValueError("weights must align with atoms")
            if np.any(weights < -1e-15):
                raise ValueError("weights must be nonnegative")
            if abs(float(weights.sum()) - 1.0) > 1e-12:
                raise ValueError("weights must sum to 1 within 1e-12")
        order = np.argsort(atoms, kind="stable")
        atoms, weights = atoms[order], weights[order]
        # Merge numerically identical atoms so representations are canonical.
        keep_atoms: list[float] = []
        keep_w: list[float] = []
        for a, w in zip(atoms, weights):
            if keep_atoms and abs(a - keep_atoms[-1]) <= 1e-12:
                keep_w[-1] += w
            else:
                keep_atoms.append(float(a))
                keep_w.append(float(w))
        self.atoms = np.asarray(keep_atoms)
        self.weights = np.asarray(keep_w)
        self._cum = np.cumsum(self.weights)
        self._cum[-1] = 1.0

    def quantile(self, u) -> np.ndarray:
        """Left-continuous generalized inverse of the CDF."""
        u = np.asarray(u, dtype=float)
        idx = np.searchsorted(self._cum, np.clip(u, 0.0, 1.0), side="left")
        return self.atoms[np.minimum(idx, self.atoms.size - 1)]

    def cdf_breakpoints(self) -> np.ndarray:
        return self._cum

    def __repr__(self):
        return f"Measure1D(atoms={self.atoms.tolist()}, weights={self.weights.tolist()})"

    def __eq__(self, other):
        return (isinstance(other, Measure1D)
                and self.atoms.shape == other.atoms.shape
                and bool(np.allclose(self.atoms, other.atoms))
                and bool(np.allclose(self.weights, other.weights)))

    def __hash__(self):
        return hash((tuple(np.round(self.atoms, 12)), tuple(np.round(self.weights, 12))))


@dataclass(frozen=True)
class Wasserstein1D(Space):
    """Discrete measures on the line with the order-q transport distance.

    On the line the optimal coupling is the monotone one, so the distance
    is the L^q norm of the difference of quantile functions; both quantile
    functions are piecewise constant, making the integral exact.
    """

    q: float = 2.0

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("order q must be >= 1")

    def distance(self, x: Measure1D, y: Measure1D) -> float:
        levels = np.union1d(x.cdf_breakpoints(), y.cdf_breakpoints())
        levels = np.concatenate(([0.0], levels))
        widths = np.diff(levels)
        mids = (levels[:-1] + levels[1:]) / 2.0
        gap = np.abs(x.quantile(mids) - y.quantile(mids))
        return float(np.dot(widths, gap ** self.q) ** (1.0 / self.q))

    def contains(self, x) -> bool:
        return isinstance(x, Measure1D)

    def candidates(self, mu: DiscreteMeasure, scheme: str = "support", *,
                   step: float | None = None, center=None, radius=None,
                   pad: float = 0.0, atom_count: int = 2, levels: int = 256,
                   **kwargs) -> list:
        if scheme == "support":
            return self.dedup(mu.support)
        if scheme == "grid":
            # Equal-weight candidate measures with atoms drawn from a shared
            # 1-D grid spanning the member supports.
            if step is None:
                raise ValueError("grid scheme needs a step")
            lo = min(float(m.atoms.min()) for m in mu.support) - pad
            hi = max(float(m.atoms.max()) for m in mu.support) + pad
            axis = _axis_grid(lo, hi, step)
            return [Measure1D(list(combo))
                    for combo in itertools.combinations_with_replacement(axis, atom_count)]
        if scheme == "solver-seeded":
            seeds = self.dedup(mu.support)
            if self.q == 2.0:
                seeds.append(quantile_barycenter(self, mu, levels=levels))
            return self.dedup(seeds)
        return super().candidates(mu, scheme)

    def sample_point(self, rng, scale: float = 1.0) -> Measure1D:
        k = int(rng.integers(1, 4))
        atoms = rng.normal(scale=scale, size=k)
        w = rng.uniform(0.2, 1.0, size=k)
        w = w / w.sum()
        # Renormalize exactly; the constructor enforces a 1e-12 budget.
        w[-1] = 1.0 - float(w[:-1].sum())
        return Measure1D(atoms, w)

    def point_to_json(self, x: Measure1D):
        return {"atoms": x.atoms.tolist(), "weights": x.weights.tolist()}

    def point_from_json(self, obj) -> Measure1D:
        return Measure1D(obj["atoms"], obj.get("weights"))


def quantile_barycenter(space: Wasserstein1D, mu: DiscreteMeasure,
                        p: float = 2.0, levels: int = 256) -> Measure1D:
    """Weighted quantile average of the member measures.

    Exact order-2 mean in one dimension up to the quantile grid: members
    are resampled at ``levels`` midpoint quantile levels and averaged
    levelwise, which is exact whenever every member has equally weighted
    atoms whose count divides ``levels``.
    """
    if not isinstance(space, Wasserstein1D):
        raise ConfigurationError("quantile barycenter needs a 1-D Wasserstein space")
    if p != 2.0 or space.q != 2.0:
        raise ConfigurationError("quantile averaging is exact only for p = q = 2")
    if mu.space != space:
        raise ConfigurationError("measure is supported on a different space")
    u = (np.arange(levels) + 0.5) / levels
    avg = np.zeros(levels)
    for member, w in zip(mu.support, mu.weights):
        avg += w * member.quantile(u)
    return Measure1D(avg, np.full(levels, 1.0 / levels))


def matrix_sqrt(space: "BuresWassersteinSpace", sigma: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via spectral decomposition.

    Eigenvalues below 1e-12 times the largest one (including round-off
    negatives) are clamped to zero before rooting; fixed-point iterations
    routinely graze the PSD boundary.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (space.dim, space.dim):
        raise ValueError("matrix shape does not match the space dimension")
    if not np.allclose(sigma, sigma.T, atol=1e-10):
        raise ValueError("matrix must be symmetric")
    lam, vec = np.linalg.eigh((sigma + sigma.T) / 2.0)
    top = float(lam[-1])
    cutoff = 1e-12 * top if top > 0 else 0.0
    lam = np.where(lam > cutoff, lam, 0.0)
    return (vec * np.sqrt(lam)) @ vec.T


@dataclass(frozen=True)
class BuresWassersteinSpace(Space):
    """Symmetric PSD matrices with the Bures-Wasserstein distance.

    The squared distance is tr A + tr B - 2 tr (A^{1/2} B A^{1/2})^{1/2};
    for commuting pairs it reduces to the Euclidean distance between
    eigenvalue square roots.
    """

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")

    def distance(self, x, y) -> float:
        a = np.asarray(x, dtype=float)
        b = np.asarray(y, dtype=float)
        if np.array_equal(a, b):
            return 0.0  # the general formula would take sqrt of round-off noise
        root = matrix_sqrt(self, a)
        inner = root @ b @ root
        lam = np.linalg.eigvalsh((inner + inner.T) / 2.0)
        cross = float(np.sum(np.sqrt(np.clip(lam, 0.0, None))))
        sq = float(np.trace(a) + np.trace(b)) - 2.0 * cross
        return math.sqrt(max(sq, 0.0))

    def contains(self, x) -> bool:
        arr = np.asarray(x, dtype=float)
        if arr.shape != (self.dim, self.dim) or not np.all(np.isfinite(arr)):
            return False
        if not np.allclose(arr, arr.T, atol=1e-10):
            return False
        lam = np.linalg.eigvalsh((arr + arr.T) / 2.0)
        return bool(lam[0] >= -1e-10 * max(1.0, abs(lam[-1])))

    def candidates(self, mu, scheme="support", *, step=None, center=None,
                   radius=None, pad: float = 0.0, **kwargs) -> list:
        if scheme == "support":
            return self.dedup(mu.support)
        if scheme in ("grid", "ball-grid"):
            if self.dim > 2:
                raise ConfigurationError("matrix grids are only feasible for dim <= 2")
            if step is None:
                raise ValueError("grid schemes need a step")
            if scheme == "ball-grid":
                if center is None or radius is None:
                    raise ValueError("ball-grid scheme needs center, radius and step")
                c = np.asarray(center, dtype=float)
                lows, highs = c - radius, c + radius
            else:
                arr = np.asarray([np.asarray(y, dtype=float) for y in mu.support])
                lows = arr.min(axis=0) - pad
                highs = arr.max(axis=0) + pad
            if self.dim == 1:
                lo = max(float(lows[0, 0]), 0.0)
                return [np.array([[float(v)]]) for v in _axis_grid(lo, float(highs[0, 0]), step)]
            out = []
            for a in _axis_grid(max(float(lows[0, 0]), 0.0), float(highs[0, 0]), step):
                for c2 in _axis_grid(max(float(lows[1, 1]), 0.0), float(highs[1, 1]), step):
                    bmax = math.sqrt(max(a * c2, 0.0))
                    for b in _axis_grid(float(lows[0, 1]), float(highs[0, 1]), step):
                        if abs(b) <= bmax + 1e-12:
                            out.append(np.array([[a, b], [b, c2]]))
            return out
        return super().candidates(mu, scheme)

    def sample_point(self, rng, scale: float = 1.0):
        a = rng.normal(scale=scale, size=(self.dim, self.dim))
        return a @ a.T / self.dim + 0.05 * scale * np.eye(self.dim)

    def point_to_json(self, x):
        return [float(v) for v in np.asarray(x, dtype=float).reshape(-1)]

    def point_from_json(self, obj):
        return np.asarray(obj, dtype=float).reshape(self.dim, self.dim)


def _diag_gap(point: tuple[float, float]) -> float:
    """Euclidean distance from a birth/death pair to the diagonal."""
    b, d = point
    return (d - b) / math.sqrt(2.0)


@dataclass(frozen=True)
class PersistenceDiagramSpace(Space):
    """Finite multisets of birth/death pairs with the order-q matching cost.

    Points of one diagram may match points of the other or their own
    projection onto the diagonal; the cost is the q-th root of the summed
    q-th powers of Euclidean ground distances. Unmatched mass therefore
    pays its distance to the diagonal.
    """

    q: float = 2.0

    def __post_init__(self):
        if not (1.0 < self.q < math.inf):
            raise ValueError("order q must lie strictly between 1 and infinity")

    def distance(self, x, y) -> float:
        p1 = [tuple(map(float, pt)) for pt in x]
        p2 = [tuple(map(float, pt)) for pt in y]
        n, m = len(p1), len(p2)
        if n == 0 and m == 0:
            return 0.0
        size = n + m
        cost = np.full((size, size), np.inf)
        for i, a in enumerate(p1):
            for j, b in enumerate(p2):
                cost[i, j] = math.hypot(a[0] - b[0], a[1] - b[1]) ** self.q
            cost[i, m + i] = _diag_gap(a) ** self.q
        for j, b in enumerate(p2):
            cost[n + j, j] = _diag_gap(b) ** self.q
        cost[n:, m:] = 0.0  # diagonal-to-diagonal pairings are free
        rows, cols = linear_sum_assignment(cost)
        return float(cost[rows, cols].sum() ** (1.0 / self.q))

    def contains(self, x) -> bool:
        try:
            pts = [tuple(map(float, pt)) for pt in x]
        except (TypeError, ValueError):
            return False
        return all(b < d and math.isfinite(b) and math.isfinite(d) for b, d in pts)

    def candidates(self, mu, scheme="support", **kwargs) -> list:
        if scheme == "support":
            return self.dedup(mu.support)
        return super().candidates(mu, scheme)

    def sample_point(self, rng, scale: float = 1.0):
        k = int(rng.integers(0, 5))
        pts = []
        for _ in range(k):
            b = float(rng.uniform(0.0, 2.0 * scale))
            pts.append((b, b + float(rng.uniform(0.05, 2.0 * scale))))
        return tuple(pts)

    def point_to_json(self, x):
        return [[float(b), float(d)] for b, d in x]

    def point_from_json(self, obj):
        return tuple((float(b), float(d)) for b, d in obj)


# ---------------------------------------------------------------------------
# JSON space descriptions (used by experiment configs and the CLI).
# ---------------------------------------------------------------------------

_SPACE_BUILDERS = {
    "euclidean": lambda spec: EuclideanSpace(dim=int(spec["dim"])),
    "lq": lambda spec: LqSequenceSpace(truncation=int(spec["truncation"]), q=float(spec["q"])),
    "spider": lambda spec: SpiderSpace(legs=int(spec["legs"])),
    "wasserstein1d": lambda spec: Wasserstein1D(q=float(spec.get("q", 2.0))),
    "bures-wasserstein": lambda spec: BuresWassersteinSpace(dim=int(spec["dim"])),
    "persistence-diagram": lambda spec: PersistenceDiagramSpace(q=float(spec.get("q", 2.0))),
}


def space_from_json(spec: dict) -> Space:
    kind = spec.get("type")
    if kind not in _SPACE_BUILDERS:
        raise ConfigurationError(f"unknown space type {kind!r}")
    return _SPACE_BUILDERS[kind](spec)


def space_to_json(space: Space) -> dict:
    if isinstance(space, EuclideanSpace):
        return {"type": "euclidean", "dim": space.dim}
    if isinstance(space, LqSequenceSpace):
        return {"type": "lq", "truncation": space.truncation, "q": space.q}
    if isinstance(space, SpiderSpace):
        return {"type": "spider", "legs": space.legs}
    if isinstance(space, Wasserstein1D):
        return {"type": "wasserstein1d", "q": space.q}
    if isinstance(space, BuresWassersteinSpace):
        return {"type": "bures-wasserstein", "dim": space.dim}
    if isinstance(space, PersistenceDiagramSpace):
        return {"type": "persistence-diagram", "q": space.q}
    raise ConfigurationError(f"space {type(space).__name__} has no JSON form")
