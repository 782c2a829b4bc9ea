"""Space-building operations: l_q products, quotients by finite isometric
group actions, and soft-quotient regularization by a group with a length
function.

Only finite groups are supported; compact groups are approximated by
finite subgroups of configurable order, which keeps the minimization over
group elements exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import ConfigurationError, DiscreteMeasure, Space
from .spaces import EuclideanSpace

__all__ = [
    "GroupSpec",
    "ProductSpace",
    "QuotientSpace",
    "RegularizedSpace",
    "orbit",
    "sign_flip_group",
    "cyclic_rotation_group",
    "planar_loop_group",
    "loop_shape_space",
    "group_from_json",
]


@dataclass(frozen=True, eq=False)
class GroupSpec:
    """Finite group acting on a space, given by explicit tables.

    ``action(g, x)`` applies element ``g`` to a point. ``length`` is an
    optional map g -> rho(g, e) >= 0 with rho(e, e) = 0, needed by the
    regularization construction. The action is expected to be isometric;
    ``validate`` checks the table axioms, and the isometry itself is
    exercised by the randomized suites.
    """

    elements: tuple
    identity: object
    action: Callable
    compose: Mapping
    inverse: Mapping
    length: Mapping | None = None

    def act(self, g, x):
        return self.action(g, x)

    def validate(self) -> None:
        elems = set(self.elements)
        if self.identity not in elems:
            raise ConfigurationError("identity is not listed among the elements")
        for a in self.elements:
            if self.inverse[a] not in elems:
                raise ConfigurationError("inverse table leaves the group")
            if self.compose[(a, self.identity)] != a or self.compose[(self.identity, a)] != a:
                raise ConfigurationError("identity does not act neutrally in the table")
            if (self.compose[(a, self.inverse[a])] != self.identity
                    or self.compose[(self.inverse[a], a)] != self.identity):
                raise ConfigurationError("inverse table is inconsistent")
            for b in self.elements:
                if self.compose[(a, b)] not in elems:
                    raise ConfigurationError("composition table leaves the group")
        for a in self.elements:
            for b in self.elements:
                for c in self.elements:
                    if (self.compose[(self.compose[(a, b)], c)]
                            != self.compose[(a, self.compose[(b, c)])]):
                        raise ConfigurationError("composition table is not associative")
        if self.length is not None:
            if abs(float(self.length[self.identity])) > 1e-12:
                raise ConfigurationError("length of the identity must be zero")
            if any(float(self.length[g]) < 0 for g in self.elements):
                raise ConfigurationError("length values must be nonnegative")


def orbit(group: GroupSpec, x, space: Space | None = None) -> list:
    """All translates g.x, deduplicated by point equality when a space is given."""
    pts = [group.act(g, x) for g in group.elements]
    if space is None:
        return pts
    return space.dedup(pts)


@dataclass(frozen=True)
class ProductSpace(Space):
    """Two component spaces combined with an l_q metric on pairs."""

    left: Space
    right: Space
    q: float = 2.0

    def __post_init__(self):
        if not (1.0 <= self.q < math.inf):
            raise ValueError("product exponent q must lie in [1, inf)")

    def distance(self, x, y) -> float:
        d1 = self.left.distance(x[0], y[0])
        d2 = self.right.distance(x[1], y[1])
        return float((d1 ** self.q + d2 ** self.q) ** (1.0 / self.q))

    def contains(self, x) -> bool:
        try:
            a, b = x
        except (TypeError, ValueError):
            return False
        return self.left.contains(a) and self.right.contains(b)

    def points_equal(self, x, y, tol: float = 1e-9) -> bool:
        return (self.left.points_equal(x[0], y[0], tol)
                and self.right.points_equal(x[1], y[1], tol))

    def pairwise_distances(self, xs, ys) -> np.ndarray:
        d1 = self.left.pairwise_distances([x[0] for x in xs], [y[0] for y in ys])
        d2 = self.right.pairwise_distances([x[1] for x in xs], [y[1] for y in ys])
        return (d1 ** self.q + d2 ** self.q) ** (1.0 / self.q)

    def candidates(self, mu, scheme="support", *, center=None, **kwargs) -> list:
        if scheme == "support":
            return self.dedup(mu.support)
        # Cartesian product of component candidates, built from the
        # component marginals of the support. A pair-valued ball-grid
        # center splits into its components.
        left_mu = DiscreteMeasure.from_weights(
            self.left, [x[0] for x in mu.support], mu.weights)
        right_mu = DiscreteMeasure.from_weights(
            self.right, [x[1] for x in mu.support], mu.weights)
        left_kw = dict(kwargs)
        right_kw = dict(kwargs)
        if center is not None:
            left_kw["center"], right_kw["center"] = center[0], center[1]
        lc = self.left.candidates(left_mu, scheme, **left_kw)
        rc = self.right.candidates(right_mu, scheme, **right_kw)
        return [(a, b) for a in lc for b in rc]

    def sample_point(self, rng, scale: float = 1.0):
        return (self.left.sample_point(rng, scale), self.right.sample_point(rng, scale))

    def point_to_json(self, x):
        return [self.left.point_to_json(x[0]), self.right.point_to_json(x[1])]

    def point_from_json(self, obj):
        return (self.left.point_from_json(obj[0]), self.right.point_from_json(obj[1]))


@dataclass(frozen=True, eq=False)
class QuotientSpace(Space):
    """Base points treated as orbit representatives under a finite group.

    The distance is the minimum base distance over all relative
    alignments, d(x, g.x'); for an isometric action this is well defined
    on orbits and independent of the chosen representatives.
    """

    base: Space
    group: GroupSpec

    def distance(self, x, y) -> float:
        return min(self.base.distance(x, self.group.act(g, y)) for g in self.group.elements)

    def contains(self, x) -> bool:
        return self.base.contains(x)

    def candidates(self, mu, scheme="support", **kwargs) -> list:
        base_mu = DiscreteMeasure.from_weights(self.base, mu.support, mu.weights)
        raw = self.base.candidates(base_mu, scheme, **kwargs)
        return self.dedup(raw)  # orbit-level deduplication

    def sample_point(self, rng, scale: float = 1.0):
        return self.base.sample_point(rng, scale)

    def point_to_json(self, x):
        return self.base.point_to_json(x)

    def point_from_json(self, obj):
        return self.base.point_from_json(obj)


@dataclass(frozen=True, eq=False)
class RegularizedSpace(Space):
    """Soft quotient: alignment is allowed but pays the element's length.

    d(x, x') = min_g sqrt(rho(g, e)^2 / lam^2 + d_base(x, g.x')^2).
    Small ``lam`` makes alignment expensive (the metric approaches the
    base one); large ``lam`` makes it free (the metric approaches the
    quotient one).
    """

    base: Space
    group: GroupSpec
    lam: float = 1.0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("scale lam must be positive")
        if self.group.length is None:
            raise ConfigurationError("regularization needs a group length function")

    def distance(self, x, y) -> float:
        best = math.inf
        inv_lam2 = 1.0 / (self.lam * self.lam)
        for g in self.group.elements:
            rho = float(self.group.length[g])
            d = self.base.distance(x, self.group.act(g, y))
            best = min(best, math.sqrt(inv_lam2 * rho * rho + d * d))
        return best

    def contains(self, x) -> bool:
        return self.base.contains(x)

    def candidates(self, mu, scheme="support", **kwargs) -> list:
        base_mu = DiscreteMeasure.from_weights(self.base, mu.support, mu.weights)
        return self.base.candidates(base_mu, scheme, **kwargs)

    def sample_point(self, rng, scale: float = 1.0):
        return self.base.sample_point(rng, scale)

    def point_to_json(self, x):
        return self.base.point_to_json(x)

    def point_from_json(self, obj):
        return self.base.point_from_json(obj)


# ---------------------------------------------------------------------------
# Group builders.
# ---------------------------------------------------------------------------

def _tables_from_matrices(labels: Sequence, matrices: Sequence[np.ndarray]):
    """Derive compose/inverse tables by multiplying matrices and matching."""
    mats = [np.asarray(m, dtype=float) for m in matrices]

    def find(m):
        for lab, cand in zip(labels, mats):
            if np.allclose(m, cand, atol=1e-9):
                return lab
        raise ConfigurationError("matrix action data is not closed under composition")

    compose = {(a, b): find(mats[i] @ mats[j])
               for i, a in enumerate(labels) for j, b in enumerate(labels)}
    inverse = {a: find(np.linalg.inv(mats[i])) for i, a in enumerate(labels)}
    identity = find(np.eye(mats[0].shape[0]))
    return compose, inverse, identity


def matrix_group(labels: Sequence, matrices: Sequence[np.ndarray],
                 length: Mapping | None = None) -> GroupSpec:
    """Group of matrices acting on vectors by multiplication."""
    mats = {lab: np.asarray(m, dtype=float) for lab, m in zip(labels, matrices)}
    compose, inverse, identity = _tables_from_matrices(list(labels), list(matrices))

    def action(g, x):
        return mats[g] @ np.asarray(x, dtype=float)

    return GroupSpec(tuple(labels), identity, action, compose, inverse, length)


def sign_flip_group(dim: int = 1) -> GroupSpec:
    """Two-element group {id, x -> -x} on R^dim, with length 1 for the flip."""
    mats = [np.eye(dim), -np.eye(dim)]
    return matrix_group(["e", "flip"], mats, length={"e": 0.0, "flip": 1.0})


def cyclic_rotation_group(order: int) -> GroupSpec:
    """Planar rotations by multiples of 2*pi/order; length is |angle|.

    A finite stand-in for the rotation circle: the length of a rotation is
    the absolute angle wrapped to [-pi, pi], matching the log-norm length
    on the full rotation group.
    """
    if order < 1:
        raise ValueError("order must be positive")
    labels, mats, length = [], [], {}
    for k in range(order):
        theta = 2.0 * math.pi * k / order
        labels.append(f"rot{k}")
        mats.append(np.array([[math.cos(theta), -math.sin(theta)],
                              [math.sin(theta), math.cos(theta)]]))
        wrapped = math.atan2(math.sin(theta), math.cos(theta))
        length[f"rot{k}"] = abs(wrapped)
    return matrix_group(labels, mats, length)


def planar_loop_group(n_samples: int, rotations: int = 4) -> GroupSpec:
    """Cyclic shifts of N planar samples combined with a finite rotation
    subgroup, acting on R^(2N).

    Elements are pairs (shift, rotation index); the length adds the
    shift's fraction of a full turn and the rotation angle in quadrature.
    """
    if n_samples < 1 or rotations < 1:
        raise ValueError("need at least one sample and one rotation")
    rot = cyclic_rotation_group(rotations)
    elements = tuple(itertools.product(range(n_samples), range(rotations)))
    identity = (0, 0)

    def action(g, x):
        s, r = g
        pts = np.asarray(x, dtype=float).reshape(n_samples, 2)
        theta = 2.0 * math.pi * r / rotations
        m = np.array([[math.cos(theta), -math.sin(theta)],
                      [math.sin(theta), math.cos(theta)]])
        return (np.roll(pts, -s, axis=0) @ m.T).reshape(-1)

    compose = {((s1, r1), (s2, r2)): ((s1 + s2) % n_samples, (r1 + r2) % rotations)
               for s1, r1 in elements for s2, r2 in elements}
    inverse = {(s, r): ((-s) % n_samples, (-r) % rotations) for s, r in elements}
    length = {}
    for s, r in elements:
        shift_frac = min(s, n_samples - s) / n_samples * 2.0 * math.pi
        length[(s, r)] = math.hypot(shift_frac, rot.length[f"rot{r}"])
    return GroupSpec(elements, identity, action, compose, inverse, length)


def loop_shape_space(n_samples: int, rotations: int = 4) -> QuotientSpace:
    """Desk-scale closed-curve shape space: sampled planar loops modulo
    cyclic relabeling and finite rotations."""
    base = EuclideanSpace(dim=2 * n_samples)
    return QuotientSpace(base, planar_loop_group(n_samples, rotations))


def group_from_json(spec: dict) -> GroupSpec:
    """Build a group from a JSON description.

    Supported action kinds: ``matrix`` (label -> row-major matrix) and
    ``permutation`` (label -> index permutation of vector coordinates).
    An optional ``length`` table maps labels to lengths.
    """
    kind = spec.get("kind")
    labels = list(spec["elements"])
    length = spec.get("length")
    if length is not None:
        length = {lab: float(v) for lab, v in length.items()}
    if kind == "matrix":
        dim = int(spec["dim"])
        mats = [np.asarray(spec["matrices"][str(lab)], dtype=float).reshape(dim, dim)
                for lab in labels]
        return matrix_group(labels, mats, length)
    if kind == "permutation":
        perms = {lab: list(map(int, spec["permutations"][str(lab)])) for lab in labels}
        n = len(next(iter(perms.values())))
        mats = []
        for lab in labels:
            m = np.zeros((n, n))
            for i, j in enumerate(perms[lab]):
                m[j, i] = 1.0
            mats.append(m)
        return matrix_group(labels, mats, length)
    raise ConfigurationError(f"unknown group action kind {kind!r}")
