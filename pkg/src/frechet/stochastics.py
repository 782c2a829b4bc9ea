"""Random data generation and probabilistic experiments: laws of large
numbers for mean sets, a single-trajectory ergodic check, and large
deviations with the relative-entropy rate.

All randomness flows through inverse-CDF transforms of one seeded uniform
stream, so every experiment is bit-reproducible given (seed, config) and
replications can run concurrently on derived seeds without changing the
merged output.
"""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import ndtri
from scipy.stats import binom

from .core import (
    ConfigurationError,
    DiscreteMeasure,
    FrechetConfig,
    MeanSetApprox,
    Space,
    frechet_functional,
    moment,
)
from .convergence import ConvergenceReport, one_sided_hausdorff
from .solvers import (
    SolverConfig,
    bw_barycenter,
    euclidean_pmean,
    grid_oracle,
    weiszfeld_median,
)
from .spaces import EuclideanSpace, quantile_barycenter

__all__ = [
    "SamplerSpec",
    "ExperimentConfig",
    "LdpResult",
    "ExperimentReport",
    "sample_empirical",
    "slln_experiment",
    "ergodic_experiment",
    "relative_entropy",
    "ldp_rate_function",
    "ldp_experiment",
    "sampler_from_json",
]

_IID_DISTRIBUTIONS = ("normal", "uniform", "pareto", "cauchy", "finite")


@dataclass(frozen=True)
class SamplerSpec:
    """Seeded source of points in a target space.

    ``kind`` is "iid" with a named distribution or "markov-chain" with a
    row-stochastic kernel over finitely many states. ``embed`` maps raw
    draws (reals, or state indices for chains) to space points; the
    default wraps reals as 1-D vectors.
    """

    kind: str
    seed: int = 0
    distribution: str | None = None
    params: tuple = ()
    atoms: tuple = ()
    probs: tuple = ()
    kernel: tuple = ()
    states: tuple = ()
    initial_state: int = 0
    embed: Callable | None = None

    def __post_init__(self):
        if self.kind == "iid":
            if self.distribution not in _IID_DISTRIBUTIONS:
                raise ValueError(f"unknown distribution {self.distribution!r}")
            if self.distribution == "finite":
                p = np.asarray(self.probs, dtype=float)
                if len(self.atoms) == 0 or p.shape != (len(self.atoms),):
                    raise ValueError("finite sampler needs aligned atoms and probs")
                if np.any(p < 0) or abs(float(p.sum()) - 1.0) > 1e-12:
                    raise ValueError("finite sampler probs must form a distribution")
            else:
                self._validate_params()
        elif self.kind == "markov-chain":
            k = np.asarray(self.kernel, dtype=float)
            m = len(self.states)
            if m == 0 or k.shape != (m, m):
                raise ValueError("markov sampler needs a square kernel over its states")
            if np.any(k < 0) or np.any(np.abs(k.sum(axis=1) - 1.0) > 1e-12):
                raise ValueError("kernel rows must sum to 1")
            if not (0 <= self.initial_state < m):
                raise ValueError("initial state out of range")
        else:
            raise ValueError(f"unknown sampler kind {self.kind!r}")

    def _validate_params(self):
        p = self.params
        if self.distribution == "normal":
            if len(p) != 2 or p[1] <= 0:
                raise ValueError("normal(m, s) needs s > 0")
        elif self.distribution == "uniform":
            if len(p) != 2 or p[1] <= p[0]:
                raise ValueError("uniform(a, b) needs a < b")
        elif self.distribution == "pareto":
            if len(p) != 2 or p[0] <= 0 or p[1] <= 0:
                raise ValueError("pareto(alpha, x_min) needs positive parameters")
        elif self.distribution == "cauchy":
            if len(p) != 2 or p[1] <= 0:
                raise ValueError("cauchy(loc, scale) needs scale > 0")

    def with_seed(self, seed: int) -> "SamplerSpec":
        return replace(self, seed=seed)

    def _embed(self, value):
        if self.embed is not None:
            return self.embed(value)
        return np.array([float(value)])

    def _draw_iid(self, rng: np.random.Generator, n: int) -> list:
        u = rng.uniform(size=n)
        dist, p = self.distribution, self.params
        if dist == "normal":
            vals = p[0] + p[1] * ndtri(u)
        elif dist == "uniform":
            vals = p[0] + (p[1] - p[0]) * u
        elif dist == "pareto":
            vals = p[1] * (1.0 - u) ** (-1.0 / p[0])
        elif dist == "cauchy":
            vals = p[0] + p[1] * np.tan(math.pi * (u - 0.5))
        else:  # finite
            cum = np.cumsum(self.probs)
            idx = np.searchsorted(cum, u, side="right")
            idx = np.minimum(idx, len(self.atoms) - 1)
            return [self._embed(self.atoms[i]) for i in idx]
        return [self._embed(v) for v in vals]

    def _draw_chain(self, rng: np.random.Generator, n: int) -> list:
        kernel = np.asarray(self.kernel, dtype=float)
        cum = np.cumsum(kernel, axis=1)
        u = rng.uniform(size=n)
        state = self.initial_state
        out = []
        for i in range(n):
            out.append(self._embed(self.states[state]))
            state = int(np.searchsorted(cum[state], u[i], side="right"))
            state = min(state, len(self.states) - 1)
        return out

    def draw(self, n: int) -> list:
        """First n points of the stream; a prefix of any longer draw."""
        rng = np.random.default_rng(self.seed)
        if self.kind == "iid":
            return self._draw_iid(rng, n)
        return self._draw_chain(rng, n)

    def stationary_law(self) -> np.ndarray:
        """Stationary distribution of the chain; requires irreducibility."""
        if self.kind != "markov-chain":
            raise ConfigurationError("stationary law is a chain property")
        kernel = np.asarray(self.kernel, dtype=float)
        if not _is_irreducible(kernel):
            raise ConfigurationError("chain is reducible; trajectory averages "
                                     "need not converge to a stationary law")
        m = kernel.shape[0]
        a = np.vstack([kernel.T - np.eye(m), np.ones(m)])
        b = np.concatenate([np.zeros(m), [1.0]])
        pi, *_ = np.linalg.lstsq(a, b, rcond=None)
        return np.clip(pi, 0.0, None) / np.clip(pi, 0.0, None).sum()


def _is_irreducible(kernel: np.ndarray) -> bool:
    m = kernel.shape[0]
    reach = kernel > 0
    closure = reach | np.eye(m, dtype=bool)
    for _ in range(m):
        closure = closure | (closure @ closure)
    return bool(np.all(closure) and np.all(closure.T))


def sample_empirical(sampler: SamplerSpec, n: int, space: Space | None = None) -> DiscreteMeasure:
    """Uniform-weight empirical measure on the first n stream points."""
    if n < 1:
        raise ValueError("need at least one sample")
    pts = sampler.draw(n)
    target = space if space is not None else EuclideanSpace(dim=len(pts[0]))
    return DiscreteMeasure.uniform(target, pts)


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative knobs shared by the convergence experiments."""

    solver: str = "grid"
    epsilon: float = 0.0
    grid_step: float = 0.01
    grid_pad: float = 1.0
    target_points: tuple = ()
    target_resolution: float = 0.0
    threshold: float | None = None
    max_workers: int = 1
    solver_config: SolverConfig = field(default_factory=SolverConfig)


def _solve_mean_set(space: Space, mu: DiscreteMeasure, p: float,
                    config: ExperimentConfig) -> MeanSetApprox:
    """Dispatch a mean-set computation to the configured solver."""
    fc = FrechetConfig(p=p, epsilon=config.epsilon)
    name = config.solver
    if name == "grid":
        grid = space.candidates(mu, "grid", step=config.grid_step, pad=config.grid_pad)
        return grid_oracle(space, mu, fc, grid, resolution=config.grid_step)
    if name == "weiszfeld":
        pt = weiszfeld_median(space, mu, config.solver_config)
    elif name == "subgradient":
        pt = euclidean_pmean(space, mu, p, config.solver_config)
    elif name == "quantile":
        pt = quantile_barycenter(space, mu, p=p)
    elif name == "bw-fixed-point":
        pt = bw_barycenter(space, mu, config.solver_config)
    else:
        raise ConfigurationError(f"unknown solver {name!r}")
    value = frechet_functional(space, mu, pt, mu.support[0], p)
    res = max(config.solver_config.step_tolerance, 1e-12)
    return MeanSetApprox((pt,), res, value)


def _replication_map(fn: Callable, count: int, max_workers: int) -> list:
    """Run fn(0..count-1), possibly concurrently; order fixed by index."""
    if max_workers <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=min(max_workers, count)) as pool:
        return list(pool.map(fn, range(count)))


def slln_experiment(space: Space, sampler: SamplerSpec, p: float,
                    n_grid: Sequence[int], replications: int,
                    config: ExperimentConfig) -> ConvergenceReport:
    """Empirical mean sets against an analytic target as samples grow.

    For every n and replication the mean-set approximation of the
    empirical measure is computed and its one-sided Hausdorff distance
    into the declared target set recorded; the report keeps the worst
    replication per n. Solver failures are recorded per cell rather than
    aborting the sweep.
    """
    if not config.target_points:
        raise ConfigurationError("the experiment needs a target mean set")
    target = list(config.target_points)
    n_grid = list(n_grid)
    origin = target[0]

    def one_rep(rep: int) -> tuple[list[float], list[float], list[float]]:
        local = sampler.with_seed(_derived_seed(sampler.seed, rep))
        dvec_by_n, moment_by_n, failures = [], [], []
        for n in n_grid:
            mu = sample_empirical(local, n, space)
            try:
                band = _solve_mean_set(space, mu, p, config)
                dvec_by_n.append(one_sided_hausdorff(space, band.points, target))
                failures.append(0.0)
            except Exception:
                dvec_by_n.append(float("nan"))
                failures.append(1.0)
            moment_by_n.append(moment(space, mu, max(p - 1.0, 0.0), origin))
        return dvec_by_n, moment_by_n, failures

    t0 = time.perf_counter()
    per_rep = _replication_map(one_rep, replications, config.max_workers)
    elapsed = time.perf_counter() - t0

    dvec_max, moment_mean, failure_count = [], [], 0
    for j, n in enumerate(n_grid):
        cells = [rep[0][j] for rep in per_rep]
        failure_count += int(sum(rep[2][j] for rep in per_rep))
        finite = [v for v in cells if not math.isnan(v)]
        dvec_max.append(max(finite) if finite else float("nan"))
        moment_mean.append(float(np.mean([rep[1][j] for rep in per_rep])))

    verdicts = {"solver_failures": failure_count}
    if config.threshold is not None:
        verdicts["final_below_threshold"] = bool(dvec_max[-1] < config.threshold)
    return ConvergenceReport(n_grid, dvec_max, moment_mean,
                             runtimes=[elapsed / max(len(n_grid), 1)] * len(n_grid),
                             verdicts=verdicts, seed=sampler.seed)


def _derived_seed(seed: int, rep: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(rep,)).generate_state(1)[0])


def ergodic_experiment(space: Space, markov: SamplerSpec, p: float,
                       n_grid: Sequence[int], config: ExperimentConfig) -> ConvergenceReport:
    """Mean sets of growing prefixes of one chain trajectory.

    The empirical measure over the window {0, ..., n-1} of a single
    trajectory is compared against the mean set of the stationary law;
    for an irreducible chain the distance must vanish. The target defaults
    to the stationary average of the embedded states when p = 2 on a
    Euclidean space, otherwise it must be supplied.
    """
    if markov.kind != "markov-chain":
        raise ConfigurationError("the ergodic experiment needs a markov-chain sampler")
    pi = markov.stationary_law()
    if config.target_points:
        target = list(config.target_points)
    elif p == 2.0 and isinstance(space, EuclideanSpace):
        pts = [markov._embed(s) for s in markov.states]
        target = [sum(w * np.asarray(pt, dtype=float) for w, pt in zip(pi, pts))]
    else:
        raise ConfigurationError("supply target_points unless p = 2 on a Euclidean space")

    n_grid = list(n_grid)
    trajectory = markov.draw(max(n_grid))
    dvecs, moments_, runtimes = [], [], []
    origin = target[0]
    for n in n_grid:
        t0 = time.perf_counter()
        mu = DiscreteMeasure.uniform(space, trajectory[:n])
        band = _solve_mean_set(space, mu, p, config)
        dvecs.append(one_sided_hausdorff(space, band.points, target))
        moments_.append(moment(space, mu, max(p - 1.0, 0.0), origin))
        runtimes.append(time.perf_counter() - t0)
    verdicts = {}
    if config.threshold is not None:
        verdicts["final_below_threshold"] = bool(dvecs[-1] < config.threshold)
    return ConvergenceReport(n_grid, dvecs, moments_, runtimes=runtimes,
                             verdicts=verdicts, seed=markov.seed)


def relative_entropy(nu: DiscreteMeasure, mu: DiscreteMeasure) -> float:
    """sum nu_i log(nu_i / mu_i), with 0 log 0 = 0.

    Returns ``math.inf`` when nu places mass where mu has none; infinity
    is a value here, not an error.
    """
    space = nu.space
    mu_pts, mu_w = _aggregate(mu)
    total = 0.0
    for pt, w in zip(*_aggregate(nu)):
        if w <= 0.0:
            continue
        match = next((mw for mp, mw in zip(mu_pts, mu_w)
                      if space.points_equal(pt, mp)), 0.0)
        if match <= 0.0:
            return math.inf
        total += w * math.log(w / match)
    return max(total, 0.0)


def _aggregate(mu: DiscreteMeasure) -> tuple[list, list]:
    """Distinct support points with summed weights."""
    pts: list = []
    ws: list = []
    for pt, w in zip(mu.support, mu.weights):
        for i, q in enumerate(pts):
            if mu.space.points_equal(pt, q):
                ws[i] += float(w)
                break
        else:
            pts.append(pt)
            ws.append(float(w))
    return pts, ws


def _simplex_grid(k: int, step: float):
    """Weight vectors on the k-simplex with coordinates on a step lattice."""
    m = int(round(1.0 / step))
    if abs(m * step - 1.0) > 1e-9:
        raise ValueError("simplex step must divide 1")
    for cuts in itertools.combinations(range(m + k - 1), k - 1):
        prev = -1
        counts = []
        for c in cuts:
            counts.append(c - prev - 1)
            prev = c
        counts.append(m + k - 2 - prev)
        yield np.asarray(counts, dtype=float) / m


def _mean_set_on_support(space: Space, atoms: list, weights: np.ndarray,
                         p: float) -> list:
    """Exact argmin band of the mean objective restricted to the atoms."""
    mu = DiscreteMeasure.from_weights(space, atoms, weights)
    band = grid_oracle(space, mu, FrechetConfig(p=p), atoms, resolution=1e-12)
    return list(band.points)


def ldp_rate_function(space: Space, mu: DiscreteMeasure, p: float, target_x,
                      simplex_step: float = 1e-3) -> float:
    """Entropy projection rate at a point: the cheapest reweighting of the
    support whose mean set is exactly the target.

    Minimizes the relative entropy against ``mu`` over lattice measures on
    mu's support whose mean set (restricted to that support) is precisely
    ``{target_x}``. Returns ``math.inf`` when no lattice measure achieves
    the target.
    """
    atoms, base_w = _aggregate(mu)
    if len(atoms) > 4:
        raise ConfigurationError("rate-function enumeration is feasible for "
                                 "at most 4 support atoms")
    base = np.asarray(base_w)
    best = math.inf
    for w in _simplex_grid(len(atoms), simplex_step):
        mean_set = _mean_set_on_support(space, atoms, w, p)
        if len(mean_set) != 1 or not space.points_equal(mean_set[0], target_x):
            continue
        ent = 0.0
        feasible = True
        for wi, bi in zip(w, base):
            if wi <= 0.0:
                continue
            if bi <= 0.0:
                feasible = False
                break
            ent += wi * math.log(wi / bi)
        if feasible:
            best = min(best, max(ent, 0.0))
    return best


@dataclass
class LdpResult:
    """Decay of rare-event probabilities against the entropy rate."""

    n_values: list[int]
    probabilities: list[float]
    empirical_rates: list[float]
    theoretical_rate: float
    tie_probabilities: list[float] = field(default_factory=list)
    censored: list[bool] = field(default_factory=list)
    mode: str = "exact-binomial"
    seed: int = 0

    def __post_init__(self):
        for prob in self.probabilities:
            if not (0.0 <= prob <= 1.0 + 1e-12):
                raise ValueError("probabilities must lie in [0, 1]")

    def rows(self) -> list[dict]:
        ties = self.tie_probabilities or [float("nan")] * len(self.n_values)
        cens = self.censored or [False] * len(self.n_values)
        return [{"n": n, "probability": p_, "empirical_rate": r,
                 "tie_probability": t, "censored": c,
                 "theoretical_rate": self.theoretical_rate}
                for n, p_, r, t, c in zip(self.n_values, self.probabilities,
                                          self.empirical_rates, ties, cens)]

    def to_json_dict(self) -> dict:
        return {
            "n_values": list(self.n_values),
            "probabilities": [float(v) for v in self.probabilities],
            "empirical_rates": [float(v) for v in self.empirical_rates],
            "theoretical_rate": float(self.theoretical_rate),
            "tie_probabilities": [float(v) for v in self.tie_probabilities],
            "censored": [bool(v) for v in self.censored],
            "mode": self.mode,
            "seed": int(self.seed),
        }


def ldp_experiment(space: Space, mu: DiscreteMeasure, p: float,
                   event_points: Sequence, n_grid: Sequence[int],
                   mode: str = "exact-binomial", replications: int = 1000,
                   seed: int = 0, simplex_step: float = 1e-3) -> LdpResult:
    """Probability that the empirical mean set falls inside a finite event.

    The event is the set of samples whose mean set (restricted to the
    support atoms) is contained in ``event_points``; ties touching points
    outside the event are excluded, so the exact two-atom count uses a
    strict majority and the tie probability is reported separately.

    Modes: ``exact-binomial`` (two-atom measures only, exact tail sums) or
    ``monte-carlo`` (any finite support, frequency estimates; zero counts
    are censored rather than mapped to an infinite rate).
    """
    atoms, base_w = _aggregate(mu)
    event_points = list(event_points)
    n_grid = list(n_grid)

    theoretical = math.inf
    for target in event_points:
        theoretical = min(theoretical,
                          ldp_rate_function(space, mu, p, target, simplex_step))

    def in_event(points) -> bool:
        return all(any(space.points_equal(pt, ev) for ev in event_points)
                   for pt in points)

    probabilities, ties, censored = [], [], []
    if mode == "exact-binomial":
        if len(atoms) != 2:
            raise ConfigurationError("exact tail sums need a two-atom measure")
        # Identify which atom (if any) constitutes the event.
        flags = [any(space.points_equal(a, ev) for ev in event_points) for a in atoms]
        theta = base_w[1]  # success probability of drawing atoms[1]
        for n in n_grid:
            tie = float(binom.pmf(n // 2, n, theta)) if n % 2 == 0 else 0.0
            if not any(flags):
                prob = 0.0
            elif all(flags):
                prob = 1.0
            else:
                # Strict majority of the event atom.
                k = n // 2
                prob = float(binom.sf(k, n, theta)) if flags[1] \
                    else float(binom.sf(k, n, 1.0 - theta))
            probabilities.append(prob)
            ties.append(tie)
            censored.append(False)
    elif mode == "monte-carlo":
        sampler = SamplerSpec(kind="iid", distribution="finite", seed=seed,
                              atoms=tuple(range(len(atoms))),
                              probs=tuple(float(v) for v in base_w),
                              embed=lambda i: atoms[int(i)])
        for j, n in enumerate(n_grid):
            hits = 0
            tie_hits = 0
            for rep in range(replications):
                local = sampler.with_seed(_derived_seed(seed, rep * len(n_grid) + j))
                emp = sample_empirical(local, n, space)
                pts, ws = _aggregate(emp)
                band = _mean_set_on_support(space, pts, np.asarray(ws), p)
                if len(band) > 1:
                    tie_hits += 1
                if in_event(band):
                    hits += 1
            probabilities.append(hits / replications)
            ties.append(tie_hits / replications)
            censored.append(hits == 0)
    else:
        raise ConfigurationError(f"unknown mode {mode!r}")

    rates = []
    for n, prob, cens in zip(n_grid, probabilities, censored):
        if cens or prob <= 0.0:
            rates.append(float("nan"))
        elif prob >= 1.0:
            rates.append(0.0)
        else:
            rates.append(-math.log(prob) / n)
    return LdpResult(n_grid, probabilities, rates, theoretical,
                     tie_probabilities=ties, censored=censored, mode=mode, seed=seed)


ExperimentReport = Union[ConvergenceReport, LdpResult]


def sampler_from_json(spec: dict) -> SamplerSpec:
    """Build a sampler from its JSON description."""
    kind = spec.get("kind")
    if kind == "iid":
        dist = spec.get("distribution")
        if dist == "finite":
            return SamplerSpec(kind="iid", distribution="finite",
                               atoms=tuple(spec["atoms"]),
                               probs=tuple(spec["probs"]),
                               seed=int(spec.get("seed", 0)))
        return SamplerSpec(kind="iid", distribution=dist,
                           params=tuple(spec.get("params", ())),
                           seed=int(spec.get("seed", 0)))
    if kind == "markov-chain":
        return SamplerSpec(kind="markov-chain",
                           kernel=tuple(tuple(row) for row in spec["kernel"]),
                           states=tuple(spec["states"]),
                           initial_state=int(spec.get("initial_state", 0)),
                           seed=int(spec.get("seed", 0)))
    raise ConfigurationError(f"unknown sampler kind {kind!r}")
