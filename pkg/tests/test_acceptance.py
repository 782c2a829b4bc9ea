"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with ``pytest -v -s tests/test_acceptance.py`` to see every line.
Tolerances and budgets are fixed here, not tuned at run time.
"""

import math
import time

import numpy as np
import pytest

from frechet import (
    DiscreteMeasure,
    BuresWassersteinSpace,
    EuclideanSpace,
    ExperimentConfig,
    FrechetConfig,
    Measure1D,
    PersistenceDiagramSpace,
    ProductSpace,
    QuotientSpace,
    RegularizedSpace,
    SamplerSpec,
    SpiderSpace,
    Wasserstein1D,
    bw_barycenter,
    ergodic_experiment,
    euclidean_pmean,
    frechet_functional,
    gamma_convergence_probe,
    grid_oracle,
    ldp_experiment,
    ldp_rate_function,
    one_sided_hausdorff,
    quantile_barycenter,
    relaxed_mean_set,
    sample_empirical,
    slln_experiment,
    weiszfeld_median,
)
from frechet.constructions import cyclic_rotation_group, sign_flip_group
from frechet.core import cocycle_gap, metric_axiom_violations, renorm_bound_slack
from frechet.stochastics import _derived_seed

from conftest import all_spaces, pt
from oracles import (
    diagram_matching_enumeration,
    kl_divergence,
    transport_lp,
    wasserstein2_functional,
)


def report(number: int, name: str, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    print(f"[ACCEPTANCE {number}] {name}: {status} ({detail})")
    assert passed, f"criterion {number} ({name}): {detail}"


def dominance_ok(solver_value: float, oracle_value: float) -> bool:
    return solver_value <= oracle_value + 1e-6 * (1.0 + abs(oracle_value))


def test_criterion_1_oracle_equivalence():
    rng = np.random.default_rng(12345)
    t0 = time.perf_counter()
    checked = 0
    worst_excess = -math.inf

    def excess(solver_value, oracle_value):
        return solver_value - oracle_value - 1e-6 * (1.0 + abs(oracle_value))

    # Euclidean medians (p = 1).
    for _ in range(100):
        dim = int(rng.integers(1, 4))
        space = EuclideanSpace(dim)
        k = int(rng.integers(2, 7))
        mu = DiscreteMeasure.uniform(space, [space.sample_point(rng) for _ in range(k)])
        x = weiszfeld_median(space, mu)
        value = frechet_functional(space, mu, x, mu.support[0], 1.0)
        step = {1: 0.02, 2: 0.08, 3: 0.2}[dim]
        grid = space.candidates(mu, "grid", step=step, pad=0.1)
        band = grid_oracle(space, mu, FrechetConfig(p=1.0), grid, resolution=step)
        worst_excess = max(worst_excess, excess(value, band.achieved_value))
        checked += 1

    # Euclidean p-means (p > 1).
    for _ in range(100):
        dim = int(rng.integers(1, 4))
        space = EuclideanSpace(dim)
        k = int(rng.integers(2, 7))
        mu = DiscreteMeasure.uniform(space, [space.sample_point(rng) for _ in range(k)])
        p = float(rng.choice([1.5, 2.0, 3.0]))
        x = euclidean_pmean(space, mu, p)
        value = frechet_functional(space, mu, x, mu.support[0], p)
        step = {1: 0.02, 2: 0.08, 3: 0.2}[dim]
        grid = space.candidates(mu, "grid", step=step, pad=0.1)
        band = grid_oracle(space, mu, FrechetConfig(p=p), grid, resolution=step)
        worst_excess = max(worst_excess, excess(value, band.achieved_value))
        checked += 1

    # One-dimensional transport barycenters (p = q = 2).
    w2 = Wasserstein1D(q=2.0)
    for _ in range(100):
        members = []
        for _ in range(int(rng.integers(2, 4))):
            size = int(rng.choice([1, 2, 4]))
            members.append(Measure1D(np.sort(rng.normal(size=size))))
        mu = DiscreteMeasure.uniform(w2, members)
        bar = quantile_barycenter(w2, mu)
        value = frechet_functional(w2, mu, bar, members[0], 2.0)
        cands = members + w2.candidates(mu, "grid", step=0.25, pad=0.25, atom_count=2)
        band = grid_oracle(w2, mu, FrechetConfig(p=2.0), cands, resolution=0.25)
        worst_excess = max(worst_excess, excess(value, band.achieved_value))
        checked += 1

    # Covariance-matrix barycenters (p = 2).
    for _ in range(100):
        dim = int(rng.integers(1, 3))
        bw = BuresWassersteinSpace(dim)
        k = int(rng.integers(2, 5))
        mu = DiscreteMeasure.uniform(bw, [bw.sample_point(rng) for _ in range(k)])
        center = bw_barycenter(bw, mu)
        value = frechet_functional(bw, mu, center, mu.support[0], 2.0)
        grid = bw.candidates(mu, "ball-grid", center=center, radius=0.3, step=0.15)
        band = grid_oracle(bw, mu, FrechetConfig(p=2.0), list(mu.support) + grid,
                           resolution=0.15)
        worst_excess = max(worst_excess, excess(value, band.achieved_value))
        checked += 1

    elapsed = time.perf_counter() - t0
    passed = worst_excess <= 0.0 and elapsed < 60.0
    report(1, "oracle equivalence", passed,
           f"{checked} instances, worst excess {worst_excess:.3e}, {elapsed:.1f}s")


def test_criterion_2_metric_and_functional_algebra():
    rng = np.random.default_rng(777)
    worst = {}
    for space in all_spaces():
        axioms = metric_axiom_violations(space, rng, trials=1000, tol=1e-9)
        worst[type(space).__name__] = max(
            axioms["symmetry"], axioms["triangle"], axioms["identity"],
            axioms["nonnegative"])
        assert axioms["passed"], (type(space).__name__, axioms)

    cocycle_worst = 0.0
    renorm_worst = 0.0
    for space in all_spaces():
        for _ in range(200):
            pts = [space.sample_point(rng) for _ in range(5)]
            mu = DiscreteMeasure.uniform(space, pts[:2])
            p = float(rng.uniform(1.0, 3.0))
            cocycle_worst = max(cocycle_worst, cocycle_gap(space, mu, *pts[2:], p))
            renorm_worst = max(renorm_worst,
                               -renorm_bound_slack(space, mu, pts[2], pts[3], p))

    line = EuclideanSpace(1)
    origin_ok = True
    for _ in range(50):
        vals = rng.normal(size=5)
        mu = DiscreteMeasure.uniform(line, [pt(v) for v in vals])
        cands = [pt(v) for v in np.arange(vals.min() - 1, vals.max() + 1, 0.05)]
        p = float(rng.uniform(1.0, 3.0))
        sets = []
        for origin in (vals[0], -7.0, 13.0):
            band = relaxed_mean_set(line, mu, FrechetConfig(p=p, origin=pt(origin)),
                                    cands, resolution=0.05)
            sets.append(tuple(float(x[0]) for x in band.points))
        origin_ok = origin_ok and sets[0] == sets[1] == sets[2]

    passed = (max(worst.values()) <= 1e-9 and cocycle_worst <= 1e-9
              and renorm_worst <= 1e-9 and origin_ok)
    report(2, "metric and functional algebra", passed,
           f"axioms worst {max(worst.values()):.2e}, cocycle {cocycle_worst:.2e}, "
           f"renorm {renorm_worst:.2e}, origin invariance {origin_ok}")


def test_criterion_3_slln_suite():
    t0 = time.perf_counter()
    line = EuclideanSpace(1)

    normal = slln_experiment(
        line,
        SamplerSpec(kind="iid", distribution="normal", params=(0.0, 1.0), seed=0),
        2.0, [100, 1000, 10000], 20,
        ExperimentConfig(solver="subgradient", target_points=(pt(0.0),),
                         threshold=0.05))
    normal_ok = normal.verdicts["final_below_threshold"] and \
        normal.dvec[-1] < normal.dvec[0]

    pareto = slln_experiment(
        line,
        SamplerSpec(kind="iid", distribution="pareto", params=(1.5, 1.0), seed=0),
        2.0, [1000, 10000, 100000], 3,
        ExperimentConfig(solver="subgradient", target_points=(pt(3.0),),
                         threshold=0.1))
    pareto_ok = pareto.verdicts["final_below_threshold"]

    cauchy = slln_experiment(
        line,
        SamplerSpec(kind="iid", distribution="cauchy", params=(0.0, 1.0), seed=0),
        1.0, [100, 1000, 10000], 5,
        ExperimentConfig(solver="weiszfeld", target_points=(pt(0.0),),
                         threshold=0.05))
    cauchy_ok = cauchy.verdicts["final_below_threshold"]

    elapsed = time.perf_counter() - t0
    passed = normal_ok and pareto_ok and cauchy_ok and elapsed < 300.0
    report(3, "strong law suite", passed,
           f"normal {normal.dvec[-1]:.4f}<0.05:{normal_ok}, "
           f"pareto {pareto.dvec[-1]:.4f}<0.1:{pareto_ok}, "
           f"cauchy {cauchy.dvec[-1]:.4f}<0.05:{cauchy_ok}, {elapsed:.0f}s")


def test_criterion_4_no_false_positives():
    line = EuclideanSpace(1)
    worst = 0.0
    for rep in range(100):
        sampler = SamplerSpec(kind="iid", distribution="finite",
                              atoms=(0.0, 1.0), probs=(0.5, 0.5),
                              seed=_derived_seed(1, rep))
        mu = sample_empirical(sampler, 1001, line)
        grid = line.candidates(mu, "grid", step=0.01, pad=1.0)
        band = grid_oracle(line, mu, FrechetConfig(p=1.0), grid, resolution=0.01)
        for x in band.points:
            v = float(x[0])
            worst = max(worst, max(0.0, v - 1.0, -v))
    passed = worst <= 0.05
    report(4, "set-valued no false positives", passed,
           f"100 replications, worst distance into [0,1] = {worst:.4f}")


def test_criterion_5_gamma_convergence_probes():
    line = EuclideanSpace(1)
    spider = SpiderSpace(legs=3)

    mu = DiscreteMeasure.uniform(line, [pt(0.0), pt(1.0)])
    eps = [1.0 / n for n in (1, 4, 16, 256, 4096, 65536)]
    constant = gamma_convergence_probe(line, [mu] * len(eps), mu, 2.0, eps,
                                       grid_step=0.01, grid_pad=0.5)

    ns = (1, 2, 4, 8, 16, 32, 64, 128)
    seq = [DiscreteMeasure.uniform(line, [pt(0.0), pt(1.0 + 1.0 / n)]) for n in ns]
    limit = DiscreteMeasure.uniform(line, [pt(0.0), pt(1.0)])
    shrinking = gamma_convergence_probe(line, seq, limit, 2.0, [0.0] * len(ns),
                                        grid_step=0.005, grid_pad=0.25)

    seq_med = [DiscreteMeasure.uniform(
        line, [pt(-1.0 / n), pt(0.0), pt(1.0), pt(1.0 + 1.0 / n)])
        for n in (1, 2, 4, 8, 16, 32)]
    median = gamma_convergence_probe(line, seq_med, limit, 1.0, [0.0] * 6,
                                     grid_step=0.01, grid_pad=1.0)

    verdicts = [constant.verdicts["final_below_combined_resolution"],
                shrinking.verdicts["final_below_combined_resolution"],
                median.verdicts["final_below_combined_resolution"]]
    # Traces must not drift upward beyond grid-alignment noise.
    decreasing = [r.dvec[-1] <= r.dvec[0] + step
                  for r, step in ((constant, 0.01), (shrinking, 0.005),
                                  (median, 0.01))]
    passed = all(verdicts) and all(decreasing)
    report(5, "gamma-convergence probes", passed,
           f"final dvec: constant {constant.dvec[-1]:.4f}, "
           f"shrinking {shrinking.dvec[-1]:.4f}, median {median.dvec[-1]:.4f}")
    # The spider case from the operation examples doubles as a sanity check
    # that probes run outside the line.
    smu = DiscreteMeasure.uniform(spider, [(0, 1.0), (1, 1.0), (2, 1.0)])
    probe = gamma_convergence_probe(spider, [smu] * 3, smu, 2.0, [0.1, 0.01, 0.0],
                                    grid_step=0.05, grid_pad=0.1)
    assert probe.verdicts["final_below_combined_resolution"]


def test_criterion_6_ldp_desk_check():
    t0 = time.perf_counter()
    line = EuclideanSpace(1)
    mu = DiscreteMeasure.from_weights(line, [pt(0.0), pt(1.0)], [0.7, 0.3])
    target_rate = kl_divergence([0.5, 0.5], [0.7, 0.3])

    result = ldp_experiment(line, mu, 2.0, [pt(1.0)], [50, 100, 200, 400],
                            mode="exact-binomial", simplex_step=1e-3)
    final_rate = result.empirical_rates[-1]
    rate_ok = abs(final_rate - target_rate) <= 0.2 * target_rate
    fn_ok = abs(result.theoretical_rate - target_rate) <= 1e-3
    elapsed = time.perf_counter() - t0
    passed = rate_ok and fn_ok and elapsed < 10.0
    report(6, "large deviations desk check", passed,
           f"empirical rate {final_rate:.5f} vs {target_rate:.5f} (20% band), "
           f"rate function {result.theoretical_rate:.5f} (tol 1e-3), {elapsed:.1f}s")


def test_criterion_7_ergodic_check():
    line = EuclideanSpace(1)
    failures = []
    final = []
    for seed in range(10):
        sampler = SamplerSpec(kind="markov-chain", states=(0.0, 3.0),
                              kernel=((0.4, 0.6), (0.6, 0.4)), seed=seed)
        rep = ergodic_experiment(line, sampler, 2.0, [1000, 10000],
                                 ExperimentConfig(solver="subgradient",
                                                  target_points=(pt(1.5),),
                                                  threshold=0.05))
        final.append(rep.dvec[-1])
        if not rep.verdicts["final_below_threshold"]:
            failures.append(seed)
    passed = not failures
    report(7, "ergodic check", passed,
           f"10 seeds, worst final dvec {max(final):.4f} (tol 0.05), "
           f"failing seeds {failures}")


def test_criterion_8_construction_laws():
    rng = np.random.default_rng(31)
    left = EuclideanSpace(1)
    right = EuclideanSpace(1)

    factor_ok = True
    worst_factor = 0.0
    for _ in range(50):
        p = float(rng.choice([1.0, 2.0]))
        ps = ProductSpace(left, right, q=p)
        xs = rng.normal(size=int(rng.integers(2, 4)))
        ys = rng.normal(size=int(rng.integers(2, 4)))
        mu = DiscreteMeasure.uniform(ps, [(pt(a), pt(b)) for a in xs for b in ys])
        step = 0.05
        band = relaxed_mean_set(ps, mu, FrechetConfig(p=p),
                                ps.candidates(mu, "grid", step=step, pad=0.2),
                                resolution=step * 2 ** 0.5)
        mu_l = DiscreteMeasure.uniform(left, [pt(a) for a in xs])
        mu_r = DiscreteMeasure.uniform(right, [pt(b) for b in ys])
        band_l = relaxed_mean_set(left, mu_l, FrechetConfig(p=p),
                                  left.candidates(mu_l, "grid", step=step, pad=0.2),
                                  resolution=step)
        band_r = relaxed_mean_set(right, mu_r, FrechetConfig(p=p),
                                  right.candidates(mu_r, "grid", step=step, pad=0.2),
                                  resolution=step)
        cross = [(a, b) for a in band_l.points for b in band_r.points]
        combined = band.resolution + step
        gap = max(one_sided_hausdorff(ps, band.points, cross),
                  one_sided_hausdorff(ps, cross, band.points))
        worst_factor = max(worst_factor, gap)
        factor_ok = factor_ok and gap <= combined

    plane = EuclideanSpace(2)
    rot = cyclic_rotation_group(4)
    qs = QuotientSpace(plane, rot)
    rep_ok = True
    for _ in range(100):
        x, y = plane.sample_point(rng), plane.sample_point(rng)
        ref = qs.distance(x, y)
        for g in rot.elements:
            for h in rot.elements:
                if abs(qs.distance(rot.act(g, x), rot.act(h, y)) - ref) > 1e-9:
                    rep_ok = False

    base = EuclideanSpace(1)
    flip = sign_flip_group(dim=1)
    quotient = QuotientSpace(base, flip)
    regs = [RegularizedSpace(base, flip, lam=s) for s in (0.25, 1.0, 4.0)]
    sandwich_ok = True
    for _ in range(1000):
        x, y = base.sample_point(rng, 3.0), base.sample_point(rng, 3.0)
        vals = [rs.distance(x, y) for rs in regs]
        if not (vals[0] >= vals[1] - 1e-12 and vals[1] >= vals[2] - 1e-12):
            sandwich_ok = False
        lo, hi = quotient.distance(x, y), base.distance(x, y)
        if not all(lo - 1e-12 <= v <= hi + 1e-12 for v in vals):
            sandwich_ok = False

    passed = factor_ok and rep_ok and sandwich_ok
    report(8, "construction laws", passed,
           f"factorization worst gap {worst_factor:.4f}, representative "
           f"independence {rep_ok}, sandwich/monotone {sandwich_ok}")


def test_criterion_9_space_specific_closed_forms():
    rng = np.random.default_rng(53)

    pd = PersistenceDiagramSpace(q=2.0)
    pd_ok = True
    for _ in range(100):
        d1 = pd.sample_point(rng)[:4]
        d2 = pd.sample_point(rng)[:4]
        if abs(pd.distance(d1, d2)
               - diagram_matching_enumeration(d1, d2, 2.0)) > 1e-10:
            pd_ok = False

    w2 = Wasserstein1D(q=2.0)
    w_ok = True
    for _ in range(50):
        na, nb = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        aa, ab = rng.normal(size=na), rng.normal(size=nb)
        wa = rng.uniform(0.2, 1.0, size=na); wa /= wa.sum(); wa[-1] = 1 - wa[:-1].sum()
        wb = rng.uniform(0.2, 1.0, size=nb); wb /= wb.sum(); wb[-1] = 1 - wb[:-1].sum()
        lhs = w2.distance(Measure1D(aa, wa), Measure1D(ab, wb))
        if abs(lhs - transport_lp(aa, wa, ab, wb, 2.0)) > 1e-8:
            w_ok = False

    bw = BuresWassersteinSpace(dim=2)
    bw_ok = True
    for _ in range(50):
        lam1 = rng.uniform(0.1, 4.0, size=2)
        lam2 = rng.uniform(0.1, 4.0, size=2)
        basis, _ = np.linalg.qr(rng.normal(size=(2, 2)))
        mats = [basis @ np.diag(lam1) @ basis.T, basis @ np.diag(lam2) @ basis.T]
        mu = DiscreteMeasure.uniform(bw, mats)
        center = bw_barycenter(bw, mu)
        expected_eigs = ((np.sqrt(lam1) + np.sqrt(lam2)) / 2.0) ** 2
        expected = basis @ np.diag(expected_eigs) @ basis.T
        if not np.allclose(center, expected, atol=1e-8):
            bw_ok = False

    bar_ok = True
    for _ in range(20):
        members = [Measure1D(np.sort(rng.normal(size=int(rng.choice([1, 2, 4])))))
                   for _ in range(3)]
        mu = DiscreteMeasure.uniform(w2, members)
        bar = quantile_barycenter(w2, mu)
        bar_value = wasserstein2_functional(w2.distance, bar, members, mu.weights)
        for cand in w2.candidates(mu, "grid", step=0.25, pad=0.25, atom_count=2):
            if bar_value > wasserstein2_functional(w2.distance, cand, members,
                                                   mu.weights) + 1e-9:
                bar_ok = False

    passed = pd_ok and w_ok and bw_ok and bar_ok
    report(9, "space-specific closed forms", passed,
           f"diagram matching {pd_ok}, transport LP {w_ok}, "
           f"commuting barycenter {bw_ok}, quantile dominance {bar_ok}")
