"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line PASS/FAIL verdict (shown at the end of the
session) and then asserts it.  Run directly with ``python tests/test_acceptance.py``.
"""

import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from acceptance_log import record  # noqa: E402
from binrobust.diagnostics import (ProbeResult, TailClass, TruthModel,  # noqa: E402
                                   boundedness_scan, fisher_consistency_check,
                                   normal_features, tail_limit_probe,
                                   uniform_features)
from binrobust.estimation import empirical_risk, fit, risk_gradient  # noqa: E402
from binrobust.links import LINK_NAMES, get_link  # noqa: E402
from binrobust.losses import loss, per_sample_gradient, psi  # noqa: E402
from binrobust.model import Dataset  # noqa: E402
from binrobust.simulation import (CaseAConfig, CaseBConfig,  # noqa: E402
                                  Scenario1Config, run_monte_carlo)

JOBS = os.cpu_count() or 1
REPLICATES = 1000
EPS = np.finfo(float).eps


def random_triples(n, seed, zmax=20.0):
    rng = np.random.default_rng(seed)
    links = rng.choice(LINK_NAMES, size=n)
    y = rng.integers(0, 2, n)
    z = rng.uniform(-zmax, zmax, n)
    return links, y, z


def random_dataset(rng, n=200, d=2):
    X = rng.normal(scale=1.5, size=(n, d))
    theta = rng.normal(size=d + 1)
    p = get_link("logit").cdf(theta[0] + X @ theta[1:])
    return Dataset(X, (rng.random(n) < p).astype(int))


def verdict(number, passed, detail):
    record(number, passed, detail)
    assert passed, detail


def test_01_brier_identity():
    start = time.perf_counter()
    links, y, z = random_triples(1000, 1)
    worst = 0.0
    for name in LINK_NAMES:
        m = links == name
        brier = (y[m] - get_link(name).cdf(z[m])) ** 2
        worst = max(worst, float(np.max(np.abs(loss("gamma:-2", name, y[m], z[m]) - brier))))
    rng = np.random.default_rng(2)
    worst_risk = 0.0
    for name in LINK_NAMES:
        for _ in range(5):
            data = random_dataset(rng)
            theta = rng.normal(size=3)
            q1 = get_link(name).cdf(data.design() @ theta)
            diff = empirical_risk("gamma:-2", name, theta, data) - np.mean((data.y - q1) ** 2)
            worst_risk = max(worst_risk, abs(diff))
    elapsed = time.perf_counter() - start
    passed = worst <= 1e-12 and worst_risk <= 1e-12 and elapsed < 1.0
    verdict(1, passed, f"max |loss - (y-G)^2| = {worst:.2e}, max risk gap = "
                       f"{worst_risk:.2e} (tol 1e-12), {elapsed:.2f}s (< 1s)")


def test_02_beta_one_offset():
    start = time.perf_counter()
    links, y, z = random_triples(1000, 1)
    worst = 0.0
    for name in LINK_NAMES:
        m = links == name
        diff = loss("beta:1", name, y[m], z[m]) - loss("gamma:-2", name, y[m], z[m])
        worst = max(worst, float(np.max(np.abs(diff + 0.5))))
    rng = np.random.default_rng(3)
    worst_theta = 0.0
    for _ in range(20):
        data = random_dataset(rng)
        a = fit("beta:1", "logit", data).theta_hat
        b = fit("gamma:-2", "logit", data).theta_hat
        worst_theta = max(worst_theta, float(np.max(np.abs(a - b))))
    elapsed = time.perf_counter() - start
    passed = worst <= 1e-12 and worst_theta <= 1e-6 and elapsed < 10.0
    verdict(2, passed, f"max |offset + 1/2| = {worst:.2e} (tol 1e-12), max theta gap = "
                       f"{worst_theta:.2e} (tol 1e-6), {elapsed:.2f}s (< 10s)")


def test_03_limit_recovery():
    start = time.perf_counter()
    z = np.linspace(-10, 10, 201)
    gaps = {}
    for name in LINK_NAMES:
        worst = 0.0
        for y in (0, 1):
            ref = psi("ml", name, y, z)
            for spec in ("beta:1e-6", "gamma:1e-6", "gamma:-1e-6"):
                worst = max(worst, float(np.max(np.abs(psi(spec, name, y, z) - ref))))
        gaps[name] = worst
    elapsed = time.perf_counter() - start
    passed = max(gaps.values()) <= 1e-4 and elapsed < 1.0
    detail = ", ".join(f"{k} {v:.2e}" for k, v in gaps.items())
    verdict(3, passed, f"max |psi - psi_ml| by link: {detail} (tol 1e-4), {elapsed:.2f}s")


GRADIENT_SPECS = ("ml", "beta:0.25", "beta:0.5", "beta:1", "beta:2", "gamma:0.5", "gamma:1",
                  "gamma:2", "gamma:-0.5", "gamma:-1", "gamma:-1.5", "gamma:-2", "gamma:-3")


def _fd_check(f, g, theta, h=1e-5):
    """Largest violation of |fd - g| <= 1e-6 |g| + rounding allowance.

    ``fd`` is the Richardson-extrapolated central difference (error O(h^4));
    the plain one is too coarse for super-exponential losses.  The allowance
    is the rounding error of the difference quotient, ``100 eps max|f| / h``,
    which matters only where the gradient is below ~1e-9 of the loss value.
    Returns ``None`` when the loss itself is not representable near ``theta``.
    """
    worst = -np.inf
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h
        values = [f(theta + e), f(theta - e), f(theta + e / 2), f(theta - e / 2)]
        if not np.all(np.isfinite(values)):
            return None
        wide = (values[0] - values[1]) / (2 * h)
        narrow = (values[2] - values[3]) / h
        fd = (4 * narrow - wide) / 3
        allowance = 100 * EPS * max(max(abs(v) for v in values), 1.0) / h
        excess = abs(fd - g[j]) - (1e-6 * abs(g[j]) + allowance)
        worst = max(worst, excess if np.isfinite(excess) else np.inf)
    return worst


def test_04_gradient_correctness():
    start = time.perf_counter()
    rng = np.random.default_rng(4)
    worst, checked, overflow = -np.inf, 0, []
    for name in LINK_NAMES:
        for spec in GRADIENT_SPECS:
            # per-sample gradients at random (theta, x) with |z| <= 20
            done = 0
            while done < 6:
                x = rng.normal(scale=2.0, size=2)
                theta = rng.normal(scale=3.0, size=3)
                y = int(rng.integers(2))
                if abs(theta[0] + x @ theta[1:]) > 20:
                    continue
                g = per_sample_gradient(spec, name, theta, x, y)
                f = lambda t: float(loss(spec, name, y, t[0] + x @ t[1:]))
                excess = _fd_check(f, g, theta)
                if excess is None:
                    overflow.append(f"{name}/{spec}")
                else:
                    worst = max(worst, excess)
                    checked += 1
                done += 1
            # risk gradient on a small dataset
            data = random_dataset(rng, n=50)
            theta = rng.normal(size=3)
            g = risk_gradient(spec, name, theta, data)
            excess = _fd_check(lambda t: empirical_risk(spec, name, t, data), g, theta)
            if excess is None:
                overflow.append(f"{name}/{spec} risk")
            else:
                worst = max(worst, excess)
                checked += 1
    elapsed = time.perf_counter() - start
    passed = worst <= 0 and elapsed < 5.0
    verdict(4, passed, f"{checked} gradients over {len(GRADIENT_SPECS)} losses x 4 links, "
                       f"worst excess over tolerance {worst:.2e} (must be <= 0); "
                       f"{len(overflow)} points skipped where the loss overflows "
                       f"({sorted(set(overflow)) or 'none'}), {elapsed:.2f}s (< 5s)")


def test_05_fisher_consistency():
    start = time.perf_counter()
    worst = 0.0
    theta0 = np.array([0.3, 0.8, -0.5])
    for name in LINK_NAMES:
        truth = TruthModel.from_model(name, theta0, normal_features(2, 2.0))
        for spec in ("ml", "beta:0.5", "beta:1", "gamma:1", "gamma:-1", "gamma:-2"):
            worst = max(worst, fisher_consistency_check(spec, name, theta0, truth, 2000,
                                                        seed=5))
    constant = TruthModel.constant(0.7, uniform_features(-3, 3, 2))
    mis = fisher_consistency_check("ml", "logit", np.zeros(3), constant, 2000, seed=5)
    elapsed = time.perf_counter() - start
    passed = worst < 1e-10 and mis > 0.01 and elapsed < 5.0
    verdict(5, passed, f"max norm under correct specification {worst:.2e} (< 1e-10), "
                       f"misspecified {mis:.3f} (> 0.01), {elapsed:.2f}s (< 5s)")


def test_06_boundedness_suite():
    start = time.perf_counter()
    grid = np.linspace(-30, 30, 1201)
    expected = {"ml": TailClass.DIVERGING, "gamma:-1": TailClass.DIVERGING}
    for spec in ("beta:0.25", "beta:0.5", "beta:1", "gamma:0.25", "gamma:0.5", "gamma:1",
                 "gamma:-1.5", "gamma:-2", "gamma:-3"):
        expected[spec] = TailClass.BOUNDED
    wrong = []
    for spec, want in expected.items():
        for y in (0, 1):
            got = boundedness_scan(spec, "probit", y, 0.0, grid).tail_classification
            if got is not want:
                wrong.append(f"{spec} y={y}: {got}")
    cauchit = boundedness_scan("ml", "cauchit", 1, 0.0, np.linspace(-100, 100, 2001))
    if cauchit.tail_classification is not TailClass.BOUNDED:
        wrong.append(f"cauchit ml: {cauchit.tail_classification}")
    elapsed = time.perf_counter() - start
    passed = not wrong and elapsed < 2.0
    verdict(6, passed, f"{2 * len(expected) + 1} scans, misclassified: "
                       f"{wrong or 'none'}, {elapsed:.2f}s (< 2s)")


def test_07_tail_probes():
    start = time.perf_counter()
    wrong = []
    for name in ("logit", "probit", "cloglog"):
        for side in ("L1", "L2"):
            for c in (0.25, 0.5, 0.75, 0.9, 1.0):
                want = ProbeResult.TO_INFINITY if c == 1.0 else ProbeResult.TO_ZERO
                got = tail_limit_probe(name, c, side)
                if got is not want:
                    wrong.append(f"{name} {side} c={c}: {got}")
    elapsed = time.perf_counter() - start
    passed = not wrong and elapsed < 1.0
    verdict(7, passed, f"30 probes on the default grid, wrong: {wrong or 'none'}, "
                       f"{elapsed:.2f}s (< 1s)")


@pytest.mark.slow
def test_08_scenario1_reproduction():
    config = Scenario1Config(n=400, a=1 / 3, p_out=0.05)
    report = run_monte_carlo(config, ["ml"], REPLICATES, base_seed=0, n_jobs=JOBS)
    mean = report.row("ml").mean_accuracy
    level_ok = mean is not None and abs(mean - 81.218) <= 0.15

    contaminated = Scenario1Config(n=400, a=0.5, p_out=0.20)
    pair = run_monte_carlo(contaminated, ["ml", "beta:1"], REPLICATES, base_seed=0,
                           n_jobs=JOBS)
    gap = pair.row("beta:1").mean_accuracy - pair.row("ml").mean_accuracy
    verdict(8, level_ok and gap > 0,
            f"a=1/3 p_out=0.05 ml mean {mean:.3f}% (target 81.218 +/- 0.15); "
            f"a=1/2 p_out=0.20 beta(1) - ml = {gap:+.3f} points (must be > 0)")


@pytest.mark.slow
def test_09_case_a_spot_check():
    config = CaseAConfig(n=400, r=0.1, D=2.0, s=1.0)
    report = run_monte_carlo(config, ["ml"], REPLICATES, base_seed=0, n_jobs=JOBS)
    row = report.row("ml")
    passed = row.mean_accuracy is not None and abs(row.mean_accuracy - 95.979) <= 0.15
    verdict(9, passed, f"case A r=0.1 D=2 s=1 ml mean {row.mean_accuracy:.3f}% "
                       f"(target 95.979 +/- 0.15), failures {row.n_failures}")


@pytest.mark.slow
def test_10_case_b_failures():
    config = CaseBConfig(n=400, r=0.1, D=2.0, nu1=2.0, nu0=2.0)
    report = run_monte_carlo(config, ["ml", "beta:0.25"], REPLICATES, base_seed=0,
                             n_jobs=JOBS)
    ml, beta = report.row("ml"), report.row("beta:0.25")
    beta_ok = (not beta.dash and beta.mean_accuracy is not None
               and abs(beta.mean_accuracy - 89.4) <= 0.5)
    ml_acc = "--" if ml.mean_accuracy is None else f"{ml.mean_accuracy:.3f}%"
    verdict(10, ml.dash and beta_ok,
            f"case B nu=2 r=0.1: ml failures {ml.n_failures}/{REPLICATES} "
            f"(dash needs >= {report.failure_threshold}), ml entry {ml.formatted_accuracy()} "
            f"(mean {ml_acc}); beta(0.25) {beta.formatted_accuracy()}% (target 89.4 +/- 0.5)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
