"""Monte Carlo experiments: data generators, test accuracy and the runner.

Three designs are provided:

* Scenario 1 - logistic model on ``Unif[-3, 3]^2`` with ``theta = (0, a, -a)``
  where a ``Bin(n, p_out)`` number of training labels is redrawn from the
  sign-flipped model.
* Case A - two normal populations, ``N(mu1, I)`` and ``N(0, s I)``.
* Case B - two bivariate Student-t populations centred at ``mu1`` and ``0``.

``mu1`` is ``(D, D)`` by default (``placement="diagonal"``) or ``(D, 0)``
(``placement="axis"``); see ``mean_vectors``.

Test sets are always drawn from the uncontaminated mechanism.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .estimation import FitOptions, FitStatus, classify, fit
from .exceptions import ParameterError
from .diagnostics import PLACEMENTS, mean_vectors
from .losses import as_spec
from .model import Dataset

DEFAULT_TEST_N = 50_000
DASH = "--"
FAILED = (FitStatus.MAX_ITERATIONS, FitStatus.STALLED_AT_INITIAL,
          FitStatus.NUMERICAL_FAILURE)


T_KINDS = ("multivariate", "independent")


def _variant(value, default):
    return "" if value == default else f" {value}"


def _check_placement(placement):
    if placement not in PLACEMENTS:
        raise ParameterError(f"placement must be one of {PLACEMENTS}")


def _check_count(name, value, minimum=1):
    if int(value) != value or value < minimum:
        raise ParameterError(f"{name} must be an integer >= {minimum}")


@dataclass(frozen=True)
class Scenario1Config:
    n: int = 400
    a: float = 1.0
    p_out: float = 0.0
    test_n: int = DEFAULT_TEST_N

    name = "scenario1"

    def __post_init__(self):
        _check_count("n", self.n)
        _check_count("test_n", self.test_n)
        if not self.a > 0:
            raise ParameterError("a must be positive")
        if not 0.0 <= self.p_out < 1.0:
            raise ParameterError("p_out must lie in [0, 1)")

    def describe(self) -> str:
        return f"scenario1 n={self.n} a={self.a:g} p_out={self.p_out:g}"

    def generate(self, seed):
        return gen_scenario1(self, seed)


@dataclass(frozen=True)
class CaseAConfig:
    n: int = 400
    r: float = 0.5
    D: float = 2.0
    s: float = 1.0
    test_n: int = DEFAULT_TEST_N
    placement: str = "diagonal"

    name = "caseA"

    def __post_init__(self):
        _check_count("n", self.n)
        _check_count("test_n", self.test_n)
        if not 0.0 < self.r < 1.0:
            raise ParameterError("r must lie in (0, 1)")
        if not (self.D > 0 and self.s > 0):
            raise ParameterError("D and s must be positive")
        _check_placement(self.placement)

    def describe(self) -> str:
        text = f"caseA n={self.n} r={self.r:g} D={self.D:g} s={self.s:g}"
        return text + _variant(self.placement, "diagonal")

    def generate(self, seed):
        return gen_caseA(self, seed)


@dataclass(frozen=True)
class CaseBConfig:
    n: int = 400
    r: float = 0.5
    D: float = 2.0
    nu1: float = 7.0
    nu0: float = 7.0
    test_n: int = DEFAULT_TEST_N
    placement: str = "diagonal"
    # "multivariate": one chi-square mixing draw per row (bivariate t);
    # "independent": each coordinate is its own univariate t
    t_kind: str = "multivariate"

    name = "caseB"

    def __post_init__(self):
        _check_count("n", self.n)
        _check_count("test_n", self.test_n)
        if not 0.0 < self.r < 1.0:
            raise ParameterError("r must lie in (0, 1)")
        if not (self.D > 0 and self.nu1 > 0 and self.nu0 > 0):
            raise ParameterError("D, nu1 and nu0 must be positive")
        _check_placement(self.placement)
        if self.t_kind not in T_KINDS:
            raise ParameterError(f"t_kind must be one of {T_KINDS}")

    def describe(self) -> str:
        return (f"caseB n={self.n} r={self.r:g} D={self.D:g} "
                f"nu1={self.nu1:g} nu0={self.nu0:g}"
                + _variant(self.placement, "diagonal")
                + _variant(self.t_kind, "multivariate"))

    def generate(self, seed):
        return gen_caseB(self, seed)


SCENARIOS = {"scenario1": Scenario1Config, "caseA": CaseAConfig, "caseB": CaseBConfig}


# ---------------------------------------------------------------------------
# generators


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _scenario1_sample(n, a, rng):
    X = rng.uniform(-3.0, 3.0, size=(n, 2))
    z = a * (X[:, 0] - X[:, 1])
    y = (rng.random(n) < special.expit(z)).astype(np.int8)
    return X, y, z


def contaminate_labels(y, z, p_out, rng):
    """Redraw a ``Bin(n, p_out)`` subset of labels from the sign-flipped model.

    Returns ``(labels, n_out)``; the input array is not modified.
    """
    y = np.array(y, dtype=np.int8)
    n = y.size
    n_out = int(rng.binomial(n, p_out))
    if n_out:
        rows = rng.choice(n, size=n_out, replace=False)
        y[rows] = (rng.random(n_out) < special.expit(-z[rows])).astype(np.int8)
    return y, n_out


def gen_scenario1(config: Scenario1Config, seed):
    """Return ``(train, test)``; only the training labels are contaminated."""
    rng = _rng(seed)
    X, y, z = _scenario1_sample(config.n, config.a, rng)
    y, _ = contaminate_labels(y, z, config.p_out, rng)
    Xt, yt, _ = _scenario1_sample(config.test_n, config.a, rng)
    return Dataset(X, y), Dataset(Xt, yt)


def _two_population(n, r, draw1, draw0, rng):
    n1 = rng.binomial(n, r)
    X = np.vstack([draw1(n1), draw0(n - n1)])
    y = np.concatenate([np.ones(n1, dtype=np.int8), np.zeros(n - n1, dtype=np.int8)])
    order = rng.permutation(n)
    return Dataset(X[order], y[order])


def gen_caseA(config: CaseAConfig, seed):
    rng = _rng(seed)
    mu1, mu0 = mean_vectors(config.D, config.placement)
    sd0 = math.sqrt(config.s)

    def draw1(m):
        return mu1 + rng.standard_normal((m, 2))

    def draw0(m):
        return mu0 + sd0 * rng.standard_normal((m, 2))

    train = _two_population(config.n, config.r, draw1, draw0, rng)
    test = _two_population(config.test_n, config.r, draw1, draw0, rng)
    return train, test


def gen_caseB(config: CaseBConfig, seed):
    rng = _rng(seed)
    mu1, mu0 = mean_vectors(config.D, config.placement)

    def t_rows(nu, m):
        if config.t_kind == "independent":
            return rng.standard_t(nu, size=(m, 2))
        w = np.sqrt(rng.chisquare(nu, size=m) / nu)
        return rng.standard_normal((m, 2)) / w[:, None]

    def draw1(m):
        return mu1 + t_rows(config.nu1, m)

    def draw0(m):
        return mu0 + t_rows(config.nu0, m)

    train = _two_population(config.n, config.r, draw1, draw0, rng)
    test = _two_population(config.test_n, config.r, draw1, draw0, rng)
    return train, test


def accuracy(link, theta, test: Dataset) -> float:
    """Percentage of test rows whose predicted label matches."""
    if test.n < 1:
        raise ParameterError("test set is empty")
    labels = classify(link, theta, test.X)
    return 100.0 * float(np.mean(labels == test.y))


# ---------------------------------------------------------------------------
# Monte Carlo runner


def replicate_seed(base_seed: int, index: int) -> np.random.SeedSequence:
    """Seed for replicate ``index``; a pure function of both arguments."""
    return np.random.SeedSequence([int(base_seed), int(index)])


@dataclass(frozen=True)
class ReplicateOutcome:
    index: int
    train_digest: str
    test_digest: str
    statuses: tuple
    accuracies: tuple


@dataclass(frozen=True)
class MonteCarloRow:
    setting: str
    method: str
    mean_accuracy: float | None
    n_failures: int
    n_replicates: int
    dash: bool

    def formatted_accuracy(self) -> str:
        if self.dash or self.mean_accuracy is None:
            return DASH
        return f"{self.mean_accuracy:.3f}"


@dataclass(frozen=True)
class MonteCarloReport:
    rows: tuple
    failure_threshold: int
    replicates: tuple = field(default=(), repr=False)

    def to_csv(self) -> str:
        lines = ["setting,method,mean_accuracy,n_failures,n_replicates"]
        for row in self.rows:
            lines.append(f"{row.setting},{row.method},{row.formatted_accuracy()},"
                         f"{row.n_failures},{row.n_replicates}")
        return "\n".join(lines) + "\n"

    def row(self, method) -> MonteCarloRow:
        key = str(as_spec(method))
        for r in self.rows:
            if r.method == key:
                return r
        raise KeyError(key)

    def accuracies(self, method) -> np.ndarray:
        """Per-replicate accuracies for ``method`` (NaN where the fit failed)."""
        j = [r.method for r in self.rows].index(str(as_spec(method)))
        return np.array([
            rep.accuracies[j] if rep.statuses[j] not in FAILED else np.nan
            for rep in self.replicates
        ])


def default_failure_threshold(replicates: int) -> int:
    return max(1, math.ceil(0.1 * replicates))


def _one_replicate(config, methods, link, options, base_seed, index):
    train, test = config.generate(np.random.default_rng(replicate_seed(base_seed, index)))
    statuses, accs = [], []
    for spec in methods:
        result = fit(spec, link, train, options)
        statuses.append(result.status)
        if result.status is FitStatus.NUMERICAL_FAILURE:
            accs.append(float("nan"))
        else:
            accs.append(accuracy(link, result.theta_hat, test))
    return ReplicateOutcome(index, train.digest(), test.digest(),
                            tuple(statuses), tuple(accs))


def run_monte_carlo(config, methods: Sequence, replicates: int,
                    failure_threshold: int | None = None, base_seed: int = 0,
                    link="logit", options: FitOptions | None = None,
                    n_jobs: int = 1) -> MonteCarloReport:
    """Fit every method on the same data for each replicate and summarise.

    A replicate counts as a failure for a method when its fit did not
    converge; a method with at least ``failure_threshold`` failures gets the
    dash marker instead of a mean accuracy.
    """
    _check_count("replicates", replicates)
    methods = [as_spec(m) for m in methods]
    if not methods:
        raise ParameterError("at least one method is required")
    if failure_threshold is None:
        failure_threshold = default_failure_threshold(replicates)
    _check_count("failure_threshold", failure_threshold)
    options = options or FitOptions()

    args = [(config, methods, link, options, base_seed, k) for k in range(replicates)]
    if n_jobs == 1:
        outcomes = [_one_replicate(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            outcomes = list(pool.map(_one_replicate, *zip(*args), chunksize=8))

    rows = []
    setting = config.describe()
    for j, spec in enumerate(methods):
        failed = [o.statuses[j] in FAILED for o in outcomes]
        good = [o.accuracies[j] for o, bad in zip(outcomes, failed) if not bad]
        n_fail = sum(failed)
        mean = float(np.mean(good)) if good else None
        rows.append(MonteCarloRow(setting, str(spec), mean, n_fail, replicates,
                                  n_fail >= failure_threshold))
    return MonteCarloReport(tuple(rows), failure_threshold, tuple(outcomes))


def config_dict(config) -> dict:
    return {"scenario": config.name, **asdict(config)}
