"""Empirical risk minimisation for the binary regression model.

The optimiser is a quasi-Newton (BFGS inverse-Hessian) descent with Armijo
backtracking.  Divergence-based risks are not convex in theta, so ``fit``
restarts from several initial values (by default the zero vector and the
maximum-likelihood estimate) and keeps the lowest final risk.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import ContractError, ParameterError
from .links import get_link
from .losses import LossSpec, as_spec, loss, psi
from .model import Dataset, as_theta, augment, conditional_prob

_TINY = np.finfo(float).tiny
# consecutive steps below the relative risk tolerance that count as converged
_SMALL_STEP_RUN = 3


class FitStatus(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    STALLED_AT_INITIAL = "stalled_at_initial"
    NUMERICAL_FAILURE = "numerical_failure"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 500
    gradient_tolerance: float = 1e-8
    risk_relative_tolerance: float = 1e-10
    # None means: zero vector, plus the ML estimate when the loss is not ML
    initializers: Sequence | None = None
    line_search_shrink: float = 0.5
    armijo_constant: float = 1e-4
    max_backtracks: int = 60

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ParameterError("max_iterations must be >= 1")
        if not (self.gradient_tolerance > 0 and self.risk_relative_tolerance > 0):
            raise ParameterError("tolerances must be positive")
        if not 0 < self.line_search_shrink < 1:
            raise ParameterError("line_search_shrink must lie in (0, 1)")
        if not 0 < self.armijo_constant < 1:
            raise ParameterError("armijo_constant must lie in (0, 1)")


@dataclass(frozen=True)
class FitResult:
    theta_hat: np.ndarray
    final_risk: float
    gradient_norm: float
    iterations: int
    status: FitStatus
    initializer_used: int
    # risk at the start point and after every accepted step
    risk_trace: tuple = field(default=(), repr=False)

    @property
    def converged(self) -> bool:
        return self.status is FitStatus.CONVERGED


class _Objective:
    """Weighted risk ``sum_i w_i Psi(y_i, theta^T xt_i)`` and its gradient."""

    def __init__(self, spec, link, design, y, weights):
        self.spec = as_spec(spec)
        self.link = get_link(link)
        self.design = design
        self.y = y
        self.weights = weights

    def __call__(self, theta):
        z = self.design @ theta
        with np.errstate(invalid="ignore", over="ignore"):
            value = float(self.weights @ loss(self.spec, self.link, self.y, z))
            grad = self.design.T @ (self.weights * psi(self.spec, self.link, self.y, z))
        return value, grad


def _check_theta(theta, data: Dataset):
    theta = as_theta(theta)
    if theta.size != data.d + 1:
        raise ContractError(
            f"theta has {theta.size} entries, data need {data.d + 1}"
        )
    return theta


def _data_objective(spec, link, data: Dataset):
    weights = np.full(data.n, 1.0 / data.n)
    return _Objective(spec, link, data.design(), data.y, weights)


def empirical_risk(spec, link, theta, data: Dataset) -> float:
    """Mean loss over the observations."""
    theta = _check_theta(theta, data)
    z = data.design() @ theta
    return float(np.mean(loss(spec, link, data.y, z)))


def risk_gradient(spec, link, theta, data: Dataset) -> np.ndarray:
    theta = _check_theta(theta, data)
    xt = data.design()
    z = xt @ theta
    return xt.T @ psi(spec, link, data.y, z) / data.n


def _minimize(objective, theta0, options: FitOptions):
    """Run BFGS from ``theta0``.

    Returns ``(theta, risk, grad_norm, iterations, status, trace)``.
    """
    theta = np.array(theta0, dtype=float)
    f, g = objective(theta)
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        return theta, f, np.inf, 0, FitStatus.NUMERICAL_FAILURE, (f,)

    k = theta.size
    eye = np.eye(k)
    H = eye.copy()
    fresh = True
    accepted_any = False
    trace = [f]
    status = FitStatus.MAX_ITERATIONS
    it = 0
    small_steps = 0
    while it < options.max_iterations:
        gnorm = np.max(np.abs(g))
        if gnorm <= options.gradient_tolerance:
            status = FitStatus.CONVERGED
            break
        it += 1
        p = -H @ g
        slope = g @ p
        if not (np.isfinite(slope) and slope < 0):
            H, fresh = eye.copy(), True
            p = -g
            slope = g @ p
        step = 1.0 if not fresh else min(1.0, 1.0 / max(np.linalg.norm(g), _TINY))

        found = False
        for _ in range(options.max_backtracks):
            cand = theta + step * p
            if np.array_equal(cand, theta):
                break  # the step vanished below the resolution of theta
            fc, gc = objective(cand)
            if (np.isfinite(fc) and np.all(np.isfinite(gc))
                    and fc <= f + options.armijo_constant * step * slope):
                found = True
                break
            step *= options.line_search_shrink

        if not found:
            if not fresh:
                H, fresh = eye.copy(), True
                continue
            # no descent possible at machine precision along -g
            status = FitStatus.CONVERGED if accepted_any else FitStatus.STALLED_AT_INITIAL
            break

        s = cand - theta
        yv = gc - g
        decrease = f - fc
        theta, f, g = cand, fc, gc
        accepted_any = True
        trace.append(f)

        sy = s @ yv
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
            if fresh:
                H = eye * (sy / (yv @ yv))
            rho = 1.0 / sy
            V = eye - rho * np.outer(s, yv)
            H = V @ H @ V.T + rho * np.outer(s, s)
            fresh = False

        # a single tiny decrease is common mid-run; stop on a run of them
        if decrease <= options.risk_relative_tolerance * max(abs(f + decrease), _TINY):
            small_steps += 1
            if small_steps >= _SMALL_STEP_RUN:
                status = FitStatus.CONVERGED
                break
        else:
            small_steps = 0
    else:
        if np.max(np.abs(g)) <= options.gradient_tolerance:
            status = FitStatus.CONVERGED

    return theta, f, float(np.max(np.abs(g))), it, status, tuple(trace)


def _best_of(objective, starts, options):
    best = None
    for index, start in enumerate(starts):
        theta, f, gnorm, it, status, trace = _minimize(objective, start, options)
        if not np.isfinite(f):
            continue
        if best is None or f < best.final_risk:
            best = FitResult(theta, float(f), gnorm, it, status, index, trace)
    if best is None:
        start = np.asarray(starts[0], dtype=float)
        return FitResult(start, float("nan"), float("inf"), 0,
                         FitStatus.NUMERICAL_FAILURE, 0, ())
    return best


def _default_starts(spec, link, objective, k, options):
    zero = np.zeros(k)
    if spec.family == "ml":
        return [zero]
    ml_objective = _Objective(LossSpec("ml"), link, objective.design,
                              objective.y, objective.weights)
    theta_ml, f_ml, *_ = _minimize(ml_objective, zero, options)
    starts = [zero]
    if np.isfinite(f_ml) and np.all(np.isfinite(theta_ml)):
        starts.append(theta_ml)
    return starts


def _run(spec, link, objective, k, options):
    spec = as_spec(spec)
    link = get_link(link)
    if options.initializers is None:
        starts = _default_starts(spec, link, objective, k, options)
    else:
        starts = [as_theta(t) for t in options.initializers]
        if not starts or any(t.size != k for t in starts):
            raise ContractError(f"initializers must be vectors of length {k}")
    return _best_of(objective, starts, options)


def fit(spec, link, data: Dataset, options: FitOptions | None = None) -> FitResult:
    """Minimise the empirical risk of ``spec`` under ``link`` on ``data``."""
    options = options or FitOptions()
    if np.all(data.y == data.y[0]):
        warnings.warn(
            "all labels are identical; the intercept estimate diverges",
            RuntimeWarning, stacklevel=2,
        )
    objective = _data_objective(spec, link, data)
    return _run(spec, link, objective, data.d + 1, options)


def classify(link, theta, x, threshold: float = 0.5):
    """Label 1 iff ``q(1|x; theta) >= threshold``."""
    if not 0.0 <= threshold <= 1.0:
        raise ParameterError("threshold must lie in [0, 1]")
    q1 = conditional_prob(link, theta, x, 1)
    label = (np.asarray(q1) >= threshold).astype(int)
    return int(label) if np.ndim(label) == 0 else label


def pseudo_true_parameter(spec, link, truth, n_large: int, seed,
                          options: FitOptions | None = None) -> np.ndarray:
    """Monte Carlo approximation of the population risk minimiser.

    Features are sampled from ``truth``; the expectation over the label is
    taken exactly, so the objective is ``mean_x sum_y p(y|x) Psi(y, z)``.
    """
    if n_large < 1:
        raise ParameterError("n_large must be positive")
    rng = np.random.default_rng(seed)
    X = truth.sample(n_large, rng)
    p1, p0 = truth.probabilities(X)
    xt = augment(X)
    design = np.vstack([xt, xt])
    y = np.concatenate([np.ones(n_large, dtype=np.int8),
                        np.zeros(n_large, dtype=np.int8)])
    weights = np.concatenate([p1, p0]) / n_large
    objective = _Objective(spec, link, design, y, weights)
    result = _run(spec, link, objective, xt.shape[1], options or FitOptions())
    return result.theta_hat
