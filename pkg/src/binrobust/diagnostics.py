"""Robustness diagnostics for contamination of the linear predictor.

The central quantity is the contamination effect

    b(y, z, z') = psi(y, z) * (z' - z),

the directional derivative of ``Psi(y, .)`` when ``z`` is pulled toward a
contaminating value ``z'``.  A loss is robust (in this sense) when ``b`` stays
bounded as ``|z| -> inf``; ``boundedness_scan`` checks that numerically and
``tail_limit_probe`` checks the tail ratios that decide it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import special

from .exceptions import ContractError, ParameterError
from .links import get_link
from .losses import as_spec, per_sample_gradient, psi
from .model import linear_predictor

DEFAULT_POINTS = 1201
PLACEMENTS = ("diagonal", "axis")


def mean_vectors(D: float, placement: str = "diagonal"):
    """Class means ``(mu1, mu0)`` for the two-population designs.

    ``diagonal`` shifts both coordinates by ``D`` (so ``|mu1 - mu0| = D sqrt 2``);
    ``axis`` shifts only the first one (``|mu1 - mu0| = D``).
    """
    if placement == "diagonal":
        return np.array([D, D], dtype=float), np.zeros(2)
    if placement == "axis":
        return np.array([D, 0.0]), np.zeros(2)
    raise ParameterError(f"placement must be one of {PLACEMENTS}")


class TailClass(str, enum.Enum):
    BOUNDED = "bounded"
    DIVERGING = "diverging"

    def __str__(self):
        return self.value


class ProbeResult(str, enum.Enum):
    TO_ZERO = "to_zero"
    TO_INFINITY = "to_infinity"
    INCONCLUSIVE = "inconclusive"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class BoundednessReport:
    grid: np.ndarray
    values: np.ndarray
    max_abs: float
    argmax_z: float
    tail_classification: TailClass

    def to_csv(self) -> str:
        lines = ["z,b"]
        lines += [f"{z:.17g},{b:.17g}" for z, b in zip(self.grid, self.values)]
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# truth models


@dataclass(frozen=True)
class FeatureSampler:
    """A named feature distribution: ``uniform``, ``normal`` or ``binormal``."""

    name: str
    params: tuple = ()

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        p = dict(self.params)
        if self.name == "uniform":
            return rng.uniform(p["low"], p["high"], size=(n, p["d"]))
        if self.name == "normal":
            mean = np.asarray(p.get("mean", np.zeros(p["d"])), dtype=float)
            return mean + p.get("scale", 1.0) * rng.standard_normal((n, p["d"]))
        if self.name == "binormal":
            mu1 = np.asarray(p["mu1"], dtype=float)
            mu0 = np.asarray(p["mu0"], dtype=float)
            ones = rng.random(n) < p["r"]
            X = rng.standard_normal((n, mu1.size))
            X[ones] = X[ones] + mu1
            X[~ones] = math.sqrt(p["s"]) * X[~ones] + mu0
            return X
        raise ParameterError(f"unknown feature distribution {self.name!r}")


def uniform_features(low: float, high: float, d: int) -> FeatureSampler:
    return FeatureSampler("uniform", (("low", low), ("high", high), ("d", d)))


def normal_features(d: int, scale: float = 1.0) -> FeatureSampler:
    return FeatureSampler("normal", (("d", d), ("scale", scale)))


@dataclass(frozen=True)
class TruthModel:
    """Data-generating law: ``p(1|x)`` plus a feature distribution."""

    conditional: Callable[[np.ndarray], np.ndarray]
    features: FeatureSampler
    description: str = ""
    # optional accurate p(0|x); 1 - p(1|x) is pure rounding when p(1|x) ~ 1
    complement: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.features.sample(n, rng)

    def probabilities(self, X) -> tuple[np.ndarray, np.ndarray]:
        """``(p(1|x), p(0|x))`` for the rows of ``X``."""
        p1 = np.asarray(self.conditional(X), dtype=float)
        if np.any(~np.isfinite(p1) | (p1 < 0) | (p1 > 1)):
            raise ContractError("truth conditional probabilities must lie in [0, 1]")
        if self.complement is None:
            return p1, 1.0 - p1
        p0 = np.asarray(self.complement(X), dtype=float)
        if p0.shape != p1.shape or np.any(~np.isfinite(p0) | (p0 < 0) | (p0 > 1)):
            raise ContractError("truth complement probabilities must lie in [0, 1]")
        return p1, p0

    @classmethod
    def from_model(cls, link, theta, features: FeatureSampler) -> "TruthModel":
        link = get_link(link)
        theta = np.asarray(theta, dtype=float)

        def conditional(X):
            return link.cdf(linear_predictor(theta, X))

        def complement(X):
            return link.sf(linear_predictor(theta, X))

        return cls(conditional, features, f"{link.name} model at {theta.tolist()}",
                   complement)

    @classmethod
    def constant(cls, p1: float, features: FeatureSampler) -> "TruthModel":
        if not 0.0 <= p1 <= 1.0:
            raise ParameterError("p(1|x) must lie in [0, 1]")

        def conditional(X):
            return np.full(np.atleast_2d(X).shape[0], float(p1))

        return cls(conditional, features, f"constant p(1|x) = {p1}")

    @classmethod
    def binormal(cls, r: float, D: float, s: float,
                 placement: str = "diagonal") -> "TruthModel":
        """Class 1 ~ N(mu1, I), class 0 ~ N(0, s I), P(Y = 1) = r.

        ``p(1|x)`` is the exact posterior; ``mu1`` follows ``mean_vectors``.
        """
        if not (0 < r < 1 and D > 0 and s > 0):
            raise ParameterError("need 0 < r < 1, D > 0 and s > 0")
        mu1, mu0 = mean_vectors(D, placement)

        def log_odds(X):
            X = np.atleast_2d(X)
            log1 = -0.5 * np.sum((X - mu1) ** 2, axis=1)
            log0 = -0.5 * np.sum((X - mu0) ** 2, axis=1) / s - math.log(s)
            return math.log(r / (1 - r)) + log1 - log0

        def conditional(X):
            return special.expit(log_odds(X))

        def complement(X):
            return special.expit(-log_odds(X))

        features = FeatureSampler(
            "binormal", (("r", r), ("mu1", tuple(mu1)), ("mu0", tuple(mu0)), ("s", s))
        )
        return cls(conditional, features, f"binormal r={r} D={D} s={s}", complement)


# ---------------------------------------------------------------------------
# contamination effect


def contamination_effect(spec, link, y, z, z_prime):
    z = np.asarray(z, dtype=float)
    z_prime = np.asarray(z_prime, dtype=float)
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(z_prime))):
        raise ParameterError("z and z' must be finite")
    with np.errstate(invalid="ignore", over="ignore"):
        b = psi(spec, link, y, z) * (z_prime - z)
    return b[()] if np.ndim(b) == 0 else b


def default_grid(link, points: int = DEFAULT_POINTS) -> np.ndarray:
    half = 100.0 if get_link(link).name == "cauchit" else 30.0
    return np.linspace(-half, half, points)


def _classify_tails(grid, values):
    mag = np.abs(values)
    center = 0.5 * (grid[0] + grid[-1])
    quarter = 0.25 * (grid[-1] - grid[0])
    inner = np.abs(grid - center) <= quarter
    inner_max = np.max(mag[inner]) if np.any(inner) else 0.0
    for edge in (mag[0], mag[-1]):
        if np.isnan(edge) or edge > 2.0 * inner_max:
            return TailClass.DIVERGING
    return TailClass.BOUNDED


def boundedness_scan(spec, link, y, z_prime=0.0, grid=None) -> BoundednessReport:
    """Evaluate ``b(y, z, z')`` over ``grid`` and classify its tails.

    The curve is called diverging when ``|b|`` at either end of the grid
    exceeds twice the largest ``|b|`` over the middle half of the range.
    """
    grid = default_grid(link) if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3:
        raise ParameterError("grid must be a 1-d array with at least 3 points")
    if not np.all(np.diff(grid) > 0):
        raise ParameterError("grid must be strictly increasing")
    values = contamination_effect(spec, link, y, grid, z_prime)
    mag = np.abs(values)
    if np.all(np.isnan(mag)):
        i = 0
    else:
        i = int(np.nanargmax(mag))
    return BoundednessReport(
        grid=grid,
        values=values,
        max_abs=float(mag[i]),
        argmax_z=float(grid[i]),
        tail_classification=_classify_tails(grid, values),
    )


# ---------------------------------------------------------------------------
# tail limits


def tail_log_ratio(link, c: float, side: str, z):
    """``log(|z| g(z) / (1-G(z))^c)`` (L1) or ``log(|z| g(-z) / G(-z)^c)`` (L2)."""
    link = get_link(link)
    z = np.asarray(z, dtype=float)
    # written through the hazards so the c = 1 case involves no cancellation
    if side == "L1":
        return (np.log(np.abs(z)) + np.log(link.hazard_upper(z))
                + (1.0 - c) * link.log_sf(z))
    if side == "L2":
        return (np.log(np.abs(z)) + np.log(link.hazard_lower(-z))
                + (1.0 - c) * link.log_cdf(-z))
    raise ParameterError(f"side must be 'L1' or 'L2', got {side!r}")


def tail_limit_probe(link, c: float, side: str, z_grid=None) -> ProbeResult:
    """Classify the limit of the tail ratio along an increasing grid.

    ``to_zero``: the second half of the sequence decreases strictly and the
    last value is below a tenth of the first.  ``to_infinity`` is the mirror
    image (strict increase, last value above ten times the first).
    """
    if not 0.0 < c <= 1.0:
        raise ParameterError(f"c must lie in (0, 1], got {c}")
    z_grid = np.arange(1.0, 101.0) if z_grid is None else np.asarray(z_grid, float)
    if z_grid.ndim != 1 or z_grid.size < 2 or np.any(z_grid <= 0):
        raise ParameterError("z_grid must hold increasing positive values")
    if not np.all(np.diff(z_grid) > 0):
        raise ParameterError("z_grid must be strictly increasing")
    if z_grid[-1] < 20:
        raise ParameterError("z_grid must reach at least 20")

    with np.errstate(over="ignore"):
        logs = tail_log_ratio(link, c, side, z_grid)
    steps = np.diff(logs[logs.size // 2:])
    drop = logs[-1] - logs[0]
    ten = math.log(10.0)
    if np.all(steps < 0) and drop < -ten:
        return ProbeResult.TO_ZERO
    if np.all(steps > 0) and drop > ten:
        return ProbeResult.TO_INFINITY
    return ProbeResult.INCONCLUSIVE


# ---------------------------------------------------------------------------
# conditional expected scores


def expected_conditional_score(spec, link, theta, truth: TruthModel, x):
    """``sum_y p(y|x) * grad_theta Psi(y, theta^T (1, x))``.

    ``x`` may be one feature vector or a matrix; rows give one score each.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    p1, p0 = truth.probabilities(X)
    n = X.shape[0]
    g1 = per_sample_gradient(spec, link, theta, X, np.ones(n, dtype=int))
    g0 = per_sample_gradient(spec, link, theta, X, np.zeros(n, dtype=int))
    out = p1[:, None] * g1 + p0[:, None] * g0
    return out[0] if single else out


def fisher_consistency_check(spec, link, theta0, truth: TruthModel, n: int,
                             seed) -> float:
    """Norm of the feature-averaged conditional expected score at ``theta0``."""
    as_spec(spec)
    if n < 1:
        raise ParameterError("n must be positive")
    rng = np.random.default_rng(seed)
    X = truth.sample(n, rng)
    scores = expected_conditional_score(spec, link, theta0, truth, X)
    return float(np.linalg.norm(scores.mean(axis=0)))
