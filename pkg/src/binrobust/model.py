"""Binary regression model ``q(y|x; theta) = G(z)^y (1 - G(z))^(1 - y)``.

``z = theta[0] + theta[1:] @ x`` is the linear predictor; the intercept is
always the first parameter and datasets never carry a constant column.

Functions taking ``x`` accept one feature vector of length ``d`` or a
matrix of shape ``(n, d)``; labels broadcast against the rows.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
from scipy import special

from .exceptions import ContractError, ParameterError
from .links import Link, get_link


class Observation(NamedTuple):
    features: tuple
    label: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """``n`` observations: features ``X`` of shape ``(n, d)`` and labels ``y``."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float, ndmin=2)
        y = np.asarray(self.y)
        if X.ndim != 2:
            raise ContractError("features must be a 2-d array")
        if y.shape != (X.shape[0],):
            raise ContractError(
                f"got {X.shape[0]} feature rows but labels of shape {y.shape}"
            )
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ContractError("dataset needs n >= 1 rows and d >= 1 features")
        if not np.all(np.isfinite(X)):
            raise ContractError("feature values must be finite")
        if not np.all((y == 0) | (y == 1)):
            raise ContractError("labels must be 0 or 1")
        y = y.astype(np.int8)
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_observations(cls, observations: Iterable[Observation]) -> "Dataset":
        obs = list(observations)
        if not obs:
            raise ContractError("dataset needs at least one observation")
        dims = {len(o.features) for o in obs}
        if len(dims) != 1:
            raise ContractError("observations have differing feature dimensions")
        return cls(np.array([o.features for o in obs], dtype=float),
                   np.array([o.label for o in obs]))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def design(self) -> np.ndarray:
        """Rows ``(1, x_i)``."""
        return np.column_stack([np.ones(self.n), self.X])

    def observations(self):
        for x, y in zip(self.X, self.y):
            yield Observation(tuple(float(v) for v in x), int(y))

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X).tobytes())
        h.update(np.ascontiguousarray(self.y).tobytes())
        return h.hexdigest()

    def __len__(self):
        return self.n


def as_theta(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size < 1:
        raise ContractError("theta must be a non-empty 1-d vector")
    if not np.all(np.isfinite(theta)):
        raise ContractError("theta entries must be finite")
    return theta


def augment(x) -> np.ndarray:
    """Prepend the constant 1: ``x -> (1, x)`` (row-wise for matrices)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return np.concatenate([[1.0], x])
    if x.ndim == 2:
        return np.column_stack([np.ones(x.shape[0]), x])
    raise ContractError("features must be a vector or a 2-d array")


def linear_predictor(theta, x):
    theta = as_theta(theta)
    x = np.asarray(x, dtype=float)
    d = x.shape[-1] if x.ndim else 0
    if x.ndim > 2 or theta.size != d + 1:
        raise ContractError(
            f"theta has {theta.size} entries but features have dimension {d}"
        )
    z = theta[0] + x @ theta[1:]
    return z[()] if np.ndim(z) == 0 else z


def _labels(y):
    y = np.asarray(y)
    if not np.all((y == 0) | (y == 1)):
        raise ContractError("labels must be 0 or 1")
    return y


def log_odds(link: Link, z):
    """``log G(z) - log(1 - G(z))``."""
    return link.log_cdf(z) - link.log_sf(z)


def log_prob(link: Link, y, z):
    """``log q(y | z)``."""
    y = _labels(y)
    return np.where(y == 1, link.log_cdf(z), link.log_sf(z))


def z_score(link: Link, y, z):
    """``d log q(y|z) / dz = y g/G - (1 - y) g/(1 - G)``."""
    y = _labels(y)
    return np.where(y == 1, link.hazard_lower(z), -link.hazard_upper(z))


def conditional_prob(link, theta, x, y):
    link = get_link(link)
    z = linear_predictor(theta, x)
    y = _labels(y)
    p = np.where(y == 1, link.cdf(z), link.sf(z))
    return p[()] if np.ndim(p) == 0 else p


def _check_gamma(gamma):
    gamma = float(gamma)
    if not np.isfinite(gamma):
        raise ParameterError("gamma must be finite")
    if gamma == -1.0:
        raise ParameterError(
            "escort distribution degenerates at gamma = -1; use the "
            "geometric-limit loss (LossSpec('gamma', -1)) instead"
        )
    return gamma


def escort_log_ratio(link: Link, y, z):
    """``log q(1-y|z) - log q(y|z)``: the log-odds against label ``y``."""
    y = _labels(y)
    return (1 - 2 * y) * log_odds(link, z)


def escort_probability(link, theta, x, y, gamma):
    """``q(y)^(g+1) / sum_m q(m)^(g+1)`` for ``g = gamma``."""
    gamma = _check_gamma(gamma)
    link = get_link(link)
    z = linear_predictor(theta, x)
    # two-class log-sum-exp collapses to a logistic function of the log-odds
    p = special.expit(-(gamma + 1.0) * escort_log_ratio(link, y, z))
    return p[()] if np.ndim(p) == 0 else p


def score(link, theta, x, y):
    """Gradient of ``log q(y|x; theta)`` in theta."""
    link = get_link(link)
    z = linear_predictor(theta, x)
    s = z_score(link, y, z)
    if np.ndim(s):
        return s[:, None] * augment(x)
    return s * augment(x)


def escort_score(link, theta, x, y, gamma):
    """Gradient of ``log q_gamma(y|x; theta)`` in theta."""
    gamma = _check_gamma(gamma)
    if gamma == 0.0:
        return score(link, theta, x, y)
    link = get_link(link)
    z = linear_predictor(theta, x)
    u = gamma + 1.0
    y = _labels(y)
    sign = 2 * y - 1
    dz = (special.expit(u * escort_log_ratio(link, y, z)) * u * sign
          * (link.hazard_lower(z) + link.hazard_upper(z)))
    if np.ndim(dz):
        return dz[:, None] * augment(x)
    return dz * augment(x)
