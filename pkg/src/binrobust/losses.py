"""Per-observation losses ``Psi(y, z)`` and their derivatives in ``z``.

Three families are supported:

* ``ml``: negative log-likelihood ``-log q(y|z)``.
* ``beta``: density power (beta-divergence) loss,
  ``-q(y)^b / b + (q(0)^(b+1) + q(1)^(b+1)) / (b+1)`` for ``b > 0``.
* ``gamma``: gamma-divergence loss ``-q_g(y)^(g/(g+1)) / g`` built on the
  escort probabilities ``q_g(y) ∝ q(y)^(g+1)``.  Negative ``g`` is
  allowed.  ``g = -2`` is evaluated as the squared error ``(y - G(z))^2``
  and ``g = -1`` as the geometric-limit loss
  ``sqrt(q(1-y)/q(y)) / 2``.

Everything is written in terms of the log-odds against the observed label,
``r = log q(1-y) - log q(y)``, which keeps the powers of ``q`` finite at
extreme ``z`` without clamping probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .exceptions import ContractError, ParameterError
from .links import get_link
from .model import augment, escort_log_ratio, linear_predictor, log_prob

FAMILIES = ("ml", "beta", "gamma")

# |gamma + 1| up to this (plus one ulp of 1.0, the representation error of
# values such as -1 + 1e-8) routes to the geometric closed form
GEOMETRIC_TOL = 1e-8
_GEOMETRIC_CUTOFF = GEOMETRIC_TOL + float(np.spacing(1.0))


@dataclass(frozen=True)
class LossSpec:
    family: str
    param: float = 0.0

    def __post_init__(self):
        family = str(self.family).strip().lower()
        if family not in FAMILIES:
            raise ParameterError(
                f"unknown loss family {self.family!r}; expected ml, beta or gamma"
            )
        param = float(self.param)
        if not math.isfinite(param):
            raise ParameterError("loss parameter must be finite")
        if family == "ml":
            param = 0.0
        elif family == "beta" and not param > 0:
            raise ParameterError(f"beta must be positive, got {param}")
        elif family == "gamma" and param == 0:
            raise ParameterError("gamma = 0 is maximum likelihood; use 'ml'")
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "param", param)

    @classmethod
    def parse(cls, text: str) -> "LossSpec":
        """Parse ``"ml"``, ``"beta:<float>"`` or ``"gamma:<float>"``."""
        text = str(text).strip().lower()
        if text == "ml":
            return cls("ml")
        family, sep, value = text.partition(":")
        if not sep or family not in ("beta", "gamma"):
            raise ParameterError(
                f"bad loss spec {text!r}; use ml, beta:<float> or gamma:<float>"
            )
        try:
            param = float(value)
        except ValueError:
            raise ParameterError(f"bad loss parameter in {text!r}") from None
        return cls(family, param)

    @property
    def is_geometric(self) -> bool:
        return self.family == "gamma" and abs(self.param + 1.0) <= _GEOMETRIC_CUTOFF

    @property
    def is_brier(self) -> bool:
        return self.family == "gamma" and self.param == -2.0

    def __str__(self):
        if self.family == "ml":
            return "ml"
        return f"{self.family}:{self.param:g}"


def as_spec(spec) -> LossSpec:
    if isinstance(spec, LossSpec):
        return spec
    return LossSpec.parse(spec)


def _prepare(link, y, z):
    link = get_link(link)
    y = np.asarray(y)
    if not np.all((y == 0) | (y == 1)):
        raise ContractError("labels must be 0 or 1")
    z = np.asarray(z, dtype=float)
    return link, y, z


def _out(arr):
    return arr[()] if np.ndim(arr) == 0 else arr


def _softplus(x):
    return np.logaddexp(0.0, x)


def loss(spec, link, y, z):
    """``Psi(y, z)`` for the given loss specification.

    For ``-1 <= gamma < 0`` the loss grows like ``exp(c * |log-odds|)`` and
    overflows to ``inf`` once the exact value leaves the float range.
    """
    spec = as_spec(spec)
    link, y, z = _prepare(link, y, z)
    with np.errstate(over="ignore"):
        return _loss(spec, link, y, z)


def _loss(spec, link, y, z):
    if spec.family == "ml":
        return _out(-log_prob(link, y, z))

    if spec.family == "beta":
        b = spec.param
        lq_y = log_prob(link, y, z)
        lq_o = log_prob(link, 1 - y, z)
        value = (-np.exp(b * lq_y) / b
                 + (np.exp((b + 1) * lq_y) + np.exp((b + 1) * lq_o)) / (b + 1))
        return _out(value)

    if spec.is_brier:
        # (y - G)^2 = q(1-y)^2
        return _out(np.exp(2.0 * log_prob(link, 1 - y, z)))
    r = escort_log_ratio(link, y, z)
    if spec.is_geometric:
        return _out(0.5 * np.exp(0.5 * r))
    g = spec.param
    u = g + 1.0
    return _out(-np.exp(-(g / u) * _softplus(u * r)) / g)


def psi(spec, link, y, z):
    """``d Psi(y, z) / dz``."""
    spec = as_spec(spec)
    link, y, z = _prepare(link, y, z)
    with np.errstate(over="ignore"):
        return _psi(spec, link, y, z)


def _psi(spec, link, y, z):
    sign = 2 * y - 1
    lower = link.hazard_lower(z)
    upper = link.hazard_upper(z)
    if spec.family == "ml":
        return _out(np.where(y == 1, -lower, upper))

    # d r / dz = -sign * (g/G + g/(1-G))
    log_spread = np.log(lower + upper)
    if spec.family == "beta":
        # with q = q(y), o = q(1-y) = 1 - q and dq/dz = sign * g:
        # d/dz Psi = sign g (q^b - q^(b-1) - o^b) = -sign g o (q^(b-1) + o^(b-1)),
        # a sum of positive terms, evaluated in logs
        b = spec.param
        lq = log_prob(link, y, z)
        lo = log_prob(link, 1 - y, z)
        log_mag = link.log_pdf(z) + lo + np.logaddexp((b - 1) * lq, (b - 1) * lo)
        return _out(-sign * np.exp(log_mag))

    if spec.is_brier:
        # d/dz (y - G)^2 = 2 (G - y) g = -2 sign q(1-y) g
        return _out(-2.0 * sign * np.exp(log_prob(link, 1 - y, z) + link.log_pdf(z)))
    r = escort_log_ratio(link, y, z)
    if spec.is_geometric:
        return _out(-0.25 * sign * np.exp(0.5 * r + log_spread))
    g = spec.param
    u = g + 1.0
    log_scale = -(g / u) * _softplus(u * r) + special.log_expit(u * r)
    return _out(-sign * np.exp(log_scale + log_spread))


def per_sample_gradient(spec, link, theta, x, y):
    """Gradient of ``Psi(y, theta^T (1, x))`` in theta."""
    z = linear_predictor(theta, x)
    p = psi(spec, link, y, z)
    if np.ndim(p):
        return p[:, None] * augment(x)
    return p * augment(x)
