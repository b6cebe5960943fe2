"""Link functions for binary regression.

Each link is the CDF ``G`` of a continuous law on the real line.  Besides
``cdf``/``pdf`` every link exposes the survival function, log-domain
companions and the two hazard ratios ``g/G`` and ``g/(1-G)``, all
evaluated with tail formulas that stay accurate where ``1 - cdf`` would
cancel or underflow.

All methods accept scalars or arrays and return an array of the same
shape (a NumPy scalar for scalar input).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .exceptions import DomainError, ParameterError

LINK_NAMES = ("logit", "probit", "cloglog", "cauchit")

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_LOG_PI = math.log(math.pi)


def _as_z(z):
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("linear predictor must be finite")
    return arr


def _out(arr):
    # 0-d arrays come back as NumPy scalars
    return arr[()] if np.ndim(arr) == 0 else arr


class Link:
    """Base class; subclasses implement the ``_name`` kernels on arrays."""

    name: str = ""
    symmetric: bool = False

    def cdf(self, z):
        return _out(self._cdf(_as_z(z)))

    def sf(self, z):
        return _out(self._sf(_as_z(z)))

    def log_cdf(self, z):
        return _out(self._log_cdf(_as_z(z)))

    def log_sf(self, z):
        return _out(self._log_sf(_as_z(z)))

    def pdf(self, z):
        return _out(self._pdf(_as_z(z)))

    def log_pdf(self, z):
        return _out(self._log_pdf(_as_z(z)))

    def hazard_lower(self, z):
        """``g(z) / G(z)``."""
        return _out(self._hazard_lower(_as_z(z)))

    def hazard_upper(self, z):
        """``g(z) / (1 - G(z))``."""
        return _out(self._hazard_upper(_as_z(z)))

    def __repr__(self):
        return f"{type(self).__name__}()"

    def __eq__(self, other):
        return isinstance(other, Link) and other.name == self.name

    def __hash__(self):
        return hash(self.name)

    # Defaults for symmetric laws: G(-z) = 1 - G(z).
    def _sf(self, z):
        return self._cdf(-z)

    def _log_sf(self, z):
        return self._log_cdf(-z)

    def _hazard_upper(self, z):
        return self._hazard_lower(-z)


class Logit(Link):
    name = "logit"
    symmetric = True

    def _cdf(self, z):
        return special.expit(z)

    def _log_cdf(self, z):
        return special.log_expit(z)

    def _pdf(self, z):
        return special.expit(z) * special.expit(-z)

    def _log_pdf(self, z):
        return special.log_expit(z) + special.log_expit(-z)

    def _hazard_lower(self, z):
        return special.expit(-z)


class Probit(Link):
    name = "probit"
    symmetric = True

    def _cdf(self, z):
        return special.ndtr(z)

    def _log_cdf(self, z):
        return special.log_ndtr(z)

    def _pdf(self, z):
        return np.exp(-0.5 * z * z - _LOG_SQRT_2PI)

    def _log_pdf(self, z):
        return -0.5 * z * z - _LOG_SQRT_2PI

    def _hazard_lower(self, z):
        # Phi(z) = erfc(-z/sqrt2)/2 = exp(-z^2/2) erfcx(-z/sqrt2)/2, so the
        # Gaussian factor cancels exactly; erfcx carries the Mills ratio.
        # For z >= 0, Phi(z) >= 1/2 and the log form is exact and reaches
        # into the subnormal range, where erfcx(-z/sqrt2) would overflow.
        with np.errstate(over="ignore"):
            mills = _SQRT_2_OVER_PI / special.erfcx(-z / math.sqrt(2.0))
        upper = np.exp(self._log_pdf(z) - special.log_ndtr(z))
        return np.where(z >= 0, upper, mills)


class CLogLog(Link):
    """Gumbel-type law with ``G(z) = 1 - exp(-exp(z))``."""

    name = "cloglog"
    symmetric = False

    def _cdf(self, z):
        with np.errstate(over="ignore"):
            return -np.expm1(-np.exp(z))

    def _sf(self, z):
        with np.errstate(over="ignore"):
            return np.exp(-np.exp(z))

    def _log_cdf(self, z):
        with np.errstate(over="ignore", divide="ignore"):
            w = np.exp(z)
            direct = np.log(-np.expm1(-w))
            # log((1 - e^{-w}) / w) = -w/2 + w^2/24 + O(w^4)
            series = z - 0.5 * w + w * w / 24.0
        return np.where(z < -30.0, series, direct)

    def _log_sf(self, z):
        with np.errstate(over="ignore"):
            return -np.exp(z)

    def _pdf(self, z):
        with np.errstate(over="ignore"):
            return np.exp(z - np.exp(z))

    def _log_pdf(self, z):
        with np.errstate(over="ignore"):
            return z - np.exp(z)

    def _hazard_lower(self, z):
        # g/G = w e^{-w} / (1 - e^{-w}) = w / expm1(w),  w = e^z
        with np.errstate(over="ignore", invalid="ignore"):
            w = np.exp(z)
            h = w / np.expm1(w)
        return np.where(w < 1e-300, 1.0, h)

    def _hazard_upper(self, z):
        with np.errstate(over="ignore"):
            return np.exp(z)


class Cauchit(Link):
    """Standard Cauchy law, ``G(z) = 1/2 + arctan(z)/pi``."""

    name = "cauchit"
    symmetric = True

    def _cdf(self, z):
        # arctan of the reciprocal keeps relative accuracy in the lower tail
        with np.errstate(divide="ignore", over="ignore"):
            tail = np.arctan(-1.0 / z) / math.pi
        return np.where(z < -1.0, tail, 0.5 + np.arctan(z) / math.pi)

    def _log_cdf(self, z):
        return np.log(self._cdf(z))

    def _pdf(self, z):
        return np.exp(self._log_pdf(z))

    def _log_pdf(self, z):
        az = np.abs(z)
        with np.errstate(over="ignore", divide="ignore"):
            far = -_LOG_PI - 2.0 * np.log(az)
            near = -_LOG_PI - np.log1p(z * z)
        return np.where(az > 1e8, far, near)

    def _hazard_lower(self, z):
        return np.exp(self._log_pdf(z) - self._log_cdf(z))


_LINKS = {cls.name: cls() for cls in (Logit, Probit, CLogLog, Cauchit)}


def get_link(name) -> Link:
    """Return the link called ``name`` (a :class:`Link` is passed through)."""
    if isinstance(name, Link):
        return name
    try:
        return _LINKS[str(name).strip().lower()]
    except KeyError:
        raise ParameterError(
            f"unknown link {name!r}; expected one of {', '.join(LINK_NAMES)}"
        ) from None
