"""Complex-valued Huber loss family.

All evaluations are vectorized: the argument `e` may be a complex scalar or an
array of any shape, and the result has the same shape.  Residuals are assumed
to be already divided by the scale.
"""

import math
from dataclasses import dataclass

import numpy as np


def csign(e):
    """Complex signum ``e / |e|`` with ``csign(0) = 0``."""
    e = np.asarray(e, dtype=np.complex128)
    r = np.abs(e)
    return np.divide(e, r, out=np.zeros_like(e), where=r > 0)


def chi2_2_cdf(x):
    return -np.expm1(-np.asarray(x, dtype=float) / 2)


def chi2_4_cdf(x):
    x = np.asarray(x, dtype=float)
    return 1.0 - np.exp(-x / 2) * (1.0 + x / 2)


@dataclass(frozen=True)
class HuberLoss:
    """Huber loss with threshold `c` on the residual modulus.

    ``rho(e) = |e|**2`` for ``|e| <= c`` and ``2c|e| - c**2`` beyond; the
    score function clips the residual to modulus `c` while keeping its phase.
    """

    c: float

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError(f"Huber threshold must be positive and finite, got {self.c}")

    @classmethod
    def from_quantile(cls, q):
        return cls(threshold_from_quantile(q))

    def rho(self, e):
        r = np.abs(e)
        c = self.c
        return np.where(r <= c, r * r, 2 * c * r - c * c)

    def psi(self, e):
        e = np.asarray(e, dtype=np.complex128)
        return np.where(np.abs(e) <= self.c, e, self.c * csign(e))

    def chi(self, e):
        r = np.abs(e)
        return np.minimum(r, self.c) ** 2

    def weight(self, e):
        r = np.abs(e)
        with np.errstate(divide="ignore"):
            return np.where(r <= self.c, 1.0, self.c / r)

    def consistency(self):
        return consistency_factor(self.c)


@dataclass(frozen=True)
class LeastSquaresLoss:
    """``rho(e) = |e|**2``; the untrimmed limit of the Huber family."""

    c: float = math.inf

    def rho(self, e):
        return np.abs(e) ** 2

    def psi(self, e):
        return np.asarray(e, dtype=np.complex128)

    def chi(self, e):
        return np.abs(e) ** 2

    def weight(self, e):
        return np.ones(np.shape(e))

    def consistency(self):
        return ConsistencyFactors(c=math.inf, beta=1.0, alpha=1.0)


@dataclass(frozen=True)
class ConsistencyFactors:
    """Scaling constants making the joint scale estimate consistent at the
    complex normal model; `alpha` is set equal to ``beta = E[chi(e)]``."""

    c: float
    beta: float
    alpha: float


def threshold_from_quantile(q):
    """Huber threshold `c` such that ``2 c**2`` is the `q`-quantile of chi2(2).

    Under ``e ~ CN(0, 1)`` the variate ``2|e|**2`` is chi2(2), so a fraction
    ``1 - q`` of clean residuals is clipped.  Closed form:
    ``c = sqrt(-log(1 - q))``.
    """
    if not 0 < q < 1:
        raise ValueError(f"quantile q must lie in (0, 1), got {q}")
    return math.sqrt(-math.log1p(-q))


def consistency_factor(c):
    """Return ``beta = c**2 (1 - F2(2c**2)) + F4(2c**2)`` with ``alpha = beta``.

    ``F2``, ``F4`` are the chi-square CDFs with 2 and 4 degrees of freedom.
    """
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    if math.isinf(c):
        return ConsistencyFactors(c=c, beta=1.0, alpha=1.0)
    x = 2 * c * c
    beta = float(c * c * (1 - chi2_2_cdf(x)) + chi2_4_cdf(x))
    return ConsistencyFactors(c=c, beta=beta, alpha=beta)
