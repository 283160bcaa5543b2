"""Moments of the composite power gain and their Gamma moment matching.

``X = |h_d + sum_n e^{j theta_n} g_n h_n|**2`` with every reflected term
phase-aligned to the direct path. With ``h_d ~ CN(0, s)`` and element
channels ``CN(0, r)``, ``CN(0, t)``, the magnitudes are Rayleigh and

    E[X]   = s + N r t + pi^2 N (N-1) r t / 16 + pi^1.5 N sqrt(s r t) / 4
    E[X^2] = 2 s^2 + s r t N (6 + 3 (N-1) pi^2 / 8)
             + 3 N pi^1.5 sqrt(s^3 r t) / 4
             + r^2 t^2 N / 256 (pi^4 (N-3)(N-2)(N-1) + 48 pi^2 (2N-1)(N-1) + 768 N + 256)
             + sqrt(s r^3 t^3) N pi^1.5 / 32 (pi^2 (N-2)(N-1) + 48 N - 12)

The Gamma law uses the rate convention throughout: pdf
``beta**alpha u**(alpha-1) exp(-beta u) / Gamma(alpha)``, mean ``alpha/beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special


class DegenerateDistributionError(ValueError):
    """Second moment does not exceed the squared mean."""


@dataclass(frozen=True)
class MomentPair:
    """First and second moment of the power gain."""

    m1: float
    m2: float

    @property
    def variance(self) -> float:
        return self.m2 - self.m1 * self.m1


@dataclass(frozen=True)
class GammaParams:
    """Gamma shape ``alpha`` and RATE ``beta`` (not scale)."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DegenerateDistributionError(f"Gamma parameters must be positive: {self}")

    @property
    def mean(self) -> float:
        return self.alpha / self.beta

    @property
    def variance(self) -> float:
        return self.alpha / self.beta**2

    @property
    def second_moment(self) -> float:
        return self.alpha * (self.alpha + 1.0) / self.beta**2


def moments_x(gains, n: int) -> MomentPair:
    """Closed-form ``E[X]`` and ``E[X^2]`` under perfect phase alignment.

    ``gains`` is anything with ``varsigma``, ``varrho`` and ``vartheta``
    attributes (direct, AP->RIS and RIS->AC mean power gains).
    """
    if int(n) != n or n < 1:
        raise ValueError(f"number of elements must be a positive integer, got {n!r}")
    s, r, t = float(gains.varsigma), float(gains.varrho), float(gains.vartheta)
    if min(s, r, t) < 0:
        raise ValueError("power gains must be non-negative")
    N = float(n)
    pi = math.pi
    rt = r * t
    cross = math.sqrt(s * rt)
    m1_terms = [
        s,
        N * rt,
        pi**2 * N * (N - 1.0) / 16.0 * rt,
        pi**1.5 * N / 4.0 * cross,
    ]
    m2_terms = [
        2.0 * s * s,
        s * rt * N * (6.0 + 3.0 * (N - 1.0) * pi**2 / 8.0),
        3.0 * N * pi**1.5 / 4.0 * s * cross,
        rt * rt * N / 256.0 * (pi**4 * (N - 3.0) * (N - 2.0) * (N - 1.0)
                               + 48.0 * pi**2 * (2.0 * N - 1.0) * (N - 1.0) + 768.0 * N + 256.0),
        rt * cross * N * pi**1.5 / 32.0 * (pi**2 * (N - 2.0) * (N - 1.0) + 48.0 * N - 12.0),
    ]
    # fsum is exact-rounded, so the spread of magnitudes does not matter
    m1, m2 = math.fsum(m1_terms), math.fsum(m2_terms)
    if not (math.isfinite(m1) and math.isfinite(m2)):
        raise OverflowError("moment evaluation overflowed")
    return MomentPair(m1, m2)


def gamma_match(m: MomentPair) -> GammaParams:
    """Gamma law with the same mean and second moment as ``m``."""
    var = m.m2 - m.m1 * m.m1
    if not m.m1 > 0 or not var > 0:
        raise DegenerateDistributionError(f"cannot match a Gamma law to {m} (variance {var:g})")
    return GammaParams(m.m1 * m.m1 / var, m.m1 / var)


def snr_params(m: MomentPair, rho: float) -> GammaParams:
    """Gamma law of ``gamma = rho X``: same shape, rate divided by ``rho``."""
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho!r}")
    g = gamma_match(m)
    return GammaParams(g.alpha, g.beta / rho)


def gamma_pdf(params: GammaParams, x):
    """Density of the Gamma law (rate convention)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be non-negative")
    a, b = params.alpha, params.beta
    with np.errstate(divide="ignore"):
        logpdf = a * math.log(b) + special.xlogy(a - 1.0, x) - b * x - math.lgamma(a)
    out = np.exp(logpdf)
    return float(out) if out.ndim == 0 else out


def gamma_cdf(params: GammaParams, x):
    """CDF of the Gamma law: regularized lower incomplete gamma ``P(alpha, beta x)``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be non-negative")
    out = special.gammainc(params.alpha, params.beta * x)
    return float(out) if out.ndim == 0 else out
