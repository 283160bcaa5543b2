"""Finite-blocklength rate of a Gamma-distributed SNR.

Instantaneous rate (normal approximation, log2(r)/r term dropped)::

    R(gamma) = C(gamma) - Qinv(eps) * sqrt(V(gamma) / r)

Three evaluations of its average over ``gamma ~ Gamma(alpha, beta)`` (rate
parameterization) are provided:

``avg_rate_exact``
    The two infinite series. ``E[log(1+gamma)] = sum_k V_k / k`` with
    ``V_k = E[(gamma/(1+gamma))**k] = beta**alpha Gamma(k+alpha)
    U(k+alpha, 1+alpha, beta) / Gamma(alpha)``, and
    ``E[sqrt(1 - (1+gamma)**-2)] = sum_n binom(1/2, n) (-1)**n M_{2n}`` with
    ``M_m = E[(1+gamma)**-m] = beta**alpha U(alpha, alpha+1-m, beta)``.
``avg_rate_lower_bound``
    Closed form from Jensen's inequality plus the first-order dispersion
    expansion.
``avg_rate_quadrature``
    Direct adaptive quadrature of both expectations; the independent check.

At high mean SNR the log series needs ~mean_snr * ln(1/tol) terms, so the
Gamma*U values are generated by contiguous relations of U rather than one
quadrature per term:

* ``k V_{k+1} = (2k+alpha+beta-1) V_k - (k+alpha-1) V_{k-1}``. ``V_k`` is the
  minimal solution, so it is run backwards (Miller) in the variable
  ``s_k = 1 - V_k/V_{k-1}`` and normalized by ``V_0 = 1``.
* ``m M_{m+1} = (m-alpha-beta) M_m + beta M_{m-1}``. Forward is stable only for
  ``m > alpha + beta``; below that the terms come from the fused integral.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .snrstats import GammaParams
from .specfun import (
    DEFAULT_QUADRATURE,
    ConvergenceError,
    QuadratureSpec,
    SeriesControl,
    binom_half,
    exp_integral_scaled,
    inv_q,
    log_fused_integral,
)

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
LOG2E = 1.0 / LN2

# Miller start must sit this many e-folds of the solution ratio beyond the
# last index used; the ratio grows like exp(4 sqrt(beta k))
_MILLER_MARGIN = 16.0
_CONSECUTIVE = 3


@dataclass(frozen=True)
class FblParams:
    """Blocklength ``r`` (channel uses), payload ``L`` (bits) and target error ``epsilon``."""

    blocklength: int = 100
    payload: int = 80
    epsilon: float = 1e-9

    def __post_init__(self):
        if int(self.blocklength) != self.blocklength or self.blocklength < 100:
            raise ValueError("blocklength must be an integer >= 100")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.payload < 1:
            raise ValueError("payload must be >= 1 bit")

    @property
    def penalty(self) -> float:
        """Qinv(epsilon) / sqrt(r), the weight of the dispersion term."""
        return inv_q(self.epsilon) / math.sqrt(self.blocklength)


@dataclass(frozen=True)
class RateBreakdown:
    """Average rate split into the capacity term ``r1`` and dispersion term ``r2``.

    All values are in bits per channel use; ``avg_rate = r1 - penalty * r2``.
    ``terms_r1``/``terms_r2`` count series terms (0 for non-series methods).
    """

    r1: float
    r2: float
    avg_rate: float
    terms_r1: int = 0
    terms_r2: int = 0
    method: str = "series"


def capacity(gamma):
    """Shannon capacity ``log2(1 + gamma)`` in bits per channel use."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("SNR must be non-negative")
    out = np.log1p(g) * LOG2E
    return float(out) if out.ndim == 0 else out


def dispersion(gamma):
    """Channel dispersion ``(log2 e)**2 (1 - (1+gamma)**-2)``."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("SNR must be non-negative")
    # 1 - (1+g)^-2 = g (2+g) / (1+g)^2, exact near zero
    out = LOG2E**2 * g * (2.0 + g) / (1.0 + g) ** 2
    return float(out) if out.ndim == 0 else out


def fbl_rate(gamma, p: FblParams):
    """Normal-approximation rate; can be negative at very low SNR (not clamped)."""
    out = np.asarray(capacity(gamma)) - p.penalty * np.sqrt(np.asarray(dispersion(gamma)))
    return float(out) if np.ndim(out) == 0 else out


def _check_gamma(g: GammaParams):
    if not (g.alpha > 0 and g.beta > 0 and math.isfinite(g.alpha) and math.isfinite(g.beta)):
        raise ValueError(f"degenerate Gamma parameters {g!r}")


def _first_stop(terms, partial, ctrl: SeriesControl, offset=0):
    """Index where the ratio-estimated tail has been below tolerance 3 times running.

    ``terms`` are same-signed series terms, ``partial`` their running sums.
    Returns None if the criterion is not met inside the arrays.
    """
    t = np.abs(terms)
    q = np.full_like(t, np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        q[1:] = t[1:] / t[:-1]
        tail = np.where(q < 1.0, t * q / (1.0 - q), np.inf)
    tail[t == 0] = 0.0
    ok = tail <= ctrl.rel_tol * np.abs(partial) + ctrl.abs_tol
    run = np.convolve(ok.astype(int), np.ones(_CONSECUTIVE, dtype=int), mode="full")[: len(ok)]
    hits = np.flatnonzero(run >= _CONSECUTIVE)
    if hits.size == 0:
        return None
    return int(hits[0]) + offset


def _miller_ratios(alpha, beta, start, stop):
    """s_k = 1 - V_k / V_{k-1} for k = stop+1..start+1 from the backward recurrence.

    Returned in increasing k; entries near ``start`` carry the start-up error.
    """
    c = alpha + beta - 1.0
    k = start + 1
    # fixed point of the s-recurrence at k: k s^2 + c s - beta = 0
    disc = c * c + 4.0 * k * beta
    s = 2.0 * beta / (c + math.sqrt(disc)) if disc > 0 and c + math.sqrt(disc) > 0 else 0.0
    out = [0.0] * (start - stop)
    for k in range(start, stop, -1):
        ks = k * s
        s = (beta + ks) / (k + c + ks)
        out[k - stop - 1] = s
    return np.array(out)


def _log_series_r1(g: GammaParams, ctrl: SeriesControl):
    """sum_k V_k / k (nats) and the number of terms used."""
    alpha, beta = g.alpha, g.beta
    # backward error decays like exp(-4 sqrt(beta) (sqrt(start) - sqrt(k)))
    margin = _MILLER_MARGIN / (4.0 * math.sqrt(beta))
    # terms decay roughly like exp(-2 sqrt(beta k)); start near the knee
    target = int(min(max(256.0, 64.0 / beta), ctrl.max_terms))
    s = np.empty(0)
    while True:
        target = min(target, ctrl.max_terms)
        start = int((math.sqrt(target) + margin) ** 2) + 1
        # values below the previous usable index are already converged
        s = np.concatenate([s, _miller_ratios(alpha, beta, start, len(s))[: target - len(s)]])
        logv = np.cumsum(np.log1p(-s))
        k = np.arange(1, target + 1, dtype=float)
        terms = np.exp(logv) / k
        partial = np.cumsum(terms)
        stop = _first_stop(terms, partial, ctrl)
        if stop is not None:
            return math.fsum(terms[: stop + 1]), stop + 1
        if target >= ctrl.max_terms:
            raise ConvergenceError(f"log series did not converge in {ctrl.max_terms} terms for {g}")
        target *= 2


def _projected_terms(n, term, half_term, total, ctrl: SeriesControl) -> float:
    """Terms needed if ``|t_k| ~ C k^-p`` continues, with ``p`` fitted on ``[n/2, n]``.

    The tail after ``n`` is then about ``|t_n| n / (p - 1)``.
    """
    if half_term == 0.0 or term == 0.0:
        return 0.0
    p = math.log(abs(half_term / term)) / math.log(2.0)
    if p <= 1.0:
        return math.inf
    tol = ctrl.rel_tol * abs(total) + ctrl.abs_tol
    excess = abs(term) * n / ((p - 1.0) * tol)
    return n * excess ** (1.0 / (p - 1.0)) if excess > 1.0 else float(n)


def _dispersion_series_r2(g: GammaParams, ctrl: SeriesControl, quad: QuadratureSpec):
    """sum_n binom(1/2,n) (-1)^n M_{2n} (dimensionless) and the terms used."""
    alpha, beta = g.alpha, g.beta
    log_norm = alpha * math.log(beta) - math.lgamma(alpha)

    def moment(m):
        return math.exp(log_fused_integral(alpha, -float(m), beta, quad) + log_norm)

    # forward recurrence is only trusted from here on
    seed = max(2, math.ceil(alpha + beta) + 1)
    m_prev = m_curr = None
    j = 0
    total = 1.0
    coeff = 1.0
    prev = 0.0
    run = 0
    half_term = 0.0
    for n in range(1, ctrl.max_terms + 1):
        coeff *= -(1.5 - n) / n  # (-1)^n binom(1/2, n)
        m = 2 * n
        if m <= seed + 1:
            moment_m = moment(m)
        else:
            if m_curr is None:
                m_prev, m_curr, j = moment(seed), moment(seed + 1), seed + 1
            while j < m:
                m_prev, m_curr = m_curr, ((j - alpha - beta) * m_curr + beta * m_prev) / j
                j += 1
            moment_m = m_curr
        term = coeff * moment_m
        total += term
        ratio = term / prev if prev else math.inf
        tail = abs(term) * ratio / (1.0 - ratio) if 0 <= ratio < 1 else math.inf
        if term == 0.0:
            tail = 0.0
        run = run + 1 if tail <= ctrl.rel_tol * abs(total) + ctrl.abs_tol else 0
        if run >= _CONSECUTIVE:
            return total, n + 1
        if n & (n - 1) == 0:
            if n >= 1024 and _projected_terms(n, term, half_term, total, ctrl) > ctrl.max_terms:
                raise ConvergenceError(f"dispersion series would need more than {ctrl.max_terms} "
                                       f"terms for {g} (algebraic decay)")
            half_term = term
        prev = term
    raise ConvergenceError(f"dispersion series did not converge in {ctrl.max_terms} terms for {g}")


def avg_rate_exact(g: GammaParams, p: FblParams, ctrl: SeriesControl = SeriesControl(),
                   quad: QuadratureSpec = DEFAULT_QUADRATURE) -> RateBreakdown:
    """Average rate from the two series (exact for a Gamma-distributed SNR).

    Falls back to :func:`avg_rate_quadrature` with a logged warning if either
    series exhausts ``ctrl.max_terms``.
    """
    _check_gamma(g)
    try:
        r1_nats, n1 = _log_series_r1(g, ctrl)
        r2_raw, n2 = _dispersion_series_r2(g, ctrl, quad)
    except ConvergenceError as exc:
        logger.warning("series evaluation failed (%s); using quadrature", exc)
        res = avg_rate_quadrature(g, p, quad)
        return RateBreakdown(res.r1, res.r2, res.avg_rate, method="quadrature-fallback")
    r1 = r1_nats * LOG2E
    r2 = r2_raw * LOG2E
    return RateBreakdown(r1, r2, r1 - p.penalty * r2, n1, n2, "series")


def dispersion_partial_sums(g: GammaParams, n_terms: int,
                            quad: QuadratureSpec = DEFAULT_QUADRATURE) -> np.ndarray:
    """First ``n_terms`` partial sums of the dispersion series, in bits.

    Every moment is a fused integral here; meant for diagnostics and plots.
    """
    _check_gamma(g)
    log_norm = g.alpha * math.log(g.beta) - math.lgamma(g.alpha)
    terms = [binom_half(n) * (-1) ** n * math.exp(
        log_fused_integral(g.alpha, -2.0 * n, g.beta, quad) + log_norm) if n else 1.0
        for n in range(n_terms)]
    return np.cumsum(terms) * LOG2E


def avg_rate_lower_bound(g: GammaParams, p: FblParams) -> RateBreakdown:
    """Closed-form approximate lower bound on the average rate.

    ``r1 >= log2(1 + alpha^2 / (beta (alpha+1)))`` and
    ``r2 <= (2 - beta + beta (alpha+beta-1) exp(beta) E_alpha(beta)) / (2 ln 2)``.
    """
    _check_gamma(g)
    alpha, beta = g.alpha, g.beta
    r1 = math.log1p(alpha * alpha / (beta * (alpha + 1.0))) * LOG2E
    scaled = exp_integral_scaled(alpha, beta)
    r2 = (2.0 - beta + beta * (alpha + beta - 1.0) * scaled) / (2.0 * LN2)
    return RateBreakdown(r1, r2, r1 - p.penalty * r2, method="closed-form")


def _gamma_windows(g: GammaParams):
    """Integration range covering all but ~1e-20 of the Gamma mass, plus breakpoints."""
    alpha, beta = g.alpha, g.beta
    lo = special.gammaincinv(alpha, 1e-20) / beta if alpha > 1 else 0.0
    hi = special.gammainccinv(alpha, 1e-20) / beta
    mean, sd = alpha / beta, math.sqrt(alpha) / beta
    pts = {mean + j * sd for j in (-8, -4, -2, -1, 0, 1, 2, 4, 8)}
    pts |= {x for x in np.geomspace(max(lo, 1e-12 * hi), hi, 24)}
    return lo, hi, sorted(x for x in pts if lo < x < hi)


def gamma_expectation(func, g: GammaParams, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """``E[func(gamma)]`` for ``gamma ~ Gamma(alpha, beta)`` by adaptive quadrature."""
    alpha, beta = g.alpha, g.beta
    log_norm = alpha * math.log(beta) - math.lgamma(alpha)
    lo, hi, pts = _gamma_windows(g)
    edges = [lo] + pts + [hi]
    total = 0.0
    err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if a == 0.0 and alpha < 1.0:
            value, e = integrate.quad(lambda u: func(u) * math.exp(log_norm - beta * u), a, b,
                                      weight="alg", wvar=(alpha - 1.0, 0.0),
                                      epsabs=0.0, epsrel=spec.quad_rel_tol, limit=spec.max_subdivisions)
        else:
            value, e = integrate.quad(
                lambda u: func(u) * math.exp(log_norm + (alpha - 1.0) * math.log(u) - beta * u) if u > 0 else
                (func(u) * math.exp(log_norm) if alpha == 1.0 else 0.0),
                a, b, epsabs=0.0, epsrel=spec.quad_rel_tol, limit=spec.max_subdivisions)
        total += value
        err += e
    if err > 1e3 * spec.rel_tol * abs(total) + 1e-300:
        raise ConvergenceError(f"quadrature did not converge for {g} (err {err:g})")
    return total


def avg_rate_quadrature(g: GammaParams, p: FblParams,
                        spec: QuadratureSpec = DEFAULT_QUADRATURE) -> RateBreakdown:
    """Average rate by direct quadrature of both expectations."""
    _check_gamma(g)
    r1 = gamma_expectation(lambda u: math.log1p(u) * LOG2E, g, spec)
    r2 = gamma_expectation(lambda u: math.sqrt(u * (2.0 + u)) / (1.0 + u) * LOG2E, g, spec)
    return RateBreakdown(r1, r2, r1 - p.penalty * r2, method="quadrature")
