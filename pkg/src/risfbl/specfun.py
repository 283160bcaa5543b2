"""Real-argument special functions used by the rate formulas.

Everything here works on plain floats. The incomplete gamma / exponential
integral pair is implemented from scratch because the rate lower bound needs
``E_nu`` at non-integer order, and scipy only covers integer order and
positive ``a`` for the regularized incomplete gamma.

Routing for ``Gamma(a, z)`` (equivalently ``E_nu(z) = z**(nu-1) Gamma(1-nu, z)``):

* ``a > 1/2``: lower series subtracted from ``Gamma(a)`` when ``z < a + 1``,
  Legendre continued fraction otherwise.
* ``a <= 1/2``: continued fraction for ``z >= 1`` (or large order); for small
  ``z`` a cancellation-free power series at the base order in ``[1/2, 3/2)``
  followed by the upward recurrence ``E_{nu+1} = (exp(-z) - z E_nu) / nu``,
  which is stable while ``z < nu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

EULER_GAMMA = 0.57721566490153286061
_FPMIN = 1e-300
_LOG_MAX = math.log(np.finfo(float).max)
_EPS = np.finfo(float).eps

# zeta(k) for the Taylor series of ln Gamma(1 + a) around a = 0
_ZETA = special.zeta(np.arange(2, 80, dtype=float), 1.0)


class ConvergenceError(RuntimeError):
    """A series, continued fraction or quadrature hit its iteration cap."""


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for the infinite sums of the exact average rate.

    ``rel_tol`` bounds the estimated tail of the sum relative to the partial
    sum, ``abs_tol`` is an absolute floor and ``max_terms`` caps the number of
    terms before the caller gives up.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 0.0
    max_terms: int = 4_000_000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if not self.abs_tol >= 0:
            raise ValueError("abs_tol must be non-negative")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


@dataclass(frozen=True)
class QuadratureSpec:
    """Adaptive quadrature settings for integrals over ``[0, inf)``.

    The infinite range is cut where the log-integrand has dropped
    ``tail_log_drop`` below its peak (``exp(-50)`` ~ 2e-22 by default).
    """

    rel_tol: float = 1e-10
    max_subdivisions: int = 200
    tail_log_drop: float = 50.0

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if not self.tail_log_drop > 0:
            raise ValueError("tail_log_drop must be positive")

    @property
    def quad_rel_tol(self) -> float:
        """``rel_tol`` raised to the floor QUADPACK accepts (50 machine epsilons).

        Likewise the subdivision cap is applied as at least 2, the minimum of
        the weighted rule.
        """
        return max(self.rel_tol, 50.0 * _EPS)


DEFAULT_QUADRATURE = QuadratureSpec()


def _check_finite(name, value):
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    x = float(x)
    _check_finite("x", x)
    if x <= 0:
        raise ValueError(f"ln_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def _lgamma1p(a: float) -> float:
    """ln Gamma(1 + a) for |a| <= 1/2 without the cancellation of lgamma(1 + a)."""
    total = -EULER_GAMMA * a
    power = -a
    for k, zeta in enumerate(_ZETA, start=2):
        power *= -a
        term = zeta * power / k
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
    return total


def _gamma1pm1_over_a(a: float) -> float:
    """(Gamma(1 + a) - 1) / a, continuous at a = 0."""
    if a == 0.0:
        return -EULER_GAMMA
    return math.expm1(_lgamma1p(a)) / a


def _expm1_over(x: float, a: float) -> float:
    """expm1(a * x) / a, continuous at a = 0."""
    if a == 0.0:
        return x
    return math.expm1(a * x) / a


def _gamma_cf(a: float, z: float, max_iter: int = 100_000) -> float:
    """Continued fraction h with Gamma(a, z) = exp(-z) z**a h (modified Lentz).

    With ``a = 1 - nu`` the same fraction equals ``exp(z) E_nu(z)``.
    """
    b = z + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b if b != 0 else 1.0 / _FPMIN
    h = d
    for i in range(1, max_iter + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise ConvergenceError(f"incomplete gamma continued fraction stalled (a={a}, z={z})")


def _log_lower_gamma_series(a: float, z: float, max_iter: int = 100_000) -> float:
    """ln of the lower incomplete gamma gamma(a, z) for a > 0 via its power series."""
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(max_iter):
        ap += 1.0
        term *= z / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            return a * math.log(z) - z + math.log(total)
    raise ConvergenceError(f"lower incomplete gamma series stalled (a={a}, z={z})")


def _expint_base(nu: float, z: float) -> float:
    """E_nu(z) for nu in [1/2, 3/2) and small z, free of the pole at nu = 1."""
    a = 1.0 - nu  # in (-1/2, 1/2]
    lnz = math.log(z)
    # z**-a Gamma(a) - 1/a, written so that a -> 0 gives -gamma - ln z
    head = math.exp(_lgamma1p(a)) * _expm1_over(-lnz, a) + _gamma1pm1_over_a(a)
    total = 0.0
    term = 1.0
    for k in range(1, 500):
        term *= -z / k
        contrib = term / (a + k)
        total += contrib
        if abs(contrib) <= 1e-17 * abs(head - total):
            break
    return head - total


def _log_exp_integral_scaled(nu: float, z: float) -> float:
    """ln(exp(z) E_nu(z)) for nu >= 1/2, z > 0."""
    if z >= 1.0 or nu >= 20.0:
        return math.log(_gamma_cf(1.0 - nu, z))
    shift = math.floor(nu - 0.5)
    order = nu - shift
    scaled = math.exp(z) * _expint_base(order, z)
    for _ in range(int(shift)):
        scaled = (1.0 - z * scaled) / order
        order += 1.0
    return math.log(scaled)


def _log_upper_gamma(a: float, z: float) -> float:
    """ln Gamma(a, z) for real a and z > 0."""
    if a <= 0.5:
        return a * math.log(z) - z + _log_exp_integral_scaled(1.0 - a, z)
    if z < a + 1.0:
        lg = math.lgamma(a)
        ratio = _log_lower_gamma_series(a, z) - lg
        return lg + math.log(-math.expm1(ratio))
    return -z + a * math.log(z) + math.log(_gamma_cf(a, z))


def _check_z(z):
    z = float(z)
    _check_finite("z", z)
    if z <= 0:
        raise ValueError(f"z must be positive, got {z!r}")
    return z


def upper_incomplete_gamma(a: float, z: float) -> float:
    """Upper incomplete gamma ``Gamma(a, z) = int_z^inf t**(a-1) exp(-t) dt``.

    ``a`` may be any finite real (zero and negative included); ``z > 0``.
    Raises ``OverflowError`` if the value does not fit in a double.
    """
    a = float(a)
    _check_finite("a", a)
    z = _check_z(z)
    log_value = _log_upper_gamma(a, z)
    if log_value > _LOG_MAX:
        raise OverflowError(f"Gamma({a}, {z}) overflows")
    return math.exp(log_value)


def exp_integral_scaled(nu: float, z: float) -> float:
    """``exp(z) * E_nu(z)``, finite even where ``E_nu(z)`` underflows."""
    nu = float(nu)
    _check_finite("nu", nu)
    z = _check_z(z)
    if nu >= 0.5:
        log_value = _log_exp_integral_scaled(nu, z)
    else:
        log_value = z + (nu - 1.0) * math.log(z) + _log_upper_gamma(1.0 - nu, z)
    if log_value > _LOG_MAX:
        raise OverflowError(f"exp(z) E_{nu}({z}) overflows")
    return math.exp(log_value)


def exp_integral(nu: float, z: float) -> float:
    """Generalized exponential integral ``E_nu(z) = int_1^inf exp(-z t) t**-nu dt``."""
    nu = float(nu)
    _check_finite("nu", nu)
    z = _check_z(z)
    if nu >= 0.5:
        log_value = _log_exp_integral_scaled(nu, z) - z
    else:
        log_value = (nu - 1.0) * math.log(z) + _log_upper_gamma(1.0 - nu, z)
    if log_value > _LOG_MAX:
        raise OverflowError(f"E_{nu}({z}) overflows")
    return math.exp(log_value)


def _fused_mode(p, q, z):
    """Maximizer of (p-1) ln u + q ln(1+u) - z u on u >= 0."""
    # stationary points solve z u^2 - B u - (p - 1) = 0
    B = p - 1.0 + q - z
    disc = B * B + 4.0 * z * (p - 1.0)
    if disc < 0:
        return 0.0
    root = math.sqrt(disc)
    if B >= 0:
        u = (B + root) / (2.0 * z)
    else:
        u = 2.0 * (p - 1.0) / (root - B) if root - B > 0 else 0.0
    return max(u, 0.0)


def log_fused_integral(p: float, q: float, z: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """ln of ``int_0^inf u**(p-1) (1+u)**q exp(-z u) du`` for ``p > 0, z > 0``.

    This is ``Gamma(p) U(p, p + q + 1, z)``. Working with the log and the
    integrand rescaled by its peak keeps the result finite for large ``p``
    where ``Gamma(p)`` alone would overflow.
    """
    p, q = float(p), float(q)
    _check_finite("p", p)
    _check_finite("q", q)
    z = _check_z(z)
    if p <= 0:
        raise ValueError(f"fused integral requires p > 0, got {p!r}")

    singular = p < 1.0
    if singular:
        # u**(p-1) is left to the algebraic weight; peak of the smooth part only
        def phi(u):
            return q * math.log1p(u) - z * u

        mode = max(q / z - 1.0, 0.0)
    else:
        def phi(u):
            return (p - 1.0) * math.log(u) + q * math.log1p(u) - z * u if u > 0 else (
                0.0 if p == 1.0 else -math.inf)

        mode = _fused_mode(p, q, z)

    peak = phi(mode)
    slope = (q / (1.0 + mode) - z) + ((p - 1.0) / mode if mode > 0 and not singular else 0.0)
    curvature = q / (1.0 + mode) ** 2 + ((p - 1.0) / mode**2 if mode > 0 and not singular else 0.0)
    if mode > 0 and curvature > 0:
        width = 1.0 / math.sqrt(curvature)
    else:
        width = 1.0 / max(abs(slope), z)
    drop = spec.tail_log_drop

    def below(u):
        return phi(u) - peak + drop

    hi = mode + width
    while below(hi) > 0:
        hi = mode + 2.0 * (hi - mode)
        if not math.isfinite(hi):
            raise ConvergenceError("could not bracket the integrand tail")
    half = mode + (hi - mode) / 2.0
    upper = optimize.brentq(below, half, hi, xtol=1e-12 * hi) if below(half) > 0 else hi

    lower = 0.0
    if not singular and p > 1.0 and mode > 0:
        tiny = mode * 1e-12
        if below(tiny) < 0:
            lower = optimize.brentq(below, tiny, mode, xtol=1e-14 * mode)

    def smooth(u):
        return math.exp(phi(u) - peak)

    # geometric breakpoints resolve both the peak and slowly decaying tails
    right = [mode + width * 4.0**j for j in range(40) if mode + width * 4.0**j < upper]
    left = [mode - width * 4.0**j for j in range(40) if mode - width * 4.0**j > lower]
    pieces = []
    if singular:
        split = right[0] if right else upper
        pieces.append(dict(func=smooth, a=0.0, b=split, weight="alg", wvar=(p - 1.0, 0.0)))
        if upper > split:
            pieces.append(dict(func=lambda u: u ** (p - 1.0) * smooth(u), a=split, b=upper,
                               points=right[1:] or None))
    else:
        if mode > lower:
            pieces.append(dict(func=smooth, a=lower, b=mode, points=left or None))
        pieces.append(dict(func=smooth, a=mode, b=upper, points=right or None))

    total = 0.0
    error = 0.0
    for piece in pieces:
        func = piece.pop("func")
        a, b = piece.pop("a"), piece.pop("b")
        points = piece.pop("points", None)
        if points:
            # QUADPACK needs more subdivisions than breakpoints
            piece["points"] = points[: max(spec.max_subdivisions, 2) - 1] or None
            if piece["points"] is None:
                piece.pop("points")
        value, abserr, info = integrate.quad(
            func, a, b, epsabs=0.0, epsrel=spec.quad_rel_tol,
            limit=max(spec.max_subdivisions, 2), full_output=1, **piece)[:3]
        total += value
        error += abserr
    if not total > 0 or error > 100 * max(spec.rel_tol, 1e-14) * total:
        raise ConvergenceError(
            f"fused integral did not converge (p={p}, q={q}, z={z}, est={total}, err={error})")
    return peak + math.log(total)


def kummer_u(a: float, b: float, z: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Confluent hypergeometric function of the second kind, ``U(a, b, z)``.

    Evaluated from ``U = (1/Gamma(a)) int_0^inf (1+u)**(b-a-1) u**(a-1) exp(-z u) du``,
    so ``a > 0`` and ``z > 0`` are required.
    """
    a = float(a)
    _check_finite("a", a)
    if a <= 0:
        raise ValueError(f"kummer_u requires a > 0, got {a!r}")
    log_value = log_fused_integral(a, b - a - 1.0, z, spec) - math.lgamma(a)
    if log_value > _LOG_MAX:
        raise OverflowError(f"U({a}, {b}, {z}) overflows")
    return math.exp(log_value)


def q_function(x):
    """Gaussian tail probability ``Q(x) = P(N(0,1) > x)``. Accepts arrays."""
    result = 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(result) if np.ndim(result) == 0 else result


def inv_q(p: float) -> float:
    """Inverse of :func:`q_function` on ``(0, 1)``."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"inv_q requires 0 < p < 1, got {p!r}")
    # both branches evaluate ndtri where its argument is exact
    if p <= 0.5:
        return float(-special.ndtri(p))
    return float(special.ndtri(1.0 - p))


def binom_half(k: int) -> float:
    """Generalized binomial coefficient ``binom(1/2, k)``."""
    if isinstance(k, bool) or int(k) != k or k < 0:
        raise ValueError(f"k must be a non-negative integer, got {k!r}")
    value = 1.0
    for j in range(int(k)):
        value *= (0.5 - j) / (j + 1)
    return value


def binom_half_array(n_terms: int) -> np.ndarray:
    """``binom(1/2, k)`` for ``k = 0 .. n_terms-1``."""
    j = np.arange(max(n_terms - 1, 0), dtype=float)
    return np.concatenate(([1.0], np.cumprod((0.5 - j) / (j + 1))))[:n_terms]
