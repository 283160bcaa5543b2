"""Geometry, link budget, channel sampling and RIS phase control.

Random numbers come from a counter-based Philox stream keyed by
``(seed, block)`` and are turned into complex Gaussians with Box-Muller.
A draw depends only on the key and its position in the stream, which gives
the same bits on every platform and for every worker layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Geometry:
    """2D positions in meters of the access point, the RIS centre and the receiver."""

    ap_pos: tuple = (0.0, 0.0)
    ac_pos: tuple = (100.0, 0.0)
    ris_pos: tuple = (50.0, 10.0)

    def __post_init__(self):
        pts = [np.asarray(p, dtype=float) for p in (self.ap_pos, self.ac_pos, self.ris_pos)]
        if any(p.shape != (2,) or not np.all(np.isfinite(p)) for p in pts):
            raise ValueError("positions must be finite 2D coordinates")
        if min(self.d_direct, self.d_ap_ris, self.d_ris_ac) <= 0:
            raise ValueError("all pairwise distances must be positive")

    @property
    def d_direct(self) -> float:
        return math.dist(self.ap_pos, self.ac_pos)

    @property
    def d_ap_ris(self) -> float:
        return math.dist(self.ap_pos, self.ris_pos)

    @property
    def d_ris_ac(self) -> float:
        return math.dist(self.ris_pos, self.ac_pos)

    @classmethod
    def along_x(cls, d: float, ris_height: float = 10.0, span: float = 100.0) -> "Geometry":
        """AP at the origin, receiver at ``(span, 0)``, RIS at ``(d, ris_height)``."""
        return cls((0.0, 0.0), (float(span), 0.0), (float(d), float(ris_height)))


@dataclass(frozen=True)
class LinkBudget:
    """Transmit power [W], noise density [W/Hz], bandwidth [Hz], linear noise figure."""

    tx_power: float
    noise_density: float
    bandwidth: float
    noise_figure: float = 1.0

    def __post_init__(self):
        if not all(v > 0 and math.isfinite(v) for v in
                   (self.tx_power, self.noise_density, self.bandwidth, self.noise_figure)):
            raise ValueError(f"link budget entries must be positive and finite: {self}")
        if self.noise_figure < 1.0:
            raise ValueError("noise figure must be >= 1 (linear)")

    @property
    def rho(self) -> float:
        """Transmit SNR ``p / (N0 W NF)``."""
        return self.tx_power / (self.noise_density * self.bandwidth * self.noise_figure)

    @classmethod
    def from_db(cls, tx_power_mw=200.0, noise_density_dbm_hz=-174.0, bandwidth_hz=200e3,
                noise_figure_db=0.0) -> "LinkBudget":
        return cls(tx_power=tx_power_mw * 1e-3,
                   noise_density=10.0 ** (noise_density_dbm_hz / 10.0) * 1e-3,
                   bandwidth=float(bandwidth_hz),
                   noise_figure=10.0 ** (noise_figure_db / 10.0))


@dataclass(frozen=True)
class LinkGains:
    """Mean power gains: direct path, AP to each element, each element to receiver.

    ``varsigma == 0`` encodes a blocked direct link.
    """

    varsigma: float
    varrho: float
    vartheta: float

    def __post_init__(self):
        if not all(v >= 0 and math.isfinite(v) for v in (self.varsigma, self.varrho, self.vartheta)):
            raise ValueError(f"power gains must be finite and non-negative: {self}")


@dataclass(frozen=True)
class RisConfig:
    """Element count, phase resolution (``None`` for continuous phases) and common amplitude."""

    n_elements: int
    quant_bits: int | None = None
    amplitude: float = 1.0

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 1:
            raise ValueError("n_elements must be a positive integer")
        if self.quant_bits is not None and (int(self.quant_bits) != self.quant_bits or self.quant_bits < 1):
            raise ValueError("quant_bits must be a positive integer or None")
        if not 0.0 <= self.amplitude <= 1.0:
            raise ValueError("amplitude must lie in [0, 1]")


@dataclass(frozen=True)
class ChannelRealization:
    """Direct coefficient and the two per-element channel vectors.

    Leading axes index independent draws; the last axis of the vectors is
    the element index.
    """

    h_direct: np.ndarray
    h_ap_ris: np.ndarray
    h_ris_ac: np.ndarray = field(repr=False)

    def __post_init__(self):
        if np.shape(self.h_ap_ris) != np.shape(self.h_ris_ac):
            raise ValueError("element channel vectors must have the same shape")
        if np.shape(self.h_direct) != np.shape(self.h_ap_ris)[:-1]:
            raise ValueError("direct channel must match the leading axes of the vectors")

    @property
    def n_elements(self) -> int:
        return np.shape(self.h_ap_ris)[-1]


def pathloss_db(distance):
    """``34.53 + 38 log10(d)`` with ``d`` in meters."""
    d = np.asarray(distance, dtype=float)
    if np.any(~(d > 0)):
        raise ValueError("distance must be positive")
    out = 34.53 + 38.0 * np.log10(d)
    return float(out) if out.ndim == 0 else out


def link_gains(geom: Geometry, direct_link: bool = True) -> LinkGains:
    """Linear power gains from the pathloss model; the RIS centre stands in for every element."""

    def lin(d):
        return 10.0 ** (-pathloss_db(d) / 10.0)

    return LinkGains(
        varsigma=lin(geom.d_direct) if direct_link else 0.0,
        varrho=lin(geom.d_ap_ris),
        vartheta=lin(geom.d_ris_ac),
    )


# counter lanes: each array of a draw has its own sub-stream, so a consumer
# can skip the parts it does not need without shifting the others
LANE_DIRECT_MAG, LANE_DIRECT_ANG = 0, 1
LANE_AP_RIS_MAG, LANE_AP_RIS_ANG = 2, 3
LANE_RIS_AC_MAG, LANE_RIS_AC_ANG = 4, 5
LANE_PHASE = 6


@dataclass(frozen=True)
class StreamKey:
    """Seeded random stream: Philox keyed by ``(seed, block)``, one counter lane per array."""

    seed: int
    block: int = 0

    def __post_init__(self):
        if not (0 <= self.seed < 2**64 and 0 <= self.block < 2**64):
            raise ValueError("seed and block must fit in an unsigned 64-bit integer")

    def bitgen(self, lane: int) -> np.random.Philox:
        return np.random.Philox(counter=np.array([0, 0, 0, lane], dtype=np.uint64),
                                key=np.array([self.seed, self.block], dtype=np.uint64))

    def uniforms(self, lane: int, size) -> np.ndarray:
        """Uniforms on ``(0, 1]``: ``1 - (w >> 11) 2**-53`` for successive raw words ``w``."""
        u = np.random.Generator(self.bitgen(lane)).random(size)
        return np.subtract(1.0, u, out=u)


def _magnitude(rng: StreamKey, lane: int, size, variance: float) -> np.ndarray:
    # Box-Muller radius scaled to CN(0, variance): |h|^2 ~ variance * Exp(1)
    return np.sqrt(-variance * np.log(rng.uniforms(lane, size)))


def _angle(rng: StreamKey, lane: int, size) -> np.ndarray:
    return TWO_PI * rng.uniforms(lane, size)


@dataclass(frozen=True)
class PolarDraw:
    """Magnitudes and angles of the draws :func:`sample_realization` makes.

    Angles lie in ``(0, 2 pi]``; they are ``None`` when not requested.
    """

    mag_direct: np.ndarray
    mag_ap_ris: np.ndarray
    mag_ris_ac: np.ndarray
    ang_direct: np.ndarray | None = None
    ang_ap_ris: np.ndarray | None = None
    ang_ris_ac: np.ndarray | None = None


def sample_polar(gains: LinkGains, n: int, rng: StreamKey, count: int,
                 angles: bool = True) -> PolarDraw:
    """Polar form of ``sample_realization(gains, n, rng, count)``.

    A zero variance returns exact zeros, so scenarios that differ only in
    their gains see the same underlying uniforms.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    lead, vec = (int(count),), (int(count), int(n))
    parts = dict(
        mag_direct=_magnitude(rng, LANE_DIRECT_MAG, lead, gains.varsigma),
        mag_ap_ris=_magnitude(rng, LANE_AP_RIS_MAG, vec, gains.varrho),
        mag_ris_ac=_magnitude(rng, LANE_RIS_AC_MAG, vec, gains.vartheta),
    )
    if angles:
        parts.update(
            ang_direct=_angle(rng, LANE_DIRECT_ANG, lead),
            ang_ap_ris=_angle(rng, LANE_AP_RIS_ANG, vec),
            ang_ris_ac=_angle(rng, LANE_RIS_AC_ANG, vec),
        )
    return PolarDraw(**parts)


def sample_realization(gains: LinkGains, n: int, rng: StreamKey,
                       count: int | None = None) -> ChannelRealization:
    """Circularly-symmetric Gaussian draw of the direct coefficient and both element vectors.

    With ``count`` set, ``count`` independent realizations are stacked along a
    leading axis.
    """
    p = sample_polar(gains, n, rng, 1 if count is None else count)
    out = ChannelRealization(
        p.mag_direct * np.exp(1j * p.ang_direct),
        p.mag_ap_ris * np.exp(1j * p.ang_ap_ris),
        p.mag_ris_ac * np.exp(1j * p.ang_ris_ac),
    )
    if count is None:
        out = ChannelRealization(out.h_direct[0], out.h_ap_ris[0], out.h_ris_ac[0])
    return out


def wrap_phase(theta):
    """Map angles to ``[-pi, pi)``."""
    return np.mod(np.asarray(theta, dtype=float) + math.pi, TWO_PI) - math.pi


def optimal_phases(real: ChannelRealization) -> np.ndarray:
    """Phases that rotate every reflected term onto the direct path (or onto zero if it is absent)."""
    cascade = np.conj(real.h_ris_ac) * real.h_ap_ris
    target = np.where(real.h_direct != 0, np.angle(real.h_direct), 0.0)[..., None]
    theta = wrap_phase(target - np.angle(cascade))
    return np.where(cascade != 0, theta, 0.0)


def quantize_phases(theta, b: int) -> np.ndarray:
    """Nearest point of ``{-pi + k delta}``, ``delta = pi / 2**(b-1)``, in wrapped distance.

    Ties go to the smaller grid value.
    """
    if int(b) != b or b < 1:
        raise ValueError("b must be a positive integer")
    levels = 2**int(b)
    delta = TWO_PI / levels
    pos = (wrap_phase(theta) + math.pi) / delta
    lower = np.floor(pos)
    frac = pos - lower
    lower = lower.astype(np.int64) % levels
    upper = (lower + 1) % levels
    # upper wraps to index 0 (-pi), the smallest value, only from the top cell
    take_upper = (frac > 0.5) | ((frac == 0.5) & (upper == 0))
    idx = np.where(take_upper, upper, lower)
    return -math.pi + idx * delta


def composite_gain(real: ChannelRealization, theta, amplitude: float = 1.0):
    """``h_d + sum_n amplitude e^{j theta_n} conj(h_ris_ac,n) h_ap_ris,n``."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != real.n_elements:
        raise ValueError("one phase per element is required")
    cascade = np.conj(real.h_ris_ac) * real.h_ap_ris
    return real.h_direct + amplitude * np.sum(np.exp(1j * theta) * cascade, axis=-1)


def instantaneous_snr(budget: LinkBudget, gain):
    """``rho |gain|^2``."""
    out = budget.rho * np.abs(np.asarray(gain)) ** 2
    return float(out) if np.ndim(out) == 0 else out

