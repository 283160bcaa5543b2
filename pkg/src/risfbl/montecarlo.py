"""Seeded Monte Carlo engine for the RIS link and its statistical comparators.

Samples are cut into fixed blocks whose size depends only on the element
count. Block ``j`` is drawn from ``Philox(key=(seed, j))``, so the output is a
pure function of ``(scenario, samples, seed)`` whatever the number of workers.

Inside a block each channel array and the random phases of the unadjusted
mode have their own counter lane. Every phase mode therefore sees the same
channel draws, which is what makes the quantizer comparisons paired.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import channel
from .config import ConfigError, ScenarioConfig
from .rate import fbl_rate
from .snrstats import GammaParams, gamma_cdf, moments_x, snr_params

PERFECT = "perfect"
UNADJUSTED = "unadjusted"

# complex entries per block; keeps a block near 16 MB of working arrays
_BLOCK_BUDGET = 2**18


def parse_phase_mode(mode):
    """``'perfect'``, ``'unadjusted'`` or a bit count (``2``, ``'2'``, ``'b2'``, ``'2-bit'``)."""
    if isinstance(mode, str):
        text = mode.strip().lower()
        if text in (PERFECT, UNADJUSTED):
            return text
        text = text.removeprefix("b").removesuffix("-bit").removesuffix("bit")
        try:
            mode = int(text)
        except ValueError:
            raise ConfigError(f"unknown phase mode {mode!r}") from None
    if isinstance(mode, (int, np.integer)) and not isinstance(mode, bool) and mode >= 1:
        return int(mode)
    raise ConfigError(f"unknown phase mode {mode!r}")


def mode_label(mode) -> str:
    mode = parse_phase_mode(mode)
    return mode if isinstance(mode, str) else f"b{mode}"


@dataclass(frozen=True)
class SimConfig:
    scenario: ScenarioConfig
    samples: int
    seed: int
    workers: int = 1
    phase_mode: object = PERFECT

    def __post_init__(self):
        if self.samples < 1 or self.workers < 1:
            raise ConfigError("samples and workers must be positive")
        object.__setattr__(self, "phase_mode", parse_phase_mode(self.phase_mode))

    @classmethod
    def from_scenario(cls, sc: ScenarioConfig, phase_mode=None, **overrides) -> "SimConfig":
        """Take samples, seed and workers from the scenario; phase mode defaults to its quantizer."""
        if phase_mode is None:
            phase_mode = PERFECT if sc.quant_bits is None else sc.quant_bits
        args = dict(samples=sc.samples, seed=sc.seed, workers=sc.workers)
        args.update(overrides)
        return cls(sc, phase_mode=phase_mode, **args)


@dataclass(frozen=True)
class EmpiricalCdf:
    sorted_values: np.ndarray = field(repr=False)
    count: int

    def __post_init__(self):
        if len(self.sorted_values) != self.count:
            raise ValueError("count must equal the number of samples")

    @classmethod
    def from_samples(cls, samples) -> "EmpiricalCdf":
        values = np.sort(np.asarray(samples, dtype=float).ravel())
        return cls(values, values.size)

    def __call__(self, x):
        """Fraction of samples ``<= x``."""
        return np.searchsorted(self.sorted_values, x, side="right") / self.count

    def quantile(self, q):
        return np.quantile(self.sorted_values, q)


@dataclass(frozen=True)
class SimSummary:
    mean_snr: float
    var_snr: float
    mean_rate_unclamped: float
    mean_rate_clamped: float
    std_error_rate: float
    ks_vs_gamma: float


def block_size(n_elements: int) -> int:
    return max(1, _BLOCK_BUDGET // int(n_elements))


def _block_gain(gains, n, amplitude, modes, seed: int, block: int, count: int):
    """``|composite gain|^2`` of one block for every requested mode (shared channel draws)."""
    rng = channel.StreamKey(seed, block)
    need_angles = any(m != PERFECT for m in modes)
    draw = channel.sample_polar(gains, n, rng, count, angles=need_angles)
    cascade_mag = draw.mag_ap_ris * draw.mag_ris_ac
    if need_angles:
        # angle of conj(h_ris_ac) h_ap_ris
        cascade_ang = draw.ang_ap_ris - draw.ang_ris_ac
        target = np.where(draw.mag_direct > 0, draw.ang_direct, 0.0)[:, None]
        optimal = channel.wrap_phase(target - cascade_ang)
    out = {}
    for mode in modes:
        if mode == PERFECT:
            # every reflected term lands exactly on the direct phase
            out[mode] = (draw.mag_direct + amplitude * cascade_mag.sum(axis=1)) ** 2
            continue
        if mode == UNADJUSTED:
            theta = channel.TWO_PI * rng.uniforms(channel.LANE_PHASE, (count, n)) - math.pi
        else:
            theta = channel.quantize_phases(optimal, mode)
        # residual rotation of each term relative to the direct path
        err = theta + cascade_ang - target
        re = draw.mag_direct + amplitude * np.sum(cascade_mag * np.cos(err), axis=1)
        im = amplitude * np.sum(cascade_mag * np.sin(err), axis=1)
        out[mode] = re * re + im * im
    return out


def _run_blocks(args):
    gains, n, amplitude, modes, seed, blocks, bsize, total = args
    return [_block_gain(gains, n, amplitude, modes, seed, b, min(bsize, total - b * bsize))
            for b in blocks]


def simulate_gain(gains: channel.LinkGains, n: int, modes, samples: int, seed: int,
                  amplitude: float = 1.0, workers: int = 1):
    """Paired samples of the power gain ``X``: ``{mode: array}`` from one set of channel draws.

    Adding or removing a mode leaves the other arrays unchanged.
    """
    modes = [parse_phase_mode(m) for m in modes]
    order = sorted(set(modes), key=str)
    bsize = block_size(n)
    n_blocks = -(-int(samples) // bsize)
    job = (gains, int(n), float(amplitude), order, int(seed))
    if workers <= 1 or n_blocks == 1:
        parts = _run_blocks(job + (range(n_blocks), bsize, samples))
    else:
        chunks = np.array_split(np.arange(n_blocks), min(workers, n_blocks))
        jobs = [job + ([int(b) for b in c], bsize, samples) for c in chunks]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = [r for chunk in pool.map(_run_blocks, jobs) for r in chunk]
    return {m: np.concatenate([p[m] for p in parts]) for m in modes}


def simulate_snr(scenario: ScenarioConfig, modes, samples: int, seed: int, workers: int = 1):
    """Paired SNR samples ``rho X`` for the scenario: ``{mode: array}``."""
    x = simulate_gain(scenario.gains, scenario.n_elements, modes, samples, seed,
                      scenario.amplitude, workers)
    rho = scenario.budget.rho
    return {m: rho * v for m, v in x.items()}


def matched_gamma(scenario: ScenarioConfig) -> GammaParams:
    """Gamma law of the SNR under perfect phases for this scenario."""
    return snr_params(moments_x(scenario.gains, scenario.n_elements), scenario.budget.rho)


def ks_distance(emp: EmpiricalCdf, g: GammaParams) -> float:
    """Two-sided sup distance between the empirical CDF and the Gamma CDF."""
    if emp.count < 10:
        raise ValueError(f"need at least 10 samples for a KS distance, got {emp.count}")
    f = gamma_cdf(g, emp.sorted_values)
    i = np.arange(1, emp.count + 1)
    return float(max(np.max(i / emp.count - f), np.max(f - (i - 1) / emp.count)))


def summarize(snr, scenario: ScenarioConfig, g: GammaParams | None = None):
    snr = np.asarray(snr, dtype=float)
    rates = fbl_rate(snr, scenario.fbl)
    emp = EmpiricalCdf.from_samples(snr)
    ks = ks_distance(emp, g or matched_gamma(scenario)) if emp.count >= 10 else math.nan
    n = snr.size
    summary = SimSummary(
        mean_snr=float(np.mean(snr)),
        var_snr=float(np.var(snr, ddof=1)) if n > 1 else 0.0,
        mean_rate_unclamped=float(np.mean(rates)),
        mean_rate_clamped=float(np.mean(np.maximum(rates, 0.0))),
        std_error_rate=float(np.std(rates, ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
        ks_vs_gamma=ks,
    )
    return emp, summary


def run_simulation(cfg: SimConfig):
    """Draw ``cfg.samples`` realizations and return ``(EmpiricalCdf, SimSummary)``."""
    snr = simulate_snr(cfg.scenario, [cfg.phase_mode], cfg.samples, cfg.seed, cfg.workers)
    return summarize(snr[cfg.phase_mode], cfg.scenario)


def empirical_quantization_loss(cfg_pair) -> float:
    """``10 log10(mean_snr_b / mean_snr_ref)`` [dB] from one paired draw.

    ``cfg_pair`` is ``(quantized, reference)``; the two must differ only in
    phase mode.
    """
    quant, ref = cfg_pair
    if (quant.scenario, quant.samples, quant.seed) != (ref.scenario, ref.samples, ref.seed):
        raise ConfigError("paired configs may differ only in phase mode")
    snr = simulate_snr(quant.scenario, [quant.phase_mode, ref.phase_mode], quant.samples,
                       quant.seed, quant.workers)
    return 10.0 * math.log10(np.mean(snr[quant.phase_mode]) / np.mean(snr[ref.phase_mode]))


def sinc_loss_db(bits: int) -> float:
    """Large-N mean SNR loss of uniform phase error on ``[-delta/2, delta/2]``."""
    half = math.pi / 2**bits
    return 20.0 * math.log10(math.sin(half) / half)


def ks_critical(n: int, alpha: float = 0.05) -> float:
    """Asymptotic KS critical value ``sqrt(-log(alpha/2)/2) / sqrt(n)``."""
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)


def gamma_inverse_sample(g: GammaParams, u) -> np.ndarray:
    """Inverse-CDF draw from the Gamma law (used as a KS calibration source)."""
    return special.gammaincinv(g.alpha, np.asarray(u, dtype=float)) / g.beta
