"""Release checks: each returns a :class:`Check` with the measured values.

The report is a pure function of ``(scenario, seed, sample sizes)``: no
timings, worker counts or paths go into it, so two runs with the same seed
produce byte-identical output.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .channel import LinkGains
from .config import ScenarioConfig
from .montecarlo import (EmpiricalCdf, ks_distance, matched_gamma, simulate_gain,
                         simulate_snr)
from .rate import (LOG2E, FblParams, avg_rate_exact, avg_rate_lower_bound,
                   avg_rate_quadrature, fbl_rate)
from .snrstats import GammaParams, moments_x
from .specfun import (exp_integral, inv_q, kummer_u, q_function, upper_incomplete_gamma)


@dataclass
class Check:
    name: str
    passed: bool
    measured: dict
    limits: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Sizes:
    """Sample counts; the defaults are the release sizes."""

    quantizer: int = 100_000
    conformance: int = 100_000
    rate_mc: int = 100_000
    moments: int = 1_000_000
    location: int = 10_000

    @classmethod
    def uniform(cls, samples: int) -> "Sizes":
        return cls(samples, samples, samples, samples, samples)


def acceptance_grid():
    """5x5 (alpha, beta): alpha in [1, 20], mean SNR alpha/beta in [0, 40] dB."""
    return [GammaParams(a, a / 10 ** (db / 10))
            for a in np.linspace(1, 20, 5) for db in np.linspace(0, 40, 5)]


ACCEPTANCE_FBL = FblParams(100, 80, 1e-9)


def check_quantizer_loss(sc: ScenarioConfig, samples: int, seed: int) -> Check:
    """Paired mean-SNR loss of 1/2/3-bit phases against perfect phases (blocked direct link)."""
    base = sc.replace(direct_link=False, n_elements=1024)
    snr = simulate_snr(base, ["perfect", 1, 2, 3], samples, seed, sc.workers)
    ref = float(np.mean(snr["perfect"]))
    loss = {f"b{b}": 10 * math.log10(float(np.mean(snr[b])) / ref) for b in (1, 2, 3)}
    targets = {"b1": -3.9, "b2": -0.9, "b3": 0.0}
    ok = all(abs(loss[k] - targets[k]) <= 0.3 for k in targets)
    return Check("quantizer_loss", ok, loss, {"target_db": targets, "tol_db": 0.3})


def check_gamma_conformance(sc: ScenarioConfig, samples: int, seed: int,
                            tamper_alpha: float = 1.0) -> Check:
    """KS distance of perfect-phase SNR samples to the matched Gamma law."""
    measured = {}
    for i, n in enumerate((256, 1024, 4096)):
        c = sc.replace(direct_link=False, n_elements=n)
        g = matched_gamma(c)
        g = GammaParams(g.alpha * tamper_alpha, g.beta * tamper_alpha)
        snr = simulate_snr(c, ["perfect"], samples, seed + i, sc.workers)["perfect"]
        measured[f"N{n}"] = ks_distance(EmpiricalCdf.from_samples(snr), g)
    return Check("gamma_conformance", max(measured.values()) <= 0.02, measured, {"ks_max": 0.02})


def check_series_vs_quadrature(tol: float = 1e-6) -> Check:
    worst = 0.0
    terms = []
    for g in acceptance_grid():
        e = avg_rate_exact(g, ACCEPTANCE_FBL)
        q = avg_rate_quadrature(g, ACCEPTANCE_FBL)
        for a, b in ((e.r1, q.r1), (e.r2, q.r2), (e.avg_rate, q.avg_rate)):
            worst = max(worst, abs(a - b) / abs(b))
        terms.append([e.terms_r1, e.terms_r2])
    return Check("series_vs_quadrature", worst <= tol,
                 {"max_rel_dev": worst, "terms_r1_r2": terms}, {"rel_tol": tol})


def check_lower_bound() -> Check:
    margins = [avg_rate_exact(g, ACCEPTANCE_FBL).avg_rate - avg_rate_lower_bound(g, ACCEPTANCE_FBL).avg_rate
               for g in acceptance_grid()]
    return Check("lower_bound_ordering", min(margins) >= -1e-9,
                 {"min_margin": min(margins), "max_margin": max(margins)}, {"slack": 1e-9})


def check_gap_saturation(sc: ScenarioConfig, n_list=(16, 64, 256, 1024, 4096)) -> Check:
    base = sc.replace(direct_link=False)
    gaps = []
    for n in n_list:
        c = base.replace(n_elements=n)
        e = avg_rate_exact(matched_gamma(c), c.fbl)
        gaps.append(e.r1 - e.avg_rate)
    limit = inv_q(base.epsilon) * LOG2E / math.sqrt(base.blocklength_r)
    increasing = all(b >= a for a, b in zip(gaps, gaps[1:]))
    # flattening: the last step is well below the largest one
    steps = np.diff(gaps)
    flat = steps[-1] <= 0.25 * steps.max()
    rel = abs(gaps[-1] - limit) / limit
    return Check("fbl_gap_saturation", increasing and flat and rel <= 0.05,
                 {"n": list(n_list), "gap": gaps, "limit": limit, "rel_dev_at_max_n": rel},
                 {"rel_tol": 0.05})


def check_rate_vs_location(sc: ScenarioConfig, samples: int, seed: int) -> Check:
    """Direct link: analytic rate. Blocked link: simulated 2-bit rate. N = 4096."""
    base = sc.replace(n_elements=4096)
    direct, blocked = {}, {}
    for d in (5, 50, 95):
        c = base.replace(direct_link=True).with_ris_at(d)
        direct[d] = avg_rate_exact(matched_gamma(c), c.fbl).avg_rate
        c = base.replace(direct_link=False).with_ris_at(d)
        snr = simulate_snr(c, [2], samples, seed + d, sc.workers)[2]
        blocked[d] = float(np.mean(fbl_rate(snr, c.fbl)))
    ok = (abs(direct[50] - 9.9) <= 0.5 and all(abs(direct[d] - 11.25) <= 0.5 for d in (5, 95))
          and abs(blocked[50] - 4.0) <= 0.7 and all(abs(blocked[d] - 9.0) <= 0.7 for d in (5, 95)))
    diff_direct = [direct[d] - direct[50] for d in (5, 95)]
    diff_blocked = [blocked[d] - blocked[50] for d in (5, 95)]
    ok &= all(abs(x - 1.35) <= 0.5 for x in diff_direct)
    ok &= all(abs(x - 5.0) <= 0.5 for x in diff_blocked)
    return Check("rate_vs_location", ok,
                 {"direct": direct, "blocked_2bit": blocked,
                  "direct_rise": diff_direct, "blocked_rise": diff_blocked},
                 {"direct": "9.9+-0.5 / 11.25+-0.5", "blocked": "4+-0.7 / 9+-0.7",
                  "rise": "1.35+-0.5 / 5+-0.5"})


def check_mc_vs_analytic(sc: ScenarioConfig, samples: int, seed: int) -> Check:
    measured = {}
    ok = True
    for i, n in enumerate((256, 4096)):
        c = sc.replace(direct_link=False, n_elements=n)
        exact = avg_rate_exact(matched_gamma(c), c.fbl).avg_rate
        rates = fbl_rate(simulate_snr(c, ["perfect"], samples, seed + i, sc.workers)["perfect"], c.fbl)
        se = float(np.std(rates, ddof=1) / math.sqrt(rates.size))
        z = (float(np.mean(rates)) - exact) / se
        measured[f"N{n}"] = {"mc": float(np.mean(rates)), "exact": exact, "se": se, "z": z}
        ok &= abs(z) <= 3.0
    return Check("mc_vs_analytic_rate", ok, measured, {"max_abs_z": 3.0})


def check_moments(samples: int, seed: int, combos: int = 5, workers: int = 1) -> Check:
    """Closed-form E[X], E[X^2] against simulation for random gains and element counts."""
    pick = np.random.default_rng(seed)
    measured = []
    ok = True
    for i in range(combos):
        gains = LinkGains(*(10.0 ** pick.uniform(-1.0, 1.0, 3)))
        n = int(pick.integers(1, 65))
        x = simulate_gain(gains, n, ["perfect"], samples, seed + 1 + i, workers=workers)["perfect"]
        m = moments_x(gains, n)
        z1 = (float(np.mean(x)) - m.m1) / float(np.std(x, ddof=1) / math.sqrt(x.size))
        z2 = (float(np.mean(x * x)) - m.m2) / float(np.std(x * x, ddof=1) / math.sqrt(x.size))
        measured.append({"gains": [gains.varsigma, gains.varrho, gains.vartheta], "n": n,
                         "z_m1": z1, "z_m2": z2})
        ok &= abs(z1) <= 3.0 and abs(z2) <= 3.0
    return Check("moment_formulas", ok, {"cases": measured}, {"max_abs_z": 3.0})


def check_special_functions(seed: int, cases: int = 100) -> Check:
    pick = np.random.default_rng(seed)
    worst = {}

    def track(key, value):
        worst[key] = max(worst.get(key, 0.0), value)

    for a, z in zip(pick.uniform(0.1, 20, cases), pick.uniform(0.01, 30, cases)):
        lhs = upper_incomplete_gamma(a + 1, z)
        track("gamma_recurrence", abs(lhs - a * upper_incomplete_gamma(a, z) - z**a * math.exp(-z)) / lhs)
    for n in range(1, 30):
        for z in (0.05, 0.7, 3.0, 12.0):
            lhs = n * exp_integral(n + 1, z)
            track("expint_recurrence", abs(lhs - (math.exp(-z) - z * exp_integral(n, z))) / lhs)
    for a, z in zip(pick.uniform(0.5, 10, cases), pick.uniform(0.1, 20, cases)):
        track("kummer_reduction", abs(kummer_u(a, a + 1, z) * z**a - 1.0))
    for p in 10.0 ** pick.uniform(-12, math.log10(0.5), cases):
        track("q_roundtrip", abs(q_function(inv_q(p)) - p) / p)
    qinv = inv_q(1e-9)
    limits = {"gamma_recurrence": 1e-9, "expint_recurrence": 1e-9, "kummer_reduction": 1e-8,
              "q_roundtrip": 1e-9}
    ok = all(worst[k] <= limits[k] for k in limits) and abs(qinv - 5.9978) <= 1e-3
    return Check("special_functions", ok, {**worst, "inv_q_1e-9": qinv},
                 {**limits, "inv_q_1e-9": "5.9978+-1e-3"})


def run_all(sc: ScenarioConfig, sizes: Sizes = Sizes(), tamper_alpha: float = 1.0):
    """Every release check, in a fixed order; seeds derive from ``sc.seed``."""
    s = sc.seed
    return [
        check_quantizer_loss(sc, sizes.quantizer, s),
        check_gamma_conformance(sc, sizes.conformance, s + 100, tamper_alpha),
        check_series_vs_quadrature(),
        check_lower_bound(),
        check_gap_saturation(sc),
        check_rate_vs_location(sc, sizes.location, s + 200),
        check_mc_vs_analytic(sc, sizes.rate_mc, s + 300),
        check_moments(sizes.moments, s + 400, workers=sc.workers),
        check_special_functions(s + 500),
    ]


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def render_report(checks, sc: ScenarioConfig, sizes: Sizes) -> str:
    """JSON report with sorted keys; floats keep full round-trip precision."""
    body = {
        "tool_version": __version__,
        "seed": sc.seed,
        "scenario_hash": sc.replace(workers=1).digest("validate", asdict(sizes)),
        "sizes": asdict(sizes),
        "passed": all(c.passed for c in checks),
        "checks": [_plain(asdict(c)) for c in checks],
    }
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def summary_lines(checks):
    return [f"{'PASS' if c.passed else 'FAIL'}  {c.name}" for c in checks]
