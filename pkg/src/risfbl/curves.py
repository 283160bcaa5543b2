"""Curve pipelines: SNR CDFs, rate versus element count, rate versus RIS position.

Each pipeline returns a :class:`CurveOutput`, a rectangular table that
serializes to CSV with a header row, ``%.17g`` numbers and trailing ``#``
metadata lines (scenario hash, seed, tool version, units).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import ConfigError, ScenarioConfig
from .montecarlo import (PERFECT, EmpiricalCdf, matched_gamma, mode_label, parse_phase_mode,
                         simulate_snr)
from .rate import avg_rate_exact, avg_rate_lower_bound, fbl_rate
from .snrstats import gamma_cdf

DEFAULT_N_LIST = (16, 64, 256, 1024, 4096)
DEFAULT_D_GRID = tuple(range(5, 96, 5))
DEFAULT_CDF_MODES = (PERFECT, 1, 2, 3)
DEFAULT_RATE_MODES = (PERFECT, 1, 2, 3)


@dataclass
class CurveOutput:
    columns: list
    units: list
    rows: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("column names must be unique")
        if len(self.units) != len(self.columns) or self.rows.shape[1] != len(self.columns):
            raise ValueError("columns, units and row width must agree")

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(format(float(v), ".17g") for v in row) + "\n")
        buf.write("# units: " + ",".join(self.units) + "\n")
        for key in sorted(self.metadata):
            buf.write(f"# {key}: {self.metadata[key]}\n")
        return buf.getvalue()

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv())


def _meta(sc: ScenarioConfig, command: str, *args) -> dict:
    return {
        "command": command,
        "scenario_hash": sc.digest(command, *args),
        "seed": sc.seed,
        "samples": sc.samples,
        "tool_version": __version__,
    }


def _modes(modes):
    out = [parse_phase_mode(m) for m in modes]
    if not out:
        raise ConfigError("at least one phase mode is required")
    return out


def snr_cdf(sc: ScenarioConfig, modes=DEFAULT_CDF_MODES, points: int = 200) -> CurveOutput:
    """Empirical SNR CDF per phase mode next to the matched Gamma CDF.

    The SNR grid spans the 0.1 % to 99.9 % quantiles of all modes, in dB.
    """
    modes = _modes(modes)
    snr = simulate_snr(sc, modes, sc.samples, sc.seed, sc.workers)
    pooled = np.concatenate([v[v > 0] for v in snr.values()])
    lo, hi = np.quantile(pooled, [1e-3, 1 - 1e-3]) if pooled.size else (1e-3, 1.0)
    hi = max(hi, lo * 1.0001)
    grid_db = np.linspace(10 * np.log10(lo), 10 * np.log10(hi), points)
    grid = 10.0 ** (grid_db / 10.0)
    cols = [grid_db, gamma_cdf(matched_gamma(sc), grid)]
    names = ["snr_db", "analytic_gamma_cdf"]
    for m in modes:
        cols.append(EmpiricalCdf.from_samples(snr[m])(grid))
        names.append(f"empirical_cdf_{mode_label(m)}")
    units = ["dB"] + ["probability"] * (len(names) - 1)
    return CurveOutput(names, units, np.column_stack(cols),
                       _meta(sc, "snr-cdf", [mode_label(m) for m in modes], points))


def _rate_row(sc: ScenarioConfig, modes):
    g = matched_gamma(sc)
    exact = avg_rate_exact(g, sc.fbl)
    lb = avg_rate_lower_bound(g, sc.fbl)
    snr = simulate_snr(sc, modes, sc.samples, sc.seed, sc.workers)
    mc = [float(np.mean(fbl_rate(snr[m], sc.fbl))) for m in modes]
    row = [exact.avg_rate, lb.avg_rate, exact.r1, *mc, exact.r1 - exact.avg_rate,
           exact.terms_r1, exact.terms_r2]
    names = ["avg_rate_exact", "avg_rate_lb", "shannon_r1",
             *[f"mc_rate_{mode_label(m)}" for m in modes], "fbl_gap", "terms_r1", "terms_r2"]
    units = ["bpcu"] * (len(names) - 2) + ["count", "count"]
    return row, names, units


def rate_vs_n(sc: ScenarioConfig, n_list=DEFAULT_N_LIST, modes=DEFAULT_RATE_MODES) -> CurveOutput:
    """Exact, lower-bound, ergodic (Gamma-matched) and simulated rates against ``N``.

    ``terms_r1``/``terms_r2`` are 0 where the series fell back to quadrature.
    """
    n_list = [int(n) for n in n_list]
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])) or n_list[0] < 1:
        raise ConfigError("n_list must be non-empty, positive and strictly ascending")
    modes = _modes(modes)
    rows = []
    for n in n_list:
        row, names, units = _rate_row(sc.replace(n_elements=n), modes)
        rows.append([n, *row])
    return CurveOutput(["N", *names], ["count", *units], rows,
                       _meta(sc, "rate-vs-n", n_list, [mode_label(m) for m in modes]))


def rate_vs_d(sc: ScenarioConfig, d_grid=DEFAULT_D_GRID, modes=(PERFECT, 2),
              n_elements: int = 4096) -> CurveOutput:
    """Rates against the RIS position ``d`` with the direct link present and blocked."""
    d_grid = [float(d) for d in d_grid]
    if not d_grid or min(d_grid) < 5 or max(d_grid) > 95:
        raise ConfigError("d grid must be non-empty and inside [5, 95]")
    modes = _modes(modes)
    base = sc.replace(n_elements=int(n_elements))
    rows, columns, units = [], ["d"], ["m"]
    for i, d in enumerate(d_grid):
        row = [d]
        for variant, direct in (("direct", True), ("blocked", False)):
            vals, names, u = _rate_row(base.replace(direct_link=direct).with_ris_at(d), modes)
            row += vals
            if i == 0:
                columns += [f"{variant}_{n}" for n in names]
                units += u
        rows.append(row)
    return CurveOutput(columns, units, rows,
                       _meta(base, "rate-vs-d", d_grid, [mode_label(m) for m in modes]))
