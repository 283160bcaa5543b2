"""Release acceptance: the ten criteria at their full sample sizes.

Each test prints one ``PASS``/``FAIL`` line with the measured values, even
under output capture.
"""

import json
import time

import pytest

from risfbl import cli, validation
from risfbl.config import ScenarioConfig

pytestmark = pytest.mark.slow

SC = ScenarioConfig()
SIZES = validation.Sizes()


@pytest.fixture
def report(capsys):
    def emit(number, check, extra=""):
        with capsys.disabled():
            status = "PASS" if check.passed else "FAIL"
            print(f"\n[acceptance {number:2d}] {status} {check.name}: "
                  f"{json.dumps(validation._plain(check.measured), sort_keys=True)}{extra}")
        return check.passed
    return emit


def test_01_quantizer_loss(report):
    t0 = time.perf_counter()
    check = validation.check_quantizer_loss(SC, SIZES.quantizer, SC.seed)
    elapsed = time.perf_counter() - t0
    assert report(1, check, f" ({elapsed:.1f} s)")
    assert elapsed < 60.0


def test_02_gamma_conformance(report):
    assert report(2, validation.check_gamma_conformance(SC, SIZES.conformance, SC.seed + 100))


def test_03_series_vs_quadrature(report):
    from risfbl.rate import avg_rate_exact
    t0 = time.perf_counter()
    for g in validation.acceptance_grid():
        avg_rate_exact(g, validation.ACCEPTANCE_FBL)
    series_time = time.perf_counter() - t0
    check = validation.check_series_vs_quadrature(1e-6)
    check.measured = {"max_rel_dev": check.measured["max_rel_dev"]}
    assert report(3, check, f" (series {series_time:.1f} s)")
    assert series_time < 10.0


def test_04_lower_bound(report):
    assert report(4, validation.check_lower_bound())


def test_05_gap_saturation(report):
    assert report(5, validation.check_gap_saturation(SC))


def test_06_rate_vs_location(report):
    assert report(6, validation.check_rate_vs_location(SC, SIZES.location, SC.seed + 200))


def test_07_mc_vs_analytic(report):
    assert report(7, validation.check_mc_vs_analytic(SC, SIZES.rate_mc, SC.seed + 300))


def test_08_moments(report):
    assert report(8, validation.check_moments(SIZES.moments, SC.seed + 400))


def test_09_special_functions(report):
    assert report(9, validation.check_special_functions(SC.seed + 500))


def test_10_determinism(report, tmp_path, capsys):
    paths = []
    for workers in (1, 8):
        path = tmp_path / f"report_w{workers}.json"
        cli.main(["validate", "--samples", "2000", "--workers", str(workers), "--out", str(path)])
        paths.append(path)
    capsys.readouterr()
    same = paths[0].read_bytes() == paths[1].read_bytes()
    check = validation.Check("determinism", same,
                             {"workers": [1, 8], "bytes": [p.stat().st_size for p in paths],
                              "identical": same})
    assert report(10, check)
